use crate::control::Reference;
use crate::rigidmotion::{
    euler_xyz_from_rotation, orientation_rates, rotation_from_euler_xyz, UnitQuaternion, GIMBAL_MARGIN,
};
use crate::{Error, Result, Vec3, Vec6};
use core::f64::consts::{FRAC_PI_2, PI, TAU};
#[allow(unused_imports)]
use nalgebra::ComplexField;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryKind {
    /// Each coordinate follows `a_k(1 − cos Ω_k t)`; the three orientation
    /// coordinates use `Ω + jp`, so the angular-velocity direction drifts
    /// with period `2π/p`.
    RotatingAxisSine,
    /// Rotation about the constant body axis `a_rot/‖a_rot‖` by
    /// `‖a_rot‖(1 − cos Ωt)`; positions as in the rotating kind.
    FixedAxisSine,
    /// Quintic rest-to-rest move from `start` to `start + amplitude`.
    RestToRest,
}

/// Desired object motion. Poses are `[p; XYZ Euler angles]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySpec {
    pub kind: TrajectoryKind,
    pub start: Vec6,
    pub amplitude: Vec6,
    /// Hz.
    pub base_frequency: f64,
    /// rad/s.
    pub axis_precession_rate: f64,
    /// s.
    pub duration: f64,
}

/// Sampling step used when checking bounds and continuity.
const SAMPLE_STEP: f64 = 1e-3;

impl TrajectorySpec {
    pub fn new(
        kind: TrajectoryKind,
        start: Vec6,
        amplitude: Vec6,
        base_frequency: f64,
        axis_precession_rate: f64,
        duration: f64,
    ) -> Result<Self> {
        let spec = Self { kind, start, amplitude, base_frequency, axis_precession_rate, duration };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.start.iter().chain(self.amplitude.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidConfig("trajectory start and amplitude must be finite".into()));
        }
        if !(self.duration >= 0.0) || !self.duration.is_finite() {
            return Err(Error::InvalidConfig("trajectory duration must be finite and non-negative".into()));
        }
        if self.kind != TrajectoryKind::RestToRest && !(self.base_frequency > 0.0 && self.base_frequency.is_finite()) {
            return Err(Error::InvalidConfig("base frequency must be positive".into()));
        }
        if !(self.axis_precession_rate >= 0.0) || !self.axis_precession_rate.is_finite() {
            return Err(Error::InvalidConfig("axis precession rate must be finite and non-negative".into()));
        }
        if self.kind == TrajectoryKind::RotatingAxisSine && self.axis_precession_rate == 0.0 {
            return Err(Error::InvalidConfig("rotating-axis reference needs a positive precession rate".into()));
        }
        let limit = FRAC_PI_2 - 10.0 * GIMBAL_MARGIN;
        let mut prev: Option<Vec3> = None;
        for t in self.sample_times() {
            let r = self.evaluate(t)?;
            let euler = r.x.fixed_rows::<3>(3).into_owned();
            if euler[1].abs() >= limit {
                return Err(Error::InvalidConfig("reference approaches the Euler-angle singularity".into()));
            }
            if let Some(p) = prev {
                if (euler - p).amax() > PI {
                    return Err(Error::InvalidConfig("reference Euler angles wrap around".into()));
                }
            }
            prev = Some(euler);
        }
        Ok(())
    }

    fn sample_times(&self) -> impl Iterator<Item = f64> + '_ {
        let n = ((self.duration / SAMPLE_STEP).ceil() as usize).max(1);
        (0..=n).map(move |k| (k as f64 * self.duration / n as f64).min(self.duration))
    }

    /// `(max‖ẋ_d‖, max‖ẍ_d‖)` over a dense grid on `[0, duration]`.
    pub fn sampled_bounds(&self) -> Result<(f64, f64)> {
        let mut cv: f64 = 0.0;
        let mut ca: f64 = 0.0;
        for t in self.sample_times() {
            let r = self.evaluate(t)?;
            cv = cv.max(r.xdot.norm());
            ca = ca.max(r.xddot.norm());
        }
        Ok((cv, ca))
    }

    /// Fails unless the sampled bounds are within the declared `c_v`, `c_a`.
    pub fn check_bounds(&self, c_v: f64, c_a: f64) -> Result<(f64, f64)> {
        let (cv, ca) = self.sampled_bounds()?;
        if cv > c_v || ca > c_a {
            return Err(Error::InvalidConfig(alloc::format!(
                "reference exceeds declared bounds: |xd'| = {cv:.6e} (c_v = {c_v:.6e}), |xd''| = {ca:.6e} (c_a = {c_a:.6e})"
            )));
        }
        Ok((cv, ca))
    }

    /// `(x_d, ẋ_d, ẍ_d)` at time `t`, held constant after `duration`.
    pub fn evaluate(&self, t: f64) -> Result<Reference> {
        let t = t.clamp(0.0, self.duration);
        let omega = TAU * self.base_frequency;
        let mut r = Reference::default();
        match self.kind {
            TrajectoryKind::RotatingAxisSine => {
                for k in 0..6 {
                    let w = if k < 3 { omega } else { omega + (k - 3) as f64 * self.axis_precession_rate };
                    let (p, v, a) = cosine_bump(self.amplitude[k], w, t);
                    r.x[k] = self.start[k] + p;
                    r.xdot[k] = v;
                    r.xddot[k] = a;
                }
            }
            TrajectoryKind::FixedAxisSine => {
                for k in 0..3 {
                    let (p, v, a) = cosine_bump(self.amplitude[k], omega, t);
                    r.x[k] = self.start[k] + p;
                    r.xdot[k] = v;
                    r.xddot[k] = a;
                }
                let axis: Vec3 = self.amplitude.fixed_rows::<3>(3).into_owned();
                let start: Vec3 = self.start.fixed_rows::<3>(3).into_owned();
                let (phi, dphi, ddphi) = cosine_bump(1.0, omega, t);
                let angle = axis.norm() * phi;
                let euler = if angle == 0.0 {
                    start
                } else {
                    let q = UnitQuaternion::from_axis_angle(&axis, angle)?;
                    euler_xyz_from_rotation(&(rotation_from_euler_xyz(&start) * q.rotation_matrix()))
                };
                let w = axis * dphi;
                let dw = axis * ddphi;
                let (l, _) = orientation_rates(&euler, &Vec3::zeros())?;
                let rate = l * w;
                let (_, l_dot) = orientation_rates(&euler, &rate)?;
                r.x.fixed_rows_mut::<3>(3).copy_from(&euler);
                r.xdot.fixed_rows_mut::<3>(3).copy_from(&rate);
                r.xddot.fixed_rows_mut::<3>(3).copy_from(&(l * dw + l_dot * w));
            }
            TrajectoryKind::RestToRest => {
                let (s, ds, dds) = quintic(t, self.duration);
                r.x = self.start + self.amplitude * s;
                r.xdot = self.amplitude * ds;
                r.xddot = self.amplitude * dds;
            }
        }
        Ok(r)
    }
}

/// `a(1 − cos wt)` and its first two derivatives.
fn cosine_bump(a: f64, w: f64, t: f64) -> (f64, f64, f64) {
    let (s, c) = (w * t).sin_cos();
    (a * (1.0 - c), a * w * s, a * w * w * c)
}

/// `10τ³ − 15τ⁴ + 6τ⁵`, `τ = t/T`, and its time derivatives.
fn quintic(t: f64, duration: f64) -> (f64, f64, f64) {
    if duration <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let tau = t / duration;
    let (t2, t3) = (tau * tau, tau * tau * tau);
    let s = 10.0 * t3 - 15.0 * t3 * tau + 6.0 * t3 * t2;
    let ds = (30.0 * t2 - 60.0 * t3 + 30.0 * t2 * t2) / duration;
    let dds = (60.0 * tau - 180.0 * t2 + 120.0 * t3) / (duration * duration);
    (s, ds, dds)
}

/// `(x_d, ẋ_d, ẍ_d)` of `spec` at `t`.
pub fn generate_reference(spec: &TrajectorySpec, t: f64) -> Result<Reference> {
    spec.evaluate(t)
}
