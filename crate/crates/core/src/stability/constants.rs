use crate::dynamics::{d_matrix, n_pseudoinverse, InterconnectedModel, PlantTerms};
use crate::linalg::{singular_range, spectral_norm};
use crate::rigidmotion::{velocity_transform, KinematicParams, UnitQuaternion, GIMBAL_MARGIN};
use crate::{Error, Result, Vec3, Vec6};
#[allow(unused_imports)]
use nalgebra::ComplexField;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Minimum sample count accepted by [`estimate_constants`].
pub const MIN_SAMPLES: usize = 1000;

/// Plant and parameter-sensitivity bounds entering the κ constants.
///
/// Field names follow the usual symbols; a `bar_` prefix marks the bound on
/// a combined (object plus arms) quantity and `big_` an upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub c_m: f64,
    pub c_big_m: f64,
    pub c_g: f64,
    pub c_h: f64,
    pub c_v: f64,
    pub c_a: f64,
    pub bar_c_m: f64,
    pub bar_c_big_m: f64,
    pub bar_c_g: f64,
    pub bar_c_h: f64,
    pub c_n: f64,
    pub c_t: f64,
    pub c_d: f64,
    pub c_lambda: f64,
    pub c_l: f64,
    pub eps_t: f64,
    pub eps_d: f64,
}

impl BoundConstants {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.c_m, self.c_big_m, self.c_g, self.c_h, self.c_v, self.c_a, self.bar_c_m, self.bar_c_big_m,
            self.bar_c_g, self.bar_c_h, self.c_n, self.c_t, self.c_d, self.c_lambda, self.c_l, self.eps_t,
            self.eps_d,
        ];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidConfig("bound constants must be finite and non-negative".into()));
        }
        if !(self.c_m > 0.0) || self.c_m > self.c_big_m || !(self.bar_c_m > 0.0) || self.bar_c_m > self.bar_c_big_m {
            return Err(Error::InvalidConfig("mass bounds must satisfy 0 < c_m <= c_M".into()));
        }
        Ok(())
    }
}

/// Box of object poses and a speed cap over which plant bounds are sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingRegion {
    pub pose_center: Vec6,
    pub pose_half_width: Vec6,
    pub max_speed: f64,
}

impl OperatingRegion {
    pub fn validate(&self) -> Result<()> {
        if self.pose_half_width.iter().any(|w| !(*w >= 0.0)) || !(self.max_speed > 0.0) {
            return Err(Error::InvalidConfig("operating region needs non-negative widths and positive speed".into()));
        }
        let reach = self.pose_center[4].abs() + self.pose_half_width[4];
        if reach >= core::f64::consts::FRAC_PI_2 - GIMBAL_MARGIN {
            return Err(Error::InvalidConfig("operating region reaches the Euler-angle singularity".into()));
        }
        Ok(())
    }

    pub fn contains(&self, x: &Vec6, xdot: &Vec6) -> bool {
        (x - self.pose_center).iter().zip(self.pose_half_width.iter()).all(|(d, w)| d.abs() <= *w)
            && xdot.norm() <= self.max_speed
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> (Vec6, Vec6) {
        let x = self.pose_center + Vec6::from_fn(|k, _| self.pose_half_width[k] * rng.random_range(-1.0..=1.0));
        let dir = loop {
            let d = Vec6::from_fn(|_, _| rng.random_range(-1.0..=1.0));
            let n = d.norm();
            if n > 1e-3 && n <= 1.0 {
                break d / n;
            }
        };
        let speed = self.max_speed * rng.random_range(1e-3..=1.0);
        (x, dir * speed)
    }
}

/// Uniform sample of the 6-ball of `radius` in the parameter-error metric
/// `[ρ − ρ₀; vec(η ⊗ η₀*)]` around `center`.
pub fn sample_parameter_ball(rng: &mut ChaCha8Rng, center: &KinematicParams, radius: f64) -> KinematicParams {
    let u = loop {
        let d = Vec6::from_fn(|_, _| rng.random_range(-1.0..=1.0));
        if d.norm() <= 1.0 {
            break d * radius;
        }
    };
    perturb(center, &u)
}

/// `θ` with `θ.error(center)`-style offset `u` from `center`.
fn perturb(center: &KinematicParams, u: &Vec6) -> KinematicParams {
    let rho = center.rho + u.fixed_rows::<3>(0);
    let mut dv: Vec3 = u.fixed_rows::<3>(3).into_owned();
    if dv.norm() >= 1.0 {
        dv *= 0.999_999 / dv.norm();
    }
    let dq = UnitQuaternion::new(dv, (1.0 - dv.norm_squared()).sqrt()).unwrap_or_else(|_| UnitQuaternion::identity());
    KinematicParams::new(rho, dq.mul(&center.eta))
}

/// Sampled estimates of every constant in the κ expressions.
///
/// Plant bounds (`c_m`, `c_M`, `c_g`, `c_h`, `c̄_*`, `c_l`, `c_d`) are
/// extremes over `samples` draws from the operating region, with the
/// chain closed at a parameter drawn from the ball `Θ` of `radius` around
/// `theta_nominal`. Parameter bounds (`c_n`, `c_t`) are maxima over `Θ`;
/// `ε_t`, `ε_d` are maximum Lipschitz quotients over near and far pairs in
/// `Θ`. `c_v`, `c_a` are the reference bounds passed in.
pub fn estimate_constants(
    model: &InterconnectedModel,
    theta_nominal: &KinematicParams,
    radius: f64,
    region: &OperatingRegion,
    ref_bounds: (f64, f64),
    samples: usize,
    seed: u64,
) -> Result<BoundConstants> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidConfig("parameter-ball radius must be positive".into()));
    }
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidConfig("at least 1000 samples are required".into()));
    }
    if !(ref_bounds.0 >= 0.0) || !(ref_bounds.1 >= 0.0) {
        return Err(Error::InvalidConfig("reference bounds must be non-negative".into()));
    }
    region.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lambda = *model.lambda();
    let mut c = BoundConstants {
        c_m: f64::INFINITY,
        c_big_m: 0.0,
        c_g: 0.0,
        c_h: 0.0,
        c_v: ref_bounds.0,
        c_a: ref_bounds.1,
        bar_c_m: f64::INFINITY,
        bar_c_big_m: 0.0,
        bar_c_g: 0.0,
        bar_c_h: 0.0,
        c_n: 0.0,
        c_t: 0.0,
        c_d: 0.0,
        c_lambda: spectral_norm(&lambda),
        c_l: 0.0,
        eps_t: 0.0,
        eps_d: 0.0,
    };

    for i in 0..samples {
        let (x, xdot) = region.sample(&mut rng);
        let theta_chain = sample_parameter_ball(&mut rng, theta_nominal, radius);
        let theta = sample_parameter_ball(&mut rng, theta_nominal, radius);
        let terms = PlantTerms::evaluate(model, &x, &xdot, &theta_chain)?;
        let rest = PlantTerms::evaluate(model, &x, &Vec6::zeros(), &theta_chain)?;
        let ch = &terms.chain;
        let speed2 = xdot.norm_squared();

        for (m, h, h0) in [(&terms.m1, &terms.h1, &rest.h1), (&terms.m2, &terms.h2, &rest.h2)] {
            let eig = m.symmetric_eigenvalues();
            c.c_m = c.c_m.min(eig.min());
            c.c_big_m = c.c_big_m.max(eig.max());
            c.c_g = c.c_g.max(h0.norm());
            c.c_h = c.c_h.max((h.norm() - h0.norm()) / speed2);
        }

        let (m_bar, h_bar) = terms.combined(&lambda, &theta)?;
        let (_, h_bar0) = rest.combined(&lambda, &theta)?;
        let (s_hi, s_lo) = singular_range(&m_bar);
        c.bar_c_m = c.bar_c_m.min(s_lo);
        c.bar_c_big_m = c.bar_c_big_m.max(s_hi);
        c.bar_c_g = c.bar_c_g.max(h_bar0.norm());
        c.bar_c_h = c.bar_c_h.max((h_bar.norm() - h_bar0.norm()) / speed2);

        let t = velocity_transform(&theta);
        c.c_t = c.c_t.max(spectral_norm(&t));
        c.c_n = c.c_n.max(spectral_norm(&n_pseudoinverse(&theta)));
        let d = d_matrix(&ch.l1, &ch.l1_dot, &ch.l2, &ch.l2_dot, &t)?;
        c.c_d = c.c_d.max(spectral_norm(&d));
        let (_, l1_lo) = singular_range(&ch.l1);
        c.c_l = c.c_l.max(spectral_norm(&ch.l2) / l1_lo);

        // Alternate far pairs (independent draws) and near pairs (a small
        // step from `theta`) for the Lipschitz quotients.
        let other = if i % 2 == 0 {
            theta_chain
        } else {
            let step = Vec6::from_fn(|_, _| rng.random_range(-1.0..=1.0)) * (radius * 1e-3);
            perturb(&theta, &step)
        };
        let dist = theta.distance(&other);
        if dist > 1e-12 {
            let t_other = velocity_transform(&other);
            c.eps_t = c.eps_t.max(spectral_norm(&(t - t_other)) / dist);
            let d_other = d_matrix(&ch.l1, &ch.l1_dot, &ch.l2, &ch.l2_dot, &t_other)?;
            c.eps_d = c.eps_d.max(spectral_norm(&(d - d_other)) / dist);
        }
    }
    c.c_h = c.c_h.max(0.0);
    c.bar_c_h = c.bar_c_h.max(0.0);
    c.validate()?;
    Ok(c)
}

/// `(κ₀, κ₁, κ₂)` of the growth bound `‖g‖ ≤ (κ₀ + κ₁‖z‖ + κ₂‖z‖²)‖θ̃‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kappas {
    pub kappa0: f64,
    pub kappa1: f64,
    pub kappa2: f64,
}

impl Kappas {
    /// `(κ₀ + κ₁‖z‖ + κ₂‖z‖²)`.
    pub fn growth(&self, z_norm: f64) -> f64 {
        self.kappa0 + self.kappa1 * z_norm + self.kappa2 * z_norm * z_norm
    }
}

/// The closed-form κ constants:
///
/// `κ₀ = [ε_t c_M c_a(c_n + 2c_l c_λ c_t) + ε_t c_g + ε_t c_h c_v
///        + (ε_t + ε_d) c_M c_d c_λ c_v + ε_t c_n c̄_g] / c_m`,
/// `κ₁ = [ε_t c_M (c_n + 2c_l c_λ c_t)‖G‖ + (ε_t + ε_d) c_M c_d c_λ
///        + ε_t c_n c̄_h c_v] / c_m`,
/// `κ₂ = (c_h + c_n c̄_h) ε_t / c_m`.
pub fn kappa_bounds(c: &BoundConstants, gain_norm: f64) -> Kappas {
    let coupling = c.c_n + 2.0 * c.c_l * c.c_lambda * c.c_t;
    let kappa0 = (c.eps_t * c.c_big_m * c.c_a * coupling
        + c.eps_t * c.c_g
        + c.eps_t * c.c_h * c.c_v
        + (c.eps_t + c.eps_d) * c.c_big_m * c.c_d * c.c_lambda * c.c_v
        + c.eps_t * c.c_n * c.bar_c_g)
        / c.c_m;
    let kappa1 = (c.eps_t * c.c_big_m * coupling * gain_norm
        + (c.eps_t + c.eps_d) * c.c_big_m * c.c_d * c.c_lambda
        + c.eps_t * c.c_n * c.bar_c_h * c.c_v)
        / c.c_m;
    let kappa2 = (c.c_h + c.c_n * c.bar_c_h) * c.eps_t / c.c_m;
    Kappas { kappa0, kappa1, kappa2 }
}
