//! Scenario files: one TOML document with the sections `plant`,
//! `theta_true`, `theta_guess`, `gains`, `estimators`, `trajectory`,
//! `noise`, `run` and `analysis`. Unknown keys are rejected.

use std::path::Path;

use coopkin_core::control::Gains;
use coopkin_core::dynamics::{InterconnectedModel, ObjectModel, SyntheticArm};
use coopkin_core::rigidmotion::{KinematicParams, UnitQuaternion};
use coopkin_core::sim::{EstimatorSettings, NoiseSpec, SimConfig, TrajectoryKind, TrajectorySpec};
use coopkin_core::stability::OperatingRegion;
use coopkin_core::{Mat6, Vec12, Vec3, Vec4, Vec6};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// The scenario bundled with the binary.
pub const DEFAULT_SCENARIO: &str = include_str!("../scenarios/default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub plant: PlantSection,
    pub theta_true: ThetaSection,
    pub theta_guess: ThetaSection,
    pub gains: GainsSection,
    #[serde(default)]
    pub estimators: EstimatorsSection,
    pub trajectory: TrajectorySection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    /// Rows of `Λ` in `ẋ₁ = Λẋ`; identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<[[f64; 6]; 6]>,
    pub object: ObjectSection,
    pub arm1: ArmSection,
    pub arm2: ArmSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSection {
    pub mass_diagonal: [f64; 6],
    #[serde(default)]
    pub gravity: [f64; 6],
    #[serde(default)]
    pub quadratic_drag: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmSection {
    pub mass_diagonal: [f64; 6],
    #[serde(default)]
    pub modulation: f64,
    #[serde(default)]
    pub phase: [f64; 6],
    #[serde(default)]
    pub gravity: [f64; 6],
    #[serde(default)]
    pub quadratic_drag: f64,
}

/// `ρ` in metres and the grasp rotation, either as axis and angle or as a
/// quaternion `[v; s]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaSection {
    pub rho: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quaternion: Option<[f64; 4]>,
}

/// Diagonal PD gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSection {
    pub gp: [f64; 6],
    pub gd: [f64; 6],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorsSection {
    pub mu_attitude: f64,
    pub mu_displacement: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_interval: Option<f64>,
    pub p0_scale: f64,
    pub pe_window: usize,
    pub pe_threshold: f64,
}

impl Default for EstimatorsSection {
    fn default() -> Self {
        let d = EstimatorSettings::default();
        Self {
            mu_attitude: d.mu_attitude,
            mu_displacement: d.mu_displacement,
            sample_interval: d.sample_interval,
            p0_scale: d.p0_scale,
            pe_window: d.pe_window,
            pe_threshold: d.pe_threshold,
        }
    }
}

impl EstimatorsSection {
    pub fn settings(&self) -> EstimatorSettings {
        EstimatorSettings {
            mu_attitude: self.mu_attitude,
            mu_displacement: self.mu_displacement,
            sample_interval: self.sample_interval,
            p0_scale: self.p0_scale,
            pe_window: self.pe_window,
            pe_threshold: self.pe_threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindName {
    RotatingAxisSine,
    FixedAxisSine,
    RestToRest,
}

impl From<KindName> for TrajectoryKind {
    fn from(k: KindName) -> Self {
        match k {
            KindName::RotatingAxisSine => TrajectoryKind::RotatingAxisSine,
            KindName::FixedAxisSine => TrajectoryKind::FixedAxisSine,
            KindName::RestToRest => TrajectoryKind::RestToRest,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    pub kind: KindName,
    pub start: [f64; 6],
    pub amplitude: [f64; 6],
    #[serde(default)]
    pub base_frequency: f64,
    #[serde(default)]
    pub axis_precession_rate: f64,
    pub duration: f64,
    /// Declared bound on `‖ẋ_d‖`; the sampled maximum when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_v: Option<f64>,
    /// Declared bound on `‖ẍ_d‖`; the sampled maximum when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_a: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub linear_std: f64,
    pub angular_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub dt: f64,
    /// Seeds the measurement noise and the constant sampling.
    pub seed: u64,
    pub adaptation: bool,
    /// `[e(0); ė(0)]`.
    pub initial_error: [f64; 12],
}

impl Default for RunSection {
    fn default() -> Self {
        Self { dt: 1e-3, seed: 0, adaptation: true, initial_error: [0.0; 12] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    /// Radius of the parameter ball around `theta_true`.
    pub radius: f64,
    pub samples: usize,
    /// `‖θ̃(t)‖ ≤ α‖θ̃(0)‖`.
    pub alpha: f64,
    /// Domain radius used when `κ₂ = 0`.
    pub r_z_fallback: f64,
    /// Overrides the sampled `ε_t`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_t: Option<f64>,
    /// Added to the reference's extent on every side of the region box.
    pub region_margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionSection>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self { radius: 0.5, samples: 2000, alpha: 1.0, r_z_fallback: 1.0, eps_t: None, region_margin: 0.1, region: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSection {
    pub pose_center: [f64; 6],
    pub pose_half_width: [f64; 6],
    pub max_speed: f64,
}

fn core_err(path: &Path) -> impl Fn(coopkin_core::Error) -> CliError + '_ {
    move |e| CliError::config(path, e)
}

impl Scenario {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Read { path: path.to_path_buf(), message: e.to_string() })?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> CliResult<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| CliError::config(path, e))?;
        s.check(path)?;
        Ok(s)
    }

    pub fn bundled() -> Self {
        Self::parse(DEFAULT_SCENARIO, Path::new("scenarios/default.toml")).expect("bundled scenario is valid")
    }

    /// Canonical TOML text of the resolved scenario.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Structural checks that do not depend on the gains.
    fn check(&self, path: &Path) -> CliResult<()> {
        self.model().map_err(core_err(path))?;
        self.theta_true().map_err(core_err(path))?;
        self.theta_guess().map_err(core_err(path))?;
        self.trajectory().map_err(core_err(path))?;
        let t = &self.trajectory;
        if let (Some(cv), Some(ca)) = (t.c_v, t.c_a) {
            self.trajectory().and_then(|s| s.check_bounds(cv, ca)).map_err(core_err(path))?;
        } else if t.c_v.is_some() || t.c_a.is_some() {
            return Err(CliError::config(path, "trajectory.c_v and trajectory.c_a must be given together"));
        }
        if self.estimators.pe_window == 0 || !(self.estimators.pe_threshold > 0.0) {
            return Err(CliError::config(path, "estimators.pe_window and pe_threshold must be positive"));
        }
        let a = &self.analysis;
        if !(a.radius > 0.0) || !(a.alpha > 0.0) || !(a.r_z_fallback > 0.0) || !(a.region_margin >= 0.0) {
            return Err(CliError::config(path, "analysis radius, alpha, r_z_fallback must be positive"));
        }
        if a.eps_t.is_some_and(|e| !(e >= 0.0)) {
            return Err(CliError::config(path, "analysis.eps_t must be non-negative"));
        }
        if a.samples < coopkin_core::stability::MIN_SAMPLES {
            return Err(CliError::config(path, "analysis.samples must be at least 1000"));
        }
        self.sim_config_with(self.gains_unchecked(), self.run.adaptation)
            .validate()
            .map_err(core_err(path))?;
        Ok(())
    }

    pub fn model(&self) -> coopkin_core::Result<InterconnectedModel> {
        let p = &self.plant;
        let arm = |a: &ArmSection| {
            SyntheticArm::new(
                Mat6::from_diagonal(&Vec6::from(a.mass_diagonal)),
                a.modulation,
                Vec6::from(a.phase),
                Vec6::from(a.gravity),
                a.quadratic_drag,
            )
        };
        let object = ObjectModel::new(
            Mat6::from_diagonal(&Vec6::from(p.object.mass_diagonal)),
            Vec6::from(p.object.gravity),
            p.object.quadratic_drag,
        )?;
        let lambda = match p.lambda {
            Some(rows) => Mat6::from_fn(|i, j| rows[i][j]),
            None => Mat6::identity(),
        };
        InterconnectedModel::new(arm(&p.arm1)?, arm(&p.arm2)?, object, lambda)
    }

    pub fn theta_true(&self) -> coopkin_core::Result<KinematicParams> {
        self.theta_true.params()
    }

    pub fn theta_guess(&self) -> coopkin_core::Result<KinematicParams> {
        self.theta_guess.params()
    }

    pub fn gains(&self) -> coopkin_core::Result<Gains> {
        Gains::diagonal(&Vec6::from(self.gains.gp), &Vec6::from(self.gains.gd))
    }

    /// Gains without the Hurwitz/definiteness checks; only for assembling
    /// a config whose other fields are then validated.
    fn gains_unchecked(&self) -> Gains {
        self.gains().unwrap_or_else(|_| Gains::diagonal(&Vec6::repeat(1.0), &Vec6::repeat(2.0)).expect("valid gains"))
    }

    pub fn trajectory(&self) -> coopkin_core::Result<TrajectorySpec> {
        let t = &self.trajectory;
        TrajectorySpec::new(
            t.kind.into(),
            Vec6::from(t.start),
            Vec6::from(t.amplitude),
            t.base_frequency,
            t.axis_precession_rate,
            t.duration,
        )
    }

    /// `(c_v, c_a)`: declared values, else the sampled maxima.
    pub fn reference_bounds(&self) -> coopkin_core::Result<(f64, f64)> {
        match (self.trajectory.c_v, self.trajectory.c_a) {
            (Some(cv), Some(ca)) => Ok((cv, ca)),
            _ => self.trajectory()?.sampled_bounds(),
        }
    }

    /// The configured region, else the reference's bounding box widened by
    /// `region_margin` and by the initial error, with speed cap
    /// `1.5(c_v + ‖ė(0)‖) + region_margin`.
    pub fn region(&self) -> coopkin_core::Result<OperatingRegion> {
        if let Some(r) = &self.analysis.region {
            let region = OperatingRegion {
                pose_center: Vec6::from(r.pose_center),
                pose_half_width: Vec6::from(r.pose_half_width),
                max_speed: r.max_speed,
            };
            region.validate()?;
            return Ok(region);
        }
        let spec = self.trajectory()?;
        let n = ((spec.duration / 1e-2).ceil() as usize).max(1);
        let mut lo = Vec6::repeat(f64::INFINITY);
        let mut hi = Vec6::repeat(f64::NEG_INFINITY);
        for k in 0..=n {
            let r = spec.evaluate(spec.duration * k as f64 / n as f64)?;
            lo = lo.inf(&r.x);
            hi = hi.sup(&r.x);
        }
        let e0 = Vec12::from(self.run.initial_error);
        let pose_err = e0.fixed_rows::<6>(0).abs();
        let margin = self.analysis.region_margin;
        let (cv, _) = self.reference_bounds()?;
        let region = OperatingRegion {
            pose_center: (lo + hi) * 0.5,
            pose_half_width: (hi - lo) * 0.5 + pose_err + Vec6::repeat(margin),
            max_speed: 1.5 * (cv + e0.fixed_rows::<6>(6).norm()) + margin,
        };
        region.validate()?;
        Ok(region)
    }

    pub fn sim_config(&self, adaptation: bool) -> coopkin_core::Result<SimConfig> {
        let gains = self.gains()?;
        let cfg = self.sim_config_with(gains, adaptation);
        cfg.validate()?;
        Ok(cfg)
    }

    fn sim_config_with(&self, gains: Gains, adaptation: bool) -> SimConfig {
        SimConfig {
            model: self.model().expect("checked model"),
            theta_true: self.theta_true().expect("checked parameters"),
            theta_guess: self.theta_guess().expect("checked parameters"),
            gains,
            estimator: self.estimators.settings(),
            dt: self.run.dt,
            trajectory: self.trajectory().expect("checked trajectory"),
            noise: NoiseSpec {
                linear_std: self.noise.linear_std,
                angular_std: self.noise.angular_std,
                seed: self.run.seed,
            },
            adaptation_enabled: adaptation,
            initial_error: Vec12::from(self.run.initial_error),
        }
    }
}

impl ThetaSection {
    pub fn params(&self) -> coopkin_core::Result<KinematicParams> {
        let eta = match (self.quaternion, self.axis, self.angle_deg) {
            (Some(q), None, None) => UnitQuaternion::from_vector4(&Vec4::from(q))?,
            (None, axis, angle) => {
                let angle = angle.unwrap_or(0.0);
                if angle == 0.0 {
                    UnitQuaternion::identity()
                } else {
                    let axis = axis.ok_or_else(|| {
                        coopkin_core::Error::InvalidConfig("a non-zero angle needs an axis".into())
                    })?;
                    UnitQuaternion::from_axis_angle(&Vec3::from(axis), angle.to_radians())?
                }
            }
            _ => {
                return Err(coopkin_core::Error::InvalidConfig(
                    "give either quaternion or axis/angle_deg, not both".into(),
                ))
            }
        };
        let rho = Vec3::from(self.rho);
        if !rho.iter().all(|v| v.is_finite()) {
            return Err(coopkin_core::Error::InvalidConfig("rho must be finite".into()));
        }
        Ok(KinematicParams::new(rho, eta))
    }
}
