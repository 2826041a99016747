use super::measurement::{synthesize_twists, NoiseSource, NoiseSpec};
use super::reference::TrajectorySpec;
use crate::control::{closed_loop_matrix, control_law, perturbation_term, Gains, Reference, TrackingError};
use crate::dynamics::{grasp_map, InterconnectedModel, PlantTerms};
use crate::estimation::{AttitudeEstimator, DisplacementEstimator, PeWindow};
use crate::rigidmotion::KinematicParams;
use crate::stability::solve_lyapunov;
use crate::{Error, Mat12, Mat3, Result, Vec12, Vec3, Vec4, Vec6};
use alloc::vec::Vec;
use core::fmt;
#[allow(unused_imports)]
use nalgebra::ComplexField;

/// Upper limit on the number of integration steps in one run.
pub const MAX_STEPS: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorSettings {
    pub mu_attitude: f64,
    pub mu_displacement: f64,
    /// Sample interval `h` in `ϱ = exp(−μh)`; `None` ties it to `dt`.
    pub sample_interval: Option<f64>,
    /// `P₀ = p0_scale·I`.
    pub p0_scale: f64,
    pub pe_window: usize,
    pub pe_threshold: f64,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self {
            mu_attitude: 0.9,
            mu_displacement: 0.9,
            sample_interval: None,
            p0_scale: crate::estimation::DEFAULT_P0_SCALE,
            pe_window: 2000,
            pe_threshold: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub model: InterconnectedModel,
    pub theta_true: KinematicParams,
    pub theta_guess: KinematicParams,
    pub gains: Gains,
    pub estimator: EstimatorSettings,
    pub dt: f64,
    pub trajectory: TrajectorySpec,
    pub noise: NoiseSpec,
    pub adaptation_enabled: bool,
    /// `z(0) = [x(0) − x_d(0); ẋ(0) − ẋ_d(0)]`.
    pub initial_error: Vec12,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidConfig("dt must be positive".into()));
        }
        if !(self.trajectory.duration / self.dt <= MAX_STEPS) {
            return Err(Error::InvalidConfig("duration/dt exceeds 1e7 steps".into()));
        }
        if !self.initial_error.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidConfig("initial error must be finite".into()));
        }
        if let Some(h) = self.estimator.sample_interval {
            if !(h > 0.0) {
                return Err(Error::InvalidConfig("estimator sample interval must be positive".into()));
            }
        }
        self.trajectory.validate()?;
        self.noise.validate()
    }

    pub fn steps(&self) -> usize {
        (self.trajectory.duration / self.dt).round() as usize
    }
}

/// One logged instant. Estimates are those after the update at `t`, and
/// the command and `g` are the ones applied from `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimRecord {
    pub t: f64,
    pub x: Vec6,
    pub x_d: Vec6,
    /// Measured grasp twists `[v; ω]` fed to the estimators.
    pub twist1: Vec6,
    pub twist2: Vec6,
    pub e: Vec6,
    pub edot: Vec6,
    pub eta_hat: Vec4,
    pub rho_hat: Vec3,
    pub theta_err: f64,
    pub u1_norm: f64,
    pub u2_norm: f64,
    pub pe_lambda_min: f64,
    /// `√(zᵀPz)`.
    pub v: f64,
    pub g_norm: f64,
    /// The excitation window meets the threshold.
    pub pe_flag: bool,
    /// The attitude estimator's top eigenvalue is (numerically) repeated.
    pub degen_flag: bool,
}

impl SimRecord {
    pub fn z(&self) -> Vec12 {
        TrackingError::from_parts(self.e, self.edot).z
    }

    pub fn xdot(&self, reference_xdot: &Vec6) -> Vec6 {
        reference_xdot + self.edot
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimLog {
    pub dt: f64,
    pub records: Vec<SimRecord>,
    /// Displacement updates refused because the gain was ill-conditioned.
    pub skipped_updates: usize,
}

impl SimLog {
    pub fn last(&self) -> Option<&SimRecord> {
        self.records.last()
    }

    /// Root mean square of `f` over the records with `t ≥ t_end − window`.
    pub fn final_window_rms(&self, window: f64, f: impl Fn(&SimRecord) -> f64) -> f64 {
        let Some(end) = self.last().map(|r| r.t) else { return 0.0 };
        let (sum, n) = self
            .records
            .iter()
            .filter(|r| r.t >= end - window)
            .fold((0.0, 0usize), |(s, n), r| (s + f(r) * f(r), n + 1));
        (sum / n as f64).sqrt()
    }

    /// RMS of `‖e‖` over the final window.
    pub fn tracking_rms(&self, window: f64) -> f64 {
        self.final_window_rms(window, |r| r.e.norm())
    }
}

/// A run that stopped early; `log` holds every record up to the failure.
#[derive(Debug, Clone, PartialEq)]
pub struct SimError {
    pub log: SimLog,
    pub cause: Error,
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.log.last().map_or(0.0, |r| r.t);
        write!(f, "simulation halted after t = {t}: {}", self.cause)
    }
}

impl core::error::Error for SimError {}

/// Closed loop of plant, measurement, estimators and controller.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: SimConfig,
    lyapunov: Mat12,
    attitude: AttitudeEstimator,
    displacement: DisplacementEstimator,
    pe: PeWindow,
    noise: NoiseSource,
    theta_hat: KinematicParams,
    x: Vec6,
    xdot: Vec6,
    step_index: usize,
    steps: usize,
    skipped_updates: usize,
}

impl Simulator {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let h = config.estimator.sample_interval.unwrap_or(config.dt);
        let guess = config.theta_guess;
        let attitude = AttitudeEstimator::new(guess.eta, config.estimator.mu_attitude, h)?;
        let displacement = DisplacementEstimator::new(
            guess.rho,
            Mat3::identity() * config.estimator.p0_scale,
            config.estimator.mu_displacement,
            h,
        )?;
        let pe = PeWindow::new(config.estimator.pe_window, config.estimator.pe_threshold)?;
        let lyapunov = solve_lyapunov(&closed_loop_matrix(&config.gains))?;
        let r0 = config.trajectory.evaluate(0.0)?;
        let x = r0.x + config.initial_error.fixed_rows::<6>(0);
        let xdot = r0.xdot + config.initial_error.fixed_rows::<6>(6);
        Ok(Self {
            noise: NoiseSource::new(config.noise)?,
            steps: config.steps(),
            lyapunov,
            attitude,
            displacement,
            pe,
            theta_hat: guess,
            x,
            xdot,
            step_index: 0,
            skipped_updates: 0,
            config,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn theta_hat(&self) -> &KinematicParams {
        &self.theta_hat
    }

    pub fn state(&self) -> (Vec6, Vec6) {
        (self.x, self.xdot)
    }

    pub fn lyapunov_matrix(&self) -> &Mat12 {
        &self.lyapunov
    }

    pub fn is_finished(&self) -> bool {
        self.step_index > self.steps
    }

    fn time(&self, k: usize) -> f64 {
        k as f64 * self.config.dt
    }

    /// One loop iteration: measure, update the estimators, compute the
    /// command, log, then integrate to the next sample (except after the
    /// final record).
    pub fn step(&mut self) -> Result<SimRecord> {
        let cfg = &self.config;
        let t = self.time(self.step_index);
        let terms = PlantTerms::evaluate(&cfg.model, &self.x, &self.xdot, &cfg.theta_true)?;
        let (tw1, tw2) = synthesize_twists(&terms.chain, &cfg.theta_true, &mut self.noise);
        self.pe.push(tw2.angular);
        if cfg.adaptation_enabled {
            self.attitude.update(&tw1.angular, &tw2.angular);
            let eta_hat = self.attitude.eta_hat();
            match self.displacement.update(&eta_hat, &tw1.linear, &tw2.linear, &tw2.angular) {
                Ok(()) => {}
                Err(Error::IllConditioned { .. }) => self.skipped_updates += 1,
                Err(e) => return Err(e),
            }
            self.theta_hat = KinematicParams::new(self.displacement.rho_hat(), eta_hat);
        }

        let lambda = *cfg.model.lambda();
        let reference = cfg.trajectory.evaluate(t)?;
        let cmd = control_law(&terms, &lambda, &reference, &self.theta_hat, &cfg.gains)?;
        let g = perturbation_term(&terms, &lambda, &reference, &cfg.theta_true, &self.theta_hat, &cfg.gains)?;
        let err = TrackingError::new(&self.x, &self.xdot, &reference);
        let (_, pe_lambda_min) = self.pe.check();
        let record = SimRecord {
            t,
            x: self.x,
            x_d: reference.x,
            twist1: tw1.to_vector6(),
            twist2: tw2.to_vector6(),
            e: err.e,
            edot: err.edot,
            eta_hat: self.theta_hat.eta.to_vector4(),
            rho_hat: self.theta_hat.rho,
            theta_err: cfg.theta_true.distance(&self.theta_hat),
            u1_norm: cmd.u1.norm(),
            u2_norm: cmd.u2.norm(),
            pe_lambda_min,
            v: (err.z.transpose() * self.lyapunov * err.z)[0].max(0.0).sqrt(),
            g_norm: g.norm(),
            pe_flag: pe_lambda_min >= self.pe.threshold(),
            degen_flag: self.attitude.is_degenerate(),
        };

        if self.step_index < self.steps {
            let a0 = plant_acceleration(cfg, &terms, &reference, &self.theta_hat)?;
            self.integrate(t, a0)?;
        }
        self.step_index += 1;
        Ok(record)
    }

    /// Classical fourth-order Runge–Kutta over `[t, t + dt]` with `θ̂` held.
    fn integrate(&mut self, t: f64, a0: Vec6) -> Result<()> {
        let dt = self.config.dt;
        let (x0, v0) = (self.x, self.xdot);
        let (k1x, k1v) = (v0, a0);
        let (k2x, k2v) = {
            let v = v0 + k1v * (dt / 2.0);
            (v, self.acceleration(t + dt / 2.0, &(x0 + k1x * (dt / 2.0)), &v)?)
        };
        let (k3x, k3v) = {
            let v = v0 + k2v * (dt / 2.0);
            (v, self.acceleration(t + dt / 2.0, &(x0 + k2x * (dt / 2.0)), &v)?)
        };
        let (k4x, k4v) = {
            let v = v0 + k3v * dt;
            (v, self.acceleration(self.time(self.step_index + 1), &(x0 + k3x * dt), &v)?)
        };
        self.x = x0 + (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (dt / 6.0);
        self.xdot = v0 + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (dt / 6.0);
        if !self.x.iter().chain(self.xdot.iter()).all(|v| v.is_finite()) {
            return Err(Error::SingularL);
        }
        Ok(())
    }

    fn acceleration(&self, t: f64, x: &Vec6, xdot: &Vec6) -> Result<Vec6> {
        let cfg = &self.config;
        let terms = PlantTerms::evaluate(&cfg.model, x, xdot, &cfg.theta_true)?;
        let reference = cfg.trajectory.evaluate(t)?;
        plant_acceleration(cfg, &terms, &reference, &self.theta_hat)
    }

    /// Runs to the end of the trajectory.
    pub fn run(mut self) -> core::result::Result<SimLog, SimError> {
        let mut log = SimLog { dt: self.config.dt, records: Vec::with_capacity(self.steps + 1), skipped_updates: 0 };
        while !self.is_finished() {
            match self.step() {
                Ok(r) => log.records.push(r),
                Err(cause) => {
                    log.skipped_updates = self.skipped_updates;
                    return Err(SimError { log, cause });
                }
            }
        }
        log.skipped_updates = self.skipped_updates;
        Ok(log)
    }
}

/// `ẍ = M̄⁻¹(N(θ)u − h̄)` with the plant at the true parameters.
fn plant_acceleration(
    cfg: &SimConfig,
    terms: &PlantTerms,
    reference: &Reference,
    theta_hat: &KinematicParams,
) -> Result<Vec6> {
    let lambda = cfg.model.lambda();
    let cmd = control_law(terms, lambda, reference, theta_hat, &cfg.gains)?;
    let (m_bar, h_bar) = terms.combined(lambda, &cfg.theta_true)?;
    let force = grasp_map(&cfg.theta_true) * cmd.stacked() - h_bar;
    m_bar.lu().solve(&force).ok_or(Error::SingularL)
}

/// Builds a [`Simulator`] and runs it.
pub fn run(config: SimConfig) -> core::result::Result<SimLog, SimError> {
    match Simulator::new(config) {
        Ok(sim) => sim.run(),
        Err(cause) => Err(SimError { log: SimLog::default(), cause }),
    }
}
