//! Self-tuning inverse-dynamics control with minimum-norm force
//! distribution.

use crate::dynamics::{grasp_map, n_pseudoinverse, q_inverse, PlantTerms};
use crate::linalg::is_spd;
use crate::rigidmotion::{velocity_transform, KinematicParams};
use crate::stability::spectral_abscissa;
use crate::{Error, Mat12, Mat6, Result, Vec12, Vec6};

/// Eigenvalue real parts at or above this are not accepted as stable.
pub const HURWITZ_MARGIN: f64 = -1e-9;

/// PD gains `G_p`, `G_d`, validated so that `F = [0, I; −G_p, −G_d]` is
/// Hurwitz.
#[derive(Debug, Clone, PartialEq)]
pub struct Gains {
    gp: Mat6,
    gd: Mat6,
}

impl Gains {
    pub fn new(gp: Mat6, gd: Mat6) -> Result<Self> {
        let abscissa = spectral_abscissa(&companion(&gp, &gd));
        if !(abscissa < HURWITZ_MARGIN) {
            return Err(Error::NotHurwitz { spectral_abscissa: abscissa });
        }
        if !is_spd(&gp, 1e-12) || !is_spd(&gd, 1e-12) {
            return Err(Error::InvalidConfig("gains Gp and Gd must be symmetric positive definite".into()));
        }
        Ok(Self { gp, gd })
    }

    pub fn diagonal(gp: &Vec6, gd: &Vec6) -> Result<Self> {
        Self::new(Mat6::from_diagonal(gp), Mat6::from_diagonal(gd))
    }

    pub fn gp(&self) -> &Mat6 {
        &self.gp
    }

    pub fn gd(&self) -> &Mat6 {
        &self.gd
    }

    /// `G z = G_p e + G_d ė`.
    pub fn apply(&self, z: &Vec12) -> Vec6 {
        self.gp * z.fixed_rows::<6>(0) + self.gd * z.fixed_rows::<6>(6)
    }

    /// Spectral norm of `G = [G_p G_d]`.
    pub fn norm(&self) -> f64 {
        let mut g = crate::Mat6x12::zeros();
        g.fixed_view_mut::<6, 6>(0, 0).copy_from(&self.gp);
        g.fixed_view_mut::<6, 6>(0, 6).copy_from(&self.gd);
        crate::linalg::spectral_norm(&g)
    }
}

fn companion(gp: &Mat6, gd: &Mat6) -> Mat12 {
    let mut f = Mat12::zeros();
    f.fixed_view_mut::<6, 6>(0, 6).fill_with_identity();
    f.fixed_view_mut::<6, 6>(6, 0).copy_from(&(-gp));
    f.fixed_view_mut::<6, 6>(6, 6).copy_from(&(-gd));
    f
}


/// `F = [0, I; −G_p, −G_d]`.
pub fn closed_loop_matrix(gains: &Gains) -> Mat12 {
    companion(&gains.gp, &gains.gd)
}

/// Desired pose, velocity and acceleration at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Reference {
    pub x: Vec6,
    pub xdot: Vec6,
    pub xddot: Vec6,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingError {
    pub e: Vec6,
    pub edot: Vec6,
    pub z: Vec12,
}

impl TrackingError {
    pub fn new(x: &Vec6, xdot: &Vec6, reference: &Reference) -> Self {
        Self::from_parts(x - reference.x, xdot - reference.xdot)
    }

    pub fn from_parts(e: Vec6, edot: Vec6) -> Self {
        let mut z = Vec12::zeros();
        z.fixed_rows_mut::<6>(0).copy_from(&e);
        z.fixed_rows_mut::<6>(6).copy_from(&edot);
        Self { e, edot, z }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlCommand {
    pub u1: Vec6,
    pub u2: Vec6,
    pub u_bar: Vec6,
}

impl ControlCommand {
    /// `[u₁; u₂]`.
    pub fn stacked(&self) -> Vec12 {
        let mut u = Vec12::zeros();
        u.fixed_rows_mut::<6>(0).copy_from(&self.u1);
        u.fixed_rows_mut::<6>(6).copy_from(&self.u2);
        u
    }
}

/// `ū = M̂(ẍ_d − G_d ė − G_p e) + ĥ`, `u₁ = Q(ρ̂)⁻¹ū`, `u₂ = T(θ̂)u₁`.
///
/// `terms` holds the measured chain state; `M̂`, `ĥ` are its combined
/// dynamics evaluated at `theta_hat`.
pub fn control_law(
    terms: &PlantTerms,
    lambda: &Mat6,
    reference: &Reference,
    theta_hat: &KinematicParams,
    gains: &Gains,
) -> Result<ControlCommand> {
    let (m_hat, h_hat) = terms.combined(lambda, theta_hat)?;
    let err = TrackingError::new(&terms.chain.x, &terms.chain.xdot, reference);
    let u_bar = m_hat * (reference.xddot - gains.apply(&err.z)) + h_hat;
    let u1 = q_inverse(&theta_hat.rho) * u_bar;
    let u2 = velocity_transform(theta_hat) * u1;
    Ok(ControlCommand { u1, u2, u_bar })
}

/// `g(z, t) = [0; M̄⁻¹((ÑM̂ − M̃)(ẍ_d − Gz) − h̃ + Ñĥ)]` with
/// `Ñ = N N̂⁺ − I`, `M̃ = M̄ − M̂`, `h̃ = h̄ − ĥ`.
pub fn perturbation_term(
    terms: &PlantTerms,
    lambda: &Mat6,
    reference: &Reference,
    theta: &KinematicParams,
    theta_hat: &KinematicParams,
    gains: &Gains,
) -> Result<Vec12> {
    let (m_bar, h_bar) = terms.combined(lambda, theta)?;
    let (m_hat, h_hat) = terms.combined(lambda, theta_hat)?;
    let n_tilde = grasp_map(theta) * n_pseudoinverse(theta_hat) - Mat6::identity();
    let err = TrackingError::new(&terms.chain.x, &terms.chain.xdot, reference);
    let a = reference.xddot - gains.apply(&err.z);
    let rhs = (n_tilde * m_hat - (m_bar - m_hat)) * a - (h_bar - h_hat) + n_tilde * h_hat;
    let lower = m_bar.lu().solve(&rhs).ok_or(Error::SingularL)?;
    let mut g = Vec12::zeros();
    g.fixed_rows_mut::<6>(6).copy_from(&lower);
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{d_matrix, q_matrix, InterconnectedModel, ObjectModel, SyntheticArm};
    use crate::rigidmotion::UnitQuaternion;
    use crate::Vec3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(rng: &mut ChaCha8Rng, floor: f64) -> Mat6 {
        let a = Mat6::from_fn(|_, _| rng.random_range(-1.0..1.0));
        a * a.transpose() + Mat6::identity() * floor
    }

    fn random_theta(rng: &mut ChaCha8Rng, rho_scale: f64) -> KinematicParams {
        let q = crate::Vec4::from_fn(|_, _| rng.random_range(-1.0..1.0));
        KinematicParams::new(
            Vec3::from_fn(|_, _| rng.random_range(-rho_scale..rho_scale)),
            UnitQuaternion::from_vector4(&q).unwrap(),
        )
    }

    fn model(rng: &mut ChaCha8Rng) -> InterconnectedModel {
        let arm = |rng: &mut ChaCha8Rng| {
            SyntheticArm::new(
                random_spd(rng, 1.0),
                0.4,
                Vec6::from_fn(|_, _| rng.random_range(0.0..3.0)),
                Vec6::from_fn(|_, _| rng.random_range(-3.0..3.0)),
                0.2,
            )
            .unwrap()
        };
        let a1 = arm(rng);
        let a2 = arm(rng);
        let o = ObjectModel::new(random_spd(rng, 2.0), Vec6::new(0.0, 0.0, -9.81, 0.0, 0.0, 0.0), 0.1).unwrap();
        InterconnectedModel::with_identity_grasp(a1, a2, o)
    }

    fn state(rng: &mut ChaCha8Rng) -> (Vec6, Vec6) {
        (
            Vec6::from_fn(|k, _| rng.random_range(-0.5..0.5) * if k == 4 { 1.0 } else { 2.0 }),
            Vec6::from_fn(|_, _| rng.random_range(-1.0..1.0)),
        )
    }

    fn reference(rng: &mut ChaCha8Rng) -> Reference {
        Reference {
            x: Vec6::from_fn(|_, _| rng.random_range(-0.5..0.5)),
            xdot: Vec6::from_fn(|_, _| rng.random_range(-0.5..0.5)),
            xddot: Vec6::from_fn(|_, _| rng.random_range(-0.5..0.5)),
        }
    }

    #[test]
    fn critically_damped_gains() {
        let g = Gains::new(Mat6::identity(), Mat6::identity() * 2.0).unwrap();
        let f = closed_loop_matrix(&g);
        for ev in f.complex_eigenvalues().iter() {
            // Repeated root of (s + 1)²; the defective pair splits by ~√eps.
            assert!((ev.re + 1.0).abs() < 1e-6 && ev.im.abs() < 1e-6, "{ev}");
        }
    }

    #[test]
    fn undamped_gains_rejected() {
        let gp = Mat6::from_diagonal(&Vec6::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0));
        assert!(matches!(Gains::new(gp, Mat6::zeros()), Err(Error::NotHurwitz { .. })));
    }

    #[test]
    fn random_spd_gains_are_hurwitz() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let g = Gains::new(random_spd(&mut rng, 0.1), random_spd(&mut rng, 0.1)).unwrap();
            assert!(spectral_abscissa(&closed_loop_matrix(&g)) < 0.0);
        }
    }

    #[test]
    fn zero_error_zero_bias_gives_zero_command() {
        let arm = SyntheticArm::rigid(Mat6::identity() * 2.0).unwrap();
        let obj = ObjectModel::new(Mat6::identity(), Vec6::zeros(), 0.0).unwrap();
        let m = InterconnectedModel::with_identity_grasp(arm.clone(), arm, obj);
        let th = KinematicParams::new(Vec3::new(0.1, -0.2, 0.3), UnitQuaternion::identity());
        let terms = PlantTerms::evaluate(&m, &Vec6::zeros(), &Vec6::zeros(), &th).unwrap();
        let g = Gains::new(Mat6::identity(), Mat6::identity() * 2.0).unwrap();
        let cmd = control_law(&terms, m.lambda(), &Reference::default(), &th, &g).unwrap();
        assert_eq!(cmd.u1, Vec6::zeros());
        assert_eq!(cmd.u2, Vec6::zeros());
    }

    #[test]
    fn command_split_and_constraint() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = model(&mut rng);
        let g = Gains::new(Mat6::identity() * 4.0, Mat6::identity() * 4.0).unwrap();
        for _ in 0..100 {
            let th = random_theta(&mut rng, 0.5);
            let est = random_theta(&mut rng, 0.5);
            let (x, xd) = state(&mut rng);
            let terms = PlantTerms::evaluate(&m, &x, &xd, &th).unwrap();
            let cmd = control_law(&terms, m.lambda(), &reference(&mut rng), &est, &g).unwrap();
            assert!((cmd.u2 - velocity_transform(&est) * cmd.u1).amax() < 1e-12 * cmd.u1.amax().max(1.0));
            let scale = cmd.u_bar.norm().max(1.0);
            assert!((grasp_map(&est) * cmd.stacked() - cmd.u_bar).norm() < 1e-10 * scale);
            assert!((n_pseudoinverse(&est) * cmd.u_bar - cmd.stacked()).norm() < 1e-10 * scale);
        }
    }

    #[test]
    fn huge_displacement_estimate_still_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = model(&mut rng);
        let g = Gains::new(Mat6::identity(), Mat6::identity() * 2.0).unwrap();
        let th = random_theta(&mut rng, 0.5);
        for _ in 0..200 {
            let mut est = random_theta(&mut rng, 1.0);
            est.rho = est.rho.normalize() * 1e6;
            let (x, xd) = state(&mut rng);
            let terms = PlantTerms::evaluate(&m, &x, &xd, &th).unwrap();
            let cmd = control_law(&terms, m.lambda(), &reference(&mut rng), &est, &g).unwrap();
            assert!(cmd.u1.iter().chain(cmd.u2.iter()).all(|v| v.is_finite()));
        }
    }

    #[test]
    fn exact_parameters_give_zero_perturbation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = model(&mut rng);
        let g = Gains::new(Mat6::identity(), Mat6::identity() * 2.0).unwrap();
        for _ in 0..50 {
            let th = random_theta(&mut rng, 0.5);
            let (x, xd) = state(&mut rng);
            let terms = PlantTerms::evaluate(&m, &x, &xd, &th).unwrap();
            let p = perturbation_term(&terms, m.lambda(), &reference(&mut rng), &th, &th, &g).unwrap();
            assert!(p.norm() < 1e-10);
        }
    }

    #[test]
    fn closed_loop_equals_nominal_plus_perturbation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = model(&mut rng);
        let g = Gains::new(random_spd(&mut rng, 0.5), random_spd(&mut rng, 0.5)).unwrap();
        let f = closed_loop_matrix(&g);
        for _ in 0..50 {
            let th = random_theta(&mut rng, 0.5);
            let est = random_theta(&mut rng, 0.5);
            let (x, xd) = state(&mut rng);
            let r = reference(&mut rng);
            let terms = PlantTerms::evaluate(&m, &x, &xd, &th).unwrap();
            let cmd = control_law(&terms, m.lambda(), &r, &est, &g).unwrap();
            let (mbar, hbar) = terms.combined(m.lambda(), &th).unwrap();
            let xdd = mbar.lu().solve(&(grasp_map(&th) * cmd.stacked() - hbar)).unwrap();
            let err = TrackingError::new(&x, &xd, &r);
            let mut zdot = Vec12::zeros();
            zdot.fixed_rows_mut::<6>(0).copy_from(&err.edot);
            zdot.fixed_rows_mut::<6>(6).copy_from(&(xdd - r.xddot));
            let p = perturbation_term(&terms, m.lambda(), &r, &th, &est, &g).unwrap();
            assert_eq!(p.fixed_rows::<6>(0).into_owned(), Vec6::zeros());
            assert!((zdot - (f * err.z + p)).norm() < 1e-8 * zdot.norm().max(1.0));
        }
    }

    #[test]
    fn displayed_tilde_expansions_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m = model(&mut rng);
        for _ in 0..50 {
            let th = random_theta(&mut rng, 0.5);
            let est = random_theta(&mut rng, 0.5);
            let (x, xd) = state(&mut rng);
            let terms = PlantTerms::evaluate(&m, &x, &xd, &th).unwrap();
            let c = &terms.chain;
            let (t, t_hat) = (velocity_transform(&th), velocity_transform(&est));
            let t_tilde = t - t_hat;
            let np_hat = n_pseudoinverse(&est);
            let n_tilde = grasp_map(&th) * np_hat - Mat6::identity();
            let mut zt = crate::Mat6x12::zeros();
            zt.fixed_view_mut::<6, 6>(0, 6).copy_from(&t_tilde.transpose());
            assert!((n_tilde - zt * np_hat).amax() < 1e-10);

            let (mbar, hbar) = terms.combined(m.lambda(), &th).unwrap();
            let (mhat, hhat) = terms.combined(m.lambda(), &est).unwrap();
            let m_tilde = (t_tilde.transpose() * terms.m2 * c.l2 * t + t_hat.transpose() * terms.m2 * c.l2 * t_tilde)
                * c.l1_inv
                * m.lambda();
            assert!((mbar - mhat - m_tilde).amax() < 1e-10);
            let d = d_matrix(&c.l1, &c.l1_dot, &c.l2, &c.l2_dot, &t).unwrap();
            let d_hat = d_matrix(&c.l1, &c.l1_dot, &c.l2, &c.l2_dot, &t_hat).unwrap();
            let lx = m.lambda() * xd;
            let h_tilde = t_tilde.transpose() * (terms.h2 + terms.m2 * d_hat * lx)
                + t.transpose() * terms.m2 * (d - d_hat) * lx;
            assert!((hbar - hhat - h_tilde).norm() < 1e-10);
            assert!(q_matrix(&est.rho).symmetric_eigenvalues().min() >= 1.0 - 1e-12);
        }
    }
}
