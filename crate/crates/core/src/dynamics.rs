//! Task-space arm and object dynamics and the reduced-order model of the
//! closed chain.
//!
//! Arm `i` obeys `M_i ẍ_i + h_i = u_i − f_i`, the object `M_o ẍ + h_o =
//! f₁ + Tᵀf₂`. Eliminating the grasp forces with `ẋ₁ = Λẋ` and
//! `ẋ₂ = L₂TL₁⁻¹ẋ₁` gives `M̄ẍ + h̄ = N u`.
//!
//! Arm 2's configuration is treated as measured: its pose, `L₂` and `L̇₂`
//! come from the true chain ([`ChainState`]) and are shared by the plant and
//! by the controller's estimated model. Only `T(θ)` carries the unknown
//! parameters.

use crate::linalg::{condition_number, symmetrize};
use crate::rigidmotion::{
    euler_xyz_from_rotation, orientation_rates, representation_matrix, rotation_from_euler_xyz,
    skew, velocity_transform, KinematicParams,
};
use crate::{Error, Mat3, Mat6, Mat6x12, Mat12x6, Result, Vec3, Vec6};
#[allow(unused_imports)]
use nalgebra::ComplexField;

/// Jacobians with a larger 2-norm condition number are treated as singular.
pub const MAX_JACOBIAN_CONDITION: f64 = 1e8;

/// Configuration-dependent inertia and bias of a body in task space.
pub trait TaskSpaceDynamics {
    fn mass_matrix(&self, x: &Vec6) -> Mat6;
    fn bias(&self, x: &Vec6, xdot: &Vec6) -> Vec6;
}

/// Synthetic arm in task space:
/// `M(x) = M₀ + ε·s sᵀ` with `s_k = sin(x_k + φ_k)/√6`, and
/// `h(x, ẋ) = g + c‖ẋ‖ẋ`.
///
/// Since `‖s‖ ≤ 1`, `λ_min(M₀)·I ≤ M ≤ (λ_max(M₀) + ε)·I` and
/// `‖h‖ ≤ ‖g‖ + c‖ẋ‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticArm {
    pub base_mass: Mat6,
    pub modulation: f64,
    pub phase: Vec6,
    pub gravity: Vec6,
    pub quadratic_drag: f64,
}

impl SyntheticArm {
    pub fn new(base_mass: Mat6, modulation: f64, phase: Vec6, gravity: Vec6, quadratic_drag: f64) -> Result<Self> {
        if !crate::linalg::is_spd(&base_mass, 1e-12) {
            return Err(Error::InvalidConfig("arm base mass matrix must be symmetric positive definite".into()));
        }
        if !(modulation >= 0.0) || !(quadratic_drag >= 0.0) {
            return Err(Error::InvalidConfig("arm modulation and drag must be non-negative".into()));
        }
        Ok(Self { base_mass, modulation, phase, gravity, quadratic_drag })
    }

    /// Constant inertia, no bias.
    pub fn rigid(mass: Mat6) -> Result<Self> {
        Self::new(mass, 0.0, Vec6::zeros(), Vec6::zeros(), 0.0)
    }

    /// Declared `(c_m, c_M, c_g, c_h)` for this arm.
    pub fn declared_bounds(&self) -> (f64, f64, f64, f64) {
        let eig = self.base_mass.symmetric_eigenvalues();
        (eig.min(), eig.max() + self.modulation, self.gravity.norm(), self.quadratic_drag)
    }
}

impl TaskSpaceDynamics for SyntheticArm {
    fn mass_matrix(&self, x: &Vec6) -> Mat6 {
        let scale = 1.0 / 6.0f64.sqrt();
        let s = Vec6::from_fn(|k, _| (x[k] + self.phase[k]).sin() * scale);
        self.base_mass + s * s.transpose() * self.modulation
    }

    fn bias(&self, _x: &Vec6, xdot: &Vec6) -> Vec6 {
        self.gravity + xdot * (self.quadratic_drag * xdot.norm())
    }
}

/// Rigid object: constant inertia, gravity wrench and quadratic drag.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectModel {
    pub mass_matrix: Mat6,
    pub gravity: Vec6,
    pub quadratic_drag: f64,
}

impl ObjectModel {
    pub fn new(mass_matrix: Mat6, gravity: Vec6, quadratic_drag: f64) -> Result<Self> {
        if !crate::linalg::is_spd(&mass_matrix, 1e-12) {
            return Err(Error::InvalidConfig("object mass matrix must be symmetric positive definite".into()));
        }
        if !(quadratic_drag >= 0.0) {
            return Err(Error::InvalidConfig("object drag must be non-negative".into()));
        }
        Ok(Self { mass_matrix, gravity, quadratic_drag })
    }
}

impl TaskSpaceDynamics for ObjectModel {
    fn mass_matrix(&self, _x: &Vec6) -> Mat6 {
        self.mass_matrix
    }

    fn bias(&self, _x: &Vec6, xdot: &Vec6) -> Vec6 {
        self.gravity + xdot * (self.quadratic_drag * xdot.norm())
    }
}

/// Object plus two arms, with `ẋ₁ = Λẋ`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterconnectedModel {
    pub arm1: SyntheticArm,
    pub arm2: SyntheticArm,
    pub object: ObjectModel,
    lambda: Mat6,
}

impl InterconnectedModel {
    pub fn new(arm1: SyntheticArm, arm2: SyntheticArm, object: ObjectModel, lambda: Mat6) -> Result<Self> {
        if !(condition_number(&lambda) < 1e12) {
            return Err(Error::InvalidConfig("grasp transform Lambda must be invertible".into()));
        }
        Ok(Self { arm1, arm2, object, lambda })
    }

    pub fn with_identity_grasp(arm1: SyntheticArm, arm2: SyntheticArm, object: ObjectModel) -> Self {
        Self { arm1, arm2, object, lambda: Mat6::identity() }
    }

    pub fn lambda(&self) -> &Mat6 {
        &self.lambda
    }
}

/// Representation matrices and arm configurations of the physical chain
/// for one object state.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub x: Vec6,
    pub xdot: Vec6,
    pub x1: Vec6,
    pub x1dot: Vec6,
    pub x2: Vec6,
    pub x2dot: Vec6,
    pub l1: Mat6,
    pub l1_dot: Mat6,
    pub l2: Mat6,
    pub l2_dot: Mat6,
    pub l1_inv: Mat6,
}

impl ChainState {
    /// Arm 1 sits at `x₁ = Λx`. Arm 2's orientation is `R₂ = R₁A(η)` so its
    /// body rate is `Aᵀω₁`, matching the angular block of `T(θ)`; its
    /// position coordinates are taken equal to arm 1's.
    pub fn evaluate(model: &InterconnectedModel, x: &Vec6, xdot: &Vec6, theta_true: &KinematicParams) -> Result<Self> {
        let x1 = model.lambda * x;
        let x1dot = model.lambda * xdot;
        let (l1, l1_dot) = representation_matrix(&x1, &x1dot)?;
        let l1_inv = l1.try_inverse().ok_or(Error::SingularL)?;
        let twist1 = l1_inv * x1dot;

        let euler1 = x1.fixed_rows::<3>(3).into_owned();
        let a = theta_true.eta.rotation_matrix();
        let euler2 = euler_xyz_from_rotation(&(rotation_from_euler_xyz(&euler1) * a));
        let mut x2 = x1;
        x2.fixed_rows_mut::<3>(3).copy_from(&euler2);
        let (l2_probe, _) = representation_matrix(&x2, &Vec6::zeros())?;

        let twist2 = velocity_transform(theta_true) * twist1;
        let x2dot = l2_probe * twist2;
        let (l2, l2_dot) = representation_matrix(&x2, &x2dot)?;
        Ok(Self { x: *x, xdot: *xdot, x1, x1dot, x2, x2dot, l1, l1_dot, l2, l2_dot, l1_inv })
    }
}

/// Body terms of the chain at one state, independent of any parameter
/// estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantTerms {
    pub chain: ChainState,
    pub m_o: Mat6,
    pub h_o: Vec6,
    pub m1: Mat6,
    pub h1: Vec6,
    pub m2: Mat6,
    pub h2: Vec6,
}

impl PlantTerms {
    pub fn evaluate(model: &InterconnectedModel, x: &Vec6, xdot: &Vec6, theta_true: &KinematicParams) -> Result<Self> {
        let chain = ChainState::evaluate(model, x, xdot, theta_true)?;
        Ok(Self {
            m_o: model.object.mass_matrix(x),
            h_o: model.object.bias(x, xdot),
            m1: model.arm1.mass_matrix(&chain.x1),
            h1: model.arm1.bias(&chain.x1, &chain.x1dot),
            m2: model.arm2.mass_matrix(&chain.x2),
            h2: model.arm2.bias(&chain.x2, &chain.x2dot),
            chain,
        })
    }

    /// `(M̄, h̄)` evaluated with parameters `theta`.
    pub fn combined(&self, lambda: &Mat6, theta: &KinematicParams) -> Result<(Mat6, Vec6)> {
        let c = &self.chain;
        let t = velocity_transform(theta);
        let d = d_matrix(&c.l1, &c.l1_dot, &c.l2, &c.l2_dot, &t)?;
        let m_bar = self.m_o + (self.m1 + t.transpose() * self.m2 * c.l2 * t * c.l1_inv) * lambda;
        let h_bar = self.h_o + self.h1 + t.transpose() * (self.h2 + self.m2 * d * lambda * c.xdot);
        Ok((m_bar, h_bar))
    }
}

/// `M̄ = M_o + (M₁ + TᵀM₂L₂TL₁⁻¹)Λ` and `h̄ = h_o + h₁ + Tᵀ(h₂ + M₂DΛẋ)`.
pub fn combined_dynamics(
    model: &InterconnectedModel,
    x: &Vec6,
    xdot: &Vec6,
    theta_true: &KinematicParams,
    theta: &KinematicParams,
) -> Result<(Mat6, Vec6)> {
    PlantTerms::evaluate(model, x, xdot, theta_true)?.combined(&model.lambda, theta)
}

/// Joint-space quantities of one arm at one instant (`n = 6`).
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpaceSnapshot {
    pub m_prime: Mat6,
    pub h_prime: Vec6,
    pub jacobian: Mat6,
    pub jacobian_dot: Mat6,
    pub qdot: Vec6,
}

/// `M = J⁻ᵀM′J⁻¹`, `h = J⁻ᵀh′ − M J̇ q̇`.
pub fn task_space_from_joint(s: &JointSpaceSnapshot) -> Result<(Mat6, Vec6)> {
    let condition = condition_number(&s.jacobian);
    if !(condition < MAX_JACOBIAN_CONDITION) {
        return Err(Error::NearSingularJacobian { condition });
    }
    let j_inv = s.jacobian.try_inverse().ok_or(Error::NearSingularJacobian { condition })?;
    let m = symmetrize(&(j_inv.transpose() * s.m_prime * j_inv));
    let h = j_inv.transpose() * s.h_prime - m * s.jacobian_dot * s.qdot;
    Ok((m, h))
}

/// `N(θ) = [I, T(θ)ᵀ]`.
pub fn grasp_map(theta: &KinematicParams) -> Mat6x12 {
    let mut n = Mat6x12::zeros();
    n.fixed_view_mut::<6, 6>(0, 0).copy_from(&Mat6::identity());
    n.fixed_view_mut::<6, 6>(0, 6).copy_from(&velocity_transform(theta).transpose());
    n
}

/// `Q(ρ) = N Nᵀ = [2I, [ρ×]; −[ρ×], 2I − [ρ×]²]`.
pub fn q_matrix(rho: &Vec3) -> Mat6 {
    let s = skew(rho);
    let mut q = Mat6::zeros();
    q.fixed_view_mut::<3, 3>(0, 0).copy_from(&(Mat3::identity() * 2.0));
    q.fixed_view_mut::<3, 3>(0, 3).copy_from(&s);
    q.fixed_view_mut::<3, 3>(3, 0).copy_from(&(-s));
    q.fixed_view_mut::<3, 3>(3, 3).copy_from(&(Mat3::identity() * 2.0 - s * s));
    q
}

/// Smallest eigenvalue of `Q(ρ)` in closed form.
///
/// The spectrum is `{2, 2}` along `ρ` and the pair roots of
/// `λ² − (4 + r²)λ + 4 + r² = 0`, each twice, in the orthogonal plane. The
/// small root is evaluated as `2c/(c + √(c r²))`, `c = 4 + r²`, to avoid
/// cancellation for large `r = ‖ρ‖`.
pub fn q_min_eigenvalue(rho: &Vec3) -> f64 {
    let r2 = rho.norm_squared();
    let c = 4.0 + r2;
    let small = 2.0 * c / (c + (c * r2).sqrt());
    small.min(2.0)
}

/// `Q(ρ)⁻¹`. `Q ⪰ I`, so the Cholesky factorisation always exists for
/// finite `ρ`.
pub fn q_inverse(rho: &Vec3) -> Mat6 {
    let q = q_matrix(rho);
    match q.cholesky() {
        Some(c) => c.inverse(),
        None => q.lu().try_inverse().unwrap_or_else(|| Mat6::identity() * f64::NAN),
    }
}

/// `N⁺ = Nᵀ(NNᵀ)⁻¹ = [Q⁻¹; T Q⁻¹]`.
pub fn n_pseudoinverse(theta: &KinematicParams) -> Mat12x6 {
    let q_inv = q_inverse(&theta.rho);
    let mut np = Mat12x6::zeros();
    np.fixed_view_mut::<6, 6>(0, 0).copy_from(&q_inv);
    np.fixed_view_mut::<6, 6>(6, 0).copy_from(&(velocity_transform(theta) * q_inv));
    np
}

/// `D = (L̇₂T − L₂TL₁⁻¹L̇₁)L₁⁻¹`, the time derivative of `L₂TL₁⁻¹` for
/// constant `T`, so that `ẍ₂ = L₂TL₁⁻¹ẍ₁ + Dẋ₁`.
pub fn d_matrix(l1: &Mat6, l1_dot: &Mat6, l2: &Mat6, l2_dot: &Mat6, t: &Mat6) -> Result<Mat6> {
    let l1_inv = l1.try_inverse().ok_or(Error::SingularL)?;
    if !l1_inv.iter().all(|v| v.is_finite()) {
        return Err(Error::SingularL);
    }
    Ok((l2_dot * t - l2 * t * l1_inv * l1_dot) * l1_inv)
}

/// Checks `orientation_rates` is defined at the middle angle of `euler`.
pub fn representation_is_regular(euler: &Vec3) -> bool {
    orientation_rates(euler, &Vec3::zeros()).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rigidmotion::UnitQuaternion;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_theta(rng: &mut ChaCha8Rng, rho_scale: f64) -> KinematicParams {
        let q = crate::Vec4::from_fn(|_, _| rng.random_range(-1.0..1.0));
        KinematicParams::new(
            Vec3::from_fn(|_, _| rng.random_range(-rho_scale..rho_scale)),
            UnitQuaternion::from_vector4(&q).unwrap(),
        )
    }

    fn random_spd(rng: &mut ChaCha8Rng, floor: f64) -> Mat6 {
        let a = Mat6::from_fn(|_, _| rng.random_range(-1.0..1.0));
        a * a.transpose() + Mat6::identity() * floor
    }

    fn test_model(rng: &mut ChaCha8Rng) -> InterconnectedModel {
        let arm = |rng: &mut ChaCha8Rng| {
            SyntheticArm::new(
                random_spd(rng, 1.0),
                0.5,
                Vec6::from_fn(|_, _| rng.random_range(0.0..3.0)),
                Vec6::from_fn(|_, _| rng.random_range(-5.0..5.0)),
                0.3,
            )
            .unwrap()
        };
        let a1 = arm(rng);
        let a2 = arm(rng);
        let obj = ObjectModel::new(random_spd(rng, 2.0), Vec6::new(0.0, 0.0, -9.81, 0.0, 0.0, 0.0), 0.1).unwrap();
        InterconnectedModel::with_identity_grasp(a1, a2, obj)
    }

    #[test]
    fn joint_mapping_identity_and_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mp = random_spd(&mut rng, 1.0);
        let hp = Vec6::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let s = JointSpaceSnapshot {
            m_prime: mp,
            h_prime: hp,
            jacobian: Mat6::identity(),
            jacobian_dot: Mat6::zeros(),
            qdot: Vec6::repeat(0.3),
        };
        let (m, h) = task_space_from_joint(&s).unwrap();
        assert!((m - mp).amax() < 1e-15);
        assert_eq!(h, hp);

        let s = JointSpaceSnapshot { m_prime: Mat6::identity(), jacobian: Mat6::identity() * 2.0, ..s };
        let (m, _) = task_space_from_joint(&s).unwrap();
        assert!((m - Mat6::identity() / 4.0).amax() < 1e-15);
    }

    #[test]
    fn joint_mapping_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let jac = Mat6::from_fn(|_, _| rng.random_range(-1.0..1.0)) + Mat6::identity() * 2.0;
            let s = JointSpaceSnapshot {
                m_prime: random_spd(&mut rng, 0.5),
                h_prime: Vec6::from_fn(|_, _| rng.random_range(-1.0..1.0)),
                jacobian: jac,
                jacobian_dot: Mat6::from_fn(|_, _| rng.random_range(-1.0..1.0)),
                qdot: Vec6::from_fn(|_, _| rng.random_range(-1.0..1.0)),
            };
            let (m, h) = task_space_from_joint(&s).unwrap();
            // Joint-space torque for an arbitrary joint acceleration, then the
            // task-space equation with u = J⁻ᵀτ and ẍ = Jq̈ + J̇q̇.
            let qdd = Vec6::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let tau = s.m_prime * qdd + s.h_prime;
            let xdd = jac * qdd + s.jacobian_dot * s.qdot;
            let u = jac.transpose().lu().solve(&tau).unwrap();
            assert!((m * xdd + h - u).norm() < 1e-9);
            assert!(m.cholesky().is_some());
        }
    }

    #[test]
    fn singular_jacobian_rejected() {
        let mut jac = Mat6::identity();
        jac[(5, 5)] = 1e-12;
        let s = JointSpaceSnapshot {
            m_prime: Mat6::identity(),
            h_prime: Vec6::zeros(),
            jacobian: jac,
            jacobian_dot: Mat6::zeros(),
            qdot: Vec6::zeros(),
        };
        assert!(matches!(task_space_from_joint(&s), Err(Error::NearSingularJacobian { .. })));
    }

    #[test]
    fn grasp_map_identity_and_rank() {
        let n = grasp_map(&KinematicParams::identity());
        let mut expected = Mat6x12::zeros();
        expected.fixed_view_mut::<6, 6>(0, 0).fill_with_identity();
        expected.fixed_view_mut::<6, 6>(0, 6).fill_with_identity();
        assert_eq!(n, expected);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let n = grasp_map(&random_theta(&mut rng, 2.0));
            assert!(n.singular_values().min() >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn grasp_map_consistent_with_command_split() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let th = random_theta(&mut rng, 1.0);
        let t = velocity_transform(&th);
        let u1 = Vec6::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let mut u = crate::Vec12::zeros();
        u.fixed_rows_mut::<6>(0).copy_from(&u1);
        u.fixed_rows_mut::<6>(6).copy_from(&(t * u1));
        assert!((grasp_map(&th) * u - q_matrix(&th.rho) * u1).norm() < 1e-12);
    }

    #[test]
    fn q_matrix_at_zero_and_unit_x() {
        assert_eq!(q_matrix(&Vec3::zeros()), Mat6::identity() * 2.0);
        let eig = q_matrix(&Vec3::x()).symmetric_eigenvalues();
        let mut got: std::vec::Vec<f64> = eig.iter().copied().collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Roots of λ² − 5λ + 5 = 0, each twice, and 2 twice.
        let (lo, hi) = ((5.0 - 5f64.sqrt()) / 2.0, (5.0 + 5f64.sqrt()) / 2.0);
        let expected = [lo, lo, 2.0, 2.0, hi, hi];
        for (g, e) in got.iter().zip(expected.iter()) {
            assert!((g - e).abs() < 1e-12, "{got:?}");
        }
        assert!((q_min_eigenvalue(&Vec3::x()) - lo).abs() < 1e-15);
    }

    #[test]
    fn pseudoinverse_at_identity() {
        let np = n_pseudoinverse(&KinematicParams::identity());
        let mut expected = Mat12x6::zeros();
        expected.fixed_view_mut::<6, 6>(0, 0).copy_from(&(Mat6::identity() * 0.5));
        expected.fixed_view_mut::<6, 6>(6, 0).copy_from(&(Mat6::identity() * 0.5));
        assert!((np - expected).amax() < 1e-15);
    }

    #[test]
    fn pseudoinverse_is_minimum_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let th = random_theta(&mut rng, 1.0);
        let n = grasp_map(&th);
        let np = n_pseudoinverse(&th);
        let ubar = Vec6::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let base = np * ubar;
        let proj = crate::Mat12::identity() - np * n;
        for _ in 0..1000 {
            let w = crate::Vec12::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let other = base + proj * w;
            assert!((n * other - ubar).norm() < 1e-10);
            assert!(base.norm() <= other.norm() + 1e-12);
        }
    }

    #[test]
    fn d_matrix_hand_cases() {
        let t = Mat6::identity();
        let z = Mat6::zeros();
        assert_eq!(d_matrix(&t, &z, &t, &z, &t).unwrap(), z);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let l1_dot = Mat6::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let d = d_matrix(&t, &l1_dot, &t, &t, &t).unwrap();
        assert!((d - (Mat6::identity() - l1_dot)).amax() < 1e-15);
        assert_eq!(d_matrix(&z, &z, &t, &z, &t), Err(Error::SingularL));
    }

    #[test]
    fn d_matrix_matches_finite_difference_along_motion() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let model = test_model(&mut rng);
        let th = random_theta(&mut rng, 0.5);
        let t = velocity_transform(&th);
        // Smooth object motion x(τ) with analytic velocity.
        let x_of = |tau: f64| {
            Vec6::new(tau.sin(), 0.3 * tau, tau.cos(), 0.4 * (1.3 * tau).sin(), 0.3 * (0.7 * tau).cos(), 0.5 * tau)
        };
        let xd_of = |tau: f64| {
            Vec6::new(
                tau.cos(),
                0.3,
                -tau.sin(),
                0.52 * (1.3 * tau).cos(),
                -0.21 * (0.7 * tau).sin(),
                0.5,
            )
        };
        let map = |tau: f64| {
            let c = ChainState::evaluate(&model, &x_of(tau), &xd_of(tau), &th).unwrap();
            c.l2 * t * c.l1_inv
        };
        for &tau in &[0.1, 0.7, 1.9] {
            let c = ChainState::evaluate(&model, &x_of(tau), &xd_of(tau), &th).unwrap();
            let d = d_matrix(&c.l1, &c.l1_dot, &c.l2, &c.l2_dot, &t).unwrap();
            let h = 1e-5;
            let fd = (map(tau + h) - map(tau - h)) / (2.0 * h);
            assert!(((fd - d) * c.x1dot).norm() < 1e-5, "{}", ((fd - d) * c.x1dot).norm());
        }
    }

    #[test]
    fn combined_dynamics_identity_case() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let model = test_model(&mut rng);
        let id = KinematicParams::identity();
        let x = Vec6::zeros();
        let (mbar, hbar) = combined_dynamics(&model, &x, &Vec6::zeros(), &id, &id).unwrap();
        let expected = model.object.mass_matrix(&x) + model.arm1.mass_matrix(&x) + model.arm2.mass_matrix(&x);
        assert!((mbar - expected).amax() < 1e-12);
        let hexp = model.object.gravity + model.arm1.gravity + model.arm2.gravity;
        assert!((hbar - hexp).norm() < 1e-12);
    }

    #[test]
    fn zero_velocity_bias_has_no_coupling_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let model = test_model(&mut rng);
        let th = random_theta(&mut rng, 0.5);
        let est = random_theta(&mut rng, 0.5);
        let x = Vec6::new(0.1, 0.2, 0.3, 0.2, -0.3, 0.4);
        let terms = PlantTerms::evaluate(&model, &x, &Vec6::zeros(), &th).unwrap();
        let (_, hbar) = terms.combined(model.lambda(), &est).unwrap();
        let t = velocity_transform(&est);
        assert!((hbar - (terms.h_o + terms.h1 + t.transpose() * terms.h2)).norm() < 1e-12);
    }

    #[test]
    fn free_motion_preserves_weighted_velocity() {
        // Constant inertia, no bias, pure translation: L stays fixed, D = 0 and
        // ū = 0 leaves ẋᵀM̄ẋ unchanged under RK4 at dt = 1e-4.
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let arm1 = SyntheticArm::rigid(random_spd(&mut rng, 1.0)).unwrap();
        let arm2 = SyntheticArm::rigid(random_spd(&mut rng, 1.0)).unwrap();
        let obj = ObjectModel::new(random_spd(&mut rng, 1.0), Vec6::zeros(), 0.0).unwrap();
        let model = InterconnectedModel::with_identity_grasp(arm1, arm2, obj);
        let th = random_theta(&mut rng, 0.5);
        let accel = |x: &Vec6, v: &Vec6| {
            let (m, h) = combined_dynamics(&model, x, v, &th, &th).unwrap();
            m.lu().solve(&(-h)).unwrap()
        };
        let mut x = Vec6::new(0.0, 0.0, 0.0, 0.2, 0.1, -0.3);
        let mut v = Vec6::new(0.5, -0.2, 0.1, 0.0, 0.0, 0.0);
        let energy = |x: &Vec6, v: &Vec6| {
            let (m, _) = combined_dynamics(&model, x, v, &th, &th).unwrap();
            (v.transpose() * m * v)[0]
        };
        let e0 = energy(&x, &v);
        let dt = 1e-4;
        for _ in 0..1000 {
            let k1v = accel(&x, &v);
            let k1x = v;
            let k2v = accel(&(x + k1x * dt / 2.0), &(v + k1v * dt / 2.0));
            let k2x = v + k1v * dt / 2.0;
            let k3v = accel(&(x + k2x * dt / 2.0), &(v + k2v * dt / 2.0));
            let k3x = v + k2v * dt / 2.0;
            let k4v = accel(&(x + k3x * dt), &(v + k3v * dt));
            let k4x = v + k3v * dt;
            x += (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * dt / 6.0;
            v += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * dt / 6.0;
        }
        assert!((energy(&x, &v) - e0).abs() < 1e-10 * e0.max(1.0));
    }

    #[test]
    fn synthetic_arm_respects_declared_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let model = test_model(&mut rng);
        let (cm, cmax, cg, ch) = model.arm1.declared_bounds();
        for _ in 0..2000 {
            let x = Vec6::from_fn(|_, _| rng.random_range(-4.0..4.0));
            let v = Vec6::from_fn(|_, _| rng.random_range(-3.0..3.0));
            let eig = model.arm1.mass_matrix(&x).symmetric_eigenvalues();
            assert!(eig.min() >= cm - 1e-12 && eig.max() <= cmax + 1e-12);
            assert!(model.arm1.bias(&x, &v).norm() <= cg + ch * v.norm_squared() + 1e-12);
        }
    }

    #[test]
    fn invalid_models_rejected() {
        let bad = Mat6::from_diagonal(&Vec6::new(1.0, 1.0, 1.0, 1.0, 1.0, -1.0));
        assert!(SyntheticArm::rigid(bad).is_err());
        assert!(ObjectModel::new(bad, Vec6::zeros(), 0.0).is_err());
        let a = SyntheticArm::rigid(Mat6::identity()).unwrap();
        let o = ObjectModel::new(Mat6::identity(), Vec6::zeros(), 0.0).unwrap();
        assert!(InterconnectedModel::new(a.clone(), a, o, Mat6::zeros()).is_err());
    }

    proptest! {
        #[test]
        fn q_equals_identity_plus_t_transpose_t(
            rho in prop::array::uniform3(-10.0f64..10.0),
            q in prop::array::uniform4(-1.0f64..1.0),
        ) {
            prop_assume!(q.iter().map(|c| c * c).sum::<f64>() > 1e-6);
            let th = KinematicParams::new(
                Vec3::from(rho),
                UnitQuaternion::from_vector4(&crate::Vec4::from(q)).unwrap(),
            );
            let t = velocity_transform(&th);
            let q = q_matrix(&th.rho);
            prop_assert!((q - (Mat6::identity() + t.transpose() * t)).amax() < 1e-10 * (1.0 + th.rho.norm_squared()));
            prop_assert!(q.symmetric_eigenvalues().min() >= 1.0 - 1e-10 * (1.0 + th.rho.norm_squared()));
            prop_assert!((q_min_eigenvalue(&th.rho) - q.symmetric_eigenvalues().min()).abs() < 1e-12 * (4.0 + th.rho.norm_squared()));
            let np = n_pseudoinverse(&th);
            prop_assert!((grasp_map(&th) * np - Mat6::identity()).amax() < 1e-10);
        }
    }
}
