use crate::dynamics::ChainState;
use crate::rigidmotion::{transform_twist, KinematicParams, Twist};
use crate::{Error, Result, Vec3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Additive zero-mean Gaussian noise on the measured twists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// m/s, applied to each linear channel of both twists.
    pub linear_std: f64,
    /// rad/s, applied to each angular channel of both twists.
    pub angular_std: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn noiseless(seed: u64) -> Self {
        Self { linear_std: 0.0, angular_std: 0.0, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.linear_std >= 0.0 && self.linear_std.is_finite())
            || !(self.angular_std >= 0.0 && self.angular_std.is_finite())
        {
            return Err(Error::InvalidConfig("noise standard deviations must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.linear_std == 0.0 && self.angular_std == 0.0
    }
}

/// Seeded noise generator. Nothing is drawn while the spec is noiseless.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    spec: NoiseSpec,
    rng: ChaCha8Rng,
}

impl NoiseSource {
    pub fn new(spec: NoiseSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec, rng: ChaCha8Rng::seed_from_u64(spec.seed) })
    }

    pub fn spec(&self) -> &NoiseSpec {
        &self.spec
    }

    fn draw(&mut self, std: f64) -> Vec3 {
        if std == 0.0 {
            return Vec3::zeros();
        }
        // std is validated finite and positive here.
        let normal = Normal::new(0.0, std).expect("valid standard deviation");
        Vec3::from_fn(|_, _| normal.sample(&mut self.rng))
    }

    fn corrupt(&mut self, t: &Twist) -> Twist {
        let dv = self.draw(self.spec.linear_std);
        let dw = self.draw(self.spec.angular_std);
        Twist::new(t.linear + dv, t.angular + dw)
    }
}

/// Grasp-1 twist of the chain, `L₁⁻¹ẋ₁` with `ẋ₁ = Λẋ`.
pub fn grasp_twist(chain: &ChainState) -> Twist {
    Twist::from_vector6(&(chain.l1_inv * chain.x1dot))
}

/// Measured `(twist₁, twist₂)`: `twist₂ = transform_twist(θ, twist₁)` from
/// the noiseless pair, then independent noise on each.
pub fn synthesize_twists(chain: &ChainState, theta_true: &KinematicParams, noise: &mut NoiseSource) -> (Twist, Twist) {
    let t1 = grasp_twist(chain);
    let t2 = transform_twist(theta_true, &t1);
    (noise.corrupt(&t1), noise.corrupt(&t2))
}
