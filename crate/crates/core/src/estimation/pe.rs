use crate::rigidmotion::skew;
use crate::{Error, Mat3, Result, Vec3};
use alloc::collections::VecDeque;

/// `Π = Σ −[ωᵢ×]²` over the given samples.
pub fn pe_matrix<'a>(samples: impl IntoIterator<Item = &'a Vec3>) -> Mat3 {
    samples.into_iter().fold(Mat3::zeros(), |acc, w| {
        let s = skew(w);
        acc - s * s
    })
}

/// Sliding window of the most recent `ω₂` samples for the persistent
/// excitation test `λ_min(Π) > threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeWindow {
    samples: VecDeque<Vec3>,
    capacity: usize,
    threshold: f64,
}

impl PeWindow {
    pub fn new(capacity: usize, threshold: f64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidConfig("PE window length must be positive".into()));
        }
        if !(threshold > 0.0) || !threshold.is_finite() {
            return Err(Error::InvalidConfig("PE threshold must be positive".into()));
        }
        Ok(Self { samples: VecDeque::with_capacity(capacity), capacity, threshold })
    }

    pub fn push(&mut self, w2: Vec3) {
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back(w2);
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// `Π` over the window and its smallest eigenvalue.
    pub fn check(&self) -> (Mat3, f64) {
        let pi = pe_matrix(self.samples.iter());
        let lambda_min = pi.symmetric_eigenvalues().min();
        (pi, lambda_min)
    }

    pub fn is_exciting(&self) -> bool {
        self.check().1 > self.threshold
    }
}
