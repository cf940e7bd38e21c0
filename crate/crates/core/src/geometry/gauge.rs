use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::biorth::BiorthFrame;
use crate::error::{Error, Result};
use crate::linalg::C64;

/// Per-vertex nonzero factors `f_k` for `psi -> f psi`, `phi -> phi / conj(f)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeAssignment {
    factors: Vec<C64>,
}

impl GaugeAssignment {
    pub fn new(factors: Vec<C64>) -> Result<Self> {
        if let Some(index) = factors.iter().position(|f| !(f.norm() > 0.0) || !f.norm().is_finite()) {
            return Err(Error::ZeroFactor { index });
        }
        Ok(GaugeAssignment { factors })
    }

    pub fn identity(len: usize) -> Self {
        GaugeAssignment { factors: vec![C64::new(1.0, 0.0); len] }
    }

    /// Factors with `|f| in [min_modulus, max_modulus]` (log-uniform) and uniform phase.
    pub fn random(len: usize, min_modulus: f64, max_modulus: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = (min_modulus.ln(), max_modulus.ln());
        let factors = (0..len)
            .map(|_| {
                let m = if hi > lo { rng.random_range(lo..hi).exp() } else { min_modulus };
                C64::from_polar(m, rng.random_range(0.0..TAU))
            })
            .collect();
        GaugeAssignment { factors }
    }

    pub fn factors(&self) -> &[C64] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }
}

/// Re-gauges band `j` of every frame in the sequence.
pub fn apply_gauge(frames: &[BiorthFrame], gauge: &GaugeAssignment, j: usize) -> Result<Vec<BiorthFrame>> {
    if frames.len() != gauge.len() {
        return Err(Error::DimensionMismatch { expected: frames.len(), got: gauge.len() });
    }
    frames
        .iter()
        .zip(gauge.factors())
        .enumerate()
        .map(|(k, (f, g))| f.with_band_gauge(j, *g).map_err(|_| Error::ZeroFactor { index: k }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_factor_rejected() {
        let err = GaugeAssignment::new(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::ZeroFactor { index: 1 }));
    }

    #[test]
    fn random_is_seeded_and_bounded() {
        let a = GaugeAssignment::random(50, 0.5, 2.0, 7);
        assert_eq!(a, GaugeAssignment::random(50, 0.5, 2.0, 7));
        assert!(a.factors().iter().all(|f| f.norm() >= 0.5 - 1e-12 && f.norm() <= 2.0 + 1e-12));
    }
}
