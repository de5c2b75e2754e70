use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::PrivacyError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianNoiseSpec {
    pub sigma: f64,
    pub dim: usize,
}

impl GaussianNoiseSpec {
    pub fn new(sigma: f64, dim: usize) -> Result<Self, PrivacyError> {
        if !(sigma >= 0.0) || sigma.is_infinite() {
            return Err(PrivacyError::Domain(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        if dim == 0 {
            return Err(PrivacyError::Domain("noise dimension must be at least 1".into()));
        }
        Ok(Self { sigma, dim })
    }
}

/// i.i.d. `N(0, σ²)` coordinates.
pub fn gaussian_vector<R: Rng + ?Sized>(dim: usize, sigma: f64, rng: &mut R) -> Vec<f64> {
    (0..dim)
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

pub fn gaussian_scalar<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> f64 {
    sigma * rng.sample::<f64, _>(StandardNormal)
}

/// SplitMix64 finaliser; used to derive independent per-trial streams.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic seed for stream `path` under `master`. Stable across
/// platforms and releases (unlike `std::hash`).
pub fn stream_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(master), |acc, p| mix64(acc ^ mix64(*p)))
}

/// The single source of randomness handed to an optimizer run.
///
/// In noiseless mode every draw is still taken from the generator (so the
/// stream position matches a noisy run) but is multiplied by zero.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    rng: ChaCha8Rng,
    noiseless: bool,
}

impl NoiseSource {
    pub fn new(seed: u64, noiseless: bool) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            noiseless,
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.noiseless
    }

    fn effective(&self, sigma: f64) -> f64 {
        if self.noiseless {
            0.0
        } else {
            sigma
        }
    }

    pub fn vector(&mut self, spec: GaussianNoiseSpec) -> Vec<f64> {
        let s = self.effective(spec.sigma);
        gaussian_vector(spec.dim, s, &mut self.rng)
    }

    /// Adds `N(0, σ² I)` to `target` in place.
    pub fn perturb(&mut self, target: &mut [f64], sigma: f64) {
        let s = self.effective(sigma);
        for x in target.iter_mut() {
            *x += s * self.rng.sample::<f64, _>(StandardNormal);
        }
    }

    pub fn scalar(&mut self, sigma: f64) -> f64 {
        let s = self.effective(sigma);
        gaussian_scalar(s, &mut self.rng)
    }

    /// Raw generator for mechanisms that are not additive noise (selection).
    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}
