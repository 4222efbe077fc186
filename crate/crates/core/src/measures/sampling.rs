use crate::error::{Error, Result};
use crate::spectral::{bracket, SpectralField};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Attempts per draw before rejection sampling gives up.
const MAX_ATTEMPTS: u64 = 10_000;
pub const MIN_ACCEPTANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub s: f64,
    pub sample_cutoff: usize,
    pub r: Option<f64>,
    pub seed: u64,
    #[serde(default)]
    pub allow_low_s: bool,
}

impl GaussianSpec {
    pub fn new(s: f64, sample_cutoff: usize, seed: u64) -> Self {
        Self { s, sample_cutoff, r: None, seed, allow_low_s: false }
    }

    pub fn with_radius(mut self, r: f64) -> Self {
        self.r = Some(r);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn allowing_low_s(mut self) -> Self {
        self.allow_low_s = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.s.is_finite() || (self.s <= 0.5 && !self.allow_low_s) {
            return Err(Error::InvalidParameter(format!(
                "s = {} does not define a measure on L2-type spaces (need s > 1/2)",
                self.s
            )));
        }
        if let Some(r) = self.r {
            if !(r >= 0.0) {
                return Err(Error::InvalidParameter(format!("radius must be nonnegative, got {r}")));
            }
        }
        Ok(())
    }
}

/// Generator keyed by `(seed, attempt, frequency)` on stream `draw`, so that
/// every coefficient is a pure function of its key.
fn coefficient_rng(seed: u64, draw: u64, attempt: u64, n: i64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&attempt.to_le_bytes());
    key[16..24].copy_from_slice(&n.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(draw);
    rng
}

/// `g_n ⟨n⟩^{-s}` for `|n| ≤ cutoff` with `Re g_n, Im g_n` standard normal.
pub fn gaussian_field(s: f64, cutoff: usize, seed: u64, draw: u64, attempt: u64) -> SpectralField {
    let coeffs = (-(cutoff as i64)..=cutoff as i64)
        .map(|n| {
            let mut rng = coefficient_rng(seed, draw, attempt, n);
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im) * bracket(n).powf(-s)
        })
        .collect();
    SpectralField::from_coeffs(cutoff, coeffs).expect("length matches the grid")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ensemble {
    pub spec: GaussianSpec,
    pub draws: Vec<SpectralField>,
    /// Index of the accepted attempt for each draw.
    pub accepted_attempt: Vec<u64>,
    pub attempts: u64,
}

impl Ensemble {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.attempts == 0 {
            1.0
        } else {
            self.draws.len() as f64 / self.attempts as f64
        }
    }

    pub fn rejections(&self) -> u64 {
        self.attempts - self.draws.len() as u64
    }
}

fn accepted(f: &SpectralField, r: Option<f64>) -> bool {
    r.map_or(true, |r| f.l2_norm() <= r)
}

/// Draws `count` samples of `μ_s` (or of `μ_{s,r}` when a radius is set)
/// on the grid `|n| ≤ sample_cutoff`.
pub fn sample(spec: &GaussianSpec, count: usize) -> Result<Ensemble> {
    spec.validate()?;
    let results: Vec<(SpectralField, u64)> = (0..count as u64)
        .into_par_iter()
        .map(|draw| -> Result<(SpectralField, u64)> {
            for attempt in 0..MAX_ATTEMPTS {
                let f = gaussian_field(spec.s, spec.sample_cutoff, spec.seed, draw, attempt);
                if accepted(&f, spec.r) {
                    return Ok((f, attempt));
                }
            }
            Err(Error::LowAcceptance { rate: 1.0 / MAX_ATTEMPTS as f64, r: spec.r.unwrap_or(f64::INFINITY) })
        })
        .collect::<Result<_>>()?;
    let attempts: u64 = results.iter().map(|(_, a)| a + 1).sum();
    let (draws, accepted_attempt) = results.into_iter().unzip();
    let ensemble = Ensemble { spec: *spec, draws, accepted_attempt, attempts };
    if ensemble.acceptance_rate() < MIN_ACCEPTANCE {
        return Err(Error::LowAcceptance { rate: ensemble.acceptance_rate(), r: spec.r.unwrap_or(f64::INFINITY) });
    }
    Ok(ensemble)
}

/// `E Σ_{|n|≤cutoff} |v_n|² = 2 Σ ⟨n⟩^{-2s}`.
pub fn expected_norm_sq(s: f64, cutoff: usize) -> f64 {
    (-(cutoff as i64)..=cutoff as i64).map(|n| 2.0 * bracket(n).powf(-2.0 * s)).sum()
}
