use crate::energy::EnergyEvaluator;
use crate::error::Result;
use crate::spectral::{SobolevIndex, SpectralField};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightReport {
    /// `F_{N,r,t}(v)`.
    pub f_n_r_t: f64,
    /// `F_{r,t}(v)`, with the correction taken over the whole grid of `v`.
    pub f_r_t: f64,
    pub indicator: bool,
}

/// Evaluates `1_{‖v‖ ≤ r} e^{-R_t(P_{≤N} v)/2}` for many fields on one grid.
#[derive(Debug, Clone)]
pub struct WeightEvaluator {
    truncated: EnergyEvaluator,
    full: Option<EnergyEvaluator>,
    pub r: f64,
    pub t: f64,
}

impl WeightEvaluator {
    pub fn new(n: usize, n_grid: usize, r: f64, t: f64, s: SobolevIndex) -> Result<Self> {
        let n = n.min(n_grid);
        let truncated = EnergyEvaluator::new(n, s)?;
        let full = if n < n_grid { Some(EnergyEvaluator::new(n_grid, s)?) } else { None };
        Ok(Self { truncated, full, r, t })
    }

    pub fn indicator(&self, v: &SpectralField) -> bool {
        v.l2_norm() <= self.r
    }

    /// `F_{N,r,t}(v)` alone.
    pub fn truncated(&self, v: &SpectralField) -> f64 {
        if self.indicator(v) {
            (-0.5 * self.truncated.correction(v, self.t)).exp()
        } else {
            0.0
        }
    }

    pub fn evaluate(&self, v: &SpectralField) -> WeightReport {
        let indicator = self.indicator(v);
        if !indicator {
            return WeightReport { f_n_r_t: 0.0, f_r_t: 0.0, indicator };
        }
        let f_n_r_t = (-0.5 * self.truncated.correction(v, self.t)).exp();
        let f_r_t = match &self.full {
            Some(full) => (-0.5 * full.correction(v, self.t)).exp(),
            None => f_n_r_t,
        };
        WeightReport { f_n_r_t, f_r_t, indicator }
    }
}

pub fn weight(v: &SpectralField, n: usize, r: f64, t: f64, s: SobolevIndex) -> Result<WeightReport> {
    Ok(WeightEvaluator::new(n, v.n_grid(), r, t, s)?.evaluate(v))
}
