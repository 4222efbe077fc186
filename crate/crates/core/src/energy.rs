//! The modified energy `E_t = ‖v‖²_{H^s} + R_t(v)`, the six terms of its
//! time derivative along the truncated interaction flow, and the scan of
//! the energy estimate.

use crate::error::{Error, Result};
use crate::flows::{evolve, flow_map, FlowSpec, Trajectory, Variant};
use crate::measures::{sample, GaussianSpec};
use crate::normalform::{phase_weighted_trilinear, resonant_field};
use crate::phase::GammaTable;
use crate::report::{ratio, DiagnosticsReport, SeriesPoint};
use crate::spectral::{SobolevIndex, SpectralField};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEFAULT_EPSILON: f64 = 0.05;
pub const DEFAULT_THETA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModifiedEnergyReport {
    pub sobolev_sq: f64,
    pub correction: f64,
    pub total: f64,
    pub t: f64,
    pub s: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeTerms {
    pub n1: f64,
    pub r1: f64,
    pub n2: f64,
    pub r2: f64,
    pub n3: f64,
    pub r3: f64,
    pub sum: f64,
    pub fd_derivative: f64,
    pub bound_rhs: f64,
    pub theta: f64,
    pub epsilon: f64,
}

/// Energy functionals on `|n| ≤ N` with a cached `Γ_N` table.
#[derive(Debug, Clone)]
pub struct EnergyEvaluator {
    table: GammaTable,
    s: SobolevIndex,
}

impl EnergyEvaluator {
    pub fn new(truncation: usize, s: SobolevIndex) -> Result<Self> {
        Ok(Self { table: GammaTable::new(truncation)?, s })
    }

    pub fn truncation(&self) -> usize {
        self.table.truncation()
    }

    fn low(&self, v: &SpectralField) -> SpectralField {
        let n = self.truncation();
        v.project_low(n).regrid(n)
    }

    /// `R_t` of `P_{≤N} v`, summed μ-bucket by μ-bucket.
    pub fn correction(&self, v: &SpectralField, t: f64) -> f64 {
        let v = self.low(v);
        let n_max = self.truncation() as i64;
        let mut total = Complex64::new(0.0, 0.0);
        for n in -n_max..=n_max {
            let vn = v.get(n);
            if vn == Complex64::new(0.0, 0.0) {
                continue;
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for (_, bucket) in self.table.mu_buckets(n) {
                let mut part = Complex64::new(0.0, 0.0);
                for e in bucket {
                    let phi = e.phi_f64();
                    part += Complex64::from_polar(1.0 / phi, -phi * t) * v.get(e.n1) * v.get(e.n2).conj() * v.get(e.n3);
                }
                acc += part;
            }
            total += self.s.weight_sq(n) * vn.conj() * acc;
        }
        -2.0 * total.re
    }

    pub fn modified_energy(&self, v: &SpectralField, t: f64) -> ModifiedEnergyReport {
        let low = self.low(v);
        let sobolev_sq = low.sobolev_norm_sq(self.s);
        let correction = self.correction(&low, t);
        ModifiedEnergyReport {
            sobolev_sq,
            correction,
            total: sobolev_sq + correction,
            t,
            s: self.s.value(),
            n: self.truncation(),
        }
    }

    /// `Σ_n ⟨n⟩^{2s} d̄_n Σ_{Γ_N(n)} e^{-iφt}/φ a_{n1} b̄_{n2} c_{n3}`.
    fn quadrilinear(&self, a: &SpectralField, b: &SpectralField, c: &SpectralField, d: &SpectralField, t: f64) -> Complex64 {
        let p = phase_weighted_trilinear(&self.table, a, b, c, t);
        p.modes().map(|(n, x)| self.s.weight_sq(n) * d.get(n).conj() * x).sum()
    }

    /// `G_k = Σ_{Γ_N(k)} e^{-iφ t} v_{m1} v̄_{m2} v_{m3}`.
    fn gamma_sum(&self, v: &SpectralField, t: f64) -> SpectralField {
        let mut out = SpectralField::zeros(v.n_grid());
        let n_max = self.truncation() as i64;
        for k in -n_max..=n_max {
            let acc: Complex64 = self
                .table
                .at(k)
                .iter()
                .map(|e| Complex64::from_polar(1.0, -e.phi_f64() * t) * v.get(e.n1) * v.get(e.n2).conj() * v.get(e.n3))
                .sum();
            out.set(k, acc);
        }
        out
    }

    /// The six terms `(N1, R1, N2, R2, N3, R3)` of `d/dt E_t(P_{≤N} v)`.
    pub fn terms(&self, v: &SpectralField, t: f64, sign: f64) -> [f64; 6] {
        let v = self.low(v);
        let g = self.gamma_sum(&v, t);
        let cube = resonant_field(&v, 1.0).scaled(Complex64::new(0.0, -1.0));
        let i = Complex64::new(0.0, 1.0);
        let re_i = |z: Complex64| (i * z).re;
        [
            4.0 * sign * re_i(self.quadrilinear(&g, &v, &v, &v, t)),
            -4.0 * sign * re_i(self.quadrilinear(&cube, &v, &v, &v, t)),
            -2.0 * sign * re_i(self.quadrilinear(&v, &g, &v, &v, t)),
            2.0 * sign * re_i(self.quadrilinear(&v, &cube, &v, &v, t)),
            -2.0 * sign * re_i(self.quadrilinear(&v, &v, &v, &g, t)),
            2.0 * sign * re_i(self.quadrilinear(&v, &v, &v, &cube, t)),
        ]
    }

    /// `‖v‖_{L²}^{4+θ} ‖v‖_{H^{s-1/2-ε}}^{2-θ}` of `P_{≤N} v`.
    pub fn bound_rhs(&self, v: &SpectralField, epsilon: f64, theta: f64) -> f64 {
        let v = self.low(v);
        let rough = SobolevIndex(self.s.value() - 0.5 - epsilon);
        v.l2_norm().powf(4.0 + theta) * v.sobolev_norm(rough).powf(2.0 - theta)
    }
}

pub fn correction(v: &SpectralField, t: f64, s: SobolevIndex) -> Result<f64> {
    Ok(EnergyEvaluator::new(v.n_grid(), s)?.correction(v, t))
}

pub fn modified_energy(v: &SpectralField, t: f64, s: SobolevIndex, n: usize) -> Result<ModifiedEnergyReport> {
    if n > v.n_grid() {
        return Err(Error::TruncationTooLarge { trunc: n, n_grid: v.n_grid() });
    }
    Ok(EnergyEvaluator::new(n, s)?.modified_energy(v, t))
}

/// `|R_t(v)| / (‖v‖²_{L²} ‖v‖²_{H^{s-1}})`, zero for zero data.
pub fn correction_constant(v: &SpectralField, t: f64, s: SobolevIndex) -> Result<f64> {
    let r = correction(v, t, s)?;
    let den = v.norm_sq() * v.sobolev_norm_sq(SobolevIndex(s.value() - 1.0));
    Ok(ratio(r.abs(), den))
}

fn check_truncated(traj: &Trajectory, n: usize) -> Result<()> {
    match (traj.spec.variant, traj.spec.truncation) {
        (Variant::TruncatedEmbedded | Variant::TruncatedFinite, Some(m)) if m == n => Ok(()),
        (Variant::TruncatedEmbedded | Variant::TruncatedFinite, _) => {
            Err(Error::InvalidParameter(format!("trajectory truncation differs from N = {n}")))
        }
        (v, _) => Err(Error::WrongVariant { expected: "truncated_embedded", found: v.to_string() }),
    }
}

/// Spacing of the finite-difference stencil for `dE/dt`.
pub const FD_STEP: f64 = 1e-6;

/// Fourth-order centered difference of `E_t(P_{≤N} v(t))` at stored index
/// `k`. The stencil points lie on the solution through the stored state,
/// reached with the trajectory's own scheme at step `FD_STEP`, since the
/// phases `φ` oscillate on scales far below a typical `dt`.
fn fd_derivative(eval: &EnergyEvaluator, traj: &Trajectory, k: usize) -> Result<f64> {
    let (v, t) = (&traj.states[k], traj.times[k]);
    let local = FlowSpec { dt: FD_STEP, ..traj.spec };
    let e = |j: i32| -> Result<f64> {
        let tj = t + j as f64 * FD_STEP;
        Ok(eval.modified_energy(&flow_map(&local, v, t, tj)?, tj).total)
    };
    Ok((e(-2)? - 8.0 * e(-1)? + 8.0 * e(1)? - e(2)?) / (12.0 * FD_STEP))
}

pub fn derivative_terms(
    traj: &Trajectory,
    t_index: usize,
    s: SobolevIndex,
    n: usize,
    epsilon: f64,
    theta: f64,
) -> Result<DerivativeTerms> {
    check_truncated(traj, n)?;
    if t_index >= traj.len() {
        return Err(Error::IndexOutOfRange { index: t_index, len: traj.len() });
    }
    let eval = EnergyEvaluator::new(n, s)?;
    let v = &traj.states[t_index];
    let [n1, r1, n2, r2, n3, r3] = eval.terms(v, traj.times[t_index], traj.spec.sign.value());
    Ok(DerivativeTerms {
        n1,
        r1,
        n2,
        r2,
        n3,
        r3,
        sum: n1 + r1 + n2 + r2 + n3 + r3,
        fd_derivative: fd_derivative(&eval, traj, t_index)?,
        bound_rhs: eval.bound_rhs(v, epsilon, theta),
        theta,
        epsilon,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyScanConfig {
    pub ensemble: usize,
    pub s: f64,
    pub n_list: Vec<usize>,
    pub t_end: f64,
    pub dt: f64,
    pub theta: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// Evaluation times per trajectory, evenly spaced including both ends.
    pub samples: usize,
}

impl Default for EnergyScanConfig {
    fn default() -> Self {
        Self {
            ensemble: 50,
            s: 0.8,
            n_list: vec![4, 8, 16],
            t_end: 0.01,
            dt: 1e-4,
            theta: DEFAULT_THETA,
            epsilon: DEFAULT_EPSILON,
            seed: 0,
            samples: 5,
        }
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Distribution of `|dE/dt| / bound_rhs` over Gaussian draws evolved by the
/// truncated flow, per `N`.
pub fn energy_bound_scan(cfg: &EnergyScanConfig) -> Result<DiagnosticsReport> {
    let mut report = DiagnosticsReport::new("energy-scan");
    report
        .config("ensemble", cfg.ensemble)
        .config("s", cfg.s)
        .config("n_list", format!("{:?}", cfg.n_list))
        .config("t_end", cfg.t_end)
        .config("dt", cfg.dt)
        .config("theta", cfg.theta)
        .config("epsilon", cfg.epsilon)
        .config("seed", cfg.seed)
        .config("samples", cfg.samples);
    report.scalar("draws", cfg.ensemble as f64);
    if cfg.ensemble == 0 || cfg.n_list.is_empty() {
        report.note("empty", "no draws or no truncations requested");
        return Ok(report);
    }
    let mut n_list = cfg.n_list.clone();
    n_list.sort_unstable();
    n_list.dedup();
    let cutoff = *n_list.last().unwrap();
    let mut gauss = GaussianSpec::new(cfg.s, cutoff, cfg.seed);
    if cfg.s <= 0.5 {
        gauss = gauss.allowing_low_s();
    }
    let draws = sample(&gauss, cfg.ensemble)?.draws;
    let s = SobolevIndex(cfg.s);
    let mut maxima = Vec::new();
    for &n in &n_list {
        let eval = EnergyEvaluator::new(n, s)?;
        let spec = FlowSpec::truncated(Variant::TruncatedEmbedded, n, cfg.dt);
        let ratios: Vec<Vec<f64>> = draws
            .par_iter()
            .map(|d| -> Result<Vec<f64>> {
                let u0 = d.project_low(n).regrid(n);
                let traj = evolve(&spec, &u0, 0.0, cfg.t_end)?;
                let last = traj.len() - 1;
                let picks = cfg.samples.max(1);
                Ok((0..picks)
                    .map(|j| if picks == 1 { 0 } else { j * last / (picks - 1) })
                    .map(|k| {
                        let v = &traj.states[k];
                        let sum: f64 = eval.terms(v, traj.times[k], spec.sign.value()).iter().sum();
                        ratio(sum.abs(), eval.bound_rhs(v, cfg.epsilon, cfg.theta))
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        let mut all: Vec<f64> = ratios.into_iter().flatten().collect();
        all.sort_by(|a, b| a.total_cmp(b));
        let max = *all.last().unwrap();
        let p99 = quantile(&all, 0.99);
        report.push("ratio_max", SeriesPoint::new(n as f64, max, 0.0));
        report.push("ratio_p99", SeriesPoint::new(n as f64, p99, 0.0));
        report.scalar(format!("ratio_max_n{n}"), max).scalar(format!("ratio_p99_n{n}"), p99);
        report.flag(format!("p99_finite_n{n}"), p99.is_finite());
        maxima.push(max);
    }
    let stable = maxima.windows(2).all(|w| w[1] <= 2.0 * w[0] || (w[0] == 0.0 && w[1] == 0.0));
    report.flag("growth_within_2x", stable);
    report.flag("s_above_three_quarters", cfg.s > 0.75);
    Ok(report)
}

#[cfg(test)]
mod tests;
