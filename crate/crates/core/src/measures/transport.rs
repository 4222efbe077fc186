use super::events::EventSpec;
use super::sampling::{sample, GaussianSpec};
use super::stats::{linear_fit, mean_se, ratio_estimate, z_score, Estimate};
use crate::energy::EnergyEvaluator;
use crate::error::{Error, Result};
use crate::flows::{flow_map, FlowSpec, Variant};
use crate::report::{DiagnosticsReport, SeriesPoint};
use crate::spectral::{SobolevIndex, SpectralField};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Seed offset separating the two independent samples of the
/// change-of-variable test.
const SECOND_SAMPLE: u64 = 0x9e37_79b9_7f4a_7c15;

/// Parameters shared by the weighted-measure experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportConfig {
    pub n: usize,
    pub r: f64,
    pub t: f64,
    pub s: f64,
    pub cutoff: usize,
    pub count: usize,
    pub seed: u64,
    pub dt: f64,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self { n: 4, r: 2.0, t: 0.1, s: 1.0, cutoff: 16, count: 20_000, seed: 0, dt: 1e-4 }
    }
}

impl TransportConfig {
    fn gaussian(&self, seed: u64) -> GaussianSpec {
        GaussianSpec::new(self.s, self.cutoff, seed)
    }

    fn echo(&self, report: &mut DiagnosticsReport) {
        report
            .config("N", self.n)
            .config("r", self.r)
            .config("t", self.t)
            .config("s", self.s)
            .config("cutoff", self.cutoff)
            .config("count", self.count)
            .config("seed", self.seed)
            .config("dt", self.dt);
    }

    fn validate(&self) -> Result<()> {
        if self.n > self.cutoff {
            return Err(Error::TruncationTooLarge { trunc: self.n, n_grid: self.cutoff });
        }
        if !(self.r >= 0.0) || !self.t.is_finite() {
            return Err(Error::InvalidParameter(format!("need r >= 0 and finite t, got r = {}, t = {}", self.r, self.t)));
        }
        Ok(())
    }
}

/// `F_{N,r,t}(v)`.
fn truncated_weight(eval: &EnergyEvaluator, v: &SpectralField, r: f64, t: f64) -> f64 {
    if v.l2_norm() <= r {
        (-0.5 * eval.correction(v, t)).exp()
    } else {
        0.0
    }
}

/// `v` with its modes `|n| ≤ N` carried by `Ψ_N` from `t0` to `t1`.
fn transport(spec: &FlowSpec, v: &SpectralField, t0: f64, t1: f64) -> Result<SpectralField> {
    let n = spec.truncation.unwrap();
    let low = flow_map(spec, &v.project_low(n).regrid(n), t0, t1)?;
    let mut out = v.clone();
    for (m, c) in low.modes() {
        out.set(m, c);
    }
    Ok(out)
}

fn flow_spec(cfg: &TransportConfig) -> FlowSpec {
    FlowSpec::truncated(Variant::TruncatedFinite, cfg.n, cfg.dt)
}

fn effective_sample_size(w: &[f64]) -> f64 {
    let (s1, s2): (f64, f64) = w.iter().fold((0.0, 0.0), |(a, b), x| (a + x, b + x * x));
    if s2 == 0.0 {
        0.0
    } else {
        s1 * s1 / s2
    }
}

/// Two independent estimates of `ρ_{s,N,r,t}(Ψ_N(t)A)`: directly, by
/// pulling the event back along the flow, and through the transported
/// density `e^{-E_t(P_{≤N}Ψ_N(t)v)/2 + ‖P_{≤N}v‖²_{H^s}/2}` against `μ_s`.
pub fn change_of_variable_test(cfg: &TransportConfig, event: &EventSpec) -> Result<DiagnosticsReport> {
    cfg.validate()?;
    let mut report = DiagnosticsReport::new("cov-test");
    cfg.echo(&mut report);
    report.config("event", event);
    if event.max_mode() > cfg.cutoff {
        return Err(Error::InvalidParameter(format!("event looks at mode {} beyond the cutoff", event.max_mode())));
    }
    let s = SobolevIndex(cfg.s);
    let eval = EnergyEvaluator::new(cfg.n, s)?;
    let spec = flow_spec(cfg);

    let direct = sample(&cfg.gaussian(cfg.seed), cfg.count)?;
    let lhs_terms: Vec<(f64, f64)> = direct
        .draws
        .par_iter()
        .map(|v| -> Result<(f64, f64)> {
            let f = truncated_weight(&eval, v, cfg.r, cfg.t);
            if f == 0.0 {
                return Ok((0.0, 0.0));
            }
            let back = transport(&spec, v, cfg.t, 0.0)?;
            Ok((if event.contains(&back) { f } else { 0.0 }, f))
        })
        .collect::<Result<_>>()?;

    let pulled = sample(&cfg.gaussian(cfg.seed ^ SECOND_SAMPLE), cfg.count)?;
    let rhs_terms: Vec<(f64, f64)> = pulled
        .draws
        .par_iter()
        .map(|v| -> Result<(f64, f64)> {
            let f = truncated_weight(&eval, v, cfg.r, cfg.t);
            if f == 0.0 || !event.contains(v) {
                return Ok((0.0, f));
            }
            let low = v.project_low(cfg.n).regrid(cfg.n);
            let u = flow_map(&spec, &low, 0.0, cfg.t)?;
            let e = eval.modified_energy(&u, cfg.t).total;
            Ok(((-0.5 * e + 0.5 * low.sobolev_norm_sq(s)).exp(), f))
        })
        .collect::<Result<_>>()?;

    let (la, lb): (Vec<f64>, Vec<f64>) = lhs_terms.into_iter().unzip();
    let (ra, rb): (Vec<f64>, Vec<f64>) = rhs_terms.into_iter().unzip();
    if cfg.count > 0 && (lb.iter().all(|x| *x == 0.0) || rb.iter().all(|x| *x == 0.0)) {
        return Err(Error::ZeroEffectiveSampleSize("change-of-variable weights"));
    }
    let lhs = ratio_estimate(&la, &lb);
    let rhs = ratio_estimate(&ra, &rb);
    let z = z_score(lhs, rhs);
    report
        .scalar("lhs", lhs.estimate)
        .scalar("lhs_std_error", lhs.std_error)
        .scalar("rhs", rhs.estimate)
        .scalar("rhs_std_error", rhs.std_error)
        .scalar("z", z)
        .scalar("ess_lhs", effective_sample_size(&lb))
        .scalar("ess_rhs", effective_sample_size(&rb));
    report.flag("agreement_within_4se", z.abs() <= 4.0);
    Ok(report)
}

/// `‖F_{N,r,t} - F_{r,t}‖_{L^p(μ_s)}` per `N` and `p`.
pub fn lp_weight_convergence(cfg: &TransportConfig, p_list: &[f64], n_list: &[usize]) -> Result<DiagnosticsReport> {
    let mut report = DiagnosticsReport::new("lp-convergence");
    cfg.echo(&mut report);
    report.config("p_list", format!("{p_list:?}")).config("n_list", format!("{n_list:?}"));
    if let Some(p) = p_list.iter().find(|p| !(**p >= 1.0)) {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    let s = SobolevIndex(cfg.s);
    let mut n_list = n_list.to_vec();
    n_list.sort_unstable();
    n_list.dedup();
    let ensemble = sample(&cfg.gaussian(cfg.seed), cfg.count)?;
    let full = EnergyEvaluator::new(cfg.cutoff, s)?;
    let f_full: Vec<f64> = ensemble.draws.par_iter().map(|v| truncated_weight(&full, v, cfg.r, cfg.t)).collect();
    report.scalar("indicator_fraction", f_full.iter().filter(|f| **f > 0.0).count() as f64 / cfg.count.max(1) as f64);

    let mut diffs = Vec::new();
    for &n in &n_list {
        let d: Vec<f64> = if n >= cfg.cutoff {
            vec![0.0; ensemble.len()]
        } else {
            let eval = EnergyEvaluator::new(n, s)?;
            ensemble
                .draws
                .par_iter()
                .zip(&f_full)
                .map(|(v, f)| if *f == 0.0 { 0.0 } else { (truncated_weight(&eval, v, cfg.r, cfg.t) - f).abs() })
                .collect()
        };
        diffs.push(d);
    }
    for &p in p_list {
        let estimates: Vec<Estimate> = diffs
            .iter()
            .map(|d| {
                let m = mean_se(&d.iter().map(|x| x.powf(p)).collect::<Vec<_>>());
                let est = m.estimate.powf(1.0 / p);
                let se = if m.estimate > 0.0 { m.std_error * est / (p * m.estimate) } else { 0.0 };
                Estimate::new(est, se)
            })
            .collect();
        for (n, e) in n_list.iter().zip(&estimates) {
            report.push(&format!("lp_p{p}"), SeriesPoint::new(*n as f64, e.estimate, e.std_error));
            report.scalar(format!("lp_p{p}_n{n}"), e.estimate);
        }
        let decreasing = estimates.windows(2).all(|w| w[1].estimate <= w[0].estimate + 2.0 * w[0].std_error.hypot(w[1].std_error));
        report.flag(format!("decreasing_p{p}"), decreasing);
    }
    Ok(report)
}

/// Weighted masses of shrinking balls `|v_0| ≤ ε_k` and of their images
/// under `Ψ_N(t)`, with the fitted exponent of `ρ(Ψ_N(t)A) ≈ C ρ(A)^b`.
pub fn measure_growth_experiment(cfg: &TransportConfig, radii: &[f64]) -> Result<DiagnosticsReport> {
    cfg.validate()?;
    let mut report = DiagnosticsReport::new("measure-growth");
    cfg.echo(&mut report);
    report.config("radii", format!("{radii:?}"));
    let eval = EnergyEvaluator::new(cfg.n, SobolevIndex(cfg.s))?;
    let spec = flow_spec(cfg);
    let ensemble = sample(&cfg.gaussian(cfg.seed), cfg.count)?;
    let pairs: Vec<(SpectralField, f64)> = ensemble
        .draws
        .par_iter()
        .map(|v| -> Result<(SpectralField, f64)> {
            let f = truncated_weight(&eval, v, cfg.r, cfg.t);
            let back = if f == 0.0 { v.clone() } else { transport(&spec, v, cfg.t, 0.0)? };
            Ok((back, f))
        })
        .collect::<Result<_>>()?;
    let weights: Vec<f64> = pairs.iter().map(|(_, f)| *f).collect();
    if !ensemble.is_empty() && weights.iter().all(|f| *f == 0.0) {
        return Err(Error::ZeroEffectiveSampleSize("measure-growth weights"));
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for &eps in radii {
        let event = EventSpec::Ball { n: 0, center: Default::default(), radius: eps };
        let before: Vec<f64> = ensemble.draws.iter().zip(&weights).map(|(v, f)| if event.contains(v) { *f } else { 0.0 }).collect();
        let after: Vec<f64> = pairs.iter().map(|(b, f)| if event.contains(b) { *f } else { 0.0 }).collect();
        let (a, b) = (ratio_estimate(&before, &weights), ratio_estimate(&after, &weights));
        report.push("rho_a", SeriesPoint::new(eps, a.estimate, a.std_error));
        report.push("rho_psi_a", SeriesPoint::new(eps, b.estimate, b.std_error));
        if a.estimate > 0.0 && b.estimate > 0.0 {
            xs.push(a.estimate.ln());
            ys.push(b.estimate.ln());
        }
    }
    if xs.len() >= 2 {
        let (_, slope, se) = linear_fit(&xs, &ys);
        report.scalar("exponent", slope).scalar("exponent_std_error", se);
        report.scalar("exponent_lo", slope - 2.0 * se).scalar("exponent_hi", slope + 2.0 * se);
        report.flag("exponent_in_band", (0.5..=1.1).contains(&slope));
    } else {
        report.note("exponent", "fewer than two events with positive mass");
    }
    Ok(report)
}
