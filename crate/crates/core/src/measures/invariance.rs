use super::sampling::{sample, GaussianSpec};
use super::stats::mean_se;
use crate::error::{Error, Result};
use crate::flows::{free_flow, gauge_forward};
use crate::report::{DiagnosticsReport, SeriesPoint};
use crate::spectral::{bracket, Sign, SpectralField};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Z-score threshold for the statistical comparisons.
pub const Z_MAX: f64 = 4.0;

/// Differences below this (relative) size count as exact invariance.
const EXACT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "t")]
pub enum Transform {
    FreeFlow(f64),
    Gauge(f64),
    /// Multiplication by the constant `e^{iθ}`.
    Rotation(f64),
}

impl Transform {
    pub fn apply(&self, v: &SpectralField) -> SpectralField {
        match *self {
            Transform::FreeFlow(t) => free_flow(v, t),
            Transform::Gauge(t) => gauge_forward(v, t, Sign::Defocusing),
            Transform::Rotation(theta) => v.scaled(Complex64::from_polar(1.0, theta)),
        }
    }

    fn is_identity(&self) -> bool {
        matches!(*self, Transform::FreeFlow(x) | Transform::Gauge(x) | Transform::Rotation(x) if x == 0.0)
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transform::FreeFlow(t) => write!(f, "free_flow:{t}"),
            Transform::Gauge(t) => write!(f, "gauge:{t}"),
            Transform::Rotation(t) => write!(f, "rotation:{t}"),
        }
    }
}

impl FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s.split_once(':').unwrap_or((s, "1"));
        let x: f64 = arg.trim().parse().map_err(|_| Error::Parse(format!("bad transform parameter `{arg}`")))?;
        match kind.trim().replace('-', "_").as_str() {
            "free_flow" => Ok(Transform::FreeFlow(x)),
            "gauge" => Ok(Transform::Gauge(x)),
            "rotation" => Ok(Transform::Rotation(x)),
            other => Err(Error::Parse(format!("unknown transform `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceConfig {
    pub transform: Transform,
    pub spec: GaussianSpec,
    pub count: usize,
    /// Pairs `(n, m)` for the mixed moments `v_n v̄_m`.
    pub pairs: Vec<(i64, i64)>,
    /// Fields `h` for the characteristic-function probes `e^{i Re⟨v, h⟩}`.
    pub probes: Vec<SpectralField>,
}

impl InvarianceConfig {
    pub fn new(transform: Transform, spec: GaussianSpec, count: usize) -> Self {
        let c = spec.sample_cutoff as i64;
        Self { transform, spec, count, pairs: default_pairs(c), probes: default_probes(spec.sample_cutoff) }
    }
}

/// Up to ten distinct pairs `n ≠ m` inside `[-c, c]`.
pub fn default_pairs(c: i64) -> Vec<(i64, i64)> {
    let candidates: [(i64, i64); 10] = [(0, 1), (1, -1), (1, 2), (-2, 0), (2, 3), (0, -3), (-1, 3), (1, -2), (2, -2), (-3, 4)];
    let mut pairs: Vec<_> = candidates.iter().copied().filter(|(n, m)| n.abs() <= c && m.abs() <= c).collect();
    let extra = (-c..=c).flat_map(|n| (n + 1..=c).map(move |m| (n, m)));
    for p in extra {
        if pairs.len() >= 10 {
            break;
        }
        if !pairs.contains(&p) && !pairs.contains(&(p.1, p.0)) {
            pairs.push(p);
        }
    }
    pairs
}

pub fn default_probes(n_grid: usize) -> Vec<SpectralField> {
    let one = Complex64::new(1.0, 0.0);
    let mut probes = vec![SpectralField::from_modes(n_grid, &[(0, one)]).unwrap()];
    if n_grid >= 2 {
        probes.push(SpectralField::from_modes(n_grid, &[(1, Complex64::new(0.5, 0.5)), (-2, Complex64::new(0.3, 0.0))]).unwrap());
    }
    let decaying = (-(n_grid as i64)..=n_grid as i64).map(|n| Complex64::new(0.0, 0.5) / bracket(n)).collect();
    probes.push(SpectralField::from_coeffs(n_grid, decaying).unwrap());
    probes
}

fn functionals(cfg: &InvarianceConfig) -> Vec<(String, Box<dyn Fn(&SpectralField) -> f64 + Sync + '_>)> {
    let c = cfg.spec.sample_cutoff as i64;
    let mut out: Vec<(String, Box<dyn Fn(&SpectralField) -> f64 + Sync>)> = Vec::new();
    for n in -c..=c {
        out.push((format!("re_v{n}"), Box::new(move |v: &SpectralField| v.get(n).re)));
    }
    for &(n, m) in &cfg.pairs {
        out.push((format!("re_v{n}_v{m}bar"), Box::new(move |v: &SpectralField| (v.get(n) * v.get(m).conj()).re)));
        out.push((format!("im_v{n}_v{m}bar"), Box::new(move |v: &SpectralField| (v.get(n) * v.get(m).conj()).im)));
    }
    for (k, h) in cfg.probes.iter().enumerate() {
        let pairing = move |v: &SpectralField| -> f64 { v.modes().map(|(n, x)| (x.conj() * h.get(n)).re).sum() };
        out.push((format!("probe{k}_cos"), Box::new(move |v: &SpectralField| pairing(v).cos())));
        out.push((format!("probe{k}_sin"), Box::new(move |v: &SpectralField| pairing(v).sin())));
    }
    out
}

/// Per-draw check that every `|v_n|` is unchanged by the transform.
fn modulus_preserved(v: &SpectralField, w: &SpectralField) -> f64 {
    v.coeffs()
        .iter()
        .zip(w.coeffs())
        .map(|(a, b)| (a.norm_sqr() - b.norm_sqr()).abs() / a.norm_sqr().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// Compares moments of `μ_s` with those of its pushforward under the
/// transform through paired differences `f(Tv) - f(v)` on the same draws.
pub fn invariance_test(cfg: &InvarianceConfig) -> Result<DiagnosticsReport> {
    let mut report = DiagnosticsReport::new("invariance-test");
    report
        .config("transform", cfg.transform)
        .config("s", cfg.spec.s)
        .config("cutoff", cfg.spec.sample_cutoff)
        .config("seed", cfg.spec.seed)
        .config("count", cfg.count)
        .config("pairs", format!("{:?}", cfg.pairs))
        .config("probes", cfg.probes.len());
    if let Some(r) = cfg.spec.r {
        report.config("r", r);
    }
    for h in &cfg.probes {
        if h.n_grid() != cfg.spec.sample_cutoff {
            return Err(Error::GridMismatch { expected: cfg.spec.sample_cutoff, found: h.n_grid() });
        }
    }
    let ensemble = sample(&cfg.spec, cfg.count)?;
    report.scalar("count", ensemble.len() as f64).scalar("acceptance", ensemble.acceptance_rate());
    if ensemble.is_empty() {
        report.note("empty", "no draws requested");
        return Ok(report);
    }
    let transformed: Vec<SpectralField> = ensemble.draws.par_iter().map(|v| cfg.transform.apply(v)).collect();
    let modulus_err = ensemble.draws.iter().zip(&transformed).map(|(v, w)| modulus_preserved(v, w)).fold(0.0, f64::max);
    report.scalar("modulus_max_rel_change", modulus_err);
    report.flag("modulus_exact", modulus_err <= 8.0 * f64::EPSILON);

    let mut z_max: f64 = 0.0;
    for (k, (name, f)) in functionals(cfg).into_iter().enumerate() {
        let (raw, diffs): (Vec<f64>, Vec<f64>) = ensemble
            .draws
            .iter()
            .zip(&transformed)
            .map(|(v, w)| {
                let a = f(v);
                (a, f(w) - a)
            })
            .unzip();
        let scale = raw.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let exact = cfg.transform.is_identity() || diffs.iter().all(|d| d.abs() <= EXACT_TOL * scale);
        let d = mean_se(&diffs);
        let z = if exact || d.estimate == 0.0 { 0.0 } else { d.estimate / d.std_error };
        z_max = z_max.max(z.abs());
        report.scalar(format!("z_{name}"), z);
        report.push("z", SeriesPoint::new(k as f64, z, 1.0));
    }
    report.scalar("z_max_abs", z_max);
    report.flag("moments_within_4se", z_max <= Z_MAX);
    Ok(report)
}

/// Repeats the invariance test over `seeds` consecutive seeds and counts
/// how many runs keep every moment within the threshold.
pub fn invariance_meta_test(cfg: &InvarianceConfig, seeds: u64, required: u64) -> Result<DiagnosticsReport> {
    let mut report = DiagnosticsReport::new("invariance-meta-test");
    report.config("transform", cfg.transform).config("seeds", seeds).config("required", required);
    let runs: Vec<DiagnosticsReport> = (0..seeds)
        .map(|k| {
            let spec = cfg.spec.with_seed(cfg.spec.seed.wrapping_add(k));
            invariance_test(&InvarianceConfig { spec, ..cfg.clone() })
        })
        .collect::<Result<_>>()?;
    let passes = runs.iter().filter(|r| r.flags.get("moments_within_4se").copied().unwrap_or(true)).count() as u64;
    let exact = runs.iter().all(|r| r.flags.get("modulus_exact").copied().unwrap_or(true));
    for (k, r) in runs.iter().enumerate() {
        report.push("z_max_abs", SeriesPoint::new(k as f64, r.get("z_max_abs").unwrap_or(0.0), 0.0));
    }
    report.scalar("passes", passes as f64);
    report.flag("meta_pass", passes >= required);
    report.flag("modulus_exact", exact);
    Ok(report)
}
