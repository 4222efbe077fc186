use super::sampling::gaussian_field;
use crate::report::{DiagnosticsReport, SeriesPoint};
use rayon::prelude::*;

/// `P[χ²_{2k} ≥ x] = e^{-x/2} Σ_{j<k} (x/2)^j / j!`.
pub fn chi_square_even_tail(k: usize, x: f64) -> f64 {
    let h = 0.5 * x;
    let mut term = 1.0;
    let mut sum = 0.0;
    for j in 0..k {
        if j > 0 {
            term *= h / j as f64;
        }
        sum += term;
    }
    ((-h).exp() * sum).min(1.0)
}

/// Empirical tail of `(Σ_{|n|≤M} |g_n|²)^{1/2}` against the exact
/// chi-square tail and a fitted envelope `e^{-cK²}`.
pub fn tail_sanity(seed: u64, m: usize, k_list: &[f64], count: usize) -> DiagnosticsReport {
    let mut report = DiagnosticsReport::new("tail-sanity");
    report.config("seed", seed).config("M", m).config("k_list", format!("{k_list:?}")).config("count", count);
    let norms: Vec<f64> = (0..count as u64).into_par_iter().map(|d| gaussian_field(0.0, m, seed, d, 0).l2_norm()).collect();
    let dof_half = 2 * m + 1;
    let mean_norm = (2.0 * dof_half as f64).sqrt();
    let mut tails = Vec::new();
    let mut z_max: f64 = 0.0;
    for &k in k_list {
        let p = if count == 0 { 1.0 } else { norms.iter().filter(|x| **x >= k).count() as f64 / count as f64 };
        let exact = chi_square_even_tail(dof_half, k * k);
        let se = (exact * (1.0 - exact) / count.max(1) as f64).sqrt();
        let z = if p == exact { 0.0 } else { (p - exact) / se.max(1.0 / count.max(1) as f64) };
        z_max = z_max.max(z.abs());
        report.push("tail", SeriesPoint::new(k, p, se));
        report.push("chi_square_tail", SeriesPoint::new(k, exact, 0.0));
        tails.push((k, p));
    }
    let monotone = tails.windows(2).all(|w| w[0].0 > w[1].0 || w[1].1 <= w[0].1);
    report.flag("tail_monotone", monotone);
    report.scalar("z_max_abs", z_max);
    report.flag("matches_chi_square", z_max <= 4.0);
    let c = tails
        .iter()
        .filter(|(k, p)| *k >= mean_norm && *p > 0.0 && *p < 1.0)
        .map(|(k, p)| -p.ln() / (k * k))
        .fold(f64::INFINITY, f64::min);
    if c.is_finite() {
        let envelope = tails.iter().filter(|(k, _)| *k >= mean_norm).all(|(k, p)| *p <= (-c * k * k).exp());
        report.scalar("fitted_c", c);
        report.flag("fitted_c_positive", c > 0.0);
        report.flag("envelope_holds", envelope);
    } else {
        report.note("fitted_c", "no K beyond the mean with a nontrivial empirical tail");
    }
    report
}
