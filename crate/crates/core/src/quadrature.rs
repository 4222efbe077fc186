//! Composite Simpson quadrature over uniformly sampled fields.

use crate::spectral::SpectralField;
use num_complex::Complex64;

/// Weights of the composite Simpson rule on `points` samples with spacing
/// `h`. An odd number of intervals closes with the 3/8 rule on the last
/// three; a single interval falls back to the trapezoid rule.
pub fn simpson_weights(points: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; points];
    if points < 2 {
        return w;
    }
    let m = points - 1;
    if m == 1 {
        w[0] = 0.5 * h;
        w[1] = 0.5 * h;
        return w;
    }
    let simpson_end = if m % 2 == 0 { m } else { m - 3 };
    for k in (0..simpson_end).step_by(2) {
        w[k] += h / 3.0;
        w[k + 1] += 4.0 * h / 3.0;
        w[k + 2] += h / 3.0;
    }
    if m % 2 == 1 {
        let k = m - 3;
        for (j, c) in [1.0, 3.0, 3.0, 1.0].into_iter().enumerate() {
            w[k + j] += 3.0 * h / 8.0 * c;
        }
    }
    w
}

/// `Σ_k w_k f_k` over fields on a common grid.
pub fn weighted_sum(fields: &[SpectralField], weights: &[f64]) -> SpectralField {
    let n_grid = fields.first().map(|f| f.n_grid()).unwrap_or(0);
    let mut out = SpectralField::zeros(n_grid);
    for (f, &w) in fields.iter().zip(weights) {
        if w != 0.0 {
            out = out.axpy(Complex64::new(w, 0.0), f);
        }
    }
    out
}

pub fn integrate(fields: &[SpectralField], h: f64) -> SpectralField {
    weighted_sum(fields, &simpson_weights(fields.len(), h))
}

/// Simpson integral together with a Richardson estimate of its error from
/// the rule at step `2h` on every other sample.
pub fn integrate_with_estimate(fields: &[SpectralField], h: f64) -> (SpectralField, f64) {
    let fine = integrate(fields, h);
    let m = fields.len().saturating_sub(1);
    let estimate = if m < 2 {
        0.0
    } else {
        let even = if m % 2 == 0 { m } else { m - 1 };
        let prefix = &fields[..=even];
        let fine_prefix = integrate(prefix, h);
        let coarse: Vec<SpectralField> = prefix.iter().step_by(2).cloned().collect();
        let coarse = integrate(&coarse, 2.0 * h);
        fine_prefix.l2_distance(&coarse) / 15.0 * (m as f64 / even as f64)
    };
    (fine, estimate)
}

/// Simpson integral of a real series.
pub fn integrate_real(values: &[f64], h: f64) -> f64 {
    simpson_weights(values.len(), h).iter().zip(values).map(|(w, v)| w * v).sum()
}
