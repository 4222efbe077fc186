use crate::error::{Error, Result};
use crate::flows::{evolve, interaction_linearization, FlowSpec, Variant};
use crate::normalform::linearized_evolve;
use crate::phase::GammaTable;
use crate::report::DiagnosticsReport;
use crate::spectral::{Sign, SpectralField};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

/// Real basis direction `j` of the `2(2N+1)`-dimensional state: `e_n` for
/// `j < 2N+1`, `i e_n` after.
fn direction(n_grid: usize, j: usize) -> SpectralField {
    let dim = 2 * n_grid + 1;
    let mut w = SpectralField::zeros(n_grid);
    let unit = if j < dim { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 1.0) };
    w.coeffs_mut()[j % dim] = unit;
    w
}

fn real_column(w: &SpectralField) -> Vec<f64> {
    w.coeffs().iter().map(|c| c.re).chain(w.coeffs().iter().map(|c| c.im)).collect()
}

/// Divergence of the truncated interaction vector field at `(v, t)`,
/// the trace of its real Jacobian.
pub fn divergence(v: &SpectralField, t: f64, n: usize, sign: Sign) -> f64 {
    let dim = 2 * v.n_grid() + 1;
    (0..2 * dim)
        .map(|j| {
            let l = interaction_linearization(v, &direction(v.n_grid(), j), t, sign.value(), Some(n)).project_low(n);
            let c = l.coeffs()[j % dim];
            if j < dim {
                c.re
            } else {
                c.im
            }
        })
        .sum()
}

/// `(no diagonal entries in Γ_N, largest resonant imbalance)`. The resonant
/// term `iσ|v_n|²v_n` contributes `2iσ|v_n|²` to the holomorphic divergence
/// and its conjugate equation `-2iσ|v_n|²`.
fn symbolic_divergence(table: &GammaTable, v: &SpectralField, sign: Sign) -> (bool, f64) {
    let n_max = table.truncation() as i64;
    let no_diagonal = (-n_max..=n_max).all(|n| table.at(n).iter().all(|e| e.n1 != n && e.n3 != n));
    let imbalance = (-n_max..=n_max)
        .map(|n| {
            let hol = Complex64::new(0.0, 2.0 * sign.value() * v.get(n).norm_sqr());
            (hol + hol.conj()).norm()
        })
        .fold(0.0, f64::max);
    (no_diagonal, imbalance)
}

/// Symbolic and numeric checks that the truncated flow `Ψ_N(t)` preserves
/// Lebesgue measure on the modes `|n| ≤ N`.
pub fn liouville_check(n: usize, t: f64, u0: &SpectralField, dt: f64) -> Result<DiagnosticsReport> {
    if u0.frequencies().any(|m| m.unsigned_abs() as usize > n && u0.get(m) != Complex64::new(0.0, 0.0)) {
        return Err(Error::InvalidParameter(format!("initial data must be supported in |n| <= {n}")));
    }
    let sign = Sign::Defocusing;
    let v0 = u0.regrid(n);
    let mut report = DiagnosticsReport::new("liouville-check");
    report.config("N", n).config("t", t).config("dt", dt);

    let table = GammaTable::new(n)?;
    let (no_diagonal, imbalance) = symbolic_divergence(&table, &v0, sign);
    report.scalar("resonant_imbalance", imbalance);
    report.flag("no_diagonal_terms", no_diagonal);
    report.flag("resonant_cancellation", imbalance == 0.0);
    let div = divergence(&v0, 0.0, n, sign);
    report.scalar("divergence_at_u0", div);

    let spec = FlowSpec::truncated(Variant::TruncatedFinite, n, dt).with_sign(sign);
    let traj = evolve(&spec, &v0, 0.0, t)?;
    let dim = 2 * n + 1;
    let columns: Vec<Vec<f64>> = (0..2 * dim)
        .into_par_iter()
        .map(|j| Ok(real_column(linearized_evolve(&traj, &direction(n, j))?.last())))
        .collect::<Result<_>>()?;
    let jac = DMatrix::from_fn(2 * dim, 2 * dim, |i, j| columns[j][i]);
    let det = jac.lu().determinant();
    let log_det = det.abs().ln();
    report.scalar("det", det).scalar("log_det_abs", log_det.abs()).scalar("steps", (traj.len() - 1) as f64);
    report.flag("log_det_within_1e-6", log_det.abs() <= 1e-6 && det > 0.0);
    Ok(report)
}
