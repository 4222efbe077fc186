//! Duhamel splitting of the interaction-picture equation, its normal-form
//! decomposition by integration by parts in time, smoothing diagnostics,
//! and the linearized flow with Hilbert–Schmidt diagnostics.

use crate::error::{Error, Result};
use crate::flows::{
    evolve, interaction_linearization, one_slot_replacements, rhs, FlowSpec, Trajectory, Variant,
};
use crate::phase::GammaTable;
use crate::quadrature::integrate_with_estimate;
use crate::report::{ratio, DiagnosticsReport, SeriesPoint};
use crate::spectral::{bracket, SobolevIndex, SpectralField};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

/// `v(t) = v(0) + nonresonant + resonant`.
#[derive(Debug, Clone)]
pub struct DuhamelSplit {
    pub nonresonant: SpectralField,
    pub resonant: SpectralField,
    pub t: f64,
    pub quadrature_error_estimate: f64,
}

/// Boundary terms at `t` and `0` and the two quintic integrals.
#[derive(Debug, Clone)]
pub struct NormalFormTerms {
    pub boundary_t: SpectralField,
    pub boundary_0: SpectralField,
    pub integral_cubic_a: SpectralField,
    pub integral_cubic_b: SpectralField,
    pub t: f64,
    pub quadrature_error_estimate: f64,
}

impl NormalFormTerms {
    pub fn sum(&self) -> SpectralField {
        self.boundary_t.add(&self.boundary_0).add(&self.integral_cubic_a).add(&self.integral_cubic_b)
    }
}

fn require_interaction(traj: &Trajectory) -> Result<f64> {
    if traj.spec.variant != Variant::Interaction {
        return Err(Error::WrongVariant { expected: "interaction", found: traj.spec.variant.to_string() });
    }
    if traj.len() < 2 {
        return Ok(0.0);
    }
    traj.uniform_step()
}

/// `iσ|v_n|²v_n`.
pub fn resonant_field(v: &SpectralField, sign: f64) -> SpectralField {
    let mut out = v.clone();
    for c in out.coeffs_mut() {
        *c *= Complex64::new(0.0, sign * c.norm_sqr());
    }
    out
}

/// `Σ_{Γ(n)} e^{-iφt}/φ · a_{n1} b̄_{n2} c_{n3}` for `|n| ≤ N` of the table.
pub fn phase_weighted_trilinear(
    table: &GammaTable,
    a: &SpectralField,
    b: &SpectralField,
    c: &SpectralField,
    t: f64,
) -> SpectralField {
    let mut out = SpectralField::zeros(a.n_grid());
    let limit = table.truncation() as i64;
    for n in -limit..=limit {
        let mut acc = Complex64::new(0.0, 0.0);
        for e in table.at(n) {
            let phi = e.phi_f64();
            let w = Complex64::from_polar(1.0 / phi, -phi * t);
            acc += w * a.get(e.n1) * b.get(e.n2).conj() * c.get(e.n3);
        }
        out.set(n, acc);
    }
    out
}

pub fn duhamel_split(traj: &Trajectory) -> Result<DuhamelSplit> {
    let h = require_interaction(traj)?;
    let sign = traj.spec.sign.value();
    let mut nonres = Vec::with_capacity(traj.len());
    let mut res = Vec::with_capacity(traj.len());
    for (v, &t) in traj.states.iter().zip(&traj.times) {
        let r = resonant_field(v, sign);
        nonres.push(rhs(&traj.spec, v, t)?.sub(&r));
        res.push(r);
    }
    let (nonresonant, e1) = integrate_with_estimate(&nonres, h);
    let (resonant, e2) = integrate_with_estimate(&res, h);
    Ok(DuhamelSplit {
        nonresonant,
        resonant,
        t: traj.final_time() - traj.times[0],
        quadrature_error_estimate: e1 + e2,
    })
}

pub fn normal_form_terms(traj: &Trajectory) -> Result<NormalFormTerms> {
    let h = require_interaction(traj)?;
    let sign = traj.spec.sign.value();
    let table = GammaTable::new(traj.initial().n_grid())?;
    let (v0, t0) = (traj.initial(), traj.times[0]);
    let (vt, t) = (traj.last(), traj.final_time());
    let pw = |a: &SpectralField, b: &SpectralField, c: &SpectralField, t: f64| {
        phase_weighted_trilinear(&table, a, b, c, t)
    };
    let boundary_t = pw(vt, vt, vt, t).scaled(Complex64::new(sign, 0.0));
    let boundary_0 = pw(v0, v0, v0, t0).scaled(Complex64::new(-sign, 0.0));
    let pieces: Vec<(SpectralField, SpectralField)> = traj
        .states
        .par_iter()
        .zip(traj.times.par_iter())
        .map(|(v, &s)| -> Result<_> {
            let dv = rhs(&traj.spec, v, s)?;
            let [x, y, z] = one_slot_replacements(|a, b, c| pw(a, b, c, s), v, &dv);
            Ok((x.add(&z), y))
        })
        .collect::<Result<_>>()?;
    let (outer, middle): (Vec<_>, Vec<_>) = pieces.into_iter().unzip();
    let (a, ea) = integrate_with_estimate(&outer, h);
    let (b, eb) = integrate_with_estimate(&middle, h);
    Ok(NormalFormTerms {
        boundary_t,
        boundary_0,
        integral_cubic_a: a.scaled(Complex64::new(-sign, 0.0)),
        integral_cubic_b: b.scaled(Complex64::new(-sign, 0.0)),
        t: t - t0,
        quadrature_error_estimate: ea + eb,
    })
}

pub fn smoothing_report(traj: &Trajectory, s: SobolevIndex) -> Result<DiagnosticsReport> {
    let split = duhamel_split(traj)?;
    let sv = s.value();
    let sup = traj.states.iter().map(|v| v.sobolev_norm(s)).fold(0.0, f64::max);
    let t = split.t;
    let lhs_n = split.nonresonant.sobolev_norm(SobolevIndex(sv + 2.0));
    let lhs_r = split.resonant.sobolev_norm(SobolevIndex(3.0 * sv));
    let rhs_n = traj.initial().sobolev_norm(s).powi(3) + traj.last().sobolev_norm(s).powi(3) + t * sup.powi(5);
    let rhs_r = t * sup.powi(3);
    let mut r = DiagnosticsReport::new("smoothing");
    r.config("s", sv).config("t", t);
    r.scalar("nonresonant_lhs", lhs_n)
        .scalar("nonresonant_rhs", rhs_n)
        .scalar("nonresonant_ratio", ratio(lhs_n, rhs_n))
        .scalar("resonant_lhs", lhs_r)
        .scalar("resonant_rhs", rhs_r)
        .scalar("resonant_ratio", ratio(lhs_r, rhs_r))
        .scalar("quadrature_error", split.quadrature_error_estimate);
    r.flag("resonant_bound", lhs_r <= rhs_r * (1.0 + 1e-6));
    r.flag("regime", sv > 0.5);
    Ok(r)
}

/// Solution `w` of the linearized interaction equation along a stored base.
#[derive(Debug, Clone)]
pub struct LinearizedTrajectory {
    pub base: Trajectory,
    pub w: Vec<SpectralField>,
}

impl LinearizedTrajectory {
    pub fn last(&self) -> &SpectralField {
        self.w.last().expect("linearized trajectory is never empty")
    }
}

fn linearized_field(spec: &FlowSpec, v: &SpectralField, w: &SpectralField, t: f64) -> Result<SpectralField> {
    let trunc = spec.truncation;
    let trunc = if spec.variant == Variant::Interaction { None } else { trunc };
    let out = interaction_linearization(v, w, t, spec.sign.value(), trunc);
    Ok(match (spec.variant, trunc) {
        (Variant::TruncatedFinite, Some(n)) => out.project_low(n),
        _ => out,
    })
}

/// RK4 on the pair `(v, w)`, with the base stages rebuilt from the stored
/// states so that `w` is the exact derivative of the discrete flow.
pub fn linearized_evolve(base: &Trajectory, w0: &SpectralField) -> Result<LinearizedTrajectory> {
    let spec = &base.spec;
    if !spec.variant.is_interaction_picture() {
        return Err(Error::WrongVariant { expected: "interaction picture", found: spec.variant.to_string() });
    }
    base.initial().check_grid(w0)?;
    let mut w = vec![w0.clone()];
    for k in 0..base.len() - 1 {
        let (t, h) = (base.times[k], base.times[k + 1] - base.times[k]);
        let (v, wk) = (&base.states[k], &w[k]);
        let half = Complex64::new(0.5 * h, 0.0);
        let full = Complex64::new(h, 0.0);
        let k1v = rhs(spec, v, t)?;
        let k1w = linearized_field(spec, v, wk, t)?;
        let v2 = v.axpy(half, &k1v);
        let k2v = rhs(spec, &v2, t + 0.5 * h)?;
        let k2w = linearized_field(spec, &v2, &wk.axpy(half, &k1w), t + 0.5 * h)?;
        let v3 = v.axpy(half, &k2v);
        let k3w = linearized_field(spec, &v3, &wk.axpy(half, &k2w), t + 0.5 * h)?;
        let k3v = rhs(spec, &v3, t + 0.5 * h)?;
        let v4 = v.axpy(full, &k3v);
        let k4w = linearized_field(spec, &v4, &wk.axpy(full, &k3w), t + h)?;
        let sum = k1w.add(&k2w.add(&k3w).scaled(Complex64::new(2.0, 0.0))).add(&k4w);
        let next = wk.axpy(Complex64::new(h / 6.0, 0.0), &sum);
        if !next.is_finite() {
            return Err(Error::NonFinite { time: t + h });
        }
        w.push(next);
    }
    Ok(LinearizedTrajectory { base: base.clone(), w })
}

/// Default `(σ₁, σ₂)` and whether they satisfy `s - σ₁ > 1/2`,
/// `(s + σ₂)/3 ≤ s - σ₁`, `s + σ₂ - 2 ≤ s - σ₁` with `σ₁, σ₂ > 1/2`.
pub fn sigma_defaults(s: f64) -> (f64, f64, bool) {
    let mut sigma = 0.51 + (s - 1.0) / 3.0;
    if s > 1.0 {
        sigma = sigma.min(0.5 * s).min(1.0).min(s - 0.5 - 1e-9);
    }
    let feasible =
        sigma > 0.5 && s - sigma > 0.5 && (s + sigma) / 3.0 <= s - sigma && s + sigma - 2.0 <= s - sigma;
    (sigma, sigma, feasible)
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return f64::NAN;
    }
    let (mx, my) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        f64::NAN
    } else {
        sxy / sxx
    }
}

/// Matrix of `DK(t)|_{u0}` on the real span of `e_n⟨n⟩^{-s}` and
/// `i e_n⟨n⟩^{-s}`, `|n| ≤ M`, with outputs measured in `H^s`.
pub fn dk_hs_diagnostics(
    spec: &FlowSpec,
    u0: &SpectralField,
    t: f64,
    s: SobolevIndex,
    m: usize,
) -> Result<DiagnosticsReport> {
    if m > u0.n_grid() {
        return Err(Error::TruncationTooLarge { trunc: m, n_grid: u0.n_grid() });
    }
    let base = evolve(spec, u0, 0.0, t)?;
    let inputs: Vec<(i64, Complex64)> = (-(m as i64)..=m as i64)
        .flat_map(|n| [(n, Complex64::new(1.0, 0.0)), (n, Complex64::new(0.0, 1.0))])
        .collect();
    let columns: Vec<SpectralField> = inputs
        .par_iter()
        .map(|&(n, dir)| -> Result<SpectralField> {
            let w0 = SpectralField::from_modes(u0.n_grid(), &[(n, dir / s.weight_sq(n).sqrt())])?;
            let lin = linearized_evolve(&base, &w0)?;
            Ok(lin.last().sub(&w0))
        })
        .collect::<Result<_>>()?;
    let col_sq: Vec<f64> = columns.iter().map(|c| c.sobolev_norm_sq(s)).collect();
    let hs = col_sq.iter().sum::<f64>().sqrt();
    let (sigma1, sigma2, feasible) = sigma_defaults(s.value());

    let mut r = DiagnosticsReport::new("ramer-diagnostics");
    r.config("s", s.value()).config("t", t).config("M", m).config("dt", spec.dt);
    r.config("sigma1", sigma1).config("sigma2", sigma2);
    let mut fit = Vec::new();
    for (k, n) in (-(m as i64)..=m as i64).enumerate() {
        let norm = (col_sq[2 * k] + col_sq[2 * k + 1]).sqrt();
        r.push("column_norms", SeriesPoint::new(n as f64, norm, 0.0));
        r.push("reference", SeriesPoint::new(n as f64, bracket(n).powf(-sigma2), 0.0));
        if norm > 0.0 {
            fit.push((bracket(n).ln(), norm.ln()));
        }
    }
    let exponent = -least_squares_slope(&fit);

    // Real matrix of Id + DK restricted to the input span, in H^s coordinates.
    let dim = inputs.len();
    let mut mat = DMatrix::<f64>::identity(dim, dim);
    for (j, col) in columns.iter().enumerate() {
        for (i, &(n, dir)) in inputs.iter().enumerate() {
            let c = col.get(n) * s.weight_sq(n).sqrt();
            mat[(i, j)] += if dir.re != 0.0 { c.re } else { c.im };
        }
    }
    let sv = mat.singular_values();
    let (smax, smin) = sv.iter().fold((0.0f64, f64::INFINITY), |(a, b), &x| (a.max(x), b.min(x)));

    r.scalar("hs_norm", hs)
        .scalar("decay_exponent", exponent)
        .scalar("condition_number", ratio(smax, smin))
        .scalar("min_singular_value", smin);
    r.flag("hs_finite", hs.is_finite());
    r.flag("sigma_feasible", feasible);
    r.note("window", "t is an implementation choice for the short-time window");
    Ok(r)
}

/// Normal-form identity and resonant bound for one trajectory.
pub fn normal_form_check(traj: &Trajectory, s: SobolevIndex) -> Result<DiagnosticsReport> {
    let split = duhamel_split(traj)?;
    let terms = normal_form_terms(traj)?;
    let mut r = smoothing_report(traj, s)?;
    r.command = "normalform-check".into();
    let identity = terms.sum().l2_distance(&split.nonresonant);
    let duhamel = traj.initial().add(&split.nonresonant).add(&split.resonant).l2_distance(traj.last());
    r.scalar("identity_error", identity)
        .scalar("duhamel_residual", duhamel)
        .scalar("normal_form_quadrature_error", terms.quadrature_error_estimate);
    Ok(r)
}
