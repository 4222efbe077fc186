//! Fourier-side vector fields of every equation variant.

use super::{FlowSpec, Variant};
use crate::error::{Error, Result};
use crate::spectral::{cubic_product, SpectralField};
use num_complex::Complex64;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[inline]
pub(crate) fn n4(n: i64) -> f64 {
    let m = (n * n) as f64;
    m * m
}

/// Frequency of the linear part `-i ω_n u_n` carried by the variant.
#[inline]
pub(crate) fn linear_frequency(variant: Variant, n: i64) -> f64 {
    match variant {
        Variant::Physical | Variant::Renormalized | Variant::ApproxPhysical => n4(n),
        Variant::Interaction | Variant::TruncatedEmbedded | Variant::TruncatedFinite => 0.0,
    }
}

pub(crate) fn check_field(spec: &FlowSpec, f: &SpectralField) -> Result<()> {
    if let Some(trunc) = spec.truncation_required()? {
        if trunc > f.n_grid() {
            return Err(Error::TruncationTooLarge { trunc, n_grid: f.n_grid() });
        }
    }
    if !f.is_finite() {
        return Err(Error::InvalidParameter("field has non-finite coefficients".into()));
    }
    Ok(())
}

/// Trilinear interaction form
/// `T(a, b, c)_n = -iσ Σ_{Γ(n)} e^{-iφt} a_{n1} b̄_{n2} c_{n3} + iσ a_n b̄_n c_n`,
/// so that the interaction-picture field is `T(v, v, v)`.
///
/// With `ã = S(t)a` etc. the full convolution `C(ã, b̃, c̃)` contains, besides
/// `Γ(n)`, the excluded sets `n1 = n` and `n3 = n`; these sum to
/// `ã_n⟨b̃, c̃⟩ + c̃_n⟨b̃, ã⟩ - ã_n b̃̄_n c̃_n`, and the last piece cancels the
/// resonant term.
pub fn interaction_trilinear(
    a: &SpectralField,
    b: &SpectralField,
    c: &SpectralField,
    t: f64,
    sign: f64,
    trunc: Option<usize>,
) -> SpectralField {
    let n_grid = a.n_grid();
    let prep = |f: &SpectralField| {
        let f = match trunc {
            Some(n) if n < f.n_grid() => f.project_low(n),
            _ => f.clone(),
        };
        f.rotate_modes(|n| -t * n4(n))
    };
    let (a, b, c) = (prep(a), prep(b), prep(c));
    let conv = cubic_product(&a, &b, &c);
    let pair = |x: &SpectralField, y: &SpectralField| -> Complex64 {
        x.coeffs().iter().zip(y.coeffs()).map(|(p, q)| p.conj() * q).sum()
    };
    let (bc, ba) = (pair(&b, &c), pair(&b, &a));
    let limit = trunc.map(|n| n as i64).unwrap_or(i64::MAX);
    let mut out = SpectralField::zeros(n_grid);
    for (n, slot) in a.frequencies().zip(out.coeffs_mut().iter_mut()) {
        if n.abs() > limit {
            continue;
        }
        let inner = conv.get(n) - a.get(n) * bc - c.get(n) * ba;
        *slot = -I * sign * Complex64::from_polar(1.0, t * n4(n)) * inner;
    }
    out
}

/// Sum over one-slot replacements of a trilinear form: the three terms
/// `f(w, v, v)`, `f(v, w, v)`, `f(v, v, w)`, returned separately.
pub fn one_slot_replacements<F>(f: F, v: &SpectralField, w: &SpectralField) -> [SpectralField; 3]
where
    F: Fn(&SpectralField, &SpectralField, &SpectralField) -> SpectralField,
{
    [f(w, v, v), f(v, w, v), f(v, v, w)]
}

fn interaction_nonlinearity(v: &SpectralField, t: f64, sign: f64, trunc: Option<usize>) -> SpectralField {
    interaction_trilinear(v, v, v, t, sign, trunc)
}

/// Nonlinear part of the vector field (everything except `-iω_n f_n`).
pub fn nonlinear_part(spec: &FlowSpec, f: &SpectralField, t: f64) -> Result<SpectralField> {
    check_field(spec, f)?;
    let sign = spec.sign.value();
    let out = match spec.variant {
        Variant::Physical => cubic_product(f, f, f).scaled(-I * sign),
        Variant::Renormalized => {
            let conv = cubic_product(f, f, f);
            conv.axpy(Complex64::new(-2.0 * f.norm_sq(), 0.0), f).scaled(-I * sign)
        }
        Variant::ApproxPhysical => {
            let n = spec.truncation_required()?.unwrap();
            let low = f.project_low(n);
            cubic_product(&low, &low, &low).project_low(n).scaled(-I * sign)
        }
        Variant::Interaction => interaction_nonlinearity(f, t, sign, None),
        Variant::TruncatedEmbedded | Variant::TruncatedFinite => {
            interaction_nonlinearity(f, t, sign, spec.truncation_required()?)
        }
    };
    Ok(out)
}

/// Full Fourier-side vector field `∂_t f = rhs(f, t)`.
pub fn rhs(spec: &FlowSpec, f: &SpectralField, t: f64) -> Result<SpectralField> {
    let mut out = nonlinear_part(spec, f, t)?;
    for ((n, c), slot) in f.modes().zip(out.coeffs_mut().iter_mut()) {
        let w = linear_frequency(spec.variant, n);
        if w != 0.0 {
            *slot -= I * w * c;
        }
    }
    if spec.variant == Variant::TruncatedFinite {
        let n = spec.truncation_required()?.unwrap();
        out = out.project_low(n);
    }
    Ok(out)
}

/// Derivative of the interaction-picture field at `v` in direction `w`:
/// each cubic slot replaced by `w` once.
pub fn interaction_linearization(
    v: &SpectralField,
    w: &SpectralField,
    t: f64,
    sign: f64,
    trunc: Option<usize>,
) -> SpectralField {
    let [x, y, z] = one_slot_replacements(|a, b, c| interaction_trilinear(a, b, c, t, sign, trunc), v, w);
    x.add(&y).add(&z)
}
