//! Gauge and interaction-picture changes of variables, the free flow, and
//! the explicit single-mode solutions.

use super::vector_field::n4;
use super::{nonlinear_part, FlowSpec, Variant};
use crate::error::{Error, Result};
use crate::spectral::{Sign, SobolevIndex, SpectralField};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

/// `G_t f = e^{2iσt⨍|f|²} f`.
pub fn gauge_forward(f: &SpectralField, t: f64, sign: Sign) -> SpectralField {
    f.scaled(Complex64::from_polar(1.0, 2.0 * sign.value() * t * f.norm_sq()))
}

/// `G_t^{-1} f = e^{-2iσt⨍|f|²} f`; exact inverse since `G_t` preserves `⨍|f|²`.
pub fn gauge_inverse(f: &SpectralField, t: f64, sign: Sign) -> SpectralField {
    gauge_forward(f, -t, sign)
}

/// `G_{N,t} f = e^{2iσt⨍|P_{≤N} f|²} f`, the gauge adapted to the approximate flow.
pub fn gauge_truncated_forward(f: &SpectralField, t: f64, trunc: usize, sign: Sign) -> SpectralField {
    let m = f.project_low(trunc).norm_sq();
    f.scaled(Complex64::from_polar(1.0, 2.0 * sign.value() * t * m))
}

/// Linear propagator `S(t) = e^{-it∂⁴}`: `f_n ↦ e^{-itn⁴} f_n`.
pub fn free_flow(f: &SpectralField, t: f64) -> SpectralField {
    f.rotate_modes(|n| -t * n4(n))
}

/// `v_n = e^{itn⁴} ũ_n`.
pub fn to_interaction(f: &SpectralField, t: f64) -> SpectralField {
    free_flow(f, -t)
}

pub fn from_interaction(f: &SpectralField, t: f64) -> SpectralField {
    free_flow(f, t)
}

fn nonlinear_frequency(mode: usize, a: Complex64, sign: Sign, s: SobolevIndex) -> f64 {
    sign.value() * (mode as f64).powf(-2.0 * s.value()) * a.norm_sqr()
}

/// Single-mode solution `u = N^{-s} a e^{i(Nx - N⁴t ∓ N^{-2s}|a|²t)}` of the
/// physical equation. With `f(x) = Σ f_n e^{inx}` the cubic term of a single
/// mode is `|f_N|² f_N` pointwise, so the nonlinear phase constant is 1.
///
/// The two phases are applied as separate factors so that the nonlinear
/// phase keeps full precision when `N⁴t` is large.
pub fn explicit_solution(mode: usize, a: Complex64, sign: Sign, t: f64, s: SobolevIndex) -> Result<SpectralField> {
    if mode == 0 {
        return Err(Error::InvalidParameter("explicit solution requires N >= 1".into()));
    }
    let amp = (mode as f64).powf(-s.value()) * a;
    let linear = Complex64::from_polar(1.0, -n4(mode as i64) * t);
    let nonlinear = Complex64::from_polar(1.0, -nonlinear_frequency(mode, a, sign, s) * t);
    SpectralField::from_modes(mode, &[(mode as i64, amp * linear * nonlinear)])
}

/// Residual of the explicit solution against the physical equation at time
/// `t`, relative to `‖u‖_{L²}`. The closed-form derivative
/// `-i(N⁴ + σN^{-2s}|a|²)u` is compared termwise: the `N⁴` part is the
/// linear operator itself, so the residual reduces to the nonlinear part.
pub fn explicit_residual(mode: usize, a: Complex64, sign: Sign, t: f64, s: SobolevIndex) -> Result<f64> {
    let u = explicit_solution(mode, a, sign, t, s)?;
    let norm = u.l2_norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let spec = FlowSpec::new(Variant::Physical, 1.0).with_sign(sign);
    let field = nonlinear_part(&spec, &u, t)?;
    let omega = nonlinear_frequency(mode, a, sign, s);
    let closed = u.scaled(Complex64::new(0.0, -omega));
    Ok(field.l2_distance(&closed) / norm)
}

/// One row of the norm-inflation computation for data
/// `u^{(N,1)}(0)` and `u^{(N,1+1/n)}(0)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IllPosedCase {
    pub n: u32,
    pub mode: usize,
    pub t_n: f64,
    pub initial_distance: f64,
    pub separation: f64,
    pub expected: f64,
}

/// `t_n = π N^{2s} / ((1 + 1/n)² - 1)`; the mode `N_n` is the smallest with
/// `t_n ≤ 1/n` and `|(⟨N⟩/N)^s - 1| ≤ 1e-10`, so that the inhomogeneous
/// `H^s` norm of `N^{-s}e^{iNx}` is 1 to that precision.
pub fn illposed_separation(n: u32, sign: Sign, s: SobolevIndex) -> Result<IllPosedCase> {
    if n == 0 || s.value() >= 0.0 {
        return Err(Error::InvalidParameter("requires n >= 1 and s < 0".into()));
    }
    let nf = n as f64;
    let gap = (1.0 + 1.0 / nf).powi(2) - 1.0;
    let t_of = |m: f64| PI * m.powf(2.0 * s.value()) / gap;
    let mut mode = 1usize;
    loop {
        let m = mode as f64;
        let ratio = (1.0 + 1.0 / (m * m)).powf(0.5 * s.value());
        if t_of(m) <= 1.0 / nf && (ratio - 1.0).abs() <= 1e-10 {
            break;
        }
        mode = (mode as f64 * 1.05).ceil() as usize + 1;
    }
    // Walk back down to the smallest admissible mode.
    while mode > 1 {
        let m = (mode - 1) as f64;
        let ratio = (1.0 + 1.0 / (m * m)).powf(0.5 * s.value());
        if t_of(m) <= 1.0 / nf && (ratio - 1.0).abs() <= 1e-10 {
            mode -= 1;
        } else {
            break;
        }
    }
    let t_n = t_of(mode as f64);
    let a = Complex64::new(1.0, 0.0);
    let b = Complex64::new(1.0 + 1.0 / nf, 0.0);
    let u0 = explicit_solution(mode, a, sign, 0.0, s)?;
    let v0 = explicit_solution(mode, b, sign, 0.0, s)?;
    let ut = explicit_solution(mode, a, sign, t_n, s)?;
    let vt = explicit_solution(mode, b, sign, t_n, s)?;
    Ok(IllPosedCase {
        n,
        mode,
        t_n,
        initial_distance: u0.sub(&v0).sobolev_norm(s),
        separation: ut.sub(&vt).sobolev_norm(s),
        expected: 2.0 + 1.0 / nf,
    })
}
