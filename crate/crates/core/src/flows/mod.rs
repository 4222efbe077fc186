//! Time integration of the fourth-order NLS in its physical, renormalized,
//! interaction-picture and frequency-truncated forms.
//!
//! Variants (Fourier side, `σ = ±1` the sign of the nonlinearity):
//!
//! * `Physical`: `i∂_t u_n = n⁴u_n + σ Σ_{n1-n2+n3=n} u_{n1} ū_{n2} u_{n3}`
//! * `Renormalized`: as above with `-2⨍|u|² u_n` added to the sum
//! * `Interaction`: `∂_t v_n = σ(-i Σ_{Γ(n)} e^{-iφt} v_{n1} v̄_{n2} v_{n3} + i|v_n|²v_n)`
//! * `TruncatedEmbedded`: the interaction field on `Γ_N`, frozen for `|n| > N`
//! * `TruncatedFinite`: the same system on `|n| ≤ N` only (high modes dropped)
//! * `ApproxPhysical`: `i∂_t u = ∂⁴u + σ P_{≤N}(|P_{≤N}u|² P_{≤N}u)`
//!
//! Physical-type variants step with the exact integrating factor for `∂⁴`
//! (Lawson RK4); interaction-type variants with classical RK4.

mod transforms;
mod vector_field;

pub use transforms::{
    explicit_residual, explicit_solution, free_flow, from_interaction, gauge_forward, gauge_inverse,
    gauge_truncated_forward, illposed_separation, to_interaction, IllPosedCase,
};
pub use vector_field::{interaction_linearization, interaction_trilinear, nonlinear_part, one_slot_replacements, rhs};

use crate::error::{Error, Result};
use crate::spectral::{Sign, SpectralField};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub const DEFAULT_N_GRID: usize = 32;
pub const DEFAULT_DT: f64 = 1e-3;
pub const VERIFY_DT: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Physical,
    Renormalized,
    Interaction,
    TruncatedEmbedded,
    TruncatedFinite,
    ApproxPhysical,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Physical,
        Variant::Renormalized,
        Variant::Interaction,
        Variant::TruncatedEmbedded,
        Variant::TruncatedFinite,
        Variant::ApproxPhysical,
    ];

    pub fn needs_truncation(self) -> bool {
        matches!(self, Variant::TruncatedEmbedded | Variant::TruncatedFinite | Variant::ApproxPhysical)
    }

    pub fn is_interaction_picture(self) -> bool {
        matches!(self, Variant::Interaction | Variant::TruncatedEmbedded | Variant::TruncatedFinite)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Physical => "physical",
            Variant::Renormalized => "renormalized",
            Variant::Interaction => "interaction",
            Variant::TruncatedEmbedded => "truncated_embedded",
            Variant::TruncatedFinite => "truncated_finite",
            Variant::ApproxPhysical => "approx_physical",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s.replace('-', "_"))
            .ok_or_else(|| Error::Parse(format!("unknown variant `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Exact integrating factor for the linear part, RK4 on the remainder.
    #[default]
    IfRk4,
    Rk4,
}

impl FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "if_rk4" => Ok(Integrator::IfRk4),
            "rk4" => Ok(Integrator::Rk4),
            _ => Err(Error::Parse(format!("unknown integrator `{s}`"))),
        }
    }
}

/// Which equation to integrate and how.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub variant: Variant,
    pub sign: Sign,
    /// Truncation `N`; required by the truncated and approximate variants.
    pub truncation: Option<usize>,
    pub dt: f64,
    pub integrator: Integrator,
}

impl FlowSpec {
    pub fn new(variant: Variant, dt: f64) -> Self {
        Self { variant, sign: Sign::Defocusing, truncation: None, dt, integrator: Integrator::IfRk4 }
    }

    pub fn truncated(variant: Variant, truncation: usize, dt: f64) -> Self {
        Self { truncation: Some(truncation), ..Self::new(variant, dt) }
    }

    pub fn with_sign(mut self, sign: Sign) -> Self {
        self.sign = sign;
        self
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub(crate) fn truncation_required(&self) -> Result<Option<usize>> {
        if self.variant.needs_truncation() {
            self.truncation.map(Some).ok_or_else(|| {
                Error::InvalidParameter(format!("variant {} requires a truncation N", self.variant))
            })
        } else {
            Ok(None)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        self.truncation_required()?;
        Ok(())
    }
}

/// Time-stamped states of one run, one per step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SpectralField>,
    pub spec: FlowSpec,
}

/// Serialized record `(t, field)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub field: SpectralField,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn initial(&self) -> &SpectralField {
        &self.states[0]
    }

    pub fn last(&self) -> &SpectralField {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory is never empty")
    }

    /// Uniform step width, or an error naming the first offending step.
    pub fn uniform_step(&self) -> Result<f64> {
        if self.len() < 2 {
            return Err(Error::TrajectoryTooShort { needed: 2, have: self.len() });
        }
        let h = self.times[1] - self.times[0];
        for (i, w) in self.times.windows(2).enumerate() {
            let width = w[1] - w[0];
            if (width - h).abs() > 1e-9 * h.abs() {
                return Err(Error::NonUniformSteps { index: i, width, expected: h });
            }
        }
        Ok(h)
    }

    pub fn records(&self) -> Vec<TrajectoryRecord> {
        self.times
            .iter()
            .zip(&self.states)
            .map(|(&t, f)| TrajectoryRecord { t, field: f.clone() })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.records())?)
    }

    /// Long-format CSV `t,n,re,im`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,n,re,im\n");
        for (t, f) in self.times.iter().zip(&self.states) {
            for (n, c) in f.modes() {
                out.push_str(&format!("{t:e},{n},{:e},{:e}\n", c.re, c.im));
            }
        }
        out
    }
}

/// Step widths covering `[t0, t1]`: uniform `±dt` plus a final partial step.
fn step_schedule(t0: f64, t1: f64, dt: f64) -> Vec<f64> {
    let span = t1 - t0;
    if span == 0.0 {
        return Vec::new();
    }
    let dir = span.signum();
    let ratio = span.abs() / dt;
    let full = (ratio + 1e-9).floor() as usize;
    let mut steps = vec![dir * dt; full];
    let rest = span.abs() - full as f64 * dt;
    if rest > 1e-9 * dt {
        steps.push(dir * rest);
    }
    steps
}

/// One step of the scheme from `(u, t)` with width `h`.
pub(crate) fn step(spec: &FlowSpec, u: &SpectralField, t: f64, h: f64) -> Result<SpectralField> {
    let use_factor = spec.integrator == Integrator::IfRk4 && !spec.variant.is_interaction_picture();
    let n_of = |f: &SpectralField, t: f64| -> Result<SpectralField> {
        if use_factor {
            nonlinear_part(spec, f, t)
        } else {
            rhs(spec, f, t)
        }
    };
    let half = Complex64::new(0.5 * h, 0.0);
    let full = Complex64::new(h, 0.0);
    let next = if use_factor {
        // Lawson RK4: RK4 on w = e^{iωτ}u over the step.
        let e1: Vec<Complex64> = u
            .frequencies()
            .map(|n| Complex64::from_polar(1.0, -0.5 * h * vector_field::linear_frequency(spec.variant, n)))
            .collect();
        let e2: Vec<Complex64> = e1.iter().map(|m| m * m).collect();
        let apply = |f: &SpectralField, e: &[Complex64]| -> SpectralField {
            let mut g = f.clone();
            g.coeffs_mut().iter_mut().zip(e).for_each(|(c, m)| *c *= m);
            g
        };
        let a = n_of(u, t)?;
        let ua = apply(&u.axpy(half, &a), &e1);
        let b = n_of(&ua, t + 0.5 * h)?;
        let ub = apply(u, &e1).axpy(half, &b);
        let c = n_of(&ub, t + 0.5 * h)?;
        let uc = apply(u, &e2).axpy(full, &apply(&c, &e1));
        let d = n_of(&uc, t + h)?;
        let mut out = apply(u, &e2);
        let sixth = h / 6.0;
        let (a2, bc) = (apply(&a, &e2), apply(&b.add(&c), &e1));
        for (i, slot) in out.coeffs_mut().iter_mut().enumerate() {
            *slot += sixth * (a2.coeffs()[i] + 2.0 * bc.coeffs()[i] + d.coeffs()[i]);
        }
        out
    } else {
        let k1 = n_of(u, t)?;
        let k2 = n_of(&u.axpy(half, &k1), t + 0.5 * h)?;
        let k3 = n_of(&u.axpy(half, &k2), t + 0.5 * h)?;
        let k4 = n_of(&u.axpy(full, &k3), t + h)?;
        let mut out = u.clone();
        let sixth = h / 6.0;
        for (i, slot) in out.coeffs_mut().iter_mut().enumerate() {
            let incr = k1.coeffs()[i] + 2.0 * (k2.coeffs()[i] + k3.coeffs()[i]) + k4.coeffs()[i];
            if incr != Complex64::new(0.0, 0.0) {
                *slot += sixth * incr;
            }
        }
        out
    };
    if !next.is_finite() {
        return Err(Error::NonFinite { time: t + h });
    }
    Ok(next)
}

/// Integrates `f0` from `t0` to `t1`, storing every step.
pub fn evolve(spec: &FlowSpec, f0: &SpectralField, t0: f64, t1: f64) -> Result<Trajectory> {
    spec.validate()?;
    vector_field::check_field(spec, f0)?;
    let mut state = match spec.variant {
        Variant::TruncatedFinite => f0.project_low(spec.truncation.unwrap()),
        _ => f0.clone(),
    };
    let steps = step_schedule(t0, t1, spec.dt);
    let mut times = Vec::with_capacity(steps.len() + 1);
    let mut states = Vec::with_capacity(steps.len() + 1);
    let mut t = t0;
    times.push(t);
    states.push(state.clone());
    let zero = state.is_zero();
    for (k, h) in steps.iter().enumerate() {
        if !zero {
            state = step(spec, &state, t, *h)?;
        }
        t = if k + 1 == steps.len() { t1 } else { t0 + (k + 1) as f64 * h };
        times.push(t);
        states.push(state.clone());
    }
    Ok(Trajectory { times, states, spec: *spec })
}

/// Final state only, without storing the trajectory.
pub fn flow_map(spec: &FlowSpec, f0: &SpectralField, t0: f64, t1: f64) -> Result<SpectralField> {
    spec.validate()?;
    vector_field::check_field(spec, f0)?;
    let mut state = match spec.variant {
        Variant::TruncatedFinite => f0.project_low(spec.truncation.unwrap()),
        _ => f0.clone(),
    };
    if state.is_zero() {
        return Ok(state);
    }
    let mut t = t0;
    let steps = step_schedule(t0, t1, spec.dt);
    for (k, h) in steps.iter().enumerate() {
        state = step(spec, &state, t, *h)?;
        t = if k + 1 == steps.len() { t1 } else { t0 + (k + 1) as f64 * h };
    }
    Ok(state)
}

/// Final states for an ensemble; independent of the worker count.
pub fn flow_map_many(
    spec: &FlowSpec,
    inits: &[SpectralField],
    t0: f64,
    t1: f64,
) -> Result<Vec<SpectralField>> {
    inits.par_iter().map(|f| flow_map(spec, f, t0, t1)).collect()
}

/// Largest relative deviation of the centered time derivative from the
/// vector field over interior samples, each normalized by `‖f‖_{L²}`.
pub fn residual(traj: &Trajectory) -> Result<f64> {
    if traj.len() < 3 {
        return Err(Error::TrajectoryTooShort { needed: 3, have: traj.len() });
    }
    let mut worst: f64 = 0.0;
    for k in 1..traj.len() - 1 {
        let (tm, t, tp) = (traj.times[k - 1], traj.times[k], traj.times[k + 1]);
        let (hm, hp) = (t - tm, tp - t);
        // Second-order three-point derivative on a possibly uneven stencil.
        let wm = -hp / (hm * (hm + hp));
        let w0 = (hp - hm) / (hm * hp);
        let wp = hm / (hp * (hm + hp));
        let f = &traj.states[k];
        let norm = f.l2_norm();
        if norm == 0.0 {
            continue;
        }
        let field = rhs(&traj.spec, f, t)?;
        let err: f64 = (0..f.len())
            .map(|i| {
                let d = traj.states[k - 1].coeffs()[i] * wm
                    + f.coeffs()[i] * w0
                    + traj.states[k + 1].coeffs()[i] * wp;
                (d - field.coeffs()[i]).norm_sqr()
            })
            .sum::<f64>()
            .sqrt();
        worst = worst.max(err / norm);
    }
    Ok(worst)
}
