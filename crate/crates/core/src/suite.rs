//! The acceptance batteries at three scales.

use crate::energy::{derivative_terms, energy_bound_scan, EnergyScanConfig};
use crate::error::{Error, Result};
use crate::flows::{
    evolve, explicit_residual, flow_map_many, free_flow, gauge_inverse, illposed_separation, FlowSpec, Variant,
};
use crate::measures::{
    change_of_variable_test, gaussian_field, invariance_meta_test, invariance_test, liouville_check,
    lp_weight_convergence, sample, EventSpec, GaussianSpec, InvarianceConfig, Transform, TransportConfig,
};
use crate::normalform::normal_form_check;
use crate::phase::{phi, phi_factored, FrequencyQuad};
use crate::report::{DiagnosticsReport, SeriesPoint};
use crate::spectral::{Sign, SobolevIndex, SpectralField};
use num_complex::Complex64;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Smoke,
    Verify,
    Full,
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smoke" => Ok(Scale::Smoke),
            "verify" => Ok(Scale::Verify),
            "full" => Ok(Scale::Full),
            other => Err(Error::Parse(format!("unknown suite `{other}` (smoke, verify, full)"))),
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Smoke => "smoke",
            Scale::Verify => "verify",
            Scale::Full => "full",
        })
    }
}

struct Battery {
    phase_bound: i64,
    /// `(n_grid, N, draws, t)` of the conservation and composition checks.
    flow: (usize, usize, usize, f64),
    /// `(draws, n_grid, t)` of the normal-form checks.
    normal_form: (usize, usize, f64),
    liouville: (&'static [usize], f64, u64),
    /// `(count, cutoff, seeds)`.
    invariance: (usize, usize, u64),
    energy_identity: (usize, usize),
    scan: EnergyScanConfig,
    /// `(reference grid, truncations, draws, t)`.
    approximation: (usize, &'static [usize], usize, f64),
    lp: TransportConfig,
    lp_n: &'static [usize],
    cov: TransportConfig,
}

impl Battery {
    fn new(scale: Scale) -> Self {
        let verify_cov = TransportConfig { n: 4, count: 20_000, ..Default::default() };
        let verify_lp = TransportConfig { count: 10_000, ..Default::default() };
        match scale {
            Scale::Smoke => Battery {
                phase_bound: 20,
                flow: (8, 4, 3, 0.05),
                normal_form: (4, 6, 0.02),
                liouville: (&[2, 3], 0.2, 2),
                invariance: (2000, 8, 5),
                energy_identity: (2, 4),
                scan: EnergyScanConfig { ensemble: 8, n_list: vec![4, 8], t_end: 5e-3, samples: 3, ..Default::default() },
                approximation: (32, &[4, 8, 16], 4, 0.05),
                lp: TransportConfig { cutoff: 8, count: 2000, ..Default::default() },
                lp_n: &[2, 4],
                cov: TransportConfig { n: 2, cutoff: 6, count: 3000, t: 0.05, dt: 5e-4, ..Default::default() },
            },
            Scale::Verify => Battery {
                phase_bound: 40,
                flow: (16, 8, 10, 0.1),
                normal_form: (20, 8, 0.05),
                liouville: (&[4, 8], 0.5, 5),
                invariance: (10_000, 8, 20),
                energy_identity: (10, 8),
                scan: EnergyScanConfig::default(),
                approximation: (128, &[8, 16, 32], 20, 0.1),
                lp: verify_lp,
                lp_n: &[2, 4, 8],
                cov: verify_cov,
            },
            Scale::Full => Battery {
                phase_bound: 40,
                flow: (16, 8, 20, 0.1),
                normal_form: (40, 8, 0.05),
                liouville: (&[4, 8], 0.5, 10),
                invariance: (20_000, 8, 20),
                energy_identity: (20, 8),
                scan: EnergyScanConfig { ensemble: 100, ..Default::default() },
                approximation: (128, &[8, 16, 32], 40, 0.1),
                lp: TransportConfig { count: 40_000, ..verify_lp },
                lp_n: &[2, 4, 8],
                cov: TransportConfig { count: 40_000, ..verify_cov },
            },
        }
    }
}

const VERIFY_DT: f64 = 1e-4;

fn phase_factorization(b: &Battery) -> Result<DiagnosticsReport> {
    let mut r = DiagnosticsReport::new("phase-factorization");
    let m = b.phase_bound;
    let mut mismatches = 0u64;
    for n1 in -m..=m {
        for n2 in -m..=m {
            for n3 in -m..=m {
                let q = FrequencyQuad::new(n1, n2, n3, n1 - n2 + n3);
                if phi(q)? != phi_factored(q)? {
                    mismatches += 1;
                }
            }
        }
    }
    r.config("bound", m).scalar("quads", ((2 * m + 1) as f64).powi(3)).scalar("mismatches", mismatches as f64);
    r.flag("exact", mismatches == 0);
    Ok(r)
}

fn ball_draws(n_grid: usize, count: usize, seed: u64) -> Result<Vec<SpectralField>> {
    Ok(sample(&GaussianSpec::new(1.0, n_grid, seed).with_radius(2.0), count)?.draws)
}

fn mass_conservation(b: &Battery, seed: u64) -> Result<DiagnosticsReport> {
    let (n_grid, trunc, count, t) = b.flow;
    let mut r = DiagnosticsReport::new("mass-conservation");
    r.config("n_grid", n_grid).config("N", trunc).config("draws", count).config("t", t).config("dt", VERIFY_DT);
    let draws = ball_draws(n_grid, count, seed)?;
    for variant in Variant::ALL {
        let spec = if variant.needs_truncation() {
            FlowSpec::truncated(variant, trunc, VERIFY_DT)
        } else {
            FlowSpec::new(variant, VERIFY_DT)
        };
        let mut drift: f64 = 0.0;
        for f in &draws {
            let traj = evolve(&spec, f, 0.0, t)?;
            let m0 = traj.initial().mass();
            drift = drift.max(traj.states.iter().map(|s| (s.mass() - m0).abs() / m0).fold(0.0, f64::max));
            if variant == Variant::ApproxPhysical {
                let l0 = f.project_low(trunc).mass();
                let low = traj.states.iter().map(|s| (s.project_low(trunc).mass() - l0).abs() / l0);
                drift = drift.max(low.fold(0.0, f64::max));
            }
        }
        r.scalar(format!("drift_{variant}"), drift);
        r.flag(format!("drift_{variant}_within_1e-9"), drift <= 1e-9);
    }
    Ok(r)
}

fn composition(b: &Battery, seed: u64) -> Result<DiagnosticsReport> {
    let (n_grid, _, count, t) = b.flow;
    let mut r = DiagnosticsReport::new("composition");
    r.config("n_grid", n_grid).config("draws", count).config("t", t).config("dt", VERIFY_DT);
    let draws = ball_draws(n_grid, count, seed)?;
    let phys = flow_map_many(&FlowSpec::new(Variant::Physical, VERIFY_DT), &draws, 0.0, t)?;
    let inter = flow_map_many(&FlowSpec::new(Variant::Interaction, VERIFY_DT), &draws, 0.0, t)?;
    let err = phys
        .iter()
        .zip(&inter)
        .map(|(p, v)| p.l2_distance(&gauge_inverse(&free_flow(v, t), t, Sign::Defocusing)))
        .fold(0.0, f64::max);
    r.scalar("max_error", err);
    r.flag("within_1e-8", err <= 1e-8);
    Ok(r)
}

fn normal_form(b: &Battery, seed: u64) -> Result<DiagnosticsReport> {
    let (count, n_grid, t) = b.normal_form;
    let s = SobolevIndex(1.5);
    let mut r = DiagnosticsReport::new("normal-form");
    r.config("draws", count).config("n_grid", n_grid).config("t", t).config("s", 1.5).config("dt", VERIFY_DT);
    let draws = sample(&GaussianSpec::new(1.5, n_grid, seed), count)?.draws;
    let spec = FlowSpec::new(Variant::Interaction, VERIFY_DT);
    let (mut identity, mut ratio, mut bound): (f64, f64, bool) = (0.0, 0.0, true);
    for f in &draws {
        let rep = normal_form_check(&evolve(&spec, f, 0.0, t)?, s)?;
        identity = identity.max(rep.get("identity_error").unwrap_or(f64::NAN));
        ratio = ratio.max(rep.get("resonant_ratio").unwrap_or(f64::NAN));
        bound &= rep.flags["resonant_bound"];
    }
    r.scalar("max_identity_error", identity).scalar("max_resonant_ratio", ratio);
    r.flag("identity_within_1e-6", identity <= 1e-6);
    r.flag("resonant_bound", bound);
    Ok(r)
}

fn liouville(b: &Battery, seed: u64) -> Result<DiagnosticsReport> {
    let (ns, t, points) = b.liouville;
    let mut r = DiagnosticsReport::new("liouville");
    r.config("N", format!("{ns:?}")).config("t", t).config("points", points).config("dt", VERIFY_DT);
    let mut symbolic = true;
    for &n in ns {
        let mut worst: f64 = 0.0;
        for k in 0..points {
            let rep = liouville_check(n, t, &gaussian_field(1.0, n, seed, k, 0), VERIFY_DT)?;
            worst = worst.max(rep.get("log_det_abs").unwrap_or(f64::NAN));
            symbolic &= rep.flags["no_diagonal_terms"] && rep.flags["resonant_cancellation"];
        }
        r.scalar(format!("log_det_abs_n{n}"), worst);
        r.flag(format!("log_det_n{n}_within_1e-6"), worst <= 1e-6);
    }
    r.flag("symbolic_divergence", symbolic);
    Ok(r)
}

fn invariance(b: &Battery, seed: u64) -> Result<DiagnosticsReport> {
    let (count, cutoff, seeds) = b.invariance;
    let mut r = DiagnosticsReport::new("invariance");
    let spec = GaussianSpec::new(1.0, cutoff, seed);
    for transform in [Transform::Gauge(1.0), Transform::FreeFlow(1.0)] {
        let cfg = InvarianceConfig::new(transform, spec, count);
        let single = invariance_test(&cfg)?;
        let meta = invariance_meta_test(&cfg, seeds, seeds - seeds / 20)?;
        r.flag(format!("{transform}_modulus_exact"), single.flags["modulus_exact"] && meta.flags["modulus_exact"]);
        r.scalar(format!("{transform}_passes"), meta.get("passes").unwrap_or(0.0));
        r.flag(format!("{transform}_meta"), meta.flags["meta_pass"]);
    }
    r.config("count", count).config("cutoff", cutoff).config("seeds", seeds);
    Ok(r)
}

fn energy_identity(b: &Battery, seed: u64) -> Result<DiagnosticsReport> {
    let (count, n) = b.energy_identity;
    let s = SobolevIndex(0.8);
    let mut r = DiagnosticsReport::new("energy-identity");
    r.config("draws", count).config("N", n).config("s", 0.8).config("dt", VERIFY_DT);
    let draws = sample(&GaussianSpec::new(0.8, n, seed), count)?.draws;
    let spec = FlowSpec::truncated(Variant::TruncatedEmbedded, n, VERIFY_DT);
    let mut worst: f64 = 0.0;
    for f in &draws {
        let traj = evolve(&spec, f, 0.0, 0.01)?;
        for idx in [0, 25, 50, 100] {
            let d = derivative_terms(&traj, idx, s, n, 0.05, 0.1)?;
            worst = worst.max((d.sum - d.fd_derivative).abs() / (1.0 + d.fd_derivative.abs()));
        }
    }
    r.scalar("max_relative_error", worst);
    r.flag("within_1e-5", worst <= 1e-5);
    Ok(r)
}

fn energy_bound(b: &Battery, seed: u64) -> Result<DiagnosticsReport> {
    energy_bound_scan(&EnergyScanConfig { seed, ..b.scan.clone() })
}

fn illposedness() -> Result<DiagnosticsReport> {
    let s = SobolevIndex(-0.25);
    let a = Complex64::new(1.0, 0.0);
    let mut r = DiagnosticsReport::new("illposedness");
    let (mut residual, mut gap): (f64, f64) = (0.0, 0.0);
    for n in [1u32, 2, 5] {
        let case = illposed_separation(n, Sign::Defocusing, s)?;
        let expected = 2.0 + 1.0 / n as f64;
        gap = gap.max((case.separation - expected).abs());
        r.push("separation", SeriesPoint::new(n as f64, case.separation, 0.0));
        for t in [0.0, 0.5 * case.t_n, case.t_n] {
            for amp in [a, a * (1.0 + 1.0 / n as f64)] {
                residual = residual.max(explicit_residual(case.mode, amp, Sign::Defocusing, t, s)?);
            }
        }
    }
    r.scalar("max_residual", residual).scalar("max_separation_error", gap);
    r.flag("residual_within_1e-10", residual <= 1e-10);
    r.flag("separation_within_1e-8", gap <= 1e-8);
    Ok(r)
}

fn approximation(b: &Battery, seed: u64) -> Result<DiagnosticsReport> {
    let (grid, ns, count, t) = b.approximation;
    let mut r = DiagnosticsReport::new("approximation");
    r.config("reference_grid", grid).config("N", format!("{ns:?}")).config("draws", count).config("t", t);
    let draws: Vec<SpectralField> = ball_draws(16, count, seed)?.iter().map(|f| f.regrid(grid)).collect();
    let reference = flow_map_many(&FlowSpec::new(Variant::Physical, VERIFY_DT), &draws, 0.0, t)?;
    let mut means = Vec::new();
    for &n in ns {
        let approx = flow_map_many(&FlowSpec::truncated(Variant::ApproxPhysical, n, VERIFY_DT), &draws, 0.0, t)?;
        let mean = approx.iter().zip(&reference).map(|(a, b)| a.l2_distance(b)).sum::<f64>() / count as f64;
        r.push("mean_error", SeriesPoint::new(n as f64, mean, 0.0));
        means.push(mean);
    }
    r.flag("nonincreasing", means.windows(2).all(|w| w[1] <= w[0]));
    r.flag("halved", means.last() < means.first().map(|m| m / 2.0).as_ref());
    Ok(r)
}

fn weight_convergence(b: &Battery, seed: u64) -> Result<DiagnosticsReport> {
    lp_weight_convergence(&TransportConfig { seed, ..b.lp }, &[2.0], b.lp_n)
}

fn change_of_variable(b: &Battery, seed: u64) -> Result<DiagnosticsReport> {
    let mut r = DiagnosticsReport::new("change-of-variable");
    for (k, e) in EventSpec::smoke().iter().enumerate() {
        r.child(format!("event{k}"), change_of_variable_test(&TransportConfig { seed, ..b.cov }, e)?);
    }
    Ok(r)
}

/// Runs every criterion at the given scale; children are keyed `cNN_name`.
pub fn run_suite(scale: Scale, seed: u64) -> Result<DiagnosticsReport> {
    let b = Battery::new(scale);
    let mut report = DiagnosticsReport::new("suite");
    report.config("suite", scale).config("seed", seed);
    type Criterion<'a> = Box<dyn Fn() -> Result<DiagnosticsReport> + 'a>;
    let criteria: Vec<(&str, Criterion)> = vec![
        ("c01_phase_factorization", Box::new(|| phase_factorization(&b))),
        ("c02_mass_conservation", Box::new(|| mass_conservation(&b, seed))),
        ("c03_composition", Box::new(|| composition(&b, seed))),
        ("c04_c05_normal_form", Box::new(|| normal_form(&b, seed))),
        ("c06_liouville", Box::new(|| liouville(&b, seed))),
        ("c07_invariance", Box::new(|| invariance(&b, seed))),
        ("c08_energy_identity", Box::new(|| energy_identity(&b, seed))),
        ("c09_energy_bound", Box::new(|| energy_bound(&b, seed))),
        ("c10_illposedness", Box::new(illposedness)),
        ("c11_approximation", Box::new(|| approximation(&b, seed))),
        ("c12_weight_convergence", Box::new(|| weight_convergence(&b, seed))),
        ("c13_change_of_variable", Box::new(|| change_of_variable(&b, seed))),
    ];
    for (name, run) in criteria {
        let start = Instant::now();
        let mut child = run()?;
        child.wall_clock_seconds = start.elapsed().as_secs_f64();
        report.flag(name, child.all_pass());
        report.child(name, child);
    }
    Ok(report)
}
