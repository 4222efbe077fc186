//! Acceptance battery. Each test prints one `PASS`/`FAIL` line to stderr,
//! bypassing output capture, and then asserts.

use nls4::energy::{derivative_terms, energy_bound_scan, EnergyScanConfig};
use nls4::flows::{
    evolve, explicit_residual, flow_map_many, free_flow, gauge_inverse, illposed_separation, FlowSpec, Variant,
};
use nls4::measures::{
    change_of_variable_test, gaussian_field, invariance_meta_test, invariance_test, liouville_check, lp_weight_convergence,
    sample, EventSpec, GaussianSpec, InvarianceConfig, Transform, TransportConfig,
};
use nls4::normalform::normal_form_check;
use nls4::phase::{phi, phi_factored, FrequencyQuad};
use nls4::spectral::{Sign, SobolevIndex, SpectralField};
use num_complex::Complex64;
use std::io::Write;
use std::time::Instant;

fn verdict(id: u32, name: &str, pass: bool, detail: String, start: Instant) {
    let line = format!(
        "acceptance {id:>2} {:<4} {name}: {detail} ({:.1}s)\n",
        if pass { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    std::io::stderr().write_all(line.as_bytes()).unwrap();
    assert!(pass, "{}", line.trim());
}

/// Ten draws of `μ_{1,2}` on the grid `|n| ≤ 16`.
fn ball_draws(count: usize) -> Vec<SpectralField> {
    sample(&GaussianSpec::new(1.0, 16, 2024).with_radius(2.0), count).unwrap().draws
}

fn spec_for(variant: Variant, dt: f64) -> FlowSpec {
    if variant.needs_truncation() {
        FlowSpec::truncated(variant, 8, dt)
    } else {
        FlowSpec::new(variant, dt)
    }
}

#[test]
fn c01_phase_factorization() {
    let start = Instant::now();
    let mut checked = 0u64;
    let mut mismatches = 0u64;
    for n1 in -40i64..=40 {
        for n2 in -40i64..=40 {
            for n3 in -40i64..=40 {
                let q = FrequencyQuad::new(n1, n2, n3, n1 - n2 + n3);
                checked += 1;
                if phi(q).unwrap() != phi_factored(q).unwrap() {
                    mismatches += 1;
                }
            }
        }
    }
    verdict(1, "phase factorization", mismatches == 0, format!("{checked} quads, {mismatches} mismatches"), start);
}

#[test]
fn c02_mass_conservation() {
    let start = Instant::now();
    let draws = ball_draws(10);
    let mut worst: Vec<(Variant, f64)> = Vec::new();
    for variant in Variant::ALL {
        let spec = spec_for(variant, 1e-4);
        let drift = draws
            .iter()
            .map(|f| {
                let traj = evolve(&spec, f, 0.0, 0.1).unwrap();
                let m0 = traj.initial().mass();
                let full = traj.states.iter().map(|s| (s.mass() - m0).abs() / m0).fold(0.0, f64::max);
                if variant == Variant::ApproxPhysical {
                    let l0 = f.project_low(8).mass();
                    let low = traj.states.iter().map(|s| (s.project_low(8).mass() - l0).abs() / l0).fold(0.0, f64::max);
                    full.max(low)
                } else {
                    full
                }
            })
            .fold(0.0, f64::max);
        worst.push((variant, drift));
    }
    let pass = worst.iter().all(|(_, d)| *d <= 1e-9);
    let detail = worst.iter().map(|(v, d)| format!("{v} {d:.1e}")).collect::<Vec<_>>().join(", ");
    verdict(2, "mass conservation", pass, format!("max relative drift: {detail}"), start);
}

#[test]
fn c03_composition_identity() {
    let start = Instant::now();
    let t = 0.1;
    let draws = ball_draws(10);
    let phys = flow_map_many(&FlowSpec::new(Variant::Physical, 1e-4), &draws, 0.0, t).unwrap();
    let inter = flow_map_many(&FlowSpec::new(Variant::Interaction, 1e-4), &draws, 0.0, t).unwrap();
    let err = phys
        .iter()
        .zip(&inter)
        .map(|(p, v)| p.l2_distance(&gauge_inverse(&free_flow(v, t), t, Sign::Defocusing)))
        .fold(0.0, f64::max);
    verdict(3, "composition identity", err <= 1e-8, format!("max L2 error {err:.2e}"), start);
}

#[test]
fn c04_c05_normal_form_identity_and_resonant_bound() {
    let start = Instant::now();
    let s = SobolevIndex(1.5);
    let draws = sample(&GaussianSpec::new(1.5, 8, 7), 20).unwrap().draws;
    let spec = FlowSpec::new(Variant::Interaction, 1e-4);
    let reports: Vec<_> = draws
        .iter()
        .map(|f| normal_form_check(&evolve(&spec, f, 0.0, 0.05).unwrap(), s).unwrap())
        .collect();
    let identity = reports.iter().map(|r| r.get("identity_error").unwrap()).fold(0.0, f64::max);
    verdict(4, "normal-form identity", identity <= 1e-6, format!("max L2 error {identity:.2e}"), start);
    let bound = reports.iter().all(|r| r.flags["resonant_bound"]);
    let worst = reports.iter().map(|r| r.get("resonant_ratio").unwrap()).fold(0.0, f64::max);
    verdict(5, "resonant smoothing bound", bound, format!("max lhs/rhs {worst:.3}"), start);
}

#[test]
fn c06_liouville() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut symbolic = true;
    for n in [4usize, 8] {
        for k in 0..5 {
            let u0 = gaussian_field(1.0, n, 606, k, 0);
            let r = liouville_check(n, 0.5, &u0, 1e-4).unwrap();
            worst = worst.max(r.get("log_det_abs").unwrap());
            symbolic &= r.flags["no_diagonal_terms"] && r.flags["resonant_cancellation"];
        }
    }
    verdict(6, "Liouville", worst <= 1e-6 && symbolic, format!("max |log det| {worst:.2e}, symbolic {symbolic}"), start);
}

#[test]
fn c07_measure_invariance() {
    let start = Instant::now();
    let spec = GaussianSpec::new(1.0, 8, 700);
    let mut lines = Vec::new();
    let mut pass = true;
    for transform in [Transform::Gauge(1.0), Transform::FreeFlow(1.0)] {
        let cfg = InvarianceConfig::new(transform, spec, 10_000);
        assert_eq!(cfg.pairs.len(), 10);
        let single = invariance_test(&cfg).unwrap();
        let meta = invariance_meta_test(&cfg, 20, 19).unwrap();
        pass &= single.flags["modulus_exact"] && meta.all_pass();
        lines.push(format!("{transform}: {}/20 seeds, modulus exact {}", meta.get("passes").unwrap(), meta.flags["modulus_exact"]));
    }
    verdict(7, "gauge/free-flow invariance", pass, lines.join("; "), start);
}

#[test]
fn c08_energy_derivative_identity() {
    let start = Instant::now();
    let s = SobolevIndex(0.8);
    let draws = sample(&GaussianSpec::new(0.8, 8, 808), 10).unwrap().draws;
    let spec = FlowSpec::truncated(Variant::TruncatedEmbedded, 8, 1e-4);
    let mut worst: f64 = 0.0;
    for f in &draws {
        let traj = evolve(&spec, f, 0.0, 0.01).unwrap();
        for idx in [0, 25, 50, 100] {
            let d = derivative_terms(&traj, idx, s, 8, 0.05, 0.1).unwrap();
            worst = worst.max((d.sum - d.fd_derivative).abs() / (1.0 + d.fd_derivative.abs()));
        }
    }
    verdict(8, "energy derivative identity", worst <= 1e-5, format!("max |sum - FD|/(1+|FD|) {worst:.2e}"), start);
}

#[test]
fn c09_energy_bound_stability() {
    let start = Instant::now();
    let r = energy_bound_scan(&EnergyScanConfig::default()).unwrap();
    let (m4, m8, m16) = (r.get("ratio_max_n4").unwrap(), r.get("ratio_max_n8").unwrap(), r.get("ratio_max_n16").unwrap());
    let finite = ["p99_finite_n4", "p99_finite_n8", "p99_finite_n16"].iter().all(|k| r.flags[*k]);
    let pass = finite && m16 <= 2.0 * m8 && 2.0 * m8 <= 4.0 * m4;
    verdict(9, "energy bound stability", pass, format!("ratio_max N=4 {m4:.3e}, N=8 {m8:.3e}, N=16 {m16:.3e}"), start);
}

#[test]
fn c10_illposedness_oracle() {
    let start = Instant::now();
    let s = SobolevIndex(-0.25);
    let a = Complex64::new(1.0, 0.0);
    let mut residual: f64 = 0.0;
    let mut gap: f64 = 0.0;
    for n in [1u32, 2, 5] {
        let case = illposed_separation(n, Sign::Defocusing, s).unwrap();
        gap = gap.max((case.separation - (2.0 + 1.0 / n as f64)).abs());
        for t in [0.0, 0.5 * case.t_n, case.t_n] {
            residual = residual.max(explicit_residual(case.mode, a, Sign::Defocusing, t, s).unwrap());
            residual = residual.max(explicit_residual(case.mode, a * (1.0 + 1.0 / n as f64), Sign::Defocusing, t, s).unwrap());
        }
    }
    let pass = residual <= 1e-10 && gap <= 1e-8;
    verdict(10, "ill-posedness oracle", pass, format!("max residual {residual:.2e}, max separation error {gap:.2e}"), start);
}

#[test]
fn c11_truncation_approximation() {
    let start = Instant::now();
    let t = 0.1;
    let draws: Vec<SpectralField> = ball_draws(20).iter().map(|f| f.regrid(128)).collect();
    let reference = flow_map_many(&FlowSpec::new(Variant::Physical, 1e-4), &draws, 0.0, t).unwrap();
    let mut means = Vec::new();
    for n in [8usize, 16, 32] {
        let approx = flow_map_many(&FlowSpec::truncated(Variant::ApproxPhysical, n, 1e-4), &draws, 0.0, t).unwrap();
        let mean = approx.iter().zip(&reference).map(|(a, b)| a.l2_distance(b)).sum::<f64>() / draws.len() as f64;
        means.push(mean);
    }
    let pass = means.windows(2).all(|w| w[1] <= w[0]) && means[2] < means[0] / 2.0;
    verdict(11, "truncation approximation", pass, format!("mean L2 error N=8,16,32: {}", means.iter().map(|m| format!("{m:.3e}")).collect::<Vec<_>>().join(", ")), start);
}

#[test]
fn c12_weight_convergence() {
    let start = Instant::now();
    let cfg = TransportConfig { cutoff: 16, s: 1.0, r: 2.0, t: 0.1, count: 10_000, seed: 1212, ..Default::default() };
    let r = lp_weight_convergence(&cfg, &[2.0], &[2, 4, 8]).unwrap();
    let est: Vec<String> = r.series["lp_p2"].iter().map(|p| format!("{:.3e}±{:.1e}", p.y, p.y_err)).collect();
    verdict(12, "weight convergence", r.flags["decreasing_p2"], format!("L2 distance N=2,4,8: {}", est.join(", ")), start);
}

#[test]
fn c13_change_of_variable() {
    let start = Instant::now();
    let cfg = TransportConfig { n: 4, count: 20_000, seed: 1313, ..Default::default() };
    let mut zs = Vec::new();
    for e in EventSpec::smoke() {
        zs.push(change_of_variable_test(&cfg, &e).unwrap().get("z").unwrap());
    }
    let pass = zs.iter().all(|z| z.abs() <= 4.0);
    verdict(13, "change of variable", pass, format!("z = {zs:.2?}"), start);
}
