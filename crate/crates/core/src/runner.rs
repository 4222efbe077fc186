//! Dispatch from a command name and an [`ExperimentConfig`] to the module
//! operations, producing a report plus file artifacts.

use crate::config::ExperimentConfig;
use crate::energy::{energy_bound_scan, EnergyScanConfig};
use crate::error::{Error, Result};
use crate::flows::{evolve, residual, FlowSpec, Variant};
use crate::measures::{
    change_of_variable_test, expected_norm_sq, gaussian_field, invariance_meta_test, invariance_test, liouville_check,
    lp_weight_convergence, measure_growth_experiment, sample, stats::mean_se, tail_sanity, GaussianSpec,
    InvarianceConfig, TransportConfig,
};
use crate::normalform::{dk_hs_diagnostics, normal_form_check};
use crate::phase::{divisor_count, gamma_mu_count, phase_table, phase_table_csv, phi_factored, FrequencyQuad};
use crate::report::DiagnosticsReport;
use crate::spectral::{field_from_csv, FieldJson, SobolevIndex, SpectralField};
use crate::suite::{run_suite, Scale};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    PhaseTable,
    NormalformCheck,
    RamerDiagnostics,
    EnergyScan,
    Sample,
    InvarianceTest,
    LiouvilleCheck,
    CovTest,
    LpConvergence,
    MeasureGrowth,
    TailSanity,
    Suite,
}

impl Command {
    pub const ALL: [Command; 13] = [
        Command::Simulate,
        Command::PhaseTable,
        Command::NormalformCheck,
        Command::RamerDiagnostics,
        Command::EnergyScan,
        Command::Sample,
        Command::InvarianceTest,
        Command::LiouvilleCheck,
        Command::CovTest,
        Command::LpConvergence,
        Command::MeasureGrowth,
        Command::TailSanity,
        Command::Suite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::PhaseTable => "phase-table",
            Command::NormalformCheck => "normalform-check",
            Command::RamerDiagnostics => "ramer-diagnostics",
            Command::EnergyScan => "energy-scan",
            Command::Sample => "sample",
            Command::InvarianceTest => "invariance-test",
            Command::LiouvilleCheck => "liouville-check",
            Command::CovTest => "cov-test",
            Command::LpConvergence => "lp-convergence",
            Command::MeasureGrowth => "measure-growth",
            Command::TailSanity => "tail-sanity",
            Command::Suite => "suite",
        }
    }

    /// Sample-size key whose zero value makes the run an empty ensemble.
    fn size_key(self) -> Option<&'static str> {
        match self {
            Command::NormalformCheck => Some("nf.count"),
            Command::EnergyScan => Some("energy.ensemble"),
            Command::Sample
            | Command::InvarianceTest
            | Command::CovTest
            | Command::LpConvergence
            | Command::MeasureGrowth
            | Command::TailSanity => Some("mc.count"),
            _ => None,
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| Error::Parse(format!("unknown command `{s}`")))
    }
}

/// A file produced by a run, named relative to the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: DiagnosticsReport,
    pub artifacts: Vec<Artifact>,
}

impl RunOutput {
    /// True when the run had nothing to sample.
    pub fn is_empty(&self) -> bool {
        self.report.notes.contains_key("empty")
    }
}

fn key_values(rest: &str) -> Result<BTreeMap<&str, &str>> {
    rest.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|kv| kv.split_once('=').map(|(k, v)| (k.trim(), v.trim())).ok_or_else(|| Error::Parse(format!("expected key=value in `{kv}`"))))
        .collect()
}

fn number<T: FromStr>(map: &BTreeMap<&str, &str>, key: &str, default: Option<T>) -> Result<T> {
    match map.get(key) {
        Some(v) => v.parse().map_err(|_| Error::Parse(format!("bad value `{v}` for `{key}`"))),
        None => default.ok_or_else(|| Error::Parse(format!("missing `{key}`"))),
    }
}

/// Initial data from `mode:n=..,a=..[,im=..]`, `gaussian:s=..[,seed=..][,r=..]`
/// or a JSON/CSV field file, placed on the grid `n_grid`.
pub fn parse_init(init: &str, n_grid: usize, seed: u64) -> Result<SpectralField> {
    if let Some(rest) = init.strip_prefix("mode:") {
        let m = key_values(rest)?;
        let n: i64 = number(&m, "n", None)?;
        let a = Complex64::new(number(&m, "a", None)?, number(&m, "im", Some(0.0))?);
        return SpectralField::from_modes(n_grid, &[(n, a)]);
    }
    if let Some(rest) = init.strip_prefix("gaussian:") {
        let m = key_values(rest)?;
        let mut spec = GaussianSpec::new(number(&m, "s", Some(1.0))?, n_grid, number(&m, "seed", Some(seed))?);
        if m.contains_key("r") {
            spec = spec.with_radius(number(&m, "r", None)?);
        }
        return Ok(sample(&spec, 1)?.draws.remove(0));
    }
    let text = std::fs::read_to_string(init)?;
    let field = if init.ends_with(".csv") {
        field_from_csv(&text)?
    } else {
        SpectralField::try_from(serde_json::from_str::<FieldJson>(&text)?)?
    };
    Ok(field.regrid(n_grid))
}

fn flow_spec(cfg: &ExperimentConfig) -> FlowSpec {
    let variant = cfg.variant();
    let mut spec = FlowSpec::new(variant, cfg.real("flow.dt")).with_sign(cfg.sign()).with_integrator(cfg.integrator());
    if variant.needs_truncation() {
        spec.truncation = Some(cfg.count("flow.trunc_n"));
    }
    spec
}

fn transport(cfg: &ExperimentConfig) -> TransportConfig {
    TransportConfig {
        n: cfg.count("mc.n"),
        r: cfg.real("mc.r"),
        t: cfg.real("mc.t"),
        s: cfg.real("mc.s"),
        cutoff: cfg.count("mc.cutoff"),
        count: cfg.count("mc.count"),
        seed: cfg.seed(),
        dt: cfg.real("mc.dt"),
    }
}

fn gaussian(cfg: &ExperimentConfig) -> GaussianSpec {
    let mut spec = GaussianSpec::new(cfg.real("gauss.s"), cfg.count("gauss.cutoff"), cfg.seed());
    if let Some(r) = cfg.opt_real("gauss.r") {
        spec = spec.with_radius(r);
    }
    if cfg.flag("gauss.allow_low_s") {
        spec = spec.allowing_low_s();
    }
    spec
}

fn simulate(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let spec = flow_spec(cfg);
    let f0 = parse_init(cfg.get("flow.init"), cfg.count("flow.n_grid"), cfg.seed())?;
    let traj = evolve(&spec, &f0, 0.0, cfg.real("flow.t_end"))?;
    let mut r = DiagnosticsReport::new("simulate");
    let m0 = traj.initial().mass();
    let drift = traj.states.iter().map(|s| crate::report::ratio((s.mass() - m0).abs(), m0)).fold(0.0, f64::max);
    r.scalar("steps", (traj.len() - 1) as f64).scalar("final_time", traj.final_time()).scalar("mass_drift", drift);
    if traj.len() >= 3 {
        r.scalar("residual", residual(&traj)?);
    }
    if spec.variant == Variant::Physical {
        let h0 = traj.initial().hamiltonian(spec.sign);
        r.scalar("hamiltonian_drift", crate::report::ratio((traj.last().hamiltonian(spec.sign) - h0).abs(), h0.abs()));
    }
    r.flag("mass_drift_within_1e-9", drift <= 1e-9);
    let name = match cfg.get("flow.out") {
        "" => "trajectory.json".to_string(),
        path => path.to_string(),
    };
    let contents = if name.ends_with(".csv") { traj.to_csv() } else { traj.to_json()? };
    Ok(RunOutput { report: r, artifacts: vec![Artifact { name, contents }] })
}

fn phase(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let n: i64 = cfg.get("phase.n").parse().map_err(|_| Error::Parse(format!("bad frequency `{}`", cfg.get("phase.n"))))?;
    let rows = phase_table(n, cfg.count("phase.trunc"))?;
    let mut r = DiagnosticsReport::new("phase-table");
    let mut exact = true;
    for row in &rows {
        exact &= phi_factored(FrequencyQuad::new(row.n1, row.n2, row.n3, row.n))? == row.phi;
    }
    let trunc = cfg.count("phase.trunc");
    let mut mus: Vec<i64> = rows.iter().map(|row| row.mu as i64).filter(|&m| m != 0).collect();
    mus.sort_unstable();
    mus.dedup();
    let (mut bucket_ratio, mut growth) = (0.0f64, 0.0f64);
    for &mu in &mus {
        let d = divisor_count(mu.abs())? as f64;
        bucket_ratio = bucket_ratio.max(gamma_mu_count(n, mu, trunc) as f64 / d);
        growth = growth.max(d / (mu.abs() as f64).powf(0.25));
    }
    r.scalar("rows", rows.len() as f64);
    r.scalar("mu_values", mus.len() as f64);
    r.scalar("max_bucket_over_divisors", bucket_ratio);
    r.scalar("max_divisors_over_mu_quarter", growth);
    r.flag("factorization_exact", exact);
    r.flag("bucket_within_twice_divisors", bucket_ratio <= 2.0);
    Ok(RunOutput { report: r, artifacts: vec![Artifact { name: "phase_table.csv".into(), contents: phase_table_csv(&rows) }] })
}

fn normal_form(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let s = cfg.real("nf.s");
    let draws = sample(&GaussianSpec::new(s, cfg.count("nf.n_grid"), cfg.seed()), cfg.count("nf.count"))?.draws;
    let spec = FlowSpec::new(Variant::Interaction, cfg.real("nf.dt"));
    let mut r = DiagnosticsReport::new("normalform-check");
    let (mut identity, mut duhamel, mut ratio, mut bound): (f64, f64, f64, bool) = (0.0, 0.0, 0.0, true);
    for f in &draws {
        let rep = normal_form_check(&evolve(&spec, f, 0.0, cfg.real("nf.t"))?, SobolevIndex(s))?;
        identity = identity.max(rep.get("identity_error").unwrap_or(f64::NAN));
        duhamel = duhamel.max(rep.get("duhamel_residual").unwrap_or(f64::NAN));
        ratio = ratio.max(rep.get("resonant_ratio").unwrap_or(f64::NAN));
        bound &= rep.flags["resonant_bound"];
    }
    r.scalar("max_identity_error", identity).scalar("max_duhamel_residual", duhamel).scalar("max_resonant_ratio", ratio);
    r.flag("identity_within_1e-6", identity <= 1e-6);
    r.flag("resonant_bound", bound);
    Ok(RunOutput { report: r, artifacts: vec![] })
}

fn ramer(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let s = cfg.real("nf.s");
    let u0 = gaussian_field(s, cfg.count("nf.n_grid"), cfg.seed(), 0, 0);
    let spec = FlowSpec::new(Variant::Interaction, cfg.real("nf.dt"));
    let report = dk_hs_diagnostics(&spec, &u0, cfg.real("nf.t"), SobolevIndex(s), cfg.count("nf.m"))?;
    Ok(RunOutput { report, artifacts: vec![] })
}

fn energy(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let scan = EnergyScanConfig {
        ensemble: cfg.count("energy.ensemble"),
        s: cfg.real("energy.s"),
        n_list: cfg.counts("energy.n_list"),
        t_end: cfg.real("energy.t_end"),
        dt: cfg.real("energy.dt"),
        theta: cfg.real("energy.theta"),
        epsilon: cfg.real("energy.epsilon"),
        seed: cfg.seed(),
        samples: cfg.count("energy.samples"),
    };
    Ok(RunOutput { report: energy_bound_scan(&scan)?, artifacts: vec![] })
}

fn sampling(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let spec = gaussian(cfg);
    let ens = sample(&spec, cfg.count("mc.count"))?;
    let mut r = DiagnosticsReport::new("sample");
    r.scalar("count", ens.len() as f64)
        .scalar("acceptance", ens.acceptance_rate())
        .scalar("rejections", ens.rejections() as f64);
    let m = mean_se(&ens.draws.iter().map(|v| v.norm_sq()).collect::<Vec<_>>());
    r.scalar("mean_norm_sq", m.estimate).scalar("mean_norm_sq_std_error", m.std_error);
    if spec.r.is_none() {
        let expected = expected_norm_sq(spec.s, spec.sample_cutoff);
        let z = crate::measures::stats::z_score(m, crate::measures::stats::Estimate::new(expected, 0.0));
        r.scalar("expected_norm_sq", expected).scalar("z", z);
        r.flag("mean_within_4se", z.abs() <= 4.0);
    }
    Ok(RunOutput { report: r, artifacts: vec![Artifact { name: "ensemble.json".into(), contents: serde_json::to_string(&ens)? }] })
}

fn invariance(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let inv = InvarianceConfig::new(cfg.transform(), gaussian(cfg), cfg.count("mc.count"));
    let mut report = invariance_test(&inv)?;
    let seeds = cfg.count("mc.meta_seeds") as u64;
    if seeds > 0 {
        report.child("meta", invariance_meta_test(&inv, seeds, seeds - seeds / 20)?);
    }
    Ok(RunOutput { report, artifacts: vec![] })
}

fn liouville(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let n = cfg.count("mc.n");
    let u0 = gaussian_field(cfg.real("gauss.s"), n, cfg.seed(), 0, 0);
    Ok(RunOutput { report: liouville_check(n, cfg.real("mc.t"), &u0, cfg.real("mc.dt"))?, artifacts: vec![] })
}

fn cov(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let tc = transport(cfg);
    let events = cfg.events();
    let report = if events.len() == 1 {
        change_of_variable_test(&tc, &events[0])?
    } else {
        let mut r = DiagnosticsReport::new("cov-test");
        for (k, e) in events.iter().enumerate() {
            r.child(format!("event{k}"), change_of_variable_test(&tc, e)?);
        }
        r
    };
    Ok(RunOutput { report, artifacts: vec![] })
}

/// Runs one command. Every report echoes the full resolved configuration.
pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<RunOutput> {
    let start = Instant::now();
    let mut out = match command.size_key() {
        Some(key) if cfg.count(key) == 0 => {
            let mut r = DiagnosticsReport::new(command.name());
            r.note("empty", format!("{key} = 0"));
            RunOutput { report: r, artifacts: vec![] }
        }
        _ => match command {
            Command::Simulate => simulate(cfg)?,
            Command::PhaseTable => phase(cfg)?,
            Command::NormalformCheck => normal_form(cfg)?,
            Command::RamerDiagnostics => ramer(cfg)?,
            Command::EnergyScan => energy(cfg)?,
            Command::Sample => sampling(cfg)?,
            Command::InvarianceTest => invariance(cfg)?,
            Command::LiouvilleCheck => liouville(cfg)?,
            Command::CovTest => cov(cfg)?,
            Command::LpConvergence => RunOutput {
                report: lp_weight_convergence(&transport(cfg), &cfg.reals("mc.p_list"), &cfg.counts("mc.n_list"))?,
                artifacts: vec![],
            },
            Command::MeasureGrowth => {
                RunOutput { report: measure_growth_experiment(&transport(cfg), &cfg.reals("mc.radii"))?, artifacts: vec![] }
            }
            Command::TailSanity => RunOutput {
                report: tail_sanity(cfg.seed(), cfg.count("mc.tail_m"), &cfg.reals("mc.k_list"), cfg.count("mc.count")),
                artifacts: vec![],
            },
            Command::Suite => {
                RunOutput { report: run_suite(cfg.get("suite.name").parse::<Scale>()?, cfg.seed())?, artifacts: vec![] }
            }
        },
    };
    out.report.command = command.name().to_string();
    for (k, v) in cfg.entries() {
        out.report.config(k, v);
    }
    out.report.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(pairs: &[&str]) -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.set_all(pairs.iter().copied()).unwrap();
        c
    }

    #[test]
    fn command_names_round_trip() {
        for c in Command::ALL {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
        }
        assert!("simulat".parse::<Command>().is_err());
    }

    #[test]
    fn init_forms() {
        let f = parse_init("mode:n=1,a=1", 4, 0).unwrap();
        assert_eq!(f.get(1), Complex64::new(1.0, 0.0));
        assert_eq!(f.norm_sq(), 1.0);
        let g = parse_init("gaussian:s=1,seed=3,r=3", 4, 0).unwrap();
        assert!(g.l2_norm() <= 3.0 && g.n_grid() == 4);
        assert!(parse_init("mode:a=1", 4, 0).is_err());
        assert!(parse_init("/nonexistent/field.json", 4, 0).is_err());
    }

    #[test]
    fn simulate_single_mode_conserves_mass() {
        let out = run(Command::Simulate, &cfg(&["flow.init=mode:n=1,a=1", "flow.t_end=0.1", "flow.n_grid=8"])).unwrap();
        assert!(out.report.all_pass(), "{:?}", out.report.scalars);
        assert_eq!(out.artifacts[0].name, "trajectory.json");
        assert_eq!(out.report.config["flow.variant"], "interaction");
    }

    #[test]
    fn phase_table_small_case() {
        let out = run(Command::PhaseTable, &cfg(&["phase.n=0", "phase.trunc=1"])).unwrap();
        assert_eq!(out.report.get("rows"), Some(2.0));
        assert_eq!(out.artifacts[0].contents.lines().count(), 3);
    }

    #[test]
    fn empty_ensembles_are_marked() {
        for c in [Command::Sample, Command::CovTest, Command::TailSanity] {
            assert!(run(c, &cfg(&["mc.count=0"])).unwrap().is_empty());
        }
        assert!(run(Command::EnergyScan, &cfg(&["energy.ensemble=0"])).unwrap().is_empty());
        assert!(!run(Command::PhaseTable, &cfg(&[])).unwrap().is_empty());
    }

    #[test]
    fn reports_are_deterministic() {
        let c = cfg(&["mc.count=300", "gauss.cutoff=4", "mc.meta_seeds=0"]);
        let a = run(Command::InvarianceTest, &c).unwrap().report.without_timing().to_json().unwrap();
        let b = run(Command::InvarianceTest, &c).unwrap().report.without_timing().to_json().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn smoke_suite_passes() {
        let out = run(Command::Suite, &cfg(&["suite.name=smoke"])).unwrap();
        let failures = out.report.failures();
        assert!(failures.is_empty(), "{failures:?}");
        assert_eq!(out.report.children.len(), 12);
    }
}
