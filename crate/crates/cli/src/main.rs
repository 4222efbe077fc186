use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use nls4::config::ExperimentConfig;
use nls4::runner::{run, Command};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_EMPTY: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "nls4", version, about = "Spectral experiments for the cubic fourth-order NLS on the circle")]
struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Extra `key=value` assignments, applied after the file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Skip the CSV series files.
    #[arg(long, global = true)]
    no_csv: bool,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Integrate one initial datum and write the trajectory.
    Simulate(SimulateArgs),
    /// List Γ_N(n) with phases.
    PhaseTable(PhaseArgs),
    /// Normal-form identity and resonant bound on Gaussian draws.
    NormalformCheck(NormalFormArgs),
    /// Hilbert-Schmidt diagnostics of the derivative of the nonlinear flow part.
    RamerDiagnostics(NormalFormArgs),
    /// Ratio scan of the modified-energy derivative bound.
    EnergyScan(EnergyArgs),
    /// Draw a Gaussian ensemble.
    Sample(SampleArgs),
    /// Moment comparison under gauge, free flow or rotation.
    InvarianceTest(InvarianceArgs),
    /// Divergence and Jacobian-determinant checks of the truncated flow.
    LiouvilleCheck(LiouvilleArgs),
    /// Two-estimator check of the change-of-variable formula.
    CovTest(TransportArgs),
    /// L^p distance between truncated and full weights.
    LpConvergence(TransportArgs),
    /// Weighted mass of shrinking balls and of their images.
    MeasureGrowth(TransportArgs),
    /// Chi-square tail check of the sampler.
    TailSanity(TailArgs),
    /// Run a battery of acceptance checks.
    Suite(SuiteArgs),
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    seed: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    variant: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    sign: Option<String>,
    #[arg(long)]
    n_grid: Option<String>,
    #[arg(long)]
    trunc_n: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    t_end: Option<String>,
    #[arg(long)]
    integrator: Option<String>,
    /// `mode:n=..,a=..`, `gaussian:s=..,seed=..` or a field file.
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Trajectory file, `.json` or `.csv`.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args, Debug)]
struct PhaseArgs {
    #[arg(long, allow_hyphen_values = true)]
    n: Option<String>,
    #[arg(long = "N")]
    trunc: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args, Debug)]
struct NormalFormArgs {
    #[arg(long)]
    s: Option<String>,
    #[arg(long)]
    n_grid: Option<String>,
    #[arg(long)]
    t: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    count: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct EnergyArgs {
    #[arg(long)]
    s: Option<String>,
    #[arg(long)]
    n_list: Option<String>,
    #[arg(long)]
    ensemble: Option<String>,
    #[arg(long)]
    t_end: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long)]
    s: Option<String>,
    #[arg(long)]
    cutoff: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    count: Option<String>,
    #[arg(long)]
    allow_low_s: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct InvarianceArgs {
    /// `gauge:t`, `free_flow:t` or `rotation:theta`.
    #[arg(long)]
    transform: Option<String>,
    #[arg(long)]
    s: Option<String>,
    #[arg(long)]
    cutoff: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    count: Option<String>,
    #[arg(long)]
    meta_seeds: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct LiouvilleArgs {
    #[arg(long = "N")]
    n: Option<String>,
    #[arg(long)]
    t: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    s: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct TransportArgs {
    #[arg(long = "N")]
    n: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    t: Option<String>,
    #[arg(long)]
    s: Option<String>,
    #[arg(long)]
    cutoff: Option<String>,
    #[arg(long)]
    count: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    /// cov-test event: `smoke`, `everything`, `empty`, `box:..`, `ball:..`, `halfspace:..`.
    #[arg(long)]
    event: Option<String>,
    /// lp-convergence exponents, comma separated.
    #[arg(long)]
    p_list: Option<String>,
    /// lp-convergence truncations, comma separated.
    #[arg(long)]
    n_list: Option<String>,
    /// measure-growth ball radii, comma separated.
    #[arg(long)]
    radii: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct TailArgs {
    #[arg(long = "M")]
    m: Option<String>,
    #[arg(long)]
    k_list: Option<String>,
    #[arg(long)]
    count: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct SuiteArgs {
    /// smoke, verify or full.
    #[arg(default_value = "smoke")]
    name: String,
    #[command(flatten)]
    common: Common,
}

type Overrides = Vec<(&'static str, Option<String>)>;

fn common(c: &Common) -> Overrides {
    vec![("seed", c.seed.clone()), ("out.dir", c.out.clone())]
}

impl Cmd {
    fn resolve(&self) -> (Command, Overrides) {
        match self {
            Cmd::Simulate(a) => (
                Command::Simulate,
                vec![
                    ("flow.variant", a.variant.clone()),
                    ("flow.sign", a.sign.clone()),
                    ("flow.n_grid", a.n_grid.clone()),
                    ("flow.trunc_n", a.trunc_n.clone()),
                    ("flow.dt", a.dt.clone()),
                    ("flow.t_end", a.t_end.clone()),
                    ("flow.integrator", a.integrator.clone()),
                    ("flow.init", a.init.clone()),
                    ("seed", a.seed.clone()),
                    ("flow.out", a.out.clone()),
                ],
            ),
            Cmd::PhaseTable(a) => (
                Command::PhaseTable,
                vec![("phase.n", a.n.clone()), ("phase.trunc", a.trunc.clone()), ("out.dir", a.out.clone())],
            ),
            Cmd::NormalformCheck(a) | Cmd::RamerDiagnostics(a) => {
                let command = if matches!(self, Cmd::NormalformCheck(_)) { Command::NormalformCheck } else { Command::RamerDiagnostics };
                let mut o = vec![
                    ("nf.s", a.s.clone()),
                    ("nf.n_grid", a.n_grid.clone()),
                    ("nf.t", a.t.clone()),
                    ("nf.dt", a.dt.clone()),
                    ("nf.count", a.count.clone()),
                    ("nf.m", a.m.clone()),
                ];
                o.extend(common(&a.common));
                (command, o)
            }
            Cmd::EnergyScan(a) => {
                let mut o = vec![
                    ("energy.s", a.s.clone()),
                    ("energy.n_list", a.n_list.clone()),
                    ("energy.ensemble", a.ensemble.clone()),
                    ("energy.t_end", a.t_end.clone()),
                    ("energy.dt", a.dt.clone()),
                    ("energy.theta", a.theta.clone()),
                    ("energy.epsilon", a.epsilon.clone()),
                    ("energy.samples", a.samples.clone()),
                ];
                o.extend(common(&a.common));
                (Command::EnergyScan, o)
            }
            Cmd::Sample(a) => {
                let mut o = vec![
                    ("gauss.s", a.s.clone()),
                    ("gauss.cutoff", a.cutoff.clone()),
                    ("gauss.r", a.r.clone()),
                    ("mc.count", a.count.clone()),
                    ("gauss.allow_low_s", a.allow_low_s.then(|| "true".to_string())),
                ];
                o.extend(common(&a.common));
                (Command::Sample, o)
            }
            Cmd::InvarianceTest(a) => {
                let mut o = vec![
                    ("mc.transform", a.transform.clone()),
                    ("gauss.s", a.s.clone()),
                    ("gauss.cutoff", a.cutoff.clone()),
                    ("gauss.r", a.r.clone()),
                    ("mc.count", a.count.clone()),
                    ("mc.meta_seeds", a.meta_seeds.clone()),
                ];
                o.extend(common(&a.common));
                (Command::InvarianceTest, o)
            }
            Cmd::LiouvilleCheck(a) => {
                let mut o =
                    vec![("mc.n", a.n.clone()), ("mc.t", a.t.clone()), ("mc.dt", a.dt.clone()), ("gauss.s", a.s.clone())];
                o.extend(common(&a.common));
                (Command::LiouvilleCheck, o)
            }
            Cmd::CovTest(a) | Cmd::LpConvergence(a) | Cmd::MeasureGrowth(a) => {
                let command = match self {
                    Cmd::CovTest(_) => Command::CovTest,
                    Cmd::LpConvergence(_) => Command::LpConvergence,
                    _ => Command::MeasureGrowth,
                };
                let mut o = vec![
                    ("mc.n", a.n.clone()),
                    ("mc.r", a.r.clone()),
                    ("mc.t", a.t.clone()),
                    ("mc.s", a.s.clone()),
                    ("mc.cutoff", a.cutoff.clone()),
                    ("mc.count", a.count.clone()),
                    ("mc.dt", a.dt.clone()),
                    ("mc.event", a.event.clone()),
                    ("mc.p_list", a.p_list.clone()),
                    ("mc.n_list", a.n_list.clone()),
                    ("mc.radii", a.radii.clone()),
                ];
                o.extend(common(&a.common));
                (command, o)
            }
            Cmd::TailSanity(a) => {
                let mut o = vec![("mc.tail_m", a.m.clone()), ("mc.k_list", a.k_list.clone()), ("mc.count", a.count.clone())];
                o.extend(common(&a.common));
                (Command::TailSanity, o)
            }
            Cmd::Suite(a) => {
                let mut o = vec![("suite.name", Some(a.name.clone()))];
                o.extend(common(&a.common));
                (Command::Suite, o)
            }
        }
    }
}

fn resolve_config(cli: &Cli, overrides: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path).with_context(|| format!("reading {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    cfg.set_all(cli.set.iter().map(String::as_str))?;
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, v).with_context(|| format!("flag for `{key}`"))?;
        }
    }
    if cli.no_csv {
        cfg.set("out.csv", "false")?;
    }
    cfg.get("suite.name").parse::<nls4::suite::Scale>()?;
    Ok(cfg)
}

fn write_outputs(dir: &Path, command: Command, out: &nls4::runner::RunOutput, csv: bool) -> Result<Vec<PathBuf>> {
    let stem = command.name().replace('-', "_");
    let mut written = out.report.write(dir, &stem, csv)?;
    for a in &out.artifacts {
        let path = dir.join(&a.name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, &a.contents).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, overrides) = cli.command.resolve();
    let cfg = match resolve_config(&cli, &overrides) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("configuration error: {e:#}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let out = match run(command, &cfg) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("{command} failed: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    let dir = cfg.out_dir();
    match write_outputs(&dir, command, &out, cfg.flag("out.csv")) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("{command} failed: {e:#}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    if out.is_empty() {
        println!("{command}: empty ensemble");
        return ExitCode::from(EXIT_EMPTY);
    }
    let failures = out.report.failures();
    if failures.is_empty() {
        println!("{command}: pass");
        ExitCode::SUCCESS
    } else {
        println!("{command}: {} check(s) failed", failures.len());
        for f in failures {
            eprintln!("  failed: {f}");
        }
        ExitCode::from(EXIT_FAILED)
    }
}
