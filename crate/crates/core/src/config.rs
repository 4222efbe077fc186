//! Flat, namespaced experiment configuration with a `key = value` text form.

use crate::error::{Error, Result};
use crate::flows::{Integrator, Variant};
use crate::measures::{EventSpec, Transform};
use crate::spectral::Sign;
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "NLS4_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Real,
    /// A real number or `none`.
    OptReal,
    Count,
    Seed,
    RealList,
    CountList,
    Bool,
    Variant,
    Sign,
    Integrator,
    Event,
    Transform,
    Text,
}

pub struct Param {
    pub key: &'static str,
    pub default: &'static str,
    pub kind: Kind,
    pub help: &'static str,
}

macro_rules! params {
    ($(($key:literal, $default:literal, $kind:ident, $help:literal)),* $(,)?) => {
        pub const PARAMS: &[Param] = &[$(Param { key: $key, default: $default, kind: Kind::$kind, help: $help }),*];
    };
}

params![
    ("seed", "0", Seed, "master seed for every random draw"),
    ("flow.variant", "interaction", Variant, "equation variant"),
    ("flow.sign", "1", Sign, "+1 defocusing, -1 focusing"),
    ("flow.n_grid", "32", Count, "retained frequencies |n| <= n_grid"),
    ("flow.trunc_n", "8", Count, "truncation N of the truncated and approximate variants"),
    ("flow.dt", "1e-3", Real, "time step"),
    ("flow.t_end", "0.1", Real, "final time"),
    ("flow.integrator", "if_rk4", Integrator, "if_rk4 or rk4"),
    ("flow.init", "gaussian:s=1", Text, "file path, gaussian:s=..,seed=..,r=.. or mode:n=..,a=..,im=.."),
    ("flow.out", "", Text, "trajectory file (.json or .csv); empty for <out.dir>/trajectory.json"),
    ("gauss.s", "1", Real, "Sobolev index of the Gaussian measure"),
    ("gauss.cutoff", "16", Count, "sampled frequencies |n| <= cutoff"),
    ("gauss.r", "none", OptReal, "L2 cutoff radius"),
    ("gauss.allow_low_s", "false", Bool, "permit s <= 1/2"),
    ("nf.s", "1.5", Real, "Sobolev index for the normal-form checks"),
    ("nf.n_grid", "8", Count, "grid of the normal-form checks"),
    ("nf.t", "0.05", Real, "final time of the normal-form checks"),
    ("nf.dt", "1e-4", Real, "time step of the normal-form checks"),
    ("nf.count", "20", Count, "Gaussian draws for the normal-form checks"),
    ("nf.m", "4", Count, "input frequencies |n| <= m of the DK matrix"),
    ("energy.s", "0.8", Real, "Sobolev index of the energy scan"),
    ("energy.n_list", "4,8,16", CountList, "truncations scanned"),
    ("energy.ensemble", "50", Count, "Gaussian draws"),
    ("energy.t_end", "0.01", Real, "trajectory length"),
    ("energy.dt", "1e-4", Real, "time step"),
    ("energy.theta", "0.1", Real, "exponent theta of the bound"),
    ("energy.epsilon", "0.05", Real, "regularity loss epsilon of the bound"),
    ("energy.samples", "5", Count, "evaluation times per trajectory"),
    ("mc.count", "10000", Count, "Monte Carlo sample size"),
    ("mc.n", "4", Count, "truncation N of the weighted measures"),
    ("mc.r", "2", Real, "L2 cutoff radius of the weighted measures"),
    ("mc.t", "0.1", Real, "time t of the weights and flows"),
    ("mc.s", "1", Real, "Sobolev index of the weighted measures"),
    ("mc.cutoff", "16", Count, "sampled frequencies of the weighted measures"),
    ("mc.dt", "1e-4", Real, "time step of the Monte Carlo flows"),
    ("mc.event", "smoke", Event, "event for cov-test: smoke, everything, empty, box:.., ball:.., halfspace:.."),
    ("mc.transform", "gauge:1", Transform, "free_flow:t, gauge:t or rotation:theta"),
    ("mc.meta_seeds", "20", Count, "seeds of the invariance meta-test (0 to skip)"),
    ("mc.p_list", "2", RealList, "exponents p of the weight convergence"),
    ("mc.n_list", "2,4,8", CountList, "truncations of the weight convergence"),
    ("mc.radii", "1,0.7,0.5,0.35", RealList, "ball radii of the growth experiment"),
    ("mc.tail_m", "16", Count, "frequencies |n| <= M of the tail check"),
    ("mc.k_list", "0,4,6,8,10,12", RealList, "thresholds K of the tail check"),
    ("phase.n", "0", Text, "output frequency of phase-table"),
    ("phase.trunc", "1", Count, "truncation of phase-table"),
    ("suite.name", "smoke", Text, "smoke, verify or full"),
    ("out.dir", "", Text, "output directory; empty for $NLS4_OUT_DIR or ."),
    ("out.csv", "true", Bool, "write CSV series next to the JSON report"),
];

fn param(key: &str) -> Option<&'static Param> {
    PARAMS.iter().find(|p| p.key == key)
}

fn list<T: FromStr>(value: &str) -> Option<Vec<T>> {
    value.split(',').map(str::trim).filter(|x| !x.is_empty()).map(|x| x.parse().ok()).collect()
}

fn check(kind: Kind, value: &str) -> bool {
    let v = value.trim();
    match kind {
        Kind::Real => v.parse::<f64>().is_ok(),
        Kind::OptReal => v == "none" || v.parse::<f64>().is_ok(),
        Kind::Count => v.parse::<usize>().is_ok(),
        Kind::Seed => v.parse::<u64>().is_ok(),
        Kind::RealList => list::<f64>(v).is_some(),
        Kind::CountList => list::<usize>(v).is_some(),
        Kind::Bool => v.parse::<bool>().is_ok(),
        Kind::Variant => v.parse::<Variant>().is_ok(),
        Kind::Sign => v.parse::<i64>().ok().and_then(|x| Sign::from_int(x).ok()).is_some(),
        Kind::Integrator => v.parse::<Integrator>().is_ok(),
        Kind::Event => v == "smoke" || v.parse::<EventSpec>().is_ok(),
        Kind::Transform => v.parse::<Transform>().is_ok(),
        Kind::Text => true,
    }
}

/// Every parameter of every command; unset keys hold their defaults.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentConfig {
    values: BTreeMap<String, String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self { values: PARAMS.iter().map(|p| (p.key.to_string(), p.default.to_string())).collect() }
    }
}

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let p = param(key).ok_or_else(|| Error::UnknownKeys(vec![key.to_string()]))?;
        if !check(p.kind, value) {
            return Err(Error::Parse(format!("invalid value `{value}` for `{key}` ({})", p.help)));
        }
        self.values.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    /// Applies `key=value` assignments.
    pub fn set_all<'a>(&mut self, pairs: impl IntoIterator<Item = &'a str>) -> Result<()> {
        for pair in pairs {
            let (k, v) = pair.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got `{pair}`")))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    /// Parses the text form: one `key = value` per line, `#` comments, and
    /// optional `[namespace]` headers prefixing the keys below them.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut unknown = Vec::new();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
            let key = if section.is_empty() { k.trim().to_string() } else { format!("{section}.{}", k.trim()) };
            if param(&key).is_none() {
                unknown.push(key);
                continue;
            }
            cfg.set(&key, v)?;
        }
        if unknown.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::UnknownKeys(unknown))
        }
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("no parameter `{key}`"))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn real(&self, key: &str) -> f64 {
        self.get(key).parse().expect("validated on set")
    }

    pub fn opt_real(&self, key: &str) -> Option<f64> {
        match self.get(key) {
            "none" => None,
            v => Some(v.parse().expect("validated on set")),
        }
    }

    pub fn count(&self, key: &str) -> usize {
        self.get(key).parse().expect("validated on set")
    }

    pub fn flag(&self, key: &str) -> bool {
        self.get(key).parse().expect("validated on set")
    }

    pub fn seed(&self) -> u64 {
        self.get("seed").parse().expect("validated on set")
    }

    pub fn reals(&self, key: &str) -> Vec<f64> {
        list(self.get(key)).expect("validated on set")
    }

    pub fn counts(&self, key: &str) -> Vec<usize> {
        list(self.get(key)).expect("validated on set")
    }

    pub fn variant(&self) -> Variant {
        self.get("flow.variant").parse().expect("validated on set")
    }

    pub fn sign(&self) -> Sign {
        Sign::from_int(self.get("flow.sign").parse().expect("validated on set")).expect("validated on set")
    }

    pub fn integrator(&self) -> Integrator {
        self.get("flow.integrator").parse().expect("validated on set")
    }

    pub fn transform(&self) -> Transform {
        self.get("mc.transform").parse().expect("validated on set")
    }

    /// The events of `mc.event`; `smoke` expands to the three smoke events.
    pub fn events(&self) -> Vec<EventSpec> {
        match self.get("mc.event") {
            "smoke" => EventSpec::smoke(),
            e => vec![e.parse().expect("validated on set")],
        }
    }

    /// `out.dir`, else `$NLS4_OUT_DIR`, else the working directory.
    pub fn out_dir(&self) -> PathBuf {
        match self.get("out.dir") {
            "" => std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".")),
            d => PathBuf::from(d),
        }
    }
}

impl fmt::Display for ExperimentConfig {
    /// Sorted `key = value` lines; `parse` inverts this exactly.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.values {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}
