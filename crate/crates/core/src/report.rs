//! Versioned, deterministically ordered diagnostics reports.

use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

/// Reals in reports; non-finite values are written as strings so that JSON
/// stays valid and round-trips.
mod real {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    fn parse<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "nan" => Ok(f64::NAN),
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(E::custom(format!("not a real: {other}"))),
            },
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        parse(Repr::deserialize(d)?)
    }

    pub mod map {
        use super::Repr;
        use serde::ser::SerializeMap;
        use serde::{Deserialize, Deserializer, Serializer};
        use std::collections::BTreeMap;

        struct W<'a>(&'a f64);

        impl serde::Serialize for W<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                super::serialize(self.0, s)
            }
        }

        pub fn serialize<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
            let mut out = s.serialize_map(Some(m.len()))?;
            for (k, v) in m {
                out.serialize_entry(k, &W(v))?;
            }
            out.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
            let raw = BTreeMap::<String, Repr>::deserialize(d)?;
            raw.into_iter().map(|(k, v)| Ok((k, super::parse(v)?))).collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    #[serde(with = "real")]
    pub x: f64,
    #[serde(with = "real")]
    pub y: f64,
    #[serde(with = "real")]
    pub y_err: f64,
}

impl SeriesPoint {
    pub fn new(x: f64, y: f64, y_err: f64) -> Self {
        Self { x, y, y_err }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub schema_version: u32,
    pub command: String,
    pub config: BTreeMap<String, String>,
    #[serde(with = "real::map")]
    pub scalars: BTreeMap<String, f64>,
    pub series: BTreeMap<String, Vec<SeriesPoint>>,
    pub flags: BTreeMap<String, bool>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub children: BTreeMap<String, DiagnosticsReport>,
    pub wall_clock_seconds: f64,
}

impl DiagnosticsReport {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            config: BTreeMap::new(),
            scalars: BTreeMap::new(),
            series: BTreeMap::new(),
            flags: BTreeMap::new(),
            notes: BTreeMap::new(),
            children: BTreeMap::new(),
            wall_clock_seconds: 0.0,
        }
    }

    pub fn config(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.config.insert(key.into(), value.to_string());
        self
    }

    pub fn scalar(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.scalars.insert(key.into(), value);
        self
    }

    pub fn flag(&mut self, key: impl Into<String>, pass: bool) -> &mut Self {
        self.flags.insert(key.into(), pass);
        self
    }

    pub fn note(&mut self, key: impl Into<String>, text: impl Into<String>) -> &mut Self {
        self.notes.insert(key.into(), text.into());
        self
    }

    pub fn push(&mut self, series: &str, point: SeriesPoint) -> &mut Self {
        self.series.entry(series.to_string()).or_default().push(point);
        self
    }

    pub fn child(&mut self, name: impl Into<String>, report: DiagnosticsReport) -> &mut Self {
        self.children.insert(name.into(), report);
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.scalars.get(key).copied()
    }

    /// All pass flags of this report and its children.
    pub fn all_pass(&self) -> bool {
        self.flags.values().all(|&b| b) && self.children.values().all(|c| c.all_pass())
    }

    /// Names of failed flags, children prefixed by their key.
    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self.flags.iter().filter(|(_, &b)| !b).map(|(k, _)| k.clone()).collect();
        for (name, c) in &self.children {
            out.extend(c.failures().into_iter().map(|f| format!("{name}.{f}")));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// The report with every wall-clock field zeroed, for byte comparisons.
    pub fn without_timing(&self) -> Self {
        let mut out = self.clone();
        out.wall_clock_seconds = 0.0;
        for c in out.children.values_mut() {
            *c = c.without_timing();
        }
        out
    }

    pub fn series_csv(&self, name: &str) -> Option<String> {
        let points = self.series.get(name)?;
        let mut out = String::from("x,y,y_err\n");
        for p in points {
            let _ = writeln!(out, "{},{},{}", p.x, p.y, p.y_err);
        }
        Some(out)
    }

    /// Writes `<stem>.json` and one `<stem>_<series>.csv` per series.
    pub fn write(&self, dir: &Path, stem: &str, csv: bool) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let path = dir.join(format!("{stem}.json"));
        std::fs::write(&path, self.to_json()?)?;
        written.push(path);
        if csv {
            for name in self.series.keys() {
                let path = dir.join(format!("{stem}_{name}.csv"));
                std::fs::write(&path, self.series_csv(name).unwrap_or_default())?;
                written.push(path);
            }
        }
        Ok(written)
    }
}

/// `num / den` with the 0/0 = 0 convention.
pub fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 && den == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}
