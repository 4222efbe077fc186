use crate::error::{Error, Result};
use crate::spectral::SpectralField;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Re,
    Im,
}

impl Part {
    fn of(self, z: Complex64) -> f64 {
        match self {
            Part::Re => z.re,
            Part::Im => z.im,
        }
    }
}

/// Event defined by finitely many Fourier coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EventSpec {
    Everything,
    Empty,
    /// `lo ≤ part(v_n) ≤ hi`.
    Box { n: i64, part: Part, lo: f64, hi: f64 },
    /// `|v_n - center| ≤ radius`.
    Ball { n: i64, center: Complex64, radius: f64 },
    /// `Re(conj(a) v_n) ≥ offset`.
    HalfSpace { n: i64, normal: Complex64, offset: f64 },
}

impl EventSpec {
    pub fn contains(&self, v: &SpectralField) -> bool {
        match *self {
            EventSpec::Everything => true,
            EventSpec::Empty => false,
            EventSpec::Box { n, part, lo, hi } => (lo..=hi).contains(&part.of(v.get(n))),
            EventSpec::Ball { n, center, radius } => (v.get(n) - center).norm() <= radius,
            EventSpec::HalfSpace { n, normal, offset } => (normal.conj() * v.get(n)).re >= offset,
        }
    }

    /// Largest frequency the event looks at.
    pub fn max_mode(&self) -> usize {
        match *self {
            EventSpec::Everything | EventSpec::Empty => 0,
            EventSpec::Box { n, .. } | EventSpec::Ball { n, .. } | EventSpec::HalfSpace { n, .. } => {
                n.unsigned_abs() as usize
            }
        }
    }

    /// The three events used by the smoke runs of the change-of-variable test.
    pub fn smoke() -> Vec<EventSpec> {
        vec![
            EventSpec::Box { n: 1, part: Part::Re, lo: -0.5, hi: 0.5 },
            EventSpec::Ball { n: 0, center: Complex64::new(0.0, 0.0), radius: 1.0 },
            EventSpec::HalfSpace { n: -1, normal: Complex64::new(1.0, 1.0), offset: 0.2 },
        ]
    }
}

impl fmt::Display for EventSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventSpec::Everything => write!(f, "everything"),
            EventSpec::Empty => write!(f, "empty"),
            EventSpec::Box { n, part, lo, hi } => {
                let p = if *part == Part::Re { "re" } else { "im" };
                write!(f, "box:n={n},part={p},lo={lo},hi={hi}")
            }
            EventSpec::Ball { n, center, radius } => {
                write!(f, "ball:n={n},re={},im={},radius={radius}", center.re, center.im)
            }
            EventSpec::HalfSpace { n, normal, offset } => {
                write!(f, "halfspace:n={n},re={},im={},offset={offset}", normal.re, normal.im)
            }
        }
    }
}

impl FromStr for EventSpec {
    type Err = Error;

    /// `everything`, `empty`, `box:n=1,part=re,lo=-0.5,hi=0.5`,
    /// `ball:n=0,re=0,im=0,radius=1`, `halfspace:n=0,re=1,im=0,offset=0`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        let mut fields = std::collections::BTreeMap::new();
        for kv in rest.split(',').filter(|x| !x.trim().is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value in `{kv}`")))?;
            fields.insert(k.trim().to_string(), v.trim().to_string());
        }
        let num = |key: &str, default: Option<f64>| -> Result<f64> {
            match fields.get(key) {
                Some(v) => v.parse().map_err(|_| Error::Parse(format!("bad number `{v}` for `{key}`"))),
                None => default.ok_or_else(|| Error::Parse(format!("event `{kind}` needs `{key}`"))),
            }
        };
        let mode = || -> Result<i64> {
            let v = fields.get("n").ok_or_else(|| Error::Parse(format!("event `{kind}` needs `n`")))?;
            v.parse().map_err(|_| Error::Parse(format!("bad mode `{v}`")))
        };
        match kind {
            "everything" => Ok(EventSpec::Everything),
            "empty" => Ok(EventSpec::Empty),
            "box" => {
                let part = match fields.get("part").map(String::as_str) {
                    None | Some("re") => Part::Re,
                    Some("im") => Part::Im,
                    Some(other) => return Err(Error::Parse(format!("unknown part `{other}`"))),
                };
                Ok(EventSpec::Box { n: mode()?, part, lo: num("lo", None)?, hi: num("hi", None)? })
            }
            "ball" => Ok(EventSpec::Ball {
                n: mode()?,
                center: Complex64::new(num("re", Some(0.0))?, num("im", Some(0.0))?),
                radius: num("radius", None)?,
            }),
            "halfspace" => Ok(EventSpec::HalfSpace {
                n: mode()?,
                normal: Complex64::new(num("re", Some(1.0))?, num("im", Some(0.0))?),
                offset: num("offset", Some(0.0))?,
            }),
            other => Err(Error::Parse(format!("unknown event `{other}`"))),
        }
    }
}
