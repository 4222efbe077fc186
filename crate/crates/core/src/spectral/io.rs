use super::SpectralField;
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Wire form of a field: coefficients ordered `n = -n_grid..=n_grid`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldJson {
    pub n_grid: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&SpectralField> for FieldJson {
    fn from(f: &SpectralField) -> Self {
        Self {
            n_grid: f.n_grid(),
            re: f.coeffs().iter().map(|c| c.re).collect(),
            im: f.coeffs().iter().map(|c| c.im).collect(),
        }
    }
}

impl TryFrom<FieldJson> for SpectralField {
    type Error = Error;

    fn try_from(j: FieldJson) -> Result<Self> {
        if j.re.len() != j.im.len() {
            return Err(Error::Parse("re and im arrays differ in length".into()));
        }
        let coeffs = j.re.iter().zip(&j.im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        SpectralField::from_coeffs(j.n_grid, coeffs)
    }
}

impl Serialize for SpectralField {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FieldJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpectralField {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = FieldJson::deserialize(d)?;
        SpectralField::try_from(j).map_err(serde::de::Error::custom)
    }
}

/// CSV with header `n,re,im`, one row per frequency.
pub fn field_to_csv(f: &SpectralField) -> String {
    let mut out = String::from("n,re,im\n");
    for (n, c) in f.modes() {
        out.push_str(&format!("{n},{:e},{:e}\n", c.re, c.im));
    }
    out
}

/// Parses the CSV form. Missing frequencies are zero; the grid is the
/// largest `|n|` present.
pub fn field_from_csv(text: &str) -> Result<SpectralField> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with('n')) {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("line {}: expected 3 columns", lineno + 1)));
        }
        let n: i64 = parts[0].parse().map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        let re: f64 = parts[1].parse().map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        let im: f64 = parts[2].parse().map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        rows.push((n, Complex64::new(re, im)));
    }
    let n_grid = rows.iter().map(|(n, _)| n.unsigned_abs() as usize).max().unwrap_or(0);
    SpectralField::from_modes(n_grid, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn json_and_csv_round_trip(v in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..20)) {
            let n_grid = (v.len() - 1) / 2;
            let coeffs: Vec<_> = v.into_iter().take(2 * n_grid + 1).map(|(a, b)| Complex64::new(a, b)).collect();
            let f = SpectralField::from_coeffs(n_grid, coeffs).unwrap();
            let json = serde_json::to_string(&f).unwrap();
            let back: SpectralField = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(&back, &f);
            let csv = field_from_csv(&field_to_csv(&f)).unwrap().regrid(n_grid);
            prop_assert_eq!(csv, f);
        }
    }

    #[test]
    fn json_layout() {
        let f = SpectralField::from_modes(1, &[(-1, Complex64::new(1.0, 2.0))]).unwrap();
        let v: serde_json::Value = serde_json::to_value(&f).unwrap();
        assert_eq!(v["n_grid"], 1);
        assert_eq!(v["re"], serde_json::json!([1.0, 0.0, 0.0]));
        assert_eq!(v["im"], serde_json::json!([2.0, 0.0, 0.0]));
    }
}
