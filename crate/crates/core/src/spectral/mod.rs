//! Fourier-side fields on the circle `T = R / 2πZ`.
//!
//! A field `f(x) = Σ f_n e^{inx}` is stored densely over `n ∈ [-n_grid, n_grid]`.
//! Integrals carry the explicit `2π`: `∫|f|² = 2π Σ|f_n|²`, while the average
//! `⨍|f|² = Σ|f_n|²` carries none.

mod convolution;
mod io;

pub use convolution::{cubic_product, cubic_product_with, ConvolutionMethod, DIRECT_MAX_GRID};
pub use io::{field_from_csv, field_to_csv, FieldJson};

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Japanese bracket `⟨n⟩ = (1 + n²)^{1/2}`.
#[inline]
pub fn bracket(n: i64) -> f64 {
    let n = n as f64;
    (1.0 + n * n).sqrt()
}

/// Sobolev regularity exponent.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SobolevIndex(pub f64);

impl SobolevIndex {
    pub fn new(s: f64) -> Result<Self> {
        if s.is_finite() {
            Ok(Self(s))
        } else {
            Err(Error::InvalidParameter(format!("Sobolev index must be finite, got {s}")))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// `⟨n⟩^{2s}`
    #[inline]
    pub fn weight_sq(self, n: i64) -> f64 {
        let n = n as f64;
        (1.0 + n * n).powf(self.0)
    }
}

impl From<f64> for SobolevIndex {
    fn from(s: f64) -> Self {
        Self(s)
    }
}

/// Defocusing (`+|u|²u`) or focusing (`-|u|²u`) nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    #[default]
    Defocusing,
    Focusing,
}

impl Sign {
    #[inline]
    pub fn value(self) -> f64 {
        match self {
            Sign::Defocusing => 1.0,
            Sign::Focusing => -1.0,
        }
    }

    pub fn from_int(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Sign::Defocusing),
            -1 => Ok(Sign::Focusing),
            _ => Err(Error::InvalidParameter(format!("sign must be +1 or -1, got {v}"))),
        }
    }
}

/// Mass and Hamiltonian evaluated at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservedReport {
    pub mass: f64,
    pub hamiltonian: f64,
    pub timestamp: f64,
}

/// Complex Fourier coefficients on `|n| ≤ n_grid`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    n_grid: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(n_grid: usize) -> Self {
        Self { n_grid, coeffs: vec![Complex64::new(0.0, 0.0); 2 * n_grid + 1] }
    }

    /// Builds a field from a dense coefficient vector ordered `n = -n_grid..=n_grid`.
    pub fn from_coeffs(n_grid: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != 2 * n_grid + 1 {
            return Err(Error::InvalidParameter(format!(
                "expected {} coefficients for n_grid = {n_grid}, got {}",
                2 * n_grid + 1,
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidParameter("coefficients must be finite".into()));
        }
        Ok(Self { n_grid, coeffs })
    }

    /// Builds a field from sparse `(n, value)` pairs.
    pub fn from_modes(n_grid: usize, modes: &[(i64, Complex64)]) -> Result<Self> {
        let mut f = Self::zeros(n_grid);
        for &(n, c) in modes {
            if n.unsigned_abs() as usize > n_grid {
                return Err(Error::InvalidParameter(format!(
                    "frequency {n} outside grid of half-width {n_grid}"
                )));
            }
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::InvalidParameter("coefficients must be finite".into()));
            }
            f.set(n, c);
        }
        Ok(f)
    }

    #[inline]
    pub fn n_grid(&self) -> usize {
        self.n_grid
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    #[inline]
    pub fn index(&self, n: i64) -> Option<usize> {
        let g = self.n_grid as i64;
        (n.abs() <= g).then(|| (n + g) as usize)
    }

    /// Coefficient at frequency `n`; zero outside the grid.
    #[inline]
    pub fn get(&self, n: i64) -> Complex64 {
        match self.index(n) {
            Some(i) => self.coeffs[i],
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Sets the coefficient at `n`. Panics if `n` lies outside the grid.
    #[inline]
    pub fn set(&mut self, n: i64, c: Complex64) {
        let i = self.index(n).expect("frequency outside grid");
        self.coeffs[i] = c;
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    #[inline]
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Iterates `(n, f_n)` in increasing `n`.
    pub fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let g = self.n_grid as i64;
        self.coeffs.iter().enumerate().map(move |(i, &c)| (i as i64 - g, c))
    }

    pub fn frequencies(&self) -> std::ops::RangeInclusive<i64> {
        let g = self.n_grid as i64;
        -g..=g
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    /// Re-embeds the field on a grid of a different half-width, dropping
    /// modes that no longer fit.
    pub fn regrid(&self, n_grid: usize) -> Self {
        let mut out = Self::zeros(n_grid);
        let keep = n_grid.min(self.n_grid) as i64;
        for n in -keep..=keep {
            out.set(n, self.get(n));
        }
        out
    }

    /// Dirichlet projection `P_{≤N}`.
    pub fn project_low(&self, trunc: usize) -> Self {
        let mut out = self.clone();
        let t = trunc as i64;
        for (n, c) in self.frequencies().zip(out.coeffs.iter_mut()) {
            if n.abs() > t {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    /// Complementary projection `P_{>N} = Id - P_{≤N}`.
    pub fn project_high(&self, trunc: usize) -> Self {
        let mut out = self.clone();
        let t = trunc as i64;
        for (n, c) in self.frequencies().zip(out.coeffs.iter_mut()) {
            if n.abs() <= t {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    /// `Σ |f_n|²` (the average `⨍|f|²`).
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Coefficient `ℓ²` norm, i.e. `sobolev_norm(f, 0)`.
    pub fn l2_norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `Σ ⟨n⟩^{2s} |f_n|²`.
    pub fn sobolev_norm_sq(&self, s: SobolevIndex) -> f64 {
        self.modes().map(|(n, c)| s.weight_sq(n) * c.norm_sqr()).sum()
    }

    pub fn sobolev_norm(&self, s: SobolevIndex) -> f64 {
        self.sobolev_norm_sq(s).sqrt()
    }

    /// `M(f) = ∫|f|² = 2π Σ|f_n|²`.
    pub fn mass(&self) -> f64 {
        2.0 * PI * self.norm_sq()
    }

    /// `Σ_{n1-n2+n3-n4=0} f_{n1} f̄_{n2} f_{n3} f̄_{n4} = ⨍|f|⁴`.
    pub fn quartic_sum(&self) -> f64 {
        self.quartic_sum_with(ConvolutionMethod::Auto)
    }

    pub fn quartic_sum_with(&self, method: ConvolutionMethod) -> f64 {
        let c = cubic_product_with(self, self, self, method);
        c.coeffs.iter().zip(&self.coeffs).map(|(a, b)| (a * b.conj()).re).sum()
    }

    /// `H(f) = ½∫|∂²f|² ± ¼∫|f|⁴`.
    pub fn hamiltonian(&self, sign: Sign) -> f64 {
        let kinetic: f64 = self
            .modes()
            .map(|(n, c)| {
                let n2 = (n * n) as f64;
                n2 * n2 * c.norm_sqr()
            })
            .sum();
        0.5 * 2.0 * PI * kinetic + sign.value() * 0.25 * 2.0 * PI * self.quartic_sum()
    }

    pub fn conserved(&self, sign: Sign, timestamp: f64) -> ConservedReport {
        ConservedReport { mass: self.mass(), hamiltonian: self.hamiltonian(sign), timestamp }
    }

    /// `f_n → conj(f_{-n})`, i.e. `f(x) → conj(f(x))`.
    pub fn reflect_conj(&self) -> Self {
        let mut out = Self::zeros(self.n_grid);
        for (n, c) in self.modes() {
            out.set(-n, c.conj());
        }
        out
    }

    pub fn scaled(&self, a: Complex64) -> Self {
        Self { n_grid: self.n_grid, coeffs: self.coeffs.iter().map(|c| c * a).collect() }
    }

    /// `self + a * other`
    pub fn axpy(&self, a: Complex64, other: &Self) -> Self {
        debug_assert_eq!(self.n_grid, other.n_grid);
        Self {
            n_grid: self.n_grid,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| x + a * y).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.axpy(Complex64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    /// Multiplies each coefficient by `e^{i θ(n)}`.
    pub fn rotate_modes(&self, theta: impl Fn(i64) -> f64) -> Self {
        let mut out = self.clone();
        let g = self.n_grid as i64;
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            *c *= Complex64::from_polar(1.0, theta(i as i64 - g));
        }
        out
    }

    /// `ℓ²` distance; fields on different grids are compared on the larger one.
    pub fn l2_distance(&self, other: &Self) -> f64 {
        let g = self.n_grid.max(other.n_grid) as i64;
        (-g..=g).map(|n| (self.get(n) - other.get(n)).norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn check_grid(&self, other: &Self) -> Result<()> {
        if self.n_grid == other.n_grid {
            Ok(())
        } else {
            Err(Error::GridMismatch { expected: self.n_grid, found: other.n_grid })
        }
    }
}

/// Free-standing forms of the field functionals.
pub fn sobolev_norm(f: &SpectralField, s: SobolevIndex) -> f64 {
    f.sobolev_norm(s)
}

pub fn project_low(f: &SpectralField, trunc: usize) -> SpectralField {
    f.project_low(trunc)
}

pub fn project_high(f: &SpectralField, trunc: usize) -> SpectralField {
    f.project_high(trunc)
}

pub fn mass(f: &SpectralField) -> f64 {
    f.mass()
}

pub fn hamiltonian(f: &SpectralField, sign: Sign) -> f64 {
    f.hamiltonian(sign)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn sobolev_norm_examples() {
        let f = SpectralField::from_modes(4, &[(0, c(1.0, 0.0))]).unwrap();
        assert_eq!(f.sobolev_norm(SobolevIndex(2.0)), 1.0);
        let f = SpectralField::from_modes(4, &[(3, c(1.0, 0.0))]).unwrap();
        assert_relative_eq!(f.sobolev_norm(SobolevIndex(1.0)), 10f64.sqrt(), max_relative = 1e-14);
        let f = SpectralField::from_modes(4, &[(3, c(1.0, 2.0)), (-2, c(0.5, 0.0))]).unwrap();
        assert_relative_eq!(f.sobolev_norm(SobolevIndex(0.0)), f.l2_norm(), max_relative = 1e-15);
    }

    #[test]
    fn projection_examples() {
        let f = SpectralField::from_modes(3, &[(-1, c(0.0, 1.0)), (0, c(2.0, 0.0)), (1, c(1.0, 0.0))])
            .unwrap();
        assert_eq!(f.project_low(3), f);
        assert_eq!(f.project_low(10), f);
        let low = f.project_low(0);
        assert_eq!(low, SpectralField::from_modes(3, &[(0, c(2.0, 0.0))]).unwrap());
        assert_eq!(low.add(&f.project_high(0)), f);
    }

    #[test]
    fn mass_examples() {
        let f = SpectralField::from_modes(2, &[(0, c(1.0, 0.0))]).unwrap();
        assert_relative_eq!(f.mass(), 2.0 * PI, max_relative = 1e-15);
        let a = c(0.3, -1.2);
        let f = SpectralField::from_modes(5, &[(5, a)]).unwrap();
        assert_relative_eq!(f.mass(), 2.0 * PI * a.norm_sqr(), max_relative = 1e-15);
    }

    #[test]
    fn hamiltonian_examples() {
        let f = SpectralField::from_modes(2, &[(0, c(1.0, 0.0))]).unwrap();
        assert_relative_eq!(f.hamiltonian(Sign::Defocusing), PI / 2.0, max_relative = 1e-14);
        let f = SpectralField::from_modes(2, &[(1, c(1.0, 0.0))]).unwrap();
        assert_relative_eq!(f.hamiltonian(Sign::Defocusing), PI + PI / 2.0, max_relative = 1e-14);
        assert_relative_eq!(f.hamiltonian(Sign::Focusing), PI - PI / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn rejects_out_of_grid_modes() {
        assert!(SpectralField::from_modes(2, &[(3, c(1.0, 0.0))]).is_err());
        assert!(SpectralField::from_modes(2, &[(1, c(f64::NAN, 0.0))]).is_err());
        assert!(SpectralField::from_coeffs(2, vec![c(0.0, 0.0); 4]).is_err());
    }

    fn field_strategy(n_grid: usize) -> impl Strategy<Value = SpectralField> {
        prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 2 * n_grid + 1).prop_map(move |v| {
            SpectralField::from_coeffs(n_grid, v.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn projection_contracts(f in field_strategy(6), trunc in 0usize..8, s in -1.0f64..3.0) {
            let s = SobolevIndex(s);
            prop_assert!(f.project_low(trunc).sobolev_norm(s) <= f.sobolev_norm(s) * (1.0 + 1e-15));
            prop_assert!(f.project_low(trunc).mass() <= f.mass() * (1.0 + 1e-15));
        }

        #[test]
        fn l2_norm_matches_mass(f in field_strategy(5)) {
            let l2 = f.sobolev_norm(SobolevIndex(0.0));
            prop_assert!((l2 * l2 * 2.0 * PI - f.mass()).abs() <= 1e-12 * f.mass().max(1e-300));
        }

        #[test]
        fn reflection_conjugation_invariance(f in field_strategy(5)) {
            let g = f.reflect_conj();
            prop_assert!((g.mass() - f.mass()).abs() <= 1e-12 * f.mass().max(1.0));
            let (h0, h1) = (f.hamiltonian(Sign::Defocusing), g.hamiltonian(Sign::Defocusing));
            prop_assert!((h0 - h1).abs() <= 1e-10 * h0.abs().max(1.0));
        }
    }
}
