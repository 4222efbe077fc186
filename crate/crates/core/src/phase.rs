//! Exact integer arithmetic for the resonance function
//! `φ(n1, n2, n3, n) = n1⁴ - n2⁴ + n3⁴ - n⁴` and the non-resonant planes
//! `Γ_N(n) = { n = n1 - n2 + n3, n1 ≠ n, n3 ≠ n, |n_j| ≤ N }`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A frequency quadruple `(n1, n2, n3, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FrequencyQuad {
    pub n1: i64,
    pub n2: i64,
    pub n3: i64,
    pub n: i64,
}

impl FrequencyQuad {
    pub const fn new(n1: i64, n2: i64, n3: i64, n: i64) -> Self {
        Self { n1, n2, n3, n }
    }

    pub fn on_plane(&self) -> bool {
        self.n1 as i128 - self.n2 as i128 + self.n3 as i128 == self.n as i128
    }

    /// `(n - n1)(n - n3)`, the divisor-counting label.
    pub fn mu(&self) -> i128 {
        (self.n as i128 - self.n1 as i128) * (self.n as i128 - self.n3 as i128)
    }
}

fn fourth(x: i64, q: &FrequencyQuad) -> Result<i128> {
    (x as i128).checked_pow(4).ok_or(Error::PhaseOverflow(q.n1, q.n2, q.n3, q.n))
}

/// `φ(q) = n1⁴ - n2⁴ + n3⁴ - n⁴`, overflow-checked in 128-bit arithmetic.
pub fn phi(q: FrequencyQuad) -> Result<i128> {
    let ovf = || Error::PhaseOverflow(q.n1, q.n2, q.n3, q.n);
    let a = fourth(q.n1, &q)?;
    let b = fourth(q.n2, &q)?;
    let c = fourth(q.n3, &q)?;
    let d = fourth(q.n, &q)?;
    a.checked_sub(b)
        .and_then(|x| x.checked_add(c))
        .and_then(|x| x.checked_sub(d))
        .ok_or_else(ovf)
}

/// Factored form `(n1 - n2)(n1 - n)(n1² + n2² + n3² + n² + 2(n1 + n3)²)`,
/// valid on the plane `n = n1 - n2 + n3`.
pub fn phi_factored(q: FrequencyQuad) -> Result<i128> {
    if !q.on_plane() {
        return Err(Error::NotOnPlane(q.n1, q.n2, q.n3, q.n));
    }
    let ovf = || Error::PhaseOverflow(q.n1, q.n2, q.n3, q.n);
    let (n1, n2, n3, n) = (q.n1 as i128, q.n2 as i128, q.n3 as i128, q.n as i128);
    let sq = |x: i128| x.checked_mul(x).ok_or_else(ovf);
    let last = sq(n1)?
        .checked_add(sq(n2)?)
        .and_then(|x| x.checked_add(sq(n3).ok()?))
        .and_then(|x| x.checked_add(sq(n).ok()?))
        .and_then(|x| x.checked_add(sq(n1 + n3).ok()?.checked_mul(2)?))
        .ok_or_else(ovf)?;
    (n1 - n2).checked_mul(n1 - n).and_then(|x| x.checked_mul(last)).ok_or_else(ovf)
}

/// `Γ_N(n)` (or `Γ(n)` restricted to a window when `truncation` is the grid).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaSet {
    pub center: i64,
    pub truncation: Option<usize>,
    pub elements: Vec<FrequencyQuad>,
}

impl GammaSet {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Enumerates `Γ_N(n)` by iterating `(n1, n3)` and solving `n2 = n1 + n3 - n`.
pub fn gamma_set(n: i64, truncation: usize) -> GammaSet {
    let t = truncation as i64;
    let mut elements = Vec::new();
    for n1 in -t..=t {
        if n1 == n {
            continue;
        }
        for n3 in -t..=t {
            if n3 == n {
                continue;
            }
            let n2 = n1 + n3 - n;
            if n2.abs() <= t {
                elements.push(FrequencyQuad::new(n1, n2, n3, n));
            }
        }
    }
    GammaSet { center: n, truncation: Some(truncation), elements }
}

/// `#{ q ∈ Γ_N(n) : (n - n1)(n - n3) = μ }`.
pub fn gamma_mu_count(n: i64, mu: i64, truncation: usize) -> usize {
    let t = truncation as i64;
    if mu == 0 {
        // (n - n1)(n - n3) never vanishes on Γ(n).
        return 0;
    }
    // Walk the signed divisors a of μ: n1 = n - a, n3 = n - μ / a.
    let m = mu.unsigned_abs();
    let mut count = 0;
    let mut d = 1u64;
    while d * d <= m {
        if m % d == 0 {
            let mut divs = vec![d];
            if d != m / d {
                divs.push(m / d);
            }
            for a in divs {
                for a in [a as i64, -(a as i64)] {
                    let b = mu / a;
                    let (n1, n3) = (n - a, n - b);
                    let n2 = n1 + n3 - n;
                    if n1.abs() <= t && n3.abs() <= t && n2.abs() <= t {
                        count += 1;
                    }
                }
            }
        }
        d += 1;
    }
    count
}

/// Number of positive divisors of `m`, by trial division up to `√m`.
pub fn divisor_count(m: i64) -> Result<u64> {
    if m <= 0 {
        return Err(Error::NonPositive(m));
    }
    let m = m as u64;
    let mut count = 0;
    let mut d = 1u64;
    while d * d <= m {
        if m % d == 0 {
            count += if d * d == m { 1 } else { 2 };
        }
        d += 1;
    }
    Ok(count)
}

/// One element of a precomputed `Γ_N` table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaEntry {
    pub n: i64,
    pub n1: i64,
    pub n2: i64,
    pub n3: i64,
    /// Exact phase (never zero on `Γ(n)` once `n1 ≠ n2`; see [`GammaTable::new`]).
    pub phi: i128,
    pub mu: i64,
}

impl GammaEntry {
    #[inline]
    pub fn phi_f64(&self) -> f64 {
        self.phi as f64
    }
}

/// All of `⋃_{|n| ≤ N} Γ_N(n)`, grouped by output frequency `n` and, within
/// each `n`, bucketed by `μ = (n - n1)(n - n3)`.
#[derive(Debug, Clone)]
pub struct GammaTable {
    truncation: usize,
    entries: Vec<GammaEntry>,
    /// `ranges[n + N]` = slice of `entries` whose output frequency is `n`.
    ranges: Vec<std::ops::Range<usize>>,
}

impl GammaTable {
    pub fn new(truncation: usize) -> Result<Self> {
        let t = truncation as i64;
        let mut entries = Vec::new();
        let mut ranges = Vec::with_capacity(2 * truncation + 1);
        for n in -t..=t {
            let start = entries.len();
            let mut bucket: Vec<GammaEntry> = gamma_set(n, truncation)
                .elements
                .into_iter()
                .map(|q| {
                    let p = phi(q)?;
                    Ok(GammaEntry { n, n1: q.n1, n2: q.n2, n3: q.n3, phi: p, mu: q.mu() as i64 })
                })
                .collect::<Result<_>>()?;
            bucket.sort_by_key(|e| (e.mu, e.n1, e.n3));
            // n1 = n2 forces n3 = n, excluded from Γ(n); so φ ≠ 0 throughout.
            debug_assert!(bucket.iter().all(|e| e.phi != 0));
            entries.extend(bucket);
            ranges.push(start..entries.len());
        }
        Ok(Self { truncation, entries, ranges })
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn entries(&self) -> &[GammaEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries of `Γ_N(n)`; empty when `|n| > N`.
    pub fn at(&self, n: i64) -> &[GammaEntry] {
        let t = self.truncation as i64;
        if n.abs() > t {
            return &[];
        }
        &self.entries[self.ranges[(n + t) as usize].clone()]
    }

    /// Iterates the μ-buckets of `Γ_N(n)`.
    pub fn mu_buckets(&self, n: i64) -> impl Iterator<Item = (i64, &[GammaEntry])> {
        self.at(n).chunk_by(|a, b| a.mu == b.mu).map(|chunk| (chunk[0].mu, chunk))
    }
}

/// Row of the `phase-table` CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseRow {
    pub n1: i64,
    pub n2: i64,
    pub n3: i64,
    pub n: i64,
    pub phi: i128,
    pub mu: i128,
}

pub fn phase_table(n: i64, truncation: usize) -> Result<Vec<PhaseRow>> {
    gamma_set(n, truncation)
        .elements
        .into_iter()
        .map(|q| Ok(PhaseRow { n1: q.n1, n2: q.n2, n3: q.n3, n: q.n, phi: phi(q)?, mu: q.mu() }))
        .collect()
}

pub fn phase_table_csv(rows: &[PhaseRow]) -> String {
    let mut out = String::from("n1,n2,n3,n,phi,mu\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{},{},{}\n", r.n1, r.n2, r.n3, r.n, r.phi, r.mu));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_examples() {
        assert_eq!(phi(FrequencyQuad::new(1, 0, 1, 2)).unwrap(), -14);
        assert_eq!(phi(FrequencyQuad::new(3, 2, 1, 2)).unwrap(), 50);
        for n in -7..=7 {
            for m in -7..=7 {
                assert_eq!(phi(FrequencyQuad::new(n, m, m, n)).unwrap(), 0);
            }
        }
    }

    #[test]
    fn phi_factored_examples() {
        assert_eq!(phi_factored(FrequencyQuad::new(1, 0, 1, 2)).unwrap(), -14);
        assert_eq!(phi_factored(FrequencyQuad::new(3, 2, 1, 2)).unwrap(), 50);
        assert_eq!(phi_factored(FrequencyQuad::new(4, -3, -3, 4)).unwrap(), 0);
        assert!(matches!(
            phi_factored(FrequencyQuad::new(1, 1, 1, 5)),
            Err(Error::NotOnPlane(..))
        ));
    }

    #[test]
    fn phi_overflow_is_an_error() {
        let big = i64::MAX / 2;
        assert!(matches!(phi(FrequencyQuad::new(big, 0, 0, big)), Err(Error::PhaseOverflow(..))));
        assert!(phi(FrequencyQuad::new(100_000, 1, -5, 99_994)).is_ok());
    }

    #[test]
    fn gamma_set_examples() {
        let g = gamma_set(0, 1);
        let mut e = g.elements.clone();
        e.sort();
        assert_eq!(e, vec![FrequencyQuad::new(-1, 0, 1, 0), FrequencyQuad::new(1, 0, -1, 0)]);
        assert!(gamma_set(0, 0).is_empty());
    }

    #[test]
    fn gamma_set_matches_cube_count() {
        for t in 0..=6usize {
            let ti = t as i64;
            for n in -(ti + 2)..=(ti + 2) {
                let mut brute = 0;
                for n1 in -ti..=ti {
                    for n2 in -ti..=ti {
                        for n3 in -ti..=ti {
                            if n1 - n2 + n3 == n && n1 != n && n3 != n {
                                brute += 1;
                            }
                        }
                    }
                }
                let g = gamma_set(n, t);
                assert_eq!(g.len(), brute, "n = {n}, N = {t}");
                assert!(g.elements.iter().all(|q| q.on_plane() && q.n1 != n && q.n3 != n));
            }
        }
    }

    #[test]
    fn gamma_mu_count_against_enumeration() {
        let t = 20usize;
        for n in -20..=20i64 {
            let set = gamma_set(n, t);
            let mut total = 0;
            for mu in -400..=400i64 {
                let enumerated = set.elements.iter().filter(|q| q.mu() == mu as i128).count();
                let counted = gamma_mu_count(n, mu, t);
                assert_eq!(counted, enumerated, "n = {n}, mu = {mu}");
                if mu != 0 {
                    assert!(counted as u64 <= 2 * divisor_count(mu.abs()).unwrap());
                }
                total += counted;
            }
            // |μ| = |n - n1||n - n3| ≤ 40² covers every element.
            let rest: usize = (401..=1600i64)
                .map(|m| gamma_mu_count(n, m, t) + gamma_mu_count(n, -m, t))
                .sum();
            assert_eq!(total + rest, set.len());
        }
        assert_eq!(gamma_mu_count(0, 7, 1), 0);
    }

    #[test]
    fn divisor_count_examples() {
        assert_eq!(divisor_count(1).unwrap(), 1);
        assert_eq!(divisor_count(12).unwrap(), 6);
        assert_eq!(divisor_count(1024).unwrap(), 11);
        assert!(divisor_count(0).is_err());
        assert!(divisor_count(-3).is_err());
    }

    #[test]
    fn divisor_envelope() {
        // Sieve d(m) for m ≤ 10⁶ and check d(m) ≤ 24 √m.
        let limit = 1_000_000usize;
        let mut d = vec![0u32; limit + 1];
        for a in 1..=limit {
            let mut k = a;
            while k <= limit {
                d[k] += 1;
                k += a;
            }
        }
        for m in [1usize, 12, 1024, 720_720, 997_920] {
            assert_eq!(d[m] as u64, divisor_count(m as i64).unwrap());
        }
        assert!((1..=limit).all(|m| (d[m] as f64) <= 24.0 * (m as f64).sqrt()));
    }

    #[test]
    fn phase_symmetries_and_bound() {
        let r = 12i64;
        for n1 in -r..=r {
            for n2 in -r..=r {
                for n3 in -r..=r {
                    let n = n1 - n2 + n3;
                    let q = FrequencyQuad::new(n1, n2, n3, n);
                    let p = phi(q).unwrap();
                    assert_eq!(p, phi(FrequencyQuad::new(n3, n2, n1, n)).unwrap());
                    assert_eq!(-p, phi(FrequencyQuad::new(n2, n1, n, n3)).unwrap());
                    if n1 != n && n3 != n {
                        assert_eq!(p != 0, n1 != n2);
                        let m = [n1, n2, n3, n].iter().map(|x| (x * x) as i128).max().unwrap();
                        let lower = ((n1 - n2).abs() as i128) * ((n1 - n).abs() as i128) * m;
                        assert!(p.abs() >= lower);
                    }
                }
            }
        }
    }

    #[test]
    fn table_buckets_cover_sets() {
        let table = GammaTable::new(5).unwrap();
        for n in -5..=5 {
            assert_eq!(table.at(n).len(), gamma_set(n, 5).len());
            let total: usize = table.mu_buckets(n).map(|(mu, b)| {
                assert!(b.iter().all(|e| e.mu == mu));
                assert_eq!(b.len(), gamma_mu_count(n, mu, 5));
                b.len()
            }).sum();
            assert_eq!(total, table.at(n).len());
        }
        assert!(table.at(9).is_empty());
    }

    #[test]
    fn phase_table_csv_rows() {
        let rows = phase_table(0, 1).unwrap();
        let csv = phase_table_csv(&rows);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("n1,n2,n3,n,phi,mu\n"));
        assert!(rows.iter().all(|r| r.phi == 2 && r.mu == -1));
    }
}
