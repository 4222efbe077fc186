//! The trilinear convolution `(a, b, c) ↦ Σ_{n1-n2+n3=n} a_{n1} b̄_{n2} c_{n3}`,
//! i.e. the Fourier coefficients of `a · conj(b) · c` restricted to the grid.

use super::SpectralField;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

/// Largest grid half-width evaluated with the exact nested sum under
/// [`ConvolutionMethod::Auto`].
pub const DIRECT_MAX_GRID: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvolutionMethod {
    #[default]
    Auto,
    Direct,
    /// Zero-padded FFT with padding factor 2 (transform length ≥ 4 n_grid + 2),
    /// which removes all aliasing of the cubic product onto `|n| ≤ n_grid`.
    Fft,
}

pub fn cubic_product(a: &SpectralField, b: &SpectralField, c: &SpectralField) -> SpectralField {
    cubic_product_with(a, b, c, ConvolutionMethod::Auto)
}

pub fn cubic_product_with(
    a: &SpectralField,
    b: &SpectralField,
    c: &SpectralField,
    method: ConvolutionMethod,
) -> SpectralField {
    assert!(
        a.n_grid() == b.n_grid() && b.n_grid() == c.n_grid(),
        "cubic_product requires fields on a common grid"
    );
    let method = match method {
        ConvolutionMethod::Auto if a.n_grid() <= DIRECT_MAX_GRID => ConvolutionMethod::Direct,
        ConvolutionMethod::Auto => ConvolutionMethod::Fft,
        m => m,
    };
    match method {
        ConvolutionMethod::Direct => direct(a, b, c),
        _ => via_fft(a, b, c),
    }
}

fn direct(a: &SpectralField, b: &SpectralField, c: &SpectralField) -> SpectralField {
    let g = a.n_grid();
    let len = 2 * g + 1;
    let (ac, bc, cc) = (a.coeffs(), b.coeffs(), c.coeffs());
    // d[k + 2g] = Σ_{n1 - n2 = k} a_{n1} b̄_{n2}; then out_n = Σ_{n3} d[n - n3] c_{n3}.
    let mut d = vec![Complex64::new(0.0, 0.0); 2 * len - 1];
    for (i1, a1) in ac.iter().enumerate() {
        if *a1 == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (i2, b2) in bc.iter().enumerate() {
            d[i1 + len - 1 - i2] += a1 * b2.conj();
        }
    }
    let mut out = SpectralField::zeros(g);
    for (i, slot) in out.coeffs_mut().iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i3, c3) in cc.iter().enumerate() {
            acc += d[i + len - 1 - i3] * c3;
        }
        *slot = acc;
    }
    out
}

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<usize, (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plans(len: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANS.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (planner, cache) = &mut *guard;
        cache
            .entry(len)
            .or_insert_with(|| (planner.plan_fft_forward(len), planner.plan_fft_inverse(len)))
            .clone()
    })
}

/// Transform length used by the dealiased path.
pub(crate) fn padded_len(n_grid: usize) -> usize {
    (4 * n_grid + 2).next_power_of_two()
}

fn to_physical(f: &SpectralField, len: usize, inverse: &Arc<dyn Fft<f64>>) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (n, c) in f.modes() {
        buf[n.rem_euclid(len as i64) as usize] = c;
    }
    inverse.process(&mut buf);
    buf
}

fn via_fft(a: &SpectralField, b: &SpectralField, c: &SpectralField) -> SpectralField {
    let len = padded_len(a.n_grid());
    let (forward, inverse) = plans(len);
    let pa = to_physical(a, len, &inverse);
    let mut prod = if std::ptr::eq(a, c) {
        pa.clone()
    } else {
        to_physical(c, len, &inverse)
    };
    if std::ptr::eq(a, b) {
        for (p, x) in prod.iter_mut().zip(&pa) {
            *p *= x * x.conj();
        }
    } else {
        let pb = to_physical(b, len, &inverse);
        for ((p, x), y) in prod.iter_mut().zip(&pa).zip(&pb) {
            *p *= x * y.conj();
        }
    }
    forward.process(&mut prod);
    let scale = 1.0 / len as f64;
    let mut out = SpectralField::zeros(a.n_grid());
    let g = a.n_grid() as i64;
    for n in -g..=g {
        out.set(n, prod[n.rem_euclid(len as i64) as usize] * scale);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(n_grid: usize, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..2 * n_grid + 1)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        SpectralField::from_coeffs(n_grid, coeffs).unwrap()
    }

    /// Brute force over the full cube of (n1, n2, n3).
    fn cube_oracle(a: &SpectralField, b: &SpectralField, c: &SpectralField) -> SpectralField {
        let g = a.n_grid() as i64;
        let mut out = SpectralField::zeros(a.n_grid());
        for n1 in -g..=g {
            for n2 in -g..=g {
                for n3 in -g..=g {
                    let n = n1 - n2 + n3;
                    if n.abs() <= g {
                        let v = out.get(n) + a.get(n1) * b.get(n2).conj() * c.get(n3);
                        out.set(n, v);
                    }
                }
            }
        }
        out
    }

    #[test]
    fn direct_matches_cube_oracle() {
        let (a, b, c) = (random_field(5, 1), random_field(5, 2), random_field(5, 3));
        let d = cubic_product_with(&a, &b, &c, ConvolutionMethod::Direct);
        let o = cube_oracle(&a, &b, &c);
        assert!(d.l2_distance(&o) <= 1e-13 * o.l2_norm());
    }

    #[test]
    fn fft_matches_direct_on_random_fields() {
        for (g, seed) in [(3usize, 10u64), (8, 11), (17, 12), (40, 13)] {
            let (a, b, c) = (random_field(g, seed), random_field(g, seed + 100), random_field(g, seed + 200));
            let d = cubic_product_with(&a, &b, &c, ConvolutionMethod::Direct);
            let f = cubic_product_with(&a, &b, &c, ConvolutionMethod::Fft);
            assert!(d.l2_distance(&f) <= 1e-10 * d.l2_norm(), "grid {g}");
            let same_d = cubic_product_with(&a, &a, &a, ConvolutionMethod::Direct);
            let same_f = cubic_product_with(&a, &a, &a, ConvolutionMethod::Fft);
            assert!(same_d.l2_distance(&same_f) <= 1e-10 * same_d.l2_norm());
        }
    }

    #[test]
    fn quartic_sum_paths_agree() {
        let f = random_field(30, 7);
        let d = f.quartic_sum_with(ConvolutionMethod::Direct);
        let q = f.quartic_sum_with(ConvolutionMethod::Fft);
        assert!((d - q).abs() <= 1e-10 * d.abs());
    }
}
