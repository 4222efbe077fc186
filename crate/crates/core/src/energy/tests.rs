use super::*;
use crate::flows::{evolve, to_interaction, FlowSpec, Variant};
use crate::measures::gaussian_field;
use crate::phase::{gamma_set, phi};
use crate::spectral::bracket;

fn draw(cutoff: usize, s: f64, k: u64) -> SpectralField {
    gaussian_field(s, cutoff, 7, k, 0)
}

#[test]
fn correction_vanishes_on_single_modes_and_zero() {
    let s = SobolevIndex(1.0);
    let v = SpectralField::from_modes(5, &[(3, Complex64::new(0.4, 1.1))]).unwrap();
    assert_eq!(correction(&v, 0.3, s).unwrap(), 0.0);
    assert_eq!(correction(&SpectralField::zeros(5), 0.3, s).unwrap(), 0.0);
    let rep = modified_energy(&v, 0.3, s, 4).unwrap();
    assert!((rep.total - bracket(3).powi(2) * v.get(3).norm_sqr()).abs() < 1e-14);
    let rep = modified_energy(&draw(4, 1.0, 1), 0.2, s, 0).unwrap();
    assert_eq!(rep.total, draw(4, 1.0, 1).get(0).norm_sqr());
}

/// Brute-force `R_t` over all `Γ(n)` quads with every index in the support.
fn enumerated_correction(v: &SpectralField, t: f64, s: SobolevIndex) -> f64 {
    let m = v.n_grid() as i64;
    let mut total = Complex64::new(0.0, 0.0);
    for n in -m..=m {
        for q in gamma_set(n, v.n_grid()).elements {
            let ph = phi(q).unwrap() as f64;
            let term = Complex64::from_polar(1.0 / ph, -ph * t) * v.get(q.n1) * v.get(q.n2).conj() * v.get(q.n3);
            total += s.weight_sq(n) * v.get(n).conj() * term;
        }
    }
    -2.0 * total.re
}

#[test]
fn correction_two_mode_enumeration() {
    let one = Complex64::new(1.0, 0.0);
    let v = SpectralField::from_modes(1, &[(0, one), (1, one)]).unwrap();
    let s = SobolevIndex(1.0);
    let oracle = enumerated_correction(&v, 0.0, s);
    assert_eq!(oracle, 0.0);
    assert_eq!(correction(&v, 0.0, s).unwrap(), oracle);
    let v = SpectralField::from_modes(3, &[(0, one), (1, Complex64::new(0.5, -0.3)), (2, Complex64::new(-0.2, 0.9))]).unwrap();
    for t in [0.0, 0.37] {
        let oracle = enumerated_correction(&v, t, s);
        assert!(oracle != 0.0);
        assert!((correction(&v, t, s).unwrap() - oracle).abs() <= 1e-13 * oracle.abs());
    }
    let v = draw(4, 0.8, 9);
    let oracle = enumerated_correction(&v, 0.05, SobolevIndex(0.8));
    assert!((correction(&v, 0.05, SobolevIndex(0.8)).unwrap() - oracle).abs() <= 1e-12 * (1.0 + oracle.abs()));
}

#[test]
fn modified_energy_is_norm_plus_correction() {
    let s = SobolevIndex(0.8);
    let v = draw(6, 0.8, 3);
    let rep = modified_energy(&v, 0.17, s, 6).unwrap();
    assert_eq!(rep.total, rep.sobolev_sq + rep.correction);
    assert!((rep.correction - correction(&v, 0.17, s).unwrap()).abs() <= 1e-14 * (1.0 + rep.correction.abs()));
    assert!(modified_energy(&v, 0.0, s, 7).is_err());
}

#[test]
fn correction_is_autonomous_in_the_free_variable() {
    let s = SobolevIndex(1.2);
    for k in 0..4 {
        let v = draw(8, 1.2, k);
        let t = 0.0123 * (k + 1) as f64;
        // ũ = S(t)v, i.e. v = S(-t)ũ in the interaction convention.
        let u = crate::flows::from_interaction(&v, t);
        let a = correction(&v, t, s).unwrap();
        let b = correction(&u, 0.0, s).unwrap();
        assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "{a} {b}");
        assert!(to_interaction(&u, t).l2_distance(&v) < 1e-13);
    }
}

#[test]
fn derivative_terms_trivial_cases() {
    let s = SobolevIndex(0.8);
    let single = SpectralField::from_modes(4, &[(2, Complex64::new(0.7, 0.2))]).unwrap();
    let spec = FlowSpec::truncated(Variant::TruncatedEmbedded, 4, 1e-4);
    let traj = evolve(&spec, &single, 0.0, 1e-3).unwrap();
    let d = derivative_terms(&traj, 5, s, 4, 0.05, 0.1).unwrap();
    for x in [d.n1, d.r1, d.n2, d.r2, d.n3, d.r3] {
        assert_eq!(x, 0.0);
    }
    assert!(d.fd_derivative.abs() <= 1e-9);
    let zero = evolve(&spec, &SpectralField::zeros(4), 0.0, 1e-3).unwrap();
    let d = derivative_terms(&zero, 3, s, 4, 0.05, 0.1).unwrap();
    assert_eq!((d.sum, d.fd_derivative, d.bound_rhs), (0.0, 0.0, 0.0));
    assert!(matches!(derivative_terms(&traj, 99, s, 4, 0.05, 0.1), Err(Error::IndexOutOfRange { .. })));
    assert!(derivative_terms(&traj, 1, s, 3, 0.05, 0.1).is_err());
}

#[test]
fn derivative_identity_on_gaussian_draws() {
    let s = SobolevIndex(0.8);
    let spec = FlowSpec::truncated(Variant::TruncatedEmbedded, 8, 1e-4);
    for k in 0..3 {
        let traj = evolve(&spec, &draw(8, 0.8, k), 0.0, 2e-3).unwrap();
        for idx in [0usize, 7, 20] {
            let d = derivative_terms(&traj, idx, s, 8, 0.05, 0.1).unwrap();
            let err = (d.sum - d.fd_derivative).abs();
            assert!(err <= 1e-5 * (1.0 + d.fd_derivative.abs()), "draw {k} index {idx}: {err}");
            assert_eq!(d.sum, d.n1 + d.r1 + d.n2 + d.r2 + d.n3 + d.r3);
        }
    }
}

#[test]
fn focusing_terms_flip_sign() {
    let s = SobolevIndex(1.0);
    let eval = EnergyEvaluator::new(5, s).unwrap();
    let v = draw(5, 1.0, 2);
    let a = eval.terms(&v, 0.1, 1.0);
    let b = eval.terms(&v, 0.1, -1.0);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(*x, -*y);
    }
}

#[test]
fn correction_constant_is_stable_across_grids() {
    let s = SobolevIndex(1.5);
    let fit = |grid: usize| {
        (0..8).map(|k| correction_constant(&draw(grid, 1.5, k), 0.0, s).unwrap()).fold(0.0, f64::max)
    };
    let (c16, c32) = (fit(16), fit(32));
    assert!(c16 > 0.0 && c32 > 0.0);
    assert!(c32 / c16 <= 2.0 && c16 / c32 <= 2.0, "{c16} {c32}");
}

#[test]
fn scan_handles_empty_and_small_ensembles() {
    let empty = energy_bound_scan(&EnergyScanConfig { ensemble: 0, ..Default::default() }).unwrap();
    assert!(empty.flags.is_empty() && empty.get("draws") == Some(0.0));
    let cfg = EnergyScanConfig { ensemble: 4, n_list: vec![4, 8], t_end: 2e-3, samples: 3, ..Default::default() };
    let r = energy_bound_scan(&cfg).unwrap();
    assert!(r.flags["p99_finite_n4"] && r.flags["p99_finite_n8"]);
    assert_eq!(r.series["ratio_max"].len(), 2);
    let again = energy_bound_scan(&cfg).unwrap();
    assert_eq!(r.without_timing(), again.without_timing());
}

#[test]
fn single_mode_ratio_is_zero() {
    let eval = EnergyEvaluator::new(4, SobolevIndex(0.8)).unwrap();
    let v = SpectralField::from_modes(4, &[(1, Complex64::new(1.0, 0.0))]).unwrap();
    let sum: f64 = eval.terms(&v, 0.0, 1.0).iter().sum();
    let bound = eval.bound_rhs(&v, 0.05, 0.1);
    assert!(bound > 0.0);
    assert_eq!(ratio(sum.abs(), bound), 0.0);
}
