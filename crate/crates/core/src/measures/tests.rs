use super::stats::{mean_se, ratio_estimate};
use super::*;
use crate::spectral::{SobolevIndex, SpectralField};
use num_complex::Complex64;

#[test]
fn sampler_empty_and_reproducible() {
    let spec = GaussianSpec::new(1.0, 4, 3);
    assert!(sample(&spec, 0).unwrap().is_empty());
    let a = sample(&spec, 50).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| sample(&spec, 50).unwrap());
    assert_eq!(a.draws, b.draws);
    assert_eq!(a.draws[7], gaussian_field(1.0, 4, 3, 7, 0));
    assert_ne!(sample(&spec.with_seed(4), 1).unwrap().draws[0], a.draws[0]);
}

#[test]
fn sampler_rejects_low_s_unless_allowed() {
    assert!(sample(&GaussianSpec::new(0.5, 4, 0), 1).is_err());
    assert!(sample(&GaussianSpec::new(0.5, 4, 0).allowing_low_s(), 1).is_ok());
    assert!(sample(&GaussianSpec::new(1.0, 4, 0).with_radius(-1.0), 1).is_err());
}

#[test]
fn sampler_mean_norm_at_cutoff_one() {
    let count = 20_000;
    let ens = sample(&GaussianSpec::new(1.0, 1, 11), count).unwrap();
    assert_eq!(expected_norm_sq(1.0, 1), 4.0);
    let x: Vec<f64> = ens.draws.iter().map(|v| v.norm_sq()).collect();
    // Var |v_n|² = 4⟨n⟩^{-4s}.
    let var: f64 = [1.0, 0.25, 0.25].iter().map(|w| 4.0 * w).sum();
    let m = mean_se(&x);
    assert!((m.estimate - 4.0).abs() <= 4.0 * (var / count as f64).sqrt(), "{m:?}");
}

#[test]
fn sampler_unit_variance_real_part() {
    let count = 10_000;
    let ens = sample(&GaussianSpec::new(1.0, 0, 5), count).unwrap();
    let x: Vec<f64> = ens.draws.iter().map(|v| v.get(0).re.powi(2)).collect();
    // E ξ² = 1, Var ξ² = 2.
    let m = mean_se(&x);
    assert!((m.estimate - 1.0).abs() <= 4.0 * (2.0 / count as f64).sqrt());
}

#[test]
fn rejection_sampling_respects_radius() {
    let spec = GaussianSpec::new(1.0, 16, 2).with_radius(2.0);
    let ens = sample(&spec, 200).unwrap();
    assert!(ens.draws.iter().all(|v| v.l2_norm() <= 2.0));
    assert!(ens.rejections() > 0 && ens.acceptance_rate() > 0.05);
    let tiny = GaussianSpec::new(1.0, 16, 2).with_radius(0.05);
    assert!(matches!(sample(&tiny, 2), Err(crate::Error::LowAcceptance { .. })));
}

#[test]
fn weights_trivial_cases() {
    let s = SobolevIndex(1.0);
    let v = gaussian_field(1.0, 8, 1, 0, 0);
    let far = weight(&v.scaled(Complex64::new(100.0, 0.0)), 4, 2.0, 0.1, s).unwrap();
    assert_eq!((far.f_n_r_t, far.f_r_t, far.indicator), (0.0, 0.0, false));
    let single = SpectralField::from_modes(8, &[(3, Complex64::new(0.5, 0.5))]).unwrap();
    let w = weight(&single, 4, 2.0, 0.1, s).unwrap();
    assert_eq!((w.f_n_r_t, w.f_r_t, w.indicator), (1.0, 1.0, true));
    let small = v.scaled(Complex64::new(0.3, 0.0));
    let w = weight(&small, 8, 10.0, 0.1, s).unwrap();
    assert_eq!(w.f_n_r_t, w.f_r_t);
    let w = weight(&small, 2, 10.0, 0.1, s).unwrap();
    assert!(w.f_n_r_t > 0.0 && w.f_n_r_t.is_finite() && w.f_r_t > 0.0);
    let expected = (-0.5 * crate::energy::correction(&small.project_low(2).regrid(2), 0.1, s).unwrap()).exp();
    assert!((w.f_n_r_t - expected).abs() <= 1e-14 * expected);
}

#[test]
fn ratio_estimator_oracle() {
    let a = [1.0, 0.0, 2.0, 1.0];
    let b = [1.0, 1.0, 2.0, 1.0];
    let e = ratio_estimate(&a, &b);
    assert_eq!(e.estimate, 0.8);
    assert!(e.std_error > 0.0);
    assert_eq!(ratio_estimate(&[0.0; 3], &[0.0; 3]).estimate, 0.0);
}

#[test]
fn invariance_identity_and_exact_modulus() {
    let spec = GaussianSpec::new(1.0, 8, 0);
    for transform in [Transform::FreeFlow(0.0), Transform::Gauge(0.0), Transform::Rotation(0.0)] {
        let r = invariance_test(&InvarianceConfig::new(transform, spec, 500)).unwrap();
        assert_eq!(r.get("z_max_abs"), Some(0.0));
        assert!(r.all_pass());
    }
    for transform in [Transform::FreeFlow(0.7), Transform::Gauge(1.0), Transform::Rotation(2.1)] {
        let r = invariance_test(&InvarianceConfig::new(transform, spec, 500)).unwrap();
        assert!(r.flags["modulus_exact"], "{transform}");
    }
    let empty = invariance_test(&InvarianceConfig::new(Transform::Gauge(1.0), spec, 0)).unwrap();
    assert!(empty.notes.contains_key("empty"));
}

#[test]
fn invariance_meta_test_counts_passes() {
    let cfg = InvarianceConfig::new(Transform::Gauge(0.5), GaussianSpec::new(1.0, 4, 10), 2000);
    let r = invariance_meta_test(&cfg, 5, 4).unwrap();
    assert!(r.all_pass(), "{:?}", r.scalars);
    assert_eq!(r.series["z_max_abs"].len(), 5);
    assert_eq!(default_pairs(8).len(), 10);
    assert_eq!(default_pairs(1), vec![(0, 1), (1, -1), (-1, 0)]);
}

#[test]
fn invariance_gauge_statistical() {
    let spec = GaussianSpec::new(1.0, 8, 42);
    let r = invariance_test(&InvarianceConfig::new(Transform::Gauge(1.0), spec, 10_000)).unwrap();
    assert!(r.all_pass(), "{:?}", r.failures());
    let r = invariance_test(&InvarianceConfig::new(Transform::FreeFlow(0.3), spec, 10_000)).unwrap();
    assert!(r.all_pass(), "{:?}", r.failures());
}

#[test]
fn transform_and_event_parsing_round_trip() {
    for t in [Transform::FreeFlow(0.5), Transform::Gauge(1.0), Transform::Rotation(-0.25)] {
        assert_eq!(t.to_string().parse::<Transform>().unwrap(), t);
    }
    let mut events = EventSpec::smoke();
    events.extend([EventSpec::Everything, EventSpec::Empty]);
    for e in events {
        assert_eq!(e.to_string().parse::<EventSpec>().unwrap(), e);
    }
    assert!("box:n=1".parse::<EventSpec>().is_err());
    assert!("cube:n=1".parse::<EventSpec>().is_err());
    assert!("warp:1".parse::<Transform>().is_err());
}

#[test]
fn events_evaluate_on_coordinates() {
    let v = SpectralField::from_modes(2, &[(0, Complex64::new(0.3, -0.4)), (1, Complex64::new(0.6, 0.0))]).unwrap();
    assert!(EventSpec::Everything.contains(&v) && !EventSpec::Empty.contains(&v));
    assert!(!"box:n=1,lo=-0.5,hi=0.5".parse::<EventSpec>().unwrap().contains(&v));
    assert!("ball:n=0,radius=0.5".parse::<EventSpec>().unwrap().contains(&v));
    assert!(!"ball:n=0,radius=0.49".parse::<EventSpec>().unwrap().contains(&v));
    assert!("halfspace:n=0,re=0,im=-1,offset=0.4".parse::<EventSpec>().unwrap().contains(&v));
}

#[test]
fn liouville_at_time_zero_is_exact() {
    let u0 = gaussian_field(1.0, 1, 9, 0, 0);
    let r = liouville_check(1, 0.0, &u0, 1e-4).unwrap();
    assert_eq!(r.get("det"), Some(1.0));
    assert!(r.all_pass());
    assert!(r.get("divergence_at_u0").unwrap().abs() < 1e-12);
}

#[test]
fn liouville_small_system() {
    let u0 = gaussian_field(1.0, 1, 9, 1, 0);
    let r = liouville_check(1, 0.5, &u0, 1e-4).unwrap();
    assert!(r.all_pass(), "{:?}", r.scalars);
    let wide = gaussian_field(1.0, 3, 9, 1, 0);
    assert!(liouville_check(1, 0.5, &wide, 1e-4).is_err());
}

#[test]
fn divergence_vanishes_on_random_points() {
    for k in 0..3 {
        let v = gaussian_field(0.8, 4, 2, k, 0);
        let d = divergence(&v, 0.37 * k as f64, 4, crate::spectral::Sign::Focusing);
        assert!(d.abs() < 1e-12, "{d}");
    }
}

fn small_transport() -> TransportConfig {
    TransportConfig { n: 2, cutoff: 6, count: 2000, t: 0.05, dt: 5e-4, ..Default::default() }
}

#[test]
fn cov_trivial_events() {
    let cfg = small_transport();
    let all = change_of_variable_test(&cfg, &EventSpec::Everything).unwrap();
    assert_eq!(all.get("lhs"), Some(1.0));
    assert!(all.all_pass());
    let none = change_of_variable_test(&cfg, &EventSpec::Empty).unwrap();
    assert_eq!((none.get("lhs"), none.get("rhs"), none.get("z")), (Some(0.0), Some(0.0), Some(0.0)));
    let zero_r = TransportConfig { r: 0.0, ..cfg };
    assert!(matches!(change_of_variable_test(&zero_r, &EventSpec::Everything), Err(crate::Error::ZeroEffectiveSampleSize(_))));
}

#[test]
fn cov_small_events_agree() {
    let cfg = small_transport();
    for e in EventSpec::smoke() {
        let r = change_of_variable_test(&cfg, &e).unwrap();
        assert!(r.all_pass(), "{e}: {:?}", r.scalars);
    }
}

#[test]
fn lp_convergence_trivial_cases() {
    let cfg = TransportConfig { cutoff: 6, count: 500, ..Default::default() };
    let r = lp_weight_convergence(&cfg, &[2.0], &[6, 8]).unwrap();
    assert_eq!(r.get("lp_p2_n6"), Some(0.0));
    assert_eq!(r.get("lp_p2_n8"), Some(0.0));
    let tiny = TransportConfig { r: 1e-6, ..cfg };
    let r = lp_weight_convergence(&tiny, &[1.0, 2.0], &[1, 2]).unwrap();
    assert_eq!(r.get("lp_p2_n1"), Some(0.0));
    assert!(lp_weight_convergence(&cfg, &[0.5], &[2]).is_err());
}

#[test]
fn lp_convergence_small_run_decreases() {
    let cfg = TransportConfig { cutoff: 8, count: 2000, ..Default::default() };
    let r = lp_weight_convergence(&cfg, &[2.0], &[2, 4, 8]).unwrap();
    assert!(r.all_pass(), "{:?}", r.scalars);
    assert_eq!(r.get("lp_p2_n8"), Some(0.0));
}

#[test]
fn growth_at_time_zero_has_unit_exponent() {
    let cfg = TransportConfig { t: 0.0, cutoff: 6, count: 3000, ..Default::default() };
    let r = measure_growth_experiment(&cfg, &[1.0, 0.7, 0.5]).unwrap();
    assert!((r.get("exponent").unwrap() - 1.0).abs() < 1e-12);
    let a = &r.series["rho_a"];
    let b = &r.series["rho_psi_a"];
    assert_eq!(a, b);
    let full = measure_growth_experiment(&cfg, &[1e9]).unwrap();
    assert_eq!(full.series["rho_a"][0].y, 1.0);
    assert_eq!(full.series["rho_psi_a"][0].y, 1.0);
}

#[test]
fn chi_square_tail_oracle() {
    // χ²₂ is exponential with mean 2.
    assert!((chi_square_even_tail(1, 3.0) - (-1.5f64).exp()).abs() < 1e-15);
    assert_eq!(chi_square_even_tail(5, 0.0), 1.0);
    // P[χ²₄ ≥ x] = e^{-x/2}(1 + x/2).
    assert!((chi_square_even_tail(2, 4.0) - 3.0 * (-2.0f64).exp()).abs() < 1e-15);
}

#[test]
fn tail_sanity_small_run() {
    let r = tail_sanity(0, 4, &[0.0, 2.0, 3.0, 4.0, 5.0, 6.0], 20_000);
    assert_eq!(r.series["tail"][0].y, 1.0);
    assert!(r.all_pass(), "{:?} {:?}", r.failures(), r.scalars);
    assert!(r.get("fitted_c").unwrap() > 0.0);
}
