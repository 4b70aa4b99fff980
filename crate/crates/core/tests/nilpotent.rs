use proptest::prelude::*;
use solvrigid::error::Error;
use solvrigid::fixtures::{self, conjugated_translation};
use solvrigid::mapalg::expr::{constant, coord, sin};
use solvrigid::mapalg::AlmostTranslation;
use solvrigid::nilpotent::*;
use solvrigid::sampling::{rng, uniform_point};
use solvrigid::{BlockPoint, PointMap, SpectralData};

fn sample_points(spec: &SpectralData, n: usize, seed: u64) -> Vec<BlockPoint> {
    let mut r = rng(seed);
    (0..n).map(|_| uniform_point(spec, &mut r, 10.0)).collect()
}

#[test]
fn one_level_root() {
    let f = fixtures::root_one_level().unwrap();
    let cert = approx_lth_root(&f.generators, &f.gamma_p, f.l, 8).unwrap();
    assert!(cert.checks.all(), "{:?}", cert.checks);
    assert_eq!(cert.exponents, vec![1]);
    assert_eq!(cert.eta_label, "g1^2");
    assert_eq!(cert.power_label, "g1");
    assert_eq!(cert.levels[0].coefficients, vec!["5".to_string()]);
    let p = BlockPoint::scalars(&[0.3]);
    assert!((cert.gamma_prime.apply(&p).blocks[0][0] - 0.8).abs() < 1e-15);
    let bound = displacement_bound(&cert.gamma_prime, &f.generators).unwrap();
    assert_eq!(bound.total, 1.0);
    let pts = sample_points(f.gamma_p.spec(), 100, 1);
    assert!((sampled_displacement(&cert.gamma_prime, &pts) - 0.5).abs() < 1e-12);
}

#[test]
fn two_level_root() {
    let f = fixtures::root_two_level().unwrap();
    let cert = approx_lth_root(&f.generators, &f.gamma_p, f.l, 8).unwrap();
    assert!(cert.checks.all(), "{:?}", cert.checks);
    assert_eq!(cert.exponents, vec![1, 1]);
    assert_eq!(cert.levels[0].level, 2);
    assert_eq!(cert.levels[0].coefficients, vec!["1".to_string()]);
    assert_eq!(cert.levels[1].coefficients, vec!["3".to_string()]);
    assert_eq!(cert.eta_label, "g1");
    // γ' = Φ T(1/2, 1/2) Φ^{-1}
    let expected = conjugated_translation(0.5, 0.5).unwrap();
    for p in sample_points(expected.spec(), 200, 2) {
        let a = cert.gamma_prime.apply(&p).flat();
        let b = expected.apply(&p).flat();
        assert!(a.iter().zip(&b).all(|(u, v)| (u - v).abs() < 1e-12));
    }
    let bound = displacement_bound(&cert.gamma_prime, &f.generators).unwrap();
    let pts = sample_points(expected.spec(), 2000, 3);
    assert!(sampled_displacement(&cert.gamma_prime, &pts) <= bound.total);
}

#[test]
fn exact_power_has_zero_remainders() {
    let g = fixtures::unit_translation().unwrap();
    let gp = g.power(6);
    let cert = approx_lth_root(&[g], &gp, 3, 4).unwrap();
    assert!(cert.checks.all());
    assert_eq!(cert.exponents, vec![0]);
    assert_eq!(cert.power_label, "id");
}

#[test]
fn outside_span_is_reported() {
    let sp = SpectralData::simple(&[1.0, 2.0]).unwrap();
    let g = AlmostTranslation::translation(&sp, &BlockPoint::scalars(&[1.0, 0.0])).unwrap();
    let gp = AlmostTranslation::translation(&sp, &BlockPoint::scalars(&[0.0, 1.0])).unwrap();
    assert!(matches!(approx_lth_root(&[g], &gp, 2, 4), Err(Error::InfiniteIndexSuspected(_))));
}

#[test]
fn tau_projection() {
    let sp = SpectralData::simple(&[1.0, 2.0]).unwrap();
    assert_eq!(tau_project(&AlmostTranslation::identity(&sp), 2).unwrap(), vec![0.0]);
    let g = AlmostTranslation::translation(&sp, &BlockPoint::scalars(&[0.0, 3.0])).unwrap();
    assert_eq!(tau_project(&g, 2).unwrap(), vec![3.0]);
    let s = fixtures::sine_kernel().unwrap();
    assert!(matches!(tau_project(&s, 1), Err(Error::NotInKernel { level: 1, block: 2 })));
    assert!(matches!(tau_project(&s, 2), Ok(v) if v == vec![1.0]));
}

#[test]
fn epsilon_formula() {
    let sp = SpectralData::simple(&[1.0, 2.0]).unwrap();
    let g = AlmostTranslation::new(sp, vec![constant(vec![0.0]), constant(vec![4.0])], 1.0).unwrap();
    assert_eq!(epsilon_bounds(&g).unwrap(), vec![4.0, 0.0]);
}

#[test]
fn epsilon_dominates_sine_oscillation() {
    let g = fixtures::sine_kernel().unwrap();
    let pts = sample_points(g.spec(), 10_000, 4);
    let osc = sampled_oscillation(&g, 0, &pts);
    assert!(osc > 1.99 && osc <= 2.0);
    assert!(osc <= epsilon_bounds(&g).unwrap()[0]);
}

#[test]
fn epsilon_vacuous_case() {
    let g = conjugated_translation(1.0, 0.0).unwrap();
    let pts = sample_points(g.spec(), 1000, 5);
    assert_eq!(epsilon_bounds(&g).unwrap()[0], 0.0);
    assert_eq!(sampled_oscillation(&g, 0, &pts), 0.0);
}

#[test]
fn shuffle_identities_on_lattice() {
    let g = conjugated_translation(0.5, 1.5).unwrap();
    let k = conjugated_translation(2.0, 0.0).unwrap();
    let e = conjugated_translation(0.0, 0.0).unwrap();
    let rep = shuffle_check(&g, &k, &e, 1, 6).unwrap();
    assert!(rep.above && rep.at_level);
    let sp = SpectralData::simple(&[1.0, 2.0]).unwrap();
    let g2 = AlmostTranslation::new(sp.clone(), vec![coord(1, 0), constant(vec![0.5])], 1.0).unwrap();
    let k2 = AlmostTranslation::translation(&sp, &BlockPoint::scalars(&[3.0, 0.0])).unwrap();
    let rep = shuffle_check(&g2, &k2, &k2, 1, 6).unwrap();
    assert!(rep.above && rep.at_level);
}

#[test]
fn orbit_growth_counts() {
    let g = fixtures::unit_translation().unwrap();
    let x0 = BlockPoint::scalars(&[0.0]);
    let c = orbit_growth(&[g.clone()], &x0, &[0.0, 1.0, 3.0], 10).unwrap();
    assert_eq!(c.iter().map(|c| c.count).collect::<Vec<_>>(), vec![1, 3, 7]);
    assert!(c.iter().all(|c| !c.saturated));
    let c = orbit_growth(&[g], &x0, &[3.0], 2).unwrap();
    assert_eq!(c[0].count, 5);
    assert!(c[0].saturated);
    let csv = orbit_growth_csv(&c);
    assert!(csv.starts_with("k,count,saturated\n3,5,true"));
}

#[test]
fn orbit_growth_empty_generators() {
    assert_eq!(orbit_growth(&[], &BlockPoint::scalars(&[0.0]), &[1.0], 3).unwrap()[0].count, 1);
}

#[test]
fn lattice_orbit_growth_is_monotone() {
    let f = fixtures::root_two_level().unwrap();
    let x0 = BlockPoint::scalars(&[0.0, 0.0]);
    let ks = [0.5, 1.0, 2.0, 3.0];
    let c = orbit_growth(&f.generators, &x0, &ks, 8).unwrap();
    assert!(c.windows(2).all(|w| w[0].count <= w[1].count));
}

fn level_two_element(v1: f64, v2: f64, a: f64) -> AlmostTranslation {
    let sp = SpectralData::simple(&[1.0, 2.0]).unwrap();
    let b1 = solvrigid::mapalg::expr::sum(vec![constant(vec![v1]), solvrigid::mapalg::expr::scale(a, sin(coord(1, 0)))]);
    AlmostTranslation::new(sp, vec![b1, constant(vec![v2])], 1.0 + 2.0 * a.abs()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tau_is_additive_on_top_level(a in -5.0..5.0f64, b in -5.0..5.0f64, u in -2.0..2.0f64, w in -2.0..2.0f64) {
        let g = level_two_element(u, a, 0.7);
        let h = level_two_element(w, b, -0.3);
        let gh = g.compose(&h).unwrap();
        let lhs = tau_project(&gh, 2).unwrap()[0];
        prop_assert!((lhs - (a + b)).abs() < 1e-12);
    }

    #[test]
    fn estimation_inequalities(v1 in -3.0..3.0f64, v2 in -2.0..2.0f64, w1 in -3.0..3.0f64, w2 in -2.0..2.0f64, l in 1u32..5) {
        let g = conjugated_translation(v1, v2).unwrap();
        let e = conjugated_translation(w1, w2).unwrap();
        let pts = sample_points(g.spec(), 400, 9);
        let rep = estimation_check(&g, &e, l, &pts).unwrap();
        prop_assert!(rep.pass, "{:?}", rep);
    }

    #[test]
    fn roots_verify_on_random_rational_inputs(n1 in -12i64..12, n2 in -12i64..12, l in 1u32..5) {
        let f = fixtures::root_two_level().unwrap();
        let gp = conjugated_translation(n1 as f64 / 4.0, n2 as f64 / l as f64).unwrap();
        match approx_lth_root(&f.generators, &gp, l, 6) {
            Ok(cert) => {
                prop_assert!(cert.checks.all());
                prop_assert!(cert.exponents.iter().all(|&c| (0..l as i64).contains(&c)));
            }
            Err(Error::InfiniteIndexSuspected(_)) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn epsilon_dominates_lattice_oscillation(v1 in -3.0..3.0f64, v2 in -3.0..3.0f64) {
        let g = conjugated_translation(v1, v2).unwrap();
        let pts = sample_points(g.spec(), 500, 11);
        prop_assert!(sampled_oscillation(&g, 0, &pts) <= epsilon_bounds(&g).unwrap()[0]);
    }
}
