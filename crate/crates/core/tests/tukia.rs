use nalgebra::DMatrix;
use proptest::prelude::*;
use solvrigid::fixtures;
use solvrigid::mapalg::expr::{constant, project, sum};
use solvrigid::mapalg::group::{Generator, Letter};
use solvrigid::mapalg::BlockMap;
use solvrigid::tukia::*;
use solvrigid::{BlockPoint, PointMap, SpectralData};

fn spec11() -> SpectralData {
    SpectralData::simple(&[1.0, 2.0]).unwrap()
}

fn translation_sample(word_len: usize) -> GroupSample {
    let s = spec11();
    let t = |c: f64| BlockMap::new(s.clone(), vec![sum(vec![project(0), constant(vec![c])]), sum(vec![project(1), constant(vec![c])])]).unwrap();
    GroupSample::new(s.clone(), vec![Generator::new(t(1.0), t(-1.0), 1.0).unwrap()], word_len, 1.0).unwrap()
}

/// `1.5 / h'(h^{-1}(x))`, the closed-form measure of the piecewise sample.
fn mu_closed_form(x: f64) -> f64 {
    let u = 0.8 * x + {
        let r = x.rem_euclid(2.5);
        if r < 1.5 { -0.2 * r / 1.5 } else { -0.2 * (2.5 - r) }
    };
    let hp = if u.rem_euclid(2.0) < 1.0 { 1.5 } else { 1.0 };
    1.5 / hp
}

fn pt(x: f64) -> BlockPoint {
    BlockPoint::scalars(&[x, 0.0])
}

#[test]
fn similarity_sample_has_unit_measure() {
    let s = translation_sample(6);
    for x in [-3.3, 0.1, 7.9] {
        assert!((sup_derivative_1d(&s, &pt(x), 1e-6).unwrap() - 1.0).abs() < 1e-8);
    }
}

#[test]
fn piecewise_measure_matches_closed_form() {
    let s = fixtures::piecewise_1d(12).unwrap();
    for k in 0..40 {
        let x = -9.87 + 0.4931 * k as f64;
        let mu = sup_derivative_1d(&s, &pt(x), 1e-7).unwrap();
        assert!((mu - mu_closed_form(x)).abs() < 1e-6, "x={x}: {mu} vs {}", mu_closed_form(x));
    }
}

#[test]
fn measure_is_monotone_in_word_length() {
    let mut prev = vec![0.0; 10];
    for len in [0, 1, 2, 4, 8] {
        let s = fixtures::piecewise_1d(len).unwrap();
        for (k, p) in prev.iter_mut().enumerate() {
            let mu = sup_derivative_1d(&s, &pt(-4.1 + 0.87 * k as f64), 1e-7).unwrap();
            assert!(mu >= *p - 1e-12);
            *p = mu;
        }
    }
}

#[test]
fn transformation_law_holds() {
    let s = fixtures::piecewise_1d(12).unwrap();
    let probes: Vec<BlockPoint> = (0..30).map(|k| pt(-5.03 + 0.3371 * k as f64)).collect();
    for (_, d) in transformation_law_defects(&s, &probes, 1e-7) {
        assert!(d < 1e-6, "{d}");
    }
}

#[test]
fn constant_measure_gives_scaling() {
    let xs: Vec<f64> = (0..=20).map(|k| -1.0 + 0.1 * k as f64).collect();
    let n = xs.len();
    let field = ScalarField1d { xs, ys: vec![BlockPoint::scalars(&[0.0])], plus: vec![2.5; n], minus: vec![2.5; n], flagged: vec![], words: 1 };
    let c = conjugator_1d(&spec11(), &field).unwrap();
    for x in [-0.73, 0.0, 0.41] {
        assert!((c.map.apply(&pt(x)).blocks[0][0] - 2.5 * x).abs() < 1e-12);
    }
}

#[test]
fn nonpositive_measure_rejected() {
    let xs = vec![-1.0, 0.0, 1.0];
    let field = ScalarField1d { xs, ys: vec![BlockPoint::scalars(&[0.0])], plus: vec![1.0, 0.0, 1.0], minus: vec![1.0; 3], flagged: vec![], words: 1 };
    assert!(conjugator_1d(&spec11(), &field).is_err());
}

fn probes_in_box(n: usize) -> Vec<BlockPoint> {
    (0..n).map(|k| pt(-10.0 + 20.0 * ((k as f64 * 0.618_033_988_75) % 1.0))).collect()
}

#[test]
fn pipeline_on_piecewise_sample() {
    let s = fixtures::piecewise_1d(12).unwrap();
    let grid = MeasureGrid { x: LineGrid { lo: -30.0, hi: 30.0, step: 1e-3 }, ys: vec![], offset: 1e-3 };
    let field = sup_measure_1d(&s, &grid).unwrap();
    assert!(field.flagged.is_empty());
    assert!((field.max() - 1.5).abs() < 1e-5 && (field.min() - 1.0).abs() < 1e-5, "{} {}", field.max(), field.min());
    let conj = conjugator_1d(&s.spec, &field).unwrap();
    let rep = verify_conjugation(&s, &conj.map, &probes_in_box(60), 1e-3).unwrap();
    assert!(rep.pass, "max after {}", rep.max_after);
    assert!(rep.max_before > 0.3);
    let exact = fixtures::piecewise_1d_exact_conjugator().unwrap();
    for p in probes_in_box(20) {
        let a = conj.map.apply(&p).blocks[0][0];
        let b = exact.apply(&p).blocks[0][0];
        assert!((a - b).abs() < 1e-4, "{a} vs {b}");
    }
}

#[test]
fn wrong_conjugator_fails() {
    let s = fixtures::piecewise_1d(4).unwrap();
    let id = BlockMap::identity(&s.spec);
    let rep = verify_conjugation(&s, &id, &probes_in_box(60), 1e-3).unwrap();
    assert!(!rep.pass);
    assert!(rep.max_before > 0.3 && rep.max_before < 2.0 * 1.5f64.ln() + 1e-6);
}

#[test]
fn identity_on_similarities_passes() {
    let s = translation_sample(5);
    let rep = verify_conjugation(&s, &BlockMap::identity(&s.spec), &probes_in_box(20), 1e-9).unwrap();
    assert!(rep.pass && rep.max_after < 1e-9);
}

#[test]
fn normalize_stretch_fixture() {
    let amp = 0.3;
    let s = fixtures::oscillating_stretch(amp, 4).unwrap();
    let ys: Vec<BlockPoint> = (0..=64).map(|k| BlockPoint::scalars(&[-2.0 + k as f64 / 16.0])).collect();
    let xs = vec![vec![0.0], vec![1.3], vec![-2.1]];
    let out = normalize_stretch(&s, &ys, &xs).unwrap();
    for (y, m) in ys.iter().zip(&out.mu) {
        assert!((m - fixtures::oscillating_stretch_mu(amp, y.blocks[0][0])).abs() < 1e-9);
    }
    assert!(out.cocycle_defect < 1e-6, "{}", out.cocycle_defect);
    assert!(out.stretch_error < 1e-6, "{}", out.stretch_error);
}

#[test]
fn normalize_stretch_trivial_and_nonaffine() {
    let s = translation_sample(3);
    let ys: Vec<BlockPoint> = (0..5).map(|k| BlockPoint::scalars(&[k as f64])).collect();
    let out = normalize_stretch(&s, &ys, &[vec![0.0], vec![1.0]]).unwrap();
    assert!(out.mu.iter().all(|&m| (m - 1.0).abs() < 1e-9));
    let p = fixtures::piecewise_1d(2).unwrap();
    let err = normalize_stretch(&p, &ys, &[vec![0.1], vec![2.0], vec![3.7]]).unwrap_err();
    assert!(err.to_string().contains("one-dimensional"));
}

fn box_probes(n: usize) -> Vec<BlockPoint> {
    (0..n)
        .map(|k| {
            let f = |s: f64| 2.0 * ((k as f64 * s) % 1.0) - 1.0;
            BlockPoint::new(vec![vec![f(0.618), f(0.414)], vec![f(0.732)]])
        })
        .collect()
}

fn escape(n: usize) -> Vec<Vec<Letter>> {
    (1..=n).map(|i| vec![Letter { gen: 0, inv: false }; i]).collect()
}

#[test]
fn pure_dilations_give_identity() {
    let s = fixtures::dilation_sample(2).unwrap();
    let rep = radial_conjugator(&s, &escape(6), &DMatrix::identity(2, 2), &box_probes(10)).unwrap();
    for (i, st) in rep.steps.iter().enumerate() {
        assert!((st.t - 2f64.powi(i as i32 + 1)).abs() < 1e-12);
        assert!(st.cauchy < 1e-12 && st.defect < 1e-6);
    }
}

#[test]
fn radial_sequence_converges() {
    let s = fixtures::radial_sample(0.8, 2).unwrap();
    let rep = radial_conjugator(&s, &escape(14), &DMatrix::identity(2, 2), &box_probes(10)).unwrap();
    let last = rep.steps.last().unwrap();
    assert!(last.cauchy < 1e-4, "{}", last.cauchy);
    for w in rep.steps[1..].windows(2) {
        assert!(w[1].cauchy <= w[0].cauchy * 0.6);
        assert!(w[1].defect <= w[0].defect + 1e-6);
    }
    assert!(last.defect < 1e-3);
}

#[test]
fn radial_needs_escaping_words() {
    let s = fixtures::radial_sample(0.8, 2).unwrap();
    let back = vec![vec![Letter { gen: 0, inv: false }; 2], vec![Letter { gen: 0, inv: false }]];
    assert!(radial_conjugator(&s, &back, &DMatrix::identity(2, 2), &box_probes(4)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn nu_similarity_law(a in -8.0..8.0f64, b in -8.0..8.0f64) {
        prop_assume!((a - b).abs() > 0.05);
        let s = fixtures::piecewise_1d(2).unwrap();
        let f = fixtures::piecewise_1d_exact_conjugator().unwrap();
        let d = nu_similarity_defect(&s, &f, &[(pt(a), pt(b))]);
        prop_assert!(d < 1e-9);
    }
}
