use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use solvrigid::error::Error;
use solvrigid::fixtures;
use solvrigid::mapalg::diff::{conformal_scale, first_block_jacobian, similarity_defect};
use solvrigid::mapalg::expr::{constant, coord, periodic_pwl, project, sin, sum, FuncExpr};
use solvrigid::mapalg::*;
use solvrigid::sampling::{rng, uniform_pairs, uniform_point};
use solvrigid::solvgroup::{height_isometry_pair, SolvSpec};
use solvrigid::{BlockPoint, PointMap, SpectralData};

fn s12() -> SpectralData {
    SpectralData::simple(&[1.0, 2.0]).unwrap()
}

fn tent_perturbation(s: &SpectralData) -> BlockMap {
    let first = sum(vec![coord(0, 0), periodic_pwl(vec![0.0, 1.0, 2.0], vec![0.0, 0.5, 0.0], coord(0, 0))]);
    BlockMap::new(s.clone(), vec![first, project(1)]).unwrap()
}

fn sine_shift(s: &SpectralData) -> AlmostTranslation {
    AlmostTranslation::new(s.clone(), vec![sin(coord(1, 0)), constant(vec![0.0])], 2.0).unwrap()
}

fn run_classify(f: &dyn PointMap, seed: u64) -> solvrigid::Result<Classification> {
    let s = s12();
    let mut r = rng(seed);
    let pairs = uniform_pairs(&s, &mut r, 4000, 4.0);
    let probes: Vec<BlockPoint> = (0..40).map(|_| uniform_point(&s, &mut r, 4.0)).collect();
    classify(&s, f, &pairs, &probes, &mut r)
}

#[test]
fn classify_similarity() {
    let s = s12();
    let f = SimMap::new(s.clone(), 2.0, vec![DMatrix::from_element(1, 1, -1.0), DMatrix::identity(1, 1)], vec![DVector::from_element(1, 0.3), DVector::from_element(1, -1.0)]).unwrap();
    let c = run_classify(&f, 1).unwrap();
    assert!(matches!(c.class, MapClass::Sim { stretch } if (stretch - 2.0).abs() < 1e-9), "{:?}", c.class);
    assert!(c.triangularity.pass);
}

#[test]
fn classify_almost_similarity() {
    let s = s12();
    let f = ASimMap::new(SimMap::dilation(&s, 2.0).unwrap(), sine_shift(&s)).unwrap();
    let c = run_classify(&f, 2).unwrap();
    assert!(matches!(c.class, MapClass::Asim { stretch } if (stretch - 2.0).abs() < 1e-6), "{:?}", c.class);
}

#[test]
fn classify_bilipschitz() {
    let s = s12();
    let c = run_classify(&tent_perturbation(&s), 3).unwrap();
    match c.class {
        MapClass::Bilip { k } => assert!(k > 1.5 && k <= 2.0 + 1e-9, "{k}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn classify_quasisimilarity() {
    let s = s12();
    let f = SimMap::dilation(&s, 4.0).unwrap().to_block_map().compose(&tent_perturbation(&s)).unwrap();
    let c = run_classify(&f, 4).unwrap();
    match c.class {
        MapClass::Qsim { n, k } => {
            assert!(n > 2.0 && n < 6.0 && k > 1.0 && k <= 3.0);
            assert!(c.constants.min_ratio >= 2.0 - 1e-9 && c.constants.max_ratio <= 6.0 + 1e-9);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn classify_rejects_non_triangular() {
    let swap = |p: &BlockPoint| BlockPoint::scalars(&[p.blocks[0][0], p.blocks[1][0] + p.blocks[0][0]]);
    match run_classify(&swap, 5) {
        Err(Error::NotTriangular { component, block }) => assert_eq!((component, block), (1, 0)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn block_map_rejects_lower_dependence() {
    let s = s12();
    assert!(BlockMap::new(s, vec![project(0), sum(vec![project(1), coord(0, 0)])]).is_err());
}

#[test]
fn sim_normal_form_round_trip() {
    let s = SpectralData::new(vec![1.0, 1.5], vec![2, 1]).unwrap();
    let rot = |a: f64| DMatrix::from_row_slice(2, 2, &[a.cos(), -a.sin(), a.sin(), a.cos()]);
    let f = SimMap::new(s.clone(), 1.7, vec![rot(0.4), DMatrix::identity(1, 1)], vec![DVector::from_vec(vec![1.0, -2.0]), DVector::from_element(1, 0.5)]).unwrap();
    let g = SimMap::new(s.clone(), 0.6, vec![rot(-1.1), DMatrix::from_element(1, 1, -1.0)], vec![DVector::from_vec(vec![0.0, 3.0]), DVector::from_element(1, 2.0)]).unwrap();
    let fg = f.compose(&g).unwrap();
    let mut r = rng(6);
    for _ in 0..100 {
        let p = uniform_point(&s, &mut r, 5.0);
        let a = fg.apply(&p).flat();
        let b = f.apply(&g.apply(&p)).flat();
        assert!(a.iter().zip(&b).all(|(u, v)| (u - v).abs() < 1e-9));
        let back = f.inverse().apply(&f.apply(&p)).flat();
        assert!(back.iter().zip(p.flat()).all(|(u, v)| (u - v).abs() < 1e-9));
        let bm = fg.to_block_map().apply(&p).flat();
        assert!(bm.iter().zip(&a).all(|(u, v)| (u - v).abs() < 1e-9));
    }
    assert!((fg.stretch() - 1.7 * 0.6).abs() < 1e-15);
    assert!(matches!(
        SimMap::new(s.clone(), 1.0, vec![DMatrix::from_element(2, 2, 1.0), DMatrix::identity(1, 1)], vec![DVector::zeros(2), DVector::zeros(1)]),
        Err(Error::NotOrthogonal(_))
    ));
    assert!(SimMap::dilation(&s, 0.0).is_err());
}

#[test]
fn asim_compose_and_inverse() {
    let s = s12();
    let f = ASimMap::new(SimMap::dilation(&s, 2.0).unwrap(), sine_shift(&s)).unwrap();
    let g = ASimMap::new(SimMap::translation(&s, &BlockPoint::scalars(&[0.5, 1.0])).unwrap(), sine_shift(&s).power(2)).unwrap();
    let fg = f.compose(&g).unwrap();
    let fi = f.inverse();
    let mut r = rng(7);
    for _ in 0..100 {
        let p = uniform_point(&s, &mut r, 5.0);
        let a = fg.apply(&p).flat();
        let b = f.apply(&g.apply(&p)).flat();
        assert!(a.iter().zip(&b).all(|(u, v)| (u - v).abs() < 1e-9));
        let back = fi.apply(&f.apply(&p)).flat();
        assert!(back.iter().zip(p.flat()).all(|(u, v)| (u - v).abs() < 1e-9));
    }
    assert_eq!(fg.stretch(), 2.0);
}

#[test]
fn almost_translation_algebra() {
    let g = fixtures::conjugated_translation(0.5, 1.0).unwrap();
    let id = g.compose(&g.inverse()).unwrap();
    let mut r = rng(8);
    for _ in 0..100 {
        let p = uniform_point(g.spec(), &mut r, 8.0);
        let q = id.apply(&p).flat();
        assert!(q.iter().zip(p.flat()).all(|(u, v)| (u - v).abs() < 1e-9));
        let g3 = g.power(3).apply(&p).flat();
        let ggg = g.apply(&g.apply(&g.apply(&p))).flat();
        assert!(g3.iter().zip(&ggg).all(|(u, v)| (u - v).abs() < 1e-9));
    }
    assert!(g.shift_sup(1).unwrap() == 1.0);
    let unbounded = AlmostTranslation::new(s12(), vec![coord(1, 0), constant(vec![0.0])], 1.0);
    assert!(matches!(unbounded.and_then(|u| u.shift_sup(0)), Err(Error::MissingCertificate(_))));
}

#[test]
fn stretch_homomorphism() {
    let s = s12();
    let d = |t: f64| BoundaryMap::Sim { map: SimMap::dilation(&s, t).unwrap() };
    let v = stretch_hom(&[d(1f64.exp()), d(2f64.exp())], &[vec![1.0], vec![2.0]]).unwrap();
    assert!((v[0] - 1.0).abs() < 1e-12);
    assert!(matches!(stretch_hom(&[d(1f64.exp()), d(3f64.exp())], &[vec![1.0], vec![2.0]]), Err(Error::NotInUniformSubgroup { .. })));
    assert!(stretch_hom(&[d(2.0)], &[]).is_err());
    let block = BoundaryMap::Block { map: BlockMap::identity(&s) };
    assert!(rotation_hom(&block).is_err());
    assert_eq!(rotation_hom(&d(2.0)).unwrap().len(), 2);
}

#[test]
fn reciprocity_of_height_isometries() {
    let spec = SolvSpec::new(s12(), SpectralData::simple(&[0.5]).unwrap()).unwrap();
    let pair = height_isometry_pair(&spec, 0.8).unwrap();
    let rep = check_reciprocity(&pair).unwrap();
    assert!(rep.pass && rep.log_product.abs() < 1e-12);
    assert!((height_hom(&pair).unwrap() - 0.8).abs() < 1e-12);
    let bad = BoundaryPair { lower: pair.lower.clone(), upper: BoundaryMap::Sim { map: SimMap::dilation(&spec.upper, 1.0).unwrap() } };
    let rep = check_reciprocity(&bad).unwrap();
    assert!(!rep.pass);
    for (k, v) in rep.drift.iter().enumerate() {
        assert!((v.ln() - 0.8 * (k + 1) as f64).abs() < 1e-9);
    }
}

#[test]
fn rotation_rigidity() {
    let mut r = rng(9);
    let c = fixtures::constant_rotation_fiber(0.7).unwrap();
    assert!(matches!(rotation_rigidity_witness(&c, 2.0, 5.0, 30, &mut r).unwrap(), RigidityVerdict::Pass { .. }));
    let g = fixtures::rotating_fiber().unwrap();
    match rotation_rigidity_witness(&g, 2.0, 5.0, 30, &mut r).unwrap() {
        RigidityVerdict::Witness { p, p_prime, ratio, .. } => {
            let d0 = solvrigid::quasimetric::distance(g.spec(), &p, &p_prime).unwrap();
            let d1 = solvrigid::quasimetric::distance(g.spec(), &g.apply(&p), &g.apply(&p_prime)).unwrap();
            assert!(ratio > 2.0 && (d1 / d0 - ratio).abs() < 1e-9 * ratio);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn similarity_defect_detects_shear() {
    let s = SpectralData::new(vec![1.0, 2.0], vec![2, 1]).unwrap();
    let rot = SimMap::new(s.clone(), 2.0, vec![DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]), DMatrix::identity(1, 1)], vec![DVector::zeros(2), DVector::zeros(1)]).unwrap();
    let p = BlockPoint::new(vec![vec![0.3, -0.4], vec![1.0]]);
    let j = first_block_jacobian(&rot, &p);
    assert!(similarity_defect(&[j.clone()]) < 1e-6);
    assert!((conformal_scale(&j) - 2.0).abs() < 1e-6);
    let shear = BlockMap::new(s.clone(), vec![FuncExpr::Linear { matrix: vec![vec![1.0, 1.0], vec![0.0, 1.0]], arg: Box::new(project(0)) }, project(1)]).unwrap();
    assert!(similarity_defect(&[first_block_jacobian(&shear, &p)]) > 0.5);
}

#[test]
fn expression_json_round_trip() {
    let e = sum(vec![coord(0, 0), periodic_pwl(vec![0.0, 1.0, 2.0], vec![0.0, 0.5, 0.0], sin(coord(1, 0)))]);
    let json = serde_json::to_string(&e).unwrap();
    let back: FuncExpr = serde_json::from_str(&json).unwrap();
    assert_eq!(e, back);
    assert!(serde_json::from_str::<FuncExpr>(r#"{"op":"sin","arg":{"op":"project","block":0},"extra":1}"#).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sim_group_laws(t in 0.1..10.0f64, a in -3.0..3.0f64, b in -3.0..3.0f64, x in -5.0..5.0f64, y in -5.0..5.0f64) {
        let s = s12();
        let f = SimMap::new(s.clone(), t, vec![DMatrix::identity(1, 1), DMatrix::from_element(1, 1, -1.0)], vec![DVector::from_element(1, a), DVector::from_element(1, b)]).unwrap();
        let p = BlockPoint::scalars(&[x, y]);
        let q = f.compose(&f.inverse()).unwrap().apply(&p);
        prop_assert!((q.blocks[0][0] - x).abs() < 1e-9 && (q.blocks[1][0] - y).abs() < 1e-9);
        let d0 = solvrigid::quasimetric::distance(&s, &p, &BlockPoint::scalars(&[0.0, 0.0])).unwrap();
        prop_assume!(d0 > 1e-6);
        let d1 = solvrigid::quasimetric::distance(&s, &f.apply(&p), &f.apply(&BlockPoint::scalars(&[0.0, 0.0]))).unwrap();
        prop_assert!((d1 / d0 / t - 1.0).abs() < 1e-9);
    }
}
