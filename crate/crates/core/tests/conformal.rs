use nalgebra::DMatrix;
use proptest::prelude::*;
use solvrigid::conformal::*;
use solvrigid::fixtures;
use solvrigid::mapalg::expr::{linear, project};
use solvrigid::mapalg::BlockMap;
use solvrigid::sampling::rng;
use solvrigid::{BlockPoint, SpectralData};

fn diag(a: f64, b: f64) -> ConfClass {
    ConfClass::normalized(&DMatrix::from_row_slice(2, 2, &[a, 0.0, 0.0, b])).unwrap()
}

fn close(a: &ConfClass, b: &ConfClass, tol: f64) -> bool {
    (a.matrix() - b.matrix()).abs().max() < tol
}

#[test]
fn class_validation() {
    assert!(ConfClass::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5])).is_ok());
    assert!(ConfClass::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0])).is_err());
    assert!(ConfClass::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0])).is_err());
    assert!(ConfClass::new(DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0])).is_err());
    let c = diag(9.0, 1.0);
    assert!((c.matrix()[(0, 0)] - 3.0).abs() < 1e-12);
    let json = serde_json::to_string(&c).unwrap();
    let back: ConfClass = serde_json::from_str(&json).unwrap();
    assert!(close(&c, &back, 1e-15));
    assert!(serde_json::from_str::<ConfClass>("[[1,0],[0,2]]").is_err());
}

#[test]
fn distances_and_dilatation() {
    let i = ConfClass::identity(2);
    let a = diag(4.0, 0.25);
    assert!((kdist(&i, &a) - 4f64.ln()).abs() < 1e-12);
    assert!((rdist(&i, &a) - 4f64.ln() * 2f64.sqrt()).abs() < 1e-12);
    assert!((dilatation(&a) - 4.0).abs() < 1e-12);
    assert!(kdist(&a, &a) < 1e-12);
    assert!((dilatation(&a.inverse()) - 4.0).abs() < 1e-12);
}

#[test]
fn action_examples() {
    let i = ConfClass::identity(2);
    let rot = DMatrix::from_row_slice(2, 2, &[0.6, -0.8, 0.8, 0.6]);
    assert!(close(&act(&rot, &i).unwrap(), &i, 1e-12));
    assert!(close(&act(&(rot.clone() * 3.0), &i).unwrap(), &i, 1e-12));
    let l = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
    assert!(close(&act(&l, &i).unwrap(), &diag(4.0, 1.0), 1e-12));
    assert!(act(&DMatrix::zeros(2, 2), &i).is_err());
    assert!(act(&DMatrix::identity(3, 3), &i).is_err());
}

#[test]
fn circumcenter_examples() {
    let opts = CircumcenterOpts::default();
    let a = diag(3.0, 1.0);
    let c = circumcenter(&[a.clone()], &opts).unwrap();
    assert!(close(&c.center, &a, 1e-10) && c.radius < 1e-10);
    let e = 1f64.exp();
    let c = circumcenter(&[diag(e, 1.0 / e), diag(1.0 / e, e)], &opts).unwrap();
    assert!(close(&c.center, &ConfClass::identity(2), 1e-9));
    assert!((c.radius - 2f64.sqrt()).abs() < 1e-9);
    assert!(circumcenter(&[], &opts).is_err());
    assert!(circumcenter(&[ConfClass::identity(2), ConfClass::identity(3)], &opts).is_err());
}

#[test]
fn circumcenter_ignores_interior_points() {
    let opts = CircumcenterOpts::default();
    let e = 1f64.exp();
    let outer = [diag(e, 1.0 / e), diag(1.0 / e, e)];
    let mut set = outer.to_vec();
    set.push(diag(1.2, 1.0));
    set.push(ConfClass::identity(2));
    let a = circumcenter(&outer, &opts).unwrap();
    let b = circumcenter(&set, &opts).unwrap();
    assert!(close(&a.center, &b.center, 1e-8));
}

#[test]
fn euclidean_ball() {
    let (c, r) = min_enclosing_ball(&[vec![0.0, 0.0], vec![2.0, 0.0], vec![1.0, 0.5]]).unwrap();
    assert!((c[0] - 1.0).abs() < 1e-12 && c[1].abs() < 1e-12 && (r - 1.0).abs() < 1e-12);
    let (c, r) = min_enclosing_ball(&[vec![0.0, 0.0], vec![2.0, 0.0], vec![1.0, 3f64.sqrt()]]).unwrap();
    assert!((r - 2.0 / 3f64.sqrt()).abs() < 1e-12 && (c[0] - 1.0).abs() < 1e-12);
    assert!(min_enclosing_ball(&[]).is_err());
}

#[test]
fn elliptic_invariant_structure() {
    let s = fixtures::elliptic_sample(0.9, 4).unwrap();
    let grid: Vec<BlockPoint> = (0..6).map(|k| BlockPoint::new(vec![vec![0.3 * k as f64, -0.2], vec![0.5 * k as f64]])).collect();
    let inv = invariant_structure(&s.generators, &grid, 4, &CircumcenterOpts::default()).unwrap();
    assert!(inv.flagged.is_empty());
    assert!(inv.max_defect < 1e-6, "{}", inv.max_defect);
    let expected = diag(0.25, 1.0);
    for sample in &inv.field.samples {
        assert!(close(&sample.class().unwrap(), &expected, 1e-6));
    }
    assert_eq!(inv.words, 9);
}

#[test]
fn conformality_of_linear_maps() {
    let s = SpectralData::new(vec![1.0, 2.0], vec![2, 1]).unwrap();
    let pts: Vec<BlockPoint> = (0..5).map(|k| BlockPoint::new(vec![vec![k as f64, 0.0], vec![0.0]])).collect();
    let l = BlockMap::new(s.clone(), vec![linear(vec![vec![2.0, 0.0], vec![0.0, 1.0]], project(0)), project(1)]).unwrap();
    let images: Vec<BlockPoint> = pts.iter().map(|p| solvrigid::PointMap::apply(&l, p)).collect();
    let mu = ConfField::constant(&pts, &diag(4.0, 1.0));
    let nu = ConfField::constant(&images, &ConfClass::identity(2));
    let d = conformality_defect(&l, &mu, &nu, &pts[2], 1e-6).unwrap();
    assert!((d - 1.0).abs() < 1e-6);
    let wrong = ConfField::constant(&pts, &ConfClass::identity(2));
    let d = conformality_defect(&l, &wrong, &nu, &pts[2], 1e-6).unwrap();
    assert!((d - 2.0).abs() < 1e-6);
    let far = BlockPoint::new(vec![vec![50.0, 0.0], vec![0.0]]);
    assert!(conformality_defect(&l, &mu, &nu, &far, 1e-6).is_err());
}

#[test]
fn measure_distortion_of_linear_map() {
    let s = SpectralData::new(vec![1.0, 2.0], vec![2, 1]).unwrap();
    let l = BlockMap::new(s.clone(), vec![linear(vec![vec![2.0, 1.0], vec![0.0, 1.0]], project(0)), project(1)]).unwrap();
    let li = BlockMap::new(s.clone(), vec![linear(vec![vec![0.5, -0.5], vec![0.0, 1.0]], project(0)), project(1)]).unwrap();
    let boxes = vec![
        AxisBox { lo: vec![0.0, 0.0, 0.0], hi: vec![1.0, 1.0, 1.0] },
        AxisBox { lo: vec![-2.0, 1.0, 3.0], hi: vec![-1.5, 2.0, 3.5] },
        AxisBox { lo: vec![0.0, 0.0, 0.0], hi: vec![0.0, 1.0, 1.0] },
    ];
    let mut r = rng(3);
    let rep = measure_distortion_check(&s, &l, &li, &boxes, 40_000, &mut r).unwrap();
    assert_eq!(rep.skipped, vec![2]);
    assert_eq!(rep.ratios.len(), 2);
    assert!(rep.ratios.iter().all(|&x| (x - 2.0).abs() < 0.1), "{:?}", rep.ratios);
}

fn spd() -> impl Strategy<Value = ConfClass> {
    (-1.5..1.5f64, -1.5..1.5f64, -1.0..1.0f64).prop_map(|(a, b, c)| {
        let m = DMatrix::from_row_slice(2, 2, &[a, c, c, b]);
        let e = m.symmetric_eigen();
        let d = DMatrix::from_diagonal(&e.eigenvalues.map(f64::exp));
        let x = &e.eigenvectors * d * e.eigenvectors.transpose();
        ConfClass::normalized(&((&x + x.transpose()) * 0.5)).unwrap()
    })
}

fn invertible() -> impl Strategy<Value = DMatrix<f64>> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64)
        .prop_filter("invertible", |(a, b, c, d)| (a * d - b * c).abs() > 0.2)
        .prop_map(|(a, b, c, d)| DMatrix::from_row_slice(2, 2, &[a, b, c, d]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn right_action_law(x in invertible(), y in invertible(), a in spd()) {
        let lhs = act(&(&x * &y), &a).unwrap();
        let rhs = act(&y, &act(&x, &a).unwrap()).unwrap();
        prop_assert!(kdist(&lhs, &rhs) < 1e-8);
    }

    #[test]
    fn action_is_isometric(x in invertible(), a in spd(), b in spd()) {
        let d0 = rdist(&a, &b);
        let d1 = rdist(&act(&x, &a).unwrap(), &act(&x, &b).unwrap());
        prop_assert!((d0 - d1).abs() < 1e-7 * (1.0 + d0));
    }

    #[test]
    fn circumcenter_is_equivariant_and_minimal(x in invertible(), set in proptest::collection::vec(spd(), 1..6)) {
        let opts = CircumcenterOpts::default();
        let c = circumcenter(&set, &opts).unwrap();
        for a in &set {
            let r = set.iter().map(|b| rdist(a, b)).fold(0.0, f64::max);
            prop_assert!(c.radius <= r + 1e-9);
        }
        let moved: Vec<ConfClass> = set.iter().map(|a| act(&x, a).unwrap()).collect();
        let cm = circumcenter(&moved, &opts).unwrap();
        prop_assert!(kdist(&cm.center, &act(&x, &c.center).unwrap()) < 1e-5);
        prop_assert!((cm.radius - c.radius).abs() < 1e-7);
    }
}
