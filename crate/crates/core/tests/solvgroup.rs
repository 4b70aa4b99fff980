use proptest::prelude::*;
use solvrigid::mapalg::expr::{coord, periodic_pwl, project, sum};
use solvrigid::mapalg::{BlockMap, SimMap};
use solvrigid::quasimetric::{dilate, distance};
use solvrigid::sampling::{multiscale_point, rng, uniform_point};
use solvrigid::solvgroup::*;
use solvrigid::{BlockPoint, PointMap, SpectralData};

fn pure23() -> SolvSpec {
    SolvSpec::pure(SpectralData::simple(&[2.0, 3.0]).unwrap()).unwrap()
}

fn mixed() -> SolvSpec {
    SolvSpec::new(SpectralData::new(vec![1.0, 2.0], vec![2, 1]).unwrap(), SpectralData::simple(&[0.5]).unwrap()).unwrap()
}

fn sp(spec: &SolvSpec, t: f64, x: &[f64], z: &[f64]) -> SolvPoint {
    SolvPoint { height: t, x: spec.lower.unflatten(x), z: spec.upper.unflatten(z) }
}

#[test]
fn multiply_examples() {
    let s = mixed();
    let p = sp(&s, 0.0, &[1.0, 2.0, 3.0], &[4.0]);
    let q = sp(&s, 0.0, &[0.5, 0.5, 0.5], &[1.0]);
    assert_eq!(multiply(&s, &p, &q).unwrap(), sp(&s, 0.0, &[1.5, 2.5, 3.5], &[5.0]));
    let a = sp(&s, 0.7, &[0.0; 3], &[0.0]);
    let b = sp(&s, -0.7, &[0.0; 3], &[0.0]);
    assert_eq!(multiply(&s, &a, &b).unwrap(), s.identity());
    let one = SolvSpec::pure(SpectralData::simple(&[1.0]).unwrap()).unwrap();
    let r = multiply(&one, &sp(&one, 1.0, &[2.0], &[]), &sp(&one, 1.0, &[3.0], &[])).unwrap();
    assert!((r.height - 2.0).abs() < 1e-15 && (r.x.blocks[0][0] - (2.0 + std::f64::consts::E * 3.0)).abs() < 1e-12);
}

#[test]
fn inverse_round_trips() {
    let s = mixed();
    let mut r = rng(4);
    for _ in 0..100 {
        let p = SolvPoint { height: r.gen_range(-3.0..3.0), x: uniform_point(&s.lower, &mut r, 5.0), z: uniform_point(&s.upper, &mut r, 5.0) };
        let e = multiply(&s, &p, &inverse(&s, &p).unwrap()).unwrap();
        assert!(e.height.abs() < 1e-12);
        assert!(e.x.flat().iter().chain(&e.z.flat()).all(|v| v.abs() < 1e-9));
    }
}

use rand::Rng;

#[test]
fn associativity_on_random_triples() {
    let s = mixed();
    let mut r = rng(5);
    let mut draw = || SolvPoint { height: r.gen_range(-2.0..2.0), x: uniform_point(&s.lower, &mut r, 3.0), z: uniform_point(&s.upper, &mut r, 3.0) };
    for _ in 0..1000 {
        let (a, b, c) = (draw(), draw(), draw());
        let l = multiply(&s, &multiply(&s, &a, &b).unwrap(), &c).unwrap();
        let rr = multiply(&s, &a, &multiply(&s, &b, &c).unwrap()).unwrap();
        let scale = 1.0 + l.x.flat().iter().chain(&l.z.flat()).fold(0.0f64, |m, v| m.max(v.abs()));
        let gap = l.x.sub(&rr.x).flat().into_iter().chain(l.z.sub(&rr.z).flat()).fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(gap / scale < 1e-10 && (l.height - rr.height).abs() < 1e-12);
    }
}

#[test]
fn level_distance_examples() {
    let one = SpectralData::simple(&[2.0]).unwrap();
    let d = level_distance_lower(&one, 2f64.ln(), &BlockPoint::scalars(&[0.0]), &BlockPoint::scalars(&[4.0])).unwrap();
    assert!((d - 1.0).abs() < 1e-15);
    let s = mixed();
    let p = sp(&s, 0.0, &[1.0, 2.0, 3.0], &[4.0]);
    let q = sp(&s, 0.0, &[1.0, 0.0, 3.5], &[1.0]);
    assert_eq!(level_distance(&s, 0.0, &p, &q).unwrap(), 3.0);
    let low = SpectralData::simple(&[1.0, 2.0]).unwrap();
    let (x, y) = (BlockPoint::scalars(&[1.0, 1.0]), BlockPoint::scalars(&[0.0, 0.0]));
    let mut prev = f64::INFINITY;
    for k in 0..10 {
        let d = level_distance_lower(&low, k as f64 * 0.3, &x, &y).unwrap();
        assert!(d < prev);
        prev = d;
    }
}

#[test]
fn pair_to_point_examples() {
    let one = SolvSpec::pure(SpectralData::simple(&[1.0]).unwrap()).unwrap();
    let t = pair_to_point(&one, &BlockPoint::scalars(&[0.0]), &BlockPoint::scalars(&[1.0])).unwrap();
    assert_eq!(t.height, 0.0);
    let s = pure23();
    let (p, q) = (BlockPoint::scalars(&[0.0, 0.0]), BlockPoint::scalars(&[4.0, 8.0]));
    let t = pair_to_point(&s, &p, &q).unwrap();
    assert!((t.height - 2f64.ln()).abs() < 1e-15);
    assert_eq!(t.x, p);
    assert!((pair_to_height_bisect(&s, &p, &q).unwrap() - 2f64.ln()).abs() < 1e-12);
    assert!(pair_to_point(&s, &p, &p).is_err());
}

#[test]
fn rho_matches_quasimetric() {
    let s = pure23();
    let mut r = rng(6);
    for _ in 0..10_000 {
        let p = multiscale_point(&s.lower, &mut r, 3.0, 3.0);
        let q = multiscale_point(&s.lower, &mut r, 3.0, 3.0);
        let d = distance(&s.lower, &p, &q).unwrap();
        let t = pair_to_point(&s, &p, &q).unwrap().height;
        assert!((t.exp() / d - 1.0).abs() < 1e-12);
        let b = pair_to_height_bisect(&s, &p, &q).unwrap();
        assert!((b - t).abs() < 1e-9);
    }
}

#[test]
fn height_isometry_boundary() {
    let s = pure23();
    let id = boundary_of_height_isometry(&s, 0.0).unwrap();
    assert_eq!(id, SimMap::identity(&s.lower));
    let two = boundary_of_height_isometry(&s, 2f64.ln()).unwrap();
    assert!((two.stretch() - 2.0).abs() < 1e-15);
    let (a, b) = (0.3, -1.1);
    let ab = boundary_of_height_isometry(&s, a).unwrap().compose(&boundary_of_height_isometry(&s, b).unwrap()).unwrap();
    assert!((ab.stretch() - (a + b).exp()).abs() < 1e-12);
    let mut r = rng(7);
    for _ in 0..1000 {
        let p = uniform_point(&s.lower, &mut r, 10.0);
        let q = uniform_point(&s.lower, &mut r, 10.0);
        let f = boundary_of_height_isometry(&s, a).unwrap();
        let h0 = pair_to_point(&s, &p, &q).unwrap().height;
        let h1 = pair_to_point(&s, &f.apply(&p), &f.apply(&q)).unwrap().height;
        assert!((h1 - h0 - a).abs() < 1e-12);
        let fp = f.apply(&p);
        let dp = dilate(&s.lower, a.exp(), &p).unwrap();
        assert!(fp.sub(&dp).flat().iter().all(|v| v.abs() < 1e-12 * (1.0 + dp.flat().iter().fold(0.0f64, |m, x| m.max(x.abs())))));
    }
}

#[test]
fn suspension_distortion() {
    let s = SolvSpec::pure(SpectralData::simple(&[1.0, 2.0]).unwrap()).unwrap();
    let mut r = rng(8);
    let probes: Vec<BlockPoint> = (0..20).map(|_| uniform_point(&s.lower, &mut r, 3.0)).collect();
    let samples: Vec<(f64, BlockPoint, BlockPoint)> =
        (0..1000).map(|_| (r.gen_range(-2.0..2.0), uniform_point(&s.lower, &mut r, 3.0), uniform_point(&s.lower, &mut r, 3.0))).collect();
    let id = BlockMap::identity(&s.lower);
    let sus = suspend_boundary_map(&s, &id, 0.0, &probes, &mut r).unwrap();
    assert_eq!(sus.apply(&s.identity()), s.identity());
    let dil = SimMap::dilation(&s.lower, 2.0).unwrap().to_block_map();
    let sus = suspend_boundary_map(&s, &dil, 2f64.ln(), &probes, &mut r).unwrap();
    let (lo, hi) = sus.level_distortion(&samples).unwrap();
    assert!((lo - 1.0).abs() < 1e-9 && (hi - 1.0).abs() < 1e-9);
    let first = sum(vec![coord(0, 0), periodic_pwl(vec![0.0, 1.0, 2.0], vec![0.0, 0.5, 0.0], coord(0, 0))]);
    let bil = BlockMap::new(s.lower.clone(), vec![first, project(1)]).unwrap();
    let sus = suspend_boundary_map(&s, &bil, 0.0, &probes, &mut r).unwrap();
    let (lo, hi) = sus.level_distortion(&samples).unwrap();
    assert!(lo >= 0.5 - 1e-12 && hi <= 1.5 + 1e-12);
    assert!(lo < 0.9 && hi > 1.1);
}

#[test]
fn geodesic_csv() {
    let s = pure23();
    let g = VerticalGeodesic { anchor: sp(&s, 0.0, &[1.0, 2.0], &[]), upward: false };
    let csv = g.csv(&[0.0, 1.0]);
    assert_eq!(csv, "t,c0,c1\n0,1,2\n-1,1,2\n");
}

proptest! {
    #[test]
    fn rho_shifts_under_dilation(x in -50.0..50.0f64, y in -50.0..50.0f64, u in -50.0..50.0f64, v in -50.0..50.0f64, s in 0.01..100.0f64) {
        let spec = pure23();
        let p = BlockPoint::scalars(&[x, y]);
        let q = BlockPoint::scalars(&[u, v]);
        prop_assume!(p != q);
        let h0 = pair_to_point(&spec, &p, &q).unwrap().height;
        let h1 = pair_to_point(&spec, &dilate(&spec.lower, s, &p).unwrap(), &dilate(&spec.lower, s, &q).unwrap()).unwrap().height;
        prop_assert!((h1 - h0 - s.ln()).abs() < 1e-12);
    }
}
