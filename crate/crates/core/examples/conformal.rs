//! Conformal classes, the circumcenter, and an invariant structure for a uniform group.

use nalgebra::DMatrix;
use solvrigid::conformal::{circumcenter, dilatation, invariant_structure, CircumcenterOpts, ConfClass};
use solvrigid::fixtures;
use solvrigid::BlockPoint;

fn main() -> solvrigid::Result<()> {
    let e = 1f64.exp();
    let a = ConfClass::normalized(&DMatrix::from_row_slice(2, 2, &[e, 0.0, 0.0, 1.0 / e]))?;
    let c = circumcenter(&[a.clone(), a.inverse()], &CircumcenterOpts::default())?;
    println!("K(A) = {:.4}, circumcenter radius {:.6}", dilatation(&a), c.radius);
    println!("center = {:.6}", c.center.matrix());

    let sample = fixtures::elliptic_sample(0.9, 4)?;
    let grid: Vec<BlockPoint> = (0..4).map(|k| BlockPoint::new(vec![vec![0.5 * k as f64, 0.0], vec![0.0]])).collect();
    let inv = invariant_structure(&sample.generators, &grid, 4, &CircumcenterOpts::default())?;
    println!("{} words, max defect {:.2e}", inv.words, inv.max_defect);
    println!("μ at the origin = {:.6}", inv.field.samples[0].class()?.matrix());
    Ok(())
}
