//! Conjugate a uniform group of piecewise-affine maps of the line into similarities.

use solvrigid::fixtures;
use solvrigid::sampling::{rng, uniform_point};
use solvrigid::tukia::{conjugator_1d, sup_measure_1d, verify_conjugation, LineGrid, MeasureGrid};
use rand::Rng;
use solvrigid::BlockPoint;

fn main() -> solvrigid::Result<()> {
    let sample = fixtures::piecewise_1d(12)?;
    let grid = MeasureGrid { x: LineGrid { lo: -30.0, hi: 30.0, step: 1e-3 }, ys: vec![], offset: 1e-3 };
    let field = sup_measure_1d(&sample, &grid)?;
    println!("{} words, {} flagged nodes", field.words, field.flagged.len());
    let conj = conjugator_1d(&sample.spec, &field)?;
    let mut r = rng(0);
    let probes: Vec<BlockPoint> = (0..40)
        .map(|_| {
            let mut p = uniform_point(&sample.spec, &mut r, 1.0);
            p.blocks[0][0] = r.gen_range(-10.0..10.0);
            p
        })
        .collect();
    let rep = verify_conjugation(&sample, &conj.map, &probes, 1e-3)?;
    println!("derivative oscillation {:.3e} before, {:.3e} after", rep.max_before, rep.max_after);
    Ok(())
}
