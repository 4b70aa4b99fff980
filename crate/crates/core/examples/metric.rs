//! Boundary quasimetric, dilations and the chain functional.

use solvrigid::quasimetric::{chain_energy, dilate, distance, ChainGrid};
use solvrigid::{BlockPoint, SpectralData};

fn main() -> solvrigid::Result<()> {
    let spec = SpectralData::simple(&[2.0, 3.0])?;
    let p = BlockPoint::scalars(&[0.0, 0.0]);
    let q = BlockPoint::scalars(&[4.0, 8.0]);
    println!("D(p, q) = {}", distance(&spec, &p, &q)?);
    let (dp, dq) = (dilate(&spec, 3.0, &p)?, dilate(&spec, 3.0, &q)?);
    println!("D(δ_3 p, δ_3 q) = {}", distance(&spec, &dp, &dq)?);

    let q = BlockPoint::scalars(&[1.0, 0.0]);
    for beta in [2.0, 3.0] {
        let grid = ChainGrid { resolution: 64, max_depth: 10, min_decrement: 0.0 };
        let e = chain_energy(&spec, beta, &p, &q, &grid)?;
        println!("Δ_{beta}(p, q) ≈ {:.6}  (rounds: {:?})", e.value, e.history);
    }
    Ok(())
}
