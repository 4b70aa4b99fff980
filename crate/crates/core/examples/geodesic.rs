//! Pair-to-point map and height isometries of the solvable group.

use solvrigid::solvgroup::{height_isometry_pair, pair_to_point, SolvSpec, VerticalGeodesic};
use solvrigid::{BlockPoint, SpectralData};

fn main() -> solvrigid::Result<()> {
    let spec = SolvSpec::new(SpectralData::simple(&[2.0, 3.0])?, SpectralData::simple(&[1.0])?)?;
    let p = BlockPoint::scalars(&[0.0, 0.0]);
    let q = BlockPoint::scalars(&[9.0, 1.0]);
    let o = pair_to_point(&spec, &p, &q)?;
    println!("point at height {:.6}, e^t = {:.6}", o.height, o.height.exp());
    let g = VerticalGeodesic { anchor: o, upward: true };
    print!("{}", g.csv(&[0.0, 0.5, 1.0]));

    let pair = height_isometry_pair(&spec, 0.7)?;
    println!("lower stretch {:?}, upper stretch {:?}", pair.lower.stretch(), pair.upper.stretch());
    Ok(())
}
