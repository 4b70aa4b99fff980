//! Sort boundary maps into similarity, almost similarity, bilipschitz or quasisimilarity.

use solvrigid::fixtures::tent_h;
use solvrigid::mapalg::expr::project;
use solvrigid::mapalg::{classify, BlockMap, SimMap};
use solvrigid::sampling::{rng, uniform_pairs, uniform_point};
use solvrigid::{BlockPoint, SpectralData};

fn main() -> solvrigid::Result<()> {
    let spec = SpectralData::simple(&[1.0, 2.0])?;
    let mut r = rng(1);
    let pairs = uniform_pairs(&spec, &mut r, 2000, 4.0);
    let probes: Vec<BlockPoint> = (0..30).map(|_| uniform_point(&spec, &mut r, 4.0)).collect();

    let tent = BlockMap::new(spec.clone(), vec![tent_h(project(0)), project(1)])?;
    let maps = [
        ("dilation", SimMap::dilation(&spec, 2.0)?.to_block_map()),
        ("tent", tent.clone()),
        ("dilated tent", SimMap::dilation(&spec, 4.0)?.to_block_map().compose(&tent)?),
    ];
    for (name, m) in &maps {
        let c = classify(&spec, m, &pairs, &probes, &mut r)?;
        println!("{name:>13}: {}", serde_json::to_string(&c.class).unwrap());
    }
    Ok(())
}
