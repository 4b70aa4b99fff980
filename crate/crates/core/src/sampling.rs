//! Seeded random sampling of points and probe sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::space::{BlockPoint, SpectralData};

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Coordinates uniform in `[-scale, scale]`.
pub fn uniform_point(spec: &SpectralData, rng: &mut SampleRng, scale: f64) -> BlockPoint {
    BlockPoint::new(
        spec.mults()
            .iter()
            .map(|&n| (0..n).map(|_| rng.gen_range(-scale..=scale)).collect())
            .collect(),
    )
}

/// A point whose overall scale is log-uniform in `[10^-lo_exp, 10^hi_exp]`.
pub fn multiscale_point(spec: &SpectralData, rng: &mut SampleRng, lo_exp: f64, hi_exp: f64) -> BlockPoint {
    let scale = 10f64.powf(rng.gen_range(-lo_exp..=hi_exp));
    uniform_point(spec, rng, scale)
}

/// A random point near `p`: every block is offset independently at its own random scale.
pub fn nearby_point(spec: &SpectralData, rng: &mut SampleRng, p: &BlockPoint) -> BlockPoint {
    BlockPoint::new(
        p.blocks
            .iter()
            .zip(spec.mults())
            .map(|(b, _)| {
                let s = 10f64.powf(rng.gen_range(-3.0..=1.0));
                b.iter().map(|x| x + rng.gen_range(-s..=s)).collect()
            })
            .collect(),
    )
}

pub fn uniform_pairs(
    spec: &SpectralData,
    rng: &mut SampleRng,
    count: usize,
    scale: f64,
) -> Vec<(BlockPoint, BlockPoint)> {
    (0..count)
        .map(|_| (uniform_point(spec, rng, scale), uniform_point(spec, rng, scale)))
        .collect()
}

/// Random unit vector of the given dimension.
pub fn unit_vector(rng: &mut SampleRng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 1e-3 && r <= 1.0 {
            return v.into_iter().map(|x| x / r).collect();
        }
    }
}
