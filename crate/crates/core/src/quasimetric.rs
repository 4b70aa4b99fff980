//! The parabolic visual quasimetric `D_M`, its dilations, and the chain functional `Δ_β`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::space::{BlockPoint, PointMap, SpectralData};

/// `D_M(p, q) = max_i |x_i - y_i|^{1/α_i}`.
pub fn distance(spec: &SpectralData, p: &BlockPoint, q: &BlockPoint) -> Result<f64> {
    spec.check(p)?;
    spec.check(q)?;
    Ok(distance_unchecked(spec, p, q))
}

pub(crate) fn distance_unchecked(spec: &SpectralData, p: &BlockPoint, q: &BlockPoint) -> f64 {
    let mut d: f64 = 0.0;
    for (i, (a, b)) in p.blocks.iter().zip(&q.blocks).enumerate() {
        let n = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        d = d.max(n.powf(1.0 / spec.alpha(i)));
    }
    d
}

/// Per-block Euclidean norms of `p - q`.
pub fn block_gaps(p: &BlockPoint, q: &BlockPoint) -> Vec<f64> {
    p.blocks
        .iter()
        .zip(&q.blocks)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
        .collect()
}

/// `δ_t(x_1, ..., x_r) = (t^{α_1} x_1, ..., t^{α_r} x_r)`.
pub fn dilate(spec: &SpectralData, t: f64, p: &BlockPoint) -> Result<BlockPoint> {
    if !(t > 0.0) || !t.is_finite() {
        return domain(format!("dilation factor must be positive, got {t}"));
    }
    spec.check(p)?;
    Ok(dilate_unchecked(spec, t, p))
}

pub(crate) fn dilate_unchecked(spec: &SpectralData, t: f64, p: &BlockPoint) -> BlockPoint {
    BlockPoint::new(
        p.blocks
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let s = t.powf(spec.alpha(i));
                b.iter().map(|x| s * x).collect()
            })
            .collect(),
    )
}

/// Refinement schedule for [`chain_energy`].
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChainGrid {
    /// Subdivisions per block segment in round zero.
    pub resolution: usize,
    /// Number of doublings after round zero.
    pub max_depth: usize,
    /// Stop once a round improves the estimate by less than this.
    #[serde(default = "default_min_decrement")]
    pub min_decrement: f64,
}

fn default_min_decrement() -> f64 {
    1e-8
}

impl ChainGrid {
    pub fn new(resolution: usize, max_depth: usize) -> Self {
        ChainGrid { resolution, max_depth, min_decrement: default_min_decrement() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainEstimate {
    /// Smallest chain sum found.
    pub value: f64,
    /// Improvement made by the last round.
    pub decrement: f64,
    /// Estimate after each round.
    pub history: Vec<f64>,
}

/// Axis-aligned chain from `p` to `q`: blocks are moved one at a time, each along a
/// straight segment cut into `subdivisions[i]` equal pieces.
pub fn staircase_chain(p: &BlockPoint, q: &BlockPoint, subdivisions: &[usize]) -> Vec<BlockPoint> {
    let mut chain = vec![p.clone()];
    let mut cur = p.clone();
    for i in 0..p.blocks.len() {
        if p.blocks[i] == q.blocks[i] {
            continue;
        }
        let m = subdivisions[i].max(1);
        for s in 1..=m {
            let f = s as f64 / m as f64;
            cur.blocks[i] = p.blocks[i]
                .iter()
                .zip(&q.blocks[i])
                .map(|(a, b)| if s == m { *b } else { a + f * (b - a) })
                .collect();
            chain.push(cur.clone());
        }
    }
    chain
}

/// `Σ_j D_M(p_{j-1}, p_j)^β` along a chain.
pub fn chain_cost(spec: &SpectralData, beta: f64, chain: &[BlockPoint]) -> f64 {
    chain
        .windows(2)
        .map(|w| distance_unchecked(spec, &w[0], &w[1]).powf(beta))
        .sum()
}

/// Cost of moving block `i` by `gap` in `m` equal steps.
fn segment_cost(spec: &SpectralData, beta: f64, i: usize, gap: f64, m: f64) -> f64 {
    m * (gap / m).powf(beta / spec.alpha(i))
}

/// Upper estimate of `Δ_β(p, q)` by refining staircase chains.
///
/// Every candidate is the cost of an explicit chain, so each round yields an upper
/// bound and the reported history is nonincreasing.
pub fn chain_energy(
    spec: &SpectralData,
    beta: f64,
    p: &BlockPoint,
    q: &BlockPoint,
    grid: &ChainGrid,
) -> Result<ChainEstimate> {
    spec.check(p)?;
    spec.check(q)?;
    if !(beta > 0.0) || !beta.is_finite() {
        return domain(format!("β must be positive, got {beta}"));
    }
    if grid.resolution == 0 || grid.max_depth == 0 {
        return Err(Error::Domain("chain grid needs resolution >= 1 and max_depth >= 1".into()));
    }
    let gaps = block_gaps(p, q);
    let direct = distance_unchecked(spec, p, q).powf(beta);
    // Best cost seen so far for each block over all subdivision counts tried.
    let mut best: Vec<f64> = gaps
        .iter()
        .enumerate()
        .map(|(i, &g)| if g == 0.0 { 0.0 } else { segment_cost(spec, beta, i, g, 1.0) })
        .collect();
    let mut history = Vec::with_capacity(grid.max_depth + 1);
    let mut value = f64::INFINITY;
    let mut decrement = f64::INFINITY;
    for depth in 0..=grid.max_depth {
        let m = grid.resolution as f64 * 2f64.powi(depth as i32);
        for (i, &g) in gaps.iter().enumerate() {
            if g > 0.0 {
                best[i] = best[i].min(segment_cost(spec, beta, i, g, m));
            }
        }
        let stair: f64 = best.iter().sum();
        let next = value.min(stair).min(direct);
        if depth > 0 {
            decrement = value - next;
        }
        value = next;
        history.push(value);
        if depth > 0 && decrement < grid.min_decrement {
            break;
        }
    }
    if decrement.is_infinite() {
        decrement = 0.0;
    }
    Ok(ChainEstimate { value, decrement, history })
}

/// Quasi-similarity constants fitted to a sample of pairs.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct QsimConstants {
    /// Geometric mean of the distance ratios.
    pub n: f64,
    /// `max(ratio / N, N / ratio)` over the sample.
    pub k: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub pairs_used: usize,
}

impl QsimConstants {
    /// Bilipschitz constant when the stretch is taken to be one.
    pub fn bilip(&self) -> f64 {
        self.max_ratio.max(1.0 / self.min_ratio)
    }
}

pub fn estimate_qsim_constants(
    spec: &SpectralData,
    f: &dyn PointMap,
    pairs: &[(BlockPoint, BlockPoint)],
) -> Result<QsimConstants> {
    let mut logs = Vec::with_capacity(pairs.len());
    for (p, q) in pairs {
        let d = distance(spec, p, q)?;
        if d == 0.0 || !d.is_finite() {
            continue;
        }
        let dq = distance(spec, &f.apply(p), &f.apply(q))?;
        if dq == 0.0 || !dq.is_finite() {
            continue;
        }
        logs.push(dq.ln() - d.ln());
    }
    if logs.is_empty() {
        return Err(Error::Empty("no nondegenerate pairs".into()));
    }
    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(QsimConstants {
        n: mean.exp(),
        k: (hi - mean).max(mean - lo).exp(),
        min_ratio: lo.exp(),
        max_ratio: hi.exp(),
        pairs_used: logs.len(),
    })
}
