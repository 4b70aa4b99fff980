//! Triangularity probes and classification of opaque boundary maps.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::diff::block_jacobian;
use crate::error::{Error, Result};
use crate::quasimetric::{estimate_qsim_constants, QsimConstants};
use crate::sampling::{unit_vector, SampleRng};
use crate::space::{norm, BlockPoint, PointMap, SpectralData};

/// Largest allowed response of `f_i` to a perturbation of a lower block.
pub const TRIANGULARITY_TOL: f64 = 1e-7;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TriangularityReport {
    pub pass: bool,
    /// Largest relative response seen.
    pub worst_response: f64,
    /// `(component, block)` of the worst response, 0-based.
    pub worst_pair: Option<(usize, usize)>,
    pub probes: usize,
}

/// Perturb each block `j` at every probe and measure how much components `i > j` move.
pub fn check_triangularity(
    spec: &SpectralData,
    f: &dyn PointMap,
    probes: &[BlockPoint],
    rng: &mut SampleRng,
) -> Result<TriangularityReport> {
    let mut worst = 0.0;
    let mut worst_pair = None;
    for p in probes {
        spec.check(p)?;
        let base = f.apply(p);
        for j in 0..spec.rank() {
            for size in [1e-2, 1.0] {
                let u = unit_vector(rng, spec.mults()[j]);
                let mut q = p.clone();
                let s = size * (1.0 + norm(&p.blocks[j]));
                q.blocks[j].iter_mut().zip(&u).for_each(|(x, d)| *x += s * d);
                let moved = f.apply(&q);
                for i in (j + 1)..spec.rank() {
                    let diff: Vec<f64> = moved.blocks[i].iter().zip(&base.blocks[i]).map(|(a, b)| a - b).collect();
                    let resp = norm(&diff) / norm(&base.blocks[i]).max(1.0);
                    if resp > worst {
                        worst = resp;
                        worst_pair = Some((i, j));
                    }
                }
            }
        }
    }
    Ok(TriangularityReport { pass: worst <= TRIANGULARITY_TOL, worst_response: worst, worst_pair, probes: probes.len() })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum MapClass {
    Sim { stretch: f64 },
    Asim { stretch: f64 },
    Bilip { k: f64 },
    Qsim { n: f64, k: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Classification {
    pub class: MapClass,
    pub constants: QsimConstants,
    pub triangularity: TriangularityReport,
}

/// Tolerance used when deciding that sampled constants equal one.
const UNIT_TOL: f64 = 1e-9;
/// Tolerance for finite-difference structural checks.
const STRUCT_TOL: f64 = 1e-6;

/// Strongest class supported by the sample: similarity, almost similarity,
/// bilipschitz, then quasi-similarity.
pub fn classify(
    spec: &SpectralData,
    f: &dyn PointMap,
    pairs: &[(BlockPoint, BlockPoint)],
    probes: &[BlockPoint],
    rng: &mut SampleRng,
) -> Result<Classification> {
    let triangularity = check_triangularity(spec, f, probes, rng)?;
    if !triangularity.pass {
        let (i, j) = triangularity.worst_pair.unwrap_or((0, 0));
        return Err(Error::NotTriangular { component: i, block: j });
    }
    let constants = estimate_qsim_constants(spec, f, pairs)?;
    let class = if constants.k <= 1.0 + UNIT_TOL {
        MapClass::Sim { stretch: constants.n }
    } else if let Some(t) = asim_stretch(spec, f, probes, rng) {
        MapClass::Asim { stretch: t }
    } else if constants.min_ratio <= 1.0 + UNIT_TOL && constants.max_ratio >= 1.0 - UNIT_TOL {
        MapClass::Bilip { k: constants.bilip() }
    } else {
        MapClass::Qsim { n: constants.n, k: constants.k }
    };
    Ok(Classification { class, constants, triangularity })
}

fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max() / b.abs().max().max(1e-300)
}

/// Stretch `t` if every diagonal block is `t^{α_i}` times a constant orthogonal matrix
/// and affine in its own variable on the probes.
pub fn asim_stretch(spec: &SpectralData, f: &dyn PointMap, probes: &[BlockPoint], rng: &mut SampleRng) -> Option<f64> {
    let mut t_ref: Option<f64> = None;
    for i in 0..spec.rank() {
        let n = spec.mults()[i];
        let mut j_ref: Option<DMatrix<f64>> = None;
        for p in probes {
            let j = block_jacobian(f, p, i, i);
            let s = j.determinant().abs().powf(1.0 / n as f64);
            if !(s > 0.0) {
                return None;
            }
            let a = &j / s;
            if (a.transpose() * &a - DMatrix::identity(n, n)).abs().max() > STRUCT_TOL {
                return None;
            }
            match &j_ref {
                Some(r) if rel_diff(&j, r) > STRUCT_TOL => return None,
                None => j_ref = Some(j.clone()),
                _ => {}
            }
            // affine along a long step in the own block
            let u = unit_vector(rng, n);
            let len = 1.0 + norm(&p.blocks[i]);
            let mut q = p.clone();
            q.blocks[i].iter_mut().zip(&u).for_each(|(x, d)| *x += len * d);
            let delta: Vec<f64> = f.apply(&q).blocks[i].iter().zip(&f.apply(p).blocks[i]).map(|(a, b)| a - b).collect();
            let pred = &j * nalgebra::DVector::from_vec(u.iter().map(|d| d * len).collect());
            let err: f64 = delta.iter().zip(pred.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if err > STRUCT_TOL * (1.0 + norm(&delta)) {
                return None;
            }
            let t = s.powf(1.0 / spec.alpha(i));
            match t_ref {
                Some(t0) if ((t - t0) / t0).abs() > STRUCT_TOL => return None,
                None => t_ref = Some(t),
                _ => {}
            }
        }
    }
    t_ref
}
