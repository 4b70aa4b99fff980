//! Stretch, rotation and height homomorphisms, and the reciprocity check on pairs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::sim::BoundaryMap;
use crate::error::{Error, Result};

/// Residual above which a tuple of stretches is not in the uniform subgroup.
pub const STRETCH_RESIDUAL_TOL: f64 = 1e-9;

fn stretch_of(g: &BoundaryMap) -> Result<f64> {
    g.stretch()
        .ok_or_else(|| Error::Domain("stretch is only defined for similarities and almost similarities".into()))
}

/// Solve `log t_i = <s_i, v>` for the tuple `(G_1, ..., G_m)` by least squares.
pub fn stretch_hom(maps: &[BoundaryMap], spanning: &[Vec<f64>]) -> Result<Vec<f64>> {
    if maps.len() != spanning.len() || maps.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} spanning vectors", maps.len()),
            got: spanning.len().to_string(),
        });
    }
    let k = spanning[0].len();
    if spanning.iter().any(|s| s.len() != k) {
        return Err(Error::Domain("spanning vectors of unequal length".into()));
    }
    let s = DMatrix::from_fn(maps.len(), k, |i, j| spanning[i][j]);
    let logs = DVector::from_iterator(maps.len(), maps.iter().map(|g| stretch_of(g).map(f64::ln)).collect::<Result<Vec<_>>>()?);
    let svd = s.clone().svd(true, true);
    let v = svd
        .solve(&logs, 1e-12)
        .map_err(|e| Error::Domain(format!("least squares failed: {e}")))?;
    let residual = (&s * &v - &logs).abs().max();
    if residual > STRETCH_RESIDUAL_TOL {
        return Err(Error::NotInUniformSubgroup { residual });
    }
    Ok(v.iter().copied().collect())
}

/// The rotation parts `A_i`.
pub fn rotation_hom(g: &BoundaryMap) -> Result<Vec<DMatrix<f64>>> {
    g.rotations()
        .map(|r| r.to_vec())
        .ok_or_else(|| Error::Domain("rotations are only defined for similarities and almost similarities".into()))
}

/// Lower and upper boundary maps of one isometry of a solvable group.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BoundaryPair {
    pub lower: BoundaryMap,
    pub upper: BoundaryMap,
}

/// `h(G) = log t_l`.
pub fn height_hom(pair: &BoundaryPair) -> Result<f64> {
    Ok(stretch_of(&pair.lower)?.ln())
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ReciprocityReport {
    pub pass: bool,
    /// `log t_l + log t_u`.
    pub log_product: f64,
    /// Stretch product of the `k`-th powers, `k = 1..=10`.
    pub drift: Vec<f64>,
}

pub const RECIPROCITY_TOL: f64 = 1e-9;

/// `t_l t_u = 1`; otherwise report how the stretch product of powers drifts.
pub fn check_reciprocity(pair: &BoundaryPair) -> Result<ReciprocityReport> {
    let tl = stretch_of(&pair.lower)?;
    let tu = stretch_of(&pair.upper)?;
    let log_product = tl.ln() + tu.ln();
    let mut drift = Vec::with_capacity(10);
    let (mut lk, mut uk) = (pair.lower.clone(), pair.upper.clone());
    for k in 1..=10 {
        if k > 1 {
            lk = lk.compose(&pair.lower)?;
            uk = uk.compose(&pair.upper)?;
        }
        drift.push(stretch_of(&lk)? * stretch_of(&uk)?);
    }
    Ok(ReciprocityReport { pass: log_product.abs() <= RECIPROCITY_TOL, log_product, drift })
}
