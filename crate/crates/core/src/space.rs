//! Spectral data, block points and the point-map trait shared by every module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponents `0 < α_1 < ... < α_r` with multiplicities `n_i`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralData {
    alphas: Vec<f64>,
    mults: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpectral {
    alphas: Vec<f64>,
    mults: Vec<usize>,
}

impl<'de> Deserialize<'de> for SpectralData {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSpectral::deserialize(d)?;
        SpectralData::new(raw.alphas, raw.mults).map_err(serde::de::Error::custom)
    }
}

impl SpectralData {
    pub fn new(alphas: Vec<f64>, mults: Vec<usize>) -> Result<Self> {
        if alphas.len() != mults.len() {
            return Err(Error::InvalidSpectral(format!(
                "{} exponents but {} multiplicities",
                alphas.len(),
                mults.len()
            )));
        }
        for (i, &a) in alphas.iter().enumerate() {
            if !a.is_finite() || a <= 0.0 {
                return Err(Error::InvalidSpectral(format!("exponent {i} is {a}")));
            }
            if i > 0 && a <= alphas[i - 1] {
                return Err(Error::InvalidSpectral(format!(
                    "exponents not strictly increasing at index {i}"
                )));
            }
        }
        if let Some(i) = mults.iter().position(|&n| n == 0) {
            return Err(Error::InvalidSpectral(format!("multiplicity {i} is zero")));
        }
        Ok(SpectralData { alphas, mults })
    }

    /// Spectral data with no blocks, used for a missing upper boundary.
    pub fn empty() -> Self {
        SpectralData { alphas: vec![], mults: vec![] }
    }

    /// One block per exponent, each of multiplicity one.
    pub fn simple(alphas: &[f64]) -> Result<Self> {
        Self::new(alphas.to_vec(), vec![1; alphas.len()])
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn mults(&self) -> &[usize] {
        &self.mults
    }

    pub fn rank(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn alpha(&self, i: usize) -> f64 {
        self.alphas[i]
    }

    pub fn total_dim(&self) -> usize {
        self.mults.iter().sum()
    }

    /// Sum of `α_i n_i`, the homogeneous dimension exponent of Lebesgue measure.
    pub fn homogeneous_dim(&self) -> f64 {
        self.alphas.iter().zip(&self.mults).map(|(a, &n)| a * n as f64).sum()
    }

    /// Spectral data of the quotient by the first block.
    pub fn quotient(&self) -> SpectralData {
        SpectralData {
            alphas: self.alphas[1..].to_vec(),
            mults: self.mults[1..].to_vec(),
        }
    }

    pub fn zero(&self) -> BlockPoint {
        BlockPoint::new(self.mults.iter().map(|&n| vec![0.0; n]).collect())
    }

    pub fn check(&self, p: &BlockPoint) -> Result<()> {
        let ok = p.blocks.len() == self.rank()
            && p.blocks.iter().zip(&self.mults).all(|(b, &n)| b.len() == n);
        if ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: format!("{:?}", self.mults),
                got: format!("{:?}", p.blocks.iter().map(Vec::len).collect::<Vec<_>>()),
            })
        }
    }

    /// Rebuild a point from a flat coordinate vector.
    pub fn unflatten(&self, flat: &[f64]) -> BlockPoint {
        let mut blocks = Vec::with_capacity(self.rank());
        let mut k = 0;
        for &n in &self.mults {
            blocks.push(flat[k..k + n].to_vec());
            k += n;
        }
        BlockPoint::new(blocks)
    }
}

/// A point of `R^{n_1} x ... x R^{n_r}` stored block by block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BlockPoint {
    pub blocks: Vec<Vec<f64>>,
}

impl BlockPoint {
    pub fn new(blocks: Vec<Vec<f64>>) -> Self {
        BlockPoint { blocks }
    }

    /// Point with scalar blocks.
    pub fn scalars(xs: &[f64]) -> Self {
        BlockPoint::new(xs.iter().map(|&x| vec![x]).collect())
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.blocks[i]
    }

    pub fn flat(&self) -> Vec<f64> {
        self.blocks.iter().flatten().copied().collect()
    }

    pub fn sub(&self, other: &BlockPoint) -> BlockPoint {
        BlockPoint::new(
            self.blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect(),
        )
    }

    pub fn add(&self, other: &BlockPoint) -> BlockPoint {
        BlockPoint::new(
            self.blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
        )
    }

    /// Split off the first block, returning `(x, y)`.
    pub fn split_first(&self) -> (Vec<f64>, BlockPoint) {
        (self.blocks[0].clone(), BlockPoint::new(self.blocks[1..].to_vec()))
    }

    pub fn join_first(x: Vec<f64>, y: &BlockPoint) -> BlockPoint {
        let mut blocks = vec![x];
        blocks.extend(y.blocks.iter().cloned());
        BlockPoint::new(blocks)
    }

    pub fn is_finite(&self) -> bool {
        self.blocks.iter().flatten().all(|x| x.is_finite())
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Anything that maps block points to block points.
pub trait PointMap {
    fn apply(&self, p: &BlockPoint) -> BlockPoint;
}

impl<F: Fn(&BlockPoint) -> BlockPoint> PointMap for F {
    fn apply(&self, p: &BlockPoint) -> BlockPoint {
        self(p)
    }
}
