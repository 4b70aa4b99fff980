//! Maps that are similarities on the first block, fibred over the quotient:
//! `(x, y) ↦ (λ(y) A(y)(x + B(y)), g(y))`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::blockmap::BlockMap;
use super::expr::{Certificate, FuncExpr};
use crate::error::{Error, Result};
use crate::quasimetric::distance_unchecked;
use crate::sampling::{uniform_point, SampleRng};
use crate::space::{BlockPoint, PointMap, SpectralData};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FiberSimilarity {
    spec: SpectralData,
    /// `λ(y)`, scalar; reads blocks `1..r` of the full point.
    scale: FuncExpr,
    /// `A(y)` row-major, `n_1 * n_1` entries.
    rotation: FuncExpr,
    /// `B(y)`, `n_1` entries.
    shift: FuncExpr,
    /// `g` on the quotient, with quotient block numbering.
    quotient: BlockMap,
    quotient_stretch: f64,
}

impl FiberSimilarity {
    pub fn new(
        spec: SpectralData,
        scale: FuncExpr,
        rotation: FuncExpr,
        shift: FuncExpr,
        quotient: BlockMap,
        quotient_stretch: f64,
    ) -> Result<Self> {
        if spec.rank() < 2 {
            return Err(Error::Domain("fibred similarities need at least two blocks".into()));
        }
        let n1 = spec.mults()[0];
        for (e, d, what) in [(&scale, 1, "scale"), (&rotation, n1 * n1, "rotation"), (&shift, n1, "shift")] {
            let got = e.dim(spec.mults())?;
            if got != d {
                return Err(Error::DimensionMismatch { expected: format!("{what} of dimension {d}"), got: got.to_string() });
            }
            if e.depends_on().contains(&0) {
                return Err(Error::NotTriangular { component: 0, block: 0 });
            }
        }
        if quotient.spec() != &spec.quotient() {
            return Err(Error::DimensionMismatch {
                expected: format!("{:?}", spec.quotient()),
                got: format!("{:?}", quotient.spec()),
            });
        }
        if !(quotient_stretch > 0.0) {
            return Err(Error::Domain("quotient stretch must be positive".into()));
        }
        Ok(FiberSimilarity { spec, scale, rotation, shift, quotient, quotient_stretch })
    }

    pub fn spec(&self) -> &SpectralData {
        &self.spec
    }

    pub fn quotient_stretch(&self) -> f64 {
        self.quotient_stretch
    }

    pub fn quotient_map(&self) -> &BlockMap {
        &self.quotient
    }

    pub fn scale_certificate(&self) -> Certificate {
        self.scale.certificate(self.spec.mults())
    }

    fn lift(&self, y: &BlockPoint) -> BlockPoint {
        BlockPoint::join_first(vec![0.0; self.spec.mults()[0]], y)
    }

    pub fn lambda_at(&self, y: &BlockPoint) -> f64 {
        self.scale.eval(&self.lift(y))[0]
    }

    pub fn rotation_at(&self, y: &BlockPoint) -> DMatrix<f64> {
        let n = self.spec.mults()[0];
        DMatrix::from_row_slice(n, n, &self.rotation.eval(&self.lift(y)))
    }

    pub fn shift_at(&self, y: &BlockPoint) -> DVector<f64> {
        DVector::from_vec(self.shift.eval(&self.lift(y)))
    }

    /// `λ_y / t_g^{α_1}`.
    pub fn eta_at(&self, y: &BlockPoint) -> f64 {
        self.lambda_at(y) / self.quotient_stretch.powf(self.spec.alpha(0))
    }

    /// Block form of the map; `A(y) v` is spelled out with products of entries.
    pub fn to_block_map(&self) -> BlockMap {
        use super::expr::{project, sum};
        let n = self.spec.mults()[0];
        let v = sum(vec![project(0), self.shift.clone()]);
        let rows: Vec<FuncExpr> = (0..n)
            .map(|k| {
                sum((0..n)
                    .map(|j| FuncExpr::Mul {
                        terms: vec![
                            FuncExpr::Pick { index: k * n + j, arg: Box::new(self.rotation.clone()) },
                            FuncExpr::Pick { index: j, arg: Box::new(v.clone()) },
                        ],
                    })
                    .collect())
            })
            .collect();
        let first = FuncExpr::Mul { terms: vec![self.scale.clone(), FuncExpr::Concat { parts: rows }] };
        let mut comps = vec![first];
        comps.extend(self.quotient.shifted_components(1));
        BlockMap::new(self.spec.clone(), comps).expect("fibred similarity is triangular")
    }
}

impl PointMap for FiberSimilarity {
    fn apply(&self, p: &BlockPoint) -> BlockPoint {
        let (x, y) = p.split_first();
        let v = DVector::from_vec(x) + self.shift_at(&y);
        let out = self.rotation_at(&y) * v * self.lambda_at(&y);
        BlockPoint::join_first(out.iter().copied().collect(), &self.quotient.apply(&y))
    }
}

/// Outcome of the rotation rigidity search.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum RigidityVerdict {
    /// Rotations agree on all sampled quotient pairs.
    Pass { max_gap: f64 },
    /// Explicit pair of points whose distance is stretched by more than `K`.
    Witness { p: BlockPoint, p_prime: BlockPoint, ratio: f64, gap: f64 },
    /// Rotations differ but the constructed pair did not exceed `K`.
    Inconclusive { max_gap: f64, ratio: f64 },
}

/// Rotations differing by less than this count as equal.
pub const ROTATION_GAP_TOL: f64 = 1e-8;

/// Search for a pair `(x, y), (x', y')` whose distance `G` stretches by more than `k`.
///
/// Picks the sampled quotient pair with the largest rotation gap, aligns `z` with the
/// top singular direction of `λ_y A_y - λ_{y'} A_{y'}`, and sets `x = z - B_y`,
/// `x' = z - B_{y'}` so that the first-block images differ by a multiple of `z`.
pub fn rotation_rigidity_witness(
    g: &FiberSimilarity,
    k: f64,
    radius: f64,
    samples: usize,
    rng: &mut SampleRng,
) -> Result<RigidityVerdict> {
    let q = g.spec.quotient();
    let ys: Vec<BlockPoint> = (0..samples.max(2)).map(|_| uniform_point(&q, rng, radius)).collect();
    let rots: Vec<DMatrix<f64>> = ys.iter().map(|y| g.rotation_at(y)).collect();
    let mut best = (0.0, 0, 0);
    for a in 0..ys.len() {
        for b in (a + 1)..ys.len() {
            let gap = (&rots[a] - &rots[b]).norm();
            if gap > best.0 {
                best = (gap, a, b);
            }
        }
    }
    let (gap, a, b) = best;
    if gap <= ROTATION_GAP_TOL {
        return Ok(RigidityVerdict::Pass { max_gap: gap });
    }
    let (y, yp) = (&ys[a], &ys[b]);
    let m = &rots[a] * g.lambda_at(y) - &rots[b] * g.lambda_at(yp);
    let svd = m.clone().svd(false, true);
    let (imax, sigma) = svd.singular_values.iter().enumerate().fold((0, 0.0), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
    let vt = svd.v_t.expect("requested right singular vectors");
    let dir: DVector<f64> = vt.row(imax).transpose();
    let (by, byp) = (g.shift_at(y), g.shift_at(yp));
    let alpha1 = g.spec.alpha(0);
    // input distance does not depend on z
    let offset = BlockPoint::join_first((&byp - &by).iter().copied().collect(), y);
    let base = BlockPoint::join_first(vec![0.0; by.len()], yp);
    let d_in = distance_unchecked(&g.spec, &offset, &base);
    let znorm = 2.0 * (k * d_in).powf(alpha1) / sigma;
    let z = dir * znorm;
    let p = BlockPoint::join_first((&z - &by).iter().copied().collect(), y);
    let pp = BlockPoint::join_first((&z - &byp).iter().copied().collect(), yp);
    let d0 = distance_unchecked(&g.spec, &p, &pp);
    let d1 = distance_unchecked(&g.spec, &g.apply(&p), &g.apply(&pp));
    let ratio = d1 / d0;
    if ratio > k {
        Ok(RigidityVerdict::Witness { p, p_prime: pp, ratio, gap })
    } else {
        Ok(RigidityVerdict::Inconclusive { max_gap: gap, ratio })
    }
}
