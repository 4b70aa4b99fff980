use serde::{Deserialize, Serialize};

use super::diff::fd_step;
use super::expr::{project, sum, FuncExpr};
use crate::error::{Error, Result};
use crate::space::{BlockPoint, PointMap, SpectralData};

/// Block-triangular map: component `i` reads only blocks `i..r` (0-based).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockMap {
    spec: SpectralData,
    components: Vec<FuncExpr>,
}

/// JSON bundle `{"spec": ..., "components": [...]}`.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MapBundle {
    spec: SpectralData,
    components: Vec<FuncExpr>,
}

impl<'de> Deserialize<'de> for BlockMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let b = MapBundle::deserialize(d)?;
        BlockMap::new(b.spec, b.components).map_err(serde::de::Error::custom)
    }
}

impl BlockMap {
    pub fn new(spec: SpectralData, components: Vec<FuncExpr>) -> Result<Self> {
        if components.len() != spec.rank() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} components", spec.rank()),
                got: format!("{}", components.len()),
            });
        }
        for (i, c) in components.iter().enumerate() {
            let d = c.dim(spec.mults())?;
            if d != spec.mults()[i] {
                return Err(Error::DimensionMismatch {
                    expected: format!("component {i} of dimension {}", spec.mults()[i]),
                    got: d.to_string(),
                });
            }
            if let Some(&j) = c.depends_on().iter().find(|&&j| j < i) {
                return Err(Error::NotTriangular { component: i, block: j });
            }
        }
        Ok(BlockMap { spec, components })
    }

    pub fn identity(spec: &SpectralData) -> Self {
        BlockMap { spec: spec.clone(), components: (0..spec.rank()).map(project).collect() }
    }

    pub fn spec(&self) -> &SpectralData {
        &self.spec
    }

    pub fn components(&self) -> &[FuncExpr] {
        &self.components
    }

    pub fn evaluate(&self, p: &BlockPoint) -> Result<BlockPoint> {
        self.spec.check(p)?;
        Ok(self.apply(p))
    }

    /// `self ∘ inner`, by substituting the components of `inner`.
    pub fn compose(&self, inner: &BlockMap) -> Result<BlockMap> {
        if self.spec != inner.spec {
            return Err(Error::DimensionMismatch {
                expected: format!("{:?}", self.spec),
                got: format!("{:?}", inner.spec),
            });
        }
        let components = self
            .components
            .iter()
            .map(|c| c.substitute(&inner.components).simplify())
            .collect();
        Ok(BlockMap { spec: self.spec.clone(), components })
    }

    /// Add `offset` to every block index; used to embed quotient maps.
    pub(crate) fn shifted_components(&self, offset: isize) -> Vec<FuncExpr> {
        self.components.iter().map(|c| c.shift_blocks(offset)).collect()
    }

    /// The map induced on the quotient by the first block.
    pub fn quotient(&self) -> Result<BlockMap> {
        if self.spec.rank() < 2 {
            return Err(Error::Domain("quotient needs at least two blocks".into()));
        }
        let components = self.components[1..].iter().map(|c| c.shift_blocks(-1)).collect();
        Ok(BlockMap { spec: self.spec.quotient(), components })
    }

    /// Solve `self(x) = u` block by block from the last block down.
    pub fn invert_point(&self, u: &BlockPoint) -> Result<BlockPoint> {
        self.spec.check(u)?;
        let mut x = self.spec.zero();
        for i in (0..self.spec.rank()).rev() {
            let sol = solve_block(&self.components[i], &mut x, i, &u.blocks[i])?;
            x.blocks[i] = sol;
        }
        Ok(x)
    }

    /// Maps whose components are identity except the first.
    pub fn first_block_map(spec: &SpectralData, first: FuncExpr) -> Result<BlockMap> {
        let mut components = vec![first];
        components.extend((1..spec.rank()).map(project));
        BlockMap::new(spec.clone(), components)
    }
}

impl PointMap for BlockMap {
    fn apply(&self, p: &BlockPoint) -> BlockPoint {
        BlockPoint::new(self.components.iter().map(|c| c.eval(p)).collect())
    }
}

fn residual(c: &FuncExpr, x: &BlockPoint, target: &[f64]) -> Vec<f64> {
    c.eval(x).iter().zip(target).map(|(a, b)| a - b).collect()
}

fn rnorm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn solve_block(c: &FuncExpr, x: &mut BlockPoint, i: usize, target: &[f64]) -> Result<Vec<f64>> {
    let scale = 1.0 + rnorm(target);
    let tol = 1e-14 * scale;
    if target.len() == 1 {
        return solve_scalar(c, x, i, target[0], tol);
    }
    x.blocks[i] = target.to_vec();
    let n = target.len();
    let mut r = residual(c, x, target);
    for _ in 0..200 {
        if rnorm(&r) <= tol {
            return Ok(x.blocks[i].clone());
        }
        let mut jac = nalgebra::DMatrix::zeros(n, n);
        for k in 0..n {
            let h = fd_step(x.blocks[i][k]);
            let orig = x.blocks[i][k];
            x.blocks[i][k] = orig + h;
            let fp = c.eval(x);
            x.blocks[i][k] = orig - h;
            let fm = c.eval(x);
            x.blocks[i][k] = orig;
            for row in 0..n {
                jac[(row, k)] = (fp[row] - fm[row]) / (2.0 * h);
            }
        }
        let step = jac
            .lu()
            .solve(&nalgebra::DVector::from_column_slice(&r))
            .ok_or_else(|| Error::Domain("singular block Jacobian during inversion".into()))?;
        let base = x.blocks[i].clone();
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            x.blocks[i] = base.iter().zip(step.iter()).map(|(a, s)| a - lambda * s).collect();
            let rn = residual(c, x, target);
            if rnorm(&rn) < rnorm(&r) {
                r = rn;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            x.blocks[i] = base;
            break;
        }
    }
    if rnorm(&r) <= 1e-10 * scale {
        Ok(x.blocks[i].clone())
    } else {
        Err(Error::NoConvergence { iters: 200, residual: rnorm(&r) })
    }
}

fn solve_scalar(c: &FuncExpr, x: &mut BlockPoint, i: usize, target: f64, tol: f64) -> Result<Vec<f64>> {
    let f = |v: f64, x: &mut BlockPoint| {
        x.blocks[i][0] = v;
        c.eval(x)[0] - target
    };
    // bracket the root by expanding around the target
    let mut a = target;
    let mut fa = f(a, x);
    if fa == 0.0 {
        return Ok(vec![a]);
    }
    let mut step = 1.0 + target.abs();
    let mut b = a;
    let mut fb = fa;
    let mut found = false;
    for _ in 0..200 {
        for cand in [a - step, a + step] {
            let fc = f(cand, x);
            if fc == 0.0 {
                return Ok(vec![cand]);
            }
            if fc.signum() != fa.signum() {
                b = cand;
                fb = fc;
                found = true;
                break;
            }
        }
        if found {
            break;
        }
        step *= 2.0;
    }
    if !found {
        return Err(Error::NoConvergence { iters: 200, residual: fa.abs() });
    }
    if a > b {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    // regula falsi with bisection safeguard
    for it in 0..300 {
        let m = if it % 2 == 0 { a - fa * (b - a) / (fb - fa) } else { 0.5 * (a + b) };
        let m = if m > a && m < b { m } else { 0.5 * (a + b) };
        let fm = f(m, x);
        if fm.abs() <= tol || (b - a) <= 1e-15 * (1.0 + m.abs()) {
            return Ok(vec![m]);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
    }
    Ok(vec![0.5 * (a + b)])
}

/// `x_i + shift` as an expression, used when building almost translations.
pub(crate) fn translate_expr(block: usize, shift: FuncExpr) -> FuncExpr {
    sum(vec![project(block), shift]).simplify()
}
