//! Expression trees for block components, with certificates and exact evaluation.
//!
//! Inputs are block points; `Project { block }` reads one block (0-based).
//! Vector nodes act componentwise. JSON form is tagged by `"op"`.

use std::collections::BTreeSet;

use num::{BigInt, BigRational, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::BlockPoint;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum FuncExpr {
    Const { value: Vec<f64> },
    Project { block: usize },
    Pick { index: usize, arg: Box<FuncExpr> },
    Concat { parts: Vec<FuncExpr> },
    Linear { matrix: Vec<Vec<f64>>, arg: Box<FuncExpr> },
    Sum { terms: Vec<FuncExpr> },
    /// Componentwise product; scalar terms broadcast.
    Mul { terms: Vec<FuncExpr> },
    Scale { factor: f64, arg: Box<FuncExpr> },
    /// `|u|^c` componentwise.
    AbsPow { exponent: f64, arg: Box<FuncExpr> },
    Min { terms: Vec<FuncExpr> },
    Max { terms: Vec<FuncExpr> },
    Clamp { lo: f64, hi: f64, arg: Box<FuncExpr> },
    /// Piecewise-linear table, linearly extrapolated, or wrapped when `period` is set.
    Pwl {
        knots: Vec<f64>,
        values: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        period: Option<f64>,
        arg: Box<FuncExpr>,
    },
    Sin { arg: Box<FuncExpr> },
    Cos { arg: Box<FuncExpr> },
    Exp { arg: Box<FuncExpr> },
    /// Bilinear table over scalar arguments `(x, y)`; rows are indexed by `ys`.
    /// Linear extrapolation in `x`, clamped in `y`.
    Table2 {
        xs: Vec<f64>,
        ys: Vec<f64>,
        values: Vec<f64>,
        x: Box<FuncExpr>,
        y: Box<FuncExpr>,
    },
}

/// Lipschitz bound (Euclidean in, Euclidean out) and sup-norm bound of an expression.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub lipschitz: f64,
    pub sup: f64,
}

use FuncExpr::*;

pub fn constant(value: Vec<f64>) -> FuncExpr {
    Const { value }
}

pub fn project(block: usize) -> FuncExpr {
    Project { block }
}

pub fn coord(block: usize, index: usize) -> FuncExpr {
    Pick { index, arg: Box::new(Project { block }) }
}

pub fn sum(terms: Vec<FuncExpr>) -> FuncExpr {
    Sum { terms }
}

pub fn scale(factor: f64, arg: FuncExpr) -> FuncExpr {
    Scale { factor, arg: Box::new(arg) }
}

pub fn linear(matrix: Vec<Vec<f64>>, arg: FuncExpr) -> FuncExpr {
    Linear { matrix, arg: Box::new(arg) }
}

pub fn pwl(knots: Vec<f64>, values: Vec<f64>, arg: FuncExpr) -> FuncExpr {
    Pwl { knots, values, period: None, arg: Box::new(arg) }
}

pub fn periodic_pwl(knots: Vec<f64>, values: Vec<f64>, arg: FuncExpr) -> FuncExpr {
    let period = knots[knots.len() - 1] - knots[0];
    Pwl { knots, values, period: Some(period), arg: Box::new(arg) }
}

pub fn sin(arg: FuncExpr) -> FuncExpr {
    Sin { arg: Box::new(arg) }
}

pub fn cos(arg: FuncExpr) -> FuncExpr {
    Cos { arg: Box::new(arg) }
}

pub fn exp(arg: FuncExpr) -> FuncExpr {
    Exp { arg: Box::new(arg) }
}

fn bad<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidExpr(msg.into()))
}

fn locate(knots: &[f64], u: f64) -> usize {
    // index k of the segment [knots[k], knots[k+1]] used for u
    let n = knots.len();
    if u <= knots[0] {
        return 0;
    }
    if u >= knots[n - 1] {
        return n - 2;
    }
    match knots.binary_search_by(|k| k.partial_cmp(&u).unwrap()) {
        Ok(k) => k.min(n - 2),
        Err(k) => k - 1,
    }
}

fn pwl_eval(knots: &[f64], values: &[f64], period: Option<f64>, u: f64) -> f64 {
    let u = match period {
        Some(p) => knots[0] + (u - knots[0]).rem_euclid(p),
        None => u,
    };
    let k = locate(knots, u);
    let (x0, x1, v0, v1) = (knots[k], knots[k + 1], values[k], values[k + 1]);
    v0 + (v1 - v0) * (u - x0) / (x1 - x0)
}

fn table2_eval(xs: &[f64], ys: &[f64], values: &[f64], x: f64, y: f64) -> f64 {
    let nx = xs.len();
    let row = |j: usize| pwl_eval(xs, &values[j * nx..(j + 1) * nx], None, x);
    if ys.len() == 1 || y <= ys[0] {
        return row(0);
    }
    if y >= ys[ys.len() - 1] {
        return row(ys.len() - 1);
    }
    let j = locate(ys, y);
    let f = (y - ys[j]) / (ys[j + 1] - ys[j]);
    row(j) * (1.0 - f) + row(j + 1) * f
}

fn broadcast<T: Clone>(v: &[T], i: usize) -> T {
    if v.len() == 1 {
        v[0].clone()
    } else {
        v[i].clone()
    }
}

fn max_slope(knots: &[f64], values: &[f64]) -> f64 {
    knots
        .windows(2)
        .zip(values.windows(2))
        .map(|(k, v)| ((v[1] - v[0]) / (k[1] - k[0])).abs())
        .fold(0.0, f64::max)
}

fn mul_inf(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

impl FuncExpr {
    fn children(&self) -> Vec<&FuncExpr> {
        match self {
            Const { .. } | Project { .. } => vec![],
            Pick { arg, .. }
            | Linear { arg, .. }
            | Scale { arg, .. }
            | AbsPow { arg, .. }
            | Clamp { arg, .. }
            | Pwl { arg, .. }
            | Sin { arg }
            | Cos { arg }
            | Exp { arg } => vec![arg],
            Concat { parts: terms } | Sum { terms } | Mul { terms } | Min { terms } | Max { terms } => {
                terms.iter().collect()
            }
            Table2 { x, y, .. } => vec![x, y],
        }
    }

    fn map_children(&self, f: &mut dyn FnMut(&FuncExpr) -> FuncExpr) -> FuncExpr {
        let b = |f: &mut dyn FnMut(&FuncExpr) -> FuncExpr, a: &FuncExpr| Box::new(f(a));
        match self {
            Const { .. } | Project { .. } => self.clone(),
            Pick { index, arg } => Pick { index: *index, arg: b(f, arg) },
            Concat { parts } => Concat { parts: parts.iter().map(|t| f(t)).collect() },
            Linear { matrix, arg } => Linear { matrix: matrix.clone(), arg: b(f, arg) },
            Sum { terms } => Sum { terms: terms.iter().map(|t| f(t)).collect() },
            Mul { terms } => Mul { terms: terms.iter().map(|t| f(t)).collect() },
            Scale { factor, arg } => Scale { factor: *factor, arg: b(f, arg) },
            AbsPow { exponent, arg } => AbsPow { exponent: *exponent, arg: b(f, arg) },
            Min { terms } => Min { terms: terms.iter().map(|t| f(t)).collect() },
            Max { terms } => Max { terms: terms.iter().map(|t| f(t)).collect() },
            Clamp { lo, hi, arg } => Clamp { lo: *lo, hi: *hi, arg: b(f, arg) },
            Pwl { knots, values, period, arg } => Pwl {
                knots: knots.clone(),
                values: values.clone(),
                period: *period,
                arg: b(f, arg),
            },
            Sin { arg } => Sin { arg: b(f, arg) },
            Cos { arg } => Cos { arg: b(f, arg) },
            Exp { arg } => Exp { arg: b(f, arg) },
            Table2 { xs, ys, values, x, y } => Table2 {
                xs: xs.clone(),
                ys: ys.clone(),
                values: values.clone(),
                x: b(f, x),
                y: b(f, y),
            },
        }
    }

    /// Output dimension, validating the tree against block sizes `mults`.
    pub fn dim(&self, mults: &[usize]) -> Result<usize> {
        let same = |terms: &[FuncExpr], what: &str| -> Result<usize> {
            if terms.is_empty() {
                return bad(format!("{what} with no terms"));
            }
            let d = terms[0].dim(mults)?;
            for t in &terms[1..] {
                if t.dim(mults)? != d {
                    return bad(format!("{what} terms of unequal dimension"));
                }
            }
            Ok(d)
        };
        match self {
            Const { value } => {
                if value.iter().any(|v| !v.is_finite()) {
                    return bad("non-finite constant");
                }
                Ok(value.len())
            }
            Project { block } => mults
                .get(*block)
                .copied()
                .ok_or_else(|| Error::InvalidExpr(format!("block {block} out of range"))),
            Pick { index, arg } => {
                if *index < arg.dim(mults)? {
                    Ok(1)
                } else {
                    bad(format!("pick index {index} out of range"))
                }
            }
            Concat { parts } => parts.iter().map(|p| p.dim(mults)).sum(),
            Linear { matrix, arg } => {
                let d = arg.dim(mults)?;
                if matrix.iter().any(|row| row.len() != d) {
                    return bad("linear map rows do not match argument dimension");
                }
                if matrix.iter().flatten().any(|v| !v.is_finite()) {
                    return bad("non-finite matrix entry");
                }
                Ok(matrix.len())
            }
            Sum { terms } => same(terms, "sum"),
            Min { terms } => same(terms, "min"),
            Max { terms } => same(terms, "max"),
            Mul { terms } => {
                if terms.is_empty() {
                    return bad("product with no terms");
                }
                let dims: Vec<usize> = terms.iter().map(|t| t.dim(mults)).collect::<Result<_>>()?;
                let d = *dims.iter().max().unwrap();
                if dims.iter().any(|&k| k != d && k != 1) {
                    return bad("product terms must share a dimension or be scalar");
                }
                Ok(d)
            }
            Scale { factor, arg } => {
                if !factor.is_finite() {
                    return bad("non-finite scale");
                }
                arg.dim(mults)
            }
            AbsPow { exponent, arg } => {
                if !(*exponent > 0.0) || !exponent.is_finite() {
                    return bad("power exponent must be positive");
                }
                arg.dim(mults)
            }
            Clamp { lo, hi, arg } => {
                if !(lo <= hi) {
                    return bad("clamp with lo > hi");
                }
                arg.dim(mults)
            }
            Pwl { knots, values, period, arg } => {
                if knots.len() < 2 || knots.len() != values.len() {
                    return bad("piecewise-linear table needs at least two knots and matching values");
                }
                if knots.windows(2).any(|w| !(w[0] < w[1])) {
                    return bad("knots must be strictly increasing");
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return bad("non-finite table value");
                }
                if let Some(p) = period {
                    let span = knots[knots.len() - 1] - knots[0];
                    if (span - p).abs() > 1e-12 * p.abs().max(1.0) || values[0] != values[values.len() - 1] {
                        return bad("periodic table must span one period and close up");
                    }
                }
                arg.dim(mults)
            }
            Sin { arg } | Cos { arg } | Exp { arg } => arg.dim(mults),
            Table2 { xs, ys, values, x, y } => {
                if xs.len() < 2 || ys.is_empty() || values.len() != xs.len() * ys.len() {
                    return bad("table shape mismatch");
                }
                if xs.windows(2).any(|w| !(w[0] < w[1])) || ys.windows(2).any(|w| !(w[0] < w[1])) {
                    return bad("table axes must be strictly increasing");
                }
                if x.dim(mults)? != 1 || y.dim(mults)? != 1 {
                    return bad("table arguments must be scalar");
                }
                Ok(1)
            }
        }
    }

    /// Blocks read anywhere in the tree.
    pub fn depends_on(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect_blocks(&mut out);
        out
    }

    fn collect_blocks(&self, out: &mut BTreeSet<usize>) {
        if let Project { block } = self {
            out.insert(*block);
        }
        for c in self.children() {
            c.collect_blocks(out);
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Project { .. } => false,
            _ => self.children().iter().all(|c| c.is_constant()),
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().iter().map(|c| c.node_count()).sum::<usize>()
    }

    pub fn eval(&self, p: &BlockPoint) -> Vec<f64> {
        match self {
            Const { value } => value.clone(),
            Project { block } => p.blocks[*block].clone(),
            Pick { index, arg } => vec![arg.eval(p)[*index]],
            Concat { parts } => parts.iter().flat_map(|t| t.eval(p)).collect(),
            Linear { matrix, arg } => {
                let v = arg.eval(p);
                matrix.iter().map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum()).collect()
            }
            Sum { terms } => {
                let mut acc = terms[0].eval(p);
                for t in &terms[1..] {
                    for (a, b) in acc.iter_mut().zip(t.eval(p)) {
                        *a += b;
                    }
                }
                acc
            }
            Mul { terms } => {
                let vals: Vec<Vec<f64>> = terms.iter().map(|t| t.eval(p)).collect();
                let d = vals.iter().map(Vec::len).max().unwrap();
                (0..d).map(|i| vals.iter().map(|v| broadcast(v, i)).product()).collect()
            }
            Scale { factor, arg } => arg.eval(p).into_iter().map(|x| factor * x).collect(),
            AbsPow { exponent, arg } => arg.eval(p).into_iter().map(|x| x.abs().powf(*exponent)).collect(),
            Min { terms } => {
                let mut acc = terms[0].eval(p);
                for t in &terms[1..] {
                    for (a, b) in acc.iter_mut().zip(t.eval(p)) {
                        *a = a.min(b);
                    }
                }
                acc
            }
            Max { terms } => {
                let mut acc = terms[0].eval(p);
                for t in &terms[1..] {
                    for (a, b) in acc.iter_mut().zip(t.eval(p)) {
                        *a = a.max(b);
                    }
                }
                acc
            }
            Clamp { lo, hi, arg } => arg.eval(p).into_iter().map(|x| x.clamp(*lo, *hi)).collect(),
            Pwl { knots, values, period, arg } => {
                arg.eval(p).into_iter().map(|u| pwl_eval(knots, values, *period, u)).collect()
            }
            Sin { arg } => arg.eval(p).into_iter().map(f64::sin).collect(),
            Cos { arg } => arg.eval(p).into_iter().map(f64::cos).collect(),
            Exp { arg } => arg.eval(p).into_iter().map(f64::exp).collect(),
            Table2 { xs, ys, values, x, y } => {
                vec![table2_eval(xs, ys, values, x.eval(p)[0], y.eval(p)[0])]
            }
        }
    }

    /// Lipschitz and sup-norm bounds derived from the tree structure.
    pub fn certificate(&self, mults: &[usize]) -> Certificate {
        let dim = self.dim(mults).unwrap_or(1) as f64;
        let root = dim.sqrt();
        let inf = f64::INFINITY;
        match self {
            Const { value } => Certificate { lipschitz: 0.0, sup: value.iter().map(|v| v * v).sum::<f64>().sqrt() },
            Project { .. } => Certificate { lipschitz: 1.0, sup: inf },
            Pick { arg, .. } => arg.certificate(mults),
            Concat { parts } => {
                let cs: Vec<Certificate> = parts.iter().map(|t| t.certificate(mults)).collect();
                Certificate {
                    lipschitz: cs.iter().map(|c| c.lipschitz * c.lipschitz).sum::<f64>().sqrt(),
                    sup: cs.iter().map(|c| c.sup * c.sup).sum::<f64>().sqrt(),
                }
            }
            Linear { matrix, arg } => {
                let fro = matrix.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
                let c = arg.certificate(mults);
                Certificate { lipschitz: mul_inf(fro, c.lipschitz), sup: mul_inf(fro, c.sup) }
            }
            Sum { terms } => {
                let cs = terms.iter().map(|t| t.certificate(mults));
                cs.fold(Certificate { lipschitz: 0.0, sup: 0.0 }, |a, c| Certificate {
                    lipschitz: a.lipschitz + c.lipschitz,
                    sup: a.sup + c.sup,
                })
            }
            Mul { terms } => {
                let cs: Vec<Certificate> = terms.iter().map(|t| t.certificate(mults)).collect();
                let mut lip = 0.0;
                for k in 0..cs.len() {
                    let mut term = cs[k].lipschitz;
                    for (j, c) in cs.iter().enumerate() {
                        if j != k {
                            term = mul_inf(term, c.sup);
                        }
                    }
                    lip += term;
                }
                Certificate { lipschitz: lip, sup: cs.iter().fold(1.0, |a, c| mul_inf(a, c.sup)) }
            }
            Scale { factor, arg } => {
                let c = arg.certificate(mults);
                Certificate { lipschitz: mul_inf(factor.abs(), c.lipschitz), sup: mul_inf(factor.abs(), c.sup) }
            }
            AbsPow { exponent, arg } => {
                let c = arg.certificate(mults);
                let e = *exponent;
                let lipschitz = if e == 1.0 {
                    c.lipschitz
                } else if e > 1.0 && c.sup.is_finite() {
                    mul_inf(e * c.sup.powf(e - 1.0), c.lipschitz)
                } else if c.lipschitz == 0.0 {
                    0.0
                } else {
                    inf
                };
                let sup = if e >= 1.0 { c.sup.powf(e) } else { dim.powf((1.0 - e) / 2.0) * c.sup.powf(e) };
                Certificate { lipschitz, sup }
            }
            Min { terms } | Max { terms } => {
                let cs: Vec<Certificate> = terms.iter().map(|t| t.certificate(mults)).collect();
                Certificate {
                    lipschitz: cs.iter().map(|c| c.lipschitz * c.lipschitz).sum::<f64>().sqrt(),
                    sup: cs.iter().map(|c| c.sup * c.sup).sum::<f64>().sqrt(),
                }
            }
            Clamp { lo, hi, arg } => {
                let c = arg.certificate(mults);
                Certificate { lipschitz: c.lipschitz, sup: c.sup.min(root * lo.abs().max(hi.abs())) }
            }
            Pwl { knots, values, period, arg } => {
                let c = arg.certificate(mults);
                let slope = max_slope(knots, values);
                let vmax = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
                let sup = if period.is_some() {
                    root * vmax
                } else if c.sup.is_finite() {
                    let ends = pwl_eval(knots, values, None, -c.sup).abs().max(pwl_eval(knots, values, None, c.sup).abs());
                    root * vmax.max(ends)
                } else {
                    inf
                };
                Certificate { lipschitz: mul_inf(slope, c.lipschitz), sup }
            }
            Sin { arg } | Cos { arg } => Certificate { lipschitz: arg.certificate(mults).lipschitz, sup: root },
            Exp { arg } => {
                let c = arg.certificate(mults);
                let lipschitz = if c.lipschitz == 0.0 { 0.0 } else { c.sup.exp() * c.lipschitz };
                Certificate { lipschitz, sup: root * c.sup.exp() }
            }
            Table2 { xs, ys, values, x, y } => {
                let (cx, cy) = (x.certificate(mults), y.certificate(mults));
                let nx = xs.len();
                let sx = (0..ys.len())
                    .map(|j| max_slope(xs, &values[j * nx..(j + 1) * nx]))
                    .fold(0.0, f64::max);
                // y-slope at the knots, then growth of the y-slope in the extrapolated x range
                let mut sy: f64 = 0.0;
                let mut end_gap: f64 = 0.0;
                for j in 0..ys.len().saturating_sub(1) {
                    let dy = ys[j + 1] - ys[j];
                    for i in 0..nx {
                        sy = sy.max(((values[(j + 1) * nx + i] - values[j * nx + i]) / dy).abs());
                    }
                    let slope = |r: usize, a: usize, b: usize| (values[r * nx + b] - values[r * nx + a]) / (xs[b] - xs[a]);
                    let l = (slope(j + 1, 0, 1) - slope(j, 0, 1)).abs() / dy;
                    let r = (slope(j + 1, nx - 2, nx - 1) - slope(j, nx - 2, nx - 1)).abs() / dy;
                    end_gap = end_gap.max(l).max(r);
                }
                let overshoot = (cx.sup - xs[nx - 1]).max(xs[0] + cx.sup).max(0.0);
                let sy_total = if end_gap == 0.0 { sy } else { sy + end_gap * overshoot };
                let vmax = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
                let sup = if cx.sup.is_finite() { vmax + sx * overshoot } else { inf };
                Certificate { lipschitz: mul_inf(sx, cx.lipschitz) + mul_inf(sy_total, cy.lipschitz), sup }
            }
        }
    }

    /// Replace every `Project { block: j }` by `blocks[j]`.
    pub fn substitute(&self, blocks: &[FuncExpr]) -> FuncExpr {
        match self {
            Project { block } => blocks[*block].clone(),
            _ => self.map_children(&mut |c| c.substitute(blocks)),
        }
    }

    /// Renumber blocks: `Project { block: j }` becomes `Project { block: j + offset }`.
    pub fn shift_blocks(&self, offset: isize) -> FuncExpr {
        match self {
            Project { block } => Project { block: (*block as isize + offset) as usize },
            _ => self.map_children(&mut |c| c.shift_blocks(offset)),
        }
    }

    /// Constant folding and flattening of sums and scalings.
    pub fn simplify(&self) -> FuncExpr {
        let e = self.map_children(&mut |c| c.simplify());
        if !matches!(e, Const { .. }) && e.is_constant() {
            return Const { value: e.eval(&BlockPoint::new(vec![])) };
        }
        match e {
            Sum { terms } => {
                let mut flat = Vec::new();
                let mut acc: Option<Vec<f64>> = None;
                for t in terms {
                    let parts = match t {
                        Sum { terms } => terms,
                        other => vec![other],
                    };
                    for p in parts {
                        match p {
                            Const { value } => match &mut acc {
                                Some(a) => a.iter_mut().zip(&value).for_each(|(x, y)| *x += y),
                                None => acc = Some(value),
                            },
                            other => flat.push(other),
                        }
                    }
                }
                if let Some(a) = acc {
                    if flat.is_empty() || a.iter().any(|&x| x != 0.0) {
                        flat.push(Const { value: a });
                    }
                }
                if flat.len() == 1 {
                    flat.pop().unwrap()
                } else {
                    Sum { terms: flat }
                }
            }
            Scale { factor, arg } if factor == 1.0 => *arg,
            Scale { factor, arg } => match *arg {
                Scale { factor: g, arg } => Scale { factor: factor * g, arg },
                other => Scale { factor, arg: Box::new(other) },
            },
            other => other,
        }
    }

    /// Exact evaluation over the rationals; `None` when a node leaves the rationals.
    pub fn eval_exact(&self, p: &[Vec<BigRational>]) -> Option<Vec<BigRational>> {
        let q = |x: f64| BigRational::from_float(x);
        Some(match self {
            Const { value } => value.iter().map(|&v| q(v)).collect::<Option<_>>()?,
            Project { block } => p.get(*block)?.clone(),
            Pick { index, arg } => vec![arg.eval_exact(p)?.get(*index)?.clone()],
            Concat { parts } => {
                let mut out = Vec::new();
                for t in parts {
                    out.extend(t.eval_exact(p)?);
                }
                out
            }
            Linear { matrix, arg } => {
                let v = arg.eval_exact(p)?;
                let mut out = Vec::with_capacity(matrix.len());
                for row in matrix {
                    let mut acc = BigRational::zero();
                    for (a, b) in row.iter().zip(&v) {
                        acc += q(*a)? * b;
                    }
                    out.push(acc);
                }
                out
            }
            Sum { terms } => {
                let mut acc = terms[0].eval_exact(p)?;
                for t in &terms[1..] {
                    for (a, b) in acc.iter_mut().zip(t.eval_exact(p)?) {
                        *a += b;
                    }
                }
                acc
            }
            Mul { terms } => {
                let vals: Vec<Vec<BigRational>> = terms.iter().map(|t| t.eval_exact(p)).collect::<Option<_>>()?;
                let d = vals.iter().map(Vec::len).max()?;
                (0..d)
                    .map(|i| vals.iter().fold(BigRational::from_integer(1.into()), |a, v| a * broadcast(v, i)))
                    .collect()
            }
            Scale { factor, arg } => {
                let f = q(*factor)?;
                arg.eval_exact(p)?.into_iter().map(|x| &f * x).collect()
            }
            AbsPow { exponent, arg } => {
                if exponent.fract() != 0.0 || *exponent > 64.0 {
                    return None;
                }
                let e = *exponent as i32;
                arg.eval_exact(p)?.into_iter().map(|x| num::pow::pow(x.abs(), e as usize)).collect()
            }
            Min { terms } => {
                let mut acc = terms[0].eval_exact(p)?;
                for t in &terms[1..] {
                    for (a, b) in acc.iter_mut().zip(t.eval_exact(p)?) {
                        if b < *a {
                            *a = b;
                        }
                    }
                }
                acc
            }
            Max { terms } => {
                let mut acc = terms[0].eval_exact(p)?;
                for t in &terms[1..] {
                    for (a, b) in acc.iter_mut().zip(t.eval_exact(p)?) {
                        if b > *a {
                            *a = b;
                        }
                    }
                }
                acc
            }
            Clamp { lo, hi, arg } => {
                let (lo, hi) = (q(*lo)?, q(*hi)?);
                arg.eval_exact(p)?
                    .into_iter()
                    .map(|x| if x < lo { lo.clone() } else if x > hi { hi.clone() } else { x })
                    .collect()
            }
            Pwl { knots, values, period, arg } => {
                let ks: Vec<BigRational> = knots.iter().map(|&k| q(k)).collect::<Option<_>>()?;
                let vs: Vec<BigRational> = values.iter().map(|&v| q(v)).collect::<Option<_>>()?;
                let per = match period {
                    Some(t) => Some(q(*t)?),
                    None => None,
                };
                arg.eval_exact(p)?.into_iter().map(|u| exact_pwl(&ks, &vs, per.as_ref(), u)).collect()
            }
            Sin { .. } | Cos { .. } | Exp { .. } => return None,
            Table2 { xs, ys, values, x, y } => {
                let xs: Vec<BigRational> = xs.iter().map(|&k| q(k)).collect::<Option<_>>()?;
                let ys: Vec<BigRational> = ys.iter().map(|&k| q(k)).collect::<Option<_>>()?;
                let vs: Vec<BigRational> = values.iter().map(|&v| q(v)).collect::<Option<_>>()?;
                let (xv, yv) = (x.eval_exact(p)?.pop()?, y.eval_exact(p)?.pop()?);
                let nx = xs.len();
                let row = |j: usize| exact_pwl(&xs, &vs[j * nx..(j + 1) * nx], None, xv.clone());
                let out = if ys.len() == 1 || yv <= ys[0] {
                    row(0)
                } else if yv >= ys[ys.len() - 1] {
                    row(ys.len() - 1)
                } else {
                    let j = exact_locate(&ys, &yv);
                    let f = (&yv - &ys[j]) / (&ys[j + 1] - &ys[j]);
                    row(j) * (BigRational::from_integer(1.into()) - &f) + row(j + 1) * f
                };
                vec![out]
            }
        })
    }
}

fn exact_locate(knots: &[BigRational], u: &BigRational) -> usize {
    let n = knots.len();
    if *u <= knots[0] {
        return 0;
    }
    if *u >= knots[n - 1] {
        return n - 2;
    }
    match knots.binary_search(u) {
        Ok(k) => k.min(n - 2),
        Err(k) => k - 1,
    }
}

fn exact_pwl(ks: &[BigRational], vs: &[BigRational], period: Option<&BigRational>, u: BigRational) -> BigRational {
    let u = match period {
        Some(t) => {
            let shifted = (&u - &ks[0]) / t;
            let fl: BigInt = shifted.floor().to_integer();
            u - t * BigRational::from_integer(fl)
        }
        None => u,
    };
    let k = exact_locate(ks, &u);
    &vs[k] + (&vs[k + 1] - &vs[k]) * (&u - &ks[k]) / (&ks[k + 1] - &ks[k])
}

/// Convert an exact vector back to floats.
pub fn to_f64(v: &[BigRational]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()
}
