//! Determinant-one SPD matrices as conformal classes: the `GL` action, the `k` and `d`
//! metrics, circumcenters, invariant foliated structures and conformality defects.
//!
//! The action is `X[A] = |det X|^{-2/n} Xᵀ A X`, a right action: `(XY)[A] = Y[X[A]]`.
//! With `μ_F(p) = f'(p)[I]` this gives the cocycle `μ_{F∘G}(p) = g'(p)[μ_F(G p)]`,
//! and a structure is invariant when `μ(p) = g'(p)[μ(G p)]`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::mapalg::diff::first_block_jacobian;
use crate::mapalg::group::{walk_reduced_words, Generator, Letter};
use crate::sampling::SampleRng;
use crate::space::{BlockPoint, PointMap};
use rand::Rng;

const SYM_TOL: f64 = 1e-12;
const DET_TOL: f64 = 1e-10;

/// A symmetric positive definite matrix of determinant one.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfClass {
    m: DMatrix<f64>,
}

impl Serialize for ConfClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = (0..self.dim()).map(|i| self.m.row(i).iter().copied().collect()).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ConfClass {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(serde::de::Error::custom("conformal class must be a square matrix"));
        }
        ConfClass::new(DMatrix::from_fn(n, n, |i, j| rows[i][j])).map_err(serde::de::Error::custom)
    }
}

impl ConfClass {
    /// Validates symmetry, positivity and `det = 1`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if n == 0 || m.ncols() != n {
            return domain("conformal class must be a nonempty square matrix");
        }
        let scale = m.abs().max().max(1.0);
        if (&m - m.transpose()).abs().max() > SYM_TOL * scale {
            return domain("conformal class is not symmetric");
        }
        let eig = m.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return domain("conformal class is not positive definite");
        }
        let det: f64 = eig.eigenvalues.iter().product();
        if (det - 1.0).abs() > DET_TOL {
            return domain(format!("conformal class has determinant {det}"));
        }
        Ok(ConfClass { m })
    }

    /// Symmetrize and rescale an SPD matrix to determinant one.
    pub fn normalized(m: &DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        let s = (m + m.transpose()) * 0.5;
        let eig = s.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return domain("matrix is not positive definite");
        }
        let logdet: f64 = eig.eigenvalues.iter().map(|l| l.ln()).sum();
        Ok(ConfClass { m: s * (-logdet / n as f64).exp() })
    }

    pub fn identity(n: usize) -> Self {
        ConfClass { m: DMatrix::identity(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn row_major(&self) -> Vec<f64> {
        let n = self.dim();
        (0..n * n).map(|k| self.m[(k / n, k % n)]).collect()
    }

    pub fn inverse(&self) -> ConfClass {
        ConfClass { m: sym_fn(&self.m, |l| 1.0 / l) }
    }
}

/// `f` applied to the eigenvalues of a symmetric matrix.
fn sym_fn(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    let q = &eig.eigenvectors;
    let out = q * d * q.transpose();
    (&out + out.transpose()) * 0.5
}

/// `X[A] = |det X|^{-2/n} Xᵀ A X`.
pub fn act(x: &DMatrix<f64>, a: &ConfClass) -> Result<ConfClass> {
    let n = a.dim();
    if x.nrows() != n || x.ncols() != n {
        return Err(Error::DimensionMismatch { expected: format!("{n}x{n}"), got: format!("{}x{}", x.nrows(), x.ncols()) });
    }
    let det = x.determinant();
    if det == 0.0 || !det.is_finite() {
        return domain("acting matrix is singular");
    }
    ConfClass::normalized(&(x.transpose() * &a.m * x))
}

/// Log-eigenvalues of `A^{-1/2} B A^{-1/2}`.
fn relative_log_eigs(a: &ConfClass, b: &ConfClass) -> DVector<f64> {
    let w = sym_fn(&a.m, |l| 1.0 / l.sqrt());
    let c = &w * &b.m * &w;
    let c = (&c + c.transpose()) * 0.5;
    c.symmetric_eigen().eigenvalues.map(|l| l.ln())
}

/// `k(A, B)`: the largest `|log λ|` of `A^{-1/2} B A^{-1/2}`.
pub fn kdist(a: &ConfClass, b: &ConfClass) -> f64 {
    relative_log_eigs(a, b).iter().fold(0.0, |m, l| m.max(l.abs()))
}

/// `d(A, B) = sqrt(Σ log² λ)` over the eigenvalues of `A^{-1/2} B A^{-1/2}`.
pub fn rdist(a: &ConfClass, b: &ConfClass) -> f64 {
    relative_log_eigs(a, b).iter().map(|l| l * l).sum::<f64>().sqrt()
}

/// `K(A) = exp k(I, A)`.
pub fn dilatation(a: &ConfClass) -> f64 {
    kdist(&ConfClass::identity(a.dim()), a).exp()
}

/// Symmetric matrix to coordinates in which the Euclidean norm is the Frobenius norm.
fn vectorize(s: &DMatrix<f64>) -> Vec<f64> {
    let n = s.nrows();
    let mut v = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        v.push(s[(i, i)]);
    }
    for i in 0..n {
        for j in i + 1..n {
            v.push(std::f64::consts::SQRT_2 * s[(i, j)]);
        }
    }
    v
}

fn devectorize(v: &[f64], n: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(n, n);
    let mut k = n;
    for i in 0..n {
        s[(i, i)] = v[i];
        for j in i + 1..n {
            s[(i, j)] = v[k] / std::f64::consts::SQRT_2;
            s[(j, i)] = s[(i, j)];
            k += 1;
        }
    }
    s
}

#[derive(Clone, Debug)]
struct Ball {
    center: Vec<f64>,
    r2: f64,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Smallest ball with every support point on its boundary, within their affine hull.
fn ball_through(pts: &[Vec<f64>], support: &[usize]) -> Ball {
    if support.is_empty() {
        return Ball { center: vec![0.0; pts.first().map_or(0, Vec::len)], r2: -1.0 };
    }
    let p0 = &pts[support[0]];
    let k = support.len() - 1;
    if k == 0 {
        return Ball { center: p0.clone(), r2: 0.0 };
    }
    let diffs: Vec<Vec<f64>> = support[1..].iter().map(|&i| pts[i].iter().zip(p0).map(|(a, b)| a - b).collect()).collect();
    let gram = DMatrix::from_fn(k, k, |i, j| diffs[i].iter().zip(&diffs[j]).map(|(a, b)| a * b).sum());
    let rhs = DVector::from_fn(k, |i, _| 0.5 * diffs[i].iter().map(|a| a * a).sum::<f64>());
    let lam = gram.svd(true, true).solve(&rhs, 1e-14).unwrap_or_else(|_| DVector::zeros(k));
    let mut center = p0.clone();
    for (d, l) in diffs.iter().zip(lam.iter()) {
        for (c, x) in center.iter_mut().zip(d) {
            *c += l * x;
        }
    }
    let r2 = support.iter().map(|&i| dist2(&center, &pts[i])).fold(0.0, f64::max);
    Ball { center, r2 }
}

fn inside(b: &Ball, p: &[f64]) -> bool {
    b.r2 >= 0.0 && dist2(&b.center, p) <= b.r2 * (1.0 + 1e-12) + 1e-300
}

/// Move-to-front Welzl recursion over `order[..end]` with the given support.
fn mtf_ball(pts: &[Vec<f64>], order: &mut Vec<usize>, end: usize, support: &mut Vec<usize>, dim: usize) -> Ball {
    let mut ball = ball_through(pts, support);
    if support.len() == dim + 1 {
        return ball;
    }
    let mut i = 0;
    while i < end {
        let idx = order[i];
        if !inside(&ball, &pts[idx]) {
            support.push(idx);
            ball = mtf_ball(pts, order, i, support, dim);
            support.pop();
            order.remove(i);
            order.insert(0, idx);
        }
        i += 1;
    }
    ball
}

/// Euclidean minimal enclosing ball, returned as `(center, radius)`.
pub fn min_enclosing_ball(pts: &[Vec<f64>]) -> Result<(Vec<f64>, f64)> {
    if pts.is_empty() {
        return Err(Error::Empty("minimal enclosing ball of no points".into()));
    }
    let dim = pts[0].len();
    let mut order: Vec<usize> = (0..pts.len()).collect();
    let mut support = Vec::with_capacity(dim + 1);
    let ball = mtf_ball(pts, &mut order, pts.len(), &mut support, dim);
    let r = pts.iter().map(|p| dist2(&ball.center, p)).fold(0.0, f64::max).sqrt();
    Ok((ball.center, r))
}

/// Solver settings for [`circumcenter`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircumcenterOpts {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_iters")]
    pub max_iters: usize,
}

fn default_tol() -> f64 {
    1e-12
}

fn default_iters() -> usize {
    200
}

impl Default for CircumcenterOpts {
    fn default() -> Self {
        CircumcenterOpts { tol: default_tol(), max_iters: default_iters() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Circumcenter {
    pub center: ConfClass,
    /// `max_A d(P, A)`.
    pub radius: f64,
    pub iters: usize,
}

fn max_rdist(p: &ConfClass, set: &[ConfClass]) -> f64 {
    set.iter().map(|a| rdist(p, a)).fold(0.0, f64::max)
}

/// Center of the smallest `d`-ball containing `set`.
///
/// Each round maps the set to the tangent space at the current center by the
/// logarithm at `P`, solves the Euclidean minimal enclosing ball there, and moves
/// `P` along the geodesic toward that ball's center, halving the step until the
/// radius drops. Starts at the log-Euclidean mean.
pub fn circumcenter(set: &[ConfClass], opts: &CircumcenterOpts) -> Result<Circumcenter> {
    let first = set.first().ok_or_else(|| Error::Empty("circumcenter of an empty set".into()))?;
    let n = first.dim();
    if let Some(a) = set.iter().find(|a| a.dim() != n) {
        return Err(Error::DimensionMismatch { expected: format!("{n}x{n}"), got: format!("{0}x{0}", a.dim()) });
    }
    let mut mean = DMatrix::zeros(n, n);
    for a in set {
        mean += sym_fn(&a.m, f64::ln);
    }
    let mut p = ConfClass::normalized(&sym_fn(&(mean / set.len() as f64), f64::exp))?;
    let mut radius = max_rdist(&p, set);
    for iter in 0..opts.max_iters {
        let half = sym_fn(&p.m, f64::sqrt);
        let w = sym_fn(&p.m, |l| 1.0 / l.sqrt());
        let logs: Vec<Vec<f64>> = set.iter().map(|a| vectorize(&sym_fn(&(&w * &a.m * &w), f64::ln))).collect();
        let (c, _) = min_enclosing_ball(&logs)?;
        let cnorm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        if cnorm < opts.tol {
            return Ok(Circumcenter { center: p, radius, iters: iter });
        }
        let dir = devectorize(&c, n);
        let mut s = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let cand = ConfClass::normalized(&(&half * sym_fn(&(&dir * s), f64::exp) * &half))?;
            let r = max_rdist(&cand, set);
            if r < radius {
                p = cand;
                radius = r;
                moved = true;
                break;
            }
            s *= 0.5;
        }
        if !moved {
            // no representable descent left
            return Ok(Circumcenter { center: p, radius, iters: iter + 1 });
        }
    }
    Err(Error::NoConvergence { iters: opts.max_iters, residual: radius })
}

/// A conformal class per sample point, with its invariance defect.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FieldSample {
    pub point: BlockPoint,
    /// Row-major `n_1 x n_1` matrix.
    pub matrix: Vec<f64>,
    pub defect: f64,
}

impl FieldSample {
    pub fn class(&self) -> Result<ConfClass> {
        let n = (self.matrix.len() as f64).sqrt().round() as usize;
        if n * n != self.matrix.len() {
            return domain("field matrix is not square");
        }
        ConfClass::new(DMatrix::from_row_slice(n, n, &self.matrix))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Default)]
#[serde(transparent)]
pub struct ConfField {
    pub samples: Vec<FieldSample>,
}

impl ConfField {
    /// The same class at every point.
    pub fn constant(points: &[BlockPoint], a: &ConfClass) -> Self {
        ConfField {
            samples: points.iter().map(|p| FieldSample { point: p.clone(), matrix: a.row_major(), defect: 0.0 }).collect(),
        }
    }

    /// Nearest sample to `p` and its Euclidean distance.
    pub fn nearest(&self, p: &BlockPoint) -> Option<(&FieldSample, f64)> {
        let q = p.flat();
        self.samples
            .iter()
            .map(|s| (s, dist2(&s.point.flat(), &q).sqrt()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Class at the nearest sample within `radius`.
    pub fn lookup(&self, p: &BlockPoint, radius: f64) -> Result<ConfClass> {
        match self.nearest(p) {
            Some((s, d)) if d <= radius => s.class(),
            Some((_, d)) => Err(Error::Coverage(format!("nearest sample at distance {d:.3e} exceeds {radius:.3e}"))),
            None => Err(Error::Coverage("empty field".into())),
        }
    }
}

/// Output of [`invariant_structure`].
#[derive(Clone, Debug, Serialize)]
pub struct InvariantStructure {
    pub field: ConfField,
    /// Points where some word had a singular first-block derivative.
    pub flagged: Vec<BlockPoint>,
    pub words: usize,
    pub max_defect: f64,
}

const SINGULAR_DET: f64 = 1e-12;

/// `{μ_F(p)}` over reduced words of length `<= word_len`, or `None` if a derivative
/// along the way is singular.
pub fn orbit_classes(gens: &[Generator], p: &BlockPoint, word_len: usize) -> Option<Vec<ConfClass>> {
    let n = p.blocks[0].len();
    let mut out = Vec::new();
    let mut bad = false;
    // state: image of p and first-block derivative of the word at p
    let init = (p.clone(), DMatrix::<f64>::identity(n, n));
    let step = |s: &(BlockPoint, DMatrix<f64>), l: Letter| {
        let m = l.map(gens);
        let j = first_block_jacobian(m, &s.0);
        (m.apply(&s.0), j * &s.1)
    };
    walk_reduced_words(gens.len(), word_len, init, &step, &mut |_, s| {
        let det = s.1.determinant();
        if !(det.abs() > SINGULAR_DET) || !det.is_finite() {
            bad = true;
            return;
        }
        match act(&s.1, &ConfClass::identity(n)) {
            Ok(c) => out.push(c),
            Err(_) => bad = true,
        }
    });
    if bad {
        None
    } else {
        Some(out)
    }
}

fn truncated_center(gens: &[Generator], p: &BlockPoint, word_len: usize, opts: &CircumcenterOpts) -> Option<ConfClass> {
    let set = orbit_classes(gens, p, word_len)?;
    circumcenter(&set, opts).ok().map(|c| c.center)
}

/// `μ(p) = P_{M_p}` with `M_p` truncated to words of length `<= word_len`; the
/// defect at `p` is `max_G k(μ(p), g'(p)[μ(G p)])` over generators and inverses.
pub fn invariant_structure(
    gens: &[Generator],
    grid: &[BlockPoint],
    word_len: usize,
    opts: &CircumcenterOpts,
) -> Result<InvariantStructure> {
    if grid.is_empty() {
        return Err(Error::Empty("no grid points".into()));
    }
    let results: Vec<Option<FieldSample>> = grid
        .par_iter()
        .map(|p| {
            let mu = truncated_center(gens, p, word_len, opts)?;
            let mut defect: f64 = 0.0;
            for gen in 0..gens.len() {
                for inv in [false, true] {
                    let m = Letter { gen, inv }.map(gens);
                    let q = m.apply(p);
                    let mu_q = truncated_center(gens, &q, word_len, opts)?;
                    let moved = act(&first_block_jacobian(m, p), &mu_q).ok()?;
                    defect = defect.max(kdist(&mu, &moved));
                }
            }
            Some(FieldSample { point: p.clone(), matrix: mu.row_major(), defect })
        })
        .collect();
    let mut field = ConfField::default();
    let mut flagged = Vec::new();
    for (p, r) in grid.iter().zip(results) {
        match r {
            Some(s) => field.samples.push(s),
            None => flagged.push(p.clone()),
        }
    }
    let max_defect = field.samples.iter().map(|s| s.defect).fold(0.0, f64::max);
    Ok(InvariantStructure { field, flagged, words: crate::mapalg::group::reduced_word_count(gens.len(), word_len), max_defect })
}

/// `exp k(μ(p), f'(p)[ν(F p)])`, reading both fields at the nearest sample within
/// `coverage`.
pub fn conformality_defect(
    f: &dyn PointMap,
    mu: &ConfField,
    nu: &ConfField,
    p: &BlockPoint,
    coverage: f64,
) -> Result<f64> {
    let a = mu.lookup(p, coverage)?;
    let b = nu.lookup(&f.apply(p), coverage)?;
    let moved = act(&first_block_jacobian(f, p), &b)?;
    Ok(kdist(&a, &moved).exp())
}

/// Axis-aligned box in flattened coordinates.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AxisBox {
    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a).max(0.0)).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    fn sample(&self, rng: &mut SampleRng) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| rng.gen_range(*a..=*b)).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasureReport {
    /// `m(F(E)) / m(E)` per nondegenerate box.
    pub ratios: Vec<f64>,
    pub min: f64,
    pub max: f64,
    /// Indices of degenerate boxes that were skipped.
    pub skipped: Vec<usize>,
}

/// Monte Carlo estimate of `m(F(E)) / m(E)` for each box `E`: points drawn from a
/// padded bounding box of `F(E)` are counted when `F^{-1}` sends them into `E`.
pub fn measure_distortion_check(
    spec: &crate::space::SpectralData,
    f: &dyn PointMap,
    inverse: &dyn PointMap,
    boxes: &[AxisBox],
    samples: usize,
    rng: &mut SampleRng,
) -> Result<MeasureReport> {
    let n = spec.total_dim();
    let mut ratios = Vec::new();
    let mut skipped = Vec::new();
    for (k, b) in boxes.iter().enumerate() {
        if b.lo.len() != n || b.hi.len() != n {
            return Err(Error::DimensionMismatch { expected: format!("boxes of dimension {n}"), got: b.lo.len().to_string() });
        }
        let vol = b.volume();
        if !(vol > 0.0) {
            skipped.push(k);
            continue;
        }
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        let mut probe = |x: Vec<f64>| {
            let y = f.apply(&spec.unflatten(&x)).flat();
            for i in 0..n {
                lo[i] = lo[i].min(y[i]);
                hi[i] = hi[i].max(y[i]);
            }
        };
        for c in 0..(1usize << n) {
            probe((0..n).map(|i| if c >> i & 1 == 1 { b.hi[i] } else { b.lo[i] }).collect());
        }
        for _ in 0..samples.max(1) / 4 {
            probe(b.sample(rng));
        }
        let pad: Vec<f64> = (0..n).map(|i| 0.1 * (hi[i] - lo[i]).max(1e-12)).collect();
        let bbox = AxisBox {
            lo: (0..n).map(|i| lo[i] - pad[i]).collect(),
            hi: (0..n).map(|i| hi[i] + pad[i]).collect(),
        };
        let hits = (0..samples)
            .filter(|_| {
                let y = bbox.sample(rng);
                b.contains(&inverse.apply(&spec.unflatten(&y)).flat())
            })
            .count();
        ratios.push(hits as f64 / samples as f64 * bbox.volume() / vol);
    }
    if ratios.is_empty() {
        return Err(Error::Empty("all boxes are degenerate".into()));
    }
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().copied().fold(0.0, f64::max);
    Ok(MeasureReport { ratios, min, max, skipped })
}
