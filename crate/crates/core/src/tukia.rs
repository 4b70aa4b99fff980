//! Conjugating a uniform group toward almost similarities: the one-dimensional
//! sup-measure and its integral, stretch normalization over the quotient, the radial
//! conjugator sequence and the final similarity check.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::mapalg::diff::{conformal_scale, first_block_jacobian, log_condition, similarity_defect};
use crate::mapalg::expr::{coord, project, FuncExpr};
use crate::mapalg::group::{apply_word, reduced_word_count, walk_reduced_words, word_stretch, Generator, Letter};
use crate::mapalg::BlockMap;
use crate::quasimetric::dilate_unchecked;
use crate::space::{BlockPoint, PointMap, SpectralData};

/// A finitely generated sample of a uniform group, truncated at `word_len`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSample {
    pub spec: SpectralData,
    pub generators: Vec<Generator>,
    pub word_len: usize,
    pub uniform_k: f64,
}

impl GroupSample {
    pub fn new(spec: SpectralData, generators: Vec<Generator>, word_len: usize, uniform_k: f64) -> Result<Self> {
        let s = GroupSample { spec, generators, word_len, uniform_k };
        s.check()?;
        Ok(s)
    }

    pub fn check(&self) -> Result<()> {
        for g in &self.generators {
            if g.map.spec() != &self.spec {
                return Err(Error::DimensionMismatch { expected: format!("{:?}", self.spec), got: format!("{:?}", g.map.spec()) });
            }
        }
        if !(self.uniform_k >= 1.0) {
            return domain("uniform constant must be at least 1");
        }
        Ok(())
    }

    /// All reduced words of length `1..=word_len`, first-applied letter first.
    pub fn words(&self) -> Vec<Vec<Letter>> {
        let mut out = Vec::with_capacity(reduced_word_count(self.generators.len(), self.word_len));
        walk_reduced_words(self.generators.len(), self.word_len, (), &|_, _| (), &mut |w, _| {
            if !w.is_empty() {
                out.push(w.to_vec());
            }
        });
        out
    }
}

/// `g0 g1^-1 ...` in application order.
pub fn word_label(word: &[Letter]) -> String {
    if word.is_empty() {
        return "id".into();
    }
    word.iter()
        .map(|l| if l.inv { format!("g{}^-1", l.gen) } else { format!("g{}", l.gen) })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Evenly spaced nodes `lo, lo + step, ..., hi`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LineGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl LineGrid {
    pub fn nodes(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || !(self.hi > self.lo) {
            return domain("grid needs lo < hi and a positive step");
        }
        let n = ((self.hi - self.lo) / self.step).round() as usize;
        Ok((0..=n).map(|k| self.lo + k as f64 * self.step).collect())
    }
}

fn scalar_derivative(f: &BlockMap, p: &BlockPoint, h: f64) -> f64 {
    let mut q = p.clone();
    q.blocks[0][0] = p.blocks[0][0] + h;
    let fp = f.apply(&q).blocks[0][0];
    q.blocks[0][0] = p.blocks[0][0] - h;
    let fm = f.apply(&q).blocks[0][0];
    (fp - fm) / (2.0 * h)
}

const VANISHING: f64 = 1e-12;

/// `sup |ḡ'(p)|` over the truncated words, `ḡ = δ_{t_g}^{-1} G`, with derivatives
/// taken by central differences of step `h`. `None` if some derivative vanishes.
pub fn sup_derivative_1d(sample: &GroupSample, p: &BlockPoint, h: f64) -> Option<f64> {
    let a1 = sample.spec.alpha(0);
    let gens = &sample.generators;
    let mut best: f64 = 1.0;
    let mut bad = false;
    let step = |s: &(BlockPoint, f64), l: Letter| {
        let m = l.map(gens);
        let d = scalar_derivative(m, &s.0, h) / l.stretch(gens).powf(a1);
        (m.apply(&s.0), s.1 * d)
    };
    walk_reduced_words(gens.len(), sample.word_len, (p.clone(), 1.0), &step, &mut |_, s| {
        let d = s.1.abs();
        if !(d > VANISHING) || !d.is_finite() {
            bad = true;
        } else {
            best = best.max(d);
        }
    });
    if bad {
        None
    } else {
        Some(best)
    }
}

/// Grid for the one-dimensional measure: nodes in `x` and quotient points.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureGrid {
    pub x: LineGrid,
    /// Quotient points; rows of the conjugator table follow their first coordinate.
    #[serde(default)]
    pub ys: Vec<BlockPoint>,
    /// One-sided samples sit at `node ± offset * step`.
    #[serde(default = "default_offset")]
    pub offset: f64,
}

fn default_offset() -> f64 {
    1e-3
}

/// `μ` sampled just right (`plus`) and just left (`minus`) of every node.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalarField1d {
    pub xs: Vec<f64>,
    pub ys: Vec<BlockPoint>,
    /// Row-major by `ys`, then `xs`.
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
    /// `(row, node)` pairs where a derivative vanished.
    pub flagged: Vec<(usize, usize)>,
    pub words: usize,
}

impl ScalarField1d {
    pub fn max(&self) -> f64 {
        self.plus.iter().chain(&self.minus).copied().filter(|v| v.is_finite()).fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.plus.iter().chain(&self.minus).copied().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min)
    }

    /// CSV rows `x,row,mu_minus,mu_plus`.
    pub fn csv(&self) -> String {
        let nx = self.xs.len();
        let mut out = String::from("x,row,mu_minus,mu_plus\n");
        for j in 0..self.ys.len() {
            for (k, x) in self.xs.iter().enumerate() {
                out.push_str(&format!("{x},{j},{},{}\n", self.minus[j * nx + k], self.plus[j * nx + k]));
            }
        }
        out
    }
}

fn rows_or_origin(spec: &SpectralData, ys: &[BlockPoint]) -> Result<Vec<BlockPoint>> {
    let q = spec.quotient();
    if ys.is_empty() {
        return Ok(vec![q.zero()]);
    }
    for y in ys {
        q.check(y)?;
    }
    Ok(ys.to_vec())
}

/// `μ(x, y) = sup_F |f̄'_y(x)|` on the grid.
pub fn sup_measure_1d(sample: &GroupSample, grid: &MeasureGrid) -> Result<ScalarField1d> {
    if sample.spec.mults()[0] != 1 {
        return domain("the one-dimensional measure needs a one-dimensional first block");
    }
    let xs = grid.x.nodes()?;
    let ys = rows_or_origin(&sample.spec, &grid.ys)?;
    let off = grid.offset * grid.x.step;
    let h = off / 100.0;
    let nx = xs.len();
    let cells: Vec<(usize, usize)> = (0..ys.len()).flat_map(|j| (0..nx).map(move |k| (j, k))).collect();
    let vals: Vec<(Option<f64>, Option<f64>)> = cells
        .par_iter()
        .map(|&(j, k)| {
            let at = |x: f64| sup_derivative_1d(sample, &BlockPoint::join_first(vec![x], &ys[j]), h);
            (at(xs[k] + off), at(xs[k] - off))
        })
        .collect();
    let mut plus = Vec::with_capacity(cells.len());
    let mut minus = Vec::with_capacity(cells.len());
    let mut flagged = Vec::new();
    for (&(j, k), (p, m)) in cells.iter().zip(vals) {
        if p.is_none() || m.is_none() {
            flagged.push((j, k));
        }
        plus.push(p.unwrap_or(f64::NAN));
        minus.push(m.unwrap_or(f64::NAN));
    }
    Ok(ScalarField1d { xs, ys, plus, minus, flagged, words: reduced_word_count(sample.generators.len(), sample.word_len) })
}

/// Largest `|log(μ(H p) · h̄'(p) / μ(p))|` over the probes, per generator letter.
pub fn transformation_law_defects(sample: &GroupSample, probes: &[BlockPoint], h: f64) -> Vec<(String, f64)> {
    let a1 = sample.spec.alpha(0);
    let mut out = Vec::new();
    for gen in 0..sample.generators.len() {
        for inv in [false, true] {
            let l = Letter { gen, inv };
            let m = l.map(&sample.generators);
            let worst = probes
                .par_iter()
                .filter_map(|p| {
                    let mu_p = sup_derivative_1d(sample, p, h)?;
                    let mu_q = sup_derivative_1d(sample, &m.apply(p), h)?;
                    let d = scalar_derivative(m, p, h).abs() / l.stretch(&sample.generators).powf(a1);
                    Some((mu_q * d / mu_p).ln().abs())
                })
                .reduce(|| 0.0, f64::max);
            out.push((word_label(&[l]), worst));
        }
    }
    out
}

/// `F(x, y) = (ν_y(x), y)` with `ν_y(x) = ∫_0^x μ(s, y) ds`.
#[derive(Clone, Debug, Serialize)]
pub struct Conjugator1d {
    pub map: BlockMap,
    /// Row-major like the field.
    pub nu: Vec<f64>,
    /// Largest gap between the step-`h` and step-`2h` integrals.
    pub richardson: f64,
}

impl Conjugator1d {
    /// CSV rows `x,row,nu`.
    pub fn csv(&self, field: &ScalarField1d) -> String {
        let nx = field.xs.len();
        let mut out = String::from("x,row,nu\n");
        for j in 0..field.ys.len() {
            for (k, x) in field.xs.iter().enumerate() {
                out.push_str(&format!("{x},{j},{}\n", self.nu[j * nx + k]));
            }
        }
        out
    }
}

fn interpolate(xs: &[f64], vs: &[f64], x: f64) -> f64 {
    let k = match xs.binary_search_by(|v| v.total_cmp(&x)) {
        Ok(k) => return vs[k],
        Err(k) => k.clamp(1, xs.len() - 1) - 1,
    };
    vs[k] + (vs[k + 1] - vs[k]) * (x - xs[k]) / (xs[k + 1] - xs[k])
}

/// Integrate `μ` by the trapezoid rule with one-sided end values, so jumps at nodes
/// are integrated exactly, and tabulate the result.
pub fn conjugator_1d(spec: &SpectralData, field: &ScalarField1d) -> Result<Conjugator1d> {
    if let Some(v) = field.plus.iter().chain(&field.minus).find(|v| !(**v > 0.0) || !v.is_finite()) {
        return domain(format!("measure must be positive and finite on the grid, found {v}"));
    }
    let xs = &field.xs;
    let nx = xs.len();
    if nx < 3 {
        return domain("grid needs at least three nodes");
    }
    if !(xs[0] <= 0.0 && 0.0 <= xs[nx - 1]) {
        return domain("grid must contain 0");
    }
    let mut nu = Vec::with_capacity(field.plus.len());
    let mut richardson: f64 = 0.0;
    for j in 0..field.ys.len() {
        let plus = &field.plus[j * nx..(j + 1) * nx];
        let minus = &field.minus[j * nx..(j + 1) * nx];
        let mut row = vec![0.0; nx];
        for k in 1..nx {
            row[k] = row[k - 1] + 0.5 * (xs[k] - xs[k - 1]) * (plus[k - 1] + minus[k]);
        }
        let mut coarse = vec![0.0; nx];
        for k in (2..nx).step_by(2) {
            coarse[k] = coarse[k - 2] + 0.5 * (xs[k] - xs[k - 2]) * (plus[k - 2] + minus[k]);
        }
        let zero = interpolate(xs, &row, 0.0);
        for k in (0..nx).step_by(2) {
            richardson = richardson.max((coarse[k] - row[k]).abs());
        }
        nu.extend(row.iter().map(|v| v - zero));
    }
    let y = if spec.rank() > 1 { coord(1, 0) } else { FuncExpr::Const { value: vec![0.0] } };
    let ycoords: Vec<f64> = field.ys.iter().map(|p| p.blocks.first().map_or(0.0, |b| b[0])).collect();
    if ycoords.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("grid rows must be strictly increasing in the first quotient coordinate");
    }
    let first = FuncExpr::Table2 { xs: xs.clone(), ys: ycoords, values: nu.clone(), x: Box::new(coord(0, 0)), y: Box::new(y) };
    let map = BlockMap::first_block_map(spec, first)?;
    Ok(Conjugator1d { map, nu, richardson })
}

/// Per-word similarity defects of the first block before and after conjugation.
#[derive(Clone, Debug, Serialize)]
pub struct WordDefect {
    pub word: String,
    pub before: f64,
    pub after: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConjugationReport {
    pub words: Vec<WordDefect>,
    pub max_before: f64,
    pub max_after: f64,
    pub tolerance: f64,
    pub pass: bool,
}

const INVERT_TOL: f64 = 1e-9;

/// Classify every truncated word after conjugation by `F`. The defect is the
/// similarity defect of the first-block derivative over the probes.
pub fn verify_conjugation(
    sample: &GroupSample,
    f: &BlockMap,
    probes: &[BlockPoint],
    tolerance: f64,
) -> Result<ConjugationReport> {
    if probes.is_empty() {
        return Err(Error::Empty("no probes".into()));
    }
    for p in probes {
        let back = f.invert_point(p).map_err(|e| Error::Domain(format!("conjugator is not invertible on the probe box: {e}")))?;
        let err = f.apply(&back).sub(p).flat().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if err > INVERT_TOL * (1.0 + p.flat().iter().fold(0.0f64, |m, v| m.max(v.abs()))) {
            return domain(format!("conjugator is not invertible on the probe box (residual {err:.3e})"));
        }
    }
    let gens = &sample.generators;
    let words = sample.words();
    let defects: Vec<WordDefect> = words
        .par_iter()
        .map(|w| {
            let g = |p: &BlockPoint| apply_word(gens, w, p);
            let h = |p: &BlockPoint| match f.invert_point(p) {
                Ok(x) => f.apply(&apply_word(gens, w, &x)),
                Err(_) => BlockPoint::new(p.blocks.iter().map(|b| vec![f64::NAN; b.len()]).collect()),
            };
            let before: Vec<DMatrix<f64>> = probes.iter().map(|p| first_block_jacobian(&g, p)).collect();
            let after: Vec<DMatrix<f64>> = probes.iter().map(|p| first_block_jacobian(&h, p)).collect();
            let clean = |d: f64| if d.is_finite() { d } else { f64::INFINITY };
            WordDefect { word: word_label(w), before: clean(similarity_defect(&before)), after: clean(similarity_defect(&after)) }
        })
        .collect();
    let max_before = defects.iter().map(|d| d.before).fold(0.0, f64::max);
    let max_after = defects.iter().map(|d| d.after).fold(0.0, f64::max);
    Ok(ConjugationReport { words: defects, max_before, max_after, tolerance, pass: max_after <= tolerance })
}

/// `|ν(H x2) - ν(H x1)| / (t_H^{α_1} |ν(x2) - ν(x1)|)`, worst log-deviation from 1 over
/// probe pairs and generator letters.
pub fn nu_similarity_defect(sample: &GroupSample, f: &BlockMap, pairs: &[(BlockPoint, BlockPoint)]) -> f64 {
    let a1 = sample.spec.alpha(0);
    let mut worst: f64 = 0.0;
    for gen in 0..sample.generators.len() {
        for inv in [false, true] {
            let l = Letter { gen, inv };
            let m = l.map(&sample.generators);
            let t = l.stretch(&sample.generators).powf(a1);
            for (p, q) in pairs {
                let d0 = f.apply(q).blocks[0][0] - f.apply(p).blocks[0][0];
                let d1 = f.apply(&m.apply(q)).blocks[0][0] - f.apply(&m.apply(p)).blocks[0][0];
                if d0 != 0.0 {
                    worst = worst.max((d1.abs() / (t * d0.abs())).ln().abs());
                }
            }
        }
    }
    worst
}

const AFFINE_TOL: f64 = 1e-6;

/// `λ_{g,y}` for a generator whose first block is `λ_y A_y (x + B_y)`.
fn fiber_scale(m: &BlockMap, y: &BlockPoint, x_probes: &[Vec<f64>]) -> Result<f64> {
    let jac: Vec<DMatrix<f64>> = x_probes.iter().map(|x| first_block_jacobian(m, &BlockPoint::join_first(x.clone(), y))).collect();
    let base = &jac[0];
    let scale = base.abs().max().max(f64::MIN_POSITIVE);
    for j in &jac[1..] {
        if (j - base).abs().max() > AFFINE_TOL * scale {
            return domain("first block is not affine in x; run the one-dimensional or higher-dimensional pipeline first");
        }
    }
    if log_condition(base) > AFFINE_TOL {
        return domain("first block is not a similarity in x; run the one-dimensional or higher-dimensional pipeline first");
    }
    Ok(conformal_scale(base))
}

/// `sup_F η_{F,y}` over truncated words, with `η_{F,y} = λ_{F,y} / t_F^{α_1}`.
pub fn sup_eta(sample: &GroupSample, y: &BlockPoint, x_probes: &[Vec<f64>]) -> Result<f64> {
    let a1 = sample.spec.alpha(0);
    let gens = &sample.generators;
    let zero = vec![0.0; sample.spec.mults()[0]];
    let mut best: f64 = 1.0;
    let mut err = None;
    let step = |s: &(BlockPoint, f64, bool), l: Letter| {
        if !s.2 {
            return s.clone();
        }
        let m = l.map(gens);
        match fiber_scale(m, &s.0, x_probes) {
            Ok(lam) => {
                let next = m.apply(&BlockPoint::join_first(zero.clone(), &s.0)).split_first().1;
                (next, s.1 * lam / l.stretch(gens).powf(a1), true)
            }
            Err(_) => (s.0.clone(), f64::NAN, false),
        }
    };
    walk_reduced_words(gens.len(), sample.word_len, (y.clone(), 1.0, true), &step, &mut |_, s| {
        if !s.2 {
            err = Some(());
        } else {
            best = best.max(s.1);
        }
    });
    if err.is_some() {
        // surface the underlying message
        for g in gens {
            fiber_scale(&g.map, y, x_probes)?;
        }
        return domain("first block is not affine along the orbit");
    }
    Ok(best)
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalizedStretch {
    /// `F(x, y) = (μ(y) x, y)`.
    pub map: BlockMap,
    pub ys: Vec<BlockPoint>,
    pub mu: Vec<f64>,
    /// Largest `|λ_{FGF^{-1}} / t_g^{α_1} - 1|` over generators and grid nodes.
    pub stretch_error: f64,
    /// Largest `|μ(g y) η_{g,y} / μ(y) - 1|`.
    pub cocycle_defect: f64,
}

/// Conjugate by `F(x, y) = (μ(y) x, y)` with `μ(y) = sup η_{F,y}` so that every
/// first-block stretch becomes `t_g^{α_1}`. `ys` are quotient points sorted by their
/// first coordinate; `μ` is interpolated linearly between them.
pub fn normalize_stretch(sample: &GroupSample, ys: &[BlockPoint], x_probes: &[Vec<f64>]) -> Result<NormalizedStretch> {
    let spec = &sample.spec;
    if spec.rank() < 2 {
        return domain("stretch normalization needs a quotient");
    }
    if x_probes.len() < 2 {
        return domain("need at least two x probes for the affinity check");
    }
    let q = spec.quotient();
    for y in ys {
        q.check(y)?;
    }
    let knots: Vec<f64> = ys.iter().map(|y| y.blocks[0][0]).collect();
    if knots.len() < 2 || knots.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("need at least two y nodes with increasing first coordinate");
    }
    let mu: Vec<f64> = ys.par_iter().map(|y| sup_eta(sample, y, x_probes)).collect::<Result<_>>()?;
    let scale = FuncExpr::Pwl { knots: knots.clone(), values: mu.clone(), period: None, arg: Box::new(coord(1, 0)) };
    let first = FuncExpr::Mul { terms: vec![scale, project(0)] };
    let map = BlockMap::first_block_map(spec, first)?;
    let a1 = spec.alpha(0);
    let mut stretch_error: f64 = 0.0;
    let mut cocycle_defect: f64 = 0.0;
    for g in &sample.generators {
        let t = g.quotient_stretch.powf(a1);
        for (y, &mu_y) in ys.iter().zip(&mu) {
            let lam = fiber_scale(&g.map, y, x_probes)?;
            let gy = g.map.apply(&BlockPoint::join_first(x_probes[0].clone(), y)).split_first().1;
            let mu_gy = sup_eta(sample, &gy, x_probes)?;
            cocycle_defect = cocycle_defect.max((mu_gy * lam / t / mu_y - 1.0).abs());
            let gy0 = gy.blocks[0][0];
            if gy0 < knots[0] || gy0 > knots[knots.len() - 1] {
                continue;
            }
            let h = |p: &BlockPoint| match map.invert_point(p) {
                Ok(x) => map.apply(&g.map.apply(&x)),
                Err(_) => BlockPoint::new(p.blocks.iter().map(|b| vec![f64::NAN; b.len()]).collect()),
            };
            let p = BlockPoint::join_first(x_probes[0].clone(), y);
            let lam_h = conformal_scale(&first_block_jacobian(&h, &p));
            stretch_error = stretch_error.max((lam_h / t - 1.0).abs());
        }
    }
    Ok(NormalizedStretch { map, ys: ys.to_vec(), mu, stretch_error, cocycle_defect })
}

/// One step of the radial conjugator sequence.
#[derive(Clone, Debug, Serialize)]
pub struct RadialStep {
    pub word: String,
    pub t: f64,
    /// `sup |F_i - F_{i-1}|` on the probes; zero for the first step.
    pub cauchy: f64,
    /// Largest first-block similarity defect of `F_i G F_i^{-1}` over generators.
    pub defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RadialReport {
    pub steps: Vec<RadialStep>,
}

/// `F = δ_t ∘ a ∘ G_word`, where `a` acts on the first block.
pub struct RadialMap<'a> {
    pub sample: &'a GroupSample,
    pub word: Vec<Letter>,
    pub t: f64,
    pub a: DMatrix<f64>,
}

impl RadialMap<'_> {
    fn linear_first(&self, m: &DMatrix<f64>, p: &BlockPoint) -> BlockPoint {
        let mut q = p.clone();
        q.blocks[0] = (m * nalgebra::DVector::from_column_slice(&p.blocks[0])).iter().copied().collect();
        q
    }

    pub fn inverse_apply(&self, u: &BlockPoint) -> BlockPoint {
        let a_inv = self.a.clone().try_inverse().unwrap_or_else(|| DMatrix::from_element(self.a.nrows(), self.a.ncols(), f64::NAN));
        let v = self.linear_first(&a_inv, &dilate_unchecked(&self.sample.spec, 1.0 / self.t, u));
        apply_word(&self.sample.generators, &crate::mapalg::group::invert_word(&self.word), &v)
    }
}

impl PointMap for RadialMap<'_> {
    fn apply(&self, p: &BlockPoint) -> BlockPoint {
        let g = apply_word(&self.sample.generators, &self.word, p);
        dilate_unchecked(&self.sample.spec, self.t, &self.linear_first(&self.a, &g))
    }
}

/// Run `F_i = δ_{t_i} ∘ a ∘ G_i` along escape words whose quotient stretches
/// `t_i^{-1}` tend to zero.
pub fn radial_conjugator(
    sample: &GroupSample,
    escape: &[Vec<Letter>],
    a: &DMatrix<f64>,
    probes: &[BlockPoint],
) -> Result<RadialReport> {
    let n1 = sample.spec.mults()[0];
    if a.nrows() != n1 || a.ncols() != n1 {
        return Err(Error::DimensionMismatch { expected: format!("{n1}x{n1}"), got: format!("{}x{}", a.nrows(), a.ncols()) });
    }
    if a.determinant() == 0.0 {
        return domain("normalizing map is singular");
    }
    if escape.is_empty() || probes.is_empty() {
        return Err(Error::Empty("need escape words and probes".into()));
    }
    let ts: Vec<f64> = escape.iter().map(|w| 1.0 / word_stretch(&sample.generators, w)).collect();
    if ts.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::NoConvergence { iters: ts.len(), residual: ts[ts.len() - 1] });
    }
    let maps: Vec<RadialMap> =
        escape.iter().zip(&ts).map(|(w, &t)| RadialMap { sample, word: w.clone(), t, a: a.clone() }).collect();
    let steps = maps
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let cauchy = if i == 0 {
                0.0
            } else {
                probes
                    .iter()
                    .map(|p| f.apply(p).sub(&maps[i - 1].apply(p)).flat().iter().map(|v| v * v).sum::<f64>().sqrt())
                    .fold(0.0, f64::max)
            };
            let mut defect: f64 = 0.0;
            for g in &sample.generators {
                let h = |u: &BlockPoint| f.apply(&g.map.apply(&f.inverse_apply(u)));
                let jac: Vec<DMatrix<f64>> = probes.iter().map(|p| first_block_jacobian(&h, p)).collect();
                defect = defect.max(similarity_defect(&jac));
            }
            RadialStep { word: word_label(&f.word), t: f.t, cauchy, defect }
        })
        .collect();
    Ok(RadialReport { steps })
}

/// Largest `K` estimated over truncated words on the given pairs.
pub fn uniform_constant(sample: &GroupSample, pairs: &[(BlockPoint, BlockPoint)]) -> Result<f64> {
    let mut worst: f64 = 1.0;
    for w in sample.words() {
        let g = |p: &BlockPoint| apply_word(&sample.generators, &w, p);
        let c = crate::quasimetric::estimate_qsim_constants(&sample.spec, &g, pairs)?;
        worst = worst.max(c.k);
    }
    Ok(worst)
}
