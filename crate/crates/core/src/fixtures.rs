//! Bundled sample groups, maps and kernel elements used by the examples, the CLI and
//! the test suites.

use std::f64::consts::PI;

use crate::error::Result;
use crate::mapalg::expr::{constant, coord, cos, exp, periodic_pwl, project, scale, sin, sum, FuncExpr};
use crate::mapalg::fiber::FiberSimilarity;
use crate::mapalg::group::Generator;
use crate::mapalg::sim::{AlmostTranslation, SimMap};
use crate::mapalg::BlockMap;
use crate::space::{BlockPoint, SpectralData};
use crate::tukia::GroupSample;

fn spec(alphas: &[f64], mults: &[usize]) -> SpectralData {
    SpectralData::new(alphas.to_vec(), mults.to_vec()).expect("fixture spectral data")
}

fn x() -> FuncExpr {
    coord(0, 0)
}

/// `h(x) = 1.25 x + p(x)`, `p` the 2-periodic tent of height 1/4; `h' ∈ {1.5, 1}`.
pub fn tent_h(arg: FuncExpr) -> FuncExpr {
    sum(vec![scale(1.25, arg.clone()), periodic_pwl(vec![0.0, 1.0, 2.0], vec![0.0, 0.25, 0.0], arg)])
}

/// `h^{-1}(u) = 0.8 u + q(u)`, `q` the 2.5-periodic tent of depth 1/5.
pub fn tent_h_inv(arg: FuncExpr) -> FuncExpr {
    sum(vec![scale(0.8, arg.clone()), periodic_pwl(vec![0.0, 1.5, 2.5], vec![0.0, -0.2, 0.0], arg)])
}

/// Piecewise-derivative sample on `α = [1, 2]`: one generator
/// `G(x, y) = (h(h^{-1}(x) + 1), y + 1)` with `G' ∈ {2/3, 1, 3/2}` and uniform constant 1.5.
/// Conjugating by `1.5 h^{-1}` turns it into translation by 1.5.
pub fn piecewise_1d(word_len: usize) -> Result<GroupSample> {
    let s = spec(&[1.0, 2.0], &[1, 1]);
    let shifted = |c: f64| tent_h(sum(vec![tent_h_inv(x()), constant(vec![c])]));
    let map = BlockMap::new(s.clone(), vec![shifted(1.0), sum(vec![project(1), constant(vec![1.0])])])?;
    let inverse = BlockMap::new(s.clone(), vec![shifted(-1.0), sum(vec![project(1), constant(vec![-1.0])])])?;
    GroupSample::new(s, vec![Generator::new(map, inverse, 1.0)?], word_len, 1.5)
}

/// The exact conjugator `x ↦ 1.5 h^{-1}(x)` for [`piecewise_1d`].
pub fn piecewise_1d_exact_conjugator() -> Result<BlockMap> {
    BlockMap::first_block_map(&spec(&[1.0, 2.0], &[1, 1]), scale(1.5, tent_h_inv(x())))
}

/// `α = [1, 2]`, generator `(λ(y) x, y + 1)` with `λ(y) = exp(-2s sin πy)`. Its normalizing
/// function is `μ(y) = exp(s(|sin πy| - sin πy))`.
pub fn oscillating_stretch(s_amp: f64, word_len: usize) -> Result<GroupSample> {
    let sp = spec(&[1.0, 2.0], &[1, 1]);
    let lam = |sign: f64, shift: f64| {
        exp(scale(sign * -2.0 * s_amp, sin(scale(PI, sum(vec![coord(1, 0), constant(vec![shift])])))))
    };
    let y_plus = |c: f64| sum(vec![project(1), constant(vec![c])]);
    let map = BlockMap::new(sp.clone(), vec![FuncExpr::Mul { terms: vec![lam(1.0, 0.0), project(0)] }, y_plus(1.0)])?;
    // G^{-1}(x, y) = (x / λ(y - 1), y - 1)
    let inverse = BlockMap::new(sp.clone(), vec![FuncExpr::Mul { terms: vec![lam(-1.0, -1.0), project(0)] }, y_plus(-1.0)])?;
    GroupSample::new(sp, vec![Generator::new(map, inverse, 1.0)?], word_len, (2.0 * s_amp).exp())
}

/// Closed form of the normalizing function of [`oscillating_stretch`].
pub fn oscillating_stretch_mu(s_amp: f64, y: f64) -> f64 {
    let v = (PI * y).sin();
    (s_amp * (v.abs() - v)).exp()
}

/// `φ(x_1, x_2, y) = (x_1 + c x_2^2, x_2, y)` conjugating `δ_{1/2}` on `α = [1, 2]`, `n = [2, 1]`:
/// `G = φ^{-1} δ_{1/2} φ = (x_1/2 + c x_2^2/4, x_2/2, y/4)`.
pub fn radial_sample(c: f64, word_len: usize) -> Result<GroupSample> {
    let sp = spec(&[1.0, 2.0], &[2, 1]);
    let sq = FuncExpr::AbsPow { exponent: 2.0, arg: Box::new(coord(0, 1)) };
    let first = FuncExpr::Concat {
        parts: vec![sum(vec![scale(0.5, coord(0, 0)), scale(c / 4.0, sq.clone())]), scale(0.5, coord(0, 1))],
    };
    let map = BlockMap::new(sp.clone(), vec![first, scale(0.25, project(1))])?;
    let first_inv = FuncExpr::Concat {
        parts: vec![sum(vec![scale(2.0, coord(0, 0)), scale(-2.0 * c, sq)]), scale(2.0, coord(0, 1))],
    };
    let inverse = BlockMap::new(sp.clone(), vec![first_inv, scale(4.0, project(1))])?;
    GroupSample::new(sp, vec![Generator::new(map, inverse, 0.5)?], word_len, 1.0)
}

/// `δ_{1/2}` on `α = [1, 2]`, `n = [2, 1]`.
pub fn dilation_sample(word_len: usize) -> Result<GroupSample> {
    let sp = spec(&[1.0, 2.0], &[2, 1]);
    let map = SimMap::dilation(&sp, 0.5)?.to_block_map();
    let inverse = SimMap::dilation(&sp, 2.0)?.to_block_map();
    GroupSample::new(sp, vec![Generator::new(map, inverse, 0.5)?], word_len, 1.0)
}

/// `x ↦ L R_θ L^{-1} x` on the first block (`n_1 = 2`), `y ↦ y + 1`, with `L = diag(2, 1)`.
/// The invariant class is `L^{-T} L^{-1}` up to scale.
pub fn elliptic_sample(theta: f64, word_len: usize) -> Result<GroupSample> {
    let sp = spec(&[1.0, 2.0], &[2, 1]);
    let (c, s) = (theta.cos(), theta.sin());
    // L R L^{-1} with L = diag(2, 1)
    let m = |c: f64, s: f64| vec![vec![c, -2.0 * s], vec![s / 2.0, c]];
    let gen = |c: f64, s: f64, dy: f64| {
        BlockMap::new(
            sp.clone(),
            vec![crate::mapalg::expr::linear(m(c, s), project(0)), sum(vec![project(1), constant(vec![dy])])],
        )
    };
    let g = Generator::new(gen(c, s, 1.0)?, gen(c, -s, -1.0)?, 1.0)?;
    GroupSample::new(sp, vec![g], word_len, 2.0)
}

/// Fibred similarity on `α = [1, 2]`, `n = [2, 1]` with `A_y` the rotation by angle `y`.
pub fn rotating_fiber() -> Result<FiberSimilarity> {
    let sp = spec(&[1.0, 2.0], &[2, 1]);
    let y = coord(1, 0);
    let rotation = FuncExpr::Concat { parts: vec![cos(y.clone()), scale(-1.0, sin(y.clone())), sin(y.clone()), cos(y)] };
    let q = sp.quotient();
    let quotient = BlockMap::new(q, vec![sum(vec![project(0), constant(vec![1.0])])])?;
    FiberSimilarity::new(sp, constant(vec![1.0]), rotation, constant(vec![0.0, 0.0]), quotient, 1.0)
}

/// Fibred similarity with a constant rotation and a bounded `y`-dependent shift.
pub fn constant_rotation_fiber(theta: f64) -> Result<FiberSimilarity> {
    let sp = spec(&[1.0, 2.0], &[2, 1]);
    let (c, s) = (theta.cos(), theta.sin());
    let shift = FuncExpr::Concat { parts: vec![sin(coord(1, 0)), constant(vec![0.0])] };
    let q = sp.quotient();
    let quotient = BlockMap::new(q, vec![sum(vec![project(0), constant(vec![1.0])])])?;
    FiberSimilarity::new(sp, constant(vec![1.0]), constant(vec![c, -s, s, c]), shift, quotient, 1.0)
}

/// `φ` for the two-level kernel fixture: the 2-periodic tent of height 1/2.
fn tent_half(arg: FuncExpr) -> FuncExpr {
    periodic_pwl(vec![0.0, 1.0, 2.0], vec![0.0, 0.5, 0.0], arg)
}

/// Certified constant of every element of `Φ R^2 Φ^{-1}`, `Φ(x_1, x_2) = (x_1 + φ(x_2), x_2)`.
pub const LATTICE_K: f64 = 2.0;

/// `Φ T_v Φ^{-1}` on `α = (1, 2)`: `B_1 = v_1 + φ(x_2 + v_2) - φ(x_2)`, `B_2 = v_2`.
pub fn conjugated_translation(v1: f64, v2: f64) -> Result<AlmostTranslation> {
    let sp = spec(&[1.0, 2.0], &[1, 1]);
    let b1 = if v2 == 0.0 {
        constant(vec![v1])
    } else {
        sum(vec![
            constant(vec![v1]),
            tent_half(sum(vec![coord(1, 0), constant(vec![v2])])),
            scale(-1.0, tent_half(coord(1, 0))),
        ])
    };
    AlmostTranslation::new(sp, vec![b1, constant(vec![v2])], LATTICE_K)
}

/// Input to the root algorithm.
#[derive(Clone, Debug)]
pub struct RootFixture {
    pub name: &'static str,
    pub generators: Vec<AlmostTranslation>,
    pub gamma_p: AlmostTranslation,
    pub l: u32,
}

/// Two levels: `γ_1 = T(1, 0)`, `γ_2 = Φ T(0, 1) Φ^{-1}`, `γ_p = Φ T(3/2, 1/2) Φ^{-1}`, `l = 2`.
pub fn root_two_level() -> Result<RootFixture> {
    Ok(RootFixture {
        name: "two_level",
        generators: vec![conjugated_translation(1.0, 0.0)?, conjugated_translation(0.0, 1.0)?],
        gamma_p: conjugated_translation(1.5, 0.5)?,
        l: 2,
    })
}

/// One level: `γ_1 = T(1)`, `γ_p = T(5/2)`, `l = 2`.
pub fn root_one_level() -> Result<RootFixture> {
    let sp = spec(&[1.0], &[1]);
    Ok(RootFixture {
        name: "one_level",
        generators: vec![AlmostTranslation::translation(&sp, &BlockPoint::scalars(&[1.0]))?],
        gamma_p: AlmostTranslation::translation(&sp, &BlockPoint::scalars(&[2.5]))?,
        l: 2,
    })
}

/// `B_1 = sin(x_2)`, `B_2 = 1` on `α = (1, 2)`. Every power has `|B_1| <= 1/sin(1/2)`, so
/// the cyclic group is uniformly `1 + √2 / sin(1/2)` bilipschitz.
pub fn sine_kernel() -> Result<AlmostTranslation> {
    let sp = spec(&[1.0, 2.0], &[1, 1]);
    let k = 1.0 + 2f64.sqrt() / 0.5f64.sin();
    AlmostTranslation::new(sp, vec![sin(coord(1, 0)), constant(vec![1.0])], k)
}

/// Unit translation on `R` with `α = [1]`.
pub fn unit_translation() -> Result<AlmostTranslation> {
    let sp = spec(&[1.0], &[1]);
    AlmostTranslation::translation(&sp, &BlockPoint::scalars(&[1.0]))
}

/// Named spectral data used by the metric suites.
pub fn metric_specs() -> Vec<(&'static str, SpectralData)> {
    vec![
        ("rank_one", spec(&[1.5], &[2])),
        ("two_block", spec(&[2.0, 3.0], &[1, 1])),
        ("mixed", spec(&[1.0, 1.5, 2.5], &[2, 1, 3])),
    ]
}
