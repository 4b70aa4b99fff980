//! Almost translations: kernel projections, displacement estimates, orbit growth and
//! approximate `l`-th roots in finitely generated groups.

use std::collections::HashSet;
use std::fmt::Write as _;

use num::{BigInt, BigRational, Integer, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::exact::{self, rational_probes};
use crate::mapalg::sim::AlmostTranslation;
use crate::quasimetric::distance_unchecked;
use crate::space::{norm, BlockPoint, PointMap, SpectralData};

type ExactPoint = Vec<Vec<BigRational>>;

/// A group word `a_1^{e_1} a_2^{e_2} ...`, read as a composition with the last factor applied first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word {
    pub letters: Vec<(usize, i64)>,
}

impl Word {
    pub fn identity() -> Self {
        Word::default()
    }

    pub fn letter(i: usize, e: i64) -> Self {
        let mut w = Word::identity();
        w.push(i, e);
        w
    }

    fn push(&mut self, i: usize, e: i64) {
        if e == 0 {
            return;
        }
        if let Some(last) = self.letters.last_mut() {
            if last.0 == i {
                last.1 += e;
                if last.1 == 0 {
                    self.letters.pop();
                }
                return;
            }
        }
        self.letters.push((i, e));
    }

    pub fn mul(&self, other: &Word) -> Word {
        let mut w = self.clone();
        for &(i, e) in &other.letters {
            w.push(i, e);
        }
        w
    }

    pub fn inverse(&self) -> Word {
        Word { letters: self.letters.iter().rev().map(|&(i, e)| (i, -e)).collect() }
    }

    pub fn pow(&self, n: u32) -> Word {
        (0..n).fold(Word::identity(), |acc, _| acc.mul(self))
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn label(&self, names: &[String]) -> String {
        if self.letters.is_empty() {
            return "id".into();
        }
        let mut s = String::new();
        for (k, &(i, e)) in self.letters.iter().enumerate() {
            if k > 0 {
                s.push(' ');
            }
            s.push_str(&names[i]);
            if e != 1 {
                let _ = write!(s, "^{e}");
            }
        }
        s
    }
}

/// Almost translations indexed by a word alphabet, with inverses cached.
#[derive(Clone, Debug)]
pub struct Alphabet {
    pub maps: Vec<AlmostTranslation>,
    inverses: Vec<AlmostTranslation>,
    pub names: Vec<String>,
}

impl Alphabet {
    pub fn new(maps: Vec<AlmostTranslation>, names: Vec<String>) -> Result<Self> {
        let Some(first) = maps.first() else {
            return Err(Error::Empty("alphabet".into()));
        };
        if maps.iter().any(|m| m.spec() != first.spec()) {
            return Err(Error::DimensionMismatch { expected: format!("{:?}", first.spec()), got: "mixed spectral data".into() });
        }
        if names.len() != maps.len() {
            return domain("one name per map");
        }
        let inverses = maps.iter().map(AlmostTranslation::inverse).collect();
        Ok(Alphabet { maps, inverses, names })
    }

    pub fn spec(&self) -> &SpectralData {
        self.maps[0].spec()
    }

    fn factor(&self, i: usize, e: i64) -> &AlmostTranslation {
        if e < 0 {
            &self.inverses[i]
        } else {
            &self.maps[i]
        }
    }

    pub fn apply(&self, w: &Word, p: &BlockPoint) -> BlockPoint {
        let mut q = p.clone();
        for &(i, e) in w.letters.iter().rev() {
            let f = self.factor(i, e);
            for _ in 0..e.unsigned_abs() {
                q = f.apply(&q);
            }
        }
        q
    }

    pub fn apply_exact(&self, w: &Word, p: &[Vec<BigRational>]) -> Option<ExactPoint> {
        let mut q = p.to_vec();
        for &(i, e) in w.letters.iter().rev() {
            let f = self.factor(i, e);
            for _ in 0..e.unsigned_abs() {
                q = f.apply_exact(&q)?;
            }
        }
        Some(q)
    }

    /// The word as a single almost translation, built by symbolic composition.
    pub fn compose(&self, w: &Word) -> AlmostTranslation {
        let mut acc = AlmostTranslation::identity(self.spec());
        for &(i, e) in &w.letters {
            let f = self.factor(i, e);
            for _ in 0..e.unsigned_abs() {
                acc = acc.compose(f).expect("shared spectral data");
            }
        }
        acc.with_bilip(self.uniform_k())
    }

    /// Largest certified constant in the alphabet, taken as the uniform constant of the group.
    pub fn uniform_k(&self) -> f64 {
        self.maps.iter().map(AlmostTranslation::bilip).fold(1.0, f64::max)
    }

    /// Exact displacements `w(p) - p` at each probe.
    fn displacements(&self, w: &Word, probes: &[ExactPoint]) -> Result<Vec<ExactPoint>> {
        probes
            .iter()
            .map(|p| {
                let q = self.apply_exact(w, p).ok_or_else(|| Error::Domain("word is not rational-valued".into()))?;
                Ok(q.iter().zip(p).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect()).collect())
            })
            .collect()
    }

    /// Constant level-`j` shift of `w` (1-based), after checking that `w` lies in `K_j`.
    pub fn level_value(&self, w: &Word, j: usize, probes: &[ExactPoint]) -> Result<Vec<BigRational>> {
        let disp = self.displacements(w, probes)?;
        let r = self.spec().rank();
        for m in j..r {
            if disp.iter().any(|d| d[m].iter().any(|x| !x.is_zero())) {
                return Err(Error::NotInKernel { level: j, block: m + 1 });
            }
        }
        if j == 0 {
            return Ok(vec![]);
        }
        let v = disp[0][j - 1].clone();
        if disp.iter().any(|d| d[j - 1] != v) {
            return Err(Error::NotInKernel { level: j, block: j });
        }
        Ok(v)
    }

    /// Whether two words agree exactly at every probe.
    pub fn agree(&self, a: &Word, b: &Word, probes: &[ExactPoint]) -> Result<bool> {
        for p in probes {
            let x = self.apply_exact(a, p);
            let y = self.apply_exact(b, p);
            match (x, y) {
                (Some(x), Some(y)) if x == y => {}
                (Some(_), Some(_)) => return Ok(false),
                _ => return domain("word is not rational-valued"),
            }
        }
        Ok(true)
    }
}

/// Projection `τ_j` of an element of `K_j`: its constant level-`j` shift (1-based `j`).
pub fn tau_project(gamma: &AlmostTranslation, j: usize) -> Result<Vec<f64>> {
    let spec = gamma.spec();
    if j == 0 || j > spec.rank() {
        return domain(format!("level {j} outside 1..={}", spec.rank()));
    }
    let zero = spec.zero();
    for m in j..spec.rank() {
        let b = &gamma.shifts()[m];
        if !b.depends_on().is_empty() || b.eval(&zero).iter().any(|&x| x != 0.0) {
            return Err(Error::NotInKernel { level: j, block: m + 1 });
        }
    }
    let b = &gamma.shifts()[j - 1];
    if !b.depends_on().is_empty() {
        return Err(Error::NotInKernel { level: j, block: j });
    }
    Ok(b.eval(&zero))
}

/// Highest level with a nonzero shift, 0 for the identity.
pub fn level_of(gamma: &AlmostTranslation, probes: &[BlockPoint]) -> usize {
    (0..gamma.spec().rank())
        .rev()
        .find(|&i| probes.iter().any(|p| gamma.shift_at(i, p).iter().any(|&x| x != 0.0)))
        .map_or(0, |i| i + 1)
}

/// `ε_i = max_{j > i} 2 K^{α_i} (B^max_j)^{α_i / α_j}` for every level, `K` the bilipschitz certificate.
pub fn epsilon_bounds(gamma: &AlmostTranslation) -> Result<Vec<f64>> {
    epsilon_bounds_with(gamma, gamma.bilip())
}

pub fn epsilon_bounds_with(gamma: &AlmostTranslation, k: f64) -> Result<Vec<f64>> {
    let spec = gamma.spec();
    let r = spec.rank();
    let sups: Vec<f64> = (0..r).map(|i| gamma.shift_sup(i)).collect::<Result<_>>()?;
    Ok((0..r)
        .map(|i| {
            let a = spec.alpha(i);
            ((i + 1)..r).map(|j| 2.0 * k.powf(a) * sups[j].powf(a / spec.alpha(j))).fold(0.0, f64::max)
        })
        .collect())
}

/// Diameter of the values of `B_i` over the sample points.
pub fn sampled_oscillation(gamma: &AlmostTranslation, i: usize, points: &[BlockPoint]) -> f64 {
    let vals: Vec<Vec<f64>> = points.iter().map(|p| gamma.shift_at(i, p)).collect();
    if vals.first().is_some_and(|v| v.len() == 1) {
        let lo = vals.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
        let hi = vals.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max);
        return (hi - lo).max(0.0);
    }
    let mut d: f64 = 0.0;
    for (a, u) in vals.iter().enumerate() {
        for v in &vals[a + 1..] {
            d = d.max(norm(&u.iter().zip(v).map(|(x, y)| x - y).collect::<Vec<_>>()));
        }
    }
    d
}

/// Sampled `sup |B_i|`.
pub fn sampled_sup(gamma: &AlmostTranslation, i: usize, points: &[BlockPoint]) -> f64 {
    points.iter().map(|p| norm(&gamma.shift_at(i, p))).fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelStep {
    /// 1-based level.
    pub level: usize,
    /// Alphabet indices of the generators living at this level.
    pub generators: Vec<usize>,
    /// Level shift of the residual, as exact fractions.
    pub target: Vec<String>,
    pub coefficients: Vec<String>,
    pub eta_hat: String,
    pub err: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RootChecks {
    /// `γ_p = γ' η` at every probe.
    pub decomposition: bool,
    /// `(γ')^l = Π γ_i^{c_i}` at every probe.
    pub power: bool,
    /// `|B_{r,γ'}| <= Σ |B_{r,γ_i}|`.
    pub top_level_bound: bool,
    /// The final residual acts as the identity.
    pub residual_identity: bool,
}

impl RootChecks {
    pub fn all(&self) -> bool {
        self.decomposition && self.power && self.top_level_bound && self.residual_identity
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RootCertificate {
    pub l: u32,
    pub gamma_prime: AlmostTranslation,
    pub gamma_prime_word: Word,
    pub gamma_prime_label: String,
    pub eta: Word,
    pub eta_label: String,
    /// Exponent `c_i ∈ [0, l)` per generator.
    pub exponents: Vec<i64>,
    /// `Π γ_i^{c_i}`, level 1 first.
    pub power_word: Word,
    pub power_label: String,
    pub levels: Vec<LevelStep>,
    pub checks: RootChecks,
}

fn integer(q: &BigRational) -> Option<i64> {
    q.is_integer().then(|| q.to_integer().to_i64()).flatten()
}

/// Approximate `l`-th root of `γ_p` modulo the group generated by `generators`.
///
/// Works from the top level down: at level `j` the residual
/// `(γ_p Ĥ^{-1})^l E^{-1}` lies in `K_j`, its level shift is written as an integer
/// combination of the level-`j` generators, and the quotient and remainder by `l` are
/// pushed into `Ĥ` and `E`. All level shifts are read off exactly at rational probes.
pub fn approx_lth_root(generators: &[AlmostTranslation], gamma_p: &AlmostTranslation, l: u32, probe_count: usize) -> Result<RootCertificate> {
    if l == 0 {
        return domain("l must be at least 1");
    }
    if generators.is_empty() {
        return Err(Error::Empty("generators".into()));
    }
    let d = generators.len();
    let mut maps = generators.to_vec();
    maps.push(gamma_p.clone());
    let mut names: Vec<String> = (1..=d).map(|i| format!("g{i}")).collect();
    names.push("gp".into());
    let alpha = Alphabet::new(maps, names)?;
    let spec = alpha.spec().clone();
    let r = spec.rank();
    let probes = rational_probes(spec.mults(), probe_count.max(2));
    let float_probes: Vec<BlockPoint> = probes.iter().map(|p| exact::exact_to_block(p)).collect();

    let gp = Word::letter(d, 1);
    let levels_of: Vec<usize> = generators.iter().map(|g| level_of(g, &float_probes)).collect();
    let gen_values: Vec<Vec<BigRational>> = (0..d)
        .map(|i| {
            let lv = levels_of[i];
            if lv == 0 {
                Ok(vec![])
            } else {
                alpha.level_value(&Word::letter(i, 1), lv, &probes)
            }
        })
        .collect::<Result<_>>()?;

    let lz = BigInt::from(l);
    let mut h = Word::identity();
    let mut e = Word::identity();
    let mut exponents = vec![0i64; d];
    let mut steps = Vec::with_capacity(r);
    for j in (1..=r).rev() {
        let residual = gp.mul(&h.inverse()).pow(l).mul(&e.inverse());
        let target = alpha.level_value(&residual, j, &probes)?;
        let idx: Vec<usize> = (0..d).filter(|&i| levels_of[i] == j).collect();
        let columns: Vec<Vec<BigRational>> = idx.iter().map(|&i| gen_values[i].clone()).collect();
        let a = if target.iter().all(Zero::is_zero) {
            vec![BigRational::zero(); idx.len()]
        } else {
            exact::solve(&columns, &target).ok_or_else(|| {
                Error::InfiniteIndexSuspected(format!("level {j} shift is not spanned by the level-{j} generators"))
            })?
        };
        let mut eta_hat = Word::identity();
        let mut err = Word::identity();
        for (k, &i) in idx.iter().enumerate() {
            let ai = integer(&a[k]).ok_or_else(|| {
                Error::InfiniteIndexSuspected(format!("non-integral coefficient {} at level {j}", a[k]))
            })?;
            let (q, c) = BigInt::from(ai).div_mod_floor(&lz);
            let (q, c) = (q.to_i64().unwrap_or(0), c.to_i64().unwrap_or(0));
            eta_hat.push(i, q);
            err.push(i, c);
            exponents[i] = c;
        }
        steps.push(LevelStep {
            level: j,
            generators: idx,
            target: target.iter().map(ToString::to_string).collect(),
            coefficients: a.iter().map(ToString::to_string).collect(),
            eta_hat: eta_hat.label(&alpha.names),
            err: err.label(&alpha.names),
        });
        h = h.mul(&eta_hat);
        e = err.mul(&e);
    }

    let gamma_prime_word = gp.mul(&h.inverse());
    let residual = gamma_prime_word.pow(l).mul(&e.inverse());
    let residual_identity = alpha.agree(&residual, &Word::identity(), &probes)?;
    let decomposition = alpha.agree(&gp, &gamma_prime_word.mul(&h), &probes)?;
    let power = alpha.agree(&gamma_prime_word.pow(l), &e, &probes)?;

    let top = |w: &Word| -> Result<Vec<BigRational>> {
        let disp = alpha.displacements(w, &probes[..1])?;
        Ok(disp[0][r - 1].clone())
    };
    let gp_top = top(&gamma_prime_word)?;
    let gen_tops: Vec<Vec<BigRational>> = (0..d).map(|i| top(&Word::letter(i, 1))).collect::<Result<_>>()?;
    let top_level_bound = if spec.mults()[r - 1] == 1 {
        let lhs = gp_top[0].abs();
        let rhs = gen_tops.iter().fold(BigRational::zero(), |acc, v| acc + v[0].abs());
        lhs <= rhs
    } else {
        let lhs = norm(&crate::mapalg::expr::to_f64(&gp_top));
        let rhs: f64 = gen_tops.iter().map(|v| norm(&crate::mapalg::expr::to_f64(v))).sum();
        lhs <= rhs * (1.0 + 1e-12)
    };

    Ok(RootCertificate {
        l,
        gamma_prime: alpha.compose(&gamma_prime_word),
        gamma_prime_label: gamma_prime_word.label(&alpha.names),
        gamma_prime_word,
        eta_label: h.label(&alpha.names),
        eta: h,
        exponents,
        power_label: e.label(&alpha.names),
        power_word: e,
        levels: steps,
        checks: RootChecks { decomposition, power, top_level_bound, residual_identity },
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DisplacementBound {
    /// `R_i = Σ_g B^max_{i,g} + ε_i`.
    pub per_level: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub total: f64,
}

/// Displacement bound `R` for a root `γ'` from the generators' certificates.
pub fn displacement_bound(gamma_prime: &AlmostTranslation, generators: &[AlmostTranslation]) -> Result<DisplacementBound> {
    let r = gamma_prime.spec().rank();
    let epsilon = epsilon_bounds(gamma_prime)?;
    let mut per_level = Vec::with_capacity(r);
    for i in 0..r {
        let mut s = epsilon[i];
        for g in generators {
            s += g.shift_sup(i)?;
        }
        per_level.push(s);
    }
    let total = per_level.iter().sum();
    Ok(DisplacementBound { per_level, epsilon, total })
}

/// Largest Euclidean displacement `|γ(x) - x|` over the sample points.
pub fn sampled_displacement(gamma: &AlmostTranslation, points: &[BlockPoint]) -> f64 {
    points.iter().map(|p| norm(&gamma.apply(p).sub(p).flat())).fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShuffleReport {
    pub level: usize,
    /// `B_{i,γκ} = B_{i,κγ} = B_{i,γ}` for every `i > j`.
    pub above: bool,
    /// `B_{j,γκ} = B_{j,κγ}`.
    pub at_level: bool,
    /// `B_{j,κη^{-1}} = B_{j,γ}` when `B_{j,κ} = B_{j,γη}`; `None` when the hypothesis fails.
    pub cancellation: Option<bool>,
}

/// Exact check of the shuffle identities for `κ ∈ K_j` at rational probes.
pub fn shuffle_check(
    gamma: &AlmostTranslation,
    kappa: &AlmostTranslation,
    eta: &AlmostTranslation,
    j: usize,
    probe_count: usize,
) -> Result<ShuffleReport> {
    let alpha = Alphabet::new(
        vec![gamma.clone(), kappa.clone(), eta.clone()],
        vec!["g".into(), "k".into(), "e".into()],
    )?;
    let spec = alpha.spec().clone();
    if j == 0 || j > spec.rank() {
        return domain(format!("level {j} outside 1..={}", spec.rank()));
    }
    let probes = rational_probes(spec.mults(), probe_count.max(2));
    let (g, k, e) = (Word::letter(0, 1), Word::letter(1, 1), Word::letter(2, 1));
    alpha.level_value(&k, j, &probes)?;
    let gk = alpha.displacements(&g.mul(&k), &probes)?;
    let kg = alpha.displacements(&k.mul(&g), &probes)?;
    let gg = alpha.displacements(&g, &probes)?;
    let above = (j..spec.rank()).all(|i| gk.iter().zip(&kg).zip(&gg).all(|((a, b), c)| a[i] == b[i] && a[i] == c[i]));
    let at_level = gk.iter().zip(&kg).all(|(a, b)| a[j - 1] == b[j - 1]);
    let ge = alpha.displacements(&g.mul(&e), &probes)?;
    let kk = alpha.displacements(&k, &probes)?;
    let hyp = ge.iter().zip(&kk).all(|(a, b)| a[j - 1] == b[j - 1]);
    let cancellation = if hyp {
        let ke = alpha.displacements(&k.mul(&e.inverse()), &probes)?;
        Some(ke.iter().zip(&gg).all(|(a, b)| a[j - 1] == b[j - 1]))
    } else {
        None
    };
    Ok(ShuffleReport { level: j, above, at_level, cancellation })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstimationReport {
    /// `(B^max_{i,γη}, B^max_{i,γ} + B^max_{i,η})` per level.
    pub subadditive: Vec<(f64, f64)>,
    /// `(l B^max_{i,γ}, B^max_{i,γ^l} + l ε_{i,γ})` per level.
    pub power: Vec<(f64, f64)>,
    pub pass: bool,
}

/// Sampled check of the sup estimates for products and powers.
pub fn estimation_check(gamma: &AlmostTranslation, eta: &AlmostTranslation, l: u32, points: &[BlockPoint]) -> Result<EstimationReport> {
    let r = gamma.spec().rank();
    let prod = gamma.compose(eta)?;
    let pw = gamma.power(l as i64);
    let eps = epsilon_bounds(gamma)?;
    let slack = 1e-12;
    let mut pass = true;
    let mut subadditive = Vec::with_capacity(r);
    let mut power = Vec::with_capacity(r);
    for i in 0..r {
        let s = (sampled_sup(&prod, i, points), sampled_sup(gamma, i, points) + sampled_sup(eta, i, points));
        let p = (l as f64 * sampled_sup(gamma, i, points), sampled_sup(&pw, i, points) + l as f64 * eps[i]);
        pass &= s.0 <= s.1 + slack && p.0 <= p.1 + slack;
        subadditive.push(s);
        power.push(p);
    }
    Ok(EstimationReport { subadditive, power, pass })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct OrbitCount {
    pub k: f64,
    pub count: usize,
    /// True when elements of the longest enumerated length still land in the ball.
    pub saturated: bool,
}

fn fingerprint(images: &[BlockPoint]) -> Vec<i64> {
    images.iter().flat_map(|p| p.flat()).map(|x| (x * 1e9).round() as i64).collect()
}

/// `#{γ : D_M(γ x_0, x_0) <= k}` for each radius, by breadth-first search over words of
/// length at most `max_len`. Elements are told apart by their images of a few probe points.
pub fn orbit_growth(gens: &[AlmostTranslation], x0: &BlockPoint, ks: &[f64], max_len: usize) -> Result<Vec<OrbitCount>> {
    let Some(first) = gens.first() else {
        return Ok(ks.iter().map(|&k| OrbitCount { k, count: usize::from(k >= 0.0), saturated: false }).collect());
    };
    let spec = first.spec().clone();
    spec.check(x0)?;
    let inverses: Vec<AlmostTranslation> = gens.iter().map(AlmostTranslation::inverse).collect();
    let mut probes = vec![x0.clone()];
    probes.extend(rational_probes(spec.mults(), 3).iter().map(|p| exact::exact_to_block(p)));
    let kmax = ks.iter().copied().fold(0.0, f64::max);
    let mut seen: HashSet<Vec<i64>> = HashSet::new();
    seen.insert(fingerprint(&probes));
    let mut dists = vec![0.0];
    let mut frontier = vec![probes.clone()];
    let mut last_layer_hits = vec![false; ks.len()];
    for len in 1..=max_len {
        let mut next = Vec::new();
        for images in &frontier {
            for f in gens.iter().chain(&inverses) {
                let img: Vec<BlockPoint> = images.iter().map(|p| f.apply(p)).collect();
                if seen.insert(fingerprint(&img)) {
                    let dist = distance_unchecked(&spec, &img[0], x0);
                    dists.push(dist);
                    if len == max_len {
                        for (h, &k) in last_layer_hits.iter_mut().zip(ks) {
                            *h |= dist <= k;
                        }
                    }
                    // Prune elements far outside every ball.
                    if dist <= 4.0 * kmax + 4.0 {
                        next.push(img);
                    }
                }
            }
        }
        frontier = next;
    }
    Ok(ks
        .iter()
        .zip(last_layer_hits)
        .map(|(&k, saturated)| OrbitCount { k, count: dists.iter().filter(|&&d| d <= k).count(), saturated })
        .collect())
}

pub fn orbit_growth_csv(counts: &[OrbitCount]) -> String {
    let mut s = String::from("k,count,saturated\n");
    for c in counts {
        let _ = writeln!(s, "{},{},{}", c.k, c.count, c.saturated);
    }
    s
}
