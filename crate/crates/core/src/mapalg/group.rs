//! Finite generating sets and enumeration of reduced words.

use serde::{Deserialize, Serialize};

use super::blockmap::BlockMap;
use crate::error::{Error, Result};
use crate::space::{BlockPoint, PointMap};

/// A generator together with its inverse and the stretch of its quotient map.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub map: BlockMap,
    pub inverse: BlockMap,
    #[serde(default = "one")]
    pub quotient_stretch: f64,
}

fn one() -> f64 {
    1.0
}

impl Generator {
    pub fn new(map: BlockMap, inverse: BlockMap, quotient_stretch: f64) -> Result<Self> {
        if map.spec() != inverse.spec() {
            return Err(Error::DimensionMismatch {
                expected: format!("{:?}", map.spec()),
                got: format!("{:?}", inverse.spec()),
            });
        }
        if !(quotient_stretch > 0.0) {
            return Err(Error::Domain("quotient stretch must be positive".into()));
        }
        Ok(Generator { map, inverse, quotient_stretch })
    }

    /// Largest `|G^{-1}(G(p)) - p|` over the probes.
    pub fn inverse_defect(&self, probes: &[BlockPoint]) -> f64 {
        probes
            .iter()
            .map(|p| {
                let back = self.inverse.apply(&self.map.apply(p));
                back.sub(p).flat().iter().fold(0.0f64, |m, x| m.max(x.abs()))
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Letter {
    pub gen: usize,
    pub inv: bool,
}

impl Letter {
    pub fn map<'a>(&self, gens: &'a [Generator]) -> &'a BlockMap {
        if self.inv {
            &gens[self.gen].inverse
        } else {
            &gens[self.gen].map
        }
    }

    pub fn stretch(&self, gens: &[Generator]) -> f64 {
        let t = gens[self.gen].quotient_stretch;
        if self.inv {
            1.0 / t
        } else {
            t
        }
    }

    pub fn inverse(&self) -> Letter {
        Letter { gen: self.gen, inv: !self.inv }
    }
}

/// Depth-first walk over reduced words of length `<= max_len`, extending on the left.
///
/// `state` describes the current word; `step(state, letter)` produces the state of
/// `letter ∘ word`; `visit` sees every word once, the empty word first. Letters in the
/// slice passed to `visit` are stored first-applied first.
pub fn walk_reduced_words<S>(
    ngen: usize,
    max_len: usize,
    init: S,
    step: &dyn Fn(&S, Letter) -> S,
    visit: &mut dyn FnMut(&[Letter], &S),
) {
    let mut word = Vec::with_capacity(max_len);
    visit(&word, &init);
    walk_rec(ngen, max_len, &init, &mut word, step, visit);
}

fn walk_rec<S>(
    ngen: usize,
    max_len: usize,
    state: &S,
    word: &mut Vec<Letter>,
    step: &dyn Fn(&S, Letter) -> S,
    visit: &mut dyn FnMut(&[Letter], &S),
) {
    if word.len() == max_len {
        return;
    }
    for gen in 0..ngen {
        for inv in [false, true] {
            let l = Letter { gen, inv };
            if word.last() == Some(&l.inverse()) {
                continue;
            }
            let next = step(state, l);
            word.push(l);
            visit(word, &next);
            walk_rec(ngen, max_len, &next, word, step, visit);
            word.pop();
        }
    }
}

/// Number of reduced words of length `<= len` on `ngen` generators.
pub fn reduced_word_count(ngen: usize, len: usize) -> usize {
    if ngen == 0 {
        return 1;
    }
    let mut total = 1;
    let mut layer = 2 * ngen;
    for _ in 0..len {
        total += layer;
        layer *= 2 * ngen - 1;
    }
    total
}

/// Apply a word (first-applied letter first).
pub fn apply_word(gens: &[Generator], word: &[Letter], p: &BlockPoint) -> BlockPoint {
    word.iter().fold(p.clone(), |q, l| l.map(gens).apply(&q))
}

/// Inverse of a word.
pub fn invert_word(word: &[Letter]) -> Vec<Letter> {
    word.iter().rev().map(Letter::inverse).collect()
}

/// Quotient stretch of a word.
pub fn word_stretch(gens: &[Generator], word: &[Letter]) -> f64 {
    word.iter().map(|l| l.stretch(gens)).product()
}
