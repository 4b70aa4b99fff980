//! Exact rational linear algebra and rational probe points.

use num::{BigRational, One, Signed, Zero};

use crate::space::BlockPoint;

/// Solve `A a = b` over the rationals, where `columns[k]` is the `k`-th column of `A`.
///
/// Free variables are set to zero. Returns `None` when the system is inconsistent.
pub fn solve(columns: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let m = b.len();
    let n = columns.len();
    if columns.iter().any(|c| c.len() != m) {
        return None;
    }
    // Augmented rows.
    let mut rows: Vec<Vec<BigRational>> =
        (0..m).map(|i| columns.iter().map(|c| c[i].clone()).chain(std::iter::once(b[i].clone())).collect()).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let Some(p) = (r..m).find(|&i| !rows[i][c].is_zero()) else { continue };
        rows.swap(r, p);
        let inv = BigRational::one() / rows[r][c].clone();
        for x in rows[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..m {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                for k in c..=n {
                    let v = &rows[r][k] * &f;
                    rows[i][k] -= v;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == m {
            break;
        }
    }
    if rows[r..].iter().any(|row| !row[n].is_zero()) {
        return None;
    }
    let mut a = vec![BigRational::zero(); n];
    for (i, &c) in pivots.iter().enumerate() {
        a[c] = rows[i][n].clone();
    }
    Some(a)
}

/// Exact rational for an `f64`.
pub fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

pub fn rat_frac(p: i64, q: i64) -> BigRational {
    BigRational::new(p.into(), q.into())
}

pub fn block_to_exact(p: &BlockPoint) -> Vec<Vec<BigRational>> {
    p.blocks.iter().map(|b| b.iter().map(|&x| rat(x)).collect()).collect()
}

pub fn exact_to_block(p: &[Vec<BigRational>]) -> BlockPoint {
    BlockPoint::new(p.iter().map(|b| crate::mapalg::expr::to_f64(b)).collect())
}

/// Deterministic rational probes spread over a few scales.
pub fn rational_probes(mults: &[usize], count: usize) -> Vec<Vec<Vec<BigRational>>> {
    const NUM: [i64; 11] = [0, 1, -2, 5, -7, 11, 13, -17, 19, 23, -29];
    const DEN: [i64; 7] = [1, 3, 2, 7, 5, 4, 9];
    let mut k = 0usize;
    (0..count)
        .map(|_| {
            mults
                .iter()
                .map(|&n| {
                    (0..n)
                        .map(|_| {
                            k += 1;
                            rat_frac(NUM[(k * 7) % NUM.len()], DEN[(k * 3) % DEN.len()])
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// `|x|` for a block of exact scalars, exact only when the block is one-dimensional.
pub fn abs1(v: &[BigRational]) -> Option<BigRational> {
    (v.len() == 1).then(|| v[0].abs())
}
