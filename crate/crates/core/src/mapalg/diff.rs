//! Central finite differences with step `1e-5 (1 + |x|)`.

use nalgebra::DMatrix;

use crate::space::{BlockPoint, PointMap};

pub fn fd_step(x: f64) -> f64 {
    1e-5 * (1.0 + x.abs())
}

/// Jacobian of output block `out` with respect to input block `inp`.
pub fn block_jacobian(f: &dyn PointMap, p: &BlockPoint, out: usize, inp: usize) -> DMatrix<f64> {
    block_jacobian_with(f, p, out, inp, fd_step)
}

pub fn block_jacobian_with(
    f: &dyn PointMap,
    p: &BlockPoint,
    out: usize,
    inp: usize,
    step: impl Fn(f64) -> f64,
) -> DMatrix<f64> {
    let n_in = p.blocks[inp].len();
    let n_out = f.apply(p).blocks[out].len();
    let mut jac = DMatrix::zeros(n_out, n_in);
    let mut q = p.clone();
    for k in 0..n_in {
        let h = step(p.blocks[inp][k]);
        q.blocks[inp][k] = p.blocks[inp][k] + h;
        let fp = f.apply(&q);
        q.blocks[inp][k] = p.blocks[inp][k] - h;
        let fm = f.apply(&q);
        q.blocks[inp][k] = p.blocks[inp][k];
        for r in 0..n_out {
            jac[(r, k)] = (fp.blocks[out][r] - fm.blocks[out][r]) / (2.0 * h);
        }
    }
    jac
}

/// Derivative of the first block in the first-block variables.
pub fn first_block_jacobian(f: &dyn PointMap, p: &BlockPoint) -> DMatrix<f64> {
    block_jacobian(f, p, 0, 0)
}

/// `|det J|^{1/n}`, the conformal scale of a square matrix.
pub fn conformal_scale(j: &DMatrix<f64>) -> f64 {
    j.determinant().abs().powf(1.0 / j.nrows() as f64)
}

/// `log(σ_max / σ_min)`, zero exactly for similarities.
pub fn log_condition(j: &DMatrix<f64>) -> f64 {
    let sv = j.clone().singular_values();
    let hi = sv.iter().copied().fold(0.0, f64::max);
    let lo = sv.iter().copied().fold(f64::INFINITY, f64::min);
    (hi / lo).ln()
}

/// Similarity defect of a family of first-block Jacobians: the largest of the
/// per-sample log-conditions and of the log-deviations of `|det J|^{1/n}` from
/// their geometric mean.
pub fn similarity_defect(jacobians: &[DMatrix<f64>]) -> f64 {
    if jacobians.is_empty() {
        return 0.0;
    }
    let logs: Vec<f64> = jacobians.iter().map(|j| conformal_scale(j).ln()).collect();
    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    jacobians
        .iter()
        .zip(&logs)
        .map(|(j, l)| (l - mean).abs().max(log_condition(j)))
        .fold(0.0, f64::max)
}
