//! Small dense/iterative linear-algebra helpers behind the solver surface.
//!
//! Systems here are always symmetric positive definite thanks to the
//! `+ m*lambda*I` shift. Small systems go through a dense Cholesky; large
//! ones use conjugate gradients, which converges in roughly as many
//! iterations as the Gram spectrum has eigenvalues above the shift (a few
//! dozen for Gaussian Gram matrices at the widths used here). CG falls back
//! to the dense path if it stalls.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Above this size the shifted solves switch from Cholesky to CG.
const DENSE_LIMIT: usize = 384;

const CG_REL_TOL: f64 = 1e-12;

/// Solve a dense SPD system via Cholesky; errors carry a condition estimate.
pub fn solve_spd(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = a.nrows();
    match a.clone().cholesky() {
        Some(chol) => Ok(chol.solve(b)),
        None => {
            let eig = a.symmetric_eigenvalues();
            let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
            Err(Error::solver(format!(
                "Cholesky failed on {n}x{n} system; eigenvalue range [{min:.3e}, {max:.3e}], \
                 condition estimate {:.3e}",
                max / min.abs().max(f64::MIN_POSITIVE)
            )))
        }
    }
}

/// Solve `(G + shift I) x = b`.
pub fn solve_shifted(gram: &DMatrix<f64>, b: &DVector<f64>, shift: f64) -> Result<DVector<f64>> {
    let n = gram.nrows();
    if n <= DENSE_LIMIT {
        let mut a = gram.clone();
        for i in 0..n {
            a[(i, i)] += shift;
        }
        return solve_spd(a, b);
    }
    let apply = |v: &DVector<f64>, out: &mut DVector<f64>| {
        out.gemv(1.0, gram, v, 0.0);
        out.axpy(shift, v, 1.0);
    };
    match conjugate_gradient(apply, b, 10 * n) {
        Some(x) => Ok(x),
        None => {
            let mut a = gram.clone();
            for i in 0..n {
                a[(i, i)] += shift;
            }
            solve_spd(a, b)
        }
    }
}

/// Solve `(G^T G + shift I) x = G^T b` for symmetric `G` without forming
/// `G^T G`.
pub fn solve_shifted_normal(gram: &DMatrix<f64>, b: &DVector<f64>, shift: f64) -> Result<DVector<f64>> {
    let n = gram.nrows();
    let rhs = gram * b;
    if n <= DENSE_LIMIT {
        let mut a = gram * gram;
        for i in 0..n {
            a[(i, i)] += shift;
        }
        return solve_spd(a, &rhs);
    }
    let mut tmp = DVector::<f64>::zeros(n);
    let apply = move |v: &DVector<f64>, out: &mut DVector<f64>| {
        tmp.gemv(1.0, gram, v, 0.0);
        out.gemv(1.0, gram, &tmp, 0.0);
        out.axpy(shift, v, 1.0);
    };
    match conjugate_gradient(apply, &rhs, 20 * n) {
        Some(x) => Ok(x),
        None => {
            let mut a = gram * gram;
            for i in 0..n {
                a[(i, i)] += shift;
            }
            solve_spd(a, &rhs)
        }
    }
}

/// Plain conjugate gradients from a zero start. Returns `None` if the
/// relative residual has not dropped below tolerance within `max_iters`.
fn conjugate_gradient<F>(mut apply: F, b: &DVector<f64>, max_iters: usize) -> Option<DVector<f64>>
where
    F: FnMut(&DVector<f64>, &mut DVector<f64>),
{
    let n = b.len();
    let b_norm = b.norm();
    if b_norm == 0.0 {
        return Some(DVector::zeros(n));
    }
    let mut x = DVector::<f64>::zeros(n);
    let mut r = b.clone();
    let mut p = r.clone();
    let mut ap = DVector::<f64>::zeros(n);
    let mut rs = r.norm_squared();
    for _ in 0..max_iters {
        apply(&p, &mut ap);
        let pap = p.dot(&ap);
        if pap <= 0.0 || !pap.is_finite() {
            return None;
        }
        let alpha = rs / pap;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        let rs_new = r.norm_squared();
        if rs_new.sqrt() <= CG_REL_TOL * b_norm {
            return Some(x);
        }
        p.axpy(1.0, &r, rs_new / rs); // p <- r + beta p
        rs = rs_new;
    }
    None
}

/// Largest eigenvalue of `G^2` (i.e. `sigma_max(G)^2` for symmetric `G`) by
/// power iteration from the all-ones direction.
pub fn max_eig_gram_squared(gram: &DMatrix<f64>) -> f64 {
    let n = gram.nrows();
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut w = DVector::<f64>::zeros(n);
    let mut w2 = DVector::<f64>::zeros(n);
    let mut lambda = 0.0f64;
    for _ in 0..5000 {
        w.gemv(1.0, gram, &v, 0.0);
        w2.gemv(1.0, gram, &w, 0.0);
        let next = v.dot(&w2); // Rayleigh quotient of G^2 at unit v
        let norm = w2.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = &w2 / norm;
        if (next - lambda).abs() <= 1e-10 * next.abs().max(1e-300) {
            return next;
        }
        lambda = next;
    }
    lambda
}
