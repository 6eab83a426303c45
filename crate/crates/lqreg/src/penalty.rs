//! The `l^q` coefficient penalty `sum_i |a_i|^q`, the full regularized
//! objective, and the exact scalar proximal operator
//! `prox(v) = argmin_a 0.5 (a - v)^2 + tau |a|^q` for every exponent
//! `q in [0.05, inf)`.
//!
//! Closed forms are used for `q = 1` (soft threshold), `q = 2` (linear
//! shrinkage) and `q = 1/2` (cubic root in trigonometric form). Every other
//! exponent is solved numerically: safeguarded Newton on the monotone
//! stationarity equation for `q > 1`, bisection on the unimodal derivative
//! plus an explicit objective comparison against 0 for `q < 1`. Ties between
//! 0 and a nonzero stationary point break toward 0.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponents below this are rejected: the penalty degenerates toward a
/// counting measure and the grid oracle used to validate the prox becomes
/// unreliable.
pub const MIN_EXPONENT: f64 = 0.05;

/// Derivative tolerance for the numeric prox branches.
const PROX_GRAD_TOL: f64 = 1e-12;
/// Interval-width tolerance for the numeric prox branches.
const PROX_WIDTH_TOL: f64 = 1e-14;

/// Penalty exponent `q` and regularization weight `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub q: f64,
    pub lambda: f64,
}

impl PenaltySpec {
    pub fn new(q: f64, lambda: f64) -> Result<Self> {
        if !q.is_finite() || q < MIN_EXPONENT {
            return Err(Error::config(format!(
                "penalty exponent q must be finite and >= {MIN_EXPONENT}, got {q}"
            )));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::config(format!("lambda must be positive, got {lambda}")));
        }
        Ok(PenaltySpec { q, lambda })
    }
}

/// `sum_i |a_i|^q`.
pub fn penalty_value(a: &[f64], q: f64) -> f64 {
    debug_assert!(q > 0.0);
    if (q - 1.0).abs() < f64::EPSILON {
        a.iter().map(|x| x.abs()).sum()
    } else if (q - 2.0).abs() < f64::EPSILON {
        a.iter().map(|x| x * x).sum()
    } else {
        a.iter().map(|x| x.abs().powf(q)).sum()
    }
}

/// `(1/m) ||G a - y||^2 + lambda sum_i |a_i|^q`.
pub fn objective(a: &DVector<f64>, gram: &DMatrix<f64>, y: &DVector<f64>, spec: &PenaltySpec) -> Result<f64> {
    if gram.ncols() != a.len() {
        return Err(Error::DimensionMismatch { expected: gram.ncols(), got: a.len() });
    }
    if gram.nrows() != y.len() {
        return Err(Error::DimensionMismatch { expected: gram.nrows(), got: y.len() });
    }
    let r = gram * a - y;
    Ok(r.norm_squared() / y.len() as f64 + spec.lambda * penalty_value(a.as_slice(), spec.q))
}

/// Global minimizer of `h(a) = 0.5 (a - v)^2 + tau |a|^q`.
///
/// Odd in `v`; the output never exceeds `|v|` in magnitude and never flips
/// sign. For `q < 1` exact ties between 0 and the nonzero stationary point
/// return 0.
pub fn prox_scalar(v: f64, tau: f64, q: f64) -> f64 {
    assert!(tau > 0.0, "prox threshold tau must be positive");
    assert!(q >= MIN_EXPONENT, "penalty exponent q = {q} below supported minimum {MIN_EXPONENT}");
    if v == 0.0 {
        return 0.0;
    }
    let mag = prox_positive(v.abs(), tau, q);
    if v < 0.0 {
        -mag
    } else {
        mag
    }
}

/// Prox on the positive half-line, `v > 0`.
fn prox_positive(v: f64, tau: f64, q: f64) -> f64 {
    if (q - 1.0).abs() < f64::EPSILON {
        return (v - tau).max(0.0);
    }
    if (q - 2.0).abs() < f64::EPSILON {
        return v / (1.0 + 2.0 * tau);
    }
    if (q - 0.5).abs() < f64::EPSILON {
        return prox_half(v, tau);
    }
    if q > 1.0 {
        prox_newton_convex(v, tau, q)
    } else {
        prox_bisect_nonconvex(v, tau, q)
    }
}

fn h_value(a: f64, v: f64, tau: f64, q: f64) -> f64 {
    0.5 * (a - v) * (a - v) + tau * a.abs().powf(q)
}

/// Closed form for q = 1/2. The positive stationarity condition, written in
/// `b = sqrt(a)`, is the depressed cubic `b^3 - v b + tau/2 = 0`; two
/// positive roots exist iff `v^3 > 27 tau^2 / 16`, and the larger one is the
/// local minimum of `h` on `a > 0`.
fn prox_half(v: f64, tau: f64) -> f64 {
    if v * v * v <= 27.0 * tau * tau / 16.0 {
        return 0.0;
    }
    let phi = (-(3.0 * 3.0f64.sqrt() * tau) / (4.0 * v.powf(1.5))).acos();
    let b = 2.0 * (v / 3.0).sqrt() * (phi / 3.0).cos();
    let a = b * b;
    // Two-sided comparison against the sparse candidate; ties go to 0.
    if h_value(a, v, tau, 0.5) < 0.5 * v * v {
        a
    } else {
        0.0
    }
}

/// q > 1: `h` is strictly convex and the minimizer is the unique root of
/// `psi(a) = a + q tau a^(q-1) - v` in `(0, v)`. Newton with a bisection
/// safeguard keeps every iterate inside the bracket.
fn prox_newton_convex(v: f64, tau: f64, q: f64) -> f64 {
    let psi = |a: f64| a + q * tau * a.powf(q - 1.0) - v;
    let psi_deriv = |a: f64| 1.0 + q * (q - 1.0) * tau * a.powf(q - 2.0);
    let (mut lo, mut hi) = (0.0f64, v);
    let mut a = v / (1.0 + 2.0 * tau.min(1.0)).min(2.0);
    if !(a > lo && a < hi) {
        a = 0.5 * v;
    }
    for _ in 0..200 {
        let f = psi(a);
        if f.abs() <= PROX_GRAD_TOL || (hi - lo) <= PROX_WIDTH_TOL * v.max(1.0) {
            return a;
        }
        if f > 0.0 {
            hi = a;
        } else {
            lo = a;
        }
        let step = f / psi_deriv(a);
        let newton = a - step;
        a = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    a
}

/// q < 1 (other than the 1/2 closed form). On `a > 0` the derivative
/// `h'(a) = a - v + q tau a^(q-1)` decreases up to the inflection point and
/// increases after it, so it has at most two roots; the larger root is the
/// candidate local minimum, compared explicitly against `a = 0`.
fn prox_bisect_nonconvex(v: f64, tau: f64, q: f64) -> f64 {
    let hp = |a: f64| a - v + q * tau * a.powf(q - 1.0);
    let a_infl = (q * (1.0 - q) * tau).powf(1.0 / (2.0 - q));
    if !a_infl.is_finite() || a_infl <= 0.0 {
        return 0.0;
    }
    if hp(a_infl) > 0.0 {
        return 0.0; // derivative strictly positive on (0, inf): no stationary point
    }
    let (mut lo, mut hi) = (a_infl, v.max(a_infl * (1.0 + 1e-9)));
    debug_assert!(hp(hi) >= 0.0);
    for _ in 0..200 {
        if (hi - lo) <= PROX_WIDTH_TOL * v.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f = hp(mid);
        if f.abs() <= PROX_GRAD_TOL {
            lo = mid;
            hi = mid;
            break;
        }
        if f > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let a = 0.5 * (lo + hi);
    if h_value(a, v, tau, q) < 0.5 * v * v {
        a
    } else {
        0.0
    }
}

/// One evaluated case of the prox-vs-grid oracle suite.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProxCase {
    pub v: f64,
    pub tau: f64,
    pub q: f64,
    pub prox: f64,
    pub prox_objective: f64,
    pub grid_objective: f64,
    /// `prox_objective - grid_objective`; the suite passes while this stays
    /// below the tolerance.
    pub gap: f64,
}

/// Result of running the randomized prox oracle suite.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProxCheckReport {
    pub schema_version: u32,
    pub cases: usize,
    pub seed: u64,
    pub objective_tolerance: f64,
    pub failures: usize,
    pub max_gap: f64,
    /// Cases that violated optimality, oddness or shrinkage.
    pub failed_cases: Vec<ProxCase>,
}

impl ProxCheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Exponents exercised by the oracle suite.
pub const PROX_SUITE_EXPONENTS: [f64; 8] = [0.3, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0];

/// Objective tolerance of the oracle suite.
pub const PROX_SUITE_TOL: f64 = 1e-6;

/// Randomized prox optimality suite: `h(prox(v))` must not exceed the best
/// value found by a dense grid (step 1e-4 on `[-|v|, |v|]`, refined to 1e-8
/// around the coarse winner) by more than [`PROX_SUITE_TOL`]. Oddness and
/// shrinkage are checked exactly on every case.
pub fn prox_oracle_suite(cases: usize, seed: u64) -> ProxCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failed = Vec::new();
    let mut max_gap = f64::NEG_INFINITY;
    for _ in 0..cases {
        let v: f64 = rng.random_range(-5.0..=5.0);
        let tau: f64 = rng.random_range(1e-6..=2.0);
        let q = PROX_SUITE_EXPONENTS[rng.random_range(0..PROX_SUITE_EXPONENTS.len())];

        let p = prox_scalar(v, tau, q);
        let p_neg = prox_scalar(-v, tau, q);
        let prox_obj = h_value(p, v, tau, q);
        let grid_obj = grid_min_objective(v, tau, q);
        let gap = prox_obj - grid_obj;
        max_gap = max_gap.max(gap);

        let odd_ok = p_neg == -p;
        let shrink_ok = p.abs() <= v.abs();
        let sign_ok = p == 0.0 || p.signum() == v.signum();
        if gap > PROX_SUITE_TOL || !odd_ok || !shrink_ok || !sign_ok {
            failed.push(ProxCase { v, tau, q, prox: p, prox_objective: prox_obj, grid_objective: grid_obj, gap });
        }
    }
    ProxCheckReport {
        schema_version: 1,
        cases,
        seed,
        objective_tolerance: PROX_SUITE_TOL,
        failures: failed.len(),
        max_gap,
        failed_cases: failed,
    }
}

/// Independent grid-search oracle for the scalar prox objective: best value
/// of `h` over a step-1e-4 grid on `[-|v|, |v|]`, refined once with step
/// 1e-8 around the coarse argmin. Deliberately shares no code with
/// [`prox_scalar`] beyond the objective itself.
pub fn grid_min_objective(v: f64, tau: f64, q: f64) -> f64 {
    let (arg, _) = grid_argmin(v, tau, q);
    h_value(arg, v, tau, q)
}

/// Grid-search argmin used by the oracle; exposed for tests that freeze
/// individual prox values.
pub fn grid_argmin(v: f64, tau: f64, q: f64) -> (f64, f64) {
    let r = v.abs();
    let coarse = 1e-4;
    let mut best_a = 0.0;
    let mut best_h = h_value(0.0, v, tau, q);
    let scan = |a: f64, best_a: &mut f64, best_h: &mut f64| {
        let h = h_value(a, v, tau, q);
        if h < *best_h {
            *best_h = h;
            *best_a = a;
        }
    };
    let n = (2.0 * r / coarse).ceil() as usize;
    for k in 0..=n {
        let a = (-r + k as f64 * coarse).min(r);
        scan(a, &mut best_a, &mut best_h);
    }
    scan(r, &mut best_a, &mut best_h);
    // refinement pass around the coarse winner
    let fine = 1e-8;
    let lo = (best_a - coarse).max(-r);
    let hi = (best_a + coarse).min(r);
    let n = ((hi - lo) / fine).ceil() as usize;
    for k in 0..=n {
        let a = (lo + k as f64 * fine).min(hi);
        scan(a, &mut best_a, &mut best_h);
    }
    (best_a, best_h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn penalty_examples() {
        assert_eq!(penalty_value(&[1.0, -2.0], 1.0), 3.0);
        assert_eq!(penalty_value(&[1.0, -2.0], 2.0), 5.0);
        assert_relative_eq!(penalty_value(&[1.0, -2.0], 0.5), 1.0 + 2.0f64.sqrt(), max_relative = 1e-15);
        assert_eq!(penalty_value(&[0.0, 0.0], 0.7), 0.0);
    }

    #[test]
    fn penalty_permutation_invariant() {
        let a = [0.3, -1.7, 2.2, -0.1];
        let b = [2.2, 0.3, -0.1, -1.7];
        assert_eq!(penalty_value(&a, 0.5), penalty_value(&b, 0.5));
    }

    #[test]
    fn objective_examples() {
        let spec = PenaltySpec::new(2.0, 1.0).unwrap();
        let g = DMatrix::from_element(1, 1, 1.0);
        let y = DVector::from_element(1, 2.0);
        // a = 0
        let zero = DVector::from_element(1, 0.0);
        assert_eq!(objective(&zero, &g, &y, &spec).unwrap(), 4.0);
        // (1 - 2)^2 + 1 = 2
        let a = DVector::from_element(1, 1.0);
        assert_eq!(objective(&a, &g, &y, &spec).unwrap(), 2.0);
    }

    #[test]
    fn objective_matches_direct_formula() {
        let spec = PenaltySpec::new(0.5, 0.3).unwrap();
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 1.0]);
        let y = DVector::from_column_slice(&[0.7, -0.2]);
        let a = DVector::from_column_slice(&[0.25, -0.5]);
        let r0 = 1.0 * 0.25 + 0.4 * (-0.5) - 0.7;
        let r1 = 0.4 * 0.25 + 1.0 * (-0.5) - (-0.2);
        let direct = (r0 * r0 + r1 * r1) / 2.0 + 0.3 * (0.25f64.sqrt() + 0.5f64.sqrt());
        assert_relative_eq!(objective(&a, &g, &y, &spec).unwrap(), direct, max_relative = 1e-14);
    }

    #[test]
    fn objective_rejects_dimension_mismatch() {
        let spec = PenaltySpec::new(2.0, 1.0).unwrap();
        let g = DMatrix::from_element(2, 2, 1.0);
        let y = DVector::from_element(2, 0.0);
        let a = DVector::from_element(3, 0.0);
        assert!(objective(&a, &g, &y, &spec).is_err());
    }

    #[test]
    fn spec_rejects_tiny_q() {
        assert!(PenaltySpec::new(0.01, 1.0).is_err());
        assert!(PenaltySpec::new(0.05, 1.0).is_ok());
        assert!(PenaltySpec::new(1.0, 0.0).is_err());
    }

    #[test]
    fn prox_soft_threshold() {
        assert_eq!(prox_scalar(3.0, 1.0, 1.0), 2.0);
        assert_eq!(prox_scalar(0.5, 1.0, 1.0), 0.0);
        assert_eq!(prox_scalar(-3.0, 1.0, 1.0), -2.0);
    }

    #[test]
    fn prox_quadratic() {
        assert_relative_eq!(prox_scalar(3.0, 1.0, 2.0), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn prox_half_no_stationary_point() {
        // a + 0.5 a^{-1/2} has minimum ~1.19 > 0.5, so the prox collapses to 0.
        assert_eq!(prox_scalar(0.5, 1.0, 0.5), 0.0);
    }

    #[test]
    fn prox_half_matches_grid_oracle() {
        let (arg, _) = grid_argmin(2.0, 1.0, 0.5);
        let p = prox_scalar(2.0, 1.0, 0.5);
        assert!((p - arg).abs() < 1e-6, "prox {p} vs grid argmin {arg}");
        // frozen from the grid oracle (run before trusting: argmin ~ 1.60543)
        assert!((p - 1.60543).abs() < 1e-4);
    }

    #[test]
    fn prox_oddness_exact_across_exponents() {
        for &q in &PROX_SUITE_EXPONENTS {
            for &v in &[0.1, 0.7, 1.3, 4.9] {
                for &tau in &[0.05, 0.7, 1.9] {
                    assert_eq!(prox_scalar(-v, tau, q), -prox_scalar(v, tau, q), "q={q} v={v} tau={tau}");
                }
            }
        }
    }

    #[test]
    fn prox_zero_input() {
        for &q in &PROX_SUITE_EXPONENTS {
            assert_eq!(prox_scalar(0.0, 0.8, q), 0.0);
        }
    }

    #[test]
    fn prox_nonexpansive_for_convex_exponents() {
        for &q in &[1.0, 1.5, 2.0, 3.0, 4.0] {
            let vs = [-4.0, -1.1, -0.2, 0.0, 0.3, 0.9, 2.5, 5.0];
            for &v1 in &vs {
                for &v2 in &vs {
                    let d = (prox_scalar(v1, 0.6, q) - prox_scalar(v2, 0.6, q)).abs();
                    assert!(d <= (v1 - v2).abs() + 1e-12, "q={q} v1={v1} v2={v2}");
                }
            }
        }
    }

    #[test]
    fn oracle_suite_clean_on_default_size() {
        let report = prox_oracle_suite(60, 7);
        assert!(report.passed(), "failures: {:?}", report.failed_cases);
    }
}
