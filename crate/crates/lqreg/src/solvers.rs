//! Minimizers of the coefficient-regularized objective
//! `(1/m) ||G a - y||^2 + lambda sum_i |a_i|^q`.
//!
//! * `q = 2` has an exact closed form through the shifted normal equations
//!   `(G^T G + m lambda I) a = G^T y`.
//! * The representer-based RKHS baseline solves `(G + m lambda I) b = y`;
//!   with `lambda = 1/m` this is the classical `(I + G) b = y` system.
//! * General `q` runs proximal gradient: plain monotone ISTA for `q < 1`,
//!   FISTA with a monotone safeguard for `q >= 1`. Any step that would
//!   increase the objective is rejected and retried with half the step, so
//!   recorded objective traces are non-increasing by construction.
//! * IRLS (`q <= 1`) minimizes the smoothed surrogate
//!   `(1/m)||G a - y||^2 + lambda sum_i w_i a_i^2`,
//!   `w_i = (q/2)(a_i^2 + eps)^(q/2 - 1)`, with `eps` driven down to a
//!   configured floor, and returns the better of the IRLS point and a
//!   zeros-initialized proximal-gradient point by true objective.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::penalty::{objective, penalty_value, prox_scalar, PenaltySpec};

/// Which optimizer to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Exact normal-equation solve; valid only for `q = 2`.
    ClosedFormQ2,
    ProxGrad,
    /// Iteratively reweighted least squares; valid only for `q <= 1`.
    Irls,
    /// `q = 2` goes to the closed form, everything else to proximal gradient.
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    /// Step `1/L` from the power-iteration Lipschitz estimate.
    #[default]
    FixedLipschitz,
    /// Adaptive: grow the accepted step slightly each iteration, halve on
    /// rejection.
    Backtracking,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Init {
    /// Start from the zero vector; gives the `objective <= M^2` guarantee.
    #[default]
    Zeros,
    /// Start from the better of zero and the representer solution of
    /// `(I + G) b = y` (the `lambda = 1/m` RKHS baseline).
    RlsWarmStart,
}

/// Optimizer knobs shared by all iterative solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub method: Method,
    pub max_iters: usize,
    /// Relative-objective-decrease tolerance; for `q >= 1` convergence also
    /// requires `kkt_residual < tol * (1 + ||y||_inf)`.
    pub tol: f64,
    pub step_rule: StepRule,
    pub init: Init,
    pub irls_epsilon_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: Method::Auto,
            max_iters: 5000,
            tol: 1e-9,
            step_rule: StepRule::FixedLipschitz,
            init: Init::Zeros,
            irls_epsilon_floor: 1e-12,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::config("max_iters must be >= 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::config("tol must be positive"));
        }
        if !(self.irls_epsilon_floor > 0.0) {
            return Err(Error::config("irls_epsilon_floor must be positive"));
        }
        Ok(())
    }
}

/// How much optimality the returned point carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolutionKind {
    /// Convex problem (`q >= 1`): the point approximates the global minimum.
    ConvexOptimum,
    /// Nonconvex problem (`q < 1`): stationary point only, global optimality
    /// not guaranteed.
    StationaryPoint,
}

/// Output of a fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub coeffs: DVector<f64>,
    /// Objective values per recorded iteration (surrogate objective for
    /// IRLS); non-increasing.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// First-order optimality residual; present only for `q >= 1`.
    pub kkt_residual: Option<f64>,
    pub kind: SolutionKind,
}

/// Exact `q = 2` minimizer: unique solution of `(G^T G + m lambda I) a = G^T y`.
pub fn solve_closed_form_q2(gram: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    check_system(gram, y, lambda)?;
    let m = y.len() as f64;
    linalg::solve_shifted_normal(gram, y, m * lambda)
}

/// Representer baseline: solves `(G + m lambda I) b = y`. With
/// `lambda = 1/m` this is the `(I + G) b = y` system whose solution is the
/// regularized least-squares fit in the kernel's RKHS.
pub fn solve_rkhs_rls(gram: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    check_system(gram, y, lambda)?;
    let m = y.len() as f64;
    linalg::solve_shifted(gram, y, m * lambda)
}

fn check_system(gram: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<()> {
    if gram.nrows() != gram.ncols() {
        return Err(Error::DimensionMismatch { expected: gram.nrows(), got: gram.ncols() });
    }
    if gram.nrows() != y.len() {
        return Err(Error::DimensionMismatch { expected: gram.nrows(), got: y.len() });
    }
    if !(lambda > 0.0) {
        return Err(Error::config(format!("lambda must be positive, got {lambda}")));
    }
    Ok(())
}

/// Upper estimate of the Lipschitz constant of the gradient of
/// `(1/m)||G a - y||^2`: `1.01 * (2/m) * sigma_max(G)^2` via power iteration.
pub fn lipschitz_estimate(gram: &DMatrix<f64>) -> f64 {
    let m = gram.nrows() as f64;
    1.01 * (2.0 / m) * linalg::max_eig_gram_squared(gram)
}

/// Distance from 0 to the first-order optimality set of the objective at
/// `a`: `max_i dist(0, grad_i + lambda * d|a_i|^q)`. For `q = 1` at
/// `a_i = 0` the subdifferential is `[-lambda, lambda]`. Requires `q >= 1`.
pub fn kkt_residual(a: &DVector<f64>, gram: &DMatrix<f64>, y: &DVector<f64>, spec: &PenaltySpec) -> Result<f64> {
    if spec.q < 1.0 {
        return Err(Error::config("kkt_residual requires q >= 1 (no convex certificate below)"));
    }
    if gram.ncols() != a.len() || gram.nrows() != y.len() {
        return Err(Error::DimensionMismatch { expected: gram.ncols(), got: a.len() });
    }
    let m = y.len() as f64;
    let resid = gram * a - y;
    let grad = gram * resid * (2.0 / m);
    let q = spec.q;
    let lambda = spec.lambda;
    let mut worst = 0.0f64;
    for i in 0..a.len() {
        let ai = a[i];
        let r = if (q - 1.0).abs() < f64::EPSILON {
            if ai == 0.0 {
                (grad[i].abs() - lambda).max(0.0)
            } else {
                (grad[i] + lambda * ai.signum()).abs()
            }
        } else {
            let dpen = if ai == 0.0 { 0.0 } else { lambda * q * ai.signum() * ai.abs().powf(q - 1.0) };
            (grad[i] + dpen).abs()
        };
        worst = worst.max(r);
    }
    Ok(worst)
}

/// Proximal-gradient solver for arbitrary `q`: monotone ISTA (`q < 1`) or
/// monotone-safeguarded FISTA (`q >= 1`).
pub fn solve_proximal_gradient(
    gram: &DMatrix<f64>,
    y: &DVector<f64>,
    spec: &PenaltySpec,
    cfg: &SolverConfig,
) -> Result<FitResult> {
    check_system(gram, y, spec.lambda)?;
    cfg.validate()?;
    let m = y.len();
    let mf = m as f64;
    let lip = lipschitz_estimate(gram);
    if !(lip > 0.0) || !lip.is_finite() {
        return Err(Error::numerical(format!("bad Lipschitz estimate {lip}")));
    }
    let convex = spec.q >= 1.0;

    let mut a = DVector::<f64>::zeros(m);
    if cfg.init == Init::RlsWarmStart {
        let warm = solve_rkhs_rls(gram, y, 1.0 / mf)?;
        let zero_obj = y.norm_squared() / mf;
        if objective(&warm, gram, y, spec)? < zero_obj {
            a = warm;
        }
    }

    let mut ga = gram * &a; // cached G a
    let obj_of = |coef: &DVector<f64>, gc: &DVector<f64>| -> f64 {
        let mut rss = 0.0;
        for i in 0..m {
            let r = gc[i] - y[i];
            rss += r * r;
        }
        rss / mf + spec.lambda * penalty_value(coef.as_slice(), spec.q)
    };
    let mut obj = obj_of(&a, &ga);
    let mut trace = Vec::with_capacity(cfg.max_iters.min(16_384) + 1);
    trace.push(obj);

    let mut eta_base = 1.0 / lip;
    let kkt_gate = cfg.tol * (1.0 + y.amax());
    let mut small_runs = 0usize;
    let mut converged = false;
    let mut iterations = 0usize;

    // Nesterov momentum state; `t` stays 1 (no extrapolation) for q < 1.
    let mut t = 1.0f64;
    let mut a_prev = a.clone();
    let mut ga_prev = ga.clone();

    let mut grad = DVector::<f64>::zeros(m);
    let mut resid = DVector::<f64>::zeros(m);

    for it in 1..=cfg.max_iters {
        iterations = it;
        let t_next = if convex { (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0 } else { 1.0 };
        let beta = if convex { (t - 1.0) / t_next } else { 0.0 };
        let (mut base, mut base_ga) = if beta > 0.0 {
            (&a + (&a - &a_prev) * beta, &ga + (&ga - &ga_prev) * beta)
        } else {
            (a.clone(), ga.clone())
        };

        resid.copy_from(&base_ga);
        resid -= y;
        grad.gemv(2.0 / mf, gram, &resid, 0.0);

        let mut eta = eta_base;
        let mut on_momentum = beta > 0.0;
        let mut momentum_restarted = false;
        let mut accepted: Option<(DVector<f64>, DVector<f64>, f64)> = None;
        for _attempt in 0..64 {
            let mut cand = DVector::<f64>::zeros(m);
            for i in 0..m {
                cand[i] = prox_scalar(base[i] - eta * grad[i], spec.lambda * eta, spec.q);
            }
            let gc = gram * &cand;
            let cobj = obj_of(&cand, &gc);
            if !cobj.is_finite() {
                return Err(Error::numerical(format!("non-finite objective at iteration {it}")));
            }
            if cobj <= obj {
                accepted = Some((cand, gc, cobj));
                break;
            }
            if on_momentum {
                // extrapolated step overshot: retry as a plain step from `a`
                base = a.clone();
                base_ga = ga.clone();
                resid.copy_from(&base_ga);
                resid -= y;
                grad.gemv(2.0 / mf, gram, &resid, 0.0);
                on_momentum = false;
                momentum_restarted = true;
                continue;
            }
            eta *= 0.5;
        }
        let Some((cand, gc, cobj)) = accepted else {
            // no step length made progress: already at numerical stationarity
            converged = true;
            break;
        };
        t = if momentum_restarted { 1.0 } else { t_next };
        if cfg.step_rule == StepRule::Backtracking {
            eta_base = (eta * 1.3).min(10.0 / lip);
        }

        let step_norm = (&cand - &a).norm();
        let rel_dec = (obj - cobj) / obj.abs().max(1e-300);
        a_prev = std::mem::replace(&mut a, cand);
        ga_prev = std::mem::replace(&mut ga, gc);
        obj = cobj;
        trace.push(obj);

        let small = rel_dec < cfg.tol && step_norm <= cfg.tol * (1.0 + a.norm());
        small_runs = if small { small_runs + 1 } else { 0 };
        if small_runs >= 5 {
            if convex {
                let kkt = kkt_residual(&a, gram, y, spec)?;
                if kkt <= kkt_gate {
                    converged = true;
                    break;
                }
                small_runs = 0;
            } else {
                converged = true;
                break;
            }
        }
    }

    let kkt = if convex { Some(kkt_residual(&a, gram, y, spec)?) } else { None };
    Ok(FitResult {
        coeffs: a,
        objective_trace: trace,
        iterations,
        converged,
        kkt_residual: kkt,
        kind: if convex { SolutionKind::ConvexOptimum } else { SolutionKind::StationaryPoint },
    })
}

/// IRLS for `q <= 1`. Each outer iteration solves the weighted ridge system
/// `(G^T G / m + lambda W) a = G^T y / m`; the smoothed surrogate objective
/// is non-increasing across outer iterations because the quadratic
/// majorizes the concave penalty and shrinking `eps` only lowers it.
pub fn solve_irls(
    gram: &DMatrix<f64>,
    y: &DVector<f64>,
    spec: &PenaltySpec,
    cfg: &SolverConfig,
) -> Result<FitResult> {
    check_system(gram, y, spec.lambda)?;
    cfg.validate()?;
    if spec.q > 1.0 {
        return Err(Error::config(format!(
            "IRLS supports 0 < q <= 1 only (got q = {}); use prox-grad above",
            spec.q
        )));
    }
    let m = y.len();
    let mf = m as f64;
    let gtg = gram * gram; // G symmetric
    let gty = gram * y;
    let q = spec.q;

    let mut a = DVector::<f64>::zeros(m);
    let mut eps = 1.0f64;
    let floor = cfg.irls_epsilon_floor;
    let surrogate = |coef: &DVector<f64>, e: f64| -> f64 {
        let r = gram * coef - y;
        let pen: f64 = coef.iter().map(|&c| (c * c + e).powf(q / 2.0)).sum();
        r.norm_squared() / mf + spec.lambda * pen
    };
    let mut trace = vec![surrogate(&a, eps)];
    let mut converged = false;
    let mut iterations = 0usize;
    let outer_cap = cfg.max_iters.min(300);
    let mut small_runs = 0usize;

    for it in 1..=outer_cap {
        iterations = it;
        let mut sys = &gtg / mf;
        for i in 0..m {
            let w = (q / 2.0) * (a[i] * a[i] + eps).powf(q / 2.0 - 1.0);
            sys[(i, i)] += spec.lambda * w;
        }
        a = linalg::solve_spd(sys, &(&gty / mf))?;
        let s = surrogate(&a, eps);
        let prev = *trace.last().unwrap();
        trace.push(s.min(prev)); // guard against last-digit rounding
        let rel = (prev - s) / prev.abs().max(1e-300);
        let at_floor = eps <= floor;
        small_runs = if rel < cfg.tol && at_floor { small_runs + 1 } else { 0 };
        if small_runs >= 3 {
            converged = true;
            break;
        }
        eps = (eps * 0.3).max(floor);
    }

    // Cross-check against a zeros-initialized proximal-gradient run; keep
    // whichever has the lower true objective.
    let mut prox_cfg = *cfg;
    prox_cfg.init = Init::Zeros;
    let prox = solve_proximal_gradient(gram, y, spec, &prox_cfg)?;
    let irls_obj = objective(&a, gram, y, spec)?;
    let prox_obj = objective(&prox.coeffs, gram, y, spec)?;

    let convex = (q - 1.0).abs() < f64::EPSILON;
    let (coeffs, converged) = if prox_obj < irls_obj { (prox.coeffs, prox.converged) } else { (a, converged) };
    let kkt = if convex { Some(kkt_residual(&coeffs, gram, y, spec)?) } else { None };
    Ok(FitResult {
        coeffs,
        objective_trace: trace,
        iterations,
        converged,
        kkt_residual: kkt,
        kind: if convex { SolutionKind::ConvexOptimum } else { SolutionKind::StationaryPoint },
    })
}

/// Method dispatcher used by the CLI and the sweep harness.
pub fn solve(gram: &DMatrix<f64>, y: &DVector<f64>, spec: &PenaltySpec, cfg: &SolverConfig) -> Result<FitResult> {
    match cfg.method {
        Method::ClosedFormQ2 => {
            if (spec.q - 2.0).abs() > f64::EPSILON {
                return Err(Error::config(format!("closed-form-q2 requires q = 2, got {}", spec.q)));
            }
            closed_form_result(gram, y, spec)
        }
        Method::ProxGrad => solve_proximal_gradient(gram, y, spec, cfg),
        Method::Irls => solve_irls(gram, y, spec, cfg),
        Method::Auto => {
            if (spec.q - 2.0).abs() < f64::EPSILON {
                closed_form_result(gram, y, spec)
            } else {
                solve_proximal_gradient(gram, y, spec, cfg)
            }
        }
    }
}

fn closed_form_result(gram: &DMatrix<f64>, y: &DVector<f64>, spec: &PenaltySpec) -> Result<FitResult> {
    let coeffs = solve_closed_form_q2(gram, y, spec.lambda)?;
    let m = y.len() as f64;
    let zero_obj = y.norm_squared() / m;
    let obj = objective(&coeffs, gram, y, spec)?;
    let kkt = kkt_residual(&coeffs, gram, y, spec)?;
    Ok(FitResult {
        coeffs,
        objective_trace: vec![zero_obj, obj],
        iterations: 1,
        converged: true,
        kkt_residual: Some(kkt),
        kind: SolutionKind::ConvexOptimum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_instance(rng: &mut ChaCha8Rng, m: usize) -> (DMatrix<f64>, DVector<f64>) {
        let pts: Vec<Vec<f64>> = (0..m).map(|_| vec![rng.random_range(0.0..1.0)]).collect();
        let params = crate::kernel::KernelParams::new(rng.random_range(0.1..0.5)).unwrap();
        let gram = crate::kernel::gram_matrix(&pts, &params).unwrap();
        let y = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
        (gram, y)
    }

    #[test]
    fn closed_form_scalar_case() {
        let g = DMatrix::from_element(1, 1, 1.0);
        let y = DVector::from_element(1, 2.0);
        let a = solve_closed_form_q2(&g, &y, 1.0).unwrap();
        assert_relative_eq!(a[0], 1.0, max_relative = 1e-14);
    }

    #[test]
    fn closed_form_diagonal_case() {
        let g = DMatrix::identity(2, 2);
        let y = DVector::from_column_slice(&[2.0, -2.0]);
        let a = solve_closed_form_q2(&g, &y, 1.0).unwrap();
        assert_relative_eq!(a[0], 2.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(a[1], -2.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn closed_form_matches_independent_normal_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (g, y) = random_instance(&mut rng, 3);
        let lambda = 0.2;
        let a = solve_closed_form_q2(&g, &y, lambda).unwrap();
        // independent route: explicit normal equations through LU
        let m = 3.0;
        let normal = &g * &g + DMatrix::identity(3, 3) * (m * lambda);
        let rhs = &g * &y;
        let oracle = normal.lu().solve(&rhs).unwrap();
        assert!((a - oracle).norm() < 1e-10);
    }

    #[test]
    fn rls_scalar_and_diagonal() {
        let g = DMatrix::from_element(1, 1, 1.0);
        let y = DVector::from_element(1, 2.0);
        let b = solve_rkhs_rls(&g, &y, 1.0).unwrap();
        assert_relative_eq!(b[0], 1.0, max_relative = 1e-14);

        let g = DMatrix::identity(2, 2);
        let y = DVector::from_column_slice(&[2.0, -2.0]);
        let b = solve_rkhs_rls(&g, &y, 0.5).unwrap();
        assert_relative_eq!(b[0], 1.0, max_relative = 1e-14);
        assert_relative_eq!(b[1], -1.0, max_relative = 1e-14);
    }

    #[test]
    fn rls_residual_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (g, y) = random_instance(&mut rng, 4);
        let lambda = 0.1;
        let b = solve_rkhs_rls(&g, &y, lambda).unwrap();
        let res = (&g * &b + 4.0 * lambda * &b) - &y;
        assert!(res.norm() <= 1e-10);
    }

    #[test]
    fn lipschitz_trivial_cases() {
        let g = DMatrix::identity(2, 2);
        let l = lipschitz_estimate(&g);
        assert!((l - 1.0).abs() <= 0.015, "L = {l}");

        let g = DMatrix::from_element(2, 2, 1.0);
        let l = lipschitz_estimate(&g);
        assert!((l - 4.0).abs() <= 0.06, "L = {l}");
    }

    #[test]
    fn lipschitz_matches_dense_eigensolve() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (g, _) = random_instance(&mut rng, 6);
        let l = lipschitz_estimate(&g);
        let dense = (&g * &g).symmetric_eigenvalues().iter().cloned().fold(f64::MIN, f64::max);
        let reference = 1.01 * (2.0 / 6.0) * dense;
        assert!((l - reference).abs() <= 0.01 * reference, "L = {l} vs {reference}");
    }

    #[test]
    fn prox_grad_scalar_soft_threshold_case() {
        let g = DMatrix::from_element(1, 1, 1.0);
        let y = DVector::from_element(1, 2.0);
        let spec = PenaltySpec::new(1.0, 1.0).unwrap();
        let cfg = SolverConfig { tol: 1e-12, ..Default::default() };
        let fit = solve_proximal_gradient(&g, &y, &spec, &cfg).unwrap();
        assert_relative_eq!(fit.coeffs[0], 1.5, epsilon = 1e-9);
        assert!(fit.converged);
    }

    #[test]
    fn prox_grad_matches_closed_form_q2() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..3 {
            let m = rng.random_range(5..30);
            let (g, y) = random_instance(&mut rng, m);
            let lambda = rng.random_range(0.01..0.5);
            let spec = PenaltySpec::new(2.0, lambda).unwrap();
            let cfg = SolverConfig { tol: 1e-12, max_iters: 50_000, ..Default::default() };
            let fit = solve_proximal_gradient(&g, &y, &spec, &cfg).unwrap();
            let exact = solve_closed_form_q2(&g, &y, lambda).unwrap();
            let gap = (&fit.coeffs - &exact).amax();
            assert!(gap < 1e-6, "linf gap {gap}");
        }
    }

    #[test]
    fn prox_grad_nonconvex_objective_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let (g, y) = random_instance(&mut rng, 12);
        let spec = PenaltySpec::new(0.5, 0.05).unwrap();
        let cfg = SolverConfig::default();
        let fit = solve_proximal_gradient(&g, &y, &spec, &cfg).unwrap();
        let final_obj = objective(&fit.coeffs, &g, &y, &spec).unwrap();
        let zero_obj = y.norm_squared() / 12.0;
        assert!(final_obj <= zero_obj + 1e-12);
        // also no worse than the RLS warm start point
        let warm = solve_rkhs_rls(&g, &y, 1.0 / 12.0).unwrap();
        let warm_obj = objective(&warm, &g, &y, &spec).unwrap();
        let cfg_warm = SolverConfig { init: Init::RlsWarmStart, ..Default::default() };
        let fit_warm = solve_proximal_gradient(&g, &y, &spec, &cfg_warm).unwrap();
        let warm_final = objective(&fit_warm.coeffs, &g, &y, &spec).unwrap();
        assert!(warm_final <= warm_obj + 1e-12);
        assert!(warm_final <= zero_obj + 1e-12);
    }

    #[test]
    fn traces_are_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for &q in &[0.5, 1.0, 1.5, 2.0, 4.0] {
            let (g, y) = random_instance(&mut rng, 10);
            let spec = PenaltySpec::new(q, 0.1).unwrap();
            let cfg = SolverConfig { method: Method::ProxGrad, ..Default::default() };
            let fit = solve(&g, &y, &spec, &cfg).unwrap();
            for w in fit.objective_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-15, "trace increased for q={q}");
            }
        }
    }

    #[test]
    fn irls_rejects_q_above_one() {
        let g = DMatrix::identity(2, 2);
        let y = DVector::from_column_slice(&[1.0, 1.0]);
        let spec = PenaltySpec::new(1.5, 0.1).unwrap();
        assert!(solve_irls(&g, &y, &spec, &SolverConfig::default()).is_err());
    }

    #[test]
    fn irls_zero_data_gives_zero() {
        let g = DMatrix::identity(3, 3);
        let y = DVector::zeros(3);
        let spec = PenaltySpec::new(0.5, 0.1).unwrap();
        let fit = solve_irls(&g, &y, &spec, &SolverConfig::default()).unwrap();
        assert_eq!(fit.coeffs.amax(), 0.0);
    }

    #[test]
    fn irls_close_to_prox_grad_at_q1() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let (g, y) = random_instance(&mut rng, 8);
        let spec = PenaltySpec::new(1.0, 0.05).unwrap();
        let cfg = SolverConfig { tol: 1e-11, ..Default::default() };
        let irls = solve_irls(&g, &y, &spec, &cfg).unwrap();
        let prox = solve_proximal_gradient(&g, &y, &spec, &cfg).unwrap();
        let o1 = objective(&irls.coeffs, &g, &y, &spec).unwrap();
        let o2 = objective(&prox.coeffs, &g, &y, &spec).unwrap();
        assert!((o1 - o2).abs() < 1e-4, "IRLS {o1} vs prox {o2}");
    }

    #[test]
    fn irls_nonconvex_objective_bounded_by_zero_start() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let (g, y) = random_instance(&mut rng, 9);
        let spec = PenaltySpec::new(0.5, 0.08).unwrap();
        let fit = solve_irls(&g, &y, &spec, &SolverConfig::default()).unwrap();
        let obj = objective(&fit.coeffs, &g, &y, &spec).unwrap();
        assert!(obj <= y.norm_squared() / 9.0 + 1e-12);
        assert_eq!(fit.kind, SolutionKind::StationaryPoint);
    }

    #[test]
    fn kkt_examples() {
        let g = DMatrix::from_element(1, 1, 1.0);
        let y = DVector::from_element(1, 2.0);
        let spec = PenaltySpec::new(1.0, 1.0).unwrap();
        let at = |v: f64| DVector::from_element(1, v);
        assert!(kkt_residual(&at(1.5), &g, &y, &spec).unwrap() < 1e-14);
        assert_relative_eq!(kkt_residual(&at(0.0), &g, &y, &spec).unwrap(), 3.0, max_relative = 1e-14);
    }

    #[test]
    fn kkt_zero_at_closed_form_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let (g, y) = random_instance(&mut rng, 7);
        let lambda = 0.3;
        let a = solve_closed_form_q2(&g, &y, lambda).unwrap();
        let spec = PenaltySpec::new(2.0, lambda).unwrap();
        assert!(kkt_residual(&a, &g, &y, &spec).unwrap() <= 1e-8);
    }

    #[test]
    fn kkt_rejects_nonconvex() {
        let g = DMatrix::identity(2, 2);
        let y = DVector::zeros(2);
        let spec = PenaltySpec::new(0.5, 1.0).unwrap();
        assert!(kkt_residual(&DVector::zeros(2), &g, &y, &spec).is_err());
    }

    #[test]
    fn duplicate_centers_still_solvable() {
        // identical points make G singular; the shift keeps systems SPD
        let pts = vec![vec![0.5], vec![0.5], vec![0.9]];
        let params = crate::kernel::KernelParams::new(0.3).unwrap();
        let g = crate::kernel::gram_matrix(&pts, &params).unwrap();
        let y = DVector::from_column_slice(&[1.0, 1.0, -0.5]);
        assert!(solve_closed_form_q2(&g, &y, 1e-6).is_ok());
        assert!(solve_rkhs_rls(&g, &y, 1e-6).is_ok());
    }

    #[test]
    fn coefficient_q2_and_representer_solutions_differ_in_general() {
        // Both routes are exact for their own systems; their mutual distance
        // is reported, not asserted to vanish.
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let (g, y) = random_instance(&mut rng, 6);
        let lambda = 0.1;
        let a = solve_closed_form_q2(&g, &y, lambda).unwrap();
        let b = solve_rkhs_rls(&g, &y, lambda).unwrap();
        let res_a = (&g * &g * &a + 6.0 * lambda * &a) - &g * &y;
        let res_b = (&g * &b + 6.0 * lambda * &b) - &y;
        assert!(res_a.norm() < 1e-9);
        assert!(res_b.norm() < 1e-9);
        println!("coefficient-l2 vs representer distance: {:.6e}", (&a - &b).norm());
    }
}
