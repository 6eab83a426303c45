//! Composite Gauss-Legendre quadrature with panel-doubling refinement.

use std::sync::OnceLock;

use crate::error::{Error, Result};

const NODES: usize = 16;

/// Nodes and weights of the `NODES`-point Gauss-Legendre rule on `[-1, 1]`,
/// computed once by Newton iteration on the Legendre polynomial.
fn gl_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = NODES;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            // Chebyshev-style initial guess, then Newton to machine precision.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

/// Value and derivative of the Legendre polynomial `P_n` at `x` via the
/// three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Fixed-panel composite Gauss-Legendre integral of `f` over `[a, b]`.
pub fn integrate_panels<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let (nodes, weights) = gl_rule();
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let half = 0.5 * h;
        let mut acc = 0.0;
        for (x, w) in nodes.iter().zip(weights) {
            acc += w * f(mid + half * x);
        }
        total += acc * half;
    }
    total
}

/// Quadrature controls: relative tolerance and refinement limits.
#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub initial_panels: usize,
    pub max_doublings: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { rel_tol: 1e-8, initial_panels: 8, max_doublings: 10 }
    }
}

/// Panel-doubling composite Gauss-Legendre integration; errors out if two
/// successive refinements fail to agree to the relative tolerance.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, cfg: &QuadConfig) -> Result<f64> {
    let mut panels = cfg.initial_panels.max(1);
    let mut prev = integrate_panels(f, a, b, panels);
    for _ in 0..cfg.max_doublings {
        panels *= 2;
        let cur = integrate_panels(f, a, b, panels);
        if (cur - prev).abs() <= cfg.rel_tol * cur.abs().max(1.0) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::numerical(format!(
        "quadrature failed to converge to rel tol {} within {} doublings",
        cfg.rel_tol, cfg.max_doublings
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integrates_polynomials_exactly() {
        // 16-point rule is exact through degree 31
        let f = |x: f64| x.powi(7) - 3.0 * x.powi(4) + x;
        let exact = 1.0 / 8.0 - 3.0 / 5.0 + 0.5;
        assert_relative_eq!(integrate_panels(&f, 0.0, 1.0, 1), exact, epsilon = 1e-12);
    }

    #[test]
    fn adaptive_matches_known_integral() {
        let f = |x: f64| (2.0 * std::f64::consts::PI * x).cos().powi(2);
        let v = integrate_adaptive(&f, 0.0, 1.0, &QuadConfig::default()).unwrap();
        assert_relative_eq!(v, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn gaussian_mass() {
        let s = 0.07;
        let f = move |x: f64| (-x * x / (s * s)).exp() / (s * std::f64::consts::PI.sqrt());
        let v = integrate_adaptive(&f, -8.0 * s, 8.0 * s, &QuadConfig::default()).unwrap();
        assert_relative_eq!(v, 1.0, epsilon = 1e-9);
    }
}
