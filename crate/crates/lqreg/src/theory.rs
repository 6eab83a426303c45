//! Width/regularization schedules, the mirror-periodic extension, the
//! signed-Gaussian convolution kernel and its smoothing oracle `f0`, the
//! modulus of smoothness, and the error-decomposition instrument built
//! around the representer baseline.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{clip, gram_matrix, CoefficientModel, Dataset};
use crate::penalty::{penalty_value, PenaltySpec};
use crate::quad::{integrate_adaptive, QuadConfig};
use crate::solvers::solve_rkhs_rls;

/// Smoothness class parameters: order `r`, Hoelder constant `c0`,
/// dimension `d`. Only `r` and `d` enter the schedules; `c0` affects the
/// constants of the theory, not the algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessSpec {
    pub r: f64,
    pub c0: f64,
    pub d: usize,
}

impl SmoothnessSpec {
    pub fn new(r: f64, c0: f64, d: usize) -> Result<Self> {
        if !(r > 0.0) || !(c0 > 0.0) || d == 0 {
            return Err(Error::config(format!("need r > 0, c0 > 0, d >= 1 (got r={r}, c0={c0}, d={d})")));
        }
        Ok(SmoothnessSpec { r, c0, d })
    }
}

/// The regularization-weight exponent appears in two forms: the one printed
/// in the headline statement and the one actually used by the proof
/// section. They differ; both are implemented and rate sweeps default to
/// the proof-section form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleVariant {
    TheoremStatement,
    #[default]
    ProofSection,
}

/// Width and regularization weight for a given sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub sigma: f64,
    pub lambda: f64,
    pub variant: ScheduleVariant,
}

/// `sigma = m^(-1/(2r+d))` and the per-variant `lambda(m, q)`:
///
/// * theorem statement: `lambda = M^2 m^((-12r-6d+2rq+qd)/(4r+2d))` for
///   `q <= 2`, `M^2 m^(-(4r+2d)/(2r+d))` for `q > 2`;
/// * proof section: `lambda = M^2 m^((-12r-4d+2rq+qd)/(4r+2d))` for
///   `q <= 2`, `M^2 m^((-4r-d)/(2r+d))` for `q > 2`.
pub fn schedule(m: usize, r: f64, d: usize, q: f64, m_bound: f64, variant: ScheduleVariant) -> Result<Schedule> {
    if m == 0 {
        return Err(Error::config("schedule needs m >= 1"));
    }
    if !(r > 0.0) || d == 0 || !(q > 0.0) || !(m_bound > 0.0) {
        return Err(Error::config(format!("bad schedule inputs: r={r}, d={d}, q={q}, M={m_bound}")));
    }
    let mf = m as f64;
    let rf = r;
    let df = d as f64;
    let sigma = mf.powf(-1.0 / (2.0 * rf + df));
    let exponent = match variant {
        ScheduleVariant::TheoremStatement => {
            if q <= 2.0 {
                (-12.0 * rf - 6.0 * df + 2.0 * rf * q + q * df) / (4.0 * rf + 2.0 * df)
            } else {
                -(4.0 * rf + 2.0 * df) / (2.0 * rf + df)
            }
        }
        ScheduleVariant::ProofSection => {
            if q <= 2.0 {
                (-12.0 * rf - 4.0 * df + 2.0 * rf * q + q * df) / (4.0 * rf + 2.0 * df)
            } else {
                (-4.0 * rf - df) / (2.0 * rf + df)
            }
        }
    };
    let lambda = m_bound * m_bound * mf.powf(exponent);
    Ok(Schedule { sigma, lambda, variant })
}

/// Minimax reference exponent `-2r/(2r+d)` for the error-vs-m slope.
pub fn reference_exponent(r: f64, d: usize) -> f64 {
    -2.0 * r / (2.0 * r + d as f64)
}

/// Fold one coordinate into `[0, 1]`: reduce mod 2 into `[-1, 1]`, then take
/// the absolute value. The resulting extension is even and 2-periodic in
/// each coordinate and agrees with the original function on `[0,1]^d`.
pub fn fold_coordinate(t: f64) -> f64 {
    let s = t - 2.0 * ((t + 1.0) / 2.0).floor();
    s.abs()
}

/// Evaluate the even, 2-periodic mirror extension of `f` at an arbitrary
/// point of `R^d`.
pub fn mirror_extend_eval<F: Fn(&[f64]) -> f64>(f: F, u: &[f64]) -> f64 {
    let folded: Vec<f64> = u.iter().map(|&t| fold_coordinate(t)).collect();
    f(&folded)
}

/// Coefficient/width pairs `(binom(r,j) (-1)^(1-j) j^(-d), j)` for
/// `j = 1..r` of the signed convolution kernel; the alternating binomial
/// sum of the bare coefficients (without `j^(-d)`) is exactly 1, which is
/// what normalizes the kernel mass.
pub fn conv_kernel_weights(r: usize, d: usize) -> Result<Vec<(f64, f64)>> {
    if r < 1 {
        return Err(Error::config("kernel order r must be >= 1"));
    }
    let mut out = Vec::with_capacity(r);
    let mut binom = 1.0f64; // binom(r, j) built multiplicatively
    for j in 1..=r {
        binom *= (r - j + 1) as f64 / j as f64;
        let sign = if (1 + j) % 2 == 0 { 1.0 } else { -1.0 }; // (-1)^(1-j)
        out.push((sign * binom / (j as f64).powi(d as i32), j as f64));
    }
    Ok(out)
}

/// Evaluate the d=1 convolution kernel
/// `K(x) = sum_j c_j (2/(sigma^2 pi))^(1/2) exp(-x^2 / (j sigma / sqrt 2)^2)`.
pub fn conv_kernel_eval(weights: &[(f64, f64)], sigma: f64, x: f64) -> f64 {
    let norm = (2.0 / (sigma * sigma * std::f64::consts::PI)).sqrt();
    weights
        .iter()
        .map(|&(c, j)| {
            let s = j * sigma / std::f64::consts::SQRT_2;
            c * norm * (-x * x / (s * s)).exp()
        })
        .sum()
}

/// Truncation radius used for every kernel integral: `8 r sigma / sqrt 2`.
pub fn kernel_support_radius(r: usize, sigma: f64) -> f64 {
    8.0 * r as f64 * sigma / std::f64::consts::SQRT_2
}

/// Quadrature of the kernel over its truncated support; equals 1 up to the
/// quadrature tolerance for every order and width.
pub fn conv_kernel_mass(r: usize, sigma: f64, quad: &QuadConfig) -> Result<f64> {
    let w = conv_kernel_weights(r, 1)?;
    let radius = kernel_support_radius(r, sigma);
    let f = |x: f64| conv_kernel_eval(&w, sigma, x);
    integrate_adaptive(&f, -radius, radius, quad)
}

/// Smoothing oracle `f0(x) = (K * F)(x)` for a d=1 target, where `F` is the
/// mirror extension of the target. Integration is truncated at the kernel
/// support radius.
pub fn f0_eval<F: Fn(f64) -> f64>(target: &F, r: usize, sigma: f64, x: f64, quad: &QuadConfig) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::config(format!("sigma must be positive, got {sigma}")));
    }
    let w = conv_kernel_weights(r, 1)?;
    let radius = kernel_support_radius(r, sigma);
    // enough initial panels that the narrowest Gaussian is resolved
    let panels = (((2.0 * radius) / (sigma / 2.0)).ceil() as usize).max(quad.initial_panels);
    let cfg = QuadConfig { initial_panels: panels, ..*quad };
    let integrand = |u: f64| conv_kernel_eval(&w, sigma, x - u) * target(fold_coordinate(u));
    integrate_adaptive(&integrand, x - radius, x + radius, &cfg)
}

/// Grid estimate (a lower bound, converging as the grids refine) of the
/// r-th modulus of smoothness
/// `omega_r(f, t) = sup_{|h| <= t} sup_x |Delta_h^r f(x)|` on `[0, 1]`,
/// with `x` restricted so that `x + r h` stays inside the interval.
pub fn modulus_of_smoothness<F: Fn(f64) -> f64>(f: &F, r: usize, t: f64, x_points: usize, h_points: usize) -> f64 {
    assert!(r >= 1 && t > 0.0);
    let mut binom = vec![0.0f64; r + 1];
    binom[0] = 1.0;
    for j in 1..=r {
        binom[j] = binom[j - 1] * (r - j + 1) as f64 / j as f64;
    }
    let mut sup = 0.0f64;
    for hk in 1..=h_points {
        let h_mag = t * hk as f64 / h_points as f64;
        for &h in &[h_mag, -h_mag] {
            let (lo, hi) = if h > 0.0 { (0.0, 1.0 - r as f64 * h) } else { (-(r as f64) * h, 1.0) };
            if hi <= lo {
                continue;
            }
            for xi in 0..x_points {
                let x = lo + (hi - lo) * xi as f64 / (x_points - 1).max(1) as f64;
                let mut delta = 0.0;
                for (j, b) in binom.iter().enumerate() {
                    let sign = if (r - j) % 2 == 0 { 1.0 } else { -1.0 };
                    delta += sign * b * f(x + j as f64 * h);
                }
                sup = sup.max(delta.abs());
            }
        }
    }
    sup
}

/// Bound on the hypothesis-error term: `m^(2-q/2) lambda M^q` for
/// `q <= 2`, `lambda m M^q` above.
pub fn hypothesis_error_bound(m: usize, lambda: f64, q: f64, m_bound: f64) -> f64 {
    let mf = m as f64;
    if q <= 2.0 {
        mf.powf(2.0 - q / 2.0) * lambda * m_bound.powf(q)
    } else {
        lambda * mf * m_bound.powf(q)
    }
}

/// Fully computable two-sided comparison behind the hypothesis-error bound:
/// `E_z(clip f) + lambda sum|a_i|^q  <=  E_z(f_rls) + (1/m) b^T G b + bound`,
/// with `f_rls` the representer solution of `(I + G) b = y`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ChainCheck {
    /// `E_z(clip f_fit) + lambda * penalty(a)`.
    pub lhs: f64,
    /// `E_z(f_rls) + (1/m) b^T G b`.
    pub baseline: f64,
    pub p_hat: f64,
    pub p_bound: f64,
    pub holds: bool,
}

/// Evaluate the chain on a fitted coefficient vector, given the Gram matrix
/// of the training inputs.
pub fn prop5_chain(
    gram: &nalgebra::DMatrix<f64>,
    y: &DVector<f64>,
    coeffs: &DVector<f64>,
    spec: &PenaltySpec,
    m_bound: f64,
) -> Result<ChainCheck> {
    let m = y.len();
    let mf = m as f64;
    let pred = gram * coeffs;
    let mut ez_clip = 0.0;
    for i in 0..m {
        let rr = y[i] - clip(pred[i], m_bound);
        ez_clip += rr * rr;
    }
    ez_clip /= mf;
    let lhs = ez_clip + spec.lambda * penalty_value(coeffs.as_slice(), spec.q);

    let b = solve_rkhs_rls(gram, y, 1.0 / mf)?;
    let gb = gram * &b;
    let mut ez_fz = 0.0;
    for i in 0..m {
        let rr = y[i] - gb[i];
        ez_fz += rr * rr;
    }
    ez_fz /= mf;
    let baseline = ez_fz + b.dot(&gb) / mf;

    let p_bound = hypothesis_error_bound(m, spec.lambda, spec.q, m_bound);
    let p_hat = lhs - baseline;
    Ok(ChainCheck { lhs, baseline, p_hat, p_bound, holds: p_hat <= p_bound })
}

/// Known-target context needed for the approximation and sample terms of the
/// decomposition (d = 1 only).
pub struct DecomposeContext<'a> {
    /// The regression function on `[0, 1]`.
    pub target: &'a (dyn Fn(f64) -> f64 + Sync),
    /// Kernel construction order (non-integer smoothness rounds up).
    pub r: usize,
    /// Halfwidth of the symmetric uniform noise; its variance `h^2/3` is the
    /// irreducible part of the generalization error.
    pub noise_halfwidth: f64,
}

/// Approximation / sample / hypothesis split of a fit, all terms computable:
/// the capacity part of the approximation term (an RKHS norm with no
/// tractable formula) is replaced by the representer-baseline chain.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DecompositionReport {
    /// `||f0 - f_rho||^2` under the uniform input law (quadrature).
    pub d_hat: f64,
    /// Empirical sample-error gap
    /// `[E_z(f0) - E(f0)] + [E(clip f_fit) - E_z(clip f_fit)]`.
    pub s_hat: f64,
    /// Empirical hypothesis-error gap against the representer baseline.
    pub p_hat: f64,
    /// `m^(2-q/2) lambda M^q` (or `lambda m M^q` for `q > 2`).
    pub p_bound: f64,
    pub chain_holds: bool,
    /// True when `q < 1`: the fitted point may be a non-global stationary
    /// point, so a failed chain is not a contradiction there.
    pub chain_advisory_only: bool,
    /// Generalization error of the clipped fit (quadrature, includes the
    /// noise floor).
    pub generalization_error: f64,
}

/// Run the full decomposition instrument on a fitted model and the dataset
/// it was trained on.
pub fn decompose_check(
    data: &Dataset,
    model: &CoefficientModel,
    spec: &PenaltySpec,
    ctx: &DecomposeContext<'_>,
) -> Result<DecompositionReport> {
    if data.d != 1 {
        return Err(Error::config("decomposition instrument supports d = 1 only"));
    }
    if model.centers.len() != data.len() {
        return Err(Error::DimensionMismatch { expected: data.len(), got: model.centers.len() });
    }
    let m = data.len();
    let mf = m as f64;
    let m_bound = data.m_bound;
    let sigma = model.params.sigma();
    let gram = gram_matrix(&model.centers, &model.params)?;
    let y = data.y_vector();
    let coeffs = DVector::from_column_slice(&model.coeffs);

    let chain = prop5_chain(&gram, &y, &coeffs, spec, m_bound)?;

    let quad = QuadConfig { rel_tol: 1e-7, ..Default::default() };
    let noise_var = ctx.noise_halfwidth * ctx.noise_halfwidth / 3.0;

    // approximation term: squared distance from f0 to the target
    let d_hat = {
        let integrand = |u: f64| {
            let f0 = f0_eval(&ctx.target, ctx.r, sigma, u, &quad).unwrap_or(f64::NAN);
            let diff = f0 - (ctx.target)(u);
            diff * diff
        };
        let v = integrate_adaptive(&integrand, 0.0, 1.0, &QuadConfig { rel_tol: 1e-6, max_doublings: 4, ..quad })?;
        if !v.is_finite() {
            return Err(Error::numerical("f0 quadrature produced non-finite values"));
        }
        v
    };

    // E(f0) and E_z(f0)
    let e_f0 = d_hat + noise_var;
    let mut ez_f0 = 0.0;
    for (xi, yi) in data.x.iter().zip(&data.y) {
        let f0 = f0_eval(&ctx.target, ctx.r, sigma, xi[0], &quad)?;
        let rr = yi - f0;
        ez_f0 += rr * rr;
    }
    ez_f0 /= mf;

    // E(clip f_fit) by quadrature and E_z(clip f_fit) from the Gram matrix
    let e_fit = {
        let integrand = |u: f64| {
            let p = clip(model.predict_unchecked(&[u]), m_bound);
            let diff = p - (ctx.target)(u);
            diff * diff
        };
        integrate_adaptive(&integrand, 0.0, 1.0, &QuadConfig { rel_tol: 1e-8, max_doublings: 12, initial_panels: 16 })?
            + noise_var
    };
    let ez_fit = crate::kernel::empirical_risk_gram(&gram, &coeffs, &y, Some(m_bound));

    let s_hat = (ez_f0 - e_f0) + (e_fit - ez_fit);

    Ok(DecompositionReport {
        d_hat,
        s_hat,
        p_hat: chain.p_hat,
        p_bound: chain.p_bound,
        chain_holds: chain.holds,
        chain_advisory_only: spec.q < 1.0,
        generalization_error: e_fit,
    })
}

/// Sup-grid error of `f0` against the cosine probe target for a list of
/// widths, with the ratio between successive widths: the decay-order report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApproxDecayReport {
    pub schema_version: u32,
    pub r: usize,
    pub grid_points: usize,
    pub sigma_list: Vec<f64>,
    /// `max_x |f0(x) - cos(2 pi x)|` per width.
    pub sup_error: Vec<f64>,
    /// `sup_error[i+1] / sup_error[i]` for successive (halved) widths.
    pub ratios: Vec<f64>,
    /// Nominal order ratio `2^-r`.
    pub expected_ratio: f64,
    /// Kernel mass per width (should all be 1).
    pub kernel_mass: Vec<f64>,
    /// `f0(0)` per width, for cross-checks against the analytic attenuation.
    pub f0_at_zero: Vec<f64>,
}

/// Build the decay report for the canonical probe target `cos(2 pi x)`.
pub fn approx_decay_report(r: usize, sigma_list: &[f64], grid_points: usize) -> Result<ApproxDecayReport> {
    if sigma_list.is_empty() {
        return Err(Error::config("sigma list must be non-empty"));
    }
    let target = |x: f64| (2.0 * std::f64::consts::PI * x).cos();
    let quad = QuadConfig::default();
    let mut sup_error = Vec::with_capacity(sigma_list.len());
    let mut kernel_mass = Vec::with_capacity(sigma_list.len());
    let mut f0_at_zero = Vec::with_capacity(sigma_list.len());
    for &sigma in sigma_list {
        let mut sup = 0.0f64;
        for k in 0..grid_points {
            let x = k as f64 / (grid_points - 1).max(1) as f64;
            let f0 = f0_eval(&target, r, sigma, x, &quad)?;
            sup = sup.max((f0 - target(x)).abs());
        }
        sup_error.push(sup);
        kernel_mass.push(conv_kernel_mass(r, sigma, &quad)?);
        f0_at_zero.push(f0_eval(&target, r, sigma, 0.0, &quad)?);
    }
    let ratios = sup_error.windows(2).map(|w| w[1] / w[0]).collect();
    Ok(ApproxDecayReport {
        schema_version: 1,
        r,
        grid_points,
        sigma_list: sigma_list.to_vec(),
        sup_error,
        ratios,
        expected_ratio: 0.5f64.powi(r as i32),
        kernel_mass,
        f0_at_zero,
    })
}
