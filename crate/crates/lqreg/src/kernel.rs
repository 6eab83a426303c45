//! Gaussian kernel, Gram matrices and models living in the sample-dependent
//! hypothesis space (the span of kernel bumps centered at the training
//! inputs).
//!
//! The kernel is `G_sigma(x, x') = exp(-||x - x'||^2 / sigma^2)`. Squared
//! distances are accumulated as sums of squared coordinate differences
//! (never the expanded `x.x + x'.x' - 2 x.x'` form, which cancels
//! catastrophically for nearby points). Entries whose exponent underflows
//! round to exactly 0; the Gram diagonal is set to exactly 1.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Width parameter of the Gaussian kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    sigma: f64,
}

impl KernelParams {
    /// `sigma > 0` is required; widths are in the same units as the inputs.
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::config(format!("kernel width must be positive, got {sigma}")));
        }
        Ok(KernelParams { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// A finite sample: `m` input points in `[0,1]^d` with outputs bounded by
/// `m_bound` in absolute value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    /// Known bound `M` with `|y_i| <= M`.
    pub m_bound: f64,
    pub d: usize,
}

impl Dataset {
    /// Validates row lengths, `|y_i| <= M` and that every coordinate lies in
    /// `[0,1]`.
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>, m_bound: f64, d: usize) -> Result<Self> {
        Self::build(x, y, m_bound, d, true)
    }

    /// Same as [`Dataset::new`] but skips the `[0,1]^d` domain check, for
    /// exploratory data living outside the unit cube.
    pub fn new_unvalidated_domain(
        x: Vec<Vec<f64>>,
        y: Vec<f64>,
        m_bound: f64,
        d: usize,
    ) -> Result<Self> {
        Self::build(x, y, m_bound, d, false)
    }

    fn build(x: Vec<Vec<f64>>, y: Vec<f64>, m_bound: f64, d: usize, check_domain: bool) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
        }
        if !(m_bound > 0.0) {
            return Err(Error::config(format!("output bound M must be positive, got {m_bound}")));
        }
        for row in &x {
            if row.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: row.len() });
            }
            if check_domain && row.iter().any(|&c| !(0.0..=1.0).contains(&c)) {
                return Err(Error::config("input coordinate outside [0,1]".to_string()));
            }
        }
        if let Some(bad) = y.iter().find(|&&v| !(v.abs() <= m_bound)) {
            return Err(Error::config(format!("|y| = {} exceeds output bound M = {m_bound}", bad.abs())));
        }
        Ok(Dataset { x, y, m_bound, d })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn y_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.y)
    }
}

/// An element of the sample-dependent hypothesis space:
/// `f(x) = sum_i a_i G_sigma(x_i, x)` with the training inputs as centers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientModel {
    pub params: KernelParams,
    pub centers: Vec<Vec<f64>>,
    pub coeffs: Vec<f64>,
}

impl CoefficientModel {
    pub fn new(params: KernelParams, centers: Vec<Vec<f64>>, coeffs: Vec<f64>) -> Result<Self> {
        if centers.len() != coeffs.len() {
            return Err(Error::DimensionMismatch { expected: centers.len(), got: coeffs.len() });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::numerical("non-finite coefficient in model".to_string()));
        }
        Ok(CoefficientModel { params, centers, coeffs })
    }

    /// `sum_i a_i G_sigma(x_i, x)`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if let Some(c0) = self.centers.first() {
            if c0.len() != x.len() {
                return Err(Error::DimensionMismatch { expected: c0.len(), got: x.len() });
            }
        }
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> f64 {
        let inv_s2 = 1.0 / (self.params.sigma * self.params.sigma);
        self.centers
            .iter()
            .zip(&self.coeffs)
            .map(|(c, a)| a * (-squared_distance(c, x) * inv_s2).exp())
            .sum()
    }

    /// Prediction clipped to `[-M, M]`.
    pub fn predict_clipped(&self, x: &[f64], m_bound: f64) -> Result<f64> {
        Ok(clip(self.predict(x)?, m_bound))
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&u, &v)| (u - v) * (u - v)).sum()
}

/// `exp(-||x - x2||^2 / sigma^2)`, in `(0, 1]`.
pub fn eval_kernel(x: &[f64], x2: &[f64], params: &KernelParams) -> Result<f64> {
    if x.len() != x2.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: x2.len() });
    }
    Ok((-squared_distance(x, x2) / (params.sigma * params.sigma)).exp())
}

/// Dense `m x m` Gram matrix `K[i][j] = G_sigma(x_i, x_j)`.
///
/// Only the upper triangle is evaluated; it is mirrored so the result is
/// symmetric exactly, and the diagonal is set to exactly 1. Duplicated
/// points are allowed (the matrix is then singular; solvers carry a
/// `+ m*lambda*I` shift and do not rely on invertibility here).
pub fn gram_matrix(points: &[Vec<f64>], params: &KernelParams) -> Result<DMatrix<f64>> {
    let m = points.len();
    if m == 0 {
        return Err(Error::EmptyDataset);
    }
    let d = points[0].len();
    for p in points {
        if p.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: p.len() });
        }
    }
    let inv_s2 = 1.0 / (params.sigma * params.sigma);
    let mut g = DMatrix::<f64>::zeros(m, m);
    let fill_row = |i: usize, row: &mut [f64]| {
        for (j, item) in row.iter_mut().enumerate().take(m).skip(i + 1) {
            *item = (-squared_distance(&points[i], &points[j]) * inv_s2).exp();
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        // One strictly-upper row per task; entries are independent, so the
        // result does not depend on scheduling.
        let rows: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|i| {
                let mut row = vec![0.0; m];
                fill_row(i, &mut row);
                row
            })
            .collect();
        for (i, row) in rows.iter().enumerate() {
            for j in (i + 1)..m {
                g[(i, j)] = row[j];
            }
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut row = vec![0.0; m];
        for i in 0..m {
            fill_row(i, &mut row);
            for j in (i + 1)..m {
                g[(i, j)] = row[j];
            }
        }
    }
    for i in 0..m {
        g[(i, i)] = 1.0;
        for j in (i + 1)..m {
            g[(j, i)] = g[(i, j)];
        }
    }
    Ok(g)
}

/// `min{M, |t|} * sgn(t)`: projection of `t` onto `[-M, M]`.
pub fn clip(t: f64, m_bound: f64) -> f64 {
    debug_assert!(m_bound > 0.0);
    t.clamp(-m_bound, m_bound)
}

/// Mean squared residual `(1/m) sum_i (y_i - f(x_i))^2`, optionally with the
/// prediction clipped to `[-M, M]` first.
pub fn empirical_risk(model: &CoefficientModel, data: &Dataset, clipped: bool) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut acc = 0.0;
    for (xi, yi) in data.x.iter().zip(&data.y) {
        let mut p = model.predict(xi)?;
        if clipped {
            p = clip(p, data.m_bound);
        }
        let r = yi - p;
        acc += r * r;
    }
    Ok(acc / data.len() as f64)
}

/// Empirical risk evaluated through a precomputed Gram matrix:
/// `(1/m) || G a - y ||^2` with optional clipping of `G a`.
pub(crate) fn empirical_risk_gram(
    gram: &DMatrix<f64>,
    coeffs: &DVector<f64>,
    y: &DVector<f64>,
    m_bound: Option<f64>,
) -> f64 {
    let pred = gram * coeffs;
    let m = y.len() as f64;
    let mut acc = 0.0;
    for i in 0..y.len() {
        let p = match m_bound {
            Some(b) => clip(pred[i], b),
            None => pred[i],
        };
        let r = y[i] - p;
        acc += r * r;
    }
    acc / m
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(sigma: f64) -> KernelParams {
        KernelParams::new(sigma).unwrap()
    }

    #[test]
    fn kernel_at_zero_distance_is_one() {
        let p = params(0.3);
        for x in [vec![0.0], vec![0.25, 0.5]] {
            assert_eq!(eval_kernel(&x, &x, &p).unwrap(), 1.0);
        }
    }

    #[test]
    fn kernel_matches_direct_formula() {
        let p = params(0.5);
        let v = eval_kernel(&[0.0], &[0.5], &p).unwrap();
        assert_relative_eq!(v, (-1.0f64).exp(), max_relative = 1e-15);

        let p = params(1.0);
        let v = eval_kernel(&[0.0, 0.0], &[0.3, 0.4], &p).unwrap();
        assert_relative_eq!(v, (-0.25f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn kernel_rejects_dimension_mismatch() {
        let p = params(1.0);
        assert!(matches!(
            eval_kernel(&[0.0], &[0.0, 0.0], &p),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gram_single_point_is_identity() {
        let g = gram_matrix(&[vec![0.7]], &params(0.2)).unwrap();
        assert_eq!(g, DMatrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn gram_two_points() {
        let g = gram_matrix(&[vec![0.0], vec![0.5]], &params(0.5)).unwrap();
        let e1 = (-1.0f64).exp();
        assert_eq!(g[(0, 0)], 1.0);
        assert_eq!(g[(1, 1)], 1.0);
        assert_relative_eq!(g[(0, 1)], e1, max_relative = 1e-15);
        assert_eq!(g[(0, 1)], g[(1, 0)]);
    }

    #[test]
    fn gram_equals_elementwise_kernel() {
        // Elementwise recomputation through the scalar entry point.
        let pts: Vec<Vec<f64>> = vec![
            vec![0.11, 0.93],
            vec![0.52, 0.20],
            vec![0.98, 0.41],
            vec![0.33, 0.33],
            vec![0.70, 0.05],
        ];
        let p = params(0.37);
        let g = gram_matrix(&pts, &p).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let expect = eval_kernel(&pts[i], &pts[j], &p).unwrap();
                if i == j {
                    assert_eq!(g[(i, j)], 1.0);
                } else {
                    assert_relative_eq!(g[(i, j)], expect, max_relative = 1e-15);
                }
            }
        }
    }

    #[test]
    fn predict_zero_coeffs_is_zero() {
        let model = CoefficientModel::new(params(0.5), vec![vec![0.1], vec![0.9]], vec![0.0, 0.0]).unwrap();
        assert_eq!(model.predict(&[0.4]).unwrap(), 0.0);
    }

    #[test]
    fn predict_single_center_at_center() {
        let model = CoefficientModel::new(params(0.5), vec![vec![0.3]], vec![2.0]).unwrap();
        assert_eq!(model.predict(&[0.3]).unwrap(), 2.0);
    }

    #[test]
    fn predict_matches_direct_summation() {
        let p = params(0.44);
        let centers = vec![vec![0.15, 0.8], vec![0.5, 0.5], vec![0.92, 0.13]];
        let coeffs = vec![1.3, -0.7, 0.25];
        let model = CoefficientModel::new(p, centers.clone(), coeffs.clone()).unwrap();
        let x = vec![0.31, 0.64];
        let direct: f64 = centers
            .iter()
            .zip(&coeffs)
            .map(|(c, a)| a * eval_kernel(c, &x, &p).unwrap())
            .sum();
        assert_relative_eq!(model.predict(&x).unwrap(), direct, max_relative = 1e-14);
    }

    #[test]
    fn clip_examples() {
        assert_eq!(clip(5.0, 1.0), 1.0);
        assert_eq!(clip(-0.5, 1.0), -0.5);
        assert_eq!(clip(0.0, 2.0), 0.0);
        // idempotent
        assert_eq!(clip(clip(3.7, 1.2), 1.2), clip(3.7, 1.2));
    }

    #[test]
    fn empirical_risk_zero_model() {
        let data = Dataset::new(vec![vec![0.2], vec![0.8]], vec![1.0, -1.0], 1.0, 1).unwrap();
        let model = CoefficientModel::new(params(0.5), data.x.clone(), vec![0.0, 0.0]).unwrap();
        assert_eq!(empirical_risk(&model, &data, false).unwrap(), 1.0);
    }

    #[test]
    fn empirical_risk_interpolating_model_is_zero() {
        // One center with coefficient chosen so the single sample is matched.
        let data = Dataset::new(vec![vec![0.5]], vec![0.75], 1.0, 1).unwrap();
        let model = CoefficientModel::new(params(0.5), data.x.clone(), vec![0.75]).unwrap();
        assert_eq!(empirical_risk(&model, &data, false).unwrap(), 0.0);
    }

    #[test]
    fn empirical_risk_matches_loop_oracle() {
        let p = params(0.6);
        let xs = vec![vec![0.1], vec![0.4], vec![0.6], vec![0.95]];
        let ys = vec![0.3, -0.8, 0.2, 0.9];
        let data = Dataset::new(xs.clone(), ys.clone(), 1.0, 1).unwrap();
        let model = CoefficientModel::new(p, xs.clone(), vec![0.5, -0.25, 0.1, 0.7]).unwrap();
        let mut acc = 0.0;
        for (x, y) in xs.iter().zip(&ys) {
            let f = model.predict(x).unwrap();
            acc += (y - f) * (y - f);
        }
        let oracle = acc / 4.0;
        assert_relative_eq!(empirical_risk(&model, &data, false).unwrap(), oracle, max_relative = 1e-14);
    }

    #[test]
    fn empirical_risk_rejects_empty() {
        assert!(Dataset::new(vec![], vec![], 1.0, 1).is_err());
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(vec![vec![1.5]], vec![0.0], 1.0, 1).is_err());
        assert!(Dataset::new_unvalidated_domain(vec![vec![1.5]], vec![0.0], 1.0, 1).is_ok());
        assert!(Dataset::new(vec![vec![0.5]], vec![2.0], 1.0, 1).is_err());
        assert!(Dataset::new(vec![vec![0.5, 0.5]], vec![0.0], 1.0, 1).is_err());
    }
}
