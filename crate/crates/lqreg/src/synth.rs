//! Synthetic regression targets with known smoothness, bounded-noise data
//! generation, and Monte Carlo estimation of the generalization error.
//!
//! The input law is uniform on `[0,1]^d` throughout. Noise is symmetric
//! uniform: together with the `sup|f| + halfwidth <= M` invariant this
//! keeps every output inside `[-M, M]` with no rejection step.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{clip, CoefficientModel, Dataset};

/// Regression-target families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum TargetFamily {
    /// `A * prod_j cos(2 pi k x_j)`: infinitely smooth, and its mirror
    /// extension is smooth across reflections.
    Cosine { amplitude: f64, frequency: u32 },
    /// `||x - c 1||^s`: Hoelder smoothness exactly `s` at the kink; the
    /// center sits in the interior so boundary reflections stay tame.
    Kink { center: f64, exponent: f64 },
    /// `exp(-||x - c 1||^2 / w^2)`: smooth bump peaking at 1.
    GaussBump { center: f64, width: f64 },
}

/// A target family plus the ambient dimension, output bound and the
/// smoothness label used by schedules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    #[serde(flatten)]
    pub family: TargetFamily,
    pub d: usize,
    #[serde(rename = "M")]
    pub m_bound: f64,
    pub nominal_r: f64,
}

/// Symmetric uniform noise on `[-halfwidth, halfwidth]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub halfwidth: f64,
}

/// An evaluable target function on `[0,1]^d`.
#[derive(Debug, Clone, Copy)]
pub struct Target {
    family: TargetFamily,
    d: usize,
}

impl Target {
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.d);
        match self.family {
            TargetFamily::Cosine { amplitude, frequency } => {
                let w = 2.0 * std::f64::consts::PI * frequency as f64;
                amplitude * x.iter().map(|&c| (w * c).cos()).product::<f64>()
            }
            TargetFamily::Kink { center, exponent } => {
                let dist2: f64 = x.iter().map(|&c| (c - center) * (c - center)).sum();
                dist2.sqrt().powf(exponent)
            }
            TargetFamily::GaussBump { center, width } => {
                let dist2: f64 = x.iter().map(|&c| (c - center) * (c - center)).sum();
                (-dist2 / (width * width)).exp()
            }
        }
    }

    /// Exact sup of `|f|` over `[0,1]^d`.
    pub fn sup_abs(&self) -> f64 {
        match self.family {
            TargetFamily::Cosine { amplitude, .. } => amplitude.abs(),
            TargetFamily::Kink { center, exponent } => {
                let reach = center.max(1.0 - center);
                (reach * (self.d as f64).sqrt()).powf(exponent)
            }
            TargetFamily::GaussBump { .. } => 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// One-dimensional view for the quadrature-based theory instruments.
    pub fn as_1d(&self) -> impl Fn(f64) -> f64 + Sync + '_ {
        debug_assert_eq!(self.d, 1);
        move |x: f64| self.eval(&[x])
    }
}

/// Validate a spec and produce the evaluable target.
pub fn make_target(spec: &TargetSpec) -> Result<Target> {
    if spec.d == 0 {
        return Err(Error::config("target dimension must be >= 1"));
    }
    if !(spec.m_bound > 0.0) {
        return Err(Error::config("target output bound M must be positive"));
    }
    match spec.family {
        TargetFamily::Cosine { amplitude, frequency } => {
            if !amplitude.is_finite() || frequency == 0 {
                return Err(Error::config("cosine target needs finite amplitude and frequency >= 1"));
            }
        }
        TargetFamily::Kink { center, exponent } => {
            if !(0.0 < center && center < 1.0) {
                return Err(Error::config("kink center must lie strictly inside (0, 1)"));
            }
            if !(exponent > 0.0) {
                return Err(Error::config("kink exponent must be positive"));
            }
        }
        TargetFamily::GaussBump { center, width } => {
            if !(0.0..=1.0).contains(&center) || !(width > 0.0) {
                return Err(Error::config("gauss-bump needs center in [0,1] and positive width"));
            }
        }
    }
    Ok(Target { family: spec.family, d: spec.d })
}

/// Draw `m` i.i.d. uniform inputs and noisy outputs `y = f(x) + eta`,
/// `eta ~ U[-h, h]`. Identical seeds give bit-identical datasets.
pub fn sample_dataset(
    target: &Target,
    m: usize,
    noise: &NoiseSpec,
    m_bound: f64,
    seed: u64,
) -> Result<Dataset> {
    if m == 0 {
        return Err(Error::EmptyDataset);
    }
    if !(noise.halfwidth >= 0.0) {
        return Err(Error::config("noise halfwidth must be >= 0"));
    }
    let sup = target.sup_abs();
    if sup + noise.halfwidth > m_bound {
        return Err(Error::config(format!(
            "sup|f| + noise halfwidth = {} exceeds output bound M = {m_bound}",
            sup + noise.halfwidth
        )));
    }
    let d = target.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(m);
    let mut ys = Vec::with_capacity(m);
    for _ in 0..m {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
        let eta = if noise.halfwidth > 0.0 {
            rng.random_range(-noise.halfwidth..=noise.halfwidth)
        } else {
            0.0
        };
        let y = (target.eval(&x) + eta).clamp(-m_bound, m_bound);
        xs.push(x);
        ys.push(y);
    }
    Dataset::new(xs, ys, m_bound, d)
}

/// Monte Carlo estimate of the squared distance to the target.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct L2Estimate {
    /// Mean of `(clip_M f(x) - f_rho(x))^2` over fresh uniform test points.
    pub value: f64,
    /// Standard error of that mean.
    pub std_error: f64,
}

/// Estimate `int (clip_M f - f_rho)^2 d rho_X` with `n_test` fresh uniform
/// points drawn from `seed`. Prediction is the clipped model output.
pub fn l2_rho_error(
    model: &CoefficientModel,
    target: &Target,
    m_bound: f64,
    n_test: usize,
    seed: u64,
) -> Result<L2Estimate> {
    if n_test == 0 {
        return Err(Error::config("n_test must be >= 1"));
    }
    let d = target.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = (0..n_test)
        .map(|_| (0..d).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();

    let residual = |x: &Vec<f64>| -> f64 {
        let p = clip(model.predict_unchecked(x), m_bound);
        let diff = p - target.eval(x);
        diff * diff
    };
    // Predictions are embarrassingly parallel; the reduction below stays
    // sequential so the estimate is independent of thread count.
    #[cfg(feature = "parallel")]
    let values: Vec<f64> = {
        use rayon::prelude::*;
        points.par_iter().map(residual).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let values: Vec<f64> = points.iter().map(residual).collect();

    let n = n_test as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if n_test > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(L2Estimate { value: mean, std_error: (var / n).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelParams;

    fn cosine_spec(amplitude: f64) -> TargetSpec {
        TargetSpec {
            family: TargetFamily::Cosine { amplitude, frequency: 1 },
            d: 1,
            m_bound: 1.0,
            nominal_r: 2.0,
        }
    }

    #[test]
    fn target_examples() {
        let t = make_target(&cosine_spec(0.5)).unwrap();
        assert_eq!(t.eval(&[0.0]), 0.5);

        let spec = TargetSpec {
            family: TargetFamily::Kink { center: 0.5, exponent: 1.5 },
            d: 1,
            m_bound: 1.0,
            nominal_r: 1.5,
        };
        let t = make_target(&spec).unwrap();
        assert_eq!(t.eval(&[0.5]), 0.0);
        assert!(t.sup_abs() <= 0.5f64.powf(1.5) + 1e-15);

        let spec = TargetSpec {
            family: TargetFamily::GaussBump { center: 0.5, width: 0.1 },
            d: 1,
            m_bound: 1.5,
            nominal_r: 2.0,
        };
        let t = make_target(&spec).unwrap();
        assert_eq!(t.eval(&[0.5]), 1.0);
    }

    #[test]
    fn sample_dataset_basics() {
        let t = make_target(&cosine_spec(0.5)).unwrap();
        let noise = NoiseSpec { halfwidth: 0.2 };
        let a = sample_dataset(&t, 5, &noise, 1.0, 42).unwrap();
        assert_eq!(a.len(), 5);
        let b = sample_dataset(&t, 5, &noise, 1.0, 42).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.y, b.y);
        // output bound is a hard property of every generated row
        for (x, y) in a.x.iter().zip(&a.y) {
            assert!(y.abs() <= 1.0);
            assert!(x.iter().all(|&c| (0.0..1.0).contains(&c)));
        }
    }

    #[test]
    fn noiseless_sampling_reproduces_target() {
        let t = make_target(&cosine_spec(0.8)).unwrap();
        let data = sample_dataset(&t, 16, &NoiseSpec { halfwidth: 0.0 }, 1.0, 9).unwrap();
        for (x, y) in data.x.iter().zip(&data.y) {
            assert_eq!(*y, t.eval(x));
        }
    }

    #[test]
    fn sampling_rejects_bound_violation() {
        let t = make_target(&cosine_spec(0.9)).unwrap();
        assert!(sample_dataset(&t, 4, &NoiseSpec { halfwidth: 0.2 }, 1.0, 1).is_err());
    }

    #[test]
    fn l2_error_of_target_model_is_small() {
        // model == target is impossible exactly; use the zero model against a
        // zero-amplitude cosine instead
        let t = make_target(&cosine_spec(0.0)).unwrap();
        let model =
            CoefficientModel::new(KernelParams::new(0.3).unwrap(), vec![vec![0.5]], vec![0.0]).unwrap();
        let est = l2_rho_error(&model, &t, 1.0, 2000, 3).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn zero_model_against_cosine_is_half_amplitude_squared() {
        // int cos^2(2 pi x) dx = 1/2
        let t = make_target(&cosine_spec(1.0)).unwrap();
        let model =
            CoefficientModel::new(KernelParams::new(0.3).unwrap(), vec![vec![0.5]], vec![0.0]).unwrap();
        let est = l2_rho_error(&model, &t, 1.0, 100_000, 11).unwrap();
        assert!((est.value - 0.5).abs() <= 3.0 * est.std_error, "{} +- {}", est.value, est.std_error);
    }

    #[test]
    fn l2_error_matches_dense_quadrature_oracle() {
        let t = make_target(&cosine_spec(0.7)).unwrap();
        let params = KernelParams::new(0.25).unwrap();
        let centers = vec![vec![0.2], vec![0.45], vec![0.8]];
        let coeffs = vec![0.4, -0.3, 0.6];
        let model = CoefficientModel::new(params, centers, coeffs).unwrap();
        // 10^6-point Riemann midpoint reference
        let n = 1_000_000;
        let mut acc = 0.0;
        for k in 0..n {
            let x = (k as f64 + 0.5) / n as f64;
            let p = clip(model.predict(&[x]).unwrap(), 1.0);
            let diff = p - t.eval(&[x]);
            acc += diff * diff;
        }
        let reference = acc / n as f64;
        let est = l2_rho_error(&model, &t, 1.0, 50_000, 17).unwrap();
        assert!(
            (est.value - reference).abs() <= 3.0 * est.std_error,
            "{} vs {reference} (se {})",
            est.value,
            est.std_error
        );
    }
}
