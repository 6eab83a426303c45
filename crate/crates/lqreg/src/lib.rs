//! `l^q` coefficient-regularized least squares in the Gaussian-kernel
//! sample-dependent hypothesis space.
//!
//! Given samples `(x_i, y_i)` in `[0,1]^d x [-M, M]`, the estimator is
//!
//! ```text
//! f = sum_i a_i G_sigma(x_i, .),
//! a = argmin (1/m) sum_i (f(x_i) - y_i)^2 + lambda sum_i |a_i|^q
//! ```
//!
//! for any exponent `q > 0`. The crate provides
//!
//! * kernel evaluation, Gram matrices and clipped empirical risk ([`kernel`]);
//! * exact scalar proximal operators for every `q` and the regularized
//!   objective ([`penalty`]);
//! * solvers: closed form at `q = 2`, the representer baseline
//!   `(G + m lambda I) b = y`, monotone proximal gradient for general `q`,
//!   IRLS for `q <= 1`, and first-order optimality diagnostics ([`solvers`]);
//! * the width/regularization schedules `sigma = m^(-1/(2r+d))`,
//!   `lambda(m, q)`, the mirror extension, the signed-Gaussian convolution
//!   oracle `f0` and the error-decomposition instrument ([`theory`]);
//! * synthetic targets, bounded-noise sampling and Monte Carlo error
//!   estimation ([`synth`]);
//! * the rate-sweep harness that fits per-q log-log slopes and writes
//!   reports ([`sweep`]).
//!
//! Sweep cells run on a rayon worker pool when the default `parallel`
//! feature is enabled; disabling it swaps in a sequential executor with
//! bit-identical output.

pub mod error;
pub mod io;
pub mod kernel;
mod linalg;
pub mod penalty;
pub mod quad;
pub mod seed;
pub mod solvers;
pub mod sweep;
pub mod synth;
pub mod theory;

pub use error::{Error, Result};
pub use kernel::{clip, empirical_risk, eval_kernel, gram_matrix, CoefficientModel, Dataset, KernelParams};
pub use penalty::{objective, penalty_value, prox_scalar, PenaltySpec};
pub use solvers::{
    kkt_residual, lipschitz_estimate, solve, solve_closed_form_q2, solve_irls, solve_proximal_gradient,
    solve_rkhs_rls, FitResult, Init, Method, SolutionKind, SolverConfig, StepRule,
};
pub use sweep::{emit_report, fit_rate, run_sweep, ReportFormat, SweepConfig, SweepReport};
pub use synth::{l2_rho_error, make_target, sample_dataset, NoiseSpec, Target, TargetFamily, TargetSpec};
pub use theory::{
    conv_kernel_weights, decompose_check, f0_eval, hypothesis_error_bound, mirror_extend_eval,
    modulus_of_smoothness, reference_exponent, schedule, DecomposeContext, DecompositionReport, Schedule,
    ScheduleVariant, SmoothnessSpec,
};
