//! Rate-sweep orchestration: run a (q, m, trial) grid under the width and
//! regularization schedules, estimate generalization errors on held-out
//! draws, fit per-q log-log slopes and emit reports.
//!
//! Cells are independent jobs executed by a worker pool (rayon, behind the
//! `parallel` feature; a plain loop otherwise). Every trial derives its
//! seeds from `(master_seed, m, trial)` alone, so results are identical at
//! any parallelism level and any scheduling order. All q share the same
//! draws per (m, trial): the comparison across exponents is paired.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{gram_matrix, CoefficientModel, KernelParams};
use crate::penalty::PenaltySpec;
use crate::seed::{trial_seed, PURPOSE_TEST, PURPOSE_TRAIN};
use crate::solvers::{solve, SolverConfig};
use crate::synth::{l2_rho_error, make_target, sample_dataset, NoiseSpec, TargetSpec};
use crate::theory::{prop5_chain, reference_exponent, schedule, ScheduleVariant};

pub const SWEEP_SCHEMA_VERSION: u32 = 1;

/// Full description of a sweep; serialized as-is into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub target: TargetSpec,
    pub noise: NoiseSpec,
    pub q_list: Vec<f64>,
    pub m_list: Vec<usize>,
    pub trials: usize,
    /// Smoothness order fed to the schedules.
    pub r: f64,
    pub d: usize,
    #[serde(rename = "M")]
    pub m_bound: f64,
    #[serde(default)]
    pub schedule_variant: ScheduleVariant,
    #[serde(default)]
    pub solver: SolverConfig,
    pub n_test: usize,
    pub master_seed: u64,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    /// Wall-clock budget per cell in seconds; a cell that exceeds it stops
    /// early and is marked (0 disables the budget, keeping runs fully
    /// machine-independent).
    #[serde(default = "default_cell_budget")]
    pub cell_budget_secs: f64,
    /// Fit slopes on all m values instead of the default upper half of
    /// `m_list` (the asymptotic regime).
    #[serde(default)]
    pub slope_fit_all_m: bool,
}

fn default_parallelism() -> usize {
    1
}

fn default_cell_budget() -> f64 {
    60.0
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_list.len() < 2 || self.m_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("m_list must be strictly increasing with >= 2 values"));
        }
        if self.q_list.is_empty() {
            return Err(Error::config("q_list must be non-empty"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials must be >= 1"));
        }
        if self.n_test == 0 {
            return Err(Error::config("n_test must be >= 1"));
        }
        if self.parallelism == 0 {
            return Err(Error::config("parallelism must be >= 1"));
        }
        if self.d != self.target.d {
            return Err(Error::config("schedule dimension d disagrees with target.d"));
        }
        if (self.m_bound - self.target.m_bound).abs() > 1e-12 {
            return Err(Error::config("schedule bound M disagrees with target.M"));
        }
        for &q in &self.q_list {
            PenaltySpec::new(q, 1.0)?;
        }
        make_target(&self.target)?;
        Ok(())
    }
}

/// Aggregates of one (q, m) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub q: f64,
    pub m: usize,
    pub sigma: f64,
    pub lambda: f64,
    pub n_trials: usize,
    pub n_ok: usize,
    pub mean_error: Option<f64>,
    /// Standard error of the mean across trials.
    pub std_error: Option<f64>,
    pub mean_iterations: Option<f64>,
    /// Fraction of trials on which the hypothesis-error chain held.
    pub chain_holds_rate: Option<f64>,
    pub timed_out: bool,
    pub failures: Vec<String>,
}

/// Per-q slope summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QSummary {
    pub q: f64,
    pub n_points: usize,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub slope_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: u32,
    /// `-2r/(2r+d)`.
    pub reference_slope: f64,
    pub config: SweepConfig,
    pub cells: Vec<CellSummary>,
    pub per_q: Vec<QSummary>,
}

/// Ordinary least squares of `log error` on `log m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub n_points: usize,
    /// Points dropped for nonpositive error.
    pub dropped: usize,
}

/// Fit `error ~ C m^slope` by OLS on `(ln m, ln error)`. Nonpositive errors
/// are dropped; fewer than two surviving points is an error.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    let clean: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(m, e)| m > 0.0 && e > 0.0)
        .map(|&(m, e)| (m.ln(), e.ln()))
        .collect();
    let dropped = points.len() - clean.len();
    let n = clean.len();
    if n < 2 {
        return Err(Error::config(format!("rate fit needs >= 2 positive points, got {n}")));
    }
    let nf = n as f64;
    let mean_x = clean.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_y = clean.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = clean.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    if sxx == 0.0 {
        return Err(Error::config("rate fit needs at least two distinct m values"));
    }
    let sxy: f64 = clean.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let slope_se = if n > 2 {
        let ssr: f64 = clean
            .iter()
            .map(|p| {
                let r = p.1 - (intercept + slope * p.0);
                r * r
            })
            .sum();
        (ssr / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(RateFit { slope, intercept, slope_se, n_points: n, dropped })
}

struct TrialOutcome {
    error: f64,
    iterations: usize,
    chain_holds: bool,
}

fn run_cell(cfg: &SweepConfig, q: f64, m: usize) -> CellSummary {
    let start = Instant::now();
    let mut outcomes: Vec<TrialOutcome> = Vec::with_capacity(cfg.trials);
    let mut failures = Vec::new();
    let mut timed_out = false;

    let sched = match schedule(m, cfg.r, cfg.d, q, cfg.m_bound, cfg.schedule_variant) {
        Ok(s) => s,
        Err(e) => {
            return CellSummary {
                q,
                m,
                sigma: f64::NAN,
                lambda: f64::NAN,
                n_trials: cfg.trials,
                n_ok: 0,
                mean_error: None,
                std_error: None,
                mean_iterations: None,
                chain_holds_rate: None,
                timed_out: false,
                failures: vec![e.to_string()],
            };
        }
    };

    let run_trial = |trial: usize| -> Result<TrialOutcome> {
        let target = make_target(&cfg.target)?;
        let spec = PenaltySpec::new(q, sched.lambda)?;
        let params = KernelParams::new(sched.sigma)?;
        let train_seed = trial_seed(cfg.master_seed, m, trial, PURPOSE_TRAIN);
        let test_seed = trial_seed(cfg.master_seed, m, trial, PURPOSE_TEST);
        let data = sample_dataset(&target, m, &cfg.noise, cfg.m_bound, train_seed)?;
        let gram = gram_matrix(&data.x, &params)?;
        let y = data.y_vector();
        let fit = solve(&gram, &y, &spec, &cfg.solver)?;
        let chain = prop5_chain(&gram, &y, &fit.coeffs, &spec, cfg.m_bound)?;
        let model = CoefficientModel::new(params, data.x, fit.coeffs.iter().cloned().collect())?;
        let est = l2_rho_error(&model, &target, cfg.m_bound, cfg.n_test, test_seed)?;
        Ok(TrialOutcome { error: est.value, iterations: fit.iterations, chain_holds: chain.holds })
    };

    for trial in 0..cfg.trials {
        if cfg.cell_budget_secs > 0.0 && trial > 0 && start.elapsed().as_secs_f64() > cfg.cell_budget_secs {
            timed_out = true;
            break;
        }
        match run_trial(trial) {
            Ok(o) => outcomes.push(o),
            Err(e) => failures.push(format!("trial {trial}: {e}")),
        }
    }

    let n_ok = outcomes.len();
    let (mean_error, std_error, mean_iterations, chain_rate) = if n_ok > 0 {
        let nf = n_ok as f64;
        let mean = outcomes.iter().map(|o| o.error).sum::<f64>() / nf;
        let se = if n_ok > 1 {
            let var = outcomes.iter().map(|o| (o.error - mean) * (o.error - mean)).sum::<f64>() / (nf - 1.0);
            Some((var / nf).sqrt())
        } else {
            Some(0.0)
        };
        let iters = outcomes.iter().map(|o| o.iterations as f64).sum::<f64>() / nf;
        let chain = outcomes.iter().filter(|o| o.chain_holds).count() as f64 / nf;
        (Some(mean), se, Some(iters), Some(chain))
    } else {
        (None, None, None, None)
    };

    CellSummary {
        q,
        m,
        sigma: sched.sigma,
        lambda: sched.lambda,
        n_trials: cfg.trials,
        n_ok,
        mean_error,
        std_error,
        mean_iterations,
        chain_holds_rate: chain_rate,
        timed_out,
        failures,
    }
}

#[cfg(feature = "parallel")]
fn run_cells(cfg: &SweepConfig, jobs: &[(f64, usize)]) -> Result<Vec<CellSummary>> {
    if cfg.parallelism <= 1 {
        return Ok(jobs.iter().map(|&(q, m)| run_cell(cfg, q, m)).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| Error::config(format!("failed to build worker pool: {e}")))?;
    use rayon::prelude::*;
    Ok(pool.install(|| jobs.par_iter().map(|&(q, m)| run_cell(cfg, q, m)).collect()))
}

#[cfg(not(feature = "parallel"))]
fn run_cells(cfg: &SweepConfig, jobs: &[(f64, usize)]) -> Result<Vec<CellSummary>> {
    Ok(jobs.iter().map(|&(q, m)| run_cell(cfg, q, m)).collect())
}

/// Run the full grid and assemble the report.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let jobs: Vec<(f64, usize)> = cfg
        .q_list
        .iter()
        .flat_map(|&q| cfg.m_list.iter().map(move |&m| (q, m)))
        .collect();
    let cells = run_cells(cfg, &jobs)?;

    // slopes over the asymptotic (upper-half) m range unless told otherwise
    let slope_ms: Vec<usize> = if cfg.slope_fit_all_m {
        cfg.m_list.clone()
    } else {
        let half = cfg.m_list.len().div_ceil(2);
        cfg.m_list[cfg.m_list.len() - half..].to_vec()
    };
    let per_q = cfg
        .q_list
        .iter()
        .map(|&q| {
            let points: Vec<(f64, f64)> = cells
                .iter()
                .filter(|c| c.q == q && slope_ms.contains(&c.m))
                .filter_map(|c| c.mean_error.map(|e| (c.m as f64, e)))
                .collect();
            match fit_rate(&points) {
                Ok(fit) => QSummary {
                    q,
                    n_points: fit.n_points,
                    slope: Some(fit.slope),
                    intercept: Some(fit.intercept),
                    slope_se: Some(fit.slope_se),
                },
                Err(_) => QSummary { q, n_points: points.len(), slope: None, intercept: None, slope_se: None },
            }
        })
        .collect();

    Ok(SweepReport {
        schema_version: SWEEP_SCHEMA_VERSION,
        reference_slope: reference_exponent(cfg.r, cfg.d),
        config: cfg.clone(),
        cells,
        per_q,
    })
}

/// Output encodings of a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Plotdata,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "plotdata" => Ok(ReportFormat::Plotdata),
            other => Err(Error::config(format!("unknown report format '{other}'"))),
        }
    }
}

impl SweepReport {
    pub fn to_json_string(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Flat per-cell rows plus one summary row per q.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(
            "row_type,q,m,sigma,lambda,n_trials,n_ok,mean_error,std_error,mean_iterations,chain_holds_rate,timed_out,slope,intercept,slope_se\n",
        );
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for c in &self.cells {
            out.push_str(&format!(
                "cell,{},{},{},{},{},{},{},{},{},{},{},,,\n",
                c.q,
                c.m,
                c.sigma,
                c.lambda,
                c.n_trials,
                c.n_ok,
                fmt(c.mean_error),
                fmt(c.std_error),
                fmt(c.mean_iterations),
                fmt(c.chain_holds_rate),
                c.timed_out
            ));
        }
        for s in &self.per_q {
            out.push_str(&format!(
                "summary,{},,,,,,,,,,,{},{},{}\n",
                s.q,
                fmt(s.slope),
                fmt(s.intercept),
                fmt(s.slope_se)
            ));
        }
        out
    }

    /// Two-column `log10(m) log10(error)` blocks per q, separated by blank
    /// lines; block headers are comments.
    pub fn to_plotdata_string(&self) -> String {
        let mut out = String::new();
        for s in &self.per_q {
            out.push_str(&format!("# q = {}", s.q));
            if let Some(sl) = s.slope {
                out.push_str(&format!(" slope = {sl} reference = {}", self.reference_slope));
            }
            out.push('\n');
            for c in self.cells.iter().filter(|c| c.q == s.q) {
                if let Some(e) = c.mean_error {
                    if e > 0.0 {
                        out.push_str(&format!("{} {}\n", (c.m as f64).log10(), e.log10()));
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn render(&self, format: ReportFormat) -> Result<String> {
        Ok(match format {
            ReportFormat::Json => self.to_json_string()?,
            ReportFormat::Csv => self.to_csv_string(),
            ReportFormat::Plotdata => self.to_plotdata_string(),
        })
    }
}

/// Render and write a report to `path`.
pub fn emit_report(report: &SweepReport, path: &std::path::Path, format: ReportFormat) -> Result<()> {
    std::fs::write(path, report.render(format)?)?;
    Ok(())
}
