//! Worker-pool sweep execution vs the sequential fallback, plus the Gram
//! build that dominates per-cell cost.
//!
//! With the default `parallel` feature the parallelism > 1 benches run on a
//! rayon pool; built with `--no-default-features` every path is sequential,
//! which is the baseline to compare against.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use lqreg::{
    gram_matrix, run_sweep, KernelParams, NoiseSpec, ScheduleVariant, SolverConfig, SweepConfig,
    TargetFamily, TargetSpec,
};

fn bench_config(parallelism: usize) -> SweepConfig {
    SweepConfig {
        target: TargetSpec {
            family: TargetFamily::Cosine { amplitude: 0.8, frequency: 1 },
            d: 1,
            m_bound: 1.0,
            nominal_r: 2.0,
        },
        noise: NoiseSpec { halfwidth: 0.2 },
        q_list: vec![0.5, 1.0, 2.0, 4.0],
        m_list: vec![32, 64],
        trials: 2,
        r: 2.0,
        d: 1,
        m_bound: 1.0,
        schedule_variant: ScheduleVariant::ProofSection,
        solver: SolverConfig { max_iters: 400, tol: 1e-7, ..Default::default() },
        n_test: 1000,
        master_seed: 11,
        parallelism,
        cell_budget_secs: 0.0,
        slope_fit_all_m: true,
    }
}

fn sweep_benches(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        let cfg = bench_config(1);
        b.iter(|| black_box(run_sweep(&cfg).unwrap()))
    });
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(2);
    group.bench_function(format!("pool-{workers}"), |b| {
        let cfg = bench_config(workers);
        b.iter(|| black_box(run_sweep(&cfg).unwrap()))
    });
    group.finish();
}

fn gram_bench(c: &mut Criterion) {
    let mut group = c.benchmark_group("gram");
    group.sample_size(20);
    let m = 512;
    let pts: Vec<Vec<f64>> = (0..m).map(|i| vec![i as f64 / (m - 1) as f64]).collect();
    let params = KernelParams::new(0.2).unwrap();
    let label = if cfg!(feature = "parallel") { "rayon-rows" } else { "serial-rows" };
    group.bench_function(format!("m{m}/{label}"), |b| {
        b.iter(|| black_box(gram_matrix(&pts, &params).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, sweep_benches, gram_bench);
criterion_main!(benches);
