//! Solved-count benchmarks over random instances.

use std::fmt::Write as _;

use crate::par::Execution;
use crate::sat::ExternalSolver;
use crate::synth::{identify, Limits, Method, Outcome, SynthesisStats};

use super::{make_hard_instance, make_instance, HarnessError, InstanceSpec};

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub runs: usize,
    pub methods: Vec<Method>,
    /// Instance shape; `states` and `seed` are set per run.
    pub template: InstanceSpec,
    pub hard: bool,
    /// Applied to each identification separately.
    pub limits: Limits,
    pub qbf_solver: Option<ExternalSolver>,
    pub execution: Execution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub size: usize,
    pub method: Method,
    pub runs: usize,
    pub solved: usize,
    /// Over solved runs only.
    pub median_seconds: Option<f64>,
    pub mean_iterations: Option<f64>,
    pub mean_final_k: Option<f64>,
}

fn instance_seed(base: u64, size: usize, run: usize) -> u64 {
    base.wrapping_mul(1_000_003)
        .wrapping_add((size as u64) << 32)
        .wrapping_add(run as u64)
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let mid = xs.len() / 2;
    Some(if xs.len() % 2 == 1 {
        xs[mid]
    } else {
        (xs[mid - 1] + xs[mid]) / 2.0
    })
}

/// Runs every method on `runs` instances per size, at the reference size.
/// Instances are independent and solved on the worker pool; each solve is
/// single-threaded and rows come out in configuration order.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>, HarnessError> {
    let jobs: Vec<(usize, usize)> = cfg
        .sizes
        .iter()
        .flat_map(|&size| (0..cfg.runs).map(move |run| (size, run)))
        .collect();
    let solved = cfg.execution.map(jobs, |(size, run)| -> Result<_, HarnessError> {
        let spec = InstanceSpec {
            states: size,
            seed: instance_seed(cfg.template.seed, size, run),
            ..cfg.template
        };
        let inst = if cfg.hard {
            make_hard_instance(&spec)?
        } else {
            make_instance(&spec)?
        };
        let mut per_method = Vec::with_capacity(cfg.methods.len());
        for &method in &cfg.methods {
            let mut req = inst.request().with_method(method);
            req.limits = cfg.limits;
            req.qbf_solver = cfg.qbf_solver.clone();
            req.execution = Execution::Sequential;
            let result = identify(&req)?;
            per_method.push((matches!(result.outcome, Outcome::Found(_)), result.stats));
        }
        Ok((size, per_method))
    });
    let solved = solved.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut rows = Vec::new();
    for &size in &cfg.sizes {
        for (m, &method) in cfg.methods.iter().enumerate() {
            let stats: Vec<&SynthesisStats> = solved
                .iter()
                .filter(|(s, _)| *s == size)
                .map(|(_, per)| &per[m])
                .filter(|(found, _)| *found)
                .map(|(_, st)| st)
                .collect();
            rows.push(BenchRow {
                size,
                method,
                runs: cfg.runs,
                solved: stats.len(),
                median_seconds: median(stats.iter().map(|s| s.elapsed.as_secs_f64()).collect()),
                mean_iterations: mean(stats.iter().map(|s| s.iterations as f64)),
                mean_final_k: mean(stats.iter().filter_map(|s| s.final_k).map(|k| k as f64)),
            });
        }
    }
    Ok(rows)
}

/// Columns `size,method,solved,medianSeconds,meanIterations,meanFinalK`;
/// undefined values are left empty.
pub fn bench_csv(rows: &[BenchRow]) -> String {
    let opt = |x: Option<f64>| x.map(|v| format!("{v:.4}")).unwrap_or_default();
    let mut out = String::from("size,method,solved,medianSeconds,meanIterations,meanFinalK\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.size,
            r.method.name(),
            r.solved,
            opt(r.median_seconds),
            opt(r.mean_iterations),
            opt(r.mean_final_k)
        );
    }
    out
}
