//! Direct simulation of the absorbed chain, conditioned by discarding
//! absorbed paths.
//!
//! Paths are split into fixed streams of [`PATHS_PER_STREAM`] trajectories.
//! Stream `s` draws from `ChaCha8` keyed by the seed with stream id `s`, so a
//! batch is a pure function of `(seed, n_paths, spec, start, n)` no matter
//! how many threads run the streams; per-stream results are concatenated in
//! stream order.

mod sampler;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::exec::Execution;
use crate::kernel::{DensityFamily, KernelError, KernelSpec, StateGrid};

pub use sampler::{sample_step, Sampler, Step};

pub const PATHS_PER_STREAM: u64 = 1 << 16;
/// Below this many survivors an estimate is refused.
pub const MIN_SURVIVORS: u64 = 100;
/// Expected survivor count under which a budget warning is attached.
pub const RECOMMENDED_SURVIVORS: f64 = 1000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("start point {x0} is not a state of the kernel")]
    InvalidStart { x0: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("only {survivors} of {n_paths} paths survived; at least {needed} are required")]
    TooFewSurvivors { survivors: u64, n_paths: u64, needed: u64 },
}

impl McError {
    pub fn name(&self) -> &'static str {
        match self {
            McError::Kernel(e) => e.name(),
            McError::InvalidStart { .. } => "InvalidStart",
            McError::InvalidParameter(_) => "InvalidParameter",
            McError::TooFewSurvivors { .. } => "TooFewSurvivors",
        }
    }

    pub fn is_validation(&self) -> bool {
        !matches!(self, McError::TooFewSurvivors { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub n_paths: u64,
    pub seed: u64,
    pub exec: Execution,
    /// Spectral radius used to pre-check the survivor budget `λⁿ n_paths`.
    pub lambda_hint: Option<f64>,
}

impl McOptions {
    pub fn new(n_paths: u64, seed: u64) -> Self {
        McOptions { n_paths, seed, exec: Execution::default(), lambda_hint: None }
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda_hint = Some(lambda);
        self
    }
}

/// Sufficient statistics of `n_paths` absorbed trajectories.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryBatch {
    pub seed: u64,
    pub paths_per_stream: u64,
    pub streams: u64,
    pub n_steps: usize,
    pub start: f64,
    pub n_paths: u64,
    /// `absorbed_at[k] = #{paths with τ = k}`, `k = 0..=n_steps`.
    pub absorbed_at: Vec<u64>,
    pub survivor_count: u64,
    /// `X_n` of each surviving path, in path order.
    pub terminal_states: Vec<f64>,
    /// `Σ_{i<n} h(X_i)` of each surviving path; empty without a test function.
    pub birkhoff_sums: Vec<f64>,
}

impl TrajectoryBatch {
    /// `#{paths with τ > k}` for `k = 0..=n_steps`.
    pub fn survival_curve(&self) -> Vec<u64> {
        let mut alive = self.n_paths;
        self.absorbed_at
            .iter()
            .map(|a| {
                alive -= a;
                alive
            })
            .collect()
    }
}

struct StreamResult {
    absorbed_at: Vec<u64>,
    terminal: Vec<f64>,
    sums: Vec<f64>,
}

type TestFn<'a> = &'a (dyn Fn(f64) -> f64 + Sync);

fn check_start(spec: &KernelSpec, x0: f64) -> Result<(), McError> {
    let ok = match &spec.family {
        DensityFamily::ExplicitMatrix { matrix, .. } => x0 >= 0.0 && x0.fract() == 0.0 && (x0 as usize) < matrix.len(),
        _ => spec.domain.contains(x0),
    };
    if ok {
        Ok(())
    } else {
        Err(McError::InvalidStart { x0 })
    }
}

/// Runs `opts.n_paths` trajectories of length `n_steps` from `x0`.
pub fn simulate(
    spec: &KernelSpec,
    x0: f64,
    n_steps: usize,
    h: Option<TestFn<'_>>,
    opts: &McOptions,
) -> Result<TrajectoryBatch, McError> {
    spec.validate()?;
    check_start(spec, x0)?;
    if n_steps == 0 {
        return Err(McError::InvalidParameter("n must be at least 1".into()));
    }
    if opts.n_paths == 0 {
        return Err(McError::InvalidParameter("n_paths must be at least 1".into()));
    }
    let sampler = Sampler::new(spec);
    let streams = opts.n_paths.div_ceil(PATHS_PER_STREAM);
    let run = |s: usize| {
        let s = s as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(s);
        let count = PATHS_PER_STREAM.min(opts.n_paths - s * PATHS_PER_STREAM);
        let mut out = StreamResult { absorbed_at: vec![0; n_steps + 1], terminal: Vec::new(), sums: Vec::new() };
        'paths: for _ in 0..count {
            let mut x = x0;
            let mut sum = 0.0;
            for k in 1..=n_steps {
                if let Some(h) = h {
                    sum += h(x);
                }
                match sampler.step(x, rng.random::<f64>()) {
                    Step::Moved(y) => x = y,
                    Step::Absorbed => {
                        out.absorbed_at[k] += 1;
                        continue 'paths;
                    }
                }
            }
            out.terminal.push(x);
            if h.is_some() {
                out.sums.push(sum);
            }
        }
        out
    };
    let parts = opts.exec.map_range(streams as usize, run);
    let mut batch = TrajectoryBatch {
        seed: opts.seed,
        paths_per_stream: PATHS_PER_STREAM,
        streams,
        n_steps,
        start: x0,
        n_paths: opts.n_paths,
        absorbed_at: vec![0; n_steps + 1],
        survivor_count: 0,
        terminal_states: Vec::new(),
        birkhoff_sums: Vec::new(),
    };
    for p in parts {
        batch.absorbed_at.iter_mut().zip(&p.absorbed_at).for_each(|(a, b)| *a += b);
        batch.terminal_states.extend(p.terminal);
        batch.birkhoff_sums.extend(p.sums);
    }
    batch.survivor_count = batch.terminal_states.len() as u64;
    Ok(batch)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    YaglomHistogram,
    BirkhoffAverage,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionedEstimate {
    pub kind: EstimateKind,
    pub n: usize,
    pub n_paths: u64,
    pub survivors: u64,
    pub effective_samples: u64,
    /// Yaglom: survivor fraction per grid cell (sums to 1).
    pub histogram: Option<Vec<f64>>,
    /// Yaglom: binomial standard error per cell.
    pub cell_stderr: Option<Vec<f64>>,
    /// Birkhoff: mean of the time averages over survivors.
    pub value: Option<f64>,
    /// Birkhoff: standard error of `value`; Yaglom: largest cell error.
    pub stderr: f64,
    /// `λⁿ n_paths` when a spectral λ was supplied.
    pub expected_survivors: Option<f64>,
    pub warnings: Vec<String>,
}

fn budget(n: usize, opts: &McOptions) -> (Option<f64>, Vec<String>) {
    match opts.lambda_hint {
        Some(l) => {
            let e = l.powi(n as i32) * opts.n_paths as f64;
            let w = if e < RECOMMENDED_SURVIVORS {
                vec![format!("expected survivors λⁿ·n_paths = {e:.3e} < {RECOMMENDED_SURVIVORS}")]
            } else {
                Vec::new()
            };
            (Some(e), w)
        }
        None => (None, vec!["no spectral λ supplied; survivor budget not checked".into()]),
    }
}

fn enough(batch: &TrajectoryBatch) -> Result<(), McError> {
    if batch.survivor_count < MIN_SURVIVORS {
        return Err(McError::TooFewSurvivors {
            survivors: batch.survivor_count,
            n_paths: batch.n_paths,
            needed: MIN_SURVIVORS,
        });
    }
    Ok(())
}

/// Histogram of `X_n` over surviving paths, binned to the cells of the
/// analysis grid of `spec`.
pub fn estimate_yaglom(spec: &KernelSpec, x0: f64, n: usize, opts: &McOptions) -> Result<ConditionedEstimate, McError> {
    let (expected, warnings) = budget(n, opts);
    let batch = simulate(spec, x0, n, None, opts)?;
    enough(&batch)?;
    let grid = StateGrid::for_spec(spec);
    Ok(yaglom_from_batch(&batch, &grid, expected, warnings))
}

pub fn yaglom_from_batch(
    batch: &TrajectoryBatch,
    grid: &StateGrid,
    expected_survivors: Option<f64>,
    warnings: Vec<String>,
) -> ConditionedEstimate {
    let mut counts = vec![0u64; grid.len()];
    for &y in &batch.terminal_states {
        let i = grid.locate(y).unwrap_or_else(|| grid.nearest_node(y));
        counts[i] += 1;
    }
    let total = batch.survivor_count as f64;
    let hist: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    let cell_stderr: Vec<f64> = hist.iter().map(|p| (p * (1.0 - p) / total).sqrt()).collect();
    let stderr = cell_stderr.iter().copied().fold(0.0, f64::max);
    ConditionedEstimate {
        kind: EstimateKind::YaglomHistogram,
        n: batch.n_steps,
        n_paths: batch.n_paths,
        survivors: batch.survivor_count,
        effective_samples: batch.survivor_count,
        histogram: Some(hist),
        cell_stderr: Some(cell_stderr),
        value: None,
        stderr,
        expected_survivors,
        warnings,
    }
}

/// Mean of `(1/n) Σ_{i<n} h(X_i)` over surviving paths.
pub fn estimate_birkhoff(
    spec: &KernelSpec,
    x0: f64,
    n: usize,
    h: TestFn<'_>,
    opts: &McOptions,
) -> Result<ConditionedEstimate, McError> {
    let (expected, warnings) = budget(n, opts);
    let batch = simulate(spec, x0, n, Some(h), opts)?;
    enough(&batch)?;
    let k = batch.birkhoff_sums.len() as f64;
    let avgs: Vec<f64> = batch.birkhoff_sums.iter().map(|s| s / n as f64).collect();
    let mean = avgs.iter().sum::<f64>() / k;
    let var = avgs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (k - 1.0);
    Ok(ConditionedEstimate {
        kind: EstimateKind::BirkhoffAverage,
        n,
        n_paths: batch.n_paths,
        survivors: batch.survivor_count,
        effective_samples: batch.survivor_count,
        histogram: None,
        cell_stderr: None,
        value: Some(mean),
        stderr: (var / k).sqrt(),
        expected_survivors: expected,
        warnings,
    })
}
