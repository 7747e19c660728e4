use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

/// Quasi-stationary analysis of absorbed Markov kernels.
#[derive(Debug, Clone, Parser)]
#[command(name = "qsdlab", version)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,

    /// Kernel spec file, or the name of a bundled spec (example21,
    /// example22cubic, example23gauss, sym2, cycle2, cycle3, ds3).
    #[arg(long, global = true)]
    pub spec: Option<String>,

    /// Output directory; created if missing.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    /// Overrides the spec's grid size (interval kernels only).
    #[arg(long, global = true)]
    pub grid_size: Option<usize>,

    /// Horizon: iterations for analyze/yaglom, steps for simulate, largest n for lobo.
    #[arg(long, global = true)]
    pub n_max: Option<usize>,

    #[arg(long, global = true, default_value_t = 1_000_000)]
    pub n_paths: u64,

    #[arg(long, global = true, env = "QSDLAB_SEED", default_value_t = 0)]
    pub seed: u64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    #[arg(long, global = true, default_value_t = qsdlab::spectral::DEFAULT_PERIPHERAL_TOL)]
    pub peripheral_tol: f64,

    /// Omit the timestamp so repeated runs are byte-identical.
    #[arg(long, global = true)]
    pub canonical: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// λ, period, QSD, QED, cyclic classes, rates and mass decay.
    Analyze {
        /// Start point for the rate fits (default: state 0 or the domain midpoint).
        #[arg(long)]
        x0: Option<f64>,
    },
    /// Monte Carlo Yaglom histogram and conditioned Birkhoff average.
    Simulate {
        #[arg(long)]
        x0: Option<f64>,
        /// Test function: one, x, x2, state:K or cell:K.
        #[arg(long, default_value = "x")]
        observable: String,
    },
    /// Numerical audit of the continuity and reachability hypotheses.
    VerifyHypothesis {
        #[arg(long, default_value_t = 16)]
        probes: usize,
    },
    /// Conditioned-law TV curve and its rate fit.
    Yaglom {
        #[arg(long)]
        x0: Option<f64>,
    },
    /// Exact vs predicted leading term of E_x[Σ h(X_k); τ > n] on a finite chain.
    Lobo {
        #[arg(long)]
        x0: Option<f64>,
        /// Test function: one, state:K or class:K (default: class:0 when periodic, else state:0).
        #[arg(long)]
        observable: Option<String>,
    },
    /// Regenerates the oracle fixtures for the bundled finite chains.
    Fixtures,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Analyze { .. } => "analyze",
            Command::Simulate { .. } => "simulate",
            Command::VerifyHypothesis { .. } => "verify-hypothesis",
            Command::Yaglom { .. } => "yaglom",
            Command::Lobo { .. } => "lobo",
            Command::Fixtures => "fixtures",
        }
    }
}
