//! Library side of the `qsdlab` binary: argument types, command dispatch
//! and artifact writing. Every command computes all of its outputs in memory
//! before anything touches the output directory, so a failing run leaves no
//! partial files behind.

mod commands;
mod config;
mod observable;

use std::fs;
use std::path::Path;

use qsdlab::kernel::{registry, DensityFamily, KernelError, KernelSpec};
use qsdlab::mc::McError;
use qsdlab::oracle::OracleError;
use qsdlab::qsd::QsdError;
use qsdlab::spectral::SpectralError;

pub use commands::run;
pub use config::{Command, Format, RunConfig};

pub const SCHEMA_VERSION: u32 = 1;

/// Named output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("{message}")]
    Validation { name: &'static str, message: String },
    #[error("{message}")]
    Numerical { name: &'static str, message: String },
}

impl CliError {
    pub fn validation(name: &'static str, message: impl Into<String>) -> Self {
        CliError::Validation { name, message: message.into() }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CliError::Validation { name, .. } | CliError::Numerical { name, .. } => name,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } => 2,
            CliError::Numerical { .. } => 3,
        }
    }
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        let message = e.to_string();
        if e.is_validation() {
            CliError::Validation { name: e.name(), message }
        } else {
            CliError::Numerical { name: e.name(), message }
        }
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        CliError::Numerical { name: e.name(), message: e.to_string() }
    }
}

impl From<QsdError> for CliError {
    fn from(e: QsdError) -> Self {
        CliError::Numerical { name: e.name(), message: e.to_string() }
    }
}

impl From<McError> for CliError {
    fn from(e: McError) -> Self {
        let message = e.to_string();
        if e.is_validation() {
            CliError::Validation { name: e.name(), message }
        } else {
            CliError::Numerical { name: e.name(), message }
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        let message = e.to_string();
        match e {
            OracleError::InvalidChain(_) | OracleError::TooLarge(_) | OracleError::InvalidArgument(_) => {
                CliError::Validation { name: e.name(), message }
            }
            _ => CliError::Numerical { name: e.name(), message },
        }
    }
}

/// Reads `--spec`: an existing file path, else a bundled spec name.
pub fn load_spec(arg: Option<&str>, grid_size: Option<usize>) -> Result<KernelSpec, CliError> {
    let arg = arg.ok_or_else(|| CliError::validation("MissingSpec", "--spec is required"))?;
    let path = Path::new(arg);
    let mut spec = if path.is_file() {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::validation("SpecUnreadable", format!("{}: {e}", path.display())))?;
        KernelSpec::from_json_str(&text)?
    } else if !arg.contains(['/', '\\']) && registry::source(arg).is_some() {
        registry::bundled(arg)?
    } else {
        return Err(CliError::validation("SpecNotFound", format!("no spec file or bundled spec named {arg}")));
    };
    if let Some(n) = grid_size {
        if !matches!(spec.family, DensityFamily::ExplicitMatrix { .. }) {
            spec = spec.with_grid_size(n);
        }
    }
    spec.validate()?;
    Ok(spec)
}

/// Creates `dir` and writes every artifact into it.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::validation("OutputError", format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    for a in artifacts {
        fs::write(dir.join(&a.name), &a.contents).map_err(io)?;
    }
    Ok(())
}
