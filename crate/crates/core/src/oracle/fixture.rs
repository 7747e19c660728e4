use serde::{Deserialize, Serialize};

use super::{exact_qsd_qed, FiniteChain, OracleError};
use crate::kernel::registry;

pub const FIXTURE_SCHEMA_VERSION: u32 = 1;

/// Bundled finite chains that get a checked-in fixture.
pub const FIXTURE_CHAINS: [&str; 4] = ["sym2", "cycle2", "cycle3", "ds3"];

/// Oracle values for one finite chain, as stored under `fixtures/`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    pub schema_version: u32,
    pub name: String,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    pub labels: Vec<String>,
    pub mu: Vec<f64>,
    pub eta: Vec<f64>,
    pub lambda: f64,
    pub m: usize,
    pub provenance: String,
}

impl Fixture {
    pub fn compute(name: &str, chain: &FiniteChain) -> Result<Self, OracleError> {
        let e = exact_qsd_qed(chain)?;
        Ok(Fixture {
            schema_version: FIXTURE_SCHEMA_VERSION,
            name: name.to_string(),
            q: chain.rows(),
            labels: chain.labels().to_vec(),
            mu: e.mu,
            eta: e.eta,
            lambda: e.lambda,
            m: e.m,
            provenance: format!("oracle_finite@{}", env!("CARGO_PKG_VERSION")),
        })
    }

    /// Fixture for one of the bundled chains in [`FIXTURE_CHAINS`].
    pub fn bundled(name: &str) -> Result<Self, OracleError> {
        let spec = registry::bundled(name).map_err(|e| OracleError::InvalidChain(e.to_string()))?;
        Self::compute(name, &FiniteChain::from_spec(&spec)?)
    }

    pub fn from_json_str(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data");
        s.push('\n');
        s
    }

    pub fn file_name(&self) -> String {
        format!("{}.json", self.name)
    }
}
