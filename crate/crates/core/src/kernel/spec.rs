//! Declarative kernel descriptions and the kernel spec file format.
//!
//! A spec file is a JSON object:
//!
//! ```json
//! { "name": "example21", "domain": [-1, 1], "measure": "lebesgue",
//!   "family": "affine_uniform",
//!   "params": { "a": 2, "b": 0, "noise_halfwidth": 1 },
//!   "grid_size": 401, "quadrature": "trapezoid" }
//! ```
//!
//! Unknown fields (top level or inside `params`) are rejected. The full
//! schema is documented in `docs/kernel-spec.md`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::KernelError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lower: f64,
    pub upper: f64,
}

impl Domain {
    pub fn new(lower: f64, upper: f64) -> Self {
        Domain { lower, upper }
    }

    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }
}

/// Reference measure ρ on the state space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMeasure {
    #[default]
    Lebesgue,
    /// `c · Leb`; densities are reported with respect to this measure.
    LebesgueScaled(f64),
}

impl ReferenceMeasure {
    pub fn scale(&self) -> f64 {
        match *self {
            ReferenceMeasure::Lebesgue => 1.0,
            ReferenceMeasure::LebesgueScaled(c) => c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    /// Composite trapezoid on a uniform grid that includes both endpoints.
    #[default]
    Trapezoid,
    /// Cell-averaged (Ulam) transition probabilities on equal cells.
    Ulam,
}

/// Density family `g(x, ·)` with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum DensityFamily {
    /// `x ↦ a·x + b + U`, `U` uniform on `[-w, w]`.
    AffineUniform { a: f64, b: f64, noise_halfwidth: f64 },
    /// `x ↦ x³ + U`, `U` uniform on `[-w, w]`.
    CubicUniform { noise_halfwidth: f64 },
    /// Gaussian displacement density `φ_σ(y - x)` on a union of intervals.
    ///
    /// The random map this density is usually attributed to
    /// (`x + ω·1_{ℝ∖M}(x)`) leaves points of `M` fixed; the kernel here is the
    /// Gaussian density itself, and the simulator samples from it directly.
    GaussianShift { sigma: f64, region: Vec<[f64; 2]> },
    /// Finite substochastic matrix; states are `0..n`.
    ExplicitMatrix { matrix: Vec<Vec<f64>>, labels: Vec<String> },
    /// Density tabulated on a uniform `k × k` lattice over `domain × domain`
    /// (Lebesgue units), bilinearly interpolated.
    Tabulated { values: Vec<Vec<f64>> },
}

impl DensityFamily {
    pub fn tag(&self) -> &'static str {
        match self {
            DensityFamily::AffineUniform { .. } => "affine_uniform",
            DensityFamily::CubicUniform { .. } => "cubic_uniform",
            DensityFamily::GaussianShift { .. } => "gaussian_shift",
            DensityFamily::ExplicitMatrix { .. } => "explicit_matrix",
            DensityFamily::Tabulated { .. } => "tabulated",
        }
    }

    pub fn is_finite_chain(&self) -> bool {
        matches!(self, DensityFamily::ExplicitMatrix { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub name: Option<String>,
    pub domain: Domain,
    pub measure: ReferenceMeasure,
    pub family: DensityFamily,
    pub grid_size: usize,
    pub quadrature: Quadrature,
}

impl KernelSpec {
    pub fn new(domain: Domain, family: DensityFamily, grid_size: usize) -> Self {
        KernelSpec {
            name: None,
            domain,
            measure: ReferenceMeasure::Lebesgue,
            family,
            grid_size,
            quadrature: Quadrature::Trapezoid,
        }
    }

    /// Finite chain from a row-major matrix; labels default to `s0, s1, ...`.
    pub fn explicit(matrix: Vec<Vec<f64>>) -> Self {
        let n = matrix.len();
        let labels = (0..n).map(|i| format!("s{i}")).collect();
        KernelSpec {
            name: None,
            domain: Domain::new(0.0, n.saturating_sub(1).max(1) as f64),
            measure: ReferenceMeasure::Lebesgue,
            family: DensityFamily::ExplicitMatrix { matrix, labels },
            grid_size: n,
            quadrature: Quadrature::Trapezoid,
        }
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = Some(name.to_string());
        self
    }

    pub fn with_grid_size(mut self, n: usize) -> Self {
        if !self.family.is_finite_chain() {
            self.grid_size = n;
        }
        self
    }

    pub fn with_quadrature(mut self, q: Quadrature) -> Self {
        self.quadrature = q;
        self
    }

    pub fn with_measure(mut self, m: ReferenceMeasure) -> Self {
        self.measure = m;
        self
    }

    /// Checks the type invariants that do not need a grid.
    pub fn validate(&self) -> Result<(), KernelError> {
        let Domain { lower, upper } = self.domain;
        if !(lower.is_finite() && upper.is_finite()) || lower >= upper {
            return Err(KernelError::InvalidDomain { lower, upper });
        }
        if let ReferenceMeasure::LebesgueScaled(c) = self.measure {
            if !(c.is_finite() && c > 0.0) {
                return Err(KernelError::InvalidParameter(format!(
                    "lebesgue_scaled factor must be positive, got {c}"
                )));
            }
        }
        match &self.family {
            DensityFamily::AffineUniform { a, b, noise_halfwidth } => {
                positive("noise_halfwidth", *noise_halfwidth)?;
                finite("a", *a)?;
                finite("b", *b)?;
            }
            DensityFamily::CubicUniform { noise_halfwidth } => {
                positive("noise_halfwidth", *noise_halfwidth)?;
            }
            DensityFamily::GaussianShift { sigma, region } => {
                positive("sigma", *sigma)?;
                let mut prev = f64::NEG_INFINITY;
                for &[a, b] in region {
                    if !(a < b) || a < lower || b > upper || a <= prev {
                        return Err(KernelError::InvalidParameter(format!(
                            "region intervals must be increasing, disjoint and inside the domain; got [{a}, {b}]"
                        )));
                    }
                    prev = b;
                }
            }
            DensityFamily::ExplicitMatrix { matrix, labels } => {
                let n = matrix.len();
                if n == 0 || matrix.iter().any(|r| r.len() != n) {
                    return Err(KernelError::InvalidMatrix("matrix must be square and non-empty".into()));
                }
                if !labels.is_empty() && labels.len() != n {
                    return Err(KernelError::InvalidMatrix(format!(
                        "{} labels for {} states",
                        labels.len(),
                        n
                    )));
                }
                for (i, row) in matrix.iter().enumerate() {
                    for (j, &q) in row.iter().enumerate() {
                        if !q.is_finite() {
                            return Err(KernelError::InvalidMatrix(format!("entry ({i},{j}) is not finite")));
                        }
                        if q < 0.0 {
                            return Err(KernelError::NegativeDensity { x: i as f64, y: j as f64, value: q });
                        }
                    }
                    let s: f64 = row.iter().sum();
                    if s > 1.0 + 1e-12 {
                        return Err(KernelError::RowSumExceedsOne { row: i, sum: s });
                    }
                }
            }
            DensityFamily::Tabulated { values } => {
                let k = values.len();
                if k < 2 || values.iter().any(|r| r.len() != k) {
                    return Err(KernelError::InvalidParameter(
                        "tabulated values must be a square table with at least 2x2 entries".into(),
                    ));
                }
                for (i, row) in values.iter().enumerate() {
                    for (j, &v) in row.iter().enumerate() {
                        if !v.is_finite() {
                            return Err(KernelError::InvalidParameter(format!("table entry ({i},{j}) is not finite")));
                        }
                        if v < 0.0 {
                            let h = (upper - lower) / (k - 1) as f64;
                            return Err(KernelError::NegativeDensity {
                                x: lower + i as f64 * h,
                                y: lower + j as f64 * h,
                                value: v,
                            });
                        }
                    }
                }
            }
        }
        if !self.family.is_finite_chain() && self.grid_size < 2 {
            return Err(KernelError::InvalidGridSize(self.grid_size));
        }
        Ok(())
    }

    /// Parses a spec document. Unknown fields are a hard error.
    pub fn from_json_str(text: &str) -> Result<Self, KernelError> {
        let raw: RawSpec = serde_json::from_str(text).map_err(|e| KernelError::Schema(e.to_string()))?;
        raw.into_spec()
    }

    pub fn to_json_value(&self) -> Value {
        let mut obj = serde_json::Map::new();
        if let Some(name) = &self.name {
            obj.insert("name".into(), Value::from(name.clone()));
        }
        let fam = serde_json::to_value(&self.family).expect("family serializes");
        if !self.family.is_finite_chain() {
            obj.insert(
                "domain".into(),
                Value::from(vec![self.domain.lower, self.domain.upper]),
            );
            obj.insert(
                "measure".into(),
                serde_json::to_value(self.measure).expect("measure serializes"),
            );
            obj.insert("grid_size".into(), Value::from(self.grid_size));
            obj.insert(
                "quadrature".into(),
                serde_json::to_value(self.quadrature).expect("quadrature serializes"),
            );
        }
        obj.insert("family".into(), fam["family"].clone());
        obj.insert("params".into(), fam["params"].clone());
        Value::Object(obj)
    }
}

fn positive(name: &str, v: f64) -> Result<(), KernelError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(KernelError::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<(), KernelError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(KernelError::InvalidParameter(format!("{name} must be finite")))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    domain: Option<[f64; 2]>,
    #[serde(default)]
    measure: Option<ReferenceMeasure>,
    family: String,
    params: Value,
    #[serde(default)]
    grid_size: Option<usize>,
    #[serde(default)]
    quadrature: Option<Quadrature>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AffineParams {
    a: f64,
    b: f64,
    noise_halfwidth: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CubicParams {
    noise_halfwidth: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GaussianParams {
    sigma: f64,
    #[serde(default)]
    region: Option<Vec<[f64; 2]>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixParams {
    matrix: Vec<Vec<f64>>,
    #[serde(default)]
    labels: Option<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TableParams {
    values: Vec<Vec<f64>>,
}

fn params<T: serde::de::DeserializeOwned>(family: &str, v: Value) -> Result<T, KernelError> {
    serde_json::from_value(v).map_err(|e| KernelError::Schema(format!("params for {family}: {e}")))
}

impl RawSpec {
    fn into_spec(self) -> Result<KernelSpec, KernelError> {
        let fam = self.family.as_str();
        let spec = if fam == "explicit_matrix" {
            let p: MatrixParams = params(fam, self.params)?;
            let n = p.matrix.len();
            let labels = p.labels.unwrap_or_else(|| (0..n).map(|i| format!("s{i}")).collect());
            if let Some(g) = self.grid_size {
                if g != n {
                    return Err(KernelError::Schema(format!(
                        "grid_size {g} does not match the {n}-state matrix"
                    )));
                }
            }
            let mut spec = KernelSpec::explicit(p.matrix);
            spec.family = DensityFamily::ExplicitMatrix {
                matrix: match spec.family {
                    DensityFamily::ExplicitMatrix { matrix, .. } => matrix,
                    _ => unreachable!(),
                },
                labels,
            };
            spec
        } else {
            let [lower, upper] = self
                .domain
                .ok_or_else(|| KernelError::Schema(format!("family {fam} requires a domain")))?;
            let grid_size = self
                .grid_size
                .ok_or_else(|| KernelError::Schema(format!("family {fam} requires grid_size")))?;
            let family = match fam {
                "affine_uniform" => {
                    let p: AffineParams = params(fam, self.params)?;
                    DensityFamily::AffineUniform { a: p.a, b: p.b, noise_halfwidth: p.noise_halfwidth }
                }
                "cubic_uniform" => {
                    let p: CubicParams = params(fam, self.params)?;
                    DensityFamily::CubicUniform { noise_halfwidth: p.noise_halfwidth }
                }
                "gaussian_shift" => {
                    let p: GaussianParams = params(fam, self.params)?;
                    DensityFamily::GaussianShift {
                        sigma: p.sigma,
                        region: p.region.unwrap_or_else(|| vec![[lower, upper]]),
                    }
                }
                "tabulated" => {
                    let p: TableParams = params(fam, self.params)?;
                    DensityFamily::Tabulated { values: p.values }
                }
                other => return Err(KernelError::Schema(format!("unknown family {other:?}"))),
            };
            KernelSpec {
                name: None,
                domain: Domain::new(lower, upper),
                measure: self.measure.unwrap_or_default(),
                family,
                grid_size,
                quadrature: self.quadrature.unwrap_or_default(),
            }
        };
        let spec = KernelSpec { name: self.name, ..spec };
        spec.validate()?;
        Ok(spec)
    }
}
