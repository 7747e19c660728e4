use serde::Serialize;
use statrs::function::erf::erfc_inv;

use crate::kernel::{density, survival_mass, DensityFamily, KernelSpec};

/// Outcome of one transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "state", rename_all = "snake_case")]
pub enum Step {
    Moved(f64),
    Absorbed,
}

impl Step {
    pub fn state(self) -> Option<f64> {
        match self {
            Step::Moved(y) => Some(y),
            Step::Absorbed => None,
        }
    }
}

/// Sub-bins per lattice cell when inverting a tabulated row.
const TABULATED_BINS_PER_CELL: usize = 64;

/// Precomputed per-kernel sampling data. One uniform per step.
#[derive(Debug, Clone)]
pub struct Sampler {
    lower: f64,
    upper: f64,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    /// `y = a x^p + b + ω`, `ω` uniform on `[-w, w]`, `p ∈ {1, 3}`.
    Window { a: f64, b: f64, cubic: bool, w: f64 },
    Gaussian { sigma: f64, region: Vec<[f64; 2]> },
    /// Row CDFs laid out as `[q0, q0+q1, ..., row_sum]`.
    Finite { cdf: Vec<Vec<f64>> },
    Tabulated { spec: KernelSpec },
}

impl Sampler {
    pub fn new(spec: &KernelSpec) -> Self {
        let kind = match &spec.family {
            DensityFamily::AffineUniform { a, b, noise_halfwidth } => {
                Kind::Window { a: *a, b: *b, cubic: false, w: *noise_halfwidth }
            }
            DensityFamily::CubicUniform { noise_halfwidth } => {
                Kind::Window { a: 1.0, b: 0.0, cubic: true, w: *noise_halfwidth }
            }
            DensityFamily::GaussianShift { sigma, region } => Kind::Gaussian { sigma: *sigma, region: region.clone() },
            DensityFamily::ExplicitMatrix { matrix, .. } => Kind::Finite {
                cdf: matrix
                    .iter()
                    .map(|row| {
                        row.iter()
                            .scan(0.0, |acc, q| {
                                *acc += q;
                                Some(*acc)
                            })
                            .collect()
                    })
                    .collect(),
            },
            DensityFamily::Tabulated { .. } => Kind::Tabulated { spec: spec.clone() },
        };
        Sampler { lower: spec.domain.lower, upper: spec.domain.upper, kind }
    }

    /// One transition from `x` driven by `u ∈ [0, 1)`.
    pub fn step(&self, x: f64, u: f64) -> Step {
        match &self.kind {
            Kind::Window { a, b, cubic, w } => {
                let base = if *cubic { x * x * x } else { x };
                let y = a * base + b + (2.0 * u - 1.0) * w;
                self.inside(y)
            }
            Kind::Gaussian { sigma, region } => {
                // Φ⁻¹(u) = -√2 erfc⁻¹(2u)
                let z = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u);
                let y = x + sigma * z;
                if y.is_finite() && region.iter().any(|&[a, b]| y >= a && y <= b) {
                    Step::Moved(y)
                } else {
                    Step::Absorbed
                }
            }
            Kind::Finite { cdf } => {
                let row = &cdf[x.round() as usize];
                match row.iter().position(|&c| u < c) {
                    Some(j) => Step::Moved(j as f64),
                    None => Step::Absorbed,
                }
            }
            Kind::Tabulated { spec } => {
                if u >= survival_mass(spec, x) {
                    return Step::Absorbed;
                }
                let DensityFamily::Tabulated { values } = &spec.family else { unreachable!() };
                let bins = TABULATED_BINS_PER_CELL * values.len();
                let h = (self.upper - self.lower) / bins as f64;
                let scale = spec.measure.scale();
                let mut acc = 0.0;
                for k in 0..bins {
                    let y0 = self.lower + k as f64 * h;
                    let p = density(spec, x, y0 + 0.5 * h) * scale * h;
                    if u < acc + p {
                        return Step::Moved(y0 + h * (u - acc) / p);
                    }
                    acc += p;
                }
                Step::Moved(self.upper)
            }
        }
    }

    fn inside(&self, y: f64) -> Step {
        if y >= self.lower && y <= self.upper {
            Step::Moved(y)
        } else {
            Step::Absorbed
        }
    }
}

/// One transition of the kernel in `spec` from `x`, driven by a single
/// uniform `u ∈ [0, 1)`.
///
/// Uniform-noise families apply the random map `x ↦ a x + b + ω` (or
/// `x³ + ω`) with `ω = (2u - 1) w`; the Gaussian family draws
/// `y = x + σ Φ⁻¹(u)` and keeps it only inside the region; finite chains
/// and tabulated densities invert the row CDF, absorbing with probability
/// `1 - P(x, M)`.
pub fn sample_step(spec: &KernelSpec, x: f64, u: f64) -> Step {
    Sampler::new(spec).step(x, u)
}
