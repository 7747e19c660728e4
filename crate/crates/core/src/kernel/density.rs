//! Pointwise and cell-integrated evaluation of the transition densities.

use super::grid::StateGrid;
use super::spec::{DensityFamily, KernelSpec, Quadrature};

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Support window `[lo, hi]` and constant Lebesgue density of the uniform-noise
/// families at state `x`.
pub(crate) fn uniform_window(family: &DensityFamily, x: f64) -> Option<(f64, f64, f64)> {
    match *family {
        DensityFamily::AffineUniform { a, b, noise_halfwidth: w } => {
            let c = a * x + b;
            Some((c - w, c + w, 0.5 / w))
        }
        DensityFamily::CubicUniform { noise_halfwidth: w } => {
            let c = x * x * x;
            Some((c - w, c + w, 0.5 / w))
        }
        _ => None,
    }
}

fn gaussian_pdf(z: f64, sigma: f64) -> f64 {
    let u = z / sigma;
    (-0.5 * u * u).exp() / (SQRT_2PI * sigma)
}

fn gaussian_cdf(z: f64, sigma: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / (sigma * std::f64::consts::SQRT_2)))
}

fn in_region(region: &[[f64; 2]], y: f64) -> bool {
    region.iter().any(|&[a, b]| y >= a && y <= b)
}

/// Bilinear interpolation of a tabulated density on the uniform lattice over
/// `[lower, upper]²`. Zero outside the square.
pub(crate) fn tabulated(values: &[Vec<f64>], lower: f64, upper: f64, x: f64, y: f64) -> f64 {
    if !(x >= lower && x <= upper && y >= lower && y <= upper) {
        return 0.0;
    }
    let k = values.len();
    let h = (upper - lower) / (k - 1) as f64;
    let locate = |t: f64| {
        let s = ((t - lower) / h).clamp(0.0, (k - 1) as f64);
        let i = (s.floor() as usize).min(k - 2);
        (i, s - i as f64)
    };
    let (i, fx) = locate(x);
    let (j, fy) = locate(y);
    let v00 = values[i][j];
    let v01 = values[i][j + 1];
    let v10 = values[i + 1][j];
    let v11 = values[i + 1][j + 1];
    (1.0 - fx) * ((1.0 - fy) * v00 + fy * v01) + fx * ((1.0 - fy) * v10 + fy * v11)
}

/// Density `g(x, y) = dP(x, ·)/dρ (y)`.
///
/// Indicator densities take the average of the one-sided limits at a jump;
/// at an endpoint of `M` only the limit from inside `M` counts.
pub fn density(spec: &KernelSpec, x: f64, y: f64) -> f64 {
    let scale = spec.measure.scale();
    let (lower, upper) = (spec.domain.lower, spec.domain.upper);
    match &spec.family {
        DensityFamily::AffineUniform { .. } | DensityFamily::CubicUniform { .. } => {
            let (lo, hi, c) = uniform_window(&spec.family, x).expect("window family");
            let left = y > lower && y > lo && y <= hi;
            let right = y < upper && y >= lo && y < hi;
            let sides = if y <= lower || y >= upper { 1.0 } else { 2.0 };
            c * (left as u8 as f64 + right as u8 as f64) / sides / scale
        }
        DensityFamily::GaussianShift { sigma, region } => {
            if in_region(region, y) {
                gaussian_pdf(y - x, *sigma) / scale
            } else {
                0.0
            }
        }
        DensityFamily::Tabulated { values } => tabulated(values, lower, upper, x, y) / scale,
        DensityFamily::ExplicitMatrix { matrix, .. } => {
            let (i, j) = (x.round() as usize, y.round() as usize);
            matrix.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0.0)
        }
    }
}

/// Exact (or, for tabulated densities, finely integrated) survival mass `P(x, M)`.
pub fn survival_mass(spec: &KernelSpec, x: f64) -> f64 {
    let (lower, upper) = (spec.domain.lower, spec.domain.upper);
    match &spec.family {
        DensityFamily::AffineUniform { .. } | DensityFamily::CubicUniform { .. } => {
            let (lo, hi, c) = uniform_window(&spec.family, x).expect("window family");
            c * (hi.min(upper) - lo.max(lower)).max(0.0)
        }
        DensityFamily::GaussianShift { sigma, region } => region
            .iter()
            .map(|&[a, b]| gaussian_cdf(b - x, *sigma) - gaussian_cdf(a - x, *sigma))
            .sum(),
        DensityFamily::Tabulated { values } => {
            let n = 64 * values.len();
            let h = (upper - lower) / n as f64;
            (0..n)
                .map(|k| tabulated(values, lower, upper, x, lower + (k as f64 + 0.5) * h) * h)
                .sum()
        }
        DensityFamily::ExplicitMatrix { matrix, .. } => matrix
            .get(x.round() as usize)
            .map(|r| r.iter().sum())
            .unwrap_or(0.0),
    }
}

/// Probability mass sent from state `x` into each grid cell under the
/// quadrature rule of `spec`.
///
/// Uniform-noise families use the exact overlap of the support window with
/// each cell; for a jump sitting on a node this is the half-value convention,
/// and row sums equal `P(x, M)` exactly. Smooth families are sampled at the
/// nodes (trapezoid) or integrated over cells (Ulam).
pub(crate) fn cell_masses(spec: &KernelSpec, grid: &StateGrid, x: f64) -> Vec<f64> {
    let scale = spec.measure.scale();
    match &spec.family {
        DensityFamily::AffineUniform { .. } | DensityFamily::CubicUniform { .. } => {
            let (lo, hi, c) = uniform_window(&spec.family, x).expect("window family");
            grid.cells
                .iter()
                .map(|&(a, b)| c * (hi.min(b) - lo.max(a)).max(0.0))
                .collect()
        }
        DensityFamily::GaussianShift { sigma, .. } => match spec.quadrature {
            Quadrature::Trapezoid => grid
                .nodes
                .iter()
                .zip(&grid.weights)
                .map(|(&y, &w)| gaussian_pdf(y - x, *sigma) * w / scale)
                .collect(),
            Quadrature::Ulam => grid
                .cells
                .iter()
                .map(|&(a, b)| gaussian_cdf(b - x, *sigma) - gaussian_cdf(a - x, *sigma))
                .collect(),
        },
        DensityFamily::Tabulated { values } => {
            let (lower, upper) = (spec.domain.lower, spec.domain.upper);
            match spec.quadrature {
                Quadrature::Trapezoid => grid
                    .nodes
                    .iter()
                    .zip(&grid.weights)
                    .map(|(&y, &w)| tabulated(values, lower, upper, x, y) * w / scale)
                    .collect(),
                Quadrature::Ulam => grid
                    .cells
                    .iter()
                    .map(|&(a, b)| {
                        const SUB: usize = 16;
                        let h = (b - a) / SUB as f64;
                        (0..SUB)
                            .map(|k| tabulated(values, lower, upper, x, a + (k as f64 + 0.5) * h) * h)
                            .sum()
                    })
                    .collect(),
            }
        }
        DensityFamily::ExplicitMatrix { matrix, .. } => matrix[x.round() as usize].clone(),
    }
}

/// Number of midpoint samples used to average a row over an Ulam cell.
pub(crate) const ULAM_SUBSAMPLES: usize = 32;

/// Row of the discretized operator for node `i`.
pub(crate) fn operator_row(spec: &KernelSpec, grid: &StateGrid, i: usize) -> Vec<f64> {
    match (spec.quadrature, spec.family.is_finite_chain()) {
        (Quadrature::Ulam, false) => {
            let (a, b) = grid.cells[i];
            let h = (b - a) / ULAM_SUBSAMPLES as f64;
            let mut row = vec![0.0; grid.len()];
            for k in 0..ULAM_SUBSAMPLES {
                let x = a + (k as f64 + 0.5) * h;
                for (r, m) in row.iter_mut().zip(cell_masses(spec, grid, x)) {
                    *r += m / ULAM_SUBSAMPLES as f64;
                }
            }
            row
        }
        _ => cell_masses(spec, grid, grid.nodes[i]),
    }
}
