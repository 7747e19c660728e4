use serde::Serialize;

use super::spec::{DensityFamily, KernelSpec, Quadrature};

/// Quadrature nodes and weights for the reference measure on `M`.
///
/// `cells[i]` is the piece of `M` attributed to node `i`: the dual cell
/// (midpoints between neighbours, clipped to the interval) for trapezoid
/// grids, the Ulam cell otherwise. Cells tile `M`, so `weights[i]` is
/// `ρ(cells[i])`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateGrid {
    pub lower: f64,
    pub upper: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub cells: Vec<(f64, f64)>,
}

impl StateGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Largest spacing between consecutive nodes of the same interval.
    pub fn step(&self) -> f64 {
        self.cells
            .iter()
            .map(|(a, b)| b - a)
            .fold(0.0, f64::max)
    }

    /// Index of the cell containing `x`, if any.
    pub fn locate(&self, x: f64) -> Option<usize> {
        if !(x >= self.lower && x <= self.upper) {
            return None;
        }
        let idx = self.cells.partition_point(|&(_, b)| b < x);
        if idx < self.cells.len() && self.cells[idx].0 <= x {
            Some(idx)
        } else {
            None
        }
    }

    /// Index of the node closest to `x`.
    pub fn nearest_node(&self, x: f64) -> usize {
        let idx = self.nodes.partition_point(|&n| n < x);
        if idx == 0 {
            0
        } else if idx >= self.nodes.len() {
            self.nodes.len() - 1
        } else if (x - self.nodes[idx - 1]) <= (self.nodes[idx] - x) {
            idx - 1
        } else {
            idx
        }
    }

    /// Trapezoid grid on `[a, b]` with `n ≥ 2` equally spaced nodes.
    pub fn trapezoid(a: f64, b: f64, n: usize, scale: f64) -> StateGrid {
        let mut g = StateGrid::empty(a, b);
        g.push_trapezoid(a, b, n, scale);
        g
    }

    /// Ulam grid on `[a, b]` with `n` equal cells, nodes at cell centres.
    pub fn ulam(a: f64, b: f64, n: usize, scale: f64) -> StateGrid {
        let mut g = StateGrid::empty(a, b);
        g.push_ulam(a, b, n, scale);
        g
    }

    /// Finite state set `{0, .., n-1}` with counting measure.
    pub fn finite(n: usize) -> StateGrid {
        StateGrid {
            lower: 0.0,
            upper: n.saturating_sub(1) as f64,
            nodes: (0..n).map(|i| i as f64).collect(),
            weights: vec![1.0; n],
            cells: (0..n).map(|i| (i as f64 - 0.5, i as f64 + 0.5)).collect(),
        }
    }

    pub fn for_spec(spec: &KernelSpec) -> StateGrid {
        let scale = spec.measure.scale();
        let (a, b) = (spec.domain.lower, spec.domain.upper);
        match &spec.family {
            DensityFamily::ExplicitMatrix { matrix, .. } => StateGrid::finite(matrix.len()),
            DensityFamily::GaussianShift { region, .. } if !region.is_empty() => {
                let mut g = StateGrid::empty(a, b);
                let counts = split_counts(region, spec.grid_size, spec.quadrature);
                for (&[lo, hi], n) in region.iter().zip(counts) {
                    match spec.quadrature {
                        Quadrature::Trapezoid => g.push_trapezoid(lo, hi, n, scale),
                        Quadrature::Ulam => g.push_ulam(lo, hi, n, scale),
                    }
                }
                g
            }
            _ => match spec.quadrature {
                Quadrature::Trapezoid => StateGrid::trapezoid(a, b, spec.grid_size, scale),
                Quadrature::Ulam => StateGrid::ulam(a, b, spec.grid_size, scale),
            },
        }
    }

    fn empty(lower: f64, upper: f64) -> StateGrid {
        StateGrid { lower, upper, nodes: Vec::new(), weights: Vec::new(), cells: Vec::new() }
    }

    fn push_trapezoid(&mut self, a: f64, b: f64, n: usize, scale: f64) {
        let h = (b - a) / (n - 1) as f64;
        for i in 0..n {
            // exact endpoints; interior nodes from the index to avoid drift
            let x = if i == 0 {
                a
            } else if i == n - 1 {
                b
            } else {
                a + i as f64 * h
            };
            let lo = if i == 0 { a } else { x - 0.5 * h };
            let hi = if i == n - 1 { b } else { x + 0.5 * h };
            self.nodes.push(x);
            self.cells.push((lo, hi));
            let w = if i == 0 || i == n - 1 { 0.5 * h } else { h };
            self.weights.push(w * scale);
        }
    }

    fn push_ulam(&mut self, a: f64, b: f64, n: usize, scale: f64) {
        let h = (b - a) / n as f64;
        for i in 0..n {
            let lo = a + i as f64 * h;
            let hi = if i == n - 1 { b } else { a + (i + 1) as f64 * h };
            self.nodes.push(0.5 * (lo + hi));
            self.cells.push((lo, hi));
            self.weights.push(h * scale);
        }
    }
}

/// Splits `total` nodes over the region intervals proportionally to length.
fn split_counts(region: &[[f64; 2]], total: usize, q: Quadrature) -> Vec<usize> {
    let min = match q {
        Quadrature::Trapezoid => 2,
        Quadrature::Ulam => 1,
    };
    let len: f64 = region.iter().map(|r| r[1] - r[0]).sum();
    let mut counts: Vec<usize> = region
        .iter()
        .map(|r| (((r[1] - r[0]) / len) * total as f64).round().max(min as f64) as usize)
        .collect();
    // keep the requested total where rounding allows it
    let assigned: usize = counts.iter().sum();
    if assigned < total {
        counts[0] += total - assigned;
    }
    counts
}
