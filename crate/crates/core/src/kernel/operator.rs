use num_complex::Complex64;
use serde::Serialize;

use super::density::operator_row;
use super::grid::StateGrid;
use super::spec::{DensityFamily, KernelSpec};
use super::KernelError;
use crate::exec::Execution;

pub const DEFAULT_ESCAPE_TOL: f64 = 1e-12;

/// Grid nodes whose one-step survival mass vanishes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EscapeSet {
    pub indices: Vec<usize>,
    pub tolerance: f64,
    /// ρ-mass of the nodes outside the escape set.
    pub surviving_weight: f64,
}

impl EscapeSet {
    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn has_positive_complement(&self) -> bool {
        self.surviving_weight > 0.0
    }
}

/// Matrix representation of the kernel on a quadrature grid.
///
/// Entry `(i, j)` is `g(node_i, node_j)·w_j`, so `(Pf)_i = Σ_j A_ij f_j` for
/// grid functions and `(Lν)_j = Σ_i ν_i A_ij` for grid measures (vectors of
/// node masses).
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    grid: StateGrid,
    n: usize,
    matrix: Vec<f64>,
    transposed: Vec<f64>,
    row_sums: Vec<f64>,
    escape: EscapeSet,
    labels: Option<Vec<String>>,
    exec: Execution,
}

impl DiscreteOperator {
    /// Wraps a square row-major matrix on an arbitrary grid.
    pub fn from_parts(grid: StateGrid, rows: Vec<Vec<f64>>, exec: Execution) -> Result<Self, KernelError> {
        let n = grid.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(KernelError::InvalidMatrix(format!("expected a {n}x{n} matrix")));
        }
        let mut matrix = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !(v >= 0.0) {
                    return Err(KernelError::NegativeDensity { x: grid.nodes[i], y: grid.nodes[j], value: v });
                }
            }
            matrix.extend_from_slice(row);
        }
        let mut transposed = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                transposed[j * n + i] = matrix[i * n + j];
            }
        }
        let row_sums: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
        let escape = escape_from_row_sums(&row_sums, &grid, DEFAULT_ESCAPE_TOL);
        Ok(DiscreteOperator { grid, n, matrix, transposed, row_sums, escape, labels: None, exec })
    }

    pub fn grid(&self) -> &StateGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn escape(&self) -> &EscapeSet {
        &self.escape
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Built from an explicit matrix (counting measure on states).
    pub fn is_finite_chain(&self) -> bool {
        self.labels.is_some()
    }

    pub fn execution(&self) -> Execution {
        self.exec
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.matrix[i * self.n..(i + 1) * self.n]
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.transposed[j * self.n..(j + 1) * self.n]
    }

    /// Row-major matrix data.
    pub fn matrix_data(&self) -> &[f64] {
        &self.matrix
    }

    /// `P(node_i, M)` estimates.
    pub fn row_sums(&self) -> &[f64] {
        &self.row_sums
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// `(Pf)_i = Σ_j A_ij f_j`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        assert_eq!(f.len(), self.n);
        self.exec.map_range(self.n, |i| dot(self.row(i), f))
    }

    /// `(Lν)_j = Σ_i ν_i A_ij`.
    pub fn apply_adjoint(&self, nu: &[f64]) -> Vec<f64> {
        assert_eq!(nu.len(), self.n);
        self.exec.map_range(self.n, |j| dot(self.column(j), nu))
    }

    pub fn apply_complex(&self, f: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(f.len(), self.n);
        self.exec.map_range(self.n, |i| {
            self.row(i).iter().zip(f).map(|(a, v)| v * a).sum()
        })
    }

    pub fn apply_adjoint_complex(&self, nu: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(nu.len(), self.n);
        self.exec.map_range(self.n, |j| {
            self.column(j).iter().zip(nu).map(|(a, v)| v * a).sum()
        })
    }

    /// Non-escape node indices in increasing order.
    pub fn surviving_nodes(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| !self.escape.contains(i)).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn escape_from_row_sums(row_sums: &[f64], grid: &StateGrid, tol: f64) -> EscapeSet {
    let indices: Vec<usize> = (0..row_sums.len()).filter(|&i| row_sums[i] <= tol).collect();
    let surviving_weight = (0..row_sums.len())
        .filter(|&i| row_sums[i] > tol)
        .map(|i| grid.weights[i])
        .sum();
    EscapeSet { indices, tolerance: tol, surviving_weight }
}

/// Assembles the discretized operator for `spec`.
pub fn build_operator(spec: &KernelSpec) -> Result<DiscreteOperator, KernelError> {
    build_operator_with(spec, Execution::default())
}

pub fn build_operator_with(spec: &KernelSpec, exec: Execution) -> Result<DiscreteOperator, KernelError> {
    spec.validate()?;
    let grid = StateGrid::for_spec(spec);
    let rows = match &spec.family {
        DensityFamily::ExplicitMatrix { matrix, .. } => matrix.clone(),
        _ => exec.map_range(grid.len(), |i| operator_row(spec, &grid, i)),
    };
    let mut op = DiscreteOperator::from_parts(grid, rows, exec)?;
    if let DensityFamily::ExplicitMatrix { labels, .. } = &spec.family {
        op.labels = Some(labels.clone());
    }
    Ok(op)
}

/// Recomputes the escape set at tolerance `tol`.
pub fn detect_escape_set(op: &DiscreteOperator, tol: f64) -> Result<EscapeSet, KernelError> {
    if !(tol > 0.0) {
        return Err(KernelError::InvalidParameter(format!("escape tolerance must be positive, got {tol}")));
    }
    let escape = escape_from_row_sums(op.row_sums(), op.grid(), tol);
    if escape.indices.len() == op.len() {
        return Err(KernelError::AllNodesEscape { nodes: op.len(), tolerance: tol });
    }
    Ok(escape)
}
