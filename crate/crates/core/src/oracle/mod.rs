//! Exact dense algebra on small finite chains.
//!
//! Nothing here goes through [`crate::spectral`]: eigenvalues come from
//! nalgebra's real Schur form, eigenvectors from null spaces of `Q - βI`,
//! and left vectors from the inverse of the right eigenbasis. The module is
//! the reference every pipeline number on a finite chain is compared to.

mod fixture;
mod lobo;

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::kernel::{DensityFamily, KernelSpec};

pub use fixture::{Fixture, FIXTURE_CHAINS, FIXTURE_SCHEMA_VERSION};
pub use lobo::{lobo_prediction, lobo_ratio_table, lobo_sum, LoboRow};

pub const MAX_STATES: usize = 50;
/// Largest accepted 2-norm condition number of the unit-column eigenbasis.
pub const CONDITION_LIMIT: f64 = 1e8;
/// Relative modulus band for counting peripheral eigenvalues.
pub const PERIPHERAL_REL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("invalid chain: {0}")]
    InvalidChain(String),
    #[error("chain has {0} states; the oracle handles at most {MAX_STATES}")]
    TooLarge(usize),
    #[error("eigenbasis condition number {condition:e} exceeds {CONDITION_LIMIT:e}")]
    IllConditionedEigenbasis { condition: f64 },
    #[error("non-dying states split into {classes} communicating classes")]
    Reducible { classes: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl OracleError {
    pub fn name(&self) -> &'static str {
        match self {
            OracleError::InvalidChain(_) => "InvalidChain",
            OracleError::TooLarge(_) => "TooLarge",
            OracleError::IllConditionedEigenbasis { .. } => "IllConditionedEigenbasis",
            OracleError::Reducible { .. } => "Reducible",
            OracleError::InvalidArgument(_) => "InvalidArgument",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteChain {
    q: DMatrix<f64>,
    labels: Vec<String>,
}

impl FiniteChain {
    pub fn new(q: Vec<Vec<f64>>) -> Result<Self, OracleError> {
        Self::from_spec(&KernelSpec::explicit(q))
    }

    pub fn from_spec(spec: &KernelSpec) -> Result<Self, OracleError> {
        let DensityFamily::ExplicitMatrix { matrix, labels } = &spec.family else {
            return Err(OracleError::InvalidChain(format!("family {} is not a finite chain", spec.family.tag())));
        };
        spec.validate().map_err(|e| OracleError::InvalidChain(e.to_string()))?;
        let n = matrix.len();
        if n > MAX_STATES {
            return Err(OracleError::TooLarge(n));
        }
        let labels = if labels.is_empty() { (0..n).map(|i| format!("s{i}")).collect() } else { labels.clone() };
        Ok(FiniteChain { q: DMatrix::from_fn(n, n, |i, j| matrix[i][j]), labels })
    }

    pub fn len(&self) -> usize {
        self.q.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.q.nrows() == 0
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.q[(i, j)]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.q.row(i).iter().copied().collect()).collect()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.q.row(i).sum()
    }
}

/// Full eigendecomposition `Q = V diag(β) W` with `W = V⁻¹`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactSpectrum {
    /// Sorted by decreasing modulus; ties by argument in `[0, 2π)`.
    pub values: Vec<Complex64>,
    /// `right[k]` is the column `V e_k`.
    pub right: Vec<Vec<Complex64>>,
    /// `left[k]` is the row `e_k W`, so `⟨left[j], right[k]⟩ = δ_jk`.
    pub left: Vec<Vec<Complex64>>,
    /// Condition number of `V` with unit columns.
    pub condition: f64,
    /// `max_jk |⟨left[j], right[k]⟩ - δ_jk|`.
    pub biorthogonality_error: f64,
    /// `max_k ‖Q v_k - β_k v_k‖∞` over unit-column `v_k`.
    pub residual: f64,
}

fn normalized_arg(z: Complex64) -> f64 {
    let t = z.arg();
    let t = if t < 0.0 { t + TAU } else { t };
    if TAU - t < 1e-9 {
        0.0
    } else {
        t
    }
}

/// Orthonormal basis of the `k` smallest right singular directions of `a`,
/// together with the largest of those `k` singular values.
fn null_space(a: DMatrix<Complex64>, k: usize) -> (Vec<Vec<Complex64>>, f64) {
    let n = a.ncols();
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]));
    let worst = order[..k].iter().map(|&i| svd.singular_values[i]).fold(0.0, f64::max);
    let basis = order[..k].iter().map(|&i| (0..n).map(|c| v_t[(i, c)].conj()).collect()).collect();
    (basis, worst)
}

pub fn exact_spectrum(chain: &FiniteChain) -> Result<ExactSpectrum, OracleError> {
    let n = chain.len();
    let scale = chain.q.norm().max(f64::MIN_POSITIVE);
    let mut values: Vec<Complex64> = chain.q.complex_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| {
        let (ma, mb) = (a.norm(), b.norm());
        if (ma - mb).abs() <= 1e-9 * scale {
            normalized_arg(*a).total_cmp(&normalized_arg(*b))
        } else {
            mb.total_cmp(&ma)
        }
    });

    // clusters of numerically equal eigenvalues share one null space
    let qc: DMatrix<Complex64> = chain.q.map(|v| Complex64::new(v, 0.0));
    let cluster_tol = 1e-7 * scale;
    let mut used = vec![false; n];
    let mut right = vec![Vec::new(); n];
    for i in 0..n {
        if used[i] {
            continue;
        }
        let members: Vec<usize> = (i..n).filter(|&j| !used[j] && (values[j] - values[i]).norm() <= cluster_tol).collect();
        let centre = members.iter().map(|&j| values[j]).sum::<Complex64>() / members.len() as f64;
        let shifted = &qc - DMatrix::<Complex64>::identity(n, n) * centre;
        let (basis, worst) = null_space(shifted, members.len());
        if worst > 1e-8 * scale {
            return Err(OracleError::IllConditionedEigenbasis { condition: f64::INFINITY });
        }
        for (slot, v) in members.iter().zip(basis) {
            used[*slot] = true;
            right[*slot] = v;
        }
    }
    // fix the phase so the largest entry is real and positive
    for v in &mut right {
        let pivot = *v.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).expect("non-empty");
        let phase = pivot.conj() / pivot.norm();
        v.iter_mut().for_each(|z| *z *= phase);
    }

    let vmat = DMatrix::<Complex64>::from_fn(n, n, |r, c| right[c][r]);
    let sv = vmat.clone().singular_values();
    let condition = sv.max() / sv.min();
    if !(condition < CONDITION_LIMIT) {
        return Err(OracleError::IllConditionedEigenbasis { condition });
    }
    let winv = vmat.clone().try_inverse().ok_or(OracleError::IllConditionedEigenbasis { condition })?;
    let left: Vec<Vec<Complex64>> = (0..n).map(|k| winv.row(k).iter().copied().collect()).collect();

    let id = &winv * &vmat;
    let biorthogonality_error = (0..n)
        .flat_map(|j| (0..n).map(move |k| (j, k)))
        .map(|(j, k)| (id[(j, k)] - if j == k { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }).norm())
        .fold(0.0, f64::max);
    let mut residual: f64 = 0.0;
    for (k, v) in right.iter().enumerate() {
        let col = nalgebra::DVector::from_column_slice(v);
        let r = &qc * &col - col * values[k];
        residual = residual.max(r.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    Ok(ExactSpectrum { values, right, left, condition, biorthogonality_error, residual })
}

impl ExactSpectrum {
    pub fn lambda(&self) -> f64 {
        self.values.first().map_or(0.0, |v| v.norm())
    }

    /// Number of eigenvalues with `|β| ≥ λ(1 - PERIPHERAL_REL_TOL)`.
    pub fn period(&self) -> usize {
        let lambda = self.lambda();
        self.values.iter().filter(|v| v.norm() >= lambda * (1.0 - PERIPHERAL_REL_TOL)).count()
    }

    /// Largest modulus outside the peripheral band.
    pub fn subdominant(&self) -> f64 {
        self.values.get(self.period()).map_or(0.0, |v| v.norm())
    }
}

/// Oracle quasi-stationary data of an irreducible chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactQsd {
    pub mu: Vec<f64>,
    pub eta: Vec<f64>,
    /// Right Perron vector scaled so that `⟨μ, f⟩ = 1`.
    pub f: Vec<f64>,
    pub lambda: f64,
    pub m: usize,
}

/// Reachability closure (Warshall) over states with positive row mass.
fn communicating_classes(chain: &FiniteChain) -> Vec<Vec<usize>> {
    let n = chain.len();
    let alive: Vec<usize> = (0..n).filter(|&i| chain.row_sum(i) > 0.0).collect();
    let mut reach = vec![vec![false; n]; n];
    for &i in &alive {
        for &j in &alive {
            reach[i][j] = chain.q[(i, j)] > 0.0;
        }
    }
    for &k in &alive {
        for &i in &alive {
            if reach[i][k] {
                for &j in &alive {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut assigned = vec![false; n];
    let mut classes = Vec::new();
    for &i in &alive {
        if assigned[i] {
            continue;
        }
        let class: Vec<usize> = alive.iter().copied().filter(|&j| j == i || (reach[i][j] && reach[j][i])).collect();
        class.iter().for_each(|&j| assigned[j] = true);
        classes.push(class);
    }
    classes
}

pub fn exact_qsd_qed(chain: &FiniteChain) -> Result<ExactQsd, OracleError> {
    let classes = communicating_classes(chain);
    if classes.len() != 1 {
        return Err(OracleError::Reducible { classes: classes.len() });
    }
    let spec = exact_spectrum(chain)?;
    let lambda = spec.lambda();
    if lambda <= 0.0 {
        return Err(OracleError::InvalidChain("spectral radius is zero".into()));
    }
    // Perron root: the eigenvalue closest to +λ
    let k = (0..spec.values.len())
        .min_by(|&a, &b| (spec.values[a] - lambda).norm().total_cmp(&(spec.values[b] - lambda).norm()))
        .expect("non-empty");
    let raw_mu: Vec<f64> = spec.left[k].iter().map(|z| z.re).collect();
    let raw_f: Vec<f64> = spec.right[k].iter().map(|z| z.re).collect();
    let mu_mass: f64 = raw_mu.iter().sum();
    let mu: Vec<f64> = raw_mu.iter().map(|v| (v / mu_mass).max(0.0)).collect();
    let pairing: f64 = mu.iter().zip(&raw_f).map(|(a, b)| a * b).sum();
    let f: Vec<f64> = raw_f.iter().map(|v| (v / pairing).max(0.0)).collect();
    let prod: Vec<f64> = f.iter().zip(&mu).map(|(a, b)| a * b).collect();
    let total: f64 = prod.iter().sum();
    let eta = prod.iter().map(|v| v / total).collect();
    Ok(ExactQsd { mu, eta, f, lambda, m: spec.period() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn two_state_spectra() {
        let s = exact_spectrum(&FiniteChain::new(vec![vec![0.5, 0.25], vec![0.25, 0.5]]).unwrap()).unwrap();
        assert!(close(s.values[0].re, 0.75, 1e-15) && close(s.values[1].re, 0.25, 1e-15));
        assert!(s.biorthogonality_error < 1e-14);

        let s = exact_spectrum(&FiniteChain::new(vec![vec![0.0, 0.6], vec![0.4, 0.0]]).unwrap()).unwrap();
        let r = 0.24f64.sqrt();
        assert!(close(s.values[0].re, r, 1e-15) && close(s.values[1].re, -r, 1e-15));
        assert_eq!(s.period(), 2);
    }

    #[test]
    fn defective_chain_is_refused() {
        let c = FiniteChain::new(vec![vec![0.5, 0.25], vec![0.0, 0.5]]).unwrap();
        assert!(matches!(exact_spectrum(&c), Err(OracleError::IllConditionedEigenbasis { .. })));
    }

    #[test]
    fn repeated_zero_eigenvalue_with_full_eigenspace() {
        let c = FiniteChain::new(vec![vec![0.3, 0.3, 0.3], vec![0.3, 0.3, 0.3], vec![0.3, 0.3, 0.3]]).unwrap();
        let s = exact_spectrum(&c).unwrap();
        assert!(close(s.lambda(), 0.9, 1e-14));
        assert!(s.biorthogonality_error < 1e-12 && s.residual < 1e-14);
    }

    #[test]
    fn darroch_seneta_by_hand() {
        // with s = √0.12: f ∝ (0.3, s, 0.3), μ ∝ (0.2, s, 0.2), η ∝ (0.06, 0.12, 0.06)
        let c = FiniteChain::new(vec![vec![0.4, 0.3, 0.0], vec![0.2, 0.4, 0.2], vec![0.0, 0.3, 0.4]]).unwrap();
        let e = exact_qsd_qed(&c).unwrap();
        let s = 0.12f64.sqrt();
        assert!(close(e.lambda, 0.4 + s, 1e-14));
        assert_eq!(e.m, 1);
        let mu = [0.2 / (0.4 + s), s / (0.4 + s), 0.2 / (0.4 + s)];
        for i in 0..3 {
            assert!(close(e.mu[i], mu[i], 1e-14));
        }
        assert!(close(e.eta[0], 0.25, 1e-14) && close(e.eta[1], 0.5, 1e-14) && close(e.eta[2], 0.25, 1e-14));
    }

    #[test]
    fn two_cycle_qsd() {
        let c = FiniteChain::new(vec![vec![0.0, 0.6], vec![0.4, 0.0]]).unwrap();
        let e = exact_qsd_qed(&c).unwrap();
        // μ Q = λ μ gives μ_0 : μ_1 = √0.4 : √0.6; f ∝ (√0.6, √0.4)
        let (a, b) = (0.4f64.sqrt(), 0.6f64.sqrt());
        assert!(close(e.mu[0], a / (a + b), 1e-14));
        assert!(close(e.f[0] / e.f[1], b / a, 1e-13));
        assert!(close(e.eta[0], 0.5, 1e-14));
        assert_eq!(e.m, 2);
    }

    #[test]
    fn reducible_is_refused() {
        let c = FiniteChain::new(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert_eq!(exact_qsd_qed(&c), Err(OracleError::Reducible { classes: 2 }));
        // a state that dies at once does not count as a class
        let c = FiniteChain::new(vec![vec![0.5, 0.2], vec![0.0, 0.0]]).unwrap();
        assert!(exact_qsd_qed(&c).is_ok());
    }

    #[test]
    fn size_cap() {
        let big = vec![vec![0.01; 51]; 51];
        assert_eq!(FiniteChain::new(big), Err(OracleError::TooLarge(51)));
    }
}
