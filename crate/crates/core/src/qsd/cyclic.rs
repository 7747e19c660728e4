use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use super::QsdError;
use crate::kernel::DiscreteOperator;
use crate::measure::{mass, tv_distance, tv_norm_complex};
use crate::spectral::SpectralData;

/// Angular tolerance when reading a node's class off the phase of `f_1`.
const PHASE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CyclicPartition {
    /// `C_0, ..., C_{m-1}`; mass moves from `C_{i-1}` to `C_i`.
    pub classes: Vec<Vec<usize>>,
    /// `σ(i)`: the class whose measure is proportional to `L ν_i`.
    pub permutation: Vec<usize>,
    /// `ν_i = μ0|C_i / μ0(C_i)`.
    pub class_measures: Vec<Vec<f64>>,
    /// `μ0(C_i)`.
    pub class_masses: Vec<f64>,
    /// `(L ν_i)(M) / λ`, so that `L ν_i = λ c_i ν_{σ(i)}`.
    pub transfer_factors: Vec<f64>,
    /// `max_i TV(L ν_i / (L ν_i)(M), ν_{σ(i)})`.
    pub permutation_error: f64,
    /// Largest distance of a node's `f_1` phase from its class angle.
    pub phase_deviation: f64,
    /// `max_ij |ν_i(C_j) - δ_ij|`.
    pub class_indicator_error: f64,
    /// Nodes where `P(x, C_i) > 0` fails to single out `i = class(x) + 1`.
    pub transition_violations: Vec<usize>,
    /// The classes coincide (as sets) with the cyclic classes of the graph.
    pub matches_graph_classes: bool,
    /// `max_j ‖μ_j - Σ_k e^{-2πikj/m} μ0|C_k‖_TV`.
    pub reconstruction_mu_error: f64,
    /// `max_j ‖f_j - Σ_k e^{2πikj/m} f0·1_{C_k}‖∞`.
    pub reconstruction_f_error: f64,
    /// `max_j ‖μ_j - (1/m) Σ_k e^{-2πikj/m} ν_k‖_TV`; zero only when every
    /// class carries `μ0`-mass `1/m`.
    pub equal_mass_formula_error: f64,
    /// `max_j ‖f_j·μ_j - f0·μ0‖_TV`.
    pub eta_j_spread: f64,
}

/// Nodes allowed in the escape set when the reference measure must not
/// charge it: trapezoid endpoints, which sit on the edge of their own cell.
fn boundary_node(op: &DiscreteOperator, i: usize) -> bool {
    if op.is_finite_chain() {
        return false;
    }
    let g = op.grid();
    g.cells[i].0 == g.nodes[i] || g.cells[i].1 == g.nodes[i]
}

/// Cyclic classes of a periodic kernel from the phase of `f_1`.
///
/// On `C_k`, `f_1 = e^{2πik/m} f0`; each non-escape node is assigned to the
/// nearest root angle, and every structural consequence (disjointness, the
/// cyclic action of `L`, the one-step transition pattern, the
/// reconstruction of all peripheral eigenpairs) is then measured.
pub fn cyclic_components(sd: &SpectralData, op: &DiscreteOperator) -> Result<CyclicPartition, QsdError> {
    let m = sd.period_m;
    if m < 2 {
        return Err(QsdError::NotCyclic(format!("period m = {m}; cyclic classes need m >= 2")));
    }
    let interior: Vec<usize> = sd.escape_nodes.iter().copied().filter(|&i| !boundary_node(op, i)).collect();
    if !interior.is_empty() {
        return Err(QsdError::InteriorEscape(interior));
    }
    let n = op.len();
    let f0 = sd.f0();
    let mu0 = sd.mu0();
    let f1 = &sd.right_eigs[1];

    let mut label = vec![usize::MAX; n];
    let mut overlap = Vec::new();
    let mut phase_deviation: f64 = 0.0;
    for i in 0..n {
        if sd.is_escape(i) {
            continue;
        }
        let theta = {
            let t = f1[i].arg();
            if t < 0.0 {
                t + TAU
            } else {
                t
            }
        };
        let k = ((theta * m as f64 / TAU).round() as usize) % m;
        let target = TAU * k as f64 / m as f64;
        let dev = (theta - target).abs().min(TAU - (theta - target).abs());
        let modulus_gap = (f1[i].norm() - f0[i]).abs() / f0[i];
        phase_deviation = phase_deviation.max(dev);
        if dev > PHASE_TOL || modulus_gap > 1e-6 {
            overlap.push(i);
        }
        label[i] = k;
    }
    if !overlap.is_empty() {
        return Err(QsdError::SupportOverlap(overlap));
    }
    let classes: Vec<Vec<usize>> = (0..m).map(|k| (0..n).filter(|&i| label[i] == k).collect()).collect();
    if let Some(k) = classes.iter().position(|c| c.is_empty()) {
        return Err(QsdError::NotCyclic(format!("class {k} is empty")));
    }

    let restrict = |k: usize| -> Vec<f64> {
        (0..n).map(|i| if label[i] == k { mu0[i] } else { 0.0 }).collect()
    };
    let class_masses: Vec<f64> = (0..m).map(|k| mass(&restrict(k))).collect();
    let class_measures: Vec<Vec<f64>> =
        (0..m).map(|k| restrict(k).iter().map(|v| v / class_masses[k]).collect()).collect();

    let mut class_indicator_error: f64 = 0.0;
    for (i, nu) in class_measures.iter().enumerate() {
        for (j, c) in classes.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            let charge: f64 = c.iter().map(|&x| nu[x]).sum();
            class_indicator_error = class_indicator_error.max((charge - target).abs());
        }
    }

    let mut permutation = Vec::with_capacity(m);
    let mut transfer_factors = Vec::with_capacity(m);
    let mut permutation_error: f64 = 0.0;
    for nu in &class_measures {
        let image = op.apply_adjoint(nu);
        let total = mass(&image);
        transfer_factors.push(total / sd.lambda);
        let shape: Vec<f64> = image.iter().map(|v| v / total).collect();
        let (best, err) = class_measures
            .iter()
            .map(|other| tv_distance(&shape, other))
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("m >= 2");
        permutation.push(best);
        permutation_error = permutation_error.max(err);
    }
    let mut seen = vec![false; m];
    let mut at = 0;
    for _ in 0..m {
        seen[at] = true;
        at = permutation[at];
    }
    if at != 0 || seen.iter().any(|s| !s) {
        return Err(QsdError::NotCyclic(format!("sigma = {permutation:?} is not a single {m}-cycle")));
    }

    let tol = op.escape().tolerance;
    let mut transition_violations = Vec::new();
    for x in 0..n {
        if label[x] == usize::MAX {
            continue;
        }
        let next = (label[x] + 1) % m;
        let row = op.row(x);
        let ok = classes.iter().enumerate().all(|(i, c)| {
            let p: f64 = c.iter().map(|&y| row[y]).sum();
            (p > tol) == (i == next)
        });
        if !ok {
            transition_violations.push(x);
        }
    }

    let mut graph = sd.graph_classes.clone();
    let mut ours = classes.clone();
    graph.iter_mut().for_each(|c| c.sort_unstable());
    graph.sort();
    ours.sort();
    let matches_graph_classes = graph == ours;

    let omega = |p: i64| Complex64::from_polar(1.0, TAU * p as f64 / m as f64);
    let mut reconstruction_mu_error: f64 = 0.0;
    let mut reconstruction_f_error: f64 = 0.0;
    let mut equal_mass_formula_error: f64 = 0.0;
    let mut eta_j_spread: f64 = 0.0;
    let eta0: Vec<f64> = f0.iter().zip(&mu0).map(|(a, b)| a * b).collect();
    for j in 0..m {
        let mut mu_rebuilt = vec![Complex64::new(0.0, 0.0); n];
        let mut mu_equal = vec![Complex64::new(0.0, 0.0); n];
        let mut f_rebuilt = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let k = label[i];
            if k == usize::MAX {
                continue;
            }
            let w = omega(-((k * j) as i64));
            mu_rebuilt[i] = w * mu0[i];
            mu_equal[i] = w * class_measures[k][i] / m as f64;
            f_rebuilt[i] = omega((k * j) as i64) * f0[i];
        }
        let diff = |a: &[Complex64], b: &[Complex64]| -> Vec<Complex64> { a.iter().zip(b).map(|(x, y)| x - y).collect() };
        reconstruction_mu_error = reconstruction_mu_error.max(tv_norm_complex(&diff(&sd.left_eigs[j], &mu_rebuilt)));
        equal_mass_formula_error = equal_mass_formula_error.max(tv_norm_complex(&diff(&sd.left_eigs[j], &mu_equal)));
        reconstruction_f_error = reconstruction_f_error.max(
            sd.right_eigs[j].iter().zip(&f_rebuilt).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max),
        );
        let spread: f64 = (0..n)
            .map(|i| (sd.right_eigs[j][i] * sd.left_eigs[j][i] - eta0[i]).norm())
            .sum();
        eta_j_spread = eta_j_spread.max(spread);
    }

    Ok(CyclicPartition {
        classes,
        permutation,
        class_measures,
        class_masses,
        transfer_factors,
        permutation_error,
        phase_deviation,
        class_indicator_error,
        transition_violations,
        matches_graph_classes,
        reconstruction_mu_error,
        reconstruction_f_error,
        equal_mass_formula_error,
        eta_j_spread,
    })
}
