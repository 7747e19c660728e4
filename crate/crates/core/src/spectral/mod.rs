//! Peripheral spectrum of the discretized operator: spectral radius, period,
//! biorthogonal eigenpairs, the subdominant radius and Dirac decompositions.

mod dense;

use std::f64::consts::TAU;

pub use num_complex::Complex64;
use serde::Serialize;

use crate::kernel::{check_h2_reachability, DiscreteOperator, ReachabilityReport};
use crate::measure::{mass, pair, pair_complex, sup_norm, sup_norm_complex, tv_norm, tv_norm_complex};
use dense::{dense_eigen, DenseEigen};

pub const DEFAULT_PERIPHERAL_TOL: f64 = 1e-6;
/// Required relative gap between `λ` and the rest of the spectrum.
pub const GAP_FLOOR: f64 = 1e-3;
/// Largest allowed distance of a peripheral argument from an m-th root angle.
pub const ANGLE_TOL: f64 = 1e-3;
/// Residual bound for the Perron pair.
pub const PERRON_RESIDUAL_TOL: f64 = 1e-10;
/// Allowed relative disagreement between the dense and power-iteration radii.
pub const POWER_AGREEMENT_TOL: f64 = 1e-6;
/// Largest dense problem handled.
pub const MAX_DENSE_NODES: usize = 2000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectralError {
    #[error("no decisive peripheral cluster: lambda = {lambda}, next modulus = {next} (gap floor {gap_floor})")]
    NoSpectralGapWithinTol { lambda: f64, next: f64, gap_floor: f64 },
    #[error("power iteration gives {power}, dense eigensolver gives {dense}")]
    NonConvergent { dense: f64, power: f64 },
    #[error("{eigen_count} peripheral eigenvalues but graph period {graph_period:?}")]
    PeriodMismatch { eigen_count: usize, graph_period: Option<usize> },
    #[error("peripheral band of {m} eigenvalues has arguments {arguments:?}, not the {m}-th roots of unity")]
    TolTooLoose { m: usize, arguments: Vec<f64> },
    #[error("eigenvalue {re}+{im}i is defective (left and right vectors are orthogonal)")]
    Defective { re: f64, im: f64 },
    #[error("the non-escape nodes form {components} communicating classes, expected one reaching all")]
    NotIrreducible { components: usize },
    #[error("node {0} is in the escape set")]
    EscapeNode(usize),
    #[error("node {node} out of range for {len} nodes")]
    InvalidNode { node: usize, len: usize },
    #[error("spectral radius is zero")]
    ZeroSpectralRadius,
    #[error("{nodes} nodes exceed the dense eigensolver limit of {limit}")]
    TooLarge { nodes: usize, limit: usize },
    #[error("Perron pair residual {residual} exceeds {tol}")]
    PerronResidual { residual: f64, tol: f64 },
    #[error("eigensolver failed: {0}")]
    Eigensolver(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl SpectralError {
    pub fn name(&self) -> &'static str {
        match self {
            SpectralError::NoSpectralGapWithinTol { .. } => "NoSpectralGapWithinTol",
            SpectralError::NonConvergent { .. } => "NonConvergent",
            SpectralError::PeriodMismatch { .. } => "PeriodMismatch",
            SpectralError::TolTooLoose { .. } => "TolTooLoose",
            SpectralError::Defective { .. } => "Defective",
            SpectralError::NotIrreducible { .. } => "NotIrreducible",
            SpectralError::EscapeNode(_) => "EscapeNode",
            SpectralError::InvalidNode { .. } => "InvalidNode",
            SpectralError::ZeroSpectralRadius => "ZeroSpectralRadius",
            SpectralError::TooLarge { .. } => "TooLarge",
            SpectralError::PerronResidual { .. } => "PerronResidual",
            SpectralError::Eigensolver(_) => "Eigensolver",
            SpectralError::InvalidParameter(_) => "InvalidParameter",
        }
    }
}

/// Leading eigenvalue with its nonnegative right eigenfunction and
/// eigenmeasure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerronTriple {
    pub lambda: f64,
    /// Right eigenfunction, max-norm 1.
    pub f0: Vec<f64>,
    /// Left eigenmeasure, mass 1.
    pub mu0: Vec<f64>,
    /// `‖P f0 - λ f0‖∞`.
    pub residual_f: f64,
    /// `‖L μ0 - λ μ0‖_TV`.
    pub residual_mu: f64,
    pub power: PowerEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerEstimate {
    pub lambda: f64,
    /// Matrix applications used.
    pub steps: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residuals {
    /// `‖P f_j - λ e^{2πij/m} f_j‖∞` per pair.
    pub right: Vec<f64>,
    /// `‖L μ_j - λ e^{2πij/m} μ_j‖_TV` per pair.
    pub left: Vec<f64>,
    /// `max_jk |⟨μ_j, f_k⟩ - δ_jk|`.
    pub biorthogonality: f64,
    /// Perron pair residuals at max-norm 1 / mass 1.
    pub perron_f: f64,
    pub perron_mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralData {
    pub lambda: f64,
    #[serde(rename = "m")]
    pub period_m: usize,
    pub subdominant_radius: f64,
    pub gap_floor: f64,
    pub peripheral_tol: f64,
    /// Whole spectrum of the matrix, by decreasing modulus.
    pub eigvals: Vec<Complex64>,
    /// `λ e^{2πij/m}`, j = 0..m.
    pub peripheral_eigvals: Vec<Complex64>,
    #[serde(rename = "f")]
    pub right_eigs: Vec<Vec<Complex64>>,
    #[serde(rename = "mu")]
    pub left_eigs: Vec<Vec<Complex64>>,
    pub residuals: Residuals,
    pub power_lambda: f64,
    pub escape_nodes: Vec<usize>,
    /// Cyclic classes of the transition graph, in cycle order.
    pub graph_classes: Vec<Vec<usize>>,
}

impl SpectralData {
    /// Real right eigenfunction normalized by `⟨μ0, f0⟩ = 1`.
    pub fn f0(&self) -> Vec<f64> {
        self.right_eigs[0].iter().map(|z| z.re).collect()
    }

    /// Quasi-stationary grid measure.
    pub fn mu0(&self) -> Vec<f64> {
        self.left_eigs[0].iter().map(|z| z.re).collect()
    }

    pub fn len(&self) -> usize {
        self.right_eigs[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_escape(&self, node: usize) -> bool {
        self.escape_nodes.binary_search(&node).is_ok()
    }
}

fn check_size(op: &DiscreteOperator) -> Result<(), SpectralError> {
    if op.len() > MAX_DENSE_NODES {
        return Err(SpectralError::TooLarge { nodes: op.len(), limit: MAX_DENSE_NODES });
    }
    Ok(())
}

fn require_irreducible(reach: &ReachabilityReport) -> Result<(), SpectralError> {
    if reach.scc_count != 1 || !reach.all_reach_all {
        return Err(SpectralError::NotIrreducible { components: reach.scc_count });
    }
    Ok(())
}

fn decompose(op: &DiscreteOperator) -> Result<DenseEigen, SpectralError> {
    check_size(op)?;
    dense_eigen(op).map_err(SpectralError::Eigensolver)
}

/// Indices of `values` by decreasing modulus, ties by argument in `[0, 2π)`.
fn modulus_order(values: &[Complex64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[b]
            .norm()
            .total_cmp(&values[a].norm())
            .then(angle(values[a]).total_cmp(&angle(values[b])))
    });
    idx
}

fn angle(z: Complex64) -> f64 {
    let t = z.arg();
    if t < 0.0 {
        t + TAU
    } else {
        t
    }
}

/// Rotates `v` so its largest entry is real positive and returns the real part.
fn real_profile(v: &[Complex64]) -> Vec<f64> {
    let pivot = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or_default();
    if pivot.norm() == 0.0 {
        return vec![0.0; v.len()];
    }
    let rot = pivot.conj() / pivot.norm();
    v.iter().map(|z| (z * rot).re).collect()
}

/// Perron pair from the dense decomposition, polished by one application of
/// `P/λ` (resp. `L/λ`), which also sets escape nodes of `f0` to exact zero.
fn perron(op: &DiscreteOperator, eig: &DenseEigen, k: usize, period: usize) -> Result<PerronTriple, SpectralError> {
    let lambda = eig.values[k].re;
    if !(lambda > 0.0) {
        return Err(SpectralError::ZeroSpectralRadius);
    }
    let f = real_profile(&eig.right[k]);
    let mut f: Vec<f64> = op.apply(&f).iter().map(|v| (v / lambda).max(0.0)).collect();
    let fmax = sup_norm(&f);
    f.iter_mut().for_each(|v| *v /= fmax);

    let mu = real_profile(&eig.left[k]);
    let mut mu: Vec<f64> = op.apply_adjoint(&mu).iter().map(|v| (v / lambda).max(0.0)).collect();
    let total = mass(&mu);
    mu.iter_mut().for_each(|v| *v /= total);

    let pf = op.apply(&f);
    let residual_f = pf.iter().zip(&f).map(|(a, b)| (a - lambda * b).abs()).fold(0.0, f64::max);
    let lm = op.apply_adjoint(&mu);
    let residual_mu = tv_norm(&lm.iter().zip(&mu).map(|(a, b)| a - lambda * b).collect::<Vec<_>>());
    let worst = residual_f.max(residual_mu / lambda);
    if worst > PERRON_RESIDUAL_TOL {
        return Err(SpectralError::PerronResidual { residual: worst, tol: PERRON_RESIDUAL_TOL });
    }

    let power = power_radius(op, period);
    if !power.converged || (power.lambda - lambda).abs() > POWER_AGREEMENT_TOL * lambda {
        return Err(SpectralError::NonConvergent { dense: lambda, power: power.lambda });
    }
    Ok(PerronTriple { lambda, f0: f, mu0: mu, residual_f, residual_mu, power })
}

/// Spectral radius with its Perron eigenfunction and eigenmeasure.
///
/// Requires a single communicating class on the non-escape nodes. The dense
/// result is cross-checked by power iteration on `P^p`, `p` the graph period.
pub fn spectral_radius(op: &DiscreteOperator) -> Result<PerronTriple, SpectralError> {
    let reach = check_h2_reachability(op);
    require_irreducible(&reach)?;
    let period = reach.graph_period.unwrap_or(1);
    let eig = decompose(op)?;
    let order = modulus_order(&eig.values);
    let lambda = eig.values[order[0]].norm();
    if lambda == 0.0 {
        return Err(SpectralError::ZeroSpectralRadius);
    }
    let k = order
        .iter()
        .copied()
        .take_while(|&i| eig.values[i].norm() >= lambda * (1.0 - DEFAULT_PERIPHERAL_TOL))
        .find(|&i| angle(eig.values[i]).min(TAU - angle(eig.values[i])) <= ANGLE_TOL)
        .ok_or(SpectralError::NoSpectralGapWithinTol { lambda, next: lambda, gap_floor: GAP_FLOOR })?;
    perron(op, &eig, k, period)
}

/// Radius estimate `(‖P^{k(t+1)} 1‖∞ / ‖P^{kt} 1‖∞)^{1/k}` iterated to a
/// fixed point, with `k` the block length (a multiple of the period).
pub fn power_radius(op: &DiscreteOperator, block: usize) -> PowerEstimate {
    const MAX_STEPS: usize = 20_000;
    let k = block.max(1);
    let mut v = vec![1.0; op.len()];
    let mut est = f64::NAN;
    let mut steps = 0;
    let mut stable = 0;
    while steps < MAX_STEPS {
        let mut w = v.clone();
        for _ in 0..k {
            w = op.apply(&w);
        }
        steps += k;
        let norm = sup_norm(&w);
        if norm == 0.0 {
            return PowerEstimate { lambda: 0.0, steps, converged: true };
        }
        let next = norm.powf(1.0 / k as f64);
        w.iter_mut().for_each(|x| *x /= norm);
        v = w;
        if (next - est).abs() <= 1e-14 * next {
            stable += 1;
            if stable >= 3 {
                return PowerEstimate { lambda: next, steps, converged: true };
            }
        } else {
            stable = 0;
        }
        est = next;
    }
    PowerEstimate { lambda: est, steps, converged: false }
}

/// `‖Pⁿ 1‖∞^{1/n}`, accumulated in logarithms.
pub fn power_norm_root(op: &DiscreteOperator, n: usize) -> f64 {
    let mut v = vec![1.0; op.len()];
    let mut log_norm = 0.0;
    for _ in 0..n {
        v = op.apply(&v);
        let s = sup_norm(&v);
        if s == 0.0 {
            return 0.0;
        }
        log_norm += s.ln();
        v.iter_mut().for_each(|x| *x /= s);
    }
    (log_norm / n as f64).exp()
}

/// Peripheral eigenvalues and biorthogonal eigenpairs.
///
/// The period is the number of eigenvalues with modulus at least
/// `λ(1 - peripheral_tol)`; it must match the period of the transition graph
/// and the peripheral arguments must be the m-th roots of unity.
pub fn peripheral_spectrum(op: &DiscreteOperator, peripheral_tol: f64) -> Result<SpectralData, SpectralError> {
    if !(peripheral_tol > 0.0 && peripheral_tol < 1.0) {
        return Err(SpectralError::InvalidParameter(format!(
            "peripheral_tol must lie in (0, 1), got {peripheral_tol}"
        )));
    }
    let eig = decompose(op)?;
    let order = modulus_order(&eig.values);
    let lambda_mod = eig.values[order[0]].norm();
    if lambda_mod == 0.0 {
        return Err(SpectralError::ZeroSpectralRadius);
    }
    let band: Vec<usize> = order
        .iter()
        .copied()
        .take_while(|&i| eig.values[i].norm() >= lambda_mod * (1.0 - peripheral_tol))
        .collect();
    let m = band.len();

    // slot j of each band member; must cover 0..m exactly once
    let mut slot = vec![usize::MAX; m];
    let arguments: Vec<f64> = band.iter().map(|&i| angle(eig.values[i])).collect();
    for (&i, &theta) in band.iter().zip(&arguments) {
        let j = ((theta * m as f64 / TAU).round() as usize) % m;
        let target = TAU * j as f64 / m as f64;
        let dev = (theta - target).abs().min(TAU - (theta - target).abs());
        if dev > ANGLE_TOL || slot[j] != usize::MAX {
            return Err(SpectralError::TolTooLoose { m, arguments });
        }
        slot[j] = i;
    }

    let reach = check_h2_reachability(op);
    require_irreducible(&reach)?;
    if reach.graph_period != Some(m) {
        return Err(SpectralError::PeriodMismatch { eigen_count: m, graph_period: reach.graph_period });
    }

    let subdominant_radius = order.get(m).map_or(0.0, |&i| eig.values[i].norm());
    if subdominant_radius >= lambda_mod * (1.0 - GAP_FLOOR) {
        return Err(SpectralError::NoSpectralGapWithinTol {
            lambda: lambda_mod,
            next: subdominant_radius,
            gap_floor: GAP_FLOOR,
        });
    }

    for &i in &band {
        let (u, v) = (&eig.left[i], &eig.right[i]);
        let norm = |x: &[Complex64]| x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let cos = pair_complex(u, v).norm() / (norm(u) * norm(v));
        if !(cos > 1e-8) {
            return Err(SpectralError::Defective { re: eig.values[i].re, im: eig.values[i].im });
        }
    }

    let triple = perron(op, &eig, slot[0], m)?;
    let lambda = triple.lambda;
    let n = op.len();
    let mu0 = triple.mu0.clone();
    let scale = pair(&mu0, &triple.f0);
    let f0: Vec<f64> = triple.f0.iter().map(|v| v / scale).collect();
    let anchor = (0..n).find(|&i| f0[i] > 0.0).ok_or(SpectralError::ZeroSpectralRadius)?;

    let mut right = vec![Vec::new(); m];
    let mut left = vec![Vec::new(); m];
    right[0] = f0.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    left[0] = mu0.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    for j in 1..=m / 2 {
        let k = slot[j];
        let beta = eig.values[k];
        // one polishing step, as for the Perron pair
        let f: Vec<Complex64> = op.apply_complex(&eig.right[k]).iter().map(|z| z / beta).collect();
        let mu: Vec<Complex64> = op.apply_adjoint_complex(&eig.left[k]).iter().map(|z| z / beta).collect();
        let pivot = if f[anchor].norm() > 1e-12 * sup_norm_complex(&f) {
            anchor
        } else {
            (0..n).max_by(|&a, &b| f[a].norm().total_cmp(&f[b].norm())).unwrap()
        };
        let c = Complex64::new(f0[pivot], 0.0) / f[pivot];
        let f: Vec<Complex64> = f.iter().map(|z| z * c).collect();
        let d = pair_complex(&mu, &f);
        let mu: Vec<Complex64> = mu.iter().map(|z| z / d).collect();
        if m - j != j {
            right[m - j] = f.iter().map(|z| z.conj()).collect();
            left[m - j] = mu.iter().map(|z| z.conj()).collect();
        }
        right[j] = f;
        left[j] = mu;
    }

    let peripheral_eigvals: Vec<Complex64> =
        (0..m).map(|j| Complex64::from_polar(lambda, TAU * j as f64 / m as f64)).collect();
    let mut res_right = Vec::with_capacity(m);
    let mut res_left = Vec::with_capacity(m);
    for j in 0..m {
        let b = peripheral_eigvals[j];
        let pf = op.apply_complex(&right[j]);
        res_right.push(pf.iter().zip(&right[j]).map(|(x, y)| (x - b * y).norm()).fold(0.0, f64::max));
        let lm = op.apply_adjoint_complex(&left[j]);
        res_left.push(lm.iter().zip(&left[j]).map(|(x, y)| (x - b * y).norm()).sum());
    }
    let mut biorthogonality: f64 = 0.0;
    for j in 0..m {
        for k in 0..m {
            let target = if j == k { 1.0 } else { 0.0 };
            biorthogonality = biorthogonality.max((pair_complex(&left[j], &right[k]) - target).norm());
        }
    }

    Ok(SpectralData {
        lambda,
        period_m: m,
        subdominant_radius,
        gap_floor: GAP_FLOOR,
        peripheral_tol,
        eigvals: order.iter().map(|&i| eig.values[i]).collect(),
        peripheral_eigvals,
        right_eigs: right,
        left_eigs: left,
        residuals: Residuals {
            right: res_right,
            left: res_left,
            biorthogonality,
            perron_f: triple.residual_f,
            perron_mu: triple.residual_mu,
        },
        power_lambda: triple.power.lambda,
        escape_nodes: op.escape().indices.clone(),
        graph_classes: reach.cyclic_classes.unwrap_or_default(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiracDecomposition {
    pub point_index: usize,
    /// `f_j(x)`, j = 0..m.
    pub coefficients: Vec<Complex64>,
    /// `‖ν_x‖_TV` for `ν_x = δ_x - Σ_j f_j(x) μ_j`.
    pub residual_norm: f64,
    /// `1 + Σ_j ‖f_j‖∞ ‖μ_j‖_TV`.
    pub bound: f64,
    /// Largest imaginary part left in `ν_x` after conjugate pairs cancel.
    pub imaginary_residue: f64,
    /// `‖Lⁿ ν_x‖_TV / λⁿ`, n = 0..=horizon.
    pub decay_curve: Vec<f64>,
}

/// Splits `δ_x` into its peripheral part and the remainder `ν_x`, and follows
/// the remainder under `L/λ`.
pub fn dirac_decomposition(
    sd: &SpectralData,
    op: &DiscreteOperator,
    node: usize,
    horizon: usize,
) -> Result<DiracDecomposition, SpectralError> {
    if node >= op.len() {
        return Err(SpectralError::InvalidNode { node, len: op.len() });
    }
    if sd.is_escape(node) || op.escape().contains(node) {
        return Err(SpectralError::EscapeNode(node));
    }
    if horizon == 0 {
        return Err(SpectralError::InvalidParameter("horizon must be at least 1".into()));
    }
    let n = op.len();
    let coefficients: Vec<Complex64> = sd.right_eigs.iter().map(|f| f[node]).collect();
    let mut nu = vec![Complex64::new(0.0, 0.0); n];
    nu[node] = Complex64::new(1.0, 0.0);
    for (c, mu) in coefficients.iter().zip(&sd.left_eigs) {
        for (v, w) in nu.iter_mut().zip(mu) {
            *v -= c * w;
        }
    }
    let imaginary_residue = nu.iter().fold(0.0, |m: f64, z| m.max(z.im.abs()));
    let mut w: Vec<f64> = nu.iter().map(|z| z.re).collect();
    let residual_norm = tv_norm(&w);
    let bound = 1.0
        + sd.right_eigs
            .iter()
            .zip(&sd.left_eigs)
            .map(|(f, mu)| sup_norm_complex(f) * tv_norm_complex(mu))
            .sum::<f64>();
    let mut decay_curve = Vec::with_capacity(horizon + 1);
    decay_curve.push(residual_norm);
    for _ in 0..horizon {
        w = op.apply_adjoint(&w).iter().map(|v| v / sd.lambda).collect();
        decay_curve.push(tv_norm(&w));
    }
    Ok(DiracDecomposition { point_index: node, coefficients, residual_norm, bound, imaginary_residue, decay_curve })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubdominantRate {
    Finite { alpha: f64 },
    /// Nothing below the peripheral circle: remainders vanish after finitely
    /// many steps.
    Infinite,
}

impl SubdominantRate {
    pub fn alpha(&self) -> f64 {
        match *self {
            SubdominantRate::Finite { alpha } => alpha,
            SubdominantRate::Infinite => f64::INFINITY,
        }
    }
}

/// `α = log λ - log(subdominant radius)`.
pub fn subdominant_rate(sd: &SpectralData) -> SubdominantRate {
    if sd.subdominant_radius <= sd.lambda * 1e-12 {
        SubdominantRate::Infinite
    } else {
        SubdominantRate::Finite { alpha: sd.lambda.ln() - sd.subdominant_radius.ln() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{build_operator, KernelSpec};

    fn op(q: Vec<Vec<f64>>) -> DiscreteOperator {
        build_operator(&KernelSpec::explicit(q)).unwrap()
    }

    fn sym2() -> DiscreteOperator {
        op(vec![vec![0.5, 0.25], vec![0.25, 0.5]])
    }

    #[test]
    fn symmetric_two_state() {
        let t = spectral_radius(&sym2()).unwrap();
        assert!((t.lambda - 0.75).abs() < 1e-15);
        assert!((t.f0[0] - 1.0).abs() < 1e-15 && (t.f0[1] - 1.0).abs() < 1e-15);
        assert!((t.mu0[0] - 0.5).abs() < 1e-15);
        let sd = peripheral_spectrum(&sym2(), DEFAULT_PERIPHERAL_TOL).unwrap();
        assert_eq!(sd.period_m, 1);
        assert!((sd.subdominant_radius - 0.25).abs() < 1e-15);
        assert!((subdominant_rate(&sd).alpha() - 3f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn two_cycle() {
        let o = op(vec![vec![0.0, 0.6], vec![0.4, 0.0]]);
        let t = spectral_radius(&o).unwrap();
        assert!((t.lambda - 0.24f64.sqrt()).abs() < 1e-15);
        let sd = peripheral_spectrum(&o, DEFAULT_PERIPHERAL_TOL).unwrap();
        assert_eq!(sd.period_m, 2);
        assert!((sd.peripheral_eigvals[1].re + 0.24f64.sqrt()).abs() < 1e-15);
        assert!(sd.residuals.biorthogonality < 1e-12);
        assert_eq!(subdominant_rate(&sd), SubdominantRate::Infinite);
    }

    #[test]
    fn defective_matrix_is_refused() {
        let o = op(vec![vec![0.5, 0.25], vec![0.0, 0.5]]);
        let err = peripheral_spectrum(&o, DEFAULT_PERIPHERAL_TOL).unwrap_err();
        assert!(matches!(err, SpectralError::TolTooLoose { m: 2, .. }), "{err:?}");
    }

    #[test]
    fn reducible_chain_is_refused() {
        let o = op(vec![vec![0.5, 0.0], vec![0.0, 0.5]]);
        assert!(matches!(spectral_radius(&o), Err(SpectralError::NotIrreducible { components: 2 })));
    }

    #[test]
    fn two_by_two_dirac_remainder() {
        let o = sym2();
        let sd = peripheral_spectrum(&o, DEFAULT_PERIPHERAL_TOL).unwrap();
        let d = dirac_decomposition(&sd, &o, 0, 10).unwrap();
        // δ0 - μ0 = (1/2, -1/2), an eigenmeasure for 1/4
        assert!((d.coefficients[0].re - 1.0).abs() < 1e-14);
        assert!((d.residual_norm - 1.0).abs() < 1e-14);
        for (n, v) in d.decay_curve.iter().enumerate() {
            assert!((v - 3f64.powi(-(n as i32))).abs() < 1e-13, "n = {n}");
        }
        assert!(d.residual_norm <= d.bound);
    }

    #[test]
    fn power_estimates() {
        let o = op(vec![vec![0.4, 0.3, 0.0], vec![0.2, 0.4, 0.2], vec![0.0, 0.3, 0.4]]);
        let p = power_radius(&o, 1);
        assert!(p.converged);
        assert!((p.lambda - (0.4 + 0.12f64.sqrt())).abs() < 1e-13);
        // the plain n-th root carries a (1/n)·log(f0 ratio) bias
        let naive = power_norm_root(&o, 200);
        assert!((naive - p.lambda).abs() < 1e-3);
    }
}
