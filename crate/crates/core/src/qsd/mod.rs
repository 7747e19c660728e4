//! Quasi-stationary and quasi-ergodic measures, conditioned laws, and the
//! convergence of conditioned laws to them.

mod cyclic;
mod rates;

pub use cyclic::{cyclic_components, CyclicPartition};
pub use rates::{
    cesaro_fit, cesaro_fit_from, fit_yaglom_rate, mass_decay_check, DecayReport, RateFit, RateModel,
    TV_NOISE_FLOOR,
};

use serde::Serialize;

use crate::kernel::DiscreteOperator;
use crate::measure::{mass, pair};
use crate::spectral::{SpectralData, SpectralError};

pub use crate::measure::{tv_distance, tv_norm};

/// Tolerance of the fixed-point and survival-rate identities.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Survivor mass below which the unnormalized iteration gives up.
pub const EXTINCTION_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QsdError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("<mu0, f0> = {0} is too small to normalize")]
    DegenerateEigenfunction(f64),
    #[error("survivor mass {mass:e} underflowed at step {step}; use the renormalized iteration")]
    MassExtinct { step: usize, mass: f64 },
    #[error("period m = {0} > 1; use the Cesaro fit")]
    NotAperiodic(usize),
    #[error("period m = 1; the Cesaro fit is for periodic kernels")]
    NotPeriodic,
    #[error("initial measure does not charge the support of f0 (<nu0, f0> = {0})")]
    ZeroOverlap(f64),
    #[error("{0}")]
    NotCyclic(String),
    #[error("phase classes overlap at nodes {0:?}")]
    SupportOverlap(Vec<usize>),
    #[error("escape nodes {0:?} carry reference mass inside M")]
    InteriorEscape(Vec<usize>),
    #[error("sup_x P^n(x, M) stays at 1 for n <= {0}")]
    NeverSubunit(usize),
    #[error("invalid initial measure: {0}")]
    InvalidMeasure(String),
    #[error("{what} identity off by {error:e}")]
    IdentityViolated { what: &'static str, error: f64 },
    #[error("fewer than {needed} usable points above the noise floor")]
    InsufficientData { needed: usize },
}

impl QsdError {
    pub fn name(&self) -> &'static str {
        match self {
            QsdError::Spectral(e) => e.name(),
            QsdError::DegenerateEigenfunction(_) => "DegenerateEigenfunction",
            QsdError::MassExtinct { .. } => "MassExtinct",
            QsdError::NotAperiodic(_) => "NotAperiodic",
            QsdError::NotPeriodic => "NotPeriodic",
            QsdError::ZeroOverlap(_) => "ZeroOverlap",
            QsdError::NotCyclic(_) => "NotCyclic",
            QsdError::SupportOverlap(_) => "SupportOverlap",
            QsdError::InteriorEscape(_) => "InteriorEscape",
            QsdError::NeverSubunit(_) => "NeverSubunit",
            QsdError::InvalidMeasure(_) => "InvalidMeasure",
            QsdError::IdentityViolated { .. } => "IdentityViolated",
            QsdError::InsufficientData { .. } => "InsufficientData",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasiStationary {
    pub mu: Vec<f64>,
    pub lambda: f64,
    /// `TV(Lμ / (Lμ)(M), μ)`.
    pub fixed_point_tv: f64,
    /// `|λ - Σ μ_i P(x_i, M)|`.
    pub survival_identity_error: f64,
}

/// Quasi-stationary measure and survival rate, with both identities checked
/// to [`IDENTITY_TOL`].
pub fn quasi_stationary_measure(sd: &SpectralData, op: &DiscreteOperator) -> Result<QuasiStationary, QsdError> {
    let mu = sd.mu0();
    let image = op.apply_adjoint(&mu);
    let survived = mass(&image);
    let fixed_point_tv = tv_distance(&image.iter().map(|v| v / survived).collect::<Vec<_>>(), &mu);
    let survival_identity_error = (sd.lambda - pair(&mu, op.row_sums())).abs();
    if fixed_point_tv > IDENTITY_TOL {
        return Err(QsdError::IdentityViolated { what: "fixed-point", error: fixed_point_tv });
    }
    if survival_identity_error > IDENTITY_TOL {
        return Err(QsdError::IdentityViolated { what: "survival-rate", error: survival_identity_error });
    }
    Ok(QuasiStationary { mu, lambda: sd.lambda, fixed_point_tv, survival_identity_error })
}

/// `η_i = f0(x_i) μ0_i / ⟨μ0, f0⟩`.
pub fn quasi_ergodic_measure(sd: &SpectralData) -> Result<Vec<f64>, QsdError> {
    let f = sd.f0();
    let mu = sd.mu0();
    let z = pair(&mu, &f);
    if !(z > 1e-14) {
        return Err(QsdError::DegenerateEigenfunction(z));
    }
    Ok(f.iter().zip(&mu).map(|(a, b)| a * b / z).collect())
}

/// `P_ν[X_n ∈ · | τ > n]` on the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionedLaw {
    pub masses: Vec<f64>,
    pub step_n: usize,
    /// `P_ν[τ > n]` (may underflow to zero for long runs; see `log_survival`).
    pub normalization: f64,
    pub log_survival: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IterationMode {
    /// Divide by the survivor mass after every step.
    #[default]
    Renormalized,
    /// Carry the unnormalized measure `Lⁿν` and divide once at the end.
    Raw,
}

pub(crate) fn check_initial(op: &DiscreteOperator, nu0: &[f64]) -> Result<(), QsdError> {
    if nu0.len() != op.len() {
        return Err(QsdError::InvalidMeasure(format!("{} masses for {} nodes", nu0.len(), op.len())));
    }
    if nu0.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(QsdError::InvalidMeasure("masses must be finite and nonnegative".into()));
    }
    let m = mass(nu0);
    if (m - 1.0).abs() > 1e-12 {
        return Err(QsdError::InvalidMeasure(format!("total mass {m} is not 1")));
    }
    Ok(())
}

/// Successive conditioned laws `n = 1, 2, ...` under renormalized iteration.
pub struct ConditionedLaws<'a> {
    op: &'a DiscreteOperator,
    current: Vec<f64>,
    step: usize,
    log_survival: f64,
}

impl<'a> ConditionedLaws<'a> {
    pub fn new(op: &'a DiscreteOperator, nu0: &[f64]) -> Result<Self, QsdError> {
        check_initial(op, nu0)?;
        Ok(ConditionedLaws { op, current: nu0.to_vec(), step: 0, log_survival: 0.0 })
    }
}

impl Iterator for ConditionedLaws<'_> {
    type Item = Result<ConditionedLaw, QsdError>;

    fn next(&mut self) -> Option<Self::Item> {
        let image = self.op.apply_adjoint(&self.current);
        let survived = mass(&image);
        self.step += 1;
        if !(survived > 0.0) {
            return Some(Err(QsdError::MassExtinct { step: self.step, mass: survived }));
        }
        self.log_survival += survived.ln();
        self.current = image.iter().map(|v| v / survived).collect();
        Some(Ok(ConditionedLaw {
            masses: self.current.clone(),
            step_n: self.step,
            normalization: self.log_survival.exp(),
            log_survival: self.log_survival,
        }))
    }
}

pub fn yaglom_iterate(op: &DiscreteOperator, nu0: &[f64], n: usize) -> Result<ConditionedLaw, QsdError> {
    yaglom_iterate_with(op, nu0, n, IterationMode::Renormalized)
}

pub fn yaglom_iterate_with(
    op: &DiscreteOperator,
    nu0: &[f64],
    n: usize,
    mode: IterationMode,
) -> Result<ConditionedLaw, QsdError> {
    check_initial(op, nu0)?;
    if n == 0 {
        return Ok(ConditionedLaw { masses: nu0.to_vec(), step_n: 0, normalization: 1.0, log_survival: 0.0 });
    }
    match mode {
        IterationMode::Renormalized => ConditionedLaws::new(op, nu0)?.nth(n - 1).expect("unbounded iterator"),
        IterationMode::Raw => {
            let mut v = nu0.to_vec();
            for step in 1..=n {
                v = op.apply_adjoint(&v);
                let m = mass(&v);
                if !(m >= EXTINCTION_FLOOR) {
                    return Err(QsdError::MassExtinct { step, mass: m });
                }
            }
            let m = mass(&v);
            Ok(ConditionedLaw {
                masses: v.iter().map(|x| x / m).collect(),
                step_n: n,
                normalization: m,
                log_survival: m.ln(),
            })
        }
    }
}

/// `⟨ν0, f0⟩` after checking it is usable as a start for the rate fits.
pub(crate) fn overlap(sd: &SpectralData, nu0: &[f64]) -> Result<f64, QsdError> {
    let f = sd.f0();
    let o = pair(nu0, &f);
    let scale = f.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    if !(o > 1e-14 * scale) {
        return Err(QsdError::ZeroOverlap(o));
    }
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{build_operator, KernelSpec};
    use crate::measure::dirac;
    use crate::spectral::{peripheral_spectrum, DEFAULT_PERIPHERAL_TOL};

    fn setup(q: Vec<Vec<f64>>) -> (DiscreteOperator, SpectralData) {
        let op = build_operator(&KernelSpec::explicit(q)).unwrap();
        let sd = peripheral_spectrum(&op, DEFAULT_PERIPHERAL_TOL).unwrap();
        (op, sd)
    }

    #[test]
    fn stochastic_matrix_gives_stationary_law() {
        let (op, sd) = setup(vec![vec![0.9, 0.1], vec![0.3, 0.7]]);
        let q = quasi_stationary_measure(&sd, &op).unwrap();
        assert!((q.lambda - 1.0).abs() < 1e-14);
        assert!((q.mu[0] - 0.75).abs() < 1e-14 && (q.mu[1] - 0.25).abs() < 1e-14);
    }

    #[test]
    fn symmetric_chain_measures() {
        let (op, sd) = setup(vec![vec![0.5, 0.25], vec![0.25, 0.5]]);
        let q = quasi_stationary_measure(&sd, &op).unwrap();
        assert!((q.mu[0] - 0.5).abs() < 1e-15);
        assert!((q.lambda - 0.75).abs() < 1e-15);
        let eta = quasi_ergodic_measure(&sd).unwrap();
        assert!((eta[0] - 0.5).abs() < 1e-15 && (eta[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn iterate_zero_steps_is_identity() {
        let (op, _) = setup(vec![vec![0.5, 0.25], vec![0.25, 0.5]]);
        let law = yaglom_iterate(&op, &[0.3, 0.7], 0).unwrap();
        assert_eq!(law.masses, vec![0.3, 0.7]);
        assert_eq!(law.normalization, 1.0);
    }

    #[test]
    fn iterate_two_state_matches_closed_form() {
        let (op, _) = setup(vec![vec![0.5, 0.25], vec![0.25, 0.5]]);
        // δ0 Qⁿ = ((0.75ⁿ + 0.25ⁿ)/2, (0.75ⁿ - 0.25ⁿ)/2)
        for n in [1, 2, 5, 50] {
            let law = yaglom_iterate(&op, &dirac(2, 0), n).unwrap();
            let (a, b) = (0.75f64.powi(n as i32), 0.25f64.powi(n as i32));
            assert!((law.masses[0] - (a + b) / (2.0 * a)).abs() < 1e-12);
            assert!((law.normalization - a).abs() < 1e-14);
        }
        let law = yaglom_iterate(&op, &dirac(2, 0), 50).unwrap();
        assert!((law.masses[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn raw_mode_agrees_then_underflows() {
        let (op, _) = setup(vec![vec![0.5, 0.25], vec![0.25, 0.5]]);
        let a = yaglom_iterate_with(&op, &[0.2, 0.8], 40, IterationMode::Raw).unwrap();
        let b = yaglom_iterate(&op, &[0.2, 0.8], 40).unwrap();
        assert!(tv_distance(&a.masses, &b.masses) < 1e-14);
        assert!((a.normalization / b.normalization - 1.0).abs() < 1e-12);
        let err = yaglom_iterate_with(&op, &[0.2, 0.8], 3000, IterationMode::Raw).unwrap_err();
        assert!(matches!(err, QsdError::MassExtinct { .. }));
        assert!(yaglom_iterate(&op, &[0.2, 0.8], 3000).is_ok());
    }

    #[test]
    fn invalid_initial_measures() {
        let (op, _) = setup(vec![vec![0.5, 0.25], vec![0.25, 0.5]]);
        assert!(matches!(yaglom_iterate(&op, &[0.5, 0.6], 1), Err(QsdError::InvalidMeasure(_))));
        assert!(matches!(yaglom_iterate(&op, &[1.0], 1), Err(QsdError::InvalidMeasure(_))));
        assert!(matches!(yaglom_iterate(&op, &[1.5, -0.5], 1), Err(QsdError::InvalidMeasure(_))));
    }
}
