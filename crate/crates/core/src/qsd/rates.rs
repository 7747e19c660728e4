use serde::Serialize;

use super::{check_initial, overlap, ConditionedLaws, QsdError};
use crate::kernel::DiscreteOperator;
use crate::measure::{sup_norm, tv_distance};
use crate::spectral::{subdominant_rate, SpectralData};

/// TV values at or below this are rounding noise and end the usable data.
pub const TV_NOISE_FLOOR: f64 = 1e-11;
/// Minimum number of points in a fit window.
const MIN_FIT_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateModel {
    Exponential,
    OneOverN,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub model: RateModel,
    /// Exponential: `α` in `K e^{-αn}`. One-over-n: `p` in `K n^{-p}`.
    pub fitted_rate: f64,
    pub fitted_constant: f64,
    pub r_squared: f64,
    /// `(n, TV)` for every computed step.
    pub data: Vec<(usize, f64)>,
    /// First and last `n` of the fit window.
    pub window: (usize, usize),
    /// Spectral prediction `log(λ / subdominant radius)` (exponential model).
    pub predicted_rate: Option<f64>,
    /// Slope of `n·D(n)` against `n` over the window and its standard error
    /// (one-over-n model).
    pub trend_slope: Option<f64>,
    pub trend_stderr: Option<f64>,
    /// `sup n·D(n)` over the window (one-over-n model).
    pub sup_scaled: Option<f64>,
    /// Smallest raw `TV(P_ν[X_n ∈ ·|τ>n], μ)` over the window; stays away
    /// from zero when the conditioned laws oscillate (one-over-n model).
    pub raw_tv_min: Option<f64>,
    pub pass: bool,
}

struct LineFit {
    slope: f64,
    intercept: f64,
    r_squared: f64,
    slope_stderr: f64,
}

fn line_fit(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    let slope_stderr = if x.len() > 2 { (sse / (n - 2.0) / sxx).sqrt() } else { f64::INFINITY };
    LineFit { slope, intercept, r_squared, slope_stderr }
}

/// Exponential fit of `TV(P_ν[X_n ∈ ·|τ>n], μ)` for an aperiodic kernel.
///
/// TV values are computed for `n = 1..=n_max`; the data are cut at the
/// first value below [`TV_NOISE_FLOOR`] and `log TV` is fitted by least
/// squares over the last half of what remains. PASS needs a fitted rate of
/// at least 90% of the spectral prediction and `r² ≥ 0.98`.
pub fn fit_yaglom_rate(
    op: &DiscreteOperator,
    sd: &SpectralData,
    nu0: &[f64],
    n_max: usize,
) -> Result<RateFit, QsdError> {
    if sd.period_m != 1 {
        return Err(QsdError::NotAperiodic(sd.period_m));
    }
    check_initial(op, nu0)?;
    overlap(sd, nu0)?;
    let mu = sd.mu0();
    let mut data = Vec::with_capacity(n_max);
    for law in ConditionedLaws::new(op, nu0)?.take(n_max) {
        let law = law?;
        data.push((law.step_n, tv_distance(&law.masses, &mu)));
    }
    let usable = data.iter().take_while(|(_, tv)| *tv > TV_NOISE_FLOOR).count();
    if usable < MIN_FIT_POINTS {
        return Err(QsdError::InsufficientData { needed: MIN_FIT_POINTS });
    }
    let tail = &data[usable - usable.div_ceil(2)..usable];
    let window = (tail[0].0, tail[tail.len() - 1].0);
    let x: Vec<f64> = tail.iter().map(|(n, _)| *n as f64).collect();
    let y: Vec<f64> = tail.iter().map(|(_, tv)| tv.ln()).collect();
    let fit = line_fit(&x, &y);
    let fitted_rate = -fit.slope;
    let predicted = subdominant_rate(sd).alpha();
    let pass = fitted_rate >= 0.9 * predicted && fit.r_squared >= 0.98;
    Ok(RateFit {
        model: RateModel::Exponential,
        fitted_rate,
        fitted_constant: fit.intercept.exp(),
        r_squared: fit.r_squared,
        data,
        window,
        predicted_rate: Some(predicted),
        trend_slope: None,
        trend_stderr: None,
        sup_scaled: None,
        raw_tv_min: None,
        pass,
    })
}

/// Cesàro fit over the last half of `1..=n_max`.
pub fn cesaro_fit(op: &DiscreteOperator, sd: &SpectralData, nu0: &[f64], n_max: usize) -> Result<RateFit, QsdError> {
    cesaro_fit_from(op, sd, nu0, n_max - n_max.div_ceil(2) + 1, n_max)
}

/// `D(n) = TV((1/n) Σ_{i=1..n} P_ν[X_i ∈ ·|τ>i], μ)` for a periodic kernel.
///
/// Over the window `n_min..=n_max`, `n·D(n)` is regressed on `n`; PASS when
/// the slope is not significantly positive (at most two standard errors).
/// `fitted_rate` is the log-log decay exponent of `D`.
pub fn cesaro_fit_from(
    op: &DiscreteOperator,
    sd: &SpectralData,
    nu0: &[f64],
    n_min: usize,
    n_max: usize,
) -> Result<RateFit, QsdError> {
    if sd.period_m < 2 {
        return Err(QsdError::NotPeriodic);
    }
    if n_min < 1 || n_max < n_min + MIN_FIT_POINTS - 1 {
        return Err(QsdError::InsufficientData { needed: MIN_FIT_POINTS });
    }
    check_initial(op, nu0)?;
    overlap(sd, nu0)?;
    let mu = sd.mu0();
    let mut running = vec![0.0; op.len()];
    let mut data = Vec::with_capacity(n_max);
    let mut raw_tv_min = f64::INFINITY;
    for law in ConditionedLaws::new(op, nu0)?.take(n_max) {
        let law = law?;
        let n = law.step_n;
        running.iter_mut().zip(&law.masses).for_each(|(r, v)| *r += v);
        let avg: Vec<f64> = running.iter().map(|r| r / n as f64).collect();
        data.push((n, tv_distance(&avg, &mu)));
        if n >= n_min {
            raw_tv_min = raw_tv_min.min(tv_distance(&law.masses, &mu));
        }
    }
    let window: Vec<(usize, f64)> = data.iter().copied().filter(|(n, _)| *n >= n_min).collect();
    let x: Vec<f64> = window.iter().map(|(n, _)| *n as f64).collect();
    let scaled: Vec<f64> = window.iter().map(|(n, d)| *n as f64 * d).collect();
    let trend = line_fit(&x, &scaled);
    let sup_scaled = sup_norm(&scaled);

    let positive: Vec<(f64, f64)> =
        window.iter().filter(|(_, d)| *d > TV_NOISE_FLOOR).map(|(n, d)| ((*n as f64).ln(), d.ln())).collect();
    let (fitted_rate, fitted_constant, r_squared) = if positive.len() >= 2 {
        let (lx, ly): (Vec<f64>, Vec<f64>) = positive.into_iter().unzip();
        let f = line_fit(&lx, &ly);
        (-f.slope, f.intercept.exp(), f.r_squared)
    } else {
        (f64::INFINITY, 0.0, 1.0)
    };
    let pass = trend.slope <= 2.0 * trend.slope_stderr + 1e-12 * sup_scaled.max(1.0);
    Ok(RateFit {
        model: RateModel::OneOverN,
        fitted_rate,
        fitted_constant,
        r_squared,
        data,
        window: (n_min, n_max),
        predicted_rate: None,
        trend_slope: Some(trend.slope),
        trend_stderr: Some(trend.slope_stderr),
        sup_scaled: Some(sup_scaled),
        raw_tv_min: Some(raw_tv_min),
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    /// Smallest `n` with `sup_x Pⁿ(x, M) < 1`.
    pub n0: usize,
    /// `sup_x P^{n0}(x, M)`.
    pub alpha: f64,
    /// `sup_x Pⁿ(x, M)` for `n = 1..=n_max`.
    pub sup_mass: Vec<f64>,
    /// Number of multiples `k·n0 ≤ n_max` checked against `α^k`.
    pub envelope_checked: usize,
    pub envelope_ok: bool,
    pub row_sum_min: f64,
    pub row_sum_max: f64,
}

/// Geometric decay of the survivor mass, `sup_x P^{k n0}(x, M) ≤ α^k`.
pub fn mass_decay_check(op: &DiscreteOperator, n_max: usize) -> Result<DecayReport, QsdError> {
    let mut v = vec![1.0; op.len()];
    let mut sup_mass = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        v = op.apply(&v);
        sup_mass.push(sup_norm(&v));
    }
    let n0 = sup_mass
        .iter()
        .position(|&s| s < 1.0 - 1e-12)
        .map(|i| i + 1)
        .ok_or(QsdError::NeverSubunit(n_max))?;
    let alpha = sup_mass[n0 - 1];
    let mut envelope_checked = 0;
    let mut envelope_ok = true;
    for k in 1..=n_max / n0 {
        envelope_checked += 1;
        envelope_ok &= sup_mass[k * n0 - 1] <= alpha.powi(k as i32) * (1.0 + 1e-12);
    }
    let rows = op.row_sums();
    Ok(DecayReport {
        n0,
        alpha,
        sup_mass,
        envelope_checked,
        envelope_ok,
        row_sum_min: rows.iter().copied().fold(f64::INFINITY, f64::min),
        row_sum_max: rows.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}
