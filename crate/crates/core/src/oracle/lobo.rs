use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use super::{ExactSpectrum, FiniteChain, OracleError};

/// `E_x[Σ_{k<n} h(X_k) 1_M(X_n)] = Σ_{k<n} e_xᵀ Q^k diag(h) Q^{n-k} 1`.
///
/// Evaluated exactly: the row vectors `e_xᵀ Q^k` and the survival vectors
/// `Q^j 1` are built by repeated multiplication and paired term by term.
pub fn lobo_sum(chain: &FiniteChain, h: &[f64], x: usize, n: usize) -> Result<f64, OracleError> {
    let s = chain.len();
    if h.len() != s {
        return Err(OracleError::InvalidArgument(format!("h has {} entries for {s} states", h.len())));
    }
    if x >= s {
        return Err(OracleError::InvalidArgument(format!("state {x} out of range")));
    }
    if n == 0 {
        return Err(OracleError::InvalidArgument("n must be at least 1".into()));
    }
    if chain.row_sum(x) == 0.0 {
        return Err(OracleError::InvalidArgument(format!("state {x} is absorbed in one step")));
    }
    let q = chain.matrix();
    // survival[j] = Q^j 1
    let mut survival = Vec::with_capacity(n + 1);
    survival.push(vec![1.0; s]);
    for j in 1..=n {
        let prev: &Vec<f64> = &survival[j - 1];
        let next: Vec<f64> = (0..s).map(|i| (0..s).map(|c| q[(i, c)] * prev[c]).sum()).collect();
        survival.push(next);
    }
    let mut row = vec![0.0; s];
    row[x] = 1.0;
    let mut total = 0.0;
    for k in 0..n {
        total += (0..s).map(|i| row[i] * h[i] * survival[n - k][i]).sum::<f64>();
        row = (0..s).map(|c| (0..s).map(|i| row[i] * q[(i, c)]).sum()).collect();
    }
    Ok(total)
}

/// `n λⁿ Σ_ℓ e^{2πinℓ/m} f_ℓ(x) ⟨μ_ℓ, h f_ℓ⟩ μ_ℓ(M)` over the peripheral
/// eigenpairs of `spec`.
pub fn lobo_prediction(spec: &ExactSpectrum, h: &[f64], x: usize, n: usize) -> Complex64 {
    let m = spec.period();
    let lambda = spec.lambda();
    let mut acc = Complex64::new(0.0, 0.0);
    for l in 0..m {
        let f = &spec.right[l];
        let mu = &spec.left[l];
        let weighted: Complex64 = mu.iter().zip(f).zip(h).map(|((a, b), w)| a * b * *w).sum();
        let mass: Complex64 = mu.iter().sum();
        let phase = Complex64::from_polar(1.0, TAU * ((n * l) % m) as f64 / m as f64);
        acc += phase * f[x] * weighted * mass;
    }
    acc * n as f64 * lambda.powi(n as i32)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoboRow {
    pub n: usize,
    pub exact: f64,
    pub predicted: f64,
    pub predicted_imag: f64,
    pub ratio: f64,
    pub deviation: f64,
}

pub fn lobo_ratio_table(
    chain: &FiniteChain,
    spec: &ExactSpectrum,
    h: &[f64],
    x: usize,
    ns: &[usize],
) -> Result<Vec<LoboRow>, OracleError> {
    ns.iter()
        .map(|&n| {
            let exact = lobo_sum(chain, h, x, n)?;
            let p = lobo_prediction(spec, h, x, n);
            let ratio = exact / p.re;
            Ok(LoboRow { n, exact, predicted: p.re, predicted_imag: p.im, ratio, deviation: (ratio - 1.0).abs() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::exact_spectrum;

    #[test]
    fn constant_h_counts_survival_n_times() {
        let c = FiniteChain::new(vec![vec![0.4, 0.3, 0.0], vec![0.2, 0.4, 0.2], vec![0.0, 0.3, 0.4]]).unwrap();
        let n = 7;
        let mut surv = vec![1.0; 3];
        for _ in 0..n {
            surv = (0..3).map(|i| (0..3).map(|j| c.entry(i, j) * surv[j]).sum()).collect();
        }
        let v = lobo_sum(&c, &[1.0; 3], 1, n).unwrap();
        assert!((v - n as f64 * surv[1]).abs() < 1e-15);
    }

    #[test]
    fn two_state_rational_value() {
        // ½ Σ_{k<4} (0.75^4 + 0.25^k 0.75^{4-k}) = 111/128
        let c = FiniteChain::new(vec![vec![0.5, 0.25], vec![0.25, 0.5]]).unwrap();
        let v = lobo_sum(&c, &[1.0, 0.0], 0, 4).unwrap();
        assert_eq!(v, 111.0 / 128.0);
    }

    #[test]
    fn aperiodic_ratio_tends_to_one() {
        let c = FiniteChain::new(vec![vec![0.4, 0.3, 0.0], vec![0.2, 0.4, 0.2], vec![0.0, 0.3, 0.4]]).unwrap();
        let s = exact_spectrum(&c).unwrap();
        let t = lobo_ratio_table(&c, &s, &[0.0, 1.0, 0.0], 0, &[30, 60, 120, 240]).unwrap();
        for w in t.windows(2) {
            assert!(w[1].deviation < w[0].deviation);
        }
        assert!(t[3].deviation < 0.02);
        assert!(t.iter().all(|r| r.predicted_imag.abs() < 1e-12 * r.predicted.abs()));
    }

    #[test]
    fn bad_arguments() {
        let c = FiniteChain::new(vec![vec![0.5, 0.2], vec![0.0, 0.0]]).unwrap();
        assert!(lobo_sum(&c, &[1.0, 1.0], 1, 3).is_err());
        assert!(lobo_sum(&c, &[1.0], 0, 3).is_err());
        assert!(lobo_sum(&c, &[1.0, 1.0], 0, 0).is_err());
    }
}
