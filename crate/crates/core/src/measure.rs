//! Grid measures (vectors of node masses) and the norms used on them.
//!
//! Two conventions coexist and are kept apart by name:
//! [`tv_norm`] is the total-variation norm `|ν|(M) = Σ|ν_i|` of a signed
//! measure, and [`tv_distance`] is the distance `½ Σ|p_i - q_i|` between two
//! probability vectors (the largest difference over sets).

use num_complex::Complex64;

/// `Σ |ν_i|`.
pub fn tv_norm(nu: &[f64]) -> f64 {
    nu.iter().map(|v| v.abs()).sum()
}

pub fn tv_norm_complex(nu: &[Complex64]) -> f64 {
    nu.iter().map(|v| v.norm()).sum()
}

/// `½ Σ |p_i - q_i|`.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub fn mass(nu: &[f64]) -> f64 {
    nu.iter().sum()
}

/// `⟨ν, f⟩ = Σ ν_i f_i`.
pub fn pair(nu: &[f64], f: &[f64]) -> f64 {
    nu.iter().zip(f).map(|(a, b)| a * b).sum()
}

/// Bilinear pairing, no conjugation.
pub fn pair_complex(nu: &[Complex64], f: &[Complex64]) -> Complex64 {
    nu.iter().zip(f).map(|(a, b)| a * b).sum()
}

pub fn sup_norm(f: &[f64]) -> f64 {
    f.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
}

pub fn sup_norm_complex(f: &[Complex64]) -> f64 {
    f.iter().fold(0.0, |m: f64, v| m.max(v.norm()))
}

/// Divides by the total mass; `None` when the mass is not positive.
pub fn normalized(nu: &[f64]) -> Option<Vec<f64>> {
    let m = mass(nu);
    (m > 0.0).then(|| nu.iter().map(|v| v / m).collect())
}

/// Point mass at node `i`.
pub fn dirac(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

pub fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conventions() {
        let p = [0.5, 0.5, 0.0];
        let q = [0.0, 0.5, 0.5];
        assert_eq!(tv_distance(&p, &q), 0.5);
        assert_eq!(tv_norm(&[0.5, -0.5]), 1.0);
        assert_eq!(tv_distance(&p, &p), 0.0);
        assert_eq!(normalized(&[2.0, 6.0]), Some(vec![0.25, 0.75]));
        assert_eq!(normalized(&[0.0, 0.0]), None);
    }
}
