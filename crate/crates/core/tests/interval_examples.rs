//! The bundled interval kernels end to end: operator, escape set,
//! hypotheses, spectrum and limit measures.

#![allow(clippy::needless_range_loop)]

use qsdlab::kernel::{
    build_operator, check_h1_modulus, check_h2_reachability, registry, survival_mass, DensityFamily, Verdict,
};
use qsdlab::measure::tv_distance;
use qsdlab::qsd::{quasi_ergodic_measure, quasi_stationary_measure};
use qsdlab::spectral::{dirac_decomposition, peripheral_spectrum, DEFAULT_PERIPHERAL_TOL};

#[test]
fn affine_example_has_uniform_qsd_and_rate_one_half() {
    // L(½dx) = ¼·|{x ∈ [-1,1] : |2x - y| ≤ 1}| dy = ¼ dy, so μ is uniform and λ = ½
    for n in [101, 401] {
        let spec = registry::bundled("example21").unwrap().with_grid_size(n);
        let op = build_operator(&spec).unwrap();
        let sd = peripheral_spectrum(&op, DEFAULT_PERIPHERAL_TOL).unwrap();
        assert!((sd.lambda - 0.5).abs() < 1e-12, "N={n}: λ = {}", sd.lambda);
        let w = &op.grid().weights;
        let total: f64 = w.iter().sum();
        let uniform: Vec<f64> = w.iter().map(|v| v / total).collect();
        assert!(tv_distance(&sd.mu0(), &uniform) < 1e-10);
    }
}

#[test]
fn affine_example_grid_refinement() {
    let lambda = |n| {
        let op = build_operator(&registry::bundled("example21").unwrap().with_grid_size(n)).unwrap();
        peripheral_spectrum(&op, DEFAULT_PERIPHERAL_TOL).unwrap().lambda
    };
    assert!((lambda(401) - lambda(801)).abs() <= 1e-3);
}

#[test]
fn affine_example_escape_set_and_structure() {
    let spec = registry::bundled("example21").unwrap();
    let op = build_operator(&spec).unwrap();
    let n = op.len();
    assert_eq!(op.escape().indices, vec![0, n - 1]);
    assert_eq!(op.grid().nodes[0], -1.0);
    assert_eq!(op.grid().nodes[n - 1], 1.0);

    let sd = peripheral_spectrum(&op, DEFAULT_PERIPHERAL_TOL).unwrap();
    assert_eq!(sd.period_m, 1);
    let f0 = sd.f0();
    let mu = quasi_stationary_measure(&sd, &op).unwrap().mu;
    let eta = quasi_ergodic_measure(&sd).unwrap();
    assert!(f0[0] <= 1e-12 && f0[n - 1] <= 1e-12);
    assert_eq!(eta[0], 0.0);
    assert_eq!(eta[n - 1], 0.0);
    assert!(mu[1..n - 1].iter().all(|&v| v > 0.0));

    let small = build_operator(&spec.with_grid_size(101)).unwrap();
    let r = check_h2_reachability(&small);
    assert_eq!(r.scc_count, 1);
    assert_eq!(r.graph_period, Some(1));
    assert!(r.all_reach_all);
}

#[test]
fn gaussian_example_has_no_escape_nodes() {
    let op = build_operator(&registry::bundled("example23gauss").unwrap()).unwrap();
    assert!(op.escape().indices.is_empty());
    let sd = peripheral_spectrum(&op, DEFAULT_PERIPHERAL_TOL).unwrap();
    assert_eq!(sd.period_m, 1);
    assert!(sd.f0().iter().all(|&v| v > 0.0));
}

#[test]
fn cubic_survival_mass_by_direct_integration() {
    // P(x, M) = (1/12)·|[x³-6, x³+6] ∩ [-2, 2]|, integrated with a fine midpoint rule
    let spec = registry::bundled("example22cubic").unwrap();
    for k in 0..=40 {
        let x = -2.0 + 0.1 * k as f64;
        let steps = 200_000;
        let h = 4.0 / steps as f64;
        let direct: f64 = (0..steps)
            .map(|i| -2.0 + (i as f64 + 0.5) * h)
            .filter(|y| (y - x * x * x).abs() <= 6.0)
            .count() as f64
            * h
            / 12.0;
        assert!((survival_mass(&spec, x) - direct).abs() < 1e-4, "x = {x}");
        if x.abs().powi(3) <= 4.0 {
            assert!((survival_mass(&spec, x) - 1.0 / 3.0).abs() < 1e-15);
        }
    }
    // the window only grazes M at the endpoints
    assert!(survival_mass(&spec, 2.0) < 1e-15);
}

#[test]
fn row_sums_are_stable_under_refinement() {
    // N = 51, 101, 201 share the coarse nodes (every 2nd / 4th node)
    for name in ["example21", "example22cubic"] {
        let base = registry::bundled(name).unwrap();
        let sums: Vec<Vec<f64>> = [51, 101, 201]
            .iter()
            .map(|&n| build_operator(&base.clone().with_grid_size(n)).unwrap().row_sums().to_vec())
            .collect();
        for i in 0..51 {
            assert!((sums[0][i] - sums[1][2 * i]).abs() < 1e-12, "{name} node {i}");
            assert!((sums[1][2 * i] - sums[2][4 * i]).abs() < 1e-12, "{name} node {i}");
            let x = build_operator(&base.clone().with_grid_size(51)).unwrap().grid().nodes[i];
            assert!((sums[0][i] - survival_mass(&base, x)).abs() < 1e-12);
        }
    }
}

#[test]
fn h1_reports() {
    for n in [101, 201] {
        let spec = registry::bundled("example21").unwrap().with_grid_size(n);
        let r = check_h1_modulus(&spec, 16).unwrap();
        for row in &r.rows {
            assert!(row.sup_distance <= 2.0 * row.delta + 2.0 * r.grid_step + 1e-12, "δ = {}", row.delta);
        }
        assert_eq!(r.verdict, Verdict::Pass);
    }
    let spec = registry::bundled("example23gauss").unwrap();
    let r = check_h1_modulus(&spec, 16).unwrap();
    assert_eq!(r.bound_respected, Some(true));
}

#[test]
fn gaussian_l1_shift_bound_by_brute_force() {
    // ∫_region |φ(y-x) - φ(y-z)| dy ≤ √(2/π)|x - z|/σ, σ = 1
    let DensityFamily::GaussianShift { sigma, region } = registry::bundled("example23gauss").unwrap().family else {
        panic!("bundled example23gauss is Gaussian");
    };
    let phi = |u: f64| (-0.5 * (u / sigma).powi(2)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    for &(x, z) in &[(-1.9, -1.8), (-1.0, -0.6), (0.6, 1.5), (1.2, 1.21), (-1.5, 1.5)] {
        let mut integral = 0.0;
        for &[a, b] in &region {
            let steps = 100_000;
            let h = (b - a) / steps as f64;
            integral += (0..steps).map(|i| a + (i as f64 + 0.5) * h).map(|y| (phi(y - x) - phi(y - z)).abs()).sum::<f64>()
                * h;
        }
        let bound = (2.0 / std::f64::consts::PI).sqrt() * (x - z).abs() / sigma;
        assert!(integral <= bound + 1e-9, "({x},{z}): {integral} > {bound}");
    }
}

#[test]
fn dirac_decomposition_properties() {
    let spec = registry::bundled("example21").unwrap();
    let op = build_operator(&spec).unwrap();
    let sd = peripheral_spectrum(&op, DEFAULT_PERIPHERAL_TOL).unwrap();
    let node = op.grid().nearest_node(0.3);
    let horizon = ((100f64).ln() / (sd.lambda / sd.subdominant_radius).ln()).ceil() as usize;
    let d = dirac_decomposition(&sd, &op, node, horizon).unwrap();
    assert_eq!(d.coefficients[0].re, sd.f0()[node]);
    assert!(d.residual_norm <= d.bound);
    assert!(*d.decay_curve.last().unwrap() <= 0.01 * d.decay_curve[0]);

    let cyc = build_operator(&registry::bundled("cycle3").unwrap()).unwrap();
    let sd = peripheral_spectrum(&cyc, DEFAULT_PERIPHERAL_TOL).unwrap();
    let d = dirac_decomposition(&sd, &cyc, 2, 5).unwrap();
    let moduli: Vec<f64> = d.coefficients.iter().map(|z| z.norm()).collect();
    assert!(moduli.iter().all(|m| (m - moduli[0]).abs() < 1e-12));
    assert!(d.imaginary_residue < 1e-12);
    // no subdominant spectrum: the remainder is gone after one step
    assert!(d.decay_curve[1] < 1e-12);
}

#[test]
fn spectral_invariants_on_every_bundled_kernel() {
    for name in registry::names() {
        let op = build_operator(&registry::bundled(name).unwrap()).unwrap();
        let sd = peripheral_spectrum(&op, DEFAULT_PERIPHERAL_TOL).unwrap();
        let f0 = sd.f0();
        let mu0 = sd.mu0();
        assert!(f0.iter().all(|&v| v >= 0.0), "{name}");
        assert!(mu0.iter().all(|&v| v >= 0.0), "{name}");
        assert!((mu0.iter().sum::<f64>() - 1.0).abs() < 1e-12, "{name}");
        let pairing: f64 = f0.iter().zip(&mu0).map(|(a, b)| a * b).sum();
        assert!((pairing - 1.0).abs() < 1e-10, "{name}");
        for i in 0..op.len() {
            if op.escape().contains(i) {
                assert!(f0[i] <= 1e-10, "{name}: f0 at escape node {i}");
            } else {
                assert!(f0[i] > 0.0, "{name}: f0 vanishes off the escape set at {i}");
            }
        }
        assert!(sd.residuals.biorthogonality < 1e-8, "{name}");
        assert!(sd.subdominant_radius < sd.lambda * (1.0 - sd.gap_floor), "{name}");
        for (j, z) in sd.peripheral_eigvals.iter().enumerate() {
            let angle = std::f64::consts::TAU * j as f64 / sd.period_m as f64;
            assert!((z.arg().rem_euclid(std::f64::consts::TAU) - angle).abs() < 1e-6, "{name}");
        }
    }
}
