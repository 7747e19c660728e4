use std::fs;
use std::path::PathBuf;

use qsdlab::kernel::{build_operator, registry, KernelSpec};
use qsdlab::measure::{tv_distance, tv_norm};
use qsdlab::oracle::{exact_qsd_qed, exact_spectrum, FiniteChain, Fixture, FIXTURE_CHAINS};
use qsdlab::qsd::{quasi_ergodic_measure, quasi_stationary_measure};
use qsdlab::spectral::{peripheral_spectrum, DEFAULT_PERIPHERAL_TOL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.json"))
}

fn load(name: &str) -> Fixture {
    let text = fs::read_to_string(fixture_path(name)).expect("fixture present");
    Fixture::from_json_str(&text).expect("fixture parses")
}

#[test]
fn checked_in_fixtures_match_a_fresh_oracle_run() {
    for name in FIXTURE_CHAINS {
        let stored = load(name);
        let fresh = Fixture::bundled(name).unwrap();
        assert_eq!(stored.q, fresh.q, "{name}");
        assert_eq!(stored.m, fresh.m, "{name}");
        assert!((stored.lambda - fresh.lambda).abs() < 1e-14, "{name}");
        assert!(tv_distance(&stored.mu, &fresh.mu) < 1e-14, "{name}");
        assert!(tv_distance(&stored.eta, &fresh.eta) < 1e-14, "{name}");
        assert!(stored.provenance.starts_with("oracle_finite@"));
    }
}

#[test]
fn pipeline_matches_fixtures() {
    for name in FIXTURE_CHAINS {
        let f = load(name);
        let op = build_operator(&KernelSpec::explicit(f.q.clone())).unwrap();
        let sd = peripheral_spectrum(&op, DEFAULT_PERIPHERAL_TOL).unwrap();
        let mu = quasi_stationary_measure(&sd, &op).unwrap().mu;
        let eta = quasi_ergodic_measure(&sd).unwrap();
        assert!((sd.lambda - f.lambda).abs() <= 1e-10, "{name}: λ");
        assert_eq!(sd.period_m, f.m, "{name}: m");
        assert!(tv_distance(&mu, &f.mu) <= 1e-10, "{name}: μ");
        assert!(tv_distance(&eta, &f.eta) <= 1e-10, "{name}: η");
    }
}

#[test]
fn hand_values_for_the_two_state_chains() {
    let sym = load("sym2");
    assert!((sym.lambda - 0.75).abs() < 1e-15);
    assert!(sym.mu.iter().chain(&sym.eta).all(|v| (v - 0.5).abs() < 1e-15));

    let cyc = load("cycle2");
    assert!((cyc.lambda - 0.24f64.sqrt()).abs() < 1e-15);
    assert_eq!(cyc.m, 2);
    // η ∝ f⊙μ ∝ (√0.6·√0.4, √0.4·√0.6)
    assert!(cyc.eta.iter().all(|v| (v - 0.5).abs() < 1e-14));
}

#[test]
fn cycle3_peripheral_eigenvalues() {
    let chain = FiniteChain::from_spec(&registry::bundled("cycle3").unwrap()).unwrap();
    let es = exact_spectrum(&chain).unwrap();
    assert_eq!(es.period(), 3);
    for (j, z) in es.values[..3].iter().enumerate() {
        let target = num_complex::Complex64::from_polar(0.9, std::f64::consts::TAU * j as f64 / 3.0);
        assert!((z - target).norm() < 1e-12, "j={j}: {z}");
    }
    assert!(es.subdominant() < 1e-12);
    assert!(es.biorthogonality_error < 1e-12);
}

#[test]
fn random_chains_agree_with_the_pipeline_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..5 {
        let q: Vec<Vec<f64>> = (0..10)
            .map(|_| {
                let row: Vec<f64> = (0..10).map(|_| rng.random::<f64>()).collect();
                let s: f64 = row.iter().sum::<f64>() / rng.random_range(0.5..0.99);
                row.iter().map(|v| v / s).collect()
            })
            .collect();
        let chain = FiniteChain::new(q.clone()).unwrap();
        let es = exact_spectrum(&chain).unwrap();
        let ex = exact_qsd_qed(&chain).unwrap();
        let op = build_operator(&KernelSpec::explicit(q)).unwrap();
        let sd = peripheral_spectrum(&op, DEFAULT_PERIPHERAL_TOL).unwrap();
        assert!((sd.lambda - es.lambda()).abs() < 1e-10);
        // full spectra, both sorted by modulus
        for (a, b) in es.values.iter().zip(&sd.eigvals) {
            assert!((a.norm() - b.norm()).abs() < 1e-10);
        }
        assert!((sd.subdominant_radius - es.subdominant()).abs() < 1e-10);
        assert!(tv_norm(&sd.mu0().iter().zip(&ex.mu).map(|(a, b)| a - b).collect::<Vec<_>>()) < 1e-10);
    }
}
