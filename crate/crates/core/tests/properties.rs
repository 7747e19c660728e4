use proptest::prelude::*;
use qsdlab::kernel::{build_operator, detect_escape_set, registry, KernelSpec};
use qsdlab::mc::{simulate, McOptions};
use qsdlab::measure::{pair, tv_distance, tv_norm};
use qsdlab::oracle::{exact_qsd_qed, lobo_sum, FiniteChain};
use qsdlab::qsd::{quasi_ergodic_measure, quasi_stationary_measure, yaglom_iterate};
use qsdlab::spectral::{peripheral_spectrum, DEFAULT_PERIPHERAL_TOL};

/// Strictly positive substochastic matrices: irreducible and aperiodic.
fn positive_chain(max: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2..=max).prop_flat_map(|s| {
        prop::collection::vec((prop::collection::vec(0.05f64..1.0, s), 0.3f64..0.99), s).prop_map(|rows| {
            rows.into_iter()
                .map(|(row, mass)| {
                    let t: f64 = row.iter().sum();
                    row.iter().map(|v| v * mass / t).collect()
                })
                .collect()
        })
    })
}

/// Sparse substochastic matrices, possibly with zero rows.
fn sparse_chain(max: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2..=max).prop_flat_map(|s| {
        prop::collection::vec(prop::collection::vec(prop::option::weighted(0.4, 0.0f64..1.0), s), s).prop_map(
            |rows| {
                rows.into_iter()
                    .map(|row| {
                        let v: Vec<f64> = row.into_iter().map(|e| e.unwrap_or(0.0)).collect();
                        let t: f64 = v.iter().sum::<f64>() * 1.25;
                        if t > 0.0 {
                            v.iter().map(|e| e / t).collect()
                        } else {
                            v
                        }
                    })
                    .collect()
            },
        )
    })
}

fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn adjoint_pairs_consistently(q in positive_chain(8), seed in 0u64..1000) {
        let n = q.len();
        let op = build_operator(&KernelSpec::explicit(q)).unwrap();
        let f: Vec<f64> = (0..n).map(|i| ((seed + i as u64) as f64).sin()).collect();
        let nu: Vec<f64> = (0..n).map(|i| ((seed * 3 + i as u64) as f64).cos()).collect();
        let lhs = pair(&op.apply_adjoint(&nu), &f);
        let rhs = pair(&nu, &op.apply(&f));
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn operator_is_nonnegative_and_substochastic(q in sparse_chain(8)) {
        let op = build_operator(&KernelSpec::explicit(q)).unwrap();
        let ones = vec![1.0; op.len()];
        let p1 = op.apply(&ones);
        for (i, v) in p1.iter().enumerate() {
            prop_assert!(*v >= 0.0 && *v <= 1.0 + 1e-12);
            prop_assert!((v - op.row_sums()[i]).abs() < 1e-12);
            prop_assert!(op.row(i).iter().all(|&e| e >= 0.0));
        }
    }

    #[test]
    fn escape_set_is_idempotent_and_monotone(q in sparse_chain(8), t1 in 1e-9f64..0.5, t2 in 1e-9f64..0.5) {
        let op = build_operator(&KernelSpec::explicit(q)).unwrap();
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        // an error means every node escapes
        let nodes = |t: f64| detect_escape_set(&op, t).map(|e| e.indices).unwrap_or_else(|_| (0..op.len()).collect());
        let a = nodes(lo);
        prop_assert_eq!(&a, &nodes(lo));
        let b = nodes(hi);
        prop_assert!(a.iter().all(|i| b.contains(i)));
    }

    #[test]
    fn tv_is_a_metric(p in vector(6), q in vector(6), r in vector(6), c in -3.0f64..3.0) {
        prop_assert!(tv_distance(&p, &q) >= 0.0);
        prop_assert!((tv_distance(&p, &q) - tv_distance(&q, &p)).abs() < 1e-15);
        prop_assert!(tv_distance(&p, &r) <= tv_distance(&p, &q) + tv_distance(&q, &r) + 1e-12);
        let scaled: Vec<f64> = p.iter().map(|v| c * v).collect();
        prop_assert!((tv_norm(&scaled) - c.abs() * tv_norm(&p)).abs() < 1e-12);
    }

    #[test]
    fn conditioned_laws_are_probabilities(q in positive_chain(8), n in 1usize..40) {
        let s = q.len();
        let op = build_operator(&KernelSpec::explicit(q)).unwrap();
        let mut nu0 = vec![0.0; s];
        nu0[n % s] = 1.0;
        let law = yaglom_iterate(&op, &nu0, n).unwrap();
        prop_assert!((law.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(law.masses.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn pipeline_agrees_with_the_oracle(q in positive_chain(8)) {
        let chain = FiniteChain::new(q.clone()).unwrap();
        let exact = exact_qsd_qed(&chain).unwrap();
        let op = build_operator(&KernelSpec::explicit(q)).unwrap();
        let sd = peripheral_spectrum(&op, DEFAULT_PERIPHERAL_TOL).unwrap();
        prop_assert_eq!(sd.period_m, 1);
        prop_assert!((sd.lambda - exact.lambda).abs() < 1e-10);
        let mu = quasi_stationary_measure(&sd, &op).unwrap().mu;
        let eta = quasi_ergodic_measure(&sd).unwrap();
        prop_assert!(tv_distance(&mu, &exact.mu) < 1e-9);
        prop_assert!(tv_distance(&eta, &exact.eta) < 1e-9);
        // μ P = λ μ and the pairing normalisation
        let step = op.apply_adjoint(&mu);
        prop_assert!(step.iter().zip(&mu).all(|(a, b)| (a - sd.lambda * b).abs() < 1e-10));
        prop_assert!((pair(&sd.mu0(), &sd.f0()) - 1.0).abs() < 1e-9);
        prop_assert!(sd.residuals.biorthogonality < 1e-8);
    }

    #[test]
    fn lobo_sum_with_constant_observable(q in positive_chain(6), n in 1usize..30) {
        let s = q.len();
        let chain = FiniteChain::new(q.clone()).unwrap();
        let op = build_operator(&KernelSpec::explicit(q)).unwrap();
        let mut surv = vec![1.0; s];
        for _ in 0..n {
            surv = op.apply(&surv);
        }
        let total = lobo_sum(&chain, &vec![1.0; s], 0, n).unwrap();
        prop_assert!((total - n as f64 * surv[0]).abs() <= 1e-12 * n as f64);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn simulation_is_deterministic_in_the_seed(seed in any::<u64>(), n in 1usize..6) {
        let spec = registry::bundled("example23gauss").unwrap();
        let opts = McOptions::new(2_000, seed);
        let a = simulate(&spec, 0.0, n, None, &opts).unwrap();
        let b = simulate(&spec, 0.0, n, None, &opts).unwrap();
        prop_assert_eq!(a, b);
    }
}
