use qsdlab::kernel::{build_operator, density, registry, survival_mass};
use qsdlab::mc::{estimate_birkhoff, estimate_yaglom, simulate, McError, McOptions};
use qsdlab::measure::dirac;
use qsdlab::oracle::{lobo_sum, FiniteChain};
use qsdlab::Execution;

#[test]
fn symmetric_chain_histogram_matches_the_exact_law() {
    let spec = registry::bundled("sym2").unwrap();
    let op = build_operator(&spec).unwrap();
    let n = 20;
    let mut law = dirac(2, 0);
    for _ in 0..n {
        law = op.apply_adjoint(&law);
    }
    let surv: f64 = law.iter().sum();
    let exact: Vec<f64> = law.iter().map(|v| v / surv).collect();

    let opts = McOptions::new(1_000_000, 7).with_lambda(0.75);
    let est = estimate_yaglom(&spec, 0.0, n, &opts).unwrap();
    let hist = est.histogram.as_ref().unwrap();
    let se = est.cell_stderr.as_ref().unwrap();
    for i in 0..2 {
        assert!((hist[i] - exact[i]).abs() <= 3.0 * se[i], "cell {i}: {} vs {}", hist[i], exact[i]);
    }
    // survivor fraction against the exact survival probability
    let p = surv;
    let binom = (p * (1.0 - p) / opts.n_paths as f64).sqrt();
    assert!((est.survivors as f64 / opts.n_paths as f64 - p).abs() <= 4.0 * binom);
    assert!(est.warnings.is_empty());
}

#[test]
fn doubly_stochastic_birkhoff_average_matches_the_exact_sum() {
    let spec = registry::bundled("ds3").unwrap();
    let chain = FiniteChain::from_spec(&spec).unwrap();
    let h = [0.0, 1.0, 0.0];
    let n = 10;
    let x = 1;
    let mut surv = vec![1.0; 3];
    let op = build_operator(&spec).unwrap();
    for _ in 0..n {
        surv = op.apply(&surv);
    }
    let exact = lobo_sum(&chain, &h, x, n).unwrap() / (n as f64 * surv[x]);
    let hf = |y: f64| h[y.round() as usize];
    let est = estimate_birkhoff(&spec, x as f64, n, &hf, &McOptions::new(200_000, 11)).unwrap();
    let value = est.value.unwrap();
    assert!((value - exact).abs() <= 4.0 * est.stderr, "{value} vs {exact} ± {}", est.stderr);
}

#[test]
fn cubic_square_observable_at_three_steps() {
    // E_0[(1/3)(X_0² + X_1² + X_2²) | τ > 3] by midpoint quadrature on the
    // continuous kernel, independent of the analysis grid
    let spec = registry::bundled("example22cubic").unwrap();
    let scale = spec.measure.scale();
    let p = |x: f64, y: f64| density(&spec, x, y) * scale;
    let steps = 1500;
    let h = 4.0 / steps as f64;
    let ys: Vec<f64> = (0..steps).map(|i| -2.0 + (i as f64 + 0.5) * h).collect();
    let s: Vec<f64> = ys.iter().map(|&y| survival_mass(&spec, y)).collect();
    let (mut den, mut num1, mut num2) = (0.0, 0.0, 0.0);
    for &y1 in &ys {
        let w1 = p(0.0, y1) * h;
        if w1 == 0.0 {
            continue;
        }
        for (j, &y2) in ys.iter().enumerate() {
            let w = w1 * p(y1, y2) * h * s[j];
            den += w;
            num1 += w * y1 * y1;
            num2 += w * y2 * y2;
        }
    }
    let exact = (num1 + num2) / (3.0 * den);

    let sq = |y: f64| y * y;
    let opts = McOptions::new(200_000, 3);
    let est = estimate_birkhoff(&spec, 0.0, 3, &sq, &opts).unwrap();
    let value = est.value.unwrap();
    assert!((value - exact).abs() <= 4.0 * est.stderr + 2e-3, "{value} vs {exact} ± {}", est.stderr);
    let frac = est.survivors as f64 / opts.n_paths as f64;
    let binom = (den * (1.0 - den) / opts.n_paths as f64).sqrt();
    assert!((frac - den).abs() <= 4.0 * binom + 1e-3, "{frac} vs {den}");
}

#[test]
fn batches_are_a_function_of_the_seed() {
    let spec = registry::bundled("example21").unwrap();
    let sq = |y: f64| y * y;
    let opts = McOptions::new(150_000, 42);
    let a = simulate(&spec, 0.3, 4, Some(&sq), &opts).unwrap();
    let b = simulate(&spec, 0.3, 4, Some(&sq), &opts).unwrap();
    assert_eq!(a, b);
    let c = simulate(&spec, 0.3, 4, Some(&sq), &opts.with_execution(Execution::Sequential)).unwrap();
    assert_eq!(a, c);
    let d = simulate(&spec, 0.3, 4, Some(&sq), &McOptions::new(150_000, 43)).unwrap();
    assert_ne!(a.terminal_states, d.terminal_states);
    assert_eq!(a.streams, 3);
}

#[test]
fn too_few_survivors_is_refused() {
    let spec = registry::bundled("example21").unwrap();
    let err = estimate_yaglom(&spec, 0.0, 25, &McOptions::new(10_000, 0).with_lambda(0.5)).unwrap_err();
    assert!(matches!(err, McError::TooFewSurvivors { .. }));
    assert!(!err.is_validation());
}

#[test]
fn invalid_starts_are_refused() {
    let spec = registry::bundled("example21").unwrap();
    assert!(matches!(
        simulate(&spec, 1.5, 3, None, &McOptions::new(10, 0)),
        Err(McError::InvalidStart { .. })
    ));
    let chain = registry::bundled("sym2").unwrap();
    assert!(matches!(
        simulate(&chain, 0.5, 3, None, &McOptions::new(10, 0)),
        Err(McError::InvalidStart { .. })
    ));
}
