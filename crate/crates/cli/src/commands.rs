use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

use qsdlab::kernel::{
    build_operator, check_h1_modulus, check_h2_reachability, DiscreteOperator, KernelError, KernelSpec, StateGrid,
};
use qsdlab::mc::{estimate_birkhoff, estimate_yaglom, McOptions};
use qsdlab::measure::{dirac, pair, tv_distance};
use qsdlab::oracle::{exact_spectrum, lobo_ratio_table, FiniteChain, Fixture, FIXTURE_CHAINS};
use qsdlab::qsd::{
    cesaro_fit, cyclic_components, fit_yaglom_rate, mass_decay_check, quasi_ergodic_measure, quasi_stationary_measure,
    ConditionedLaws,
};
use qsdlab::spectral::{peripheral_spectrum, subdominant_rate, SpectralData};
use serde_json::{json, Map, Value};

use crate::observable::Observable;
use crate::{load_spec, Artifact, CliError, Command, Format, RunConfig, SCHEMA_VERSION};

const DEFAULT_ANALYZE_N: usize = 200;
const DEFAULT_SIMULATE_N: usize = 25;
const DEFAULT_LOBO_N: usize = 240;

/// Executes one command and returns its output files without writing them.
pub fn run(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    if !(cfg.peripheral_tol > 0.0 && cfg.peripheral_tol < 1.0) {
        return Err(CliError::validation("InvalidParameter", "--peripheral-tol must lie in (0, 1)"));
    }
    if cfg.grid_size.is_some_and(|n| n < 2) {
        return Err(CliError::validation("InvalidGridSize", "--grid-size must be at least 2"));
    }
    if cfg.n_max == Some(0) {
        return Err(CliError::validation("InvalidParameter", "--n-max must be at least 1"));
    }
    match &cfg.command {
        Command::Analyze { x0 } => analyze(cfg, *x0),
        Command::Simulate { x0, observable } => simulate(cfg, *x0, observable),
        Command::VerifyHypothesis { probes } => verify(cfg, *probes),
        Command::Yaglom { x0 } => yaglom(cfg, *x0),
        Command::Lobo { x0, observable } => lobo(cfg, *x0, observable.as_deref()),
        Command::Fixtures => fixtures(),
    }
}

fn header(cfg: &RunConfig, spec: Option<&KernelSpec>) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("schema_version".into(), json!(SCHEMA_VERSION));
    m.insert("command".into(), json!(cfg.command.name()));
    if let Some(s) = spec {
        m.insert("spec".into(), s.to_json_value());
    }
    if !cfg.canonical {
        let t = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        m.insert("generated_unix_time".into(), json!(t));
    }
    m
}

fn document(name: &str, mut head: Map<String, Value>, body: Value) -> Artifact {
    if let Value::Object(b) = body {
        head.extend(b);
    }
    let mut contents = serde_json::to_string_pretty(&Value::Object(head)).expect("json values serialize");
    contents.push('\n');
    Artifact { name: name.into(), contents }
}

fn error_value(name: &str, message: String) -> Value {
    json!({ "error": name, "message": message })
}

fn default_x0(spec: &KernelSpec) -> f64 {
    if spec.family.is_finite_chain() {
        0.0
    } else {
        0.5 * (spec.domain.lower + spec.domain.upper)
    }
}

/// Node used for the deterministic pipeline when starting from `x0`.
fn start_node(spec: &KernelSpec, grid: &StateGrid, x0: f64) -> Result<usize, CliError> {
    let ok = if spec.family.is_finite_chain() {
        x0 >= 0.0 && x0.fract() == 0.0 && (x0 as usize) < grid.len()
    } else {
        spec.domain.contains(x0)
    };
    if !ok {
        return Err(CliError::validation("InvalidStart", format!("start point {x0} is not a state of the kernel")));
    }
    Ok(grid.nearest_node(x0))
}

fn escape_value(op: &DiscreteOperator) -> Value {
    let e = op.escape();
    json!({
        "tolerance": e.tolerance,
        "nodes": e.indices,
        "points": e.indices.iter().map(|&i| op.grid().nodes[i]).collect::<Vec<_>>(),
        "surviving_weight": e.surviving_weight,
    })
}

fn spectral_value(sd: &SpectralData) -> Value {
    let pairs = |v: &[qsdlab::spectral::Complex64]| v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>();
    let leading = sd.eigvals.len().min(sd.period_m + 8);
    json!({
        "lambda": sd.lambda,
        "m": sd.period_m,
        "subdominant_radius": sd.subdominant_radius,
        "gap_floor": sd.gap_floor,
        "peripheral_tol": sd.peripheral_tol,
        "peripheral_eigvals": pairs(&sd.peripheral_eigvals),
        "leading_eigvals": pairs(&sd.eigvals[..leading]),
        "residuals": sd.residuals,
        "power_lambda": sd.power_lambda,
    })
}

/// Shortest round-trip decimal, switching to exponent form for small and
/// large magnitudes.
fn num(v: f64) -> String {
    serde_json::to_string(&v).expect("f64 serializes")
}

fn csv_table(header: &str, rows: impl Iterator<Item = String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

fn analyze(cfg: &RunConfig, x0: Option<f64>) -> Result<Vec<Artifact>, CliError> {
    let spec = load_spec(cfg.spec.as_deref(), cfg.grid_size)?;
    let x0 = x0.unwrap_or_else(|| default_x0(&spec));
    let n_max = cfg.n_max.unwrap_or(DEFAULT_ANALYZE_N);
    let op = build_operator(&spec)?;
    let node = start_node(&spec, op.grid(), x0)?;
    let reach = check_h2_reachability(&op);
    let sd = peripheral_spectrum(&op, cfg.peripheral_tol)?;
    let qs = quasi_stationary_measure(&sd, &op)?;
    let eta = quasi_ergodic_measure(&sd)?;
    let f0 = sd.f0();

    let classes = if sd.period_m > 1 {
        match cyclic_components(&sd, &op) {
            Ok(c) => serde_json::to_value(c).expect("plain data"),
            Err(e) => error_value(e.name(), e.to_string()),
        }
    } else {
        Value::Null
    };
    let nu0 = dirac(op.len(), node);
    let fit = if sd.period_m == 1 { fit_yaglom_rate(&op, &sd, &nu0, n_max) } else { cesaro_fit(&op, &sd, &nu0, n_max) };
    let fit = match fit {
        Ok(f) => serde_json::to_value(f).expect("plain data"),
        Err(e) => error_value(e.name(), e.to_string()),
    };
    let decay = match mass_decay_check(&op, n_max) {
        Ok(d) => serde_json::to_value(d).expect("plain data"),
        Err(e) => error_value(e.name(), e.to_string()),
    };

    let body = json!({
        "lambda": sd.lambda,
        "m": sd.period_m,
        "grid": { "nodes": op.grid().nodes, "weights": op.grid().weights },
        "escape": escape_value(&op),
        "spectral": spectral_value(&sd),
        "qsd": {
            "mu": qs.mu,
            "fixed_point_tv": qs.fixed_point_tv,
            "survival_identity_error": qs.survival_identity_error,
        },
        "qed": { "eta": eta },
        "f0": f0,
        "classes": classes,
        "reachability": reach,
        "rates": {
            "start_point": x0,
            "start_node": node,
            "subdominant": subdominant_rate(&sd),
            "fit": fit,
        },
        "decay": decay,
    });
    let mut out = vec![document("analyze.json", header(cfg, Some(&spec)), body)];
    if cfg.format == Format::Csv {
        let g = op.grid();
        let rows = (0..op.len()).map(|i| {
            format!("{i},{},{},{},{},{}", num(g.nodes[i]), num(qs.mu[i]), num(eta[i]), num(f0[i]), sd.is_escape(i) as u8)
        });
        out.push(Artifact { name: "analyze.csv".into(), contents: csv_table("node,x,mu,eta,f0,escape", rows) });
    }
    Ok(out)
}

fn verify(cfg: &RunConfig, probes: usize) -> Result<Vec<Artifact>, CliError> {
    let spec = load_spec(cfg.spec.as_deref(), cfg.grid_size)?;
    let h1 = match check_h1_modulus(&spec, probes) {
        Ok(r) => Some(r),
        Err(KernelError::NotApplicable(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let op = build_operator(&spec)?;
    let h2 = check_h2_reachability(&op);
    let h1_value = match &h1 {
        Some(r) => serde_json::to_value(r).expect("plain data"),
        None => json!({
            "verdict": "NOT_APPLICABLE",
            "reason": "finite chains carry no continuity hypothesis",
        }),
    };
    let body = json!({ "h1": h1_value, "h2": h2, "escape": escape_value(&op) });
    let mut out = vec![document("hypothesis.json", header(cfg, Some(&spec)), body)];
    if let (Format::Csv, Some(r)) = (cfg.format, &h1) {
        let rows = r.rows.iter().map(|row| {
            let bound = row.bound.map_or(String::new(), num);
            format!("{},{},{},{}", num(row.delta), num(row.sup_distance), bound, row.pairs)
        });
        out.push(Artifact { name: "h1.csv".into(), contents: csv_table("delta,sup_distance,bound,pairs", rows) });
    }
    Ok(out)
}

fn yaglom(cfg: &RunConfig, x0: Option<f64>) -> Result<Vec<Artifact>, CliError> {
    let spec = load_spec(cfg.spec.as_deref(), cfg.grid_size)?;
    let x0 = x0.unwrap_or_else(|| default_x0(&spec));
    let n_max = cfg.n_max.unwrap_or(DEFAULT_ANALYZE_N);
    let op = build_operator(&spec)?;
    let node = start_node(&spec, op.grid(), x0)?;
    let sd = peripheral_spectrum(&op, cfg.peripheral_tol)?;
    let nu0 = dirac(op.len(), node);
    let mu = sd.mu0();
    let mut raw = Vec::with_capacity(n_max);
    for law in ConditionedLaws::new(&op, &nu0)?.take(n_max) {
        let law = law?;
        raw.push((law.step_n, tv_distance(&law.masses, &mu)));
    }
    let periodic = sd.period_m > 1;
    let fit = if periodic { cesaro_fit(&op, &sd, &nu0, n_max) } else { fit_yaglom_rate(&op, &sd, &nu0, n_max) };
    // a start that is already (close to) μ leaves nothing to fit; the curve is still reported
    let fit_value = match &fit {
        Ok(f) => serde_json::to_value(f).expect("plain data"),
        Err(e) => error_value(e.name(), e.to_string()),
    };
    let body = json!({
        "lambda": sd.lambda,
        "m": sd.period_m,
        "start_point": x0,
        "start_node": node,
        "subdominant": subdominant_rate(&sd),
        "curve": raw.iter().map(|(n, tv)| json!({"n": n, "tv": tv})).collect::<Vec<_>>(),
        "fit": fit_value,
    });
    let mut out = vec![document("yaglom.json", header(cfg, Some(&spec)), body)];
    if cfg.format == Format::Csv {
        let table = |d: &[(usize, f64)]| csv_table("n,tv", d.iter().map(|(n, tv)| format!("{n},{}", num(*tv))));
        out.push(Artifact { name: "yaglom.csv".into(), contents: table(&raw) });
        if let (true, Ok(fit)) = (periodic, &fit) {
            out.push(Artifact { name: "cesaro.csv".into(), contents: table(&fit.data) });
        }
    }
    Ok(out)
}

fn simulate(cfg: &RunConfig, x0: Option<f64>, observable: &str) -> Result<Vec<Artifact>, CliError> {
    let spec = load_spec(cfg.spec.as_deref(), cfg.grid_size)?;
    let x0 = x0.unwrap_or_else(|| default_x0(&spec));
    let n = cfg.n_max.unwrap_or(DEFAULT_SIMULATE_N);
    if cfg.n_paths == 0 {
        return Err(CliError::validation("InvalidParameter", "--n-paths must be at least 1"));
    }
    let op = build_operator(&spec)?;
    let grid = op.grid().clone();
    start_node(&spec, &grid, x0)?;
    let h = Observable::parse(observable, None)?;
    h.check(grid.len())?;
    // the spectral side is only a reference here; the simulation runs without it
    let sd = peripheral_spectrum(&op, cfg.peripheral_tol).ok();
    let mut opts = McOptions::new(cfg.n_paths, cfg.seed);
    if let Some(sd) = &sd {
        opts = opts.with_lambda(sd.lambda);
    }
    let hist = estimate_yaglom(&spec, x0, n, &opts)?;
    let h_at = |y: f64| h.at(&grid, y);
    let birk = estimate_birkhoff(&spec, x0, n, &h_at, &opts)?;
    let histogram = hist.histogram.clone().expect("yaglom estimate carries a histogram");
    let (tv_mu, eta_value, mu_value) = match &sd {
        Some(sd) => {
            let hv = h.on_nodes(&grid);
            let eta = quasi_ergodic_measure(sd).ok();
            (
                Some(tv_distance(&histogram, &sd.mu0())),
                eta.map(|e| pair(&e, &hv)),
                Some(pair(&sd.mu0(), &hv)),
            )
        }
        None => (None, None, None),
    };
    let body = json!({
        "seed": cfg.seed,
        "start_point": x0,
        "n": n,
        "n_paths": cfg.n_paths,
        "yaglom": { "estimate": hist, "tv_to_spectral_mu": tv_mu },
        "birkhoff": {
            "observable": observable,
            "estimate": birk,
            "spectral_eta_value": eta_value,
            "spectral_mu_value": mu_value,
        },
    });
    let mut out = vec![document("simulate.json", header(cfg, Some(&spec)), body)];
    if cfg.format == Format::Csv {
        let fmt = |v: Option<f64>| v.map_or(String::new(), num);
        let mut s = String::from("kind,n,n_paths,survivors,value,stderr\n");
        let _ = writeln!(s, "yaglom_histogram,{n},{},{},{},{}", cfg.n_paths, hist.survivors, fmt(tv_mu), num(hist.stderr));
        let _ = writeln!(
            s,
            "birkhoff_average,{n},{},{},{},{}",
            cfg.n_paths,
            birk.survivors,
            fmt(birk.value),
            num(birk.stderr)
        );
        out.push(Artifact { name: "simulate.csv".into(), contents: s });
        let mu = sd.as_ref().map(|s| s.mu0());
        let rows = (0..grid.len()).map(|i| {
            format!("{i},{},{},{}", num(grid.nodes[i]), num(histogram[i]), fmt(mu.as_ref().map(|m| m[i])))
        });
        out.push(Artifact { name: "histogram.csv".into(), contents: csv_table("node,x,mc,spectral_mu", rows) });
    }
    Ok(out)
}

fn lobo(cfg: &RunConfig, x0: Option<f64>, observable: Option<&str>) -> Result<Vec<Artifact>, CliError> {
    let spec = load_spec(cfg.spec.as_deref(), cfg.grid_size)?;
    let chain = FiniteChain::from_spec(&spec)?;
    let x0 = x0.unwrap_or(0.0);
    let op = build_operator(&spec)?;
    let x = start_node(&spec, op.grid(), x0)?;
    let reach = check_h2_reachability(&op);
    let classes = reach.cyclic_classes.clone().filter(|c| c.len() > 1);
    let text = observable.unwrap_or(if classes.is_some() { "class:0" } else { "state:0" });
    let h = Observable::parse(text, classes.as_deref())?;
    h.check(chain.len())?;
    let hv = h.on_nodes(op.grid());
    let n_max = cfg.n_max.unwrap_or(DEFAULT_LOBO_N);
    let mut ns: Vec<usize> = [n_max / 8, n_max / 4, n_max / 2, n_max].into_iter().filter(|&n| n > 0).collect();
    ns.dedup();
    let es = exact_spectrum(&chain)?;
    let rows = lobo_ratio_table(&chain, &es, &hv, x, &ns)?;
    let body = json!({
        "start_state": x,
        "observable": text,
        "h": hv,
        "lambda": es.lambda(),
        "m": es.period(),
        "subdominant": es.subdominant(),
        "eigenbasis_condition": es.condition,
        "biorthogonality_error": es.biorthogonality_error,
        "rows": rows,
    });
    let mut out = vec![document("lobo.json", header(cfg, Some(&spec)), body)];
    if cfg.format == Format::Csv {
        let rows = rows.iter().map(|r| format!("{},{},{},{},{}", r.n, num(r.exact), num(r.predicted), num(r.ratio), num(r.deviation)));
        out.push(Artifact { name: "lobo.csv".into(), contents: csv_table("n,exact,predicted,ratio,deviation", rows) });
    }
    Ok(out)
}

fn fixtures() -> Result<Vec<Artifact>, CliError> {
    FIXTURE_CHAINS
        .iter()
        .map(|name| {
            let f = Fixture::bundled(name)?;
            Ok(Artifact { name: f.file_name(), contents: f.to_json_string() })
        })
        .collect()
}
