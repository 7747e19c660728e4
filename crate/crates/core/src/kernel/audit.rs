//! Numerical audits of the kernel hypotheses: L¹ continuity of `x ↦ g(x, ·)`
//! and reachability of the discretized chain.

use std::collections::VecDeque;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::Serialize;

use super::density::cell_masses;
use super::grid::StateGrid;
use super::operator::DiscreteOperator;
use super::spec::{DensityFamily, KernelSpec};
use super::KernelError;
use crate::exec::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Indeterminate => "INDETERMINATE",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusRow {
    pub delta: f64,
    /// Largest discretized `∫|g(x,y) - g(z,y)| ρ(dy)` over probed pairs with `|x - z| ≤ delta`.
    pub sup_distance: f64,
    /// Closed-form Lipschitz bound plus the discretization allowance, when known.
    pub bound: Option<f64>,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusReport {
    pub family: &'static str,
    pub probes: usize,
    pub pairs_evaluated: usize,
    /// Largest distance from a point of `M` to the nearest probe base point.
    pub probe_gap: f64,
    pub grid_step: f64,
    /// Tolerance for the monotonicity test, `2h · sup g`.
    pub slack: f64,
    pub rows: Vec<ModulusRow>,
    pub monotone: bool,
    pub bound_respected: Option<bool>,
    /// `sup_distance` at the smallest δ over that at the largest δ.
    pub shrink_ratio: f64,
    pub verdict: Verdict,
    pub coverage: String,
}

/// Sampled modulus of continuity of `x ↦ g(x, ·)` in `L¹(ρ)`.
///
/// `probes` base points are spread evenly over each interval of `M`; each is
/// paired with points at distance `δ/2` and `δ` on both sides, for `δ = h·2^k`
/// up to half the length of `M`.
pub fn check_h1_modulus(spec: &KernelSpec, probes: usize) -> Result<ModulusReport, KernelError> {
    check_h1_modulus_with(spec, probes, Execution::default())
}

pub fn check_h1_modulus_with(
    spec: &KernelSpec,
    probes: usize,
    exec: Execution,
) -> Result<ModulusReport, KernelError> {
    if spec.family.is_finite_chain() {
        return Err(KernelError::NotApplicable(
            "the continuity audit needs a density on an interval, not an explicit matrix".into(),
        ));
    }
    if probes < 2 {
        return Err(KernelError::InvalidParameter(format!("probes must be at least 2, got {probes}")));
    }
    spec.validate()?;
    let grid = StateGrid::for_spec(spec);
    let h = grid.step();
    let intervals = match &spec.family {
        DensityFamily::GaussianShift { region, .. } if !region.is_empty() => region.clone(),
        _ => vec![[spec.domain.lower, spec.domain.upper]],
    };
    let in_m = |x: f64| intervals.iter().any(|&[a, b]| x >= a && x <= b);

    let bases: Vec<f64> = intervals
        .iter()
        .flat_map(|&[a, b]| (0..probes).map(move |k| a + (b - a) * k as f64 / (probes - 1) as f64))
        .collect();
    let probe_gap = intervals
        .iter()
        .map(|&[a, b]| 0.5 * (b - a) / (probes - 1) as f64)
        .fold(0.0, f64::max);

    let mut deltas = Vec::new();
    let mut d = h;
    while d <= 0.5 * spec.domain.length() + 1e-12 {
        deltas.push(d);
        d *= 2.0;
    }

    let base_rows = exec.map_range(bases.len(), |k| cell_masses(spec, &grid, bases[k]));
    let (sup_g, lipschitz) = family_constants(spec);
    let slack = 2.0 * h * sup_g;

    let mut rows = Vec::with_capacity(deltas.len());
    let mut pairs_evaluated = 0;
    for &delta in &deltas {
        let per_base = exec.map_range(bases.len(), |k| {
            let x = bases[k];
            let mut sup: f64 = 0.0;
            let mut pairs = 0usize;
            for z in [x - delta, x - 0.5 * delta, x + 0.5 * delta, x + delta] {
                if !in_m(z) {
                    continue;
                }
                let other = cell_masses(spec, &grid, z);
                let dist: f64 = base_rows[k].iter().zip(&other).map(|(p, q)| (p - q).abs()).sum();
                sup = sup.max(dist);
                pairs += 1;
            }
            (sup, pairs)
        });
        let sup_distance = per_base.iter().map(|r| r.0).fold(0.0, f64::max);
        let pairs: usize = per_base.iter().map(|r| r.1).sum();
        pairs_evaluated += pairs;
        rows.push(ModulusRow {
            delta,
            sup_distance,
            bound: lipschitz.map(|l| (l * delta).min(2.0) + slack),
            pairs,
        });
    }

    let monotone = rows.windows(2).all(|w| w[0].sup_distance <= w[1].sup_distance + slack.max(1e-12));
    let first = rows.first().map_or(0.0, |r| r.sup_distance);
    let last = rows.last().map_or(0.0, |r| r.sup_distance);
    let shrink_ratio = if last > 1e-12 { first / last } else { 0.0 };
    let bound_respected = lipschitz.map(|_| rows.iter().all(|r| r.bound.is_none_or(|b| r.sup_distance <= b)));
    let verdict = match (monotone && bound_respected != Some(false), shrink_ratio <= 0.5) {
        (true, true) => Verdict::Pass,
        (true, false) => Verdict::Indeterminate,
        _ => Verdict::Fail,
    };
    let coverage = format!(
        "{} base points, {} pairs; points of M farther than {:.3e} from every base point are not probed",
        bases.len(),
        pairs_evaluated,
        probe_gap
    );
    Ok(ModulusReport {
        family: spec.family.tag(),
        probes,
        pairs_evaluated,
        probe_gap,
        grid_step: h,
        slack,
        rows,
        monotone,
        bound_respected,
        shrink_ratio,
        verdict,
        coverage,
    })
}

/// Supremum of the Lebesgue density and the Lipschitz constant of
/// `x ↦ g(x, ·)` in `L¹`, when available in closed form.
fn family_constants(spec: &KernelSpec) -> (f64, Option<f64>) {
    match &spec.family {
        DensityFamily::AffineUniform { a, noise_halfwidth: w, .. } => (0.5 / w, Some(a.abs() / w)),
        DensityFamily::CubicUniform { noise_halfwidth: w } => {
            let r = spec.domain.lower.abs().max(spec.domain.upper.abs());
            (0.5 / w, Some(3.0 * r * r / w))
        }
        DensityFamily::GaussianShift { sigma, .. } => {
            let peak = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * sigma);
            (peak, Some((2.0 / std::f64::consts::PI).sqrt() / sigma))
        }
        DensityFamily::Tabulated { values } => {
            (values.iter().flatten().fold(0.0, |m: f64, &v| m.max(v)), None)
        }
        DensityFamily::ExplicitMatrix { .. } => (1.0, None),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReachabilityReport {
    pub non_escape_nodes: usize,
    pub edge_tolerance: f64,
    pub edges: usize,
    /// Per non-escape node (in grid order): does it reach every non-escape node?
    pub reaches_all: Vec<bool>,
    pub all_reach_all: bool,
    pub scc_count: usize,
    /// Grid indices of each strongly connected component, largest first.
    pub components: Vec<Vec<usize>>,
    /// Period of the communicating class when there is exactly one.
    pub graph_period: Option<usize>,
    /// Cyclic classes of the communicating class, ordered along the cycle.
    pub cyclic_classes: Option<Vec<Vec<usize>>>,
    pub verdict: Verdict,
}

/// Graph audit of irreducibility on the non-escape nodes.
pub fn check_h2_reachability(op: &DiscreteOperator) -> ReachabilityReport {
    let tol = op.escape().tolerance;
    let alive = op.surviving_nodes();
    let mut graph = DiGraph::<usize, ()>::with_capacity(alive.len(), 0);
    let mut pos = vec![usize::MAX; op.len()];
    for (k, &i) in alive.iter().enumerate() {
        graph.add_node(i);
        pos[i] = k;
    }
    for (k, &i) in alive.iter().enumerate() {
        for (j, &a) in op.row(i).iter().enumerate() {
            if a > tol && pos[j] != usize::MAX {
                graph.add_edge(NodeIndex::new(k), NodeIndex::new(pos[j]), ());
            }
        }
    }

    let mut sccs: Vec<Vec<usize>> = tarjan_scc(&graph)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
            v.sort_unstable();
            v
        })
        .collect();
    sccs.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));

    let mut reaches_all = vec![false; alive.len()];
    for comp in &sccs {
        let seen = bfs(&graph, comp[0]);
        let all = seen.iter().all(|&s| s);
        for &k in comp {
            reaches_all[k] = all;
        }
    }
    let all_reach_all = !alive.is_empty() && reaches_all.iter().all(|&r| r);

    let (graph_period, cyclic_classes) = if sccs.len() == 1 {
        let (p, classes) = period_and_classes(&graph, &sccs[0]);
        let classes = classes
            .into_iter()
            .map(|c| c.into_iter().map(|k| alive[k]).collect())
            .collect();
        (Some(p), Some(classes))
    } else {
        (None, None)
    };

    let verdict = if all_reach_all && sccs.len() == 1 { Verdict::Pass } else { Verdict::Fail };
    ReachabilityReport {
        non_escape_nodes: alive.len(),
        edge_tolerance: tol,
        edges: graph.edge_count(),
        reaches_all,
        all_reach_all,
        scc_count: sccs.len(),
        components: sccs.iter().map(|c| c.iter().map(|&k| alive[k]).collect()).collect(),
        graph_period,
        cyclic_classes,
        verdict,
    }
}

fn bfs(graph: &DiGraph<usize, ()>, start: usize) -> Vec<bool> {
    let mut seen = vec![false; graph.node_count()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(u) = queue.pop_front() {
        for v in graph.neighbors(NodeIndex::new(u)) {
            if !seen[v.index()] {
                seen[v.index()] = true;
                queue.push_back(v.index());
            }
        }
    }
    seen
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Period of a strongly connected component from BFS levels, and the
/// classes `{level ≡ r mod p}` starting from the component's first node.
fn period_and_classes(graph: &DiGraph<usize, ()>, comp: &[usize]) -> (usize, Vec<Vec<usize>>) {
    let mut inside = vec![false; graph.node_count()];
    for &k in comp {
        inside[k] = true;
    }
    let mut level = vec![usize::MAX; graph.node_count()];
    level[comp[0]] = 0;
    let mut queue = VecDeque::from([comp[0]]);
    let mut p = 0;
    while let Some(u) = queue.pop_front() {
        for v in graph.neighbors(NodeIndex::new(u)) {
            let v = v.index();
            if !inside[v] {
                continue;
            }
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            } else {
                p = gcd(p, (level[u] + 1).abs_diff(level[v]));
            }
        }
    }
    // a single node without a self-loop has no cycle at all
    let p = p.max(1);
    let mut classes = vec![Vec::new(); p];
    for &k in comp {
        classes[level[k] % p].push(k);
    }
    (p, classes)
}
