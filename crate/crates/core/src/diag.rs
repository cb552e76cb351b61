//! Structural diagnostics: shattering, wired boundaries, weak spatial mixing,
//! phase occupancy and coupling times.

use crate::error::{invalid, Result};
use crate::graph::{ball, components, find_avoiding_path, Multigraph};
use crate::phase::{Phase, PhaseWindows};
use crate::rcdyn::{
    ball_marginal, edge_indicator_mean, estimate_from, Boundary, ChainState, ConnectivityMode, EdgeConfig,
    Estimate, GrandCoupling, Init, RcParams, Restriction, TraceRow,
};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::sync::Arc;

pub const DEFAULT_PATH_BUDGET: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShatterReport {
    pub v: usize,
    pub radius: usize,
    pub sphere_size: usize,
    pub components_hit: usize,
    /// smallest K for which the sphere is K-shattered
    pub k_min: usize,
}

/// Sphere vertices of `B_l(v)` grouped by the components of `(V, F \ E(B_l(v)))`.
pub fn shatter_report(g: &Multigraph, f: &EdgeConfig, v: usize, radius: usize) -> Result<ShatterReport> {
    let b = ball(g, v, radius)?;
    let comps = components(g, |e| f.contains(e) && !b.contains_edge(e));
    let mut labels: Vec<usize> = b.sphere.iter().map(|&s| comps.label[s]).collect();
    labels.sort_unstable();
    labels.dedup();
    Ok(ShatterReport {
        v,
        radius,
        sphere_size: b.sphere.len(),
        components_hit: labels.len(),
        k_min: b.sphere.len() - labels.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WiredReport {
    pub v: usize,
    pub radius: usize,
    /// every simple path of length `radius` from v meets the largest component
    pub via_path_criterion: bool,
    /// both defining conditions verified directly for `boundary`
    pub direct_ok: bool,
    pub exists: bool,
    pub boundary: Vec<usize>,
    /// a simple path avoiding the largest component, when one exists
    pub counter_path: Option<Vec<usize>>,
}

/// Largest component of `(V \ {v}, F \ F_v)` as a membership vector.
fn largest_avoiding(g: &Multigraph, f: &EdgeConfig, v: usize) -> Vec<bool> {
    let comps = components(g, |e| {
        let ed = g.edge(e);
        f.contains(e) && ed.u != v && ed.v != v
    });
    let best = comps
        .sizes
        .iter()
        .filter(|&&(l, _)| l != v)
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|&(l, _)| l);
    comps.label.iter().enumerate().map(|(x, &l)| x != v && Some(l) == best).collect()
}

fn extendable(g: &Multigraph, on_path: &mut [bool], x: usize, remaining: usize, budget: &mut u64) -> bool {
    if remaining == 0 {
        return true;
    }
    for &(_, y) in g.neighbours(x) {
        if on_path[y] || *budget == 0 {
            continue;
        }
        *budget -= 1;
        on_path[y] = true;
        let ok = extendable(g, on_path, y, remaining - 1, budget);
        on_path[y] = false;
        if ok {
            return true;
        }
    }
    false
}

/// First vertices of `in_c1` along simple paths of length `radius` from `v`.
fn first_hits(g: &Multigraph, v: usize, radius: usize, in_c1: &[bool], budget: u64) -> Result<Vec<usize>> {
    let mut hits = Vec::new();
    let mut on_path = vec![false; g.n()];
    on_path[v] = true;
    let mut left = budget;
    #[allow(clippy::too_many_arguments)]
    fn walk(
        g: &Multigraph,
        x: usize,
        depth: usize,
        radius: usize,
        in_c1: &[bool],
        on_path: &mut [bool],
        hits: &mut Vec<usize>,
        left: &mut u64,
    ) -> Result<()> {
        if depth == radius {
            return Ok(());
        }
        for &(_, y) in g.neighbours(x) {
            if on_path[y] {
                continue;
            }
            if *left == 0 {
                return Err(crate::error::Error::BudgetExceeded(0));
            }
            *left -= 1;
            on_path[y] = true;
            if in_c1[y] {
                let mut b = *left;
                if extendable(g, on_path, y, radius - depth - 1, &mut b) {
                    hits.push(y);
                }
                *left = b;
            } else {
                walk(g, y, depth + 1, radius, in_c1, on_path, hits, left)?;
            }
            on_path[y] = false;
        }
        Ok(())
    }
    walk(g, v, 0, radius, in_c1, &mut on_path, &mut hits, &mut left)
        .map_err(|_| crate::error::Error::BudgetExceeded(budget))?;
    hits.sort_unstable();
    hits.dedup();
    Ok(hits)
}

/// Check the two defining conditions of a wired boundary `s` for `v`.
pub fn verify_wired(g: &Multigraph, f: &EdgeConfig, v: usize, radius: usize, s: &[usize]) -> Result<bool> {
    let b = ball(g, v, radius)?;
    if s.iter().any(|&x| x == v || !b.contains(x)) {
        return Ok(false);
    }
    let mut removed = vec![false; g.n()];
    for &x in s {
        removed[x] = true;
    }
    // component of v in G \ S
    let mut in_cv = vec![false; g.n()];
    in_cv[v] = true;
    let mut queue = VecDeque::from([v]);
    while let Some(x) = queue.pop_front() {
        for &(_, y) in g.neighbours(x) {
            if !removed[y] && !in_cv[y] {
                in_cv[y] = true;
                queue.push_back(y);
            }
        }
    }
    if (0..g.n()).any(|x| in_cv[x] && !b.contains(x)) {
        return Ok(false);
    }
    if s.len() <= 1 {
        return Ok(true);
    }
    let comps = components(g, |e| {
        let ed = g.edge(e);
        f.contains(e) && !in_cv[ed.u] && !in_cv[ed.v]
    });
    let l0 = comps.label[s[0]];
    Ok(s.iter().all(|&x| comps.label[x] == l0))
}

pub fn wired_boundary(g: &Multigraph, f: &EdgeConfig, v: usize, radius: usize, budget: u64) -> Result<WiredReport> {
    if v >= g.n() {
        return Err(crate::error::Error::VertexOutOfRange(v, g.n()));
    }
    let in_c1 = largest_avoiding(g, f, v);
    let counter = find_avoiding_path(g, v, radius, &|x| in_c1[x], budget)?;
    if let Some(path) = counter {
        return Ok(WiredReport {
            v,
            radius,
            via_path_criterion: false,
            direct_ok: false,
            exists: false,
            boundary: Vec::new(),
            counter_path: Some(path),
        });
    }
    let boundary = first_hits(g, v, radius, &in_c1, budget)?;
    let direct_ok = verify_wired(g, f, v, radius, &boundary)?;
    Ok(WiredReport { v, radius, via_path_criterion: true, direct_ok, exists: direct_ok, boundary, counter_path: None })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WsmReport {
    pub ball: Estimate,
    pub full: Estimate,
    pub gap: f64,
}

/// Compare the marginal of `e` under the ball chain with the given boundary
/// against the phase-restricted chain on the whole graph. Wired boundaries
/// pair with the ordered phase, free boundaries with the disordered one.
#[allow(clippy::too_many_arguments)]
pub fn wsm_gap(
    graph: Arc<Multigraph>,
    v: usize,
    radius: usize,
    e: usize,
    params: RcParams,
    windows: PhaseWindows,
    boundary: Boundary,
    steps: u64,
    replicas: usize,
    seed: u64,
) -> Result<WsmReport> {
    use rayon::prelude::*;
    let ball_est = ball_marginal(graph.clone(), v, radius, boundary, params, e, steps, replicas, seed)?;
    let (phase, init) = match boundary {
        Boundary::Wired => (Phase::Ordered, Init::AllIn),
        Boundary::Free => (Phase::Disordered, Init::AllOut),
    };
    let full_steps = steps.saturating_mul(graph.m() as u64 / ball(&graph, v, radius)?.edges.len().max(1) as u64);
    let values: Result<Vec<f64>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let chain = ChainState::new(
                graph.clone(),
                init,
                params,
                Restriction::Phase { phase, windows },
                ConnectivityMode::OnDemand,
                crate::rng::derive_seed(seed, "full-replica", r as u64),
            )?;
            Ok(edge_indicator_mean(chain, e, full_steps.max(steps)))
        })
        .collect();
    let full = estimate_from(&values?);
    Ok(WsmReport { ball: ball_est, full, gap: (ball_est.mean - full.mean).abs() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Occupancy {
    pub disordered: f64,
    pub ordered: f64,
    pub neither: f64,
    pub samples: usize,
}

/// Fraction of trace rows after `burn_in` steps falling in each window.
pub fn phase_occupancy(rows: &[TraceRow], windows: PhaseWindows, burn_in: u64) -> Result<Occupancy> {
    let kept: Vec<&TraceRow> = rows.iter().filter(|r| r.step > burn_in).collect();
    if kept.is_empty() {
        return Err(invalid("no trace rows after burn-in"));
    }
    let k = kept.len() as f64;
    let count = |ph: Phase| kept.iter().filter(|r| windows.label(r.size) == ph).count() as f64 / k;
    Ok(Occupancy {
        disordered: count(Phase::Disordered),
        ordered: count(Phase::Ordered),
        neither: count(Phase::Neither),
        samples: kept.len(),
    })
}

/// Steps until the all-in and all-out chains agree under the grand coupling.
pub fn coupling_time(graph: Arc<Multigraph>, params: RcParams, max_steps: u64, seed: u64) -> Result<Option<u64>> {
    let mk = |init| ChainState::new(graph.clone(), init, params, Restriction::None, ConnectivityMode::OnDemand, 0);
    let mut gc = GrandCoupling::new(vec![mk(Init::AllIn)?, mk(Init::AllOut)?], seed)?;
    let mut differing = graph.m();
    if differing == 0 {
        return Ok(Some(0));
    }
    for t in 1..=max_steps {
        let reports = gc.step();
        let e = reports[0].edge;
        let before = |k: usize| gc.chains[k].config().contains(e) ^ reports[k].changed;
        let was = before(0) != before(1);
        let now = gc.chains[0].config().contains(e) != gc.chains[1].config().contains(e);
        match (was, now) {
            (true, false) => differing -= 1,
            (false, true) => differing += 1,
            _ => {}
        }
        if differing == 0 {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(n: usize) -> Multigraph {
        let pairs: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Multigraph::from_pairs(n, &pairs).unwrap()
    }

    #[test]
    fn shatter_on_empty_config() {
        let g = cycle(8);
        let f = EdgeConfig::empty(&g, ConnectivityMode::OnDemand);
        let r = shatter_report(&g, &f, 0, 2).unwrap();
        assert_eq!((r.sphere_size, r.k_min), (2, 0));
    }

    #[test]
    fn shatter_on_full_cycle() {
        let g = cycle(8);
        let f = EdgeConfig::full(&g, ConnectivityMode::OnDemand);
        // outside the ball the two sphere vertices are joined around the cycle
        assert_eq!(shatter_report(&g, &f, 0, 2).unwrap().k_min, 1);
    }

    #[test]
    fn wired_on_full_config() {
        let g = cycle(10);
        let f = EdgeConfig::full(&g, ConnectivityMode::OnDemand);
        let r = wired_boundary(&g, &f, 0, 2, DEFAULT_PATH_BUDGET).unwrap();
        assert!(r.exists && r.via_path_criterion);
        assert_eq!(r.boundary, vec![1, 9]);
    }

    #[test]
    fn wired_fails_on_empty_config() {
        let g = cycle(10);
        let f = EdgeConfig::empty(&g, ConnectivityMode::OnDemand);
        let r = wired_boundary(&g, &f, 0, 2, DEFAULT_PATH_BUDGET).unwrap();
        assert!(!r.exists);
        assert_eq!(r.counter_path.unwrap().len(), 3);
    }
}
