//! Single-edge heat-bath (Glauber) dynamics for the random-cluster model.

use crate::dsu::Dsu;
use crate::error::{invalid, Error, Result};
use crate::graph::{components, Ball, Multigraph};
use crate::phase::{p_hat, Phase, PhaseWindows};
use crate::rng::Rng;
use bitvec::prelude::*;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RcParams {
    pub q: u32,
    pub p: f64,
    pub p_hat: f64,
}

impl RcParams {
    pub fn new(q: u32, p: f64) -> Result<Self> {
        if q < 1 {
            return Err(invalid("q must be >= 1"));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(format!("p must lie in [0,1], got {p}")));
        }
        let qf = q as f64;
        Ok(RcParams { q, p, p_hat: p / ((1.0 - p) * qf + p) })
    }

    pub fn from_beta(q: u32, beta: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(invalid(format!("beta must be finite and >= 0, got {beta}")));
        }
        let mut r = Self::new(q, crate::phase::p_of_beta(beta))?;
        r.p_hat = p_hat(q as f64, beta);
        Ok(r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConnectivityMode {
    /// balanced bidirectional BFS per query
    OnDemand,
    /// union-find over-approximation with BFS fallback after deletions
    Incremental,
}

#[derive(Clone, Debug)]
struct BiBfs {
    seen_a: Vec<u32>,
    seen_b: Vec<u32>,
    qa: Vec<usize>,
    qb: Vec<usize>,
    epoch: u32,
}

impl BiBfs {
    fn new(n: usize) -> Self {
        BiBfs { seen_a: vec![0; n], seen_b: vec![0; n], qa: Vec::new(), qb: Vec::new(), epoch: 0 }
    }

    fn connected(&mut self, g: &Multigraph, member: &BitSlice, u: usize, v: usize, skip: usize) -> bool {
        if u == v {
            return true;
        }
        if self.epoch == u32::MAX {
            self.seen_a.iter_mut().for_each(|x| *x = 0);
            self.seen_b.iter_mut().for_each(|x| *x = 0);
            self.epoch = 0;
        }
        self.epoch += 1;
        let ep = self.epoch;
        self.qa.clear();
        self.qb.clear();
        self.qa.push(u);
        self.qb.push(v);
        self.seen_a[u] = ep;
        self.seen_b[v] = ep;
        let (mut ha, mut hb) = (0, 0);
        loop {
            let from_a = self.qa.len() <= self.qb.len();
            let (q, h, mine, theirs) = if from_a {
                (&mut self.qa, &mut ha, &mut self.seen_a, &self.seen_b)
            } else {
                (&mut self.qb, &mut hb, &mut self.seen_b, &self.seen_a)
            };
            if *h == q.len() {
                return false;
            }
            let x = q[*h];
            *h += 1;
            for &(e, y) in g.neighbours(x) {
                if e == skip || !member[e] {
                    continue;
                }
                if theirs[y] == ep {
                    return true;
                }
                if mine[y] != ep {
                    mine[y] = ep;
                    q.push(y);
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
struct LazyDsu {
    dsu: Dsu,
    pending_deletions: usize,
    limit: usize,
}

/// An edge subset F of a fixed multigraph with connectivity queries.
#[derive(Clone, Debug)]
pub struct EdgeConfig {
    member: BitVec,
    size: usize,
    mode: ConnectivityMode,
    bfs: BiBfs,
    lazy: Option<LazyDsu>,
    edits: u64,
}

impl PartialEq for EdgeConfig {
    fn eq(&self, o: &Self) -> bool {
        self.member == o.member
    }
}

impl EdgeConfig {
    pub fn empty(g: &Multigraph, mode: ConnectivityMode) -> Self {
        Self::from_bits(g, bitvec![0; g.m()], mode)
    }

    pub fn full(g: &Multigraph, mode: ConnectivityMode) -> Self {
        Self::from_bits(g, bitvec![1; g.m()], mode)
    }

    pub fn from_edges(g: &Multigraph, edges: &[usize], mode: ConnectivityMode) -> Result<Self> {
        let mut bits = bitvec![0; g.m()];
        for &e in edges {
            if e >= g.m() {
                return Err(Error::EdgeOutOfRange(e, g.m()));
            }
            bits.set(e, true);
        }
        Ok(Self::from_bits(g, bits, mode))
    }

    pub fn from_bits(g: &Multigraph, member: BitVec, mode: ConnectivityMode) -> Self {
        let size = member.count_ones();
        let lazy = match mode {
            ConnectivityMode::OnDemand => None,
            ConnectivityMode::Incremental => Some(LazyDsu {
                dsu: Dsu::new(g.n()),
                pending_deletions: 0,
                limit: (g.m() as f64).sqrt().ceil() as usize,
            }),
        };
        let mut c = EdgeConfig { member, size, mode, bfs: BiBfs::new(g.n()), lazy, edits: 0 };
        c.rebuild(g);
        c
    }

    fn rebuild(&mut self, g: &Multigraph) {
        if let Some(l) = self.lazy.as_mut() {
            l.dsu.reset();
            for e in self.member.iter_ones() {
                let ed = g.edge(e);
                l.dsu.union(ed.u, ed.v);
            }
            l.pending_deletions = 0;
        }
    }

    pub fn mode(&self) -> ConnectivityMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn contains(&self, e: usize) -> bool {
        self.member[e]
    }

    pub fn bits(&self) -> &BitSlice {
        &self.member
    }

    pub fn edge_ids(&self) -> Vec<usize> {
        self.member.iter_ones().collect()
    }

    /// Bitmask of membership; only valid for at most 64 edges.
    pub fn mask(&self) -> u64 {
        self.member.iter_ones().fold(0u64, |m, e| m | (1 << e))
    }

    pub fn set(&mut self, g: &Multigraph, e: usize, present: bool) {
        if self.member[e] == present {
            return;
        }
        self.member.set(e, present);
        self.edits += 1;
        if present {
            self.size += 1;
            if let Some(l) = self.lazy.as_mut() {
                let ed = g.edge(e);
                l.dsu.union(ed.u, ed.v);
            }
        } else {
            self.size -= 1;
            let rebuild = match self.lazy.as_mut() {
                Some(l) => {
                    l.pending_deletions += 1;
                    l.pending_deletions > l.limit
                }
                None => false,
            };
            if rebuild {
                self.rebuild(g);
            }
        }
    }

    /// Are `u` and `v` joined by a path of F-edges other than `skip`?
    pub fn connected_without(&mut self, g: &Multigraph, u: usize, v: usize, skip: usize) -> bool {
        if u == v {
            return true;
        }
        let answer = match self.lazy.as_mut() {
            Some(l) => {
                if l.dsu.find(u) != l.dsu.find(v) {
                    false
                } else if l.pending_deletions == 0 && !self.member[skip] {
                    true
                } else {
                    self.bfs.connected(g, &self.member, u, v, skip)
                }
            }
            None => self.bfs.connected(g, &self.member, u, v, skip),
        };
        if cfg!(debug_assertions) && self.edits.is_power_of_two() {
            let plain = self.bfs.connected(g, &self.member, u, v, skip);
            debug_assert_eq!(plain, answer, "connectivity cross-check failed");
        }
        answer
    }

    /// Is `e` a cut edge of `(V, F ∪ {e})`? Self-loops never are.
    pub fn is_cut_edge(&mut self, g: &Multigraph, e: usize) -> bool {
        let ed = g.edge(e);
        !ed.is_loop() && !self.connected_without(g, ed.u, ed.v, e)
    }

    pub fn component_stats(&self, g: &Multigraph) -> (usize, usize) {
        let c = components(g, |e| self.member[e]);
        (c.count(), c.largest())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Init {
    AllIn,
    AllOut,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Wired,
    Free,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Restriction {
    None,
    /// Updates that would leave the phase window are ignored.
    Phase { phase: Phase, windows: PhaseWindows },
    /// Only ball edges are updated; outside edges are fixed all-in (wired)
    /// or all-out (free).
    Ball { ball: Ball, boundary: Boundary },
}

impl Restriction {
    fn allows(&self, size: usize) -> bool {
        match self {
            Restriction::Phase { phase: Phase::Disordered, windows } => size <= windows.dis_max,
            Restriction::Phase { phase: Phase::Ordered, windows } => size >= windows.ord_min,
            _ => true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepReport {
    pub edge: usize,
    pub was_cut: bool,
    pub proposed_in: bool,
    /// false if the restriction vetoed the update
    pub applied: bool,
    pub changed: bool,
}

/// One chain of the heat-bath dynamics.
#[derive(Clone, Debug)]
pub struct ChainState {
    graph: Arc<Multigraph>,
    config: EdgeConfig,
    params: RcParams,
    restriction: Restriction,
    updatable: Option<Vec<usize>>,
    steps: u64,
    rng: Rng,
}

impl ChainState {
    pub fn new(
        graph: Arc<Multigraph>,
        init: Init,
        params: RcParams,
        restriction: Restriction,
        mode: ConnectivityMode,
        seed: u64,
    ) -> Result<Self> {
        let g = &*graph;
        let mut config = match init {
            Init::AllIn => EdgeConfig::full(g, mode),
            Init::AllOut => EdgeConfig::empty(g, mode),
        };
        let mut updatable = None;
        if let Restriction::Ball { ball, boundary } = &restriction {
            let outside = *boundary == Boundary::Wired;
            for e in 0..g.m() {
                if !ball.contains_edge(e) {
                    config.set(g, e, outside);
                }
            }
            updatable = Some(ball.edges.clone());
        }
        if !restriction.allows(config.len()) {
            return Err(Error::Restriction(format!(
                "initial configuration with {} edges lies outside the window",
                config.len()
            )));
        }
        Ok(ChainState { graph, config, params, restriction, updatable, steps: 0, rng: crate::rng::from_seed(seed) })
    }

    /// Start from an explicit configuration.
    pub fn with_config(
        graph: Arc<Multigraph>,
        config: EdgeConfig,
        params: RcParams,
        restriction: Restriction,
        seed: u64,
    ) -> Result<Self> {
        if config.bits().len() != graph.m() {
            return Err(Error::Mismatch("configuration size differs from edge count".into()));
        }
        if !restriction.allows(config.len()) {
            return Err(Error::Restriction("initial configuration lies outside the window".into()));
        }
        let updatable = match &restriction {
            Restriction::Ball { ball, .. } => Some(ball.edges.clone()),
            _ => None,
        };
        Ok(ChainState { graph, config, params, restriction, updatable, steps: 0, rng: crate::rng::from_seed(seed) })
    }

    pub fn graph(&self) -> &Arc<Multigraph> {
        &self.graph
    }

    pub fn config(&self) -> &EdgeConfig {
        &self.config
    }

    pub fn params(&self) -> RcParams {
        self.params
    }

    pub fn restriction(&self) -> &Restriction {
        &self.restriction
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn update_count(&self) -> usize {
        self.updatable.as_ref().map_or(self.graph.m(), Vec::len)
    }

    pub fn update_edge(&self, i: usize) -> usize {
        self.updatable.as_ref().map_or(i, |u| u[i])
    }

    /// Heat-bath update of edge `e` driven by the uniform `u`.
    pub fn apply_update(&mut self, e: usize, u: f64) -> StepReport {
        let g = &*self.graph;
        let was_cut = self.config.is_cut_edge(g, e);
        let threshold = if was_cut { self.params.p_hat } else { self.params.p };
        let proposed_in = u < threshold;
        let current = self.config.contains(e);
        let new_size = match (current, proposed_in) {
            (false, true) => self.config.len() + 1,
            (true, false) => self.config.len() - 1,
            _ => self.config.len(),
        };
        let applied = self.restriction.allows(new_size);
        let changed = applied && current != proposed_in;
        if changed {
            self.config.set(g, e, proposed_in);
        }
        self.steps += 1;
        StepReport { edge: e, was_cut, proposed_in, applied, changed }
    }

    pub fn step(&mut self) -> StepReport {
        let i = self.rng.random_range(0..self.update_count());
        let e = self.update_edge(i);
        let u: f64 = self.rng.random();
        self.apply_update(e, u)
    }

    pub fn run(&mut self, steps: u64) {
        for _ in 0..steps {
            self.step();
        }
    }
}

/// Several chains driven by a shared edge choice and uniform per step.
pub struct GrandCoupling {
    pub chains: Vec<ChainState>,
    rng: Rng,
}

impl GrandCoupling {
    pub fn new(chains: Vec<ChainState>, seed: u64) -> Result<Self> {
        let first = chains.first().ok_or_else(|| invalid("no chains to couple"))?;
        for c in &chains[1..] {
            if !Arc::ptr_eq(&c.graph, &first.graph) && *c.graph != *first.graph {
                return Err(Error::Mismatch("chains run on different graphs".into()));
            }
            if c.params != first.params {
                return Err(Error::Mismatch("chains use different parameters".into()));
            }
            if c.updatable != first.updatable {
                return Err(Error::Mismatch("chains update different edge sets".into()));
            }
        }
        Ok(GrandCoupling { chains, rng: crate::rng::from_seed(seed) })
    }

    pub fn step(&mut self) -> Vec<StepReport> {
        let i = self.rng.random_range(0..self.chains[0].update_count());
        let e = self.chains[0].update_edge(i);
        let u: f64 = self.rng.random();
        self.chains.iter_mut().map(|c| c.apply_update(e, u)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: u64,
    pub size: usize,
    pub components: usize,
    pub largest: usize,
    pub phase: Phase,
}

#[derive(Clone, Debug)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    /// per-edge fraction of post-burn-in observations with the edge present
    pub edge_marginals: Option<Vec<f64>>,
    pub final_config: EdgeConfig,
}

impl Trace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,size,components,largest,phase\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{},{}\n", r.step, r.size, r.components, r.largest, r.phase.as_str()));
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub steps: u64,
    pub stride: u64,
    pub burn_in: u64,
    pub record_marginals: bool,
    pub record_components: bool,
    pub windows: Option<PhaseWindows>,
    pub mode: ConnectivityMode,
}

impl RunOptions {
    pub fn new(steps: u64, stride: u64) -> Self {
        RunOptions {
            steps,
            stride: stride.max(1),
            burn_in: steps / 2,
            record_marginals: false,
            record_components: true,
            windows: None,
            mode: ConnectivityMode::OnDemand,
        }
    }
}

pub fn run_chain(
    graph: Arc<Multigraph>,
    init: Init,
    params: RcParams,
    restriction: Restriction,
    opts: &RunOptions,
    seed: u64,
) -> Result<Trace> {
    let chain = ChainState::new(graph, init, params, restriction, opts.mode, seed)?;
    Ok(run_from(chain, opts))
}

pub fn run_from(mut chain: ChainState, opts: &RunOptions) -> Trace {
    let m = chain.graph.m();
    let mut rows = Vec::new();
    let mut counts = opts.record_marginals.then(|| vec![0u64; m]);
    let mut observations = 0u64;
    let observe = |chain: &ChainState, rows: &mut Vec<TraceRow>| {
        let size = chain.config.len();
        let (components, largest) =
            if opts.record_components { chain.config.component_stats(&chain.graph) } else { (0, 0) };
        let phase = opts.windows.map_or(Phase::Neither, |w| w.label(size));
        rows.push(TraceRow { step: chain.steps, size, components, largest, phase });
    };
    observe(&chain, &mut rows);
    for t in 1..=opts.steps {
        chain.step();
        if t % opts.stride == 0 {
            observe(&chain, &mut rows);
            if t > opts.burn_in {
                if let Some(c) = counts.as_mut() {
                    for e in chain.config.member.iter_ones() {
                        c[e] += 1;
                    }
                    observations += 1;
                }
            }
        }
    }
    let edge_marginals =
        counts.map(|c| c.iter().map(|&k| if observations == 0 { 0.0 } else { k as f64 / observations as f64 }).collect());
    Trace { rows, edge_marginals, final_config: chain.config }
}

/// Mean and standard error of an estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

pub(crate) fn estimate_from(values: &[f64]) -> Estimate {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let stderr = if values.len() < 2 {
        f64::NAN
    } else {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
        (var / k).sqrt()
    };
    Estimate { mean, stderr }
}

/// Fraction of post-burn-in steps with `e` present, averaged over replicas.
pub fn edge_indicator_mean(chain: ChainState, e: usize, steps: u64) -> f64 {
    let mut chain = chain;
    let burn = steps / 2;
    chain.run(burn);
    let mut hits = 0u64;
    for _ in burn..steps {
        chain.step();
        hits += chain.config.contains(e) as u64;
    }
    hits as f64 / (steps - burn).max(1) as f64
}

/// Marginal of edge `e` for the chain restricted to `B_l(v)` with the given
/// boundary, estimated from independent replicas.
#[allow(clippy::too_many_arguments)]
pub fn ball_marginal(
    graph: Arc<Multigraph>,
    v: usize,
    radius: usize,
    boundary: Boundary,
    params: RcParams,
    e: usize,
    steps: u64,
    replicas: usize,
    seed: u64,
) -> Result<Estimate> {
    use rayon::prelude::*;
    let b = crate::graph::ball(&graph, v, radius)?;
    if !b.contains_edge(e) {
        return Err(invalid(format!("edge {e} is not in the ball of radius {radius} around {v}")));
    }
    if replicas == 0 {
        return Err(invalid("need at least one replica"));
    }
    let init = match boundary {
        Boundary::Wired => Init::AllIn,
        Boundary::Free => Init::AllOut,
    };
    let values: Result<Vec<f64>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let s = crate::rng::derive_seed(seed, "ball-replica", r as u64);
            let chain = ChainState::new(
                graph.clone(),
                init,
                params,
                Restriction::Ball { ball: b.clone(), boundary },
                ConnectivityMode::OnDemand,
                s,
            )?;
            Ok(edge_indicator_mean(chain, e, steps))
        })
        .collect();
    Ok(estimate_from(&values?))
}

/// Convenience stream for chain seeds.
pub fn chain_seed(master: u64, index: u64) -> u64 {
    crate::rng::derive_seed(master, "chain", index)
}

