//! Planted (G, sigma) pairs with prescribed colour statistics, sampled either
//! all at once or lazily half-edge by half-edge for the shattering exploration.

use crate::dsu::Dsu;
use crate::error::{invalid, Error, Result};
use crate::gibbs::SpinConfig;
use crate::graph::{Edge, Multigraph};
use crate::phase::{self, ColourMatrix, ColourVector, Phase};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

const MAX_PLANTED_Q: u32 = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub q: u32,
    pub d: u32,
    pub n: usize,
    pub beta: f64,
    pub phase: Phase,
    pub nu: Vec<f64>,
    pub rho: Vec<Vec<f64>>,
    /// vertices per colour
    pub counts: Vec<usize>,
    /// half-edges of colour i paired with colour j; b_ii counts both ends
    pub buckets: Vec<Vec<usize>>,
}

impl PlantedSpec {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serialises")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: PlantedSpec = serde_json::from_str(s).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })?;
        spec.validate()?;
        Ok(spec)
    }

    /// Check the integer constraints.
    pub fn validate(&self) -> Result<()> {
        let q = self.q as usize;
        if self.counts.len() != q || self.buckets.len() != q || self.buckets.iter().any(|r| r.len() != q) {
            return Err(Error::Infeasible("dimension mismatch".into()));
        }
        if self.counts.iter().sum::<usize>() != self.n {
            return Err(Error::Infeasible("colour counts do not sum to n".into()));
        }
        for i in 0..q {
            if self.buckets[i].iter().sum::<usize>() != self.d as usize * self.counts[i] {
                return Err(Error::Infeasible(format!("row {i} does not sum to d * n_{i}")));
            }
            if self.buckets[i][i] % 2 == 1 {
                return Err(Error::Infeasible(format!("diagonal entry {i} is odd")));
            }
            for j in 0..q {
                if self.buckets[i][j] != self.buckets[j][i] {
                    return Err(Error::Infeasible(format!("bucket matrix not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(())
    }

    /// l1 distances of the realised statistics from their targets.
    pub fn rounding_errors(&self) -> (f64, f64) {
        let n = self.n as f64;
        let dn = self.d as f64 * n;
        let nu_err = self.counts.iter().zip(&self.nu).map(|(&c, &t)| (c as f64 / n - t).abs()).sum();
        let rho_err = self
            .buckets
            .iter()
            .flatten()
            .zip(self.rho.iter().flatten())
            .map(|(&b, &t)| (b as f64 / dn - t).abs())
            .sum();
        (nu_err, rho_err)
    }
}

/// Largest-remainder rounding of `total * weights` to integers summing to `total`.
pub fn largest_remainder(total: usize, weights: &[f64]) -> Vec<usize> {
    let raw: Vec<f64> = weights.iter().map(|w| w * total as f64).collect();
    let mut out: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let assigned: usize = out.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())).then(a.cmp(&b)));
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        out[i] += 1;
    }
    out
}

pub fn make_planted_spec(q: u32, d: u32, n: usize, beta: f64, phase_kind: Phase) -> Result<PlantedSpec> {
    phase::check_qd(q, d)?;
    if q > MAX_PLANTED_Q {
        return Err(invalid(format!("q={q} too large for a dense planted spec")));
    }
    if n == 0 || (n * d as usize) % 2 == 1 {
        return Err(Error::OddHalfEdges(n as u64 * d as u64));
    }
    let (nu, rho): (ColourVector, ColourMatrix) = match phase_kind {
        Phase::Disordered => {
            let upper = phase::beta_u_prime_alt(q, d)?;
            if beta >= upper {
                return Err(invalid(format!("disordered spec needs beta < {upper}")));
            }
            (phase::nu_dis(q), phase::rho_dis(q, beta))
        }
        Phase::Ordered => {
            let lower = phase::beta_u(q, d)?;
            if beta <= lower {
                return Err(invalid(format!("ordered spec needs beta > {lower}")));
            }
            let t = phase::solve_t(q, d, beta)?;
            (phase::nu_ord(q, d, t), phase::rho_ord(q, d, beta, t))
        }
        Phase::Neither => return Err(invalid("phase must be Disordered or Ordered")),
    };
    let qs = q as usize;
    let nu_v = nu.to_vec();
    let rho_v = rho.to_dense();
    let counts = largest_remainder(n, &nu_v);
    let dn = (d as usize * n) as f64;
    let mut b = vec![vec![0i64; qs]; qs];
    for i in 0..qs {
        for j in i + 1..qs {
            let v = if counts[i] == 0 || counts[j] == 0 { 0 } else { (dn * rho_v[i][j]).round() as i64 };
            b[i][j] = v;
            b[j][i] = v;
        }
    }
    let diag = |b: &Vec<Vec<i64>>, i: usize| -> i64 {
        d as i64 * counts[i] as i64 - (0..qs).filter(|&j| j != i).map(|j| b[i][j]).sum::<i64>()
    };
    // pair up rows with odd diagonals and move one unit between them
    let odd: Vec<usize> = (0..qs).filter(|&i| diag(&b, i).rem_euclid(2) == 1).collect();
    for pair in odd.chunks(2) {
        let (i, j) = (pair[0], pair[1]);
        let target = dn * rho_v[i][j];
        let delta = if b[i][j] == 0 || (b[i][j] as f64) < target { 1 } else { -1 };
        b[i][j] += delta;
        b[j][i] += delta;
    }
    // repair negative diagonals by lowering the largest off-diagonal entry of the row
    for _ in 0..qs * qs * 4 {
        let Some(i) = (0..qs).find(|&i| diag(&b, i) < 0) else { break };
        let j = (0..qs).filter(|&j| j != i).max_by_key(|&j| (b[i][j], std::cmp::Reverse(j))).unwrap();
        if b[i][j] < 2 {
            return Err(Error::Infeasible(format!("row {i} cannot be repaired")));
        }
        b[i][j] -= 2;
        b[j][i] -= 2;
    }
    for i in 0..qs {
        b[i][i] = diag(&b, i);
        if b[i][i] < 0 {
            return Err(Error::Infeasible(format!("negative diagonal in row {i}")));
        }
    }
    let spec = PlantedSpec {
        q,
        d,
        n,
        beta,
        phase: phase_kind,
        nu: nu_v,
        rho: rho_v,
        counts,
        buckets: b.into_iter().map(|r| r.into_iter().map(|x| x as usize).collect()).collect(),
    };
    spec.validate()?;
    let (nu_err, rho_err) = spec.rounding_errors();
    if nu_err > qs as f64 / n as f64 || rho_err > 2.0 * (qs * qs) as f64 / dn {
        return Err(Error::Infeasible(format!("rounding errors {nu_err:e} / {rho_err:e} exceed their bounds")));
    }
    Ok(spec)
}

/// Uniform colouring with the prescribed class sizes.
fn planted_colours<R: Rng + ?Sized>(spec: &PlantedSpec, rng: &mut R) -> Vec<u32> {
    let mut order: Vec<usize> = (0..spec.n).collect();
    order.shuffle(rng);
    let mut colours = vec![0u32; spec.n];
    let mut k = 0;
    for (c, &cnt) in spec.counts.iter().enumerate() {
        for &v in &order[k..k + cnt] {
            colours[v] = c as u32;
        }
        k += cnt;
    }
    colours
}

/// Uniform pair (G, sigma) among those realising the spec's statistics.
pub fn sample_planted<R: Rng + ?Sized>(spec: &PlantedSpec, rng: &mut R) -> Result<(Multigraph, SpinConfig)> {
    spec.validate()?;
    let (q, d) = (spec.q as usize, spec.d as usize);
    let colours = planted_colours(spec, rng);
    let mut class_half: Vec<Vec<usize>> = vec![Vec::new(); q];
    for v in 0..spec.n {
        class_half[colours[v] as usize].extend((0..d).map(|s| v * d + s));
    }
    // buckets[i][j]: shuffled half-edges of colour i destined for colour j
    let mut split: Vec<Vec<Vec<usize>>> = Vec::with_capacity(q);
    for (i, half) in class_half.iter_mut().enumerate() {
        half.shuffle(rng);
        let mut rows = Vec::with_capacity(q);
        let mut k = 0;
        for j in 0..q {
            rows.push(half[k..k + spec.buckets[i][j]].to_vec());
            k += spec.buckets[i][j];
        }
        split.push(rows);
    }
    let mut edges = Vec::with_capacity(spec.n * d / 2);
    #[allow(clippy::needless_range_loop)]
    for i in 0..q {
        for j in i..q {
            if i == j {
                for c in split[i][i].chunks_exact(2) {
                    edges.push(Edge { u: c[0] / d, v: c[1] / d });
                }
            } else {
                let mut other = split[j][i].clone();
                other.shuffle(rng);
                for (a, b) in split[i][j].iter().zip(&other) {
                    edges.push(Edge { u: a / d, v: b / d });
                }
            }
        }
    }
    let g = Multigraph::from_edges(spec.n, d, edges, Vec::new())?;
    let sigma = SpinConfig::new(&g, spec.q, colours)?;
    Ok((g, sigma))
}

const UNMATCHED: usize = usize::MAX;

/// Planted pair revealed one half-edge at a time.
#[derive(Clone, Debug)]
pub struct LazyPlanted {
    d: usize,
    colours: Vec<u32>,
    partner: Vec<usize>,
    pool: Vec<Vec<usize>>,
    pos: Vec<usize>,
    remaining: Vec<Vec<usize>>,
    free_per_vertex: Vec<usize>,
    edges: Vec<Edge>,
    cursor: usize,
}

impl LazyPlanted {
    pub fn new<R: Rng + ?Sized>(spec: &PlantedSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let colours = planted_colours(spec, rng);
        Ok(Self::with_colours(spec, colours))
    }

    pub fn with_colours(spec: &PlantedSpec, colours: Vec<u32>) -> Self {
        let (q, d) = (spec.q as usize, spec.d as usize);
        let mut pool: Vec<Vec<usize>> = vec![Vec::new(); q];
        let mut pos = vec![0; spec.n * d];
        #[allow(clippy::needless_range_loop)]
        for v in 0..spec.n {
            for s in 0..d {
                let h = v * d + s;
                let c = colours[v] as usize;
                pos[h] = pool[c].len();
                pool[c].push(h);
            }
        }
        LazyPlanted {
            d,
            colours,
            partner: vec![UNMATCHED; spec.n * d],
            pool,
            pos,
            remaining: spec.buckets.clone(),
            free_per_vertex: vec![d; spec.n],
            edges: Vec::new(),
            cursor: 0,
        }
    }

    pub fn colours(&self) -> &[u32] {
        &self.colours
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn revealed_edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn remaining(&self) -> &[Vec<usize>] {
        &self.remaining
    }

    pub fn remaining_total(&self) -> usize {
        self.remaining.iter().flatten().sum()
    }

    pub fn is_matched(&self, h: usize) -> bool {
        self.partner[h] != UNMATCHED
    }

    pub fn free_half_edges(&self, v: usize) -> Vec<usize> {
        (v * self.d..(v + 1) * self.d).filter(|&h| self.partner[h] == UNMATCHED).collect()
    }

    pub fn has_free(&self, v: usize) -> bool {
        self.free_per_vertex[v] > 0
    }

    fn take(&mut self, h: usize) {
        let c = self.colours[h / self.d] as usize;
        let i = self.pos[h];
        let last = *self.pool[c].last().unwrap();
        self.pool[c].swap_remove(i);
        if last != h {
            self.pos[last] = i;
        }
        self.free_per_vertex[h / self.d] -= 1;
    }

    /// Reveal the partner of the unmatched half-edge `h`: choose the partner
    /// colour j with probability proportional to the remaining bucket count,
    /// then a uniform unmatched half-edge of colour j. Returns the partner.
    pub fn match_half_edge<R: Rng + ?Sized>(&mut self, h: usize, rng: &mut R) -> usize {
        assert_eq!(self.partner[h], UNMATCHED, "half-edge already matched");
        let i = self.colours[h / self.d] as usize;
        let total: usize = self.remaining[i].iter().sum();
        let mut r = rng.random_range(0..total);
        let mut j = 0;
        while r >= self.remaining[i][j] {
            r -= self.remaining[i][j];
            j += 1;
        }
        self.take(h);
        let k = rng.random_range(0..self.pool[j].len());
        let z = self.pool[j][k];
        self.take(z);
        self.partner[h] = z;
        self.partner[z] = h;
        if i == j {
            self.remaining[i][i] -= 2;
        } else {
            self.remaining[i][j] -= 1;
            self.remaining[j][i] -= 1;
        }
        self.edges.push(Edge { u: h / self.d, v: z / self.d });
        z
    }

    pub fn lowest_unmatched(&mut self) -> Option<usize> {
        while self.cursor < self.partner.len() && self.partner[self.cursor] != UNMATCHED {
            self.cursor += 1;
        }
        (self.cursor < self.partner.len()).then_some(self.cursor)
    }

    /// Reveal every half-edge of vertices at distance below `radius` from `v`.
    pub fn reveal_ball<R: Rng + ?Sized>(&mut self, v: usize, radius: usize, rng: &mut R) -> RevealedBall {
        let n = self.colours.len();
        let mut dist = vec![usize::MAX; n];
        dist[v] = 0;
        let mut queue = std::collections::VecDeque::from([v]);
        let mut order = vec![v];
        while let Some(x) = queue.pop_front() {
            if dist[x] >= radius {
                continue;
            }
            for h in self.free_half_edges(x) {
                if self.is_matched(h) {
                    continue;
                }
                let y = self.match_half_edge(h, rng) / self.d;
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                    order.push(y);
                }
            }
        }
        order.sort_unstable();
        let sphere = order.iter().copied().filter(|&x| dist[x] == radius).collect();
        RevealedBall { center: v, radius, vertices: order, sphere, dist }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RevealedBall {
    pub center: usize,
    pub radius: usize,
    pub vertices: Vec<usize>,
    pub sphere: Vec<usize>,
    pub dist: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplorationStep {
    pub t: usize,
    pub w: usize,
    pub z: usize,
    /// the exploration had no active vertex and matched an arbitrary half-edge
    pub idle: bool,
    /// z was already active at some earlier time
    pub collision: bool,
    pub monochromatic: bool,
    /// both endpoints lie on the sphere, so the edge belongs to the ball
    pub ball_edge: bool,
    pub survived: bool,
    pub active: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplorationTrace {
    pub steps: Vec<ExplorationStep>,
    pub sphere_size: usize,
    pub t_cap: usize,
    pub k_cap: usize,
    /// collisions among the first `t_cap` matches
    pub k_observed: usize,
    pub active_at_cap: usize,
    /// time at which the active set first became empty
    pub explored_at: Option<usize>,
    pub shattered: bool,
    /// sphere size minus the number of distinct explored components meeting it
    pub sphere_merges: usize,
}

impl ExplorationTrace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,w,z,idle,collision,monochromatic,ball_edge,survived,active\n");
        for x in &self.steps {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                x.t, x.w, x.z, x.idle as u8, x.collision as u8, x.monochromatic as u8, x.ball_edge as u8, x.survived as u8, x.active
            ));
        }
        s
    }
}

pub fn default_t_cap(n: usize, eps: f64) -> usize {
    (n as f64).powf(0.5 - eps).floor() as usize
}

pub fn default_k_cap(eps: f64) -> usize {
    (10.0 / eps).ceil() as usize
}

pub fn default_radius(n: usize, d: u32, eps: f64) -> usize {
    ((0.5 - 2.0 * eps) * (n as f64).ln() / (d as f64 - 1.0).ln()).floor().max(0.0) as usize
}

/// Explore the percolated components of the sphere vertices, revealing
/// half-edges one at a time. Runs until no vertex is active and the step
/// counter exceeds `t_cap`.
pub fn explore_shattering<R: Rng + ?Sized>(
    lazy: &mut LazyPlanted,
    ball: &RevealedBall,
    p: f64,
    t_cap: usize,
    k_cap: usize,
    rng: &mut R,
) -> ExplorationTrace {
    let n = lazy.colours.len();
    let d = lazy.d;
    let mut in_sphere = vec![false; n];
    for &s in &ball.sphere {
        in_sphere[s] = true;
    }
    let mut active: BTreeSet<usize> = ball.sphere.iter().copied().collect();
    let mut ever = in_sphere.clone();
    let mut dsu = Dsu::new(n);
    let mut steps = Vec::new();
    let (mut t, mut k_observed) = (0usize, 0usize);
    let mut active_at_cap = (t_cap == 0).then_some(active.len());
    let mut explored_at = None;
    loop {
        if active.is_empty() {
            explored_at.get_or_insert(t);
            if t > t_cap {
                break;
            }
            let Some(h) = lazy.lowest_unmatched() else { break };
            t += 1;
            let z = lazy.match_half_edge(h, rng) / d;
            let collision = ever[z];
            k_observed += (collision && t <= t_cap) as usize;
            let w = h / d;
            steps.push(ExplorationStep {
                t,
                w,
                z,
                idle: true,
                collision,
                monochromatic: lazy.colours[w] == lazy.colours[z],
                ball_edge: false,
                survived: false,
                active: 0,
            });
            if t == t_cap {
                active_at_cap = Some(0);
            }
            continue;
        }
        let w = *active.iter().next().unwrap();
        let mut last_t = None;
        for h in lazy.free_half_edges(w) {
            if lazy.is_matched(h) {
                continue;
            }
            t += 1;
            let z = lazy.match_half_edge(h, rng) / d;
            let collision = ever[z];
            k_observed += (collision && t <= t_cap) as usize;
            let monochromatic = lazy.colours[w] == lazy.colours[z];
            let ball_edge = in_sphere[w] && in_sphere[z];
            let survived = monochromatic && !ball_edge && rng.random::<f64>() < p;
            if survived {
                dsu.union(w, z);
                active.insert(z);
                ever[z] = true;
            }
            steps.push(ExplorationStep {
                t,
                w,
                z,
                idle: false,
                collision,
                monochromatic,
                ball_edge,
                survived,
                active: active.len(),
            });
            if t == t_cap {
                active_at_cap = Some(active.len());
            }
            last_t = Some(t);
        }
        active.remove(&w);
        active.retain(|&x| lazy.has_free(x));
        if last_t == Some(t_cap) || (last_t.is_none() && t == t_cap && active_at_cap.is_none()) {
            active_at_cap = Some(active.len());
        }
        if let Some(s) = steps.last_mut() {
            if last_t.is_some() {
                s.active = active.len();
            }
        }
    }
    let active_at_cap = active_at_cap.unwrap_or(0);
    let mut roots: Vec<usize> = ball.sphere.iter().map(|&s| dsu.find(s)).collect();
    roots.sort_unstable();
    roots.dedup();
    let sphere_merges = ball.sphere.len() - roots.len();
    ExplorationTrace {
        steps,
        sphere_size: ball.sphere.len(),
        t_cap,
        k_cap,
        k_observed,
        active_at_cap,
        explored_at,
        shattered: k_observed <= k_cap && active_at_cap == 0,
        sphere_merges,
    }
}

/// Colour a fresh planted pair, reveal `B_radius(v)` and explore from its sphere.
#[allow(clippy::too_many_arguments)]
pub fn run_exploration<R: Rng + ?Sized>(
    spec: &PlantedSpec,
    v: usize,
    radius: usize,
    p: f64,
    t_cap: usize,
    k_cap: usize,
    rng: &mut R,
) -> Result<ExplorationTrace> {
    if v >= spec.n {
        return Err(Error::VertexOutOfRange(v, spec.n));
    }
    let mut lazy = LazyPlanted::new(spec, rng)?;
    let ball = lazy.reveal_ball(v, radius, rng);
    Ok(explore_shattering(&mut lazy, &ball, p, t_cap, k_cap, rng))
}
