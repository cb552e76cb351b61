//! Configuration-model multigraphs, balls and component labellings.

use crate::dsu::Dsu;
use crate::error::{invalid, Error, Result};
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::VecDeque;
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
}

impl Edge {
    pub fn is_loop(&self) -> bool {
        self.u == self.v
    }

    pub fn other(&self, x: usize) -> usize {
        if self.u == x {
            self.v
        } else {
            self.u
        }
    }
}

/// A multigraph built from a pairing of half-edges. Self-loops and parallel
/// edges are kept; edge ids follow pairing order.
#[derive(Clone, Debug, PartialEq)]
pub struct Multigraph {
    n: usize,
    d: usize,
    edges: Vec<Edge>,
    /// unmatched half-edges as (vertex, slot)
    free: Vec<(usize, usize)>,
    /// per vertex: (edge id, neighbour); a self-loop appears twice
    adj: Vec<Vec<(usize, usize)>>,
}

impl Multigraph {
    /// Build from an explicit edge list; `d` is the nominal maximum degree.
    pub fn from_edges(n: usize, d: usize, edges: Vec<Edge>, free: Vec<(usize, usize)>) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for (id, e) in edges.iter().enumerate() {
            if e.u >= n {
                return Err(Error::VertexOutOfRange(e.u, n));
            }
            if e.v >= n {
                return Err(Error::VertexOutOfRange(e.v, n));
            }
            adj[e.u].push((id, e.v));
            adj[e.v].push((id, e.u));
        }
        for &(v, _) in &free {
            if v >= n {
                return Err(Error::VertexOutOfRange(v, n));
            }
        }
        Ok(Multigraph { n, d, edges, free, adj })
    }

    /// Convenience constructor from `(u, v)` pairs.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let edges: Vec<Edge> = pairs.iter().map(|&(u, v)| Edge { u, v }).collect();
        let mut deg = vec![0usize; n];
        for e in &edges {
            if e.u < n && e.v < n {
                deg[e.u] += 1;
                deg[e.v] += 1;
            }
        }
        let d = deg.iter().copied().max().unwrap_or(0);
        Self::from_edges(n, d, edges, Vec::new())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> Edge {
        self.edges[id]
    }

    pub fn free_half_edges(&self) -> &[(usize, usize)] {
        &self.free
    }

    pub fn neighbours(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn self_loops(&self) -> usize {
        self.edges.iter().filter(|e| e.is_loop()).count()
    }

    /// Number of extra copies among parallel edges.
    pub fn multi_edges(&self) -> usize {
        let mut keys: Vec<(usize, usize)> =
            self.edges.iter().filter(|e| !e.is_loop()).map(|e| (e.u.min(e.v), e.u.max(e.v))).collect();
        keys.sort_unstable();
        keys.windows(2).filter(|w| w[0] == w[1]).count()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {} {}", self.n, self.d, self.m());
        for (id, e) in self.edges.iter().enumerate() {
            let _ = writeln!(s, "{id} {} {}", e.u, e.v);
        }
        if !self.free.is_empty() {
            s.push_str("#free\n");
            for &(v, slot) in &self.free {
                let _ = writeln!(s, "{v} {slot}");
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let parse = |line: usize, l: &str, k: usize| -> Result<Vec<usize>> {
            let v: std::result::Result<Vec<usize>, _> = l.split_whitespace().map(str::parse).collect();
            match v {
                Ok(v) if v.len() == k => Ok(v),
                _ => Err(Error::Parse { line: line + 1, msg: format!("expected {k} integers") }),
            }
        };
        let (i, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty input".into() })?;
        let h = parse(i, header, 3)?;
        let (n, d, m) = (h[0], h[1], h[2]);
        let mut edges = Vec::with_capacity(m);
        let mut free = Vec::new();
        let mut in_free = false;
        for (i, l) in lines {
            if l.trim() == "#free" {
                in_free = true;
                continue;
            }
            if in_free {
                let f = parse(i, l, 2)?;
                free.push((f[0], f[1]));
            } else {
                let e = parse(i, l, 3)?;
                if e[0] != edges.len() {
                    return Err(Error::Parse { line: i + 1, msg: format!("edge id {} out of order", e[0]) });
                }
                edges.push(Edge { u: e[1], v: e[2] });
            }
        }
        if edges.len() != m {
            return Err(Error::Parse { line: 1, msg: format!("header says {m} edges, found {}", edges.len()) });
        }
        Self::from_edges(n, d, edges, free)
    }
}

/// Uniform configuration model on `n` vertices of degree `d`.
pub fn sample_configuration_model<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<Multigraph> {
    if n == 0 || d == 0 {
        return Err(invalid("n and d must be positive"));
    }
    let total = n as u64 * d as u64;
    if total % 2 == 1 {
        return Err(Error::OddHalfEdges(total));
    }
    let mut half: Vec<usize> = (0..n * d).collect();
    half.shuffle(rng);
    let edges = half.chunks_exact(2).map(|c| Edge { u: c[0] / d, v: c[1] / d }).collect();
    Multigraph::from_edges(n, d, edges, Vec::new())
}

/// Exact-edge model: `m` uniformly chosen disjoint pairs of half-edges for
/// the given degree sequence; the rest stay unmatched.
pub fn sample_exact_edge_model<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    degree_seq: &[usize],
    m: usize,
    rng: &mut R,
) -> Result<Multigraph> {
    if degree_seq.len() != n {
        return Err(invalid(format!("degree sequence has length {}, expected {n}", degree_seq.len())));
    }
    if let Some(&bad) = degree_seq.iter().find(|&&k| k > d) {
        return Err(invalid(format!("degree {bad} exceeds d={d}")));
    }
    let mut half: Vec<(usize, usize)> = Vec::new();
    for (v, &k) in degree_seq.iter().enumerate() {
        half.extend((0..k).map(|s| (v, s)));
    }
    if 2 * m > half.len() {
        return Err(invalid(format!("m={m} needs {} half-edges, only {} available", 2 * m, half.len())));
    }
    half.shuffle(rng);
    let edges = half[..2 * m].chunks_exact(2).map(|c| Edge { u: c[0].0, v: c[1].0 }).collect();
    let mut free = half[2 * m..].to_vec();
    free.sort_unstable();
    Multigraph::from_edges(n, d, edges, free)
}

/// Graph distances from `v` up to `max_dist` (`usize::MAX` for unreached).
pub fn distances(g: &Multigraph, v: usize, max_dist: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; g.n()];
    dist[v] = 0;
    let mut q = VecDeque::from([v]);
    while let Some(x) = q.pop_front() {
        if dist[x] == max_dist {
            continue;
        }
        for &(_, y) in g.neighbours(x) {
            if dist[y] == usize::MAX {
                dist[y] = dist[x] + 1;
                q.push_back(y);
            }
        }
    }
    dist
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    pub center: usize,
    pub radius: usize,
    /// sorted vertex ids at distance <= radius
    pub vertices: Vec<usize>,
    /// sorted vertex ids at distance exactly radius
    pub sphere: Vec<usize>,
    /// sorted ids of edges with both endpoints in the ball (none for radius 0)
    pub edges: Vec<usize>,
    pub excess: i64,
}

impl Ball {
    pub fn contains(&self, v: usize) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }

    pub fn contains_edge(&self, e: usize) -> bool {
        self.edges.binary_search(&e).is_ok()
    }

    pub fn in_sphere(&self, v: usize) -> bool {
        self.sphere.binary_search(&v).is_ok()
    }
}

pub fn ball(g: &Multigraph, v: usize, radius: usize) -> Result<Ball> {
    if v >= g.n() {
        return Err(Error::VertexOutOfRange(v, g.n()));
    }
    let dist = distances(g, v, radius);
    let vertices: Vec<usize> = (0..g.n()).filter(|&x| dist[x] != usize::MAX).collect();
    let sphere: Vec<usize> = vertices.iter().copied().filter(|&x| dist[x] == radius).collect();
    let mut edges = Vec::new();
    if radius > 0 {
        for &x in &vertices {
            for &(e, y) in g.neighbours(x) {
                if dist[y] != usize::MAX && x <= y {
                    edges.push(e);
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
    }
    let mut dsu = Dsu::new(g.n());
    for &e in &edges {
        let ed = g.edge(e);
        dsu.union(ed.u, ed.v);
    }
    let mut roots: Vec<usize> = vertices.iter().map(|&x| dsu.find(x)).collect();
    roots.sort_unstable();
    roots.dedup();
    let excess = edges.len() as i64 - vertices.len() as i64 + roots.len() as i64;
    Ok(Ball { center: v, radius, vertices, sphere, edges, excess })
}

/// Component labelling; each label is the smallest vertex id in its component.
#[derive(Clone, Debug, PartialEq)]
pub struct Components {
    pub label: Vec<usize>,
    /// (label, size) sorted by label
    pub sizes: Vec<(usize, usize)>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    pub fn largest(&self) -> usize {
        self.sizes.iter().map(|&(_, s)| s).max().unwrap_or(0)
    }

    /// Label of the largest component, ties broken by smallest label.
    pub fn largest_label(&self) -> Option<usize> {
        self.sizes.iter().max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0))).map(|&(l, _)| l)
    }

    pub fn size_of(&self, v: usize) -> usize {
        let l = self.label[v];
        self.sizes[self.sizes.binary_search_by_key(&l, |&(k, _)| k).unwrap()].1
    }
}

/// Components of `(V, edges)` where `edges` are `(u, v)` pairs.
pub fn components_from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Components {
    let mut dsu = Dsu::new(n);
    for (u, v) in pairs {
        dsu.union(u, v);
    }
    let mut min_of_root = vec![usize::MAX; n];
    for x in 0..n {
        let r = dsu.find(x);
        if min_of_root[r] == usize::MAX {
            min_of_root[r] = x;
        }
    }
    let label: Vec<usize> = (0..n).map(|x| min_of_root[dsu.find(x)]).collect();
    let mut counts = vec![0usize; n];
    for &l in &label {
        counts[l] += 1;
    }
    let sizes = (0..n).filter(|&l| counts[l] > 0).map(|l| (l, counts[l])).collect();
    Components { label, sizes }
}

/// Components of `(V, {e in g : keep(e)})`.
pub fn components(g: &Multigraph, keep: impl Fn(usize) -> bool) -> Components {
    components_from_pairs(
        g.n(),
        g.edges().iter().enumerate().filter(|(id, _)| keep(*id)).map(|(_, e)| (e.u, e.v)),
    )
}

/// Search for a simple path of exactly `length` edges from `v` whose vertices
/// other than `v` all avoid `forbidden`. Returns the vertex sequence.
pub fn find_avoiding_path(
    g: &Multigraph,
    v: usize,
    length: usize,
    forbidden: &dyn Fn(usize) -> bool,
    budget: u64,
) -> Result<Option<Vec<usize>>> {
    if v >= g.n() {
        return Err(Error::VertexOutOfRange(v, g.n()));
    }
    if length == 0 {
        return Ok(Some(vec![v]));
    }
    let mut on_path = vec![false; g.n()];
    let mut path = vec![v];
    let mut cursor = vec![0usize];
    on_path[v] = true;
    let mut visited: u64 = 0;
    while let Some(&x) = path.last() {
        let depth = path.len() - 1;
        let i = *cursor.last().unwrap();
        if depth == length {
            return Ok(Some(path));
        }
        if i >= g.neighbours(x).len() {
            on_path[x] = false;
            path.pop();
            cursor.pop();
            continue;
        }
        *cursor.last_mut().unwrap() += 1;
        let y = g.neighbours(x)[i].1;
        if on_path[y] || forbidden(y) {
            continue;
        }
        visited += 1;
        if visited > budget {
            return Err(Error::BudgetExceeded(budget));
        }
        on_path[y] = true;
        path.push(y);
        cursor.push(0);
    }
    Ok(None)
}

pub fn exists_avoiding_path(
    g: &Multigraph,
    v: usize,
    length: usize,
    forbidden: &dyn Fn(usize) -> bool,
    budget: u64,
) -> Result<bool> {
    find_avoiding_path(g, v, length, forbidden, budget).map(|p| p.is_some())
}
