//! Potts spin configurations, colour statistics and the Edwards-Sokal coupling.

use crate::error::{invalid, Error, Result};
use crate::graph::{components, Multigraph};
use crate::phase::PhaseProfile;
use crate::rcdyn::{ConnectivityMode, EdgeConfig};
use bitvec::prelude::*;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Colour assignment with cached class counts and monochromatic edge count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinConfig {
    q: u32,
    colours: Vec<u32>,
    counts: Vec<usize>,
    mono: usize,
}

impl SpinConfig {
    pub fn new(g: &Multigraph, q: u32, colours: Vec<u32>) -> Result<Self> {
        if colours.len() != g.n() {
            return Err(invalid(format!("{} colours for {} vertices", colours.len(), g.n())));
        }
        if let Some(&c) = colours.iter().find(|&&c| c >= q) {
            return Err(invalid(format!("colour {} out of range 1..={q}", c + 1)));
        }
        let mut counts = vec![0usize; q as usize];
        for &c in &colours {
            counts[c as usize] += 1;
        }
        let mono = g.edges().iter().filter(|e| colours[e.u] == colours[e.v]).count();
        Ok(SpinConfig { q, colours, counts, mono })
    }

    pub fn uniform<R: Rng + ?Sized>(g: &Multigraph, q: u32, rng: &mut R) -> Self {
        let colours = (0..g.n()).map(|_| rng.random_range(0..q)).collect();
        Self::new(g, q, colours).expect("colours in range")
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn colours(&self) -> &[u32] {
        &self.colours
    }

    pub fn colour(&self, v: usize) -> u32 {
        self.colours[v]
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn monochromatic(&self) -> usize {
        self.mono
    }

    pub fn recolour(&mut self, g: &Multigraph, v: usize, c: u32) -> Result<()> {
        if c >= self.q {
            return Err(invalid(format!("colour {} out of range 1..={}", c + 1, self.q)));
        }
        let old = self.colours[v];
        if old == c {
            return Ok(());
        }
        for &(_, w) in g.neighbours(v) {
            if w == v {
                continue;
            }
            let cw = self.colours[w];
            if cw == old {
                self.mono -= 1;
            }
            if cw == c {
                self.mono += 1;
            }
        }
        self.colours[v] = c;
        self.counts[old as usize] -= 1;
        self.counts[c as usize] += 1;
        Ok(())
    }

    /// Spin file: header `n q`, then one colour in `1..=q` per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.colours.len(), self.q);
        for &c in &self.colours {
            let _ = writeln!(s, "{}", c + 1);
        }
        s
    }

    pub fn from_text(g: &Multigraph, text: &str) -> Result<Self> {
        let mut it = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = it.next().ok_or(Error::Parse { line: 1, msg: "empty input".into() })?;
        let h: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse { line: 1, msg: "expected `n q`".into() })?;
        if h.len() != 2 {
            return Err(Error::Parse { line: 1, msg: "expected `n q`".into() });
        }
        let mut colours = Vec::with_capacity(h[0]);
        for (i, l) in it {
            let c: u32 = l.trim().parse().map_err(|_| Error::Parse { line: i + 1, msg: "bad colour".into() })?;
            if c == 0 || c > h[1] as u32 {
                return Err(Error::Parse { line: i + 1, msg: format!("colour {c} out of range 1..={}", h[1]) });
            }
            colours.push(c - 1);
        }
        if colours.len() != h[0] {
            return Err(Error::Parse { line: 1, msg: format!("expected {} colours, found {}", h[0], colours.len()) });
        }
        Self::new(g, h[1] as u32, colours)
    }
}

/// Empirical vertex and edge colour statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColourStats {
    pub nu: Vec<f64>,
    /// ordered-pair frequencies over half-edge pairs; symmetric, sums to 1
    pub rho: Vec<Vec<f64>>,
}

pub fn colour_stats(g: &Multigraph, sigma: &SpinConfig) -> ColourStats {
    let q = sigma.q as usize;
    let n = g.n() as f64;
    let nu = sigma.counts.iter().map(|&c| c as f64 / n).collect();
    let mut rho = vec![vec![0.0; q]; q];
    let denom = 2.0 * g.m() as f64;
    for e in g.edges() {
        let (a, b) = (sigma.colours[e.u] as usize, sigma.colours[e.v] as usize);
        rho[a][b] += 1.0 / denom;
        rho[b][a] += 1.0 / denom;
    }
    ColourStats { nu, rho }
}

/// `beta * m(sigma)`, the unnormalised log-weight.
pub fn potts_weight_log(g: &Multigraph, sigma: &SpinConfig, beta: f64) -> f64 {
    debug_assert_eq!(sigma.colours.len(), g.n());
    beta * sigma.mono as f64
}

/// Keep each monochromatic edge independently with probability `p`.
pub fn percolate<R: Rng + ?Sized>(g: &Multigraph, sigma: &SpinConfig, p: f64, rng: &mut R) -> EdgeConfig {
    let mut bits = bitvec![0; g.m()];
    for (id, e) in g.edges().iter().enumerate() {
        if sigma.colours[e.u] == sigma.colours[e.v] && rng.random::<f64>() < p {
            bits.set(id, true);
        }
    }
    EdgeConfig::from_bits(g, bits, ConnectivityMode::OnDemand)
}

/// Colour every component of `(V, F)` with an independent uniform colour.
pub fn colour_components<R: Rng + ?Sized>(g: &Multigraph, f: &EdgeConfig, q: u32, rng: &mut R) -> SpinConfig {
    let comps = components(g, |e| f.contains(e));
    let mut colour_of = vec![u32::MAX; g.n()];
    for &(label, _) in &comps.sizes {
        colour_of[label] = rng.random_range(0..q);
    }
    let colours = comps.label.iter().map(|&l| colour_of[l]).collect();
    SpinConfig::new(g, q, colours).expect("colours in range")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Membership {
    Disordered,
    /// ordered with the given dominant colour (0-based)
    OrderedDominant(u32),
    Neither,
}

/// Classify `sigma` by l1 distance of its colour frequencies to `nu_dis` and
/// to the permutations of `nu_ord`.
pub fn phase_membership(sigma: &SpinConfig, profile: &PhaseProfile, theta: f64) -> Result<Membership> {
    let q = profile.q as usize;
    if sigma.q as usize != q {
        return Err(invalid("spin configuration and profile disagree on q"));
    }
    if let Some(o) = profile.ordered {
        // half the smallest pairwise distance among nu_dis and the permutations of nu_ord
        let guard = o.a - 1.0 / q as f64;
        if theta >= guard {
            return Err(invalid(format!("theta={theta} must be below {guard}")));
        }
    }
    let n: usize = sigma.counts.iter().sum();
    let freq: Vec<f64> = sigma.counts.iter().map(|&c| c as f64 / n as f64).collect();
    let dis: f64 = freq.iter().map(|f| (f - 1.0 / q as f64).abs()).sum();
    if dis <= theta {
        return Ok(Membership::Disordered);
    }
    if let Some(o) = profile.ordered {
        for k in 0..q {
            let dist: f64 =
                freq.iter().enumerate().map(|(i, f)| (f - if i == k { o.nu.first } else { o.nu.rest }).abs()).sum();
            if dist <= theta {
                return Ok(Membership::OrderedDominant(k as u32));
            }
        }
    }
    Ok(Membership::Neither)
}
