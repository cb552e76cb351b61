//! Thresholds, fixed points and phase profiles of the Potts model on random
//! d-regular graphs, plus the associated percolation quantities.

use crate::error::{invalid, Error, Result};
use crate::xfloat::DD;
use serde::{Deserialize, Serialize};

/// Numerical tolerances and grid settings.
pub mod tol {
    pub const PROBES_PER_DECADE: usize = 64;
    pub const S_MIN: f64 = 1e-12;
    pub const S_MAX: f64 = 1e6;
    pub const ROOT_REL_RESIDUAL: f64 = 1e-11;
    pub const GW_RESIDUAL: f64 = 1e-12;
    pub const BISECTION_ITERS: usize = 200;
}

pub fn check_qd(q: u32, d: u32) -> Result<()> {
    if q < 3 {
        return Err(invalid(format!("q must be >= 3, got {q}")));
    }
    if d < 3 {
        return Err(invalid(format!("d must be >= 3, got {d}")));
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(invalid(format!("beta must be positive and finite, got {beta}")));
    }
    Ok(())
}

/// Edge retention probability `1 - e^{-beta}`.
pub fn p_of_beta(beta: f64) -> f64 {
    -(-beta).exp_m1()
}

/// Inverse of [`p_of_beta`].
pub fn beta_of_p(p: f64) -> f64 {
    -(-p).ln_1p()
}

/// Cut-edge inclusion probability `p / ((1-p) q + p)`.
pub fn p_hat(q: f64, beta: f64) -> f64 {
    let c = beta.exp_m1();
    c / (q + c)
}

pub fn beta_c(q: u32, d: u32) -> Result<f64> {
    check_qd(q, d)?;
    let (qf, df) = (q as f64, d as f64);
    let den = ((1.0 - 2.0 / df) * (qf - 1.0).ln()).exp_m1();
    Ok(((qf - 2.0) / den).ln())
}

pub fn beta_c_extended(q: u32, d: u32) -> Result<DD> {
    check_qd(q, d)?;
    let one = DD::ONE;
    let e = one - DD::new(2.0) / DD::new(d as f64);
    let den = DD::new(q as f64 - 1.0).powf(e) - one;
    Ok((DD::new(q as f64 - 2.0) / den).ln())
}

/// `ln(1 + q/(d-1))`.
pub fn beta_u_prime(q: u32, d: u32) -> Result<f64> {
    check_qd(q, d)?;
    Ok((q as f64 / (d as f64 - 1.0)).ln_1p())
}

/// `ln(1 + q/(d-2))`, the point where the cut-edge probability equals `1/(d-1)`.
pub fn beta_u_prime_alt(q: u32, d: u32) -> Result<f64> {
    check_qd(q, d)?;
    Ok((q as f64 / (d as f64 - 2.0)).ln_1p())
}

pub fn beta_u_prime_alt_extended(q: u32, d: u32) -> Result<DD> {
    check_qd(q, d)?;
    Ok((DD::ONE + DD::new(q as f64) / DD::new(d as f64 - 2.0)).ln())
}

/// Right-hand side of the fixed-point equation `e^beta - 1 = h(t)` written in
/// `s = t - 1`.
pub fn fixed_point_rhs(q: u32, d: u32, s: f64) -> f64 {
    let (qf, df) = (q as f64, d as f64);
    let t = 1.0 + s;
    let td1 = t.powi(d as i32 - 1);
    s * (td1 + qf - 1.0) / (t * ((df - 2.0) * s.ln_1p()).exp_m1())
}

fn s_upper(q: u32) -> f64 {
    tol::S_MAX.max(10.0 * q as f64)
}

fn log_grid(lo: f64, hi: f64) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let k = (decades * tol::PROBES_PER_DECADE as f64).ceil() as usize;
    (0..=k).map(|i| lo * 10f64.powf(decades * i as f64 / k as f64)).collect()
}

/// Minimise `h(1+s)` over `s > 0`; returns `(s*, h(1+s*))`.
fn minimise_rhs(q: u32, d: u32) -> (f64, f64) {
    let f = |u: f64| fixed_point_rhs(q, d, u.exp());
    let grid: Vec<f64> = log_grid(tol::S_MIN, s_upper(q)).iter().map(|s| s.ln()).collect();
    let (mut best, mut best_v) = (0, f64::INFINITY);
    for (i, &u) in grid.iter().enumerate() {
        let v = f(u);
        if v < best_v {
            best = i;
            best_v = v;
        }
    }
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    // golden-section search on ln s
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if b - a < 1e-13 {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    let u = 0.5 * (a + b);
    let v = f(u).min(best_v);
    (u.exp(), v)
}

/// Largest root `t > 1` of `e^beta - 1 = h(t)`.
pub fn solve_t(q: u32, d: u32, beta: f64) -> Result<f64> {
    check_qd(q, d)?;
    check_beta(beta)?;
    let c = beta.exp_m1();
    let g = |s: f64| fixed_point_rhs(q, d, s) - c;
    // h(1+s) >= s, so g(c) >= 0
    let s_hi = c.max(tol::S_MIN * 10.0);
    let mut bracket = None;
    let grid = log_grid(tol::S_MIN, s_hi);
    let mut prev = s_hi;
    for &s in grid.iter().rev().skip(1) {
        if g(s) < 0.0 {
            bracket = Some((s, prev));
            break;
        }
        prev = s;
    }
    if bracket.is_none() {
        let (s_min, h_min) = minimise_rhs(q, d);
        if h_min <= c && s_min < s_hi {
            if g(s_min) >= 0.0 {
                return Ok(1.0 + s_min);
            }
            bracket = Some((s_min, s_hi));
        }
    }
    let (mut lo, mut hi) = bracket.ok_or(Error::NoRoot { q, d, beta })?;
    for _ in 0..tol::BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = if g(lo).abs() < g(hi).abs() { lo } else { hi };
    let residual = g(s).abs() / c;
    if residual > tol::ROOT_REL_RESIDUAL {
        return Err(Error::Residual { residual, tolerance: tol::ROOT_REL_RESIDUAL });
    }
    Ok(1.0 + s)
}

/// Uniqueness threshold: the smallest beta for which a root `t > 1` exists.
pub fn beta_u(q: u32, d: u32) -> Result<f64> {
    check_qd(q, d)?;
    let (_, h_min) = minimise_rhs(q, d);
    Ok(h_min.ln_1p())
}

/// Same threshold located by bisection on solvability of [`solve_t`].
pub fn beta_u_by_bisection(q: u32, d: u32) -> Result<f64> {
    check_qd(q, d)?;
    let solvable = |b: f64| solve_t(q, d, b).is_ok();
    let hi0 = beta_u_prime_alt(q, d)? + 1.0;
    let lo0 = 1e-6;
    let probes = 64;
    let mut seen_true = false;
    for i in 0..=probes {
        let b = lo0 + (hi0 - lo0) * i as f64 / probes as f64;
        let s = solvable(b);
        if seen_true && !s {
            return Err(Error::NonBracketing(b));
        }
        seen_true |= s;
    }
    if solvable(lo0) || !solvable(hi0) {
        return Err(Error::NonBracketing(lo0));
    }
    let (mut lo, mut hi) = (lo0, hi0);
    for _ in 0..tol::BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if solvable(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// A colour vector with one distinguished entry (colour 0) and `q-1` equal entries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColourVector {
    pub q: u32,
    pub first: f64,
    pub rest: f64,
}

impl ColourVector {
    pub fn get(&self, i: usize) -> f64 {
        if i == 0 {
            self.first
        } else {
            self.rest
        }
    }

    pub fn sum(&self) -> f64 {
        self.first + (self.q as f64 - 1.0) * self.rest
    }

    pub fn to_vec(&self) -> Vec<f64> {
        (0..self.q as usize).map(|i| self.get(i)).collect()
    }
}

/// Symmetric q x q matrix invariant under permutations fixing colour 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColourMatrix {
    pub q: u32,
    pub d00: f64,
    pub d0j: f64,
    pub djj: f64,
    pub djk: f64,
}

impl ColourMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i == 0, j == 0, i == j) {
            (true, true, _) => self.d00,
            (true, false, _) | (false, true, _) => self.d0j,
            (false, false, true) => self.djj,
            _ => self.djk,
        }
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        let r = self.q as f64 - 1.0;
        if i == 0 {
            self.d00 + r * self.d0j
        } else {
            self.d0j + self.djj + (r - 1.0) * self.djk
        }
    }

    pub fn sum(&self) -> f64 {
        let r = self.q as f64 - 1.0;
        self.d00 + 2.0 * r * self.d0j + r * self.djj + r * (r - 1.0) * self.djk
    }

    pub fn trace(&self) -> f64 {
        self.d00 + (self.q as f64 - 1.0) * self.djj
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let q = self.q as usize;
        (0..q).map(|i| (0..q).map(|j| self.get(i, j)).collect()).collect()
    }
}

pub fn nu_dis(q: u32) -> ColourVector {
    ColourVector { q, first: 1.0 / q as f64, rest: 1.0 / q as f64 }
}

pub fn rho_dis(q: u32, beta: f64) -> ColourMatrix {
    let eb = beta.exp();
    let w = q as f64 * (eb + q as f64 - 1.0);
    ColourMatrix { q, d00: eb / w, d0j: 1.0 / w, djj: eb / w, djk: 1.0 / w }
}

/// `a = t^d / (t^d + q - 1)`.
pub fn ordered_a(q: u32, d: u32, t: f64) -> f64 {
    let td = t.powi(d as i32);
    td / (td + q as f64 - 1.0)
}

pub fn nu_ord(q: u32, d: u32, t: f64) -> ColourVector {
    let td = t.powi(d as i32);
    let w = td + q as f64 - 1.0;
    ColourVector { q, first: td / w, rest: 1.0 / w }
}

pub fn rho_ord(q: u32, d: u32, beta: f64, t: f64) -> ColourMatrix {
    let eb = beta.exp();
    let u = t.powi(d as i32 - 1);
    let r = q as f64 - 1.0;
    let w = eb * u * u + 2.0 * r * u + r * eb + r * (r - 1.0);
    ColourMatrix { q, d00: eb * u * u / w, d0j: u / w, djj: eb / w, djk: 1.0 / w }
}

/// Edge density (edges per vertex) of the disordered phase.
pub fn m_dis(q: u32, d: u32, beta: f64) -> f64 {
    let c = beta.exp_m1();
    0.5 * d as f64 * c / (c + q as f64)
}

/// Edge density of the ordered phase for the fixed point `t`.
pub fn m_ord(q: u32, d: u32, beta: f64, t: f64) -> f64 {
    let u = t.powi(d as i32 - 1);
    let r = q as f64 - 1.0;
    let x = u / (u + r);
    let y = r / (u + r);
    let s = x * x + y * y / r;
    let cs = beta.exp_m1() * s;
    0.5 * d as f64 * cs / (1.0 + cs)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderedPhase {
    pub t: f64,
    pub a: f64,
    pub nu: ColourVector,
    pub rho: ColourMatrix,
    pub m: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseProfile {
    pub q: u32,
    pub d: u32,
    pub beta: f64,
    pub p: f64,
    pub p_hat: f64,
    pub beta_u: f64,
    pub beta_c: f64,
    pub beta_u_prime: f64,
    pub beta_u_prime_alt: f64,
    pub nu_dis: ColourVector,
    pub rho_dis: ColourMatrix,
    pub m_dis: f64,
    pub ordered: Option<OrderedPhase>,
    pub t_c: f64,
    pub m_dis_c: f64,
    pub m_ord_c: f64,
    pub rho_gap: f64,
}

impl PhaseProfile {
    pub fn compute(q: u32, d: u32, beta: f64) -> Result<Self> {
        check_qd(q, d)?;
        check_beta(beta)?;
        let bu = beta_u(q, d)?;
        let bc = beta_c(q, d)?;
        let ordered = if beta >= bu {
            match solve_t(q, d, beta) {
                Ok(t) => Some(OrderedPhase {
                    t,
                    a: ordered_a(q, d, t),
                    nu: nu_ord(q, d, t),
                    rho: rho_ord(q, d, beta, t),
                    m: m_ord(q, d, beta, t),
                }),
                Err(Error::NoRoot { .. }) => None,
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        let t_c = solve_t(q, d, bc)?;
        let m_dis_c = m_dis(q, d, bc);
        let m_ord_c = m_ord(q, d, bc, t_c);
        Ok(PhaseProfile {
            q,
            d,
            beta,
            p: p_of_beta(beta),
            p_hat: p_hat(q as f64, beta),
            beta_u: bu,
            beta_c: bc,
            beta_u_prime: beta_u_prime(q, d)?,
            beta_u_prime_alt: beta_u_prime_alt(q, d)?,
            nu_dis: nu_dis(q),
            rho_dis: rho_dis(q, beta),
            m_dis: m_dis(q, d, beta),
            ordered,
            t_c,
            m_dis_c,
            m_ord_c,
            rho_gap: m_ord_c - m_dis_c,
        })
    }

    pub fn windows(&self, n: usize) -> PhaseWindows {
        PhaseWindows::new(n, self.m_dis_c, self.m_ord_c)
    }
}

/// Edge-count windows separating the two phases on an n-vertex graph.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseWindows {
    /// |F| <= dis_max is the disordered window
    pub dis_max: usize,
    /// |F| >= ord_min is the ordered window
    pub ord_min: usize,
}

impl PhaseWindows {
    pub fn new(n: usize, m_dis_c: f64, m_ord_c: f64) -> Self {
        let n = n as f64;
        let gap = m_ord_c - m_dis_c;
        PhaseWindows {
            dis_max: (n * m_dis_c + n * gap / 4.0).floor() as usize,
            ord_min: (n * m_ord_c - n * gap / 4.0).ceil() as usize,
        }
    }

    pub fn label(&self, size: usize) -> crate::phase::Phase {
        if size <= self.dis_max {
            Phase::Disordered
        } else if size >= self.ord_min {
            Phase::Ordered
        } else {
            Phase::Neither
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Disordered,
    Ordered,
    Neither,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Disordered => "dis",
            Phase::Ordered => "ord",
            Phase::Neither => "neither",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GwSolution {
    pub phi: f64,
    pub chi: f64,
    pub phi_hat: f64,
}

/// Extinction probability of the branching process with `Bin(d-1, p)`
/// offspring, the giant fraction of bond percolation, and the edge-rooted
/// extinction probability.
pub fn gw_solution(d: u32, p: f64) -> Result<GwSolution> {
    if d < 3 {
        return Err(invalid(format!("d must be >= 3, got {d}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("p must lie in [0,1], got {p}")));
    }
    let df = d as f64;
    if p <= 1.0 / (df - 1.0) {
        return Err(Error::Subcritical { p, d });
    }
    let f = |x: f64| (1.0 - p + p * x).powi(d as i32 - 1) - x;
    let phi = if p == 1.0 {
        0.0
    } else {
        // f is convex with f(0) > 0 = f(1) and f'(1) > 0; bracket at its minimiser
        let xs = (((df - 1.0) * p).powf(-1.0 / (df - 2.0)) - (1.0 - p)) / p;
        let (mut lo, mut hi) = (0.0, xs);
        for _ in 0..tol::BISECTION_ITERS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if f(lo).abs() < f(hi).abs() {
            lo
        } else {
            hi
        }
    };
    let residual = f(phi).abs();
    if residual > tol::GW_RESIDUAL {
        return Err(Error::Residual { residual, tolerance: tol::GW_RESIDUAL });
    }
    let base = 1.0 - p + p * phi;
    Ok(GwSolution {
        phi,
        chi: 1.0 - base.powi(d as i32),
        phi_hat: base.powi(d as i32 - 2),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderedPercParams {
    pub t: f64,
    /// retention probability inside the dominant colour class
    pub p1: f64,
    pub phi1: f64,
    pub phi_hat1: f64,
    pub r: f64,
    pub r_bound: f64,
    pub a_const: f64,
    pub supercritical: bool,
}

pub fn ordered_perc_params(q: u32, d: u32, beta: f64) -> Result<OrderedPercParams> {
    let t = solve_t(q, d, beta)?;
    let (qf, di) = (q as f64, d as i32);
    let s = t - 1.0;
    // p1 = t^{d-1}(t-1)/(t^d - t), written to stay accurate near t = 1
    let p1 = t.powi(di - 2) * s / ((d as f64 - 1.0) * s.ln_1p()).exp_m1();
    let phi1 = t.powi(-(di - 1));
    let phi_hat1 = t.powi(-(di - 2));
    let td = t.powi(di);
    let r = (td * t + (qf - 2.0) * td - (qf - 1.0) * t) / ((td - t) * (t.powi(di - 1) + qf - 1.0));
    let r_bound = (t + qf - 1.0) / (t.powi(di - 1) + qf - 1.0);
    let p = p_of_beta(beta);
    let sq = phi_hat1.sqrt();
    let a_const = (1.0 - (1.0 - sq) * p1 / p).max(1.0 - (1.0 - sq) * (1.0 - r));
    Ok(OrderedPercParams {
        t,
        p1,
        phi1,
        phi_hat1,
        r,
        r_bound,
        a_const,
        supercritical: p1 > 1.0 / (d as f64 - 1.0),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma54Report {
    pub sqrt_phi_hat1: f64,
    pub r: f64,
    pub lhs: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Checks `sqrt(phi_hat1) + R < (d-1)^{-5}`.
pub fn check_lemma54(q: u32, d: u32, beta: f64) -> Result<Lemma54Report> {
    let o = ordered_perc_params(q, d, beta)?;
    let sq = o.phi_hat1.sqrt();
    let lhs = sq + o.r;
    let bound = (d as f64 - 1.0).powi(-5);
    Ok(Lemma54Report { sqrt_phi_hat1: sq, r: o.r, lhs, bound, holds: lhs < bound })
}
