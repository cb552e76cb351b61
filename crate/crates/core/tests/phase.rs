use pottslab_core::phase::*;
use proptest::prelude::*;

/// h(t) written directly in t.
fn h(q: f64, d: i32, t: f64) -> f64 {
    (t - 1.0) * (t.powi(d - 1) + q - 1.0) / (t.powi(d - 1) - t)
}

/// Minimum of h over a dense log grid in t - 1, refined by a second pass.
fn dense_min_h(q: u32, d: u32) -> f64 {
    let f = |ls: f64| h(q as f64, d as i32, 1.0 + ls.exp());
    let (mut lo, mut hi) = ((1e-8f64).ln(), (1e6f64).ln());
    for _ in 0..6 {
        let k = 2000;
        let (mut best, mut bv) = (lo, f64::INFINITY);
        for i in 0..=k {
            let x = lo + (hi - lo) * i as f64 / k as f64;
            let v = f(x);
            if v < bv {
                bv = v;
                best = x;
            }
        }
        let w = (hi - lo) / k as f64;
        lo = best - 2.0 * w;
        hi = best + 2.0 * w;
    }
    f(0.5 * (lo + hi))
}

#[test]
fn beta_c_closed_form_anchors() {
    assert!((beta_c(3, 3).unwrap() - 1.3473773483).abs() < 1e-9);
    assert!((beta_c(4, 4).unwrap() - 1.0050525387).abs() < 1e-9);
    for q in 3..=12 {
        for d in 3..=12 {
            let a = beta_c(q, d).unwrap();
            let b = beta_c_extended(q, d).unwrap().to_f64();
            assert!((a - b).abs() < 1e-13 * b.max(1.0), "q={q} d={d}");
        }
    }
}

#[test]
fn beta_u_for_q3_d3_is_ln_one_plus_two_sqrt_two() {
    // h(t) = t + 2/t when q = d = 3
    let want = (1.0 + 2.0 * 2f64.sqrt()).ln();
    assert!((beta_u(3, 3).unwrap() - want).abs() < 1e-12);
}

#[test]
fn beta_u_matches_dense_grid_and_bisection() {
    for q in 3..=8 {
        for d in 3..=7 {
            let oracle = dense_min_h(q, d).ln_1p();
            let a = beta_u(q, d).unwrap();
            let b = beta_u_by_bisection(q, d).unwrap();
            assert!((a - oracle).abs() < 1e-9, "q={q} d={d}: {a} vs {oracle}");
            assert!((a - b).abs() < 1e-8, "q={q} d={d}: {a} vs {b}");
        }
    }
}

#[test]
fn threshold_ordering_on_grid() {
    for q in 3..=10 {
        for d in 3..=10 {
            let (bu, bc, bup) = (beta_u(q, d).unwrap(), beta_c(q, d).unwrap(), beta_u_prime_alt(q, d).unwrap());
            assert!(bu < bc && bc < bup, "q={q} d={d}: {bu} {bc} {bup}");
            assert!(beta_u_prime(q, d).unwrap() < bup);
        }
    }
}

#[test]
fn t_at_beta_c_and_fixed_point_equation() {
    for q in 3..=10u32 {
        for d in 3..=10u32 {
            let bc = beta_c(q, d).unwrap();
            let tc = (q as f64 - 1.0).powf(2.0 / d as f64);
            assert!((h(q as f64, d as i32, tc) - bc.exp_m1()).abs() < 1e-10 * bc.exp());
            assert!((solve_t(q, d, bc).unwrap() - tc).abs() < 1e-9);
        }
    }
}

#[test]
fn no_root_below_beta_u() {
    let bu = beta_u(3, 3).unwrap();
    assert!(matches!(solve_t(3, 3, 0.99 * bu), Err(pottslab_core::Error::NoRoot { .. })));
    assert!(solve_t(3, 3, 1.01 * bu).is_ok());
}

#[test]
fn colour_matrices_are_consistent() {
    for (q, d) in [(3u32, 3u32), (5, 4), (20, 5), (100_000_000, 6)] {
        let bc = beta_c(q, d).unwrap();
        for beta in [bc, 1.5 * bc] {
            let t = solve_t(q, d, beta).unwrap();
            let nu = nu_ord(q, d, t);
            let rho = rho_ord(q, d, beta, t);
            assert!((nu.sum() - 1.0).abs() < 1e-12);
            assert!((rho.sum() - 1.0).abs() < 1e-12);
            for i in 0..3.min(q as usize) {
                assert!((rho.row_sum(i) - nu.get(i)).abs() < 1e-12, "q={q} row {i}");
            }
            let p = p_of_beta(beta);
            assert!((m_ord(q, d, beta, t) - 0.5 * d as f64 * p * rho.trace()).abs() < 1e-12);
            let rd = rho_dis(q, beta);
            assert!((m_dis(q, d, beta) - 0.5 * d as f64 * p * rd.trace()).abs() < 1e-12);
            assert!((ordered_a(q, d, t) - nu.first).abs() < 1e-15);
        }
    }
    let dense = rho_ord(4, 3, 1.3, 1.7).to_dense();
    for (i, row) in dense.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            assert_eq!(x, dense[j][i]);
        }
    }
}

#[test]
fn nu_ord_at_beta_c() {
    for q in 3..=10u32 {
        for d in 3..=10u32 {
            let t = solve_t(q, d, beta_c(q, d).unwrap()).unwrap();
            assert!((nu_ord(q, d, t).first - (q as f64 - 1.0) / q as f64).abs() < 1e-9);
        }
    }
}

#[test]
fn gw_d3_closed_form() {
    // phi = ((1-p)/p)^2 for binary offspring
    for p in [0.51, 0.6, 0.75, 0.9, 0.99] {
        let s = gw_solution(3, p).unwrap();
        assert!((s.phi - ((1.0 - p) / p).powi(2)).abs() < 1e-12, "p={p}");
        let base = 1.0 - p + p * s.phi;
        assert!((s.chi - (1.0 - base.powi(3))).abs() < 1e-14);
        assert!((s.phi_hat - base).abs() < 1e-14);
    }
    assert!((gw_solution(3, 0.75).unwrap().phi - 1.0 / 9.0).abs() < 1e-12);
    assert!(matches!(gw_solution(3, 0.5), Err(pottslab_core::Error::Subcritical { .. })));
    assert_eq!(gw_solution(4, 1.0).unwrap().phi, 0.0);
}

#[test]
fn ordered_percolation_two_routes() {
    for (q, d) in [(3u32, 3u32), (5, 4), (20, 5), (1000, 7)] {
        let bc = beta_c(q, d).unwrap();
        for beta in [bc, 2.0 * bc] {
            let o = ordered_perc_params(q, d, beta).unwrap();
            let t = o.t;
            let di = d as i32;
            let direct = t.powi(di - 1) * (t - 1.0) / (t.powi(di) - t);
            assert!((o.p1 - direct).abs() < 1e-10, "p1 q={q} d={d}");
            assert!((o.phi1 - t.powi(-(di - 1))).abs() < 1e-15);
            assert!((o.phi_hat1.sqrt() - t.powf(-(d as f64 - 2.0) / 2.0)).abs() < 1e-12);
            if o.supercritical {
                let gw = gw_solution(d, o.p1).unwrap();
                assert!((gw.phi - o.phi1).abs() < 1e-9, "phi1 q={q} d={d}: {} vs {}", gw.phi, o.phi1);
                assert!((gw.phi_hat - o.phi_hat1).abs() < 1e-9);
            }
            assert!(o.r <= o.r_bound + 1e-12);
        }
    }
}

#[test]
fn lemma_check_large_and_small_q() {
    for d in 3..=8u32 {
        let q = (5 * d).pow(5);
        let bc = beta_c(q, d).unwrap();
        assert!(check_lemma54(q, d, bc).unwrap().holds, "d={d}");
        assert!(check_lemma54(q, d, 2.0 * bc).unwrap().holds, "d={d}");
    }
    assert!(!check_lemma54(3, 3, beta_c(3, 3).unwrap()).unwrap().holds);
}

#[test]
fn windows_separate_phases() {
    let prof = PhaseProfile::compute(20, 5, beta_c(20, 5).unwrap()).unwrap();
    let w = prof.windows(2000);
    assert!(w.dis_max < w.ord_min);
    assert_eq!(w.label(0), Phase::Disordered);
    assert_eq!(w.label(5000), Phase::Ordered);
    assert_eq!(w.label((w.dis_max + w.ord_min) / 2), Phase::Neither);
}

proptest! {
    #[test]
    fn solve_t_is_a_root(q in 3u32..50, d in 3u32..9, r in 1.0f64..3.0) {
        let beta = r * beta_c(q, d).unwrap();
        let t = solve_t(q, d, beta).unwrap();
        prop_assert!(t > 1.0);
        let lhs = h(q as f64, d as i32, t);
        prop_assert!((lhs - beta.exp_m1()).abs() < 1e-9 * beta.exp());
        // largest root: h is increasing past t
        prop_assert!(h(q as f64, d as i32, t * 1.001) > lhs);
    }

    #[test]
    fn p_beta_round_trip(beta in 1e-6f64..20.0) {
        // p only pins beta to within ulp(p) / (1 - p)
        let cond = 4.0 * f64::EPSILON * beta.exp();
        prop_assert!((beta_of_p(p_of_beta(beta)) - beta).abs() < 1e-12 * beta.max(1.0) + cond);
    }

    #[test]
    fn gw_solution_is_fixed_point(d in 3u32..10, x in 0.01f64..0.99) {
        let pc = 1.0 / (d as f64 - 1.0);
        let p = pc + (1.0 - pc) * x;
        let s = gw_solution(d, p).unwrap();
        prop_assert!(s.phi < 1.0);
        prop_assert!(((1.0 - p + p * s.phi).powi(d as i32 - 1) - s.phi).abs() < 1e-12);
    }
}
