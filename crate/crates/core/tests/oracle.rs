mod common;

use common::flood_labels;
use pottslab_core::graph::Multigraph;
use pottslab_core::oracle::*;
use pottslab_core::phase::{beta_of_p, p_hat, p_of_beta, Phase, PhaseWindows};
use pottslab_core::rcdyn::RcParams;

fn brute_rc(g: &Multigraph, q: u32, p: f64) -> Vec<f64> {
    let m = g.m();
    let w: Vec<f64> = (0..1u64 << m)
        .map(|mask| {
            let pairs: Vec<(usize, usize)> =
                (0..m).filter(|e| mask >> e & 1 == 1).map(|e| (g.edge(e).u, g.edge(e).v)).collect();
            let mut labels = flood_labels(g.n(), &pairs);
            labels.sort_unstable();
            labels.dedup();
            let k = pairs.len() as i32;
            (q as f64).powi(labels.len() as i32) * p.powi(k) * (1.0 - p).powi(m as i32 - k)
        })
        .collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

fn brute_potts(g: &Multigraph, q: u32, beta: f64) -> Vec<f64> {
    let states = (q as usize).pow(g.n() as u32);
    let w: Vec<f64> = (0..states)
        .map(|i| {
            let mut c = Vec::new();
            let mut x = i;
            for _ in 0..g.n() {
                c.push(x % q as usize);
                x /= q as usize;
            }
            let mono = g.edges().iter().filter(|e| c[e.u] == c[e.v]).count();
            (beta * mono as f64).exp()
        })
        .collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

#[test]
fn exact_laws_match_brute_force() {
    for (name, g) in fixtures() {
        for q in [2u32, 3] {
            for p in [0.3, 0.7] {
                let tv = exact_tv(&exact_rc(&g, q, p).unwrap().probs, &brute_rc(&g, q, p)).unwrap();
                assert!(tv < 1e-12, "{name} q={q} p={p}: {tv}");
            }
            if g.n() <= 6 {
                let tv = exact_tv(&exact_potts(&g, q, 0.8).unwrap().probs, &brute_potts(&g, q, 0.8)).unwrap();
                assert!(tv < 1e-12, "{name} potts q={q}");
            }
        }
    }
}

#[test]
fn tv_examples() {
    let a = vec![0.2, 0.3, 0.5];
    assert_eq!(exact_tv(&a, &a).unwrap(), 0.0);
    assert_eq!(exact_tv(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
    let k = 8;
    let uniform = vec![1.0 / k as f64; k];
    let mut point = vec![0.0; k];
    point[3] = 1.0;
    assert!((exact_tv(&uniform, &point).unwrap() - (1.0 - 1.0 / k as f64)).abs() < 1e-15);
    assert!(exact_tv(&[1.0], &[0.5, 0.5]).is_err());
}

#[test]
fn single_edge_stationary_vector() {
    let g = fixture("single-edge").unwrap();
    for q in [2u32, 3, 7] {
        let p = 0.6;
        let law = exact_rc(&g, q, p).unwrap().probs;
        let ph = p_hat(q as f64, beta_of_p(p));
        assert!((law[1] - ph).abs() < 1e-14);
        assert!((law[0] - (1.0 - ph)).abs() < 1e-14);
        let rows = transition_matrix(&g, RcParams::new(q, p).unwrap(), None).unwrap();
        let c = check_against(&rows, &law).unwrap();
        assert!(c.stationarity_residual < 1e-14 && c.irreducible);
    }
}

#[test]
fn double_edge_and_path_checks() {
    let g = fixture("double-edge").unwrap();
    let c = exact_transition_check(&g, RcParams::new(2, 0.45).unwrap(), None, None).unwrap();
    assert!(c.stationarity_residual < 1e-10);
    let g = fixture("path-3").unwrap();
    let c = exact_transition_check(&g, RcParams::new(3, 0.7).unwrap(), None, None).unwrap();
    assert!(c.detailed_balance_residual < 1e-10);
    assert!(c.row_sum_residual < 1e-14);
}

#[test]
fn every_fixture_is_reversible_and_irreducible() {
    for (name, g) in fixtures() {
        for q in [2u32, 3, 5] {
            let c = exact_transition_check(&g, RcParams::new(q, 0.55).unwrap(), None, None).unwrap();
            assert!(c.stationarity_residual < 1e-12, "{name}");
            assert!(c.detailed_balance_residual < 1e-12, "{name}");
            assert!(c.irreducible, "{name}");
        }
    }
}

#[test]
fn window_restricted_chain_is_stationary_for_conditioned_law() {
    let g = fixture("k4").unwrap();
    let params = RcParams::new(3, 0.5).unwrap();
    let w = PhaseWindows { dis_max: 2, ord_min: 4 };
    for phase in [Phase::Disordered, Phase::Ordered] {
        let c = exact_transition_check(&g, params, Some(w), Some(phase)).unwrap();
        assert!(c.stationarity_residual < 1e-12);
        assert!(c.irreducible);
    }
    let law = exact_rc_window(&g, 3, 0.5, 4, 6).unwrap().probs;
    let full = exact_rc(&g, 3, 0.5).unwrap().probs;
    let mass: f64 = (0..64usize).filter(|m| m.count_ones() >= 4).map(|m| full[m]).sum();
    for m in 0..64usize {
        let want = if m.count_ones() >= 4 { full[m] / mass } else { 0.0 };
        assert!((law[m] - want).abs() < 1e-14);
    }
}

#[test]
fn edwards_sokal_identities() {
    for (name, g) in fixtures() {
        for q in [2u32, 3] {
            for beta in [0.3, 1.1] {
                let es = edwards_sokal_rc_marginal(&g, q, beta).unwrap();
                let rc = exact_rc(&g, q, p_of_beta(beta)).unwrap();
                assert!(exact_tv(&es, &rc.probs).unwrap() < 1e-12, "{name}");
                assert!(partition_identity_gap(&g, q, beta).unwrap().abs() < 1e-12, "{name}");
                let potts = edwards_sokal_potts_marginal(&g, q, beta).unwrap();
                assert!(exact_tv(&potts, &exact_potts(&g, q, beta).unwrap().probs).unwrap() < 1e-12, "{name}");
            }
        }
    }
}

#[test]
fn extended_log_weights_agree() {
    let g = fixture("petersen-8").unwrap();
    for mask in 0..256u64 {
        let a = rc_log_weight(&g, 3, 0.4, mask);
        let b = rc_log_weight_extended(&g, 3, 0.4, mask);
        assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
    }
    assert_eq!(component_count(&g, 0), 8);
    assert_eq!(component_count(&g, 255), 1);
}

#[test]
fn encode_decode_round_trip() {
    for i in 0..81 {
        assert_eq!(encode_potts(&decode_potts(i, 3, 4), 3), i);
    }
}

#[test]
fn golden_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    write_golden(dir.path()).unwrap();
    assert!(check_golden(dir.path(), 1e-12).is_empty());
    let shipped = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("golden");
    assert!(check_golden(&shipped, 1e-12).is_empty());
    let path = dir.path().join("rc_triangle.csv");
    let text = std::fs::read_to_string(&path).unwrap().replacen("\n3,", "\n3,1", 1);
    std::fs::write(&path, text).unwrap();
    let bad = check_golden(dir.path(), 1e-12);
    assert_eq!(bad.len(), 1);
    assert_eq!(bad[0].0, "triangle");
}

#[test]
fn compensated_sum_beats_naive() {
    let xs = [1e16, 1.0, -1e16];
    assert_eq!(compensated_sum(xs), 1.0);
    let lse = log_sum_exp(&[1000.0, 1000.0]);
    assert!((lse - (1000.0 + 2f64.ln())).abs() < 1e-12);
}
