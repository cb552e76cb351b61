mod common;

use std::sync::Arc;

use common::flood_labels;
use pottslab_core::graph::{ball, sample_configuration_model, Multigraph};
use pottslab_core::oracle::{exact_rc, exact_rc_window, fixture, tv_against_counts};
use pottslab_core::phase::{Phase, PhaseWindows};
use pottslab_core::rcdyn::*;
use pottslab_core::rng::from_seed;
use proptest::prelude::*;
use rand::Rng;

fn chain(g: &Arc<Multigraph>, init: Init, q: u32, p: f64, r: Restriction, mode: ConnectivityMode, seed: u64) -> ChainState {
    ChainState::new(g.clone(), init, RcParams::new(q, p).unwrap(), r, mode, seed).unwrap()
}

fn law_of(mut c: ChainState, steps: u64) -> Vec<u64> {
    let m = c.graph().m();
    c.run(1000);
    let mut counts = vec![0u64; 1 << m];
    for _ in 0..steps {
        c.step();
        counts[c.config().mask() as usize] += 1;
    }
    counts
}

#[test]
fn single_edge_uses_p_hat() {
    let g = Arc::new(fixture("single-edge").unwrap());
    let params = RcParams::new(3, 0.6).unwrap();
    assert!((params.p_hat - 0.6 / (0.4 * 3.0 + 0.6)).abs() < 1e-15);
    let mut c = ChainState::new(g, Init::AllOut, params, Restriction::None, ConnectivityMode::OnDemand, 1).unwrap();
    let r = c.apply_update(0, params.p_hat - 1e-9);
    assert!(r.was_cut && r.changed && c.config().contains(0));
    let r = c.apply_update(0, params.p_hat + 1e-9);
    assert!(r.was_cut && r.changed && !c.config().contains(0));
}

#[test]
fn self_loop_is_never_cut() {
    let g = Arc::new(fixture("self-loop").unwrap());
    let mut c = chain(&g, Init::AllOut, 3, 0.6, Restriction::None, ConnectivityMode::OnDemand, 1);
    let r = c.apply_update(0, 0.59);
    assert!(!r.was_cut && c.config().contains(0));
}

#[test]
fn incremental_mode_matches_on_demand_law() {
    let g = Arc::new(fixture("petersen-8").unwrap());
    let exact = exact_rc(&g, 3, 0.6).unwrap().probs;
    let c = chain(&g, Init::AllIn, 3, 0.6, Restriction::None, ConnectivityMode::Incremental, 5);
    let tv = tv_against_counts(&exact, &law_of(c, 2_000_000)).unwrap();
    assert!(tv < 0.02, "TV {tv}");
}

#[test]
fn window_restricted_chain_targets_conditioned_law() {
    let g = Arc::new(fixture("k4").unwrap());
    let w = PhaseWindows { dis_max: 2, ord_min: 4 };
    for (phase, init, lo, hi) in [(Phase::Disordered, Init::AllOut, 0, 2), (Phase::Ordered, Init::AllIn, 4, 6)] {
        let exact = exact_rc_window(&g, 3, 0.5, lo, hi).unwrap().probs;
        let c = chain(&g, init, 3, 0.5, Restriction::Phase { phase, windows: w }, ConnectivityMode::OnDemand, 6);
        let counts = law_of(c, 1_000_000);
        for (mask, &k) in counts.iter().enumerate() {
            let size = (mask as u64).count_ones() as usize;
            assert!(k == 0 || (lo..=hi).contains(&size));
        }
        let tv = tv_against_counts(&exact, &counts).unwrap();
        assert!(tv < 0.02, "{phase:?} TV {tv}");
    }
}

#[test]
fn phase_restriction_rejects_bad_start() {
    let g = Arc::new(fixture("k4").unwrap());
    let w = PhaseWindows { dis_max: 2, ord_min: 4 };
    let r = ChainState::new(
        g,
        Init::AllIn,
        RcParams::new(3, 0.5).unwrap(),
        Restriction::Phase { phase: Phase::Disordered, windows: w },
        ConnectivityMode::OnDemand,
        0,
    );
    assert!(r.is_err());
}

#[test]
fn ball_chain_targets_conditional_law() {
    let g = Arc::new(fixture("cycle-6").unwrap());
    let b = ball(&g, 0, 1).unwrap();
    let full = exact_rc(&g, 2, 0.55).unwrap().probs;
    for boundary in [Boundary::Wired, Boundary::Free] {
        let outside: u64 = (0..g.m()).filter(|&e| !b.contains_edge(e)).map(|e| 1u64 << e).sum();
        let fixed = if boundary == Boundary::Wired { outside } else { 0 };
        let mass: f64 = (0..64usize).filter(|&m| m as u64 & outside == fixed).map(|m| full[m]).sum();
        let cond: Vec<f64> =
            (0..64usize).map(|m| if m as u64 & outside == fixed { full[m] / mass } else { 0.0 }).collect();
        let c = chain(
            &g,
            Init::AllOut,
            2,
            0.55,
            Restriction::Ball { ball: b.clone(), boundary },
            ConnectivityMode::OnDemand,
            7,
        );
        let counts = law_of(c, 500_000);
        let tv = tv_against_counts(&cond, &counts).unwrap();
        assert!(tv < 0.02, "{boundary:?} TV {tv}");
    }
}

#[test]
fn ball_marginal_on_whole_graph_matches_exact() {
    let g = Arc::new(fixture("triangle").unwrap());
    let exact = exact_rc(&g, 3, 0.5).unwrap().marginals[0];
    let params = RcParams::new(3, 0.5).unwrap();
    let est = ball_marginal(g, 0, 2, Boundary::Free, params, 0, 200_000, 8, 3).unwrap();
    assert!((est.mean - exact).abs() < 5.0 * est.stderr.max(1e-3), "{} vs {exact}", est.mean);
}

#[test]
fn trace_shape_and_csv() {
    let g = Arc::new(sample_configuration_model(50, 3, &mut from_seed(1)).unwrap());
    let params = RcParams::new(3, 0.5).unwrap();
    let t = run_chain(g.clone(), Init::AllOut, params, Restriction::None, &RunOptions::new(0, 1), 0).unwrap();
    assert_eq!(t.rows.len(), 1);
    let mut opts = RunOptions::new(1000, 10);
    opts.record_marginals = true;
    let t = run_chain(g.clone(), Init::AllOut, params, Restriction::None, &opts, 0).unwrap();
    assert_eq!(t.rows.len(), 101);
    assert_eq!(t.to_csv().lines().count(), 102);
    assert_eq!(t.edge_marginals.unwrap().len(), g.m());
    assert_eq!(t.rows.last().unwrap().size, t.final_config.len());
}

#[test]
fn grand_coupling_requires_matching_chains() {
    let g = Arc::new(fixture("k4").unwrap());
    let a = chain(&g, Init::AllIn, 3, 0.5, Restriction::None, ConnectivityMode::OnDemand, 0);
    let b = chain(&g, Init::AllOut, 3, 0.6, Restriction::None, ConnectivityMode::OnDemand, 0);
    assert!(GrandCoupling::new(vec![a, b], 0).is_err());
    assert!(GrandCoupling::new(Vec::new(), 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cut_edge_matches_flood_fill(seed in any::<u64>(), n in 2usize..40, density in 0.0f64..1.0) {
        let n = n * 2;
        let mut rng = from_seed(seed);
        let g = sample_configuration_model(n, 3, &mut rng).unwrap();
        for mode in [ConnectivityMode::OnDemand, ConnectivityMode::Incremental] {
            let keep: Vec<usize> = (0..g.m()).filter(|_| rng.random_bool(density)).collect();
            let mut f = EdgeConfig::from_edges(&g, &keep, mode).unwrap();
            for _ in 0..20 {
                let e = rng.random_range(0..g.m());
                let pairs: Vec<(usize, usize)> = f.edge_ids().into_iter().filter(|&x| x != e)
                    .map(|x| (g.edge(x).u, g.edge(x).v)).collect();
                let lab = flood_labels(n, &pairs);
                let ed = g.edge(e);
                prop_assert_eq!(f.is_cut_edge(&g, e), ed.u != ed.v && lab[ed.u] != lab[ed.v]);
                let flip = !f.contains(e);
                f.set(&g, e, flip);
            }
        }
    }

    #[test]
    fn modes_give_identical_trajectories(seed in any::<u64>()) {
        let g = Arc::new(sample_configuration_model(60, 3, &mut from_seed(seed)).unwrap());
        let mut a = chain(&g, Init::AllIn, 3, 0.7, Restriction::None, ConnectivityMode::OnDemand, seed);
        let mut b = chain(&g, Init::AllIn, 3, 0.7, Restriction::None, ConnectivityMode::Incremental, seed);
        for _ in 0..3000 {
            prop_assert_eq!(a.step(), b.step());
        }
        prop_assert_eq!(a.config().bits(), b.config().bits());
    }

    #[test]
    fn grand_coupling_preserves_order(seed in any::<u64>(), p in 0.1f64..0.95) {
        let g = Arc::new(sample_configuration_model(40, 3, &mut from_seed(seed)).unwrap());
        let top = chain(&g, Init::AllIn, 3, p, Restriction::None, ConnectivityMode::OnDemand, 0);
        let bottom = chain(&g, Init::AllOut, 3, p, Restriction::None, ConnectivityMode::OnDemand, 0);
        let mut gc = GrandCoupling::new(vec![top, bottom], seed).unwrap();
        for _ in 0..2000 {
            gc.step();
            let (t, b) = (gc.chains[0].config(), gc.chains[1].config());
            prop_assert!(b.edge_ids().iter().all(|&e| t.contains(e)));
        }
    }

    #[test]
    fn ball_chain_never_touches_outside(seed in any::<u64>(), wired in any::<bool>()) {
        let g = Arc::new(sample_configuration_model(80, 3, &mut from_seed(seed)).unwrap());
        let b = ball(&g, 0, 2).unwrap();
        let boundary = if wired { Boundary::Wired } else { Boundary::Free };
        let mut c = chain(&g, Init::AllOut, 3, 0.6, Restriction::Ball { ball: b.clone(), boundary }, ConnectivityMode::OnDemand, seed);
        c.run(2000);
        for e in 0..g.m() {
            if !b.contains_edge(e) {
                prop_assert_eq!(c.config().contains(e), wired);
            }
        }
    }

    #[test]
    fn phase_window_is_never_left(seed in any::<u64>()) {
        let g = Arc::new(sample_configuration_model(60, 3, &mut from_seed(seed)).unwrap());
        let w = PhaseWindows { dis_max: 30, ord_min: 60 };
        let mut c = chain(&g, Init::AllOut, 3, 0.9, Restriction::Phase { phase: Phase::Disordered, windows: w }, ConnectivityMode::OnDemand, seed);
        for _ in 0..3000 {
            c.step();
            prop_assert!(c.config().len() <= 30);
        }
    }
}
