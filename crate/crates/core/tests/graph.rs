mod common;

use std::collections::BTreeMap;

use common::{chi_square_pvalue, flood_labels, histogram, perfect_matchings};
use pottslab_core::graph::{
    ball, components, distances, exists_avoiding_path, find_avoiding_path, sample_configuration_model,
    sample_exact_edge_model, Edge, Multigraph,
};
use pottslab_core::rng::from_seed;
use proptest::prelude::*;

type Key = Vec<(usize, usize)>;

fn key_of(edges: &[Edge]) -> Key {
    let mut k: Key = edges.iter().map(|e| (e.u.min(e.v), e.u.max(e.v))).collect();
    k.sort_unstable();
    k
}

#[test]
fn configuration_model_matches_pairing_enumeration() {
    let (n, d) = (4, 3);
    let half: Vec<usize> = (0..n * d).collect();
    let matchings = perfect_matchings(&half);
    assert_eq!(matchings.len(), 10395);
    let mut expected: BTreeMap<Key, f64> = BTreeMap::new();
    for m in &matchings {
        let edges: Vec<Edge> = m.iter().map(|&(a, b)| Edge { u: a / d, v: b / d }).collect();
        *expected.entry(key_of(&edges)).or_insert(0.0) += 1.0 / matchings.len() as f64;
    }
    let mut rng = from_seed(11);
    let obs = histogram((0..200_000).map(|_| key_of(sample_configuration_model(n, d, &mut rng).unwrap().edges())));
    let pv = chi_square_pvalue(&obs, &expected);
    assert!(pv > 0.001, "p-value {pv}");
}

#[test]
fn exact_edge_model_matches_enumeration() {
    let degrees = [2usize, 2, 1, 1];
    let m = 2;
    let half: Vec<(usize, usize)> =
        degrees.iter().enumerate().flat_map(|(v, &k)| (0..k).map(move |s| (v, s))).collect();
    let h = half.len();
    // every choice of 2m half-edges with every perfect matching on them
    let mut expected: BTreeMap<(Key, Vec<(usize, usize)>), f64> = BTreeMap::new();
    let mut total = 0.0;
    for mask in 0u32..(1 << h) {
        if mask.count_ones() as usize != 2 * m {
            continue;
        }
        let chosen: Vec<usize> = (0..h).filter(|&i| mask >> i & 1 == 1).collect();
        let free: Vec<(usize, usize)> = (0..h).filter(|&i| mask >> i & 1 == 0).map(|i| half[i]).collect();
        for pm in perfect_matchings(&chosen) {
            let edges: Vec<Edge> = pm.iter().map(|&(a, b)| Edge { u: half[a].0, v: half[b].0 }).collect();
            *expected.entry((key_of(&edges), free.clone())).or_insert(0.0) += 1.0;
            total += 1.0;
        }
    }
    expected.values_mut().for_each(|x| *x /= total);
    let mut rng = from_seed(12);
    let obs = histogram((0..100_000).map(|_| {
        let g = sample_exact_edge_model(4, 2, &degrees, m, &mut rng).unwrap();
        (key_of(g.edges()), g.free_half_edges().to_vec())
    }));
    let pv = chi_square_pvalue(&obs, &expected);
    assert!(pv > 0.001, "p-value {pv}");
}

#[test]
fn odd_half_edge_count_is_rejected() {
    assert!(sample_configuration_model(5, 3, &mut from_seed(0)).is_err());
    assert!(sample_exact_edge_model(2, 2, &[2, 1], 2, &mut from_seed(0)).is_err());
}

#[test]
fn self_loop_and_multi_edge_counts() {
    let g = Multigraph::from_pairs(2, &[(0, 0), (0, 1), (0, 1), (1, 1)]).unwrap();
    assert_eq!(g.self_loops(), 2);
    assert_eq!(g.multi_edges(), 1);
    assert_eq!(g.degree(0), 4);
}

#[test]
fn avoiding_path_on_a_cycle() {
    let g = Multigraph::from_pairs(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]).unwrap();
    let p = find_avoiding_path(&g, 0, 3, &|x| x == 1, 1000).unwrap().unwrap();
    assert_eq!(p, vec![0, 5, 4, 3]);
    assert!(!exists_avoiding_path(&g, 0, 2, &|x| x == 1 || x == 5, 1000).unwrap());
    assert!(find_avoiding_path(&g, 0, 5, &|_| false, 2).is_err());
}

fn graph_strategy() -> impl Strategy<Value = Multigraph> {
    (1usize..30, 1usize..6, any::<u64>()).prop_filter_map("odd", |(n, d, seed)| {
        sample_configuration_model(n, d, &mut from_seed(seed)).ok()
    })
}

proptest! {
    #[test]
    fn degrees_are_regular(g in graph_strategy()) {
        prop_assert_eq!(g.m() * 2, g.n() * g.d());
        for v in 0..g.n() {
            prop_assert_eq!(g.degree(v), g.d());
        }
    }

    #[test]
    fn text_round_trip(g in graph_strategy()) {
        prop_assert_eq!(Multigraph::from_text(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn ball_matches_distances(g in graph_strategy(), v in 0usize..30, r in 0usize..5) {
        let v = v % g.n();
        let b = ball(&g, v, r).unwrap();
        let dist = distances(&g, v, usize::MAX - 1);
        for (x, &dx) in dist.iter().enumerate().take(g.n()) {
            prop_assert_eq!(b.contains(x), dx <= r);
            prop_assert_eq!(b.in_sphere(x), dx == r);
        }
        for (e, ed) in g.edges().iter().enumerate() {
            prop_assert_eq!(b.contains_edge(e), r > 0 && dist[ed.u] <= r && dist[ed.v] <= r);
        }
    }

    #[test]
    fn components_match_flood_fill(g in graph_strategy(), seed in any::<u64>()) {
        let keep: Vec<bool> = (0..g.m()).map(|e| (seed >> (e % 64)) & 1 == 1).collect();
        let c = components(&g, |e| keep[e]);
        let pairs: Vec<(usize, usize)> =
            g.edges().iter().enumerate().filter(|(e, _)| keep[*e]).map(|(_, ed)| (ed.u, ed.v)).collect();
        let want = flood_labels(g.n(), &pairs);
        prop_assert_eq!(&c.label, &want);
        prop_assert_eq!(c.sizes.iter().map(|s| s.1).sum::<usize>(), g.n());
    }
}
