#![allow(dead_code)]

use std::collections::BTreeMap;
use std::hash::Hash;

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Pearson chi-square p-value of `observed` counts against `expected`
/// probabilities. Cells with expected count below 5 are pooled.
pub fn chi_square_pvalue<K: Ord + Clone>(observed: &BTreeMap<K, u64>, expected: &BTreeMap<K, f64>) -> f64 {
    let total: u64 = observed.values().sum();
    let n = total as f64;
    assert!(observed.keys().all(|k| expected.contains_key(k)), "observed an outcome with zero probability");
    let (mut stat, mut cells) = (0.0, 0usize);
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    for (k, &p) in expected {
        let e = p * n;
        let o = *observed.get(k).unwrap_or(&0) as f64;
        if e < 5.0 {
            pool_o += o;
            pool_e += e;
        } else {
            stat += (o - e).powi(2) / e;
            cells += 1;
        }
    }
    if pool_e > 0.0 {
        stat += (pool_o - pool_e).powi(2) / pool_e;
        cells += 1;
    }
    assert!(cells >= 2, "too few cells for a chi-square test");
    ChiSquared::new((cells - 1) as f64).unwrap().sf(stat)
}

pub fn histogram<K: Ord + Hash>(xs: impl IntoIterator<Item = K>) -> BTreeMap<K, u64> {
    let mut h = BTreeMap::new();
    for x in xs {
        *h.entry(x).or_insert(0) += 1;
    }
    h
}

/// All perfect matchings of `items`, as lists of pairs.
pub fn perfect_matchings(items: &[usize]) -> Vec<Vec<(usize, usize)>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let first = items[0];
    let mut out = Vec::new();
    for i in 1..items.len() {
        let rest: Vec<usize> = items[1..].iter().enumerate().filter(|&(j, _)| j + 1 != i).map(|(_, &x)| x).collect();
        for mut m in perfect_matchings(&rest) {
            m.push((first, items[i]));
            out.push(m);
        }
    }
    out
}

/// Connected components by repeated flood fill; returns a label per vertex
/// equal to the smallest vertex in its component.
pub fn flood_labels(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut label = vec![usize::MAX; n];
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        label[s] = s;
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if label[y] == usize::MAX {
                    label[y] = s;
                    stack.push(y);
                }
            }
        }
    }
    label
}

/// Two-sample chi-square homogeneity p-value; cells with a pooled count
/// below 10 are merged.
pub fn two_sample_pvalue<K: Ord + Clone>(a: &BTreeMap<K, u64>, b: &BTreeMap<K, u64>) -> f64 {
    let mut keys: Vec<K> = a.keys().chain(b.keys()).cloned().collect();
    keys.sort();
    keys.dedup();
    let (na, nb) = (a.values().sum::<u64>() as f64, b.values().sum::<u64>() as f64);
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut pa, mut pb) = (0.0, 0.0);
    for k in keys {
        let (x, y) = (*a.get(&k).unwrap_or(&0) as f64, *b.get(&k).unwrap_or(&0) as f64);
        if x + y < 10.0 {
            pa += x;
            pb += y;
        } else {
            cells.push((x, y));
        }
    }
    if pa + pb > 0.0 {
        cells.push((pa, pb));
    }
    assert!(cells.len() >= 2, "too few cells for a chi-square test");
    let total = na + nb;
    let stat: f64 = cells
        .iter()
        .map(|&(x, y)| {
            let ea = (x + y) * na / total;
            let eb = (x + y) * nb / total;
            (x - ea).powi(2) / ea + (y - eb).powi(2) / eb
        })
        .sum();
    ChiSquared::new((cells.len() - 1) as f64).unwrap().sf(stat)
}
