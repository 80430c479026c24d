//! Cross-checks of the statistics, partition, similarity and consensus code
//! against slow reference computations written from the definitions.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{close, index, rows};
use folkmetrics::consensus::consensus_by_bin;
use folkmetrics::partition::{gini, split_supertaggers};
use folkmetrics::similarity::{cosine_topn, spearman_topn, Dimension, FreqDist};
use folkmetrics::stats::{binned_mean, cosine, spearman};
use folkmetrics::{BinSpec, UserId};
use proptest::prelude::*;

fn pairwise_gini(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let mut diff = 0.0;
    for a in x {
        for b in x {
            diff += (a - b).abs();
        }
    }
    diff / (2.0 * n * n * mean)
}

fn naive_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let below = x.iter().filter(|&&w| w < v).count() as f64;
            let equal = x.iter().filter(|&&w| w == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn naive_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gini_matches_pairwise_definition(x in prop::collection::vec(0.01f64..1000.0, 1..200)) {
        let g = gini(&x).unwrap();
        prop_assert!(close(g, pairwise_gini(&x), 1e-9), "{} vs {}", g, pairwise_gini(&x));
    }

    #[test]
    fn spearman_matches_definition(pairs in prop::collection::vec((0u8..20, 0u8..20), 2..50)) {
        let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
        match spearman(&x, &y) {
            Ok(rho) => {
                prop_assert!((-1.0..=1.0).contains(&rho));
                let want = naive_pearson(&naive_ranks(&x), &naive_ranks(&y));
                prop_assert!(close(rho, want, 1e-9));
                // strictly monotone transforms leave ranks untouched
                let x3: Vec<f64> = x.iter().map(|v| v.powi(3) + 7.0).collect();
                prop_assert!(close(spearman(&x3, &y).unwrap(), rho, 1e-12));
            }
            Err(_) => prop_assert!(constant(&x) || constant(&y)),
        }
    }

    #[test]
    fn cosine_matches_direct_evaluation(pairs in prop::collection::vec((0.0f64..50.0, 0.0f64..50.0), 1..40)) {
        let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        if let Ok(c) = cosine(&x, &y) {
            let dot: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
            let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
            let ny = y.iter().map(|b| b * b).sum::<f64>().sqrt();
            prop_assert!((0.0..=1.0).contains(&c));
            prop_assert!(close(c, dot / (nx * ny), 1e-9));
        }
    }

    #[test]
    fn binned_mean_matches_grouping(stream in prop::collection::vec((1u32..16000, -5.0f64..5.0), 1..300)) {
        let spec = BinSpec::default();
        let series = binned_mean(stream.iter().map(|&(k, v)| (k as f64, v)), &spec);
        // largest k with 2^(k/10) <= key
        let mut groups: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
        for &(key, v) in &stream {
            let mut k = 0;
            while 2f64.powf((k + 1) as f64 / 10.0) <= key as f64 {
                k += 1;
            }
            groups.entry(k).or_default().push(v);
        }
        prop_assert_eq!(series.total_count(), stream.len());
        prop_assert_eq!(series.rows.len(), groups.len());
        for (row, (k, vals)) in series.rows.iter().zip(&groups) {
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let se = if vals.len() < 2 {
                0.0
            } else {
                (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt()
            };
            prop_assert!(close(row.bin_low, 2f64.powf(*k as f64 / 10.0), 1e-9));
            prop_assert_eq!(row.n, vals.len());
            prop_assert!(close(row.mean, mean, 1e-9));
            prop_assert!(close(row.stderr, se, 1e-9));
        }
    }

    #[test]
    fn partition_is_minimal_prefix(rows in rows(120), fraction in 0.05f64..1.0) {
        let idx = index(&rows, false);
        let p = split_supertaggers(&idx, fraction).unwrap();
        let total = idx.len() as f64;
        let s: usize = p.supertaggers().iter().map(|&u| idx.user_annotation_count(u)).sum();
        let o: usize = p.others().iter().map(|&u| idx.user_annotation_count(u)).sum();
        prop_assert_eq!(s + o, idx.len());
        prop_assert!(s as f64 >= fraction * total);
        let last = *p.supertaggers().last().unwrap();
        prop_assert!(((s - idx.user_annotation_count(last)) as f64) < fraction * total);
        let min_s = p.supertaggers().iter().map(|&u| idx.user_annotation_count(u)).min().unwrap();
        prop_assert!(p.others().iter().all(|&u| idx.user_annotation_count(u) <= min_s));
    }
}

/// Top-N ranks from the definition: average 1-based position among tied
/// counts inside the top N, and N + 1 outside it.
fn oracle_top(counts: &[(u32, u64)], n: usize) -> BTreeMap<u32, (f64, u64)> {
    let mut sorted = counts.to_vec();
    sorted.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    sorted.truncate(n);
    let mut out = BTreeMap::new();
    for &(k, c) in &sorted {
        let positions: Vec<usize> = sorted
            .iter()
            .enumerate()
            .filter(|(_, e)| e.1 == c)
            .map(|(p, _)| p + 1)
            .collect();
        let rank = positions.iter().sum::<usize>() as f64 / positions.len() as f64;
        out.insert(k, (rank, c));
    }
    out
}

fn dist_strategy() -> impl Strategy<Value = Vec<(u32, u64)>> {
    prop::collection::btree_map(0u32..60, 1u64..12, 1..60).prop_map(|m| m.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn topn_comparisons_match_oracle(a in dist_strategy(), b in dist_strategy(), n in 1usize..=50) {
        let da = FreqDist::from_counts(Dimension::Tag, a.iter().copied());
        let db = FreqDist::from_counts(Dimension::Tag, b.iter().copied());
        let (ta, tb) = (oracle_top(&a, n), oracle_top(&b, n));
        let keys: BTreeSet<u32> = ta.keys().chain(tb.keys()).copied().collect();
        let pad = (n + 1) as f64;
        let ra: Vec<f64> = keys.iter().map(|k| ta.get(k).map_or(pad, |e| e.0)).collect();
        let rb: Vec<f64> = keys.iter().map(|k| tb.get(k).map_or(pad, |e| e.0)).collect();
        let ca: Vec<f64> = keys.iter().map(|k| ta.get(k).map_or(0.0, |e| e.1 as f64)).collect();
        let cb: Vec<f64> = keys.iter().map(|k| tb.get(k).map_or(0.0, |e| e.1 as f64)).collect();

        let want = if ra == rb { 1.0 } else { naive_pearson(&ra, &rb) };
        match spearman_topn(&da, &db, n) {
            Ok(rho) => prop_assert!(close(rho, want, 1e-9), "rho {} vs {}", rho, want),
            Err(_) => prop_assert!(!want.is_finite()),
        }
        let dot: f64 = ca.iter().zip(&cb).map(|(x, y)| x * y).sum();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let cos = cosine_topn(&da, &db, n).unwrap();
        prop_assert!(close(cos, dot / (norm(&ca) * norm(&cb)), 1e-9));
    }

    #[test]
    fn consensus_matches_recount(rows in rows(150), fraction in 0.1f64..0.9) {
        let idx = index(&rows, false);
        let p = split_supertaggers(&idx, fraction).unwrap();
        let is_s = |u: u8| p.is_supertagger(idx.user_id(&format!("u{u:02}")).unwrap());

        // item -> (S users per tag, other users per tag, annotation count)
        type Side = BTreeMap<u8, BTreeSet<u8>>;
        let mut items: BTreeMap<u8, (Side, Side, usize)> = BTreeMap::new();
        for &(u, i, t, _) in &rows {
            let e = items.entry(i).or_default();
            if is_s(u) { e.0.entry(t).or_default().insert(u); } else { e.1.entry(t).or_default().insert(u); }
            e.2 += 1;
        }
        let top = |side: &Side| {
            let best = side.values().map(|s| s.len()).max().unwrap();
            *side.iter().find(|(_, s)| s.len() == best).unwrap().0
        };
        let mut expected: Vec<(usize, f64, f64)> = Vec::new();
        for (s, o, count) in items.values() {
            if s.is_empty() || o.is_empty() {
                continue;
            }
            let tags: BTreeSet<u8> = s.keys().chain(o.keys()).copied().collect();
            let va: Vec<f64> = tags.iter().map(|t| s.get(t).map_or(0.0, |x| x.len() as f64)).collect();
            let vb: Vec<f64> = tags.iter().map(|t| o.get(t).map_or(0.0, |x| x.len() as f64)).collect();
            let dot: f64 = va.iter().zip(&vb).map(|(x, y)| x * y).sum();
            let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
            expected.push((*count, if top(s) == top(o) { 1.0 } else { 0.0 }, dot / (norm(&va) * norm(&vb))));
        }
        match consensus_by_bin(&idx, &p, &BinSpec::default()) {
            Err(_) => prop_assert!(expected.is_empty()),
            Ok(series) => {
                prop_assert_eq!(series.shared_items, expected.len());
                prop_assert_eq!(series.top_match.total_count(), expected.len());
                let want = binned_mean(expected.iter().map(|e| (e.0 as f64, e.1)), &BinSpec::default());
                let want_cos = binned_mean(expected.iter().map(|e| (e.0 as f64, e.2)), &BinSpec::default());
                for (got, w) in series.top_match.rows.iter().zip(&want.rows) {
                    prop_assert_eq!(got.n, w.n);
                    prop_assert!(close(got.mean, w.mean, 1e-12));
                }
                for (got, w) in series.cosine.rows.iter().zip(&want_cos.rows) {
                    prop_assert!(close(got.mean, w.mean, 1e-9));
                }
            }
        }
    }
}

#[test]
fn gini_fixed_values() {
    assert_eq!(gini(&[4.0; 9]).unwrap(), 0.0);
    assert!(close(gini(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 0.25, 1e-12));
}

#[test]
fn heavy_tailed_activity_concentrates_annotations() {
    use folkmetrics::corpus::{generate_synthetic, SyntheticConfig};
    use folkmetrics::{FolksonomyIndex, TimeGranularity};

    let cfg = SyntheticConfig { n_users: 10_000, seed: 5, ..Default::default() };
    let idx = FolksonomyIndex::build(&generate_synthetic(&cfg).unwrap(), TimeGranularity::Seconds, false);
    let p = split_supertaggers(&idx, 0.5).unwrap();
    let share = p.supertaggers().len() as f64 / idx.n_users() as f64;
    assert!(share < 0.2, "supertagger share {share}");
    assert!(p.supertaggers().iter().all(|&u: &UserId| idx.user_annotation_count(u) >= p.annotation_threshold()));
}
