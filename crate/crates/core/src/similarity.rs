//! Vocabulary and content similarity between the two sub-folksonomies.
//!
//! A [`FreqDist`] counts annotations per key (tag or item) within one group
//! of users. Comparisons restricted to the top `N` keys of each side treat a
//! key missing from one side's top `N` as ranked `N + 1` (for Spearman) and
//! as a zero count (for cosine).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{FolksonomyIndex, ItemId, UserId};
use crate::error::{Error, Result};
use crate::partition::{Group, Partition};
use crate::stats::{binned_mean, cosine, pearson, BinSpec, BinnedSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Tag,
    Item,
}

impl FromStr for Dimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tag" | "tags" => Ok(Self::Tag),
            "item" | "items" => Ok(Self::Item),
            other => Err(Error::domain(format!("unknown dimension `{other}`"))),
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Tag => "tag",
            Self::Item => "item",
        })
    }
}

/// Annotation counts per key, stored in rank order (count descending, key
/// ascending). Keys are raw tag or item ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreqDist {
    pub dimension: Dimension,
    ranked: Vec<(u32, u64)>,
}

impl FreqDist {
    /// Duplicate keys are summed; zero counts are dropped.
    pub fn from_counts(dimension: Dimension, counts: impl IntoIterator<Item = (u32, u64)>) -> Self {
        let mut merged: BTreeMap<u32, u64> = BTreeMap::new();
        for (k, c) in counts {
            *merged.entry(k).or_default() += c;
        }
        let mut ranked: Vec<(u32, u64)> = merged.into_iter().filter(|&(_, c)| c > 0).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        Self { dimension, ranked }
    }

    /// `(key, count)` in rank order.
    pub fn ranked(&self) -> &[(u32, u64)] {
        &self.ranked
    }

    pub fn len(&self) -> usize {
        self.ranked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranked.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.ranked.iter().map(|&(_, c)| c).sum()
    }

    pub fn count(&self, key: u32) -> u64 {
        self.ranked
            .iter()
            .find(|&&(k, _)| k == key)
            .map(|&(_, c)| c)
            .unwrap_or(0)
    }

    fn max_key(&self) -> Option<u32> {
        self.ranked.iter().map(|&(k, _)| k).max()
    }
}

/// Annotation counts by tag or item restricted to `users`.
pub fn freq_dist(index: &FolksonomyIndex, users: &[UserId], dimension: Dimension) -> FreqDist {
    let mut member = vec![false; index.n_users()];
    for u in users {
        if let Some(m) = member.get_mut(u.index()) {
            *m = true;
        }
    }
    dist_where(index, dimension, |u| member[u.index()])
}

/// [`freq_dist`] for one side of a partition.
pub fn group_dist(index: &FolksonomyIndex, partition: &Partition, group: Group, dimension: Dimension) -> FreqDist {
    dist_where(index, dimension, |u| partition.group_of(u) == group)
}

fn dist_where(index: &FolksonomyIndex, dimension: Dimension, keep: impl Fn(UserId) -> bool) -> FreqDist {
    let n_keys = match dimension {
        Dimension::Tag => index.n_tags(),
        Dimension::Item => index.n_items(),
    };
    let mut counts = vec![0u64; n_keys];
    for r in index.records().iter().filter(|r| keep(r.user)) {
        let k = match dimension {
            Dimension::Tag => r.tag.0,
            Dimension::Item => r.item.0,
        };
        counts[k as usize] += 1;
    }
    FreqDist::from_counts(
        dimension,
        counts.into_iter().enumerate().map(|(k, c)| (k as u32, c)),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UsagePoint {
    /// Key popularity (total count within the sub-folksonomy).
    pub n: u64,
    pub proportion: f64,
}

/// Share of a sub-folksonomy's annotations on keys used exactly `N` times
/// (or, when `cumulative`, at least `N` times), for every observed `N`.
pub fn usage_distribution(dist: &FreqDist, cumulative: bool) -> Result<Vec<UsagePoint>> {
    if dist.is_empty() {
        return Err(Error::domain("usage distribution of an empty frequency distribution"));
    }
    let total = dist.total() as f64;
    // mass per popularity value, ascending
    let mut mass: BTreeMap<u64, u64> = BTreeMap::new();
    for &(_, c) in dist.ranked() {
        *mass.entry(c).or_default() += c;
    }
    let mut out = Vec::with_capacity(mass.len());
    if cumulative {
        let mut remaining = dist.total();
        for (&n, &m) in &mass {
            out.push(UsagePoint { n, proportion: remaining as f64 / total });
            remaining -= m;
        }
    } else {
        for (&n, &m) in &mass {
            out.push(UsagePoint { n, proportion: m as f64 / total });
        }
    }
    Ok(out)
}

/// Precomputed rank positions for repeated top-N comparisons of two dists.
struct TopN<'a> {
    a: &'a FreqDist,
    b: &'a FreqDist,
    pos_a: Vec<u32>,
    pos_b: Vec<u32>,
    ties_a: Vec<(u32, u32)>,
    ties_b: Vec<(u32, u32)>,
}

const ABSENT: u32 = u32::MAX;

fn positions(dist: &FreqDist, n_keys: usize) -> Vec<u32> {
    let mut pos = vec![ABSENT; n_keys];
    for (p, &(k, _)) in dist.ranked().iter().enumerate() {
        pos[k as usize] = p as u32;
    }
    pos
}

/// For each rank position, the `[start, end)` span of its count-tie group.
fn tie_groups(dist: &FreqDist) -> Vec<(u32, u32)> {
    let r = dist.ranked();
    let mut out = vec![(0, 0); r.len()];
    let mut s = 0;
    while s < r.len() {
        let mut e = s + 1;
        while e < r.len() && r[e].1 == r[s].1 {
            e += 1;
        }
        for slot in &mut out[s..e] {
            *slot = (s as u32, e as u32);
        }
        s = e;
    }
    out
}

impl<'a> TopN<'a> {
    fn new(a: &'a FreqDist, b: &'a FreqDist) -> Self {
        let n_keys = a.max_key().max(b.max_key()).map_or(0, |k| k as usize + 1);
        Self {
            a,
            b,
            pos_a: positions(a, n_keys),
            pos_b: positions(b, n_keys),
            ties_a: tie_groups(a),
            ties_b: tie_groups(b),
        }
    }

    /// Union of both top-N key sets, sorted by key.
    fn union(&self, n: usize) -> Vec<u32> {
        let mut keys: Vec<u32> = self.a.ranked()[..n.min(self.a.len())]
            .iter()
            .map(|&(k, _)| k)
            .collect();
        keys.extend(
            self.b.ranked()[..n.min(self.b.len())]
                .iter()
                .map(|&(k, _)| k)
                .filter(|&k| !in_top(self.pos_a[k as usize], n)),
        );
        keys.sort_unstable();
        keys
    }

    fn rank(pos: u32, ties: &[(u32, u32)], n: usize) -> f64 {
        if !in_top(pos, n) {
            return (n + 1) as f64;
        }
        let (s, e) = ties[pos as usize];
        let e = (e as usize).min(n);
        (s as usize + 1 + e) as f64 / 2.0
    }

    fn spearman(&self, n: usize) -> Result<f64> {
        let keys = self.union(n);
        let ra: Vec<f64> = keys
            .iter()
            .map(|&k| Self::rank(self.pos_a[k as usize], &self.ties_a, n))
            .collect();
        let rb: Vec<f64> = keys
            .iter()
            .map(|&k| Self::rank(self.pos_b[k as usize], &self.ties_b, n))
            .collect();
        // identical rankings agree perfectly even where the variance is zero,
        // e.g. a one-key union
        if ra == rb {
            return Ok(1.0);
        }
        pearson(&ra, &rb)
    }

    fn top_count(dist: &FreqDist, pos: u32, n: usize) -> f64 {
        if in_top(pos, n) {
            dist.ranked()[pos as usize].1 as f64
        } else {
            0.0
        }
    }

    fn cosine(&self, n: usize) -> Result<f64> {
        let keys = self.union(n);
        let va: Vec<f64> = keys
            .iter()
            .map(|&k| Self::top_count(self.a, self.pos_a[k as usize], n))
            .collect();
        let vb: Vec<f64> = keys
            .iter()
            .map(|&k| Self::top_count(self.b, self.pos_b[k as usize], n))
            .collect();
        cosine(&va, &vb)
    }

    /// Share of all annotations (both sides) whose key is in the union.
    fn coverage(&self, n: usize) -> f64 {
        let total = self.a.total() + self.b.total();
        let covered: u64 = self
            .union(n)
            .iter()
            .map(|&k| {
                let ca = self.pos_a[k as usize];
                let cb = self.pos_b[k as usize];
                let ca = if ca == ABSENT { 0 } else { self.a.ranked()[ca as usize].1 };
                let cb = if cb == ABSENT { 0 } else { self.b.ranked()[cb as usize].1 };
                ca + cb
            })
            .sum();
        covered as f64 / total as f64
    }
}

#[inline]
fn in_top(pos: u32, n: usize) -> bool {
    pos != ABSENT && (pos as usize) < n
}

/// Spearman correlation over the union of both sides' top `n` keys.
///
/// Identical rank vectors give exactly 1. Otherwise a side whose ranks are
/// all equal makes the correlation undefined.
pub fn spearman_topn(a: &FreqDist, b: &FreqDist, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("N must be >= 1"));
    }
    TopN::new(a, b).spearman(n)
}

/// Cosine similarity of raw counts over the union of both top-`n` key sets.
pub fn cosine_topn(a: &FreqDist, b: &FreqDist, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("N must be >= 1"));
    }
    TopN::new(a, b).cosine(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimilarityPoint {
    pub n: usize,
    /// `None` where the rank correlation is undefined (e.g. a one-key union).
    pub rho: Option<f64>,
    pub cosine: f64,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityCurve {
    pub points: Vec<SimilarityPoint>,
    /// Smallest `N` attaining the maximum defined `rho`.
    pub core_size: Option<usize>,
}

/// Every integer up to 100, then 20 log-spaced values per decade up to
/// 100,000, truncated at `limit` (which is itself included).
pub fn default_n_grid(limit: usize) -> Vec<usize> {
    const CEILING: usize = 100_000;
    let limit = limit.clamp(1, CEILING);
    let mut grid: Vec<usize> = (1..=limit.min(100)).collect();
    let mut k = 1;
    loop {
        let n = 10f64.powf(2.0 + k as f64 / 20.0).round() as usize;
        if n > limit {
            break;
        }
        if grid.last() != Some(&n) {
            grid.push(n);
        }
        k += 1;
    }
    if grid.last() != Some(&limit) {
        grid.push(limit);
    }
    grid
}

/// Evaluates rho, cosine and coverage at every `N` of `n_values`.
pub fn similarity_curve_from_dists(a: &FreqDist, b: &FreqDist, n_values: &[usize]) -> Result<SimilarityCurve> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain("similarity curve needs two non-empty sub-folksonomies"));
    }
    let mut ns: Vec<usize> = n_values.iter().copied().filter(|&n| n > 0).collect();
    ns.sort_unstable();
    ns.dedup();
    let topn = TopN::new(a, b);
    let points = ns
        .par_iter()
        .map(|&n| {
            let rho = match topn.spearman(n) {
                Ok(r) => Some(r),
                Err(Error::UndefinedCorrelation(_)) => None,
                Err(e) => return Err(e),
            };
            Ok(SimilarityPoint {
                n,
                rho,
                cosine: topn.cosine(n)?,
                coverage: topn.coverage(n),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut core_size = None;
    let mut best = f64::NEG_INFINITY;
    for p in &points {
        if let Some(r) = p.rho {
            if r > best {
                best = r;
                core_size = Some(p.n);
            }
        }
    }
    Ok(SimilarityCurve { points, core_size })
}

/// Similarity curve between supertaggers and others along `dimension`.
/// With `n_values = None` the [`default_n_grid`] is used.
pub fn similarity_curve(
    index: &FolksonomyIndex,
    partition: &Partition,
    dimension: Dimension,
    n_values: Option<&[usize]>,
) -> Result<SimilarityCurve> {
    partition.check_index(index)?;
    let a = group_dist(index, partition, Group::Supertaggers, dimension);
    let b = group_dist(index, partition, Group::Others, dimension);
    match n_values {
        Some(ns) => similarity_curve_from_dists(&a, &b, ns),
        None => similarity_curve_from_dists(&a, &b, &default_n_grid(a.len().max(b.len()))),
    }
}

/// Per popularity bin, mean of (supertagger annotations − other annotations)
/// over items with an exogenous popularity value, with its standard error.
pub fn exogenous_popularity_diff(
    index: &FolksonomyIndex,
    partition: &Partition,
    popularity: &BTreeMap<ItemId, f64>,
    spec: &BinSpec,
) -> Result<BinnedSeries> {
    partition.check_index(index)?;
    spec.validate()?;
    let pairs: Vec<(f64, f64)> = popularity
        .iter()
        .filter(|(item, _)| item.index() < index.n_items())
        .map(|(&item, &pop)| {
            let (mut s, mut o) = (0i64, 0i64);
            for r in index.item_records(item) {
                if partition.is_supertagger(r.user) {
                    s += 1;
                } else {
                    o += 1;
                }
            }
            (pop, (s - o) as f64)
        })
        .collect();
    if pairs.is_empty() {
        return Err(Error::domain("no indexed item has an exogenous popularity value"));
    }
    Ok(binned_mean(pairs, spec))
}
