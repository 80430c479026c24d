//! Per-item agreement between supertaggers and other users.

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{FolksonomyIndex, ItemId, TagId, UserId};
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::stats::{binned_mean, sum, BinSpec, BinnedSeries};

pub use crate::stats::log_bins;

/// Tag counts on one item within one group, sorted by tag. Counts are
/// distinct users per tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagDistribution<K = TagId> {
    counts: Vec<(K, u64)>,
}

impl<K: Ord + Copy> TagDistribution<K> {
    /// Duplicate keys are summed; zero counts are dropped.
    pub fn from_counts(counts: impl IntoIterator<Item = (K, u64)>) -> Self {
        let mut counts: Vec<(K, u64)> = counts.into_iter().filter(|&(_, c)| c > 0).collect();
        counts.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(K, u64)> = Vec::with_capacity(counts.len());
        for (k, c) in counts {
            match merged.last_mut() {
                Some(last) if last.0 == k => last.1 += c,
                _ => merged.push((k, c)),
            }
        }
        Self { counts: merged }
    }

    pub fn counts(&self) -> &[(K, u64)] {
        &self.counts
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Most frequent tag; the smallest key wins ties.
    pub fn top_tag(&self) -> Option<K> {
        let mut best: Option<(K, u64)> = None;
        for &(k, c) in &self.counts {
            // keys ascend, so a strictly greater count is needed to replace
            if best.map_or(true, |(_, bc)| c > bc) {
                best = Some((k, c));
            }
        }
        best.map(|(k, _)| k)
    }
}

/// Whether both groups agree on the item's most popular tag. `None` when the
/// item was not tagged by both groups.
pub fn top_tag_match<K: Ord + Copy>(s: &TagDistribution<K>, others: &TagDistribution<K>) -> Option<bool> {
    Some(s.top_tag()? == others.top_tag()?)
}

/// Cosine similarity of the two tag distributions over the item's joint
/// vocabulary. `None` when either side is empty.
pub fn item_cosine<K: Ord + Copy>(s: &TagDistribution<K>, others: &TagDistribution<K>) -> Option<f64> {
    if s.is_empty() || others.is_empty() {
        return None;
    }
    if s == others {
        return Some(1.0);
    }
    let (a, b) = (s.counts(), others.counts());
    let (mut i, mut j) = (0, 0);
    let mut dot = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dot.push(a[i].1 as f64 * b[j].1 as f64);
                i += 1;
                j += 1;
            }
        }
    }
    let na = sum(a.iter().map(|&(_, c)| (c * c) as f64)).sqrt();
    let nb = sum(b.iter().map(|&(_, c)| (c * c) as f64)).sqrt();
    Some((sum(dot) / (na * nb)).clamp(0.0, 1.0))
}

/// Distinct-user tag distributions of `item` for supertaggers and others.
pub fn item_tag_distributions(
    index: &FolksonomyIndex,
    partition: &Partition,
    item: ItemId,
) -> (TagDistribution, TagDistribution) {
    let mut pairs: Vec<(TagId, UserId)> = index.item_records(item).map(|r| (r.tag, r.user)).collect();
    pairs.sort_unstable();
    pairs.dedup();
    let (mut s, mut o) = (Vec::new(), Vec::new());
    for (tag, user) in pairs {
        if partition.is_supertagger(user) {
            s.push((tag, 1));
        } else {
            o.push((tag, 1));
        }
    }
    (TagDistribution::from_counts(s), TagDistribution::from_counts(o))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsensusSeries {
    pub top_match: BinnedSeries,
    pub cosine: BinnedSeries,
    /// Items tagged by both groups.
    pub shared_items: usize,
}

/// Top-tag match rate and mean tag-distribution cosine over items tagged by
/// both groups, binned by each item's total annotation count.
pub fn consensus_by_bin(index: &FolksonomyIndex, partition: &Partition, spec: &BinSpec) -> Result<ConsensusSeries> {
    partition.check_index(index)?;
    spec.validate()?;
    let scored: Vec<(f64, f64, f64)> = (0..index.n_items() as u32)
        .into_par_iter()
        .filter_map(|i| {
            let item = ItemId(i);
            let (s, o) = item_tag_distributions(index, partition, item);
            let matched = top_tag_match(&s, &o)?;
            let cos = item_cosine(&s, &o)?;
            let key = index.item_annotation_count(item) as f64;
            Some((key, if matched { 1.0 } else { 0.0 }, cos))
        })
        .collect();
    if scored.is_empty() {
        return Err(Error::domain("no item is tagged by both supertaggers and others"));
    }
    Ok(ConsensusSeries {
        top_match: binned_mean(scored.iter().map(|&(k, m, _)| (k, m)), spec),
        cosine: binned_mean(scored.iter().map(|&(k, _, c)| (k, c)), spec),
        shared_items: scored.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn td(counts: &[(&'static str, u64)]) -> TagDistribution<&'static str> {
        TagDistribution::from_counts(counts.iter().copied())
    }

    #[test]
    fn top_tag_examples() {
        assert_eq!(top_tag_match(&td(&[("rock", 3), ("jazz", 1)]), &td(&[("rock", 2)])), Some(true));
        assert_eq!(top_tag_match(&td(&[("rock", 3)]), &td(&[("jazz", 2)])), Some(false));
        // tie resolves to "jazz"
        assert_eq!(top_tag_match(&td(&[("rock", 2), ("jazz", 2)]), &td(&[("jazz", 5)])), Some(true));
        assert_eq!(top_tag_match(&td(&[]), &td(&[("jazz", 5)])), None);
    }

    #[test]
    fn cosine_examples() {
        let a = td(&[("a", 2), ("b", 7)]);
        assert_eq!(item_cosine(&a, &a), Some(1.0));
        assert_eq!(item_cosine(&td(&[("a", 1)]), &td(&[("b", 1)])), Some(0.0));
        let c = item_cosine(&td(&[("a", 1), ("b", 1)]), &td(&[("a", 1)])).unwrap();
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(item_cosine(&td(&[]), &a), None);
    }

    #[test]
    fn scaling_one_side_changes_nothing() {
        let a = td(&[("a", 1), ("b", 3), ("c", 2)]);
        let b = td(&[("a", 2), ("b", 1)]);
        let b3 = td(&[("a", 6), ("b", 3)]);
        assert_eq!(top_tag_match(&a, &b), top_tag_match(&a, &b3));
        assert!((item_cosine(&a, &b).unwrap() - item_cosine(&a, &b3).unwrap()).abs() < 1e-15);
    }
}
