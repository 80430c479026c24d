//! Inequality of tagging volume and the supertagger / non-supertagger split.

use serde::Serialize;

use crate::corpus::{FolksonomyIndex, ItemId, TagId, UserId};
use crate::error::{Error, Result};
use crate::stats::{sum, Quartiles};

/// Gini coefficient, `G = 2·Σ i·y_i / (n·Σ y_i) − (n+1)/n` over values sorted
/// non-decreasing with `i` starting at 1.
pub fn gini(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::domain("gini of an empty sample"));
    }
    if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::domain("gini requires finite non-negative values"));
    }
    let mut y = values.to_vec();
    y.sort_by(f64::total_cmp);
    let total = sum(y.iter().copied());
    if total <= 0.0 {
        return Err(Error::domain("gini of an all-zero sample"));
    }
    let n = y.len() as f64;
    let weighted = sum(y.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v));
    let g = 2.0 * weighted / (n * total) - (n + 1.0) / n;
    // equal values must give exactly zero
    if y[0] == y[y.len() - 1] {
        return Ok(0.0);
    }
    Ok(g.max(0.0))
}

/// Gini over per-user annotation counts of `index`.
pub fn user_gini(index: &FolksonomyIndex) -> Result<f64> {
    let counts: Vec<f64> = index
        .user_ids()
        .map(|u| index.user_annotation_count(u) as f64)
        .filter(|&c| c > 0.0)
        .collect();
    gini(&counts)
}

/// Users by descending annotation count, ties broken lexicographically.
pub fn rank_users(index: &FolksonomyIndex) -> Vec<UserId> {
    let mut users: Vec<UserId> = index.user_ids().collect();
    users.sort_by(|&a, &b| {
        index
            .user_annotation_count(b)
            .cmp(&index.user_annotation_count(a))
            .then(a.cmp(&b))
    });
    users
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Supertaggers,
    Others,
}

/// The supertagger split of one index.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    supertaggers: Vec<UserId>,
    others: Vec<UserId>,
    membership: Vec<bool>,
    annotation_threshold: usize,
    target_fraction: f64,
    total_annotations: usize,
}

impl Partition {
    /// Supertaggers in rank order.
    pub fn supertaggers(&self) -> &[UserId] {
        &self.supertaggers
    }

    /// Remaining users in rank order.
    pub fn others(&self) -> &[UserId] {
        &self.others
    }

    pub fn is_supertagger(&self, user: UserId) -> bool {
        self.membership.get(user.index()).copied().unwrap_or(false)
    }

    pub fn group_of(&self, user: UserId) -> Group {
        if self.is_supertagger(user) {
            Group::Supertaggers
        } else {
            Group::Others
        }
    }

    /// Annotation count of the last user admitted to the supertaggers.
    pub fn annotation_threshold(&self) -> usize {
        self.annotation_threshold
    }

    pub fn target_fraction(&self) -> f64 {
        self.target_fraction
    }

    /// Fails unless this partition was derived from `index`.
    pub fn check_index(&self, index: &FolksonomyIndex) -> Result<()> {
        if self.membership.len() != index.n_users() || self.total_annotations != index.len() {
            return Err(Error::domain("partition was not derived from this index"));
        }
        Ok(())
    }
}

/// Splits users into the shortest rank prefix holding at least
/// `target_fraction` of all annotations and everyone else.
///
/// Users tied at the boundary count are admitted one at a time in rank
/// (lexicographic) order, so the cut is always a strict prefix.
pub fn split_supertaggers(index: &FolksonomyIndex, target_fraction: f64) -> Result<Partition> {
    if !(target_fraction > 0.0 && target_fraction <= 1.0) {
        return Err(Error::domain("target fraction must lie in (0, 1]"));
    }
    if index.is_empty() {
        return Err(Error::domain("cannot partition an empty index"));
    }
    let ranked = rank_users(index);
    let total = index.len();
    let goal = target_fraction * total as f64;
    let mut acc = 0usize;
    let mut cut = ranked.len();
    for (i, &u) in ranked.iter().enumerate() {
        acc += index.user_annotation_count(u);
        if acc as f64 >= goal {
            cut = i + 1;
            break;
        }
    }
    let (supertaggers, others) = ranked.split_at(cut);
    let mut membership = vec![false; index.n_users()];
    for u in supertaggers {
        membership[u.index()] = true;
    }
    Ok(Partition {
        annotation_threshold: index.user_annotation_count(supertaggers[cut - 1]),
        supertaggers: supertaggers.to_vec(),
        others: others.to_vec(),
        membership,
        target_fraction,
        total_annotations: total,
    })
}

/// Cumulative annotation share against cumulative share of top users.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoCurve {
    pub points: Vec<(f64, f64)>,
}

/// Pareto curve of `index`. With `resolution = Some(k)` the curve is sampled
/// at `k` ranks spread uniformly over `0..=n_users`; `None` keeps every rank.
/// The endpoints `(0, 0)` and `(1, 1)` are always present.
pub fn pareto_curve(index: &FolksonomyIndex, resolution: Option<usize>) -> Result<ParetoCurve> {
    if index.is_empty() {
        return Err(Error::domain("pareto curve of an empty index"));
    }
    let ranked = rank_users(index);
    let n = ranked.len();
    let total = index.len() as f64;
    let mut cumulative = Vec::with_capacity(n + 1);
    cumulative.push(0usize);
    for &u in &ranked {
        cumulative.push(cumulative.last().unwrap() + index.user_annotation_count(u));
    }
    let ranks: Vec<usize> = match resolution {
        Some(k) if k >= 2 && k <= n => {
            let mut r: Vec<usize> = (0..k)
                .map(|j| ((j as f64 * n as f64) / (k - 1) as f64).round() as usize)
                .collect();
            r.dedup();
            r
        }
        _ => (0..=n).collect(),
    };
    let points = ranks
        .into_iter()
        .map(|k| (k as f64 / n as f64, cumulative[k] as f64 / total))
        .collect();
    Ok(ParetoCurve { points })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub users: usize,
    pub annotations: usize,
    /// Distinct tags used at least once by the group.
    pub total_tags: usize,
    /// Tags used by this group only.
    pub unique_tags: usize,
    pub total_items: usize,
    pub unique_items: usize,
    pub per_user_annotations: Quartiles,
    pub per_user_tags: Quartiles,
    pub per_user_items: Quartiles,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionSummary {
    pub supertaggers: GroupSummary,
    pub others: GroupSummary,
    pub shared_tags: usize,
    pub shared_items: usize,
}

pub fn partition_summary(index: &FolksonomyIndex, partition: &Partition) -> Result<PartitionSummary> {
    partition.check_index(index)?;
    // bit 0: used by supertaggers, bit 1: used by others
    let mut tag_use = vec![0u8; index.n_tags()];
    let mut item_use = vec![0u8; index.n_items()];
    for r in index.records() {
        let bit = if partition.is_supertagger(r.user) { 1 } else { 2 };
        tag_use[r.tag.index()] |= bit;
        item_use[r.item.index()] |= bit;
    }
    let count = |uses: &[u8], pred: fn(u8) -> bool| uses.iter().filter(|&&b| pred(b)).count();

    let group = |users: &[UserId], bit: u8| {
        let mut annotations = Vec::with_capacity(users.len());
        let mut tags = Vec::with_capacity(users.len());
        let mut items = Vec::with_capacity(users.len());
        for &u in users {
            let s = index.user_stats_by_id(u);
            annotations.push(s.annotations as u64);
            tags.push(s.distinct_tags as u64);
            items.push(s.distinct_items as u64);
        }
        GroupSummary {
            users: users.len(),
            annotations: annotations.iter().sum::<u64>() as usize,
            total_tags: tag_use.iter().filter(|&&b| b & bit != 0).count(),
            unique_tags: tag_use.iter().filter(|&&b| b == bit).count(),
            total_items: item_use.iter().filter(|&&b| b & bit != 0).count(),
            unique_items: item_use.iter().filter(|&&b| b == bit).count(),
            per_user_annotations: Quartiles::of(&mut annotations),
            per_user_tags: Quartiles::of(&mut tags),
            per_user_items: Quartiles::of(&mut items),
        }
    };

    Ok(PartitionSummary {
        supertaggers: group(partition.supertaggers(), 1),
        others: group(partition.others(), 2),
        shared_tags: count(&tag_use, |b| b == 3),
        shared_items: count(&item_use, |b| b == 3),
    })
}

/// Tags of `index` used by the given group.
pub fn group_tags(index: &FolksonomyIndex, partition: &Partition, group: Group) -> Vec<TagId> {
    let mut tags: Vec<TagId> = index
        .records()
        .iter()
        .filter(|r| partition.group_of(r.user) == group)
        .map(|r| r.tag)
        .collect();
    tags.sort_unstable();
    tags.dedup();
    tags
}

/// Items of `index` annotated by the given group.
pub fn group_items(index: &FolksonomyIndex, partition: &Partition, group: Group) -> Vec<ItemId> {
    let mut items: Vec<ItemId> = index
        .records()
        .iter()
        .filter(|r| partition.group_of(r.user) == group)
        .map(|r| r.item)
        .collect();
    items.sort_unstable();
    items.dedup();
    items
}
