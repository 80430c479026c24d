//! Tag taxonomies induced from conditional co-occurrence over items, and
//! term-depth expertise on top of them.
//!
//! Global tag frequency here is the number of distinct items carrying the
//! tag. With that choice `P(A|B) > P(B|A)` holds exactly when `A` is the more
//! frequent tag, so the frequency ordering of parents is implied by the
//! threshold rule rather than an extra filter.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{FolksonomyIndex, TagId, UserId};
use crate::error::{Error, Result};
use crate::stats::{bin_user_scores, BinSpec, BinnedSeries, CompensatedSum};

pub const DEFAULT_THRESHOLD: f64 = 0.8;
pub const DEFAULT_MIN_SUPPORT: u64 = 10;

/// Pairwise co-occurrence between tags over distinct items.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTable {
    /// tag -> number of distinct items carrying it
    frequency: BTreeMap<TagId, u64>,
    /// (a, b) with a < b -> items carrying both
    support: BTreeMap<(TagId, TagId), u64>,
}

impl ConditionalTable {
    /// Builds a table from explicit frequencies and pair supports. Pairs may
    /// be given in either order but only once.
    pub fn from_parts(
        frequency: impl IntoIterator<Item = (TagId, u64)>,
        support: impl IntoIterator<Item = ((TagId, TagId), u64)>,
    ) -> Result<Self> {
        let frequency: BTreeMap<TagId, u64> = frequency.into_iter().collect();
        let mut pairs = BTreeMap::new();
        for ((a, b), s) in support {
            if a == b {
                return Err(Error::domain("self-pairs are not allowed"));
            }
            let (fa, fb) = match (frequency.get(&a), frequency.get(&b)) {
                (Some(&fa), Some(&fb)) => (fa, fb),
                _ => return Err(Error::domain("pair references a tag without frequency")),
            };
            if s == 0 || s > fa.min(fb) {
                return Err(Error::domain("pair support must be in 1..=min(freq)"));
            }
            if pairs.insert((a.min(b), a.max(b)), s).is_some() {
                return Err(Error::domain("duplicate pair"));
            }
        }
        Ok(Self { frequency, support: pairs })
    }

    pub fn tags(&self) -> impl Iterator<Item = TagId> + '_ {
        self.frequency.keys().copied()
    }

    pub fn frequency(&self, tag: TagId) -> u64 {
        self.frequency.get(&tag).copied().unwrap_or(0)
    }

    pub fn support(&self, a: TagId, b: TagId) -> Option<u64> {
        self.support.get(&(a.min(b), a.max(b))).copied()
    }

    /// `P(a | b)`, present only for pairs in the table.
    pub fn probability(&self, a: TagId, b: TagId) -> Option<f64> {
        let s = self.support(a, b)?;
        Some(s as f64 / self.frequency(b) as f64)
    }

    /// Unordered pairs `(a, b, support)` with `a < b`.
    pub fn pairs(&self) -> impl Iterator<Item = (TagId, TagId, u64)> + '_ {
        self.support.iter().map(|(&(a, b), &s)| (a, b, s))
    }

    pub fn n_pairs(&self) -> usize {
        self.support.len()
    }
}

/// Co-occurrence table over `tags`, keeping pairs seen on at least
/// `min_support` common items.
pub fn conditional_table(index: &FolksonomyIndex, tags: &[TagId], min_support: u64) -> ConditionalTable {
    let mut tags = tags.to_vec();
    tags.sort_unstable();
    tags.dedup();
    let local = |t: TagId| tags.binary_search(&t).ok();

    // item -> eligible local tags, and local tag -> items
    let mut item_offsets = Vec::with_capacity(index.n_items() + 1);
    let mut item_tags: Vec<u32> = Vec::new();
    item_offsets.push(0);
    let mut tag_items: Vec<Vec<u32>> = vec![Vec::new(); tags.len()];
    for item in index.item_ids() {
        for &(t, _) in index.item_tag_counts(item) {
            if let Some(k) = local(t) {
                item_tags.push(k as u32);
                tag_items[k].push(item.0);
            }
        }
        item_offsets.push(item_tags.len());
    }

    let frequency = tags.iter().zip(&tag_items).map(|(&t, items)| (t, items.len() as u64)).collect();
    let rows: Vec<Vec<((TagId, TagId), u64)>> = (0..tags.len())
        .into_par_iter()
        .map_init(
            || vec![0u64; tags.len()],
            |counts, a| {
                let mut touched = Vec::new();
                for &item in &tag_items[a] {
                    let item = item as usize;
                    // item tags are sorted, so only partners above `a` are visited
                    let row = &item_tags[item_offsets[item]..item_offsets[item + 1]];
                    let start = row.partition_point(|&b| b as usize <= a);
                    for &b in &row[start..] {
                        if counts[b as usize] == 0 {
                            touched.push(b);
                        }
                        counts[b as usize] += 1;
                    }
                }
                touched.sort_unstable();
                let mut out = Vec::new();
                for b in touched {
                    let s = std::mem::take(&mut counts[b as usize]);
                    if s >= min_support.max(1) {
                        out.push(((tags[a], tags[b as usize]), s));
                    }
                }
                out
            },
        )
        .collect();
    ConditionalTable { frequency, support: rows.into_iter().flatten().collect() }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaxonomyNode {
    pub tag: TagId,
    pub parent: Option<TagId>,
    pub root: TagId,
    pub raw_depth: u32,
    pub norm_depth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaxonomyForest {
    /// Connected tags in id order.
    pub nodes: Vec<TaxonomyNode>,
    /// Tags of the table with no subclass relation, in id order.
    pub disconnected: Vec<TagId>,
    pub threshold: f64,
}

impl TaxonomyForest {
    pub fn node(&self, tag: TagId) -> Option<&TaxonomyNode> {
        self.nodes.binary_search_by_key(&tag, |n| n.tag).ok().map(|k| &self.nodes[k])
    }

    pub fn norm_depth(&self, tag: TagId) -> Option<f64> {
        self.node(tag).map(|n| n.norm_depth)
    }

    pub fn n_trees(&self) -> usize {
        self.nodes.iter().filter(|n| n.parent.is_none()).count()
    }

    pub fn max_raw_depth(&self) -> u32 {
        self.nodes.iter().map(|n| n.raw_depth).max().unwrap_or(0)
    }

    /// Share of `index` annotations whose tag is connected.
    pub fn coverage(&self, index: &FolksonomyIndex) -> f64 {
        if index.is_empty() {
            return 0.0;
        }
        let covered: usize = self.nodes.iter().map(|n| index.tag_annotation_count(n.tag)).sum();
        covered as f64 / index.len() as f64
    }
}

/// Attaches every tag to its most probable superclass. `A` is a superclass
/// candidate of `B` when `P(A|B) >= threshold`, `P(B|A) < threshold` and `A`
/// is strictly more frequent. Ties go to the more frequent candidate, then
/// the smaller id.
pub fn induce_forest(table: &ConditionalTable, threshold: f64) -> Result<TaxonomyForest> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::domain("threshold must be in (0, 1]"));
    }
    let mut parent: BTreeMap<TagId, (TagId, f64)> = BTreeMap::new();
    let mut consider = |child: TagId, cand: TagId| {
        let (Some(up), Some(down)) = (table.probability(cand, child), table.probability(child, cand)) else {
            return;
        };
        if up < threshold || down >= threshold || table.frequency(cand) <= table.frequency(child) {
            return;
        }
        let better = match parent.get(&child) {
            None => true,
            Some(&(cur, p)) => {
                up > p
                    || (up == p
                        && (table.frequency(cand) > table.frequency(cur)
                            || (table.frequency(cand) == table.frequency(cur) && cand < cur)))
            }
        };
        if better {
            parent.insert(child, (cand, up));
        }
    };
    for (a, b, _) in table.pairs() {
        consider(a, b);
        consider(b, a);
    }

    let mut connected: Vec<TagId> = parent.iter().flat_map(|(&c, &(p, _))| [c, p]).collect();
    connected.sort_unstable();
    connected.dedup();

    // parents are strictly more frequent, so descending frequency visits
    // every parent before its children
    let mut order = connected.clone();
    order.sort_by(|&a, &b| table.frequency(b).cmp(&table.frequency(a)).then(a.cmp(&b)));
    let mut placed: BTreeMap<TagId, (TagId, u32)> = BTreeMap::new();
    for &t in &order {
        let entry = match parent.get(&t) {
            None => (t, 0),
            Some(&(p, _)) => {
                let (root, d) = placed[&p];
                (root, d + 1)
            }
        };
        placed.insert(t, entry);
    }
    let mut tree_depth: BTreeMap<TagId, u32> = BTreeMap::new();
    for &(root, d) in placed.values() {
        let m = tree_depth.entry(root).or_insert(0);
        *m = (*m).max(d);
    }
    let nodes = connected
        .iter()
        .map(|&t| {
            let (root, d) = placed[&t];
            let max = tree_depth[&root];
            TaxonomyNode {
                tag: t,
                parent: parent.get(&t).map(|&(p, _)| p),
                root,
                raw_depth: d,
                norm_depth: if max == 0 { 0.0 } else { d as f64 / max as f64 },
            }
        })
        .collect();
    let disconnected = table.tags().filter(|t| connected.binary_search(t).is_err()).collect();
    Ok(TaxonomyForest { nodes, disconnected, threshold })
}

/// How a user's depth scores are averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthMode {
    /// Over every annotation on a connected tag.
    Annotation,
    /// Over the user's distinct connected tags.
    Vocabulary,
}

impl FromStr for DepthMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "annotation" => Ok(Self::Annotation),
            "vocabulary" => Ok(Self::Vocabulary),
            _ => Err(Error::domain(format!("unknown depth mode `{s}` (annotation|vocabulary)"))),
        }
    }
}

pub fn user_depth_by_id(index: &FolksonomyIndex, forest: &TaxonomyForest, user: UserId, mode: DepthMode) -> Option<f64> {
    let mut tags: Vec<TagId> = index.user_records(user).map(|r| r.tag).collect();
    if mode == DepthMode::Vocabulary {
        tags.sort_unstable();
        tags.dedup();
    }
    let mut acc = CompensatedSum::new();
    let mut n = 0usize;
    for t in tags {
        if let Some(d) = forest.norm_depth(t) {
            acc.add(d);
            n += 1;
        }
    }
    (n > 0).then(|| acc.total() / n as f64)
}

/// Mean normalized depth of the user's connected tags; `Ok(None)` when the
/// user never used a connected tag.
pub fn user_depth_expertise(
    index: &FolksonomyIndex,
    forest: &TaxonomyForest,
    user: &str,
    mode: DepthMode,
) -> Result<Option<f64>> {
    let u = index.require_user(user)?;
    Ok(user_depth_by_id(index, forest, u, mode))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthExpertise {
    pub user_scores: Vec<(UserId, f64)>,
    pub series: BinnedSeries,
    pub coverage: f64,
}

/// Depth scores of every user with a connected tag, in user-id order,
/// computed on the deduplicated view of `index`.
pub fn depth_user_scores(index: &FolksonomyIndex, forest: &TaxonomyForest, mode: DepthMode) -> Vec<(UserId, f64)> {
    let view: Cow<'_, FolksonomyIndex> = if index.is_deduplicated() {
        Cow::Borrowed(index)
    } else {
        Cow::Owned(index.deduplicated())
    };
    (0..view.n_users() as u32)
        .into_par_iter()
        .filter_map(|u| user_depth_by_id(&view, forest, UserId(u), mode).map(|s| (UserId(u), s)))
        .collect()
}

/// Binned depth expertise keyed by each user's annotation count in `index`.
pub fn depth_by_bin(
    index: &FolksonomyIndex,
    forest: &TaxonomyForest,
    spec: &BinSpec,
    mode: DepthMode,
) -> Result<DepthExpertise> {
    spec.validate()?;
    let user_scores = depth_user_scores(index, forest, mode);
    if user_scores.is_empty() {
        return Err(Error::domain("no user applied a connected tag"));
    }
    let series = bin_user_scores(index, &user_scores, spec);
    Ok(DepthExpertise { user_scores, series, coverage: forest.coverage(index) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Annotation, TimeGranularity};

    /// "rock" on 100 items, "classic rock" on 10 of them.
    fn rock_index() -> FolksonomyIndex {
        let mut anns = Vec::new();
        for k in 0..100 {
            anns.push(Annotation::new("u", &format!("i{k:03}"), "rock", 0).unwrap());
            if k < 10 {
                anns.push(Annotation::new("u", &format!("i{k:03}"), "classic rock", 0).unwrap());
            }
        }
        FolksonomyIndex::build(&anns, TimeGranularity::Seconds, true)
    }

    #[test]
    fn rock_fixture() {
        let idx = rock_index();
        let all: Vec<TagId> = idx.tag_ids().collect();
        let table = conditional_table(&idx, &all, 10);
        let (rock, classic) = (idx.tag_id("rock").unwrap(), idx.tag_id("classic rock").unwrap());
        assert_eq!(table.probability(rock, classic), Some(1.0));
        assert_eq!(table.probability(classic, rock), Some(0.1));
        assert_eq!(table.support(rock, classic), table.support(classic, rock));

        let forest = induce_forest(&table, 0.8).unwrap();
        let c = forest.node(classic).unwrap();
        assert_eq!(c.parent, Some(rock));
        assert_eq!((c.raw_depth, c.norm_depth), (1, 1.0));
        let r = forest.node(rock).unwrap();
        assert_eq!((r.raw_depth, r.norm_depth, r.parent), (0, 0.0, None));

        // support 10 is below a min_support of 11
        assert_eq!(conditional_table(&idx, &all, 11).n_pairs(), 0);
    }

    #[test]
    fn below_threshold_disconnects_everything() {
        let t = |k| TagId(k);
        let table = ConditionalTable::from_parts([(t(0), 10), (t(1), 10)], [((t(0), t(1)), 5)]).unwrap();
        let forest = induce_forest(&table, 0.8).unwrap();
        assert!(forest.nodes.is_empty());
        assert_eq!(forest.disconnected, vec![t(0), t(1)]);
        assert!(ConditionalTable::from_parts([(t(0), 10)], [((t(0), t(0)), 5)]).is_err());
    }

    #[test]
    fn chain_fixture() {
        let t = |k| TagId(k);
        // a (100 items) <- b (50) <- c (20); P(b|a) = 0.45, P(a|b) = 0.9,
        // P(b|c) = 0.9, P(a|c) = 0.8, so c attaches to the more probable b
        let table = ConditionalTable::from_parts(
            [(t(0), 100), (t(1), 50), (t(2), 20)],
            [((t(0), t(1)), 45), ((t(1), t(2)), 18), ((t(0), t(2)), 16)],
        )
        .unwrap();
        let forest = induce_forest(&table, 0.8).unwrap();
        let depths: Vec<(u32, f64)> = forest.nodes.iter().map(|n| (n.raw_depth, n.norm_depth)).collect();
        assert_eq!(depths, vec![(0, 0.0), (1, 0.5), (2, 1.0)]);
        assert_eq!(forest.node(t(2)).unwrap().parent, Some(t(1)));

        // equal probabilities go to the more frequent candidate
        let table = ConditionalTable::from_parts(
            [(t(0), 100), (t(1), 50), (t(2), 20)],
            [((t(0), t(1)), 45), ((t(1), t(2)), 18), ((t(0), t(2)), 18)],
        )
        .unwrap();
        let forest = induce_forest(&table, 0.8).unwrap();
        assert_eq!(forest.node(t(2)).unwrap().parent, Some(t(0)));
    }

    #[test]
    fn depth_modes() {
        let t = |k| TagId(k);
        let forest = TaxonomyForest {
            nodes: vec![
                TaxonomyNode { tag: t(0), parent: None, root: t(0), raw_depth: 0, norm_depth: 0.0 },
                TaxonomyNode { tag: t(1), parent: Some(t(0)), root: t(0), raw_depth: 1, norm_depth: 1.0 },
            ],
            disconnected: vec![t(2)],
            threshold: 0.8,
        };
        let mut anns = Vec::new();
        for k in 0..9 {
            anns.push(Annotation::new("u", &format!("i{k}"), "a_root", 0).unwrap());
        }
        anns.push(Annotation::new("u", "i9", "b_leaf", 0).unwrap());
        anns.push(Annotation::new("v", "i0", "c_loose", 0).unwrap());
        anns.push(Annotation::new("w", "i0", "a_root", 0).unwrap());
        let idx = FolksonomyIndex::build(&anns, TimeGranularity::Seconds, true);
        let a = user_depth_expertise(&idx, &forest, "u", DepthMode::Annotation).unwrap().unwrap();
        assert!((a - 0.1).abs() < 1e-15);
        assert_eq!(user_depth_expertise(&idx, &forest, "u", DepthMode::Vocabulary).unwrap(), Some(0.5));
        assert_eq!(user_depth_expertise(&idx, &forest, "v", DepthMode::Vocabulary).unwrap(), None);
        assert_eq!(user_depth_expertise(&idx, &forest, "w", DepthMode::Annotation).unwrap(), Some(0.0));
    }
}
