//! Consensus-based expertise: how close a user's tag choices are to each
//! item's eventual most popular tag, weighted by how heavily the item is
//! tagged by everyone else.

use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{FolksonomyIndex, ItemId, TagId, UserId};
use crate::error::{Error, Result};
use crate::stats::{bin_user_scores, BinSpec, BinnedSeries, CompensatedSum};

/// What `F(t, i)` counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrequencyMode {
    /// Distinct users applying the tag to the item.
    #[default]
    DistinctUsers,
    /// Every annotation record, repeats included.
    RawAnnotations,
}

impl FromStr for FrequencyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "distinct" | "distinct-users" => Ok(Self::DistinctUsers),
            "raw" | "raw-annotations" => Ok(Self::RawAnnotations),
            _ => Err(Error::domain(format!("unknown frequency mode `{s}` (distinct|raw)"))),
        }
    }
}

/// Per-item tag frequencies under one [`FrequencyMode`], with the item totals
/// and maxima precomputed.
pub struct ConsensusScorer<'a> {
    index: &'a FolksonomyIndex,
    mode: FrequencyMode,
    offsets: Vec<usize>,
    freqs: Vec<(TagId, u64)>,
    totals: Vec<u64>,
    maxima: Vec<u64>,
}

impl<'a> ConsensusScorer<'a> {
    pub fn new(index: &'a FolksonomyIndex, mode: FrequencyMode) -> Self {
        let mut offsets = Vec::with_capacity(index.n_items() + 1);
        let mut freqs = Vec::new();
        let mut totals = Vec::with_capacity(index.n_items());
        let mut maxima = Vec::with_capacity(index.n_items());
        offsets.push(0);
        let mut tags = Vec::new();
        for item in index.item_ids() {
            let start = freqs.len();
            match mode {
                FrequencyMode::DistinctUsers => {
                    freqs.extend(index.item_tag_counts(item).iter().map(|&(t, c)| (t, c as u64)));
                }
                FrequencyMode::RawAnnotations => {
                    tags.clear();
                    tags.extend(index.item_records(item).map(|r| r.tag));
                    tags.sort_unstable();
                    for chunk in tags.chunk_by(|a, b| a == b) {
                        freqs.push((chunk[0], chunk.len() as u64));
                    }
                }
            }
            let slice = &freqs[start..];
            totals.push(slice.iter().map(|f| f.1).sum());
            maxima.push(slice.iter().map(|f| f.1).max().unwrap_or(0));
            offsets.push(freqs.len());
        }
        Self { index, mode, offsets, freqs, totals, maxima }
    }

    pub fn mode(&self) -> FrequencyMode {
        self.mode
    }

    fn item_freqs(&self, item: ItemId) -> &[(TagId, u64)] {
        &self.freqs[self.offsets[item.index()]..self.offsets[item.index() + 1]]
    }

    /// `F(t, i)`.
    pub fn frequency(&self, item: ItemId, tag: TagId) -> u64 {
        let f = self.item_freqs(item);
        f.binary_search_by_key(&tag, |e| e.0).map_or(0, |k| f[k].1)
    }

    /// `E`: 1 for any tag tied for the item's top frequency, otherwise
    /// `(F(t, i) - 1) / max_x F(x, i)`.
    pub fn score_by_id(&self, item: ItemId, tag: TagId) -> f64 {
        let f = self.frequency(item, tag);
        let max = self.maxima[item.index()];
        if f == max {
            1.0
        } else {
            f.saturating_sub(1) as f64 / max as f64
        }
    }

    /// `F(u, i)`: the user's own contribution to the item's distribution.
    pub fn own_contribution(&self, user: UserId, item: ItemId) -> u64 {
        let mut tags: Vec<TagId> = self
            .index
            .user_records(user)
            .filter(|r| r.item == item)
            .map(|r| r.tag)
            .collect();
        if self.mode == FrequencyMode::DistinctUsers {
            tags.sort_unstable();
            tags.dedup();
        }
        tags.len() as u64
    }

    /// `W = log10(sum_t F(t, i) - F(u, i))`. `None` when the argument is 0,
    /// meaning only this user tagged the item.
    pub fn weight_from(&self, item: ItemId, own: u64) -> Option<f64> {
        let arg = self.totals[item.index()].saturating_sub(own);
        match arg {
            0 => None,
            1 => Some(0.0),
            n => Some((n as f64).log10()),
        }
    }

    /// `Ē` for one user, or `None` when no item carries a weight.
    pub fn user_score_by_id(&self, user: UserId) -> Option<f64> {
        // (item, tag) pairs plus raw multiplicity
        let mut uses: Vec<(ItemId, TagId)> = self.index.user_records(user).map(|r| (r.item, r.tag)).collect();
        uses.sort_unstable();
        let (mut num, mut den) = (CompensatedSum::new(), CompensatedSum::new());
        let mut any = false;
        for chunk in uses.chunk_by(|a, b| a.0 == b.0) {
            let item = chunk[0].0;
            let own = match self.mode {
                FrequencyMode::RawAnnotations => chunk.len() as u64,
                FrequencyMode::DistinctUsers => chunk.chunk_by(|a, b| a.1 == b.1).count() as u64,
            };
            let Some(w) = self.weight_from(item, own) else { continue };
            let e = chunk.iter().map(|&(_, t)| self.score_by_id(item, t)).fold(0.0, f64::max);
            num.add(e * w);
            den.add(w);
            any = true;
        }
        let den = den.total();
        if !any || den <= 0.0 {
            return None;
        }
        Some((num.total() / den).clamp(0.0, 1.0))
    }
}

/// `E` for an existing (user, item, tag) triple.
pub fn annotation_score(scorer: &ConsensusScorer<'_>, user: &str, item: &str, tag: &str) -> Result<f64> {
    let index = scorer.index;
    let (u, i, t) = (index.require_user(user)?, index.require_item(item)?, index.require_tag(tag)?);
    if !index.user_records(u).any(|r| r.item == i && r.tag == t) {
        return Err(Error::not_found("annotation", format!("{user}/{item}/{tag}")));
    }
    Ok(scorer.score_by_id(i, t))
}

/// `W` for a user on an item they tagged; `None` marks an excluded item.
pub fn annotation_weight(scorer: &ConsensusScorer<'_>, user: &str, item: &str) -> Result<Option<f64>> {
    let index = scorer.index;
    let (u, i) = (index.require_user(user)?, index.require_item(item)?);
    let own = scorer.own_contribution(u, i);
    if own == 0 {
        return Err(Error::not_found("annotation", format!("{user}/{item}")));
    }
    Ok(scorer.weight_from(i, own))
}

/// `Ē` for a user; `Ok(None)` when every item they tagged is excluded or
/// carries zero weight.
pub fn user_consensus_expertise(scorer: &ConsensusScorer<'_>, user: &str) -> Result<Option<f64>> {
    let u = scorer.index.require_user(user)?;
    Ok(scorer.user_score_by_id(u))
}

/// Scores for every scoreable user, in user-id order.
pub fn all_user_scores(scorer: &ConsensusScorer<'_>) -> Vec<(UserId, f64)> {
    (0..scorer.index.n_users() as u32)
        .into_par_iter()
        .filter_map(|u| scorer.user_score_by_id(UserId(u)).map(|s| (UserId(u), s)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsensusExpertise {
    pub user_scores: Vec<(UserId, f64)>,
    pub series: BinnedSeries,
}

/// Binned user scores keyed by annotation count in `keys`. The scorer's own
/// index supplies the frequencies; `keys` is normally the raw view.
pub fn consensus_expertise_by_bin(
    scorer: &ConsensusScorer<'_>,
    keys: &FolksonomyIndex,
    spec: &BinSpec,
) -> Result<ConsensusExpertise> {
    spec.validate()?;
    let user_scores = all_user_scores(scorer);
    if user_scores.is_empty() {
        return Err(Error::domain("no user has a defined consensus expertise score"));
    }
    let series = bin_user_scores(keys, &user_scores, spec);
    Ok(ConsensusExpertise { user_scores, series })
}
