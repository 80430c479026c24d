//! Categorizer/describer measures: tags per post (TPP), tag/resource ratio
//! (TRR) and orphan ratio (OR).
//!
//! A post is a distinct (user, item) pair. All three measures use distinct
//! (item, tag) pairs, so repeated identical annotations do not affect them.

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{FolksonomyIndex, ItemId, TagId, UserId};
use crate::error::{Error, Result};
use crate::stats::{binned_mean, BinSpec, BinnedSeries};

/// Default divisor of the orphan threshold `ceil(max usage / divisor)`.
pub const DEFAULT_ORPHAN_DIVISOR: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MotivationScores {
    pub user: UserId,
    pub tpp: f64,
    pub trr: f64,
    pub orphan_ratio: f64,
}

struct UserProfile {
    pairs: usize,
    items: usize,
    /// distinct items per tag, one entry per vocabulary tag
    tag_usage: Vec<usize>,
}

fn profile(index: &FolksonomyIndex, user: UserId) -> UserProfile {
    let mut pairs: Vec<(TagId, ItemId)> = index.user_records(user).map(|r| (r.tag, r.item)).collect();
    pairs.sort_unstable();
    pairs.dedup();
    let mut items: Vec<ItemId> = pairs.iter().map(|&(_, i)| i).collect();
    items.sort_unstable();
    items.dedup();
    let mut tag_usage = Vec::new();
    let mut i = 0;
    while i < pairs.len() {
        let mut j = i;
        while j < pairs.len() && pairs[j].0 == pairs[i].0 {
            j += 1;
        }
        tag_usage.push(j - i);
        i = j;
    }
    UserProfile { pairs: pairs.len(), items: items.len(), tag_usage }
}

fn resolve(index: &FolksonomyIndex, user: &str) -> Result<UserId> {
    let id = index.require_user(user)?;
    if index.user_annotation_count(id) == 0 {
        return Err(Error::domain(format!("user `{user}` has no annotations")));
    }
    Ok(id)
}

/// Distinct (item, tag) pairs over distinct items.
pub fn tpp(index: &FolksonomyIndex, user: &str) -> Result<f64> {
    let p = profile(index, resolve(index, user)?);
    Ok(p.pairs as f64 / p.items as f64)
}

/// Distinct tags over distinct items.
pub fn trr(index: &FolksonomyIndex, user: &str) -> Result<f64> {
    let p = profile(index, resolve(index, user)?);
    Ok(p.tag_usage.len() as f64 / p.items as f64)
}

/// Share of the user's tags applied to at most `ceil(max usage / divisor)`
/// items, where usage counts distinct items per tag.
pub fn orphan_ratio(index: &FolksonomyIndex, user: &str, divisor: f64) -> Result<f64> {
    check_divisor(divisor)?;
    let p = profile(index, resolve(index, user)?);
    Ok(orphan_ratio_of(&p.tag_usage, divisor))
}

fn check_divisor(divisor: f64) -> Result<()> {
    if divisor > 0.0 && divisor.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("orphan divisor must be > 0"))
    }
}

fn orphan_ratio_of(tag_usage: &[usize], divisor: f64) -> f64 {
    let max = tag_usage.iter().copied().max().unwrap_or(0);
    let threshold = (max as f64 / divisor).ceil();
    let orphans = tag_usage.iter().filter(|&&u| u as f64 <= threshold).count();
    orphans as f64 / tag_usage.len() as f64
}

/// All three measures for one user, or `None` for a user without annotations.
pub fn motivation_scores(index: &FolksonomyIndex, user: UserId, divisor: f64) -> Option<MotivationScores> {
    let p = profile(index, user);
    if p.items == 0 {
        return None;
    }
    Some(MotivationScores {
        user,
        tpp: p.pairs as f64 / p.items as f64,
        trr: p.tag_usage.len() as f64 / p.items as f64,
        orphan_ratio: orphan_ratio_of(&p.tag_usage, divisor),
    })
}

/// Scores for every user, in user-id order.
pub fn all_motivation_scores(index: &FolksonomyIndex, divisor: f64) -> Result<Vec<MotivationScores>> {
    check_divisor(divisor)?;
    Ok((0..index.n_users() as u32)
        .into_par_iter()
        .filter_map(|u| motivation_scores(index, UserId(u), divisor))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MotivationSeries {
    pub tpp: BinnedSeries,
    pub trr: BinnedSeries,
    pub orphan_ratio: BinnedSeries,
}

/// Per-bin means of the three measures keyed by user annotation count.
pub fn motivation_by_bin(index: &FolksonomyIndex, spec: &BinSpec, divisor: f64) -> Result<MotivationSeries> {
    spec.validate()?;
    let scores = all_motivation_scores(index, divisor)?;
    if scores.is_empty() {
        return Err(Error::domain("no tagging users"));
    }
    Ok(bin_scores(index, &scores, spec))
}

pub fn bin_scores(index: &FolksonomyIndex, scores: &[MotivationScores], spec: &BinSpec) -> MotivationSeries {
    let key = |s: &MotivationScores| index.user_annotation_count(s.user) as f64;
    MotivationSeries {
        tpp: binned_mean(scores.iter().map(|s| (key(s), s.tpp)), spec),
        trr: binned_mean(scores.iter().map(|s| (key(s), s.trr)), spec),
        orphan_ratio: binned_mean(scores.iter().map(|s| (key(s), s.orphan_ratio)), spec),
    }
}
