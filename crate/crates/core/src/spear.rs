//! SPEAR expertise: per-tag mutual reinforcement between user expertise and
//! item quality, with credit going to users who tag an item early.

use std::borrow::Cow;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{FolksonomyIndex, ItemId, TagId, UserId};
use crate::error::{Error, Result};
use crate::stats::{bin_user_scores, BinSpec, BinnedSeries, CompensatedSum};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpearConfig {
    pub top_k: usize,
    pub min_users: usize,
    /// Credit exponent `p` in `C(x) = x^p`.
    pub exponent: f64,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for SpearConfig {
    fn default() -> Self {
        Self { top_k: 10_000, min_users: 10, exponent: 0.5, tolerance: 1e-8, max_iter: 250 }
    }
}

impl SpearConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.exponent.is_finite() {
            return Err(Error::domain("credit exponent must be finite"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::domain("tolerance must be > 0"));
        }
        if self.max_iter == 0 {
            return Err(Error::domain("max_iter must be >= 1"));
        }
        Ok(())
    }
}

/// The `top_k` most annotated tags (ties to the smaller id), keeping those
/// with at least `min_users` distinct users. Returned in id order.
pub fn eligible_tags(index: &FolksonomyIndex, top_k: usize, min_users: usize) -> Vec<TagId> {
    let mut tags: Vec<TagId> = index.tag_ids().filter(|&t| index.tag_annotation_count(t) > 0).collect();
    tags.sort_by(|&a, &b| {
        index
            .tag_annotation_count(b)
            .cmp(&index.tag_annotation_count(a))
            .then(a.cmp(&b))
    });
    tags.truncate(top_k);
    tags.retain(|&t| index.tag_user_count(t) >= min_users);
    tags.sort_unstable();
    tags
}

/// Sparse user-by-item credit matrix for one tag. Users and items are listed
/// in id order and entries are sorted by (user, item).
#[derive(Debug, Clone, PartialEq)]
pub struct CreditMatrix {
    tag: TagId,
    users: Vec<UserId>,
    items: Vec<ItemId>,
    /// (row into `users`, column into `items`, credit)
    entries: Vec<(u32, u32, f64)>,
}

impl CreditMatrix {
    /// Builds a matrix from explicit `(user, item, credit)` triples; repeated
    /// pairs are rejected.
    pub fn from_entries(tag: TagId, triples: impl IntoIterator<Item = (UserId, ItemId, f64)>) -> Result<Self> {
        let mut triples: Vec<(UserId, ItemId, f64)> = triples.into_iter().collect();
        if triples.iter().any(|t| !(t.2 >= 0.0 && t.2.is_finite())) {
            return Err(Error::domain("credits must be finite and non-negative"));
        }
        triples.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        if triples.windows(2).any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::domain("duplicate (user, item) credit"));
        }
        let mut users: Vec<UserId> = triples.iter().map(|t| t.0).collect();
        users.dedup();
        let mut items: Vec<ItemId> = triples.iter().map(|t| t.1).collect();
        items.sort_unstable();
        items.dedup();
        let entries = triples
            .iter()
            .map(|&(u, i, c)| {
                let row = users.binary_search(&u).expect("user listed") as u32;
                let col = items.binary_search(&i).expect("item listed") as u32;
                (row, col, c)
            })
            .collect();
        Ok(Self { tag, users, items, entries })
    }

    pub fn tag(&self) -> TagId {
        self.tag
    }

    pub fn users(&self) -> &[UserId] {
        &self.users
    }

    pub fn items(&self) -> &[ItemId] {
        &self.items
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn credit(&self, user: UserId, item: ItemId) -> Option<f64> {
        let row = self.users.binary_search(&user).ok()? as u32;
        let col = self.items.binary_search(&item).ok()? as u32;
        self.entries
            .binary_search_by(|e| (e.0, e.1).cmp(&(row, col)))
            .ok()
            .map(|k| self.entries[k].2)
    }

    pub fn entries(&self) -> impl Iterator<Item = (UserId, ItemId, f64)> + '_ {
        self.entries
            .iter()
            .map(|&(r, c, v)| (self.users[r as usize], self.items[c as usize], v))
    }
}

/// Credits for `tag`: `(1 + later)^exponent`, where `later` counts users who
/// applied the tag to the same item strictly after this user's earliest use.
pub fn credit_matrix(index: &FolksonomyIndex, tag: &str, exponent: f64) -> Result<CreditMatrix> {
    let id = index.require_tag(tag)?;
    Ok(credit_matrix_by_id(index, id, exponent))
}

pub fn credit_matrix_by_id(index: &FolksonomyIndex, tag: TagId, exponent: f64) -> CreditMatrix {
    // earliest time per (item, user)
    let mut uses: Vec<(ItemId, UserId, u64)> = index.tag_records(tag).map(|r| (r.item, r.user, r.time)).collect();
    uses.sort_unstable();
    uses.dedup_by(|b, a| a.0 == b.0 && a.1 == b.1);

    let mut triples = Vec::with_capacity(uses.len());
    let mut times = Vec::new();
    let mut i = 0;
    while i < uses.len() {
        let item = uses[i].0;
        let mut j = i;
        while j < uses.len() && uses[j].0 == item {
            j += 1;
        }
        times.clear();
        times.extend(uses[i..j].iter().map(|u| u.2));
        times.sort_unstable();
        for &(_, user, t) in &uses[i..j] {
            let later = times.len() - times.partition_point(|&x| x <= t);
            triples.push((user, item, (1.0 + later as f64).powf(exponent)));
        }
        i = j;
    }
    CreditMatrix::from_entries(tag, triples).expect("credits derived from deduplicated uses")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpearResult {
    pub tag: TagId,
    /// Expertise per user, in user-id order, summing to 1.
    pub user_scores: Vec<(UserId, f64)>,
    /// Quality per item, in item-id order, summing to 1.
    pub item_scores: Vec<(ItemId, f64)>,
    pub iterations: usize,
    pub converged: bool,
}

fn l1_normalize(v: &mut [f64]) {
    let total: CompensatedSum = v.iter().copied().collect();
    let total = total.total();
    if total > 0.0 {
        for x in v.iter_mut() {
            *x /= total;
        }
    }
}

fn max_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Alternates `e = A q` and `q = A^T e`, L1-normalizing after each update,
/// until no user or item score moves by `tolerance` or more.
pub fn spear_scores(credit: &CreditMatrix, tolerance: f64, max_iter: usize) -> Result<SpearResult> {
    if credit.is_empty() {
        return Err(Error::domain("empty credit matrix"));
    }
    let (n_users, n_items) = (credit.users.len(), credit.items.len());
    let mut e = vec![1.0 / n_users as f64; n_users];
    let mut q = vec![1.0 / n_items as f64; n_items];
    let mut next = vec![0.0; n_users];
    let mut next_q = vec![0.0; n_items];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        next.iter_mut().for_each(|x| *x = 0.0);
        for &(r, c, v) in &credit.entries {
            next[r as usize] += v * q[c as usize];
        }
        l1_normalize(&mut next);
        next_q.iter_mut().for_each(|x| *x = 0.0);
        for &(r, c, v) in &credit.entries {
            next_q[c as usize] += v * next[r as usize];
        }
        l1_normalize(&mut next_q);
        // an unchanged user vector alone is not enough: with equal row sums
        // the first update reproduces the uniform start while q still moves
        let delta = max_change(&e, &next).max(max_change(&q, &next_q));
        std::mem::swap(&mut e, &mut next);
        std::mem::swap(&mut q, &mut next_q);
        if delta < tolerance {
            converged = true;
            break;
        }
    }
    Ok(SpearResult {
        tag: credit.tag,
        user_scores: credit.users.iter().copied().zip(e).collect(),
        item_scores: credit.items.iter().copied().zip(q).collect(),
        iterations,
        converged,
    })
}

/// Z-scores each tag's user scores (population standard deviation; a tag
/// without spread contributes zeros), then averages per user over the tags
/// they scored on. Output is in user-id order.
pub fn standardize_and_average(results: &[SpearResult]) -> Vec<(UserId, f64)> {
    let mut z: Vec<(UserId, f64)> = Vec::new();
    for r in results {
        let n = r.user_scores.len() as f64;
        if n == 0.0 {
            continue;
        }
        let mean = r.user_scores.iter().map(|s| s.1).collect::<CompensatedSum>().total() / n;
        let var = r
            .user_scores
            .iter()
            .map(|s| (s.1 - mean).powi(2))
            .collect::<CompensatedSum>()
            .total()
            / n;
        let sd = var.sqrt();
        let flat = sd <= 1e-12 * mean.abs() || sd == 0.0;
        z.extend(
            r.user_scores
                .iter()
                .map(|&(u, s)| (u, if flat { 0.0 } else { (s - mean) / sd })),
        );
    }
    // stable sort keeps tag order within a user, so sums are reproducible
    z.sort_by_key(|p| p.0);
    let mut out: Vec<(UserId, f64)> = Vec::new();
    let mut i = 0;
    while i < z.len() {
        let user = z[i].0;
        let mut acc = CompensatedSum::new();
        let mut j = i;
        while j < z.len() && z[j].0 == user {
            acc.add(z[j].1);
            j += 1;
        }
        out.push((user, acc.total() / (j - i) as f64));
        i = j;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpearOutcome {
    /// Mean standardized score per user, in user-id order.
    pub user_scores: Vec<(UserId, f64)>,
    pub tags: usize,
    pub unconverged_tags: usize,
}

fn dedupe_view(index: &FolksonomyIndex) -> Cow<'_, FolksonomyIndex> {
    if index.is_deduplicated() {
        Cow::Borrowed(index)
    } else {
        Cow::Owned(index.deduplicated())
    }
}

/// Runs SPEAR over every eligible tag of the deduplicated view and reduces
/// to per-user mean z-scores.
pub fn spear_user_scores(index: &FolksonomyIndex, config: &SpearConfig) -> Result<SpearOutcome> {
    config.validate()?;
    let view = dedupe_view(index);
    let tags = eligible_tags(&view, config.top_k, config.min_users);
    if tags.is_empty() {
        return Err(Error::domain("no tag satisfies the SPEAR eligibility filter"));
    }
    let results: Vec<SpearResult> = tags
        .par_iter()
        .map(|&t| {
            let credit = credit_matrix_by_id(&view, t, config.exponent);
            spear_scores(&credit, config.tolerance, config.max_iter)
        })
        .collect::<Result<_>>()?;
    Ok(SpearOutcome {
        user_scores: standardize_and_average(&results),
        tags: results.len(),
        unconverged_tags: results.iter().filter(|r| !r.converged).count(),
    })
}

/// Binned mean standardized SPEAR score keyed by user annotation count in
/// `index`.
pub fn spear_by_bin(index: &FolksonomyIndex, spec: &BinSpec, config: &SpearConfig) -> Result<BinnedSeries> {
    spec.validate()?;
    let outcome = spear_user_scores(index, config)?;
    Ok(bin_user_scores(index, &outcome.user_scores, spec))
}
