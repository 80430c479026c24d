use std::collections::HashMap;

use serde::Serialize;

use super::{Annotation, ItemId, TagId, TimeGranularity, UserId};
use crate::error::{Error, Result};
use crate::stats::Quartiles;

/// An annotation with interned identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Record {
    pub user: UserId,
    pub item: ItemId,
    pub tag: TagId,
    pub time: u64,
}

/// Compressed adjacency: positions of records grouped by a key.
#[derive(Debug, Clone, Default)]
struct Postings {
    offsets: Vec<usize>,
    positions: Vec<u32>,
}

impl Postings {
    fn build(n_keys: usize, keys: impl Iterator<Item = usize> + Clone) -> Self {
        let mut offsets = vec![0usize; n_keys + 1];
        for k in keys.clone() {
            offsets[k + 1] += 1;
        }
        for i in 0..n_keys {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut positions = vec![0u32; offsets[n_keys]];
        for (pos, k) in keys.enumerate() {
            positions[cursor[k]] = pos as u32;
            cursor[k] += 1;
        }
        Self { offsets, positions }
    }

    #[inline]
    fn get(&self, key: usize) -> &[u32] {
        &self.positions[self.offsets[key]..self.offsets[key + 1]]
    }
}

/// Sorted identifier table; an id is the position of its name.
#[derive(Debug, Clone, Default)]
struct Vocabulary {
    names: Vec<String>,
}

impl Vocabulary {
    fn from_sorted(names: Vec<String>) -> Self {
        Self { names }
    }

    fn get(&self, name: &str) -> Option<u32> {
        self.names
            .binary_search_by(|n| n.as_str().cmp(name))
            .ok()
            .map(|i| i as u32)
    }

    fn len(&self) -> usize {
        self.names.len()
    }
}

/// Incremental interner used while streaming input. Ids handed out here are
/// provisional; [`IndexBuilder::finish`] renumbers them lexicographically.
#[derive(Debug, Default)]
struct Interner {
    names: Vec<String>,
    lookup: HashMap<String, u32>,
}

impl Interner {
    fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.lookup.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.lookup.insert(name.to_owned(), id);
        id
    }

    /// Sorted vocabulary plus a provisional-id → final-id map.
    fn finish(self) -> (Vocabulary, Vec<u32>) {
        let mut order: Vec<u32> = (0..self.names.len() as u32).collect();
        order.sort_by(|&a, &b| self.names[a as usize].cmp(&self.names[b as usize]));
        let mut remap = vec![0u32; order.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old as usize] = new as u32;
        }
        drop(self.lookup);
        let mut names = self.names;
        let mut sorted = Vec::with_capacity(names.len());
        for &old in &order {
            sorted.push(std::mem::take(&mut names[old as usize]));
        }
        (Vocabulary::from_sorted(sorted), remap)
    }
}

/// Streaming builder for a [`FolksonomyIndex`]. Memory grows with the number
/// of distinct identifiers plus one fixed-size record per annotation.
#[derive(Debug)]
pub struct IndexBuilder {
    users: Interner,
    items: Interner,
    tags: Interner,
    records: Vec<Record>,
    granularity: TimeGranularity,
}

impl IndexBuilder {
    pub fn new(granularity: TimeGranularity) -> Self {
        Self {
            users: Interner::default(),
            items: Interner::default(),
            tags: Interner::default(),
            records: Vec::new(),
            granularity,
        }
    }

    /// Adds an already-normalized annotation.
    pub fn push(&mut self, user: &str, item: &str, tag: &str, time: u64) {
        let record = Record {
            user: UserId(self.users.intern(user)),
            item: ItemId(self.items.intern(item)),
            tag: TagId(self.tags.intern(tag)),
            time,
        };
        self.records.push(record);
    }

    pub fn push_annotation(&mut self, a: &Annotation) {
        self.push(&a.user, &a.item, &a.tag, a.time);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn finish(self, dedupe: bool) -> FolksonomyIndex {
        let (users, user_map) = self.users.finish();
        let (items, item_map) = self.items.finish();
        let (tags, tag_map) = self.tags.finish();
        let mut records = self.records;
        for r in &mut records {
            r.user = UserId(user_map[r.user.index()]);
            r.item = ItemId(item_map[r.item.index()]);
            r.tag = TagId(tag_map[r.tag.index()]);
        }
        FolksonomyIndex::assemble(users, items, tags, records, self.granularity, dedupe)
    }
}

/// Keeps the earliest-timestamped instance of every (user, item, tag) triple,
/// preserving the original relative order of the survivors.
fn dedupe_records(records: Vec<Record>) -> Vec<Record> {
    let mut order: Vec<u32> = (0..records.len() as u32).collect();
    order.sort_unstable_by_key(|&p| {
        let r = &records[p as usize];
        (r.user, r.item, r.tag, r.time, p)
    });
    let mut keep = Vec::with_capacity(order.len());
    let mut prev: Option<(UserId, ItemId, TagId)> = None;
    for p in order {
        let r = &records[p as usize];
        let key = (r.user, r.item, r.tag);
        if prev != Some(key) {
            keep.push(p);
            prev = Some(key);
        }
    }
    if keep.len() == records.len() {
        return records;
    }
    keep.sort_unstable();
    keep.into_iter().map(|p| records[p as usize]).collect()
}

/// Immutable multi-way index over an annotation set.
///
/// Users, items and tags are interned into dense ids whose numeric order is
/// the lexicographic order of the original identifiers, so every
/// "lexicographic tie-break" in the analyses is an id comparison.
#[derive(Debug, Clone)]
pub struct FolksonomyIndex {
    users: Vocabulary,
    items: Vocabulary,
    tags: Vocabulary,
    records: Vec<Record>,
    by_user: Postings,
    by_item: Postings,
    by_tag: Postings,
    // per item: (tag, distinct users) sorted by tag
    item_tag_offsets: Vec<usize>,
    item_tag_freq: Vec<(TagId, u32)>,
    granularity: TimeGranularity,
    deduplicated: bool,
}

impl FolksonomyIndex {
    pub fn build(annotations: &[Annotation], granularity: TimeGranularity, dedupe: bool) -> Self {
        let mut builder = IndexBuilder::new(granularity);
        for a in annotations {
            builder.push_annotation(a);
        }
        builder.finish(dedupe)
    }

    fn assemble(
        users: Vocabulary,
        items: Vocabulary,
        tags: Vocabulary,
        records: Vec<Record>,
        granularity: TimeGranularity,
        dedupe: bool,
    ) -> Self {
        let records = if dedupe {
            dedupe_records(records)
        } else {
            records
        };
        let by_user = Postings::build(users.len(), records.iter().map(|r| r.user.index()));
        let by_item = Postings::build(items.len(), records.iter().map(|r| r.item.index()));
        let by_tag = Postings::build(tags.len(), records.iter().map(|r| r.tag.index()));

        let mut item_tag_offsets = Vec::with_capacity(items.len() + 1);
        let mut item_tag_freq = Vec::new();
        let mut pairs: Vec<(TagId, UserId)> = Vec::new();
        item_tag_offsets.push(0);
        for item in 0..items.len() {
            pairs.clear();
            pairs.extend(
                by_item
                    .get(item)
                    .iter()
                    .map(|&p| (records[p as usize].tag, records[p as usize].user)),
            );
            pairs.sort_unstable();
            pairs.dedup();
            let mut i = 0;
            while i < pairs.len() {
                let tag = pairs[i].0;
                let mut j = i;
                while j < pairs.len() && pairs[j].0 == tag {
                    j += 1;
                }
                item_tag_freq.push((tag, (j - i) as u32));
                i = j;
            }
            item_tag_offsets.push(item_tag_freq.len());
        }

        Self {
            users,
            items,
            tags,
            records,
            by_user,
            by_item,
            by_tag,
            item_tag_offsets,
            item_tag_freq,
            granularity,
            deduplicated: dedupe,
        }
    }

    /// The (user, item, tag) de-duplicated view of this index. Vocabularies
    /// are kept as-is so ids remain valid across both views.
    pub fn deduplicated(&self) -> FolksonomyIndex {
        if self.deduplicated {
            return self.clone();
        }
        Self::assemble(
            self.users.clone(),
            self.items.clone(),
            self.tags.clone(),
            self.records.clone(),
            self.granularity,
            true,
        )
    }

    pub fn is_deduplicated(&self) -> bool {
        self.deduplicated
    }

    pub fn granularity(&self) -> TimeGranularity {
        self.granularity
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn n_tags(&self) -> usize {
        self.tags.len()
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn user_ids(&self) -> impl ExactSizeIterator<Item = UserId> {
        (0..self.users.len() as u32).map(UserId)
    }

    pub fn item_ids(&self) -> impl ExactSizeIterator<Item = ItemId> {
        (0..self.items.len() as u32).map(ItemId)
    }

    pub fn tag_ids(&self) -> impl ExactSizeIterator<Item = TagId> {
        (0..self.tags.len() as u32).map(TagId)
    }

    pub fn user_id(&self, name: &str) -> Option<UserId> {
        self.users.get(name).map(UserId)
    }

    pub fn item_id(&self, name: &str) -> Option<ItemId> {
        self.items.get(name).map(ItemId)
    }

    pub fn tag_id(&self, name: &str) -> Option<TagId> {
        self.tags.get(&super::normalize_tag(name)).map(TagId)
    }

    pub fn require_user(&self, name: &str) -> Result<UserId> {
        self.user_id(name).ok_or_else(|| Error::not_found("user", name))
    }

    pub fn require_item(&self, name: &str) -> Result<ItemId> {
        self.item_id(name).ok_or_else(|| Error::not_found("item", name))
    }

    pub fn require_tag(&self, name: &str) -> Result<TagId> {
        self.tag_id(name).ok_or_else(|| Error::not_found("tag", name))
    }

    pub fn user_name(&self, id: UserId) -> &str {
        &self.users.names[id.index()]
    }

    pub fn item_name(&self, id: ItemId) -> &str {
        &self.items.names[id.index()]
    }

    pub fn tag_name(&self, id: TagId) -> &str {
        &self.tags.names[id.index()]
    }

    pub fn user_records(&self, user: UserId) -> impl ExactSizeIterator<Item = &Record> + '_ {
        self.by_user
            .get(user.index())
            .iter()
            .map(move |&p| &self.records[p as usize])
    }

    pub fn item_records(&self, item: ItemId) -> impl ExactSizeIterator<Item = &Record> + '_ {
        self.by_item
            .get(item.index())
            .iter()
            .map(move |&p| &self.records[p as usize])
    }

    pub fn tag_records(&self, tag: TagId) -> impl ExactSizeIterator<Item = &Record> + '_ {
        self.by_tag
            .get(tag.index())
            .iter()
            .map(move |&p| &self.records[p as usize])
    }

    pub fn user_annotation_count(&self, user: UserId) -> usize {
        self.by_user.get(user.index()).len()
    }

    pub fn item_annotation_count(&self, item: ItemId) -> usize {
        self.by_item.get(item.index()).len()
    }

    pub fn tag_annotation_count(&self, tag: TagId) -> usize {
        self.by_tag.get(tag.index()).len()
    }

    /// `(tag, distinct users)` for every tag applied to `item`, sorted by tag.
    pub fn item_tag_counts(&self, item: ItemId) -> &[(TagId, u32)] {
        let i = item.index();
        &self.item_tag_freq[self.item_tag_offsets[i]..self.item_tag_offsets[i + 1]]
    }

    /// Number of distinct users who applied `tag` to `item` (0 if none).
    pub fn item_tag_freq(&self, item: ItemId, tag: TagId) -> u32 {
        let counts = self.item_tag_counts(item);
        counts
            .binary_search_by_key(&tag, |&(t, _)| t)
            .map(|i| counts[i].1)
            .unwrap_or(0)
    }

    /// Number of distinct users who annotated `tag` anywhere.
    pub fn tag_user_count(&self, tag: TagId) -> usize {
        let mut users: Vec<UserId> = self.tag_records(tag).map(|r| r.user).collect();
        users.sort_unstable();
        users.dedup();
        users.len()
    }

    pub fn user_stats(&self, user: &str) -> Result<UserStats> {
        Ok(self.user_stats_by_id(self.require_user(user)?))
    }

    pub fn user_stats_by_id(&self, user: UserId) -> UserStats {
        let mut tags: Vec<TagId> = Vec::new();
        let mut items: Vec<ItemId> = Vec::new();
        for r in self.user_records(user) {
            tags.push(r.tag);
            items.push(r.item);
        }
        let annotations = tags.len();
        tags.sort_unstable();
        tags.dedup();
        items.sort_unstable();
        items.dedup();
        UserStats {
            annotations,
            distinct_tags: tags.len(),
            distinct_items: items.len(),
        }
    }

    pub fn summary(&self) -> DatasetSummary {
        let mut per_user: Vec<u64> = (0..self.n_users())
            .map(|u| self.by_user.get(u).len() as u64)
            .collect();
        let mut per_tag: Vec<u64> = (0..self.n_tags())
            .map(|t| self.by_tag.get(t).len() as u64)
            .collect();
        let mut per_item: Vec<u64> = (0..self.n_items())
            .map(|i| self.by_item.get(i).len() as u64)
            .collect();
        DatasetSummary {
            taggers: self.n_users(),
            tags: self.n_tags(),
            items: self.n_items(),
            annotations: self.len(),
            per_user: Quartiles::of(&mut per_user),
            per_tag: Quartiles::of(&mut per_tag),
            per_item: Quartiles::of(&mut per_item),
        }
    }

    /// All annotations with their original identifiers, in index order.
    pub fn to_annotations(&self) -> Vec<Annotation> {
        self.records
            .iter()
            .map(|r| Annotation {
                user: self.user_name(r.user).to_owned(),
                item: self.item_name(r.item).to_owned(),
                tag: self.tag_name(r.tag).to_owned(),
                time: r.time,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct UserStats {
    pub annotations: usize,
    pub distinct_tags: usize,
    pub distinct_items: usize,
}

/// Global counts plus per-user/per-tag/per-item annotation quartiles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DatasetSummary {
    pub taggers: usize,
    pub tags: usize,
    pub items: usize,
    pub annotations: usize,
    pub per_user: Quartiles,
    pub per_tag: Quartiles,
    pub per_item: Quartiles,
}
