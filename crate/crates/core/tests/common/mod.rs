#![allow(dead_code)]

use folkmetrics::{Annotation, FolksonomyIndex, TimeGranularity};
use proptest::prelude::*;

/// Small random corpora over a handful of users, items and tags. Row tuples
/// are (user, item, tag, time) indices.
pub fn rows(max_len: usize) -> impl Strategy<Value = Vec<(u8, u8, u8, u8)>> {
    prop::collection::vec((0u8..12, 0u8..10, 0u8..8, 0u8..20), 1..max_len)
}

pub fn annotations(rows: &[(u8, u8, u8, u8)]) -> Vec<Annotation> {
    rows.iter()
        .map(|&(u, i, t, time)| {
            Annotation::new(&format!("u{u:02}"), &format!("i{i:02}"), &format!("t{t:02}"), time as u64).unwrap()
        })
        .collect()
}

pub fn index(rows: &[(u8, u8, u8, u8)], dedupe: bool) -> FolksonomyIndex {
    FolksonomyIndex::build(&annotations(rows), TimeGranularity::Seconds, dedupe)
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
