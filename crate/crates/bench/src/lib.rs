//! Shared fixtures for the benchmarks.

use folkmetrics::corpus::{generate_synthetic, Annotation, SyntheticConfig};
use folkmetrics::{FolksonomyIndex, TimeGranularity};

/// A seeded power-law corpus with `n_users` taggers.
pub fn corpus(n_users: usize) -> Vec<Annotation> {
    let config = SyntheticConfig {
        n_users,
        n_items: n_users.max(100),
        n_tags: (n_users / 4).max(50),
        seed: 7,
        ..SyntheticConfig::default()
    };
    generate_synthetic(&config).expect("valid config")
}

pub fn index(n_users: usize) -> FolksonomyIndex {
    FolksonomyIndex::build(&corpus(n_users), TimeGranularity::Seconds, false)
}
