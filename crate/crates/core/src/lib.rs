//! Folksonomy analytics: supertagger partitioning, inequality, vocabulary and
//! item similarity, consensus, tagging motivation, and three expertise
//! measures (SPEAR, consensus-based, taxonomy term depth).
//!
//! Everything starts from a [`FolksonomyIndex`], an immutable index over
//! `(user, item, tag, time)` annotations:
//!
//! ```
//! use folkmetrics::{Annotation, FolksonomyIndex, TimeGranularity};
//! use folkmetrics::partition::split_supertaggers;
//!
//! let anns = vec![
//!     Annotation::new("alice", "song1", "rock", 1).unwrap(),
//!     Annotation::new("alice", "song2", "jazz", 2).unwrap(),
//!     Annotation::new("bob", "song1", "rock", 3).unwrap(),
//! ];
//! let index = FolksonomyIndex::build(&anns, TimeGranularity::Seconds, false);
//! let partition = split_supertaggers(&index, 0.5).unwrap();
//! assert_eq!(partition.supertaggers().len(), 1);
//! ```

pub mod consensus;
pub mod consensus_expertise;
pub mod corpus;
mod error;
pub mod motivation;
pub mod partition;
pub mod similarity;
pub mod spear;
pub mod stats;
pub mod taxonomy;

pub use corpus::{
    Annotation, DatasetSummary, FolksonomyIndex, ItemId, Record, TagId, TimeGranularity, UserId,
    UserStats,
};
pub use error::{Error, Result};
pub use stats::{BinSpec, BinnedRow, BinnedSeries};
