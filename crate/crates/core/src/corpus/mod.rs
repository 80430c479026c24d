//! Annotation ingestion, the immutable folksonomy index, dataset summaries
//! and the synthetic corpus generator.

mod index;
mod parse;
pub mod synthetic;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

pub use index::{DatasetSummary, FolksonomyIndex, IndexBuilder, Record, UserStats};
pub use parse::{
    parse_annotations, read_index, read_popularity, write_annotations, IngestReport, InputFormat,
    Parsed,
};
pub use synthetic::{generate_synthetic, SyntheticConfig};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

id_type!(
    /// Dense user handle. Ordering follows the lexicographic order of the
    /// user identifiers in the index it came from.
    UserId
);
id_type!(
    /// Dense item handle, lexicographically ordered like [`UserId`].
    ItemId
);
id_type!(
    /// Dense tag handle, lexicographically ordered like [`UserId`].
    TagId
);

/// Declared resolution of annotation timestamps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeGranularity {
    #[default]
    Seconds,
    /// Integer months since the epoch; annotations in the same month are
    /// simultaneous.
    Months,
}

impl FromStr for TimeGranularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "seconds" | "s" => Ok(Self::Seconds),
            "months" | "m" => Ok(Self::Months),
            other => Err(Error::domain(format!("unknown time granularity `{other}`"))),
        }
    }
}

impl fmt::Display for TimeGranularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Seconds => "seconds",
            Self::Months => "months",
        })
    }
}

/// One act of tagging.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Annotation {
    pub user: String,
    pub item: String,
    pub tag: String,
    pub time: u64,
}

impl Annotation {
    /// Builds a normalized annotation; fails if any identifier is blank.
    pub fn new(user: &str, item: &str, tag: &str, time: u64) -> Result<Self> {
        let user = user.trim();
        let item = item.trim();
        let tag = normalize_tag(tag);
        if user.is_empty() || item.is_empty() || tag.is_empty() {
            return Err(Error::domain("annotation has an empty user, item or tag"));
        }
        Ok(Self {
            user: user.to_owned(),
            item: item.to_owned(),
            tag,
            time,
        })
    }
}

/// Trim plus Unicode lowercase. No stemming, no punctuation stripping.
pub fn normalize_tag(tag: &str) -> String {
    tag.trim().to_lowercase()
}
