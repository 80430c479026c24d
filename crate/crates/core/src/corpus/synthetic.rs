//! Seeded power-law corpus generator.
//!
//! Per-user annotation volumes follow a discrete power law, items and tags
//! are drawn from Zipf popularity distributions. Two structural couplings
//! make the downstream analyses non-trivial:
//!
//! * every item has a "home" tag that is favoured when tagging it, which
//!   creates per-item consensus;
//! * tags form a 4-ary hierarchy by popularity rank (tag `r` has parent
//!   `(r - 1) / 4`), and a tagger applying a non-root tag often applies its
//!   parent to the same item too, which yields subsumption relations for the
//!   taxonomy module.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Zipf};

use super::Annotation;
use crate::error::{Error, Result};

/// Timestamps are drawn from `[0, TIME_SPAN)`.
const TIME_SPAN: u64 = 1_000_000_000;
const HOME_TAG_PROBABILITY: f64 = 0.5;
const PARENT_TAG_PROBABILITY: f64 = 0.5;
const EXTRA_TAG_PROBABILITY: f64 = 0.6;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_users: usize,
    /// Exponent of the per-user annotation-count power law.
    pub activity_exponent: f64,
    pub n_items: usize,
    pub n_tags: usize,
    pub item_popularity_exponent: f64,
    pub tag_popularity_exponent: f64,
    /// Upper truncation of the per-user annotation count.
    pub max_user_annotations: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_users: 1000,
            activity_exponent: 2.0,
            n_items: 5000,
            n_tags: 2000,
            item_popularity_exponent: 1.0,
            tag_popularity_exponent: 1.1,
            max_user_annotations: 10_000,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 || self.n_items == 0 || self.n_tags == 0 || self.max_user_annotations == 0 {
            return Err(Error::domain("synthetic counts must all be >= 1"));
        }
        for (name, e) in [
            ("activity", self.activity_exponent),
            ("item popularity", self.item_popularity_exponent),
            ("tag popularity", self.tag_popularity_exponent),
        ] {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::domain(format!("{name} exponent must be > 0")));
            }
        }
        Ok(())
    }
}

fn width(n: usize) -> usize {
    n.saturating_sub(1).to_string().len()
}

/// Deterministic per-item home tag, itself Zipf-skewed toward popular tags.
fn home_tag(item: usize, n_tags: usize) -> usize {
    // splitmix64 finalizer
    let mut z = (item as u64).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    // squaring a uniform skews toward low ranks
    let u = (z >> 11) as f64 / (1u64 << 53) as f64;
    ((u * u * n_tags as f64) as usize).min(n_tags - 1)
}

/// Generates a corpus. Identical configs produce identical output.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<Vec<Annotation>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let zipf = |n: usize, s: f64| {
        Zipf::new(n as f64, s).map_err(|e| Error::domain(format!("invalid zipf parameters: {e}")))
    };
    let activity = zipf(config.max_user_annotations, config.activity_exponent)?;
    let items = zipf(config.n_items, config.item_popularity_exponent)?;
    let tags = zipf(config.n_tags, config.tag_popularity_exponent)?;
    let extra_tags = Geometric::new(1.0 - EXTRA_TAG_PROBABILITY)
        .map_err(|e| Error::domain(format!("invalid geometric parameter: {e}")))?;

    let (uw, iw, tw) = (width(config.n_users), width(config.n_items), width(config.n_tags));
    let item_names: Vec<String> = (0..config.n_items).map(|i| format!("i{i:0iw$}")).collect();
    let tag_names: Vec<String> = (0..config.n_tags).map(|t| format!("t{t:0tw$}")).collect();

    let mut out = Vec::new();
    for u in 0..config.n_users {
        let user = format!("u{u:0uw$}");
        let budget = activity.sample(&mut rng) as usize;
        let mut made = 0;
        while made < budget {
            let item = items.sample(&mut rng) as usize - 1;
            let time = rng.random_range(0..TIME_SPAN);
            let n_post_tags = 1 + extra_tags.sample(&mut rng) as usize;
            for _ in 0..n_post_tags {
                if made >= budget {
                    break;
                }
                let tag = if rng.random_bool(HOME_TAG_PROBABILITY) {
                    home_tag(item, config.n_tags)
                } else {
                    tags.sample(&mut rng) as usize - 1
                };
                out.push(Annotation {
                    user: user.clone(),
                    item: item_names[item].clone(),
                    tag: tag_names[tag].clone(),
                    time,
                });
                made += 1;
                if tag > 0 && made < budget && rng.random_bool(PARENT_TAG_PROBABILITY) {
                    out.push(Annotation {
                        user: user.clone(),
                        item: item_names[item].clone(),
                        tag: tag_names[(tag - 1) / 4].clone(),
                        time,
                    });
                    made += 1;
                }
            }
        }
    }
    Ok(out)
}
