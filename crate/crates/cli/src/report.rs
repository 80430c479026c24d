//! The `report` bundle: every series and table written into one directory.
//!
//! Parameter errors abort before anything is written. An analysis that has
//! nothing to work on (say, no tag passes the SPEAR eligibility filter) still
//! leaves its files behind with only a header row, and the reason is recorded
//! in `manifest.json`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use folkmetrics::consensus::consensus_by_bin;
use folkmetrics::consensus_expertise::{all_user_scores, ConsensusScorer, FrequencyMode};
use folkmetrics::corpus::IngestReport;
use folkmetrics::motivation::{all_motivation_scores, bin_scores};
use folkmetrics::partition::{pareto_curve, partition_summary, split_supertaggers};
use folkmetrics::similarity::{exogenous_popularity_diff, similarity_curve, Dimension};
use folkmetrics::spear::spear_user_scores;
use folkmetrics::stats::bin_user_scores;
use folkmetrics::taxonomy::{depth_user_scores, DepthMode};
use folkmetrics::{DatasetSummary, FolksonomyIndex, TimeGranularity, UserId};
use serde::Serialize;

use crate::args::{GlobalArgs, ReportArgs};
use crate::commands::{
    build_forest, dedupe_view, load_popularity, load_with_report, resolution, usage_pair, warn_unconverged,
    write_user_lists, ForestDoc, PartitionDoc,
};
use crate::output;

pub const BUNDLE_FILES: &[&str] = &[
    "manifest.json",
    "dataset_summary.json",
    "dataset_summary.csv",
    "partition.json",
    "supertaggers.txt",
    "others.txt",
    "partition_summary.csv",
    "pareto.csv",
    "usage_tag.csv",
    "usage_tag_cumulative.csv",
    "usage_item.csv",
    "usage_item_cumulative.csv",
    "similarity_tag.csv",
    "similarity_item.csv",
    "exo_diff.csv",
    "consensus.csv",
    "motivation_per_user.csv",
    "motivation_binned.csv",
    "spear_per_user.csv",
    "spear_binned.csv",
    "consensus_expertise_per_user.csv",
    "consensus_expertise_binned.csv",
    "taxonomy.json",
    "depth_per_user.csv",
    "depth_vocabulary_binned.csv",
    "depth_annotation_binned.csv",
];

const DATASET_SUMMARY_HEADER: [&str; 13] = [
    "taggers",
    "tags",
    "items",
    "annotations",
    "per_user_q1",
    "per_user_median",
    "per_user_q3",
    "per_tag_q1",
    "per_tag_median",
    "per_tag_q3",
    "per_item_q1",
    "per_item_median",
    "per_item_q3",
];

const USAGE_HEADER: [&str; 3] = ["group", "N", "proportion"];
const DEPTH_USER_HEADER: [&str; 4] = ["user", "annotations", "vocabulary", "annotation"];

struct Bundle {
    dir: PathBuf,
    notes: Vec<String>,
}

impl Bundle {
    fn write(&self, name: &str, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        debug_assert!(BUNDLE_FILES.contains(&name), "{name} missing from BUNDLE_FILES");
        let mut sink = output::sink(Some(&self.dir.join(name)))?;
        f(&mut *sink)
    }

    fn header_only(&self, name: &str, header: &[&str]) -> Result<()> {
        self.write(name, |w| output::header_only(w, header))
    }

    /// Keeps a data-driven failure as a note; I/O failures still abort.
    fn attempt<T>(&mut self, what: &str, result: folkmetrics::Result<T>) -> Result<Option<T>> {
        match result {
            Ok(v) => Ok(Some(v)),
            Err(folkmetrics::Error::Io(e)) => Err(e.into()),
            Err(e) => {
                self.skip(what, e);
                Ok(None)
            }
        }
    }

    fn skip(&mut self, what: &str, reason: impl std::fmt::Display) {
        eprintln!("warning: {what} skipped: {reason}");
        self.notes.push(format!("{what} skipped: {reason}"));
    }
}

#[derive(Serialize)]
struct Parameters<'a> {
    input: String,
    delimiter: String,
    header: bool,
    granularity: TimeGranularity,
    dedupe: bool,
    fraction: f64,
    bins: String,
    spear_top_k: usize,
    spear_min_users: usize,
    spear_exponent: f64,
    spear_tolerance: f64,
    spear_max_iter: usize,
    taxonomy_threshold: f64,
    taxonomy_min_support: u64,
    orphan_divisor: f64,
    pareto_resolution: usize,
    popularity: Option<&'a str>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    parameters: Parameters<'a>,
    ingest: IngestReport,
    files: &'static [&'static str],
    notes: &'a [String],
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    granularity: TimeGranularity,
    deduplicated: bool,
    summary: &'a DatasetSummary,
}

fn validate(args: &ReportArgs) -> Result<()> {
    args.bins.bins.validate()?;
    args.spear.config().validate()?;
    let t = args.taxonomy.threshold;
    if !(t > 0.0 && t <= 1.0) {
        anyhow::bail!("taxonomy threshold must lie in (0, 1], got {t}");
    }
    if !(args.orphan_divisor > 0.0) {
        anyhow::bail!("orphan divisor must be > 0, got {}", args.orphan_divisor);
    }
    Ok(())
}

pub(crate) fn run(g: &GlobalArgs, args: &ReportArgs) -> Result<()> {
    validate(args)?;
    let (index, ingest) = load_with_report(g, &args.input.input)?;
    if index.is_empty() {
        anyhow::bail!("input holds no annotations");
    }
    let popularity = args.popularity.as_deref().map(|p| load_popularity(p, g.delimiter, &index)).transpose()?;

    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let mut b = Bundle { dir: args.out_dir.clone(), notes: Vec::new() };
    let spec = &args.bins.bins;

    // dataset summary
    let summary = index.summary();
    b.write("dataset_summary.json", |w| {
        let doc = SummaryDoc { granularity: index.granularity(), deduplicated: index.is_deduplicated(), summary: &summary };
        output::json(w, &doc)
    })?;
    b.write("dataset_summary.csv", |w| dataset_summary_csv(w, &summary))?;

    // partition, pareto
    let partition = split_supertaggers(&index, args.split.fraction)?;
    let psummary = partition_summary(&index, &partition)?;
    b.write("partition.json", |w| output::json(w, &PartitionDoc::new(&index, &partition, &psummary, false)?))?;
    write_user_lists(&b.dir, &index, &partition)?;
    b.write("partition_summary.csv", |w| output::partition_summary(w, &psummary))?;
    let pareto = pareto_curve(&index, resolution(args.pareto_resolution))?;
    b.write("pareto.csv", |w| output::pareto(w, &pareto))?;

    // usage and similarity along both dimensions
    for (dim, name) in [(Dimension::Tag, "tag"), (Dimension::Item, "item")] {
        for cumulative in [false, true] {
            let file = if cumulative { format!("usage_{name}_cumulative.csv") } else { format!("usage_{name}.csv") };
            let what = format!("{name} usage distribution");
            match b.attempt(&what, usage_pair(&index, &partition, dim, cumulative).map_err(to_domain))? {
                Some((s, o)) => b.write(&file, |w| output::usage(w, &[("supertaggers", &s), ("others", &o)]))?,
                None => b.header_only(&file, &USAGE_HEADER)?,
            }
        }
        let file = format!("similarity_{name}.csv");
        match b.attempt(&format!("{name} similarity"), similarity_curve(&index, &partition, dim, None))? {
            Some(curve) => b.write(&file, |w| output::similarity(w, &curve))?,
            None => b.header_only(&file, &output::SIMILARITY_HEADER)?,
        }
    }

    // exogenous popularity
    let exo = match &popularity {
        Some(pop) => b.attempt("exo-diff", exogenous_popularity_diff(&index, &partition, pop, spec))?,
        None => {
            b.skip("exo-diff", "no popularity file given");
            None
        }
    };
    match exo {
        Some(series) => b.write("exo_diff.csv", |w| output::binned(w, &output::EXO_DIFF_HEADER, &series))?,
        None => b.header_only("exo_diff.csv", &output::EXO_DIFF_HEADER)?,
    }

    // consensus between the groups
    match b.attempt("consensus", consensus_by_bin(&index, &partition, spec))? {
        Some(series) => b.write("consensus.csv", |w| output::consensus(w, &series))?,
        None => b.header_only("consensus.csv", &output::CONSENSUS_HEADER)?,
    }

    // motivation
    match b.attempt("motivation", all_motivation_scores(&index, args.orphan_divisor))? {
        Some(scores) => {
            b.write("motivation_per_user.csv", |w| output::motivation_users(w, &index, &scores))?;
            let series = bin_scores(&index, &scores, spec);
            b.write("motivation_binned.csv", |w| output::motivation_binned(w, &series))?;
        }
        None => {
            b.header_only("motivation_per_user.csv", &output::MOTIVATION_USER_HEADER)?;
            b.header_only("motivation_binned.csv", &output::MOTIVATION_BINNED_HEADER)?;
        }
    }

    // expertise analyses score the deduplicated view and bin by raw activity
    let view = dedupe_view(&index);

    match b.attempt("SPEAR", spear_user_scores(&view, &args.spear.config()))? {
        Some(outcome) => {
            warn_unconverged(outcome.unconverged_tags, outcome.tags);
            if outcome.unconverged_tags > 0 {
                b.notes.push(format!(
                    "SPEAR did not converge on {} of {} tags",
                    outcome.unconverged_tags, outcome.tags
                ));
            }
            b.write("spear_per_user.csv", |w| output::user_scores(w, &index, &outcome.user_scores))?;
            let series = bin_user_scores(&index, &outcome.user_scores, spec);
            b.write("spear_binned.csv", |w| output::binned(w, &output::BINNED_HEADER, &series))?;
        }
        None => {
            b.header_only("spear_per_user.csv", &output::USER_SCORE_HEADER)?;
            b.header_only("spear_binned.csv", &output::BINNED_HEADER)?;
        }
    }

    let scorer = ConsensusScorer::new(&view, FrequencyMode::DistinctUsers);
    let scores = all_user_scores(&scorer);
    if scores.is_empty() {
        b.skip("consensus expertise", "no user tagged an item that anyone else tagged");
    }
    write_scores(&b, "consensus_expertise", &index, &scores, spec)?;

    // taxonomy and depth
    match build_forest(&view, &args.taxonomy, &args.spear.eligibility) {
        Ok(built) => {
            b.write("taxonomy.json", |w| output::json(w, &ForestDoc::new(&view, &built, &args.taxonomy)))?;
            let vocab = depth_user_scores(&view, &built.forest, DepthMode::Vocabulary);
            let ann = depth_user_scores(&view, &built.forest, DepthMode::Annotation);
            if vocab.is_empty() {
                b.skip("depth expertise", "no tag is connected in the taxonomy");
            }
            b.write("depth_per_user.csv", |w| depth_users(w, &index, &vocab, &ann))?;
            b.write("depth_vocabulary_binned.csv", |w| {
                output::binned(w, &output::BINNED_HEADER, &bin_user_scores(&index, &vocab, spec))
            })?;
            b.write("depth_annotation_binned.csv", |w| {
                output::binned(w, &output::BINNED_HEADER, &bin_user_scores(&index, &ann, spec))
            })?;
        }
        Err(e) => {
            b.skip("taxonomy", format!("{e:#}"));
            b.write("taxonomy.json", |w| output::json(w, &serde_json::json!({ "nodes": [], "disconnected": [] })))?;
            b.header_only("depth_per_user.csv", &DEPTH_USER_HEADER)?;
            b.header_only("depth_vocabulary_binned.csv", &output::BINNED_HEADER)?;
            b.header_only("depth_annotation_binned.csv", &output::BINNED_HEADER)?;
        }
    }

    let manifest = Manifest {
        parameters: Parameters {
            input: display_path(&args.input.input),
            delimiter: g.delimiter.escape_default().to_string(),
            header: g.header,
            granularity: g.granularity,
            dedupe: index.is_deduplicated(),
            fraction: args.split.fraction,
            bins: spec.to_string(),
            spear_top_k: args.spear.eligibility.top_k,
            spear_min_users: args.spear.eligibility.min_users,
            spear_exponent: args.spear.exponent,
            spear_tolerance: args.spear.tolerance,
            spear_max_iter: args.spear.max_iter,
            taxonomy_threshold: args.taxonomy.threshold,
            taxonomy_min_support: args.taxonomy.min_support,
            orphan_divisor: args.orphan_divisor,
            pareto_resolution: args.pareto_resolution,
            popularity: args.popularity.as_deref().and_then(Path::to_str),
        },
        ingest,
        files: BUNDLE_FILES,
        notes: &b.notes,
    };
    b.write("manifest.json", |w| output::json(w, &manifest))
}

fn to_domain(e: anyhow::Error) -> folkmetrics::Error {
    match e.downcast::<folkmetrics::Error>() {
        Ok(e) => e,
        Err(other) => folkmetrics::Error::Io(std::io::Error::other(other.to_string())),
    }
}

fn display_path(p: &Path) -> String {
    if p.as_os_str() == "-" {
        "-".to_owned()
    } else {
        p.display().to_string()
    }
}

fn write_scores(
    b: &Bundle,
    stem: &str,
    index: &FolksonomyIndex,
    scores: &[(UserId, f64)],
    spec: &folkmetrics::BinSpec,
) -> Result<()> {
    b.write(&format!("{stem}_per_user.csv"), |w| output::user_scores(w, index, scores))?;
    let series = bin_user_scores(index, scores, spec);
    b.write(&format!("{stem}_binned.csv"), |w| output::binned(w, &output::BINNED_HEADER, &series))
}

fn dataset_summary_csv(w: &mut dyn Write, s: &DatasetSummary) -> Result<()> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    out.write_record(DATASET_SUMMARY_HEADER)?;
    let mut row = vec![s.taggers, s.tags, s.items, s.annotations].into_iter().map(|v| v.to_string()).collect::<Vec<_>>();
    for q in [&s.per_user, &s.per_tag, &s.per_item] {
        row.extend([q.q1, q.median, q.q3].map(|v| v.to_string()));
    }
    out.write_record(&row)?;
    out.flush()?;
    Ok(())
}

/// Both depth modes side by side; a user scores in one mode exactly when
/// they score in the other, but the merge does not rely on it.
fn depth_users(w: &mut dyn Write, index: &FolksonomyIndex, vocab: &[(UserId, f64)], ann: &[(UserId, f64)]) -> Result<()> {
    let mut merged: BTreeMap<UserId, (f64, f64)> = BTreeMap::new();
    for &(u, s) in vocab {
        merged.entry(u).or_insert((f64::NAN, f64::NAN)).0 = s;
    }
    for &(u, s) in ann {
        merged.entry(u).or_insert((f64::NAN, f64::NAN)).1 = s;
    }
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    out.write_record(DEPTH_USER_HEADER)?;
    for (u, (v, a)) in merged {
        out.write_record([
            index.user_name(u).to_owned(),
            index.user_annotation_count(u).to_string(),
            output::float(v),
            output::float(a),
        ])?;
    }
    out.flush()?;
    Ok(())
}
