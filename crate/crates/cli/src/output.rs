//! CSV and JSON writers. Every CSV starts with a header row; floats use the
//! shortest representation that round-trips, so output is byte-stable.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use folkmetrics::consensus::ConsensusSeries;
use folkmetrics::motivation::{MotivationScores, MotivationSeries};
use folkmetrics::partition::{ParetoCurve, PartitionSummary};
use folkmetrics::similarity::{SimilarityCurve, UsagePoint};
use folkmetrics::{BinnedSeries, FolksonomyIndex, UserId};
use serde::Serialize;

pub const SIMILARITY_HEADER: [&str; 4] = ["N", "rho", "cosine", "coverage"];
pub const EXO_DIFF_HEADER: [&str; 5] = ["bin_low", "bin_high", "mean_diff", "stderr", "n"];
pub const BINNED_HEADER: [&str; 5] = ["bin_low", "bin_high", "mean", "stderr", "n"];
pub const CONSENSUS_HEADER: [&str; 7] = [
    "bin_low",
    "bin_high",
    "top_match_rate",
    "top_match_stderr",
    "cosine_mean",
    "cosine_stderr",
    "n",
];

/// Opens `path` for writing (creating parent directories), or stdout.
pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) if p.as_os_str() != "-" => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        _ => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

pub fn float(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_owned()
    } else {
        x.to_string()
    }
}

fn csv_writer(w: &mut dyn Write) -> csv::Writer<&mut dyn Write> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn finish(mut out: csv::Writer<&mut dyn Write>) -> Result<()> {
    out.flush()?;
    Ok(())
}

pub fn json<T: Serialize>(w: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// A binned series under `header`, whose third column is the mean.
pub fn binned(w: &mut dyn Write, header: &[&str; 5], series: &BinnedSeries) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(header)?;
    for r in &series.rows {
        out.write_record([float(r.bin_low), float(r.bin_high), float(r.mean), float(r.stderr), r.n.to_string()])?;
    }
    finish(out)
}

pub fn header_only(w: &mut dyn Write, header: &[&str]) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(header)?;
    finish(out)
}

pub fn similarity(w: &mut dyn Write, curve: &SimilarityCurve) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(SIMILARITY_HEADER)?;
    for p in &curve.points {
        out.write_record([
            p.n.to_string(),
            float(p.rho.unwrap_or(f64::NAN)),
            float(p.cosine),
            float(p.coverage),
        ])?;
    }
    finish(out)
}

/// Both groups' usage distributions in one table.
pub fn usage(w: &mut dyn Write, groups: &[(&str, &[UsagePoint])]) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["group", "N", "proportion"])?;
    for (name, points) in groups {
        for p in *points {
            out.write_record([name.to_string(), p.n.to_string(), float(p.proportion)])?;
        }
    }
    finish(out)
}

pub fn consensus(w: &mut dyn Write, series: &ConsensusSeries) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(CONSENSUS_HEADER)?;
    // both series bin the same items by the same key, so rows align
    for (m, c) in series.top_match.rows.iter().zip(&series.cosine.rows) {
        out.write_record([
            float(m.bin_low),
            float(m.bin_high),
            float(m.mean),
            float(m.stderr),
            float(c.mean),
            float(c.stderr),
            m.n.to_string(),
        ])?;
    }
    finish(out)
}

pub const MOTIVATION_BINNED_HEADER: [&str; 6] = ["metric", "bin_low", "bin_high", "mean", "stderr", "n"];

pub fn motivation_binned(w: &mut dyn Write, series: &MotivationSeries) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(MOTIVATION_BINNED_HEADER)?;
    for (name, s) in [("tpp", &series.tpp), ("trr", &series.trr), ("orphan_ratio", &series.orphan_ratio)] {
        for r in &s.rows {
            out.write_record([
                name.to_owned(),
                float(r.bin_low),
                float(r.bin_high),
                float(r.mean),
                float(r.stderr),
                r.n.to_string(),
            ])?;
        }
    }
    finish(out)
}

pub const MOTIVATION_USER_HEADER: [&str; 5] = ["user", "annotations", "tpp", "trr", "orphan_ratio"];

pub fn motivation_users(w: &mut dyn Write, index: &FolksonomyIndex, scores: &[MotivationScores]) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(MOTIVATION_USER_HEADER)?;
    for s in scores {
        out.write_record([
            index.user_name(s.user).to_owned(),
            index.user_annotation_count(s.user).to_string(),
            float(s.tpp),
            float(s.trr),
            float(s.orphan_ratio),
        ])?;
    }
    finish(out)
}

pub const USER_SCORE_HEADER: [&str; 3] = ["user", "annotations", "score"];

pub fn user_scores(w: &mut dyn Write, index: &FolksonomyIndex, scores: &[(UserId, f64)]) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(USER_SCORE_HEADER)?;
    for &(u, s) in scores {
        out.write_record([index.user_name(u).to_owned(), index.user_annotation_count(u).to_string(), float(s)])?;
    }
    finish(out)
}

pub fn pareto(w: &mut dyn Write, curve: &ParetoCurve) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["user_fraction", "annotation_fraction"])?;
    for &(x, y) in &curve.points {
        out.write_record([float(x), float(y)])?;
    }
    finish(out)
}

pub const PARTITION_SUMMARY_HEADER: [&str; 18] = [
    "group",
    "users",
    "annotations",
    "total_tags",
    "unique_tags",
    "shared_tags",
    "total_items",
    "unique_items",
    "shared_items",
    "annotations_q1",
    "annotations_median",
    "annotations_q3",
    "tags_q1",
    "tags_median",
    "tags_q3",
    "items_q1",
    "items_median",
    "items_q3",
];

pub fn partition_summary(w: &mut dyn Write, summary: &PartitionSummary) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(PARTITION_SUMMARY_HEADER)?;
    for (name, g) in [("supertaggers", &summary.supertaggers), ("others", &summary.others)] {
        let q = |q: &folkmetrics::stats::Quartiles| [q.q1.to_string(), q.median.to_string(), q.q3.to_string()];
        let mut row = vec![
            name.to_owned(),
            g.users.to_string(),
            g.annotations.to_string(),
            g.total_tags.to_string(),
            g.unique_tags.to_string(),
            summary.shared_tags.to_string(),
            g.total_items.to_string(),
            g.unique_items.to_string(),
            summary.shared_items.to_string(),
        ];
        row.extend(q(&g.per_user_annotations));
        row.extend(q(&g.per_user_tags));
        row.extend(q(&g.per_user_items));
        out.write_record(&row)?;
    }
    finish(out)
}

pub fn lines(w: &mut dyn Write, names: impl IntoIterator<Item = impl AsRef<str>>) -> Result<()> {
    for n in names {
        writeln!(w, "{}", n.as_ref())?;
    }
    w.flush()?;
    Ok(())
}
