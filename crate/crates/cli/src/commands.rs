//! One handler per subcommand, plus the JSON shapes shared with `report`.

use std::borrow::Cow;
use std::fs::{self, File};
use std::io::{self, BufReader};
use std::path::Path;

use anyhow::{Context, Result};
use folkmetrics::consensus::consensus_by_bin;
use folkmetrics::consensus_expertise::{all_user_scores, ConsensusScorer, FrequencyMode};
use folkmetrics::corpus::{
    generate_synthetic, read_index, read_popularity, write_annotations, IngestReport, InputFormat, SyntheticConfig,
};
use folkmetrics::motivation::{all_motivation_scores, bin_scores};
use folkmetrics::partition::{pareto_curve, partition_summary, split_supertaggers, user_gini, Partition, PartitionSummary};
use folkmetrics::similarity::{exogenous_popularity_diff, group_dist, similarity_curve, usage_distribution};
use folkmetrics::spear::{eligible_tags, spear_user_scores};
use folkmetrics::stats::bin_user_scores;
use folkmetrics::taxonomy::{conditional_table, depth_user_scores, induce_forest, TaxonomyForest};
use folkmetrics::{DatasetSummary, FolksonomyIndex, TimeGranularity};
use serde::Serialize;

use crate::args::{
    Cli, Command, EligibilityArgs, ExpertiseCommand, GlobalArgs, SynthArgs, TaxonomyArgs, Toggle,
};
use crate::output;
use crate::report;

pub(crate) fn execute(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Ingest { input, out } => ingest(g, &input.input, out.as_deref()),
        Command::Synth(args) => synth(g, args),
        Command::Partition { input, split, out, users_dir, summary_csv, pareto, pareto_resolution } => {
            let index = load(g, &input.input)?;
            let partition = split_supertaggers(&index, split.fraction)?;
            let summary = partition_summary(&index, &partition)?;
            let inline = users_dir.is_none();
            if let Some(dir) = users_dir {
                write_user_lists(dir, &index, &partition)?;
            }
            let doc = PartitionDoc::new(&index, &partition, &summary, inline)?;
            output::json(&mut *output::sink(out.as_deref())?, &doc)?;
            if let Some(path) = summary_csv {
                output::partition_summary(&mut *output::sink(Some(path))?, &summary)?;
            }
            if let Some(path) = pareto {
                let curve = pareto_curve(&index, resolution(*pareto_resolution))?;
                output::pareto(&mut *output::sink(Some(path))?, &curve)?;
            }
            Ok(())
        }
        Command::Similarity { input, split, dimension, n_values, out } => {
            let index = load(g, &input.input)?;
            let partition = split_supertaggers(&index, split.fraction)?;
            let curve = similarity_curve(&index, &partition, *dimension, n_values.as_deref())?;
            output::similarity(&mut *output::sink(out.as_deref())?, &curve)
        }
        Command::UsageDist { input, split, dimension, cumulative, out } => {
            let index = load(g, &input.input)?;
            let partition = split_supertaggers(&index, split.fraction)?;
            let (s, o) = usage_pair(&index, &partition, *dimension, *cumulative)?;
            output::usage(&mut *output::sink(out.as_deref())?, &[("supertaggers", &s), ("others", &o)])
        }
        Command::ExoDiff { input, split, bins, popularity, out } => {
            let index = load(g, &input.input)?;
            let partition = split_supertaggers(&index, split.fraction)?;
            let pop = load_popularity(popularity, g.delimiter, &index)?;
            let series = exogenous_popularity_diff(&index, &partition, &pop, &bins.bins)?;
            output::binned(&mut *output::sink(out.as_deref())?, &output::EXO_DIFF_HEADER, &series)
        }
        Command::Consensus { input, split, bins, out } => {
            let index = load(g, &input.input)?;
            let partition = split_supertaggers(&index, split.fraction)?;
            let series = consensus_by_bin(&index, &partition, &bins.bins)?;
            output::consensus(&mut *output::sink(out.as_deref())?, &series)
        }
        Command::Motivation { input, bins, orphan_divisor, per_user, binned } => {
            let index = load(g, &input.input)?;
            let scores = all_motivation_scores(&index, *orphan_divisor)?;
            if let Some(path) = per_user {
                output::motivation_users(&mut *output::sink(Some(path))?, &index, &scores)?;
            }
            if binned.is_some() || per_user.is_none() {
                bins.bins.validate()?;
                let series = bin_scores(&index, &scores, &bins.bins);
                output::motivation_binned(&mut *output::sink(binned.as_deref())?, &series)?;
            }
            Ok(())
        }
        Command::Spear { input, bins, spear, per_user, out } => {
            let index = load(g, &input.input)?;
            bins.bins.validate()?;
            let outcome = spear_user_scores(&index, &spear.config())?;
            warn_unconverged(outcome.unconverged_tags, outcome.tags);
            if let Some(path) = per_user {
                output::user_scores(&mut *output::sink(Some(path))?, &index, &outcome.user_scores)?;
            }
            let series = bin_user_scores(&index, &outcome.user_scores, &bins.bins);
            output::binned(&mut *output::sink(out.as_deref())?, &output::BINNED_HEADER, &series)
        }
        Command::Expertise(ExpertiseCommand::Consensus { input, bins, frequency, per_user, binned }) => {
            let index = load(g, &input.input)?;
            bins.bins.validate()?;
            let view = scoring_view(&index, *frequency);
            let scorer = ConsensusScorer::new(&view, *frequency);
            let scores = all_user_scores(&scorer);
            if scores.is_empty() {
                anyhow::bail!("no user tagged an item that anyone else tagged");
            }
            if let Some(path) = per_user {
                output::user_scores(&mut *output::sink(Some(path))?, &index, &scores)?;
            }
            if binned.is_some() || per_user.is_none() {
                let series = bin_user_scores(&index, &scores, &bins.bins);
                output::binned(&mut *output::sink(binned.as_deref())?, &output::BINNED_HEADER, &series)?;
            }
            Ok(())
        }
        Command::Expertise(ExpertiseCommand::Depth { input, bins, taxonomy, eligibility, mode, per_user, binned }) => {
            let index = load(g, &input.input)?;
            bins.bins.validate()?;
            let view = dedupe_view(&index);
            let built = build_forest(&view, taxonomy, eligibility)?;
            let scores = depth_user_scores(&view, &built.forest, *mode);
            if scores.is_empty() {
                anyhow::bail!("no user applied a tag connected in the taxonomy");
            }
            eprintln!("connected-tag annotation coverage: {}", output::float(built.forest.coverage(&view)));
            if let Some(path) = per_user {
                output::user_scores(&mut *output::sink(Some(path))?, &index, &scores)?;
            }
            if binned.is_some() || per_user.is_none() {
                let series = bin_user_scores(&index, &scores, &bins.bins);
                output::binned(&mut *output::sink(binned.as_deref())?, &output::BINNED_HEADER, &series)?;
            }
            Ok(())
        }
        Command::Taxonomy { input, taxonomy, eligibility, out } => {
            let index = load(g, &input.input)?;
            let view = dedupe_view(&index);
            let built = build_forest(&view, taxonomy, eligibility)?;
            let doc = ForestDoc::new(&view, &built, taxonomy);
            output::json(&mut *output::sink(out.as_deref())?, &doc)
        }
        Command::Report(args) => report::run(g, args),
    }
}

pub(crate) fn input_format(g: &GlobalArgs) -> InputFormat {
    InputFormat { delimiter: g.delimiter, header: g.header }
}

/// Reads and indexes an annotation file (`-` is stdin), warning on stderr
/// about skipped lines.
pub(crate) fn load_with_report(g: &GlobalArgs, path: &Path) -> Result<(FolksonomyIndex, IngestReport)> {
    let format = input_format(g);
    let dedupe = g.dedupe == Toggle::On;
    let (index, report) = if path.as_os_str() == "-" {
        read_index(io::stdin().lock(), &format, g.granularity, dedupe).context("reading stdin")?
    } else {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        read_index(BufReader::with_capacity(1 << 20, file), &format, g.granularity, dedupe)
            .with_context(|| format!("reading {}", path.display()))?
    };
    if report.malformed > 0 {
        eprintln!("warning: skipped {} malformed line(s) of {}", report.malformed, report.lines);
    }
    Ok((index, report))
}

pub(crate) fn load(g: &GlobalArgs, path: &Path) -> Result<FolksonomyIndex> {
    let (index, _) = load_with_report(g, path)?;
    if index.is_empty() {
        anyhow::bail!("{} holds no annotations", display_input(path));
    }
    Ok(index)
}

fn display_input(path: &Path) -> String {
    if path.as_os_str() == "-" {
        "stdin".to_owned()
    } else {
        path.display().to_string()
    }
}

pub(crate) fn load_popularity(
    path: &Path,
    delimiter: char,
    index: &FolksonomyIndex,
) -> Result<std::collections::BTreeMap<folkmetrics::ItemId, f64>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_popularity(BufReader::new(file), delimiter, index).with_context(|| format!("reading {}", path.display()))
}

pub(crate) fn dedupe_view(index: &FolksonomyIndex) -> Cow<'_, FolksonomyIndex> {
    if index.is_deduplicated() {
        Cow::Borrowed(index)
    } else {
        Cow::Owned(index.deduplicated())
    }
}

/// Distinct-user frequencies are counted on the deduplicated view; raw mode
/// keeps every record.
pub(crate) fn scoring_view(index: &FolksonomyIndex, mode: FrequencyMode) -> Cow<'_, FolksonomyIndex> {
    match mode {
        FrequencyMode::DistinctUsers => dedupe_view(index),
        FrequencyMode::RawAnnotations => Cow::Borrowed(index),
    }
}

pub(crate) fn resolution(r: usize) -> Option<usize> {
    (r > 0).then_some(r)
}

pub(crate) fn warn_unconverged(unconverged: usize, tags: usize) {
    if unconverged > 0 {
        eprintln!("warning: SPEAR did not converge on {unconverged} of {tags} tags");
    }
}

pub(crate) fn usage_pair(
    index: &FolksonomyIndex,
    partition: &Partition,
    dimension: folkmetrics::similarity::Dimension,
    cumulative: bool,
) -> Result<(Vec<folkmetrics::similarity::UsagePoint>, Vec<folkmetrics::similarity::UsagePoint>)> {
    use folkmetrics::partition::Group;
    let s = group_dist(index, partition, Group::Supertaggers, dimension);
    let o = group_dist(index, partition, Group::Others, dimension);
    Ok((usage_distribution(&s, cumulative)?, usage_distribution(&o, cumulative)?))
}

#[derive(Serialize)]
struct IngestDoc<'a> {
    granularity: TimeGranularity,
    deduplicated: bool,
    lines: usize,
    accepted: usize,
    malformed: usize,
    summary: &'a DatasetSummary,
}

fn ingest(g: &GlobalArgs, input: &Path, out: Option<&Path>) -> Result<()> {
    let (index, report) = load_with_report(g, input)?;
    let summary = index.summary();
    let doc = IngestDoc {
        granularity: index.granularity(),
        deduplicated: index.is_deduplicated(),
        lines: report.lines,
        accepted: report.accepted,
        malformed: report.malformed,
        summary: &summary,
    };
    output::json(&mut *output::sink(out)?, &doc)
}

fn synth(g: &GlobalArgs, a: &SynthArgs) -> Result<()> {
    let config = SyntheticConfig {
        n_users: a.users,
        activity_exponent: a.activity_exponent,
        n_items: a.items,
        n_tags: a.tags,
        item_popularity_exponent: a.item_exponent,
        tag_popularity_exponent: a.tag_exponent,
        max_user_annotations: a.max_user_annotations,
        seed: a.seed,
    };
    let annotations = generate_synthetic(&config)?;
    let mut sink = output::sink(a.out.as_deref())?;
    write_annotations(&mut sink, &annotations, &input_format(g))?;
    Ok(())
}

/// Partition JSON. User lists are inlined unless written to separate files.
#[derive(Serialize)]
pub(crate) struct PartitionDoc<'a> {
    target_fraction: f64,
    annotation_threshold: usize,
    users: usize,
    total_annotations: usize,
    supertagger_count: usize,
    other_count: usize,
    supertagger_annotations: usize,
    supertagger_share: f64,
    supertagger_user_fraction: f64,
    gini: f64,
    summary: &'a PartitionSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    supertaggers: Option<Vec<&'a str>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    others: Option<Vec<&'a str>>,
}

impl<'a> PartitionDoc<'a> {
    pub(crate) fn new(
        index: &'a FolksonomyIndex,
        partition: &'a Partition,
        summary: &'a PartitionSummary,
        inline_users: bool,
    ) -> Result<Self> {
        let names = |users: &[folkmetrics::UserId]| users.iter().map(|&u| index.user_name(u)).collect::<Vec<_>>();
        let s_ann = summary.supertaggers.annotations;
        Ok(Self {
            target_fraction: partition.target_fraction(),
            annotation_threshold: partition.annotation_threshold(),
            users: index.n_users(),
            total_annotations: index.len(),
            supertagger_count: partition.supertaggers().len(),
            other_count: partition.others().len(),
            supertagger_annotations: s_ann,
            supertagger_share: s_ann as f64 / index.len() as f64,
            supertagger_user_fraction: partition.supertaggers().len() as f64 / index.n_users() as f64,
            gini: user_gini(index)?,
            summary,
            supertaggers: inline_users.then(|| names(partition.supertaggers())),
            others: inline_users.then(|| names(partition.others())),
        })
    }
}

pub(crate) fn write_user_lists(dir: &Path, index: &FolksonomyIndex, partition: &Partition) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (file, users) in [("supertaggers.txt", partition.supertaggers()), ("others.txt", partition.others())] {
        let mut sink = output::sink(Some(&dir.join(file)))?;
        output::lines(&mut *sink, users.iter().map(|&u| index.user_name(u)))?;
    }
    Ok(())
}

pub(crate) struct BuiltForest {
    pub forest: TaxonomyForest,
    pub eligible: usize,
}

/// Builds the forest over the eligible tags of a deduplicated view.
pub(crate) fn build_forest(view: &FolksonomyIndex, tax: &TaxonomyArgs, elig: &EligibilityArgs) -> Result<BuiltForest> {
    let tags = eligible_tags(view, elig.top_k, elig.min_users);
    if tags.is_empty() {
        anyhow::bail!(
            "no tag is among the top {} and used by at least {} users",
            elig.top_k,
            elig.min_users
        );
    }
    let table = conditional_table(view, &tags, tax.min_support);
    let forest = induce_forest(&table, tax.threshold)?;
    Ok(BuiltForest { forest, eligible: tags.len() })
}

#[derive(Serialize)]
struct NodeDoc<'a> {
    tag: &'a str,
    parent: Option<&'a str>,
    root: &'a str,
    raw_depth: u32,
    norm_depth: f64,
}

/// Forest JSON with tag names in place of ids.
#[derive(Serialize)]
pub(crate) struct ForestDoc<'a> {
    threshold: f64,
    min_support: u64,
    eligible_tags: usize,
    connected_tags: usize,
    trees: usize,
    max_raw_depth: u32,
    coverage: f64,
    nodes: Vec<NodeDoc<'a>>,
    disconnected: Vec<&'a str>,
}

impl<'a> ForestDoc<'a> {
    pub(crate) fn new(view: &'a FolksonomyIndex, built: &'a BuiltForest, tax: &TaxonomyArgs) -> Self {
        let f = &built.forest;
        Self {
            threshold: f.threshold,
            min_support: tax.min_support,
            eligible_tags: built.eligible,
            connected_tags: f.nodes.len(),
            trees: f.n_trees(),
            max_raw_depth: f.max_raw_depth(),
            coverage: f.coverage(view),
            nodes: f
                .nodes
                .iter()
                .map(|n| NodeDoc {
                    tag: view.tag_name(n.tag),
                    parent: n.parent.map(|p| view.tag_name(p)),
                    root: view.tag_name(n.root),
                    raw_depth: n.raw_depth,
                    norm_depth: n.norm_depth,
                })
                .collect(),
            disconnected: f.disconnected.iter().map(|&t| view.tag_name(t)).collect(),
        }
    }
}
