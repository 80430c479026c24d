//! Deterministic statistics kernel shared by the analyses.
//!
//! Everything here is pure and reentrant. Sums go through [`CompensatedSum`]
//! and callers feed values in a fixed (sorted-key) order, so repeated runs
//! produce bit-identical results regardless of thread scheduling.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::corpus::{FolksonomyIndex, UserId};
use crate::error::{Error, Result};

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

pub fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().collect::<CompensatedSum>().total()
}

/// 1-based ranks with tied values sharing the average of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::domain(format!(
            "vectors differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two observations"));
    }
    let n = x.len() as f64;
    let mean_x = sum(x.iter().copied()) / n;
    let mean_y = sum(y.iter().copied()) / n;
    let mut sxx = CompensatedSum::new();
    let mut syy = CompensatedSum::new();
    let mut sxy = CompensatedSum::new();
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mean_x;
        let dy = b - mean_y;
        sxx.add(dx * dx);
        syy.add(dy * dy);
        sxy.add(dx * dy);
    }
    let (sxx, syy, sxy) = (sxx.total(), syy.total(), sxy.total());
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::UndefinedCorrelation("constant vector"));
    }
    if x == y {
        return Ok(1.0);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman's rho: Pearson correlation of average-tie ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::domain(format!(
            "vectors differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Cosine of the angle between two vectors. Zero vectors are rejected.
pub fn cosine(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::domain(format!(
            "vectors differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    let nx = sum(x.iter().map(|v| v * v));
    let ny = sum(y.iter().map(|v| v * v));
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::domain("cosine of a zero vector"));
    }
    if x == y {
        return Ok(1.0);
    }
    let dot = sum(x.iter().zip(y).map(|(a, b)| a * b));
    Ok((dot / (nx.sqrt() * ny.sqrt())).clamp(-1.0, 1.0))
}

/// Lower median and nearest-rank 25th/75th percentiles of a count sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Quartiles {
    pub q1: u64,
    pub median: u64,
    pub q3: u64,
}

impl Quartiles {
    /// Returns all zeros for an empty sample.
    pub fn of(values: &mut [u64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        values.sort_unstable();
        Self {
            q1: nearest_rank(values, 25),
            median: values[(values.len() - 1) / 2],
            q3: nearest_rank(values, 75),
        }
    }
}

/// Nearest-rank percentile of a sorted, non-empty slice.
pub fn nearest_rank(sorted: &[u64], percent: usize) -> u64 {
    let rank = (percent * sorted.len()).div_ceil(100).max(1);
    sorted[rank.min(sorted.len()) - 1]
}

/// Logarithmic bin layout: edges at `base^(k * step)` for `k * step` up to
/// `max_exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinSpec {
    pub base: f64,
    pub exponent_step: f64,
    pub max_exponent: f64,
}

impl Default for BinSpec {
    fn default() -> Self {
        Self {
            base: 2.0,
            exponent_step: 0.1,
            max_exponent: 14.0,
        }
    }
}

impl BinSpec {
    pub fn new(base: f64, exponent_step: f64, max_exponent: f64) -> Result<Self> {
        let spec = Self {
            base,
            exponent_step,
            max_exponent,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base > 1.0 && self.base.is_finite()) {
            return Err(Error::domain("bin base must be a finite value > 1"));
        }
        if !(self.exponent_step > 0.0 && self.exponent_step <= self.max_exponent)
            || !self.max_exponent.is_finite()
        {
            return Err(Error::domain(
                "bin exponent step must satisfy 0 < step <= max exponent",
            ));
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        // tolerate max/step landing a hair under an integer
        (self.max_exponent / self.exponent_step + 1e-9).floor() as usize
    }

    fn edge(&self, k: i64) -> f64 {
        self.base.powf(k as f64 * self.exponent_step)
    }

    /// Index `k` of the bin `[edge(k), edge(k+1))` holding `value >= 1`.
    ///
    /// Values past the last configured edge land in further bins of the same
    /// geometric progression rather than being dropped.
    pub fn bin_index(&self, value: f64) -> Option<i64> {
        self.locate(&log_bins(self), value)
    }

    fn locate(&self, edges: &[f64], value: f64) -> Option<i64> {
        if value.is_nan() || value < 1.0 {
            return None;
        }
        let last = edges.len() as i64 - 1;
        if value < edges[edges.len() - 1] {
            let pos = edges.partition_point(|&e| e <= value);
            return Some(pos as i64 - 1);
        }
        let mut k = last;
        while self.edge(k + 1) <= value {
            k += 1;
        }
        Some(k)
    }
}

impl fmt::Display for BinSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "base={},step={},max={}",
            self.base, self.exponent_step, self.max_exponent
        )
    }
}

impl FromStr for BinSpec {
    type Err = Error;

    /// Parses `base=2,step=0.1,max=14`; omitted keys keep their defaults.
    fn from_str(s: &str) -> Result<Self> {
        let mut spec = BinSpec::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::domain(format!("bin spec entry `{part}` is not key=value")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::domain(format!("bin spec value `{value}` is not a number")))?;
            match key.trim() {
                "base" => spec.base = value,
                "step" => spec.exponent_step = value,
                "max" => spec.max_exponent = value,
                other => return Err(Error::domain(format!("unknown bin spec key `{other}`"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Bin edges `base^0, base^step, ..., base^max_exponent`.
pub fn log_bins(spec: &BinSpec) -> Vec<f64> {
    (0..=spec.steps() as i64).map(|k| spec.edge(k)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinnedRow {
    pub bin_low: f64,
    pub bin_high: f64,
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

/// Per-bin mean and standard error; empty bins are omitted.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct BinnedSeries {
    pub rows: Vec<BinnedRow>,
}

impl BinnedSeries {
    pub fn total_count(&self) -> usize {
        self.rows.iter().map(|r| r.n).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Mean, sample standard error, min and max of a non-empty sample.
pub(crate) fn describe(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = sum(values.iter().copied()) / n;
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = mean.clamp(lo, hi);
    let stderr = if values.len() < 2 {
        0.0
    } else {
        let ss = sum(values.iter().map(|v| (v - mean) * (v - mean)));
        (ss / (n - 1.0)).sqrt() / n.sqrt()
    };
    (mean, stderr)
}

/// Groups `(key, value)` pairs into logarithmic key bins and reports the mean
/// and standard error (sample standard deviation over `sqrt(n)`) per bin.
///
/// Keys below 1 are collected into a single `[min key, 1)` bin. Within a bin,
/// values are accumulated in input order.
pub fn binned_mean(pairs: impl IntoIterator<Item = (f64, f64)>, spec: &BinSpec) -> BinnedSeries {
    let edges = log_bins(spec);
    let mut groups: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    let mut floor_low = f64::INFINITY;
    for (key, value) in pairs {
        if key.is_nan() {
            continue;
        }
        let idx = match spec.locate(&edges, key) {
            Some(k) => k,
            None => {
                floor_low = floor_low.min(key);
                -1
            }
        };
        groups.entry(idx).or_default().push(value);
    }
    let rows = groups
        .into_iter()
        .map(|(k, values)| {
            let (bin_low, bin_high) = if k < 0 {
                (floor_low, 1.0)
            } else {
                (spec.edge(k), spec.edge(k + 1))
            };
            let (mean, stderr) = describe(&values);
            BinnedRow {
                bin_low,
                bin_high,
                mean,
                stderr,
                n: values.len(),
            }
        })
        .collect();
    BinnedSeries { rows }
}

/// Per-user scores binned by each user's annotation count in `index`.
pub fn bin_user_scores(index: &FolksonomyIndex, scores: &[(UserId, f64)], spec: &BinSpec) -> BinnedSeries {
    binned_mean(
        scores.iter().map(|&(u, s)| (index.user_annotation_count(u) as f64, s)),
        spec,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn average_ranks_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 5.0]), vec![2.5, 4.0, 2.5, 1.0]);
    }

    #[test]
    fn spearman_identity_and_reversal() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let rev: Vec<f64> = x.iter().rev().copied().collect();
        assert_eq!(spearman(&x, &x).unwrap(), 1.0);
        assert!((spearman(&x, &rev).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn spearman_constant_is_undefined() {
        assert!(matches!(
            spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::UndefinedCorrelation(_))
        ));
    }

    #[test]
    fn cosine_basics() {
        assert_eq!(cosine(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 3.0]).unwrap(), 0.0);
        assert!(cosine(&[0.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn quartiles_conventions() {
        assert_eq!(
            Quartiles::of(&mut [3, 1, 2]),
            Quartiles { q1: 1, median: 2, q3: 3 }
        );
        assert_eq!(
            Quartiles::of(&mut [7]),
            Quartiles { q1: 7, median: 7, q3: 7 }
        );
        // lower median for even length
        assert_eq!(Quartiles::of(&mut [1, 2, 3, 4]).median, 2);
        assert_eq!(Quartiles::of(&mut []), Quartiles::default());
    }

    #[test]
    fn log_bins_powers_of_two() {
        let spec = BinSpec::new(2.0, 1.0, 3.0).unwrap();
        assert_eq!(log_bins(&spec), vec![1.0, 2.0, 4.0, 8.0]);
    }

    #[test]
    fn log_bins_single_bin_when_step_equals_max() {
        let spec = BinSpec::new(2.0, 3.0, 3.0).unwrap();
        assert_eq!(log_bins(&spec), vec![1.0, 8.0]);
    }

    #[test]
    fn value_five_lands_in_expected_default_bin() {
        let spec = BinSpec::default();
        let k = spec.bin_index(5.0).unwrap();
        // log2(5) = 2.3219..., so the bin starts at exponent 2.3
        assert_eq!(k, 23);
        let edges = log_bins(&spec);
        assert!(edges[23] <= 5.0 && 5.0 < edges[24]);
        assert!((edges[23] - 2f64.powf(2.3)).abs() < 1e-12);
        assert!((edges[24] - 2f64.powf(2.4)).abs() < 1e-12);
    }

    #[test]
    fn values_past_last_edge_extend_the_progression() {
        let spec = BinSpec::new(2.0, 1.0, 3.0).unwrap();
        assert_eq!(spec.bin_index(8.0), Some(3));
        assert_eq!(spec.bin_index(20.0), Some(4));
        assert_eq!(spec.bin_index(0.5), None);
    }

    #[test]
    fn bin_spec_parsing() {
        let spec: BinSpec = "base=2,step=0.1,max=14".parse().unwrap();
        assert_eq!(spec, BinSpec::default());
        let spec: BinSpec = "step=0.5".parse().unwrap();
        assert_eq!(spec.exponent_step, 0.5);
        assert!("base=1".parse::<BinSpec>().is_err());
        assert!("step=0".parse::<BinSpec>().is_err());
        assert!("foo=1".parse::<BinSpec>().is_err());
    }

    #[test]
    fn binned_mean_single_bin() {
        let spec = BinSpec::new(2.0, 1.0, 3.0).unwrap();
        let series = binned_mean([(2.0, 1.0), (3.0, 2.0), (3.5, 6.0)], &spec);
        assert_eq!(series.rows.len(), 1);
        let row = series.rows[0];
        assert_eq!((row.bin_low, row.bin_high, row.n), (2.0, 4.0, 3));
        assert_eq!(row.mean, 3.0);
        // sample sd = sqrt(7), stderr = sqrt(7/3)
        assert!((row.stderr - (7.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn binned_mean_one_value_per_bin() {
        let spec = BinSpec::new(2.0, 1.0, 3.0).unwrap();
        let series = binned_mean([(1.0, 4.0), (2.0, 5.0), (4.0, 6.0)], &spec);
        assert_eq!(series.rows.len(), 3);
        assert!(series.rows.iter().all(|r| r.stderr == 0.0 && r.n == 1));
    }

    #[test]
    fn binned_mean_floor_bin_for_small_keys() {
        let spec = BinSpec::default();
        let series = binned_mean([(0.0, 1.0), (0.5, 3.0)], &spec);
        assert_eq!(series.rows.len(), 1);
        assert_eq!(series.rows[0].bin_low, 0.0);
        assert_eq!(series.rows[0].bin_high, 1.0);
        assert_eq!(series.rows[0].mean, 2.0);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut acc = CompensatedSum::new();
        acc.add(1e16);
        for _ in 0..10 {
            acc.add(1.0);
        }
        acc.add(-1e16);
        assert_eq!(acc.total(), 10.0);
    }
}
