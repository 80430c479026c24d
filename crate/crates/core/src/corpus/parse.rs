use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::{normalize_tag, Annotation, FolksonomyIndex, IndexBuilder, ItemId, TimeGranularity};
use crate::error::{Error, Result};

/// Delimited-text layout of an annotation file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InputFormat {
    pub delimiter: char,
    /// First line is a header and is skipped.
    pub header: bool,
}

impl Default for InputFormat {
    fn default() -> Self {
        Self {
            delimiter: '\t',
            header: false,
        }
    }
}

impl InputFormat {
    /// Accepts a literal character or one of `\t`, `tab`, `comma`, `space`.
    pub fn parse_delimiter(s: &str) -> Result<char> {
        match s {
            "\\t" | "tab" | "TAB" => Ok('\t'),
            "comma" => Ok(','),
            "space" => Ok(' '),
            "semicolon" => Ok(';'),
            _ => {
                let mut chars = s.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) if c != '\n' && c != '\r' => Ok(c),
                    _ => Err(Error::domain(format!("invalid delimiter `{s}`"))),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Parsed {
    pub annotations: Vec<Annotation>,
    pub malformed: usize,
    pub granularity: TimeGranularity,
}

/// Line accounting for an ingestion run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct IngestReport {
    pub lines: usize,
    pub accepted: usize,
    pub malformed: usize,
}

enum Line<'a> {
    Blank,
    Malformed,
    Ok {
        user: &'a str,
        item: &'a str,
        tag: String,
        time: u64,
    },
}

fn parse_line(line: &str, delimiter: char) -> Line<'_> {
    let line = line.trim_end_matches(['\n', '\r']);
    if line.trim().is_empty() {
        return Line::Blank;
    }
    let mut fields = line.split(delimiter);
    let (Some(user), Some(item), Some(tag), Some(time), None) = (
        fields.next(),
        fields.next(),
        fields.next(),
        fields.next(),
        fields.next(),
    ) else {
        return Line::Malformed;
    };
    let (user, item, tag) = (user.trim(), item.trim(), normalize_tag(tag));
    if user.is_empty() || item.is_empty() || tag.is_empty() {
        return Line::Malformed;
    }
    match time.trim().parse::<u64>() {
        Ok(time) => Line::Ok {
            user,
            item,
            tag,
            time,
        },
        Err(_) => Line::Malformed,
    }
}

/// Drives `sink` with every well-formed record of `source`.
fn scan<R: BufRead>(
    mut source: R,
    format: &InputFormat,
    mut sink: impl FnMut(&str, &str, &str, u64),
) -> Result<IngestReport> {
    let mut report = IngestReport::default();
    let mut buf = String::new();
    let mut first = true;
    loop {
        buf.clear();
        if source.read_line(&mut buf)? == 0 {
            break;
        }
        if std::mem::take(&mut first) && format.header {
            continue;
        }
        match parse_line(&buf, format.delimiter) {
            Line::Blank => {}
            Line::Malformed => {
                report.lines += 1;
                report.malformed += 1;
            }
            Line::Ok {
                user,
                item,
                tag,
                time,
            } => {
                report.lines += 1;
                report.accepted += 1;
                sink(user, item, &tag, time);
            }
        }
    }
    if report.malformed * 2 > report.lines {
        return Err(Error::Format {
            malformed: report.malformed,
            lines: report.lines,
        });
    }
    Ok(report)
}

/// Parses a whole annotation stream into memory.
///
/// Malformed lines are skipped and counted; if they are the majority the
/// stream is rejected with [`Error::Format`].
pub fn parse_annotations<R: BufRead>(
    source: R,
    format: &InputFormat,
    granularity: TimeGranularity,
) -> Result<Parsed> {
    let mut annotations = Vec::new();
    let report = scan(source, format, |user, item, tag, time| {
        annotations.push(Annotation {
            user: user.to_owned(),
            item: item.to_owned(),
            tag: tag.to_owned(),
            time,
        });
    })?;
    Ok(Parsed {
        annotations,
        malformed: report.malformed,
        granularity,
    })
}

/// Streams `source` straight into an index without materializing
/// [`Annotation`] values.
pub fn read_index<R: BufRead>(
    source: R,
    format: &InputFormat,
    granularity: TimeGranularity,
    dedupe: bool,
) -> Result<(FolksonomyIndex, IngestReport)> {
    let mut builder = IndexBuilder::new(granularity);
    let report = scan(source, format, |user, item, tag, time| {
        builder.push(user, item, tag, time)
    })?;
    Ok((builder.finish(dedupe), report))
}

pub fn write_annotations<W: Write>(
    mut out: W,
    annotations: &[Annotation],
    format: &InputFormat,
) -> Result<()> {
    let d = format.delimiter;
    if format.header {
        writeln!(out, "user{d}item{d}tag{d}time")?;
    }
    for a in annotations {
        writeln!(out, "{}{d}{}{d}{}{d}{}", a.user, a.item, a.tag, a.time)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads an `<item><delimiter><count>` sidecar, keeping only items present
/// in `index`. Unknown items are skipped; malformed lines are an error.
pub fn read_popularity<R: BufRead>(
    source: R,
    delimiter: char,
    index: &FolksonomyIndex,
) -> Result<BTreeMap<ItemId, f64>> {
    let mut out = BTreeMap::new();
    for (lineno, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(delimiter);
        let (Some(item), Some(count), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::domain(format!(
                "popularity line {} does not have two columns",
                lineno + 1
            )));
        };
        let count: f64 = match count.trim().parse() {
            Ok(c) if c >= 0.0 && f64::is_finite(c) => c,
            // tolerate a header row
            _ if lineno == 0 => continue,
            _ => {
                return Err(Error::domain(format!(
                    "popularity line {} has an invalid count `{count}`",
                    lineno + 1
                )))
            }
        };
        if let Some(id) = index.item_id(item.trim()) {
            out.insert(id, count);
        }
    }
    Ok(out)
}
