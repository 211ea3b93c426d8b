use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use super::{CountPair, MultiplicityTable};
use crate::error::{Error, Result};

/// One parsed `category_id<TAB>count` file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CountFile {
    pub counts: BTreeMap<String, u64>,
    /// Value of a `#K=<integer>` header line, if present.
    pub k: Option<u64>,
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn parse_count(path: &Path, line: usize, field: &str) -> Result<u64> {
    let field = field.trim();
    if field.starts_with('-') && field[1..].parse::<u64>().is_ok() {
        return Err(parse_err(path, line, format!("negative count {field}")));
    }
    field
        .parse::<u64>()
        .map_err(|_| parse_err(path, line, format!("invalid count {field:?}")))
}

pub fn parse_count_text(path: &Path, text: &str) -> Result<CountFile> {
    let mut out = CountFile::default();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(value) = comment.trim().strip_prefix("K=") {
                let k = value
                    .trim()
                    .parse::<u64>()
                    .ok()
                    .filter(|&k| k > 0)
                    .ok_or_else(|| parse_err(path, lineno, format!("invalid K header {value:?}")))?;
                if out.k.is_some_and(|prev| prev != k) {
                    return Err(parse_err(path, lineno, "conflicting K headers"));
                }
                out.k = Some(k);
            }
            continue;
        }
        let (id, count) = line
            .split_once('\t')
            .ok_or_else(|| parse_err(path, lineno, "expected category_id<TAB>count"))?;
        if id.is_empty() {
            return Err(parse_err(path, lineno, "empty category id"));
        }
        let count = parse_count(path, lineno, count)?;
        if out.counts.insert(id.to_string(), count).is_some() {
            return Err(parse_err(path, lineno, format!("duplicate category {id:?}")));
        }
    }
    Ok(out)
}

pub fn read_count_file(path: impl AsRef<Path>) -> Result<CountFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_count_text(path, &text)
}

/// Joins two count files on category id. K comes from `k_override`, or else
/// from the `#K=` headers, which must agree.
pub fn read_pair_files(
    path1: impl AsRef<Path>,
    path2: impl AsRef<Path>,
    k_override: Option<u64>,
) -> Result<MultiplicityTable> {
    let (p1, p2) = (path1.as_ref(), path2.as_ref());
    let f1 = read_count_file(p1)?;
    let f2 = read_count_file(p2)?;
    pair_files(&f1, &f2, k_override, (p1, p2))
}

fn pair_files(
    f1: &CountFile,
    f2: &CountFile,
    k_override: Option<u64>,
    paths: (&Path, &Path),
) -> Result<MultiplicityTable> {
    let k = match (k_override, f1.k, f2.k) {
        (Some(k), _, _) => k,
        (None, Some(a), Some(b)) if a != b => {
            return Err(Error::Inconsistent(format!(
                "{} declares K={a} but {} declares K={b}",
                paths.0.display(),
                paths.1.display()
            )))
        }
        (None, Some(k), _) | (None, None, Some(k)) => k,
        (None, None, None) => {
            return Err(Error::Config(
                "K is required: pass --k or add a #K=<integer> header".into(),
            ))
        }
    };
    let ids: BTreeSet<&String> = f1.counts.keys().chain(f2.counts.keys()).collect();
    let pairs = ids.into_iter().map(|id| {
        CountPair::new(
            f1.counts.get(id).copied().unwrap_or(0),
            f2.counts.get(id).copied().unwrap_or(0),
        )
    });
    MultiplicityTable::from_pairs(pairs, k)
}

/// Reads a two-column `n,m` CSV with one row per category; K is the row
/// count. A non-numeric first row is taken as a header.
pub fn read_pair_csv(path: impl AsRef<Path>) -> Result<MultiplicityTable> {
    let path: PathBuf = path.as_ref().to_path_buf();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(&path)?;
    let mut pairs = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let lineno = record.position().map_or(idx + 1, |p| p.line() as usize);
        if record.len() != 2 {
            return Err(parse_err(&path, lineno, "expected two columns n,m"));
        }
        if idx == 0 && record[0].parse::<i64>().is_err() && record[1].parse::<i64>().is_err() {
            continue;
        }
        let n = parse_count(&path, lineno, &record[0])?;
        let m = parse_count(&path, lineno, &record[1])?;
        pairs.push(CountPair::new(n, m));
    }
    if pairs.is_empty() {
        return Err(parse_err(&path, 0, "no categories"));
    }
    let k = pairs.len() as u64;
    MultiplicityTable::from_pairs(pairs, k)
}
