//! Line-delimited JSON traces, prediction pairs and JSON config files.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use datactl_core::retrospect::PredictionPair;
use datactl_core::{Error as CoreError, Trace, TraceRecord};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

const TRACE_KEYS: &[&str] = &["t", "x", "y", "circ", "events"];
const PAIR_KEYS: &[&str] = &["t", "horizon", "k", "predicted", "realized"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Unknown keys are an error.
    #[default]
    Strict,
    /// Unknown keys are dropped.
    Lenient,
}

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Line { path: PathBuf, line: usize, msg: String },
    #[error("{path}: {msg}")]
    File { path: PathBuf, msg: String },
}

impl IoError {
    fn line(path: &Path, line: usize, msg: impl Into<String>) -> Self {
        IoError::Line {
            path: path.to_path_buf(),
            line,
            msg: msg.into(),
        }
    }

    fn file(path: &Path, msg: impl Into<String>) -> Self {
        IoError::File {
            path: path.to_path_buf(),
            msg: msg.into(),
        }
    }
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses non-blank lines into objects, checking keys against `allowed`.
/// Returns each object with its 1-based line number.
fn objects(text: &str, path: &Path, allowed: &[&str], mode: ParseMode) -> Result<Vec<(usize, Value)>, IoError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let mut obj: Map<String, Value> = serde_json::from_str(raw)
            .map_err(|e| IoError::line(path, line, format!("malformed record: {e}")))?;
        let unknown: Vec<String> = obj.keys().filter(|k| !allowed.contains(&k.as_str())).cloned().collect();
        if !unknown.is_empty() {
            match mode {
                ParseMode::Strict => {
                    return Err(IoError::line(
                        path,
                        line,
                        format!("unknown key(s) {} (use --lenient to ignore)", unknown.join(", ")),
                    ))
                }
                ParseMode::Lenient => unknown.iter().for_each(|k| {
                    obj.remove(k);
                }),
            }
        }
        out.push((line, Value::Object(obj)));
    }
    Ok(out)
}

/// Rewrites record indices in core errors as file line numbers.
fn locate(err: CoreError, lines: &[usize], path: &Path) -> IoError {
    let index = match &err {
        CoreError::DimensionMismatch { index, .. } | CoreError::NonMonotoneTime { index, .. } => Some(*index),
        _ => None,
    };
    match index.and_then(|i| lines.get(i)) {
        Some(&line) => IoError::line(path, line, err.to_string()),
        None => IoError::file(path, err.to_string()),
    }
}

pub fn parse_trace_str(text: &str, path: &Path, mode: ParseMode) -> Result<Trace, IoError> {
    let objs = objects(text, path, TRACE_KEYS, mode)?;
    let mut lines = Vec::with_capacity(objs.len());
    let mut records = Vec::with_capacity(objs.len());
    for (line, v) in objs {
        let r: TraceRecord =
            serde_json::from_value(v).map_err(|e| IoError::line(path, line, format!("malformed record: {e}")))?;
        lines.push(line);
        records.push(r);
    }
    Trace::from_records(records, path.display().to_string()).map_err(|e| locate(e, &lines, path))
}

/// Reads a trace file: one JSON record per line, blank lines skipped.
pub fn parse_trace(path: &Path, mode: ParseMode) -> Result<Trace, IoError> {
    parse_trace_str(&read(path)?, path, mode)
}

pub fn parse_pairs_str(text: &str, path: &Path, mode: ParseMode) -> Result<Vec<PredictionPair>, IoError> {
    let objs = objects(text, path, PAIR_KEYS, mode)?;
    let pairs = objs
        .into_iter()
        .map(|(line, v)| {
            serde_json::from_value(v).map_err(|e| IoError::line(path, line, format!("malformed pair: {e}")))
        })
        .collect::<Result<Vec<PredictionPair>, _>>()?;
    if pairs.is_empty() {
        return Err(IoError::file(path, "no prediction pairs"));
    }
    Ok(pairs)
}

pub fn parse_pairs(path: &Path, mode: ParseMode) -> Result<Vec<PredictionPair>, IoError> {
    parse_pairs_str(&read(path)?, path, mode)
}

/// Reads a whole-file JSON document (spec, knowledge base, params, config).
pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| IoError::file(path, format!("invalid JSON: {e}")))
}

/// Writes one compact JSON document per item.
pub fn write_jsonl<'a, T: Serialize + 'a>(out: &mut dyn Write, items: impl IntoIterator<Item = &'a T>) -> std::io::Result<()> {
    let mut w = BufWriter::new(out);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn write_trace(out: &mut dyn Write, trace: &Trace) -> std::io::Result<()> {
    write_jsonl(out, trace.records())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    fs::write(path, bytes).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}
