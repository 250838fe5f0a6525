//! Reading prediction and label files, writing reports.
//!
//! Predictions are CSV with header `instance_id,member_id,<class>...`, one
//! row per (instance, ensemble member). Class columns are conventionally
//! named `p_0 .. p_{K-1}`; the `p_` prefix is dropped to form class names.
//! Labels are CSV with header `instance_id,label` and 0-based class indices.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::simplex::{EmpiricalSecondOrder, ProbVector, SimplexError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        column: usize,
        message: String,
    },
    #[error("{path}: instance '{instance}' has members {found:?}, expected {expected:?}")]
    InconsistentMembers {
        path: PathBuf,
        instance: String,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("{path}:{line}: bad probability row for instance '{instance}', member '{member}': {source}")]
    BadProbabilityRow {
        path: PathBuf,
        line: u64,
        instance: String,
        member: String,
        #[source]
        source: SimplexError,
    },
    #[error("{path}:{line}: duplicate row for '{key}'")]
    DuplicateRow { path: PathBuf, line: u64, key: String },
    #[error("failed to serialize report: {0}")]
    Serialize(String),
}

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::File {
        path: path.to_path_buf(),
        source,
    }
}

/// Parsed predictions: one second-order distribution per instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub class_names: Vec<String>,
    /// Ensemble member ids, sorted; every instance has exactly these.
    pub members: Vec<String>,
    /// Keyed and ordered by instance id.
    pub instances: BTreeMap<String, EmpiricalSecondOrder>,
}

impl Predictions {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }
}

fn class_name(column: &str) -> String {
    column.strip_prefix("p_").unwrap_or(column).to_string()
}

fn parse_error(path: &Path, line: u64, column: usize, message: impl Into<String>) -> IoError {
    IoError::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message: message.into(),
    }
}

fn csv_error(path: &Path, err: csv::Error) -> IoError {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    match err.kind() {
        csv::ErrorKind::Io(_) => {
            let msg = err.to_string();
            IoError::File {
                path: path.to_path_buf(),
                source: std::io::Error::other(msg),
            }
        }
        _ => parse_error(path, line, 0, err.to_string()),
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input)
}

/// Loads a predictions file into one uniform-weight distribution per
/// instance, with members in sorted member-id order.
pub fn load_predictions(path: &Path) -> Result<Predictions, IoError> {
    let file = File::open(path).map_err(file_err(path))?;
    read_predictions(file, path)
}

/// [`load_predictions`] on any reader; `path` is only used in messages.
pub fn read_predictions<R: Read>(input: R, path: &Path) -> Result<Predictions, IoError> {
    let mut rdr = reader(input);
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(parse_error(path, 1, 1, "empty file: missing header"));
    }
    if header.get(0) != Some("instance_id") {
        return Err(parse_error(path, 1, 1, "first column must be 'instance_id'"));
    }
    if header.get(1) != Some("member_id") {
        return Err(parse_error(path, 1, 2, "second column must be 'member_id'"));
    }
    if header.len() < 4 {
        return Err(parse_error(
            path,
            1,
            header.len() + 1,
            "need at least 2 probability columns",
        ));
    }
    let class_names: Vec<String> = header.iter().skip(2).map(class_name).collect();
    let k = class_names.len();

    let mut rows: BTreeMap<String, BTreeMap<String, ProbVector>> = BTreeMap::new();
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record).map_err(|e| csv_error(path, e))? {
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let instance = record[0].to_string();
        let member = record[1].to_string();
        if instance.is_empty() {
            return Err(parse_error(path, line, 1, "empty instance_id"));
        }
        if member.is_empty() {
            return Err(parse_error(path, line, 2, "empty member_id"));
        }
        let mut raw = Vec::with_capacity(k);
        for c in 0..k {
            let field = &record[c + 2];
            let value: f64 = field
                .parse()
                .map_err(|_| parse_error(path, line, c + 3, format!("not a number: '{field}'")))?;
            raw.push(value);
        }
        let probs = ProbVector::new(&raw).map_err(|source| IoError::BadProbabilityRow {
            path: path.to_path_buf(),
            line,
            instance: instance.clone(),
            member: member.clone(),
            source,
        })?;
        let members = rows.entry(instance.clone()).or_default();
        if members.insert(member.clone(), probs).is_some() {
            return Err(IoError::DuplicateRow {
                path: path.to_path_buf(),
                line,
                key: format!("{instance}/{member}"),
            });
        }
    }
    if rows.is_empty() {
        return Err(parse_error(path, 2, 1, "no prediction rows"));
    }

    let expected: Vec<String> = rows.values().next().expect("non-empty").keys().cloned().collect();
    let mut instances = BTreeMap::new();
    for (instance, members) in rows {
        let found: Vec<String> = members.keys().cloned().collect();
        if found != expected {
            return Err(IoError::InconsistentMembers {
                path: path.to_path_buf(),
                instance,
                expected,
                found,
            });
        }
        let q = EmpiricalSecondOrder::uniform(members.into_values().collect())
            .expect("at least one member of consistent width");
        instances.insert(instance, q);
    }
    Ok(Predictions {
        class_names,
        members: expected,
        instances,
    })
}

/// Loads `instance_id,label` rows.
pub fn load_labels(path: &Path) -> Result<BTreeMap<String, usize>, IoError> {
    let file = File::open(path).map_err(file_err(path))?;
    read_labels(file, path)
}

pub fn read_labels<R: Read>(input: R, path: &Path) -> Result<BTreeMap<String, usize>, IoError> {
    let mut rdr = reader(input);
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.get(0) != Some("instance_id") || header.get(1) != Some("label") || header.len() != 2 {
        return Err(parse_error(path, 1, 1, "header must be 'instance_id,label'"));
    }
    let mut labels = BTreeMap::new();
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record).map_err(|e| csv_error(path, e))? {
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let id = record[0].to_string();
        let label: usize = record[1]
            .parse()
            .map_err(|_| parse_error(path, line, 2, format!("not a class index: '{}'", &record[1])))?;
        if labels.insert(id.clone(), label).is_some() {
            return Err(IoError::DuplicateRow {
                path: path.to_path_buf(),
                line,
                key: id,
            });
        }
    }
    Ok(labels)
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_f64(x: f64) -> String {
    match serde_json::Number::from_f64(x) {
        Some(n) => n.to_string(),
        None if x.is_nan() => "NaN".into(),
        None if x > 0.0 => "inf".into(),
        None => "-inf".into(),
    }
}

/// Writes a predictions file for `instances` (in the given order).
pub fn write_predictions<W: Write>(
    out: W,
    class_names: &[String],
    instances: &[(String, Vec<(String, ProbVector)>)],
) -> Result<(), IoError> {
    let mut wtr = csv::Writer::from_writer(out);
    let mut header = vec!["instance_id".to_string(), "member_id".to_string()];
    header.extend(class_names.iter().map(|c| format!("p_{c}")));
    let ser = |e: csv::Error| IoError::Serialize(e.to_string());
    wtr.write_record(&header).map_err(ser)?;
    for (instance, members) in instances {
        for (member, probs) in members {
            let mut row = vec![instance.clone(), member.clone()];
            row.extend(probs.as_slice().iter().map(|&p| format_f64(p)));
            wtr.write_record(&row).map_err(ser)?;
        }
    }
    wtr.flush().map_err(|e| IoError::Serialize(e.to_string()))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Tabular output with a metadata block.
///
/// CSV puts metadata in leading `# key: value` comment lines; JSON emits
/// `{"meta": {...}, "rows": [{column: value, ...}, ...]}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub meta: Vec<(String, Value)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Report {
    pub fn new(columns: Vec<String>) -> Self {
        Self {
            meta: Vec::new(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.meta.push((key.to_string(), value.into()));
        self
    }

    pub fn push_row(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: OutputFormat) -> Result<Vec<u8>, IoError> {
        match format {
            OutputFormat::Csv => self.render_csv(),
            OutputFormat::Json => self.render_json(),
        }
    }

    fn render_csv(&self) -> Result<Vec<u8>, IoError> {
        let mut buf = Vec::new();
        for (key, value) in &self.meta {
            writeln!(buf, "# {key}: {}", csv_cell(value)).expect("write to Vec");
        }
        let mut wtr = csv::Writer::from_writer(&mut buf);
        let ser = |e: csv::Error| IoError::Serialize(e.to_string());
        wtr.write_record(&self.columns).map_err(ser)?;
        for row in &self.rows {
            wtr.write_record(row.iter().map(csv_cell)).map_err(ser)?;
        }
        wtr.flush().map_err(|e| IoError::Serialize(e.to_string()))?;
        drop(wtr);
        Ok(buf)
    }

    fn render_json(&self) -> Result<Vec<u8>, IoError> {
        let meta: Map<String, Value> = self.meta.iter().cloned().collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self.columns.iter().cloned().zip(row.iter().cloned()).collect();
                Value::Object(obj)
            })
            .collect();
        let doc = serde_json::json!({ "meta": meta, "rows": rows });
        let mut out = serde_json::to_vec_pretty(&doc).map_err(|e| IoError::Serialize(e.to_string()))?;
        out.push(b'\n');
        Ok(out)
    }
}

fn csv_cell(value: &Value) -> String {
    match value {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// JSON number for `x`; non-finite values become strings.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .unwrap_or_else(|| Value::String(format_f64(x)))
}

/// Writes `bytes` to `path` via a temporary file in the same directory and
/// an atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(&dir).map_err(file_err(path))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        w.write_all(bytes).map_err(file_err(path))?;
        w.flush().map_err(file_err(path))?;
    }
    tmp.persist(path).map_err(|e| IoError::File {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}
