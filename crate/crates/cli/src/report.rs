//! Reports: a table of rows plus input echo, tolerances and a summary,
//! emitted as CSV or JSON. Floats are written as `{:.16e}` (17
//! significant digits), so every value round-trips exactly.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde_json::{Map, Number, Value};

use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => float(*x),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => Value::from(*i),
            Cell::Float(x) if x.is_finite() => {
                Value::Number(float(*x).parse::<Number>().expect("valid JSON number"))
            }
            Cell::Float(x) => Value::String(float(*x)),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Bool(b) => Value::Bool(*b),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<i64> for Cell {
    fn from(i: i64) -> Self {
        Cell::Int(i)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// `{:.16e}`, with `NaN`, `inf` and `-inf` spelled out.
pub fn float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

/// Space-separated floats.
pub fn floats(xs: impl IntoIterator<Item = f64>) -> String {
    let mut out = String::new();
    for (i, x) in xs.into_iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{}", float(x));
    }
    out
}

/// A word as dot-separated letters; the empty word is `e`.
pub fn word(w: &[i32]) -> String {
    if w.is_empty() {
        return "e".into();
    }
    w.iter()
        .map(|l| l.to_string())
        .collect::<Vec<_>>()
        .join(".")
}

/// The truncation, epsilon and quadrature order in force for a row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RowContext {
    pub word_length: usize,
    pub epsilon: f64,
    pub quad_order: usize,
}

const CONTEXT_COLUMNS: [&str; 3] = ["word_length", "epsilon", "quad_order"];

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub command: String,
    pub inputs: Vec<(String, Cell)>,
    pub tolerances: Vec<(String, f64)>,
    /// Columns after the three context columns.
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Vec<(String, Cell)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Report {
    pub fn new(command: &str, columns: &[&str]) -> Self {
        Report {
            command: command.to_string(),
            inputs: Vec::new(),
            tolerances: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            summary: Vec::new(),
        }
    }

    pub fn input(&mut self, key: &str, value: impl Into<Cell>) {
        self.inputs.push((key.to_string(), value.into()));
    }

    pub fn tolerance(&mut self, key: &str, value: f64) {
        self.tolerances.push((key.to_string(), value));
    }

    pub fn summarize(&mut self, key: &str, value: impl Into<Cell>) {
        self.summary.push((key.to_string(), value.into()));
    }

    pub fn push(&mut self, ctx: RowContext, cells: Vec<Cell>) {
        assert_eq!(
            cells.len(),
            self.columns.len(),
            "row width for {}",
            self.command
        );
        let mut row = vec![
            Cell::from(ctx.word_length),
            Cell::from(ctx.epsilon),
            Cell::from(ctx.quad_order),
        ];
        row.extend(cells);
        self.rows.push(row);
    }

    pub fn all_columns(&self) -> Vec<String> {
        CONTEXT_COLUMNS
            .iter()
            .map(|c| c.to_string())
            .chain(self.columns.iter().cloned())
            .collect()
    }

    /// Index of a column among [`Report::all_columns`].
    pub fn column(&self, name: &str) -> Option<usize> {
        self.all_columns().iter().position(|c| c == name)
    }

    pub fn summary_value(&self, key: &str) -> Option<&Cell> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    /// Metadata lines start with `#`: `#command`, `#input`, `#tolerance`,
    /// `#summary`; the header row and data rows follow.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .flexible(true)
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let mut rec = |fields: Vec<String>| w.write_record(&fields).expect("in-memory write");
        rec(vec!["#command".into(), self.command.clone()]);
        for (k, v) in &self.inputs {
            rec(vec!["#input".into(), k.clone(), v.text()]);
        }
        for (k, v) in &self.tolerances {
            rec(vec!["#tolerance".into(), k.clone(), float(*v)]);
        }
        for (k, v) in &self.summary {
            rec(vec!["#summary".into(), k.clone(), v.text()]);
        }
        rec(self.all_columns());
        for row in &self.rows {
            rec(row.iter().map(Cell::text).collect());
        }
        let bytes = w.into_inner().expect("in-memory flush");
        String::from_utf8(bytes).expect("utf-8 fields")
    }

    pub fn to_json(&self) -> String {
        let obj = |pairs: &[(String, Cell)]| -> Value {
            Value::Object(pairs.iter().map(|(k, v)| (k.clone(), v.json())).collect())
        };
        let columns = self.all_columns();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                Value::Object(
                    columns
                        .iter()
                        .zip(r)
                        .map(|(c, v)| (c.clone(), v.json()))
                        .collect::<Map<_, _>>(),
                )
            })
            .collect();
        let mut top = Map::new();
        top.insert("command".into(), Value::String(self.command.clone()));
        top.insert("inputs".into(), obj(&self.inputs));
        top.insert(
            "tolerances".into(),
            Value::Object(
                self.tolerances
                    .iter()
                    .map(|(k, v)| (k.clone(), Cell::Float(*v).json()))
                    .collect(),
            ),
        );
        top.insert("summary".into(), obj(&self.summary));
        top.insert(
            "columns".into(),
            Value::Array(columns.into_iter().map(Value::String).collect()),
        );
        top.insert("rows".into(), Value::Array(rows));
        let mut s = serde_json::to_string_pretty(&Value::Object(top)).expect("serializable");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

/// Writes `text` to `path` through a temporary file in the same directory
/// and a rename, so readers never see a partial report.
pub fn write_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io {
        path: path.display().to_string(),
        source: e,
    };
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Input(format!("--out {} has no file name", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let mut f = std::fs::File::create(&tmp).map_err(io)?;
    f.write_all(text.as_bytes()).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(io)
}
