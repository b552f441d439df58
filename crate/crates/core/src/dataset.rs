//! Column-typed sample tables, node views and class histograms.
//!
//! A [`Dataset`] is immutable once loaded. Categorical cells are interned into
//! a per-column dictionary built over the whole file, so branch identities stay
//! stable between the rows a tree was trained on and rows it later predicts.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::splitter::{RuleKind, SplitRule};

/// Category substituted for missing categorical cells.
pub const MISSING_CATEGORY: &str = "?";

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("empty file")]
    EmptyFile,
    #[error("schema error: {0}")]
    Schema(String),
    #[error("target column `{0}` not found")]
    TargetNotFound(String),
    #[error("column `{column}` is declared numeric but line {line} holds `{value}`")]
    NumericParse {
        column: String,
        line: u64,
        value: String,
    },
    #[error("no usable rows ({dropped} dropped)")]
    NoRows { dropped: usize },
    #[error("expected {expected} cells on line {line}, found {found}")]
    RowLength {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("empty node view")]
    EmptyView,
    #[error("feature {0} does not exist")]
    UnknownFeature(usize),
    #[error("feature `{feature}` is {actual}, rule needs {expected}")]
    WrongKind {
        feature: String,
        expected: ColumnKind,
        actual: ColumnKind,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColumnKind::Numeric => "numeric",
            ColumnKind::Categorical => "categorical",
        })
    }
}

impl FromStr for ColumnKind {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "numeric" => Ok(ColumnKind::Numeric),
            "categorical" => Ok(ColumnKind::Categorical),
            other => Err(DataError::Schema(format!(
                "unknown column kind `{other}` (expected numeric or categorical)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

/// Ordered column list plus the position of the target column.
///
/// The target is always categorical regardless of what it was declared as.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    columns: Vec<ColumnSpec>,
    target: usize,
}

impl Schema {
    pub fn new(mut columns: Vec<ColumnSpec>, target: &str) -> Result<Self, DataError> {
        let mut seen = HashMap::new();
        for (i, c) in columns.iter().enumerate() {
            if seen.insert(c.name.as_str(), i).is_some() {
                return Err(DataError::Schema(format!("duplicate column `{}`", c.name)));
            }
        }
        let target = *seen
            .get(target)
            .ok_or_else(|| DataError::TargetNotFound(target.to_string()))?;
        columns[target].kind = ColumnKind::Categorical;
        Ok(Schema { columns, target })
    }

    /// Parses the sidecar format: one `name,kind` line per column and a
    /// `target=<name>` line. Blank lines and `#` comments are skipped.
    pub fn parse_sidecar(text: &str) -> Result<Self, DataError> {
        let mut columns = Vec::new();
        let mut target = None;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(t) = line.strip_prefix("target=") {
                if target.replace(t.trim().to_string()).is_some() {
                    return Err(DataError::Schema("more than one target line".into()));
                }
                continue;
            }
            let (name, kind) = line
                .rsplit_once(',')
                .ok_or_else(|| DataError::Schema(format!("bad schema line `{line}`")))?;
            columns.push(ColumnSpec {
                name: name.trim().to_string(),
                kind: kind.parse()?,
            });
        }
        let target = target.ok_or_else(|| DataError::Schema("missing target= line".into()))?;
        Schema::new(columns, &target)
    }

    pub fn from_file(path: &Path) -> Result<Self, DataError> {
        let text = fs::read_to_string(path).map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Schema::parse_sidecar(&text)
    }

    pub fn to_sidecar(&self) -> String {
        let mut out = String::new();
        for c in &self.columns {
            out.push_str(&format!("{},{}\n", c.name, c.kind));
        }
        out.push_str(&format!("target={}\n", self.target_name()));
        out
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn target_index(&self) -> usize {
        self.target
    }

    pub fn target_name(&self) -> &str {
        &self.columns[self.target].name
    }

    /// Non-target columns in file order; position in this list is the feature index.
    pub fn features(&self) -> impl Iterator<Item = &ColumnSpec> {
        let target = self.target;
        self.columns
            .iter()
            .enumerate()
            .filter(move |(i, _)| *i != target)
            .map(|(_, c)| c)
    }

    pub fn feature_count(&self) -> usize {
        self.columns.len() - 1
    }

    pub fn categorical_count(&self) -> usize {
        self.features()
            .filter(|c| c.kind == ColumnKind::Categorical)
            .count()
    }
}

fn is_missing(cell: &str) -> bool {
    let cell = cell.trim();
    cell.is_empty() || cell == MISSING_CATEGORY
}

fn parse_finite(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn open_csv(path: &Path) -> Result<csv::Reader<fs::File>, DataError> {
    let file = fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file))
}

fn read_header(reader: &mut csv::Reader<fs::File>) -> Result<Vec<String>, DataError> {
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(DataError::EmptyFile);
    }
    Ok(header)
}

/// Infers column kinds: numeric iff every non-missing cell parses as a finite
/// real and at least one cell is present. The target is forced categorical.
pub fn infer_schema(path: &Path, target: &str) -> Result<Schema, DataError> {
    let mut reader = open_csv(path)?;
    let header = read_header(&mut reader)?;
    if !header.iter().any(|h| h == target) {
        return Err(DataError::TargetNotFound(target.to_string()));
    }
    let mut numeric = vec![true; header.len()];
    let mut present = vec![false; header.len()];
    for record in reader.records() {
        let record = record?;
        for (i, cell) in record.iter().enumerate().take(header.len()) {
            if is_missing(cell) {
                continue;
            }
            present[i] = true;
            if numeric[i] && parse_finite(cell).is_none() {
                numeric[i] = false;
            }
        }
    }
    let columns = header
        .into_iter()
        .enumerate()
        .map(|(i, name)| ColumnSpec {
            name,
            kind: if numeric[i] && present[i] {
                ColumnKind::Numeric
            } else {
                ColumnKind::Categorical
            },
        })
        .collect();
    Schema::new(columns, target)
}

/// Where the column kinds for [`load_csv`] come from.
#[derive(Debug, Clone)]
pub enum SchemaSource {
    Explicit(Schema),
    File(std::path::PathBuf),
    Infer { target: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Categorical {
        codes: Vec<u32>,
        values: Vec<String>,
    },
}

impl Column {
    pub fn kind(&self) -> ColumnKind {
        match self {
            Column::Numeric(_) => ColumnKind::Numeric,
            Column::Categorical { .. } => ColumnKind::Categorical,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub name: String,
    pub column: Column,
}

/// Rows dropped while loading.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropCounts {
    pub missing_target: usize,
    pub missing_numeric: usize,
}

impl DropCounts {
    pub fn total(&self) -> usize {
        self.missing_target + self.missing_numeric
    }
}

/// A loaded, column-major sample table.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    schema: Schema,
    features: Vec<Feature>,
    labels: Vec<u32>,
    class_labels: Vec<String>,
    dropped: DropCounts,
}

/// One cell of a sample presented for prediction.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    /// Dictionary code, or `None` for a value the dictionary has never seen.
    Cat(Option<u32>),
}

/// Feature access used by prediction.
pub trait Sample {
    fn numeric(&self, feature: usize) -> f64;
    fn category(&self, feature: usize) -> Option<u32>;
}

impl Sample for [Cell] {
    fn numeric(&self, feature: usize) -> f64 {
        match self[feature] {
            Cell::Num(v) => v,
            Cell::Cat(_) => f64::NAN,
        }
    }

    fn category(&self, feature: usize) -> Option<u32> {
        match self[feature] {
            Cell::Cat(c) => c,
            Cell::Num(_) => None,
        }
    }
}

/// A row of a [`Dataset`], borrowed in place.
#[derive(Debug, Clone, Copy)]
pub struct RowRef<'a> {
    data: &'a Dataset,
    row: usize,
}

impl Sample for RowRef<'_> {
    fn numeric(&self, feature: usize) -> f64 {
        match &self.data.features[feature].column {
            Column::Numeric(v) => v[self.row],
            Column::Categorical { .. } => f64::NAN,
        }
    }

    fn category(&self, feature: usize) -> Option<u32> {
        match &self.data.features[feature].column {
            Column::Categorical { codes, .. } => Some(codes[self.row]),
            Column::Numeric(_) => None,
        }
    }
}

impl Dataset {
    /// Builds a dataset from raw string records laid out as the schema's columns.
    ///
    /// Applies the missing-value policy: a missing target or numeric cell drops
    /// the row, a missing categorical cell becomes [`MISSING_CATEGORY`].
    pub fn from_records<I, R, S>(name: &str, schema: Schema, records: I) -> Result<Self, DataError>
    where
        I: IntoIterator<Item = R>,
        R: AsRef<[S]>,
        S: AsRef<str>,
    {
        let width = schema.columns.len();
        let target = schema.target;
        let mut numeric: Vec<Option<Vec<f64>>> = Vec::with_capacity(width);
        // Per categorical column: codes, values in first-appearance order, lookup.
        type Dictionary = (Vec<u32>, Vec<String>, HashMap<String, u32>);
        let mut dicts: Vec<Option<Dictionary>> = Vec::with_capacity(width);
        for (i, c) in schema.columns.iter().enumerate() {
            let categorical = i == target || c.kind == ColumnKind::Categorical;
            numeric.push((!categorical).then(Vec::new));
            dicts.push(categorical.then(|| (Vec::new(), Vec::new(), HashMap::new())));
        }

        let mut dropped = DropCounts::default();
        // header is line 1
        for (line, record) in (2u64..).zip(records) {
            let record = record.as_ref();
            if record.len() != width {
                return Err(DataError::RowLength {
                    line,
                    expected: width,
                    found: record.len(),
                });
            }
            if is_missing(record[target].as_ref()) {
                dropped.missing_target += 1;
                continue;
            }
            let mut parsed = Vec::with_capacity(width);
            let mut skip = false;
            for (i, cell) in record.iter().enumerate() {
                let cell = cell.as_ref().trim();
                if numeric[i].is_some() {
                    if is_missing(cell) {
                        skip = true;
                        parsed.push(f64::NAN);
                        continue;
                    }
                    let v = parse_finite(cell).ok_or_else(|| DataError::NumericParse {
                        column: schema.columns[i].name.clone(),
                        line,
                        value: cell.to_string(),
                    })?;
                    parsed.push(v);
                } else {
                    parsed.push(f64::NAN);
                }
            }
            if skip {
                dropped.missing_numeric += 1;
                continue;
            }
            for (i, cell) in record.iter().enumerate() {
                if let Some(col) = numeric[i].as_mut() {
                    col.push(parsed[i]);
                } else if let Some((codes, values, index)) = dicts[i].as_mut() {
                    let cell = cell.as_ref().trim();
                    let cell = if cell.is_empty() {
                        MISSING_CATEGORY
                    } else {
                        cell
                    };
                    let code = match index.get(cell) {
                        Some(&c) => c,
                        None => {
                            let c = values.len() as u32;
                            values.push(cell.to_string());
                            index.insert(cell.to_string(), c);
                            c
                        }
                    };
                    codes.push(code);
                }
            }
        }

        let mut features = Vec::with_capacity(width.saturating_sub(1));
        let mut labels = Vec::new();
        let mut class_labels = Vec::new();
        for (i, (num, dict)) in numeric.into_iter().zip(dicts).enumerate() {
            if i == target {
                let (codes, values, _) = dict.expect("target is categorical");
                labels = codes;
                class_labels = values;
                continue;
            }
            let column = match (num, dict) {
                (Some(v), _) => Column::Numeric(v),
                (None, Some((codes, values, _))) => Column::Categorical { codes, values },
                (None, None) => unreachable!(),
            };
            features.push(Feature {
                name: schema.columns[i].name.clone(),
                column,
            });
        }
        if labels.is_empty() {
            return Err(DataError::NoRows {
                dropped: dropped.total(),
            });
        }
        Ok(Dataset {
            name: name.to_string(),
            schema,
            features,
            labels,
            class_labels,
            dropped,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn feature(&self, index: usize) -> Option<&Feature> {
        self.features.get(index)
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn class_labels(&self) -> &[String] {
        &self.class_labels
    }

    pub fn n_classes(&self) -> usize {
        self.class_labels.len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dropped(&self) -> DropCounts {
        self.dropped
    }

    pub fn row(&self, row: usize) -> RowRef<'_> {
        RowRef { data: self, row }
    }

    pub fn view(&self) -> NodeView<'_> {
        NodeView {
            data: self,
            rows: (0..self.len()).collect(),
        }
    }

    /// View over the given rows. Panics if an index is out of bounds.
    pub fn view_of(&self, rows: Vec<usize>) -> NodeView<'_> {
        assert!(
            rows.iter().all(|&r| r < self.len()),
            "row index out of bounds"
        );
        NodeView { data: self, rows }
    }
}

/// Reads a CSV file (comma separated, double-quote escaping, header row;
/// `?` and empty cells are missing).
pub fn load_csv(path: &Path, source: &SchemaSource) -> Result<Dataset, DataError> {
    let schema = match source {
        SchemaSource::Explicit(s) => s.clone(),
        SchemaSource::File(p) => Schema::from_file(p)?,
        SchemaSource::Infer { target } => infer_schema(path, target)?,
    };
    let mut reader = open_csv(path)?;
    let header = read_header(&mut reader)?;
    let declared: Vec<&str> = schema.columns.iter().map(|c| c.name.as_str()).collect();
    if header.len() != declared.len() || header.iter().zip(&declared).any(|(h, d)| h != d) {
        return Err(DataError::Schema(format!(
            "header [{}] does not match schema columns [{}]",
            header.join(","),
            declared.join(",")
        )));
    }
    let records = reader
        .records()
        .collect::<Result<Vec<csv::StringRecord>, csv::Error>>()?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Dataset::from_records(
        &name,
        schema,
        records.iter().map(|r| r.iter().collect::<Vec<_>>()),
    )
}

/// Per-class counts over a set of rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassHistogram {
    pub counts: Vec<u64>,
    pub total: u64,
}

impl ClassHistogram {
    pub fn zeros(n_classes: usize) -> Self {
        ClassHistogram {
            counts: vec![0; n_classes],
            total: 0,
        }
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        ClassHistogram { counts, total }
    }

    pub fn add(&mut self, class: u32) {
        self.counts[class as usize] += 1;
        self.total += 1;
    }

    pub fn merge(&mut self, other: &ClassHistogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
    }

    /// Argmax class; ties go to the lowest class index.
    pub fn majority(&self) -> u32 {
        let mut best = 0;
        for (k, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = k;
            }
        }
        best as u32
    }

    pub fn is_pure(&self) -> bool {
        self.counts.iter().filter(|&&c| c > 0).count() <= 1
    }

    /// Samples not of the majority class.
    pub fn errors(&self) -> u64 {
        self.total
            - self
                .counts
                .get(self.majority() as usize)
                .copied()
                .unwrap_or(0)
    }

    pub fn proportions(&self) -> Vec<f64> {
        let n = self.total as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

/// An index subset of a dataset, the sample set at one tree node.
#[derive(Debug, Clone)]
pub struct NodeView<'a> {
    data: &'a Dataset,
    rows: Vec<usize>,
}

impl<'a> NodeView<'a> {
    pub fn dataset(&self) -> &'a Dataset {
        self.data
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn class_histogram(&self) -> Result<ClassHistogram, DataError> {
        if self.rows.is_empty() {
            return Err(DataError::EmptyView);
        }
        Ok(self.histogram_unchecked())
    }

    /// Histogram that tolerates an empty view (all zeros).
    pub(crate) fn histogram_unchecked(&self) -> ClassHistogram {
        let labels = self.data.labels();
        let mut h = ClassHistogram::zeros(self.data.n_classes());
        for &r in &self.rows {
            h.add(labels[r]);
        }
        h
    }

    /// Splits the view by `rule`. Numeric rules give `[<= t, > t]`; fan-out
    /// rules give one child per listed category, in rule order. Rows whose
    /// category is not listed are not routed anywhere, so callers build
    /// fan-outs from [`crate::splitter::categorical_candidate`].
    pub fn partition(&self, rule: &SplitRule) -> Result<Vec<NodeView<'a>>, DataError> {
        let feature = self
            .data
            .feature(rule.feature)
            .ok_or(DataError::UnknownFeature(rule.feature))?;
        let wrong_kind = |expected| DataError::WrongKind {
            feature: feature.name.clone(),
            expected,
            actual: feature.column.kind(),
        };
        match (&rule.kind, &feature.column) {
            (RuleKind::Threshold(t), Column::Numeric(values)) => {
                let (left, right) = self.rows.iter().partition(|&&r| values[r] <= *t);
                Ok(vec![self.child(left), self.child(right)])
            }
            (RuleKind::Fanout(branches), Column::Categorical { codes, values }) => {
                let mut slot = vec![usize::MAX; values.len()];
                for (b, &code) in branches.iter().enumerate() {
                    slot[code as usize] = b;
                }
                let mut children = vec![Vec::new(); branches.len()];
                for &r in &self.rows {
                    let b = slot[codes[r] as usize];
                    if b != usize::MAX {
                        children[b].push(r);
                    }
                }
                Ok(children.into_iter().map(|rows| self.child(rows)).collect())
            }
            (RuleKind::Threshold(_), _) => Err(wrong_kind(ColumnKind::Numeric)),
            (RuleKind::Fanout(_), _) => Err(wrong_kind(ColumnKind::Categorical)),
        }
    }

    fn child(&self, rows: Vec<usize>) -> NodeView<'a> {
        NodeView {
            data: self.data,
            rows,
        }
    }
}
