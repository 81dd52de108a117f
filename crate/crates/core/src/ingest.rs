//! Dataset loading, feature type inference and standardization.
//!
//! Two on-disk formats are understood:
//!
//! * CSV with a header row and the label in the last column. Empty cells
//!   (and `?`) are missing values.
//! * LIBSVM `<label> <idx>:<val> ...` with 0- or 1-based indices. The base is
//!   detected per file: if index 0 appears anywhere the file is 0-based.
//!   Absent indices are missing values.
//!
//! Binary labels are canonicalized to [`Label::Neg`] / [`Label::Pos`] by value
//! order, so `{0, 1}`, `{2, 4}` or `{b, g}` all map smaller to `-1`.

use std::cmp::Ordering;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Levels above this count are treated as continuous unless overridden.
pub const DEFAULT_ORDINAL_MAX_LEVELS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "-1")]
    Neg,
    #[serde(rename = "+1")]
    Pos,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Neg => -1.0,
            Label::Pos => 1.0,
        }
    }

    /// Sign of a margin with the zero tie going to `+1`.
    pub fn from_margin(margin: f64) -> Label {
        if margin >= 0.0 {
            Label::Pos
        } else {
            Label::Neg
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Neg => Label::Pos,
            Label::Pos => Label::Neg,
        }
    }

    pub fn parse_signed(s: &str) -> Option<Label> {
        match s.trim() {
            "-1" => Some(Label::Neg),
            "+1" | "1" => Some(Label::Pos),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Neg => f.write_str("-1"),
            Label::Pos => f.write_str("+1"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataFormat {
    #[serde(rename = "csv")]
    Csv,
    #[serde(rename = "libsvm")]
    Libsvm,
}

impl DataFormat {
    /// Guess from the file extension; anything that is not `.csv` is LIBSVM.
    pub fn from_path(path: &Path) -> DataFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => DataFormat::Csv,
            _ => DataFormat::Libsvm,
        }
    }
}

/// One raw row: observed `(feature, value)` pairs sorted by feature id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub features: Vec<(usize, f64)>,
    pub label: Label,
}

impl Record {
    pub fn get(&self, feature: usize) -> Option<f64> {
        self.features
            .binary_search_by_key(&feature, |&(j, _)| j)
            .ok()
            .map(|i| self.features[i].1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    Continuous,
    Ordinal { levels: usize },
    Binary,
}

impl FeatureKind {
    pub fn is_continuous(self) -> bool {
        matches!(self, FeatureKind::Continuous)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub id: usize,
    pub kind: FeatureKind,
    /// Sorted distinct raw values for ordinal and binary features; the
    /// position in this list is the level index. Empty for continuous.
    pub level_values: Vec<f64>,
}

impl FeatureSpec {
    pub fn level_count(&self) -> usize {
        self.level_values.len()
    }

    pub fn level_index(&self, value: f64) -> Option<usize> {
        self.level_values
            .binary_search_by(|v| v.total_cmp(&value))
            .ok()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TypedSchema {
    pub features: Vec<FeatureSpec>,
}

impl TypedSchema {
    pub fn dim(&self) -> usize {
        self.features.len()
    }

    pub fn kind(&self, feature: usize) -> Option<FeatureKind> {
        self.features.get(feature).map(|f| f.kind)
    }

    /// Schema where every one of `d` features is continuous.
    pub fn all_continuous(d: usize) -> TypedSchema {
        TypedSchema {
            features: (0..d)
                .map(|id| FeatureSpec {
                    id,
                    kind: FeatureKind::Continuous,
                    level_values: Vec::new(),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub feature_names: Vec<String>,
    pub records: Vec<Record>,
    /// Raw label strings for `[Neg, Pos]`, kept so a dataset can be written
    /// back in its original encoding.
    pub label_names: [String; 2],
    pub schema: Option<TypedSchema>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.records.len()
    }

    pub fn d(&self) -> usize {
        self.feature_names.len()
    }

    /// Build a dataset from in-memory rows. Labels must already be
    /// canonical.
    pub fn from_records(
        name: impl Into<String>,
        d: usize,
        records: Vec<Record>,
    ) -> Result<Dataset> {
        for (i, r) in records.iter().enumerate() {
            if r.features.is_empty() {
                return Err(Error::Schema(format!("record {i} has no observed features")));
            }
            if r.features.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(Error::Schema(format!("record {i} features not strictly sorted")));
            }
            if let Some(&(j, _)) = r.features.iter().find(|(j, _)| *j >= d) {
                return Err(Error::Schema(format!("record {i} references feature {j} >= d = {d}")));
            }
            if r.features.iter().any(|(_, v)| !v.is_finite()) {
                return Err(Error::Schema(format!("record {i} has a non-finite value")));
            }
        }
        Ok(Dataset {
            name: name.into(),
            feature_names: (0..d).map(|j| format!("f{j}")).collect(),
            records,
            label_names: ["-1".to_string(), "1".to_string()],
            schema: None,
        })
    }

    pub fn with_schema(mut self, schema: TypedSchema) -> Dataset {
        self.schema = Some(schema);
        self
    }

    pub fn require_schema(&self) -> Result<&TypedSchema> {
        self.schema
            .as_ref()
            .ok_or_else(|| Error::Schema(format!("dataset {} has no inferred schema", self.name)))
    }
}

pub fn parse_dataset(path: &Path, format: DataFormat) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string();
    let display = path.display().to_string();
    match format {
        DataFormat::Csv => parse_csv_str(&text, &name, &display),
        DataFormat::Libsvm => parse_libsvm_str(&text, &name, &display),
    }
}

fn parse_error(path: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        msg: msg.into(),
    }
}

fn parse_value(cell: &str) -> std::result::Result<Option<f64>, String> {
    let cell = cell.trim();
    if cell.is_empty() || cell == "?" {
        return Ok(None);
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        Ok(_) => Err(format!("non-finite value {cell:?}")),
        Err(_) => Err(format!("cannot parse {cell:?} as a number")),
    }
}

pub(crate) fn parse_csv_str(text: &str, name: &str, path: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.len() < 2 {
        return Err(parse_error(path, 1, "header needs at least one feature and a label column"));
    }
    let d = header.len() - 1;
    let mut rows = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        if row.len() != header.len() {
            return Err(parse_error(
                path,
                line,
                format!("expected {} fields, found {}", header.len(), row.len()),
            ));
        }
        let mut features = Vec::new();
        for (j, cell) in row.iter().take(d).enumerate() {
            match parse_value(cell) {
                Ok(Some(v)) => features.push((j, v)),
                Ok(None) => {}
                Err(msg) => return Err(parse_error(path, line, format!("column {j}: {msg}"))),
            }
        }
        let label = row[d].trim();
        if label.is_empty() {
            return Err(parse_error(path, line, "missing label"));
        }
        if features.is_empty() {
            return Err(parse_error(path, line, "record has no observed features"));
        }
        rows.push((line, features, label.to_string()));
    }
    let feature_names = header[..d].to_vec();
    finish(name, feature_names, rows)
}

pub(crate) fn parse_libsvm_str(text: &str, name: &str, path: &str) -> Result<Dataset> {
    let mut rows = Vec::new();
    let mut min_index = usize::MAX;
    let mut max_index = 0usize;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label = tokens.next().unwrap_or_default().to_string();
        let mut features = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_error(path, line, format!("token {tok:?} is not idx:val")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_error(path, line, format!("bad feature index {idx:?}")))?;
            let val = match parse_value(val) {
                Ok(Some(v)) => v,
                Ok(None) => continue,
                Err(msg) => return Err(parse_error(path, line, msg)),
            };
            features.push((idx, val));
        }
        features.sort_by_key(|&(j, _)| j);
        if features.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(parse_error(path, line, "duplicate feature index"));
        }
        if features.is_empty() {
            return Err(parse_error(path, line, "record has no observed features"));
        }
        min_index = min_index.min(features[0].0);
        max_index = max_index.max(features[features.len() - 1].0);
        rows.push((line, features, label));
    }
    if rows.is_empty() {
        return Err(parse_error(path, 0, "no records"));
    }
    let offset = usize::from(min_index > 0);
    for (_, features, _) in &mut rows {
        for (j, _) in features.iter_mut() {
            *j -= offset;
        }
    }
    let d = max_index + 1 - offset;
    let feature_names = (0..d).map(|j| format!("f{j}")).collect();
    finish(name, feature_names, rows)
}

fn compare_label_names(a: &str, b: &str) -> Ordering {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y),
        _ => a.cmp(b),
    }
}

fn finish(
    name: &str,
    feature_names: Vec<String>,
    rows: Vec<(usize, Vec<(usize, f64)>, String)>,
) -> Result<Dataset> {
    let mut distinct: Vec<&str> = rows.iter().map(|(_, _, l)| l.as_str()).collect();
    distinct.sort_by(|a, b| compare_label_names(a, b));
    distinct.dedup_by(|a, b| compare_label_names(a, b) == Ordering::Equal);
    let label_names: [String; 2] = match distinct.as_slice() {
        [only] => {
            // A single class still needs a side; non-positive numbers go negative.
            let neg = only.parse::<f64>().map(|v| v <= 0.0).unwrap_or(false);
            if neg {
                [only.to_string(), String::new()]
            } else {
                [String::new(), only.to_string()]
            }
        }
        [lo, hi] => [lo.to_string(), hi.to_string()],
        more => {
            return Err(Error::UnsupportedTask(format!(
                "{name}: {} distinct label values ({}), only binary classification is supported",
                more.len(),
                more.iter().take(5).cloned().collect::<Vec<_>>().join(", ")
            )))
        }
    };
    let records = rows
        .into_iter()
        .map(|(_, features, l)| {
            let label = if compare_label_names(&l, &label_names[1]) == Ordering::Equal
                && !label_names[1].is_empty()
            {
                Label::Pos
            } else {
                Label::Neg
            };
            Record { features, label }
        })
        .collect();
    Ok(Dataset {
        name: name.to_string(),
        feature_names,
        records,
        label_names,
        schema: None,
    })
}

fn label_name(dataset: &Dataset, label: Label) -> String {
    let raw = match label {
        Label::Neg => &dataset.label_names[0],
        Label::Pos => &dataset.label_names[1],
    };
    if raw.is_empty() {
        label.to_string()
    } else {
        raw.clone()
    }
}

/// Write a dataset as CSV in the format [`parse_dataset`] reads.
pub fn write_csv(dataset: &Dataset, out: &mut impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = dataset.feature_names.clone();
    header.push("label".to_string());
    w.write_record(&header)?;
    let d = dataset.d();
    for r in &dataset.records {
        let mut cells = vec![String::new(); d + 1];
        for &(j, v) in &r.features {
            cells[j] = v.to_string();
        }
        cells[d] = label_name(dataset, r.label);
        w.write_record(&cells)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Write a dataset in 1-based LIBSVM format.
pub fn write_libsvm(dataset: &Dataset, out: &mut impl Write) -> Result<()> {
    for r in &dataset.records {
        let mut line = label_name(dataset, r.label);
        for &(j, v) in &r.features {
            line.push_str(&format!(" {}:{}", j + 1, v));
        }
        writeln!(out, "{line}").map_err(|e| Error::io("<libsvm writer>", e))?;
    }
    Ok(())
}

fn distinct_values(dataset: &Dataset) -> Vec<Vec<f64>> {
    let mut values = vec![Vec::new(); dataset.d()];
    for r in &dataset.records {
        for &(j, v) in &r.features {
            values[j].push(v);
        }
    }
    for v in &mut values {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    values
}

/// Classify each feature as binary, ordinal or continuous.
///
/// At most two distinct values is binary; at most `ordinal_max_levels`
/// integer-valued distinct values is ordinal; anything else is continuous.
pub fn infer_feature_types(dataset: &Dataset, ordinal_max_levels: usize) -> Result<TypedSchema> {
    if ordinal_max_levels < 2 {
        return Err(Error::Config(format!(
            "ordinal_max_levels must be >= 2, got {ordinal_max_levels}"
        )));
    }
    let values = distinct_values(dataset);
    let empty: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_empty())
        .map(|(j, _)| j)
        .collect();
    if !empty.is_empty() {
        return Err(Error::Schema(format!(
            "features with no observed values: {empty:?}"
        )));
    }
    let features = values
        .into_iter()
        .enumerate()
        .map(|(id, levels)| {
            if levels.len() <= 2 {
                FeatureSpec {
                    id,
                    kind: FeatureKind::Binary,
                    level_values: levels,
                }
            } else if levels.len() <= ordinal_max_levels && levels.iter().all(|v| v.fract() == 0.0) {
                FeatureSpec {
                    id,
                    kind: FeatureKind::Ordinal {
                        levels: levels.len(),
                    },
                    level_values: levels,
                }
            } else {
                FeatureSpec {
                    id,
                    kind: FeatureKind::Continuous,
                    level_values: Vec::new(),
                }
            }
        })
        .collect();
    Ok(TypedSchema { features })
}

/// Z-score continuous features over the whole dataset and re-encode ordinal
/// and binary features as level indices `0..L`.
///
/// Constant continuous features become all zeros. The returned dataset
/// carries the schema with its level values rewritten to the indices, so
/// standardizing twice is a no-op.
pub fn standardize(dataset: &Dataset, schema: &TypedSchema) -> Result<Dataset> {
    if schema.dim() != dataset.d() {
        return Err(Error::Dimension {
            expected: dataset.d(),
            got: schema.dim(),
        });
    }
    let d = dataset.d();
    let mut sum = vec![0.0; d];
    let mut count = vec![0usize; d];
    for r in &dataset.records {
        for &(j, v) in &r.features {
            sum[j] += v;
            count[j] += 1;
        }
    }
    let mean: Vec<f64> = sum
        .iter()
        .zip(&count)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let mut sq = vec![0.0; d];
    for r in &dataset.records {
        for &(j, v) in &r.features {
            sq[j] += (v - mean[j]).powi(2);
        }
    }
    let sd: Vec<f64> = sq
        .iter()
        .zip(&count)
        .map(|(s, &c)| if c > 0 { (s / c as f64).sqrt() } else { 0.0 })
        .collect();

    let mut records = Vec::with_capacity(dataset.n());
    for (i, r) in dataset.records.iter().enumerate() {
        let mut features = Vec::with_capacity(r.features.len());
        for &(j, v) in &r.features {
            let spec = &schema.features[j];
            let out = match spec.kind {
                FeatureKind::Continuous => {
                    if sd[j] <= 1e-12 * mean[j].abs().max(1.0) {
                        0.0
                    } else {
                        (v - mean[j]) / sd[j]
                    }
                }
                FeatureKind::Ordinal { .. } | FeatureKind::Binary => {
                    spec.level_index(v).ok_or_else(|| {
                        Error::Schema(format!(
                            "record {i}: value {v} is not a level of feature {j}"
                        ))
                    })? as f64
                }
            };
            features.push((j, out));
        }
        records.push(Record {
            features,
            label: r.label,
        });
    }
    let schema = TypedSchema {
        features: schema
            .features
            .iter()
            .map(|f| FeatureSpec {
                id: f.id,
                kind: f.kind,
                level_values: (0..f.level_count()).map(|l| l as f64).collect(),
            })
            .collect(),
    };
    Ok(Dataset {
        name: dataset.name.clone(),
        feature_names: dataset.feature_names.clone(),
        records,
        label_names: dataset.label_names.clone(),
        schema: Some(schema),
    })
}

/// Parse, infer types and standardize in one go.
pub fn load_prepared(path: &Path, format: DataFormat, ordinal_max_levels: usize) -> Result<Dataset> {
    let raw = parse_dataset(path, format)?;
    let schema = infer_feature_types(&raw, ordinal_max_levels)?;
    standardize(&raw, &schema)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn csv(text: &str) -> Result<Dataset> {
        parse_csv_str(text, "t", "t.csv")
    }

    #[test]
    fn libsvm_line_semantics() {
        let ds = parse_libsvm_str("1 3:0.5 7:1\n-1 0:2\n", "t", "t.svm").unwrap();
        assert_eq!(ds.records[0].label, Label::Pos);
        assert_eq!(ds.records[0].features, vec![(3, 0.5), (7, 1.0)]);
        assert_eq!(ds.d(), 8);
    }

    #[test]
    fn libsvm_one_based_detected() {
        let ds = parse_libsvm_str("+1 1:0.5 3:1\n-1 2:2\n", "t", "t.svm").unwrap();
        assert_eq!(ds.d(), 3);
        assert_eq!(ds.records[0].features, vec![(0, 0.5), (2, 1.0)]);
    }

    #[test]
    fn csv_zero_one_labels_canonicalized() {
        let ds = csv("a,b,y\n1,2,0\n3,4,1\n5,,0\n").unwrap();
        let labels: Vec<_> = ds.records.iter().map(|r| r.label).collect();
        assert_eq!(labels, vec![Label::Neg, Label::Pos, Label::Neg]);
        assert_eq!(ds.records[2].features, vec![(0, 5.0)]);
    }

    #[test]
    fn labels_by_value_order_not_lexical() {
        let ds = csv("a,y\n1,10\n2,9\n").unwrap();
        assert_eq!(ds.records[0].label, Label::Pos);
        assert_eq!(ds.records[1].label, Label::Neg);
        let ds = csv("a,y\n1,g\n2,b\n").unwrap();
        assert_eq!(ds.records[0].label, Label::Pos);
    }

    #[test]
    fn three_labels_rejected() {
        let err = csv("a,y\n1,0\n2,1\n3,2\n").unwrap_err();
        assert!(matches!(err, Error::UnsupportedTask(_)), "{err}");
    }

    #[test]
    fn malformed_line_names_line_number() {
        let err = csv("a,b,y\n1,2,0\n1,x,1\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
        let err = parse_libsvm_str("1 1:2\n1 oops\n", "t", "t").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn infer_rules() {
        let mut text = String::from("bin,ord,cont,y\n");
        for i in 0..198 {
            text.push_str(&format!("{},{},{},{}\n", i % 2, 1 + i % 5, i as f64 * 0.37 + 0.01, i % 2));
        }
        let ds = csv(&text).unwrap();
        let schema = infer_feature_types(&ds, 10).unwrap();
        assert_eq!(schema.features[0].kind, FeatureKind::Binary);
        assert_eq!(schema.features[1].kind, FeatureKind::Ordinal { levels: 5 });
        assert_eq!(schema.features[2].kind, FeatureKind::Continuous);
    }

    #[test]
    fn infer_reports_unobserved_features() {
        let ds = csv("a,b,c,y\n1,,2,0\n2,,3,1\n").unwrap();
        match infer_feature_types(&ds, 20) {
            Err(Error::Schema(msg)) => assert!(msg.contains("[1]"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn standardize_examples() {
        let ds = csv("c,k,x,y\n3,-1,0,0\n3,1,2,1\n").unwrap();
        let schema = TypedSchema {
            features: vec![
                FeatureSpec { id: 0, kind: FeatureKind::Continuous, level_values: vec![] },
                FeatureSpec { id: 1, kind: FeatureKind::Binary, level_values: vec![-1.0, 1.0] },
                FeatureSpec { id: 2, kind: FeatureKind::Continuous, level_values: vec![] },
            ],
        };
        let s = standardize(&ds, &schema).unwrap();
        assert_eq!(s.records[0].features, vec![(0, 0.0), (1, 0.0), (2, -1.0)]);
        assert_eq!(s.records[1].features, vec![(0, 0.0), (1, 1.0), (2, 1.0)]);
        let again = standardize(&s, s.schema.as_ref().unwrap()).unwrap();
        assert_eq!(again.records, s.records);
    }

    fn arb_dataset() -> impl Strategy<Value = Dataset> {
        (1usize..6, 1usize..25).prop_flat_map(|(d, n)| {
            let row = (
                proptest::collection::vec(proptest::option::of(-1e6f64..1e6), d),
                any::<bool>(),
            );
            proptest::collection::vec(row, n).prop_map(move |rows| {
                let records = rows
                    .into_iter()
                    .map(|(vals, pos)| {
                        let mut features: Vec<(usize, f64)> = vals
                            .into_iter()
                            .enumerate()
                            .filter_map(|(j, v)| v.map(|v| (j, v)))
                            .collect();
                        if features.is_empty() {
                            features.push((0, 0.25));
                        }
                        Record { features, label: if pos { Label::Pos } else { Label::Neg } }
                    })
                    .collect();
                Dataset::from_records("prop", d, records).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn csv_round_trip(ds in arb_dataset()) {
            let mut buf = Vec::new();
            write_csv(&ds, &mut buf).unwrap();
            let back = csv(std::str::from_utf8(&buf).unwrap()).unwrap();
            prop_assert_eq!(&back.records, &ds.records);
            let mut again = Vec::new();
            write_csv(&back, &mut again).unwrap();
            prop_assert_eq!(buf, again);
        }

        #[test]
        fn inference_is_order_independent(ds in arb_dataset(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = ds.clone();
            shuffled.records.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = infer_feature_types(&ds, 20);
            let b = infer_feature_types(&shuffled, 20);
            prop_assert_eq!(a.ok(), b.ok());
        }

        #[test]
        fn standardized_moments(ds in arb_dataset()) {
            let Ok(schema) = infer_feature_types(&ds, 20) else { return Ok(()) };
            let s = standardize(&ds, &schema).unwrap();
            for spec in schema.features.iter().filter(|f| f.kind.is_continuous()) {
                let vals: Vec<f64> = s.records.iter().filter_map(|r| r.get(spec.id)).collect();
                let n = vals.len() as f64;
                let mean = vals.iter().sum::<f64>() / n;
                let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
                if vals.iter().all(|&v| v == 0.0) {
                    continue;
                }
                prop_assert!(mean.abs() < 1e-9, "mean {}", mean);
                prop_assert!((sd - 1.0).abs() < 1e-9, "sd {}", sd);
            }
        }
    }
}
