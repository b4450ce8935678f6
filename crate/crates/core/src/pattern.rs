//! Partially specified correlation matrices and their file formats.
//!
//! Two text formats are understood:
//!
//! * JSON: `{"labels": [...], "entries": [{"row": "a", "col": "b", "value": 0.5}, ...]}`.
//!   A missing pair is unspecified. Diagonal entries may appear but must be
//!   exactly `1`.
//! * CSV: a label header row and a label column; an empty cell is
//!   unspecified, mirrored cells must agree, diagonal cells are `1` or empty.
//!
//! Numbers are written in shortest round-trip form, so parsing a serialized
//! matrix reproduces every entry bit for bit.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// Name of a stochastic variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Label(String);

impl Label {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(Error::invalid("labels must be non-empty"));
        }
        if name.trim() != name {
            return Err(Error::invalid(format!(
                "label {name:?} has leading or trailing whitespace"
            )));
        }
        if name.contains([',', '\n', '\r']) {
            return Err(Error::invalid(format!(
                "label {name:?} contains a comma or line break"
            )));
        }
        Ok(Self(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Label::new(s)
    }
}

/// Matrix text format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::invalid(format!("unknown format {other:?}"))),
        }
    }
}

fn check_labels(labels: &[Label]) -> Result<HashMap<&str, usize>> {
    if labels.is_empty() {
        return Err(Error::invalid("a matrix needs at least one label"));
    }
    let mut index = HashMap::with_capacity(labels.len());
    for (i, l) in labels.iter().enumerate() {
        if index.insert(l.as_str(), i).is_some() {
            return Err(Error::invalid(format!("duplicate label {l}")));
        }
    }
    Ok(index)
}

fn check_coefficient(v: f64, a: &Label, b: &Label) -> Result<()> {
    if !v.is_finite() || v.abs() >= 1.0 {
        return Err(Error::invalid(format!(
            "coefficient ({a}, {b}) = {v} must lie strictly between -1 and 1"
        )));
    }
    Ok(())
}

/// Orders an index pair as `(min, max)`.
pub fn pair(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

/// Correlation matrix with a subset of its off-diagonal entries specified.
///
/// The diagonal is implicitly one and never stored. Specified entries are
/// keyed by unordered index pairs, stored as `(i, j)` with `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialMatrix {
    labels: Vec<Label>,
    specified: BTreeMap<(usize, usize), f64>,
}

impl PartialMatrix {
    pub fn new(labels: Vec<Label>) -> Result<Self> {
        check_labels(&labels)?;
        Ok(Self {
            labels,
            specified: BTreeMap::new(),
        })
    }

    /// Builds from `(i, j, value)` triples over label indices.
    pub fn from_entries(
        labels: Vec<Label>,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut m = Self::new(labels)?;
        for (i, j, v) in entries {
            m.insert(i, j, v)?;
        }
        Ok(m)
    }

    /// Specifies entry `{i, j}`. Rejects diagonal pairs, out-of-range
    /// indices, `|v| >= 1` and pairs that are already specified.
    pub fn insert(&mut self, i: usize, j: usize, v: f64) -> Result<()> {
        let n = self.labels.len();
        if i >= n || j >= n {
            return Err(Error::invalid(format!("index pair ({i}, {j}) out of range for n = {n}")));
        }
        if i == j {
            return Err(Error::invalid(format!(
                "diagonal entry for {} cannot be specified",
                self.labels[i]
            )));
        }
        check_coefficient(v, &self.labels[i], &self.labels[j])?;
        let key = pair(i, j);
        if self.specified.contains_key(&key) {
            return Err(Error::invalid(format!(
                "pair ({}, {}) specified twice",
                self.labels[key.0], self.labels[key.1]
            )));
        }
        self.specified.insert(key, v);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label_index(&self, name: &str) -> Option<usize> {
        self.labels.iter().position(|l| l.as_str() == name)
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        if i == j {
            return Some(1.0);
        }
        self.specified.get(&pair(i, j)).copied()
    }

    pub fn is_specified(&self, i: usize, j: usize) -> bool {
        i == j || self.specified.contains_key(&pair(i, j))
    }

    /// Specified off-diagonal entries as `((i, j), value)` with `i < j`, in
    /// row-major order.
    pub fn specified(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.specified.iter().map(|(&k, &v)| (k, v))
    }

    pub fn specified_count(&self) -> usize {
        self.specified.len()
    }

    /// Unspecified off-diagonal pairs `(i, j)`, `i < j`, row-major.
    pub fn unspecified(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if !self.specified.contains_key(&(i, j)) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Principal block on `idx`; every pair in `idx` must be specified.
    pub fn block(&self, idx: &[usize]) -> Option<SymMatrix> {
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                if !self.is_specified(i, j) {
                    return None;
                }
            }
        }
        Some(SymMatrix::from_upper(idx.len(), |a, b| {
            self.get(idx[a], idx[b]).unwrap_or(f64::NAN)
        }))
    }

    /// Converts a fully specified matrix to dense form.
    pub fn to_dense(&self) -> Result<DenseCorrMatrix> {
        if let Some(&(i, j)) = self.unspecified().first() {
            return Err(Error::invalid(format!(
                "matrix is not fully specified: ({}, {}) is missing",
                self.labels[i], self.labels[j]
            )));
        }
        let values = SymMatrix::from_upper(self.n(), |i, j| self.get(i, j).unwrap_or(f64::NAN));
        DenseCorrMatrix::new(self.labels.clone(), values)
    }
}

/// Fully specified symmetric unit-diagonal matrix.
///
/// Positive definiteness is not checked here; see [`crate::verify`].
#[derive(Debug, Clone, PartialEq)]
pub struct DenseCorrMatrix {
    labels: Vec<Label>,
    values: SymMatrix,
}

impl DenseCorrMatrix {
    pub fn new(labels: Vec<Label>, values: SymMatrix) -> Result<Self> {
        check_labels(&labels)?;
        if values.dim() != labels.len() {
            return Err(Error::invalid(format!(
                "{} labels for a {}x{} matrix",
                labels.len(),
                values.dim(),
                values.dim()
            )));
        }
        for i in 0..values.dim() {
            if values.get(i, i) != 1.0 {
                return Err(Error::invalid(format!(
                    "diagonal entry for {} is {}, expected 1",
                    labels[i],
                    values.get(i, i)
                )));
            }
            for j in (i + 1)..values.dim() {
                if !values.get(i, j).is_finite() {
                    return Err(Error::invalid(format!(
                        "entry ({}, {}) is not finite",
                        labels[i], labels[j]
                    )));
                }
            }
        }
        Ok(Self { labels, values })
    }

    pub fn identity(labels: Vec<Label>) -> Result<Self> {
        let n = labels.len();
        Self::new(labels, SymMatrix::identity(n))
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label_index(&self, name: &str) -> Option<usize> {
        self.labels.iter().position(|l| l.as_str() == name)
    }

    pub fn values(&self) -> &SymMatrix {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values.get(i, j)
    }

    /// Looks an entry up by label names.
    pub fn get_by_label(&self, a: &str, b: &str) -> Option<f64> {
        Some(self.get(self.label_index(a)?, self.label_index(b)?))
    }

    /// Returns a copy with entry `{i, j}` replaced. Useful for perturbation
    /// experiments.
    pub fn with_entry(&self, i: usize, j: usize, v: f64) -> Result<Self> {
        if i == j {
            return Err(Error::invalid("diagonal entries are fixed at 1"));
        }
        let mut values = self.values.clone();
        values.set(i, j, v);
        Self::new(self.labels.clone(), values)
    }

    /// Views the matrix as a partial matrix with every pair specified.
    pub fn to_partial(&self) -> Result<PartialMatrix> {
        let n = self.n();
        let entries = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j)));
        PartialMatrix::from_entries(
            self.labels.clone(),
            entries.map(|(i, j)| (i, j, self.get(i, j))).collect::<Vec<_>>(),
        )
    }
}

#[derive(Serialize, Deserialize)]
struct JsonEntry {
    row: String,
    col: String,
    value: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonMatrix {
    labels: Vec<String>,
    #[serde(default)]
    entries: Vec<JsonEntry>,
}

fn to_labels(names: Vec<String>) -> Result<Vec<Label>> {
    names.into_iter().map(Label::new).collect()
}

fn parse_json(text: &str) -> Result<PartialMatrix> {
    let doc: JsonMatrix =
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("malformed JSON: {e}")))?;
    let labels = to_labels(doc.labels)?;
    let index: HashMap<String, usize> = check_labels(&labels)?
        .into_iter()
        .map(|(k, v)| (k.to_owned(), v))
        .collect();
    let mut m = PartialMatrix::new(labels)?;
    let lookup = |name: &str| {
        index
            .get(name)
            .copied()
            .ok_or_else(|| Error::invalid(format!("entry refers to unknown label {name:?}")))
    };
    for e in doc.entries {
        let i = lookup(&e.row)?;
        let j = lookup(&e.col)?;
        if i == j {
            if e.value != 1.0 {
                return Err(Error::invalid(format!(
                    "diagonal entry for {} must be 1, got {}",
                    e.row, e.value
                )));
            }
            continue;
        }
        match m.get(i, j) {
            Some(prev) if prev == e.value => {}
            Some(prev) => {
                return Err(Error::invalid(format!(
                    "pair ({}, {}) given conflicting values {prev} and {}",
                    e.row, e.col, e.value
                )))
            }
            None => m.insert(i, j, e.value)?,
        }
    }
    Ok(m)
}

fn parse_cell(cell: &str, row: usize, col: usize) -> Result<Option<f64>> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse::<f64>().map(Some).map_err(|_| {
        Error::invalid(format!("CSV cell at row {row}, column {col} is not a number: {cell:?}"))
    })
}

// grid[i][j] and grid[j][i] are read together, so plain index loops read best
#[allow(clippy::needless_range_loop)]
fn parse_csv(text: &str) -> Result<PartialMatrix> {
    let mut lines = text
        .lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::invalid("empty CSV input"))?;
    let names: Vec<String> = header.split(',').skip(1).map(|s| s.trim().to_owned()).collect();
    let labels = to_labels(names)?;
    check_labels(&labels)?;
    let n = labels.len();

    let mut grid: Vec<Vec<Option<f64>>> = Vec::with_capacity(n);
    for (r, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != n + 1 {
            return Err(Error::invalid(format!(
                "CSV row {} has {} cells, expected {}",
                r + 2,
                cells.len(),
                n + 1
            )));
        }
        if r >= n {
            return Err(Error::invalid(format!("CSV has more than {n} data rows")));
        }
        if cells[0].trim() != labels[r].as_str() {
            return Err(Error::invalid(format!(
                "CSV row {} is labelled {:?}, expected {:?}",
                r + 2,
                cells[0].trim(),
                labels[r].as_str()
            )));
        }
        grid.push(
            cells[1..]
                .iter()
                .enumerate()
                .map(|(c, cell)| parse_cell(cell, r + 2, c + 2))
                .collect::<Result<_>>()?,
        );
    }
    if grid.len() != n {
        return Err(Error::invalid(format!(
            "CSV has {} data rows, expected {n}",
            grid.len()
        )));
    }

    let mut m = PartialMatrix::new(labels)?;
    for i in 0..n {
        if let Some(d) = grid[i][i] {
            if d != 1.0 {
                return Err(Error::invalid(format!(
                    "diagonal cell for {} must be 1 or empty, got {d}",
                    m.labels()[i]
                )));
            }
        }
        for j in (i + 1)..n {
            match (grid[i][j], grid[j][i]) {
                (None, None) => {}
                (Some(a), Some(b)) if a == b => m.insert(i, j, a)?,
                (a, b) => {
                    let show = |v: Option<f64>| v.map_or_else(|| "empty".to_owned(), |x| x.to_string());
                    return Err(Error::invalid(format!(
                        "CSV cells ({0}, {1}) and ({1}, {0}) disagree: {2} vs {3}",
                        m.labels()[i],
                        m.labels()[j],
                        show(a),
                        show(b)
                    )));
                }
            }
        }
    }
    Ok(m)
}

/// Parses a partial matrix from JSON or CSV text.
pub fn parse_partial(text: &str, format: Format) -> Result<PartialMatrix> {
    match format {
        Format::Json => parse_json(text),
        Format::Csv => parse_csv(text),
    }
}

/// Parses a matrix that must be fully specified.
pub fn parse_dense(text: &str, format: Format) -> Result<DenseCorrMatrix> {
    parse_partial(text, format)?.to_dense()
}

fn json_of(labels: &[Label], entries: impl Iterator<Item = ((usize, usize), f64)>) -> String {
    let doc = JsonMatrix {
        labels: labels.iter().map(|l| l.as_str().to_owned()).collect(),
        entries: entries
            .map(|((i, j), value)| JsonEntry {
                row: labels[i].as_str().to_owned(),
                col: labels[j].as_str().to_owned(),
                value,
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("matrix serializes to JSON");
    s.push('\n');
    s
}

fn csv_of(labels: &[Label], cell: impl Fn(usize, usize) -> Option<f64>) -> String {
    let mut out = String::new();
    for l in labels {
        out.push(',');
        out.push_str(l.as_str());
    }
    out.push('\n');
    for (i, l) in labels.iter().enumerate() {
        out.push_str(l.as_str());
        for j in 0..labels.len() {
            out.push(',');
            if let Some(v) = cell(i, j) {
                out.push_str(&v.to_string());
            }
        }
        out.push('\n');
    }
    out
}

/// Writes a dense matrix. JSON lists every upper-triangle pair; CSV writes
/// the full grid.
pub fn serialize_dense(m: &DenseCorrMatrix, format: Format) -> String {
    let n = m.n();
    match format {
        Format::Json => json_of(
            m.labels(),
            (0..n).flat_map(|i| ((i + 1)..n).map(move |j| ((i, j), m.get(i, j)))),
        ),
        Format::Csv => csv_of(m.labels(), |i, j| Some(m.get(i, j))),
    }
}

/// Writes a partial matrix; unspecified pairs are omitted (JSON) or left
/// empty (CSV).
pub fn serialize_partial(m: &PartialMatrix, format: Format) -> String {
    match format {
        Format::Json => json_of(m.labels(), m.specified()),
        Format::Csv => csv_of(m.labels(), |i, j| m.get(i, j)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(names: &[&str]) -> Vec<Label> {
        names.iter().map(|n| Label::new(*n).unwrap()).collect()
    }

    #[test]
    fn json_echoes_entries() {
        let text = r#"{"labels":["a","b","c"],"entries":[
            {"row":"a","col":"b","value":0.6},{"row":"b","col":"c","value":0.5}]}"#;
        let m = parse_partial(text, Format::Json).unwrap();
        assert_eq!(m.n(), 3);
        assert_eq!(m.specified_count(), 2);
        assert_eq!(m.get(0, 1), Some(0.6));
        assert_eq!(m.get(2, 1), Some(0.5));
        assert_eq!(m.get(0, 2), None);
    }

    #[test]
    fn json_rejects_unit_coefficient() {
        let text = r#"{"labels":["a","b"],"entries":[{"row":"a","col":"b","value":1.0}]}"#;
        assert!(matches!(parse_partial(text, Format::Json), Err(Error::InvalidInput(_))));
        let text = r#"{"labels":["a","b"],"entries":[{"row":"a","col":"b","value":-1.5}]}"#;
        assert!(parse_partial(text, Format::Json).is_err());
    }

    #[test]
    fn json_diagonal_must_be_one() {
        let ok = r#"{"labels":["a","b"],"entries":[{"row":"a","col":"a","value":1.0}]}"#;
        assert_eq!(parse_partial(ok, Format::Json).unwrap().specified_count(), 0);
        let bad = r#"{"labels":["a","b"],"entries":[{"row":"b","col":"b","value":0.9}]}"#;
        assert!(parse_partial(bad, Format::Json).is_err());
    }

    #[test]
    fn json_duplicates() {
        let same = r#"{"labels":["a","b"],"entries":[
            {"row":"a","col":"b","value":0.2},{"row":"b","col":"a","value":0.2}]}"#;
        assert_eq!(parse_partial(same, Format::Json).unwrap().specified_count(), 1);
        let conflict = r#"{"labels":["a","b"],"entries":[
            {"row":"a","col":"b","value":0.2},{"row":"b","col":"a","value":0.3}]}"#;
        assert!(parse_partial(conflict, Format::Json).is_err());
    }

    #[test]
    fn json_rejects_unknown_label_and_bad_syntax() {
        let unknown = r#"{"labels":["a","b"],"entries":[{"row":"a","col":"z","value":0.2}]}"#;
        assert!(parse_partial(unknown, Format::Json).is_err());
        assert!(parse_partial("{\"labels\": [", Format::Json).is_err());
        assert!(parse_partial(r#"{"labels":[]}"#, Format::Json).is_err());
        assert!(parse_partial(r#"{"labels":["a","a"]}"#, Format::Json).is_err());
        assert!(parse_partial(r#"{"labels":["a,b"]}"#, Format::Json).is_err());
    }

    #[test]
    fn csv_asymmetric_cells_rejected() {
        let text = ",a,b\na,1,0.6\nb,,1\n";
        assert!(matches!(parse_partial(text, Format::Csv), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn csv_parses_blanks_as_unspecified() {
        let text = ",a,b,c\na,1,0.6,\nb,0.6,1,0.5\nc,,0.5,\n";
        let m = parse_partial(text, Format::Csv).unwrap();
        assert_eq!(m.specified_count(), 2);
        assert_eq!(m.get(1, 2), Some(0.5));
        assert!(!m.is_specified(0, 2));
    }

    #[test]
    fn csv_structure_errors() {
        assert!(parse_partial(",a,b\na,1,0.5\nb,0.5,0.9\n", Format::Csv).is_err());
        assert!(parse_partial(",a,b\na,1,0.5\nc,0.5,1\n", Format::Csv).is_err());
        assert!(parse_partial(",a,b\na,1,0.5\n", Format::Csv).is_err());
        assert!(parse_partial(",a,b\na,1,x\nb,x,1\n", Format::Csv).is_err());
        assert!(parse_partial(",a,b\na,1,1\nb,1,1\n", Format::Csv).is_err());
        assert!(parse_partial("", Format::Csv).is_err());
    }

    #[test]
    fn identity_to_csv() {
        let m = DenseCorrMatrix::identity(labels(&["a", "b"])).unwrap();
        assert_eq!(serialize_dense(&m, Format::Csv), ",a,b\na,1,0\nb,0,1\n");
    }

    #[test]
    fn insert_rejects_diagonal_and_duplicates() {
        let mut m = PartialMatrix::new(labels(&["a", "b"])).unwrap();
        assert!(m.insert(0, 0, 0.5).is_err());
        m.insert(1, 0, 0.5).unwrap();
        assert!(m.insert(0, 1, 0.5).is_err());
        assert!(m.insert(0, 2, 0.1).is_err());
    }

    #[test]
    fn partial_round_trip_keeps_gaps() {
        let text = ",a,b,c\na,,0.25,\nb,0.25,,-0.125\nc,,-0.125,\n";
        let m = parse_partial(text, Format::Csv).unwrap();
        for fmt in [Format::Json, Format::Csv] {
            assert_eq!(parse_partial(&serialize_partial(&m, fmt), fmt).unwrap(), m);
        }
    }

    fn dense_strategy() -> impl Strategy<Value = DenseCorrMatrix> {
        (1usize..9).prop_flat_map(|n| {
            prop::collection::vec(-0.999_999f64..0.999_999, n * n).prop_map(move |vals| {
                let names: Vec<Label> = (0..n).map(|i| Label::new(format!("v{i}")).unwrap()).collect();
                let values = SymMatrix::from_upper(n, |i, j| if i == j { 1.0 } else { vals[i * n + j] });
                DenseCorrMatrix::new(names, values).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn dense_round_trip_is_bit_exact(m in dense_strategy()) {
            for fmt in [Format::Json, Format::Csv] {
                let back = parse_dense(&serialize_dense(&m, fmt), fmt).unwrap();
                prop_assert_eq!(back.labels(), m.labels());
                for i in 0..m.n() {
                    for j in 0..m.n() {
                        prop_assert_eq!(back.get(i, j).to_bits(), m.get(i, j).to_bits());
                    }
                }
            }
        }
    }
}
