//! LIBSVM text datasets, label handling and one-vs-all reduction.
//!
//! One sample per line: `label index:value index:value ...` with 1-based,
//! strictly increasing indices. Blank lines and lines starting with `#` are
//! skipped; anything after a `#` inside a line is ignored. Files ending in
//! `.gz` are decompressed on the fly.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;

use crate::error::{Error, Result};
use crate::model::TrainingSet;
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub label: f64,
    /// `(1-based index, value)` pairs, strictly increasing in the index.
    pub entries: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub rows: Vec<RawRow>,
    pub n_features: usize,
}

impl RawDataset {
    pub fn n_samples(&self) -> usize {
        self.rows.len()
    }

    /// Distinct labels, sorted increasingly.
    pub fn classes(&self) -> Vec<f64> {
        let mut labels: Vec<f64> = self.rows.iter().map(|r| r.label).collect();
        labels.sort_by(f64::total_cmp);
        labels.dedup();
        labels
    }

    /// Feature matrix with 0-based columns.
    pub fn to_matrix(&self) -> Result<SparseMatrix> {
        SparseMatrix::from_rows(
            self.n_features,
            self.rows.iter().map(|r| r.entries.iter().map(|&(j, x)| (j - 1, x)).collect::<Vec<_>>()),
        )
    }

    /// Widens to `n` features.
    pub fn with_n_features(mut self, n: usize) -> Result<Self> {
        if n < self.n_features {
            return Err(Error::DimensionMismatch(format!("cannot shrink {} features to {n}", self.n_features)));
        }
        self.n_features = n;
        Ok(self)
    }
}

fn parse_row(line: &str, lineno: usize) -> Result<RawRow> {
    let err = |message: String| Error::Parse { line: lineno, message };
    let mut tokens = line.split_whitespace();
    let label_tok = tokens.next().ok_or_else(|| err("missing label".into()))?;
    let label: f64 = label_tok.parse().map_err(|_| err(format!("bad label '{label_tok}'")))?;
    if !label.is_finite() {
        return Err(err(format!("label '{label_tok}' is not finite")));
    }
    let mut entries: Vec<(usize, f64)> = Vec::new();
    for tok in tokens {
        let (idx, val) = tok.split_once(':').ok_or_else(|| err(format!("expected index:value, found '{tok}'")))?;
        let idx: usize = idx.parse().map_err(|_| err(format!("bad index in '{tok}'")))?;
        if idx == 0 {
            return Err(err(format!("indices are 1-based, found '{tok}'")));
        }
        let val: f64 = val.parse().map_err(|_| err(format!("bad value in '{tok}'")))?;
        if !val.is_finite() {
            return Err(err(format!("value in '{tok}' is not finite")));
        }
        if let Some(&(prev, _)) = entries.last() {
            if idx <= prev {
                return Err(err(format!("index {idx} does not increase after {prev}")));
            }
        }
        entries.push((idx, val));
    }
    Ok(RawRow { label, entries })
}

/// Parses LIBSVM text. `n_features` is the declared width if given (it must
/// cover every index), else the largest index seen.
pub fn parse_libsvm<R: BufRead>(input: R, declared_n_features: Option<usize>) -> Result<RawDataset> {
    let mut rows = Vec::new();
    let mut max_index = 0;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let row = parse_row(content, i + 1)?;
        if let Some(&(j, _)) = row.entries.last() {
            if declared_n_features.is_some_and(|n| j > n) {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("index {j} exceeds the declared {} features", declared_n_features.unwrap_or(0)),
                });
            }
            max_index = max_index.max(j);
        }
        rows.push(row);
    }
    Ok(RawDataset { rows, n_features: declared_n_features.unwrap_or(max_index) })
}

/// Writes LIBSVM text; floats use the shortest exact representation.
pub fn write_libsvm<W: Write>(raw: &RawDataset, mut out: W) -> Result<()> {
    for row in &raw.rows {
        write!(out, "{}", row.label)?;
        for &(j, x) in &row.entries {
            write!(out, " {j}:{x}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads a LIBSVM file, gunzipping when the name ends in `.gz`.
pub fn read_libsvm_file(path: impl AsRef<Path>, declared_n_features: Option<usize>) -> Result<RawDataset> {
    let path = path.as_ref();
    let file = File::open(path)?;
    if path.extension().is_some_and(|e| e == "gz") {
        parse_libsvm(BufReader::new(MultiGzDecoder::new(file)), declared_n_features)
    } else {
        parse_libsvm(BufReader::new(file), declared_n_features)
    }
}

/// Gives both datasets the larger of their two widths.
pub fn align_features(train: RawDataset, test: RawDataset) -> Result<(RawDataset, RawDataset)> {
    let n = train.n_features.max(test.n_features);
    Ok((train.with_n_features(n)?, test.with_n_features(n)?))
}

/// `+1` for `positive_class`, `-1` for every other label.
pub fn binarize(raw: &RawDataset, positive_class: f64) -> Result<TrainingSet> {
    if raw.rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !raw.rows.iter().any(|r| r.label == positive_class) {
        return Err(Error::UnknownClass(positive_class));
    }
    let y = raw.rows.iter().map(|r| if r.label == positive_class { 1.0 } else { -1.0 }).collect();
    TrainingSet::new(raw.to_matrix()?, y)
}

/// Two-class data with the larger label mapped to `+1`.
pub fn binarize_auto(raw: &RawDataset) -> Result<TrainingSet> {
    match raw.classes().as_slice() {
        [] => Err(Error::EmptyDataset),
        [_] => Err(Error::DegenerateDataset),
        [_, hi] => binarize(raw, *hi),
        many => {
            Err(Error::InvalidConfig(format!("{} classes found; pick a positive class or use one-vs-all", many.len())))
        }
    }
}

/// One binary task per class, in increasing label order.
pub fn one_vs_all_tasks(raw: &RawDataset) -> Result<Vec<(f64, TrainingSet)>> {
    let classes = raw.classes();
    match classes.len() {
        0 => Err(Error::EmptyDataset),
        1 => Err(Error::DegenerateDataset),
        _ => classes.into_iter().map(|c| Ok((c, binarize(raw, c)?))).collect(),
    }
}

/// Per-class weight vectors; predicts the class with the largest score
/// `x^T w_k`, the smallest label winning ties.
#[derive(Debug, Clone, PartialEq)]
pub struct OneVsAll {
    pub classes: Vec<f64>,
    pub weights: Vec<Vec<f64>>,
}

impl OneVsAll {
    pub fn new(mut models: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = models[0].1.len();
        if models.iter().any(|(_, w)| w.len() != n) {
            return Err(Error::DimensionMismatch("class weight vectors differ in length".into()));
        }
        models.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (classes, weights) = models.into_iter().unzip();
        Ok(OneVsAll { classes, weights })
    }

    pub fn predict_row(&self, x: &SparseMatrix, l: usize) -> f64 {
        let mut best = (self.classes[0], x.row_dot(l, &self.weights[0]));
        for (c, w) in self.classes.iter().zip(&self.weights).skip(1) {
            let score = x.row_dot(l, w);
            if score > best.1 {
                best = (*c, score);
            }
        }
        best.0
    }

    /// Misclassification rate on raw multiclass data.
    pub fn error_rate(&self, raw: &RawDataset) -> Result<f64> {
        if raw.rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if raw.n_features != self.weights[0].len() {
            return Err(Error::DimensionMismatch(format!(
                "{} features in data, {} in the model",
                raw.n_features,
                self.weights[0].len()
            )));
        }
        let x = raw.to_matrix()?;
        let wrong = raw.rows.iter().enumerate().filter(|(l, r)| self.predict_row(&x, *l) != r.label).count();
        Ok(wrong as f64 / raw.rows.len() as f64)
    }
}
