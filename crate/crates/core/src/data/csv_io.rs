use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use super::LabeledDataset;
use crate::{Error, Result};

/// The Iris dataset (150 samples, 4 features, 3 classes) in the CSV layout
/// read by [`parse_csv`].
pub const IRIS_CSV: &str = include_str!("../../data/iris.csv");

/// The bundled Iris dataset.
pub fn iris() -> LabeledDataset {
    parse_csv(IRIS_CSV, Path::new("iris.csv")).expect("bundled Iris data is well formed")
}

/// Reads a dataset: one sample per row, features first, integer label last,
/// optional header line.
pub fn load_csv(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    parse_csv(&text, path)
}

/// Parses CSV text. `origin` only labels error messages.
///
/// The first line is a header when none of its fields is a number. The
/// class count is one more than the largest label.
pub fn parse_csv(text: &str, origin: &Path) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let parse_error = |row: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        row,
        message,
    };

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (index, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_error(index + 1, e.to_string()))?;
        let row = record.position().map_or(index as u64 + 1, |p| p.line()) as usize;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if index == 0 && record.iter().all(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        if record.len() < 2 {
            return Err(parse_error(row, "expected at least one feature and a label".into()));
        }
        let features = record.len() - 1;
        match width {
            None => width = Some(features),
            Some(w) if w != features => {
                return Err(parse_error(row, format!("expected {} fields, found {}", w + 1, record.len())))
            }
            _ => {}
        }
        for (col, field) in record.iter().take(features).enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_error(row, format!("column {col}: `{field}` is not a number")))?;
            if !v.is_finite() {
                return Err(parse_error(row, format!("column {col}: `{field}` is not finite")));
            }
            values.push(v);
        }
        let label = &record[features];
        let label: usize = label
            .parse()
            .map_err(|_| parse_error(row, format!("label `{label}` is not a non-negative integer")))?;
        labels.push(label);
    }

    let Some(width) = width else {
        return Err(Error::EmptyDataset);
    };
    let classes = labels.iter().max().map_or(0, |&m| m + 1);
    let features = Array2::from_shape_vec((labels.len(), width), values).expect("rows have equal width");
    LabeledDataset::new(features, labels, classes)
}

/// Writes the header `f0,...,f{F-1},label` and one row per sample. Features
/// use 17 significant digits, so reading the file back is exact.
pub fn write_csv(data: &LabeledDataset, mut out: impl Write) -> Result<()> {
    let mut line = String::new();
    for f in 0..data.feature_count() {
        let _ = write!(line, "f{f},");
    }
    line.push_str("label\n");
    out.write_all(line.as_bytes())?;
    for s in 0..data.len() {
        line.clear();
        let (x, label) = data.sample(s);
        for v in x {
            let _ = write!(line, "{v:.16e},");
        }
        let _ = writeln!(line, "{label}");
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}
