//! Comma-separated ingestion and export.
//!
//! Files carry a header row. Every column except the label and environment
//! columns is a numeric feature. Environment values may be any text; they are
//! mapped to dense ids in order of first appearance.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use irf_core::{Dataset, Task};

use crate::error::{IrfError, Result};

/// A dataset together with the names it was loaded under.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledData {
    pub dataset: Dataset,
    pub feature_names: Vec<String>,
    /// Original environment value of each dense id.
    pub env_names: Vec<String>,
}

struct RawTable {
    headers: Vec<String>,
    records: Vec<(usize, csv::StringRecord)>,
}

fn read_table(path: &Path) -> Result<RawTable> {
    let file = File::open(path).map_err(|e| IrfError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(IrfError::EmptyFile(path.to_path_buf()));
    }
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        records.push((line, rec));
    }
    if records.is_empty() {
        return Err(IrfError::EmptyFile(path.to_path_buf()));
    }
    Ok(RawTable { headers, records })
}

fn csv_error(path: &Path, e: csv::Error) -> IrfError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => IrfError::io(path, io),
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => IrfError::RaggedRow {
            line,
            expected: expected_len as usize,
            found: len as usize,
        },
        other => IrfError::Csv(format!("{}: {other:?}", path.display())),
    }
}

fn column_index(headers: &[String], name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| IrfError::MissingColumn(name.to_owned()))
}

fn parse_cell(line: usize, column: &str, value: &str) -> Result<f64> {
    match value.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(IrfError::NonNumericCell {
            line,
            column: column.to_owned(),
            value: value.to_owned(),
        }),
    }
}

/// Reads a labelled, environment-tagged dataset.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_col: &str,
    env_col: &str,
    task: Task,
) -> Result<LabeledData> {
    let path = path.as_ref();
    if label_col == env_col {
        return Err(IrfError::Csv(
            "label and environment columns must differ".into(),
        ));
    }
    let table = read_table(path)?;
    let label_idx = column_index(&table.headers, label_col)?;
    let env_idx = column_index(&table.headers, env_col)?;
    let feature_idx: Vec<usize> = (0..table.headers.len())
        .filter(|&i| i != label_idx && i != env_idx)
        .collect();
    let feature_names: Vec<String> = feature_idx
        .iter()
        .map(|&i| table.headers[i].clone())
        .collect();

    let n = table.records.len();
    let mut columns = vec![Vec::with_capacity(n); feature_idx.len()];
    let mut labels = Vec::with_capacity(n);
    let mut env_ids = Vec::with_capacity(n);
    let mut env_lookup: HashMap<String, usize> = HashMap::new();
    let mut env_names = Vec::new();
    for (line, rec) in &table.records {
        for (col, &i) in columns.iter_mut().zip(&feature_idx) {
            col.push(parse_cell(*line, &table.headers[i], &rec[i])?);
        }
        let y = parse_cell(*line, label_col, &rec[label_idx])?;
        if task == Task::Classification && y != 0.0 && y != 1.0 {
            return Err(IrfError::InvalidLabel {
                line: *line,
                value: y,
            });
        }
        labels.push(y);
        let env = &rec[env_idx];
        let id = *env_lookup.entry(env.to_owned()).or_insert_with(|| {
            env_names.push(env.to_owned());
            env_names.len() - 1
        });
        env_ids.push(id);
    }
    let dataset = Dataset::from_columns(columns, labels, env_ids, task)?;
    Ok(LabeledData {
        dataset,
        feature_names,
        env_names,
    })
}

/// Feature rows for the named columns, in the given order, plus the label
/// column when `label_col` names a column that is present.
pub fn load_feature_rows(
    path: impl AsRef<Path>,
    feature_names: &[String],
    label_col: Option<&str>,
) -> Result<(Vec<Vec<f64>>, Option<Vec<f64>>)> {
    let path = path.as_ref();
    let table = read_table(path)?;
    let idx: Vec<usize> = feature_names
        .iter()
        .filter_map(|name| table.headers.iter().position(|h| h == name))
        .collect();
    if idx.len() != feature_names.len() {
        return Err(IrfError::FeatureMismatch {
            expected: feature_names.len(),
            got: idx.len(),
        });
    }
    let label_idx = label_col.and_then(|l| table.headers.iter().position(|h| h == l));
    let mut rows = Vec::with_capacity(table.records.len());
    let mut labels = label_idx.map(|_| Vec::with_capacity(table.records.len()));
    for (line, rec) in &table.records {
        let row = idx
            .iter()
            .map(|&i| parse_cell(*line, &table.headers[i], &rec[i]))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
        if let (Some(i), Some(ys)) = (label_idx, labels.as_mut()) {
            ys.push(parse_cell(*line, &table.headers[i], &rec[i])?);
        }
    }
    Ok((rows, labels))
}

/// Writes features, label and environment id, one row per line. Values
/// use the shortest representation that parses back to the same `f64`.
pub fn save_csv(
    path: impl AsRef<Path>,
    data: &Dataset,
    feature_names: &[String],
    label_col: &str,
    env_col: &str,
) -> Result<()> {
    let path = path.as_ref();
    if feature_names.len() != data.n_features() {
        return Err(IrfError::FeatureMismatch {
            expected: data.n_features(),
            got: feature_names.len(),
        });
    }
    let file = File::create(path).map_err(|e| IrfError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        let mut header: Vec<&str> = feature_names.iter().map(String::as_str).collect();
        header.push(label_col);
        header.push(env_col);
        writeln!(out, "{}", header.join(","))?;
        for i in 0..data.n_rows() {
            for j in 0..data.n_features() {
                write!(out, "{},", data.value(i, j))?;
            }
            writeln!(out, "{},{}", data.labels()[i], data.env_ids()[i])?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| IrfError::io(path, e))
}

/// `x0, x1, ...` for datasets without names.
pub fn default_feature_names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("x{j}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn env_ids_follow_first_appearance() {
        let f = write_tmp("x,y,env\n1.5,1,a\n2,0,b\n3,1,a\n");
        let d = load_csv(f.path(), "y", "env", Task::Classification).unwrap();
        assert_eq!(d.dataset.env_ids(), &[0, 1, 0]);
        assert_eq!(d.env_names, vec!["a", "b"]);
        assert_eq!(d.feature_names, vec!["x"]);
        assert_eq!(d.dataset.column(0), &[1.5, 2.0, 3.0]);
    }

    #[test]
    fn label_outside_binary_is_rejected() {
        let f = write_tmp("x,y,env\n1,0,a\n2,2.0,a\n");
        match load_csv(f.path(), "y", "env", Task::Classification) {
            Err(IrfError::InvalidLabel { line: 3, value }) => assert_eq!(value, 2.0),
            other => panic!("unexpected {other:?}"),
        }
        assert!(load_csv(f.path(), "y", "env", Task::Regression).is_ok());
    }

    #[test]
    fn label_and_env_only_is_empty_feature_set() {
        let f = write_tmp("y,env\n1,a\n0,b\n");
        assert!(matches!(
            load_csv(f.path(), "y", "env", Task::Classification),
            Err(IrfError::Core(irf_core::Error::EmptyFeatureSet))
        ));
    }

    #[test]
    fn ingestion_errors() {
        let f = write_tmp("x,y,env\n1,0,a\n");
        assert!(matches!(
            load_csv(f.path(), "label", "env", Task::Regression),
            Err(IrfError::MissingColumn(c)) if c == "label"
        ));
        let f = write_tmp("x,y,env\nabc,0,a\n");
        assert!(matches!(
            load_csv(f.path(), "y", "env", Task::Regression),
            Err(IrfError::NonNumericCell { line: 2, .. })
        ));
        let f = write_tmp("");
        assert!(matches!(
            load_csv(f.path(), "y", "env", Task::Regression),
            Err(IrfError::EmptyFile(_))
        ));
        let f = write_tmp("x,y,env\n");
        assert!(matches!(
            load_csv(f.path(), "y", "env", Task::Regression),
            Err(IrfError::EmptyFile(_))
        ));
        let f = write_tmp("x,y,env\n1,2\n");
        assert!(matches!(
            load_csv(f.path(), "y", "env", Task::Regression),
            Err(IrfError::RaggedRow { .. })
        ));
        let f = write_tmp("x,y,env\nNaN,2,a\n");
        assert!(load_csv(f.path(), "y", "env", Task::Regression).is_err());
    }

    #[test]
    fn feature_rows_by_name() {
        let f = write_tmp("b,a,y\n1,2,0\n3,4,1\n");
        let (rows, labels) =
            load_feature_rows(f.path(), &["a".into(), "b".into()], Some("y")).unwrap();
        assert_eq!(rows, vec![vec![2.0, 1.0], vec![4.0, 3.0]]);
        assert_eq!(labels, Some(vec![0.0, 1.0]));
        assert!(matches!(
            load_feature_rows(f.path(), &["a".into(), "c".into()], None),
            Err(IrfError::FeatureMismatch { expected: 2, got: 1 })
        ));
    }
}
