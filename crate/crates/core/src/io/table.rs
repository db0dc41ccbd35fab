//! CSV dataset ingestion.

use std::io::Read;
use std::path::Path;

use crate::data::Dataset;
use crate::error::{Error, Result};

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Reads a headed CSV. The column named `response` becomes `y`; every other
/// column is a feature, in file order. `path` is used only in messages.
pub fn read_dataset_from<R: Read>(reader: R, path: &Path, response: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let y_col = headers.iter().position(|h| h == response).ok_or_else(|| {
        parse_error(
            path,
            1,
            format!(
                "response column '{response}' not found; available columns: {}",
                headers.join(", ")
            ),
        )
    })?;
    if headers.len() < 2 {
        return Err(parse_error(path, 1, "no feature columns"));
    }
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != y_col)
        .map(|(_, h)| h.clone())
        .collect();
    let mut y = Vec::new();
    let mut columns = vec![Vec::new(); names.len()];
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            let message = match e.kind() {
                csv::ErrorKind::UnequalLengths {
                    expected_len, len, ..
                } => format!("expected {expected_len} fields, found {len}"),
                _ => e.to_string(),
            };
            parse_error(path, line, message)
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let mut feature = 0;
        for (j, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            let v: f64 = cell.parse().map_err(|_| {
                parse_error(
                    path,
                    line,
                    format!("column '{}': '{cell}' is not a number", headers[j]),
                )
            })?;
            if !v.is_finite() {
                return Err(parse_error(
                    path,
                    line,
                    format!("column '{}': non-finite value '{cell}'", headers[j]),
                ));
            }
            if j == y_col {
                y.push(v);
            } else {
                columns[feature].push(v);
                feature += 1;
            }
        }
    }
    if y.is_empty() {
        return Err(Error::EmptyData(format!("{}: no data rows", path.display())));
    }
    Dataset::from_columns(y, columns, Some(names))
}

pub fn read_dataset(path: &Path, response: &str) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_dataset_from(file, path, response)
}

/// Writes `y` first, then the features, with a header row.
pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["y".to_string()];
    header.extend(data.feature_names().iter().cloned());
    w.write_record(&header)?;
    for i in 0..data.n() {
        let mut rec = vec![data.y()[i].to_string()];
        rec.extend(data.row(i).iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(src: &str) -> Result<Dataset> {
        read_dataset_from(src.as_bytes(), Path::new("in.csv"), "y")
    }

    #[test]
    fn reads_header_and_orders_features() {
        let d = read("x1,y,x2\n1,2,3\n4,5,6\n7,8,9\n").unwrap();
        assert_eq!((d.n(), d.p()), (3, 2));
        assert_eq!(d.y(), &[2.0, 5.0, 8.0]);
        assert_eq!(d.feature_names(), &["x1", "x2"]);
        assert_eq!(d.column(1), &[3.0, 6.0, 9.0]);
    }

    #[test]
    fn missing_response_names_columns() {
        let e = read("a,b\n1,2\n").unwrap_err().to_string();
        assert!(e.contains("'y' not found") && e.contains("a, b"), "{e}");
    }

    #[test]
    fn errors_carry_line_numbers() {
        match read("y,x1\n1,2\n3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match read("y,x1\n1,2\n3,abc\n") {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("x1"));
            }
            other => panic!("{other:?}"),
        }
        match read("y,x1\n1,NaN\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(read("y,x1\n"), Err(Error::EmptyData(_))));
    }
}
