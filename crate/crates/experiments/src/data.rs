//! CSV dataset ingestion: header row, feature columns, final label column.

use std::path::Path;

use crate::ExperimentError;

pub fn load_csv_dataset(path: &Path) -> Result<Vec<(Vec<f64>, f64)>, ExperimentError> {
    parse_csv_dataset(std::fs::File::open(path).map_err(csv::Error::from)?)
}

/// Parses a dataset from any reader; `load_csv_dataset` delegates here and
/// this is also the entry point the fuzz targets drive with raw bytes.
pub fn parse_csv_dataset(input: impl std::io::Read) -> Result<Vec<(Vec<f64>, f64)>, ExperimentError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let mut out = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() < 2 {
            return Err(ExperimentError::BadCsvShape);
        }
        let mut values = Vec::with_capacity(record.len());
        for (field, raw) in record.iter().enumerate() {
            let v: f64 = raw
                .trim()
                .parse()
                .map_err(|_| ExperimentError::BadCsvField { line: row + 2, field })?;
            values.push(v);
        }
        let y = values.pop().unwrap();
        out.push((values, y));
    }
    if out.is_empty() {
        return Err(ExperimentError::BadCsvShape);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> std::path::PathBuf {
        let path = std::env::temp_dir().join(format!(
            "stabsel-data-test-{}-{}.csv",
            std::process::id(),
            content.len()
        ));
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn parses_features_and_label() {
        let path = write_temp("x1,x2,y\n1.0,2.0,3.5\n-1,0,0.25\n");
        let data = load_csv_dataset(&path).unwrap();
        assert_eq!(data, vec![(vec![1.0, 2.0], 3.5), (vec![-1.0, 0.0], 0.25)]);
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn reports_bad_field_location() {
        let path = write_temp("x,y\n1.0,oops\n");
        match load_csv_dataset(&path) {
            Err(ExperimentError::BadCsvField { line: 2, field: 1 }) => {}
            other => panic!("expected BadCsvField, got {other:?}"),
        }
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn rejects_empty_body() {
        let path = write_temp("x,y\n");
        assert!(matches!(load_csv_dataset(&path), Err(ExperimentError::BadCsvShape)));
        std::fs::remove_file(path).ok();
    }
}
