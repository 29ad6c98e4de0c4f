use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{Column, ColumnData, Dataset};
use crate::error::io_err;
use crate::{Error, Result};

/// Cell spellings treated as missing on ingestion.
pub const MISSING_TOKENS: &[&str] = &["", "NA", "N/A", "NaN", "nan", "null", "NULL", "?"];

#[derive(Clone, Debug)]
pub struct CsvOptions {
    pub delimiter: u8,
    /// A header row is required; `false` is rejected.
    pub has_header: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            has_header: true,
        }
    }
}

fn is_missing(cell: &str) -> bool {
    MISSING_TOKENS.contains(&cell.trim())
}

pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    read_csv(file, &name, options)
}

/// Parses a CSV table. A column is numeric when every non-missing cell parses
/// as a finite float; everything else is categorical.
pub fn read_csv<R: Read>(reader: R, name: &str, options: &CsvOptions) -> Result<Dataset> {
    if !options.has_header {
        return Err(Error::InvalidArgument("a header row is required".into()));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::Empty("no header row".into()));
    }
    let width = header.len();
    let mut cells: Vec<Vec<String>> = vec![Vec::new(); width];
    for record in rdr.records() {
        let record = record?;
        if record.len() != width {
            let row = record.position().map(|p| p.line() as usize).unwrap_or(0);
            return Err(Error::Ragged {
                row,
                found: record.len(),
                expected: width,
            });
        }
        for (col, cell) in cells.iter_mut().zip(record.iter()) {
            col.push(cell.to_string());
        }
    }
    if cells[0].is_empty() {
        return Err(Error::Empty("no data rows".into()));
    }
    let columns = header
        .into_iter()
        .zip(cells)
        .map(|(name, raw)| infer_column(name, raw))
        .collect();
    Dataset::new(name, columns)
}

fn infer_column(name: String, raw: Vec<String>) -> Column {
    let parsed: Option<Vec<Option<f64>>> = raw
        .iter()
        .map(|c| {
            if is_missing(c) {
                Some(None)
            } else {
                c.trim().parse::<f64>().ok().filter(|x| x.is_finite()).map(Some)
            }
        })
        .collect();
    let data = match parsed {
        Some(v) if v.iter().any(Option::is_some) => ColumnData::Numeric(v),
        _ => ColumnData::Categorical(
            raw.into_iter()
                .map(|c| if is_missing(&c) { None } else { Some(c) })
                .collect(),
        ),
    };
    Column {
        name,
        data,
        role: None,
    }
}

/// Writes the dataset with a header row. Numeric cells use the shortest
/// representation that parses back to the same `f64`.
pub fn write_csv<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(dataset.columns().iter().map(|c| c.name.as_str()))?;
    for row in 0..dataset.n_rows() {
        wtr.write_record(dataset.columns().iter().map(|c| c.render(row)))?;
    }
    wtr.flush().map_err(io_err("<csv writer>"))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::ColumnKind;

    fn parse(s: &str) -> Result<Dataset> {
        read_csv(s.as_bytes(), "t", &CsvOptions::default())
    }

    #[test]
    fn four_row_table() {
        let d = parse("age,sex\n30,m\n41,f\n,f\n25,m\n").unwrap();
        assert_eq!(d.n_rows(), 4);
        assert_eq!(d.n_cols(), 2);
        let age = d.column("age").unwrap();
        assert_eq!(age.kind(), ColumnKind::Numeric);
        assert_eq!(age.missing_count(), 1);
        assert_eq!(d.column("sex").unwrap().kind(), ColumnKind::Categorical);
    }

    #[test]
    fn ragged_row_reports_its_line() {
        let err = parse("a,b,c,d\n1,2,3,4\n1,2,3\n").unwrap_err();
        match err {
            Error::Ragged { row, found, expected } => {
                assert_eq!((row, found, expected), (3, 3, 4));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(parse("").is_err());
        assert!(matches!(parse("a,b\n"), Err(Error::Empty(_))));
    }

    #[test]
    fn mixed_column_is_categorical() {
        let d = parse("x\n1\nabc\n").unwrap();
        assert_eq!(d.column("x").unwrap().kind(), ColumnKind::Categorical);
    }

    #[test]
    fn write_then_read_preserves_values() {
        let src = "a,b\n0.1,x\n1e-300,\"y,z\"\n-17,w\n";
        let d = parse(src).unwrap();
        let mut buf = Vec::new();
        write_csv(&d, &mut buf).unwrap();
        let back = parse(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.columns(), d.columns());
    }
}
