//! Headerless CSV matrices: one row per line, decimal floats.

use std::io::{Read, Write};
use std::path::Path;

use super::DenseMatrix;
use crate::error::{Error, Result};

pub fn read_csv<R: Read>(reader: R) -> Result<DenseMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        let row = record
            .iter()
            .enumerate()
            .map(|(col, field)| {
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        Error::Csv(format!(
                            "line {}, column {}: '{field}' is not a finite number",
                            line + 1,
                            col + 1
                        ))
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Csv("empty matrix file".into()));
    }
    DenseMatrix::from_rows(&rows)
}

pub fn read_csv_file(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    read_csv(std::fs::File::open(path)?)
}

pub fn write_csv<W: Write>(m: &DenseMatrix, writer: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for i in 0..m.rows() {
        wtr.write_record(m.row(i).iter().map(|v| v.to_string()))
            .map_err(|e| Error::Csv(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_round_trips() {
        let m = read_csv("2, 0.5\n0.5,2\n".as_bytes()).unwrap();
        assert_eq!(m, DenseMatrix::from_rows(&[[2.0, 0.5], [0.5, 2.0]]).unwrap());
        let mut out = Vec::new();
        write_csv(&m, &mut out).unwrap();
        assert_eq!(String::from_utf8(out.clone()).unwrap(), "2,0.5\n0.5,2\n");
        assert_eq!(read_csv(out.as_slice()).unwrap(), m);
    }

    #[test]
    fn ragged_and_garbage_rejected() {
        assert!(matches!(read_csv("1,2\n3\n".as_bytes()), Err(Error::Csv(_))));
        assert!(matches!(read_csv("1,x\n".as_bytes()), Err(Error::Csv(_))));
        assert!(matches!(read_csv("1,inf\n".as_bytes()), Err(Error::Csv(_))));
        assert!(matches!(read_csv("".as_bytes()), Err(Error::Csv(_))));
    }
}
