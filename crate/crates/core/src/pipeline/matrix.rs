use std::io::{Read, Write};

use super::PipelineError;
use crate::real::Real;

/// Magic bytes of the framed binary matrix format.
pub const MATRIX_MAGIC: [u8; 4] = *b"RBIT";
/// Current binary format version.
pub const MATRIX_VERSION: u16 = 1;

/// Dense row-major matrix of transformed values.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn from_rows(rows: Vec<Vec<T>>, cols: usize) -> Result<Self, PipelineError> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        let row_count = rows.len();
        for row in rows {
            if row.len() != cols {
                return Err(PipelineError::WidthMismatch {
                    expected: cols,
                    actual: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Self {
            rows: row_count,
            cols,
            data,
        })
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, PipelineError> {
        if data.len() != rows * cols {
            return Err(PipelineError::InvalidMatrix(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    /// Writes `header` then one row per line, each value with 17 significant
    /// digits so `f64` round-trips exactly.
    pub fn write_csv<W: Write>(
        &self,
        writer: W,
        header: &[String],
    ) -> Result<(), PipelineError> {
        let mut writer = csv::Writer::from_writer(writer);
        writer.write_record(header)?;
        for row in self.iter_rows() {
            writer.write_record(row.iter().map(|v| format!("{:.16e}", v.as_f64())))?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Reads a matrix written by [`Matrix::write_csv`]; the header row is
    /// required and determines the width.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, PipelineError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let cols = reader.headers()?.len();
        let mut data = Vec::new();
        let mut rows = 0usize;
        for record in reader.records() {
            let record = record?;
            if record.len() != cols {
                return Err(PipelineError::WidthMismatch {
                    expected: cols,
                    actual: record.len(),
                });
            }
            for field in record.iter() {
                let value: f64 = field.parse().map_err(|_| {
                    PipelineError::InvalidMatrix(format!("non-numeric field {field:?}"))
                })?;
                data.push(T::c(value));
            }
            rows += 1;
        }
        Ok(Self { rows, cols, data })
    }

    /// Framed little-endian binary format: magic `RBIT`, version `u16`, row
    /// and column counts as `u64`, then row-major `f64` values.
    pub fn write_binary<W: Write>(&self, mut writer: W) -> Result<(), PipelineError> {
        writer.write_all(&MATRIX_MAGIC)?;
        writer.write_all(&MATRIX_VERSION.to_le_bytes())?;
        writer.write_all(&(self.rows as u64).to_le_bytes())?;
        writer.write_all(&(self.cols as u64).to_le_bytes())?;
        for value in &self.data {
            writer.write_all(&value.as_f64().to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut reader: R) -> Result<Self, PipelineError> {
        let mut magic = [0u8; 4];
        reader.read_exact(&mut magic)?;
        if magic != MATRIX_MAGIC {
            return Err(PipelineError::InvalidMatrix(format!(
                "bad magic {magic:?}, expected {MATRIX_MAGIC:?}"
            )));
        }
        let mut version = [0u8; 2];
        reader.read_exact(&mut version)?;
        let version = u16::from_le_bytes(version);
        if version != MATRIX_VERSION {
            return Err(PipelineError::InvalidMatrix(format!(
                "unsupported binary version {version}"
            )));
        }
        let mut word = [0u8; 8];
        reader.read_exact(&mut word)?;
        let rows = u64::from_le_bytes(word) as usize;
        reader.read_exact(&mut word)?;
        let cols = u64::from_le_bytes(word) as usize;
        let count = rows
            .checked_mul(cols)
            .ok_or_else(|| PipelineError::InvalidMatrix("matrix shape overflows".into()))?;
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            reader.read_exact(&mut word)?;
            data.push(T::c(f64::from_le_bytes(word)));
        }
        Ok(Self { rows, cols, data })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Matrix<f64> {
        Matrix::from_rows(
            vec![
                vec![1.0, -2.5, 1e-30],
                vec![0.1 + 0.2, f64::MIN_POSITIVE, 12345.6789],
            ],
            3,
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let matrix = sample();
        let mut buffer = Vec::new();
        let header: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        matrix.write_csv(&mut buffer, &header).unwrap();
        let back = Matrix::<f64>::read_csv(buffer.as_slice()).unwrap();
        assert_eq!(back, matrix);
    }

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let matrix = sample();
        let mut buffer = Vec::new();
        matrix.write_binary(&mut buffer).unwrap();
        assert_eq!(&buffer[0..4], b"RBIT");
        let back = Matrix::<f64>::read_binary(buffer.as_slice()).unwrap();
        assert_eq!(back, matrix);
    }

    #[test]
    fn bad_magic_is_rejected() {
        let err = Matrix::<f64>::read_binary(&b"XXXX\x01\x00"[..]);
        assert!(matches!(err, Err(PipelineError::InvalidMatrix(_))));
    }

    #[test]
    fn ragged_rows_rejected() {
        let err = Matrix::from_rows(vec![vec![1.0f64], vec![1.0, 2.0]], 1);
        assert!(matches!(err, Err(PipelineError::WidthMismatch { .. })));
    }
}
