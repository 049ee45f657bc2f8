use std::io::{Read, Write};
use std::path::Path;

use super::PipelineError;

/// A header plus rows of raw string fields, as read from CSV.
///
/// Values stay untyped here; the pipeline interprets them per column. An empty
/// field is a missing value: missing categoricals act as one more category,
/// missing numerics are imputed with the fitted column mean.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl DataTable {
    pub fn new(header: Vec<String>, rows: Vec<Vec<String>>) -> Result<Self, PipelineError> {
        for row in &rows {
            if row.len() != header.len() {
                return Err(PipelineError::RaggedRow {
                    expected: header.len(),
                    actual: row.len(),
                });
            }
        }
        Ok(Self { header, rows })
    }

    pub fn read_csv<R: Read>(reader: R, delimiter: u8) -> Result<Self, PipelineError> {
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .has_headers(true)
            .flexible(false)
            .from_reader(reader);
        let header: Vec<String> = reader
            .headers()?
            .iter()
            .map(|s| s.to_string())
            .collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            rows.push(record.iter().map(|s| s.to_string()).collect());
        }
        Ok(Self { header, rows })
    }

    pub fn read_csv_path(path: &Path, delimiter: u8) -> Result<Self, PipelineError> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file), delimiter)
    }

    pub fn write_csv<W: Write>(&self, writer: W, delimiter: u8) -> Result<(), PipelineError> {
        let mut writer = csv::WriterBuilder::new()
            .delimiter(delimiter)
            .from_writer(writer);
        writer.write_record(&self.header)?;
        for row in &self.rows {
            writer.write_record(row)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// All values of one column, by header name.
    pub fn column(&self, name: &str) -> Result<Vec<&str>, PipelineError> {
        let idx = self
            .column_index(name)
            .ok_or_else(|| PipelineError::UnknownColumn(name.to_string()))?;
        Ok(self.rows.iter().map(|row| row[idx].as_str()).collect())
    }
}
