use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::quantile::QuantileMap;
use super::schema::{ColumnKind, ColumnSchema};
use super::table::DataTable;
use super::{PipelineError, MALFORMED_LABEL, MASKED_LABEL, OUT_OF_INDEX_LABEL};
use crate::encoding::{
    decode_binary, decode_onehot, encode_binary, encode_onehot, BinaryCode, BinaryDecode,
    CategorySpace, OneHotCode, ResBitCode, Scheme,
};
use crate::real::Real;

/// Identifier of the serialized pipeline document.
pub const PIPELINE_FORMAT: &str = "resbit-pipeline";
/// Current document version.
pub const PIPELINE_VERSION: u32 = 1;

/// Fit-time knobs. The defaults match the usual preprocessing setup: at most
/// `min(1000, n_rows)` quantile knots and a bit clamp floor of `1e-30`.
#[derive(Debug, Clone, Copy)]
pub struct FitOptions<T> {
    pub max_knots: usize,
    pub clamp_floor: T,
}

impl<T: Real> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            max_knots: 1000,
            clamp_floor: T::c(1e-30),
        }
    }
}

/// Output span of one column in the transformed matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutEntry {
    pub column: String,
    pub start: usize,
    pub end: usize,
}

/// Sentinel tallies for one categorical column after inversion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SentinelCounts {
    pub column: String,
    pub out_of_index: u64,
    pub malformed: u64,
}

/// Inverted rows together with per-column sentinel tallies.
#[derive(Debug, Clone)]
pub struct InverseResult {
    pub table: DataTable,
    pub sentinels: Vec<SentinelCounts>,
}

impl InverseResult {
    pub fn total_out_of_index(&self) -> u64 {
        self.sentinels.iter().map(|s| s.out_of_index).sum()
    }

    pub fn total_malformed(&self) -> u64 {
        self.sentinels.iter().map(|s| s.malformed).sum()
    }
}

/// Column positions of the pipeline's schema inside a dataset header.
#[derive(Debug, Clone)]
pub struct ColumnBinding(Vec<usize>);

/// Serializable preprocessing state fitted to one training dataset.
///
/// Numeric columns pass through their quantile map directly (missing values
/// imputed with the stored training mean); categorical columns are label ->
/// index -> bit code -> per-bit log-clamp -> per-dimension quantile map. The
/// output layout places all numeric dimensions first, then each categorical
/// column's bit dimensions, in schema order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline<T> {
    format: String,
    version: u32,
    schemas: Vec<ColumnSchema>,
    /// Per schema column: the fitted vocabulary for categorical columns.
    spaces: Vec<Option<CategorySpace>>,
    /// Per schema column: the imputation mean for numerical columns.
    numeric_fill: Vec<Option<T>>,
    /// One map per output dimension, in layout order.
    quantile_maps: Vec<QuantileMap<T>>,
    layout: Vec<LayoutEntry>,
    clamp_floor: T,
}

impl<T: Real> FittedPipeline<T> {
    /// Fits the pipeline with default options.
    pub fn fit(table: &DataTable, schemas: &[ColumnSchema]) -> Result<Self, PipelineError> {
        Self::fit_with_options(table, schemas, FitOptions::default())
    }

    pub fn fit_with_options(
        table: &DataTable,
        schemas: &[ColumnSchema],
        options: FitOptions<T>,
    ) -> Result<Self, PipelineError> {
        if table.row_count() == 0 {
            return Err(PipelineError::EmptyDataset);
        }
        let mut seen = HashMap::new();
        for schema in schemas {
            schema.validate()?;
            if seen.insert(schema.name.clone(), ()).is_some() {
                return Err(PipelineError::DuplicateSchemaColumn(schema.name.clone()));
            }
        }
        let binding = bind_schemas(schemas, table.header())?;
        let row_count = table.row_count();
        let max_knots = options.max_knots.min(row_count).max(1);
        let floor_log = options.clamp_floor.ln();

        let mut spaces: Vec<Option<CategorySpace>> = vec![None; schemas.len()];
        let mut numeric_fill: Vec<Option<T>> = vec![None; schemas.len()];
        let mut numeric_values: Vec<Option<Vec<T>>> = vec![None; schemas.len()];

        for (schema_idx, schema) in schemas.iter().enumerate() {
            let col = binding.0[schema_idx];
            match schema.kind {
                ColumnKind::Numerical => {
                    let mut present_sum = T::zero();
                    let mut present_count = 0usize;
                    let mut parsed: Vec<Option<T>> = Vec::with_capacity(row_count);
                    for row in table.rows() {
                        let value = parse_numeric::<T>(&schema.name, &row[col])?;
                        if let Some(v) = value {
                            present_sum = present_sum + v;
                            present_count += 1;
                        }
                        parsed.push(value);
                    }
                    if present_count == 0 {
                        return Err(PipelineError::AllMissing(schema.name.clone()));
                    }
                    let mean =
                        present_sum / T::from_usize(present_count).expect("count fits scalar");
                    numeric_fill[schema_idx] = Some(mean);
                    numeric_values[schema_idx] =
                        Some(parsed.into_iter().map(|v| v.unwrap_or(mean)).collect());
                }
                ColumnKind::Categorical { min_frequency, .. } => {
                    let space =
                        fit_category_space(table, col, &schema.name, min_frequency, row_count)?;
                    spaces[schema_idx] = Some(space);
                }
            }
        }

        // Output layout: numeric dimensions first, then categorical bit
        // dimensions, each group in schema order.
        let mut layout = Vec::with_capacity(schemas.len());
        let mut cursor = 0usize;
        for schema in schemas.iter().filter(|s| !s.is_categorical()) {
            layout.push(LayoutEntry {
                column: schema.name.clone(),
                start: cursor,
                end: cursor + 1,
            });
            cursor += 1;
        }
        for (schema_idx, schema) in schemas.iter().enumerate() {
            let ColumnKind::Categorical { scheme, .. } = schema.kind else {
                continue;
            };
            let width = spaces[schema_idx]
                .as_ref()
                .expect("categorical space fitted")
                .width(scheme);
            layout.push(LayoutEntry {
                column: schema.name.clone(),
                start: cursor,
                end: cursor + width,
            });
            cursor += width;
        }

        // One quantile map per output dimension.
        let mut quantile_maps = Vec::with_capacity(cursor);
        for (schema_idx, schema) in schemas.iter().enumerate() {
            if schema.is_categorical() {
                continue;
            }
            let values = numeric_values[schema_idx]
                .as_ref()
                .expect("numeric values collected");
            quantile_maps.push(QuantileMap::fit(values, max_knots)?);
        }
        for (schema_idx, schema) in schemas.iter().enumerate() {
            let ColumnKind::Categorical { scheme, .. } = schema.kind else {
                continue;
            };
            let space = spaces[schema_idx].as_ref().expect("space fitted");
            let col = binding.0[schema_idx];
            let width = space.width(scheme);
            let mut per_dim: Vec<Vec<T>> = vec![Vec::with_capacity(row_count); width];
            for row in table.rows() {
                let index = lookup_index(space, &schema.name, &row[col])?;
                let bits = encode_bits(space, scheme, index)?;
                for (dim, bit) in bits.iter().enumerate() {
                    per_dim[dim].push(if *bit == 1 { T::zero() } else { floor_log });
                }
            }
            for dim_values in per_dim {
                quantile_maps.push(QuantileMap::fit(&dim_values, max_knots)?);
            }
        }

        Ok(Self {
            format: PIPELINE_FORMAT.to_string(),
            version: PIPELINE_VERSION,
            schemas: schemas.to_vec(),
            spaces,
            numeric_fill,
            quantile_maps,
            layout,
            clamp_floor: options.clamp_floor,
        })
    }

    pub fn schemas(&self) -> &[ColumnSchema] {
        &self.schemas
    }

    pub fn layout(&self) -> &[LayoutEntry] {
        &self.layout
    }

    pub fn clamp_floor(&self) -> T {
        self.clamp_floor
    }

    /// Pre-quantile values a clear and a set bit map to: `(ln(clamp_floor), 0)`.
    pub fn bit_levels(&self) -> (T, T) {
        (self.clamp_floor.ln(), T::zero())
    }

    /// Midpoint between the two bit levels; inversion sets a bit when its
    /// de-quantiled value is at or above this.
    pub fn bit_threshold(&self) -> T {
        let (low, high) = self.bit_levels();
        (low + high) / T::c(2.0)
    }

    /// Fitted vocabulary of a categorical column.
    pub fn space(&self, column: &str) -> Option<&CategorySpace> {
        self.schemas
            .iter()
            .position(|s| s.name == column)
            .and_then(|idx| self.spaces[idx].as_ref())
    }

    pub fn output_width(&self) -> usize {
        self.layout.last().map_or(0, |entry| entry.end)
    }

    /// Name of each output dimension: the column name for numeric dimensions,
    /// `name[i]` for the i-th bit of a categorical column.
    pub fn dimension_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.output_width());
        for entry in &self.layout {
            let width = entry.end - entry.start;
            if width == 1 && !self.is_categorical_column(&entry.column) {
                names.push(entry.column.clone());
            } else {
                for i in 0..width {
                    names.push(format!("{}[{i}]", entry.column));
                }
            }
        }
        names
    }

    fn is_categorical_column(&self, name: &str) -> bool {
        self.schemas
            .iter()
            .any(|s| s.name == name && s.is_categorical())
    }

    /// Resolves the pipeline's columns inside a dataset header.
    pub fn bind(&self, header: &[String]) -> Result<ColumnBinding, PipelineError> {
        bind_schemas(&self.schemas, header)
    }

    /// Transforms one record (in dataset-header order per `binding`).
    pub fn transform_record(
        &self,
        binding: &ColumnBinding,
        fields: &[String],
    ) -> Result<Vec<T>, PipelineError> {
        let floor_log = self.clamp_floor.ln();
        let mut out = vec![T::zero(); self.output_width()];
        let mut numeric_dim = 0usize;
        // Numeric dimensions come first in layout order.
        for (schema_idx, schema) in self.schemas.iter().enumerate() {
            if schema.is_categorical() {
                continue;
            }
            let raw = &fields[binding.0[schema_idx]];
            let value = match parse_numeric::<T>(&schema.name, raw)? {
                Some(v) => v,
                None => self.numeric_fill[schema_idx].expect("numeric mean stored"),
            };
            out[numeric_dim] = self.quantile_maps[numeric_dim].transform(value);
            numeric_dim += 1;
        }
        let mut dim = numeric_dim;
        for (schema_idx, schema) in self.schemas.iter().enumerate() {
            let ColumnKind::Categorical { scheme, .. } = schema.kind else {
                continue;
            };
            let space = self.spaces[schema_idx].as_ref().expect("space fitted");
            let index = lookup_index(space, &schema.name, &fields[binding.0[schema_idx]])?;
            let bits = encode_bits(space, scheme, index)?;
            for bit in bits {
                let raw = if bit == 1 { T::zero() } else { floor_log };
                out[dim] = self.quantile_maps[dim].transform(raw);
                dim += 1;
            }
        }
        debug_assert_eq!(dim, self.output_width());
        Ok(out)
    }

    /// Transforms a whole table into the real-valued matrix.
    pub fn transform(&self, table: &DataTable) -> Result<Matrix<T>, PipelineError> {
        let binding = self.bind(table.header())?;
        let mut rows = Vec::with_capacity(table.row_count());
        for record in table.rows() {
            rows.push(self.transform_record(&binding, record)?);
        }
        Matrix::from_rows(rows, self.output_width())
    }

    /// Inverts one matrix row back to field values in schema order, updating
    /// the sentinel tallies (which must be aligned with the categorical
    /// columns, as produced by [`FittedPipeline::new_sentinel_counts`]).
    pub fn inverse_record(
        &self,
        values: &[T],
        sentinels: &mut [SentinelCounts],
    ) -> Result<Vec<String>, PipelineError> {
        if values.len() != self.output_width() {
            return Err(PipelineError::WidthMismatch {
                expected: self.output_width(),
                actual: values.len(),
            });
        }
        let threshold = self.bit_threshold();
        let mut fields = vec![String::new(); self.schemas.len()];
        let mut numeric_dim = 0usize;
        for (schema_idx, schema) in self.schemas.iter().enumerate() {
            if schema.is_categorical() {
                continue;
            }
            let value = self.quantile_maps[numeric_dim].inverse(values[numeric_dim]);
            fields[schema_idx] = format!("{}", value.as_f64());
            numeric_dim += 1;
        }
        let mut dim = numeric_dim;
        let mut cat_idx = 0usize;
        for (schema_idx, schema) in self.schemas.iter().enumerate() {
            let ColumnKind::Categorical { scheme, .. } = schema.kind else {
                continue;
            };
            let space = self.spaces[schema_idx].as_ref().expect("space fitted");
            let width = space.width(scheme);
            let mut bits = Vec::with_capacity(width);
            for offset in 0..width {
                let raw = self.quantile_maps[dim + offset].inverse(values[dim + offset]);
                bits.push(if raw >= threshold { 1u8 } else { 0u8 });
            }
            dim += width;
            let label = match decode_bits(space, scheme, bits)? {
                DecodedIndex::Index(index) => space
                    .label_of(index)
                    .expect("decoded index within the space")
                    .to_string(),
                DecodedIndex::OutOfIndex => {
                    sentinels[cat_idx].out_of_index += 1;
                    OUT_OF_INDEX_LABEL.to_string()
                }
                DecodedIndex::Malformed => {
                    sentinels[cat_idx].malformed += 1;
                    MALFORMED_LABEL.to_string()
                }
            };
            fields[schema_idx] = label;
            cat_idx += 1;
        }
        Ok(fields)
    }

    /// Fresh zeroed sentinel tallies, one per categorical column.
    pub fn new_sentinel_counts(&self) -> Vec<SentinelCounts> {
        self.schemas
            .iter()
            .filter(|s| s.is_categorical())
            .map(|s| SentinelCounts {
                column: s.name.clone(),
                out_of_index: 0,
                malformed: 0,
            })
            .collect()
    }

    /// Inverts a transformed matrix back into rows (schema column order).
    pub fn inverse_transform(&self, matrix: &Matrix<T>) -> Result<InverseResult, PipelineError> {
        if matrix.cols() != self.output_width() {
            return Err(PipelineError::WidthMismatch {
                expected: self.output_width(),
                actual: matrix.cols(),
            });
        }
        let mut sentinels = self.new_sentinel_counts();
        let mut rows = Vec::with_capacity(matrix.rows());
        for row in matrix.iter_rows() {
            rows.push(self.inverse_record(row, &mut sentinels)?);
        }
        let header = self.schemas.iter().map(|s| s.name.clone()).collect();
        Ok(InverseResult {
            table: DataTable::new(header, rows)?,
            sentinels,
        })
    }

    /// Serializes to the versioned JSON document. The output is deterministic:
    /// fitting identical data with identical schemas yields identical bytes.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("pipeline serialization cannot fail")
    }

    /// Loads and validates a pipeline document.
    pub fn from_json(json: &str) -> Result<Self, PipelineError> {
        let pipeline: Self = serde_json::from_str(json)?;
        pipeline.validate()?;
        Ok(pipeline)
    }

    fn validate(&self) -> Result<(), PipelineError> {
        if self.format != PIPELINE_FORMAT {
            return Err(PipelineError::InvalidDocument(format!(
                "format {:?} is not {PIPELINE_FORMAT:?}",
                self.format
            )));
        }
        if self.version != PIPELINE_VERSION {
            return Err(PipelineError::UnsupportedVersion(self.version));
        }
        if self.spaces.len() != self.schemas.len() || self.numeric_fill.len() != self.schemas.len()
        {
            return Err(PipelineError::InvalidDocument(
                "spaces/numeric_fill are not aligned with the schemas".into(),
            ));
        }
        if !(self.clamp_floor > T::zero()) {
            return Err(PipelineError::InvalidDocument(
                "clamp_floor must be positive".into(),
            ));
        }
        for (schema, (space, fill)) in self
            .schemas
            .iter()
            .zip(self.spaces.iter().zip(self.numeric_fill.iter()))
        {
            schema.validate()?;
            match schema.kind {
                ColumnKind::Numerical => {
                    if space.is_some() || fill.is_none() {
                        return Err(PipelineError::InvalidDocument(format!(
                            "numerical column {:?} must carry a fill value and no space",
                            schema.name
                        )));
                    }
                }
                ColumnKind::Categorical { .. } => {
                    if space.is_none() || fill.is_some() {
                        return Err(PipelineError::InvalidDocument(format!(
                            "categorical column {:?} must carry a space and no fill value",
                            schema.name
                        )));
                    }
                }
            }
        }
        // Layout must tile [0, width) exactly, in order.
        let mut cursor = 0usize;
        for entry in &self.layout {
            if entry.start != cursor || entry.end < entry.start {
                return Err(PipelineError::InvalidDocument(
                    "layout ranges must be contiguous and ordered".into(),
                ));
            }
            cursor = entry.end;
        }
        if self.quantile_maps.len() != cursor {
            return Err(PipelineError::InvalidDocument(format!(
                "{} quantile maps for an output width of {cursor}",
                self.quantile_maps.len()
            )));
        }
        for map in &self.quantile_maps {
            map.validate()?;
        }
        Ok(())
    }
}

fn bind_schemas(
    schemas: &[ColumnSchema],
    header: &[String],
) -> Result<ColumnBinding, PipelineError> {
    let mut indices = Vec::with_capacity(schemas.len());
    for schema in schemas {
        let idx = header
            .iter()
            .position(|h| *h == schema.name)
            .ok_or_else(|| PipelineError::UnknownColumn(schema.name.clone()))?;
        indices.push(idx);
    }
    Ok(ColumnBinding(indices))
}

fn parse_numeric<T: Real>(column: &str, raw: &str) -> Result<Option<T>, PipelineError> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Ok(None);
    }
    trimmed
        .parse::<f64>()
        .map(|v| Some(T::c(v)))
        .map_err(|_| PipelineError::InvalidNumber {
            column: column.to_string(),
            value: raw.to_string(),
        })
}

/// Builds the vocabulary of one categorical column: frequency counting, rare
/// masking, then first-occurrence ordering (the masked catch-all takes the
/// position of the first masked value).
fn fit_category_space(
    table: &DataTable,
    col: usize,
    column: &str,
    min_frequency: f64,
    row_count: usize,
) -> Result<CategorySpace, PipelineError> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for row in table.rows() {
        *counts.entry(row[col].as_str()).or_insert(0) += 1;
    }
    let threshold = min_frequency * row_count as f64;
    let is_masked = |label: &str| (counts[label] as f64) < threshold;

    let any_masked = counts.keys().any(|label| is_masked(label));
    if any_masked && counts.contains_key(MASKED_LABEL) && !is_masked(MASKED_LABEL) {
        return Err(PipelineError::ReservedLabel {
            column: column.to_string(),
            label: MASKED_LABEL.to_string(),
        });
    }

    let mut ordered: Vec<String> = Vec::new();
    let mut seen: HashMap<String, ()> = HashMap::new();
    for row in table.rows() {
        let raw = row[col].as_str();
        let effective = if any_masked && is_masked(raw) {
            MASKED_LABEL
        } else {
            raw
        };
        if seen.insert(effective.to_string(), ()).is_none() {
            ordered.push(effective.to_string());
        }
    }
    let masked_label = any_masked.then(|| MASKED_LABEL.to_string());
    Ok(CategorySpace::from_labels(ordered, masked_label)?)
}

fn lookup_index(
    space: &CategorySpace,
    column: &str,
    label: &str,
) -> Result<usize, PipelineError> {
    if let Some(index) = space.index_of(label) {
        return Ok(index);
    }
    if let Some(masked) = space.masked_index() {
        return Ok(masked);
    }
    Err(PipelineError::UnknownLabel {
        column: column.to_string(),
        label: label.to_string(),
    })
}

fn encode_bits(
    space: &CategorySpace,
    scheme: Scheme,
    index: usize,
) -> Result<Vec<u8>, PipelineError> {
    let bits = match scheme {
        Scheme::OneHot => encode_onehot(index, space.class_count())?.into_bits(),
        Scheme::Binary => encode_binary(index, space.class_count())?.into_bits(),
        Scheme::ResBit => space.encode_resbit(index)?.into_bits(),
    };
    Ok(bits)
}

enum DecodedIndex {
    Index(usize),
    OutOfIndex,
    Malformed,
}

fn decode_bits(
    space: &CategorySpace,
    scheme: Scheme,
    bits: Vec<u8>,
) -> Result<DecodedIndex, PipelineError> {
    use crate::encoding::EncodingError;
    match scheme {
        Scheme::ResBit => {
            let code = ResBitCode::from_bits(bits)?;
            Ok(DecodedIndex::Index(space.decode_resbit(&code)?))
        }
        Scheme::Binary => {
            let code = BinaryCode::from_bits(bits)?;
            match decode_binary(&code, space.class_count())? {
                BinaryDecode::Index(i) => Ok(DecodedIndex::Index(i)),
                BinaryDecode::OutOfIndex(_) => Ok(DecodedIndex::OutOfIndex),
            }
        }
        Scheme::OneHot => {
            let code = OneHotCode::from_bits(bits)?;
            match decode_onehot(&code, space.class_count()) {
                Ok(i) => Ok(DecodedIndex::Index(i)),
                Err(EncodingError::MalformedOneHot { .. }) => Ok(DecodedIndex::Malformed),
                Err(other) => Err(other.into()),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(csv: &str) -> DataTable {
        DataTable::read_csv(csv.as_bytes(), b',').unwrap()
    }

    fn simple_schemas() -> Vec<ColumnSchema> {
        vec![
            ColumnSchema::numerical("x"),
            ColumnSchema::categorical("c", Scheme::ResBit, 0.0),
        ]
    }

    #[test]
    fn masking_follows_the_frequency_threshold() {
        let data = table("c\na\na\na\nb\n");
        let schemas = vec![ColumnSchema::categorical("c", Scheme::ResBit, 0.3)];
        let pipeline = FittedPipeline::<f64>::fit(&data, &schemas).unwrap();
        let space = pipeline.space("c").unwrap();
        assert_eq!(space.class_count(), 2);
        assert_eq!(space.labels(), &["a".to_string(), MASKED_LABEL.to_string()]);
        assert_eq!(space.masked_index(), Some(1));
    }

    #[test]
    fn zero_min_frequency_masks_nothing() {
        let data = table("c\na\nb\nc\na\n");
        let schemas = vec![ColumnSchema::categorical("c", Scheme::Binary, 0.0)];
        let pipeline = FittedPipeline::<f64>::fit(&data, &schemas).unwrap();
        let space = pipeline.space("c").unwrap();
        assert_eq!(space.class_count(), 3);
        assert_eq!(space.masked_label(), None);
    }

    #[test]
    fn vocabulary_uses_first_occurrence_order() {
        let data = table("c\nz\ny\nz\nx\n");
        let schemas = vec![ColumnSchema::categorical("c", Scheme::OneHot, 0.0)];
        let pipeline = FittedPipeline::<f64>::fit(&data, &schemas).unwrap();
        let labels: Vec<&str> = pipeline
            .space("c")
            .unwrap()
            .labels()
            .iter()
            .map(String::as_str)
            .collect();
        assert_eq!(labels, vec!["z", "y", "x"]);
    }

    #[test]
    fn constant_numeric_column_maps_to_zero() {
        let data = table("x,c\n7.5,a\n7.5,b\n");
        let pipeline = FittedPipeline::<f64>::fit(&data, &simple_schemas()).unwrap();
        let matrix = pipeline.transform(&data).unwrap();
        assert_eq!(matrix.row(0)[0], 0.0);
        assert_eq!(matrix.row(1)[0], 0.0);
    }

    #[test]
    fn bit_levels_follow_the_log_clamp() {
        let data = table("x,c\n1.0,a\n2.0,b\n");
        let pipeline = FittedPipeline::<f64>::fit(&data, &simple_schemas()).unwrap();
        let (low, high) = pipeline.bit_levels();
        assert_eq!(high, 0.0);
        assert!((low - (-69.077_552_789_821_37)).abs() < 1e-12);
        assert!((pipeline.bit_threshold() - low / 2.0).abs() < 1e-12);
    }

    #[test]
    fn round_trip_recovers_labels_and_numerics() {
        let data = table(
            "x,c\n1.5,a\n-2.25,b\n0.0,c\n3.75,a\n10.5,b\n-7.125,c\n2.5,a\n0.5,d\n",
        );
        let pipeline = FittedPipeline::<f64>::fit(&data, &simple_schemas()).unwrap();
        let matrix = pipeline.transform(&data).unwrap();
        let inverse = pipeline.inverse_transform(&matrix).unwrap();
        assert_eq!(inverse.total_out_of_index(), 0);
        assert_eq!(inverse.total_malformed(), 0);
        for (original, recovered) in data.rows().iter().zip(inverse.table.rows()) {
            assert_eq!(original[1], recovered[1], "labels must round-trip exactly");
            let x: f64 = original[0].parse().unwrap();
            let back: f64 = recovered[0].parse().unwrap();
            assert!(
                (x - back).abs() <= 1e-6 * x.abs().max(1.0),
                "{x} came back as {back}"
            );
        }
    }

    #[test]
    fn missing_values_are_a_category_and_mean_filled() {
        let data = table("x,c\n1.0,a\n,\n3.0,a\n");
        let pipeline = FittedPipeline::<f64>::fit(&data, &simple_schemas()).unwrap();
        // Missing categorical is its own category.
        let space = pipeline.space("c").unwrap();
        assert_eq!(space.class_count(), 2);
        assert_eq!(space.index_of(""), Some(1));
        // Missing numeric imputed with the mean of 1 and 3.
        let matrix = pipeline.transform(&data).unwrap();
        let inverse = pipeline.inverse_transform(&matrix).unwrap();
        let filled: f64 = inverse.table.rows()[1][0].parse().unwrap();
        assert!((filled - 2.0).abs() < 1e-9);
        assert_eq!(inverse.table.rows()[1][1], "");
    }

    #[test]
    fn all_missing_numeric_column_is_rejected() {
        let data = table("x,c\n,a\n,b\n");
        let err = FittedPipeline::<f64>::fit(&data, &simple_schemas());
        assert!(matches!(err, Err(PipelineError::AllMissing(c)) if c == "x"));
    }

    #[test]
    fn unseen_label_errors_without_masking() {
        let train = table("x,c\n1.0,a\n2.0,b\n");
        let pipeline = FittedPipeline::<f64>::fit(&train, &simple_schemas()).unwrap();
        let test = table("x,c\n1.0,zzz\n");
        let err = pipeline.transform(&test);
        assert!(matches!(
            err,
            Err(PipelineError::UnknownLabel { column, label })
                if column == "c" && label == "zzz"
        ));
    }

    #[test]
    fn unseen_label_maps_to_the_masked_category() {
        let train = table("c\na\na\na\na\nrare\n");
        let schemas = vec![ColumnSchema::categorical("c", Scheme::ResBit, 0.25)];
        let pipeline = FittedPipeline::<f64>::fit(&train, &schemas).unwrap();
        let test = table("c\nnever-seen\n");
        let matrix = pipeline.transform(&test).unwrap();
        let inverse = pipeline.inverse_transform(&matrix).unwrap();
        assert_eq!(inverse.table.rows()[0][0], MASKED_LABEL);
    }

    #[test]
    fn serialization_round_trip_preserves_transform_bytes() {
        let data = table("x,c\n1.5,a\n2.5,b\n3.5,c\n4.5,a\n");
        let pipeline = FittedPipeline::<f64>::fit(&data, &simple_schemas()).unwrap();
        let json = pipeline.to_json();
        let reloaded = FittedPipeline::<f64>::from_json(&json).unwrap();
        assert_eq!(reloaded, pipeline);
        assert_eq!(reloaded.to_json(), json);
        let a = pipeline.transform(&data).unwrap();
        let b = reloaded.transform(&data).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fitting_twice_is_byte_identical() {
        let data = table("x,c\n9.0,u\n8.0,v\n7.0,u\n");
        let a = FittedPipeline::<f64>::fit(&data, &simple_schemas()).unwrap();
        let b = FittedPipeline::<f64>::fit(&data, &simple_schemas()).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn raising_min_frequency_never_increases_cardinality() {
        let data = table("c\na\na\na\na\nb\nb\nc\n");
        let mut previous = usize::MAX;
        for mf in [0.0, 0.1, 0.2, 0.3, 0.5, 0.9] {
            let schemas = vec![ColumnSchema::categorical("c", Scheme::ResBit, mf)];
            let pipeline = FittedPipeline::<f64>::fit(&data, &schemas).unwrap();
            let m = pipeline.space("c").unwrap().class_count();
            assert!(m <= previous, "mf = {mf} raised M to {m}");
            previous = m;
        }
    }

    #[test]
    fn width_mismatch_is_a_shape_error() {
        let data = table("x,c\n1.0,a\n2.0,b\n");
        let pipeline = FittedPipeline::<f64>::fit(&data, &simple_schemas()).unwrap();
        let narrow = Matrix::from_rows(vec![vec![0.0f64]], 1).unwrap();
        assert!(matches!(
            pipeline.inverse_transform(&narrow),
            Err(PipelineError::WidthMismatch { .. })
        ));
    }

    #[test]
    fn layout_tiles_the_output_width() {
        let data = table("x,c,y\n1.0,a,5.0\n2.0,b,6.0\n");
        let schemas = vec![
            ColumnSchema::numerical("x"),
            ColumnSchema::categorical("c", Scheme::OneHot, 0.0),
            ColumnSchema::numerical("y"),
        ];
        let pipeline = FittedPipeline::<f64>::fit(&data, &schemas).unwrap();
        // Numerics first (x then y), then the one-hot bits of c.
        let layout = pipeline.layout();
        assert_eq!(layout[0].column, "x");
        assert_eq!((layout[0].start, layout[0].end), (0, 1));
        assert_eq!(layout[1].column, "y");
        assert_eq!((layout[1].start, layout[1].end), (1, 2));
        assert_eq!(layout[2].column, "c");
        assert_eq!((layout[2].start, layout[2].end), (2, 4));
        assert_eq!(pipeline.output_width(), 4);
        assert_eq!(pipeline.dimension_names(), vec!["x", "y", "c[0]", "c[1]"]);
    }
}
