use std::collections::HashSet;

use serde::Serialize;

use super::schema::{ColumnKind, ColumnSchema};
use super::table::DataTable;
use super::{FittedPipeline, PipelineError};
use crate::encoding::{dims, Scheme};
use crate::real::Real;

/// Distinct-value count and projected code widths for one categorical column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ColumnCardinality {
    pub column: String,
    pub cardinality: usize,
    pub onehot_dims: usize,
    pub binary_dims: usize,
    pub resbit_dims: usize,
}

/// Cardinality survey of a dataset's categorical columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SurveyReport {
    pub columns: Vec<ColumnCardinality>,
    pub total_cardinality: usize,
    pub total_onehot_dims: usize,
    pub total_binary_dims: usize,
    pub total_resbit_dims: usize,
}

/// Counts distinct values per categorical column (missing values count as one
/// more category) and projects the per-scheme encoded widths.
pub fn cardinality_survey(
    table: &DataTable,
    schemas: &[ColumnSchema],
) -> Result<SurveyReport, PipelineError> {
    let mut columns = Vec::new();
    for schema in schemas {
        if !schema.is_categorical() {
            continue;
        }
        let values = table.column(&schema.name)?;
        let distinct: HashSet<&str> = values.into_iter().collect();
        let m = distinct.len();
        if m == 0 {
            return Err(PipelineError::EmptyDataset);
        }
        columns.push(ColumnCardinality {
            column: schema.name.clone(),
            cardinality: m,
            onehot_dims: dims(m, Scheme::OneHot)?,
            binary_dims: dims(m, Scheme::Binary)?,
            resbit_dims: dims(m, Scheme::ResBit)?,
        });
    }
    Ok(SurveyReport {
        total_cardinality: columns.iter().map(|c| c.cardinality).sum(),
        total_onehot_dims: columns.iter().map(|c| c.onehot_dims).sum(),
        total_binary_dims: columns.iter().map(|c| c.binary_dims).sum(),
        total_resbit_dims: columns.iter().map(|c| c.resbit_dims).sum(),
        columns,
    })
}

/// Coverage of one column: distinct labels generated vs. fitted cardinality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnCoverage {
    pub column: String,
    pub training_cardinality: usize,
    pub generated_cardinality: usize,
    pub ratio: f64,
}

/// Per-column coverage ratios and their mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub columns: Vec<ColumnCoverage>,
    pub mean: f64,
}

/// Ratio of distinct labels in `generated` to the fitted training cardinality,
/// per categorical column. A generator that reproduces the training diversity
/// scores 1.0; a collapsed generator scores `1/M`. Labels absent from the
/// training vocabulary (including sentinels) still count as distinct values,
/// so the ratio may exceed 1.
pub fn coverage_ratio<T: Real>(
    generated: &DataTable,
    pipeline: &FittedPipeline<T>,
) -> Result<CoverageReport, PipelineError> {
    let mut columns = Vec::new();
    for schema in pipeline.schemas() {
        let ColumnKind::Categorical { .. } = schema.kind else {
            continue;
        };
        let space = pipeline
            .space(&schema.name)
            .expect("fitted pipeline has a space per categorical column");
        let values = generated.column(&schema.name)?;
        let distinct: HashSet<&str> = values.into_iter().collect();
        let training = space.class_count();
        columns.push(ColumnCoverage {
            column: schema.name.clone(),
            training_cardinality: training,
            generated_cardinality: distinct.len(),
            ratio: distinct.len() as f64 / training as f64,
        });
    }
    let mean = if columns.is_empty() {
        // No categorical columns: coverage is vacuously perfect.
        1.0
    } else {
        columns.iter().map(|c| c.ratio).sum::<f64>() / columns.len() as f64
    };
    Ok(CoverageReport { columns, mean })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(csv: &str) -> DataTable {
        DataTable::read_csv(csv.as_bytes(), b',').unwrap()
    }

    #[test]
    fn survey_counts_distinct_values_and_widths() {
        let data = table("n,a,b\n1,x,p\n2,y,q\n3,x,r\n4,z,p\n");
        let schemas = vec![
            ColumnSchema::numerical("n"),
            ColumnSchema::categorical("a", Scheme::ResBit, 0.0),
            ColumnSchema::categorical("b", Scheme::ResBit, 0.0),
        ];
        let report = cardinality_survey(&data, &schemas).unwrap();
        assert_eq!(report.columns.len(), 2);
        assert_eq!(report.columns[0].cardinality, 3);
        assert_eq!(report.columns[1].cardinality, 3);
        assert_eq!(report.total_cardinality, 6);
        assert_eq!(report.columns[0].onehot_dims, 3);
        assert_eq!(report.columns[0].binary_dims, 2);
        assert_eq!(report.columns[0].resbit_dims, 2);
    }

    #[test]
    fn survey_with_no_categorical_columns_is_zero() {
        let data = table("n\n1\n2\n");
        let schemas = vec![ColumnSchema::numerical("n")];
        let report = cardinality_survey(&data, &schemas).unwrap();
        assert!(report.columns.is_empty());
        assert_eq!(report.total_cardinality, 0);
    }

    #[test]
    fn coverage_of_training_data_is_exactly_one() {
        let data = table("c\na\nb\nc\na\n");
        let schemas = vec![ColumnSchema::categorical("c", Scheme::ResBit, 0.0)];
        let pipeline = FittedPipeline::<f64>::fit(&data, &schemas).unwrap();
        let report = coverage_ratio(&data, &pipeline).unwrap();
        assert_eq!(report.columns[0].ratio, 1.0);
        assert_eq!(report.mean, 1.0);
    }

    #[test]
    fn collapsed_generator_scores_one_over_m() {
        let train = table("c\na\nb\nc\nd\n");
        let schemas = vec![ColumnSchema::categorical("c", Scheme::ResBit, 0.0)];
        let pipeline = FittedPipeline::<f64>::fit(&train, &schemas).unwrap();
        let collapsed = table("c\na\na\na\na\na\na\n");
        let report = coverage_ratio(&collapsed, &pipeline).unwrap();
        assert_eq!(report.columns[0].ratio, 0.25);
        assert_eq!(report.mean, 0.25);
    }
}
