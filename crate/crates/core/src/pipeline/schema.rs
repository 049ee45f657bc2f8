use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::encoding::Scheme;

/// Role of one dataset column in the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ColumnKind {
    Numerical,
    Categorical {
        scheme: Scheme,
        /// Labels with frequency/row_count strictly below this fraction are
        /// replaced by the masked catch-all category. Must lie in `[0, 1)`.
        #[serde(default)]
        min_frequency: f64,
    },
}

/// Declared kind, scheme, and masking threshold for one column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    #[serde(flatten)]
    pub kind: ColumnKind,
}

impl ColumnSchema {
    pub fn numerical(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Numerical,
        }
    }

    pub fn categorical(name: impl Into<String>, scheme: Scheme, min_frequency: f64) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Categorical {
                scheme,
                min_frequency,
            },
        }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, ColumnKind::Categorical { .. })
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if let ColumnKind::Categorical { min_frequency, .. } = self.kind {
            if !(0.0..1.0).contains(&min_frequency) {
                return Err(PipelineError::InvalidMinFrequency {
                    column: self.name.clone(),
                    value: min_frequency,
                });
            }
        }
        Ok(())
    }
}

/// On-disk schema document: `{"columns": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaFile {
    pub columns: Vec<ColumnSchema>,
}

impl SchemaFile {
    pub fn from_json(json: &str) -> Result<Self, PipelineError> {
        let file: SchemaFile = serde_json::from_str(json)?;
        for column in &file.columns {
            column.validate()?;
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serialization cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_json() {
        let json = r#"{
            "columns": [
                {"name": "age", "kind": "numerical"},
                {"name": "state", "kind": "categorical", "scheme": "resbit", "min_frequency": 0.01},
                {"name": "flag", "kind": "categorical", "scheme": "onehot"}
            ]
        }"#;
        let file = SchemaFile::from_json(json).unwrap();
        assert_eq!(file.columns.len(), 3);
        assert_eq!(file.columns[0], ColumnSchema::numerical("age"));
        assert_eq!(
            file.columns[1],
            ColumnSchema::categorical("state", Scheme::ResBit, 0.01)
        );
        // min_frequency defaults to zero.
        assert_eq!(
            file.columns[2],
            ColumnSchema::categorical("flag", Scheme::OneHot, 0.0)
        );
    }

    #[test]
    fn rejects_min_frequency_of_one() {
        let json = r#"{"columns": [
            {"name": "c", "kind": "categorical", "scheme": "binary", "min_frequency": 1.0}
        ]}"#;
        assert!(matches!(
            SchemaFile::from_json(json),
            Err(PipelineError::InvalidMinFrequency { .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let file = SchemaFile {
            columns: vec![
                ColumnSchema::numerical("x"),
                ColumnSchema::categorical("y", Scheme::Binary, 0.25),
            ],
        };
        let back = SchemaFile::from_json(&file.to_json()).unwrap();
        assert_eq!(back, file);
    }
}
