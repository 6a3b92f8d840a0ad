use std::fmt;

use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ot::OperationKind;

/// Question type of a sampled tree, fixing its root kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuestionType {
    List,
    Sum,
    Count,
    Average,
    Boolean,
}

impl QuestionType {
    pub const ALL: [QuestionType; 5] = [
        QuestionType::List,
        QuestionType::Sum,
        QuestionType::Count,
        QuestionType::Average,
        QuestionType::Boolean,
    ];

    pub fn root_kind(self) -> OperationKind {
        match self {
            QuestionType::List => OperationKind::Done,
            QuestionType::Sum => OperationKind::Sum,
            QuestionType::Count => OperationKind::Count,
            QuestionType::Average => OperationKind::Average,
            QuestionType::Boolean => OperationKind::IsEmpty,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            QuestionType::List => "list",
            QuestionType::Sum => "sum",
            QuestionType::Count => "count",
            QuestionType::Average => "average",
            QuestionType::Boolean => "boolean",
        }
    }
}

impl fmt::Display for QuestionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Inclusive integer range; a bare number in JSON means a fixed value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CountRange {
    Fixed(usize),
    Between { min: usize, max: usize },
}

impl CountRange {
    pub fn min(self) -> usize {
        match self {
            CountRange::Fixed(n) => n,
            CountRange::Between { min, .. } => min,
        }
    }

    pub fn max(self) -> usize {
        match self {
            CountRange::Fixed(n) => n,
            CountRange::Between { max, .. } => max,
        }
    }

    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> usize {
        let (lo, hi) = (self.min(), self.max());
        if lo >= hi {
            lo
        } else {
            rng.random_range(lo..=hi)
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{field} must lie in [0, 1], got {value}")]
    Probability { field: &'static str, value: f64 },
    #[error("{field}: min {min} exceeds max {max}")]
    EmptyRange {
        field: &'static str,
        min: usize,
        max: usize,
    },
    #[error("path_length must be at least 1")]
    ZeroPathLength,
    #[error("max_filters_per_table ({per_table}) exceeds max_total_filters ({total})")]
    PerTableExceedsTotal { per_table: usize, total: usize },
    #[error("max_attempts must be at least 1")]
    ZeroAttempts,
    #[error("result_attributes requires result_table")]
    AttributesWithoutTable,
    #[error("result attribute `{0}` is not a column of the result table")]
    ForeignResultAttribute(String),
}

/// Sampling knobs. Every field has a default, so `{}` is a valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    /// Fixed question type; drawn uniformly when absent.
    pub question_type: Option<QuestionType>,
    pub result_table: Option<String>,
    /// Qualified `table.column` names of the result table. For sum and
    /// average only the first one is used.
    pub result_attributes: Option<Vec<String>>,
    pub result_attribute_count: CountRange,
    /// Number of tables on the join path.
    pub path_length: CountRange,
    pub min_total_filters: usize,
    pub max_total_filters: usize,
    pub max_filters_per_table: usize,
    pub set_op_probability: f64,
    /// Chance of a group-by root; only applies when `question_type` is unset.
    pub group_by_probability: f64,
    pub extremum_probability: f64,
    pub distinct_probability: f64,
    /// Draw budget per requested tree in a batch.
    pub max_attempts: usize,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            question_type: None,
            result_table: None,
            result_attributes: None,
            result_attribute_count: CountRange::Between { min: 1, max: 2 },
            path_length: CountRange::Between { min: 1, max: 4 },
            min_total_filters: 0,
            max_total_filters: 3,
            max_filters_per_table: 2,
            set_op_probability: 0.05,
            group_by_probability: 0.15,
            extremum_probability: 0.1,
            distinct_probability: 0.1,
            max_attempts: 20,
            seed: 0,
        }
    }
}

impl SampleConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (field, value) in [
            ("set_op_probability", self.set_op_probability),
            ("group_by_probability", self.group_by_probability),
            ("extremum_probability", self.extremum_probability),
            ("distinct_probability", self.distinct_probability),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::Probability { field, value });
            }
        }
        for (field, r) in [
            ("path_length", self.path_length),
            ("result_attribute_count", self.result_attribute_count),
        ] {
            if r.min() > r.max() {
                return Err(ConfigError::EmptyRange {
                    field,
                    min: r.min(),
                    max: r.max(),
                });
            }
        }
        if self.path_length.min() == 0 {
            return Err(ConfigError::ZeroPathLength);
        }
        if self.min_total_filters > self.max_total_filters {
            return Err(ConfigError::EmptyRange {
                field: "total_filters",
                min: self.min_total_filters,
                max: self.max_total_filters,
            });
        }
        if self.max_filters_per_table > self.max_total_filters {
            return Err(ConfigError::PerTableExceedsTotal {
                per_table: self.max_filters_per_table,
                total: self.max_total_filters,
            });
        }
        if self.max_attempts == 0 {
            return Err(ConfigError::ZeroAttempts);
        }
        if let Some(attrs) = &self.result_attributes {
            let Some(table) = &self.result_table else {
                return Err(ConfigError::AttributesWithoutTable);
            };
            for a in attrs {
                if a.split_once('.').map(|(t, _)| t) != Some(table.as_str()) {
                    return Err(ConfigError::ForeignResultAttribute(a.clone()));
                }
            }
        }
        Ok(())
    }
}
