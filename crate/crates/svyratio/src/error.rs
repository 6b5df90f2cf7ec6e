//! Crate-wide error type.
//!
//! Attribute indices are stored zero-based (matching the public API) but
//! rendered one-based in messages, matching the `phi1..phik` column naming
//! used by file inputs.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-binary attribute value {value} (unit {unit}, attribute {})", attr + 1)]
    NonBinaryAttribute { unit: usize, attr: usize, value: f64 },

    #[error("study value at unit {unit} is not finite")]
    NonFiniteStudyValue { unit: usize },

    #[error("degenerate attribute {}: every unit has value {value}", attr + 1)]
    DegenerateAttribute { attr: usize, value: u8 },

    #[error("study variable is constant; its variance is zero")]
    ConstantStudyVariable,

    #[error("population must contain at least 2 units (got {units})")]
    PopulationTooSmall { units: usize },

    #[error("population must carry at least one attribute")]
    NoAttributes,

    #[error("sample size {n} out of range 1..={population}")]
    SampleSizeOutOfRange { n: usize, population: usize },

    #[error("enumeration too large: {subsets} subsets exceed the cap of {cap}")]
    EnumerationTooLarge { subsets: u128, cap: u128 },

    #[error("attribute index {} out of range (population has {count} attributes)", attr + 1)]
    AttributeIndexOutOfRange { attr: usize, count: usize },

    #[error("zero sample proportion for attribute(s) {}", fmt_attrs(attrs))]
    ZeroProportion { attrs: Vec<usize> },

    #[error("non-positive calibration term for attribute {}", attr + 1)]
    NonPositiveRatio { attr: usize },

    #[error("harmonic denominator is zero for the given weights")]
    ZeroDenominator,

    #[error("weights must sum to 1 (got {sum})")]
    WeightSumNotOne { sum: f64 },

    #[error("weight count mismatch: expected {expected}, got {actual}")]
    WeightCountMismatch { expected: usize, actual: usize },

    #[error("at least one weight is required")]
    EmptyWeights,

    #[error("moment matrix is singular or near-singular (condition estimate {condition:.3e})")]
    SingularMomentMatrix { condition: f64 },

    #[error("invalid summary: {0}")]
    InvalidSummary(String),

    #[error("estimator {estimator} undefined in replicate {replicate}: {reason}")]
    UndefinedEstimator {
        replicate: u64,
        estimator: String,
        reason: String,
    },

    #[error("estimator roster must not be empty")]
    EmptyRoster,

    #[error("at least one replication is required")]
    ZeroReplications,

    #[error("every one of the {draws} samples was excluded; nothing to report")]
    AllSamplesExcluded { draws: u64 },

    #[error("sample indices must be distinct and nonempty")]
    InvalidSampleIndices,

    #[error("sample must contain at least one unit")]
    EmptySample,

    #[error("empirical report incompatible with analytic inputs: {0}")]
    ComparisonMismatch(String),
}

fn fmt_attrs(attrs: &[usize]) -> String {
    attrs
        .iter()
        .map(|a| (a + 1).to_string())
        .collect::<Vec<_>>()
        .join(", ")
}
