//! Point estimators of the population mean from a sample and the known
//! population proportions of the auxiliary attributes.
//!
//! Every multi-attribute estimator combines the per-attribute calibration
//! terms `t[i] = mean_y * (P[i] / p[i])`: the arithmetic form takes their
//! weighted mean, the geometric form their weighted geometric mean, the
//! harmonic form their weighted harmonic mean, and the product form
//! multiplies all calibration quotients into the sample mean. When every
//! term is identical the three means short-circuit to that common value, so
//! the arithmetic/geometric/harmonic estimates tie exactly (not merely to
//! rounding) whenever the terms do.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::population::SampleStats;
use crate::scalar::Scalar;

/// Weights attached to the attributes; the defining side condition is that
/// they sum to one. Entries may be negative (the MSE-optimal solution can
/// leave the simplex); consumers that need nonnegative weights check
/// [`WeightVector::is_nonnegative`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightVector<S> {
    weights: Vec<S>,
}

impl<S: Scalar> WeightVector<S> {
    /// Validate that the entries sum to one. The tolerance is `1e-12`
    /// widened to a few machine epsilons for low-precision scalar types.
    pub fn new(weights: Vec<S>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyWeights);
        }
        let sum = weights.iter().fold(S::zero(), |acc, &w| acc + w);
        let tol = S::from_config(1e-12).max(S::epsilon() * S::from_config(16.0));
        if (sum - S::one()).abs() > tol {
            return Err(Error::WeightSumNotOne {
                sum: sum.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { weights })
    }

    pub fn as_slice(&self) -> &[S] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.weights.iter().all(|&w| w >= S::zero())
    }
}

/// The estimators under comparison. `RatioSingle` holds a zero-based
/// attribute index; the textual form (`ratio:1`) is one-based to match the
/// `phi1..phik` column naming.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    /// Plain sample mean, no auxiliary information.
    Mean,
    /// Single-attribute ratio estimator `mean_y * P[i] / p[i]`.
    RatioSingle(usize),
    /// Weighted arithmetic mean of the calibration terms.
    Arithmetic,
    /// Weighted geometric mean of the calibration terms.
    Geometric,
    /// Weighted harmonic mean of the calibration terms.
    Harmonic,
    /// Product of all calibration quotients: `mean_y * prod(P[i] / p[i])`.
    Product,
}

impl EstimatorKind {
    /// The default roster for a population with `k` attributes: the mean,
    /// one ratio estimator per attribute, and the three multi-attribute
    /// estimators plus the product form.
    pub fn default_roster(attr_count: usize) -> Vec<EstimatorKind> {
        let mut roster = vec![EstimatorKind::Mean];
        roster.extend((0..attr_count).map(EstimatorKind::RatioSingle));
        roster.extend([
            EstimatorKind::Arithmetic,
            EstimatorKind::Geometric,
            EstimatorKind::Harmonic,
            EstimatorKind::Product,
        ]);
        roster
    }

    /// Human-readable attribute usage, e.g. `none`, `P1`, `P1,P2`.
    pub fn attributes_label(&self, attr_count: usize) -> String {
        match self {
            EstimatorKind::Mean => "none".to_string(),
            EstimatorKind::RatioSingle(i) => format!("P{}", i + 1),
            _ => (1..=attr_count)
                .map(|i| format!("P{i}"))
                .collect::<Vec<_>>()
                .join(","),
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorKind::Mean => write!(f, "mean"),
            EstimatorKind::RatioSingle(i) => write!(f, "ratio:{}", i + 1),
            EstimatorKind::Arithmetic => write!(f, "ap"),
            EstimatorKind::Geometric => write!(f, "gp"),
            EstimatorKind::Harmonic => write!(f, "hp"),
            EstimatorKind::Product => write!(f, "ts"),
        }
    }
}

impl FromStr for EstimatorKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mean" => Ok(EstimatorKind::Mean),
            "ap" => Ok(EstimatorKind::Arithmetic),
            "gp" => Ok(EstimatorKind::Geometric),
            "hp" => Ok(EstimatorKind::Harmonic),
            "ts" => Ok(EstimatorKind::Product),
            other => {
                if let Some(idx) = other.strip_prefix("ratio:") {
                    let one_based: usize = idx
                        .parse()
                        .map_err(|_| format!("invalid attribute index in `{other}`"))?;
                    if one_based == 0 {
                        return Err("attribute indices are 1-based".to_string());
                    }
                    Ok(EstimatorKind::RatioSingle(one_based - 1))
                } else {
                    Err(format!(
                        "unknown estimator `{other}` (expected mean, ratio:i, ap, gp, hp, ts)"
                    ))
                }
            }
        }
    }
}

impl Serialize for EstimatorKind {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        serializer.collect_str(self)
    }
}

/// The sample mean itself.
pub fn est_mean<S: Scalar>(stats: &SampleStats<S>) -> S {
    stats.mean_y
}

/// Single-attribute ratio estimator `mean_y * (P / p)`.
pub fn est_ratio_single<S: Scalar>(
    stats: &SampleStats<S>,
    known_proportion: S,
    attr: usize,
) -> Result<S> {
    if attr >= stats.attr_count() {
        return Err(Error::AttributeIndexOutOfRange {
            attr,
            count: stats.attr_count(),
        });
    }
    calibration_term(stats, known_proportion, attr)
}

/// Weighted arithmetic mean of the calibration terms.
pub fn est_arithmetic<S: Scalar>(
    stats: &SampleStats<S>,
    known_proportions: &[S],
    weights: &WeightVector<S>,
) -> Result<S> {
    let terms = calibration_terms(stats, known_proportions, weights.len())?;
    if let Some(common) = all_equal(&terms) {
        return Ok(common);
    }
    Ok(terms
        .iter()
        .zip(weights.as_slice())
        .fold(S::zero(), |acc, (&t, &w)| acc + w * t))
}

/// Weighted geometric mean of the calibration terms, evaluated in log
/// space; every term must be strictly positive.
pub fn est_geometric<S: Scalar>(
    stats: &SampleStats<S>,
    known_proportions: &[S],
    weights: &WeightVector<S>,
) -> Result<S> {
    let terms = calibration_terms(stats, known_proportions, weights.len())?;
    for (attr, &t) in terms.iter().enumerate() {
        if t <= S::zero() {
            return Err(Error::NonPositiveRatio { attr });
        }
    }
    if let Some(common) = all_equal(&terms) {
        return Ok(common);
    }
    let log_sum = terms
        .iter()
        .zip(weights.as_slice())
        .fold(S::zero(), |acc, (&t, &w)| acc + w * t.ln());
    Ok(log_sum.exp())
}

/// Weighted harmonic mean of the calibration terms; terms must be nonzero
/// and the weighted reciprocal sum must not vanish.
pub fn est_harmonic<S: Scalar>(
    stats: &SampleStats<S>,
    known_proportions: &[S],
    weights: &WeightVector<S>,
) -> Result<S> {
    let terms = calibration_terms(stats, known_proportions, weights.len())?;
    for (attr, &t) in terms.iter().enumerate() {
        if t == S::zero() {
            return Err(Error::NonPositiveRatio { attr });
        }
    }
    if let Some(common) = all_equal(&terms) {
        return Ok(common);
    }
    let denom = terms
        .iter()
        .zip(weights.as_slice())
        .fold(S::zero(), |acc, (&t, &w)| acc + w / t);
    if denom == S::zero() {
        return Err(Error::ZeroDenominator);
    }
    Ok(denom.recip())
}

/// Product-type estimator: the sample mean calibrated by every attribute at
/// once, `mean_y * prod(P[i] / p[i])`.
pub fn est_product<S: Scalar>(stats: &SampleStats<S>, known_proportions: &[S]) -> Result<S> {
    check_proportion_count(stats, known_proportions.len())?;
    let undefined = stats.undefined_attrs();
    if !undefined.is_empty() {
        return Err(Error::ZeroProportion { attrs: undefined });
    }
    let quotient = known_proportions
        .iter()
        .zip(&stats.proportions)
        .fold(S::one(), |acc, (&known, &observed)| acc * (known / observed));
    Ok(stats.mean_y * quotient)
}

/// Evaluate one estimator from the roster. `Mean` ignores the proportions
/// and weights; `RatioSingle` and `Product` ignore the weights.
pub fn estimate<S: Scalar>(
    kind: EstimatorKind,
    stats: &SampleStats<S>,
    known_proportions: &[S],
    weights: &WeightVector<S>,
) -> Result<S> {
    match kind {
        EstimatorKind::Mean => Ok(est_mean(stats)),
        EstimatorKind::RatioSingle(i) => {
            if i >= known_proportions.len() {
                return Err(Error::AttributeIndexOutOfRange {
                    attr: i,
                    count: known_proportions.len(),
                });
            }
            est_ratio_single(stats, known_proportions[i], i)
        }
        EstimatorKind::Arithmetic => est_arithmetic(stats, known_proportions, weights),
        EstimatorKind::Geometric => est_geometric(stats, known_proportions, weights),
        EstimatorKind::Harmonic => est_harmonic(stats, known_proportions, weights),
        EstimatorKind::Product => est_product(stats, known_proportions),
    }
}

/// True when the error marks an estimator as undefined for a particular
/// sample (as opposed to a usage error).
pub fn is_undefined_for_sample(err: &Error) -> bool {
    matches!(
        err,
        Error::ZeroProportion { .. } | Error::NonPositiveRatio { .. } | Error::ZeroDenominator
    )
}

fn check_proportion_count<S: Scalar>(stats: &SampleStats<S>, expected: usize) -> Result<()> {
    if stats.attr_count() != expected {
        return Err(Error::DimensionMismatch {
            context: "known proportions vs sample attributes",
            expected,
            actual: stats.attr_count(),
        });
    }
    Ok(())
}

fn calibration_term<S: Scalar>(stats: &SampleStats<S>, known: S, attr: usize) -> Result<S> {
    if stats.ratios[attr].is_none() {
        return Err(Error::ZeroProportion { attrs: vec![attr] });
    }
    Ok(stats.mean_y * (known / stats.proportions[attr]))
}

fn calibration_terms<S: Scalar>(
    stats: &SampleStats<S>,
    known_proportions: &[S],
    weight_count: usize,
) -> Result<Vec<S>> {
    check_proportion_count(stats, known_proportions.len())?;
    if weight_count != known_proportions.len() {
        return Err(Error::WeightCountMismatch {
            expected: known_proportions.len(),
            actual: weight_count,
        });
    }
    let undefined = stats.undefined_attrs();
    if !undefined.is_empty() {
        return Err(Error::ZeroProportion { attrs: undefined });
    }
    Ok(known_proportions
        .iter()
        .zip(&stats.proportions)
        .map(|(&known, &observed)| stats.mean_y * (known / observed))
        .collect())
}

fn all_equal<S: Scalar>(terms: &[S]) -> Option<S> {
    let first = terms[0];
    terms.iter().all(|&t| t == first).then_some(first)
}
