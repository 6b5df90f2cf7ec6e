//! First-order (delta-method) bias and MSE approximations for every
//! estimator in the roster, plus the bias-ordering diagnostic for the three
//! multi-attribute estimators.
//!
//! Conventions baked in here:
//! - every double sum runs over unordered pairs `i < j`;
//! - the arithmetic, geometric, and harmonic estimators share one MSE
//!   expression, implemented once in [`mse_multiattribute`] so reports can
//!   never show three different values;
//! - everything is exactly linear in the design factor `f`, so a census
//!   (`f = 0`) zeroes every bias and MSE.
//!
//! The expressions are arranged so that for a single attribute with unit
//! weight each multi-attribute formula reproduces the single-ratio formula
//! bit for bit.

use serde::Serialize;

use crate::estimators::WeightVector;
use crate::population::{PopulationMoments, SampleDesign};
use crate::scalar::Scalar;

/// First-order bias (units of y) and MSE (units of y squared).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasMse<S> {
    pub bias: S,
    pub mse: S,
}

/// Diagnostic for the predicted `|bias_ap| > |bias_gp|` ordering: the two
/// factors whose product decides the prediction, and the absolute
/// first-order biases of the three multi-attribute estimators with the
/// common positive factor `f * mean_y` divided out (the ordering is
/// unaffected by it, and no sampling design enters this report).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderingReport<S> {
    pub factor1: S,
    pub factor2: S,
    pub predicted_ordering_holds: bool,
    /// `[|bias_ap|, |bias_gp|, |bias_hp|]`, each divided by `f * mean_y`.
    pub abs_biases: [S; 3],
}

/// MSE of the plain sample mean: `f * mean_y^2 * C0^2 = f * var_y`.
pub fn mse_sample_mean<S: Scalar>(m: &PopulationMoments<S>, d: &SampleDesign<S>) -> S {
    mse_scale(m, d) * m.cv_y_sq
}

/// Bias and MSE of the single-attribute ratio estimator.
pub fn ratio_single_bias_mse<S: Scalar>(
    m: &PopulationMoments<S>,
    d: &SampleDesign<S>,
    attr: usize,
) -> BiasMse<S> {
    assert!(attr < m.attr_count(), "attribute index out of range");
    let c_sq = m.cv_attr_sq[attr];
    let c0i = m.rel_cov_y_attr[attr];
    BiasMse {
        bias: bias_scale(m, d) * (c_sq - c0i),
        mse: mse_scale(m, d) * ((m.cv_y_sq + c_sq) - two::<S>() * c0i),
    }
}

/// Bias of the weighted arithmetic estimator.
pub fn bias_arithmetic<S: Scalar>(
    m: &PopulationMoments<S>,
    d: &SampleDesign<S>,
    w: &WeightVector<S>,
) -> S {
    check_weights(m, w);
    let bracket = weighted_sum(w, &m.cv_attr_sq) - weighted_sum(w, &m.rel_cov_y_attr);
    bias_scale(m, d) * bracket
}

/// Bias of the weighted geometric estimator.
pub fn bias_geometric<S: Scalar>(
    m: &PopulationMoments<S>,
    d: &SampleDesign<S>,
    w: &WeightVector<S>,
) -> S {
    check_weights(m, w);
    let half_term = w
        .as_slice()
        .iter()
        .zip(&m.cv_attr_sq)
        .fold(S::zero(), |acc, (&wi, &c_sq)| {
            acc + wi * (wi + S::one()) / two::<S>() * c_sq
        });
    let bracket = half_term + pair_sum(w, &m.rel_cov_attr) - weighted_sum(w, &m.rel_cov_y_attr);
    bias_scale(m, d) * bracket
}

/// Bias of the weighted harmonic estimator.
pub fn bias_harmonic<S: Scalar>(
    m: &PopulationMoments<S>,
    d: &SampleDesign<S>,
    w: &WeightVector<S>,
) -> S {
    check_weights(m, w);
    let bracket = (weighted_sq_sum(w, &m.cv_attr_sq)
        + two::<S>() * pair_sum(w, &m.rel_cov_attr))
        - weighted_sum(w, &m.rel_cov_y_attr);
    bias_scale(m, d) * bracket
}

/// Shared first-order MSE of the arithmetic, geometric, and harmonic
/// estimators (they agree to this order, so one code path serves all
/// three).
pub fn mse_multiattribute<S: Scalar>(
    m: &PopulationMoments<S>,
    d: &SampleDesign<S>,
    w: &WeightVector<S>,
) -> S {
    check_weights(m, w);
    let bracket = ((m.cv_y_sq + weighted_sq_sum(w, &m.cv_attr_sq))
        + two::<S>() * pair_sum(w, &m.rel_cov_attr))
        - two::<S>() * weighted_sum(w, &m.rel_cov_y_attr);
    mse_scale(m, d) * bracket
}

/// Bias and MSE of the product-type estimator (all calibration quotients
/// multiplied in, no weights).
pub fn product_bias_mse<S: Scalar>(m: &PopulationMoments<S>, d: &SampleDesign<S>) -> BiasMse<S> {
    let c_sq_sum = m.cv_attr_sq.iter().fold(S::zero(), |acc, &v| acc + v);
    let c0i_sum = m.rel_cov_y_attr.iter().fold(S::zero(), |acc, &v| acc + v);
    let pair = unweighted_pair_sum(&m.rel_cov_attr);
    BiasMse {
        bias: bias_scale(m, d) * ((c_sq_sum + pair) - c0i_sum),
        mse: mse_scale(m, d) * ((m.cv_y_sq + c_sq_sum + two::<S>() * pair) - two::<S>() * c0i_sum),
    }
}

/// Evaluate the two ordering factors and the (design-free) absolute biases
/// of the three multi-attribute estimators. The prediction is
/// `|bias_ap| > |bias_gp|` whenever the factors share a sign.
pub fn bias_ordering_report<S: Scalar>(
    m: &PopulationMoments<S>,
    w: &WeightVector<S>,
) -> OrderingReport<S> {
    check_weights(m, w);
    let half = S::one() / two::<S>();
    let three_halves = S::from_config(1.5);
    let w_c = weighted_sum(w, &m.cv_attr_sq);
    let w_sq_c = weighted_sq_sum(w, &m.cv_attr_sq);
    let w_b = weighted_sum(w, &m.rel_cov_y_attr);
    let pairs = pair_sum(w, &m.rel_cov_attr);

    let factor1 = half * w_sq_c - two::<S>() * w_b + two::<S>() * pairs + three_halves * w_c;
    let factor2 = half * w_c - half * w_sq_c - pairs;

    // Unit design: f * mean_y divided out of each bias.
    let bias_ap = w_c - w_b;
    let bias_gp = w
        .as_slice()
        .iter()
        .zip(&m.cv_attr_sq)
        .fold(S::zero(), |acc, (&wi, &c_sq)| {
            acc + wi * (wi + S::one()) / two::<S>() * c_sq
        })
        + pairs
        - w_b;
    let bias_hp = (w_sq_c + two::<S>() * pairs) - w_b;

    OrderingReport {
        factor1,
        factor2,
        predicted_ordering_holds: factor1 * factor2 > S::zero(),
        abs_biases: [bias_ap.abs(), bias_gp.abs(), bias_hp.abs()],
    }
}

fn bias_scale<S: Scalar>(m: &PopulationMoments<S>, d: &SampleDesign<S>) -> S {
    d.factor() * m.mean_y
}

fn mse_scale<S: Scalar>(m: &PopulationMoments<S>, d: &SampleDesign<S>) -> S {
    d.factor() * (m.mean_y * m.mean_y)
}

fn two<S: Scalar>() -> S {
    S::one() + S::one()
}

fn check_weights<S: Scalar>(m: &PopulationMoments<S>, w: &WeightVector<S>) {
    assert_eq!(
        w.len(),
        m.attr_count(),
        "weight count must match the attribute count"
    );
}

fn weighted_sum<S: Scalar>(w: &WeightVector<S>, values: &[S]) -> S {
    w.as_slice()
        .iter()
        .zip(values)
        .fold(S::zero(), |acc, (&wi, &v)| acc + wi * v)
}

fn weighted_sq_sum<S: Scalar>(w: &WeightVector<S>, values: &[S]) -> S {
    w.as_slice()
        .iter()
        .zip(values)
        .fold(S::zero(), |acc, (&wi, &v)| acc + wi * wi * v)
}

/// Sum over unordered pairs `i < j` of `w[i] * w[j] * cov[i][j]`.
fn pair_sum<S: Scalar>(w: &WeightVector<S>, cov: &[Vec<S>]) -> S {
    let weights = w.as_slice();
    let mut acc = S::zero();
    for i in 0..weights.len() {
        for j in (i + 1)..weights.len() {
            acc += weights[i] * weights[j] * cov[i][j];
        }
    }
    acc
}

fn unweighted_pair_sum<S: Scalar>(cov: &[Vec<S>]) -> S {
    let k = cov.len();
    let mut acc = S::zero();
    for i in 0..k {
        for j in (i + 1)..k {
            acc += cov[i][j];
        }
    }
    acc
}
