//! Weight selection: equal weights and the MSE-minimizing weights under the
//! sum-to-one constraint.
//!
//! The MSE of the multi-attribute estimators is, up to a positive scale and
//! a weight-free offset, the quadratic `w'Mw - 2 w'b` with `M` the relative
//! attribute covariance matrix and `b` the relative covariances with the
//! study variable. Minimizing subject to `1'w = 1` gives the stationarity
//! system `M w = b + lambda 1`, solved here by one dense LU factorization
//! (two right-hand sides) plus the closed form
//! `lambda = (1 - 1'M^{-1}b) / (1'M^{-1}1)`. The attribute count is small
//! by problem nature, so a direct solve is the whole story.
//!
//! The solution does not depend on the sampling design or on the scale of
//! the study variable; both enter the MSE as a positive common factor plus
//! an offset that does not move the argmin.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::WeightVector;
use crate::population::PopulationMoments;
use crate::scalar::Scalar;

/// Condition-number estimate above which the moment matrix is declared
/// singular; weights computed past this point are numerically meaningless.
pub const SINGULARITY_THRESHOLD: f64 = 1e12;

/// Output of the constrained minimization.
///
/// `contains_negative` flags solutions outside the simplex: the sum
/// constraint is the only one imposed, so negative entries are legitimate
/// and returned as-is, but consumers relying on nonnegative weights (for
/// example the mean-ordering guarantees) need to know.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightSolution<S> {
    pub weights: WeightVector<S>,
    pub lagrange_multiplier: S,
    /// 1-norm condition estimate of the moment matrix.
    pub condition_estimate: S,
    pub contains_negative: bool,
}

/// Uniform weights `1/k`.
pub fn equal_weights<S: Scalar>(attr_count: usize) -> Result<WeightVector<S>> {
    if attr_count == 0 {
        return Err(Error::EmptyWeights);
    }
    let w = S::one() / S::from_count(attr_count);
    WeightVector::new(vec![w; attr_count])
}

/// MSE-minimizing weights for the given population moments.
pub fn optimal_weights<S: Scalar>(m: &PopulationMoments<S>) -> Result<WeightSolution<S>> {
    let k = m.attr_count();
    let matrix = &m.rel_cov_attr;
    let target = &m.rel_cov_y_attr;

    let lu = LuFactors::factor(matrix).ok_or_else(|| singular_error(matrix))?;
    let unconstrained = lu.solve(target);
    let ones_image = lu.solve(&vec![S::one(); k]);

    let condition_estimate = condition_estimate(matrix, &lu);
    if condition_estimate.to_f64().unwrap_or(f64::INFINITY) > SINGULARITY_THRESHOLD {
        return Err(Error::SingularMomentMatrix {
            condition: condition_estimate.to_f64().unwrap_or(f64::INFINITY),
        });
    }

    let sum_unconstrained = unconstrained.iter().fold(S::zero(), |acc, &v| acc + v);
    let sum_ones_image = ones_image.iter().fold(S::zero(), |acc, &v| acc + v);
    if sum_ones_image == S::zero() {
        return Err(singular_error(matrix));
    }
    let lagrange_multiplier = (S::one() - sum_unconstrained) / sum_ones_image;

    let raw: Vec<S> = unconstrained
        .iter()
        .zip(&ones_image)
        .map(|(&x, &z)| x + lagrange_multiplier * z)
        .collect();
    let contains_negative = raw.iter().any(|&w| w < S::zero());
    let weights = WeightVector::new(raw)?;

    Ok(WeightSolution {
        weights,
        lagrange_multiplier,
        condition_estimate,
        contains_negative,
    })
}

fn singular_error<S: Scalar>(matrix: &[Vec<S>]) -> Error {
    // Best-effort condition report when factorization itself failed.
    let condition = LuFactors::factor(matrix)
        .map(|lu| condition_estimate(matrix, &lu).to_f64().unwrap_or(f64::INFINITY))
        .unwrap_or(f64::INFINITY);
    Error::SingularMomentMatrix { condition }
}

/// `||M||_1 * ||M^{-1}||_1`, with the inverse built column by column from
/// the factorization (the matrices here are tiny).
fn condition_estimate<S: Scalar>(matrix: &[Vec<S>], lu: &LuFactors<S>) -> S {
    let k = matrix.len();
    let norm = one_norm(k, |i, j| matrix[i][j]);
    let mut inverse_columns = Vec::with_capacity(k);
    for j in 0..k {
        let mut unit = vec![S::zero(); k];
        unit[j] = S::one();
        inverse_columns.push(lu.solve(&unit));
    }
    let inv_norm = one_norm(k, |i, j| inverse_columns[j][i]);
    norm * inv_norm
}

/// Maximum absolute column sum.
fn one_norm<S: Scalar>(k: usize, entry: impl Fn(usize, usize) -> S) -> S {
    let mut best = S::zero();
    for j in 0..k {
        let mut col = S::zero();
        for i in 0..k {
            col += entry(i, j).abs();
        }
        best = best.max(col);
    }
    best
}

/// Dense LU factorization with partial pivoting, enough for the small
/// symmetric systems solved here.
struct LuFactors<S> {
    lu: Vec<Vec<S>>,
    pivots: Vec<usize>,
}

impl<S: Scalar> LuFactors<S> {
    fn factor(matrix: &[Vec<S>]) -> Option<Self> {
        let k = matrix.len();
        let mut lu: Vec<Vec<S>> = matrix.to_vec();
        let mut pivots = Vec::with_capacity(k);
        for col in 0..k {
            let mut pivot_row = col;
            let mut pivot_val = lu[col][col].abs();
            for row in (col + 1)..k {
                if lu[row][col].abs() > pivot_val {
                    pivot_row = row;
                    pivot_val = lu[row][col].abs();
                }
            }
            if pivot_val == S::zero() || !pivot_val.is_finite() {
                return None;
            }
            lu.swap(col, pivot_row);
            pivots.push(pivot_row);
            for row in (col + 1)..k {
                let factor = lu[row][col] / lu[col][col];
                lu[row][col] = factor;
                for c in (col + 1)..k {
                    let update = factor * lu[col][c];
                    lu[row][c] -= update;
                }
            }
        }
        Some(Self { lu, pivots })
    }

    fn solve(&self, rhs: &[S]) -> Vec<S> {
        let k = rhs.len();
        let mut x = rhs.to_vec();
        for col in 0..k {
            x.swap(col, self.pivots[col]);
        }
        // Forward substitution (unit lower triangle).
        for row in 1..k {
            for col in 0..row {
                let update = self.lu[row][col] * x[col];
                x[row] -= update;
            }
        }
        // Back substitution.
        for row in (0..k).rev() {
            for col in (row + 1)..k {
                let update = self.lu[row][col] * x[col];
                x[row] -= update;
            }
            x[row] /= self.lu[row][row];
        }
        x
    }
}
