//! Finite population data model: study values plus binary attribute columns,
//! population moments, simple random sampling without replacement, and
//! exhaustive enumeration of all samples of a given size.
//!
//! All variances and covariances use the divisor `N - 1`; correlations are
//! plain product-moment correlations and therefore divisor-independent. The
//! design factor is `f = 1/n - 1/N`, which makes `Var(ybar) = f * var_y`
//! exact under sampling without replacement (the exhaustive tests pin this
//! identity down).

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Refuse to enumerate more subsets than this by default; the exhaustive
/// machinery is meant for desk-scale verification.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

/// A finite population: `N` study values and `k` binary attribute columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Population<S> {
    y: Vec<S>,
    /// Column-major: `columns[attr][unit]`.
    columns: Vec<Vec<bool>>,
}

impl<S: Scalar> Population<S> {
    /// Build and validate a population from study values and per-unit
    /// attribute rows (`rows[unit][attr]`, entries must be 0 or 1).
    ///
    /// Every attribute column must contain at least one 0 and one 1;
    /// otherwise its proportion is degenerate and every ratio estimator
    /// built on it is meaningless.
    pub fn new(y: Vec<S>, rows: &[Vec<u8>]) -> Result<Self> {
        let units = y.len();
        if units < 2 {
            return Err(Error::PopulationTooSmall { units });
        }
        if let Some(unit) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteStudyValue { unit });
        }
        if rows.len() != units {
            return Err(Error::DimensionMismatch {
                context: "attribute rows vs study values",
                expected: units,
                actual: rows.len(),
            });
        }
        let attr_count = rows[0].len();
        if attr_count == 0 {
            return Err(Error::NoAttributes);
        }

        let mut columns = vec![Vec::with_capacity(units); attr_count];
        for (unit, row) in rows.iter().enumerate() {
            if row.len() != attr_count {
                return Err(Error::DimensionMismatch {
                    context: "attribute row width",
                    expected: attr_count,
                    actual: row.len(),
                });
            }
            for (attr, &value) in row.iter().enumerate() {
                match value {
                    0 => columns[attr].push(false),
                    1 => columns[attr].push(true),
                    other => {
                        return Err(Error::NonBinaryAttribute {
                            unit,
                            attr,
                            value: f64::from(other),
                        })
                    }
                }
            }
        }
        for (attr, column) in columns.iter().enumerate() {
            let ones = column.iter().filter(|&&b| b).count();
            if ones == 0 {
                return Err(Error::DegenerateAttribute { attr, value: 0 });
            }
            if ones == units {
                return Err(Error::DegenerateAttribute { attr, value: 1 });
            }
        }
        Ok(Self { y, columns })
    }

    /// Number of units `N`.
    pub fn size(&self) -> usize {
        self.y.len()
    }

    /// Number of attributes `k`.
    pub fn attr_count(&self) -> usize {
        self.columns.len()
    }

    pub fn y(&self) -> &[S] {
        &self.y
    }

    pub fn attr_column(&self, attr: usize) -> &[bool] {
        &self.columns[attr]
    }

    /// Population mean of the study variable.
    pub fn mean_y(&self) -> S {
        let sum = self.y.iter().fold(S::zero(), |acc, &v| acc + v);
        sum / S::from_count(self.size())
    }

    /// All population moments needed by the bias/MSE approximations.
    ///
    /// Fails for a constant study variable; the attribute columns are
    /// already guaranteed non-constant by construction.
    pub fn moments(&self) -> Result<PopulationMoments<S>> {
        let n = self.size();
        let nf = S::from_count(n);
        let denom = S::from_count(n - 1);
        let mean_y = self.mean_y();

        let var_y = self
            .y
            .iter()
            .fold(S::zero(), |acc, &v| acc + (v - mean_y) * (v - mean_y))
            / denom;
        if var_y == S::zero() {
            return Err(Error::ConstantStudyVariable);
        }
        let sd_y = var_y.sqrt();

        let k = self.attr_count();
        let mut proportions = Vec::with_capacity(k);
        let mut var_attr = Vec::with_capacity(k);
        let mut rho_pb = Vec::with_capacity(k);
        for column in &self.columns {
            let ones = column.iter().filter(|&&b| b).count();
            let p = S::from_count(ones) / nf;
            let mut ss = S::zero();
            let mut cross = S::zero();
            for (unit, &flag) in column.iter().enumerate() {
                let v = indicator::<S>(flag) - p;
                ss += v * v;
                cross += v * (self.y[unit] - mean_y);
            }
            let var_phi = ss / denom;
            let cov_y_phi = cross / denom;
            proportions.push(p);
            var_attr.push(var_phi);
            // Rounding can push a correlation an ulp past 1; clamp to the
            // mathematical range.
            rho_pb.push(clamp_correlation(cov_y_phi / (sd_y * var_phi.sqrt())));
        }

        let mut rho_phi = vec![vec![S::one(); k]; k];
        for i in 0..k {
            for j in (i + 1)..k {
                let mut cross = S::zero();
                for unit in 0..n {
                    cross += (indicator::<S>(self.columns[i][unit]) - proportions[i])
                        * (indicator::<S>(self.columns[j][unit]) - proportions[j]);
                }
                let cov = cross / denom;
                let rho = clamp_correlation(cov / (var_attr[i].sqrt() * var_attr[j].sqrt()));
                rho_phi[i][j] = rho;
                rho_phi[j][i] = rho;
            }
        }

        PopulationMoments::from_summary(&MomentSummary {
            population_size: n,
            mean_y,
            proportions,
            var_y,
            var_attr,
            rho_pb,
            rho_phi,
        })
    }

    /// Draw a simple random sample of `n` units without replacement; every
    /// `C(N, n)` subset is equally likely. Deterministic given the stream.
    pub fn draw_srswor<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Sample> {
        let total = self.size();
        if n < 1 || n > total {
            return Err(Error::SampleSizeOutOfRange { n, population: total });
        }
        // Partial Fisher-Yates: the first n slots end up a uniform
        // n-permutation, whose unordered set is a uniform n-subset.
        let mut pool: Vec<usize> = (0..total).collect();
        for slot in 0..n {
            let pick = rng.random_range(slot..total);
            pool.swap(slot, pick);
        }
        let mut indices = pool[..n].to_vec();
        indices.sort_unstable();
        Ok(Sample { indices })
    }

    /// Enumerate every `n`-subset exactly once (lexicographic order), with
    /// the default cap on the number of subsets.
    pub fn all_samples(&self, n: usize) -> Result<SubsetIter> {
        self.all_samples_capped(n, DEFAULT_ENUMERATION_CAP)
    }

    /// Same as [`Population::all_samples`] but with an explicit cap.
    pub fn all_samples_capped(&self, n: usize, cap: u128) -> Result<SubsetIter> {
        let total = self.size();
        if n < 1 || n > total {
            return Err(Error::SampleSizeOutOfRange { n, population: total });
        }
        match binomial_capped(total, n, cap) {
            Some(_) => Ok(SubsetIter::new(total, n)),
            None => Err(Error::EnumerationTooLarge {
                subsets: binomial_capped(total, n, u128::MAX / 2).unwrap_or(u128::MAX),
                cap,
            }),
        }
    }

    /// The census sample containing every unit.
    pub fn census(&self) -> Sample {
        Sample {
            indices: (0..self.size()).collect(),
        }
    }

    /// Sample mean, attribute proportions, and calibration ratios for a
    /// drawn sample. A ratio is `None` where the sample proportion is zero.
    ///
    /// Panics if the sample refers to units outside this population.
    pub fn sample_stats(&self, sample: &Sample) -> SampleStats<S> {
        let n = sample.len();
        assert!(n >= 1, "sample must contain at least one unit");
        let nf = S::from_count(n);
        let mut sum = S::zero();
        for &unit in sample.indices() {
            sum += self.y[unit];
        }
        let mean_y = sum / nf;

        let mut proportions = Vec::with_capacity(self.attr_count());
        let mut ratios = Vec::with_capacity(self.attr_count());
        for column in &self.columns {
            let ones = sample.indices().iter().filter(|&&u| column[u]).count();
            let p = S::from_count(ones) / nf;
            proportions.push(p);
            ratios.push(if ones > 0 { Some(mean_y / p) } else { None });
        }
        SampleStats {
            mean_y,
            proportions,
            ratios,
        }
    }
}

fn indicator<S: Scalar>(flag: bool) -> S {
    if flag {
        S::one()
    } else {
        S::zero()
    }
}

fn clamp_correlation<S: Scalar>(rho: S) -> S {
    rho.max(-S::one()).min(S::one())
}

/// Sampling design `(N, n)` together with the factor `f = 1/n - 1/N` that
/// scales every first-order bias and MSE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleDesign<S> {
    population_size: usize,
    sample_size: usize,
    factor: S,
}

impl<S: Scalar> SampleDesign<S> {
    pub fn new(population_size: usize, sample_size: usize) -> Result<Self> {
        if sample_size < 1 || sample_size > population_size {
            return Err(Error::SampleSizeOutOfRange {
                n: sample_size,
                population: population_size,
            });
        }
        let factor = S::one() / S::from_count(sample_size) - S::one() / S::from_count(population_size);
        Ok(Self {
            population_size,
            sample_size,
            factor,
        })
    }

    pub fn population_size(&self) -> usize {
        self.population_size
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    /// `f = 1/n - 1/N`; zero exactly for a census.
    pub fn factor(&self) -> S {
        self.factor
    }
}

/// Moment inputs as they arrive from a summary document: raw means,
/// proportions, variances, and correlations. Everything else is derived.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSummary<S> {
    pub population_size: usize,
    pub mean_y: S,
    pub proportions: Vec<S>,
    pub var_y: S,
    pub var_attr: Vec<S>,
    pub rho_pb: Vec<S>,
    /// Full `k x k` correlation matrix between attribute columns
    /// (unit diagonal).
    pub rho_phi: Vec<Vec<S>>,
}

/// Population moments in the relative form used by the bias/MSE formulas.
///
/// `cv_y_sq` and `cv_attr_sq` are squared coefficients of variation;
/// `rel_cov_y_attr[i]` is the relative covariance between the study variable
/// and attribute `i`; `rel_cov_attr` is the symmetric matrix of relative
/// covariances between attributes, with the squared attribute CVs on its
/// diagonal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationMoments<S> {
    pub mean_y: S,
    pub proportions: Vec<S>,
    pub var_y: S,
    pub var_attr: Vec<S>,
    pub cv_y_sq: S,
    pub cv_attr_sq: Vec<S>,
    pub rel_cov_y_attr: Vec<S>,
    pub rel_cov_attr: Vec<Vec<S>>,
    pub rho_pb: Vec<S>,
    pub rho_phi: Vec<Vec<S>>,
}

impl<S: Scalar> PopulationMoments<S> {
    /// Derive the relative moments from summary inputs. This is the single
    /// code path shared by the unit-level and summary-level entry points,
    /// so feeding a computed summary back reproduces identical moments.
    pub fn from_summary(summary: &MomentSummary<S>) -> Result<Self> {
        let k = summary.proportions.len();
        if k == 0 {
            return Err(Error::NoAttributes);
        }
        for (name, len) in [
            ("S2phi", summary.var_attr.len()),
            ("rho_pb", summary.rho_pb.len()),
            ("rho_phi rows", summary.rho_phi.len()),
        ] {
            if len != k {
                return Err(Error::InvalidSummary(format!(
                    "{name} has {len} entries, expected {k}"
                )));
            }
        }
        for (i, row) in summary.rho_phi.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidSummary(format!(
                    "rho_phi row {} has {} entries, expected {k}",
                    i + 1,
                    row.len()
                )));
            }
        }
        if summary.population_size < 2 {
            return Err(Error::PopulationTooSmall {
                units: summary.population_size,
            });
        }
        if summary.mean_y <= S::zero() {
            return Err(Error::InvalidSummary(format!(
                "Ybar must be positive (got {})",
                summary.mean_y
            )));
        }
        if summary.var_y < S::zero() {
            return Err(Error::InvalidSummary("S2y must be nonnegative".into()));
        }
        for (i, &p) in summary.proportions.iter().enumerate() {
            if p <= S::zero() || p >= S::one() {
                return Err(Error::InvalidSummary(format!(
                    "P{} must lie strictly between 0 and 1 (got {p})",
                    i + 1
                )));
            }
        }
        for (i, &v) in summary.var_attr.iter().enumerate() {
            if v <= S::zero() {
                return Err(Error::InvalidSummary(format!(
                    "S2phi{} must be positive (got {v})",
                    i + 1
                )));
            }
        }
        for (i, &rho) in summary.rho_pb.iter().enumerate() {
            if rho.abs() > S::one() {
                return Err(Error::InvalidSummary(format!(
                    "rho_pb{} outside [-1, 1] (got {rho})",
                    i + 1
                )));
            }
        }
        let diag_tol = S::from_config(1e-9);
        for i in 0..k {
            if (summary.rho_phi[i][i] - S::one()).abs() > diag_tol {
                return Err(Error::InvalidSummary(format!(
                    "rho_phi diagonal entry {} must be 1 (got {})",
                    i + 1,
                    summary.rho_phi[i][i]
                )));
            }
            for j in (i + 1)..k {
                let rho = summary.rho_phi[i][j];
                if rho.abs() > S::one() {
                    return Err(Error::InvalidSummary(format!(
                        "rho_phi[{},{}] outside [-1, 1] (got {rho})",
                        i + 1,
                        j + 1
                    )));
                }
                if (rho - summary.rho_phi[j][i]).abs() > diag_tol {
                    return Err(Error::InvalidSummary(format!(
                        "rho_phi not symmetric at [{},{}]",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }

        let cv_y_sq = summary.var_y / (summary.mean_y * summary.mean_y);
        let cv_y = cv_y_sq.sqrt();
        let mut cv_attr_sq = Vec::with_capacity(k);
        let mut cv_attr = Vec::with_capacity(k);
        for i in 0..k {
            let c_sq = summary.var_attr[i] / (summary.proportions[i] * summary.proportions[i]);
            cv_attr_sq.push(c_sq);
            cv_attr.push(c_sq.sqrt());
        }
        let rel_cov_y_attr: Vec<S> = (0..k)
            .map(|i| summary.rho_pb[i] * cv_y * cv_attr[i])
            .collect();
        // Diagonal carries the squared CVs exactly; off-diagonal entries are
        // mirrored from the upper triangle so the matrix is symmetric by
        // construction.
        let mut rel_cov_attr = vec![vec![S::zero(); k]; k];
        let mut rho_phi = vec![vec![S::one(); k]; k];
        for i in 0..k {
            rel_cov_attr[i][i] = cv_attr_sq[i];
            for j in (i + 1)..k {
                let rho = summary.rho_phi[i][j];
                // The CV product is grouped first so a column permutation
                // reproduces the mirrored entry bit for bit.
                let cov = rho * (cv_attr[i] * cv_attr[j]);
                rel_cov_attr[i][j] = cov;
                rel_cov_attr[j][i] = cov;
                rho_phi[i][j] = rho;
                rho_phi[j][i] = rho;
            }
        }

        Ok(Self {
            mean_y: summary.mean_y,
            proportions: summary.proportions.clone(),
            var_y: summary.var_y,
            var_attr: summary.var_attr.clone(),
            cv_y_sq,
            cv_attr_sq,
            rel_cov_y_attr,
            rel_cov_attr,
            rho_pb: summary.rho_pb.clone(),
            rho_phi,
        })
    }

    /// Number of attributes `k`.
    pub fn attr_count(&self) -> usize {
        self.proportions.len()
    }

    /// Reconstruct the summary inputs (the population size is not part of
    /// the moments and must be supplied by the caller).
    pub fn summary(&self, population_size: usize) -> MomentSummary<S> {
        MomentSummary {
            population_size,
            mean_y: self.mean_y,
            proportions: self.proportions.clone(),
            var_y: self.var_y,
            var_attr: self.var_attr.clone(),
            rho_pb: self.rho_pb.clone(),
            rho_phi: self.rho_phi.clone(),
        }
    }
}

/// A sample: distinct unit indices, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Sample {
    indices: Vec<usize>,
}

impl Sample {
    /// Build a sample from arbitrary indices (sorted and checked distinct).
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        let before = indices.len();
        indices.dedup();
        if indices.len() != before || indices.is_empty() {
            return Err(Error::InvalidSampleIndices);
        }
        Ok(Self { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Per-sample statistics: mean of the study variable, attribute
/// proportions, and the calibration ratios `mean_y / p[i]`.
///
/// A ratio is `None` exactly where the sample proportion is zero; the
/// consumer decides how to treat such samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleStats<S> {
    pub mean_y: S,
    pub proportions: Vec<S>,
    pub ratios: Vec<Option<S>>,
}

impl<S: Scalar> SampleStats<S> {
    /// Statistics straight from observed units (used when a drawn sample
    /// arrives as raw data rather than as indices into a population).
    /// Attribute columns may be constant here; a sample is allowed to miss
    /// an attribute entirely.
    pub fn from_observations(y: &[S], rows: &[Vec<u8>]) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::EmptySample);
        }
        if let Some(unit) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteStudyValue { unit });
        }
        if rows.len() != n {
            return Err(Error::DimensionMismatch {
                context: "attribute rows vs study values",
                expected: n,
                actual: rows.len(),
            });
        }
        let k = rows[0].len();
        if k == 0 {
            return Err(Error::NoAttributes);
        }
        let nf = S::from_count(n);
        let mean_y = y.iter().fold(S::zero(), |acc, &v| acc + v) / nf;
        let mut counts = vec![0usize; k];
        for (unit, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::DimensionMismatch {
                    context: "attribute row width",
                    expected: k,
                    actual: row.len(),
                });
            }
            for (attr, &value) in row.iter().enumerate() {
                match value {
                    0 => {}
                    1 => counts[attr] += 1,
                    other => {
                        return Err(Error::NonBinaryAttribute {
                            unit,
                            attr,
                            value: f64::from(other),
                        })
                    }
                }
            }
        }
        let proportions: Vec<S> = counts.iter().map(|&c| S::from_count(c) / nf).collect();
        let ratios = counts
            .iter()
            .zip(&proportions)
            .map(|(&c, &p)| if c > 0 { Some(mean_y / p) } else { None })
            .collect();
        Ok(Self {
            mean_y,
            proportions,
            ratios,
        })
    }

    pub fn attr_count(&self) -> usize {
        self.proportions.len()
    }

    /// Indices of attributes whose sample proportion is zero.
    pub fn undefined_attrs(&self) -> Vec<usize> {
        self.ratios
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.is_none().then_some(i))
            .collect()
    }
}

/// Lexicographic iterator over all `n`-subsets of `0..total`.
#[derive(Debug, Clone)]
pub struct SubsetIter {
    total: usize,
    size: usize,
    current: Option<Vec<usize>>,
}

impl SubsetIter {
    fn new(total: usize, size: usize) -> Self {
        Self {
            total,
            size,
            current: Some((0..size).collect()),
        }
    }
}

impl Iterator for SubsetIter {
    type Item = Sample;

    fn next(&mut self) -> Option<Sample> {
        let current = self.current.as_mut()?;
        let result = Sample {
            indices: current.clone(),
        };
        // Advance to the lexicographic successor.
        let k = self.size;
        let mut pos = k;
        while pos > 0 {
            pos -= 1;
            if current[pos] < self.total - k + pos {
                current[pos] += 1;
                for later in (pos + 1)..k {
                    current[later] = current[later - 1] + 1;
                }
                return Some(result);
            }
        }
        self.current = None;
        Some(result)
    }
}

/// `C(total, size)` if it does not exceed `cap`, else `None`.
pub fn binomial_capped(total: usize, size: usize, cap: u128) -> Option<u128> {
    if size > total {
        return Some(0);
    }
    let size = size.min(total - size);
    let mut value: u128 = 1;
    for i in 0..size {
        value = value.checked_mul((total - i) as u128)?;
        value /= (i + 1) as u128;
        if value > cap {
            return None;
        }
    }
    Some(value)
}
