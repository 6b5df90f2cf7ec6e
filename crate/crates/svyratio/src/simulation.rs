//! Empirical verification of the analytic approximations: repeated SRSWOR
//! draws (Monte Carlo) or complete enumeration of all samples (exhaustive),
//! with every estimator in a roster evaluated on every sample.
//!
//! Reproducibility contract: replicate `j` draws its randomness from a
//! substream derived only from `(seed, j)`, so results are independent of
//! execution order; aggregation uses compensated summation so reports are
//! byte-stable. Identical population and configuration give a
//! byte-identical report.
//!
//! Empirical MSE is measured around the true population mean (the target of
//! every estimator here), not around the empirical mean of the estimates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::approximation::{
    bias_arithmetic, bias_geometric, bias_harmonic, mse_multiattribute, mse_sample_mean,
    product_bias_mse, ratio_single_bias_mse,
};
use crate::error::{Error, Result};
use crate::estimators::{estimate, is_undefined_for_sample, EstimatorKind, WeightVector};
use crate::population::{Population, PopulationMoments, SampleDesign, SampleStats};
use crate::scalar::Scalar;

/// What to do with a sample on which some estimator in the roster is
/// undefined (a zero sample proportion, usually).
///
/// `Exclude` conditions every reported expectation on the samples where the
/// whole roster is defined — the exclusion count and fraction are reported
/// so the conditioning stays visible. `Error` aborts instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroPolicy {
    Error,
    #[default]
    Exclude,
}

/// Configuration for both simulation modes. `replications` and `seed` are
/// ignored by the exhaustive mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig<S> {
    pub sample_size: usize,
    pub replications: u64,
    pub seed: u64,
    pub zero_policy: ZeroPolicy,
    pub roster: Vec<EstimatorKind>,
    pub weights: WeightVector<S>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportMode {
    MonteCarlo,
    Exhaustive,
}

/// Empirical results for one estimator: mean estimate, bias and MSE around
/// the population mean, and Monte Carlo standard errors for both (zero in
/// exhaustive mode, where the values are exact).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorSummary<S> {
    pub kind: EstimatorKind,
    pub mean_estimate: S,
    pub bias: S,
    pub mse: S,
    pub bias_se: S,
    pub mse_se: S,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalReport<S> {
    pub mode: ReportMode,
    pub population_size: usize,
    pub population_mean: S,
    pub sample_size: usize,
    /// Seed used for Monte Carlo draws; absent in exhaustive mode.
    pub seed: Option<u64>,
    /// Total samples visited (replications, or the subset count).
    pub draws: u64,
    pub included: u64,
    pub exclusion_count: u64,
    pub exclusion_fraction: S,
    pub estimators: Vec<EstimatorSummary<S>>,
}

/// One estimator's analytic-versus-empirical comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationRow<S> {
    pub kind: EstimatorKind,
    pub analytic_bias: S,
    pub analytic_mse: S,
    pub empirical_bias: S,
    pub empirical_mse: S,
    pub bias_abs_deviation: S,
    pub mse_abs_deviation: S,
    /// Relative deviations are undefined where the analytic value is zero.
    pub bias_rel_deviation: Option<S>,
    pub mse_rel_deviation: Option<S>,
    /// Monte Carlo mode: whether both deviations sit within three standard
    /// errors. Exhaustive mode carries no uncertainty, so no flag.
    pub within_mc_uncertainty: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationReport<S> {
    pub rows: Vec<DeviationRow<S>>,
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent random stream for one replicate, derived only from
/// `(seed, replicate)`.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mixed = splitmix64(splitmix64(seed) ^ replicate.wrapping_mul(GOLDEN_GAMMA));
    ChaCha8Rng::seed_from_u64(mixed)
}

/// Monte Carlo estimate of every roster entry's bias and MSE.
pub fn run_monte_carlo<S: Scalar>(
    pop: &Population<S>,
    cfg: &SimulationConfig<S>,
) -> Result<EmpiricalReport<S>> {
    validate_config(pop, cfg)?;
    if cfg.replications == 0 {
        return Err(Error::ZeroReplications);
    }
    let moments_mean = pop.mean_y();
    let known = known_proportions(pop);
    let mut acc = Accumulators::new(cfg.roster.len());

    for replicate in 0..cfg.replications {
        let mut rng = replicate_rng(cfg.seed, replicate);
        let sample = pop.draw_srswor(cfg.sample_size, &mut rng)?;
        let stats = pop.sample_stats(&sample);
        acc.take(replicate, &stats, &known, cfg, moments_mean)?;
    }
    if acc.included == 0 {
        return Err(Error::AllSamplesExcluded { draws: acc.visited });
    }

    Ok(acc.finish(
        ReportMode::MonteCarlo,
        &cfg.roster,
        pop,
        moments_mean,
        cfg.sample_size,
        Some(cfg.seed),
    ))
}

/// Exact expectations over every sample of the configured size; the
/// `replications` and `seed` fields are ignored.
pub fn run_exhaustive<S: Scalar>(
    pop: &Population<S>,
    cfg: &SimulationConfig<S>,
) -> Result<EmpiricalReport<S>> {
    validate_config(pop, cfg)?;
    let moments_mean = pop.mean_y();
    let known = known_proportions(pop);
    let mut acc = Accumulators::new(cfg.roster.len());

    for (ordinal, sample) in pop.all_samples(cfg.sample_size)?.enumerate() {
        let stats = pop.sample_stats(&sample);
        acc.take(ordinal as u64, &stats, &known, cfg, moments_mean)?;
    }
    if acc.included == 0 {
        return Err(Error::AllSamplesExcluded { draws: acc.visited });
    }

    let mut report = acc.finish(
        ReportMode::Exhaustive,
        &cfg.roster,
        pop,
        moments_mean,
        cfg.sample_size,
        None,
    );
    // Exact expectations carry no sampling uncertainty.
    for summary in &mut report.estimators {
        summary.bias_se = S::zero();
        summary.mse_se = S::zero();
    }
    Ok(report)
}

/// Put the analytic first-order values next to the empirical ones.
pub fn compare_to_analytic<S: Scalar>(
    emp: &EmpiricalReport<S>,
    m: &PopulationMoments<S>,
    d: &SampleDesign<S>,
    w: &WeightVector<S>,
) -> Result<DeviationReport<S>> {
    if d.sample_size() != emp.sample_size {
        return Err(Error::ComparisonMismatch(format!(
            "design sample size {} vs report sample size {}",
            d.sample_size(),
            emp.sample_size
        )));
    }
    if w.len() != m.attr_count() {
        return Err(Error::ComparisonMismatch(format!(
            "{} weights vs {} attributes",
            w.len(),
            m.attr_count()
        )));
    }
    let mut rows = Vec::with_capacity(emp.estimators.len());
    for summary in &emp.estimators {
        let (analytic_bias, analytic_mse) = analytic_bias_mse(summary.kind, m, d, w)?;
        let bias_abs = (summary.bias - analytic_bias).abs();
        let mse_abs = (summary.mse - analytic_mse).abs();
        let three = S::from_config(3.0);
        rows.push(DeviationRow {
            kind: summary.kind,
            analytic_bias,
            analytic_mse,
            empirical_bias: summary.bias,
            empirical_mse: summary.mse,
            bias_abs_deviation: bias_abs,
            mse_abs_deviation: mse_abs,
            bias_rel_deviation: (analytic_bias != S::zero())
                .then(|| bias_abs / analytic_bias.abs()),
            mse_rel_deviation: (analytic_mse != S::zero()).then(|| mse_abs / analytic_mse.abs()),
            within_mc_uncertainty: match emp.mode {
                ReportMode::MonteCarlo => Some(
                    bias_abs <= three * summary.bias_se && mse_abs <= three * summary.mse_se,
                ),
                ReportMode::Exhaustive => None,
            },
        });
    }
    Ok(DeviationReport { rows })
}

/// First-order bias and MSE for a single roster entry.
pub fn analytic_bias_mse<S: Scalar>(
    kind: EstimatorKind,
    m: &PopulationMoments<S>,
    d: &SampleDesign<S>,
    w: &WeightVector<S>,
) -> Result<(S, S)> {
    Ok(match kind {
        EstimatorKind::Mean => (S::zero(), mse_sample_mean(m, d)),
        EstimatorKind::RatioSingle(i) => {
            if i >= m.attr_count() {
                return Err(Error::AttributeIndexOutOfRange {
                    attr: i,
                    count: m.attr_count(),
                });
            }
            let bm = ratio_single_bias_mse(m, d, i);
            (bm.bias, bm.mse)
        }
        EstimatorKind::Arithmetic => (
            bias_arithmetic(m, d, w),
            mse_multiattribute(m, d, w),
        ),
        EstimatorKind::Geometric => (
            bias_geometric(m, d, w),
            mse_multiattribute(m, d, w),
        ),
        EstimatorKind::Harmonic => (
            bias_harmonic(m, d, w),
            mse_multiattribute(m, d, w),
        ),
        EstimatorKind::Product => {
            let bm = product_bias_mse(m, d);
            (bm.bias, bm.mse)
        }
    })
}

fn validate_config<S: Scalar>(pop: &Population<S>, cfg: &SimulationConfig<S>) -> Result<()> {
    if cfg.roster.is_empty() {
        return Err(Error::EmptyRoster);
    }
    if cfg.sample_size < 1 || cfg.sample_size > pop.size() {
        return Err(Error::SampleSizeOutOfRange {
            n: cfg.sample_size,
            population: pop.size(),
        });
    }
    if cfg.weights.len() != pop.attr_count() {
        return Err(Error::WeightCountMismatch {
            expected: pop.attr_count(),
            actual: cfg.weights.len(),
        });
    }
    for kind in &cfg.roster {
        if let EstimatorKind::RatioSingle(i) = kind {
            if *i >= pop.attr_count() {
                return Err(Error::AttributeIndexOutOfRange {
                    attr: *i,
                    count: pop.attr_count(),
                });
            }
        }
    }
    Ok(())
}

fn known_proportions<S: Scalar>(pop: &Population<S>) -> Vec<S> {
    let nf = S::from_count(pop.size());
    (0..pop.attr_count())
        .map(|attr| {
            let ones = pop.attr_column(attr).iter().filter(|&&b| b).count();
            S::from_count(ones) / nf
        })
        .collect()
}

/// Neumaier-compensated sum; keeps aggregation byte-stable regardless of
/// magnitude ordering.
#[derive(Debug, Clone, Copy)]
struct CompensatedSum<S> {
    sum: S,
    compensation: S,
}

impl<S: Scalar> CompensatedSum<S> {
    fn new() -> Self {
        Self {
            sum: S::zero(),
            compensation: S::zero(),
        }
    }

    fn add(&mut self, value: S) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> S {
        self.sum + self.compensation
    }
}

struct EstimatorAccumulator<S> {
    sum: CompensatedSum<S>,
    sum_sq: CompensatedSum<S>,
    sum_dev_sq: CompensatedSum<S>,
    sum_dev_fourth: CompensatedSum<S>,
}

impl<S: Scalar> EstimatorAccumulator<S> {
    fn new() -> Self {
        Self {
            sum: CompensatedSum::new(),
            sum_sq: CompensatedSum::new(),
            sum_dev_sq: CompensatedSum::new(),
            sum_dev_fourth: CompensatedSum::new(),
        }
    }

    fn add(&mut self, estimate: S, target: S) {
        let dev_sq = (estimate - target) * (estimate - target);
        self.sum.add(estimate);
        self.sum_sq.add(estimate * estimate);
        self.sum_dev_sq.add(dev_sq);
        self.sum_dev_fourth.add(dev_sq * dev_sq);
    }
}

struct Accumulators<S> {
    per_estimator: Vec<EstimatorAccumulator<S>>,
    visited: u64,
    included: u64,
}

impl<S: Scalar> Accumulators<S> {
    fn new(roster_len: usize) -> Self {
        Self {
            per_estimator: (0..roster_len).map(|_| EstimatorAccumulator::new()).collect(),
            visited: 0,
            included: 0,
        }
    }

    /// Evaluate the whole roster on one sample; a sample counts only if
    /// every estimator is defined on it, so all reported expectations share
    /// one conditioning event.
    fn take(
        &mut self,
        replicate: u64,
        stats: &SampleStats<S>,
        known: &[S],
        cfg: &SimulationConfig<S>,
        target: S,
    ) -> Result<()> {
        self.visited += 1;
        let mut values = Vec::with_capacity(cfg.roster.len());
        for &kind in &cfg.roster {
            match estimate(kind, stats, known, &cfg.weights) {
                Ok(value) => values.push(value),
                Err(err) if is_undefined_for_sample(&err) => {
                    return match cfg.zero_policy {
                        ZeroPolicy::Exclude => Ok(()),
                        ZeroPolicy::Error => Err(Error::UndefinedEstimator {
                            replicate,
                            estimator: kind.to_string(),
                            reason: err.to_string(),
                        }),
                    };
                }
                Err(err) => return Err(err),
            }
        }
        self.included += 1;
        for (acc, value) in self.per_estimator.iter_mut().zip(values) {
            acc.add(value, target);
        }
        Ok(())
    }

    fn finish(
        self,
        mode: ReportMode,
        roster: &[EstimatorKind],
        pop: &Population<S>,
        target: S,
        sample_size: usize,
        seed: Option<u64>,
    ) -> EmpiricalReport<S> {
        let included = S::from_u64(self.included).expect("count representable");
        let excluded = self.visited - self.included;
        let estimators = roster
            .iter()
            .zip(self.per_estimator)
            .map(|(&kind, acc)| {
                let mean = acc.sum.value() / included;
                let mse = acc.sum_dev_sq.value() / included;
                let (bias_se, mse_se) = if self.included > 1 {
                    let denom = included - S::one();
                    let var_est =
                        ((acc.sum_sq.value() / included) - mean * mean).max(S::zero()) * included
                            / denom;
                    let var_dev_sq =
                        ((acc.sum_dev_fourth.value() / included) - mse * mse).max(S::zero())
                            * included
                            / denom;
                    ((var_est / included).sqrt(), (var_dev_sq / included).sqrt())
                } else {
                    (S::zero(), S::zero())
                };
                EstimatorSummary {
                    kind,
                    mean_estimate: mean,
                    bias: mean - target,
                    mse,
                    bias_se,
                    mse_se,
                }
            })
            .collect();

        EmpiricalReport {
            mode,
            population_size: pop.size(),
            population_mean: target,
            sample_size,
            seed,
            draws: self.visited,
            included: self.included,
            exclusion_count: excluded,
            exclusion_fraction: S::from_u64(excluded).expect("count representable")
                / S::from_u64(self.visited).expect("count representable"),
            estimators,
        }
    }
}
