//! Estimation of a finite population's mean from a simple random sample,
//! sharpened by known population proportions of binary auxiliary
//! attributes.
//!
//! The toolkit has four layers:
//!
//! - [`population`] — the population data model, population moments in
//!   relative (coefficient-of-variation) form, SRSWOR sampling, and
//!   exhaustive enumeration of all samples of a given size;
//! - [`estimators`] — the point estimators: sample mean, per-attribute
//!   ratio estimators, weighted arithmetic/geometric/harmonic combinations
//!   of the calibration terms, and the all-attributes product form;
//! - [`approximation`] — first-order bias and MSE for each estimator, and
//!   the bias-ordering diagnostic for the three weighted forms (which share
//!   a single first-order MSE);
//! - [`weights`] and [`simulation`] — MSE-optimal weight selection under
//!   the sum-to-one constraint, and seeded Monte Carlo / exhaustive
//!   verification of the approximations.
//!
//! All numerics are generic over the scalar type via [`Scalar`] (`f32` or
//! `f64`); the crate root re-exports `f64` aliases for the common case.
//!
//! ```
//! use svyratio::{Population, SampleDesign};
//! use svyratio::approximation::ratio_single_bias_mse;
//!
//! let pop = Population::new(
//!     vec![1.0, 2.0, 3.0, 4.0],
//!     &[vec![0], vec![1], vec![0], vec![1]],
//! )?;
//! let moments = pop.moments()?;
//! let design = SampleDesign::new(pop.size(), 2)?;
//! let row = ratio_single_bias_mse(&moments, &design, 0);
//! assert!(row.mse > 0.0);
//! # Ok::<(), svyratio::Error>(())
//! ```

#![forbid(unsafe_code)]

pub mod approximation;
pub mod error;
pub mod estimators;
pub mod population;
pub mod scalar;
pub mod simulation;
pub mod weights;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use estimators::EstimatorKind;
pub use population::Sample;
pub use scalar::Scalar;
pub use simulation::{ReportMode, ZeroPolicy};

/// Double-precision aliases for the generic core types.
pub type Population = population::Population<f64>;
pub type SampleDesign = population::SampleDesign<f64>;
pub type MomentSummary = population::MomentSummary<f64>;
pub type PopulationMoments = population::PopulationMoments<f64>;
pub type SampleStats = population::SampleStats<f64>;
pub type WeightVector = estimators::WeightVector<f64>;
pub type BiasMse = approximation::BiasMse<f64>;
pub type OrderingReport = approximation::OrderingReport<f64>;
pub type WeightSolution = weights::WeightSolution<f64>;
pub type SimulationConfig = simulation::SimulationConfig<f64>;
pub type EmpiricalReport = simulation::EmpiricalReport<f64>;
pub type DeviationReport = simulation::DeviationReport<f64>;
