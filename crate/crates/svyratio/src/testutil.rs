//! Shared fixtures for unit tests: the 34-farm wheat-area reference
//! dataset, available only through its summary statistics.

use crate::estimators::WeightVector;
use crate::population::{MomentSummary, PopulationMoments};
use crate::weights::optimal_weights;

pub(crate) fn wheat_summary() -> MomentSummary<f64> {
    MomentSummary {
        population_size: 34,
        mean_y: 199.4,
        proportions: vec![0.6765, 0.7353],
        var_y: 22564.6,
        var_attr: vec![0.225490, 0.200535],
        rho_pb: vec![0.599, 0.559],
        rho_phi: vec![vec![1.0, 0.725], vec![0.725, 1.0]],
    }
}

pub(crate) fn wheat_moments() -> PopulationMoments<f64> {
    PopulationMoments::from_summary(&wheat_summary()).unwrap()
}

pub(crate) fn wheat_optimal_weights() -> WeightVector<f64> {
    optimal_weights(&wheat_moments()).unwrap().weights
}
