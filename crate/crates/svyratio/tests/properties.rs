//! Cross-module invariants: mean-ordering of the estimators, symmetry and
//! equivariance properties, optimality of the solved weights, and agreement
//! between the analytic approximations and the exhaustive oracle.

use approx::assert_relative_eq;
use proptest::collection::vec;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use svyratio::approximation::{
    bias_arithmetic, bias_geometric, bias_ordering_report, mse_multiattribute, mse_sample_mean,
};
use svyratio::estimators::{
    est_arithmetic, est_geometric, est_harmonic, est_product, est_ratio_single, estimate,
    EstimatorKind, WeightVector,
};
use svyratio::population::{Population, SampleDesign, SampleStats};
use svyratio::simulation::{
    compare_to_analytic, run_exhaustive, run_monte_carlo, SimulationConfig, ZeroPolicy,
};
use svyratio::weights::{equal_weights, optimal_weights};

type Stats = SampleStats<f64>;
type Weights = WeightVector<f64>;

fn stats_from_parts(mean_y: f64, proportions: Vec<f64>) -> Stats {
    let ratios = proportions
        .iter()
        .map(|&p| (p > 0.0).then(|| mean_y / p))
        .collect();
    SampleStats {
        mean_y,
        proportions,
        ratios,
    }
}

fn normalized(raw: &[f64]) -> Weights {
    let total: f64 = raw.iter().sum();
    WeightVector::new(raw.iter().map(|r| r / total).collect()).unwrap()
}

/// Random valid population: positive study values, non-constant columns.
fn population_strategy() -> impl Strategy<Value = Population<f64>> {
    (1usize..=3, 6usize..=12).prop_flat_map(|(k, n)| {
        (vec(1.0f64..100.0, n), vec(vec(0u8..=1, k), n))
            .prop_filter_map("needs non-constant columns", |(y, rows)| {
                Population::new(y, &rows).ok()
            })
    })
}

fn stats_strategy() -> impl Strategy<Value = (Stats, Vec<f64>, Weights)> {
    (1usize..=4).prop_flat_map(|k| {
        (
            0.1f64..50.0,
            vec(0.05f64..1.0, k),
            vec(0.05f64..0.95, k),
            vec(0.01f64..1.0, k),
        )
            .prop_map(|(mean_y, p, known, raw)| {
                (stats_from_parts(mean_y, p), known, normalized(&raw))
            })
    })
}

fn calibration_terms(stats: &Stats, known: &[f64]) -> Vec<f64> {
    known
        .iter()
        .zip(&stats.proportions)
        .map(|(&big_p, &p)| stats.mean_y * (big_p / p))
        .collect()
}

/// Relative spread of the calibration terms; the mean inequality is only
/// asserted away from near-ties, where the true gaps dwarf rounding.
fn relative_spread(terms: &[f64]) -> f64 {
    let min = terms.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (max - min) / max
}

proptest! {
    #[test]
    fn harmonic_geometric_arithmetic_order((stats, known, w) in stats_strategy()) {
        let terms = calibration_terms(&stats, &known);
        prop_assume!(terms.len() == 1 || relative_spread(&terms) >= 1e-6);
        let am = est_arithmetic(&stats, &known, &w).unwrap();
        let gm = est_geometric(&stats, &known, &w).unwrap();
        let hm = est_harmonic(&stats, &known, &w).unwrap();
        prop_assert!(hm <= gm, "hm {hm} > gm {gm}");
        prop_assert!(gm <= am, "gm {gm} > am {am}");
    }

    #[test]
    fn equal_terms_tie_all_three_means((stats, _, w) in stats_strategy()) {
        // Self-calibrated: p = P makes every term equal the sample mean.
        let known = stats.proportions.clone();
        let am = est_arithmetic(&stats, &known, &w).unwrap();
        let gm = est_geometric(&stats, &known, &w).unwrap();
        let hm = est_harmonic(&stats, &known, &w).unwrap();
        prop_assert_eq!(am, stats.mean_y);
        prop_assert_eq!(gm, stats.mean_y);
        prop_assert_eq!(hm, stats.mean_y);
    }

    #[test]
    fn estimators_are_scale_equivariant(
        (stats, known, w) in stats_strategy(),
        scale in 0.01f64..100.0,
    ) {
        let scaled = stats_from_parts(
            stats.mean_y * scale,
            stats.proportions.clone(),
        );
        let pairs = [
            (
                est_arithmetic(&stats, &known, &w).unwrap(),
                est_arithmetic(&scaled, &known, &w).unwrap(),
            ),
            (
                est_geometric(&stats, &known, &w).unwrap(),
                est_geometric(&scaled, &known, &w).unwrap(),
            ),
            (
                est_harmonic(&stats, &known, &w).unwrap(),
                est_harmonic(&scaled, &known, &w).unwrap(),
            ),
            (
                est_product(&stats, &known).unwrap(),
                est_product(&scaled, &known).unwrap(),
            ),
        ];
        for (base, scaled_est) in pairs {
            prop_assert!((scaled_est - scale * base).abs() <= 1e-12 * scaled_est.abs());
        }
    }

    #[test]
    fn estimators_are_permutation_symmetric((stats, known, w) in stats_strategy()) {
        let k = known.len();
        let perm: Vec<usize> = (0..k).rev().collect();
        let stats_p = stats_from_parts(
            stats.mean_y,
            perm.iter().map(|&i| stats.proportions[i]).collect(),
        );
        let known_p: Vec<f64> = perm.iter().map(|&i| known[i]).collect();
        let w_p = WeightVector::new(perm.iter().map(|&i| w.as_slice()[i]).collect()).unwrap();

        let before = est_arithmetic(&stats, &known, &w).unwrap();
        let after = est_arithmetic(&stats_p, &known_p, &w_p).unwrap();
        prop_assert!((before - after).abs() <= 1e-13 * before.abs().max(1.0));

        let before = est_geometric(&stats, &known, &w).unwrap();
        let after = est_geometric(&stats_p, &known_p, &w_p).unwrap();
        prop_assert!((before - after).abs() <= 1e-13 * before.abs().max(1.0));

        let before = est_harmonic(&stats, &known, &w).unwrap();
        let after = est_harmonic(&stats_p, &known_p, &w_p).unwrap();
        prop_assert!((before - after).abs() <= 1e-13 * before.abs().max(1.0));
    }

    #[test]
    fn ratio_times_proportion_recovers_the_mean(pop in population_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 2 + (pop.size() / 2);
        let sample = pop.draw_srswor(n.min(pop.size()), &mut rng).unwrap();
        let stats = pop.sample_stats(&sample);
        for (i, ratio) in stats.ratios.iter().enumerate() {
            if let Some(r) = ratio {
                prop_assert!((r * stats.proportions[i] - stats.mean_y).abs()
                    <= 1e-13 * stats.mean_y.abs().max(1.0));
            }
        }
    }

    #[test]
    fn moments_permute_consistently(pop in population_strategy()) {
        let m = match pop.moments() {
            Ok(m) => m,
            Err(_) => return Ok(()), // constant y is legal input here
        };
        let k = pop.attr_count();
        prop_assume!(k >= 2);
        // Reverse the columns and rebuild.
        let rows: Vec<Vec<u8>> = (0..pop.size())
            .map(|unit| {
                (0..k)
                    .rev()
                    .map(|attr| u8::from(pop.attr_column(attr)[unit]))
                    .collect()
            })
            .collect();
        let reversed = Population::new(pop.y().to_vec(), &rows).unwrap();
        let mr = reversed.moments().unwrap();
        for i in 0..k {
            prop_assert_eq!(mr.proportions[i], m.proportions[k - 1 - i]);
            prop_assert_eq!(mr.cv_attr_sq[i], m.cv_attr_sq[k - 1 - i]);
            prop_assert_eq!(mr.rel_cov_y_attr[i], m.rel_cov_y_attr[k - 1 - i]);
            for j in 0..k {
                prop_assert_eq!(mr.rel_cov_attr[i][j], m.rel_cov_attr[k - 1 - i][k - 1 - j]);
            }
        }
        // Symmetry of the relative covariance matrix.
        for i in 0..k {
            for j in 0..k {
                prop_assert_eq!(m.rel_cov_attr[i][j], m.rel_cov_attr[j][i]);
            }
        }
    }

    #[test]
    fn optimal_weights_satisfy_constraint_and_stationarity(pop in population_strategy()) {
        let m = match pop.moments() {
            Ok(m) => m,
            Err(_) => return Ok(()),
        };
        let solution = match optimal_weights(&m) {
            Ok(s) => s,
            Err(_) => return Ok(()), // near-singular draws are legitimate
        };
        let w = solution.weights.as_slice();
        let sum: f64 = w.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);

        let k = m.attr_count();
        let b = &m.rel_cov_y_attr;
        let b_norm: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut residual = 0.0f64;
        for i in 0..k {
            let row: f64 = (0..k).map(|j| m.rel_cov_attr[i][j] * w[j]).sum();
            residual += (row - b[i] - solution.lagrange_multiplier).powi(2);
        }
        prop_assert!(residual.sqrt() <= 1e-10 * b_norm.max(1e-30));
    }
}

#[test]
fn identical_columns_collapse_every_estimator() {
    // Three copies of the same attribute: any valid weights must reproduce
    // the single-attribute ratio estimate exactly.
    let rows: Vec<Vec<u8>> = [0u8, 1, 0, 1, 1, 0]
        .iter()
        .map(|&b| vec![b, b, b])
        .collect();
    let pop: Population<f64> =
        Population::new(vec![3.0, 8.0, 4.0, 9.0, 7.0, 2.0], &rows).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let known = vec![0.5, 0.5, 0.5];
    for _ in 0..50 {
        let sample = pop.draw_srswor(3, &mut rng).unwrap();
        let stats = pop.sample_stats(&sample);
        if !stats.undefined_attrs().is_empty() {
            continue;
        }
        let single = est_ratio_single(&stats, known[0], 0).unwrap();
        for raw in [[1.0, 1.0, 1.0], [0.2, 0.5, 0.3], [2.0, 0.5, 0.1]] {
            let w = normalized(&raw);
            assert_eq!(est_arithmetic(&stats, &known, &w).unwrap(), single);
            assert_eq!(est_geometric(&stats, &known, &w).unwrap(), single);
            assert_eq!(est_harmonic(&stats, &known, &w).unwrap(), single);
        }
    }
}

#[test]
fn local_optimality_under_random_perturbations() {
    // 1000 random zero-sum directions of norm 1e-3 around the solution;
    // none may improve the MSE beyond rounding.
    let pop = trend_population(12);
    let m = pop.moments().unwrap();
    let d = SampleDesign::new(pop.size(), 4).unwrap();
    let solution = optimal_weights(&m).unwrap();
    let at_solution = mse_multiattribute(&m, &d, &solution.weights);
    let k = m.attr_count();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for _ in 0..1000 {
        let mut direction: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mean: f64 = direction.iter().sum::<f64>() / k as f64;
        for entry in &mut direction {
            *entry -= mean;
        }
        let norm: f64 = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-12 {
            continue;
        }
        let perturbed: Vec<f64> = solution
            .weights
            .as_slice()
            .iter()
            .zip(&direction)
            .map(|(&w, &dir)| w + dir * 1e-3 / norm)
            .collect();
        let w = WeightVector::new(perturbed).unwrap();
        assert!(mse_multiattribute(&m, &d, &w) >= at_solution - 1e-12);
    }
}

/// Deterministic synthetic population with two attributes, both predictive
/// of the study value, and so few zeros per column that no subset of size
/// >= 3 can miss an attribute entirely.
fn trend_population(size: usize) -> Population<f64> {
    assert!(size >= 8);
    let mut y = Vec::with_capacity(size);
    let mut rows = Vec::with_capacity(size);
    for unit in 0..size {
        let first = !(unit == 0 || unit == 1);
        let second = !(unit == 2 || unit == 3);
        let wiggle = ((unit * 7) % 5) as f64;
        y.push(20.0 + 8.0 * f64::from(u8::from(first)) + 6.0 * f64::from(u8::from(second)) + wiggle);
        rows.push(vec![u8::from(first), u8::from(second)]);
    }
    Population::new(y, &rows).unwrap()
}

#[test]
fn predicted_bias_ordering_matches_direct_biases() {
    // Wherever both ordering factors are positive (and the multi-attribute
    // estimators actually beat the sample mean, the regime the comparison
    // is meant for), the arithmetic bias must exceed the geometric bias in
    // absolute value.
    let mut rng = ChaCha8Rng::seed_from_u64(31337);
    let mut checked = 0;
    for _ in 0..1500 {
        let pop = random_correlated_population(&mut rng);
        let m = match pop.moments() {
            Ok(m) => m,
            Err(_) => continue,
        };
        let d = SampleDesign::new(pop.size(), pop.size() / 3).unwrap();
        let w = equal_weights(m.attr_count()).unwrap();
        if mse_multiattribute(&m, &d, &w) >= mse_sample_mean(&m, &d) {
            continue;
        }
        let report = bias_ordering_report(&m, &w);
        if !(report.factor1 > 0.0 && report.factor2 > 0.0) {
            continue;
        }
        checked += 1;
        let ap = bias_arithmetic(&m, &d, &w).abs();
        let gp = bias_geometric(&m, &d, &w).abs();
        assert!(
            ap > gp,
            "|bias_ap| {ap} <= |bias_gp| {gp} despite positive factors"
        );
    }
    assert!(checked >= 100, "only {checked} populations hit the predicted regime");
}

fn random_correlated_population(rng: &mut ChaCha8Rng) -> Population<f64> {
    let size = rng.random_range(9..=15);
    let k = rng.random_range(1..=3usize);
    loop {
        let mut y = Vec::with_capacity(size);
        let mut rows = Vec::with_capacity(size);
        for _ in 0..size {
            let mut row = Vec::with_capacity(k);
            let mut value = rng.random_range(5.0..15.0);
            for _ in 0..k {
                let flag = rng.random_bool(0.5);
                if flag {
                    value += rng.random_range(3.0..9.0);
                }
                row.push(u8::from(flag));
            }
            y.push(value);
            rows.push(row);
        }
        if let Ok(pop) = Population::new(y, &rows) {
            return pop;
        }
    }
}

#[test]
fn monte_carlo_converges_to_exhaustive() {
    let pop = trend_population(12);
    let m = pop.moments().unwrap();
    let weights = optimal_weights(&m).unwrap().weights;
    let roster = EstimatorKind::default_roster(2);
    let cfg = SimulationConfig {
        sample_size: 4,
        replications: 100_000,
        seed: 991,
        zero_policy: ZeroPolicy::Exclude,
        roster: roster.clone(),
        weights: weights.clone(),
    };
    let exact = run_exhaustive(&pop, &cfg).unwrap();
    let mc = run_monte_carlo(&pop, &cfg).unwrap();
    for (exact_row, mc_row) in exact.estimators.iter().zip(&mc.estimators) {
        assert_eq!(exact_row.kind, mc_row.kind);
        assert!(
            (mc_row.bias - exact_row.bias).abs() <= 4.0 * mc_row.bias_se,
            "{}: bias off by more than 4 SE",
            mc_row.kind
        );
        assert!(
            (mc_row.mse - exact_row.mse).abs() <= 4.0 * mc_row.mse_se,
            "{}: mse off by more than 4 SE",
            mc_row.kind
        );
    }
}

#[test]
fn exhaustive_identities_hold_exactly() {
    let pop = trend_population(12);
    let m = pop.moments().unwrap();
    for n in [3usize, 6] {
        let cfg = SimulationConfig {
            sample_size: n,
            replications: 1,
            seed: 0,
            zero_policy: ZeroPolicy::Exclude,
            roster: vec![EstimatorKind::Mean],
            weights: equal_weights(2).unwrap(),
        };
        let report = run_exhaustive(&pop, &cfg).unwrap();
        assert_eq!(report.exclusion_count, 0);
        let d = SampleDesign::<f64>::new(pop.size(), n).unwrap();
        let mean_row = &report.estimators[0];
        assert_relative_eq!(mean_row.mean_estimate, m.mean_y, max_relative = 1e-12);
        assert_relative_eq!(
            mean_row.mse,
            d.factor() * m.var_y,
            max_relative = 1e-10
        );
    }
}

#[test]
fn shared_mse_pairwise_gaps_shrink_as_samples_grow() {
    // The three multi-attribute estimators share their first-order MSE;
    // exhaustively computed MSEs differ only at higher order, and those
    // gaps must shrink when n grows at fixed N.
    let pop = trend_population(12);
    let m = pop.moments().unwrap();
    let weights = optimal_weights(&m).unwrap().weights;
    let gap = |n: usize| -> f64 {
        let cfg = SimulationConfig {
            sample_size: n,
            replications: 1,
            seed: 0,
            zero_policy: ZeroPolicy::Exclude,
            roster: vec![
                EstimatorKind::Arithmetic,
                EstimatorKind::Geometric,
                EstimatorKind::Harmonic,
            ],
            weights: weights.clone(),
        };
        let report = run_exhaustive(&pop, &cfg).unwrap();
        assert_eq!(report.exclusion_count, 0);
        let mses: Vec<f64> = report.estimators.iter().map(|e| e.mse).collect();
        let mut worst: f64 = 0.0;
        for i in 0..mses.len() {
            for j in (i + 1)..mses.len() {
                worst = worst.max((mses[i] - mses[j]).abs() / mses[i].max(mses[j]));
            }
        }
        worst
    };
    assert!(gap(6) < gap(3));
}

#[test]
fn analytic_mse_approaches_exact_mse_as_factor_shrinks() {
    let pop = trend_population(12);
    let m = pop.moments().unwrap();
    let weights = optimal_weights(&m).unwrap().weights;
    let deviation = |n: usize| -> f64 {
        let cfg = SimulationConfig {
            sample_size: n,
            replications: 1,
            seed: 0,
            zero_policy: ZeroPolicy::Exclude,
            roster: vec![EstimatorKind::Arithmetic],
            weights: weights.clone(),
        };
        let report = run_exhaustive(&pop, &cfg).unwrap();
        assert_eq!(report.exclusion_count, 0);
        let d = SampleDesign::new(pop.size(), n).unwrap();
        let cmp = compare_to_analytic(&report, &m, &d, &weights).unwrap();
        cmp.rows[0].mse_rel_deviation.unwrap()
    };
    assert!(deviation(6) < deviation(3));
}

#[test]
fn per_replicate_ordering_holds_in_every_defined_sample() {
    let pop = trend_population(12);
    let known: Vec<f64> = {
        let m = pop.moments().unwrap();
        m.proportions.clone()
    };
    let w = equal_weights(2).unwrap();
    let mut defined = 0;
    for sample in pop.all_samples(4).unwrap() {
        let stats = pop.sample_stats(&sample);
        if !stats.undefined_attrs().is_empty() {
            continue;
        }
        defined += 1;
        let am = est_arithmetic(&stats, &known, &w).unwrap();
        let gm = est_geometric(&stats, &known, &w).unwrap();
        let hm = est_harmonic(&stats, &known, &w).unwrap();
        assert!(hm <= gm && gm <= am);
    }
    assert_eq!(defined, 495); // every C(12,4) subset is defined here
}

#[test]
fn core_routines_run_with_single_precision() {
    // The generic core accepts f32; tolerances are wider, the structure is
    // the same.
    let pop: Population<f32> = Population::new(
        vec![1.0, 2.0, 3.0, 4.0],
        &[vec![0], vec![1], vec![0], vec![1]],
    )
    .unwrap();
    let m = pop.moments().unwrap();
    assert!((m.mean_y - 2.5).abs() < 1e-6);
    let d = SampleDesign::<f32>::new(4, 2).unwrap();
    assert!((d.factor() - 0.25).abs() < 1e-7);
    assert!((mse_sample_mean(&m, &d) - 5.0 / 12.0).abs() < 1e-5);
    let stats = pop.sample_stats(&svyratio::Sample::new(vec![1, 3]).unwrap());
    let w: WeightVector<f32> = equal_weights(1).unwrap();
    let est = estimate(EstimatorKind::RatioSingle(0), &stats, &m.proportions, &w).unwrap();
    assert!((est - 1.5).abs() < 1e-6);
}
