//! Report structures and the three output renderings (aligned text, CSV,
//! JSON). JSON carries every number at full double precision and is the
//! source of truth; the text table is a rendering at six significant
//! digits. No wall-clock data is stamped anywhere: identical inputs and
//! flags must produce byte-identical output.

use serde::Serialize;
use svyratio::simulation::EmpiricalReport;
use svyratio::weights::WeightSolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Text,
    Csv,
    Json,
}

/// The estimator comparison table: analytic bias and MSE per estimator,
/// with enough metadata to reproduce the run.
#[derive(Debug, Serialize)]
pub struct ReportTable {
    pub meta: ReportMeta,
    pub rows: Vec<ReportRow>,
    pub footnotes: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct ReportMeta {
    pub population_size: usize,
    pub sample_size: usize,
    pub factor: f64,
    pub weight_mode: String,
    pub weights: Vec<f64>,
    pub input_digest: String,
}

#[derive(Debug, Serialize)]
pub struct ReportRow {
    pub estimator: String,
    pub attributes: String,
    pub bias: f64,
    pub mse: f64,
}

/// Fixed-point rendering at `sig` significant digits, switching to
/// scientific notation only for extreme magnitudes.
pub fn fmt_sig(value: f64, sig: usize) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let magnitude = value.abs().log10().floor() as i32;
    if magnitude >= sig as i32 + 3 || magnitude < -4 {
        return format!("{value:.*e}", sig - 1);
    }
    let decimals = (sig as i32 - 1 - magnitude).max(0) as usize;
    format!("{value:.*}", decimals)
}

pub fn render_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    text
}

impl ReportTable {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let width_est = self
            .rows
            .iter()
            .map(|r| r.estimator.len())
            .chain(["estimator".len()])
            .max()
            .unwrap_or(9);
        let width_attr = self
            .rows
            .iter()
            .map(|r| r.attributes.len())
            .chain(["attributes".len()])
            .max()
            .unwrap_or(10);
        out.push_str(&format!(
            "{:<width_est$}  {:<width_attr$}  {:>12}  {:>14}\n",
            "estimator", "attributes", "bias", "mse"
        ));
        out.push_str(&format!(
            "{}\n",
            "-".repeat(width_est + width_attr + 32)
        ));
        for row in &self.rows {
            out.push_str(&format!(
                "{:<width_est$}  {:<width_attr$}  {:>12}  {:>14}\n",
                row.estimator,
                row.attributes,
                fmt_sig(row.bias, 6),
                fmt_sig(row.mse, 6)
            ));
        }
        out.push('\n');
        out.push_str(&format!(
            "N={} n={} f={} weights={} ({})\n",
            self.meta.population_size,
            self.meta.sample_size,
            fmt_sig(self.meta.factor, 6),
            self.meta.weight_mode,
            self.meta
                .weights
                .iter()
                .map(|w| fmt_sig(*w, 6))
                .collect::<Vec<_>>()
                .join(", ")
        ));
        out.push_str(&format!("input digest: {}\n", self.meta.input_digest));
        for note in &self.footnotes {
            out.push_str(&format!("note: {note}\n"));
        }
        out
    }

    pub fn render_csv(&self) -> String {
        let mut out = String::from("estimator,attributes,bias,mse\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},\"{}\",{},{}\n",
                row.estimator, row.attributes, row.bias, row.mse
            ));
        }
        out
    }
}

pub fn render_empirical_text(report: &EmpiricalReport<f64>) -> String {
    let mut out = String::new();
    let mode = match report.mode {
        svyratio::ReportMode::MonteCarlo => "monte_carlo",
        svyratio::ReportMode::Exhaustive => "exhaustive",
    };
    out.push_str(&format!(
        "mode={mode} N={} n={} draws={} included={} excluded={} exclusion_fraction={}\n",
        report.population_size,
        report.sample_size,
        report.draws,
        report.included,
        report.exclusion_count,
        fmt_sig(report.exclusion_fraction, 6),
    ));
    if let Some(seed) = report.seed {
        out.push_str(&format!("seed={seed}\n"));
    }
    out.push_str(&format!(
        "population mean: {}\n\n",
        fmt_sig(report.population_mean, 6)
    ));
    out.push_str(&format!(
        "{:<9}  {:>13}  {:>12}  {:>14}  {:>12}  {:>12}\n",
        "estimator", "mean", "bias", "mse", "bias_se", "mse_se"
    ));
    out.push_str(&format!("{}\n", "-".repeat(82)));
    for row in &report.estimators {
        out.push_str(&format!(
            "{:<9}  {:>13}  {:>12}  {:>14}  {:>12}  {:>12}\n",
            row.kind.to_string(),
            fmt_sig(row.mean_estimate, 6),
            fmt_sig(row.bias, 6),
            fmt_sig(row.mse, 6),
            fmt_sig(row.bias_se, 6),
            fmt_sig(row.mse_se, 6)
        ));
    }
    out
}

pub fn render_empirical_csv(report: &EmpiricalReport<f64>) -> String {
    let mut out = String::from("estimator,mean_estimate,bias,mse,bias_se,mse_se\n");
    for row in &report.estimators {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.kind, row.mean_estimate, row.bias, row.mse, row.bias_se, row.mse_se
        ));
    }
    out
}

/// Weight solution plus the MSE at those weights when a design was
/// available to evaluate it.
#[derive(Debug, Serialize)]
pub struct WeightsOutput {
    #[serde(flatten)]
    pub solution: WeightSolution<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mse_at_weights: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<usize>,
}

impl WeightsOutput {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let weights = self
            .solution
            .weights
            .as_slice()
            .iter()
            .map(|w| fmt_sig(*w, 6))
            .collect::<Vec<_>>()
            .join(", ");
        out.push_str(&format!("weights: ({weights})\n"));
        out.push_str(&format!(
            "lagrange multiplier: {}\n",
            fmt_sig(self.solution.lagrange_multiplier, 6)
        ));
        out.push_str(&format!(
            "condition estimate: {}\n",
            fmt_sig(self.solution.condition_estimate, 6)
        ));
        if self.solution.contains_negative {
            out.push_str("note: solution contains negative weights\n");
        }
        if let (Some(mse), Some(n)) = (self.mse_at_weights, self.sample_size) {
            out.push_str(&format!("mse at weights (n={n}): {}\n", fmt_sig(mse, 6)));
        }
        out
    }

    pub fn render_csv(&self) -> String {
        let mut out = String::from("key,value\n");
        for (i, w) in self.solution.weights.as_slice().iter().enumerate() {
            out.push_str(&format!("w{},{}\n", i + 1, w));
        }
        out.push_str(&format!(
            "lagrange_multiplier,{}\n",
            self.solution.lagrange_multiplier
        ));
        out.push_str(&format!(
            "condition_estimate,{}\n",
            self.solution.condition_estimate
        ));
        if let Some(mse) = self.mse_at_weights {
            out.push_str(&format!("mse_at_weights,{mse}\n"));
        }
        out
    }
}
