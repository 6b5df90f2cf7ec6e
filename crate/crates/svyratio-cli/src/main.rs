//! Command-line interface for the survey-estimation toolkit: moment
//! computation, analytic bias/MSE reports, weight selection, single
//! estimates, and simulation, over unit-level CSV or summary JSON inputs.
//!
//! Exit codes: 0 on success, 1 on validation errors (bad files, bad
//! flags), 2 on numeric failures (singular moment matrix, estimators
//! undefined on the given data).

mod io;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use svyratio::approximation::{
    bias_arithmetic, bias_geometric, bias_harmonic, mse_multiattribute, mse_sample_mean,
    product_bias_mse, ratio_single_bias_mse,
};
use svyratio::estimators::estimate;
use svyratio::simulation::{run_exhaustive, run_monte_carlo, SimulationConfig};
use svyratio::weights::{equal_weights, optimal_weights};
use svyratio::{
    EstimatorKind, PopulationMoments, SampleDesign, WeightVector, ZeroPolicy,
};

use io::{input_digest, parse_population_csv, parse_sample_csv, parse_summary_file, SummaryFile};
use report::{
    fmt_sig, render_empirical_csv, render_empirical_text, render_json, OutputFormat, ReportMeta,
    ReportRow, ReportTable, WeightsOutput,
};

#[derive(Parser)]
#[command(
    name = "svyratio",
    version,
    about = "Finite-population mean estimation with binary auxiliary attributes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute population moments from a unit-level CSV.
    Moments {
        /// Population CSV (columns: y, phi1..phik).
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: OutputFormat,
    },
    /// Analytic bias/MSE comparison of every estimator.
    Analyze(AnalyzeArgs),
    /// MSE-optimal weights for the attributes of a summary document.
    Weights {
        /// Summary JSON document.
        #[arg(long)]
        summary: PathBuf,
        /// Sample size for the MSE evaluation (defaults to the summary's n).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum, default_value = "text")]
        format: OutputFormat,
    },
    /// Evaluate one estimator on a drawn sample.
    Estimate {
        /// Sample CSV (columns: y, phi1..phik).
        #[arg(long)]
        input: PathBuf,
        /// Known population proportions, comma-separated.
        #[arg(long)]
        proportions: String,
        /// One of: mean, ratio:i, ap, gp, hp, ts.
        #[arg(long)]
        estimator: String,
        /// equal (default) or explicit w1,w2,...
        #[arg(long)]
        weights: Option<String>,
        #[arg(long, value_enum, default_value = "text")]
        format: OutputFormat,
    },
    /// Monte Carlo or exhaustive verification on a unit-level population.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Population CSV (mutually exclusive with --summary).
    #[arg(long, conflicts_with = "summary")]
    input: Option<PathBuf>,
    /// Summary JSON document (mutually exclusive with --input).
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Sample size; required unless the summary document carries n.
    #[arg(long)]
    n: Option<usize>,
    /// optimal (default), equal, or explicit w1,w2,...
    #[arg(long, default_value = "optimal")]
    weights: String,
    /// Reference value for the sample-mean MSE; a footnote flags any
    /// disagreement with the computed value.
    #[arg(long)]
    mse_mean_reference: Option<f64>,
    #[arg(long, value_enum, default_value = "text")]
    format: OutputFormat,
}

#[derive(Args)]
struct SimulateArgs {
    /// Population CSV (columns: y, phi1..phik).
    #[arg(long)]
    input: PathBuf,
    /// Sample size per draw.
    #[arg(long)]
    n: usize,
    /// Monte Carlo replications (requires --seed).
    #[arg(long, conflicts_with = "exhaustive", requires = "seed")]
    reps: Option<u64>,
    /// Seed for the replicate substreams.
    #[arg(long, conflicts_with = "exhaustive", requires = "reps")]
    seed: Option<u64>,
    /// Enumerate every sample instead of drawing.
    #[arg(long)]
    exhaustive: bool,
    /// What to do when an estimator is undefined on a draw.
    #[arg(long, value_enum, default_value = "exclude")]
    zero_policy: ZeroPolicyArg,
    /// optimal (default), equal, or explicit w1,w2,...
    #[arg(long, default_value = "optimal")]
    weights: String,
    /// Comma-separated roster (default: every estimator).
    #[arg(long)]
    estimators: Option<String>,
    #[arg(long, value_enum, default_value = "text")]
    format: OutputFormat,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum ZeroPolicyArg {
    Exclude,
    Error,
}

impl From<ZeroPolicyArg> for ZeroPolicy {
    fn from(value: ZeroPolicyArg) -> Self {
        match value {
            ZeroPolicyArg::Exclude => ZeroPolicy::Exclude,
            ZeroPolicyArg::Error => ZeroPolicy::Error,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

/// 2 for numeric failures, 1 for everything else.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(lib) = cause.downcast_ref::<svyratio::Error>() {
            if matches!(
                lib,
                svyratio::Error::SingularMomentMatrix { .. }
                    | svyratio::Error::ZeroProportion { .. }
                    | svyratio::Error::NonPositiveRatio { .. }
                    | svyratio::Error::ZeroDenominator
                    | svyratio::Error::UndefinedEstimator { .. }
            ) {
                return 2;
            }
        }
    }
    1
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Moments { input, format } => cmd_moments(&input, format),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Weights { summary, n, format } => cmd_weights(&summary, n, format),
        Command::Estimate {
            input,
            proportions,
            estimator,
            weights,
            format,
        } => cmd_estimate(&input, &proportions, &estimator, weights.as_deref(), format),
        Command::Simulate(args) => cmd_simulate(args),
    }
}

fn read_input(path: &Path) -> Result<(String, String)> {
    let bytes =
        std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let digest = input_digest(&bytes);
    let text = String::from_utf8(bytes).context("input is not valid UTF-8")?;
    Ok((text, digest))
}

// ---- moments ---------------------------------------------------------

/// Moments output: the summary schema (re-ingestable as a summary
/// document) plus the derived relative moments.
#[derive(serde::Serialize)]
struct MomentsOutput {
    #[serde(flatten)]
    summary: SummaryFile,
    #[serde(rename = "C0sq")]
    cv_y_sq: f64,
    #[serde(rename = "Csq")]
    cv_attr_sq: Vec<f64>,
    #[serde(rename = "C0i")]
    rel_cov_y_attr: Vec<f64>,
    #[serde(rename = "Cij")]
    rel_cov_attr: Vec<Vec<f64>>,
}

fn cmd_moments(input: &Path, format: OutputFormat) -> Result<()> {
    let (text, _digest) = read_input(input)?;
    let pop = parse_population_csv(&text)?;
    let moments = pop.moments()?;
    let output = MomentsOutput {
        summary: SummaryFile::from_moments(&moments, pop.size()),
        cv_y_sq: moments.cv_y_sq,
        cv_attr_sq: moments.cv_attr_sq.clone(),
        rel_cov_y_attr: moments.rel_cov_y_attr.clone(),
        rel_cov_attr: moments.rel_cov_attr.clone(),
    };
    match format {
        OutputFormat::Json => print!("{}", render_json(&output)),
        OutputFormat::Csv => print!("{}", render_moments_csv(&output)),
        OutputFormat::Text => print!("{}", render_moments_text(&output)),
    }
    Ok(())
}

fn render_moments_text(out: &MomentsOutput) -> String {
    let s = &out.summary;
    let k = s.proportions.len();
    let mut text = String::new();
    text.push_str(&format!(
        "N={}  k={k}  Ybar={}  S2y={}  C0sq={}\n\n",
        s.population_size,
        fmt_sig(s.mean_y, 6),
        fmt_sig(s.var_y, 6),
        fmt_sig(out.cv_y_sq, 6)
    ));
    text.push_str(&format!(
        "{:<6}  {:>10}  {:>12}  {:>10}  {:>10}  {:>10}\n",
        "attr", "P", "S2phi", "rho_pb", "Csq", "C0i"
    ));
    text.push_str(&format!("{}\n", "-".repeat(68)));
    for i in 0..k {
        text.push_str(&format!(
            "phi{:<3}  {:>10}  {:>12}  {:>10}  {:>10}  {:>10}\n",
            i + 1,
            fmt_sig(s.proportions[i], 6),
            fmt_sig(s.var_attr[i], 6),
            fmt_sig(s.rho_pb[i], 6),
            fmt_sig(out.cv_attr_sq[i], 6),
            fmt_sig(out.rel_cov_y_attr[i], 6)
        ));
    }
    if k > 1 {
        text.push_str("\nrho_phi:\n");
        if let Some(io::RhoPhi::Matrix(matrix)) = &s.rho_phi {
            for row in matrix {
                let line = row
                    .iter()
                    .map(|v| fmt_sig(*v, 6))
                    .collect::<Vec<_>>()
                    .join("  ");
                text.push_str(&format!("  {line}\n"));
            }
        }
        text.push_str("Cij:\n");
        for row in &out.rel_cov_attr {
            let line = row
                .iter()
                .map(|v| fmt_sig(*v, 6))
                .collect::<Vec<_>>()
                .join("  ");
            text.push_str(&format!("  {line}\n"));
        }
    }
    text
}

fn render_moments_csv(out: &MomentsOutput) -> String {
    let s = &out.summary;
    let mut text = String::from("key,value\n");
    text.push_str(&format!("N,{}\n", s.population_size));
    text.push_str(&format!("Ybar,{}\n", s.mean_y));
    text.push_str(&format!("S2y,{}\n", s.var_y));
    text.push_str(&format!("C0sq,{}\n", out.cv_y_sq));
    for (i, p) in s.proportions.iter().enumerate() {
        text.push_str(&format!("P{},{}\n", i + 1, p));
    }
    for (i, v) in s.var_attr.iter().enumerate() {
        text.push_str(&format!("S2phi{},{}\n", i + 1, v));
    }
    for (i, r) in s.rho_pb.iter().enumerate() {
        text.push_str(&format!("rho_pb{},{}\n", i + 1, r));
    }
    for (i, c) in out.cv_attr_sq.iter().enumerate() {
        text.push_str(&format!("Csq{},{}\n", i + 1, c));
    }
    for (i, c) in out.rel_cov_y_attr.iter().enumerate() {
        text.push_str(&format!("C0i{},{}\n", i + 1, c));
    }
    let k = s.proportions.len();
    for i in 0..k {
        for j in (i + 1)..k {
            text.push_str(&format!(
                "Cij{}{},{}\n",
                i + 1,
                j + 1,
                out.rel_cov_attr[i][j]
            ));
            if let Some(io::RhoPhi::Matrix(matrix)) = &s.rho_phi {
                text.push_str(&format!("rho_phi{}{},{}\n", i + 1, j + 1, matrix[i][j]));
            }
        }
    }
    text
}

// ---- analyze ---------------------------------------------------------

enum WeightMode {
    Optimal,
    Equal,
    Explicit(Vec<f64>),
}

fn parse_weight_mode(text: &str) -> Result<WeightMode> {
    match text {
        "optimal" => Ok(WeightMode::Optimal),
        "equal" => Ok(WeightMode::Equal),
        list => {
            let values: Vec<f64> = list
                .split(',')
                .map(|tok| {
                    tok.trim().parse::<f64>().map_err(|_| {
                        anyhow!("invalid weight `{tok}` (expected optimal, equal, or w1,w2,...)")
                    })
                })
                .collect::<Result<_>>()?;
            Ok(WeightMode::Explicit(values))
        }
    }
}

fn resolve_weights(
    mode: &WeightMode,
    moments: &PopulationMoments,
) -> Result<(WeightVector, String)> {
    let k = moments.attr_count();
    match mode {
        WeightMode::Optimal => {
            let solution = optimal_weights(moments)?;
            Ok((solution.weights, "optimal".to_string()))
        }
        WeightMode::Equal => Ok((equal_weights(k)?, "equal".to_string())),
        WeightMode::Explicit(values) => {
            if values.len() != k {
                bail!(
                    "{} weights supplied but the input has {} attributes",
                    values.len(),
                    k
                );
            }
            Ok((WeightVector::new(values.clone())?, "explicit".to_string()))
        }
    }
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let (moments, population_size, default_n, digest) = match (&args.input, &args.summary) {
        (Some(path), None) => {
            let (text, digest) = read_input(path)?;
            let pop = parse_population_csv(&text)?;
            let moments = pop.moments()?;
            (moments, pop.size(), None, digest)
        }
        (None, Some(path)) => {
            let (text, digest) = read_input(path)?;
            let parsed = parse_summary_file(&text)?;
            (
                parsed.moments,
                parsed.population_size,
                parsed.default_sample_size,
                digest,
            )
        }
        _ => bail!("exactly one of --input or --summary is required"),
    };
    let sample_size = args
        .n
        .or(default_n)
        .ok_or_else(|| anyhow!("sample size required: pass --n or include n in the summary"))?;
    let design = SampleDesign::new(population_size, sample_size)?;
    let mode = parse_weight_mode(&args.weights)?;
    let (weights, weight_mode) = resolve_weights(&mode, &moments)?;

    let table = build_report_table(
        &moments,
        &design,
        &weights,
        weight_mode,
        digest,
        args.mse_mean_reference,
    );
    match args.format {
        OutputFormat::Json => print!("{}", render_json(&table)),
        OutputFormat::Csv => print!("{}", table.render_csv()),
        OutputFormat::Text => print!("{}", table.render_text()),
    }
    Ok(())
}

fn build_report_table(
    moments: &PopulationMoments,
    design: &SampleDesign,
    weights: &WeightVector,
    weight_mode: String,
    input_digest: String,
    mse_mean_reference: Option<f64>,
) -> ReportTable {
    let k = moments.attr_count();
    let mut rows = Vec::new();
    let mean_mse = mse_sample_mean(moments, design);
    for kind in EstimatorKind::default_roster(k) {
        let (bias, mse) = match kind {
            EstimatorKind::Mean => (0.0, mean_mse),
            EstimatorKind::RatioSingle(i) => {
                let bm = ratio_single_bias_mse(moments, design, i);
                (bm.bias, bm.mse)
            }
            EstimatorKind::Arithmetic => (
                bias_arithmetic(moments, design, weights),
                mse_multiattribute(moments, design, weights),
            ),
            EstimatorKind::Geometric => (
                bias_geometric(moments, design, weights),
                mse_multiattribute(moments, design, weights),
            ),
            EstimatorKind::Harmonic => (
                bias_harmonic(moments, design, weights),
                mse_multiattribute(moments, design, weights),
            ),
            EstimatorKind::Product => {
                let bm = product_bias_mse(moments, design);
                (bm.bias, bm.mse)
            }
        };
        rows.push(ReportRow {
            estimator: kind.to_string(),
            attributes: kind.attributes_label(k),
            bias,
            mse,
        });
    }

    let mut footnotes = Vec::new();
    if let Some(reference) = mse_mean_reference {
        let agrees = (mean_mse - reference).abs() <= 1e-6 * reference.abs().max(1.0);
        if !agrees {
            footnotes.push(format!(
                "computed MSE(mean) = {} = f*S2y disagrees with the supplied reference value {}; \
                 the computed value is reported",
                fmt_sig(mean_mse, 7),
                fmt_sig(reference, 7)
            ));
        }
    }
    if weights.as_slice().iter().any(|&w| w < 0.0) {
        footnotes.push("weights contain negative entries".to_string());
    }

    ReportTable {
        meta: ReportMeta {
            population_size: design.population_size(),
            sample_size: design.sample_size(),
            factor: design.factor(),
            weight_mode,
            weights: weights.as_slice().to_vec(),
            input_digest,
        },
        rows,
        footnotes,
    }
}

// ---- weights ---------------------------------------------------------

fn cmd_weights(summary: &Path, n: Option<usize>, format: OutputFormat) -> Result<()> {
    let (text, _digest) = read_input(summary)?;
    let parsed = parse_summary_file(&text)?;
    let solution = optimal_weights(&parsed.moments)?;
    let sample_size = n.or(parsed.default_sample_size);
    let mse_at_weights = sample_size
        .map(|n| -> Result<f64> {
            let design = SampleDesign::new(parsed.population_size, n)?;
            Ok(mse_multiattribute(
                &parsed.moments,
                &design,
                &solution.weights,
            ))
        })
        .transpose()?;
    let output = WeightsOutput {
        solution,
        mse_at_weights,
        sample_size,
    };
    match format {
        OutputFormat::Json => print!("{}", render_json(&output)),
        OutputFormat::Csv => print!("{}", output.render_csv()),
        OutputFormat::Text => print!("{}", output.render_text()),
    }
    Ok(())
}

// ---- estimate --------------------------------------------------------

#[derive(serde::Serialize)]
struct EstimateOutput {
    estimator: String,
    estimate: f64,
    sample_size: usize,
    sample_mean: f64,
    sample_proportions: Vec<f64>,
}

fn cmd_estimate(
    input: &Path,
    proportions: &str,
    estimator: &str,
    weights: Option<&str>,
    format: OutputFormat,
) -> Result<()> {
    let (text, _digest) = read_input(input)?;
    let (sample_size, stats) = {
        let stats = parse_sample_csv(&text)?;
        (text.lines().skip(1).filter(|l| !l.trim().is_empty()).count(), stats)
    };
    let known: Vec<f64> = proportions
        .split(',')
        .map(|tok| {
            let value: f64 = tok
                .trim()
                .parse()
                .map_err(|_| anyhow!("invalid proportion `{tok}`"))?;
            if value <= 0.0 || value >= 1.0 {
                bail!("proportion {value} must lie strictly between 0 and 1");
            }
            Ok(value)
        })
        .collect::<Result<_>>()?;
    if known.len() != stats.attr_count() {
        bail!(
            "{} proportions supplied but the sample has {} attributes",
            known.len(),
            stats.attr_count()
        );
    }
    let kind: EstimatorKind = estimator.parse().map_err(|e: String| anyhow!(e))?;
    let weight_vector = match weights {
        None => equal_weights(known.len())?,
        Some(text) => match parse_weight_mode(text)? {
            WeightMode::Equal => equal_weights(known.len())?,
            WeightMode::Optimal => {
                bail!("optimal weights need population moments; pass explicit weights or `equal`")
            }
            WeightMode::Explicit(values) => {
                if values.len() != known.len() {
                    bail!(
                        "{} weights supplied but the sample has {} attributes",
                        values.len(),
                        known.len()
                    );
                }
                WeightVector::new(values)?
            }
        },
    };
    let value = estimate(kind, &stats, &known, &weight_vector)?;
    let output = EstimateOutput {
        estimator: kind.to_string(),
        estimate: value,
        sample_size,
        sample_mean: stats.mean_y,
        sample_proportions: stats.proportions.clone(),
    };
    match format {
        OutputFormat::Json => print!("{}", render_json(&output)),
        OutputFormat::Csv => print!(
            "estimator,estimate\n{},{}\n",
            output.estimator, output.estimate
        ),
        OutputFormat::Text => print!(
            "{} estimate: {}\n(sample size {}, sample mean {}, proportions {})\n",
            output.estimator,
            fmt_sig(output.estimate, 6),
            output.sample_size,
            fmt_sig(output.sample_mean, 6),
            output
                .sample_proportions
                .iter()
                .map(|p| fmt_sig(*p, 6))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    }
    Ok(())
}

// ---- simulate --------------------------------------------------------

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let (text, _digest) = read_input(&args.input)?;
    let pop = parse_population_csv(&text)?;
    let moments = pop.moments()?;
    let mode = parse_weight_mode(&args.weights)?;
    let (weights, _label) = resolve_weights(&mode, &moments)?;
    let roster = match &args.estimators {
        None => EstimatorKind::default_roster(pop.attr_count()),
        Some(list) => list
            .split(',')
            .map(|tok| tok.trim().parse::<EstimatorKind>().map_err(|e| anyhow!(e)))
            .collect::<Result<Vec<_>>>()?,
    };

    let report = if args.exhaustive {
        let cfg = SimulationConfig {
            sample_size: args.n,
            replications: 1,
            seed: 0,
            zero_policy: args.zero_policy.into(),
            roster,
            weights,
        };
        run_exhaustive(&pop, &cfg)?
    } else {
        let (reps, seed) = match (args.reps, args.seed) {
            (Some(reps), Some(seed)) => (reps, seed),
            _ => bail!("either --exhaustive or both --reps and --seed are required"),
        };
        let cfg = SimulationConfig {
            sample_size: args.n,
            replications: reps,
            seed,
            zero_policy: args.zero_policy.into(),
            roster,
            weights,
        };
        run_monte_carlo(&pop, &cfg)?
    };

    match args.format {
        OutputFormat::Json => print!("{}", render_json(&report)),
        OutputFormat::Csv => print!("{}", render_empirical_csv(&report)),
        OutputFormat::Text => print!("{}", render_empirical_text(&report)),
    }
    Ok(())
}
