//! File ingestion: unit-level population CSV and the summary-moment JSON
//! document, plus the input digest stamped into report metadata.
//!
//! Population CSV: a header row with a `y` column and attribute columns
//! named `phi1..phik` (numbered from 1, no gaps); extra columns are
//! ignored. Attribute values must be exactly 0 or 1.
//!
//! Summary JSON: `N`, `Ybar`, `P` (array), `S2y`, `S2phi` (array),
//! `rho_pb` (array), `rho_phi` (full matrix, or a single scalar when
//! k = 2, or omitted when k = 1), and an optional default sample size `n`.
//! Unknown keys are ignored, so a document produced by `moments` — which
//! carries extra derived values — reads back unchanged.

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use svyratio::population::{MomentSummary, PopulationMoments};
use svyratio::{Population, SampleStats};

/// Parsed summary file: everything needed to rebuild the moments, plus the
/// optional default sample size.
#[derive(Debug)]
pub struct ParsedSummary {
    pub population_size: usize,
    pub moments: PopulationMoments<f64>,
    pub default_sample_size: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SummaryFile {
    #[serde(rename = "N")]
    pub population_size: usize,
    #[serde(rename = "Ybar")]
    pub mean_y: f64,
    #[serde(rename = "P")]
    pub proportions: Vec<f64>,
    #[serde(rename = "S2y")]
    pub var_y: f64,
    #[serde(rename = "S2phi")]
    pub var_attr: Vec<f64>,
    pub rho_pb: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_phi: Option<RhoPhi>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

/// `rho_phi` accepts the full matrix everywhere and a bare scalar as a
/// shorthand for the symmetric 2x2 case.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RhoPhi {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

impl SummaryFile {
    pub fn from_moments(moments: &PopulationMoments<f64>, population_size: usize) -> Self {
        Self {
            population_size,
            mean_y: moments.mean_y,
            proportions: moments.proportions.clone(),
            var_y: moments.var_y,
            var_attr: moments.var_attr.clone(),
            rho_pb: moments.rho_pb.clone(),
            rho_phi: Some(RhoPhi::Matrix(moments.rho_phi.clone())),
            n: None,
        }
    }

    fn rho_phi_matrix(&self) -> Result<Vec<Vec<f64>>> {
        let k = self.proportions.len();
        match &self.rho_phi {
            None if k == 1 => Ok(vec![vec![1.0]]),
            None => bail!("missing field rho_phi (required for k > 1)"),
            Some(RhoPhi::Scalar(rho)) => {
                if k == 2 {
                    Ok(vec![vec![1.0, *rho], vec![*rho, 1.0]])
                } else {
                    bail!("rho_phi: scalar form is only valid for k=2; a matrix is required for k>2")
                }
            }
            Some(RhoPhi::Matrix(matrix)) => Ok(matrix.clone()),
        }
    }
}

pub fn parse_summary_file(text: &str) -> Result<ParsedSummary> {
    let file: SummaryFile = serde_json::from_str(text).context("invalid summary JSON")?;
    let rho_phi = file.rho_phi_matrix()?;
    let summary = MomentSummary {
        population_size: file.population_size,
        mean_y: file.mean_y,
        proportions: file.proportions.clone(),
        var_y: file.var_y,
        var_attr: file.var_attr.clone(),
        rho_pb: file.rho_pb.clone(),
        rho_phi,
    };
    let moments = PopulationMoments::from_summary(&summary)?;
    if let Some(n) = file.n {
        if n < 1 || n > file.population_size {
            bail!(
                "summary n = {n} out of range 1..={N}",
                N = file.population_size
            );
        }
    }
    Ok(ParsedSummary {
        population_size: file.population_size,
        moments,
        default_sample_size: file.n,
    })
}

/// Column layout shared by the population and sample CSV readers.
struct CsvLayout {
    y_index: usize,
    phi_indices: Vec<usize>,
}

fn csv_layout(headers: &csv::StringRecord) -> Result<CsvLayout> {
    let y_index = headers
        .iter()
        .position(|h| h.trim() == "y")
        .ok_or_else(|| anyhow!("missing column y"))?;
    let mut numbered: Vec<(usize, usize)> = Vec::new();
    for (index, header) in headers.iter().enumerate() {
        if let Some(rest) = header.trim().strip_prefix("phi") {
            if let Ok(number) = rest.parse::<usize>() {
                if number >= 1 {
                    numbered.push((number, index));
                }
            }
        }
    }
    if numbered.is_empty() {
        bail!("no phi columns found (expected phi1..phik)");
    }
    numbered.sort_unstable();
    for (expected, (number, _)) in numbered.iter().enumerate() {
        if *number != expected + 1 {
            bail!(
                "phi columns must be numbered 1..k without gaps (found phi{})",
                number
            );
        }
    }
    Ok(CsvLayout {
        y_index,
        phi_indices: numbered.into_iter().map(|(_, index)| index).collect(),
    })
}

fn parse_csv_rows(text: &str) -> Result<(Vec<f64>, Vec<Vec<u8>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let layout = csv_layout(reader.headers().context("cannot read CSV header")?)?;

    let mut y = Vec::new();
    let mut rows = Vec::new();
    for (ordinal, record) in reader.records().enumerate() {
        let row_number = ordinal + 1;
        let record = record.with_context(|| format!("row {row_number}"))?;
        let y_text = record
            .get(layout.y_index)
            .ok_or_else(|| anyhow!("row {row_number} is missing the y column"))?;
        let value: f64 = y_text
            .parse()
            .map_err(|_| anyhow!("non-numeric y value `{y_text}` (row {row_number})"))?;
        let mut row = Vec::with_capacity(layout.phi_indices.len());
        for (attr, &index) in layout.phi_indices.iter().enumerate() {
            let cell = record
                .get(index)
                .ok_or_else(|| anyhow!("row {row_number} is missing phi{}", attr + 1))?;
            let parsed: f64 = cell
                .parse()
                .map_err(|_| anyhow!("phi{} must be 0 or 1 (row {row_number})", attr + 1))?;
            if parsed == 0.0 {
                row.push(0);
            } else if parsed == 1.0 {
                row.push(1);
            } else {
                bail!("phi{} must be 0 or 1 (row {row_number})", attr + 1);
            }
        }
        y.push(value);
        rows.push(row);
    }
    Ok((y, rows))
}

/// Unit-level population CSV -> validated population.
pub fn parse_population_csv(text: &str) -> Result<Population> {
    let (y, rows) = parse_csv_rows(text)?;
    Ok(Population::new(y, &rows)?)
}

/// Sample CSV (same layout) -> sample statistics. Constant attribute
/// columns are legal in a drawn sample.
pub fn parse_sample_csv(text: &str) -> Result<SampleStats> {
    let (y, rows) = parse_csv_rows(text)?;
    Ok(SampleStats::from_observations(&y, &rows)?)
}

/// FNV-1a digest of the raw input bytes, stamped into report metadata so a
/// report can be tied back to the exact input that produced it.
pub fn input_digest(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &byte in bytes {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_csv_happy_path() {
        let pop = parse_population_csv("y,phi1\n1,0\n2,1\n3,0\n4,1\n").unwrap();
        assert_eq!(pop.size(), 4);
        assert_eq!(pop.attr_count(), 1);
    }

    #[test]
    fn population_csv_rejects_bad_phi() {
        let err = parse_population_csv("y,phi1\n1,2\n").unwrap_err();
        assert!(err.to_string().contains("phi1 must be 0 or 1 (row 1)"));
    }

    #[test]
    fn population_csv_requires_y() {
        let err = parse_population_csv("a,b\n1,0\n").unwrap_err();
        assert!(err.to_string().contains("missing column y"));
    }

    #[test]
    fn population_csv_requires_contiguous_phi_numbers() {
        let err = parse_population_csv("y,phi2\n1,0\n2,1\n").unwrap_err();
        assert!(err.to_string().contains("numbered 1..k"));
    }

    #[test]
    fn population_csv_rejects_ragged_rows() {
        assert!(parse_population_csv("y,phi1\n1,0\n2\n").is_err());
    }

    #[test]
    fn summary_scalar_rho_phi_expands_for_two_attributes() {
        let text = r#"{
            "N": 34, "Ybar": 199.4,
            "P": [0.6765, 0.7353],
            "S2y": 22564.6,
            "S2phi": [0.225490, 0.200535],
            "rho_pb": [0.599, 0.559],
            "rho_phi": 0.725
        }"#;
        let parsed = parse_summary_file(text).unwrap();
        assert_eq!(parsed.population_size, 34);
        assert_eq!(parsed.moments.rho_phi[0][1], 0.725);
        assert_eq!(parsed.moments.rho_phi[1][0], 0.725);
        let c12 = parsed.moments.rel_cov_attr[0][1];
        assert!((c12 - 0.30993).abs() < 1e-4, "C12 = {c12}");
        assert!(parsed.default_sample_size.is_none());
    }

    #[test]
    fn summary_scalar_rho_phi_rejected_for_three_attributes() {
        let text = r#"{
            "N": 34, "Ybar": 199.4,
            "P": [0.5, 0.5, 0.5],
            "S2y": 22564.6,
            "S2phi": [0.2, 0.2, 0.2],
            "rho_pb": [0.5, 0.5, 0.5],
            "rho_phi": 0.725
        }"#;
        let err = parse_summary_file(text).unwrap_err();
        assert!(err.to_string().contains("matrix is required for k>2"));
    }

    #[test]
    fn summary_single_attribute_allows_omitted_rho_phi() {
        let text = r#"{
            "N": 10, "Ybar": 5.0,
            "P": [0.4],
            "S2y": 4.0,
            "S2phi": [0.26],
            "rho_pb": [0.6]
        }"#;
        let parsed = parse_summary_file(text).unwrap();
        assert_eq!(parsed.moments.rho_phi, vec![vec![1.0]]);
    }

    #[test]
    fn summary_missing_field_is_reported() {
        let err = parse_summary_file(r#"{"N": 10}"#).unwrap_err();
        assert!(format!("{err:#}").contains("missing field"));
    }

    #[test]
    fn digest_is_stable() {
        assert_eq!(input_digest(b""), "cbf29ce484222325");
        assert_eq!(input_digest(b"y,phi1"), input_digest(b"y,phi1"));
        assert_ne!(input_digest(b"a"), input_digest(b"b"));
    }
}
