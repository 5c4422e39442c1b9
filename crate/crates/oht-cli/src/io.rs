//! File formats: scenario and experiment-spec JSON, panel ingestion, and
//! the CSV writers/readers shared by the subcommands and the suite.

use serde::Deserialize;

use oht_core::{
    Alphabet, Distribution, ExperimentSpec, LambdaSpec, OutlierSet, Scenario, Symbol, TrialReport,
};

/// Scenario file: panel size, alphabet size, nominal mass vector, and one
/// anomalous mass vector per outlier slot.
#[derive(Debug, Clone, Deserialize)]
pub struct ScenarioFile {
    pub m: usize,
    pub alphabet_size: usize,
    pub nominal: Vec<f64>,
    pub anomalies: Vec<Vec<f64>>,
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario, String> {
        let alphabet = Alphabet::new(self.alphabet_size)
            .map_err(|e| format!("alphabet_size: {e}"))?;
        if self.nominal.len() != self.alphabet_size {
            return Err(format!(
                "nominal: expected {} entries, got {}",
                self.alphabet_size,
                self.nominal.len()
            ));
        }
        let nominal =
            Distribution::new(alphabet, self.nominal).map_err(|e| format!("nominal: {e}"))?;
        let anomalies = self
            .anomalies
            .into_iter()
            .enumerate()
            .map(|(i, mass)| {
                Distribution::new(alphabet, mass).map_err(|e| format!("anomalies[{i}]: {e}"))
            })
            .collect::<Result<Vec<_>, String>>()?;
        Scenario::new(self.m, nominal, anomalies).map_err(|e| format!("scenario: {e}"))
    }
}

/// Threshold field of a spec file: a positive number, or `"auto:<epsilon>"`
/// for per-length calibration.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum LambdaField {
    Fixed(f64),
    Auto(String),
}

impl LambdaField {
    pub fn parse(&self) -> Result<LambdaSpec, String> {
        match self {
            LambdaField::Fixed(l) => Ok(LambdaSpec::Fixed(*l)),
            LambdaField::Auto(s) => parse_lambda_arg(s),
        }
    }
}

/// Parse a CLI or file threshold: `"0.25"` or `"auto:0.2"`.
pub fn parse_lambda_arg(s: &str) -> Result<LambdaSpec, String> {
    if let Some(eps) = s.strip_prefix("auto:") {
        let epsilon: f64 = eps
            .parse()
            .map_err(|_| format!("lambda: bad epsilon in {s:?}"))?;
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(format!("lambda: epsilon must lie in (0,1), got {epsilon}"));
        }
        Ok(LambdaSpec::Auto { epsilon })
    } else {
        let l: f64 = s
            .parse()
            .map_err(|_| format!("lambda: expected a number or auto:<eps>, got {s:?}"))?;
        Ok(LambdaSpec::Fixed(l))
    }
}

/// Experiment spec file for `simulate`.
#[derive(Debug, Clone, Deserialize)]
pub struct SpecFile {
    pub scenario: ScenarioFile,
    #[serde(default)]
    pub truth: Option<Vec<usize>>,
    pub n_grid: Vec<usize>,
    pub lambda: LambdaField,
    pub trials: u64,
    pub seed: u64,
}

impl SpecFile {
    pub fn into_spec(self) -> Result<ExperimentSpec, String> {
        let m = self.scenario.m;
        let scenario = self.scenario.into_scenario()?;
        let truth = match self.truth {
            Some(members) => Some(
                OutlierSet::new(members, m).map_err(|e| format!("truth: {e}"))?,
            ),
            None => None,
        };
        let spec = ExperimentSpec {
            scenario,
            truth,
            n_grid: self.n_grid,
            lambda: self.lambda.parse()?,
            trials: self.trials,
            seed: self.seed,
        };
        spec.validate().map_err(|e| format!("spec: {e}"))?;
        Ok(spec)
    }
}

/// Parse an outlier set argument like `"2"` or `"1,3"`.
pub fn parse_set_arg(s: &str, m: usize) -> Result<OutlierSet, String> {
    let members = s
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .map_err(|_| format!("set: bad index {tok:?}"))
        })
        .collect::<Result<Vec<usize>, String>>()?;
    OutlierSet::new(members, m).map_err(|e| format!("set: {e}"))
}

/// Parse a grid argument `lo:hi:steps` into an inclusive linspace.
pub fn parse_grid_arg(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("grid: expected lo:hi:steps, got {s:?}"));
    }
    let lo: f64 = parts[0].parse().map_err(|_| format!("grid: bad lo {:?}", parts[0]))?;
    let hi: f64 = parts[1].parse().map_err(|_| format!("grid: bad hi {:?}", parts[1]))?;
    let steps: usize = parts[2]
        .parse()
        .map_err(|_| format!("grid: bad step count {:?}", parts[2]))?;
    if steps < 1 || hi < lo {
        return Err(format!("grid: need steps >= 1 and hi >= lo in {s:?}"));
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
        .collect())
}

/// Read a panel: either a JSON array (of integer arrays, or of strings over
/// `a..z`), or plain text with one sequence per line.
pub fn read_panel(
    text: &str,
    alphabet_size: Option<usize>,
) -> Result<(Vec<Vec<Symbol>>, Alphabet), String> {
    let trimmed = text.trim();
    let sequences: Vec<Vec<Symbol>> = if trimmed.starts_with('[') {
        let value: serde_json::Value =
            serde_json::from_str(trimmed).map_err(|e| format!("panel: invalid JSON: {e}"))?;
        let rows = value
            .as_array()
            .ok_or_else(|| "panel: expected a JSON array of sequences".to_string())?;
        rows.iter()
            .enumerate()
            .map(|(i, row)| parse_json_sequence(i, row))
            .collect::<Result<Vec<_>, String>>()?
    } else {
        trimmed
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .enumerate()
            .map(|(i, line)| {
                line.chars()
                    .map(|c| {
                        if c.is_ascii_lowercase() {
                            Ok((c as u8 - b'a') as usize)
                        } else {
                            Err(format!("panel line {}: bad symbol {c:?}", i + 1))
                        }
                    })
                    .collect::<Result<Vec<_>, String>>()
            })
            .collect::<Result<Vec<_>, String>>()?
    };
    if sequences.is_empty() {
        return Err("panel: no sequences".into());
    }
    let max_symbol = sequences
        .iter()
        .flat_map(|s| s.iter().copied())
        .max()
        .ok_or_else(|| "panel: empty sequence".to_string())?;
    let inferred = (max_symbol + 1).max(2);
    let size = alphabet_size.unwrap_or(inferred);
    if size < inferred {
        return Err(format!(
            "panel: symbol {max_symbol} needs alphabet size >= {inferred}, got {size}"
        ));
    }
    let alphabet = Alphabet::new(size).map_err(|e| format!("alphabet: {e}"))?;
    Ok((sequences, alphabet))
}

fn parse_json_sequence(i: usize, row: &serde_json::Value) -> Result<Vec<Symbol>, String> {
    if let Some(s) = row.as_str() {
        return s
            .chars()
            .map(|c| {
                if c.is_ascii_lowercase() {
                    Ok((c as u8 - b'a') as usize)
                } else {
                    Err(format!("panel[{i}]: bad symbol {c:?}"))
                }
            })
            .collect();
    }
    let arr = row
        .as_array()
        .ok_or_else(|| format!("panel[{i}]: expected an array or string"))?;
    arr.iter()
        .map(|v| {
            v.as_u64()
                .map(|x| x as usize)
                .ok_or_else(|| format!("panel[{i}]: expected non-negative integers"))
        })
        .collect()
}

/// Header of the simulation report CSV.
pub const REPORT_HEADER: &str = "hypothesis,n,lambda,miscls,miscls_lo,miscls_hi,reject,reject_lo,reject_hi,falarm,falarm_lo,falarm_hi,bound_miscls,bound_falarm,bound_reject";

fn fmt_opt_est(cell: Option<(f64, f64, f64)>) -> String {
    match cell {
        Some((v, lo, hi)) => format!("{v:.6},{lo:.6},{hi:.6}"),
        None => ",,".to_string(),
    }
}

fn fmt_opt_bound(b: Option<f64>) -> String {
    match b {
        Some(v) => format!("{v:.6e}"),
        None => String::new(),
    }
}

/// Render a TrialReport in the report CSV layout.
pub fn report_csv(report: &TrialReport) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for row in &report.rows {
        let hypothesis = match &row.truth {
            Some(b) => b
                .members()
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(" "),
            None => "null".to_string(),
        };
        let est = |e: Option<oht_core::Estimate>| e.map(|e| (e.value, e.lo, e.hi));
        out.push_str(&format!(
            "{hypothesis},{},{:.6},{},{},{},{},{},{}\n",
            row.n,
            row.lambda,
            fmt_opt_est(est(row.misclassification)),
            fmt_opt_est(est(row.false_reject)),
            fmt_opt_est(est(row.false_alarm)),
            fmt_opt_bound(row.bound_misclassification),
            fmt_opt_bound(row.bound_false_alarm),
            fmt_opt_bound(row.bound_false_reject),
        ));
    }
    out
}

/// Minimal CSV reader for the suite's own outputs: returns the header cells
/// and rows of string cells, skipping `#` comment lines.
pub fn read_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>), String> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| "csv: empty input".to_string())?
        .split(',')
        .map(|s| s.to_string())
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let cells: Vec<String> = line.split(',').map(|s| s.to_string()).collect();
        if cells.len() != header.len() {
            return Err(format!(
                "csv row {}: {} cells, header has {}",
                i + 1,
                cells.len(),
                header.len()
            ));
        }
        rows.push(cells);
    }
    Ok((header, rows))
}

/// Parse an optional float cell from [`read_csv`] output.
pub fn parse_cell(cell: &str) -> Result<Option<f64>, String> {
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse::<f64>()
        .map(Some)
        .map_err(|_| format!("csv: bad number {cell:?}"))
}
