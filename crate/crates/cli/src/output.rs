//! Output rows, metadata header and atomic file writes.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::error::CliError;
use crate::experiment::ExperimentSpec;

pub const SCHEMA: u32 = 1;

/// One estimate in long format. Cells that do not apply are left empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub source: &'static str,
    pub quantity: &'static str,
    pub n: Option<usize>,
    pub g: Option<f64>,
    pub eps: Option<f64>,
    pub degree: Option<usize>,
    pub receiver_degree: Option<usize>,
    pub kappa: Option<usize>,
    pub eta: Option<f64>,
    pub dist: Option<String>,
    pub estimate: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub trials: Option<u64>,
}

pub const HEADER: &str =
    "source,quantity,n,g,eps,degree,receiver_degree,kappa,eta,dist,estimate,ci_low,ci_high,trials";

impl Row {
    pub fn new(source: &'static str, quantity: &'static str, estimate: f64) -> Self {
        Row {
            source,
            quantity,
            n: None,
            g: None,
            eps: None,
            degree: None,
            receiver_degree: None,
            kappa: None,
            eta: None,
            dist: None,
            estimate,
            ci_low: None,
            ci_high: None,
            trials: None,
        }
    }

    pub fn at(mut self, n: usize, g: f64, eps: f64) -> Self {
        self.n = Some(n);
        self.g = Some(g);
        self.eps = Some(eps);
        self
    }

    pub fn degrees(mut self, degree: Option<usize>, receiver_degree: Option<usize>) -> Self {
        self.degree = degree;
        self.receiver_degree = receiver_degree;
        self
    }

    pub fn interval(mut self, ci_low: f64, ci_high: f64, trials: u64) -> Self {
        self.ci_low = Some(ci_low);
        self.ci_high = Some(ci_high);
        self.trials = Some(trials);
        self
    }

    pub fn to_csv(&self) -> String {
        fn cell<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map(ToString::to_string).unwrap_or_default()
        }
        let real = |v: &Option<f64>| v.map(float).unwrap_or_default();
        [
            self.source.to_string(),
            self.quantity.to_string(),
            cell(&self.n),
            real(&self.g),
            real(&self.eps),
            cell(&self.degree),
            cell(&self.receiver_degree),
            cell(&self.kappa),
            real(&self.eta),
            cell(&self.dist),
            float(self.estimate),
            real(&self.ci_low),
            real(&self.ci_high),
            cell(&self.trials),
        ]
        .join(",")
    }
}

/// Shortest representation that parses back to the same value, in
/// scientific notation when plain decimals would be long.
fn float(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

/// Metadata lines: schema version, tool version, and the resolved experiment
/// that produced the data, which `--config` accepts back.
fn metadata(spec: &ExperimentSpec) -> Result<String, CliError> {
    let config = serde_json::to_string(spec).map_err(|e| CliError::Io(format!("cannot encode config: {e}")))?;
    Ok(format!("# schema: {SCHEMA}\n# generator: bcsa {}\n# config: {config}\n", env!("CARGO_PKG_VERSION")))
}

pub fn csv(spec: &ExperimentSpec, rows: &[Row]) -> Result<String, CliError> {
    let mut out = metadata(spec)?;
    out.push_str(HEADER);
    out.push('\n');
    for row in rows {
        writeln!(out, "{}", row.to_csv()).expect("writing to a string");
    }
    Ok(out)
}

pub fn json(spec: &ExperimentSpec, data: serde_json::Value) -> Result<String, CliError> {
    let doc = serde_json::json!({ "schema": SCHEMA, "generator": format!("bcsa {}", env!("CARGO_PKG_VERSION")), "config": spec, "data": data });
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(format!("cannot encode output: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Recovers the experiment from a JSON config, a JSON output document, or
/// the `# config:` line of a CSV output.
pub fn read_config(text: &str) -> Result<ExperimentSpec, CliError> {
    let invalid = |e: serde_json::Error| CliError::Validation(format!("invalid config: {e}"));
    if let Some(line) = text.lines().find_map(|l| l.strip_prefix("# config: ")) {
        return serde_json::from_str(line).map_err(invalid);
    }
    let value: serde_json::Value = serde_json::from_str(text).map_err(invalid)?;
    match value.get("config") {
        Some(inner) if value.get("data").is_some() => serde_json::from_value(inner.clone()).map_err(invalid),
        _ => serde_json::from_value(value).map_err(invalid),
    }
}
