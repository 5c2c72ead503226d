use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::empirical::ReplicationResult;
use crate::{Error, Result};

/// Column order of every curve CSV after the leading `m` or `lambda`.
pub const CURVE_COLUMNS: [&str; 11] = [
    "delta",
    "bias_theory",
    "var_theory",
    "total_theory",
    "diverged_flag",
    "bias_emp_mean",
    "bias_emp_std",
    "var_emp_mean",
    "var_emp_std",
    "reps_used",
    "kappa",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridValue {
    M(usize),
    Lambda(f64),
}

/// One grid point of a sweep. Empirical columns are `None` (written `NA`)
/// when no replications were run.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub grid: GridValue,
    pub delta: Option<f64>,
    pub bias_theory: f64,
    pub var_theory: f64,
    pub total_theory: f64,
    pub diverged: bool,
    pub bias_emp_mean: Option<f64>,
    pub bias_emp_std: Option<f64>,
    pub var_emp_mean: Option<f64>,
    pub var_emp_std: Option<f64>,
    pub reps_used: Option<usize>,
    pub kappa: Option<f64>,
}

/// 17 significant digits; non-finite values as `inf`, `-inf`, `NA`.
pub fn fmt_real(v: f64) -> String {
    if v.is_nan() {
        "NA".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), fmt_real)
}

fn parse_opt(s: &str, col: &str) -> Result<Option<f64>> {
    if s == "NA" {
        return Ok(None);
    }
    s.parse::<f64>().map(Some).map_err(|_| Error::arg(format!("column {col}: cannot parse `{s}`")))
}

fn parse_req(s: &str, col: &str) -> Result<f64> {
    parse_opt(s, col)?.ok_or_else(|| Error::arg(format!("column {col}: missing value")))
}

impl CurveRow {
    fn fields(&self) -> Vec<String> {
        let grid = match self.grid {
            GridValue::M(m) => m.to_string(),
            GridValue::Lambda(l) => fmt_real(l),
        };
        vec![
            grid,
            fmt_opt(self.delta),
            fmt_real(self.bias_theory),
            fmt_real(self.var_theory),
            fmt_real(self.total_theory),
            if self.diverged { "1" } else { "0" }.into(),
            fmt_opt(self.bias_emp_mean),
            fmt_opt(self.bias_emp_std),
            fmt_opt(self.var_emp_mean),
            fmt_opt(self.var_emp_std),
            self.reps_used.map_or_else(|| "NA".into(), |r| r.to_string()),
            fmt_opt(self.kappa),
        ]
    }
}

fn header(first: &str) -> Vec<&str> {
    std::iter::once(first).chain(CURVE_COLUMNS).collect()
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

pub fn write_curve_csv<W: Write>(w: W, rows: &[CurveRow]) -> Result<()> {
    let first = match rows.first().map(|r| r.grid) {
        Some(GridValue::Lambda(_)) => "lambda",
        _ => "m",
    };
    let mut out = writer(w);
    out.write_record(header(first))?;
    for r in rows {
        out.write_record(r.fields())?;
    }
    out.flush()?;
    Ok(())
}

/// Parses a curve CSV written by [`write_curve_csv`], checking the header.
pub fn read_curve_csv<R: std::io::Read>(r: R) -> Result<Vec<CurveRow>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(r);
    let head: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let first = head.first().map(String::as_str).unwrap_or("");
    if !(first == "m" || first == "lambda") || head[1..] != CURVE_COLUMNS {
        return Err(Error::arg(format!("unexpected curve header {head:?}")));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let f = |i: usize| rec.get(i).unwrap_or("");
        let grid = if first == "m" {
            GridValue::M(f(0).parse().map_err(|_| Error::arg(format!("column m: cannot parse `{}`", f(0))))?)
        } else {
            GridValue::Lambda(parse_req(f(0), "lambda")?)
        };
        rows.push(CurveRow {
            grid,
            delta: parse_opt(f(1), "delta")?,
            bias_theory: parse_req(f(2), "bias_theory")?,
            var_theory: parse_req(f(3), "var_theory")?,
            total_theory: parse_req(f(4), "total_theory")?,
            diverged: match f(5) {
                "1" => true,
                "0" => false,
                other => return Err(Error::arg(format!("column diverged_flag: cannot parse `{other}`"))),
            },
            bias_emp_mean: parse_opt(f(6), "bias_emp_mean")?,
            bias_emp_std: parse_opt(f(7), "bias_emp_std")?,
            var_emp_mean: parse_opt(f(8), "var_emp_mean")?,
            var_emp_std: parse_opt(f(9), "var_emp_std")?,
            reps_used: match f(10) {
                "NA" => None,
                s => Some(s.parse().map_err(|_| Error::arg(format!("column reps_used: cannot parse `{s}`")))?),
            },
            kappa: parse_opt(f(11), "kappa")?,
        });
    }
    Ok(rows)
}

/// Per-replication records.
pub fn write_replications_csv<W: Write>(w: W, results: &[ReplicationResult]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["grid_index", "rep_index", "m", "lambda", "bias", "variance", "kappa_hat", "status", "note"])?;
    for r in results {
        out.write_record([
            r.grid_index.to_string(),
            r.rep_index.to_string(),
            r.m.map_or_else(|| "NA".into(), |m| m.to_string()),
            fmt_opt(r.lambda),
            fmt_real(r.bias),
            fmt_real(r.variance),
            fmt_opt(r.kappa_hat),
            serde_json::to_value(r.status)?.as_str().unwrap_or("").to_string(),
            r.note.clone().unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Writes any table with a header and pre-formatted cells.
pub fn write_table<W: Write>(w: W, head: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(head)?;
    for r in rows {
        out.write_record(r)?;
    }
    out.flush()?;
    Ok(())
}

/// Run metadata written next to every CSV.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata<C: Serialize> {
    pub artifact: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: C,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<InstanceSummary>,
    pub assumptions: Vec<String>,
}

impl<C: Serialize> Metadata<C> {
    pub fn new(command: impl Into<String>, config: C) -> Self {
        Metadata {
            artifact: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            config,
            instance: None,
            assumptions: vec![],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceSummary {
    pub n: usize,
    pub d: usize,
    pub trace: f64,
    pub signal_energy: f64,
    pub noise_variance: f64,
    pub max_eigenvalue: f64,
    pub min_eigenvalue: f64,
}

impl InstanceSummary {
    pub fn of(inst: &crate::empirical::ProblemInstance) -> Self {
        InstanceSummary {
            n: inst.n,
            d: inst.d(),
            trace: inst.trace(),
            signal_energy: inst.signal_energy(),
            noise_variance: inst.sigma_noise * inst.sigma_noise,
            max_eigenvalue: inst.eigs().max(),
            min_eigenvalue: inst.eigs().min(),
        }
    }
}

/// `out.csv` -> `out.<suffix>`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}
