//! Run output: a diagnostics CSV whose comment header embeds the exact
//! configuration, plus raw binary state snapshots.
//!
//! Every number is written in shortest round-trip decimal form, so reading
//! the file back reproduces the doubles bit for bit. Missing diagnostics
//! (weighted entropy without a certificate, energy for non-symmetric
//! coupling, solver fields on the initial row) are empty cells, never zeros.

use crate::config::RunConfig;
use crate::entropy::SpeciesState;
use crate::grid::{GridSpec, ScalarField};
use crate::scheme::{InitialDiagnostics, RunResult, StepDiagnostics};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("snapshot metadata: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("embedded config: {0}")]
    Config(#[from] crate::config::ConfigError),
    #[error("snapshot: {0}")]
    Snapshot(String),
}

fn malformed(line: usize, message: impl Into<String>) -> OutputError {
    OutputError::Malformed { line, message: message.into() }
}

/// Column names, with one `mass_i` column per species (1-based).
pub fn csv_header(m: usize) -> String {
    let mut s = String::from("step,time");
    for i in 1..=m {
        write!(s, ",mass_{i}").unwrap();
    }
    s.push_str(
        ",entropy,entropy_weighted,energy,diss_grad,diss_moll,min_value,\
         est0_lhs,est0_rhs,picard_iters,linear_residual",
    );
    s
}

fn push_f64(s: &mut String, v: f64) {
    write!(s, ",{v}").unwrap();
}

fn push_opt(s: &mut String, v: Option<f64>) {
    match v {
        Some(v) => push_f64(s, v),
        None => s.push(','),
    }
}

fn initial_row(t0: f64, d: &InitialDiagnostics) -> String {
    let mut s = format!("0,{t0}");
    for &m in &d.masses {
        push_f64(&mut s, m);
    }
    push_f64(&mut s, d.entropy);
    push_opt(&mut s, d.entropy_weighted);
    push_opt(&mut s, d.energy);
    s.push_str(",,"); // no dissipation before the first step
    push_f64(&mut s, d.min_value);
    s.push_str(",,,,"); // no stability bound, no solver counters
    s
}

fn step_row(d: &StepDiagnostics) -> String {
    let mut s = format!("{},{}", d.step, d.time);
    for &m in &d.masses {
        push_f64(&mut s, m);
    }
    push_f64(&mut s, d.entropy);
    push_opt(&mut s, d.entropy_weighted);
    push_opt(&mut s, d.energy);
    push_f64(&mut s, d.diss_grad);
    push_f64(&mut s, d.diss_moll);
    push_f64(&mut s, d.min_value);
    push_f64(&mut s, d.est0_lhs);
    push_f64(&mut s, d.est0_rhs);
    write!(s, ",{}", d.picard_iters).unwrap();
    push_f64(&mut s, d.linear_residual);
    s
}

/// Renders a complete run as CSV text. When `config` is given, its TOML
/// serialization is embedded line by line as a `# ` comment block above the
/// header, so the file carries its own provenance and [`read_run_csv`] can
/// recover the exact configuration.
pub fn run_csv(config: Option<&RunConfig>, t0: f64, result: &RunResult) -> String {
    let m = result.initial.masses.len();
    let mut out = String::new();
    if let Some(cfg) = config {
        for line in cfg.to_toml().lines() {
            if line.is_empty() {
                out.push_str("#\n");
            } else {
                writeln!(out, "# {line}").unwrap();
            }
        }
    }
    writeln!(out, "{}", csv_header(m)).unwrap();
    writeln!(out, "{}", initial_row(t0, &result.initial)).unwrap();
    for rec in &result.records {
        writeln!(out, "{}", step_row(rec)).unwrap();
    }
    out
}

pub fn write_run_csv(
    path: &Path,
    config: Option<&RunConfig>,
    t0: f64,
    result: &RunResult,
) -> Result<(), OutputError> {
    fs::write(path, run_csv(config, t0, result))?;
    Ok(())
}

/// One parsed CSV row. Empty cells come back as `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub step: usize,
    pub time: f64,
    pub masses: Vec<f64>,
    pub entropy: f64,
    pub entropy_weighted: Option<f64>,
    pub energy: Option<f64>,
    pub diss_grad: Option<f64>,
    pub diss_moll: Option<f64>,
    pub min_value: f64,
    pub est0_lhs: Option<f64>,
    pub est0_rhs: Option<f64>,
    pub picard_iters: Option<usize>,
    pub linear_residual: Option<f64>,
}

/// A re-read diagnostics file: the embedded configuration (when the writer
/// included one) and every data row, step 0 first.
#[derive(Debug, Clone)]
pub struct ParsedRun {
    pub config: Option<RunConfig>,
    pub rows: Vec<CsvRow>,
}

/// Parses text produced by [`run_csv`].
pub fn read_run_csv(text: &str) -> Result<ParsedRun, OutputError> {
    let mut config_text = String::new();
    let mut lines = text.lines().enumerate().peekable();
    while let Some((_, line)) = lines.peek() {
        if let Some(rest) = line.strip_prefix('#') {
            config_text.push_str(rest.strip_prefix(' ').unwrap_or(rest));
            config_text.push('\n');
            lines.next();
        } else {
            break;
        }
    }
    let config = if config_text.trim().is_empty() {
        None
    } else {
        Some(RunConfig::from_toml(&config_text)?)
    };

    let Some((header_no, header)) = lines.next() else {
        return Err(malformed(0, "missing header"));
    };
    let cols: Vec<&str> = header.split(',').collect();
    let m = cols.iter().filter(|c| c.starts_with("mass_")).count();
    if m == 0 || cols != csv_header(m).split(',').collect::<Vec<_>>() {
        return Err(malformed(header_no + 1, format!("unexpected header {header:?}")));
    }

    let want = 2 + m + 10;
    let mut rows = Vec::new();
    for (no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != want {
            return Err(malformed(
                no + 1,
                format!("expected {want} fields, got {}", fields.len()),
            ));
        }
        let req = |i: usize| -> Result<f64, OutputError> {
            fields[i]
                .parse::<f64>()
                .map_err(|e| malformed(no + 1, format!("column {}: {e}", cols[i])))
        };
        let opt = |i: usize| -> Result<Option<f64>, OutputError> {
            if fields[i].is_empty() { Ok(None) } else { req(i).map(Some) }
        };
        let step: usize = fields[0]
            .parse()
            .map_err(|e| malformed(no + 1, format!("column step: {e}")))?;
        let mut masses = Vec::with_capacity(m);
        for i in 0..m {
            masses.push(req(2 + i)?);
        }
        let b = 2 + m;
        rows.push(CsvRow {
            step,
            time: req(1)?,
            masses,
            entropy: req(b)?,
            entropy_weighted: opt(b + 1)?,
            energy: opt(b + 2)?,
            diss_grad: opt(b + 3)?,
            diss_moll: opt(b + 4)?,
            min_value: req(b + 5)?,
            est0_lhs: opt(b + 6)?,
            est0_rhs: opt(b + 7)?,
            picard_iters: if fields[b + 8].is_empty() {
                None
            } else {
                Some(fields[b + 8].parse().map_err(|e| {
                    malformed(no + 1, format!("column picard_iters: {e}"))
                })?)
            },
            linear_residual: opt(b + 9)?,
        });
    }
    Ok(ParsedRun { config, rows })
}

/// Sidecar metadata for one state snapshot.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SnapshotMeta {
    pub step: usize,
    pub time: f64,
    pub dim: usize,
    pub n: usize,
    pub m: usize,
    pub masses: Vec<f64>,
    /// Always "little": the raw files hold little-endian doubles in
    /// row-major cell order.
    pub byte_order: String,
    /// Always "f64".
    pub dtype: String,
}

fn snapshot_dir_name(step: usize) -> String {
    format!("step_{step:08}")
}

/// Writes `dir/step_XXXXXXXX/` holding `meta.json` and one raw
/// little-endian `species_i.raw` per species. The directory is assembled
/// under a temporary name and renamed into place, so readers never observe
/// a half-written snapshot. Returns the final directory path.
pub fn write_snapshot(
    dir: &Path,
    step: usize,
    state: &SpeciesState,
) -> Result<PathBuf, OutputError> {
    let grid = state.grid();
    let meta = SnapshotMeta {
        step,
        time: state.time(),
        dim: grid.dim(),
        n: grid.n(),
        m: state.m(),
        masses: state.masses(),
        byte_order: "little".to_string(),
        dtype: "f64".to_string(),
    };
    fs::create_dir_all(dir)?;
    let final_dir = dir.join(snapshot_dir_name(step));
    let tmp_dir = dir.join(format!(".tmp_{}", snapshot_dir_name(step)));
    if tmp_dir.exists() {
        fs::remove_dir_all(&tmp_dir)?;
    }
    fs::create_dir(&tmp_dir)?;
    {
        let mut f = fs::File::create(tmp_dir.join("meta.json"))?;
        serde_json::to_writer_pretty(&mut f, &meta)?;
        f.write_all(b"\n")?;
    }
    for (i, field) in state.fields().iter().enumerate() {
        let mut bytes = Vec::with_capacity(field.values().len() * 8);
        for v in field.values() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(tmp_dir.join(format!("species_{i}.raw")), bytes)?;
    }
    if final_dir.exists() {
        fs::remove_dir_all(&final_dir)?;
    }
    fs::rename(&tmp_dir, &final_dir)?;
    Ok(final_dir)
}

/// Reads a snapshot directory written by [`write_snapshot`].
pub fn read_snapshot(snapshot_dir: &Path) -> Result<(SnapshotMeta, SpeciesState), OutputError> {
    let meta: SnapshotMeta =
        serde_json::from_str(&fs::read_to_string(snapshot_dir.join("meta.json"))?)?;
    if meta.byte_order != "little" || meta.dtype != "f64" {
        return Err(OutputError::Snapshot(format!(
            "unsupported layout: byte_order {:?}, dtype {:?}",
            meta.byte_order, meta.dtype
        )));
    }
    let grid = GridSpec::new(meta.dim, meta.n)
        .map_err(|e| OutputError::Snapshot(e.to_string()))?;
    let mut fields = Vec::with_capacity(meta.m);
    for i in 0..meta.m {
        let bytes = fs::read(snapshot_dir.join(format!("species_{i}.raw")))?;
        if bytes.len() != grid.cells() * 8 {
            return Err(OutputError::Snapshot(format!(
                "species_{i}.raw holds {} bytes, expected {}",
                bytes.len(),
                grid.cells() * 8
            )));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        fields.push(
            ScalarField::from_values(grid, values)
                .map_err(|e| OutputError::Snapshot(e.to_string()))?,
        );
    }
    let mut state = SpeciesState::new(fields, 0.0)
        .map_err(|e| OutputError::Snapshot(e.to_string()))?;
    state.set_time(meta.time);
    Ok((meta, state))
}
