//! Text formats: `key=value` config files and run manifests, and the CSV
//! tables written during a run.
//!
//! Floats in CSV tables are written with 17 significant digits, so parsing
//! them back gives the same bits. Manifests use the shortest representation
//! that round-trips.

use std::fmt::Display;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::classify::{PinchDiagnostics, RunOutcome, Verdict};
use crate::critsearch::{BisectionResult, Iteration};
use crate::error::{Error, Result};
use crate::flow::{DtPolicy, FlowConfig, Snapshot};
use crate::geometry::{area_at, CurvatureProfile, FieldState};
use crate::grid::Grid;

pub const PROFILE_HEADER: &str = "t,psi,X,S,W,R_s2,R_perp,area";
pub const TIMESERIES_HEADER: &str = "t,max_R_s2,argmax_psi_R_s2,max_R_perp,r_hat,volume,min_area";
pub const BISECT_LOG_HEADER: &str = "iter,lambda,outcome,t_final";

pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const BISECT_LOG_FILE: &str = "bisect_log.csv";
pub const MANIFEST_FILE: &str = "manifest";

pub fn profile_file_name(step: u64) -> String {
    format!("profile_{step}.csv")
}

/// Config keys, in the order they are echoed.
pub const CONFIG_KEYS: [&str; 8] = [
    "lambda",
    "n-points",
    "dt-safety",
    "fixed-dt",
    "t-max",
    "blowup-threshold",
    "round-tol",
    "snapshot-every",
];

const MANIFEST_FORMAT_VERSION: u32 = 1;

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(io_at(path))
}

/// Splits `key=value` lines, dropping blank lines and `#` comments.
pub fn parse_key_values(text: &str, what: &'static str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |reason: &str| Error::Syntax {
            what,
            line: i + 1,
            reason: reason.to_string(),
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| syntax("expected key=value"))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(syntax("empty key"));
        }
        out.push((key.to_string(), value.trim().to_string()));
    }
    Ok(out)
}

fn parse_number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::InvalidConfig {
        key: key.to_string(),
        reason: format!("not a valid number: `{value}`"),
    })
}

/// Sets one config field. `fixed-dt` accepts `none` to restore the adaptive
/// policy.
pub fn apply_setting(config: &mut FlowConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "lambda" => config.lambda = parse_number(key, value)?,
        "n-points" => config.n_total = parse_number(key, value)?,
        "dt-safety" => config.dt_safety = parse_number(key, value)?,
        "fixed-dt" => {
            config.fixed_dt = match value {
                "none" => None,
                v => Some(parse_number(key, v)?),
            }
        }
        "t-max" => config.t_max = parse_number(key, value)?,
        "blowup-threshold" => config.curvature_blowup = parse_number(key, value)?,
        "round-tol" => config.round_tol = parse_number(key, value)?,
        "snapshot-every" => config.snapshot_every = parse_number(key, value)?,
        other => return Err(Error::UnknownKey(other.to_string())),
    }
    Ok(())
}

/// Defaults, then the config file (if any), then `flags`; later settings
/// win. The result is validated.
pub fn parse_config(file_text: Option<&str>, flags: &[(String, String)]) -> Result<FlowConfig> {
    let mut config = FlowConfig::default();
    let file = match file_text {
        Some(text) => parse_key_values(text, "config")?,
        None => Vec::new(),
    };
    for (key, value) in file.iter().chain(flags) {
        apply_setting(&mut config, key, value)?;
    }
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: Option<&Path>, flags: &[(String, String)]) -> Result<FlowConfig> {
    let text = path.map(read_text).transpose()?;
    parse_config(text.as_deref(), flags)
}

/// `(key, value)` pairs that [`parse_config`] turns back into `config`.
pub fn config_pairs(config: &FlowConfig) -> Vec<(&'static str, String)> {
    let values = [
        config.lambda.to_string(),
        config.n_total.to_string(),
        config.dt_safety.to_string(),
        config
            .fixed_dt
            .map_or_else(|| "none".to_string(), |dt| dt.to_string()),
        config.t_max.to_string(),
        config.curvature_blowup.to_string(),
        config.round_tol.to_string(),
        config.snapshot_every.to_string(),
    ];
    CONFIG_KEYS.into_iter().zip(values).collect()
}

/// Ordered `key=value` record of one run or search.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunManifest {
    entries: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(command: &str, config: &FlowConfig) -> Self {
        let mut m = Self::default();
        m.push("format-version", MANIFEST_FORMAT_VERSION);
        m.push("program-version", env!("CARGO_PKG_VERSION"));
        m.push("command", command);
        for (key, value) in config_pairs(config) {
            m.push(key, value);
        }
        let policy = match config.dt_policy() {
            DtPolicy::Adaptive => "adaptive",
            DtPolicy::Fixed(_) => "fixed",
        };
        m.push("dt-policy", policy);
        m
    }

    pub fn for_run(config: &FlowConfig, outcome: &RunOutcome, files: &[String]) -> Self {
        let mut m = Self::new("evolve", config);
        m.push("outcome", outcome.kind());
        m.push("t-final", outcome.t_final);
        m.push("steps", outcome.steps);
        match &outcome.verdict {
            Verdict::Subcritical {
                curvature,
                max_abs_s,
            } => {
                m.push("limit-curvature", curvature);
                m.push("max-abs-s", max_abs_s);
            }
            Verdict::Supercritical {
                pinch_time,
                diagnostics,
            } => {
                m.push("pinch-time", pinch_time);
                m.push_diagnostics(diagnostics);
            }
            Verdict::Undecided {
                diagnostics: Some(d),
            } => m.push_diagnostics(d),
            Verdict::Undecided { diagnostics: None } => {}
            Verdict::NumericalFailure { last_finite_t } => {
                m.push("last-finite-t", last_finite_t);
            }
        }
        m.push("files", files.join(","));
        m
    }

    pub fn for_bisection(
        config: &FlowConfig,
        width_tol: f64,
        result: &BisectionResult,
        files: &[String],
    ) -> Self {
        let mut m = Self::new("bisect", config);
        m.push("width-tol", width_tol);
        m.push("lambda-lo", result.lambda_lo);
        m.push("lambda-hi", result.lambda_hi);
        m.push("bracket-width", result.bracket_width);
        m.push("lambda-crit-estimate", result.lambda_crit_estimate);
        m.push("lambda-crit-half-width", result.half_width());
        m.push("evaluations", result.iterations.len());
        m.push("halted", result.halted.map_or("no", |kind| kind.as_str()));
        m.push("files", files.join(","));
        m
    }

    fn push_diagnostics(&mut self, d: &PinchDiagnostics) {
        self.push("max-r-s2", d.max_r_s2);
        self.push("argmax-psi-r-s2", d.argmax_psi);
        self.push("max-r-perp", d.max_r_perp);
        self.push("min-area", d.min_area);
        self.push("argmin-area-psi", d.argmin_area_psi);
    }

    /// Appends an entry. Keys must be unique and free of `=`, `#` and line
    /// breaks; values free of `#` and line breaks.
    pub fn push(&mut self, key: &str, value: impl Display) {
        let value = value.to_string();
        debug_assert!(!key.contains(['=', '#', '\n']) && !value.contains(['#', '\n']));
        debug_assert!(self.get(key).is_none(), "duplicate manifest key {key}");
        self.entries.push((key.to_string(), value));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn parse(text: &str) -> Result<Self> {
        let entries = parse_key_values(text, "manifest")?;
        for (i, (key, _)) in entries.iter().enumerate() {
            if entries[..i].iter().any(|(k, _)| k == key) {
                return Err(Error::Syntax {
                    what: "manifest",
                    line: i + 1,
                    reason: format!("duplicate key `{key}`"),
                });
            }
        }
        Ok(Self { entries })
    }

    /// The echoed flow configuration.
    pub fn config(&self) -> Result<FlowConfig> {
        let pairs: Vec<(String, String)> = self
            .entries
            .iter()
            .filter(|(k, _)| CONFIG_KEYS.contains(&k.as_str()))
            .cloned()
            .collect();
        parse_config(None, &pairs)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_string()).map_err(io_at(path))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?)
    }
}

impl Display for RunManifest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (key, value) in &self.entries {
            writeln!(f, "{key}={value}")?;
        }
        Ok(())
    }
}

fn write_row<W: Write>(out: &mut W, values: &[f64]) -> io::Result<()> {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.write_all(b",")?;
        }
        write!(out, "{v:.16e}")?;
    }
    out.write_all(b"\n")
}

/// One row per interior point, in increasing ψ.
pub fn emit_profile<W: Write>(
    out: &mut W,
    state: &FieldState,
    profile: &CurvatureProfile,
    grid: &Grid,
) -> io::Result<()> {
    writeln!(out, "{PROFILE_HEADER}")?;
    let w = state.w(grid);
    for k in grid.interior() {
        write_row(
            out,
            &[
                state.t,
                grid.psi()[k],
                state.x[k],
                state.s[k],
                w[k],
                profile.r_s2[k],
                profile.r_perp[k],
                area_at(state, grid, k),
            ],
        )?;
    }
    Ok(())
}

pub fn write_profile(
    path: &Path,
    state: &FieldState,
    profile: &CurvatureProfile,
    grid: &Grid,
) -> Result<()> {
    let file = File::create(path).map_err(io_at(path))?;
    let mut out = BufWriter::new(file);
    emit_profile(&mut out, state, profile, grid)
        .and_then(|()| out.flush())
        .map_err(io_at(path))
}

/// Per-snapshot summary table, flushed after every row.
pub struct TimeseriesWriter<W: Write> {
    out: W,
}

impl<W: Write> TimeseriesWriter<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        writeln!(out, "{TIMESERIES_HEADER}")?;
        out.flush()?;
        Ok(Self { out })
    }

    pub fn record(&mut self, snapshot: &Snapshot<'_>) -> io::Result<()> {
        self.record_values(
            snapshot.state.t,
            &snapshot.diagnostics(),
            snapshot.r_hat,
            snapshot.volume(),
        )
    }

    pub fn record_values(
        &mut self,
        t: f64,
        d: &PinchDiagnostics,
        r_hat: f64,
        volume: f64,
    ) -> io::Result<()> {
        write_row(
            &mut self.out,
            &[
                t,
                d.max_r_s2,
                d.argmax_psi,
                d.max_r_perp,
                r_hat,
                volume,
                d.min_area,
            ],
        )?;
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl TimeseriesWriter<BufWriter<File>> {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(io_at(path))?;
        Self::new(BufWriter::new(file)).map_err(io_at(path))
    }
}

/// Bisection iteration log, flushed after every row. Iterations count from 1.
pub struct BisectLog<W: Write> {
    out: W,
    next: usize,
}

impl<W: Write> BisectLog<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        writeln!(out, "{BISECT_LOG_HEADER}")?;
        out.flush()?;
        Ok(Self { out, next: 1 })
    }

    pub fn record(&mut self, it: &Iteration) -> io::Result<()> {
        writeln!(
            self.out,
            "{},{:.16e},{},{:.16e}",
            self.next, it.lambda, it.outcome, it.t_final
        )?;
        self.next += 1;
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl BisectLog<BufWriter<File>> {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(io_at(path))?;
        Self::new(BufWriter::new(file)).map_err(io_at(path))
    }
}

/// A comma-separated table read back as text.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Syntax {
                what: "table",
                line: 1,
                reason: "missing header".into(),
            })?
            .split(',')
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row: Vec<String> = line.split(',').map(str::to_string).collect();
            if row.len() != header.len() {
                return Err(Error::Syntax {
                    what: "table",
                    line: i + 2,
                    reason: format!("{} fields, header has {}", row.len(), header.len()),
                });
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?)
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn numbers(&self, name: &str) -> Result<Vec<f64>> {
        let c = self.column(name).ok_or_else(|| Error::Syntax {
            what: "table",
            line: 1,
            reason: format!("no column `{name}`"),
        })?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row[c].parse().map_err(|_| Error::Syntax {
                    what: "table",
                    line: i + 2,
                    reason: format!("`{}` is not a number", row[c]),
                })
            })
            .collect()
    }
}
