use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use neckpinch::critsearch::{bisect_with, run_flow, Endpoints};
use neckpinch::geometry::ricci_eigenvalues;
use neckpinch::io::{
    load_config, profile_file_name, write_profile, BisectLog, RunManifest, TimeseriesWriter,
    BISECT_LOG_FILE, MANIFEST_FILE, TIMESERIES_FILE,
};
use neckpinch::{evolve, CurvatureProfile, Error, FieldState, FlowConfig, Grid, OutcomeKind};

/// Exit status when the horizon is reached without a decision, or a
/// bisection stops on such a midpoint.
const EXIT_UNDECIDED: u8 = 3;
/// Exit status for numerical failure.
const EXIT_FAILURE: u8 = 4;

#[derive(Parser)]
#[command(version, about = "Ricci flow of corseted three-spheres")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one initial geometry and classify the outcome.
    Evolve {
        #[command(flatten)]
        flow: FlowArgs,
        /// Also write a profile every this many snapshots (0: first and last only).
        #[arg(long, default_value_t = 0)]
        profile_every: u64,
    },
    /// Bisect in lambda between a pinching and a rounding geometry.
    Bisect {
        #[command(flatten)]
        flow: FlowArgs,
        #[arg(long, default_value_t = 0.11)]
        lo: f64,
        #[arg(long, default_value_t = 0.2)]
        hi: f64,
        #[arg(long, default_value_t = 5e-4)]
        width_tol: f64,
        /// Skip evolving the bracket ends; they are taken as known.
        #[arg(long)]
        assume_bracket: bool,
    },
    /// Write the t = 0 profile only.
    InitialData {
        #[command(flatten)]
        flow: FlowArgs,
    },
}

/// Flow settings. Values given here override the config file.
#[derive(Args)]
struct FlowArgs {
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    #[arg(long)]
    n_points: Option<String>,
    #[arg(long)]
    dt_safety: Option<String>,
    #[arg(long)]
    fixed_dt: Option<String>,
    #[arg(long)]
    t_max: Option<String>,
    #[arg(long)]
    blowup_threshold: Option<String>,
    #[arg(long)]
    round_tol: Option<String>,
    #[arg(long)]
    snapshot_every: Option<String>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Flat key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl FlowArgs {
    fn config(&self) -> Result<FlowConfig, Error> {
        let flags = [
            ("lambda", &self.lambda),
            ("n-points", &self.n_points),
            ("dt-safety", &self.dt_safety),
            ("fixed-dt", &self.fixed_dt),
            ("t-max", &self.t_max),
            ("blowup-threshold", &self.blowup_threshold),
            ("round-tol", &self.round_tol),
            ("snapshot-every", &self.snapshot_every),
        ];
        let flags: Vec<(String, String)> = flags
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect();
        load_config(self.config.as_deref(), &flags)
    }

    fn out_dir(&self) -> Result<&Path, Error> {
        std::fs::create_dir_all(&self.out).map_err(|source| Error::Io {
            path: self.out.clone(),
            source,
        })?;
        Ok(&self.out)
    }
}

fn exit_for(kind: OutcomeKind) -> ExitCode {
    match kind {
        OutcomeKind::Subcritical | OutcomeKind::Supercritical => ExitCode::SUCCESS,
        OutcomeKind::Undecided => ExitCode::from(EXIT_UNDECIDED),
        OutcomeKind::NumericalFailure => ExitCode::from(EXIT_FAILURE),
    }
}

fn run_evolve(flow: &FlowArgs, profile_every: u64) -> Result<ExitCode, Error> {
    let config = flow.config()?;
    let out = flow.out_dir()?;
    let mut timeseries = TimeseriesWriter::create(&out.join(TIMESERIES_FILE))?;
    let mut files = vec![TIMESERIES_FILE.to_string()];
    let mut io_error = None;
    let mut snapshots: u64 = 0;
    // the final snapshot is only known once the run stops
    let mut last: Option<(u64, FieldState, CurvatureProfile)> = None;
    let mut last_written = None;

    let outcome = evolve(&config, |snap| {
        if io_error.is_some() {
            return;
        }
        let result = timeseries.record(snap).map_err(|source| Error::Io {
            path: out.join(TIMESERIES_FILE),
            source,
        });
        let first = snapshots == 0;
        let periodic = profile_every > 0 && snapshots.is_multiple_of(profile_every);
        let result = result.and_then(|()| {
            if first || periodic {
                let name = profile_file_name(snap.step);
                write_profile(&out.join(&name), snap.state, snap.profile, snap.grid)?;
                files.push(name);
                last_written = Some(snap.step);
            }
            Ok(())
        });
        if let Err(e) = result {
            io_error = Some(e);
        }
        snapshots += 1;
        last = Some((snap.step, snap.state.clone(), snap.profile.clone()));
    })?;
    if let Some(e) = io_error {
        return Err(e);
    }
    if let Some((step, state, profile)) = last {
        if last_written != Some(step) {
            let grid = Grid::new(config.n_total)?;
            let name = profile_file_name(step);
            write_profile(&out.join(&name), &state, &profile, &grid)?;
            files.push(name);
        }
    }

    RunManifest::for_run(&config, &outcome, &files).write(&out.join(MANIFEST_FILE))?;
    eprintln!(
        "lambda={} outcome={} t_final={} steps={}",
        config.lambda,
        outcome.kind(),
        outcome.t_final,
        outcome.steps
    );
    Ok(exit_for(outcome.kind()))
}

fn run_bisect(
    flow: &FlowArgs,
    lo: f64,
    hi: f64,
    width_tol: f64,
    assume_bracket: bool,
) -> Result<ExitCode, Error> {
    let config = flow.config()?;
    let out = flow.out_dir()?;
    let log_path = out.join(BISECT_LOG_FILE);
    let mut log = BisectLog::create(&log_path)?;
    let mut io_error = None;
    let endpoints = if assume_bracket {
        Endpoints::Assume
    } else {
        Endpoints::Verify
    };

    let result = bisect_with(lo, hi, width_tol, endpoints, run_flow(&config), |it| {
        eprintln!(
            "lambda={} outcome={} t_final={}",
            it.lambda, it.outcome, it.t_final
        );
        if let Err(source) = log.record(it) {
            io_error.get_or_insert(Error::Io {
                path: log_path.clone(),
                source,
            });
        }
    })?;
    if let Some(e) = io_error {
        return Err(e);
    }

    let files = [BISECT_LOG_FILE.to_string()];
    RunManifest::for_bisection(&config, width_tol, &result, &files)
        .write(&out.join(MANIFEST_FILE))?;
    eprintln!(
        "lambda_crit = {} +/- {} (n-points={}, dt-safety={})",
        result.lambda_crit_estimate,
        result.half_width(),
        config.n_total,
        config.dt_safety
    );
    Ok(match result.halted {
        None => ExitCode::SUCCESS,
        Some(kind) => {
            eprintln!("stopped early: a midpoint was {kind}");
            exit_for(kind)
        }
    })
}

fn run_initial_data(flow: &FlowArgs) -> Result<ExitCode, Error> {
    let config = flow.config()?;
    let out = flow.out_dir()?;
    let grid = Grid::new(config.n_total)?;
    let state = FieldState::corseted(config.lambda, &grid)?;
    let profile = ricci_eigenvalues(&state, &grid);
    write_profile(&out.join(profile_file_name(0)), &state, &profile, &grid)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Evolve {
            flow,
            profile_every,
        } => run_evolve(flow, *profile_every),
        Command::Bisect {
            flow,
            lo,
            hi,
            width_tol,
            assume_bracket,
        } => run_bisect(flow, *lo, *hi, *width_tol, *assume_bracket),
        Command::InitialData { flow } => run_initial_data(flow),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
