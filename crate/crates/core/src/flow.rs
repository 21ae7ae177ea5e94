//! Volume-normalized DeTurck flow for `X` and `S`, advanced by forward Euler.
//!
//! ```text
//! ∂t X = e^{2(W-X)} [ X'' + 2cotψ X' - 2 + ½(X'² + W'²) + 3X'W'
//!                     + (1 - e^{-4W}) (1/(2sin²ψ) + 1 + 2cotψ W') ] + r̂/3
//! ∂t S = e^{2(W-X)} [ S'' + 6cotψ S' - 8S - 3/(2sin⁴ψ) (1 - 4W - e^{-4W})
//!                     + (1 - e^{-4W})/sin²ψ (1 - 2[cotψ X' + 2sinψcosψ S' + 4cos²ψ S])
//!                     - ½ (P² + Q² + 6PQ) ]
//! ```
//!
//! with `P = X'/sinψ` and `Q = sinψ S' + 2cosψ S` (so `Q sinψ = W'`).

use crate::classify::{Assessment, Assessor, PinchDiagnostics, RunOutcome, Verdict};
use crate::error::{Error, Result};
use crate::geometry::{
    average_scalar_curvature, ricci_eigenvalues, volume_normalizer, CurvatureProfile, FieldState,
    Local,
};
use crate::grid::Grid;

pub const DEFAULT_N_POINTS: usize = 402;
pub const DEFAULT_DT_SAFETY: f64 = 0.5;
pub const DEFAULT_T_MAX: f64 = 50.0;
pub const DEFAULT_CURVATURE_BLOWUP: f64 = 1e6;
pub const DEFAULT_ROUND_TOL: f64 = 1e-3;
pub const DEFAULT_SNAPSHOT_EVERY: u64 = 100;

/// How the step size is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtPolicy {
    /// `dt_safety · Δψ² / (2 max e^{2(W-X)})`, re-evaluated every step.
    Adaptive,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub lambda: f64,
    pub n_total: usize,
    pub dt_safety: f64,
    pub fixed_dt: Option<f64>,
    pub t_max: f64,
    /// Supercritical once max R_{S²} reaches this.
    pub curvature_blowup: f64,
    /// Subcritical tolerance on the eigenvalue gap (relative to r̂) and on |S|.
    pub round_tol: f64,
    pub snapshot_every: u64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            lambda: 0.2,
            n_total: DEFAULT_N_POINTS,
            dt_safety: DEFAULT_DT_SAFETY,
            fixed_dt: None,
            t_max: DEFAULT_T_MAX,
            curvature_blowup: DEFAULT_CURVATURE_BLOWUP,
            round_tol: DEFAULT_ROUND_TOL,
            snapshot_every: DEFAULT_SNAPSHOT_EVERY,
        }
    }
}

impl FlowConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    /// Same settings at a different λ.
    pub fn at_lambda(&self, lambda: f64) -> Self {
        Self {
            lambda,
            ..self.clone()
        }
    }

    pub fn dt_policy(&self) -> DtPolicy {
        match self.fixed_dt {
            Some(dt) => DtPolicy::Fixed(dt),
            None => DtPolicy::Adaptive,
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn bad(key: &str, reason: String) -> Result<()> {
            Err(Error::InvalidConfig {
                key: key.to_string(),
                reason,
            })
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad("lambda", format!("must be positive, got {}", self.lambda));
        }
        if self.n_total < crate::grid::MIN_POINTS {
            return bad(
                "n-points",
                format!("must be at least 6, got {}", self.n_total),
            );
        }
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return bad(
                "dt-safety",
                format!("must lie in (0, 1], got {}", self.dt_safety),
            );
        }
        if let Some(dt) = self.fixed_dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad("fixed-dt", format!("must be positive, got {dt}"));
            }
        }
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return bad("t-max", format!("must be non-negative, got {}", self.t_max));
        }
        if self.curvature_blowup.is_nan() || self.curvature_blowup <= 0.0 {
            return bad(
                "blowup-threshold",
                format!("must be positive, got {}", self.curvature_blowup),
            );
        }
        if !(self.round_tol > 0.0 && self.round_tol.is_finite()) {
            return bad(
                "round-tol",
                format!("must be positive, got {}", self.round_tol),
            );
        }
        if self.snapshot_every == 0 {
            return bad("snapshot-every", "must be at least 1".to_string());
        }
        Ok(())
    }
}

/// Time derivatives of both fields plus the r̂ used for normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Rates {
    pub dx: Vec<f64>,
    pub ds: Vec<f64>,
    pub r_hat: f64,
}

/// Right-hand sides of the normalized flow. Ghost entries are zero.
pub fn rhs(state: &FieldState, grid: &Grid) -> Result<Rates> {
    let n = grid.n_total();
    let mut rates = Rates {
        dx: vec![0.0; n],
        ds: vec![0.0; n],
        r_hat: 0.0,
    };
    let mut scratch = Vec::with_capacity(n);
    rhs_into(state, grid, &mut scratch, &mut rates)?;
    Ok(rates)
}

fn rhs_into(
    state: &FieldState,
    grid: &Grid,
    locals: &mut Vec<Local>,
    out: &mut Rates,
) -> Result<()> {
    if !state.is_finite() {
        return Err(Error::NonFinite {
            t_last: state.t,
            t_attempted: state.t,
        });
    }
    locals.clear();
    locals.extend(grid.interior().map(|k| Local::at(state, grid, k)));

    let (num, den) = locals
        .iter()
        .map(Local::r_hat_terms)
        .fold((0.0, 0.0), |(n, d), (a, b)| (n + a, d + b));
    let r_hat = 2.0 * num / den;
    out.r_hat = r_hat;

    let n = grid.n_total();
    out.dx[0] = 0.0;
    out.ds[0] = 0.0;
    out.dx[n - 1] = 0.0;
    out.ds[n - 1] = 0.0;
    for (l, k) in locals.iter().zip(grid.interior()) {
        let sin2 = l.sin * l.sin;
        let dx = l.x2 + 2.0 * l.cot * l.x1 - 2.0
            + 0.5 * (l.x1 * l.x1 + l.w1 * l.w1)
            + 3.0 * l.x1 * l.w1
            + l.mu_s * (0.5 + sin2 * (1.0 + 2.0 * l.cot * l.w1));
        out.dx[k] = l.diff * dx + r_hat / 3.0;

        let p = l.x1 / l.sin;
        let q = l.sin * l.s1 + 2.0 * l.cos * l.s;
        let ds = l.s2 + 6.0 * l.cot * l.s1 - 8.0 * l.s - 1.5 * l.phi_s2
            + l.mu_s
                * (1.0
                    - 2.0
                        * (l.cot * l.x1 + 2.0 * l.sin * l.cos * l.s1 + 4.0 * l.cos * l.cos * l.s))
            - 0.5 * (p * p + q * q + 6.0 * p * q);
        out.ds[k] = l.diff * ds;
    }
    Ok(())
}

/// Largest diffusion coefficient `e^{2(W-X)}` over the interior.
fn max_diffusion(state: &FieldState, grid: &Grid) -> f64 {
    grid.interior()
        .map(|k| {
            let sin2 = grid.sin()[k] * grid.sin()[k];
            (2.0 * (state.s[k] * sin2 - state.x[k])).exp()
        })
        .fold(0.0, f64::max)
}

/// Explicit-diffusion stability limit scaled by `dt_safety`.
pub fn stable_dt(state: &FieldState, grid: &Grid, dt_safety: f64) -> f64 {
    dt_safety * grid.dpsi() * grid.dpsi() / (2.0 * max_diffusion(state, grid))
}

/// One forward Euler step of both fields from the same time level, followed
/// by the ghost fill.
pub fn step(state: &FieldState, dt: f64, grid: &Grid) -> Result<FieldState> {
    let mut next = state.clone();
    let mut stepper = Stepper::new(grid);
    stepper.advance(&mut next, dt, grid)?;
    Ok(next)
}

/// Reusable buffers for repeated stepping.
pub(crate) struct Stepper {
    rates: Rates,
    locals: Vec<Local>,
}

impl Stepper {
    pub(crate) fn new(grid: &Grid) -> Self {
        let n = grid.n_total();
        Self {
            rates: Rates {
                dx: vec![0.0; n],
                ds: vec![0.0; n],
                r_hat: 0.0,
            },
            locals: Vec::with_capacity(n),
        }
    }

    /// Advances in place. On a non-finite result the state is left at its
    /// previous (finite) values.
    pub(crate) fn advance(&mut self, state: &mut FieldState, dt: f64, grid: &Grid) -> Result<()> {
        if !(dt >= 0.0 && dt.is_finite()) {
            return Err(Error::InvalidTimeStep(dt));
        }
        rhs_into(state, grid, &mut self.locals, &mut self.rates)?;
        let t_next = state.t + dt;
        let interior = grid.interior();
        let finite = interior.clone().all(|k| {
            (state.x[k] + dt * self.rates.dx[k]).is_finite()
                && (state.s[k] + dt * self.rates.ds[k]).is_finite()
        });
        if !finite {
            return Err(Error::NonFinite {
                t_last: state.t,
                t_attempted: t_next,
            });
        }
        for k in interior {
            state.x[k] += dt * self.rates.dx[k];
            state.s[k] += dt * self.rates.ds[k];
        }
        state.fill_ghosts();
        state.t = t_next;
        Ok(())
    }
}

/// What the observer sees at each snapshot.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot<'a> {
    pub step: u64,
    pub grid: &'a Grid,
    pub state: &'a FieldState,
    pub profile: &'a CurvatureProfile,
    pub r_hat: f64,
}

impl Snapshot<'_> {
    pub fn diagnostics(&self) -> PinchDiagnostics {
        PinchDiagnostics::of(self.profile, self.state, self.grid)
    }

    pub fn volume(&self) -> f64 {
        volume_normalizer(self.state, self.grid)
    }
}

/// Runs the flow from corseted initial data until the classifier decides or
/// `t_max` is reached. A snapshot is taken every `snapshot_every` steps and
/// once more at the horizon; each snapshot goes to `observer` and then to the
/// classifier.
pub fn evolve<F>(config: &FlowConfig, mut observer: F) -> Result<RunOutcome>
where
    F: FnMut(&Snapshot<'_>),
{
    config.validate()?;
    let grid = Grid::new(config.n_total)?;
    let mut state = FieldState::corseted(config.lambda, &grid)?;
    evolve_from(config, &grid, &mut state, &mut observer)
}

/// Same as [`evolve`] but starting from a caller-supplied state, which is
/// left at the final (last finite) state.
pub fn evolve_from<F>(
    config: &FlowConfig,
    grid: &Grid,
    state: &mut FieldState,
    observer: &mut F,
) -> Result<RunOutcome>
where
    F: FnMut(&Snapshot<'_>),
{
    config.validate()?;
    let mut assessor = Assessor::new(config);
    let mut stepper = Stepper::new(grid);
    let mut steps: u64 = 0;

    if config.t_max <= 0.0 || state.t >= config.t_max {
        return Ok(RunOutcome {
            t_final: state.t,
            steps,
            verdict: Verdict::Undecided { diagnostics: None },
        });
    }

    loop {
        let horizon = state.t >= config.t_max;
        if steps.is_multiple_of(config.snapshot_every) || horizon {
            let profile = ricci_eigenvalues(state, grid);
            let r_hat = average_scalar_curvature(state, grid);
            observer(&Snapshot {
                step: steps,
                grid,
                state,
                profile: &profile,
                r_hat,
            });
            let assessment = assessor.assess(&profile, state, r_hat, grid);
            if steps == 0 {
                if let Assessment::Supercritical(d) = &assessment {
                    return Err(Error::InvalidConfig {
                        key: "blowup-threshold".into(),
                        reason: format!(
                            "{} does not exceed the initial max R_s2 = {}",
                            config.curvature_blowup, d.max_r_s2
                        ),
                    });
                }
            }
            if let Some(verdict) = assessment.into_verdict(state.t) {
                return Ok(RunOutcome {
                    t_final: state.t,
                    steps,
                    verdict,
                });
            }
            if horizon {
                let diagnostics = PinchDiagnostics::of(&profile, state, grid);
                return Ok(RunOutcome {
                    t_final: state.t,
                    steps,
                    verdict: Verdict::Undecided {
                        diagnostics: Some(diagnostics),
                    },
                });
            }
        }

        let dt = match config.dt_policy() {
            DtPolicy::Fixed(dt) => dt,
            DtPolicy::Adaptive => stable_dt(state, grid, config.dt_safety),
        };
        // land exactly on the horizon
        let dt = dt.min(config.t_max - state.t);
        match stepper.advance(state, dt, grid) {
            Ok(()) => steps += 1,
            Err(Error::NonFinite { .. }) => {
                let verdict = assessor.on_non_finite(state.t);
                return Ok(RunOutcome {
                    t_final: state.t,
                    steps,
                    verdict,
                });
            }
            Err(e) => return Err(e),
        }
    }
}
