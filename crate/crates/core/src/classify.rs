//! Deciding what a run is doing from its snapshots.
//!
//! Checks run in a fixed order so the outcomes cannot overlap: blow-up first
//! (non-finite values, then the curvature threshold), then convergence to the
//! round sphere, otherwise keep running.

use std::collections::VecDeque;
use std::fmt;

use crate::flow::FlowConfig;
use crate::geometry::{area_at, CurvatureProfile, FieldState};
use crate::grid::Grid;

/// Snapshots over which R_{S²} (either its maximum or its equatorial value)
/// must be strictly increasing for a non-finite state to count as a pinch
/// rather than an instability.
pub const GROWTH_WINDOW: usize = 10;

/// Consecutive snapshots that must satisfy the roundness test.
pub const ROUND_PERSISTENCE: usize = 2;

/// Below this the state is a round sphere to round-off and persistence is
/// not required.
const EXACT_ROUND_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutcomeKind {
    Subcritical,
    Supercritical,
    Undecided,
    NumericalFailure,
}

impl OutcomeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Subcritical => "subcritical",
            Self::Supercritical => "supercritical",
            Self::Undecided => "undecided",
            Self::NumericalFailure => "failure",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "subcritical" => Self::Subcritical,
            "supercritical" => Self::Supercritical,
            "undecided" => Self::Undecided,
            "failure" => Self::NumericalFailure,
            _ => return None,
        })
    }
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where the curvature concentrates and where the geometry is thinnest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinchDiagnostics {
    pub argmax_psi: f64,
    pub max_r_s2: f64,
    pub max_r_perp: f64,
    pub min_area: f64,
    pub argmin_area_psi: f64,
}

impl PinchDiagnostics {
    /// The area minimum is taken over the neck region, between the outermost
    /// local maxima of the area profile; the area always tends to zero at the
    /// poles, so a plain interior minimum would only ever find a pole.
    pub fn of(profile: &CurvatureProfile, state: &FieldState, grid: &Grid) -> Self {
        let psi = grid.psi();
        let mut out = Self {
            argmax_psi: f64::NAN,
            max_r_s2: f64::NEG_INFINITY,
            max_r_perp: f64::NEG_INFINITY,
            min_area: f64::INFINITY,
            argmin_area_psi: f64::NAN,
        };
        for k in grid.interior() {
            if profile.r_s2[k] > out.max_r_s2 {
                out.max_r_s2 = profile.r_s2[k];
                out.argmax_psi = psi[k];
            }
            out.max_r_perp = out.max_r_perp.max(profile.r_perp[k]);
        }
        let area: Vec<f64> = grid.interior().map(|k| area_at(state, grid, k)).collect();
        let (lo, hi) = neck_range(&area);
        for (i, &a) in area.iter().enumerate().take(hi + 1).skip(lo) {
            if a < out.min_area {
                out.min_area = a;
                out.argmin_area_psi = psi[i + 1];
            }
        }
        out
    }
}

/// Index range between the first local maximum seen from each end.
fn neck_range(area: &[f64]) -> (usize, usize) {
    let last = area.len() - 1;
    let mut a = 0;
    while a < last && area[a + 1] >= area[a] {
        a += 1;
    }
    let mut b = last;
    while b > 0 && area[b - 1] >= area[b] {
        b -= 1;
    }
    (a.min(b), a.max(b))
}

pub fn pinch_diagnostics(
    profile: &CurvatureProfile,
    state: &FieldState,
    grid: &Grid,
) -> PinchDiagnostics {
    PinchDiagnostics::of(profile, state, grid)
}

/// `max |R_{S²} - R_⊥|` over the interior.
pub fn eigenvalue_gap(profile: &CurvatureProfile, grid: &Grid) -> f64 {
    grid.interior()
        .map(|k| (profile.r_s2[k] - profile.r_perp[k]).abs())
        .fold(0.0, f64::max)
}

/// Result of looking at one snapshot.
#[derive(Debug, Clone, PartialEq)]
pub enum Assessment {
    ContinueRunning,
    Subcritical { curvature: f64, max_abs_s: f64 },
    Supercritical(PinchDiagnostics),
    NumericalFailure,
}

impl Assessment {
    pub(crate) fn into_verdict(self, t: f64) -> Option<Verdict> {
        match self {
            Self::ContinueRunning => None,
            Self::Subcritical {
                curvature,
                max_abs_s,
            } => Some(Verdict::Subcritical {
                curvature,
                max_abs_s,
            }),
            Self::Supercritical(d) => Some(Verdict::Supercritical {
                pinch_time: t,
                diagnostics: d,
            }),
            Self::NumericalFailure => Some(Verdict::NumericalFailure { last_finite_t: t }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// Both eigenvalues settled on `curvature` (the final r̂/3).
    Subcritical {
        curvature: f64,
        max_abs_s: f64,
    },
    Supercritical {
        pinch_time: f64,
        /// Last finite diagnostics. When the run ended in non-finite values
        /// after monotone growth, these come from the last good snapshot.
        diagnostics: PinchDiagnostics,
    },
    /// Horizon reached; `None` only if no step was taken.
    Undecided {
        diagnostics: Option<PinchDiagnostics>,
    },
    NumericalFailure {
        last_finite_t: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub t_final: f64,
    pub steps: u64,
    pub verdict: Verdict,
}

impl RunOutcome {
    pub fn kind(&self) -> OutcomeKind {
        match self.verdict {
            Verdict::Subcritical { .. } => OutcomeKind::Subcritical,
            Verdict::Supercritical { .. } => OutcomeKind::Supercritical,
            Verdict::Undecided { .. } => OutcomeKind::Undecided,
            Verdict::NumericalFailure { .. } => OutcomeKind::NumericalFailure,
        }
    }
}

/// Stateful snapshot classifier. Feeding the same snapshot sequence into a
/// fresh assessor reproduces the same assessments.
#[derive(Debug, Clone)]
pub struct Assessor {
    curvature_blowup: f64,
    round_tol: f64,
    recent_max: VecDeque<f64>,
    recent_equatorial: VecDeque<f64>,
    last_diagnostics: Option<PinchDiagnostics>,
    round_streak: usize,
}

impl Assessor {
    pub fn new(config: &FlowConfig) -> Self {
        Self::with_thresholds(config.curvature_blowup, config.round_tol)
    }

    pub fn with_thresholds(curvature_blowup: f64, round_tol: f64) -> Self {
        Self {
            curvature_blowup,
            round_tol,
            recent_max: VecDeque::with_capacity(GROWTH_WINDOW),
            recent_equatorial: VecDeque::with_capacity(GROWTH_WINDOW),
            last_diagnostics: None,
            round_streak: 0,
        }
    }

    /// Whether the last [`GROWTH_WINDOW`] snapshots show strictly increasing
    /// R_{S²}, either its maximum or its value at the equator.
    pub fn growing(&self) -> bool {
        strictly_increasing(&self.recent_max) || strictly_increasing(&self.recent_equatorial)
    }

    pub fn assess(
        &mut self,
        profile: &CurvatureProfile,
        state: &FieldState,
        r_hat: f64,
        grid: &Grid,
    ) -> Assessment {
        if !(profile.is_finite() && state.is_finite() && r_hat.is_finite()) {
            return match (self.growing(), self.last_diagnostics) {
                (true, Some(d)) => Assessment::Supercritical(d),
                _ => Assessment::NumericalFailure,
            };
        }

        let diagnostics = PinchDiagnostics::of(profile, state, grid);
        if diagnostics.max_r_s2 >= self.curvature_blowup {
            return Assessment::Supercritical(diagnostics);
        }
        push_window(&mut self.recent_max, diagnostics.max_r_s2);
        push_window(
            &mut self.recent_equatorial,
            profile.r_s2[grid.equator_index()],
        );
        self.last_diagnostics = Some(diagnostics);

        let gap = eigenvalue_gap(profile, grid);
        let max_abs_s = state.max_abs_s(grid);
        let subcritical = Assessment::Subcritical {
            curvature: r_hat / 3.0,
            max_abs_s,
        };
        if gap <= EXACT_ROUND_TOL * r_hat.abs() && max_abs_s <= EXACT_ROUND_TOL {
            return subcritical;
        }
        if gap <= self.round_tol * r_hat.abs() && max_abs_s <= self.round_tol {
            self.round_streak += 1;
            if self.round_streak >= ROUND_PERSISTENCE {
                return subcritical;
            }
        } else {
            self.round_streak = 0;
        }
        Assessment::ContinueRunning
    }

    /// Verdict when stepping produced non-finite values.
    pub fn on_non_finite(&self, last_finite_t: f64) -> Verdict {
        match (self.growing(), self.last_diagnostics) {
            (true, Some(diagnostics)) => Verdict::Supercritical {
                pinch_time: last_finite_t,
                diagnostics,
            },
            _ => Verdict::NumericalFailure { last_finite_t },
        }
    }
}

fn push_window(window: &mut VecDeque<f64>, value: f64) {
    if window.len() == GROWTH_WINDOW {
        window.pop_front();
    }
    window.push_back(value);
}

fn strictly_increasing(window: &VecDeque<f64>) -> bool {
    window.len() == GROWTH_WINDOW && window.iter().zip(window.iter().skip(1)).all(|(a, b)| b > a)
}
