//! Binary search in λ for the boundary between pinching and rounding.
//!
//! The classification is assumed monotone in λ: small λ pinches, large λ
//! rounds. Only the midpoint of the current bracket is ever evaluated.

use crate::classify::OutcomeKind;
use crate::error::{Error, Result};
use crate::flow::{evolve, FlowConfig};

/// One classified run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Iteration {
    pub lambda: f64,
    pub outcome: OutcomeKind,
    pub t_final: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoints {
    /// Evolve both ends first and fail if either is misclassified.
    Verify,
    /// The caller already knows `lo` pinches and `hi` rounds.
    Assume,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BisectionResult {
    /// Supercritical end.
    pub lambda_lo: f64,
    /// Subcritical end.
    pub lambda_hi: f64,
    /// Every evolved λ in order, endpoint checks included.
    pub iterations: Vec<Iteration>,
    pub bracket_width: f64,
    pub lambda_crit_estimate: f64,
    /// Outcome of the midpoint that stopped the search early, if any.
    pub halted: Option<OutcomeKind>,
}

impl BisectionResult {
    pub fn half_width(&self) -> f64 {
        self.bracket_width / 2.0
    }
}

/// Bisects with `config` applied at every λ, checking both endpoints first.
pub fn bisect(lo: f64, hi: f64, config: &FlowConfig, width_tol: f64) -> Result<BisectionResult> {
    bisect_with(
        lo,
        hi,
        width_tol,
        Endpoints::Verify,
        run_flow(config),
        |_| {},
    )
}

/// Evolves `config` at a given λ and reports the outcome kind and final time.
pub fn run_flow(config: &FlowConfig) -> impl FnMut(f64) -> Result<(OutcomeKind, f64)> + '_ {
    move |lambda| {
        let outcome = evolve(&config.at_lambda(lambda), |_| {})?;
        Ok((outcome.kind(), outcome.t_final))
    }
}

/// Generic driver: `classify` maps λ to an outcome and final time, and
/// `on_iteration` sees each record as soon as it exists.
pub fn bisect_with(
    lo: f64,
    hi: f64,
    width_tol: f64,
    endpoints: Endpoints,
    mut classify: impl FnMut(f64) -> Result<(OutcomeKind, f64)>,
    mut on_iteration: impl FnMut(&Iteration),
) -> Result<BisectionResult> {
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < hi) {
        return Err(Error::InvalidConfig {
            key: "lo".into(),
            reason: format!("need 0 < lo < hi, got lo={lo}, hi={hi}"),
        });
    }
    if width_tol.is_nan() || width_tol <= 0.0 {
        return Err(Error::InvalidConfig {
            key: "width-tol".into(),
            reason: format!("must be positive, got {width_tol}"),
        });
    }

    let mut iterations = Vec::new();
    let mut record = |lambda: f64, classify: &mut dyn FnMut(f64) -> Result<(OutcomeKind, f64)>| {
        let (outcome, t_final) = classify(lambda)?;
        let it = Iteration {
            lambda,
            outcome,
            t_final,
        };
        on_iteration(&it);
        iterations.push(it);
        Ok::<_, Error>(outcome)
    };

    if endpoints == Endpoints::Verify {
        for (lambda, expected) in [
            (lo, OutcomeKind::Supercritical),
            (hi, OutcomeKind::Subcritical),
        ] {
            let found = record(lambda, &mut classify)?;
            if found != expected {
                return Err(Error::BadBracket {
                    lambda,
                    found: found.as_str(),
                    expected: expected.as_str(),
                });
            }
        }
    }

    // The bracket is [lo + j·w, lo + (j+1)·w] with w = (hi - lo)/2^k, so the
    // width halves exactly and the ends never leave the starting bracket.
    let mut width = hi - lo;
    let mut j: u64 = 0;
    let mut cells: u64 = 1;
    let mut halted = None;
    while width > width_tol && cells < 1 << 52 {
        let half = width / 2.0;
        let mid = lo + (2 * j + 1) as f64 * half;
        match record(mid, &mut classify)? {
            OutcomeKind::Supercritical => j = 2 * j + 1,
            OutcomeKind::Subcritical => j *= 2,
            other => {
                halted = Some(other);
                break;
            }
        }
        width = half;
        cells *= 2;
    }

    let lambda_lo = lo + j as f64 * width;
    let lambda_hi = if j + 1 == cells {
        hi
    } else {
        lo + (j + 1) as f64 * width
    };
    Ok(BisectionResult {
        lambda_lo,
        lambda_hi,
        iterations,
        bracket_width: width,
        lambda_crit_estimate: lo + (j as f64 + 0.5) * width,
        halted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_at(threshold: f64) -> impl FnMut(f64) -> Result<(OutcomeKind, f64)> {
        move |lambda| {
            Ok(if lambda < threshold {
                (OutcomeKind::Supercritical, 0.5)
            } else {
                (OutcomeKind::Subcritical, 2.0)
            })
        }
    }

    #[test]
    fn loose_tolerance_evaluates_nothing() {
        let mut calls = 0;
        let r = bisect_with(
            0.11,
            0.2,
            0.1,
            Endpoints::Assume,
            |l| {
                calls += 1;
                step_at(0.16)(l)
            },
            |_| {},
        )
        .unwrap();
        assert_eq!(calls, 0);
        assert!(r.iterations.is_empty());
        assert_eq!((r.lambda_lo, r.lambda_hi), (0.11, 0.2));
        assert!((r.lambda_crit_estimate - 0.155).abs() < 1e-15);
    }

    #[test]
    fn width_halves_exactly() {
        let (lo, hi) = (0.11, 0.2);
        let r = bisect_with(lo, hi, 5e-4, Endpoints::Assume, step_at(0.1639), |_| {}).unwrap();
        let k = r.iterations.len() as i32;
        assert_eq!(k, 8);
        assert_eq!(r.bracket_width, (hi - lo) / 2f64.powi(k));
        assert!(((r.lambda_hi - r.lambda_lo) - r.bracket_width).abs() < 1e-16);
        assert!(r.lambda_lo < 0.1639 && 0.1639 <= r.lambda_hi);
        assert_eq!(r.halted, None);
    }

    #[test]
    fn bracket_tracks_outcomes() {
        let r = bisect_with(0.0, 1.0, 0.1, Endpoints::Verify, step_at(0.3), |_| {}).unwrap_err();
        // lo must be positive
        assert!(matches!(r, Error::InvalidConfig { .. }));

        let r = bisect_with(0.1, 1.1, 0.1, Endpoints::Verify, step_at(0.3), |_| {}).unwrap();
        let lambdas: Vec<f64> = r.iterations.iter().map(|it| it.lambda).collect();
        assert_eq!(lambdas, [0.1, 1.1, 0.6, 0.35, 0.225, 0.2875]);
        assert!((r.lambda_lo - 0.2875).abs() < 1e-15);
        assert!((r.lambda_hi - 0.35).abs() < 1e-15);
        for it in &r.iterations {
            assert!(it.lambda >= 0.1 && it.lambda <= 1.1);
        }
    }

    #[test]
    fn misclassified_endpoints_are_errors() {
        let e = bisect_with(0.1, 0.2, 1e-3, Endpoints::Verify, step_at(0.05), |_| {}).unwrap_err();
        assert!(matches!(
            e,
            Error::BadBracket {
                found: "subcritical",
                ..
            }
        ));
        let e = bisect_with(0.1, 0.2, 1e-3, Endpoints::Verify, step_at(0.5), |_| {}).unwrap_err();
        assert!(matches!(
            e,
            Error::BadBracket {
                expected: "subcritical",
                ..
            }
        ));
    }

    #[test]
    fn undecided_midpoint_halts() {
        let classify = |l: f64| {
            Ok(if l < 0.12 {
                (OutcomeKind::Supercritical, 1.0)
            } else if l < 0.14 {
                (OutcomeKind::Undecided, 50.0)
            } else {
                (OutcomeKind::Subcritical, 3.0)
            })
        };
        let mut seen = Vec::new();
        let r = bisect_with(0.1, 0.2, 1e-4, Endpoints::Assume, classify, |it| {
            seen.push(it.lambda)
        })
        .unwrap();
        assert_eq!(r.halted, Some(OutcomeKind::Undecided));
        assert_eq!(seen.len(), 2);
        assert!((seen[0] - 0.15).abs() < 1e-15 && (seen[1] - 0.125).abs() < 1e-15);
        assert!((r.lambda_lo - 0.1).abs() < 1e-15);
        assert!((r.lambda_hi - 0.15).abs() < 1e-15);
        assert!((r.bracket_width - 0.05).abs() < 1e-15);
    }

    #[test]
    fn deterministic_and_replayable() {
        let config = FlowConfig {
            n_total: 22,
            t_max: 0.05,
            ..FlowConfig::default()
        };
        let run =
            |lo| bisect_with(lo, 0.3, 0.04, Endpoints::Assume, run_flow(&config), |_| {}).unwrap();
        let a = run(0.1);
        assert_eq!(a, run(0.1));
        assert!(!a.iterations.is_empty());
        for it in &a.iterations {
            let again = evolve(&config.at_lambda(it.lambda), |_| {}).unwrap();
            assert_eq!(again.kind(), it.outcome);
            assert_eq!(again.t_final, it.t_final);
        }
    }
}
