//! Spherically symmetric metrics on S³,
//!
//! ```text
//! g = e^{2X} ( e^{-2W} dψ² + e^{2W} sin²ψ dΩ² ),
//! ```
//!
//! stored through `X` and the regularized anisotropy `S = W / sin²ψ`, together
//! with the curvature and integral diagnostics built on top of them.
//!
//! Near the poles `W ~ S ψ²`, so every quotient of the form
//! `(1 - e^{-4W}) / sin²ψ` or `(1 - 4W - e^{-4W}) / sin⁴ψ` is evaluated as
//! `μ(W)·S` or `φ(W)·S²` instead of by literal division.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{fill_ghosts, Grid};

/// Below this |w| the closed form of [`stable_phi`] loses digits to
/// cancellation and the Taylor series takes over.
pub const PHI_SERIES_CUTOFF: f64 = 1e-3;

/// Metric degrees of freedom sampled on a [`Grid`] at flow time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub t: f64,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
}

impl FieldState {
    /// Builds a state from raw samples and imposes the ghost conditions.
    pub fn new(t: f64, mut x: Vec<f64>, mut s: Vec<f64>, grid: &Grid) -> Result<Self> {
        for f in [&x, &s] {
            if f.len() != grid.n_total() {
                return Err(Error::LengthMismatch {
                    expected: grid.n_total(),
                    actual: f.len(),
                });
            }
        }
        fill_ghosts(&mut x)?;
        fill_ghosts(&mut s)?;
        Ok(Self { t, x, s })
    }

    /// Round sphere of radius `e^c`: `X ≡ c`, `S ≡ 0`.
    pub fn round_sphere(grid: &Grid, c: f64) -> Self {
        let n = grid.n_total();
        Self {
            t: 0.0,
            x: vec![c; n],
            s: vec![0.0; n],
        }
    }

    /// Corseted sphere with `W = X` and
    ///
    /// ```text
    /// 4 e^{4X} sin²ψ = sin²2ψ                  (cos²ψ ≥ 1/2)
    /// 4 e^{4X} sin²ψ = sin²2ψ + 4λ cos²2ψ      (cos²ψ < 1/2)
    /// ```
    ///
    /// `λ → 0` is two round spheres glued at a point, so only `λ > 0` is
    /// accepted. Ghosts come from the copy rule, not the formula.
    pub fn corseted(lambda: f64, grid: &Grid) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidLambda(lambda));
        }
        let n = grid.n_total();
        let mut x = vec![0.0; n];
        let mut s = vec![0.0; n];
        for k in grid.interior() {
            let (sn, cs) = (grid.sin()[k], grid.cos()[k]);
            let sin2 = sn * sn;
            let cos2 = cs * cs;
            let e4x = if cos2 >= 0.5 {
                cos2
            } else {
                let cos_2psi = cos2 - sin2;
                cos2 + lambda * cos_2psi * cos_2psi / sin2
            };
            x[k] = 0.25 * e4x.ln();
            s[k] = x[k] / sin2;
        }
        fill_ghosts(&mut x)?;
        fill_ghosts(&mut s)?;
        Ok(Self { t: 0.0, x, s })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.s).all(|v| v.is_finite())
    }

    /// `W_k = S_k sin²ψ_k` on every point, ghosts included.
    pub fn w(&self, grid: &Grid) -> Vec<f64> {
        self.s
            .iter()
            .zip(grid.sin())
            .map(|(s, sn)| s * sn * sn)
            .collect()
    }

    pub fn fill_ghosts(&mut self) {
        // lengths are fixed at construction
        fill_ghosts(&mut self.x).expect("state shorter than 4 points");
        fill_ghosts(&mut self.s).expect("state shorter than 4 points");
    }

    pub fn max_abs_s(&self, grid: &Grid) -> f64 {
        grid.interior().map(|k| self.s[k].abs()).fold(0.0, f64::max)
    }
}

/// `φ(w) = (1 - 4w - e^{-4w}) / w²`, with `φ(0) = -8`.
pub fn stable_phi(w: f64) -> f64 {
    phi_with(w, (-4.0 * w).exp_m1())
}

/// `μ(w) = (1 - e^{-4w}) / w`, with `μ(0) = 4`.
pub fn stable_mu(w: f64) -> f64 {
    mu_with(w, (-4.0 * w).exp_m1())
}

/// [`stable_phi`] given `em = e^{-4w} - 1`.
#[inline]
fn phi_with(w: f64, em: f64) -> f64 {
    if w.abs() < PHI_SERIES_CUTOFF {
        // -8 + 32/3 w - 32/3 w² + 128/15 w³ - 256/45 w⁴
        -8.0 + w * (32.0 / 3.0 + w * (-32.0 / 3.0 + w * (128.0 / 15.0 - w * (256.0 / 45.0))))
    } else {
        -(em + 4.0 * w) / (w * w)
    }
}

/// [`stable_mu`] given `em = e^{-4w} - 1`.
#[inline]
fn mu_with(w: f64, em: f64) -> f64 {
    if w == 0.0 {
        4.0
    } else {
        -em / w
    }
}

/// Pointwise quantities shared by the curvature, the vector field and the
/// evolution equations. `W` and its derivatives come from `S` through the
/// chain rule rather than from differencing `W` itself.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Local {
    pub sin: f64,
    pub cos: f64,
    pub cot: f64,
    pub x1: f64,
    pub x2: f64,
    pub s: f64,
    pub s1: f64,
    pub s2: f64,
    pub w1: f64,
    pub w2: f64,
    /// `(1 - e^{-4W}) / sin²ψ`
    pub mu_s: f64,
    /// `(1 - 4W - e^{-4W}) / sin⁴ψ`
    pub phi_s2: f64,
    /// `e^{2(W - X)}`, the diffusion coefficient.
    pub diff: f64,
    pub exp_x: f64,
    pub exp_w: f64,
}

impl Local {
    #[inline]
    pub(crate) fn at(state: &FieldState, grid: &Grid, k: usize) -> Self {
        let (sn, cs, cot) = (grid.sin()[k], grid.cos()[k], grid.cot()[k]);
        let x = state.x[k];
        let s = state.s[k];
        let x1 = grid.d1_at(&state.x, k);
        let x2 = grid.d2_at(&state.x, k);
        let s1 = grid.d1_at(&state.s, k);
        let s2 = grid.d2_at(&state.s, k);
        let sin2 = sn * sn;
        let w = s * sin2;
        let w1 = sin2 * s1 + 2.0 * sn * cs * s;
        let w2 = sin2 * s2 + 4.0 * sn * cs * s1 + 2.0 * (cs * cs - sin2) * s;
        let em = (-4.0 * w).exp_m1();
        let exp_x = x.exp();
        let exp_w = w.exp();
        let ratio = exp_w / exp_x;
        Self {
            sin: sn,
            cos: cs,
            cot,
            x1,
            x2,
            s,
            s1,
            s2,
            w1,
            w2,
            mu_s: mu_with(w, em) * s,
            phi_s2: phi_with(w, em) * s * s,
            diff: ratio * ratio,
            exp_x,
            exp_w,
        }
    }

    /// Numerator and denominator contributions of this point to r̂, both
    /// without the common `Δψ`.
    #[inline]
    pub(crate) fn r_hat_terms(&self) -> (f64, f64) {
        let sin2 = self.sin * self.sin;
        let xw = self.x1 + self.w1;
        let bracket = -self.mu_s
            - 4.0 * (self.sin * self.cos * self.s1 + 2.0 * self.cos * self.cos * self.s)
            + 3.0
            + xw * xw;
        let (ex, ew) = (self.exp_x, self.exp_w);
        // e^{X+3W} and e^{3X+W}
        (ex * ew * ew * ew * sin2 * bracket, ex * ex * ex * ew * sin2)
    }

    /// Ricci eigenvalue orthogonal to the symmetry spheres.
    #[inline]
    pub(crate) fn r_perp(&self) -> f64 {
        -2.0 * self.diff
            * (-1.0
                + self.x2
                + self.w2
                + (self.x1 + 3.0 * self.w1) * self.cot
                + 2.0 * (self.x1 + self.w1) * self.w1)
    }

    /// Ricci eigenvalue tangent to the symmetry spheres.
    #[inline]
    pub(crate) fn r_s2(&self) -> f64 {
        -self.diff
            * (-2.0
                + self.mu_s
                + self.x2
                + self.w2
                + (3.0 * self.x1 + 5.0 * self.w1) * self.cot
                + (self.x1 + self.w1) * (self.x1 + 3.0 * self.w1))
    }
}

/// The two independent Ricci eigenvalues at every grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureProfile {
    pub r_s2: Vec<f64>,
    pub r_perp: Vec<f64>,
}

impl CurvatureProfile {
    pub fn is_finite(&self) -> bool {
        self.r_s2.iter().chain(&self.r_perp).all(|v| v.is_finite())
    }

    pub fn invariants(&self, k: usize) -> Invariants {
        curvature_invariants(self.r_s2[k], self.r_perp[k])
    }
}

/// Evaluates both eigenvalues on the interior; ghost entries copy their
/// interior neighbours.
pub fn ricci_eigenvalues(state: &FieldState, grid: &Grid) -> CurvatureProfile {
    let n = grid.n_total();
    let mut r_s2 = vec![0.0; n];
    let mut r_perp = vec![0.0; n];
    for k in grid.interior() {
        let l = Local::at(state, grid, k);
        r_s2[k] = l.r_s2();
        r_perp[k] = l.r_perp();
    }
    r_s2[0] = r_s2[1];
    r_s2[n - 1] = r_s2[n - 2];
    r_perp[0] = r_perp[1];
    r_perp[n - 1] = r_perp[n - 2];
    CurvatureProfile { r_s2, r_perp }
}

/// Scalar curvature and the quadratic invariants. In three dimensions the
/// Weyl tensor vanishes, so `|Riem|² = 4|Ric|² - R²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Invariants {
    pub scalar: f64,
    pub ricci_sq: f64,
    pub riemann_sq: f64,
}

pub fn curvature_invariants(r_s2: f64, r_perp: f64) -> Invariants {
    let gap = r_perp - 2.0 * r_s2;
    Invariants {
        scalar: 2.0 * r_s2 + r_perp,
        ricci_sq: 2.0 * r_s2 * r_s2 + r_perp * r_perp,
        riemann_sq: 2.0 * r_perp * r_perp + gap * gap,
    }
}

/// `∫ e^{3X+W} sin²ψ dψ`, proportional to the total volume.
pub fn volume_normalizer(state: &FieldState, grid: &Grid) -> f64 {
    grid.integrate_with(|k| {
        let sin2 = grid.sin()[k] * grid.sin()[k];
        (3.0 * state.x[k] + state.s[k] * sin2).exp() * sin2
    })
}

/// Volume-weighted mean of the scalar curvature.
///
/// The integrand is
/// `e^{X+3W} (e^{-4W} - 1 - 4 sinψ cosψ W' + sin²ψ [3 + (X'+W')²])`, which
/// differs from `R·e^{3X+W} sin²ψ / 2` by a total derivative vanishing at both
/// poles. With `e^{-4W} - 1 = -μ(W) S sin²ψ` and
/// `sinψ cosψ W' = sin²ψ (sinψ cosψ S' + 2 cos²ψ S)` a common `sin²ψ` factors
/// out, which makes the round sphere give exactly `3 sin²ψ / sin²ψ` per cell.
pub fn average_scalar_curvature(state: &FieldState, grid: &Grid) -> f64 {
    let (num, den) = grid
        .interior()
        .map(|k| Local::at(state, grid, k).r_hat_terms())
        .fold((0.0, 0.0), |(n, d), (a, b)| (n + a, d + b));
    2.0 * num / den
}

/// Covariant ψ-component of the DeTurck vector field relative to the round
/// connection, `V_ψ = -(3W' + X' + 2 cotψ (1 - e^{-4W}))`. Ghosts are zero.
pub fn deturck_vector(state: &FieldState, grid: &Grid) -> Vec<f64> {
    let mut v = vec![0.0; grid.n_total()];
    for k in grid.interior() {
        let l = Local::at(state, grid, k);
        v[k] = -(3.0 * l.w1 + l.x1 + 2.0 * l.sin * l.cos * l.mu_s);
    }
    v
}

/// Area of the symmetry sphere through interior point `i`.
pub fn sphere_area(state: &FieldState, i: usize, grid: &Grid) -> Result<f64> {
    if i == 0 || i + 1 >= grid.n_total() || state.len() != grid.n_total() {
        return Err(Error::NotInterior {
            index: i,
            n_total: grid.n_total(),
        });
    }
    Ok(area_at(state, grid, i))
}

#[inline]
pub(crate) fn area_at(state: &FieldState, grid: &Grid, k: usize) -> f64 {
    let sin2 = grid.sin()[k] * grid.sin()[k];
    4.0 * PI * (2.0 * (state.x[k] + state.s[k] * sin2)).exp() * sin2
}

/// Radial proper distance from `ψ = 0` to each interior point,
/// `∫ e^{X-W} dψ`, by the trapezoid rule between grid points and a half cell
/// from the pole to the first point. Ghost entries are zero.
pub fn radial_distance(state: &FieldState, grid: &Grid) -> Vec<f64> {
    let w = state.w(grid);
    let density: Vec<f64> = state.x.iter().zip(&w).map(|(x, w)| (x - w).exp()).collect();
    let mut out = vec![0.0; grid.n_total()];
    let h = grid.dpsi();
    let mut acc = 0.5 * h * 0.5 * (density[0] + density[1]);
    out[1] = acc;
    for k in 2..grid.n_total() - 1 {
        acc += 0.5 * h * (density[k - 1] + density[k]);
        out[k] = acc;
    }
    out
}
