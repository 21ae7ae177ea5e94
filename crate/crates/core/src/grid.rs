//! Staggered mesh on `(0, π)` with one ghost point beyond each pole.
//!
//! Points sit at cell midpoints `ψ_k = (k - 1/2)·Δψ` for storage index
//! `k = 0..n_total`, with `Δψ = π / (n_total - 2)`. Index `0` and
//! `n_total - 1` are the ghosts at `-Δψ/2` and `π + Δψ/2`; everything in
//! between is interior, and no interior point lands on a pole.

use std::f64::consts::PI;
use std::ops::Range;

use crate::error::{Error, Result};

/// Smallest admissible point count: four interior points plus two ghosts.
pub const MIN_POINTS: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    n_total: usize,
    dpsi: f64,
    psi: Vec<f64>,
    sin: Vec<f64>,
    cos: Vec<f64>,
    cot: Vec<f64>,
}

impl Grid {
    pub fn new(n_total: usize) -> Result<Self> {
        if n_total < MIN_POINTS {
            return Err(Error::GridTooSmall(n_total));
        }
        let dpsi = PI / (n_total - 2) as f64;
        let psi: Vec<f64> = (0..n_total).map(|k| (k as f64 - 0.5) * dpsi).collect();
        // Trig tables are mirrored exactly about the equator so that states
        // symmetric under ψ ↦ π - ψ stay symmetric bit for bit.
        let mut sin = vec![0.0; n_total];
        let mut cos = vec![0.0; n_total];
        for k in 0..n_total {
            let m = n_total - 1 - k;
            match k.cmp(&m) {
                std::cmp::Ordering::Less => {
                    sin[k] = psi[k].sin();
                    cos[k] = psi[k].cos();
                }
                std::cmp::Ordering::Equal => {
                    sin[k] = 1.0;
                    cos[k] = 0.0;
                }
                std::cmp::Ordering::Greater => {
                    sin[k] = sin[m];
                    cos[k] = -cos[m];
                }
            }
        }
        let cot = sin.iter().zip(&cos).map(|(s, c)| c / s).collect();
        Ok(Self {
            n_total,
            dpsi,
            psi,
            sin,
            cos,
            cot,
        })
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn dpsi(&self) -> f64 {
        self.dpsi
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn sin(&self) -> &[f64] {
        &self.sin
    }

    pub fn cos(&self) -> &[f64] {
        &self.cos
    }

    pub fn cot(&self) -> &[f64] {
        &self.cot
    }

    /// Storage indices of the interior (non-ghost) points.
    pub fn interior(&self) -> Range<usize> {
        1..self.n_total - 1
    }

    /// Interior index whose ψ is closest to the equator. Ties resolve to the
    /// lower index.
    pub fn equator_index(&self) -> usize {
        self.nearest_interior(PI / 2.0)
    }

    pub fn nearest_interior(&self, psi: f64) -> usize {
        let k = (psi / self.dpsi + 0.5).round() as isize;
        k.clamp(1, self.n_total as isize - 2) as usize
    }

    /// Reflection partner `k ↦ n_total - 1 - k` (ψ ↦ π - ψ).
    pub fn mirror(&self, k: usize) -> usize {
        self.n_total - 1 - k
    }

    fn check_interior(&self, f: &[f64], i: usize) -> Result<()> {
        if f.len() != self.n_total {
            return Err(Error::LengthMismatch {
                expected: self.n_total,
                actual: f.len(),
            });
        }
        if i == 0 || i + 1 >= self.n_total {
            return Err(Error::NotInterior {
                index: i,
                n_total: self.n_total,
            });
        }
        Ok(())
    }

    /// Centered first difference `(f[i+1] - f[i-1]) / 2Δψ`.
    pub fn d1(&self, f: &[f64], i: usize) -> Result<f64> {
        self.check_interior(f, i)?;
        Ok(self.d1_at(f, i))
    }

    /// Centered second difference `(f[i+1] + f[i-1] - 2 f[i]) / Δψ²`.
    pub fn d2(&self, f: &[f64], i: usize) -> Result<f64> {
        self.check_interior(f, i)?;
        Ok(self.d2_at(f, i))
    }

    #[inline]
    pub(crate) fn d1_at(&self, f: &[f64], i: usize) -> f64 {
        (f[i + 1] - f[i - 1]) / (2.0 * self.dpsi)
    }

    #[inline]
    pub(crate) fn d2_at(&self, f: &[f64], i: usize) -> f64 {
        (f[i + 1] + f[i - 1] - 2.0 * f[i]) / (self.dpsi * self.dpsi)
    }

    /// Midpoint rule over the interior cells; ghost entries are ignored.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n_total);
        self.dpsi * f[self.interior()].iter().sum::<f64>()
    }

    /// Midpoint rule applied to `g(k)` evaluated at each interior index.
    pub(crate) fn integrate_with(&self, g: impl Fn(usize) -> f64) -> f64 {
        self.dpsi * self.interior().map(g).sum::<f64>()
    }
}

/// Imposes vanishing ψ-derivative at both poles by copying the first and
/// last interior values into the ghosts.
pub fn fill_ghosts(f: &mut [f64]) -> Result<()> {
    let n = f.len();
    if n < 4 {
        return Err(Error::LengthMismatch {
            expected: 4,
            actual: n,
        });
    }
    f[0] = f[1];
    f[n - 1] = f[n - 2];
    Ok(())
}
