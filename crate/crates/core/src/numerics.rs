//! Uniform grids, quadrature and the frequency-to-time transform.
//!
//! Everything is dimensionless. Frequencies are detunings `x = Ω / (2π BW)`
//! and times are `u = BW τ`, so the transform kernel `e^{-iΩτ}` becomes
//! `e^{-2πi x u}` and
//!
//! ```text
//! F(u) = ∫ f(x) e^{-2πi x u} dx,      ∫ |f|² dx = ∫ |F|² du.
//! ```

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{contract, invalid_parameter, Error, Result};

/// Unnormalized sinc, `sin(x) / x`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        // sin(x)/x = 1 - x²/6 + O(x⁴)
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadratureRule {
    Simpson,
    Trapezoid,
}

/// Shared representation behind [`FrequencyGrid`] and [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
struct UniformGrid {
    min: f64,
    max: f64,
    points: Arc<[f64]>,
    weights: Arc<[f64]>,
    rule: QuadratureRule,
}

impl UniformGrid {
    fn new(min: f64, max: f64, n_points: usize) -> Result<Self> {
        if n_points < 3 {
            return Err(invalid_parameter(format!(
                "grid needs at least 3 points, got {n_points}"
            )));
        }
        if !(min.is_finite() && max.is_finite()) || max <= min {
            return Err(invalid_parameter(format!(
                "grid bounds must satisfy min < max, got [{min}, {max}]"
            )));
        }
        let last = (n_points - 1) as f64;
        let mut points: Vec<f64> = (0..n_points).map(|i| min + (max - min) * (i as f64 / last)).collect();
        points[n_points - 1] = max;
        if min == -max {
            // Exact mirror symmetry so that reflected evaluations agree bitwise.
            for i in 0..n_points / 2 {
                points[n_points - 1 - i] = -points[i];
            }
            if n_points % 2 == 1 {
                points[n_points / 2] = 0.0;
            }
        }

        let h = (max - min) / last;
        let rule = if n_points % 2 == 1 {
            QuadratureRule::Simpson
        } else {
            QuadratureRule::Trapezoid
        };
        let weights: Vec<f64> = match rule {
            QuadratureRule::Simpson => (0..n_points)
                .map(|i| {
                    if i == 0 || i == n_points - 1 {
                        h / 3.0
                    } else if i % 2 == 1 {
                        4.0 * h / 3.0
                    } else {
                        2.0 * h / 3.0
                    }
                })
                .collect(),
            QuadratureRule::Trapezoid => (0..n_points)
                .map(|i| if i == 0 || i == n_points - 1 { h / 2.0 } else { h })
                .collect(),
        };

        Ok(Self {
            min,
            max,
            points: points.into(),
            weights: weights.into(),
            rule,
        })
    }

    fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.points.len() - 1) as f64
    }
}

/// Common read access for frequency and time grids.
pub trait Grid {
    fn points(&self) -> &[f64];
    fn weights(&self) -> &[f64];
    fn spacing(&self) -> f64;
    fn min(&self) -> f64;
    fn max(&self) -> f64;
    fn rule(&self) -> QuadratureRule;

    fn len(&self) -> usize {
        self.points().len()
    }

    fn is_empty(&self) -> bool {
        self.points().is_empty()
    }

    fn width(&self) -> f64 {
        self.max() - self.min()
    }
}

macro_rules! grid_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(try_from = "GridSpec", into = "GridSpec")]
        pub struct $name(UniformGrid);

        impl $name {
            pub fn new(min: f64, max: f64, n_points: usize) -> Result<Self> {
                UniformGrid::new(min, max, n_points).map(Self)
            }

            /// Grid on `[-half_width, half_width]`, mirror-symmetric about zero.
            pub fn symmetric(half_width: f64, n_points: usize) -> Result<Self> {
                Self::new(-half_width, half_width, n_points)
            }

            pub fn spec(&self) -> GridSpec {
                GridSpec {
                    n_points: self.len(),
                    min: self.0.min,
                    max: self.0.max,
                }
            }
        }

        impl Grid for $name {
            fn points(&self) -> &[f64] {
                &self.0.points
            }
            fn weights(&self) -> &[f64] {
                &self.0.weights
            }
            fn spacing(&self) -> f64 {
                self.0.spacing()
            }
            fn min(&self) -> f64 {
                self.0.min
            }
            fn max(&self) -> f64 {
                self.0.max
            }
            fn rule(&self) -> QuadratureRule {
                self.0.rule
            }
        }

        impl TryFrom<GridSpec> for $name {
            type Error = Error;
            fn try_from(spec: GridSpec) -> Result<Self> {
                Self::new(spec.min, spec.max, spec.n_points)
            }
        }

        impl From<$name> for GridSpec {
            fn from(grid: $name) -> GridSpec {
                grid.spec()
            }
        }
    };
}

grid_newtype!(
    /// Uniform grid of dimensionless detunings `x = Ω / (2π BW)`.
    FrequencyGrid
);
grid_newtype!(
    /// Uniform grid of dimensionless times `u = BW τ`.
    TimeGrid
);

/// Serialized form of a grid. Weights and points are rebuilt on load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_points: usize,
    pub min: f64,
    pub max: f64,
}

/// Quadrature of complex samples against the grid weights.
pub fn integrate(samples: &[C64], grid: &impl Grid) -> Result<C64> {
    check_len(samples.len(), grid)?;
    Ok(samples.iter().zip(grid.weights()).map(|(f, w)| f * w).sum())
}

/// Real-valued counterpart of [`integrate`].
pub fn integrate_real(samples: &[f64], grid: &impl Grid) -> Result<f64> {
    check_len(samples.len(), grid)?;
    Ok(samples.iter().zip(grid.weights()).map(|(f, w)| f * w).sum())
}

fn check_len(len: usize, grid: &impl Grid) -> Result<()> {
    if len != grid.len() {
        return Err(contract(format!(
            "sample count {len} does not match grid size {}",
            grid.len()
        )));
    }
    Ok(())
}

/// Largest |u| a frequency grid can represent without aliasing.
pub fn max_resolvable_time(fgrid: &FrequencyGrid) -> f64 {
    0.5 / fgrid.spacing()
}

pub(crate) fn check_aliasing(fgrid: &FrequencyGrid, max_time: f64) -> Result<()> {
    if 2.0 * fgrid.spacing() * max_time > 1.0 {
        return Err(Error::Aliasing {
            spacing: fgrid.spacing(),
            max_time,
        });
    }
    Ok(())
}

/// `F(u) = ∫ f(x) e^{-2πi x u} dx` evaluated at arbitrary times by direct
/// quadrature.
pub fn fourier_at_times(samples: &[C64], fgrid: &FrequencyGrid, times: &[f64]) -> Result<Vec<C64>> {
    check_len(samples.len(), fgrid)?;
    let max_time = times.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    check_aliasing(fgrid, max_time)?;

    let weighted: Vec<(f64, C64)> = fgrid
        .points()
        .iter()
        .zip(fgrid.weights())
        .zip(samples)
        .map(|((&x, &w), &f)| (x, f * w))
        .collect();

    Ok(times
        .par_iter()
        .map(|&u| {
            weighted
                .iter()
                .map(|&(x, c)| {
                    let (sin, cos) = (-2.0 * PI * x * u).sin_cos();
                    c * C64::new(cos, sin)
                })
                .sum()
        })
        .collect())
}

/// Frequency-to-time transform onto a [`TimeGrid`], kernel `e^{-2πi x u}`.
pub fn fourier_to_time(samples: &[C64], fgrid: &FrequencyGrid, tgrid: &TimeGrid) -> Result<Vec<C64>> {
    fourier_at_times(samples, fgrid, tgrid.points())
}

/// FFT evaluation of the same transform on its natural conjugate grid
/// `u_m = m / (N h)`, `m = -⌊N/2⌋ .. ⌈N/2⌉ - 1`, with the spectrum zero-padded to
/// `n_fft` points. Returns `(times, values)` in increasing time order.
pub fn fourier_to_time_fft(samples: &[C64], fgrid: &FrequencyGrid, n_fft: usize) -> Result<(Vec<f64>, Vec<C64>)> {
    check_len(samples.len(), fgrid)?;
    if n_fft < fgrid.len() {
        return Err(invalid_parameter(format!(
            "FFT length {n_fft} is shorter than the grid ({})",
            fgrid.len()
        )));
    }
    let h = fgrid.spacing();
    let x0 = fgrid.min();

    let mut buf: Vec<C64> = samples.iter().zip(fgrid.weights()).map(|(f, w)| f * w).collect();
    buf.resize(n_fft, C64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(n_fft).process(&mut buf);

    let half = (n_fft / 2) as isize;
    let n = n_fft as isize;
    let (times, values) = (-half..n - half)
        .map(|m| {
            let u = m as f64 / (n_fft as f64 * h);
            let phase = (-2.0 * PI * x0 * u).sin_cos();
            let v = buf[m.rem_euclid(n) as usize] * C64::new(phase.1, phase.0);
            (u, v)
        })
        .unzip();
    Ok((times, values))
}

/// Piecewise-linear interpolation on a strictly increasing table. `None`
/// outside the table range.
pub(crate) fn interp_linear<T>(xs: &[f64], ys: &[T], x: f64) -> Option<T>
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let (first, last) = (*xs.first()?, *xs.last()?);
    if x < first || x > last {
        return None;
    }
    let idx = xs.partition_point(|&v| v <= x);
    if idx == 0 {
        return Some(ys[0]);
    }
    if idx >= xs.len() {
        return Some(ys[xs.len() - 1]);
    }
    let (x_lo, x_hi) = (xs[idx - 1], xs[idx]);
    let t = (x - x_lo) / (x_hi - x_lo);
    Some(ys[idx - 1] * (1.0 - t) + ys[idx] * t)
}
