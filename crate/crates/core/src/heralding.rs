//! Reduced density matrix of the heralded photon under a finite trigger
//! response window, and its time-frequency purity.
//!
//! With `s = BW·Δt` the trigger window enters only through the kernel
//! `sinc((Ω - Ω')Δt/2) = sinc(π s (x - x'))`:
//!
//! ```text
//! ρ(x, x') = sinc(π s (x - x')) φ(x) φ*(x') / ∫|φ|²
//! γ        = ∬ sinc²(π s (x - x')) p(x) p(x') dx dx',   p = |φ|² / ∫|φ|²
//! ```
//!
//! `ρ` is the kernel with respect to `dx`, so `Tr ρ = ∫ ρ(x, x) dx = 1`.
//! Purity is available by three independent routes: the full 2-D quadrature
//! ([`purity_direct`]), a 1-D reduction through the autocorrelation of `p`
//! ([`purity_autocorr`], the fast path), and `Tr ρ²` on a density matrix
//! ([`purity_from_matrix`]).

use std::f64::consts::PI;

use faer::complex_native::c64;
use faer::{Mat, Side};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{contract, invalid_parameter, Error, Result};
use crate::io::fmt_float;
use crate::numerics::{sinc, FrequencyGrid, Grid, GridSpec};
use crate::spectra::JointSpectrum;

/// Minimum resolution of the 2-D purity quadrature.
pub const DIRECT_MIN_POINTS: usize = 801;
/// Upper bound on adaptive grid refinement.
pub const MAX_REFINED_POINTS: usize = 16001;
/// Above this `s` the refinement cap may be reached and results carry a warning.
pub const ACCURACY_LIMIT_S: f64 = 100.0;
/// Required samples per unit detuning and unit `s` (spacing ≤ 1/(8s)).
const SAMPLES_PER_OSCILLATION: f64 = 8.0;

fn check_s(s: f64) -> Result<()> {
    if s.is_finite() && s >= 0.0 {
        Ok(())
    } else {
        Err(invalid_parameter(format!(
            "response-time product s = BW·Δt must be finite and >= 0, got {s}"
        )))
    }
}

/// Odd point count covering the spectrum support with spacing ≤ 1/(8s).
fn refined_points(spec: &JointSpectrum, s: f64, min_points: usize) -> usize {
    let (lo, hi) = spec.support();
    let needed = ((hi - lo) * SAMPLES_PER_OSCILLATION * s).ceil() as usize + 1;
    let mut n = needed.max(min_points);
    if n % 2 == 0 {
        n += 1;
    }
    if n > MAX_REFINED_POINTS {
        log::warn!(
            "s = {s}: kernel resolution capped at {MAX_REFINED_POINTS} points for {} (needed {n}); \
             purity accuracy is reduced",
            spec.label()
        );
        n = MAX_REFINED_POINTS;
    } else if s > ACCURACY_LIMIT_S {
        log::warn!("s = {s} exceeds the validated range s <= {ACCURACY_LIMIT_S}");
    }
    n
}

/// Discretized `ρ(x_i, x_j)` on the spectrum grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HeraldedDensityMatrix {
    grid: FrequencyGrid,
    elements: Vec<C64>,
    s: f64,
    source: String,
}

impl HeraldedDensityMatrix {
    /// Wraps externally produced elements (row-major, `n × n`).
    pub fn from_parts(grid: FrequencyGrid, elements: Vec<C64>, s: f64, source: impl Into<String>) -> Result<Self> {
        let n = grid.len();
        if elements.len() != n * n {
            return Err(contract(format!(
                "density matrix needs {} elements for a {n}-point grid, got {}",
                n * n,
                elements.len()
            )));
        }
        check_s(s)?;
        Ok(Self {
            grid,
            elements,
            s,
            source: source.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    /// The `BW·Δt` product the matrix was built for.
    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn elements(&self) -> &[C64] {
        &self.elements
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.elements[i * self.dim() + j]
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    /// `∫ ρ(x, x) dx` by grid quadrature.
    pub fn trace(&self) -> f64 {
        self.grid
            .weights()
            .iter()
            .enumerate()
            .map(|(i, w)| w * self.get(i, i).re)
            .sum()
    }

    /// `max |ρ_ij - ρ_ji*|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .flat_map(|i| (i..n).map(move |j| (i, j)))
            .map(|(i, j)| (self.get(i, j) - self.get(j, i).conj()).norm())
            .fold(0.0, f64::max)
    }

    fn max_abs(&self) -> f64 {
        self.elements.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn ensure_hermitian(&self) -> Result<()> {
        let defect = self.hermiticity_defect();
        if defect > 1e-10 * self.max_abs().max(f64::MIN_POSITIVE) {
            return Err(contract(format!("density matrix is not Hermitian (defect {defect:e})")));
        }
        Ok(())
    }

    /// `B_ij = √w_i ρ_ij √w_j`, whose eigenvalues approximate those of the
    /// continuum kernel.
    fn weighted_kernel(&self) -> Mat<c64> {
        let n = self.dim();
        let sw: Vec<f64> = self.grid.weights().iter().map(|w| w.sqrt()).collect();
        Mat::from_fn(n, n, |i, j| {
            let v = self.get(i, j) * (sw[i] * sw[j]);
            c64::new(v.re, v.im)
        })
    }

    /// All eigenvalues of the weight-symmetrized kernel, descending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.ensure_hermitian()?;
        let mut values = self.weighted_kernel().selfadjoint_eigenvalues(Side::Lower);
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("Hermitian eigensolver did not converge".into()));
        }
        values.reverse();
        Ok(values)
    }

    /// Row-major CSV: one line per row, `re,im` pairs for each column.
    pub fn to_csv(&self) -> String {
        let n = self.dim();
        let mut out = String::with_capacity(n * n * 32);
        for i in 0..n {
            for j in 0..n {
                let v = self.get(i, j);
                if j > 0 {
                    out.push(',');
                }
                out.push_str(&fmt_float(v.re));
                out.push(',');
                out.push_str(&fmt_float(v.im));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_export(&self) -> DensityMatrixExport {
        let n = self.dim();
        let rows = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..n)
                .map(|i| self.elements[i * n..(i + 1) * n].iter().map(f).collect())
                .collect()
        };
        DensityMatrixExport {
            source: self.source.clone(),
            s: self.s,
            grid: self.grid.spec(),
            real: rows(|v| v.re),
            imag: rows(|v| v.im),
        }
    }

    pub fn from_export(export: DensityMatrixExport) -> Result<Self> {
        let grid = FrequencyGrid::try_from(export.grid)?;
        let n = grid.len();
        if export.real.len() != n || export.imag.len() != n {
            return Err(contract("exported matrix rows do not match the grid"));
        }
        let mut elements = Vec::with_capacity(n * n);
        for (re_row, im_row) in export.real.iter().zip(&export.imag) {
            if re_row.len() != n || im_row.len() != n {
                return Err(contract("exported matrix columns do not match the grid"));
            }
            elements.extend(re_row.iter().zip(im_row).map(|(&r, &i)| C64::new(r, i)));
        }
        Self::from_parts(grid, elements, export.s, export.source)
    }
}

/// JSON form of a density matrix: grid plus real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrixExport {
    pub source: String,
    pub s: f64,
    pub grid: GridSpec,
    pub real: Vec<Vec<f64>>,
    pub imag: Vec<Vec<f64>>,
}

/// Builds `ρ(x_i, x_j)` on the spectrum's own grid.
pub fn density_matrix(spec: &JointSpectrum, s: f64) -> Result<HeraldedDensityMatrix> {
    check_s(s)?;
    let mass = spec.mass();
    if mass.is_nan() || mass <= 0.0 {
        return Err(invalid_parameter("spectrum has zero mass"));
    }
    let x = spec.grid().points();
    let phi = spec.samples();
    let n = x.len();
    let inv_mass = 1.0 / mass;

    let rows: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    let kernel = if i == j { 1.0 } else { sinc(PI * s * (x[i] - x[j])) };
                    phi[i] * phi[j].conj() * (kernel * inv_mass)
                })
                .collect()
        })
        .collect();

    Ok(HeraldedDensityMatrix {
        grid: spec.grid().clone(),
        elements: rows.concat(),
        s,
        source: spec.label().to_string(),
    })
}

/// `Tr ρ² = Σ_ij w_i w_j |ρ_ij|²`.
pub fn purity_from_matrix(rho: &HeraldedDensityMatrix) -> Result<f64> {
    rho.ensure_hermitian()?;
    let n = rho.dim();
    let w = rho.grid.weights();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = &rho.elements[i * n..(i + 1) * n];
            w[i] * row.iter().zip(w).map(|(v, wj)| wj * v.norm_sqr()).sum::<f64>()
        })
        .collect();
    Ok(rows.iter().sum())
}

/// Normalized, quadrature-weighted probabilities `w_i |φ_i|² / ∫|φ|²`.
fn weighted_probabilities(spec: &JointSpectrum) -> Result<Vec<f64>> {
    let mass = spec.mass();
    if mass.is_nan() || mass <= 0.0 {
        return Err(invalid_parameter("spectrum has zero mass"));
    }
    Ok(spec
        .intensity()
        .iter()
        .zip(spec.grid().weights())
        .map(|(p, w)| p * w / mass)
        .collect())
}

/// Purity by tensor-product quadrature of the `sinc²` kernel over both
/// detunings, on a grid refined until the spacing resolves the kernel.
pub fn purity_direct(spec: &JointSpectrum, s: f64) -> Result<f64> {
    check_s(s)?;
    let n = refined_points(spec, s, DIRECT_MIN_POINTS);
    let fine = spec.with_resolution(n)?;
    let p = weighted_probabilities(&fine)?;
    let h = fine.grid().spacing();

    // Uniform grid: the kernel depends on |i - j| only.
    let kernel: Vec<f64> = (0..n).map(|k| sinc(PI * s * k as f64 * h).powi(2)).collect();

    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let inner: f64 = p.iter().enumerate().map(|(j, pj)| pj * kernel[i.abs_diff(j)]).sum();
            p[i] * inner
        })
        .collect();
    Ok(rows.iter().sum())
}

/// Autocorrelation `A(d) = ∫ p(x) p(x + d) dx` of the normalized spectral
/// intensity, tabulated for lags `d = k h ≥ 0`.
#[derive(Debug, Clone)]
pub struct SpectralAutocorrelation {
    lags: FrequencyGrid,
    values: Vec<f64>,
}

impl SpectralAutocorrelation {
    /// Computes the autocorrelation on `n_points` samples across the support.
    pub fn new(spec: &JointSpectrum, n_points: usize) -> Result<Self> {
        let fine = if spec.grid().len() == n_points {
            spec.clone()
        } else {
            spec.with_resolution(n_points)?
        };
        let h = fine.grid().spacing();
        let intensity = fine.intensity();
        // Trapezoid normalization, matching the overlap sums below.
        let mass: f64 = h * (intensity.iter().sum::<f64>() - 0.5 * (intensity[0] + intensity[n_points - 1]));
        if mass.is_nan() || mass <= 0.0 {
            return Err(invalid_parameter("spectrum has zero mass"));
        }
        let f: Vec<f64> = intensity.iter().map(|v| v / mass).collect();

        let values: Vec<f64> = (0..n_points)
            .into_par_iter()
            .map(|k| {
                let overlap = n_points - k;
                if overlap < 2 {
                    return 0.0;
                }
                let sum: f64 = (0..overlap).map(|i| f[i] * f[i + k]).sum();
                let ends = 0.5 * (f[0] * f[k] + f[overlap - 1] * f[n_points - 1]);
                h * (sum - ends)
            })
            .collect();

        let lags = FrequencyGrid::new(0.0, h * (n_points - 1) as f64, n_points)?;
        Ok(Self { lags, values })
    }

    pub fn lags(&self) -> &[f64] {
        self.lags.points()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest `s` whose kernel this lag spacing resolves.
    pub fn max_resolved_s(&self) -> f64 {
        1.0 / (SAMPLES_PER_OSCILLATION * self.lags.spacing())
    }

    /// `γ(s) = 2 ∫₀^∞ sinc²(π s d) A(d) dd`.
    pub fn purity(&self, s: f64) -> Result<f64> {
        check_s(s)?;
        Ok(2.0
            * self
                .lags
                .points()
                .iter()
                .zip(self.lags.weights())
                .zip(&self.values)
                .map(|((d, w), a)| w * sinc(PI * s * d).powi(2) * a)
                .sum::<f64>())
    }
}

/// Purity through the 1-D autocorrelation reduction.
pub fn purity_autocorr(spec: &JointSpectrum, s: f64) -> Result<f64> {
    check_s(s)?;
    let n = refined_points(spec, s, spec.grid().len());
    SpectralAutocorrelation::new(spec, n)?.purity(s)
}

/// One model's purity values along a [`PurityCurve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PuritySeries {
    pub model: String,
    pub gamma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurityCurve {
    pub s_values: Vec<f64>,
    pub series: Vec<PuritySeries>,
}

impl PurityCurve {
    /// Two-column CSV `s,gamma` for one series.
    pub fn series_csv(&self, index: usize, s_header: &str) -> String {
        let mut out = format!("{s_header},gamma\n");
        for (s, g) in self.s_values.iter().zip(&self.series[index].gamma) {
            out.push_str(&fmt_float(*s));
            out.push(',');
            out.push_str(&fmt_float(*g));
            out.push('\n');
        }
        out
    }
}

/// `n_points` values of `s` from `s_lo` to `s_hi`: logarithmic, or linear when `s_lo = 0`.
pub fn sweep_values(s_lo: f64, s_hi: f64, n_points: usize) -> Result<Vec<f64>> {
    if !(s_lo.is_finite() && s_hi.is_finite()) || s_lo < 0.0 || s_lo >= s_hi {
        return Err(invalid_parameter(format!(
            "s range must satisfy 0 <= s_min < s_max, got [{s_lo}, {s_hi}]"
        )));
    }
    if n_points < 2 {
        return Err(invalid_parameter(format!(
            "need at least 2 sweep points, got {n_points}"
        )));
    }
    let last = (n_points - 1) as f64;
    let mut values: Vec<f64> = if s_lo == 0.0 {
        (0..n_points).map(|i| s_hi * i as f64 / last).collect()
    } else {
        let (a, b) = (s_lo.ln(), s_hi.ln());
        (0..n_points).map(|i| (a + (b - a) * i as f64 / last).exp()).collect()
    };
    values[0] = s_lo;
    values[n_points - 1] = s_hi;
    Ok(values)
}

/// Purity versus `s = BW·Δt` for several spectra, via the autocorrelation path.
pub fn purity_curve(models: &[JointSpectrum], s_lo: f64, s_hi: f64, n_points: usize) -> Result<PurityCurve> {
    let s_values = sweep_values(s_lo, s_hi, n_points)?;
    let series = models
        .iter()
        .map(|spec| {
            let n = refined_points(spec, s_hi, spec.grid().len());
            let autocorr = SpectralAutocorrelation::new(spec, n)?;
            let gamma = s_values
                .par_iter()
                .map(|&s| autocorr.purity(s))
                .collect::<Result<Vec<f64>>>()?;
            Ok(PuritySeries {
                model: spec.label().to_string(),
                gamma,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PurityCurve { s_values, series })
}

/// Leading eigenpairs of a density matrix.
#[derive(Debug, Clone)]
pub struct ModeDecomposition {
    /// Top-k eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Matching modes on the matrix grid, orthonormal under the grid weights.
    pub modes: Vec<Vec<C64>>,
    /// Sum of all eigenvalues.
    pub total: f64,
    /// Sum of all squared eigenvalues.
    pub purity: f64,
}

impl ModeDecomposition {
    /// `K = 1 / Σλ²`.
    pub fn effective_mode_number(&self) -> f64 {
        1.0 / self.purity
    }
}

pub fn mode_decomposition(rho: &HeraldedDensityMatrix, k: usize) -> Result<ModeDecomposition> {
    let n = rho.dim();
    if k == 0 || k > n {
        return Err(invalid_parameter(format!("mode count must lie in 1..={n}, got {k}")));
    }
    rho.ensure_hermitian()?;
    let eig = rho.weighted_kernel().selfadjoint_eigendecomposition(Side::Lower);
    let s = eig.s().column_vector();
    let u = eig.u();
    let values: Vec<f64> = (0..n).map(|i| s.read(i).re).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("Hermitian eigensolver did not converge".into()));
    }

    let inv_sqrt_w: Vec<f64> = rho.grid.weights().iter().map(|w| 1.0 / w.sqrt()).collect();
    let (eigenvalues, modes) = (0..k)
        .map(|r| {
            let col = n - 1 - r; // ascending order from the solver
            let mode = (0..n)
                .map(|i| {
                    let v = u.read(i, col);
                    C64::new(v.re, v.im) * inv_sqrt_w[i]
                })
                .collect();
            (values[col], mode)
        })
        .unzip();

    Ok(ModeDecomposition {
        eigenvalues,
        modes,
        total: values.iter().sum(),
        purity: values.iter().map(|v| v * v).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{make_gaussian, make_lorentzian, make_rectangular, DecayDirection};

    #[test]
    fn rejects_negative_s() {
        let spec = make_gaussian(1.0).unwrap();
        assert!(density_matrix(&spec, -1.0).is_err());
        assert!(purity_direct(&spec, -0.1).is_err());
        assert!(purity_autocorr(&spec, f64::NAN).is_err());
    }

    #[test]
    fn pure_state_at_zero_s() {
        let spec = make_gaussian(1.0).unwrap().with_resolution(201).unwrap();
        let rho = density_matrix(&spec, 0.0).unwrap();
        assert!((purity_from_matrix(&rho).unwrap() - 1.0).abs() < 1e-12);
        let modes = mode_decomposition(&rho, 3).unwrap();
        assert!((modes.eigenvalues[0] - 1.0).abs() < 1e-10);
        assert!(modes.eigenvalues[1].abs() < 1e-8);
    }

    #[test]
    fn sinc_suppresses_distant_coherence() {
        // s = 100 at |x - x'| = 0.25: |sinc(25π)| is zero up to rounding, well below 0.013.
        let spec = make_rectangular(1.0).unwrap().with_resolution(401).unwrap();
        let rho = density_matrix(&spec, 100.0).unwrap();
        let diag = rho.get(200, 200).norm();
        assert!(rho.get(200, 300).norm() < 0.013 * diag);
        // and at a non-node separation the envelope 1/(π s d) still bounds it
        let rel = rho.get(200, 301).norm() / diag;
        assert!(rel <= 1.0 / (PI * 100.0 * 0.2525) + 1e-12);
    }

    #[test]
    fn autocorrelation_of_rectangle_is_triangle() {
        let spec = make_rectangular(1.0).unwrap();
        let ac = SpectralAutocorrelation::new(&spec, spec.grid().len()).unwrap();
        for (d, a) in ac.lags().iter().zip(ac.values()) {
            assert!((a - (1.0 - d)).abs() < 1e-12, "d={d}");
        }
    }

    #[test]
    fn autocorrelation_of_gaussian_is_wider_gaussian() {
        // p has variance 1/(8 ln 2); p⋆p has twice that.
        let spec = make_gaussian(1.0).unwrap();
        let ac = SpectralAutocorrelation::new(&spec, spec.grid().len()).unwrap();
        let var = 2.0 / (8.0 * std::f64::consts::LN_2);
        for (d, a) in ac.lags().iter().zip(ac.values()).step_by(50) {
            let expected = (-d * d / (2.0 * var)).exp() / (2.0 * PI * var).sqrt();
            assert!((a - expected).abs() < 1e-9, "d={d}");
        }
    }

    #[test]
    fn mode_decomposition_bounds() {
        let rho = density_matrix(&make_gaussian(1.0).unwrap().with_resolution(101).unwrap(), 1.0).unwrap();
        assert!(mode_decomposition(&rho, 0).is_err());
        assert!(mode_decomposition(&rho, 102).is_err());
        assert!(mode_decomposition(&rho, 101).is_ok());
    }

    #[test]
    fn modes_are_weight_orthonormal() {
        let spec = make_lorentzian(1.0, DecayDirection::DecayOnPhoton1)
            .unwrap()
            .with_resolution(301)
            .unwrap();
        let rho = density_matrix(&spec, 3.0).unwrap();
        let dec = mode_decomposition(&rho, 4).unwrap();
        let w = rho.grid().weights();
        for a in 0..4 {
            for b in 0..4 {
                let ip: C64 = (0..w.len())
                    .map(|i| dec.modes[a][i].conj() * dec.modes[b][i] * w[i])
                    .sum();
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((ip - C64::new(expected, 0.0)).norm() < 1e-9);
            }
        }
        assert!(dec.eigenvalues.windows(2).all(|p| p[0] >= p[1]));
    }

    #[test]
    fn non_hermitian_matrix_is_rejected() {
        let grid = FrequencyGrid::symmetric(1.0, 3).unwrap();
        let mut elements = vec![C64::new(0.0, 0.0); 9];
        elements[1] = C64::new(1.0, 0.0);
        let rho = HeraldedDensityMatrix::from_parts(grid.clone(), elements, 0.0, "test").unwrap();
        assert!(matches!(purity_from_matrix(&rho), Err(Error::ContractViolation(_))));
        assert!(HeraldedDensityMatrix::from_parts(grid, vec![C64::new(0.0, 0.0); 8], 0.0, "t").is_err());
    }

    #[test]
    fn export_round_trip() {
        let rho = density_matrix(&make_gaussian(1.0).unwrap().with_resolution(11).unwrap(), 0.5).unwrap();
        let json = serde_json::to_string(&rho.to_export()).unwrap();
        let back = HeraldedDensityMatrix::from_export(serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, rho);
        let csv = rho.to_csv();
        assert_eq!(csv.lines().count(), 11);
        assert_eq!(csv.lines().next().unwrap().split(',').count(), 22);
    }

    #[test]
    fn sweep_spacing() {
        let s = sweep_values(0.01, 10.0, 4).unwrap();
        assert_eq!(s[0], 0.01);
        assert_eq!(s[3], 10.0);
        assert!((s[1] - 0.1).abs() < 1e-12 && (s[2] - 1.0).abs() < 1e-12);
        let s = sweep_values(0.0, 1.0, 5).unwrap();
        assert_eq!(s, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(sweep_values(1.0, 1.0, 5).is_err());
        assert!(sweep_values(10.0, 1.0, 5).is_err());
        assert!(sweep_values(0.1, 1.0, 1).is_err());
        assert!(sweep_values(-0.1, 1.0, 3).is_err());
    }
}
