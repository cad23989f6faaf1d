//! Joint spectral amplitudes of frequency-anti-correlated photon pairs and
//! the passive spectral modulators that can act on either arm.
//!
//! A pair state is fully described by one amplitude φ(x) over the detuning
//! `x = Ω / (2π BW)` of photon 1 (photon 2 sits at the mirrored detuning
//! `-x`). Amplitudes are scaled so that `∫ |φ(x)|² dx = R`, which is the
//! dimensionless form of `(1/2π) ∫ |Φ(Ω)|² dΩ = R`.

use std::f64::consts::{LN_2, PI};
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, invalid_parameter, Result};
use crate::io::read_table;
use crate::numerics::{integrate_real, interp_linear, FrequencyGrid, Grid};

/// Default number of frequency samples for every built-in model.
pub const DEFAULT_FREQUENCY_POINTS: usize = 2001;

/// Lorentzian amplitudes are apodized with a raised cosine between these
/// detunings and vanish beyond the outer one.
const LORENTZIAN_TAPER_START: f64 = 30.0;
const LORENTZIAN_HALF_WIDTH: f64 = 40.0;

/// Half-width of a frequency bin window in units of the bin width σ.
const BIN_WINDOW_SIGMAS: f64 = 10.0;

/// Which photon's heralded wave packet decays for a Lorentzian pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DecayDirection {
    /// Heralding photon 1 on photon 2 yields a decaying exponential.
    #[default]
    DecayOnPhoton1,
    /// Heralding photon 2 on photon 1 yields a decaying exponential.
    DecayOnPhoton2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpectrumModel {
    /// Flat amplitude over `x ∈ [-1/2, 1/2]`.
    Rectangular,
    /// Gaussian with |φ|² FWHM of one bandwidth.
    Gaussian,
    /// Complex Lorentzian `1 / (1/2 ∓ i x)`, |φ|² FWHM of one bandwidth.
    Lorentzian { direction: DecayDirection },
    /// Two Gaussian bins at detunings 0 and `delta`; the bin at 0 carries `e^{iθ}`.
    FrequencyBin { delta: f64, theta: f64, bin_width: f64 },
    /// User-supplied amplitude, linearly interpolated and zero outside the table.
    Tabulated { x: Vec<f64>, phi: Vec<C64> },
}

impl SpectrumModel {
    pub fn label(&self) -> &'static str {
        match self {
            SpectrumModel::Rectangular => "rect",
            SpectrumModel::Gaussian => "gaussian",
            SpectrumModel::Lorentzian { .. } => "lorentzian",
            SpectrumModel::FrequencyBin { .. } => "freq-bin",
            SpectrumModel::Tabulated { .. } => "tabulated",
        }
    }

    /// Detuning window outside of which the amplitude is zero (or below 1e-10
    /// of its peak for the Gaussian shapes).
    pub fn support(&self) -> (f64, f64) {
        match self {
            SpectrumModel::Rectangular => (-0.5, 0.5),
            SpectrumModel::Gaussian => (-4.0, 4.0),
            SpectrumModel::Lorentzian { .. } => (-LORENTZIAN_HALF_WIDTH, LORENTZIAN_HALF_WIDTH),
            SpectrumModel::FrequencyBin { delta, bin_width, .. } => {
                let pad = BIN_WINDOW_SIGMAS * bin_width;
                (-pad, delta + pad)
            }
            SpectrumModel::Tabulated { x, .. } => (x[0], x[x.len() - 1]),
        }
    }

    /// Amplitude shape at unit rate. Rectangular and Gaussian shapes carry
    /// their closed-form normalization; the others are normalized numerically.
    fn shape(&self, x: f64) -> C64 {
        match self {
            SpectrumModel::Rectangular => {
                if x.abs() <= 0.5 {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }
            SpectrumModel::Gaussian => {
                let peak = (4.0 * (PI * LN_2).sqrt() / (2.0 * PI)).sqrt();
                C64::new(peak * (-2.0 * LN_2 * x * x).exp(), 0.0)
            }
            SpectrumModel::Lorentzian { direction } => {
                let taper = lorentzian_taper(x);
                if taper == 0.0 {
                    return C64::new(0.0, 0.0);
                }
                let sign = match direction {
                    DecayDirection::DecayOnPhoton1 => -1.0,
                    DecayDirection::DecayOnPhoton2 => 1.0,
                };
                taper / C64::new(0.5, sign * x)
            }
            SpectrumModel::FrequencyBin {
                delta,
                theta,
                bin_width,
            } => {
                let bin = |d: f64| (-d * d / (4.0 * bin_width * bin_width)).exp();
                C64::from_polar(bin(x), *theta) + bin(x - delta)
            }
            SpectrumModel::Tabulated { x: xs, phi } => interp_linear(xs, phi, x).unwrap_or(C64::new(0.0, 0.0)),
        }
    }

    fn has_closed_form_norm(&self) -> bool {
        matches!(self, SpectrumModel::Rectangular | SpectrumModel::Gaussian)
    }
}

fn lorentzian_taper(x: f64) -> f64 {
    let a = x.abs();
    if a <= LORENTZIAN_TAPER_START {
        1.0
    } else if a >= LORENTZIAN_HALF_WIDTH {
        0.0
    } else {
        let t = (a - LORENTZIAN_TAPER_START) / (LORENTZIAN_HALF_WIDTH - LORENTZIAN_TAPER_START);
        0.5 * (1.0 + (PI * t).cos())
    }
}

/// Carrier frequencies ω₁₀, ω₂₀ in rad/s. Labels only; never sampled.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CenterFrequencies {
    pub photon1: Option<f64>,
    pub photon2: Option<f64>,
}

/// Which photon path a modulator sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    /// Photon 2, the heralding photon.
    Trigger,
    /// Photon 1, the heralded photon.
    Signal,
}

impl Arm {
    /// Detuning of this arm's photon when photon 1 is detuned by `x`.
    pub fn arm_detuning(self, x: f64) -> f64 {
        match self {
            Arm::Trigger => -x,
            Arm::Signal => x,
        }
    }
}

/// Transfer function `M(ν)` of a passive element, with `ν` the detuning of
/// the photon it acts on, in bandwidth units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModulatorKind {
    Unity,
    /// `M(ν) = e^{2πi ν T}`: a delay of `T` (in 1/BW) on this arm.
    LinearPhase {
        delay: f64,
    },
    /// `M(ν) = e^{i β ν²}`: group-delay dispersion.
    QuadraticPhase {
        beta: f64,
    },
    /// Real transmission table, linearly interpolated.
    AmplitudeMask {
        nu: Vec<f64>,
        transmission: Vec<f64>,
    },
    /// Complex response table, linearly interpolated.
    Tabulated {
        nu: Vec<f64>,
        response: Vec<C64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralModulator {
    pub kind: ModulatorKind,
    pub arm: Arm,
}

const PASSIVITY_TOL: f64 = 1e-12;

impl SpectralModulator {
    pub fn new(kind: ModulatorKind, arm: Arm) -> Result<Self> {
        let m = Self { kind, arm };
        m.validate()?;
        Ok(m)
    }

    pub fn unity(arm: Arm) -> Self {
        Self {
            kind: ModulatorKind::Unity,
            arm,
        }
    }

    pub fn linear_phase(delay: f64, arm: Arm) -> Result<Self> {
        Self::new(ModulatorKind::LinearPhase { delay }, arm)
    }

    pub fn quadratic_phase(beta: f64, arm: Arm) -> Result<Self> {
        Self::new(ModulatorKind::QuadraticPhase { beta }, arm)
    }

    pub fn amplitude_mask(nu: Vec<f64>, transmission: Vec<f64>, arm: Arm) -> Result<Self> {
        Self::new(ModulatorKind::AmplitudeMask { nu, transmission }, arm)
    }

    pub fn tabulated(nu: Vec<f64>, response: Vec<C64>, arm: Arm) -> Result<Self> {
        Self::new(ModulatorKind::Tabulated { nu, response }, arm)
    }

    /// Loads a mask from CSV with columns `nu, value` (real transmission) or
    /// `nu, re, im` (complex response).
    pub fn from_csv(path: &Path, arm: Arm) -> Result<Self> {
        let table = read_table(path, &[&["nu", "value"], &["nu", "re", "im"]])?;
        let nu = table.column("nu").unwrap_or_default();
        match table.column("value") {
            Some(transmission) => Self::amplitude_mask(nu, transmission, arm),
            None => {
                let re = table.column("re").unwrap_or_default();
                let im = table.column("im").unwrap_or_default();
                let response = re.iter().zip(&im).map(|(&r, &i)| C64::new(r, i)).collect();
                Self::tabulated(nu, response, arm)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            ModulatorKind::Unity => Ok(()),
            ModulatorKind::LinearPhase { delay } => finite("delay", *delay),
            ModulatorKind::QuadraticPhase { beta } => finite("beta", *beta),
            ModulatorKind::AmplitudeMask { nu, transmission } => {
                check_table(nu, transmission.len())?;
                if let Some(t) = transmission
                    .iter()
                    .find(|t| !t.is_finite() || t.abs() > 1.0 + PASSIVITY_TOL)
                {
                    return Err(invalid_parameter(format!("mask transmission {t} violates |M| <= 1")));
                }
                Ok(())
            }
            ModulatorKind::Tabulated { nu, response } => {
                check_table(nu, response.len())?;
                if let Some(r) = response
                    .iter()
                    .find(|r| !r.is_finite() || r.norm() > 1.0 + PASSIVITY_TOL)
                {
                    return Err(invalid_parameter(format!("modulator response {r} violates |M| <= 1")));
                }
                Ok(())
            }
        }
    }

    /// `M(ν)`; `None` where a tabulated response is undefined.
    pub fn response(&self, nu: f64) -> Option<C64> {
        match &self.kind {
            ModulatorKind::Unity => Some(C64::new(1.0, 0.0)),
            ModulatorKind::LinearPhase { delay } => Some(C64::from_polar(1.0, 2.0 * PI * nu * delay)),
            ModulatorKind::QuadraticPhase { beta } => Some(C64::from_polar(1.0, beta * nu * nu)),
            ModulatorKind::AmplitudeMask { nu: xs, transmission } => {
                interp_linear(xs, transmission, nu).map(|t| C64::new(t, 0.0))
            }
            ModulatorKind::Tabulated { nu: xs, response } => interp_linear(xs, response, nu),
        }
    }

    /// Response seen by the pair component where photon 1 is detuned by `x`.
    pub fn response_at_signal_detuning(&self, x: f64) -> Option<C64> {
        self.response(self.arm.arm_detuning(x))
    }

    pub fn is_pure_phase(&self) -> bool {
        matches!(
            self.kind,
            ModulatorKind::Unity | ModulatorKind::LinearPhase { .. } | ModulatorKind::QuadraticPhase { .. }
        )
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid_parameter(format!("{name} must be finite, got {v}")))
    }
}

fn check_table(xs: &[f64], n_values: usize) -> Result<()> {
    if xs.len() < 2 || xs.len() != n_values {
        return Err(invalid_input(format!(
            "table needs matching columns with at least 2 rows (got {} abscissae, {} values)",
            xs.len(),
            n_values
        )));
    }
    if xs.iter().any(|x| !x.is_finite()) || xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid_input("table abscissae must be finite and strictly increasing"));
    }
    Ok(())
}

/// Joint spectral amplitude of a photon pair, sampled on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpectrum {
    model: SpectrumModel,
    rate: f64,
    scale: f64,
    modulators: Vec<SpectralModulator>,
    centers: CenterFrequencies,
    grid: FrequencyGrid,
    samples: Vec<C64>,
}

fn check_rate(rate: f64) -> Result<()> {
    if rate.is_finite() && rate > 0.0 {
        Ok(())
    } else {
        Err(invalid_parameter(format!("pair rate must be positive, got {rate}")))
    }
}

fn odd_at_least(n: usize) -> usize {
    if n % 2 == 0 {
        n + 1
    } else {
        n
    }
}

/// Flat spectrum over one bandwidth, `φ = √R` on `[-1/2, 1/2]`.
pub fn make_rectangular(rate: f64) -> Result<JointSpectrum> {
    JointSpectrum::from_model(SpectrumModel::Rectangular, rate)
}

/// Gaussian spectrum whose |φ|² has a FWHM of one bandwidth.
pub fn make_gaussian(rate: f64) -> Result<JointSpectrum> {
    JointSpectrum::from_model(SpectrumModel::Gaussian, rate)
}

/// Lorentzian amplitude whose Fourier transform is a one-sided exponential.
pub fn make_lorentzian(rate: f64, direction: DecayDirection) -> Result<JointSpectrum> {
    JointSpectrum::from_model(SpectrumModel::Lorentzian { direction }, rate)
}

/// Two-bin frequency superposition. `bin_width` defaults to `delta / 20`.
pub fn make_frequency_bin(delta: f64, theta: f64, bin_width: Option<f64>, rate: f64) -> Result<JointSpectrum> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(invalid_parameter(format!(
            "bin separation must be positive, got {delta}"
        )));
    }
    finite("theta", theta)?;
    let bin_width = bin_width.unwrap_or(delta / 20.0);
    if (bin_width.is_nan() || bin_width <= 0.0) || bin_width > delta / 10.0 * (1.0 + 1e-12) {
        return Err(invalid_parameter(format!(
            "bin width {bin_width} must lie in (0, delta/10 = {}]",
            delta / 10.0
        )));
    }
    JointSpectrum::from_model(
        SpectrumModel::FrequencyBin {
            delta,
            theta,
            bin_width,
        },
        rate,
    )
}

/// User-tabulated amplitude, interpolated onto the working grid and scaled
/// to the requested rate.
pub fn make_tabulated(x: Vec<f64>, phi: Vec<C64>, rate: f64) -> Result<JointSpectrum> {
    if x.len() < 3 || x.len() != phi.len() {
        return Err(invalid_input(format!(
            "tabulated spectrum needs at least 3 rows with matching columns (got {} x, {} phi)",
            x.len(),
            phi.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) || x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid_input("tabulated x must be finite and strictly increasing"));
    }
    if phi.iter().any(|p| !p.is_finite()) {
        return Err(invalid_input("tabulated amplitude contains non-finite values"));
    }
    if phi.iter().all(|p| p.norm_sqr() == 0.0) {
        return Err(invalid_input(
            "tabulated amplitude is identically zero; cannot normalize",
        ));
    }
    let n = odd_at_least(DEFAULT_FREQUENCY_POINTS.max(x.len()));
    JointSpectrum::build(SpectrumModel::Tabulated { x, phi }, rate, n)
}

/// Reads a tabulated spectrum from CSV with columns `x, re` or `x, re, im`.
pub fn read_tabulated_csv(path: &Path, rate: f64) -> Result<JointSpectrum> {
    let table = read_table(path, &[&["x", "re"], &["x", "re", "im"]])?;
    let x = table.column("x").unwrap_or_default();
    let re = table.column("re").unwrap_or_default();
    let im = table.column("im").unwrap_or_else(|| vec![0.0; re.len()]);
    let phi = re.iter().zip(&im).map(|(&r, &i)| C64::new(r, i)).collect();
    make_tabulated(x, phi, rate)
}

impl JointSpectrum {
    fn from_model(model: SpectrumModel, rate: f64) -> Result<Self> {
        Self::build(model, rate, DEFAULT_FREQUENCY_POINTS)
    }

    fn build(model: SpectrumModel, rate: f64, n_points: usize) -> Result<Self> {
        check_rate(rate)?;
        let (lo, hi) = model.support();
        let grid = FrequencyGrid::new(lo, hi, n_points)?;
        let shapes: Vec<C64> = grid.points().iter().map(|&x| model.shape(x)).collect();
        let scale = if model.has_closed_form_norm() {
            rate.sqrt()
        } else {
            let intensity: Vec<f64> = shapes.iter().map(|v| v.norm_sqr()).collect();
            let mass = integrate_real(&intensity, &grid)?;
            if mass.is_nan() || mass <= 0.0 {
                return Err(invalid_input("spectrum has zero mass on its grid"));
            }
            (rate / mass).sqrt()
        };
        let samples = shapes.into_iter().map(|v| v * scale).collect();
        Ok(Self {
            model,
            rate,
            scale,
            modulators: Vec::new(),
            centers: CenterFrequencies::default(),
            grid,
            samples,
        })
    }

    pub fn model(&self) -> &SpectrumModel {
        &self.model
    }

    pub fn label(&self) -> &'static str {
        self.model.label()
    }

    /// Pair rate `R` the spectrum was normalized to.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn modulators(&self) -> &[SpectralModulator] {
        &self.modulators
    }

    pub fn centers(&self) -> CenterFrequencies {
        self.centers
    }

    pub fn with_centers(mut self, centers: CenterFrequencies) -> Self {
        self.centers = centers;
        self
    }

    pub fn support(&self) -> (f64, f64) {
        self.model.support()
    }

    /// φ(x) including every applied modulator.
    pub fn amplitude_at(&self, x: f64) -> C64 {
        self.modulators.iter().fold(self.model.shape(x) * self.scale, |acc, m| {
            acc * m.response_at_signal_detuning(x).unwrap_or(C64::new(0.0, 0.0))
        })
    }

    /// |φ(x)|² on the grid.
    pub fn intensity(&self) -> Vec<f64> {
        self.samples.iter().map(|v| v.norm_sqr()).collect()
    }

    /// `∫ |φ|² dx` on the grid; equals the rate for an unmodulated spectrum.
    pub fn mass(&self) -> f64 {
        integrate_real(&self.intensity(), &self.grid).expect("samples match grid")
    }

    /// Same spectrum evaluated on another grid.
    pub fn with_grid(&self, grid: FrequencyGrid) -> Self {
        let samples = grid.points().iter().map(|&x| self.amplitude_at(x)).collect();
        Self {
            grid,
            samples,
            ..self.clone()
        }
    }

    /// Resamples over the model's support with `n_points` samples.
    pub fn with_resolution(&self, n_points: usize) -> Result<Self> {
        let (lo, hi) = self.support();
        Ok(self.with_grid(FrequencyGrid::new(lo, hi, n_points)?))
    }

    /// Same shape scaled to a different pair rate.
    pub fn with_rate(&self, rate: f64) -> Result<Self> {
        check_rate(rate)?;
        let factor = (rate / self.rate).sqrt();
        Ok(Self {
            rate,
            scale: self.scale * factor,
            samples: self.samples.iter().map(|v| v * factor).collect(),
            ..self.clone()
        })
    }
}

/// Applies a modulator; on the trigger arm it sees the mirrored
/// detuning. Returns the unrenormalized spectrum and the heralding
/// efficiency `η = ∫|φM|² / ∫|φ|²`.
pub fn apply_modulator(spec: &JointSpectrum, modulator: &SpectralModulator) -> Result<(JointSpectrum, f64)> {
    modulator.validate()?;
    let peak = spec.samples.iter().fold(0.0f64, |m, v| m.max(v.norm_sqr()));
    let mut samples = Vec::with_capacity(spec.samples.len());
    for (&x, &phi) in spec.grid.points().iter().zip(&spec.samples) {
        let response = match modulator.response_at_signal_detuning(x) {
            Some(r) => r,
            None if phi.norm_sqr() <= 1e-14 * peak => C64::new(0.0, 0.0),
            None => {
                return Err(invalid_input(format!(
                    "modulator is undefined at arm detuning {} inside the spectral support",
                    modulator.arm.arm_detuning(x)
                )))
            }
        };
        samples.push(phi * response);
    }
    let before = spec.mass();
    let mut modulated = JointSpectrum {
        samples,
        ..spec.clone()
    };
    modulated.modulators.push(modulator.clone());
    let efficiency = modulated.mass() / before;
    Ok((modulated, efficiency))
}
