//! Temporal wave packets of the heralded photon.
//!
//! With the trigger detection as time origin, heralding photon 1 gives
//! `ψ(u) = R^{-1/2} ∫ φ(x) e^{-2πi x u} dx` and heralding photon 2 gives the
//! time-reversed envelope `ψ(-u)`. The optical carrier (`e^{-iω₁₀τ}` or
//! `e^{-iω₂₀τ}`) is recorded on the waveform, never sampled.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::io::fmt_float;
use crate::numerics::{fourier_at_times, integrate_real, Grid, GridSpec, TimeGrid};
use crate::spectra::{apply_modulator, JointSpectrum, SpectralModulator, SpectrumModel};

/// Default time window for unimodal spectra: `u ∈ [-8, 8]`.
pub const DEFAULT_TIME_HALF_WIDTH: f64 = 8.0;
pub const DEFAULT_TIME_POINTS: usize = 4001;

/// Which photon of the pair is heralded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeraldedArm {
    /// Photon 1, heralded by detecting photon 2.
    Photon1,
    /// Photon 2, heralded by detecting photon 1.
    Photon2,
}

impl HeraldedArm {
    pub fn carrier_label(self) -> &'static str {
        match self {
            HeraldedArm::Photon1 => "exp(-i*omega_10*tau)",
            HeraldedArm::Photon2 => "exp(-i*omega_20*tau)",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalWaveform {
    grid: TimeGrid,
    amplitude: Vec<C64>,
    norm: f64,
    arm: HeraldedArm,
}

impl TemporalWaveform {
    /// Wraps externally supplied samples. The norm is taken as the energy
    /// captured inside the grid.
    pub fn from_samples(grid: TimeGrid, amplitude: Vec<C64>, arm: HeraldedArm) -> Result<Self> {
        if amplitude.len() != grid.len() {
            return Err(contract(format!(
                "waveform has {} samples for a {}-point grid",
                amplitude.len(),
                grid.len()
            )));
        }
        if amplitude.iter().any(|v| !v.is_finite()) {
            return Err(contract("waveform amplitude must be finite"));
        }
        let mut wf = Self {
            grid,
            amplitude,
            norm: 0.0,
            arm,
        };
        wf.norm = wf.windowed_energy();
        Ok(wf)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn amplitude(&self) -> &[C64] {
        &self.amplitude
    }

    /// `∫ |ψ|² dτ` over all times. For heralded waveforms this is evaluated
    /// exactly on the spectral side (Parseval), so it is independent of the
    /// sampled window; it equals the heralding efficiency when a lossy
    /// modulator was applied without renormalization.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn heralded_arm(&self) -> HeraldedArm {
        self.arm
    }

    pub fn carrier(&self) -> &'static str {
        self.arm.carrier_label()
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.amplitude.iter().map(|v| v.norm_sqr()).collect()
    }

    /// `∫ |ψ|² du` restricted to the sampled window.
    /// Rescales to unit total norm.
    pub fn renormalized(mut self) -> Result<Self> {
        if self.norm.is_nan() || self.norm <= 0.0 {
            return Err(Error::Numerical("modulator blocks the whole spectrum".into()));
        }
        let factor = 1.0 / self.norm.sqrt();
        self.amplitude.iter_mut().for_each(|v| *v *= factor);
        self.norm = 1.0;
        Ok(self)
    }

    pub fn windowed_energy(&self) -> f64 {
        integrate_real(&self.intensity(), &self.grid).expect("samples match grid")
    }

    /// CSV with columns `u, re, im, abs2` (header overridable for SI output).
    pub fn to_csv(&self, time_header: &str) -> String {
        let mut out = format!("{time_header},re,im,abs2\n");
        for (u, v) in self.grid.points().iter().zip(&self.amplitude) {
            out.push_str(&fmt_float(*u));
            for value in [v.re, v.im, v.norm_sqr()] {
                out.push(',');
                out.push_str(&fmt_float(value));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_export(&self) -> WaveformExport {
        WaveformExport {
            heralded_arm: self.arm,
            carrier: self.carrier().to_string(),
            norm: self.norm,
            grid: self.grid.spec(),
            re: self.amplitude.iter().map(|v| v.re).collect(),
            im: self.amplitude.iter().map(|v| v.im).collect(),
        }
    }
}

/// JSON form of a waveform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformExport {
    pub heralded_arm: HeraldedArm,
    pub carrier: String,
    pub norm: f64,
    pub grid: GridSpec,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

/// Time window that holds the built-in models' wave packets: `[-8, 8]` with
/// 4001 points, widened and densified for frequency-bin states so the
/// envelope and at least ten beat periods fit with ≥ 40 samples per period.
pub fn default_time_grid(spec: &JointSpectrum) -> Result<TimeGrid> {
    match spec.model() {
        SpectrumModel::FrequencyBin { delta, bin_width, .. } => {
            // |ψ|² envelope has standard deviation 1/(4πσ); keep ±8 of them.
            let half = DEFAULT_TIME_HALF_WIDTH.max(2.0 / (PI * bin_width)).max(5.0 / delta);
            let mut n = ((2.0 * half * 40.0 * delta).ceil() as usize + 1).max(DEFAULT_TIME_POINTS);
            if n % 2 == 0 {
                n += 1;
            }
            TimeGrid::symmetric(half, n)
        }
        _ => TimeGrid::symmetric(DEFAULT_TIME_HALF_WIDTH, DEFAULT_TIME_POINTS),
    }
}

/// Heralded envelope of `arm` on `tgrid`.
pub fn herald_waveform(spec: &JointSpectrum, arm: HeraldedArm, tgrid: &TimeGrid) -> Result<TemporalWaveform> {
    let times: Vec<f64> = match arm {
        HeraldedArm::Photon1 => tgrid.points().to_vec(),
        HeraldedArm::Photon2 => tgrid.points().iter().map(|u| -u).collect(),
    };
    let scale = 1.0 / spec.rate().sqrt();
    let amplitude = fourier_at_times(spec.samples(), spec.grid(), &times)?
        .into_iter()
        .map(|v| v * scale)
        .collect();
    Ok(TemporalWaveform {
        grid: tgrid.clone(),
        amplitude,
        norm: spec.mass() / spec.rate(),
        arm,
    })
}

/// Heralded envelope after a spectral modulator. Returns the waveform and the
/// heralding efficiency; with `renormalize` the waveform is rescaled to unit
/// norm (the efficiency is still reported).
pub fn herald_waveform_modulated(
    spec: &JointSpectrum,
    modulator: &SpectralModulator,
    arm: HeraldedArm,
    tgrid: &TimeGrid,
    renormalize: bool,
) -> Result<(TemporalWaveform, f64)> {
    let (modulated, efficiency) = apply_modulator(spec, modulator)?;
    let wf = herald_waveform(&modulated, arm, tgrid)?;
    let wf = if renormalize { wf.renormalized()? } else { wf };
    Ok((wf, efficiency))
}

/// `|∫ ψ_a* ψ_b du|` after normalizing both inputs on the shared window.
pub fn waveform_fidelity(a: &TemporalWaveform, b: &TemporalWaveform) -> Result<f64> {
    if a.grid != b.grid {
        return Err(contract("waveform fidelity needs identical time grids"));
    }
    let (ea, eb) = (a.windowed_energy(), b.windowed_energy());
    if !(ea > 0.0 && eb > 0.0) {
        return Err(contract("waveform fidelity needs non-zero waveforms"));
    }
    let overlap: C64 = a
        .amplitude
        .iter()
        .zip(&b.amplitude)
        .zip(a.grid.weights())
        .map(|((x, y), w)| x.conj() * y * w)
        .sum();
    Ok(overlap.norm() / (ea * eb).sqrt())
}

/// Two-color interference signature of a heralded waveform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeatNote {
    /// Dominant oscillation period of |ψ|², in units of 1/BW.
    pub period: f64,
    /// `(max - min) / (max + min)` over one period around the envelope centre.
    pub visibility: f64,
}

/// Locates the dominant oscillation of |ψ(u)|² from the peak of its
/// autocorrelation spectrum, then measures fringe visibility over one period
/// around the envelope centroid.
pub fn beat_note_analysis(wf: &TemporalWaveform) -> Result<BeatNote> {
    let intensity = wf.intensity();
    let n = intensity.len();
    let du = wf.grid.spacing();

    // Wiener–Khinchin: the autocorrelation's spectrum is |FFT(I)|². Zero
    // padding by at least 8x refines the frequency axis.
    let m = (8 * n).next_power_of_two();
    let mut buf: Vec<C64> = intensity.iter().map(|&v| C64::new(v, 0.0)).collect();
    buf.resize(m, C64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let power: Vec<f64> = buf[..m / 2].iter().map(|v| v.norm_sqr()).collect();

    // Skip the lobe around zero frequency (the envelope itself).
    let Some(lobe_end) = (1..power.len() - 1).find(|&k| power[k] <= power[k - 1] && power[k] < power[k + 1]) else {
        return Err(Error::NoOscillation);
    };
    let (peak, &peak_power) = power[lobe_end..]
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, p)| (k + lobe_end, p))
        .ok_or(Error::NoOscillation)?;
    if peak_power < 1e-6 * power[0] || peak + 1 >= power.len() {
        return Err(Error::NoOscillation);
    }

    // Parabolic interpolation of ln(power): exact for Gaussian-shaped lines.
    let (l, c, r) = (power[peak - 1].ln(), peak_power.ln(), power[peak + 1].ln());
    let denom = l - 2.0 * c + r;
    let offset = if denom.abs() > 0.0 { 0.5 * (l - r) / denom } else { 0.0 };
    let frequency = (peak as f64 + offset) / (m as f64 * du);
    let period = 1.0 / frequency;

    let u = wf.grid.points();
    let weights = wf.grid.weights();
    let total: f64 = intensity.iter().zip(weights).map(|(i, w)| i * w).sum();
    let centre: f64 = intensity
        .iter()
        .zip(weights)
        .zip(u)
        .map(|((i, w), x)| i * w * x)
        .sum::<f64>()
        / total;
    let (lo, hi) = (centre - 0.5 * period, centre + 0.5 * period);
    let (min, max) = u
        .iter()
        .zip(&intensity)
        .filter(|(x, _)| (lo..=hi).contains(*x))
        .fold((f64::INFINITY, 0.0f64), |(mn, mx), (_, &v)| (mn.min(v), mx.max(v)));
    if max.is_nan() || max <= 0.0 {
        return Err(Error::NoOscillation);
    }
    Ok(BeatNote {
        period,
        visibility: (max - min) / (max + min),
    })
}
