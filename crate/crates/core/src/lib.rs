//! Heralded single photons from frequency-anti-correlated photon pairs.
//!
//! A pair is described by its joint spectral amplitude φ(x) over the
//! dimensionless detuning `x = Ω / (2π BW)`. Detecting the trigger photon
//! with a response window Δt leaves its partner in the state
//!
//! ```text
//! ρ(x, x') = sinc(π s (x - x')) φ(x) φ*(x') / ∫|φ|²,     s = BW·Δt,
//! ```
//!
//! which is pure for an instantaneous trigger (`s = 0`) and tends to a
//! mixture as `s` grows. The crate builds these matrices, computes their
//! purity `Tr ρ²` three independent ways, decomposes them into spectral
//! modes, and produces the heralded temporal wave packets including the
//! effect of spectral modulators placed on either photon's path.
//!
//! ```
//! use heralded_core::{make_rectangular, purity_autocorr};
//!
//! let spectrum = make_rectangular(1.0).unwrap();
//! let gamma = purity_autocorr(&spectrum, 1.0).unwrap();
//! assert!((gamma - 0.656).abs() < 1e-3);
//! ```

pub mod error;
pub mod heralding;
pub mod io;
pub mod numerics;
pub mod spectra;
pub mod waveform;

pub use error::{Error, Result};
pub use heralding::{
    density_matrix, mode_decomposition, purity_autocorr, purity_curve, purity_direct, purity_from_matrix, sweep_values,
    DensityMatrixExport, HeraldedDensityMatrix, ModeDecomposition, PurityCurve, PuritySeries, SpectralAutocorrelation,
};
pub use num_complex::Complex64;
pub use numerics::{
    fourier_to_time, fourier_to_time_fft, integrate, integrate_real, sinc, FrequencyGrid, Grid, GridSpec,
    QuadratureRule, TimeGrid,
};
pub use spectra::{
    apply_modulator, make_frequency_bin, make_gaussian, make_lorentzian, make_rectangular, make_tabulated,
    read_tabulated_csv, Arm, CenterFrequencies, DecayDirection, JointSpectrum, ModulatorKind, SpectralModulator,
    SpectrumModel,
};
pub use waveform::{
    beat_note_analysis, default_time_grid, herald_waveform, herald_waveform_modulated, waveform_fidelity, BeatNote,
    HeraldedArm, TemporalWaveform, WaveformExport,
};
