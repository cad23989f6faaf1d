//! Serializable description of one CLI run. A run's manifest embeds its
//! `RunConfig`, and replaying the manifest reproduces the outputs exactly.

use std::path::PathBuf;

use clap::ValueEnum;
use heralded_core::{Arm, DecayDirection, HeraldedArm};
use serde::{Deserialize, Serialize};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "HERALDED_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    #[default]
    PurityCurve,
    Purity,
    Density,
    Waveform,
    Modulate,
    Modes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    #[default]
    Rect,
    Gaussian,
    Lorentzian,
    FreqBin,
    Tabulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PurityMethod {
    #[default]
    Autocorr,
    Direct,
    Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub model: ModelKind,
    /// Pair rate R; a pure scale.
    pub rate: f64,
    pub direction: DecayDirection,
    /// Bin separation in bandwidth units (frequency-bin model).
    pub delta: f64,
    /// Relative bin phase in radians (frequency-bin model).
    pub theta: f64,
    /// Bin width σ; `None` means `delta / 20`.
    pub bin_width: Option<f64>,
    /// CSV for the tabulated model.
    pub input: Option<PathBuf>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Rect,
            rate: 1.0,
            direction: DecayDirection::DecayOnPhoton1,
            delta: 5.0,
            theta: 0.0,
            bin_width: None,
            input: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridOverrides {
    /// Frequency samples across the model support.
    pub n_freq: Option<usize>,
    /// Half width of the time window, in 1/BW.
    pub t_max: Option<f64>,
    pub n_time: Option<usize>,
}

/// One modulator: `unity`, `linear-phase:T`, `quad-phase:beta` or `mask:FILE`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulatorConfig {
    pub spec: String,
    pub arm: Arm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub format: OutputFormat,
    /// Optional bandwidth in Hz used only to annotate time-like column headers.
    pub bw_hz: Option<f64>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: std::env::var_os(OUT_DIR_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(".")),
            format: OutputFormat::Csv,
            bw_hz: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    pub spectrum: SpectrumConfig,
    /// Models swept by `purity-curve`.
    pub models: Vec<ModelKind>,
    /// Response-time product s = BW·Δt.
    pub s: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub points: usize,
    pub method: PurityMethod,
    pub grid: GridOverrides,
    pub herald: HeraldedArm,
    pub modulators: Vec<ModulatorConfig>,
    pub renormalize: bool,
    /// Number of modes reported by `modes`.
    pub modes: usize,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: CommandKind::PurityCurve,
            spectrum: SpectrumConfig::default(),
            models: vec![ModelKind::Rect, ModelKind::Gaussian],
            s: 1.0,
            s_min: 0.01,
            s_max: 10.0,
            points: 60,
            method: PurityMethod::Autocorr,
            grid: GridOverrides::default(),
            herald: HeraldedArm::Photon1,
            modulators: Vec::new(),
            renormalize: false,
            modes: 10,
            output: OutputConfig::default(),
        }
    }
}
