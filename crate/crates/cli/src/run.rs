use std::fmt;
use std::path::{Path, PathBuf};

use heralded_core::heralding::ACCURACY_LIMIT_S;
use heralded_core::io::{fmt_float, write_atomic};
use heralded_core::{
    apply_modulator, beat_note_analysis, default_time_grid, density_matrix, herald_waveform, make_frequency_bin,
    make_gaussian, make_lorentzian, make_rectangular, mode_decomposition, purity_autocorr, purity_curve, purity_direct,
    purity_from_matrix, read_tabulated_csv, waveform_fidelity, Grid, GridSpec, JointSpectrum, SpectralModulator,
    TimeGrid,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{CommandKind, ModelKind, ModulatorConfig, OutputFormat, PurityMethod, RunConfig, SpectrumConfig};

pub const TOOL_NAME: &str = "heralded";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug)]
pub enum CliError {
    Core(heralded_core::Error),
    Usage(String),
    /// A requested value lies outside the validated numerical range.
    AccuracyGuard(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Usage(_) => "usage",
            CliError::AccuracyGuard(_) => "accuracy-guard",
        }
    }

    /// 2 for bad input, 3 for numerical guards, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::AccuracyGuard(_) => 3,
            CliError::Core(e) if e.is_accuracy_guard() => 3,
            CliError::Core(heralded_core::Error::Io(_)) => 1,
            CliError::Core(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) | CliError::AccuracyGuard(m) => f.write_str(m),
        }
    }
}

impl From<heralded_core::Error> for CliError {
    fn from(e: heralded_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Everything needed to replay a run, plus its headline results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub frequency_grids: Vec<NamedGrid>,
    pub time_grid: Option<GridSpec>,
    pub outputs: Vec<String>,
    pub results: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedGrid {
    pub model: String,
    pub grid: GridSpec,
}

/// Result of a run: stdout lines and the manifest that was written.
#[derive(Debug)]
pub struct Outcome {
    pub stdout: Vec<String>,
    pub manifest: Manifest,
}

struct Writer<'a> {
    dir: &'a Path,
    outputs: Vec<String>,
}

impl Writer<'_> {
    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        write_atomic(&self.dir.join(name), contents.as_bytes())?;
        self.outputs.push(name.to_string());
        Ok(())
    }
}

pub fn build_spectrum(cfg: &SpectrumConfig, model: ModelKind, n_freq: Option<usize>) -> Result<JointSpectrum> {
    let spec = match model {
        ModelKind::Rect => make_rectangular(cfg.rate)?,
        ModelKind::Gaussian => make_gaussian(cfg.rate)?,
        ModelKind::Lorentzian => make_lorentzian(cfg.rate, cfg.direction)?,
        ModelKind::FreqBin => make_frequency_bin(cfg.delta, cfg.theta, cfg.bin_width, cfg.rate)?,
        ModelKind::Tabulated => {
            let path = cfg
                .input
                .as_ref()
                .ok_or_else(|| CliError::Usage("the tabulated model needs --input FILE".into()))?;
            read_tabulated_csv(path, cfg.rate)?
        }
    };
    match n_freq {
        Some(n) => Ok(spec.with_resolution(n)?),
        None => Ok(spec),
    }
}

pub fn parse_modulator(m: &ModulatorConfig) -> Result<SpectralModulator> {
    let (kind, arg) = m.spec.split_once(':').unwrap_or((m.spec.as_str(), ""));
    let number = |what: &str| -> Result<f64> {
        arg.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("modulator `{}`: {what} must be a number", m.spec)))
    };
    Ok(match kind {
        "unity" => SpectralModulator::unity(m.arm),
        "linear-phase" => SpectralModulator::linear_phase(number("delay")?, m.arm)?,
        "quad-phase" => SpectralModulator::quadratic_phase(number("beta")?, m.arm)?,
        "mask" if !arg.is_empty() => SpectralModulator::from_csv(Path::new(arg), m.arm)?,
        _ => {
            return Err(CliError::Usage(format!(
                "unknown modulator `{}` (expected unity | linear-phase:T | quad-phase:beta | mask:FILE)",
                m.spec
            )))
        }
    })
}

fn time_grid(cfg: &RunConfig, spec: &JointSpectrum) -> Result<TimeGrid> {
    let default = default_time_grid(spec)?;
    let half = cfg.grid.t_max.unwrap_or(default.max());
    let n = cfg.grid.n_time.unwrap_or(default.len());
    Ok(TimeGrid::symmetric(half, n)?)
}

fn guard_s(s: f64) -> Result<()> {
    if s > ACCURACY_LIMIT_S {
        return Err(CliError::AccuracyGuard(format!(
            "s = {s} exceeds the validated range s <= {ACCURACY_LIMIT_S}"
        )));
    }
    Ok(())
}

fn time_header(base: &str, cfg: &RunConfig) -> String {
    match cfg.output.bw_hz {
        Some(bw) => format!("{base}[x{}s]", fmt_float(1.0 / bw)),
        None => base.to_string(),
    }
}

fn f6(v: f64) -> String {
    format!("{v:.6}")
}

/// Executes a run, writing outputs and `manifest.json` into the output directory.
pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    if let Some(bw) = cfg.output.bw_hz {
        if !(bw.is_finite() && bw > 0.0) {
            return Err(CliError::Usage(format!("--bw-hz must be positive, got {bw}")));
        }
    }
    let dir = cfg.output.dir.clone();
    let mut writer = Writer {
        dir: &dir,
        outputs: Vec::new(),
    };
    let mut stdout = Vec::new();
    let mut frequency_grids = Vec::new();
    let mut tgrid = None;
    let results;

    match cfg.command {
        CommandKind::PurityCurve => {
            if cfg.models.is_empty() {
                return Err(CliError::Usage("--models needs at least one model".into()));
            }
            if !(cfg.s_min >= 0.0 && cfg.s_min < cfg.s_max) {
                return Err(CliError::Usage(format!(
                    "s range must satisfy 0 <= s-min < s-max, got [{}, {}]",
                    cfg.s_min, cfg.s_max
                )));
            }
            if cfg.points < 2 {
                return Err(CliError::Usage("--points must be at least 2".into()));
            }
            guard_s(cfg.s_max)?;
            let spectra = cfg
                .models
                .iter()
                .map(|&m| build_spectrum(&cfg.spectrum, m, cfg.grid.n_freq))
                .collect::<Result<Vec<_>>>()?;
            for spec in &spectra {
                frequency_grids.push(NamedGrid {
                    model: spec.label().into(),
                    grid: spec.grid().spec(),
                });
            }
            let curve = purity_curve(&spectra, cfg.s_min, cfg.s_max, cfg.points)?;
            match cfg.output.format {
                OutputFormat::Csv => {
                    let header = time_header("s", cfg);
                    for (i, series) in curve.series.iter().enumerate() {
                        writer.write(&format!("purity_{}.csv", series.model), &curve.series_csv(i, &header))?;
                    }
                }
                OutputFormat::Json => writer.write("purity_curve.json", &serde_json::to_string_pretty(&curve)?)?,
            }
            for out in &writer.outputs {
                stdout.push(format!("wrote {}", dir.join(out).display()));
            }
            results = json!({ "models": curve.series.iter().map(|s| s.model.clone()).collect::<Vec<_>>() });
        }

        CommandKind::Purity => {
            guard_s(cfg.s)?;
            let spec = build_spectrum(&cfg.spectrum, cfg.spectrum.model, cfg.grid.n_freq)?;
            frequency_grids.push(NamedGrid {
                model: spec.label().into(),
                grid: spec.grid().spec(),
            });
            let gamma = match cfg.method {
                PurityMethod::Autocorr => purity_autocorr(&spec, cfg.s)?,
                PurityMethod::Direct => purity_direct(&spec, cfg.s)?,
                PurityMethod::Matrix => purity_from_matrix(&density_matrix(&spec, cfg.s)?)?,
            };
            stdout.push(f6(gamma));
            results = json!({ "purity": gamma });
        }

        CommandKind::Density => {
            guard_s(cfg.s)?;
            let spec = build_spectrum(&cfg.spectrum, cfg.spectrum.model, cfg.grid.n_freq)?;
            frequency_grids.push(NamedGrid {
                model: spec.label().into(),
                grid: spec.grid().spec(),
            });
            let rho = density_matrix(&spec, cfg.s)?;
            match cfg.output.format {
                OutputFormat::Csv => writer.write("density.csv", &rho.to_csv())?,
                OutputFormat::Json => writer.write("density.json", &serde_json::to_string(&rho.to_export())?)?,
            }
            let trace = rho.trace();
            let gamma = purity_from_matrix(&rho)?;
            let eig = rho.eigenvalues()?;
            let (leading, smallest) = (eig[0], eig[eig.len() - 1]);
            stdout.push(format!("trace={}", f6(trace)));
            stdout.push(format!("purity={}", f6(gamma)));
            stdout.push(format!("leading_eigenvalue={}", fmt_float(leading)));
            stdout.push(format!("min_eigenvalue={}", fmt_float(smallest)));
            stdout.push(format!("rank_one={}", leading > 1.0 - 1e-6));
            results = json!({
                "trace": trace,
                "purity": gamma,
                "leading_eigenvalue": leading,
                "min_eigenvalue": smallest,
                "hermiticity_defect": rho.hermiticity_defect(),
            });
        }

        CommandKind::Waveform | CommandKind::Modulate => {
            let spec = build_spectrum(&cfg.spectrum, cfg.spectrum.model, cfg.grid.n_freq)?;
            frequency_grids.push(NamedGrid {
                model: spec.label().into(),
                grid: spec.grid().spec(),
            });
            let tg = time_grid(cfg, &spec)?;
            tgrid = Some(tg.spec());
            let reference = herald_waveform(&spec, cfg.herald, &tg)?;

            let mut info = serde_json::Map::new();
            let wf = if cfg.command == CommandKind::Modulate {
                if cfg.modulators.is_empty() {
                    return Err(CliError::Usage("modulate needs at least one --mod".into()));
                }
                let mut modulated = spec.clone();
                let mut efficiency = 1.0;
                for m in &cfg.modulators {
                    let (next, eta) = apply_modulator(&modulated, &parse_modulator(m)?)?;
                    modulated = next;
                    efficiency *= eta;
                }
                let mut wf = herald_waveform(&modulated, cfg.herald, &tg)?;
                if cfg.renormalize {
                    wf = wf.renormalized()?;
                }
                let fidelity = waveform_fidelity(&wf, &reference)?;
                stdout.push(format!("efficiency={}", fmt_float(efficiency)));
                stdout.push(format!("fidelity_to_unmodulated={}", f6(fidelity)));
                info.insert("efficiency".into(), json!(efficiency));
                info.insert("fidelity_to_unmodulated".into(), json!(fidelity));
                wf
            } else {
                reference
            };

            let arm = match cfg.herald {
                heralded_core::HeraldedArm::Photon1 => "photon1",
                heralded_core::HeraldedArm::Photon2 => "photon2",
            };
            let stem = if cfg.command == CommandKind::Modulate {
                format!("waveform_{arm}_modulated")
            } else {
                format!("waveform_{arm}")
            };
            match cfg.output.format {
                OutputFormat::Csv => writer.write(&format!("{stem}.csv"), &wf.to_csv(&time_header("u", cfg)))?,
                OutputFormat::Json => {
                    writer.write(&format!("{stem}.json"), &serde_json::to_string(&wf.to_export())?)?
                }
            }
            stdout.push(format!("norm={}", f6(wf.norm())));
            stdout.push(format!("windowed_energy={}", f6(wf.windowed_energy())));
            info.insert("norm".into(), json!(wf.norm()));
            info.insert("windowed_energy".into(), json!(wf.windowed_energy()));
            info.insert("carrier".into(), json!(wf.carrier()));
            if cfg.spectrum.model == ModelKind::FreqBin {
                match beat_note_analysis(&wf) {
                    Ok(beat) => {
                        stdout.push(format!("beat_period={}", f6(beat.period)));
                        stdout.push(format!("visibility={}", f6(beat.visibility)));
                        info.insert("beat_period".into(), json!(beat.period));
                        info.insert("visibility".into(), json!(beat.visibility));
                    }
                    Err(heralded_core::Error::NoOscillation) => stdout.push("beat=none".into()),
                    Err(e) => return Err(e.into()),
                }
            }
            results = Value::Object(info);
        }

        CommandKind::Modes => {
            guard_s(cfg.s)?;
            let spec = build_spectrum(&cfg.spectrum, cfg.spectrum.model, cfg.grid.n_freq)?;
            frequency_grids.push(NamedGrid {
                model: spec.label().into(),
                grid: spec.grid().spec(),
            });
            let rho = density_matrix(&spec, cfg.s)?;
            let k = cfg.modes.clamp(1, rho.dim());
            let dec = mode_decomposition(&rho, k)?;

            let mut eig_csv = String::from("index,eigenvalue\n");
            for (i, l) in dec.eigenvalues.iter().enumerate() {
                eig_csv.push_str(&format!("{},{}\n", i + 1, fmt_float(*l)));
            }
            let mut modes_csv = String::from("x");
            for i in 1..=k {
                modes_csv.push_str(&format!(",re_{i},im_{i}"));
            }
            modes_csv.push('\n');
            for (row, x) in rho.grid().points().iter().enumerate() {
                modes_csv.push_str(&fmt_float(*x));
                for mode in &dec.modes {
                    modes_csv.push(',');
                    modes_csv.push_str(&fmt_float(mode[row].re));
                    modes_csv.push(',');
                    modes_csv.push_str(&fmt_float(mode[row].im));
                }
                modes_csv.push('\n');
            }
            match cfg.output.format {
                OutputFormat::Csv => {
                    writer.write("modes_eigenvalues.csv", &eig_csv)?;
                    writer.write("modes.csv", &modes_csv)?;
                }
                OutputFormat::Json => writer.write(
                    "modes.json",
                    &serde_json::to_string(&json!({
                        "eigenvalues": dec.eigenvalues,
                        "grid": rho.grid().spec(),
                        "modes_re": dec.modes.iter().map(|m| m.iter().map(|v| v.re).collect::<Vec<_>>()).collect::<Vec<_>>(),
                        "modes_im": dec.modes.iter().map(|m| m.iter().map(|v| v.im).collect::<Vec<_>>()).collect::<Vec<_>>(),
                    }))?,
                )?,
            }
            stdout.push(format!("purity={}", f6(dec.purity)));
            stdout.push(format!("effective_modes={}", f6(dec.effective_mode_number())));
            stdout.push(format!("eigenvalue_sum={}", f6(dec.total)));
            for (i, l) in dec.eigenvalues.iter().enumerate() {
                stdout.push(format!("lambda_{}={}", i + 1, fmt_float(*l)));
            }
            results = json!({
                "purity": dec.purity,
                "effective_modes": dec.effective_mode_number(),
                "eigenvalue_sum": dec.total,
                "eigenvalues": dec.eigenvalues,
            });
        }
    }

    let manifest = Manifest {
        tool: TOOL_NAME.into(),
        version: TOOL_VERSION.into(),
        config: cfg.clone(),
        frequency_grids,
        time_grid: tgrid,
        outputs: writer.outputs.clone(),
        results,
    };
    writer.write(MANIFEST_FILE, &serde_json::to_string_pretty(&manifest)?)?;
    Ok(Outcome { stdout, manifest })
}

/// Loads a manifest and re-runs its configuration, optionally into another directory.
pub fn replay(manifest_path: &Path, out: Option<PathBuf>) -> Result<Outcome> {
    let text = std::fs::read_to_string(manifest_path).map_err(heralded_core::Error::from)?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    let mut cfg = manifest.config;
    if let Some(dir) = out {
        cfg.output.dir = dir;
    }
    execute(&cfg)
}
