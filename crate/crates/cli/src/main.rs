use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use heralded_cli::config::{
    CommandKind, GridOverrides, ModelKind, ModulatorConfig, OutputConfig, OutputFormat, PurityMethod, RunConfig,
    SpectrumConfig,
};
use heralded_cli::run::{execute, replay, CliError, Outcome};
use heralded_core::{Arm, DecayDirection, HeraldedArm};

#[derive(Parser, Debug)]
#[command(
    name = "heralded",
    version,
    about = "Purity and wave packets of heralded single photons"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Purity versus s = BW·Δt for one or more models.
    PurityCurve {
        #[arg(long, value_delimiter = ',', default_value = "rect,gaussian")]
        models: Vec<ModelKind>,
        #[arg(long, default_value_t = 0.01)]
        s_min: f64,
        #[arg(long, default_value_t = 10.0)]
        s_max: f64,
        #[arg(long, default_value_t = 60)]
        points: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Purity of one model at one value of s.
    Purity {
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        #[arg(long, value_enum, default_value_t = PurityMethod::Autocorr)]
        method: PurityMethod,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Heralded density matrix plus trace, purity and eigenvalue range.
    Density {
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Heralded temporal wave packet.
    Waveform {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        time: TimeArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Wave packet after spectral modulators, with efficiency and fidelity.
    Modulate {
        /// Modulator, repeatable: unity | linear-phase:T | quad-phase:beta | mask:FILE.
        #[arg(long = "mod", required = true)]
        modulators: Vec<String>,
        /// Arm for each --mod, in order; the last value repeats.
        #[arg(long = "arm", value_enum)]
        arms: Vec<ArmArg>,
        #[arg(long)]
        renormalize: bool,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        time: TimeArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Leading spectral modes of the heralded state.
    Modes {
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        #[arg(short = 'k', long = "modes", default_value_t = 10)]
        modes: usize,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Re-runs the configuration stored in a manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory; defaults to the one recorded in the manifest.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[arg(long, value_enum, default_value_t = ModelKind::Rect)]
    model: ModelKind,
    /// CSV `x,re[,im]` for the tabulated model.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 5.0)]
    delta: f64,
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    #[arg(long)]
    bin_width: Option<f64>,
    #[arg(long, value_enum, default_value_t = DirectionArg::Photon1)]
    decay: DirectionArg,
}

#[derive(Args, Debug)]
struct TimeArgs {
    #[arg(long, value_enum, default_value_t = ArmChoice::Photon1)]
    herald: ArmChoice,
    /// Half width of the time window, in 1/BW.
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    n_time: Option<usize>,
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    /// Frequency grid points.
    #[arg(long)]
    n_freq: Option<usize>,
    /// Output directory (default: $HERALDED_OUT_DIR or the current directory).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    /// Bandwidth in Hz, used only to annotate time-like column headers.
    #[arg(long)]
    bw_hz: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ArmArg {
    Trigger,
    Signal,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ArmChoice {
    Photon1,
    Photon2,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DirectionArg {
    Photon1,
    Photon2,
}

impl ModelArgs {
    fn into_config(self, rate: f64) -> SpectrumConfig {
        SpectrumConfig {
            model: self.model,
            rate,
            direction: match self.decay {
                DirectionArg::Photon1 => DecayDirection::DecayOnPhoton1,
                DirectionArg::Photon2 => DecayDirection::DecayOnPhoton2,
            },
            delta: self.delta,
            theta: self.theta,
            bin_width: self.bin_width,
            input: self.input,
        }
    }
}

impl TimeArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        cfg.herald = match self.herald {
            ArmChoice::Photon1 => HeraldedArm::Photon1,
            ArmChoice::Photon2 => HeraldedArm::Photon2,
        };
        cfg.grid.t_max = self.t_max;
        cfg.grid.n_time = self.n_time;
    }
}

impl Common {
    fn apply(self, cfg: &mut RunConfig) {
        cfg.spectrum.rate = self.rate;
        cfg.grid = GridOverrides {
            n_freq: self.n_freq,
            ..cfg.grid.clone()
        };
        let default = OutputConfig::default();
        cfg.output = OutputConfig {
            dir: self.out.unwrap_or(default.dir),
            format: self.format,
            bw_hz: self.bw_hz,
        };
    }
}

fn build_config(command: Command) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    let common = match command {
        Command::PurityCurve {
            models,
            s_min,
            s_max,
            points,
            common,
        } => {
            cfg.command = CommandKind::PurityCurve;
            cfg.models = models;
            cfg.s_min = s_min;
            cfg.s_max = s_max;
            cfg.points = points;
            common
        }
        Command::Purity {
            s,
            method,
            model,
            common,
        } => {
            cfg.command = CommandKind::Purity;
            cfg.s = s;
            cfg.method = method;
            cfg.spectrum = model.into_config(common.rate);
            common
        }
        Command::Density { s, model, common } => {
            cfg.command = CommandKind::Density;
            cfg.s = s;
            cfg.spectrum = model.into_config(common.rate);
            common
        }
        Command::Waveform { model, time, common } => {
            cfg.command = CommandKind::Waveform;
            cfg.spectrum = model.into_config(common.rate);
            time.apply(&mut cfg);
            common
        }
        Command::Modulate {
            modulators,
            arms,
            renormalize,
            model,
            time,
            common,
        } => {
            if arms.len() > modulators.len() {
                return Err(CliError::Usage(format!(
                    "{} --arm values for {} --mod values",
                    arms.len(),
                    modulators.len()
                )));
            }
            cfg.command = CommandKind::Modulate;
            cfg.spectrum = model.into_config(common.rate);
            cfg.modulators = modulators
                .into_iter()
                .enumerate()
                .map(|(i, spec)| {
                    let arm = match arms.get(i).or(arms.last()) {
                        Some(ArmArg::Trigger) => Arm::Trigger,
                        Some(ArmArg::Signal) | None => Arm::Signal,
                    };
                    ModulatorConfig { spec, arm }
                })
                .collect();
            cfg.renormalize = renormalize;
            time.apply(&mut cfg);
            common
        }
        Command::Modes {
            s,
            modes,
            model,
            common,
        } => {
            cfg.command = CommandKind::Modes;
            cfg.s = s;
            cfg.modes = modes;
            cfg.spectrum = model.into_config(common.rate);
            common
        }
        Command::Replay { .. } => unreachable!("replay is handled before config building"),
    };
    common.apply(&mut cfg);
    Ok(cfg)
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Replay { manifest, out } => replay(&manifest, out),
        command => execute(&build_config(command)?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(outcome) => {
            for line in outcome.stdout {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {message}", e.kind());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
