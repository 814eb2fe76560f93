use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Deserialize;

use wsmf::analysis::{hmin_signals, run_analysis, split_signals};
use wsmf::config::{AnalysisConfig, Formalism};
use wsmf::io::{ingest, read_scaling_table, write_signals, InputFormat};
use wsmf::multiscale::{FieldKind, DEFAULT_BETA, DEFAULT_OMEGA_EXPONENT};
use wsmf::report::{emit_report, spectrum_tsv, to_json};
use wsmf::scaling::ScalingFunction;
use wsmf::spectrum::{default_h_grid, legendre_transform_with_floor, linspace, QRestriction, DEFAULT_FLOOR};
use wsmf::synth::{synthesize, Atom, Model, SynthesisConfig};
use wsmf::wavelet::{Signal, WaveletSpec};
use wsmf::{Error, Result};

#[derive(Parser)]
#[command(name = "wsmf", version, about = "Weak-scaling multifractal analysis of 1-D signals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full analysis: scaling function, spectrum and admissibility per channel.
    Analyze {
        #[command(flatten)]
        common: AnalysisArgs,
        /// Report path; stdout when neither this nor `[output] json` is set.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Directory for one `<label>.tsv` spectrum table per channel.
        #[arg(long)]
        tsv_dir: Option<PathBuf>,
    },
    /// Generate synthetic signals.
    Synth(SynthArgs),
    /// Minimal regularity exponent and admissibility test per channel.
    Hmin {
        #[command(flatten)]
        common: AnalysisArgs,
    },
    /// Sparse/non-sparse coefficient split per channel.
    Split {
        #[command(flatten)]
        common: AnalysisArgs,
    },
    /// Legendre spectrum of a `q, zeta(q)` table.
    Spectrum(SpectrumArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormalismArg {
    Leaders,
    PLeaders,
    ThetaOmega,
}

/// Flags shared by the data-driven subcommands; each overrides its key in `--config`.
#[derive(Args)]
struct AnalysisArgs {
    /// TOML file with [input], [wavelet], [multiscale], [scaling], [spectrum], [sparsity], [output] tables.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input signal file.
    #[arg(long, short)]
    input: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    format: Option<InputFormat>,
    /// 0-based channel indices.
    #[arg(long, value_delimiter = ',')]
    channels: Option<Vec<usize>>,
    #[arg(long)]
    vanishing_moments: Option<usize>,
    #[arg(long, value_enum)]
    formalism: Option<FormalismArg>,
    /// Exponent p of p-leaders.
    #[arg(long)]
    p: Option<f64>,
    /// Depth growth exponent of (theta,omega)-leaders.
    #[arg(long)]
    beta: Option<f64>,
    /// Width growth exponent of (theta,omega)-leaders.
    #[arg(long)]
    omega_exponent: Option<f64>,
    /// Pseudo-fractional integration order s.
    #[arg(long, allow_hyphen_values = true)]
    fractional_order: Option<f64>,
    #[arg(long)]
    j1: Option<i32>,
    #[arg(long)]
    j2: Option<i32>,
    /// Named scale range (`meg`).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    q_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    q_max: Option<f64>,
    #[arg(long)]
    q_count: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    floor: Option<f64>,
    /// Include the sparsity split in `analyze`.
    #[arg(long)]
    sparsity: bool,
    /// Moment order of the sparsity budget.
    #[arg(long)]
    sparsity_q: Option<f64>,
    /// Budget constant C.
    #[arg(long)]
    budget: Option<f64>,
}

impl AnalysisArgs {
    fn config(&self) -> Result<AnalysisConfig> {
        let mut c = match &self.config {
            Some(path) => AnalysisConfig::from_file(path)?,
            None => AnalysisConfig::default(),
        };
        if let Some(v) = &self.input {
            c.input.path = Some(v.clone());
        }
        if let Some(v) = self.format {
            c.input.format = Some(v);
        }
        if let Some(v) = &self.channels {
            c.input.channels = Some(v.clone());
        }
        if let Some(v) = self.vanishing_moments {
            c.wavelet.vanishing_moments = v;
        }
        c.multiscale.formalism = self.formalism(c.multiscale.formalism)?;
        if let Some(v) = self.fractional_order {
            c.multiscale.fractional_order = v;
        }
        if self.j1.is_some() || self.j2.is_some() {
            c.scaling.j1 = self.j1.or(c.scaling.j1);
            c.scaling.j2 = self.j2.or(c.scaling.j2);
        }
        if let Some(v) = &self.preset {
            c.scaling.preset = Some(v.clone());
        }
        if self.q_min.is_some() || self.q_max.is_some() || self.q_count.is_some() {
            c.scaling.q = None;
        }
        c.scaling.q_min = self.q_min.unwrap_or(c.scaling.q_min);
        c.scaling.q_max = self.q_max.unwrap_or(c.scaling.q_max);
        c.scaling.q_count = self.q_count.unwrap_or(c.scaling.q_count);
        c.spectrum.floor = self.floor.unwrap_or(c.spectrum.floor);
        c.sparsity.enabled |= self.sparsity;
        c.sparsity.q = self.sparsity_q.unwrap_or(c.sparsity.q);
        c.sparsity.budget = self.budget.unwrap_or(c.sparsity.budget);
        c.validate()?;
        Ok(c)
    }

    /// Growth parameters given without `--formalism` refine the configured one.
    fn formalism(&self, current: Formalism) -> Result<Formalism> {
        let (beta0, omega0) = match current {
            Formalism::ThetaOmega { beta, omega_exponent } => (beta, omega_exponent),
            _ => (DEFAULT_BETA, DEFAULT_OMEGA_EXPONENT),
        };
        let kind = match (self.formalism, current) {
            (Some(k), _) => k,
            (None, Formalism::Leaders) => FormalismArg::Leaders,
            (None, Formalism::PLeaders { .. }) => FormalismArg::PLeaders,
            (None, Formalism::ThetaOmega { .. }) => FormalismArg::ThetaOmega,
        };
        Ok(match kind {
            FormalismArg::Leaders => Formalism::Leaders,
            FormalismArg::PLeaders => {
                let configured = match current {
                    Formalism::PLeaders { p } => Some(p),
                    _ => None,
                };
                let p = self
                    .p
                    .or(configured)
                    .ok_or_else(|| Error::Config("p-leaders need --p".into()))?;
                Formalism::PLeaders { p }
            }
            FormalismArg::ThetaOmega => Formalism::ThetaOmega {
                beta: self.beta.unwrap_or(beta0),
                omega_exponent: self.omega_exponent.unwrap_or(omega0),
            },
        })
    }

    fn signals(&self, config: &AnalysisConfig) -> Result<Vec<Signal>> {
        let path = config
            .input
            .path
            .as_deref()
            .ok_or_else(|| Error::Config("no input: pass --input or set [input] path".into()))?;
        ingest(path, config.input.format, config.input.channels.as_deref())
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Fbm,
    Fgn,
    Mrw,
    Lacunary,
    Rws,
}

/// `[model]` table plus `n` and `seed`, as in a synthesis config file.
#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct SynthFile {
    model: Option<Model>,
    n: Option<usize>,
    seed: Option<u64>,
    vanishing_moments: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    /// TOML file with `n`, `seed` and a `[model]` table tagged by `type`.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    #[arg(long)]
    hurst: Option<f64>,
    /// Regularity of fGn (in (-1, 0)) or of the lacunary atom.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// Intermittency of MRW.
    #[arg(long)]
    lambda: Option<f64>,
    /// Density exponent of the lacunary atom.
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<f64>,
    /// RWS atom `alpha:eta`; repeat for several atoms.
    #[arg(long = "atom", value_parser = parse_atom, allow_hyphen_values = true)]
    atoms: Vec<Atom>,
    /// RWS uniform bound A; defaults to the smallest atom exponent.
    #[arg(long, allow_hyphen_values = true)]
    uniform_bound: Option<f64>,
    #[arg(long, short)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of independent realizations, seeded `seed, seed+1, ...`, one channel each.
    #[arg(long, default_value_t = 1)]
    realizations: u64,
    /// Wavelet used to reconstruct RWS signals.
    #[arg(long)]
    vanishing_moments: Option<usize>,
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long, value_parser = parse_format)]
    format: Option<InputFormat>,
}

impl SynthArgs {
    fn model(&self, from_file: Option<Model>) -> Result<Model> {
        let need =
            |v: Option<f64>, name: &str| v.ok_or_else(|| Error::Config(format!("--{name} is required for this model")));
        let Some(kind) = self.model else {
            return from_file.ok_or_else(|| Error::Config("no model: pass --model or set [model] in --config".into()));
        };
        Ok(match kind {
            ModelArg::Fbm => Model::Fbm {
                hurst: need(self.hurst, "hurst")?,
            },
            ModelArg::Fgn => Model::Fgn {
                alpha: need(self.alpha, "alpha")?,
            },
            ModelArg::Mrw => Model::Mrw {
                hurst: need(self.hurst, "hurst")?,
                lambda: need(self.lambda, "lambda")?,
            },
            ModelArg::Lacunary => Model::Lacunary {
                alpha: need(self.alpha, "alpha")?,
                eta: need(self.eta, "eta")?,
            },
            ModelArg::Rws => {
                if self.atoms.is_empty() {
                    return Err(Error::Config("--atom is required for rws".into()));
                }
                let smallest = self.atoms.iter().map(|a| a.alpha).fold(f64::INFINITY, f64::min);
                Model::Rws {
                    atoms: self.atoms.clone(),
                    uniform_bound: self.uniform_bound.unwrap_or(smallest),
                }
            }
        })
    }
}

#[derive(Args)]
struct SpectrumArgs {
    /// Two-column `q, zeta(q)` table (comma or tab separated, optional header).
    #[arg(long, short)]
    input: PathBuf,
    /// Use only q > 0, as required for raw wavelet coefficients.
    #[arg(long)]
    positive_only: bool,
    #[arg(long, allow_hyphen_values = true)]
    h_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    h_max: Option<f64>,
    #[arg(long, default_value_t = wsmf::spectrum::DEFAULT_H_POINTS)]
    h_count: usize,
    #[arg(long, allow_hyphen_values = true, default_value_t = DEFAULT_FLOOR)]
    floor: f64,
    /// TSV output; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn parse_format(s: &str) -> std::result::Result<InputFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_atom(s: &str) -> std::result::Result<Atom, String> {
    let (a, e) = s.split_once(':').ok_or("expected alpha:eta")?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("'{v}': {e}"));
    Ok(Atom {
        alpha: num(a)?,
        eta: num(e)?,
    })
}

fn write_stdout(text: &str) -> Result<()> {
    std::io::stdout().write_all(text.as_bytes()).map_err(|e| Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    })
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => write_stdout(text),
    }
}

fn analyze(common: &AnalysisArgs, json: Option<PathBuf>, tsv_dir: Option<PathBuf>) -> Result<()> {
    let mut config = common.config()?;
    if json.is_some() {
        config.output.json = json;
    }
    if tsv_dir.is_some() {
        config.output.tsv_dir = tsv_dir;
    }
    let report = run_analysis(&config)?;
    for ch in &report.channels {
        info!(
            "{}: scales {:?}, mode H = {:.4}",
            ch.label, ch.scales, ch.spectrum.mode_h
        );
    }
    emit_report(&report, config.output.json.as_deref(), config.output.tsv_dir.as_deref())?;
    if config.output.json.is_none() {
        write_stdout(&report.to_json()?)?;
    }
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<()> {
    let file: SynthFile = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?
        }
        None => SynthFile::default(),
    };
    let model = args.model(file.model)?;
    let n = args.n.or(file.n).unwrap_or(1 << 16);
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let spec = match args.vanishing_moments.or(file.vanishing_moments) {
        Some(r) => WaveletSpec::daubechies(r)?,
        None => WaveletSpec::default(),
    };
    if args.realizations == 0 {
        return Err(Error::Config("--realizations must be at least 1".into()));
    }
    let signals = (0..args.realizations)
        .map(|i| {
            let config = SynthesisConfig::new(model.clone(), n, seed + i);
            let signal = synthesize(&config, &spec)?;
            Signal::new(format!("seed{}", seed + i), signal.into_samples())
        })
        .collect::<Result<Vec<_>>>()?;
    let format = args.format.unwrap_or_else(|| InputFormat::from_path(&args.output));
    write_signals(&args.output, format, &signals)?;
    info!("wrote {} x {n} samples to {}", signals.len(), args.output.display());
    Ok(())
}

fn spectrum(args: &SpectrumArgs) -> Result<()> {
    let (q, zeta) = read_scaling_table(&args.input)?;
    let (kind, restriction) = if args.positive_only {
        (FieldKind::Coefficients, QRestriction::PositiveOnly)
    } else {
        (FieldKind::Leaders, QRestriction::AllQ)
    };
    let table = ScalingFunction::from_table(kind, &q, &zeta)?;
    let h = match (args.h_min, args.h_max) {
        (None, None) => default_h_grid(&table),
        (Some(lo), Some(hi)) if hi > lo && args.h_count >= 2 => linspace(lo, hi, args.h_count),
        _ => {
            return Err(Error::Config(
                "H grid needs --h-min < --h-max and --h-count >= 2".into(),
            ))
        }
    };
    let spectrum = legendre_transform_with_floor(&table, &h, restriction, args.floor)?;
    info!("mode H = {:.4}", spectrum.mode_h);
    write_text(args.output.as_deref(), &spectrum_tsv(&spectrum.h, &spectrum.d))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze { common, json, tsv_dir } => analyze(&common, json, tsv_dir),
        Command::Synth(args) => synth(&args),
        Command::Hmin { common } => {
            let config = common.config()?;
            let rows = hmin_signals(&common.signals(&config)?, &config)?;
            write_stdout(&to_json(&rows)?)
        }
        Command::Split { common } => {
            let config = common.config()?;
            let rows = split_signals(&common.signals(&config)?, &config)?;
            write_stdout(&to_json(&rows)?)
        }
        Command::Spectrum(args) => spectrum(&args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
