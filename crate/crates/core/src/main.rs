use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};

use revgas::config::{parse_config, IntegratorVisitor, SimConfig};
use revgas::dynamics::{Arithmetic, Integrator};
use revgas::experiments::{
    fit_divergence_growth, run_free_expansion, run_loschmidt, run_recurrence, run_twin_divergence,
    run_two_vessel_sync, saturation_window, ExperimentSeries, LoschmidtProtocol, RecurrenceProtocol, Setup,
    SyncProtocol, DEFAULT_SATURATION,
};
use revgas::output::{emit_series, Headline, RunSummary};
use revgas::perturb::{CouplingSpec, PerturbationSpec};
use revgas::SimError;

const EXIT_USAGE: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

/// Reversible soft-disk gas experiments.
///
/// Exit codes: 0 success, 2 usage, 3 configuration, 4 runtime or output.
#[derive(Parser, Debug)]
#[command(name = "revgas", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Free expansion from the compact initial region.
    Expand {
        #[command(flatten)]
        common: Common,
    },
    /// Forward run, velocity reversal, optional kick, return leg.
    Loschmidt {
        #[command(flatten)]
        common: Common,
        /// Defaults to the configured step count.
        #[arg(long)]
        reversal_step: Option<u64>,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        /// Defaults to the reversal step.
        #[arg(long)]
        kick_step: Option<u64>,
    },
    /// Two vessels, B prepared and reversed, joined by weak springs.
    Sync {
        #[command(flatten)]
        common: Common,
        /// Configuration of vessel B; defaults to vessel A's.
        #[arg(long, value_name = "PATH")]
        config_b: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        /// Defaults to vessel B's configured step count.
        #[arg(long)]
        prep_steps: Option<u64>,
    },
    /// Search for a return to the initial phase point (N <= 3).
    Recurrence {
        #[command(flatten)]
        common: Common,
        /// Defaults to the configured step count.
        #[arg(long)]
        max_steps: Option<u64>,
    },
    /// Twin divergence after a kick, classified as linear or exponential.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1e-8)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        kick_step: u64,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Config(String),
    Runtime { stage: &'static str, message: String },
}

impl Failure {
    fn runtime(stage: &'static str) -> impl FnOnce(SimError) -> Failure {
        move |e| Failure::Runtime {
            stage,
            message: e.to_string(),
        }
    }

    fn report(&self) -> (u8, String) {
        let (code, stage, message) = match self {
            Failure::Usage(m) => (EXIT_USAGE, "usage", m.as_str()),
            Failure::Config(m) => (EXIT_CONFIG, "config", m.as_str()),
            Failure::Runtime { stage, message } => (EXIT_RUNTIME, *stage, message.as_str()),
        };
        (code, format!("error stage={stage}: {}", one_line(message)))
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

struct Report {
    protocol: &'static str,
    headline: Headline,
    series: Vec<(&'static str, ExperimentSeries)>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            _ => {
                let text = e.to_string();
                let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
                eprintln!("{}", Failure::Usage(first.to_string()).report().1);
                eprintln!("{}", Cli::command().render_usage());
                return ExitCode::from(EXIT_USAGE);
            }
        },
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, line) = f.report();
            eprintln!("{line}");
            ExitCode::from(code)
        }
    }
}

fn load(path: &Path, seed: Option<u64>) -> Result<SimConfig, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("--config {}: {e}", path.display())))?;
    let mut config = parse_config(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    if let Some(s) = seed {
        config.seed = s;
    }
    Ok(config)
}

fn run(command: Command) -> Result<(), Failure> {
    let (common, report) = match command {
        Command::Expand { common } => {
            let config = load(&common.config, common.seed)?;
            (common, dispatch(&config, Job::Expand)?)
        }
        Command::Loschmidt {
            common,
            reversal_step,
            epsilon,
            kick_step,
        } => {
            let config = load(&common.config, common.seed)?;
            let reversal = reversal_step.unwrap_or(config.steps);
            let kick = kick_step.unwrap_or(reversal);
            if !(epsilon >= 0.0 && epsilon.is_finite()) {
                return Err(Failure::Usage(format!("--epsilon must be finite and >= 0, got {epsilon}")));
            }
            let perturbation = if epsilon > 0.0 {
                PerturbationSpec::all(epsilon, kick, config.seed)
            } else {
                PerturbationSpec::none()
            };
            let protocol = LoschmidtProtocol::new(reversal, perturbation);
            (common, dispatch(&config, Job::Loschmidt(protocol))?)
        }
        Command::Sync {
            common,
            config_b,
            lambda,
            prep_steps,
        } => {
            let config_a = load(&common.config, common.seed)?;
            let config_b = match &config_b {
                Some(path) => load(path, None)?,
                None => config_a.clone(),
            };
            if config_a.mode != config_b.mode {
                return Err(Failure::Config(format!(
                    "mode: vessels disagree ({:?} vs {:?})",
                    config_a.mode, config_b.mode
                )));
            }
            let coupling = CouplingSpec::new(lambda, 0..config_a.steps)
                .map_err(|e| Failure::Usage(format!("--lambda: {e}")))?;
            let protocol = SyncProtocol::new(prep_steps.unwrap_or(config_b.steps), coupling);
            (common, sync(&config_a, &config_b, &protocol)?)
        }
        Command::Recurrence { common, max_steps } => {
            let config = load(&common.config, common.seed)?;
            let protocol = RecurrenceProtocol::new(max_steps.unwrap_or(config.steps));
            (common, dispatch(&config, Job::Recurrence(protocol))?)
        }
        Command::Fit {
            common,
            epsilon,
            kick_step,
        } => {
            let config = load(&common.config, common.seed)?;
            if !(epsilon > 0.0 && epsilon.is_finite()) {
                return Err(Failure::Usage(format!("--epsilon must be finite and > 0, got {epsilon}")));
            }
            let kick = PerturbationSpec::all(epsilon, kick_step, config.seed);
            (common, dispatch(&config, Job::Fit(kick))?)
        }
    };
    write(&common.out, &report)
}

fn write(out: &Path, report: &Report) -> Result<(), Failure> {
    let io = |path: &Path| {
        let shown = path.display().to_string();
        move |e: std::io::Error| Failure::Runtime {
            stage: "output",
            message: format!("{shown}: {e}"),
        }
    };
    fs::create_dir_all(out).map_err(io(out))?;
    let mut names = Vec::with_capacity(report.series.len());
    for (name, series) in &report.series {
        let path = out.join(name);
        emit_series(series, &path).map_err(io(&path))?;
        names.push(name.to_string());
    }
    let first = &report.series[0].1;
    let summary = RunSummary {
        protocol: report.protocol.to_string(),
        config_digest: first.config_digest.clone(),
        seed: first.seed,
        headline: report.headline.clone(),
        series: names,
    };
    let path = out.join("summary.json");
    summary.write(&path).map_err(io(&path))
}

enum Job {
    Expand,
    Loschmidt(LoschmidtProtocol),
    Recurrence(RecurrenceProtocol),
    Fit(PerturbationSpec),
}

struct Visit<'a> {
    config: &'a SimConfig,
    job: Job,
}

fn dispatch(config: &SimConfig, job: Job) -> Result<Report, Failure> {
    config.dispatch(Visit { config, job }).map_err(Failure::runtime("setup"))?
}

impl IntegratorVisitor for Visit<'_> {
    type Output = Result<Report, Failure>;

    fn visit<I: Integrator>(self, integ: &I) -> Self::Output {
        let setup = Setup::from_config(self.config, integ).map_err(Failure::runtime("setup"))?;
        match self.job {
            Job::Expand => {
                let series = run_free_expansion(&setup).map_err(Failure::runtime("expand"))?;
                Ok(Report {
                    protocol: "expand",
                    headline: Headline::from_last(&series),
                    series: vec![("series.csv", series)],
                })
            }
            Job::Loschmidt(protocol) => {
                let outcome = run_loschmidt(&setup, &protocol).map_err(Failure::runtime("loschmidt"))?;
                let headline = Headline {
                    pre_reversal_plateau: Some(outcome.pre_reversal_plateau),
                    ..Headline::from_last(&outcome.series)
                };
                Ok(Report {
                    protocol: "loschmidt",
                    headline,
                    series: vec![("series.csv", outcome.series)],
                })
            }
            Job::Recurrence(protocol) => {
                let outcome = run_recurrence(&setup, &protocol).map_err(Failure::runtime("recurrence"))?;
                let headline = Headline {
                    recurrence_step: outcome.recurrence_step,
                    ..Headline::from_last(&outcome.series)
                };
                Ok(Report {
                    protocol: "recurrence",
                    headline,
                    series: vec![("series.csv", outcome.series)],
                })
            }
            Job::Fit(kick) => {
                let twin = run_twin_divergence(&setup, &kick).map_err(Failure::runtime("fit"))?;
                let window = saturation_window(&twin.series, kick.kick_step, DEFAULT_SATURATION);
                let fit = fit_divergence_growth(&twin.series, window).map_err(Failure::runtime("fit"))?;
                let headline = Headline {
                    growth_model: Some(fit.model),
                    growth_rate: Some(fit.rate),
                    r2_linear: Some(fit.r2_linear),
                    r2_exponential: Some(fit.r2_exponential),
                    ..Headline::from_last(&twin.series)
                };
                Ok(Report {
                    protocol: "fit",
                    headline,
                    series: vec![("series.csv", twin.series)],
                })
            }
        }
    }
}

fn sync(a: &SimConfig, b: &SimConfig, protocol: &SyncProtocol) -> Result<Report, Failure> {
    match a.mode {
        Arithmetic::FixedReversible => {
            let ia = a.fixed_integrator().map_err(Failure::runtime("setup"))?;
            let ib = b.fixed_integrator().map_err(Failure::runtime("setup"))?;
            sync_with(a, b, &ia, &ib, protocol)
        }
        Arithmetic::FloatReference => {
            let ia = a.float_integrator().map_err(Failure::runtime("setup"))?;
            let ib = b.float_integrator().map_err(Failure::runtime("setup"))?;
            sync_with(a, b, &ia, &ib, protocol)
        }
    }
}

fn sync_with<I: Integrator>(
    a: &SimConfig,
    b: &SimConfig,
    ia: &I,
    ib: &I,
    protocol: &SyncProtocol,
) -> Result<Report, Failure> {
    let setup_a = Setup::from_config(a, ia).map_err(Failure::runtime("setup"))?;
    let setup_b = Setup::from_config(b, ib).map_err(Failure::runtime("setup"))?;
    let outcome = run_two_vessel_sync(&setup_a, &setup_b, protocol).map_err(Failure::runtime("sync"))?;
    let headline = Headline {
        sync_step: outcome.sync_step,
        b_relaxation_step: outcome.b_relaxation_step,
        ..Headline::from_last(&outcome.series_b)
    };
    Ok(Report {
        protocol: "sync",
        headline,
        series: vec![("series_a.csv", outcome.series_a), ("series_b.csv", outcome.series_b)],
    })
}
