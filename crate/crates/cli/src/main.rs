use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ftn_papr::covariance::Scheme;
use ftn_papr::figure::{figure_config, FigureId, Scale};
use ftn_papr::par::Execution;
use ftn_papr::scenario::{run_scenario, ScenarioConfig, ScenarioReport};
use ftn_papr::synth::Synthesis;
use ftn_papr::verify::{run_suite, Suite, VerifyOptions};

const EXIT_CONFIG: u8 = 2;
const EXIT_BREACH: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "ftn-papr", version, about = "PAPR of faster-than-Nyquist Gaussian signaling")]
struct Cli {
    /// Output directory; overrides the config file.
    #[arg(long, global = true, env = "FTN_PAPR_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,

    /// Run realizations on the calling thread only.
    #[arg(long, global = true)]
    sequential: bool,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Default)]
struct Overrides {
    /// Monte Carlo realizations.
    #[arg(long)]
    realizations: Option<usize>,
    /// Master RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Acceleration factors, comma separated.
    #[arg(long, value_delimiter = ',')]
    delta: Option<Vec<f64>>,
    /// Allocation schemes, comma separated.
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<Scheme>>,
    /// Requested symbols per frame.
    #[arg(long)]
    n_symbols: Option<usize>,
    /// Waveform synthesis.
    #[arg(long, value_enum)]
    synthesis: Option<SynthesisArg>,
    /// Allowed sup gap against the closed form.
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SynthesisArg {
    Circular,
    Linear,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FigureArg {
    Fig1,
    Fig2,
    Fig3,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScaleArg {
    Desk,
    Full,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SuiteArg {
    Spectral,
    Power,
    Ccdf,
    All,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a campaign described by a TOML file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Reproduce one of the reference figures.
    Figure {
        #[arg(value_enum)]
        id: FigureArg,
        #[arg(long, value_enum, default_value = "desk")]
        scale: ScaleArg,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the built-in verification suites.
    Verify {
        #[arg(value_enum, default_value = "all")]
        suite: SuiteArg,
        /// Multiply every tolerance by this factor.
        #[arg(long, default_value_t = 1.0)]
        tolerance_scale: f64,
    },
}

impl Overrides {
    fn apply(&self, cfg: &mut ScenarioConfig) {
        if let Some(r) = self.realizations {
            cfg.realizations = r;
        }
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(d) = &self.delta {
            cfg.delta_list = d.clone();
        }
        if let Some(s) = &self.schemes {
            cfg.schemes = s.clone();
        }
        if let Some(n) = self.n_symbols {
            cfg.n_symbols = n;
        }
        if let Some(s) = self.synthesis {
            cfg.synthesis = match s {
                SynthesisArg::Circular => Synthesis::Circular,
                SynthesisArg::Linear => Synthesis::Linear,
            };
        }
        if let Some(t) = self.tolerance {
            cfg.tolerance = t;
        }
    }
}

fn execution(cli: &Cli) -> Execution {
    if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn report_scenario(report: &ScenarioReport) -> ExitCode {
    for p in &report.points {
        println!(
            "{} delta={:<5} {:<18} sup gap {:.4} (tol {:.4}) at {:>7.2} dB, mean power {:.4}, rank {}/{}",
            if p.passed { "PASS" } else { "FAIL" },
            p.delta,
            p.scheme.label(),
            p.empirical_gap.gap,
            report.tolerance,
            p.empirical_gap.at_db,
            p.mean_power_ratio,
            p.rank,
            p.frame_len,
        );
    }
    println!("outputs in {}", report.config.output_dir.display());
    if report.all_passed {
        ExitCode::SUCCESS
    } else {
        for b in report.breaches() {
            eprintln!("invariant breached: {b}");
        }
        ExitCode::from(EXIT_BREACH)
    }
}

fn fail(err: ftn_papr::Error) -> ExitCode {
    eprintln!("error: {err}");
    if err.is_config() {
        ExitCode::from(EXIT_CONFIG)
    } else {
        ExitCode::FAILURE
    }
}

fn run(cli: &Cli) -> Result<ExitCode, ftn_papr::Error> {
    let exec = execution(cli);
    match &cli.command {
        Command::Run { config, overrides } => {
            let mut cfg = ScenarioConfig::from_file(config)?;
            overrides.apply(&mut cfg);
            if let Some(dir) = &cli.output_dir {
                cfg.output_dir = dir.clone();
            }
            cfg.execution = exec;
            Ok(report_scenario(&run_scenario(&cfg)?))
        }
        Command::Figure { id, scale, overrides } => {
            let id = match id {
                FigureArg::Fig1 => FigureId::Fig1,
                FigureArg::Fig2 => FigureId::Fig2,
                FigureArg::Fig3 => FigureId::Fig3,
            };
            let scale = match scale {
                ScaleArg::Desk => Scale::Desk,
                ScaleArg::Full => Scale::Full,
            };
            let root = cli.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
            let mut cfg = figure_config(id, scale, &root);
            overrides.apply(&mut cfg);
            cfg.execution = exec;
            Ok(report_scenario(&run_scenario(&cfg)?))
        }
        Command::Verify { suite, tolerance_scale } => {
            let suite = match suite {
                SuiteArg::Spectral => Suite::Spectral,
                SuiteArg::Power => Suite::Power,
                SuiteArg::Ccdf => Suite::Ccdf,
                SuiteArg::All => Suite::All,
            };
            let opts = VerifyOptions {
                tolerance_scale: *tolerance_scale,
                execution: exec,
            };
            let report = run_suite(suite, &opts)?;
            for c in &report.checks {
                println!("{c}");
            }
            let failed = report.failures().count();
            println!("{} checks, {failed} failed", report.checks.len());
            Ok(if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_BREACH)
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    run(&cli).unwrap_or_else(fail)
}
