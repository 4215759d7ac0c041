mod args;
mod commands;
mod settings;

use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use args::{Cli, Command};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 3;
const EXIT_MISSING_INPUT: u8 = 4;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(nucseg::Error),
}

impl From<nucseg::Error> for CliError {
    fn from(e: nucseg::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn class(&self) -> &'static str {
        match self {
            CliError::Config(_) => "invalid-config",
            CliError::Core(e) => e.class(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(nucseg::Error::MissingInput(_) | nucseg::Error::MissingPredictions(_)) => EXIT_MISSING_INPUT,
            CliError::Core(_) => EXIT_FAILURE,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Config(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        }
    }
}

fn version() -> String {
    format!(
        "{} (schedule format {}, weights format {})",
        env!("CARGO_PKG_VERSION"),
        nucseg::schedules::SCHEDULE_FORMAT_VERSION,
        nucseg::baseline::WEIGHTS_FORMAT_VERSION
    )
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = settings::load(cli.config.as_deref())?;
    let threads = cli.threads.unwrap_or(cfg.parallelism);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    match cli.command {
        Command::Tile(a) => commands::tile(cfg, a),
        Command::Rasterize(a) => commands::rasterize_cmd(a),
        Command::Synth(a) => commands::synth(cfg, a),
        Command::Split(a) => commands::split(cfg, a),
        Command::Schedule(a) => commands::schedule(cfg, a),
        Command::Lrfind(a) => commands::lrfind(cfg, a),
        Command::TrainBaseline(a) => commands::train_baseline(cfg, a),
        Command::Predict(a) => commands::predict(cfg, a),
        Command::Postprocess(a) => commands::postprocess(cfg, a),
        Command::Evaluate(a) => commands::evaluate_cmd(cfg, a),
        Command::Overlay(a) => commands::overlay(a),
        Command::Pipeline(a) => commands::pipeline(cfg, a),
    }
}

fn main() -> ExitCode {
    let version: &'static str = Box::leak(version().into_boxed_str());
    let matches = Cli::command().version(version).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_env("NUCSEG_LOG")
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.class(), e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
