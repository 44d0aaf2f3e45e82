//! `kinesphere`: validate platforms, install databanks, resolve and run commands.
//!
//! stdout carries JSON only. Diagnostics go to stderr.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "kinesphere", version, about = "Spatial command databanks for articulated platforms")]
struct Cli {
    /// Output format of stdout.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    /// No diagnostics on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Check a platform file and print its validation report.
    Validate { eurdf: PathBuf },
    /// Derive limb and joint labels from the core links of a platform file.
    DeriveLabels {
        eurdf: PathBuf,
        /// Write the relabeled platform file here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a databank, automatically or from recorded poses.
    Install(InstallArgs),
    /// Look up one command without moving anything.
    Query {
        eurdf: PathBuf,
        ecl: PathBuf,
        /// For example "limb_11 @ distal_11 -> left-high * 3".
        command: String,
    },
    /// Run a command file and write the trajectory.
    Exec(ExecArgs),
    /// Check a databank against its platform and write it in canonical form.
    Export {
        eurdf: PathBuf,
        ecl: PathBuf,
        /// Destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Read a databank file, check it against the platform and summarise it.
    Import {
        eurdf: PathBuf,
        ecl: PathBuf,
        /// Also write a canonical copy here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the teleoperation service.
    Serve(ServeArgs),
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("mode").required(true).args(["auto", "record"]))]
struct InstallArgs {
    eurdf: PathBuf,
    /// Databank file to write; defaults to `<platform>.ecl.json`.
    out: Option<PathBuf>,
    /// Search joint space for each pull.
    #[arg(long)]
    auto: bool,
    /// JSON list of recorded poses.
    #[arg(long, value_name = "FILE")]
    record: Option<PathBuf>,
    /// Sizes per pull (s_max).
    #[arg(long, default_value_t = 3)]
    sizes: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ExecArgs {
    eurdf: PathBuf,
    ecl: PathBuf,
    commands: PathBuf,
    /// `neutral`, or a JSON file holding a pose array or `{"pose", "base"}`.
    #[arg(long, default_value = "neutral")]
    start: String,
    /// States per command line, endpoints included.
    #[arg(long, default_value_t = kinesphere::resolver::DEFAULT_STEPS)]
    steps: usize,
    /// Seconds per command line.
    #[arg(long, default_value_t = kinesphere::resolver::DEFAULT_DURATION)]
    duration: f64,
    /// Write the trajectory here and print a summary instead.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    /// A platform file and its databank; repeat for more platforms.
    #[arg(long, num_args = 2, value_names = ["EURDF", "ECL"], required = true)]
    load: Vec<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: String,
    #[arg(long, default_value_t = 20.0)]
    tick_hz: f64,
    #[arg(long, default_value_t = kinesphere::resolver::DEFAULT_STEPS)]
    steps: usize,
    #[arg(long, default_value_t = kinesphere::resolver::DEFAULT_DURATION)]
    duration: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = if cli.quiet { log::LevelFilter::Off } else { log::LevelFilter::Warn };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();
    let Format::Json = cli.format;

    let result = match cli.command {
        Command::Validate { eurdf } => commands::validate(&eurdf),
        Command::DeriveLabels { eurdf, out } => commands::derive_labels(&eurdf, out.as_deref()),
        Command::Install(a) => commands::install(&a.eurdf, a.out.as_deref(), a.record.as_deref(), a.sizes, a.seed),
        Command::Query { eurdf, ecl, command } => commands::query(&eurdf, &ecl, &command),
        Command::Exec(a) => commands::exec(&a.eurdf, &a.ecl, &a.commands, &a.start, a.steps, a.duration, a.out.as_deref()),
        Command::Export { eurdf, ecl, out } => commands::export(&eurdf, &ecl, out.as_deref()),
        Command::Import { eurdf, ecl, out } => commands::import(&eurdf, &ecl, out.as_deref()),
        Command::Serve(a) => commands::serve(&a.load, &a.addr, a.tick_hz, a.steps, a.duration),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            if !cli.quiet {
                eprintln!("error: {}", failure.message);
            }
            ExitCode::from(failure.code)
        }
    }
}
