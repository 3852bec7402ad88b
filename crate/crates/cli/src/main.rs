use clap::{Parser, Subcommand};
use es_cli::commands::{self, StudyArgs};
use std::path::PathBuf;
use std::process;

#[derive(Parser)]
#[command(
    name = "es-unicycle",
    version,
    about = "Extremum-seeking unicycle: simulate oscillatory tracking laws and study their averaging limits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario; write trajectory, summary, and plot-data files
    Run {
        /// Catalog name or config reference (file.cfg#section)
        scenario: String,
        /// Control law id (cont1..cont4); defaults to the scenario's law
        #[arg(long)]
        law: Option<String>,
        /// Scenario override as key=value (repeatable)
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output directory (default: $ES_UNICYCLE_OUT, then the working directory)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run two or more laws on one scenario and rank them by tracking error
    Compare {
        /// Catalog name or config reference (file.cfg#section)
        scenario: String,
        /// Law ids, at least two
        #[arg(required = true, num_args = 1..)]
        laws: Vec<String>,
        /// Scenario override as key=value (repeatable)
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output directory (default: $ES_UNICYCLE_OUT, then the working directory)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Frequency-sweep studies over a scenario
    Study {
        /// One of: omega, volterra, probe
        kind: String,
        /// Scenario; defaults to sim-moving (omega, probe) or volterra-base (volterra)
        scenario: Option<String>,
        /// Comma-separated frequency ratios for the omega study
        #[arg(long)]
        k: Option<String>,
        /// Comma-separated dither frequencies (volterra, probe)
        #[arg(long)]
        omega: Option<String>,
        /// Containment margin for the probe
        #[arg(long)]
        eps: Option<f64>,
        /// Initial-set margin for the probe
        #[arg(long)]
        delta: Option<f64>,
        /// Scenario override as key=value (repeatable)
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output directory (default: $ES_UNICYCLE_OUT, then the working directory)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in scenario catalog
    List,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            law,
            overrides,
            out,
        } => commands::run(&scenario, law.as_deref(), &overrides, out.as_deref()),
        Command::Compare {
            scenario,
            laws,
            overrides,
            out,
        } => commands::compare(&scenario, &laws, &overrides, out.as_deref()),
        Command::Study {
            kind,
            scenario,
            k,
            omega,
            eps,
            delta,
            overrides,
            out,
        } => commands::study(StudyArgs {
            kind: &kind,
            scenario: scenario.as_deref(),
            k_list: k.as_deref(),
            omega_list: omega.as_deref(),
            eps,
            delta,
            overrides: &overrides,
            out: out.as_deref(),
        }),
        Command::List => commands::list(),
    };
    if let Err(e) = result {
        eprintln!("error: {}: {}", e.category(), e.message());
        process::exit(e.exit_code());
    }
}
