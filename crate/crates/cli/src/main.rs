//! `gutz`: command-line front end. See `gutz --help`.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Layers, RunConfig};
use error::CliError;

#[derive(Parser)]
#[command(name = "gutz", version, about = "Gutzwiller-factor simulations for small Hubbard lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat `key = value` config file; flags and `GUTZ_*` variables override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    keys: Keys,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Two-site curves: analytic, exact primitives, shot-sampled with PaS.
    TwoSite,
    /// Monte Carlo plus oracle routes over a (g, U) grid.
    Sweep,
    /// LCU success probability per lattice size.
    Lcu,
    /// Monte Carlo energies over a (g, U) grid.
    Mc,
    /// Verify every discrete decomposition of exp(-J ZZ).
    HstVerify,
    /// Enumerate all field configurations and check weight positivity.
    PhaseCheck,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::TwoSite => "two-site",
            Command::Sweep => "sweep",
            Command::Lcu => "lcu",
            Command::Mc => "mc",
            Command::HstVerify => "hst-verify",
            Command::PhaseCheck => "phase-check",
        }
    }
}

#[derive(Args)]
struct Keys {
    /// `chain:N` or `ladder:N`
    #[arg(long, global = true)]
    lattice: Option<String>,
    /// Hopping (a list for hst-verify)
    #[arg(long = "J", global = true, allow_hyphen_values = true)]
    j: Option<String>,
    /// Comma-separated U values
    #[arg(long = "U", global = true)]
    u: Option<String>,
    /// Explicit comma-separated g values, overriding the range
    #[arg(long, global = true)]
    g: Option<String>,
    #[arg(long, global = true)]
    g_min: Option<String>,
    #[arg(long, global = true)]
    g_max: Option<String>,
    #[arg(long, global = true)]
    g_step: Option<String>,
    /// Monte Carlo measurement sweeps
    #[arg(long, global = true)]
    nmc: Option<String>,
    #[arg(long, global = true)]
    bins: Option<String>,
    #[arg(long, global = true)]
    burnin: Option<String>,
    #[arg(long, global = true)]
    chains: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// `statevector` or `determinant`
    #[arg(long, global = true)]
    backend: Option<String>,
    #[arg(long, global = true)]
    shots: Option<String>,
    #[arg(long, global = true)]
    reps: Option<String>,
    /// Synthetic device bias `scale,phase`
    #[arg(long, global = true)]
    bias: Option<String>,
    /// Sweep methods: `mc,fullsum,exact-gutzwiller`
    #[arg(long, global = true)]
    methods: Option<String>,
    /// Output CSV path; metadata goes to `<out>.meta.json`
    #[arg(long, global = true)]
    out: Option<String>,
    /// Worker threads (default: available parallelism)
    #[arg(long, global = true)]
    threads: Option<String>,
}

impl Keys {
    fn pairs(self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("lattice", self.lattice),
            ("J", self.j),
            ("U", self.u),
            ("g", self.g),
            ("g-min", self.g_min),
            ("g-max", self.g_max),
            ("g-step", self.g_step),
            ("nmc", self.nmc),
            ("bins", self.bins),
            ("burnin", self.burnin),
            ("chains", self.chains),
            ("seed", self.seed),
            ("backend", self.backend),
            ("shots", self.shots),
            ("reps", self.reps),
            ("bias", self.bias),
            ("methods", self.methods),
            ("out", self.out),
            ("threads", self.threads),
        ]
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let layers = Layers::load(cli.config.as_deref(), |v| std::env::var(v).ok(), &cli.keys.pairs())?;
    let cfg = RunConfig::resolve(&layers)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    eprintln!("gutz {} {}", gutz_core::VERSION, cli.command.name());
    match cli.command {
        Command::TwoSite => commands::two_site(&cfg),
        Command::Sweep => commands::sweep(&cfg),
        Command::Lcu => commands::lcu(&cfg),
        Command::Mc => commands::mc(&cfg),
        Command::HstVerify => commands::hst_verify(&cfg),
        Command::PhaseCheck => commands::phase_check(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(1);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
