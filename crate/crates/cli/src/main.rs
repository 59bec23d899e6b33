use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use condense_cli::commands::{self, AmbientSpec, DomainSpec, ShellMode};
use condense_cli::{CliError, Format, Settings};

/// Quantale-based abstract domains: law checks, shells, residuals and
/// condensing checks for a small logic language.
#[derive(Debug, Parser)]
#[command(name = "condense", version)]
struct Cli {
    /// seed for sampled law checks
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// refuse substitution carriers with more members than this
    #[arg(long, global = true, default_value_t = condensing::subst::DEFAULT_MAX_CARRIER)]
    max_carrier: usize,
    /// bound on fixpoint iterations
    #[arg(long, global = true, default_value_t = condensing::shells::DEFAULT_ITERATION_CAP)]
    iteration_cap: usize,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Human)]
    format: FormatArg,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Human,
    Kv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Complete,
    Weak,
}

#[derive(Debug, Args)]
struct AmbientArgs {
    /// explicit quantale file
    #[arg(long, conflicts_with = "carrier")]
    quantale: Option<PathBuf>,
    /// substitution carrier file (default: X Y / Z W / a)
    #[arg(long)]
    carrier: Option<PathBuf>,
}

impl AmbientArgs {
    fn spec(self) -> AmbientSpec {
        match self.quantale {
            Some(q) => AmbientSpec::Quantale(q),
            None => AmbientSpec::Carrier(self.carrier),
        }
    }
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct DomainArgs {
    /// fixpoints given inline, e.g. "TOP I(X,Y)"
    #[arg(long)]
    domain: Option<String>,
    /// file with `fixpoints:` lines
    #[arg(long)]
    domain_file: Option<PathBuf>,
}

impl DomainArgs {
    fn spec(self) -> Option<DomainSpec> {
        match (self.domain, self.domain_file) {
            (Some(d), _) => Some(DomainSpec::Inline(d)),
            (None, Some(p)) => Some(DomainSpec::File(p)),
            (None, None) => None,
        }
    }
}

#[derive(Debug, Args)]
#[group(required = false, multiple = false)]
struct OptDomainArgs {
    /// abstract evaluation over these fixpoints
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    domain_file: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Check lattice, quantale and linear-implication laws of each file.
    Verify {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Compute the complete or weak-complete shell of a domain.
    Shell {
        #[command(flatten)]
        ambient: AmbientArgs,
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::Weak)]
        mode: ModeArg,
    },
    /// Check whether a domain is condensing for a program.
    Condense {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        carrier: Option<PathBuf>,
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long, default_value = "p")]
        goal: String,
        /// also check the weak-complete shell of the domain
        #[arg(long)]
        refine: bool,
    },
    /// Evaluate a goal on an input substitution set.
    Eval {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        carrier: Option<PathBuf>,
        #[arg(long, default_value = "p")]
        goal: String,
        /// input set, e.g. "TOP" or "{X/a}"
        #[arg(long, default_value = "TOP")]
        input: String,
        #[command(flatten)]
        domain: OptDomainArgs,
    },
    /// Print the residual A -o C.
    Residual {
        #[command(flatten)]
        ambient: AmbientArgs,
        a: String,
        c: String,
    },
    /// Run a built-in worked scenario (4.2 or 4.9).
    Example { name: String },
}

fn run(cli: Cli) -> Result<condense_cli::RunReport, CliError> {
    let settings = Settings { seed: cli.seed, max_carrier: cli.max_carrier, iteration_cap: cli.iteration_cap };
    match cli.cmd {
        Cmd::Verify { paths } => commands::verify(&paths, &settings),
        Cmd::Shell { ambient, domain, mode } => {
            let mode = match mode {
                ModeArg::Complete => ShellMode::Complete,
                ModeArg::Weak => ShellMode::Weak,
            };
            let domain = domain.spec().expect("clap requires a domain");
            commands::shell(&ambient.spec(), &domain, mode, &settings)
        }
        Cmd::Condense { program, carrier, domain, goal, refine } => {
            let domain = domain.spec().expect("clap requires a domain");
            commands::condense(&program, carrier.as_deref(), &domain, &goal, refine, &settings)
        }
        Cmd::Eval { program, carrier, goal, input, domain } => {
            let domain = DomainArgs { domain: domain.domain, domain_file: domain.domain_file }.spec();
            commands::eval(&program, carrier.as_deref(), &goal, &input, domain.as_ref(), &settings)
        }
        Cmd::Residual { ambient, a, c } => commands::residual(&ambient.spec(), &a, &c, &settings),
        Cmd::Example { name } => commands::example(&name, &settings),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = match cli.format {
        FormatArg::Human => Format::Human,
        FormatArg::Kv => Format::Kv,
    };
    let start = Instant::now();
    match run(cli) {
        Ok(mut report) => {
            report.elapsed = Some(start.elapsed());
            print!("{}", report.render(format));
            ExitCode::from(report.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
