use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use quiverzeta::cli::{parse_caps_arg, run, CliError, Command, JobConfig, Oracle, OutputFormat};
use quiverzeta::padic::CapSpec;

/// Exact truncated zeta functions of class-two nilpotent rings and quiver
/// representations over p-adic integers.
#[derive(Parser)]
#[command(name = "quiverzeta", version, about)]
struct Cli {
    #[command(subcommand)]
    command: TopCommand,
}

#[derive(Subcommand)]
enum TopCommand {
    /// Print the truncated zeta series of an input document
    Coeffs {
        #[command(flatten)]
        common: CommonArgs,
        /// Input JSON document (algebra or representation)
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        /// Amalgamation power applied before computing
        #[arg(short, long, default_value_t = 1)]
        m: u32,
        /// Computation route
        #[arg(long, value_enum, default_value_t = OracleArg::Pairsum)]
        oracle: OracleArg,
    },
    /// Truncated expansions of the closed forms
    #[command(subcommand)]
    ClosedForm(ClosedFormCmd),
    /// Verify the structural identities
    #[command(subcommand)]
    Verify(VerifyCmd),
}

#[derive(Subcommand)]
enum ClosedFormCmd {
    /// Ideal zeta function of the free module of rank n
    Abelian {
        #[command(flatten)]
        common: CommonArgs,
        /// Module rank
        #[arg(short)]
        n: u32,
    },
    /// Zeta function of the amalgamated m-th Heisenberg power
    Heisenberg {
        #[command(flatten)]
        common: CommonArgs,
        /// Amalgamation power
        #[arg(short, long, default_value_t = 1)]
        m: u32,
    },
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Amalgam identity: zeta of the amalgamated power vs. the rewritten form
    Amalgam {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        #[arg(short, long, default_value_t = 1)]
        m: u32,
        /// Run against a deliberately corrupted weight (expects FAIL)
        #[arg(long, hide = true)]
        negative_control: bool,
    },
    /// Oracle equivalence: direct enumeration vs. pair-sum expansion
    Pairsum {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
    },
    /// Sum-of-projections identity at (m, n), with the partition check
    SumLattice {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(short, long, default_value_t = 1)]
        m: u32,
        #[arg(short)]
        n: u32,
    },
    /// Good-basis measure vs. brute-force residue counting
    Measure {
        #[command(flatten)]
        common: CommonArgs,
        /// Largest rank to check
        #[arg(short, long, default_value_t = 2)]
        rank: usize,
        /// Largest diagonal exponent per profile entry
        #[arg(long, default_value_t = 2)]
        nu_max: u32,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Prime p
    #[arg(short)]
    p: u64,
    /// Truncation cap: an integer, or a JSON object of per-vertex caps
    #[arg(short = 'K', long = "caps", value_parser = parse_caps_arg, default_value = "2")]
    caps: CapSpec,
    /// Output format
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
    /// Enumeration guard: refuse jobs predicted to exceed this many items
    #[arg(long, env = "QUIVERZETA_LIMIT", default_value_t = 10_000_000)]
    limit: u64,
    /// Partition enumeration across threads
    #[arg(long, default_value_t = false)]
    parallel: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleArg {
    Pairsum,
    Direct,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
    Tsv,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => OutputFormat::Text,
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Tsv => OutputFormat::Tsv,
        }
    }
}

fn job(common: CommonArgs, input: Option<PathBuf>, m: u32, command: Command) -> JobConfig {
    JobConfig {
        input,
        p: common.p,
        caps: common.caps,
        m,
        command,
        format: common.format.into(),
        limit: common.limit,
        parallel: common.parallel,
    }
}

fn config_from_cli(cli: Cli) -> JobConfig {
    match cli.command {
        TopCommand::Coeffs {
            common,
            input,
            m,
            oracle,
        } => {
            let oracle = match oracle {
                OracleArg::Pairsum => Oracle::Pairsum,
                OracleArg::Direct => Oracle::Direct,
            };
            job(common, Some(input), m, Command::Coeffs { oracle })
        }
        TopCommand::ClosedForm(ClosedFormCmd::Abelian { common, n }) => {
            job(common, None, 1, Command::ClosedFormAbelian { n })
        }
        TopCommand::ClosedForm(ClosedFormCmd::Heisenberg { common, m }) => {
            job(common, None, m, Command::ClosedFormHeisenberg)
        }
        TopCommand::Verify(VerifyCmd::Amalgam {
            common,
            input,
            m,
            negative_control,
        }) => job(
            common,
            Some(input),
            m,
            Command::VerifyAmalgam { negative_control },
        ),
        TopCommand::Verify(VerifyCmd::Pairsum { common, input }) => {
            job(common, Some(input), 1, Command::VerifyPairsum)
        }
        TopCommand::Verify(VerifyCmd::SumLattice { common, m, n }) => {
            job(common, None, m, Command::VerifySumLattice { n })
        }
        TopCommand::Verify(VerifyCmd::Measure {
            common,
            rank,
            nu_max,
        }) => job(common, None, 1, Command::VerifyMeasure { rank, nu_max }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = config_from_cli(cli);
    match run(&config) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            eprintln!("{}", outcome.timing);
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(err) => {
            eprintln!("error: {err}");
            if let CliError::Usage(_) = err {
                eprintln!("run with --help for usage");
            }
            ExitCode::from(2)
        }
    }
}
