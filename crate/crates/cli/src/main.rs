use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use trilogic_cli::run::EXIT_USAGE;
use trilogic_cli::{run, run_corpus, Format, Models, RunConfig, Semantics};

#[derive(Parser)]
#[command(name = "trilogic", version, about = "Evaluate logic programs under stratified, well-founded or stable semantics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one program.
    Run(RunArgs),
    /// Check every fixture in a corpus directory.
    Corpus {
        #[arg(env = "TRILOGIC_CORPUS")]
        dir: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(env = "TRILOGIC_INPUT")]
    input: PathBuf,
    /// stratified, wfs or stable.
    #[arg(long, env = "TRILOGIC_SEMANTICS", default_value = "stratified")]
    semantics: Semantics,
    /// Query literals, e.g. 'ancestor(a,X)'. Defaults to the first `?-` in the file.
    #[arg(long, env = "TRILOGIC_QUERY")]
    query: Option<String>,
    /// Number of stable models to print, or `all`.
    #[arg(long, env = "TRILOGIC_MODELS", default_value = "1")]
    models: Models,
    /// Re-evaluate every rule on every round instead of only new facts.
    #[arg(long, env = "TRILOGIC_NAIVE")]
    naive: bool,
    /// Evaluate the whole program instead of specializing it to the query.
    #[arg(long, env = "TRILOGIC_NO_DEMAND")]
    no_demand: bool,
    #[arg(long, env = "TRILOGIC_MAX_TERM_DEPTH", default_value_t = 16)]
    max_term_depth: u32,
    /// text or json.
    #[arg(long, env = "TRILOGIC_FORMAT", default_value = "text")]
    format: Format,
    /// Write counters and wall time as JSON to this file.
    #[arg(long, env = "TRILOGIC_STATS")]
    stats: Option<PathBuf>,
}

impl From<RunArgs> for RunConfig {
    fn from(a: RunArgs) -> Self {
        RunConfig {
            input: a.input,
            semantics: a.semantics,
            query: a.query,
            models: a.models,
            naive: a.naive,
            demand: !a.no_demand,
            max_term_depth: a.max_term_depth,
            format: a.format,
            stats: a.stats,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    match cli.command {
        Command::Run(args) => {
            let out = run(&RunConfig::from(args));
            print!("{}", out.stdout);
            eprint!("{}", out.stderr);
            let _ = std::io::stdout().flush();
            ExitCode::from(out.code as u8)
        }
        Command::Corpus { dir } => match run_corpus(&dir) {
            Ok(report) => {
                print!("{report}");
                ExitCode::from(if report.passed() { 0 } else { 1 })
            }
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", dir.display());
                ExitCode::from(EXIT_USAGE as u8)
            }
        },
    }
}
