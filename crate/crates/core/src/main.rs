use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use duoc::dsl::{self, DslError, Format, RunConfig, DEFAULT_TOL};

#[derive(Parser)]
#[command(name = "duoc", version, about = "Run experiments on classical/anti-classical composite systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a script and write its result table.
    Run {
        script: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Parse a script without running it.
    Check { script: PathBuf },
    /// Run a built-in demo script (chsh, activation, witness, purify, consistency, span).
    Demo {
        name: String,
        #[command(flatten)]
        opts: RunOpts,
    },
}

#[derive(Args)]
struct RunOpts {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Default assertion tolerance; overrides DUOC_TOL.
    #[arg(long)]
    tol: Option<f64>,
    /// Output file; otherwise the script's `emit` target or stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutFormat>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
        }
    }
}

enum Failure {
    Asserts,
    Error(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Asserts) => ExitCode::from(1),
        Err(Failure::Error(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Check { script } => {
            let text = read(&script)?;
            let parsed = dsl::parse_named(&script_name(&script), &text).map_err(|e| located(script.display(), e))?;
            println!("{}: ok ({} statements)", script.display(), parsed.statements.len());
            Ok(())
        }
        Command::Run { script, opts } => {
            let text = read(&script)?;
            execute(&script_name(&script), &text, &script.display().to_string(), &opts)
        }
        Command::Demo { name, opts } => {
            let Some(text) = dsl::demo(&name) else {
                let names: Vec<&str> = dsl::DEMOS.iter().map(|(n, _)| *n).collect();
                return Err(Failure::Error(format!(
                    "unknown demo `{name}`; available: {}",
                    names.join(", ")
                )));
            };
            execute(&name, text, &format!("demo:{name}"), &opts)
        }
    }
}

fn execute(name: &str, text: &str, origin: &str, opts: &RunOpts) -> Result<(), Failure> {
    let script = dsl::parse_named(name, text).map_err(|e| located(origin, e))?;
    let cfg = RunConfig {
        seed: opts.seed,
        tolerance: tolerance(opts.tol)?,
    };
    let outcome = dsl::run_script(&script, &cfg).map_err(|e| located(origin, e))?;
    let emit_path = outcome.emit.as_ref().map(|(_, p)| PathBuf::from(p));
    let path = opts.out.clone().or(emit_path);
    let format = opts
        .format
        .map(Format::from)
        .or(outcome.emit.as_ref().map(|(f, _)| *f))
        .or_else(|| {
            path.as_ref()
                .filter(|p| p.extension().is_some_and(|e| e == "json"))
                .map(|_| Format::Json)
        })
        .unwrap_or(Format::Csv);
    match path {
        Some(p) => dsl::emit_results(&outcome.table, format, &p).map_err(|e| Failure::Error(e.to_string()))?,
        None => print!("{}", outcome.table.render(format)),
    }
    for f in &outcome.failures {
        eprintln!("{origin}:{}: {}", f.span, f.message);
    }
    if outcome.failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Asserts)
    }
}

fn tolerance(flag: Option<f64>) -> Result<f64, Failure> {
    let tol = match (flag, std::env::var("DUOC_TOL")) {
        (Some(t), _) => t,
        (None, Ok(s)) => s
            .trim()
            .parse()
            .map_err(|_| Failure::Error(format!("DUOC_TOL is not a number: {s:?}")))?,
        (None, Err(_)) => DEFAULT_TOL,
    };
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Failure::Error(format!("tolerance must be a non-negative number, got {tol}")));
    }
    Ok(tol)
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Error(format!("cannot read {}: {e}", path.display())))
}

fn script_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "script".into())
}

fn located(origin: impl std::fmt::Display, e: DslError) -> Failure {
    Failure::Error(format!("{origin}:{e}"))
}
