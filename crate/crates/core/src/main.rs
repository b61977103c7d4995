use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use histgen::history::{replay, revision_dir, validate_history, Snapshot, LEDGER_FILE};
use histgen::report::{collect_metrics, write_csv, write_long};
use histgen::runner::{run, Preset, RunConfig};
use histgen::Error;

#[derive(Parser)]
#[command(name = "histgen", version, about = "Synthetic version histories for variant-rich software")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write its history.
    Generate(GenerateArgs),
    /// Emit feature and size metrics per revision.
    Stats(StatsArgs),
    /// Audit a history directory.
    Validate(ValidateArgs),
    /// Re-apply the ledger to revision 0.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    system: PathBuf,
    #[arg(long = "donor")]
    donors: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    out: PathBuf,
    /// Write the plot-ready long format instead of the wide table.
    #[arg(long)]
    long: bool,
    /// File to write; standard output if absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    out: PathBuf,
    /// Where to write the JSON report; defaults to `<out>/validation.json`.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    out: PathBuf,
    /// Directory to materialize the final replayed revision into.
    #[arg(long)]
    dest: Option<PathBuf>,
}

fn load_config(args: &GenerateArgs) -> histgen::Result<RunConfig> {
    let preset = args.preset.as_deref().map(str::parse::<Preset>).transpose()?;
    let mut cfg = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            RunConfig::from_toml(&text, Some(preset.unwrap_or(Preset::GrowingSystem)))?
        }
        None => preset.unwrap_or(Preset::GrowingSystem).config(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn generate(args: GenerateArgs) -> u8 {
    let cfg = match load_config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("histgen: {e}");
            return 2;
        }
    };
    match run(&cfg, &args.system, &args.donors, &args.out) {
        Ok(s) => {
            eprintln!(
                "histgen: {} iterations, {} committed, {} skipped -> {}",
                s.iterations,
                s.committed,
                s.skipped,
                args.out.display()
            );
            0
        }
        Err(e) => {
            eprintln!("histgen: {e}");
            match e {
                Error::SnapshotIo { .. } | Error::LedgerIo { .. } => 3,
                _ => 2,
            }
        }
    }
}

fn emit(output: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> std::io::Result<()> {
    match output {
        Some(p) => {
            let mut file = std::io::BufWriter::new(fs::File::create(p)?);
            f(&mut file)?;
            file.flush()
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)
        }
    }
}

fn stats(args: StatsArgs) -> u8 {
    let rows = match collect_metrics(&args.out) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("histgen: {e}");
            return 4;
        }
    };
    let written = emit(args.output.as_deref(), |w| {
        if args.long {
            write_long(&rows, w)
        } else {
            write_csv(&rows, w)
        }
    });
    match written {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("histgen: {e}");
            3
        }
    }
}

fn validate(args: ValidateArgs) -> u8 {
    let report = validate_history(&args.out);
    let path = args.report.unwrap_or_else(|| args.out.join("validation.json"));
    let text = serde_json::to_string_pretty(&report).expect("reports serialize") + "\n";
    if let Err(e) = fs::write(&path, text) {
        eprintln!("histgen: cannot write {}: {e}", path.display());
        return 3;
    }
    if report.is_clean() {
        eprintln!(
            "histgen: {} revisions, {} records: no violations",
            report.revisions_checked, report.records_replayed
        );
        0
    } else {
        for v in &report.violations {
            eprintln!("histgen: {:?} {}", v.check, v.detail);
        }
        eprintln!("histgen: {} violations, report at {}", report.violations.len(), path.display());
        1
    }
}

fn replay_cmd(args: ReplayArgs) -> u8 {
    match replay(&revision_dir(&args.out, 0), &args.out.join(LEDGER_FILE)) {
        Ok(tree) => {
            if let Some(dest) = &args.dest {
                if let Err(e) = Snapshot::of(&tree).write(dest) {
                    eprintln!("histgen: {e}");
                    return 3;
                }
            }
            eprintln!("histgen: replayed to revision {}", tree.revision);
            0
        }
        Err(e) => {
            eprintln!("histgen: {e}");
            1
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Stats(a) => stats(a),
        Command::Validate(a) => validate(a),
        Command::Replay(a) => replay_cmd(a),
    };
    ExitCode::from(code)
}
