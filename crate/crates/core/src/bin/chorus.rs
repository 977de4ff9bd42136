//! Command-line harness over the consensus-draft engine and its simulated
//! model. `run` executes one session, `sweep` a configured sweep file,
//! `ablate` the structure x fuzzy grid.

use chorus_core::TokenId;
use chorus_core::bench::{
    RunSetup, SweepSpec, emit_csv, emit_csv_file, emit_json_file, run_ablation, run_sweep,
};
use chorus_core::config::PoolStructure;
use chorus_core::engine::{Session, best_of_n, path_answer};
use chorus_core::model::{ModelOracle, SimModel};
use clap::{Args, Parser, Subcommand};
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "chorus",
    version,
    about = "consensus-draft speculative decoding harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one decoding session and print a summary.
    Run(RunArgs),
    /// Run the sweep described by a spec file and emit its table.
    Sweep(SweepArgs),
    /// Run the structure x fuzzy ablation grid.
    Ablate(AblateArgs),
}

/// Flags mirroring the engine and model config fields. Anything left unset
/// falls back to the config file (when given), then to the defaults.
#[derive(Args, Clone)]
struct ConfigFlags {
    /// Flat key=value config file applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    num_paths: Option<u32>,
    #[arg(long)]
    suffix_len: Option<usize>,
    #[arg(long)]
    max_draft_len: Option<usize>,
    #[arg(long)]
    edit_tolerance: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    max_seq_len: Option<usize>,
    #[arg(long)]
    rng_seed: Option<u64>,
    #[arg(long)]
    pool_structure: Option<PoolStructure>,
    #[arg(long)]
    fuzzy: Option<bool>,
    #[arg(long)]
    vocab_size: Option<u32>,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    transition_seed: Option<u64>,
    #[arg(long)]
    base_concentration: Option<f64>,
    #[arg(long)]
    eos_token: Option<u32>,
    #[arg(long)]
    eos_prob: Option<f64>,
    /// Opaque conditioning label for the simulated model.
    #[arg(long)]
    prompt: Option<u64>,
}

impl ConfigFlags {
    fn build(&self) -> Result<RunSetup, String> {
        let mut setup = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
                RunSetup::from_kv_text(&text).map_err(|e| e.to_string())?
            }
            None => RunSetup::default(),
        };
        macro_rules! apply {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = self.$field { $target = v; })*
            };
        }
        apply! {
            num_paths => setup.engine.num_paths,
            suffix_len => setup.engine.suffix_len,
            max_draft_len => setup.engine.max_draft_len,
            edit_tolerance => setup.engine.edit_tolerance,
            alpha => setup.engine.alpha,
            temperature => setup.engine.temperature,
            max_seq_len => setup.engine.max_seq_len,
            rng_seed => setup.engine.rng_seed,
            pool_structure => setup.engine.pool_structure,
            fuzzy => setup.engine.fuzzy,
            vocab_size => setup.model.vocab_size,
            order => setup.model.order,
            transition_seed => setup.model.transition_seed,
            base_concentration => setup.model.base_concentration,
            eos_prob => setup.model.eos_prob,
            prompt => setup.prompt,
        }
        if let Some(t) = self.eos_token {
            setup.model.eos_token = TokenId(t);
        }
        Ok(setup)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    flags: ConfigFlags,
    /// Sample one token per step instead of drafting.
    #[arg(long)]
    vanilla: bool,
    /// Write the session trace as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Print the consensus-graph debug dump of every drafting step.
    #[arg(long)]
    dump_graph: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep spec file (see the bench module docs for the grammar).
    #[arg(long)]
    spec: PathBuf,
    /// Write the CSV table here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Also write the JSON mirror here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    flags: ConfigFlags,
    /// Seeded repetitions per grid cell.
    #[arg(long, default_value_t = 3)]
    trials: u32,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Ablate(args) => cmd_ablate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<(), String> {
    let setup = args.flags.build()?;
    let model = SimModel::new(setup.model).map_err(|e| e.to_string())?;
    if args.dump_graph && setup.engine.pool_structure != PoolStructure::Dag {
        eprintln!("note: --dump-graph only renders the dag structure");
    }

    let mut session = Session::new(setup.engine.clone(), &model, setup.prompt, !args.vanilla)
        .map_err(|e| e.to_string())?;
    if args.dump_graph {
        session.set_dump_sink(|path, dump| {
            println!("# path {path}");
            print!("{dump}");
        });
    }
    let trace = session.run();

    println!(
        "paths={} tokens={} steps={} mean_accept_len={:.4} tokens_per_step={:.4} mean_draft_us={:.3}",
        trace.meta.num_paths,
        trace.total_tokens(),
        trace.steps.len(),
        trace.mean_accept_len(),
        trace.tokens_per_step(),
        trace.mean_draft_us(),
    );

    let eos = model.eos_token();
    let best = best_of_n(&trace.paths, |p| {
        let records = p.records();
        if records.is_empty() {
            return f64::MIN;
        }
        records.iter().map(|r| r.prob).sum::<f64>() / records.len() as f64
    })
    .and_then(|p| path_answer(p, eos));
    match (trace.answer, best) {
        (Some(majority), Some(best)) => {
            println!("answer majority={majority} best_of_n(mean_prob)={best}")
        }
        _ => println!("answer none (no non-EOS tokens)"),
    }

    if let Some(path) = &args.trace {
        let file =
            fs::File::create(path).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        trace
            .write_jsonl(std::io::BufWriter::new(file))
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        println!("trace written to {}", path.display());
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), String> {
    let text = fs::read_to_string(&args.spec)
        .map_err(|e| format!("cannot read {}: {e}", args.spec.display()))?;
    let spec = SweepSpec::from_kv_text(&text).map_err(|e| e.to_string())?;
    let result = run_sweep(&spec).map_err(|e| e.to_string())?;
    write_tables(&result, args.csv.as_deref(), args.json.as_deref())
}

fn cmd_ablate(args: AblateArgs) -> Result<(), String> {
    let setup = args.flags.build()?;
    let result = run_ablation(&setup.engine, &setup.model, setup.prompt, args.trials)
        .map_err(|e| e.to_string())?;
    write_tables(&result, args.csv.as_deref(), args.json.as_deref())
}

fn write_tables(
    result: &chorus_core::bench::SweepResult,
    csv: Option<&std::path::Path>,
    json: Option<&std::path::Path>,
) -> Result<(), String> {
    match csv {
        Some(path) => emit_csv_file(result, path).map_err(|e| e.to_string())?,
        None => emit_csv(result, std::io::stdout().lock()).map_err(|e| e.to_string())?,
    }
    if let Some(path) = json {
        emit_json_file(result, path).map_err(|e| e.to_string())?;
    }
    Ok(())
}
