use std::path::{Path, PathBuf};
use std::process::ExitCode as ProcessExit;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use darank::config::Overrides;
use darank::corpus::{da_histogram, import_corpus, load_corpus, save_corpus, ImportFormat};
use darank::pipeline::{evaluate_artifact, RunArtifact};
use darank::report::{emit_report, render_correlations, render_table, write_json};
use darank::{compare_rfs, correlate, ontologies, run_pipeline, DarankError, GeneratorKind, RunConfig};
use darank_core::{parse_mr, render_prompt, sample_exemplars, PromptStyle, RankingFunction, Split};

#[derive(Parser)]
#[command(name = "darank", version, about = "Overgenerate-and-rank data-to-text generation with dialogue-act control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline from a config file.
    Run(RunArgs),
    /// Recompute the report of an existing run.
    Eval {
        #[arg(long)]
        run: PathBuf,
        /// Output directory for report.json and report.txt.
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-rank the pools of a run under several ranking functions.
    CompareRfs {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, value_delimiter = ',', default_values = ["rf1", "rf2", "rf2da", "rf3", "rf4", "rf5"], value_parser = parse_rf)]
        rf: Vec<RankingFunction>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Correlate pseudo-metrics with slot accuracy over all candidates.
    Correlate {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    #[command(subcommand)]
    Prompts(PromptsCommand),
    #[command(subcommand)]
    Corpus(CorpusCommand),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_style)]
    prompt_style: Option<PromptStyle>,
    /// Number of exemplars per prompt.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    top_p: Option<f64>,
    #[arg(long, value_enum)]
    generator: Option<GeneratorKind>,
    /// Replay fixture directory.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Record every completion as a replay fixture into this directory.
    #[arg(long)]
    record: Option<PathBuf>,
    #[arg(long, value_parser = parse_rf)]
    rf: Option<RankingFunction>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accept a scorer service running in stub mode.
    #[arg(long)]
    allow_stub_service: bool,
}

#[derive(Subcommand)]
enum PromptsCommand {
    /// Print the prompt for one MR.
    Render {
        /// Built-in domain or ontology file.
        #[arg(long, default_value = "viggo")]
        domain: String,
        #[arg(long, value_parser = parse_style)]
        style: PromptStyle,
        /// Target MR, e.g. "suggest(name[Portal 2])".
        #[arg(long)]
        mr: String,
        /// Canonical corpus to draw exemplars from.
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Viggo,
    Rnnlg,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Dev,
    Test,
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Convert a released corpus file to the canonical CSV format.
    Import {
        #[arg(long, value_enum)]
        format: FormatArg,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value = "viggo")]
        domain: String,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
    },
    /// Print the dialogue-act histogram of a canonical corpus file.
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "viggo")]
        domain: String,
    },
}

fn parse_rf(s: &str) -> Result<RankingFunction, String> {
    s.parse().map_err(|e: darank_core::RankingError| e.to_string())
}

fn parse_style(s: &str) -> Result<PromptStyle, String> {
    s.parse().map_err(|e: darank_core::prompts::UnknownStyle| e.to_string())
}

fn split(s: SplitArg) -> Split {
    match s {
        SplitArg::Train => Split::Train,
        SplitArg::Dev => Split::Dev,
        SplitArg::Test => Split::Test,
    }
}

fn run(args: RunArgs) -> Result<(), DarankError> {
    let mut cfg = RunConfig::load(&args.config)?;
    cfg.apply(Overrides {
        seed: args.seed,
        prompt_style: args.prompt_style,
        n_exemplars: args.n,
        k: args.k,
        temperature: args.temperature,
        top_p: args.top_p,
        generator: args.generator,
        fixtures: args.fixtures,
        record: args.record,
        rf: args.rf,
        out_dir: args.out,
        allow_stub_service: args.allow_stub_service,
    })?;
    let out = run_pipeline(&cfg)?;
    print!("{}", render_table(&out.report.rows));
    eprintln!("wrote {}", out.out_dir.display());
    Ok(())
}

fn report_to(dir: &Path, stem: &str, report: &darank::report::ReportFile) -> Result<(), DarankError> {
    emit_report(dir, stem, report)?;
    print!("{}", render_table(&report.rows));
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), DarankError> {
    match cli.command {
        Command::Run(args) => run(args),
        Command::Eval { run, out } => report_to(&out, "report", &evaluate_artifact(&RunArtifact::load(&run)?)),
        Command::CompareRfs { run, rf, out } => report_to(&out, "compare", &compare_rfs(&RunArtifact::load(&run)?, &rf)?),
        Command::Correlate { run, out } => {
            let table = correlate(&RunArtifact::load(&run)?);
            if let Some(dir) = out {
                write_json(&dir.join("correlation.json"), &table)?;
                let txt = dir.join("correlation.txt");
                std::fs::write(&txt, render_correlations(&table)).map_err(|e| DarankError::io(txt, e))?;
            }
            print!("{}", render_correlations(&table));
            Ok(())
        }
        Command::Prompts(PromptsCommand::Render { domain, style, mr, train, n, seed }) => {
            let ontology = ontologies::resolve(&domain)?;
            let target = parse_mr(&mr, &ontology).map_err(|e| DarankError::Config(format!("--mr: {e}")))?;
            let exemplars = match train {
                Some(path) => {
                    let items = load_corpus(&path, &ontology, Split::Train)?;
                    let pool = darank::corpus::exemplar_pool(&items);
                    sample_exemplars(&pool, &target.dialogue_act, n, seed).map_err(|e| DarankError::Config(e.to_string()))?
                }
                None if n > 0 => return Err(DarankError::Config("--n needs --train".into())),
                None => Vec::new(),
            };
            let prompt =
                render_prompt(style, &exemplars, &target, &ontology).map_err(|e| DarankError::Config(e.to_string()))?;
            print!("{}", prompt.rendered);
            Ok(())
        }
        Command::Corpus(CorpusCommand::Import { format, input, output, domain, split: s }) => {
            let ontology = ontologies::resolve(&domain)?;
            let format = match format {
                FormatArg::Viggo => ImportFormat::Viggo,
                FormatArg::Rnnlg => ImportFormat::Rnnlg,
            };
            let (items, summary) = import_corpus(&input, format, &ontology, split(s))?;
            save_corpus(&output, &items)?;
            eprintln!("{} rows, {} items", summary.rows, summary.items);
            for (da, n) in &summary.skipped {
                eprintln!("skipped {n} rows with act `{da}`");
            }
            Ok(())
        }
        Command::Corpus(CorpusCommand::Stats { input, domain }) => {
            let ontology = ontologies::resolve(&domain)?;
            let items = load_corpus(&input, &ontology, Split::Test)?;
            for (da, n) in da_histogram(&items) {
                println!("{da:<22} {n:>6}");
            }
            println!("{:<22} {:>6}", "total", items.len());
            Ok(())
        }
    }
}

fn main() -> ProcessExit {
    let cli = Cli::parse();
    match dispatch(cli).context("darank") {
        Ok(()) => ProcessExit::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<DarankError>().map_or(1, |d| d.exit_code() as u8);
            ProcessExit::from(code)
        }
    }
}
