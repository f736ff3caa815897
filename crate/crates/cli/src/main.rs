use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use snipflow::classifier::{cross_validate, grid_search_c, tokenize, CvReport, SvmModel, TrainingSet};
use snipflow::pipeline::stages::load_training_data;
use snipflow::pipeline::{ContextSetting, Pipeline, PipelineConfig, PipelineError, StageOutcome};
use snipflow::synth::{labeled_corpus, SYNTHETIC_VARIANTS};

/// Mine Q&A code snippets for security API misuse and find their clones in
/// app source trees.
#[derive(Parser)]
#[command(name = "snipflow", version)]
struct Cli {
    /// Pipeline configuration file.
    #[arg(long, global = true, default_value = "pipeline.toml")]
    config: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for training and fold assignment.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Overrides {
    /// Rerun even if inputs and params are unchanged.
    #[arg(long)]
    force: bool,
    /// SVM penalty.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Block similarity threshold for clone matching.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    no_class_filter: bool,
    /// auto, client-server or non-client-server.
    #[arg(long)]
    context: Option<ContextSetting>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the dump into snippet records.
    Ingest(Overrides),
    /// Keep snippets that use security APIs.
    Filter(Overrides),
    /// Label snippets with the rule catalog.
    Label(Overrides),
    /// Train the SVM on rule labels.
    Train(Overrides),
    /// Combine rule and SVM verdicts.
    Classify(Overrides),
    /// Lower snippets and corpus apps to IR.
    Compile(Overrides),
    /// Match snippets against corpus apps.
    Detect(Overrides),
    /// Write the summary and feedback tables.
    Report(Overrides),
    /// Run a range of stages in order.
    Run {
        #[arg(long, default_value_t = 1)]
        from: u8,
        #[arg(long, default_value_t = 5)]
        to: u8,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Classify Java files (or stdin) with a trained model.
    Predict {
        /// Model JSON (default: the one under the config's output dir).
        #[arg(long)]
        model: Option<PathBuf>,
        files: Vec<PathBuf>,
    },
    /// Cross-validate the SVM.
    Cv {
        /// Use the generated rule-fixture corpus instead of pipeline labels.
        #[arg(long)]
        synthetic: bool,
        #[arg(long)]
        folds: Option<usize>,
        /// Fixed penalty; otherwise C is grid-searched.
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
    },
}

const C_GRID: [f64; 6] = [0.1, 0.644, 1.0, 5.0, 10.0, 50.0];

fn load_config(cli: &Cli, o: &Overrides) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = PipelineConfig::load(&cli.config)?;
    if let Some(s) = cli.seed {
        cfg.classifier.seed = s;
    }
    if let Some(c) = o.c {
        cfg.classifier.c = c;
    }
    if let Some(e) = o.epochs {
        cfg.classifier.epochs = e;
    }
    if let Some(t) = o.threshold {
        cfg.matching.similarity_threshold = t;
    }
    if o.no_class_filter {
        cfg.matching.candidate_class_filter = false;
    }
    if let Some(ctx) = o.context {
        cfg.context = ctx;
    }
    Ok(cfg)
}

fn print_outcomes(done: &[(&str, StageOutcome)]) {
    for (name, outcome) in done {
        let word = match outcome {
            StageOutcome::Ran => "ran",
            StageOutcome::Skipped => "up to date",
        };
        println!("{name}: {word}");
    }
}

fn print_cv(r: &CvReport) {
    for (i, f) in r.folds.iter().enumerate() {
        println!(
            "fold {}: accuracy {:.3} precision {:.3} recall {:.3}",
            i + 1,
            f.accuracy,
            f.precision,
            f.recall
        );
    }
    println!(
        "mean: accuracy {:.3} precision {:.3} recall {:.3}",
        r.mean_accuracy, r.mean_precision, r.mean_recall
    );
}

fn data_err(e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Data(e.to_string())
}

fn run(cli: &Cli) -> Result<(), PipelineError> {
    match &cli.command {
        Command::Ingest(o)
        | Command::Filter(o)
        | Command::Label(o)
        | Command::Train(o)
        | Command::Classify(o)
        | Command::Compile(o)
        | Command::Detect(o)
        | Command::Report(o) => {
            let name = match &cli.command {
                Command::Ingest(_) => "ingest",
                Command::Filter(_) => "filter",
                Command::Label(_) => "label",
                Command::Train(_) => "train",
                Command::Classify(_) => "classify",
                Command::Compile(_) => "compile",
                Command::Detect(_) => "detect",
                _ => "report",
            };
            let p = Pipeline::new(load_config(cli, o)?)?;
            let outcome = p.run_stage(name, o.force)?;
            print_outcomes(&[(name, outcome)]);
        }
        Command::Run { from, to, overrides } => {
            if from > to {
                return Err(PipelineError::Config(format!("--from {from} is after --to {to}")));
            }
            let p = Pipeline::new(load_config(cli, overrides)?)?;
            print_outcomes(&p.run(*from..=*to, overrides.force)?);
        }
        Command::Predict { model, files } => {
            let path = match model {
                Some(m) => m.clone(),
                None => PipelineConfig::load(&cli.config)?.model_path(),
            };
            let text = std::fs::read_to_string(&path)
                .map_err(|e| PipelineError::Config(format!("model {}: {e}", path.display())))?;
            let svm = SvmModel::from_json(&text).map_err(data_err)?;
            let mut inputs = Vec::new();
            if files.is_empty() {
                let mut s = String::new();
                std::io::stdin().read_to_string(&mut s).map_err(data_err)?;
                inputs.push(("-".to_string(), s));
            }
            for f in files {
                let s = std::fs::read_to_string(f)
                    .map_err(|e| PipelineError::Data(format!("{}: {e}", f.display())))?;
                inputs.push((f.display().to_string(), s));
            }
            for (name, code) in inputs {
                let p = svm.predict_text(&code);
                let label = if p.label == 1 { "Insecure" } else { "Secure" };
                println!("{name}\t{label}\t{:.4}", p.margin);
            }
        }
        Command::Cv {
            synthetic,
            folds,
            c,
            epochs,
        } => {
            let (docs, y, defaults) = if *synthetic {
                let corpus = labeled_corpus(SYNTHETIC_VARIANTS, cli.seed.unwrap_or(42));
                let docs = corpus.iter().map(|s| tokenize(&s.code)).collect::<Vec<_>>();
                let y = corpus.iter().map(|s| s.label.as_target()).collect();
                (docs, y, PipelineConfig::new("", "", "").classifier)
            } else {
                let cfg = load_config(cli, &Overrides::default())?;
                let (docs, y) = load_training_data(&cfg)?;
                (docs, y, cfg.classifier)
            };
            let k = folds.unwrap_or(defaults.folds);
            let epochs = epochs.unwrap_or(defaults.epochs);
            let seed = cli.seed.unwrap_or(defaults.seed);
            let ts = TrainingSet::from_documents(&docs, y).map_err(data_err)?;
            let (pos, neg) = ts.class_counts();
            println!("{} snippets ({pos} insecure, {neg} secure)", ts.len());
            let c = match c {
                Some(c) => *c,
                None => {
                    let g = grid_search_c(&ts, &C_GRID, k, epochs, seed).map_err(data_err)?;
                    for (c, acc) in &g.scores {
                        println!("C {c}: accuracy {acc:.3}");
                    }
                    g.best_c
                }
            };
            println!("C = {c}");
            print_cv(&cross_validate(&ts, k, c, epochs, seed).map_err(data_err)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --jobs: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
