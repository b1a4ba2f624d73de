use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use cure::config::{defaults_table, load_config, LabelMethod};
use cure::label::Stopwords;
use cure::pipeline::{self, LabelInputs};
use cure::vocab::load_pretrained;
use cure::{synth, Error, Result};

/// Unsupervised relation extraction over pre-parsed, entity-annotated text.
#[derive(Parser)]
#[command(name = "cure", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `key=value` override; repeatable, wins over the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with planted relations.
    Synth {
        #[arg(long, default_value_t = 4)]
        relations: usize,
        #[arg(long, default_value_t = 25)]
        pairs: usize,
        #[arg(long, default_value_t = 3)]
        sentences: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Extract the shortest dependency path of every corpus record.
    ExtractPaths {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the path encoder-decoder.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        paths_file: PathBuf,
        #[arg(long)]
        out_checkpoint: PathBuf,
        /// Per-epoch loss CSV.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Encode every pair into a relation vector.
    Encode {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        paths_file: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cluster relation vectors into K groups.
    Cluster {
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
        /// Centroid file; defaults to centroids.jsonl beside --out.
        #[arg(long)]
        centroids: Option<PathBuf>,
    },
    /// Label every cluster with relation words.
    Label {
        #[arg(long)]
        clusters: PathBuf,
        #[arg(long)]
        paths_file: PathBuf,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long, default_value = "wvs", value_parser = parse_method)]
        method: LabelMethod,
        #[arg(long, default_value_t = 5)]
        top: usize,
        /// Stopword list; the built-in list is used otherwise.
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score clusters against gold relations.
    Evaluate {
        #[arg(long)]
        clusters: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Word vectors used to map labels onto gold relation names.
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every stage from the config into out_dir.
    Pipeline {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

fn parse_method(s: &str) -> Result<LabelMethod, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("CURE_THREADS") else {
        return Ok(());
    };
    let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| Error::Config(format!("CURE_THREADS={v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Synth { relations, pairs, sentences, seed, out_dir } => {
            let corpus = synth::generate(relations, pairs, sentences, seed)?;
            corpus.write(&out_dir)?;
            log::info!("wrote {} records to {}", corpus.sentences.len(), out_dir.display());
        }
        Command::ExtractPaths { corpus, out } => {
            let n = pipeline::extract_paths(&corpus, &out)?;
            log::info!("extracted {n} paths");
        }
        Command::Train { cfg, paths_file, out_checkpoint, log } => {
            let rc = load_config(cfg.config.as_deref(), &cfg.overrides)?;
            pipeline::train_stage(&rc.model, rc.min_freq, rc.min_paths, &paths_file, &out_checkpoint, log.as_deref())?;
        }
        Command::Encode { checkpoint, paths_file, out } => {
            pipeline::encode_stage(&checkpoint, &paths_file, &out)?;
        }
        Command::Cluster { vectors, k, out, centroids } => {
            let centroids = centroids.unwrap_or_else(|| pipeline::centroids_path(&out));
            pipeline::cluster_stage(&vectors, k, &out, &centroids)?;
        }
        Command::Label { clusters, paths_file, embeddings, method, top, stopwords, out } => {
            if top == 0 {
                return Err(Error::Config("top must be at least 1".into()));
            }
            let vectors = match (&embeddings, method) {
                (Some(p), _) => Some(load_pretrained(p)?),
                (None, LabelMethod::Wvs) => return Err(Error::Config("--method wvs requires --embeddings".into())),
                (None, LabelMethod::Cw) => None,
            };
            let stopwords = match stopwords {
                Some(p) => Stopwords::load(p)?,
                None => Stopwords::default(),
            };
            let inputs = LabelInputs { stopwords: &stopwords, vectors: vectors.as_ref(), method, top };
            pipeline::label_stage(&clusters, &paths_file, &inputs, &out)?;
        }
        Command::Evaluate { clusters, labels, gold, embeddings, out } => {
            let vectors = load_pretrained(&embeddings)?;
            let ev = pipeline::evaluate_stage(&clusters, &labels, &gold, &vectors, &out)?;
            print!("{}", ev.to_csv());
        }
        Command::Pipeline { cfg } => {
            let rc = load_config(cfg.config.as_deref(), &cfg.overrides)?;
            let manifest = pipeline::run_pipeline(&rc)?;
            for s in &manifest.stages {
                log::info!("{}: {:.2}s", s.stage, s.seconds);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let matches = Cli::command().after_help(defaults_table()).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
