use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use hashtopic::corpus::{self, FilterRules};
use hashtopic::experiment::{run_planted_experiment, ExperimentConfig};
use hashtopic::pipeline::{self, LabelSettings, PipelineConfig};
use hashtopic::synthetic::{planted_corpus, PlantedConfig};
use hashtopic::SolverConfig;

#[derive(Parser)]
#[command(name = "hashtopic", version, about = "Hashtag-community seeded topic models for short texts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage from one configuration file.
    Pipeline(PipelineArgs),
    /// Filter and tokenize a raw JSONL corpus.
    Ingest(IngestArgs),
    /// Build the hashtag co-occurrence graph.
    Graph(GraphArgs),
    /// Detect communities in the hashtag graph.
    Communities(CommunitiesArgs),
    /// Label documents, down-sample and build the constraint matrix.
    Label(LabelArgs),
    /// Vectorize and fit the supervised and unsupervised factorizations.
    Fit(FitArgs),
    /// Write topic reports and the comparison of both fits.
    Report(ReportArgs),
    /// Write a planted-topic corpus in the raw JSONL format.
    Synth(SynthArgs),
    /// Compare supervised and unsupervised fits on planted-topic corpora.
    Experiment(ExperimentArgs),
}

/// Flags that override fields of the configuration file.
#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    min_chars: Option<usize>,
    #[arg(long)]
    min_df: Option<usize>,
    #[arg(long)]
    tau: Option<u64>,
    #[arg(long)]
    resolution: Option<f64>,
    #[arg(long)]
    num_communities: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    target_labeled_ratio: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    top_n: Option<usize>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
    #[arg(long, default_value_t = 160)]
    min_chars: usize,
    #[arg(long)]
    keep_retweets: bool,
    #[arg(long)]
    keep_replies: bool,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long)]
    docs: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
    #[arg(long, default_value_t = 2)]
    tau: u64,
}

#[derive(Args)]
struct CommunitiesArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    nodes: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
    #[arg(long, default_value_t = 0.3)]
    resolution: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct LabelArgs {
    #[arg(long)]
    docs: PathBuf,
    #[arg(long)]
    partition: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
    #[arg(long, default_value_t = 70)]
    num_communities: usize,
    #[arg(long, default_value_t = 80)]
    k: usize,
    #[arg(long, default_value_t = 0.5)]
    target_labeled_ratio: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    docs: PathBuf,
    #[arg(long)]
    constraint: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
    #[arg(long, default_value_t = 5)]
    min_df: usize,
    #[arg(long, default_value_t = 80)]
    k: usize,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    docs: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    /// Directory holding the `supervised/` and `unsupervised/` fits.
    #[arg(long)]
    fit_dir: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
    #[arg(long, default_value_t = 20)]
    top_n: usize,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 2000)]
    docs: usize,
    #[arg(long, default_value_t = 5)]
    topics: usize,
    #[arg(long, default_value_t = 3)]
    min_words: usize,
    #[arg(long, default_value_t = 8)]
    max_words: usize,
    #[arg(long, default_value_t = 0.0)]
    retweet_share: f64,
    #[arg(long, default_value_t = 0.0)]
    reply_share: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write `id<TAB>topic` lines for the planted topics here.
    #[arg(long)]
    topics_output: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long)]
    words_per_topic: Option<usize>,
    #[arg(long)]
    noise_words: Option<usize>,
    #[arg(long)]
    min_words: Option<usize>,
    #[arg(long)]
    max_words: Option<usize>,
    #[arg(long)]
    zipf: Option<f64>,
    #[arg(long)]
    topic_skew: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    resolution: Option<f64>,
}

fn apply_overrides(cfg: &mut PipelineConfig, o: Overrides) {
    if let Some(v) = o.input {
        cfg.input_path = Some(v);
    }
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = o.$field { cfg.$field = v; } )* };
    }
    set!(min_chars, min_df, tau, resolution, num_communities, k, target_labeled_ratio, max_iter, tol, top_n);
}

fn run_pipeline(args: PipelineArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => PipelineConfig::from_file(path)?,
        None => PipelineConfig::default(),
    };
    // Relative input paths in a config file are resolved against its directory.
    if let (Some(config), Some(input)) = (&args.config, &cfg.input_path) {
        if input.is_relative() {
            let base = config.parent().unwrap_or(Path::new("."));
            cfg.input_path = Some(base.join(input));
        }
    }
    apply_overrides(&mut cfg, args.overrides);
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = args.output_dir {
        cfg.output_dir = Some(dir);
    }
    let outcome = pipeline::run_pipeline(&cfg)?;
    let c = &outcome.manifest.comparison;
    eprintln!(
        "wrote {} artifacts to {}; supervised purity {:.3} nmi {:.3}, unsupervised purity {:.3} nmi {:.3}",
        pipeline::ARTIFACTS.len(),
        outcome.output_dir.display(),
        c.supervised.purity,
        c.supervised.nmi,
        c.unsupervised.purity,
        c.unsupervised.nmi
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Pipeline(args) => run_pipeline(args)?,
        Command::Ingest(a) => {
            let rules = FilterRules {
                min_chars: a.min_chars,
                drop_retweets: !a.keep_retweets,
                drop_replies: !a.keep_replies,
            };
            let stats = pipeline::ingest(&a.input, &rules, &a.output_dir).context("ingest")?;
            eprintln!("kept {} of {} documents", stats.kept_documents, stats.raw_documents);
        }
        Command::Graph(a) => {
            let stats = pipeline::graph(&a.docs, a.tau, &a.output_dir).context("graph")?;
            eprintln!("{} hashtags, {} edges", stats.hashtags, stats.edges);
        }
        Command::Communities(a) => {
            let stats = pipeline::communities(&a.graph, &a.nodes, a.resolution, a.seed, &a.output_dir)
                .context("communities")?;
            eprintln!("{} communities, modularity {:.4}", stats.communities, stats.modularity);
        }
        Command::Label(a) => {
            if a.num_communities > a.k {
                bail!("num_communities ({}) must not exceed k ({})", a.num_communities, a.k);
            }
            let settings = LabelSettings {
                num_communities: a.num_communities,
                k: a.k,
                target_labeled_ratio: a.target_labeled_ratio,
                seed: a.seed,
            };
            let stats = pipeline::label(&a.docs, &a.partition, &settings, &a.output_dir).context("label")?;
            eprintln!(
                "labeled fraction {:.3} over {} documents, {:.3} over {} after down-sampling",
                stats.labeled_fraction_before, stats.documents_before, stats.labeled_fraction_after, stats.documents_after
            );
        }
        Command::Fit(a) => {
            let solver = SolverConfig {
                k: a.k,
                max_iter: a.max_iter,
                tol: a.tol,
                seed: a.seed,
                ..SolverConfig::default()
            };
            let stats = pipeline::fit(&a.docs, &a.constraint, a.min_df, &solver, &a.output_dir).context("fit")?;
            eprintln!(
                "objective {:.6} supervised ({} iterations), {:.6} unsupervised ({} iterations)",
                stats.supervised_objective,
                stats.supervised_iterations,
                stats.unsupervised_objective,
                stats.unsupervised_iterations
            );
        }
        Command::Report(a) => {
            let c = pipeline::report(&a.docs, &a.vocab, &a.fit_dir, a.top_n, &a.output_dir).context("report")?;
            eprintln!("supervised nmi {:.3}, unsupervised nmi {:.3}", c.supervised.nmi, c.unsupervised.nmi);
        }
        Command::Synth(a) => {
            let cfg = PlantedConfig {
                num_docs: a.docs,
                num_topics: a.topics,
                min_words: a.min_words,
                max_words: a.max_words,
                retweet_share: a.retweet_share,
                reply_share: a.reply_share,
                seed: a.seed,
                ..PlantedConfig::default()
            };
            if cfg.min_words > cfg.max_words || cfg.num_topics == 0 {
                bail!("need 1 or more topics and min_words <= max_words");
            }
            let planted = planted_corpus(&cfg);
            corpus::write_raw(&a.output, &planted.documents)?;
            if let Some(path) = a.topics_output {
                let lines: String = planted
                    .documents
                    .iter()
                    .zip(&planted.topics)
                    .map(|(d, t)| format!("{}\t{t}\n", d.id))
                    .collect();
                std::fs::write(&path, lines).with_context(|| path.display().to_string())?;
            }
        }
        Command::Experiment(a) => {
            for seed in 0..a.seeds {
                let mut cfg = ExperimentConfig::planted(seed);
                macro_rules! set {
                    ($($flag:ident => $($field:ident).+),*) => { $( if let Some(v) = a.$flag { cfg.$($field).+ = v; } )* };
                }
                set!(words_per_topic => corpus.words_per_topic, noise_words => corpus.noise_words,
                     min_words => corpus.min_words, max_words => corpus.max_words, zipf => corpus.zipf_exponent, topic_skew => corpus.topic_skew,
                     k => solver.k, resolution => resolution);
                let out = run_planted_experiment(&cfg)?;
                let c = out.comparison;
                println!(
                    "seed {seed}: communities {} labeled {:.3} | supervised purity {:.4} nmi {:.4} | unsupervised purity {:.4} nmi {:.4}",
                    out.communities, out.labeled_fraction, c.supervised.purity, c.supervised.nmi, c.unsupervised.purity, c.unsupervised.nmi
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
