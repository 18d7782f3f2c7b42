use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use disambig_core::corpus::{
    generate_synthetic_corpus, load_clusters, save_clusters, save_dataset, split_blocks,
    SynthConfig,
};
use disambig_core::evaluation::Facet;
use disambig_core::pairwise_model::ModelFile;
use serde::Serialize;

use crate::config::RunConfig;
use crate::pipeline::{self, Axis, Result};
use crate::CliError;

pub const MODEL_FILE: &str = "model.json";
pub const TRAIN_REPORT: &str = "train_report.json";
pub const CLUSTERS_FILE: &str = "clusters.json";

#[derive(Debug, Parser)]
#[command(
    name = "disambig",
    version,
    about = "Author name disambiguation harness"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand; each one overrides the config file.
#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Corpus directory.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "DISAMBIG_JOBS")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus with gold clusters and block splits.
    Synth(SynthArgs),
    /// Train the pairwise models and tune eps on validation.
    Train(TrainArgs),
    /// Random search over tree hyperparameters.
    Tune {
        #[arg(long, default_value_t = 20)]
        budget: usize,
    },
    /// Cluster signatures with a trained model.
    Cluster {
        #[arg(long)]
        model: PathBuf,
        /// Restrict to one split (train, val, test); all blocks otherwise.
        #[arg(long)]
        split: Option<String>,
    },
    /// Score predicted clusters against gold.
    Eval(EvalArgs),
    /// Retrain under each variant and compare test B³ with the baseline.
    Ablate {
        /// Comma-separated axes such as drop:embedding, linkage:ward, dbscan,
        /// linear, no-nameless, no-monotonicity, train-cap:5000.
        #[arg(long, value_delimiter = ',')]
        axes: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        seeds: Vec<u64>,
    },
    /// Per-facet B³ tables for predicted clusters.
    Facets(EvalArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Generator settings as TOML; defaults otherwise.
    #[arg(long)]
    pub synth_config: Option<PathBuf>,
    #[arg(long)]
    pub authors: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Add a knocked-out copy of the training pairs.
    #[arg(long)]
    pub knockout: bool,
    #[arg(long)]
    pub hp_budget: Option<usize>,
    #[arg(long)]
    pub eps_budget: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted clusters file.
    #[arg(long)]
    pub pred: PathBuf,
    /// Gold clusters file; the corpus gold otherwise.
    #[arg(long)]
    pub gold: Option<PathBuf>,
    #[arg(long)]
    pub split: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub facets: Vec<String>,
}

impl Cli {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.global.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let g = &self.global;
        if let Some(d) = &g.data {
            cfg.data.dir = Some(d.clone());
        }
        if let Some(s) = g.seed {
            cfg.seed = s;
        }
        if let Some(o) = &g.out {
            cfg.output_dir = o.clone();
        }
        if g.jobs.is_some() {
            cfg.jobs = g.jobs;
        }
        if let Command::Train(t) = &self.command {
            cfg.knockout.enabled |= t.knockout;
            if let Some(b) = t.hp_budget {
                cfg.tuning.hp_budget = b;
            }
            if let Some(b) = t.eps_budget {
                cfg.tuning.eps_budget = b;
            }
        }
        Ok(cfg)
    }
}

fn parse_split(s: &Option<String>) -> Result<Option<disambig_core::corpus::Split>> {
    s.as_deref()
        .filter(|s| *s != "all")
        .map(str::parse)
        .transpose()
        .map_err(|e: disambig_core::Error| CliError::Usage(e.to_string()))
}

fn parse_facets(names: &[String]) -> Result<Vec<Facet>> {
    names
        .iter()
        .map(|n| {
            n.parse()
                .map_err(|e: disambig_core::Error| CliError::Usage(e.to_string()))
        })
        .collect()
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Runs a parsed command line, printing reports to stdout.
pub fn run(cli: Cli) -> Result<()> {
    let cfg = cli.resolve()?;
    if let Some(jobs) = cfg.jobs {
        // ignore the error when a pool already exists (repeated in-process runs)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let out = cfg.output_dir.clone();
    match &cli.command {
        Command::Synth(args) => {
            let mut synth = match &args.synth_config {
                Some(p) => {
                    let text = fs::read_to_string(p)?;
                    toml::from_str::<SynthConfig>(&text)
                        .map_err(|e| CliError::Usage(format!("invalid synth config: {e}")))?
                }
                None => SynthConfig::default(),
            };
            if let Some(n) = args.authors {
                synth.num_authors = n;
            }
            let dataset = generate_synthetic_corpus(cfg.seed, &synth)?;
            let s = &cfg.split;
            let dataset = split_blocks(&dataset, cfg.seed, (s.train, s.val, s.test))?;
            save_dataset(&dataset, &out)?;
            fs::write(
                out.join("synth_config.toml"),
                toml::to_string_pretty(&synth).expect("synth config serializes"),
            )?;
            cfg.write_resolved(&out)?;
            println!("signatures\t{}", dataset.signatures.len());
            println!("authors\t{}", dataset.gold()?.num_clusters());
        }
        Command::Train(_) => {
            let dataset = pipeline::load_corpus(&cfg)?;
            let counts = pipeline::name_counts(&cfg, &dataset)?;
            let result = pipeline::train(&dataset, &counts, &cfg)?;
            fs::create_dir_all(&out)?;
            result.model.save(&out.join(MODEL_FILE))?;
            write_json(&out.join(TRAIN_REPORT), &result.report)?;
            cfg.write_resolved(&out)?;
            let r = &result.report;
            println!("train_pairs\t{}", r.pairs.train);
            println!("augmented_pairs\t{}", r.pairs.augmented);
            println!("val_pairs\t{}", r.pairs.val);
            let na = |v: Option<f64>| v.map_or_else(|| "NA".into(), |v| v.to_string());
            println!("val_auroc\t{}", na(r.val_auroc));
            println!("eps\t{}", r.eps);
            println!("val_b3_f1\t{}", r.val_b3_f1);
        }
        Command::Tune { budget } => {
            let dataset = pipeline::load_corpus(&cfg)?;
            let counts = pipeline::name_counts(&cfg, &dataset)?;
            let trials = pipeline::tune(&dataset, &counts, &cfg, *budget)?;
            let best = pipeline::best_trial(&trials);
            fs::create_dir_all(&out)?;
            let rows: Vec<_> = trials
                .iter()
                .map(
                    |t| serde_json::json!({"hyperparams": t.hyperparams, "val_auroc": t.val_auroc}),
                )
                .collect();
            write_json(&out.join("tune_report.json"), &rows)?;
            let mut tuned = cfg.clone();
            tuned.model.hyperparams = best.hyperparams.clone();
            tuned.write_resolved(&out)?;
            for (t, trial) in trials.iter().enumerate() {
                println!("trial\t{t}\t{}", trial.val_auroc);
            }
            println!("best_val_auroc\t{}", best.val_auroc);
        }
        Command::Cluster { model, split } => {
            let split = parse_split(split)?;
            let dataset = match split {
                Some(_) => pipeline::load_corpus(&cfg)?,
                None => pipeline::load_unsplit(&cfg)?,
            };
            let counts = pipeline::name_counts(&cfg, &dataset)?;
            let feats = pipeline::featurizer(&dataset, &counts, &cfg)?;
            let model = ModelFile::load(model, feats.schema())?;
            drop(feats);
            let pred = pipeline::cluster(&dataset, &counts, &cfg, &model, split)?;
            fs::create_dir_all(&out)?;
            save_clusters(&out.join(CLUSTERS_FILE), &pred)?;
            cfg.write_resolved(&out)?;
            println!("signatures\t{}", pred.len());
            println!("clusters\t{}", pred.num_clusters());
        }
        Command::Eval(args) | Command::Facets(args) => {
            let split = parse_split(&args.split)?;
            let facets = parse_facets(&args.facets)?;
            if matches!(cli.command, Command::Facets(_)) && facets.is_empty() {
                return Err(CliError::Usage("facets needs --facets".into()));
            }
            let mut dataset = match split {
                Some(_) => pipeline::load_corpus(&cfg)?,
                None => pipeline::load_unsplit(&cfg)?,
            };
            if let Some(g) = &args.gold {
                dataset.gold = Some(load_clusters(g)?);
            }
            let pred = load_clusters(&args.pred)?;
            let report = pipeline::evaluate(&pred, &dataset, split, &facets)?;
            fs::create_dir_all(&out)?;
            write_json(&out.join("eval_report.json"), &report)?;
            cfg.write_resolved(&out)?;
            if matches!(cli.command, Command::Facets(_)) {
                for f in &report.facets {
                    print!("{}", f.to_tsv());
                }
            } else {
                print!("{}", report.to_text());
            }
        }
        Command::Ablate { axes, seeds } => {
            let axes: Vec<Axis> = axes.iter().map(|a| a.parse()).collect::<Result<_>>()?;
            let dataset = pipeline::load_corpus(&cfg)?;
            let counts = pipeline::name_counts(&cfg, &dataset)?;
            let table = pipeline::ablate(&dataset, &counts, &cfg, &axes, seeds)?;
            fs::create_dir_all(&out)?;
            write_json(&out.join("ablation.json"), &table)?;
            fs::write(out.join("ablation.tsv"), table.to_tsv())?;
            cfg.write_resolved(&out)?;
            print!("{}", table.to_tsv());
        }
    }
    Ok(())
}
