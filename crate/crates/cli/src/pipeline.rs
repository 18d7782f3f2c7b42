//! The end-to-end pipeline as plain functions, shared by the subcommands and
//! the integration tests.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use disambig_core::blocking::{build_blocks, Block};
use disambig_core::clusterer::{
    block_matrices, cluster_blocks, partition_from_matrices, tune_eps, BlockMatrix, ClusterParams,
    Linkage, Method,
};
use disambig_core::corpus::{
    build_name_counts, knockout_augment, load_name_counts, load_splits, split_blocks, Dataset,
    NameCountsTable, Partition, Split,
};
use disambig_core::evaluation::{auroc, b3, facet_report, pairwise_macro_f1, Facet, FacetReport};
use disambig_core::featurizer::{FeatureGroup, Featurizer};
use disambig_core::pairwise_model::{
    label_pairs, mask_pairs, random_search, sample_pair_ids, sample_pairs, train_gbt, train_linear,
    tune_hyperparameters, EnsembleClassifier, HyperParams, LabeledPair, ModelFile, PairModel,
    Trial,
};
use disambig_core::Error;
use serde::Serialize;

use crate::config::{ClassifierKind, RunConfig};
use crate::CliError;

pub type Result<T> = std::result::Result<T, CliError>;

// Offsets added to the run seed so each random stream is distinct.
const VAL_STREAM: u64 = 1;
const KNOCKOUT_STREAM: u64 = 2;
const TUNE_STREAM: u64 = 3;
const EPS_STREAM: u64 = 4;

const KNOCKED_PREFIX: &str = "knocked:";

/// Loads the configured corpus. Splits come from the split file when there
/// is one and are drawn from the run seed otherwise.
pub fn load_corpus(cfg: &RunConfig) -> Result<Dataset> {
    let dataset = load_unsplit(cfg)?;
    if dataset.splits.is_some() {
        return Ok(dataset);
    }
    let s = &cfg.split;
    Ok(split_blocks(&dataset, cfg.seed, (s.train, s.val, s.test))?)
}

/// Loads the configured corpus with the split file when there is one, but
/// never draws splits.
pub fn load_unsplit(cfg: &RunConfig) -> Result<Dataset> {
    let mut dataset = cfg.data.paths()?.load()?;
    if let Some(path) = cfg.data.splits_path() {
        dataset.splits = Some(load_splits(&path)?);
    }
    Ok(dataset)
}

pub fn name_counts(cfg: &RunConfig, dataset: &Dataset) -> Result<NameCountsTable> {
    Ok(match &cfg.data.name_counts {
        Some(path) => load_name_counts(path)?,
        None => build_name_counts(dataset),
    })
}

pub fn featurizer<'a>(
    dataset: &'a Dataset,
    counts: &NameCountsTable,
    cfg: &RunConfig,
) -> Result<Featurizer<'a>> {
    let dropped: BTreeSet<FeatureGroup> = cfg.model.drop_groups.iter().copied().collect();
    Ok(Featurizer::new(dataset, counts)?.with_dropped_groups(&dropped))
}

/// Blocks of one split, or every block when `split` is `None`.
pub fn split_blocks_of(dataset: &Dataset, split: Option<Split>) -> Result<Vec<Block>> {
    let blocks = build_blocks(dataset)?;
    let Some(split) = split else {
        return Ok(blocks);
    };
    if dataset.splits.is_none() {
        return Err(Error::Integrity("dataset has no block splits".into()).into());
    }
    Ok(blocks
        .into_iter()
        .filter(|b| dataset.split_of(&b.key) == Some(split))
        .collect())
}

/// Gold restricted to the members of `blocks`.
pub fn gold_for(dataset: &Dataset, blocks: &[Block]) -> Result<Partition> {
    let gold = dataset.gold()?;
    Ok(gold.restrict(
        blocks
            .iter()
            .flat_map(|b| b.members.iter().map(String::as_str)),
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainingPairs {
    /// All training pairs, the augmented ones included.
    pub train: usize,
    pub train_positive: usize,
    /// Extra pairs drawn from the knocked-out copy.
    pub augmented: usize,
    pub val: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    pub seed: u64,
    pub classifier: ClassifierKind,
    pub pairs: TrainingPairs,
    pub hyperparams: HyperParams,
    /// Best validation AUROC of the search, when one ran.
    pub search_val_auroc: Option<f64>,
    pub val_auroc: Option<f64>,
    pub val_auroc_full: Option<f64>,
    pub eps: f64,
    pub val_b3_precision: f64,
    pub val_b3_recall: f64,
    pub val_b3_f1: f64,
}

pub struct TrainOutput {
    pub model: ModelFile,
    pub report: TrainReport,
}

struct TrainingData {
    train: Vec<LabeledPair>,
    val: Vec<LabeledPair>,
    augmented: usize,
    /// Knocked-out copy of the corpus, when augmentation is on.
    knocked: Option<Dataset>,
}

fn training_data(
    dataset: &Dataset,
    counts: &NameCountsTable,
    cfg: &RunConfig,
) -> Result<TrainingData> {
    let feats = featurizer(dataset, counts, cfg)?;
    let ids = sample_pair_ids(dataset, Split::Train, cfg.caps.train, cfg.seed)?;
    let mut train = label_pairs(&feats, &ids)?;
    let val = sample_pairs(&feats, Split::Val, cfg.caps.val, cfg.seed + VAL_STREAM)?;
    let mut augmented = 0;
    let mut knocked = None;
    if cfg.knockout.enabled {
        let copy = knockout_augment(
            dataset,
            cfg.seed + KNOCKOUT_STREAM,
            &cfg.knockout.probabilities,
        )?;
        let extra = label_pairs(&featurizer(&copy, counts, cfg)?, &ids)?;
        augmented = extra.len();
        train.extend(extra);
        knocked = Some(copy);
    }
    Ok(TrainingData {
        train,
        val,
        augmented,
        knocked,
    })
}

/// Validation block matrices and their gold. With augmentation on, the
/// knocked-out copy of each validation block is added under a prefixed key
/// so that `eps` is fitted on both.
fn validation_matrices(
    dataset: &Dataset,
    knocked: Option<&Dataset>,
    counts: &NameCountsTable,
    cfg: &RunConfig,
    classifier: &EnsembleClassifier,
) -> Result<(Vec<BlockMatrix>, Partition)> {
    let feats = featurizer(dataset, counts, cfg)?;
    let blocks = split_blocks_of(dataset, Some(Split::Val))?;
    let mut matrices = block_matrices(&blocks, classifier, &feats, cfg.cluster.name_rules)?;
    let mut gold = gold_for(dataset, &blocks)?;
    if let Some(copy) = knocked {
        let feats = featurizer(copy, counts, cfg)?;
        let blocks = split_blocks_of(copy, Some(Split::Val))?;
        let copy_gold = gold_for(copy, &blocks)?;
        for bm in block_matrices(&blocks, classifier, &feats, cfg.cluster.name_rules)? {
            let members: Vec<String> = bm
                .block
                .members
                .iter()
                .map(|m| format!("{KNOCKED_PREFIX}{m}"))
                .collect();
            for (m, orig) in members.iter().zip(&bm.block.members) {
                let cluster = copy_gold
                    .cluster_of(orig)
                    .expect("restricted to block members");
                gold.insert(m.clone(), format!("{KNOCKED_PREFIX}{cluster}"));
            }
            matrices.push(BlockMatrix {
                block: Block {
                    key: format!("{KNOCKED_PREFIX}{}", bm.block.key),
                    members,
                },
                matrix: bm.matrix,
            });
        }
    }
    Ok((matrices, gold))
}

fn fit(
    pairs: &[LabeledPair],
    cfg: &RunConfig,
    hp: &HyperParams,
    constraints: &[i8],
    seed: u64,
    feats: &Featurizer<'_>,
) -> Result<PairModel> {
    let schema = feats.schema();
    Ok(match cfg.model.classifier {
        ClassifierKind::Gbt => PairModel::Trees(train_gbt(pairs, schema, hp, constraints, seed)?),
        ClassifierKind::Linear => PairModel::Linear(train_linear(
            pairs,
            schema,
            cfg.model.linear_regularization,
        )?),
    })
}

/// Trains the full and nameless models, then picks `eps` on validation.
pub fn train(dataset: &Dataset, counts: &NameCountsTable, cfg: &RunConfig) -> Result<TrainOutput> {
    cfg.validate()?;
    dataset.gold()?;
    let feats = featurizer(dataset, counts, cfg)?;
    let schema = feats.schema().clone();
    let constraints = cfg.model.constraint_vector(&schema)?;
    let data = training_data(dataset, counts, cfg)?;
    let (train_pairs, val_pairs) = (&data.train, &data.val);

    let mut hp = cfg.model.hyperparams.clone();
    let mut search_val_auroc = None;
    if cfg.tuning.hp_budget > 0 && cfg.model.classifier == ClassifierKind::Gbt {
        let (best, score) = tune_hyperparameters(
            train_pairs,
            val_pairs,
            &schema,
            &constraints,
            cfg.tuning.hp_budget,
            cfg.seed + TUNE_STREAM,
        )?;
        hp = best;
        search_val_auroc = Some(score);
    }

    let full = fit(train_pairs, cfg, &hp, &constraints, cfg.seed, &feats)?;
    let nameless = if cfg.model.nameless {
        let masked = mask_pairs(train_pairs, &schema);
        Some(fit(&masked, cfg, &hp, &constraints, cfg.seed + 1, &feats)?)
    } else {
        None
    };
    let classifier = EnsembleClassifier::new(schema, full, nameless)?;

    let labels: Vec<bool> = val_pairs.iter().map(|p| p.label).collect();
    let mut ens_scores = Vec::with_capacity(val_pairs.len());
    let mut full_scores = Vec::with_capacity(val_pairs.len());
    for p in val_pairs {
        let x = p.features.values();
        full_scores.push(classifier.member_probabilities(x)?.0);
        ens_scores.push(classifier.predict_vector(x)?);
    }
    let val_auroc = auroc(&ens_scores, &labels).ok();
    let val_auroc_full = auroc(&full_scores, &labels).ok();

    let (matrices, gold) =
        validation_matrices(dataset, data.knocked.as_ref(), counts, cfg, &classifier)?;
    let (eps, _) = tune_eps(
        &matrices,
        &gold,
        &cfg.cluster,
        cfg.tuning.eps_budget,
        cfg.seed + EPS_STREAM,
    )?;
    let cluster = ClusterParams {
        eps,
        ..cfg.cluster.clone()
    };
    let val_b3 = b3(&partition_from_matrices(&matrices, &cluster), &gold)?;

    let report = TrainReport {
        seed: cfg.seed,
        classifier: cfg.model.classifier,
        pairs: TrainingPairs {
            train: train_pairs.len(),
            train_positive: train_pairs.iter().filter(|p| p.label).count(),
            augmented: data.augmented,
            val: val_pairs.len(),
        },
        hyperparams: hp.clone(),
        search_val_auroc,
        val_auroc,
        val_auroc_full,
        eps,
        val_b3_precision: val_b3.precision,
        val_b3_recall: val_b3.recall,
        val_b3_f1: val_b3.f1,
    };
    let model = ModelFile::new(classifier, constraints, hp, cfg.seed, cluster);
    Ok(TrainOutput { model, report })
}

/// Highest validation AUROC; the earliest trial wins ties.
pub fn best_trial(trials: &[Trial]) -> &Trial {
    let mut best = &trials[0];
    for t in &trials[1..] {
        if t.val_auroc > best.val_auroc {
            best = t;
        }
    }
    best
}

/// Random search over tree hyperparameters on the configured pairs.
pub fn tune(
    dataset: &Dataset,
    counts: &NameCountsTable,
    cfg: &RunConfig,
    budget: usize,
) -> Result<Vec<Trial>> {
    let feats = featurizer(dataset, counts, cfg)?;
    let constraints = cfg.model.constraint_vector(feats.schema())?;
    let data = training_data(dataset, counts, cfg)?;
    Ok(random_search(
        &data.train,
        &data.val,
        feats.schema(),
        &constraints,
        budget,
        cfg.seed + TUNE_STREAM,
    )?)
}

/// Clusters the blocks of `split` (all blocks when `None`) with a trained
/// model and its tuned cluster parameters.
pub fn cluster(
    dataset: &Dataset,
    counts: &NameCountsTable,
    cfg: &RunConfig,
    model: &ModelFile,
    split: Option<Split>,
) -> Result<Partition> {
    let feats = featurizer(dataset, counts, cfg)?;
    let blocks = split_blocks_of(dataset, split)?;
    Ok(cluster_blocks(
        &blocks,
        &model.classifier,
        &feats,
        &model.cluster,
    )?)
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub records: usize,
    pub b3_precision: f64,
    pub b3_recall: f64,
    pub b3_f1: f64,
    /// `None` when no block has two records.
    pub pairwise_macro_f1: Option<f64>,
    pub facets: Vec<FacetReport>,
}

impl EvalReport {
    /// `key\tvalue` lines followed by one TSV table per facet.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "records\t{}\nb3_precision\t{}\nb3_recall\t{}\nb3_f1\t{}\npairwise_macro_f1\t{}\n",
            self.records,
            self.b3_precision,
            self.b3_recall,
            self.b3_f1,
            self.pairwise_macro_f1
                .map_or_else(|| "NA".to_string(), |v| v.to_string()),
        );
        for f in &self.facets {
            out.push('\n');
            out.push_str(&f.to_tsv());
        }
        out
    }
}

/// Scores `pred` against gold over the blocks of `split`.
pub fn evaluate(
    pred: &Partition,
    dataset: &Dataset,
    split: Option<Split>,
    facets: &[Facet],
) -> Result<EvalReport> {
    let blocks = split_blocks_of(dataset, split)?;
    let gold = gold_for(dataset, &blocks)?;
    let pred = match split {
        Some(_) => pred.restrict(
            blocks
                .iter()
                .flat_map(|b| b.members.iter().map(String::as_str)),
        ),
        None => pred.clone(),
    };
    evaluate_against(&pred, &gold, dataset, &blocks, facets)
}

pub fn evaluate_against(
    pred: &Partition,
    gold: &Partition,
    dataset: &Dataset,
    blocks: &[Block],
    facets: &[Facet],
) -> Result<EvalReport> {
    let scores = b3(pred, gold)?;
    let pairwise = match pairwise_macro_f1(pred, gold, blocks) {
        Ok(v) => Some(v),
        Err(Error::Empty(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let facets = facets
        .iter()
        .map(|&f| facet_report(pred, gold, dataset, f, &f.default_edges()))
        .collect::<std::result::Result<_, _>>()?;
    Ok(EvalReport {
        records: pred.len(),
        b3_precision: scores.precision,
        b3_recall: scores.recall,
        b3_f1: scores.f1,
        pairwise_macro_f1: pairwise,
        facets,
    })
}

/// One ablation variant.
#[derive(Debug, Clone, PartialEq)]
pub enum Axis {
    DropGroup(FeatureGroup),
    Linkage(Linkage),
    Dbscan,
    Linear,
    NoNameless,
    NoMonotonicity,
    TrainCap(usize),
}

impl Axis {
    pub fn apply(&self, cfg: &mut RunConfig) {
        match self {
            Axis::DropGroup(g) => {
                if !cfg.model.drop_groups.contains(g) {
                    cfg.model.drop_groups.push(*g);
                }
            }
            Axis::Linkage(l) => {
                cfg.cluster.method = Method::Hac;
                cfg.cluster.linkage = *l;
            }
            Axis::Dbscan => cfg.cluster.method = Method::Dbscan,
            Axis::Linear => cfg.model.classifier = ClassifierKind::Linear,
            Axis::NoNameless => cfg.model.nameless = false,
            Axis::NoMonotonicity => cfg.model.monotone = false,
            Axis::TrainCap(n) => cfg.caps.train = *n,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::DropGroup(g) => write!(f, "drop:{}", g.name()),
            Axis::Linkage(l) => write!(f, "linkage:{}", l.name()),
            Axis::Dbscan => f.write_str("dbscan"),
            Axis::Linear => f.write_str("linear"),
            Axis::NoNameless => f.write_str("no-nameless"),
            Axis::NoMonotonicity => f.write_str("no-monotonicity"),
            Axis::TrainCap(n) => write!(f, "train-cap:{n}"),
        }
    }
}

impl FromStr for Axis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || CliError::Usage(format!("unknown ablation axis {s:?}"));
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        Ok(match (head, arg) {
            ("drop", Some(g)) => Axis::DropGroup(g.parse().map_err(|_| unknown())?),
            ("linkage", Some(l)) => Axis::Linkage(l.parse().map_err(|_| unknown())?),
            ("dbscan", None) => Axis::Dbscan,
            ("linear", None) => Axis::Linear,
            ("no-nameless", None) => Axis::NoNameless,
            ("no-monotonicity", None) => Axis::NoMonotonicity,
            ("train-cap", Some(n)) => Axis::TrainCap(n.parse().map_err(|_| unknown())?),
            _ => return Err(unknown()),
        })
    }
}

/// Trains under `cfg`, clusters the test blocks and returns test B³ F1.
pub fn test_b3(dataset: &Dataset, counts: &NameCountsTable, cfg: &RunConfig) -> Result<f64> {
    let out = train(dataset, counts, cfg)?;
    let pred = cluster(dataset, counts, cfg, &out.model, Some(Split::Test))?;
    Ok(evaluate(&pred, dataset, Some(Split::Test), &[])?.b3_f1)
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationRow {
    pub axis: String,
    pub per_seed: Vec<f64>,
    pub mean_b3_f1: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationTable {
    pub seeds: Vec<u64>,
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("axis\tmean_b3_f1\tdelta\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{}\t{:.4}\t{:+.4}\n",
                r.axis, r.mean_b3_f1, r.delta
            ));
        }
        out
    }
}

/// Baseline plus one row per axis, each averaged over `seeds`.
pub fn ablate(
    dataset: &Dataset,
    counts: &NameCountsTable,
    cfg: &RunConfig,
    axes: &[Axis],
    seeds: &[u64],
) -> Result<AblationTable> {
    if seeds.is_empty() {
        return Err(CliError::Usage("at least one seed is required".into()));
    }
    let run = |axis: Option<&Axis>| -> Result<Vec<f64>> {
        seeds
            .iter()
            .map(|&seed| {
                let mut c = cfg.clone();
                c.seed = seed;
                if let Some(a) = axis {
                    a.apply(&mut c);
                }
                test_b3(dataset, counts, &c)
            })
            .collect()
    };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;

    let base = run(None)?;
    let base_mean = mean(&base);
    let mut rows = vec![AblationRow {
        axis: "baseline".into(),
        mean_b3_f1: base_mean,
        delta: 0.0,
        per_seed: base,
    }];
    for axis in axes {
        let scores = run(Some(axis))?;
        let m = mean(&scores);
        rows.push(AblationRow {
            axis: axis.to_string(),
            mean_b3_f1: m,
            delta: m - base_mean,
            per_seed: scores,
        });
    }
    Ok(AblationTable {
        seeds: seeds.to_vec(),
        rows,
    })
}
