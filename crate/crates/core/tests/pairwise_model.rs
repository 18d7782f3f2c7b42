use std::collections::{BTreeMap, BTreeSet};

use disambig_core::blocking::{block_key, build_blocks};
use disambig_core::clusterer::ClusterParams;
use disambig_core::corpus::{
    build_name_counts, generate_synthetic_corpus, split_blocks, Dataset, Paper, Partition,
    Signature, Split, SynthConfig,
};
use disambig_core::evaluation::auroc;
use disambig_core::featurizer::{
    mask_nameless, slot, FeatureGroup, FeatureSchema, FeatureSpec, Featurizer, PairFeatureVector,
};
use disambig_core::pairwise_model::{
    mask_pairs, predict_ensemble, random_search, sample_pair_ids, sample_pairs, train_gbt,
    train_linear, tune_hyperparameters, EnsembleClassifier, HyperParams, LabeledPair, LinearModel,
    ModelFile, Node, PairModel, Tree, TreeEnsembleModel,
};
use disambig_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn paper(id: &str, title: &str) -> Paper {
    Paper {
        paper_id: id.into(),
        title: title.into(),
        abstract_text: None,
        venue: None,
        journal: None,
        year: None,
        author_names: vec![],
        reference_ids: BTreeSet::new(),
        language: None,
        embedding: None,
    }
}

fn sig(id: &str, paper: &str, first: &str, last: &str) -> Signature {
    Signature {
        signature_id: id.into(),
        paper_id: paper.into(),
        author_position: 1,
        first: Some(first.into()),
        middle: None,
        last: last.into(),
        suffix: None,
        affiliations: vec![],
        email: None,
    }
}

/// Block "a smith" with four signatures (two authors) and two singleton
/// blocks, split train/val/test by hand.
fn four_block() -> Dataset {
    let names = [
        ("s1", "Ann", "Smith", "x"),
        ("s2", "Ann", "Smith", "x"),
        ("s3", "Ann", "Smith", "y"),
        ("s4", "A.", "Smith", "y"),
        ("s5", "Bo", "Lind", "z"),
        ("s6", "Cy", "Moor", "w"),
    ];
    let papers = names.iter().map(|(id, ..)| {
        let mut p = paper(&format!("p{id}"), "Title");
        p.author_names = vec!["Someone".into()];
        p
    });
    let sigs = names
        .iter()
        .map(|(id, first, last, _)| sig(id, &format!("p{id}"), first, last));
    let gold = Partition::from_assignment(
        names
            .iter()
            .map(|(id, .., c)| (id.to_string(), c.to_string()))
            .collect(),
    );
    let mut ds = Dataset::new(papers, sigs, Some(gold)).unwrap();
    ds.splits = Some(BTreeMap::from([
        ("a smith".to_string(), Split::Train),
        ("b lind".to_string(), Split::Val),
        ("c moor".to_string(), Split::Test),
    ]));
    ds
}

fn synthetic(seed: u64) -> Dataset {
    let cfg = SynthConfig {
        num_authors: 60,
        ..SynthConfig::default()
    };
    let ds = generate_synthetic_corpus(seed, &cfg).unwrap();
    split_blocks(&ds, seed, (0.8, 0.1, 0.1)).unwrap()
}

#[test]
fn block_of_four_yields_all_six_pairs() {
    let ds = four_block();
    let ids = sample_pair_ids(&ds, Split::Train, 10, 3).unwrap();
    assert_eq!(ids.len(), 6);
    let unique: BTreeSet<_> = ids.iter().collect();
    assert_eq!(unique.len(), 6);
    assert!(ids.iter().all(|(a, b)| a < b));

    assert!(sample_pair_ids(&ds, Split::Train, 0, 3).unwrap().is_empty());
    let three = sample_pair_ids(&ds, Split::Train, 3, 3).unwrap();
    assert_eq!(three.len(), 3);
    assert_eq!(three, sample_pair_ids(&ds, Split::Train, 3, 3).unwrap());
    // a singleton block has no pairs at all
    assert!(sample_pair_ids(&ds, Split::Val, 5, 3).unwrap().is_empty());
}

#[test]
fn sampling_errors() {
    let mut ds = four_block();
    ds.splits
        .as_mut()
        .unwrap()
        .insert("c moor".into(), Split::Val);
    assert!(matches!(
        sample_pair_ids(&ds, Split::Test, 5, 0),
        Err(Error::Empty(_))
    ));
    ds.splits = None;
    assert!(matches!(
        sample_pair_ids(&ds, Split::Train, 5, 0),
        Err(Error::Integrity(_))
    ));
}

#[test]
fn sampled_labels_agree_with_gold() {
    let ds = synthetic(4);
    let counts = build_name_counts(&ds);
    let feats = Featurizer::new(&ds, &counts).unwrap();
    let gold = ds.gold().unwrap();
    let pairs = sample_pairs(&feats, Split::Train, 500, 9).unwrap();
    assert!(!pairs.is_empty());
    for p in &pairs {
        assert_ne!(p.sig_a, p.sig_b);
        let ka = block_key(ds.signature(&p.sig_a).unwrap()).unwrap();
        let kb = block_key(ds.signature(&p.sig_b).unwrap()).unwrap();
        assert_eq!(ka, kb);
        assert_eq!(ds.split_of(&ka), Some(Split::Train));
        assert_eq!(
            p.label,
            gold.cluster_of(&p.sig_a) == gold.cluster_of(&p.sig_b)
        );
        assert!(p
            .features
            .same_as(&feats.featurize(&p.sig_a, &p.sig_b).unwrap()));
    }
}

#[test]
fn cap_limits_and_covers_the_split() {
    let ds = synthetic(5);
    let total: usize = build_blocks(&ds)
        .unwrap()
        .iter()
        .filter(|b| ds.split_of(&b.key) == Some(Split::Train))
        .map(|b| b.len() * (b.len() - 1) / 2)
        .sum();
    assert_eq!(
        sample_pair_ids(&ds, Split::Train, usize::MAX, 1)
            .unwrap()
            .len(),
        total
    );
    assert_eq!(
        sample_pair_ids(&ds, Split::Train, 17, 1).unwrap().len(),
        17.min(total)
    );
}

fn one_feature_schema() -> FeatureSchema {
    FeatureSchema {
        version: 1,
        features: vec![FeatureSpec {
            name: "x".into(),
            group: FeatureGroup::Title,
            monotone: 0,
            nameless: false,
        }],
    }
}

fn toy_pair(x: f64, label: bool) -> LabeledPair {
    LabeledPair {
        sig_a: "a".into(),
        sig_b: "b".into(),
        label,
        features: PairFeatureVector(vec![x]),
    }
}

fn separable(n: usize, seed: u64) -> Vec<LabeledPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x: f64 = rng.random();
            toy_pair(x, x > 0.5)
        })
        .collect()
}

#[test]
fn linear_separates_toy_problem() {
    let schema = one_feature_schema();
    let mut pairs = separable(200, 2);
    // a few missing values are imputed, not rejected
    pairs.push(toy_pair(f64::NAN, true));
    let model = train_linear(&pairs, &schema, 1e-3).unwrap();
    let correct = pairs[..200]
        .iter()
        .filter(|p| (model.predict_proba(p.features.values()).unwrap() > 0.5) == p.label)
        .count();
    assert!(correct >= 198, "accuracy {correct}/200");
    let p = model.predict_proba(&[f64::NAN]).unwrap();
    assert!(p > 0.0 && p < 1.0);
}

#[test]
fn zero_linear_model_is_uninformative() {
    let schema = FeatureSchema::default();
    let model = LinearModel::zero(&schema);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..20 {
        let x: Vec<f64> = (0..schema.len())
            .map(|_| rng.random_range(-5.0..5.0))
            .collect();
        assert_eq!(model.predict_proba(&x).unwrap(), 0.5);
    }
}

#[test]
fn duplicated_data_gives_the_same_linear_model() {
    let schema = one_feature_schema();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let pairs: Vec<_> = (0..150)
        .map(|_| {
            let x: f64 = rng.random_range(-2.0..2.0);
            toy_pair(x, x + rng.random_range(-1.0..1.0) > 0.0)
        })
        .collect();
    let doubled: Vec<_> = pairs.iter().chain(&pairs).cloned().collect();
    let a = train_linear(&pairs, &schema, 0.1).unwrap();
    let b = train_linear(&doubled, &schema, 0.1).unwrap();
    assert!((a.bias - b.bias).abs() < 1e-9);
    for (x, y) in a.weights.iter().zip(&b.weights) {
        assert!((x - y).abs() < 1e-9);
    }
    let one_class: Vec<_> = (0..5).map(|i| toy_pair(i as f64, false)).collect();
    assert!(matches!(
        train_linear(&one_class, &schema, 0.1),
        Err(Error::SingleClass)
    ));
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn constant_model(schema: &FeatureSchema, p: f64) -> PairModel {
    PairModel::Trees(TreeEnsembleModel {
        trees: vec![Tree {
            nodes: vec![Node::Leaf { value: logit(p) }],
        }],
        learning_rate: 1.0,
        base_score: 0.0,
        schema_hash: schema.hash(),
        constraints: vec![0; schema.len()],
    })
}

/// One split on `feature`: below or at `threshold` gives `lo`, above gives
/// `hi`, missing goes right.
fn stump(schema: &FeatureSchema, feature: usize, threshold: f64, lo: f64, hi: f64) -> PairModel {
    PairModel::Trees(TreeEnsembleModel {
        trees: vec![Tree {
            nodes: vec![
                Node::Split {
                    feature,
                    threshold,
                    default_left: false,
                    left: 1,
                    right: 2,
                },
                Node::Leaf { value: lo },
                Node::Leaf { value: hi },
            ],
        }],
        learning_rate: 1.0,
        base_score: 0.0,
        schema_hash: schema.hash(),
        constraints: vec![0; schema.len()],
    })
}

#[test]
fn ensemble_of_constants_is_their_mean() {
    let schema = FeatureSchema::default();
    let ens = EnsembleClassifier::new(
        schema.clone(),
        constant_model(&schema, 0.9),
        Some(constant_model(&schema, 0.5)),
    )
    .unwrap();
    let x = vec![0.3; schema.len()];
    assert!((ens.predict_vector(&x).unwrap() - 0.7).abs() < 1e-12);

    let same = EnsembleClassifier::new(
        schema.clone(),
        constant_model(&schema, 0.35),
        Some(constant_model(&schema, 0.35)),
    )
    .unwrap();
    assert!((same.predict_vector(&x).unwrap() - 0.35).abs() < 1e-12);
}

#[test]
fn ensemble_members_must_share_the_schema() {
    let schema = FeatureSchema::default();
    let other = one_feature_schema();
    assert!(matches!(
        EnsembleClassifier::new(
            schema.clone(),
            constant_model(&schema, 0.5),
            Some(constant_model(&other, 0.5))
        ),
        Err(Error::SchemaMismatch { .. })
    ));
}

/// Two signatures on papers with identical metadata, differing only in
/// first name.
fn name_conflict_fixture() -> Dataset {
    let mut papers = Vec::new();
    for id in ["p1", "p2"] {
        let mut p = paper(id, "Sparse spectral methods for graph learning");
        p.venue = Some("ICML".into());
        p.year = Some(2019);
        p.author_names = vec!["Joan Ortiz".into(), "Kim Park".into()];
        papers.push(p);
    }
    papers[1].author_names[0] = "Jane Ortiz".into();
    let mut a = sig("s1", "p1", "Joan", "Ortiz");
    let mut b = sig("s2", "p2", "Jane", "Ortiz");
    a.affiliations = vec!["Lakeshore Polytechnic".into()];
    b.affiliations = a.affiliations.clone();
    Dataset::new(papers, [a, b], None).unwrap()
}

#[test]
fn nameless_member_lifts_pairs_depressed_by_names() {
    let ds = name_conflict_fixture();
    let counts = build_name_counts(&ds);
    let feats = Featurizer::new(&ds, &counts).unwrap();
    let schema = feats.schema().clone();
    // the full model distrusts different first names, the nameless model
    // trusts identical titles
    let full = stump(&schema, slot::FIRST_EQUAL, 0.5, -3.0, 3.0);
    let nameless = stump(&schema, slot::TITLE_WORDS, 0.5, -3.0, 3.0);
    let ens = EnsembleClassifier::new(schema.clone(), full, Some(nameless)).unwrap();

    let v = feats.featurize("s1", "s2").unwrap();
    assert_eq!(v.values()[slot::FIRST_EQUAL], 0.0);
    let (p_full, p_nameless) = ens.member_probabilities(v.values()).unwrap();
    let p = predict_ensemble(&ens, "s1", "s2", &feats).unwrap();
    assert!(p_full < 0.5);
    assert!(p > p_full);
    assert!((p - 0.5 * (p_full + p_nameless.unwrap())).abs() < 1e-12);
}

#[test]
fn trained_ensemble_is_mean_of_members_and_symmetric() {
    let ds = synthetic(6);
    let counts = build_name_counts(&ds);
    let feats = Featurizer::new(&ds, &counts).unwrap();
    let schema = feats.schema().clone();
    let constraints = schema.default_constraints();
    let hp = HyperParams {
        n_trees: 50,
        ..HyperParams::default()
    };
    let train = sample_pairs(&feats, Split::Train, 2000, 1).unwrap();
    let full = train_gbt(&train, &schema, &hp, &constraints, 1).unwrap();
    let nameless = train_gbt(&mask_pairs(&train, &schema), &schema, &hp, &constraints, 2).unwrap();
    let ens = EnsembleClassifier::new(
        schema.clone(),
        PairModel::Trees(full.clone()),
        Some(PairModel::Trees(nameless.clone())),
    )
    .unwrap();

    for p in sample_pairs(&feats, Split::Test, 200, 3).unwrap() {
        let got = predict_ensemble(&ens, &p.sig_a, &p.sig_b, &feats).unwrap();
        let masked = mask_nameless(&p.features, &schema);
        for (i, f) in schema.features.iter().enumerate() {
            if f.nameless {
                assert!(masked.values()[i].is_nan());
            }
        }
        let want = 0.5
            * (full.predict_proba(p.features.values()).unwrap()
                + nameless.predict_proba(masked.values()).unwrap());
        assert!((got - want).abs() <= 1e-12);
        let swapped = predict_ensemble(&ens, &p.sig_b, &p.sig_a, &feats).unwrap();
        assert!((got - swapped).abs() <= 1e-12);
    }
}

#[test]
fn model_file_round_trip_and_refusals() {
    let schema = FeatureSchema::default();
    let ens = EnsembleClassifier::new(
        schema.clone(),
        stump(&schema, slot::VENUE, 0.5, -1.0, 1.0),
        Some(constant_model(&schema, 0.4)),
    )
    .unwrap();
    let file = ModelFile::new(
        ens,
        schema.default_constraints(),
        HyperParams::default(),
        17,
        ClusterParams {
            eps: 0.37,
            ..ClusterParams::default()
        },
    );
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    file.save(&path).unwrap();
    let loaded = ModelFile::load(&path, &schema).unwrap();
    assert_eq!(loaded, file);
    assert_eq!(loaded.to_json(), file.to_json());

    let mut other = schema.clone();
    other.features.swap(0, 1);
    assert!(matches!(
        ModelFile::load(&path, &other),
        Err(Error::SchemaMismatch { .. })
    ));

    let text = file
        .to_json()
        .replacen("\"version\": 1", "\"version\": 99", 1);
    assert!(matches!(
        ModelFile::from_json(&text, &schema),
        Err(Error::Parse { .. })
    ));
    let tampered = file.to_json().replacen(&schema.hash(), &other.hash(), 1);
    assert!(ModelFile::from_json(&tampered, &schema).is_err());
}

#[test]
fn tuning_budget_one_uses_the_first_draw() {
    let schema = one_feature_schema();
    let train = separable(200, 1);
    let val = separable(100, 2);
    let (hp, score) = tune_hyperparameters(&train, &val, &schema, &[0], 1, 42).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    assert_eq!(hp, HyperParams::sample(&mut rng));
    assert!(score >= 0.99, "val auroc {score}");
}

#[test]
fn larger_budget_never_scores_lower() {
    let schema = one_feature_schema();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noisy: Vec<_> = (0..200)
        .map(|_| {
            let x: f64 = rng.random();
            toy_pair(x, x + rng.random_range(-0.3..0.3) > 0.5)
        })
        .collect();
    let (train, val) = noisy.split_at(140);
    let trials = random_search(train, val, &schema, &[0], 20, 5).unwrap();
    let first = random_search(train, val, &schema, &[0], 1, 5).unwrap();
    assert_eq!(trials[0], first[0]);
    let best = trials.iter().map(|t| t.val_auroc).fold(f64::MIN, f64::max);
    assert!(best >= first[0].val_auroc);
    let (_, tuned) = tune_hyperparameters(train, val, &schema, &[0], 20, 5).unwrap();
    assert_eq!(tuned, best);
}

#[test]
fn tuned_toy_model_ranks_well() {
    let schema = one_feature_schema();
    let train = separable(200, 11);
    let val = separable(100, 12);
    let test = separable(300, 13);
    let (hp, _) = tune_hyperparameters(&train, &val, &schema, &[0], 5, 1).unwrap();
    let model = train_gbt(&train, &schema, &hp, &[0], 1).unwrap();
    let scores: Vec<f64> = test
        .iter()
        .map(|p| model.predict_proba(p.features.values()).unwrap())
        .collect();
    let labels: Vec<bool> = test.iter().map(|p| p.label).collect();
    assert!(auroc(&scores, &labels).unwrap() >= 0.99);
}

#[test]
fn tuning_rejects_bad_input() {
    let schema = one_feature_schema();
    let train = separable(50, 1);
    assert!(matches!(
        tune_hyperparameters(&train, &[], &schema, &[0], 3, 0),
        Err(Error::Empty(_))
    ));
    assert!(matches!(
        tune_hyperparameters(&train, &train, &schema, &[0], 0, 0),
        Err(Error::InvalidConfig(_))
    ));
}
