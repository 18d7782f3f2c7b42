use super::*;
use crate::featurizer::{FeatureGroup, FeatureSpec, PairFeatureVector};
use rand::Rng;

fn toy_schema(n: usize) -> FeatureSchema {
    FeatureSchema {
        version: 1,
        features: (0..n)
            .map(|i| FeatureSpec {
                name: format!("x{i}"),
                group: FeatureGroup::Title,
                monotone: 0,
                nameless: false,
            })
            .collect(),
    }
}

fn pair(features: Vec<f64>, label: bool) -> LabeledPair {
    LabeledPair {
        sig_a: "a".into(),
        sig_b: "b".into(),
        label,
        features: PairFeatureVector(features),
    }
}

fn small_hp() -> HyperParams {
    HyperParams {
        n_trees: 60,
        max_leaves: 8,
        learning_rate: 0.2,
        min_samples_leaf: 3,
        feature_fraction: 1.0,
        bagging_fraction: 1.0,
        ..HyperParams::default()
    }
}

/// Recursive walk, kept deliberately separate from the iterative one.
fn trace(tree: &Tree, node: usize, x: &[f64]) -> f64 {
    match &tree.nodes[node] {
        Node::Leaf { value } => *value,
        Node::Split {
            feature,
            threshold,
            default_left,
            left,
            right,
        } => {
            let v = x[*feature];
            let next = if v.is_nan() {
                if *default_left {
                    *left
                } else {
                    *right
                }
            } else if v <= *threshold {
                *left
            } else {
                *right
            };
            trace(tree, next, x)
        }
    }
}

fn oracle_proba(model: &TreeEnsembleModel, x: &[f64]) -> f64 {
    let mut total = 0.0;
    for tree in &model.trees {
        total += trace(tree, 0, x);
    }
    let z = (model.base_score + model.learning_rate * total).clamp(-30.0, 30.0);
    1.0 / (1.0 + (-z).exp())
}

/// Smallest and largest leaf value under each node.
fn leaf_range(tree: &Tree, node: usize) -> (f64, f64) {
    match &tree.nodes[node] {
        Node::Leaf { value } => (*value, *value),
        Node::Split { left, right, .. } => {
            let (a, b) = leaf_range(tree, *left);
            let (c, d) = leaf_range(tree, *right);
            (a.min(c), b.max(d))
        }
    }
}

fn audit_bounds(model: &TreeEnsembleModel) {
    for tree in &model.trees {
        for node in &tree.nodes {
            if let Node::Split {
                feature,
                left,
                right,
                ..
            } = node
            {
                let (l_lo, l_hi) = leaf_range(tree, *left);
                let (r_lo, r_hi) = leaf_range(tree, *right);
                match model.constraints[*feature] {
                    1 => assert!(l_hi <= r_lo, "increasing split has {l_hi} > {r_lo}"),
                    -1 => assert!(l_lo >= r_hi, "decreasing split has {l_lo} < {r_hi}"),
                    _ => {}
                }
            }
        }
    }
}

fn separable(n: usize, seed: u64) -> Vec<LabeledPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x: f64 = rng.random();
            pair(vec![x], x > 0.5)
        })
        .collect()
}

#[test]
fn separable_toy_problem() {
    let pairs = separable(200, 1);
    let model = train_gbt(&pairs, &toy_schema(1), &small_hp(), &[0], 3).unwrap();
    let correct = pairs
        .iter()
        .filter(|p| (model.predict_proba(p.features.values()).unwrap() > 0.5) == p.label)
        .count();
    assert!(correct as f64 / 200.0 >= 0.99, "accuracy {correct}/200");
}

#[test]
fn empty_and_single_leaf_ensembles() {
    let empty = TreeEnsembleModel {
        trees: vec![],
        learning_rate: 0.1,
        base_score: 0.0,
        schema_hash: String::new(),
        constraints: vec![0; 3],
    };
    assert_eq!(empty.predict_proba(&[0.0, 1.0, f64::NAN]).unwrap(), 0.5);

    let leaf = TreeEnsembleModel {
        trees: vec![Tree {
            nodes: vec![Node::Leaf { value: 1.7 }],
        }],
        learning_rate: 0.3,
        ..empty
    };
    let want = 1.0 / (1.0 + (-0.3f64 * 1.7).exp());
    assert!((leaf.predict_proba(&[0.0; 3]).unwrap() - want).abs() < 1e-15);
    assert!(matches!(
        leaf.predict_proba(&[0.0; 2]),
        Err(Error::SchemaMismatch { .. })
    ));
}

/// Label depends on both features; feature 0 is noisy and decreasing.
fn two_feature_data(n: usize, seed: u64, missing: f64) -> Vec<LabeledPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let a: f64 = rng.random_range(0.0..20.0);
            let b: f64 = rng.random();
            let noise: f64 = rng.random_range(-0.3..0.3);
            // non-monotone in a on purpose, so constraints must bind
            let score = -0.1 * a + 0.8 * (a * 0.9).sin() + 2.0 * b + noise;
            let mut x = vec![a, b, rng.random()];
            for v in &mut x {
                if rng.random::<f64>() < missing {
                    *v = f64::NAN;
                }
            }
            pair(x, score > 0.0)
        })
        .collect()
}

#[test]
fn decreasing_constraint_holds_on_grid() {
    let pairs = two_feature_data(600, 5, 0.0);
    let constraints = [-1, 1, 0];
    let model = train_gbt(&pairs, &toy_schema(3), &small_hp(), &constraints, 9).unwrap();
    audit_bounds(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..100 {
        let mut x = vec![0.0, rng.random(), rng.random()];
        let mut prev = f64::INFINITY;
        for step in 0..50 {
            x[0] = step as f64 * 20.0 / 49.0;
            let p = model.predict_proba(&x).unwrap();
            assert!(p <= prev, "probability rose at step {step}");
            prev = p;
        }
    }
}

#[test]
fn all_missing_column_is_never_used() {
    let mut pairs = two_feature_data(300, 6, 0.0);
    for p in &mut pairs {
        p.features.0[2] = f64::NAN;
    }
    let model = train_gbt(&pairs, &toy_schema(3), &small_hp(), &[0, 0, 0], 1).unwrap();
    for tree in &model.trees {
        for node in &tree.nodes {
            if let Node::Split { feature, .. } = node {
                assert_ne!(*feature, 2);
            }
        }
    }
}

#[test]
fn missing_values_route_like_the_oracle() {
    let pairs = two_feature_data(800, 8, 0.3);
    let hp = HyperParams {
        bagging_fraction: 0.7,
        feature_fraction: 0.7,
        ..small_hp()
    };
    let model = train_gbt(&pairs, &toy_schema(3), &hp, &[-1, 1, 0], 2).unwrap();
    audit_bounds(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..1000 {
        let x: Vec<f64> = (0..3)
            .map(|_| {
                if rng.random::<f64>() < 0.3 {
                    f64::NAN
                } else {
                    rng.random_range(-1.0..21.0)
                }
            })
            .collect();
        let fast = model.predict_proba(&x).unwrap();
        assert!((fast - oracle_proba(&model, &x)).abs() <= 1e-12);
        assert!(fast > 0.0 && fast < 1.0);
    }
    let rows: Vec<Vec<f64>> = pairs.iter().map(|p| p.features.0.clone()).collect();
    let batch = model.predict_batch(&rows).unwrap();
    for (r, b) in rows.iter().zip(batch) {
        assert_eq!(b, model.predict_proba(r).unwrap());
    }
}

#[test]
fn training_is_deterministic() {
    let pairs = two_feature_data(400, 4, 0.2);
    let hp = HyperParams {
        bagging_fraction: 0.6,
        feature_fraction: 0.6,
        ..small_hp()
    };
    let a = train_gbt(&pairs, &toy_schema(3), &hp, &[-1, 1, 0], 5).unwrap();
    let b = train_gbt(&pairs, &toy_schema(3), &hp, &[-1, 1, 0], 5).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    let c = train_gbt(&pairs, &toy_schema(3), &hp, &[-1, 1, 0], 6).unwrap();
    assert_ne!(a, c);
}

#[test]
fn rejects_bad_training_sets() {
    let one_class: Vec<_> = (0..10).map(|i| pair(vec![i as f64], true)).collect();
    assert!(matches!(
        train_gbt(&one_class, &toy_schema(1), &small_hp(), &[0], 0),
        Err(Error::SingleClass)
    ));
    let pairs = separable(20, 0);
    assert!(matches!(
        train_gbt(&pairs, &toy_schema(2), &small_hp(), &[0, 0], 0),
        Err(Error::SchemaMismatch { .. })
    ));
}

#[test]
fn cuts_respect_bin_budget() {
    let cuts = feature_cuts((0..1000).map(|i| (i % 97) as f64), 16);
    assert!(cuts.len() <= 15 && cuts.len() >= 10);
    assert!(cuts.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(
        feature_cuts([1.0, 1.0, f64::NAN].into_iter(), 16),
        Vec::<f64>::new()
    );
    assert_eq!(
        feature_cuts([1.0, 3.0, 2.0].into_iter(), 16),
        vec![1.5, 2.5]
    );
}
