use super::*;
use crate::corpus::{Paper, Signature};
use proptest::prelude::*;

fn partition(clusters: &[&[&str]]) -> Partition {
    Partition::from_clusters(clusters.iter().enumerate().map(|(i, c)| {
        (
            format!("c{i}"),
            c.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
        )
    }))
    .unwrap()
}

fn block(key: &str, members: &[&str]) -> Block {
    Block {
        key: key.into(),
        members: members.iter().map(|s| s.to_string()).collect(),
    }
}

#[test]
fn b3_identity() {
    let p = partition(&[&["a", "b"], &["c"]]);
    let r = b3(&p, &p).unwrap();
    assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
}

#[test]
fn b3_hand_fixture() {
    let gold = partition(&[&["a", "b"], &["c"]]);
    let pred = partition(&[&["a"], &["b", "c"]]);
    let r = b3(&pred, &gold).unwrap();
    assert!((r.per_record_f1["a"] - 2.0 / 3.0).abs() < 1e-15);
    assert!((r.per_record_f1["b"] - 0.5).abs() < 1e-15);
    assert!((r.per_record_f1["c"] - 2.0 / 3.0).abs() < 1e-15);
    assert!((r.f1 - 11.0 / 18.0).abs() < 1e-12);
}

#[test]
fn b3_singletons_against_one_cluster() {
    let ids: Vec<String> = (0..7).map(|i| format!("r{i}")).collect();
    let gold = Partition::from_clusters([("g".to_string(), ids.clone())]).unwrap();
    let pred = Partition::from_clusters(ids.iter().map(|i| (i.clone(), vec![i.clone()]))).unwrap();
    let r = b3(&pred, &gold).unwrap();
    assert_eq!(r.precision, 1.0);
    assert!((r.recall - 1.0 / 7.0).abs() < 1e-15);
}

#[test]
fn b3_rejects_coverage_mismatch() {
    let gold = partition(&[&["a", "b"]]);
    let pred = partition(&[&["a"], &["c"]]);
    assert!(matches!(b3(&pred, &gold), Err(Error::Coverage(_))));
}

#[test]
fn pairwise_degenerate_block() {
    let gold = partition(&[&["a", "b"], &["c"]]);
    let pred = partition(&[&["a"], &["b"], &["c"]]);
    let blocks = [block("k", &["a", "b", "c"])];
    assert_eq!(pairwise_macro_f1(&pred, &gold, &blocks).unwrap(), 0.0);
    assert_eq!(pairwise_macro_f1(&gold, &gold, &blocks).unwrap(), 1.0);
    // no positives anywhere scores 1
    assert_eq!(pairwise_macro_f1(&pred, &pred, &blocks).unwrap(), 1.0);
}

#[test]
fn auroc_examples() {
    assert_eq!(auroc(&[0.9, 0.1], &[true, false]).unwrap(), 1.0);
    assert_eq!(
        auroc(&[0.3; 5], &[true, false, true, false, false]).unwrap(),
        0.5
    );
    assert_eq!(auroc(&[0.8, 0.6, 0.4], &[true, false, true]).unwrap(), 0.5);
    assert!(matches!(
        auroc(&[0.1, 0.2], &[true, true]),
        Err(Error::SingleClass)
    ));
}

#[test]
fn average_precision_examples() {
    assert_eq!(
        average_precision(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]).unwrap(),
        1.0
    );
    let n = 6;
    let scores: Vec<f64> = (0..n).map(|i| 1.0 - i as f64 / 10.0).collect();
    let mut labels = vec![false; n];
    labels[n - 1] = true;
    assert!((average_precision(&scores, &labels).unwrap() - 1.0 / n as f64).abs() < 1e-15);
    assert!(average_precision(&[0.5], &[false]).is_err());
}

// Brute-force references.

fn b3_oracle(pred: &[usize], gold: &[usize]) -> f64 {
    let n = pred.len();
    let mut total = 0.0;
    for i in 0..n {
        let same_pred: Vec<usize> = (0..n).filter(|&j| pred[j] == pred[i]).collect();
        let same_gold: Vec<usize> = (0..n).filter(|&j| gold[j] == gold[i]).collect();
        let inter = same_pred.iter().filter(|j| same_gold.contains(j)).count() as f64;
        let p = inter / same_pred.len() as f64;
        let r = inter / same_gold.len() as f64;
        total += 2.0 * p * r / (p + r);
    }
    total / n as f64
}

fn pair_f1_oracle(pred: &[usize], gold: &[usize]) -> f64 {
    let (mut tp, mut pp, mut gp) = (0, 0, 0);
    for i in 0..pred.len() {
        for j in i + 1..pred.len() {
            let sp = pred[i] == pred[j];
            let sg = gold[i] == gold[j];
            tp += usize::from(sp && sg);
            pp += usize::from(sp);
            gp += usize::from(sg);
        }
    }
    let p = if pp == 0 { 1.0 } else { tp as f64 / pp as f64 };
    let r = if gp == 0 { 1.0 } else { tp as f64 / gp as f64 };
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn auroc_oracle(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li && !lj {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

fn ap_oracle(scores: &[f64], labels: &[bool]) -> f64 {
    // rank of item i = items with a higher score, plus equal-score items
    // earlier in the input, plus one
    let n_pos = labels.iter().filter(|&&l| l).count() as f64;
    let mut total = 0.0;
    for i in 0..scores.len() {
        if !labels[i] {
            continue;
        }
        let ahead = |j: usize| scores[j] > scores[i] || (scores[j] == scores[i] && j < i);
        let rank = (0..scores.len()).filter(|&j| ahead(j)).count() + 1;
        let pos_at_or_above = (0..scores.len())
            .filter(|&j| labels[j] && (j == i || ahead(j)))
            .count();
        total += pos_at_or_above as f64 / rank as f64;
    }
    total / n_pos
}

fn to_partition(labels: &[usize]) -> Partition {
    Partition::from_assignment(
        labels
            .iter()
            .enumerate()
            .map(|(i, l)| (format!("r{i:02}"), format!("c{l}")))
            .collect(),
    )
}

fn assignments() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (1usize..=12).prop_flat_map(|n| {
        (
            proptest::collection::vec(0usize..5, n),
            proptest::collection::vec(0usize..5, n),
        )
    })
}

fn scored() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (2usize..=12).prop_flat_map(|n| {
        (
            // a coarse grid keeps ties frequent
            proptest::collection::vec((0u8..6).prop_map(|k| k as f64 / 5.0), n),
            proptest::collection::vec(any::<bool>(), n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn b3_matches_oracle((pred, gold) in assignments()) {
        let r = b3(&to_partition(&pred), &to_partition(&gold)).unwrap();
        prop_assert!((r.f1 - b3_oracle(&pred, &gold)).abs() <= 1e-12);
        let swapped = b3(&to_partition(&gold), &to_partition(&pred)).unwrap();
        prop_assert!((r.precision - swapped.recall).abs() <= 1e-12);
        prop_assert!((r.f1 - swapped.f1).abs() <= 1e-12);
    }

    #[test]
    fn pairwise_matches_oracle((pred, gold) in assignments()) {
        prop_assume!(pred.len() >= 2);
        let ids: Vec<String> = (0..pred.len()).map(|i| format!("r{i:02}")).collect();
        let blocks = [Block { key: "k".into(), members: ids }];
        let got = pairwise_macro_f1(&to_partition(&pred), &to_partition(&gold), &blocks).unwrap();
        prop_assert!((got - pair_f1_oracle(&pred, &gold)).abs() <= 1e-12);
    }

    #[test]
    fn ranking_metrics_match_oracles((scores, labels) in scored()) {
        if labels.iter().any(|&l| l) && labels.iter().any(|&l| !l) {
            let got = auroc(&scores, &labels).unwrap();
            prop_assert!((got - auroc_oracle(&scores, &labels)).abs() <= 1e-12);
            let squashed: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp()).collect();
            prop_assert!((auroc(&squashed, &labels).unwrap() - got).abs() <= 1e-12);
        }
        if labels.iter().any(|&l| l) {
            let got = average_precision(&scores, &labels).unwrap();
            prop_assert!((got - ap_oracle(&scores, &labels)).abs() <= 1e-12);
        }
    }
}

fn named_dataset(names: &[(&str, Option<&str>, &str)]) -> Dataset {
    let papers = names.iter().enumerate().map(|(i, _)| Paper {
        paper_id: format!("p{i}"),
        title: "t".into(),
        abstract_text: None,
        venue: None,
        journal: None,
        year: Some(1990 + 5 * i as i32),
        author_names: vec!["x".into(); i % 3 + 1],
        reference_ids: Default::default(),
        language: None,
        embedding: None,
    });
    let sigs = names
        .iter()
        .enumerate()
        .map(|(i, (first, middle, last))| Signature {
            signature_id: format!("s{i}"),
            paper_id: format!("p{i}"),
            author_position: 1,
            first: Some(first.to_string()),
            middle: middle.map(str::to_string),
            last: last.to_string(),
            suffix: None,
            affiliations: vec![],
            email: None,
        });
    Dataset::new(papers, sigs, None).unwrap()
}

fn homonymity_oracle(names: &[String], gold: &[usize]) -> f64 {
    let n = names.len();
    let hits = (0..n)
        .filter(|&i| (0..n).any(|j| j != i && names[j] == names[i] && gold[j] != gold[i]))
        .count();
    hits as f64 / n as f64
}

fn synonymity_oracle(names: &[String], gold: &[usize]) -> f64 {
    let n = names.len();
    let hits = (0..n)
        .filter(|&i| (0..n).any(|j| gold[j] == gold[i] && names[j] != names[i]))
        .count();
    hits as f64 / n as f64
}

#[test]
fn homonymity_and_synonymity() {
    let ds = named_dataset(&[("John", None, "Smith"), ("John", None, "Smith")]);
    let b = block("j smith", &["s0", "s1"]);
    let split = partition(&[&["s0"], &["s1"]]);
    let joined = partition(&[&["s0", "s1"]]);
    assert_eq!(homonymity(&b, &split, &ds).unwrap(), 1.0);
    assert_eq!(homonymity(&b, &joined, &ds).unwrap(), 0.0);
    assert_eq!(synonymity(&b, &joined, &ds).unwrap(), 0.0);

    let ds = named_dataset(&[("J.", None, "Smith"), ("John", None, "Smith")]);
    assert_eq!(synonymity(&b, &joined, &ds).unwrap(), 1.0);
    assert_eq!(homonymity(&b, &split, &ds).unwrap(), 0.0);
}

#[test]
fn six_record_block_matches_pair_scan() {
    let raw = [
        ("John", None, "Smith"),
        ("John", None, "Smith"),
        ("J", None, "Smith"),
        ("John", Some("Q"), "Smith"),
        ("Jane", None, "Smith"),
        ("J.", None, "Smith"),
    ];
    let ds = named_dataset(&raw);
    let names: Vec<String> = ds
        .signatures
        .values()
        .map(|s| normalize_signature(s).unwrap().full())
        .collect();
    let ids: Vec<&str> = vec!["s0", "s1", "s2", "s3", "s4", "s5"];
    let b = block("j smith", &ids);
    for gold_labels in [
        [0, 1, 0, 0, 2, 1],
        [0, 0, 0, 0, 0, 0],
        [0, 1, 2, 3, 4, 5],
        [0, 0, 1, 1, 2, 2],
    ] {
        let gold = to_named_partition(&ids, &gold_labels);
        let h = homonymity(&b, &gold, &ds).unwrap();
        let s = synonymity(&b, &gold, &ds).unwrap();
        assert!((h - homonymity_oracle(&names, &gold_labels)).abs() < 1e-15);
        assert!((s - synonymity_oracle(&names, &gold_labels)).abs() < 1e-15);
    }
}

fn to_named_partition(ids: &[&str], labels: &[usize]) -> Partition {
    Partition::from_assignment(
        ids.iter()
            .zip(labels)
            .map(|(id, l)| (id.to_string(), format!("g{l}")))
            .collect(),
    )
}

#[test]
fn facet_single_bin_equals_overall() {
    let ds = named_dataset(&[
        ("John", None, "Smith"),
        ("John", None, "Smith"),
        ("Jane", None, "Smith"),
        ("Ann", None, "Lee"),
    ]);
    let ids = ["s0", "s1", "s2", "s3"];
    let gold = to_named_partition(&ids, &[0, 0, 1, 2]);
    let pred = to_named_partition(&ids, &[0, 1, 1, 2]);
    let overall = b3(&pred, &gold).unwrap().f1;
    for facet in Facet::ALL {
        let r = facet_report(&pred, &gold, &ds, facet, &[-1e9]).unwrap();
        assert_eq!(r.total_count(), 4, "{facet}");
        assert_eq!(r.bins.len(), 1);
        assert!((r.bins[0].mean_f1.unwrap() - overall).abs() < 1e-12);
    }
}

#[test]
fn cluster_size_histogram() {
    let ds = named_dataset(&[
        ("A", None, "One"),
        ("B", None, "Two"),
        ("B", None, "Two"),
        ("C", None, "Three"),
        ("C", None, "Three"),
        ("C", None, "Three"),
    ]);
    let ids = ["s0", "s1", "s2", "s3", "s4", "s5"];
    let gold = to_named_partition(&ids, &[0, 1, 1, 2, 2, 2]);
    let r = facet_report(&gold, &gold, &ds, Facet::ClusterSize, &[1.0, 2.0]).unwrap();
    let counts: Vec<usize> = r.bins.iter().map(|b| b.count).collect();
    assert_eq!(counts, vec![1, 5]);
    assert_eq!(r.bins[1].label, "[2,inf)");
}

#[test]
fn year_facet_matches_group_by() {
    let ds = named_dataset(&[
        ("A", None, "One"),
        ("A", None, "One"),
        ("A", None, "One"),
        ("B", None, "Two"),
        ("B", None, "Two"),
        ("C", None, "Three"),
    ]);
    let ids = ["s0", "s1", "s2", "s3", "s4", "s5"];
    let gold = to_named_partition(&ids, &[0, 0, 1, 2, 2, 3]);
    let pred = to_named_partition(&ids, &[0, 0, 0, 2, 3, 3]);
    let edges = [1990.0, 2000.0, 2010.0];
    let r = facet_report(&pred, &gold, &ds, Facet::Year, &edges).unwrap();
    let per = b3(&pred, &gold).unwrap().per_record_f1;
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (id, f1) in &per {
        let year = ds.papers[&ds.signatures[id].paper_id].year.unwrap();
        let bin = edges.iter().rposition(|&e| e <= year as f64).unwrap();
        groups.entry(bin).or_default().push(*f1);
    }
    for (bin, vals) in groups {
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        assert_eq!(r.bins[bin].count, vals.len());
        assert!((r.bins[bin].mean_f1.unwrap() - mean).abs() < 1e-12);
    }
    let weighted: f64 = r
        .bins
        .iter()
        .filter_map(|b| b.mean_f1.map(|m| m * b.count as f64))
        .sum::<f64>()
        / 6.0;
    assert!((weighted - b3(&pred, &gold).unwrap().f1).abs() < 1e-12);
}

#[test]
fn facet_errors() {
    assert!(matches!(
        "orcid".parse::<Facet>(),
        Err(Error::UnknownKey { .. })
    ));
    let ds = named_dataset(&[("A", None, "One")]);
    let p = to_named_partition(&["s0"], &[0]);
    assert!(matches!(
        facet_report(&p, &p, &ds, Facet::Year, &[]),
        Err(Error::Empty(_))
    ));
}
