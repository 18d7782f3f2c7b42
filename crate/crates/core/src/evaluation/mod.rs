//! Clustering and ranking metrics.
//!
//! Per-record quantities are always accumulated in signature-id order so
//! that aggregate values do not depend on hash or thread ordering.

mod facets;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::blocking::{normalize_signature, Block};
use crate::corpus::{Dataset, Partition};
use crate::error::{Error, Result};

pub use facets::{facet_report, Facet, FacetBin, FacetReport};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct B3Result {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_record_f1: BTreeMap<String, f64>,
}

fn check_coverage(pred: &Partition, gold: &Partition) -> Result<()> {
    if pred.len() != gold.len() || pred.signature_ids().any(|s| gold.cluster_of(s).is_none()) {
        let missing = gold
            .signature_ids()
            .find(|s| pred.cluster_of(s).is_none())
            .or_else(|| pred.signature_ids().find(|s| gold.cluster_of(s).is_none()))
            .unwrap_or_default();
        return Err(Error::Coverage(format!(
            "predicted and gold partitions cover different signatures (e.g. {missing})"
        )));
    }
    Ok(())
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn b3(pred: &Partition, gold: &Partition) -> Result<B3Result> {
    check_coverage(pred, gold)?;
    if pred.is_empty() {
        return Err(Error::Empty("no records to score".into()));
    }
    let mut pred_size: HashMap<&str, usize> = HashMap::new();
    let mut gold_size: HashMap<&str, usize> = HashMap::new();
    let mut joint: HashMap<(&str, &str), usize> = HashMap::new();
    for (sig, p) in pred.assignment() {
        let g = gold.cluster_of(sig).expect("coverage checked");
        *pred_size.entry(p).or_default() += 1;
        *gold_size.entry(g).or_default() += 1;
        *joint.entry((p, g)).or_default() += 1;
    }

    let (mut sp, mut sr, mut sf) = (0.0, 0.0, 0.0);
    let mut per_record_f1 = BTreeMap::new();
    for (sig, p) in pred.assignment() {
        let g = gold.cluster_of(sig).expect("coverage checked");
        let inter = joint[&(p.as_str(), g)] as f64;
        let precision = inter / pred_size[p.as_str()] as f64;
        let recall = inter / gold_size[g] as f64;
        let f1 = harmonic(precision, recall);
        sp += precision;
        sr += recall;
        sf += f1;
        per_record_f1.insert(sig.clone(), f1);
    }
    let n = pred.len() as f64;
    Ok(B3Result {
        precision: sp / n,
        recall: sr / n,
        f1: sf / n,
        per_record_f1,
    })
}

fn choose2(n: usize) -> f64 {
    (n * n.saturating_sub(1) / 2) as f64
}

/// Pairwise F1 inside each block, averaged over blocks with at least two
/// records.
///
/// No predicted positive pairs gives precision 1, no gold positive pairs
/// gives recall 1, and `P + R = 0` gives F1 0.
pub fn pairwise_macro_f1(pred: &Partition, gold: &Partition, blocks: &[Block]) -> Result<f64> {
    check_coverage(pred, gold)?;
    let mut total = 0.0;
    let mut counted = 0usize;
    for block in blocks {
        if block.len() < 2 {
            continue;
        }
        let mut pred_counts: HashMap<&str, usize> = HashMap::new();
        let mut gold_counts: HashMap<&str, usize> = HashMap::new();
        let mut joint: HashMap<(&str, &str), usize> = HashMap::new();
        for m in &block.members {
            let (Some(p), Some(g)) = (pred.cluster_of(m), gold.cluster_of(m)) else {
                return Err(Error::Coverage(format!(
                    "block {} member {m} is not evaluated",
                    block.key
                )));
            };
            *pred_counts.entry(p).or_default() += 1;
            *gold_counts.entry(g).or_default() += 1;
            *joint.entry((p, g)).or_default() += 1;
        }
        let pred_pos: f64 = pred_counts.values().map(|&c| choose2(c)).sum();
        let gold_pos: f64 = gold_counts.values().map(|&c| choose2(c)).sum();
        let tp: f64 = joint.values().map(|&c| choose2(c)).sum();
        let precision = if pred_pos == 0.0 { 1.0 } else { tp / pred_pos };
        let recall = if gold_pos == 0.0 { 1.0 } else { tp / gold_pos };
        total += harmonic(precision, recall);
        counted += 1;
    }
    if counted == 0 {
        return Err(Error::Empty("no block has two or more records".into()));
    }
    Ok(total / counted as f64)
}

fn check_scores(scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidConfig("scores contain NaN".into()));
    }
    Ok(())
}

/// Mann-Whitney estimate with average ranks; ties count one half.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_scores(scores, labels)?;
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their average
        let avg = (i + j + 2) as f64 / 2.0;
        let pos_in_tie = order[i..=j].iter().filter(|&&k| labels[k]).count();
        rank_sum += avg * pos_in_tie as f64;
        i = j + 1;
    }
    let n_pos = n_pos as f64;
    let u = rank_sum - n_pos * (n_pos + 1.0) / 2.0;
    Ok(u / (n_pos * n_neg as f64))
}

/// Mean precision at the rank of each positive, ranking by descending score.
/// Equal scores keep their input order.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_scores(scores, labels)?;
    let n_pos = labels.iter().filter(|&&l| l).count();
    if n_pos == 0 {
        return Err(Error::Empty("average precision needs a positive".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut hits = 0usize;
    let mut total = 0.0;
    for (rank, &k) in order.iter().enumerate() {
        if labels[k] {
            hits += 1;
            total += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(total / n_pos as f64)
}

fn full_names<'a>(block: &'a Block, dataset: &Dataset) -> Result<Vec<(&'a str, String)>> {
    block
        .members
        .iter()
        .map(|m| {
            Ok((
                m.as_str(),
                normalize_signature(dataset.signature(m)?)?.full(),
            ))
        })
        .collect()
}

fn gold_of<'a>(gold: &'a Partition, sig: &str) -> Result<&'a str> {
    gold.cluster_of(sig)
        .ok_or_else(|| Error::Coverage(format!("gold partition does not cover {sig}")))
}

/// Fraction of block records that share their normalized full name with a
/// record from a different gold cluster.
pub fn homonymity(block: &Block, gold: &Partition, dataset: &Dataset) -> Result<f64> {
    if block.is_empty() {
        return Ok(0.0);
    }
    let names = full_names(block, dataset)?;
    let mut clusters_by_name: HashMap<&str, BTreeSet<&str>> = HashMap::new();
    for (sig, name) in &names {
        clusters_by_name
            .entry(name)
            .or_default()
            .insert(gold_of(gold, sig)?);
    }
    let hits = names
        .iter()
        .filter(|(_, name)| clusters_by_name[name.as_str()].len() > 1)
        .count();
    Ok(hits as f64 / block.len() as f64)
}

/// Fraction of block records whose gold cluster (within the block) contains a
/// differently named record.
pub fn synonymity(block: &Block, gold: &Partition, dataset: &Dataset) -> Result<f64> {
    if block.is_empty() {
        return Ok(0.0);
    }
    let names = full_names(block, dataset)?;
    let mut names_by_cluster: HashMap<&str, BTreeSet<&str>> = HashMap::new();
    for (sig, name) in &names {
        names_by_cluster
            .entry(gold_of(gold, sig)?)
            .or_default()
            .insert(name);
    }
    let mut hits = 0;
    for (sig, _) in &names {
        if names_by_cluster[gold_of(gold, sig)?].len() > 1 {
            hits += 1;
        }
    }
    Ok(hits as f64 / block.len() as f64)
}

#[cfg(test)]
mod tests;
