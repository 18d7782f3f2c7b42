use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::{b3, homonymity, synonymity};
use crate::blocking::{block_key, Block};
use crate::corpus::{Dataset, Partition};
use crate::error::{Error, Result};

/// Record attribute used to slice per-record B³ F1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Facet {
    /// Number of evaluated records in the record's block.
    BlockSize,
    /// Size of the record's gold cluster.
    ClusterSize,
    /// Number of authors on the record's paper.
    NumAuthors,
    Year,
    /// Homonymity of the record's block.
    Homonymity,
    /// Synonymity of the record's block.
    Synonymity,
}

impl Facet {
    pub const ALL: [Facet; 6] = [
        Facet::BlockSize,
        Facet::ClusterSize,
        Facet::NumAuthors,
        Facet::Year,
        Facet::Homonymity,
        Facet::Synonymity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Facet::BlockSize => "block_size",
            Facet::ClusterSize => "cluster_size",
            Facet::NumAuthors => "num_authors",
            Facet::Year => "year",
            Facet::Homonymity => "homonymity",
            Facet::Synonymity => "synonymity",
        }
    }

    pub fn default_edges(self) -> Vec<f64> {
        match self {
            Facet::BlockSize => vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0],
            Facet::ClusterSize => vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0],
            Facet::NumAuthors => vec![1.0, 2.0, 3.0, 5.0, 10.0],
            Facet::Year => vec![1980.0, 1990.0, 2000.0, 2010.0, 2020.0],
            Facet::Homonymity | Facet::Synonymity => vec![0.0, 0.1, 0.25, 0.5, 0.75],
        }
    }
}

impl fmt::Display for Facet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Facet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Facet::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownKey {
                what: "facet",
                key: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FacetBin {
    pub label: String,
    /// Inclusive lower edge; `None` for the underflow and missing bins.
    pub lo: Option<f64>,
    /// Exclusive upper edge; `None` when open-ended.
    pub hi: Option<f64>,
    pub count: usize,
    /// `None` for an empty bin.
    pub mean_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FacetReport {
    pub facet: Facet,
    pub bins: Vec<FacetBin>,
}

impl FacetReport {
    /// Tab-separated `facet, bin, count, mean_f1` rows, header first.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("facet\tbin\tcount\tmean_f1\n");
        for bin in &self.bins {
            let mean = bin
                .mean_f1
                .map(|m| format!("{m:.6}"))
                .unwrap_or_else(|| "NA".into());
            out.push_str(&format!(
                "{}\t{}\t{}\t{mean}\n",
                self.facet, bin.label, bin.count
            ));
        }
        out
    }

    pub fn total_count(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }
}

fn fmt_edge(x: f64) -> String {
    if x.fract() == 0.0 {
        format!("{x:.0}")
    } else {
        format!("{x}")
    }
}

/// Per-record facet values; `None` where the underlying field is missing.
fn facet_values(
    facet: Facet,
    pred: &Partition,
    gold: &Partition,
    dataset: &Dataset,
) -> Result<BTreeMap<String, Option<f64>>> {
    let ids: Vec<&str> = pred.signature_ids().collect();
    let mut out = BTreeMap::new();
    match facet {
        Facet::ClusterSize => {
            let mut sizes: HashMap<&str, usize> = HashMap::new();
            for id in &ids {
                *sizes
                    .entry(gold.cluster_of(id).expect("covered"))
                    .or_default() += 1;
            }
            for id in ids {
                let size = sizes[gold.cluster_of(id).expect("covered")];
                out.insert(id.to_string(), Some(size as f64));
            }
        }
        Facet::NumAuthors | Facet::Year => {
            for id in ids {
                let paper = dataset.paper_of(dataset.signature(id)?)?;
                let value = match facet {
                    Facet::NumAuthors => Some(paper.author_names.len() as f64),
                    _ => paper.year.map(f64::from),
                };
                out.insert(id.to_string(), value);
            }
        }
        Facet::BlockSize | Facet::Homonymity | Facet::Synonymity => {
            let mut blocks: BTreeMap<String, Vec<String>> = BTreeMap::new();
            for id in &ids {
                let key = block_key(dataset.signature(id)?)?;
                blocks.entry(key).or_default().push(id.to_string());
            }
            for (key, members) in blocks {
                let block = Block { key, members };
                let value = match facet {
                    Facet::BlockSize => block.len() as f64,
                    Facet::Homonymity => homonymity(&block, gold, dataset)?,
                    _ => synonymity(&block, gold, dataset)?,
                };
                for m in block.members {
                    out.insert(m, Some(value));
                }
            }
        }
    }
    Ok(out)
}

/// Slices per-record B³ F1 by a facet.
///
/// `edges` must be strictly increasing. Bin `i` holds values in
/// `[edges[i], edges[i + 1])` and the last bin is open-ended. Values below the
/// first edge land in an underflow bin and records without a value in a
/// `missing` bin; both appear only when non-empty.
pub fn facet_report(
    pred: &Partition,
    gold: &Partition,
    dataset: &Dataset,
    facet: Facet,
    edges: &[f64],
) -> Result<FacetReport> {
    if edges.is_empty() {
        return Err(Error::Empty("facet bin edges".into()));
    }
    if edges.windows(2).any(|w| w[0] >= w[1]) || edges.iter().any(|e| !e.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "facet edges {edges:?} must be finite and strictly increasing"
        )));
    }
    let scores = b3(pred, gold)?;
    let values = facet_values(facet, pred, gold, dataset)?;

    let n = edges.len();
    // slots: 0 = underflow, 1..=n = regular bins, n + 1 = missing
    let mut sums = vec![0.0; n + 2];
    let mut counts = vec![0usize; n + 2];
    for (id, f1) in &scores.per_record_f1 {
        let slot = match values[id] {
            None => n + 1,
            Some(v) => edges.partition_point(|&e| e <= v),
        };
        sums[slot] += f1;
        counts[slot] += 1;
    }

    let mean = |slot: usize| (counts[slot] > 0).then(|| sums[slot] / counts[slot] as f64);
    let mut bins = Vec::new();
    if counts[0] > 0 {
        bins.push(FacetBin {
            label: format!("<{}", fmt_edge(edges[0])),
            lo: None,
            hi: Some(edges[0]),
            count: counts[0],
            mean_f1: mean(0),
        });
    }
    for i in 0..n {
        let hi = edges.get(i + 1).copied();
        let label = match hi {
            Some(hi) => format!("[{},{})", fmt_edge(edges[i]), fmt_edge(hi)),
            None => format!("[{},inf)", fmt_edge(edges[i])),
        };
        bins.push(FacetBin {
            label,
            lo: Some(edges[i]),
            hi,
            count: counts[i + 1],
            mean_f1: mean(i + 1),
        });
    }
    if counts[n + 1] > 0 {
        bins.push(FacetBin {
            label: "missing".into(),
            lo: None,
            hi: None,
            count: counts[n + 1],
            mean_f1: mean(n + 1),
        });
    }
    Ok(FacetReport { facet, bins })
}
