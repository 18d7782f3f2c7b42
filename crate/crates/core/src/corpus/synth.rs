//! Synthetic corpora with a known gold partition.
//!
//! Each simulated author belongs to a research field, has a small pool of
//! collaborators, two institutions, a few preferred venues and a topic
//! embedding. Papers are drawn around those preferences with configurable
//! noise, so every metadata channel carries partial evidence of authorship.
//! Each paper yields exactly one signature (the simulated author's); the
//! co-authors appear only as names on the paper.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::{Dataset, Paper, Partition, Signature};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub num_authors: usize,
    pub mean_papers_per_author: f64,
    /// Every author gets exactly `round(mean_papers_per_author)` papers.
    pub fixed_paper_count: bool,
    /// Probability that an author copies the full name of an earlier author.
    pub name_collision_rate: f64,
    /// Probability that an author shares an earlier author's last name and
    /// first initial but has a different first name.
    pub initial_collision_rate: f64,
    /// Per-signature probability of a name variant (initialized first name,
    /// dropped or initialized middle name).
    pub synonym_rate: f64,
    pub middle_name_rate: f64,
    pub num_fields: usize,
    pub embedding_dim: usize,
    pub informative_embeddings: bool,
    /// Standard deviation of per-paper embedding noise relative to the
    /// spread of author topic centers.
    pub embedding_noise: f64,
    pub affiliation_rate: f64,
    pub affiliation_change_rate: f64,
    pub email_rate: f64,
    pub abstract_rate: f64,
    pub venue_rate: f64,
    pub journal_rate: f64,
    pub references_rate: f64,
    pub language_rate: f64,
    pub year_rate: f64,
    /// Probability that a co-author slot is filled from the author's
    /// collaborator pool rather than by a stranger.
    pub coauthor_loyalty: f64,
    /// Probability that a paper is published at one of the author's
    /// preferred venues.
    pub venue_loyalty: f64,
    /// Share of title and abstract words drawn from the author's own small
    /// vocabulary rather than the field's.
    pub pet_word_rate: f64,
    /// Probability that a reference points at one of the author's earlier
    /// papers rather than any paper of the field.
    pub self_citation_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_authors: 200,
            mean_papers_per_author: 6.0,
            fixed_paper_count: false,
            name_collision_rate: 0.15,
            initial_collision_rate: 0.05,
            synonym_rate: 0.1,
            middle_name_rate: 0.3,
            num_fields: 6,
            embedding_dim: 16,
            informative_embeddings: true,
            embedding_noise: 0.9,
            affiliation_rate: 0.5,
            affiliation_change_rate: 0.25,
            email_rate: 0.15,
            abstract_rate: 0.8,
            venue_rate: 0.85,
            journal_rate: 0.4,
            references_rate: 0.7,
            language_rate: 0.9,
            year_rate: 0.95,
            coauthor_loyalty: 0.7,
            venue_loyalty: 0.4,
            pet_word_rate: 0.1,
            self_citation_rate: 0.2,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_authors == 0 {
            return Err(Error::InvalidConfig("num_authors must be positive".into()));
        }
        if self.num_authors == 1
            && (self.name_collision_rate > 0.0 || self.initial_collision_rate > 0.0)
        {
            return Err(Error::InvalidConfig(
                "name collisions need at least two authors".into(),
            ));
        }
        if self.mean_papers_per_author.is_nan() || self.mean_papers_per_author < 1.0 {
            return Err(Error::InvalidConfig(
                "mean_papers_per_author must be at least 1".into(),
            ));
        }
        if self.num_fields == 0 || self.embedding_dim == 0 {
            return Err(Error::InvalidConfig(
                "num_fields and embedding_dim must be positive".into(),
            ));
        }
        if self.embedding_noise.is_nan() || self.embedding_noise < 0.0 {
            return Err(Error::InvalidConfig("embedding_noise must be >= 0".into()));
        }
        let rates = [
            ("name_collision_rate", self.name_collision_rate),
            ("initial_collision_rate", self.initial_collision_rate),
            ("synonym_rate", self.synonym_rate),
            ("middle_name_rate", self.middle_name_rate),
            ("affiliation_rate", self.affiliation_rate),
            ("affiliation_change_rate", self.affiliation_change_rate),
            ("email_rate", self.email_rate),
            ("abstract_rate", self.abstract_rate),
            ("venue_rate", self.venue_rate),
            ("journal_rate", self.journal_rate),
            ("references_rate", self.references_rate),
            ("language_rate", self.language_rate),
            ("year_rate", self.year_rate),
            ("coauthor_loyalty", self.coauthor_loyalty),
            ("venue_loyalty", self.venue_loyalty),
            ("pet_word_rate", self.pet_word_rate),
            ("self_citation_rate", self.self_citation_rate),
        ];
        for (name, rate) in rates {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::InvalidConfig(format!(
                    "{name} = {rate} is outside [0, 1]"
                )));
            }
        }
        if self.name_collision_rate + self.initial_collision_rate > 1.0 {
            return Err(Error::InvalidConfig(
                "name_collision_rate + initial_collision_rate exceeds 1".into(),
            ));
        }
        Ok(())
    }
}

const FIRST_NAMES: &[&str] = &[
    "Aaron", "Adele", "Alice", "Amir", "Bernd", "Bianca", "Boris", "Carla", "Chen", "Claire",
    "Daniel", "Dora", "Dmitri", "Elena", "Emil", "Esther", "Farid", "Fiona", "Felix", "Greta",
    "Gustavo", "Hana", "Hector", "Hugo", "Ines", "Igor", "Ivana", "James", "John", "Julia",
    "Karim", "Klara", "Kenji", "Lena", "Luis", "Lucia", "Marco", "Maya", "Mei", "Nadia", "Nikolai",
    "Nora", "Olga", "Omar", "Oscar", "Paolo", "Petra", "Priya", "Rafael", "Rosa", "Ruth", "Sergey",
    "Sofia", "Stefan", "Tamar", "Tomas", "Theo", "Uma", "Victor", "Vera", "Wei", "Walter", "Yusuf",
    "Yara", "Zofia", "Zane",
];

const MIDDLE_NAMES: &[&str] = &[
    "Alexander",
    "Beatrice",
    "Carl",
    "Diane",
    "Edward",
    "Francis",
    "Grace",
    "Henry",
    "Irene",
    "Joseph",
    "Louise",
    "Marie",
    "Noel",
    "Paul",
    "Rose",
    "Thomas",
];

const SYLLABLES: &[&str] = &[
    "ber", "cal", "dor", "fen", "gar", "hol", "ist", "jan", "kov", "lin", "mar", "nes", "ost",
    "pra", "quin", "ros", "sel", "tan", "ul", "vak", "wen", "yam", "zer", "bri", "sto", "mun",
    "dal", "eck", "fra", "gon",
];

const WORD_STEMS: &[&str] = &[
    "graph",
    "neural",
    "protein",
    "quantum",
    "sparse",
    "robust",
    "causal",
    "kernel",
    "lattice",
    "spectral",
    "genome",
    "fluid",
    "market",
    "privacy",
    "stochastic",
    "manifold",
    "topology",
    "cellular",
    "optical",
    "semantic",
    "bayesian",
    "dynamic",
    "thermal",
    "catalyst",
    "signal",
    "entropy",
    "tensor",
    "cortex",
    "galaxy",
    "polymer",
    "enzyme",
    "auction",
    "compiler",
    "wireless",
    "vision",
    "speech",
    "ligand",
    "plasma",
    "soil",
    "climate",
    "vaccine",
    "circuit",
    "memory",
    "robot",
    "crystal",
    "ocean",
    "tumor",
    "crowd",
];

const GENERIC_WORDS: &[&str] = &[
    "analysis",
    "of",
    "the",
    "for",
    "a",
    "novel",
    "approach",
    "towards",
    "learning",
    "model",
    "study",
    "on",
    "with",
    "efficient",
    "methods",
    "using",
    "new",
    "framework",
    "in",
    "and",
];

const LANGUAGES: &[&str] = &["de", "zh", "fr", "es"];

/// Per-field vocabulary, venues and embedding center.
struct Field {
    words: Vec<String>,
    venues: Vec<String>,
    journals: Vec<String>,
    center: Vec<f64>,
}

struct Author {
    first: String,
    middle: Option<String>,
    last: String,
    field: usize,
    institutions: [usize; 2],
    collaborators: Vec<String>,
    venues: Vec<usize>,
    journals: Vec<usize>,
    pet_words: Vec<String>,
    center: Vec<f64>,
    start_year: i32,
}

fn normal_vec(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    let normal = Normal::new(0.0, scale).expect("finite scale");
    (0..dim).map(|_| normal.sample(rng)).collect()
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn fresh_last_name(rng: &mut ChaCha8Rng, used: &mut HashSet<String>) -> String {
    loop {
        let n = rng.random_range(2..=3);
        let name: String = (0..n)
            .map(|_| *SYLLABLES.choose(rng).expect("non-empty"))
            .collect();
        let name = capitalize(&name);
        if used.insert(name.clone()) {
            return name;
        }
    }
}

fn stranger_name(rng: &mut ChaCha8Rng) -> String {
    let first = FIRST_NAMES.choose(rng).expect("non-empty");
    let n = rng.random_range(2..=3);
    let last: String = (0..n)
        .map(|_| *SYLLABLES.choose(rng).expect("non-empty"))
        .collect();
    format!("{first} {}", capitalize(&last))
}

fn make_fields(rng: &mut ChaCha8Rng, cfg: &SynthConfig) -> Vec<Field> {
    (0..cfg.num_fields)
        .map(|f| {
            let mut stems: Vec<&str> = WORD_STEMS.to_vec();
            stems.shuffle(rng);
            let words = stems[..12].iter().map(|s| s.to_string()).collect();
            let tag = capitalize(stems[0]);
            let venues = (0..6)
                .map(|v| format!("Conference on {tag} Systems {f}{v}"))
                .collect();
            let journals = (0..4)
                .map(|j| format!("Journal of {tag} Research {f}{j}"))
                .collect();
            Field {
                words,
                venues,
                journals,
                center: unit(normal_vec(rng, cfg.embedding_dim, 1.0)),
            }
        })
        .collect()
}

fn institution_name(i: usize) -> String {
    const PLACES: &[&str] = &[
        "Northfield",
        "Riverside",
        "Eastbrook",
        "Westmoor",
        "Lakeshore",
        "Highgate",
        "Stonebridge",
        "Ashford",
        "Kingsport",
        "Oakridge",
    ];
    const KINDS: &[&str] = &[
        "University of",
        "Institute of Technology",
        "Research Center",
        "Polytechnic",
    ];
    let place = PLACES[i % PLACES.len()];
    let kind = KINDS[(i / PLACES.len()) % KINDS.len()];
    if kind.ends_with("of") {
        format!("{kind} {place}")
    } else {
        format!("{place} {kind}")
    }
}

const NUM_INSTITUTIONS: usize = 40;

fn make_authors(rng: &mut ChaCha8Rng, cfg: &SynthConfig, fields: &[Field]) -> Vec<Author> {
    let mut used_last = HashSet::new();
    let mut authors: Vec<Author> = Vec::with_capacity(cfg.num_authors);
    for _ in 0..cfg.num_authors {
        let field = rng.random_range(0..fields.len());
        let roll: f64 = rng.random();
        let (first, middle, last) = if !authors.is_empty() && roll < cfg.name_collision_rate {
            let other = authors.choose(rng).expect("non-empty");
            (
                other.first.clone(),
                other.middle.clone(),
                other.last.clone(),
            )
        } else if !authors.is_empty() && roll < cfg.name_collision_rate + cfg.initial_collision_rate
        {
            let other = authors.choose(rng).expect("non-empty");
            let initial = other.first.chars().next();
            let alternatives: Vec<&&str> = FIRST_NAMES
                .iter()
                .filter(|n| n.chars().next() == initial && **n != other.first)
                .collect();
            let first = alternatives
                .choose(rng)
                .map(|s| s.to_string())
                .unwrap_or_else(|| other.first.clone());
            (first, None, other.last.clone())
        } else {
            let first = FIRST_NAMES.choose(rng).expect("non-empty").to_string();
            let middle = (rng.random::<f64>() < cfg.middle_name_rate)
                .then(|| MIDDLE_NAMES.choose(rng).expect("non-empty").to_string());
            (first, middle, fresh_last_name(rng, &mut used_last))
        };

        let n_collab = rng.random_range(3..=6);
        let collaborators = (0..n_collab).map(|_| stranger_name(rng)).collect();
        let fw = &fields[field];
        let mut venue_ids: Vec<usize> = (0..fw.venues.len()).collect();
        venue_ids.shuffle(rng);
        let mut journal_ids: Vec<usize> = (0..fw.journals.len()).collect();
        journal_ids.shuffle(rng);
        let mut words = fw.words.clone();
        words.shuffle(rng);
        let offset = normal_vec(rng, cfg.embedding_dim, 1.0);
        let center = unit(
            fw.center
                .iter()
                .zip(&offset)
                .map(|(c, o)| c + 0.8 * o / (cfg.embedding_dim as f64).sqrt() * 2.0)
                .collect(),
        );
        authors.push(Author {
            first,
            middle,
            last,
            field,
            institutions: [
                rng.random_range(0..NUM_INSTITUTIONS),
                rng.random_range(0..NUM_INSTITUTIONS),
            ],
            collaborators,
            venues: venue_ids[..2].to_vec(),
            journals: journal_ids[..1].to_vec(),
            pet_words: words[..4].to_vec(),
            center,
            start_year: rng.random_range(1985..=2015),
        });
    }
    authors
}

fn text_from(
    rng: &mut ChaCha8Rng,
    pet: &[String],
    pet_rate: f64,
    field: &[String],
    len: usize,
) -> String {
    let mut words = Vec::with_capacity(len);
    for _ in 0..len {
        let r: f64 = rng.random();
        let w = if r < pet_rate {
            pet.choose(rng).expect("non-empty").clone()
        } else if r < pet_rate + (1.0 - pet_rate) / 2.0 {
            field.choose(rng).expect("non-empty").clone()
        } else {
            GENERIC_WORDS.choose(rng).expect("non-empty").to_string()
        };
        words.push(w);
    }
    let mut text = words.join(" ");
    if let Some(first) = text.get(..1) {
        text = first.to_uppercase() + &text[1..];
    }
    text
}

/// Generates a corpus with known gold clusters (one cluster per simulated
/// author).
pub fn generate_synthetic_corpus(seed: u64, config: &SynthConfig) -> Result<Dataset> {
    config.validate()?;
    let cfg = config;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields = make_fields(&mut rng, cfg);
    let authors = make_authors(&mut rng, cfg, &fields);

    let mut slots: Vec<usize> = Vec::new();
    for (a, _) in authors.iter().enumerate() {
        let k = if cfg.fixed_paper_count {
            cfg.mean_papers_per_author.round() as usize
        } else if cfg.mean_papers_per_author > 1.0 {
            let poisson = Poisson::new(cfg.mean_papers_per_author - 1.0).expect("positive mean");
            1 + poisson.sample(&mut rng) as usize
        } else {
            1
        };
        slots.extend(std::iter::repeat_n(a, k));
    }
    slots.shuffle(&mut rng);

    let mut papers: Vec<Paper> = Vec::with_capacity(slots.len());
    let mut signatures = Vec::with_capacity(slots.len());
    let mut gold = BTreeMap::new();
    let mut by_author: Vec<Vec<usize>> = vec![Vec::new(); authors.len()];
    let mut by_field: Vec<Vec<usize>> = vec![Vec::new(); fields.len()];
    let noise = Normal::new(0.0, 1.0).expect("unit normal");

    for (idx, &a) in slots.iter().enumerate() {
        let author = &authors[a];
        let field = &fields[author.field];
        let paper_id = format!("p{idx:05}");
        let signature_id = format!("s{idx:05}");

        let n_coauthors = rng.random_range(0..=4);
        let mut coauthors: Vec<String> = Vec::with_capacity(n_coauthors);
        for _ in 0..n_coauthors {
            let name = if rng.random::<f64>() < cfg.coauthor_loyalty {
                author
                    .collaborators
                    .choose(&mut rng)
                    .expect("non-empty")
                    .clone()
            } else {
                stranger_name(&mut rng)
            };
            if !coauthors.contains(&name) {
                coauthors.push(name);
            }
        }

        // Name variant for this signature.
        let mut first = author.first.clone();
        let mut middle = author.middle.clone();
        if rng.random::<f64>() < cfg.synonym_rate {
            if middle.is_some() && rng.random::<bool>() {
                middle = if rng.random::<bool>() {
                    None
                } else {
                    middle.map(|m| format!("{}.", &m[..1]))
                };
            } else {
                first = format!("{}.", &first[..1]);
            }
        }
        let focal_name = match &middle {
            Some(m) => format!("{first} {m} {}", author.last),
            None => format!("{first} {}", author.last),
        };
        let position = rng.random_range(0..=coauthors.len());
        let mut author_names = coauthors;
        author_names.insert(position, focal_name);

        let year = (rng.random::<f64>() < cfg.year_rate)
            .then(|| author.start_year + rng.random_range(0..=12));
        let title_len = rng.random_range(5..=9);
        let title = text_from(
            &mut rng,
            &author.pet_words,
            cfg.pet_word_rate,
            &field.words,
            title_len,
        );
        let abstract_text = (rng.random::<f64>() < cfg.abstract_rate).then(|| {
            let len = rng.random_range(25..=45);
            text_from(
                &mut rng,
                &author.pet_words,
                cfg.pet_word_rate,
                &field.words,
                len,
            )
        });
        let venue = (rng.random::<f64>() < cfg.venue_rate).then(|| {
            let v = if rng.random::<f64>() < cfg.venue_loyalty {
                *author.venues.choose(&mut rng).expect("non-empty")
            } else {
                rng.random_range(0..field.venues.len())
            };
            field.venues[v].clone()
        });
        let journal = (rng.random::<f64>() < cfg.journal_rate).then(|| {
            let j = if rng.random::<f64>() < cfg.venue_loyalty {
                author.journals[0]
            } else {
                rng.random_range(0..field.journals.len())
            };
            field.journals[j].clone()
        });
        let language = (rng.random::<f64>() < cfg.language_rate).then(|| {
            if rng.random::<f64>() < 0.9 {
                "en".to_string()
            } else {
                LANGUAGES.choose(&mut rng).expect("non-empty").to_string()
            }
        });

        let mut reference_ids = BTreeSet::new();
        if rng.random::<f64>() < cfg.references_rate {
            let n_refs = rng.random_range(1..=6);
            for _ in 0..n_refs {
                let own = &by_author[a];
                let pool = if !own.is_empty() && rng.random::<f64>() < cfg.self_citation_rate {
                    own
                } else {
                    &by_field[author.field]
                };
                if let Some(&r) = pool.choose(&mut rng) {
                    reference_ids.insert(papers[r].paper_id.clone());
                }
            }
        }

        let embedding = if cfg.informative_embeddings {
            let scale = cfg.embedding_noise / (cfg.embedding_dim as f64).sqrt();
            author
                .center
                .iter()
                .map(|c| c + scale * noise.sample(&mut rng))
                .collect()
        } else {
            normal_vec(&mut rng, cfg.embedding_dim, 1.0)
        };

        let inst = if rng.random::<f64>() < cfg.affiliation_change_rate {
            author.institutions[1]
        } else {
            author.institutions[0]
        };
        let affiliations = if rng.random::<f64>() < cfg.affiliation_rate {
            vec![institution_name(inst)]
        } else {
            vec![]
        };
        let email = (rng.random::<f64>() < cfg.email_rate).then(|| {
            let domain = institution_name(inst)
                .split_whitespace()
                .filter(|w| *w != "of")
                .map(|w| w.to_lowercase())
                .collect::<Vec<_>>()
                .join("-");
            format!(
                "{}.{}@{domain}.edu",
                author.first.to_lowercase(),
                author.last.to_lowercase()
            )
        });

        papers.push(Paper {
            paper_id: paper_id.clone(),
            title,
            abstract_text,
            venue,
            journal,
            year,
            author_names,
            reference_ids,
            language,
            embedding: Some(embedding),
        });
        signatures.push(Signature {
            signature_id: signature_id.clone(),
            paper_id,
            author_position: position + 1,
            first: Some(first),
            middle,
            last: author.last.clone(),
            suffix: None,
            affiliations,
            email,
        });
        gold.insert(signature_id, format!("a{a:04}"));
        by_author[a].push(idx);
        by_field[author.field].push(idx);
    }

    Dataset::new(papers, signatures, Some(Partition::from_assignment(gold)))
}
