//! Planted-relation synthetic corpora.
//!
//! Four built-in relations, each with three hand-parsed sentence templates.
//! Every template is built so that the words strictly inside the
//! subject-object path are either stopwords or one of the relation's
//! trigger words.
//!
//! Toy 16-dimensional word vectors:
//! - relation `r` (0..4) owns axis `r`; its trigger words are `e_r` plus a
//!   0.25-length offset along one of axes 4..12, so triggers of different
//!   relations are nearly orthogonal;
//! - relation names are `e_r + 0.1·e_{12+r}` (a name that is also a
//!   trigger word keeps the trigger vector);
//! - every other template word gets a seeded random unit vector on axes
//!   8..16, away from all relation axes.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{EntitySpan, PairKey, ParsedSentence, Token};
use crate::error::{Error, Result};
use crate::eval::{GoldAssignment, GoldRecord};
use crate::vocab::PretrainedVectors;

pub const EMBEDDING_DIM: usize = 16;
pub const SUBJECT_SLOT: &str = "{S}";
pub const OBJECT_SLOT: &str = "{O}";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntityKind {
    Person,
    City,
    Country,
    Company,
}

/// `(text, pos, dep, head)`; `head` indexes the template, -1 for the root.
pub type TemplateToken = (&'static str, &'static str, &'static str, i64);

#[derive(Debug, Clone, Copy)]
pub struct SentenceTemplate {
    pub tokens: &'static [TemplateToken],
    pub trigger: &'static str,
}

#[derive(Debug, Clone, Copy)]
pub struct RelationTemplate {
    pub name: &'static str,
    pub subject: EntityKind,
    pub object: EntityKind,
    pub templates: &'static [SentenceTemplate],
}

impl RelationTemplate {
    pub fn triggers(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.templates.iter().map(|t| t.trigger)
    }
}

pub const RELATIONS: &[RelationTemplate] = &[
    RelationTemplate {
        name: "capital",
        subject: EntityKind::City,
        object: EntityKind::Country,
        templates: &[
            SentenceTemplate {
                tokens: &[
                    ("{S}", "PROPN", "nsubj", 1),
                    ("is", "AUX", "ROOT", -1),
                    ("the", "DET", "det", 3),
                    ("capital", "NOUN", "attr", 1),
                    ("of", "ADP", "prep", 3),
                    ("{O}", "PROPN", "pobj", 4),
                    (".", "PUNCT", "punct", 1),
                ],
                trigger: "capital",
            },
            SentenceTemplate {
                tokens: &[
                    ("{S}", "PROPN", "nsubj", 1),
                    ("is", "AUX", "ROOT", -1),
                    ("the", "DET", "det", 4),
                    ("chief", "ADJ", "amod", 4),
                    ("metropolis", "NOUN", "attr", 1),
                    ("of", "ADP", "prep", 4),
                    ("{O}", "PROPN", "pobj", 5),
                    (".", "PUNCT", "punct", 1),
                ],
                trigger: "metropolis",
            },
            SentenceTemplate {
                tokens: &[
                    ("{O}", "PROPN", "nsubj", 1),
                    ("has", "VERB", "ROOT", -1),
                    ("its", "PRON", "poss", 3),
                    ("seat", "NOUN", "dobj", 1),
                    ("of", "ADP", "prep", 3),
                    ("government", "NOUN", "pobj", 4),
                    ("in", "ADP", "prep", 3),
                    ("{S}", "PROPN", "pobj", 6),
                    (".", "PUNCT", "punct", 1),
                ],
                trigger: "seat",
            },
        ],
    },
    RelationTemplate {
        name: "placeBirth",
        subject: EntityKind::Person,
        object: EntityKind::City,
        templates: &[
            SentenceTemplate {
                tokens: &[
                    ("{S}", "PROPN", "nsubjpass", 2),
                    ("was", "AUX", "auxpass", 2),
                    ("born", "VERB", "ROOT", -1),
                    ("in", "ADP", "prep", 2),
                    ("{O}", "PROPN", "pobj", 3),
                    (".", "PUNCT", "punct", 2),
                ],
                trigger: "born",
            },
            SentenceTemplate {
                tokens: &[
                    ("{S}", "PROPN", "nsubj", 1),
                    ("is", "AUX", "ROOT", -1),
                    ("a", "DET", "det", 3),
                    ("native", "NOUN", "attr", 1),
                    ("of", "ADP", "prep", 3),
                    ("{O}", "PROPN", "pobj", 4),
                    (".", "PUNCT", "punct", 1),
                ],
                trigger: "native",
            },
            SentenceTemplate {
                tokens: &[
                    ("{O}", "PROPN", "nsubj", 1),
                    ("is", "AUX", "ROOT", -1),
                    ("the", "DET", "det", 3),
                    ("birthplace", "NOUN", "attr", 1),
                    ("of", "ADP", "prep", 3),
                    ("{S}", "PROPN", "pobj", 4),
                    (".", "PUNCT", "punct", 1),
                ],
                trigger: "birthplace",
            },
        ],
    },
    RelationTemplate {
        name: "founders",
        subject: EntityKind::Person,
        object: EntityKind::Company,
        templates: &[
            SentenceTemplate {
                tokens: &[
                    ("{S}", "PROPN", "nsubj", 1),
                    ("founded", "VERB", "ROOT", -1),
                    ("{O}", "PROPN", "dobj", 1),
                    ("in", "ADP", "prep", 1),
                    ("1998", "NUM", "pobj", 3),
                    (".", "PUNCT", "punct", 1),
                ],
                trigger: "founded",
            },
            SentenceTemplate {
                tokens: &[
                    ("{S}", "PROPN", "nsubj", 1),
                    ("is", "AUX", "ROOT", -1),
                    ("the", "DET", "det", 3),
                    ("founder", "NOUN", "attr", 1),
                    ("of", "ADP", "prep", 3),
                    ("{O}", "PROPN", "pobj", 4),
                    (".", "PUNCT", "punct", 1),
                ],
                trigger: "founder",
            },
            SentenceTemplate {
                tokens: &[
                    ("{O}", "PROPN", "nsubjpass", 2),
                    ("was", "AUX", "auxpass", 2),
                    ("established", "VERB", "ROOT", -1),
                    ("by", "ADP", "agent", 2),
                    ("{S}", "PROPN", "pobj", 3),
                    (".", "PUNCT", "punct", 2),
                ],
                trigger: "established",
            },
        ],
    },
    RelationTemplate {
        name: "neighborOf",
        subject: EntityKind::Country,
        object: EntityKind::Country,
        templates: &[
            SentenceTemplate {
                tokens: &[
                    ("{S}", "PROPN", "nsubj", 1),
                    ("borders", "VERB", "ROOT", -1),
                    ("{O}", "PROPN", "dobj", 1),
                    ("to", "ADP", "prep", 1),
                    ("the", "DET", "det", 5),
                    ("north", "NOUN", "pobj", 3),
                    (".", "PUNCT", "punct", 1),
                ],
                trigger: "borders",
            },
            SentenceTemplate {
                tokens: &[
                    ("{S}", "PROPN", "nsubj", 1),
                    ("is", "AUX", "ROOT", -1),
                    ("a", "DET", "det", 3),
                    ("neighbor", "NOUN", "attr", 1),
                    ("of", "ADP", "prep", 3),
                    ("{O}", "PROPN", "pobj", 4),
                    (".", "PUNCT", "punct", 1),
                ],
                trigger: "neighbor",
            },
            SentenceTemplate {
                tokens: &[
                    ("{S}", "PROPN", "nsubj", 1),
                    ("is", "AUX", "ROOT", -1),
                    ("adjacent", "ADJ", "acomp", 1),
                    ("to", "ADP", "prep", 2),
                    ("{O}", "PROPN", "pobj", 3),
                    (".", "PUNCT", "punct", 1),
                ],
                trigger: "adjacent",
            },
        ],
    },
];

const FIRST_NAMES: &[&str] = &["Ada", "Boris", "Clara", "Dmitri"];
const LAST_NAMES: &[&str] = &["Albrecht", "Brennan", "Castell", "Dorsey", "Ekwueme", "Fontaine", "Gallo", "Hartmann"];
const CITIES: &[&str] =
    &["Arvella", "Belmora", "Corvath", "Dunmere", "Elsinor", "Farrow", "Galdera", "Havik", "Istrava", "Jorvale"];
const COUNTRIES: &[&str] = &[
    "Aldoria",
    "Borovia",
    "Calvania",
    "Drakmoor",
    "Estoria",
    "Fennland",
    "New Ubria",
    "South Veldt",
    "Costa Wren",
    "Upper Zandar",
];
const COMPANIES: &[&str] =
    &["Initech", "Globex", "Vandelay", "Hooli", "Soylent", "Cyberdyne", "Tyrell", "Umbrella", "Wonka", "Stark"];

fn pool(kind: EntityKind) -> Vec<String> {
    match kind {
        EntityKind::Person => {
            FIRST_NAMES.iter().flat_map(|f| LAST_NAMES.iter().map(move |l| format!("{f} {l}"))).collect()
        }
        EntityKind::City => CITIES.iter().map(|s| s.to_string()).collect(),
        EntityKind::Country => COUNTRIES.iter().map(|s| s.to_string()).collect(),
        EntityKind::Company => COMPANIES.iter().map(|s| s.to_string()).collect(),
    }
}

/// Fill a template. Multi-word names become `compound` tokens attached to
/// their last word, which takes the slot's role.
pub fn realize(template: &SentenceTemplate, id: String, subject: &str, object: &str) -> ParsedSentence {
    let filler = |text: &str| -> Option<Vec<String>> {
        match text {
            SUBJECT_SLOT => Some(subject.split_whitespace().map(String::from).collect()),
            OBJECT_SLOT => Some(object.split_whitespace().map(String::from).collect()),
            _ => None,
        }
    };
    // output index of each template token's syntactic head word
    let mut anchor = Vec::with_capacity(template.tokens.len());
    let mut next = 0usize;
    for (text, ..) in template.tokens {
        let width = filler(text).map_or(1, |w| w.len());
        anchor.push(next + width - 1);
        next += width;
    }
    let mut tokens = Vec::with_capacity(next);
    let mut subject_span = None;
    let mut object_span = None;
    for (t, &(text, pos, dep, head)) in template.tokens.iter().enumerate() {
        let head = if head < 0 { -1 } else { anchor[head as usize] as i64 };
        match filler(text) {
            Some(words) => {
                let start = tokens.len();
                let last = anchor[t] as i64;
                for (k, w) in words.iter().enumerate() {
                    let is_last = k + 1 == words.len();
                    tokens.push(Token {
                        text: w.clone(),
                        pos: "PROPN".into(),
                        dep: if is_last { dep.into() } else { "compound".into() },
                        head: if is_last { head } else { last },
                    });
                }
                let span = Some((start, tokens.len()));
                if text == SUBJECT_SLOT {
                    subject_span = span;
                } else {
                    object_span = span;
                }
            }
            None => tokens.push(Token { text: text.into(), pos: pos.into(), dep: dep.into(), head }),
        }
    }
    let (ss, se) = subject_span.expect("template has a subject slot");
    let (os, oe) = object_span.expect("template has an object slot");
    ParsedSentence {
        id,
        tokens,
        subject: EntitySpan { start: ss, end: se, canonical: subject.to_string() },
        object: EntitySpan { start: os, end: oe, canonical: object.to_string() },
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub sentences: Vec<ParsedSentence>,
    pub gold: GoldAssignment,
    pub embeddings: PretrainedVectors,
}

/// `relations` built-in relations, `pairs` distinct pairs per relation and
/// `sentences` template realizations per pair (templates drawn with
/// replacement).
pub fn generate(relations: usize, pairs: usize, sentences: usize, seed: u64) -> Result<SynthCorpus> {
    if relations == 0 || relations > RELATIONS.len() {
        return Err(Error::Validation(format!("relations must be in 1..={}", RELATIONS.len())));
    }
    if sentences < 2 {
        return Err(Error::Validation("at least 2 sentences per pair are needed".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(relations * pairs * sentences);
    let mut gold = Vec::new();
    for rel in &RELATIONS[..relations] {
        let subjects = pool(rel.subject);
        let objects = pool(rel.object);
        let possible = subjects.len() * objects.len() - if rel.subject == rel.object { subjects.len() } else { 0 };
        if pairs > possible {
            return Err(Error::Validation(format!("{}: at most {possible} distinct pairs", rel.name)));
        }
        let mut seen = BTreeSet::new();
        while seen.len() < pairs {
            let s = subjects.choose(&mut rng).expect("pool");
            let o = objects.choose(&mut rng).expect("pool");
            if s == o || !seen.insert((s.clone(), o.clone())) {
                continue;
            }
            let p = seen.len() - 1;
            for k in 0..sentences {
                let template = &rel.templates[rng.gen_range(0..rel.templates.len())];
                out.push(realize(template, format!("{}-{p}-{k}", rel.name), s, o));
            }
            gold.push(GoldRecord { pair: PairKey(s.clone(), o.clone()), relations: vec![rel.name.to_string()] });
        }
    }
    Ok(SynthCorpus {
        sentences: out,
        gold: GoldAssignment::from_records(gold)?,
        embeddings: toy_embeddings(&RELATIONS[..relations], seed),
    })
}

fn axis(i: usize, scale: f64) -> Vec<f64> {
    let mut v = vec![0.0; EMBEDDING_DIM];
    v[i] = scale;
    v
}

/// Toy vectors for all template words and relation names (see module docs).
pub fn toy_embeddings(relations: &[RelationTemplate], seed: u64) -> PretrainedVectors {
    let mut vecs: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (r, rel) in relations.iter().enumerate() {
        for (k, trig) in rel.triggers().enumerate() {
            let mut v = axis(r, 1.0);
            v[4 + (2 * r + k) % 8] += 0.25;
            vecs.entry(trig.to_string()).or_insert(v);
        }
    }
    for (r, rel) in relations.iter().enumerate() {
        let mut v = axis(r, 1.0);
        v[12 + r] += 0.1;
        vecs.entry(rel.name.to_string()).or_insert(v);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xE_3BED);
    let others: BTreeSet<&str> = relations
        .iter()
        .flat_map(|r| r.templates.iter())
        .flat_map(|t| t.tokens.iter().map(|tok| tok.0))
        .filter(|w| *w != SUBJECT_SLOT && *w != OBJECT_SLOT)
        .collect();
    for w in others {
        if vecs.contains_key(w) {
            continue;
        }
        let mut v = vec![0.0; EMBEDDING_DIM];
        for x in &mut v[8..] {
            *x = rng.gen_range(-1.0..1.0);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        vecs.insert(w.to_string(), v);
    }
    let mut table = PretrainedVectors::new(EMBEDDING_DIM);
    for (w, v) in vecs {
        table.insert(w, v).expect("distinct finite vectors");
    }
    table
}

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const GOLD_FILE: &str = "gold.jsonl";
pub const EMBEDDINGS_FILE: &str = "embeddings.txt";

impl SynthCorpus {
    pub fn corpus_text(&self) -> String {
        self.sentences.iter().map(|s| s.to_record() + "\n").collect()
    }

    pub fn gold_text(&self) -> String {
        self.gold.records().map(|r| serde_json::to_string(&r).expect("serializable") + "\n").collect()
    }

    /// Write `corpus.jsonl`, `gold.jsonl` and `embeddings.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, text) in [
            (CORPUS_FILE, self.corpus_text()),
            (GOLD_FILE, self.gold_text()),
            (EMBEDDINGS_FILE, self.embeddings.to_text()),
        ] {
            let p = dir.join(name);
            fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}
