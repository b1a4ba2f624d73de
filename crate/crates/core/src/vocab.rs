//! Symbol vocabularies, trainable embedding tables and pretrained vectors.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::ssp::SspTriple;

pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";
pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;

/// Dense symbol ids with `PAD` at 0 and `UNK` at 1. Lookup is total.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    symbols: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn from_symbols(symbols: Vec<String>) -> Result<Self> {
        if symbols.len() < 2 || symbols[PAD_ID] != PAD || symbols[UNK_ID] != UNK {
            return Err(Error::Validation("vocabulary must start with <pad>, <unk>".into()));
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate vocabulary symbol {s:?}")));
            }
        }
        Ok(Vocab { symbols, index })
    }

    /// Build from symbol counts: entries below `min_freq` are dropped, the
    /// rest ordered by count descending, then lexicographically.
    pub fn from_counts(counts: &HashMap<&str, usize>, min_freq: usize) -> Self {
        let mut kept: Vec<(&str, usize)> =
            counts.iter().filter(|(s, &c)| c >= min_freq && **s != PAD && **s != UNK).map(|(s, &c)| (*s, c)).collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let symbols = [PAD, UNK].into_iter().chain(kept.into_iter().map(|(s, _)| s)).map(String::from).collect();
        Self::from_symbols(symbols).expect("reserved symbols are in place")
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lookup(&self, symbol: &str) -> usize {
        self.index.get(symbol).copied().unwrap_or(UNK_ID)
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.index.contains_key(symbol)
    }

    pub fn symbol(&self, id: usize) -> &str {
        &self.symbols[id]
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }
}

impl TryFrom<Vec<String>> for Vocab {
    type Error = Error;

    fn try_from(symbols: Vec<String>) -> Result<Self> {
        Vocab::from_symbols(symbols)
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.symbols
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabs {
    pub words: Vocab,
    pub deps: Vocab,
    pub poss: Vocab,
}

/// Words need `min_freq` occurrences; dependency and POS tags are all kept.
pub fn build_vocab<'a, I>(paths: I, min_freq: usize) -> Vocabs
where
    I: IntoIterator<Item = &'a SspTriple>,
{
    let mut words: HashMap<&str, usize> = HashMap::new();
    let mut deps: HashMap<&str, usize> = HashMap::new();
    let mut poss: HashMap<&str, usize> = HashMap::new();
    for p in paths {
        for w in &p.words {
            *words.entry(w).or_default() += 1;
        }
        for d in &p.deps {
            *deps.entry(d).or_default() += 1;
        }
        for t in &p.poss {
            *poss.entry(t).or_default() += 1;
        }
    }
    Vocabs {
        words: Vocab::from_counts(&words, min_freq.max(1)),
        deps: Vocab::from_counts(&deps, 1),
        poss: Vocab::from_counts(&poss, 1),
    }
}

/// `rows × dim` trainable vectors, one row per vocabulary symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable(pub Tensor);

impl EmbeddingTable {
    pub fn uniform<R: Rng>(vocab: &Vocab, dim: usize, scale: f64, rng: &mut R) -> Self {
        EmbeddingTable(Tensor::uniform(vocab.len(), dim, scale, rng))
    }

    pub fn dim(&self) -> usize {
        self.0.cols()
    }

    pub fn row(&self, id: usize) -> &[f64] {
        self.0.row(id)
    }
}

/// Pretrained word vectors in the plain text format:
/// optional `count dim` header, then `token v1 ... vd` per line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PretrainedVectors {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl PretrainedVectors {
    pub fn new(dim: usize) -> Self {
        PretrainedVectors { dim, vectors: BTreeMap::new() }
    }

    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Validation(format!("vector dimension {} != {}", vector.len(), self.dim)));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite vector entry".into()));
        }
        let token = token.into();
        if self.vectors.contains_key(&token) {
            return Err(Error::Validation(format!("duplicate token {token:?}")));
        }
        self.vectors.insert(token, vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.vectors.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Same text format as [`load_pretrained`] reads, with a header line.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.len(), self.dim);
        for (tok, v) in &self.vectors {
            out.push_str(tok);
            for x in v {
                out.push(' ');
                out.push_str(&format!("{x:?}"));
            }
            out.push('\n');
        }
        out
    }
}

pub fn parse_pretrained_str(text: &str) -> Result<PretrainedVectors> {
    let mut out: Option<PretrainedVectors> = None;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if line_no == 1 && fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok()) {
            let dim: usize = fields[1].parse().unwrap();
            out = Some(PretrainedVectors::new(dim));
            continue;
        }
        let values = fields[1..]
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Parse { line: line_no, reason: format!("bad vector value: {e}") })?;
        if values.is_empty() {
            return Err(Error::Parse { line: line_no, reason: "token without vector".into() });
        }
        let table = out.get_or_insert_with(|| PretrainedVectors::new(values.len()));
        if values.len() != table.dim {
            return Err(Error::Parse {
                line: line_no,
                reason: format!("dimension {} does not match {}", values.len(), table.dim),
            });
        }
        table.insert(fields[0], values).map_err(|e| Error::Parse { line: line_no, reason: e.to_string() })?;
    }
    Ok(out.unwrap_or_default())
}

pub fn load_pretrained(path: impl AsRef<Path>) -> Result<PretrainedVectors> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::NotFound { what: "embeddings", path: path.to_path_buf() });
    }
    parse_pretrained_str(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}
