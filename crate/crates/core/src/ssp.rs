//! Shortest dependency paths between the two entities of a sentence.

use serde::{Deserialize, Serialize};

use crate::corpus::{EntitySpan, ParsedSentence};
use crate::error::{Error, Result};
use crate::vocab::PAD;

pub const SUBJECT_DEPS: &[&str] = &["nsubj", "nsubjpass", "csubj"];
pub const OBJECT_DEPS: &[&str] = &["dobj", "pobj", "iobj", "obj"];
pub const MODIFIER_DEPS: &[&str] = &["amod", "nmod", "appos", "poss"];

/// Word, dependency-tag and POS-tag sequences along one path.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SspTriple {
    pub words: Vec<String>,
    pub deps: Vec<String>,
    pub poss: Vec<String>,
}

impl SspTriple {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    fn select(&self, idx: impl Iterator<Item = usize> + Clone) -> SspTriple {
        let pick = |v: &Vec<String>| idx.clone().map(|i| v[i].clone()).collect();
        SspTriple { words: pick(&self.words), deps: pick(&self.deps), poss: pick(&self.poss) }
    }
}

/// A path brought to a fixed length, remembering how many leading
/// positions are real.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaddedPath {
    pub path: SspTriple,
    pub len: usize,
}

/// Pick the token that stands for a (possibly multi-token) entity span.
///
/// Preference goes to subject-like dependency tags, then object-like, then
/// modifiers. Without any of those the span's syntactic head wins: the token
/// whose head lies outside the span (the last such token on ties).
pub fn representative_token(sentence: &ParsedSentence, span: &EntitySpan) -> usize {
    let range = span.start..span.end.min(sentence.tokens.len());
    for tags in [SUBJECT_DEPS, OBJECT_DEPS, MODIFIER_DEPS] {
        if let Some(i) = range.clone().rev().find(|&i| tags.contains(&sentence.tokens[i].dep.as_str())) {
            return i;
        }
    }
    range
        .clone()
        .rev()
        .find(|&i| {
            let head = sentence.tokens[i].head;
            head < 0 || !span.contains(head as usize)
        })
        .unwrap_or(span.end - 1)
}

fn chain_to_root(sentence: &ParsedSentence, from: usize) -> Vec<usize> {
    let mut chain = vec![from];
    let mut cur = from;
    while sentence.tokens[cur].head >= 0 {
        cur = sentence.tokens[cur].head as usize;
        chain.push(cur);
        if chain.len() > sentence.tokens.len() {
            break;
        }
    }
    chain
}

/// Token indices on the tree path from `from` to `to`, both inclusive.
pub fn tree_path(sentence: &ParsedSentence, from: usize, to: usize) -> Vec<usize> {
    let up = chain_to_root(sentence, from);
    let down = chain_to_root(sentence, to);
    let (lca_down, lca_up) = down
        .iter()
        .enumerate()
        .find_map(|(j, t)| up.iter().position(|u| u == t).map(|i| (j, i)))
        .expect("validated trees share a root");
    let mut path: Vec<usize> = up[..=lca_up].to_vec();
    path.extend(down[..lca_down].iter().rev());
    path
}

/// The path from the subject's representative token to the object's.
pub fn shortest_path(sentence: &ParsedSentence) -> Result<SspTriple> {
    let from = representative_token(sentence, &sentence.subject);
    let to = representative_token(sentence, &sentence.object);
    if from == to {
        return Err(Error::Validation("degenerate path".into()));
    }
    let idx = tree_path(sentence, from, to);
    let tok = |f: fn(&crate::corpus::Token) -> &String| -> Vec<String> {
        idx.iter().map(|&i| f(&sentence.tokens[i]).clone()).collect()
    };
    Ok(SspTriple { words: tok(|t| &t.text), deps: tok(|t| &t.dep), poss: tok(|t| &t.pos) })
}

/// Bring a path to exactly `n_l` positions.
///
/// Short paths are padded at the end with [`PAD`]. Long paths keep their
/// first `n_l - 1` elements and their last element, so both entity endpoints
/// survive.
pub fn pad_or_truncate(path: &SspTriple, n_l: usize) -> PaddedPath {
    assert!(n_l >= 2, "n_l must be at least 2");
    let n = path.len();
    if n > n_l {
        let kept = path.select((0..n_l - 1).chain(std::iter::once(n - 1)));
        return PaddedPath { path: kept, len: n_l };
    }
    let pad = |v: &Vec<String>| {
        let mut out = v.clone();
        out.resize(n_l, PAD.to_string());
        out
    };
    PaddedPath { path: SspTriple { words: pad(&path.words), deps: pad(&path.deps), poss: pad(&path.poss) }, len: n }
}
