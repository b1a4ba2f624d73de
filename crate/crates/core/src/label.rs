//! Cluster labeling.
//!
//! Candidate words come from the paths of a cluster's member pairs (minus
//! entity endpoints and stopwords). [`wvs_label`] weights each distinct
//! candidate by its count times its summed cosine distance to the other
//! candidates, min-max normalizes those weights, and ranks candidates by
//! cosine similarity to the weighted vector sum. [`cw_label`] ranks by count
//! alone.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::vocab::{cosine, PretrainedVectors};

pub const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

/// Case-insensitive stopword set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    /// One word per line; `#` starts a comment line.
    pub fn from_text(text: &str) -> Self {
        Stopwords(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::NotFound { what: "stopword list", path: path.to_path_buf() });
        }
        Ok(Stopwords::from_text(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for Stopwords {
    fn default() -> Self {
        Stopwords::from_text(DEFAULT_STOPWORDS)
    }
}

/// Word → count multiset.
pub type CandidateSet = BTreeMap<String, usize>;

/// Collect the inner (non-endpoint), non-stopword words of the given word
/// paths, with multiplicity.
pub fn candidate_set<'a, I>(word_paths: I, stopwords: &Stopwords) -> Result<CandidateSet>
where
    I: IntoIterator<Item = &'a [String]>,
{
    let mut out = CandidateSet::new();
    for words in word_paths {
        if words.len() <= 2 {
            continue;
        }
        for w in &words[1..words.len() - 1] {
            if !stopwords.contains(w) {
                *out.entry(w.clone()).or_default() += 1;
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Validation("empty candidate set".into()));
    }
    Ok(out)
}

/// Ranked `(word, score)` list, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelCandidates {
    pub candidates: Vec<(String, f64)>,
}

impl LabelCandidates {
    fn ranked(mut candidates: Vec<(String, f64)>) -> Self {
        candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        LabelCandidates { candidates }
    }

    pub fn chosen(&self) -> &str {
        &self.candidates[0].0
    }

    pub fn top(&self, n: usize) -> &[(String, f64)] {
        &self.candidates[..n.min(self.candidates.len())]
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.candidates.iter().map(|(w, _)| w.as_str())
    }
}

/// Per-word weights before normalization: `Count(r_i) · Σ_{j≠i} (1 − cos(r_i, r_j))`.
pub fn wvs_raw_weights(words: &[(&str, usize, &[f64])]) -> Vec<f64> {
    words
        .iter()
        .enumerate()
        .map(|(i, (_, count, vi))| {
            let spread: f64 =
                words.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, (_, _, vj))| 1.0 - cosine(vi, vj)).sum();
            *count as f64 * spread
        })
        .collect()
}

/// Min-max normalization onto `[0, 1]`. A single value, or a set of equal
/// values, maps to all ones.
pub fn min_max(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![1.0; values.len()];
    }
    values.iter().map(|v| (v - lo) / (hi - lo)).collect()
}

/// Word-vector-similarity labeling. Words without a pretrained vector are
/// skipped.
pub fn wvs_label(candidates: &CandidateSet, vectors: &PretrainedVectors) -> Result<LabelCandidates> {
    let present: Vec<(&str, usize, &[f64])> =
        candidates.iter().filter_map(|(w, &c)| vectors.get(w).map(|v| (w.as_str(), c, v))).collect();
    if present.is_empty() {
        return Err(Error::Validation("no candidate word has a pretrained vector".into()));
    }
    let weights = min_max(&wvs_raw_weights(&present));
    let mut v = vec![0.0; vectors.dim()];
    for ((_, _, vec), w) in present.iter().zip(&weights) {
        for (acc, x) in v.iter_mut().zip(vec.iter()) {
            *acc += w * x;
        }
    }
    Ok(LabelCandidates::ranked(present.iter().map(|(w, _, vec)| (w.to_string(), cosine(vec, &v))).collect()))
}

/// Common-word labeling: rank by count.
pub fn cw_label(candidates: &CandidateSet) -> Result<LabelCandidates> {
    if candidates.is_empty() {
        return Err(Error::Validation("empty candidate set".into()));
    }
    Ok(LabelCandidates::ranked(candidates.iter().map(|(w, &c)| (w.clone(), c as f64)).collect()))
}

/// The gold relation whose name vector is most cosine-similar to the label
/// word. Candidates without a vector are skipped in rank order.
pub fn match_to_gold(
    label: &LabelCandidates,
    gold_relations: &[String],
    vectors: &PretrainedVectors,
) -> Result<String> {
    let gold: Vec<(&str, &[f64])> = gold_relations
        .iter()
        .map(|r| {
            vectors
                .get(r)
                .map(|v| (r.as_str(), v))
                .ok_or_else(|| Error::Validation(format!("gold relation {r:?} has no vector")))
        })
        .collect::<Result<_>>()?;
    if gold.is_empty() {
        return Err(Error::Validation("no gold relations".into()));
    }
    let word_vec = label
        .words()
        .find_map(|w| vectors.get(w))
        .ok_or_else(|| Error::Validation("no label candidate has a vector".into()))?;
    let mut best: Option<(f64, &str)> = None;
    for (name, v) in gold {
        let s = cosine(word_vec, v);
        if best.is_none_or(|(bs, bn)| s > bs || (s == bs && name < bn)) {
            best = Some((s, name));
        }
    }
    Ok(best.expect("gold nonempty").1.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(ws: &[&str]) -> Vec<String> {
        ws.iter().map(|s| s.to_string()).collect()
    }

    fn vectors(entries: &[(&str, &[f64])]) -> PretrainedVectors {
        let mut v = PretrainedVectors::new(entries[0].1.len());
        for (w, x) in entries {
            v.insert(*w, x.to_vec()).unwrap();
        }
        v
    }

    #[test]
    fn reagan_candidates() {
        let p = words(&["Reagan", "served", "as", "president", "of", "States"]);
        let r = candidate_set([p.as_slice()], &Stopwords::default()).unwrap();
        assert_eq!(r, BTreeMap::from([("president".to_string(), 1), ("served".to_string(), 1)]));
    }

    #[test]
    fn duplicate_members_double_counts() {
        let p = words(&["Reagan", "served", "as", "president", "of", "States"]);
        let r = candidate_set([p.as_slice(), p.as_slice()], &Stopwords::default()).unwrap();
        assert_eq!(r["served"], 2);
        assert_eq!(r["president"], 2);
    }

    #[test]
    fn stopword_only_cluster_errors() {
        let p = words(&["A", "of", "the", "B"]);
        let err = candidate_set([p.as_slice()], &Stopwords::default()).unwrap_err();
        assert!(err.to_string().contains("empty candidate set"));
    }

    #[test]
    fn stopwords_case_insensitive() {
        let s = Stopwords::default();
        assert!(s.contains("The"));
        assert!(!s.contains("capital"));
        assert!(s.len() >= 50);
    }

    #[test]
    fn count_dominates_for_orthogonal_words() {
        let v = vectors(&[("locate", &[1.0, 0.02, 0.0]), ("citizen", &[0.01, 1.0, 0.0])]);
        let r = CandidateSet::from([("locate".into(), 10), ("citizen".into(), 1)]);
        assert_eq!(wvs_label(&r, &v).unwrap().chosen(), "locate");
    }

    #[test]
    fn single_distinct_word() {
        let v = vectors(&[("born", &[0.3, 0.4])]);
        let r = CandidateSet::from([("born".into(), 2)]);
        let l = wvs_label(&r, &v).unwrap();
        assert_eq!(l.chosen(), "born");
        assert!((l.candidates[0].1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn words_without_vectors_are_skipped() {
        let v = vectors(&[("born", &[0.3, 0.4])]);
        let r = CandidateSet::from([("born".into(), 1), ("zzz".into(), 9)]);
        assert_eq!(wvs_label(&r, &v).unwrap().candidates.len(), 1);
        let r = CandidateSet::from([("zzz".into(), 9)]);
        assert!(wvs_label(&r, &v).is_err());
    }

    #[test]
    fn cw_majority_and_ties() {
        let r = CandidateSet::from([("born".into(), 3), ("rise".into(), 1)]);
        assert_eq!(cw_label(&r).unwrap().chosen(), "born");
        let r = CandidateSet::from([("b".into(), 2), ("a".into(), 2), ("c".into(), 2)]);
        assert_eq!(cw_label(&r).unwrap().chosen(), "a");
    }

    #[test]
    fn gold_matching() {
        let v = vectors(&[
            ("born", &[1.0, 0.1]),
            ("placeBirth", &[0.9, 0.15]),
            ("capital", &[0.0, 1.0]),
            ("odd", &[0.5, 0.5]),
        ]);
        let gold = words(&["capital", "placeBirth"]);
        let label = LabelCandidates { candidates: vec![("born".into(), 1.0)] };
        assert_eq!(match_to_gold(&label, &gold, &v).unwrap(), "placeBirth");
        let label = LabelCandidates { candidates: vec![("missing".into(), 1.0), ("capital".into(), 0.5)] };
        assert_eq!(match_to_gold(&label, &gold, &v).unwrap(), "capital");
        let label = LabelCandidates { candidates: vec![("missing".into(), 1.0)] };
        assert!(match_to_gold(&label, &gold, &v).is_err());
        assert!(match_to_gold(&label, &words(&["nope"]), &v).is_err());
    }

    #[test]
    fn min_max_edges() {
        assert_eq!(min_max(&[3.0]), vec![1.0]);
        assert_eq!(min_max(&[2.0, 2.0]), vec![1.0, 1.0]);
        assert_eq!(min_max(&[1.0, 3.0, 2.0]), vec![0.0, 1.0, 0.5]);
    }
}
