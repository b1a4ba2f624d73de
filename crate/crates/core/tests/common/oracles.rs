//! Brute-force and extended-precision reference implementations.

use std::cmp::Ordering;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use cure::label::CandidateSet;
use cure::vocab::PretrainedVectors;

use super::dd::Dd;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Average linkage recomputed from the raw points at every step. Returns
/// `(id_a, id_b)` per merge with the new cluster numbered `n + step`.
pub fn brute_hac(points: &[Vec<f64>]) -> Vec<(usize, usize, f64)> {
    let n = points.len();
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut out = Vec::new();
    for step in 0..n - 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for x in 0..clusters.len() {
            for y in 0..clusters.len() {
                let (ia, ib) = (clusters[x].0, clusters[y].0);
                if ia >= ib {
                    continue;
                }
                let mut total = 0.0;
                for &p in &clusters[x].1 {
                    for &q in &clusters[y].1 {
                        total += dist(&points[p], &points[q]);
                    }
                }
                let d = total / (clusters[x].1.len() * clusters[y].1.len()) as f64;
                if best.is_none_or(|(bd, ba, bb)| d < bd || (d == bd && (ia, ib) < (ba, bb))) {
                    best = Some((d, ia, ib));
                }
            }
        }
        let (d, a, b) = best.unwrap();
        let xa = clusters.iter().position(|c| c.0 == a).unwrap();
        let mut merged = clusters.remove(xa).1;
        let xb = clusters.iter().position(|c| c.0 == b).unwrap();
        merged.extend(clusters.remove(xb).1);
        clusters.push((n + step, merged));
        out.push((a, b, d));
    }
    out
}

/// Agreement over all unordered item pairs, counted one by one.
pub fn brute_rand_index(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let (mut agree, mut total) = (0u64, 0u64);
    for i in 0..n {
        for j in i + 1..n {
            total += 1;
            if (a[i] == a[j]) == (b[i] == b[j]) {
                agree += 1;
            }
        }
    }
    agree as f64 / total as f64
}

pub fn random_partition(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let blocks = rng.gen_range(1..=n.min(8));
    (0..n).map(|_| rng.gen_range(0..blocks)).collect()
}

fn dd_dot(a: &[f64], b: &[f64]) -> Dd {
    a.iter().zip(b).fold(Dd::ZERO, |acc, (x, y)| acc + Dd::new(*x) * Dd::new(*y))
}

fn dd_cos(a: &[Dd], b: &[Dd]) -> Dd {
    let dot = |u: &[Dd], v: &[Dd]| u.iter().zip(v).fold(Dd::ZERO, |acc, (x, y)| acc + *x * *y);
    dot(a, b) / (dot(a, a).sqrt() * dot(b, b).sqrt())
}

pub fn dd_cmp(a: Dd, b: Dd) -> Ordering {
    a.hi.total_cmp(&b.hi).then(a.lo.total_cmp(&b.lo))
}

/// Word-vector-similarity ranking evaluated directly in double-double:
/// per-word weight `count · Σ_{j≠i}(1 − cos)`, min-max normalized, summed
/// into one vector, candidates ordered by cosine to it (ties by word).
pub fn dd_wvs_ranking(words: &[(String, usize, Vec<f64>)]) -> Vec<String> {
    let vecs: Vec<Vec<Dd>> = words.iter().map(|(_, _, v)| v.iter().map(|x| Dd::new(*x)).collect()).collect();
    let raw: Vec<Dd> = (0..words.len())
        .map(|i| {
            let mut spread = Dd::ZERO;
            for j in 0..words.len() {
                if j != i {
                    spread = spread + Dd::ONE - dd_cos(&vecs[i], &vecs[j]);
                }
            }
            Dd::new(words[i].1 as f64) * spread
        })
        .collect();
    let lo = *raw.iter().min_by(|a, b| dd_cmp(**a, **b)).unwrap();
    let hi = *raw.iter().max_by(|a, b| dd_cmp(**a, **b)).unwrap();
    let weights: Vec<Dd> =
        raw.iter().map(|r| if dd_cmp(hi, lo) == Ordering::Greater { (*r - lo) / (hi - lo) } else { Dd::ONE }).collect();
    let dim = vecs[0].len();
    let mut v = vec![Dd::ZERO; dim];
    for (vec, w) in vecs.iter().zip(&weights) {
        for k in 0..dim {
            v[k] = v[k] + *w * vec[k];
        }
    }
    let mut scored: Vec<(Dd, &str)> =
        vecs.iter().zip(words).map(|(vec, (w, _, _))| (dd_cos(vec, &v), w.as_str())).collect();
    scored.sort_by(|a, b| dd_cmp(b.0, a.0).then(a.1.cmp(b.1)));
    scored.into_iter().map(|(_, w)| w.to_string()).collect()
}

pub fn dd_cosine(a: &[f64], b: &[f64]) -> f64 {
    (dd_dot(a, b) / (dd_dot(a, a).sqrt() * dd_dot(b, b).sqrt())).to_f64()
}

/// Up to five distinct words with counts 1..=9 and 3-dimensional vectors.
pub fn random_candidates(rng: &mut ChaCha8Rng) -> Vec<(String, usize, Vec<f64>)> {
    let n = rng.gen_range(2..=5);
    (0..n)
        .map(|i| {
            let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (format!("w{i}"), rng.gen_range(1..=9), v)
        })
        .collect()
}

pub fn to_inputs(words: &[(String, usize, Vec<f64>)]) -> (CandidateSet, PretrainedVectors) {
    let mut vectors = PretrainedVectors::new(words[0].2.len());
    let mut set = CandidateSet::new();
    for (w, c, v) in words {
        vectors.insert(w.clone(), v.clone()).unwrap();
        set.insert(w.clone(), *c);
    }
    (set, vectors)
}

/// A generic word that outnumbers a distinctive trigger, placed among
/// near-duplicate filler words so its spread, and with it its weight, stays
/// small.
pub fn contrast_fixture() -> (CandidateSet, PretrainedVectors) {
    to_inputs(&[
        ("help".into(), 6, vec![1.0, 0.1, 0.0]),
        ("city".into(), 2, vec![1.0, 0.0, 0.1]),
        ("states".into(), 2, vec![1.0, 0.1, 0.1]),
        ("metropolis".into(), 3, vec![0.0, 1.0, 0.0]),
    ])
}
