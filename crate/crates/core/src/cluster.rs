//! Average-linkage agglomerative clustering under Euclidean distance.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// One agglomeration step. Inputs are clusters `0..n`; the cluster created
/// by merge `s` gets id `n + s`. `a < b` always.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub distance: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub n: usize,
    pub merges: Vec<Merge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: usize,
    /// Input indices, ascending.
    pub members: Vec<usize>,
    pub centroid: Vec<f64>,
}

fn check_vectors(vectors: &[Vec<f64>]) -> Result<usize> {
    let dim = vectors.first().map(Vec::len).unwrap_or(0);
    for (i, v) in vectors.iter().enumerate() {
        if v.len() != dim {
            return Err(Error::shape("hac", format!("vector {i} has dimension {}, expected {dim}", v.len())));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation(format!("vector {i} has non-finite entries")));
        }
    }
    Ok(dim)
}

/// Greedy agglomeration: repeatedly merge the two clusters with the smallest
/// mean pairwise distance, ties going to the lexicographically lowest
/// `(id_a, id_b)`.
///
/// Cluster distances are maintained with the Lance-Williams update for
/// average linkage, O(n³) time and O(n²) memory overall.
pub fn hac(vectors: &[Vec<f64>]) -> Result<Dendrogram> {
    let n = vectors.len();
    if n < 2 {
        return Err(Error::Validation(format!("clustering needs at least 2 vectors, got {n}")));
    }
    check_vectors(vectors)?;
    let mut dist: Vec<f64> =
        (0..n).into_par_iter().flat_map_iter(|i| (0..n).map(move |j| euclidean(&vectors[i], &vectors[j]))).collect();
    let mut id: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..n - 1 {
        let mut best: Option<(f64, (usize, usize), usize, usize)> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in i + 1..n {
                if !active[j] {
                    continue;
                }
                let d = dist[i * n + j];
                let key = (id[i].min(id[j]), id[i].max(id[j]));
                let better = match best {
                    None => true,
                    Some((bd, bkey, _, _)) => d < bd || (d == bd && key < bkey),
                };
                if better {
                    best = Some((d, key, i, j));
                }
            }
        }
        let (d, (a, b), i, j) = best.expect("at least two active clusters");
        let (si, sj) = (size[i] as f64, size[j] as f64);
        for k in 0..n {
            if active[k] && k != i && k != j {
                let merged = (si * dist[i * n + k] + sj * dist[j * n + k]) / (si + sj);
                dist[i * n + k] = merged;
                dist[k * n + i] = merged;
            }
        }
        active[j] = false;
        size[i] += size[j];
        id[i] = n + step;
        merges.push(Merge { a, b, distance: d, size: size[i] });
    }
    Ok(Dendrogram { n, merges })
}

/// Cut the dendrogram into exactly `k` clusters by undoing its last `k - 1`
/// merges.
///
/// Clusters are ordered by size (largest first), then by smallest member;
/// `Cluster::id` is the position in that order.
pub fn cut(dendrogram: &Dendrogram, vectors: &[Vec<f64>], k: usize) -> Result<Vec<Cluster>> {
    let n = dendrogram.n;
    if vectors.len() != n {
        return Err(Error::Validation(format!("{} vectors for a dendrogram over {n}", vectors.len())));
    }
    if k == 0 || k > n {
        return Err(Error::Validation(format!("cluster count {k} out of range 1..={n}")));
    }
    let dim = check_vectors(vectors)?;
    let mut groups: BTreeMap<usize, Vec<usize>> = (0..n).map(|i| (i, vec![i])).collect();
    for (s, m) in dendrogram.merges.iter().take(n - k).enumerate() {
        let mut a =
            groups.remove(&m.a).ok_or_else(|| Error::Validation(format!("merge {s} uses unknown cluster {}", m.a)))?;
        let b =
            groups.remove(&m.b).ok_or_else(|| Error::Validation(format!("merge {s} uses unknown cluster {}", m.b)))?;
        a.extend(b);
        a.sort_unstable();
        groups.insert(n + s, a);
    }
    let mut members: Vec<Vec<usize>> = groups.into_values().collect();
    members.sort_by(|x, y| y.len().cmp(&x.len()).then(x[0].cmp(&y[0])));
    Ok(members
        .into_iter()
        .enumerate()
        .map(|(id, members)| {
            let mut centroid = vec![0.0; dim];
            for &m in &members {
                for (c, v) in centroid.iter_mut().zip(&vectors[m]) {
                    *c += v;
                }
            }
            let count = members.len() as f64;
            centroid.iter_mut().for_each(|c| *c /= count);
            Cluster { id, members, centroid }
        })
        .collect())
}

/// Id of the nearest centroid; ties go to the lowest id.
pub fn assign(v: &[f64], clusters: &[Cluster]) -> Result<usize> {
    let mut best: Option<(f64, usize)> = None;
    for c in clusters {
        if c.centroid.len() != v.len() {
            return Err(Error::shape("assign", format!("vector {} vs centroid {}", v.len(), c.centroid.len())));
        }
        let d = euclidean(v, &c.centroid);
        if best.is_none_or(|(bd, bid)| d < bd || (d == bd && c.id < bid)) {
            best = Some((d, c.id));
        }
    }
    best.map(|(_, id)| id).ok_or_else(|| Error::Validation("no clusters to assign to".into()))
}
