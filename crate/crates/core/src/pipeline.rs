//! Stage functions behind the CLI subcommands, and the chained pipeline
//! with its manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cluster::{cut, hac, Cluster};
use crate::config::{LabelMethod, RunConfig};
use crate::corpus::{extract_instances, group_pairs, parse_corpus, PairKey};
use crate::error::{Error, Result};
use crate::eval::{prf1, rand_index, RelationScore};
use crate::io::{
    read_gold, read_groups, read_jsonl, read_paths, write_jsonl, write_text, CentroidRecord, ClusterRecord,
    LabelRecord, VectorRecord,
};
use crate::label::{candidate_set, cw_label, match_to_gold, wvs_label, LabelCandidates, Stopwords};
use crate::model::{meta_path, train, Model, ModelConfig};
use crate::vocab::{build_vocab, load_pretrained, PretrainedVectors};

/// Prediction given to pairs whose cluster got no label.
pub const UNLABELED: &str = "<unlabeled>";

pub const PATHS_FILE: &str = "paths.jsonl";
pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const TRAIN_LOG_FILE: &str = "train_log.csv";
pub const VECTORS_FILE: &str = "vectors.jsonl";
pub const CLUSTERS_FILE: &str = "clusters.jsonl";
pub const CENTROIDS_FILE: &str = "centroids.jsonl";
pub const LABELS_FILE: &str = "labels.jsonl";
pub const EVAL_FILE: &str = "evaluation.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Corpus → one path record per sentence, in corpus order.
pub fn extract_paths(corpus: &Path, out: &Path) -> Result<usize> {
    let sentences = parse_corpus(corpus)?;
    let instances = extract_instances(&sentences)?;
    write_jsonl(out, &instances)?;
    Ok(instances.len())
}

pub fn format_train_log(losses: &[f64]) -> String {
    let mut s = String::from("epoch,loss\n");
    for (i, l) in losses.iter().enumerate() {
        let _ = writeln!(s, "{},{l}", i + 1);
    }
    s
}

/// Build vocabularies over every path, train on pairs with at least
/// `min_paths` paths, and write the checkpoint after every epoch.
pub fn train_stage(
    model_cfg: &ModelConfig,
    min_freq: usize,
    min_paths: usize,
    paths_file: &Path,
    checkpoint: &Path,
    log_file: Option<&Path>,
) -> Result<Vec<f64>> {
    let instances = read_paths(paths_file)?;
    let vocabs = build_vocab(instances.iter().map(|i| &i.path), min_freq);
    let groups = group_pairs(instances, min_paths.max(2));
    log::info!("training on {} pairs, vocabulary {} words", groups.len(), vocabs.words.len());
    let mut model = Model::init(model_cfg.clone(), vocabs)?;
    if let Some(dir) = checkpoint.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut losses = Vec::new();
    let all = train(&mut model, &groups, |epoch, m, loss| {
        log::info!("epoch {epoch}: loss {loss:.6}");
        losses.push(loss);
        m.save(checkpoint)?;
        if let Some(p) = log_file {
            write_text(p, &format_train_log(&losses))?;
        }
        Ok(())
    })?;
    if model_cfg.epochs == 0 {
        model.save(checkpoint)?;
        if let Some(p) = log_file {
            write_text(p, &format_train_log(&all))?;
        }
    }
    Ok(all)
}

fn load_model(checkpoint: &Path) -> Result<Model> {
    if !checkpoint.exists() || !meta_path(checkpoint).exists() {
        return Err(Error::NotFound { what: "checkpoint", path: checkpoint.to_path_buf() });
    }
    Model::load(checkpoint)
}

/// One relation vector per pair in the paths file, sorted by pair.
pub fn encode_stage(checkpoint: &Path, paths_file: &Path, out: &Path) -> Result<usize> {
    let model = load_model(checkpoint)?;
    let groups = read_groups(paths_file)?;
    let records = groups
        .par_iter()
        .map(|g| Ok(VectorRecord { pair: g.pair.clone(), vector: model.infer_relation_vector(g)?.0 }))
        .collect::<Result<Vec<_>>>()?;
    write_jsonl(out, &records)?;
    Ok(records.len())
}

pub fn cluster_vectors(records: &[VectorRecord], k: usize) -> Result<Vec<Cluster>> {
    let vectors: Vec<Vec<f64>> = records.iter().map(|r| r.vector.clone()).collect();
    let dendrogram = hac(&vectors)?;
    cut(&dendrogram, &vectors, k)
}

/// HAC over the vectors file cut at `k`; membership sorted by cluster then
/// pair, centroids by cluster.
pub fn cluster_stage(vectors: &Path, k: usize, out: &Path, centroids_out: &Path) -> Result<Vec<Cluster>> {
    let records: Vec<VectorRecord> = read_jsonl(vectors, "vectors file")?;
    let clusters = cluster_vectors(&records, k)?;
    let records = &records;
    let mut membership: Vec<ClusterRecord> = clusters
        .iter()
        .flat_map(|c| c.members.iter().map(move |&m| ClusterRecord { cluster: c.id, pair: records[m].pair.clone() }))
        .collect();
    membership.sort_by(|a, b| (a.cluster, &a.pair).cmp(&(b.cluster, &b.pair)));
    let centroids: Vec<CentroidRecord> = clusters
        .iter()
        .map(|c| CentroidRecord { cluster: c.id, size: c.members.len(), centroid: c.centroid.clone() })
        .collect();
    write_jsonl(out, &membership)?;
    write_jsonl(centroids_out, &centroids)?;
    Ok(clusters)
}

/// Default centroid file next to a cluster file.
pub fn centroids_path(clusters: &Path) -> PathBuf {
    clusters.with_file_name(CENTROIDS_FILE)
}

pub struct LabelInputs<'a> {
    pub stopwords: &'a Stopwords,
    pub vectors: Option<&'a PretrainedVectors>,
    pub method: LabelMethod,
    pub top: usize,
}

/// Label every cluster from the word paths of its member pairs. A cluster
/// whose candidate set is empty gets an empty label list.
pub fn label_clusters(
    clusters: &[ClusterRecord],
    word_paths: &BTreeMap<PairKey, Vec<Vec<String>>>,
    inputs: &LabelInputs<'_>,
) -> Result<Vec<LabelRecord>> {
    let mut members: BTreeMap<usize, Vec<&PairKey>> = BTreeMap::new();
    for c in clusters {
        members.entry(c.cluster).or_default().push(&c.pair);
    }
    members
        .into_par_iter()
        .map(|(cluster, pairs)| {
            let paths = pairs.iter().flat_map(|p| word_paths.get(*p).into_iter().flatten()).map(Vec::as_slice);
            let cands = match candidate_set(paths, inputs.stopwords) {
                Ok(c) => c,
                Err(e) => {
                    log::warn!("cluster {cluster}: {e}");
                    return Ok(LabelRecord { cluster, labels: Vec::new() });
                }
            };
            let ranked = match inputs.method {
                LabelMethod::Cw => cw_label(&cands)?,
                LabelMethod::Wvs => {
                    let v = inputs.vectors.ok_or_else(|| Error::Config("wvs labeling needs embeddings".into()))?;
                    wvs_label(&cands, v)?
                }
            };
            Ok(LabelRecord { cluster, labels: ranked.top(inputs.top).to_vec() })
        })
        .collect()
}

pub fn label_stage(
    clusters_file: &Path,
    paths_file: &Path,
    inputs: &LabelInputs<'_>,
    out: &Path,
) -> Result<Vec<LabelRecord>> {
    let clusters: Vec<ClusterRecord> = read_jsonl(clusters_file, "clusters file")?;
    let mut word_paths: BTreeMap<PairKey, Vec<Vec<String>>> = BTreeMap::new();
    for inst in read_paths(paths_file)? {
        word_paths.entry(inst.pair).or_default().push(inst.path.words);
    }
    let labels = label_clusters(&clusters, &word_paths, inputs)?;
    write_jsonl(out, &labels)?;
    Ok(labels)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub scores: Vec<RelationScore>,
    pub rand_index: f64,
    /// Gold relation assigned to each labeled cluster.
    pub cluster_relations: BTreeMap<usize, String>,
}

impl Evaluation {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("relation,recall,precision,f1\n");
        for r in &self.scores {
            let _ = writeln!(s, "{},{},{},{}", r.relation, r.recall, r.precision, r.f1);
        }
        let _ = writeln!(s, "rand_index,{},,", self.rand_index);
        s
    }
}

/// Score clusters against gold. Pairs without a gold entry are skipped;
/// the rand index compares cluster membership with each pair's first gold
/// relation.
pub fn evaluate(
    clusters: &[ClusterRecord],
    labels: &[LabelRecord],
    gold: &crate::eval::GoldAssignment,
    vectors: &PretrainedVectors,
) -> Result<Evaluation> {
    let relations = gold.relation_names();
    let mut cluster_relations = BTreeMap::new();
    for l in labels.iter().filter(|l| !l.labels.is_empty()) {
        let cand = LabelCandidates { candidates: l.labels.clone() };
        match match_to_gold(&cand, &relations, vectors) {
            Ok(r) => {
                cluster_relations.insert(l.cluster, r);
            }
            Err(e) => log::warn!("cluster {}: {e}", l.cluster),
        }
    }
    let mut predicted = BTreeMap::new();
    let mut pred_ids = Vec::new();
    let mut gold_ids = Vec::new();
    let mut skipped = 0usize;
    for c in clusters {
        let Some(g) = gold.primary(&c.pair) else {
            skipped += 1;
            continue;
        };
        let rel = cluster_relations.get(&c.cluster).cloned().unwrap_or_else(|| UNLABELED.to_string());
        predicted.insert(c.pair.clone(), rel);
        pred_ids.push(c.cluster);
        gold_ids.push(g);
    }
    if skipped > 0 {
        log::warn!("{skipped} clustered pairs have no gold relation and were not scored");
    }
    Ok(Evaluation { scores: prf1(&predicted, gold)?, rand_index: rand_index(&pred_ids, &gold_ids)?, cluster_relations })
}

pub fn evaluate_stage(
    clusters_file: &Path,
    labels_file: &Path,
    gold_file: &Path,
    vectors: &PretrainedVectors,
    out: &Path,
) -> Result<Evaluation> {
    let clusters: Vec<ClusterRecord> = read_jsonl(clusters_file, "clusters file")?;
    let labels: Vec<LabelRecord> = read_jsonl(labels_file, "labels file")?;
    let gold = read_gold(gold_file)?;
    let ev = evaluate(&clusters, &labels, &gold, vectors)?;
    write_text(out, &ev.to_csv())?;
    Ok(ev)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub outputs: Vec<FileHash>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub inputs: Vec<FileHash>,
    pub stages: Vec<StageRecord>,
}

impl Manifest {
    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.stage == name)
    }
}

fn hashes(files: &[&Path], base: &Path) -> Result<Vec<FileHash>> {
    files
        .iter()
        .map(|p| {
            let shown = p.strip_prefix(base).unwrap_or(p);
            Ok(FileHash { path: shown.display().to_string(), sha256: sha256_file(p)? })
        })
        .collect()
}

/// Run every stage into `out_dir`, then write `manifest.json` there.
/// The first failing stage aborts the run with its error.
pub fn run_pipeline(cfg: &RunConfig) -> Result<Manifest> {
    cfg.require("pipeline", &["corpus", "embeddings", "gold", "k"])?;
    let dir = cfg.out_dir.as_path();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let corpus = cfg.corpus.as_deref().expect("required");
    let embeddings = cfg.embeddings.as_deref().expect("required");
    let gold = cfg.gold.as_deref().expect("required");
    let mut inputs: Vec<&Path> = vec![corpus, embeddings, gold];
    inputs.extend(cfg.stopwords.as_deref());
    let mut manifest = Manifest {
        seed: cfg.model.seed,
        config: cfg.entries().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        inputs: hashes(&inputs, Path::new(""))?,
        stages: Vec::new(),
    };

    let paths = dir.join(PATHS_FILE);
    let ckpt = dir.join(CHECKPOINT_FILE);
    let train_log = dir.join(TRAIN_LOG_FILE);
    let vectors_file = dir.join(VECTORS_FILE);
    let clusters_file = dir.join(CLUSTERS_FILE);
    let centroids = dir.join(CENTROIDS_FILE);
    let labels_file = dir.join(LABELS_FILE);
    let eval_file = dir.join(EVAL_FILE);

    let mut stage = |name: &str, outputs: &[&Path], f: &mut dyn FnMut() -> Result<()>| -> Result<()> {
        log::info!("stage {name}");
        let t = Instant::now();
        f().map_err(|e| {
            log::error!("stage {name} failed: {e}");
            e
        })?;
        manifest.stages.push(StageRecord {
            stage: name.to_string(),
            outputs: hashes(outputs, dir)?,
            seconds: t.elapsed().as_secs_f64(),
        });
        Ok(())
    };

    stage("extract-paths", &[&paths], &mut || extract_paths(corpus, &paths).map(drop))?;
    let meta = meta_path(&ckpt);
    stage("train", &[&ckpt, &meta, &train_log], &mut || {
        train_stage(&cfg.model, cfg.min_freq, cfg.min_paths, &paths, &ckpt, Some(&train_log)).map(drop)
    })?;
    stage("encode", &[&vectors_file], &mut || encode_stage(&ckpt, &paths, &vectors_file).map(drop))?;
    stage("cluster", &[&clusters_file, &centroids], &mut || {
        cluster_stage(&vectors_file, cfg.k()?, &clusters_file, &centroids).map(drop)
    })?;
    let vectors = load_pretrained(embeddings)?;
    let stopwords = match &cfg.stopwords {
        Some(p) => Stopwords::load(p)?,
        None => Stopwords::default(),
    };
    stage("label", &[&labels_file], &mut || {
        let inputs = LabelInputs { stopwords: &stopwords, vectors: Some(&vectors), method: cfg.method, top: cfg.top };
        label_stage(&clusters_file, &paths, &inputs, &labels_file).map(drop)
    })?;
    stage("evaluate", &[&eval_file], &mut || {
        evaluate_stage(&clusters_file, &labels_file, gold, &vectors, &eval_file).map(drop)
    })?;

    write_text(&dir.join(MANIFEST_FILE), &(serde_json::to_string_pretty(&manifest)? + "\n"))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{GoldAssignment, GoldRecord};

    fn key(s: &str) -> PairKey {
        PairKey(s.into(), "x".into())
    }

    #[test]
    fn train_log_format() {
        assert_eq!(format_train_log(&[2.5, 1.25]), "epoch,loss\n1,2.5\n2,1.25\n");
    }

    #[test]
    fn missing_checkpoint() {
        let dir = tempfile::tempdir().unwrap();
        let e = encode_stage(&dir.path().join("none.ckpt"), &dir.path().join("p"), &dir.path().join("v")).unwrap_err();
        assert!(e.to_string().contains("checkpoint not found"), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn unlabeled_cluster_counts_against_recall() {
        let mut vectors = PretrainedVectors::new(2);
        vectors.insert("a", vec![1.0, 0.0]).unwrap();
        vectors.insert("b", vec![0.0, 1.0]).unwrap();
        let gold = GoldAssignment::from_records(
            ["p", "q", "r"].iter().map(|s| GoldRecord { pair: key(s), relations: vec!["a".into()] }),
        )
        .unwrap();
        let clusters = vec![
            ClusterRecord { cluster: 0, pair: key("p") },
            ClusterRecord { cluster: 0, pair: key("q") },
            ClusterRecord { cluster: 1, pair: key("r") },
            ClusterRecord { cluster: 1, pair: key("unknown") },
        ];
        let labels = vec![
            LabelRecord { cluster: 0, labels: vec![("a".into(), 1.0)] },
            LabelRecord { cluster: 1, labels: vec![] },
        ];
        let ev = evaluate(&clusters, &labels, &gold, &vectors).unwrap();
        let a = ev.scores.iter().find(|s| s.relation == "a").unwrap();
        assert_eq!((a.precision, a.recall), (1.0, 2.0 / 3.0));
        assert!((ev.rand_index - 1.0 / 3.0).abs() < 1e-15);
        assert!(ev.to_csv().ends_with(&format!("rand_index,{},,\n", ev.rand_index)));
    }
}
