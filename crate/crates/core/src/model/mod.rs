//! Leave-one-out path prediction: an entity pair's paths, minus one, are
//! encoded and summed into a relation vector from which the decoder must
//! reproduce the words of the held-out path.

mod config;
mod net;

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::ModelConfig;
pub use net::{check_layout, init_params, param_shapes, Net, PathIds};

use crate::corpus::PairGroup;
use crate::error::{Error, Result};
use crate::nn::{clip_global_norm, Graph, ParamSet, Tensor};
use crate::ssp::{pad_or_truncate, SspTriple};
use crate::vocab::Vocabs;

/// Seed offset separating the training stream from parameter init.
const TRAIN_STREAM: u64 = 0x5E_ED0F_7EA1;

/// Summed encoding of a pair's paths; the clustering feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelationVector(pub Vec<f64>);

impl RelationVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Elementwise sum of path encodings.
///
/// Inputs are summed in a canonical order, so the result is bit-identical
/// for any permutation of `eis`.
pub fn aggregate(eis: &[Vec<f64>]) -> Result<RelationVector> {
    let first = eis.first().ok_or_else(|| Error::Validation("aggregate of zero path encodings".into()))?;
    if eis.iter().any(|e| e.len() != first.len()) {
        return Err(Error::shape("aggregate", "path encodings differ in length"));
    }
    let mut sorted: Vec<&Vec<f64>> = eis.iter().collect();
    sorted.sort_by(|a, b| {
        a.iter().zip(b.iter()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out = vec![0.0; first.len()];
    for e in sorted {
        for (o, v) in out.iter_mut().zip(e) {
            *o += v;
        }
    }
    Ok(RelationVector(out))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelMeta {
    config: ModelConfig,
    vocabs: Vocabs,
}

/// Configuration, vocabularies and parameters of a trained (or freshly
/// initialized) encoder-decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub vocabs: Vocabs,
    pub params: ParamSet,
}

/// Sidecar file holding config and vocabularies next to a checkpoint.
pub fn meta_path(checkpoint: &Path) -> PathBuf {
    let mut s = checkpoint.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

impl Model {
    /// Uniform init in `[-init_scale, init_scale]` from `config.seed`.
    pub fn init(config: ModelConfig, vocabs: Vocabs) -> Result<Model> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let params = init_params(&config, vocabs.words.len(), vocabs.deps.len(), vocabs.poss.len(), &mut rng);
        Ok(Model { config, vocabs, params })
    }

    pub fn zeros(config: ModelConfig, vocabs: Vocabs) -> Result<Model> {
        let mut m = Model::init(config, vocabs)?;
        m.params = m.params.zeros_like();
        Ok(m)
    }

    pub fn from_parts(config: ModelConfig, vocabs: Vocabs, params: ParamSet) -> Result<Model> {
        config.validate()?;
        check_layout(&config, &params)?;
        let shapes = [("emb.word", vocabs.words.len()), ("emb.dep", vocabs.deps.len()), ("emb.pos", vocabs.poss.len())];
        for (name, rows) in shapes {
            if params.get(name).map(Tensor::rows) != Some(rows) {
                return Err(Error::Validation(format!("{name} rows do not match the vocabulary size {rows}")));
            }
        }
        Ok(Model { config, vocabs, params })
    }

    pub fn n_w(&self) -> usize {
        self.vocabs.words.len()
    }

    pub fn path_ids(&self, path: &SspTriple) -> PathIds {
        let padded = pad_or_truncate(path, self.config.n_l);
        let p = &padded.path;
        PathIds {
            words: p.words.iter().map(|w| self.vocabs.words.lookup(w)).collect(),
            deps: p.deps.iter().map(|d| self.vocabs.deps.lookup(d)).collect(),
            poss: p.poss.iter().map(|t| self.vocabs.poss.lookup(t)).collect(),
            len: padded.len,
        }
    }

    pub fn encode_ids(&self, path: &PathIds) -> Result<Vec<f64>> {
        let mut g = Graph::new();
        let (net, _) = Net::bind(&mut g, &self.config, &self.params)?;
        let ei = net.encode_path(&mut g, path)?;
        Ok(g.data(ei).data().to_vec())
    }

    /// Encoding of a single path, dimension `(n_h + n_h2) · n_l`.
    pub fn encode_path(&self, path: &SspTriple) -> Result<Vec<f64>> {
        if path.is_empty() {
            return Err(Error::Validation("empty path".into()));
        }
        self.encode_ids(&self.path_ids(path))
    }

    /// Decoder word logits (`n_l` vectors of `n_w`) for a relation vector.
    pub fn decode_path(&self, relation: &RelationVector) -> Result<Vec<Vec<f64>>> {
        let mut g = Graph::new();
        let (net, _) = Net::bind(&mut g, &self.config, &self.params)?;
        let r = g.leaf(Tensor::vector(relation.0.clone()));
        let logits = net.decode(&mut g, r)?;
        Ok(logits.iter().map(|&l| g.data(l).data().to_vec()).collect())
    }

    /// Loss of predicting `target` from `inputs`, with parameter gradients.
    pub fn loss_and_grads(&self, inputs: &[PathIds], target: &PathIds) -> Result<(f64, ParamSet)> {
        let mut g = Graph::new();
        let (net, bound) = Net::bind(&mut g, &self.config, &self.params)?;
        let loss = net.loss(&mut g, inputs, target)?;
        let value = g.data(loss).data()[0];
        g.backward(loss)?;
        Ok((value, bound.grads(&g, &self.params)))
    }

    pub fn loss_ids(&self, inputs: &[PathIds], target: &PathIds) -> Result<f64> {
        let mut g = Graph::new();
        let (net, _) = Net::bind(&mut g, &self.config, &self.params)?;
        let loss = net.loss(&mut g, inputs, target)?;
        Ok(g.data(loss).data()[0])
    }

    /// Loss of predicting path `held_out` of `group` from all its other
    /// paths.
    pub fn training_loss(&self, group: &PairGroup, held_out: usize) -> Result<f64> {
        if group.paths.len() < 2 {
            return Err(Error::Validation(format!("pair {} has fewer than two paths", group.pair)));
        }
        if held_out >= group.paths.len() {
            return Err(Error::Validation(format!("held-out index {held_out} out of range")));
        }
        let inputs: Vec<PathIds> =
            group.paths.iter().enumerate().filter(|(i, _)| *i != held_out).map(|(_, p)| self.path_ids(p)).collect();
        self.loss_ids(&inputs, &self.path_ids(&group.paths[held_out]))
    }

    /// Sum of [`Model::training_loss`] over a batch of `(group, held_out)`.
    pub fn batch_loss(&self, batch: &[(&PairGroup, usize)]) -> Result<f64> {
        batch.iter().map(|(g, u)| self.training_loss(g, *u)).sum()
    }

    /// Relation vector of a pair from all of its paths.
    pub fn infer_relation_vector(&self, group: &PairGroup) -> Result<RelationVector> {
        let eis = group.paths.iter().map(|p| self.encode_path(p)).collect::<Result<Vec<_>>>()?;
        aggregate(&eis)
    }

    pub fn save(&self, checkpoint: &Path) -> Result<()> {
        self.params.save(checkpoint)?;
        let meta = ModelMeta { config: self.config.clone(), vocabs: self.vocabs.clone() };
        let mp = meta_path(checkpoint);
        fs::write(&mp, serde_json::to_string_pretty(&meta)?).map_err(|e| Error::io(&mp, e))
    }

    pub fn load(checkpoint: &Path) -> Result<Model> {
        let params = ParamSet::load(checkpoint)?;
        let mp = meta_path(checkpoint);
        if !mp.exists() {
            return Err(Error::NotFound { what: "checkpoint metadata", path: mp });
        }
        let text = fs::read_to_string(&mp).map_err(|e| Error::io(&mp, e))?;
        let meta: ModelMeta = serde_json::from_str(&text)?;
        Model::from_parts(meta.config, meta.vocabs, params)
    }
}

struct Example {
    group: usize,
    inputs: Vec<usize>,
    target: usize,
}

/// SGD over leave-one-out examples. Returns the mean example loss of each
/// epoch; `on_epoch` sees the model after every epoch.
///
/// Per epoch the groups are shuffled, each group draws its held-out path
/// uniformly and, past `max_input_paths`, a random subset of the rest.
/// Every batch of `batch_size` examples sums its gradients, clips them to
/// `clip_norm` and takes one step.
pub fn train<F>(model: &mut Model, groups: &[PairGroup], mut on_epoch: F) -> Result<Vec<f64>>
where
    F: FnMut(usize, &Model, f64) -> Result<()>,
{
    if groups.is_empty() {
        return Err(Error::Validation("no training groups".into()));
    }
    if let Some(g) = groups.iter().find(|g| g.paths.len() < 2) {
        return Err(Error::Validation(format!("pair {} has fewer than two paths", g.pair)));
    }
    let cfg = model.config.clone();
    let ids: Vec<Vec<PathIds>> = groups.iter().map(|g| g.paths.iter().map(|p| model.path_ids(p)).collect()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ TRAIN_STREAM);
    let mut log = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let mut order: Vec<usize> = (0..groups.len()).collect();
        order.shuffle(&mut rng);
        let examples: Vec<Example> = order
            .into_iter()
            .map(|gi| {
                let n = ids[gi].len();
                let target = rng.gen_range(0..n);
                let mut inputs: Vec<usize> = (0..n).filter(|&i| i != target).collect();
                if inputs.len() > cfg.max_input_paths {
                    let mut picked: Vec<usize> = index::sample(&mut rng, inputs.len(), cfg.max_input_paths)
                        .into_iter()
                        .map(|k| inputs[k])
                        .collect();
                    picked.sort_unstable();
                    inputs = picked;
                }
                Example { group: gi, inputs, target }
            })
            .collect();

        let mut total = 0.0;
        for batch in examples.chunks(cfg.batch_size) {
            let results: Vec<Result<(f64, ParamSet)>> = batch
                .par_iter()
                .map(|ex| {
                    let inputs: Vec<PathIds> = ex.inputs.iter().map(|&i| ids[ex.group][i].clone()).collect();
                    model.loss_and_grads(&inputs, &ids[ex.group][ex.target])
                })
                .collect();
            let mut grads = model.params.zeros_like();
            for (ex, r) in batch.iter().zip(results) {
                let (loss, g) = r.map_err(|e| match e {
                    Error::NonFinite { node, op } => Error::Numeric(format!(
                        "epoch {epoch}, pair {}: non-finite value at node {node} ({op})",
                        groups[ex.group].pair
                    )),
                    other => other,
                })?;
                if !loss.is_finite() {
                    return Err(Error::Numeric(format!(
                        "epoch {epoch}, pair {}: loss is {loss}",
                        groups[ex.group].pair
                    )));
                }
                total += loss;
                for (acc, t) in grads.tensors_mut().iter_mut().zip(g.tensors()) {
                    acc.add_assign(t);
                }
            }
            clip_global_norm(&mut grads, cfg.clip_norm);
            for (p, g) in model.params.tensors_mut().iter_mut().zip(grads.tensors()) {
                p.axpy(-cfg.learning_rate, g);
            }
        }
        let mean = total / examples.len() as f64;
        log::info!("epoch {epoch}: mean loss {mean:.6}");
        log.push(mean);
        on_epoch(epoch, model, mean)?;
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::PairKey;
    use crate::vocab::build_vocab;

    fn triple(words: &[&str]) -> SspTriple {
        let w: Vec<String> = words.iter().map(|s| s.to_string()).collect();
        let n = w.len();
        SspTriple { words: w, deps: vec!["dep".into(); n], poss: vec!["POS".into(); n] }
    }

    fn small_cfg() -> ModelConfig {
        ModelConfig { n_h: 2, n_h2: 2, n_g: 3, n_l: 3, d_w: 3, d_d: 2, d_p: 2, ..ModelConfig::default() }
    }

    #[test]
    fn relation_dim_arithmetic() {
        let cfg = small_cfg();
        let paths = [triple(&["a", "b", "c"])];
        let m = Model::init(cfg, build_vocab(&paths, 1)).unwrap();
        assert_eq!(m.encode_path(&paths[0]).unwrap().len(), 12);
    }

    #[test]
    fn zero_params_encode_to_zero() {
        let paths = [triple(&["a", "b", "c", "d"])];
        let m = Model::zeros(small_cfg(), build_vocab(&paths, 1)).unwrap();
        assert!(m.encode_path(&paths[0]).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn aggregate_cases() {
        let a = vec![0.5, -1.25, 3.0];
        assert_eq!(aggregate(std::slice::from_ref(&a)).unwrap().0, a);
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        assert!(aggregate(&[a.clone(), neg]).unwrap().0.iter().all(|v| *v == 0.0));
        let b = vec![0.1, 0.2, 0.3];
        let c = vec![1e-17, 7.0, -0.3];
        let x = aggregate(&[a.clone(), b.clone(), c.clone()]).unwrap();
        let y = aggregate(&[c, a, b]).unwrap();
        assert_eq!(x, y);
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn decode_shape() {
        let cfg = ModelConfig { n_l: 4, ..small_cfg() };
        let paths = [triple(&["a", "b", "c"])];
        let m = Model::init(cfg.clone(), build_vocab(&paths, 1)).unwrap();
        let logits = m.decode_path(&RelationVector(vec![0.1; cfg.relation_dim()])).unwrap();
        assert_eq!(logits.len(), 4);
        assert!(logits.iter().all(|l| l.len() == m.n_w()));
        assert!(m.decode_path(&RelationVector(vec![0.0; 3])).is_err());
    }

    #[test]
    fn zero_model_loss_is_ln_nw() {
        let words: Vec<String> = (0..8).map(|i| format!("w{i}")).collect();
        let refs: Vec<&str> = words.iter().map(String::as_str).collect();
        let paths = vec![triple(&refs[..4]), triple(&refs[4..])];
        let m = Model::zeros(small_cfg(), build_vocab(&paths, 1)).unwrap();
        assert_eq!(m.n_w(), 10);
        let group = PairGroup { pair: PairKey("a".into(), "b".into()), paths };
        let loss = m.training_loss(&group, 0).unwrap();
        assert!((loss - 10f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn single_position_target() {
        let paths = vec![triple(&["a", "b"]), triple(&["c"])];
        let m = Model::init(small_cfg(), build_vocab(&paths, 1)).unwrap();
        let inputs = vec![m.path_ids(&paths[0])];
        let target = m.path_ids(&paths[1]);
        let mut g = Graph::new();
        let (net, _) = Net::bind(&mut g, &m.config, &m.params).unwrap();
        let rel = net.encode_path(&mut g, &inputs[0]).unwrap();
        let logits = net.decode(&mut g, rel).unwrap();
        let direct = crate::nn::softmax_xent(g.data(logits[0]).data(), target.words[0]);
        assert!((m.loss_ids(&inputs, &target).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn one_path_group_rejected() {
        let paths = vec![triple(&["a", "b"])];
        let m = Model::init(small_cfg(), build_vocab(&paths, 1)).unwrap();
        let group = PairGroup { pair: PairKey("a".into(), "b".into()), paths };
        assert!(m.training_loss(&group, 0).is_err());
        // inference is fine with one path
        let v = m.infer_relation_vector(&group).unwrap();
        assert_eq!(v.0, m.encode_path(&group.paths[0]).unwrap());
    }

    #[test]
    fn zero_epochs_leave_params() {
        let paths = vec![triple(&["a", "b"]), triple(&["a", "c"])];
        let cfg = ModelConfig { epochs: 0, ..small_cfg() };
        let mut m = Model::init(cfg, build_vocab(&paths, 1)).unwrap();
        let before = m.params.clone();
        let group = PairGroup { pair: PairKey("a".into(), "b".into()), paths };
        let log = train(&mut m, &[group], |_, _, _| Ok(())).unwrap();
        assert!(log.is_empty());
        assert_eq!(m.params, before);
    }
}
