//! Helpers shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

pub mod dd;
pub mod oracles;
pub mod trees;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cure::corpus::{EntitySpan, ParsedSentence, Token};
use cure::model::{Model, ModelConfig, PathIds};
use cure::vocab::{Vocab, Vocabs, PAD, UNK};

pub fn vocab(n: usize, prefix: &str) -> Vocab {
    let mut s = vec![PAD.to_string(), UNK.to_string()];
    s.extend((2..n).map(|i| format!("{prefix}{i}")));
    Vocab::from_symbols(s).unwrap()
}

/// n_h = n_h2 = 4, n_g = 8, n_l = 5, n_w = 20.
pub fn gradient_config() -> ModelConfig {
    ModelConfig {
        n_h: 4,
        n_h2: 4,
        n_g: 8,
        n_l: 5,
        d_w: 6,
        d_d: 3,
        d_p: 3,
        init_scale: 0.5,
        seed: 3,
        ..ModelConfig::default()
    }
}

pub fn toy_model(cfg: ModelConfig, n_w: usize) -> Model {
    let vocabs = Vocabs { words: vocab(n_w, "w"), deps: vocab(6, "d"), poss: vocab(5, "p") };
    Model::init(cfg, vocabs).unwrap()
}

pub fn random_ids(rng: &mut ChaCha8Rng, n_l: usize, len: usize, n_w: usize) -> PathIds {
    let pad = |v: Vec<usize>| v.into_iter().chain(std::iter::repeat(0)).take(n_l).collect::<Vec<_>>();
    PathIds {
        words: pad((0..len).map(|_| rng.gen_range(1..n_w)).collect()),
        deps: pad((0..len).map(|_| rng.gen_range(1..6)).collect()),
        poss: pad((0..len).map(|_| rng.gen_range(1..5)).collect()),
        len,
    }
}

/// Worst per-tensor relative error `|a − n| / max(|a|, |n|, 1e-6)` between
/// analytic and central-difference gradients (step 1e-4).
pub fn gradient_check(model: &Model, inputs: &[PathIds], target: &PathIds) -> Vec<(String, f64)> {
    const STEP: f64 = 1e-4;
    let (_, grads) = model.loss_and_grads(inputs, target).unwrap();
    let names: Vec<String> = model.params.iter().map(|(n, _)| n.to_string()).collect();
    let mut probe = model.clone();
    let mut out = Vec::new();
    for (ti, name) in names.iter().enumerate() {
        let analytic = grads.tensors()[ti].data().to_vec();
        let mut worst: f64 = 0.0;
        for k in 0..analytic.len() {
            let orig = probe.params.tensors()[ti].data()[k];
            probe.params.tensors_mut()[ti].data_mut()[k] = orig + STEP;
            let up = probe.loss_ids(inputs, target).unwrap();
            probe.params.tensors_mut()[ti].data_mut()[k] = orig - STEP;
            let down = probe.loss_ids(inputs, target).unwrap();
            probe.params.tensors_mut()[ti].data_mut()[k] = orig;
            let numeric = (up - down) / (2.0 * STEP);
            let a = analytic[k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
        out.push((name.clone(), worst));
    }
    out
}

pub fn gradient_fixture() -> (Model, Vec<PathIds>, PathIds) {
    let cfg = gradient_config();
    let model = toy_model(cfg.clone(), 20);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let inputs = vec![random_ids(&mut rng, cfg.n_l, 5, 20), random_ids(&mut rng, cfg.n_l, 3, 20)];
    let target = random_ids(&mut rng, cfg.n_l, 4, 20);
    (model, inputs, target)
}

/// Sentence from `(text, pos, dep, head)` rows with the given spans.
pub fn sentence(rows: &[(&str, &str, &str, i64)], subject: (usize, usize), object: (usize, usize)) -> ParsedSentence {
    let tokens: Vec<Token> =
        rows.iter().map(|&(t, p, d, h)| Token { text: t.into(), pos: p.into(), dep: d.into(), head: h }).collect();
    let canon = |(s, e): (usize, usize)| tokens[s..e].iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" ");
    ParsedSentence {
        id: "s".into(),
        subject: EntitySpan { start: subject.0, end: subject.1, canonical: canon(subject) },
        object: EntitySpan { start: object.0, end: object.1, canonical: canon(object) },
        tokens,
    }
}

/// The Reagan example: "Ronald Reagan served as the 40th president of the
/// United States".
pub fn reagan() -> ParsedSentence {
    sentence(
        &[
            ("Ronald", "PROPN", "compound", 1),
            ("Reagan", "PROPN", "nsubj", 2),
            ("served", "VERB", "ROOT", -1),
            ("as", "ADP", "prep", 2),
            ("the", "DET", "det", 6),
            ("40th", "ADJ", "amod", 6),
            ("president", "NOUN", "pobj", 3),
            ("of", "ADP", "prep", 6),
            ("the", "DET", "det", 10),
            ("United", "PROPN", "compound", 10),
            ("States", "PROPN", "pobj", 7),
        ],
        (0, 2),
        (9, 11),
    )
}
