//! Bag-of-words end-to-end memory network scored against the choices by cosine.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attention::argmax;
use crate::data::{Dataset, Example, NUM_CHOICES};
use crate::error::{Error, Result};
use crate::model::target_vector;
use crate::optim::sgd_update;
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;
use crate::train::{mean_gradients, mix_seed};
use crate::vocab::Vocab;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemNetConfig {
    pub embedding_size: usize,
    pub n_hops: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub shared_embeddings: bool,
    pub max_epochs: usize,
    pub hop_search: Vec<usize>,
    /// Standard deviation of the Gaussian used to initialise embeddings.
    pub init_std: f64,
    pub seed: u64,
}

impl Default for MemNetConfig {
    fn default() -> Self {
        MemNetConfig {
            embedding_size: 128,
            n_hops: 1,
            learning_rate: 0.01,
            batch_size: 40,
            shared_embeddings: true,
            max_epochs: 50,
            hop_search: vec![1, 2, 3],
            init_std: 0.1,
            seed: 0,
        }
    }
}

impl MemNetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embedding_size == 0 || self.batch_size == 0 || self.n_hops == 0 {
            return Err(Error::Config("memory network sizes must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.init_std >= 0.0) {
            return Err(Error::Config("learning rate must be positive and init_std non-negative".into()));
        }
        if self.hop_search.contains(&0) {
            return Err(Error::Config("hop candidates must be at least 1".into()));
        }
        Ok(())
    }
}

/// Embedding matrices are `[e, V]`. With sharing only `input` exists and serves
/// as memory, question and output embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct MemNet {
    pub vocab: Vocab,
    pub input: Tensor,
    pub question: Option<Tensor>,
    pub output: Option<Tensor>,
    pub n_hops: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemNetOutput {
    pub scores: [f64; NUM_CHOICES],
    pub chosen: usize,
    /// Memory weights `p` for each hop.
    pub hop_weights: Vec<Vec<f64>>,
}

struct Bound {
    input: Var,
    question: Var,
    output: Var,
    all: Vec<Var>,
}

impl MemNet {
    pub fn new(vocab: Vocab, cfg: &MemNetConfig) -> Result<Self> {
        cfg.validate()?;
        let normal = Normal::new(0.0, cfg.init_std).map_err(|e| Error::Config(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[cfg.seed, 0x3E3]));
        let (e, v) = (cfg.embedding_size, vocab.len());
        let mut draw = || {
            let data = (0..e * v).map(|_| normal.sample(&mut rng)).collect();
            Tensor::new(vec![e, v], data).expect("shape matches data")
        };
        let input = draw();
        let (question, output) = if cfg.shared_embeddings {
            (None, None)
        } else {
            (Some(draw()), Some(draw()))
        };
        Ok(MemNet {
            vocab,
            input,
            question,
            output,
            n_hops: cfg.n_hops,
        })
    }

    pub fn tensors(&self) -> Vec<&Tensor> {
        std::iter::once(&self.input).chain(&self.question).chain(&self.output).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        std::iter::once(&mut self.input)
            .chain(self.question.as_mut())
            .chain(self.output.as_mut())
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn bind(&self, tape: &mut Tape) -> Bound {
        let input = tape.leaf(self.input.clone());
        let question = self.question.as_ref().map(|t| tape.leaf(t.clone()));
        let output = self.output.as_ref().map(|t| tape.leaf(t.clone()));
        let all = std::iter::once(input).chain(question).chain(output).collect();
        Bound {
            input,
            question: question.unwrap_or(input),
            output: output.unwrap_or(input),
            all,
        }
    }

    fn forward(&self, tape: &mut Tape, vars: &Bound, example: &Example) -> Result<(Var, usize, Vec<Vec<f64>>)> {
        let encode = |tape: &mut Tape, table: Var, words: &[String]| tape.column_sum(table, &self.vocab.encode(words));
        let mut memories = Vec::new();
        let mut outputs = Vec::new();
        for u in &example.story.utterances {
            memories.push(encode(tape, vars.input, &u.tokens)?);
            outputs.push(encode(tape, vars.output, &u.tokens)?);
        }
        let mask = vec![true; memories.len()];
        let mut u = encode(tape, vars.question, &example.question)?;
        let mut hop_weights = Vec::with_capacity(self.n_hops);
        for _ in 0..self.n_hops {
            let logits = memories.iter().map(|&m| tape.dot(u, m)).collect::<Result<Vec<_>>>()?;
            let logits = tape.stack(&logits)?;
            let p = tape.masked_softmax(logits, &mask)?;
            hop_weights.push(tape.value(p).data().to_vec());
            let o = tape.weighted_sum(p, &outputs)?;
            u = tape.add(u, o)?;
        }
        let mut scores = Vec::with_capacity(NUM_CHOICES);
        for c in &example.choices {
            let cv = encode(tape, vars.question, c)?;
            scores.push(tape.cosine(u, cv)?);
        }
        let scores = tape.stack(&scores)?;
        let chosen = argmax(tape.value(scores).data());
        Ok((scores, chosen, hop_weights))
    }

    fn loss_and_gradients(&self, example: &Example) -> Result<(f64, Vec<Tensor>)> {
        let mut tape = Tape::new();
        let vars = self.bind(&mut tape);
        let (scores, _, _) = self.forward(&mut tape, &vars, example)?;
        let loss = tape.squared_error(scores, &target_vector(example.answer))?;
        let value = tape.scalar(loss);
        if !value.is_finite() {
            return Err(Error::Numeric(format!("non-finite memory network loss on example {}", example.id)));
        }
        let mut grads = tape.backward(loss)?;
        let out = vars
            .all
            .iter()
            .zip(self.tensors())
            .map(|(&v, t)| grads.take(v).unwrap_or_else(|| Tensor::zeros(t.shape())))
            .collect();
        Ok((value, out))
    }
}

pub fn memnet_forward(net: &MemNet, example: &Example) -> Result<MemNetOutput> {
    let mut tape = Tape::new();
    let vars = net.bind(&mut tape);
    let (scores, chosen, hop_weights) = net.forward(&mut tape, &vars, example)?;
    let mut s = [0.0; NUM_CHOICES];
    s.copy_from_slice(tape.value(scores).data());
    Ok(MemNetOutput {
        scores: s,
        chosen,
        hop_weights,
    })
}

pub fn memnet_evaluate(net: &MemNet, examples: &[Example]) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::Precondition("cannot evaluate on an empty split".into()));
    }
    let chosen = examples
        .par_iter()
        .map(|e| memnet_forward(net, e).map(|o| o.chosen))
        .collect::<Result<Vec<_>>>()?;
    Ok(crate::train::accuracy(&chosen, examples))
}

/// Mini-batch SGD on the squared error to the one-hot target. Returns the
/// parameters with the best dev accuracy seen after any epoch.
pub fn memnet_train(mut net: MemNet, dataset: &Dataset, cfg: &MemNetConfig) -> Result<MemNet> {
    cfg.validate()?;
    if dataset.train.is_empty() {
        return Err(Error::Config("training split is empty".into()));
    }
    let mut order: Vec<usize> = (0..dataset.train.len()).collect();
    let mut best: Option<(f64, MemNet)> = None;
    for epoch in 1..=cfg.max_epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[cfg.seed, 0x3E3, epoch as u64]));
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let grads = batch
                .par_iter()
                .map(|&i| net.loss_and_gradients(&dataset.train[i]).map(|(_, g)| g))
                .collect::<Result<Vec<_>>>()?;
            let mean = mean_gradients(grads);
            sgd_update(&mut net.tensors_mut(), &mean, cfg.learning_rate)?;
        }
        if !dataset.dev.is_empty() {
            let acc = memnet_evaluate(&net, &dataset.dev)?;
            if best.as_ref().is_none_or(|(b, _)| acc > *b) {
                best = Some((acc, net.clone()));
            }
        }
    }
    Ok(best.map(|(_, n)| n).unwrap_or(net))
}

/// Trains one network per hop candidate and keeps the best on dev, smallest
/// hop count on ties.
pub fn memnet_select_hops(dataset: &Dataset, cfg: &MemNetConfig) -> Result<(MemNet, Vec<(usize, f64)>)> {
    if dataset.dev.is_empty() {
        return Err(Error::Precondition("hop selection needs a dev split".into()));
    }
    let mut candidates = cfg.hop_search.clone();
    candidates.sort_unstable();
    candidates.dedup();
    if candidates.is_empty() {
        return Err(Error::Config("hop search set is empty".into()));
    }
    let vocab = Vocab::from_training_split(dataset);
    let mut best: Option<(f64, MemNet)> = None;
    let mut scores = Vec::new();
    for n in candidates {
        let c = MemNetConfig { n_hops: n, ..cfg.clone() };
        let net = memnet_train(MemNet::new(vocab.clone(), &c)?, dataset, &c)?;
        let acc = memnet_evaluate(&net, &dataset.dev)?;
        scores.push((n, acc));
        if best.as_ref().is_none_or(|(b, _)| acc > *b) {
            best = Some((acc, net));
        }
    }
    Ok((best.expect("at least one candidate").1, scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Story;

    fn example() -> Example {
        Example {
            id: "m".into(),
            story: Story::from_words(&[&["x"], &["y"]]),
            question: vec!["x".into()],
            choices: [vec!["x".into()], vec!["y".into()], vec!["x".into(), "y".into()], vec!["z".into()]],
            answer: 0,
        }
    }

    fn net(input: Vec<f64>) -> MemNet {
        // columns: <unk>, x, y, z
        MemNet {
            vocab: Vocab::new(["x", "y", "z"]),
            input: Tensor::new(vec![2, 4], input).unwrap(),
            question: None,
            output: None,
            n_hops: 1,
        }
    }

    #[test]
    fn zero_embeddings_give_uniform_weights() {
        let out = memnet_forward(&net(vec![0.0; 8]), &example()).unwrap();
        assert_eq!(out.hop_weights, vec![vec![0.5, 0.5]]);
        assert_eq!(out.scores, [0.0; 4]);
        assert_eq!(out.chosen, 0);
    }

    #[test]
    fn single_memory_gets_all_weight() {
        let mut e = example();
        e.story = Story::from_words(&[&["y", "z"]]);
        let out = memnet_forward(&net(vec![0.0, 1.0, 0.3, 0.2, 0.0, 0.5, 2.0, -1.0]), &e).unwrap();
        assert_eq!(out.hop_weights, vec![vec![1.0]]);
    }

    #[test]
    fn one_hop_by_hand() {
        // x = (1, 0), y = (0, 2), z = (1, 1)
        let n = net(vec![0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 2.0, 1.0]);
        let out = memnet_forward(&n, &example()).unwrap();
        let (l1, l2) = (1.0f64, 0.0f64);
        let p1 = l1.exp() / (l1.exp() + l2.exp());
        let p2 = 1.0 - p1;
        let u = [1.0 + p1, 2.0 * p2];
        let cos = |c: [f64; 2]| (u[0] * c[0] + u[1] * c[1]) / ((u[0] * u[0] + u[1] * u[1]).sqrt() * (c[0] * c[0] + c[1] * c[1]).sqrt());
        assert!((out.hop_weights[0][0] - p1).abs() < 1e-12);
        for (s, c) in out.scores.iter().zip([[1.0, 0.0], [0.0, 2.0], [1.0, 2.0], [1.0, 1.0]]) {
            assert!((s - cos(c)).abs() < 1e-12);
        }
        assert_eq!(out.chosen, argmax(&out.scores));
    }

    #[test]
    fn sharing_controls_parameter_count() {
        let vocab = Vocab::new(["a", "b"]);
        let cfg = MemNetConfig {
            embedding_size: 5,
            ..MemNetConfig::default()
        };
        assert_eq!(MemNet::new(vocab.clone(), &cfg).unwrap().parameter_count(), 5 * 3);
        let unshared = MemNetConfig {
            shared_embeddings: false,
            ..cfg
        };
        assert_eq!(MemNet::new(vocab, &unshared).unwrap().parameter_count(), 3 * 5 * 3);
    }

    #[test]
    fn zero_epochs_leave_net_unchanged() {
        let ds = Dataset {
            train: vec![example()],
            ..Dataset::default()
        };
        let cfg = MemNetConfig {
            embedding_size: 3,
            max_epochs: 0,
            ..MemNetConfig::default()
        };
        let n = MemNet::new(Vocab::from_training_split(&ds), &cfg).unwrap();
        assert_eq!(memnet_train(n.clone(), &ds, &cfg).unwrap(), n);
        assert!(memnet_train(n, &Dataset::default(), &cfg).is_err());
    }
}
