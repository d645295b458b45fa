//! The full question → hops → answer network.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attention::{answer_select, run_hops, AttentionTrace, HopConfig};
use crate::data::{Example, NUM_CHOICES};
use crate::encoder::{BiGruEncoder, EncoderVars};
use crate::error::{Error, Result};
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;
use crate::vocab::Vocab;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `Σ_i (score_i − target_i)²` against the one-hot target.
    #[default]
    SquaredError,
    /// Softmax cross-entropy over the four cosine scores.
    CrossEntropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Dropout active, masks drawn from this seed.
    Train { dropout_seed: u64 },
    Eval,
}

/// One-hot vector over the four choices.
pub fn target_vector(answer: usize) -> [f64; NUM_CHOICES] {
    let mut t = [0.0; NUM_CHOICES];
    t[answer] = 1.0;
    t
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub scores: [f64; NUM_CHOICES],
    pub chosen: usize,
    pub trace: AttentionTrace,
}

/// Tape outputs of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub scores: Var,
    pub chosen: usize,
    pub trace: AttentionTrace,
}

struct Dropout {
    rate: f64,
    rng: ChaCha8Rng,
}

impl Dropout {
    fn apply(&mut self, tape: &mut Tape, v: Var) -> Result<Var> {
        let n = tape.value(v).len();
        let keep = 1.0 / (1.0 - self.rate);
        let mask: Vec<f64> = (0..n)
            .map(|_| if self.rng.random::<f64>() < self.rate { 0.0 } else { keep })
            .collect();
        tape.mul_const(v, mask)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Amrnn {
    pub encoder: BiGruEncoder,
    pub hops: HopConfig,
}

impl Amrnn {
    pub fn new(vocab: Vocab, input_size: usize, hidden_size: usize, hops: HopConfig, seed: u64) -> Self {
        Amrnn {
            encoder: BiGruEncoder::new(vocab, input_size, hidden_size, seed),
            hops,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.encoder.parameter_count()
    }

    pub fn forward(&self, tape: &mut Tape, vars: &EncoderVars, example: &Example, mode: Mode, dropout_rate: f64) -> Result<ForwardPass> {
        let enc = &self.encoder;
        let mut dropout = match mode {
            Mode::Train { dropout_seed } if dropout_rate > 0.0 => {
                if !(0.0..1.0).contains(&dropout_rate) {
                    return Err(Error::Config(format!("dropout rate must be in [0, 1), got {dropout_rate}")));
                }
                Some(Dropout {
                    rate: dropout_rate,
                    rng: ChaCha8Rng::seed_from_u64(dropout_seed),
                })
            }
            _ => None,
        };

        let mut v_q = enc.question_vector(tape, vars, &enc.vocab.encode(&example.question))?;
        let mut story = enc.story_word_vectors(tape, vars, &example.story)?;
        if let Some(d) = dropout.as_mut() {
            v_q = d.apply(tape, v_q)?;
            for s in story.word_vectors.iter_mut() {
                *s = d.apply(tape, *s)?;
            }
        }
        let (v_qn, trace) = run_hops(tape, v_q, &story, &self.hops)?;
        let choices = example
            .choices
            .iter()
            .map(|c| enc.question_vector(tape, vars, &enc.vocab.encode(c)))
            .collect::<Result<Vec<_>>>()?;
        let (scores, chosen) = answer_select(tape, v_qn, &choices)?;
        Ok(ForwardPass { scores, chosen, trace })
    }

    /// Builds the loss node on `tape` with parameters bound to `vars`.
    pub fn loss_on(
        &self,
        tape: &mut Tape,
        vars: &EncoderVars,
        example: &Example,
        loss: LossKind,
        mode: Mode,
        dropout_rate: f64,
    ) -> Result<(Var, ForwardPass)> {
        let pass = self.forward(tape, vars, example, mode, dropout_rate)?;
        let l = match loss {
            LossKind::SquaredError => tape.squared_error(pass.scores, &target_vector(example.answer))?,
            LossKind::CrossEntropy => tape.cross_entropy(pass.scores, example.answer)?,
        };
        Ok((l, pass))
    }

    pub fn predict(&self, example: &Example) -> Result<Prediction> {
        let mut tape = Tape::new();
        let vars = self.encoder.bind(&mut tape);
        let pass = self.forward(&mut tape, &vars, example, Mode::Eval, 0.0)?;
        let mut scores = [0.0; NUM_CHOICES];
        scores.copy_from_slice(tape.value(pass.scores).data());
        Ok(Prediction {
            scores,
            chosen: pass.chosen,
            trace: pass.trace,
        })
    }

    /// Loss value and parameter gradients in [`BiGruEncoder::tensors`] order.
    pub fn loss_and_gradients(&self, example: &Example, loss: LossKind, mode: Mode, dropout_rate: f64) -> Result<(f64, Vec<Tensor>)> {
        let mut tape = Tape::new();
        let vars = self.encoder.bind(&mut tape);
        let (l, _) = self.loss_on(&mut tape, &vars, example, loss, mode, dropout_rate)?;
        let value = tape.scalar(l);
        if !value.is_finite() {
            return Err(Error::Numeric(format!("non-finite loss on example {}", example.id)));
        }
        let mut grads = tape.backward(l)?;
        let out = vars
            .all()
            .into_iter()
            .zip(self.encoder.tensors())
            .map(|(v, (_, t))| grads.take(v).unwrap_or_else(|| Tensor::zeros(t.shape())))
            .collect();
        Ok((value, out))
    }
}
