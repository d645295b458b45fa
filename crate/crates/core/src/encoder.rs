//! Shared bidirectional GRU encoder for questions, stories and choices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Story;
use crate::error::{Error, Result};
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;
use crate::vocab::Vocab;

/// Glorot-uniform fill for a `[rows, cols]` matrix.
pub(crate) fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> Tensor {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.random_range(-bound..=bound)).collect();
    Tensor::matrix(rows, cols, data).expect("sized by construction")
}

/// One direction's gate parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GruParams {
    pub w_z: Tensor,
    pub w_r: Tensor,
    pub w_h: Tensor,
    pub u_z: Tensor,
    pub u_r: Tensor,
    pub u_h: Tensor,
    pub b_z: Tensor,
    pub b_r: Tensor,
    pub b_h: Tensor,
}

pub const GRU_PARAM_NAMES: [&str; 9] = ["w_z", "w_r", "w_h", "u_z", "u_r", "u_h", "b_z", "b_r", "b_h"];

impl GruParams {
    pub fn zeros(hidden: usize, input: usize) -> Self {
        GruParams {
            w_z: Tensor::zeros(&[hidden, input]),
            w_r: Tensor::zeros(&[hidden, input]),
            w_h: Tensor::zeros(&[hidden, input]),
            u_z: Tensor::zeros(&[hidden, hidden]),
            u_r: Tensor::zeros(&[hidden, hidden]),
            u_h: Tensor::zeros(&[hidden, hidden]),
            b_z: Tensor::zeros(&[hidden]),
            b_r: Tensor::zeros(&[hidden]),
            b_h: Tensor::zeros(&[hidden]),
        }
    }

    pub fn init(hidden: usize, input: usize, rng: &mut impl Rng) -> Self {
        GruParams {
            w_z: glorot(hidden, input, rng),
            w_r: glorot(hidden, input, rng),
            w_h: glorot(hidden, input, rng),
            u_z: glorot(hidden, hidden, rng),
            u_r: glorot(hidden, hidden, rng),
            u_h: glorot(hidden, hidden, rng),
            ..GruParams::zeros(hidden, input)
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.b_z.len()
    }

    pub fn input_size(&self) -> usize {
        self.w_z.shape()[1]
    }

    pub fn tensors(&self) -> [&Tensor; 9] {
        [
            &self.w_z, &self.w_r, &self.w_h, &self.u_z, &self.u_r, &self.u_h, &self.b_z, &self.b_r, &self.b_h,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Tensor; 9] {
        [
            &mut self.w_z,
            &mut self.w_r,
            &mut self.w_h,
            &mut self.u_z,
            &mut self.u_r,
            &mut self.u_h,
            &mut self.b_z,
            &mut self.b_r,
            &mut self.b_h,
        ]
    }

    fn check(&self) -> Result<()> {
        let (h, d) = (self.hidden_size(), self.input_size());
        for (name, t) in GRU_PARAM_NAMES.iter().zip(self.tensors()) {
            let expected: Vec<usize> = match name.as_bytes()[0] {
                b'w' => vec![h, d],
                b'u' => vec![h, h],
                _ => vec![h],
            };
            if t.shape() != expected.as_slice() {
                return Err(Error::Dimension {
                    op: "gru params",
                    left: expected,
                    right: t.shape().to_vec(),
                });
            }
        }
        Ok(())
    }
}

/// Tape handles for one [`GruParams`].
#[derive(Debug, Clone, Copy)]
pub struct GruVars {
    pub w_z: Var,
    pub w_r: Var,
    pub w_h: Var,
    pub u_z: Var,
    pub u_r: Var,
    pub u_h: Var,
    pub b_z: Var,
    pub b_r: Var,
    pub b_h: Var,
}

impl GruVars {
    pub fn from_slice(v: &[Var]) -> Self {
        GruVars {
            w_z: v[0],
            w_r: v[1],
            w_h: v[2],
            u_z: v[3],
            u_r: v[4],
            u_h: v[5],
            b_z: v[6],
            b_r: v[7],
            b_h: v[8],
        }
    }

    pub fn bind(tape: &mut Tape, p: &GruParams) -> Self {
        let vars: Vec<Var> = p.tensors().iter().map(|t| tape.leaf((*t).clone())).collect();
        GruVars::from_slice(&vars)
    }
}

/// `z = σ(W_z x + U_z h + b_z)`, `r = σ(W_r x + U_r h + b_r)`,
/// `h̃ = tanh(W_h x + U_h (r ⊙ h) + b_h)`, output `(1 − z) ⊙ h + z ⊙ h̃`.
pub fn gru_step(tape: &mut Tape, p: &GruVars, x: Var, h_prev: Var) -> Result<Var> {
    let zx = tape.affine(p.w_z, x, Some(p.b_z))?;
    let zh = tape.matvec(p.u_z, h_prev)?;
    let z_pre = tape.add(zx, zh)?;
    let z = tape.sigmoid(z_pre);

    let rx = tape.affine(p.w_r, x, Some(p.b_r))?;
    let rh = tape.matvec(p.u_r, h_prev)?;
    let r_pre = tape.add(rx, rh)?;
    let r = tape.sigmoid(r_pre);

    let gated = tape.mul(r, h_prev)?;
    let cx = tape.affine(p.w_h, x, Some(p.b_h))?;
    let ch = tape.matvec(p.u_h, gated)?;
    let c_pre = tape.add(cx, ch)?;
    let candidate = tape.tanh(c_pre);

    let delta = tape.sub(candidate, h_prev)?;
    let step = tape.mul(z, delta)?;
    tape.add(h_prev, step)
}

/// Per-position story representations `S_t = [y_f(t) ‖ y_b(t)]`, held on a tape.
#[derive(Debug, Clone)]
pub struct StoryEncoding {
    pub word_vectors: Vec<Var>,
    pub eos_mask: Vec<bool>,
}

impl StoryEncoding {
    pub fn len(&self) -> usize {
        self.word_vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word_vectors.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiGruEncoder {
    pub vocab: Vocab,
    /// `[input_size, vocab_size]`; column `i` is the input vector of word `i`.
    pub embedding: Tensor,
    pub forward: GruParams,
    pub backward: GruParams,
}

/// Tape handles for a whole [`BiGruEncoder`].
#[derive(Debug, Clone, Copy)]
pub struct EncoderVars {
    pub embedding: Var,
    pub forward: GruVars,
    pub backward: GruVars,
}

impl EncoderVars {
    /// Maps handles given in [`BiGruEncoder::tensors`] order.
    pub fn from_slice(v: &[Var]) -> Self {
        EncoderVars {
            embedding: v[0],
            forward: GruVars::from_slice(&v[1..10]),
            backward: GruVars::from_slice(&v[10..19]),
        }
    }

    pub fn all(&self) -> Vec<Var> {
        let g = |p: &GruVars| [p.w_z, p.w_r, p.w_h, p.u_z, p.u_r, p.u_h, p.b_z, p.b_r, p.b_h];
        std::iter::once(self.embedding)
            .chain(g(&self.forward))
            .chain(g(&self.backward))
            .collect()
    }
}

impl BiGruEncoder {
    pub fn new(vocab: Vocab, input_size: usize, hidden_size: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let embedding = glorot(input_size, vocab.len(), &mut rng);
        let forward = GruParams::init(hidden_size, input_size, &mut rng);
        let backward = GruParams::init(hidden_size, input_size, &mut rng);
        BiGruEncoder {
            vocab,
            embedding,
            forward,
            backward,
        }
    }

    pub fn zeros(vocab: Vocab, input_size: usize, hidden_size: usize) -> Self {
        let embedding = Tensor::zeros(&[input_size, vocab.len()]);
        BiGruEncoder {
            vocab,
            embedding,
            forward: GruParams::zeros(hidden_size, input_size),
            backward: GruParams::zeros(hidden_size, input_size),
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.forward.hidden_size()
    }

    pub fn input_size(&self) -> usize {
        self.embedding.shape()[0]
    }

    /// Checks that every tensor agrees with the embedding and hidden sizes.
    pub fn validate(&self) -> Result<()> {
        if self.embedding.shape() != [self.input_size(), self.vocab.len()] {
            return Err(Error::Dimension {
                op: "embedding",
                left: vec![self.input_size(), self.vocab.len()],
                right: self.embedding.shape().to_vec(),
            });
        }
        self.forward.check()?;
        self.backward.check()?;
        if self.forward.input_size() != self.input_size() || self.backward.hidden_size() != self.hidden_size() {
            return Err(Error::Dimension {
                op: "encoder",
                left: vec![self.hidden_size(), self.input_size()],
                right: vec![self.backward.hidden_size(), self.forward.input_size()],
            });
        }
        Ok(())
    }

    /// Named parameter tensors in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = vec![("embedding".to_string(), &self.embedding)];
        for (dir, p) in [("forward", &self.forward), ("backward", &self.backward)] {
            for (name, t) in GRU_PARAM_NAMES.iter().zip(p.tensors()) {
                out.push((format!("{dir}.{name}"), t));
            }
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = vec![&mut self.embedding];
        out.extend(self.forward.tensors_mut());
        out.extend(self.backward.tensors_mut());
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn bind(&self, tape: &mut Tape) -> EncoderVars {
        let vars: Vec<Var> = self.tensors().into_iter().map(|(_, t)| tape.leaf(t.clone())).collect();
        EncoderVars::from_slice(&vars)
    }

    fn embed(&self, tape: &mut Tape, vars: &EncoderVars, words: &[usize]) -> Result<Vec<Var>> {
        words.iter().map(|&w| tape.column_sum(vars.embedding, &[w])).collect()
    }

    /// Forward states `y_f(1..T)` and backward states `y_b(1..T)`, both from a zero start.
    pub fn encode_bidirectional(&self, tape: &mut Tape, vars: &EncoderVars, words: &[usize]) -> Result<(Vec<Var>, Vec<Var>)> {
        if words.is_empty() {
            return Err(Error::Precondition("cannot encode an empty word sequence".into()));
        }
        let inputs = self.embed(tape, vars, words)?;
        let h = self.hidden_size();

        let mut fwd = Vec::with_capacity(inputs.len());
        let mut state = tape.leaf(Tensor::zeros(&[h]));
        for &x in &inputs {
            state = gru_step(tape, &vars.forward, x, state)?;
            fwd.push(state);
        }

        let mut bwd = vec![state; inputs.len()];
        let mut state = tape.leaf(Tensor::zeros(&[h]));
        for (t, &x) in inputs.iter().enumerate().rev() {
            state = gru_step(tape, &vars.backward, x, state)?;
            bwd[t] = state;
        }
        Ok((fwd, bwd))
    }

    /// `[y_f(T) ‖ y_b(1)]`; also used for each answer choice.
    pub fn question_vector(&self, tape: &mut Tape, vars: &EncoderVars, words: &[usize]) -> Result<Var> {
        let (fwd, bwd) = self.encode_bidirectional(tape, vars, words)?;
        tape.concat(fwd[fwd.len() - 1], bwd[0])
    }

    /// Runs both recurrences over the flattened story and pairs the states per position.
    pub fn story_word_vectors(&self, tape: &mut Tape, vars: &EncoderVars, story: &Story) -> Result<StoryEncoding> {
        let words = self.vocab.encode(&story.flat_words());
        let (fwd, bwd) = self.encode_bidirectional(tape, vars, &words)?;
        let word_vectors = fwd
            .into_iter()
            .zip(bwd)
            .map(|(f, b)| tape.concat(f, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(StoryEncoding {
            word_vectors,
            eos_mask: story.eos_mask(),
        })
    }

    /// Value-only question encoding on a private tape.
    pub fn encode_question<S: AsRef<str>>(&self, words: &[S]) -> Result<Tensor> {
        let mut tape = Tape::new();
        let vars = self.bind(&mut tape);
        let v = self.question_vector(&mut tape, &vars, &self.vocab.encode(words))?;
        Ok(tape.value(v).clone())
    }

    /// Value-only story encoding on a private tape.
    pub fn encode_story(&self, story: &Story) -> Result<(Vec<Tensor>, Vec<bool>)> {
        let mut tape = Tape::new();
        let vars = self.bind(&mut tape);
        let enc = self.story_word_vectors(&mut tape, &vars, story)?;
        let vectors = enc.word_vectors.iter().map(|&v| tape.value(v).clone()).collect();
        Ok((vectors, enc.eos_mask))
    }
}
