//! Shared fixtures: gradient-check cases and independent oracles.
#![allow(dead_code)]

use amrnn::attention::{AttentionLevel, HopConfig};
use amrnn::data::{EmbeddingTable, Example, Story};
use amrnn::encoder::{EncoderVars, GruVars};
use amrnn::gradcheck::finite_diff_check_many;
use amrnn::model::{Amrnn, LossKind, Mode};
use amrnn::tape::Tape;
use amrnn::vocab::Vocab;
use amrnn::{Result, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type OpFn = Box<dyn Fn(&mut Tape, &[Var]) -> Result<Var>>;

pub struct OpCase {
    pub name: &'static str,
    pub shapes: Vec<Vec<usize>>,
    pub f: OpFn,
}

fn uniform(shape: &[usize], rng: &mut impl Rng) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Reduces a vector to a scalar with fixed, irregular weights so every output component matters.
fn project(t: &mut Tape, v: Var) -> Result<Var> {
    let n = t.value(v).len();
    if t.value(v).is_scalar() {
        return Ok(v);
    }
    let w = t.leaf(Tensor::vector((0..n).map(|i| 0.7 - 0.31 * i as f64).collect()));
    t.dot(v, w)
}

pub fn op_cases() -> Vec<OpCase> {
    let c = |name, shapes: &[&[usize]], f: OpFn| OpCase {
        name,
        shapes: shapes.iter().map(|s| s.to_vec()).collect(),
        f,
    };
    vec![
        c("affine", &[&[3, 4], &[4], &[3]], Box::new(|t, v| {
            let y = t.affine(v[0], v[1], Some(v[2]))?;
            project(t, y)
        })),
        c("matvec", &[&[2, 3], &[3]], Box::new(|t, v| {
            let y = t.matvec(v[0], v[1])?;
            project(t, y)
        })),
        c("add", &[&[3], &[3]], Box::new(|t, v| {
            let y = t.add(v[0], v[1])?;
            project(t, y)
        })),
        c("sub", &[&[3], &[3]], Box::new(|t, v| {
            let y = t.sub(v[0], v[1])?;
            project(t, y)
        })),
        c("mul", &[&[3], &[3]], Box::new(|t, v| {
            let y = t.mul(v[0], v[1])?;
            project(t, y)
        })),
        c("mul_const", &[&[3]], Box::new(|t, v| {
            let y = t.mul_const(v[0], vec![1.25, 0.0, -2.0])?;
            project(t, y)
        })),
        c("scale", &[&[3]], Box::new(|t, v| {
            let y = t.scale(v[0], -1.7);
            project(t, y)
        })),
        c("sigmoid", &[&[4]], Box::new(|t, v| {
            let y = t.sigmoid(v[0]);
            project(t, y)
        })),
        c("tanh", &[&[4]], Box::new(|t, v| {
            let y = t.tanh(v[0]);
            project(t, y)
        })),
        c("concat", &[&[2], &[3]], Box::new(|t, v| {
            let y = t.concat(v[0], v[1])?;
            project(t, y)
        })),
        c("column_sum", &[&[3, 4]], Box::new(|t, v| {
            let y = t.column_sum(v[0], &[1, 3, 1])?;
            project(t, y)
        })),
        c("cosine", &[&[4], &[4]], Box::new(|t, v| t.cosine(v[0], v[1]))),
        c("dot", &[&[4], &[4]], Box::new(|t, v| t.dot(v[0], v[1]))),
        c("stack_index", &[&[2], &[2]], Box::new(|t, v| {
            let a = t.index(v[0], 1)?;
            let b = t.dot(v[0], v[1])?;
            let s = t.stack(&[a, b])?;
            project(t, s)
        })),
        c("masked_softmax", &[&[5]], Box::new(|t, v| {
            let y = t.masked_softmax(v[0], &[true, false, true, true, false])?;
            project(t, y)
        })),
        c("weighted_sum", &[&[3], &[2], &[2], &[2]], Box::new(|t, v| {
            let y = t.weighted_sum(v[0], &v[1..])?;
            project(t, y)
        })),
        c("sum", &[&[4]], Box::new(|t, v| Ok(t.sum(v[0])))),
        c("squared_error", &[&[4]], Box::new(|t, v| t.squared_error(v[0], &[0.0, 1.0, 0.0, 0.0]))),
        c("cross_entropy", &[&[4]], Box::new(|t, v| t.cross_entropy(v[0], 2))),
        c("gru_step", &[&[2, 3], &[2, 3], &[2, 3], &[2, 2], &[2, 2], &[2, 2], &[2], &[2], &[2], &[3], &[2]], Box::new(|t, v| {
            let p = GruVars::from_slice(&v[..9]);
            let y = amrnn::encoder::gru_step(t, &p, v[9], v[10])?;
            project(t, y)
        })),
    ]
}

/// Worst relative gradient error of `case` over `points` random inputs.
pub fn check_op(case: &OpCase, points: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let inputs: Vec<Tensor> = case.shapes.iter().map(|s| uniform(s, &mut rng)).collect();
        let err = finite_diff_check_many(|t, v| (case.f)(t, v), &inputs, 1e-5).unwrap();
        worst = worst.max(err);
    }
    worst
}

/// Two utterances, six words.
pub fn six_word_example() -> Example {
    Example {
        id: "six".into(),
        story: Story::from_words(&[&["the", "man", "left"], &["she", "stayed", "home"]]),
        question: vec!["who".into(), "stayed".into()],
        choices: [
            vec!["the".into(), "man".into()],
            vec!["she".into()],
            vec!["home".into()],
            vec!["who".into(), "left".into()],
        ],
        answer: 1,
    }
}

pub fn small_model(hidden: usize, hops: HopConfig, seed: u64) -> Amrnn {
    let vocab = Vocab::new(["the", "man", "left", "she", "stayed", "home", "who"]);
    Amrnn::new(vocab, 4, hidden, hops, seed)
}

/// Relative gradient error of the full training loss with respect to every parameter.
pub fn full_model_gradient_error(model: &Amrnn, example: &Example, loss: LossKind) -> f64 {
    let inputs: Vec<Tensor> = model.encoder.tensors().into_iter().map(|(_, t)| t.clone()).collect();
    finite_diff_check_many(
        |t, v| {
            let vars = EncoderVars::from_slice(v);
            model.loss_on(t, &vars, example, loss, Mode::Eval, 0.0).map(|(l, _)| l)
        },
        &inputs,
        1e-5,
    )
    .unwrap()
}

pub fn word_level(n_hops: usize) -> HopConfig {
    HopConfig {
        n_hops,
        level: AttentionLevel::Word,
    }
}

fn bag(words: &[String], table: &EmbeddingTable) -> Vec<f64> {
    let mut v = vec![0.0; table.dimension()];
    for w in words {
        if let Some(e) = table.get(w) {
            for (a, b) in v.iter_mut().zip(e) {
                *a += b;
            }
        }
    }
    v
}

fn cos(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na < 1e-12 || nb < 1e-12 {
        0.0
    } else {
        d / (na * nb)
    }
}

/// Sliding-window answer by exhaustive enumeration of every (window, choice) pair.
pub fn sliding_window_oracle(e: &Example, table: &EmbeddingTable, w: usize) -> usize {
    let utts: Vec<Vec<f64>> = e.story.utterances.iter().map(|u| bag(&u.tokens, table)).collect();
    let n = utts.len();
    let width = w.min(n);
    let q = bag(&e.question, table);
    let mut best_start = 0;
    let mut best_score = f64::NEG_INFINITY;
    for start in 0..=n - width {
        let s = utts[start..start + width].iter().map(|u| cos(u, &q)).sum::<f64>() / width as f64;
        if s > best_score {
            best_score = s;
            best_start = start;
        }
    }
    let mut best_choice = 0;
    let mut best_conf = f64::NEG_INFINITY;
    for (k, c) in e.choices.iter().enumerate() {
        let cb = bag(c, table);
        let conf = utts[best_start..best_start + width].iter().map(|u| cos(u, &cb)).sum::<f64>() / width as f64;
        if conf > best_conf {
            best_conf = conf;
            best_choice = k;
        }
    }
    best_choice
}

/// Picks the choice that sits in the same utterance as the question's marker word.
pub fn keyword_oracle(e: &Example) -> usize {
    let marker = e.question.last().unwrap();
    let utt = e.story.utterances.iter().find(|u| u.tokens.contains(marker)).unwrap();
    e.choices.iter().position(|c| utt.tokens.contains(&c[0])).unwrap()
}

/// Choice-level brute force for the length and similarity heuristics.
pub fn simple_oracle(e: &Example, kind: &str, table: &EmbeddingTable) -> usize {
    let lens: Vec<f64> = e.choices.iter().map(|c| c.len() as f64).collect();
    let bags: Vec<Vec<f64>> = e.choices.iter().map(|c| bag(c, table)).collect();
    let q = bag(&e.question, table);
    let score = |i: usize| -> f64 {
        match kind {
            "longest" => lens[i],
            "shortest" => -lens[i],
            "most_different_length" => (0..4).map(|j| (lens[i] - lens[j]).abs()).sum(),
            "choice_most_similar" => (0..4).filter(|&j| j != i).map(|j| cos(&bags[i], &bags[j])).sum::<f64>() / 3.0,
            "choice_most_different" => -(0..4).filter(|&j| j != i).map(|j| cos(&bags[i], &bags[j])).sum::<f64>() / 3.0,
            "question_choice_similar" => cos(&bags[i], &q),
            _ => unreachable!(),
        }
    };
    let mut best = 0;
    for i in 1..4 {
        if score(i) > score(best) {
            best = i;
        }
    }
    best
}
