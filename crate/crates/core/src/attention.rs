//! Cosine attention over story positions, hop iteration and answer selection.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::encoder::StoryEncoding;
use crate::error::{Error, Result};
use crate::tape::{Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttentionLevel {
    /// Normalize over every story position.
    Word,
    /// Normalize over utterance-final positions only.
    Sentence,
}

impl fmt::Display for AttentionLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttentionLevel::Word => "word",
            AttentionLevel::Sentence => "sentence",
        })
    }
}

impl FromStr for AttentionLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word" => Ok(AttentionLevel::Word),
            "sentence" => Ok(AttentionLevel::Sentence),
            other => Err(Error::Config(format!("unknown attention level '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HopConfig {
    pub n_hops: usize,
    pub level: AttentionLevel,
}

impl Default for HopConfig {
    fn default() -> Self {
        HopConfig {
            n_hops: 1,
            level: AttentionLevel::Word,
        }
    }
}

/// What one hop saw and produced.
#[derive(Debug, Clone, PartialEq)]
pub struct HopTrace {
    /// Raw cosine scores, one per story position.
    pub alphas: Vec<f64>,
    /// Normalized weights; zero outside the active set.
    pub weights: Vec<f64>,
    pub story_vector: Vec<f64>,
    /// The question vector this hop attended with.
    pub question_vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionTrace {
    pub level: AttentionLevel,
    pub hops: Vec<HopTrace>,
}

/// `α_t = cos(S_t, v_q)` for every story position.
pub fn attention_values(tape: &mut Tape, story: &StoryEncoding, v_q: Var) -> Result<Vec<Var>> {
    if story.is_empty() {
        return Err(Error::Precondition("story encoding is empty".into()));
    }
    story.word_vectors.iter().map(|&s| tape.cosine(s, v_q)).collect()
}

/// Attention weights and `V_S` at the given level; returns `(weights, story_vector)`.
pub fn story_vector(tape: &mut Tape, story: &StoryEncoding, alphas: &[Var], level: AttentionLevel) -> Result<(Var, Var)> {
    if alphas.len() != story.len() {
        return Err(Error::Dimension {
            op: "story_vector",
            left: vec![story.len()],
            right: vec![alphas.len()],
        });
    }
    let active = match level {
        AttentionLevel::Word => vec![true; story.len()],
        AttentionLevel::Sentence => story.eos_mask.clone(),
    };
    if !active.iter().any(|&a| a) {
        return Err(Error::Precondition("sentence-level attention needs at least one utterance end".into()));
    }
    let scores = tape.stack(alphas)?;
    let weights = tape.masked_softmax(scores, &active)?;
    let v_s = tape.weighted_sum(weights, &story.word_vectors)?;
    Ok((weights, v_s))
}

/// One hop: attend with `v_q`, then return `v_q + V_S`.
pub fn hop(tape: &mut Tape, v_q: Var, story: &StoryEncoding, level: AttentionLevel) -> Result<(Var, HopTrace)> {
    let alphas = attention_values(tape, story, v_q)?;
    let (weights, v_s) = story_vector(tape, story, &alphas, level)?;
    let next = tape.add(v_q, v_s)?;
    let trace = HopTrace {
        alphas: alphas.iter().map(|&a| tape.scalar(a)).collect(),
        weights: tape.value(weights).data().to_vec(),
        story_vector: tape.value(v_s).data().to_vec(),
        question_vector: tape.value(v_q).data().to_vec(),
    };
    Ok((next, trace))
}

pub fn run_hops(tape: &mut Tape, v_q0: Var, story: &StoryEncoding, cfg: &HopConfig) -> Result<(Var, AttentionTrace)> {
    if cfg.n_hops < 1 {
        return Err(Error::Config("number of hops must be at least 1".into()));
    }
    let mut v_q = v_q0;
    let mut hops = Vec::with_capacity(cfg.n_hops);
    for _ in 0..cfg.n_hops {
        let (next, trace) = hop(tape, v_q, story, cfg.level)?;
        hops.push(trace);
        v_q = next;
    }
    Ok((
        v_q,
        AttentionTrace {
            level: cfg.level,
            hops,
        },
    ))
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Cosine score of each choice against `v_q`; returns the score vector and the chosen index.
pub fn answer_select(tape: &mut Tape, v_q: Var, choices: &[Var]) -> Result<(Var, usize)> {
    let scores: Vec<Var> = choices.iter().map(|&c| tape.cosine(v_q, c)).collect::<Result<_>>()?;
    let stacked = tape.stack(&scores)?;
    let chosen = argmax(tape.value(stacked).data());
    Ok((stacked, chosen))
}
