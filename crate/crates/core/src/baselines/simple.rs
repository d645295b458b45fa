//! Heuristics that look only at the question and the choices.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::attention::argmax;
use crate::data::{bag_vector, EmbeddingTable, Example, NUM_CHOICES};
use crate::error::{Error, Result};
use crate::tensor::cosine;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimpleBaselineKind {
    Longest,
    Shortest,
    MostDifferentLength,
    ChoiceMostSimilar,
    ChoiceMostDifferent,
    QuestionChoiceSimilar,
}

impl SimpleBaselineKind {
    pub const ALL: [SimpleBaselineKind; 6] = [
        SimpleBaselineKind::Longest,
        SimpleBaselineKind::Shortest,
        SimpleBaselineKind::MostDifferentLength,
        SimpleBaselineKind::ChoiceMostSimilar,
        SimpleBaselineKind::ChoiceMostDifferent,
        SimpleBaselineKind::QuestionChoiceSimilar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SimpleBaselineKind::Longest => "longest",
            SimpleBaselineKind::Shortest => "shortest",
            SimpleBaselineKind::MostDifferentLength => "most_different_length",
            SimpleBaselineKind::ChoiceMostSimilar => "choice_most_similar",
            SimpleBaselineKind::ChoiceMostDifferent => "choice_most_different",
            SimpleBaselineKind::QuestionChoiceSimilar => "question_choice_similar",
        }
    }
}

impl fmt::Display for SimpleBaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SimpleBaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown baseline kind '{s}'")))
    }
}

fn argmin(xs: &[f64]) -> usize {
    let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
    argmax(&neg)
}

/// Mean cosine of each choice's bag vector to the other three.
fn mean_cosine_to_others(example: &Example, table: &EmbeddingTable) -> Vec<f64> {
    let bags: Vec<_> = example.choices.iter().map(|c| bag_vector(c, table)).collect();
    (0..NUM_CHOICES)
        .map(|i| {
            let total: f64 = (0..NUM_CHOICES)
                .filter(|&j| j != i)
                .map(|j| cosine(bags[i].data(), bags[j].data()))
                .sum();
            total / (NUM_CHOICES - 1) as f64
        })
        .collect()
}

pub fn simple_baseline(example: &Example, kind: SimpleBaselineKind, table: &EmbeddingTable) -> usize {
    let lengths: Vec<f64> = example.choices.iter().map(|c| c.len() as f64).collect();
    match kind {
        SimpleBaselineKind::Longest => argmax(&lengths),
        SimpleBaselineKind::Shortest => argmin(&lengths),
        SimpleBaselineKind::MostDifferentLength => {
            let gaps: Vec<f64> = lengths
                .iter()
                .map(|a| lengths.iter().map(|b| (a - b).abs()).sum())
                .collect();
            argmax(&gaps)
        }
        SimpleBaselineKind::ChoiceMostSimilar => argmax(&mean_cosine_to_others(example, table)),
        SimpleBaselineKind::ChoiceMostDifferent => argmin(&mean_cosine_to_others(example, table)),
        SimpleBaselineKind::QuestionChoiceSimilar => {
            let q = bag_vector(&example.question, table);
            let scores: Vec<f64> = example
                .choices
                .iter()
                .map(|c| cosine(bag_vector(c, table).data(), q.data()))
                .collect();
            argmax(&scores)
        }
    }
}
