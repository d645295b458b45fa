//! Comprehension examples, dataset files, embeddings and story transforms.

mod corrupt;
mod dataset;
mod embedding;
mod prune;

pub use corrupt::{corrupt_transcript, corrupt_transcript_with, CorruptionMix, CorruptionStats};
pub use dataset::{load_dataset, parse_dataset, save_dataset, write_dataset};
pub use embedding::{bag_vector, load_embedding_table, parse_embedding_table, save_embedding_table, EmbeddingTable};
pub use prune::{prune_dataset, prune_story};

use serde::{Deserialize, Serialize};

pub const NUM_CHOICES: usize = 4;

/// Lowercases and strips punctuation other than apostrophes, then splits on whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().filter_map(normalize_token).collect()
}

/// Normalizes a single token; `None` when nothing survives.
pub fn normalize_token(token: &str) -> Option<String> {
    let t: String = token
        .chars()
        .filter(|c| c.is_alphanumeric() || *c == '\'')
        .flat_map(char::to_lowercase)
        .collect();
    (!t.is_empty()).then_some(t)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Utterance {
    pub tokens: Vec<String>,
}

impl Utterance {
    pub fn new(tokens: Vec<String>) -> Self {
        Utterance { tokens }
    }

    pub fn from_words(words: &[&str]) -> Self {
        Utterance::new(words.iter().map(|w| w.to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Story {
    pub utterances: Vec<Utterance>,
}

impl Story {
    pub fn new(utterances: Vec<Utterance>) -> Self {
        Story { utterances }
    }

    pub fn from_words(utterances: &[&[&str]]) -> Self {
        Story::new(utterances.iter().map(|u| Utterance::from_words(u)).collect())
    }

    /// All words in reading order, utterances concatenated.
    pub fn flat_words(&self) -> Vec<&str> {
        self.utterances
            .iter()
            .flat_map(|u| u.tokens.iter().map(String::as_str))
            .collect()
    }

    pub fn word_count(&self) -> usize {
        self.utterances.iter().map(Utterance::len).sum()
    }

    /// True at every utterance-final position of the flattened story.
    pub fn eos_mask(&self) -> Vec<bool> {
        let mut mask = Vec::with_capacity(self.word_count());
        for u in &self.utterances {
            let n = u.len();
            mask.extend((0..n).map(|i| i + 1 == n));
        }
        mask
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub id: String,
    pub story: Story,
    pub question: Vec<String>,
    pub choices: [Vec<String>; NUM_CHOICES],
    pub answer: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub train: Vec<Example>,
    pub dev: Vec<Example>,
    pub test: Vec<Example>,
}

impl Dataset {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.dev.len(), self.test.len())
    }

    pub fn split(&self, split: Split) -> &[Example] {
        match split {
            Split::Train => &self.train,
            Split::Dev => &self.dev,
            Split::Test => &self.test,
        }
    }

    pub fn split_mut(&mut self, split: Split) -> &mut Vec<Example> {
        match split {
            Split::Train => &mut self.train,
            Split::Dev => &mut self.dev,
            Split::Test => &mut self.test,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Split, &Example)> {
        self.train
            .iter()
            .map(|e| (Split::Train, e))
            .chain(self.dev.iter().map(|e| (Split::Dev, e)))
            .chain(self.test.iter().map(|e| (Split::Test, e)))
    }
}
