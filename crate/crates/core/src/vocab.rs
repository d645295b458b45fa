use std::collections::{BTreeSet, HashMap};

use crate::data::Dataset;

pub const UNK: &str = "<unk>";

/// Word-to-index map with a reserved unknown-word slot at index 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Builds from a word list; `<unk>` is prepended when absent and duplicates are ignored.
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Vocab {
            words: Vec::new(),
            index: HashMap::new(),
        };
        v.push(UNK.to_string());
        for w in words {
            v.push(w.into());
        }
        v
    }

    fn push(&mut self, w: String) {
        if !self.index.contains_key(&w) {
            self.index.insert(w.clone(), self.words.len());
            self.words.push(w);
        }
    }

    /// Every word of the training split, sorted for a reproducible index assignment.
    pub fn from_training_split(ds: &Dataset) -> Self {
        let mut words = BTreeSet::new();
        for e in &ds.train {
            words.extend(e.story.flat_words().into_iter().map(str::to_string));
            words.extend(e.question.iter().cloned());
            for c in &e.choices {
                words.extend(c.iter().cloned());
            }
        }
        Vocab::new(words)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// Index of `word`, falling back to `<unk>`.
    pub fn index_of(&self, word: &str) -> usize {
        self.get(word).unwrap_or(0)
    }

    pub fn encode<S: AsRef<str>>(&self, words: &[S]) -> Vec<usize> {
        words.iter().map(|w| self.index_of(w.as_ref())).collect()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}
