//! Sliding-window similarity over story utterances.

use crate::attention::argmax;
use crate::data::{bag_vector, EmbeddingTable, Example};
use crate::error::{Error, Result};
use crate::tensor::{cosine, Tensor};

/// Window sizes tried when tuning on dev.
pub const WINDOW_SEARCH: [usize; 8] = [1, 2, 3, 5, 10, 15, 20, 30];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlidingWindowConfig {
    pub window_size: usize,
    pub search_set: Vec<usize>,
}

impl Default for SlidingWindowConfig {
    fn default() -> Self {
        SlidingWindowConfig {
            window_size: 5,
            search_set: WINDOW_SEARCH.to_vec(),
        }
    }
}

fn mean_cosine(bags: &[Tensor], target: &Tensor) -> f64 {
    bags.iter().map(|b| cosine(b.data(), target.data())).sum::<f64>() / bags.len() as f64
}

/// Start index of the best window of `min(w, N)` utterances, earliest on ties.
pub fn best_window(example: &Example, table: &EmbeddingTable, w: usize) -> Result<(usize, usize)> {
    if w == 0 {
        return Err(Error::Config("window size must be at least 1".into()));
    }
    let bags: Vec<Tensor> = example.story.utterances.iter().map(|u| bag_vector(&u.tokens, table)).collect();
    let n = bags.len();
    let width = w.min(n);
    let q = bag_vector(&example.question, table);
    let scores: Vec<f64> = (0..=n - width).map(|s| mean_cosine(&bags[s..s + width], &q)).collect();
    Ok((argmax(&scores), width))
}

pub fn sliding_window(example: &Example, table: &EmbeddingTable, w: usize) -> Result<usize> {
    let (start, width) = best_window(example, table, w)?;
    let bags: Vec<Tensor> = example.story.utterances[start..start + width]
        .iter()
        .map(|u| bag_vector(&u.tokens, table))
        .collect();
    let scores: Vec<f64> = example
        .choices
        .iter()
        .map(|c| mean_cosine(&bags, &bag_vector(c, table)))
        .collect();
    Ok(argmax(&scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Story;

    fn table() -> EmbeddingTable {
        let mut t = EmbeddingTable::new(3);
        t.insert("a", vec![1.0, 0.0, 0.0]).unwrap();
        t.insert("b", vec![0.0, 1.0, 0.0]).unwrap();
        t.insert("c", vec![0.0, 0.0, 1.0]).unwrap();
        t
    }

    fn example(story: &[&[&str]], question: &[&str], choices: [&[&str]; 4]) -> Example {
        Example {
            id: "w".into(),
            story: Story::from_words(story),
            question: question.iter().map(|s| s.to_string()).collect(),
            choices: choices.map(|c| c.iter().map(|s| s.to_string()).collect()),
            answer: 0,
        }
    }

    #[test]
    fn wide_window_covers_story() {
        let e = example(&[&["a"], &["b"], &["c"]], &["a"], [&["a"], &["b"], &["c"], &["a"]]);
        assert_eq!(best_window(&e, &table(), 10).unwrap(), (0, 3));
    }

    #[test]
    fn matching_utterance_is_found() {
        let e = example(&[&["b"], &["c"], &["a"]], &["a"], [&["a"], &["b"], &["c"], &["b"]]);
        assert_eq!(best_window(&e, &table(), 1).unwrap(), (2, 1));
        assert_eq!(sliding_window(&e, &table(), 1).unwrap(), 0);
    }

    #[test]
    fn zero_window_is_rejected() {
        let e = example(&[&["a"]], &["a"], [&["a"], &["b"], &["c"], &["a"]]);
        assert!(sliding_window(&e, &table(), 0).is_err());
    }
}
