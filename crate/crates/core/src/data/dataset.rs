use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{normalize_token, Dataset, Example, Split, Story, Utterance, NUM_CHOICES};
use crate::error::{Error, Result};

/// One line of a dataset file.
#[derive(Debug, Serialize, Deserialize)]
struct Record {
    id: String,
    split: Split,
    story: Vec<Vec<String>>,
    question: Vec<String>,
    choices: Vec<Vec<String>>,
    answer: i64,
}

fn normalize_all(words: &[String]) -> Vec<String> {
    words.iter().filter_map(|w| normalize_token(w)).collect()
}

fn invalid(id: &str, msg: impl Into<String>) -> Error {
    Error::Validation {
        id: id.to_string(),
        msg: msg.into(),
    }
}

impl Record {
    fn into_example(self) -> Result<(Split, Example)> {
        let id = self.id;
        if self.choices.len() != NUM_CHOICES {
            return Err(invalid(&id, format!("expected {NUM_CHOICES} choices, found {}", self.choices.len())));
        }
        if !(0..NUM_CHOICES as i64).contains(&self.answer) {
            return Err(invalid(&id, format!("answer {} out of range 0..=3", self.answer)));
        }
        let question = normalize_all(&self.question);
        if question.is_empty() {
            return Err(invalid(&id, "question is empty"));
        }
        let mut utterances = Vec::with_capacity(self.story.len());
        for (k, u) in self.story.iter().enumerate() {
            let tokens = normalize_all(u);
            if tokens.is_empty() {
                return Err(invalid(&id, format!("utterance {k} is empty")));
            }
            utterances.push(Utterance::new(tokens));
        }
        if utterances.is_empty() {
            return Err(invalid(&id, "story has no utterances"));
        }
        let mut choices: [Vec<String>; NUM_CHOICES] = Default::default();
        for (k, c) in self.choices.iter().enumerate() {
            let tokens = normalize_all(c);
            if tokens.is_empty() {
                return Err(invalid(&id, format!("choice {k} is empty")));
            }
            choices[k] = tokens;
        }
        let example = Example {
            id,
            story: Story::new(utterances),
            question,
            choices,
            answer: self.answer as usize,
        };
        Ok((self.split, example))
    }

    fn from_example(split: Split, e: &Example) -> Self {
        Record {
            id: e.id.clone(),
            split,
            story: e.story.utterances.iter().map(|u| u.tokens.clone()).collect(),
            question: e.question.clone(),
            choices: e.choices.to_vec(),
            answer: e.answer as i64,
        }
    }
}

/// Parses line-delimited JSON records. `origin` names the source in errors.
pub fn parse_dataset(text: &str, origin: &str) -> Result<Dataset> {
    let mut ds = Dataset::default();
    let mut seen = HashSet::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: origin.to_string(),
            line: lineno + 1,
            msg: e.to_string(),
        })?;
        let id = value
            .get("id")
            .and_then(|v| v.as_str())
            .map(str::to_string)
            .unwrap_or_else(|| format!("<line {}>", lineno + 1));
        let record: Record = serde_json::from_value(value).map_err(|e| invalid(&id, e.to_string()))?;
        let (split, example) = record.into_example()?;
        if !seen.insert(example.id.clone()) {
            return Err(invalid(&example.id, "duplicate example id"));
        }
        ds.split_mut(split).push(example);
    }
    Ok(ds)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text, &path.display().to_string())
}

/// Serializes in file order: train, dev, test.
pub fn write_dataset(ds: &Dataset) -> String {
    let mut out = String::new();
    for (split, e) in ds.iter() {
        let line = serde_json::to_string(&Record::from_example(split, e)).expect("records always serialize");
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_dataset(ds)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, split: &str, choices: usize, answer: i64) -> String {
        let choices: Vec<Vec<&str>> = (0..choices).map(|_| vec!["yes"]).collect();
        serde_json::json!({
            "id": id, "split": split,
            "story": [["the", "cat"], ["sat"]],
            "question": ["where", "cat"],
            "choices": choices,
            "answer": answer,
        })
        .to_string()
    }

    #[test]
    fn loads_valid_records_into_splits() {
        let text = format!("{}\n{}\n", record("a", "train", 4, 0), record("b", "test", 4, 3));
        let ds = parse_dataset(&text, "mem").unwrap();
        assert_eq!(ds.sizes(), (1, 0, 1));
        assert_eq!(ds.test[0].answer, 3);
    }

    #[test]
    fn wrong_choice_count_names_the_example() {
        let text = record("bad-1", "train", 3, 0);
        match parse_dataset(&text, "mem") {
            Err(Error::Validation { id, .. }) => assert_eq!(id, "bad-1"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn answer_out_of_range_is_rejected() {
        for a in [-1, 4] {
            let text = record("r", "dev", 4, a);
            assert!(matches!(parse_dataset(&text, "mem"), Err(Error::Validation { .. })));
        }
    }

    #[test]
    fn missing_field_is_a_validation_error() {
        let text = r#"{"id":"m","split":"train","story":[["a"]],"choices":[["a"],["b"],["c"],["d"]],"answer":0}"#;
        match parse_dataset(text, "mem") {
            Err(Error::Validation { id, msg }) => {
                assert_eq!(id, "m");
                assert!(msg.contains("question"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_break_split_disjointness() {
        let text = format!("{}\n{}\n", record("x", "train", 4, 0), record("x", "dev", 4, 1));
        assert!(matches!(parse_dataset(&text, "mem"), Err(Error::Validation { .. })));
    }

    #[test]
    fn tokens_are_normalized_on_load() {
        let text = r#"{"id":"n","split":"train","story":[["The","Cat."]],"question":["Where?"],"choices":[["A"],["b"],["c"],["d"]],"answer":0}"#;
        let ds = parse_dataset(text, "mem").unwrap();
        assert_eq!(ds.train[0].story.utterances[0].tokens, vec!["the", "cat"]);
        assert_eq!(ds.train[0].question, vec!["where"]);
    }

    #[test]
    fn full_corpus_shaped_file_keeps_split_sizes() {
        let mut text = String::new();
        for (split, n) in [("train", 717), ("dev", 124), ("test", 122)] {
            for i in 0..n {
                text.push_str(&record(&format!("{split}-{i}"), split, 4, (i % 4) as i64));
                text.push('\n');
            }
        }
        let ds = parse_dataset(&text, "mem").unwrap();
        assert_eq!(ds.sizes(), (717, 124, 122));
        assert_eq!(ds.train.len() + ds.dev.len() + ds.test.len(), 963);
    }
}
