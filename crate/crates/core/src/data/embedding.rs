use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Word vectors read from a whitespace-separated text file.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    entries: HashMap<String, Vec<f64>>,
    // File order, kept so that writing is deterministic.
    order: Vec<String>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Self {
        EmbeddingTable {
            dimension,
            entries: HashMap::new(),
            order: Vec::new(),
        }
    }

    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dimension {
            return Err(Error::Dimension {
                op: "embedding insert",
                left: vec![self.dimension],
                right: vec![vector.len()],
            });
        }
        let word = word.into();
        if self.entries.insert(word.clone(), vector).is_none() {
            self.order.push(word);
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.order.iter().map(String::as_str)
    }
}

pub fn parse_embedding_table(text: &str, origin: &str) -> Result<EmbeddingTable> {
    let mut table: Option<EmbeddingTable> = None;
    for (lineno, line) in text.lines().enumerate() {
        let mut fields = line.split_whitespace();
        let Some(word) = fields.next() else { continue };
        let vector = fields
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Parse {
                path: origin.to_string(),
                line: lineno + 1,
                msg: format!("bad number: {e}"),
            })?;
        let t = table.get_or_insert_with(|| EmbeddingTable::new(vector.len()));
        if vector.is_empty() || vector.len() != t.dimension {
            return Err(Error::Parse {
                path: origin.to_string(),
                line: lineno + 1,
                msg: format!("expected {} values for '{word}', found {}", t.dimension, vector.len()),
            });
        }
        t.insert(word, vector)?;
    }
    table.ok_or_else(|| Error::Format {
        path: origin.to_string(),
        msg: "embedding file has no entries".into(),
    })
}

pub fn load_embedding_table(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embedding_table(&text, &path.display().to_string())
}

pub fn save_embedding_table(table: &EmbeddingTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for w in table.words() {
        out.push_str(w);
        for v in table.get(w).expect("ordered words are present") {
            write!(out, " {v}").expect("writing to a String");
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Sum of the vectors of `words`; out-of-vocabulary words contribute zero.
pub fn bag_vector<S: AsRef<str>>(words: &[S], table: &EmbeddingTable) -> Tensor {
    let mut sum = vec![0.0; table.dimension()];
    for w in words {
        if let Some(v) = table.get(w.as_ref()) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
        }
    }
    Tensor::vector(sum)
}
