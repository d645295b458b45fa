//! Comparison systems: choice heuristics, sliding-window similarity and a
//! memory network.

mod memnet;
mod simple;
mod sliding;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

pub use memnet::{memnet_evaluate, memnet_forward, memnet_select_hops, memnet_train, MemNet, MemNetConfig, MemNetOutput};
pub use simple::{simple_baseline, SimpleBaselineKind};
pub use sliding::{best_window, sliding_window, SlidingWindowConfig, WINDOW_SEARCH};

use crate::data::{EmbeddingTable, Example};
use crate::error::{Error, Result};

/// Any method that picks a choice from an example without training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMethod {
    Simple(SimpleBaselineKind),
    SlidingWindow(usize),
}

impl fmt::Display for BaselineMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaselineMethod::Simple(k) => write!(f, "{k}"),
            BaselineMethod::SlidingWindow(w) => write!(f, "sliding_window_{w}"),
        }
    }
}

impl FromStr for BaselineMethod {
    type Err = Error;

    /// Accepts a simple kind name, `sliding_window` (window 5) or `sliding_window_<W>`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "sliding_window" {
            return Ok(BaselineMethod::SlidingWindow(SlidingWindowConfig::default().window_size));
        }
        if let Some(w) = s.strip_prefix("sliding_window_") {
            let w: usize = w
                .parse()
                .map_err(|_| Error::Config(format!("bad window size in '{s}'")))?;
            if w == 0 {
                return Err(Error::Config("window size must be at least 1".into()));
            }
            return Ok(BaselineMethod::SlidingWindow(w));
        }
        s.parse().map(BaselineMethod::Simple)
    }
}

impl BaselineMethod {
    pub fn choose(&self, example: &Example, table: &EmbeddingTable) -> Result<usize> {
        match *self {
            BaselineMethod::Simple(k) => Ok(simple_baseline(example, k, table)),
            BaselineMethod::SlidingWindow(w) => sliding_window(example, table, w),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReportRecord {
    pub id: String,
    pub method: String,
    pub chosen: usize,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub accuracy: f64,
    pub n: usize,
}

/// Per-example records followed by one summary per method, in input order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BaselineReport {
    pub records: Vec<ReportRecord>,
    pub summaries: Vec<MethodSummary>,
}

impl BaselineReport {
    pub fn add(&mut self, method: &str, examples: &[Example], chosen: &[usize]) {
        let mut correct = 0;
        for (e, &c) in examples.iter().zip(chosen) {
            correct += usize::from(c == e.answer);
            self.records.push(ReportRecord {
                id: e.id.clone(),
                method: method.to_string(),
                chosen: c,
                correct: c == e.answer,
            });
        }
        self.summaries.push(MethodSummary {
            method: method.to_string(),
            accuracy: if examples.is_empty() { 0.0 } else { correct as f64 / examples.len() as f64 },
            n: examples.len(),
        });
    }

    /// JSON lines: every record, then `{"method", "accuracy", "n"}` per method.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        for s in &self.summaries {
            out.push_str(&serde_json::to_string(s).expect("summary serializes"));
            out.push('\n');
        }
        out
    }
}

pub fn run_baseline(method: BaselineMethod, examples: &[Example], table: &EmbeddingTable) -> Result<Vec<usize>> {
    examples.iter().map(|e| method.choose(e, table)).collect()
}
