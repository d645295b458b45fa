//! Seeded multiple-choice tasks with known solutions.
//!
//! Content words come in role groups: markers (`mK`), bridges (`bK`, two-fact
//! only), answers (`aK`) and fillers (`fK`). The fixed cue word `what` opens
//! every question and is not counted in `vocab_size`.
//!
//! * `keyword_match`: each utterance pairs a marker with an answer word; the
//!   question names one marker and the correct choice is its partner.
//! * `two_fact`: chains `marker → bridge → answer` are split over two
//!   utterances, `[marker bridge]` and `[bridge answer]`, so the utterance that
//!   mentions the question's marker never contains the answer. Every answer
//!   sits in its own `[answer bridge]` utterance and every bridge occurs twice,
//!   so no single utterance separates the correct choice from the others.
//!
//! In both kinds every choice occurs in the story, and the correct choice's
//! position is uniform over the four slots.

use std::fmt;
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, EmbeddingTable, Example, Split, Story, Utterance, NUM_CHOICES};
use crate::error::{Error, Result};
use crate::train::mix_seed;

pub const QUESTION_CUE: &str = "what";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    KeywordMatch,
    TwoFact,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::KeywordMatch => "keyword_match",
            TaskKind::TwoFact => "two_fact",
        })
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "keyword_match" => Ok(TaskKind::KeywordMatch),
            "two_fact" => Ok(TaskKind::TwoFact),
            other => Err(Error::Config(format!("unknown task kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub vocab_size: usize,
    pub story_utterances: usize,
    pub words_per_utterance: usize,
    pub n_train: usize,
    pub n_dev: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl TaskSpec {
    pub fn keyword_match(seed: u64) -> Self {
        TaskSpec {
            kind: TaskKind::KeywordMatch,
            vocab_size: 12,
            story_utterances: 4,
            words_per_utterance: 3,
            n_train: 500,
            n_dev: 100,
            n_test: 100,
            seed,
        }
    }

    pub fn two_fact(seed: u64) -> Self {
        TaskSpec {
            kind: TaskKind::TwoFact,
            vocab_size: 12,
            story_utterances: 8,
            words_per_utterance: 2,
            n_train: 500,
            n_dev: 100,
            n_test: 100,
            seed,
        }
    }
}

/// Word groups implied by a spec.
#[derive(Debug, Clone, PartialEq)]
struct Lexicon {
    markers: Vec<String>,
    bridges: Vec<String>,
    answers: Vec<String>,
    fillers: Vec<String>,
}

fn words(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

impl Lexicon {
    fn for_spec(spec: &TaskSpec) -> Result<Self> {
        if spec.vocab_size < 8 {
            return Err(Error::Config(format!("vocab_size must be at least 8, got {}", spec.vocab_size)));
        }
        if spec.words_per_utterance < 2 {
            return Err(Error::Config("words_per_utterance must be at least 2".into()));
        }
        let v = spec.vocab_size;
        let (groups, fill_share) = match spec.kind {
            TaskKind::KeywordMatch => (2, 4),
            TaskKind::TwoFact => (3, 5),
        };
        let n_fill = if spec.words_per_utterance > 2 { (v / fill_share).max(1) } else { 0 };
        let per_group = (v - n_fill) / groups;
        let (n_markers, n_bridges, n_answers) = match spec.kind {
            TaskKind::KeywordMatch => (per_group, 0, v - n_fill - per_group),
            TaskKind::TwoFact => (per_group, per_group, v - n_fill - 2 * per_group),
        };
        let lex = Lexicon {
            markers: words("m", n_markers),
            bridges: words("b", n_bridges),
            answers: words("a", n_answers),
            fillers: words("f", n_fill),
        };

        let (facts, min_facts) = match spec.kind {
            TaskKind::KeywordMatch => (spec.story_utterances, NUM_CHOICES),
            TaskKind::TwoFact => {
                if !spec.story_utterances.is_multiple_of(2) {
                    return Err(Error::Config("two_fact stories need an even number of utterances".into()));
                }
                (spec.story_utterances / 2, NUM_CHOICES)
            }
        };
        if facts < min_facts {
            return Err(Error::Config(format!(
                "{} stories need at least {min_facts} facts, got {facts}",
                spec.kind
            )));
        }
        let short = lex.markers.len() < facts
            || lex.answers.len() < facts.max(NUM_CHOICES)
            || (spec.kind == TaskKind::TwoFact && lex.bridges.len() < facts);
        if short {
            return Err(Error::Config(format!(
                "vocab_size {v} is too small for {facts} distinct facts per story"
            )));
        }
        Ok(lex)
    }

    fn all(&self) -> impl Iterator<Item = &String> {
        self.markers
            .iter()
            .chain(&self.bridges)
            .chain(&self.answers)
            .chain(&self.fillers)
    }
}

/// Every word a spec can emit, cue word first.
pub fn task_vocabulary(spec: &TaskSpec) -> Result<Vec<String>> {
    let lex = Lexicon::for_spec(spec)?;
    Ok(std::iter::once(QUESTION_CUE.to_string()).chain(lex.all().cloned()).collect())
}

fn pick<'a>(pool: &'a [String], n: usize, rng: &mut impl Rng) -> Vec<&'a String> {
    pool.choose_multiple(rng, n).collect()
}

/// Places `core` contiguously at a random offset, padding with fillers.
fn utterance(core: &[&String], len: usize, fillers: &[String], rng: &mut impl Rng) -> Utterance {
    let pad = len - core.len();
    let offset = rng.random_range(0..=pad);
    let mut tokens = Vec::with_capacity(len);
    for _ in 0..offset {
        tokens.push(fillers.choose(rng).expect("fillers exist when padding").clone());
    }
    tokens.extend(core.iter().map(|w| (*w).clone()));
    for _ in offset + core.len()..len {
        tokens.push(fillers.choose(rng).expect("fillers exist when padding").clone());
    }
    Utterance::new(tokens)
}

fn generate_example(spec: &TaskSpec, lex: &Lexicon, id: String, rng: &mut impl Rng) -> Example {
    let wpu = spec.words_per_utterance;
    let (mut utterances, question_marker, answers) = match spec.kind {
        TaskKind::KeywordMatch => {
            let n = spec.story_utterances;
            let markers = pick(&lex.markers, n, rng);
            let answers = pick(&lex.answers, n, rng);
            let utts: Vec<Utterance> = (0..n)
                .map(|i| utterance(&[markers[i], answers[i]], wpu, &lex.fillers, rng))
                .collect();
            (utts, markers[0].clone(), answers)
        }
        TaskKind::TwoFact => {
            let n = spec.story_utterances / 2;
            let markers = pick(&lex.markers, n, rng);
            let bridges = pick(&lex.bridges, n, rng);
            let answers = pick(&lex.answers, n, rng);
            let mut utts = Vec::with_capacity(2 * n);
            for i in 0..n {
                utts.push(utterance(&[markers[i], bridges[i]], wpu, &lex.fillers, rng));
                utts.push(utterance(&[answers[i], bridges[i]], wpu, &lex.fillers, rng));
            }
            (utts, markers[0].clone(), answers)
        }
    };
    utterances.shuffle(rng);

    let answer = rng.random_range(0..NUM_CHOICES);
    let mut distractors: Vec<&String> = answers[1..NUM_CHOICES].to_vec();
    distractors.shuffle(rng);
    let mut choices: [Vec<String>; NUM_CHOICES] = Default::default();
    let mut d = distractors.into_iter();
    for (slot, choice) in choices.iter_mut().enumerate() {
        let word = if slot == answer { answers[0] } else { d.next().expect("three distractors") };
        *choice = vec![word.clone()];
    }
    Example {
        id,
        story: Story::new(utterances),
        question: vec![QUESTION_CUE.to_string(), question_marker],
        choices,
        answer,
    }
}

pub fn generate(spec: &TaskSpec) -> Result<Dataset> {
    let lex = Lexicon::for_spec(spec)?;
    let mut ds = Dataset::default();
    for (split, n, tag) in [
        (Split::Train, spec.n_train, 0u64),
        (Split::Dev, spec.n_dev, 1),
        (Split::Test, spec.n_test, 2),
    ] {
        let name = match split {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        };
        let examples = ds.split_mut(split);
        for i in 0..n {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[spec.seed, tag, i as u64]));
            let id = format!("{}-{}-{name}-{i:05}", spec.kind, spec.seed);
            examples.push(generate_example(spec, &lex, id, &mut rng));
        }
    }
    Ok(ds)
}

/// Random unit vectors for every task word.
pub fn synthetic_embeddings(spec: &TaskSpec, dimension: usize) -> Result<EmbeddingTable> {
    if dimension == 0 {
        return Err(Error::Config("embedding dimension must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[spec.seed, 0xE3B]));
    let mut table = EmbeddingTable::new(dimension);
    for w in task_vocabulary(spec)? {
        let mut v: Vec<f64> = (0..dimension).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut v {
            *x /= norm;
        }
        table.insert(w, v)?;
    }
    Ok(table)
}
