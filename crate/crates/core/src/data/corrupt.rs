//! Seeded emulation of speech-recognition errors on transcripts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Story, Utterance};
use crate::error::{Error, Result};

/// Relative frequencies of the three edit kinds applied to a corrupted word.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorruptionMix {
    pub substitute: f64,
    pub delete: f64,
    pub duplicate: f64,
}

impl Default for CorruptionMix {
    fn default() -> Self {
        CorruptionMix {
            substitute: 0.5,
            delete: 0.25,
            duplicate: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CorruptionStats {
    pub substituted: usize,
    pub deleted: usize,
    pub duplicated: usize,
    /// Deletions turned into no-ops because they would have emptied an utterance.
    pub deletions_refused: usize,
}

impl CorruptionStats {
    /// Words hit by a corruption event, including refused deletions.
    pub fn altered(&self) -> usize {
        self.substituted + self.deleted + self.duplicated + self.deletions_refused
    }
}

enum Edit {
    Substitute,
    Delete,
    Duplicate,
}

pub fn corrupt_transcript<S: AsRef<str>>(story: &Story, word_error_rate: f64, rng_seed: u64, lexicon: &[S]) -> Result<Story> {
    corrupt_transcript_with(story, word_error_rate, rng_seed, lexicon, CorruptionMix::default()).map(|(s, _)| s)
}

/// Corrupts each word independently with probability `word_error_rate`.
///
/// Utterance boundaries are kept and an utterance's final surviving word is never deleted.
pub fn corrupt_transcript_with<S: AsRef<str>>(
    story: &Story,
    word_error_rate: f64,
    rng_seed: u64,
    lexicon: &[S],
    mix: CorruptionMix,
) -> Result<(Story, CorruptionStats)> {
    if !(0.0..=1.0).contains(&word_error_rate) {
        return Err(Error::Config(format!("word error rate must be in [0, 1], got {word_error_rate}")));
    }
    let total = mix.substitute + mix.delete + mix.duplicate;
    if [mix.substitute, mix.delete, mix.duplicate].iter().any(|p| !(*p >= 0.0)) || !(total > 0.0) {
        return Err(Error::Config("corruption mix must be non-negative with a positive total".into()));
    }
    if word_error_rate > 0.0 && lexicon.is_empty() {
        return Err(Error::Config("corruption needs a non-empty substitution lexicon".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut stats = CorruptionStats::default();
    let mut utterances = Vec::with_capacity(story.utterances.len());
    for u in &story.utterances {
        let n = u.tokens.len();
        let mut out: Vec<String> = Vec::with_capacity(n + 2);
        for (i, word) in u.tokens.iter().enumerate() {
            if word_error_rate == 0.0 || rng.random::<f64>() >= word_error_rate {
                out.push(word.clone());
                continue;
            }
            let pick = rng.random::<f64>() * total;
            let edit = if pick < mix.substitute {
                Edit::Substitute
            } else if pick < mix.substitute + mix.delete {
                Edit::Delete
            } else {
                Edit::Duplicate
            };
            match edit {
                Edit::Substitute => {
                    let k = rng.random_range(0..lexicon.len());
                    out.push(lexicon[k].as_ref().to_string());
                    stats.substituted += 1;
                }
                Edit::Delete if out.is_empty() && i + 1 == n => {
                    out.push(word.clone());
                    stats.deletions_refused += 1;
                }
                Edit::Delete => stats.deleted += 1,
                Edit::Duplicate => {
                    out.push(word.clone());
                    out.push(word.clone());
                    stats.duplicated += 1;
                }
            }
        }
        utterances.push(Utterance::new(out));
    }
    Ok((Story::new(utterances), stats))
}
