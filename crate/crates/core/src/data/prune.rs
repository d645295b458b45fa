use super::{bag_vector, Dataset, EmbeddingTable, Story};
use crate::error::{Error, Result};
use crate::tensor::cosine;

/// Keeps the `⌈keep_fraction·N⌉` utterances whose bag vector is most cosine-similar
/// to the question's, preserving their original order. At least one utterance survives.
pub fn prune_story<S: AsRef<str>>(
    story: &Story,
    question: &[S],
    keep_fraction: f64,
    table: &EmbeddingTable,
) -> Result<Story> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::Config(format!("keep_fraction must be in (0, 1], got {keep_fraction}")));
    }
    let n = story.utterances.len();
    let keep = ((keep_fraction * n as f64).ceil() as usize).clamp(1.min(n), n);
    if keep == n {
        return Ok(story.clone());
    }
    let q = bag_vector(question, table);
    let sims: Vec<f64> = story
        .utterances
        .iter()
        .map(|u| cosine(bag_vector(&u.tokens, table).data(), q.data()))
        .collect();
    let mut ranked: Vec<usize> = (0..n).collect();
    // Stable sort: equal similarities keep story order.
    ranked.sort_by(|&a, &b| sims[b].total_cmp(&sims[a]));
    let mut kept = ranked[..keep].to_vec();
    kept.sort_unstable();
    Ok(Story::new(kept.into_iter().map(|i| story.utterances[i].clone()).collect()))
}

/// Applies [`prune_story`] to every example of every split.
pub fn prune_dataset(ds: &Dataset, keep_fraction: f64, table: &EmbeddingTable) -> Result<Dataset> {
    let mut out = ds.clone();
    for split in [&mut out.train, &mut out.dev, &mut out.test] {
        for e in split.iter_mut() {
            e.story = prune_story(&e.story, &e.question, keep_fraction, table)?;
        }
    }
    Ok(out)
}
