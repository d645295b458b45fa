//! JSON model files. Floats are written in shortest round-trip form, so a
//! save/load cycle reproduces every parameter bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attention::{AttentionLevel, HopConfig};
use crate::encoder::BiGruEncoder;
use crate::error::{Error, Result};
use crate::model::Amrnn;
use crate::tensor::Tensor;
use crate::vocab::{Vocab, UNK};

const FORMAT: &str = "amrnn-checkpoint";
const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct NamedTensor {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    hidden_size: usize,
    input_size: usize,
    n_hops: usize,
    level: AttentionLevel,
    vocab: Vec<String>,
    params: Vec<NamedTensor>,
}

pub fn checkpoint_to_string(model: &Amrnn) -> String {
    let enc = &model.encoder;
    let ck = Checkpoint {
        format: FORMAT.into(),
        version: VERSION,
        hidden_size: enc.hidden_size(),
        input_size: enc.input_size(),
        n_hops: model.hops.n_hops,
        level: model.hops.level,
        vocab: enc.vocab.words().to_vec(),
        params: enc
            .tensors()
            .into_iter()
            .map(|(name, t)| NamedTensor {
                name,
                shape: t.shape().to_vec(),
                data: t.data().to_vec(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&ck).expect("checkpoint serializes");
    s.push('\n');
    s
}

pub fn checkpoint_from_str(text: &str, origin: &Path) -> Result<Amrnn> {
    let bad = |msg: String| Error::Format {
        path: origin.display().to_string(),
        msg,
    };
    let ck: Checkpoint = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    if ck.format != FORMAT || ck.version != VERSION {
        return Err(bad(format!("unsupported checkpoint format {} v{}", ck.format, ck.version)));
    }
    if ck.vocab.first().map(String::as_str) != Some(UNK) {
        return Err(bad(format!("vocabulary must start with {UNK}")));
    }
    let vocab = Vocab::new(ck.vocab.iter().cloned());
    if vocab.len() != ck.vocab.len() {
        return Err(bad("vocabulary contains duplicate words".into()));
    }
    let mut encoder = BiGruEncoder::zeros(vocab, ck.input_size, ck.hidden_size);
    let names: Vec<String> = encoder.tensors().into_iter().map(|(n, _)| n).collect();
    if ck.params.len() != names.len() {
        return Err(bad(format!("expected {} parameter tensors, found {}", names.len(), ck.params.len())));
    }
    for ((slot, name), p) in encoder.tensors_mut().into_iter().zip(&names).zip(ck.params) {
        if &p.name != name {
            return Err(bad(format!("expected tensor '{name}', found '{}'", p.name)));
        }
        if p.shape != slot.shape() {
            return Err(bad(format!("tensor '{name}' has shape {:?}, expected {:?}", p.shape, slot.shape())));
        }
        *slot = Tensor::new(p.shape, p.data).map_err(|e| bad(format!("tensor '{name}': {e}")))?;
    }
    encoder.validate()?;
    if ck.n_hops == 0 {
        return Err(bad("n_hops must be at least 1".into()));
    }
    Ok(Amrnn {
        encoder,
        hops: HopConfig {
            n_hops: ck.n_hops,
            level: ck.level,
        },
    })
}

pub fn save_checkpoint(model: &Amrnn, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, checkpoint_to_string(model)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Amrnn> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_str(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> Amrnn {
        Amrnn::new(
            Vocab::new(["the", "cat", "sat"]),
            3,
            2,
            HopConfig {
                n_hops: 2,
                level: AttentionLevel::Sentence,
            },
            17,
        )
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = model();
        let text = checkpoint_to_string(&m);
        let back = checkpoint_from_str(&text, Path::new("m.json")).unwrap();
        assert_eq!(back, m);
        for ((_, a), (_, b)) in m.encoder.tensors().into_iter().zip(back.encoder.tensors()) {
            let bits = |t: &Tensor| t.data().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(a), bits(b));
        }
        assert_eq!(checkpoint_to_string(&back), text);
    }

    #[test]
    fn corrupted_files_are_rejected() {
        let text = checkpoint_to_string(&model());
        let p = Path::new("m.json");
        assert!(matches!(checkpoint_from_str("{", p), Err(Error::Format { .. })));
        let renamed = text.replacen("forward.w_z", "forward.w_q", 1);
        assert!(checkpoint_from_str(&renamed, p).is_err());
        let no_unk = text.replacen("\"<unk>\"", "\"unk\"", 1);
        assert!(checkpoint_from_str(&no_unk, p).is_err());
    }
}
