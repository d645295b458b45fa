mod common;

use amrnn::attention::{answer_select, run_hops, AttentionLevel, HopConfig};
use amrnn::baselines::{memnet_forward, simple_baseline, sliding_window, MemNet, MemNetConfig, SimpleBaselineKind};
use amrnn::checkpoint::{checkpoint_from_str, checkpoint_to_string};
use amrnn::data::{bag_vector, corrupt_transcript, parse_dataset, prune_story, write_dataset, Dataset, EmbeddingTable, Example, Story, Utterance};
use amrnn::encoder::{gru_step, GruParams, GruVars, StoryEncoding};
use amrnn::export::{parse_tsv, trace_to_tsv};
use amrnn::model::{Amrnn, LossKind};
use amrnn::tape::{normalize_attention, Tape};
use amrnn::tensor::cosine;
use amrnn::train::evaluate;
use amrnn::vocab::Vocab;
use amrnn::Tensor;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const WORDS: [&str; 10] = ["ann", "bob", "cat", "dog", "egg", "fig", "gum", "hat", "ink", "jam"];

fn word() -> impl Strategy<Value = String> {
    prop::sample::select(&WORDS[..]).prop_map(str::to_string)
}

fn words(max: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(word(), 1..=max)
}

fn story(max_utts: usize) -> impl Strategy<Value = Story> {
    prop::collection::vec(words(4), 1..=max_utts).prop_map(|u| Story::new(u.into_iter().map(Utterance::new).collect()))
}

fn example(max_utts: usize) -> impl Strategy<Value = Example> {
    (story(max_utts), words(3), prop::array::uniform4(words(3)), 0usize..4, "[a-z0-9]{1,8}").prop_map(|(story, question, choices, answer, id)| Example {
        id,
        story,
        question,
        choices,
        answer,
    })
}

fn table(dim: usize) -> impl Strategy<Value = EmbeddingTable> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, dim), WORDS.len()).prop_map(move |vs| {
        let mut t = EmbeddingTable::new(dim);
        // The last word stays out of the table so unknown words are exercised.
        for (w, v) in WORDS.iter().zip(vs).take(WORDS.len() - 1) {
            t.insert(*w, v).unwrap();
        }
        t
    })
}

fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, n)
}

fn scores_and_mask() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (1usize..20)
        .prop_flat_map(|n| (prop::collection::vec(-10.0f64..10.0, n), prop::collection::vec(any::<bool>(), n), 0..n))
        .prop_map(|(s, mut m, k)| {
            m[k] = true;
            (s, m)
        })
}

/// Random story vectors on a tape, utterance ends marked by `eos`.
fn encoding(tape: &mut Tape, vectors: &[Vec<f64>], eos: Vec<bool>) -> StoryEncoding {
    StoryEncoding {
        word_vectors: vectors.iter().map(|v| tape.leaf(Tensor::vector(v.clone()))).collect(),
        eos_mask: eos,
    }
}

fn hop_inputs() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<bool>, Vec<f64>)> {
    (1usize..10, 1usize..5)
        .prop_flat_map(|(n, d)| (prop::collection::vec(vector(d), n), prop::collection::vec(any::<bool>(), n), vector(d)))
        .prop_map(|(vs, mut eos, q)| {
            let last = eos.len() - 1;
            eos[last] = true;
            (vs, eos, q)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn attention_weights_form_a_distribution((scores, mask) in scores_and_mask()) {
        let w = normalize_attention(&scores, &mask).unwrap();
        let total: f64 = w.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        for (x, m) in w.iter().zip(&mask) {
            prop_assert!(*x >= 0.0);
            if !m {
                prop_assert_eq!(*x, 0.0);
            }
        }
    }

    #[test]
    fn attention_ignores_constant_shift((scores, mask) in scores_and_mask(), c in -5.0f64..5.0) {
        let a = normalize_attention(&scores, &mask).unwrap();
        let shifted: Vec<f64> = scores.iter().map(|s| s + c).collect();
        let b = normalize_attention(&shifted, &mask).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn cosine_is_bounded_symmetric_and_scale_free(a in vector(5), b in vector(5), k in 0.01f64..100.0) {
        let c = cosine(&a, &b);
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&c));
        prop_assert_eq!(c, cosine(&b, &a));
        let ka: Vec<f64> = a.iter().map(|x| k * x).collect();
        prop_assert!((cosine(&ka, &b) - c).abs() < 1e-9);
    }

    #[test]
    fn concat_gradient_splits_back_to_input_shapes(a in 1usize..5, b in 1usize..5) {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::zeros(&[a]));
        let y = t.leaf(Tensor::zeros(&[b]));
        let z = t.concat(x, y).unwrap();
        let s = t.sum(z);
        let g = t.backward(s).unwrap();
        prop_assert_eq!(g.get(x).unwrap().shape(), &[a]);
        prop_assert_eq!(g.get(y).unwrap().shape(), &[b]);
    }

    #[test]
    fn dataset_text_round_trips(train in prop::collection::vec(example(4), 0..4), dev in prop::collection::vec(example(3), 0..3)) {
        let mut ds = Dataset { train, dev, test: vec![] };
        for (i, e) in ds.train.iter_mut().chain(ds.dev.iter_mut()).enumerate() {
            e.id = format!("{}-{i}", e.id);
        }
        let text = write_dataset(&ds);
        let back = parse_dataset(&text, "mem").unwrap();
        prop_assert_eq!(&back, &ds);
        prop_assert_eq!(write_dataset(&back), text);
    }

    #[test]
    fn pruning_keeps_a_subsequence(s in story(8), q in words(3), t in table(3), f in 0.01f64..=1.0) {
        let pruned = prune_story(&s, &q, f, &t).unwrap();
        let mut it = s.utterances.iter();
        for u in &pruned.utterances {
            prop_assert!(it.any(|x| x == u));
        }
        prop_assert_eq!(pruned.utterances.len(), ((f * s.utterances.len() as f64).ceil() as usize).max(1));
    }

    #[test]
    fn bag_vector_ignores_word_order(ws in words(6).prop_shuffle(), t in table(4)) {
        let mut sorted = ws.clone();
        sorted.sort();
        let a = bag_vector(&ws, &t);
        let b = bag_vector(&sorted, &t);
        for (x, y) in a.data().iter().zip(b.data()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn corruption_is_reproducible(s in story(6), rate in 0.0f64..=1.0, seed in any::<u64>()) {
        let a = corrupt_transcript(&s, rate, seed, &WORDS).unwrap();
        let b = corrupt_transcript(&s, rate, seed, &WORDS).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn gru_state_stays_in_the_open_unit_box(seed in any::<u64>(), h in prop::collection::vec(-0.999f64..0.999, 3), x in vector(2)) {
        let p = GruParams::init(3, 2, &mut ChaCha8Rng::seed_from_u64(seed));
        let mut t = Tape::new();
        let vars = GruVars::bind(&mut t, &p);
        let xv = t.leaf(Tensor::vector(x));
        let hv = t.leaf(Tensor::vector(h));
        let out = gru_step(&mut t, &vars, xv, hv).unwrap();
        prop_assert!(t.value(out).data().iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn hop_weights_normalize_and_respect_level((vs, eos, q) in hop_inputs(), level in prop::sample::select(vec![AttentionLevel::Word, AttentionLevel::Sentence]), n in 1usize..4) {
        let mut t = Tape::new();
        let enc = encoding(&mut t, &vs, eos.clone());
        let q = t.leaf(Tensor::vector(q));
        let (_, trace) = run_hops(&mut t, q, &enc, &HopConfig { n_hops: n, level }).unwrap();
        prop_assert_eq!(trace.hops.len(), n);
        for hop in &trace.hops {
            prop_assert!((hop.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            if level == AttentionLevel::Sentence {
                for (w, e) in hop.weights.iter().zip(&eos) {
                    if !e {
                        prop_assert_eq!(*w, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn one_word_utterances_make_levels_agree((vs, _, q) in hop_inputs()) {
        let eos = vec![true; vs.len()];
        let run = |level| {
            let mut t = Tape::new();
            let enc = encoding(&mut t, &vs, eos.clone());
            let qv = t.leaf(Tensor::vector(q.clone()));
            let (out, _) = run_hops(&mut t, qv, &enc, &HopConfig { n_hops: 1, level }).unwrap();
            t.value(out).data().to_vec()
        };
        for (a, b) in run(AttentionLevel::Word).iter().zip(run(AttentionLevel::Sentence)) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn extra_hop_composes_exactly((vs, eos, q) in hop_inputs(), n in 1usize..3, level in prop::sample::select(vec![AttentionLevel::Word, AttentionLevel::Sentence])) {
        let mut t = Tape::new();
        let enc = encoding(&mut t, &vs, eos.clone());
        let qv = t.leaf(Tensor::vector(q.clone()));
        let (vn, _) = run_hops(&mut t, qv, &enc, &HopConfig { n_hops: n, level }).unwrap();
        let (step, _) = run_hops(&mut t, vn, &enc, &HopConfig { n_hops: 1, level }).unwrap();
        let (direct, _) = run_hops(&mut t, qv, &enc, &HopConfig { n_hops: n + 1, level }).unwrap();
        prop_assert_eq!(t.value(step).data(), t.value(direct).data());
    }

    #[test]
    fn choice_rescaling_keeps_the_answer(q in vector(3), cs in prop::collection::vec(vector(3), 4), which in 0usize..4, k in prop::sample::select(vec![0.1, 10.0])) {
        let mut t = Tape::new();
        let qv = t.leaf(Tensor::vector(q));
        let base: Vec<_> = cs.iter().map(|c| t.leaf(Tensor::vector(c.clone()))).collect();
        let (_, chosen) = answer_select(&mut t, qv, &base).unwrap();
        let mut scaled = base.clone();
        scaled[which] = t.scale(base[which], k);
        let (_, again) = answer_select(&mut t, qv, &scaled).unwrap();
        prop_assert_eq!(chosen, again);
    }

    #[test]
    fn loss_is_non_negative_and_zero_only_at_target(s in prop::collection::vec(-1.0f64..1.0, 4), answer in 0usize..4) {
        let target = amrnn::model::target_vector(answer);
        let mut t = Tape::new();
        let v = t.leaf(Tensor::vector(s.clone()));
        let l = t.squared_error(v, &target).unwrap();
        prop_assert!(t.scalar(l) >= 0.0);
        prop_assert_eq!(t.scalar(l) == 0.0, s.as_slice() == target.as_slice());
        let exact = t.leaf(Tensor::vector(target.to_vec()));
        let z = t.squared_error(exact, &target).unwrap();
        prop_assert_eq!(t.scalar(z), 0.0);
    }

    #[test]
    fn sliding_window_matches_exhaustive_search(e in example(8), t in table(3), w in 1usize..10) {
        prop_assert_eq!(sliding_window(&e, &t, w).unwrap(), common::sliding_window_oracle(&e, &t, w));
    }

    #[test]
    fn simple_baselines_match_brute_force(e in example(2), t in table(3)) {
        for kind in SimpleBaselineKind::ALL {
            prop_assert_eq!(simple_baseline(&e, kind, &t), common::simple_oracle(&e, kind.name(), &t), "{}", kind);
        }
    }

    #[test]
    fn memnet_hop_weights_normalize(e in example(6), seed in any::<u64>(), hops in 1usize..4, shared in any::<bool>()) {
        let ds = Dataset { train: vec![e.clone()], ..Dataset::default() };
        let cfg = MemNetConfig { embedding_size: 6, n_hops: hops, seed, shared_embeddings: shared, ..MemNetConfig::default() };
        let net = MemNet::new(Vocab::from_training_split(&ds), &cfg).unwrap();
        let out = memnet_forward(&net, &e).unwrap();
        prop_assert_eq!(out.hop_weights.len(), hops);
        for p in &out.hop_weights {
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        prop_assert_eq!(memnet_forward(&net, &e).unwrap(), out);
    }

    #[test]
    fn heatmap_text_reproduces_trace(e in example(4), seed in any::<u64>(), n in 1usize..4) {
        let model = Amrnn::new(Vocab::new(WORDS), 3, 2, HopConfig { n_hops: n, level: AttentionLevel::Word }, seed);
        let trace = model.predict(&e).unwrap().trace;
        let back = parse_tsv(&trace_to_tsv(&trace)).unwrap();
        for (row, hop) in back.iter().zip(&trace.hops) {
            for (a, b) in row.iter().zip(&hop.weights) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn checkpoints_round_trip_bit_exactly(seed in any::<u64>(), h in 1usize..4, d in 1usize..4, n in 1usize..4) {
        let level = if seed % 2 == 0 { AttentionLevel::Word } else { AttentionLevel::Sentence };
        let m = Amrnn::new(Vocab::new(WORDS), d, h, HopConfig { n_hops: n, level }, seed);
        let back = checkpoint_from_str(&checkpoint_to_string(&m), std::path::Path::new("p")).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn evaluation_ignores_example_order(es in prop::collection::vec(example(3), 1..8), seed in any::<u64>()) {
        let model = Amrnn::new(Vocab::new(WORDS), 3, 2, HopConfig::default(), seed);
        let mut rev = es.clone();
        rev.reverse();
        prop_assert_eq!(evaluate(&model, &es).unwrap(), evaluate(&model, &rev).unwrap());
    }
}

#[test]
fn story_flattening_keeps_word_order() {
    let s = Story::from_words(&[&["a", "b"], &["c"], &["d", "e", "f"]]);
    assert_eq!(s.flat_words(), ["a", "b", "c", "d", "e", "f"]);
    assert_eq!(s.eos_mask(), [false, true, true, false, false, true]);
}

#[test]
fn full_model_loss_gradient_on_six_words() {
    for (hops, loss) in [(1, LossKind::SquaredError), (2, LossKind::CrossEntropy)] {
        let m = common::small_model(3, common::word_level(hops), 11);
        let err = common::full_model_gradient_error(&m, &common::six_word_example(), loss);
        assert!(err < 1e-4, "{hops} hops, {loss:?}: {err}");
    }
}

#[test]
fn every_op_passes_gradient_check_at_twenty_points() {
    for case in common::op_cases() {
        let err = common::check_op(&case, 20, 99);
        assert!(err < 1e-4, "{}: {err}", case.name);
    }
}
