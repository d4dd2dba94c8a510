use approx::assert_abs_diff_eq;
use ndarray::{arr2, Array1, Axis};

use super::gradcheck::forward_loss;
use super::*;
use crate::hierseq::{build_mask, build_sequence, HierSequence, MaskMatrix, WordScope};
use crate::segmenter::Fact;

fn fact(sentence_index: usize, fact_index: usize, words: &[&str]) -> Fact {
    Fact {
        sentence_index,
        fact_index,
        start: 1,
        end: words.len(),
        tokens: words.iter().map(|w| w.to_string()).collect(),
    }
}

fn tiny_cfg() -> EncoderConfig {
    EncoderConfig {
        d_model: 8,
        n_layers: 1,
        n_heads: 2,
        d_ff: 12,
        vocab_size: 0, // set after vocab build
        max_len: 64,
        ..EncoderConfig::default()
    }
}

/// Two sentences, three facts, all words distinct.
fn small_doc() -> (HierSequence, Vocab) {
    let doc = vec![
        vec![fact(0, 0, &["ba", "de"]), fact(0, 1, &["fi", "go"])],
        vec![fact(1, 0, &["ku", "la"])],
    ];
    let seq = build_sequence(&doc, 64).unwrap();
    let vocab = Vocab::build(["ba", "de", "fi", "go", "ku", "la"]);
    (seq, vocab)
}

#[test]
fn zero_params_embed_to_zero() {
    let (seq, vocab) = small_doc();
    let mut cfg = tiny_cfg();
    cfg.vocab_size = vocab.len();
    let params = EncoderParams::zeros(&cfg);
    let x = embed(&seq, &vocab, &params, &cfg).unwrap();
    assert!(x.iter().all(|&v| v == 0.0));
}

#[test]
fn segment_term_drops_out_when_disabled() {
    let (seq, vocab) = small_doc();
    let mut cfg = tiny_cfg();
    cfg.vocab_size = vocab.len();
    cfg.use_segment = false;
    let mut params = EncoderParams::init(&cfg, 5);
    let a = embed(&seq, &vocab, &params, &cfg).unwrap();
    params.seg_emb.fill(123.456);
    let b = embed(&seq, &vocab, &params, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn embed_matches_hand_sums() {
    // minimal 5-token sequence, d_model 2, hand-set tables
    let doc = vec![vec![fact(0, 0, &["w"])]];
    let seq = build_sequence(&doc, 16).unwrap();
    let vocab = Vocab::build(["w"]);
    let cfg = EncoderConfig {
        d_model: 2,
        n_layers: 0,
        n_heads: 1,
        d_ff: 2,
        vocab_size: vocab.len(),
        max_len: 16,
        ..EncoderConfig::default()
    };
    let mut params = EncoderParams::zeros(&cfg);
    for id in 0..vocab.len() {
        params.token_emb[[id, 0]] = id as f64;
        params.token_emb[[id, 1]] = 10.0 + id as f64;
    }
    params.seg_emb = arr2(&[[100.0, 200.0], [300.0, 400.0]]);
    for p in 0..16 {
        params.pos_emb[[p, 0]] = p as f64 * 0.1;
        params.pos_emb[[p, 1]] = p as f64 * 0.01;
    }
    let x = embed(&seq, &vocab, &params, &cfg).unwrap();
    // rows: [cls_d]=id0 segA, [cls_s]=id1 segB, [cls_f]=id2 segA, w=id5 segB, [seq]=id3 segB
    let expect = arr2(&[
        [0.0 + 100.0 + 0.0, 10.0 + 200.0 + 0.0],
        [1.0 + 300.0 + 0.1, 11.0 + 400.0 + 0.01],
        [2.0 + 100.0 + 0.2, 12.0 + 200.0 + 0.02],
        [5.0 + 300.0 + 0.3, 15.0 + 400.0 + 0.03],
        [3.0 + 300.0 + 0.4, 13.0 + 400.0 + 0.04],
    ]);
    assert_abs_diff_eq!(x, expect, epsilon = 1e-12);
}

#[test]
fn full_mask_recovers_standard_attention() {
    let q = arr2(&[[0.3, -0.2], [0.1, 0.4], [-0.5, 0.2]]);
    let k = arr2(&[[0.2, 0.1], [-0.3, 0.5], [0.4, -0.1]]);
    let v = arr2(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]);
    let mask = MaskMatrix::from_fn(3, |_, _| true);
    let got = masked_attention(&q, &k, &v, &mask, MaskMode::Additive).unwrap();
    // dense reference computed straight from the definition
    let scale = 2f64.sqrt();
    for i in 0..3 {
        let logits: Vec<f64> = (0..3).map(|j| q.row(i).dot(&k.row(j)) / scale).collect();
        let max = logits.iter().cloned().fold(f64::MIN, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let denom: f64 = exps.iter().sum();
        for c in 0..2 {
            let want: f64 = (0..3).map(|j| exps[j] / denom * v[[j, c]]).sum();
            assert_abs_diff_eq!(got[[i, c]], want, epsilon = 1e-12);
        }
    }
}

#[test]
fn self_only_row_passes_value_through() {
    let q = arr2(&[[0.3, -0.2], [0.1, 0.4]]);
    let k = arr2(&[[0.2, 0.1], [-0.3, 0.5]]);
    let v = arr2(&[[1.5, -2.5], [3.25, 4.75]]);
    let mask = MaskMatrix::from_fn(2, |i, j| i == j || (i == 0 && j == 1));
    let out = masked_attention(&q, &k, &v, &mask, MaskMode::Additive).unwrap();
    assert_eq!(out[[1, 0]], v[[1, 0]]);
    assert_eq!(out[[1, 1]], v[[1, 1]]);
}

#[test]
fn two_by_two_hand_softmax() {
    let q = arr2(&[[1.0, 0.0], [0.0, 1.0]]);
    let k = arr2(&[[0.5, 0.25], [-0.5, 1.0]]);
    let v = arr2(&[[2.0, -1.0], [0.5, 3.0]]);
    let mask = MaskMatrix::from_fn(2, |i, j| !(i == 1 && j == 0));
    let out = masked_attention(&q, &k, &v, &mask, MaskMode::Additive).unwrap();
    // row 0: logits = [0.5, -0.5] / sqrt(2)
    let s = 2f64.sqrt();
    let (l0, l1) = (0.5 / s, -0.5 / s);
    let w0 = l0.exp() / (l0.exp() + l1.exp());
    let w1 = 1.0 - w0;
    assert_abs_diff_eq!(out[[0, 0]], w0 * 2.0 + w1 * 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(out[[0, 1]], -w0 + w1 * 3.0, epsilon = 1e-12);
    // row 1: self only
    assert_eq!(out[[1, 0]], 0.5);
    assert_eq!(out[[1, 1]], 3.0);
}

#[test]
fn zero_layers_return_embeddings() {
    let (seq, vocab) = small_doc();
    let mut cfg = tiny_cfg();
    cfg.n_layers = 0;
    cfg.vocab_size = vocab.len();
    let params = EncoderParams::init(&cfg, 3);
    let mask = build_mask(&seq, cfg.word_scope);
    let out = encode(&seq, &mask, &vocab, &params, &cfg).unwrap();
    let x = embed(&seq, &vocab, &params, &cfg).unwrap();
    assert_eq!(out.hidden, x);
}

#[test]
fn encode_is_deterministic() {
    let (seq, vocab) = small_doc();
    let mut cfg = tiny_cfg();
    cfg.vocab_size = vocab.len();
    let params = EncoderParams::init(&cfg, 3);
    let mask = build_mask(&seq, cfg.word_scope);
    let a = encode(&seq, &mask, &vocab, &params, &cfg).unwrap();
    let b = encode(&seq, &mask, &vocab, &params, &cfg).unwrap();
    assert_eq!(a.hidden, b.hidden);
}

#[test]
fn attention_rows_are_stochastic_over_unmasked_entries() {
    let (seq, vocab) = small_doc();
    let mut cfg = tiny_cfg();
    cfg.vocab_size = vocab.len();
    let params = EncoderParams::init(&cfg, 3);
    for mode in [MaskMode::Additive, MaskMode::Multiplicative] {
        let mut c = cfg.clone();
        c.mask_mode = mode;
        let mask = build_mask(&seq, c.word_scope);
        let out = encode(&seq, &mask, &vocab, &params, &c).unwrap();
        for h in 0..c.n_heads {
            let w = out.attention_weights(0, h);
            for (i, sum) in w.sum_axis(Axis(1)).iter().enumerate() {
                assert_abs_diff_eq!(*sum, 1.0, epsilon = 1e-6);
                if mode == MaskMode::Additive {
                    for j in 0..seq.len() {
                        if !mask.get(i, j) {
                            assert_eq!(w[[i, j]], 0.0);
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn masked_token_cannot_influence_one_layer_representation() {
    let (seq, vocab) = small_doc();
    let mut cfg = tiny_cfg();
    cfg.vocab_size = vocab.len();
    let params = EncoderParams::init(&cfg, 11);
    let mask = build_mask(&seq, cfg.word_scope);
    let base = encode(&seq, &mask, &vocab, &params, &cfg).unwrap();

    // perturb the embedding of the word at position 3 ("ba", unique to
    // that position); fact marker 2 of the other sentence has no edge
    // from it, and neither does the document marker
    let j = 3usize;
    let word_id = vocab.word_id("ba");
    let mut perturbed = params.clone();
    perturbed
        .token_emb
        .row_mut(word_id)
        .mapv_inplace(|v| v + 0.37);
    let got = encode(&seq, &mask, &vocab, &perturbed, &cfg).unwrap();

    for i in 0..seq.len() {
        if !mask.get(i, j) {
            for c in 0..cfg.d_model {
                assert_eq!(
                    base.hidden[[i, c]],
                    got.hidden[[i, c]],
                    "token {i} changed despite no edge from {j}"
                );
            }
        }
    }
    // sanity: tokens with an edge did change
    assert_ne!(base.hidden.row(2), got.hidden.row(2));
}

#[test]
fn multiplicative_mode_leaks_across_masked_edges() {
    let (seq, vocab) = small_doc();
    let mut cfg = tiny_cfg();
    cfg.vocab_size = vocab.len();
    cfg.mask_mode = MaskMode::Multiplicative;
    let params = EncoderParams::init(&cfg, 11);
    let mask = build_mask(&seq, cfg.word_scope);
    let base = encode(&seq, &mask, &vocab, &params, &cfg).unwrap();
    let word_id = vocab.word_id("ba");
    let mut perturbed = params.clone();
    perturbed
        .token_emb
        .row_mut(word_id)
        .mapv_inplace(|v| v + 0.37);
    let got = encode(&seq, &mask, &vocab, &perturbed, &cfg).unwrap();
    // the document marker has no edge from position 3, yet changes
    let d = seq.doc_cls_pos();
    assert!(!mask.get(d, 3));
    assert_ne!(base.hidden.row(d), got.hidden.row(d));
}

#[test]
fn zero_classifier_scores_half() {
    let (seq, vocab) = small_doc();
    let mut cfg = tiny_cfg();
    cfg.vocab_size = vocab.len();
    let mut params = EncoderParams::init(&cfg, 3);
    params.w_c.fill(0.0);
    params.b_c = 0.0;
    let mask = build_mask(&seq, cfg.word_scope);
    let out = encode(&seq, &mask, &vocab, &params, &cfg).unwrap();
    let scores = classify_facts(&out.hidden, &seq, &params, &cfg).unwrap();
    assert_eq!(scores, vec![0.5, 0.5, 0.5]);
}

#[test]
fn classifier_matches_hand_arithmetic_in_fact_mode() {
    let doc = vec![vec![fact(0, 0, &["w"])]];
    let seq = build_sequence(&doc, 16).unwrap();
    let vocab = Vocab::build(["w"]);
    let cfg = EncoderConfig {
        d_model: 2,
        n_layers: 0,
        n_heads: 1,
        d_ff: 2,
        vocab_size: vocab.len(),
        max_len: 16,
        classifier_mode: ClassifierMode::F,
        use_segment: false,
        use_position: false,
        ..EncoderConfig::default()
    };
    let mut params = EncoderParams::zeros(&cfg);
    params.token_emb[[2, 0]] = 0.3; // [cls_f] embedding
    params.token_emb[[2, 1]] = -0.7;
    params.w_c = Array1::from(vec![2.0, 1.0]);
    params.b_c = 0.25;
    let mask = build_mask(&seq, cfg.word_scope);
    let out = encode(&seq, &mask, &vocab, &params, &cfg).unwrap();
    let scores = classify_facts(&out.hidden, &seq, &params, &cfg).unwrap();
    // logit = 2.0 * 0.3 + 1.0 * (-0.7) + 0.25 = 0.15
    let want = 1.0 / (1.0 + (-0.15f64).exp());
    assert_abs_diff_eq!(scores[0], want, epsilon = 1e-12);
}

#[test]
fn classifier_width_follows_mode() {
    for (mode, parts) in [
        (ClassifierMode::F, 1),
        (ClassifierMode::DF, 2),
        (ClassifierMode::SF, 2),
        (ClassifierMode::DSF, 3),
    ] {
        let cfg = EncoderConfig {
            classifier_mode: mode,
            vocab_size: 6,
            ..EncoderConfig::default()
        };
        let p = EncoderParams::init(&cfg, 1);
        assert_eq!(p.w_c.len(), parts * cfg.d_model);
    }
}

#[test]
fn bce_examples() {
    // perfect fit, post-clamp
    let loss = bce_loss(&[1.0, 0.0], &[true, false]).unwrap();
    assert!(loss <= 1e-6, "loss {loss}");
    // coin-flip scores
    let loss = bce_loss(&[0.5, 0.5, 0.5], &[true, false, true]).unwrap();
    assert_abs_diff_eq!(loss, 2f64.ln(), epsilon = 1e-12);
    // hand arithmetic
    let loss = bce_loss(&[0.9, 0.2], &[true, false]).unwrap();
    let want = -(0.9f64.ln() + 0.8f64.ln()) / 2.0;
    assert_abs_diff_eq!(loss, want, epsilon = 1e-12);
    assert_abs_diff_eq!(loss, 0.164252033486018, epsilon = 1e-9);
    // mismatch
    assert!(bce_loss(&[0.5], &[true, false]).is_err());
}

#[test]
fn schedule_examples_and_shape() {
    let tcfg = TrainingConfig::default();
    assert!(lr_schedule(0, &tcfg).is_err());
    let rel = |got: f64, want: f64| (got - want).abs() / want;
    assert!(rel(lr_schedule(10_000, &tcfg).unwrap(), 2e-5) < 1e-12);
    assert!(rel(lr_schedule(2_500, &tcfg).unwrap(), 5e-6) < 1e-12);
    assert!(rel(lr_schedule(40_000, &tcfg).unwrap(), 1e-5) < 1e-12);

    // linear climb before warmup
    let a = lr_schedule(100, &tcfg).unwrap();
    let b = lr_schedule(200, &tcfg).unwrap();
    assert!(rel(b, 2.0 * a) < 1e-12);
    // inverse-square-root decay after
    let c = lr_schedule(20_000, &tcfg).unwrap();
    let d = lr_schedule(80_000, &tcfg).unwrap();
    assert!(rel(c, 2.0 * d) < 1e-12);
    // peak at warmup
    let peak = lr_schedule(10_000, &tcfg).unwrap();
    for s in [1, 500, 9_999, 10_001, 50_000] {
        assert!(lr_schedule(s, &tcfg).unwrap() <= peak + 1e-18);
    }
}

#[test]
fn gradients_match_finite_differences_on_a_tiny_config() {
    let doc = vec![vec![fact(0, 0, &["ba", "de"]), fact(0, 1, &["fi"])]];
    let seq = build_sequence(&doc, 16).unwrap();
    let vocab = Vocab::build(["ba", "de", "fi"]);
    let cfg = EncoderConfig {
        d_model: 4,
        n_layers: 2,
        n_heads: 2,
        d_ff: 6,
        vocab_size: vocab.len(),
        max_len: 16,
        ..EncoderConfig::default()
    };
    let params = EncoderParams::init(&cfg, 21);
    let mask = build_mask(&seq, cfg.word_scope);
    let labels = vec![true, false];
    let err = grad_check(&seq, &mask, &labels, &vocab, &params, &cfg, 1e-4).unwrap();
    assert!(err < 1e-4, "max relative error {err}");
}

#[test]
fn multiplicative_mask_gradients_also_check_out() {
    let doc = vec![vec![fact(0, 0, &["ba", "de"])]];
    let seq = build_sequence(&doc, 16).unwrap();
    let vocab = Vocab::build(["ba", "de"]);
    let cfg = EncoderConfig {
        d_model: 4,
        n_layers: 1,
        n_heads: 2,
        d_ff: 6,
        vocab_size: vocab.len(),
        max_len: 16,
        mask_mode: MaskMode::Multiplicative,
        ..EncoderConfig::default()
    };
    let params = EncoderParams::init(&cfg, 22);
    let mask = build_mask(&seq, cfg.word_scope);
    let err = grad_check(&seq, &mask, &[true], &vocab, &params, &cfg, 1e-4).unwrap();
    assert!(err < 1e-4, "max relative error {err}");
}

#[test]
fn disabled_segment_table_gets_exactly_zero_gradient() {
    let (seq, vocab) = small_doc();
    let mut cfg = tiny_cfg();
    cfg.vocab_size = vocab.len();
    cfg.use_segment = false;
    let params = EncoderParams::init(&cfg, 9);
    let mask = build_mask(&seq, cfg.word_scope);
    let labels = vec![true, false, true];
    let (_, grads, _) = loss_and_grads(&seq, &mask, &labels, &vocab, &params, &cfg).unwrap();
    assert!(grads.seg_emb.iter().all(|&g| g == 0.0));
    assert!(grads.pos_emb.iter().any(|&g| g != 0.0));
}

#[test]
fn perfect_fit_is_a_stationary_point() {
    let (seq, vocab) = small_doc();
    let mut cfg = tiny_cfg();
    cfg.vocab_size = vocab.len();
    let mut params = EncoderParams::init(&cfg, 9);
    // saturate every score at ~1 so the clamp absorbs the gradient
    params.w_c.fill(0.0);
    params.b_c = 40.0;
    let mask = build_mask(&seq, cfg.word_scope);
    let labels = vec![true, true, true];
    let (loss, grads, scores) =
        loss_and_grads(&seq, &mask, &labels, &vocab, &params, &cfg).unwrap();
    assert!(scores.iter().all(|&s| s > 0.999_999));
    assert!(loss < 1e-6);
    assert!(grad_norm(&grads) < 1e-6);
}

#[test]
fn position_blind_model_permutes_scores_with_sentences() {
    // two sentences with identical shapes but different words
    let doc_ab = vec![
        vec![fact(0, 0, &["ba", "de", "fi"])],
        vec![fact(1, 0, &["go", "ku", "la"])],
    ];
    let doc_ba = vec![
        vec![fact(0, 0, &["go", "ku", "la"])],
        vec![fact(1, 0, &["ba", "de", "fi"])],
    ];
    let vocab = Vocab::build(["ba", "de", "fi", "go", "ku", "la"]);
    for scope in [WordScope::Global, WordScope::WithinFact] {
        let cfg = EncoderConfig {
            d_model: 8,
            n_layers: 2,
            n_heads: 2,
            d_ff: 12,
            vocab_size: vocab.len(),
            max_len: 32,
            use_position: false,
            word_scope: scope,
            ..EncoderConfig::default()
        };
        let params = EncoderParams::init(&cfg, 33);
        let seq_ab = build_sequence(&doc_ab, cfg.max_len).unwrap();
        let seq_ba = build_sequence(&doc_ba, cfg.max_len).unwrap();
        let scores_ab = score_facts(
            &seq_ab,
            &build_mask(&seq_ab, scope),
            &vocab,
            &params,
            &cfg,
        )
        .unwrap();
        let scores_ba = score_facts(
            &seq_ba,
            &build_mask(&seq_ba, scope),
            &vocab,
            &params,
            &cfg,
        )
        .unwrap();
        assert_abs_diff_eq!(scores_ab[0], scores_ba[1], epsilon = 1e-9);
        assert_abs_diff_eq!(scores_ab[1], scores_ba[0], epsilon = 1e-9);
    }
}

#[test]
fn zero_steps_leave_initialization_untouched() {
    let cfg = EncoderConfig {
        d_model: 8,
        n_layers: 1,
        n_heads: 2,
        d_ff: 12,
        vocab_size: 0,
        max_len: 64,
        ..EncoderConfig::default()
    };
    let (examples, vocab) = crate::fixture::marker_task(4, 7, &cfg).unwrap();
    let mut cfg = cfg;
    cfg.vocab_size = vocab.len();
    let tcfg = TrainingConfig {
        max_steps: 0,
        ..TrainingConfig::default()
    };
    let run = train(&examples, &vocab, &cfg, &tcfg, |_, _| Ok(())).unwrap();
    assert_eq!(run.params, EncoderParams::init(&cfg, tcfg.seed));
    assert!(run.curve.is_empty());
}

#[test]
fn same_seed_same_curve() {
    let mut cfg = EncoderConfig {
        d_model: 8,
        n_layers: 1,
        n_heads: 2,
        d_ff: 12,
        vocab_size: 0,
        max_len: 64,
        classifier_mode: ClassifierMode::F,
        ..EncoderConfig::default()
    };
    let (examples, vocab) = crate::fixture::marker_task(6, 13, &cfg).unwrap();
    cfg.vocab_size = vocab.len();
    let tcfg = TrainingConfig {
        base_lr: 0.05,
        warmup_steps: 20,
        batch_size: 3,
        max_steps: 25,
        seed: 404,
        ..TrainingConfig::default()
    };
    let a = train(&examples, &vocab, &cfg, &tcfg, |_, _| Ok(())).unwrap();
    let b = train(&examples, &vocab, &cfg, &tcfg, |_, _| Ok(())).unwrap();
    assert_eq!(a.curve, b.curve);
    assert_eq!(a.params, b.params);
    assert!(a.curve.iter().all(|p| p.loss.is_finite()));
}

#[test]
fn short_training_run_reduces_loss_and_fires_checkpoints() {
    let mut cfg = EncoderConfig {
        d_model: 16,
        n_layers: 1,
        n_heads: 2,
        d_ff: 24,
        vocab_size: 0,
        max_len: 64,
        classifier_mode: ClassifierMode::F,
        ..EncoderConfig::default()
    };
    let (examples, vocab) = crate::fixture::marker_task(10, 3, &cfg).unwrap();
    cfg.vocab_size = vocab.len();
    let tcfg = TrainingConfig {
        base_lr: 0.05,
        warmup_steps: 20,
        batch_size: 5,
        max_steps: 60,
        checkpoint_every: 25,
        seed: 1,
        ..TrainingConfig::default()
    };
    let mut checkpoints = Vec::new();
    let run = train(&examples, &vocab, &cfg, &tcfg, |step, _| {
        checkpoints.push(step);
        Ok(())
    })
    .unwrap();
    assert_eq!(checkpoints, vec![25, 50]);
    let first: f64 = run.curve[..5].iter().map(|p| p.loss).sum::<f64>() / 5.0;
    let last: f64 = run.curve[run.curve.len() - 5..]
        .iter()
        .map(|p| p.loss)
        .sum::<f64>()
        / 5.0;
    assert!(
        last < first,
        "loss did not fall: first {first:.4} last {last:.4}"
    );
}

#[test]
fn forward_loss_agrees_with_bce_of_scores() {
    let (seq, vocab) = small_doc();
    let mut cfg = tiny_cfg();
    cfg.vocab_size = vocab.len();
    let params = EncoderParams::init(&cfg, 2);
    let mask = build_mask(&seq, cfg.word_scope);
    let labels = vec![true, false, true];
    let via_helper = forward_loss(&seq, &mask, &labels, &vocab, &params, &cfg).unwrap();
    let scores = score_facts(&seq, &mask, &vocab, &params, &cfg).unwrap();
    let direct = bce_loss(&scores, &labels).unwrap();
    assert_abs_diff_eq!(via_helper, direct, epsilon = 1e-15);
}
