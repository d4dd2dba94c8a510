//! Forward pass: embeddings, graph-masked multi-head attention, the
//! encoder stack, the fact classifier, and the training loss.

use ndarray::{s, Array1, Array2, ArrayView2};

use super::params::EncoderParams;
use super::vocab::Vocab;
use super::{EncoderConfig, MaskMode};
use crate::error::{Error, Result};
use crate::hierseq::{HierSequence, MaskMatrix, SegmentId};

pub(crate) const LN_EPS: f64 = 1e-5;
pub(crate) const BCE_EPS: f64 = 1e-7;

/// Sum of token, segment, and position embeddings for each sequence
/// position. Segment and position terms drop out under the ablation
/// flags.
pub fn embed(
    seq: &HierSequence,
    vocab: &Vocab,
    params: &EncoderParams,
    cfg: &EncoderConfig,
) -> Result<Array2<f64>> {
    if seq.len() > cfg.max_len {
        return Err(Error::Capacity {
            needed: seq.len(),
            max_len: cfg.max_len,
        });
    }
    let ids = token_ids(seq, vocab, cfg)?;
    let mut x = Array2::zeros((seq.len(), cfg.d_model));
    for (i, &id) in ids.iter().enumerate() {
        let mut row = x.row_mut(i);
        row.assign(&params.token_emb.row(id));
        if cfg.use_segment {
            let s = match seq.segment_ids()[i] {
                SegmentId::A => 0,
                SegmentId::B => 1,
            };
            row += &params.seg_emb.row(s);
        }
        if cfg.use_position {
            row += &params.pos_emb.row(i);
        }
    }
    Ok(x)
}

pub(crate) fn token_ids(
    seq: &HierSequence,
    vocab: &Vocab,
    cfg: &EncoderConfig,
) -> Result<Vec<usize>> {
    let ids: Vec<usize> = seq.tokens().iter().map(|t| vocab.token_id(t)).collect();
    if let Some(&bad) = ids.iter().find(|&&id| id >= cfg.vocab_size) {
        return Err(Error::internal(format!(
            "token id {bad} outside vocabulary of size {}",
            cfg.vocab_size
        )));
    }
    Ok(ids)
}

pub(crate) fn gelu(x: f64) -> f64 {
    let c = (2.0 / std::f64::consts::PI).sqrt();
    let u = c * (x + 0.044715 * x.powi(3));
    0.5 * x * (1.0 + u.tanh())
}

pub(crate) fn gelu_prime(x: f64) -> f64 {
    let c = (2.0 / std::f64::consts::PI).sqrt();
    let u = c * (x + 0.044715 * x.powi(3));
    let t = u.tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * c * (1.0 + 3.0 * 0.044715 * x * x)
}

#[derive(Debug, Clone)]
pub(crate) struct LnCache {
    pub xhat: Array2<f64>,
    pub istd: Vec<f64>,
}

pub(crate) fn layer_norm(
    x: &Array2<f64>,
    gamma: &Array1<f64>,
    beta: &Array1<f64>,
) -> (Array2<f64>, LnCache) {
    let (n, d) = x.dim();
    let mut out = Array2::zeros((n, d));
    let mut xhat = Array2::zeros((n, d));
    let mut istd = Vec::with_capacity(n);
    for i in 0..n {
        let row = x.row(i);
        let mean = row.sum() / d as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let is = 1.0 / (var + LN_EPS).sqrt();
        istd.push(is);
        for j in 0..d {
            let h = (row[j] - mean) * is;
            xhat[[i, j]] = h;
            out[[i, j]] = gamma[j] * h + beta[j];
        }
    }
    (out, LnCache { xhat, istd })
}

/// One attention head (or the single-head form): masked scaled
/// dot-product attention. Returns the context rows and the full weight
/// matrix (masked entries are exactly zero in additive mode).
pub(crate) fn attention_core(
    q: ArrayView2<f64>,
    k: ArrayView2<f64>,
    v: ArrayView2<f64>,
    mask: &MaskMatrix,
    mode: MaskMode,
    scale: f64,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let n = q.nrows();
    let dh = v.ncols();
    let mut weights = Array2::zeros((n, n));
    let mut ctx = Array2::zeros((n, dh));
    for i in 0..n {
        if !(0..n).any(|j| mask.get(i, j)) {
            return Err(Error::internal(format!("mask row {i} has no edges")));
        }
        match mode {
            MaskMode::Additive => {
                let mut logits: Vec<(usize, f64)> = Vec::new();
                let mut max = f64::NEG_INFINITY;
                for j in 0..n {
                    if mask.get(i, j) {
                        let l = q.row(i).dot(&k.row(j)) / scale;
                        if l > max {
                            max = l;
                        }
                        logits.push((j, l));
                    }
                }
                let denom: f64 = logits.iter().map(|&(_, l)| (l - max).exp()).sum();
                for &(j, l) in &logits {
                    weights[[i, j]] = (l - max).exp() / denom;
                }
                for &(j, _) in &logits {
                    let w = weights[[i, j]];
                    for c in 0..dh {
                        ctx[[i, c]] += w * v[[j, c]];
                    }
                }
            }
            MaskMode::Multiplicative => {
                // masked logits are multiplied by zero, so every position
                // keeps nonzero weight after the softmax
                let mut logits = vec![0.0f64; n];
                let mut max = f64::NEG_INFINITY;
                for (j, slot) in logits.iter_mut().enumerate() {
                    let raw = q.row(i).dot(&k.row(j)) / scale;
                    *slot = if mask.get(i, j) { raw } else { 0.0 };
                    if *slot > max {
                        max = *slot;
                    }
                }
                let denom: f64 = logits.iter().map(|&l| (l - max).exp()).sum();
                for (j, &l) in logits.iter().enumerate() {
                    weights[[i, j]] = (l - max).exp() / denom;
                }
                for j in 0..n {
                    let w = weights[[i, j]];
                    for c in 0..dh {
                        ctx[[i, c]] += w * v[[j, c]];
                    }
                }
            }
        }
    }
    Ok((ctx, weights))
}

/// Single-head masked attention over full-width Q, K, V matrices.
pub fn masked_attention(
    q: &Array2<f64>,
    k: &Array2<f64>,
    v: &Array2<f64>,
    mask: &MaskMatrix,
    mode: MaskMode,
) -> Result<Array2<f64>> {
    let n = q.nrows();
    if k.nrows() != n || v.nrows() != n || mask.n() != n {
        return Err(Error::usage(format!(
            "attention expects square agreement: q {n} rows, k {}, v {}, mask {}",
            k.nrows(),
            v.nrows(),
            mask.n()
        )));
    }
    if q.ncols() != k.ncols() {
        return Err(Error::usage("q and k must share their inner dimension"));
    }
    let scale = (q.ncols() as f64).sqrt();
    let (ctx, _) = attention_core(q.view(), k.view(), v.view(), mask, mode, scale)?;
    Ok(ctx)
}

#[derive(Debug, Clone)]
pub(crate) struct LayerCache {
    pub x_in: Array2<f64>,
    pub q: Array2<f64>,
    pub k: Array2<f64>,
    pub v: Array2<f64>,
    /// Per-head attention weights.
    pub weights: Vec<Array2<f64>>,
    pub ctx: Array2<f64>,
    pub ln1: LnCache,
    pub ln1_out: Array2<f64>,
    pub ff_pre: Array2<f64>,
    pub ff_act: Array2<f64>,
    pub ln2: LnCache,
}

/// Result of running the full encoder stack: final-layer representations
/// plus the activation caches needed for gradients and inspection.
#[derive(Debug, Clone)]
pub struct EncodeOutput {
    pub hidden: Array2<f64>,
    pub(crate) token_ids: Vec<usize>,
    pub(crate) layers: Vec<LayerCache>,
}

impl EncodeOutput {
    /// Attention weight matrix of one layer and head.
    pub fn attention_weights(&self, layer: usize, head: usize) -> &Array2<f64> {
        &self.layers[layer].weights[head]
    }

    pub fn doc_vec(&self, seq: &HierSequence) -> Array1<f64> {
        self.hidden.row(seq.doc_cls_pos()).to_owned()
    }

    pub fn sent_vec(&self, seq: &HierSequence, j: usize) -> Array1<f64> {
        self.hidden.row(seq.sent_cls_pos()[j]).to_owned()
    }

    pub fn fact_vec(&self, seq: &HierSequence, t: usize) -> Array1<f64> {
        self.hidden.row(seq.fact_cls_pos()[t]).to_owned()
    }
}

/// Run embeddings and all encoder layers under the mask.
pub fn encode(
    seq: &HierSequence,
    mask: &MaskMatrix,
    vocab: &Vocab,
    params: &EncoderParams,
    cfg: &EncoderConfig,
) -> Result<EncodeOutput> {
    cfg.validate()?;
    if mask.n() != seq.len() {
        return Err(Error::internal(format!(
            "mask size {} does not match sequence length {}",
            mask.n(),
            seq.len()
        )));
    }
    if params.layers.len() != cfg.n_layers {
        return Err(Error::internal(format!(
            "params carry {} layers, config says {}",
            params.layers.len(),
            cfg.n_layers
        )));
    }
    let x0 = embed(seq, vocab, params, cfg)?;
    let token_ids = token_ids(seq, vocab, cfg)?;
    let d = cfg.d_model;
    let dh = d / cfg.n_heads;
    let scale = (dh as f64).sqrt();

    let mut x = x0;
    let mut layers = Vec::with_capacity(cfg.n_layers);
    for lp in &params.layers {
        let q = x.dot(&lp.wq) + &lp.bq;
        let k = x.dot(&lp.wk) + &lp.bk;
        let v = x.dot(&lp.wv) + &lp.bv;
        let n = x.nrows();
        let mut ctx = Array2::zeros((n, d));
        let mut weights = Vec::with_capacity(cfg.n_heads);
        for h in 0..cfg.n_heads {
            let cols = s![.., h * dh..(h + 1) * dh];
            let (ctx_h, w_h) = attention_core(
                q.slice(cols),
                k.slice(cols),
                v.slice(cols),
                mask,
                cfg.mask_mode,
                scale,
            )?;
            ctx.slice_mut(cols).assign(&ctx_h);
            weights.push(w_h);
        }
        let attn_out = ctx.dot(&lp.wo) + &lp.bo;
        let res1 = &x + &attn_out;
        let (ln1_out, ln1) = layer_norm(&res1, &lp.ln1_gamma, &lp.ln1_beta);
        let ff_pre = ln1_out.dot(&lp.w1) + &lp.b1;
        let ff_act = ff_pre.mapv(gelu);
        let ff_out = ff_act.dot(&lp.w2) + &lp.b2;
        let res2 = &ln1_out + &ff_out;
        let (ln2_out, ln2) = layer_norm(&res2, &lp.ln2_gamma, &lp.ln2_beta);
        layers.push(LayerCache {
            x_in: x,
            q,
            k,
            v,
            weights,
            ctx,
            ln1,
            ln1_out,
            ff_pre,
            ff_act,
            ln2,
        });
        x = ln2_out;
    }

    Ok(EncodeOutput {
        hidden: x,
        token_ids,
        layers,
    })
}

/// Concatenated classifier inputs for each fact, in document-sentence-
/// fact order as selected by the classifier mode.
pub(crate) fn classifier_inputs(
    hidden: &Array2<f64>,
    seq: &HierSequence,
    cfg: &EncoderConfig,
) -> Array2<f64> {
    let t = seq.fact_count();
    let mut concat = Array2::zeros((t, cfg.concat_width()));
    for fact in 0..t {
        let mut col = 0usize;
        let put = |concat: &mut Array2<f64>, row: usize, col: &mut usize, src: usize| {
            for c in 0..cfg.d_model {
                concat[[row, *col + c]] = hidden[[src, c]];
            }
            *col += cfg.d_model;
        };
        if cfg.classifier_mode.uses_document() {
            put(&mut concat, fact, &mut col, seq.doc_cls_pos());
        }
        if cfg.classifier_mode.uses_sentence() {
            let j = seq.fact_sentence(fact);
            put(&mut concat, fact, &mut col, seq.sent_cls_pos()[j]);
        }
        put(&mut concat, fact, &mut col, seq.fact_cls_pos()[fact]);
    }
    concat
}

/// Sigmoid scores in (0, 1), one per fact.
pub fn classify_facts(
    hidden: &Array2<f64>,
    seq: &HierSequence,
    params: &EncoderParams,
    cfg: &EncoderConfig,
) -> Result<Vec<f64>> {
    if params.w_c.len() != cfg.concat_width() {
        return Err(Error::internal(format!(
            "classifier expects width {}, params have {}",
            cfg.concat_width(),
            params.w_c.len()
        )));
    }
    let concat = classifier_inputs(hidden, seq, cfg);
    let logits = concat.dot(&params.w_c) + params.b_c;
    Ok(logits.iter().map(|&z| sigmoid(z)).collect())
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Loss and d(loss)/d(score) for one fact, with the clamp applied the
/// same way in both directions so finite differences agree exactly.
pub(crate) fn bce_term(score: f64, label: bool) -> (f64, f64) {
    let clamped = score.clamp(BCE_EPS, 1.0 - BCE_EPS);
    let y = if label { 1.0 } else { 0.0 };
    let loss = -(y * clamped.ln() + (1.0 - y) * (1.0 - clamped).ln());
    let grad = if score > BCE_EPS && score < 1.0 - BCE_EPS {
        -y / clamped + (1.0 - y) / (1.0 - clamped)
    } else {
        0.0
    };
    (loss, grad)
}

/// Mean binary cross-entropy over facts; scores are clamped away from
/// the endpoints before the logs.
pub fn bce_loss(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::usage(format!(
            "bce_loss got {} scores and {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.is_empty() {
        return Err(Error::usage("bce_loss requires at least one fact"));
    }
    let total: f64 = scores
        .iter()
        .zip(labels)
        .map(|(&p, &y)| bce_term(p, y).0)
        .sum();
    Ok(total / scores.len() as f64)
}

/// Encode and classify in one call; the inference path.
pub fn score_facts(
    seq: &HierSequence,
    mask: &MaskMatrix,
    vocab: &Vocab,
    params: &EncoderParams,
    cfg: &EncoderConfig,
) -> Result<Vec<f64>> {
    let out = encode(seq, mask, vocab, params, cfg)?;
    classify_facts(&out.hidden, seq, params, cfg)
}
