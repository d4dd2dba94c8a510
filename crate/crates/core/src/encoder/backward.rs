//! Analytic gradients of the training loss with respect to every
//! parameter tensor. Verified against central finite differences by
//! `grad_check`.

use ndarray::{s, Array1, Array2, Axis};

use super::forward::{
    bce_term, classifier_inputs, encode, gelu_prime, sigmoid, LayerCache, LnCache,
};
use super::params::EncoderParams;
use super::vocab::Vocab;
use super::{EncoderConfig, MaskMode};
use crate::error::{Error, Result};
use crate::hierseq::{HierSequence, MaskMatrix, SegmentId};

/// Forward plus backward for one document. Returns the mean BCE loss,
/// gradients shaped like the parameters, and the fact scores.
pub fn loss_and_grads(
    seq: &HierSequence,
    mask: &MaskMatrix,
    labels: &[bool],
    vocab: &Vocab,
    params: &EncoderParams,
    cfg: &EncoderConfig,
) -> Result<(f64, EncoderParams, Vec<f64>)> {
    if labels.len() != seq.fact_count() {
        return Err(Error::usage(format!(
            "{} labels for {} facts",
            labels.len(),
            seq.fact_count()
        )));
    }
    let out = encode(seq, mask, vocab, params, cfg)?;
    let concat = classifier_inputs(&out.hidden, seq, cfg);
    let logits = concat.dot(&params.w_c) + params.b_c;
    let scores: Vec<f64> = logits.iter().map(|&z| sigmoid(z)).collect();

    let t_count = scores.len() as f64;
    let mut loss = 0.0;
    let mut dlogits = Array1::zeros(scores.len());
    for (t, (&p, &y)) in scores.iter().zip(labels).enumerate() {
        let (l, dl_dp) = bce_term(p, y);
        loss += l / t_count;
        // d(loss)/d(logit) = d(loss)/dp * sigma'(z)
        dlogits[t] = dl_dp / t_count * p * (1.0 - p);
    }

    let mut grads = EncoderParams::zeros(cfg);

    // classifier
    for (t, &dz) in dlogits.iter().enumerate() {
        grads.w_c.scaled_add(dz, &concat.row(t));
        grads.b_c += dz;
    }
    let dconcat = {
        let mut d = Array2::zeros(concat.dim());
        for (t, &dz) in dlogits.iter().enumerate() {
            d.row_mut(t).scaled_add(dz, &params.w_c);
        }
        d
    };

    // scatter classifier gradient into the final hidden matrix
    let mut dhidden: Array2<f64> = Array2::zeros(out.hidden.dim());
    for t in 0..seq.fact_count() {
        let mut col = 0usize;
        let take = |dhidden: &mut Array2<f64>, col: &mut usize, dst: usize| {
            for c in 0..cfg.d_model {
                dhidden[[dst, c]] += dconcat[[t, *col + c]];
            }
            *col += cfg.d_model;
        };
        if cfg.classifier_mode.uses_document() {
            take(&mut dhidden, &mut col, seq.doc_cls_pos());
        }
        if cfg.classifier_mode.uses_sentence() {
            let j = seq.fact_sentence(t);
            take(&mut dhidden, &mut col, seq.sent_cls_pos()[j]);
        }
        take(&mut dhidden, &mut col, seq.fact_cls_pos()[t]);
    }

    // layers, last to first
    let mut dx = dhidden;
    for l in (0..cfg.n_layers).rev() {
        dx = layer_backward(&params.layers[l], &mut grads.layers[l], &out.layers[l], mask, cfg, dx)?;
    }

    // embedding scatter
    for (i, &id) in out.token_ids.iter().enumerate() {
        let drow = dx.row(i);
        grads.token_emb.row_mut(id).scaled_add(1.0, &drow);
        if cfg.use_segment {
            let s = match seq.segment_ids()[i] {
                SegmentId::A => 0,
                SegmentId::B => 1,
            };
            grads.seg_emb.row_mut(s).scaled_add(1.0, &drow);
        }
        if cfg.use_position {
            grads.pos_emb.row_mut(i).scaled_add(1.0, &drow);
        }
    }

    Ok((loss, grads, scores))
}

fn layer_backward(
    lp: &super::params::LayerParams,
    gl: &mut super::params::LayerParams,
    cache: &LayerCache,
    mask: &MaskMatrix,
    cfg: &EncoderConfig,
    dout: Array2<f64>,
) -> Result<Array2<f64>> {
    let d = cfg.d_model;
    let dh = d / cfg.n_heads;
    let scale = (dh as f64).sqrt();

    // layer norm 2
    let (dres2, dg2, db2) = layer_norm_backward(&dout, &cache.ln2, &lp.ln2_gamma);
    gl.ln2_gamma += &dg2;
    gl.ln2_beta += &db2;

    // feed-forward with residual from ln1_out
    let dff_out = &dres2;
    gl.w2 += &cache.ff_act.t().dot(dff_out);
    gl.b2 += &dff_out.sum_axis(Axis(0));
    let dff_act = dff_out.dot(&lp.w2.t());
    let dff_pre = &dff_act * &cache.ff_pre.mapv(gelu_prime);
    gl.w1 += &cache.ln1_out.t().dot(&dff_pre);
    gl.b1 += &dff_pre.sum_axis(Axis(0));
    let mut dln1_out = dff_pre.dot(&lp.w1.t());
    dln1_out += &dres2; // residual branch

    // layer norm 1
    let (dres1, dg1, db1) = layer_norm_backward(&dln1_out, &cache.ln1, &lp.ln1_gamma);
    gl.ln1_gamma += &dg1;
    gl.ln1_beta += &db1;

    // attention output projection, with residual from x_in
    let dattn_out = &dres1;
    gl.wo += &cache.ctx.t().dot(dattn_out);
    gl.bo += &dattn_out.sum_axis(Axis(0));
    let dctx = dattn_out.dot(&lp.wo.t());

    // per-head attention backward
    let n = cache.x_in.nrows();
    let mut dq = Array2::zeros((n, d));
    let mut dk = Array2::zeros((n, d));
    let mut dv = Array2::zeros((n, d));
    for h in 0..cfg.n_heads {
        let cols = s![.., h * dh..(h + 1) * dh];
        let q = cache.q.slice(cols);
        let k = cache.k.slice(cols);
        let v = cache.v.slice(cols);
        let w = &cache.weights[h];
        let dctx_h = dctx.slice(cols);
        let mut dq_h = dq.slice_mut(cols);
        let mut dk_h = dk.slice_mut(cols);
        let mut dv_h = dv.slice_mut(cols);

        for i in 0..n {
            // participating keys: masked-out columns carry zero weight in
            // additive mode, every column participates in multiplicative mode
            let participates = |j: usize| match cfg.mask_mode {
                MaskMode::Additive => mask.get(i, j),
                MaskMode::Multiplicative => true,
            };
            let mut dw = vec![0.0f64; n];
            for j in 0..n {
                if participates(j) {
                    let mut acc = 0.0;
                    for c in 0..dh {
                        acc += dctx_h[[i, c]] * v[[j, c]];
                        dv_h[[j, c]] += w[[i, j]] * dctx_h[[i, c]];
                    }
                    dw[j] = acc;
                }
            }
            // softmax Jacobian
            let mut srow = 0.0;
            for (j, &dwj) in dw.iter().enumerate() {
                if participates(j) {
                    srow += w[[i, j]] * dwj;
                }
            }
            for j in 0..n {
                if !participates(j) {
                    continue;
                }
                let dlogit = w[[i, j]] * (dw[j] - srow);
                // a multiplicative mask zeroes the logit itself, so no
                // gradient reaches q or k through masked positions
                let through = match cfg.mask_mode {
                    MaskMode::Additive => true,
                    MaskMode::Multiplicative => mask.get(i, j),
                };
                if !through {
                    continue;
                }
                for c in 0..dh {
                    dq_h[[i, c]] += dlogit * k[[j, c]] / scale;
                    dk_h[[j, c]] += dlogit * q[[i, c]] / scale;
                }
            }
        }
    }

    // input projections
    gl.wq += &cache.x_in.t().dot(&dq);
    gl.bq += &dq.sum_axis(Axis(0));
    gl.wk += &cache.x_in.t().dot(&dk);
    gl.bk += &dk.sum_axis(Axis(0));
    gl.wv += &cache.x_in.t().dot(&dv);
    gl.bv += &dv.sum_axis(Axis(0));

    let mut dx = dres1; // residual into x_in
    dx += &dq.dot(&lp.wq.t());
    dx += &dk.dot(&lp.wk.t());
    dx += &dv.dot(&lp.wv.t());
    Ok(dx)
}

fn layer_norm_backward(
    dout: &Array2<f64>,
    cache: &LnCache,
    gamma: &Array1<f64>,
) -> (Array2<f64>, Array1<f64>, Array1<f64>) {
    let (n, d) = dout.dim();
    let mut dx = Array2::zeros((n, d));
    let mut dgamma = Array1::zeros(d);
    let mut dbeta = Array1::zeros(d);
    for i in 0..n {
        let istd = cache.istd[i];
        let mut mean_dxhat = 0.0;
        let mut mean_dxhat_xhat = 0.0;
        for j in 0..d {
            let dxhat = dout[[i, j]] * gamma[j];
            mean_dxhat += dxhat;
            mean_dxhat_xhat += dxhat * cache.xhat[[i, j]];
            dgamma[j] += dout[[i, j]] * cache.xhat[[i, j]];
            dbeta[j] += dout[[i, j]];
        }
        mean_dxhat /= d as f64;
        mean_dxhat_xhat /= d as f64;
        for j in 0..d {
            let dxhat = dout[[i, j]] * gamma[j];
            dx[[i, j]] = istd * (dxhat - mean_dxhat - cache.xhat[[i, j]] * mean_dxhat_xhat);
        }
    }
    (dx, dgamma, dbeta)
}
