//! Central finite-difference verification of the analytic gradients.

use super::backward::loss_and_grads;
use super::forward::{bce_loss, classify_facts, encode};
use super::params::EncoderParams;
use super::vocab::Vocab;
use super::EncoderConfig;
use crate::error::Result;
use crate::hierseq::{HierSequence, MaskMatrix};

/// Forward-only loss, used as the finite-difference oracle.
pub(crate) fn forward_loss(
    seq: &HierSequence,
    mask: &MaskMatrix,
    labels: &[bool],
    vocab: &Vocab,
    params: &EncoderParams,
    cfg: &EncoderConfig,
) -> Result<f64> {
    let out = encode(seq, mask, vocab, params, cfg)?;
    let scores = classify_facts(&out.hidden, seq, params, cfg)?;
    bce_loss(&scores, labels)
}

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    // guard the denominator so near-zero gradient pairs compare on an
    // absolute scale instead of amplifying finite-difference noise
    let denom = (analytic.abs() + numeric.abs()).max(1e-3);
    (analytic - numeric).abs() / denom
}

/// Compare analytic gradients against central finite differences for
/// every parameter; returns the maximum relative error. Intended for
/// tiny configurations only.
pub fn grad_check(
    seq: &HierSequence,
    mask: &MaskMatrix,
    labels: &[bool],
    vocab: &Vocab,
    params: &EncoderParams,
    cfg: &EncoderConfig,
    eps: f64,
) -> Result<f64> {
    let (_, grads, _) = loss_and_grads(seq, mask, labels, vocab, params, cfg)?;
    let analytic = grads.flatten();
    let mut flat = params.flatten();
    let mut scratch = params.clone();

    let mut max_err: f64 = 0.0;
    for k in 0..flat.len() {
        let orig = flat[k];
        flat[k] = orig + eps;
        scratch.assign_flat(&flat)?;
        let plus = forward_loss(seq, mask, labels, vocab, &scratch, cfg)?;
        flat[k] = orig - eps;
        scratch.assign_flat(&flat)?;
        let minus = forward_loss(seq, mask, labels, vocab, &scratch, cfg)?;
        flat[k] = orig;
        let numeric = (plus - minus) / (2.0 * eps);
        max_err = max_err.max(relative_error(analytic[k], numeric));
    }
    Ok(max_err)
}

/// L2 norm of the full gradient, for stationarity checks.
pub fn grad_norm(grads: &EncoderParams) -> f64 {
    grads.flatten().iter().map(|g| g * g).sum::<f64>().sqrt()
}
