//! Parameter tensors, seeded initialization, and checkpoint files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::vocab::{Vocab, CLS_D_ID, CLS_F_ID, CLS_S_ID};
use super::EncoderConfig;
use crate::error::{Error, Result};

const INIT_RANGE: f64 = 0.05;
pub(crate) const CHECKPOINT_VERSION: u32 = 1;

/// Per-layer weights: attention projections, feed-forward, layer norms.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub wq: Array2<f64>,
    pub bq: Array1<f64>,
    pub wk: Array2<f64>,
    pub bk: Array1<f64>,
    pub wv: Array2<f64>,
    pub bv: Array1<f64>,
    pub wo: Array2<f64>,
    pub bo: Array1<f64>,
    pub ln1_gamma: Array1<f64>,
    pub ln1_beta: Array1<f64>,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub ln2_gamma: Array1<f64>,
    pub ln2_beta: Array1<f64>,
}

/// All trainable tensors. Also used as the gradient container, since
/// gradients mirror parameter shapes exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub token_emb: Array2<f64>,
    pub seg_emb: Array2<f64>,
    pub pos_emb: Array2<f64>,
    pub layers: Vec<LayerParams>,
    pub w_c: Array1<f64>,
    pub b_c: f64,
}

impl EncoderParams {
    /// Seeded uniform initialization. The three marker embeddings for
    /// document, sentence, and fact share one initial vector.
    pub fn init(cfg: &EncoderConfig, seed: u64) -> EncoderParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mat = |r: usize, c: usize, rng: &mut ChaCha8Rng| {
            Array2::from_shape_fn((r, c), |_| rng.gen_range(-INIT_RANGE..INIT_RANGE))
        };
        let vec_u = |n: usize, rng: &mut ChaCha8Rng| {
            Array1::from_shape_fn(n, |_| rng.gen_range(-INIT_RANGE..INIT_RANGE))
        };
        let d = cfg.d_model;
        let mut token_emb = mat(cfg.vocab_size, d, &mut rng);
        let shared_cls = token_emb.row(CLS_D_ID).to_owned();
        token_emb.row_mut(CLS_S_ID).assign(&shared_cls);
        token_emb.row_mut(CLS_F_ID).assign(&shared_cls);
        let seg_emb = mat(2, d, &mut rng);
        let pos_emb = mat(cfg.max_len, d, &mut rng);
        let layers = (0..cfg.n_layers)
            .map(|_| LayerParams {
                wq: mat(d, d, &mut rng),
                bq: Array1::zeros(d),
                wk: mat(d, d, &mut rng),
                bk: Array1::zeros(d),
                wv: mat(d, d, &mut rng),
                bv: Array1::zeros(d),
                wo: mat(d, d, &mut rng),
                bo: Array1::zeros(d),
                ln1_gamma: Array1::ones(d),
                ln1_beta: Array1::zeros(d),
                w1: mat(d, cfg.d_ff, &mut rng),
                b1: Array1::zeros(cfg.d_ff),
                w2: mat(cfg.d_ff, d, &mut rng),
                b2: Array1::zeros(d),
                ln2_gamma: Array1::ones(d),
                ln2_beta: Array1::zeros(d),
            })
            .collect();
        let w_c = vec_u(cfg.concat_width(), &mut rng);
        EncoderParams {
            token_emb,
            seg_emb,
            pos_emb,
            layers,
            w_c,
            b_c: 0.0,
        }
    }

    /// All-zero tensors with the shapes implied by `cfg`; the gradient
    /// accumulator.
    pub fn zeros(cfg: &EncoderConfig) -> EncoderParams {
        let d = cfg.d_model;
        EncoderParams {
            token_emb: Array2::zeros((cfg.vocab_size, d)),
            seg_emb: Array2::zeros((2, d)),
            pos_emb: Array2::zeros((cfg.max_len, d)),
            layers: (0..cfg.n_layers)
                .map(|_| LayerParams {
                    wq: Array2::zeros((d, d)),
                    bq: Array1::zeros(d),
                    wk: Array2::zeros((d, d)),
                    bk: Array1::zeros(d),
                    wv: Array2::zeros((d, d)),
                    bv: Array1::zeros(d),
                    wo: Array2::zeros((d, d)),
                    bo: Array1::zeros(d),
                    ln1_gamma: Array1::zeros(d),
                    ln1_beta: Array1::zeros(d),
                    w1: Array2::zeros((d, cfg.d_ff)),
                    b1: Array1::zeros(cfg.d_ff),
                    w2: Array2::zeros((cfg.d_ff, d)),
                    b2: Array1::zeros(d),
                    ln2_gamma: Array1::zeros(d),
                    ln2_beta: Array1::zeros(d),
                })
                .collect(),
            w_c: Array1::zeros(cfg.concat_width()),
            b_c: 0.0,
        }
    }

    /// `self += c * other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &EncoderParams, c: f64) {
        self.token_emb.scaled_add(c, &other.token_emb);
        self.seg_emb.scaled_add(c, &other.seg_emb);
        self.pos_emb.scaled_add(c, &other.pos_emb);
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.wq.scaled_add(c, &b.wq);
            a.bq.scaled_add(c, &b.bq);
            a.wk.scaled_add(c, &b.wk);
            a.bk.scaled_add(c, &b.bk);
            a.wv.scaled_add(c, &b.wv);
            a.bv.scaled_add(c, &b.bv);
            a.wo.scaled_add(c, &b.wo);
            a.bo.scaled_add(c, &b.bo);
            a.ln1_gamma.scaled_add(c, &b.ln1_gamma);
            a.ln1_beta.scaled_add(c, &b.ln1_beta);
            a.w1.scaled_add(c, &b.w1);
            a.b1.scaled_add(c, &b.b1);
            a.w2.scaled_add(c, &b.w2);
            a.b2.scaled_add(c, &b.b2);
            a.ln2_gamma.scaled_add(c, &b.ln2_gamma);
            a.ln2_beta.scaled_add(c, &b.ln2_beta);
        }
        self.w_c.scaled_add(c, &other.w_c);
        self.b_c += c * other.b_c;
    }

    /// Named tensor views in canonical order. Single source of truth for
    /// flattening, checkpoints, and the finite-difference sweep.
    pub fn named_tensors(&self) -> Vec<(String, Vec<usize>, Vec<f64>)> {
        let mut out = Vec::new();
        let a2 = |name: &str, t: &Array2<f64>| {
            (
                name.to_string(),
                vec![t.nrows(), t.ncols()],
                t.iter().copied().collect::<Vec<f64>>(),
            )
        };
        let a1 = |name: &str, t: &Array1<f64>| {
            (
                name.to_string(),
                vec![t.len()],
                t.iter().copied().collect::<Vec<f64>>(),
            )
        };
        out.push(a2("token_emb", &self.token_emb));
        out.push(a2("seg_emb", &self.seg_emb));
        out.push(a2("pos_emb", &self.pos_emb));
        for (l, layer) in self.layers.iter().enumerate() {
            out.push(a2(&format!("layer{l}.wq"), &layer.wq));
            out.push(a1(&format!("layer{l}.bq"), &layer.bq));
            out.push(a2(&format!("layer{l}.wk"), &layer.wk));
            out.push(a1(&format!("layer{l}.bk"), &layer.bk));
            out.push(a2(&format!("layer{l}.wv"), &layer.wv));
            out.push(a1(&format!("layer{l}.bv"), &layer.bv));
            out.push(a2(&format!("layer{l}.wo"), &layer.wo));
            out.push(a1(&format!("layer{l}.bo"), &layer.bo));
            out.push(a1(&format!("layer{l}.ln1_gamma"), &layer.ln1_gamma));
            out.push(a1(&format!("layer{l}.ln1_beta"), &layer.ln1_beta));
            out.push(a2(&format!("layer{l}.w1"), &layer.w1));
            out.push(a1(&format!("layer{l}.b1"), &layer.b1));
            out.push(a2(&format!("layer{l}.w2"), &layer.w2));
            out.push(a1(&format!("layer{l}.b2"), &layer.b2));
            out.push(a1(&format!("layer{l}.ln2_gamma"), &layer.ln2_gamma));
            out.push(a1(&format!("layer{l}.ln2_beta"), &layer.ln2_beta));
        }
        out.push(a1("w_c", &self.w_c));
        out.push(("b_c".to_string(), vec![1], vec![self.b_c]));
        out
    }

    /// All parameters as one flat vector, in `named_tensors` order.
    pub fn flatten(&self) -> Vec<f64> {
        self.named_tensors()
            .into_iter()
            .flat_map(|(_, _, data)| data)
            .collect()
    }

    pub fn n_params(&self) -> usize {
        self.named_tensors().iter().map(|(_, _, d)| d.len()).sum()
    }

    /// Overwrite every tensor from a flat vector in `named_tensors` order.
    pub fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::internal(format!(
                "flat parameter vector has {} entries, expected {}",
                flat.len(),
                self.n_params()
            )));
        }
        let mut pos = 0usize;
        {
            let take = |t: &mut dyn Iterator<Item = &mut f64>, pos: &mut usize| {
                for slot in t {
                    *slot = flat[*pos];
                    *pos += 1;
                }
            };
            take(&mut self.token_emb.iter_mut(), &mut pos);
            take(&mut self.seg_emb.iter_mut(), &mut pos);
            take(&mut self.pos_emb.iter_mut(), &mut pos);
            for layer in &mut self.layers {
                take(&mut layer.wq.iter_mut(), &mut pos);
                take(&mut layer.bq.iter_mut(), &mut pos);
                take(&mut layer.wk.iter_mut(), &mut pos);
                take(&mut layer.bk.iter_mut(), &mut pos);
                take(&mut layer.wv.iter_mut(), &mut pos);
                take(&mut layer.bv.iter_mut(), &mut pos);
                take(&mut layer.wo.iter_mut(), &mut pos);
                take(&mut layer.bo.iter_mut(), &mut pos);
                take(&mut layer.ln1_gamma.iter_mut(), &mut pos);
                take(&mut layer.ln1_beta.iter_mut(), &mut pos);
                take(&mut layer.w1.iter_mut(), &mut pos);
                take(&mut layer.b1.iter_mut(), &mut pos);
                take(&mut layer.w2.iter_mut(), &mut pos);
                take(&mut layer.b2.iter_mut(), &mut pos);
                take(&mut layer.ln2_gamma.iter_mut(), &mut pos);
                take(&mut layer.ln2_beta.iter_mut(), &mut pos);
            }
            take(&mut self.w_c.iter_mut(), &mut pos);
        }
        self.b_c = flat[pos];
        pos += 1;
        debug_assert_eq!(pos, flat.len());
        Ok(())
    }
}

/// A complete trained model: architecture, vocabulary, and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub cfg: EncoderConfig,
    pub vocab: Vocab,
    pub params: EncoderParams,
}

#[derive(Serialize, Deserialize)]
struct TensorDump {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    version: u32,
    config: EncoderConfig,
    vocab: Vec<String>,
    tensors: Vec<TensorDump>,
}

/// Write a versioned checkpoint: config, vocabulary, and every parameter
/// tensor with its shape header.
pub fn save_checkpoint(path: impl AsRef<Path>, model: &Model) -> Result<()> {
    let dump = CheckpointFile {
        version: CHECKPOINT_VERSION,
        config: model.cfg.clone(),
        vocab: model.vocab.words().to_vec(),
        tensors: model
            .params
            .named_tensors()
            .into_iter()
            .map(|(name, shape, data)| TensorDump { name, shape, data })
            .collect(),
    };
    let file = File::create(path.as_ref())?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, &dump)?;
    w.flush()?;
    Ok(())
}

/// Load and validate a checkpoint written by [`save_checkpoint`].
pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Model> {
    let name = path.as_ref().display().to_string();
    let data_err = |msg: String| Error::Dataset {
        id: name.clone(),
        msg,
    };
    let file = File::open(path.as_ref()).map_err(|e| data_err(format!("cannot open: {e}")))?;
    let dump: CheckpointFile = serde_json::from_reader(BufReader::new(file))?;
    if dump.version != CHECKPOINT_VERSION {
        return Err(data_err(format!(
            "unsupported checkpoint version {}",
            dump.version
        )));
    }
    let cfg = dump.config;
    cfg.validate()?;
    let vocab = Vocab::from_words(dump.vocab)?;
    if vocab.len() != cfg.vocab_size {
        return Err(data_err(format!(
            "vocab has {} entries but config says {}",
            vocab.len(),
            cfg.vocab_size
        )));
    }
    let mut params = EncoderParams::zeros(&cfg);
    let expected = params.named_tensors();
    if expected.len() != dump.tensors.len() {
        return Err(data_err(format!(
            "checkpoint has {} tensors, expected {}",
            dump.tensors.len(),
            expected.len()
        )));
    }
    let mut flat = Vec::with_capacity(params.n_params());
    for ((want_name, want_shape, want_data), got) in expected.iter().zip(&dump.tensors) {
        if &got.name != want_name || &got.shape != want_shape {
            return Err(data_err(format!(
                "tensor {} with shape {:?} does not match expected {} {:?}",
                got.name, got.shape, want_name, want_shape
            )));
        }
        if got.data.len() != want_data.len() {
            return Err(data_err(format!(
                "tensor {} has {} values, shape implies {}",
                got.name,
                got.data.len(),
                want_data.len()
            )));
        }
        if got.data.iter().any(|v| !v.is_finite()) {
            return Err(data_err(format!("tensor {} contains non-finite values", got.name)));
        }
        flat.extend_from_slice(&got.data);
    }
    params.assign_flat(&flat)?;
    Ok(Model { cfg, vocab, params })
}
