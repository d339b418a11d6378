//! Post-layer-norm encoder-decoder forward pass, cross-entropy loss and the
//! matching analytic backward pass.

use ndarray::{Array2, Axis};
use rand_chacha::ChaCha8Rng;

use super::attention::{key_mask, multi_head_backward, multi_head_forward, positional_encoding, MultiHeadCache};
use super::layers::{
    dropout, dropout_backward, feed_forward, feed_forward_backward, layer_norm, layer_norm_backward,
    FeedForwardCache, LayerNormCache,
};
use super::params::{Matrix, Parameters};
use super::ModelError;
use crate::preprocess::{BOS_ID, EOS_ID, PAD_ID};

/// Eval mode is deterministic; train mode draws dropout masks from the rng.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut ChaCha8Rng),
}

impl Mode<'_> {
    fn rng(&mut self) -> Option<&mut ChaCha8Rng> {
        match self {
            Mode::Eval => None,
            Mode::Train(rng) => Some(&mut **rng),
        }
    }
}

/// A source sequence and its target equation ids (no BOS/EOS).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedPair {
    pub src: Vec<usize>,
    pub tgt: Vec<usize>,
}

impl EncodedPair {
    /// Teacher-forcing decoder input: BOS followed by the target.
    pub fn decoder_input(&self) -> Vec<usize> {
        std::iter::once(BOS_ID).chain(self.tgt.iter().copied()).collect()
    }

    /// Next-token labels: the target followed by EOS.
    pub fn labels(&self) -> Vec<usize> {
        self.tgt.iter().copied().chain(std::iter::once(EOS_ID)).collect()
    }
}

struct EncoderLayerCache {
    attn: MultiHeadCache,
    drop_attn: Option<Matrix>,
    ln1: LayerNormCache,
    ffn: FeedForwardCache,
    drop_ffn: Option<Matrix>,
    ln2: LayerNormCache,
}

struct DecoderLayerCache {
    self_attn: MultiHeadCache,
    drop_self: Option<Matrix>,
    ln1: LayerNormCache,
    cross_attn: MultiHeadCache,
    drop_cross: Option<Matrix>,
    ln2: LayerNormCache,
    ffn: FeedForwardCache,
    drop_ffn: Option<Matrix>,
    ln3: LayerNormCache,
}

pub(crate) struct ForwardCache {
    src_ids: Vec<usize>,
    tgt_ids: Vec<usize>,
    drop_src: Option<Matrix>,
    drop_tgt: Option<Matrix>,
    encoder: Vec<EncoderLayerCache>,
    decoder: Vec<DecoderLayerCache>,
    dec_out: Matrix,
}

impl ForwardCache {
    /// Cross-attention weights of the last decoder layer, head `h`.
    #[cfg(test)]
    pub(crate) fn cross_weights(&self, h: usize) -> Option<&Matrix> {
        self.decoder.last().map(|c| c.cross_attn.weights(h))
    }
}

fn check_ids(ids: &[usize], vocab: usize, max_len: usize, side: &str) -> Result<(), ModelError> {
    if ids.len() > max_len {
        return Err(ModelError::SequenceTooLong {
            len: ids.len(),
            max: max_len,
        });
    }
    if let Some(&bad) = ids.iter().find(|&&id| id >= vocab) {
        return Err(ModelError::shape(format!(
            "{side} id {bad} outside vocabulary of size {vocab}"
        )));
    }
    Ok(())
}

fn embed(table: &Matrix, ids: &[usize], pe: &Matrix) -> Matrix {
    let scale = (table.ncols() as f64).sqrt();
    let mut x = Array2::zeros((ids.len(), table.ncols()));
    for (i, &id) in ids.iter().enumerate() {
        let mut row = x.row_mut(i);
        row.assign(&table.row(id));
        row.mapv_inplace(|v| v * scale);
        row += &pe.row(i);
    }
    x
}

fn residual(x: &Matrix, sub: &Matrix) -> Matrix {
    x + sub
}

pub(crate) struct EncoderOutput {
    pub out: Matrix,
    drop_src: Option<Matrix>,
    caches: Vec<EncoderLayerCache>,
}

pub(crate) fn encode_with_cache(
    params: &Parameters,
    src_ids: &[usize],
    mode: &mut Mode<'_>,
) -> Result<EncoderOutput, ModelError> {
    let cfg = &params.config;
    check_ids(src_ids, cfg.src_vocab_size, cfg.max_len, "source")?;
    let pe = positional_encoding(src_ids.len(), cfg.d_model)?;
    let p = cfg.dropout;
    let mut x = embed(&params.src_embedding, src_ids, &pe);
    let drop_src = dropout(&mut x, p, mode.rng());
    let keys: Vec<bool> = src_ids.iter().map(|&id| id != PAD_ID).collect();
    let mask = key_mask(src_ids.len(), &keys, false);
    let mut caches = Vec::with_capacity(params.encoder.len());
    for layer in &params.encoder {
        let (mut a, attn) = multi_head_forward(&x, &x, &layer.self_attn, Some(&mask))?;
        let drop_attn = dropout(&mut a, p, mode.rng());
        let (x1, ln1) = layer_norm(&residual(&x, &a), &layer.ln1);
        let (mut f, ffn) = feed_forward(&x1, &layer.ffn);
        let drop_ffn = dropout(&mut f, p, mode.rng());
        let (x2, ln2) = layer_norm(&residual(&x1, &f), &layer.ln2);
        caches.push(EncoderLayerCache {
            attn,
            drop_attn,
            ln1,
            ffn,
            drop_ffn,
            ln2,
        });
        x = x2;
    }
    Ok(EncoderOutput {
        out: x,
        drop_src,
        caches,
    })
}

struct DecoderOutput {
    out: Matrix,
    drop_tgt: Option<Matrix>,
    caches: Vec<DecoderLayerCache>,
}

fn decode_with_cache(
    params: &Parameters,
    enc_out: &Matrix,
    src_ids: &[usize],
    tgt_ids: &[usize],
    mode: &mut Mode<'_>,
) -> Result<DecoderOutput, ModelError> {
    let cfg = &params.config;
    check_ids(tgt_ids, cfg.tgt_vocab_size, cfg.max_len, "target")?;
    let pe = positional_encoding(tgt_ids.len(), cfg.d_model)?;
    let p = cfg.dropout;
    let mut y = embed(&params.tgt_embedding, tgt_ids, &pe);
    let drop_tgt = dropout(&mut y, p, mode.rng());
    let tgt_keys: Vec<bool> = tgt_ids.iter().map(|&id| id != PAD_ID).collect();
    let self_mask = key_mask(tgt_ids.len(), &tgt_keys, true);
    let src_keys: Vec<bool> = src_ids.iter().map(|&id| id != PAD_ID).collect();
    let cross_mask = key_mask(tgt_ids.len(), &src_keys, false);
    let mut caches = Vec::with_capacity(params.decoder.len());
    for layer in &params.decoder {
        let (mut a, self_attn) = multi_head_forward(&y, &y, &layer.self_attn, Some(&self_mask))?;
        let drop_self = dropout(&mut a, p, mode.rng());
        let (y1, ln1) = layer_norm(&residual(&y, &a), &layer.ln1);
        let (mut c, cross_attn) = multi_head_forward(&y1, enc_out, &layer.cross_attn, Some(&cross_mask))?;
        let drop_cross = dropout(&mut c, p, mode.rng());
        let (y2, ln2) = layer_norm(&residual(&y1, &c), &layer.ln2);
        let (mut f, ffn) = feed_forward(&y2, &layer.ffn);
        let drop_ffn = dropout(&mut f, p, mode.rng());
        let (y3, ln3) = layer_norm(&residual(&y2, &f), &layer.ln3);
        caches.push(DecoderLayerCache {
            self_attn,
            drop_self,
            ln1,
            cross_attn,
            drop_cross,
            ln2,
            ffn,
            drop_ffn,
            ln3,
        });
        y = y3;
    }
    Ok(DecoderOutput {
        out: y,
        drop_tgt,
        caches,
    })
}

fn project(params: &Parameters, dec_out: &Matrix) -> Matrix {
    let mut logits = dec_out.dot(&params.out_proj);
    logits += &params.out_bias.row(0);
    logits
}

pub(crate) fn forward_with_cache(
    params: &Parameters,
    src_ids: &[usize],
    tgt_ids: &[usize],
    mode: &mut Mode<'_>,
) -> Result<(Matrix, ForwardCache), ModelError> {
    let enc = encode_with_cache(params, src_ids, mode)?;
    let dec = decode_with_cache(params, &enc.out, src_ids, tgt_ids, mode)?;
    let logits = project(params, &dec.out);
    Ok((
        logits,
        ForwardCache {
            src_ids: src_ids.to_vec(),
            tgt_ids: tgt_ids.to_vec(),
            drop_src: enc.drop_src,
            drop_tgt: dec.drop_tgt,
            encoder: enc.caches,
            decoder: dec.caches,
            dec_out: dec.out,
        },
    ))
}

/// Eval-mode logits, one row per decoder input position
/// (`tgt_ids.len() x tgt_vocab_size`).
pub fn forward(params: &Parameters, src_ids: &[usize], tgt_ids: &[usize]) -> Result<Matrix, ModelError> {
    forward_with_cache(params, src_ids, tgt_ids, &mut Mode::Eval).map(|(logits, _)| logits)
}

/// Eval-mode encoder output, reusable across decoding steps.
pub fn encode_source(params: &Parameters, src_ids: &[usize]) -> Result<Matrix, ModelError> {
    encode_with_cache(params, src_ids, &mut Mode::Eval).map(|e| e.out)
}

/// Eval-mode decoder logits given a precomputed encoder output.
pub fn decoder_logits(
    params: &Parameters,
    enc_out: &Matrix,
    src_ids: &[usize],
    tgt_ids: &[usize],
) -> Result<Matrix, ModelError> {
    let dec = decode_with_cache(params, enc_out, src_ids, tgt_ids, &mut Mode::Eval)?;
    Ok(project(params, &dec.out))
}

pub fn log_softmax_row(row: ndarray::ArrayView1<f64>) -> Vec<f64> {
    let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    row.iter().map(|v| v - lse).collect()
}

/// Sum of token negative log-likelihoods over non-PAD labels, the token
/// count, and `d(sum * scale)/d(logits)`.
pub(crate) fn nll_with_grad(
    logits: &Matrix,
    labels: &[usize],
    pad_id: usize,
    scale: f64,
) -> Result<(f64, usize, Matrix), ModelError> {
    if logits.nrows() != labels.len() {
        return Err(ModelError::shape(format!(
            "{} logit rows but {} labels",
            logits.nrows(),
            labels.len()
        )));
    }
    let mut grad = Matrix::zeros(logits.raw_dim());
    let mut total = 0.0;
    let mut count = 0;
    for (i, &label) in labels.iter().enumerate() {
        if label == pad_id {
            continue;
        }
        if label >= logits.ncols() {
            return Err(ModelError::shape(format!("label {label} outside {} classes", logits.ncols())));
        }
        let row = logits.row(i);
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let sum_exp: f64 = row.iter().map(|v| (v - max).exp()).sum();
        let lse = max + sum_exp.ln();
        total += lse - row[label];
        count += 1;
        let mut g = grad.row_mut(i);
        g.zip_mut_with(&row, |gv, &v| *gv = (v - lse).exp() * scale);
        g[label] -= scale;
    }
    Ok((total, count, grad))
}

/// Mean negative log-softmax of the true class over non-PAD positions.
pub fn cross_entropy_loss(logits: &Matrix, target_ids: &[usize], pad_id: usize) -> Result<f64, ModelError> {
    let (total, count, _) = nll_with_grad(logits, target_ids, pad_id, 0.0)?;
    if count == 0 {
        return Err(ModelError::AllPadding);
    }
    Ok(total / count as f64)
}

fn scatter_embedding_grad(grad_table: &mut Matrix, ids: &[usize], dx: &Matrix) {
    let scale = (grad_table.ncols() as f64).sqrt();
    for (i, &id) in ids.iter().enumerate() {
        let mut row = grad_table.row_mut(id);
        row.scaled_add(scale, &dx.row(i));
    }
}

/// Backpropagates `d_logits` through the cached forward pass, accumulating
/// into `grads`.
pub(crate) fn backward_from_logits(
    params: &Parameters,
    cache: &ForwardCache,
    d_logits: &Matrix,
    grads: &mut Parameters,
) {
    {
        let mut db = grads.out_bias.row_mut(0);
        db += &d_logits.sum_axis(Axis(0));
    }
    ndarray::linalg::general_mat_mul(1.0, &cache.dec_out.t(), d_logits, 1.0, &mut grads.out_proj);
    let mut dy = d_logits.dot(&params.out_proj.t());

    let mut d_enc = Matrix::zeros((cache.src_ids.len(), params.config.d_model));
    for (l, layer) in params.decoder.iter().enumerate().rev() {
        let c = &cache.decoder[l];
        let g = &mut grads.decoder[l];
        // y3 = LN3(y2 + f)
        let d_sum3 = layer_norm_backward(&dy, &c.ln3, &layer.ln3, &mut g.ln3);
        let mut d_f = d_sum3.clone();
        dropout_backward(&mut d_f, &c.drop_ffn);
        let mut d_y2 = d_sum3 + feed_forward_backward(&d_f, &c.ffn, &layer.ffn, &mut g.ffn);
        // y2 = LN2(y1 + cross)
        let d_sum2 = layer_norm_backward(&d_y2, &c.ln2, &layer.ln2, &mut g.ln2);
        let mut d_c = d_sum2.clone();
        dropout_backward(&mut d_c, &c.drop_cross);
        let (d_y1_cross, d_mem) = multi_head_backward(&d_c, &c.cross_attn, &layer.cross_attn, &mut g.cross_attn);
        d_enc += &d_mem;
        d_y2 = d_sum2 + d_y1_cross;
        // y1 = LN1(y + self)
        let d_sum1 = layer_norm_backward(&d_y2, &c.ln1, &layer.ln1, &mut g.ln1);
        let mut d_a = d_sum1.clone();
        dropout_backward(&mut d_a, &c.drop_self);
        let (d_q, d_kv) = multi_head_backward(&d_a, &c.self_attn, &layer.self_attn, &mut g.self_attn);
        dy = d_sum1 + d_q + d_kv;
    }
    dropout_backward(&mut dy, &cache.drop_tgt);
    scatter_embedding_grad(&mut grads.tgt_embedding, &cache.tgt_ids, &dy);

    let mut dx = d_enc;
    for (l, layer) in params.encoder.iter().enumerate().rev() {
        let c = &cache.encoder[l];
        let g = &mut grads.encoder[l];
        let d_sum2 = layer_norm_backward(&dx, &c.ln2, &layer.ln2, &mut g.ln2);
        let mut d_f = d_sum2.clone();
        dropout_backward(&mut d_f, &c.drop_ffn);
        let d_x1 = d_sum2 + feed_forward_backward(&d_f, &c.ffn, &layer.ffn, &mut g.ffn);
        let d_sum1 = layer_norm_backward(&d_x1, &c.ln1, &layer.ln1, &mut g.ln1);
        let mut d_a = d_sum1.clone();
        dropout_backward(&mut d_a, &c.drop_attn);
        let (d_q, d_kv) = multi_head_backward(&d_a, &c.attn, &layer.self_attn, &mut g.self_attn);
        dx = d_sum1 + d_q + d_kv;
    }
    dropout_backward(&mut dx, &cache.drop_src);
    scatter_embedding_grad(&mut grads.src_embedding, &cache.src_ids, &dx);
}

pub(crate) fn batch_token_count(batch: &[EncodedPair]) -> usize {
    batch
        .iter()
        .map(|p| p.labels().iter().filter(|&&id| id != PAD_ID).count())
        .sum()
}

/// Mean token loss over the batch; gradients of that mean are added to
/// `grads`.
pub(crate) fn accumulate_batch(
    params: &Parameters,
    batch: &[EncodedPair],
    mode: &mut Mode<'_>,
    grads: &mut Parameters,
) -> Result<f64, ModelError> {
    let tokens = batch_token_count(batch);
    if tokens == 0 {
        return Err(ModelError::AllPadding);
    }
    let scale = 1.0 / tokens as f64;
    let mut total = 0.0;
    for pair in batch {
        let (logits, cache) = forward_with_cache(params, &pair.src, &pair.decoder_input(), mode)?;
        let (nll, _, d_logits) = nll_with_grad(&logits, &pair.labels(), PAD_ID, scale)?;
        total += nll;
        backward_from_logits(params, &cache, &d_logits, grads);
    }
    Ok(total * scale)
}

/// Eval-mode batch loss and its exact gradient with respect to every
/// parameter tensor.
pub fn loss_and_gradients(params: &Parameters, batch: &[EncodedPair]) -> Result<(f64, Parameters), ModelError> {
    let mut grads = Parameters::zeros(&params.config);
    let loss = accumulate_batch(params, batch, &mut Mode::Eval, &mut grads)?;
    Ok((loss, grads))
}

/// Eval-mode mean token loss of a batch.
pub fn batch_loss(params: &Parameters, batch: &[EncodedPair]) -> Result<f64, ModelError> {
    let tokens = batch_token_count(batch);
    if tokens == 0 {
        return Err(ModelError::AllPadding);
    }
    let mut total = 0.0;
    for pair in batch {
        let logits = forward(params, &pair.src, &pair.decoder_input())?;
        let (nll, _, _) = nll_with_grad(&logits, &pair.labels(), PAD_ID, 0.0)?;
        total += nll;
    }
    Ok(total / tokens as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;
    use ndarray::array;

    #[test]
    fn uniform_logits_give_log_vocab() {
        let logits = Matrix::zeros((3, 7));
        let loss = cross_entropy_loss(&logits, &[1, 4, 6], PAD_ID).unwrap();
        assert!((loss - 7f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn confident_correct_logits_approach_zero() {
        let logits = array![[0.0, 1000.0, 0.0]];
        assert!(cross_entropy_loss(&logits, &[1], PAD_ID).unwrap() < 1e-12);
    }

    #[test]
    fn two_class_hand_case() {
        // softmax([0, ln 3]) = [1/4, 3/4]; -ln(3/4) = ln(4/3)
        let logits = array![[0.0, 3f64.ln()]];
        let loss = cross_entropy_loss(&logits, &[1], 99).unwrap();
        assert!((loss - (4.0f64 / 3.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn pad_positions_are_ignored() {
        let logits = array![[0.0, 3f64.ln()], [5.0, -5.0]];
        let loss = cross_entropy_loss(&logits, &[1, PAD_ID], PAD_ID).unwrap();
        assert!((loss - (4.0f64 / 3.0).ln()).abs() < 1e-15);
        assert!(matches!(
            cross_entropy_loss(&logits, &[PAD_ID, PAD_ID], PAD_ID),
            Err(ModelError::AllPadding)
        ));
    }

    #[test]
    fn forward_shape_and_determinism() {
        let cfg = ModelConfig::tiny(12);
        let p = Parameters::init(&cfg, 5);
        let a = forward(&p, &[4, 5, 6], &[BOS_ID, 7, 8]).unwrap();
        let b = forward(&p, &[4, 5, 6], &[BOS_ID, 7, 8]).unwrap();
        assert_eq!(a.dim(), (3, 12));
        assert_eq!(a, b);
    }

    #[test]
    fn too_long_sequences_are_rejected() {
        let cfg = ModelConfig::tiny(12);
        let p = Parameters::init(&cfg, 5);
        let long = vec![4; cfg.max_len + 1];
        assert!(matches!(
            forward(&p, &long, &[BOS_ID]),
            Err(ModelError::SequenceTooLong { .. })
        ));
        assert!(forward(&p, &[4], &[12]).is_err());
    }

    #[test]
    fn source_padding_does_not_change_logits() {
        let cfg = ModelConfig::tiny(12);
        let p = Parameters::init(&cfg, 5);
        let plain = forward(&p, &[4, 5, 6], &[BOS_ID, 7]).unwrap();
        let padded = forward(&p, &[4, 5, 6, PAD_ID, PAD_ID], &[BOS_ID, 7]).unwrap();
        for (a, b) in plain.iter().zip(padded.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cross_attention_ignores_padded_keys() {
        let cfg = ModelConfig::tiny(12);
        let p = Parameters::init(&cfg, 5);
        let (_, cache) = forward_with_cache(&p, &[4, 5, PAD_ID, PAD_ID], &[BOS_ID, 7, 8], &mut Mode::Eval).unwrap();
        for h in 0..cfg.n_heads {
            let w = cache.cross_weights(h).unwrap();
            assert_eq!(w.dim(), (3, 4));
            for row in w.rows() {
                assert_eq!((row[2], row[3]), (0.0, 0.0));
                assert!((row.sum() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn padded_source_rows_get_no_gradient() {
        let cfg = ModelConfig::tiny(12);
        let p = Parameters::init(&cfg, 5);
        let batch = [EncodedPair {
            src: vec![4, 5, PAD_ID],
            tgt: vec![6, 7],
        }];
        let (_, grads) = loss_and_gradients(&p, &batch).unwrap();
        assert!(grads.src_embedding.row(PAD_ID).iter().all(|&g| g == 0.0));
        assert!(grads.src_embedding.row(4).iter().any(|&g| g != 0.0));
    }

    #[test]
    fn zero_loss_gives_zero_gradients() {
        // one real class besides the specials can't be reached: put all the
        // mass on EOS with a huge bias and ask only for EOS
        let mut cfg = ModelConfig::tiny(5);
        cfg.tgt_vocab_size = 3;
        let mut p = Parameters::init(&cfg, 1);
        p.out_proj.fill(0.0);
        p.out_bias[[0, EOS_ID]] = 1e4;
        let batch = [EncodedPair {
            src: vec![4],
            tgt: vec![],
        }];
        let (loss, grads) = loss_and_gradients(&p, &batch).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grads.named_tensors().iter().all(|(_, m)| m.iter().all(|&g| g == 0.0)));
    }
}
