//! Scaled dot-product and multi-head attention, masks and positional
//! encodings.

use ndarray::{concatenate, s, Array2, ArrayView2, Axis};

use super::layers::{affine, affine_backward};
use super::params::{AttentionParams, Matrix};
use super::ModelError;

/// Single-head attention result. `weights` is queries x keys; every row is a
/// probability distribution, or all zeros when the row is fully masked.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionOutput {
    pub output: Matrix,
    pub weights: Matrix,
}

/// Row-wise softmax restricted to allowed positions. Masked entries get
/// weight exactly zero; rows with no allowed entry become all zero.
pub(crate) fn masked_softmax(scores: &mut Matrix, mask: Option<&Array2<bool>>) {
    for (i, mut row) in scores.rows_mut().into_iter().enumerate() {
        let allowed = |j: usize| mask.is_none_or(|m| m[[i, j]]);
        let max = row
            .iter()
            .enumerate()
            .filter(|&(j, _)| allowed(j))
            .map(|(_, &v)| v)
            .fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            row.fill(0.0);
            continue;
        }
        let mut total = 0.0;
        for (j, v) in row.iter_mut().enumerate() {
            *v = if allowed(j) { (*v - max).exp() } else { 0.0 };
            total += *v;
        }
        row.mapv_inplace(|v| v / total);
    }
}

pub fn scaled_dot_attention(
    q: ArrayView2<f64>,
    k: ArrayView2<f64>,
    v: ArrayView2<f64>,
    mask: Option<&Array2<bool>>,
) -> Result<AttentionOutput, ModelError> {
    if q.ncols() != k.ncols() {
        return Err(ModelError::shape(format!(
            "query width {} != key width {}",
            q.ncols(),
            k.ncols()
        )));
    }
    if k.nrows() != v.nrows() {
        return Err(ModelError::shape(format!(
            "{} keys but {} values",
            k.nrows(),
            v.nrows()
        )));
    }
    if let Some(m) = mask {
        if m.dim() != (q.nrows(), k.nrows()) {
            return Err(ModelError::shape(format!(
                "mask {:?} does not match {}x{} scores",
                m.dim(),
                q.nrows(),
                k.nrows()
            )));
        }
    }
    let scale = 1.0 / (q.ncols() as f64).sqrt();
    let mut weights = q.dot(&k.t());
    weights.mapv_inplace(|x| x * scale);
    masked_softmax(&mut weights, mask);
    let output = weights.dot(&v);
    Ok(AttentionOutput { output, weights })
}

pub(crate) struct HeadCache {
    q: Matrix,
    k: Matrix,
    v: Matrix,
    weights: Matrix,
}

pub(crate) struct MultiHeadCache {
    x_q: Matrix,
    x_kv: Matrix,
    heads: Vec<HeadCache>,
    concat: Matrix,
}

impl MultiHeadCache {
    /// Attention weights of head `h` (queries x keys).
    #[cfg(test)]
    pub(crate) fn weights(&self, h: usize) -> &Matrix {
        &self.heads[h].weights
    }
}

pub(crate) fn multi_head_forward(
    x_q: &Matrix,
    x_kv: &Matrix,
    p: &AttentionParams,
    mask: Option<&Array2<bool>>,
) -> Result<(Matrix, MultiHeadCache), ModelError> {
    let d_model = p.w_o.nrows();
    if x_q.ncols() != d_model || x_kv.ncols() != d_model {
        return Err(ModelError::shape(format!(
            "attention inputs must be {d_model} wide, got {} and {}",
            x_q.ncols(),
            x_kv.ncols()
        )));
    }
    let mut heads = Vec::with_capacity(p.w_q.len());
    let mut outputs = Vec::with_capacity(p.w_q.len());
    for h in 0..p.w_q.len() {
        let q = affine(x_q, &p.w_q[h], None);
        let k = affine(x_kv, &p.w_k[h], None);
        let v = affine(x_kv, &p.w_v[h], None);
        let att = scaled_dot_attention(q.view(), k.view(), v.view(), mask)?;
        outputs.push(att.output);
        heads.push(HeadCache {
            q,
            k,
            v,
            weights: att.weights,
        });
    }
    let views: Vec<_> = outputs.iter().map(|o| o.view()).collect();
    let concat = concatenate(Axis(1), &views).expect("head outputs share a row count");
    let out = concat.dot(&p.w_o);
    Ok((
        out,
        MultiHeadCache {
            x_q: x_q.clone(),
            x_kv: x_kv.clone(),
            heads,
            concat,
        },
    ))
}

/// Returns gradients for the query-side and key/value-side inputs.
pub(crate) fn multi_head_backward(
    d_out: &Matrix,
    cache: &MultiHeadCache,
    p: &AttentionParams,
    grads: &mut AttentionParams,
) -> (Matrix, Matrix) {
    let d_concat = affine_backward(&cache.concat, &p.w_o, d_out, &mut grads.w_o, None);
    let d_k = p.w_q[0].ncols();
    let scale = 1.0 / (d_k as f64).sqrt();
    let mut dx_q = Matrix::zeros(cache.x_q.raw_dim());
    let mut dx_kv = Matrix::zeros(cache.x_kv.raw_dim());
    for (h, head) in cache.heads.iter().enumerate() {
        let d_head = d_concat.slice(s![.., h * d_k..(h + 1) * d_k]).to_owned();
        let d_weights = d_head.dot(&head.v.t());
        let d_v = head.weights.t().dot(&d_head);
        // softmax Jacobian, row by row; masked entries have zero weight
        let mut d_scores = &head.weights * &d_weights;
        for (mut row, w_row) in d_scores.rows_mut().into_iter().zip(head.weights.rows()) {
            let dot = row.sum();
            row.zip_mut_with(&w_row, |d, &w| *d -= w * dot);
        }
        d_scores.mapv_inplace(|x| x * scale);
        let d_q = d_scores.dot(&head.k);
        let d_kmat = d_scores.t().dot(&head.q);
        dx_q += &affine_backward(&cache.x_q, &p.w_q[h], &d_q, &mut grads.w_q[h], None);
        dx_kv += &affine_backward(&cache.x_kv, &p.w_k[h], &d_kmat, &mut grads.w_k[h], None);
        dx_kv += &affine_backward(&cache.x_kv, &p.w_v[h], &d_v, &mut grads.w_v[h], None);
    }
    (dx_q, dx_kv)
}

/// Eval-only multi-head attention.
pub fn multi_head_attention(
    x_q: &Matrix,
    x_kv: &Matrix,
    p: &AttentionParams,
    mask: Option<&Array2<bool>>,
) -> Result<Matrix, ModelError> {
    multi_head_forward(x_q, x_kv, p, mask).map(|(out, _)| out)
}

/// Sinusoidal encodings: `sin(pos / 10000^(2i/d))` in even columns and the
/// matching cosine in odd columns.
pub fn positional_encoding(max_len: usize, d_model: usize) -> Result<Matrix, ModelError> {
    if d_model % 2 != 0 {
        return Err(ModelError::OddModelWidth(d_model));
    }
    Ok(Matrix::from_shape_fn((max_len, d_model), |(pos, col)| {
        let i = (col / 2) as f64;
        let angle = pos as f64 / 10000f64.powf(2.0 * i / d_model as f64);
        if col % 2 == 0 {
            angle.sin()
        } else {
            angle.cos()
        }
    }))
}

/// `m[i][j]` is true iff position `i` may attend to `j <= i`.
pub fn causal_mask(len: usize) -> Array2<bool> {
    Array2::from_shape_fn((len, len), |(i, j)| j <= i)
}

/// True for positions that stay visible as keys.
pub fn padding_mask(ids: &[usize], pad_id: usize) -> Vec<bool> {
    ids.iter().map(|&id| id != pad_id).collect()
}

/// Broadcasts a key mask over `n_queries` rows, optionally combined with a
/// causal constraint.
pub(crate) fn key_mask(n_queries: usize, keys: &[bool], causal: bool) -> Array2<bool> {
    Array2::from_shape_fn((n_queries, keys.len()), |(i, j)| keys[j] && (!causal || j <= i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn single_key_returns_value_row() {
        let q = array![[0.3, -1.2], [5.0, 2.0]];
        let k = array![[1.0, 1.0]];
        let v = array![[4.0, -7.5]];
        let out = scaled_dot_attention(q.view(), k.view(), v.view(), None).unwrap();
        assert_eq!(out.weights, array![[1.0], [1.0]]);
        assert_eq!(out.output, array![[4.0, -7.5], [4.0, -7.5]]);
    }

    #[test]
    fn zero_scores_give_column_mean() {
        let q = array![[0.0, 0.0]];
        let k = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let v = array![[1.0, 0.0], [2.0, 3.0], [6.0, 3.0]];
        let out = scaled_dot_attention(q.view(), k.view(), v.view(), None).unwrap();
        for &w in out.weights.iter() {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!((out.output[[0, 0]] - 3.0).abs() < 1e-12);
        assert!((out.output[[0, 1]] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn hand_computed_two_key_case() {
        // scores [1/sqrt2, 0]; softmax by hand
        let q = array![[1.0, 0.0]];
        let eye = array![[1.0, 0.0], [0.0, 1.0]];
        let out = scaled_dot_attention(q.view(), eye.view(), eye.view(), None).unwrap();
        let a = (1.0f64 / 2f64.sqrt()).exp();
        let w0 = a / (a + 1.0);
        let w1 = 1.0 / (a + 1.0);
        assert!((out.weights[[0, 0]] - w0).abs() < 1e-15);
        assert!((out.weights[[0, 1]] - w1).abs() < 1e-15);
        assert!((out.output[[0, 0]] - w0).abs() < 1e-15);
        assert!((out.output[[0, 1]] - w1).abs() < 1e-15);
        assert!((w0 - 0.669_761_549_3).abs() < 1e-9);
    }

    #[test]
    fn fully_masked_rows_are_zero() {
        let q = array![[1.0, 0.0], [0.0, 1.0]];
        let mask = array![[true, false], [false, false]];
        let out = scaled_dot_attention(q.view(), q.view(), q.view(), Some(&mask)).unwrap();
        assert_eq!(out.weights.row(1).to_vec(), vec![0.0, 0.0]);
        assert_eq!(out.output.row(1).to_vec(), vec![0.0, 0.0]);
        assert_eq!(out.weights[[0, 0]], 1.0);
    }

    #[test]
    fn shape_errors() {
        let a = Array2::<f64>::zeros((2, 3));
        let b = Array2::<f64>::zeros((2, 4));
        assert!(scaled_dot_attention(a.view(), b.view(), b.view(), None).is_err());
        let c = Array2::<f64>::zeros((3, 3));
        assert!(scaled_dot_attention(a.view(), a.view(), c.view(), None).is_err());
        let m = Array2::from_elem((3, 3), true);
        assert!(scaled_dot_attention(a.view(), a.view(), a.view(), Some(&m)).is_err());
    }

    #[test]
    fn identity_single_head_reduces_to_attention() {
        let eye = Matrix::eye(4);
        let p = AttentionParams {
            w_q: vec![eye.clone()],
            w_k: vec![eye.clone()],
            w_v: vec![eye.clone()],
            w_o: eye,
        };
        let x = array![[0.1, 0.2, -0.3, 0.4], [1.0, -1.0, 0.5, 0.0], [0.3, 0.3, 0.3, 0.3]];
        let mha = multi_head_attention(&x, &x, &p, None).unwrap();
        let single = scaled_dot_attention(x.view(), x.view(), x.view(), None).unwrap();
        assert_eq!(mha, single.output);
    }

    #[test]
    fn positional_encoding_values() {
        let pe = positional_encoding(5, 6).unwrap();
        for c in 0..6 {
            assert_eq!(pe[[0, c]], if c % 2 == 0 { 0.0 } else { 1.0 });
        }
        assert!((pe[[1, 0]] - 0.841_470_984_807_896_5).abs() < 1e-15);
        assert!(pe.iter().all(|v| (-1.0..=1.0).contains(v)));
        assert!(matches!(positional_encoding(4, 7), Err(ModelError::OddModelWidth(7))));
    }

    #[test]
    fn masks() {
        assert_eq!(causal_mask(1), array![[true]]);
        assert_eq!(
            causal_mask(3),
            array![[true, false, false], [true, true, false], [true, true, true]]
        );
        assert_eq!(padding_mask(&[5, 5, 0], 0), vec![true, true, false]);
    }
}
