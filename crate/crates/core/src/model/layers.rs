//! Dense building blocks with hand-written backward passes.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, Axis, Zip};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::params::{FeedForwardParams, LayerNormParams, Matrix};

pub(crate) const LN_EPS: f64 = 1e-5;

/// `x W + b`, with `b` broadcast over rows.
pub(crate) fn affine(x: &Matrix, w: &Matrix, b: Option<&Matrix>) -> Matrix {
    let mut y = x.dot(w);
    if let Some(b) = b {
        y += &b.row(0);
    }
    y
}

/// Accumulates `dW += xᵀ dy` (and `db += Σ dy`) and returns `dy Wᵀ`.
pub(crate) fn affine_backward(
    x: &Matrix,
    w: &Matrix,
    dy: &Matrix,
    dw: &mut Matrix,
    db: Option<&mut Matrix>,
) -> Matrix {
    general_mat_mul(1.0, &x.t(), dy, 1.0, dw);
    if let Some(db) = db {
        let mut row = db.row_mut(0);
        row += &dy.sum_axis(Axis(0));
    }
    dy.dot(&w.t())
}

pub(crate) struct LayerNormCache {
    xhat: Matrix,
    inv_std: Vec<f64>,
}

pub(crate) fn layer_norm(x: &Matrix, p: &LayerNormParams) -> (Matrix, LayerNormCache) {
    let n = x.ncols() as f64;
    let mut xhat = x.clone();
    let mut inv_std = Vec::with_capacity(x.nrows());
    for mut row in xhat.rows_mut() {
        let mean = row.sum() / n;
        row.mapv_inplace(|v| v - mean);
        let var = row.iter().map(|v| v * v).sum::<f64>() / n;
        let s = 1.0 / (var + LN_EPS).sqrt();
        row.mapv_inplace(|v| v * s);
        inv_std.push(s);
    }
    let mut y = &xhat * &p.gamma.row(0);
    y += &p.beta.row(0);
    (y, LayerNormCache { xhat, inv_std })
}

pub(crate) fn layer_norm_backward(
    dy: &Matrix,
    cache: &LayerNormCache,
    p: &LayerNormParams,
    grads: &mut LayerNormParams,
) -> Matrix {
    {
        let mut dgamma = grads.gamma.row_mut(0);
        dgamma += &(dy * &cache.xhat).sum_axis(Axis(0));
        let mut dbeta = grads.beta.row_mut(0);
        dbeta += &dy.sum_axis(Axis(0));
    }
    let dxhat = dy * &p.gamma.row(0);
    let n = dy.ncols() as f64;
    let mut dx = Array2::zeros(dy.raw_dim());
    for (i, mut out) in dx.rows_mut().into_iter().enumerate() {
        let g = dxhat.row(i);
        let xh = cache.xhat.row(i);
        let sum_g = g.sum();
        let sum_gx = g.dot(&xh);
        let s = cache.inv_std[i];
        Zip::from(&mut out)
            .and(&g)
            .and(&xh)
            .for_each(|o, &gv, &xv| *o = s / n * (n * gv - sum_g - xv * sum_gx));
    }
    dx
}

pub(crate) struct FeedForwardCache {
    x: Matrix,
    hidden: Matrix,
}

pub(crate) fn feed_forward(x: &Matrix, p: &FeedForwardParams) -> (Matrix, FeedForwardCache) {
    let mut hidden = affine(x, &p.w1, Some(&p.b1));
    hidden.mapv_inplace(|v| v.max(0.0));
    let out = affine(&hidden, &p.w2, Some(&p.b2));
    (
        out,
        FeedForwardCache {
            x: x.clone(),
            hidden,
        },
    )
}

pub(crate) fn feed_forward_backward(
    dy: &Matrix,
    cache: &FeedForwardCache,
    p: &FeedForwardParams,
    grads: &mut FeedForwardParams,
) -> Matrix {
    let mut dh = affine_backward(&cache.hidden, &p.w2, dy, &mut grads.w2, Some(&mut grads.b2));
    Zip::from(&mut dh)
        .and(&cache.hidden)
        .for_each(|d, &h| if h <= 0.0 { *d = 0.0 });
    affine_backward(&cache.x, &p.w1, &dh, &mut grads.w1, Some(&mut grads.b1))
}

/// Inverted dropout. Returns the scaled keep-mask so the backward pass can
/// reuse it; `None` means the identity (eval mode or `p == 0`).
pub(crate) fn dropout(x: &mut Matrix, p: f64, rng: Option<&mut ChaCha8Rng>) -> Option<Matrix> {
    let rng = rng?;
    if p <= 0.0 {
        return None;
    }
    let keep = 1.0 / (1.0 - p);
    let mask = x.map(|_| if rng.random::<f64>() < p { 0.0 } else { keep });
    *x *= &mask;
    Some(mask)
}

pub(crate) fn dropout_backward(dy: &mut Matrix, mask: &Option<Matrix>) {
    if let Some(m) = mask {
        *dy *= m;
    }
}
