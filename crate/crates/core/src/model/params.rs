//! Weight containers. Every tensor is stored as a 2-D array (biases and
//! layer-norm vectors are single rows) so optimizers and checkpoints can
//! walk them uniformly.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ModelConfig;

pub type Matrix = Array2<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    /// Per-head projections, each `d_model x d_k`.
    pub w_q: Vec<Matrix>,
    pub w_k: Vec<Matrix>,
    pub w_v: Vec<Matrix>,
    /// Shared output projection, `d_model x d_model`.
    pub w_o: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedForwardParams {
    pub w1: Matrix,
    pub b1: Matrix,
    pub w2: Matrix,
    pub b2: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNormParams {
    pub gamma: Matrix,
    pub beta: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderLayerParams {
    pub self_attn: AttentionParams,
    pub ln1: LayerNormParams,
    pub ffn: FeedForwardParams,
    pub ln2: LayerNormParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderLayerParams {
    pub self_attn: AttentionParams,
    pub ln1: LayerNormParams,
    pub cross_attn: AttentionParams,
    pub ln2: LayerNormParams,
    pub ffn: FeedForwardParams,
    pub ln3: LayerNormParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub config: ModelConfig,
    pub src_embedding: Matrix,
    pub tgt_embedding: Matrix,
    pub encoder: Vec<EncoderLayerParams>,
    pub decoder: Vec<DecoderLayerParams>,
    pub out_proj: Matrix,
    pub out_bias: Matrix,
}

type Named<'a> = Vec<(String, &'a Matrix)>;
type NamedMut<'a> = Vec<(String, &'a mut Matrix)>;

impl AttentionParams {
    fn zeros(cfg: &ModelConfig) -> Self {
        let d = cfg.d_model;
        let head = || (0..cfg.n_heads).map(|_| Matrix::zeros((d, cfg.d_k()))).collect();
        AttentionParams {
            w_q: head(),
            w_k: head(),
            w_v: head(),
            w_o: Matrix::zeros((d, d)),
        }
    }

    fn collect<'a>(&'a self, prefix: &str, out: &mut Named<'a>) {
        for (name, heads) in [("w_q", &self.w_q), ("w_k", &self.w_k), ("w_v", &self.w_v)] {
            for (h, m) in heads.iter().enumerate() {
                out.push((format!("{prefix}.{name}.{h}"), m));
            }
        }
        out.push((format!("{prefix}.w_o"), &self.w_o));
    }

    fn collect_mut<'a>(&'a mut self, prefix: &str, out: &mut NamedMut<'a>) {
        for (name, heads) in [("w_q", &mut self.w_q), ("w_k", &mut self.w_k), ("w_v", &mut self.w_v)] {
            for (h, m) in heads.iter_mut().enumerate() {
                out.push((format!("{prefix}.{name}.{h}"), m));
            }
        }
        out.push((format!("{prefix}.w_o"), &mut self.w_o));
    }
}

impl FeedForwardParams {
    fn zeros(cfg: &ModelConfig) -> Self {
        FeedForwardParams {
            w1: Matrix::zeros((cfg.d_model, cfg.d_ff)),
            b1: Matrix::zeros((1, cfg.d_ff)),
            w2: Matrix::zeros((cfg.d_ff, cfg.d_model)),
            b2: Matrix::zeros((1, cfg.d_model)),
        }
    }

    fn collect<'a>(&'a self, prefix: &str, out: &mut Named<'a>) {
        out.push((format!("{prefix}.w1"), &self.w1));
        out.push((format!("{prefix}.b1"), &self.b1));
        out.push((format!("{prefix}.w2"), &self.w2));
        out.push((format!("{prefix}.b2"), &self.b2));
    }

    fn collect_mut<'a>(&'a mut self, prefix: &str, out: &mut NamedMut<'a>) {
        out.push((format!("{prefix}.w1"), &mut self.w1));
        out.push((format!("{prefix}.b1"), &mut self.b1));
        out.push((format!("{prefix}.w2"), &mut self.w2));
        out.push((format!("{prefix}.b2"), &mut self.b2));
    }
}

impl LayerNormParams {
    fn zeros(cfg: &ModelConfig) -> Self {
        LayerNormParams {
            gamma: Matrix::zeros((1, cfg.d_model)),
            beta: Matrix::zeros((1, cfg.d_model)),
        }
    }

    fn collect<'a>(&'a self, prefix: &str, out: &mut Named<'a>) {
        out.push((format!("{prefix}.gamma"), &self.gamma));
        out.push((format!("{prefix}.beta"), &self.beta));
    }

    fn collect_mut<'a>(&'a mut self, prefix: &str, out: &mut NamedMut<'a>) {
        out.push((format!("{prefix}.gamma"), &mut self.gamma));
        out.push((format!("{prefix}.beta"), &mut self.beta));
    }
}

impl Parameters {
    /// Same shapes as `cfg`, every entry zero.
    pub fn zeros(cfg: &ModelConfig) -> Self {
        Parameters {
            config: cfg.clone(),
            src_embedding: Matrix::zeros((cfg.src_vocab_size, cfg.d_model)),
            tgt_embedding: Matrix::zeros((cfg.tgt_vocab_size, cfg.d_model)),
            encoder: (0..cfg.n_enc_layers)
                .map(|_| EncoderLayerParams {
                    self_attn: AttentionParams::zeros(cfg),
                    ln1: LayerNormParams::zeros(cfg),
                    ffn: FeedForwardParams::zeros(cfg),
                    ln2: LayerNormParams::zeros(cfg),
                })
                .collect(),
            decoder: (0..cfg.n_dec_layers)
                .map(|_| DecoderLayerParams {
                    self_attn: AttentionParams::zeros(cfg),
                    ln1: LayerNormParams::zeros(cfg),
                    cross_attn: AttentionParams::zeros(cfg),
                    ln2: LayerNormParams::zeros(cfg),
                    ffn: FeedForwardParams::zeros(cfg),
                    ln3: LayerNormParams::zeros(cfg),
                })
                .collect(),
            out_proj: Matrix::zeros((cfg.d_model, cfg.tgt_vocab_size)),
            out_bias: Matrix::zeros((1, cfg.tgt_vocab_size)),
        }
    }

    /// Glorot-uniform weights, zero biases, unit layer-norm scales.
    /// Attention projections use the fan of the full `d_model x d_model` map.
    pub fn init(cfg: &ModelConfig, seed: u64) -> Self {
        let mut params = Parameters::zeros(cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = cfg.d_model;
        for (name, m) in params.named_tensors_mut() {
            let leaf = name.rsplit('.').find(|s| s.parse::<usize>().is_err()).unwrap_or("");
            match leaf {
                "gamma" => m.fill(1.0),
                "beta" | "b1" | "b2" | "out_bias" => {}
                _ => {
                    let (fan_in, fan_out) = match leaf {
                        "w_q" | "w_k" | "w_v" => (d, d),
                        _ => m.dim(),
                    };
                    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                    m.mapv_inplace(|_| rng.random_range(-limit..limit));
                }
            }
        }
        params
    }

    /// Every tensor with a stable dotted name, in a fixed order.
    pub fn named_tensors(&self) -> Vec<(String, &Matrix)> {
        let mut out = vec![
            ("src_embedding".to_string(), &self.src_embedding),
            ("tgt_embedding".to_string(), &self.tgt_embedding),
        ];
        for (i, layer) in self.encoder.iter().enumerate() {
            let p = format!("encoder.{i}");
            layer.self_attn.collect(&format!("{p}.self_attn"), &mut out);
            layer.ln1.collect(&format!("{p}.ln1"), &mut out);
            layer.ffn.collect(&format!("{p}.ffn"), &mut out);
            layer.ln2.collect(&format!("{p}.ln2"), &mut out);
        }
        for (i, layer) in self.decoder.iter().enumerate() {
            let p = format!("decoder.{i}");
            layer.self_attn.collect(&format!("{p}.self_attn"), &mut out);
            layer.ln1.collect(&format!("{p}.ln1"), &mut out);
            layer.cross_attn.collect(&format!("{p}.cross_attn"), &mut out);
            layer.ln2.collect(&format!("{p}.ln2"), &mut out);
            layer.ffn.collect(&format!("{p}.ffn"), &mut out);
            layer.ln3.collect(&format!("{p}.ln3"), &mut out);
        }
        out.push(("out_proj".to_string(), &self.out_proj));
        out.push(("out_bias".to_string(), &self.out_bias));
        out
    }

    pub fn named_tensors_mut(&mut self) -> Vec<(String, &mut Matrix)> {
        let mut out = vec![
            ("src_embedding".to_string(), &mut self.src_embedding),
            ("tgt_embedding".to_string(), &mut self.tgt_embedding),
        ];
        for (i, layer) in self.encoder.iter_mut().enumerate() {
            let p = format!("encoder.{i}");
            layer.self_attn.collect_mut(&format!("{p}.self_attn"), &mut out);
            layer.ln1.collect_mut(&format!("{p}.ln1"), &mut out);
            layer.ffn.collect_mut(&format!("{p}.ffn"), &mut out);
            layer.ln2.collect_mut(&format!("{p}.ln2"), &mut out);
        }
        for (i, layer) in self.decoder.iter_mut().enumerate() {
            let p = format!("decoder.{i}");
            layer.self_attn.collect_mut(&format!("{p}.self_attn"), &mut out);
            layer.ln1.collect_mut(&format!("{p}.ln1"), &mut out);
            layer.cross_attn.collect_mut(&format!("{p}.cross_attn"), &mut out);
            layer.ln2.collect_mut(&format!("{p}.ln2"), &mut out);
            layer.ffn.collect_mut(&format!("{p}.ffn"), &mut out);
            layer.ln3.collect_mut(&format!("{p}.ln3"), &mut out);
        }
        out.push(("out_proj".to_string(), &mut self.out_proj));
        out.push(("out_bias".to_string(), &mut self.out_bias));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        self.named_tensors_mut().into_iter().map(|(_, m)| m).collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.named_tensors().iter().map(|(_, m)| m.len()).sum()
    }

    pub fn global_norm(&self) -> f64 {
        self.named_tensors()
            .iter()
            .map(|(_, m)| m.iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for m in self.tensors_mut() {
            m.mapv_inplace(|v| v * factor);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.named_tensors()
            .iter()
            .all(|(_, m)| m.iter().all(|v| v.is_finite()))
    }
}
