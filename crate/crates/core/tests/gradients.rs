//! Analytic gradients against central finite differences on a tiny model.

use mwp_core::model::{batch_loss, loss_and_gradients, EncodedPair, ModelConfig, Parameters};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPS: f64 = 1e-5;

fn jittered_params(cfg: &ModelConfig, seed: u64) -> Parameters {
    let mut p = Parameters::init(cfg, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfeed);
    // move biases and layer-norm affine terms off their init values
    for (_, m) in p.named_tensors_mut() {
        m.mapv_inplace(|v| v + rng.random_range(-0.1..0.1));
    }
    p
}

fn random_batch(rng: &mut ChaCha8Rng, vocab: usize, n: usize) -> Vec<EncodedPair> {
    (0..n)
        .map(|_| {
            let src_len = rng.random_range(1..=6);
            let tgt_len = rng.random_range(0..=5);
            EncodedPair {
                src: (0..src_len).map(|_| rng.random_range(4..vocab)).collect(),
                tgt: (0..tgt_len).map(|_| rng.random_range(4..vocab)).collect(),
            }
        })
        .collect()
}

/// Per-tensor relative error `|a - n| / max(|a|, |n|)` in the L2 norm, and
/// the worst element-wise error with an absolute floor.
fn check(params: &Parameters, batch: &[EncodedPair]) -> Vec<(String, f64, f64)> {
    let (_, grads) = loss_and_gradients(params, batch).unwrap();
    let analytic: Vec<(String, Vec<f64>)> = grads
        .named_tensors()
        .into_iter()
        .map(|(n, m)| (n, m.iter().copied().collect()))
        .collect();
    let mut probe = params.clone();
    let mut report = Vec::new();
    for (t, (name, a)) in analytic.iter().enumerate() {
        let mut numeric = Vec::with_capacity(a.len());
        for i in 0..a.len() {
            let orig = probe.named_tensors_mut()[t].1.as_slice_mut().unwrap()[i];
            probe.named_tensors_mut()[t].1.as_slice_mut().unwrap()[i] = orig + EPS;
            let up = batch_loss(&probe, batch).unwrap();
            probe.named_tensors_mut()[t].1.as_slice_mut().unwrap()[i] = orig - EPS;
            let down = batch_loss(&probe, batch).unwrap();
            probe.named_tensors_mut()[t].1.as_slice_mut().unwrap()[i] = orig;
            numeric.push((up - down) / (2.0 * EPS));
        }
        let diff: f64 = a.iter().zip(&numeric).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nn = numeric.iter().map(|x| x * x).sum::<f64>().sqrt();
        let rel = if na.max(nn) < 1e-10 { 0.0 } else { diff / na.max(nn) };
        let worst = a
            .iter()
            .zip(&numeric)
            .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-4))
            .fold(0.0, f64::max);
        report.push((name.clone(), rel, worst));
    }
    report
}

#[test]
fn tiny_model_gradients_match_finite_differences() {
    let cfg = ModelConfig::tiny(12);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..3 {
        let params = jittered_params(&cfg, seed);
        let batch = random_batch(&mut rng, 12, 3);
        for (name, rel, worst) in check(&params, &batch) {
            assert!(rel <= 1e-3, "{name}: relative error {rel:e}");
            assert!(worst <= 1e-3, "{name}: element-wise error {worst:e}");
        }
    }
}

#[test]
fn every_tensor_receives_gradient() {
    let cfg = ModelConfig::tiny(12);
    let params = jittered_params(&cfg, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let batch = random_batch(&mut rng, 12, 4);
    let (_, grads) = loss_and_gradients(&params, &batch).unwrap();
    for (name, g) in grads.named_tensors() {
        assert!(g.iter().any(|&v| v != 0.0), "{name} has an all-zero gradient");
    }
}
