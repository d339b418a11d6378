//! Autoregressive decoding: greedy and length-normalized beam search over
//! any next-token scorer.

use std::cmp::Ordering;

use super::params::{Matrix, Parameters};
use super::transformer::{decoder_logits, encode_source, log_softmax_row};
use super::ModelError;
use crate::preprocess::{BOS_ID, EOS_ID};

/// Next-token log-probabilities given the decoded prefix (which starts with
/// BOS).
pub trait StepScorer {
    fn log_probs(&self, prefix: &[usize]) -> Result<Vec<f64>, ModelError>;

    /// Longest prefix the scorer accepts, BOS included.
    fn max_prefix_len(&self) -> usize {
        usize::MAX
    }
}

/// Scores with a transformer, encoding the source once.
pub struct TransformerScorer<'a> {
    params: &'a Parameters,
    src_ids: Vec<usize>,
    memory: Matrix,
}

impl<'a> TransformerScorer<'a> {
    pub fn new(params: &'a Parameters, src_ids: &[usize]) -> Result<Self, ModelError> {
        Ok(TransformerScorer {
            params,
            src_ids: src_ids.to_vec(),
            memory: encode_source(params, src_ids)?,
        })
    }
}

impl StepScorer for TransformerScorer<'_> {
    fn log_probs(&self, prefix: &[usize]) -> Result<Vec<f64>, ModelError> {
        let logits = decoder_logits(self.params, &self.memory, &self.src_ids, prefix)?;
        Ok(log_softmax_row(logits.row(logits.nrows() - 1)))
    }

    fn max_prefix_len(&self) -> usize {
        self.params.config.max_len
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    /// Generated tokens, without BOS or EOS.
    pub tokens: Vec<usize>,
    pub log_prob: f64,
    pub finished: bool,
}

impl Hypothesis {
    /// Log-probability per scored token (EOS counts when present).
    pub fn normalized_score(&self) -> f64 {
        let steps = self.tokens.len() + usize::from(self.finished);
        if steps == 0 {
            0.0
        } else {
            self.log_prob / steps as f64
        }
    }
}

fn argmax_smallest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn step_limit(scorer: &impl StepScorer, max_out_len: usize) -> usize {
    max_out_len.min(scorer.max_prefix_len().saturating_sub(1))
}

/// Appends the arg-max token (smallest id on ties) until EOS or
/// `max_out_len` tokens.
pub fn greedy_search(scorer: &impl StepScorer, max_out_len: usize) -> Result<Hypothesis, ModelError> {
    let mut prefix = vec![BOS_ID];
    let mut log_prob = 0.0;
    for _ in 0..step_limit(scorer, max_out_len) {
        let lp = scorer.log_probs(&prefix)?;
        let next = argmax_smallest(&lp);
        log_prob += lp[next];
        if next == EOS_ID {
            return Ok(Hypothesis {
                tokens: prefix[1..].to_vec(),
                log_prob,
                finished: true,
            });
        }
        prefix.push(next);
    }
    Ok(Hypothesis {
        tokens: prefix[1..].to_vec(),
        log_prob,
        finished: false,
    })
}

struct Candidate {
    score: f64,
    step_lp: f64,
    parent: usize,
    token: usize,
}

/// Beam search. Each step keeps the `beam_width` best extensions by
/// cumulative log-probability; extensions ending in EOS retire to the
/// finished pool. The result maximizes the length-normalized score over
/// finished hypotheses and any still alive at the length limit.
pub fn beam_search(
    scorer: &impl StepScorer,
    beam_width: usize,
    max_out_len: usize,
) -> Result<Hypothesis, ModelError> {
    if beam_width == 0 {
        return Err(ModelError::InvalidConfig("beam width must be at least 1".into()));
    }
    let mut alive = vec![Hypothesis {
        tokens: Vec::new(),
        log_prob: 0.0,
        finished: false,
    }];
    let mut finished = Vec::new();
    for _ in 0..step_limit(scorer, max_out_len) {
        let mut candidates = Vec::new();
        for (parent, hyp) in alive.iter().enumerate() {
            let mut prefix = Vec::with_capacity(hyp.tokens.len() + 1);
            prefix.push(BOS_ID);
            prefix.extend_from_slice(&hyp.tokens);
            for (token, lp) in scorer.log_probs(&prefix)?.into_iter().enumerate() {
                candidates.push(Candidate {
                    score: hyp.log_prob + lp,
                    step_lp: lp,
                    parent,
                    token,
                });
            }
        }
        candidates.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(Ordering::Equal)
                .then(a.parent.cmp(&b.parent))
                .then(b.step_lp.partial_cmp(&a.step_lp).unwrap_or(Ordering::Equal))
                .then(a.token.cmp(&b.token))
        });
        let mut next_alive = Vec::with_capacity(beam_width);
        for c in candidates.into_iter().take(beam_width) {
            let mut tokens = alive[c.parent].tokens.clone();
            if c.token == EOS_ID {
                finished.push(Hypothesis {
                    tokens,
                    log_prob: c.score,
                    finished: true,
                });
            } else {
                tokens.push(c.token);
                next_alive.push(Hypothesis {
                    tokens,
                    log_prob: c.score,
                    finished: false,
                });
            }
        }
        alive = next_alive;
        if alive.is_empty() {
            break;
        }
    }
    finished.extend(alive);
    let mut best: Option<Hypothesis> = None;
    for hyp in finished {
        if best
            .as_ref()
            .is_none_or(|b| hyp.normalized_score() > b.normalized_score())
        {
            best = Some(hyp);
        }
    }
    Ok(best.expect("at least one hypothesis survives"))
}

pub fn greedy_decode(params: &Parameters, src_ids: &[usize], max_out_len: usize) -> Result<Vec<usize>, ModelError> {
    let scorer = TransformerScorer::new(params, src_ids)?;
    greedy_search(&scorer, max_out_len).map(|h| h.tokens)
}

pub fn beam_decode(
    params: &Parameters,
    src_ids: &[usize],
    beam_width: usize,
    max_out_len: usize,
) -> Result<Vec<usize>, ModelError> {
    let scorer = TransformerScorer::new(params, src_ids)?;
    beam_search(&scorer, beam_width, max_out_len).map(|h| h.tokens)
}
