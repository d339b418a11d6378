//! Glue between records, vocabularies and the transformer.

use std::thread;

use super::checkpoint::Checkpoint;
use super::decode::{beam_decode, greedy_decode};
use super::params::Parameters;
use super::transformer::EncodedPair;
use super::ModelError;
use crate::dataset::MwpRecord;
use crate::equation::{parse_equation, to_canonical_string};
use crate::preprocess::{build_vocab, decode, encode, tokenize, TokenSequence, Vocab};

/// Target-side tokens: the canonical form when the equation parses, the raw
/// text otherwise.
pub fn equation_tokens(equation_text: &str) -> TokenSequence {
    match parse_equation(equation_text) {
        Ok(eq) => tokenize(&to_canonical_string(&eq)),
        Err(_) => tokenize(equation_text),
    }
}

/// Source and target vocabularies over a training corpus.
pub fn build_vocabs(records: &[MwpRecord], min_freq: usize) -> (Vocab, Vocab) {
    let src: Vec<TokenSequence> = records.iter().map(|r| tokenize(&r.problem_text)).collect();
    let tgt: Vec<TokenSequence> = records.iter().map(|r| equation_tokens(&r.equation_text)).collect();
    (build_vocab(&src, min_freq), build_vocab(&tgt, min_freq))
}

/// Encodes a record, truncating to what a model with `max_len` accepts.
pub fn encode_record(rec: &MwpRecord, src_vocab: &Vocab, tgt_vocab: &Vocab, max_len: usize) -> EncodedPair {
    let mut src = encode(&tokenize(&rec.problem_text), src_vocab, false);
    let mut tgt = encode(&equation_tokens(&rec.equation_text), tgt_vocab, false);
    src.truncate(max_len);
    tgt.truncate(max_len.saturating_sub(1));
    EncodedPair { src, tgt }
}

pub fn encode_records(records: &[MwpRecord], src_vocab: &Vocab, tgt_vocab: &Vocab, max_len: usize) -> Vec<EncodedPair> {
    records
        .iter()
        .map(|r| encode_record(r, src_vocab, tgt_vocab, max_len))
        .collect()
}

/// A trained model with its vocabularies, turning problem text into
/// equation text.
#[derive(Debug, Clone)]
pub struct EquationPredictor {
    pub params: Parameters,
    pub src_vocab: Vocab,
    pub tgt_vocab: Vocab,
}

impl From<Checkpoint> for EquationPredictor {
    fn from(ck: Checkpoint) -> Self {
        EquationPredictor {
            params: ck.params,
            src_vocab: ck.src_vocab,
            tgt_vocab: ck.tgt_vocab,
        }
    }
}

impl EquationPredictor {
    /// Decodes one problem; `beam <= 1` is greedy.
    pub fn predict(&self, problem: &str, beam: usize) -> Result<String, ModelError> {
        let max_len = self.params.config.max_len;
        let mut src = encode(&tokenize(problem), &self.src_vocab, false);
        src.truncate(max_len);
        let out_len = max_len.saturating_sub(1);
        let ids = if beam <= 1 {
            greedy_decode(&self.params, &src, out_len)?
        } else {
            beam_decode(&self.params, &src, beam, out_len)?
        };
        let seq = decode(&ids, &self.tgt_vocab, true).map_err(ModelError::Vocab)?;
        Ok(seq.joined())
    }

    /// Predictions in input order, spread over up to `threads` workers.
    pub fn predict_all(&self, problems: &[&str], beam: usize, threads: usize) -> Result<Vec<String>, ModelError> {
        let threads = threads.max(1);
        if threads == 1 || problems.len() < 2 {
            return problems.iter().map(|p| self.predict(p, beam)).collect();
        }
        let chunk = problems.len().div_ceil(threads);
        thread::scope(|s| {
            let handles: Vec<_> = problems
                .chunks(chunk)
                .map(|part| s.spawn(move || part.iter().map(|p| self.predict(p, beam)).collect::<Vec<_>>()))
                .collect();
            let mut out = Vec::with_capacity(problems.len());
            for h in handles {
                for r in h.join().expect("prediction worker panicked") {
                    out.push(r?);
                }
            }
            Ok(out)
        })
    }
}
