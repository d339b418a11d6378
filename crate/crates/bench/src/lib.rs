//! Shared inputs for the benchmarks.

use mwp_core::dataset::generate_synthetic;
use mwp_core::model::{build_vocabs, encode_records, EncodedPair, ModelConfig, Parameters};
use mwp_core::{ClassProfile, MwpRecord, Vocab};

pub struct Fixture {
    pub records: Vec<MwpRecord>,
    pub src_vocab: Vocab,
    pub tgt_vocab: Vocab,
    pub pairs: Vec<EncodedPair>,
    pub params: Parameters,
}

/// Synthetic corpus of `n` records plus a freshly initialised desk-sized model.
pub fn fixture(n: usize) -> Fixture {
    let records = generate_synthetic(n, 0, &ClassProfile::standard_mix());
    let (src_vocab, tgt_vocab) = build_vocabs(&records, 1);
    let cfg = ModelConfig::desk(src_vocab.len(), tgt_vocab.len());
    let pairs = encode_records(&records, &src_vocab, &tgt_vocab, cfg.max_len);
    let params = Parameters::init(&cfg, 0);
    Fixture {
        records,
        src_vocab,
        tgt_vocab,
        pairs,
        params,
    }
}
