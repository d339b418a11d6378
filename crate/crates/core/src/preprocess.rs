//! Text normalization, tokenization and vocabulary handling.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

pub const PAD_ID: usize = 0;
pub const BOS_ID: usize = 1;
pub const EOS_ID: usize = 2;
pub const UNK_ID: usize = 3;

pub const SPECIAL_TOKENS: [&str; 4] = ["<pad>", "<bos>", "<eos>", "<unk>"];

const BENGALI_ZERO: u32 = 0x09E6;
const DANDA: char = '\u{0964}';
const DOUBLE_DANDA: char = '\u{0965}';

/// Characters split off as standalone tokens. `<` and `>` are included so
/// that raw text can never spell a reserved token.
pub fn is_punctuation(c: char) -> bool {
    matches!(
        c,
        DANDA
            | DOUBLE_DANDA
            | ','
            | '?'
            | '.'
            | '!'
            | ':'
            | ';'
            | '('
            | ')'
            | '+'
            | '-'
            | '*'
            | '/'
            | '='
            | '<'
            | '>'
            | '"'
            | '\''
    )
}

pub fn bengali_digit_value(c: char) -> Option<u32> {
    let code = c as u32;
    (BENGALI_ZERO..BENGALI_ZERO + 10)
        .contains(&code)
        .then(|| code - BENGALI_ZERO)
}

fn is_any_digit(c: char) -> bool {
    c.is_ascii_digit() || bengali_digit_value(c).is_some()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DigitDirection {
    BengaliToAscii,
    AsciiToBengali,
}

pub fn normalize_digits(s: &str, direction: DigitDirection) -> String {
    s.chars()
        .map(|c| match direction {
            DigitDirection::BengaliToAscii => match bengali_digit_value(c) {
                Some(d) => char::from_digit(d, 10).unwrap(),
                None => c,
            },
            DigitDirection::AsciiToBengali => match c.to_digit(10) {
                Some(d) if c.is_ascii_digit() => char::from_u32(BENGALI_ZERO + d).unwrap(),
                _ => c,
            },
        })
        .collect()
}

/// Lowercases, trims, collapses whitespace and puts single spaces around
/// punctuation. A period with digits on both sides stays inside the number.
pub fn normalize_text(s: &str) -> String {
    let lowered = s.to_lowercase();
    let chars: Vec<char> = lowered.chars().collect();
    let mut spaced = String::with_capacity(lowered.len() + 8);
    for (i, &c) in chars.iter().enumerate() {
        let decimal_point = c == '.'
            && i > 0
            && is_any_digit(chars[i - 1])
            && chars.get(i + 1).is_some_and(|&n| is_any_digit(n));
        if is_punctuation(c) && !decimal_point {
            spaced.push(' ');
            spaced.push(c);
            spaced.push(' ');
        } else {
            spaced.push(c);
        }
    }
    spaced.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Tokens plus optional ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    pub ids: Option<Vec<usize>>,
}

impl TokenSequence {
    pub fn from_tokens<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Self {
        TokenSequence {
            tokens: tokens.into_iter().map(Into::into).collect(),
            ids: None,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }
}

pub fn tokenize(s: &str) -> TokenSequence {
    TokenSequence::from_tokens(normalize_text(s).split(' ').filter(|t| !t.is_empty()))
}

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("token id {id} out of range for vocabulary of size {size}")]
    IdOutOfRange { id: usize, size: usize },
    #[error("vocabulary file line {line}: expected `{expected}`, found `{found}`")]
    BadSpecialToken {
        line: usize,
        expected: &'static str,
        found: String,
    },
    #[error("vocabulary file line {line}: duplicate or empty token `{token}`")]
    BadToken { line: usize, token: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Bijective token/id mapping. Ids 0..4 are reserved for the special tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    id_to_token: Vec<String>,
    token_to_id: HashMap<String, usize>,
}

impl Default for Vocab {
    fn default() -> Self {
        Self::from_tokens(Vec::<String>::new())
    }
}

impl Vocab {
    /// Builds a vocabulary whose non-reserved ids follow the given order.
    /// Duplicates and reserved strings are skipped.
    pub fn from_tokens<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Self {
        let mut id_to_token: Vec<String> = SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect();
        let mut token_to_id: HashMap<String, usize> = id_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        for tok in tokens {
            let tok = tok.into();
            if tok.is_empty() || token_to_id.contains_key(&tok) {
                continue;
            }
            token_to_id.insert(tok.clone(), id_to_token.len());
            id_to_token.push(tok);
        }
        Vocab {
            id_to_token,
            token_to_id,
        }
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.token_to_id.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.id_to_token.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }

    /// One token per line, the four special tokens first.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for tok in &self.id_to_token {
            out.push_str(tok);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, VocabError> {
        let lines: Vec<&str> = text.lines().collect();
        for (i, expected) in SPECIAL_TOKENS.iter().enumerate() {
            let found = lines.get(i).copied().unwrap_or("");
            if found != *expected {
                return Err(VocabError::BadSpecialToken {
                    line: i + 1,
                    expected,
                    found: found.to_string(),
                });
            }
        }
        let vocab = Vocab::from_tokens(lines.iter().skip(4).copied());
        if vocab.len() != lines.len() {
            // find the offending line for the message
            let mut seen = std::collections::HashSet::new();
            for (i, line) in lines.iter().enumerate() {
                if line.is_empty() || !seen.insert(*line) {
                    return Err(VocabError::BadToken {
                        line: i + 1,
                        token: line.to_string(),
                    });
                }
            }
        }
        Ok(vocab)
    }

    pub fn save(&self, path: &Path) -> Result<(), VocabError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, VocabError> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

/// Frequency-ranked vocabulary; ties go to the lexicographically smaller
/// token.
pub fn build_vocab(corpus: &[TokenSequence], min_freq: usize) -> Vocab {
    let min_freq = min_freq.max(1);
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for seq in corpus {
        for tok in &seq.tokens {
            if SPECIAL_TOKENS.contains(&tok.as_str()) {
                continue;
            }
            *freq.entry(tok.as_str()).or_default() += 1;
        }
    }
    let mut entries: Vec<(&str, usize)> = freq.into_iter().filter(|&(_, n)| n >= min_freq).collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Vocab::from_tokens(entries.into_iter().map(|(t, _)| t.to_string()))
}

pub fn encode(seq: &TokenSequence, vocab: &Vocab, add_bos_eos: bool) -> Vec<usize> {
    let mut ids = Vec::with_capacity(seq.len() + 2);
    if add_bos_eos {
        ids.push(BOS_ID);
    }
    ids.extend(seq.tokens.iter().map(|t| vocab.id(t).unwrap_or(UNK_ID)));
    if add_bos_eos {
        ids.push(EOS_ID);
    }
    ids
}

pub fn decode(ids: &[usize], vocab: &Vocab, strip_special: bool) -> Result<TokenSequence, VocabError> {
    let mut tokens = Vec::with_capacity(ids.len());
    let mut kept = Vec::with_capacity(ids.len());
    for &id in ids {
        let tok = vocab.token(id).ok_or(VocabError::IdOutOfRange {
            id,
            size: vocab.len(),
        })?;
        if strip_special && id < SPECIAL_TOKENS.len() {
            continue;
        }
        tokens.push(tok.to_string());
        kept.push(id);
    }
    Ok(TokenSequence {
        tokens,
        ids: Some(kept),
    })
}
