//! Word-problem records: loading, validation, classification, splitting and
//! synthetic generation.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io;
use std::path::Path;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equation::{
    self, count_operators, format_rational, parse_equation, parse_rational, Equation, Expr, Op,
    Rational,
};
use crate::preprocess::{normalize_digits, normalize_text, DigitDirection};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MwpRecord {
    pub id: String,
    pub problem_text: String,
    pub equation_text: String,
    pub answer: Option<Rational>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("record `{id}`: equation does not parse: {source}")]
    Unparseable {
        id: String,
        #[source]
        source: equation::ParseError,
    },
    #[error("split ratios must be non-negative and sum to 1, got {0}")]
    BadRatios(String),
    #[error("cannot split an empty record list")]
    EmptyInput,
    #[error("invalid class profile: {0}")]
    BadProfile(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Jsonl,
    Tsv,
}

impl DatasetFormat {
    /// Guesses from the file extension, defaulting to JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("tsv") => DatasetFormat::Tsv,
            _ => DatasetFormat::Jsonl,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    problem: String,
    equation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    answer: Option<String>,
}

pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<Vec<MwpRecord>, DatasetError> {
    parse_dataset(&fs::read_to_string(path)?, format)
}

/// Parses dataset text. Blank lines are skipped; ids default to the
/// 1-based line number.
pub fn parse_dataset(text: &str, format: DatasetFormat) -> Result<Vec<MwpRecord>, DatasetError> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let record = match format {
            DatasetFormat::Jsonl => {
                let rec: JsonRecord = serde_json::from_str(raw).map_err(|e| DatasetError::Malformed {
                    line,
                    message: e.to_string(),
                })?;
                let answer = rec
                    .answer
                    .as_deref()
                    .map(parse_rational)
                    .transpose()
                    .map_err(|e| DatasetError::Malformed {
                        line,
                        message: e.to_string(),
                    })?;
                MwpRecord {
                    id: rec.id.unwrap_or_else(|| line.to_string()),
                    problem_text: rec.problem,
                    equation_text: rec.equation,
                    answer,
                }
            }
            DatasetFormat::Tsv => {
                let cols: Vec<&str> = raw.split('\t').collect();
                if cols.len() != 2 {
                    return Err(DatasetError::Malformed {
                        line,
                        message: format!("expected 2 tab-separated columns, found {}", cols.len()),
                    });
                }
                MwpRecord {
                    id: line.to_string(),
                    problem_text: cols[0].to_string(),
                    equation_text: cols[1].to_string(),
                    answer: None,
                }
            }
        };
        if !seen.insert(record.id.clone()) {
            return Err(DatasetError::DuplicateId {
                line,
                id: record.id,
            });
        }
        records.push(record);
    }
    Ok(records)
}

pub fn record_to_json_line(rec: &MwpRecord) -> String {
    let json = JsonRecord {
        id: Some(rec.id.clone()),
        problem: rec.problem_text.clone(),
        equation: rec.equation_text.clone(),
        answer: rec.answer.as_ref().map(format_rational),
    };
    serde_json::to_string(&json).expect("record serializes")
}

pub fn to_jsonl(records: &[MwpRecord]) -> String {
    let mut out = String::new();
    for rec in records {
        out.push_str(&record_to_json_line(rec));
        out.push('\n');
    }
    out
}

pub fn save_jsonl(path: &Path, records: &[MwpRecord]) -> Result<(), DatasetError> {
    fs::write(path, to_jsonl(records))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum IssueKind {
    EmptyProblem,
    ParseFailure,
    SolveFailure,
    NumeralNotInText,
    AnswerMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub severity: Severity,
    pub kind: IssueKind,
    pub message: String,
}

impl Issue {
    fn error(kind: IssueKind, message: String) -> Self {
        Issue {
            severity: Severity::Error,
            kind,
            message,
        }
    }
}

/// Numeric literals in free text, ASCII or Bengali digits, with an optional
/// inner decimal point.
pub fn numerals_in_text(text: &str) -> Vec<Rational> {
    let ascii = normalize_digits(text, DigitDirection::BengaliToAscii);
    let chars: Vec<char> = ascii.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].is_ascii_digit() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && chars[i].is_ascii_digit() {
            i += 1;
        }
        if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
            i += 1;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
        }
        let literal: String = chars[start..i].iter().collect();
        if let Ok(v) = parse_rational(&literal) {
            out.push(v);
        }
    }
    out
}

fn expr_numerals(e: &Expr, out: &mut Vec<Rational>) {
    match e {
        Expr::Num(v) => out.push(v.clone()),
        Expr::BinOp { left, right, .. } => {
            expr_numerals(left, out);
            expr_numerals(right, out);
        }
    }
}

pub fn validate_record(rec: &MwpRecord) -> Vec<Issue> {
    let mut issues = Vec::new();
    if normalize_text(&rec.problem_text).is_empty() {
        issues.push(Issue::error(IssueKind::EmptyProblem, "problem text is empty".into()));
    }
    let eq = match parse_equation(&rec.equation_text) {
        Ok(eq) => eq,
        Err(e) => {
            issues.push(Issue::error(IssueKind::ParseFailure, e.to_string()));
            return issues;
        }
    };

    let in_text = numerals_in_text(&rec.problem_text);
    let mut in_equation = Vec::new();
    expr_numerals(&eq.rhs, &mut in_equation);
    let mut reported = HashSet::new();
    for v in in_equation {
        if !in_text.contains(&v) && reported.insert(v.clone()) {
            issues.push(Issue {
                severity: Severity::Warning,
                kind: IssueKind::NumeralNotInText,
                message: format!("numeral {} does not appear in the problem text", format_rational(&v)),
            });
        }
    }

    match equation::solve(&eq) {
        Ok(value) => {
            if let Some(answer) = &rec.answer {
                if *answer != value {
                    issues.push(Issue::error(
                        IssueKind::AnswerMismatch,
                        format!(
                            "stored answer {} but equation solves to {}",
                            format_rational(answer),
                            format_rational(&value)
                        ),
                    ));
                }
            }
        }
        Err(e) => issues.push(Issue::error(IssueKind::SolveFailure, e.to_string())),
    }
    issues
}

/// Equation taxonomy: one operator, several operators, or none at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EquationClass {
    Simple(Op),
    Complex,
    NoOp,
}

impl EquationClass {
    pub const GENERATABLE: [EquationClass; 5] = [
        EquationClass::Simple(Op::Add),
        EquationClass::Simple(Op::Sub),
        EquationClass::Simple(Op::Mul),
        EquationClass::Simple(Op::Div),
        EquationClass::Complex,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EquationClass::Simple(Op::Add) => "add",
            EquationClass::Simple(Op::Sub) => "sub",
            EquationClass::Simple(Op::Mul) => "mul",
            EquationClass::Simple(Op::Div) => "div",
            EquationClass::Complex => "complex",
            EquationClass::NoOp => "noop",
        }
    }
}

impl fmt::Display for EquationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EquationClass {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "add" => Ok(EquationClass::Simple(Op::Add)),
            "sub" => Ok(EquationClass::Simple(Op::Sub)),
            "mul" => Ok(EquationClass::Simple(Op::Mul)),
            "div" => Ok(EquationClass::Simple(Op::Div)),
            "complex" | "mixed" => Ok(EquationClass::Complex),
            "noop" => Ok(EquationClass::NoOp),
            other => Err(DatasetError::BadProfile(format!("unknown class `{other}`"))),
        }
    }
}

pub fn classify_equation(eq: &Equation) -> EquationClass {
    let counts = count_operators(&eq.rhs);
    match counts.total() {
        0 => EquationClass::NoOp,
        1 => {
            let op = Op::ALL.into_iter().find(|&op| counts.get(op) == 1).unwrap();
            EquationClass::Simple(op)
        }
        _ => EquationClass::Complex,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TypeCounts {
    pub add: usize,
    pub sub: usize,
    pub mul: usize,
    pub div: usize,
    pub complex: usize,
    pub noop: usize,
    pub total: usize,
}

impl TypeCounts {
    pub fn get(&self, class: EquationClass) -> usize {
        match class {
            EquationClass::Simple(Op::Add) => self.add,
            EquationClass::Simple(Op::Sub) => self.sub,
            EquationClass::Simple(Op::Mul) => self.mul,
            EquationClass::Simple(Op::Div) => self.div,
            EquationClass::Complex => self.complex,
            EquationClass::NoOp => self.noop,
        }
    }

    fn bump(&mut self, class: EquationClass) {
        let slot = match class {
            EquationClass::Simple(Op::Add) => &mut self.add,
            EquationClass::Simple(Op::Sub) => &mut self.sub,
            EquationClass::Simple(Op::Mul) => &mut self.mul,
            EquationClass::Simple(Op::Div) => &mut self.div,
            EquationClass::Complex => &mut self.complex,
            EquationClass::NoOp => &mut self.noop,
        };
        *slot += 1;
        self.total += 1;
    }
}

impl fmt::Display for TypeCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<12} {:>8}", "Type", "Count")?;
        for (name, n) in [
            ("Addition", self.add),
            ("Subtraction", self.sub),
            ("Multiply", self.mul),
            ("Division", self.div),
            ("Mixed", self.complex),
            ("NoOp", self.noop),
            ("Total", self.total),
        ] {
            writeln!(f, "{name:<12} {n:>8}")?;
        }
        Ok(())
    }
}

pub fn summarize(records: &[MwpRecord]) -> Result<TypeCounts, DatasetError> {
    let mut counts = TypeCounts::default();
    for rec in records {
        let eq = parse_equation(&rec.equation_text).map_err(|source| DatasetError::Unparseable {
            id: rec.id.clone(),
            source,
        })?;
        counts.bump(classify_equation(&eq));
    }
    Ok(counts)
}

/// Train/validation/test proportions as exact rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitRatios {
    pub train: Rational,
    pub validation: Rational,
    pub test: Rational,
}

impl SplitRatios {
    pub fn new(train: Rational, validation: Rational, test: Rational) -> Result<Self, DatasetError> {
        let ratios = SplitRatios {
            train,
            validation,
            test,
        };
        let parts = [&ratios.train, &ratios.validation, &ratios.test];
        let sum: Rational = parts.iter().copied().cloned().sum();
        if parts.iter().any(|r| r.is_negative()) || !sum.is_one() {
            return Err(DatasetError::BadRatios(ratios.to_string()));
        }
        Ok(ratios)
    }
}

impl Default for SplitRatios {
    fn default() -> Self {
        let tenth = |n: i64| Rational::new(BigInt::from(n), BigInt::from(10));
        SplitRatios {
            train: tenth(8),
            validation: tenth(1),
            test: tenth(1),
        }
    }
}

impl fmt::Display for SplitRatios {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{}",
            format_rational(&self.train),
            format_rational(&self.validation),
            format_rational(&self.test)
        )
    }
}

impl FromStr for SplitRatios {
    type Err = DatasetError;

    /// `0.8,0.1,0.1` or `8/10,1/10,1/10`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 3 {
            return Err(DatasetError::BadRatios(s.to_string()));
        }
        let parse = |p: &str| parse_rational(p).map_err(|_| DatasetError::BadRatios(s.to_string()));
        SplitRatios::new(parse(parts[0])?, parse(parts[1])?, parse(parts[2])?)
    }
}

/// Largest-remainder apportionment of `n` items over exact weights that sum
/// to one. Ties in the fractional part go to the earlier slot.
pub fn apportion(n: usize, weights: &[Rational]) -> Vec<usize> {
    let total = Rational::from_integer(BigInt::from(n));
    let quotas: Vec<Rational> = weights.iter().map(|w| w * &total).collect();
    let mut sizes: Vec<usize> = quotas
        .iter()
        .map(|q| q.floor().to_integer().try_into().unwrap_or(0usize))
        .collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| quotas[b].fract().cmp(&quotas[a].fract()).then(a.cmp(&b)));
    for &slot in order.iter().cycle().take(n.saturating_sub(assigned)) {
        sizes[slot] += 1;
    }
    sizes
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<MwpRecord>,
    pub validation: Vec<MwpRecord>,
    pub test: Vec<MwpRecord>,
    pub seed: u64,
}

pub fn split_dataset(
    records: &[MwpRecord],
    seed: u64,
    ratios: &SplitRatios,
) -> Result<DatasetSplit, DatasetError> {
    if records.is_empty() {
        return Err(DatasetError::EmptyInput);
    }
    let sizes = apportion(
        records.len(),
        &[ratios.train.clone(), ratios.validation.clone(), ratios.test.clone()],
    );
    let mut shuffled = records.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = shuffled.split_off(sizes[0] + sizes[1]);
    let validation = shuffled.split_off(sizes[0]);
    Ok(DatasetSplit {
        train: shuffled,
        validation,
        test,
        seed,
    })
}

/// Target class mix for the synthetic generator.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProfile {
    weights: BTreeMap<EquationClass, Rational>,
    /// Allow division operands that do not divide evenly.
    pub allow_fractions: bool,
}

impl ClassProfile {
    /// Weights are relative and get normalized. `NoOp` cannot be generated.
    pub fn from_weights(
        weights: impl IntoIterator<Item = (EquationClass, u64)>,
    ) -> Result<Self, DatasetError> {
        let raw: BTreeMap<EquationClass, u64> = weights.into_iter().filter(|&(_, w)| w > 0).collect();
        if raw.contains_key(&EquationClass::NoOp) {
            return Err(DatasetError::BadProfile("noop records cannot be generated".into()));
        }
        let total: u64 = raw.values().sum();
        if total == 0 {
            return Err(DatasetError::BadProfile("all weights are zero".into()));
        }
        Ok(ClassProfile {
            weights: raw
                .into_iter()
                .map(|(c, w)| (c, Rational::new(BigInt::from(w), BigInt::from(total))))
                .collect(),
            allow_fractions: false,
        })
    }

    /// Default class mix (add / sub / mul / div / complex = 1761 / 3217 / 1610 / 3164 / 248).
    pub fn standard_mix() -> Self {
        Self::from_weights([
            (EquationClass::Simple(Op::Add), 1761),
            (EquationClass::Simple(Op::Sub), 3217),
            (EquationClass::Simple(Op::Mul), 1610),
            (EquationClass::Simple(Op::Div), 3164),
            (EquationClass::Complex, 248),
        ])
        .unwrap()
    }

    pub fn only(class: EquationClass) -> Result<Self, DatasetError> {
        Self::from_weights([(class, 1)])
    }

    pub fn proportion(&self, class: EquationClass) -> Rational {
        self.weights.get(&class).cloned().unwrap_or_else(Rational::zero)
    }

    /// Exact per-class counts for `n` records.
    pub fn counts(&self, n: usize) -> Vec<(EquationClass, usize)> {
        let classes: Vec<EquationClass> = self.weights.keys().copied().collect();
        let weights: Vec<Rational> = self.weights.values().cloned().collect();
        classes.into_iter().zip(apportion(n, &weights)).collect()
    }
}

impl FromStr for ClassProfile {
    type Err = DatasetError;

    /// `standard`, or comma-separated `class:weight` pairs such as
    /// `add:1,sub:2`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("standard") || s.is_empty() {
            return Ok(Self::standard_mix());
        }
        let mut weights = Vec::new();
        for part in s.split(',') {
            let (name, w) = part
                .split_once(':')
                .ok_or_else(|| DatasetError::BadProfile(format!("expected class:weight, got `{part}`")))?;
            let w: u64 = w
                .trim()
                .parse()
                .map_err(|_| DatasetError::BadProfile(format!("bad weight in `{part}`")))?;
            weights.push((name.parse()?, w));
        }
        Self::from_weights(weights)
    }
}

struct Person {
    name: &'static str,
    possessive: &'static str,
}

const PEOPLE: [Person; 8] = [
    Person { name: "রহিম", possessive: "রহিমের" },
    Person { name: "করিম", possessive: "করিমের" },
    Person { name: "সুমি", possessive: "সুমির" },
    Person { name: "রিনা", possessive: "রিনার" },
    Person { name: "জামাল", possessive: "জামালের" },
    Person { name: "নীলা", possessive: "নীলার" },
    Person { name: "তানিয়া", possessive: "তানিয়ার" },
    Person { name: "রাফি", possessive: "রাফির" },
];

const ITEMS: [&str; 8] = ["আপেল", "কলম", "বই", "চকলেট", "আম", "খাতা", "পেন্সিল", "বল"];

fn bn(n: i64) -> String {
    normalize_digits(&n.to_string(), DigitDirection::AsciiToBengali)
}

struct Draft {
    text: String,
    rhs: Expr,
}

fn two_people(rng: &mut ChaCha8Rng) -> (&'static Person, &'static Person) {
    let picks: Vec<&Person> = PEOPLE.choose_multiple(rng, 2).collect();
    (picks[0], picks[1])
}

fn draft_add(rng: &mut ChaCha8Rng) -> Draft {
    let (p1, p2) = two_people(rng);
    let item = ITEMS.choose(rng).unwrap();
    let a = rng.random_range(1..=99);
    let b = rng.random_range(1..=99);
    let text = match rng.random_range(0..3) {
        0 => format!(
            "{} কাছে {} টি {item} আছে। {} তাকে আরও {} টি {item} দিল। এখন {} কাছে মোট কতগুলো {item} আছে?",
            p1.possessive, bn(a), p2.name, bn(b), p1.possessive
        ),
        1 => format!(
            "একটি ঝুড়িতে {} টি {item} এবং অন্য একটি ঝুড়িতে {} টি {item} আছে। দুই ঝুড়িতে মোট কতটি {item} আছে?",
            bn(a), bn(b)
        ),
        _ => format!(
            "{} সকালে {} টি {item} কিনল এবং বিকেলে আরও {} টি {item} কিনল। সে মোট কতটি {item} কিনল?",
            p1.name, bn(a), bn(b)
        ),
    };
    Draft {
        text,
        rhs: Expr::bin(Op::Add, Expr::int(a), Expr::int(b)),
    }
}

fn draft_sub(rng: &mut ChaCha8Rng) -> Draft {
    let (p1, p2) = two_people(rng);
    let item = ITEMS.choose(rng).unwrap();
    let a = rng.random_range(2..=99);
    let b = rng.random_range(1..a);
    let text = match rng.random_range(0..3) {
        0 => format!(
            "{} কাছে {} টি {item} ছিল। সে {} কে {} টি {item} দিল। এখন তার কাছে কতটি {item} রইল?",
            p1.possessive, bn(a), p2.name, bn(b)
        ),
        1 => format!(
            "একটি দোকানে {} টি {item} ছিল। তার মধ্যে {} টি বিক্রি হয়ে গেল। দোকানে আর কতটি {item} বাকি আছে?",
            bn(a), bn(b)
        ),
        _ => format!(
            "{} কাছে {} টি {item} আছে এবং {} কাছে {} টি {item} আছে। {} কাছে {} চেয়ে কতটি বেশি {item} আছে?",
            p1.possessive, bn(b), p2.possessive, bn(a), p2.possessive, p1.possessive
        ),
    };
    Draft {
        text,
        rhs: Expr::bin(Op::Sub, Expr::int(a), Expr::int(b)),
    }
}

fn draft_mul(rng: &mut ChaCha8Rng) -> Draft {
    let (p1, _) = two_people(rng);
    let item = ITEMS.choose(rng).unwrap();
    let a = rng.random_range(1..=99);
    let b = rng.random_range(1..=99);
    let text = match rng.random_range(0..3) {
        0 => format!(
            "একটি বাক্সে {} টি {item} আছে। এমন {} টি বাক্সে মোট কতটি {item} আছে?",
            bn(a), bn(b)
        ),
        1 => format!(
            "{} প্রতিদিন {} টি {item} কেনে। {} দিনে সে মোট কতটি {item} কিনবে?",
            p1.name, bn(a), bn(b)
        ),
        _ => format!(
            "প্রতিটি {item} এর দাম {} টাকা। {} টি {item} কিনতে কত টাকা লাগবে?",
            bn(a), bn(b)
        ),
    };
    Draft {
        text,
        rhs: Expr::bin(Op::Mul, Expr::int(a), Expr::int(b)),
    }
}

fn draft_div(rng: &mut ChaCha8Rng, allow_fractions: bool) -> Draft {
    let (p1, _) = two_people(rng);
    let item = ITEMS.choose(rng).unwrap();
    let (a, b) = if allow_fractions {
        (rng.random_range(1..=99), rng.random_range(1..=99))
    } else {
        let b = rng.random_range(1..=99);
        let q = rng.random_range(1..=99 / b);
        (b * q, b)
    };
    let text = match rng.random_range(0..3) {
        0 => format!(
            "{} টি {item} {} জন বন্ধুর মধ্যে সমানভাবে ভাগ করে দেওয়া হলো। প্রত্যেকে কতটি {item} পেল?",
            bn(a), bn(b)
        ),
        1 => format!(
            "{} {} টাকা দিয়ে কয়েকটি {item} কিনল। প্রতিটি {item} এর দাম {} টাকা হলে সে কতটি {item} কিনল?",
            p1.name, bn(a), bn(b)
        ),
        _ => format!(
            "{} টি {item} কে {} টি সমান ভাগে ভাগ করলে প্রতি ভাগে কতটি {item} থাকবে?",
            bn(a), bn(b)
        ),
    };
    Draft {
        text,
        rhs: Expr::bin(Op::Div, Expr::int(a), Expr::int(b)),
    }
}

fn draft_complex(rng: &mut ChaCha8Rng, allow_fractions: bool) -> Draft {
    let (p1, p2) = two_people(rng);
    let item = ITEMS.choose(rng).unwrap();
    match rng.random_range(0..4) {
        0 => {
            // (a + b) / c
            let (a, b, c) = if allow_fractions {
                (rng.random_range(1..=99), rng.random_range(1..=99), rng.random_range(1..=99))
            } else {
                let c = rng.random_range(1..=49);
                let total = c * rng.random_range(1..=99 / c).max(1);
                let total = if total < 2 { 2 * c } else { total };
                let a = rng.random_range(1..total);
                (a, total - a, c)
            };
            Draft {
                text: format!(
                    "{} কাছে {} টি {item} ছিল। সে আরও {} টি {item} কিনল। তারপর সে সব {item} {} জন বন্ধুর মধ্যে সমানভাবে ভাগ করে দিল। প্রত্যেকে কতটি {item} পেল?",
                    p1.possessive, bn(a), bn(b), bn(c)
                ),
                rhs: Expr::bin(
                    Op::Div,
                    Expr::bin(Op::Add, Expr::int(a), Expr::int(b)),
                    Expr::int(c),
                ),
            }
        }
        1 => {
            // a * b - c
            let a = rng.random_range(2..=99);
            let b = rng.random_range(1..=99);
            let c = rng.random_range(1..=(a * b - 1).min(99));
            Draft {
                text: format!(
                    "একটি বাক্সে {} টি {item} আছে। এমন {} টি বাক্স থেকে {} টি {item} নষ্ট হয়ে গেল। ভালো {item} কতটি রইল?",
                    bn(a), bn(b), bn(c)
                ),
                rhs: Expr::bin(
                    Op::Sub,
                    Expr::bin(Op::Mul, Expr::int(a), Expr::int(b)),
                    Expr::int(c),
                ),
            }
        }
        2 => {
            // a + b - c
            let a = rng.random_range(1..=99);
            let b = rng.random_range(1..=99);
            let c = rng.random_range(1..=(a + b - 1).min(99));
            Draft {
                text: format!(
                    "{} {} টি {item} কিনল এবং {} {} টি {item} কিনল। তারা {} টি {item} খেয়ে ফেলল। এখন তাদের কাছে কতটি {item} আছে?",
                    p1.name, bn(a), p2.name, bn(b), bn(c)
                ),
                rhs: Expr::bin(
                    Op::Sub,
                    Expr::bin(Op::Add, Expr::int(a), Expr::int(b)),
                    Expr::int(c),
                ),
            }
        }
        _ => {
            // c - a * b
            let a = rng.random_range(1..=49);
            let b = rng.random_range(1..=(98 / a).max(1));
            let c = rng.random_range(a * b + 1..=99);
            Draft {
                text: format!(
                    "প্রতিটি {item} এর দাম {} টাকা। {} {} টি {item} কিনে দোকানিকে {} টাকা দিল। সে কত টাকা ফেরত পাবে?",
                    bn(a), p1.name, bn(b), bn(c)
                ),
                rhs: Expr::bin(
                    Op::Sub,
                    Expr::int(c),
                    Expr::bin(Op::Mul, Expr::int(a), Expr::int(b)),
                ),
            }
        }
    }
}

/// Templated Bengali problems with gold equations and answers. Operands are
/// integers in 1..=99; the output is fully determined by `seed`.
pub fn generate_synthetic(n: usize, seed: u64, profile: &ClassProfile) -> Vec<MwpRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut classes: Vec<EquationClass> = profile
        .counts(n)
        .into_iter()
        .flat_map(|(class, count)| std::iter::repeat_n(class, count))
        .collect();
    classes.shuffle(&mut rng);
    let width = n.to_string().len().max(5);
    classes
        .into_iter()
        .enumerate()
        .map(|(i, class)| {
            let draft = match class {
                EquationClass::Simple(Op::Add) => draft_add(&mut rng),
                EquationClass::Simple(Op::Sub) => draft_sub(&mut rng),
                EquationClass::Simple(Op::Mul) => draft_mul(&mut rng),
                EquationClass::Simple(Op::Div) => draft_div(&mut rng, profile.allow_fractions),
                EquationClass::Complex => draft_complex(&mut rng, profile.allow_fractions),
                EquationClass::NoOp => unreachable!("profiles never contain noop"),
            };
            let eq = Equation::new("x", draft.rhs);
            let answer = equation::solve(&eq).expect("generated operands never divide by zero");
            MwpRecord {
                id: format!("syn-{i:0width$}"),
                problem_text: draft.text,
                equation_text: equation::to_canonical_string(&eq),
                answer: Some(answer),
            }
        })
        .collect()
}
