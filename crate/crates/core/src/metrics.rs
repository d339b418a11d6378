//! BLEU and solution accuracy, and the per-corpus report combining them.

use std::collections::HashMap;
use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::MwpRecord;
use crate::equation::{parse_equation, parse_rational, solve, to_canonical_string, Rational};
use crate::preprocess::tokenize;

pub const DEFAULT_MAX_N: usize = 4;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("{predictions} predictions for {records} records")]
    LengthMismatch { predictions: usize, records: usize },
    #[error("reference `{id}` cannot be solved: {message}")]
    BadReference { id: String, message: String },
    #[error("tolerance must be a finite non-negative number, got {0}")]
    BadTolerance(f64),
}

fn ngram_counts<'a>(tokens: &'a [String], n: usize) -> HashMap<&'a [String], usize> {
    let mut counts = HashMap::new();
    if n > 0 && tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped matches and candidate n-gram total for one order.
fn clipped_matches(candidate: &[String], reference: &[String], n: usize) -> (usize, usize) {
    let cand = ngram_counts(candidate, n);
    let refc = ngram_counts(reference, n);
    let matched = cand
        .iter()
        .map(|(g, &c)| c.min(refc.get(g).copied().unwrap_or(0)))
        .sum();
    (matched, candidate.len().saturating_sub(n - 1))
}

fn brevity_penalty(c: usize, r: usize) -> f64 {
    if c < r {
        (1.0 - r as f64 / c as f64).exp()
    } else {
        1.0
    }
}

/// Sentence-level BLEU in [0, 1]. Unigram precision is unsmoothed; orders
/// two and up use (matches + 1) / (total + 1).
pub fn sentence_bleu(candidate: &[String], reference: &[String], max_n: usize) -> f64 {
    assert!(max_n >= 1, "max_n must be at least 1");
    if candidate.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let (m, t) = clipped_matches(candidate, reference, n);
        let p = if n == 1 {
            m as f64 / t as f64
        } else {
            (m as f64 + 1.0) / (t as f64 + 1.0)
        };
        if p == 0.0 {
            return 0.0;
        }
        log_sum += p.ln();
    }
    brevity_penalty(candidate.len(), reference.len()) * (log_sum / max_n as f64).exp()
}

/// Corpus BLEU in [0, 100] from pooled counts, unsmoothed, with the brevity
/// penalty taken over total lengths. Orders for which no candidate has any
/// n-gram are left out of the geometric mean.
pub fn corpus_bleu(pairs: &[(Vec<String>, Vec<String>)]) -> f64 {
    corpus_bleu_n(pairs, DEFAULT_MAX_N)
}

pub fn corpus_bleu_n(pairs: &[(Vec<String>, Vec<String>)], max_n: usize) -> f64 {
    assert!(max_n >= 1, "max_n must be at least 1");
    let mut matched = vec![0usize; max_n];
    let mut total = vec![0usize; max_n];
    let (mut c, mut r) = (0usize, 0usize);
    for (cand, refr) in pairs {
        c += cand.len();
        r += refr.len();
        for n in 1..=max_n {
            let (m, t) = clipped_matches(cand, refr, n);
            matched[n - 1] += m;
            total[n - 1] += t;
        }
    }
    if c == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    let mut orders = 0;
    for (&m, &t) in matched.iter().zip(&total) {
        if t == 0 {
            continue;
        }
        if m == 0 {
            return 0.0;
        }
        log_sum += (m as f64 / t as f64).ln();
        orders += 1;
    }
    100.0 * brevity_penalty(c, r) * (log_sum / orders as f64).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Correct,
    Wrong,
    /// The prediction did not parse or could not be solved; counts as wrong.
    Unparseable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Correct => "correct",
            Verdict::Wrong => "wrong",
            Verdict::Unparseable => "unparseable",
        })
    }
}

/// Outcome of solving one prediction against its reference.
#[derive(Debug, Clone, PartialEq)]
pub struct Judgement {
    pub verdict: Verdict,
    pub predicted_value: Option<Rational>,
    pub reference_value: Rational,
}

fn tolerance_to_rational(tolerance: f64) -> Result<Rational, MetricsError> {
    if !tolerance.is_finite() || tolerance < 0.0 {
        return Err(MetricsError::BadTolerance(tolerance));
    }
    Ok(Rational::from_float(tolerance).expect("finite float"))
}

fn solve_text(text: &str) -> Result<Rational, String> {
    let eq = parse_equation(text).map_err(|e| e.to_string())?;
    solve(&eq).map_err(|e| e.to_string())
}

fn judge(predicted: &str, reference_value: Rational, tolerance: &Rational) -> Judgement {
    match solve_text(predicted) {
        Ok(v) => {
            let close = if tolerance.is_zero() {
                v == reference_value
            } else {
                (&v - &reference_value).abs() <= *tolerance
            };
            Judgement {
                verdict: if close { Verdict::Correct } else { Verdict::Wrong },
                predicted_value: Some(v),
                reference_value,
            }
        }
        Err(_) => Judgement {
            verdict: Verdict::Unparseable,
            predicted_value: None,
            reference_value,
        },
    }
}

/// Fraction of predictions whose solved value matches the reference's,
/// with one judgement per `(predicted, reference)` pair. `reference_ids`
/// only labels errors for references that fail to solve.
pub fn solution_accuracy(
    pairs: &[(String, String)],
    reference_ids: &[String],
    tolerance: f64,
) -> Result<(f64, Vec<Judgement>), MetricsError> {
    let tol = tolerance_to_rational(tolerance)?;
    let mut judgements = Vec::with_capacity(pairs.len());
    for (i, (pred, refr)) in pairs.iter().enumerate() {
        let reference_value = solve_text(refr).map_err(|message| MetricsError::BadReference {
            id: reference_ids.get(i).cloned().unwrap_or_else(|| (i + 1).to_string()),
            message,
        })?;
        judgements.push(judge(pred, reference_value, &tol));
    }
    let correct = judgements.iter().filter(|j| j.verdict == Verdict::Correct).count();
    let accuracy = if pairs.is_empty() {
        0.0
    } else {
        correct as f64 / pairs.len() as f64
    };
    Ok((accuracy, judgements))
}

mod opt_rational {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::equation::{format_rational, parse_rational, Rational};

    pub fn serialize<S: Serializer>(v: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(r) => s.serialize_some(&format_rational(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| parse_rational(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordScore {
    pub id: String,
    pub predicted: String,
    pub reference: String,
    /// Sentence BLEU in [0, 1].
    pub bleu: f64,
    #[serde(default, with = "opt_rational", skip_serializing_if = "Option::is_none")]
    pub solved_value: Option<Rational>,
    #[serde(default, with = "opt_rational", skip_serializing_if = "Option::is_none")]
    pub reference_value: Option<Rational>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Corpus BLEU in [0, 100].
    pub corpus_bleu: f64,
    /// Fraction in [0, 1].
    pub solution_accuracy: f64,
    pub n_records: usize,
    pub per_record: Vec<RecordScore>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn count(&self, verdict: Verdict) -> usize {
        self.per_record.iter().filter(|r| r.verdict == verdict).count()
    }
}

/// Tokens used for BLEU: canonical form when the text parses, raw
/// tokenization otherwise.
pub fn bleu_tokens(equation_text: &str) -> Vec<String> {
    match parse_equation(equation_text) {
        Ok(eq) => tokenize(&to_canonical_string(&eq)).tokens,
        Err(_) => tokenize(equation_text).tokens,
    }
}

pub fn evaluate_corpus(predictions: &[String], records: &[MwpRecord]) -> Result<EvalReport, MetricsError> {
    evaluate_corpus_with_tolerance(predictions, records, 0.0)
}

pub fn evaluate_corpus_with_tolerance(
    predictions: &[String],
    records: &[MwpRecord],
    tolerance: f64,
) -> Result<EvalReport, MetricsError> {
    if predictions.len() != records.len() {
        return Err(MetricsError::LengthMismatch {
            predictions: predictions.len(),
            records: records.len(),
        });
    }
    let pairs: Vec<(String, String)> = predictions
        .iter()
        .zip(records)
        .map(|(p, r)| (p.clone(), r.equation_text.clone()))
        .collect();
    let ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
    let (accuracy, judgements) = solution_accuracy(&pairs, &ids, tolerance)?;

    let token_pairs: Vec<(Vec<String>, Vec<String>)> =
        pairs.iter().map(|(p, r)| (bleu_tokens(p), bleu_tokens(r))).collect();
    let per_record = records
        .iter()
        .zip(&pairs)
        .zip(&token_pairs)
        .zip(judgements)
        .map(|(((rec, (pred, refr)), (ct, rt)), j)| RecordScore {
            id: rec.id.clone(),
            predicted: pred.clone(),
            reference: refr.clone(),
            bleu: sentence_bleu(ct, rt, DEFAULT_MAX_N),
            solved_value: j.predicted_value,
            reference_value: Some(j.reference_value),
            verdict: j.verdict,
        })
        .collect();
    Ok(EvalReport {
        corpus_bleu: corpus_bleu(&token_pairs),
        solution_accuracy: accuracy,
        n_records: records.len(),
        per_record,
    })
}

/// One row of a results table; a failed run keeps its message instead of
/// scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub model: String,
    pub batch: Option<usize>,
    pub epoch: Option<usize>,
    pub result: Result<(f64, f64), String>,
}

impl TableRow {
    pub fn from_report(model: &str, batch: Option<usize>, epoch: Option<usize>, report: &EvalReport) -> Self {
        TableRow {
            model: model.to_string(),
            batch,
            epoch,
            result: Ok((report.corpus_bleu, report.solution_accuracy)),
        }
    }
}

/// Aligned text table with columns Model, Batch, Epoch, Bleu, Accuracy.
/// Accuracy is shown as a percentage.
pub fn render_table(rows: &[TableRow]) -> String {
    let header = ["Model", "Batch", "Epoch", "Bleu", "Accuracy"].map(String::from);
    let opt = |v: Option<usize>| v.map_or_else(|| "-".to_string(), |v| v.to_string());
    let mut cells: Vec<[String; 5]> = vec![header];
    for row in rows {
        let (bleu, acc) = match &row.result {
            Ok((b, a)) => (format!("{b:.2}"), format!("{:.2}", a * 100.0)),
            Err(msg) => ("failed".to_string(), msg.clone()),
        };
        cells.push([row.model.clone(), opt(row.batch), opt(row.epoch), bleu, acc]);
    }
    let mut widths = [0usize; 5];
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    for (i, row) in cells.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(j, (c, w))| {
                let pad = w - c.chars().count();
                if j == 0 || (i > 0 && c == "failed") {
                    format!("{c}{}", " ".repeat(pad))
                } else {
                    format!("{}{c}", " ".repeat(pad))
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
            out.push_str(&rule.join("  "));
            out.push('\n');
        }
    }
    out
}

/// Parses an answer given either as an equation or as a bare number.
pub fn value_of(text: &str) -> Option<Rational> {
    solve_text(text).ok().or_else(|| parse_rational(text.trim()).ok())
}

/// Short summary line, e.g. for logs.
pub fn summary_line(report: &EvalReport) -> String {
    format!(
        "bleu {:.2}  accuracy {:.4}  ({} correct, {} wrong, {} unparseable of {})",
        report.corpus_bleu,
        report.solution_accuracy,
        report.count(Verdict::Correct),
        report.count(Verdict::Wrong),
        report.count(Verdict::Unparseable),
        report.n_records
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn rec(id: &str, eq: &str) -> MwpRecord {
        MwpRecord {
            id: id.into(),
            problem_text: String::new(),
            equation_text: eq.into(),
            answer: None,
        }
    }

    #[test]
    fn identical_and_disjoint() {
        let a = toks("x = 7 - 3");
        assert_eq!(sentence_bleu(&a, &a, 4), 1.0);
        assert_eq!(sentence_bleu(&toks("a b c"), &toks("d e f"), 4), 0.0);
        assert_eq!(sentence_bleu(&[], &a, 4), 0.0);
        assert_eq!(corpus_bleu(&[(a.clone(), a.clone())]), 100.0);
        assert_eq!(corpus_bleu(&[(toks("a b"), toks("c d"))]), 0.0);
    }

    #[test]
    fn swapped_operands_by_hand() {
        // p1 = 5/5, p2 = (1+1)/(4+1), p3 = (0+1)/(3+1), p4 = (0+1)/(2+1)
        let got = sentence_bleu(&toks("x = 7 - 3"), &toks("x = 3 - 7"), 4);
        let want = (1.0f64 * 0.4 * 0.25 * (1.0 / 3.0)).powf(0.25);
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn brevity_penalty_applies_to_short_candidates() {
        let got = sentence_bleu(&toks("x = 4"), &toks("x = 4 + 0"), 1);
        assert!((got - (1.0f64 - 5.0 / 3.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn corpus_pools_counts() {
        // unigrams 4/6, bigrams 1/4 over both pairs; c = r = 6
        let pairs = vec![(toks("a b c"), toks("a b d")), (toks("e f g"), toks("e x g"))];
        let got = corpus_bleu_n(&pairs, 2);
        let want = 100.0 * ((4.0f64 / 6.0) * (1.0 / 4.0)).sqrt();
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }

    #[test]
    fn short_corpus_skips_empty_orders() {
        let pairs = vec![(toks("x = 4"), toks("x = 4"))];
        assert!((corpus_bleu(&pairs) - 100.0).abs() < 1e-12);
    }

    #[test]
    fn value_equality_not_surface() {
        let pairs = vec![
            ("x = 3 - 7".to_string(), "x = 7 - 3".to_string()),
            ("x = ( 4 + 0 )".to_string(), "x = 4".to_string()),
            ("x = 5 / 0".to_string(), "x = 5".to_string()),
            ("x = ".to_string(), "x = 5".to_string()),
        ];
        let (acc, js) = solution_accuracy(&pairs, &[], 0.0).unwrap();
        let verdicts: Vec<Verdict> = js.iter().map(|j| j.verdict).collect();
        assert_eq!(verdicts, [Verdict::Wrong, Verdict::Correct, Verdict::Unparseable, Verdict::Unparseable]);
        assert_eq!(acc, 0.25);
    }

    #[test]
    fn tolerance_widens_matches() {
        let pairs = vec![("x = 0.333".to_string(), "x = 1 / 3".to_string())];
        assert_eq!(solution_accuracy(&pairs, &[], 0.0).unwrap().0, 0.0);
        assert_eq!(solution_accuracy(&pairs, &[], 1e-3).unwrap().0, 1.0);
        assert!(matches!(
            solution_accuracy(&pairs, &[], -1.0),
            Err(MetricsError::BadTolerance(_))
        ));
    }

    #[test]
    fn bad_reference_names_the_record() {
        let pairs = vec![("x = 1".to_string(), "x = (".to_string())];
        match solution_accuracy(&pairs, &["r9".to_string()], 0.0) {
            Err(MetricsError::BadReference { id, .. }) => assert_eq!(id, "r9"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reference_rewrites_preserve_accuracy() {
        let preds: Vec<String> = ["x = 4", "x = 2 + 2", "x = 5", "x = 1 / 0"].map(String::from).to_vec();
        let a: Vec<MwpRecord> = (0..4).map(|i| rec(&i.to_string(), "x = 7 - 3")).collect();
        let b: Vec<MwpRecord> = (0..4).map(|i| rec(&i.to_string(), "x = 4")).collect();
        let ra = evaluate_corpus(&preds, &a).unwrap();
        let rb = evaluate_corpus(&preds, &b).unwrap();
        assert_eq!(ra.solution_accuracy, rb.solution_accuracy);
        assert_eq!(ra.solution_accuracy, 0.5);
    }

    #[test]
    fn gold_and_empty_predictions() {
        let records: Vec<MwpRecord> = ["x = 1 + 2", "x = 7 - 3", "x = 6 / 4"]
            .iter()
            .enumerate()
            .map(|(i, e)| rec(&i.to_string(), e))
            .collect();
        let gold: Vec<String> = records.iter().map(|r| r.equation_text.clone()).collect();
        let r = evaluate_corpus(&gold, &records).unwrap();
        assert_eq!((r.corpus_bleu, r.solution_accuracy), (100.0, 1.0));
        let empty = vec![String::new(); 3];
        let r = evaluate_corpus(&empty, &records).unwrap();
        assert_eq!((r.corpus_bleu, r.solution_accuracy), (0.0, 0.0));
        assert_eq!(r.count(Verdict::Unparseable), 3);
        assert!(matches!(
            evaluate_corpus(&empty[..2], &records),
            Err(MetricsError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn predictions_are_canonicalized_before_bleu() {
        let records = vec![rec("a", "x = 7 - 3")];
        let r = evaluate_corpus(&["X=(7-3)".to_string()], &records).unwrap();
        assert_eq!(r.per_record[0].bleu, 1.0);
    }

    #[test]
    fn report_json_roundtrip_uses_field_names() {
        let records = vec![rec("a", "x = 1 / 3"), rec("b", "x = 2")];
        let r = evaluate_corpus(&["x = 2 / 6".to_string(), "x = (".to_string()], &records).unwrap();
        let json = r.to_json();
        for key in ["corpus_bleu", "solution_accuracy", "n_records", "per_record", "solved_value", "verdict"] {
            assert!(json.contains(&format!("\"{key}\"")), "{key}");
        }
        assert!(json.contains("\"1/3\""));
        assert!(json.contains("\"unparseable\""));
        assert_eq!(EvalReport::from_json(&json).unwrap(), r);
    }

    #[test]
    fn table_layout() {
        let rows = vec![
            TableRow {
                model: "Transformer".into(),
                batch: Some(8),
                epoch: Some(15),
                result: Ok((94.6812, 0.773)),
            },
            TableRow {
                model: "Transformer".into(),
                batch: Some(16),
                epoch: Some(5),
                result: Err("diverged".into()),
            },
        ];
        let table = render_table(&rows);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("Model"));
        assert!(lines[0].ends_with("Accuracy"));
        assert!(lines[2].contains("94.68") && lines[2].ends_with("77.30"));
        assert!(lines[3].contains("failed") && lines[3].contains("diverged"));
    }
}
