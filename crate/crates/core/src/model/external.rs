//! Out-of-process predictors. Requests are JSONL `{"id","problem"}` lines;
//! responses are JSONL `{"id","equation"}` lines in any order.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::thread;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Adapter {
    /// Pre-computed predictions.
    PredictionFile(PathBuf),
    /// A program reading requests on stdin and writing responses on stdout.
    Command { program: String, args: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRequest {
    pub id: String,
    pub problem: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionResponse {
    pub id: String,
    pub equation: String,
}

#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("no prediction for id `{0}`")]
    MissingId(String),
    #[error("prediction for unknown id `{0}`")]
    UnexpectedId(String),
    #[error("more than one prediction for id `{0}`")]
    DuplicateId(String),
    #[error("prediction line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("adapter `{program}` failed ({status}): {stderr}")]
    Failed {
        program: String,
        status: String,
        stderr: String,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn requests_to_jsonl(requests: &[PredictionRequest]) -> String {
    let mut out = String::new();
    for r in requests {
        out.push_str(&serde_json::to_string(r).expect("request serializes"));
        out.push('\n');
    }
    out
}

pub fn responses_to_jsonl(responses: &[PredictionResponse]) -> String {
    let mut out = String::new();
    for r in responses {
        out.push_str(&serde_json::to_string(r).expect("response serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_responses(text: &str) -> Result<Vec<PredictionResponse>, AdapterError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| AdapterError::Malformed {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Orders responses to match `requests`, rejecting gaps and strays.
pub fn align_responses(
    requests: &[PredictionRequest],
    responses: Vec<PredictionResponse>,
) -> Result<Vec<String>, AdapterError> {
    let wanted: HashMap<&str, usize> = requests.iter().enumerate().map(|(i, r)| (r.id.as_str(), i)).collect();
    let mut slots: Vec<Option<String>> = vec![None; requests.len()];
    for resp in responses {
        let &i = wanted
            .get(resp.id.as_str())
            .ok_or_else(|| AdapterError::UnexpectedId(resp.id.clone()))?;
        if slots[i].is_some() {
            return Err(AdapterError::DuplicateId(resp.id));
        }
        slots[i] = Some(resp.equation);
    }
    slots
        .into_iter()
        .zip(requests)
        .map(|(slot, req)| slot.ok_or_else(|| AdapterError::MissingId(req.id.clone())))
        .collect()
}

fn run_command(program: &str, args: &[String], input: String) -> Result<String, AdapterError> {
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()?;
    let mut stdin = child.stdin.take().expect("stdin is piped");
    let writer = thread::spawn(move || {
        // a child that exits early closes the pipe; its status tells the story
        let _ = stdin.write_all(input.as_bytes());
    });
    let output = child.wait_with_output()?;
    let _ = writer.join();
    if !output.status.success() {
        return Err(AdapterError::Failed {
            program: program.to_string(),
            status: output.status.to_string(),
            stderr: String::from_utf8_lossy(&output.stderr).trim().to_string(),
        });
    }
    String::from_utf8(output.stdout).map_err(|e| AdapterError::Malformed {
        line: 0,
        message: e.to_string(),
    })
}

/// One predicted equation per request, in request order.
pub fn external_predict(requests: &[PredictionRequest], adapter: &Adapter) -> Result<Vec<String>, AdapterError> {
    let text = match adapter {
        Adapter::PredictionFile(path) => fs::read_to_string(path)
            .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))?,
        Adapter::Command { program, args } => run_command(program, args, requests_to_jsonl(requests))?,
    };
    align_responses(requests, parse_responses(&text)?)
}
