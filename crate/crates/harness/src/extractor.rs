//! Drives an external extractor command through the validation-retry loop.
//!
//! Each attempt runs the command through `sh -c`, writes one JSON request line
//! to its standard input and reads one document from its standard output. The
//! output is either the document itself (optionally inside a ``` fence) or an
//! envelope `{"document": <array or string>, "cost": {"amount": x, "currency": "USD"}}`.

use std::io::Write;
use std::process::{Command, Stdio};
use std::time::Instant;

use expbench_core::validation::{has_errors, render_feedback, ValidationIssue};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::config::Mode;
use crate::document::{check, Document};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Request<'a> {
    pub paper_id: &'a str,
    pub paper_text: &'a str,
    /// 1 for the first attempt.
    pub attempt_index: usize,
    /// Rendered issues of the previous attempt; empty on the first.
    pub previous_feedback: &'a str,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cost {
    pub amount: f64,
    pub currency: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Valid,
    AttemptsExhausted,
    Crashed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub paper_id: String,
    pub mode: Mode,
    pub status: RunStatus,
    pub attempts: usize,
    pub max_attempts: usize,
    /// File name of the final document, next to the record.
    pub final_document: Option<String>,
    /// Error-severity issues per attempt.
    pub issue_counts: Vec<usize>,
    pub wall_time_ms: u64,
    pub cost: Option<Cost>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crash: Option<String>,
}

/// Everything one extraction produced, successful or not.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub record: RunRecord,
    /// Text of the last document the extractor emitted.
    pub text: Option<String>,
    pub document: Option<Document>,
    pub issues: Vec<ValidationIssue>,
    /// Feedback sent with each attempt, in order.
    pub feedback: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtractionError {
    #[error("extractor crashed on attempt {attempt}: {message}")]
    ExtractorCrashed {
        attempt: usize,
        message: String,
        partial: Box<Extraction>,
    },
    #[error("no valid document after {} attempts", .0.record.attempts)]
    AttemptsExhausted(Box<Extraction>),
}

impl ExtractionError {
    pub fn extraction(&self) -> &Extraction {
        match self {
            ExtractionError::ExtractorCrashed { partial, .. } => partial,
            ExtractionError::AttemptsExhausted(x) => x,
        }
    }

    pub fn into_extraction(self) -> Extraction {
        match self {
            ExtractionError::ExtractorCrashed { partial, .. } => *partial,
            ExtractionError::AttemptsExhausted(x) => *x,
        }
    }
}

struct Reply {
    text: String,
    cost: Option<Cost>,
}

fn parse_reply(stdout: &str) -> Reply {
    if let Ok(Value::Object(map)) = serde_json::from_str::<Value>(stdout.trim()) {
        if let Some(doc) = map.get("document") {
            let text = match doc {
                Value::String(s) => s.clone(),
                other => serde_json::to_string_pretty(other).expect("serializable"),
            };
            let cost = map
                .get("cost")
                .and_then(|c| serde_json::from_value(c.clone()).ok());
            return Reply { text, cost };
        }
    }
    Reply {
        text: stdout.to_string(),
        cost: None,
    }
}

fn invoke(command: &str, request: &Request) -> Result<String, String> {
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(command)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| format!("cannot launch: {e}"))?;
    let line = serde_json::to_string(request).expect("serializable") + "\n";
    if let Some(mut stdin) = child.stdin.take() {
        // an extractor may exit without reading its input; that is not a crash
        let _ = stdin.write_all(line.as_bytes());
    }
    let out = child
        .wait_with_output()
        .map_err(|e| format!("cannot wait: {e}"))?;
    if !out.status.success() {
        let stderr = String::from_utf8_lossy(&out.stderr);
        return Err(format!("{} {}", out.status, stderr.trim())
            .trim()
            .to_string());
    }
    String::from_utf8(out.stdout).map_err(|_| "output is not UTF-8".to_string())
}

fn add_cost(total: &mut Option<Cost>, next: Option<Cost>) {
    if let Some(c) = next {
        match total {
            Some(t) if t.currency == c.currency => t.amount += c.amount,
            Some(t) => t.currency = "mixed".into(),
            None => *total = Some(c),
        }
    }
}

/// Run the retry loop for one paper. Stops at the first document without
/// error-severity issues, or after `max_attempts`.
pub fn run_extractor(
    paper_id: &str,
    paper_text: &str,
    command: &str,
    mode: Mode,
    max_attempts: usize,
) -> Result<Extraction, ExtractionError> {
    assert!(max_attempts >= 1, "max_attempts must be at least 1");
    let start = Instant::now();
    let mut x = Extraction {
        record: RunRecord {
            paper_id: paper_id.to_string(),
            mode,
            status: RunStatus::AttemptsExhausted,
            attempts: 0,
            max_attempts,
            final_document: None,
            issue_counts: Vec::new(),
            wall_time_ms: 0,
            cost: None,
            crash: None,
        },
        text: None,
        document: None,
        issues: Vec::new(),
        feedback: Vec::new(),
    };
    let mut feedback = String::new();
    for attempt in 1..=max_attempts {
        x.record.attempts = attempt;
        x.feedback.push(feedback.clone());
        let request = Request {
            paper_id,
            paper_text,
            attempt_index: attempt,
            previous_feedback: &feedback,
            mode,
        };
        let stdout = match invoke(command, &request) {
            Ok(s) => s,
            Err(message) => {
                x.record.status = RunStatus::Crashed;
                x.record.crash = Some(message.clone());
                x.record.wall_time_ms = start.elapsed().as_millis() as u64;
                return Err(ExtractionError::ExtractorCrashed {
                    attempt,
                    message,
                    partial: Box::new(x),
                });
            }
        };
        let reply = parse_reply(&stdout);
        add_cost(&mut x.record.cost, reply.cost);
        let (document, issues) = check(&reply.text, mode);
        x.record
            .issue_counts
            .push(issues.iter().filter(|i| i.is_error()).count());
        x.text = Some(reply.text);
        x.document = document;
        let valid = x.document.is_some() && !has_errors(&issues);
        feedback = render_feedback(&issues);
        x.issues = issues;
        if valid {
            x.record.status = RunStatus::Valid;
            x.record.wall_time_ms = start.elapsed().as_millis() as u64;
            return Ok(x);
        }
    }
    x.record.wall_time_ms = start.elapsed().as_millis() as u64;
    Err(ExtractionError::AttemptsExhausted(Box::new(x)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_and_bare_replies() {
        let r = parse_reply(r#"{"document": [], "cost": {"amount": 0.25, "currency": "USD"}}"#);
        assert_eq!(r.text, "[]");
        assert_eq!(
            r.cost,
            Some(Cost {
                amount: 0.25,
                currency: "USD".into()
            })
        );
        let r = parse_reply("```json\n[]\n```");
        assert_eq!(r.text, "```json\n[]\n```");
        assert!(r.cost.is_none());
    }

    #[test]
    fn costs_accumulate() {
        let mut total = None;
        add_cost(
            &mut total,
            Some(Cost {
                amount: 0.5,
                currency: "USD".into(),
            }),
        );
        add_cost(&mut total, None);
        add_cost(
            &mut total,
            Some(Cost {
                amount: 0.25,
                currency: "USD".into(),
            }),
        );
        assert_eq!(total.as_ref().unwrap().amount, 0.75);
        add_cost(
            &mut total,
            Some(Cost {
                amount: 1.0,
                currency: "EUR".into(),
            }),
        );
        assert_eq!(total.unwrap().currency, "mixed");
    }
}
