use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use expbench_core::scoring::ScoringConfig;
use expbench_core::validation::{has_errors, render_feedback, ValidationIssue};
use serde::Serialize;

use crate::config::Mode;
use crate::document::{check, score, Document, PaperScore};
use crate::extractor::{run_extractor, RunRecord};
use crate::leaderboard::{self, Leaderboard, RUN_SUFFIX, SCORE_SUFFIX};
use crate::{read, write, HarnessError};

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

/// Outcome of `validate`: the document's issues, or its decode failure.
#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    pub issues: Vec<ValidationIssue>,
    pub decoded: bool,
}

impl Validation {
    pub fn ok(&self) -> bool {
        self.decoded && !has_errors(&self.issues)
    }

    pub fn rendered(&self) -> String {
        render_feedback(&self.issues)
    }
}

pub fn cmd_validate(path: &Path, mode: Mode) -> Result<Validation, HarnessError> {
    let (doc, issues) = check(&read(path)?, mode);
    Ok(Validation {
        issues,
        decoded: doc.is_some(),
    })
}

fn load_target(path: &Path, mode: Mode) -> Result<Document, HarnessError> {
    let text = read(path)?;
    let doc = Document::parse(&text, mode).map_err(|error| HarnessError::DecodeFailed {
        path: path.to_path_buf(),
        error,
    })?;
    let issues: Vec<ValidationIssue> = doc
        .issues()
        .into_iter()
        .filter(ValidationIssue::is_error)
        .collect();
    if !issues.is_empty() {
        return Err(HarnessError::TargetInvalid {
            path: path.to_path_buf(),
            issues,
        });
    }
    Ok(doc)
}

fn paper_id(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "paper".to_string(), |s| s.to_string_lossy().into_owned())
}

/// Score an extracted document against a target. The target must be free of
/// errors; the extracted document only has to decode.
pub fn cmd_score(
    extracted: &Path,
    target: &Path,
    mode: Mode,
    cfg: &ScoringConfig,
) -> Result<PaperScore, HarnessError> {
    let t = load_target(target, mode)?;
    let e =
        Document::parse(&read(extracted)?, mode).map_err(|error| HarnessError::DecodeFailed {
            path: extracted.to_path_buf(),
            error,
        })?;
    score(&paper_id(extracted), &e, &t, cfg).map_err(|e| HarnessError::Config(e.to_string()))
}

pub fn render_score(s: &PaperScore) -> String {
    let mut out = String::new();
    let line = |out: &mut String, name: &str, p: f64, r: f64, f: f64| {
        writeln!(out, "{name:<16}{p:>10.4}{r:>10.4}{f:>10.4}").unwrap();
    };
    writeln!(
        out,
        "{:<16}{:>10}{:>10}{:>10}",
        "category", "precision", "recall", "f1"
    )
    .unwrap();
    if let Some(r) = &s.report {
        let names = ["measurements", "process", "materials", "configurations"];
        for (name, c) in names.iter().zip(r.categories()) {
            line(&mut out, name, c.precision, c.recall, c.f1);
        }
    } else if let Some(c) = &s.list {
        line(&mut out, s.mode.as_str(), c.precision, c.recall, c.f1);
    }
    line(&mut out, "overall", s.precision, s.recall, s.f1);
    if let Some(r) = &s.report {
        if !r.material_assignment.is_empty() {
            writeln!(out, "material assignment:").unwrap();
            for m in &r.material_assignment {
                let tp = if m.true_positive { "TP" } else { "--" };
                writeln!(
                    out,
                    "  {} -> {}  cost {:.4}  {tp}",
                    m.extracted, m.target, m.cost
                )
                .unwrap();
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub papers: PathBuf,
    pub targets: PathBuf,
    pub extractor: String,
    pub mode: Mode,
    pub max_attempts: usize,
    pub out: PathBuf,
    pub method: String,
    pub run_label: Option<String>,
    pub workers: usize,
    pub scoring: ScoringConfig,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub results: Vec<(RunRecord, PaperScore)>,
}

fn next_run_label(method_dir: &Path) -> String {
    (1..)
        .map(|k| format!("run-{k}"))
        .find(|l| !method_dir.join(l).exists())
        .expect("unbounded")
}

struct Paper {
    id: String,
    text: String,
    target: Document,
}

fn list_papers(opts: &RunOptions) -> Result<Vec<Paper>, HarnessError> {
    let entries = std::fs::read_dir(&opts.papers).map_err(|e| HarnessError::io(&opts.papers, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let id = paper_id(&p);
            let target = load_target(&opts.targets.join(format!("{id}.json")), opts.mode)?;
            Ok(Paper {
                text: read(&p)?,
                id,
                target,
            })
        })
        .collect()
}

fn process(
    paper: &Paper,
    opts: &RunOptions,
    dir: &Path,
) -> Result<(RunRecord, PaperScore), HarnessError> {
    let x = run_extractor(
        &paper.id,
        &paper.text,
        &opts.extractor,
        opts.mode,
        opts.max_attempts,
    )
    .unwrap_or_else(|e| e.into_extraction());
    let mut record = x.record;
    if let Some(text) = &x.text {
        let name = format!("{}.json", paper.id);
        write(&dir.join(&name), text)?;
        record.final_document = Some(name);
    }
    let extracted = x.document.unwrap_or_else(|| Document::empty(opts.mode));
    let s = score(&paper.id, &extracted, &paper.target, &opts.scoring)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    write(
        &dir.join(format!("{}{RUN_SUFFIX}", paper.id)),
        &to_json(&record),
    )?;
    write(
        &dir.join(format!("{}{SCORE_SUFFIX}", paper.id)),
        &to_json(&s),
    )?;
    Ok((record, s))
}

type PaperResult = Result<(RunRecord, PaperScore), HarnessError>;

/// Extract and score every `<id>.txt` under `papers` against `targets/<id>.json`,
/// writing records into `out/<method>/<run>/`. Papers run on a bounded pool.
pub fn cmd_run(opts: &RunOptions) -> Result<RunOutcome, HarnessError> {
    opts.scoring
        .weights
        .check()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let papers = list_papers(opts)?;
    let method_dir = opts.out.join(&opts.method);
    let label = opts
        .run_label
        .clone()
        .unwrap_or_else(|| next_run_label(&method_dir));
    let dir = method_dir.join(label);
    std::fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<PaperResult>>> =
        Mutex::new((0..papers.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..opts.workers.max(1).min(papers.len().max(1)) {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some(paper) = papers.get(k) else { break };
                let r = process(paper, opts, &dir);
                results.lock().expect("no poisoned lock")[k] = Some(r);
            });
        }
    });
    let results = results
        .into_inner()
        .expect("no poisoned lock")
        .into_iter()
        .map(|r| r.expect("every paper processed"))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RunOutcome { dir, results })
}

pub fn cmd_report(dir: &Path) -> Result<Leaderboard, HarnessError> {
    leaderboard::report(dir)
}
