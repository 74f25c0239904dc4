//! Leaderboard assembly from a run directory laid out as
//! `<dir>/<method>/<run>/<paper>.run.json` plus `<paper>.score.json`.

use std::fmt::Write as _;
use std::path::Path;

use expbench_core::scoring::{pearson, run_ci};
use serde::{Deserialize, Serialize};

use crate::document::PaperScore;
use crate::extractor::RunRecord;
use crate::{read, HarnessError};

pub const RUN_SUFFIX: &str = ".run.json";
pub const SCORE_SUFFIX: &str = ".score.json";

/// One repeated run of a method over the corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSet {
    pub label: String,
    pub records: Vec<RunRecord>,
    pub scores: Vec<PaperScore>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodRuns {
    pub method: String,
    pub runs: Vec<RunSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub mean: f64,
    /// 95% half-width; absent with a single run.
    pub half_width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSummary {
    /// Mean over runs of the summed per-paper cost.
    pub per_run: f64,
    pub currency: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub method: String,
    pub runs: usize,
    pub papers: usize,
    pub f1: Interval,
    pub precision: f64,
    pub recall: f64,
    /// Mean F1 per category (measurements, process, materials, configurations);
    /// absent for list modes.
    pub categories: Option<[f64; 4]>,
    pub mean_attempts: f64,
    pub cost: Option<CostSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaderboard {
    pub rows: Vec<LeaderboardRow>,
    /// Correlation between mean attempts and mean F1 across methods.
    pub attempts_f1_pearson: Option<f64>,
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = xs
        .into_iter()
        .fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn sorted_dirs(dir: &Path) -> Result<Vec<(String, std::path::PathBuf)>, HarnessError> {
    let entries = std::fs::read_dir(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| HarnessError::io(dir, e))?;
        let path = entry.path();
        if path.is_dir() {
            out.push((entry.file_name().to_string_lossy().into_owned(), path));
        }
    }
    out.sort();
    Ok(out)
}

fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, HarnessError> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| HarnessError::Format(format!("{}: {e}", path.display())))
}

pub fn load_runs(dir: &Path) -> Result<Vec<MethodRuns>, HarnessError> {
    let mut methods = Vec::new();
    for (method, mpath) in sorted_dirs(dir)? {
        let mut runs = Vec::new();
        for (label, rpath) in sorted_dirs(&mpath)? {
            let mut files: Vec<String> = std::fs::read_dir(&rpath)
                .map_err(|e| HarnessError::io(&rpath, e))?
                .filter_map(|e| e.ok().map(|e| e.file_name().to_string_lossy().into_owned()))
                .collect();
            files.sort();
            let mut records = Vec::new();
            let mut scores = Vec::new();
            for f in files {
                if f.ends_with(RUN_SUFFIX) {
                    records.push(load_json::<RunRecord>(&rpath.join(&f))?);
                } else if f.ends_with(SCORE_SUFFIX) {
                    scores.push(load_json::<PaperScore>(&rpath.join(&f))?);
                }
            }
            if !scores.is_empty() {
                runs.push(RunSet {
                    label,
                    records,
                    scores,
                });
            }
        }
        if !runs.is_empty() {
            methods.push(MethodRuns { method, runs });
        }
    }
    Ok(methods)
}

fn row(m: &MethodRuns) -> LeaderboardRow {
    let per_run = |f: &dyn Fn(&PaperScore) -> f64| -> Vec<f64> {
        m.runs
            .iter()
            .map(|r| mean(r.scores.iter().map(f)))
            .collect()
    };
    let f1s = per_run(&|s| s.f1);
    let f1 = match run_ci(&f1s) {
        Ok(ci) => Interval {
            mean: ci.mean,
            half_width: Some(ci.half_width),
        },
        Err(_) => Interval {
            mean: mean(f1s.iter().copied()),
            half_width: None,
        },
    };
    let all_reports = m
        .runs
        .iter()
        .flat_map(|r| &r.scores)
        .all(|s| s.report.is_some());
    let categories = all_reports.then(|| {
        let cat = |k: usize| {
            mean(per_run(&|s| {
                s.report.as_ref().map_or(0.0, |r| r.categories()[k].f1)
            }))
        };
        [cat(0), cat(1), cat(2), cat(3)]
    });
    let records: Vec<&RunRecord> = m.runs.iter().flat_map(|r| &r.records).collect();
    let currencies: Vec<&str> = records
        .iter()
        .filter_map(|r| r.cost.as_ref())
        .map(|c| c.currency.as_str())
        .collect();
    let cost = (!currencies.is_empty()).then(|| {
        let currency = if currencies.iter().all(|c| *c == currencies[0]) {
            currencies[0]
        } else {
            "mixed"
        };
        let per_run = mean(m.runs.iter().map(|r| {
            r.records
                .iter()
                .filter_map(|x| x.cost.as_ref())
                .map(|c| c.amount)
                .sum::<f64>()
        }));
        CostSummary {
            per_run,
            currency: currency.to_string(),
        }
    });
    LeaderboardRow {
        method: m.method.clone(),
        runs: m.runs.len(),
        papers: m.runs.iter().map(|r| r.scores.len()).max().unwrap_or(0),
        f1,
        precision: mean(per_run(&|s| s.precision)),
        recall: mean(per_run(&|s| s.recall)),
        categories,
        mean_attempts: mean(records.iter().map(|r| r.attempts as f64)),
        cost,
    }
}

pub fn build(methods: &[MethodRuns]) -> Result<Leaderboard, HarnessError> {
    if methods.is_empty() {
        return Err(HarnessError::EmptyRunSet);
    }
    let rows: Vec<LeaderboardRow> = methods.iter().map(row).collect();
    let attempts: Vec<f64> = rows.iter().map(|r| r.mean_attempts).collect();
    let f1: Vec<f64> = rows.iter().map(|r| r.f1.mean).collect();
    let attempts_f1_pearson = pearson(&attempts, &f1).ok();
    Ok(Leaderboard {
        rows,
        attempts_f1_pearson,
    })
}

pub fn report(dir: &Path) -> Result<Leaderboard, HarnessError> {
    build(&load_runs(dir)?)
}

fn ci_text(i: &Interval) -> String {
    match i.half_width {
        Some(h) => format!("{:.3} ± {:.3}", i.mean, h),
        None => format!("{:.3} ± n/a", i.mean),
    }
}

fn pad(cells: &[String], widths: &[usize]) -> String {
    let line: Vec<String> = cells
        .iter()
        .zip(widths)
        .map(|(c, w)| format!("{c:<w$}"))
        .collect();
    line.join("  ").trim_end().to_string()
}

/// Aligned text table, one row per method.
pub fn render_table(board: &Leaderboard) -> String {
    let header = [
        "method", "runs", "F1", "P", "R", "meas", "proc", "mat", "config", "attempts", "cost",
    ];
    let mut rows: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for r in &board.rows {
        let cat = |k: usize| {
            r.categories
                .map_or("n/a".to_string(), |c| format!("{:.3}", c[k]))
        };
        rows.push(vec![
            r.method.clone(),
            r.runs.to_string(),
            ci_text(&r.f1),
            format!("{:.3}", r.precision),
            format!("{:.3}", r.recall),
            cat(0),
            cat(1),
            cat(2),
            cat(3),
            format!("{:.2}", r.mean_attempts),
            r.cost.as_ref().map_or("n/a".to_string(), |c| {
                format!("{:.2} {}", c.per_run, c.currency)
            }),
        ]);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|k| rows.iter().map(|r| r[k].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in &rows {
        writeln!(out, "{}", pad(r, &widths)).unwrap();
    }
    match board.attempts_f1_pearson {
        Some(p) => writeln!(out, "pearson(attempts, F1) = {p:.4}").unwrap(),
        None => writeln!(out, "pearson(attempts, F1) = n/a").unwrap(),
    }
    out
}

pub fn render_csv(board: &Leaderboard) -> String {
    let mut out = String::from(
        "method,runs,papers,f1,f1_half_width,precision,recall,measurements_f1,process_f1,materials_f1,configurations_f1,mean_attempts,cost_per_run,currency\n",
    );
    let num = |x: f64| format!("{x:.6}");
    let quote = |s: &str| {
        if s.contains([',', '"', '\n']) {
            format!("\"{}\"", s.replace('"', "\"\""))
        } else {
            s.to_string()
        }
    };
    for r in &board.rows {
        let cats: Vec<String> = match r.categories {
            Some(c) => c.iter().map(|x| num(*x)).collect(),
            None => vec![String::new(); 4],
        };
        let fields = [
            quote(&r.method),
            r.runs.to_string(),
            r.papers.to_string(),
            num(r.f1.mean),
            r.f1.half_width.map(num).unwrap_or_default(),
            num(r.precision),
            num(r.recall),
            cats.join(","),
            num(r.mean_attempts),
            r.cost.as_ref().map(|c| num(c.per_run)).unwrap_or_default(),
            r.cost
                .as_ref()
                .map(|c| quote(&c.currency))
                .unwrap_or_default(),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}
