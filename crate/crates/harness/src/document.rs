use expbench_core::composition::Composition;
use expbench_core::datamodel::Experiment;
use expbench_core::interchange::{
    decode, decode_composition_list, decode_property_list, DecodeError,
};
use expbench_core::resolve::ResolveMode;
use expbench_core::scoring::{
    score_composition_list, score_overall, score_property_list, CategoryScore, ScoreReport,
    ScoringConfig, ScoringError,
};
use expbench_core::validation::{validate_all, ValidationIssue};
use serde::{Deserialize, Serialize};

use crate::config::Mode;

/// A decoded extraction in any of the supported output shapes.
#[derive(Debug, Clone, PartialEq)]
pub enum Document {
    Experiments(Vec<Experiment>),
    Compositions(Vec<Composition>),
    Properties(Vec<f64>),
}

impl Document {
    pub fn parse(text: &str, mode: Mode) -> Result<Document, DecodeError> {
        Ok(match mode {
            Mode::Experiment => Document::Experiments(decode(text)?),
            Mode::CompositionList => Document::Compositions(decode_composition_list(text)?),
            Mode::PropertyList => Document::Properties(decode_property_list(text)?),
        })
    }

    pub fn empty(mode: Mode) -> Document {
        match mode {
            Mode::Experiment => Document::Experiments(Vec::new()),
            Mode::CompositionList => Document::Compositions(Vec::new()),
            Mode::PropertyList => Document::Properties(Vec::new()),
        }
    }

    /// Rule-level issues; list documents have none beyond decoding.
    pub fn issues(&self) -> Vec<ValidationIssue> {
        match self {
            Document::Experiments(e) => validate_all(e, ResolveMode::Graph),
            _ => Vec::new(),
        }
    }
}

/// Decode and validate. Decode failures yield their schema issues and no document.
pub fn check(text: &str, mode: Mode) -> (Option<Document>, Vec<ValidationIssue>) {
    match Document::parse(text, mode) {
        Ok(doc) => {
            let issues = doc.issues();
            (Some(doc), issues)
        }
        Err(e) => (None, e.issues()),
    }
}

/// Score of one paper: the full report for experiment documents, a single
/// category for list documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperScore {
    pub paper_id: String,
    pub mode: Mode,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ScoreReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub list: Option<CategoryScore>,
}

pub fn score(
    paper_id: &str,
    extracted: &Document,
    target: &Document,
    cfg: &ScoringConfig,
) -> Result<PaperScore, ScoringError> {
    let list = |s: CategoryScore, mode| PaperScore {
        paper_id: paper_id.to_string(),
        mode,
        precision: s.precision,
        recall: s.recall,
        f1: s.f1,
        report: None,
        list: Some(s),
    };
    Ok(match (extracted, target) {
        (Document::Experiments(e), Document::Experiments(t)) => {
            let r = score_overall(e, t, cfg)?;
            PaperScore {
                paper_id: paper_id.to_string(),
                mode: Mode::Experiment,
                precision: r.overall.precision,
                recall: r.overall.recall,
                f1: r.overall.f1,
                report: Some(r),
                list: None,
            }
        }
        (Document::Compositions(e), Document::Compositions(t)) => {
            list(score_composition_list(e, t, cfg), Mode::CompositionList)
        }
        (Document::Properties(e), Document::Properties(t)) => {
            list(score_property_list(e, t, cfg), Mode::PropertyList)
        }
        _ => panic!("extracted and target documents must share a mode"),
    })
}
