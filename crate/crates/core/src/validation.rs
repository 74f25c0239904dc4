//! Consistency rules for experiments, each issue addressed by document path.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::datamodel::{
    placeholder_name, CompMeasurement, Configuration, EntrySlot, Experiment, Material,
    MaterialEntry, Measurement, Observation, ProcessEvent, QuantityField,
};
use crate::ontology::MeasurementStatistic;
use crate::path::DocumentPath;
use crate::resolve::{
    event_path, group_path, resolve_collect, Resolution, ResolveError, ResolveMode,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleId {
    /// The document could not be read into the schema at all.
    Schema,
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    R7,
    R8,
    R9,
    R10,
    R11,
    R12,
}

impl RuleId {
    pub const RULES: [RuleId; 12] = [
        RuleId::R1,
        RuleId::R2,
        RuleId::R3,
        RuleId::R4,
        RuleId::R5,
        RuleId::R6,
        RuleId::R7,
        RuleId::R8,
        RuleId::R9,
        RuleId::R10,
        RuleId::R11,
        RuleId::R12,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleId::Schema => "SCHEMA",
            RuleId::R1 => "R1",
            RuleId::R2 => "R2",
            RuleId::R3 => "R3",
            RuleId::R4 => "R4",
            RuleId::R5 => "R5",
            RuleId::R6 => "R6",
            RuleId::R7 => "R7",
            RuleId::R8 => "R8",
            RuleId::R9 => "R9",
            RuleId::R10 => "R10",
            RuleId::R11 => "R11",
            RuleId::R12 => "R12",
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RuleId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        std::iter::once(RuleId::Schema)
            .chain(RuleId::RULES)
            .find(|r| r.as_str() == s)
            .ok_or_else(|| s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationIssue {
    pub rule: RuleId,
    pub severity: Severity,
    pub path: DocumentPath,
    pub message: String,
}

impl ValidationIssue {
    pub fn error(rule: RuleId, path: DocumentPath, message: impl Into<String>) -> Self {
        ValidationIssue {
            rule,
            severity: Severity::Error,
            path,
            message: message.into(),
        }
    }

    pub fn warning(rule: RuleId, path: DocumentPath, message: impl Into<String>) -> Self {
        ValidationIssue {
            rule,
            severity: Severity::Warning,
            path,
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// The same issue relocated under `prefix`.
    pub fn under(mut self, prefix: &DocumentPath) -> Self {
        self.path = self.path.under(prefix);
        self
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.severity {
            Severity::Error => write!(f, "{} {}: {}", self.rule, self.path, self.message),
            Severity::Warning => {
                write!(f, "{} {}: warning: {}", self.rule, self.path, self.message)
            }
        }
    }
}

pub fn has_errors(issues: &[ValidationIssue]) -> bool {
    issues.iter().any(ValidationIssue::is_error)
}

/// One line per issue, ordered by path and then rule.
pub fn render_feedback(issues: &[ValidationIssue]) -> String {
    let mut sorted: Vec<&ValidationIssue> = issues.iter().collect();
    sorted.sort_by(|a, b| (&a.path, a.rule, &a.message).cmp(&(&b.path, b.rule, &b.message)));
    let mut out = String::new();
    for issue in sorted {
        out.push_str(&issue.to_string());
        out.push('\n');
    }
    out
}

pub fn validate(e: &Experiment) -> Vec<ValidationIssue> {
    validate_with_mode(e, ResolveMode::Graph)
}

/// Validate a whole document; paths are prefixed with the experiment's index.
pub fn validate_all(experiments: &[Experiment], mode: ResolveMode) -> Vec<ValidationIssue> {
    experiments
        .iter()
        .enumerate()
        .flat_map(|(k, e)| {
            let prefix = DocumentPath::root().index(k);
            validate_with_mode(e, mode)
                .into_iter()
                .map(move |i| i.under(&prefix))
        })
        .collect()
}

pub fn validate_with_mode(e: &Experiment, mode: ResolveMode) -> Vec<ValidationIssue> {
    let (resolution, resolve_errors) = resolve_collect(e, mode);
    let mut issues = Vec::new();
    check_names(e, &mut issues);
    for err in &resolve_errors {
        let rule = match err {
            ResolveError::CycleDetected { .. } => RuleId::R2,
            _ => RuleId::R12,
        };
        issues.push(ValidationIssue::error(
            rule,
            err.path().clone(),
            resolve_message(err),
        ));
    }
    check_references(e, &resolution, &mut issues);
    check_templates(e, &mut issues);
    check_melting(e, &resolution, &mut issues);
    for (i, m) in e.output_materials.iter().enumerate() {
        check_material(i, m, &mut issues);
    }
    for (g, group) in e.synthesis_groups.iter().enumerate() {
        for (j, ev) in group.events.iter().enumerate() {
            let at = group_path(e, g).index(j);
            check_event_quantities(ev, &at, &mut issues);
        }
    }
    issues.sort_by(|a, b| (&a.path, a.rule, &a.message).cmp(&(&b.path, b.rule, &b.message)));
    issues.dedup();
    issues
}

fn resolve_message(err: &ResolveError) -> String {
    // The path is carried separately; drop the `path: ` prefix of the display form.
    let full = err.to_string();
    let prefix = format!("{}: ", err.path());
    full.strip_prefix(&prefix)
        .map(str::to_string)
        .unwrap_or(full)
}

fn material_path(i: usize) -> DocumentPath {
    DocumentPath::root().key("output_materials").index(i)
}

fn check_names(e: &Experiment, issues: &mut Vec<ValidationIssue>) {
    let mut seen: BTreeMap<&str, &'static str> = BTreeMap::new();
    for name in e.raw_materials.keys() {
        seen.insert(name.as_str(), "raw material");
    }
    for (i, m) in e.output_materials.iter().enumerate() {
        if let Some(name) = &m.name {
            if let Some(prev) = seen.insert(name.as_str(), "material") {
                issues.push(ValidationIssue::error(
                    RuleId::R1,
                    material_path(i).key("name"),
                    format!("name `{name}` is already used by a {prev}"),
                ));
            }
        }
    }
    let mut signatures: BTreeSet<(&str, usize)> = BTreeSet::new();
    for (g, group) in e.synthesis_groups.iter().enumerate() {
        if let Some(prev) = seen.get(group.name.as_str()) {
            issues.push(ValidationIssue::error(
                RuleId::R1,
                group_path(e, g),
                format!("group name `{}` is already used by a {prev}", group.name),
            ));
        }
        if !signatures.insert((group.name.as_str(), group.params.len())) {
            issues.push(ValidationIssue::error(
                RuleId::R1,
                group_path(e, g),
                format!(
                    "another group named `{}` already takes {} parameter(s)",
                    group.name,
                    group.params.len()
                ),
            ));
        }
    }
}

fn check_references(e: &Experiment, r: &Resolution, issues: &mut Vec<ValidationIssue>) {
    for name in e.raw_materials.keys() {
        if !r.referenced_raw.contains(name) {
            issues.push(ValidationIssue::error(
                RuleId::R3,
                DocumentPath::root().key("raw_materials").key(name.clone()),
                format!("raw material `{name}` is never used as an input"),
            ));
        }
    }
    for g in 0..e.synthesis_groups.len() {
        if !r.referenced_groups.contains(&g) {
            issues.push(ValidationIssue::error(
                RuleId::R4,
                group_path(e, g),
                "synthesis group is not referenced by any material's process",
            ));
        }
    }
}

fn check_templates(e: &Experiment, issues: &mut Vec<ValidationIssue>) {
    for (g, group) in e.synthesis_groups.iter().enumerate() {
        let used: BTreeSet<&str> = group
            .events
            .iter()
            .flat_map(ProcessEvent::placeholders)
            .collect();
        for p in &group.params {
            if !used.contains(p.as_str()) {
                issues.push(ValidationIssue::error(
                    RuleId::R5,
                    group_path(e, g),
                    format!("parameter `{p}` is declared but `[{p}]` appears in no event field"),
                ));
            }
        }
        for (j, ev) in group.events.iter().enumerate() {
            for var in ev.placeholders() {
                if !group.params.iter().any(|p| p == var) {
                    issues.push(ValidationIssue::error(
                        RuleId::R5,
                        group_path(e, g).index(j),
                        format!("placeholder `[{var}]` is not a declared parameter of the group"),
                    ));
                }
            }
            for s in [&ev.description, &ev.source].into_iter().flatten() {
                if placeholder_name(s).is_none() && s.contains('[') && s.contains(']') {
                    // partial interpolation is not substituted; only whole-field tokens are
                    let var = s
                        .split('[')
                        .nth(1)
                        .and_then(|t| t.split(']').next())
                        .unwrap_or("");
                    if group.params.iter().any(|p| p == var) {
                        issues.push(ValidationIssue::warning(
                            RuleId::R5,
                            group_path(e, g).index(j),
                            format!("`[{var}]` inside longer text is not substituted"),
                        ));
                    }
                }
            }
        }
    }
}

fn check_melting(e: &Experiment, r: &Resolution, issues: &mut Vec<ValidationIssue>) {
    let mut flagged = BTreeSet::new();
    for m in &r.materials {
        let chain = &m.linear_chain;
        for (k, ev) in chain.iter().enumerate() {
            if !ev.kind.is_melting() {
                continue;
            }
            let next = chain.get(k + 1);
            if next.is_some_and(|n| n.kind.is_casting()) {
                continue;
            }
            if !flagged.insert(ev.origin) {
                continue;
            }
            let message = match next {
                Some(n) => format!(
                    "{} is followed by {} instead of a casting step",
                    ev.kind, n.kind
                ),
                None => format!("{} ends the process chain without a casting step", ev.kind),
            };
            issues.push(ValidationIssue::error(
                RuleId::R6,
                event_path(e, ev.origin),
                message,
            ));
        }
    }
}

fn slot_path(base: &DocumentPath, slot: EntrySlot) -> DocumentPath {
    let p = base.index(slot.index);
    match slot.member {
        Some(k) => p.key("values").index(k),
        None => p,
    }
}

fn check_material(i: usize, m: &Material, issues: &mut Vec<ValidationIssue>) {
    let list = material_path(i).key("measurements");
    let has_composition = m
        .measurements
        .iter()
        .any(|e| matches!(e, MaterialEntry::Observation(Observation::Composition(_))));
    if !has_composition {
        issues.push(ValidationIssue::error(
            RuleId::R8,
            list.clone(),
            "material has no composition measurement",
        ));
    }

    let layout = m.layout();
    let mut observations: Vec<(&Observation, DocumentPath)> = Vec::new();
    let mut configs: Vec<(&Configuration, DocumentPath)> = Vec::new();
    for (entry, slot) in m.measurements.iter().zip(&layout) {
        match entry {
            MaterialEntry::Observation(o) => observations.push((o, slot_path(&list, *slot))),
            MaterialEntry::Configuration(c) => configs.push((c, slot_path(&list, *slot))),
        }
    }
    check_group_ids(&observations, issues);
    for (o, at) in &observations {
        check_observation(o, at, issues);
    }
    check_configurations(&configs, issues);
    for (c, at) in &configs {
        let inner = at.key("measurements");
        let obs: Vec<(&Observation, DocumentPath)> = c
            .measurements
            .iter()
            .zip(c.layout())
            .map(|(o, slot)| (o, slot_path(&inner, slot)))
            .collect();
        check_group_ids(&obs, issues);
        for (o, at) in &obs {
            check_observation(o, at, issues);
        }
    }
}

fn check_observation(o: &Observation, at: &DocumentPath, issues: &mut Vec<ValidationIssue>) {
    match o {
        Observation::Scalar(m) => {
            check_quantity(&m.temperature, at, "temperature", issues);
            check_quantity(&m.pressure, at, "pressure", issues);
        }
        Observation::Composition(c) => check_composition_total(c, at, issues),
        Observation::Lattice(l) => check_quantity(&l.phase_fraction, at, "phase_fraction", issues),
    }
}

/// Percent-style maps may total 100 or, written as fractions, 1.
const PERCENT_TOLERANCE: f64 = 1.0;
const FRACTION_TOLERANCE: f64 = 0.01;

fn check_composition_total(
    c: &CompMeasurement,
    at: &DocumentPath,
    issues: &mut Vec<ValidationIssue>,
) {
    let Some(total) = c.input.written_total() else {
        return;
    };
    if (total - 100.0).abs() <= PERCENT_TOLERANCE || (total - 1.0).abs() <= FRACTION_TOLERANCE {
        return;
    }
    issues.push(ValidationIssue::error(
        RuleId::R7,
        at.key("composition"),
        format!(
            "composition amounts sum to {} instead of 100",
            round6(total)
        ),
    ));
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn check_quantity<V>(
    q: &Option<QuantityField<V>>,
    at: &DocumentPath,
    field: &str,
    issues: &mut Vec<ValidationIssue>,
) {
    let Some(q) = q else { return };
    let missing = match (q.value.is_some(), q.unit.is_some()) {
        (true, true) => return,
        (false, true) => "value",
        (true, false) => "unit",
        (false, false) => "value and unit",
    };
    issues.push(ValidationIssue::error(
        RuleId::R10,
        at.key(field),
        format!("quantity is missing its {missing}"),
    ));
}

fn check_event_quantities(ev: &ProcessEvent, at: &DocumentPath, issues: &mut Vec<ValidationIssue>) {
    check_quantity(&ev.temperature, at, "temperature", issues);
    check_quantity(&ev.duration, at, "duration", issues);
}

fn check_group_ids(obs: &[(&Observation, DocumentPath)], issues: &mut Vec<ValidationIssue>) {
    let mut groups: BTreeMap<&str, Vec<(&Measurement, &DocumentPath)>> = BTreeMap::new();
    for (o, at) in obs {
        if let Observation::Scalar(m) = o {
            if let Some(g) = &m.group_id {
                groups.entry(g.as_str()).or_default().push((m, at));
            }
        }
    }
    for members in groups.values() {
        let (first, _) = members[0];
        for (m, at) in &members[1..] {
            if m.kind != first.kind || m.unit != first.unit {
                issues.push(ValidationIssue::error(
                    RuleId::R11,
                    (*at).clone(),
                    format!(
                        "grouped values must share kind and unit ({} {} vs {} {})",
                        m.kind, m.unit, first.kind, first.unit
                    ),
                ));
            }
        }
        let mut counts: BTreeMap<MeasurementStatistic, usize> = BTreeMap::new();
        for (m, at) in members {
            match m.statistic {
                None => issues.push(ValidationIssue::warning(
                    RuleId::R11,
                    (*at).clone(),
                    "grouped value has no statistic",
                )),
                Some(s) => {
                    let n = counts.entry(s).or_default();
                    *n += 1;
                    if *n == 2 && s != MeasurementStatistic::Percentile {
                        issues.push(ValidationIssue::warning(
                            RuleId::R11,
                            (*at).clone(),
                            format!("statistic `{s}` appears more than once in the group"),
                        ));
                    }
                }
            }
        }
        let value_of = |s: MeasurementStatistic| {
            members
                .iter()
                .find(|(m, _)| m.statistic == Some(s))
                .map(|(m, at)| (m.unit.to_canonical(m.value.magnitude.value()), *at))
        };
        if let (Some((lo, _)), Some((hi, at))) = (
            value_of(MeasurementStatistic::Lower),
            value_of(MeasurementStatistic::Upper),
        ) {
            if lo > hi {
                issues.push(ValidationIssue::warning(
                    RuleId::R11,
                    at.clone(),
                    "upper bound is below the lower bound",
                ));
            }
        }
    }
}

fn check_configurations(
    configs: &[(&Configuration, DocumentPath)],
    issues: &mut Vec<ValidationIssue>,
) {
    let index: BTreeMap<&str, usize> = configs
        .iter()
        .enumerate()
        .rev()
        .map(|(k, (c, _))| (c.name.as_str(), k))
        .collect();
    let mut seen = BTreeSet::new();
    let mut parent: Vec<Option<usize>> = vec![None; configs.len()];
    for (k, (c, at)) in configs.iter().enumerate() {
        if !seen.insert(c.name.as_str()) {
            issues.push(ValidationIssue::error(
                RuleId::R9,
                at.key("name"),
                format!(
                    "configuration name `{}` is used twice in this material",
                    c.name
                ),
            ));
        }
        match &c.within {
            None if c.is_precipitate() => issues.push(ValidationIssue::error(
                RuleId::R9,
                at.clone(),
                "precipitate configuration needs a `within` reference",
            )),
            None => {}
            Some(w) => match index.get(w.as_str()) {
                Some(&p) => parent[k] = Some(p),
                None => issues.push(ValidationIssue::error(
                    RuleId::R9,
                    at.key("within"),
                    format!("no configuration named `{w}` in this material"),
                )),
            },
        }
    }
    // A configuration whose `within` chain returns to itself is reported once per cycle.
    let mut reported = BTreeSet::new();
    for start in 0..configs.len() {
        let mut trail = vec![start];
        let mut cur = parent[start];
        while let Some(p) = cur {
            if p == start {
                let key: BTreeSet<usize> = trail.iter().copied().collect();
                if reported.insert(key.iter().copied().collect::<Vec<_>>()) {
                    let first = *key.iter().next().unwrap_or(&start);
                    let names: Vec<&str> =
                        trail.iter().map(|&k| configs[k].0.name.as_str()).collect();
                    issues.push(ValidationIssue::error(
                        RuleId::R9,
                        configs[first].1.key("within"),
                        format!(
                            "configurations are nested inside themselves: {}",
                            names.join(" -> ")
                        ),
                    ));
                }
                break;
            }
            if trail.contains(&p) || trail.len() > configs.len() {
                break;
            }
            trail.push(p);
            cur = parent[p];
        }
    }
}
