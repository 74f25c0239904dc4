//! The experiment schema: raw materials, synthesis groups, materials and their
//! measurements, plus the arrow notation that defines a material's lineage.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use thiserror::Error;

use crate::composition::{Composition, CompositionError, CompositionInput};
use crate::ontology::{
    AlloyMeasurementKind, AuditTrail, CanonicalValue, ConfigTag, CrysStruct, MeasurementMethod,
    MeasurementStatistic, PhaseMeasurementKind, ProcessKind, RawMaterialKind,
};
use crate::quantities::{Decimal, QualifiedValue, Quantity, Unit};

/// A field that is either a literal or a template placeholder such as `[Temp]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Slot<T> {
    Value(T),
    Var(String),
}

impl<T> Slot<T> {
    pub fn var(&self) -> Option<&str> {
        match self {
            Slot::Var(v) => Some(v),
            Slot::Value(_) => None,
        }
    }
}

/// The variable name inside a whole-field placeholder token (`"[Temp]"` → `Temp`).
pub fn placeholder_name(token: &str) -> Option<&str> {
    let inner = token.strip_prefix('[')?.strip_suffix(']')?;
    (!inner.is_empty() && !inner.contains(['[', ']'])).then_some(inner)
}

pub fn placeholder_token(var: &str) -> String {
    format!("[{var}]")
}

/// A `{value, unit}` object. Either half may be missing in a document as
/// written; such fields are reported by validation rather than rejected on read.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantityField<V> {
    pub value: Option<V>,
    pub unit: Option<Unit>,
}

impl<V> QuantityField<V> {
    pub fn new(value: V, unit: Unit) -> Self {
        QuantityField {
            value: Some(value),
            unit: Some(unit),
        }
    }

    pub fn is_complete(&self) -> bool {
        self.value.is_some() && self.unit.is_some()
    }
}

impl QuantityField<Decimal> {
    pub fn quantity(&self) -> Option<Quantity> {
        match (&self.value, self.unit) {
            (Some(v), Some(u)) => Some(Quantity {
                value: v.clone(),
                unit: u,
            }),
            _ => None,
        }
    }
}

impl From<Quantity> for QuantityField<Decimal> {
    fn from(q: Quantity) -> Self {
        QuantityField {
            value: Some(q.value),
            unit: Some(q.unit),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawMaterial {
    pub kind: RawMaterialKind,
    pub description: Option<String>,
    pub source: Option<String>,
}

impl RawMaterial {
    pub fn new(kind: RawMaterialKind) -> Self {
        RawMaterial {
            kind,
            description: None,
            source: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessEvent {
    pub kind: ProcessKind,
    pub temperature: Option<QuantityField<Slot<Decimal>>>,
    pub duration: Option<QuantityField<Slot<Decimal>>>,
    pub description: Option<String>,
    pub source: Option<String>,
    pub inputs: Option<Vec<Slot<String>>>,
}

impl ProcessEvent {
    pub fn new(kind: ProcessKind) -> Self {
        ProcessEvent {
            kind,
            temperature: None,
            duration: None,
            description: None,
            source: None,
            inputs: None,
        }
    }

    /// Every placeholder variable referenced by a field of this event.
    pub fn placeholders(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for q in [&self.temperature, &self.duration].into_iter().flatten() {
            if let Some(Slot::Var(v)) = &q.value {
                out.push(v.as_str());
            }
        }
        for s in [&self.description, &self.source].into_iter().flatten() {
            if let Some(v) = placeholder_name(s) {
                out.push(v);
            }
        }
        for input in self.inputs.iter().flatten() {
            if let Slot::Var(v) = input {
                out.push(v.as_str());
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisGroup {
    pub name: String,
    pub params: Vec<String>,
    pub events: Vec<ProcessEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed synthesis group key `{0}`")]
pub struct SignatureError(pub String);

impl SynthesisGroup {
    /// The map key form: `name` or `name[Var1,Var2]`.
    pub fn signature(&self) -> String {
        if self.params.is_empty() {
            self.name.clone()
        } else {
            format!("{}[{}]", self.name, self.params.join(","))
        }
    }

    pub fn parse_signature(key: &str) -> Result<(String, Vec<String>), SignatureError> {
        let err = || SignatureError(key.to_string());
        let (name, params) = match key.find('[') {
            None => (key, Vec::new()),
            Some(open) => {
                let inner = key[open..]
                    .strip_prefix('[')
                    .and_then(|r| r.strip_suffix(']'))
                    .ok_or_else(err)?;
                let params: Vec<String> = inner.split(',').map(str::to_string).collect();
                if params.iter().any(|p| !is_name(p)) {
                    return Err(err());
                }
                (&key[..open], params)
            }
        };
        if !is_name(name)
            || params
                .iter()
                .enumerate()
                .any(|(i, p)| params[..i].contains(p))
        {
            return Err(err());
        }
        Ok((name.to_string(), params))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MeasurementKind {
    Alloy(AlloyMeasurementKind),
    Phase(PhaseMeasurementKind),
}

impl MeasurementKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MeasurementKind::Alloy(k) => k.as_str(),
            MeasurementKind::Phase(k) => k.as_str(),
        }
    }
}

impl fmt::Display for MeasurementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MeasurementKind {
    type Err = crate::ontology::OntologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse::<AlloyMeasurementKind>()
            .map(MeasurementKind::Alloy)
            .or_else(|_| {
                s.parse::<PhaseMeasurementKind>()
                    .map(MeasurementKind::Phase)
            })
    }
}

impl From<AlloyMeasurementKind> for MeasurementKind {
    fn from(k: AlloyMeasurementKind) -> Self {
        MeasurementKind::Alloy(k)
    }
}

impl From<PhaseMeasurementKind> for MeasurementKind {
    fn from(k: PhaseMeasurementKind) -> Self {
        MeasurementKind::Phase(k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub kind: MeasurementKind,
    pub value: QualifiedValue,
    pub unit: Unit,
    pub uncertainty: Option<Decimal>,
    pub method: Option<MeasurementMethod>,
    pub temperature: Option<QuantityField<Decimal>>,
    pub pressure: Option<QuantityField<Decimal>>,
    pub statistic: Option<MeasurementStatistic>,
    pub group_id: Option<String>,
    pub source: Option<String>,
}

impl Measurement {
    pub fn new(kind: impl Into<MeasurementKind>, value: QualifiedValue, unit: Unit) -> Self {
        Measurement {
            kind: kind.into(),
            value,
            unit,
            uncertainty: None,
            method: None,
            temperature: None,
            pressure: None,
            statistic: None,
            group_id: None,
            source: None,
        }
    }

    /// A range or set of statistics reported together: one measurement per
    /// value, all sharing `template`'s attributes and the given `group_id`.
    pub fn group(
        template: &Measurement,
        group_id: &str,
        values: impl IntoIterator<Item = GroupValue>,
    ) -> Vec<Measurement> {
        values
            .into_iter()
            .map(|gv| Measurement {
                value: gv.value,
                statistic: gv.statistic,
                uncertainty: gv.uncertainty,
                group_id: Some(group_id.to_string()),
                ..template.clone()
            })
            .collect()
    }
}

/// One entry of a grouped measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupValue {
    pub statistic: Option<MeasurementStatistic>,
    pub value: QualifiedValue,
    pub uncertainty: Option<Decimal>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompMeasurement {
    pub input: CompositionInput,
    pub composition: Composition,
    pub method: Option<MeasurementMethod>,
    pub source: Option<String>,
}

impl CompMeasurement {
    pub fn new(input: CompositionInput) -> Result<Self, CompositionError> {
        let composition = input.resolve()?;
        Ok(CompMeasurement {
            input,
            composition,
            method: None,
            source: None,
        })
    }

    pub fn formula(f: &str) -> Result<Self, CompositionError> {
        Self::new(CompositionInput::Formula(f.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LatticeFamily {
    Cubic,
    Hexagonal,
    Tetragonal,
    Orthorhombic,
}

impl LatticeFamily {
    pub const ALL: &'static [LatticeFamily] = &[
        LatticeFamily::Cubic,
        LatticeFamily::Hexagonal,
        LatticeFamily::Tetragonal,
        LatticeFamily::Orthorhombic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LatticeFamily::Cubic => "cubic",
            LatticeFamily::Hexagonal => "hexagonal",
            LatticeFamily::Tetragonal => "tetragonal",
            LatticeFamily::Orthorhombic => "orthorhombic",
        }
    }

    pub fn needs_b(self) -> bool {
        self == LatticeFamily::Orthorhombic
    }

    pub fn needs_c(self) -> bool {
        self != LatticeFamily::Cubic
    }
}

impl FromStr for LatticeFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LatticeFamily::ALL
            .iter()
            .copied()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| s.to_string())
    }
}

/// Lattice lengths in ångström. Only the parameters the family needs are present.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    family: LatticeFamily,
    a: Decimal,
    b: Option<Decimal>,
    c: Option<Decimal>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("{family} lattice requires `{param}`")]
    Missing {
        family: &'static str,
        param: &'static str,
    },
    #[error("{family} lattice does not take `{param}`")]
    Unexpected {
        family: &'static str,
        param: &'static str,
    },
}

impl Lattice {
    pub fn new(
        family: LatticeFamily,
        a: Decimal,
        b: Option<Decimal>,
        c: Option<Decimal>,
    ) -> Result<Self, LatticeError> {
        let fam = family.as_str();
        match (family.needs_b(), b.is_some()) {
            (true, false) => {
                return Err(LatticeError::Missing {
                    family: fam,
                    param: "b",
                })
            }
            (false, true) => {
                return Err(LatticeError::Unexpected {
                    family: fam,
                    param: "b",
                })
            }
            _ => {}
        }
        match (family.needs_c(), c.is_some()) {
            (true, false) => {
                return Err(LatticeError::Missing {
                    family: fam,
                    param: "c",
                })
            }
            (false, true) => {
                return Err(LatticeError::Unexpected {
                    family: fam,
                    param: "c",
                })
            }
            _ => {}
        }
        Ok(Lattice { family, a, b, c })
    }

    pub fn cubic(a: impl Into<Decimal>) -> Self {
        Lattice {
            family: LatticeFamily::Cubic,
            a: a.into(),
            b: None,
            c: None,
        }
    }

    pub fn family(&self) -> LatticeFamily {
        self.family
    }

    pub fn a(&self) -> &Decimal {
        &self.a
    }

    pub fn b(&self) -> Option<&Decimal> {
        self.b.as_ref()
    }

    pub fn c(&self) -> Option<&Decimal> {
        self.c.as_ref()
    }

    /// (a, b, c) with the family's implied equalities filled in.
    pub fn lengths(&self) -> [f64; 3] {
        let a = self.a.value();
        let b = self.b.as_ref().map_or(a, Decimal::value);
        let c = self.c.as_ref().map_or(a, Decimal::value);
        [a, b, c]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeParam {
    pub lattice: Lattice,
    pub structure: Option<CrysStruct>,
    pub phase_fraction: Option<QuantityField<Decimal>>,
    pub name: Option<String>,
    pub source: Option<String>,
}

impl LatticeParam {
    pub fn new(lattice: Lattice, structure: Option<CrysStruct>) -> Self {
        LatticeParam {
            lattice,
            structure,
            phase_fraction: None,
            name: None,
            source: None,
        }
    }
}

/// A single recorded observation: scalar property, composition or lattice.
#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    Scalar(Measurement),
    Composition(CompMeasurement),
    Lattice(LatticeParam),
}

/// A microstructural feature with its own measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub name: String,
    pub structure: Option<CrysStruct>,
    pub tags: BTreeSet<ConfigTag>,
    pub within: Option<String>,
    pub measurements: Vec<Observation>,
}

impl Configuration {
    pub fn new(name: &str) -> Self {
        Configuration {
            name: name.to_string(),
            structure: None,
            tags: BTreeSet::new(),
            within: None,
            measurements: Vec::new(),
        }
    }

    pub fn is_precipitate(&self) -> bool {
        self.tags.contains(&ConfigTag::Precipitate)
    }
}

/// An item of a material's `measurements` list.
#[derive(Debug, Clone, PartialEq)]
pub enum MaterialEntry {
    Observation(Observation),
    Configuration(Configuration),
}

impl From<Observation> for MaterialEntry {
    fn from(o: Observation) -> Self {
        MaterialEntry::Observation(o)
    }
}

impl From<Measurement> for MaterialEntry {
    fn from(m: Measurement) -> Self {
        MaterialEntry::Observation(Observation::Scalar(m))
    }
}

impl From<CompMeasurement> for MaterialEntry {
    fn from(m: CompMeasurement) -> Self {
        MaterialEntry::Observation(Observation::Composition(m))
    }
}

impl From<LatticeParam> for MaterialEntry {
    fn from(m: LatticeParam) -> Self {
        MaterialEntry::Observation(Observation::Lattice(m))
    }
}

impl From<Configuration> for MaterialEntry {
    fn from(c: Configuration) -> Self {
        MaterialEntry::Configuration(c)
    }
}

/// Position of a domain entry in the written `measurements` array: the array
/// index, plus the index within `values` for members of a grouped measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntrySlot {
    pub index: usize,
    pub member: Option<usize>,
}

/// Consecutive scalar measurements sharing a `group_id` are written as one
/// grouped entry; everything else is one entry each. Takes each entry's group id.
pub fn entry_layout<'a>(group_ids: impl IntoIterator<Item = Option<&'a str>>) -> Vec<EntrySlot> {
    let mut out: Vec<EntrySlot> = Vec::new();
    let mut prev: Option<&str> = None;
    let mut index = 0usize;
    for gid in group_ids {
        match (gid, prev, out.last()) {
            (Some(g), Some(p), Some(last)) if g == p => {
                let member = last.member.map_or(0, |k| k + 1);
                out.push(EntrySlot {
                    index: last.index,
                    member: Some(member),
                });
            }
            _ => {
                out.push(EntrySlot {
                    index,
                    member: gid.map(|_| 0),
                });
                index += 1;
            }
        }
        prev = gid;
    }
    out
}

impl Observation {
    pub fn group_id(&self) -> Option<&str> {
        match self {
            Observation::Scalar(m) => m.group_id.as_deref(),
            _ => None,
        }
    }
}

impl Material {
    /// Document position of every entry of `measurements`.
    pub fn layout(&self) -> Vec<EntrySlot> {
        entry_layout(self.measurements.iter().map(|e| match e {
            MaterialEntry::Observation(o) => o.group_id(),
            MaterialEntry::Configuration(_) => None,
        }))
    }
}

impl Configuration {
    pub fn layout(&self) -> Vec<EntrySlot> {
        entry_layout(self.measurements.iter().map(Observation::group_id))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    pub process: ProcessChainSpec,
    pub name: Option<String>,
    pub measurements: Vec<MaterialEntry>,
}

impl Material {
    pub fn new(process: ProcessChainSpec, name: Option<&str>) -> Self {
        Material {
            process,
            name: name.map(str::to_string),
            measurements: Vec::new(),
        }
    }

    /// The material's name, or the synthetic `material#<index>` for unnamed ones.
    pub fn id(&self, index: usize) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| format!("material#{index}"))
    }

    /// Every observation of the material, including those nested in configurations.
    pub fn observations(&self) -> impl Iterator<Item = &Observation> {
        self.measurements
            .iter()
            .flat_map(|e| -> Box<dyn Iterator<Item = &Observation>> {
                match e {
                    MaterialEntry::Observation(o) => Box::new(std::iter::once(o)),
                    MaterialEntry::Configuration(c) => Box::new(c.measurements.iter()),
                }
            })
    }

    pub fn configurations(&self) -> impl Iterator<Item = &Configuration> {
        self.measurements.iter().filter_map(|e| match e {
            MaterialEntry::Configuration(c) => Some(c),
            MaterialEntry::Observation(_) => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescriptionGroup {
    pub kinds: Vec<CanonicalValue>,
    pub method: Option<MeasurementMethod>,
    pub desc: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Experiment {
    pub raw_materials: IndexMap<String, RawMaterial>,
    pub synthesis_groups: Vec<SynthesisGroup>,
    pub descriptions: Vec<DescriptionGroup>,
    pub output_materials: Vec<Material>,
    pub normalizations: AuditTrail,
}

impl Experiment {
    pub fn group_by_signature(&self, signature: &str) -> Option<&SynthesisGroup> {
        self.synthesis_groups
            .iter()
            .find(|g| g.signature() == signature)
    }
}

// ---------------------------------------------------------------------------
// Process notation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum BindingValue {
    Number(Decimal),
    Name(String),
}

impl fmt::Display for BindingValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BindingValue::Number(d) => write!(f, "{d}"),
            BindingValue::Name(n) => f.write_str(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Binding {
    pub var: String,
    pub value: BindingValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessStep {
    pub group: String,
    pub bindings: Vec<Binding>,
}

impl ProcessStep {
    pub fn binding(&self, var: &str) -> Option<&BindingValue> {
        self.bindings
            .iter()
            .find(|b| b.var == var)
            .map(|b| &b.value)
    }
}

/// `inputs -> group[Var=value] -> ...`
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessChainSpec {
    pub inputs: Vec<String>,
    pub steps: Vec<ProcessStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProcessParseError {
    #[error("process `{0}` has an empty input list or an empty input name")]
    EmptyInputs(String),
    #[error("process `{0}` has an arrow with no group after it")]
    DanglingArrow(String),
    #[error("malformed step `{step}` in process `{process}`")]
    MalformedBinding { process: String, step: String },
}

fn is_name(s: &str) -> bool {
    !s.is_empty() && s == s.trim() && !s.contains(['[', ']', ',', '=', '\n']) && !s.contains("->")
}

fn parse_step(process: &str, segment: &str) -> Result<ProcessStep, ProcessParseError> {
    let malformed = || ProcessParseError::MalformedBinding {
        process: process.to_string(),
        step: segment.to_string(),
    };
    let (group, bindings) = match segment.find('[') {
        None => (segment, Vec::new()),
        Some(open) => {
            let inner = segment[open + 1..]
                .strip_suffix(']')
                .ok_or_else(malformed)?;
            let mut bindings: Vec<Binding> = Vec::new();
            for part in inner.split(',') {
                let (var, value) = part.split_once('=').ok_or_else(malformed)?;
                let (var, value) = (var.trim(), value.trim());
                if !is_name(var) || !is_name(value) || bindings.iter().any(|b| b.var == var) {
                    return Err(malformed());
                }
                let value = match value.parse::<Decimal>() {
                    Ok(d) => BindingValue::Number(d),
                    Err(_) => BindingValue::Name(value.to_string()),
                };
                bindings.push(Binding {
                    var: var.to_string(),
                    value,
                });
            }
            (segment[..open].trim_end(), bindings)
        }
    };
    if group.is_empty() {
        return Err(ProcessParseError::DanglingArrow(process.to_string()));
    }
    if !is_name(group) {
        return Err(malformed());
    }
    Ok(ProcessStep {
        group: group.to_string(),
        bindings,
    })
}

/// Parse arrow notation such as `elements,reinforcement->mixing->annealing[Temp=700]`.
pub fn parse_process(s: &str) -> Result<ProcessChainSpec, ProcessParseError> {
    let mut segments = s.split("->").map(str::trim);
    let head = segments.next().unwrap_or("");
    let inputs: Vec<String> = head.split(',').map(|n| n.trim().to_string()).collect();
    if inputs.iter().any(|n| !is_name(n)) {
        return Err(ProcessParseError::EmptyInputs(s.to_string()));
    }
    let steps = segments
        .map(|seg| {
            if seg.is_empty() {
                Err(ProcessParseError::DanglingArrow(s.to_string()))
            } else {
                parse_step(s, seg)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ProcessChainSpec { inputs, steps })
}

impl FromStr for ProcessChainSpec {
    type Err = ProcessParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_process(s)
    }
}

impl fmt::Display for ProcessChainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.inputs.join(","))?;
        for step in &self.steps {
            write!(f, "->{}", step.group)?;
            if !step.bindings.is_empty() {
                f.write_str("[")?;
                for (i, b) in step.bindings.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{}={}", b.var, b.value)?;
                }
                f.write_str("]")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn process_examples() {
        let p = parse_process("elements->creation").unwrap();
        assert_eq!(p.inputs, vec!["elements"]);
        assert_eq!(p.steps.len(), 1);
        assert_eq!(p.steps[0].group, "creation");
        assert!(p.steps[0].bindings.is_empty());

        let p = parse_process("materialA->annealing[Temp=10]").unwrap();
        assert_eq!(p.inputs, vec!["materialA"]);
        assert_eq!(p.steps[0].group, "annealing");
        assert_eq!(
            p.steps[0].binding("Temp"),
            Some(&BindingValue::Number("10".parse().unwrap()))
        );

        let p = parse_process("elements,reinforcement->mixing->sintering").unwrap();
        assert_eq!(p.inputs, vec!["elements", "reinforcement"]);
        assert_eq!(p.steps.len(), 2);
    }

    #[test]
    fn process_whitespace_and_names() {
        let p = parse_process(" powder -> milling -> mixing[ Feedstock = secondary_input_metal ] ")
            .unwrap();
        assert_eq!(p.inputs, vec!["powder"]);
        assert_eq!(
            p.steps[1].binding("Feedstock"),
            Some(&BindingValue::Name("secondary_input_metal".into()))
        );
        assert_eq!(
            p.to_string(),
            "powder->milling->mixing[Feedstock=secondary_input_metal]"
        );
        // inputs-only chains are legal
        assert!(parse_process("base").unwrap().steps.is_empty());
    }

    #[test]
    fn process_errors() {
        assert!(matches!(
            parse_process(""),
            Err(ProcessParseError::EmptyInputs(_))
        ));
        assert!(matches!(
            parse_process("->a"),
            Err(ProcessParseError::EmptyInputs(_))
        ));
        assert!(matches!(
            parse_process("a,,b->c"),
            Err(ProcessParseError::EmptyInputs(_))
        ));
        assert!(matches!(
            parse_process("a->"),
            Err(ProcessParseError::DanglingArrow(_))
        ));
        assert!(matches!(
            parse_process("a->->b"),
            Err(ProcessParseError::DanglingArrow(_))
        ));
        for bad in [
            "a->g[]",
            "a->g[T]",
            "a->g[T=1",
            "a->g[T=1,T=2]",
            "a->g[=1]",
            "a->g[T=1]x",
        ] {
            assert!(
                matches!(
                    parse_process(bad),
                    Err(ProcessParseError::MalformedBinding { .. })
                ),
                "{bad}"
            );
        }
    }

    #[test]
    fn signatures() {
        assert_eq!(
            SynthesisGroup::parse_signature("annealing[Temp]").unwrap(),
            ("annealing".into(), vec!["Temp".into()])
        );
        assert_eq!(
            SynthesisGroup::parse_signature("hot press[Temp,Hours]").unwrap(),
            ("hot press".into(), vec!["Temp".into(), "Hours".into()])
        );
        // keys must be written in canonical form so paths can address them
        assert!(SynthesisGroup::parse_signature("hot[Temp, Hours]").is_err());
        assert!(SynthesisGroup::parse_signature("hot [Temp]").is_err());
        assert!(SynthesisGroup::parse_signature("hot[T,T]").is_err());
        assert_eq!(
            SynthesisGroup::parse_signature("creation").unwrap().1.len(),
            0
        );
        assert!(SynthesisGroup::parse_signature("x[").is_err());
        assert!(SynthesisGroup::parse_signature("x[]").is_err());
        assert!(SynthesisGroup::parse_signature("[T]").is_err());
        let g = SynthesisGroup {
            name: "hot".into(),
            params: vec!["A".into(), "B".into()],
            events: vec![],
        };
        assert_eq!(g.signature(), "hot[A,B]");
    }

    #[test]
    fn layout_groups_consecutive_members() {
        let ids = [None, Some("g"), Some("g"), Some("h"), None, Some("g")];
        let slots = entry_layout(ids.iter().copied());
        let got: Vec<(usize, Option<usize>)> = slots.iter().map(|s| (s.index, s.member)).collect();
        assert_eq!(
            got,
            vec![
                (0, None),
                (1, Some(0)),
                (1, Some(1)),
                (2, Some(0)),
                (3, None),
                (4, Some(0))
            ]
        );
    }

    #[test]
    fn placeholders() {
        assert_eq!(placeholder_name("[Temp]"), Some("Temp"));
        assert_eq!(placeholder_name("Temp"), None);
        assert_eq!(placeholder_name("[]"), None);
        assert_eq!(placeholder_name("[a[b]]"), None);
    }

    #[test]
    fn lattice_requirements() {
        let d = |x: f64| Decimal::from_f64(x);
        assert!(Lattice::new(LatticeFamily::Cubic, d(3.2), None, None).is_ok());
        assert!(Lattice::new(LatticeFamily::Cubic, d(3.2), None, Some(d(1.0))).is_err());
        assert!(Lattice::new(LatticeFamily::Hexagonal, d(3.2), None, None).is_err());
        assert!(Lattice::new(LatticeFamily::Tetragonal, d(3.2), None, Some(d(5.0))).is_ok());
        assert!(Lattice::new(LatticeFamily::Orthorhombic, d(3.2), None, Some(d(5.0))).is_err());
        assert!(Lattice::new(
            LatticeFamily::Orthorhombic,
            d(3.2),
            Some(d(4.0)),
            Some(d(5.0))
        )
        .is_ok());
    }

    fn name() -> impl Strategy<Value = String> {
        "[a-zA-Z_][a-zA-Z0-9_ ]{0,6}[a-zA-Z0-9_]".prop_map(|s| s)
    }

    fn binding_value() -> impl Strategy<Value = BindingValue> {
        prop_oneof![
            (-1.0e6f64..1.0e6).prop_map(|x| BindingValue::Number(Decimal::from_f64(x))),
            (0u32..5000).prop_map(|x| BindingValue::Number(x.to_string().parse().unwrap())),
            "[a-z][a-z_]{0,6}".prop_map(BindingValue::Name),
        ]
    }

    fn step() -> impl Strategy<Value = ProcessStep> {
        (
            name(),
            proptest::collection::btree_map("[A-Z][a-z]{0,4}", binding_value(), 0..3),
        )
            .prop_map(|(group, b)| ProcessStep {
                group,
                bindings: b
                    .into_iter()
                    .map(|(var, value)| Binding { var, value })
                    .collect(),
            })
    }

    proptest! {
        #[test]
        fn parse_render_round_trip(
            inputs in proptest::collection::vec(name(), 1..4),
            steps in proptest::collection::vec(step(), 0..5),
        ) {
            let spec = ProcessChainSpec { inputs, steps };
            let text = spec.to_string();
            let back = parse_process(&text).unwrap();
            prop_assert_eq!(back, spec);
        }
    }
}
