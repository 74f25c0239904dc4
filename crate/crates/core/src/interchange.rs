//! Reading and writing extraction documents in their JSON form.

use indexmap::IndexMap;
use serde_json::{Map, Number, Value};
use thiserror::Error;

use crate::composition::{Composition, CompositionInput};
use crate::datamodel::{
    parse_process, placeholder_name, placeholder_token, CompMeasurement, Configuration,
    DescriptionGroup, Experiment, Lattice, LatticeFamily, LatticeParam, Material, MaterialEntry,
    Measurement, MeasurementKind, Observation, ProcessEvent, QuantityField, RawMaterial, Slot,
    SynthesisGroup,
};
use crate::ontology::{
    parse_enum, CanonicalValue, ConfigTag, CrysStruct, EnumFamily, MeasurementMethod,
    MeasurementStatistic, NormalizationRecord, ProcessKind, RawMaterialKind,
};
use crate::path::DocumentPath;
use crate::quantities::{parse_qualified, Decimal, QualifiedValue, Unit, ValueQualifier};
use crate::validation::{RuleId, ValidationIssue};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{path}: expected {expected}, found {found}")]
pub struct SchemaError {
    pub path: DocumentPath,
    pub expected: String,
    pub found: String,
}

impl SchemaError {
    pub fn to_issue(&self) -> ValidationIssue {
        ValidationIssue::error(
            RuleId::Schema,
            self.path.clone(),
            format!("expected {}, found {}", self.expected, self.found),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("not valid JSON: {0}")]
    Syntax(String),
    #[error("{}", join_lines(.0))]
    Schema(Vec<SchemaError>),
}

fn join_lines(errors: &[SchemaError]) -> String {
    errors
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("\n")
}

impl DecodeError {
    /// Issues in the same form validation produces, for extractor feedback.
    pub fn issues(&self) -> Vec<ValidationIssue> {
        match self {
            DecodeError::Syntax(msg) => vec![ValidationIssue::error(
                RuleId::Schema,
                DocumentPath::root(),
                format!("not valid JSON: {msg}"),
            )],
            DecodeError::Schema(errors) => errors.iter().map(SchemaError::to_issue).collect(),
        }
    }
}

/// Remove a surrounding ``` fence (with optional language tag) if present.
pub fn strip_fences(text: &str) -> &str {
    let mut t = text.trim();
    if let Some(rest) = t.strip_prefix("```") {
        t = match rest.find('\n') {
            Some(nl) => &rest[nl + 1..],
            None => rest,
        };
        t = t.trim_end();
        t = t.strip_suffix("```").unwrap_or(t);
    }
    t.trim()
}

pub fn decode(text: &str) -> Result<Vec<Experiment>, DecodeError> {
    let value: Value =
        serde_json::from_str(strip_fences(text)).map_err(|e| DecodeError::Syntax(e.to_string()))?;
    decode_value(&value)
}

pub fn decode_value(value: &Value) -> Result<Vec<Experiment>, DecodeError> {
    let mut r = Reader { errors: Vec::new() };
    let root = DocumentPath::root();
    let experiments = match value {
        Value::Array(items) => items
            .iter()
            .enumerate()
            .filter_map(|(k, v)| r.experiment(v, &root.index(k)))
            .collect(),
        other => {
            r.fail(&root, "an array of experiment objects", other);
            Vec::new()
        }
    };
    if r.errors.is_empty() {
        Ok(experiments)
    } else {
        Err(DecodeError::Schema(r.errors))
    }
}

fn decode_list<T>(
    text: &str,
    item: impl Fn(&mut Reader, &Value, &DocumentPath) -> Option<T>,
) -> Result<Vec<T>, DecodeError> {
    let value: Value =
        serde_json::from_str(strip_fences(text)).map_err(|e| DecodeError::Syntax(e.to_string()))?;
    let mut r = Reader { errors: Vec::new() };
    let root = DocumentPath::root();
    let out = match &value {
        Value::Array(items) => items
            .iter()
            .enumerate()
            .filter_map(|(k, v)| item(&mut r, v, &root.index(k)))
            .collect(),
        other => {
            r.fail(&root, "an array", other);
            Vec::new()
        }
    };
    if r.errors.is_empty() {
        Ok(out)
    } else {
        Err(DecodeError::Schema(r.errors))
    }
}

/// A JSON array of compositions, each a formula, an element map or a `_helper` object.
pub fn decode_composition_list(text: &str) -> Result<Vec<Composition>, DecodeError> {
    decode_list(text, |r, v, path| {
        let input = r.composition(v, path)?;
        match input.resolve() {
            Ok(c) => Some(c),
            Err(e) => {
                r.fail_text(path, "a valid composition", e.to_string());
                None
            }
        }
    })
}

/// A JSON array of plain numbers.
pub fn decode_property_list(text: &str) -> Result<Vec<f64>, DecodeError> {
    decode_list(text, |r, v, path| r.decimal(v, path).map(|d| d.value()))
}

fn describe(v: &Value) -> String {
    match v {
        Value::Null => "null".into(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => format!("number {n}"),
        Value::String(s) => format!("string {}", Value::String(s.clone())),
        Value::Array(_) => "an array".into(),
        Value::Object(_) => "an object".into(),
    }
}

struct Reader {
    errors: Vec<SchemaError>,
}

/// Tracks which keys of an object were consumed so leftovers can be reported.
struct Obj<'a> {
    map: &'a Map<String, Value>,
    path: DocumentPath,
    allowed: Vec<&'static str>,
}

impl<'a> Obj<'a> {
    fn get(&mut self, key: &'static str) -> Option<&'a Value> {
        self.allowed.push(key);
        self.map.get(key)
    }
}

impl Reader {
    fn fail(&mut self, path: &DocumentPath, expected: impl Into<String>, found: &Value) {
        self.errors.push(SchemaError {
            path: path.clone(),
            expected: expected.into(),
            found: describe(found),
        });
    }

    fn fail_text(
        &mut self,
        path: &DocumentPath,
        expected: impl Into<String>,
        found: impl Into<String>,
    ) {
        self.errors.push(SchemaError {
            path: path.clone(),
            expected: expected.into(),
            found: found.into(),
        });
    }

    fn object<'a>(&mut self, v: &'a Value, path: &DocumentPath, what: &str) -> Option<Obj<'a>> {
        match v {
            Value::Object(map) => Some(Obj {
                map,
                path: path.clone(),
                allowed: Vec::new(),
            }),
            other => {
                self.fail(path, format!("{what} object"), other);
                None
            }
        }
    }

    /// Report keys that no reader asked for.
    fn finish(&mut self, o: Obj<'_>) {
        for key in o.map.keys() {
            if !o.allowed.contains(&key.as_str()) {
                let expected = format!("one of the fields {}", quote_list(&o.allowed));
                self.fail_text(
                    &o.path.key(key.clone()),
                    expected,
                    format!("unknown field `{key}`"),
                );
            }
        }
    }

    fn required<'a>(&mut self, o: &mut Obj<'a>, key: &'static str) -> Option<&'a Value> {
        let v = o.get(key);
        if v.is_none() {
            self.fail_text(&o.path, format!("field `{key}`"), "nothing");
        }
        v
    }

    fn string(&mut self, v: &Value, path: &DocumentPath) -> Option<String> {
        match v {
            Value::String(s) => Some(s.clone()),
            other => {
                self.fail(path, "a string", other);
                None
            }
        }
    }

    fn opt_string(&mut self, o: &mut Obj<'_>, key: &'static str) -> Option<String> {
        let v = o.get(key)?;
        self.string(v, &o.path.key(key))
    }

    fn req_string(&mut self, o: &mut Obj<'_>, key: &'static str) -> Option<String> {
        let v = self.required(o, key)?;
        self.string(v, &o.path.key(key))
    }

    fn decimal(&mut self, v: &Value, path: &DocumentPath) -> Option<Decimal> {
        match v {
            Value::Number(n) => match n.to_string().parse::<Decimal>() {
                Ok(d) => Some(d),
                Err(_) => {
                    self.fail(path, "a finite number", v);
                    None
                }
            },
            other => {
                self.fail(path, "a number", other);
                None
            }
        }
    }

    fn enum_token<T: std::str::FromStr>(
        &mut self,
        v: &Value,
        path: &DocumentPath,
        family: &str,
    ) -> Option<T> {
        let s = match v {
            Value::String(s) => s,
            other => {
                self.fail(path, format!("a {family} member"), other);
                return None;
            }
        };
        match s.parse::<T>() {
            Ok(t) => Some(t),
            Err(_) => {
                self.fail(path, format!("a {family} member"), v);
                None
            }
        }
    }

    fn opt_enum<T: std::str::FromStr>(
        &mut self,
        o: &mut Obj<'_>,
        key: &'static str,
        family: &str,
    ) -> Option<T> {
        let v = o.get(key)?;
        self.enum_token(v, &o.path.key(key), family)
    }

    fn unit(&mut self, v: &Value, path: &DocumentPath) -> Option<Unit> {
        let s = self.string(v, path)?;
        match Unit::lookup(&s) {
            Ok(u) => Some(u),
            Err(_) => {
                self.fail(path, "a known unit", v);
                None
            }
        }
    }

    fn array<'a>(&mut self, v: &'a Value, path: &DocumentPath) -> Option<&'a Vec<Value>> {
        match v {
            Value::Array(a) => Some(a),
            other => {
                self.fail(path, "an array", other);
                None
            }
        }
    }

    // -- experiment ---------------------------------------------------------

    fn experiment(&mut self, v: &Value, path: &DocumentPath) -> Option<Experiment> {
        let mut o = self.object(v, path, "an experiment")?;
        let before = self.errors.len();
        let mut e = Experiment::default();

        if let Some(raw) = self.required(&mut o, "raw_materials") {
            let at = path.key("raw_materials");
            if let Some(map) = self.object(raw, &at, "a raw-materials").map(|o| o.map) {
                for (name, rv) in map {
                    if let Some(rm) = self.raw_material(rv, &at.key(name.clone())) {
                        e.raw_materials.insert(name.clone(), rm);
                    }
                }
            }
        }
        if let Some(groups) = self.required(&mut o, "synthesis_groups") {
            let at = path.key("synthesis_groups");
            if let Some(map) = self
                .object(groups, &at, "a synthesis-groups")
                .map(|o| o.map)
            {
                for (key, gv) in map {
                    if let Some(g) = self.group(key, gv, &at.key(key.clone())) {
                        e.synthesis_groups.push(g);
                    }
                }
            }
        }
        if let Some(ds) = o.get("descriptions") {
            let at = path.key("descriptions");
            if let Some(items) = self.array(ds, &at) {
                for (k, d) in items.iter().enumerate() {
                    if let Some(d) = self.description(d, &at.index(k)) {
                        e.descriptions.push(d);
                    }
                }
            }
        }
        if let Some(ms) = self.required(&mut o, "output_materials") {
            let at = path.key("output_materials");
            if let Some(items) = self.array(ms, &at) {
                let mut groups = 0usize;
                for (k, m) in items.iter().enumerate() {
                    if let Some(m) = self.material(m, &at.index(k), &mut groups) {
                        e.output_materials.push(m);
                    }
                }
            }
        }
        if let Some(ns) = o.get("normalizations") {
            let at = path.key("normalizations");
            if let Some(items) = self.array(ns, &at) {
                for (k, n) in items.iter().enumerate() {
                    if let Some(rec) = self.normalization(n, &at.index(k)) {
                        e.normalizations.push(rec);
                    }
                }
            }
        }
        self.finish(o);
        (self.errors.len() == before).then_some(e)
    }

    fn raw_material(&mut self, v: &Value, path: &DocumentPath) -> Option<RawMaterial> {
        let mut o = self.object(v, path, "a raw-material")?;
        let kind = self.required(&mut o, "kind").and_then(|k| {
            self.enum_token::<RawMaterialKind>(k, &path.key("kind"), "RawMaterialKind")
        });
        let description = self.opt_string(&mut o, "description");
        let source = self.opt_string(&mut o, "source");
        self.finish(o);
        Some(RawMaterial {
            kind: kind?,
            description,
            source,
        })
    }

    fn group(&mut self, key: &str, v: &Value, path: &DocumentPath) -> Option<SynthesisGroup> {
        let sig = SynthesisGroup::parse_signature(key);
        if sig.is_err() {
            self.fail_text(
                path,
                "a group key `name` or `name[Var1,Var2]`",
                format!("`{key}`"),
            );
        }
        let items = self.array(v, path)?;
        let events: Vec<Option<ProcessEvent>> = items
            .iter()
            .enumerate()
            .map(|(j, ev)| self.event(ev, &path.index(j)))
            .collect();
        let (name, params) = sig.ok()?;
        Some(SynthesisGroup {
            name,
            params,
            events: events.into_iter().collect::<Option<_>>()?,
        })
    }

    fn event(&mut self, v: &Value, path: &DocumentPath) -> Option<ProcessEvent> {
        let mut o = self.object(v, path, "a process-event")?;
        let kind = self
            .required(&mut o, "kind")
            .and_then(|k| self.enum_token::<ProcessKind>(k, &path.key("kind"), "ProcessKind"));
        let temperature = o
            .get("temperature")
            .map(|q| self.slot_quantity(q, &path.key("temperature")));
        let duration = o
            .get("duration")
            .map(|q| self.slot_quantity(q, &path.key("duration")));
        let description = self.opt_string(&mut o, "description");
        let source = self.opt_string(&mut o, "source");
        let inputs = o.get("inputs").and_then(|iv| {
            let at = path.key("inputs");
            let items = self.array(iv, &at)?;
            let names: Vec<Option<Slot<String>>> = items
                .iter()
                .enumerate()
                .map(|(k, n)| {
                    self.string(n, &at.index(k))
                        .map(|s| match placeholder_name(&s) {
                            Some(var) => Slot::Var(var.to_string()),
                            None => Slot::Value(s),
                        })
                })
                .collect();
            names.into_iter().collect::<Option<Vec<_>>>()
        });
        self.finish(o);
        Some(ProcessEvent {
            kind: kind?,
            temperature: temperature.flatten(),
            duration: duration.flatten(),
            description,
            source,
            inputs,
        })
    }

    /// `{value, unit}` where the value may be a template placeholder. Missing
    /// halves are kept as absent for validation to report.
    fn slot_quantity(
        &mut self,
        v: &Value,
        path: &DocumentPath,
    ) -> Option<QuantityField<Slot<Decimal>>> {
        let mut o = self.object(v, path, "a quantity")?;
        let value = o.get("value").and_then(|val| match val {
            Value::String(s) => match placeholder_name(s) {
                Some(var) => Some(Slot::Var(var.to_string())),
                None => {
                    self.fail(&path.key("value"), "a number or a `[Var]` placeholder", val);
                    None
                }
            },
            other => self.decimal(other, &path.key("value")).map(Slot::Value),
        });
        let unit = o.get("unit").and_then(|u| self.unit(u, &path.key("unit")));
        self.finish(o);
        Some(QuantityField { value, unit })
    }

    fn quantity(&mut self, v: &Value, path: &DocumentPath) -> Option<QuantityField<Decimal>> {
        let mut o = self.object(v, path, "a quantity")?;
        let value = o
            .get("value")
            .and_then(|val| self.decimal(val, &path.key("value")));
        let unit = o.get("unit").and_then(|u| self.unit(u, &path.key("unit")));
        self.finish(o);
        Some(QuantityField { value, unit })
    }

    fn opt_quantity(
        &mut self,
        o: &mut Obj<'_>,
        key: &'static str,
    ) -> Option<QuantityField<Decimal>> {
        let v = o.get(key)?;
        self.quantity(v, &o.path.key(key))
    }

    fn description(&mut self, v: &Value, path: &DocumentPath) -> Option<DescriptionGroup> {
        const FAMILIES: [EnumFamily; 4] = [
            EnumFamily::AlloyMeasurementKind,
            EnumFamily::PhaseMeasurementKind,
            EnumFamily::ProcessKind,
            EnumFamily::MeasurementMethod,
        ];
        let mut o = self.object(v, path, "a description-group")?;
        let mut kinds = Vec::new();
        if let Some(kv) = self.required(&mut o, "kinds") {
            let at = path.key("kinds");
            if let Some(items) = self.array(kv, &at) {
                for (k, item) in items.iter().enumerate() {
                    let token = self.string(item, &at.index(k));
                    match token
                        .as_deref()
                        .and_then(|t| CanonicalValue::parse_any(t, &FAMILIES))
                    {
                        Some(c) => kinds.push(c),
                        None if token.is_some() => self.fail(
                            &at.index(k),
                            "a measurement kind, process kind or measurement method",
                            item,
                        ),
                        None => {}
                    }
                }
            }
        }
        let method = self.opt_enum::<MeasurementMethod>(&mut o, "method", "MeasurementMethod");
        let desc = self.req_string(&mut o, "desc");
        self.finish(o);
        Some(DescriptionGroup {
            kinds,
            method,
            desc: desc?,
        })
    }

    fn normalization(&mut self, v: &Value, path: &DocumentPath) -> Option<NormalizationRecord> {
        let mut o = self.object(v, path, "a normalization")?;
        let family = self.required(&mut o, "family").and_then(|f| {
            self.enum_token::<EnumFamily>(f, &path.key("family"), "enum family name")
        });
        let value = self.req_string(&mut o, "value");
        let paper_term = self.req_string(&mut o, "paper_term");
        let source = self.opt_string(&mut o, "source");
        self.finish(o);
        let (family, value, paper_term) = (family?, value?, paper_term?);
        match parse_enum(family, &value) {
            Ok(c) => Some(crate::ontology::normalize(c, &paper_term, source.as_deref()).1),
            Err(_) => {
                self.fail_text(
                    &path.key("value"),
                    format!("a {family} member"),
                    format!("`{value}`"),
                );
                None
            }
        }
    }

    // -- materials and measurements -----------------------------------------

    fn material(&mut self, v: &Value, path: &DocumentPath, groups: &mut usize) -> Option<Material> {
        let mut o = self.object(v, path, "a material")?;
        let process = self
            .req_string(&mut o, "process")
            .and_then(|p| match parse_process(&p) {
                Ok(spec) => Some(spec),
                Err(e) => {
                    self.fail_text(
                        &path.key("process"),
                        "process notation like `inputs->group[Var=value]`",
                        e.to_string(),
                    );
                    None
                }
            });
        let name = self.opt_string(&mut o, "name");
        let mut measurements = Vec::new();
        let mut ok = true;
        if let Some(mv) = self.required(&mut o, "measurements") {
            let at = path.key("measurements");
            if let Some(items) = self.array(mv, &at) {
                for (k, item) in items.iter().enumerate() {
                    match self.entry(item, &at.index(k), groups, true) {
                        Some(entries) => measurements.extend(entries),
                        None => ok = false,
                    }
                }
            }
        }
        self.finish(o);
        let process = process?;
        ok.then_some(Material {
            process,
            name,
            measurements,
        })
    }

    /// One element of a `measurements` array; grouped values expand to several entries.
    fn entry(
        &mut self,
        v: &Value,
        path: &DocumentPath,
        groups: &mut usize,
        allow_config: bool,
    ) -> Option<Vec<MaterialEntry>> {
        let mut o = self.object(v, path, "a measurement")?;
        let tag = self.required(&mut o, "_type")?;
        let tag_path = path.key("_type");
        let Value::String(tag) = tag else {
            self.fail(&tag_path, "a string", tag);
            return None;
        };
        let out = match tag.as_str() {
            "composition" => self.composition_entry(&mut o).map(|c| vec![c.into()]),
            "measurement" => self.scalar_entry(&mut o).map(|m| vec![m.into()]),
            "group_measurements" => self.group_entry(&mut o, groups),
            "lattice_param" => self.lattice_entry(&mut o).map(|l| vec![l.into()]),
            "configuration" if allow_config => self
                .configuration_entry(&mut o, groups)
                .map(|c| vec![c.into()]),
            "configuration" => {
                self.fail_text(
                    &tag_path,
                    "a measurement type allowed inside a configuration",
                    "`configuration`",
                );
                None
            }
            other => {
                self.fail_text(
                    &tag_path,
                    "one of `composition`, `measurement`, `group_measurements`, `lattice_param`, `configuration`",
                    format!("`{other}`"),
                );
                None
            }
        };
        self.finish(o);
        out
    }

    fn composition_entry(&mut self, o: &mut Obj<'_>) -> Option<CompMeasurement> {
        let path = o.path.clone();
        let input = self
            .required(o, "composition")
            .and_then(|c| self.composition(c, &path.key("composition")));
        let method = self.opt_enum::<MeasurementMethod>(o, "method", "MeasurementMethod");
        let source = self.opt_string(o, "source");
        let input = input?;
        match input.resolve() {
            Ok(composition) => Some(CompMeasurement {
                input,
                composition,
                method,
                source,
            }),
            Err(e) => {
                self.fail_text(
                    &path.key("composition"),
                    "a valid composition",
                    e.to_string(),
                );
                None
            }
        }
    }

    fn amount_map(&mut self, v: &Value, path: &DocumentPath) -> Option<IndexMap<String, Decimal>> {
        let Value::Object(map) = v else {
            self.fail(path, "an object of element amounts", v);
            return None;
        };
        let mut out = IndexMap::new();
        let mut ok = true;
        for (el, amount) in map {
            match self.decimal(amount, &path.key(el.clone())) {
                Some(d) => {
                    out.insert(el.clone(), d);
                }
                None => ok = false,
            }
        }
        ok.then_some(out)
    }

    fn composition(&mut self, v: &Value, path: &DocumentPath) -> Option<CompositionInput> {
        match v {
            Value::String(f) => Some(CompositionInput::Formula(f.clone())),
            Value::Object(map) if map.contains_key("_helper") => {
                let mut o = Obj {
                    map,
                    path: path.clone(),
                    allowed: vec!["_helper"],
                };
                let helper = map.get("_helper").unwrap_or(&Value::Null);
                let out = match helper.as_str() {
                    Some("balance_composition") => {
                        let main = self.req_string(&mut o, "main_element");
                        let additions = self
                            .required(&mut o, "additions")
                            .and_then(|a| self.amount_map(a, &path.key("additions")));
                        Some(CompositionInput::Balance {
                            main_element: main?,
                            additions: additions?,
                        })
                    }
                    Some("from_weight_dict") => self
                        .required(&mut o, "weights")
                        .and_then(|w| self.amount_map(w, &path.key("weights")))
                        .map(CompositionInput::WeightDict),
                    Some("weight_additions") => {
                        let base = self
                            .required(&mut o, "base")
                            .and_then(|b| self.composition(b, &path.key("base")));
                        let additions = self
                            .required(&mut o, "additions_weights")
                            .and_then(|a| self.amount_map(a, &path.key("additions_weights")));
                        let fraction = self
                            .required(&mut o, "fraction")
                            .and_then(|f| self.decimal(f, &path.key("fraction")));
                        Some(CompositionInput::WeightAdditions {
                            base: Box::new(base?),
                            additions_weights: additions?,
                            fraction: fraction?,
                        })
                    }
                    _ => {
                        self.fail(
                            &path.key("_helper"),
                            "one of `balance_composition`, `from_weight_dict`, `weight_additions`",
                            helper,
                        );
                        None
                    }
                };
                self.finish(o);
                out
            }
            Value::Object(_) => self.amount_map(v, path).map(CompositionInput::AtomicMap),
            other => {
                self.fail(
                    path,
                    "a formula string, element map or `_helper` object",
                    other,
                );
                None
            }
        }
    }

    fn qualified(&mut self, v: &Value, path: &DocumentPath) -> Option<QualifiedValue> {
        match v {
            Value::Number(_) => self.decimal(v, path).map(QualifiedValue::exact),
            Value::String(s) => match parse_qualified(s) {
                Ok(q) => Some(q),
                Err(_) => {
                    self.fail(
                        path,
                        "a number or a qualified value like \"~50\" or \">=50\"",
                        v,
                    );
                    None
                }
            },
            other => {
                self.fail(path, "a number or qualified value string", other);
                None
            }
        }
    }

    fn kind(&mut self, o: &mut Obj<'_>) -> Option<MeasurementKind> {
        let v = self.required(o, "kind")?;
        self.enum_token::<MeasurementKind>(
            v,
            &o.path.key("kind"),
            "AlloyMeasurementKind or PhaseMeasurementKind",
        )
    }

    fn uncertainty(&mut self, v: &Value, path: &DocumentPath) -> Option<Decimal> {
        let d = self.decimal(v, path)?;
        if d.value() < 0.0 {
            self.fail(path, "a non-negative uncertainty", v);
            return None;
        }
        Some(d)
    }

    fn scalar_entry(&mut self, o: &mut Obj<'_>) -> Option<Measurement> {
        let path = o.path.clone();
        let kind = self.kind(o);
        let value = self
            .required(o, "value")
            .and_then(|v| self.qualified(v, &path.key("value")));
        let unit = self
            .required(o, "unit")
            .and_then(|u| self.unit(u, &path.key("unit")));
        let uncertainty = o
            .get("uncertainty")
            .and_then(|u| self.uncertainty(u, &path.key("uncertainty")));
        let method =
            self.opt_enum::<MeasurementMethod>(o, "measurement_method", "MeasurementMethod");
        let temperature = self.opt_quantity(o, "temperature");
        let pressure = self.opt_quantity(o, "pressure");
        let statistic = self.opt_enum::<MeasurementStatistic>(
            o,
            "measurement_statistic",
            "MeasurementStatistic",
        );
        let source = self.opt_string(o, "source");
        Some(Measurement {
            kind: kind?,
            value: value?,
            unit: unit?,
            uncertainty,
            method,
            temperature,
            pressure,
            statistic,
            group_id: None,
            source,
        })
    }

    fn group_entry(&mut self, o: &mut Obj<'_>, groups: &mut usize) -> Option<Vec<MaterialEntry>> {
        let path = o.path.clone();
        let kind = self.kind(o);
        let unit = self
            .required(o, "unit")
            .and_then(|u| self.unit(u, &path.key("unit")));
        let method =
            self.opt_enum::<MeasurementMethod>(o, "measurement_method", "MeasurementMethod");
        let temperature = self.opt_quantity(o, "temperature");
        let pressure = self.opt_quantity(o, "pressure");
        let source = self.opt_string(o, "source");
        let mut members = Vec::new();
        let mut ok = true;
        if let Some(vs) = self.required(o, "values") {
            let at = path.key("values");
            if let Some(items) = self.array(vs, &at) {
                if items.is_empty() {
                    self.fail_text(&at, "at least one value", "an empty array");
                    ok = false;
                }
                for (k, item) in items.iter().enumerate() {
                    let ip = at.index(k);
                    let Some(mut io) = self.object(item, &ip, "a grouped value") else {
                        ok = false;
                        continue;
                    };
                    let statistic = self.opt_enum::<MeasurementStatistic>(
                        &mut io,
                        "statistic",
                        "MeasurementStatistic",
                    );
                    let value = self
                        .required(&mut io, "value")
                        .and_then(|v| self.qualified(v, &ip.key("value")));
                    let uncertainty = io
                        .get("uncertainty")
                        .and_then(|u| self.uncertainty(u, &ip.key("uncertainty")));
                    self.finish(io);
                    match value {
                        Some(value) => members.push((statistic, value, uncertainty)),
                        None => ok = false,
                    }
                }
            }
        }
        let (kind, unit) = (kind?, unit?);
        if !ok {
            return None;
        }
        let group_id = format!("group#{}", *groups);
        *groups += 1;
        Some(
            members
                .into_iter()
                .map(|(statistic, value, uncertainty)| {
                    Measurement {
                        kind,
                        value,
                        unit,
                        uncertainty,
                        method,
                        temperature: temperature.clone(),
                        pressure: pressure.clone(),
                        statistic,
                        group_id: Some(group_id.clone()),
                        source: source.clone(),
                    }
                    .into()
                })
                .collect(),
        )
    }

    fn lattice_entry(&mut self, o: &mut Obj<'_>) -> Option<LatticeParam> {
        let path = o.path.clone();
        let lattice = self
            .required(o, "lattice")
            .and_then(|l| self.lattice(l, &path.key("lattice")));
        let structure = self.opt_enum::<CrysStruct>(o, "struct", "CrysStruct");
        let phase_fraction = self.opt_quantity(o, "phase_fraction");
        let name = self.opt_string(o, "name");
        let source = self.opt_string(o, "source");
        Some(LatticeParam {
            lattice: lattice?,
            structure,
            phase_fraction,
            name,
            source,
        })
    }

    fn lattice(&mut self, v: &Value, path: &DocumentPath) -> Option<Lattice> {
        let mut o = self.object(v, path, "a lattice")?;
        let family = self.required(&mut o, "type").and_then(|t| {
            let s = self.string(t, &path.key("type"))?;
            match s.parse::<LatticeFamily>() {
                Ok(f) => Some(f),
                Err(_) => {
                    self.fail(
                        &path.key("type"),
                        "one of `cubic`, `hexagonal`, `tetragonal`, `orthorhombic`",
                        t,
                    );
                    None
                }
            }
        });
        let a = self
            .required(&mut o, "a")
            .and_then(|a| self.decimal(a, &path.key("a")));
        let b = o.get("b").and_then(|b| self.decimal(b, &path.key("b")));
        let c = o.get("c").and_then(|c| self.decimal(c, &path.key("c")));
        let had_b = o.map.contains_key("b");
        let had_c = o.map.contains_key("c");
        self.finish(o);
        let (family, a) = (family?, a?);
        if (had_b && b.is_none()) || (had_c && c.is_none()) {
            return None;
        }
        match Lattice::new(family, a, b, c) {
            Ok(l) => Some(l),
            Err(e) => {
                self.fail_text(path, "lattice parameters matching its type", e.to_string());
                None
            }
        }
    }

    fn configuration_entry(
        &mut self,
        o: &mut Obj<'_>,
        groups: &mut usize,
    ) -> Option<Configuration> {
        let path = o.path.clone();
        let name = self.req_string(o, "name");
        let structure = self.opt_enum::<CrysStruct>(o, "struct", "CrysStruct");
        let mut tags = std::collections::BTreeSet::new();
        if let Some(tv) = o.get("tags") {
            let at = path.key("tags");
            if let Some(items) = self.array(tv, &at) {
                for (k, t) in items.iter().enumerate() {
                    if let Some(tag) = self.enum_token::<ConfigTag>(t, &at.index(k), "ConfigTag") {
                        tags.insert(tag);
                    }
                }
            }
        }
        let within = self.opt_string(o, "within");
        let mut measurements = Vec::new();
        let mut ok = true;
        if let Some(mv) = o.get("measurements") {
            let at = path.key("measurements");
            if let Some(items) = self.array(mv, &at) {
                for (k, item) in items.iter().enumerate() {
                    match self.entry(item, &at.index(k), groups, false) {
                        Some(entries) => {
                            measurements.extend(entries.into_iter().filter_map(|e| match e {
                                MaterialEntry::Observation(o) => Some(o),
                                MaterialEntry::Configuration(_) => None,
                            }))
                        }
                        None => ok = false,
                    }
                }
            }
        }
        let name = name?;
        ok.then_some(Configuration {
            name,
            structure,
            tags,
            within,
            measurements,
        })
    }
}

fn quote_list(keys: &[&str]) -> String {
    let mut seen: Vec<&str> = Vec::new();
    for k in keys {
        if !seen.contains(k) {
            seen.push(k);
        }
    }
    seen.iter()
        .map(|k| format!("`{k}`"))
        .collect::<Vec<_>>()
        .join(", ")
}

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

fn num(d: &Decimal) -> Value {
    // The stored text is valid JSON number syntax, so this cannot fail.
    serde_json::from_str::<Number>(d.as_str())
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

fn text(s: &str) -> Value {
    Value::String(s.to_string())
}

fn put_opt(map: &mut Map<String, Value>, key: &str, v: Option<Value>) {
    if let Some(v) = v {
        map.insert(key.to_string(), v);
    }
}

fn qualified_value(q: &QualifiedValue) -> Value {
    match q.qualifier {
        ValueQualifier::Exact => num(&q.magnitude),
        _ => Value::String(q.to_string()),
    }
}

fn quantity_value<V>(q: &QuantityField<V>, value: impl Fn(&V) -> Value) -> Value {
    let mut m = Map::new();
    put_opt(&mut m, "value", q.value.as_ref().map(value));
    put_opt(&mut m, "unit", q.unit.map(|u| text(u.token())));
    Value::Object(m)
}

fn decimal_quantity(q: &QuantityField<Decimal>) -> Value {
    quantity_value(q, num)
}

fn amounts(map: &IndexMap<String, Decimal>) -> Value {
    Value::Object(map.iter().map(|(k, v)| (k.clone(), num(v))).collect())
}

fn composition_value(c: &CompositionInput) -> Value {
    match c {
        CompositionInput::Formula(f) => text(f),
        CompositionInput::AtomicMap(m) => amounts(m),
        CompositionInput::WeightDict(m) => {
            let mut o = Map::new();
            o.insert("_helper".into(), text("from_weight_dict"));
            o.insert("weights".into(), amounts(m));
            Value::Object(o)
        }
        CompositionInput::Balance {
            main_element,
            additions,
        } => {
            let mut o = Map::new();
            o.insert("_helper".into(), text("balance_composition"));
            o.insert("main_element".into(), text(main_element));
            o.insert("additions".into(), amounts(additions));
            Value::Object(o)
        }
        CompositionInput::WeightAdditions {
            base,
            additions_weights,
            fraction,
        } => {
            let mut o = Map::new();
            o.insert("_helper".into(), text("weight_additions"));
            o.insert("base".into(), composition_value(base));
            o.insert("additions_weights".into(), amounts(additions_weights));
            o.insert("fraction".into(), num(fraction));
            Value::Object(o)
        }
    }
}

fn scalar_value(m: &Measurement) -> Value {
    let mut o = Map::new();
    o.insert("_type".into(), text("measurement"));
    o.insert("kind".into(), text(m.kind.as_str()));
    o.insert("value".into(), qualified_value(&m.value));
    o.insert("unit".into(), text(m.unit.token()));
    put_opt(&mut o, "uncertainty", m.uncertainty.as_ref().map(num));
    put_opt(
        &mut o,
        "measurement_method",
        m.method.map(|x| text(x.as_str())),
    );
    put_opt(
        &mut o,
        "temperature",
        m.temperature.as_ref().map(decimal_quantity),
    );
    put_opt(
        &mut o,
        "pressure",
        m.pressure.as_ref().map(decimal_quantity),
    );
    put_opt(
        &mut o,
        "measurement_statistic",
        m.statistic.map(|x| text(x.as_str())),
    );
    put_opt(&mut o, "source", m.source.as_ref().map(|s| text(s)));
    Value::Object(o)
}

fn group_value(members: &[&Measurement]) -> Value {
    let first = members[0];
    let mut o = Map::new();
    o.insert("_type".into(), text("group_measurements"));
    o.insert("kind".into(), text(first.kind.as_str()));
    o.insert("unit".into(), text(first.unit.token()));
    put_opt(
        &mut o,
        "measurement_method",
        first.method.map(|x| text(x.as_str())),
    );
    put_opt(
        &mut o,
        "temperature",
        first.temperature.as_ref().map(decimal_quantity),
    );
    put_opt(
        &mut o,
        "pressure",
        first.pressure.as_ref().map(decimal_quantity),
    );
    let values = members
        .iter()
        .map(|m| {
            let mut v = Map::new();
            put_opt(&mut v, "statistic", m.statistic.map(|x| text(x.as_str())));
            v.insert("value".into(), qualified_value(&m.value));
            put_opt(&mut v, "uncertainty", m.uncertainty.as_ref().map(num));
            Value::Object(v)
        })
        .collect();
    o.insert("values".into(), Value::Array(values));
    put_opt(&mut o, "source", first.source.as_ref().map(|s| text(s)));
    Value::Object(o)
}

fn observation_value(obs: &Observation) -> Value {
    match obs {
        Observation::Scalar(m) => scalar_value(m),
        Observation::Composition(c) => {
            let mut o = Map::new();
            o.insert("_type".into(), text("composition"));
            o.insert("composition".into(), composition_value(&c.input));
            put_opt(&mut o, "method", c.method.map(|x| text(x.as_str())));
            put_opt(&mut o, "source", c.source.as_ref().map(|s| text(s)));
            Value::Object(o)
        }
        Observation::Lattice(l) => {
            let mut lat = Map::new();
            lat.insert("type".into(), text(l.lattice.family().as_str()));
            lat.insert("a".into(), num(l.lattice.a()));
            put_opt(&mut lat, "b", l.lattice.b().map(num));
            put_opt(&mut lat, "c", l.lattice.c().map(num));
            let mut o = Map::new();
            o.insert("_type".into(), text("lattice_param"));
            o.insert("lattice".into(), Value::Object(lat));
            put_opt(&mut o, "struct", l.structure.map(|s| text(s.as_str())));
            put_opt(
                &mut o,
                "phase_fraction",
                l.phase_fraction.as_ref().map(decimal_quantity),
            );
            put_opt(&mut o, "name", l.name.as_ref().map(|s| text(s)));
            put_opt(&mut o, "source", l.source.as_ref().map(|s| text(s)));
            Value::Object(o)
        }
    }
}

/// Encode observations, folding runs of grouped members back into one entry.
fn observations_value<'a>(
    items: impl IntoIterator<Item = Result<&'a Observation, &'a Configuration>>,
) -> Value {
    let mut out: Vec<Value> = Vec::new();
    let mut run: Vec<&Measurement> = Vec::new();
    let flush = |run: &mut Vec<&Measurement>, out: &mut Vec<Value>| {
        if !run.is_empty() {
            out.push(group_value(run));
            run.clear();
        }
    };
    for item in items {
        match item {
            Ok(Observation::Scalar(m)) if m.group_id.is_some() => {
                if run.first().is_some_and(|f| f.group_id != m.group_id) {
                    flush(&mut run, &mut out);
                }
                run.push(m);
            }
            Ok(obs) => {
                flush(&mut run, &mut out);
                out.push(observation_value(obs));
            }
            Err(c) => {
                flush(&mut run, &mut out);
                out.push(configuration_value(c));
            }
        }
    }
    flush(&mut run, &mut out);
    Value::Array(out)
}

fn configuration_value(c: &Configuration) -> Value {
    let mut o = Map::new();
    o.insert("_type".into(), text("configuration"));
    o.insert("name".into(), text(&c.name));
    put_opt(&mut o, "struct", c.structure.map(|s| text(s.as_str())));
    o.insert(
        "tags".into(),
        Value::Array(c.tags.iter().map(|t| text(t.as_str())).collect()),
    );
    put_opt(&mut o, "within", c.within.as_ref().map(|s| text(s)));
    o.insert(
        "measurements".into(),
        observations_value(c.measurements.iter().map(Ok)),
    );
    Value::Object(o)
}

fn slot_decimal(s: &Slot<Decimal>) -> Value {
    match s {
        Slot::Value(d) => num(d),
        Slot::Var(v) => Value::String(placeholder_token(v)),
    }
}

fn event_value(ev: &ProcessEvent) -> Value {
    let mut o = Map::new();
    o.insert("kind".into(), text(ev.kind.as_str()));
    put_opt(
        &mut o,
        "temperature",
        ev.temperature
            .as_ref()
            .map(|q| quantity_value(q, slot_decimal)),
    );
    put_opt(
        &mut o,
        "duration",
        ev.duration
            .as_ref()
            .map(|q| quantity_value(q, slot_decimal)),
    );
    put_opt(
        &mut o,
        "description",
        ev.description.as_ref().map(|s| text(s)),
    );
    put_opt(&mut o, "source", ev.source.as_ref().map(|s| text(s)));
    put_opt(
        &mut o,
        "inputs",
        ev.inputs.as_ref().map(|ins| {
            Value::Array(
                ins.iter()
                    .map(|s| match s {
                        Slot::Value(n) => text(n),
                        Slot::Var(v) => Value::String(placeholder_token(v)),
                    })
                    .collect(),
            )
        }),
    );
    Value::Object(o)
}

pub fn encode_experiment(e: &Experiment) -> Value {
    let mut o = Map::new();
    let raw: Map<String, Value> = e
        .raw_materials
        .iter()
        .map(|(name, rm)| {
            let mut r = Map::new();
            r.insert("kind".into(), text(rm.kind.as_str()));
            put_opt(
                &mut r,
                "description",
                rm.description.as_ref().map(|s| text(s)),
            );
            put_opt(&mut r, "source", rm.source.as_ref().map(|s| text(s)));
            (name.clone(), Value::Object(r))
        })
        .collect();
    o.insert("raw_materials".into(), Value::Object(raw));
    let groups: Map<String, Value> = e
        .synthesis_groups
        .iter()
        .map(|g| {
            (
                g.signature(),
                Value::Array(g.events.iter().map(event_value).collect()),
            )
        })
        .collect();
    o.insert("synthesis_groups".into(), Value::Object(groups));
    if !e.descriptions.is_empty() {
        let ds = e
            .descriptions
            .iter()
            .map(|d| {
                let mut m = Map::new();
                m.insert(
                    "kinds".into(),
                    Value::Array(d.kinds.iter().map(|k| text(k.as_str())).collect()),
                );
                put_opt(&mut m, "method", d.method.map(|x| text(x.as_str())));
                m.insert("desc".into(), text(&d.desc));
                Value::Object(m)
            })
            .collect();
        o.insert("descriptions".into(), Value::Array(ds));
    }
    let materials = e
        .output_materials
        .iter()
        .map(|m| {
            let mut mo = Map::new();
            mo.insert("process".into(), text(&m.process.to_string()));
            put_opt(&mut mo, "name", m.name.as_ref().map(|s| text(s)));
            mo.insert(
                "measurements".into(),
                observations_value(m.measurements.iter().map(|e| match e {
                    MaterialEntry::Observation(o) => Ok(o),
                    MaterialEntry::Configuration(c) => Err(c),
                })),
            );
            Value::Object(mo)
        })
        .collect();
    o.insert("output_materials".into(), Value::Array(materials));
    if !e.normalizations.is_empty() {
        let ns = e
            .normalizations
            .records()
            .iter()
            .map(|r| {
                let mut m = Map::new();
                m.insert("family".into(), text(r.canonical.family().as_str()));
                m.insert("value".into(), text(r.canonical.as_str()));
                m.insert("paper_term".into(), text(&r.paper_term));
                put_opt(&mut m, "source", r.source.as_ref().map(|s| text(s)));
                Value::Object(m)
            })
            .collect();
        o.insert("normalizations".into(), Value::Array(ns));
    }
    Value::Object(o)
}

pub fn encode_value(experiments: &[Experiment]) -> Value {
    Value::Array(experiments.iter().map(encode_experiment).collect())
}

/// Pretty-printed JSON document.
pub fn encode(experiments: &[Experiment]) -> String {
    if experiments.is_empty() {
        return "[]".to_string();
    }
    serde_json::to_string_pretty(&encode_value(experiments)).unwrap_or_else(|_| "[]".to_string())
}
