//! Expansion of process strings into concrete event chains and the material
//! dependency graph.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::datamodel::{
    placeholder_name, BindingValue, Experiment, ProcessStep, QuantityField, Slot, SynthesisGroup,
};
use crate::ontology::ProcessKind;
use crate::path::DocumentPath;
use crate::quantities::Decimal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResolveMode {
    /// Materials may start from other materials.
    #[default]
    Graph,
    /// Every process chain must start from raw materials.
    Flat,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("{path}: unknown name `{name}`")]
    UnknownName { path: DocumentPath, name: String },
    #[error("{path}: no synthesis group `{group}` taking {arity} parameter(s)")]
    UnknownGroup {
        path: DocumentPath,
        group: String,
        arity: usize,
    },
    #[error("{path}: parameter `{param}` of group `{group}` is not bound")]
    UnboundParam {
        path: DocumentPath,
        group: String,
        param: String,
    },
    #[error("{path}: binding `{var}` does not match a parameter of group `{group}`")]
    UnusedBinding {
        path: DocumentPath,
        group: String,
        var: String,
    },
    #[error("{path}: binding `{var}` = `{value}` must be numeric where it is used")]
    NonNumericBinding {
        path: DocumentPath,
        var: String,
        value: String,
    },
    #[error("{path}: material `{name}` is used as an input; chains must start from raw materials")]
    FlatModeMaterialInput { path: DocumentPath, name: String },
    #[error("{path}: materials depend on themselves: {}", cycle.join(" -> "))]
    CycleDetected {
        path: DocumentPath,
        cycle: Vec<String>,
    },
}

impl ResolveError {
    pub fn path(&self) -> &DocumentPath {
        match self {
            ResolveError::UnknownName { path, .. }
            | ResolveError::UnknownGroup { path, .. }
            | ResolveError::UnboundParam { path, .. }
            | ResolveError::UnusedBinding { path, .. }
            | ResolveError::NonNumericBinding { path, .. }
            | ResolveError::FlatModeMaterialInput { path, .. }
            | ResolveError::CycleDetected { path, .. } => path,
        }
    }
}

/// Where a concrete event was declared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventOrigin {
    pub group: usize,
    pub event: usize,
}

/// A process event with every placeholder replaced by its bound value.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcreteEvent {
    pub kind: ProcessKind,
    pub temperature: Option<QuantityField<Decimal>>,
    pub duration: Option<QuantityField<Decimal>>,
    pub description: Option<String>,
    pub source: Option<String>,
    pub inputs: Vec<String>,
    pub origin: EventOrigin,
    /// Index of the material whose own process string produced this event.
    pub material: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedMaterial {
    pub index: usize,
    pub id: String,
    pub parents: Vec<usize>,
    pub own_events: Vec<ConcreteEvent>,
    pub linear_chain: Vec<ConcreteEvent>,
}

impl ResolvedMaterial {
    pub fn linearize(&self) -> Vec<ProcessKind> {
        linearize(self)
    }
}

pub fn linearize(r: &ResolvedMaterial) -> Vec<ProcessKind> {
    r.linear_chain.iter().map(|e| e.kind).collect()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Resolution {
    pub materials: Vec<ResolvedMaterial>,
    /// (parent, child) material indices.
    pub edges: BTreeSet<(usize, usize)>,
    /// Materials in dependency order; members of cycles are omitted.
    pub topo_order: Vec<usize>,
    pub referenced_raw: BTreeSet<String>,
    pub referenced_groups: BTreeSet<usize>,
}

pub fn group_path(e: &Experiment, g: usize) -> DocumentPath {
    DocumentPath::root()
        .key("synthesis_groups")
        .key(e.synthesis_groups[g].signature())
}

pub fn event_path(e: &Experiment, origin: EventOrigin) -> DocumentPath {
    group_path(e, origin.group).index(origin.event)
}

pub fn process_path(m: usize) -> DocumentPath {
    DocumentPath::root()
        .key("output_materials")
        .index(m)
        .key("process")
}

enum NameRef {
    Raw,
    Material(usize),
}

struct Ctx<'a> {
    e: &'a Experiment,
    mode: ResolveMode,
    materials_by_name: BTreeMap<&'a str, usize>,
    errors: Vec<ResolveError>,
    referenced_raw: BTreeSet<String>,
    referenced_groups: BTreeSet<usize>,
}

impl<'a> Ctx<'a> {
    fn new(e: &'a Experiment, mode: ResolveMode) -> Self {
        let mut materials_by_name = BTreeMap::new();
        for (i, m) in e.output_materials.iter().enumerate() {
            if let Some(n) = &m.name {
                materials_by_name.entry(n.as_str()).or_insert(i);
            }
        }
        Ctx {
            e,
            mode,
            materials_by_name,
            errors: Vec::new(),
            referenced_raw: BTreeSet::new(),
            referenced_groups: BTreeSet::new(),
        }
    }

    fn lookup(&self, name: &str) -> Option<NameRef> {
        if self.e.raw_materials.contains_key(name) {
            Some(NameRef::Raw)
        } else {
            self.materials_by_name
                .get(name)
                .map(|&i| NameRef::Material(i))
        }
    }

    /// Record a reference to `name` used as an input. Returns the parent
    /// material it names, if any.
    fn input_ref(&mut self, path: &DocumentPath, name: &str, strict: bool) -> Option<usize> {
        match self.lookup(name) {
            Some(NameRef::Raw) => {
                self.referenced_raw.insert(name.to_string());
                None
            }
            Some(NameRef::Material(i)) => {
                if self.mode == ResolveMode::Flat {
                    self.errors.push(ResolveError::FlatModeMaterialInput {
                        path: path.clone(),
                        name: name.to_string(),
                    });
                    None
                } else {
                    Some(i)
                }
            }
            None => {
                if strict {
                    self.errors.push(ResolveError::UnknownName {
                        path: path.clone(),
                        name: name.to_string(),
                    });
                }
                None
            }
        }
    }

    fn find_group(&mut self, path: &DocumentPath, step: &ProcessStep) -> Option<usize> {
        let same_name: Vec<usize> = (0..self.e.synthesis_groups.len())
            .filter(|&g| self.e.synthesis_groups[g].name == step.group)
            .collect();
        let found = match same_name.as_slice() {
            [only] => Some(*only),
            several => several
                .iter()
                .copied()
                .find(|&g| self.e.synthesis_groups[g].params.len() == step.bindings.len()),
        };
        if found.is_none() {
            self.errors.push(ResolveError::UnknownGroup {
                path: path.clone(),
                group: step.group.clone(),
                arity: step.bindings.len(),
            });
        }
        found
    }

    fn expand_step(
        &mut self,
        material: usize,
        step: &ProcessStep,
        parents: &mut BTreeSet<usize>,
    ) -> Vec<ConcreteEvent> {
        let path = process_path(material);
        let Some(g) = self.find_group(&path, step) else {
            return Vec::new();
        };
        self.referenced_groups.insert(g);
        let group: &SynthesisGroup = &self.e.synthesis_groups[g];
        for p in &group.params {
            if step.binding(p).is_none() {
                self.errors.push(ResolveError::UnboundParam {
                    path: path.clone(),
                    group: group.signature(),
                    param: p.clone(),
                });
            }
        }
        for b in &step.bindings {
            if !group.params.contains(&b.var) {
                self.errors.push(ResolveError::UnusedBinding {
                    path: path.clone(),
                    group: group.signature(),
                    var: b.var.clone(),
                });
            } else if let BindingValue::Name(n) = &b.value {
                // material-valued bindings make the named material a parent;
                // anything else unknown is kept as a plain string
                if let Some(p) = self.input_ref(&path, n, false) {
                    parents.insert(p);
                }
            }
        }
        let bound = |var: &str| -> Option<&BindingValue> {
            group
                .params
                .iter()
                .any(|p| p == var)
                .then(|| step.binding(var))
                .flatten()
        };

        let mut events = Vec::with_capacity(group.events.len());
        for (j, ev) in group.events.iter().enumerate() {
            let origin = EventOrigin { group: g, event: j };
            let numeric = |q: &Option<QuantityField<Slot<Decimal>>>,
                           errors: &mut Vec<ResolveError>|
             -> Option<QuantityField<Decimal>> {
                let q = q.as_ref()?;
                let value = match &q.value {
                    None => None,
                    Some(Slot::Value(d)) => Some(d.clone()),
                    Some(Slot::Var(v)) => match bound(v) {
                        Some(BindingValue::Number(d)) => Some(d.clone()),
                        Some(BindingValue::Name(n)) => {
                            errors.push(ResolveError::NonNumericBinding {
                                path: path.clone(),
                                var: v.clone(),
                                value: n.clone(),
                            });
                            None
                        }
                        None => None,
                    },
                };
                Some(QuantityField {
                    value,
                    unit: q.unit,
                })
            };
            let temperature = numeric(&ev.temperature, &mut self.errors);
            let duration = numeric(&ev.duration, &mut self.errors);
            let text = |s: &Option<String>| -> Option<String> {
                let s = s.as_ref()?;
                match placeholder_name(s).and_then(bound) {
                    Some(v) => Some(v.to_string()),
                    None => Some(s.clone()),
                }
            };
            let description = text(&ev.description);
            let source = text(&ev.source);
            let mut inputs = Vec::new();
            for slot in ev.inputs.iter().flatten() {
                let name = match slot {
                    Slot::Value(n) => Some(n.clone()),
                    Slot::Var(v) => bound(v).map(|b| b.to_string()),
                };
                if let Some(n) = name {
                    let strict = matches!(slot, Slot::Value(_));
                    let at = if strict {
                        event_path(self.e, origin).key("inputs")
                    } else {
                        path.clone()
                    };
                    if let Some(p) = self.input_ref(&at, &n, true) {
                        parents.insert(p);
                    }
                    inputs.push(n);
                }
            }
            events.push(ConcreteEvent {
                kind: ev.kind,
                temperature,
                duration,
                description,
                source,
                inputs,
                origin,
                material,
            });
        }
        events
    }
}

/// Resolve every material, collecting all problems instead of stopping at the first.
pub fn resolve_collect(e: &Experiment, mode: ResolveMode) -> (Resolution, Vec<ResolveError>) {
    let mut ctx = Ctx::new(e, mode);
    let n = e.output_materials.len();
    let mut parents: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut own: Vec<Vec<ConcreteEvent>> = Vec::with_capacity(n);

    for (i, m) in e.output_materials.iter().enumerate() {
        let path = process_path(i);
        for input in &m.process.inputs {
            if let Some(p) = ctx.input_ref(&path, input, true) {
                parents[i].insert(p);
            }
        }
        let mut events = Vec::new();
        for step in &m.process.steps {
            events.extend(ctx.expand_step(i, step, &mut parents[i]));
        }
        own.push(events);
    }

    // Materials that can reach themselves form cycles.
    let reach = reachability(&parents);
    let mut cyclic = vec![false; n];
    let mut reported = vec![false; n];
    for i in 0..n {
        if !reach[i].contains(&i) {
            continue;
        }
        cyclic[i] = true;
        if reported[i] {
            continue;
        }
        let members: Vec<usize> = (0..n)
            .filter(|&j| reach[i].contains(&j) && reach[j].contains(&i))
            .collect();
        for &j in &members {
            reported[j] = true;
        }
        ctx.errors.push(ResolveError::CycleDetected {
            path: process_path(i),
            cycle: members
                .iter()
                .map(|&j| e.output_materials[j].id(j))
                .collect(),
        });
    }

    let topo_order = kahn(&parents, &cyclic);
    let position: BTreeMap<usize, usize> = topo_order
        .iter()
        .enumerate()
        .map(|(k, &i)| (i, k))
        .collect();

    let mut materials = Vec::with_capacity(n);
    for i in 0..n {
        let mut chain = Vec::new();
        if !cyclic[i] {
            let mut ancestors: Vec<usize> =
                reach[i].iter().copied().filter(|a| !cyclic[*a]).collect();
            ancestors.sort_by_key(|a| position[a]);
            for a in ancestors {
                chain.extend(own[a].iter().cloned());
            }
        }
        chain.extend(own[i].iter().cloned());
        materials.push(ResolvedMaterial {
            index: i,
            id: e.output_materials[i].id(i),
            parents: parents[i].iter().copied().collect(),
            own_events: own[i].clone(),
            linear_chain: chain,
        });
    }

    let edges = parents
        .iter()
        .enumerate()
        .flat_map(|(c, ps)| ps.iter().map(move |&p| (p, c)))
        .collect();
    let resolution = Resolution {
        materials,
        edges,
        topo_order,
        referenced_raw: ctx.referenced_raw,
        referenced_groups: ctx.referenced_groups,
    };
    (resolution, ctx.errors)
}

/// Resolve every material, failing on the first problem found.
pub fn resolve(e: &Experiment, mode: ResolveMode) -> Result<Resolution, ResolveError> {
    let (r, mut errors) = resolve_collect(e, mode);
    if errors.is_empty() {
        Ok(r)
    } else {
        Err(errors.swap_remove(0))
    }
}

/// Transitive ancestors of every node.
fn reachability(parents: &[BTreeSet<usize>]) -> Vec<BTreeSet<usize>> {
    (0..parents.len())
        .map(|start| {
            let mut seen = BTreeSet::new();
            let mut stack: Vec<usize> = parents[start].iter().copied().collect();
            while let Some(x) = stack.pop() {
                if seen.insert(x) {
                    stack.extend(parents[x].iter().copied());
                }
            }
            seen
        })
        .collect()
}

/// Kahn's algorithm over the acyclic part, smallest index first among ready nodes.
fn kahn(parents: &[BTreeSet<usize>], cyclic: &[bool]) -> Vec<usize> {
    let n = parents.len();
    let mut blocked: Vec<usize> = (0..n)
        .map(|i| parents[i].iter().filter(|p| !cyclic[**p]).count())
        .collect();
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| !cyclic[i] && blocked[i] == 0).collect();
    let mut order = Vec::new();
    while let Some(x) = ready.pop_first() {
        order.push(x);
        for c in 0..n {
            if !cyclic[c] && parents[c].contains(&x) {
                blocked[c] -= 1;
                if blocked[c] == 0 {
                    ready.insert(c);
                }
            }
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{parse_process, Material, ProcessEvent, RawMaterial};
    use crate::ontology::RawMaterialKind;
    use crate::quantities::Unit;
    use ProcessKind::*;

    fn group(sig: &str, events: Vec<ProcessEvent>) -> SynthesisGroup {
        let (name, params) = SynthesisGroup::parse_signature(sig).unwrap();
        SynthesisGroup {
            name,
            params,
            events,
        }
    }

    fn material(process: &str, name: Option<&str>) -> Material {
        Material::new(parse_process(process).unwrap(), name)
    }

    fn templated_anneal() -> ProcessEvent {
        let mut ev = ProcessEvent::new(Annealing);
        ev.temperature = Some(QuantityField::new(
            Slot::Var("Temp".into()),
            Unit::lookup("celsius").unwrap(),
        ));
        ev
    }

    fn base_experiment() -> Experiment {
        let mut e = Experiment::default();
        e.raw_materials
            .insert("elements".into(), RawMaterial::new(RawMaterialKind::Ingot));
        e.synthesis_groups.push(group(
            "creation",
            vec![
                ProcessEvent::new(ArcMelting),
                ProcessEvent::new(AsCast),
                ProcessEvent::new(Homogenization),
                ProcessEvent::new(WaterQuenching),
            ],
        ));
        e.synthesis_groups
            .push(group("annealing[Temp]", vec![templated_anneal()]));
        e.output_materials
            .push(material("elements->creation", Some("materialA")));
        e.output_materials
            .push(material("materialA->annealing[Temp=10]", Some("materialB")));
        e
    }

    #[test]
    fn derived_material_prefixes_parent_chain() {
        let e = base_experiment();
        let r = resolve(&e, ResolveMode::Graph).unwrap();
        assert_eq!(
            r.materials[0].linearize(),
            vec![ArcMelting, AsCast, Homogenization, WaterQuenching]
        );
        assert!(r.materials[0].parents.is_empty());
        assert_eq!(r.materials[1].parents, vec![0]);
        assert_eq!(r.materials[1].linearize().len(), 5);
        assert_eq!(r.edges.iter().copied().collect::<Vec<_>>(), vec![(0, 1)]);
        let anneal = &r.materials[1].linear_chain[4];
        assert_eq!(
            anneal
                .temperature
                .as_ref()
                .unwrap()
                .value
                .as_ref()
                .unwrap()
                .value(),
            10.0
        );
        assert_eq!(anneal.origin, EventOrigin { group: 1, event: 0 });
        assert_eq!(r.topo_order, vec![0, 1]);
        assert!(r.referenced_raw.contains("elements"));
        assert_eq!(r.referenced_groups.len(), 2);
    }

    #[test]
    fn flat_mode_rejects_material_inputs() {
        let e = base_experiment();
        let err = resolve(&e, ResolveMode::Flat).unwrap_err();
        assert!(
            matches!(err, ResolveError::FlatModeMaterialInput { ref name, .. } if name == "materialA")
        );
        assert_eq!(err.path().to_string(), "output_materials[1].process");
    }

    #[test]
    fn self_dependency_is_a_cycle() {
        let mut e = base_experiment();
        e.output_materials[0] = material("materialA->creation", Some("materialA"));
        let (r, errors) = resolve_collect(&e, ResolveMode::Graph);
        let cycles: Vec<_> = errors
            .iter()
            .filter(|x| matches!(x, ResolveError::CycleDetected { .. }))
            .collect();
        assert_eq!(cycles.len(), 1);
        assert_eq!(r.topo_order, vec![1]);

        let mut e = base_experiment();
        e.output_materials[0] = material("materialB->creation", Some("materialA"));
        let (_, errors) = resolve_collect(&e, ResolveMode::Graph);
        assert!(
            matches!(&errors[..], [ResolveError::CycleDetected { cycle, .. }] if cycle == &["materialA", "materialB"])
        );
    }

    #[test]
    fn binding_errors() {
        let mut e = base_experiment();
        e.output_materials[1] = material("materialA->annealing", Some("materialB"));
        assert!(matches!(
            resolve(&e, ResolveMode::Graph),
            Err(ResolveError::UnboundParam { .. })
        ));

        e.output_materials[1] = material("materialA->annealing[Temp=1,Time=2]", Some("materialB"));
        assert!(matches!(
            resolve(&e, ResolveMode::Graph),
            Err(ResolveError::UnusedBinding { .. })
        ));

        e.output_materials[1] = material("materialA->annealing[Temp=hot]", Some("materialB"));
        assert!(matches!(
            resolve(&e, ResolveMode::Graph),
            Err(ResolveError::NonNumericBinding { .. })
        ));

        e.output_materials[1] = material("nothing->creation", None);
        assert!(matches!(
            resolve(&e, ResolveMode::Graph),
            Err(ResolveError::UnknownName { .. })
        ));

        e.output_materials[1] = material("elements->missing", None);
        assert!(matches!(
            resolve(&e, ResolveMode::Graph),
            Err(ResolveError::UnknownGroup { .. })
        ));
    }

    #[test]
    fn material_valued_binding_and_event_inputs_make_parents() {
        let mut e = base_experiment();
        e.raw_materials
            .insert("wc".into(), RawMaterial::new(RawMaterialKind::Powder));
        let mut mix = ProcessEvent::new(Mixing);
        mix.inputs = Some(vec![Slot::Var("Feed".into()), Slot::Value("wc".into())]);
        e.synthesis_groups.push(group("mix[Feed]", vec![mix]));
        e.output_materials
            .push(material("elements->mix[Feed=materialB]", Some("composite")));
        let r = resolve(&e, ResolveMode::Graph).unwrap();
        assert_eq!(r.materials[2].parents, vec![1]);
        assert_eq!(r.materials[2].linear_chain.len(), 4 + 1 + 1);
        assert_eq!(
            r.materials[2].linear_chain[5].inputs,
            vec!["materialB", "wc"]
        );
        assert!(r.referenced_raw.contains("wc"));
    }

    #[test]
    fn overloaded_group_names_select_by_arity() {
        let mut e = base_experiment();
        let mut hold = templated_anneal();
        hold.duration = Some(QuantityField::new(
            Slot::Var("Hours".into()),
            Unit::lookup("hour").unwrap(),
        ));
        e.synthesis_groups
            .push(group("annealing[Temp,Hours]", vec![hold]));
        e.output_materials
            .push(material("materialA->annealing[Temp=900,Hours=2]", None));
        let r = resolve(&e, ResolveMode::Graph).unwrap();
        assert_eq!(r.materials[2].own_events[0].origin.group, 2);
        assert_eq!(r.materials[1].own_events[0].origin.group, 1);
    }

    #[test]
    fn chain_length_is_sum_of_ancestor_own_steps() {
        let mut e = base_experiment();
        e.output_materials
            .push(material("materialB->annealing[Temp=20]", Some("c")));
        e.output_materials
            .push(material("c,materialA->annealing[Temp=30]", Some("d")));
        let r = resolve(&e, ResolveMode::Graph).unwrap();
        assert_eq!(r.materials[3].linear_chain.len(), 4 + 1 + 1 + 1);
        let temps: Vec<f64> = r.materials[3]
            .linear_chain
            .iter()
            .filter_map(|ev| {
                ev.temperature
                    .as_ref()
                    .and_then(|t| t.value.as_ref())
                    .map(Decimal::value)
            })
            .collect();
        assert_eq!(temps, vec![10.0, 20.0, 30.0]);
    }
}
