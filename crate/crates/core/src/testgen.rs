//! Random, valid experiments for property tests and benchmarks.

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::composition::CompositionInput;
use crate::datamodel::{
    Binding, BindingValue, CompMeasurement, Configuration, DescriptionGroup, Experiment, Lattice,
    LatticeFamily, LatticeParam, Material, MaterialEntry, Measurement, MeasurementKind,
    Observation, ProcessChainSpec, ProcessEvent, ProcessStep, QuantityField, RawMaterial, Slot,
    SynthesisGroup,
};
use crate::ontology::{
    AlloyMeasurementKind, CanonicalValue, ConfigTag, CrysStruct, MeasurementMethod,
    MeasurementStatistic, PhaseMeasurementKind, ProcessKind, RawMaterialKind,
};
use crate::quantities::{Decimal, QualifiedValue, Unit, ValueQualifier};

#[derive(Debug, Clone, Copy)]
pub struct Size {
    pub materials: usize,
    /// Approximate number of observations per material, configurations included.
    pub measurements: usize,
}

fn unit(token: &str) -> Unit {
    Unit::lookup(token).expect("unit in registry")
}

fn dec<R: Rng>(rng: &mut R, lo: u32, hi: u32) -> Decimal {
    match rng.gen_range(0..3) {
        0 => Decimal::from_f64(rng.gen_range(lo..=hi) as f64),
        1 => Decimal::from_f64(rng.gen_range(lo * 8..=hi * 8) as f64 / 8.0),
        _ => format!("{}.{}", rng.gen_range(lo..=hi), rng.gen_range(0..100))
            .parse()
            .expect("valid number"),
    }
}

fn maybe<R: Rng, T>(rng: &mut R, p: f64, f: impl FnOnce(&mut R) -> T) -> Option<T> {
    rng.gen_bool(p).then(|| f(rng))
}

fn text<R: Rng>(rng: &mut R, stem: &str) -> String {
    format!("{stem} {}", rng.gen_range(0..1000))
}

const ELEMENTS: [&str; 12] = [
    "Co", "Cr", "Fe", "Ni", "Mn", "Al", "Ti", "Nb", "Ta", "Mo", "W", "V",
];

/// `n` positive integers summing to 100.
fn split_100<R: Rng>(rng: &mut R, n: usize) -> Vec<u32> {
    let mut cuts: Vec<u32> = (1..100).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<u32> = cuts.into_iter().take(n - 1).collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(n);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(100)) {
        out.push(c - prev);
        prev = c;
    }
    out
}

fn element_amounts<R: Rng>(rng: &mut R, elements: &[&str]) -> IndexMap<String, Decimal> {
    let amounts = split_100(rng, elements.len());
    elements
        .iter()
        .zip(amounts)
        .map(|(e, a)| (e.to_string(), Decimal::from_f64(a as f64)))
        .collect()
}

fn composition_input<R: Rng>(rng: &mut R, allow_helper: bool) -> CompositionInput {
    let n = rng.gen_range(2..=5);
    let elements: Vec<&str> = ELEMENTS.choose_multiple(rng, n).copied().collect();
    match rng.gen_range(0..if allow_helper { 5 } else { 2 }) {
        0 => {
            let mut f = String::new();
            for e in &elements {
                f.push_str(e);
                if rng.gen_bool(0.5) {
                    f.push_str(&format!("{}", rng.gen_range(1..20) as f64 / 10.0));
                }
            }
            CompositionInput::Formula(f)
        }
        1 => CompositionInput::AtomicMap(element_amounts(rng, &elements)),
        2 => CompositionInput::WeightDict(element_amounts(rng, &elements)),
        3 => {
            let additions = elements[1..]
                .iter()
                .map(|e| {
                    (
                        e.to_string(),
                        Decimal::from_f64(rng.gen_range(1..10) as f64),
                    )
                })
                .collect();
            CompositionInput::Balance {
                main_element: elements[0].to_string(),
                additions,
            }
        }
        _ => {
            let base = composition_input(rng, false);
            let extra: Vec<&str> = ["W", "C", "Mo", "Si"]
                .choose_multiple(rng, 2)
                .copied()
                .collect();
            CompositionInput::WeightAdditions {
                base: Box::new(base),
                additions_weights: element_amounts(rng, &extra),
                fraction: Decimal::from_f64(rng.gen_range(1..30) as f64 / 100.0),
            }
        }
    }
}

fn composition<R: Rng>(rng: &mut R) -> CompMeasurement {
    let mut c =
        CompMeasurement::new(composition_input(rng, true)).expect("generated composition resolves");
    c.method = maybe(rng, 0.5, |r| {
        *[MeasurementMethod::Eds, MeasurementMethod::IcpOes]
            .choose(r)
            .unwrap()
    });
    c.source = maybe(rng, 0.3, |r| text(r, "Table"));
    c
}

fn scalar_kind<R: Rng>(rng: &mut R, phase: bool) -> (MeasurementKind, Unit) {
    if phase {
        let k = *PhaseMeasurementKind::ALL.choose(rng).unwrap();
        let u = match k {
            PhaseMeasurementKind::VolumeFraction => unit("percent"),
            _ => unit(["micrometer", "nanometer"].choose(rng).unwrap()),
        };
        (k.into(), u)
    } else {
        let k = *AlloyMeasurementKind::ALL.choose(rng).unwrap();
        let u = match k {
            AlloyMeasurementKind::VickersHardness => unit("HV"),
            AlloyMeasurementKind::Density => unit("gram_per_cm3"),
            AlloyMeasurementKind::MeltingPoint
            | AlloyMeasurementKind::Solidus
            | AlloyMeasurementKind::Liquidus => unit(["celsius", "kelvin"].choose(rng).unwrap()),
            _ => unit(
                ["MegaPascal", "GigaPascal", "percent", "dimensionless"]
                    .choose(rng)
                    .unwrap(),
            ),
        };
        (k.into(), u)
    }
}

fn conditions<R: Rng>(rng: &mut R, m: &mut Measurement) {
    m.method = maybe(rng, 0.4, |r| *MeasurementMethod::ALL.choose(r).unwrap());
    m.temperature = maybe(rng, 0.3, |r| {
        QuantityField::new(dec(r, 20, 900), unit("celsius"))
    });
    m.pressure = maybe(rng, 0.1, |r| QuantityField::new(dec(r, 1, 5), unit("atm")));
    m.source = maybe(rng, 0.3, |r| text(r, "Fig."));
}

fn qualified<R: Rng>(rng: &mut R) -> QualifiedValue {
    let q = if rng.gen_bool(0.7) {
        ValueQualifier::Exact
    } else {
        *ValueQualifier::ALL.choose(rng).unwrap()
    };
    QualifiedValue::new(q, dec(rng, 1, 2000))
}

fn scalar<R: Rng>(rng: &mut R, phase: bool) -> Measurement {
    let (kind, u) = scalar_kind(rng, phase);
    let mut m = Measurement::new(kind, qualified(rng), u);
    m.uncertainty = maybe(rng, 0.3, |r| dec(r, 0, 50));
    m.statistic = maybe(rng, 0.2, |r| {
        *[MeasurementStatistic::Mean, MeasurementStatistic::Median]
            .choose(r)
            .unwrap()
    });
    conditions(rng, &mut m);
    m
}

fn grouped<R: Rng>(rng: &mut R, phase: bool, group_id: String) -> Vec<Measurement> {
    let (kind, u) = scalar_kind(rng, phase);
    let mut template = Measurement::new(kind, QualifiedValue::exact(1.0), u);
    conditions(rng, &mut template);
    template.group_id = Some(group_id);
    let lo = rng.gen_range(1..500);
    let hi = lo + rng.gen_range(1..500);
    let mut members = vec![
        (MeasurementStatistic::Lower, lo as f64),
        (MeasurementStatistic::Upper, hi as f64),
    ];
    if rng.gen_bool(0.3) {
        members.push((MeasurementStatistic::Mean, (lo + hi) as f64 / 2.0));
    }
    members
        .into_iter()
        .map(|(s, v)| Measurement {
            statistic: Some(s),
            value: QualifiedValue::exact(v),
            ..template.clone()
        })
        .collect()
}

fn lattice<R: Rng>(rng: &mut R) -> LatticeParam {
    let family = *LatticeFamily::ALL.choose(rng).unwrap();
    let a = dec(rng, 2, 6);
    let b = family.needs_b().then(|| dec(rng, 2, 6));
    let c = family.needs_c().then(|| dec(rng, 2, 9));
    let mut l = LatticeParam::new(
        Lattice::new(family, a, b, c).expect("family parameters supplied"),
        maybe(rng, 0.8, |r| *CrysStruct::ALL.choose(r).unwrap()),
    );
    l.phase_fraction = maybe(rng, 0.3, |r| {
        QuantityField::new(dec(r, 1, 99), unit("percent"))
    });
    l.name = maybe(rng, 0.3, |r| text(r, "phase"));
    l.source = maybe(rng, 0.3, |r| text(r, "Fig."));
    l
}

struct GroupIds(usize);

impl GroupIds {
    fn next(&mut self) -> String {
        self.0 += 1;
        format!("group#{}", self.0 - 1)
    }
}

fn observations<R: Rng>(
    rng: &mut R,
    n: usize,
    phase: bool,
    ids: &mut GroupIds,
) -> Vec<Observation> {
    let mut out = Vec::new();
    while out.len() < n {
        match rng.gen_range(0..10) {
            0..=5 => out.push(Observation::Scalar(scalar(rng, phase))),
            6 | 7 => out.extend(
                grouped(rng, phase, ids.next())
                    .into_iter()
                    .map(Observation::Scalar),
            ),
            8 => out.push(Observation::Lattice(lattice(rng))),
            _ => out.push(Observation::Composition(composition(rng))),
        }
    }
    out
}

fn material_entries<R: Rng>(rng: &mut R, n: usize, ids: &mut GroupIds) -> Vec<MaterialEntry> {
    let mut entries: Vec<MaterialEntry> = vec![composition(rng).into()];
    let n_configs = if n >= 4 {
        rng.gen_range(0..=2.min(n / 4))
    } else {
        0
    };
    let per_config = if n_configs > 0 { (n / 4).max(1) } else { 0 };
    let own = n.saturating_sub(1 + n_configs * per_config);
    entries.extend(
        observations(rng, own, false, ids)
            .into_iter()
            .map(MaterialEntry::Observation),
    );
    let mut names: Vec<String> = Vec::new();
    for k in 0..n_configs {
        let name = format!("feature {k}");
        let mut c = Configuration::new(&name);
        c.structure = maybe(rng, 0.6, |r| *CrysStruct::ALL.choose(r).unwrap());
        if !names.is_empty() && rng.gen_bool(0.6) {
            c.tags.insert(ConfigTag::Precipitate);
            c.within = Some(names.choose(rng).unwrap().clone());
        } else {
            let tag = *[
                ConfigTag::Dendrite,
                ConfigTag::Matrix,
                ConfigTag::Interdendritic,
                ConfigTag::Lamellar,
            ]
            .choose(rng)
            .unwrap();
            c.tags.insert(tag);
        }
        if rng.gen_bool(0.3) {
            c.tags.insert(ConfigTag::Intragranular);
        }
        c.measurements = observations(rng, per_config, true, ids);
        names.push(name);
        entries.push(c.into());
    }
    entries
}

fn event<R: Rng>(rng: &mut R, kind: ProcessKind) -> ProcessEvent {
    let mut ev = ProcessEvent::new(kind);
    ev.description = maybe(rng, 0.3, |r| text(r, "step"));
    ev.source = maybe(rng, 0.3, |r| text(r, "Sec."));
    ev
}

const PLAIN_KINDS: [ProcessKind; 10] = [
    ProcessKind::Homogenization,
    ProcessKind::WaterQuenching,
    ProcessKind::ColdRolling,
    ProcessKind::HotRolling,
    ProcessKind::Cut,
    ProcessKind::Grinding,
    ProcessKind::Polishing,
    ProcessKind::Etching,
    ProcessKind::SolutionHeatTreatment,
    ProcessKind::AirDrying,
];

fn groups<R: Rng>(rng: &mut R) -> Vec<SynthesisGroup> {
    let casting: Vec<ProcessKind> = ProcessKind::ALL
        .iter()
        .copied()
        .filter(|k| k.is_casting())
        .collect();
    let melting = *[ProcessKind::ArcMelting, ProcessKind::InductionMelting]
        .choose(rng)
        .unwrap();
    let cast = *casting.choose(rng).unwrap();
    let mut creation = vec![event(rng, melting), event(rng, cast)];
    for _ in 0..rng.gen_range(0..3) {
        let k = *PLAIN_KINDS.choose(rng).unwrap();
        creation.push(event(rng, k));
    }
    let mut anneal = event(rng, ProcessKind::Annealing);
    anneal.temperature = Some(QuantityField::new(
        Slot::Var("Temp".into()),
        unit("celsius"),
    ));
    let mut hold = event(rng, ProcessKind::IsothermalHolding);
    hold.temperature = Some(QuantityField::new(Slot::Var("Temp".into()), unit("kelvin")));
    hold.duration = Some(QuantityField::new(Slot::Var("Hours".into()), unit("hour")));
    let mut mix = event(rng, ProcessKind::Mixing);
    mix.inputs = Some(vec![Slot::Var("Feed".into())]);
    let mut finish: Vec<ProcessEvent> = Vec::new();
    for _ in 0..rng.gen_range(1..4) {
        let k = *PLAIN_KINDS.choose(rng).unwrap();
        finish.push(event(rng, k));
    }
    vec![
        SynthesisGroup {
            name: "creation".into(),
            params: vec![],
            events: creation,
        },
        SynthesisGroup {
            name: "anneal".into(),
            params: vec!["Temp".into()],
            events: vec![anneal],
        },
        SynthesisGroup {
            name: "hold".into(),
            params: vec!["Temp".into(), "Hours".into()],
            events: vec![hold],
        },
        SynthesisGroup {
            name: "mix".into(),
            params: vec!["Feed".into()],
            events: vec![mix],
        },
        SynthesisGroup {
            name: "finish".into(),
            params: vec![],
            events: finish,
        },
    ]
}

fn step<R: Rng>(rng: &mut R, group: &SynthesisGroup, raw_names: &[String]) -> ProcessStep {
    let bindings = group
        .params
        .iter()
        .map(|p| {
            let value = match p.as_str() {
                "Feed" => BindingValue::Name(raw_names.choose(rng).unwrap().clone()),
                "Hours" => BindingValue::Number(Decimal::from_f64(rng.gen_range(1..48) as f64)),
                _ => BindingValue::Number(Decimal::from_f64(rng.gen_range(5..120) as f64 * 10.0)),
            };
            Binding {
                var: p.clone(),
                value,
            }
        })
        .collect();
    ProcessStep {
        group: group.name.clone(),
        bindings,
    }
}

/// A valid experiment: every name referenced, templates bound, melts cast,
/// compositions summing to 100, precipitates nested.
pub fn random_experiment<R: Rng>(rng: &mut R) -> Experiment {
    let size = Size {
        materials: rng.gen_range(1..=4),
        measurements: rng.gen_range(1..=10),
    };
    random_experiment_sized(rng, size)
}

pub fn random_experiment_sized<R: Rng>(rng: &mut R, size: Size) -> Experiment {
    let mut e = Experiment::default();
    let raw_names: Vec<String> = (0..rng.gen_range(1..=2))
        .map(|k| format!("raw{k}"))
        .collect();
    for name in &raw_names {
        let mut rm = RawMaterial::new(*RawMaterialKind::ALL.choose(rng).unwrap());
        rm.description = maybe(rng, 0.5, |r| text(r, "purity"));
        e.raw_materials.insert(name.clone(), rm);
    }
    e.synthesis_groups = groups(rng);

    let mut used = vec![false; e.synthesis_groups.len()];
    let mut ids = GroupIds(0);
    let n = size.materials.max(1);
    for k in 0..n {
        let named = k == 0 || rng.gen_bool(0.7);
        let mut steps = Vec::new();
        let inputs = if k == 0 || rng.gen_bool(0.5) {
            steps.push(step(rng, &e.synthesis_groups[0], &raw_names));
            used[0] = true;
            if k == 0 {
                raw_names.clone()
            } else {
                vec![raw_names.choose(rng).unwrap().clone()]
            }
        } else {
            // derive from an earlier named material
            let parents: Vec<&String> = e
                .output_materials
                .iter()
                .filter_map(|m| m.name.as_ref())
                .collect();
            vec![(*parents.choose(rng).unwrap()).clone()]
        };
        for _ in 0..rng.gen_range(0..3) {
            let g = rng.gen_range(1..e.synthesis_groups.len());
            steps.push(step(rng, &e.synthesis_groups[g], &raw_names));
            used[g] = true;
        }
        if k == n - 1 {
            for g in (1..e.synthesis_groups.len()).filter(|&g| !used[g]) {
                steps.push(step(rng, &e.synthesis_groups[g], &raw_names));
            }
        }
        if steps.is_empty() {
            let g = rng.gen_range(1..e.synthesis_groups.len());
            steps.push(step(rng, &e.synthesis_groups[g], &raw_names));
        }
        let mut m = Material::new(ProcessChainSpec { inputs, steps }, None);
        m.name = named.then(|| format!("sample {k}"));
        m.measurements = material_entries(rng, size.measurements.max(1), &mut ids);
        e.output_materials.push(m);
    }

    for _ in 0..rng.gen_range(0..3) {
        let kinds: Vec<CanonicalValue> = vec![
            (*AlloyMeasurementKind::ALL.choose(rng).unwrap()).into(),
            (*ProcessKind::ALL.choose(rng).unwrap()).into(),
        ];
        e.descriptions.push(DescriptionGroup {
            kinds,
            method: maybe(rng, 0.5, |r| *MeasurementMethod::ALL.choose(r).unwrap()),
            desc: text(rng, "measured with"),
        });
    }
    if rng.gen_bool(0.3) {
        e.normalizations.normalize(
            ProcessKind::ArcMelting,
            "Vacuum Arc Melting",
            Some("Sec. 2"),
        );
        e.normalizations.normalize(CrysStruct::Fcc, "FCC", None);
    }
    e
}

/// An imperfect copy of `target`, the way an extraction might differ from it:
/// dropped or altered measurements, a missing process step, a missing material.
pub fn perturb<R: Rng>(target: &Experiment, rng: &mut R) -> Experiment {
    let mut e = target.clone();
    for m in &mut e.output_materials {
        m.measurements.retain(|entry| match entry {
            MaterialEntry::Observation(Observation::Composition(_)) => true,
            _ => rng.gen_bool(0.85),
        });
        for entry in &mut m.measurements {
            match entry {
                MaterialEntry::Observation(Observation::Scalar(s)) if rng.gen_bool(0.1) => {
                    s.value.magnitude = Decimal::from_f64(s.value.magnitude.value() * 1.5 + 1.0);
                }
                MaterialEntry::Observation(Observation::Scalar(s)) if rng.gen_bool(0.1) => {
                    s.value.qualifier = ValueQualifier::Approx;
                }
                MaterialEntry::Configuration(c) if rng.gen_bool(0.2) => {
                    c.within = None;
                    c.tags.remove(&ConfigTag::Precipitate);
                }
                _ => {}
            }
        }
        if m.process.steps.len() > 1 && rng.gen_bool(0.2) {
            m.process.steps.pop();
        }
    }
    e
}
