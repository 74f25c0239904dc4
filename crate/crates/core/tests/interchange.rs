use expbench_core::datamodel::{MaterialEntry, MeasurementKind, Observation};
use expbench_core::interchange::{decode, encode, DecodeError};
use expbench_core::ontology::AlloyMeasurementKind;
use expbench_core::testgen::random_experiment;
use expbench_core::validation::validate;
use rand::SeedableRng;

fn fixture(name: &str) -> String {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path).unwrap()
}

fn schema_errors(text: &str) -> Vec<String> {
    match decode(text) {
        Err(DecodeError::Schema(errors)) => errors.iter().map(ToString::to_string).collect(),
        other => panic!("expected schema errors, got {other:?}"),
    }
}

fn wrap_measurement(m: &str) -> String {
    format!(
        r#"[{{"raw_materials": {{}}, "synthesis_groups": {{}},
            "output_materials": [{{"process": "x", "measurements": [{m}]}}]}}]"#
    )
}

#[test]
fn format_example_decodes() {
    let experiments = decode(&fixture("format_example.json")).unwrap();
    assert_eq!(experiments.len(), 1);
    let e = &experiments[0];
    assert_eq!(e.output_materials.len(), 2);
    let hardness: Vec<(f64, f64)> = e
        .output_materials
        .iter()
        .flat_map(|m| m.observations())
        .filter_map(|o| match o {
            Observation::Scalar(s)
                if s.kind == MeasurementKind::Alloy(AlloyMeasurementKind::VickersHardness) =>
            {
                Some((
                    s.value.magnitude.value(),
                    s.uncertainty.as_ref().unwrap().value(),
                ))
            }
            _ => None,
        })
        .collect();
    assert_eq!(hardness, vec![(321.0, 7.0), (350.0, 7.0)]);
    assert_eq!(e.output_materials[0].configurations().count(), 3);
    assert_eq!(validate(e), vec![]);
}

#[test]
fn fenced_input_is_accepted() {
    let fenced = format!("```json\n{}\n```\n", fixture("format_example.json"));
    assert_eq!(
        decode(&fenced).unwrap(),
        decode(&fixture("format_example.json")).unwrap()
    );
}

#[test]
fn measurement_without_unit_is_rejected() {
    let doc =
        wrap_measurement(r#"{"_type": "measurement", "kind": "grain_size", "value": "~0.71"}"#);
    let errors = schema_errors(&doc);
    assert_eq!(
        errors,
        vec!["[0].output_materials[0].measurements[0]: expected field `unit`, found nothing"]
    );
}

#[test]
fn unknown_tags_and_fields_are_errors() {
    let doc = wrap_measurement(r#"{"_type": "measurment", "kind": "density"}"#);
    assert!(schema_errors(&doc)[0].contains("measurements[0]._type"));

    let doc = wrap_measurement(
        r#"{"_type": "composition", "composition": {"_helper": "atomic", "x": 1}}"#,
    );
    let errors = schema_errors(&doc);
    assert!(
        errors.iter().any(|e| e.contains("composition._helper")),
        "{errors:?}"
    );

    let doc =
        wrap_measurement(r#"{"_type": "composition", "composition": "CoCrFeNi", "note": "x"}"#);
    assert!(schema_errors(&doc)[0].contains("measurements[0].note"));
}

#[test]
fn all_errors_are_collected() {
    let doc = r#"[{"raw_materials": {"a": {"kind": "Bar"}}, "synthesis_groups": {"g": [{"kind": "Baking"}]},
        "output_materials": [{"process": "a->", "measurements": []}]}]"#;
    let errors = schema_errors(doc);
    assert_eq!(errors.len(), 3, "{errors:?}");
}

#[test]
fn weight_additions_helper_routes_to_composition_algebra() {
    let doc = wrap_measurement(
        r#"{"_type": "composition", "composition": {"_helper": "weight_additions", "base": "NbTaTiZr",
            "additions_weights": {"Mo": 50, "W": 50}, "fraction": 0.05}}"#,
    );
    let e = &decode(&doc).unwrap()[0];
    let MaterialEntry::Observation(Observation::Composition(c)) =
        &e.output_materials[0].measurements[0]
    else {
        panic!("composition expected");
    };
    let base = expbench_core::composition::parse_formula("NbTaTiZr").unwrap();
    let additions =
        expbench_core::composition::from_weight_dict([("Mo", 50.0), ("W", 50.0)]).unwrap();
    let expected =
        expbench_core::composition::with_weight_additions(&base, &additions, 0.05).unwrap();
    assert_eq!(c.composition, expected);
}

#[test]
fn empty_document_encodes_as_empty_array() {
    assert_eq!(encode(&[]), "[]");
    assert_eq!(decode("[]").unwrap(), vec![]);
}

#[test]
fn encode_preserves_numeric_text() {
    let doc = wrap_measurement(
        r#"{"_type": "measurement", "kind": "density", "value": 7.10, "unit": "gram_per_cm3"}"#,
    );
    let text = encode(&decode(&doc).unwrap());
    assert!(text.contains("\"value\": 7.10"), "{text}");
}

#[test]
fn format_example_round_trips() {
    let once = decode(&fixture("format_example.json")).unwrap();
    let text = encode(&once);
    assert_eq!(decode(&text).unwrap(), once);
    assert_eq!(encode(&decode(&text).unwrap()), text);
}

#[test]
fn randomized_round_trip_100_seeds() {
    for seed in 0..100u64 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let e = random_experiment(&mut rng);
        assert_eq!(
            validate(&e),
            vec![],
            "seed {seed} generated an invalid document"
        );
        let text = encode(std::slice::from_ref(&e));
        let back = decode(&text).unwrap_or_else(|err| panic!("seed {seed}: {err}\n{text}"));
        assert_eq!(back, vec![e], "seed {seed}");
        assert_eq!(encode(&back), text, "seed {seed}");
    }
}

#[test]
fn list_documents() {
    use expbench_core::interchange::{decode_composition_list, decode_property_list};
    let comps = decode_composition_list(r#"["CoCrFeNi", {"Al": 50, "Ni": 50}]"#).unwrap();
    assert_eq!(comps.len(), 2);
    assert_eq!(comps[1].fraction_of("Al"), 0.5);
    let err = decode_composition_list(r#"["CoCrFeNi", 5]"#).unwrap_err();
    assert_eq!(err.issues()[0].path.to_string(), "[1]");
    assert_eq!(
        decode_property_list("[450, 512.5]").unwrap(),
        vec![450.0, 512.5]
    );
    assert!(decode_property_list(r#"{"a": 1}"#).is_err());
}
