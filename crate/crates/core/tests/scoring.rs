use expbench_core::assignment::hungarian;
use expbench_core::composition::parse_formula;
use expbench_core::datamodel::{Experiment, MaterialEntry};
use expbench_core::interchange::decode;
use expbench_core::scoring::{
    align, material_cost, score_composition_list, score_configurations, score_materials,
    score_measurements, score_overall, score_process, score_property_list, CategoryScore,
    ScoringConfig, ScoringView, Weights,
};
use expbench_core::testgen::{perturb, random_experiment};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixture(name: &str) -> Vec<Experiment> {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    decode(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn doc(json: &str) -> Vec<Experiment> {
    decode(json).unwrap_or_else(|e| panic!("{e}"))
}

fn cfg() -> ScoringConfig {
    ScoringConfig::default()
}

/// Minimum over every injection, enumerated in lexicographic order so the
/// first minimum found is the lexicographically smallest.
fn brute_force(c: &[Vec<f64>]) -> (f64, Vec<(usize, usize)>) {
    let rows = c.len();
    let cols = c[0].len();
    let n = rows.max(cols);
    let mut best = (f64::INFINITY, Vec::new());
    let mut used = vec![false; n];
    let mut perm = Vec::with_capacity(n);
    fn rec(
        c: &[Vec<f64>],
        n: usize,
        used: &mut [bool],
        perm: &mut Vec<usize>,
        best: &mut (f64, Vec<(usize, usize)>),
    ) {
        if perm.len() == n {
            let pairs: Vec<(usize, usize)> = perm
                .iter()
                .enumerate()
                .filter(|&(i, &j)| i < c.len() && j < c[0].len())
                .map(|(i, &j)| (i, j))
                .collect();
            let total: f64 = pairs.iter().map(|&(i, j)| c[i][j]).sum();
            if total < best.0 {
                *best = (total, pairs);
            }
            return;
        }
        for j in 0..n {
            if !used[j] {
                used[j] = true;
                perm.push(j);
                rec(c, n, used, perm, best);
                perm.pop();
                used[j] = false;
            }
        }
    }
    rec(c, n, &mut used, &mut perm, &mut best);
    best
}

#[test]
fn hungarian_equals_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let rows = rng.gen_range(1..=7);
        let cols = rng.gen_range(1..=7);
        let levels = [2u32, 4, 16][rng.gen_range(0..3)];
        let c: Vec<Vec<f64>> = (0..rows)
            .map(|_| {
                (0..cols)
                    .map(|_| rng.gen_range(0..=levels) as f64 / levels as f64)
                    .collect()
            })
            .collect();
        let a = hungarian(&c);
        let (total, pairs) = brute_force(&c);
        assert_eq!(a.total, total, "{c:?}");
        assert_eq!(a.pairs, pairs, "{c:?}");
    }
}

#[allow(clippy::needless_range_loop)]
fn textbook_distance(a: &[u8], b: &[u8]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 0..=a.len() {
        d[i][0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

/// Largest number of equal aligned pairs among minimum-distance alignments,
/// by exhaustive search over alignments.
fn brute_matches(a: &[u8], b: &[u8]) -> (usize, usize) {
    fn go(a: &[u8], b: &[u8]) -> Vec<(usize, usize)> {
        if a.is_empty() || b.is_empty() {
            return vec![(a.len() + b.len(), 0)];
        }
        let mut out = Vec::new();
        for (d, m) in go(&a[1..], &b[1..]) {
            if a[0] == b[0] {
                out.push((d, m + 1));
            } else {
                out.push((d + 1, m));
            }
        }
        out.extend(go(&a[1..], b).into_iter().map(|(d, m)| (d + 1, m)));
        out.extend(go(a, &b[1..]).into_iter().map(|(d, m)| (d + 1, m)));
        out
    }
    let all = go(a, b);
    let d = all.iter().map(|x| x.0).min().unwrap();
    (
        d,
        all.iter().filter(|x| x.0 == d).map(|x| x.1).max().unwrap(),
    )
}

#[test]
fn edit_distance_equals_textbook_dp() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..2000 {
        let a: Vec<u8> = (0..rng.gen_range(0..=20))
            .map(|_| rng.gen_range(0..4))
            .collect();
        let b: Vec<u8> = (0..rng.gen_range(0..=20))
            .map(|_| rng.gen_range(0..4))
            .collect();
        assert_eq!(align(&a, &b).distance, textbook_distance(&a, &b));
    }
    for _ in 0..300 {
        let a: Vec<u8> = (0..rng.gen_range(0..=6))
            .map(|_| rng.gen_range(0..3))
            .collect();
        let b: Vec<u8> = (0..rng.gen_range(0..=6))
            .map(|_| rng.gen_range(0..3))
            .collect();
        let r = align(&a, &b);
        assert_eq!(
            (r.distance, r.matches),
            brute_matches(&a, &b),
            "{a:?} {b:?}"
        );
    }
}

fn assert_perfect(s: &CategoryScore) {
    assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0), "{s:?}");
}

#[test]
fn self_score_is_one_on_random_documents() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..60 {
        let t = vec![random_experiment(&mut rng)];
        let r = score_overall(&t, &t, &cfg()).unwrap();
        for c in r.categories() {
            assert_perfect(c);
        }
        assert_eq!(
            (r.overall.precision, r.overall.recall, r.overall.f1),
            (1.0, 1.0, 1.0)
        );
    }
    let t = fixture("format_example.json");
    assert_eq!(score_overall(&t, &t, &cfg()).unwrap().overall.f1, 1.0);
}

#[test]
fn deleting_a_measurement_costs_one_over_target() {
    let t = fixture("format_example.json");
    let n = ScoringView::new(&t).observations().len();
    let mut e = t.clone();
    e[0].output_materials[1].measurements.remove(1);
    let s = score_measurements(&e, &t, &cfg());
    assert_eq!(s.precision, 1.0);
    assert_eq!(s.recall, (n - 1) as f64 / n as f64);
}

#[test]
fn disjoint_kinds_score_zero() {
    let a = doc(
        r#"[{"raw_materials":{"r":{"kind":"Powder"}},"synthesis_groups":{"g":[{"kind":"Mixing"}]},
        "output_materials":[{"process":"r->g","measurements":[{"_type":"composition","composition":"CoCrFeNi"},
        {"_type":"measurement","kind":"vickers_hardness","value":300,"unit":"HV"}]}]}]"#,
    );
    let b = doc(
        r#"[{"raw_materials":{"r":{"kind":"Powder"}},"synthesis_groups":{"g":[{"kind":"Mixing"}]},
        "output_materials":[{"process":"r->g","measurements":[{"_type":"composition","composition":"NbTaTiZr"},
        {"_type":"measurement","kind":"grain_size","value":300,"unit":"micrometer"}]}]}]"#,
    );
    assert_eq!(score_measurements(&a, &b, &cfg()).f1, 0.0);
}

fn chain_doc(events: &[&str], materials: &[&str]) -> Vec<Experiment> {
    let events: Vec<String> = events
        .iter()
        .map(|k| match *k {
            "Annealing" => {
                r#"{"kind":"Annealing","temperature":{"value":"[Temp]","unit":"celsius"}}"#
                    .to_string()
            }
            k => format!(r#"{{"kind":"{k}"}}"#),
        })
        .collect();
    let has_temp = events.iter().any(|e| e.contains("[Temp]"));
    let group = if has_temp { "route[Temp]" } else { "route" };
    let mats: Vec<String> = materials
        .iter()
        .map(|m| {
            format!(
                r#"{{"process":"{m}","measurements":[{{"_type":"composition","composition":"CoCrFeNi"}}]}}"#
            )
        })
        .collect();
    doc(&format!(
        r#"[{{"raw_materials":{{"r":{{"kind":"Ingot"}}}},"synthesis_groups":{{"{group}":[{}]}},"output_materials":[{}]}}]"#,
        events.join(","),
        mats.join(",")
    ))
}

#[test]
fn missing_quench_step() {
    let t = chain_doc(
        &["ArcMelting", "AsCast", "Annealing", "WaterQuenching"],
        &["r->route[Temp=900]"],
    );
    let e = chain_doc(
        &["ArcMelting", "AsCast", "Annealing"],
        &["r->route[Temp=900]"],
    );
    let m = score_materials(&e, &t, &cfg());
    let p = score_process(&e, &t, &m);
    assert_eq!((p.precision, p.recall), (1.0, 0.75));
}

#[test]
fn same_composition_different_process_parameter() {
    let t = chain_doc(
        &["SparkPlasmaSintering", "Annealing"],
        &["r->route[Temp=900]", "r->route[Temp=1000]"],
    );
    let e = chain_doc(
        &["SparkPlasmaSintering", "Annealing"],
        &["r->route[Temp=900]"],
    );
    let m = score_materials(&e, &t, &cfg());
    assert_eq!((m.score.precision, m.score.recall), (1.0, 0.5));
    let spurious = score_materials(&t, &e, &cfg());
    assert_eq!(spurious.score.precision, 0.5);
}

#[test]
fn material_cost_blend() {
    let a = chain_doc(&["ArcMelting"], &["r->route"]);
    let b = chain_doc(&["Polishing"], &["r->route"]);
    let (va, vb) = (ScoringView::new(&a), ScoringView::new(&b));
    assert_eq!(
        material_cost(&va.materials[0], &va.materials[0], &cfg()),
        0.0
    );
    assert_eq!(
        material_cost(&va.materials[0], &vb.materials[0], &cfg()),
        0.5
    );
}

#[test]
fn dropped_within_link_halves_credit() {
    let t = fixture("format_example.json");
    let mut e = t.clone();
    for entry in &mut e[0].output_materials[0].measurements {
        if let MaterialEntry::Configuration(c) = entry {
            c.within = None;
        }
    }
    let s = score_configurations(&e, &t, &cfg());
    assert_eq!(s.credit, 2.5);
    assert_eq!((s.precision, s.recall), (2.5 / 3.0, 2.5 / 3.0));
}

#[test]
fn swapped_parents_are_not_equivalent() {
    let body = |x_in: &str, y_in: &str| {
        format!(
            r#"[{{"raw_materials":{{"r":{{"kind":"Ingot"}}}},"synthesis_groups":{{"g":[{{"kind":"ArcMelting"}},{{"kind":"AsCast"}}]}},
            "output_materials":[{{"process":"r->g","measurements":[{{"_type":"composition","composition":"CoCrFeNi"}},
            {{"_type":"configuration","name":"A","tags":["Matrix"],"measurements":[{{"_type":"measurement","kind":"grain_size","value":10,"unit":"micrometer"}}]}},
            {{"_type":"configuration","name":"B","tags":["Matrix"],"measurements":[{{"_type":"measurement","kind":"grain_size","value":20,"unit":"micrometer"}}]}},
            {{"_type":"configuration","name":"x","tags":["Precipitate"],"within":"{x_in}","measurements":[{{"_type":"measurement","kind":"grain_size","value":30,"unit":"nanometer"}}]}},
            {{"_type":"configuration","name":"y","tags":["Precipitate"],"within":"{y_in}","measurements":[{{"_type":"measurement","kind":"grain_size","value":40,"unit":"nanometer"}}]}}]}}]}}]"#
        )
    };
    let t = doc(&body("A", "B"));
    let e = doc(&body("B", "A"));
    let s = score_configurations(&e, &t, &cfg());
    assert_eq!(s.credit, 3.0);
    assert_eq!(s.recall, 0.75);
}

#[test]
fn composition_and_property_lists() {
    let c = |f: &str| parse_formula(f).unwrap();
    let t = vec![c("CoCrFeNi"), c("NbTaTiZr"), c("AlCoCrFeNi")];
    assert_eq!(score_composition_list(&t, &t, &cfg()).f1, 1.0);
    assert_eq!(
        score_composition_list(&t[..2], &t, &cfg()).recall,
        2.0 / 3.0
    );
    let p = score_property_list(&[100.0, 200.0, 300.0], &[100.0, 200.0], &cfg());
    assert_eq!(p.precision, 2.0 / 3.0);
}

#[test]
fn single_category_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let t = vec![random_experiment(&mut rng)];
    let e = vec![perturb(&t[0], &mut rng)];
    let mut c = cfg();
    c.weights = Weights::new(1.0, 0.0, 0.0, 0.0).unwrap();
    let r = score_overall(&e, &t, &c).unwrap();
    assert_eq!(r.overall.f1, r.measurements.f1);
    c.weights.measurements = 0.9;
    assert!(score_overall(&e, &t, &c).is_err());
}

fn pair(seed: u64) -> (Vec<Experiment>, Vec<Experiment>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = random_experiment(&mut rng);
    let e = perturb(&t, &mut rng);
    (vec![e], vec![t])
}

fn in_unit(s: &CategoryScore) -> bool {
    [s.precision, s.recall, s.f1]
        .iter()
        .all(|v| (0.0..=1.0).contains(v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scores_are_symmetric(seed in any::<u64>()) {
        let (e, t) = pair(seed);
        let c = cfg();
        let (a, b) = (score_measurements(&e, &t, &c), score_measurements(&t, &e, &c));
        prop_assert_eq!((a.precision, a.recall), (b.recall, b.precision));
        let (a, b) = (score_materials(&e, &t, &c).score, score_materials(&t, &e, &c).score);
        prop_assert_eq!((a.precision, a.recall), (b.recall, b.precision));
        let (a, b) = (score_configurations(&e, &t, &c), score_configurations(&t, &e, &c));
        prop_assert!((a.precision - b.recall).abs() < 1e-12 && (a.recall - b.precision).abs() < 1e-12);
    }

    #[test]
    fn scores_are_bounded_and_linear(seed in any::<u64>(), w in prop::array::uniform4(0u32..100)) {
        let (e, t) = pair(seed);
        let total: u32 = w.iter().sum::<u32>().max(1);
        let mut c = cfg();
        let w = if w.iter().sum::<u32>() == 0 { [1, 0, 0, 0] } else { w };
        c.weights = Weights {
            measurements: w[0] as f64 / total as f64,
            process: w[1] as f64 / total as f64,
            materials: w[2] as f64 / total as f64,
            configurations: w[3] as f64 / total as f64,
        };
        prop_assume!(c.weights.check().is_ok());
        let r = score_overall(&e, &t, &c).unwrap();
        for s in r.categories() {
            prop_assert!(in_unit(s));
        }
        let expected: f64 = r.categories().iter().zip(c.weights.as_array()).map(|(s, w)| w * s.f1).sum();
        prop_assert!((r.overall.f1 - expected).abs() < 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&r.overall.f1));
    }

    #[test]
    fn removing_extracted_items_never_raises_recall(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let (e, t) = pair(seed);
        let before = score_measurements(&e, &t, &cfg());
        let mut fewer = e.clone();
        let mats = &mut fewer[0].output_materials;
        prop_assume!(!mats.is_empty());
        let m = pick.index(mats.len());
        prop_assume!(!mats[m].measurements.is_empty());
        mats[m].measurements.pop();
        let after = score_measurements(&fewer, &t, &cfg());
        prop_assert!(after.credit <= before.credit + 1e-12);
        prop_assert!(after.recall <= before.recall + 1e-12);
    }

    #[test]
    fn list_scores_are_symmetric(xs in prop::collection::vec(0u8..6, 0..8), ys in prop::collection::vec(0u8..6, 0..8)) {
        let x: Vec<f64> = xs.iter().map(|&v| v as f64).collect();
        let y: Vec<f64> = ys.iter().map(|&v| v as f64).collect();
        let (a, b) = (score_property_list(&x, &y, &cfg()), score_property_list(&y, &x, &cfg()));
        prop_assert_eq!((a.precision, a.recall), (b.recall, b.precision));
    }
}
