//! Scoring an extracted document against a target: cost functions, optimal
//! matching, per-category precision/recall/F1, the weighted overall score,
//! list sub-task scorers and run statistics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::assignment::{hungarian, hungarian_refined, Assignment};
use crate::composition::{distance, Composition, SAME_COMPOSITION_THRESHOLD};
use crate::datamodel::{Experiment, Measurement, Observation, QuantityField};
use crate::ontology::ProcessKind;
use crate::quantities::{rel_close, values_match, Decimal, DEFAULT_REL_TOL};
use crate::resolve::{resolve_collect, ResolveMode};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoringError {
    #[error("weights must be non-negative and sum to 1, got {0:?}")]
    WeightSumError([f64; 4]),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("at least two runs are needed for a confidence interval, got {0}")]
    TooFewRuns(usize),
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weights {
    pub measurements: f64,
    pub process: f64,
    pub materials: f64,
    pub configurations: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            measurements: 0.5,
            process: 0.2,
            materials: 0.15,
            configurations: 0.15,
        }
    }
}

/// Sum with error compensation, so that e.g. 0.5 + 0.2 + 0.15 + 0.15 is exactly 1.
fn fsum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() {
            (sum - t) + x
        } else {
            (x - t) + sum
        };
        sum = t;
    }
    sum + comp
}

impl Weights {
    pub fn new(
        measurements: f64,
        process: f64,
        materials: f64,
        configurations: f64,
    ) -> Result<Self, ScoringError> {
        let w = Weights {
            measurements,
            process,
            materials,
            configurations,
        };
        w.check()?;
        Ok(w)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [
            self.measurements,
            self.process,
            self.materials,
            self.configurations,
        ]
    }

    pub fn check(&self) -> Result<(), ScoringError> {
        let a = self.as_array();
        if a.iter().any(|w| !w.is_finite() || *w < 0.0) || (fsum(a) - 1.0).abs() > 1e-9 {
            return Err(ScoringError::WeightSumError(a));
        }
        Ok(())
    }

    /// Weighted sum of per-category values in (measurements, process, materials,
    /// configurations) order.
    pub fn combine(&self, values: [f64; 4]) -> f64 {
        fsum(self.as_array().iter().zip(values).map(|(w, v)| w * v))
    }
}

/// How a corpus score is formed from per-paper reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Weighted overall per paper, then the mean over papers.
    #[default]
    PerPaper,
    /// Mean of each category over papers, then the weighted overall.
    CategoryFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringConfig {
    pub weights: Weights,
    /// Material pairs at or below this cost are true positives.
    pub material_threshold: f64,
    /// Credit factor for matched configurations whose parents are not equivalent.
    pub parent_credit: f64,
    pub value_rel_tol: f64,
    pub uncertainty_rel_tol: f64,
    pub composition_threshold: f64,
    pub property_rel_tol: f64,
    pub aggregation: Aggregation,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            weights: Weights::default(),
            material_threshold: 0.5,
            parent_credit: 0.5,
            value_rel_tol: DEFAULT_REL_TOL,
            uncertainty_rel_tol: DEFAULT_REL_TOL,
            composition_threshold: SAME_COMPOSITION_THRESHOLD,
            property_rel_tol: 1e-9,
            aggregation: Aggregation::PerPaper,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Matched credit: true positives, or summed fractional credit.
    pub credit: f64,
    pub extracted: usize,
    pub target: usize,
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

impl CategoryScore {
    pub fn from_credit(credit: f64, extracted: usize, target: usize) -> Self {
        if extracted == 0 && target == 0 {
            return CategoryScore {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0,
                credit,
                extracted,
                target,
            };
        }
        let ratio = |n: usize| {
            if n > 0 {
                (credit / n as f64).clamp(0.0, 1.0)
            } else {
                0.0
            }
        };
        let (precision, recall) = (ratio(extracted), ratio(target));
        CategoryScore {
            precision,
            recall,
            f1: f1(precision, recall),
            credit,
            extracted,
            target,
        }
    }

    /// Unweighted mean of several scores, field by field; F1 is averaged too,
    /// not recomputed.
    pub fn mean(scores: &[CategoryScore]) -> CategoryScore {
        let n = scores.len().max(1) as f64;
        let avg = |f: fn(&CategoryScore) -> f64| fsum(scores.iter().map(f)) / n;
        CategoryScore {
            precision: avg(|s| s.precision),
            recall: avg(|s| s.recall),
            f1: avg(|s| s.f1),
            credit: avg(|s| s.credit),
            extracted: scores.iter().map(|s| s.extracted).sum(),
            target: scores.iter().map(|s| s.target).sum(),
        }
    }
}

fn field_eq(
    a: &Option<QuantityField<Decimal>>,
    b: &Option<QuantityField<Decimal>>,
    tol: f64,
) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => match (x.quantity(), y.quantity()) {
            (Some(qx), Some(qy)) => qx.approx_eq(&qy, tol),
            _ => x == y,
        },
        _ => false,
    }
}

fn scalar_cost(a: &Measurement, b: &Measurement, cfg: &ScoringConfig) -> f64 {
    if a.kind != b.kind || !values_match((&a.value, a.unit), (&b.value, b.unit), cfg.value_rel_tol)
    {
        return 1.0;
    }
    let qualifier = a.value.qualifier != b.value.qualifier;
    let temperature = !field_eq(&a.temperature, &b.temperature, cfg.value_rel_tol);
    let pressure = !field_eq(&a.pressure, &b.pressure, cfg.value_rel_tol);
    let uncertainty = match (&a.uncertainty, &b.uncertainty) {
        (None, None) => false,
        (Some(x), Some(y)) => !rel_close(
            a.unit.scale_to_canonical(x.value()),
            b.unit.scale_to_canonical(y.value()),
            cfg.uncertainty_rel_tol,
        ),
        _ => true,
    };
    let w = |flag: bool, weight: f64| if flag { weight } else { 0.0 };
    (w(qualifier, 1.0) + w(temperature, 2.0) + w(pressure, 2.0) + w(uncertainty, 1.0)) / 6.0
}

/// Cost of pairing two observations; 1 means they cannot match.
pub fn measurement_cost(a: &Observation, b: &Observation, cfg: &ScoringConfig) -> f64 {
    match (a, b) {
        (Observation::Scalar(x), Observation::Scalar(y)) => scalar_cost(x, y, cfg),
        (Observation::Composition(x), Observation::Composition(y)) => {
            if distance(&x.composition, &y.composition) <= cfg.composition_threshold {
                0.0
            } else {
                1.0
            }
        }
        (Observation::Lattice(x), Observation::Lattice(y)) => {
            let same = x.lattice.family() == y.lattice.family()
                && x.structure == y.structure
                && x.lattice
                    .lengths()
                    .iter()
                    .zip(y.lattice.lengths())
                    .all(|(p, q)| rel_close(*p, q, cfg.value_rel_tol));
            if same {
                0.0
            } else {
                1.0
            }
        }
        _ => 1.0,
    }
}

fn cost_matrix<A, B>(rows: &[A], cols: &[B], f: impl Fn(&A, &B) -> f64) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|a| cols.iter().map(|b| f(a, b)).collect())
        .collect()
}

/// Fractional-credit matching of two observation pools.
pub fn score_observation_pools(
    e: &[&Observation],
    t: &[&Observation],
    cfg: &ScoringConfig,
) -> CategoryScore {
    let c = cost_matrix(e, t, |a, b| measurement_cost(a, b, cfg));
    let a = hungarian(&c);
    let credit = fsum(a.pairs.iter().map(|&(i, j)| 1.0 - c[i][j]));
    CategoryScore::from_credit(credit, e.len(), t.len())
}

/// A document prepared for scoring: every material across its experiments,
/// with resolved process chains, plus the pooled configurations.
#[derive(Debug, Clone)]
pub struct ScoringView<'a> {
    pub materials: Vec<MaterialView<'a>>,
    pub configurations: Vec<ConfigView<'a>>,
}

#[derive(Debug, Clone)]
pub struct MaterialView<'a> {
    pub id: String,
    pub chain: Vec<ProcessKind>,
    pub observations: Vec<&'a Observation>,
}

#[derive(Debug, Clone)]
pub struct ConfigView<'a> {
    pub material: usize,
    pub name: &'a str,
    /// Index of the enclosing configuration in the same pool.
    pub parent: Option<usize>,
    pub observations: Vec<&'a Observation>,
}

impl<'a> ScoringView<'a> {
    pub fn new(doc: &'a [Experiment]) -> Self {
        let mut materials = Vec::new();
        let mut configurations = Vec::new();
        for (k, e) in doc.iter().enumerate() {
            let (resolution, _) = resolve_collect(e, ResolveMode::Graph);
            for (i, m) in e.output_materials.iter().enumerate() {
                let chain = resolution
                    .materials
                    .get(i)
                    .map(|r| r.linearize())
                    .unwrap_or_default();
                let id = if doc.len() > 1 {
                    format!("[{k}]{}", m.id(i))
                } else {
                    m.id(i)
                };
                let material = materials.len();
                materials.push(MaterialView {
                    id,
                    chain,
                    observations: m.observations().collect(),
                });
                let first = configurations.len();
                let configs: Vec<_> = m.configurations().collect();
                for c in &configs {
                    let parent = c
                        .within
                        .as_deref()
                        .and_then(|w| configs.iter().position(|p| p.name == w).map(|p| first + p));
                    configurations.push(ConfigView {
                        material,
                        name: &c.name,
                        parent,
                        observations: c.measurements.iter().collect(),
                    });
                }
            }
        }
        ScoringView {
            materials,
            configurations,
        }
    }

    pub fn observations(&self) -> Vec<&'a Observation> {
        self.materials
            .iter()
            .flat_map(|m| m.observations.iter().copied())
            .collect()
    }
}

/// Minimum edit-distance alignment of two token sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alignment {
    pub distance: usize,
    /// Equal tokens aligned to each other; the largest such count among
    /// minimum-distance alignments.
    pub matches: usize,
}

pub fn align<T: PartialEq>(a: &[T], b: &[T]) -> Alignment {
    // (distance, -matches) minimized lexicographically
    let mut prev: Vec<(usize, usize)> = (0..=b.len()).map(|j| (j, 0)).collect();
    for i in 1..=a.len() {
        let mut cur = vec![(i, 0); b.len() + 1];
        for j in 1..=b.len() {
            let better = |x: (usize, usize), y: (usize, usize)| {
                if x.0 < y.0 || (x.0 == y.0 && x.1 > y.1) {
                    x
                } else {
                    y
                }
            };
            let diag = if a[i - 1] == b[j - 1] {
                (prev[j - 1].0, prev[j - 1].1 + 1)
            } else {
                (prev[j - 1].0 + 1, prev[j - 1].1)
            };
            let del = (prev[j].0 + 1, prev[j].1);
            let ins = (cur[j - 1].0 + 1, cur[j - 1].1);
            cur[j] = better(better(diag, del), ins);
        }
        prev = cur;
    }
    let (distance, matches) = prev[b.len()];
    Alignment { distance, matches }
}

pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    align(a, b).distance
}

/// Edit distance between two process chains, normalized by the longer one.
pub fn process_cost(a: &[ProcessKind], b: &[ProcessKind]) -> f64 {
    let n = a.len().max(b.len());
    if n == 0 {
        0.0
    } else {
        edit_distance(a, b) as f64 / n as f64
    }
}

pub fn material_cost(a: &MaterialView, b: &MaterialView, cfg: &ScoringConfig) -> f64 {
    let pools = score_observation_pools(&a.observations, &b.observations, cfg);
    0.5 * (1.0 - pools.f1) + 0.5 * process_cost(&a.chain, &b.chain)
}

/// One row of the material assignment trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialMatch {
    pub extracted: String,
    pub target: String,
    pub cost: f64,
    pub true_positive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialScore {
    pub score: CategoryScore,
    pub assignment: Assignment,
    pub costs: Vec<Vec<f64>>,
}

pub fn score_material_views(
    e: &ScoringView,
    t: &ScoringView,
    cfg: &ScoringConfig,
) -> MaterialScore {
    let costs = cost_matrix(&e.materials, &t.materials, |a, b| material_cost(a, b, cfg));
    let theta = cfg.material_threshold;
    // among cheapest assignments, prefer the most true positives
    let misses: Vec<Vec<f64>> = costs
        .iter()
        .map(|row| {
            row.iter()
                .map(|&c| if c <= theta { 0.0 } else { 1.0 })
                .collect()
        })
        .collect();
    let assignment = hungarian_refined(&costs, &misses);
    let tp = assignment
        .pairs
        .iter()
        .filter(|&&(i, j)| costs[i][j] <= theta)
        .count();
    let score = CategoryScore::from_credit(tp as f64, e.materials.len(), t.materials.len());
    MaterialScore {
        score,
        assignment,
        costs,
    }
}

pub fn score_process_views(e: &ScoringView, t: &ScoringView, m: &MaterialScore) -> CategoryScore {
    let tp: usize = m
        .assignment
        .feasible(&m.costs)
        .map(|(i, j)| align(&e.materials[i].chain, &t.materials[j].chain).matches)
        .sum();
    let ne = e.materials.iter().map(|x| x.chain.len()).sum();
    let nt = t.materials.iter().map(|x| x.chain.len()).sum();
    CategoryScore::from_credit(tp as f64, ne, nt)
}

pub fn score_configuration_views(
    e: &ScoringView,
    t: &ScoringView,
    cfg: &ScoringConfig,
) -> CategoryScore {
    let c = cost_matrix(&e.configurations, &t.configurations, |a, b| {
        1.0 - score_observation_pools(&a.observations, &b.observations, cfg).f1
    });
    let a = hungarian(&c);
    let credit = fsum(a.pairs.iter().map(|&(i, j)| {
        let equivalent = match (e.configurations[i].parent, t.configurations[j].parent) {
            (None, None) => true,
            (Some(p), Some(q)) => a.col_of(p) == Some(q),
            _ => false,
        };
        (1.0 - c[i][j]) * if equivalent { 1.0 } else { cfg.parent_credit }
    }));
    CategoryScore::from_credit(credit, e.configurations.len(), t.configurations.len())
}

pub fn score_measurements(
    e: &[Experiment],
    t: &[Experiment],
    cfg: &ScoringConfig,
) -> CategoryScore {
    let (ve, vt) = (ScoringView::new(e), ScoringView::new(t));
    score_observation_pools(&ve.observations(), &vt.observations(), cfg)
}

pub fn score_materials(e: &[Experiment], t: &[Experiment], cfg: &ScoringConfig) -> MaterialScore {
    score_material_views(&ScoringView::new(e), &ScoringView::new(t), cfg)
}

pub fn score_process(e: &[Experiment], t: &[Experiment], m: &MaterialScore) -> CategoryScore {
    score_process_views(&ScoringView::new(e), &ScoringView::new(t), m)
}

pub fn score_configurations(
    e: &[Experiment],
    t: &[Experiment],
    cfg: &ScoringConfig,
) -> CategoryScore {
    score_configuration_views(&ScoringView::new(e), &ScoringView::new(t), cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overall {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub measurements: CategoryScore,
    pub process: CategoryScore,
    pub materials: CategoryScore,
    pub configurations: CategoryScore,
    pub overall: Overall,
    pub weights: Weights,
    pub material_assignment: Vec<MaterialMatch>,
}

impl ScoreReport {
    pub fn categories(&self) -> [&CategoryScore; 4] {
        [
            &self.measurements,
            &self.process,
            &self.materials,
            &self.configurations,
        ]
    }
}

fn overall_of(w: &Weights, cats: [&CategoryScore; 4]) -> Overall {
    Overall {
        precision: w.combine(cats.map(|c| c.precision)),
        recall: w.combine(cats.map(|c| c.recall)),
        f1: w.combine(cats.map(|c| c.f1)),
    }
}

pub fn score_overall(
    e: &[Experiment],
    t: &[Experiment],
    cfg: &ScoringConfig,
) -> Result<ScoreReport, ScoringError> {
    cfg.weights.check()?;
    let (ve, vt) = (ScoringView::new(e), ScoringView::new(t));
    let measurements = score_observation_pools(&ve.observations(), &vt.observations(), cfg);
    let m = score_material_views(&ve, &vt, cfg);
    let process = score_process_views(&ve, &vt, &m);
    let configurations = score_configuration_views(&ve, &vt, cfg);
    let material_assignment = m
        .assignment
        .pairs
        .iter()
        .map(|&(i, j)| MaterialMatch {
            extracted: ve.materials[i].id.clone(),
            target: vt.materials[j].id.clone(),
            cost: m.costs[i][j],
            true_positive: m.costs[i][j] <= cfg.material_threshold,
        })
        .collect();
    let materials = m.score;
    let overall = overall_of(
        &cfg.weights,
        [&measurements, &process, &materials, &configurations],
    );
    Ok(ScoreReport {
        measurements,
        process,
        materials,
        configurations,
        overall,
        weights: cfg.weights,
        material_assignment,
    })
}

/// Corpus-level score from per-paper reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusScore {
    pub papers: usize,
    pub measurements: CategoryScore,
    pub process: CategoryScore,
    pub materials: CategoryScore,
    pub configurations: CategoryScore,
    pub overall: Overall,
}

pub fn aggregate(reports: &[ScoreReport], weights: &Weights, how: Aggregation) -> CorpusScore {
    let cat = |f: fn(&ScoreReport) -> CategoryScore| {
        CategoryScore::mean(&reports.iter().map(f).collect::<Vec<_>>())
    };
    let measurements = cat(|r| r.measurements);
    let process = cat(|r| r.process);
    let materials = cat(|r| r.materials);
    let configurations = cat(|r| r.configurations);
    let overall = match how {
        Aggregation::PerPaper => {
            let n = reports.len().max(1) as f64;
            Overall {
                precision: fsum(reports.iter().map(|r| r.overall.precision)) / n,
                recall: fsum(reports.iter().map(|r| r.overall.recall)) / n,
                f1: fsum(reports.iter().map(|r| r.overall.f1)) / n,
            }
        }
        Aggregation::CategoryFirst => overall_of(
            weights,
            [&measurements, &process, &materials, &configurations],
        ),
    };
    CorpusScore {
        papers: reports.len(),
        measurements,
        process,
        materials,
        configurations,
        overall,
    }
}

/// Binary matching: each pair either matches or not; the most matches win.
fn score_binary(ne: usize, nt: usize, matches: impl Fn(usize, usize) -> bool) -> CategoryScore {
    let c: Vec<Vec<f64>> = (0..ne)
        .map(|i| {
            (0..nt)
                .map(|j| if matches(i, j) { 0.0 } else { 1.0 })
                .collect()
        })
        .collect();
    let a = hungarian(&c);
    let tp = a.pairs.iter().filter(|&&(i, j)| c[i][j] == 0.0).count();
    CategoryScore::from_credit(tp as f64, ne, nt)
}

pub fn score_composition_list(
    e: &[Composition],
    t: &[Composition],
    cfg: &ScoringConfig,
) -> CategoryScore {
    score_binary(e.len(), t.len(), |i, j| {
        distance(&e[i], &t[j]) <= cfg.composition_threshold
    })
}

pub fn score_property_list(e: &[f64], t: &[f64], cfg: &ScoringConfig) -> CategoryScore {
    score_binary(e.len(), t.len(), |i, j| {
        rel_close(e[i], t[j], cfg.property_rel_tol)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunStatistics {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
}

/// Two-sided 97.5% Student quantile, rounded to three decimals as in printed tables.
pub fn t_quantile(df: usize) -> f64 {
    let t = StudentsT::new(0.0, 1.0, df as f64)
        .expect("df >= 1")
        .inverse_cdf(0.975);
    (t * 1000.0).round() / 1000.0
}

/// Mean and 95% confidence half-width over repeated runs.
pub fn run_ci(scores: &[f64]) -> Result<RunStatistics, StatsError> {
    let n = scores.len();
    if n < 2 {
        return Err(StatsError::TooFewRuns(n));
    }
    let mean = fsum(scores.iter().copied()) / n as f64;
    let var = fsum(scores.iter().map(|x| (x - mean).powi(2))) / (n - 1) as f64;
    let half_width = t_quantile(n - 1) * var.sqrt() / (n as f64).sqrt();
    Ok(RunStatistics {
        mean,
        half_width,
        n,
    })
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::DegenerateInput("lengths differ"));
    }
    if x.len() < 2 {
        return Err(StatsError::DegenerateInput("fewer than two points"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::DegenerateInput("non-finite value"));
    }
    let n = x.len() as f64;
    let (mx, my) = (fsum(x.iter().copied()) / n, fsum(y.iter().copied()) / n);
    let sxx = fsum(x.iter().map(|a| (a - mx) * (a - mx)));
    let syy = fsum(y.iter().map(|b| (b - my) * (b - my)));
    let sxy = fsum(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)));
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::DegenerateInput("zero variance"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{CompMeasurement, Lattice, LatticeParam};
    use crate::ontology::ProcessKind::*;
    use crate::quantities::{QualifiedValue, Unit, ValueQualifier};

    fn hv(v: f64) -> Observation {
        Observation::Scalar(Measurement::new(
            "vickers_hardness"
                .parse::<crate::datamodel::MeasurementKind>()
                .unwrap(),
            QualifiedValue::exact(Decimal::from_f64(v)),
            Unit::lookup("HV").unwrap(),
        ))
    }

    fn cfg() -> ScoringConfig {
        ScoringConfig::default()
    }

    #[test]
    fn measurement_cost_rules() {
        assert_eq!(measurement_cost(&hv(321.0), &hv(321.0), &cfg()), 0.0);
        assert_eq!(measurement_cost(&hv(321.0), &hv(350.0), &cfg()), 1.0);
        let Observation::Scalar(mut m) = hv(50.0) else {
            unreachable!()
        };
        m.value.qualifier = ValueQualifier::Approx;
        assert_eq!(
            measurement_cost(&Observation::Scalar(m.clone()), &hv(50.0), &cfg()),
            1.0 / 6.0
        );
        m.uncertainty = Some(Decimal::from_f64(2.0));
        assert_eq!(
            measurement_cost(&Observation::Scalar(m), &hv(50.0), &cfg()),
            2.0 / 6.0
        );
        let comp = Observation::Composition(CompMeasurement::formula("CoCrFeNi").unwrap());
        assert_eq!(measurement_cost(&comp, &hv(50.0), &cfg()), 1.0);
        assert_eq!(measurement_cost(&comp, &comp, &cfg()), 0.0);
        let lat = Observation::Lattice(LatticeParam::new(
            Lattice::cubic(Decimal::from_f64(3.6)),
            None,
        ));
        assert_eq!(measurement_cost(&lat, &lat, &cfg()), 0.0);
        let other = Observation::Lattice(LatticeParam::new(
            Lattice::cubic(Decimal::from_f64(3.7)),
            None,
        ));
        assert_eq!(measurement_cost(&lat, &other, &cfg()), 1.0);
    }

    #[test]
    fn temperature_and_pressure_weights() {
        let Observation::Scalar(mut m) = hv(50.0) else {
            unreachable!()
        };
        m.temperature = Some(QuantityField::new(
            Decimal::from_f64(25.0),
            Unit::lookup("degC").unwrap(),
        ));
        let base = hv(50.0);
        assert_eq!(
            measurement_cost(&Observation::Scalar(m.clone()), &base, &cfg()),
            2.0 / 6.0
        );
        m.pressure = Some(QuantityField::new(
            Decimal::from_f64(1.0),
            Unit::lookup("GPa").unwrap(),
        ));
        assert_eq!(
            measurement_cost(&Observation::Scalar(m.clone()), &base, &cfg()),
            4.0 / 6.0
        );
        // 298.15 K equals 25 degC after conversion
        let Observation::Scalar(mut k) = base else {
            unreachable!()
        };
        k.temperature = Some(QuantityField::new(
            Decimal::from_f64(298.15),
            Unit::lookup("K").unwrap(),
        ));
        k.pressure = m.pressure.clone();
        assert_eq!(
            measurement_cost(&Observation::Scalar(m), &Observation::Scalar(k), &cfg()),
            0.0
        );
    }

    #[test]
    fn alignment_counts() {
        assert_eq!(
            align(&[ArcMelting, AsCast, Annealing], &[ArcMelting, AsCast]),
            Alignment {
                distance: 1,
                matches: 2
            }
        );
        assert_eq!(
            process_cost(&[ArcMelting, AsCast, Annealing], &[ArcMelting, AsCast]),
            1.0 / 3.0
        );
        assert_eq!(process_cost(&[], &[ArcMelting]), 1.0);
        assert_eq!(process_cost(&[], &[]), 0.0);
        assert_eq!(edit_distance(b"kitten", b"sitting"), 3);
    }

    #[test]
    fn empty_lists() {
        let s = score_property_list(&[], &[], &cfg());
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
        let s = score_property_list(&[], &[1.0], &cfg());
        assert_eq!(s.f1, 0.0);
        let s = score_property_list(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0], &cfg());
        assert_eq!((s.precision, s.recall), (0.75, 1.0));
    }

    #[test]
    fn duplicate_targets_matched_once() {
        let a = crate::composition::parse_formula("CoCrFeNi").unwrap();
        let b = crate::composition::parse_formula("NbTaTiZr").unwrap();
        let s =
            score_composition_list(std::slice::from_ref(&a), &[a.clone(), a.clone(), b], &cfg());
        assert_eq!(s.credit, 1.0);
        assert_eq!(s.recall, 1.0 / 3.0);
    }

    #[test]
    fn weights_checked() {
        assert!(Weights::new(0.5, 0.5, 0.5, 0.0).is_err());
        assert!(Weights::new(-0.5, 1.0, 0.5, 0.0).is_err());
        assert_eq!(Weights::default().combine([1.0; 4]), 1.0);
        assert!((Weights::default().combine([0.71, 0.83, 0.96, 0.60]) - 0.755).abs() < 1e-12);
    }

    #[test]
    fn statistics() {
        assert_eq!(t_quantile(2), 4.303);
        let r = run_ci(&[0.74, 0.77, 0.80]).unwrap();
        assert!((r.mean - 0.77).abs() < 1e-12);
        let expected = 4.303 * 0.03 / 3f64.sqrt();
        assert!(((r.half_width - expected) / expected).abs() < 1e-6);
        assert_eq!(run_ci(&[0.77, 0.77, 0.77]).unwrap().half_width, 0.0);
        assert_eq!(run_ci(&[0.5]), Err(StatsError::TooFewRuns(1)));
        let x = [1.0, 2.0, 4.0, 7.0];
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(pearson(&x, &x).unwrap(), 1.0);
        assert_eq!(pearson(&x, &y).unwrap(), -1.0);
        assert!(pearson(&[1.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(pearson(&[1.0], &[1.0]).is_err());
    }
}
