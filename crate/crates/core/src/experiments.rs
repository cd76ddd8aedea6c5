//! Headless experiments driven by simulated users: the fixed mental model
//! proof of concept and the weight-convergence measurement.

use std::fmt::Write as _;

use chrono::{DateTime, Duration, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dataset::{AttributeKind, Dataset, Instance};
use crate::error::{Error, Result};
use crate::model::{compute_weights, update_model, LabelSource, ModelState, SimilarityLabel};

/// A deterministic, symmetric simulated user.
pub trait PairOracle {
    /// Score for a pair, or `None` when an attribute it relies on is
    /// missing on either side.
    fn score(&self, dataset: &Dataset, a: &Instance, b: &Instance) -> Option<f64>;

    /// Feature attributes the oracle looks at.
    fn attributes(&self) -> Vec<&str>;

    /// Finer grouping of pairs sharing a score, used to balance samples
    /// across the different reasons for the same score.
    fn stratum(&self, _dataset: &Dataset, _a: &Instance, _b: &Instance) -> u8 {
        0
    }
}

/// Scores 1.0 when both a numerical attribute (within `tolerance`, in raw
/// units) and a categorical attribute agree, 0.5 when exactly one agrees
/// and 0.0 otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct MentalModelOracle {
    pub numerical: String,
    pub tolerance: f64,
    pub categorical: String,
}

impl Default for MentalModelOracle {
    /// Age within one year and same team.
    fn default() -> Self {
        MentalModelOracle {
            numerical: "age".into(),
            tolerance: 1.0,
            categorical: "team".into(),
        }
    }
}

impl MentalModelOracle {
    /// Whether the numerical and the categorical attribute agree.
    fn agreement(&self, dataset: &Dataset, a: &Instance, b: &Instance) -> Option<(bool, bool)> {
        let schema = dataset.schema();
        let num = schema.feature_position(&self.numerical)?;
        let cat = schema.feature_position(&self.categorical)?;
        let (xa, xb) = (dataset.raw_numeric(a, num)?, dataset.raw_numeric(b, num)?);
        let (ca, cb) = (a.values[cat].as_token()?, b.values[cat].as_token()?);
        // raw values are reconstructed from normalized ones, so allow for rounding
        Some(((xa - xb).abs() <= self.tolerance + 1e-9, ca == cb))
    }
}

impl PairOracle for MentalModelOracle {
    fn score(&self, dataset: &Dataset, a: &Instance, b: &Instance) -> Option<f64> {
        Some(match self.agreement(dataset, a, b)? {
            (true, true) => 1.0,
            (true, false) | (false, true) => 0.5,
            (false, false) => 0.0,
        })
    }

    fn attributes(&self) -> Vec<&str> {
        vec![&self.numerical, &self.categorical]
    }

    /// Separates "only the number agrees" from "only the category agrees".
    fn stratum(&self, dataset: &Dataset, a: &Instance, b: &Instance) -> u8 {
        match self.agreement(dataset, a, b) {
            Some((true, false)) => 1,
            Some((false, true)) => 2,
            _ => 0,
        }
    }
}

/// Looks at one normalized numerical attribute only: 1.0 when the values
/// are within `near`, 0.5 within `far` and 0.0 beyond.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleAttributeOracle {
    pub attribute: String,
    pub near: f64,
    pub far: f64,
}

impl SingleAttributeOracle {
    pub fn new(attribute: impl Into<String>) -> Self {
        SingleAttributeOracle {
            attribute: attribute.into(),
            near: 0.1,
            far: 0.3,
        }
    }
}

impl PairOracle for SingleAttributeOracle {
    fn score(&self, dataset: &Dataset, a: &Instance, b: &Instance) -> Option<f64> {
        let p = dataset.schema().feature_position(&self.attribute)?;
        let d = (a.values[p].as_f64()? - b.values[p].as_f64()?).abs();
        Some(if d <= self.near {
            1.0
        } else if d <= self.far {
            0.5
        } else {
            0.0
        })
    }

    fn attributes(&self) -> Vec<&str> {
        vec![&self.attribute]
    }
}

fn label_time(i: usize) -> DateTime<Utc> {
    DateTime::UNIX_EPOCH + Duration::seconds(i as i64)
}

/// Labels a pair with the oracle's score, or `None` when the oracle cannot
/// score it.
pub fn oracle_label(
    a: &Instance,
    b: &Instance,
    oracle: &dyn PairOracle,
    dataset: &Dataset,
) -> Result<Option<SimilarityLabel>> {
    match oracle.score(dataset, a, b) {
        Some(score) => {
            SimilarityLabel::at(&a.id, &b.id, score, LabelSource::Oracle, label_time(0)).map(Some)
        }
        None => Ok(None),
    }
}

/// Halved L1 distance between two weight vectors; 1.0 is a complete shift
/// of mass between disjoint attributes.
pub fn delta_w(prev: &ModelState, next: &ModelState) -> Result<f64> {
    if prev.attributes() != next.attributes() {
        return Err(Error::AttributeSetMismatch);
    }
    let l1: f64 = prev
        .weights()
        .iter()
        .zip(next.weights())
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok((0.5 * l1).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub enum PairSource {
    /// Explicit pairs of instance ids.
    Scripted(Vec<(String, String)>),
    /// Pairs drawn in rotation from the oracle's score levels, so each
    /// level is represented as evenly as `n_labels` allows.
    RandomBalanced { seed: u64 },
}

fn check_oracle_attributes(dataset: &Dataset, oracle: &dyn PairOracle) -> Result<()> {
    for name in oracle.attributes() {
        if dataset.schema().feature_position(name).is_none() {
            return Err(Error::Precondition(format!(
                "dataset has no feature attribute `{name}`"
            )));
        }
    }
    Ok(())
}

/// Pairs sharing one oracle score, split by stratum.
struct Level {
    score: f64,
    strata: Vec<(u8, Vec<(usize, usize)>)>,
}

/// Draws `n` oracle-labeled pairs, cycling through the distinct score
/// levels in descending order. Within a level the draws rotate over the
/// oracle's strata, and within a stratum pairs are sampled uniformly
/// without replacement.
pub fn balanced_labels(
    dataset: &Dataset,
    oracle: &dyn PairOracle,
    n: usize,
    seed: u64,
) -> Result<Vec<SimilarityLabel>> {
    check_oracle_attributes(dataset, oracle)?;
    let instances = dataset.instances();
    let mut levels: Vec<Level> = Vec::new();
    for i in 0..instances.len() {
        for j in i + 1..instances.len() {
            let (a, b) = (&instances[i], &instances[j]);
            let Some(score) = oracle.score(dataset, a, b) else {
                continue;
            };
            let stratum = oracle.stratum(dataset, a, b);
            let level = match levels.iter_mut().position(|l| l.score == score) {
                Some(p) => &mut levels[p],
                None => {
                    levels.push(Level {
                        score,
                        strata: Vec::new(),
                    });
                    levels.last_mut().expect("just pushed")
                }
            };
            match level.strata.iter_mut().find(|(s, _)| *s == stratum) {
                Some((_, pairs)) => pairs.push((i, j)),
                None => level.strata.push((stratum, vec![(i, j)])),
            }
        }
    }
    if levels.is_empty() {
        return Err(Error::Precondition(
            "no pair can be scored by the oracle".into(),
        ));
    }
    levels.sort_by(|a, b| b.score.total_cmp(&a.score));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for level in &mut levels {
        level.strata.sort_by_key(|(s, _)| *s);
        for (_, pairs) in &mut level.strata {
            pairs.shuffle(&mut rng);
        }
    }

    // draw plan: the k-th label comes from level k % L, and the m-th draw
    // from a level comes from its stratum m % S
    let mut taken: Vec<Vec<usize>> = levels.iter().map(|l| vec![0; l.strata.len()]).collect();
    let mut labels = Vec::with_capacity(n);
    for k in 0..n {
        let li = k % levels.len();
        let level = &levels[li];
        let si = (k / levels.len()) % level.strata.len();
        let (stratum, pairs) = &level.strata[si];
        let Some(&(i, j)) = pairs.get(taken[li][si]) else {
            return Err(Error::Precondition(format!(
                "dataset too small: only {} pairs score {} (stratum {stratum})",
                pairs.len(),
                level.score
            )));
        };
        taken[li][si] += 1;
        labels.push(SimilarityLabel::at(
            &instances[i].id,
            &instances[j].id,
            level.score,
            LabelSource::Oracle,
            label_time(k),
        )?);
    }
    Ok(labels)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProofOfConceptReport {
    pub labels: Vec<SimilarityLabel>,
    pub weight_ranking: Vec<(String, f64)>,
    pub cold_start: bool,
    /// The two highest-weighted attributes are exactly the oracle's.
    pub top2_matches: bool,
}

/// Trains a model on `n_labels` oracle labels and checks whether the
/// oracle's two attributes end up with the two largest weights.
pub fn run_proof_of_concept(
    dataset: &Dataset,
    oracle: &dyn PairOracle,
    n_labels: usize,
    pair_source: &PairSource,
) -> Result<ProofOfConceptReport> {
    check_oracle_attributes(dataset, oracle)?;
    let labels = match pair_source {
        PairSource::RandomBalanced { seed } => balanced_labels(dataset, oracle, n_labels, *seed)?,
        PairSource::Scripted(pairs) => {
            let mut labels = Vec::new();
            for (a, b) in pairs.iter().take(n_labels) {
                let (ia, ib) = (dataset.require(a)?, dataset.require(b)?);
                match oracle_label(ia, ib, oracle, dataset)? {
                    Some(mut l) => {
                        l.created_at = label_time(labels.len());
                        labels.push(l);
                    }
                    None => log::warn!("oracle cannot score {a}-{b}, skipped"),
                }
            }
            labels
        }
    };
    let model = compute_weights(&labels, dataset)?;
    let ranking = model.weight_ranking();
    let mut expected: Vec<&str> = oracle.attributes();
    expected.sort_unstable();
    let mut top: Vec<&str> = ranking.iter().take(2).map(|(n, _)| n.as_str()).collect();
    top.sort_unstable();
    let top2_matches = !model.is_cold_start()
        && expected.len() == 2
        && top == expected
        && ranking.get(2).is_none_or(|third| third.1 < ranking[1].1);
    Ok(ProofOfConceptReport {
        labels,
        weight_ranking: ranking,
        cold_start: model.is_cold_start(),
        top2_matches,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub runs: usize,
    pub labels_per_run: usize,
    /// `delta_w[run][j]` is the change at iteration `j + 2`.
    pub delta_w: Vec<Vec<f64>>,
    pub mean_delta_w: Vec<f64>,
    pub min_delta_w: Vec<f64>,
    pub max_delta_w: Vec<f64>,
}

impl ConvergenceReport {
    /// Mean change at 1-based learning iteration `iteration` (>= 2).
    pub fn mean_at(&self, iteration: usize) -> Option<f64> {
        iteration
            .checked_sub(2)
            .and_then(|j| self.mean_delta_w.get(j).copied())
    }

    /// Fixed-width table, one row per iteration.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "runs: {}  labels per run: {}",
            self.runs, self.labels_per_run
        );
        let _ = writeln!(
            out,
            "{:>9}  {:>10}  {:>10}  {:>10}",
            "iteration", "mean", "min", "max"
        );
        for j in 0..self.mean_delta_w.len() {
            let _ = writeln!(
                out,
                "{:>9}  {:>10.6}  {:>10.6}  {:>10.6}",
                j + 2,
                self.mean_delta_w[j],
                self.min_delta_w[j],
                self.max_delta_w[j]
            );
        }
        out
    }

    /// CSV series `iteration,mean,min,max` for plotting.
    pub fn to_series(&self) -> String {
        let mut out = String::from("iteration,mean,min,max\n");
        for j in 0..self.mean_delta_w.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                j + 2,
                self.mean_delta_w[j],
                self.min_delta_w[j],
                self.max_delta_w[j]
            );
        }
        out
    }
}

/// Seed of run `run`, derived so that runs are independent of each other
/// and of the run count.
fn run_seed(seed: u64, run: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (run as u64).wrapping_add(1)
}

/// Feeds a freshly permuted copy of `label_pool` to the model one label at
/// a time, per run, and records the weight change between consecutive
/// iterations.
pub fn run_convergence(
    dataset: &Dataset,
    label_pool: &[SimilarityLabel],
    runs: usize,
    seed: u64,
) -> Result<ConvergenceReport> {
    if label_pool.len() < 2 {
        return Err(Error::Precondition(
            "convergence needs a label pool of at least 2".into(),
        ));
    }
    if runs == 0 {
        return Err(Error::InvalidArgument("runs must be at least 1".into()));
    }
    for l in label_pool {
        l.validate(dataset)?;
    }
    let n = label_pool.len();
    let mut delta = Vec::with_capacity(runs);
    for run in 0..runs {
        let mut order = label_pool.to_vec();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(run_seed(seed, run)));
        let mut seen: Vec<SimilarityLabel> = Vec::with_capacity(n);
        let mut state = ModelState::cold(dataset);
        let mut curve = Vec::with_capacity(n - 1);
        for (i, label) in order.iter().enumerate() {
            let next = update_model(&state, label, &seen, dataset)?;
            if i > 0 {
                curve.push(delta_w(&state, &next)?);
            }
            seen.push(label.clone());
            state = next;
        }
        delta.push(curve);
    }
    let len = n - 1;
    let column = |j: usize| delta.iter().map(move |run: &Vec<f64>| run[j]);
    let mean = (0..len)
        .map(|j| column(j).sum::<f64>() / runs as f64)
        .collect();
    let min = (0..len)
        .map(|j| column(j).fold(f64::INFINITY, f64::min))
        .collect();
    let max = (0..len).map(|j| column(j).fold(0.0, f64::max)).collect();
    Ok(ConvergenceReport {
        runs,
        labels_per_run: n,
        delta_w: delta,
        mean_delta_w: mean,
        min_delta_w: min,
        max_delta_w: max,
    })
}

/// True when `dataset` has a feature `name` of the given kind.
pub fn has_feature(dataset: &Dataset, name: &str, kind: AttributeKind) -> bool {
    dataset
        .schema()
        .feature_position(name)
        .is_some_and(|p| dataset.schema().feature(p).kind == kind)
}
