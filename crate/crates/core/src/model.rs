//! Attribute weighting from pairwise similarity labels.
//!
//! Each feature attribute is correlated independently with the feedback:
//! for every labeled pair we take the attribute's distance (absolute
//! difference for numbers, Kronecker delta otherwise) and the label
//! distance `1 - score`, and use the clamped Pearson coefficient of those
//! two samples as the raw weight.

use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::dataset::{AttributeKind, Dataset};
use crate::distance::{kronecker_distance, numeric_distance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    User,
    Oracle,
}

/// Similarity feedback for an unordered pair: 0 is dissimilar, 1 very
/// similar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityLabel {
    #[serde(rename = "pair_a")]
    pub a: String,
    #[serde(rename = "pair_b")]
    pub b: String,
    pub score: f64,
    #[serde(rename = "timestamp")]
    pub created_at: DateTime<Utc>,
    pub source: LabelSource,
}

impl SimilarityLabel {
    pub fn new(
        a: impl Into<String>,
        b: impl Into<String>,
        score: f64,
        source: LabelSource,
    ) -> Result<Self> {
        Self::at(a, b, score, source, Utc::now())
    }

    pub fn at(
        a: impl Into<String>,
        b: impl Into<String>,
        score: f64,
        source: LabelSource,
        created_at: DateTime<Utc>,
    ) -> Result<Self> {
        let label = SimilarityLabel {
            a: a.into(),
            b: b.into(),
            score,
            created_at,
            source,
        };
        label.check()?;
        Ok(label)
    }

    pub fn check(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.score) {
            return Err(Error::ScoreOutOfRange(self.score));
        }
        if self.a == self.b {
            return Err(Error::SelfPair(self.a.clone()));
        }
        Ok(())
    }

    pub fn validate(&self, dataset: &Dataset) -> Result<()> {
        self.check()?;
        dataset.require(&self.a)?;
        dataset.require(&self.b)?;
        Ok(())
    }

    /// The pair with its ids in ascending order.
    pub fn pair_key(&self) -> (&str, &str) {
        if self.a <= self.b {
            (&self.a, &self.b)
        } else {
            (&self.b, &self.a)
        }
    }

    pub fn involves(&self, id: &str) -> bool {
        self.a == id || self.b == id
    }

    /// The other member of the pair, if `id` is one of them.
    pub fn partner(&self, id: &str) -> Option<&str> {
        if self.a == id {
            Some(&self.b)
        } else if self.b == id {
            Some(&self.a)
        } else {
            None
        }
    }
}

/// Latest-wins deduplication by unordered pair: the label with the newest
/// timestamp survives, and among equal timestamps the one given last. The
/// result is sorted by pair key, so it depends only on the surviving label
/// set.
pub fn active_labels(labels: &[SimilarityLabel]) -> Vec<SimilarityLabel> {
    let mut latest: BTreeMap<(&str, &str), &SimilarityLabel> = BTreeMap::new();
    for label in labels {
        match latest.get(&label.pair_key()) {
            Some(prev) if prev.created_at > label.created_at => {}
            _ => {
                latest.insert(label.pair_key(), label);
            }
        }
    }
    latest.into_values().cloned().collect()
}

/// Each attribute kind's share of the total weight.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TypeFractions {
    pub numerical: f64,
    pub categorical: f64,
    pub boolean: f64,
}

impl TypeFractions {
    pub fn from_weights(kinds: impl Iterator<Item = AttributeKind>, weights: &[f64]) -> Self {
        let mut sums = TypeFractions::default();
        let mut total = 0.0;
        for (kind, &w) in kinds.zip(weights) {
            *sums.get_mut(kind) += w;
            total += w;
        }
        if total > 0.0 {
            sums.numerical /= total;
            sums.categorical /= total;
            sums.boolean /= total;
        }
        sums
    }

    pub fn get(&self, kind: AttributeKind) -> f64 {
        match kind {
            AttributeKind::Numerical => self.numerical,
            AttributeKind::Categorical => self.categorical,
            AttributeKind::Boolean => self.boolean,
        }
    }

    fn get_mut(&mut self, kind: AttributeKind) -> &mut f64 {
        match kind {
            AttributeKind::Numerical => &mut self.numerical,
            AttributeKind::Categorical => &mut self.categorical,
            AttributeKind::Boolean => &mut self.boolean,
        }
    }
}

/// An immutable snapshot of the learned similarity model. Vectors are
/// aligned with the dataset's feature attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    attributes: Vec<String>,
    kinds: Vec<AttributeKind>,
    weights: Vec<f64>,
    raw_correlations: Vec<Option<f64>>,
    type_fractions: TypeFractions,
    iteration: usize,
    cold_start: bool,
}

impl ModelState {
    /// Uniform weights over all feature attributes.
    pub fn cold(dataset: &Dataset) -> Self {
        let n = dataset.schema().feature_count();
        let weights = vec![if n > 0 { 1.0 / n as f64 } else { 0.0 }; n];
        Self::build(dataset, weights, vec![None; n], 0, true)
    }

    /// A model with caller-supplied nonnegative weights, normalized to sum
    /// to one. All-zero weights fall back to the cold-start state.
    pub fn with_weights(dataset: &Dataset, weights: Vec<f64>) -> Result<Self> {
        let n = dataset.schema().feature_count();
        if weights.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: weights.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidArgument(format!("invalid weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Ok(Self::cold(dataset));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self::build(dataset, weights, vec![None; n], 0, false))
    }

    fn build(
        dataset: &Dataset,
        weights: Vec<f64>,
        raw_correlations: Vec<Option<f64>>,
        iteration: usize,
        cold_start: bool,
    ) -> Self {
        let attributes = dataset
            .schema()
            .features()
            .map(|a| a.name.clone())
            .collect();
        let kinds: Vec<AttributeKind> = dataset.schema().features().map(|a| a.kind).collect();
        let type_fractions = TypeFractions::from_weights(kinds.iter().copied(), &weights);
        ModelState {
            attributes,
            kinds,
            weights,
            raw_correlations,
            type_fractions,
            iteration,
            cold_start,
        }
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn kinds(&self) -> &[AttributeKind] {
        &self.kinds
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, attribute: &str) -> Option<f64> {
        self.attributes
            .iter()
            .position(|a| a == attribute)
            .map(|p| self.weights[p])
    }

    pub fn raw_correlations(&self) -> &[Option<f64>] {
        &self.raw_correlations
    }

    pub fn type_fractions(&self) -> TypeFractions {
        self.type_fractions
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub(crate) fn with_iteration(mut self, iteration: usize) -> Self {
        self.iteration = iteration;
        self
    }

    pub fn is_cold_start(&self) -> bool {
        self.cold_start
    }

    /// The weights used for distances: uniform when every weight is zero.
    pub fn effective_weights(&self) -> Cow<'_, [f64]> {
        if self.weights.iter().any(|w| *w > 0.0) {
            Cow::Borrowed(&self.weights)
        } else {
            let n = self.weights.len().max(1) as f64;
            Cow::Owned(vec![1.0 / n; self.weights.len()])
        }
    }

    /// Attributes by descending weight, ties by name.
    pub fn weight_ranking(&self) -> Vec<(String, f64)> {
        let mut ranking: Vec<(String, f64)> = self
            .attributes
            .iter()
            .cloned()
            .zip(self.weights.iter().copied())
            .collect();
        ranking.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranking
    }

    pub fn snapshot(&self) -> ModelSnapshot {
        ModelSnapshot {
            iteration: self.iteration,
            cold_start: self.cold_start,
            weights: self
                .attributes
                .iter()
                .cloned()
                .zip(self.weights.iter().copied())
                .collect(),
            raw_correlations: self
                .attributes
                .iter()
                .cloned()
                .zip(self.raw_correlations.iter().copied())
                .collect(),
            type_fractions: self.type_fractions,
            ranking: self
                .weight_ranking()
                .into_iter()
                .map(|(attribute, weight)| RankedWeight { attribute, weight })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedWeight {
    pub attribute: String,
    pub weight: f64,
}

/// Serializable view of a [`ModelState`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSnapshot {
    pub iteration: usize,
    pub cold_start: bool,
    pub weights: BTreeMap<String, f64>,
    pub raw_correlations: BTreeMap<String, Option<f64>>,
    pub type_fractions: TypeFractions,
    pub ranking: Vec<RankedWeight>,
}

/// Pearson coefficient, `None` for fewer than two samples or when either
/// sample is constant.
fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 || is_constant(xs) || is_constant(ys) {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

fn is_constant(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] == w[1])
}

/// Learns attribute weights from scratch from the given labels.
///
/// Duplicate pairs are resolved latest-wins and the survivors are processed
/// in pair order, so the result depends only on the active label set.
pub fn compute_weights(labels: &[SimilarityLabel], dataset: &Dataset) -> Result<ModelState> {
    let labels = active_labels(labels);
    let mut pairs = Vec::with_capacity(labels.len());
    for label in &labels {
        label.validate(dataset)?;
        let a = dataset.position(&label.a).expect("validated");
        let b = dataset.position(&label.b).expect("validated");
        pairs.push((a, b, 1.0 - label.score));
    }

    let schema = dataset.schema();
    let n = schema.feature_count();
    if labels.len() < 2 {
        let mut cold = ModelState::cold(dataset);
        cold.iteration = labels.len();
        return Ok(cold);
    }

    let instances = dataset.instances();
    let mut raw = Vec::with_capacity(n);
    let mut xs = Vec::with_capacity(pairs.len());
    let mut ys = Vec::with_capacity(pairs.len());
    for (p, attr) in schema.features().enumerate() {
        xs.clear();
        ys.clear();
        for &(a, b, target) in &pairs {
            let (va, vb) = (&instances[a].values[p], &instances[b].values[p]);
            let d = match attr.kind {
                AttributeKind::Numerical => numeric_distance(va.as_f64(), vb.as_f64())?,
                _ => kronecker_distance(va, vb)?,
            };
            if let Some(d) = d {
                xs.push(d);
                ys.push(target);
            }
        }
        raw.push(pearson(&xs, &ys));
    }

    let clamped: Vec<f64> = raw.iter().map(|r| r.unwrap_or(0.0).max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    if total <= 0.0 {
        let mut cold = ModelState::cold(dataset);
        cold.raw_correlations = raw;
        cold.iteration = labels.len();
        return Ok(cold);
    }
    let weights = clamped.into_iter().map(|w| w / total).collect();
    Ok(ModelState::build(
        dataset,
        weights,
        raw,
        labels.len(),
        false,
    ))
}

/// Adds `new_label` to `all_labels` (replacing an earlier label for the
/// same pair) and recomputes the model from scratch.
pub fn update_model(
    state: &ModelState,
    new_label: &SimilarityLabel,
    all_labels: &[SimilarityLabel],
    dataset: &Dataset,
) -> Result<ModelState> {
    new_label.validate(dataset)?;
    let mut labels = all_labels.to_vec();
    labels.push(new_label.clone());
    let mut next = compute_weights(&labels, dataset)?;
    next.iteration = state.iteration + 1;
    Ok(next)
}

/// Index of the highest-weight attribute, ties by name.
pub(crate) fn top_attribute(state: &ModelState) -> Option<usize> {
    let order: HashMap<&str, usize> = state
        .attributes
        .iter()
        .enumerate()
        .map(|(i, a)| (a.as_str(), i))
        .collect();
    state
        .weight_ranking()
        .first()
        .map(|(name, _)| order[name.as_str()])
}
