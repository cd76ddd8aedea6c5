//! Farthest-first suggestions of instances to label against a user-chosen
//! anchor.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::dataset::{Attribute, AttributeKind, AttributeValue, Dataset};
use crate::distance::{kronecker_distance, numeric_distance};
use crate::error::{Error, Result};
use crate::model::{top_attribute, ModelState, SimilarityLabel};

/// Default number of candidates per panel.
pub const DEFAULT_K_SUGGEST: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    #[default]
    Left,
    Right,
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            other => Err(Error::InvalidArgument(format!("unknown side `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestionSet {
    pub anchor: String,
    pub side: Side,
    pub candidates: Vec<String>,
    pub rationale_attribute: String,
}

/// Selects instances to propose for labeling. Implementations must be
/// deterministic in their inputs.
pub trait SuggestionStrategy {
    fn suggest(
        &self,
        anchor: &str,
        side: Side,
        k: usize,
        model: &ModelState,
        labels: &[SimilarityLabel],
        dataset: &Dataset,
    ) -> Result<SuggestionSet>;
}

/// Ranks unlabeled instances by descending distance to the anchor under the
/// current top-weight attribute.
#[derive(Debug, Clone, Copy, Default)]
pub struct FarthestFirst;

impl SuggestionStrategy for FarthestFirst {
    fn suggest(
        &self,
        anchor: &str,
        side: Side,
        k: usize,
        model: &ModelState,
        labels: &[SimilarityLabel],
        dataset: &Dataset,
    ) -> Result<SuggestionSet> {
        suggest_candidates(anchor, side, k, model, labels, dataset)
    }
}

/// Sort key of one candidate, "farther" first.
#[derive(Debug, PartialEq)]
struct Key<'a> {
    missing: bool,
    primary: f64,
    /// rarity of the candidate's category, lower is rarer
    frequency: usize,
    id: &'a str,
}

fn compare(a: &Key<'_>, b: &Key<'_>) -> Ordering {
    a.missing
        .cmp(&b.missing)
        .then_with(|| b.primary.total_cmp(&a.primary))
        .then_with(|| a.frequency.cmp(&b.frequency))
        .then_with(|| a.id.cmp(b.id))
}

/// Attribute used to rank candidates before any weights exist: the
/// numerical feature with the highest variance, else the categorical
/// feature with the highest entropy, else the first feature by name.
pub fn cold_start_attribute(dataset: &Dataset) -> Option<usize> {
    let schema = dataset.schema();
    let by_score = |kind: AttributeKind, score: &dyn Fn(usize) -> Option<f64>| {
        (0..schema.feature_count())
            .filter(|&p| schema.feature(p).kind == kind)
            .filter_map(|p| score(p).map(|s| (p, s)))
            .max_by(|a, b| {
                a.1.total_cmp(&b.1)
                    .then_with(|| schema.feature(b.0).name.cmp(&schema.feature(a.0).name))
            })
            .map(|(p, _)| p)
    };
    let variance = |p: usize| {
        let xs: Vec<f64> = dataset
            .instances()
            .iter()
            .filter_map(|i| i.values[p].as_f64())
            .collect();
        if xs.len() < 2 {
            return None;
        }
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        (var > 0.0).then_some(var)
    };
    let entropy = |p: usize| {
        let freq = categorical_frequencies(dataset, p);
        let n: usize = freq.values().sum();
        if n == 0 {
            return None;
        }
        let h: f64 = freq
            .values()
            .map(|&f| {
                let q = f as f64 / n as f64;
                -q * q.ln()
            })
            .sum();
        (h > 0.0).then_some(h)
    };
    by_score(AttributeKind::Numerical, &variance)
        .or_else(|| by_score(AttributeKind::Categorical, &entropy))
        .or_else(|| {
            (0..schema.feature_count())
                .min_by(|&a, &b| schema.feature(a).name.cmp(&schema.feature(b).name))
        })
}

fn categorical_frequencies(dataset: &Dataset, p: usize) -> BTreeMap<String, usize> {
    let attr = dataset.schema().feature(p);
    if !attr.category_frequencies.is_empty() {
        return attr.category_frequencies.clone();
    }
    let mut freq = BTreeMap::new();
    for inst in dataset.instances() {
        if let Some(t) = inst.values[p].as_token() {
            *freq.entry(t.to_owned()).or_insert(0) += 1;
        }
    }
    freq
}

fn key<'a>(
    attr: &Attribute,
    freq: &BTreeMap<String, usize>,
    anchor: &AttributeValue,
    candidate: &AttributeValue,
    id: &'a str,
) -> Result<Key<'a>> {
    let primary = match attr.kind {
        AttributeKind::Numerical => numeric_distance(anchor.as_f64(), candidate.as_f64())?,
        AttributeKind::Categorical | AttributeKind::Boolean => {
            kronecker_distance(anchor, candidate)?
        }
    };
    let frequency = candidate
        .as_token()
        .and_then(|t| freq.get(t).copied())
        .unwrap_or(0);
    Ok(Key {
        missing: primary.is_none(),
        primary: primary.unwrap_or(0.0),
        frequency,
        id,
    })
}

/// Proposes up to `k` instances that have no label with `anchor`, farthest
/// from it under the top-weight attribute first. Instances missing that
/// attribute (or when the anchor misses it) sort last.
pub fn suggest_candidates(
    anchor: &str,
    side: Side,
    k: usize,
    model: &ModelState,
    labels: &[SimilarityLabel],
    dataset: &Dataset,
) -> Result<SuggestionSet> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let anchor_inst = dataset.require(anchor)?;
    let position = if model.is_cold_start() {
        cold_start_attribute(dataset)
    } else {
        top_attribute(model)
    };
    let Some(position) = position else {
        return Ok(SuggestionSet {
            anchor: anchor.to_owned(),
            side,
            candidates: Vec::new(),
            rationale_attribute: String::new(),
        });
    };
    let attr = dataset.schema().feature(position);
    let freq = if attr.kind == AttributeKind::Categorical {
        categorical_frequencies(dataset, position)
    } else {
        BTreeMap::new()
    };

    let labeled: HashSet<&str> = labels.iter().filter_map(|l| l.partner(anchor)).collect();
    let mut keys = Vec::new();
    for inst in dataset.instances() {
        if inst.id == anchor || labeled.contains(inst.id.as_str()) {
            continue;
        }
        keys.push(key(
            attr,
            &freq,
            &anchor_inst.values[position],
            &inst.values[position],
            &inst.id,
        )?);
    }
    keys.sort_by(compare);
    Ok(SuggestionSet {
        anchor: anchor.to_owned(),
        side,
        candidates: keys.into_iter().take(k).map(|k| k.id.to_owned()).collect(),
        rationale_attribute: attr.name.clone(),
    })
}
