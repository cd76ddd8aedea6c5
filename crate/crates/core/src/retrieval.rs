//! Exhaustive k-nearest-neighbor search under the learned combined
//! distance, with per-attribute explanations.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::distance::decompose;
use crate::error::{Error, Result};
use crate::model::ModelState;

/// Default number of neighbors shown in the result view.
pub const DEFAULT_K_RETRIEVE: usize = 6;

/// Number of attributes reported with every neighbor.
pub const EXPLAINED_ATTRIBUTES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub attribute: String,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub id: String,
    pub rank: usize,
    pub distance: f64,
    pub top_attributes: Vec<Contribution>,
    pub no_evidence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub query: String,
    pub neighbors: Vec<Neighbor>,
}

/// Distances equal to twelve decimals are ties. Different summation
/// orders can leave mathematically equal distances a few ulps apart, and
/// those pairs must still fall back to id order.
fn tie_key(distance: f64) -> i64 {
    (distance * 1e12).round() as i64
}

fn top_n(model: &ModelState, contributions: &[f64], n: usize) -> Vec<Contribution> {
    let mut all: Vec<Contribution> = model
        .attributes()
        .iter()
        .zip(contributions)
        .map(|(a, &c)| Contribution {
            attribute: a.clone(),
            contribution: c,
        })
        .collect();
    all.sort_by(|a, b| {
        b.contribution
            .total_cmp(&a.contribution)
            .then_with(|| a.attribute.cmp(&b.attribute))
    });
    all.truncate(n);
    all
}

/// The `n` attributes contributing most to the combined distance of `a`
/// and `b`, descending, ties by name. Contributions over all attributes
/// sum to the combined distance.
pub fn top_contributing_attributes(
    a: &str,
    b: &str,
    model: &ModelState,
    dataset: &Dataset,
    n: usize,
) -> Result<Vec<Contribution>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let d = decompose(dataset.require(a)?, dataset.require(b)?, model, dataset)?;
    Ok(top_n(model, &d.contributions, n))
}

/// Ranks every other instance by combined distance to `query`,
/// ascending, ties (to twelve decimals) by id, and returns the first `k`.
pub fn knn(
    query: &str,
    k: usize,
    model: &ModelState,
    dataset: &Dataset,
) -> Result<RetrievalResult> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let q = dataset.require(query)?;
    let mut scored = Vec::with_capacity(dataset.len().saturating_sub(1));
    for inst in dataset.instances() {
        if inst.id == q.id {
            continue;
        }
        scored.push((inst, decompose(q, inst, model, dataset)?));
    }
    scored.sort_by(|(a, da), (b, db)| {
        tie_key(da.distance.value)
            .cmp(&tie_key(db.distance.value))
            .then_with(|| a.id.cmp(&b.id))
    });
    let neighbors = scored
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, (inst, d))| Neighbor {
            id: inst.id.clone(),
            rank: i + 1,
            distance: d.distance.value,
            top_attributes: top_n(model, &d.contributions, EXPLAINED_ATTRIBUTES),
            no_evidence: d.distance.no_evidence,
        })
        .collect();
    Ok(RetrievalResult {
        query: query.to_owned(),
        neighbors,
    })
}

/// Case-insensitive substring search over display names, ordered by match
/// position, then name, then id. An empty query lists instances by name.
pub fn search_instances(text_query: &str, dataset: &Dataset, limit: usize) -> Vec<String> {
    let needle = text_query.trim().to_lowercase();
    let mut hits: Vec<(usize, String, &str)> = dataset
        .instances()
        .iter()
        .filter_map(|inst| {
            let name = dataset.display_name(inst);
            let lower = name.to_lowercase();
            lower
                .find(&needle)
                .map(|pos| (pos, lower, inst.id.as_str()))
        })
        .collect();
    hits.sort();
    hits.into_iter()
        .take(limit)
        .map(|(_, _, id)| id.to_owned())
        .collect()
}
