//! Per-attribute and per-type distances for mixed data.
//!
//! Every function returns values in `[0, 1]`. Missing values are handled by
//! pairwise deletion: a pair contributes only on attributes observed in
//! both instances, and each per-type distance is renormalized over those.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dataset::{Attribute, AttributeKind, AttributeValue, Dataset, Instance};
use crate::error::{Error, Result};
use crate::model::{ModelState, TypeFractions};

fn check_unit(v: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(Error::NotNormalized { value: v })
    }
}

/// `|a - b|` for normalized values, `None` when either side is missing.
pub fn numeric_distance(a: Option<f64>, b: Option<f64>) -> Result<Option<f64>> {
    match (a, b) {
        (Some(a), Some(b)) => Ok(Some((check_unit(a)? - check_unit(b)?).abs())),
        (a, b) => {
            if let Some(v) = a.or(b) {
                check_unit(v)?;
            }
            Ok(None)
        }
    }
}

/// 0 for equal values, 1 for unequal, `None` when either side is missing.
/// Only categorical and boolean values are accepted.
pub fn kronecker_distance(a: &AttributeValue, b: &AttributeValue) -> Result<Option<f64>> {
    use AttributeValue::*;
    match (a, b) {
        (Categorical(x), Categorical(y)) => Ok(Some(if x == y { 0.0 } else { 1.0 })),
        (Boolean(x), Boolean(y)) => Ok(Some(if x == y { 0.0 } else { 1.0 })),
        (Missing, Missing) | (Missing, Categorical(_) | Boolean(_)) => Ok(None),
        (Categorical(_) | Boolean(_), Missing) => Ok(None),
        _ => Err(Error::InvalidArgument(format!(
            "kronecker distance needs categorical or boolean values of one kind, got {a:?} and {b:?}"
        ))),
    }
}

fn frequency(attribute: &str, token: &str, freq: &BTreeMap<String, usize>) -> Result<usize> {
    match freq.get(token) {
        Some(&f) if f > 0 => Ok(f),
        _ => Err(Error::StaleIndex {
            attribute: attribute.to_owned(),
            token: token.to_owned(),
        }),
    }
}

/// Goodall3 distance with plug-in probabilities `p(v) = freq[v] / n`.
///
/// A match on `v` has similarity `1 - p(v)^2`, so the distance is `p(v)^2`:
/// matches on rare categories are closer than matches on common ones. A
/// mismatch has distance 1.
pub fn goodall_distance(
    a: Option<&str>,
    b: Option<&str>,
    freq: &BTreeMap<String, usize>,
    n: usize,
) -> Result<Option<f64>> {
    goodall_named("", a, b, freq, n)
}

fn goodall_named(
    attribute: &str,
    a: Option<&str>,
    b: Option<&str>,
    freq: &BTreeMap<String, usize>,
    n: usize,
) -> Result<Option<f64>> {
    let (Some(a), Some(b)) = (a, b) else {
        return Ok(None);
    };
    let fa = frequency(attribute, a, freq)?;
    let fb = frequency(attribute, b, freq)?;
    if fa > n || fb > n {
        return Err(Error::InvalidArgument(format!(
            "category frequency exceeds observation count {n}"
        )));
    }
    if a != b {
        return Ok(Some(1.0));
    }
    let p = fa as f64 / n as f64;
    Ok(Some(p * p))
}

/// Goodall3 distance between two instances on one categorical attribute,
/// centered on the self-distances of the two values:
/// `g(a, b) - (g(a, a) + g(b, b)) / 2`.
///
/// Identical values are at distance 0; a mismatch between rare categories
/// is farther than a mismatch between common ones.
pub fn centered_goodall_distance(
    a: Option<&str>,
    b: Option<&str>,
    attribute: &Attribute,
) -> Result<Option<f64>> {
    let freq = &attribute.category_frequencies;
    let n = attribute.observation_count();
    let name = attribute.name.as_str();
    let Some(ab) = goodall_named(name, a, b, freq, n)? else {
        return Ok(None);
    };
    let aa = goodall_named(name, a, a, freq, n)?.unwrap_or(0.0);
    let bb = goodall_named(name, b, b, freq, n)?.unwrap_or(0.0);
    Ok(Some((ab - 0.5 * (aa + bb)).max(0.0)))
}

/// A per-type distance plus whether any shared evidence backed it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TypeDistance {
    pub value: f64,
    pub no_evidence: bool,
}

impl TypeDistance {
    const NONE: TypeDistance = TypeDistance {
        value: 0.0,
        no_evidence: true,
    };
}

fn check_lengths(a: usize, b: usize, w: usize) -> Result<()> {
    if a != w {
        return Err(Error::LengthMismatch {
            expected: w,
            found: a,
        });
    }
    if b != w {
        return Err(Error::LengthMismatch {
            expected: w,
            found: b,
        });
    }
    Ok(())
}

/// Weighted Jaccard distance over boolean vectors. Negative matches (both
/// false) and missing entries do not count. An empty union yields distance
/// 0 flagged as `no_evidence`.
pub fn jaccard_weighted_distance(
    x: &[Option<bool>],
    y: &[Option<bool>],
    w: &[f64],
) -> Result<TypeDistance> {
    check_lengths(x.len(), y.len(), w.len())?;
    let (mut both, mut either) = (0.0, 0.0);
    for ((x, y), &w) in x.iter().zip(y).zip(w) {
        if let (Some(x), Some(y)) = (x, y) {
            if *x && *y {
                both += w;
            }
            if *x || *y {
                either += w;
            }
        }
    }
    if either <= 0.0 {
        return Ok(TypeDistance::NONE);
    }
    Ok(TypeDistance {
        value: (1.0 - both / either).clamp(0.0, 1.0),
        no_evidence: false,
    })
}

/// `sqrt(sum w (x - y)^2) / sqrt(sum w)` over attributes present in both
/// vectors, which keeps the result in `[0, 1]` for normalized inputs.
pub fn weighted_euclidean_distance(
    x: &[Option<f64>],
    y: &[Option<f64>],
    w: &[f64],
) -> Result<TypeDistance> {
    check_lengths(x.len(), y.len(), w.len())?;
    let (mut sum, mut weight) = (0.0, 0.0);
    for ((x, y), &w) in x.iter().zip(y).zip(w) {
        if let Some(d) = numeric_distance(*x, *y)? {
            sum += w * d * d;
            weight += w;
        }
    }
    if weight <= 0.0 {
        return Ok(TypeDistance::NONE);
    }
    Ok(TypeDistance {
        value: (sum / weight).sqrt().min(1.0),
        no_evidence: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CombinedDistance {
    pub value: f64,
    /// No attribute with positive weight was observed in both instances.
    pub no_evidence: bool,
}

/// Exact additive decomposition of the combined distance into one
/// contribution per feature attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub distance: CombinedDistance,
    pub contributions: Vec<f64>,
}

#[derive(Default)]
struct TypeAccumulator {
    /// numerator of the per-type distance, per attribute
    terms: Vec<(usize, f64)>,
    numerator: f64,
    denominator: f64,
}

impl TypeAccumulator {
    fn push(&mut self, position: usize, numerator: f64, denominator: f64) {
        self.terms.push((position, numerator));
        self.numerator += numerator;
        self.denominator += denominator;
    }

    fn has_evidence(&self) -> bool {
        self.denominator > 0.0
    }
}

/// Computes the combined distance and per-attribute contributions.
///
/// Per-type distances are condensed as `sum_t f_t d_t / sum_t f_t`, where
/// `f_t` is type `t`'s share of the total weight and the sums run over types
/// with shared evidence for this pair.
pub fn decompose(
    a: &Instance,
    b: &Instance,
    model: &ModelState,
    dataset: &Dataset,
) -> Result<Decomposition> {
    let schema = dataset.schema();
    let n = schema.feature_count();
    if model.attributes().len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: model.attributes().len(),
        });
    }
    check_lengths(a.values.len(), b.values.len(), n)?;
    let weights = model.effective_weights();
    let fractions = TypeFractions::from_weights(schema.features().map(|f| f.kind), &weights);

    let mut num = TypeAccumulator::default();
    let mut cat = TypeAccumulator::default();
    let mut boolean = TypeAccumulator::default();
    for (p, attr) in schema.features().enumerate() {
        let w = weights[p];
        if w <= 0.0 {
            continue;
        }
        let (va, vb) = (&a.values[p], &b.values[p]);
        match attr.kind {
            AttributeKind::Numerical => {
                if let Some(d) = numeric_distance(va.as_f64(), vb.as_f64())? {
                    num.push(p, w * d * d, w);
                }
            }
            AttributeKind::Categorical => {
                if let Some(d) = centered_goodall_distance(va.as_token(), vb.as_token(), attr)? {
                    cat.push(p, w * d, w);
                }
            }
            AttributeKind::Boolean => {
                if let (Some(x), Some(y)) = (va.as_bool(), vb.as_bool()) {
                    if x || y {
                        boolean.push(p, if x != y { w } else { 0.0 }, w);
                    }
                }
            }
        }
    }

    let mut contributions = vec![0.0; n];
    let evidence: f64 = [
        (num.has_evidence(), fractions.numerical),
        (cat.has_evidence(), fractions.categorical),
        (boolean.has_evidence(), fractions.boolean),
    ]
    .iter()
    .filter(|(e, _)| *e)
    .map(|(_, f)| f)
    .sum();
    if evidence <= 0.0 {
        return Ok(Decomposition {
            distance: CombinedDistance {
                value: 0.0,
                no_evidence: true,
            },
            contributions,
        });
    }

    let mut value = 0.0;
    if num.has_evidence() {
        let d = (num.numerator / num.denominator).sqrt();
        let scale = fractions.numerical / evidence;
        value += scale * d;
        if num.numerator > 0.0 {
            for &(p, t) in &num.terms {
                contributions[p] = scale * d * t / num.numerator;
            }
        }
    }
    for (acc, f) in [(&cat, fractions.categorical), (&boolean, fractions.boolean)] {
        if acc.has_evidence() {
            let scale = f / evidence;
            value += scale * acc.numerator / acc.denominator;
            for &(p, t) in &acc.terms {
                contributions[p] = scale * t / acc.denominator;
            }
        }
    }
    Ok(Decomposition {
        distance: CombinedDistance {
            value: value.clamp(0.0, 1.0),
            no_evidence: false,
        },
        contributions,
    })
}

pub fn combined_distance(
    a: &Instance,
    b: &Instance,
    model: &ModelState,
    dataset: &Dataset,
) -> Result<CombinedDistance> {
    decompose(a, b, model, dataset).map(|d| d.distance)
}
