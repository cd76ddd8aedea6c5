//! Seeded synthetic player-like datasets for experiments and tests.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dataset::{
    Attribute, AttributeKind, AttributeRole, AttributeValue, Dataset, Instance, Schema,
};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub instances: usize,
    pub teams: usize,
    pub min_age: u32,
    pub max_age: u32,
    /// Numerical, categorical and boolean attributes drawn independently of
    /// age and team.
    pub numerical: usize,
    pub categorical: usize,
    pub boolean: usize,
    /// Probability that an independent attribute value is missing.
    pub missing_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            instances: 60,
            teams: 6,
            min_age: 18,
            max_age: 36,
            numerical: 5,
            categorical: 2,
            boolean: 2,
            missing_rate: 0.0,
            seed: 0,
        }
    }
}

const NUMERICAL: &[&str] = &[
    "size",
    "league_games",
    "league_goals",
    "national_games",
    "national_goals",
    "market_value",
    "position_vertical",
    "position_horizontal",
];
const CATEGORICAL: &[(&str, &[&str])] = &[
    (
        "nationality",
        &["FR", "DE", "ES", "IT", "EN", "BR", "AR", "PT"],
    ),
    (
        "main_position",
        &["keeper", "defender", "midfielder", "striker"],
    ),
    ("foot", &["left", "right", "both"]),
    ("main_position_lr", &["left", "center", "right"]),
];
const BOOLEAN: &[(&str, f64)] = &[
    ("national_player", 0.5),
    ("captain", 0.3),
    ("left_footed", 0.4),
];

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub dataset: Dataset,
    /// Names of the attributes generated independently of age and team.
    pub independent: Vec<String>,
}

fn name(pool: &[&str], i: usize, prefix: &str) -> String {
    pool.get(i)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("{prefix}_{i}"))
}

/// Generates an unnormalized dataset with integer `age`, categorical `team`
/// and the configured number of independent attributes.
pub fn generate(config: &SyntheticConfig) -> Result<SyntheticDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut attributes = vec![
        Attribute::new("id", AttributeKind::Categorical, AttributeRole::Id),
        Attribute::new("name", AttributeKind::Categorical, AttributeRole::Display),
        Attribute::feature("age", AttributeKind::Numerical),
        Attribute::feature("team", AttributeKind::Categorical),
    ];
    let mut independent = Vec::new();
    for i in 0..config.numerical {
        independent.push(name(NUMERICAL, i, "num"));
        attributes.push(Attribute::feature(
            independent.last().unwrap(),
            AttributeKind::Numerical,
        ));
    }
    for i in 0..config.categorical {
        let n = CATEGORICAL
            .get(i)
            .map(|c| c.0.to_owned())
            .unwrap_or(format!("cat_{i}"));
        attributes.push(Attribute::feature(&n, AttributeKind::Categorical));
        independent.push(n);
    }
    for i in 0..config.boolean {
        let n = BOOLEAN
            .get(i)
            .map(|c| c.0.to_owned())
            .unwrap_or(format!("flag_{i}"));
        attributes.push(Attribute::feature(&n, AttributeKind::Boolean));
        independent.push(n);
    }
    let schema = Schema::new(attributes)?;

    let teams: Vec<String> = (0..config.teams.max(1))
        .map(|t| format!("Team {t:02}"))
        .collect();
    let mut instances = Vec::with_capacity(config.instances);
    for i in 0..config.instances {
        let mut values = vec![
            AttributeValue::Numerical(rng.random_range(config.min_age..=config.max_age) as f64),
            AttributeValue::Categorical(teams.choose(&mut rng).unwrap().clone()),
        ];
        let maybe = |rng: &mut ChaCha8Rng, v: AttributeValue| {
            if config.missing_rate > 0.0 && rng.random_bool(config.missing_rate) {
                AttributeValue::Missing
            } else {
                v
            }
        };
        for _ in 0..config.numerical {
            let v = AttributeValue::Numerical(rng.random_range(0.0..100.0));
            values.push(maybe(&mut rng, v));
        }
        for c in 0..config.categorical {
            let fallback: &[&str] = &["a", "b", "c", "d", "e"];
            let pool = CATEGORICAL.get(c).map(|c| c.1).unwrap_or(fallback);
            let v = AttributeValue::Categorical(pool.choose(&mut rng).unwrap().to_string());
            values.push(maybe(&mut rng, v));
        }
        for b in 0..config.boolean {
            let p = BOOLEAN.get(b).map(|b| b.1).unwrap_or(0.5);
            let v = AttributeValue::Boolean(rng.random_bool(p));
            values.push(maybe(&mut rng, v));
        }
        instances.push(
            Instance::new(format!("s{i:03}"), values)
                .with_display("name", format!("Player {i:03}")),
        );
    }
    Ok(SyntheticDataset {
        dataset: Dataset::new(schema, instances)?,
        independent,
    })
}

#[derive(Serialize)]
struct SchemaDoc<'a> {
    attributes: Vec<SchemaEntry<'a>>,
}

#[derive(Serialize)]
struct SchemaEntry<'a> {
    name: &'a str,
    kind: AttributeKind,
    role: AttributeRole,
}

/// Renders a dataset as a JSON schema document and CSV records, the
/// formats read by [`crate::dataset::load_dataset`].
pub fn to_files(dataset: &Dataset) -> Result<(String, String)> {
    let schema = dataset.schema();
    let doc = SchemaDoc {
        attributes: schema
            .attributes()
            .iter()
            .map(|a| SchemaEntry {
                name: &a.name,
                kind: a.kind,
                role: a.role,
            })
            .collect(),
    };
    let schema_json = serde_json::to_string_pretty(&doc).expect("schema serializes") + "\n";

    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(schema.attributes().iter().map(|a| a.name.as_str()))?;
    for inst in dataset.instances() {
        let row: Vec<String> = schema
            .attributes()
            .iter()
            .map(|a| match a.role {
                AttributeRole::Id => inst.id.clone(),
                AttributeRole::Display => inst.display.get(&a.name).cloned().unwrap_or_default(),
                AttributeRole::Feature => {
                    let p = schema.feature_position(&a.name).expect("feature");
                    match &inst.values[p] {
                        AttributeValue::Numerical(v) => v.to_string(),
                        AttributeValue::Categorical(s) => s.clone(),
                        AttributeValue::Boolean(b) => b.to_string(),
                        AttributeValue::Missing => String::new(),
                    }
                }
            })
            .collect();
        writer.write_record(&row)?;
    }
    let records = String::from_utf8(writer.into_inner().expect("in-memory writer"))
        .expect("csv output is utf-8");
    Ok((schema_json, records))
}
