//! Mixed-type record collections: schema, loading, normalization and
//! sparsity filtering.
//!
//! Feature values are stored per instance in schema feature order, so a
//! feature position obtained from [`Schema::feature_position`] indexes
//! directly into [`Instance::values`].

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default coverage threshold used by the CLI and the service.
pub const DEFAULT_MIN_COVERAGE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    Numerical,
    Categorical,
    Boolean,
}

impl AttributeKind {
    pub const ALL: [AttributeKind; 3] = [
        AttributeKind::Numerical,
        AttributeKind::Categorical,
        AttributeKind::Boolean,
    ];

    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "numerical" | "numeric" => Some(AttributeKind::Numerical),
            "categorical" | "nominal" => Some(AttributeKind::Categorical),
            "boolean" | "bool" | "binary" => Some(AttributeKind::Boolean),
            _ => None,
        }
    }
}

impl fmt::Display for AttributeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttributeKind::Numerical => "numerical",
            AttributeKind::Categorical => "categorical",
            AttributeKind::Boolean => "boolean",
        })
    }
}

/// Only `Feature` attributes enter the similarity model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AttributeRole {
    #[default]
    Feature,
    Display,
    Id,
}

impl AttributeRole {
    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "feature" => Some(AttributeRole::Feature),
            "display" => Some(AttributeRole::Display),
            "id" => Some(AttributeRole::Id),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub kind: AttributeKind,
    #[serde(default)]
    pub role: AttributeRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed_max: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub category_frequencies: BTreeMap<String, usize>,
    /// Set during normalization when a numerical attribute has a single
    /// observed value (or none at all).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub zero_variance: bool,
}

impl Attribute {
    pub fn new(name: impl Into<String>, kind: AttributeKind, role: AttributeRole) -> Self {
        Attribute {
            name: name.into(),
            kind,
            role,
            observed_min: None,
            observed_max: None,
            category_frequencies: BTreeMap::new(),
            zero_variance: false,
        }
    }

    pub fn feature(name: impl Into<String>, kind: AttributeKind) -> Self {
        Attribute::new(name, kind, AttributeRole::Feature)
    }

    /// Number of non-missing observations indexed for a categorical attribute.
    pub fn observation_count(&self) -> usize {
        self.category_frequencies.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum AttributeValue {
    Numerical(f64),
    Categorical(String),
    Boolean(bool),
    Missing,
}

impl AttributeValue {
    pub fn is_missing(&self) -> bool {
        matches!(self, AttributeValue::Missing)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            AttributeValue::Numerical(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_token(&self) -> Option<&str> {
        match self {
            AttributeValue::Categorical(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            AttributeValue::Boolean(b) => Some(*b),
            _ => None,
        }
    }

    fn matches_kind(&self, kind: AttributeKind) -> bool {
        matches!(
            (self, kind),
            (AttributeValue::Missing, _)
                | (AttributeValue::Numerical(_), AttributeKind::Numerical)
                | (AttributeValue::Categorical(_), AttributeKind::Categorical)
                | (AttributeValue::Boolean(_), AttributeKind::Boolean)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    #[serde(default)]
    pub display: BTreeMap<String, String>,
    /// One entry per schema feature attribute, in schema feature order.
    pub values: Vec<AttributeValue>,
}

impl Instance {
    pub fn new(id: impl Into<String>, values: Vec<AttributeValue>) -> Self {
        Instance {
            id: id.into(),
            display: BTreeMap::new(),
            values,
        }
    }

    pub fn with_display(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.display.insert(key.into(), value.into());
        self
    }

    fn coverage(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        let present = self.values.iter().filter(|v| !v.is_missing()).count();
        present as f64 / self.values.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    attributes: Vec<Attribute>,
    features: Vec<usize>,
    id: usize,
}

#[derive(Deserialize)]
struct SchemaDocument {
    attributes: Vec<Attribute>,
}

impl Schema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        let mut seen = HashSet::new();
        for a in &attributes {
            if a.name.trim().is_empty() {
                return Err(Error::SchemaParse("attribute with empty name".into()));
            }
            if !seen.insert(a.name.as_str()) {
                return Err(Error::DuplicateAttribute(a.name.clone()));
            }
        }
        let ids: Vec<usize> = attributes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.role == AttributeRole::Id)
            .map(|(i, _)| i)
            .collect();
        let id = match ids.as_slice() {
            [id] => *id,
            [] => {
                return Err(Error::SchemaParse(
                    "schema declares no `id` attribute".into(),
                ))
            }
            _ => {
                return Err(Error::SchemaParse(
                    "schema declares more than one `id` attribute".into(),
                ))
            }
        };
        let features = attributes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.role == AttributeRole::Feature)
            .map(|(i, _)| i)
            .collect();
        Ok(Schema {
            attributes,
            features,
            id,
        })
    }

    /// Parses either a JSON document `{"attributes": [...]}` or a line
    /// format with one `name,kind,role` triple per line (`#` starts a
    /// comment, role defaults to `feature`).
    pub fn parse(source: &str) -> Result<Self> {
        let trimmed = source.trim_start();
        if trimmed.starts_with('{') {
            let doc: SchemaDocument =
                serde_json::from_str(source).map_err(|e| Error::SchemaParse(e.to_string()))?;
            return Schema::new(doc.attributes);
        }

        let mut attributes = Vec::new();
        for (lineno, line) in source.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|f| !f.is_empty())
                .collect();
            let (name, kind, role) = match fields.as_slice() {
                [name, kind] => (*name, *kind, "feature"),
                [name, kind, role] => (*name, *kind, *role),
                _ => {
                    return Err(Error::SchemaParse(format!(
                        "line {}: expected `name,kind[,role]`",
                        lineno + 1
                    )))
                }
            };
            let kind = AttributeKind::parse(kind).ok_or_else(|| {
                Error::SchemaParse(format!("line {}: unknown kind `{kind}`", lineno + 1))
            })?;
            let role = AttributeRole::parse(role).ok_or_else(|| {
                Error::SchemaParse(format!("line {}: unknown role `{role}`", lineno + 1))
            })?;
            attributes.push(Attribute::new(name, kind, role));
        }
        Schema::new(attributes)
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn id_attribute(&self) -> &Attribute {
        &self.attributes[self.id]
    }

    pub fn feature_count(&self) -> usize {
        self.features.len()
    }

    pub fn feature(&self, position: usize) -> &Attribute {
        &self.attributes[self.features[position]]
    }

    pub fn features(&self) -> impl ExactSizeIterator<Item = &Attribute> + '_ {
        self.features.iter().map(move |&i| &self.attributes[i])
    }

    pub fn feature_position(&self, name: &str) -> Option<usize> {
        self.features
            .iter()
            .position(|&i| self.attributes[i].name == name)
    }

    fn feature_mut(&mut self, position: usize) -> &mut Attribute {
        &mut self.attributes[self.features[position]]
    }

    fn retain_features(&mut self, keep: &[bool]) {
        let drop: HashSet<usize> = self
            .features
            .iter()
            .zip(keep)
            .filter(|(_, k)| !**k)
            .map(|(i, _)| *i)
            .collect();
        let attributes = std::mem::take(&mut self.attributes)
            .into_iter()
            .enumerate()
            .filter(|(i, _)| !drop.contains(i))
            .map(|(_, a)| a)
            .collect();
        *self = Schema::new(attributes).expect("removing features keeps a valid schema");
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AttributeSummary {
    pub name: String,
    pub kind: AttributeKind,
    pub role: AttributeRole,
    pub coverage: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetSummary {
    pub instances: usize,
    pub normalized: bool,
    pub attributes: Vec<AttributeSummary>,
}

impl fmt::Display for DatasetSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "instances: {}", self.instances)?;
        writeln!(f, "feature attributes: {}", self.attributes.len())?;
        for a in &self.attributes {
            writeln!(
                f,
                "  {:<28} {:<12} coverage {:>6.1}%",
                a.name,
                a.kind.to_string(),
                a.coverage * 100.0
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Schema,
    instances: Vec<Instance>,
    index: HashMap<String, usize>,
    normalized: bool,
}

impl Dataset {
    /// Builds an unnormalized dataset, checking id uniqueness, value counts
    /// and value tags against the schema.
    pub fn new(schema: Schema, instances: Vec<Instance>) -> Result<Self> {
        let mut index = HashMap::with_capacity(instances.len());
        for (i, inst) in instances.iter().enumerate() {
            if index.insert(inst.id.clone(), i).is_some() {
                return Err(Error::DuplicateInstance(inst.id.clone()));
            }
            if inst.values.len() != schema.feature_count() {
                return Err(Error::LengthMismatch {
                    expected: schema.feature_count(),
                    found: inst.values.len(),
                });
            }
            for (attr, value) in schema.features().zip(&inst.values) {
                if !value.matches_kind(attr.kind) {
                    return Err(Error::KindMismatch {
                        instance: inst.id.clone(),
                        attribute: attr.name.clone(),
                        expected: attr.kind.to_string(),
                    });
                }
            }
        }
        Ok(Dataset {
            schema,
            instances,
            index,
            normalized: false,
        })
    }

    pub fn load_files(schema_path: &Path, records_path: &Path) -> Result<Self> {
        let schema = std::fs::read_to_string(schema_path).map_err(|e| Error::io(schema_path, e))?;
        let records =
            std::fs::read_to_string(records_path).map_err(|e| Error::io(records_path, e))?;
        load_dataset(&schema, &records)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&Instance> {
        self.position(id).map(|i| &self.instances[i])
    }

    pub fn require(&self, id: &str) -> Result<&Instance> {
        self.get(id)
            .ok_or_else(|| Error::UnknownInstance(id.to_owned()))
    }

    pub fn value(&self, id: &str, attribute: &str) -> Option<&AttributeValue> {
        let pos = self.schema.feature_position(attribute)?;
        self.get(id).map(|inst| &inst.values[pos])
    }

    /// Value of a numerical feature in its original units, undoing
    /// normalization when it has been applied.
    pub fn raw_numeric(&self, instance: &Instance, position: usize) -> Option<f64> {
        let v = instance.values.get(position)?.as_f64()?;
        if !self.normalized {
            return Some(v);
        }
        let attr = self.schema.feature(position);
        let (min, max) = (attr.observed_min?, attr.observed_max?);
        Some(min + v * (max - min))
    }

    /// Human-readable name: the `name` display field when present,
    /// otherwise the id.
    pub fn display_name<'a>(&self, instance: &'a Instance) -> &'a str {
        instance
            .display
            .get("name")
            .map(String::as_str)
            .unwrap_or(&instance.id)
    }

    /// Fraction of instances with a non-missing value, per feature.
    pub fn coverage(&self) -> Vec<f64> {
        let n = self.instances.len().max(1) as f64;
        (0..self.schema.feature_count())
            .map(|p| {
                self.instances
                    .iter()
                    .filter(|inst| !inst.values[p].is_missing())
                    .count() as f64
                    / n
            })
            .collect()
    }

    pub fn summary(&self) -> DatasetSummary {
        let coverage = self.coverage();
        DatasetSummary {
            instances: self.instances.len(),
            normalized: self.normalized,
            attributes: self
                .schema
                .features()
                .zip(coverage)
                .map(|(a, coverage)| AttributeSummary {
                    name: a.name.clone(),
                    kind: a.kind,
                    role: a.role,
                    coverage,
                })
                .collect(),
        }
    }

    /// Rescales numerical features to `[0, 1]` by observed min/max and
    /// indexes categorical frequencies. A dataset that is already
    /// normalized is returned unchanged, so the observed domain of the raw
    /// values is never lost.
    pub fn normalize(mut self) -> Self {
        if self.normalized {
            return self;
        }
        for p in 0..self.schema.feature_count() {
            match self.schema.feature(p).kind {
                AttributeKind::Numerical => self.normalize_numeric(p),
                AttributeKind::Categorical => self.index_categories(p),
                AttributeKind::Boolean => {}
            }
        }
        self.normalized = true;
        self
    }

    fn normalize_numeric(&mut self, p: usize) {
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for inst in &self.instances {
            if let Some(v) = inst.values[p].as_f64() {
                min = min.min(v);
                max = max.max(v);
            }
        }
        let attr = self.schema.feature_mut(p);
        if min > max {
            // no observations at all
            attr.zero_variance = true;
            return;
        }
        attr.observed_min = Some(min);
        attr.observed_max = Some(max);
        attr.zero_variance = max == min;
        let span = max - min;
        for inst in &mut self.instances {
            if let AttributeValue::Numerical(v) = &mut inst.values[p] {
                *v = if span > 0.0 {
                    ((*v - min) / span).clamp(0.0, 1.0)
                } else {
                    0.0
                };
            }
        }
    }

    fn index_categories(&mut self, p: usize) {
        let mut freq = BTreeMap::new();
        for inst in &self.instances {
            if let Some(tok) = inst.values[p].as_token() {
                *freq.entry(tok.to_owned()).or_insert(0) += 1;
            }
        }
        self.schema.feature_mut(p).category_frequencies = freq;
    }

    /// Removes feature attributes, then instances, whose non-missing
    /// fraction falls below `min_coverage`.
    pub fn drop_sparse(mut self, min_coverage: f64) -> Result<Self> {
        if !(min_coverage > 0.0 && min_coverage <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "min_coverage must lie in (0, 1], got {min_coverage}"
            )));
        }
        let keep: Vec<bool> = self
            .coverage()
            .into_iter()
            .map(|c| c >= min_coverage)
            .collect();
        if !keep.iter().any(|k| *k) {
            return Err(Error::DegenerateDataset(
                "no feature attribute meets the coverage threshold".into(),
            ));
        }
        if keep.iter().any(|k| !*k) {
            self.schema.retain_features(&keep);
            for inst in &mut self.instances {
                let values = std::mem::take(&mut inst.values);
                inst.values = values
                    .into_iter()
                    .zip(&keep)
                    .filter(|(_, k)| **k)
                    .map(|(v, _)| v)
                    .collect();
            }
        }
        self.instances
            .retain(|inst| inst.coverage() >= min_coverage);
        if self.instances.is_empty() {
            return Err(Error::DegenerateDataset(
                "no instance meets the coverage threshold".into(),
            ));
        }
        self.reindex();
        if self.normalized {
            for p in 0..self.schema.feature_count() {
                if self.schema.feature(p).kind == AttributeKind::Categorical {
                    self.index_categories(p);
                }
            }
        }
        Ok(self)
    }

    fn reindex(&mut self) {
        self.index = self
            .instances
            .iter()
            .enumerate()
            .map(|(i, inst)| (inst.id.clone(), i))
            .collect();
    }
}

fn parse_cell(kind: AttributeKind, cell: &str) -> AttributeValue {
    let cell = cell.trim();
    if cell.is_empty() {
        return AttributeValue::Missing;
    }
    match kind {
        AttributeKind::Numerical => match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => AttributeValue::Numerical(v),
            _ => AttributeValue::Missing,
        },
        AttributeKind::Categorical => AttributeValue::Categorical(cell.to_owned()),
        AttributeKind::Boolean => match cell.to_ascii_lowercase().as_str() {
            "true" | "1" => AttributeValue::Boolean(true),
            "false" | "0" => AttributeValue::Boolean(false),
            _ => AttributeValue::Missing,
        },
    }
}

/// Parses a schema document and comma-delimited records with a header row.
/// Empty or unparsable cells become [`AttributeValue::Missing`].
pub fn load_dataset(schema_source: &str, records_source: &str) -> Result<Dataset> {
    let schema = Schema::parse(schema_source)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(records_source.as_bytes());
    let headers = reader.headers()?.clone();

    enum Slot {
        Id,
        Display(String),
        Feature(usize),
    }
    let mut slots = Vec::with_capacity(headers.len());
    for column in headers.iter() {
        let attr = schema
            .attribute(column)
            .ok_or_else(|| Error::UnknownColumn {
                row: 1,
                column: column.to_owned(),
            })?;
        slots.push(match attr.role {
            AttributeRole::Id => Slot::Id,
            AttributeRole::Display => Slot::Display(attr.name.clone()),
            AttributeRole::Feature => Slot::Feature(
                schema
                    .feature_position(&attr.name)
                    .expect("feature attribute has a position"),
            ),
        });
    }
    if !slots.iter().any(|s| matches!(s, Slot::Id)) {
        return Err(Error::SchemaParse(format!(
            "records header lacks the id column `{}`",
            schema.id_attribute().name
        )));
    }

    let mut instances = Vec::new();
    let mut seen = HashSet::new();
    for (i, record) in reader.records().enumerate() {
        // header is row 1
        let row = i + 2;
        let record = record?;
        let mut id = None;
        let mut display = BTreeMap::new();
        let mut values = vec![AttributeValue::Missing; schema.feature_count()];
        for (slot, cell) in slots.iter().zip(record.iter()) {
            match slot {
                Slot::Id if !cell.is_empty() => id = Some(cell.to_owned()),
                Slot::Id => {}
                Slot::Display(name) if !cell.is_empty() => {
                    display.insert(name.clone(), cell.to_owned());
                }
                Slot::Display(_) => {}
                Slot::Feature(p) => values[*p] = parse_cell(schema.feature(*p).kind, cell),
            }
        }
        let id = id.ok_or(Error::MissingId { row })?;
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateInstance(id));
        }
        instances.push(Instance {
            id,
            display,
            values,
        });
    }
    Dataset::new(schema, instances)
}
