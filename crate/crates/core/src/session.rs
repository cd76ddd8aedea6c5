//! One user's interactive loop: dataset, label log and current model.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::active::{suggest_candidates, Side, SuggestionSet, DEFAULT_K_SUGGEST};
use crate::dataset::{Dataset, DEFAULT_MIN_COVERAGE};
use crate::error::Result;
use crate::model::{compute_weights, update_model, LabelSource, ModelState, SimilarityLabel};
use crate::retrieval::{knn, search_instances, RetrievalResult, DEFAULT_K_RETRIEVE};
use crate::store::LabelLog;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub k_suggest: usize,
    pub k_retrieve: usize,
    pub min_coverage: f64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            k_suggest: DEFAULT_K_SUGGEST,
            k_retrieve: DEFAULT_K_RETRIEVE,
            min_coverage: DEFAULT_MIN_COVERAGE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub id: String,
    pub name: String,
    pub display: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryItem {
    #[serde(flatten)]
    pub label: SimilarityLabel,
    pub superseded: bool,
    pub a: InstanceSummary,
    pub b: InstanceSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub total: usize,
    pub active: usize,
    /// Most recent first.
    pub entries: Vec<HistoryItem>,
}

#[derive(Debug)]
pub struct Session {
    dataset: Arc<Dataset>,
    model: Arc<ModelState>,
    log: LabelLog,
    config: SessionConfig,
}

impl Session {
    /// Builds a session over a normalized dataset, training the model on
    /// whatever labels the log already holds.
    pub fn new(dataset: Dataset, log: LabelLog, config: SessionConfig) -> Result<Self> {
        let dataset = dataset.normalize();
        let usable: Vec<SimilarityLabel> = log
            .active()
            .into_iter()
            .filter(|l| {
                let ok = l.validate(&dataset).is_ok();
                if !ok {
                    log::warn!("ignoring logged label {}-{}: not in dataset", l.a, l.b);
                }
                ok
            })
            .collect();
        // iteration counts submissions, including superseded ones
        let model = compute_weights(&usable, &dataset)?.with_iteration(log.len());
        Ok(Session {
            dataset: Arc::new(dataset),
            model: Arc::new(model),
            log,
            config,
        })
    }

    pub fn open(
        schema: &Path,
        records: &Path,
        labels: Option<&Path>,
        config: SessionConfig,
    ) -> Result<Self> {
        let dataset = Dataset::load_files(schema, records)?.drop_sparse(config.min_coverage)?;
        let log = match labels {
            Some(p) => LabelLog::open(p)?,
            None => LabelLog::in_memory(),
        };
        Session::new(dataset, log, config)
    }

    pub fn dataset(&self) -> &Arc<Dataset> {
        &self.dataset
    }

    pub fn model(&self) -> &Arc<ModelState> {
        &self.model
    }

    pub fn log(&self) -> &LabelLog {
        &self.log
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    /// Validates, persists and learns from one label.
    pub fn add_label(
        &mut self,
        a: &str,
        b: &str,
        score: f64,
        source: LabelSource,
    ) -> Result<Arc<ModelState>> {
        let label = SimilarityLabel::new(a, b, score, source)?;
        label.validate(&self.dataset)?;
        let previous: Vec<SimilarityLabel> = self.usable_labels();
        let next = update_model(&self.model, &label, &previous, &self.dataset)?;
        self.log.append(label)?;
        self.model = Arc::new(next);
        Ok(self.model.clone())
    }

    fn usable_labels(&self) -> Vec<SimilarityLabel> {
        self.log
            .active()
            .into_iter()
            .filter(|l| l.validate(&self.dataset).is_ok())
            .collect()
    }

    pub fn summary(&self, id: &str) -> Option<InstanceSummary> {
        self.dataset.get(id).map(|inst| InstanceSummary {
            id: inst.id.clone(),
            name: self.dataset.display_name(inst).to_owned(),
            display: inst.display.clone(),
        })
    }

    pub fn search(&self, query: &str, limit: usize) -> Vec<InstanceSummary> {
        search_instances(query, &self.dataset, limit)
            .iter()
            .filter_map(|id| self.summary(id))
            .collect()
    }

    pub fn suggest(&self, anchor: &str, side: Side, k: Option<usize>) -> Result<SuggestionSet> {
        suggest_candidates(
            anchor,
            side,
            k.unwrap_or(self.config.k_suggest),
            &self.model,
            &self.log.active(),
            &self.dataset,
        )
    }

    pub fn knn(&self, query: &str, k: Option<usize>) -> Result<RetrievalResult> {
        knn(
            query,
            k.unwrap_or(self.config.k_retrieve),
            &self.model,
            &self.dataset,
        )
    }

    pub fn history(&self, limit: Option<usize>) -> History {
        let entries = self.log.history();
        let placeholder = |id: &str| InstanceSummary {
            id: id.to_owned(),
            name: id.to_owned(),
            display: BTreeMap::new(),
        };
        History {
            total: entries.len(),
            active: self.log.active_count(),
            entries: entries
                .iter()
                .rev()
                .take(limit.unwrap_or(usize::MAX))
                .map(|e| HistoryItem {
                    label: e.label.clone(),
                    superseded: e.superseded,
                    a: self
                        .summary(&e.label.a)
                        .unwrap_or_else(|| placeholder(&e.label.a)),
                    b: self
                        .summary(&e.label.b)
                        .unwrap_or_else(|| placeholder(&e.label.b)),
                })
                .collect(),
        }
    }
}
