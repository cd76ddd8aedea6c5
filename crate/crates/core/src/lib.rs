//! Interactive similarity learning over mixed-type records.
//!
//! A user labels pairs of instances with a similarity score in `[0, 1]`.
//! Every attribute is correlated with that feedback to obtain a weight, and
//! the weights drive a mixed-type distance (weighted Euclidean for numbers,
//! Goodall for categories, weighted Jaccard for flags) that powers active
//! suggestions and explainable nearest-neighbor retrieval.

pub mod active;
pub mod dataset;
pub mod distance;
pub mod error;
pub mod experiments;
pub mod model;
pub mod retrieval;
pub mod service;
pub mod session;
pub mod store;
pub mod synth;

pub use active::{suggest_candidates, Side, SuggestionSet};
pub use dataset::{
    Attribute, AttributeKind, AttributeRole, AttributeValue, Dataset, Instance, Schema,
};
pub use distance::{combined_distance, CombinedDistance};
pub use error::{Error, Result};
pub use model::{compute_weights, update_model, LabelSource, ModelState, SimilarityLabel};
pub use retrieval::{knn, search_instances, top_contributing_attributes, RetrievalResult};
pub use session::{Session, SessionConfig};
pub use store::LabelLog;
