//! The multi-grain clustering topic model.
//!
//! Each document picks a cluster η ~ Multi(π); its words come either from
//! the cluster's own local topics (mixed by θ^(l) ~ Dir(α^(l)_η)) or from
//! topics shared by all clusters (mixed by θ^(g) ~ Dir(α^(g))). A per-document
//! ω ~ Beta(γ) sets the odds of the local pathway for each word. Inference is
//! mean-field variational EM.

mod elbo;
mod estep;
mod fit;
mod io;
mod mstep;
mod params;
mod sampler;
mod state;
#[cfg(test)]
mod testutil;

pub use elbo::{doc_elbo_terms, elbo, elbo_terms, ElboTerms};
pub use estep::{e_step_doc, update_block, Block, INNER_REL_TOL};
pub use fit::{
    fit, fit_from, infer, init_model, predict_cluster, predict_labels, top_words, FitReport, TopicRef,
    MONOTONE_SLACK,
};
pub use io::{ModelFile, MODEL_FORMAT, MODEL_VERSION};
pub use mstep::{m_step, EMPTY_CLUSTER_MASS, TOPIC_SMOOTHING};
pub use params::{HyperConfig, InitScheme, ModelParams, PriorUpdate};
pub use sampler::{sample_corpus, DocDraw, DocLength, GeneratorConfig, HiddenAssignments, TokenDraw};
pub use state::DocVariational;

pub(crate) use fit::perturbed_uniform;
