//! Joint document clustering and multi-grain topic modeling.
//!
//! * [`corpus`]: sparse bag-of-words input, vocabularies, tf-idf vectors.
//! * [`numerics`]: digamma, log-gamma and Dirichlet maximum likelihood.
//! * [`mgctm`]: the clustering topic model with local and global topics.
//! * [`baselines`]: variational LDA, LDA+Naive, LDA+K-means and K-means.
//! * [`eval`]: clustering accuracy and normalized mutual information.

pub mod baselines;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod mgctm;
pub mod numerics;

pub use error::{Error, Result};
