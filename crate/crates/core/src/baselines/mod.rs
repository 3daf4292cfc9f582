//! Comparison methods: variational LDA with two clustering read-outs and
//! k-means on tf-idf vectors.

mod kmeans;
mod lda;

pub use kmeans::{kmeans, KMeansConfig, KMeansResult};
pub use lda::{fit_lda, lda_naive_cluster, LdaConfig, LdaModel, LDA_FORMAT, LDA_VERSION};

use crate::corpus::{tfidf_vectors, Corpus};
use crate::error::Result;
use crate::eval::ClusterLabels;

/// Clusters the normalized topic proportions of a fitted LDA model.
pub fn proportions_kmeans(model: &LdaModel, k: usize, cfg: &KMeansConfig) -> Result<ClusterLabels> {
    Ok(kmeans(&model.proportions(), k, cfg)?.labels)
}

/// Fits LDA, then runs k-means on the documents' topic proportions.
pub fn lda_kmeans(corpus: &Corpus, lda: &LdaConfig, k: usize, km: &KMeansConfig) -> Result<ClusterLabels> {
    let (model, _) = fit_lda(corpus, lda)?;
    proportions_kmeans(&model, k, km)
}

/// K-means on tf-idf document vectors.
pub fn tfidf_kmeans(corpus: &Corpus, k: usize, cfg: &KMeansConfig) -> Result<ClusterLabels> {
    Ok(kmeans(&tfidf_vectors(corpus), k, cfg)?.labels)
}
