//! Clustering methods shared by `eval` and `bench`.

use anyhow::Result;
use mgctm::baselines::{fit_lda, lda_kmeans, lda_naive_cluster, tfidf_kmeans, KMeansConfig, LdaConfig};
use mgctm::corpus::Corpus;
use mgctm::eval::ClusterLabels;
use mgctm::mgctm::{fit, predict_labels, FitReport, HyperConfig, InitScheme, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum Method {
    Mgctm,
    LdaNaive,
    LdaKmeans,
    Kmeans,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Mgctm => "mgctm",
            Method::LdaNaive => "lda-naive",
            Method::LdaKmeans => "lda-kmeans",
            Method::Kmeans => "kmeans",
        }
    }
}

/// LDA with one topic per cluster, read out by each document's dominant topic.
pub fn lda_naive(corpus: &Corpus, clusters: usize, lda: &LdaConfig) -> Result<ClusterLabels> {
    let (model, _) = fit_lda(corpus, &LdaConfig { num_topics: clusters, ..lda.clone() })?;
    Ok(lda_naive_cluster(&model))
}

/// MGCTM fit, initialized from LDA+Naive labels when the config asks for it.
pub fn fit_mgctm(
    corpus: &Corpus,
    config: &HyperConfig,
    lda: &LdaConfig,
) -> Result<(ModelParams, ClusterLabels, FitReport)> {
    let init = match config.init_scheme {
        InitScheme::FromLabels => Some(lda_naive(corpus, config.num_clusters, lda)?),
        InitScheme::Random => None,
    };
    let (params, states, report) = fit(corpus, config, init.as_ref())?;
    let labels = predict_labels(&states, config.num_clusters);
    Ok((params, labels, report))
}

pub struct MethodSettings<'a> {
    pub clusters: usize,
    pub hyper: &'a HyperConfig,
    pub lda: &'a LdaConfig,
    /// Topic count for LDA+Kmeans.
    pub lda_topics: usize,
    pub kmeans: &'a KMeansConfig,
}

pub fn cluster(method: Method, corpus: &Corpus, s: &MethodSettings) -> Result<ClusterLabels> {
    Ok(match method {
        Method::Mgctm => {
            let config = HyperConfig { num_clusters: s.clusters, ..s.hyper.clone() };
            fit_mgctm(corpus, &config, s.lda)?.1
        }
        Method::LdaNaive => lda_naive(corpus, s.clusters, s.lda)?,
        Method::LdaKmeans => {
            lda_kmeans(corpus, &LdaConfig { num_topics: s.lda_topics, ..s.lda.clone() }, s.clusters, s.kmeans)?
        }
        Method::Kmeans => tfidf_kmeans(corpus, s.clusters, s.kmeans)?,
    })
}

/// Number of distinct classes in a label vector.
pub fn num_classes(labels: &[usize]) -> usize {
    let mut seen: Vec<usize> = labels.to_vec();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}
