//! Forward sampling from the generative process.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Gamma, Poisson};
use serde::{Deserialize, Serialize};

use super::params::ModelParams;
use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};

/// Number of tokens per sampled document.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocLength {
    Fixed(usize),
    /// Poisson with the given mean, redrawn until at least one token.
    Poisson(f64),
}

/// One sampled token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenDraw {
    pub word: usize,
    /// `true` when drawn from a local topic (δ = 1).
    pub local: bool,
    /// Local topic id within the document's cluster, or global topic id.
    pub topic: usize,
}

/// Hidden variables of one sampled document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocDraw {
    pub cluster: usize,
    pub omega: f64,
    pub local_proportions: Vec<f64>,
    pub global_proportions: Vec<f64>,
    pub tokens: Vec<TokenDraw>,
}

/// Hidden variables for a whole sampled corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenAssignments {
    pub docs: Vec<DocDraw>,
}

impl HiddenAssignments {
    pub fn clusters(&self) -> Vec<usize> {
        self.docs.iter().map(|d| d.cluster).collect()
    }
}

/// Dirichlet draw computed in log space so tiny concentrations do not
/// underflow to an all-zero vector.
pub(crate) fn sample_dirichlet(alpha: &[f64], rng: &mut impl Rng) -> Result<Vec<f64>> {
    let mut logs = Vec::with_capacity(alpha.len());
    for &a in alpha {
        // Gamma(a) = Gamma(a + 1) * U^(1/a)
        let g = Gamma::new(a + 1.0, 1.0).map_err(|e| Error::Config(format!("bad concentration {a}: {e}")))?;
        let x: f64 = g.sample(rng);
        let u: f64 = 1.0 - rng.random::<f64>();
        logs.push(x.ln() + u.ln() / a);
    }
    crate::numerics::log_normalize_in_place(&mut logs)?;
    Ok(logs)
}

fn doc_length(spec: DocLength, rng: &mut impl Rng) -> Result<usize> {
    match spec {
        DocLength::Fixed(n) => Ok(n),
        DocLength::Poisson(mean) => {
            let p = Poisson::new(mean).map_err(|e| Error::Config(format!("bad Poisson mean {mean}: {e}")))?;
            loop {
                let n: f64 = p.sample(rng);
                if n >= 1.0 {
                    return Ok(n as usize);
                }
            }
        }
    }
}

fn weighted_index(weights: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(weights).map_err(|e| Error::Config(format!("invalid categorical weights: {e}")))
}

/// Draws `num_docs` documents from the model. Deterministic for a given seed.
pub fn sample_corpus(
    params: &ModelParams,
    num_docs: usize,
    length: DocLength,
    seed: u64,
) -> Result<(Corpus, HiddenAssignments)> {
    params.validate()?;
    if params.num_global_topics() == 0 {
        return Err(Error::Config(
            "sampling needs at least one global topic: ω ~ Beta(γ) can always pick δ = 0".into(),
        ));
    }
    if num_docs == 0 {
        return Err(Error::Config("num_docs must be at least 1".into()));
    }
    if let DocLength::Fixed(0) = length {
        return Err(Error::Config("documents need at least one token".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cluster_dist = weighted_index(&params.pi)?;
    let local_word_dists: Vec<Vec<WeightedIndex<f64>>> = params
        .local_topics
        .iter()
        .map(|c| c.iter().map(|row| weighted_index(row)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let global_word_dists: Vec<WeightedIndex<f64>> =
        params.global_topics.iter().map(|row| weighted_index(row)).collect::<Result<_>>()?;

    let mut docs = Vec::with_capacity(num_docs);
    let mut draws = Vec::with_capacity(num_docs);
    for _ in 0..num_docs {
        let cluster = cluster_dist.sample(&mut rng);
        let local_props = sample_dirichlet(&params.local_priors[cluster], &mut rng)?;
        let global_props = sample_dirichlet(&params.global_prior, &mut rng)?;
        let omega = sample_dirichlet(&params.gamma, &mut rng)?[0];
        let local_topic = weighted_index(&local_props)?;
        let global_topic = weighted_index(&global_props)?;
        let n = doc_length(length, &mut rng)?;
        let mut tokens = Vec::with_capacity(n);
        for _ in 0..n {
            let local = rng.random::<f64>() < omega;
            let (topic, word) = if local {
                let z = local_topic.sample(&mut rng);
                (z, local_word_dists[cluster][z].sample(&mut rng))
            } else {
                let z = global_topic.sample(&mut rng);
                (z, global_word_dists[z].sample(&mut rng))
            };
            tokens.push(TokenDraw { word, local, topic });
        }
        let words: Vec<usize> = tokens.iter().map(|t| t.word).collect();
        docs.push(Document::from_tokens(&words).with_label(cluster));
        draws.push(DocDraw {
            cluster,
            omega,
            local_proportions: local_props,
            global_proportions: global_props,
            tokens,
        });
    }
    let corpus = Corpus::new(docs, params.vocab_size())?;
    Ok((corpus, HiddenAssignments { docs: draws }))
}

/// Random parameters for synthetic experiments: topics drawn from a
/// symmetric Dirichlet with the given concentration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub num_clusters: usize,
    pub local_topics_per_cluster: usize,
    pub num_global_topics: usize,
    pub vocab_size: usize,
    pub topic_concentration: f64,
    pub local_prior: f64,
    pub global_prior: f64,
    pub gamma: [f64; 2],
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            num_clusters: 3,
            local_topics_per_cluster: 3,
            num_global_topics: 2,
            vocab_size: 50,
            topic_concentration: 0.1,
            local_prior: 0.5,
            global_prior: 0.5,
            gamma: [4.0, 2.0],
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn generate(&self) -> Result<ModelParams> {
        let (j, k, r, v) = (
            self.num_clusters,
            self.local_topics_per_cluster,
            self.num_global_topics,
            self.vocab_size,
        );
        if j == 0 || k == 0 || r == 0 || v == 0 {
            return Err(Error::Config("generator needs J, K, R, V >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let beta = vec![self.topic_concentration; v];
        let local_topics = (0..j)
            .map(|_| (0..k).map(|_| sample_dirichlet(&beta, &mut rng)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let global_topics = (0..r).map(|_| sample_dirichlet(&beta, &mut rng)).collect::<Result<Vec<_>>>()?;
        let params = ModelParams {
            pi: vec![1.0 / j as f64; j],
            gamma: self.gamma,
            local_priors: vec![vec![self.local_prior; k]; j],
            global_prior: vec![self.global_prior; r],
            local_topics,
            global_topics,
        };
        params.validate()?;
        Ok(params)
    }
}
