//! Latent Dirichlet allocation with mean-field variational EM.
//!
//! Topics carry a symmetric Dirichlet(η) prior and their own variational
//! Dirichlet factors; document proportions carry a symmetric Dirichlet(α).
//! Both priors stay fixed.

use std::time::Instant;

use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};
use crate::eval::{argmax, ClusterLabels};
use crate::mgctm::{perturbed_uniform, FitReport, MONOTONE_SLACK};
use crate::numerics::{dirichlet_expected_log, dirichlet_log_norm, log_gamma_unchecked};

pub const LDA_FORMAT: &str = "lda-model";
pub const LDA_VERSION: u32 = 1;

// Documents handled per parallel batch when accumulating topic statistics.
const BATCH: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LdaConfig {
    pub num_topics: usize,
    pub alpha: f64,
    pub eta: f64,
    pub max_iters: usize,
    pub e_step_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self {
            num_topics: 60,
            alpha: 0.1,
            eta: 0.01,
            max_iters: 100,
            e_step_iters: 50,
            tol: 1e-5,
            seed: 0,
        }
    }
}

impl LdaConfig {
    pub fn with_topics(num_topics: usize) -> Self {
        Self { num_topics, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_topics == 0 {
            return Err(Error::Config("LDA needs at least one topic".into()));
        }
        if !(self.alpha > 0.0) || !(self.eta > 0.0) {
            return Err(Error::Config("LDA priors must be positive".into()));
        }
        if !(self.tol > 0.0) || self.e_step_iters == 0 {
            return Err(Error::Config("LDA tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// A fitted LDA model.
///
/// `topics` holds the posterior-mean topic-word distributions,
/// `topic_lambda` their variational Dirichlet parameters and `doc_theta`
/// the variational Dirichlet parameters of each document's proportions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub format: String,
    pub version: u32,
    pub alpha: f64,
    pub eta: f64,
    pub topics: Vec<Vec<f64>>,
    pub topic_lambda: Vec<Vec<f64>>,
    pub doc_theta: Vec<Vec<f64>>,
}

impl LdaModel {
    pub fn num_topics(&self) -> usize {
        self.topics.len()
    }

    /// Each document's normalized topic proportions.
    pub fn proportions(&self) -> Vec<Vec<f64>> {
        self.doc_theta
            .iter()
            .map(|row| {
                let s: f64 = row.iter().sum();
                row.iter().map(|x| x / s).collect()
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if m.format != LDA_FORMAT || m.version != LDA_VERSION {
            return Err(Error::Format(format!("expected {LDA_FORMAT} v{LDA_VERSION}")));
        }
        Ok(m)
    }
}

/// `E[ln β_tv]` laid out word-major: `[v * T + t]`.
struct TopicExpectations {
    by_word: Vec<f64>,
    num_topics: usize,
}

impl TopicExpectations {
    fn new(lambda: &[Vec<f64>]) -> Self {
        let t = lambda.len();
        let v = lambda.first().map_or(0, Vec::len);
        let mut by_word = vec![0.0; v * t];
        let mut row = vec![0.0; v];
        for (ti, l) in lambda.iter().enumerate() {
            dirichlet_expected_log(l, &mut row);
            for (w, &e) in row.iter().enumerate() {
                by_word[w * t + ti] = e;
            }
        }
        Self { by_word, num_topics: t }
    }

    fn row(&self, word: usize) -> &[f64] {
        &self.by_word[word * self.num_topics..(word + 1) * self.num_topics]
    }
}

/// Optimal word-topic responsibilities for the given document factor.
/// Returns `(phi, doc_bound)` where `doc_bound` is the document's share of
/// the ELBO at that optimum.
fn doc_phi(doc: &Document, gamma: &[f64], topics: &TopicExpectations, alpha: f64) -> (Vec<f64>, f64) {
    let t = gamma.len();
    let mut e_theta = vec![0.0; t];
    dirichlet_expected_log(gamma, &mut e_theta);
    let mut phi = vec![0.0; doc.entries().len() * t];
    // Σ_v c_v log Σ_t exp(E ln θ_t + E ln β_tv) is the word part at the optimum.
    let mut words = 0.0;
    for (i, &(w, c)) in doc.entries().iter().enumerate() {
        let row = topics.row(w);
        let slot = &mut phi[i * t..(i + 1) * t];
        let mut max = f64::NEG_INFINITY;
        for ti in 0..t {
            slot[ti] = e_theta[ti] + row[ti];
            max = max.max(slot[ti]);
        }
        let mut total = 0.0;
        for x in slot.iter_mut() {
            *x = (*x - max).exp();
            total += *x;
        }
        for x in slot.iter_mut() {
            *x /= total;
        }
        words += f64::from(c) * (max + total.ln());
    }
    let prior = log_gamma_unchecked(alpha * t as f64) - t as f64 * log_gamma_unchecked(alpha)
        + (alpha - 1.0) * e_theta.iter().sum::<f64>();
    let q = dirichlet_log_norm(gamma)
        + gamma.iter().zip(&e_theta).map(|(&g, &e)| (g - 1.0) * e).sum::<f64>();
    (phi, prior + words - q)
}

fn doc_e_step(doc: &Document, gamma: &mut [f64], topics: &TopicExpectations, cfg: &LdaConfig) {
    let t = gamma.len();
    let mut next = vec![0.0; t];
    for _ in 0..cfg.e_step_iters {
        let (phi, _) = doc_phi(doc, gamma, topics, cfg.alpha);
        next.iter_mut().for_each(|x| *x = cfg.alpha);
        for (i, &(_, c)) in doc.entries().iter().enumerate() {
            for ti in 0..t {
                next[ti] += f64::from(c) * phi[i * t + ti];
            }
        }
        let change = gamma.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum::<f64>() / t as f64;
        gamma.copy_from_slice(&next);
        if change < 1e-6 {
            break;
        }
    }
}

fn topic_bound(lambda: &[Vec<f64>], eta: f64) -> f64 {
    let mut total = 0.0;
    for l in lambda {
        let v = l.len() as f64;
        let mut e = vec![0.0; l.len()];
        dirichlet_expected_log(l, &mut e);
        let prior = log_gamma_unchecked(eta * v) - v * log_gamma_unchecked(eta)
            + (eta - 1.0) * e.iter().sum::<f64>();
        let q = dirichlet_log_norm(l) + l.iter().zip(&e).map(|(&a, &b)| (a - 1.0) * b).sum::<f64>();
        total += prior - q;
    }
    total
}

/// Document bounds computed in parallel, summed in document order.
fn corpus_bound(corpus: &Corpus, gammas: &[Vec<f64>], topics: &TopicExpectations, lambda: &[Vec<f64>], cfg: &LdaConfig) -> f64 {
    let per_doc: Vec<f64> = corpus
        .docs()
        .par_iter()
        .zip(gammas.par_iter())
        .map(|(doc, g)| doc_phi(doc, g, topics, cfg.alpha).1)
        .collect();
    per_doc.iter().sum::<f64>() + topic_bound(lambda, cfg.eta)
}

/// Fits LDA; the returned report carries the ELBO trace.
pub fn fit_lda(corpus: &Corpus, cfg: &LdaConfig) -> Result<(LdaModel, FitReport)> {
    cfg.validate()?;
    if corpus.num_docs() == 0 {
        return Err(Error::EmptyCorpus);
    }
    let start = Instant::now();
    let t = cfg.num_topics;
    let v = corpus.vocab_size();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let scale = corpus.num_tokens() as f64 / t as f64;
    let mut lambda: Vec<Vec<f64>> = (0..t)
        .map(|_| {
            perturbed_uniform(v, 0.5, &mut rng)
                .into_iter()
                .map(|p| cfg.eta + scale * p)
                .collect()
        })
        .collect();
    let mut gammas: Vec<Vec<f64>> = corpus
        .docs()
        .iter()
        .map(|d| vec![cfg.alpha + d.length() as f64 / t as f64; t])
        .collect();

    let mut trace = Vec::new();
    let mut converged = false;
    for iteration in 0..cfg.max_iters {
        let topics = TopicExpectations::new(&lambda);
        corpus
            .docs()
            .par_iter()
            .zip(gammas.par_iter_mut())
            .for_each(|(doc, g)| doc_e_step(doc, g, &topics, cfg));

        let mut counts = vec![vec![cfg.eta; v]; t];
        for (docs, gs) in corpus.docs().chunks(BATCH).zip(gammas.chunks(BATCH)) {
            let phis: Vec<Vec<f64>> = docs
                .par_iter()
                .zip(gs.par_iter())
                .map(|(doc, g)| doc_phi(doc, g, &topics, cfg.alpha).0)
                .collect();
            for (doc, phi) in docs.iter().zip(&phis) {
                for (i, &(w, c)) in doc.entries().iter().enumerate() {
                    for (ti, row) in counts.iter_mut().enumerate() {
                        row[w] += f64::from(c) * phi[i * t + ti];
                    }
                }
            }
        }
        lambda = counts;

        let value = corpus_bound(corpus, &gammas, &TopicExpectations::new(&lambda), &lambda, cfg);
        if !value.is_finite() {
            return Err(Error::Numerical { block: "lda_elbo" });
        }
        info!("lda iteration {iteration}: elbo = {value:.6}");
        if let Some(&prev) = trace.last() {
            let prev: f64 = prev;
            if value < prev - MONOTONE_SLACK * prev.abs() {
                return Err(Error::ElboDecrease {
                    iteration,
                    previous: prev,
                    current: value,
                    breakdown: String::new(),
                });
            }
            trace.push(value);
            if ((value - prev) / prev.abs()).abs() < cfg.tol {
                converged = true;
                break;
            }
        } else {
            trace.push(value);
        }
    }

    let topics = lambda
        .iter()
        .map(|l| {
            let s: f64 = l.iter().sum();
            l.iter().map(|x| x / s).collect()
        })
        .collect();
    let model = LdaModel {
        format: LDA_FORMAT.into(),
        version: LDA_VERSION,
        alpha: cfg.alpha,
        eta: cfg.eta,
        topics,
        topic_lambda: lambda,
        doc_theta: gammas,
    };
    let report = FitReport {
        iterations_run: trace.len(),
        elbo_trace: trace,
        converged,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok((model, report))
}

/// Assigns each document to its dominant topic.
pub fn lda_naive_cluster(model: &LdaModel) -> ClusterLabels {
    let labels = model.proportions().iter().map(|row| argmax(row)).collect();
    ClusterLabels::new(labels, model.num_topics()).expect("argmax is a valid topic")
}
