use std::time::Instant;

use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::elbo::{corpus_elbo_prepared, ElboTerms};
use super::estep::e_step_prepared;
use super::mstep::m_step_impl;
use super::params::{HyperConfig, InitScheme, ModelParams, PriorUpdate};
use super::state::{DocVariational, Prepared};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::eval::{argmax, ClusterLabels};

/// Relative slack allowed when checking that the bound never decreases.
pub const MONOTONE_SLACK: f64 = 1e-6;

/// Weight of the Dirichlet(1) noise mixed into the uniform initial topics.
const INIT_TOPIC_NOISE: f64 = 0.01;

/// Weight of the Dirichlet(1) noise mixed into seeded topics before the main
/// run, enough to split the near-identical local topics of a cluster.
const SEED_TOPIC_NOISE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub elbo_trace: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
    pub wall_time: f64,
}

/// A uniform distribution perturbed with Dirichlet(1, ..., 1) noise.
pub(crate) fn perturbed_uniform(len: usize, noise: f64, rng: &mut impl Rng) -> Vec<f64> {
    let draw = flat_dirichlet(len, rng);
    let u = 1.0 / len as f64;
    let mut row: Vec<f64> = draw.iter().map(|d| (1.0 - noise) * u + noise * d).collect();
    let total: f64 = row.iter().sum();
    row.iter_mut().for_each(|x| *x /= total);
    row
}

/// Uniform draw from the probability simplex.
pub(crate) fn flat_dirichlet(len: usize, rng: &mut impl Rng) -> Vec<f64> {
    // Normalized unit exponentials are Dirichlet(1, ..., 1).
    let mut v: Vec<f64> = (0..len).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    v
}

/// Initial parameters and per-document states.
///
/// Topics are seeded perturbed-uniform rows, π is uniform, every prior is
/// 1 and γ = (1, 1). Cluster responsibilities are 0.9 on the supplied label
/// (0.1 spread over the rest) or a random point of the simplex.
pub fn init_model(
    config: &HyperConfig,
    corpus: &Corpus,
    init_labels: Option<&ClusterLabels>,
) -> Result<(ModelParams, Vec<DocVariational>)> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let j = config.num_clusters;
    let k = config.local_topics_per_cluster;
    let r = config.num_global_topics;
    let v = corpus.vocab_size();
    if v == 0 {
        return Err(Error::Config("vocabulary is empty".into()));
    }
    let labels = match (config.init_scheme, init_labels) {
        (InitScheme::FromLabels, Some(l)) => {
            if l.len() != corpus.num_docs() {
                return Err(Error::Config(format!(
                    "{} init labels for {} documents",
                    l.len(),
                    corpus.num_docs()
                )));
            }
            if let Some(&bad) = l.labels().iter().find(|&&x| x >= j) {
                return Err(Error::Config(format!("init label {bad} is not a cluster in 0..{j}")));
            }
            Some(l.labels())
        }
        (InitScheme::FromLabels, None) => {
            return Err(Error::Config("from_labels initialization needs labels".into()))
        }
        (InitScheme::Random, _) => None,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let local_topics: Vec<Vec<Vec<f64>>> = (0..j)
        .map(|_| (0..k).map(|_| perturbed_uniform(v, INIT_TOPIC_NOISE, &mut rng)).collect())
        .collect();
    let global_topics: Vec<Vec<f64>> = (0..r).map(|_| perturbed_uniform(v, INIT_TOPIC_NOISE, &mut rng)).collect();
    let params = ModelParams {
        pi: vec![1.0 / j as f64; j],
        gamma: [1.0, 1.0],
        local_priors: vec![vec![1.0; k]; j],
        global_prior: vec![1.0; r],
        local_topics,
        global_topics,
    };

    let states = corpus
        .docs()
        .iter()
        .enumerate()
        .map(|(d, doc)| {
            let zeta = if j == 1 {
                vec![1.0]
            } else if let Some(l) = labels {
                let mut z = vec![0.1 / (j - 1) as f64; j];
                z[l[d]] = 0.9;
                z
            } else {
                flat_dirichlet(j, &mut rng)
            };
            DocVariational::symmetric(doc, &params, zeta)
        })
        .collect();
    Ok((params, states))
}

/// Full-corpus E-step. Documents are independent, so the result does not
/// depend on how they are spread across workers.
pub(crate) fn e_step_corpus(corpus: &Corpus, prep: &Prepared, states: &mut [DocVariational], iters: usize) -> Result<()> {
    corpus
        .docs()
        .par_iter()
        .zip(states.par_iter_mut())
        .try_for_each(|(doc, state)| e_step_prepared(doc, prep, state, iters).map(|_| ()))
}

/// E-step that also refits every document from uniform cluster
/// responsibilities and keeps whichever state has the higher bound.
///
/// Within one document, q(η) and the selected cluster's q(θ) reinforce each
/// other, so a warm-started state rarely leaves the cluster it already
/// favours. The fresh start lets the document move when another cluster
/// explains it better; keeping the better of the two cannot lower the ELBO.
pub(crate) fn e_step_corpus_restarting(
    corpus: &Corpus,
    prep: &Prepared,
    states: &mut [DocVariational],
    iters: usize,
) -> Result<()> {
    let j = prep.params.num_clusters();
    corpus
        .docs()
        .par_iter()
        .zip(states.par_iter_mut())
        .try_for_each(|(doc, state)| {
            let warm = e_step_prepared(doc, prep, state, iters)?;
            if j > 1 {
                let mut fresh = DocVariational::symmetric(doc, prep.params, vec![1.0 / j as f64; j]);
                if e_step_prepared(doc, prep, &mut fresh, iters)? > warm {
                    *state = fresh;
                }
            }
            Ok(())
        })
}

/// Variational EM from [`init_model`] until the relative ELBO change drops
/// below `elbo_rel_tol` or `max_em_iters` is reached.
///
/// With `EveryIter` priors and `seeding_iters > 0`, each restart is a seeding
/// run and the one with the highest ELBO starts the main run (see
/// [`HyperConfig::seeding_iters`]); the report covers the main run only.
/// Otherwise each restart is a full fit and the highest final ELBO wins.
/// Ties go to the earliest restart.
pub fn fit(
    corpus: &Corpus,
    config: &HyperConfig,
    init_labels: Option<&ClusterLabels>,
) -> Result<(ModelParams, Vec<DocVariational>, FitReport)> {
    config.validate()?;
    let seeding = config.prior_update == PriorUpdate::EveryIter && config.seeding_iters > 0 && config.max_em_iters > 0;
    let run_config = if seeding {
        HyperConfig { max_em_iters: config.seeding_iters, prior_warmup_iters: 0, ..config.clone() }
    } else {
        config.clone()
    };
    let mut best: Option<(u64, (ModelParams, Vec<DocVariational>, FitReport))> = None;
    for restart in 0..config.restarts {
        let seed = config.seed.wrapping_add(restart as u64);
        let run_config = HyperConfig { seed, ..run_config.clone() };
        let (params, states) = init_model(&run_config, corpus, init_labels)?;
        let run = fit_from(corpus, &run_config, params, states)?;
        let score = |r: &FitReport| r.elbo_trace.last().copied().unwrap_or(f64::NEG_INFINITY);
        if config.restarts > 1 {
            info!("restart {restart}: final elbo = {:.6}", score(&run.2));
        }
        if best.as_ref().is_none_or(|(_, b)| score(&run.2) > score(&b.2)) {
            best = Some((seed, run));
        }
    }
    let (seed, run) = best.expect("validate guarantees at least one restart");
    if !seeding {
        return Ok(run);
    }
    let (params, states) = release_seeding(corpus, &run.0, &run.1, seed);
    fit_from(corpus, &HyperConfig { seed, ..config.clone() }, params, states)
}

/// Main-run start from a seeding run: its cluster responsibilities, priors
/// back at 1 and topics mixed with fresh noise.
fn release_seeding(
    corpus: &Corpus,
    seeded: &ModelParams,
    seeded_states: &[DocVariational],
    seed: u64,
) -> (ModelParams, Vec<DocVariational>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = seeded.clone();
    params.gamma = [1.0, 1.0];
    params.local_priors.iter_mut().flatten().chain(params.global_prior.iter_mut()).for_each(|a| *a = 1.0);
    for row in params.local_topics.iter_mut().flatten().chain(params.global_topics.iter_mut()) {
        let noise = flat_dirichlet(row.len(), &mut rng);
        row.iter_mut()
            .zip(&noise)
            .for_each(|(x, n)| *x = (1.0 - SEED_TOPIC_NOISE) * *x + SEED_TOPIC_NOISE * n);
    }
    let states = corpus
        .docs()
        .iter()
        .zip(seeded_states)
        .map(|(doc, s)| DocVariational::symmetric(doc, &params, s.zeta.clone()))
        .collect();
    (params, states)
}

/// EM loop from explicit starting parameters and states.
pub fn fit_from(
    corpus: &Corpus,
    config: &HyperConfig,
    mut params: ModelParams,
    mut states: Vec<DocVariational>,
) -> Result<(ModelParams, Vec<DocVariational>, FitReport)> {
    config.validate()?;
    params.validate()?;
    if states.len() != corpus.num_docs() {
        return Err(Error::Dimension { expected: corpus.num_docs(), found: states.len() });
    }
    let start = Instant::now();
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut previous: Option<ElboTerms> = None;

    for iteration in 0..config.max_em_iters {
        {
            let prep = Prepared::new(&params);
            e_step_corpus_restarting(corpus, &prep, &mut states, config.e_step_iters)?;
        }
        let outcome = if iteration < config.prior_warmup_iters {
            let warmup = HyperConfig { prior_update: PriorUpdate::Fixed, ..config.clone() };
            m_step_impl(corpus, &states, &params, &warmup)?
        } else {
            m_step_impl(corpus, &states, &params, config)?
        };
        if !outcome.empty_clusters.is_empty() {
            warn!("iteration {iteration}: clusters {:?} have no responsibility mass", outcome.empty_clusters);
        }
        params = outcome.params;
        let terms = corpus_elbo_prepared(corpus, &states, &Prepared::new(&params))?;
        let value = terms.total();
        info!("iteration {iteration}: elbo = {value:.6}");

        if let Some(prev) = previous {
            let prev_total = prev.total();
            if value < prev_total - MONOTONE_SLACK * prev_total.abs() {
                return Err(Error::ElboDecrease {
                    iteration,
                    previous: prev_total,
                    current: value,
                    breakdown: format!("previous:\n{prev}\ncurrent:\n{terms}"),
                });
            }
            trace.push(value);
            let warming_up = config.prior_update == PriorUpdate::EveryIter && iteration < config.prior_warmup_iters;
            if !warming_up && ((value - prev_total) / prev_total.abs()).abs() < config.elbo_rel_tol {
                converged = true;
                break;
            }
        } else {
            trace.push(value);
        }
        previous = Some(terms);
    }

    let report = FitReport {
        iterations_run: trace.len(),
        elbo_trace: trace,
        converged,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok((params, states, report))
}

/// Cluster assignments for documents under fixed parameters, starting from
/// uniform responsibilities.
pub fn infer(corpus: &Corpus, params: &ModelParams, iters: usize) -> Result<Vec<DocVariational>> {
    params.validate()?;
    if params.vocab_size() != corpus.vocab_size() {
        return Err(Error::Dimension { expected: params.vocab_size(), found: corpus.vocab_size() });
    }
    let j = params.num_clusters();
    let mut states: Vec<DocVariational> = corpus
        .docs()
        .iter()
        .map(|doc| DocVariational::symmetric(doc, params, vec![1.0 / j as f64; j]))
        .collect();
    let prep = Prepared::new(params);
    e_step_corpus(corpus, &prep, &mut states, iters)?;
    Ok(states)
}

/// Most responsible cluster; ties go to the lowest index.
pub fn predict_cluster(state: &DocVariational) -> usize {
    argmax(&state.zeta)
}

pub fn predict_labels(states: &[DocVariational], num_clusters: usize) -> ClusterLabels {
    ClusterLabels::new(states.iter().map(predict_cluster).collect(), num_clusters)
        .expect("argmax is always a valid cluster")
}

/// Which topic to inspect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopicRef {
    Local { cluster: usize, topic: usize },
    Global { topic: usize },
}

/// Word ids of a topic by descending probability (ties by ascending id).
pub fn top_words(params: &ModelParams, topic: TopicRef, n: usize) -> Result<Vec<usize>> {
    let row = match topic {
        TopicRef::Local { cluster, topic } => params
            .local_topics
            .get(cluster)
            .and_then(|c| c.get(topic))
            .ok_or_else(|| Error::Index(format!("no local topic {topic} in cluster {cluster}")))?,
        TopicRef::Global { topic } => params
            .global_topics
            .get(topic)
            .ok_or_else(|| Error::Index(format!("no global topic {topic}")))?,
    };
    Ok(rank_words(row, n))
}

pub(crate) fn rank_words(row: &[f64], n: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..row.len()).collect();
    ids.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    ids.truncate(n.min(row.len()));
    ids
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mgctm::{sample_corpus, DocLength, GeneratorConfig, InitScheme};

    fn small_corpus() -> Corpus {
        let params = GeneratorConfig { vocab_size: 20, ..Default::default() }.generate().unwrap();
        sample_corpus(&params, 30, DocLength::Fixed(30), 1).unwrap().0
    }

    #[test]
    fn init_from_labels_smooths_responsibilities() {
        let corpus = small_corpus();
        let mut cfg = HyperConfig::new(2, 2, 2);
        cfg.init_scheme = InitScheme::FromLabels;
        let labels = ClusterLabels::new((0..30).map(|d| d % 2).collect(), 2).unwrap();
        let (_, states) = init_model(&cfg, &corpus, Some(&labels)).unwrap();
        assert_eq!(states[1].zeta, vec![0.1, 0.9]);
        assert_eq!(states[0].zeta, vec![0.9, 0.1]);
        let bad = ClusterLabels::new(vec![2; 30], 3).unwrap();
        assert!(init_model(&cfg, &corpus, Some(&bad)).is_err());
        assert!(init_model(&cfg, &corpus, None).is_err());
    }

    #[test]
    fn init_is_seeded_and_simple() {
        let corpus = small_corpus();
        let cfg = HyperConfig::new(3, 2, 2);
        let a = init_model(&cfg, &corpus, None).unwrap();
        let b = init_model(&cfg, &corpus, None).unwrap();
        assert_eq!(a, b);
        let (params, _) = a;
        assert_eq!(params.pi, vec![1.0 / 3.0; 3]);
        assert_eq!(params.gamma, [1.0, 1.0]);
        assert!(params.local_priors.iter().flatten().chain(&params.global_prior).all(|&x| x == 1.0));
        params.validate().unwrap();
        let single = HyperConfig::new(1, 2, 2);
        let (_, states) = init_model(&single, &corpus, None).unwrap();
        assert!(states.iter().all(|s| s.zeta == vec![1.0]));
    }

    #[test]
    fn zero_iterations_return_initialization() {
        let corpus = small_corpus();
        let cfg = HyperConfig { max_em_iters: 0, ..HyperConfig::new(3, 2, 2) };
        let init = init_model(&cfg, &corpus, None).unwrap();
        let (params, states, report) = fit(&corpus, &cfg, None).unwrap();
        assert_eq!((params, states), init);
        assert_eq!(report.iterations_run, 0);
        assert!(report.elbo_trace.is_empty());
    }

    #[test]
    fn runs_repeat_exactly() {
        let corpus = small_corpus();
        let cfg = HyperConfig { max_em_iters: 8, seed: 4, ..HyperConfig::new(3, 2, 2) };
        let a = fit(&corpus, &cfg, None).unwrap();
        let b = fit(&corpus, &cfg, None).unwrap();
        assert_eq!(a.2.elbo_trace, b.2.elbo_trace);
        assert_eq!(a.0, b.0);
    }

    #[test]
    fn restarts_keep_the_best_run() {
        let corpus = small_corpus();
        let one = |seed| {
            let cfg = HyperConfig { max_em_iters: 6, seed, seeding_iters: 0, ..HyperConfig::new(3, 2, 2) };
            *fit(&corpus, &cfg, None).unwrap().2.elbo_trace.last().unwrap()
        };
        let best = (10..13).map(one).fold(f64::NEG_INFINITY, f64::max);
        let cfg = HyperConfig { max_em_iters: 6, seed: 10, restarts: 3, ..HyperConfig::new(3, 2, 2) };
        let cfg = HyperConfig { seeding_iters: 0, ..cfg };
        assert_eq!(*fit(&corpus, &cfg, None).unwrap().2.elbo_trace.last().unwrap(), best);
    }

    #[test]
    fn seeding_hands_its_clusters_to_the_main_run() {
        let corpus = small_corpus();
        let cfg = HyperConfig { max_em_iters: 12, seeding_iters: 5, seed: 2, restarts: 2, ..HyperConfig::new(3, 2, 2) };
        let screen = HyperConfig { max_em_iters: 5, prior_warmup_iters: 0, seeding_iters: 0, ..cfg.clone() };
        let (p, s, _) = fit(&corpus, &screen, None).unwrap();
        let winner = (2..4)
            .max_by(|&a, &b| {
                let last = |seed| {
                    let one = HyperConfig { seed, restarts: 1, ..screen.clone() };
                    *fit(&corpus, &one, None).unwrap().2.elbo_trace.last().unwrap()
                };
                last(a).total_cmp(&last(b)).then(b.cmp(&a))
            })
            .unwrap();
        let (p0, s0) = release_seeding(&corpus, &p, &s, winner);
        assert!(p0.local_priors.iter().flatten().all(|&a| a == 1.0));
        assert_eq!(p0.gamma, [1.0, 1.0]);
        let expected = fit_from(&corpus, &HyperConfig { seed: winner, ..cfg.clone() }, p0, s0).unwrap();
        let got = fit(&corpus, &cfg, None).unwrap();
        assert_eq!(got.0, expected.0);
        assert_eq!(got.2.elbo_trace, expected.2.elbo_trace);
    }

    #[test]
    fn predict_cluster_examples() {
        let mut s = DocVariational {
            zeta: vec![0.2, 0.7, 0.1],
            lambda: [1.0, 1.0],
            mu_local: vec![],
            mu_global: vec![],
            tau: vec![],
            phi_local: vec![],
            phi_global: vec![],
        };
        assert_eq!(predict_cluster(&s), 1);
        s.zeta = vec![1.0 / 3.0; 3];
        assert_eq!(predict_cluster(&s), 0);
        s.zeta = vec![0.2, 0.7, 0.1].into_iter().map(|z: f64| (5.0 * z).exp()).collect();
        assert_eq!(predict_cluster(&s), 1);
    }

    #[test]
    fn top_words_examples() {
        let mut params = GeneratorConfig { vocab_size: 6, ..Default::default() }.generate().unwrap();
        params.global_topics[0] = vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        params.global_topics[1] = vec![1.0 / 6.0; 6];
        let words = top_words(&params, TopicRef::Global { topic: 0 }, 3).unwrap();
        assert_eq!(words[0], 3);
        assert_eq!(top_words(&params, TopicRef::Global { topic: 1 }, 4).unwrap(), vec![0, 1, 2, 3]);
        let mut all = top_words(&params, TopicRef::Local { cluster: 2, topic: 1 }, 6).unwrap();
        all.sort();
        assert_eq!(all, (0..6).collect::<Vec<_>>());
        assert_eq!(top_words(&params, TopicRef::Global { topic: 0 }, 100).unwrap().len(), 6);
        assert!(top_words(&params, TopicRef::Global { topic: 2 }, 3).is_err());
        assert!(top_words(&params, TopicRef::Local { cluster: 3, topic: 0 }, 3).is_err());
    }
}
