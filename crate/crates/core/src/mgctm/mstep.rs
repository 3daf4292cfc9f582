use log::{debug, warn};
use rayon::prelude::*;

use super::params::{HyperConfig, ModelParams, PriorUpdate};
use super::state::{DocVariational, Shape};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::numerics::{dirichlet_expected_log, dirichlet_mle, DirichletStats};

/// Additive smoothing on topic-word counts before normalization.
pub const TOPIC_SMOOTHING: f64 = 1e-8;
/// Clusters whose total responsibility falls below this keep their old
/// topics and prior.
pub const EMPTY_CLUSTER_MASS: f64 = 1e-6;

const PRIOR_NEWTON_ITERS: usize = 200;
const PRIOR_NEWTON_TOL: f64 = 1e-9;

pub(crate) struct MStepOutcome {
    pub params: ModelParams,
    pub empty_clusters: Vec<usize>,
}

fn normalize_smoothed(counts: &mut [f64]) {
    let total: f64 = counts.iter().map(|c| c + TOPIC_SMOOTHING).sum();
    for c in counts.iter_mut() {
        *c = (*c + TOPIC_SMOOTHING) / total;
    }
}

fn check_states(corpus: &Corpus, states: &[DocVariational], shape: Shape) -> Result<()> {
    if states.len() != corpus.num_docs() {
        return Err(Error::Dimension { expected: corpus.num_docs(), found: states.len() });
    }
    for (doc, s) in corpus.docs().iter().zip(states) {
        let n = doc.entries().len();
        if s.zeta.len() != shape.j || s.tau.len() != n || s.phi_local.len() != n * shape.j * shape.k {
            return Err(Error::Dimension { expected: n * shape.j * shape.k, found: s.phi_local.len() });
        }
    }
    Ok(())
}

/// Re-estimates π, the topics and (optionally) the priors from the
/// variational states.
///
/// Every reduction over documents runs in document order, split across
/// workers by output row only, so results do not depend on the pool size.
pub(crate) fn m_step_impl(
    corpus: &Corpus,
    states: &[DocVariational],
    params: &ModelParams,
    config: &HyperConfig,
) -> Result<MStepOutcome> {
    let shape = Shape::of(params);
    let Shape { j, k, r } = shape;
    let v = params.vocab_size();
    check_states(corpus, states, shape)?;
    let num_docs = corpus.num_docs() as f64;

    let mut mass = vec![0.0; j];
    for s in states {
        for (m, &z) in mass.iter_mut().zip(&s.zeta) {
            *m += z;
        }
    }
    let pi: Vec<f64> = mass.iter().map(|m| m / num_docs).collect();
    let empty_clusters: Vec<usize> = (0..j).filter(|&cj| mass[cj] < EMPTY_CLUSTER_MASS).collect();
    for &cj in &empty_clusters {
        warn!("cluster {cj} is empty (mass {:.3e}); keeping its topics and prior", mass[cj]);
    }

    let local_topics: Vec<Vec<Vec<f64>>> = (0..j)
        .into_par_iter()
        .map(|cj| {
            if mass[cj] < EMPTY_CLUSTER_MASS {
                return params.local_topics[cj].clone();
            }
            let mut counts = vec![vec![0.0; v]; k];
            for (doc, s) in corpus.docs().iter().zip(states) {
                let z = s.zeta[cj];
                if z == 0.0 {
                    continue;
                }
                for (i, &(word, count)) in doc.entries().iter().enumerate() {
                    let w = f64::from(count) * s.tau[i] * z;
                    let base = (i * j + cj) * k;
                    for (ck, row) in counts.iter_mut().enumerate() {
                        row[word] += w * s.phi_local[base + ck];
                    }
                }
            }
            for row in counts.iter_mut() {
                normalize_smoothed(row);
            }
            counts
        })
        .collect();

    let global_topics: Vec<Vec<f64>> = (0..r)
        .into_par_iter()
        .map(|ck| {
            let mut row = vec![0.0; v];
            for (doc, s) in corpus.docs().iter().zip(states) {
                for (i, &(word, count)) in doc.entries().iter().enumerate() {
                    row[word] += f64::from(count) * (1.0 - s.tau[i]) * s.phi_global[i * r + ck];
                }
            }
            normalize_smoothed(&mut row);
            row
        })
        .collect();

    let mut next = ModelParams {
        pi,
        gamma: params.gamma,
        local_priors: params.local_priors.clone(),
        global_prior: params.global_prior.clone(),
        local_topics,
        global_topics,
    };

    if config.prior_update == PriorUpdate::EveryIter {
        estimate_priors(states, params, &mass, shape, &mut next)?;
    }
    Ok(MStepOutcome { params: next, empty_clusters })
}

fn estimate_priors(
    states: &[DocVariational],
    params: &ModelParams,
    mass: &[f64],
    shape: Shape,
    next: &mut ModelParams,
) -> Result<()> {
    let Shape { j, k, r } = shape;
    let num_docs = states.len() as f64;
    let mut local_log = vec![0.0; j * k];
    let mut global_log = vec![0.0; r];
    let mut omega_log = [0.0; 2];
    let mut scratch_local = vec![0.0; k];
    let mut scratch_global = vec![0.0; r];
    let mut scratch_omega = [0.0; 2];
    for s in states {
        for cj in 0..j {
            let z = s.zeta[cj];
            if z == 0.0 {
                continue;
            }
            dirichlet_expected_log(&s.mu_local[cj * k..(cj + 1) * k], &mut scratch_local);
            for ck in 0..k {
                local_log[cj * k + ck] += z * scratch_local[ck];
            }
        }
        dirichlet_expected_log(&s.mu_global, &mut scratch_global);
        for (acc, e) in global_log.iter_mut().zip(&scratch_global) {
            *acc += e;
        }
        dirichlet_expected_log(&s.lambda, &mut scratch_omega);
        omega_log[0] += scratch_omega[0];
        omega_log[1] += scratch_omega[1];
    }

    for cj in 0..j {
        if mass[cj] < EMPTY_CLUSTER_MASS {
            continue;
        }
        let mean_log = local_log[cj * k..(cj + 1) * k].iter().map(|x| x / mass[cj]).collect();
        next.local_priors[cj] = fit_prior(DirichletStats::new(mean_log, mass[cj]), &params.local_priors[cj], "local")?;
    }
    let mean_log = global_log.iter().map(|x| x / num_docs).collect();
    next.global_prior = fit_prior(DirichletStats::new(mean_log, num_docs), &params.global_prior, "global")?;
    let mean_log = vec![omega_log[0] / num_docs, omega_log[1] / num_docs];
    let gamma = fit_prior(DirichletStats::new(mean_log, num_docs), &params.gamma, "gamma")?;
    next.gamma = [gamma[0], gamma[1]];
    Ok(())
}

fn fit_prior(stats: DirichletStats, current: &[f64], what: &str) -> Result<Vec<f64>> {
    // A one-dimensional Dirichlet is a point mass; its parameter does not
    // enter the bound.
    if current.len() == 1 {
        return Ok(current.to_vec());
    }
    let tol = PRIOR_NEWTON_TOL * stats.num_obs.max(1.0);
    match dirichlet_mle(&stats, current, PRIOR_NEWTON_ITERS, tol) {
        Ok(fit) => {
            if !fit.converged {
                debug!("{what} prior: Newton stopped after {} iterations (|g| = {:.3e})", fit.iterations, fit.grad_norm);
            }
            Ok(fit.alpha)
        }
        Err(Error::Estimation { reason, last }) => {
            warn!("{what} prior estimation stalled: {reason}");
            // `last` is never worse than `current`: only ascent steps are accepted.
            Ok(last)
        }
        Err(e) => Err(e),
    }
}

/// M-step: π, local/global topics and, when enabled, the priors.
pub fn m_step(
    corpus: &Corpus,
    states: &[DocVariational],
    params: &ModelParams,
    config: &HyperConfig,
) -> Result<ModelParams> {
    m_step_impl(corpus, states, params, config).map(|o| o.params)
}
