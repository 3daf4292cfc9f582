//! Random small instances for unit tests.

use rand::Rng;

use super::params::ModelParams;
use super::state::DocVariational;
use crate::corpus::Document;
use super::fit::flat_dirichlet;

pub fn random_params(j: usize, k: usize, r: usize, v: usize, rng: &mut impl Rng) -> ModelParams {
    let mut pos = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(0.2..3.0)).collect() };
    let local_priors = (0..j).map(|_| pos(k)).collect();
    let global_prior = pos(r);
    let g = pos(2);
    ModelParams {
        pi: flat_dirichlet(j, rng),
        gamma: [g[0], g[1]],
        local_priors,
        global_prior,
        local_topics: (0..j).map(|_| (0..k).map(|_| flat_dirichlet(v, rng)).collect()).collect(),
        global_topics: (0..r).map(|_| flat_dirichlet(v, rng)).collect(),
    }
}

pub fn random_doc(v: usize, n: usize, rng: &mut impl Rng) -> Document {
    let tokens: Vec<usize> = (0..n).map(|_| rng.random_range(0..v)).collect();
    Document::from_tokens(&tokens)
}

/// A valid but arbitrary state: every field random within its domain.
pub fn random_state(doc: &Document, params: &ModelParams, rng: &mut impl Rng) -> DocVariational {
    let j = params.num_clusters();
    let k = params.local_topics_per_cluster();
    let r = params.num_global_topics();
    let n = doc.entries().len();
    let mut s = DocVariational::symmetric(doc, params, flat_dirichlet(j, rng));
    s.tau = (0..n).map(|_| rng.random_range(0.05..0.95)).collect();
    s.phi_local = (0..n * j).flat_map(|_| flat_dirichlet(k, rng)).collect();
    s.phi_global = (0..n).flat_map(|_| flat_dirichlet(r, rng)).collect();
    s.mu_local = (0..j * k).map(|_| rng.random_range(0.3..5.0)).collect();
    s.mu_global = (0..r).map(|_| rng.random_range(0.3..5.0)).collect();
    s.lambda = [rng.random_range(0.3..5.0), rng.random_range(0.3..5.0)];
    s
}

/// Asserts the documented simplex and positivity invariants.
pub fn assert_state_valid(s: &DocVariational, k: usize, r: usize) {
    let close = |xs: &[f64]| (xs.iter().sum::<f64>() - 1.0).abs() < 1e-9;
    assert!(close(&s.zeta), "zeta {:?}", s.zeta);
    assert!(s.zeta.iter().all(|&z| (0.0..=1.0).contains(&z)));
    for chunk in s.phi_local.chunks(k) {
        assert!(close(chunk) && chunk.iter().all(|&p| p >= 0.0));
    }
    if r > 0 {
        for chunk in s.phi_global.chunks(r) {
            assert!(close(chunk) && chunk.iter().all(|&p| p >= 0.0));
        }
    }
    assert!(s.tau.iter().all(|&t| (0.0..=1.0).contains(&t)));
    assert!(s.mu_local.iter().chain(&s.mu_global).chain(&s.lambda).all(|&m| m > 0.0 && m.is_finite()));
}
