//! The library's bound and updates against independent test-side oracles.

mod common;

use common::coordinate::{check_e_step, check_m_step, Report};
use common::*;
use mgctm::corpus::Corpus;
use mgctm::mgctm::{doc_elbo_terms, e_step_doc, elbo, DocVariational};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn elbo_matches_token_level_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let (j, k, r, v, n) = random_shape(&mut rng);
        let params = random_params(j, k, r, v, &mut rng);
        let docs: Vec<_> = (0..3).map(|_| random_doc(v, n, &mut rng)).collect();
        let states: Vec<_> = docs.iter().map(|d| random_state(d, &params, &mut rng)).collect();
        let corpus = Corpus::new(docs, v).unwrap();
        let mine = elbo(&corpus, &states, &params).unwrap();
        let theirs = oracle_elbo(&params, &corpus, &states);
        assert!((mine - theirs).abs() <= 1e-9 * theirs.abs().max(1.0), "{mine} vs {theirs}");
    }
}

#[test]
fn quadrature_agrees_with_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for k in [1, 2] {
        for _ in 0..4 {
            let mut params = random_params(2, k, 1, 3, &mut rng);
            params.gamma = [rng.random_range(2.0..4.0), rng.random_range(2.0..4.0)];
            for a in params.local_priors.iter_mut().flatten() {
                *a = rng.random_range(2.0..4.0);
            }
            let doc = random_doc(3, 2, &mut rng);
            let exact = exact_log_lik(&params, &doc);
            let quad = quadrature_log_lik(&params, &doc, 200);
            assert!((exact - quad).abs() < 1e-5, "K={k}: {exact} vs {quad}");
        }
    }
}

fn bound_gap(params: &mgctm::mgctm::ModelParams, doc: &mgctm::corpus::Document, state: &DocVariational) -> f64 {
    exact_log_lik(params, doc) - doc_elbo_terms(doc, params, state).total()
}

#[test]
fn elbo_never_exceeds_log_likelihood() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..60 {
        let j = rng.random_range(1..=2);
        let k = rng.random_range(1..=2);
        let r = rng.random_range(1..=2);
        let v = rng.random_range(2..=4);
        let params = random_params(j, k, r, v, &mut rng);
        let doc = random_doc(v, rng.random_range(1..=4), &mut rng);
        let random = random_state(&doc, &params, &mut rng);
        assert!(bound_gap(&params, &doc, &random) >= -1e-10);
        let fitted = e_step_doc(&doc, &params, random, 200).unwrap();
        let gap = bound_gap(&params, &doc, &fitted);
        assert!(gap >= -1e-10, "bound exceeds likelihood by {}", -gap);
    }
}

use rand::Rng;

fn assert_report(report: &Report, what: &str) {
    for (block, dev) in report {
        assert!(dev.checks > 0);
        assert!(dev.param <= 1e-4, "{what} {block}: parameter deviation {:.3e}", dev.param);
        assert!(dev.elbo <= 1e-6, "{what} {block}: bound deviation {:.3e}", dev.elbo);
    }
}

#[test]
fn e_step_blocks_are_coordinate_maximizers() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut report = Report::new();
    for _ in 0..20 {
        check_e_step(&mut rng, &mut report);
    }
    assert_eq!(report.len(), 7);
    assert_report(&report, "e-step");
}

#[test]
fn m_step_updates_are_coordinate_maximizers() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut report = Report::new();
    for _ in 0..20 {
        check_m_step(&mut rng, &mut report);
    }
    assert_report(&report, "m-step");
}
