//! Block-by-block comparison of the closed-form updates with numerical
//! maximization of the oracle ELBO.

use std::collections::BTreeMap;

use mgctm::corpus::Corpus;
use mgctm::mgctm::{m_step, update_block, Block, DocVariational, HyperConfig, ModelParams, PriorUpdate};
use rand::Rng;

use super::*;

/// Worst deviations seen for one block.
#[derive(Debug, Default, Clone, Copy)]
pub struct Deviation {
    /// Largest parameter difference, relative to max(1, |value|).
    pub param: f64,
    /// Largest amount by which the numerical optimum beats the closed form.
    pub elbo: f64,
    pub checks: usize,
}

impl Deviation {
    fn record(&mut self, closed: &[f64], numeric: &[f64], f_closed: f64, f_numeric: f64) {
        self.param = self.param.max(max_rel_diff(closed, numeric));
        self.elbo = self.elbo.max((f_numeric - f_closed).abs());
        self.checks += 1;
    }

    fn record_value_only(&mut self, f_closed: f64, f_numeric: f64) {
        self.elbo = self.elbo.max((f_numeric - f_closed).abs());
        self.checks += 1;
    }
}

pub type Report = BTreeMap<&'static str, Deviation>;

fn with_state(s: &DocVariational, edit: impl FnOnce(&mut DocVariational)) -> DocVariational {
    let mut t = s.clone();
    edit(&mut t);
    t
}

/// Checks every E-step block on one random instance.
pub fn check_e_step(rng: &mut impl Rng, report: &mut Report) {
    let (j, k, r, v, n) = random_shape(rng);
    let params = random_params(j, k, r, v, rng);
    let doc = random_doc(v, n, rng);
    let state = random_state(&doc, &params, rng);
    let entries = doc.entries().len();
    let f = |s: &DocVariational| oracle_doc_elbo(&params, &doc, s);

    for block in Block::ORDER {
        let mut closed = state.clone();
        update_block(&doc, &params, &mut closed, block).expect("block update");
        let dev = report.entry(block.name()).or_default();
        match block {
            Block::Zeta => {
                let g = |z: &[f64]| f(&with_state(&state, |t| t.zeta = z.to_vec()));
                let best = maximize_simplex(&g, &state.zeta);
                dev.record(&closed.zeta, &best, g(&closed.zeta), g(&best));
            }
            Block::PhiLocal => {
                for i in 0..entries {
                    for c in 0..j {
                        let at = (i * j + c) * k;
                        let g = |p: &[f64]| f(&with_state(&state, |t| t.phi_local[at..at + k].copy_from_slice(p)));
                        let best = maximize_simplex(&g, &state.phi_local[at..at + k]);
                        let mine = &closed.phi_local[at..at + k];
                        dev.record(mine, &best, g(mine), g(&best));
                    }
                }
            }
            Block::PhiGlobal => {
                for i in 0..entries {
                    let at = i * r;
                    let g = |p: &[f64]| f(&with_state(&state, |t| t.phi_global[at..at + r].copy_from_slice(p)));
                    let best = maximize_simplex(&g, &state.phi_global[at..at + r]);
                    let mine = &closed.phi_global[at..at + r];
                    dev.record(mine, &best, g(mine), g(&best));
                }
            }
            Block::Tau => {
                for i in 0..entries {
                    let g = |x: f64| f(&with_state(&state, |t| t.tau[i] = x));
                    let best = golden_max(&g, 0.0, 1.0, 1e-12);
                    dev.record(&[closed.tau[i]], &[best], g(closed.tau[i]), g(best));
                }
            }
            Block::MuLocal => {
                for c in 0..j {
                    let at = c * k;
                    let g = |m: &[f64]| f(&with_state(&state, |t| t.mu_local[at..at + k].copy_from_slice(m)));
                    let mine = &closed.mu_local[at..at + k];
                    if k == 1 {
                        // A one-component Dirichlet factor does not enter the bound.
                        dev.record_value_only(g(mine), g(&state.mu_local[at..at + k]));
                    } else {
                        let best = maximize_positive(&g, &state.mu_local[at..at + k]);
                        dev.record(mine, &best, g(mine), g(&best));
                    }
                }
            }
            Block::MuGlobal => {
                let g = |m: &[f64]| f(&with_state(&state, |t| t.mu_global = m.to_vec()));
                if r == 1 {
                    dev.record_value_only(g(&closed.mu_global), g(&state.mu_global));
                } else {
                    let best = maximize_positive(&g, &state.mu_global);
                    dev.record(&closed.mu_global, &best, g(&closed.mu_global), g(&best));
                }
            }
            Block::Lambda => {
                let g = |m: &[f64]| f(&with_state(&state, |t| t.lambda = [m[0], m[1]]));
                let best = maximize_positive(&g, &state.lambda);
                dev.record(&closed.lambda, &best, g(&closed.lambda), g(&best));
            }
        }
    }
}

fn with_params(p: &ModelParams, edit: impl FnOnce(&mut ModelParams)) -> ModelParams {
    let mut q = p.clone();
    edit(&mut q);
    q
}

/// Checks every M-step update on one random corpus of 2–4 documents.
pub fn check_m_step(rng: &mut impl Rng, report: &mut Report) {
    let (j, k, r, v, _) = random_shape(rng);
    let params = random_params(j, k, r, v, rng);
    let num_docs = rng.random_range(2..=4);
    let docs: Vec<_> = (0..num_docs).map(|_| random_doc(v, rng.random_range(1..=6), rng)).collect();
    let states: Vec<_> = docs.iter().map(|d| random_state(d, &params, rng)).collect();
    let corpus = Corpus::new(docs, v).expect("corpus");
    let config = HyperConfig { prior_update: PriorUpdate::EveryIter, ..HyperConfig::new(j, k, r) };
    let next = m_step(&corpus, &states, &params, &config).expect("m-step");
    let f = |p: &ModelParams| oracle_elbo(p, &corpus, &states);

    {
        let g = |x: &[f64]| f(&with_params(&params, |p| p.pi = x.to_vec()));
        let best = maximize_simplex(&g, &params.pi);
        report.entry("pi").or_default().record(&next.pi, &best, g(&next.pi), g(&best));
    }
    for c in 0..j {
        for kk in 0..k {
            let g = |x: &[f64]| f(&with_params(&params, |p| p.local_topics[c][kk] = x.to_vec()));
            let best = maximize_simplex(&g, &params.local_topics[c][kk]);
            let mine = &next.local_topics[c][kk];
            report.entry("local_topics").or_default().record(mine, &best, g(mine), g(&best));
        }
    }
    for kk in 0..r {
        let g = |x: &[f64]| f(&with_params(&params, |p| p.global_topics[kk] = x.to_vec()));
        let best = maximize_simplex(&g, &params.global_topics[kk]);
        let mine = &next.global_topics[kk];
        report.entry("global_topics").or_default().record(mine, &best, g(mine), g(&best));
    }
    for c in 0..j {
        let g = |x: &[f64]| f(&with_params(&params, |p| p.local_priors[c] = x.to_vec()));
        let mine = &next.local_priors[c];
        let dev = report.entry("local_priors").or_default();
        if k == 1 {
            // A one-component Dirichlet does not enter the bound.
            dev.record_value_only(g(mine), g(&params.local_priors[c]));
        } else {
            let best = maximize_positive(&g, &params.local_priors[c]);
            dev.record(mine, &best, g(mine), g(&best));
        }
    }
    {
        let g = |x: &[f64]| f(&with_params(&params, |p| p.global_prior = x.to_vec()));
        let dev = report.entry("global_prior").or_default();
        if r == 1 {
            dev.record_value_only(g(&next.global_prior), g(&params.global_prior));
        } else {
            let best = maximize_positive(&g, &params.global_prior);
            dev.record(&next.global_prior, &best, g(&next.global_prior), g(&best));
        }
    }
    {
        let g = |x: &[f64]| f(&with_params(&params, |p| p.gamma = [x[0], x[1]]));
        let best = maximize_positive(&g, &params.gamma);
        report.entry("gamma").or_default().record(&next.gamma, &best, g(&next.gamma), g(&best));
    }
}
