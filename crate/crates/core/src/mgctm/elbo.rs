//! Evidence lower bound, split into its expected-log-joint and entropy terms.

use std::fmt;
use std::ops::AddAssign;

use rayon::prelude::*;

use super::params::ModelParams;
use super::state::{weighted, DocVariational, Expectations, Prepared, Shape};
use crate::corpus::Corpus;
use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::numerics::{dirichlet_entropy, neg_p_log_p, xlogy};

/// Per-term breakdown of the bound.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ElboTerms {
    /// `E[ln p(η | π)]`
    pub cluster: f64,
    /// `E[ln p(θ^(l) | η, A^(l))]`, including the flat reference of unselected clusters.
    pub local_proportions: f64,
    /// `E[ln p(θ^(g) | α^(g))]`
    pub global_proportions: f64,
    /// `E[ln p(ω | γ)]`
    pub omega: f64,
    /// `E[ln p(δ | ω)]`
    pub indicators: f64,
    /// `E[ln p(z^(l) | θ^(l), η, δ)]`
    pub local_assignments: f64,
    /// `E[ln p(z^(g) | θ^(g), δ)]`
    pub global_assignments: f64,
    /// `E[ln p(w | z, η, δ, B)]`
    pub words: f64,
    /// Sum of entropies of every variational factor.
    pub entropy: f64,
}

impl ElboTerms {
    pub fn total(&self) -> f64 {
        self.cluster
            + self.local_proportions
            + self.global_proportions
            + self.omega
            + self.indicators
            + self.local_assignments
            + self.global_assignments
            + self.words
            + self.entropy
    }

    pub fn is_finite(&self) -> bool {
        self.total().is_finite()
    }
}

impl AddAssign for ElboTerms {
    fn add_assign(&mut self, o: Self) {
        self.cluster += o.cluster;
        self.local_proportions += o.local_proportions;
        self.global_proportions += o.global_proportions;
        self.omega += o.omega;
        self.indicators += o.indicators;
        self.local_assignments += o.local_assignments;
        self.global_assignments += o.global_assignments;
        self.words += o.words;
        self.entropy += o.entropy;
    }
}

impl fmt::Display for ElboTerms {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "  cluster            {:.10e}", self.cluster)?;
        writeln!(f, "  local_proportions  {:.10e}", self.local_proportions)?;
        writeln!(f, "  global_proportions {:.10e}", self.global_proportions)?;
        writeln!(f, "  omega              {:.10e}", self.omega)?;
        writeln!(f, "  indicators         {:.10e}", self.indicators)?;
        writeln!(f, "  local_assignments  {:.10e}", self.local_assignments)?;
        writeln!(f, "  global_assignments {:.10e}", self.global_assignments)?;
        writeln!(f, "  words              {:.10e}", self.words)?;
        writeln!(f, "  entropy            {:.10e}", self.entropy)?;
        write!(f, "  total              {:.10e}", self.total())
    }
}

pub(crate) fn doc_elbo(doc: &Document, prep: &Prepared, state: &DocVariational, exp: &Expectations) -> ElboTerms {
    let Shape { j, k, r } = prep.shape;
    let params = prep.params;
    let mut t = ElboTerms::default();

    for cj in 0..j {
        let z = state.zeta[cj];
        t.cluster += xlogy(z, params.pi[cj]);
        let prior = &params.local_priors[cj];
        let mut lin = prep.local_prior_norm[cj];
        for ck in 0..k {
            lin += (prior[ck] - 1.0) * exp.local[cj * k + ck];
        }
        t.local_proportions += weighted(z, lin) + (1.0 - z) * prep.log_gamma_k;
        t.entropy += neg_p_log_p(z) + dirichlet_entropy(&state.mu_local[cj * k..(cj + 1) * k]);
    }

    t.global_proportions = prep.global_prior_norm
        + params
            .global_prior
            .iter()
            .zip(&exp.global)
            .map(|(&a, &e)| (a - 1.0) * e)
            .sum::<f64>();
    if r > 0 {
        t.entropy += dirichlet_entropy(&state.mu_global);
    }

    t.omega = prep.gamma_norm + (params.gamma[0] - 1.0) * exp.omega[0] + (params.gamma[1] - 1.0) * exp.omega[1];
    t.entropy += dirichlet_entropy(&state.lambda);

    for (i, &(word, count)) in doc.entries().iter().enumerate() {
        let c = f64::from(count);
        let tau = state.tau[i];
        let lrow = prep.local_row(word);
        let grow = prep.global_row(word);

        t.indicators += c * (weighted(tau, exp.omega[0]) + weighted(1.0 - tau, exp.omega[1]));

        let mut local_assign = 0.0;
        let mut local_words = 0.0;
        let mut ent = neg_p_log_p(tau) + neg_p_log_p(1.0 - tau);
        for cj in 0..j {
            let w = tau * state.zeta[cj];
            let base = (i * j + cj) * k;
            let mut assign = 0.0;
            let mut emit = 0.0;
            for ck in 0..k {
                let phi = state.phi_local[base + ck];
                assign += weighted(phi, exp.local[cj * k + ck]);
                emit += weighted(phi, lrow[cj * k + ck]);
                ent += neg_p_log_p(phi);
            }
            local_assign += weighted(w, assign) - (1.0 - w) * prep.ln_k;
            local_words += weighted(w, emit);
        }

        let mut g_assign = 0.0;
        let mut g_emit = 0.0;
        for ck in 0..r {
            let phi = state.phi_global[i * r + ck];
            g_assign += weighted(phi, exp.global[ck]);
            g_emit += weighted(phi, grow[ck]);
            ent += neg_p_log_p(phi);
        }
        let gw = 1.0 - tau;

        t.local_assignments += c * local_assign;
        t.global_assignments += c * (weighted(gw, g_assign) - tau * prep.ln_r);
        t.words += c * (local_words + weighted(gw, g_emit));
        t.entropy += c * ent;
    }
    t
}

/// Per-document ELBO contribution.
pub fn doc_elbo_terms(doc: &Document, params: &ModelParams, state: &DocVariational) -> ElboTerms {
    let prep = Prepared::new(params);
    let exp = Expectations::new(state, prep.shape);
    doc_elbo(doc, &prep, state, &exp)
}

pub(crate) fn corpus_elbo_prepared(corpus: &Corpus, states: &[DocVariational], prep: &Prepared) -> Result<ElboTerms> {
    if states.len() != corpus.num_docs() {
        return Err(Error::Dimension { expected: corpus.num_docs(), found: states.len() });
    }
    let per_doc: Vec<ElboTerms> = corpus
        .docs()
        .par_iter()
        .zip(states.par_iter())
        .map(|(doc, state)| {
            let exp = Expectations::new(state, prep.shape);
            doc_elbo(doc, prep, state, &exp)
        })
        .collect();
    // Summed in document order so the result does not depend on the pool size.
    let mut total = ElboTerms::default();
    for t in per_doc {
        total += t;
    }
    if !total.is_finite() {
        return Err(Error::Numerical { block: "elbo" });
    }
    Ok(total)
}

/// Corpus-level bound with its per-term breakdown.
pub fn elbo_terms(corpus: &Corpus, states: &[DocVariational], params: &ModelParams) -> Result<ElboTerms> {
    let prep = Prepared::new(params);
    corpus_elbo_prepared(corpus, states, &prep)
}

/// Corpus-level evidence lower bound.
pub fn elbo(corpus: &Corpus, states: &[DocVariational], params: &ModelParams) -> Result<f64> {
    elbo_terms(corpus, states, params).map(|t| t.total())
}
