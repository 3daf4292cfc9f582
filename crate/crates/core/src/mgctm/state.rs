use serde::{Deserialize, Serialize};

use super::params::ModelParams;
use crate::corpus::Document;
use crate::numerics::{dirichlet_expected_log, dirichlet_log_norm, log_gamma_unchecked};

/// Variational parameters of one document.
///
/// Word-level fields are stored per distinct word of the document (one row
/// per `(word_id, count)` entry); every occurrence of a word shares the
/// same factors. Flat layouts:
///
/// * `mu_local[j * K + k]`
/// * `phi_local[(i * J + j) * K + k]`
/// * `phi_global[i * R + k]`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocVariational {
    pub zeta: Vec<f64>,
    pub lambda: [f64; 2],
    pub mu_local: Vec<f64>,
    pub mu_global: Vec<f64>,
    pub tau: Vec<f64>,
    pub phi_local: Vec<f64>,
    pub phi_global: Vec<f64>,
}

impl DocVariational {
    /// Symmetric state for `doc`: uniform word factors, `τ = 1/2`, and the
    /// document-level Dirichlet/Beta parameters consistent with them.
    pub fn symmetric(doc: &Document, params: &ModelParams, zeta: Vec<f64>) -> Self {
        let j = params.num_clusters();
        let k = params.local_topics_per_cluster();
        let r = params.num_global_topics();
        let n = doc.entries().len();
        let mut state = Self {
            zeta,
            lambda: [0.0; 2],
            mu_local: vec![0.0; j * k],
            mu_global: vec![0.0; r],
            tau: vec![0.5; n],
            phi_local: vec![1.0 / k as f64; n * j * k],
            phi_global: vec![if r > 0 { 1.0 / r as f64 } else { 0.0 }; n * r],
        };
        let shape = Shape { j, k, r };
        super::estep::update_mu_local(doc, params, &mut state, shape);
        super::estep::update_mu_global(doc, params, &mut state, shape);
        super::estep::update_lambda(doc, params, &mut state);
        state
    }

    pub fn num_clusters(&self) -> usize {
        self.zeta.len()
    }

    /// Applies a cluster relabeling consistent with [`ModelParams::permute_clusters`].
    pub fn permute_clusters(&self, perm: &[usize]) -> Self {
        let j = self.zeta.len();
        let k = self.mu_local.len() / j;
        let n = self.tau.len();
        let mut out = self.clone();
        for (from, &to) in perm.iter().enumerate() {
            out.zeta[to] = self.zeta[from];
            out.mu_local[to * k..(to + 1) * k].copy_from_slice(&self.mu_local[from * k..(from + 1) * k]);
            for i in 0..n {
                let src = (i * j + from) * k;
                let dst = (i * j + to) * k;
                out.phi_local[dst..dst + k].copy_from_slice(&self.phi_local[src..src + k]);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Shape {
    pub j: usize,
    pub k: usize,
    pub r: usize,
}

impl Shape {
    pub fn of(params: &ModelParams) -> Self {
        Self {
            j: params.num_clusters(),
            k: params.local_topics_per_cluster(),
            r: params.num_global_topics(),
        }
    }
}

/// Parameter-derived tables shared by every document in an E-step.
pub(crate) struct Prepared<'a> {
    pub params: &'a ModelParams,
    pub shape: Shape,
    pub log_pi: Vec<f64>,
    /// `log_local[v * J * K + j * K + k] = ln β^(l)_{j,k,v}`.
    pub log_local: Vec<f64>,
    /// `log_global[v * R + k] = ln β^(g)_{k,v}`.
    pub log_global: Vec<f64>,
    pub local_prior_norm: Vec<f64>,
    pub global_prior_norm: f64,
    pub gamma_norm: f64,
    pub ln_k: f64,
    pub ln_r: f64,
    pub log_gamma_k: f64,
}

impl<'a> Prepared<'a> {
    pub fn new(params: &'a ModelParams) -> Self {
        let shape = Shape::of(params);
        let Shape { j, k, r } = shape;
        let v = params.vocab_size();
        let mut log_local = vec![0.0; v * j * k];
        for (cj, topics) in params.local_topics.iter().enumerate() {
            for (ck, row) in topics.iter().enumerate() {
                for (w, &p) in row.iter().enumerate() {
                    log_local[w * j * k + cj * k + ck] = p.ln();
                }
            }
        }
        let mut log_global = vec![0.0; v * r];
        for (ck, row) in params.global_topics.iter().enumerate() {
            for (w, &p) in row.iter().enumerate() {
                log_global[w * r + ck] = p.ln();
            }
        }
        Self {
            params,
            shape,
            log_pi: params.pi.iter().map(|p| p.ln()).collect(),
            log_local,
            log_global,
            local_prior_norm: params.local_priors.iter().map(|a| dirichlet_log_norm(a)).collect(),
            global_prior_norm: if r > 0 { dirichlet_log_norm(&params.global_prior) } else { 0.0 },
            gamma_norm: dirichlet_log_norm(&params.gamma),
            ln_k: (k as f64).ln(),
            ln_r: if r > 0 { (r as f64).ln() } else { 0.0 },
            log_gamma_k: log_gamma_unchecked(k as f64),
        }
    }

    #[inline]
    pub fn local_row(&self, word: usize) -> &[f64] {
        let jk = self.shape.j * self.shape.k;
        &self.log_local[word * jk..(word + 1) * jk]
    }

    #[inline]
    pub fn global_row(&self, word: usize) -> &[f64] {
        let r = self.shape.r;
        &self.log_global[word * r..(word + 1) * r]
    }
}

/// Expected log proportions under the current document-level factors.
pub(crate) struct Expectations {
    /// `E[ln θ^(l)_{jk}]`, flat `j * K + k`.
    pub local: Vec<f64>,
    pub global: Vec<f64>,
    /// `(E[ln ω], E[ln(1 - ω)])`.
    pub omega: [f64; 2],
}

impl Expectations {
    pub fn new(state: &DocVariational, shape: Shape) -> Self {
        let mut e = Self {
            local: vec![0.0; shape.j * shape.k],
            global: vec![0.0; shape.r],
            omega: [0.0; 2],
        };
        e.refresh_local(state, shape);
        e.refresh_global(state);
        e.refresh_omega(state);
        e
    }

    pub fn refresh_local(&mut self, state: &DocVariational, shape: Shape) {
        let k = shape.k;
        for cj in 0..shape.j {
            dirichlet_expected_log(
                &state.mu_local[cj * k..(cj + 1) * k],
                &mut self.local[cj * k..(cj + 1) * k],
            );
        }
    }

    pub fn refresh_global(&mut self, state: &DocVariational) {
        if !state.mu_global.is_empty() {
            dirichlet_expected_log(&state.mu_global, &mut self.global);
        }
    }

    pub fn refresh_omega(&mut self, state: &DocVariational) {
        dirichlet_expected_log(&state.lambda, &mut self.omega);
    }
}

/// `weight * value`, taken as zero when the weight is zero even if the
/// value is infinite (a zero-probability branch contributes nothing).
#[inline]
pub(crate) fn weighted(weight: f64, value: f64) -> f64 {
    if weight == 0.0 {
        0.0
    } else {
        weight * value
    }
}
