//! Per-document coordinate ascent.
//!
//! Each block update is the exact maximizer of the document's ELBO in that
//! block with everything else held fixed. Unselected clusters carry a flat
//! Dirichlet(1, ..., 1) reference on their local proportions and a uniform
//! reference on their topic choices; the word-level updates follow from
//! that completion of the joint:
//!
//! * `φ^(l)_{ijk} ∝ exp{τ_i ζ_j (E[ln θ^(l)_{jk}] + ln β^(l)_{j,k,w_i})}`
//! * `φ^(g)_{ik} ∝ exp{(1 - τ_i) (E[ln θ^(g)_k] + ln β^(g)_{k,w_i})}`
//! * `τ_i = σ(E[ln ω] - E[ln(1-ω)] + Σ_j ζ_j (Σ_k φ^(l)_{ijk}(E[ln θ^(l)_{jk}] + ln β^(l)) + ln K)
//!   - (Σ_k φ^(g)_{ik}(E[ln θ^(g)_k] + ln β^(g)) + ln R))`
//! * `μ^(l)_{jk} = ζ_j α^(l)_{jk} + 1 - ζ_j + ζ_j Σ_i n_i τ_i φ^(l)_{ijk}`
//! * `μ^(g)_k = α^(g)_k + Σ_i n_i (1 - τ_i) φ^(g)_{ik}`
//! * `λ = (γ_1 + Σ_i n_i τ_i, γ_2 + Σ_i n_i (1 - τ_i))`
//! * `ζ_j ∝ π_j exp{ln Dir-norm(α_j) + Σ_k (α_jk - 1) E[ln θ^(l)_{jk}] - ln Γ(K)
//!   + Σ_i n_i τ_i (Σ_k φ^(l)_{ijk}(E[ln θ^(l)_{jk}] + ln β^(l)) + ln K)}`
//!
//! where `n_i` is the count of the i-th distinct word.

use super::elbo::doc_elbo;
use super::params::ModelParams;
use super::state::{weighted, DocVariational, Expectations, Prepared, Shape};
use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::numerics::{log_normalize_in_place, sigmoid};

/// Relative per-document ELBO gain below which inner rounds stop early.
pub const INNER_REL_TOL: f64 = 1e-8;

/// Coordinate blocks of a document's variational parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    PhiLocal,
    PhiGlobal,
    Tau,
    MuLocal,
    MuGlobal,
    Lambda,
    Zeta,
}

impl Block {
    /// Order of one inner round.
    pub const ORDER: [Block; 7] = [
        Block::PhiLocal,
        Block::PhiGlobal,
        Block::Tau,
        Block::MuLocal,
        Block::MuGlobal,
        Block::Lambda,
        Block::Zeta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Block::PhiLocal => "phi_local",
            Block::PhiGlobal => "phi_global",
            Block::Tau => "tau",
            Block::MuLocal => "mu_local",
            Block::MuGlobal => "mu_global",
            Block::Lambda => "lambda",
            Block::Zeta => "zeta",
        }
    }
}

fn ensure_finite(values: &[f64], block: Block) -> Result<()> {
    if values.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical { block: block.name() })
    }
}

fn update_phi_local(doc: &Document, prep: &Prepared, state: &mut DocVariational, exp: &Expectations) -> Result<()> {
    let Shape { j, k, .. } = prep.shape;
    for (i, &(word, _)) in doc.entries().iter().enumerate() {
        let row = prep.local_row(word);
        let tau = state.tau[i];
        for cj in 0..j {
            let w = tau * state.zeta[cj];
            let base = (i * j + cj) * k;
            let phi = &mut state.phi_local[base..base + k];
            for ck in 0..k {
                let idx = cj * k + ck;
                phi[ck] = weighted(w, exp.local[idx] + row[idx]);
            }
            log_normalize_in_place(phi).map_err(|_| Error::Numerical { block: "phi_local" })?;
        }
    }
    ensure_finite(&state.phi_local, Block::PhiLocal)
}

fn update_phi_global(doc: &Document, prep: &Prepared, state: &mut DocVariational, exp: &Expectations) -> Result<()> {
    let r = prep.shape.r;
    for (i, &(word, _)) in doc.entries().iter().enumerate() {
        let row = prep.global_row(word);
        let w = 1.0 - state.tau[i];
        let phi = &mut state.phi_global[i * r..(i + 1) * r];
        for ck in 0..r {
            phi[ck] = weighted(w, exp.global[ck] + row[ck]);
        }
        log_normalize_in_place(phi).map_err(|_| Error::Numerical { block: "phi_global" })?;
    }
    ensure_finite(&state.phi_global, Block::PhiGlobal)
}

/// `Σ_k φ^(l)_{ijk} (E[ln θ^(l)_{jk}] + ln β^(l)_{j,k,w})` for one word and cluster.
#[inline]
fn local_word_score(prep: &Prepared, state: &DocVariational, exp: &Expectations, i: usize, cj: usize, row: &[f64]) -> f64 {
    let Shape { j, k, .. } = prep.shape;
    let base = (i * j + cj) * k;
    (0..k)
        .map(|ck| weighted(state.phi_local[base + ck], exp.local[cj * k + ck] + row[cj * k + ck]))
        .sum()
}

#[inline]
fn global_word_score(prep: &Prepared, state: &DocVariational, exp: &Expectations, i: usize, row: &[f64]) -> f64 {
    let r = prep.shape.r;
    (0..r)
        .map(|ck| weighted(state.phi_global[i * r + ck], exp.global[ck] + row[ck]))
        .sum()
}

fn update_tau(doc: &Document, prep: &Prepared, state: &mut DocVariational, exp: &Expectations) -> Result<()> {
    let j = prep.shape.j;
    let prior_logit = exp.omega[0] - exp.omega[1];
    for (i, &(word, _)) in doc.entries().iter().enumerate() {
        let lrow = prep.local_row(word);
        let grow = prep.global_row(word);
        let mut local = 0.0;
        for cj in 0..j {
            local += weighted(state.zeta[cj], local_word_score(prep, state, exp, i, cj, lrow) + prep.ln_k);
        }
        let global = global_word_score(prep, state, exp, i, grow) + prep.ln_r;
        let logit = prior_logit + local - global;
        if logit.is_nan() {
            return Err(Error::Numerical { block: "tau" });
        }
        state.tau[i] = sigmoid(logit);
    }
    Ok(())
}

pub(crate) fn update_mu_local(doc: &Document, params: &ModelParams, state: &mut DocVariational, shape: Shape) {
    let Shape { j, k, .. } = shape;
    for cj in 0..j {
        let z = state.zeta[cj];
        for ck in 0..k {
            let mut acc = 0.0;
            for (i, &(_, count)) in doc.entries().iter().enumerate() {
                acc += f64::from(count) * state.tau[i] * state.phi_local[(i * j + cj) * k + ck];
            }
            state.mu_local[cj * k + ck] = z * params.local_priors[cj][ck] + (1.0 - z) + z * acc;
        }
    }
}

pub(crate) fn update_mu_global(doc: &Document, params: &ModelParams, state: &mut DocVariational, shape: Shape) {
    let r = shape.r;
    for ck in 0..r {
        let mut acc = 0.0;
        for (i, &(_, count)) in doc.entries().iter().enumerate() {
            acc += f64::from(count) * (1.0 - state.tau[i]) * state.phi_global[i * r + ck];
        }
        state.mu_global[ck] = params.global_prior[ck] + acc;
    }
}

pub(crate) fn update_lambda(doc: &Document, params: &ModelParams, state: &mut DocVariational) {
    let mut local = 0.0;
    let mut global = 0.0;
    for (i, &(_, count)) in doc.entries().iter().enumerate() {
        let c = f64::from(count);
        local += c * state.tau[i];
        global += c * (1.0 - state.tau[i]);
    }
    state.lambda = [params.gamma[0] + local, params.gamma[1] + global];
}

fn update_zeta(doc: &Document, prep: &Prepared, state: &mut DocVariational, exp: &Expectations) -> Result<()> {
    let Shape { j, k, .. } = prep.shape;
    let mut scores = vec![0.0; j];
    for (cj, score) in scores.iter_mut().enumerate() {
        let prior = &prep.params.local_priors[cj];
        let mut s = prep.log_pi[cj] + prep.local_prior_norm[cj] - prep.log_gamma_k;
        for ck in 0..k {
            s += (prior[ck] - 1.0) * exp.local[cj * k + ck];
        }
        for (i, &(word, count)) in doc.entries().iter().enumerate() {
            let row = prep.local_row(word);
            let inner = local_word_score(prep, state, exp, i, cj, row) + prep.ln_k;
            s += f64::from(count) * weighted(state.tau[i], inner);
        }
        *score = s;
    }
    log_normalize_in_place(&mut scores).map_err(|_| Error::Numerical { block: "zeta" })?;
    state.zeta = scores;
    Ok(())
}

pub(crate) fn apply_block(
    doc: &Document,
    prep: &Prepared,
    state: &mut DocVariational,
    exp: &mut Expectations,
    block: Block,
) -> Result<()> {
    let shape = prep.shape;
    match block {
        Block::PhiLocal => update_phi_local(doc, prep, state, exp)?,
        Block::PhiGlobal => update_phi_global(doc, prep, state, exp)?,
        Block::Tau => update_tau(doc, prep, state, exp)?,
        Block::MuLocal => {
            update_mu_local(doc, prep.params, state, shape);
            ensure_finite(&state.mu_local, block)?;
            exp.refresh_local(state, shape);
        }
        Block::MuGlobal => {
            update_mu_global(doc, prep.params, state, shape);
            ensure_finite(&state.mu_global, block)?;
            exp.refresh_global(state);
        }
        Block::Lambda => {
            update_lambda(doc, prep.params, state);
            ensure_finite(&state.lambda, block)?;
            exp.refresh_omega(state);
        }
        Block::Zeta => update_zeta(doc, prep, state, exp)?,
    }
    Ok(())
}

/// Applies a single block update. Mostly useful for inspection and tests;
/// [`e_step_doc`] is the normal entry point.
pub fn update_block(doc: &Document, params: &ModelParams, state: &mut DocVariational, block: Block) -> Result<()> {
    let prep = Prepared::new(params);
    let mut exp = Expectations::new(state, prep.shape);
    apply_block(doc, &prep, state, &mut exp, block)
}

/// Runs up to `iters` rounds of block coordinate ascent on one document.
pub fn e_step_doc(doc: &Document, params: &ModelParams, mut state: DocVariational, iters: usize) -> Result<DocVariational> {
    let prep = Prepared::new(params);
    e_step_prepared(doc, &prep, &mut state, iters)?;
    Ok(state)
}

/// Inner loop shared with the fit driver. Returns the final document ELBO.
pub(crate) fn e_step_prepared(doc: &Document, prep: &Prepared, state: &mut DocVariational, iters: usize) -> Result<f64> {
    let mut exp = Expectations::new(state, prep.shape);
    let mut current = doc_elbo(doc, prep, state, &exp).total();
    for _ in 0..iters {
        for block in Block::ORDER {
            apply_block(doc, prep, state, &mut exp, block)?;
        }
        let next = doc_elbo(doc, prep, state, &exp).total();
        if !next.is_finite() {
            return Err(Error::Numerical { block: "elbo" });
        }
        let gain = next - current;
        current = next;
        if gain < INNER_REL_TOL * current.abs() {
            break;
        }
    }
    Ok(current)
}
