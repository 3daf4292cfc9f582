//! Test-only oracles, written without touching the library's numerics.
//!
//! * a token-level ELBO using statrs special functions,
//! * the exact marginal likelihood by enumeration with closed-form
//!   Beta/Dirichlet moments, and a 2-D quadrature cross-check,
//! * derivative-free block maximizers (golden section with pattern moves).

#![allow(dead_code)]

pub mod coordinate;

use mgctm::corpus::{Corpus, Document};
use mgctm::mgctm::{DocVariational, ModelParams};
use rand::Rng;
use statrs::function::gamma::{digamma, ln_gamma};

// ---------- random instances ----------

pub fn simplex(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln() + 1e-3).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

pub fn positive(n: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn random_params(j: usize, k: usize, r: usize, v: usize, rng: &mut impl Rng) -> ModelParams {
    let g = positive(2, 0.5, 3.0, rng);
    ModelParams {
        pi: simplex(j, rng),
        gamma: [g[0], g[1]],
        local_priors: (0..j).map(|_| positive(k, 0.3, 3.0, rng)).collect(),
        global_prior: positive(r, 0.3, 3.0, rng),
        local_topics: (0..j).map(|_| (0..k).map(|_| simplex(v, rng)).collect()).collect(),
        global_topics: (0..r).map(|_| simplex(v, rng)).collect(),
    }
}

pub fn random_doc(v: usize, n: usize, rng: &mut impl Rng) -> Document {
    let tokens: Vec<usize> = (0..n).map(|_| rng.random_range(0..v)).collect();
    Document::from_tokens(&tokens)
}

pub fn random_state(doc: &Document, params: &ModelParams, rng: &mut impl Rng) -> DocVariational {
    let j = params.pi.len();
    let k = params.local_priors[0].len();
    let r = params.global_prior.len();
    let n = doc.entries().len();
    DocVariational {
        zeta: simplex(j, rng),
        lambda: [rng.random_range(0.3..5.0), rng.random_range(0.3..5.0)],
        mu_local: positive(j * k, 0.3, 5.0, rng),
        mu_global: positive(r, 0.3, 5.0, rng),
        tau: (0..n).map(|_| rng.random_range(0.05..0.95)).collect(),
        phi_local: (0..n * j).flat_map(|_| simplex(k, rng)).collect(),
        phi_global: (0..n).flat_map(|_| simplex(r, rng)).collect(),
    }
}

/// Small random shape within J, K, R ≤ 3, V ≤ 8, N_d ≤ 6.
pub fn random_shape(rng: &mut impl Rng) -> (usize, usize, usize, usize, usize) {
    (
        rng.random_range(1..=3),
        rng.random_range(1..=3),
        rng.random_range(1..=3),
        rng.random_range(2..=8),
        rng.random_range(1..=6),
    )
}

// ---------- independent ELBO ----------

fn elog(a: &[f64]) -> Vec<f64> {
    let s = digamma(a.iter().sum());
    a.iter().map(|&x| digamma(x) - s).collect()
}

fn ln_norm(a: &[f64]) -> f64 {
    ln_gamma(a.iter().sum()) - a.iter().map(|&x| ln_gamma(x)).sum::<f64>()
}

fn dir_entropy(a: &[f64]) -> f64 {
    let s: f64 = a.iter().sum();
    -ln_norm(a) + (s - a.len() as f64) * digamma(s) - a.iter().map(|&x| (x - 1.0) * digamma(x)).sum::<f64>()
}

fn xlny(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

fn ent(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * p.ln()
    }
}

/// Mean-field bound of one document, accumulated token by token.
///
/// Hidden variables of clusters other than η, and topic choices on the
/// pathway δ does not select, are completed with normalized reference
/// distributions: Dir(1, ..., 1) for θ and uniform for z.
pub fn oracle_doc_elbo(params: &ModelParams, doc: &Document, s: &DocVariational) -> f64 {
    let j = params.pi.len();
    let k = params.local_priors[0].len();
    let r = params.global_prior.len();
    let kf = k as f64;
    let rf = r as f64;
    let el: Vec<Vec<f64>> = (0..j).map(|c| elog(&s.mu_local[c * k..(c + 1) * k])).collect();
    let eg = elog(&s.mu_global);
    let eo = elog(&s.lambda);

    let mut total = 0.0;
    // cluster choice
    for c in 0..j {
        total += xlny(s.zeta[c], params.pi[c]);
        total += ent(s.zeta[c]);
    }
    // local proportions of every cluster
    for c in 0..j {
        let a = &params.local_priors[c];
        let selected = ln_norm(a) + a.iter().zip(&el[c]).map(|(x, e)| (x - 1.0) * e).sum::<f64>();
        total += s.zeta[c] * selected + (1.0 - s.zeta[c]) * ln_gamma(kf);
        total += dir_entropy(&s.mu_local[c * k..(c + 1) * k]);
    }
    // global proportions
    let a = &params.global_prior;
    total += ln_norm(a) + a.iter().zip(&eg).map(|(x, e)| (x - 1.0) * e).sum::<f64>();
    total += dir_entropy(&s.mu_global);
    // omega
    let g = &params.gamma;
    total += ln_norm(g) + (g[0] - 1.0) * eo[0] + (g[1] - 1.0) * eo[1];
    total += dir_entropy(&s.lambda);

    for (i, &(w, count)) in doc.entries().iter().enumerate() {
        for _ in 0..count {
            let t = s.tau[i];
            total += t * eo[0] + (1.0 - t) * eo[1] + ent(t) + ent(1.0 - t);
            for c in 0..j {
                let sel = t * s.zeta[c];
                for kk in 0..k {
                    let p = s.phi_local[(i * j + c) * k + kk];
                    if p > 0.0 {
                        total += sel * p * (el[c][kk] + params.local_topics[c][kk][w].ln());
                    }
                    total += ent(p);
                }
                total -= (1.0 - sel) * kf.ln();
            }
            for kk in 0..r {
                let p = s.phi_global[i * r + kk];
                if p > 0.0 {
                    total += (1.0 - t) * p * (eg[kk] + params.global_topics[kk][w].ln());
                }
                total += ent(p);
            }
            total -= t * rf.ln();
        }
    }
    total
}

pub fn oracle_elbo(params: &ModelParams, corpus: &Corpus, states: &[DocVariational]) -> f64 {
    corpus.docs().iter().zip(states).map(|(d, s)| oracle_doc_elbo(params, d, s)).sum()
}

// ---------- exact marginal likelihood ----------

fn ln_beta_fn(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// ln E[Π θ_k^{n_k}] under Dir(a).
fn ln_dir_moment(a: &[f64], n: &[usize]) -> f64 {
    let total: usize = n.iter().sum();
    let s: f64 = a.iter().sum();
    let mut v = ln_gamma(s) - ln_gamma(s + total as f64);
    for (&ak, &nk) in a.iter().zip(n) {
        v += ln_gamma(ak + nk as f64) - ln_gamma(ak);
    }
    v
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// ln p(w | params) summed over η, δ and z exactly; θ and ω integrated in
/// closed form.
pub fn exact_log_lik(params: &ModelParams, doc: &Document) -> f64 {
    let j = params.pi.len();
    let k = params.local_priors[0].len();
    let r = params.global_prior.len();
    let tokens: Vec<usize> = doc
        .entries()
        .iter()
        .flat_map(|&(w, c)| std::iter::repeat_n(w, c as usize))
        .collect();
    let n = tokens.len();
    let options = k + r;
    let mut terms = Vec::new();
    for eta in 0..j {
        let combos = options.pow(n as u32);
        for code in 0..combos {
            let mut rest = code;
            let mut local_counts = vec![0usize; k];
            let mut global_counts = vec![0usize; r];
            let mut log_words = 0.0;
            for &w in &tokens {
                let o = rest % options;
                rest /= options;
                if o < k {
                    local_counts[o] += 1;
                    log_words += params.local_topics[eta][o][w].ln();
                } else {
                    global_counts[o - k] += 1;
                    log_words += params.global_topics[o - k][w].ln();
                }
            }
            let nl: usize = local_counts.iter().sum();
            let ng = n - nl;
            let [g1, g2] = params.gamma;
            let v = params.pi[eta].ln()
                + ln_beta_fn(g1 + nl as f64, g2 + ng as f64)
                - ln_beta_fn(g1, g2)
                + ln_dir_moment(&params.local_priors[eta], &local_counts)
                + ln_dir_moment(&params.global_prior, &global_counts)
                + log_words;
            terms.push(v);
        }
    }
    log_sum_exp(&terms)
}

fn simpson(n: usize, f: impl Fn(f64) -> f64) -> f64 {
    assert!(n % 2 == 0);
    let h = 1.0 / n as f64;
    let mut s = f(0.0) + f(1.0);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    s * h / 3.0
}

/// ln p(w | params) by Simpson quadrature over ω and (for K = 2) the local
/// proportions, with R = 1. Priors should be ≥ 1 so the integrand is
/// bounded.
pub fn quadrature_log_lik(params: &ModelParams, doc: &Document, n: usize) -> f64 {
    let k = params.local_priors[0].len();
    assert!(k <= 2 && params.global_prior.len() == 1);
    let tokens: Vec<usize> = doc
        .entries()
        .iter()
        .flat_map(|&(w, c)| std::iter::repeat_n(w, c as usize))
        .collect();
    let [g1, g2] = params.gamma;
    let beta_pdf = |x: f64, a: f64, b: f64| {
        if (x == 0.0 && a < 1.0) || (x == 1.0 && b < 1.0) {
            return 0.0;
        }
        ((a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - ln_beta_fn(a, b)).exp()
    };
    let mut p = 0.0;
    for (eta, &pi) in params.pi.iter().enumerate() {
        let topics = &params.local_topics[eta];
        let inner = |omega: f64, theta: f64| -> f64 {
            tokens
                .iter()
                .map(|&w| {
                    let local = if k == 1 { topics[0][w] } else { theta * topics[0][w] + (1.0 - theta) * topics[1][w] };
                    omega * local + (1.0 - omega) * params.global_topics[0][w]
                })
                .product()
        };
        let value = if k == 1 {
            simpson(n, |o| beta_pdf(o, g1, g2) * inner(o, 0.0))
        } else {
            let a = &params.local_priors[eta];
            simpson(n, |o| beta_pdf(o, g1, g2) * simpson(n, |t| beta_pdf(t, a[0], a[1]) * inner(o, t)))
        };
        p += pi * value;
    }
    p.ln()
}

// ---------- derivative-free maximization ----------

/// Golden-section search for the maximum of a unimodal function on [lo, hi].
pub fn golden_max(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    let mid = 0.5 * (lo + hi);
    // Keep the endpoints in play: the maximum may sit on the boundary.
    [lo, mid, hi].into_iter().fold(mid, |best, x| if f(x) > f(best) { x } else { best })
}

/// Maximizes `f` over unconstrained coordinates by cyclic golden-section
/// line searches, each sweep followed by a search along the sweep's net
/// displacement to cope with coupled coordinates. Stops when a sweep moves
/// no coordinate or gains almost nothing.
pub fn maximize_free(f: &dyn Fn(&[f64]) -> f64, start: &[f64], radius: f64) -> Vec<f64> {
    let mut x = start.to_vec();
    if x.is_empty() {
        return x;
    }
    let mut value = f(&x);
    for _sweep in 0..400 {
        let before = x.clone();
        let before_value = value;
        for c in 0..x.len() {
            let centre = x[c];
            let line = |t: f64| {
                let mut y = x.clone();
                y[c] = t;
                f(&y)
            };
            x[c] = golden_max(&line, centre - radius, centre + radius, 1e-11);
        }
        let d: Vec<f64> = x.iter().zip(&before).map(|(a, b)| a - b).collect();
        let base = x.clone();
        let along = |t: f64| {
            let y: Vec<f64> = base.iter().zip(&d).map(|(b, dd)| b + t * dd).collect();
            f(&y)
        };
        let t = golden_max(&along, -1.0, 8.0, 1e-11);
        let moved: Vec<f64> = base.iter().zip(&d).map(|(b, dd)| b + t * dd).collect();
        if f(&moved) > f(&base) {
            x = moved;
        }
        value = f(&x);
        let size = d.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if size < 1e-11 || value - before_value < 1e-15 * value.abs().max(1.0) {
            break;
        }
    }
    x
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Maximizes `f` over the probability simplex (softmax parametrization).
/// One logit is pinned at zero; between rounds the pin moves to the
/// largest component so vanishing components cannot stall the search.
pub fn maximize_simplex(f: &dyn Fn(&[f64]) -> f64, start: &[f64]) -> Vec<f64> {
    let n = start.len();
    if n == 1 {
        return vec![1.0];
    }
    let mut p = start.to_vec();
    for _round in 0..4 {
        let pin = (0..n).fold(0, |b, i| if p[i] > p[b] { i } else { b });
        let logits = |free: &[f64]| {
            let mut l = free.to_vec();
            l.insert(pin, 0.0);
            l
        };
        let init: Vec<f64> = (0..n)
            .filter(|&i| i != pin)
            .map(|i| p[i].max(1e-300).ln() - p[pin].ln())
            .collect();
        let g = |free: &[f64]| f(&softmax(&logits(free)));
        let best = maximize_free(&g, &init, 30.0);
        let next = softmax(&logits(&best));
        let settled = max_rel_diff(&next, &p) < 1e-12;
        p = next;
        if settled {
            break;
        }
    }
    p
}

/// Maximizes `f` over strictly positive vectors (log parametrization).
pub fn maximize_positive(f: &dyn Fn(&[f64]) -> f64, start: &[f64]) -> Vec<f64> {
    let init: Vec<f64> = start.iter().map(|x| x.ln()).collect();
    let g = |logs: &[f64]| {
        let y: Vec<f64> = logs.iter().map(|l| l.exp()).collect();
        f(&y)
    };
    maximize_free(&g, &init, 6.0).into_iter().map(f64::exp).collect()
}

/// Largest relative difference, measured against max(1, |b|).
pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1.0))
        .fold(0.0, f64::max)
}

fn sums_to_one(xs: &[f64]) -> bool {
    (xs.iter().sum::<f64>() - 1.0).abs() <= 1e-9 && xs.iter().all(|&x| x >= 0.0)
}

/// Simplex and positivity constraints on global parameters.
pub fn params_valid(p: &ModelParams) -> bool {
    p.validate().is_ok()
        && sums_to_one(&p.pi)
        && p.local_topics.iter().flatten().chain(&p.global_topics).all(|row| sums_to_one(row))
        && p.local_priors.iter().flatten().chain(&p.global_prior).chain(&p.gamma).all(|&a| a > 0.0 && a.is_finite())
}

/// Simplex, interval and positivity constraints on one document's factors.
pub fn state_valid(s: &DocVariational, k: usize, r: usize) -> bool {
    sums_to_one(&s.zeta)
        && s.phi_local.chunks(k).all(sums_to_one)
        && s.phi_global.chunks(r).all(sums_to_one)
        && s.tau.iter().all(|&t| (0.0..=1.0).contains(&t))
        && s.mu_local.iter().chain(&s.mu_global).chain(&s.lambda).all(|&m| m > 0.0 && m.is_finite())
}
