//! Special functions and Dirichlet estimation used by the update equations.

use crate::error::{Error, Result};

/// Lower bound applied to every estimated Dirichlet/Beta component.
pub const PRIOR_FLOOR: f64 = 1e-8;
/// Upper bound applied to every estimated Dirichlet/Beta component.
pub const PRIOR_CAP: f64 = 1e6;

// Arguments below this are shifted upward with the recurrence before the
// asymptotic series is applied.
const ASYMPTOTIC_THRESHOLD: f64 = 10.0;

/// Digamma function Ψ(x) for x > 0.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain { func: "digamma", arg: x });
    }
    Ok(digamma_unchecked(x))
}

/// Digamma without the domain check. Callers guarantee `x > 0`.
pub(crate) fn digamma_unchecked(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < ASYMPTOTIC_THRESHOLD {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Bernoulli-number series in 1/x^2.
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0))))));
    acc + x.ln() - 0.5 * inv - series
}

/// Trigamma function Ψ'(x) for x > 0.
pub fn trigamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain { func: "trigamma", arg: x });
    }
    Ok(trigamma_unchecked(x))
}

pub(crate) fn trigamma_unchecked(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < ASYMPTOTIC_THRESHOLD {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv
        + 0.5 * inv2
        + inv * inv2
            * (1.0 / 6.0
                - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 * (1.0 / 30.0 - inv2 * (5.0 / 66.0)))));
    acc + series
}

/// Natural log of the gamma function for x > 0.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain { func: "log_gamma", arg: x });
    }
    Ok(log_gamma_unchecked(x))
}

pub(crate) fn log_gamma_unchecked(mut x: f64) -> f64 {
    // ln Γ(x) = ln Γ(x + n) - ln(x (x+1) ... (x+n-1)); the product is kept
    // in a single float and folded into the log in one go.
    let mut prod = 1.0;
    while x < ASYMPTOTIC_THRESHOLD {
        prod *= x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 12.0
            - inv2
                * (1.0 / 360.0
                    - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 * (1.0 / 1188.0)))));
    let half_ln_two_pi = 0.918_938_533_204_672_8;
    (x - 0.5) * x.ln() - x + half_ln_two_pi + series - prod.ln()
}

/// Maps log-weights to a probability vector with the max-subtraction trick.
pub fn log_normalize(log_weights: &[f64]) -> Result<Vec<f64>> {
    let mut out = log_weights.to_vec();
    log_normalize_in_place(&mut out)?;
    Ok(out)
}

/// In-place variant of [`log_normalize`].
pub fn log_normalize_in_place(values: &mut [f64]) -> Result<()> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Degenerate(if max.is_nan() || max == f64::INFINITY {
            "log weights contain NaN or +inf"
        } else {
            "all log weights are -inf"
        }));
    }
    let mut total = 0.0;
    for v in values.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in values.iter_mut() {
        *v /= total;
    }
    Ok(())
}

/// Logistic function, clamped to [0, 1].
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `x * ln(y)` with the convention `0 * ln(0) = 0`.
pub(crate) fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// Entropy contribution `-p ln p`, zero at p = 0.
pub(crate) fn neg_p_log_p(p: f64) -> f64 {
    -xlogy(p, p)
}

/// `E[ln θ_k]` under Dirichlet(params), written into `out`.
pub(crate) fn dirichlet_expected_log(params: &[f64], out: &mut [f64]) {
    let total = digamma_unchecked(params.iter().sum());
    for (o, &p) in out.iter_mut().zip(params) {
        *o = digamma_unchecked(p) - total;
    }
}

/// `ln Γ(Σα) - Σ ln Γ(α_k)`.
pub(crate) fn dirichlet_log_norm(params: &[f64]) -> f64 {
    log_gamma_unchecked(params.iter().sum())
        - params.iter().map(|&a| log_gamma_unchecked(a)).sum::<f64>()
}

/// Entropy of Dirichlet(params).
pub(crate) fn dirichlet_entropy(params: &[f64]) -> f64 {
    let total: f64 = params.iter().sum();
    let k = params.len() as f64;
    let mut h = -dirichlet_log_norm(params) + (total - k) * digamma_unchecked(total);
    for &a in params {
        h -= (a - 1.0) * digamma_unchecked(a);
    }
    h
}

/// Sufficient statistics for Dirichlet estimation: `mean_log[k]` is the
/// average of `E[ln p_k]` over (possibly fractionally weighted) observations.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletStats {
    pub mean_log: Vec<f64>,
    pub num_obs: f64,
}

impl DirichletStats {
    pub fn new(mean_log: Vec<f64>, num_obs: f64) -> Self {
        Self { mean_log, num_obs }
    }

    /// Expected log-likelihood of `alpha` under these statistics.
    pub fn objective(&self, alpha: &[f64]) -> f64 {
        let lin: f64 = alpha
            .iter()
            .zip(&self.mean_log)
            .map(|(&a, &s)| (a - 1.0) * s)
            .sum();
        self.num_obs * (dirichlet_log_norm(alpha) + lin)
    }

    fn gradient(&self, alpha: &[f64], out: &mut [f64]) {
        let total = digamma_unchecked(alpha.iter().sum());
        for ((g, &a), &s) in out.iter_mut().zip(alpha).zip(&self.mean_log) {
            *g = self.num_obs * (total - digamma_unchecked(a) + s);
        }
    }
}

/// Outcome of [`dirichlet_mle`].
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletFit {
    pub alpha: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
}

/// Newton-Raphson maximum-likelihood estimate of Dirichlet parameters.
///
/// The Hessian is `diag(h) + z 11ᵀ`, so the Newton direction is solved in
/// linear time. Steps are halved until the iterate stays inside
/// `[PRIOR_FLOOR, PRIOR_CAP]` and the objective does not decrease; only
/// such steps are accepted.
pub fn dirichlet_mle(
    stats: &DirichletStats,
    init: &[f64],
    max_iters: usize,
    tol: f64,
) -> Result<DirichletFit> {
    let dim = init.len();
    if stats.mean_log.len() != dim || dim == 0 {
        return Err(Error::Dimension {
            expected: dim,
            found: stats.mean_log.len(),
        });
    }
    if !(stats.num_obs > 0.0) {
        return Err(Error::Config(format!(
            "dirichlet_mle needs num_obs > 0, got {}",
            stats.num_obs
        )));
    }
    if init.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
        return Err(Error::Config("dirichlet_mle init must be strictly positive".into()));
    }
    if stats.mean_log.iter().any(|s| !s.is_finite()) {
        return Err(Error::Estimation {
            reason: "non-finite sufficient statistics".into(),
            last: init.to_vec(),
        });
    }

    let mut alpha: Vec<f64> = init.iter().map(|&a| a.clamp(PRIOR_FLOOR, PRIOR_CAP)).collect();
    let mut value = stats.objective(&alpha);
    if !value.is_finite() {
        return Err(Error::Estimation {
            reason: "objective is not finite at the initial point".into(),
            last: alpha,
        });
    }
    let mut grad = vec![0.0; dim];
    let mut step = vec![0.0; dim];
    let mut candidate = vec![0.0; dim];
    let mut iterations = 0;

    loop {
        stats.gradient(&alpha, &mut grad);
        // Components pinned at a bound with the gradient pushing outward do
        // not count against convergence.
        let grad_norm = grad
            .iter()
            .zip(&alpha)
            .map(|(&g, &a)| {
                if (a <= PRIOR_FLOOR && g < 0.0) || (a >= PRIOR_CAP && g > 0.0) {
                    0.0
                } else {
                    g * g
                }
            })
            .sum::<f64>()
            .sqrt();
        if grad_norm <= tol {
            return Ok(DirichletFit { alpha, iterations, converged: true, grad_norm });
        }
        if iterations >= max_iters {
            return Ok(DirichletFit { alpha, iterations, converged: false, grad_norm });
        }
        iterations += 1;

        let total = alpha.iter().sum::<f64>();
        let z = stats.num_obs * trigamma_unchecked(total);
        let mut sum_g_over_h = 0.0;
        let mut sum_inv_h = 0.0;
        let h: Vec<f64> = alpha
            .iter()
            .map(|&a| -stats.num_obs * trigamma_unchecked(a))
            .collect();
        for (&g, &hk) in grad.iter().zip(&h) {
            sum_g_over_h += g / hk;
            sum_inv_h += 1.0 / hk;
        }
        let c = sum_g_over_h / (1.0 / z + sum_inv_h);
        for ((s, &g), &hk) in step.iter_mut().zip(&grad).zip(&h) {
            *s = (g - c) / hk;
        }

        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            for ((cand, &a), &s) in candidate.iter_mut().zip(&alpha).zip(&step) {
                *cand = (a - scale * s).clamp(PRIOR_FLOOR, PRIOR_CAP);
            }
            let cand_value = stats.objective(&candidate);
            // Near the optimum the gain is below rounding of the objective.
            let slack = 64.0 * f64::EPSILON * value.abs().max(1.0);
            if cand_value.is_finite() && cand_value >= value - slack {
                accepted = true;
                value = cand_value;
                alpha.copy_from_slice(&candidate);
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            // Newton direction failed; try a plain gradient step before giving up.
            let mut gscale = 1.0 / (1.0 + grad_norm);
            for _ in 0..60 {
                for ((cand, &a), &g) in candidate.iter_mut().zip(&alpha).zip(&grad) {
                    *cand = (a + gscale * g * a).clamp(PRIOR_FLOOR, PRIOR_CAP);
                }
                let cand_value = stats.objective(&candidate);
                if cand_value.is_finite() && cand_value > value {
                    accepted = true;
                    value = cand_value;
                    alpha.copy_from_slice(&candidate);
                    break;
                }
                gscale *= 0.5;
            }
        }
        if !accepted {
            // No ascent direction at working precision: treat as converged
            // when the objective is flat, otherwise report failure.
            let flat = grad_norm <= tol.max(1e-6) * (1.0 + value.abs());
            if flat {
                return Ok(DirichletFit { alpha, iterations, converged: true, grad_norm });
            }
            return Err(Error::Estimation {
                reason: format!("no ascent step found (gradient norm {grad_norm:.3e})"),
                last: alpha,
            });
        }
    }
}
