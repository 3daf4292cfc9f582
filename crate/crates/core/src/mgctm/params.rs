use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the per-document cluster responsibilities are seeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    #[default]
    Random,
    FromLabels,
}

/// Whether the Dirichlet/Beta priors are re-estimated in each M-step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PriorUpdate {
    #[default]
    EveryIter,
    Fixed,
}

/// Model shape and optimization settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperConfig {
    /// Number of clusters J.
    pub num_clusters: usize,
    /// Local topics per cluster K.
    pub local_topics_per_cluster: usize,
    /// Shared global topics R.
    pub num_global_topics: usize,
    pub max_em_iters: usize,
    pub e_step_iters: usize,
    pub elbo_rel_tol: f64,
    pub seed: u64,
    /// Independent random initializations. With seeding, the seeding run
    /// with the highest ELBO is kept; otherwise the full fit with the highest
    /// final ELBO. Restart `r` uses seed `seed + r`.
    pub restarts: usize,
    pub init_scheme: InitScheme,
    pub prior_update: PriorUpdate,
    /// EM iterations that keep the priors at their initial values before
    /// `EveryIter` estimation starts. Priors estimated from near-uniform
    /// initial topics grow without bound and stop the topics separating.
    pub prior_warmup_iters: usize,
    /// Length cap of the seeding run that precedes `EveryIter` fits; 0
    /// turns seeding off. Seeding estimates the priors from the first
    /// iteration, which lets the topics collapse but separates clusters
    /// reliably. Its cluster responsibilities then start the main run with
    /// reset priors and re-perturbed topics.
    pub seeding_iters: usize,
}

impl Default for HyperConfig {
    fn default() -> Self {
        Self {
            num_clusters: 2,
            local_topics_per_cluster: 5,
            num_global_topics: 10,
            max_em_iters: 100,
            e_step_iters: 20,
            elbo_rel_tol: 1e-6,
            seed: 0,
            restarts: 1,
            init_scheme: InitScheme::Random,
            prior_update: PriorUpdate::EveryIter,
            prior_warmup_iters: 20,
            seeding_iters: 100,
        }
    }
}

impl HyperConfig {
    pub fn new(num_clusters: usize, local_topics: usize, global_topics: usize) -> Self {
        Self {
            num_clusters,
            local_topics_per_cluster: local_topics,
            num_global_topics: global_topics,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_clusters == 0 {
            return Err(Error::Config("num_clusters must be at least 1".into()));
        }
        if self.local_topics_per_cluster == 0 {
            return Err(Error::Config("local_topics_per_cluster must be at least 1".into()));
        }
        if self.num_global_topics == 0 {
            return Err(Error::Config(
                "num_global_topics must be at least 1: words can always take the global pathway"
                    .into(),
            ));
        }
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        if self.e_step_iters == 0 {
            return Err(Error::Config("e_step_iters must be at least 1".into()));
        }
        if !(self.elbo_rel_tol > 0.0) || !self.elbo_rel_tol.is_finite() {
            return Err(Error::Config("elbo_rel_tol must be a positive number".into()));
        }
        Ok(())
    }
}

/// Global model parameters.
///
/// `local_topics[j][k]` is the word distribution of local topic `k` in
/// cluster `j`; `global_topics[k]` is shared global topic `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub pi: Vec<f64>,
    pub gamma: [f64; 2],
    pub local_priors: Vec<Vec<f64>>,
    pub global_prior: Vec<f64>,
    pub local_topics: Vec<Vec<Vec<f64>>>,
    pub global_topics: Vec<Vec<f64>>,
}

const SIMPLEX_TOL: f64 = 1e-9;

fn check_simplex(v: &[f64], what: &str) -> Result<()> {
    if v.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::Config(format!("{what} has a negative or non-finite entry")));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::Config(format!("{what} sums to {s}, not 1")));
    }
    Ok(())
}

fn check_positive(v: &[f64], what: &str) -> Result<()> {
    if v.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::Config(format!("{what} must be strictly positive")));
    }
    Ok(())
}

impl ModelParams {
    pub fn num_clusters(&self) -> usize {
        self.pi.len()
    }

    pub fn local_topics_per_cluster(&self) -> usize {
        self.local_priors.first().map_or(0, Vec::len)
    }

    pub fn num_global_topics(&self) -> usize {
        self.global_prior.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.local_topics
            .first()
            .and_then(|c| c.first())
            .or_else(|| self.global_topics.first())
            .map_or(0, Vec::len)
    }

    /// Checks shapes, simplex constraints and prior positivity.
    pub fn validate(&self) -> Result<()> {
        let j = self.num_clusters();
        let k = self.local_topics_per_cluster();
        let r = self.num_global_topics();
        let v = self.vocab_size();
        if j == 0 || k == 0 || v == 0 {
            return Err(Error::Config("model needs J, K, V >= 1".into()));
        }
        check_simplex(&self.pi, "pi")?;
        check_positive(&self.gamma, "gamma")?;
        if self.local_priors.len() != j || self.local_topics.len() != j {
            return Err(Error::Config("local priors/topics must have one row per cluster".into()));
        }
        for (cj, (prior, topics)) in self.local_priors.iter().zip(&self.local_topics).enumerate() {
            if prior.len() != k || topics.len() != k {
                return Err(Error::Config(format!("cluster {cj} must have {k} local topics")));
            }
            check_positive(prior, "local prior")?;
            for (ck, row) in topics.iter().enumerate() {
                if row.len() != v {
                    return Err(Error::Config(format!("local topic ({cj},{ck}) has wrong length")));
                }
                check_simplex(row, &format!("local topic ({cj},{ck})"))?;
            }
        }
        check_positive(&self.global_prior, "global prior")?;
        if self.global_topics.len() != r {
            return Err(Error::Config("global topics must match the global prior length".into()));
        }
        for (ck, row) in self.global_topics.iter().enumerate() {
            if row.len() != v {
                return Err(Error::Config(format!("global topic {ck} has wrong length")));
            }
            check_simplex(row, &format!("global topic {ck}"))?;
        }
        Ok(())
    }

    /// Applies a cluster relabeling: cluster `j` of `self` becomes cluster
    /// `perm[j]` of the result.
    pub fn permute_clusters(&self, perm: &[usize]) -> Self {
        let mut out = self.clone();
        for (j, &to) in perm.iter().enumerate() {
            out.pi[to] = self.pi[j];
            out.local_priors[to] = self.local_priors[j].clone();
            out.local_topics[to] = self.local_topics[j].clone();
        }
        out
    }
}
