//! Configuration merging, file staging and error classification.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use mgctm::baselines::{KMeansConfig, LdaConfig};
use mgctm::mgctm::{GeneratorConfig, HyperConfig, InitScheme, PriorUpdate};
use serde::Deserialize;
use tempfile::NamedTempFile;

/// Invalid user input. Reported with exit code 2.
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

pub fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Invalid>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<mgctm::Error>() {
            use mgctm::Error::*;
            return match e {
                Io { .. } | Parse { .. } | Range { .. } | EmptyCorpus | Config(_) | Dimension { .. } | Index(_)
                | Format(_) => 2,
                _ => 1,
            };
        }
    }
    1
}

pub const SUCCESS: ExitCode = ExitCode::SUCCESS;

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train: HyperConfig,
    pub lda: LdaConfig,
    pub kmeans: KMeansConfig,
    pub synth: GeneratorConfig,
}

/// Settings shared by every command.
pub struct Globals {
    pub seed: Option<u64>,
    pub config: RunConfig,
}

impl Globals {
    pub fn new(seed: Option<u64>, threads: Option<usize>, config: Option<&Path>) -> Result<Self> {
        let config = match config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text)
                    .map_err(|e| invalid(format!("config file {}: {e}", path.display())))?
            }
            None => RunConfig::default(),
        };
        if let Some(n) = threads {
            if n == 0 {
                return Err(invalid("--threads must be at least 1"));
            }
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
        }
        Ok(Self { seed, config })
    }

    pub fn lda(&self) -> LdaConfig {
        let mut cfg = self.config.lda.clone();
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg
    }

    pub fn kmeans(&self) -> KMeansConfig {
        let mut cfg = self.config.kmeans.clone();
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum InitArg {
    Random,
    LdaNaive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PriorArg {
    EveryIter,
    Fixed,
}

/// Model shape and optimizer flags; unset flags fall back to `--config`.
#[derive(Debug, Clone, clap::Args)]
pub struct ModelFlags {
    /// Number of clusters J.
    #[arg(long)]
    pub clusters: Option<usize>,
    /// Local topics per cluster K.
    #[arg(long)]
    pub local_topics: Option<usize>,
    /// Global topics R.
    #[arg(long)]
    pub global_topics: Option<usize>,
    #[arg(long)]
    pub max_em_iters: Option<usize>,
    #[arg(long)]
    pub e_step_iters: Option<usize>,
    /// Relative ELBO change that stops EM.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum)]
    pub init: Option<InitArg>,
    #[arg(long, value_enum)]
    pub prior_update: Option<PriorArg>,
    /// Random restarts; the highest ELBO wins.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Iteration cap of the seeding run (0 disables seeding).
    #[arg(long)]
    pub seeding_iters: Option<usize>,
    /// Iterations with fixed priors at the start of the main run.
    #[arg(long)]
    pub prior_warmup_iters: Option<usize>,
}

impl ModelFlags {
    pub fn hyper(&self, globals: &Globals) -> Result<HyperConfig> {
        let mut c = globals.config.train.clone();
        if let Some(v) = self.clusters {
            c.num_clusters = v;
        }
        if let Some(v) = self.local_topics {
            c.local_topics_per_cluster = v;
        }
        if let Some(v) = self.global_topics {
            c.num_global_topics = v;
        }
        if let Some(v) = self.max_em_iters {
            c.max_em_iters = v;
        }
        if let Some(v) = self.e_step_iters {
            c.e_step_iters = v;
        }
        if let Some(v) = self.tol {
            c.elbo_rel_tol = v;
        }
        if let Some(v) = self.restarts {
            c.restarts = v;
        }
        if let Some(v) = self.seeding_iters {
            c.seeding_iters = v;
        }
        if let Some(v) = self.prior_warmup_iters {
            c.prior_warmup_iters = v;
        }
        if let Some(v) = self.init {
            c.init_scheme = match v {
                InitArg::Random => InitScheme::Random,
                InitArg::LdaNaive => InitScheme::FromLabels,
            };
        }
        if let Some(v) = self.prior_update {
            c.prior_update = match v {
                PriorArg::EveryIter => PriorUpdate::EveryIter,
                PriorArg::Fixed => PriorUpdate::Fixed,
            };
        }
        if let Some(seed) = globals.seed {
            c.seed = seed;
        }
        c.validate()?;
        Ok(c)
    }
}

/// Output files written together: everything goes to temporary files in
/// the target directories first and is renamed into place only by
/// [`Staged::commit`], so a failure leaves no partial outputs.
#[derive(Default)]
pub struct Staged {
    files: Vec<(NamedTempFile, PathBuf)>,
}

impl Staged {
    pub fn add(&mut self, path: &Path, contents: &str) -> Result<()> {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let mut tmp = NamedTempFile::new_in(dir).with_context(|| format!("creating a file in {}", dir.display()))?;
        tmp.write_all(contents.as_bytes())?;
        tmp.flush()?;
        self.files.push((tmp, path.to_path_buf()));
        Ok(())
    }

    pub fn commit(self) -> Result<()> {
        for (tmp, path) in self.files {
            tmp.persist(&path).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

pub fn write_one(path: &Path, contents: &str) -> Result<()> {
    let mut staged = Staged::default();
    staged.add(path, contents)?;
    staged.commit()
}

/// Percentages with two decimals, as `key=value` lines.
pub fn print_scores(ac: f64, nmi: f64) {
    println!("ac={:.2}", 100.0 * ac);
    println!("nmi={:.2}", 100.0 * nmi);
}
