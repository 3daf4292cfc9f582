use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Args;
use mgctm::corpus::{labels_to_text, Vocabulary};
use mgctm::mgctm::{sample_corpus, DocLength, HyperConfig, ModelFile};

use crate::setup::{invalid, Globals, Staged, SUCCESS};

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Number of documents.
    #[arg(long)]
    docs: usize,
    /// Tokens per document (the mean when --poisson is set).
    #[arg(long, default_value_t = 100)]
    doc_length: usize,
    /// Draw document lengths from a Poisson distribution.
    #[arg(long)]
    poisson: bool,
    /// Sample from this model file's parameters instead of generating them.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    local_topics: Option<usize>,
    #[arg(long)]
    global_topics: Option<usize>,
    #[arg(long)]
    vocab_size: Option<usize>,
    /// Output bag-of-words corpus.
    #[arg(long)]
    corpus: PathBuf,
    /// Output vocabulary (`w0`, `w1`, ...).
    #[arg(long)]
    vocab: PathBuf,
    /// Output true cluster labels.
    #[arg(long)]
    labels: PathBuf,
    /// Output JSON with every document's hidden draws: cluster, ω, topic
    /// proportions and per-token (word, local, topic).
    #[arg(long)]
    hidden: Option<PathBuf>,
    /// Output model file holding the generating parameters.
    #[arg(long)]
    truth: Option<PathBuf>,
}

pub fn run(globals: &Globals, args: SynthArgs) -> Result<ExitCode> {
    if args.docs == 0 {
        return Err(invalid("--docs must be at least 1"));
    }
    if args.doc_length == 0 {
        return Err(invalid("--doc-length must be at least 1"));
    }
    let mut generator = globals.config.synth.clone();
    if let Some(seed) = globals.seed {
        generator.seed = seed;
    }
    let params = match &args.params {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ModelFile::from_json(&text)?.params
        }
        None => {
            if let Some(v) = args.clusters {
                generator.num_clusters = v;
            }
            if let Some(v) = args.local_topics {
                generator.local_topics_per_cluster = v;
            }
            if let Some(v) = args.global_topics {
                generator.num_global_topics = v;
            }
            if let Some(v) = args.vocab_size {
                generator.vocab_size = v;
            }
            generator.generate()?
        }
    };
    let length = if args.poisson {
        DocLength::Poisson(args.doc_length as f64)
    } else {
        DocLength::Fixed(args.doc_length)
    };
    let (corpus, hidden) = sample_corpus(&params, args.docs, length, generator.seed.wrapping_add(1))?;

    let mut staged = Staged::default();
    staged.add(&args.corpus, &corpus.to_bow())?;
    staged.add(&args.vocab, &Vocabulary::synthetic(params.vocab_size()).to_text())?;
    staged.add(&args.labels, &labels_to_text(&hidden.clusters()))?;
    if let Some(path) = &args.hidden {
        staged.add(path, &serde_json::to_string(&hidden)?)?;
    }
    if let Some(path) = &args.truth {
        let shape = HyperConfig::new(params.num_clusters(), params.local_topics_per_cluster(), params.num_global_topics());
        staged.add(path, &ModelFile::new(shape, params, None).to_json()?)?;
    }
    staged.commit()?;
    println!("docs={} tokens={}", corpus.num_docs(), corpus.num_tokens());
    Ok(SUCCESS)
}
