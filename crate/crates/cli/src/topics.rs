use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use mgctm::corpus::Vocabulary;
use mgctm::mgctm::{top_words, ModelFile, TopicRef};

use crate::setup::{invalid, SUCCESS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scope {
    All,
    Global,
    Local,
}

#[derive(Debug, Args)]
pub struct TopicsArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    /// Words per topic.
    #[arg(long, default_value_t = 10)]
    top_n: usize,
    #[arg(long, value_enum, default_value = "all")]
    scope: Scope,
    /// Only this cluster's local topics.
    #[arg(long)]
    cluster: Option<usize>,
}

pub fn run(args: &TopicsArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.model).with_context(|| format!("reading {}", args.model.display()))?;
    let model = ModelFile::from_json(&text)?;
    let vocab = Vocabulary::load(&args.vocab)?;
    if vocab.len() != model.vocab_size {
        return Err(invalid(format!(
            "vocabulary has {} words but the model has {}",
            vocab.len(),
            model.vocab_size
        )));
    }
    let params = &model.params;
    if let Some(c) = args.cluster {
        if c >= params.num_clusters() {
            return Err(invalid(format!("cluster {c} out of range (model has {})", params.num_clusters())));
        }
    }
    let words = |topic: TopicRef| -> Result<String> {
        let ids = top_words(params, topic, args.top_n)?;
        Ok(ids.iter().map(|&w| vocab.token(w).expect("id below vocabulary size")).collect::<Vec<_>>().join(" "))
    };

    if matches!(args.scope, Scope::All | Scope::Global) && args.cluster.is_none() {
        println!("# global topics");
        for topic in 0..params.num_global_topics() {
            println!("global {topic}\t{}", words(TopicRef::Global { topic })?);
        }
    }
    if matches!(args.scope, Scope::All | Scope::Local) {
        let clusters: Vec<usize> = match args.cluster {
            Some(c) => vec![c],
            None => (0..params.num_clusters()).collect(),
        };
        for cluster in clusters {
            println!("# cluster {cluster} local topics");
            for topic in 0..params.local_topics_per_cluster() {
                println!("local {cluster}.{topic}\t{}", words(TopicRef::Local { cluster, topic })?);
            }
        }
    }
    Ok(SUCCESS)
}
