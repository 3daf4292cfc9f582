use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::Args;
use mgctm::corpus::load_bow;
use mgctm::eval::{clustering_accuracy, nmi, ClusterLabels};
use mgctm::mgctm::ModelFile;

use crate::methods::fit_mgctm;
use crate::setup::{print_scores, Globals, ModelFlags, Staged, SUCCESS};

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Bag-of-words corpus.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    /// Optional ground truth; when given, AC and NMI of the fit are printed.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Output model file.
    #[arg(long)]
    model: PathBuf,
    /// Output fit report; defaults to the model path with a `.report.json` extension.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    flags: ModelFlags,
}

fn report_path(model: &Path) -> PathBuf {
    model.with_extension("report.json")
}

pub fn run(globals: &Globals, args: TrainArgs) -> Result<ExitCode> {
    let config = args.flags.hyper(globals)?;
    let lda = globals.lda();
    let loaded = load_bow(&args.corpus, &args.vocab, args.labels.as_deref())?;
    let corpus = loaded.corpus;
    if !loaded.report.dropped_empty.is_empty() {
        log::warn!("dropped {} empty documents", loaded.report.dropped_empty.len());
    }

    let (params, labels, report) = fit_mgctm(&corpus, &config, &lda)?;
    let file = ModelFile::new(config, params, Some(labels.labels().to_vec()));

    let mut staged = Staged::default();
    staged.add(&args.model, &file.to_json()?)?;
    let report_file = args.report.unwrap_or_else(|| report_path(&args.model));
    staged.add(&report_file, &serde_json::to_string_pretty(&report)?)?;
    staged.commit()?;

    for (i, value) in report.elbo_trace.iter().enumerate() {
        println!("iter={} elbo={value:.6}", i + 1);
    }
    println!("converged={}", report.converged);
    if let Some(truth) = corpus.labels() {
        let truth = ClusterLabels::from_vec(truth);
        print_scores(clustering_accuracy(&labels, &truth)?, nmi(&labels, &truth)?);
    }
    Ok(SUCCESS)
}
