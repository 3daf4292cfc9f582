use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Args;
use mgctm::corpus::{load_bow, load_labels};
use mgctm::eval::{clustering_accuracy, nmi, ClusterLabels};
use mgctm::mgctm::{infer, predict_labels, ModelFile};

use crate::methods::{cluster, num_classes, Method, MethodSettings};
use crate::setup::{invalid, print_scores, Globals, ModelFlags, SUCCESS};

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Ground-truth labels, one per document.
    #[arg(long)]
    labels: PathBuf,
    /// How to produce the clustering. `mgctm` reads --model; the other
    /// methods are fitted on --corpus.
    #[arg(long, value_enum, required_unless_present = "predictions")]
    method: Option<Method>,
    /// Trained model for `--method mgctm`.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Corpus to cluster. With `--method mgctm` the documents are assigned
    /// under the model's parameters instead of using its stored assignments.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Score a label file directly instead of running a method.
    #[arg(long, conflicts_with = "method")]
    predictions: Option<PathBuf>,
    /// Topics for LDA+Kmeans (default from --config, else 60).
    #[arg(long)]
    lda_topics: Option<usize>,
    #[command(flatten)]
    flags: ModelFlags,
}

fn read_model(path: &PathBuf) -> Result<ModelFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(ModelFile::from_json(&text)?)
}

pub fn run(globals: &Globals, args: EvalArgs) -> Result<ExitCode> {
    let (pred, truth) = if let Some(path) = &args.predictions {
        (ClusterLabels::from_vec(load_labels(path)?), ClusterLabels::from_vec(load_labels(&args.labels)?))
    } else {
        let method = args.method.expect("clap requires --method without --predictions");
        match (method, &args.corpus) {
            (Method::Mgctm, None) => {
                let model = read_model(args.model.as_ref().ok_or_else(|| invalid("--method mgctm needs --model"))?)?;
                let stored = model
                    .assignments
                    .ok_or_else(|| invalid("the model stores no assignments; pass --corpus and --vocab"))?;
                (
                    ClusterLabels::new(stored, model.params.num_clusters())?,
                    ClusterLabels::from_vec(load_labels(&args.labels)?),
                )
            }
            (_, corpus_path) => {
                let corpus_path = corpus_path.as_ref().ok_or_else(|| invalid(format!("--method {} needs --corpus", method.name())))?;
                let vocab = args.vocab.as_ref().ok_or_else(|| invalid("--corpus needs --vocab"))?;
                let corpus = load_bow(corpus_path, vocab, Some(&args.labels))?.corpus;
                let truth = corpus.labels().expect("labels were attached while loading");
                let pred = if method == Method::Mgctm {
                    let model = read_model(args.model.as_ref().ok_or_else(|| invalid("--method mgctm needs --model"))?)?;
                    let states = infer(&corpus, &model.params, model.config.e_step_iters)?;
                    predict_labels(&states, model.params.num_clusters())
                } else {
                    let hyper = args.flags.hyper(globals)?;
                    let lda = globals.lda();
                    let kmeans = globals.kmeans();
                    let settings = MethodSettings {
                        clusters: args.flags.clusters.unwrap_or_else(|| num_classes(&truth)),
                        hyper: &hyper,
                        lda: &lda,
                        lda_topics: args.lda_topics.unwrap_or(lda.num_topics),
                        kmeans: &kmeans,
                    };
                    cluster(method, &corpus, &settings)?
                };
                (pred, ClusterLabels::from_vec(truth))
            }
        }
    };
    if pred.len() != truth.len() {
        return Err(invalid(format!("{} predictions but {} labels", pred.len(), truth.len())));
    }
    print_scores(clustering_accuracy(&pred, &truth)?, nmi(&pred, &truth)?);
    Ok(SUCCESS)
}
