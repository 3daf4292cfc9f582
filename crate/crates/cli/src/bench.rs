use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::Args;
use log::warn;
use mgctm::corpus::load_bow;
use mgctm::eval::{clustering_accuracy, nmi, ClusterLabels};

use crate::methods::{cluster, num_classes, Method, MethodSettings};
use crate::setup::{write_one, Globals, ModelFlags, SUCCESS};

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Comma-separated methods, run in the given order.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "mgctm,lda-naive,lda-kmeans,kmeans")]
    methods: Vec<Method>,
    /// Comma-separated seeds, one row per method and seed. Defaults to --seed, else 0.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Tab-separated report file.
    #[arg(long)]
    out: PathBuf,
    /// Topics for LDA+Kmeans (default from --config, else 60).
    #[arg(long)]
    lda_topics: Option<usize>,
    #[command(flatten)]
    flags: ModelFlags,
}

struct Row {
    method: Method,
    seed: u64,
    scores: std::result::Result<(f64, f64), String>,
}

fn dedup(methods: &[Method]) -> Vec<Method> {
    let mut out = Vec::new();
    for &m in methods {
        if out.contains(&m) {
            warn!("method {} listed more than once; running it once", m.name());
        } else {
            out.push(m);
        }
    }
    out
}

fn one_line(msg: &str) -> String {
    msg.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn render(rows: &[Row], methods: &[Method]) -> String {
    let mut out = String::from("method\tseed\tac\tnmi\tstatus\n");
    for row in rows {
        let _ = match &row.scores {
            Ok((ac, nmi)) => writeln!(out, "{}\t{}\t{:.2}\t{:.2}\tok", row.method.name(), row.seed, 100.0 * ac, 100.0 * nmi),
            Err(msg) => writeln!(out, "{}\t{}\tNA\tNA\tfailed: {}", row.method.name(), row.seed, one_line(msg)),
        };
    }
    for &m in methods {
        let ok: Vec<(f64, f64)> = rows.iter().filter(|r| r.method == m).filter_map(|r| r.scores.clone().ok()).collect();
        let total = rows.iter().filter(|r| r.method == m).count();
        let _ = if ok.is_empty() {
            writeln!(out, "{}\tmean\tNA\tNA\tfailed (0/{total})", m.name())
        } else {
            let n = ok.len() as f64;
            let ac = ok.iter().map(|s| s.0).sum::<f64>() / n;
            let nmi = ok.iter().map(|s| s.1).sum::<f64>() / n;
            writeln!(out, "{}\tmean\t{:.2}\t{:.2}\tok ({}/{total})", m.name(), 100.0 * ac, 100.0 * nmi, ok.len())
        };
    }
    out
}

pub fn run(globals: &Globals, args: BenchArgs) -> Result<ExitCode> {
    let methods = dedup(&args.methods);
    let seeds = if args.seeds.is_empty() { vec![globals.seed.unwrap_or(0)] } else { args.seeds.clone() };
    let base_hyper = args.flags.hyper(globals)?;
    let corpus = load_bow(&args.corpus, &args.vocab, Some(&args.labels))?.corpus;
    let truth = corpus.labels().expect("labels were attached while loading");
    let clusters = args.flags.clusters.unwrap_or_else(|| num_classes(&truth));
    let truth = ClusterLabels::from_vec(truth);

    let mut rows = Vec::new();
    for &method in &methods {
        for &seed in &seeds {
            let hyper = mgctm::mgctm::HyperConfig { seed, ..base_hyper.clone() };
            let lda = mgctm::baselines::LdaConfig { seed, ..globals.lda() };
            let kmeans = mgctm::baselines::KMeansConfig { seed, ..globals.kmeans() };
            let settings = MethodSettings {
                clusters,
                hyper: &hyper,
                lda: &lda,
                lda_topics: args.lda_topics.unwrap_or(lda.num_topics),
                kmeans: &kmeans,
            };
            let scores = cluster(method, &corpus, &settings)
                .and_then(|pred| Ok((clustering_accuracy(&pred, &truth)?, nmi(&pred, &truth)?)))
                .map_err(|e| format!("{e:#}"));
            if let Err(msg) = &scores {
                warn!("{} with seed {seed} failed: {msg}", method.name());
            }
            rows.push(Row { method, seed, scores });
        }
    }
    let report = render(&rows, &methods);
    write_one(&args.out, &report)?;
    print!("{report}");
    if rows.iter().any(|r| r.scores.is_err()) {
        Ok(ExitCode::from(3))
    } else {
        Ok(SUCCESS)
    }
}
