//! Sparse bag-of-words corpora, vocabularies and label files.
//!
//! The on-disk bag-of-words format is the sparse "docword" layout:
//!
//! ```text
//! D V NNZ
//! doc_id word_id count
//! ...
//! ```
//!
//! with 1-based ids, sorted by `doc_id` then `word_id`. Vocabulary files hold
//! one token per line (line `i` is word id `i`), label files one non-negative
//! integer per line (line `d` is the class of document `d`).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() {
                return Err(Error::Parse { line: i + 1, msg: "empty token".into() });
            }
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("duplicate token {t:?}"),
                });
            }
        }
        Ok(Self { tokens, index })
    }

    /// Placeholder tokens `w0 .. w{size-1}`.
    pub fn synthetic(size: usize) -> Self {
        Self::new((0..size).map(|i| format!("w{i}")).collect()).expect("distinct tokens")
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::new(text.lines().map(|l| l.trim().to_string()).collect())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.tokens {
            out.push_str(t);
            out.push('\n');
        }
        out
    }
}

/// One document as sorted `(word_id, count)` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    entries: Vec<(usize, u32)>,
    length: u64,
    pub label: Option<usize>,
}

impl Document {
    /// Builds a document, merging repeated ids and sorting by word id.
    /// Zero counts are discarded.
    pub fn from_counts(counts: impl IntoIterator<Item = (usize, u32)>) -> Self {
        let mut entries: Vec<(usize, u32)> = counts.into_iter().filter(|&(_, c)| c > 0).collect();
        entries.sort_unstable_by_key(|&(w, _)| w);
        entries.dedup_by(|next, prev| {
            if next.0 == prev.0 {
                prev.1 += next.1;
                true
            } else {
                false
            }
        });
        let length = entries.iter().map(|&(_, c)| u64::from(c)).sum();
        Self { entries, length, label: None }
    }

    /// Builds a document from a token sequence of word ids.
    pub fn from_tokens(tokens: &[usize]) -> Self {
        Self::from_counts(tokens.iter().map(|&w| (w, 1)))
    }

    pub fn with_label(mut self, label: usize) -> Self {
        self.label = Some(label);
        self
    }

    pub fn entries(&self) -> &[(usize, u32)] {
        &self.entries
    }

    /// Total token count N_d.
    pub fn length(&self) -> u64 {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    docs: Vec<Document>,
    vocab_size: usize,
}

impl Corpus {
    pub fn new(docs: Vec<Document>, vocab_size: usize) -> Result<Self> {
        for (d, doc) in docs.iter().enumerate() {
            if let Some(&(w, _)) = doc.entries.last() {
                if w >= vocab_size {
                    return Err(Error::Index(format!(
                        "document {d} uses word id {w} but the vocabulary has {vocab_size} terms"
                    )));
                }
            }
        }
        Ok(Self { docs, vocab_size })
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn num_tokens(&self) -> u64 {
        self.docs.iter().map(Document::length).sum()
    }

    /// Ground-truth labels, if every document carries one.
    pub fn labels(&self) -> Option<Vec<usize>> {
        self.docs.iter().map(|d| d.label).collect()
    }

    /// Serializes to the sparse bag-of-words format.
    pub fn to_bow(&self) -> String {
        let nnz: usize = self.docs.iter().map(|d| d.entries.len()).sum();
        let mut out = String::with_capacity(16 * (nnz + 1));
        let _ = writeln!(out, "{} {} {}", self.docs.len(), self.vocab_size, nnz);
        for (d, doc) in self.docs.iter().enumerate() {
            for &(w, c) in &doc.entries {
                let _ = writeln!(out, "{} {} {}", d + 1, w + 1, c);
            }
        }
        out
    }

    /// Serializes labels, one per line. Documents without a label are an error.
    pub fn labels_to_text(&self) -> Result<String> {
        let labels = self
            .labels()
            .ok_or_else(|| Error::Config("corpus has unlabeled documents".into()))?;
        Ok(labels_to_text(&labels))
    }
}

pub fn labels_to_text(labels: &[usize]) -> String {
    let mut out = String::with_capacity(labels.len() * 3);
    for l in labels {
        let _ = writeln!(out, "{l}");
    }
    out
}

/// What [`load_bow`] had to adjust while reading.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    /// 0-based ids (in the file's numbering) of documents dropped for being empty.
    pub dropped_empty: Vec<usize>,
    pub header_docs: usize,
}

#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub corpus: Corpus,
    pub vocab: Vocabulary,
    pub report: LoadReport,
}

/// Loads a bag-of-words corpus with its vocabulary and optional labels.
pub fn load_bow(bow_path: &Path, vocab_path: &Path, labels_path: Option<&Path>) -> Result<LoadedCorpus> {
    let bow = fs::read_to_string(bow_path).map_err(|e| Error::io(bow_path, e))?;
    let vocab = Vocabulary::load(vocab_path)?;
    let labels = match labels_path {
        Some(p) => Some(parse_labels(&fs::read_to_string(p).map_err(|e| Error::io(p, e))?)?),
        None => None,
    };
    let (corpus, report) = parse_bow(&bow, labels.as_deref())?;
    if vocab.len() != corpus.vocab_size() {
        return Err(Error::Dimension { expected: corpus.vocab_size(), found: vocab.len() });
    }
    Ok(LoadedCorpus { corpus, vocab, report })
}

/// Parses the sparse bag-of-words text. Empty documents are dropped (with
/// their labels) and recorded in the report.
pub fn parse_bow(text: &str, labels: Option<&[usize]>) -> Result<(Corpus, LoadReport)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (header_line, header) = lines.next().ok_or(Error::EmptyCorpus)?;
    let header: Vec<usize> = parse_fields(header, header_line + 1)?;
    let [num_docs, vocab_size, nnz] = header[..] else {
        return Err(Error::Parse {
            line: header_line + 1,
            msg: format!("header needs 3 fields, found {}", header.len()),
        });
    };
    if num_docs == 0 {
        return Err(Error::EmptyCorpus);
    }
    if let Some(l) = labels {
        if l.len() != num_docs {
            return Err(Error::Dimension { expected: num_docs, found: l.len() });
        }
    }

    let mut per_doc: Vec<Vec<(usize, u32)>> = vec![Vec::new(); num_docs];
    let mut seen = 0usize;
    let mut last: Option<(usize, usize)> = None;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let fields: Vec<usize> = parse_fields(line, lineno)?;
        let [doc_id, word_id, count] = fields[..] else {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected `doc_id word_id count`, found {} fields", fields.len()),
            });
        };
        if doc_id == 0 || doc_id > num_docs {
            return Err(Error::Range {
                line: lineno,
                msg: format!("doc id {doc_id} outside 1..={num_docs}"),
            });
        }
        if word_id == 0 || word_id > vocab_size {
            return Err(Error::Range {
                line: lineno,
                msg: format!("word id {word_id} outside 1..={vocab_size}"),
            });
        }
        if count == 0 {
            return Err(Error::Parse { line: lineno, msg: "count must be positive".into() });
        }
        let count = u32::try_from(count)
            .map_err(|_| Error::Parse { line: lineno, msg: format!("count {count} too large") })?;
        if let Some(prev) = last {
            if (doc_id, word_id) <= prev {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "entries must be strictly ascending by doc id then word id".into(),
                });
            }
        }
        last = Some((doc_id, word_id));
        per_doc[doc_id - 1].push((word_id - 1, count));
        seen += 1;
    }
    if seen != nnz {
        return Err(Error::Parse {
            line: header_line + 1,
            msg: format!("header declares {nnz} entries, file has {seen}"),
        });
    }

    let mut report = LoadReport { header_docs: num_docs, ..Default::default() };
    let mut docs = Vec::with_capacity(num_docs);
    for (d, entries) in per_doc.into_iter().enumerate() {
        if entries.is_empty() {
            report.dropped_empty.push(d);
            continue;
        }
        let length = entries.iter().map(|&(_, c)| u64::from(c)).sum();
        docs.push(Document { entries, length, label: labels.map(|l| l[d]) });
    }
    if !report.dropped_empty.is_empty() {
        warn!("dropped {} empty documents", report.dropped_empty.len());
    }
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok((Corpus { docs, vocab_size }, report))
}

fn parse_fields(line: &str, lineno: usize) -> Result<Vec<usize>> {
    line.split_whitespace()
        .map(|f| {
            f.parse::<usize>().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("expected a non-negative integer, found {f:?}"),
            })
        })
        .collect()
}

pub fn parse_labels(text: &str) -> Result<Vec<usize>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<usize>().map_err(|_| Error::Parse {
                line: i + 1,
                msg: format!("expected a non-negative integer label, found {:?}", l.trim()),
            })
        })
        .collect()
}

pub fn load_labels(path: &Path) -> Result<Vec<usize>> {
    parse_labels(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

/// Dense tf-idf matrix: `tf = count / N_d`, `idf = ln(D / df)`.
pub fn tfidf_vectors(corpus: &Corpus) -> Vec<Vec<f64>> {
    let num_docs = corpus.num_docs() as f64;
    let mut df = vec![0usize; corpus.vocab_size()];
    for doc in corpus.docs() {
        for &(w, _) in doc.entries() {
            df[w] += 1;
        }
    }
    let idf: Vec<f64> = df
        .iter()
        .map(|&n| if n == 0 { 0.0 } else { (num_docs / n as f64).ln() })
        .collect();

    let mut zero_rows = 0usize;
    let rows: Vec<Vec<f64>> = corpus
        .docs()
        .iter()
        .map(|doc| {
            let mut row = vec![0.0; corpus.vocab_size()];
            let len = doc.length() as f64;
            for &(w, c) in doc.entries() {
                row[w] = f64::from(c) / len * idf[w];
            }
            if row.iter().all(|&x| x == 0.0) {
                zero_rows += 1;
            }
            row
        })
        .collect();
    if zero_rows > 0 {
        warn!("{zero_rows} documents have an all-zero tf-idf vector");
    }
    rows
}
