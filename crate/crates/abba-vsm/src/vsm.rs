//! Bag-of-words construction over symbol strings, per-class TF-IDF weights,
//! and cosine-similarity classification.
//!
//! Words are fixed-length symbol subsequences cut by a sliding window of
//! size `wsize` and stride `wstep`. All bags sharing a class label are summed
//! into one class document; the weight matrix holds
//! `TF(word, class) * IDF(word)` with
//!
//! ```text
//! TF  = count(word in class) / total terms in class
//! IDF = ln(classes / classes containing word)
//! ```
//!
//! A test sample becomes a raw frequency vector over the training vocabulary
//! (words never seen in training are dropped) and is assigned the class whose
//! weight column has the highest cosine similarity.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantizer::{render_symbols, Codebook, SymbolId, SymbolString};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// A fixed-length symbol subsequence.
pub type Word = Vec<SymbolId>;

/// Renders a word the same way symbol strings are rendered.
pub fn render_word(word: &[SymbolId]) -> String {
    render_symbols(word)
}

/// Cuts `symbols` into words. Returns the whole string as a single word when
/// it is shorter than `wsize`, and nothing for an empty string.
pub fn window(symbols: &[SymbolId], wsize: usize, wstep: usize) -> Result<Vec<Word>> {
    if wsize < 1 || wstep < 1 {
        return Err(Error::InvalidParams(format!(
            "window size and step must be at least 1, got wsize={wsize} wstep={wstep}"
        )));
    }
    let n = symbols.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n < wsize {
        return Ok(vec![symbols.to_vec()]);
    }
    let mut words = Vec::with_capacity((n - wsize) / wstep + 1);
    let mut i = 0;
    while i + wsize <= n {
        words.push(symbols[i..i + wsize].to_vec());
        i += wstep;
    }
    Ok(words)
}

/// Word multiset for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct BagOfWords {
    pub sample_id: u64,
    pub label: Option<String>,
    pub counts: BTreeMap<Word, u64>,
}

/// Builds the bag of words of one symbol string.
pub fn bag_of_words(s: &SymbolString, wsize: usize, wstep: usize) -> Result<BagOfWords> {
    let mut counts = BTreeMap::new();
    for word in window(&s.symbols, wsize, wstep)? {
        *counts.entry(word).or_insert(0) += 1;
    }
    Ok(BagOfWords {
        sample_id: s.sample_id,
        label: s.label.clone(),
        counts,
    })
}

/// Per-class documents: summed word counts of all bags sharing a label.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub docs: BTreeMap<String, BTreeMap<Word, u64>>,
}

/// Groups labeled bags into class documents. Every bag must carry a label and
/// at least two classes must be present.
pub fn build_corpus(bags: &[BagOfWords]) -> Result<Corpus> {
    let mut docs: BTreeMap<String, BTreeMap<Word, u64>> = BTreeMap::new();
    for bag in bags {
        let label = bag.label.clone().ok_or(Error::MissingLabel {
            sample_id: bag.sample_id,
        })?;
        let doc = docs.entry(label).or_default();
        for (word, count) in &bag.counts {
            *doc.entry(word.clone()).or_insert(0) += count;
        }
    }
    if docs.len() < 2 {
        return Err(Error::SingleClassCorpus(format!("found {}", docs.len())));
    }
    Ok(Corpus { docs })
}

/// The TF-IDF side of a fitted model, before the codebook and the
/// configuration echo are attached.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfWeights {
    pub vocabulary: Vec<Word>,
    pub class_labels: Vec<String>,
    /// Rows follow `vocabulary`, columns follow `class_labels`.
    pub weights: Vec<Vec<f64>>,
    /// Total term count per class document.
    pub class_term_totals: Vec<u64>,
}

/// Computes the TF-IDF weight matrix of a corpus.
pub fn fit_tfidf(corpus: &Corpus) -> TfidfWeights {
    let class_labels: Vec<String> = corpus.docs.keys().cloned().collect();
    let n_classes = class_labels.len() as f64;

    let mut vocab_set: std::collections::BTreeSet<&Word> = std::collections::BTreeSet::new();
    for doc in corpus.docs.values() {
        vocab_set.extend(doc.keys());
    }
    let vocabulary: Vec<Word> = vocab_set.into_iter().cloned().collect();

    let class_term_totals: Vec<u64> = corpus.docs.values().map(|d| d.values().sum()).collect();

    let mut weights = vec![vec![0.0; class_labels.len()]; vocabulary.len()];
    for (wi, word) in vocabulary.iter().enumerate() {
        let df = corpus
            .docs
            .values()
            .filter(|d| d.contains_key(word))
            .count();
        let idf = (n_classes / df as f64).ln();
        for (ci, doc) in corpus.docs.values().enumerate() {
            if let Some(&count) = doc.get(word) {
                let total = class_term_totals[ci];
                if total > 0 {
                    let tf = count as f64 / total as f64;
                    weights[wi][ci] = tf * idf;
                }
            }
        }
    }

    TfidfWeights {
        vocabulary,
        class_labels,
        weights,
        class_term_totals,
    }
}

/// A fitted classifier: vocabulary, per-class weight columns, the embedded
/// codebook, and the configuration needed to replay the pipeline on new data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VsmModel {
    pub codebook: Codebook,
    pub vocabulary: Vec<Word>,
    pub class_labels: Vec<String>,
    pub weights: Vec<Vec<f64>>,
    pub class_term_totals: Vec<u64>,
    pub wsize: usize,
    pub wstep: usize,
    pub rt: f64,
    pub dataset_name: String,
    pub seed: u64,
}

/// Outcome of classifying one sample. `scores` follows the model's class
/// order. A sample whose frequency vector is zero (all words unseen in
/// training, or an empty string) is unclassifiable; with the fallback enabled
/// it is mapped to the largest training class instead of left unlabeled.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub sample_id: u64,
    pub predicted: Option<String>,
    pub unclassifiable: bool,
    pub scores: Vec<f64>,
}

impl VsmModel {
    pub fn assemble(
        tfidf: TfidfWeights,
        codebook: Codebook,
        wsize: usize,
        wstep: usize,
        rt: f64,
        dataset_name: String,
        seed: u64,
    ) -> Self {
        VsmModel {
            codebook,
            vocabulary: tfidf.vocabulary,
            class_labels: tfidf.class_labels,
            weights: tfidf.weights,
            class_term_totals: tfidf.class_term_totals,
            wsize,
            wstep,
            rt,
            dataset_name,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.codebook.validate()?;
        if self.class_labels.len() < 2 {
            return Err(Error::Format(
                "model must carry at least two classes".into(),
            ));
        }
        if self.weights.len() != self.vocabulary.len() {
            return Err(Error::Format(format!(
                "weight matrix has {} rows for {} vocabulary words",
                self.weights.len(),
                self.vocabulary.len()
            )));
        }
        if self.class_term_totals.len() != self.class_labels.len() {
            return Err(Error::Format(
                "class term totals do not match class labels".into(),
            ));
        }
        for row in &self.weights {
            if row.len() != self.class_labels.len() {
                return Err(Error::Format(
                    "weight row width does not match class count".into(),
                ));
            }
            if row.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(Error::Format(
                    "weights must be finite and non-negative".into(),
                ));
            }
        }
        if self.vocabulary.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Format(
                "vocabulary must be sorted and distinct".into(),
            ));
        }
        if self.wsize < 1 || self.wstep < 1 {
            return Err(Error::Format("window parameters must be at least 1".into()));
        }
        Ok(())
    }

    fn vocab_index(&self, word: &Word) -> Option<usize> {
        self.vocabulary.binary_search(word).ok()
    }

    /// Euclidean norm of each class's weight column.
    fn class_norms(&self) -> Vec<f64> {
        let mut sums = vec![0.0f64; self.class_labels.len()];
        for row in &self.weights {
            for (s, w) in sums.iter_mut().zip(row) {
                *s += w * w;
            }
        }
        sums.into_iter().map(f64::sqrt).collect()
    }

    /// The class with the most training terms; ties go to class order.
    pub fn largest_class(&self) -> &str {
        let mut best = 0usize;
        for (i, &t) in self.class_term_totals.iter().enumerate().skip(1) {
            if t > self.class_term_totals[best] {
                best = i;
            }
        }
        &self.class_labels[best]
    }

    /// Classifies a raw frequency bag against the model.
    pub fn classify_bag(
        &self,
        sample_id: u64,
        counts: &BTreeMap<Word, u64>,
        fallback_largest_class: bool,
    ) -> Classification {
        let norms = self.class_norms();
        self.classify_bag_with_norms(sample_id, counts, fallback_largest_class, &norms)
    }

    fn classify_bag_with_norms(
        &self,
        sample_id: u64,
        counts: &BTreeMap<Word, u64>,
        fallback_largest_class: bool,
        class_norms: &[f64],
    ) -> Classification {
        let n_classes = self.class_labels.len();
        // out-of-vocabulary words are dropped before the norm is taken
        let mut w_norm2 = 0.0f64;
        let mut dots = vec![0.0f64; n_classes];
        for (word, &count) in counts {
            if let Some(idx) = self.vocab_index(word) {
                let c = count as f64;
                w_norm2 += c * c;
                for (dot, weight) in dots.iter_mut().zip(&self.weights[idx]) {
                    *dot += c * weight;
                }
            }
        }

        if w_norm2 == 0.0 {
            let predicted = fallback_largest_class.then(|| self.largest_class().to_string());
            return Classification {
                sample_id,
                predicted,
                unclassifiable: true,
                scores: vec![0.0; n_classes],
            };
        }

        let w_norm = w_norm2.sqrt();
        let scores: Vec<f64> = dots
            .iter()
            .zip(class_norms)
            .map(|(&dot, &vn)| {
                if vn > 0.0 {
                    (dot / (w_norm * vn)).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect();

        // argmax with ties resolved by class order
        let mut best = 0usize;
        for (i, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = i;
            }
        }
        Classification {
            sample_id,
            predicted: Some(self.class_labels[best].clone()),
            unclassifiable: false,
            scores,
        }
    }

    /// Windows a symbol string with the model's parameters and classifies it.
    pub fn classify(&self, s: &SymbolString, fallback_largest_class: bool) -> Classification {
        let bag = bag_of_words(s, self.wsize, self.wstep)
            .expect("model window parameters are validated at construction");
        self.classify_bag(s.sample_id, &bag.counts, fallback_largest_class)
    }

    /// Classifies a batch, computing the class norms once.
    pub fn classify_all(
        &self,
        strings: &[SymbolString],
        fallback_largest_class: bool,
    ) -> Vec<Classification> {
        let norms = self.class_norms();
        strings
            .iter()
            .map(|s| {
                let bag = bag_of_words(s, self.wsize, self.wstep)
                    .expect("model window parameters are validated at construction");
                self.classify_bag_with_norms(
                    s.sample_id,
                    &bag.counts,
                    fallback_largest_class,
                    &norms,
                )
            })
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    #[serde(flatten)]
    model: VsmModel,
}

/// Writes a model as a single JSON document.
pub fn write_model(model: &VsmModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        model: model.clone(),
    };
    let text = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::Format(format!("model encoding failed: {e}")))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads and validates a model file.
pub fn read_model(path: impl AsRef<Path>) -> Result<VsmModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("{}: bad model file: {e}", path.display())))?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::Format(format!(
            "{}: unsupported model format_version {} (expected {MODEL_FORMAT_VERSION})",
            path.display(),
            file.format_version
        )));
    }
    file.model.validate()?;
    Ok(file.model)
}
