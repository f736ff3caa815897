//! Token-level tf-idf features and a linear soft-margin SVM trained by
//! stochastic subgradient descent.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexer::strip_comments;

pub const DEFAULT_C: f64 = 0.644;
pub const DEFAULT_EPOCHS: usize = 50;
pub const DEFAULT_FOLDS: usize = 5;
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum ClassifierError {
    #[error("cannot fit a vocabulary on an empty corpus")]
    EmptyCorpus,
    #[error("training set needs both classes (got {positives} insecure, {negatives} secure)")]
    SingleClass { positives: usize, negatives: usize },
    #[error("training set needs at least 2 samples")]
    TooFewSamples,
    #[error("{0} labels for {1} samples")]
    LengthMismatch(usize, usize),
    #[error("label {0} is not +1 or -1")]
    BadLabel(i8),
    #[error("non-finite feature value in sample {0}")]
    NonFinite(usize),
    #[error("penalty C must be positive and finite, got {0}")]
    BadPenalty(f64),
    #[error("feature index {index} outside vocabulary of size {size}")]
    VocabularyMismatch { index: usize, size: usize },
    #[error("{k} folds requested but the smaller class has {smallest} samples")]
    TooManyFolds { k: usize, smallest: usize },
    #[error("empty C grid")]
    EmptyGrid,
    #[error("model file: {0}")]
    ModelFile(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenDocument {
    pub tokens: Vec<String>,
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

/// Comments removed; words are maximal `[A-Za-z0-9_$]` runs and every other
/// non-whitespace character is a token of its own.
pub fn tokenize(code_text: &str) -> TokenDocument {
    let text = strip_comments(code_text);
    let mut tokens = Vec::new();
    let mut word = String::new();
    for c in text.chars() {
        if is_word_char(c) {
            word.push(c);
            continue;
        }
        if !word.is_empty() {
            tokens.push(std::mem::take(&mut word));
        }
        if !c.is_whitespace() {
            tokens.push(c.to_string());
        }
    }
    if !word.is_empty() {
        tokens.push(word);
    }
    TokenDocument { tokens }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    /// Sorted, so indices are dense and independent of document order.
    tokens: Vec<String>,
    #[serde(skip)]
    index: BTreeMap<String, usize>,
    pub idf: Vec<f64>,
    pub n_documents: usize,
}

impl Vocabulary {
    pub fn from_parts(tokens: Vec<String>, idf: Vec<f64>, n_documents: usize) -> Self {
        let index = tokens.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        Vocabulary {
            tokens,
            index,
            idf,
            n_documents,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> &str {
        &self.tokens[index]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn idf_of(&self, token: &str) -> Option<f64> {
        self.index_of(token).map(|i| self.idf[i])
    }

    /// Multiply every idf by `factor`; used to check scale invariance.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut v = self.clone();
        v.idf.iter_mut().for_each(|x| *x *= factor);
        v
    }
}

pub fn smoothed_idf(n_documents: usize, df: usize) -> f64 {
    ((1.0 + n_documents as f64) / (1.0 + df as f64)).ln() + 1.0
}

pub fn fit_vocabulary(docs: &[TokenDocument]) -> Result<Vocabulary, ClassifierError> {
    if docs.is_empty() {
        return Err(ClassifierError::EmptyCorpus);
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let unique: BTreeSet<&str> = doc.tokens.iter().map(String::as_str).collect();
        for t in unique {
            *df.entry(t).or_default() += 1;
        }
    }
    let n = docs.len();
    let (tokens, idf): (Vec<String>, Vec<f64>) = df
        .into_iter()
        .map(|(t, d)| (t.to_string(), smoothed_idf(n, d)))
        .unzip();
    Ok(Vocabulary::from_parts(tokens, idf, n))
}

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector {
    pub entries: Vec<(usize, f64)>,
}

impl FeatureVector {
    pub fn from_map(map: BTreeMap<usize, f64>) -> Self {
        FeatureVector {
            entries: map.into_iter().filter(|&(_, v)| v != 0.0).collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| dense[i] * v).sum()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        FeatureVector {
            entries: self.entries.iter().map(|&(i, v)| (i, v * alpha)).collect(),
        }
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|&(i, _)| i)
    }
}

pub fn vectorize(doc: &TokenDocument, vocab: &Vocabulary) -> FeatureVector {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for t in &doc.tokens {
        if let Some(i) = vocab.index_of(t) {
            *counts.entry(i).or_default() += 1.0;
        }
    }
    for (i, c) in counts.iter_mut() {
        *c *= vocab.idf[*i];
    }
    let norm = counts.values().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        counts.values_mut().for_each(|v| *v /= norm);
    }
    FeatureVector::from_map(counts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub x: Vec<FeatureVector>,
    /// +1 insecure, -1 secure.
    pub y: Vec<i8>,
    pub vocabulary: Vocabulary,
}

impl TrainingSet {
    pub fn new(
        x: Vec<FeatureVector>,
        y: Vec<i8>,
        vocabulary: Vocabulary,
    ) -> Result<Self, ClassifierError> {
        if x.len() != y.len() {
            return Err(ClassifierError::LengthMismatch(y.len(), x.len()));
        }
        if x.len() < 2 {
            return Err(ClassifierError::TooFewSamples);
        }
        if let Some(&bad) = y.iter().find(|&&l| l != 1 && l != -1) {
            return Err(ClassifierError::BadLabel(bad));
        }
        for (i, fv) in x.iter().enumerate() {
            if fv.entries.iter().any(|(_, v)| !v.is_finite()) {
                return Err(ClassifierError::NonFinite(i));
            }
            if let Some(index) = fv.max_index().filter(|&m| m >= vocabulary.len()) {
                return Err(ClassifierError::VocabularyMismatch {
                    index,
                    size: vocabulary.len(),
                });
            }
        }
        let ts = TrainingSet { x, y, vocabulary };
        let (positives, negatives) = ts.class_counts();
        if positives == 0 || negatives == 0 {
            return Err(ClassifierError::SingleClass {
                positives,
                negatives,
            });
        }
        Ok(ts)
    }

    /// Fit a vocabulary on `docs` and vectorize them.
    pub fn from_documents(docs: &[TokenDocument], y: Vec<i8>) -> Result<Self, ClassifierError> {
        let vocabulary = fit_vocabulary(docs)?;
        let x = docs.iter().map(|d| vectorize(d, &vocabulary)).collect();
        Self::new(x, y, vocabulary)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.y.iter().filter(|&&l| l == 1).count();
        (pos, self.y.len() - pos)
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self, ClassifierError> {
        Self::new(
            indices.iter().map(|&i| self.x[i].clone()).collect(),
            indices.iter().map(|&i| self.y[i]).collect(),
            self.vocabulary.clone(),
        )
    }
}

fn hinge(margin: f64) -> f64 {
    (1.0 - margin).max(0.0)
}

/// ½‖w‖² + C Σ max(0, 1 − yᵢ(wᵀxᵢ + b)).
pub fn objective(w: &[f64], b: f64, ts: &TrainingSet, c: f64) -> f64 {
    let reg = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    let loss: f64 = ts
        .x
        .iter()
        .zip(&ts.y)
        .map(|(x, &y)| hinge(f64::from(y) * (x.dot(w) + b)))
        .sum();
    reg + c * loss
}

/// A subgradient of [`objective`]; exact gradient away from hinge kinks.
pub fn subgradient(w: &[f64], b: f64, ts: &TrainingSet, c: f64) -> (Vec<f64>, f64) {
    let mut gw = w.to_vec();
    let mut gb = 0.0;
    for (x, &y) in ts.x.iter().zip(&ts.y) {
        let y = f64::from(y);
        if y * (x.dot(w) + b) < 1.0 {
            for &(i, v) in &x.entries {
                gw[i] -= c * y * v;
            }
            gb -= c * y;
        }
    }
    (gw, gb)
}

/// Exact minimizer of the hinge loss over b for fixed w. The loss is convex
/// piecewise linear with kinks at 1 − sᵢ (positives) and −1 − sᵢ
/// (negatives); among the minimizing kinks the midpoint is returned, so flat
/// optima resolve symmetrically.
pub fn refit_bias(w: &[f64], ts: &TrainingSet) -> f64 {
    let mut p: Vec<f64> = Vec::new();
    let mut q: Vec<f64> = Vec::new();
    for (x, &y) in ts.x.iter().zip(&ts.y) {
        let s = x.dot(w);
        if y == 1 {
            p.push(1.0 - s);
        } else {
            q.push(-1.0 - s);
        }
    }
    p.sort_by(f64::total_cmp);
    q.sort_by(f64::total_cmp);
    let mut p_suffix = vec![0.0; p.len() + 1];
    for i in (0..p.len()).rev() {
        p_suffix[i] = p_suffix[i + 1] + p[i];
    }
    let mut q_prefix = vec![0.0; q.len() + 1];
    for i in 0..q.len() {
        q_prefix[i + 1] = q_prefix[i] + q[i];
    }
    let loss = |b: f64| {
        let k = p.partition_point(|&v| v <= b);
        let above = (p.len() - k) as f64;
        let j = q.partition_point(|&v| v < b);
        (p_suffix[k] - above * b) + (j as f64 * b - q_prefix[j])
    };
    let kinks: Vec<f64> = p.iter().chain(&q).copied().collect();
    let values: Vec<f64> = kinks.iter().map(|&b| loss(b)).collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-12 * (1.0 + min.abs());
    let (lo, hi) = kinks
        .iter()
        .zip(&values)
        .filter(|(_, &v)| v <= min + tol)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (&b, _)| {
            (lo.min(b), hi.max(b))
        });
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TrainedOn {
    pub samples: usize,
    pub insecure: usize,
    pub secure: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub w: Vec<f64>,
    pub b: f64,
    pub c: f64,
    pub vocabulary: Vocabulary,
    pub trained_on: TrainedOn,
    pub seed: u64,
    pub epochs: usize,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    /// +1 insecure, -1 secure.
    pub label: i8,
    pub margin: f64,
}

/// Averaged Pegasos. λ = 1/(nC), η_t = 1/(λt); iterates are projected onto
/// the ball that contains the optimum. At every epoch end the running average
/// and the last iterate get an exact bias refit, and the candidate with the
/// lowest objective is returned.
pub fn train(
    ts: &TrainingSet,
    c: f64,
    epochs: usize,
    seed: u64,
) -> Result<SvmModel, ClassifierError> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(ClassifierError::BadPenalty(c));
    }
    let n = ts.len();
    let dim = ts.vocabulary.len();
    let lambda = 1.0 / (n as f64 * c);
    let radius = 1.0 / lambda.sqrt();
    let bias_bound = 1.0 + radius;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();

    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut sum_w = vec![0.0; dim];
    let mut t = 0usize;
    let mut best = (f64::INFINITY, w.clone(), b);

    for _ in 0..epochs.max(1) {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let x = &ts.x[i];
            let y = f64::from(ts.y[i]);
            let violated = y * (x.dot(&w) + b) < 1.0;
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if violated {
                for &(j, v) in &x.entries {
                    w[j] += eta * y * v;
                }
                b += eta * y;
            }
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > radius {
                let s = radius / norm;
                w.iter_mut().for_each(|v| *v *= s);
            }
            b = b.clamp(-bias_bound, bias_bound);
            sum_w.iter_mut().zip(&w).for_each(|(s, v)| *s += v);
        }
        let avg_w: Vec<f64> = sum_w.iter().map(|s| s / t as f64).collect();
        for cand in [avg_w, w.clone()] {
            let cb = refit_bias(&cand, ts);
            let obj = objective(&cand, cb, ts, c);
            if obj < best.0 {
                best = (obj, cand, cb);
            }
        }
    }
    let (positives, negatives) = ts.class_counts();
    Ok(SvmModel {
        w: best.1,
        b: best.2,
        c,
        vocabulary: ts.vocabulary.clone(),
        trained_on: TrainedOn {
            samples: n,
            insecure: positives,
            secure: negatives,
        },
        seed,
        epochs,
        objective: best.0,
    })
}

impl SvmModel {
    pub fn predict(&self, fv: &FeatureVector) -> Result<Prediction, ClassifierError> {
        if let Some(index) = fv.max_index().filter(|&m| m >= self.w.len()) {
            return Err(ClassifierError::VocabularyMismatch {
                index,
                size: self.w.len(),
            });
        }
        let margin = fv.dot(&self.w) + self.b;
        Ok(Prediction {
            label: if margin >= 0.0 { 1 } else { -1 },
            margin,
        })
    }

    pub fn predict_text(&self, code_text: &str) -> Prediction {
        let fv = vectorize(&tokenize(code_text), &self.vocabulary);
        self.predict(&fv).expect("vectorized with the model's own vocabulary")
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            version: MODEL_VERSION,
            c: self.c,
            b: self.b,
            vocab: self
                .vocabulary
                .tokens()
                .iter()
                .zip(&self.vocabulary.idf)
                .zip(&self.w)
                .map(|((token, &idf), &weight)| VocabEntry {
                    token: token.clone(),
                    idf,
                    weight,
                })
                .collect(),
            n_documents: self.vocabulary.n_documents,
            trained_on: self.trained_on,
            seed: self.seed,
            epochs: self.epochs,
            objective: self.objective,
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ClassifierError> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| ClassifierError::ModelFile(e.to_string()))?;
        if file.version != MODEL_VERSION {
            return Err(ClassifierError::ModelFile(format!(
                "unsupported model version {}",
                file.version
            )));
        }
        if file.c.is_nan() || file.c <= 0.0 {
            return Err(ClassifierError::BadPenalty(file.c));
        }
        let mut tokens = Vec::with_capacity(file.vocab.len());
        let mut idf = Vec::with_capacity(file.vocab.len());
        let mut w = Vec::with_capacity(file.vocab.len());
        for e in file.vocab {
            tokens.push(e.token);
            idf.push(e.idf);
            w.push(e.weight);
        }
        if tokens.windows(2).any(|p| p[0] >= p[1]) {
            return Err(ClassifierError::ModelFile(
                "vocabulary must be sorted and unique".into(),
            ));
        }
        Ok(SvmModel {
            w,
            b: file.b,
            c: file.c,
            vocabulary: Vocabulary::from_parts(tokens, idf, file.n_documents),
            trained_on: file.trained_on,
            seed: file.seed,
            epochs: file.epochs,
            objective: file.objective,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct VocabEntry {
    token: String,
    idf: f64,
    weight: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    #[serde(rename = "C")]
    c: f64,
    b: f64,
    vocab: Vec<VocabEntry>,
    n_documents: usize,
    trained_on: TrainedOn,
    seed: u64,
    epochs: usize,
    objective: f64,
}

/// Confusion matrix with insecure as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn record(&mut self, truth: i8, predicted: i8) {
        match (truth == 1, predicted == 1) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
            (true, false) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<FoldReport>,
    pub mean_accuracy: f64,
    pub mean_precision: f64,
    pub mean_recall: f64,
}

/// Stratified fold assignment: each class is shuffled and dealt round-robin.
pub fn stratified_folds(y: &[i8], k: usize, seed: u64) -> Result<Vec<Vec<usize>>, ClassifierError> {
    let mut pos: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 1).collect();
    let mut neg: Vec<usize> = (0..y.len()).filter(|&i| y[i] != 1).collect();
    let smallest = pos.len().min(neg.len());
    if k < 2 || k > smallest {
        return Err(ClassifierError::TooManyFolds { k, smallest });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut folds = vec![Vec::new(); k];
    for (j, &i) in pos.iter().chain(neg.iter()).enumerate() {
        folds[j % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

pub fn cross_validate(
    ts: &TrainingSet,
    k: usize,
    c: f64,
    epochs: usize,
    seed: u64,
) -> Result<CvReport, ClassifierError> {
    let folds = stratified_folds(&ts.y, k, seed)?;
    let reports: Result<Vec<FoldReport>, ClassifierError> = folds
        .par_iter()
        .map(|test| {
            let held: BTreeSet<usize> = test.iter().copied().collect();
            let train_idx: Vec<usize> = (0..ts.len()).filter(|i| !held.contains(i)).collect();
            let model = train(&ts.subset(&train_idx)?, c, epochs, seed)?;
            let mut cm = ConfusionMatrix::default();
            for &i in test {
                cm.record(ts.y[i], model.predict(&ts.x[i])?.label);
            }
            Ok(FoldReport {
                confusion: cm,
                accuracy: cm.accuracy(),
                precision: cm.precision(),
                recall: cm.recall(),
            })
        })
        .collect();
    let folds = reports?;
    let mean = |f: fn(&FoldReport) -> f64| folds.iter().map(f).sum::<f64>() / folds.len() as f64;
    Ok(CvReport {
        mean_accuracy: mean(|r| r.accuracy),
        mean_precision: mean(|r| r.precision),
        mean_recall: mean(|r| r.recall),
        folds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best_c: f64,
    pub scores: Vec<(f64, f64)>,
}

/// Best C by mean CV accuracy; ties go to the smaller C.
pub fn grid_search_c(
    ts: &TrainingSet,
    grid: &[f64],
    k: usize,
    epochs: usize,
    seed: u64,
) -> Result<GridResult, ClassifierError> {
    let mut values: Vec<f64> = grid.to_vec();
    if let Some(&bad) = values.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
        return Err(ClassifierError::BadPenalty(bad));
    }
    values.sort_by(f64::total_cmp);
    values.dedup();
    if values.is_empty() {
        return Err(ClassifierError::EmptyGrid);
    }
    let mut scores = Vec::with_capacity(values.len());
    let mut best: Option<(f64, f64)> = None;
    for c in values {
        let acc = cross_validate(ts, k, c, epochs, seed)?.mean_accuracy;
        scores.push((c, acc));
        if best.is_none_or(|(_, a)| acc > a) {
            best = Some((c, acc));
        }
    }
    Ok(GridResult {
        best_c: best.expect("non-empty grid").0,
        scores,
    })
}
