//! Text-generation metrics for single-reference hint evaluation.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::OnceLock;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Exec;

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("no pairs to evaluate")]
    EmptyCorpus,
    #[error("{candidates} candidates but {references} references")]
    LengthMismatch { candidates: usize, references: usize },
    #[error("BLEU order must be in 1..=4, got {0}")]
    BadOrder(usize),
    #[error("invalid metric config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub rouge_beta: f64,
    /// Recall weight in METEOR's harmonic mean; 0.9 gives 10PR/(R+9P).
    pub meteor_alpha: f64,
    pub meteor_gamma: f64,
    pub meteor_beta: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            rouge_beta: 1.2,
            meteor_alpha: 0.9,
            meteor_gamma: 0.5,
            meteor_beta: 3.0,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<(), MetricError> {
        let fields = [
            ("rouge_beta", self.rouge_beta),
            ("meteor_alpha", self.meteor_alpha),
            ("meteor_gamma", self.meteor_gamma),
            ("meteor_beta", self.meteor_beta),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(MetricError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.meteor_alpha >= 1.0 || self.meteor_gamma > 1.0 {
            return Err(MetricError::InvalidConfig("meteor_alpha must be < 1 and meteor_gamma <= 1".into()));
        }
        Ok(())
    }
}

/// Lowercases and splits on anything that is not alphanumeric.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn normalize(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

pub fn exact_match(candidate: &str, reference: &str) -> f64 {
    if normalize(candidate) == normalize(reference) {
        1.0
    } else {
        0.0
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n > 0 {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

fn bleu_tokens(cand: &[String], refr: &[String], n: usize) -> f64 {
    let c = cand.len();
    if c == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for order in 1..=n {
        if c < order {
            return 0.0;
        }
        let ref_counts = ngram_counts(refr, order);
        let clipped: usize = ngram_counts(cand, order)
            .iter()
            .map(|(g, &k)| k.min(ref_counts.get(g).copied().unwrap_or(0)))
            .sum();
        if clipped == 0 {
            return 0.0;
        }
        log_sum += (clipped as f64 / (c - order + 1) as f64).ln();
    }
    let r = refr.len() as f64;
    let bp = if c as f64 >= r { 1.0 } else { (1.0 - r / c as f64).exp() };
    bp * (log_sum / n as f64).exp()
}

/// BLEU@n without smoothing.
pub fn bleu(candidate: &str, reference: &str, n: usize) -> Result<f64, MetricError> {
    if !(1..=MAX_ORDER).contains(&n) {
        return Err(MetricError::BadOrder(n));
    }
    Ok(bleu_tokens(&tokenize(candidate), &tokenize(reference), n))
}

fn stemmer() -> &'static Stemmer {
    static STEMMER: OnceLock<Stemmer> = OnceLock::new();
    STEMMER.get_or_init(|| Stemmer::create(Algorithm::English))
}

/// Greedy two-stage unigram alignment (exact, then stem). Returns
/// (candidate index, reference index) pairs sorted by candidate index.
fn meteor_alignment(cand: &[String], refr: &[String]) -> Vec<(usize, usize)> {
    let mut ref_used = vec![false; refr.len()];
    let mut cand_match: Vec<Option<usize>> = vec![None; cand.len()];
    for (i, tok) in cand.iter().enumerate() {
        if let Some(j) = (0..refr.len()).find(|&j| !ref_used[j] && refr[j] == *tok) {
            ref_used[j] = true;
            cand_match[i] = Some(j);
        }
    }
    let stem = stemmer();
    let ref_stems: Vec<_> = refr.iter().map(|t| stem.stem(t)).collect();
    for (i, tok) in cand.iter().enumerate() {
        if cand_match[i].is_some() {
            continue;
        }
        let s = stem.stem(tok);
        if let Some(j) = (0..refr.len()).find(|&j| !ref_used[j] && ref_stems[j] == s) {
            ref_used[j] = true;
            cand_match[i] = Some(j);
        }
    }
    cand_match
        .into_iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| (i, j)))
        .collect()
}

fn meteor_tokens(cand: &[String], refr: &[String], cfg: &MetricConfig) -> f64 {
    let alignment = meteor_alignment(cand, refr);
    let m = alignment.len();
    if m == 0 {
        return 0.0;
    }
    let chunks = 1 + alignment
        .windows(2)
        .filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1))
        .count();
    let p = m as f64 / cand.len() as f64;
    let r = m as f64 / refr.len() as f64;
    let f_mean = p * r / (cfg.meteor_alpha * p + (1.0 - cfg.meteor_alpha) * r);
    let penalty = cfg.meteor_gamma * (chunks as f64 / m as f64).powf(cfg.meteor_beta);
    f_mean * (1.0 - penalty)
}

pub fn meteor(candidate: &str, reference: &str) -> f64 {
    meteor_tokens(&tokenize(candidate), &tokenize(reference), &MetricConfig::default())
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn rouge_l_tokens(cand: &[String], refr: &[String], beta: f64) -> f64 {
    let lcs = lcs_len(cand, refr);
    if lcs == 0 {
        return 0.0;
    }
    let p = lcs as f64 / cand.len() as f64;
    let r = lcs as f64 / refr.len() as f64;
    let b2 = beta * beta;
    (1.0 + b2) * p * r / (r + b2 * p)
}

pub fn rouge_l(candidate: &str, reference: &str) -> f64 {
    rouge_l_tokens(&tokenize(candidate), &tokenize(reference), MetricConfig::default().rouge_beta)
}

fn cosine_sparse(a: &HashMap<Vec<String>, f64>, b: &HashMap<Vec<String>, f64>) -> f64 {
    let norm = |v: &HashMap<Vec<String>, f64>| v.values().map(|x| x * x).sum::<f64>().sqrt();
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.iter().filter_map(|(g, x)| b.get(g).map(|y| x * y)).sum();
    (dot / (na * nb)).clamp(0.0, 1.0)
}

fn cider_tokens(cands: &[Vec<String>], refs: &[Vec<String>]) -> Vec<f64> {
    let n_docs = refs.len() as f64;
    let mut scores = vec![0.0; cands.len()];
    for order in 1..=MAX_ORDER {
        let cand_tf: Vec<_> = cands.iter().map(|t| ngram_counts(t, order)).collect();
        let ref_tf: Vec<_> = refs.iter().map(|t| ngram_counts(t, order)).collect();
        let mut df: HashMap<&[String], usize> = HashMap::new();
        for tf in &ref_tf {
            for g in tf.keys() {
                *df.entry(*g).or_insert(0) += 1;
            }
        }
        let idf = |g: &[String]| n_docs.ln() - (df.get(g).copied().unwrap_or(0).max(1) as f64).ln();
        let degenerate = cand_tf
            .iter()
            .chain(&ref_tf)
            .flat_map(|tf| tf.keys())
            .all(|g| idf(g) == 0.0);
        let weigh = |tf: &HashMap<&[String], usize>| -> HashMap<Vec<String>, f64> {
            tf.iter()
                .map(|(g, &k)| (g.to_vec(), if degenerate { k as f64 } else { k as f64 * idf(g) }))
                .collect()
        };
        for (i, score) in scores.iter_mut().enumerate() {
            *score += cosine_sparse(&weigh(&cand_tf[i]), &weigh(&ref_tf[i]));
        }
    }
    scores.into_iter().map(|s| s / MAX_ORDER as f64).collect()
}

/// Per-pair CIDEr with document frequencies taken over the references.
pub fn cider(candidates: &[&str], references: &[&str]) -> Result<Vec<f64>, MetricError> {
    if candidates.len() != references.len() {
        return Err(MetricError::LengthMismatch {
            candidates: candidates.len(),
            references: references.len(),
        });
    }
    if candidates.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let c: Vec<_> = candidates.iter().map(|s| tokenize(s)).collect();
    let r: Vec<_> = references.iter().map(|s| tokenize(s)).collect();
    Ok(cider_tokens(&c, &r))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PairScores {
    pub exact_match: f64,
    pub bleu1: f64,
    pub bleu2: f64,
    pub bleu3: f64,
    pub bleu4: f64,
    pub meteor: f64,
    pub rouge_l: f64,
    pub cider: f64,
}

impl PairScores {
    pub const NAMES: [&'static str; 8] =
        ["exact_match", "bleu1", "bleu2", "bleu3", "bleu4", "meteor", "rouge_l", "cider"];

    pub fn values(&self) -> [f64; 8] {
        [
            self.exact_match,
            self.bleu1,
            self.bleu2,
            self.bleu3,
            self.bleu4,
            self.meteor,
            self.rouge_l,
            self.cider,
        ]
    }

    fn from_values(v: [f64; 8]) -> Self {
        Self {
            exact_match: v[0],
            bleu1: v[1],
            bleu2: v[2],
            bleu3: v[3],
            bleu4: v[4],
            meteor: v[5],
            rouge_l: v[6],
            cider: v[7],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPair {
    pub candidate: String,
    pub reference: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub count: usize,
    pub means: PairScores,
    pub pairs: Vec<PairScores>,
}

impl MetricReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("pairs: {}\n", self.count);
        let _ = writeln!(out, "{:<12} {:>8}", "metric", "mean");
        for (name, v) in PairScores::NAMES.iter().zip(self.means.values()) {
            let _ = writeln!(out, "{name:<12} {v:>8.4}");
        }
        out
    }
}

pub fn evaluate_corpus(pairs: &[EvalPair]) -> Result<MetricReport, MetricError> {
    evaluate_corpus_with(pairs, &MetricConfig::default(), Exec::default())
}

pub fn evaluate_corpus_with(pairs: &[EvalPair], cfg: &MetricConfig, exec: Exec) -> Result<MetricReport, MetricError> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let tokens = exec.map(pairs, |p| (tokenize(&p.candidate), tokenize(&p.reference)));
    let cands: Vec<_> = tokens.iter().map(|t| t.0.clone()).collect();
    let refs: Vec<_> = tokens.iter().map(|t| t.1.clone()).collect();
    let cider_scores = cider_tokens(&cands, &refs);
    let per_pair = exec.map_range(pairs.len(), |i| {
        let (c, r) = &tokens[i];
        PairScores {
            exact_match: exact_match(&pairs[i].candidate, &pairs[i].reference),
            bleu1: bleu_tokens(c, r, 1),
            bleu2: bleu_tokens(c, r, 2),
            bleu3: bleu_tokens(c, r, 3),
            bleu4: bleu_tokens(c, r, 4),
            meteor: meteor_tokens(c, r, cfg),
            rouge_l: rouge_l_tokens(c, r, cfg.rouge_beta),
            cider: cider_scores[i],
        }
    });
    let mut sums = [0.0; 8];
    for s in &per_pair {
        for (acc, v) in sums.iter_mut().zip(s.values()) {
            *acc += v;
        }
    }
    let n = per_pair.len() as f64;
    Ok(MetricReport {
        count: per_pair.len(),
        means: PairScores::from_values(sums.map(|s| s / n)),
        pairs: per_pair,
    })
}
