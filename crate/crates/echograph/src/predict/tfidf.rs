//! Sparse tf-idf n-gram features over per-user documents.
//!
//! Texts are lowercased and tokenized on word characters; n-grams join
//! consecutive tokens with single spaces. The vocabulary keeps the
//! `vocab_cap` grams with the highest document frequency (ties broken
//! lexicographically) in lexicographic column order. Weights are raw term
//! frequency times the smoothed inverse document frequency
//! `ln((1 + N) / (1 + df)) + 1`, and every row is L2-normalized.

use std::collections::{BTreeMap, HashMap};

use regex::Regex;

use crate::UserId;

use super::PredictError;

#[derive(Clone, Debug)]
pub struct TfidfConfig {
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub vocab_cap: usize,
}

impl Default for TfidfConfig {
    fn default() -> Self {
        TfidfConfig {
            ngram_min: 1,
            ngram_max: 2,
            vocab_cap: 20_000,
        }
    }
}

/// Vocabulary plus one sparse, L2-normalized row per user.
#[derive(Clone, Debug)]
pub struct TextFeatures {
    pub vocab: Vec<String>,
    pub rows: BTreeMap<UserId, Vec<(u32, f64)>>,
}

pub fn tokenize(text: &str) -> Vec<String> {
    let word = Regex::new(r"\w+").expect("valid regex");
    word.find_iter(&text.to_lowercase())
        .map(|m| m.as_str().to_owned())
        .collect()
}

fn ngrams(tokens: &[String], min: usize, max: usize) -> Vec<String> {
    let mut grams = Vec::new();
    for n in min..=max.max(min) {
        if n == 0 || tokens.len() < n {
            continue;
        }
        for window in tokens.windows(n) {
            grams.push(window.join(" "));
        }
    }
    grams
}

pub fn tfidf_features(
    texts: &BTreeMap<UserId, String>,
    config: &TfidfConfig,
) -> Result<TextFeatures, PredictError> {
    if texts.is_empty() {
        return Err(PredictError::EmptyCorpus);
    }
    let n_docs = texts.len();

    let mut doc_grams: BTreeMap<&UserId, Vec<String>> = BTreeMap::new();
    let mut df: HashMap<String, usize> = HashMap::new();
    for (user, text) in texts {
        let tokens = tokenize(text);
        let grams = ngrams(&tokens, config.ngram_min, config.ngram_max);
        let mut distinct = grams.clone();
        distinct.sort_unstable();
        distinct.dedup();
        for gram in distinct {
            *df.entry(gram).or_insert(0) += 1;
        }
        doc_grams.insert(user, grams);
    }

    let mut ranked: Vec<(&String, usize)> = df.iter().map(|(g, &d)| (g, d)).collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(config.vocab_cap);
    let mut vocab: Vec<String> = ranked.into_iter().map(|(g, _)| g.clone()).collect();
    vocab.sort_unstable();

    let index: HashMap<&str, u32> = vocab
        .iter()
        .enumerate()
        .map(|(i, g)| (g.as_str(), i as u32))
        .collect();
    let idf: Vec<f64> = vocab
        .iter()
        .map(|g| ((1.0 + n_docs as f64) / (1.0 + df[g] as f64)).ln() + 1.0)
        .collect();

    let mut rows = BTreeMap::new();
    for (user, grams) in doc_grams {
        let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
        for gram in &grams {
            if let Some(&i) = index.get(gram.as_str()) {
                *counts.entry(i).or_insert(0.0) += 1.0;
            }
        }
        let mut row: Vec<(u32, f64)> = counts
            .into_iter()
            .map(|(i, tf)| (i, tf * idf[i as usize]))
            .collect();
        let norm = row.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in &mut row {
                *w /= norm;
            }
        }
        rows.insert(user.clone(), row);
    }

    Ok(TextFeatures { vocab, rows })
}
