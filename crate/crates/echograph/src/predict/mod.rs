//! Role prediction from network, profile, and n-gram features.
//!
//! The feature vector has three blocks:
//!
//! - network: PageRank, undirected degree, clustering coefficient, and a
//!   presence flag (users outside the graph get zeros and flag 0);
//! - profile: tweet count, follower count, friend count, account age in
//!   weeks;
//! - text: sparse tf-idf n-gram weights (see [`tfidf`]).
//!
//! Balanced binary tasks pair every user holding the target role with an
//! equally sized seeded sample of the remaining users. Models are random
//! forests ([`forest`]) evaluated with stratified k-fold cross-validation.
//! The paper-style feature ablations are expressed with [`FeatureSet`]:
//! network+profile only, n-grams only, or all blocks.

pub mod forest;
pub mod tfidf;

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use forest::{train, ForestConfig, TrainedModel};
pub use tfidf::{tfidf_features, TextFeatures, TfidfConfig};

use crate::graph::FollowGraph;
use crate::ingest::UserProfileRecord;
use crate::metrics::NodeMetricVector;
use crate::polarity::RoleLabel;
use crate::UserId;

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("text corpus is empty")]
    EmptyCorpus,
    #[error("no users hold the target role {0}")]
    NoPositives(String),
    #[error("need {needed} negatives but only {available} candidates exist")]
    NotEnoughNegatives { needed: usize, available: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("cross-validation with k={k} needs at least k rows, got {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("invalid model file: {0}")]
    InvalidModel(String),
}

const SECONDS_PER_WEEK: f64 = 7.0 * 86_400.0;

/// Number of dense (network + profile) features ahead of the text block.
pub const DENSE_FEATURES: usize = 8;

/// Sparse per-user feature rows with named columns.
#[derive(Clone, Debug)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub rows: BTreeMap<UserId, Vec<(u32, f64)>>,
    text_offset: usize,
}

/// The ablation configurations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureSet {
    /// Network and profile blocks only.
    NetProfile,
    /// n-gram block only.
    NGram,
    /// Everything.
    All,
}

impl std::fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FeatureSet::NetProfile => "net",
            FeatureSet::NGram => "ngram",
            FeatureSet::All => "all",
        })
    }
}

pub struct FeatureInputs<'a> {
    pub graph: &'a FollowGraph,
    pub pagerank: &'a NodeMetricVector,
    pub degree: &'a NodeMetricVector,
    pub clustering: &'a NodeMetricVector,
    pub profiles: &'a BTreeMap<UserId, UserProfileRecord>,
    pub text: &'a TextFeatures,
    /// Reference timestamp for account ages.
    pub now: i64,
}

/// Assembles the full feature matrix over every user appearing in the
/// graph, the profile set, or the text corpus.
pub fn build_features(inputs: &FeatureInputs) -> FeatureMatrix {
    let mut names = vec![
        "pagerank".to_owned(),
        "degree".to_owned(),
        "clustering_coefficient".to_owned(),
        "network_present".to_owned(),
        "tweet_count".to_owned(),
        "followers_count".to_owned(),
        "friends_count".to_owned(),
        "account_age_weeks".to_owned(),
    ];
    debug_assert_eq!(names.len(), DENSE_FEATURES);
    names.extend(inputs.text.vocab.iter().map(|g| format!("ngram:{g}")));

    let mut users: Vec<UserId> = inputs.graph.ids().to_vec();
    users.extend(inputs.profiles.keys().cloned());
    users.extend(inputs.text.rows.keys().cloned());
    users.sort_unstable();
    users.dedup();

    let mut rows = BTreeMap::new();
    for user in users {
        let mut row: Vec<(u32, f64)> = Vec::new();
        let mut push = |idx: usize, value: f64| {
            if value != 0.0 {
                row.push((idx as u32, value));
            }
        };
        match inputs.graph.node_index(&user) {
            Some(node) => {
                push(0, inputs.pagerank.values[node as usize]);
                push(1, inputs.degree.values[node as usize]);
                push(2, inputs.clustering.values[node as usize]);
                push(3, 1.0);
            }
            None => {
                // Absent network metrics are imputed as zero; the presence
                // flag stays zero so the model can tell.
            }
        }
        if let Some(profile) = inputs.profiles.get(&user) {
            push(4, profile.statuses_count as f64);
            push(5, profile.followers_count as f64);
            push(6, profile.friends_count as f64);
            push(
                7,
                ((inputs.now - profile.account_created) as f64 / SECONDS_PER_WEEK).max(0.0),
            );
        }
        if let Some(text_row) = inputs.text.rows.get(&user) {
            for &(i, w) in text_row {
                row.push((i + DENSE_FEATURES as u32, w));
            }
        }
        rows.insert(user, row);
    }

    FeatureMatrix {
        names,
        rows,
        text_offset: DENSE_FEATURES,
    }
}

impl FeatureMatrix {
    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    /// Restricts the matrix to one ablation block, reindexing columns.
    pub fn subset(&self, set: FeatureSet) -> FeatureMatrix {
        let keep: Box<dyn Fn(u32) -> bool> = match set {
            FeatureSet::All => return self.clone(),
            FeatureSet::NetProfile => {
                let end = self.text_offset as u32;
                Box::new(move |i| i < end)
            }
            FeatureSet::NGram => {
                let start = self.text_offset as u32;
                Box::new(move |i| i >= start)
            }
        };
        let mut mapping = Vec::with_capacity(self.names.len());
        let mut names = Vec::new();
        for (i, name) in self.names.iter().enumerate() {
            if keep(i as u32) {
                mapping.push(Some(names.len() as u32));
                names.push(name.clone());
            } else {
                mapping.push(None);
            }
        }
        let rows = self
            .rows
            .iter()
            .map(|(user, row)| {
                let filtered: Vec<(u32, f64)> = row
                    .iter()
                    .filter_map(|&(i, w)| mapping[i as usize].map(|ni| (ni, w)))
                    .collect();
                (user.clone(), filtered)
            })
            .collect();
        FeatureMatrix {
            names,
            rows,
            text_offset: match set {
                FeatureSet::NetProfile => self.text_offset,
                FeatureSet::NGram => 0,
                FeatureSet::All => unreachable!(),
            },
        }
    }
}

/// Which role defines the positive class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RoleTarget {
    Partisan,
    Gatekeeper,
}

impl std::fmt::Display for RoleTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RoleTarget::Partisan => "partisan",
            RoleTarget::Gatekeeper => "gatekeeper",
        })
    }
}

#[derive(Clone, Debug)]
pub struct LabeledDataset {
    pub feature_names: Vec<String>,
    pub n_features: usize,
    pub rows: Vec<Vec<(u32, f64)>>,
    pub labels: Vec<bool>,
    pub users: Vec<UserId>,
    pub balanced: bool,
    pub seed: u64,
}

impl LabeledDataset {
    fn select(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            feature_names: self.feature_names.clone(),
            n_features: self.n_features,
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            users: indices.iter().map(|&i| self.users[i].clone()).collect(),
            balanced: false,
            seed: self.seed,
        }
    }
}

/// Builds a balanced task: positives are every user holding the target
/// role; negatives are a seeded uniform sample of equal size from the
/// remaining users in the matrix (including users whose role is
/// undefined).
pub fn build_task(
    matrix: &FeatureMatrix,
    roles: &BTreeMap<UserId, RoleLabel>,
    target: RoleTarget,
    seed: u64,
) -> Result<LabeledDataset, PredictError> {
    let holds_role = |user: &UserId| -> bool {
        roles
            .get(user)
            .map(|role| match target {
                RoleTarget::Partisan => role.partisan.map(|l| l.is_partisan()).unwrap_or(false),
                RoleTarget::Gatekeeper => role.gatekeeper.unwrap_or(false),
            })
            .unwrap_or(false)
    };

    let mut positives = Vec::new();
    let mut pool = Vec::new();
    for user in matrix.rows.keys() {
        if holds_role(user) {
            positives.push(user.clone());
        } else {
            pool.push(user.clone());
        }
    }
    if positives.is_empty() {
        return Err(PredictError::NoPositives(target.to_string()));
    }
    if pool.len() < positives.len() {
        return Err(PredictError::NotEnoughNegatives {
            needed: positives.len(),
            available: pool.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, pool.len(), positives.len());
    let mut negatives: Vec<UserId> = picks.iter().map(|i| pool[i].clone()).collect();
    negatives.sort_unstable();

    let mut rows = Vec::with_capacity(positives.len() * 2);
    let mut labels = Vec::with_capacity(positives.len() * 2);
    let mut users = Vec::with_capacity(positives.len() * 2);
    for (group, label) in [(&positives, true), (&negatives, false)] {
        for user in group {
            rows.push(matrix.rows[user].clone());
            labels.push(label);
            users.push(user.clone());
        }
    }

    Ok(LabeledDataset {
        feature_names: matrix.names.clone(),
        n_features: matrix.n_features(),
        rows,
        labels,
        users,
        balanced: true,
        seed,
    })
}

#[derive(Clone, Debug)]
pub struct CVReport {
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub seed: u64,
}

/// Stratified k-fold cross-validation.
///
/// Rows are shuffled within each class (seeded) and dealt round-robin, so
/// fold class counts differ by at most one. Fold `i` trains a forest
/// seeded from `(forest seed, i)`.
pub fn cross_validate(
    dataset: &LabeledDataset,
    k: usize,
    seed: u64,
    forest_config: &ForestConfig,
) -> Result<CVReport, PredictError> {
    let n = dataset.rows.len();
    if k == 0 || k > n {
        return Err(PredictError::KTooLarge { k, n });
    }

    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (class, stream) in [(false, 0u64), (true, 1u64)] {
        let mut indices: Vec<usize> = (0..n).filter(|&i| dataset.labels[i] == class).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        indices.shuffle(&mut rng);
        for (j, idx) in indices.into_iter().enumerate() {
            folds[j % k].push(idx);
        }
    }

    let mut fold_accuracies = Vec::with_capacity(k);
    for (fi, fold) in folds.iter().enumerate() {
        let train_indices: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != fi)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        let train_set = dataset.select(&train_indices);
        let test_set = dataset.select(fold);
        let fold_config = ForestConfig {
            seed: derive_seed(forest_config.seed, fi as u64),
            ..forest_config.clone()
        };
        let model = forest::train(&train_set, &fold_config)?;
        fold_accuracies.push(model.accuracy(&test_set));
    }
    let mean_accuracy = fold_accuracies.iter().sum::<f64>() / k as f64;
    Ok(CVReport {
        fold_accuracies,
        mean_accuracy,
        seed,
    })
}

/// SplitMix64 step over `base ^ f(salt)`: cheap independent streams for
/// derived seeds.
pub(crate) fn derive_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn write_cv_report_csv<W: Write>(report: &CVReport, mut w: W) -> std::io::Result<()> {
    writeln!(w, "fold,accuracy")?;
    for (i, acc) in report.fold_accuracies.iter().enumerate() {
        writeln!(w, "{i},{acc}")?;
    }
    writeln!(w, "mean,{}", report.mean_accuracy)
}
