//! Random forest of Gini-split decision trees over sparse rows.
//!
//! Each tree fits a bootstrap resample, choosing at every node the best
//! threshold among a fresh random subset of features (`sqrt` of the
//! feature count by default). Tree `i` draws from a ChaCha8 stream keyed
//! by `(seed, i)`, so training is deterministic for a fixed seed no matter
//! how many threads Rayon uses; trees are merged in index order.

use std::io::{BufRead, BufReader, Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{LabeledDataset, PredictError};

#[derive(Clone, Debug)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    /// Candidate features per split; defaults to sqrt(feature count).
    pub features_per_split: Option<usize>,
    pub min_samples_split: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 200,
            max_depth: None,
            features_per_split: None,
            min_samples_split: 2,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TreeNode {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        counts: [u32; 2],
    },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    /// Fraction of positive training rows in the leaf this row lands in.
    fn positive_share(&self, row: &[(u32, f64)]) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { counts } => {
                    let total = counts[0] + counts[1];
                    return counts[1] as f64 / total as f64;
                }
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if sparse_value(row, *feature) <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }
}

fn sparse_value(row: &[(u32, f64)], feature: u32) -> f64 {
    match row.binary_search_by_key(&feature, |&(i, _)| i) {
        Ok(pos) => row[pos].1,
        Err(_) => 0.0,
    }
}

#[derive(Clone, Debug)]
pub struct TrainedModel {
    pub feature_names: Vec<String>,
    pub n_features: usize,
    pub trees: Vec<Tree>,
}

/// Fits a forest on a labeled dataset.
///
/// Balance is the caller's contract ([`build_task`](super::build_task)
/// produces balanced tasks; cross-validation folds may be off by one).
/// A single-class dataset trains to a constant predictor.
pub fn train(dataset: &LabeledDataset, config: &ForestConfig) -> Result<TrainedModel, PredictError> {
    if dataset.rows.is_empty() {
        return Err(PredictError::EmptyDataset);
    }

    let n_features = dataset.n_features;
    let m = config
        .features_per_split
        .unwrap_or_else(|| (n_features as f64).sqrt().floor() as usize)
        .clamp(1, n_features.max(1));

    let trees: Vec<Tree> = (0..config.n_trees)
        .into_par_iter()
        .map(|ti| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(ti as u64);
            let n = dataset.rows.len();
            let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut tree = Tree::default();
            grow(&mut tree, dataset, &mut rng, sample, 0, m, config);
            tree
        })
        .collect();

    Ok(TrainedModel {
        feature_names: dataset.feature_names.clone(),
        n_features,
        trees,
    })
}

fn gini(counts: [usize; 2]) -> f64 {
    let total = (counts[0] + counts[1]) as f64;
    let p0 = counts[0] as f64 / total;
    let p1 = counts[1] as f64 / total;
    1.0 - p0 * p0 - p1 * p1
}

/// Grows a subtree over `rows` (bootstrap indices) and returns its node id.
fn grow(
    tree: &mut Tree,
    dataset: &LabeledDataset,
    rng: &mut ChaCha8Rng,
    rows: Vec<usize>,
    depth: usize,
    m: usize,
    config: &ForestConfig,
) -> u32 {
    let mut counts = [0usize; 2];
    for &r in &rows {
        counts[dataset.labels[r] as usize] += 1;
    }
    let leaf = |tree: &mut Tree| {
        tree.nodes.push(TreeNode::Leaf {
            counts: [counts[0] as u32, counts[1] as u32],
        });
        (tree.nodes.len() - 1) as u32
    };

    let depth_capped = config.max_depth.is_some_and(|cap| depth >= cap);
    if counts[0] == 0 || counts[1] == 0 || rows.len() < config.min_samples_split || depth_capped {
        return leaf(tree);
    }

    let parent_impurity = gini(counts);
    let candidates = rand::seq::index::sample(rng, dataset.n_features, m);

    let mut best: Option<(f64, u32, f64)> = None; // (weighted impurity, feature, threshold)
    let mut scratch: Vec<(f64, bool)> = Vec::with_capacity(rows.len());
    for feature in candidates {
        let feature = feature as u32;
        scratch.clear();
        for &r in &rows {
            scratch.push((sparse_value(&dataset.rows[r], feature), dataset.labels[r]));
        }
        scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        if scratch[0].0 == scratch[scratch.len() - 1].0 {
            continue;
        }
        let total = [counts[0], counts[1]];
        let mut left = [0usize; 2];
        for i in 1..scratch.len() {
            left[scratch[i - 1].1 as usize] += 1;
            if scratch[i].0 == scratch[i - 1].0 {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let nl = (left[0] + left[1]) as f64;
            let nr = (right[0] + right[1]) as f64;
            let weighted = (nl * gini(left) + nr * gini(right)) / (nl + nr);
            if best.is_none_or(|(b, _, _)| weighted < b) {
                let threshold = 0.5 * (scratch[i - 1].0 + scratch[i].0);
                best = Some((weighted, feature, threshold));
            }
        }
    }

    let (feature, threshold) = match best {
        Some((weighted, feature, threshold)) if weighted < parent_impurity - 1e-12 => {
            (feature, threshold)
        }
        _ => return leaf(tree),
    };

    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
        .into_iter()
        .partition(|&r| sparse_value(&dataset.rows[r], feature) <= threshold);

    // Reserve this node's slot before growing children.
    tree.nodes.push(TreeNode::Leaf { counts: [0, 0] });
    let at = (tree.nodes.len() - 1) as u32;
    let left = grow(tree, dataset, rng, left_rows, depth + 1, m, config);
    let right = grow(tree, dataset, rng, right_rows, depth + 1, m, config);
    tree.nodes[at as usize] = TreeNode::Split {
        feature,
        threshold,
        left,
        right,
    };
    at
}

impl TrainedModel {
    /// Average of the per-tree leaf class frequencies; ties go negative.
    pub fn predict_row(&self, row: &[(u32, f64)]) -> bool {
        let total: f64 = self.trees.iter().map(|t| t.positive_share(row)).sum();
        total / self.trees.len() as f64 > 0.5
    }

    pub fn predict(&self, dataset: &LabeledDataset) -> Vec<bool> {
        dataset.rows.iter().map(|r| self.predict_row(r)).collect()
    }

    pub fn accuracy(&self, dataset: &LabeledDataset) -> f64 {
        let correct = dataset
            .rows
            .iter()
            .zip(&dataset.labels)
            .filter(|(row, &label)| self.predict_row(row) == label)
            .count();
        correct as f64 / dataset.rows.len() as f64
    }

    /// Serializes the model in the versioned flat text format:
    ///
    /// ```text
    /// EGFOREST 1
    /// n_features <N>
    /// name <index> <feature name>      (N lines)
    /// trees <T>
    /// tree <index> nodes <K>
    /// split <feature> <threshold> <left> <right>   |   leaf <c0> <c1>
    /// end
    /// ```
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "EGFOREST 1")?;
        writeln!(w, "n_features {}", self.n_features)?;
        for (i, name) in self.feature_names.iter().enumerate() {
            writeln!(w, "name {i} {name}")?;
        }
        writeln!(w, "trees {}", self.trees.len())?;
        for (ti, tree) in self.trees.iter().enumerate() {
            writeln!(w, "tree {ti} nodes {}", tree.nodes.len())?;
            for node in &tree.nodes {
                match node {
                    TreeNode::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => writeln!(w, "split {feature} {threshold} {left} {right}")?,
                    TreeNode::Leaf { counts } => writeln!(w, "leaf {} {}", counts[0], counts[1])?,
                }
            }
        }
        writeln!(w, "end")
    }

    pub fn read_text<R: Read>(r: R) -> Result<TrainedModel, PredictError> {
        let bad = |msg: &str| PredictError::InvalidModel(msg.to_owned());
        let mut lines = BufReader::new(r).lines();
        let mut next = || -> Result<String, PredictError> {
            lines
                .next()
                .ok_or_else(|| bad("unexpected end of model"))?
                .map_err(|e| PredictError::InvalidModel(e.to_string()))
        };

        if next()?.trim() != "EGFOREST 1" {
            return Err(bad("unknown model format or version"));
        }
        let n_features: usize = field(&next()?, "n_features")?;
        let mut feature_names = vec![String::new(); n_features];
        for _ in 0..n_features {
            let line = next()?;
            let rest = line
                .strip_prefix("name ")
                .ok_or_else(|| bad("expected name line"))?;
            let (idx, name) = rest
                .split_once(' ')
                .ok_or_else(|| bad("malformed name line"))?;
            let idx: usize = idx.parse().map_err(|_| bad("bad name index"))?;
            if idx >= n_features {
                return Err(bad("name index out of range"));
            }
            feature_names[idx] = name.to_owned();
        }
        let n_trees: usize = field(&next()?, "trees")?;
        let mut trees = Vec::with_capacity(n_trees);
        for ti in 0..n_trees {
            let header = next()?;
            let parts: Vec<&str> = header.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "tree" || parts[2] != "nodes" {
                return Err(bad("malformed tree header"));
            }
            if parts[1].parse::<usize>().map_err(|_| bad("bad tree index"))? != ti {
                return Err(bad("tree index out of order"));
            }
            let n_nodes: usize = parts[3].parse().map_err(|_| bad("bad node count"))?;
            let mut nodes = Vec::with_capacity(n_nodes);
            for _ in 0..n_nodes {
                let line = next()?;
                let parts: Vec<&str> = line.split_whitespace().collect();
                match parts.as_slice() {
                    ["split", f, t, l, r] => nodes.push(TreeNode::Split {
                        feature: f.parse().map_err(|_| bad("bad split feature"))?,
                        threshold: t.parse().map_err(|_| bad("bad split threshold"))?,
                        left: l.parse().map_err(|_| bad("bad split child"))?,
                        right: r.parse().map_err(|_| bad("bad split child"))?,
                    }),
                    ["leaf", c0, c1] => nodes.push(TreeNode::Leaf {
                        counts: [
                            c0.parse().map_err(|_| bad("bad leaf count"))?,
                            c1.parse().map_err(|_| bad("bad leaf count"))?,
                        ],
                    }),
                    _ => return Err(bad("malformed node line")),
                }
            }
            // Validate child and feature references.
            for node in &nodes {
                if let TreeNode::Split {
                    feature,
                    left,
                    right,
                    ..
                } = node
                {
                    if *feature as usize >= n_features
                        || *left as usize >= nodes.len()
                        || *right as usize >= nodes.len()
                    {
                        return Err(bad("split references out of range"));
                    }
                }
            }
            trees.push(Tree { nodes });
        }
        if next()?.trim() != "end" {
            return Err(bad("missing end marker"));
        }
        Ok(TrainedModel {
            feature_names,
            n_features,
            trees,
        })
    }
}

fn field<T: std::str::FromStr>(line: &str, key: &str) -> Result<T, PredictError> {
    let rest = line
        .strip_prefix(key)
        .ok_or_else(|| PredictError::InvalidModel(format!("expected {key} line")))?;
    rest.trim()
        .parse()
        .map_err(|_| PredictError::InvalidModel(format!("bad {key} value")))
}
