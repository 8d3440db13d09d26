//! Content polarity measures and user roles.
//!
//! Production polarity `p(u)` is the mean leaning of the news-linking
//! tweets a user posts; consumption polarity `c(u)` is the mean leaning of
//! the news-linking tweets posted by the users they follow (potential
//! exposure: every followee tweet with a resolvable link counts). Variances
//! are population variances over the same observation sets, so they lie in
//! [0, 0.25] for [0, 1]-valued leanings.
//!
//! For a threshold `delta` in (0, 0.5]:
//!
//! - partisan:   `min(p, 1 - p) <= delta`, on the side that is closer;
//! - consumer:   `min(c, 1 - c) <= delta`;
//! - gatekeeper: partisan but not consumer.
//!
//! A polarity is defined only when the user has at least
//! `min_observations` observations on that side; users with undefined
//! polarities carry no role and are excluded from group analyses rather
//! than imputed.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::graph::FollowGraph;
use crate::ingest::Corpus;
use crate::UserId;

#[derive(Debug, Error)]
pub enum PolarityError {
    #[error("delta must lie in (0, 0.5], got {0}")]
    InvalidDelta(f64),
    #[error("user {0} is not in the graph")]
    UnknownUser(UserId),
}

/// Per-user observation lists plus interaction counts.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct UserContentProfile {
    pub user_id: UserId,
    /// Leanings of the user's own link-bearing tweets.
    pub produced: Vec<f64>,
    /// Leanings of link-bearing tweets posted by the user's followees.
    pub consumed: Vec<f64>,
    pub total_tweets: usize,
    pub retweet_counts: Vec<u64>,
    pub favorite_counts: Vec<u64>,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn population_variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64
}

impl UserContentProfile {
    /// Mean produced leaning, defined from `min_observations` observations.
    pub fn production_polarity(&self, min_observations: usize) -> Option<f64> {
        defined(&self.produced, min_observations).map(mean)
    }

    /// Population variance of produced leanings.
    pub fn production_variance(&self, min_observations: usize) -> Option<f64> {
        defined(&self.produced, min_observations).map(population_variance)
    }

    pub fn consumption_polarity(&self, min_observations: usize) -> Option<f64> {
        defined(&self.consumed, min_observations).map(mean)
    }

    pub fn consumption_variance(&self, min_observations: usize) -> Option<f64> {
        defined(&self.consumed, min_observations).map(population_variance)
    }

    /// Retweet/favorite rates and median volumes; `None` for users without
    /// tweets.
    pub fn interaction_metrics(&self) -> Option<InteractionSummary> {
        if self.retweet_counts.is_empty() {
            return None;
        }
        Some(InteractionSummary {
            retweet_rate: rate(&self.retweet_counts),
            favorite_rate: rate(&self.favorite_counts),
            retweet_volume: median(&self.retweet_counts),
            favorite_volume: median(&self.favorite_counts),
        })
    }
}

fn defined(values: &[f64], min_observations: usize) -> Option<&[f64]> {
    // A polarity over zero observations is never defined, whatever the
    // configured minimum.
    if values.is_empty() || values.len() < min_observations {
        None
    } else {
        Some(values)
    }
}

fn rate(counts: &[u64]) -> f64 {
    counts.iter().filter(|&&c| c >= 1).count() as f64 / counts.len() as f64
}

fn median(counts: &[u64]) -> f64 {
    let mut sorted = counts.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] as f64 + sorted[n / 2] as f64) / 2.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InteractionSummary {
    pub retweet_rate: f64,
    pub favorite_rate: f64,
    pub retweet_volume: f64,
    pub favorite_volume: f64,
}

/// Pooled leanings of all link observations of all followees of `user`,
/// in followee index order. The user's own tweets never appear (the graph
/// has no self-loops).
pub fn consumption_observations(
    user: &UserId,
    graph: &FollowGraph,
    corpus: &Corpus,
) -> Result<Vec<f64>, PolarityError> {
    let node = graph
        .node_index(user)
        .ok_or_else(|| PolarityError::UnknownUser(user.clone()))?;
    let mut pooled = Vec::new();
    for &v in graph.followees(node) {
        for obs in corpus.observations_of(graph.user_id(v)) {
            pooled.push(obs.leaning);
        }
    }
    Ok(pooled)
}

/// Builds the content profile of one user from the graph and corpus.
pub fn content_profile(
    user: &UserId,
    graph: &FollowGraph,
    corpus: &Corpus,
) -> Result<UserContentProfile, PolarityError> {
    let consumed = consumption_observations(user, graph, corpus)?;
    Ok(assemble_profile(user, corpus, consumed))
}

fn assemble_profile(user: &UserId, corpus: &Corpus, consumed: Vec<f64>) -> UserContentProfile {
    let tweets = corpus.tweets_of(user);
    UserContentProfile {
        user_id: user.clone(),
        produced: corpus
            .observations_of(user)
            .iter()
            .map(|o| o.leaning)
            .collect(),
        consumed,
        total_tweets: tweets.len(),
        retweet_counts: tweets.iter().map(|t| t.retweet_count).collect(),
        favorite_counts: tweets.iter().map(|t| t.favorite_count).collect(),
    }
}

/// Per-user polarity summary.
#[derive(Clone, Debug, PartialEq)]
pub struct PolaritySummary {
    pub user_id: UserId,
    pub p: Option<f64>,
    pub c: Option<f64>,
    pub var_p: Option<f64>,
    pub var_c: Option<f64>,
    pub n_produced: usize,
    pub n_consumed: usize,
    /// Externally supplied signed user polarity, when available.
    pub user_polarity: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct PolarityConfig {
    /// Minimum observations for a polarity to be defined.
    pub min_observations: usize,
}

impl Default for PolarityConfig {
    fn default() -> Self {
        PolarityConfig { min_observations: 1 }
    }
}

/// Summarizes every user that appears in the graph or the corpus.
///
/// Users absent from the graph have no followees, hence no consumption
/// observations.
pub fn summarize_all(
    graph: &FollowGraph,
    corpus: &Corpus,
    user_polarity: &BTreeMap<UserId, f64>,
    config: &PolarityConfig,
) -> BTreeMap<UserId, PolaritySummary> {
    let mut users: Vec<UserId> = graph.ids().to_vec();
    users.extend(corpus.users().cloned());
    users.sort_unstable();
    users.dedup();

    users
        .into_iter()
        .map(|user| {
            let consumed =
                consumption_observations(&user, graph, corpus).unwrap_or_default();
            let profile = assemble_profile(&user, corpus, consumed);
            let summary = PolaritySummary {
                p: profile.production_polarity(config.min_observations),
                c: profile.consumption_polarity(config.min_observations),
                var_p: profile.production_variance(config.min_observations),
                var_c: profile.consumption_variance(config.min_observations),
                n_produced: profile.produced.len(),
                n_consumed: profile.consumed.len(),
                user_polarity: user_polarity.get(&user).copied(),
                user_id: user.clone(),
            };
            (user, summary)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartisanLabel {
    LeftPartisan,
    RightPartisan,
    Bipartisan,
}

impl PartisanLabel {
    pub fn is_partisan(self) -> bool {
        self != PartisanLabel::Bipartisan
    }
}

impl std::fmt::Display for PartisanLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PartisanLabel::LeftPartisan => "left-partisan",
            PartisanLabel::RightPartisan => "right-partisan",
            PartisanLabel::Bipartisan => "bipartisan",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConsumerLabel {
    LeftConsumer,
    RightConsumer,
    NonConsumer,
}

impl ConsumerLabel {
    pub fn is_consumer(self) -> bool {
        self != ConsumerLabel::NonConsumer
    }
}

impl std::fmt::Display for ConsumerLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ConsumerLabel::LeftConsumer => "left-consumer",
            ConsumerLabel::RightConsumer => "right-consumer",
            ConsumerLabel::NonConsumer => "non-consumer",
        })
    }
}

fn check_delta(delta: f64) -> Result<(), PolarityError> {
    if delta > 0.0 && delta <= 0.5 {
        Ok(())
    } else {
        Err(PolarityError::InvalidDelta(delta))
    }
}

/// Partisan iff `min(p, 1 - p) <= delta` (boundary inclusive); the side is
/// the closer extreme, resolving the exact center to the left. That tie is
/// only reachable at `delta = 0.5`.
pub fn classify_partisan(p: f64, delta: f64) -> Result<PartisanLabel, PolarityError> {
    check_delta(delta)?;
    let label = if p.min(1.0 - p) <= delta {
        if p <= 0.5 {
            PartisanLabel::LeftPartisan
        } else {
            PartisanLabel::RightPartisan
        }
    } else {
        PartisanLabel::Bipartisan
    };
    Ok(label)
}

/// Consumer iff `min(c, 1 - c) <= delta`; the strict complement is
/// non-consumer.
pub fn classify_consumer(c: f64, delta: f64) -> Result<ConsumerLabel, PolarityError> {
    check_delta(delta)?;
    let label = if c.min(1.0 - c) <= delta {
        if c <= 0.5 {
            ConsumerLabel::LeftConsumer
        } else {
            ConsumerLabel::RightConsumer
        }
    } else {
        ConsumerLabel::NonConsumer
    };
    Ok(label)
}

/// Gatekeeper iff partisan but not consumer:
/// `min(p, 1 - p) <= delta` and `min(c, 1 - c) > delta`.
pub fn classify_gatekeeper(p: f64, c: f64, delta: f64) -> Result<bool, PolarityError> {
    check_delta(delta)?;
    Ok(p.min(1.0 - p) <= delta && c.min(1.0 - c) > delta)
}

/// Role of one user at one threshold. Fields are `None` when the
/// corresponding polarity is undefined; the gatekeeper flag needs both.
#[derive(Clone, Debug, PartialEq)]
pub struct RoleLabel {
    pub delta: f64,
    pub partisan: Option<PartisanLabel>,
    pub consumer: Option<ConsumerLabel>,
    pub gatekeeper: Option<bool>,
}

pub fn assign_role(summary: &PolaritySummary, delta: f64) -> Result<RoleLabel, PolarityError> {
    check_delta(delta)?;
    let partisan = summary
        .p
        .map(|p| classify_partisan(p, delta))
        .transpose()?;
    let consumer = summary
        .c
        .map(|c| classify_consumer(c, delta))
        .transpose()?;
    let gatekeeper = match (summary.p, summary.c) {
        (Some(p), Some(c)) => Some(classify_gatekeeper(p, c, delta)?),
        _ => None,
    };
    Ok(RoleLabel {
        delta,
        partisan,
        consumer,
        gatekeeper,
    })
}

/// Roles for every summarized user at one threshold.
pub fn assign_roles(
    summaries: &BTreeMap<UserId, PolaritySummary>,
    delta: f64,
) -> Result<BTreeMap<UserId, RoleLabel>, PolarityError> {
    check_delta(delta)?;
    summaries
        .iter()
        .map(|(user, summary)| Ok((user.clone(), assign_role(summary, delta)?)))
        .collect()
}

/// Writes `user_id,p,c,var_p,var_c,n_produced,n_consumed,partisan,consumer,gatekeeper`
/// rows for one threshold; undefined fields are left empty.
pub fn write_summary_csv<W: std::io::Write>(
    summaries: &BTreeMap<UserId, PolaritySummary>,
    roles: &BTreeMap<UserId, RoleLabel>,
    mut w: W,
) -> std::io::Result<()> {
    writeln!(
        w,
        "user_id,p,c,var_p,var_c,n_produced,n_consumed,partisan,consumer,gatekeeper"
    )?;
    for (user, s) in summaries {
        let role = roles.get(user);
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            user,
            opt(s.p),
            opt(s.c),
            opt(s.var_p),
            opt(s.var_c),
            s.n_produced,
            s.n_consumed,
            role.and_then(|r| r.partisan.map(|l| l.to_string()))
                .unwrap_or_default(),
            role.and_then(|r| r.consumer.map(|l| l.to_string()))
                .unwrap_or_default(),
            role.and_then(|r| r.gatekeeper.map(|g| g.to_string()))
                .unwrap_or_default(),
        )?;
    }
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{SourceLeaningTable, TweetRecord};

    fn profile_with(produced: &[f64]) -> UserContentProfile {
        UserContentProfile {
            user_id: UserId::from("u"),
            produced: produced.to_vec(),
            ..Default::default()
        }
    }

    #[test]
    fn production_polarity_examples() {
        assert_eq!(
            profile_with(&[0.9, 0.9, 0.9]).production_polarity(1),
            Some(0.9)
        );
        assert_eq!(profile_with(&[]).production_polarity(1), None);
        assert_eq!(
            profile_with(&[0.2, 0.4, 0.9]).production_polarity(1),
            Some(0.5)
        );
        // Below the configured minimum.
        assert_eq!(profile_with(&[0.5]).production_polarity(2), None);
    }

    #[test]
    fn production_variance_examples() {
        assert_eq!(profile_with(&[0.5, 0.5]).production_variance(1), Some(0.0));
        assert_eq!(profile_with(&[0.0, 1.0]).production_variance(1), Some(0.25));
        let v = profile_with(&[0.2, 0.4, 0.9]).production_variance(1).unwrap();
        assert!((v - 0.08666666666666667).abs() < 1e-15);
    }

    #[test]
    fn consumption_examples() {
        let mut p = profile_with(&[]);
        p.consumed = vec![0.2, 0.4, 0.6];
        assert!((p.consumption_polarity(1).unwrap() - 0.4).abs() < 1e-15);

        p.consumed = vec![];
        assert_eq!(p.consumption_polarity(1), None);

        p.consumed = vec![0.1, 0.9];
        assert!((p.consumption_polarity(1).unwrap() - 0.5).abs() < 1e-15);
        assert!((p.consumption_variance(1).unwrap() - 0.16).abs() < 1e-15);
    }

    fn corpus_of(tweets: Vec<(&str, &str, Option<f64>)>) -> (Corpus, SourceLeaningTable) {
        // Encode a desired leaning as a synthetic domain per distinct value.
        let mut table = SourceLeaningTable::default();
        let mut records = Vec::new();
        for (i, (user, id, leaning)) in tweets.into_iter().enumerate() {
            let urls = match leaning {
                Some(l) => {
                    let domain = format!("d{}.example", (l * 1000.0) as u64);
                    table.insert(&domain, l);
                    vec![format!("https://{domain}/x")]
                }
                None => vec![],
            };
            records.push(TweetRecord {
                tweet_id: id.to_string(),
                user_id: UserId::from(user),
                timestamp: i as i64,
                urls,
                text: String::new(),
                retweet_count: 0,
                favorite_count: 0,
            });
        }
        (Corpus::build(records, &table), table)
    }

    #[test]
    fn consumption_pools_followee_observations() {
        let g = FollowGraph::from_edges(vec![
            (UserId::from("u"), UserId::from("v")),
            (UserId::from("u"), UserId::from("w")),
        ])
        .graph;
        let (corpus, _) = corpus_of(vec![
            ("v", "t1", Some(0.2)),
            ("w", "t2", Some(0.4)),
            ("w", "t3", Some(0.6)),
            ("u", "t4", Some(0.99)), // own tweet, must not be consumed
        ]);
        let mut obs = consumption_observations(&UserId::from("u"), &g, &corpus).unwrap();
        obs.sort_by(f64::total_cmp);
        assert_eq!(obs, vec![0.2, 0.4, 0.6]);

        // v follows nobody.
        let obs = consumption_observations(&UserId::from("v"), &g, &corpus).unwrap();
        assert!(obs.is_empty());

        assert!(consumption_observations(&UserId::from("zz"), &g, &corpus).is_err());
    }

    #[test]
    fn consumption_empty_when_followees_have_no_links() {
        let g = FollowGraph::from_edges(vec![(UserId::from("u"), UserId::from("v"))]).graph;
        let (corpus, _) = corpus_of(vec![("v", "t1", None)]);
        let obs = consumption_observations(&UserId::from("u"), &g, &corpus).unwrap();
        assert!(obs.is_empty());
    }

    #[test]
    fn classify_partisan_examples() {
        assert_eq!(
            classify_partisan(0.1, 0.2).unwrap(),
            PartisanLabel::LeftPartisan
        );
        // Boundary inclusive: 1 - 0.8 = 0.2.
        assert_eq!(
            classify_partisan(0.8, 0.2).unwrap(),
            PartisanLabel::RightPartisan
        );
        assert_eq!(
            classify_partisan(0.5, 0.45).unwrap(),
            PartisanLabel::Bipartisan
        );
        assert!(classify_partisan(0.5, 0.0).is_err());
        assert!(classify_partisan(0.5, 0.6).is_err());
    }

    #[test]
    fn classify_consumer_examples() {
        assert_eq!(
            classify_consumer(0.15, 0.2).unwrap(),
            ConsumerLabel::LeftConsumer
        );
        assert_eq!(
            classify_consumer(0.3, 0.2).unwrap(),
            ConsumerLabel::NonConsumer
        );
        // Degenerate bound: 0.5 <= 0.5.
        assert!(classify_consumer(0.5, 0.5).unwrap().is_consumer());
    }

    #[test]
    fn classify_gatekeeper_examples() {
        assert!(classify_gatekeeper(0.1, 0.3, 0.1).unwrap());
        assert!(!classify_gatekeeper(0.1, 0.15, 0.2).unwrap()); // also a consumer
        assert!(!classify_gatekeeper(0.5, 0.5, 0.2).unwrap()); // not partisan
    }

    #[test]
    fn interaction_metric_examples() {
        let mut p = profile_with(&[]);
        p.retweet_counts = vec![0, 0, 3, 5];
        p.favorite_counts = vec![0, 0, 3, 5];
        let m = p.interaction_metrics().unwrap();
        assert_eq!(m.retweet_rate, 0.5);
        assert_eq!(m.retweet_volume, 1.5);

        p.retweet_counts = vec![1, 1, 1];
        p.favorite_counts = vec![1, 1, 1];
        let m = p.interaction_metrics().unwrap();
        assert_eq!(m.retweet_rate, 1.0);
        assert_eq!(m.retweet_volume, 1.0);

        p.retweet_counts = vec![0];
        p.favorite_counts = vec![0];
        let m = p.interaction_metrics().unwrap();
        assert_eq!(m.retweet_rate, 0.0);
        assert_eq!(m.retweet_volume, 0.0);

        p.retweet_counts = vec![];
        p.favorite_counts = vec![];
        assert!(p.interaction_metrics().is_none());
    }

    #[test]
    fn polarity_is_permutation_invariant() {
        let values = vec![0.13, 0.82, 0.4, 0.95, 0.02, 0.66];
        let mut reversed = values.clone();
        reversed.reverse();
        let a = profile_with(&values).production_polarity(1).unwrap();
        let b = profile_with(&reversed).production_polarity(1).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn summary_csv_leaves_undefined_fields_empty() {
        let mut summaries = BTreeMap::new();
        let user = UserId::from("u");
        summaries.insert(
            user.clone(),
            PolaritySummary {
                user_id: user.clone(),
                p: Some(0.25),
                c: None,
                var_p: Some(0.0),
                var_c: None,
                n_produced: 2,
                n_consumed: 0,
                user_polarity: None,
            },
        );
        let roles = assign_roles(&summaries, 0.3).unwrap();
        let mut out = Vec::new();
        write_summary_csv(&summaries, &roles, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text,
            "user_id,p,c,var_p,var_c,n_produced,n_consumed,partisan,consumer,gatekeeper\n\
             u,0.25,,0,,2,0,left-partisan,,\n"
        );
    }

    #[test]
    fn roles_respect_undefined_polarities() {
        let summary = PolaritySummary {
            user_id: UserId::from("u"),
            p: Some(0.1),
            c: None,
            var_p: Some(0.0),
            var_c: None,
            n_produced: 3,
            n_consumed: 0,
            user_polarity: None,
        };
        let role = assign_role(&summary, 0.3).unwrap();
        assert_eq!(role.partisan, Some(PartisanLabel::LeftPartisan));
        assert_eq!(role.consumer, None);
        assert_eq!(role.gatekeeper, None);
    }
}
