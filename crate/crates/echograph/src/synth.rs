//! Seeded generator of polarized follow graphs with content.
//!
//! Users are split into a left and a right community. Each user draws a
//! latent leaning `lambda` from Beta(2, 8) (left) or Beta(8, 2) (right),
//! giving the bimodal, non-extreme shape of real polarized populations.
//! Directed follows appear with probability `p_in` inside a community and
//! `p_out` across, except for planted gatekeepers, who follow both sides
//! with `p_in` while producing side-pure content (their `lambda` is drawn
//! from the extreme quarter of their side's distribution).
//!
//! Each tweet carries, with probability `link_fraction`, a link to the
//! synthetic news domain whose leaning is nearest to
//! `clip(lambda + Normal(0, sigma))`. Tweet text draws `tokens_per_tweet`
//! tokens: a shared token with probability `token_overlap`, otherwise a
//! token from the right pool with probability `lambda` and from the left
//! pool with probability `1 - lambda`, so token usage genuinely encodes
//! the latent leaning.
//!
//! Randomness is ChaCha8 keyed by the config seed with fixed stream splits
//! (stream 1 latents, 2 planted flags, 3 edges, per-user tweet streams at
//! `2^32 + user index`), so output is identical across platforms and runs.
//! Generation is single-threaded; run several seeds in parallel instead.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal, Poisson};
use thiserror::Error;

use crate::graph::FollowGraph;
use crate::ingest::{Corpus, SourceLeaningTable, TweetRecord, UserProfileRecord};
use crate::polarity::RoleLabel;
use crate::UserId;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("{0} must lie in [0, 1], got {1}")]
    InvalidProbability(&'static str, f64),
    #[error("leaning noise must be non-negative, got {0}")]
    InvalidNoise(f64),
    #[error("need at least one domain per side")]
    NoDomains,
    #[error("role labels were computed at delta {labels}, expected {expected}")]
    DeltaMismatch { labels: f64, expected: f64 },
}

#[derive(Clone, Debug)]
pub struct SynthConfig {
    pub n_left: usize,
    pub n_right: usize,
    /// Follow probability inside a community.
    pub p_in: f64,
    /// Follow probability across communities.
    pub p_out: f64,
    /// Mean tweets per user (Poisson).
    pub tweets_per_user: f64,
    /// Probability that a tweet links a news domain.
    pub link_fraction: f64,
    /// Standard deviation of the leaning noise around `lambda`.
    pub leaning_noise: f64,
    /// Fraction of users planted as gatekeepers.
    pub gatekeeper_fraction: f64,
    /// News domains per side; leanings are evenly spaced over [0, 1].
    pub n_domains_per_side: usize,
    /// Tokens drawn per tweet.
    pub tokens_per_tweet: usize,
    /// Distinct tokens per side pool (and in the shared pool).
    pub token_pool_size: usize,
    /// Probability that a token comes from the shared pool.
    pub token_overlap: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_left: 200,
            n_right: 200,
            p_in: 0.05,
            p_out: 0.005,
            tweets_per_user: 10.0,
            link_fraction: 0.5,
            leaning_noise: 0.1,
            gatekeeper_fraction: 0.05,
            n_domains_per_side: 25,
            tokens_per_tweet: 8,
            token_pool_size: 300,
            token_overlap: 0.2,
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<(), SynthError> {
        for (name, value) in [
            ("p_in", self.p_in),
            ("p_out", self.p_out),
            ("link_fraction", self.link_fraction),
            ("gatekeeper_fraction", self.gatekeeper_fraction),
            ("token_overlap", self.token_overlap),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(SynthError::InvalidProbability(name, value));
            }
        }
        if self.leaning_noise.is_nan() || self.leaning_noise < 0.0 {
            return Err(SynthError::InvalidNoise(self.leaning_noise));
        }
        if self.n_domains_per_side == 0 {
            return Err(SynthError::NoDomains);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

#[derive(Clone, Debug)]
pub struct TruthRecord {
    pub user_id: UserId,
    pub lambda: f64,
    pub side: Side,
    pub planted_gatekeeper: bool,
}

#[derive(Clone, Debug, Default)]
pub struct GroundTruth {
    records: BTreeMap<UserId, TruthRecord>,
}

impl GroundTruth {
    pub fn record(&self, user: &UserId) -> Option<&TruthRecord> {
        self.records.get(user)
    }

    pub fn records(&self) -> impl Iterator<Item = &TruthRecord> {
        self.records.values()
    }

    pub fn planted_count(&self) -> usize {
        self.records.values().filter(|r| r.planted_gatekeeper).count()
    }
}

/// A generated dataset plus its ground truth.
#[derive(Clone, Debug)]
pub struct SynthData {
    pub graph: FollowGraph,
    pub corpus: Corpus,
    pub profiles: BTreeMap<UserId, UserProfileRecord>,
    pub table: SourceLeaningTable,
    pub truth: GroundTruth,
}

const STREAM_LATENT: u64 = 1;
const STREAM_PLANT: u64 = 2;
const STREAM_EDGES: u64 = 3;
const STREAM_PROFILES: u64 = 4;
const STREAM_TWEETS_BASE: u64 = 1 << 32;

/// Mean follower/friend count a user has outside the topical graph;
/// profile counts are the in/out degree plus this Poisson background, so
/// sensible bot thresholds keep synthetic accounts.
const BACKGROUND_CONTACTS: f64 = 200.0;

/// Reference epoch for synthetic timestamps; accounts are created two
/// years earlier so default bot thresholds keep them.
const BASE_TIME: i64 = 1_480_000_000;
const ACCOUNT_AGE_SECONDS: i64 = 2 * 365 * 86_400;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn user_id(index: usize) -> UserId {
    UserId::from(format!("u{index:06}"))
}

pub fn generate(config: &SynthConfig) -> Result<SynthData, SynthError> {
    config.validate()?;
    let n = config.n_left + config.n_right;
    let side_of = |i: usize| {
        if i < config.n_left {
            Side::Left
        } else {
            Side::Right
        }
    };

    // Planted flags first: the latent draw depends on them.
    let mut plant_rng = stream_rng(config.seed, STREAM_PLANT);
    let planted: Vec<bool> = (0..n)
        .map(|_| plant_rng.random::<f64>() < config.gatekeeper_fraction)
        .collect();

    let beta_left = Beta::new(2.0, 8.0).expect("valid beta");
    let beta_right = Beta::new(8.0, 2.0).expect("valid beta");
    let mut latent_rng = stream_rng(config.seed, STREAM_LATENT);
    let lambdas: Vec<f64> = (0..n)
        .map(|i| {
            let (dist, pure) = match side_of(i) {
                Side::Left => (&beta_left, 0.25),
                Side::Right => (&beta_right, 0.75),
            };
            let mut draw = dist.sample(&mut latent_rng);
            if planted[i] {
                // Side-pure production: resample into the extreme quarter.
                while !(match side_of(i) {
                    Side::Left => draw <= pure,
                    Side::Right => draw >= pure,
                }) {
                    draw = dist.sample(&mut latent_rng);
                }
            }
            draw
        })
        .collect();

    let mut edge_rng = stream_rng(config.seed, STREAM_EDGES);
    let mut edges: Vec<(UserId, UserId)> = Vec::new();
    for (u, &u_planted) in planted.iter().enumerate() {
        for v in 0..n {
            if u == v {
                continue;
            }
            let p = if side_of(u) == side_of(v) || u_planted {
                config.p_in
            } else {
                config.p_out
            };
            if edge_rng.random::<f64>() < p {
                edges.push((user_id(u), user_id(v)));
            }
        }
    }

    let table = domain_table(config.n_domains_per_side);
    let domains: Vec<(String, f64)> = table
        .domains()
        .map(|(d, l)| (d.to_owned(), l))
        .collect();
    let domain_count = domains.len();
    // Domains are evenly spaced, so the nearest one is a rounding.
    let nearest_domain = |target: f64| -> &(String, f64) {
        let idx = (target.clamp(0.0, 1.0) * (domain_count - 1) as f64).round() as usize;
        &domains[idx]
    };

    let noise = if config.leaning_noise > 0.0 {
        Some(Normal::new(0.0, config.leaning_noise).expect("valid normal"))
    } else {
        None
    };
    let poisson = if config.tweets_per_user > 0.0 {
        Some(Poisson::new(config.tweets_per_user).expect("valid poisson"))
    } else {
        None
    };
    let interactions = Poisson::new(1.0).expect("valid poisson");

    let mut tweets: Vec<TweetRecord> = Vec::new();
    for (u, &lambda) in lambdas.iter().enumerate() {
        let mut rng = stream_rng(config.seed, STREAM_TWEETS_BASE + u as u64);
        let count = match &poisson {
            Some(dist) => dist.sample(&mut rng) as usize,
            None => 0,
        };
        for i in 0..count {
            let text = tweet_text(&mut rng, lambda, config);
            let urls = if rng.random::<f64>() < config.link_fraction {
                let shift = noise.as_ref().map(|d| d.sample(&mut rng)).unwrap_or(0.0);
                let (domain, _) = nearest_domain(lambda + shift);
                vec![format!("https://{domain}/{u}-{i}")]
            } else {
                Vec::new()
            };
            tweets.push(TweetRecord {
                tweet_id: format!("t{u:06}-{i:04}"),
                user_id: user_id(u),
                timestamp: BASE_TIME + (u as i64) * 977 + i as i64,
                urls,
                text,
                retweet_count: interactions.sample(&mut rng) as u64,
                favorite_count: interactions.sample(&mut rng) as u64,
            });
        }
    }

    let graph = FollowGraph::from_edges(edges).graph;
    let corpus = Corpus::build(tweets, &table);

    let background = Poisson::new(BACKGROUND_CONTACTS).expect("valid poisson");
    let mut profile_rng = stream_rng(config.seed, STREAM_PROFILES);
    let mut profiles = BTreeMap::new();
    let mut truth = GroundTruth::default();
    for u in 0..n {
        let id = user_id(u);
        let node = graph.node_index(&id);
        profiles.insert(
            id.clone(),
            UserProfileRecord {
                user_id: id.clone(),
                followers_count: node.map(|x| graph.in_degree(x)).unwrap_or(0) as u64
                    + background.sample(&mut profile_rng) as u64,
                friends_count: node.map(|x| graph.out_degree(x)).unwrap_or(0) as u64
                    + background.sample(&mut profile_rng) as u64,
                statuses_count: corpus.tweets_of(&id).len() as u64,
                account_created: BASE_TIME - ACCOUNT_AGE_SECONDS,
            },
        );
        truth.records.insert(
            id.clone(),
            TruthRecord {
                user_id: id,
                lambda: lambdas[u],
                side: side_of(u),
                planted_gatekeeper: planted[u],
            },
        );
    }

    Ok(SynthData {
        graph,
        corpus,
        profiles,
        table,
        truth,
    })
}

fn tweet_text(rng: &mut ChaCha8Rng, lambda: f64, config: &SynthConfig) -> String {
    let mut words = Vec::with_capacity(config.tokens_per_tweet);
    for _ in 0..config.tokens_per_tweet {
        let token = if rng.random::<f64>() < config.token_overlap {
            format!("common{:04}", rng.random_range(0..config.token_pool_size))
        } else if rng.random::<f64>() < lambda {
            format!("crimson{:04}", rng.random_range(0..config.token_pool_size))
        } else {
            format!("azure{:04}", rng.random_range(0..config.token_pool_size))
        };
        words.push(token);
    }
    words.join(" ")
}

/// Evenly spaced synthetic domains: `2 * per_side` leanings covering
/// [0, 1], the lower half counting as the left side's outlets.
fn domain_table(per_side: usize) -> SourceLeaningTable {
    let total = 2 * per_side;
    let mut table = SourceLeaningTable::default();
    for i in 0..total {
        let leaning = if total == 1 {
            0.5
        } else {
            i as f64 / (total - 1) as f64
        };
        table.insert(&format!("outlet{i:03}.example"), leaning);
    }
    table
}

/// Precision and recall of detected gatekeepers against the planted flags.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlantReport {
    pub precision: f64,
    pub recall: f64,
    pub planted: usize,
    pub detected: usize,
    pub true_positives: usize,
    /// Set when a side of the ratio was empty and the 1.0 convention
    /// applied.
    pub degenerate: bool,
}

/// Scores gatekeeper recovery at one threshold. Users whose role is
/// undefined count as not detected. Empty denominators score 1.0 by
/// convention, flagged as degenerate.
pub fn plant_report(
    truth: &GroundTruth,
    labels: &BTreeMap<UserId, RoleLabel>,
    delta: f64,
) -> Result<PlantReport, SynthError> {
    for role in labels.values() {
        if role.delta != delta {
            return Err(SynthError::DeltaMismatch {
                labels: role.delta,
                expected: delta,
            });
        }
    }
    let mut planted = 0usize;
    let mut detected = 0usize;
    let mut true_positives = 0usize;
    for record in truth.records() {
        let is_detected = labels
            .get(&record.user_id)
            .and_then(|r| r.gatekeeper)
            .unwrap_or(false);
        if record.planted_gatekeeper {
            planted += 1;
        }
        if is_detected {
            detected += 1;
        }
        if record.planted_gatekeeper && is_detected {
            true_positives += 1;
        }
    }
    let degenerate = planted == 0 || detected == 0;
    let precision = if detected == 0 {
        1.0
    } else {
        true_positives as f64 / detected as f64
    };
    let recall = if planted == 0 {
        1.0
    } else {
        true_positives as f64 / planted as f64
    };
    Ok(PlantReport {
        precision,
        recall,
        planted,
        detected,
        true_positives,
        degenerate,
    })
}

impl SynthData {
    /// Writes the dataset in the formats `ingest` reads: `edges.tsv`,
    /// `tweets.jsonl`, `profiles.jsonl`, `leaning.csv`, and a
    /// `truth.csv` with `user_id,lambda,side,planted_gatekeeper` rows.
    /// `header` is prepended to each file as a `#` comment line.
    pub fn write_dataset(&self, dir: &Path, header: Option<&str>) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let open = |name: &str| -> std::io::Result<std::io::BufWriter<std::fs::File>> {
            let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join(name))?);
            if let Some(h) = header {
                writeln!(w, "# {h}")?;
            }
            Ok(w)
        };

        let mut edges = open("edges.tsv")?;
        self.graph.write_edge_list(&mut edges)?;

        let mut tweets = open("tweets.jsonl")?;
        for user in self.corpus.users() {
            for tweet in self.corpus.tweets_of(user) {
                writeln!(
                    tweets,
                    "{}",
                    serde_json::to_string(tweet).expect("tweet serializes")
                )?;
            }
        }

        let mut profiles = open("profiles.jsonl")?;
        for profile in self.profiles.values() {
            writeln!(
                profiles,
                "{}",
                serde_json::to_string(profile).expect("profile serializes")
            )?;
        }

        let mut leaning = open("leaning.csv")?;
        for (domain, score) in self.table.domains() {
            writeln!(leaning, "{domain},{score}")?;
        }
        for (alias, canonical) in self.table.aliases() {
            writeln!(leaning, "{alias},=,{canonical}")?;
        }

        let mut truth = open("truth.csv")?;
        writeln!(truth, "user_id,lambda,side,planted_gatekeeper")?;
        for record in self.truth.records() {
            writeln!(
                truth,
                "{},{},{},{}",
                record.user_id, record.lambda, record.side, record.planted_gatekeeper
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polarity::{assign_roles, summarize_all, PolarityConfig};

    fn small_config(seed: u64) -> SynthConfig {
        SynthConfig {
            n_left: 40,
            n_right: 40,
            p_in: 0.1,
            p_out: 0.01,
            tweets_per_user: 6.0,
            link_fraction: 0.8,
            leaning_noise: 0.05,
            gatekeeper_fraction: 0.1,
            n_domains_per_side: 10,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&small_config(7)).unwrap();
        let b = generate(&small_config(7)).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.corpus, b.corpus);
        assert_eq!(a.profiles, b.profiles);
        let la: Vec<f64> = a.truth.records().map(|r| r.lambda).collect();
        let lb: Vec<f64> = b.truth.records().map(|r| r.lambda).collect();
        assert_eq!(la, lb);

        let c = generate(&small_config(8)).unwrap();
        assert_ne!(a.graph, c.graph);
    }

    #[test]
    fn isolated_communities_consume_own_side_only() {
        let config = SynthConfig {
            p_out: 0.0,
            gatekeeper_fraction: 0.0,
            leaning_noise: 0.05,
            ..small_config(3)
        };
        let data = generate(&config).unwrap();
        let summaries = summarize_all(
            &data.graph,
            &data.corpus,
            &BTreeMap::new(),
            &PolarityConfig::default(),
        );
        for record in data.truth.records() {
            let summary = &summaries[&record.user_id];
            if let Some(c) = summary.c {
                match record.side {
                    Side::Left => assert!(c < 0.5, "left consumer at {c}"),
                    Side::Right => assert!(c > 0.5, "right consumer at {c}"),
                }
            }
        }
    }

    #[test]
    fn edge_counts_near_expectation() {
        // Directed pairs within each side and across; compare against the
        // binomial mean within three standard deviations.
        let config = SynthConfig {
            n_left: 150,
            n_right: 150,
            p_in: 0.05,
            p_out: 0.01,
            gatekeeper_fraction: 0.0,
            tweets_per_user: 0.0,
            ..small_config(11)
        };
        let data = generate(&config).unwrap();
        let trials_in = 2.0 * (150.0 * 149.0);
        let trials_out = 2.0 * (150.0 * 150.0);
        let expect = trials_in * config.p_in + trials_out * config.p_out;
        let sd = (trials_in * config.p_in * (1.0 - config.p_in)
            + trials_out * config.p_out * (1.0 - config.p_out))
            .sqrt();
        let got = data.graph.edge_count() as f64;
        assert!(
            (got - expect).abs() < 3.0 * sd,
            "edges {got} vs {expect} +- {sd}"
        );
    }

    #[test]
    fn noiseless_isolated_consumption_matches_closed_form() {
        // With p_out = 0 and sigma = 0, every observation is the domain
        // nearest to the producer's lambda, so c(u) is exactly the
        // tweet-weighted mean of snapped followee lambdas.
        let config = SynthConfig {
            p_out: 0.0,
            leaning_noise: 0.0,
            gatekeeper_fraction: 0.0,
            ..small_config(5)
        };
        let data = generate(&config).unwrap();
        let summaries = summarize_all(
            &data.graph,
            &data.corpus,
            &BTreeMap::new(),
            &PolarityConfig::default(),
        );
        let total = 2 * config.n_domains_per_side;
        let snap = |lambda: f64| {
            ((lambda * (total - 1) as f64).round()) / (total - 1) as f64
        };
        for (user, summary) in &summaries {
            let node = match data.graph.node_index(user) {
                Some(n) => n,
                None => continue,
            };
            let mut sum = 0.0;
            let mut count = 0usize;
            for &v in data.graph.followees(node) {
                let vid = data.graph.user_id(v);
                let lambda = data.truth.record(vid).unwrap().lambda;
                let n_obs = data.corpus.observations_of(vid).len();
                sum += snap(lambda) * n_obs as f64;
                count += n_obs;
            }
            match summary.c {
                Some(c) => {
                    assert!(count > 0);
                    assert!((c - sum / count as f64).abs() < 1e-12);
                }
                None => assert_eq!(count, 0),
            }
        }
    }

    #[test]
    fn plant_report_conventions() {
        let config = SynthConfig {
            gatekeeper_fraction: 0.0,
            ..small_config(2)
        };
        let data = generate(&config).unwrap();
        let summaries = summarize_all(
            &data.graph,
            &data.corpus,
            &BTreeMap::new(),
            &PolarityConfig::default(),
        );
        let roles = assign_roles(&summaries, 0.3).unwrap();
        let report = plant_report(&data.truth, &roles, 0.3).unwrap();
        assert_eq!(report.planted, 0);
        assert_eq!(report.recall, 1.0);
        assert!(report.degenerate);

        // Mismatched delta is an error.
        assert!(plant_report(&data.truth, &roles, 0.2).is_err());
    }

    #[test]
    fn all_planted_recall_equals_detected_fraction() {
        let config = SynthConfig {
            gatekeeper_fraction: 1.0,
            ..small_config(4)
        };
        let data = generate(&config).unwrap();
        let summaries = summarize_all(
            &data.graph,
            &data.corpus,
            &BTreeMap::new(),
            &PolarityConfig::default(),
        );
        let roles = assign_roles(&summaries, 0.3).unwrap();
        let report = plant_report(&data.truth, &roles, 0.3).unwrap();
        assert_eq!(report.planted, config.n_left + config.n_right);
        assert_eq!(
            report.recall,
            report.detected as f64 / report.planted as f64
        );
        assert_eq!(report.true_positives, report.detected);
    }

    #[test]
    fn dataset_roundtrips_through_ingest() {
        let dir = tempfile::tempdir().unwrap();
        let data = generate(&small_config(9)).unwrap();
        data.write_dataset(dir.path(), Some("test header")).unwrap();

        let edges = crate::ingest::read_edge_list(&dir.path().join("edges.tsv")).unwrap();
        let graph = FollowGraph::from_edges(edges).graph;
        assert_eq!(graph, data.graph);

        let table = crate::ingest::load_leaning_table(&dir.path().join("leaning.csv")).unwrap();
        assert_eq!(table, data.table);

        let tweets = crate::ingest::load_tweets(&dir.path().join("tweets.jsonl")).unwrap();
        let corpus = Corpus::build(tweets, &table);
        assert_eq!(corpus, data.corpus);

        let profiles = crate::ingest::load_profiles(&dir.path().join("profiles.jsonl")).unwrap();
        assert_eq!(profiles, data.profiles);
    }
}
