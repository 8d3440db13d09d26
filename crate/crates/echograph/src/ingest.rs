//! Input loading and validation.
//!
//! File formats (lines starting with `#` are comments in all of them):
//!
//! - Edge list: one `follower<TAB>followee` pair per line, UTF-8.
//! - Tweets: newline-delimited JSON objects with fields `tweet_id`,
//!   `user_id`, `timestamp`, `urls`, `text`, `retweet_count`,
//!   `favorite_count`.
//! - Profiles: newline-delimited JSON objects with fields `user_id`,
//!   `followers_count`, `friends_count`, `statuses_count`,
//!   `account_created`.
//! - Leaning table: comma-separated `domain,score` with scores in [0, 1];
//!   alias rows are `alias,=,canonical`.
//! - User polarity: comma-separated `user_id,score` with signed scores.
//!
//! A tweet is mapped to a leaning observation when at least one of its URLs
//! resolves, through the alias map, to a table domain; the observation is
//! the mean of all matched leanings, one observation per tweet. Domain
//! matching is exact on the lowercased host with a leading `www.` stripped;
//! subdomain variants are handled with alias rows, never fuzzily.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{FollowGraph, GraphBuild};
use crate::UserId;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: {message}")]
    Validation {
        path: String,
        line: usize,
        message: String,
    },
}

impl IngestError {
    fn io(path: &str, source: std::io::Error) -> Self {
        IngestError::Io {
            path: path.to_owned(),
            source,
        }
    }

    fn parse(path: &str, line: usize, message: impl Into<String>) -> Self {
        IngestError::Parse {
            path: path.to_owned(),
            line,
            message: message.into(),
        }
    }

    fn validation(path: &str, line: usize, message: impl Into<String>) -> Self {
        IngestError::Validation {
            path: path.to_owned(),
            line,
            message: message.into(),
        }
    }
}

/// One tweet as ingested; counts are non-negative by construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub tweet_id: String,
    pub user_id: UserId,
    pub timestamp: i64,
    #[serde(default)]
    pub urls: Vec<String>,
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub retweet_count: u64,
    #[serde(default)]
    pub favorite_count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserProfileRecord {
    pub user_id: UserId,
    pub followers_count: u64,
    pub friends_count: u64,
    pub statuses_count: u64,
    pub account_created: i64,
}

/// Map from news domain to a leaning score in [0, 1] (0 liberal, 1
/// conservative), plus shortened-domain aliases.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SourceLeaningTable {
    entries: BTreeMap<String, f64>,
    aliases: BTreeMap<String, String>,
}

impl SourceLeaningTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, domain: &str, leaning: f64) {
        self.entries.insert(domain.to_ascii_lowercase(), leaning);
    }

    pub fn insert_alias(&mut self, alias: &str, canonical: &str) {
        self.aliases
            .insert(alias.to_ascii_lowercase(), canonical.to_ascii_lowercase());
    }

    /// Looks up a domain, expanding aliases first.
    pub fn leaning(&self, domain: &str) -> Option<f64> {
        let canonical = self.aliases.get(domain).map(String::as_str).unwrap_or(domain);
        self.entries.get(canonical).copied()
    }

    pub fn domains(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(d, &l)| (d.as_str(), l))
    }

    pub fn aliases(&self) -> impl Iterator<Item = (&str, &str)> {
        self.aliases.iter().map(|(a, c)| (a.as_str(), c.as_str()))
    }
}

/// Loads and validates a leaning table.
pub fn load_leaning_table(path: &Path) -> Result<SourceLeaningTable, IngestError> {
    let name = path.display().to_string();
    let file = File::open(path).map_err(|e| IngestError::io(&name, e))?;
    parse_leaning_table(BufReader::new(file), &name)
}

pub fn parse_leaning_table<R: Read>(
    reader: R,
    name: &str,
) -> Result<SourceLeaningTable, IngestError> {
    let mut table = SourceLeaningTable::default();
    let mut alias_rows: Vec<(usize, String, String)> = Vec::new();

    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| IngestError::io(name, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        match fields.as_slice() {
            [alias, "=", canonical] => {
                alias_rows.push((
                    lineno,
                    alias.to_ascii_lowercase(),
                    canonical.to_ascii_lowercase(),
                ));
            }
            [domain, score] => {
                let domain = domain.to_ascii_lowercase();
                if domain.is_empty() {
                    return Err(IngestError::parse(name, lineno, "empty domain"));
                }
                let value: f64 = score.parse().map_err(|_| {
                    IngestError::parse(name, lineno, format!("invalid score {score:?}"))
                })?;
                if !(0.0..=1.0).contains(&value) {
                    return Err(IngestError::validation(
                        name,
                        lineno,
                        format!("score {value} outside [0,1] for {domain}"),
                    ));
                }
                if table.entries.contains_key(&domain) {
                    return Err(IngestError::validation(
                        name,
                        lineno,
                        format!("duplicate domain {domain}"),
                    ));
                }
                table.entries.insert(domain, value);
            }
            _ => {
                return Err(IngestError::parse(
                    name,
                    lineno,
                    format!("expected 'domain,score' or 'alias,=,canonical', got {line:?}"),
                ))
            }
        }
    }

    for (lineno, alias, canonical) in alias_rows {
        if !table.entries.contains_key(&canonical) {
            return Err(IngestError::validation(
                name,
                lineno,
                format!("alias {alias} points to unknown domain {canonical}"),
            ));
        }
        if table.entries.contains_key(&alias) {
            return Err(IngestError::validation(
                name,
                lineno,
                format!("alias {alias} collides with a table domain"),
            ));
        }
        if table.aliases.contains_key(&alias) {
            return Err(IngestError::validation(
                name,
                lineno,
                format!("duplicate alias {alias}"),
            ));
        }
        table.aliases.insert(alias, canonical);
    }

    Ok(table)
}

/// Lowercased host of a URL with a leading `www.` stripped; `None` for
/// anything that does not parse as an absolute URL with a host.
pub fn extract_domain(raw: &str) -> Option<String> {
    let parsed = url::Url::parse(raw).ok()?;
    let host = parsed.host_str()?.to_ascii_lowercase();
    let host = host.strip_prefix("www.").unwrap_or(&host);
    if host.is_empty() {
        None
    } else {
        Some(host.to_owned())
    }
}

/// Leaning of one tweet: the mean over its URLs that match the table, or
/// `None` when no URL matches.
pub fn resolve_leaning(tweet: &TweetRecord, table: &SourceLeaningTable) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for raw in &tweet.urls {
        if let Some(domain) = extract_domain(raw) {
            if let Some(leaning) = table.leaning(&domain) {
                sum += leaning;
                count += 1;
            }
        }
    }
    if count == 0 {
        None
    } else {
        Some(sum / count as f64)
    }
}

/// One resolved news link: the tweet it came from and its leaning.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkObservation {
    pub tweet_id: String,
    pub leaning: f64,
}

/// Tweets grouped by user together with their resolved leaning
/// observations.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Corpus {
    tweets: BTreeMap<UserId, Vec<TweetRecord>>,
    observations: BTreeMap<UserId, Vec<LinkObservation>>,
}

impl Corpus {
    pub fn build(tweets: Vec<TweetRecord>, table: &SourceLeaningTable) -> Corpus {
        let mut corpus = Corpus::default();
        for tweet in tweets {
            if let Some(leaning) = resolve_leaning(&tweet, table) {
                corpus
                    .observations
                    .entry(tweet.user_id.clone())
                    .or_default()
                    .push(LinkObservation {
                        tweet_id: tweet.tweet_id.clone(),
                        leaning,
                    });
            }
            corpus
                .tweets
                .entry(tweet.user_id.clone())
                .or_default()
                .push(tweet);
        }
        corpus
    }

    pub fn users(&self) -> impl Iterator<Item = &UserId> {
        self.tweets.keys()
    }

    pub fn user_count(&self) -> usize {
        self.tweets.len()
    }

    pub fn tweet_count(&self) -> usize {
        self.tweets.values().map(Vec::len).sum()
    }

    pub fn observation_count(&self) -> usize {
        self.observations.values().map(Vec::len).sum()
    }

    pub fn tweets_of(&self, user: &UserId) -> &[TweetRecord] {
        self.tweets.get(user).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn observations_of(&self, user: &UserId) -> &[LinkObservation] {
        self.observations
            .get(user)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn max_timestamp(&self) -> Option<i64> {
        self.tweets
            .values()
            .flat_map(|ts| ts.iter().map(|t| t.timestamp))
            .max()
    }

    /// Drops every user not in `keep`.
    pub fn retain_users(&mut self, keep: &BTreeSet<UserId>) {
        self.tweets.retain(|u, _| keep.contains(u));
        self.observations.retain(|u, _| keep.contains(u));
    }
}

/// Thresholds for the bot checks. An account is removed when its tweets per
/// day fall outside `[min_tweets_per_day, max_tweets_per_day]`, when its
/// follower or friend counts fall below the minima, or when it is younger
/// than `min_account_age_days` at the reference time (the latest tweet
/// timestamp in the corpus).
#[derive(Clone, Debug, PartialEq)]
pub struct BotThresholds {
    pub min_tweets_per_day: f64,
    pub max_tweets_per_day: f64,
    pub min_followers: u64,
    pub min_friends: u64,
    pub min_account_age_days: u64,
}

impl Default for BotThresholds {
    fn default() -> Self {
        BotThresholds {
            min_tweets_per_day: 0.0,
            max_tweets_per_day: 100.0,
            min_followers: 10,
            min_friends: 10,
            min_account_age_days: 365,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BotReason {
    TooManyTweetsPerDay,
    TooFewTweetsPerDay,
    TooFewFollowers,
    TooFewFriends,
    AccountTooYoung,
}

impl std::fmt::Display for BotReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            BotReason::TooManyTweetsPerDay => "too_many_tweets_per_day",
            BotReason::TooFewTweetsPerDay => "too_few_tweets_per_day",
            BotReason::TooFewFollowers => "too_few_followers",
            BotReason::TooFewFriends => "too_few_friends",
            BotReason::AccountTooYoung => "account_too_young",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub struct BotFilterReport {
    pub retained: BTreeSet<UserId>,
    pub removed: Vec<(UserId, BotReason)>,
}

const SECONDS_PER_DAY: f64 = 86_400.0;

/// Applies the bot checks to every profiled user.
///
/// The reference "now" is the latest tweet timestamp in the corpus, falling
/// back to the latest `account_created` when the corpus is empty. Each user
/// is judged independently, so the outcome does not depend on input order;
/// the removal list reports the first violated check in a fixed order.
pub fn filter_bots(
    profiles: &BTreeMap<UserId, UserProfileRecord>,
    corpus: &Corpus,
    thresholds: &BotThresholds,
) -> BotFilterReport {
    let now = corpus.max_timestamp().unwrap_or_else(|| {
        profiles
            .values()
            .map(|p| p.account_created)
            .max()
            .unwrap_or(0)
    });

    let mut retained = BTreeSet::new();
    let mut removed = Vec::new();
    for (user, profile) in profiles {
        let age_days = ((now - profile.account_created) as f64 / SECONDS_PER_DAY).max(0.0);
        let tweets_per_day = profile.statuses_count as f64 / age_days.max(1.0);
        let verdict = if tweets_per_day > thresholds.max_tweets_per_day {
            Some(BotReason::TooManyTweetsPerDay)
        } else if tweets_per_day < thresholds.min_tweets_per_day {
            Some(BotReason::TooFewTweetsPerDay)
        } else if profile.followers_count < thresholds.min_followers {
            Some(BotReason::TooFewFollowers)
        } else if profile.friends_count < thresholds.min_friends {
            Some(BotReason::TooFewFriends)
        } else if age_days < thresholds.min_account_age_days as f64 {
            Some(BotReason::AccountTooYoung)
        } else {
            None
        };
        match verdict {
            Some(reason) => removed.push((user.clone(), reason)),
            None => {
                retained.insert(user.clone());
            }
        }
    }
    BotFilterReport { retained, removed }
}

/// Users with at least `min_tweets` tweets in the corpus.
pub fn filter_by_activity(corpus: &Corpus, min_tweets: usize) -> BTreeSet<UserId> {
    corpus
        .tweets
        .iter()
        .filter(|(_, tweets)| tweets.len() >= min_tweets)
        .map(|(u, _)| u.clone())
        .collect()
}

/// Reads a tab-separated edge list; `#` lines and blank lines are skipped.
pub fn read_edge_list(path: &Path) -> Result<Vec<(UserId, UserId)>, IngestError> {
    let name = path.display().to_string();
    let file = File::open(path).map_err(|e| IngestError::io(&name, e))?;
    parse_edge_list(BufReader::new(file), &name)
}

pub fn parse_edge_list<R: Read>(reader: R, name: &str) -> Result<Vec<(UserId, UserId)>, IngestError> {
    let mut edges = Vec::new();
    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| IngestError::io(name, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split('\t');
        let follower = parts.next().unwrap_or("").trim();
        let followee = parts.next().unwrap_or("").trim();
        if follower.is_empty() || followee.is_empty() || parts.next().is_some() {
            return Err(IngestError::parse(
                name,
                lineno,
                format!("expected 'follower<TAB>followee', got {trimmed:?}"),
            ));
        }
        edges.push((UserId::from(follower), UserId::from(followee)));
    }
    Ok(edges)
}

/// Builds the follow graph from an edge-list file.
pub fn build_graph(path: &Path) -> Result<GraphBuild, IngestError> {
    let edges = read_edge_list(path)?;
    Ok(FollowGraph::from_edges(edges))
}

/// Reads newline-delimited tweet records.
pub fn load_tweets(path: &Path) -> Result<Vec<TweetRecord>, IngestError> {
    let name = path.display().to_string();
    let file = File::open(path).map_err(|e| IngestError::io(&name, e))?;
    parse_tweets(BufReader::new(file), &name)
}

pub fn parse_tweets<R: Read>(reader: R, name: &str) -> Result<Vec<TweetRecord>, IngestError> {
    let mut tweets = Vec::new();
    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| IngestError::io(name, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tweet: TweetRecord = serde_json::from_str(trimmed)
            .map_err(|e| IngestError::parse(name, lineno, e.to_string()))?;
        if tweet.user_id.is_empty() {
            return Err(IngestError::validation(name, lineno, "empty user_id"));
        }
        tweets.push(tweet);
    }
    Ok(tweets)
}

/// Reads newline-delimited profile records, keyed by user id.
pub fn load_profiles(path: &Path) -> Result<BTreeMap<UserId, UserProfileRecord>, IngestError> {
    let name = path.display().to_string();
    let file = File::open(path).map_err(|e| IngestError::io(&name, e))?;
    parse_profiles(BufReader::new(file), &name)
}

pub fn parse_profiles<R: Read>(
    reader: R,
    name: &str,
) -> Result<BTreeMap<UserId, UserProfileRecord>, IngestError> {
    let mut profiles = BTreeMap::new();
    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| IngestError::io(name, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let profile: UserProfileRecord = serde_json::from_str(trimmed)
            .map_err(|e| IngestError::parse(name, lineno, e.to_string()))?;
        if profile.user_id.is_empty() {
            return Err(IngestError::validation(name, lineno, "empty user_id"));
        }
        if profiles.contains_key(&profile.user_id) {
            return Err(IngestError::validation(
                name,
                lineno,
                format!("duplicate profile for {}", profile.user_id),
            ));
        }
        profiles.insert(profile.user_id.clone(), profile);
    }
    Ok(profiles)
}

/// Reads `user_id,score` rows of externally estimated user polarity.
pub fn load_user_polarity(path: &Path) -> Result<BTreeMap<UserId, f64>, IngestError> {
    let name = path.display().to_string();
    let file = File::open(path).map_err(|e| IngestError::io(&name, e))?;
    let mut scores = BTreeMap::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| IngestError::io(&name, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (user, score) = trimmed.split_once(',').ok_or_else(|| {
            IngestError::parse(&name, lineno, format!("expected 'user_id,score', got {trimmed:?}"))
        })?;
        let value: f64 = score.trim().parse().map_err(|_| {
            IngestError::parse(&name, lineno, format!("invalid score {score:?}"))
        })?;
        scores.insert(UserId::from(user.trim()), value);
    }
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tweet(urls: &[&str]) -> TweetRecord {
        TweetRecord {
            tweet_id: "t1".into(),
            user_id: UserId::from("u1"),
            timestamp: 0,
            urls: urls.iter().map(|s| s.to_string()).collect(),
            text: String::new(),
            retweet_count: 0,
            favorite_count: 0,
        }
    }

    #[test]
    fn leaning_table_loads_and_resolves_aliases() {
        let text = "nytimes.com,0.0\nfoxnews.com,1.0\nfxn.ws,=,foxnews.com\n";
        let table = parse_leaning_table(text.as_bytes(), "test").unwrap();
        assert_eq!(table.len(), 2);
        let t = tweet(&["http://fxn.ws/abc"]);
        assert_eq!(resolve_leaning(&t, &table), Some(1.0));
    }

    #[test]
    fn leaning_table_rejects_out_of_range_and_duplicates() {
        let err = parse_leaning_table("x.com,1.5\n".as_bytes(), "test").unwrap_err();
        assert!(matches!(err, IngestError::Validation { line: 1, .. }));

        let err = parse_leaning_table("x.com,0.5\nx.com,0.6\n".as_bytes(), "test").unwrap_err();
        assert!(matches!(err, IngestError::Validation { line: 2, .. }));

        let err = parse_leaning_table("x.com,abc\n".as_bytes(), "test").unwrap_err();
        assert!(matches!(err, IngestError::Parse { line: 1, .. }));
    }

    #[test]
    fn leaning_table_rejects_dangling_alias() {
        let err = parse_leaning_table("a.com,0.1\nb.ly,=,c.com\n".as_bytes(), "test").unwrap_err();
        assert!(matches!(err, IngestError::Validation { .. }));
    }

    #[test]
    fn extract_domain_cases() {
        assert_eq!(
            extract_domain("https://www.nytimes.com/2016/06/28/us.html").as_deref(),
            Some("nytimes.com")
        );
        assert_eq!(extract_domain("http://fxn.ws/xyz").as_deref(), Some("fxn.ws"));
        assert_eq!(extract_domain("not a url"), None);
        assert_eq!(extract_domain("nytimes.com/article"), None);
    }

    #[test]
    fn resolve_leaning_averages_matches() {
        let mut table = SourceLeaningTable::default();
        table.insert("left.com", 0.2);
        table.insert("right.com", 0.8);
        table.insert("far.com", 0.9);

        let t = tweet(&["https://far.com/a"]);
        assert_eq!(resolve_leaning(&t, &table), Some(0.9));

        let t = tweet(&["https://left.com/a", "https://right.com/b"]);
        assert_eq!(resolve_leaning(&t, &table), Some(0.5));

        let t = tweet(&["https://unknown.org/a"]);
        assert_eq!(resolve_leaning(&t, &table), None);

        let t = tweet(&[]);
        assert_eq!(resolve_leaning(&t, &table), None);
    }

    #[test]
    fn edge_list_parses_and_reports_line_numbers() {
        let edges = parse_edge_list("# header\na\tb\n\nb\tc\n".as_bytes(), "test").unwrap();
        assert_eq!(edges.len(), 2);

        let err = parse_edge_list("a\tb\nbroken line\n".as_bytes(), "test").unwrap_err();
        assert!(matches!(err, IngestError::Parse { line: 2, .. }));
    }

    #[test]
    fn tweets_roundtrip_json_lines() {
        let line = r#"{"tweet_id":"t1","user_id":"u1","timestamp":5,"urls":["https://a.com/x"],"text":"hi","retweet_count":2,"favorite_count":0}"#;
        let tweets = parse_tweets(line.as_bytes(), "test").unwrap();
        assert_eq!(tweets.len(), 1);
        assert_eq!(tweets[0].retweet_count, 2);

        let err = parse_tweets(r#"{"tweet_id":"t"}"#.as_bytes(), "test").unwrap_err();
        assert!(matches!(err, IngestError::Parse { .. }));

        // Negative counts must not deserialize.
        let neg = r#"{"tweet_id":"t","user_id":"u","timestamp":0,"urls":[],"text":"","retweet_count":-1,"favorite_count":0}"#;
        assert!(parse_tweets(neg.as_bytes(), "test").is_err());
    }

    fn profile(user: &str, statuses: u64, followers: u64, friends: u64, created: i64) -> UserProfileRecord {
        UserProfileRecord {
            user_id: UserId::from(user),
            followers_count: followers,
            friends_count: friends,
            statuses_count: statuses,
            account_created: created,
        }
    }

    #[test]
    fn bot_filter_applies_each_threshold() {
        let day = 86_400i64;
        let now_tweet = TweetRecord {
            tweet_id: "t".into(),
            user_id: UserId::from("ok"),
            timestamp: 1000 * day,
            urls: vec![],
            text: String::new(),
            retweet_count: 0,
            favorite_count: 0,
        };
        let corpus = Corpus::build(vec![now_tweet], &SourceLeaningTable::default());

        let mut profiles = BTreeMap::new();
        // Healthy account: two years old, modest activity.
        profiles.insert(UserId::from("ok"), profile("ok", 500, 50, 50, 270 * day));
        // Young account: 100 days old at reference time.
        profiles.insert(UserId::from("young"), profile("young", 10, 50, 50, 900 * day));
        // Hyperactive account.
        profiles.insert(UserId::from("firehose"), profile("firehose", 200_000, 50, 50, 0));
        // Too few followers.
        profiles.insert(UserId::from("lonely"), profile("lonely", 10, 2, 50, 0));

        let report = filter_bots(&profiles, &corpus, &BotThresholds::default());
        assert!(report.retained.contains(&UserId::from("ok")));
        assert_eq!(report.retained.len(), 1);

        let reasons: BTreeMap<_, _> = report.removed.iter().cloned().collect();
        assert_eq!(reasons[&UserId::from("young")], BotReason::AccountTooYoung);
        assert_eq!(
            reasons[&UserId::from("firehose")],
            BotReason::TooManyTweetsPerDay
        );
        assert_eq!(reasons[&UserId::from("lonely")], BotReason::TooFewFollowers);
    }

    #[test]
    fn bot_filter_output_is_a_subset() {
        let corpus = Corpus::default();
        let mut profiles = BTreeMap::new();
        profiles.insert(UserId::from("a"), profile("a", 0, 100, 100, 0));
        let report = filter_bots(&profiles, &corpus, &BotThresholds::default());
        for user in &report.retained {
            assert!(profiles.contains_key(user));
        }
        assert_eq!(report.retained.len() + report.removed.len(), profiles.len());
    }

    #[test]
    fn corpus_groups_tweets_and_observations() {
        let mut table = SourceLeaningTable::default();
        table.insert("news.com", 0.9);
        let mut t1 = tweet(&["https://news.com/1"]);
        t1.tweet_id = "t1".into();
        let mut t2 = tweet(&[]);
        t2.tweet_id = "t2".into();
        let corpus = Corpus::build(vec![t1, t2], &table);
        assert_eq!(corpus.tweet_count(), 2);
        assert_eq!(corpus.observation_count(), 1);
        let obs = corpus.observations_of(&UserId::from("u1"));
        assert_eq!(obs[0].leaning, 0.9);
        assert_eq!(obs[0].tweet_id, "t1");
    }

    #[test]
    fn activity_filter() {
        let mut tweets = Vec::new();
        for i in 0..5 {
            let mut t = tweet(&[]);
            t.tweet_id = format!("t{i}");
            tweets.push(t);
        }
        let mut other = tweet(&[]);
        other.tweet_id = "o".into();
        other.user_id = UserId::from("u2");
        tweets.push(other);

        let corpus = Corpus::build(tweets, &SourceLeaningTable::default());
        let active = filter_by_activity(&corpus, 5);
        assert!(active.contains(&UserId::from("u1")));
        assert!(!active.contains(&UserId::from("u2")));
    }
}
