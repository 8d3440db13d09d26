//! Subcommand implementations.
//!
//! Every command resolves its settings through [`config::Resolver`]
//! (flags over config file over defaults), validates input paths before
//! any compute, and stamps each output file with the effective config
//! hash.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use echograph::graph::FollowGraph;
use echograph::ingest::{
    self, BotReason, BotThresholds, Corpus, SourceLeaningTable, UserProfileRecord,
};
use echograph::metrics::{
    clustering_coefficient, degrees, pagerank, DegreeVectors, NodeMetricVector, PageRankConfig,
    PageRankResult,
};
use echograph::polarity::{
    assign_roles, summarize_all, PolarityConfig, PolaritySummary, RoleLabel, UserContentProfile,
};
use echograph::predict::{
    build_features, build_task, cross_validate, tfidf_features, train, write_cv_report_csv,
    FeatureInputs, FeatureMatrix, FeatureSet, ForestConfig, PredictError, RoleTarget, TfidfConfig,
};
use echograph::stats::{
    beanplot_data, compare_groups, scatter_data, write_comparison_detail_csv,
    write_comparison_summary_csv, write_scatter_csv, CompareConfig, DeltaGrid, FeatureTable,
    GroupSplit, StatsError,
};
use echograph::synth::{generate, SynthConfig};
use echograph::UserId;

use crate::config::Resolver;
use crate::{CliError, CommonArgs, DeltaArgs, FilterArgs, ForestArgs, InputArgs, SynthArgs};

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn init_threads(resolver: &Resolver, common: &CommonArgs) -> Result<(), CliError> {
    let from_env = std::env::var("ECHOGRAPH_THREADS")
        .ok()
        .map(|raw| {
            raw.parse::<usize>()
                .map_err(|_| CliError::validation(format!("ECHOGRAPH_THREADS: cannot parse {raw:?}")))
        })
        .transpose()?;
    let threads = resolver
        .execution("threads", common.threads)?
        .or(from_env);
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::validation("threads must be at least 1"));
        }
        // Ignore the error from re-initialization (tests call commands in
        // one process); the first pool wins and results do not depend on it.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn require_out(resolver: &Resolver, common: &CommonArgs) -> Result<PathBuf, CliError> {
    resolver
        .execution("out", common.out.clone())?
        .ok_or_else(|| CliError::validation("missing output directory: --out (or out= in config)"))
}

fn out_file(out: &Path, name: &str, hash: &str) -> Result<BufWriter<File>, CliError> {
    std::fs::create_dir_all(out)?;
    let mut w = BufWriter::new(File::create(out.join(name))?);
    writeln!(w, "# config {hash}")?;
    Ok(w)
}

struct DatasetPaths {
    edges: PathBuf,
    tweets: Option<PathBuf>,
    profiles: Option<PathBuf>,
    leaning: Option<PathBuf>,
    user_polarity: Option<PathBuf>,
}

/// Resolves input paths (explicit flags beat config values beat the
/// `--in` directory layout) and validates that they exist.
fn dataset_paths(
    resolver: &mut Resolver,
    inputs: &InputArgs,
    need_tweets: bool,
) -> Result<DatasetPaths, CliError> {
    let dir = resolver.path("in", inputs.input_dir.as_ref());
    let from_dir = |name: &str| dir.as_ref().map(|d| d.join(name));

    let edges = resolver
        .path("edges", inputs.edges.as_ref())
        .or_else(|| from_dir("edges.tsv"))
        .ok_or_else(|| CliError::validation("missing input: --edges (or --in DIR)"))?;
    let tweets = resolver
        .path("tweets", inputs.tweets.as_ref())
        .or_else(|| from_dir("tweets.jsonl"));
    let profiles = resolver
        .path("profiles", inputs.profiles.as_ref())
        .or_else(|| from_dir("profiles.jsonl"));
    let leaning = resolver
        .path("leaning_table", inputs.leaning_table.as_ref())
        .or_else(|| from_dir("leaning.csv"));
    let user_polarity = resolver
        .path("user_polarity", inputs.user_polarity.as_ref())
        .or_else(|| {
            from_dir("user_polarity.csv").filter(|p| p.exists())
        });

    if need_tweets {
        if tweets.is_none() {
            return Err(CliError::validation("missing input: --tweets (or --in DIR)"));
        }
        if leaning.is_none() {
            return Err(CliError::validation(
                "missing input: --leaning-table (or --in DIR)",
            ));
        }
    }

    let paths = DatasetPaths {
        edges,
        tweets,
        profiles,
        leaning,
        user_polarity,
    };
    for path in [Some(&paths.edges), paths.tweets.as_ref(), paths.profiles.as_ref(), paths.leaning.as_ref(), paths.user_polarity.as_ref()]
        .into_iter()
        .flatten()
    {
        if !path.exists() {
            return Err(CliError::validation(format!(
                "input path does not exist: {}",
                path.display()
            )));
        }
    }
    Ok(paths)
}

#[derive(Clone, Copy, PartialEq)]
enum FilterOrder {
    BotsFirst,
    ActivityFirst,
}

struct Filters {
    min_obs: usize,
    min_topic_tweets: usize,
    bot: Option<BotThresholds>,
    order: FilterOrder,
}

fn resolve_filters(resolver: &mut Resolver, args: &FilterArgs) -> Result<Filters, CliError> {
    let defaults = BotThresholds::default();
    let min_obs = resolver.value("min_obs", args.min_obs, 1usize)?;
    let min_topic_tweets = resolver.value("min_topic_tweets", args.min_topic_tweets, 0usize)?;
    let no_bot_filter = resolver.flag("no_bot_filter", args.no_bot_filter)?;
    let thresholds = BotThresholds {
        max_tweets_per_day: resolver.value(
            "max_tweets_per_day",
            args.max_tweets_per_day,
            defaults.max_tweets_per_day,
        )?,
        min_tweets_per_day: resolver.value(
            "min_tweets_per_day",
            args.min_tweets_per_day,
            defaults.min_tweets_per_day,
        )?,
        min_followers: resolver.value("min_followers", args.min_followers, defaults.min_followers)?,
        min_friends: resolver.value("min_friends", args.min_friends, defaults.min_friends)?,
        min_account_age_days: resolver.value(
            "min_account_age_days",
            args.min_account_age_days,
            defaults.min_account_age_days,
        )?,
    };
    let order = match resolver
        .value("filter_order", args.filter_order.clone(), "bots_first".to_owned())?
        .as_str()
    {
        "bots_first" => FilterOrder::BotsFirst,
        "activity_first" => FilterOrder::ActivityFirst,
        other => {
            return Err(CliError::validation(format!(
                "filter_order must be bots_first or activity_first, got {other:?}"
            )))
        }
    };
    Ok(Filters {
        min_obs,
        min_topic_tweets,
        bot: (!no_bot_filter).then_some(thresholds),
        order,
    })
}

struct Dataset {
    graph: FollowGraph,
    corpus: Corpus,
    profiles: BTreeMap<UserId, UserProfileRecord>,
    table: SourceLeaningTable,
    user_polarity: BTreeMap<UserId, f64>,
}

#[derive(Default)]
struct IngestSummary {
    input_edges: usize,
    self_loops_dropped: usize,
    duplicates_collapsed: usize,
    input_tweets: usize,
    bot_removals: Vec<(UserId, BotReason)>,
    activity_removals: usize,
    unprofiled_removals: usize,
}

/// Loads the dataset and applies the user filters, rebuilding the graph
/// over retained users.
fn load_dataset(paths: &DatasetPaths, filters: &Filters) -> Result<(Dataset, IngestSummary), CliError> {
    let mut summary = IngestSummary::default();

    let edges = ingest::read_edge_list(&paths.edges)?;
    summary.input_edges = edges.len();
    let build = FollowGraph::from_edges(edges);
    summary.self_loops_dropped = build.self_loops_dropped;
    summary.duplicates_collapsed = build.duplicates_collapsed;
    let mut graph = build.graph;

    let table = match &paths.leaning {
        Some(path) => ingest::load_leaning_table(path)?,
        None => SourceLeaningTable::default(),
    };
    let tweets = match &paths.tweets {
        Some(path) => ingest::load_tweets(path)?,
        None => Vec::new(),
    };
    summary.input_tweets = tweets.len();
    let mut corpus = Corpus::build(tweets, &table);

    let mut profiles = match &paths.profiles {
        Some(path) => ingest::load_profiles(path)?,
        None => BTreeMap::new(),
    };
    let mut user_polarity = match &paths.user_polarity {
        Some(path) => ingest::load_user_polarity(path)?,
        None => BTreeMap::new(),
    };

    let stages: [&str; 2] = match filters.order {
        FilterOrder::BotsFirst => ["bots", "activity"],
        FilterOrder::ActivityFirst => ["activity", "bots"],
    };
    for stage in stages {
        let keep: Option<BTreeSet<UserId>> = match stage {
            "bots" => match (&filters.bot, profiles.is_empty()) {
                (Some(thresholds), false) => {
                    let report = ingest::filter_bots(&profiles, &corpus, thresholds);
                    summary.bot_removals = report.removed.clone();
                    // Users without a profile cannot be vetted and are
                    // dropped alongside the flagged ones.
                    summary.unprofiled_removals = graph
                        .ids()
                        .iter()
                        .chain(corpus.users())
                        .collect::<BTreeSet<_>>()
                        .iter()
                        .filter(|u| !profiles.contains_key(**u))
                        .count();
                    Some(report.retained)
                }
                _ => None,
            },
            "activity" => {
                if filters.min_topic_tweets > 0 {
                    let active = ingest::filter_by_activity(&corpus, filters.min_topic_tweets);
                    summary.activity_removals = corpus.user_count() - active.len();
                    Some(active)
                } else {
                    None
                }
            }
            _ => unreachable!(),
        };
        if let Some(keep) = keep {
            let kept_edges: Vec<(UserId, UserId)> = graph
                .canonical_edges()
                .filter(|(a, b)| keep.contains(*a) && keep.contains(*b))
                .map(|(a, b)| (a.clone(), b.clone()))
                .collect();
            graph = FollowGraph::from_edges(kept_edges).graph;
            corpus.retain_users(&keep);
            profiles.retain(|u, _| keep.contains(u));
            user_polarity.retain(|u, _| keep.contains(u));
        }
    }

    Ok((
        Dataset {
            graph,
            corpus,
            profiles,
            table,
            user_polarity,
        },
        summary,
    ))
}

fn resolve_focal_delta(resolver: &mut Resolver, deltas: &DeltaArgs) -> Result<f64, CliError> {
    let delta = resolver.value("delta", deltas.delta, 0.3f64)?;
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(CliError::validation(format!(
            "delta must lie in (0, 0.5], got {delta}"
        )));
    }
    Ok(delta)
}

fn parse_grid(spec: &str) -> Result<DeltaGrid, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::validation(format!(
            "delta grid must be lo:hi:step, got {spec:?}"
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| CliError::validation(format!("delta grid: cannot parse {p:?}")))
        })
        .collect::<Result<_, _>>()?;
    Ok(DeltaGrid::from_range(nums[0], nums[1], nums[2])?)
}

fn resolve_grid(resolver: &mut Resolver, deltas: &DeltaArgs) -> Result<(DeltaGrid, bool), CliError> {
    match resolver.optional("delta_grid", deltas.delta_grid.clone())? {
        Some(spec) => Ok((parse_grid(&spec)?, true)),
        None => Ok((DeltaGrid::standard(), false)),
    }
}

fn network_metrics(
    graph: &FollowGraph,
    resolver: &mut Resolver,
) -> Result<(PageRankResult, DegreeVectors, NodeMetricVector), CliError> {
    let config = PageRankConfig {
        damping: resolver.value("damping", None, 0.85f64)?,
        tolerance: resolver.value("pagerank_tol", None, 1e-10f64)?,
        max_iterations: resolver.value("pagerank_max_iter", None, 200usize)?,
    };
    let pr = pagerank(graph, &config)?;
    Ok((pr, degrees(graph), clustering_coefficient(graph)))
}

fn metric_map(graph: &FollowGraph, vector: &NodeMetricVector) -> BTreeMap<UserId, f64> {
    vector
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| (graph.user_id(i as u32).clone(), v))
        .collect()
}

/// The comparison features, in the order the tables report them.
fn build_feature_table(
    data: &Dataset,
    pr: &PageRankResult,
    deg: &DegreeVectors,
    cc: &NodeMetricVector,
    now: i64,
) -> FeatureTable {
    let mut table = FeatureTable::new();
    table.add("pagerank", metric_map(&data.graph, &pr.scores));
    table.add("clustering_coefficient", metric_map(&data.graph, cc));
    if !data.user_polarity.is_empty() {
        table.add(
            "user_polarity_abs",
            data.user_polarity
                .iter()
                .map(|(u, v)| (u.clone(), v.abs()))
                .collect(),
        );
    }
    table.add("degree", metric_map(&data.graph, &deg.undirected));
    table.add("in_degree", metric_map(&data.graph, &deg.in_degree));
    table.add("out_degree", metric_map(&data.graph, &deg.out_degree));

    let mut retweet_rate = BTreeMap::new();
    let mut retweet_volume = BTreeMap::new();
    let mut favorite_rate = BTreeMap::new();
    let mut favorite_volume = BTreeMap::new();
    for user in data.corpus.users() {
        let tweets = data.corpus.tweets_of(user);
        let profile = UserContentProfile {
            user_id: user.clone(),
            retweet_counts: tweets.iter().map(|t| t.retweet_count).collect(),
            favorite_counts: tweets.iter().map(|t| t.favorite_count).collect(),
            ..Default::default()
        };
        if let Some(m) = profile.interaction_metrics() {
            retweet_rate.insert(user.clone(), m.retweet_rate);
            retweet_volume.insert(user.clone(), m.retweet_volume);
            favorite_rate.insert(user.clone(), m.favorite_rate);
            favorite_volume.insert(user.clone(), m.favorite_volume);
        }
    }
    table.add("retweet_rate", retweet_rate);
    table.add("retweet_volume", retweet_volume);
    table.add("favorite_rate", favorite_rate);
    table.add("favorite_volume", favorite_volume);

    if !data.profiles.is_empty() {
        let weeks = 7.0 * 86_400.0;
        table.add(
            "followers_count",
            data.profiles
                .iter()
                .map(|(u, p)| (u.clone(), p.followers_count as f64))
                .collect(),
        );
        table.add(
            "friends_count",
            data.profiles
                .iter()
                .map(|(u, p)| (u.clone(), p.friends_count as f64))
                .collect(),
        );
        table.add(
            "tweet_count",
            data.profiles
                .iter()
                .map(|(u, p)| (u.clone(), p.statuses_count as f64))
                .collect(),
        );
        table.add(
            "account_age_weeks",
            data.profiles
                .iter()
                .map(|(u, p)| (u.clone(), ((now - p.account_created) as f64 / weeks).max(0.0)))
                .collect(),
        );
    }
    table
}

fn summaries_of(data: &Dataset, min_obs: usize) -> BTreeMap<UserId, PolaritySummary> {
    summarize_all(
        &data.graph,
        &data.corpus,
        &data.user_polarity,
        &PolarityConfig {
            min_observations: min_obs,
        },
    )
}

fn delta_label(delta: f64) -> String {
    delta.to_string().replace('.', "_")
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

pub fn ingest(
    common: &CommonArgs,
    inputs: &InputArgs,
    filters: &FilterArgs,
) -> Result<(), CliError> {
    let mut r = Resolver::new(common.config.as_ref())?;
    init_threads(&r, common)?;
    let paths = dataset_paths(&mut r, inputs, false)?;
    let filters = resolve_filters(&mut r, filters)?;
    let out = require_out(&r, common)?;
    let (data, summary) = load_dataset(&paths, &filters)?;
    let hash = r.config_hash();

    let mut edges = out_file(&out, "edges_canonical.tsv", &hash)?;
    data.graph.write_edge_list(&mut edges)?;

    let mut removals = out_file(&out, "bot_removals.csv", &hash)?;
    writeln!(removals, "user_id,reason")?;
    for (user, reason) in &summary.bot_removals {
        writeln!(removals, "{user},{reason}")?;
    }

    let mut report = out_file(&out, "ingest_report.txt", &hash)?;
    write_ingest_report(&mut report, &data, &summary)?;
    Ok(())
}

fn write_ingest_report<W: Write>(
    w: &mut W,
    data: &Dataset,
    summary: &IngestSummary,
) -> Result<(), CliError> {
    writeln!(w, "input_edges {}", summary.input_edges)?;
    writeln!(w, "self_loops_dropped {}", summary.self_loops_dropped)?;
    writeln!(w, "duplicates_collapsed {}", summary.duplicates_collapsed)?;
    writeln!(w, "input_tweets {}", summary.input_tweets)?;
    writeln!(w, "bot_removals {}", summary.bot_removals.len())?;
    writeln!(w, "unprofiled_removals {}", summary.unprofiled_removals)?;
    writeln!(w, "activity_removals {}", summary.activity_removals)?;
    writeln!(w, "nodes {}", data.graph.node_count())?;
    writeln!(w, "edges {}", data.graph.edge_count())?;
    writeln!(w, "tweet_users {}", data.corpus.user_count())?;
    writeln!(w, "tweets {}", data.corpus.tweet_count())?;
    writeln!(w, "link_observations {}", data.corpus.observation_count())?;
    writeln!(w, "profiles {}", data.profiles.len())?;
    writeln!(w, "leaning_domains {}", data.table.len())?;
    Ok(())
}

pub fn metrics(
    common: &CommonArgs,
    inputs: &InputArgs,
    filters: &FilterArgs,
) -> Result<(), CliError> {
    let mut r = Resolver::new(common.config.as_ref())?;
    init_threads(&r, common)?;
    let paths = dataset_paths(&mut r, inputs, false)?;
    let filters = resolve_filters(&mut r, filters)?;
    let out = require_out(&r, common)?;
    let (data, _) = load_dataset(&paths, &filters)?;
    let (pr, deg, cc) = network_metrics(&data.graph, &mut r)?;
    let hash = r.config_hash();

    let mut csv = out_file(&out, "metrics.csv", &hash)?;
    echograph::metrics::write_metrics_csv(
        &data.graph,
        &[&pr.scores, &cc, &deg.in_degree, &deg.out_degree, &deg.undirected],
        &mut csv,
    )?;

    let mut report = out_file(&out, "metrics_report.txt", &hash)?;
    writeln!(report, "nodes {}", data.graph.node_count())?;
    writeln!(report, "edges {}", data.graph.edge_count())?;
    writeln!(report, "pagerank_iterations {}", pr.iterations)?;
    writeln!(report, "pagerank_converged {}", pr.converged)?;
    Ok(())
}

pub fn polarity(
    common: &CommonArgs,
    inputs: &InputArgs,
    filters: &FilterArgs,
    deltas: &DeltaArgs,
) -> Result<(), CliError> {
    let mut r = Resolver::new(common.config.as_ref())?;
    init_threads(&r, common)?;
    let paths = dataset_paths(&mut r, inputs, true)?;
    let filters = resolve_filters(&mut r, filters)?;
    let focal = resolve_focal_delta(&mut r, deltas)?;
    let (grid, grid_given) = resolve_grid(&mut r, deltas)?;
    let out = require_out(&r, common)?;
    let (data, _) = load_dataset(&paths, &filters)?;
    let summaries = summaries_of(&data, filters.min_obs);
    let hash = r.config_hash();

    let mut thresholds: Vec<f64> = if grid_given {
        grid.values().to_vec()
    } else {
        Vec::new()
    };
    thresholds.push(focal);
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    for delta in thresholds {
        let roles = assign_roles(&summaries, delta)?;
        let name = format!("summary_delta_{}.csv", delta_label(delta));
        let mut file = out_file(&out, &name, &hash)?;
        echograph::polarity::write_summary_csv(&summaries, &roles, &mut file)?;
    }
    Ok(())
}

pub fn compare(
    common: &CommonArgs,
    inputs: &InputArgs,
    filters: &FilterArgs,
    deltas: &DeltaArgs,
    alpha: Option<f64>,
    k_significant: Option<usize>,
) -> Result<(), CliError> {
    let mut r = Resolver::new(common.config.as_ref())?;
    init_threads(&r, common)?;
    let paths = dataset_paths(&mut r, inputs, true)?;
    let filters = resolve_filters(&mut r, filters)?;
    let (grid, _) = resolve_grid(&mut r, deltas)?;
    let seed = r.value("seed", common.seed, 0u64)?;
    let config = CompareConfig {
        alpha: r.value("alpha", alpha, 0.001f64)?,
        min_significant: r.value("k_significant", k_significant, 4usize)?,
        seed,
    };
    let out = require_out(&r, common)?;
    let (data, _) = load_dataset(&paths, &filters)?;
    let summaries = summaries_of(&data, filters.min_obs);
    let (pr, deg, cc) = network_metrics(&data.graph, &mut r)?;
    let now = data.corpus.max_timestamp().unwrap_or(0);
    let features = build_feature_table(&data, &pr, &deg, &cc, now);
    let hash = r.config_hash();

    for (split, label) in [
        (GroupSplit::PartisanVsBipartisan, "partisan"),
        (GroupSplit::GatekeeperVsRandom, "gatekeeper"),
    ] {
        let reports = compare_groups(&features, &summaries, &grid, split, &config)?;
        let mut summary_file = out_file(&out, &format!("compare_{label}.csv"), &hash)?;
        write_comparison_summary_csv(&reports, &mut summary_file)?;
        let mut detail_file = out_file(&out, &format!("compare_{label}_detail.csv"), &hash)?;
        write_comparison_detail_csv(&reports, &mut detail_file)?;
    }
    Ok(())
}

pub fn scatter(
    common: &CommonArgs,
    inputs: &InputArgs,
    filters: &FilterArgs,
) -> Result<(), CliError> {
    let mut r = Resolver::new(common.config.as_ref())?;
    init_threads(&r, common)?;
    let paths = dataset_paths(&mut r, inputs, true)?;
    let filters = resolve_filters(&mut r, filters)?;
    let out = require_out(&r, common)?;
    let (data, _) = load_dataset(&paths, &filters)?;
    let summaries = summaries_of(&data, filters.min_obs);
    let hash = r.config_hash();

    let points = scatter_data(&summaries);
    let mut file = out_file(&out, "scatter.csv", &hash)?;
    write_scatter_csv(&points, &mut file)?;
    Ok(())
}

const DEFAULT_BEANPLOT_FEATURES: &str = "pagerank,clustering_coefficient";

pub fn beanplot(
    common: &CommonArgs,
    inputs: &InputArgs,
    filters: &FilterArgs,
    deltas: &DeltaArgs,
    features: Option<&str>,
) -> Result<(), CliError> {
    let mut r = Resolver::new(common.config.as_ref())?;
    init_threads(&r, common)?;
    let paths = dataset_paths(&mut r, inputs, true)?;
    let filters = resolve_filters(&mut r, filters)?;
    let focal = resolve_focal_delta(&mut r, deltas)?;
    let wanted = r.value(
        "features",
        features.map(str::to_owned),
        DEFAULT_BEANPLOT_FEATURES.to_owned(),
    )?;
    let out = require_out(&r, common)?;
    let (data, _) = load_dataset(&paths, &filters)?;
    let summaries = summaries_of(&data, filters.min_obs);
    let (pr, deg, cc) = network_metrics(&data.graph, &mut r)?;
    let now = data.corpus.max_timestamp().unwrap_or(0);
    let table = build_feature_table(&data, &pr, &deg, &cc, now);
    let hash = r.config_hash();

    let available: BTreeMap<&str, &BTreeMap<UserId, f64>> = table.iter().collect();
    let roles = assign_roles(&summaries, focal)?;
    let mut partisans = Vec::new();
    let mut bipartisans = Vec::new();
    for (user, role) in &roles {
        match role.partisan {
            Some(l) if l.is_partisan() => partisans.push(user.clone()),
            Some(_) => bipartisans.push(user.clone()),
            None => {}
        }
    }

    for name in wanted.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let values = available.get(name).ok_or_else(|| {
            CliError::validation(format!(
                "unknown feature {name:?}; available: {}",
                available.keys().copied().collect::<Vec<_>>().join(", ")
            ))
        })?;
        let file_name = format!("beanplot_{name}_{}.txt", delta_label(focal));
        let mut file = out_file(&out, &file_name, &hash)?;
        for (label, group) in [("partisan", &partisans), ("bipartisan", &bipartisans)] {
            let sample: Vec<f64> = group.iter().filter_map(|u| values.get(u)).copied().collect();
            match beanplot_data(label, &sample) {
                Ok(data) => write!(file, "{}", data.to_text())?,
                Err(StatsError::SampleTooSmall { got, .. }) => {
                    writeln!(file, "group {label}\nn {got}\nskipped too_few_values\nend")?;
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(())
}

fn texts_by_user(corpus: &Corpus) -> BTreeMap<UserId, String> {
    corpus
        .users()
        .map(|u| {
            let joined: Vec<&str> = corpus.tweets_of(u).iter().map(|t| t.text.as_str()).collect();
            (u.clone(), joined.join("\n"))
        })
        .collect()
}

pub fn predict(
    common: &CommonArgs,
    inputs: &InputArgs,
    filters: &FilterArgs,
    deltas: &DeltaArgs,
    forest: &ForestArgs,
) -> Result<(), CliError> {
    let mut r = Resolver::new(common.config.as_ref())?;
    init_threads(&r, common)?;
    let paths = dataset_paths(&mut r, inputs, true)?;
    let filters = resolve_filters(&mut r, filters)?;
    let focal = resolve_focal_delta(&mut r, deltas)?;
    let seed = r.value("seed", common.seed, 0u64)?;
    let forest_config = ForestConfig {
        n_trees: r.value("trees", forest.trees, 200usize)?,
        max_depth: r.optional("max_depth", forest.max_depth)?,
        features_per_split: None,
        min_samples_split: 2,
        seed,
    };
    let vocab_cap = r.value("vocab_cap", forest.vocab_cap, 20_000usize)?;
    let folds = r.value("folds", forest.folds, 10usize)?;
    let out = require_out(&r, common)?;
    let (data, _) = load_dataset(&paths, &filters)?;
    let hash = r.config_hash();

    run_prediction(
        &data, &out, &hash, focal, filters.min_obs, seed, &forest_config, vocab_cap, folds, &mut r,
    )
}

#[allow(clippy::too_many_arguments)]
fn run_prediction(
    data: &Dataset,
    out: &Path,
    hash: &str,
    focal: f64,
    min_obs: usize,
    seed: u64,
    forest_config: &ForestConfig,
    vocab_cap: usize,
    folds: usize,
    resolver: &mut Resolver,
) -> Result<(), CliError> {
    let summaries = summaries_of(data, min_obs);
    let roles = assign_roles(&summaries, focal)?;
    let (pr, deg, cc) = network_metrics(&data.graph, resolver)?;
    let texts = texts_by_user(&data.corpus);
    let text = tfidf_features(
        &texts,
        &TfidfConfig {
            vocab_cap,
            ..Default::default()
        },
    )?;
    let matrix = build_features(&FeatureInputs {
        graph: &data.graph,
        pagerank: &pr.scores,
        degree: &deg.undirected,
        clustering: &cc,
        profiles: &data.profiles,
        text: &text,
        now: data.corpus.max_timestamp().unwrap_or(0),
    });

    let mut report = out_file(out, "predict_report.txt", hash)?;
    for target in [RoleTarget::Partisan, RoleTarget::Gatekeeper] {
        for set in [FeatureSet::All, FeatureSet::NetProfile, FeatureSet::NGram] {
            let subset = matrix.subset(set);
            let outcome = evaluate_task(&subset, &roles, target, seed, forest_config, folds);
            match outcome {
                Ok((dataset, cv)) => {
                    writeln!(
                        report,
                        "task={target} features={set} rows={} mean_accuracy={}",
                        dataset.rows.len(),
                        cv.mean_accuracy
                    )?;
                    let name = format!("cv_{target}_{set}.csv");
                    let mut file = out_file(out, &name, hash)?;
                    write_cv_report_csv(&cv, &mut file)?;
                    if set == FeatureSet::All {
                        let model = train(&dataset, forest_config)?;
                        let mut file = out_file(out, &format!("model_{target}.txt"), hash)?;
                        model.write_text(&mut file)?;
                    }
                }
                // Tasks that cannot be built on this dataset are recorded,
                // not fatal; other tasks still run.
                Err(
                    e @ (PredictError::NoPositives(_)
                    | PredictError::NotEnoughNegatives { .. }
                    | PredictError::KTooLarge { .. }),
                ) => {
                    writeln!(report, "task={target} features={set} skipped: {e}")?;
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(())
}

type TaskOutcome = Result<
    (
        echograph::predict::LabeledDataset,
        echograph::predict::CVReport,
    ),
    PredictError,
>;

fn evaluate_task(
    matrix: &FeatureMatrix,
    roles: &BTreeMap<UserId, RoleLabel>,
    target: RoleTarget,
    seed: u64,
    forest_config: &ForestConfig,
    folds: usize,
) -> TaskOutcome {
    let dataset = build_task(matrix, roles, target, seed)?;
    let cv = cross_validate(&dataset, folds, seed, forest_config)?;
    Ok((dataset, cv))
}

pub fn synth(common: &CommonArgs, args: &SynthArgs) -> Result<(), CliError> {
    let mut r = Resolver::new(common.config.as_ref())?;
    init_threads(&r, common)?;
    let defaults = SynthConfig::default();
    let config = SynthConfig {
        n_left: r.value("n_left", args.n_left, defaults.n_left)?,
        n_right: r.value("n_right", args.n_right, defaults.n_right)?,
        p_in: r.value("p_in", args.p_in, defaults.p_in)?,
        p_out: r.value("p_out", args.p_out, defaults.p_out)?,
        tweets_per_user: r.value("tweets_per_user", args.tweets_per_user, defaults.tweets_per_user)?,
        link_fraction: r.value("link_fraction", args.link_fraction, defaults.link_fraction)?,
        leaning_noise: r.value("leaning_noise", args.leaning_noise, defaults.leaning_noise)?,
        gatekeeper_fraction: r.value(
            "gatekeeper_fraction",
            args.gatekeeper_fraction,
            defaults.gatekeeper_fraction,
        )?,
        n_domains_per_side: r.value(
            "domains_per_side",
            args.domains_per_side,
            defaults.n_domains_per_side,
        )?,
        tokens_per_tweet: r.value("tokens_per_tweet", args.tokens_per_tweet, defaults.tokens_per_tweet)?,
        token_pool_size: r.value("token_pool_size", args.token_pool_size, defaults.token_pool_size)?,
        token_overlap: r.value("token_overlap", args.token_overlap, defaults.token_overlap)?,
        seed: r.value("seed", common.seed, defaults.seed)?,
    };
    let out = require_out(&r, common)?;
    let data = generate(&config)?;
    let hash = r.config_hash();
    data.write_dataset(&out, Some(&format!("config {hash}")))?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn pipeline(
    common: &CommonArgs,
    inputs: &InputArgs,
    filters: &FilterArgs,
    deltas: &DeltaArgs,
    forest: &ForestArgs,
    alpha: Option<f64>,
    k_significant: Option<usize>,
) -> Result<(), CliError> {
    let mut r = Resolver::new(common.config.as_ref())?;
    init_threads(&r, common)?;
    let paths = dataset_paths(&mut r, inputs, true)?;
    let filters = resolve_filters(&mut r, filters)?;
    let focal = resolve_focal_delta(&mut r, deltas)?;
    let (grid, _) = resolve_grid(&mut r, deltas)?;
    let seed = r.value("seed", common.seed, 0u64)?;
    let compare_config = CompareConfig {
        alpha: r.value("alpha", alpha, 0.001f64)?,
        min_significant: r.value("k_significant", k_significant, 4usize)?,
        seed,
    };
    let forest_config = ForestConfig {
        n_trees: r.value("trees", forest.trees, 200usize)?,
        max_depth: r.optional("max_depth", forest.max_depth)?,
        features_per_split: None,
        min_samples_split: 2,
        seed,
    };
    let vocab_cap = r.value("vocab_cap", forest.vocab_cap, 20_000usize)?;
    let folds = r.value("folds", forest.folds, 10usize)?;
    let beanplot_features = r.value(
        "features",
        None::<String>,
        DEFAULT_BEANPLOT_FEATURES.to_owned(),
    )?;
    let out = require_out(&r, common)?;

    let (data, summary) = load_dataset(&paths, &filters)?;
    let (pr, deg, cc) = network_metrics(&data.graph, &mut r)?;
    let hash = r.config_hash();

    // Stage 1: ingest artifacts.
    let mut edges = out_file(&out, "edges_canonical.tsv", &hash)?;
    data.graph.write_edge_list(&mut edges)?;
    let mut removals = out_file(&out, "bot_removals.csv", &hash)?;
    writeln!(removals, "user_id,reason")?;
    for (user, reason) in &summary.bot_removals {
        writeln!(removals, "{user},{reason}")?;
    }
    let mut report = out_file(&out, "ingest_report.txt", &hash)?;
    write_ingest_report(&mut report, &data, &summary)?;

    // Stage 2: network metrics.
    let mut csv = out_file(&out, "metrics.csv", &hash)?;
    echograph::metrics::write_metrics_csv(
        &data.graph,
        &[&pr.scores, &cc, &deg.in_degree, &deg.out_degree, &deg.undirected],
        &mut csv,
    )?;
    let mut metrics_report = out_file(&out, "metrics_report.txt", &hash)?;
    writeln!(metrics_report, "nodes {}", data.graph.node_count())?;
    writeln!(metrics_report, "edges {}", data.graph.edge_count())?;
    writeln!(metrics_report, "pagerank_iterations {}", pr.iterations)?;
    writeln!(metrics_report, "pagerank_converged {}", pr.converged)?;

    // Stage 3: polarity summaries over the grid plus the focal delta.
    let summaries = summaries_of(&data, filters.min_obs);
    let mut thresholds = grid.values().to_vec();
    thresholds.push(focal);
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    for delta in &thresholds {
        let roles = assign_roles(&summaries, *delta)?;
        let name = format!("summary_delta_{}.csv", delta_label(*delta));
        let mut file = out_file(&out, &name, &hash)?;
        echograph::polarity::write_summary_csv(&summaries, &roles, &mut file)?;
    }

    // Stage 4: group comparisons.
    let now = data.corpus.max_timestamp().unwrap_or(0);
    let features = build_feature_table(&data, &pr, &deg, &cc, now);
    for (split, label) in [
        (GroupSplit::PartisanVsBipartisan, "partisan"),
        (GroupSplit::GatekeeperVsRandom, "gatekeeper"),
    ] {
        let reports = compare_groups(&features, &summaries, &grid, split, &compare_config)?;
        let mut summary_file = out_file(&out, &format!("compare_{label}.csv"), &hash)?;
        write_comparison_summary_csv(&reports, &mut summary_file)?;
        let mut detail_file = out_file(&out, &format!("compare_{label}_detail.csv"), &hash)?;
        write_comparison_detail_csv(&reports, &mut detail_file)?;
    }

    // Stage 5: scatter export.
    let points = scatter_data(&summaries);
    let mut file = out_file(&out, "scatter.csv", &hash)?;
    write_scatter_csv(&points, &mut file)?;

    // Stage 6: beanplot data at the focal delta.
    let roles = assign_roles(&summaries, focal)?;
    let mut partisans = Vec::new();
    let mut bipartisans = Vec::new();
    for (user, role) in &roles {
        match role.partisan {
            Some(l) if l.is_partisan() => partisans.push(user.clone()),
            Some(_) => bipartisans.push(user.clone()),
            None => {}
        }
    }
    let available: BTreeMap<&str, &BTreeMap<UserId, f64>> = features.iter().collect();
    for name in beanplot_features.split(',').map(str::trim) {
        let values = match available.get(name) {
            Some(v) => v,
            None => continue,
        };
        let file_name = format!("beanplot_{name}_{}.txt", delta_label(focal));
        let mut file = out_file(&out, &file_name, &hash)?;
        for (label, group) in [("partisan", &partisans), ("bipartisan", &bipartisans)] {
            let sample: Vec<f64> = group.iter().filter_map(|u| values.get(u)).copied().collect();
            match beanplot_data(label, &sample) {
                Ok(data) => write!(file, "{}", data.to_text())?,
                Err(StatsError::SampleTooSmall { got, .. }) => {
                    writeln!(file, "group {label}\nn {got}\nskipped too_few_values\nend")?;
                }
                Err(e) => return Err(e.into()),
            }
        }
    }

    // Stage 7: prediction.
    run_prediction(
        &data,
        &out,
        &hash,
        focal,
        filters.min_obs,
        seed,
        &forest_config,
        vocab_cap,
        folds,
        &mut r,
    )
}
