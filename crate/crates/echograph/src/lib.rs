//! Echo-chamber analytics for directed follow graphs.
//!
//! The crate measures how one-sided the news content produced and consumed
//! by social-media users is, and what that implies about their position in
//! the follow network:
//!
//! - [`ingest`] loads edge lists, tweet records, user profiles, and a
//!   domain-leaning table, and resolves tweet links to leaning observations.
//! - [`graph`] holds the immutable [`graph::FollowGraph`].
//! - [`metrics`] computes PageRank, clustering coefficients, and degrees.
//! - [`polarity`] computes production/consumption polarity and classifies
//!   users as partisan, consumer, or gatekeeper at a threshold `delta`.
//! - [`stats`] compares user groups (Welch's t-test over a `delta` grid),
//!   and exports correlation, density, and scatter data.
//! - [`synth`] generates seeded synthetic polarized datasets with planted
//!   gatekeepers, in the same file formats `ingest` reads.
//! - [`predict`] trains a random-forest classifier on network, profile, and
//!   tf-idf n-gram features to recover user roles.
//!
//! All randomized components take explicit 64-bit seeds and are
//! deterministic across runs and thread counts.

pub mod graph;
pub mod ingest;
pub mod metrics;
pub mod polarity;
pub mod predict;
pub mod stats;
pub mod synth;

mod user;

pub use user::UserId;
