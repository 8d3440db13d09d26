//! Group-comparison statistics and figure-data exports.
//!
//! Groups of users (partisan vs bipartisan, gatekeeper vs a seeded random
//! baseline) are compared feature by feature with Welch's t-test across a
//! grid of `delta` thresholds; a feature's verdict is "higher" ("lower")
//! when the difference is significant with that sign for at least
//! `min_significant` of the evaluable grid entries.

pub mod special;

use std::collections::BTreeMap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::polarity::{assign_roles, PolarityError, PolaritySummary};
use crate::UserId;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("sample needs at least {needed} values, got {got}")]
    SampleTooSmall { needed: usize, got: usize },
    #[error("samples have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("invalid delta grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Polarity(#[from] PolarityError),
}

fn sample_mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased (n - 1) sample variance.
fn sample_variance(values: &[f64]) -> f64 {
    let m = sample_mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WelchT {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

/// Welch's two-sample t-test with Welch-Satterthwaite degrees of freedom
/// and a two-sided p-value.
///
/// When both samples have zero variance the statistic degenerates: equal
/// means give `t = 0, p = 1`; distinct means give an infinite `t` with
/// `p = 0`. Both report the pooled `n_a + n_b - 2` degrees of freedom.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<WelchT, StatsError> {
    for sample in [a, b] {
        if sample.len() < 2 {
            return Err(StatsError::SampleTooSmall {
                needed: 2,
                got: sample.len(),
            });
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (sample_mean(a), sample_mean(b));
    let (va, vb) = (sample_variance(a), sample_variance(b));
    let sea = va / na;
    let seb = vb / nb;
    let se2 = sea + seb;

    if se2 == 0.0 {
        let df = na + nb - 2.0;
        return Ok(if ma == mb {
            WelchT {
                t: 0.0,
                df,
                p_value: 1.0,
            }
        } else {
            WelchT {
                t: if ma > mb {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                },
                df,
                p_value: 0.0,
            }
        });
    }

    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sea * sea / (na - 1.0) + seb * seb / (nb - 1.0));
    let p_value = special::student_t_two_sided_p(t, df);
    Ok(WelchT { t, df, p_value })
}

/// Pearson correlation coefficient; `Ok(None)` when either sample has zero
/// variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::SampleTooSmall {
            needed: 2,
            got: x.len(),
        });
    }
    let mx = sample_mean(x);
    let my = sample_mean(y);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)))
}

/// Strictly increasing thresholds in (0, 0.5].
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaGrid {
    values: Vec<f64>,
}

impl DeltaGrid {
    pub fn new(values: Vec<f64>) -> Result<DeltaGrid, StatsError> {
        if values.is_empty() {
            return Err(StatsError::InvalidGrid("no thresholds".into()));
        }
        for pair in values.windows(2) {
            if pair[1] <= pair[0] {
                return Err(StatsError::InvalidGrid(format!(
                    "thresholds must be strictly increasing, got {} after {}",
                    pair[1], pair[0]
                )));
            }
        }
        for &v in &values {
            if !(v > 0.0 && v <= 0.5) {
                return Err(StatsError::InvalidGrid(format!(
                    "threshold {v} outside (0, 0.5]"
                )));
            }
        }
        Ok(DeltaGrid { values })
    }

    /// Inclusive arithmetic range, e.g. `0.2:0.45:0.05` gives six values.
    pub fn from_range(lo: f64, hi: f64, step: f64) -> Result<DeltaGrid, StatsError> {
        if step <= 0.0 || hi < lo {
            return Err(StatsError::InvalidGrid(format!(
                "bad range {lo}:{hi}:{step}"
            )));
        }
        let count = ((hi - lo) / step + 1.0 + 1e-9).floor() as usize;
        let values = (0..count)
            // Round off accumulated float error so grid values print cleanly.
            .map(|i| ((lo + i as f64 * step) * 1e9).round() / 1e9)
            .collect();
        DeltaGrid::new(values)
    }

    /// The 0.20..0.45 grid in steps of 0.05.
    pub fn standard() -> DeltaGrid {
        DeltaGrid::from_range(0.2, 0.45, 0.05).expect("standard grid is valid")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Which two groups to compare.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupSplit {
    /// delta-partisans vs delta-bipartisans (users with defined `p`).
    PartisanVsBipartisan,
    /// delta-gatekeepers vs an equally sized seeded random sample of
    /// non-gatekeeper users with defined roles.
    GatekeeperVsRandom,
}

#[derive(Clone, Debug)]
pub struct CompareConfig {
    /// Significance level; the tables use p < 0.001.
    pub alpha: f64,
    /// Grid entries that must be significant with a consistent sign.
    pub min_significant: usize,
    /// Seed for the random gatekeeper baseline.
    pub seed: u64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            alpha: 0.001,
            min_significant: 4,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Higher,
    Lower,
    NotSignificant,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Higher => "higher",
            Verdict::Lower => "lower",
            Verdict::NotSignificant => "not_significant",
        })
    }
}

/// Test outcome at a single threshold. `evaluable` is false when either
/// group has fewer than two members with the feature defined; such entries
/// never count toward a verdict.
#[derive(Clone, Debug)]
pub struct DeltaComparison {
    pub delta: f64,
    pub evaluable: bool,
    pub n_a: usize,
    pub n_b: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

impl DeltaComparison {
    fn unevaluable(delta: f64, n_a: usize, n_b: usize) -> Self {
        DeltaComparison {
            delta,
            evaluable: false,
            n_a,
            n_b,
            mean_a: f64::NAN,
            mean_b: f64::NAN,
            t: f64::NAN,
            df: f64::NAN,
            p_value: f64::NAN,
        }
    }

    fn significant_higher(&self, alpha: f64) -> bool {
        self.evaluable && self.p_value < alpha && self.mean_a > self.mean_b
    }

    fn significant_lower(&self, alpha: f64) -> bool {
        self.evaluable && self.p_value < alpha && self.mean_a < self.mean_b
    }
}

#[derive(Clone, Debug)]
pub struct ComparisonReport {
    pub feature: String,
    pub entries: Vec<DeltaComparison>,
    pub verdict: Verdict,
}

/// Named per-user feature columns, compared in insertion order.
#[derive(Clone, Debug, Default)]
pub struct FeatureTable {
    features: Vec<(String, BTreeMap<UserId, f64>)>,
}

impl FeatureTable {
    pub fn new() -> Self {
        FeatureTable::default()
    }

    pub fn add(&mut self, name: &str, values: BTreeMap<UserId, f64>) {
        self.features.push((name.to_owned(), values));
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeMap<UserId, f64>)> {
        self.features.iter().map(|(n, v)| (n.as_str(), v))
    }
}

/// Compares the two groups on every feature across the grid.
///
/// Verdicts do not depend on user ordering; the gatekeeper baseline is
/// drawn once per threshold from the id-sorted candidate pool with a rng
/// seeded by `(seed, threshold index)`.
pub fn compare_groups(
    features: &FeatureTable,
    summaries: &BTreeMap<UserId, PolaritySummary>,
    grid: &DeltaGrid,
    split: GroupSplit,
    config: &CompareConfig,
) -> Result<Vec<ComparisonReport>, StatsError> {
    // Group memberships per threshold, shared by all features.
    let mut groups: Vec<(Vec<&UserId>, Vec<&UserId>)> = Vec::with_capacity(grid.values().len());
    for (di, &delta) in grid.values().iter().enumerate() {
        let roles = assign_roles(summaries, delta)?;
        let (a, b) = match split {
            GroupSplit::PartisanVsBipartisan => {
                let mut a = Vec::new();
                let mut b = Vec::new();
                for (user, role) in &roles {
                    match role.partisan {
                        Some(label) if label.is_partisan() => a.push(lookup(summaries, user)),
                        Some(_) => b.push(lookup(summaries, user)),
                        None => {}
                    }
                }
                (a, b)
            }
            GroupSplit::GatekeeperVsRandom => {
                let mut gatekeepers = Vec::new();
                let mut pool = Vec::new();
                for (user, role) in &roles {
                    match role.gatekeeper {
                        Some(true) => gatekeepers.push(lookup(summaries, user)),
                        Some(false) => pool.push(lookup(summaries, user)),
                        None => {}
                    }
                }
                let baseline = if gatekeepers.is_empty() || pool.len() < gatekeepers.len() {
                    Vec::new()
                } else {
                    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                    rng.set_stream(di as u64);
                    let picks =
                        rand::seq::index::sample(&mut rng, pool.len(), gatekeepers.len());
                    picks.iter().map(|i| pool[i]).collect()
                };
                (gatekeepers, baseline)
            }
        };
        groups.push((a, b));
    }

    let mut reports = Vec::new();
    for (name, values) in features.iter() {
        let mut entries = Vec::with_capacity(grid.values().len());
        for ((a_users, b_users), &delta) in groups.iter().zip(grid.values()) {
            let a: Vec<f64> = a_users.iter().filter_map(|u| values.get(*u)).copied().collect();
            let b: Vec<f64> = b_users.iter().filter_map(|u| values.get(*u)).copied().collect();
            if a.len() < 2 || b.len() < 2 {
                entries.push(DeltaComparison::unevaluable(delta, a.len(), b.len()));
                continue;
            }
            let test = welch_t(&a, &b)?;
            entries.push(DeltaComparison {
                delta,
                evaluable: true,
                n_a: a.len(),
                n_b: b.len(),
                mean_a: sample_mean(&a),
                mean_b: sample_mean(&b),
                t: test.t,
                df: test.df,
                p_value: test.p_value,
            });
        }
        let higher = entries
            .iter()
            .filter(|e| e.significant_higher(config.alpha))
            .count();
        let lower = entries
            .iter()
            .filter(|e| e.significant_lower(config.alpha))
            .count();
        let verdict = if higher >= config.min_significant {
            Verdict::Higher
        } else if lower >= config.min_significant {
            Verdict::Lower
        } else {
            Verdict::NotSignificant
        };
        reports.push(ComparisonReport {
            feature: name.to_owned(),
            entries,
            verdict,
        });
    }
    Ok(reports)
}

fn lookup<'a>(summaries: &'a BTreeMap<UserId, PolaritySummary>, user: &UserId) -> &'a UserId {
    &summaries
        .get(user)
        .expect("roles are keyed by summary users")
        .user_id
}

/// One row per feature, in table order.
pub fn write_comparison_summary_csv<W: Write>(
    reports: &[ComparisonReport],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "feature,verdict,significant_higher,significant_lower,evaluable")?;
    for r in reports {
        // Recount with the conventional 0.001 so the summary stands alone.
        let evaluable = r.entries.iter().filter(|e| e.evaluable).count();
        let higher = r
            .entries
            .iter()
            .filter(|e| e.significant_higher(0.001))
            .count();
        let lower = r
            .entries
            .iter()
            .filter(|e| e.significant_lower(0.001))
            .count();
        writeln!(
            w,
            "{},{},{},{},{}",
            r.feature, r.verdict, higher, lower, evaluable
        )?;
    }
    Ok(())
}

pub fn write_comparison_detail_csv<W: Write>(
    reports: &[ComparisonReport],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(
        w,
        "feature,delta,evaluable,n_a,n_b,mean_a,mean_b,t,df,p_value"
    )?;
    for r in reports {
        for e in &r.entries {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                r.feature,
                e.delta,
                e.evaluable,
                e.n_a,
                e.n_b,
                e.mean_a,
                e.mean_b,
                e.t,
                e.df,
                e.p_value
            )?;
        }
    }
    Ok(())
}

pub const KDE_GRID_POINTS: usize = 512;

#[derive(Clone, Debug, PartialEq)]
pub struct DensityCurve {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

/// Density data for one group of a beanplot.
///
/// For non-degenerate samples, `density` holds a Gaussian kernel density
/// on a 512-point grid spanning the data range plus three bandwidths on
/// each side (Silverman's bandwidth), renormalized so it integrates to one
/// over the emitted grid. All-equal samples yield a `point_mass` instead.
#[derive(Clone, Debug, PartialEq)]
pub struct BeanplotData {
    pub group: String,
    pub values: Vec<f64>,
    pub mean: f64,
    pub bandwidth: Option<f64>,
    pub point_mass: Option<f64>,
    pub density: Option<DensityCurve>,
}

pub fn beanplot_data(group: &str, values: &[f64]) -> Result<BeanplotData, StatsError> {
    if values.len() < 2 {
        return Err(StatsError::SampleTooSmall {
            needed: 2,
            got: values.len(),
        });
    }
    let mean = sample_mean(values);
    let sd = sample_variance(values).sqrt();
    if sd == 0.0 {
        return Ok(BeanplotData {
            group: group.to_owned(),
            values: values.to_vec(),
            mean,
            bandwidth: None,
            point_mass: Some(values[0]),
            density: None,
        });
    }

    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    // Silverman's rule; when the IQR collapses fall back to the standard
    // deviation alone.
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let h = 0.9 * spread * (values.len() as f64).powf(-0.2);

    let lo = sorted[0] - 3.0 * h;
    let hi = sorted[sorted.len() - 1] + 3.0 * h;
    let step = (hi - lo) / (KDE_GRID_POINTS - 1) as f64;
    let xs: Vec<f64> = (0..KDE_GRID_POINTS).map(|i| lo + i as f64 * step).collect();
    let norm = 1.0 / (values.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let mut ys: Vec<f64> = xs
        .iter()
        .map(|&x| {
            values
                .iter()
                .map(|&v| {
                    let z = (x - v) / h;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect();

    let integral = trapezoid(&xs, &ys);
    for y in &mut ys {
        *y /= integral;
    }

    Ok(BeanplotData {
        group: group.to_owned(),
        values: values.to_vec(),
        mean,
        bandwidth: Some(h),
        point_mass: None,
        density: Some(DensityCurve { xs, ys }),
    })
}

/// Linear-interpolation quantile over a sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

impl BeanplotData {
    /// Key-value text block for plotting pipelines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("group {}\n", self.group));
        out.push_str(&format!("n {}\n", self.values.len()));
        out.push_str(&format!("mean {}\n", self.mean));
        match self.bandwidth {
            Some(h) => out.push_str(&format!("bandwidth {h}\n")),
            None => out.push_str("bandwidth none\n"),
        }
        match self.point_mass {
            Some(v) => out.push_str(&format!("pointmass {v}\n")),
            None => out.push_str("pointmass none\n"),
        }
        out.push_str("values");
        for v in &self.values {
            out.push_str(&format!(" {v}"));
        }
        out.push('\n');
        if let Some(curve) = &self.density {
            out.push_str("density");
            for (x, y) in curve.xs.iter().zip(&curve.ys) {
                out.push_str(&format!(" {x}:{y}"));
            }
            out.push('\n');
        }
        out.push_str("end\n");
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolaritySign {
    Negative,
    Positive,
    Unknown,
}

impl std::fmt::Display for PolaritySign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PolaritySign::Negative => "negative",
            PolaritySign::Positive => "positive",
            PolaritySign::Unknown => "unknown",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScatterPoint {
    pub user_id: UserId,
    pub p: f64,
    pub c: f64,
    pub sign: PolaritySign,
}

/// One point per user with both polarities defined; the sign comes from
/// the external user-polarity score (negative maps left, positive right;
/// absent or exactly zero is unknown).
pub fn scatter_data(summaries: &BTreeMap<UserId, PolaritySummary>) -> Vec<ScatterPoint> {
    summaries
        .values()
        .filter_map(|s| {
            let (p, c) = (s.p?, s.c?);
            let sign = match s.user_polarity {
                Some(v) if v < 0.0 => PolaritySign::Negative,
                Some(v) if v > 0.0 => PolaritySign::Positive,
                _ => PolaritySign::Unknown,
            };
            Some(ScatterPoint {
                user_id: s.user_id.clone(),
                p,
                c,
                sign,
            })
        })
        .collect()
}

pub fn write_scatter_csv<W: Write>(points: &[ScatterPoint], mut w: W) -> std::io::Result<()> {
    writeln!(w, "user_id,p,c,polarity_sign")?;
    for pt in points {
        writeln!(w, "{},{},{},{}", pt.user_id, pt.p, pt.c, pt.sign)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welch_identical_samples() {
        let r = welch_t(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn welch_frozen_case() {
        // Hand evaluation: means 2 and 3, both variances 1, so
        // t = -1 / sqrt(2/3) and df = (2/3)^2 / (2 * (1/9) / 2) = 4.
        let r = welch_t(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
        assert!((r.t - (-1.224744871391589)).abs() < 1e-12);
        assert!((r.df - 4.0).abs() < 1e-12);
        assert!((r.p_value - 0.2878641347266908).abs() < 1e-12);
    }

    #[test]
    fn welch_degenerate_separation() {
        let r = welch_t(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!(r.t.is_infinite() && r.t < 0.0);
        assert_eq!(r.p_value, 0.0);

        let r = welch_t(&[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p_value, 1.0);

        assert!(welch_t(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn welch_antisymmetric() {
        let a = [0.3, 1.4, 2.2, 0.9];
        let b = [1.0, 2.5, 3.1];
        let ab = welch_t(&a, &b).unwrap();
        let ba = welch_t(&b, &a).unwrap();
        assert_eq!(ab.t, -ba.t);
        assert_eq!(ab.df, ba.df);
        assert_eq!(ab.p_value, ba.p_value);
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0];
        assert_eq!(pearson(&x, &x).unwrap(), Some(1.0));
        let neg: Vec<f64> = x.iter().map(|v| -v + 1.0).collect();
        assert_eq!(pearson(&x, &neg).unwrap(), Some(-1.0));
        // Hand evaluation of the correlation formula.
        let r = pearson(&x, &[1.0, 3.0, 2.0]).unwrap().unwrap();
        assert!((r - 0.5).abs() < 1e-15);

        assert_eq!(pearson(&x, &[2.0, 2.0, 2.0]).unwrap(), None);
        assert!(pearson(&x, &[1.0]).is_err());
    }

    #[test]
    fn delta_grid_ranges() {
        let grid = DeltaGrid::from_range(0.2, 0.45, 0.05).unwrap();
        assert_eq!(grid.values().len(), 6);
        assert_eq!(grid.values()[0], 0.2);
        assert_eq!(grid.values()[5], 0.45);

        assert!(DeltaGrid::new(vec![0.3, 0.2]).is_err());
        assert!(DeltaGrid::new(vec![0.0]).is_err());
        assert!(DeltaGrid::new(vec![0.6]).is_err());
    }

    fn summary(user: &str, p: Option<f64>, c: Option<f64>) -> (UserId, PolaritySummary) {
        let id = UserId::from(user);
        (
            id.clone(),
            PolaritySummary {
                user_id: id,
                p,
                c,
                var_p: None,
                var_c: None,
                n_produced: p.map(|_| 1).unwrap_or(0),
                n_consumed: c.map(|_| 1).unwrap_or(0),
                user_polarity: None,
            },
        )
    }

    #[test]
    fn compare_groups_detects_forced_difference() {
        // 30 partisans with feature ~10, 30 bipartisans with feature ~0,
        // at every threshold of the grid.
        let mut summaries = BTreeMap::new();
        let mut values = BTreeMap::new();
        for i in 0..30 {
            let (id, s) = summary(&format!("p{i:02}"), Some(0.05), Some(0.5));
            values.insert(id.clone(), 10.0 + (i % 3) as f64 * 0.01);
            summaries.insert(id, s);
            let (id, s) = summary(&format!("b{i:02}"), Some(0.5), Some(0.5));
            values.insert(id.clone(), (i % 3) as f64 * 0.01);
            summaries.insert(id, s);
        }
        let mut features = FeatureTable::new();
        features.add("signal", values.clone());
        // A constant feature must come out not significant.
        features.add(
            "flat",
            values.keys().map(|k| (k.clone(), 1.0)).collect(),
        );

        let reports = compare_groups(
            &features,
            &summaries,
            &DeltaGrid::standard(),
            GroupSplit::PartisanVsBipartisan,
            &CompareConfig::default(),
        )
        .unwrap();
        assert_eq!(reports[0].verdict, Verdict::Higher);
        assert_eq!(reports[1].verdict, Verdict::NotSignificant);
    }

    #[test]
    fn compare_groups_below_k_is_not_significant() {
        // Signal present only at the three smallest thresholds: partisans
        // at p = 0.22 stop being partisan once delta < 0.22... instead
        // construct explicitly: group separation exists only for delta
        // >= 0.35 because "partisans" sit at p = 0.35.
        let mut summaries = BTreeMap::new();
        let mut values = BTreeMap::new();
        for i in 0..30 {
            let (id, s) = summary(&format!("p{i:02}"), Some(0.35), Some(0.5));
            values.insert(id.clone(), 10.0 + (i % 3) as f64 * 0.01);
            summaries.insert(id, s);
            let (id, s) = summary(&format!("b{i:02}"), Some(0.5), Some(0.5));
            values.insert(id.clone(), (i % 3) as f64 * 0.01);
            summaries.insert(id, s);
        }
        let mut features = FeatureTable::new();
        features.add("signal", values);
        let reports = compare_groups(
            &features,
            &summaries,
            &DeltaGrid::standard(),
            GroupSplit::PartisanVsBipartisan,
            &CompareConfig::default(),
        )
        .unwrap();
        // Only deltas 0.35, 0.40, 0.45 split the groups: 3 of 6 < k = 4.
        let evaluable = reports[0].entries.iter().filter(|e| e.evaluable).count();
        assert_eq!(evaluable, 3);
        assert_eq!(reports[0].verdict, Verdict::NotSignificant);
    }

    #[test]
    fn beanplot_density_integrates_to_one() {
        let values: Vec<f64> = (0..200).map(|i| (i as f64 * 0.37).sin()).collect();
        let data = beanplot_data("g", &values).unwrap();
        let curve = data.density.unwrap();
        let integral = trapezoid(&curve.xs, &curve.ys);
        assert!((integral - 1.0).abs() < 1e-6);
        assert_eq!(curve.xs.len(), KDE_GRID_POINTS);
    }

    #[test]
    fn beanplot_point_mass_for_constant_sample() {
        let data = beanplot_data("g", &[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(data.point_mass, Some(2.0));
        assert!(data.density.is_none());
        assert!(data.to_text().contains("pointmass 2"));
    }

    #[test]
    fn beanplot_peak_near_mean() {
        let values: Vec<f64> = (0..500)
            .map(|i| {
                // Roughly normal around 3 via a sum of uniforms.
                let u = ((i * 2654435761_usize) % 1000) as f64 / 1000.0;
                let v = ((i * 40503_usize + 7) % 1000) as f64 / 1000.0;
                3.0 + (u + v - 1.0)
            })
            .collect();
        let data = beanplot_data("g", &values).unwrap();
        let curve = data.density.unwrap();
        let peak_x = curve.xs[curve
            .ys
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0];
        assert!((peak_x - 3.0).abs() < 0.3, "peak at {peak_x}");
    }

    #[test]
    fn beanplot_uniform_sample_density_near_one() {
        // 1000 draws from U[0,1]: the estimated density should sit within
        // 0.15 of the true density 1 over the interior [0.2, 0.8].
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let values: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
        let data = beanplot_data("uniform", &values).unwrap();
        let curve = data.density.unwrap();
        for (x, y) in curve.xs.iter().zip(&curve.ys) {
            if (0.2..=0.8).contains(x) {
                assert!((y - 1.0).abs() < 0.15, "density {y} at {x}");
            }
        }
    }

    #[test]
    fn beanplot_disjoint_supports_do_not_overlap() {
        let low: Vec<f64> = (0..50).map(|i| i as f64 * 0.01).collect();
        let high: Vec<f64> = (0..50).map(|i| 100.0 + i as f64 * 0.01).collect();
        let a = beanplot_data("low", &low).unwrap();
        let b = beanplot_data("high", &high).unwrap();
        let a_max = *a.density.unwrap().xs.last().unwrap();
        let b_min = b.density.unwrap().xs[0];
        assert!(a_max < b_min);
    }

    #[test]
    fn compare_verdicts_do_not_depend_on_insertion_order() {
        let mut forward = BTreeMap::new();
        let mut backward = BTreeMap::new();
        let mut values = BTreeMap::new();
        let users: Vec<(UserId, PolaritySummary)> = (0..40)
            .map(|i| {
                if i % 2 == 0 {
                    summary(&format!("p{i:02}"), Some(0.05), Some(0.5))
                } else {
                    summary(&format!("b{i:02}"), Some(0.5), Some(0.5))
                }
            })
            .collect();
        for (id, s) in &users {
            values.insert(id.clone(), if s.p == Some(0.05) { 5.0 } else { 0.0 });
            forward.insert(id.clone(), s.clone());
        }
        for (id, s) in users.iter().rev() {
            backward.insert(id.clone(), s.clone());
        }
        let mut features = FeatureTable::new();
        features.add("signal", values);
        let config = CompareConfig::default();
        let grid = DeltaGrid::standard();
        let a = compare_groups(&features, &forward, &grid, GroupSplit::PartisanVsBipartisan, &config)
            .unwrap();
        let b = compare_groups(&features, &backward, &grid, GroupSplit::PartisanVsBipartisan, &config)
            .unwrap();
        assert_eq!(a[0].verdict, b[0].verdict);
        for (ea, eb) in a[0].entries.iter().zip(&b[0].entries) {
            assert_eq!(ea.t.to_bits(), eb.t.to_bits());
        }
    }

    #[test]
    fn scatter_rows() {
        let mut summaries = BTreeMap::new();
        let (id, mut s) = summary("a", Some(0.2), Some(0.3));
        s.user_polarity = Some(-0.7);
        summaries.insert(id, s);
        let (id, s) = summary("b", Some(0.2), None);
        summaries.insert(id, s);

        let points = scatter_data(&summaries);
        assert_eq!(points.len(), 1);
        assert_eq!(points[0].sign, PolaritySign::Negative);
    }
}
