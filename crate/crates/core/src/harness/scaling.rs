use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sweep::{read_metrics, MetricRow};
use crate::error::Result;
use crate::rng::substream;

/// Medians at or below this are treated as solved and left out of the fit.
pub const SUBOPT_FLOOR: f64 = 1e-4;
pub const MIN_POINTS: usize = 4;
pub const BOOTSTRAP_SAMPLES: usize = 1000;
pub const SUITE_MEAN_ID: &str = "suite-mean";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub explorer: String,
    pub reward_id: String,
    /// `(K, median subopt over seeds)` for every K in the rows.
    pub medians: Vec<(usize, f64)>,
    /// Slope of `ln median` against `ln K`; `None` when not estimable.
    pub slope: Option<f64>,
    /// 2.5% and 97.5% percentiles of the seed-bootstrap slopes.
    pub ci: Option<(f64, f64)>,
}

impl ScalingFit {
    pub fn is_estimable(&self) -> bool {
        self.slope.is_some()
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Ordinary least squares slope of `y` on `x`.
pub fn ols_slope(points: &[(f64, f64)]) -> Option<f64> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (points.len() >= 2 && sxx > 0.0).then(|| sxy / sxx)
}

/// `subopt[seed][K]` for one `(explorer, reward_id)`.
type Table = BTreeMap<u64, BTreeMap<usize, f64>>;

fn medians(table: &Table, seeds: &[u64]) -> Vec<(usize, f64)> {
    let mut by_k: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for seed in seeds {
        for (&k, &v) in &table[seed] {
            by_k.entry(k).or_default().push(v);
        }
    }
    by_k.into_iter()
        .map(|(k, mut v)| (k, median(&mut v)))
        .collect()
}

fn slope_of(medians: &[(usize, f64)]) -> Option<f64> {
    let points: Vec<(f64, f64)> = medians
        .iter()
        .filter(|(_, m)| *m > SUBOPT_FLOOR)
        .map(|&(k, m)| ((k as f64).ln(), m.ln()))
        .collect();
    if points.len() < MIN_POINTS {
        return None;
    }
    ols_slope(&points)
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Log-log slope of median suboptimality against K per `(explorer,
/// reward_id)`, with a percentile bootstrap over seeds.
pub fn fit_scaling(rows: &[MetricRow]) -> Vec<ScalingFit> {
    let mut groups: BTreeMap<(String, String), Table> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.explorer.clone(), r.reward_id.clone()))
            .or_default()
            .entry(r.seed)
            .or_default()
            .insert(r.k, r.subopt);
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(g, ((explorer, reward_id), table))| {
            let seeds: Vec<u64> = table.keys().copied().collect();
            let medians = medians(&table, &seeds);
            let slope = slope_of(&medians);
            let ci = slope.and_then(|_| {
                let mut rng = substream(0, g as u64, "bootstrap");
                let mut slopes: Vec<f64> = (0..BOOTSTRAP_SAMPLES)
                    .filter_map(|_| {
                        let draw: Vec<u64> = (0..seeds.len())
                            .map(|_| seeds[rng.random_range(0..seeds.len())])
                            .collect();
                        slope_of(&self::medians(&table, &draw))
                    })
                    .collect();
                if slopes.is_empty() {
                    return None;
                }
                slopes.sort_by(f64::total_cmp);
                Some((percentile(&slopes, 0.025), percentile(&slopes, 0.975)))
            });
            ScalingFit {
                explorer,
                reward_id,
                medians,
                slope,
                ci,
            }
        })
        .collect()
}

pub fn fit_scaling_csv(path: &Path) -> Result<Vec<ScalingFit>> {
    Ok(fit_scaling(&read_metrics(path)?))
}

/// Collapse each `(seed, explorer, K)` to one row with the mean suboptimality
/// over the reward suite, under the id [`SUITE_MEAN_ID`].
pub fn suite_mean(rows: &[MetricRow]) -> Vec<MetricRow> {
    let mut groups: BTreeMap<(u64, String, usize), (MetricRow, usize)> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.seed, r.explorer.clone(), r.k))
            .and_modify(|(acc, n)| {
                acc.subopt += r.subopt;
                acc.wallclock += r.wallclock;
                *n += 1;
            })
            .or_insert_with(|| {
                (
                    MetricRow {
                        reward_id: SUITE_MEAN_ID.to_string(),
                        ..r.clone()
                    },
                    1,
                )
            });
    }
    groups
        .into_values()
        .map(|(mut r, n)| {
            r.subopt /= n as f64;
            r
        })
        .collect()
}
