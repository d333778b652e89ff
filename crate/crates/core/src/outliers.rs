//! Local outlier factor and the subspace-ensemble stream scorer.
//!
//! Scoring works windowed: every `eval_every` steps the current window is
//! projected onto each monitored subspace, LOF runs per projection, and every
//! in-window observation accumulates the scores. An observation's final
//! score is the mean over all (window, subspace) evaluations it appeared in.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::Snapshot;
use crate::error::{Error, Result};
use crate::metrics;
use crate::stream::{Observation, Subspace};

/// Neighborhood size for LOF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LofParams {
    pub k: usize,
}

/// The neighborhood grid swept when picking k by AUC.
pub const DEFAULT_K_GRID: [usize; 7] = [1, 2, 5, 10, 20, 50, 100];

/// Accumulated ensemble score of one observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub time_index: u64,
    /// Mean LOF over all (window, subspace) evaluations of this observation.
    pub score: f64,
    /// Number of (window, subspace) evaluations averaged.
    pub contributions: u32,
    pub label: Option<bool>,
}

/// Sorted neighbor lists shared by all neighborhood sizes up to the largest
/// requested one.
struct NeighborTable {
    /// Per point: (distance, index) ascending, covering the largest k plus
    /// any ties at its boundary.
    prefixes: Vec<Vec<(f64, u32)>>,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl NeighborTable {
    fn build(points: &[Vec<f64>], kmax: usize) -> Self {
        let n = points.len();
        let prefixes = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut dists: Vec<(f64, u32)> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (squared_distance(&points[i], &points[j]), j as u32))
                    .collect();
                // Move the kmax smallest up front, then pull in boundary ties.
                let boundary = {
                    let (_, kth, _) =
                        dists.select_nth_unstable_by(kmax - 1, |a, b| a.0.total_cmp(&b.0));
                    kth.0
                };
                let mut cut = kmax;
                for j in kmax..dists.len() {
                    if dists[j].0 == boundary {
                        dists.swap(cut, j);
                        cut += 1;
                    }
                }
                dists.truncate(cut);
                dists.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                for entry in &mut dists {
                    entry.0 = entry.0.sqrt();
                }
                dists
            })
            .collect();
        NeighborTable { prefixes }
    }

    /// Distance to the k-th nearest neighbor.
    fn k_distance(&self, point: usize, k: usize) -> f64 {
        self.prefixes[point][k - 1].0
    }

    /// Neighbors within the k-distance; ties at the boundary are included,
    /// so the set may exceed k.
    fn neighbors(&self, point: usize, k: usize) -> &[(f64, u32)] {
        let prefix = &self.prefixes[point];
        let kdist = prefix[k - 1].0;
        let end = prefix.partition_point(|&(d, _)| d <= kdist);
        &prefix[..end]
    }
}

/// `lrd(q) / lrd(p)` with the degenerate-density rule: two infinite
/// densities cancel, so piles of duplicates score as inliers.
fn density_ratio(lrd_q: f64, lrd_p: f64) -> f64 {
    if lrd_q.is_infinite() && lrd_p.is_infinite() {
        1.0
    } else {
        lrd_q / lrd_p
    }
}

fn lof_from_table(table: &NeighborTable, k: usize) -> Vec<f64> {
    let n = table.prefixes.len();
    let lrd: Vec<f64> = (0..n)
        .map(|p| {
            let neighbors = table.neighbors(p, k);
            let total: f64 = neighbors
                .iter()
                .map(|&(dist, q)| dist.max(table.k_distance(q as usize, k)))
                .sum();
            if total == 0.0 {
                f64::INFINITY
            } else {
                neighbors.len() as f64 / total
            }
        })
        .collect();
    (0..n)
        .map(|p| {
            let neighbors = table.neighbors(p, k);
            let sum: f64 = neighbors
                .iter()
                .map(|&(_, q)| density_ratio(lrd[q as usize], lrd[p]))
                .sum();
            sum / neighbors.len() as f64
        })
        .collect()
}

fn validate_points(points: &[Vec<f64>], ks: &[usize]) -> Result<usize> {
    let n = points.len();
    if ks.is_empty() {
        return Err(Error::InvalidConfig("no neighborhood sizes given".into()));
    }
    let kmax = *ks.iter().max().unwrap();
    for &k in ks {
        if k == 0 || k >= n {
            return Err(Error::BadNeighborhood { k, n });
        }
    }
    if points.iter().any(|p| p.is_empty()) {
        return Err(Error::InvalidConfig("points have no dimensions".into()));
    }
    let m = points[0].len();
    if points.iter().any(|p| p.len() != m) {
        return Err(Error::Misaligned("point dimensionality varies".into()));
    }
    Ok(kmax)
}

/// Standard LOF scores for a point set under the Euclidean metric.
pub fn lof(points: &[Vec<f64>], k: usize) -> Result<Vec<f64>> {
    Ok(lof_sweep(points, &[k])?.pop().unwrap())
}

/// LOF scores for several neighborhood sizes, sharing one neighbor search.
pub fn lof_sweep(points: &[Vec<f64>], ks: &[usize]) -> Result<Vec<Vec<f64>>> {
    let kmax = validate_points(points, ks)?;
    let table = NeighborTable::build(points, kmax);
    Ok(ks.iter().map(|&k| lof_from_table(&table, k)).collect())
}

/// How the stream scorer walks the stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreConfig {
    pub window_size: usize,
    /// Steps between score evaluations.
    pub eval_every: usize,
}

impl ScoreConfig {
    fn validate(&self) -> Result<()> {
        if self.window_size < 2 {
            return Err(Error::InvalidConfig("window size must be at least 2".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::InvalidConfig("evaluation stride must be positive".into()));
        }
        Ok(())
    }
}

/// Subspaces of one snapshot, deduplicated with multiplicities, in first
/// encounter order so accumulation stays deterministic.
fn group_subspaces(subspaces: &[Subspace]) -> Vec<(&Subspace, u32)> {
    let mut order: Vec<(&Subspace, u32)> = Vec::new();
    let mut index: HashMap<&Subspace, usize> = HashMap::new();
    for subspace in subspaces {
        match index.get(subspace) {
            Some(&at) => order[at].1 += 1,
            None => {
                index.insert(subspace, order.len());
                order.push((subspace, 1));
            }
        }
    }
    order
}

fn check_alignment(observations: &[Observation], snapshots: &[Snapshot], w: usize) -> Result<()> {
    if observations.len() < w {
        return Err(Error::WindowTooSmall {
            required: w,
            got: observations.len(),
        });
    }
    for (i, obs) in observations.iter().enumerate() {
        if obs.time_index != i as u64 + 1 {
            return Err(Error::Misaligned(format!(
                "observation {} carries time index {}",
                i + 1,
                obs.time_index
            )));
        }
    }
    if snapshots.is_empty() {
        return Err(Error::Misaligned("no snapshots".into()));
    }
    let first = snapshots[0].t;
    if first > w as u64 {
        return Err(Error::Misaligned(format!(
            "first snapshot at t = {first}, window fills at t = {w}"
        )));
    }
    for (i, s) in snapshots.iter().enumerate() {
        if s.t != first + i as u64 {
            return Err(Error::Misaligned(format!(
                "snapshot times skip from {} to {}",
                first + i as u64 - 1,
                s.t
            )));
        }
    }
    Ok(())
}

fn scores_by_k(
    observations: &[Observation],
    snapshots: &[Snapshot],
    ks: &[usize],
    cfg: &ScoreConfig,
) -> Result<Vec<Vec<ScoreRecord>>> {
    cfg.validate()?;
    let w = cfg.window_size;
    check_alignment(observations, snapshots, w)?;
    let n = observations.len();
    let last_snapshot = snapshots.last().unwrap().t;

    let mut sums = vec![vec![0.0f64; n]; ks.len()];
    let mut counts = vec![0u32; n];

    let mut t = w as u64;
    while t <= n as u64 {
        if t > last_snapshot {
            break;
        }
        let snapshot = &snapshots[(t - snapshots[0].t) as usize];
        debug_assert_eq!(snapshot.t, t);
        let rows = &observations[t as usize - w..t as usize];
        let groups = group_subspaces(&snapshot.subspaces);

        // One LOF sweep per distinct subspace, all ks at once.
        let per_group: Vec<Vec<Vec<f64>>> = groups
            .par_iter()
            .map(|(subspace, _)| {
                let projected: Vec<Vec<f64>> = rows
                    .iter()
                    .map(|obs| subspace.dims().iter().map(|&dim| obs.values[dim]).collect())
                    .collect();
                lof_sweep(&projected, ks)
            })
            .collect::<Result<_>>()?;

        for ((_, weight), scores) in groups.iter().zip(&per_group) {
            let weight_f = *weight as f64;
            for (k_idx, per_point) in scores.iter().enumerate() {
                let sums_k = &mut sums[k_idx];
                for (r, &score) in per_point.iter().enumerate() {
                    sums_k[t as usize - w + r] += weight_f * score;
                }
            }
            for r in 0..w {
                counts[t as usize - w + r] += weight;
            }
        }
        t += cfg.eval_every as u64;
    }

    Ok(sums
        .into_iter()
        .map(|sums_k| {
            observations
                .iter()
                .zip(&counts)
                .zip(&sums_k)
                .filter(|((_, &count), _)| count > 0)
                .map(|((obs, &count), &sum)| ScoreRecord {
                    time_index: obs.time_index,
                    score: sum / count as f64,
                    contributions: count,
                    label: obs.label,
                })
                .collect()
        })
        .collect())
}

/// Scores the stream against the monitored subspaces with a fixed k.
pub fn score_stream(
    observations: &[Observation],
    snapshots: &[Snapshot],
    params: LofParams,
    cfg: &ScoreConfig,
) -> Result<Vec<ScoreRecord>> {
    Ok(scores_by_k(observations, snapshots, &[params.k], cfg)?.pop().unwrap())
}

/// Outcome of a neighborhood sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub best_k: usize,
    pub best_auc: f64,
    /// AUC per swept k.
    pub auc_by_k: Vec<(usize, f64)>,
    /// Score records for the best k.
    pub records: Vec<ScoreRecord>,
}

/// Runs the scorer for every k in the grid and keeps the one with the best
/// AUC; ties go to the smaller k. Labels must be present on the stream.
pub fn best_k_sweep(
    observations: &[Observation],
    snapshots: &[Snapshot],
    ks: &[usize],
    cfg: &ScoreConfig,
) -> Result<SweepResult> {
    let mut by_k = scores_by_k(observations, snapshots, ks, cfg)?;
    let mut auc_by_k = Vec::with_capacity(ks.len());
    for (&k, records) in ks.iter().zip(&by_k) {
        let scores: Vec<f64> = records.iter().map(|r| r.score).collect();
        let labels: Vec<bool> = records
            .iter()
            .map(|r| r.label.ok_or(Error::MissingLabels))
            .collect::<Result<_>>()?;
        auc_by_k.push((k, metrics::auc(&scores, &labels)?));
    }
    let (best_idx, &(best_k, best_auc)) = auc_by_k
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.1.partial_cmp(&b.1).unwrap().then(b.0.cmp(&a.0)))
        .unwrap();
    Ok(SweepResult {
        best_k,
        best_auc,
        auc_by_k,
        records: std::mem::take(&mut by_k[best_idx]),
    })
}
