//! Evaluation measures: ranking metrics for labeled outlier scores and
//! monitoring metrics over engine snapshot logs.

use serde::{Deserialize, Serialize};

use crate::engine::Snapshot;
use crate::error::{Error, Result};

/// Ranking quality of outlier scores against ground-truth labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingMetrics {
    pub auc: f64,
    pub average_precision: f64,
    pub precision_at_1: f64,
    pub precision_at_2: f64,
    pub precision_at_5: f64,
    pub recall_at_1: f64,
    pub recall_at_2: f64,
    pub recall_at_5: f64,
}

fn check_classes(labels: &[bool]) -> Result<(usize, usize)> {
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::DegenerateLabels(format!(
            "{positives} positives, {negatives} negatives"
        )));
    }
    Ok((positives, negatives))
}

fn check_lengths(scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::Misaligned(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(())
}

/// Rank-based AUC (Mann-Whitney); tied scores contribute one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let (positives, negatives) = check_classes(labels)?;
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Average ranks within tie blocks, 1-based.
    let mut rank_sum = 0.0f64;
    let mut lo = 0;
    while lo < n {
        let mut hi = lo + 1;
        while hi < n && scores[order[hi]] == scores[order[lo]] {
            hi += 1;
        }
        let avg_rank = (lo + 1 + hi) as f64 / 2.0;
        for &idx in &order[lo..hi] {
            if labels[idx] {
                rank_sum += avg_rank;
            }
        }
        lo = hi;
    }
    let p = positives as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * negatives as f64))
}

/// Indices sorted by decreasing score, ties kept in input order.
fn rank_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Mean over the positives, visited in rank order, of the precision at each
/// positive's rank.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let (positives, _) = check_classes(labels)?;
    let mut sum = 0.0f64;
    let mut true_positives = 0usize;
    for (rank0, &idx) in rank_order(scores).iter().enumerate() {
        if labels[idx] {
            true_positives += 1;
            sum += true_positives as f64 / (rank0 + 1) as f64;
        }
    }
    Ok(sum / positives as f64)
}

/// Precision and recall over the top `percent`% of scores (ceiling cutoff).
pub fn precision_recall_at(scores: &[f64], labels: &[bool], percent: usize) -> Result<(f64, f64)> {
    check_lengths(scores, labels)?;
    if percent == 0 || percent > 100 {
        return Err(Error::InvalidConfig(format!(
            "percent must lie in 1..=100, got {percent}"
        )));
    }
    let (positives, _) = check_classes(labels)?;
    let cutoff = (scores.len() * percent).div_ceil(100);
    let true_positives = rank_order(scores)[..cutoff]
        .iter()
        .filter(|&&idx| labels[idx])
        .count();
    Ok((
        true_positives as f64 / cutoff as f64,
        true_positives as f64 / positives as f64,
    ))
}

/// All ranking metrics in one pass.
pub fn ranking_metrics(scores: &[f64], labels: &[bool]) -> Result<RankingMetrics> {
    let (p1, r1) = precision_recall_at(scores, labels, 1)?;
    let (p2, r2) = precision_recall_at(scores, labels, 2)?;
    let (p5, r5) = precision_recall_at(scores, labels, 5)?;
    Ok(RankingMetrics {
        auc: auc(scores, labels)?,
        average_precision: average_precision(scores, labels)?,
        precision_at_1: p1,
        precision_at_2: p2,
        precision_at_5: p5,
        recall_at_1: r1,
        recall_at_2: r2,
        recall_at_5: r5,
    })
}

/// Per-step monitoring data extracted from engine snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorLog {
    /// Smoothed quality per step and dimension.
    pub qualities: Vec<Vec<f64>>,
    /// Selected dimensions per step.
    pub selections: Vec<Vec<usize>>,
    /// Per-step success flags, aligned with the selections.
    pub successes: Vec<Vec<bool>>,
    /// Reference qualities from an always-update run, when available.
    pub gold: Option<Vec<Vec<f64>>>,
}

impl MonitorLog {
    pub fn from_snapshots(snapshots: &[Snapshot]) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::EmptySample);
        }
        let d = snapshots[0].qualities.len();
        if snapshots.iter().any(|s| s.qualities.len() != d) {
            return Err(Error::Misaligned("snapshot dimensionality varies".into()));
        }
        Ok(MonitorLog {
            qualities: snapshots.iter().map(|s| s.qualities.clone()).collect(),
            selections: snapshots.iter().map(|s| s.selected.clone()).collect(),
            successes: snapshots.iter().map(|s| s.successes.clone()).collect(),
            gold: None,
        })
    }

    /// Attaches the quality trace of a reference run over the same steps.
    pub fn with_gold(mut self, gold: &[Snapshot]) -> Result<Self> {
        if gold.len() != self.steps() {
            return Err(Error::Misaligned(format!(
                "gold log has {} steps, monitor log {}",
                gold.len(),
                self.steps()
            )));
        }
        if gold.iter().any(|s| s.qualities.len() != self.dims()) {
            return Err(Error::Misaligned("gold log dimensionality differs".into()));
        }
        self.gold = Some(gold.iter().map(|s| s.qualities.clone()).collect());
        Ok(self)
    }

    pub fn steps(&self) -> usize {
        self.qualities.len()
    }

    pub fn dims(&self) -> usize {
        self.qualities[0].len()
    }
}

/// Cumulative quality gap against the reference run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    /// `(1/d) Σ_t Σ_i (gold - quality)`.
    pub total: f64,
    /// Total divided by the number of steps.
    pub per_step: f64,
}

pub fn regret(log: &MonitorLog) -> Result<RegretReport> {
    let gold = log.gold.as_ref().ok_or(Error::MissingLabels)?;
    let d = log.dims() as f64;
    let mut total = 0.0f64;
    for (row, gold_row) in log.qualities.iter().zip(gold) {
        for (q, g) in row.iter().zip(gold_row) {
            total += g - q;
        }
    }
    total /= d;
    Ok(RegretReport {
        total,
        per_step: total / log.steps() as f64,
    })
}

/// Mean quality per step and overall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub per_step: Vec<f64>,
    pub overall: f64,
}

pub fn average_quality(log: &MonitorLog) -> QualityReport {
    let d = log.dims() as f64;
    let per_step: Vec<f64> = log
        .qualities
        .iter()
        .map(|row| row.iter().sum::<f64>() / d)
        .collect();
    let overall = per_step.iter().sum::<f64>() / per_step.len() as f64;
    QualityReport { per_step, overall }
}

/// Fraction of steps in which each dimension was selected.
pub fn update_frequency(log: &MonitorLog) -> Vec<f64> {
    let mut counts = vec![0usize; log.dims()];
    for selection in &log.selections {
        for &dim in selection {
            counts[dim] += 1;
        }
    }
    let t = log.steps() as f64;
    counts.into_iter().map(|c| c as f64 / t).collect()
}

/// Successful updates, reported per attempted search (headline) and
/// normalised by dimensions times steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessReport {
    pub successes: u64,
    pub attempts: u64,
    /// `None` when nothing was attempted.
    pub per_attempt: Option<f64>,
    pub per_dimension_step: f64,
}

pub fn success_rate(log: &MonitorLog) -> SuccessReport {
    let mut successes = 0u64;
    let mut attempts = 0u64;
    for flags in &log.successes {
        attempts += flags.len() as u64;
        successes += flags.iter().filter(|&&s| s).count() as u64;
    }
    let per_attempt = (attempts > 0).then(|| successes as f64 / attempts as f64);
    let per_dimension_step = successes as f64 / (log.dims() as f64 * log.steps() as f64);
    SuccessReport {
        successes,
        attempts,
        per_attempt,
        per_dimension_step,
    }
}
