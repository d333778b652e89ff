//! Greedy bottom-up construction of a high-quality subspace for one target
//! dimension.
//!
//! The first step scores every 2-dimensional subspace containing the target
//! and keeps the best pair. Candidates are then visited in decreasing order
//! of their pair score and added whenever doing so strictly improves the
//! quality of the growing subspace. Only `(d-1) + (d-2) = 2d-3` estimates are
//! spent per search, so one search is linear in the dimensionality.

use crate::error::{Error, Result};
use crate::estimator::Estimator;
use crate::seeding;
use crate::stream::{SlidingWindow, Subspace};

/// Outcome of one greedy search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub subspace: Subspace,
    /// Last estimate of the returned subspace's quality.
    pub quality: f64,
    /// Quality estimates spent, always `2d - 3` for `d > 2`.
    pub evaluations: usize,
}

/// Runs the greedy search for `target_dim` on the current window.
///
/// Deterministic given the window contents and `seed`; the estimate seeds are
/// derived per evaluation. Argmax ties go to the lowest dimension index.
pub fn search(
    window: &SlidingWindow,
    target_dim: usize,
    estimator: &Estimator,
    seed: u64,
) -> Result<SearchResult> {
    let d = window.dims();
    if d < 2 {
        return Err(Error::InvalidConfig(format!(
            "search needs at least 2 dimensions, stream has {d}"
        )));
    }
    if target_dim >= d {
        return Err(Error::DimensionOutOfRange { dim: target_dim, d });
    }

    let mut evaluations = 0usize;
    let mut estimate = |subspace: &Subspace| -> Result<f64> {
        let value = estimator
            .contrast(window, subspace, target_dim, seeding::mix(seed, &[evaluations as u64]))?
            .value;
        evaluations += 1;
        Ok(value)
    };

    // Score every pair containing the target once; the scores also fix the
    // candidate order below.
    let mut pair_quality = vec![0.0f64; d];
    for dim in (0..d).filter(|&j| j != target_dim) {
        pair_quality[dim] = estimate(&Subspace::new([target_dim, dim]))?;
    }
    let best_pair = (0..d)
        .filter(|&j| j != target_dim)
        .max_by(|&a, &b| pair_quality[a].partial_cmp(&pair_quality[b]).unwrap().then(b.cmp(&a)))
        .expect("d >= 2");

    let mut current = Subspace::new([target_dim, best_pair]);
    let mut best_quality = pair_quality[best_pair];

    let mut candidates: Vec<usize> = (0..d)
        .filter(|&j| j != target_dim && j != best_pair)
        .collect();
    candidates.sort_by(|&a, &b| pair_quality[b].partial_cmp(&pair_quality[a]).unwrap().then(a.cmp(&b)));

    for candidate in candidates {
        let grown = current.with(candidate);
        let quality = estimate(&grown)?;
        if quality > best_quality {
            current = grown;
            best_quality = quality;
        }
    }

    Ok(SearchResult {
        subspace: current,
        quality: best_quality,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::EstimatorConfig;
    use crate::stream::Observation;
    use rand::Rng;

    fn uniform_window(n: usize, d: usize, seed: u64) -> SlidingWindow {
        let mut rng = seeding::rng(seed, &[]);
        let mut w = SlidingWindow::new(n, d);
        for t in 0..n {
            let values: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
            w.push(Observation::new(values, t as u64 + 1)).unwrap();
        }
        w
    }

    /// Dimensions 1 and 2 are independent noisy views of dimension 0; the
    /// rest is i.i.d. noise. Each extra view sharpens the conditional, so the
    /// greedy step has something to gain from growing past the best pair.
    fn dependent_window(n: usize, d: usize, seed: u64) -> SlidingWindow {
        let sigma = 1.2;
        let mut rng = seeding::rng(seed, &[]);
        let mut w = SlidingWindow::new(n, d);
        for t in 0..n {
            let latent: f64 = rng.gen();
            let mut values: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
            let n1: f64 = rng.gen::<f64>() - 0.5;
            let n2: f64 = rng.gen::<f64>() - 0.5;
            values[0] = latent;
            values[1] = latent + sigma * n1;
            values[2] = latent + sigma * n2;
            w.push(Observation::new(values, t as u64 + 1)).unwrap();
        }
        w
    }

    #[test]
    fn two_dims_forced_choice() {
        let est = Estimator::new(&EstimatorConfig::default()).unwrap();
        let w = uniform_window(200, 2, 1);
        let r = search(&w, 0, &est, 2).unwrap();
        assert_eq!(r.subspace, Subspace::new([0, 1]));
        assert_eq!(r.evaluations, 1);
    }

    #[test]
    fn evaluation_budget_is_2d_minus_3() {
        let est = Estimator::new(&EstimatorConfig { iterations: 5, ..Default::default() }).unwrap();
        for d in [3usize, 5, 10] {
            let w = uniform_window(100, d, d as u64);
            let before = est.evaluation_count();
            let r = search(&w, 0, &est, 7).unwrap();
            assert_eq!(r.evaluations, 2 * d - 3);
            assert_eq!(est.evaluation_count() - before, (2 * d - 3) as u64);
        }
    }

    #[test]
    fn search_requires_two_dims() {
        let est = Estimator::new(&EstimatorConfig::default()).unwrap();
        let w = uniform_window(50, 1, 3);
        assert!(search(&w, 0, &est, 1).is_err());
    }

    #[test]
    fn result_contains_target() {
        let est = Estimator::new(&EstimatorConfig { iterations: 10, ..Default::default() }).unwrap();
        for target in 0..5 {
            let w = uniform_window(150, 5, 40 + target as u64);
            let r = search(&w, target, &est, 9).unwrap();
            assert!(r.subspace.contains(target));
        }
    }

    #[test]
    fn quality_not_below_best_pair() {
        let est = Estimator::new(&EstimatorConfig { iterations: 20, ..Default::default() }).unwrap();
        for seed in 0..5u64 {
            let w = dependent_window(400, 6, 80 + seed);
            let r = search(&w, 0, &est, seed).unwrap();
            // Additions happen only on strict improvement, so the final
            // quality can never undercut the best pair found first.
            let mut best_pair = 0.0f64;
            for j in 1..6 {
                let q = est
                    .contrast(&w, &Subspace::new([0, j]), 0, seeding::mix(seed, &[j as u64 - 1]))
                    .unwrap()
                    .value;
                best_pair = best_pair.max(q);
            }
            assert!(r.quality >= best_pair);
        }
    }

    #[test]
    fn finds_planted_dependent_dims() {
        let est = Estimator::new(&EstimatorConfig::default()).unwrap();
        let mut found_both = 0;
        let runs = 20;
        for seed in 0..runs {
            let w = dependent_window(500, 10, 1000 + seed);
            let r = search(&w, 0, &est, seed).unwrap();
            assert!(r.subspace.contains(0));
            // The best pair must always be one of the planted views.
            assert!(
                r.subspace.contains(1) || r.subspace.contains(2),
                "seed {seed}: no planted dim in {}",
                r.subspace
            );
            assert!(r.quality > 0.8, "seed {seed}: quality {}", r.quality);
            if r.subspace.contains(1) && r.subspace.contains(2) {
                found_both += 1;
            }
        }
        // Growing past the pair requires a strict gain, which the second
        // view delivers on most windows (19/20 on these seeds).
        assert!(
            found_both * 10 >= runs * 8,
            "only {found_both}/{runs} runs captured both planted dims"
        );
    }

    #[test]
    fn deterministic_given_seed() {
        let est = Estimator::new(&EstimatorConfig { iterations: 25, ..Default::default() }).unwrap();
        let w = dependent_window(300, 6, 5);
        let a = search(&w, 2, &est, 77).unwrap();
        let b = search(&w, 2, &est, 77).unwrap();
        assert_eq!(a, b);
    }
}
