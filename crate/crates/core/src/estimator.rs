//! Monte-Carlo estimation of subspace quality with respect to one dimension.
//!
//! The quality of a subspace `S` w.r.t. a member dimension `s_i` is estimated
//! by repeatedly slicing the window: every other dimension of `S` is
//! restricted to a random contiguous rank interval, and the values of `s_i`
//! inside the slice are compared against those outside with a two-sample
//! Kolmogorov-Smirnov test. Averaging `1 - p` over `M` such slices yields a
//! score in [0, 1] that grows with the evidence against independence.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding;
use crate::stream::{SlidingWindow, Subspace};

/// Per-iteration draws give an empty side this many extra chances before the
/// iteration counts as "no evidence" (p = 1).
const MAX_REDRAWS: usize = 10;

/// Parameters of the Monte-Carlo quality estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Number of Monte-Carlo iterations (M).
    pub iterations: usize,
    /// Expected fraction of the window retained by a condition.
    pub slice_mass: f64,
    /// Base seed; callers derive per-call seeds from it.
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            iterations: 100,
            slice_mass: 0.5,
            seed: 0,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if !(self.slice_mass > 0.0 && self.slice_mass < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "slice mass must lie in (0,1), got {}",
                self.slice_mass
            )));
        }
        Ok(())
    }
}

/// One quality estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityEstimate {
    /// Estimated quality in [0, 1].
    pub value: f64,
    pub subspace: Subspace,
    pub target_dim: usize,
    /// Iterations actually averaged.
    pub iterations: usize,
    /// Set when the target column is constant; the value is then 0.
    pub degenerate: bool,
}

/// Cheap seedable generator for condition draws. Successive outputs follow
/// the splitmix64 sequence, so per-iteration substreams stay order-free.
#[derive(Debug, Clone)]
pub struct Mix64 {
    state: u64,
}

impl Mix64 {
    pub fn new(seed: u64) -> Self {
        Mix64 { state: seed }
    }
}

impl RngCore for Mix64 {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        let mut chunks = dest.chunks_exact_mut(8);
        for chunk in &mut chunks {
            chunk.copy_from_slice(&self.next_u64().to_le_bytes());
        }
        let rest = chunks.into_remainder();
        if !rest.is_empty() {
            let bytes = self.next_u64().to_le_bytes();
            rest.copy_from_slice(&bytes[..rest.len()]);
        }
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}

/// Asymptotic p-value of the two-sample Kolmogorov-Smirnov test.
///
/// Both inputs must be sorted ascending. The statistic is the supremum
/// distance between the empirical CDFs; the p-value follows the Kolmogorov
/// series `2 Σ (-1)^(k-1) exp(-2 k² n_e D²)` with effective sample size
/// `n_e = |a||b| / (|a|+|b|)`, truncated once a term drops below 1e-10 and
/// clamped to [0, 1].
pub fn ks_two_sample_pvalue(a: &[f64], b: &[f64]) -> Result<f64> {
    let d = ks_statistic(a, b)?;
    let na = a.len() as f64;
    let nb = b.len() as f64;
    Ok(kolmogorov_pvalue(d, na * nb / (na + nb)))
}

/// Supremum distance between the empirical CDFs of two sorted samples.
///
/// The numerator is carried in exact integer arithmetic; only the final
/// division rounds.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut best: i64 = 0;
    while i < n && j < m {
        let current = a[i].min(b[j]);
        // Ties move both CDFs before the distance is measured.
        while i < n && a[i] == current {
            i += 1;
        }
        while j < m && b[j] == current {
            j += 1;
        }
        let expr = (i * m) as i64 - (j * n) as i64;
        best = best.max(expr.abs());
    }
    Ok(best as f64 / (n as f64 * m as f64))
}

/// Writes per-row condition membership (in target rank order) and returns the
/// inside count. Monomorphic over the conditioning-dimension count so the
/// range checks vectorize.
#[inline]
fn fill_flags<const C: usize>(
    rank_table: &[u32],
    starts: &[u32],
    block: u32,
    flags: &mut [u8],
) -> usize {
    let n = flags.len();
    debug_assert_eq!(rank_table.len(), n * C);
    debug_assert_eq!(starts.len(), C);
    let mut inside = 0usize;
    for r in 0..n {
        let mut hit = 1u8;
        for j in 0..C {
            let rank = unsafe { *rank_table.get_unchecked(r * C + j) };
            let start = unsafe { *starts.get_unchecked(j) };
            hit &= u8::from(rank.wrapping_sub(start) < block);
        }
        unsafe {
            *flags.get_unchecked_mut(r) = hit;
        }
        inside += hit as usize;
    }
    inside
}

fn fill_flags_dyn(
    rank_table: &[u32],
    starts: &[u32],
    block: u32,
    flags: &mut [u8],
) -> usize {
    let c = starts.len();
    let n = flags.len();
    let mut inside = 0usize;
    for r in 0..n {
        let mut hit = 1u8;
        for (j, &start) in starts.iter().enumerate() {
            let rank = unsafe { *rank_table.get_unchecked(r * c + j) };
            hit &= u8::from(rank.wrapping_sub(start) < block);
        }
        unsafe {
            *flags.get_unchecked_mut(r) = hit;
        }
        inside += hit as usize;
    }
    inside
}

fn kolmogorov_pvalue(d: f64, effective: f64) -> f64 {
    if d <= 0.0 {
        return 1.0;
    }
    let factor = 2.0 * effective * d * d;
    let mut sum = 0.0f64;
    let mut sign = 1.0f64;
    for k in 1..=100_000u64 {
        let term = (-factor * (k * k) as f64).exp();
        sum += sign * term;
        if term < 1e-10 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// A random condition: the conditioning dimensions of `subspace` (all but the
/// target) restricted to contiguous rank intervals of equal mass.
struct ConditionSampler<'w> {
    window: &'w SlidingWindow,
    cond_dims: Vec<usize>,
    block: usize,
    n: usize,
}

impl<'w> ConditionSampler<'w> {
    fn new(
        window: &'w SlidingWindow,
        subspace: &Subspace,
        target_dim: usize,
        slice_mass: f64,
    ) -> Result<Self> {
        if subspace.len() < 2 {
            return Err(Error::SubspaceTooSmall {
                required: 2,
                got: subspace.len(),
            });
        }
        if !subspace.contains(target_dim) {
            return Err(Error::DimensionOutOfRange {
                dim: target_dim,
                d: window.dims(),
            });
        }
        if subspace.max_dim() >= window.dims() {
            return Err(Error::DimensionOutOfRange {
                dim: subspace.max_dim(),
                d: window.dims(),
            });
        }
        if window.is_empty() {
            return Err(Error::WindowTooSmall { required: 1, got: 0 });
        }
        let cond_dims: Vec<usize> = subspace
            .dims()
            .iter()
            .copied()
            .filter(|&d| d != target_dim)
            .collect();
        let n = window.len();
        // Per-dimension interval length so the expected joint mass is `slice_mass`.
        let fraction = slice_mass.powf(1.0 / cond_dims.len() as f64);
        let block = ((n as f64 * fraction).ceil() as usize).clamp(1, n);
        Ok(ConditionSampler {
            window,
            cond_dims,
            block,
            n,
        })
    }

    fn draw_starts(&self, rng: &mut impl Rng, starts: &mut Vec<usize>) {
        starts.clear();
        for _ in &self.cond_dims {
            starts.push(rng.gen_range(0..=self.n - self.block));
        }
    }

    /// Marks interval membership; returns the number of rows covered by every
    /// interval. Such rows end with `counts[row] == cond_dims.len()`.
    fn mark(&self, starts: &[usize], counts: &mut [u16]) -> usize {
        counts.fill(0);
        let full = self.cond_dims.len() as u16;
        let mut inside = 0usize;
        let last = self.cond_dims.len() - 1;
        for (idx, (&dim, &start)) in self.cond_dims.iter().zip(starts).enumerate() {
            let slots = &self.window.rank_index(dim)[start..start + self.block];
            if idx < last {
                for &pos in slots {
                    debug_assert!((pos as usize) < counts.len());
                    unsafe {
                        *counts.get_unchecked_mut(pos as usize) += 1;
                    }
                }
            } else {
                // A row completes its count during the last interval or never.
                for &pos in slots {
                    debug_assert!((pos as usize) < counts.len());
                    let c = unsafe { counts.get_unchecked_mut(pos as usize) };
                    *c += 1;
                    if *c == full {
                        inside += 1;
                    }
                }
            }
        }
        inside
    }
}

/// Splits the window rows into those inside a random condition and the rest.
///
/// For each conditioning dimension the condition keeps a contiguous block of
/// `ceil(n * slice_mass^(1/(|S|-1)))` positions of its rank index, starting at
/// a uniformly random offset; the inside set is the intersection of the
/// blocks. The inside set may be empty.
pub fn random_condition(
    window: &SlidingWindow,
    subspace: &Subspace,
    target_dim: usize,
    rng: &mut impl Rng,
    slice_mass: f64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let sampler = ConditionSampler::new(window, subspace, target_dim, slice_mass)?;
    let mut starts = Vec::with_capacity(sampler.cond_dims.len());
    sampler.draw_starts(rng, &mut starts);
    let mut counts = vec![0u16; sampler.n];
    sampler.mark(&starts, &mut counts);
    let full = sampler.cond_dims.len() as u16;
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for (row, &c) in counts.iter().enumerate() {
        if c == full {
            inside.push(row);
        } else {
            outside.push(row);
        }
    }
    Ok((inside, outside))
}

/// Monte-Carlo quality estimator with a shared evaluation counter.
#[derive(Debug)]
pub struct Estimator {
    iterations: usize,
    slice_mass: f64,
    counter: AtomicU64,
}

impl Estimator {
    pub fn new(cfg: &EstimatorConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Estimator {
            iterations: cfg.iterations,
            slice_mass: cfg.slice_mass,
            counter: AtomicU64::new(0),
        })
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Number of quality estimates computed so far.
    pub fn evaluation_count(&self) -> u64 {
        self.counter.load(Ordering::Relaxed)
    }

    /// Estimates the quality of `subspace` w.r.t. `target_dim` on the current
    /// window. Deterministic given the window contents and `seed`.
    pub fn contrast(
        &self,
        window: &SlidingWindow,
        subspace: &Subspace,
        target_dim: usize,
        seed: u64,
    ) -> Result<QualityEstimate> {
        let sampler = ConditionSampler::new(window, subspace, target_dim, self.slice_mass)?;
        if window.len() < 2 {
            return Err(Error::WindowTooSmall {
                required: 2,
                got: window.len(),
            });
        }
        self.counter.fetch_add(1, Ordering::Relaxed);

        let n = sampler.n;
        let target_order = window.rank_index(target_dim);
        let target_sorted: Vec<f64> = target_order
            .iter()
            .map(|&pos| window.value(pos as usize, target_dim))
            .collect();

        // A constant column cannot reveal any pattern.
        if target_sorted[0] == target_sorted[n - 1] {
            return Ok(QualityEstimate {
                value: 0.0,
                subspace: subspace.clone(),
                target_dim,
                iterations: self.iterations,
                degenerate: true,
            });
        }

        // For every row, in target rank order, the rank positions it holds in
        // each conditioning dimension, interleaved for sequential access.
        // Interval membership then reduces to range checks on this table.
        let cond = sampler.cond_dims.len();
        let mut rank_table = vec![0u32; n * cond];
        {
            let mut inverse = vec![0u32; n];
            for (j, &dim) in sampler.cond_dims.iter().enumerate() {
                for (rank, &pos) in window.rank_index(dim).iter().enumerate() {
                    inverse[pos as usize] = rank as u32;
                }
                for (r, &pos) in target_order.iter().enumerate() {
                    rank_table[r * cond + j] = inverse[pos as usize];
                }
            }
        }
        // With ties in the target column the KS distance may only be taken
        // where the value changes; precompute those positions once.
        let has_ties = target_sorted.windows(2).any(|w| w[0] == w[1]);
        let boundary: Vec<u8> = if has_ties {
            (0..n)
                .map(|r| u8::from(r + 1 == n || target_sorted[r + 1] != target_sorted[r]))
                .collect()
        } else {
            Vec::new()
        };

        let block = sampler.block as u32;
        let mut inside_flags = vec![0u8; n];
        let mut starts = Vec::with_capacity(cond);
        let mut start_words = vec![0u32; cond];
        let mut sum = 0.0f64;

        for iteration in 0..self.iterations {
            let mut rng = Mix64::new(seeding::mix(seed, &[iteration as u64]));
            let mut p = 1.0;
            for _ in 0..=MAX_REDRAWS {
                sampler.draw_starts(&mut rng, &mut starts);
                for (w, &s) in start_words.iter_mut().zip(&starts) {
                    *w = s as u32;
                }
                let inside = match cond {
                    1 => fill_flags::<1>(&rank_table, &start_words, block, &mut inside_flags),
                    2 => fill_flags::<2>(&rank_table, &start_words, block, &mut inside_flags),
                    3 => fill_flags::<3>(&rank_table, &start_words, block, &mut inside_flags),
                    4 => fill_flags::<4>(&rank_table, &start_words, block, &mut inside_flags),
                    _ => fill_flags_dyn(&rank_table, &start_words, block, &mut inside_flags),
                };
                if inside == 0 || inside == n {
                    continue;
                }

                // Sweep in target rank order: the two conditional samples are
                // interleaved already sorted, so the KS distance falls out of
                // one pass, in exact integer arithmetic.
                let (na, nb) = (inside as i64, (n - inside) as i64);
                let step = na + nb;
                let mut expr: i64 = 0;
                let mut best: i64 = 0;
                if has_ties {
                    for r in 0..n {
                        expr += unsafe { *inside_flags.get_unchecked(r) } as i64 * step - na;
                        let gate = unsafe { *boundary.get_unchecked(r) } as i64;
                        best = best.max(expr.abs() * gate);
                    }
                } else {
                    for r in 0..n {
                        expr += unsafe { *inside_flags.get_unchecked(r) } as i64 * step - na;
                        best = best.max(expr.abs());
                    }
                }
                let d = best as f64 / (na as f64 * nb as f64);
                p = kolmogorov_pvalue(d, na as f64 * nb as f64 / n as f64);
                break;
            }
            sum += 1.0 - p;
        }

        Ok(QualityEstimate {
            value: (sum / self.iterations as f64).clamp(0.0, 1.0),
            subspace: subspace.clone(),
            target_dim,
            iterations: self.iterations,
            degenerate: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
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

    /// x uniform, y = x + sigma * noise.
    fn linear_window(n: usize, sigma: f64, seed: u64) -> SlidingWindow {
        let mut rng = seeding::rng(seed, &[]);
        let mut w = SlidingWindow::new(n, 2);
        for t in 0..n {
            let x: f64 = rng.gen();
            let noise: f64 = rng.gen::<f64>() - 0.5;
            w.push(Observation::new(vec![x, x + sigma * noise], t as u64 + 1))
                .unwrap();
        }
        w
    }

    #[test]
    fn ks_identical_samples() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_statistic(&a, &a).unwrap(), 0.0);
        assert_eq!(ks_two_sample_pvalue(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn ks_disjoint_samples() {
        // D = 1, n_e = 1.5: p = 2(e^-3 - e^-12 + e^-27 - ...)
        let a = [0.0, 0.0, 0.0];
        let b = [1.0, 1.0, 1.0];
        assert_eq!(ks_statistic(&a, &b).unwrap(), 1.0);
        let p = ks_two_sample_pvalue(&a, &b).unwrap();
        assert!((p - 0.09956184831478028).abs() < 1e-12, "p = {p}");
    }

    #[test]
    fn ks_statistic_matches_naive_counting() {
        // Brute force: evaluate |F_a - F_b| at every sample value.
        fn naive(a: &[f64], b: &[f64]) -> f64 {
            let mut best = 0.0f64;
            for &x in a.iter().chain(b) {
                let fa = a.iter().filter(|&&v| v <= x).count() as f64 / a.len() as f64;
                let fb = b.iter().filter(|&&v| v <= x).count() as f64 / b.len() as f64;
                best = best.max((fa - fb).abs());
            }
            best
        }
        let mut rng = seeding::rng(17, &[]);
        for _ in 0..50 {
            let la = rng.gen_range(1..40);
            let lb = rng.gen_range(1..40);
            // Coarse grid to force ties within and across samples.
            let mut a: Vec<f64> = (0..la).map(|_| (rng.gen_range(0..10) as f64) / 10.0).collect();
            let mut b: Vec<f64> = (0..lb).map(|_| (rng.gen_range(0..10) as f64) / 10.0).collect();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            let fast = ks_statistic(&a, &b).unwrap();
            let slow = naive(&a, &b);
            assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
        }
    }

    #[test]
    fn ks_empty_sample_rejected() {
        assert!(matches!(ks_statistic(&[], &[1.0]), Err(Error::EmptySample)));
    }

    #[test]
    fn ks_pvalues_uniform_under_null() {
        // Mean p over independent uniform samples sits near 1/2.
        let mut total = 0.0;
        let trials = 1000;
        for trial in 0..trials {
            let mut rng = seeding::rng(900 + trial, &[]);
            let mut a: Vec<f64> = (0..1000).map(|_| rng.gen()).collect();
            let mut b: Vec<f64> = (0..1000).map(|_| rng.gen()).collect();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            total += ks_two_sample_pvalue(&a, &b).unwrap();
        }
        let mean = total / trials as f64;
        assert!((0.45..=0.55).contains(&mean), "mean p = {mean}");
    }

    #[test]
    fn condition_two_dims_exact_block() {
        let w = uniform_window(1000, 2, 1);
        let mut rng = seeding::rng(2, &[]);
        let (inside, outside) =
            random_condition(&w, &Subspace::new([0, 1]), 0, &mut rng, 0.5).unwrap();
        assert_eq!(inside.len(), 500);
        assert_eq!(outside.len(), 500);
    }

    #[test]
    fn condition_three_dims_expected_mass() {
        let w = uniform_window(1000, 3, 3);
        let subspace = Subspace::new([0, 1, 2]);
        let mut rng = seeding::rng(4, &[]);
        let mut total = 0usize;
        let conditions = 1000;
        for _ in 0..conditions {
            let (inside, _) = random_condition(&w, &subspace, 0, &mut rng, 0.5).unwrap();
            total += inside.len();
        }
        let mean = total as f64 / conditions as f64;
        // Per-dimension block 708 of 1000; independent dims give ~708²/1000.
        assert!((450.0..=550.0).contains(&mean), "mean inside = {mean}");
    }

    #[test]
    fn condition_requires_two_dims() {
        let w = uniform_window(100, 2, 5);
        let mut rng = seeding::rng(6, &[]);
        assert!(matches!(
            random_condition(&w, &Subspace::new([0]), 0, &mut rng, 0.5),
            Err(Error::SubspaceTooSmall { .. })
        ));
    }

    /// Re-runs the first Monte-Carlo iteration by hand through the public
    /// partition + test functions and compares against the fused path.
    fn check_fused_against_partition(w: &SlidingWindow, subspace: &Subspace, target: usize, seed: u64) {
        let cfg = EstimatorConfig {
            iterations: 1,
            ..EstimatorConfig::default()
        };
        let est = Estimator::new(&cfg).unwrap();
        let fused = est.contrast(w, subspace, target, seed).unwrap();

        let mut rng = Mix64::new(seeding::mix(seed, &[0]));
        let (inside_rows, outside_rows) =
            random_condition(w, subspace, target, &mut rng, 0.5).unwrap();
        let collect = |rows: &[usize]| {
            let mut vals: Vec<f64> = rows.iter().map(|&r| w.value(r, target)).collect();
            vals.sort_by(f64::total_cmp);
            vals
        };
        let p = ks_two_sample_pvalue(&collect(&inside_rows), &collect(&outside_rows)).unwrap();
        assert_eq!(fused.value.to_bits(), (1.0 - p).to_bits());
    }

    #[test]
    fn contrast_agrees_with_explicit_partition() {
        check_fused_against_partition(&uniform_window(200, 3, 7), &Subspace::new([0, 1, 2]), 1, 8);
        check_fused_against_partition(&uniform_window(200, 2, 9), &Subspace::new([0, 1]), 0, 10);
    }

    #[test]
    fn contrast_agrees_with_explicit_partition_under_ties() {
        // Coarse grid forces duplicate target values.
        let mut rng = seeding::rng(70, &[]);
        let mut w = SlidingWindow::new(200, 2);
        for t in 0..200u64 {
            let x = rng.gen_range(0..20) as f64 / 20.0;
            let y = rng.gen_range(0..20) as f64 / 20.0;
            w.push(Observation::new(vec![x, y], t + 1)).unwrap();
        }
        check_fused_against_partition(&w, &Subspace::new([0, 1]), 0, 11);
        check_fused_against_partition(&w, &Subspace::new([0, 1]), 1, 12);
    }

    #[test]
    fn contrast_independent_data_near_half() {
        let est = Estimator::new(&EstimatorConfig::default()).unwrap();
        let mut total = 0.0;
        let seeds = 50;
        for seed in 0..seeds {
            let w = uniform_window(1000, 2, 100 + seed);
            let q = est.contrast(&w, &Subspace::new([0, 1]), 0, seed).unwrap();
            assert!((0.0..=1.0).contains(&q.value));
            total += q.value;
        }
        let mean = total / seeds as f64;
        assert!((0.4..=0.6).contains(&mean), "mean contrast = {mean}");
    }

    #[test]
    fn contrast_perfect_dependence_high() {
        let est = Estimator::new(&EstimatorConfig::default()).unwrap();
        let w = linear_window(1000, 0.0, 11);
        let q = est.contrast(&w, &Subspace::new([0, 1]), 0, 12).unwrap();
        assert!(q.value > 0.9, "contrast = {}", q.value);
    }

    #[test]
    fn contrast_monotone_in_noise() {
        let est = Estimator::new(&EstimatorConfig::default()).unwrap();
        let mut means = Vec::new();
        for &sigma in &[0.0, 0.25, 0.5, 1.0] {
            let mut total = 0.0;
            for seed in 0..20u64 {
                let w = linear_window(1000, sigma, 200 + seed);
                total += est
                    .contrast(&w, &Subspace::new([0, 1]), 0, 300 + seed)
                    .unwrap()
                    .value;
            }
            means.push(total / 20.0);
        }
        for pair in means.windows(2) {
            assert!(pair[1] <= pair[0], "means not non-increasing: {means:?}");
        }
    }

    #[test]
    fn contrast_deterministic() {
        let est = Estimator::new(&EstimatorConfig::default()).unwrap();
        let w = uniform_window(500, 3, 21);
        let s = Subspace::new([0, 1, 2]);
        let a = est.contrast(&w, &s, 2, 99).unwrap();
        let b = est.contrast(&w, &s, 2, 99).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn contrast_degenerate_column() {
        let mut w = SlidingWindow::new(100, 2);
        let mut rng = seeding::rng(31, &[]);
        for t in 0..100u64 {
            w.push(Observation::new(vec![5.0, rng.gen()], t + 1)).unwrap();
        }
        let est = Estimator::new(&EstimatorConfig::default()).unwrap();
        let q = est.contrast(&w, &Subspace::new([0, 1]), 0, 1).unwrap();
        assert_eq!(q.value, 0.0);
        assert!(q.degenerate);
    }

    #[test]
    fn joint_permutation_preserves_mean_estimate() {
        let est = Estimator::new(&EstimatorConfig::default()).unwrap();
        let base = linear_window(400, 0.25, 41);
        let rows = base.project(&Subspace::new([0, 1])).unwrap();
        let mut permuted = SlidingWindow::new(400, 2);
        // Reverse is a joint permutation of the rows.
        for (t, row) in rows.iter().rev().enumerate() {
            permuted
                .push(Observation::new(row.clone(), t as u64 + 1))
                .unwrap();
        }
        let s = Subspace::new([0, 1]);
        let mut mean_a = 0.0;
        let mut mean_b = 0.0;
        for seed in 0..20u64 {
            mean_a += est.contrast(&base, &s, 0, seed).unwrap().value;
            mean_b += est.contrast(&permuted, &s, 0, seed).unwrap().value;
        }
        mean_a /= 20.0;
        mean_b /= 20.0;
        assert!((mean_a - mean_b).abs() < 0.05, "{mean_a} vs {mean_b}");
    }

    #[test]
    fn column_shuffle_destroys_dependence() {
        let est = Estimator::new(&EstimatorConfig::default()).unwrap();
        let base = linear_window(400, 0.0, 51);
        let s = Subspace::new([0, 1]);
        let q_dep = est.contrast(&base, &s, 0, 1).unwrap().value;

        // Shuffle column 1 independently of column 0.
        let rows = base.project(&s).unwrap();
        let mut ys: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        let mut rng = seeding::rng(52, &[]);
        for i in (1..ys.len()).rev() {
            ys.swap(i, rng.gen_range(0..=i));
        }
        let mut shuffled = SlidingWindow::new(400, 2);
        for (t, row) in rows.iter().enumerate() {
            shuffled
                .push(Observation::new(vec![row[0], ys[t]], t as u64 + 1))
                .unwrap();
        }
        let mut mean = 0.0;
        for seed in 0..20u64 {
            mean += est.contrast(&shuffled, &s, 0, seed).unwrap().value;
        }
        mean /= 20.0;
        assert!(q_dep > 0.9);
        assert!((0.35..=0.65).contains(&mean), "shuffled mean = {mean}");
    }

    #[test]
    fn evaluation_counter_counts_calls() {
        let est = Estimator::new(&EstimatorConfig::default()).unwrap();
        assert_eq!(est.evaluation_count(), 0);
        let w = uniform_window(100, 2, 61);
        let s = Subspace::new([0, 1]);
        est.contrast(&w, &s, 0, 1).unwrap();
        est.contrast(&w, &s, 1, 2).unwrap();
        assert_eq!(est.evaluation_count(), 2);
    }
}
