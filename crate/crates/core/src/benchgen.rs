//! Synthetic drift benchmark: a sequence of distributions over the unit
//! hypercube, each hiding outliers inside a few disjoint subspaces.
//!
//! Inside an active subspace, an inlier is drawn uniformly from the unit
//! cube minus the corner `[delta, 1]^m`; with a small probability the point
//! is drawn from that corner instead and labeled an outlier. Such outliers
//! are visible only in their subspace, not in the full space. Dimensions
//! outside every subspace stay i.i.d. uniform.
//!
//! Drift: from one distribution to the next, half of the subspaces are
//! replaced. Each replacement takes effect at its own uniformly random
//! offset within the phase, so the distribution morphs gradually, one
//! subspace at a time, rather than jumping at phase boundaries.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::{self, STREAM_GENERATOR};
use crate::stream::{Observation, Subspace};

/// Overall fraction of outliers the default per-subspace probability aims
/// for, matching a rate just under one percent.
const TARGET_OUTLIER_RATE: f64 = 0.0086;

/// Range the corner offset of a 2-dimensional subspace is drawn from.
const DELTA_RANGE: (f64, f64) = (0.65, 0.85);

/// Larger subspaces get deeper corners, keeping their pairwise projections
/// wide enough to stay discoverable.
const DEEP_DELTA_RANGE: (f64, f64) = (0.6, 0.72);

/// Geometric weight favouring small subspaces in the size draw.
const SIZE_DECAY: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub dims: usize,
    /// Number of drift phases (n); the stream uses n+1 distributions.
    pub phases: usize,
    /// Observations emitted per phase (e).
    pub per_phase: usize,
    /// Probability that a point is an outlier in one active subspace.
    pub outlier_prob: f64,
    pub max_subspace_dim: usize,
    pub seed: u64,
}

impl GeneratorConfig {
    /// Defaults mirroring the benchmark family: 10 phases of 1000
    /// observations, subspaces up to 5 dimensions, and an outlier
    /// probability calibrated for the overall target rate.
    pub fn new(dims: usize, seed: u64) -> Self {
        let max_subspace_dim = 5.min(dims.max(2));
        GeneratorConfig {
            dims,
            phases: 10,
            per_phase: 1000,
            outlier_prob: TARGET_OUTLIER_RATE / subspace_count(dims, max_subspace_dim) as f64,
            max_subspace_dim,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_subspace_dim < 2 || self.dims < self.max_subspace_dim {
            return Err(Error::InvalidConfig(format!(
                "need dims >= max subspace dim >= 2, got {} and {}",
                self.dims, self.max_subspace_dim
            )));
        }
        if self.phases == 0 || self.per_phase == 0 {
            return Err(Error::InvalidConfig("phases and per-phase must be positive".into()));
        }
        if !(0.0..=0.01).contains(&self.outlier_prob) {
            return Err(Error::InvalidConfig(format!(
                "outlier probability must lie in [0, 0.01], got {}",
                self.outlier_prob
            )));
        }
        Ok(())
    }
}

/// Number of disjoint subspaces planted per distribution; sized so the
/// mostly-2-dimensional subspaces cover most of the space.
fn subspace_count(dims: usize, _max_subspace_dim: usize) -> usize {
    (dims * 2 / 5).max(1)
}

/// Probe hook for tuning experiments; not part of the public contract.
#[doc(hidden)]
pub unsafe fn set_delta_range_for_probe(range: (f64, f64)) {
    DELTA_OVERRIDE = Some(range);
}

static mut DELTA_OVERRIDE: Option<(f64, f64)> = None;

fn delta_range() -> (f64, f64) {
    unsafe { DELTA_OVERRIDE.unwrap_or(DELTA_RANGE) }
}

/// One planted subspace with its corner offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSubspace {
    pub subspace: Subspace,
    pub delta: f64,
}

/// The subspaces active at the start of one phase. The initial distribution
/// is plain uniform and has none.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DistributionSpec {
    pub subspaces: Vec<PlantedSubspace>,
}

/// One subspace replacement inside a phase: `outgoing` stops generating and
/// `incoming` starts at `offset` observations into the phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceSwitch {
    pub offset: usize,
    pub outgoing: Option<PlantedSubspace>,
    pub incoming: Option<PlantedSubspace>,
}

/// Ground truth emitted next to the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub config: GeneratorConfig,
    /// Subspace sets of the n+1 distributions.
    pub distributions: Vec<DistributionSpec>,
    /// Per phase: the replacements applied while it was emitted.
    pub switches: Vec<Vec<SubspaceSwitch>>,
}

impl GroundTruth {
    /// The subspaces in force at `offset` observations into `phase`.
    pub fn active_at(&self, phase: usize, offset: usize) -> Vec<&PlantedSubspace> {
        let mut active: Vec<&PlantedSubspace> =
            self.distributions[phase].subspaces.iter().collect();
        for switch in &self.switches[phase] {
            if switch.offset <= offset {
                if let Some(outgoing) = &switch.outgoing {
                    active.retain(|p| *p != outgoing);
                }
                if let Some(incoming) = &switch.incoming {
                    active.push(incoming);
                }
            }
        }
        active
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedData {
    pub observations: Vec<Observation>,
    pub truth: GroundTruth,
}

/// Uniform draw from `[0,1]^m` minus the corner `[delta,1]^m`, by rejection;
/// the acceptance probability is `1 - (1-delta)^m`.
pub fn complement_sample(delta: f64, dims_count: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let point: Vec<f64> = (0..dims_count).map(|_| rng.gen()).collect();
        if !point.iter().all(|&v| v >= delta) {
            return point;
        }
    }
}

fn draw_delta(size: usize, rng: &mut ChaCha8Rng) -> f64 {
    let (lo, hi) = if size == 2 { delta_range() } else { DEEP_DELTA_RANGE };
    rng.gen_range(lo..hi)
}

/// Subspace size in 2..=cap with geometrically decaying weights.
fn draw_size(cap: usize, rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = (2..=cap).map(|m| SIZE_DECAY.powi(m as i32 - 2)).sum();
    let mut roll = rng.gen::<f64>() * total;
    for m in 2..=cap {
        roll -= SIZE_DECAY.powi(m as i32 - 2);
        if roll <= 0.0 {
            return m;
        }
    }
    cap
}

/// Draws a fresh subspace of 2..=max dims, preferring never-used dimensions
/// and falling back to the freed ones.
fn draw_subspace(
    unused: &mut Vec<usize>,
    freed: &[usize],
    cfg: &GeneratorConfig,
    rng: &mut ChaCha8Rng,
) -> Option<PlantedSubspace> {
    let available = unused.len() + freed.len();
    if available < 2 {
        return None;
    }
    let size = draw_size(cfg.max_subspace_dim.min(available), rng);
    let mut dims = Vec::with_capacity(size);
    while dims.len() < size && !unused.is_empty() {
        let at = rng.gen_range(0..unused.len());
        dims.push(unused.swap_remove(at));
    }
    let mut freed: Vec<usize> = freed.to_vec();
    while dims.len() < size {
        let at = rng.gen_range(0..freed.len());
        dims.push(freed.swap_remove(at));
    }
    Some(PlantedSubspace {
        subspace: Subspace::new(dims),
        delta: draw_delta(size, rng),
    })
}

/// Slot-aligned subspace sets of the n+1 distributions. Half of the live
/// slots (rounded up) are replaced from one distribution to the next; a
/// replacement may reuse the dimensions its own slot freed, so the sets stay
/// disjoint even while old and new subspaces of different slots coexist
/// within a phase.
fn plan_distributions(
    cfg: &GeneratorConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<Option<PlantedSubspace>>>> {
    let slots = subspace_count(cfg.dims, cfg.max_subspace_dim);
    let mut plan: Vec<Vec<Option<PlantedSubspace>>> = vec![vec![None; slots]];
    for _ in 0..cfg.phases {
        let previous = plan.last().unwrap();
        let mut next = previous.clone();
        let live: Vec<usize> = (0..slots).filter(|&s| previous[s].is_some()).collect();
        let replaced: Vec<usize> = if live.is_empty() {
            (0..slots).collect()
        } else {
            rand::seq::index::sample(rng, live.len(), live.len().div_ceil(2))
                .iter()
                .map(|i| live[i])
                .collect()
        };

        let occupied: std::collections::HashSet<usize> = previous
            .iter()
            .flatten()
            .flat_map(|p| p.subspace.dims().iter().copied())
            .collect();
        let mut unused: Vec<usize> = (0..cfg.dims).filter(|d| !occupied.contains(d)).collect();

        let mut targets: Vec<usize> = (0..slots)
            .filter(|s| previous[*s].is_none() || replaced.contains(s))
            .collect();
        targets.sort_unstable();
        for slot in targets {
            let freed: Vec<usize> = previous[slot]
                .as_ref()
                .map(|p| p.subspace.dims().to_vec())
                .unwrap_or_default();
            next[slot] = draw_subspace(&mut unused, &freed, cfg, rng);
        }
        if next.iter().all(|s| s.is_none()) {
            return Err(Error::InvalidConfig(format!(
                "cannot place any disjoint subspace in {} dimensions",
                cfg.dims
            )));
        }
        plan.push(next);
    }
    Ok(plan)
}

/// Samples one point given the currently active slots. Returns the values
/// and the outlier label.
fn sample_point(
    active: &[Option<PlantedSubspace>],
    cfg: &GeneratorConfig,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, bool) {
    let mut values = vec![f64::NAN; cfg.dims];
    let mut outlier = false;
    for planted in active.iter().flatten() {
        let m = planted.subspace.len();
        let coords = if rng.gen::<f64>() < cfg.outlier_prob {
            outlier = true;
            (0..m).map(|_| rng.gen_range(planted.delta..1.0)).collect()
        } else {
            complement_sample(planted.delta, m, rng)
        };
        for (&dim, &v) in planted.subspace.dims().iter().zip(&coords) {
            values[dim] = v;
        }
    }
    for v in values.iter_mut() {
        if v.is_nan() {
            *v = rng.gen();
        }
    }
    (values, outlier)
}

/// Generates the full labeled stream plus its ground truth.
pub fn generate(cfg: &GeneratorConfig) -> Result<GeneratedData> {
    cfg.validate()?;
    let mut rng = seeding::rng(cfg.seed, &[STREAM_GENERATOR]);

    let plan = plan_distributions(cfg, &mut rng)?;
    let slots = plan[0].len();

    let mut observations = Vec::with_capacity(cfg.phases * cfg.per_phase);
    let mut switches: Vec<Vec<SubspaceSwitch>> = Vec::with_capacity(cfg.phases);
    for phase in 0..cfg.phases {
        let old = &plan[phase];
        let new = &plan[phase + 1];
        let mut events: Vec<(usize, usize)> = Vec::new();
        let mut records = Vec::new();
        for slot in 0..slots {
            if old[slot] != new[slot] {
                let offset = rng.gen_range(0..cfg.per_phase);
                events.push((offset, slot));
                records.push(SubspaceSwitch {
                    offset,
                    outgoing: old[slot].clone(),
                    incoming: new[slot].clone(),
                });
            }
        }
        events.sort_unstable();
        switches.push(records);

        let mut active = old.clone();
        let mut pending = events.into_iter().peekable();
        for j in 0..cfg.per_phase {
            while pending.peek().is_some_and(|&(offset, _)| offset <= j) {
                let (_, slot) = pending.next().unwrap();
                active[slot] = new[slot].clone();
            }
            let (values, outlier) = sample_point(&active, cfg, &mut rng);
            observations.push(Observation::with_label(
                values,
                (phase * cfg.per_phase + j) as u64 + 1,
                outlier,
            ));
        }
    }

    let distributions = plan
        .into_iter()
        .map(|slots| DistributionSpec {
            subspaces: slots.into_iter().flatten().collect(),
        })
        .collect();
    Ok(GeneratedData {
        observations,
        truth: GroundTruth {
            config: *cfg,
            distributions,
            switches,
        },
    })
}

/// Writes the dataset as CSV: `dim_0..dim_{d-1},label`, one row per
/// observation.
pub fn write_dataset_csv(observations: &[Observation], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = std::io::BufWriter::new(file);
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let d = observations.first().map_or(0, |o| o.values.len());
    let mut header: Vec<String> = (0..d).map(|i| format!("dim_{i}")).collect();
    header.push("label".into());
    writeln!(out, "{}", header.join(",")).map_err(io_err)?;
    for obs in observations {
        for v in &obs.values {
            write!(out, "{v},").map_err(io_err)?;
        }
        writeln!(out, "{}", u8::from(obs.label == Some(true))).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(seed: u64) -> GeneratorConfig {
        GeneratorConfig {
            phases: 4,
            per_phase: 250,
            ..GeneratorConfig::new(10, seed)
        }
    }

    #[test]
    fn default_synth_shape_and_rate() {
        let cfg = GeneratorConfig::new(10, 1);
        let data = generate(&cfg).unwrap();
        assert_eq!(data.observations.len(), 10_000);
        assert_eq!(data.truth.distributions.len(), 11);
        assert_eq!(data.truth.switches.len(), 10);
        let outliers = data.observations.iter().filter(|o| o.label == Some(true)).count();
        let rate = outliers as f64 / 10_000.0;
        assert!(
            (0.004..=0.014).contains(&rate),
            "outlier rate {rate} ({outliers} outliers)"
        );
    }

    #[test]
    fn zero_probability_means_no_outliers() {
        let cfg = GeneratorConfig {
            outlier_prob: 0.0,
            ..small_cfg(2)
        };
        let data = generate(&cfg).unwrap();
        assert!(data.observations.iter().all(|o| o.label == Some(false)));
    }

    #[test]
    fn identical_seed_identical_bytes() {
        let cfg = small_cfg(3);
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a, b);

        let dir = tempfile::tempdir().unwrap();
        let pa = dir.path().join("a.csv");
        let pb = dir.path().join("b.csv");
        write_dataset_csv(&a.observations, &pa).unwrap();
        write_dataset_csv(&b.observations, &pb).unwrap();
        assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());
    }

    #[test]
    fn different_seed_different_data() {
        let a = generate(&small_cfg(4)).unwrap();
        let b = generate(&small_cfg(5)).unwrap();
        assert_ne!(a.observations, b.observations);
    }

    /// Disjointness must hold for every instantaneous active set, not just
    /// at phase boundaries.
    #[test]
    fn active_subspaces_stay_disjoint_throughout() {
        let cfg = GeneratorConfig {
            phases: 6,
            per_phase: 100,
            ..GeneratorConfig::new(20, 6)
        };
        let data = generate(&cfg).unwrap();
        for phase in 0..cfg.phases {
            for offset in [0, 25, 50, 75, 99] {
                let active = data.truth.active_at(phase, offset);
                let mut used: Vec<usize> = active
                    .iter()
                    .flat_map(|p| p.subspace.dims().iter().copied())
                    .collect();
                let before = used.len();
                used.sort_unstable();
                used.dedup();
                assert_eq!(before, used.len(), "phase {phase} offset {offset}");
            }
        }
    }

    #[test]
    fn half_the_subspaces_change_per_phase() {
        let cfg = GeneratorConfig::new(20, 7);
        let target = subspace_count(cfg.dims, cfg.max_subspace_dim);
        assert_eq!(target, 8);
        let data = generate(&cfg).unwrap();
        let dists = &data.truth.distributions;
        assert!(dists[0].subspaces.is_empty());
        for (phase, pair) in dists.windows(2).enumerate().skip(1) {
            let kept = pair[1]
                .subspaces
                .iter()
                .filter(|p| pair[0].subspaces.contains(p))
                .count();
            let previous = pair[0].subspaces.len();
            assert_eq!(kept, previous - previous.div_ceil(2), "{pair:?}");
            // Every replacement shows up as an in-phase switch.
            assert_eq!(
                data.truth.switches[phase].len(),
                pair[1].subspaces.len() - kept
            );
        }
    }

    #[test]
    fn outliers_sit_inside_an_active_corner() {
        let cfg = GeneratorConfig {
            outlier_prob: 0.01,
            ..GeneratorConfig::new(10, 8)
        };
        let data = generate(&cfg).unwrap();
        let e = cfg.per_phase;
        let mut checked = 0;
        for (i, obs) in data.observations.iter().enumerate() {
            if obs.label != Some(true) {
                continue;
            }
            let active = data.truth.active_at(i / e, i % e);
            let in_corner = active
                .iter()
                .any(|p| p.subspace.dims().iter().all(|&dim| obs.values[dim] >= p.delta));
            assert!(in_corner, "outlier at t={} outside every active corner", obs.time_index);
            checked += 1;
        }
        assert!(checked > 20, "only {checked} outliers generated");
    }

    #[test]
    fn complement_sample_avoids_corner() {
        let mut rng = seeding::rng(9, &[]);
        for _ in 0..10_000 {
            let p = complement_sample(0.5, 2, &mut rng);
            assert!(p.len() == 2 && !(p[0] >= 0.5 && p[1] >= 0.5));
            assert!(p.iter().all(|&v| (0.0..1.0).contains(&v)));
        }
        // Near delta = 1 almost everything is accepted on the first draw.
        for _ in 0..100 {
            let p = complement_sample(0.999, 3, &mut rng);
            assert!(!p.iter().all(|&v| v >= 0.999));
        }
    }

    #[test]
    fn complement_marginal_mass_matches_volume() {
        // For m = 2, delta = 0.5 the complement has volume 3/4, of which the
        // strip x0 >= delta holds 1/4: P(x0 >= delta) = 1/3.
        let mut rng = seeding::rng(10, &[]);
        let draws = 100_000;
        let mut high = 0usize;
        for _ in 0..draws {
            if complement_sample(0.5, 2, &mut rng)[0] >= 0.5 {
                high += 1;
            }
        }
        let freq = high as f64 / draws as f64;
        assert!((freq - 1.0 / 3.0).abs() < 0.01, "frequency {freq}");
    }

    /// The corner exclusions bend each marginal away from uniform by a few
    /// percent at most; the full-stream marginals stay close to U[0,1].
    #[test]
    fn marginals_stay_near_uniform() {
        let data = generate(&GeneratorConfig::new(10, 12)).unwrap();
        let n = data.observations.len();
        for dim in 0..10 {
            let mut col: Vec<f64> = data.observations.iter().map(|o| o.values[dim]).collect();
            col.sort_by(f64::total_cmp);
            let mut sup = 0.0f64;
            for (i, &x) in col.iter().enumerate() {
                sup = sup.max((x - i as f64 / n as f64).abs());
                sup = sup.max(((i + 1) as f64 / n as f64 - x).abs());
            }
            assert!(sup < 0.08, "dim {dim}: sup deviation {sup}");
        }
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(generate(&GeneratorConfig {
            outlier_prob: 0.5,
            ..small_cfg(1)
        })
        .is_err());
        assert!(generate(&GeneratorConfig {
            dims: 3,
            max_subspace_dim: 5,
            ..small_cfg(1)
        })
        .is_err());
    }

    #[test]
    fn ground_truth_serializes() {
        let data = generate(&small_cfg(11)).unwrap();
        let json = serde_json::to_string_pretty(&data.truth).unwrap();
        let back: GroundTruth = serde_json::from_str(&json).unwrap();
        assert_eq!(back, data.truth);
    }
}
