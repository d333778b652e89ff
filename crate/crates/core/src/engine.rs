//! The streaming loop: fill the first window, search a subspace per
//! dimension, then per new observation monitor the current subspaces with
//! exponential smoothing and, every `v`-th step, let the update policy pick
//! dimensions whose subspace gets re-searched.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{Estimator, EstimatorConfig};
use crate::policy::{Policy, PolicyKind};
use crate::search::search;
use crate::seeding::{self, STREAM_ESTIMATOR, TAG_MONITOR, TAG_SEARCH};
use crate::stream::{Observation, SlidingWindow, Subspace, SubspaceMap};

/// Engine parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Sliding window size (w).
    pub window_size: usize,
    /// Steps between update rounds (v).
    pub step_size: usize,
    /// Dimensions re-searched per update round (L).
    pub plays: usize,
    /// Exponential smoothing weight on the previous quality.
    pub gamma: f64,
    pub estimator: EstimatorConfig,
    pub policy: PolicyKind,
    /// Refresh raw quality estimates at every step; switching this off
    /// restricts monitoring to update rounds and trades fidelity for speed.
    pub monitor_every_step: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            window_size: 1000,
            step_size: 2,
            plays: 1,
            gamma: 0.9,
            estimator: EstimatorConfig::default(),
            policy: PolicyKind::ThompsonSampling,
            monitor_every_step: true,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_size < 2 {
            return Err(Error::InvalidConfig("window size must be at least 2".into()));
        }
        if self.step_size == 0 {
            return Err(Error::InvalidConfig("step size must be at least 1".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "smoothing weight must lie in (0,1), got {}",
                self.gamma
            )));
        }
        self.estimator.validate()
    }
}

/// Smoothed and most recent raw quality per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorState {
    pub smoothed: Vec<f64>,
    pub last_raw: Vec<f64>,
}

impl MonitorState {
    fn new(qualities: Vec<f64>) -> Self {
        MonitorState {
            smoothed: qualities.clone(),
            last_raw: qualities,
        }
    }
}

/// One-step exponential smoothing.
pub fn smooth(gamma: f64, previous: f64, fresh: f64) -> f64 {
    gamma * previous + (1.0 - gamma) * fresh
}

/// Engine state emitted after each step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: u64,
    pub subspaces: Vec<Subspace>,
    /// Smoothed quality per dimension.
    pub qualities: Vec<f64>,
    /// Dimensions selected for re-search at this step, empty between rounds.
    pub selected: Vec<usize>,
    /// Per selected dimension: whether the fresh search found a different,
    /// better subspace.
    pub successes: Vec<bool>,
}

impl Snapshot {
    pub fn map(&self) -> SubspaceMap {
        SubspaceMap::new(self.subspaces.clone())
    }
}

/// Searches a subspace for every dimension of the window at time `t` and
/// reports the per-dimension qualities alongside.
///
/// This is the initialisation step; the gold baseline re-runs it each round.
pub fn initialise_map(
    window: &SlidingWindow,
    estimator: &Estimator,
    base_seed: u64,
    t: u64,
) -> Result<(SubspaceMap, Vec<f64>)> {
    let d = window.dims();
    let results: Vec<_> = (0..d)
        .into_par_iter()
        .map(|dim| search(window, dim, estimator, search_seed(base_seed, t, dim)))
        .collect::<Result<_>>()?;
    let qualities = results.iter().map(|r| r.quality).collect();
    let map = SubspaceMap::new(results.into_iter().map(|r| r.subspace).collect());
    Ok((map, qualities))
}

fn search_seed(base: u64, t: u64, dim: usize) -> u64 {
    seeding::mix(base, &[STREAM_ESTIMATOR, TAG_SEARCH, t, dim as u64])
}

fn monitor_seed(base: u64, t: u64, dim: usize) -> u64 {
    seeding::mix(base, &[STREAM_ESTIMATOR, TAG_MONITOR, t, dim as u64])
}

/// Streaming subspace monitor.
pub struct Engine {
    cfg: EngineConfig,
    d: usize,
    window: SlidingWindow,
    estimator: Estimator,
    policy: Policy,
    map: Option<SubspaceMap>,
    monitor: Option<MonitorState>,
    t: u64,
}

impl Engine {
    pub fn new(d: usize, cfg: EngineConfig) -> Result<Self> {
        cfg.validate()?;
        if d < 2 {
            return Err(Error::InvalidConfig(format!(
                "the engine needs at least 2 dimensions, got {d}"
            )));
        }
        if cfg.plays > d {
            return Err(Error::PlaysOutOfRange { plays: cfg.plays, d });
        }
        let estimator = Estimator::new(&cfg.estimator)?;
        let policy = Policy::new(cfg.policy, d, cfg.estimator.seed);
        Ok(Engine {
            window: SlidingWindow::new(cfg.window_size, d),
            d,
            estimator,
            policy,
            map: None,
            monitor: None,
            t: 0,
            cfg,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn dims(&self) -> usize {
        self.d
    }

    /// Time index of the most recently ingested observation.
    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn window(&self) -> &SlidingWindow {
        &self.window
    }

    pub fn map(&self) -> Option<&SubspaceMap> {
        self.map.as_ref()
    }

    pub fn monitor(&self) -> Option<&MonitorState> {
        self.monitor.as_ref()
    }

    /// Total quality estimates spent so far.
    pub fn evaluation_count(&self) -> u64 {
        self.estimator.evaluation_count()
    }

    /// Ingests one observation. Emits a snapshot once the window is full:
    /// the initialisation snapshot at t = w, then one per maintenance step.
    pub fn push(&mut self, obs: Observation) -> Result<Option<Snapshot>> {
        self.window.push(obs)?;
        self.t += 1;

        if self.map.is_none() {
            if !self.window.is_full() {
                return Ok(None);
            }
            let (map, qualities) =
                initialise_map(&self.window, &self.estimator, self.base_seed(), self.t)?;
            self.map = Some(map);
            self.monitor = Some(MonitorState::new(qualities));
            return Ok(Some(self.snapshot(Vec::new(), Vec::new())));
        }

        let step = self.t - self.cfg.window_size as u64;
        let update_round = step % self.cfg.step_size as u64 == 0;

        if self.cfg.monitor_every_step || update_round {
            self.monitor_step()?;
        }

        let (selected, successes) = if update_round && self.cfg.plays > 0 {
            let monitor = self.monitor.as_ref().expect("initialised");
            let decision =
                self.policy
                    .select(self.t, self.cfg.window_size, self.cfg.plays, &monitor.smoothed)?;
            let successes = self.update_step(&decision.selected)?;
            (decision.selected, successes)
        } else {
            (Vec::new(), Vec::new())
        };

        Ok(Some(self.snapshot(selected, successes)))
    }

    fn base_seed(&self) -> u64 {
        self.cfg.estimator.seed
    }

    /// Refreshes the raw quality of every dimension's current subspace and
    /// folds it into the smoothed quality.
    fn monitor_step(&mut self) -> Result<()> {
        let map = self.map.as_ref().expect("initialised");
        let base = self.base_seed();
        let t = self.t;
        let estimator = &self.estimator;
        let window = &self.window;
        let raws: Vec<f64> = (0..self.d)
            .into_par_iter()
            .map(|dim| {
                estimator
                    .contrast(window, map.get(dim), dim, monitor_seed(base, t, dim))
                    .map(|q| q.value)
            })
            .collect::<Result<_>>()?;
        let monitor = self.monitor.as_mut().expect("initialised");
        for (dim, raw) in raws.into_iter().enumerate() {
            monitor.smoothed[dim] = smooth(self.cfg.gamma, monitor.smoothed[dim], raw);
            monitor.last_raw[dim] = raw;
        }
        Ok(())
    }

    /// Re-searches the selected dimensions. A search succeeds when it yields
    /// a different subspace of strictly higher quality than the smoothed
    /// quality of the current one; bandit rewards follow the success flag.
    /// Batch and gold replace the subspace regardless.
    fn update_step(&mut self, selected: &[usize]) -> Result<Vec<bool>> {
        let base = self.base_seed();
        let t = self.t;
        let estimator = &self.estimator;
        let window = &self.window;
        let results: Vec<_> = selected
            .par_iter()
            .map(|&dim| search(window, dim, estimator, search_seed(base, t, dim)))
            .collect::<Result<_>>()?;

        let map = self.map.as_mut().expect("initialised");
        let monitor = self.monitor.as_mut().expect("initialised");
        let mut successes = Vec::with_capacity(selected.len());
        for (&dim, result) in selected.iter().zip(results) {
            let improved = result.quality > monitor.smoothed[dim];
            let different = result.subspace != *map.get(dim);
            let success = improved && different;
            if success || self.cfg.policy.replaces_unconditionally() {
                map.set(dim, result.subspace);
                // The smoothed history belongs to the old subspace.
                monitor.smoothed[dim] = result.quality;
                monitor.last_raw[dim] = result.quality;
            }
            self.policy.reward(dim, success)?;
            successes.push(success);
        }
        Ok(successes)
    }

    fn snapshot(&self, selected: Vec<usize>, successes: Vec<bool>) -> Snapshot {
        let map = self.map.as_ref().expect("initialised");
        let monitor = self.monitor.as_ref().expect("initialised");
        Snapshot {
            t: self.t,
            subspaces: map.entries().to_vec(),
            qualities: monitor.smoothed.clone(),
            selected,
            successes,
        }
    }
}

/// Runs the engine over a whole stream, collecting one snapshot per step
/// from t = w on.
pub fn run(
    observations: impl IntoIterator<Item = Observation>,
    cfg: &EngineConfig,
) -> Result<Vec<Snapshot>> {
    let mut iter = observations.into_iter();
    let first = match iter.next() {
        Some(obs) => obs,
        None => {
            return Err(Error::StreamTooShort {
                required: cfg.window_size,
                got: 0,
            })
        }
    };
    let mut engine = Engine::new(first.values.len(), cfg.clone())?;
    let mut snapshots = Vec::new();
    if let Some(s) = engine.push(first)? {
        snapshots.push(s);
    }
    for obs in iter {
        if let Some(s) = engine.push(obs)? {
            snapshots.push(s);
        }
    }
    if snapshots.is_empty() {
        return Err(Error::StreamTooShort {
            required: cfg.window_size,
            got: engine.time() as usize,
        });
    }
    Ok(snapshots)
}
