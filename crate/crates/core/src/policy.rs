//! Update policies: which dimensions get their subspace re-searched in a
//! round.
//!
//! The bandit policy treats each dimension as an arm with a Beta posterior
//! over its probability of a successful re-search, drawing one sample per arm
//! and playing the top `L`. The remaining policies are baselines: uniform
//! random choice, lowest smoothed quality first, and the schedule-driven
//! batch / init / gold variants that re-run the full initialisation
//! periodically, never, or at every round.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding;

/// The dimensions selected for re-search in one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyDecision {
    /// Selected dimension indices, ascending.
    pub selected: Vec<usize>,
}

impl PolicyDecision {
    fn from_unsorted(mut selected: Vec<usize>) -> Self {
        selected.sort_unstable();
        PolicyDecision { selected }
    }

    pub fn empty() -> Self {
        PolicyDecision { selected: Vec::new() }
    }

    pub fn all(d: usize) -> Self {
        PolicyDecision {
            selected: (0..d).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }
}

/// Per-arm Beta posteriors for the bandit policy.
///
/// `alpha_i + beta_i - 2` equals the number of times arm `i` was played.
#[derive(Debug, Clone)]
pub struct BanditState {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    rng: ChaCha8Rng,
}

impl BanditState {
    /// Uniform prior: all parameters start at 1.
    pub fn new(d: usize, seed: u64) -> Self {
        BanditState {
            alpha: vec![1.0; d],
            beta: vec![1.0; d],
            rng: seeding::rng(seed, &[seeding::STREAM_POLICY]),
        }
    }

    pub fn arms(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// Total plays of an arm.
    pub fn plays(&self, arm: usize) -> f64 {
        self.alpha[arm] + self.beta[arm] - 2.0
    }

    /// Samples every posterior and returns the `plays` arms with the largest
    /// draws, ties to the lowest index. Posterior parameters are unchanged.
    pub fn select(&mut self, plays: usize) -> Result<PolicyDecision> {
        let d = self.arms();
        if plays == 0 || plays > d {
            return Err(Error::PlaysOutOfRange { plays, d });
        }
        let mut sampled: Vec<(f64, usize)> = (0..d)
            .map(|arm| {
                let dist = Beta::new(self.alpha[arm], self.beta[arm])
                    .expect("posterior parameters are >= 1");
                (dist.sample(&mut self.rng), arm)
            })
            .collect();
        sampled.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        Ok(PolicyDecision::from_unsorted(
            sampled[..plays].iter().map(|&(_, arm)| arm).collect(),
        ))
    }

    /// Records the outcome of playing `arm`.
    pub fn reward(&mut self, arm: usize, success: bool) -> Result<()> {
        if arm >= self.arms() {
            return Err(Error::DimensionOutOfRange {
                dim: arm,
                d: self.arms(),
            });
        }
        if success {
            self.alpha[arm] += 1.0;
        } else {
            self.beta[arm] += 1.0;
        }
        Ok(())
    }
}

/// Uniform choice of `plays` distinct dimensions.
pub fn random_selection(d: usize, plays: usize, rng: &mut impl Rng) -> Result<PolicyDecision> {
    if plays > d {
        return Err(Error::PlaysOutOfRange { plays, d });
    }
    Ok(PolicyDecision::from_unsorted(
        rand::seq::index::sample(rng, d, plays).into_vec(),
    ))
}

/// The `plays` dimensions with the smallest smoothed quality, ties to the
/// lowest index.
pub fn lowest_quality_selection(qualities: &[f64], plays: usize) -> Result<PolicyDecision> {
    let d = qualities.len();
    if plays > d {
        return Err(Error::PlaysOutOfRange { plays, d });
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| qualities[a].partial_cmp(&qualities[b]).unwrap().then(a.cmp(&b)));
    Ok(PolicyDecision::from_unsorted(order[..plays].to_vec()))
}

/// Schedule-driven baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// All dimensions whenever `t` is a multiple of the window size.
    Batch,
    /// Never.
    Init,
    /// All dimensions, every round.
    Gold,
}

pub fn scheduled_selection(schedule: Schedule, t: u64, window_size: usize, d: usize) -> PolicyDecision {
    match schedule {
        Schedule::Batch => {
            if t % window_size as u64 == 0 {
                PolicyDecision::all(d)
            } else {
                PolicyDecision::empty()
            }
        }
        Schedule::Init => PolicyDecision::empty(),
        Schedule::Gold => PolicyDecision::all(d),
    }
}

/// All supported update policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    #[serde(rename = "ts")]
    ThompsonSampling,
    #[serde(rename = "rd")]
    Random,
    #[serde(rename = "gd")]
    Greedy,
    Batch,
    Init,
    Gold,
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::ThompsonSampling => "ts",
            PolicyKind::Random => "rd",
            PolicyKind::Greedy => "gd",
            PolicyKind::Batch => "batch",
            PolicyKind::Init => "init",
            PolicyKind::Gold => "gold",
        }
    }

    /// Batch and gold re-run the initialisation, so a selected dimension's
    /// subspace is replaced whether or not the fresh search improved on it.
    pub fn replaces_unconditionally(&self) -> bool {
        matches!(self, PolicyKind::Batch | PolicyKind::Gold)
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ts" => Ok(PolicyKind::ThompsonSampling),
            "rd" => Ok(PolicyKind::Random),
            "gd" => Ok(PolicyKind::Greedy),
            "batch" => Ok(PolicyKind::Batch),
            "init" => Ok(PolicyKind::Init),
            "gold" => Ok(PolicyKind::Gold),
            other => Err(Error::InvalidConfig(format!(
                "unknown policy {other:?}, expected ts|rd|gd|batch|init|gold"
            ))),
        }
    }
}

/// Engine-facing dispatcher owning the policy's random state.
#[derive(Debug)]
pub struct Policy {
    kind: PolicyKind,
    d: usize,
    bandit: BanditState,
    rng: ChaCha8Rng,
}

impl Policy {
    pub fn new(kind: PolicyKind, d: usize, seed: u64) -> Self {
        Policy {
            kind,
            d,
            bandit: BanditState::new(d, seed),
            rng: seeding::rng(seed, &[seeding::STREAM_POLICY, 1]),
        }
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn bandit(&self) -> &BanditState {
        &self.bandit
    }

    pub fn select(
        &mut self,
        t: u64,
        window_size: usize,
        plays: usize,
        qualities: &[f64],
    ) -> Result<PolicyDecision> {
        if plays == 0 {
            return Ok(PolicyDecision::empty());
        }
        match self.kind {
            PolicyKind::ThompsonSampling => self.bandit.select(plays),
            PolicyKind::Random => random_selection(self.d, plays, &mut self.rng),
            PolicyKind::Greedy => lowest_quality_selection(qualities, plays),
            PolicyKind::Batch => Ok(scheduled_selection(Schedule::Batch, t, window_size, self.d)),
            PolicyKind::Init => Ok(scheduled_selection(Schedule::Init, t, window_size, self.d)),
            PolicyKind::Gold => Ok(scheduled_selection(Schedule::Gold, t, window_size, self.d)),
        }
    }

    /// Posterior update; a no-op for every policy but the bandit.
    pub fn reward(&mut self, arm: usize, success: bool) -> Result<()> {
        if self.kind == PolicyKind::ThompsonSampling {
            self.bandit.reward(arm, success)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn select_all_arms() {
        let mut state = BanditState::new(5, 1);
        let decision = state.select(5).unwrap();
        assert_eq!(decision.selected, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn select_rejects_bad_plays() {
        let mut state = BanditState::new(3, 1);
        assert!(state.select(0).is_err());
        assert!(state.select(4).is_err());
    }

    #[test]
    fn uniform_prior_is_symmetric() {
        let d = 10;
        let plays = 3;
        let mut state = BanditState::new(d, 7);
        let mut counts = vec![0usize; d];
        let draws = 10_000;
        for _ in 0..draws {
            for &arm in &state.select(plays).unwrap().selected {
                counts[arm] += 1;
            }
        }
        let expected = plays as f64 / d as f64;
        for (arm, &count) in counts.iter().enumerate() {
            let freq = count as f64 / draws as f64;
            assert!(
                (freq - expected).abs() < 0.02,
                "arm {arm}: frequency {freq}"
            );
        }
    }

    #[test]
    fn concentrated_posterior_dominates() {
        let mut state = BanditState::new(4, 9);
        state.alpha = vec![100.0, 1.0, 1.0, 1.0];
        state.beta = vec![1.0, 100.0, 100.0, 100.0];
        let draws = 10_000;
        let mut hits = 0;
        for _ in 0..draws {
            if state.select(1).unwrap().selected == [0] {
                hits += 1;
            }
        }
        assert!(hits as f64 / draws as f64 > 0.99, "hits = {hits}");
    }

    #[test]
    fn reward_updates_single_arm() {
        let mut state = BanditState::new(3, 1);
        state.reward(0, true).unwrap();
        assert_eq!((state.alpha[0], state.beta[0]), (2.0, 1.0));
        state.reward(1, false).unwrap();
        assert_eq!((state.alpha[1], state.beta[1]), (1.0, 2.0));
        for _ in 0..10 {
            state.reward(2, true).unwrap();
        }
        for _ in 0..5 {
            state.reward(2, false).unwrap();
        }
        assert_eq!((state.alpha[2], state.beta[2]), (11.0, 6.0));
        assert_eq!(state.plays(2), 15.0);
        assert!(state.reward(3, true).is_err());
    }

    #[test]
    fn select_does_not_mutate_posteriors() {
        let mut state = BanditState::new(4, 3);
        state.reward(1, true).unwrap();
        let (alpha, beta) = (state.alpha.clone(), state.beta.clone());
        state.select(2).unwrap();
        assert_eq!(state.alpha, alpha);
        assert_eq!(state.beta, beta);
    }

    #[test]
    fn select_deterministic_given_seed() {
        let run = || {
            let mut state = BanditState::new(8, 42);
            (0..20).map(|_| state.select(2).unwrap().selected).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn random_selection_is_uniform() {
        let mut rng = seeding::rng(5, &[]);
        assert_eq!(random_selection(4, 4, &mut rng).unwrap().selected, vec![0, 1, 2, 3]);
        assert!(random_selection(4, 0, &mut rng).unwrap().is_empty());
        assert!(random_selection(4, 5, &mut rng).is_err());

        let d = 10;
        let draws = 10_000;
        let mut counts = vec![0usize; d];
        for _ in 0..draws {
            counts[random_selection(d, 1, &mut rng).unwrap().selected[0]] += 1;
        }
        for (dim, &count) in counts.iter().enumerate() {
            let freq = count as f64 / draws as f64;
            assert!((freq - 0.1).abs() < 0.01, "dim {dim}: frequency {freq}");
        }
    }

    #[test]
    fn lowest_quality_first() {
        let q = [0.9, 0.1, 0.5];
        assert_eq!(lowest_quality_selection(&q, 1).unwrap().selected, vec![1]);
        assert_eq!(lowest_quality_selection(&q, 3).unwrap().selected, vec![0, 1, 2]);
        let even = [0.4, 0.4, 0.4];
        assert_eq!(lowest_quality_selection(&even, 1).unwrap().selected, vec![0]);
    }

    #[test]
    fn schedules() {
        assert!(scheduled_selection(Schedule::Init, 123, 1000, 4).is_empty());
        assert_eq!(scheduled_selection(Schedule::Gold, 123, 1000, 4).selected, vec![0, 1, 2, 3]);
        assert_eq!(scheduled_selection(Schedule::Batch, 2000, 1000, 3).len(), 3);
        assert!(scheduled_selection(Schedule::Batch, 2001, 1000, 3).is_empty());
    }

    #[test]
    fn policy_names_round_trip() {
        for kind in [
            PolicyKind::ThompsonSampling,
            PolicyKind::Random,
            PolicyKind::Greedy,
            PolicyKind::Batch,
            PolicyKind::Init,
            PolicyKind::Gold,
        ] {
            assert_eq!(kind.name().parse::<PolicyKind>().unwrap(), kind);
        }
        assert!("nope".parse::<PolicyKind>().is_err());
    }

    /// Bernoulli bandit environment: the bandit should concentrate its plays
    /// on the one profitable arm.
    #[test]
    fn bandit_concentrates_on_best_arm() {
        let d = 10;
        let rounds = 3000;
        let mut good_runs = 0;
        let runs = 6;
        for run in 0..runs {
            let mut env_rng = seeding::rng(7000 + run, &[]);
            let mut state = BanditState::new(d, 100 + run);
            let mut arm0_plays = 0;
            for _ in 0..rounds {
                let arm = state.select(1).unwrap().selected[0];
                let mu = if arm == 0 { 0.8 } else { 0.2 };
                let success = env_rng.gen::<f64>() < mu;
                state.reward(arm, success).unwrap();
                if arm == 0 {
                    arm0_plays += 1;
                }
            }
            if arm0_plays as f64 / rounds as f64 > 0.85 {
                good_runs += 1;
            }
        }
        assert!(good_runs >= runs - 1, "only {good_runs}/{runs} runs concentrated");
    }
}
