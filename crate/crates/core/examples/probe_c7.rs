use sgmrd::benchgen::{generate, GeneratorConfig};
use sgmrd::engine::{run, EngineConfig};
use sgmrd::estimator::EstimatorConfig;
use sgmrd::metrics::{self, MonitorLog};
use sgmrd::policy::PolicyKind;
use sgmrd::stream::Observation;
use rayon::prelude::*;

fn quality(policy: PolicyKind, stream: &[Observation], seed: u64) -> f64 {
    let cfg = EngineConfig {
        window_size: 1000,
        step_size: 2,
        plays: 1,
        gamma: 0.9,
        estimator: EstimatorConfig { iterations: 10, slice_mass: 0.5, seed },
        policy,
        monitor_every_step: true,
    };
    let snaps = run(stream.to_vec(), &cfg).unwrap();
    let log = MonitorLog::from_snapshots(&snaps).unwrap();
    metrics::average_quality(&log).overall
}

fn main() {
    let t0 = std::time::Instant::now();
    let data = generate(&GeneratorConfig::new(20, 4242)).unwrap();
    let seeds: Vec<u64> = (0..10).collect();
    for policy in [PolicyKind::ThompsonSampling, PolicyKind::Greedy, PolicyKind::Init, PolicyKind::Gold] {
        let t1 = std::time::Instant::now();
        let vals: Vec<f64> = seeds.par_iter().map(|&s| quality(policy, &data.observations, s)).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        println!("{:>5}: Q = {mean:.4} ({:?}) per-seed {:?}", policy.name(), t1.elapsed(),
            vals.iter().map(|v| (v*1000.0).round()/1000.0).collect::<Vec<_>>());
    }
    println!("total {:?}", t0.elapsed());
}
