use sgmrd::benchgen::{generate, GeneratorConfig};
use sgmrd::engine::{run, EngineConfig, Snapshot};
use sgmrd::estimator::EstimatorConfig;
use sgmrd::outliers::{best_k_sweep, ScoreConfig, DEFAULT_K_GRID};

fn main() {
    let args: Vec<f64> = std::env::args().skip(1).take(2).map(|a| a.parse().unwrap()).collect();
    unsafe {
        sgmrd::benchgen::set_delta_range_for_probe((args[0], args[1]));
    }
    let seed: u64 = std::env::var("SEED").map(|v| v.parse().unwrap()).unwrap_or(1);
    let gen_cfg = GeneratorConfig::new(10, seed);
    let data = generate(&gen_cfg).unwrap();
    let e = gen_cfg.per_phase;
    let iterations: usize = std::env::var("M").map(|v| v.parse().unwrap()).unwrap_or(100);
    let cfg = EngineConfig {
        estimator: EstimatorConfig { iterations, seed, ..Default::default() },
        ..Default::default()
    };
    let snaps = run(data.observations.clone(), &cfg).unwrap();

    let (mut planted_steps, mut subset_hits, mut pair_hits) = (0usize, 0usize, 0usize);
    for s in &snaps {
        let i = (s.t - 1) as usize;
        for p in data.truth.active_at(i / e, i % e) {
            for &dim in p.subspace.dims() {
                planted_steps += 1;
                let entry = &s.subspaces[dim];
                if entry.dims().iter().all(|d| p.subspace.contains(*d)) {
                    subset_hits += 1;
                }
                if entry.dims().iter().filter(|d| p.subspace.contains(**d)).count() >= 2 {
                    pair_hits += 1;
                }
            }
        }
    }
    println!(
        "map relevance: subset {:.3} contains-pair {:.3}",
        subset_hits as f64 / planted_steps as f64,
        pair_hits as f64 / planted_steps as f64
    );

    let truth_snaps: Vec<Snapshot> = (1000..=data.observations.len() as u64).map(|t| {
        let i = (t - 1) as usize;
        let subspaces = data.truth.active_at(i / e, i % e).iter().map(|p| p.subspace.clone()).collect();
        Snapshot { t, subspaces, qualities: vec![], selected: vec![], successes: vec![] }
    }).collect();
    let score_cfg = ScoreConfig { window_size: 1000, eval_every: 100 };
    let ceiling = best_k_sweep(&data.observations, &truth_snaps, &DEFAULT_K_GRID, &score_cfg).unwrap();
    let ours = best_k_sweep(&data.observations, &snaps, &DEFAULT_K_GRID, &score_cfg).unwrap();
    println!("ceiling {:.4} (k={}) vs ours {:.4} (k={})", ceiling.best_auc, ceiling.best_k, ours.best_auc, ours.best_k);
}
