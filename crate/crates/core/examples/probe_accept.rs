use sgmrd::benchgen::{generate, GeneratorConfig};
use sgmrd::engine::{run, EngineConfig, Snapshot};
use sgmrd::estimator::EstimatorConfig;
use sgmrd::outliers::{best_k_sweep, ScoreConfig, DEFAULT_K_GRID};
use sgmrd::stream::Subspace;
use rayon::prelude::*;

fn full_space_snapshots(d: usize, from_t: u64, to_t: u64) -> Vec<Snapshot> {
    let full = Subspace::new(0..d);
    (from_t..=to_t)
        .map(|t| Snapshot { t, subspaces: vec![full.clone(); d], qualities: vec![0.0; d], selected: vec![], successes: vec![] })
        .collect()
}

fn main() {
    let range: (f64, f64) = (
        std::env::args().nth(1).unwrap().parse().unwrap(),
        std::env::args().nth(2).unwrap().parse().unwrap(),
    );
    unsafe {
        sgmrd::benchgen::set_delta_range_for_probe(range);
    }
    let dims: usize = std::env::var("DIMS").map(|v| v.parse().unwrap()).unwrap_or(10);
    let seeds: u64 = std::env::var("SEEDS").map(|v| v.parse().unwrap()).unwrap_or(4);
    let results: Vec<(f64, f64)> = (1u64..=seeds).into_par_iter().map(|seed| {
        let mut gen_cfg = GeneratorConfig::new(dims, seed);
        if let Ok(m) = std::env::var("MAXDIM") {
            gen_cfg.max_subspace_dim = m.parse().unwrap();
        }
        let data = generate(&gen_cfg).unwrap();
        let iterations: usize = std::env::var("M").map(|v| v.parse().unwrap()).unwrap_or(100);
        let step_size: usize = std::env::var("V").map(|v| v.parse().unwrap()).unwrap_or(2);
        let cfg = EngineConfig {
            step_size,
            estimator: EstimatorConfig { iterations, seed, ..Default::default() },
            ..Default::default()
        };
        let snaps = run(data.observations.clone(), &cfg).unwrap();
        let score_cfg = ScoreConfig { window_size: 1000, eval_every: 100 };
        let ours = best_k_sweep(&data.observations, &snaps, &DEFAULT_K_GRID, &score_cfg).unwrap();
        let baseline_snaps = full_space_snapshots(dims, 1000, data.observations.len() as u64);
        let base = best_k_sweep(&data.observations, &baseline_snaps, &DEFAULT_K_GRID, &score_cfg).unwrap();
        (ours.best_auc, base.best_auc)
    }).collect();
    let mean_a = results.iter().map(|r| r.0).sum::<f64>() / results.len() as f64;
    let mean_b = results.iter().map(|r| r.1).sum::<f64>() / results.len() as f64;
    let per: Vec<String> = results.iter().map(|(a,b)| format!("{a:.3}/{b:.3}")).collect();
    println!("dims {dims} delta {range:?}: mean sgmrd {mean_a:.4} lof {mean_b:.4} gap {:.4} | per-seed {per:?}", mean_a - mean_b);
}
