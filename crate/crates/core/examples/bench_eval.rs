//! Rough timing of the full-scale log-posterior gradient and a short NUTS run.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::time::Instant;
use xgcf_core::features::{ContextFlags, FeatureMatrix};
use xgcf_core::model::{Model, ModelKind, ModelSpec, PriorMode};
use xgcf_core::nuts::{sample, InitStrategy, SamplerConfig};

fn main() {
    let n = 9_970;
    let p = 148;
    let f = 17;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut x = Array2::zeros((n, f));
    for i in 0..n {
        for j in 0..f {
            x[(i, j)] = if j < 3 { rng.sample::<f64, _>(StandardNormal) } else { f64::from(u8::from(rng.random::<f64>() < 0.3)) };
        }
    }
    let data = FeatureMatrix {
        x,
        y: (0..n).map(|_| u8::from(rng.random::<f64>() < 0.1)).collect(),
        player_idx: (0..n).map(|i| i % p).collect(),
        context_flags: vec![ContextFlags { under_pressure: false, first_time: false, one_on_one: false, penalty_area: false }; n],
        shot_ids: (0..n).map(|i| i.to_string()).collect(),
        teams: vec!["T".into(); n],
    };
    let spec: ModelSpec<f64> = ModelSpec::xg(ModelKind::Hierarchical, PriorMode::WeaklyInformative, p);
    let model = Model::new(&spec, &data, None).unwrap();
    let dim = model.dim();
    println!("dim = {dim}");
    let params: Vec<f64> = (0..dim).map(|_| 0.05 * rng.sample::<f64, _>(StandardNormal)).collect();
    let mut grad = vec![0.0; dim];
    let start = Instant::now();
    let reps = 200;
    let mut acc = 0.0;
    for _ in 0..reps {
        acc += model.log_posterior_and_gradient(&params, &mut grad).unwrap();
    }
    let per = start.elapsed().as_secs_f64() / reps as f64;
    println!("logp+grad: {:.3} ms per eval (acc {acc:.1})", per * 1e3);

    // Short NUTS run to gauge tree depth and transition cost.
    let config = SamplerConfig { chains: 1, warmup: 150, draws: 30, target_accept: 0.95, max_tree_depth: 10, seed: 2, init: InitStrategy::Zero };
    let center = model.default_init();
    let t = Instant::now();
    let draws = sample(&model, &center, &config, model.param_names()).unwrap();
    let elapsed = t.elapsed().as_secs_f64();
    let mean_leap: f64 = draws.chains[0].stats.iter().map(|s| f64::from(s.n_leapfrog)).sum::<f64>() / 30.0;
    let mean_depth: f64 = draws.chains[0].stats.iter().map(|s| f64::from(s.tree_depth)).sum::<f64>() / 30.0;
    println!("180 transitions in {elapsed:.1}s; sampling mean leapfrogs {mean_leap:.1}, mean depth {mean_depth:.1}");
    let _ = model.dim();
}
