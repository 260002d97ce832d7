//! Acceptance suite: every release criterion as one test with a printed
//! pass/fail line. Tolerances and thresholds are pinned in the assertions.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use common::*;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use xgcf_core::counterfactual::{
    counterfactual_xg, delta_xg, fats, hdi, team_context_weights, ContextPartition, ShotSet,
};
use xgcf_core::diagnostics::{bfmi, convergence_report, ess_bulk, split_rhat};
use xgcf_core::features::{ContextFlag, ContextFlags, FeatureMatrix};
use xgcf_core::model::{
    fit, CoefPrior, Model, ModelKind, ModelSpec, PriorMode,
};
use xgcf_core::num::norm_cdf;
use xgcf_core::nuts::{sample, InitStrategy, LogDensityGradient, SamplerConfig};

fn quick_sampler(chains: usize, warmup: usize, draws: usize, seed: u64) -> SamplerConfig {
    SamplerConfig {
        chains,
        warmup,
        draws,
        target_accept: 0.9,
        max_tree_depth: 10,
        seed,
        init: InitStrategy::Map,
    }
}

// ---------------------------------------------------------------------------
// Criterion 1: analytic gradient vs central finite differences.
// ---------------------------------------------------------------------------

#[test]
fn c01_gradient_correctness() {
    let started = Instant::now();
    let spec = ModelSpec::<f64> {
        kind: ModelKind::Hierarchical,
        prior_mode: PriorMode::WeaklyInformative,
        n_players: 3,
        feature_names: (0..4).map(|j| format!("f{j}")).collect(),
        intercept_prior: (-1.0, 0.8),
        coef_priors: vec![
            CoefPrior::SkewNormal { location: -0.5, scale: 1.0, shape: -4.0 },
            CoefPrior::SkewNormal { location: 0.3, scale: 1.0, shape: 4.0 },
            CoefPrior::Normal { mean: 0.0, sd: 5.0 },
            CoefPrior::Normal { mean: 0.0, sd: 2.0 },
        ],
        group_names: vec!["a".into(), "b".into()],
        group_scales: vec![0.4, 1.2],
        feature_group: vec![0, 1, 0, 1],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let n = 48;
    let mut x = Array2::zeros((n, 4));
    let mut y = Vec::new();
    let mut player_idx = Vec::new();
    for i in 0..n {
        for j in 0..4 {
            x[(i, j)] = rng.sample::<f64, _>(StandardNormal);
        }
        y.push(u8::from(rng.random::<f64>() < 0.35));
        player_idx.push(i % 3);
    }
    let data = FeatureMatrix {
        x,
        y,
        player_idx,
        context_flags: vec![
            ContextFlags {
                under_pressure: false,
                first_time: false,
                one_on_one: false,
                penalty_area: false
            };
            n
        ],
        shot_ids: (0..n).map(|i| format!("s{i}")).collect(),
        teams: vec!["T".into(); n],
    };
    let model = Model::new(&spec, &data, None).unwrap();
    let dim = model.dim();
    let h = 1e-5;

    let mut worst = 0.0_f64;
    let mut grad = vec![0.0; dim];
    let mut scratch = vec![0.0; dim];
    for _ in 0..50 {
        let params: Vec<f64> = (0..dim)
            .map(|_| 0.8 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        model.log_posterior_and_gradient(&params, &mut grad).unwrap();
        let mut point = params.clone();
        for i in 0..dim {
            point[i] = params[i] + h;
            let fp = model.log_posterior_and_gradient(&point, &mut scratch).unwrap();
            point[i] = params[i] - h;
            let fm = model.log_posterior_and_gradient(&point, &mut scratch).unwrap();
            point[i] = params[i];
            let fd = (fp - fm) / (2.0 * h);
            let rel = (grad[i] - fd).abs() / grad[i].abs().max(fd.abs()).max(1.0);
            worst = worst.max(rel);
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    report(
        "C1 gradient-correctness",
        worst < 1e-6 && elapsed < 5.0,
        &format!("max rel err {worst:.2e} over 50 points, {elapsed:.2}s"),
    );
}

// ---------------------------------------------------------------------------
// Criterion 2: sampler calibration on a 10-D standard normal.
// ---------------------------------------------------------------------------

struct StdNormal {
    dim: usize,
}

impl LogDensityGradient<f64> for StdNormal {
    fn dim(&self) -> usize {
        self.dim
    }

    fn logp_and_grad(&self, q: &[f64], grad: &mut [f64]) -> f64 {
        let mut lp = 0.0;
        for i in 0..q.len() {
            lp -= 0.5 * q[i] * q[i];
            grad[i] = -q[i];
        }
        lp
    }
}

#[test]
fn c02_sampler_calibration() {
    let started = Instant::now();
    let target = StdNormal { dim: 10 };
    let config = SamplerConfig {
        chains: 4,
        warmup: 500,
        draws: 2_000,
        target_accept: 0.9,
        max_tree_depth: 10,
        seed: 7,
        init: InitStrategy::Zero,
    };
    let names = (0..10).map(|i| format!("q{i}")).collect();
    let draws = sample(&target, &[0.0; 10], &config, names).unwrap();
    let pooled = draws.pooled();

    let mut worst_mean = 0.0_f64;
    let mut worst_var = 0.0_f64;
    for j in 0..10 {
        let (m, sd) = column_stats(&pooled, j);
        worst_mean = worst_mean.max(m.abs());
        worst_var = worst_var.max((sd * sd - 1.0).abs());
    }
    let divergences = draws.total_divergences();
    let coord0: Vec<f64> = pooled.column(0).to_vec();
    let ks = ks_statistic(&coord0, norm_cdf);
    let elapsed = started.elapsed().as_secs_f64();

    report(
        "C2 sampler-calibration",
        worst_mean < 0.05 && worst_var < 0.1 && divergences == 0 && ks < 0.02 && elapsed < 60.0,
        &format!(
            "max |mean| {worst_mean:.3}, max |var-1| {worst_var:.3}, divergences {divergences}, KS {ks:.4}, {elapsed:.1}s"
        ),
    );
}

// ---------------------------------------------------------------------------
// Criterion 3: baseline parameter recovery and HDI coverage.
// ---------------------------------------------------------------------------

#[test]
fn c03_parameter_recovery() {
    let started = Instant::now();
    let n_runs = 20;
    let truth_alpha = -3.0;
    let n_coefs = 18;
    let mut covered = vec![0u32; n_coefs];
    let mut first_run_ok = true;
    let mut first_run_worst = 0.0_f64;

    for run in 0..n_runs {
        let mut spec = LeagueSpec::new(vec![50; 40], 100 + run);
        spec.gamma_spread = [0.0; 4];
        spec.zero_gamma = true;
        spec.alpha = truth_alpha;
        let league = gen_league(&spec);
        assert_eq!(league.matrix.n_shots(), 2_000);

        let model_spec: ModelSpec<f64> =
            ModelSpec::xg(ModelKind::Baseline, PriorMode::WeaklyInformative, 40);
        let config = quick_sampler(2, 300, 350, 1_000 + run);
        let result = fit(&model_spec, &league.matrix, None, &config).unwrap();
        let pooled = result.draws.pooled();

        let mut truth = vec![truth_alpha];
        truth.extend_from_slice(&league.beta);
        for (j, &t) in truth.iter().enumerate() {
            let column: Vec<f64> = pooled.column(j).to_vec();
            let (m, sd) = column_stats(&pooled, j);
            if run == 0 {
                let dev = (m - t).abs() / sd;
                first_run_worst = first_run_worst.max(dev);
                if dev >= 3.0 {
                    first_run_ok = false;
                }
            }
            let (lo, hi) = hdi(&column, 0.95);
            if lo <= t && t <= hi {
                covered[j] += 1;
            }
        }
    }
    let min_coverage = *covered.iter().min().unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    report(
        "C3 parameter-recovery",
        first_run_ok && min_coverage >= 16 && elapsed < 600.0,
        &format!(
            "seed-0 worst |mean-truth|/sd {first_run_worst:.2}, min HDI coverage {min_coverage}/20, {elapsed:.0}s"
        ),
    );
}

// ---------------------------------------------------------------------------
// Criteria 4 and 5: partial pooling and expert-prior uncertainty reduction.
// ---------------------------------------------------------------------------

fn pooling_counts() -> Vec<usize> {
    let mut counts = vec![5; 10];
    counts.extend(vec![50; 8]);
    counts.extend(vec![500; 8]);
    counts.extend(vec![100; 80]);
    counts
}

const POOLING_PROBES: usize = 26;

fn fit_small(hier: &SmallHier, expert: bool, seed: u64) -> xgcf_core::PosteriorDraws64 {
    let spec = ModelSpec {
        prior_mode: if expert {
            PriorMode::ExpertInformed
        } else {
            PriorMode::WeaklyInformative
        },
        ..hier.spec.clone()
    };
    let mu = if expert { Some(&hier.mu) } else { None };
    let config = quick_sampler(2, 500, 500, seed);
    fit(&spec, &hier.data, mu, &config).unwrap().draws
}

/// Posterior mean of the reconstructed player effects.
fn posterior_gamma_mean(hier: &SmallHier, draws: &xgcf_core::PosteriorDraws64, expert: bool) -> Array2<f64> {
    let spec = ModelSpec {
        prior_mode: if expert {
            PriorMode::ExpertInformed
        } else {
            PriorMode::WeaklyInformative
        },
        ..hier.spec.clone()
    };
    let mu = if expert { Some(&hier.mu) } else { None };
    let model = Model::new(&spec, &hier.data, mu).unwrap();
    let pooled = draws.pooled();
    let p = hier.counts.len();
    let f = hier.spec.n_features();
    let mut total = Array2::zeros((p, f));
    for row in pooled.rows() {
        let gamma = model.gamma_matrix(row.as_slice().unwrap());
        total += &gamma;
    }
    total / pooled.nrows() as f64
}

#[test]
fn c04_partial_pooling() {
    let counts = pooling_counts();
    let hier = gen_small_hier(&counts, POOLING_PROBES, 1.6, 21);
    let draws = fit_small(&hier, true, 210);
    let gamma_mean = posterior_gamma_mean(&hier, &draws, true);

    // Mean |posterior gamma - mu| per shot-count bucket of the probe
    // players, whose true deviations equal their prior means.
    let f = hier.spec.n_features();
    let mut bucket_dist = BTreeMap::new();
    for (i, &count) in counts.iter().enumerate().take(POOLING_PROBES) {
        let d: f64 = (0..f)
            .map(|j| (gamma_mean[(i, j)] - hier.mu.mu[(i, j)]).abs())
            .sum::<f64>()
            / f as f64;
        let entry = bucket_dist.entry(count).or_insert((0.0, 0));
        entry.0 += d;
        entry.1 += 1;
    }
    let d5 = bucket_dist[&5].0 / f64::from(bucket_dist[&5].1);
    let d50 = bucket_dist[&50].0 / f64::from(bucket_dist[&50].1);
    let d500 = bucket_dist[&500].0 / f64::from(bucket_dist[&500].1);
    let monotone = d5 >= d50 && d50 >= d500;

    // The 5-shot bucket's posterior means must sit closer to mu than the
    // data-only MLE in at least 90% of players.
    let mut closer = 0;
    let mut low_data_players = 0;
    for (i, &count) in counts.iter().enumerate().take(POOLING_PROBES) {
        if count != 5 {
            continue;
        }
        low_data_players += 1;
        let mle = player_mle(&hier.data, i, hier.alpha, &hier.beta, 300);
        let d_post: f64 = (0..f)
            .map(|j| (gamma_mean[(i, j)] - hier.mu.mu[(i, j)]).abs())
            .sum();
        let d_mle: f64 = (0..f).map(|j| (mle[j] - hier.mu.mu[(i, j)]).abs()).sum();
        if d_post < d_mle {
            closer += 1;
        }
    }
    let frac = f64::from(closer) / f64::from(low_data_players);

    report(
        "C4 partial-pooling",
        monotone && frac >= 0.9,
        &format!(
            "bucket distances d5 {d5:.3} >= d50 {d50:.3} >= d500 {d500:.3}; {closer}/{low_data_players} low-data players closer to mu than MLE"
        ),
    );
}

#[test]
fn c05_expert_prior_uncertainty_reduction() {
    let counts = pooling_counts();
    let hier = gen_small_hier(&counts, POOLING_PROBES, 1.6, 21);
    let expert = fit_small(&hier, true, 210);
    let weakly = fit_small(&hier, false, 211);

    // Average posterior sd of the mapped (nonzero prior mean) coefficients
    // for the 5-shot players, paired across the two fits.
    let spec = hier.spec.clone();
    let f = spec.n_features();
    let model = Model::new(&spec, &hier.data, Some(&hier.mu)).unwrap();
    let layout = model.layout();

    let sd_of = |draws: &xgcf_core::PosteriorDraws64, player: usize| -> f64 {
        // Posterior sd of gamma(i, f) reconstructed per draw.
        let pooled = draws.pooled();
        let mut acc = 0.0;
        for j in 0..f {
            let values: Vec<f64> = pooled
                .rows()
                .into_iter()
                .map(|row| {
                    let sigma = row[layout.log_sigma(0)].exp();
                    row[layout.gamma_raw(player, j)] * sigma
                })
                .collect();
            acc += variance(&values).sqrt();
        }
        acc / f as f64
    };

    let mut improved = 0;
    let mut low_data_players = 0;
    let mut avg_ratio = 0.0;
    for (i, &count) in counts.iter().enumerate().take(POOLING_PROBES) {
        if count != 5 {
            continue;
        }
        low_data_players += 1;
        let se = sd_of(&expert, i);
        let sw = sd_of(&weakly, i);
        avg_ratio += se / sw;
        if se < sw {
            improved += 1;
        }
    }
    avg_ratio /= f64::from(low_data_players);
    let frac = f64::from(improved) / f64::from(low_data_players);
    report(
        "C5 expert-prior-uncertainty",
        frac >= 0.8,
        &format!(
            "{improved}/{low_data_players} low-data players with strictly smaller posterior sd (mean sd ratio {avg_ratio:.3})"
        ),
    );
}

// ---------------------------------------------------------------------------
// Criterion 6: diagnostics against constructed oracles.
// ---------------------------------------------------------------------------

#[test]
fn c06_diagnostics_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    let mut normal_chain = |n: usize, mean: f64| -> Vec<f64> {
        (0..n).map(|_| mean + rng.sample::<f64, _>(StandardNormal)).collect()
    };

    let base = normal_chain(4_000, 0.0);
    let rhat_dup = split_rhat(&[&base, &base]);

    let a = normal_chain(1_000, 0.0);
    let b = normal_chain(1_000, 5.0);
    let rhat_shift = split_rhat(&[&a, &b]);

    let c1 = normal_chain(2_000, 0.0);
    let c2 = normal_chain(2_000, 0.0);
    let ess_iid = ess_bulk(&[&c1, &c2]);

    let phi = 0.9_f64;
    let innov = (1.0 - phi * phi).sqrt();
    let mut ar1 = |n: usize| -> Vec<f64> {
        let mut x = 0.0;
        (0..n)
            .map(|_| {
                x = phi * x + innov * rng.sample::<f64, _>(StandardNormal);
                x
            })
            .collect()
    };
    let a1 = ar1(4_000);
    let a2 = ar1(4_000);
    let ess_ar1 = ess_bulk(&[&a1, &a2]);
    let ar1_analytic = 8_000.0 * (1.0 - phi) / (1.0 + phi);

    let mut walk = vec![0.0_f64];
    for _ in 1..2_000 {
        walk.push(walk.last().unwrap() + 0.1 * rng.sample::<f64, _>(StandardNormal));
    }
    let bfmi_walk = bfmi(&walk);

    // Score rules on a constructed posterior: a clean run scores 5; each
    // injected defect costs exactly its point.
    let draws_ok = synthetic_posterior(&mut rng, 0, false);
    let report_ok = convergence_report(&draws_ok);
    let draws_div = synthetic_posterior(&mut rng, 3, false);
    let report_div = convergence_report(&draws_div);
    let draws_energy = synthetic_posterior(&mut rng, 0, true);
    let report_energy = convergence_report(&draws_energy);

    let pass = rhat_dup < 1.001
        && rhat_shift > 1.5
        && (3_200.0..=4_800.0).contains(&ess_iid)
        && ess_ar1 < ar1_analytic * 1.5
        && ess_ar1 > ar1_analytic / 1.5
        && bfmi_walk < 0.2
        && report_ok.score == 5
        && report_div.score == 4
        && !report_div.breakdown.divergence_free
        && report_energy.score == 4
        && report_energy.bfmi_failing_chains == vec![1];
    report(
        "C6 diagnostics-oracles",
        pass,
        &format!(
            "dup rhat {rhat_dup:.4}, shifted rhat {rhat_shift:.2}, iid ESS {ess_iid:.0}, AR1 ESS {ess_ar1:.0} (analytic {ar1_analytic:.0}), walk BFMI {bfmi_walk:.3}, scores {}/{}/{}",
            report_ok.score, report_div.score, report_energy.score
        ),
    );
}

fn synthetic_posterior(
    rng: &mut ChaCha8Rng,
    divergences: usize,
    bad_energy_chain: bool,
) -> xgcf_core::PosteriorDraws64 {
    use xgcf_core::nuts::{ChainDraws, DrawStats};
    let n = 1_000;
    let mut chains = Vec::new();
    for chain in 0..2 {
        let mut draws = Array2::zeros((n, 1));
        for i in 0..n {
            draws[(i, 0)] = rng.sample::<f64, _>(StandardNormal);
        }
        let energy: Vec<f64> = if bad_energy_chain && chain == 1 {
            let mut e = vec![0.0];
            for _ in 1..n {
                e.push(e.last().unwrap() + 0.05 * rng.sample::<f64, _>(StandardNormal));
            }
            e
        } else {
            (0..n).map(|_| 30.0 + rng.sample::<f64, _>(StandardNormal)).collect()
        };
        let stats = (0..n)
            .map(|i| DrawStats {
                tree_depth: 3,
                accept_stat: 0.95,
                divergent: chain == 0 && i < divergences,
                step_size: 0.4,
                energy_error: 0.02,
                n_leapfrog: 7,
            })
            .collect();
        chains.push(ChainDraws {
            draws,
            energy,
            stats,
            step_size: 0.4,
            inv_mass: vec![1.0],
            warmup_accept: vec![],
        });
    }
    xgcf_core::PosteriorDraws64 {
        chains,
        param_names: vec!["p0".into()],
        config: SamplerConfig::default(),
    }
}

// ---------------------------------------------------------------------------
// Criterion 7: counterfactual identities on a fitted model.
// ---------------------------------------------------------------------------

#[test]
fn c07_counterfactual_identities() {
    let league = gen_league(&LeagueSpec::new(vec![40; 6], 70));
    let spec: ModelSpec<f64> =
        ModelSpec::xg(ModelKind::Hierarchical, PriorMode::ExpertInformed, 6);
    let config = quick_sampler(2, 300, 300, 71);
    let result = fit(&spec, &league.matrix, Some(&league.mu), &config).unwrap();
    let model = Model::new(&spec, &league.matrix, Some(&league.mu)).unwrap();
    let pooled = result.draws.pooled();
    let partition = ContextPartition::by_flag(ContextFlag::UnderPressure);

    // Identity substitution: bitwise zero everywhere.
    let shots0 = ShotSet::for_player(&league.matrix, 0, "p0");
    let identity = delta_xg(&model, &pooled, &shots0, 0, &partition).unwrap();
    let identity_zero = identity.per_draw.iter().all(|&d| d == 0.0);

    // Antisymmetry on the shared shot set.
    let forward = delta_xg(&model, &pooled, &shots0, 1, &partition).unwrap();
    let mut relabeled = shots0.clone();
    for r in &mut relabeled.rows {
        r.player = 1;
    }
    let backward = delta_xg(&model, &pooled, &relabeled, 0, &partition).unwrap();
    let antisymmetric = forward
        .per_draw
        .iter()
        .zip(&backward.per_draw)
        .all(|(f, b)| *f == -*b);

    // Context additivity, exact per draw.
    let additive = (0..forward.per_draw.len()).all(|s| {
        let total: f64 = forward.per_context.values().map(|c| c.per_draw[s]).sum();
        total == forward.per_draw[s]
    });

    // FATS bounds and the single-context identity.
    let team_shots = ShotSet::for_team(&league.matrix, "Team 1");
    let weights = team_context_weights(&team_shots, &partition).unwrap();
    let probs: BTreeMap<String, f64> = forward
        .per_context
        .iter()
        .map(|(k, v)| (k.clone(), v.stats.prob_positive))
        .collect();
    let score = fats(&probs, &weights).unwrap();
    let single = delta_xg(&model, &pooled, &shots0, 1, &ContextPartition::single()).unwrap();
    let mut single_w = BTreeMap::new();
    single_w.insert("all".to_string(), 1.0);
    let mut single_p = BTreeMap::new();
    single_p.insert("all".to_string(), single.stats.prob_positive);
    let single_fats = fats(&single_p, &single_w).unwrap();

    // Per-shot counterfactual probabilities stay inside (0, 1): totals over
    // n shots are strictly inside (0, n).
    let totals = counterfactual_xg(&model, &pooled, &shots0, 1).unwrap();
    let n_shots = shots0.len() as f64;
    let probs_open = totals.iter().all(|&t| t > 0.0 && t < n_shots);

    let pass = identity_zero
        && identity.stats.prob_positive == 0.5
        && antisymmetric
        && additive
        && (0.0..=1.0).contains(&score)
        && single_fats == single.stats.prob_positive
        && probs_open;
    report(
        "C7 counterfactual-identities",
        pass,
        &format!(
            "identity zero {identity_zero}, antisymmetry {antisymmetric}, additivity {additive}, FATS {score:.3} in [0,1], single-context FATS equals Pr"
        ),
    );
}

// ---------------------------------------------------------------------------
// Criterion 8: HDI against an exhaustive window-scan oracle.
// ---------------------------------------------------------------------------

#[test]
fn c08_hdi_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(80);
    let mut checked = 0;
    for _ in 0..1_000 {
        let n = rng.random_range(2..=60);
        let mass = rng.random_range(0.5..0.99);
        let mut samples: Vec<f64> = (0..n)
            .map(|_| {
                // Mix of continuous values and exact ties.
                if rng.random::<f64>() < 0.2 {
                    f64::from(rng.random_range(-2..=2))
                } else {
                    rng.sample::<f64, _>(StandardNormal)
                }
            })
            .collect();
        let got = hdi(&samples, mass);

        // Oracle: exhaustive scan over all sorted windows of k points.
        samples.sort_by(f64::total_cmp);
        let k = ((mass * n as f64).ceil() as usize).clamp(1, n);
        let mut best = (samples[0], samples[k - 1]);
        for i in 0..=n - k {
            let (lo, hi) = (samples[i], samples[i + k - 1]);
            if hi - lo < best.1 - best.0 {
                best = (lo, hi);
            }
        }
        assert_eq!(got, best, "n={n} mass={mass}");
        checked += 1;
    }
    report("C8 hdi-oracle", checked == 1_000, &format!("{checked} exact interval matches"));
}

// ---------------------------------------------------------------------------
// Criterion 9: full-scale feasibility.
// ---------------------------------------------------------------------------

#[test]
fn c09_full_scale_fit() {
    let started = Instant::now();
    // 148 players, 9,970 shots, every player at or above the filter floor.
    let mut counts = vec![67usize; 148];
    for c in counts.iter_mut().take(54) {
        *c += 1;
    }
    assert_eq!(counts.iter().sum::<usize>(), 9_970);

    let league = gen_league(&LeagueSpec::new(counts, 90));
    assert_eq!(league.matrix.n_shots(), 9_970);
    assert_eq!(league.players.len(), 148);

    let spec: ModelSpec<f64> =
        ModelSpec::xg(ModelKind::Hierarchical, PriorMode::ExpertInformed, 148);
    assert_eq!(spec.layout().dim(), 2_538);
    let config = SamplerConfig {
        chains: 4,
        warmup: 2_000,
        draws: 2_000,
        target_accept: 0.95,
        max_tree_depth: 10,
        seed: 91,
        init: InitStrategy::Map,
    };
    let result = fit(&spec, &league.matrix, Some(&league.mu), &config).unwrap();
    assert_eq!(result.draws.total_draws(), 8_000);

    let diag = convergence_report(&result.draws);
    let elapsed = started.elapsed().as_secs_f64();
    report(
        "C9 full-scale-feasibility",
        diag.score >= 4 && elapsed < 4.0 * 3_600.0,
        &format!(
            "score {}/5 (max rhat {:.4}, min bulk ESS {:.0}, divergences {}), wall {:.0}s",
            diag.score,
            diag.population.max_rhat,
            diag.parameters.iter().map(|p| p.ess_bulk).fold(f64::INFINITY, f64::min),
            diag.divergences,
            elapsed
        ),
    );
}

// ---------------------------------------------------------------------------
// Criterion 10: planted-effect synthetic league and report structure.
// ---------------------------------------------------------------------------

#[test]
fn c10_planted_league_golden() {
    use xgcf_core::counterfactual::fats_report;

    let mut spec = LeagueSpec::new(vec![120; 12], 100);
    // Strong planted finisher (player 3) and a weak one (player 7).
    spec.rating_overrides = vec![(3, [20, 19, 18, 16]), (7, [4, 5, 4, 6])];
    spec.gamma_boosts = vec![
        (3, xgcf_core::features::feature::ONE_ON_ONE, 0.5),
        (3, xgcf_core::features::feature::PENALTY_AREA, 0.5),
    ];
    let league = gen_league(&spec);

    let model_spec: ModelSpec<f64> =
        ModelSpec::xg(ModelKind::Hierarchical, PriorMode::ExpertInformed, 12);
    let config = quick_sampler(2, 400, 400, 101);
    let result = fit(&model_spec, &league.matrix, Some(&league.mu), &config).unwrap();
    let model = Model::new(&model_spec, &league.matrix, Some(&league.mu)).unwrap();
    let pooled = result.draws.pooled();

    let partition = ContextPartition::by_flag(ContextFlag::UnderPressure);
    let weak_label = league.players.entries[7].display_name.clone();
    let shots = ShotSet::for_player(&league.matrix, 7, &weak_label);
    let delta = delta_xg(&model, &pooled, &shots, 3, &partition).unwrap();

    let team_shots = ShotSet::for_team(&league.matrix, &league.players.entries[7].aliases[0]);
    // Teams cycle player % 6, so player 7 belongs to "Team 1".
    let team_shots = if team_shots.is_empty() {
        ShotSet::for_team(&league.matrix, "Team 1")
    } else {
        team_shots
    };
    let fats = fats_report(&delta, "Team 1", &team_shots, &partition).unwrap();
    let report_json = delta.to_report(
        &weak_label,
        &league.players.entries[3].display_name,
        &shots.descriptor,
        &partition,
        Some(fats),
    );

    // Structure must match the committed golden file (keys and value kinds;
    // values themselves are data-dependent).
    let got = serde_json::to_value(&report_json).unwrap();
    let golden: serde_json::Value = serde_json::from_str(include_str!(
        "data/golden_counterfactual_report.json"
    ))
    .unwrap();
    let structure_ok = same_structure(&golden, &got);

    let recovered = delta.stats.prob_positive;
    report(
        "C10 planted-league-golden",
        recovered > 0.9 && structure_ok,
        &format!(
            "planted finisher Pr(dxG>0) {recovered:.3}, report structure matches golden {structure_ok}"
        ),
    );
}

/// Recursive structural comparison: identical object keys, identical array
/// kinds, and matching scalar types; numeric values themselves may differ.
fn same_structure(golden: &serde_json::Value, got: &serde_json::Value) -> bool {
    use serde_json::Value::*;
    match (golden, got) {
        (Object(a), Object(b)) => {
            a.len() == b.len()
                && a.iter().all(|(k, va)| b.get(k).is_some_and(|vb| same_structure(va, vb)))
        }
        (Array(a), Array(b)) => match (a.first(), b.first()) {
            (Some(va), Some(vb)) => same_structure(va, vb),
            _ => true,
        },
        (Number(_), Number(_)) => true,
        (String(_), String(_)) => true,
        (Bool(_), Bool(_)) => true,
        (Null, _) | (_, Null) => true,
        _ => false,
    }
}
