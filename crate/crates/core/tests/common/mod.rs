//! Shared synthetic-data generators and oracles for the integration suites.

#![allow(dead_code)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use xgcf_core::features::{
    build_design_matrix, encode_shot, fit_scaler, ContextFlags, FeatureMatrix, FEATURE_COUNT,
};
use xgcf_core::ingest::{
    match_players, BodyPart, FmRating, FmRatingTable, FramePlayer, PlayerTable, ShotRecord,
    Technique,
};
use xgcf_core::model::{inv_logit, CoefPrior, ModelKind, ModelSpec, PriorMode};
use xgcf_core::priors::{build_prior_means, group_assignment, zscore_matched, GROUP_ORDER};
use xgcf_core::{PriorMeanMatrix64, Scaler64};

/// Population-level truth used by the league generator.
pub const LEAGUE_ALPHA: f64 = -2.6;
pub const LEAGUE_BETA: [f64; FEATURE_COUNT] = [
    -1.1, 0.25, 0.5, -0.35, 0.3, -0.4, -0.15, 0.8, 0.05, 0.1, -0.2, 0.0, 0.15, -0.1, -0.3, 0.2,
    -0.25,
];

pub struct LeagueSpec {
    pub counts: Vec<usize>,
    pub seed: u64,
    /// Intercept truth.
    pub alpha: f64,
    /// Truth spread of player deviations around their prior means, per
    /// hyperparameter group (physics, situation, common, rare).
    pub gamma_spread: [f64; 4],
    /// Force all player deviations to zero (population-only truth).
    pub zero_gamma: bool,
    /// Rating overrides: (player index, [finishing, technique, long, heading]).
    pub rating_overrides: Vec<(usize, [u8; 4])>,
    /// Additional planted deviations: (player, feature, boost).
    pub gamma_boosts: Vec<(usize, usize, f64)>,
}

impl LeagueSpec {
    pub fn new(counts: Vec<usize>, seed: u64) -> Self {
        Self {
            counts,
            seed,
            alpha: LEAGUE_ALPHA,
            gamma_spread: [0.15, 0.3, 0.3, 0.4],
            zero_gamma: false,
            rating_overrides: Vec::new(),
            gamma_boosts: Vec::new(),
        }
    }
}

pub struct League {
    pub shots: Vec<ShotRecord>,
    pub ratings: FmRatingTable,
    pub players: PlayerTable,
    pub scaler: Scaler64,
    pub matrix: FeatureMatrix<f64>,
    pub mu: PriorMeanMatrix64,
    pub alpha: f64,
    pub beta: Vec<f64>,
    pub gamma: Array2<f64>,
}

pub fn player_name(i: usize) -> String {
    format!("Player {i:03}")
}

pub fn team_name(i: usize) -> String {
    format!("Team {}", i % 6)
}

/// Generate a full synthetic league: realistic shot geometry, expert ratings
/// matched by name, prior means derived exactly as the pipeline derives
/// them, and outcomes drawn from planted population and player effects.
pub fn gen_league(spec: &LeagueSpec) -> League {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_players = spec.counts.len();

    let mut rating_rows = Vec::with_capacity(n_players);
    for i in 0..n_players {
        let mut attrs = [0u8; 4];
        for a in &mut attrs {
            *a = rng.random_range(4..=19);
        }
        if let Some(&(_, forced)) = spec.rating_overrides.iter().find(|&&(p, _)| p == i) {
            attrs = forced;
        }
        rating_rows.push(FmRating {
            name: player_name(i),
            finishing: attrs[0],
            technique: attrs[1],
            long_shots: attrs[2],
            heading: attrs[3],
            birth_date: None,
        });
    }
    let ratings = FmRatingTable::new(rating_rows).expect("unique synthetic names");

    let mut shots = Vec::new();
    for (i, &count) in spec.counts.iter().enumerate() {
        for k in 0..count {
            shots.push(random_shot(&mut rng, &player_name(i), &team_name(i), i, k));
        }
    }

    let (players, _) = match_players(&shots, &ratings, &[]).expect("synthetic matching");
    let z = zscore_matched(&ratings, &players).expect("rating spread");
    let mu = build_prior_means(&z, &players);

    let assignment = group_assignment();
    let mut gamma = if spec.zero_gamma {
        Array2::zeros((n_players, FEATURE_COUNT))
    } else {
        mu.mu.clone()
    };
    if !spec.zero_gamma {
        for i in 0..n_players {
            for j in 0..FEATURE_COUNT {
                let g = GROUP_ORDER
                    .iter()
                    .position(|&x| x == assignment.groups[j])
                    .unwrap();
                gamma[(i, j)] += spec.gamma_spread[g] * rng.sample::<f64, _>(StandardNormal);
            }
        }
    }
    for &(p, f, boost) in &spec.gamma_boosts {
        gamma[(p, f)] += boost;
    }

    // Outcomes: standardized features through the same scaler the pipeline
    // will fit, then a Bernoulli draw per shot.
    let scaler: Scaler64 = fit_scaler(&shots).expect("geometric spread");
    for shot in shots.iter_mut() {
        let mut x = encode_shot::<f64>(shot).expect("valid synthetic shot");
        scaler.transform(&mut x);
        let player = players.index_of(&shot.player_name).unwrap();
        let mut eta = spec.alpha;
        for j in 0..FEATURE_COUNT {
            eta += (LEAGUE_BETA[j] + gamma[(player, j)]) * x[j];
        }
        shot.goal = rng.random::<f64>() < inv_logit(eta);
    }

    let matrix = build_design_matrix(&shots, &scaler, &players).expect("consistent matrix");
    League {
        shots,
        ratings,
        players,
        scaler,
        matrix,
        mu,
        alpha: spec.alpha,
        beta: LEAGUE_BETA.to_vec(),
        gamma,
    }
}

fn random_shot(
    rng: &mut ChaCha8Rng,
    player: &str,
    team: &str,
    player_idx: usize,
    k: usize,
) -> ShotRecord {
    let x = rng.random_range(88.0..119.0);
    let y = rng.random_range(16.0..64.0);
    let mut freeze_frame = vec![FramePlayer {
        x: rng.random_range(113.0..120.0),
        y: 40.0 + rng.random_range(-6.0..6.0),
        teammate: false,
        keeper: true,
    }];
    let defenders = rng.random_range(0..=4);
    for _ in 0..defenders {
        let t: f64 = rng.random_range(0.25..0.95);
        let px = x + t * (120.0 - x);
        let py = y + t * (40.0 - y) + rng.random_range(-6.0..6.0);
        freeze_frame.push(FramePlayer {
            x: px.clamp(0.0, 120.0),
            y: py.clamp(0.0, 80.0),
            teammate: false,
            keeper: false,
        });
    }
    freeze_frame.push(FramePlayer {
        x: (x - 8.0).max(0.0),
        y: (y + rng.random_range(-8.0..8.0)).clamp(0.0, 80.0),
        teammate: true,
        keeper: false,
    });

    let body = match rng.random::<f64>() {
        u if u < 0.42 => BodyPart::RightFoot,
        u if u < 0.80 => BodyPart::LeftFoot,
        _ => BodyPart::Other,
    };
    let technique = match rng.random::<f64>() {
        u if u < 0.80 => Technique::Normal,
        u if u < 0.88 => Technique::Volley,
        u if u < 0.93 => Technique::HalfVolley,
        u if u < 0.96 => Technique::Lob,
        u if u < 0.98 => Technique::DivingHeader,
        _ => Technique::OverheadKick,
    };
    ShotRecord {
        shot_id: format!("p{player_idx:03}-s{k:04}"),
        player_name: player.to_string(),
        team_name: team.to_string(),
        x,
        y,
        goal: false,
        body_part: body,
        technique,
        under_pressure: rng.random::<f64>() < 0.3,
        first_time: rng.random::<f64>() < 0.25,
        one_on_one: rng.random::<f64>() < 0.08,
        freeze_frame,
    }
}

/// Small continuous-feature hierarchical instance for pooling and
/// prior-informativeness checks: every feature is exercised by every shot,
/// so shrinkage comparisons across shot-count buckets are not confounded by
/// one-hot sparsity.
pub struct SmallHier {
    pub spec: ModelSpec<f64>,
    pub data: FeatureMatrix<f64>,
    pub mu: PriorMeanMatrix64,
    pub gamma: Array2<f64>,
    pub counts: Vec<usize>,
    pub alpha: f64,
    pub beta: Vec<f64>,
}

pub const SMALL_HIER_FEATURES: usize = 4;

/// `counts[..exact_mu_players]` players have true deviations equal to their
/// prior means (the "correct expert prior" probes); the remainder scatter
/// around theirs with `bg_spread`, giving the group scale something to
/// estimate.
pub fn gen_small_hier(
    counts: &[usize],
    exact_mu_players: usize,
    bg_spread: f64,
    seed: u64,
) -> SmallHier {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_players = counts.len();
    let f = SMALL_HIER_FEATURES;
    let alpha = 0.0;
    let beta = vec![0.3, -0.2, 0.1, -0.1];

    let mut mu = Array2::zeros((n_players, f));
    for i in 0..n_players {
        for j in 0..f {
            let sign = if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
            mu[(i, j)] = sign * rng.random_range(0.6..1.4);
        }
    }
    let mut gamma = mu.clone();
    for i in exact_mu_players..n_players {
        for j in 0..f {
            gamma[(i, j)] += bg_spread * rng.sample::<f64, _>(StandardNormal);
        }
    }

    let n: usize = counts.iter().sum();
    let mut x = Array2::zeros((n, f));
    let mut y = Vec::with_capacity(n);
    let mut player_idx = Vec::with_capacity(n);
    let mut row = 0;
    for (i, &count) in counts.iter().enumerate() {
        for _ in 0..count {
            let mut eta = alpha;
            for j in 0..f {
                let v = 1.3 * rng.sample::<f64, _>(StandardNormal);
                x[(row, j)] = v;
                eta += (beta[j] + gamma[(i, j)]) * v;
            }
            y.push(u8::from(rng.random::<f64>() < inv_logit(eta)));
            player_idx.push(i);
            row += 1;
        }
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
                penalty_area: false,
            };
            n
        ],
        shot_ids: (0..n).map(|i| format!("s{i}")).collect(),
        teams: vec!["T".to_string(); n],
    };
    let spec = ModelSpec {
        kind: ModelKind::Hierarchical,
        prior_mode: PriorMode::ExpertInformed,
        n_players,
        feature_names: (0..f).map(|j| format!("f{j}")).collect(),
        intercept_prior: (0.0, 2.0),
        coef_priors: vec![CoefPrior::Normal { mean: 0.0, sd: 2.0 }; f],
        group_names: vec!["shared".to_string()],
        group_scales: vec![1.0],
        feature_group: vec![0; f],
    };
    SmallHier {
        spec,
        data,
        mu: xgcf_core::priors::PriorMeanMatrix { mu },
        gamma,
        counts: counts.to_vec(),
        alpha,
        beta,
    }
}

/// Data-only maximum-likelihood deviation estimate for one player, holding
/// the population parameters fixed: gradient ascent on the player's own
/// Bernoulli likelihood, iteration-capped so separable samples return a
/// large-magnitude (not infinite) estimate.
pub fn player_mle(
    data: &FeatureMatrix<f64>,
    player: usize,
    alpha: f64,
    beta: &[f64],
    max_iter: usize,
) -> Vec<f64> {
    let f = beta.len();
    let rows: Vec<usize> = (0..data.n_shots())
        .filter(|&r| data.player_idx[r] == player)
        .collect();
    let loglik = |gamma: &[f64], grad: &mut [f64]| -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut ll = 0.0;
        for &r in &rows {
            let mut eta = alpha;
            for j in 0..f {
                eta += (beta[j] + gamma[j]) * data.x[(r, j)];
            }
            let p = inv_logit(eta);
            let resid = f64::from(data.y[r]) - p;
            ll += if data.y[r] == 1 {
                p.max(1e-300).ln()
            } else {
                (1.0 - p).max(1e-300).ln()
            };
            for j in 0..f {
                grad[j] += resid * data.x[(r, j)];
            }
        }
        ll
    };
    let mut gamma = vec![0.0; f];
    let mut grad = vec![0.0; f];
    let mut value = loglik(&gamma, &mut grad);
    let mut step = 1.0;
    for _ in 0..max_iter {
        let norm: f64 = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm < 1e-8 {
            break;
        }
        let mut s = step;
        loop {
            let candidate: Vec<f64> = gamma.iter().zip(&grad).map(|(g, d)| g + s * d).collect();
            let mut cand_grad = vec![0.0; f];
            let cand_value = loglik(&candidate, &mut cand_grad);
            if cand_value > value {
                gamma = candidate;
                grad = cand_grad;
                value = cand_value;
                step = s * 2.0;
                break;
            }
            s /= 2.0;
            if s < 1e-12 {
                return gamma;
            }
        }
    }
    gamma
}

/// Kolmogorov-Smirnov statistic of samples against a reference CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut worst: f64 = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        let c = cdf(v);
        let hi = (i as f64 + 1.0) / n - c;
        let lo = c - i as f64 / n;
        worst = worst.max(hi).max(lo);
    }
    worst
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() as f64 - 1.0)
}

/// Per-parameter posterior mean and standard deviation over pooled draws.
pub fn column_stats(draws: &Array2<f64>, column: usize) -> (f64, f64) {
    let col: Vec<f64> = draws.column(column).to_vec();
    (mean(&col), variance(&col).sqrt())
}

/// One pass/fail line per acceptance criterion.
pub fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "acceptance {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "acceptance {criterion} failed: {detail}");
}
