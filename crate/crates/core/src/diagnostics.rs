//! Convergence diagnostics: rank-normalized split R-hat, bulk/tail
//! effective sample sizes with Geyer initial-monotone truncation, the
//! Bayesian fraction of missing information, and the composite five-point
//! convergence score.

use serde::{Deserialize, Serialize};

use crate::num::{norm_quantile, Real};
use crate::nuts::PosteriorDraws;

pub const RHAT_MAX: f64 = 1.1;
pub const ESS_MIN: f64 = 100.0;
pub const BFMI_MIN: f64 = 0.2;
/// A run is accepted when it scores at least this many of the five points.
pub const SCORE_PASS: u8 = 4;

/// ESS estimates are capped at this multiple of the total draw count.
pub const ESS_CAP_FACTOR: f64 = 1.5;

fn to_f64<S: Real>(chains: &[&[S]]) -> Vec<Vec<f64>> {
    chains
        .iter()
        .map(|c| c.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect())
        .collect()
}

/// Split every chain in half, dropping the middle draw of odd-length chains.
fn split_chains(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(chains.len() * 2);
    for c in chains {
        let n = c.len();
        let half = n / 2;
        out.push(c[..half].to_vec());
        out.push(c[n - half..].to_vec());
    }
    out
}

/// Pooled average ranks mapped through the normal quantile
/// (`(r - 3/8) / (S + 1/4)` offsets), applied in place of the raw draws.
fn rank_normalize(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let total: usize = chains.iter().map(Vec::len).sum();
    let mut indexed: Vec<(f64, usize)> = Vec::with_capacity(total);
    let mut flat_index = 0usize;
    for c in chains {
        for &v in c {
            indexed.push((v, flat_index));
            flat_index += 1;
        }
    }
    indexed.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut ranks = vec![0.0; total];
    let mut i = 0;
    while i < total {
        let mut j = i;
        while j + 1 < total && indexed[j + 1].0 == indexed[i].0 {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[indexed[k].1] = avg_rank;
        }
        i = j + 1;
    }
    let s = total as f64;
    let mut out = Vec::with_capacity(chains.len());
    let mut cursor = 0;
    for c in chains {
        let mut z = Vec::with_capacity(c.len());
        for _ in 0..c.len() {
            let p = (ranks[cursor] - 0.375) / (s + 0.25);
            z.push(norm_quantile(p));
            cursor += 1;
        }
        out.push(z);
    }
    out
}

fn chain_mean(c: &[f64]) -> f64 {
    c.iter().sum::<f64>() / c.len() as f64
}

/// Potential scale reduction over already-split chains:
/// `sqrt(((n-1)/n W + B/n) / W)`.
fn rhat_of_split(split: &[Vec<f64>]) -> f64 {
    let m = split.len();
    let n = split[0].len();
    if m < 2 || n < 2 {
        return f64::NAN;
    }
    let means: Vec<f64> = split.iter().map(|c| chain_mean(c)).collect();
    let grand = means.iter().sum::<f64>() / m as f64;
    let b = n as f64 / (m as f64 - 1.0)
        * means.iter().map(|mu| (mu - grand).powi(2)).sum::<f64>();
    let w = split
        .iter()
        .zip(&means)
        .map(|(c, mu)| c.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n as f64 - 1.0))
        .sum::<f64>()
        / m as f64;
    if w <= 0.0 {
        return f64::NAN;
    }
    let var_plus = (n as f64 - 1.0) / n as f64 * w + b / n as f64;
    (var_plus / w).sqrt()
}

/// Rank-normalized split R-hat. Returns NaN when chains are degenerate
/// (fewer than 2 chains, under 4 draws, or zero within-chain variance).
pub fn split_rhat<S: Real>(chains: &[&[S]]) -> f64 {
    let raw = to_f64(chains);
    if raw.len() < 2 || raw.iter().any(|c| c.len() < 4) {
        return f64::NAN;
    }
    if constant_input(&raw) {
        return f64::NAN;
    }
    let split = split_chains(&raw);
    rhat_of_split(&rank_normalize(&split))
}

/// Classic split R-hat on raw (non-rank-normalized) draws, for comparison.
pub fn split_rhat_classic<S: Real>(chains: &[&[S]]) -> f64 {
    let raw = to_f64(chains);
    if raw.len() < 2 || raw.iter().any(|c| c.len() < 4) {
        return f64::NAN;
    }
    rhat_of_split(&split_chains(&raw))
}

fn constant_input(chains: &[Vec<f64>]) -> bool {
    let first = chains[0][0];
    chains.iter().all(|c| c.iter().all(|&v| v == first))
}

/// Biased (divide by n) autocovariance of one chain at lag `t`.
fn autocov(c: &[f64], mean: f64, t: usize) -> f64 {
    let n = c.len();
    let mut s = 0.0;
    for i in 0..n - t {
        s += (c[i] - mean) * (c[i + t] - mean);
    }
    s / n as f64
}

/// Effective sample size over already-split chains via Geyer's initial
/// monotone positive sequence.
fn ess_of_split(split: &[Vec<f64>]) -> f64 {
    let m = split.len();
    let n = split[0].len();
    if m < 1 || n < 4 {
        return f64::NAN;
    }
    let total = (m * n) as f64;
    let means: Vec<f64> = split.iter().map(|c| chain_mean(c)).collect();
    // Within-chain sample variances and the pooled variance estimate.
    let w = split
        .iter()
        .zip(&means)
        .map(|(c, mu)| c.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n as f64 - 1.0))
        .sum::<f64>()
        / m as f64;
    let var_plus = if m > 1 {
        let grand = means.iter().sum::<f64>() / m as f64;
        let b = n as f64 / (m as f64 - 1.0)
            * means.iter().map(|mu| (mu - grand).powi(2)).sum::<f64>();
        (n as f64 - 1.0) / n as f64 * w + b / n as f64
    } else {
        (n as f64 - 1.0) / n as f64 * w
    };
    if !(var_plus > 0.0) {
        return f64::NAN;
    }

    let mean_autocov = |t: usize| -> f64 {
        split
            .iter()
            .zip(&means)
            .map(|(c, mu)| autocov(c, *mu, t))
            .sum::<f64>()
            / m as f64
    };

    // rho_hat[0] is defined as 1; subsequent lags come from the pooled
    // autocovariances. Accumulate paired sums while they stay positive.
    let mut rho = vec![1.0_f64];
    rho.push(1.0 - (w - mean_autocov(1)) / var_plus);
    let mut t = 1;
    let max_lag = n - 4;
    while t < max_lag {
        let even = 1.0 - (w - mean_autocov(t + 1)) / var_plus;
        let odd = 1.0 - (w - mean_autocov(t + 2)) / var_plus;
        if even + odd < 0.0 {
            break;
        }
        rho.push(even);
        rho.push(odd);
        t += 2;
    }

    // Geyer monotone correction over the paired sums.
    let mut k = 1;
    while k + 2 < rho.len() {
        let prev = rho[k - 1] + rho[k];
        let cur = rho[k + 1] + rho[k + 2];
        if cur > prev {
            let half = prev / 2.0;
            rho[k + 1] = half;
            rho[k + 2] = half;
        }
        k += 2;
    }

    // Flooring the integrated autocorrelation time enforces the ESS cap.
    let tau = (-1.0 + 2.0 * rho.iter().sum::<f64>()).max(1.0 / ESS_CAP_FACTOR);
    total / tau
}

/// Bulk ESS: rank-normalized split chains.
pub fn ess_bulk<S: Real>(chains: &[&[S]]) -> f64 {
    let raw = to_f64(chains);
    if raw.is_empty() || raw.iter().any(|c| c.len() < 4) {
        return f64::NAN;
    }
    if constant_input(&raw) {
        return f64::NAN;
    }
    let split = split_chains(&raw);
    ess_of_split(&rank_normalize(&split))
}

/// Tail ESS: the smaller of the ESS of the 5% and 95% quantile exceedance
/// indicators.
pub fn ess_tail<S: Real>(chains: &[&[S]]) -> f64 {
    let raw = to_f64(chains);
    if raw.is_empty() || raw.iter().any(|c| c.len() < 4) {
        return f64::NAN;
    }
    if constant_input(&raw) {
        return f64::NAN;
    }
    let mut pooled: Vec<f64> = raw.iter().flatten().copied().collect();
    pooled.sort_by(f64::total_cmp);
    let quantile = |q: f64| -> f64 {
        let h = (pooled.len() as f64 - 1.0) * q;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        pooled[lo] + (h - lo as f64) * (pooled[hi] - pooled[lo])
    };
    let mut worst = f64::INFINITY;
    for q in [0.05, 0.95] {
        let cut = quantile(q);
        let indicator: Vec<Vec<f64>> = raw
            .iter()
            .map(|c| c.iter().map(|&v| f64::from(u8::from(v <= cut))).collect())
            .collect();
        if constant_input(&indicator) {
            return f64::NAN;
        }
        let ess = ess_of_split(&split_chains(&indicator));
        worst = worst.min(ess);
    }
    worst
}

/// Bayesian fraction of missing information of one chain's energy trace:
/// `sum (E_n - E_{n-1})^2 / sum (E_n - mean)^2`. NaN for degenerate traces.
pub fn bfmi<S: Real>(energy: &[S]) -> f64 {
    if energy.len() < 3 {
        return f64::NAN;
    }
    let e: Vec<f64> = energy.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
    let mean = e.iter().sum::<f64>() / e.len() as f64;
    let denom: f64 = e.iter().map(|v| (v - mean).powi(2)).sum();
    if denom <= 0.0 {
        return f64::NAN;
    }
    let numer: f64 = e.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    numer / denom
}

/// Per-parameter diagnostic row.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParamDiagnostics {
    pub name: String,
    pub rhat: f64,
    pub ess_bulk: f64,
    pub ess_tail: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub rhat_ok: bool,
    pub ess_bulk_ok: bool,
    pub ess_tail_ok: bool,
    pub bfmi_ok: bool,
    pub divergence_free: bool,
}

/// Summary over the population-level parameters (everything except the raw
/// player deviations), mirroring headline "k / k parameters" reporting.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PopulationSummary {
    pub parameters: usize,
    pub rhat_passing: usize,
    pub ess_passing: usize,
    pub max_rhat: f64,
    pub min_ess_bulk: f64,
    pub min_ess_tail: f64,
}

/// The full diagnostics report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub parameters: Vec<ParamDiagnostics>,
    pub bfmi: Vec<f64>,
    pub divergences: usize,
    pub score: u8,
    pub breakdown: ScoreBreakdown,
    pub rhat_failures: Vec<String>,
    pub ess_bulk_failures: Vec<String>,
    pub ess_tail_failures: Vec<String>,
    pub bfmi_failing_chains: Vec<usize>,
    pub population: PopulationSummary,
    pub warnings: Vec<String>,
}

impl ChainDiagnostics {
    pub fn passed(&self) -> bool {
        self.score >= SCORE_PASS
    }
}

/// Compute every diagnostic and the composite score: one point each for all
/// R-hat below 1.1, all bulk ESS above 100, all tail ESS above 100, all
/// chain BFMI above 0.2, and zero divergences.
pub fn convergence_report<S: Real>(draws: &PosteriorDraws<S>) -> ChainDiagnostics {
    let dim = draws.dim();
    let mut parameters = Vec::with_capacity(dim);
    let mut rhat_failures = Vec::new();
    let mut ess_bulk_failures = Vec::new();
    let mut ess_tail_failures = Vec::new();
    let mut warnings = Vec::new();

    let mut columns: Vec<Vec<Vec<S>>> = Vec::with_capacity(dim);
    for j in 0..dim {
        let per_chain: Vec<Vec<S>> = draws
            .chains
            .iter()
            .map(|c| c.draws.column(j).to_vec())
            .collect();
        columns.push(per_chain);
    }

    for (j, per_chain) in columns.iter().enumerate() {
        let name = draws.param_names[j].clone();
        let views: Vec<&[S]> = per_chain.iter().map(Vec::as_slice).collect();
        let rhat = split_rhat(&views);
        let bulk = ess_bulk(&views);
        let tail = ess_tail(&views);
        if rhat.is_nan() || bulk.is_nan() || tail.is_nan() {
            warnings.push(format!("parameter '{name}' has a degenerate (constant) chain"));
        }
        if !(rhat < RHAT_MAX) {
            rhat_failures.push(name.clone());
        }
        if !(bulk > ESS_MIN) {
            ess_bulk_failures.push(name.clone());
        }
        if !(tail > ESS_MIN) {
            ess_tail_failures.push(name.clone());
        }
        parameters.push(ParamDiagnostics {
            name,
            rhat,
            ess_bulk: bulk,
            ess_tail: tail,
        });
    }

    let bfmi_values: Vec<f64> = draws.chains.iter().map(|c| bfmi(&c.energy)).collect();
    let bfmi_failing_chains: Vec<usize> = bfmi_values
        .iter()
        .enumerate()
        .filter(|(_, &v)| !(v > BFMI_MIN))
        .map(|(i, _)| i)
        .collect();
    let divergences = draws.total_divergences();

    let breakdown = ScoreBreakdown {
        rhat_ok: rhat_failures.is_empty(),
        ess_bulk_ok: ess_bulk_failures.is_empty(),
        ess_tail_ok: ess_tail_failures.is_empty(),
        bfmi_ok: bfmi_failing_chains.is_empty(),
        divergence_free: divergences == 0,
    };
    let score = u8::from(breakdown.rhat_ok)
        + u8::from(breakdown.ess_bulk_ok)
        + u8::from(breakdown.ess_tail_ok)
        + u8::from(breakdown.bfmi_ok)
        + u8::from(breakdown.divergence_free);

    let population_rows: Vec<&ParamDiagnostics> = parameters
        .iter()
        .filter(|p| !p.name.starts_with("gamma_raw["))
        .collect();
    let population = PopulationSummary {
        parameters: population_rows.len(),
        rhat_passing: population_rows.iter().filter(|p| p.rhat < RHAT_MAX).count(),
        ess_passing: population_rows
            .iter()
            .filter(|p| p.ess_bulk > ESS_MIN && p.ess_tail > ESS_MIN)
            .count(),
        max_rhat: population_rows
            .iter()
            .map(|p| p.rhat)
            .fold(f64::NAN, f64::max),
        min_ess_bulk: population_rows
            .iter()
            .map(|p| p.ess_bulk)
            .fold(f64::INFINITY, f64::min),
        min_ess_tail: population_rows
            .iter()
            .map(|p| p.ess_tail)
            .fold(f64::INFINITY, f64::min),
    };

    ChainDiagnostics {
        parameters,
        bfmi: bfmi_values,
        divergences,
        score,
        breakdown,
        rhat_failures,
        ess_bulk_failures,
        ess_tail_failures,
        bfmi_failing_chains,
        population,
        warnings,
    }
}
