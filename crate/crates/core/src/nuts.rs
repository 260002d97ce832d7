//! No-U-Turn sampler with dual-averaging step-size adaptation and a
//! diagonal mass matrix estimated over expanding warmup windows.
//!
//! The implementation is the multinomial variant: trajectory states are
//! weighted by `exp(H0 - H)` and the proposal is drawn from the whole
//! doubling tree; divergences are declared when the energy error exceeds
//! [`DIVERGENCE_ENERGY`]. Chains run independently (optionally in parallel)
//! from per-chain ChaCha8 streams seeded `seed + chain_index`, so equal
//! seeds reproduce draws bit for bit.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Real;

/// Target density: log-posterior value and gradient at a position.
/// Implementations must return `-inf` (with a zeroed gradient) rather than
/// fail on unevaluable positions; the sampler records a divergence.
pub trait LogDensityGradient<S> {
    fn dim(&self) -> usize;
    fn logp_and_grad(&self, position: &[S], grad: &mut [S]) -> S;
}

/// Energy error, in nats, beyond which a trajectory is declared divergent.
pub const DIVERGENCE_ENERGY: f64 = 1_000.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    Map,
    Zero,
    Jitter,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub chains: usize,
    pub warmup: usize,
    pub draws: usize,
    pub target_accept: f64,
    pub max_tree_depth: u32,
    pub seed: u64,
    pub init: InitStrategy,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            chains: 4,
            warmup: 2_000,
            draws: 2_000,
            target_accept: 0.95,
            max_tree_depth: 10,
            seed: 0,
            init: InitStrategy::Map,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.chains < 1 || self.draws < 1 || self.warmup < 1 {
            return Err(SamplerError::InvalidConfig(
                "chains, warmup and draws must all be at least 1".into(),
            ));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(SamplerError::InvalidConfig(format!(
                "target_accept must lie in (0, 1), got {}",
                self.target_accept
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
    #[error("warmup of {warmup} iterations is too short for the adaptation schedule (minimum {required})")]
    WarmupTooShort { warmup: usize, required: usize },
    #[error("log-posterior is not finite at the chain initialisation point")]
    NonFiniteInit,
    #[error("draws file {path}: {message}")]
    DrawsFormat { path: String, message: String },
    #[error("failed to read draws file {path}: {source}")]
    DrawsIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Phase-space point with its cached gradient and log density.
#[derive(Clone, Debug)]
pub struct HmcState<S> {
    pub position: Vec<S>,
    pub momentum: Vec<S>,
    pub gradient: Vec<S>,
    pub logp: S,
}

impl<S: Real> HmcState<S> {
    pub fn new<T: LogDensityGradient<S>>(target: &T, position: Vec<S>) -> Self {
        let mut gradient = vec![S::zero(); position.len()];
        let logp = target.logp_and_grad(&position, &mut gradient);
        Self {
            position,
            momentum: vec![S::zero(); gradient.len()],
            gradient,
            logp,
        }
    }

    /// Hamiltonian `-logp + 1/2 p^T M^{-1} p`; `inv_mass` holds the diagonal
    /// of `M^{-1}` (position-space variance estimates).
    pub fn energy(&self, inv_mass: &[S]) -> S {
        -self.logp + kinetic(&self.momentum, inv_mass)
    }
}

fn kinetic<S: Real>(momentum: &[S], inv_mass: &[S]) -> S {
    let mut k = S::zero();
    for i in 0..momentum.len() {
        k += momentum[i] * momentum[i] * inv_mass[i];
    }
    S::of(0.5) * k
}

fn sample_momentum<S: Real, R: Rng>(rng: &mut R, inv_mass: &[S], out: &mut [S]) {
    for (p, v) in out.iter_mut().zip(inv_mass) {
        *p = S::standard_normal(rng) / v.sqrt();
    }
}

/// One leapfrog step: half-kick, drift, half-kick. The gradient is
/// recomputed exactly once. `step` may be negative for backward integration.
pub fn leapfrog<S: Real, T: LogDensityGradient<S>>(
    target: &T,
    state: &HmcState<S>,
    step: S,
    inv_mass: &[S],
) -> HmcState<S> {
    let half = S::of(0.5) * step;
    let dim = state.position.len();
    let mut momentum = state.momentum.clone();
    for i in 0..dim {
        momentum[i] += half * state.gradient[i];
    }
    let mut position = state.position.clone();
    for i in 0..dim {
        position[i] += step * inv_mass[i] * momentum[i];
    }
    let mut gradient = vec![S::zero(); dim];
    let logp = target.logp_and_grad(&position, &mut gradient);
    for i in 0..dim {
        momentum[i] += half * gradient[i];
    }
    HmcState {
        position,
        momentum,
        gradient,
        logp,
    }
}

/// Per-draw sampler statistics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DrawStats<S> {
    pub tree_depth: u32,
    pub accept_stat: S,
    pub divergent: bool,
    pub step_size: S,
    pub energy_error: S,
    pub n_leapfrog: u32,
}

/// Statistics of a single NUTS transition.
pub struct NutsStats<S> {
    pub tree_depth: u32,
    pub accept_stat: S,
    pub divergent: bool,
    pub energy: S,
    pub energy_error: S,
    pub n_leapfrog: u32,
}

struct Tree<S> {
    /// Endpoint nearest the trajectory start, in build order.
    first: HmcState<S>,
    /// Endpoint farthest from the trajectory start, in build order.
    last: HmcState<S>,
    proposal: HmcState<S>,
    log_sum_weight: S,
    rho: Vec<S>,
    sum_accept: S,
    n_leapfrog: u32,
    divergent: bool,
    turning: bool,
}

fn log_add_exp<S: Real>(a: S, b: S) -> S {
    if a == S::neg_infinity() {
        return b;
    }
    if b == S::neg_infinity() {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Generalized U-turn criterion over a trajectory span: continue only while
/// the accumulated momentum `rho` points forward at both span endpoints
/// (velocities `M^{-1} p`).
fn is_uturn<S: Real>(rho: &[S], p_first: &[S], p_last: &[S], inv_mass: &[S]) -> bool {
    let mut dot_first = S::zero();
    let mut dot_last = S::zero();
    for i in 0..rho.len() {
        dot_first += rho[i] * inv_mass[i] * p_first[i];
        dot_last += rho[i] * inv_mass[i] * p_last[i];
    }
    dot_first <= S::zero() || dot_last <= S::zero()
}

#[allow(clippy::too_many_arguments)]
fn build_tree<S: Real, T: LogDensityGradient<S>, R: Rng>(
    target: &T,
    from: &HmcState<S>,
    depth: u32,
    step: S,
    inv_mass: &[S],
    h0: S,
    rng: &mut R,
) -> Tree<S> {
    if depth == 0 {
        let state = leapfrog(target, from, step, inv_mass);
        let h = state.energy(inv_mass);
        let log_weight = if h.is_finite() { h0 - h } else { S::neg_infinity() };
        let energy_error = h - h0;
        let divergent = !h.is_finite() || energy_error > S::of(DIVERGENCE_ENERGY);
        let accept = log_weight.min(S::zero()).exp();
        return Tree {
            first: state.clone(),
            last: state.clone(),
            rho: state.momentum.clone(),
            proposal: state,
            log_sum_weight: log_weight,
            sum_accept: accept,
            n_leapfrog: 1,
            divergent,
            turning: false,
        };
    }

    let mut inner = build_tree(target, from, depth - 1, step, inv_mass, h0, rng);
    if inner.divergent || inner.turning {
        return inner;
    }
    let outer = build_tree(target, &inner.last, depth - 1, step, inv_mass, h0, rng);

    inner.sum_accept += outer.sum_accept;
    inner.n_leapfrog += outer.n_leapfrog;
    if outer.divergent || outer.turning {
        inner.divergent = outer.divergent;
        inner.turning = outer.turning;
        return inner;
    }

    let combined = log_add_exp(inner.log_sum_weight, outer.log_sum_weight);
    // Unbiased multinomial choice between the two halves.
    if (outer.log_sum_weight - combined).exp() > S::unit_uniform(rng) {
        inner.proposal = outer.proposal;
    }
    inner.log_sum_weight = combined;
    for i in 0..inner.rho.len() {
        inner.rho[i] += outer.rho[i];
    }
    inner.turning = is_uturn(
        &inner.rho,
        &inner.first.momentum,
        &outer.last.momentum,
        inv_mass,
    );
    inner.last = outer.last;
    inner
}

/// One NUTS transition: momentum refresh, multiplicative doubling with the
/// generalized U-turn rule, multinomial proposal over the trajectory.
pub fn nuts_transition<S: Real, T: LogDensityGradient<S>, R: Rng>(
    target: &T,
    current: &HmcState<S>,
    step: S,
    inv_mass: &[S],
    max_tree_depth: u32,
    rng: &mut R,
) -> (HmcState<S>, NutsStats<S>) {
    let mut state = current.clone();
    sample_momentum(rng, inv_mass, &mut state.momentum);
    let h0 = state.energy(inv_mass);

    let mut backward = state.clone();
    let mut forward = state.clone();
    let mut rho = state.momentum.clone();
    let mut proposal = state.clone();
    let mut log_sum_weight = S::zero();
    let mut sum_accept = S::zero();
    let mut n_leapfrog = 0u32;
    let mut divergent = false;
    let mut depth = 0u32;

    while depth < max_tree_depth {
        let go_forward = S::unit_uniform(rng) < S::of(0.5);
        let (endpoint, signed_step) = if go_forward {
            (&forward, step)
        } else {
            (&backward, -step)
        };
        let subtree = build_tree(target, endpoint, depth, signed_step, inv_mass, h0, rng);
        sum_accept += subtree.sum_accept;
        n_leapfrog += subtree.n_leapfrog;
        if subtree.divergent {
            divergent = true;
            break;
        }
        if subtree.turning {
            break;
        }
        // Biased progressive sampling favours the fresh subtree.
        let accept_prob = (subtree.log_sum_weight - log_sum_weight).exp().min(S::one());
        if S::unit_uniform(rng) < accept_prob {
            proposal = subtree.proposal.clone();
        }
        log_sum_weight = log_add_exp(log_sum_weight, subtree.log_sum_weight);
        for i in 0..rho.len() {
            rho[i] += subtree.rho[i];
        }
        if go_forward {
            forward = subtree.last;
        } else {
            backward = subtree.last;
        }
        depth += 1;
        if is_uturn(&rho, &backward.momentum, &forward.momentum, inv_mass) {
            break;
        }
    }

    let energy = proposal.energy(inv_mass);
    let accept_stat = if n_leapfrog == 0 {
        S::one()
    } else {
        sum_accept / S::of(f64::from(n_leapfrog))
    };
    let stats = NutsStats {
        tree_depth: depth,
        accept_stat,
        divergent,
        energy,
        energy_error: energy - h0,
        n_leapfrog,
    };
    (proposal, stats)
}

/// Heuristic initial step size: double or halve until the one-step
/// acceptance ratio crosses 1/2.
fn find_reasonable_step<S: Real, T: LogDensityGradient<S>, R: Rng>(
    target: &T,
    state: &HmcState<S>,
    inv_mass: &[S],
    rng: &mut R,
) -> S {
    let mut probe = state.clone();
    sample_momentum(rng, inv_mass, &mut probe.momentum);
    let h0 = probe.energy(inv_mass);
    let mut step = S::one();
    let log_ratio = |s: S, probe: &HmcState<S>| -> S {
        let next = leapfrog(target, probe, s, inv_mass);
        let h = next.energy(inv_mass);
        if h.is_finite() {
            h0 - h
        } else {
            S::neg_infinity()
        }
    };
    let half_ln = S::of(0.5).ln();
    let direction = if log_ratio(step, &probe) > half_ln {
        S::one()
    } else {
        -S::one()
    };
    let two = S::of(2.0);
    for _ in 0..64 {
        let r = log_ratio(step, &probe);
        if direction * r <= -direction * two.ln() {
            break;
        }
        step *= two.powf(direction);
        if step > S::of(1e7) || step < S::of(1e-10) {
            break;
        }
    }
    step
}

/// Dual-averaging step-size controller (gamma = 0.05, t0 = 10, kappa = 0.75,
/// mu = log(10 epsilon0)).
struct DualAverage<S> {
    mu: S,
    log_step: S,
    log_step_avg: S,
    h_bar: S,
    count: u64,
    target: S,
}

impl<S: Real> DualAverage<S> {
    const GAMMA: f64 = 0.05;
    const T0: f64 = 10.0;
    const KAPPA: f64 = 0.75;

    fn new(initial_step: S, target: S) -> Self {
        Self {
            mu: (S::of(10.0) * initial_step).ln(),
            log_step: initial_step.ln(),
            log_step_avg: initial_step.ln(),
            h_bar: S::zero(),
            count: 1,
            target,
        }
    }

    fn advance(&mut self, accept_stat: S) {
        let m = S::of(self.count as f64);
        let w = (m + S::of(Self::T0)).recip();
        self.h_bar = (S::one() - w) * self.h_bar + w * (self.target - accept_stat.min(S::one()));
        self.log_step = self.mu - self.h_bar * m.sqrt() / S::of(Self::GAMMA);
        let eta = m.powf(S::of(-Self::KAPPA));
        self.log_step_avg = eta * self.log_step + (S::one() - eta) * self.log_step_avg;
        self.count += 1;
    }

    fn current(&self) -> S {
        self.log_step.exp()
    }

    fn adapted(&self) -> S {
        self.log_step_avg.exp()
    }
}

struct RunningVariance<S> {
    n: usize,
    mean: Vec<S>,
    m2: Vec<S>,
}

impl<S: Real> RunningVariance<S> {
    fn new(dim: usize) -> Self {
        Self {
            n: 0,
            mean: vec![S::zero(); dim],
            m2: vec![S::zero(); dim],
        }
    }

    fn push(&mut self, x: &[S]) {
        self.n += 1;
        let n = S::of(self.n as f64);
        for i in 0..x.len() {
            let delta = x[i] - self.mean[i];
            self.mean[i] += delta / n;
            self.m2[i] += delta * (x[i] - self.mean[i]);
        }
    }

    /// Sample variance regularized toward 1 with weight `5 / (n + 5)`.
    fn regularized(&self) -> Vec<S> {
        let n = self.n;
        let w = S::of(n as f64) / S::of(n as f64 + 5.0);
        let shrink = S::of(5.0) / S::of(n as f64 + 5.0);
        self.m2
            .iter()
            .map(|m2| {
                let var = if n > 1 {
                    *m2 / S::of((n - 1) as f64)
                } else {
                    S::one()
                };
                (w * var + shrink).max(S::of(1e-10))
            })
            .collect()
    }
}

/// Stan-style warmup schedule: a step-size-only head, expanding covariance
/// windows (doubling from 25), and a step-size-only tail.
pub const INIT_BUFFER: usize = 75;
pub const TERM_BUFFER: usize = 50;
pub const BASE_WINDOW: usize = 25;

struct WarmupSchedule {
    warmup: usize,
    window_end: usize,
    window_size: usize,
}

impl WarmupSchedule {
    fn new(warmup: usize) -> Result<Self, SamplerError> {
        let required = INIT_BUFFER + BASE_WINDOW + TERM_BUFFER;
        if warmup < required {
            return Err(SamplerError::WarmupTooShort { warmup, required });
        }
        let mut schedule = Self {
            warmup,
            window_end: INIT_BUFFER + BASE_WINDOW,
            window_size: BASE_WINDOW,
        };
        schedule.maybe_fold_last_window();
        Ok(schedule)
    }

    fn collect_end(&self) -> usize {
        self.warmup - TERM_BUFFER
    }

    fn in_collection(&self, m: usize) -> bool {
        m > INIT_BUFFER && m <= self.collect_end()
    }

    fn is_window_end(&self, m: usize) -> bool {
        m == self.window_end.min(self.collect_end())
    }

    fn advance_window(&mut self) {
        self.window_size *= 2;
        self.window_end += self.window_size;
        self.maybe_fold_last_window();
    }

    /// If the next doubling would not fit before the tail buffer, extend the
    /// current window to the end of the collection span instead.
    fn maybe_fold_last_window(&mut self) {
        if self.window_end + 2 * self.window_size > self.collect_end() {
            self.window_end = self.collect_end();
        }
    }
}

/// Draws and statistics of a single chain (post-warmup only).
#[derive(Clone, Debug)]
pub struct ChainDraws<S> {
    pub draws: Array2<S>,
    pub energy: Vec<S>,
    pub stats: Vec<DrawStats<S>>,
    /// Adapted step size used for the sampling phase.
    pub step_size: S,
    /// Adapted inverse mass diagonal (position variance estimates).
    pub inv_mass: Vec<S>,
    /// Warmup accept statistics, kept for adaptation checks; not persisted.
    pub warmup_accept: Vec<S>,
}

/// All chains plus parameter names and the configuration that produced them.
#[derive(Clone, Debug)]
pub struct PosteriorDraws<S> {
    pub chains: Vec<ChainDraws<S>>,
    pub param_names: Vec<String>,
    pub config: SamplerConfig,
}

impl<S: Real> PosteriorDraws<S> {
    pub fn dim(&self) -> usize {
        self.param_names.len()
    }

    pub fn n_draws_per_chain(&self) -> usize {
        self.chains.first().map_or(0, |c| c.draws.nrows())
    }

    pub fn total_draws(&self) -> usize {
        self.chains.iter().map(|c| c.draws.nrows()).sum()
    }

    pub fn total_divergences(&self) -> usize {
        self.chains
            .iter()
            .map(|c| c.stats.iter().filter(|s| s.divergent).count())
            .sum()
    }

    /// All chains stacked in chain order, one row per draw.
    pub fn pooled(&self) -> Array2<S> {
        let mut out = Array2::zeros((self.total_draws(), self.dim()));
        let mut row = 0;
        for chain in &self.chains {
            for r in chain.draws.rows() {
                for (j, v) in r.iter().enumerate() {
                    out[(row, j)] = *v;
                }
                row += 1;
            }
        }
        out
    }
}

/// Run `config.chains` independent NUTS chains from `center` (plus per-chain
/// jitter when requested). Chains execute in parallel threads; assembly is
/// deterministic by chain index.
pub fn sample<S, T>(
    target: &T,
    center: &[S],
    config: &SamplerConfig,
    param_names: Vec<String>,
) -> Result<PosteriorDraws<S>, SamplerError>
where
    S: Real,
    T: LogDensityGradient<S> + Sync,
{
    config.validate()?;
    WarmupSchedule::new(config.warmup)?;
    if center.len() != target.dim() {
        return Err(SamplerError::InvalidConfig(format!(
            "init point has dimension {}, target expects {}",
            center.len(),
            target.dim()
        )));
    }

    let chains: Vec<Result<ChainDraws<S>, SamplerError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..config.chains)
            .map(|chain_index| {
                scope.spawn(move || run_chain(target, center, config, chain_index as u64))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("chain thread panicked")).collect()
    });

    let mut out = Vec::with_capacity(config.chains);
    for chain in chains {
        out.push(chain?);
    }
    Ok(PosteriorDraws {
        chains: out,
        param_names,
        config: config.clone(),
    })
}

fn run_chain<S, T>(
    target: &T,
    center: &[S],
    config: &SamplerConfig,
    chain_index: u64,
) -> Result<ChainDraws<S>, SamplerError>
where
    S: Real,
    T: LogDensityGradient<S>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(chain_index));
    let dim = target.dim();

    let mut position = center.to_vec();
    if config.init == InitStrategy::Jitter {
        for q in position.iter_mut() {
            *q += (S::of(2.0) * S::unit_uniform(&mut rng) - S::one()) * S::of(0.1);
        }
    }
    let mut state = HmcState::new(target, position);
    if !state.logp.is_finite() {
        return Err(SamplerError::NonFiniteInit);
    }

    let target_accept = S::of(config.target_accept);
    let mut inv_mass = vec![S::one(); dim];
    let mut schedule = WarmupSchedule::new(config.warmup)?;
    let mut step = find_reasonable_step(target, &state, &inv_mass, &mut rng);
    let mut da = DualAverage::new(step, target_accept);
    let mut window = RunningVariance::new(dim);
    let mut warmup_accept = Vec::with_capacity(config.warmup);

    for m in 1..=config.warmup {
        let (next, stats) = nuts_transition(
            target,
            &state,
            step,
            &inv_mass,
            config.max_tree_depth,
            &mut rng,
        );
        state = next;
        warmup_accept.push(stats.accept_stat);
        da.advance(stats.accept_stat);
        step = da.current();

        if schedule.in_collection(m) {
            window.push(&state.position);
            if schedule.is_window_end(m) {
                inv_mass = window.regularized();
                window = RunningVariance::new(dim);
                schedule.advance_window();
                // Fresh step-size search against the new metric.
                step = find_reasonable_step(target, &state, &inv_mass, &mut rng);
                da = DualAverage::new(step, target_accept);
            }
        }
    }
    let step_size = da.adapted();

    let mut draws = Array2::zeros((config.draws, dim));
    let mut energy = Vec::with_capacity(config.draws);
    let mut stats_out = Vec::with_capacity(config.draws);
    for d in 0..config.draws {
        let (next, stats) = nuts_transition(
            target,
            &state,
            step_size,
            &inv_mass,
            config.max_tree_depth,
            &mut rng,
        );
        state = next;
        for (j, v) in state.position.iter().enumerate() {
            draws[(d, j)] = *v;
        }
        energy.push(stats.energy);
        stats_out.push(DrawStats {
            tree_depth: stats.tree_depth,
            accept_stat: stats.accept_stat,
            divergent: stats.divergent,
            step_size,
            energy_error: stats.energy_error,
            n_leapfrog: stats.n_leapfrog,
        });
    }

    Ok(ChainDraws {
        draws,
        energy,
        stats: stats_out,
        step_size,
        inv_mass,
        warmup_accept,
    })
}

// ---------------------------------------------------------------------------
// Persistence: one CSV per chain
// ---------------------------------------------------------------------------

pub const STAT_COLUMNS: [&str; 5] = [
    "energy",
    "tree_depth",
    "accept_stat",
    "divergent",
    "step_size",
];

/// Write one chain as CSV: parameter columns in order, then the stat columns.
pub fn write_chain_csv<S: Real, W: std::io::Write>(
    chain: &ChainDraws<S>,
    param_names: &[String],
    writer: W,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = param_names.to_vec();
    header.extend(STAT_COLUMNS.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for (d, row) in chain.draws.rows().into_iter().enumerate() {
        let mut record: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let s = &chain.stats[d];
        record.push(chain.energy[d].to_string());
        record.push(s.tree_depth.to_string());
        record.push(s.accept_stat.to_string());
        record.push(u8::from(s.divergent).to_string());
        record.push(s.step_size.to_string());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Read one chain written by [`write_chain_csv`]; returns the parameter
/// names and the chain.
pub fn read_chain_csv<S: Real>(path: &std::path::Path) -> Result<(Vec<String>, ChainDraws<S>), SamplerError> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| SamplerError::DrawsIo {
            path: display.clone(),
            source: std::io::Error::other(e.to_string()),
        })?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| SamplerError::DrawsFormat {
            path: display.clone(),
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.len() < STAT_COLUMNS.len() + 1 {
        return Err(SamplerError::DrawsFormat {
            path: display,
            message: "header too short".into(),
        });
    }
    let n_params = headers.len() - STAT_COLUMNS.len();
    for (k, expected) in STAT_COLUMNS.iter().enumerate() {
        if headers[n_params + k] != *expected {
            return Err(SamplerError::DrawsFormat {
                path: display,
                message: format!(
                    "expected stat column '{expected}', found '{}'",
                    headers[n_params + k]
                ),
            });
        }
    }
    let param_names = headers[..n_params].to_vec();

    let mut rows: Vec<Vec<S>> = Vec::new();
    let mut energy = Vec::new();
    let mut stats = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| SamplerError::DrawsFormat {
            path: display.clone(),
            message: e.to_string(),
        })?;
        let parse = |i: usize| -> Result<S, SamplerError> {
            S::parse_scalar(record.get(i).unwrap_or("")).ok_or_else(|| SamplerError::DrawsFormat {
                path: display.clone(),
                message: format!("unparseable number in column {i}"),
            })
        };
        let mut row = Vec::with_capacity(n_params);
        for i in 0..n_params {
            row.push(parse(i)?);
        }
        rows.push(row);
        energy.push(parse(n_params)?);
        let tree_depth = record
            .get(n_params + 1)
            .and_then(|s| s.parse::<u32>().ok())
            .ok_or_else(|| SamplerError::DrawsFormat {
                path: display.clone(),
                message: "bad tree_depth".into(),
            })?;
        let accept_stat = parse(n_params + 2)?;
        let divergent = record.get(n_params + 3) == Some("1");
        let step_size = parse(n_params + 4)?;
        stats.push(DrawStats {
            tree_depth,
            accept_stat,
            divergent,
            step_size,
            energy_error: S::zero(),
            n_leapfrog: 0,
        });
    }

    let n = rows.len();
    let mut draws = Array2::zeros((n, n_params));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            draws[(i, j)] = v;
        }
    }
    let step_size = stats.last().map_or(S::one(), |s| s.step_size);
    Ok((
        param_names,
        ChainDraws {
            draws,
            energy,
            stats,
            step_size,
            inv_mass: Vec::new(),
            warmup_accept: Vec::new(),
        },
    ))
}
