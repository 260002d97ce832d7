//! Player-substitution counterfactuals over posterior draws.
//!
//! A substitution swaps only the player effect `gamma` while holding shot
//! contexts and the population parameters of each draw fixed. Deltas are
//! computed per draw, decomposed across situational contexts, and summarized
//! with means, highest-density intervals, and upgrade probabilities; the
//! fit-adjusted transfer score reweights per-context upgrade probabilities
//! by a team's observed context shares.

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{ContextFlag, ContextFlags, FeatureMatrix};
use crate::model::{inv_logit, Model, ModelError};
use crate::num::Real;

#[derive(Debug, Error)]
pub enum CounterfactualError {
    #[error("shot set is empty")]
    EmptyShotSet,
    #[error("no shots found for team '{team}'")]
    EmptyTeam { team: String },
    #[error("shot {index} matches {matches} partition contexts; the partition must cover every shot exactly once")]
    Partition { index: usize, matches: usize },
    #[error("context weights sum to {sum}, expected 1 within 1e-12")]
    WeightSum { sum: f64 },
    #[error("upgrade probability for context '{context}' is {value}, outside [0, 1]")]
    InvalidProb { context: String, value: f64 },
    #[error("missing upgrade probability for weighted context '{context}'")]
    MissingProb { context: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One shot context extracted from the design matrix.
#[derive(Clone, Debug)]
pub struct ShotContext<S> {
    pub features: Vec<S>,
    pub flags: ContextFlags,
    pub player: usize,
    pub team: String,
}

/// An ordered set of shot contexts with a human-readable description.
#[derive(Clone, Debug)]
pub struct ShotSet<S> {
    pub rows: Vec<ShotContext<S>>,
    pub descriptor: String,
}

impl<S: Real> ShotSet<S> {
    fn from_rows(matrix: &FeatureMatrix<S>, keep: impl Fn(usize) -> bool, descriptor: String) -> Self {
        let mut rows = Vec::new();
        for i in 0..matrix.n_shots() {
            if keep(i) {
                rows.push(ShotContext {
                    features: matrix.x.row(i).to_vec(),
                    flags: matrix.context_flags[i],
                    player: matrix.player_idx[i],
                    team: matrix.teams[i].clone(),
                });
            }
        }
        Self { rows, descriptor }
    }

    /// All shots taken by one player, in matrix order.
    pub fn for_player(matrix: &FeatureMatrix<S>, player: usize, label: &str) -> Self {
        Self::from_rows(
            matrix,
            |i| matrix.player_idx[i] == player,
            format!("shots of {label}"),
        )
    }

    /// All shots taken by one team, in matrix order.
    pub fn for_team(matrix: &FeatureMatrix<S>, team: &str) -> Self {
        Self::from_rows(matrix, |i| matrix.teams[i] == team, format!("shots of team {team}"))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// One rule of a context partition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContextRule {
    Always,
    FlagIs(ContextFlag, bool),
}

impl ContextRule {
    fn matches(&self, flags: &ContextFlags) -> bool {
        match *self {
            ContextRule::Always => true,
            ContextRule::FlagIs(flag, expected) => flag.value(flags) == expected,
        }
    }
}

/// Named partition of shots into situational strata. Every shot must match
/// exactly one context.
#[derive(Clone, Debug)]
pub struct ContextPartition {
    pub contexts: Vec<(String, ContextRule)>,
}

impl ContextPartition {
    /// The trivial single-stratum partition.
    pub fn single() -> Self {
        Self {
            contexts: vec![("all".to_string(), ContextRule::Always)],
        }
    }

    /// Two strata split on a boolean flag. Pressure keeps its conventional
    /// open-play/pressure naming; other flags use `<flag>`/`not_<flag>`.
    pub fn by_flag(flag: ContextFlag) -> Self {
        let (off, on) = match flag {
            ContextFlag::UnderPressure => ("open_play".to_string(), "pressure".to_string()),
            other => (format!("not_{}", other.name()), other.name().to_string()),
        };
        Self {
            contexts: vec![
                (off, ContextRule::FlagIs(flag, false)),
                (on, ContextRule::FlagIs(flag, true)),
            ],
        }
    }

    pub fn context_names(&self) -> Vec<String> {
        self.contexts.iter().map(|(n, _)| n.clone()).collect()
    }

    /// Index of the unique context matching `flags`.
    pub fn assign(&self, index: usize, flags: &ContextFlags) -> Result<usize, CounterfactualError> {
        let mut found = None;
        let mut matches = 0;
        for (k, (_, rule)) in self.contexts.iter().enumerate() {
            if rule.matches(flags) {
                matches += 1;
                found = Some(k);
            }
        }
        if matches != 1 {
            return Err(CounterfactualError::Partition { index, matches });
        }
        Ok(found.expect("matches == 1"))
    }
}

/// Total counterfactual xG per posterior draw: player `player_b`'s effects
/// applied to every shot context in the set, contexts unchanged.
pub fn counterfactual_xg<S: Real>(
    model: &Model<'_, S>,
    draws: &Array2<S>,
    shots: &ShotSet<S>,
    player_b: usize,
) -> Result<Vec<S>, CounterfactualError> {
    if shots.is_empty() {
        return Err(CounterfactualError::EmptyShotSet);
    }
    check_player(model, player_b)?;
    let f = model.spec.n_features();
    let mut totals = Vec::with_capacity(draws.nrows());
    for draw in draws.rows() {
        let params = draw.as_slice().expect("row-major draws");
        let coef = model.combined_coefs(params);
        let coefs = coef.row(model.coef_index(player_b));
        let coefs = coefs.as_slice().expect("row-major coefficients");
        let alpha = params[0];
        let mut total = S::zero();
        for row in &shots.rows {
            let mut eta = alpha;
            for j in 0..f {
                eta += coefs[j] * row.features[j];
            }
            total += inv_logit(eta);
        }
        totals.push(total);
    }
    Ok(totals)
}

fn check_player<S: Real>(model: &Model<'_, S>, player: usize) -> Result<(), CounterfactualError> {
    if player >= model.spec.n_players {
        let mut probe = vec![S::zero(); model.spec.n_features()];
        // Surfaces the model's own out-of-range error.
        model.effective_coefs(&vec![S::zero(); model.dim()], player, &mut probe)?;
    }
    Ok(())
}

/// Shortest contiguous interval over the samples containing
/// `ceil(mass * len)` points; ties resolve to the lowest interval.
pub fn hdi<S: Real>(samples: &[S], mass: f64) -> (S, S) {
    debug_assert!(!samples.is_empty());
    debug_assert!(mass > 0.0 && mass < 1.0);
    let mut sorted: Vec<S> = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let n = sorted.len();
    let k = ((mass * n as f64).ceil() as usize).clamp(1, n);
    let mut best = (sorted[0], sorted[k - 1]);
    let mut best_width = sorted[k - 1] - sorted[0];
    for i in 1..=n - k {
        let width = sorted[i + k - 1] - sorted[i];
        if width < best_width {
            best_width = width;
            best = (sorted[i], sorted[i + k - 1]);
        }
    }
    best
}

/// Mean, 95%-mass HDI and tie-aware positive probability of a delta sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats<S> {
    pub mean: S,
    pub hdi_low: S,
    pub hdi_high: S,
    pub prob_positive: S,
}

/// Summarize per-draw deltas: exact zeros count half toward the upgrade
/// probability.
pub fn summarize<S: Real>(per_draw: &[S], mass: f64) -> SummaryStats<S> {
    let n = S::of(per_draw.len() as f64);
    let mean = per_draw.iter().copied().sum::<S>() / n;
    let (hdi_low, hdi_high) = hdi(per_draw, mass);
    let mut score = S::zero();
    for &d in per_draw {
        if d > S::zero() {
            score += S::one();
        } else if d == S::zero() {
            score += S::of(0.5);
        }
    }
    SummaryStats {
        mean,
        hdi_low,
        hdi_high,
        prob_positive: score / n,
    }
}

/// Per-context slice of a counterfactual delta.
#[derive(Clone, Debug)]
pub struct ContextDelta<S> {
    pub n_shots: usize,
    pub stats: SummaryStats<S>,
    pub per_draw: Vec<S>,
}

/// Counterfactual delta summary over a shot set, total and per context.
#[derive(Clone, Debug)]
pub struct DeltaSummary<S> {
    pub stats: SummaryStats<S>,
    pub per_draw: Vec<S>,
    pub per_context: BTreeMap<String, ContextDelta<S>>,
    pub factual_mean: S,
    pub counterfactual_mean: S,
}

/// HDI mass used for every reported interval.
pub const HDI_MASS: f64 = 0.95;

/// Per-draw `Delta_s = xG_{B,s}(set) - xG_{factual,s}(set)` with a full
/// per-context decomposition. The factual side uses each row's original
/// shooter. The per-draw total is assembled as the sum of the per-context
/// sums (context-name order), making the context additivity identity exact.
pub fn delta_xg<S: Real>(
    model: &Model<'_, S>,
    draws: &Array2<S>,
    shots: &ShotSet<S>,
    player_b: usize,
    partition: &ContextPartition,
) -> Result<DeltaSummary<S>, CounterfactualError> {
    if shots.is_empty() {
        return Err(CounterfactualError::EmptyShotSet);
    }
    let f = model.spec.n_features();
    let n_draws = draws.nrows();

    // Context label per row, validated to cover each shot exactly once.
    let labels: Vec<usize> = shots
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| partition.assign(i, &row.flags))
        .collect::<Result<_, _>>()?;
    let n_contexts = partition.contexts.len();
    let mut context_counts = vec![0usize; n_contexts];
    for &l in &labels {
        context_counts[l] += 1;
    }

    // Sorted context-name order fixes the summation order of the total.
    let mut name_order: Vec<usize> = (0..n_contexts).collect();
    name_order.sort_by(|&a, &b| partition.contexts[a].0.cmp(&partition.contexts[b].0));

    check_player(model, player_b)?;
    for row in &shots.rows {
        check_player(model, row.player)?;
    }
    let mut per_context_draws: Vec<Vec<S>> = (0..n_contexts)
        .map(|_| Vec::with_capacity(n_draws))
        .collect();
    let mut per_draw = Vec::with_capacity(n_draws);
    let mut factual_sum = S::zero();
    let mut counterfactual_sum = S::zero();

    for draw in draws.rows() {
        let params = draw.as_slice().expect("row-major draws");
        let alpha = params[0];
        let coef = model.combined_coefs(params);
        let coefs = coef.as_slice().expect("row-major coefficients");
        let coefs_b = &coefs[model.coef_index(player_b) * f..(model.coef_index(player_b) + 1) * f];
        let mut context_sum = vec![S::zero(); n_contexts];
        for (row, &label) in shots.rows.iter().zip(&labels) {
            let start = model.coef_index(row.player) * f;
            let coefs_row = &coefs[start..start + f];
            let mut eta_b = alpha;
            let mut eta_a = alpha;
            for j in 0..f {
                eta_b += coefs_b[j] * row.features[j];
                eta_a += coefs_row[j] * row.features[j];
            }
            let p_b = inv_logit(eta_b);
            let p_a = inv_logit(eta_a);
            context_sum[label] += p_b - p_a;
            factual_sum += p_a;
            counterfactual_sum += p_b;
        }
        let mut total = S::zero();
        for &c in &name_order {
            total += context_sum[c];
        }
        for (c, sum) in context_sum.into_iter().enumerate() {
            per_context_draws[c].push(sum);
        }
        per_draw.push(total);
    }

    let mut per_context = BTreeMap::new();
    for c in 0..n_contexts {
        if context_counts[c] == 0 {
            continue;
        }
        let draws_c = std::mem::take(&mut per_context_draws[c]);
        per_context.insert(
            partition.contexts[c].0.clone(),
            ContextDelta {
                n_shots: context_counts[c],
                stats: summarize(&draws_c, HDI_MASS),
                per_draw: draws_c,
            },
        );
    }

    let scale = S::of(n_draws as f64);
    Ok(DeltaSummary {
        stats: summarize(&per_draw, HDI_MASS),
        per_draw,
        per_context,
        factual_mean: factual_sum / scale,
        counterfactual_mean: counterfactual_sum / scale,
    })
}

/// Context-conditioned decomposition of a substitution delta: the
/// per-context slices of [`delta_xg`], keyed by context name. Contexts with
/// no shots are absent; the present slices sum exactly to the total delta,
/// draw by draw.
pub fn c3t_decompose<S: Real>(
    model: &Model<'_, S>,
    draws: &Array2<S>,
    shots: &ShotSet<S>,
    player_b: usize,
    partition: &ContextPartition,
) -> Result<BTreeMap<String, ContextDelta<S>>, CounterfactualError> {
    Ok(delta_xg(model, draws, shots, player_b, partition)?.per_context)
}

/// Empirical context shares of a team's shot portfolio. Every partition
/// context appears, including zero-count ones.
pub fn team_context_weights<S: Real>(
    team_shots: &ShotSet<S>,
    partition: &ContextPartition,
) -> Result<BTreeMap<String, S>, CounterfactualError> {
    if team_shots.is_empty() {
        return Err(CounterfactualError::EmptyShotSet);
    }
    let mut counts = vec![0usize; partition.contexts.len()];
    for (i, row) in team_shots.rows.iter().enumerate() {
        counts[partition.assign(i, &row.flags)?] += 1;
    }
    let total = S::of(team_shots.len() as f64);
    Ok(partition
        .contexts
        .iter()
        .zip(counts)
        .map(|((name, _), c)| (name.clone(), S::of(c as f64) / total))
        .collect())
}

/// Fit-adjusted transfer score: `sum_c w_c Pr(delta xG_c > 0)`.
///
/// Weights must sum to one within 1e-12; probabilities must lie in [0, 1].
/// Zero-weight contexts may omit their probability.
pub fn fats<S: Real>(
    upgrade_probs: &BTreeMap<String, S>,
    weights: &BTreeMap<String, S>,
) -> Result<S, CounterfactualError> {
    let sum: S = weights.values().copied().sum();
    if (sum - S::one()).abs() > S::of(1e-12) {
        return Err(CounterfactualError::WeightSum {
            sum: sum.to_f64().unwrap_or(f64::NAN),
        });
    }
    let mut score = S::zero();
    for (context, &w) in weights {
        if w == S::zero() {
            continue;
        }
        let p = *upgrade_probs
            .get(context)
            .ok_or_else(|| CounterfactualError::MissingProb {
                context: context.clone(),
            })?;
        if p < S::zero() || p > S::one() {
            return Err(CounterfactualError::InvalidProb {
                context: context.clone(),
                value: p.to_f64().unwrap_or(f64::NAN),
            });
        }
        score += w * p;
    }
    Ok(score)
}

/// FATS block of a counterfactual report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FatsReport {
    pub team: String,
    pub weights: BTreeMap<String, f64>,
    pub upgrade_probs: BTreeMap<String, f64>,
    pub fats: f64,
}

/// Build the FATS report for a substitution evaluated under a team's
/// context weighting.
pub fn fats_report<S: Real>(
    delta: &DeltaSummary<S>,
    team: &str,
    team_shots: &ShotSet<S>,
    partition: &ContextPartition,
) -> Result<FatsReport, CounterfactualError> {
    if team_shots.is_empty() {
        return Err(CounterfactualError::EmptyTeam {
            team: team.to_string(),
        });
    }
    let weights = team_context_weights(team_shots, partition)?;
    let upgrade_probs: BTreeMap<String, S> = delta
        .per_context
        .iter()
        .map(|(k, v)| (k.clone(), v.stats.prob_positive))
        .collect();
    let score = fats(&upgrade_probs, &weights)?;
    Ok(FatsReport {
        team: team.to_string(),
        weights: to_f64_map(&weights),
        upgrade_probs: to_f64_map(&upgrade_probs),
        fats: score.to_f64().unwrap_or(f64::NAN),
    })
}

fn to_f64_map<S: Real>(map: &BTreeMap<String, S>) -> BTreeMap<String, f64> {
    map.iter()
        .map(|(k, v)| (k.clone(), v.to_f64().unwrap_or(f64::NAN)))
        .collect()
}

/// Serializable counterfactual report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CounterfactualReport {
    pub query: QueryEcho,
    pub factual_xg_mean: f64,
    pub counterfactual_xg_mean: f64,
    pub delta: DeltaBlock,
    pub per_context: BTreeMap<String, ContextBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fats: Option<FatsReport>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QueryEcho {
    pub from_player: String,
    pub to_player: String,
    pub shot_set: String,
    pub context_partition: Vec<String>,
    pub n_shots: usize,
    pub n_draws: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeltaBlock {
    pub mean: f64,
    pub hdi_low: f64,
    pub hdi_high: f64,
    pub prob_positive: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContextBlock {
    pub n_shots: usize,
    #[serde(flatten)]
    pub delta: DeltaBlock,
}

fn to_block<S: Real>(stats: &SummaryStats<S>) -> DeltaBlock {
    DeltaBlock {
        mean: stats.mean.to_f64().unwrap_or(f64::NAN),
        hdi_low: stats.hdi_low.to_f64().unwrap_or(f64::NAN),
        hdi_high: stats.hdi_high.to_f64().unwrap_or(f64::NAN),
        prob_positive: stats.prob_positive.to_f64().unwrap_or(f64::NAN),
    }
}

impl<S: Real> DeltaSummary<S> {
    pub fn to_report(
        &self,
        from_player: &str,
        to_player: &str,
        shot_set: &str,
        partition: &ContextPartition,
        fats: Option<FatsReport>,
    ) -> CounterfactualReport {
        CounterfactualReport {
            query: QueryEcho {
                from_player: from_player.to_string(),
                to_player: to_player.to_string(),
                shot_set: shot_set.to_string(),
                context_partition: partition.context_names(),
                n_shots: self.per_context.values().map(|c| c.n_shots).sum(),
                n_draws: self.per_draw.len(),
            },
            factual_xg_mean: self.factual_mean.to_f64().unwrap_or(f64::NAN),
            counterfactual_xg_mean: self.counterfactual_mean.to_f64().unwrap_or(f64::NAN),
            delta: to_block(&self.stats),
            per_context: self
                .per_context
                .iter()
                .map(|(k, v)| {
                    (
                        k.clone(),
                        ContextBlock {
                            n_shots: v.n_shots,
                            delta: to_block(&v.stats),
                        },
                    )
                })
                .collect(),
            fats,
        }
    }
}
