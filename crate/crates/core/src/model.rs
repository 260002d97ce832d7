//! Bayesian logistic xG models: a population-level baseline and a
//! hierarchical extension with per-player coefficient deviations.
//!
//! The hierarchical model is non-centered: the sampler sees standardized
//! deviations `gamma_raw` and group log-scales `u = log sigma`, and the
//! player effects are reconstructed as `gamma = mu + gamma_raw * sigma`.
//! The log-posterior and its gradient are analytic; there is no autodiff.
//!
//! Unconstrained parameter vector layout (fixed flattening order):
//! `alpha`, `beta` (feature order), then for the hierarchical model
//! `gamma_raw` row-major by player, and `u = log sigma` in group order.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureMatrix;
use crate::num::{log_norm_cdf, log_norm_pdf, mills_ratio, Real, LN_2PI};
use crate::nuts::{self, LogDensityGradient, PosteriorDraws, SamplerConfig};
use crate::priors::PriorMeanMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Baseline,
    Hierarchical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorMode {
    WeaklyInformative,
    ExpertInformed,
}

/// Prior on one population-level coefficient.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub enum CoefPrior<S> {
    Normal { mean: S, sd: S },
    SkewNormal { location: S, scale: S, shape: S },
}

/// Full model specification: kind, priors, and the group structure that
/// shares deviation scales across features.
#[derive(Clone, Debug)]
pub struct ModelSpec<S> {
    pub kind: ModelKind,
    pub prior_mode: PriorMode,
    pub n_players: usize,
    pub feature_names: Vec<String>,
    /// Normal prior on the intercept: (mean, sd).
    pub intercept_prior: (S, S),
    pub coef_priors: Vec<CoefPrior<S>>,
    pub group_names: Vec<String>,
    /// HalfNormal scale per group.
    pub group_scales: Vec<S>,
    /// Group index per feature.
    pub feature_group: Vec<usize>,
}

impl<S: Real> ModelSpec<S> {
    /// The 17-feature xG specification with its documented priors:
    /// intercept Normal(-3, 0.5); skew-normal priors on the three geometric
    /// coefficients (distance (-0.5, 1, -4), keeper distance (0.3, 1, 4),
    /// angle (0.3, 1, 3)); Normal(0, 5) on everything else; HalfNormal
    /// deviation scales 0.3 / 0.5 / 0.7 / 2.0 by group.
    pub fn xg(kind: ModelKind, prior_mode: PriorMode, n_players: usize) -> Self {
        use crate::features::{feature, FEATURE_NAMES};
        use crate::priors::{group_assignment, GROUP_ORDER};

        let mut coef_priors = vec![
            CoefPrior::Normal {
                mean: S::zero(),
                sd: S::of(5.0),
            };
            FEATURE_NAMES.len()
        ];
        coef_priors[feature::SHOT_DISTANCE] = CoefPrior::SkewNormal {
            location: S::of(-0.5),
            scale: S::one(),
            shape: S::of(-4.0),
        };
        coef_priors[feature::GK_DISTANCE] = CoefPrior::SkewNormal {
            location: S::of(0.3),
            scale: S::one(),
            shape: S::of(4.0),
        };
        coef_priors[feature::SHOT_ANGLE] = CoefPrior::SkewNormal {
            location: S::of(0.3),
            scale: S::one(),
            shape: S::of(3.0),
        };

        let assignment = group_assignment();
        let feature_group = assignment
            .groups
            .iter()
            .map(|g| GROUP_ORDER.iter().position(|x| x == g).unwrap())
            .collect();

        Self {
            kind,
            prior_mode,
            n_players,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            intercept_prior: (S::of(-3.0), S::of(0.5)),
            coef_priors,
            group_names: GROUP_ORDER.iter().map(|g| g.name().to_string()).collect(),
            group_scales: vec![S::of(0.3), S::of(0.5), S::of(0.7), S::of(2.0)],
            feature_group,
        }
    }

    pub fn n_features(&self) -> usize {
        self.coef_priors.len()
    }

    pub fn n_groups(&self) -> usize {
        self.group_scales.len()
    }

    pub fn layout(&self) -> ParamLayout {
        ParamLayout {
            n_features: self.n_features(),
            n_players: self.n_players,
            n_groups: self.n_groups(),
            hierarchical: self.kind == ModelKind::Hierarchical,
        }
    }
}

/// Index arithmetic for the flat unconstrained parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamLayout {
    pub n_features: usize,
    pub n_players: usize,
    pub n_groups: usize,
    pub hierarchical: bool,
}

impl ParamLayout {
    pub const ALPHA: usize = 0;

    pub fn dim(&self) -> usize {
        if self.hierarchical {
            1 + self.n_features + self.n_players * self.n_features + self.n_groups
        } else {
            1 + self.n_features
        }
    }

    pub fn beta(&self, feature: usize) -> usize {
        1 + feature
    }

    pub fn gamma_raw(&self, player: usize, feature: usize) -> usize {
        debug_assert!(self.hierarchical);
        1 + self.n_features + player * self.n_features + feature
    }

    pub fn log_sigma(&self, group: usize) -> usize {
        debug_assert!(self.hierarchical);
        1 + self.n_features + self.n_players * self.n_features + group
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("player index {player} out of range for {n_players} players")]
    PlayerIndex { player: usize, n_players: usize },
    #[error("parameter vector has dimension {got}, expected {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("feature matrix has {got} columns, spec expects {expected}")]
    FeatureCount { got: usize, expected: usize },
    #[error("expert-informed prior mode requires a prior mean matrix of shape ({p}, {f})")]
    MissingPriorMeans { p: usize, f: usize },
    #[error("non-finite parameter at index {index}")]
    NonFiniteParam { index: usize },
    #[error("log-posterior evaluated to a non-finite value")]
    NonFiniteValue,
    #[error("non-finite gradient at parameter index {index}")]
    NonFiniteGradient { index: usize },
    #[error("MAP line search failed from a non-finite objective")]
    MapNonFinite,
    #[error(transparent)]
    Sampler(#[from] nuts::SamplerError),
}

/// Numerically stable logistic function.
pub fn inv_logit<S: Real>(eta: S) -> S {
    if eta >= S::zero() {
        (S::one() + (-eta).exp()).recip()
    } else {
        let e = eta.exp();
        e / (S::one() + e)
    }
}

/// `log(1 + exp(t))` without overflow.
fn softplus<S: Real>(t: S) -> S {
    if t > S::zero() {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn normal_lp<S: Real>(v: S, mean: S, sd: S) -> S {
    let z = (v - mean) / sd;
    log_norm_pdf(z) - sd.ln()
}

fn skew_normal_lp<S: Real>(v: S, location: S, scale: S, shape: S) -> S {
    let z = (v - location) / scale;
    S::of(std::f64::consts::LN_2) + log_norm_pdf(z) - scale.ln() + log_norm_cdf(shape * z)
}

fn skew_normal_dlp<S: Real>(v: S, location: S, scale: S, shape: S) -> S {
    let z = (v - location) / scale;
    (-z + shape * mills_ratio(shape * z)) / scale
}

/// HalfNormal(scale) density on `sigma = exp(u)` plus the `log |d sigma/du| = u`
/// Jacobian, as a function of the unconstrained `u`.
fn half_normal_exp_lp<S: Real>(u: S, scale: S) -> S {
    let sigma2 = (S::of(2.0) * u).exp();
    S::of(std::f64::consts::LN_2) - S::of(0.5) * S::of(LN_2PI) - scale.ln()
        - sigma2 / (S::of(2.0) * scale * scale)
        + u
}

fn half_normal_exp_dlp<S: Real>(u: S, scale: S) -> S {
    let sigma2 = (S::of(2.0) * u).exp();
    S::one() - sigma2 / (scale * scale)
}

/// A model bound to its data and prior means; evaluation methods are pure
/// and safe to share across sampler chains.
pub struct Model<'a, S> {
    pub spec: &'a ModelSpec<S>,
    pub data: &'a FeatureMatrix<S>,
    /// Effective prior means; `None` means all zeros (weakly informative).
    mu: Option<&'a PriorMeanMatrix<S>>,
    layout: ParamLayout,
}

impl<'a, S: Real> Model<'a, S> {
    pub fn new(
        spec: &'a ModelSpec<S>,
        data: &'a FeatureMatrix<S>,
        prior_means: Option<&'a PriorMeanMatrix<S>>,
    ) -> Result<Self, ModelError> {
        let f = spec.n_features();
        if data.x.ncols() != f {
            return Err(ModelError::FeatureCount {
                got: data.x.ncols(),
                expected: f,
            });
        }
        if let Some(&worst) = data.player_idx.iter().max() {
            if worst >= spec.n_players {
                return Err(ModelError::PlayerIndex {
                    player: worst,
                    n_players: spec.n_players,
                });
            }
        }
        let mu = match (spec.kind, spec.prior_mode) {
            (ModelKind::Hierarchical, PriorMode::ExpertInformed) => {
                let m = prior_means.ok_or(ModelError::MissingPriorMeans {
                    p: spec.n_players,
                    f,
                })?;
                if m.mu.nrows() != spec.n_players || m.mu.ncols() != f {
                    return Err(ModelError::MissingPriorMeans {
                        p: spec.n_players,
                        f,
                    });
                }
                Some(m)
            }
            _ => None,
        };
        Ok(Self {
            spec,
            data,
            mu,
            layout: spec.layout(),
        })
    }

    pub fn layout(&self) -> ParamLayout {
        self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn mu_at(&self, player: usize, feature: usize) -> S {
        self.mu.map_or(S::zero(), |m| m.mu[(player, feature)])
    }

    /// Export names in flattening order: `alpha`, `beta[<feature>]`,
    /// `gamma_raw[<player>,<feature>]`, `log_sigma[<group>]`.
    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.dim());
        names.push("alpha".to_string());
        for f in &self.spec.feature_names {
            names.push(format!("beta[{f}]"));
        }
        if self.layout.hierarchical {
            for p in 0..self.spec.n_players {
                for f in &self.spec.feature_names {
                    names.push(format!("gamma_raw[{p},{f}]"));
                }
            }
            for g in &self.spec.group_names {
                names.push(format!("log_sigma[{g}]"));
            }
        }
        names
    }

    fn check_dim(&self, params: &[S]) -> Result<(), ModelError> {
        if params.len() != self.dim() {
            return Err(ModelError::Dimension {
                got: params.len(),
                expected: self.dim(),
            });
        }
        Ok(())
    }

    /// Group deviation scales `sigma_g = exp(u_g)` for one parameter vector.
    fn sigmas(&self, params: &[S]) -> Vec<S> {
        (0..self.spec.n_groups())
            .map(|g| params[self.layout.log_sigma(g)].exp())
            .collect()
    }

    /// Reconstructed player effects `gamma = mu + gamma_raw * sigma_group`,
    /// one row per player. Baseline models have all-zero effects.
    pub fn gamma_matrix(&self, params: &[S]) -> Array2<S> {
        let (p, f) = (self.spec.n_players, self.spec.n_features());
        let mut gamma = Array2::zeros((p, f));
        if self.layout.hierarchical {
            let sigmas = self.sigmas(params);
            for i in 0..p {
                for j in 0..f {
                    let raw = params[self.layout.gamma_raw(i, j)];
                    gamma[(i, j)] =
                        self.mu_at(i, j) + raw * sigmas[self.spec.feature_group[j]];
                }
            }
        }
        gamma
    }

    /// Effective per-player coefficients `beta + gamma_i`.
    pub fn effective_coefs(&self, params: &[S], player: usize, out: &mut [S]) -> Result<(), ModelError> {
        if player >= self.spec.n_players && self.layout.hierarchical {
            return Err(ModelError::PlayerIndex {
                player,
                n_players: self.spec.n_players,
            });
        }
        let f = self.spec.n_features();
        debug_assert_eq!(out.len(), f);
        if self.layout.hierarchical {
            let sigmas = self.sigmas(params);
            for j in 0..f {
                let raw = params[self.layout.gamma_raw(player, j)];
                out[j] = params[self.layout.beta(j)]
                    + self.mu_at(player, j)
                    + raw * sigmas[self.spec.feature_group[j]];
            }
        } else {
            for j in 0..f {
                out[j] = params[self.layout.beta(j)];
            }
        }
        Ok(())
    }

    /// Log-odds `eta = alpha + (beta + gamma_player)^T x`; the baseline model
    /// ignores the player.
    pub fn linear_predictor(&self, params: &[S], x: &[S], player: usize) -> Result<S, ModelError> {
        self.check_dim(params)?;
        let f = self.spec.n_features();
        let mut coefs = vec![S::zero(); f];
        self.effective_coefs(params, if self.layout.hierarchical { player } else { 0 }, &mut coefs)?;
        let mut eta = params[ParamLayout::ALPHA];
        for j in 0..f {
            eta += coefs[j] * x[j];
        }
        Ok(eta)
    }

    /// Bernoulli log-likelihood over the bound data, in fixed row order.
    pub fn log_likelihood(&self, params: &[S]) -> Result<S, ModelError> {
        self.check_dim(params)?;
        let coef = self.combined_coefs(params);
        let alpha = params[ParamLayout::ALPHA];
        let hier = self.layout.hierarchical;
        let coefs = coef.as_slice().expect("row-major coefficients");
        let f = self.spec.n_features();
        let xs = self.data.x.as_slice().expect("row-major design matrix");
        let mut ll = S::zero();
        for row in 0..self.data.n_shots() {
            let player = if hier { self.data.player_idx[row] } else { 0 };
            let xr = &xs[row * f..(row + 1) * f];
            let cr = &coefs[player * f..(player + 1) * f];
            let mut eta = alpha;
            for j in 0..f {
                eta += cr[j] * xr[j];
            }
            ll += if self.data.y[row] == 1 {
                -softplus(-eta)
            } else {
                -softplus(eta)
            };
        }
        Ok(ll)
    }

    /// Row of [`Model::combined_coefs`] holding a player's coefficients.
    pub(crate) fn coef_index(&self, player: usize) -> usize {
        if self.layout.hierarchical {
            player
        } else {
            0
        }
    }

    /// `beta + gamma_i` for every player (a single broadcast row for the
    /// baseline model).
    pub(crate) fn combined_coefs(&self, params: &[S]) -> Array2<S> {
        let f = self.spec.n_features();
        let players = if self.layout.hierarchical {
            self.spec.n_players
        } else {
            1
        };
        let mut coef = Array2::zeros((players.max(1), f));
        if self.layout.hierarchical {
            let sigmas = self.sigmas(params);
            for i in 0..players {
                for j in 0..f {
                    let raw = params[self.layout.gamma_raw(i, j)];
                    coef[(i, j)] = params[self.layout.beta(j)]
                        + self.mu_at(i, j)
                        + raw * sigmas[self.spec.feature_group[j]];
                }
            }
        } else {
            for j in 0..f {
                coef[(0, j)] = params[self.layout.beta(j)];
            }
        }
        coef
    }

    /// Sum of the prior log-densities of Table-style priors: Normal or
    /// skew-normal on population coefficients, standard normal on raw
    /// deviations, HalfNormal (with Jacobian) on the group scales.
    pub fn log_prior(&self, params: &[S]) -> Result<S, ModelError> {
        self.check_dim(params)?;
        let (im, isd) = self.spec.intercept_prior;
        let mut lp = normal_lp(params[ParamLayout::ALPHA], im, isd);
        for (j, prior) in self.spec.coef_priors.iter().enumerate() {
            let v = params[self.layout.beta(j)];
            lp += match *prior {
                CoefPrior::Normal { mean, sd } => normal_lp(v, mean, sd),
                CoefPrior::SkewNormal {
                    location,
                    scale,
                    shape,
                } => skew_normal_lp(v, location, scale, shape),
            };
        }
        if self.layout.hierarchical {
            for i in 0..self.spec.n_players {
                for j in 0..self.spec.n_features() {
                    let raw = params[self.layout.gamma_raw(i, j)];
                    lp += log_norm_pdf(raw);
                }
            }
            for g in 0..self.spec.n_groups() {
                lp += half_normal_exp_lp(params[self.layout.log_sigma(g)], self.spec.group_scales[g]);
            }
        }
        Ok(lp)
    }

    /// Log-posterior and its exact gradient. Likelihood contributions are
    /// accumulated in row order, then chained through
    /// `gamma = mu + gamma_raw * exp(u)`.
    pub fn log_posterior_and_gradient(
        &self,
        params: &[S],
        grad: &mut [S],
    ) -> Result<S, ModelError> {
        self.check_dim(params)?;
        if grad.len() != self.dim() {
            return Err(ModelError::Dimension {
                got: grad.len(),
                expected: self.dim(),
            });
        }
        for (i, v) in params.iter().enumerate() {
            if !v.is_finite() {
                return Err(ModelError::NonFiniteParam { index: i });
            }
        }
        for g in grad.iter_mut() {
            *g = S::zero();
        }

        let f = self.spec.n_features();
        let alpha = params[ParamLayout::ALPHA];
        let hier = self.layout.hierarchical;
        let sigmas = if hier { self.sigmas(params) } else { Vec::new() };
        let coef = self.combined_coefs(params);

        // Likelihood pass: residual r = y - p drives every eta-derivative.
        // d_eta[(i, j)] collects sum r * x_j over player i's rows; the beta
        // gradient is its column sum since every row has exactly one player.
        let players = coef.nrows();
        let coefs = coef.as_slice().expect("row-major coefficients");
        let xs = self.data.x.as_slice().expect("row-major design matrix");
        let mut d_eta = vec![S::zero(); players * f];
        let mut value = S::zero();
        let mut d_alpha = S::zero();
        for row in 0..self.data.n_shots() {
            let player = if hier { self.data.player_idx[row] } else { 0 };
            let xr = &xs[row * f..(row + 1) * f];
            let cr = &coefs[player * f..(player + 1) * f];
            let mut eta = alpha;
            for j in 0..f {
                eta += cr[j] * xr[j];
            }
            let (ll, r) = if self.data.y[row] == 1 {
                (-softplus(-eta), S::one() - inv_logit(eta))
            } else {
                (-softplus(eta), -inv_logit(eta))
            };
            value += ll;
            d_alpha += r;
            let dr = &mut d_eta[player * f..(player + 1) * f];
            for j in 0..f {
                dr[j] += r * xr[j];
            }
        }
        grad[ParamLayout::ALPHA] += d_alpha;
        for i in 0..players {
            for j in 0..f {
                grad[self.layout.beta(j)] += d_eta[i * f + j];
            }
        }
        if hier {
            for i in 0..players {
                for j in 0..f {
                    let g = self.spec.feature_group[j];
                    let raw = params[self.layout.gamma_raw(i, j)];
                    let d = d_eta[i * f + j];
                    grad[self.layout.gamma_raw(i, j)] += d * sigmas[g];
                    grad[self.layout.log_sigma(g)] += d * raw * sigmas[g];
                }
            }
        }

        // Prior pass.
        let (im, isd) = self.spec.intercept_prior;
        value += normal_lp(alpha, im, isd);
        grad[ParamLayout::ALPHA] -= (alpha - im) / (isd * isd);
        for (j, prior) in self.spec.coef_priors.iter().enumerate() {
            let v = params[self.layout.beta(j)];
            match *prior {
                CoefPrior::Normal { mean, sd } => {
                    value += normal_lp(v, mean, sd);
                    grad[self.layout.beta(j)] -= (v - mean) / (sd * sd);
                }
                CoefPrior::SkewNormal {
                    location,
                    scale,
                    shape,
                } => {
                    value += skew_normal_lp(v, location, scale, shape);
                    grad[self.layout.beta(j)] += skew_normal_dlp(v, location, scale, shape);
                }
            }
        }
        if hier {
            for i in 0..self.spec.n_players {
                for j in 0..f {
                    let idx = self.layout.gamma_raw(i, j);
                    let raw = params[idx];
                    value += log_norm_pdf(raw);
                    grad[idx] -= raw;
                }
            }
            for g in 0..self.spec.n_groups() {
                let idx = self.layout.log_sigma(g);
                value += half_normal_exp_lp(params[idx], self.spec.group_scales[g]);
                grad[idx] += half_normal_exp_dlp(params[idx], self.spec.group_scales[g]);
            }
        }

        if !value.is_finite() {
            return Err(ModelError::NonFiniteValue);
        }
        for (i, g) in grad.iter().enumerate() {
            if !g.is_finite() {
                return Err(ModelError::NonFiniteGradient { index: i });
            }
        }
        Ok(value)
    }

    /// All-zero start with the intercept at its prior mean.
    pub fn default_init(&self) -> Vec<S> {
        let mut init = vec![S::zero(); self.dim()];
        init[ParamLayout::ALPHA] = self.spec.intercept_prior.0;
        init
    }

    /// Maximum a posteriori estimate by gradient ascent with Armijo
    /// backtracking (halve until satisfied, c = 1e-4). Stops when the
    /// gradient infinity norm drops below `tol` or after `max_iter`
    /// iterations; the result never has a lower log-posterior than `init`.
    pub fn map_estimate(
        &self,
        init: &[S],
        max_iter: usize,
        tol: S,
    ) -> Result<Vec<S>, ModelError> {
        let c = S::of(1e-4);
        let mut x = init.to_vec();
        let mut grad = vec![S::zero(); self.dim()];
        let mut value = self.log_posterior_and_gradient(&x, &mut grad)?;
        let mut step = S::one();
        let mut candidate = vec![S::zero(); self.dim()];
        let mut cand_grad = vec![S::zero(); self.dim()];

        for _ in 0..max_iter {
            let g_inf = grad
                .iter()
                .fold(S::zero(), |acc, g| acc.max(g.abs()));
            if g_inf < tol {
                break;
            }
            let g2: S = grad.iter().map(|g| *g * *g).sum();
            let mut s = step;
            loop {
                for (i, c_i) in candidate.iter_mut().enumerate() {
                    *c_i = x[i] + s * grad[i];
                }
                match self.log_posterior_and_gradient(&candidate, &mut cand_grad) {
                    Ok(new_value) if new_value >= value + c * s * g2 => {
                        x.copy_from_slice(&candidate);
                        grad.copy_from_slice(&cand_grad);
                        value = new_value;
                        step = s * S::of(2.0);
                        break;
                    }
                    Ok(_) | Err(ModelError::NonFiniteValue) => {
                        // Overshoot; retreat. NaN from a finite state would
                        // surface as NonFiniteGradient below.
                        s *= S::of(0.5);
                        if s < S::of(1e-20) {
                            return Ok(x);
                        }
                    }
                    Err(ModelError::NonFiniteGradient { .. })
                    | Err(ModelError::NonFiniteParam { .. }) => {
                        s *= S::of(0.5);
                        if s < S::of(1e-20) {
                            return Err(ModelError::MapNonFinite);
                        }
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        Ok(x)
    }
}

impl<S: Real> LogDensityGradient<S> for Model<'_, S> {
    fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn logp_and_grad(&self, position: &[S], grad: &mut [S]) -> S {
        match self.log_posterior_and_gradient(position, grad) {
            Ok(v) => v,
            Err(_) => {
                for g in grad.iter_mut() {
                    *g = S::zero();
                }
                S::neg_infinity()
            }
        }
    }
}

/// Per-draw goal probabilities for one shot and their mean.
pub fn predict_xg<S: Real>(
    model: &Model<'_, S>,
    draws: &Array2<S>,
    x: &[S],
    player: usize,
) -> Result<(S, Vec<S>), ModelError> {
    let mut probs = Vec::with_capacity(draws.nrows());
    for row in draws.rows() {
        let eta = model.linear_predictor(row.as_slice().unwrap(), x, player)?;
        probs.push(inv_logit(eta));
    }
    let mean = probs.iter().copied().sum::<S>() / S::of(probs.len() as f64);
    Ok((mean, probs))
}

/// Data weight of the partial pooling estimator: `tau^2 / (tau^2 + sigma^2)`.
pub fn pooling_factor<S: Real>(tau_sq: S, sigma_sq: S) -> S {
    tau_sq / (tau_sq + sigma_sq)
}

/// Result of the fit pipeline: posterior draws plus MAP bookkeeping.
pub struct FitResult<S> {
    pub draws: PosteriorDraws<S>,
    pub map_point: Vec<S>,
    pub map_log_posterior: Option<S>,
    pub map_fell_back_to_zero: bool,
}

pub const MAP_MAX_ITER: usize = 2_000;
pub const MAP_TOL: f64 = 1e-5;

/// MAP-initialise and sample. A MAP failure falls back to the zero init
/// with a warning recorded in the result.
pub fn fit<S: Real>(
    spec: &ModelSpec<S>,
    data: &FeatureMatrix<S>,
    prior_means: Option<&PriorMeanMatrix<S>>,
    config: &SamplerConfig,
) -> Result<FitResult<S>, ModelError> {
    let model = Model::new(spec, data, prior_means)?;
    let init = model.default_init();
    let (map_point, map_log_posterior, fell_back) = if config.init == nuts::InitStrategy::Zero {
        (init.clone(), None, false)
    } else {
        match model.map_estimate(&init, MAP_MAX_ITER, S::of(MAP_TOL)) {
            Ok(point) => {
                let mut g = vec![S::zero(); model.dim()];
                let value = model.log_posterior_and_gradient(&point, &mut g)?;
                (point, Some(value), false)
            }
            Err(_) => (init.clone(), None, true),
        }
    };
    let draws = nuts::sample(&model, &map_point, config, model.param_names())?;
    Ok(FitResult {
        draws,
        map_point,
        map_log_posterior,
        map_fell_back_to_zero: fell_back,
    })
}
