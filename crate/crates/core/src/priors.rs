//! Expert ratings to prior means.
//!
//! Z-scores the four rating attributes over the matched player population
//! and maps them onto prior means for the feature coefficients they inform:
//! finishing -> one-on-one and penalty-area, long shots -> shot distance,
//! technique -> normal execution, heading -> the non-foot body indicator.
//! Everything else (and every unrated player) gets a zero prior mean.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{feature, FEATURE_COUNT, FEATURE_NAMES};
use crate::ingest::{FmRatingTable, PlayerTable};
use crate::num::Real;

#[derive(Debug, Error)]
pub enum PriorError {
    #[error("need at least two rated players to z-score, got {n}")]
    TooFewRated { n: usize },
    #[error("rating attribute '{attribute}' has zero variance over rated players")]
    ZeroVariance { attribute: String },
}

pub const ATTRIBUTES: [&str; 4] = ["finishing", "technique", "long_shots", "heading"];

/// Z-scored rating attributes, aligned with the rating table's row order.
#[derive(Clone, Debug)]
pub struct ZScoredRatings<S> {
    /// Row per rating-table row: `[finishing, technique, long_shots, heading]`.
    pub z: Vec<[S; 4]>,
}

/// Z-score each attribute over the whole rating table with population
/// (divide-by-N) standard deviation.
pub fn zscore_ratings<S: Real>(table: &FmRatingTable) -> Result<ZScoredRatings<S>, PriorError> {
    let all: Vec<usize> = (0..table.rows.len()).collect();
    zscore_over(table, &all)
}

/// Z-score over the matched population only: attribute statistics come from
/// the rating rows actually linked to fitted players, so the priors are
/// reproducible from the shot data and rating file alone even when the
/// rating table carries extra unlinked rows.
pub fn zscore_matched<S: Real>(
    table: &FmRatingTable,
    players: &PlayerTable,
) -> Result<ZScoredRatings<S>, PriorError> {
    let mut rows: Vec<usize> = players.entries.iter().filter_map(|e| e.rating_row).collect();
    rows.sort_unstable();
    rows.dedup();
    zscore_over(table, &rows)
}

fn zscore_over<S: Real>(
    table: &FmRatingTable,
    population: &[usize],
) -> Result<ZScoredRatings<S>, PriorError> {
    let n = population.len();
    if n < 2 {
        return Err(PriorError::TooFewRated { n });
    }
    let value = |row: usize, a: usize| -> S {
        let r = &table.rows[row];
        S::of(f64::from(match a {
            0 => r.finishing,
            1 => r.technique,
            2 => r.long_shots,
            _ => r.heading,
        }))
    };
    let count = S::of(n as f64);
    let mut z = vec![[S::zero(); 4]; table.rows.len()];
    for a in 0..4 {
        let mut sum = S::zero();
        for &row in population {
            sum += value(row, a);
        }
        let mean = sum / count;
        let mut ss = S::zero();
        for &row in population {
            let d = value(row, a) - mean;
            ss += d * d;
        }
        let sd = (ss / count).sqrt();
        if sd <= S::zero() {
            return Err(PriorError::ZeroVariance {
                attribute: ATTRIBUTES[a].to_string(),
            });
        }
        for (i, zi) in z.iter_mut().enumerate() {
            zi[a] = (value(i, a) - mean) / sd;
        }
    }
    Ok(ZScoredRatings { z })
}

/// P x 17 matrix of per-player prior means on the coefficient deviations.
#[derive(Clone, Debug)]
pub struct PriorMeanMatrix<S> {
    pub mu: Array2<S>,
}

impl<S: Real> PriorMeanMatrix<S> {
    pub fn zeros(n_players: usize) -> Self {
        Self {
            mu: Array2::zeros((n_players, FEATURE_COUNT)),
        }
    }
}

/// The feature columns eligible for nonzero prior means, with the rating
/// attribute that feeds each: everything else is identically zero.
pub const MAPPED_COLUMNS: [(usize, usize); 5] = [
    (feature::ONE_ON_ONE, 0),     // finishing
    (feature::PENALTY_AREA, 0),   // finishing
    (feature::SHOT_DISTANCE, 2),  // long shots
    (feature::TECH_NORMAL, 1),    // technique
    (feature::BODY_OTHER, 3),     // heading
];

/// Build the prior mean matrix: unit mapping from z-score to log-odds prior
/// mean on the mapped columns; unrated players get an all-zero row.
pub fn build_prior_means<S: Real>(
    zscores: &ZScoredRatings<S>,
    players: &PlayerTable,
) -> PriorMeanMatrix<S> {
    let mut mu = Array2::zeros((players.len(), FEATURE_COUNT));
    for entry in &players.entries {
        if let Some(row) = entry.rating_row {
            let z = &zscores.z[row];
            for &(col, attr) in &MAPPED_COLUMNS {
                mu[(entry.index, col)] = z[attr];
            }
        }
    }
    PriorMeanMatrix { mu }
}

/// Hyperparameter group of a feature coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Physics,
    Situation,
    CommonTechniques,
    RareTechniques,
}

impl Group {
    pub fn name(self) -> &'static str {
        match self {
            Group::Physics => "physics",
            Group::Situation => "situation",
            Group::CommonTechniques => "common_techniques",
            Group::RareTechniques => "rare_techniques",
        }
    }
}

pub const GROUP_ORDER: [Group; 4] = [
    Group::Physics,
    Group::Situation,
    Group::CommonTechniques,
    Group::RareTechniques,
];

/// Map of every feature to its hyperparameter group.
#[derive(Clone, Debug)]
pub struct GroupAssignment {
    pub groups: [Group; FEATURE_COUNT],
}

/// The fixed partition of the 17 features into the four variance groups.
pub fn group_assignment() -> GroupAssignment {
    use feature::*;
    let mut groups = [Group::Situation; FEATURE_COUNT];
    for idx in [SHOT_DISTANCE, GK_DISTANCE, SHOT_ANGLE] {
        groups[idx] = Group::Physics;
    }
    for idx in [UNDER_PRESSURE, PENALTY_AREA, ONE_ON_ONE, FIRST_TIME, DEFENDERS_IN_TRIANGLE] {
        groups[idx] = Group::Situation;
    }
    for idx in [TECH_NORMAL, BODY_LEFT, BODY_RIGHT, BODY_OTHER] {
        groups[idx] = Group::CommonTechniques;
    }
    for idx in [TECH_VOLLEY, TECH_HALFVOLLEY, TECH_LOB, TECH_DIVE, TECH_OVERHEAD] {
        groups[idx] = Group::RareTechniques;
    }
    GroupAssignment { groups }
}

/// Write the optional priors.csv export: player_name plus the 17 named mu
/// columns.
pub fn write_priors_csv<S: Real, W: std::io::Write>(
    priors: &PriorMeanMatrix<S>,
    players: &PlayerTable,
    writer: W,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["player_name".to_string()];
    header.extend(FEATURE_NAMES.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for entry in &players.entries {
        let mut row = vec![entry.display_name.clone()];
        for j in 0..FEATURE_COUNT {
            row.push(priors.mu[(entry.index, j)].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
