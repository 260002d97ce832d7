//! The 17-column design matrix: shot geometry, situational flags, and
//! one-hot encodings, with z-score standardization of the three geometric
//! features.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{BodyPart, PlayerTable, ShotRecord, Technique};
use crate::num::Real;

pub const FEATURE_COUNT: usize = 17;

/// Fixed feature ordering; every export and parameter name follows it.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "shot_distance",
    "gk_distance",
    "shot_angle",
    "defenders_in_triangle",
    "penalty_area",
    "under_pressure",
    "first_time",
    "one_on_one",
    "body_left",
    "body_right",
    "body_other",
    "tech_normal",
    "tech_volley",
    "tech_halfvolley",
    "tech_lob",
    "tech_dive",
    "tech_overhead",
];

pub mod feature {
    pub const SHOT_DISTANCE: usize = 0;
    pub const GK_DISTANCE: usize = 1;
    pub const SHOT_ANGLE: usize = 2;
    pub const DEFENDERS_IN_TRIANGLE: usize = 3;
    pub const PENALTY_AREA: usize = 4;
    pub const UNDER_PRESSURE: usize = 5;
    pub const FIRST_TIME: usize = 6;
    pub const ONE_ON_ONE: usize = 7;
    pub const BODY_LEFT: usize = 8;
    pub const BODY_RIGHT: usize = 9;
    pub const BODY_OTHER: usize = 10;
    pub const TECH_NORMAL: usize = 11;
    pub const TECH_VOLLEY: usize = 12;
    pub const TECH_HALFVOLLEY: usize = 13;
    pub const TECH_LOB: usize = 14;
    pub const TECH_DIVE: usize = 15;
    pub const TECH_OVERHEAD: usize = 16;
}

/// The geometric features that get standardized.
pub const SCALED_FEATURES: [usize; 3] = [
    feature::SHOT_DISTANCE,
    feature::GK_DISTANCE,
    feature::SHOT_ANGLE,
];

pub const GOAL_CENTER: (f64, f64) = (120.0, 40.0);
pub const GOAL_POST_LOW: (f64, f64) = (120.0, 36.0);
pub const GOAL_POST_HIGH: (f64, f64) = (120.0, 44.0);
pub const PENALTY_AREA_X: f64 = 102.0;
pub const PENALTY_AREA_Y_LOW: f64 = 18.0;
pub const PENALTY_AREA_Y_HIGH: f64 = 62.0;

/// Boundary tolerance for the defender-triangle sign tests.
pub const TRIANGLE_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("shot location coincides with a goal post; shot angle undefined")]
    DegenerateGeometry,
    #[error("freeze frame has {count} opposing keepers; exactly one required")]
    KeeperCount { count: usize },
    #[error("geometric column '{column}' has zero variance; cannot standardize")]
    ZeroVariance { column: String },
    #[error("need at least two shots to fit a scaler, got {n}")]
    TooFewShots { n: usize },
    #[error("player '{name}' not present in the player table")]
    UnknownPlayer { name: String },
}

/// Euclidean distance from the shot location to the goal centre (120, 40).
pub fn shot_distance<S: Real>(x: S, y: S) -> S {
    let dx = S::of(GOAL_CENTER.0) - x;
    let dy = S::of(GOAL_CENTER.1) - y;
    dx.hypot(dy)
}

/// Angle subtended at the shooter by the two posts (120, 36) and (120, 44),
/// in radians. Ranges over (0, pi]; standing on the goal line between the
/// posts gives pi. Standing exactly on a post is degenerate.
pub fn shot_angle<S: Real>(x: S, y: S) -> Result<S, FeatureError> {
    let ax = S::of(GOAL_POST_LOW.0) - x;
    let ay = S::of(GOAL_POST_LOW.1) - y;
    let bx = S::of(GOAL_POST_HIGH.0) - x;
    let by = S::of(GOAL_POST_HIGH.1) - y;
    let na = ax.hypot(ay);
    let nb = bx.hypot(by);
    if na.is_zero() || nb.is_zero() {
        return Err(FeatureError::DegenerateGeometry);
    }
    let cos = ((ax * bx + ay * by) / (na * nb)).clamp(-S::one(), S::one());
    Ok(cos.acos())
}

/// Distance from the opposing goalkeeper to the goal centre.
pub fn gk_distance<S: Real>(record: &ShotRecord) -> Result<S, FeatureError> {
    let keepers: Vec<_> = record
        .freeze_frame
        .iter()
        .filter(|f| f.keeper && !f.teammate)
        .collect();
    if keepers.len() != 1 {
        return Err(FeatureError::KeeperCount { count: keepers.len() });
    }
    Ok(shot_distance(S::of(keepers[0].x), S::of(keepers[0].y)))
}

/// Number of opposing outfielders inside (or on the boundary of) the
/// triangle spanned by the shooter and the two posts.
pub fn defenders_in_triangle(record: &ShotRecord) -> usize {
    record
        .freeze_frame
        .iter()
        .filter(|f| !f.teammate && !f.keeper)
        .filter(|f| {
            point_in_triangle(
                (f.x, f.y),
                (record.x, record.y),
                GOAL_POST_LOW,
                GOAL_POST_HIGH,
            )
        })
        .count()
}

/// Sign-test containment with boundary tolerance: the point is inside iff it
/// is on the same side (or within `TRIANGLE_EPS`) of all three edges. The
/// bounding-box guard keeps collinear points outside a degenerate triangle's
/// extent (shooter on the goal line) from counting.
fn point_in_triangle(p: (f64, f64), a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> bool {
    let min = |u: f64, v: f64, w: f64| u.min(v).min(w);
    let max = |u: f64, v: f64, w: f64| u.max(v).max(w);
    if p.0 < min(a.0, b.0, c.0) - TRIANGLE_EPS
        || p.0 > max(a.0, b.0, c.0) + TRIANGLE_EPS
        || p.1 < min(a.1, b.1, c.1) - TRIANGLE_EPS
        || p.1 > max(a.1, b.1, c.1) + TRIANGLE_EPS
    {
        return false;
    }
    let cross = |o: (f64, f64), u: (f64, f64), v: (f64, f64)| {
        (u.0 - o.0) * (v.1 - o.1) - (u.1 - o.1) * (v.0 - o.0)
    };
    let d1 = cross(a, b, p);
    let d2 = cross(b, c, p);
    let d3 = cross(c, a, p);
    let has_neg = d1 < -TRIANGLE_EPS || d2 < -TRIANGLE_EPS || d3 < -TRIANGLE_EPS;
    let has_pos = d1 > TRIANGLE_EPS || d2 > TRIANGLE_EPS || d3 > TRIANGLE_EPS;
    !(has_neg && has_pos)
}

/// 1 iff the location is inside the penalty area (x >= 102, 18 <= y <= 62),
/// boundary inclusive.
pub fn in_penalty_area(x: f64, y: f64) -> bool {
    x >= PENALTY_AREA_X && (PENALTY_AREA_Y_LOW..=PENALTY_AREA_Y_HIGH).contains(&y)
}

/// Per-column mean and population standard deviation for the geometric
/// features.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Scaler<S> {
    /// `(feature index, mean, sd)` for each scaled column.
    pub columns: Vec<(usize, S, S)>,
}

impl<S: Real> Scaler<S> {
    pub fn transform(&self, features: &mut [S]) {
        for &(idx, mean, sd) in &self.columns {
            features[idx] = (features[idx] - mean) / sd;
        }
    }

    pub fn inverse_transform(&self, features: &mut [S]) {
        for &(idx, mean, sd) in &self.columns {
            features[idx] = features[idx] * sd + mean;
        }
    }
}

/// Fit a z-score scaler (population standard deviation, divide by N) on the
/// raw geometric columns of `shots`.
pub fn fit_scaler<S: Real>(shots: &[ShotRecord]) -> Result<Scaler<S>, FeatureError> {
    if shots.len() < 2 {
        return Err(FeatureError::TooFewShots { n: shots.len() });
    }
    let raw: Vec<[S; 3]> = shots
        .iter()
        .map(raw_geometric)
        .collect::<Result<_, _>>()?;
    let mut columns = Vec::with_capacity(SCALED_FEATURES.len());
    let n = S::of(shots.len() as f64);
    for (k, &idx) in SCALED_FEATURES.iter().enumerate() {
        let mut sum = S::zero();
        for row in &raw {
            sum += row[k];
        }
        let mean = sum / n;
        let mut ss = S::zero();
        for row in &raw {
            let d = row[k] - mean;
            ss += d * d;
        }
        let sd = (ss / n).sqrt();
        if sd <= S::zero() {
            return Err(FeatureError::ZeroVariance {
                column: FEATURE_NAMES[idx].to_string(),
            });
        }
        columns.push((idx, mean, sd));
    }
    Ok(Scaler { columns })
}

fn raw_geometric<S: Real>(record: &ShotRecord) -> Result<[S; 3], FeatureError> {
    let x = S::of(record.x);
    let y = S::of(record.y);
    Ok([
        shot_distance(x, y),
        gk_distance(record)?,
        shot_angle(x, y)?,
    ])
}

/// Raw boolean context of one shot, kept alongside the encoded matrix for
/// context-conditioned counterfactual decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextFlags {
    pub under_pressure: bool,
    pub first_time: bool,
    pub one_on_one: bool,
    pub penalty_area: bool,
}

/// Named boolean flag usable as a context partition axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextFlag {
    UnderPressure,
    FirstTime,
    OneOnOne,
    PenaltyArea,
}

impl ContextFlag {
    pub fn value(self, flags: &ContextFlags) -> bool {
        match self {
            ContextFlag::UnderPressure => flags.under_pressure,
            ContextFlag::FirstTime => flags.first_time,
            ContextFlag::OneOnOne => flags.one_on_one,
            ContextFlag::PenaltyArea => flags.penalty_area,
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "under_pressure" => Some(ContextFlag::UnderPressure),
            "first_time" => Some(ContextFlag::FirstTime),
            "one_on_one" => Some(ContextFlag::OneOnOne),
            "penalty_area" => Some(ContextFlag::PenaltyArea),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ContextFlag::UnderPressure => "under_pressure",
            ContextFlag::FirstTime => "first_time",
            ContextFlag::OneOnOne => "one_on_one",
            ContextFlag::PenaltyArea => "penalty_area",
        }
    }
}

/// Standardized N x 17 design matrix plus outcomes, player indices, and the
/// raw context needed downstream.
#[derive(Clone, Debug)]
pub struct FeatureMatrix<S> {
    pub x: Array2<S>,
    pub y: Vec<u8>,
    pub player_idx: Vec<usize>,
    pub context_flags: Vec<ContextFlags>,
    pub shot_ids: Vec<String>,
    pub teams: Vec<String>,
}

impl<S> FeatureMatrix<S> {
    pub fn n_shots(&self) -> usize {
        self.y.len()
    }
}

/// Encode one shot into the 17-feature vector (geometric columns still raw).
pub fn encode_shot<S: Real>(record: &ShotRecord) -> Result<[S; FEATURE_COUNT], FeatureError> {
    let mut v = [S::zero(); FEATURE_COUNT];
    let geo = raw_geometric::<S>(record)?;
    v[feature::SHOT_DISTANCE] = geo[0];
    v[feature::GK_DISTANCE] = geo[1];
    v[feature::SHOT_ANGLE] = geo[2];
    v[feature::DEFENDERS_IN_TRIANGLE] = S::of(defenders_in_triangle(record) as f64);
    v[feature::PENALTY_AREA] = flag(in_penalty_area(record.x, record.y));
    v[feature::UNDER_PRESSURE] = flag(record.under_pressure);
    v[feature::FIRST_TIME] = flag(record.first_time);
    v[feature::ONE_ON_ONE] = flag(record.one_on_one);
    let body = match record.body_part {
        BodyPart::LeftFoot => feature::BODY_LEFT,
        BodyPart::RightFoot => feature::BODY_RIGHT,
        BodyPart::Other => feature::BODY_OTHER,
    };
    v[body] = S::one();
    let tech = match record.technique {
        Technique::Normal => feature::TECH_NORMAL,
        Technique::Volley => feature::TECH_VOLLEY,
        Technique::HalfVolley => feature::TECH_HALFVOLLEY,
        Technique::Lob => feature::TECH_LOB,
        Technique::DivingHeader => feature::TECH_DIVE,
        Technique::OverheadKick => feature::TECH_OVERHEAD,
    };
    v[tech] = S::one();
    Ok(v)
}

fn flag<S: Real>(b: bool) -> S {
    if b {
        S::one()
    } else {
        S::zero()
    }
}

/// Build the standardized design matrix in input order. The scaler must have
/// been fitted on the same (or a declared training) subset.
pub fn build_design_matrix<S: Real>(
    shots: &[ShotRecord],
    scaler: &Scaler<S>,
    players: &PlayerTable,
) -> Result<FeatureMatrix<S>, FeatureError> {
    let n = shots.len();
    let mut x = Array2::zeros((n, FEATURE_COUNT));
    let mut y = Vec::with_capacity(n);
    let mut player_idx = Vec::with_capacity(n);
    let mut context_flags = Vec::with_capacity(n);
    let mut shot_ids = Vec::with_capacity(n);
    let mut teams = Vec::with_capacity(n);
    for (i, record) in shots.iter().enumerate() {
        let mut row = encode_shot::<S>(record)?;
        scaler.transform(&mut row);
        for (j, v) in row.into_iter().enumerate() {
            x[(i, j)] = v;
        }
        y.push(u8::from(record.goal));
        player_idx.push(players.index_of(&record.player_name).ok_or_else(|| {
            FeatureError::UnknownPlayer {
                name: record.player_name.clone(),
            }
        })?);
        context_flags.push(ContextFlags {
            under_pressure: record.under_pressure,
            first_time: record.first_time,
            one_on_one: record.one_on_one,
            penalty_area: in_penalty_area(record.x, record.y),
        });
        shot_ids.push(record.shot_id.clone());
        teams.push(record.team_name.clone());
    }
    Ok(FeatureMatrix {
        x,
        y,
        player_idx,
        context_flags,
        shot_ids,
        teams,
    })
}

/// Write the optional features.csv export: shot_id, the 17 named feature
/// columns in order, outcome, player_index.
pub fn write_features_csv<S: Real, W: std::io::Write>(
    matrix: &FeatureMatrix<S>,
    writer: W,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["shot_id".to_string()];
    header.extend(FEATURE_NAMES.iter().map(|s| s.to_string()));
    header.push("outcome".into());
    header.push("player_index".into());
    w.write_record(&header)?;
    for i in 0..matrix.n_shots() {
        let mut row = vec![matrix.shot_ids[i].clone()];
        for j in 0..FEATURE_COUNT {
            row.push(matrix.x[(i, j)].to_string());
        }
        row.push(matrix.y[i].to_string());
        row.push(matrix.player_idx[i].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
