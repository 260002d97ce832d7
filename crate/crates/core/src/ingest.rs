//! Shot-event and expert-rating ingestion.
//!
//! Reads provider event JSON (one array of event objects per file) or the
//! canonical `shots.csv` flat format, links shooters to an expert rating
//! table by normalized name, and applies the minimum-shot-count filter.
//!
//! Pitch convention: 120x80 units, attacking goal at x = 120, goal centre
//! at (120, 40). Penalties are excluded at ingest, as are shots whose
//! freeze frame lacks an opposing goalkeeper.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

pub const PITCH_LENGTH: f64 = 120.0;
pub const PITCH_WIDTH: f64 = 80.0;

/// Body part used for the shot, left/right foot kept separate and everything
/// else (head included) aggregated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BodyPart {
    LeftFoot,
    RightFoot,
    Other,
}

impl BodyPart {
    pub fn label(self) -> &'static str {
        match self {
            BodyPart::LeftFoot => "LeftFoot",
            BodyPart::RightFoot => "RightFoot",
            BodyPart::Other => "Other",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        match label {
            "LeftFoot" => Some(BodyPart::LeftFoot),
            "RightFoot" => Some(BodyPart::RightFoot),
            "Other" => Some(BodyPart::Other),
            _ => None,
        }
    }
}

/// Shot technique; labels outside the six-element set map to `Normal`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Technique {
    Normal,
    Volley,
    HalfVolley,
    Lob,
    DivingHeader,
    OverheadKick,
}

impl Technique {
    pub fn label(self) -> &'static str {
        match self {
            Technique::Normal => "Normal",
            Technique::Volley => "Volley",
            Technique::HalfVolley => "HalfVolley",
            Technique::Lob => "Lob",
            Technique::DivingHeader => "DivingHeader",
            Technique::OverheadKick => "OverheadKick",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        match label {
            "Normal" => Some(Technique::Normal),
            "Volley" => Some(Technique::Volley),
            "HalfVolley" => Some(Technique::HalfVolley),
            "Lob" => Some(Technique::Lob),
            "DivingHeader" => Some(Technique::DivingHeader),
            "OverheadKick" => Some(Technique::OverheadKick),
            _ => None,
        }
    }
}

/// One player captured in the freeze frame at the moment of the shot.
#[derive(Clone, Debug, PartialEq)]
pub struct FramePlayer {
    pub x: f64,
    pub y: f64,
    pub teammate: bool,
    pub keeper: bool,
}

/// One open-play shot event.
#[derive(Clone, Debug, PartialEq)]
pub struct ShotRecord {
    pub shot_id: String,
    pub player_name: String,
    pub team_name: String,
    pub x: f64,
    pub y: f64,
    pub goal: bool,
    pub body_part: BodyPart,
    pub technique: Technique,
    pub under_pressure: bool,
    pub first_time: bool,
    pub one_on_one: bool,
    pub freeze_frame: Vec<FramePlayer>,
}

impl ShotRecord {
    /// The opposing goalkeeper, when the freeze frame contains exactly one.
    pub fn opposing_keeper(&self) -> Option<&FramePlayer> {
        let mut found = None;
        for f in &self.freeze_frame {
            if f.keeper && !f.teammate {
                if found.is_some() {
                    return None;
                }
                found = Some(f);
            }
        }
        found
    }
}

/// One row of the expert rating table (1-20 scale).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FmRating {
    pub name: String,
    pub finishing: u8,
    pub technique: u8,
    pub long_shots: u8,
    pub heading: u8,
    pub birth_date: Option<String>,
}

/// Expert rating table with a normalized-name index.
#[derive(Clone, Debug, Default)]
pub struct FmRatingTable {
    pub rows: Vec<FmRating>,
    by_name: HashMap<String, Vec<usize>>,
}

impl FmRatingTable {
    pub fn new(rows: Vec<FmRating>) -> Result<Self, IngestError> {
        let mut by_name: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, row) in rows.iter().enumerate() {
            by_name.entry(normalize_name(&row.name)).or_default().push(i);
        }
        // Duplicate names are only acceptable when every occurrence carries a
        // distinct birth date to disambiguate.
        for (name, idxs) in &by_name {
            if idxs.len() > 1 {
                let mut dates = HashSet::new();
                for &i in idxs {
                    match &rows[i].birth_date {
                        Some(d) => {
                            if !dates.insert(d.clone()) {
                                return Err(IngestError::AmbiguousRating { name: name.clone() });
                            }
                        }
                        None => return Err(IngestError::AmbiguousRating { name: name.clone() }),
                    }
                }
            }
        }
        Ok(Self { rows, by_name })
    }

    pub fn lookup_normalized(&self, normalized: &str) -> &[usize] {
        self.by_name.get(normalized).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// One fitted player: contiguous index, canonical (normalized) name, the raw
/// spellings seen in the event data, shot count, and the matched rating row.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlayerEntry {
    pub index: usize,
    pub canonical_name: String,
    pub display_name: String,
    pub aliases: Vec<String>,
    pub shot_count: usize,
    pub rating_row: Option<usize>,
}

/// Player index table; indices are contiguous from 0 in canonical-name order.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct PlayerTable {
    pub entries: Vec<PlayerEntry>,
    #[serde(skip)]
    lookup: HashMap<String, usize>,
}

impl PlayerTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Index for a raw event-data name (normalization applied).
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.lookup.get(&normalize_name(name)).copied()
    }

    pub fn rebuild_lookup(&mut self) {
        self.lookup = self
            .entries
            .iter()
            .map(|e| (e.canonical_name.clone(), e.index))
            .collect();
    }
}

/// Outcome of player matching: what failed to link on either side.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct MatchReport {
    pub matched: usize,
    pub unmatched_shot_players: Vec<String>,
    pub unmatched_rating_rows: Vec<String>,
    pub ambiguous_shot_players: Vec<String>,
}

/// Counters for everything ingested, excluded, or defaulted.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct IngestReport {
    pub files: usize,
    pub events: usize,
    pub shot_events: usize,
    pub retained: usize,
    pub excluded_penalty: usize,
    pub excluded_missing_freeze_frame: usize,
    pub excluded_missing_keeper: usize,
    pub excluded_malformed: usize,
    pub technique_defaulted: usize,
    pub warnings: Vec<String>,
}

/// Parsed shots plus the exclusion/warning bookkeeping.
#[derive(Clone, Debug, Default)]
pub struct IngestOutcome {
    pub shots: Vec<ShotRecord>,
    pub report: IngestReport,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed JSON at byte offset {offset} (line {line}, column {column}): {message}")]
    Json {
        path: PathBuf,
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: not a JSON array of event objects")]
    NotAnArray { path: PathBuf },
    #[error("{path}: missing required column '{column}'")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}: line {line}: {message}")]
    Row {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("duplicate rating rows for '{name}' without distinct birth dates")]
    AmbiguousRating { name: String },
    #[error("alias '{event_name}' -> '{rating_name}': no such rating row")]
    AliasTarget {
        event_name: String,
        rating_name: String,
    },
    #[error("alias '{event_name}' -> '{rating_name}': rating name is ambiguous even with the alias")]
    AliasAmbiguous {
        event_name: String,
        rating_name: String,
    },
}

/// Canonical matching key: Unicode NFKD, combining marks stripped,
/// lowercased, whitespace collapsed.
pub fn normalize_name(name: &str) -> String {
    let stripped: String = name.nfkd().filter(|c| !is_combining_mark(*c)).collect();
    stripped
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

fn within_pitch(x: f64, y: f64) -> bool {
    (0.0..=PITCH_LENGTH).contains(&x) && (0.0..=PITCH_WIDTH).contains(&y)
}

fn clamp_to_pitch(x: f64, y: f64) -> (f64, f64) {
    (x.clamp(0.0, PITCH_LENGTH), y.clamp(0.0, PITCH_WIDTH))
}

// ---------------------------------------------------------------------------
// Event JSON parsing
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct RawName {
    name: Option<String>,
}

#[derive(Deserialize)]
struct RawFrame {
    location: Option<Vec<f64>>,
    teammate: Option<bool>,
    position: Option<RawName>,
}

#[derive(Deserialize)]
struct RawShot {
    #[serde(rename = "type")]
    kind: Option<RawName>,
    outcome: Option<RawName>,
    body_part: Option<RawName>,
    technique: Option<RawName>,
    first_time: Option<bool>,
    one_on_one: Option<bool>,
    freeze_frame: Option<Vec<RawFrame>>,
}

#[derive(Deserialize)]
struct RawEvent {
    id: Option<String>,
    #[serde(rename = "type")]
    kind: Option<RawName>,
    player: Option<RawName>,
    team: Option<RawName>,
    location: Option<Vec<f64>>,
    under_pressure: Option<bool>,
    shot: Option<RawShot>,
}

/// Parse every `*.json` file in `dir` (file-name order) and return the
/// retained open-play shots.
///
/// Exclusions, per record: penalties, missing or empty freeze frames, frames
/// without exactly one opposing goalkeeper, and structurally incomplete
/// events. Unknown technique labels are mapped to `Normal` with a warning.
pub fn parse_event_files(dir: &Path) -> Result<IngestOutcome, IngestError> {
    let entries = std::fs::read_dir(dir).map_err(|source| IngestError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    files.sort();

    let mut out = IngestOutcome::default();
    let mut seen_ids = HashSet::new();
    for file in files {
        out.report.files += 1;
        parse_event_file(&file, &mut out, &mut seen_ids)?;
    }
    out.report.retained = out.shots.len();
    Ok(out)
}

fn parse_event_file(
    path: &Path,
    out: &mut IngestOutcome,
    seen_ids: &mut HashSet<String>,
) -> Result<(), IngestError> {
    let mut text = String::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;

    let events: Vec<RawEvent> = match serde_json::from_str(&text) {
        Ok(serde_json::Value::Array(items)) => items
            .into_iter()
            .map(serde_json::from_value)
            .collect::<Result<_, _>>()
            .map_err(|e| json_error(path, &text, e))?,
        Ok(_) => return Err(IngestError::NotAnArray { path: path.to_path_buf() }),
        Err(e) => return Err(json_error(path, &text, e)),
    };

    let report = &mut out.report;
    for event in events {
        report.events += 1;
        if event.kind.as_ref().and_then(|k| k.name.as_deref()) != Some("Shot") {
            continue;
        }
        report.shot_events += 1;
        let file = path.display();

        let Some(shot) = event.shot else {
            exclude_malformed(report, format_args!("{file}: shot event without shot payload"));
            continue;
        };
        if shot.kind.as_ref().and_then(|k| k.name.as_deref()) == Some("Penalty") {
            report.excluded_penalty += 1;
            continue;
        }
        let Some(id) = event.id else {
            exclude_malformed(report, format_args!("{file}: shot event without id"));
            continue;
        };
        if !seen_ids.insert(id.clone()) {
            exclude_malformed(report, format_args!("{file}: duplicate shot id {id}"));
            continue;
        }
        let (Some(player_name), Some(team_name)) = (
            event.player.and_then(|p| p.name),
            event.team.and_then(|t| t.name),
        ) else {
            exclude_malformed(report, format_args!("{file}: shot {id} missing player or team name"));
            continue;
        };
        let Some((x, y)) = pair(&event.location) else {
            exclude_malformed(report, format_args!("{file}: shot {id} missing location"));
            continue;
        };
        if !within_pitch(x, y) {
            exclude_malformed(report, format_args!("{file}: shot {id} location ({x}, {y}) out of pitch bounds"));
            continue;
        }
        let Some(goal) = shot.outcome.as_ref().and_then(|o| o.name.as_deref()).map(|n| n == "Goal")
        else {
            exclude_malformed(report, format_args!("{file}: shot {id} missing outcome"));
            continue;
        };
        let body_part = match shot.body_part.as_ref().and_then(|b| b.name.as_deref()) {
            Some("Left Foot") => BodyPart::LeftFoot,
            Some("Right Foot") => BodyPart::RightFoot,
            _ => BodyPart::Other,
        };
        let technique = match shot.technique.as_ref().and_then(|t| t.name.as_deref()) {
            Some("Normal") | None => Technique::Normal,
            Some("Volley") => Technique::Volley,
            Some("Half Volley") => Technique::HalfVolley,
            Some("Lob") => Technique::Lob,
            Some("Diving Header") => Technique::DivingHeader,
            Some("Overhead Kick") => Technique::OverheadKick,
            Some(other) => {
                report.technique_defaulted += 1;
                report
                    .warnings
                    .push(format!("{file}: shot {id}: unknown technique '{other}' mapped to Normal"));
                Technique::Normal
            }
        };

        let frames = shot.freeze_frame.unwrap_or_default();
        if frames.is_empty() {
            report.excluded_missing_freeze_frame += 1;
            continue;
        }
        let mut freeze_frame = Vec::with_capacity(frames.len());
        let mut ok = true;
        for frame in frames {
            let Some((fx, fy)) = pair(&frame.location) else {
                ok = false;
                break;
            };
            let (fx, fy) = clamp_to_pitch(fx, fy);
            freeze_frame.push(FramePlayer {
                x: fx,
                y: fy,
                teammate: frame.teammate.unwrap_or(false),
                keeper: frame.position.as_ref().and_then(|p| p.name.as_deref()) == Some("Goalkeeper"),
            });
        }
        if !ok {
            exclude_malformed(report, format_args!("{file}: shot {id} freeze frame entry missing location"));
            continue;
        }

        let record = ShotRecord {
            shot_id: id,
            player_name,
            team_name,
            x,
            y,
            goal,
            body_part,
            technique,
            under_pressure: event.under_pressure.unwrap_or(false),
            first_time: shot.first_time.unwrap_or(false),
            one_on_one: shot.one_on_one.unwrap_or(false),
            freeze_frame,
        };
        if record.opposing_keeper().is_none() {
            report.excluded_missing_keeper += 1;
            continue;
        }
        out.shots.push(record);
    }
    Ok(())
}

fn exclude_malformed(report: &mut IngestReport, message: fmt::Arguments<'_>) {
    report.excluded_malformed += 1;
    report.warnings.push(message.to_string());
}

fn pair(loc: &Option<Vec<f64>>) -> Option<(f64, f64)> {
    match loc.as_deref() {
        Some([x, y, ..]) => Some((*x, *y)),
        _ => None,
    }
}

fn json_error(path: &Path, text: &str, e: serde_json::Error) -> IngestError {
    let (line, column) = (e.line(), e.column());
    IngestError::Json {
        path: path.to_path_buf(),
        offset: byte_offset(text, line, column),
        line,
        column,
        message: e.to_string(),
    }
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut offset = 0;
    for (i, l) in text.split('\n').enumerate() {
        if i + 1 == line {
            return offset + column.saturating_sub(1).min(l.len());
        }
        offset += l.len() + 1;
    }
    text.len()
}

// ---------------------------------------------------------------------------
// Canonical shots.csv
// ---------------------------------------------------------------------------

pub const SHOTS_CSV_COLUMNS: [&str; 12] = [
    "shot_id",
    "player_name",
    "team_name",
    "x",
    "y",
    "outcome",
    "body_part",
    "technique",
    "under_pressure",
    "first_time",
    "one_on_one",
    "freeze_frame",
];

/// Parse the canonical flat format. Column schema is strict; refer to
/// [`SHOTS_CSV_COLUMNS`]. Record semantics (penalty-free, keeper-present)
/// match [`parse_event_files`]; structurally invalid rows are errors rather
/// than exclusions since the canonical format is produced by this crate.
pub fn parse_shots_csv(path: &Path) -> Result<IngestOutcome, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_open_error(path, e))?;

    let headers = reader
        .headers()
        .map_err(|e| csv_open_error(path, e))?
        .clone();
    let mut col = HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        col.insert(h.to_string(), i);
    }
    let mut idx = [0usize; 12];
    for (k, name) in SHOTS_CSV_COLUMNS.iter().enumerate() {
        idx[k] = *col.get(*name).ok_or_else(|| IngestError::MissingColumn {
            path: path.to_path_buf(),
            column: (*name).to_string(),
        })?;
    }

    let mut out = IngestOutcome::default();
    out.report.files = 1;
    let mut seen_ids = HashSet::new();
    for result in reader.records() {
        let record = result.map_err(|e| csv_open_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row_err = |message: String| IngestError::Row {
            path: path.to_path_buf(),
            line,
            message,
        };
        let field = |k: usize| record.get(idx[k]).unwrap_or("").to_string();

        out.report.events += 1;
        out.report.shot_events += 1;

        let shot_id = field(0);
        if !seen_ids.insert(shot_id.clone()) {
            return Err(row_err(format!("duplicate shot_id '{shot_id}'")));
        }
        let x = parse_coord(&field(3), "x", &row_err)?;
        let y = parse_coord(&field(4), "y", &row_err)?;
        if !within_pitch(x, y) {
            return Err(row_err(format!("location ({x}, {y}) out of pitch bounds")));
        }
        let goal = parse_flag(&field(5), "outcome", &row_err)?;
        let body_part = BodyPart::from_label(&field(6))
            .ok_or_else(|| row_err(format!("unknown body_part label '{}'", field(6))))?;
        let technique = Technique::from_label(&field(7))
            .ok_or_else(|| row_err(format!("unknown technique label '{}'", field(7))))?;
        let under_pressure = parse_flag(&field(8), "under_pressure", &row_err)?;
        let first_time = parse_flag(&field(9), "first_time", &row_err)?;
        let one_on_one = parse_flag(&field(10), "one_on_one", &row_err)?;
        let freeze_frame = parse_freeze_frame(&field(11), &row_err)?;

        let record = ShotRecord {
            shot_id,
            player_name: field(1),
            team_name: field(2),
            x,
            y,
            goal,
            body_part,
            technique,
            under_pressure,
            first_time,
            one_on_one,
            freeze_frame,
        };
        if record.freeze_frame.is_empty() {
            out.report.excluded_missing_freeze_frame += 1;
            continue;
        }
        if record.opposing_keeper().is_none() {
            out.report.excluded_missing_keeper += 1;
            continue;
        }
        out.shots.push(record);
    }
    out.report.retained = out.shots.len();
    Ok(out)
}

fn csv_open_error(path: &Path, e: csv::Error) -> IngestError {
    match e.kind() {
        csv::ErrorKind::Io(_) => IngestError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::other(e.to_string()),
        },
        _ => IngestError::Row {
            path: path.to_path_buf(),
            line: e
                .position()
                .map(|p| p.line())
                .unwrap_or(0),
            message: e.to_string(),
        },
    }
}

fn parse_coord(
    text: &str,
    what: &str,
    row_err: &impl Fn(String) -> IngestError,
) -> Result<f64, IngestError> {
    text.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| row_err(format!("non-numeric {what} '{text}'")))
}

fn parse_flag(
    text: &str,
    what: &str,
    row_err: &impl Fn(String) -> IngestError,
) -> Result<bool, IngestError> {
    match text {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(row_err(format!("{what} must be 0 or 1, got '{text}'"))),
    }
}

fn parse_freeze_frame(
    text: &str,
    row_err: &impl Fn(String) -> IngestError,
) -> Result<Vec<FramePlayer>, IngestError> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let mut frames = Vec::new();
    for quad in text.split(';') {
        let parts: Vec<&str> = quad.split(',').collect();
        if parts.len() != 4 {
            return Err(row_err(format!("freeze frame entry '{quad}' is not an x,y,teammate,keeper quadruple")));
        }
        let x = parse_coord(parts[0], "freeze frame x", row_err)?;
        let y = parse_coord(parts[1], "freeze frame y", row_err)?;
        if !within_pitch(x, y) {
            return Err(row_err(format!("freeze frame position ({x}, {y}) out of pitch bounds")));
        }
        frames.push(FramePlayer {
            x,
            y,
            teammate: parse_flag(parts[2], "freeze frame teammate", row_err)?,
            keeper: parse_flag(parts[3], "freeze frame keeper", row_err)?,
        });
    }
    Ok(frames)
}

/// Serialize records to the canonical CSV schema; exact inverse of
/// [`parse_shots_csv`] for records that satisfy the ingest invariants.
pub fn write_shots_csv<W: std::io::Write>(
    records: &[ShotRecord],
    writer: W,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SHOTS_CSV_COLUMNS)?;
    for r in records {
        let freeze_frame = r
            .freeze_frame
            .iter()
            .map(|f| {
                format!(
                    "{},{},{},{}",
                    f.x,
                    f.y,
                    u8::from(f.teammate),
                    u8::from(f.keeper)
                )
            })
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            r.shot_id.as_str(),
            r.player_name.as_str(),
            r.team_name.as_str(),
            &r.x.to_string(),
            &r.y.to_string(),
            &u8::from(r.goal).to_string(),
            r.body_part.label(),
            r.technique.label(),
            &u8::from(r.under_pressure).to_string(),
            &u8::from(r.first_time).to_string(),
            &u8::from(r.one_on_one).to_string(),
            &freeze_frame,
        ])?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Expert ratings and aliases
// ---------------------------------------------------------------------------

/// Load the rating CSV (`name,finishing,technique,long_shots,heading[,birth_date]`),
/// validating every rating against the 1-20 range.
pub fn load_fm_ratings(path: &Path) -> Result<FmRatingTable, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_open_error(path, e))?;
    let headers = reader
        .headers()
        .map_err(|e| csv_open_error(path, e))?
        .clone();
    let mut col = HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        col.insert(h.to_string(), i);
    }
    let required = ["name", "finishing", "technique", "long_shots", "heading"];
    for name in required {
        if !col.contains_key(name) {
            return Err(IngestError::MissingColumn {
                path: path.to_path_buf(),
                column: name.to_string(),
            });
        }
    }
    let birth_col = col.get("birth_date").copied();

    let mut rows = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| csv_open_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row_err = |message: String| IngestError::Row {
            path: path.to_path_buf(),
            line,
            message,
        };
        let get = |name: &str| record.get(col[name]).unwrap_or("");
        let rating = |name: &str| -> Result<u8, IngestError> {
            let raw = get(name);
            let value: u8 = raw
                .parse()
                .map_err(|_| row_err(format!("non-integer {name} rating '{raw}'")))?;
            if !(1..=20).contains(&value) {
                return Err(row_err(format!("{name} rating {value} outside 1-20")));
            }
            Ok(value)
        };
        rows.push(FmRating {
            name: get("name").to_string(),
            finishing: rating("finishing")?,
            technique: rating("technique")?,
            long_shots: rating("long_shots")?,
            heading: rating("heading")?,
            birth_date: birth_col
                .and_then(|c| record.get(c))
                .filter(|s| !s.is_empty())
                .map(str::to_string),
        });
    }
    FmRatingTable::new(rows)
}

/// Load `event_name,rating_name` alias pairs; an empty or absent file is an
/// empty alias list.
pub fn load_aliases(path: &Path) -> Result<Vec<(String, String)>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_open_error(path, e))?;
    let headers = reader
        .headers()
        .map_err(|e| csv_open_error(path, e))?
        .clone();
    let mut col = HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        col.insert(h.to_string(), i);
    }
    for name in ["event_name", "rating_name"] {
        if !col.contains_key(name) {
            return Err(IngestError::MissingColumn {
                path: path.to_path_buf(),
                column: name.to_string(),
            });
        }
    }
    let mut aliases = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| csv_open_error(path, e))?;
        aliases.push((
            record.get(col["event_name"]).unwrap_or("").to_string(),
            record.get(col["rating_name"]).unwrap_or("").to_string(),
        ));
    }
    Ok(aliases)
}

/// Link shooters to rating rows: exact normalized-name match first, alias
/// lookup second. Players without a match are retained with
/// `rating_row: None` (they receive zero prior means downstream).
///
/// Indices are assigned in sorted canonical-name order so that label
/// encoding is reproducible across runs.
pub fn match_players(
    shots: &[ShotRecord],
    ratings: &FmRatingTable,
    aliases: &[(String, String)],
) -> Result<(PlayerTable, MatchReport), IngestError> {
    let mut alias_map: HashMap<String, usize> = HashMap::new();
    for (event_name, rating_name) in aliases {
        let candidates = ratings.lookup_normalized(&normalize_name(rating_name));
        match candidates.len() {
            0 => {
                return Err(IngestError::AliasTarget {
                    event_name: event_name.clone(),
                    rating_name: rating_name.clone(),
                })
            }
            1 => {
                alias_map.insert(normalize_name(event_name), candidates[0]);
            }
            _ => {
                return Err(IngestError::AliasAmbiguous {
                    event_name: event_name.clone(),
                    rating_name: rating_name.clone(),
                })
            }
        }
    }

    // Group raw spellings and counts under the canonical name, preserving
    // first-seen spelling as the display name.
    let mut canon: BTreeMap<String, (Vec<String>, usize)> = BTreeMap::new();
    for shot in shots {
        let key = normalize_name(&shot.player_name);
        let entry = canon.entry(key).or_default();
        if !entry.0.contains(&shot.player_name) {
            entry.0.push(shot.player_name.clone());
        }
        entry.1 += 1;
    }

    let mut table = PlayerTable::default();
    let mut report = MatchReport::default();
    let mut used_rating_rows = HashSet::new();
    for (index, (canonical_name, (spellings, shot_count))) in canon.into_iter().enumerate() {
        let direct = ratings.lookup_normalized(&canonical_name);
        let rating_row = match direct.len() {
            1 => Some(direct[0]),
            0 => alias_map.get(&canonical_name).copied(),
            _ => {
                // Duplicate rating names are only resolvable via an alias;
                // without one the player stays unmatched and is reported.
                match alias_map.get(&canonical_name) {
                    Some(&row) => Some(row),
                    None => {
                        report.ambiguous_shot_players.push(spellings[0].clone());
                        None
                    }
                }
            }
        };
        match rating_row {
            Some(row) => {
                used_rating_rows.insert(row);
                report.matched += 1;
            }
            None => {
                if !report.ambiguous_shot_players.contains(&spellings[0]) {
                    report.unmatched_shot_players.push(spellings[0].clone());
                }
            }
        }
        table.entries.push(PlayerEntry {
            index,
            canonical_name,
            display_name: spellings[0].clone(),
            aliases: spellings,
            shot_count,
            rating_row,
        });
    }
    for (i, row) in ratings.rows.iter().enumerate() {
        if !used_rating_rows.contains(&i) {
            report.unmatched_rating_rows.push(row.name.clone());
        }
    }
    table.rebuild_lookup();
    Ok((table, report))
}

/// Drop all shots by players with fewer than `threshold` total shots.
/// Order-preserving and idempotent.
pub fn filter_min_shots(shots: &[ShotRecord], threshold: usize) -> Vec<ShotRecord> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for shot in shots {
        *counts.entry(normalize_name(&shot.player_name)).or_default() += 1;
    }
    shots
        .iter()
        .filter(|s| counts[&normalize_name(&s.player_name)] >= threshold)
        .cloned()
        .collect()
}
