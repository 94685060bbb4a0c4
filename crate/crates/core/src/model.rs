//! Shared domain types: detection boxes, clock records, league profiles,
//! and the game-clock readings the rest of the crate produces and consumes.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

/// Axis-aligned bounding box in crop-relative pixel coordinates.
///
/// Coordinates are relative to the clock crop, with the origin at the top
/// left. A valid box has `x_min < x_max`, `y_min < y_max`, and all four
/// coordinates finite and non-negative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Self { x_min, y_min, x_max, y_max }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Center point `(x, y)` of the box.
    pub fn center(&self) -> (f64, f64) {
        ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)
    }

    /// Returns a description of the first violated box invariant, if any.
    pub fn validity_error(&self) -> Option<String> {
        let coords = [self.x_min, self.y_min, self.x_max, self.y_max];
        if coords.iter().any(|c| !c.is_finite()) {
            return Some("coordinates must be finite".to_string());
        }
        if coords.iter().any(|c| *c < 0.0) {
            return Some("coordinates must be non-negative".to_string());
        }
        if self.x_min >= self.x_max {
            return Some(format!("x_min {} must be < x_max {}", self.x_min, self.x_max));
        }
        if self.y_min >= self.y_max {
            return Some(format!("y_min {} must be < y_max {}", self.y_min, self.y_max));
        }
        None
    }

    pub fn is_valid(&self) -> bool {
        self.validity_error().is_none()
    }
}

/// One OCR text detection inside a clock crop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextDetection {
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub raw_text: String,
    /// Detector confidence in `[0, 1]`. Missing values default to 1.0.
    #[serde(default = "default_confidence")]
    pub confidence: f64,
}

fn default_confidence() -> f64 {
    1.0
}

/// All OCR output for one video frame's clock crop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClockRecord {
    pub video_id: String,
    pub frame_id: i64,
    /// Seconds from the start of the video.
    pub frame_time_s: f64,
    /// The clock region within the frame, in frame pixels.
    pub clock_box: BBox,
    pub detections: Vec<TextDetection>,
}

/// Semantic class of a clock text.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemanticClass {
    Team,
    Time,
    Quarter,
    Score,
    Other,
}

/// Identifier for a time surface form. The grammar for each form lives in
/// [`crate::surface_form`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeFormId {
    MinSec,
    MinSecFrac,
    SecOnly,
    SecFracOnly,
}

/// Direction the game clock moves in while play is running.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonotonicDirection {
    Decreasing,
    Increasing,
}

/// Period key of a reading: a quarter index for leagues whose clocks reset
/// each period, or a raw marker string (often empty) for continuous-time
/// leagues.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Period {
    Quarter(u8),
    Marker(String),
}

impl Period {
    pub fn is_continuous(&self) -> bool {
        matches!(self, Period::Marker(_))
    }
}

/// Static description of a league: which team strings its clocks show, how
/// quarters are written, which time forms its clocks use (most specific
/// first), and how the clock moves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeagueProfile {
    pub league_id: String,
    /// Canonical (lowercase) team abbreviations.
    pub team_lexicon: BTreeSet<String>,
    /// Quarter texts in period order; index + 1 is the quarter number.
    pub quarter_forms: Vec<String>,
    /// Time forms in selection priority order, most likely game clock first.
    pub time_form_priority: Vec<TimeFormId>,
    pub monotonic_direction: MonotonicDirection,
    /// True when the clock never resets (soccer-style continuous time).
    pub continuous_time: bool,
    /// Pixel granularity the detector input is resized to.
    pub grid: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ProfileError {
    #[error("team lexicon must not be empty")]
    EmptyTeamLexicon,
    #[error("time form priority must not be empty")]
    EmptyTimeFormPriority,
    #[error("time form priority lists {0:?} more than once")]
    DuplicateTimeForm(TimeFormId),
    #[error("continuous-time leagues must use an increasing clock")]
    ContinuousMustIncrease,
    #[error("grid must be positive")]
    NonPositiveGrid,
}

impl LeagueProfile {
    pub fn validate(&self) -> Result<(), ProfileError> {
        if self.team_lexicon.is_empty() {
            return Err(ProfileError::EmptyTeamLexicon);
        }
        if self.time_form_priority.is_empty() {
            return Err(ProfileError::EmptyTimeFormPriority);
        }
        let mut seen = BTreeSet::new();
        for form in &self.time_form_priority {
            if !seen.insert(*form) {
                return Err(ProfileError::DuplicateTimeForm(*form));
            }
        }
        if self.continuous_time && self.monotonic_direction != MonotonicDirection::Increasing {
            return Err(ProfileError::ContinuousMustIncrease);
        }
        if self.grid == 0 {
            return Err(ProfileError::NonPositiveGrid);
        }
        Ok(())
    }

    /// Built-in NBA-style profile: quarter clocks counting down.
    pub fn nba() -> Self {
        let lexicon = [
            "atl", "bkn", "bos", "cha", "chi", "cle", "dal", "den", "det", "gs", "hou", "ind",
            "lac", "lal", "mem", "mia", "mil", "min", "no", "ny", "okc", "orl", "phi", "phx",
            "por", "sac", "sa", "tor", "uta", "was",
        ];
        LeagueProfile {
            league_id: "nba".to_string(),
            team_lexicon: lexicon.iter().map(|s| s.to_string()).collect(),
            quarter_forms: ["1st", "2nd", "3rd", "4th"].iter().map(|s| s.to_string()).collect(),
            time_form_priority: vec![
                TimeFormId::MinSec,
                TimeFormId::MinSecFrac,
                TimeFormId::SecFracOnly,
                TimeFormId::SecOnly,
            ],
            monotonic_direction: MonotonicDirection::Decreasing,
            continuous_time: false,
            grid: 32,
        }
    }

    /// Built-in soccer-style profile: one continuous clock counting up.
    pub fn soccer() -> Self {
        let lexicon = [
            "ars", "avl", "bha", "bou", "bre", "bur", "che", "cry", "eve", "ful", "liv", "lut",
            "mci", "mun", "new", "nfo", "shu", "tot", "whu", "wol",
        ];
        LeagueProfile {
            league_id: "soccer".to_string(),
            team_lexicon: lexicon.iter().map(|s| s.to_string()).collect(),
            quarter_forms: Vec::new(),
            time_form_priority: vec![TimeFormId::MinSec, TimeFormId::MinSecFrac],
            monotonic_direction: MonotonicDirection::Increasing,
            continuous_time: true,
            grid: 32,
        }
    }

    /// Built-in profile by league id, if one exists.
    pub fn builtin(league_id: &str) -> Option<Self> {
        match league_id {
            "nba" => Some(Self::nba()),
            "soccer" => Some(Self::soccer()),
            _ => None,
        }
    }
}

/// A semantic game-clock state extracted from one frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameClockReading {
    /// The two distinct team abbreviations, in on-screen reading order.
    pub teams: (String, String),
    pub quarter: Period,
    /// Game-clock seconds within the period (or since kickoff for
    /// continuous-time leagues).
    pub time_s: f64,
    pub source_frame_id: i64,
    /// Box of one representative detection per contributing class.
    pub source_boxes: BTreeMap<SemanticClass, BBox>,
}

/// One invariant violation found while validating a record.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum RecordViolation {
    #[error("{path}: invalid box ({detail})")]
    InvalidBox { path: String, detail: String },
    #[error("frame_id: negative frame id {0}")]
    NegativeFrameId(i64),
    #[error("{path}: text is empty after trimming")]
    EmptyText { path: String },
    #[error("{path}: confidence {value} outside [0, 1]")]
    InvalidConfidence { path: String, value: f64 },
}

/// Lowercases, trims, and collapses internal whitespace runs to one space.
///
/// Canonicalization is idempotent and total; the empty string maps to
/// itself.
pub fn canonicalize(raw: &str) -> String {
    raw.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Checks every field-level invariant of a record and reports all
/// violations by field path. A record is accepted iff the list is empty.
pub fn validate_record(record: &ClockRecord) -> Result<(), Vec<RecordViolation>> {
    let mut violations = Vec::new();
    if record.frame_id < 0 {
        violations.push(RecordViolation::NegativeFrameId(record.frame_id));
    }
    if let Some(detail) = record.clock_box.validity_error() {
        violations.push(RecordViolation::InvalidBox { path: "clock_box".to_string(), detail });
    }
    for (i, det) in record.detections.iter().enumerate() {
        if let Some(detail) = det.bbox.validity_error() {
            violations.push(RecordViolation::InvalidBox {
                path: format!("detections[{i}].box"),
                detail,
            });
        }
        if det.raw_text.trim().is_empty() {
            violations.push(RecordViolation::EmptyText {
                path: format!("detections[{i}].raw_text"),
            });
        }
        if !det.confidence.is_finite() || !(0.0..=1.0).contains(&det.confidence) {
            violations.push(RecordViolation::InvalidConfidence {
                path: format!("detections[{i}].confidence"),
                value: det.confidence,
            });
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}
