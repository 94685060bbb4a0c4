//! Time surface-form grammars and semantic classification of clock texts.
//!
//! A clock shows times in a small set of surface forms. Each form is a
//! regular grammar over the whole string:
//!
//! | form            | grammar              | example   |
//! |-----------------|----------------------|-----------|
//! | `min_sec`       | `^\d+:\d+$`          | `12:34`   |
//! | `min_sec_frac`  | `^\d+:\d+\.\d+$`     | `1:05.2`  |
//! | `sec_only`      | `^:\d+$`             | `:17`     |
//! | `sec_frac_only` | `^:\d+\.\d+$`        | `:17.3`   |
//!
//! The grammars are mutually exclusive, so a string parses to at most one
//! form. Classification of a detection tries, in fixed precedence order:
//! team lexicon, quarter form, time grammar, and falls back to `Other`.

use once_cell::sync::Lazy;
use regex::Regex;

use crate::model::{canonicalize, LeagueProfile, SemanticClass, TextDetection, TimeFormId};

static MIN_SEC: Lazy<Regex> = Lazy::new(|| Regex::new(r"^(\d+):(\d+)$").unwrap());
static MIN_SEC_FRAC: Lazy<Regex> = Lazy::new(|| Regex::new(r"^(\d+):(\d+)\.(\d+)$").unwrap());
static SEC_ONLY: Lazy<Regex> = Lazy::new(|| Regex::new(r"^:(\d+)$").unwrap());
static SEC_FRAC_ONLY: Lazy<Regex> = Lazy::new(|| Regex::new(r"^:(\d+)\.(\d+)$").unwrap());

/// A parsed clock time in one of the supported surface forms.
#[derive(Clone, Debug, PartialEq)]
pub enum TimeForm {
    MinSec { minutes: u32, seconds: u32 },
    MinSecFrac { minutes: u32, seconds: u32, fraction: f64 },
    SecOnly { seconds: u32 },
    SecFracOnly { seconds: u32, fraction: f64 },
}

impl TimeForm {
    pub fn form_id(&self) -> TimeFormId {
        match self {
            TimeForm::MinSec { .. } => TimeFormId::MinSec,
            TimeForm::MinSecFrac { .. } => TimeFormId::MinSecFrac,
            TimeForm::SecOnly { .. } => TimeFormId::SecOnly,
            TimeForm::SecFracOnly { .. } => TimeFormId::SecFracOnly,
        }
    }

    /// Renders the canonical string for this form. Re-parsing the result
    /// yields an equal `TimeForm`.
    pub fn render(&self) -> String {
        match self {
            TimeForm::MinSec { minutes, seconds } => format!("{minutes}:{seconds:02}"),
            TimeForm::MinSecFrac { minutes, seconds, fraction } => {
                format!("{minutes}:{seconds:02}.{}", fraction_digits(*fraction))
            }
            TimeForm::SecOnly { seconds } => format!(":{seconds:02}"),
            TimeForm::SecFracOnly { seconds, fraction } => {
                format!(":{seconds:02}.{}", fraction_digits(*fraction))
            }
        }
    }

    /// True when this form is a legal clock value for the league: leagues
    /// whose clocks reset each period never show 60 or more seconds next to
    /// a minute field.
    pub fn valid_for(&self, profile: &LeagueProfile) -> bool {
        match self {
            TimeForm::MinSec { seconds, .. } | TimeForm::MinSecFrac { seconds, .. } => {
                profile.continuous_time || *seconds < 60
            }
            TimeForm::SecOnly { .. } | TimeForm::SecFracOnly { .. } => true,
        }
    }
}

/// Decimal digits of a fraction in `[0, 1)`, without the leading `0.`.
fn fraction_digits(fraction: f64) -> String {
    if fraction == 0.0 {
        return "0".to_string();
    }
    let rendered = format!("{fraction}");
    match rendered.strip_prefix("0.") {
        Some(digits) => digits.to_string(),
        // Fractions are always < 1; anything else round-trips as a plain
        // digit string of its tenths value.
        None => format!("{}", (fraction * 10.0).round() as u64),
    }
}

/// Parses a whole string against the time grammars. Returns `None` when no
/// grammar matches.
pub fn parse_time(s: &str) -> Option<TimeForm> {
    if let Some(caps) = MIN_SEC_FRAC.captures(s) {
        return Some(TimeForm::MinSecFrac {
            minutes: caps[1].parse().ok()?,
            seconds: caps[2].parse().ok()?,
            fraction: parse_fraction(&caps[3])?,
        });
    }
    if let Some(caps) = MIN_SEC.captures(s) {
        return Some(TimeForm::MinSec {
            minutes: caps[1].parse().ok()?,
            seconds: caps[2].parse().ok()?,
        });
    }
    if let Some(caps) = SEC_FRAC_ONLY.captures(s) {
        return Some(TimeForm::SecFracOnly {
            seconds: caps[1].parse().ok()?,
            fraction: parse_fraction(&caps[2])?,
        });
    }
    if let Some(caps) = SEC_ONLY.captures(s) {
        return Some(TimeForm::SecOnly { seconds: caps[1].parse().ok()? });
    }
    None
}

fn parse_fraction(digits: &str) -> Option<f64> {
    let value: f64 = digits.parse().ok()?;
    Some(value / 10f64.powi(digits.len() as i32))
}

/// Total seconds represented by a parsed time.
pub fn time_to_seconds(form: &TimeForm) -> f64 {
    match form {
        TimeForm::MinSec { minutes, seconds } => f64::from(*minutes) * 60.0 + f64::from(*seconds),
        TimeForm::MinSecFrac { minutes, seconds, fraction } => {
            f64::from(*minutes) * 60.0 + f64::from(*seconds) + fraction
        }
        TimeForm::SecOnly { seconds } => f64::from(*seconds),
        TimeForm::SecFracOnly { seconds, fraction } => f64::from(*seconds) + fraction,
    }
}

/// Matches a canonicalized string against the profile's quarter forms.
/// Returns the 1-based quarter number on an exact match.
pub fn parse_quarter(s: &str, profile: &LeagueProfile) -> Option<u8> {
    let canonical = canonicalize(s);
    profile
        .quarter_forms
        .iter()
        .position(|form| canonicalize(form) == canonical)
        .map(|idx| (idx + 1) as u8)
}

/// Classification payload for one detection.
#[derive(Clone, Debug, PartialEq)]
pub enum ClassLabel {
    Team { abbrev: String },
    Quarter { index: u8 },
    Time { form: TimeForm },
    Other,
}

/// A detection together with its canonical text and assigned class.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifiedText {
    pub detection: TextDetection,
    pub canonical: String,
    pub label: ClassLabel,
}

impl ClassifiedText {
    pub fn class(&self) -> SemanticClass {
        match self.label {
            ClassLabel::Team { .. } => SemanticClass::Team,
            ClassLabel::Quarter { .. } => SemanticClass::Quarter,
            ClassLabel::Time { .. } => SemanticClass::Time,
            ClassLabel::Other => SemanticClass::Other,
        }
    }
}

/// Assigns a class by the first match in fixed precedence: team lexicon,
/// quarter form, time grammar, then `Other`. Lexicon entries always win, so
/// a league could even list a team abbreviation that looks like a time.
pub fn classify(detection: &TextDetection, profile: &LeagueProfile) -> ClassifiedText {
    let canonical = canonicalize(&detection.raw_text);
    let label = if profile.team_lexicon.contains(&canonical) {
        ClassLabel::Team { abbrev: canonical.clone() }
    } else if let Some(index) = parse_quarter(&canonical, profile) {
        ClassLabel::Quarter { index }
    } else if let Some(form) = parse_time(&canonical).filter(|f| f.valid_for(profile)) {
        ClassLabel::Time { form }
    } else {
        ClassLabel::Other
    };
    ClassifiedText { detection: detection.clone(), canonical, label }
}
