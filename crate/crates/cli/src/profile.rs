//! League-profile configuration: built-in profiles by id, or a JSON
//! profile file mapping league ids to profiles plus optional dataset
//! metadata. Files are validated eagerly at startup; unknown keys are
//! rejected.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use scoreclock::LeagueProfile;

use crate::error::CliError;

/// Dataset-level knobs a profile file may carry alongside its leagues.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMetadata {
    /// Histogram bucket edges for augmentation planning.
    #[serde(default)]
    pub bucket_edges: Option<Vec<f64>>,
    /// Allowed isotropic scale range `[lo, hi]` for augmentation plans.
    #[serde(default)]
    pub augment_range: Option<(f64, f64)>,
    /// Clock style label per video id, for stratified sampling.
    #[serde(default)]
    pub clock_style_labels: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    leagues: BTreeMap<String, LeagueProfile>,
    #[serde(default)]
    metadata: DatasetMetadata,
}

/// The profile a run operates under, plus any file-level metadata.
#[derive(Clone, Debug)]
pub struct ResolvedProfile {
    pub profile: LeagueProfile,
    pub metadata: DatasetMetadata,
}

/// Resolves `--profile`: a path to a profile file when one exists at that
/// location, otherwise a built-in league id. `--league` picks one league
/// out of a multi-league file and must be omitted or matching elsewhere.
pub fn resolve(profile_arg: &str, league: Option<&str>) -> Result<ResolvedProfile, CliError> {
    let path = Path::new(profile_arg);
    if path.is_file() {
        return resolve_file(path, league);
    }
    let profile = LeagueProfile::builtin(profile_arg).ok_or_else(|| {
        CliError::validation(
            "--profile",
            format!("'{profile_arg}' is neither a readable file nor a built-in league id"),
        )
    })?;
    if let Some(wanted) = league {
        if wanted != profile.league_id {
            return Err(CliError::validation(
                "--league",
                format!("'{wanted}' does not match profile '{}'", profile.league_id),
            ));
        }
    }
    Ok(ResolvedProfile { profile, metadata: DatasetMetadata::default() })
}

fn resolve_file(path: &Path, league: Option<&str>) -> Result<ResolvedProfile, CliError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(&shown, e))?;
    let file: ProfileFile = serde_json::from_str(&text)
        .map_err(|e| CliError::schema(&shown, e.line(), crate::jsonl::strip_position(&e)))?;
    if file.leagues.is_empty() {
        return Err(CliError::validation(&shown, "profile file lists no leagues"));
    }
    for (key, profile) in &file.leagues {
        if *key != profile.league_id {
            return Err(CliError::validation(
                &shown,
                format!("leagues.{key}: league_id is '{}'", profile.league_id),
            ));
        }
        profile.validate().map_err(|e| {
            CliError::validation(&shown, format!("leagues.{key}: {e}"))
        })?;
    }
    let profile = match league {
        Some(id) => file.leagues.get(id).cloned().ok_or_else(|| {
            CliError::validation(
                &shown,
                format!("league '{id}' not in file (has: {})", key_list(&file.leagues)),
            )
        })?,
        None if file.leagues.len() == 1 => {
            file.leagues.values().next().cloned().expect("len checked")
        }
        None => {
            return Err(CliError::validation(
                &shown,
                format!(
                    "file lists several leagues ({}); pick one with --league",
                    key_list(&file.leagues)
                ),
            ))
        }
    };
    Ok(ResolvedProfile { profile, metadata: file.metadata })
}

fn key_list(leagues: &BTreeMap<String, LeagueProfile>) -> String {
    leagues.keys().cloned().collect::<Vec<_>>().join(", ")
}
