//! Automated verdicts for the five benchmark criteria.

use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::scenario::{Scenario, FLOCK_CELLS, LUNCH_BREAK_MARGIN};
use crate::bridge::{ExtractionResult, ProtocolTranscript};
use crate::command::{parse_command_text, trace, Command, CommandError, Heading};
use crate::field::dilate_region;
use crate::map::{rasterize, GridCoord, GridMap, Obstacle};

/// Minimum share of the lunch-break ring that new regions must cover.
pub const RING_COVERAGE_THRESHOLD: f64 = 0.8;
/// Accepted area window for the flock region, in cells.
pub const FLOCK_AREA_MIN: u64 = FLOCK_CELLS as u64;
pub const FLOCK_AREA_MAX: u64 = 25;

pub const CRITERIA: [&str; 5] = [
    "Map correctly understood",
    "Map correctly modified",
    "Potential field correctly modified",
    "Flight sub-task instruction generation",
    "Drone control command generation",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    FormatError,
    SemanticError,
    ProviderError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub verdict: Verdict,
    /// Empty on pass.
    #[serde(default)]
    pub detail: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub overridden: bool,
}

impl CriterionResult {
    pub fn pass(id: u8) -> Self {
        Self {
            id,
            verdict: Verdict::Pass,
            detail: String::new(),
            overridden: false,
        }
    }

    fn fail(id: u8, verdict: Verdict, detail: impl Into<String>) -> Self {
        Self {
            id,
            verdict,
            detail: detail.into(),
            overridden: false,
        }
    }
}

static TAKEOFF: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\btake[\s-]?off").unwrap());
static LANDING: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\bland(s|ed|ing)?\b").unwrap());

fn mentions_coord(text: &str, c: GridCoord) -> bool {
    Regex::new(&format!(r"\(\s*{}\s*,\s*{}\s*\)", c.x, c.y))
        .expect("coordinate pattern")
        .is_match(text)
}

fn mentions_number(text: &str, n: i32) -> bool {
    Regex::new(&format!(r"(?:^|[^0-9]){n}(?:[^0-9]|$)"))
        .expect("number pattern")
        .is_match(text)
}

fn reply_of(transcript: &ProtocolTranscript, step: u8) -> Result<&str, String> {
    let s = transcript.step(step).ok_or_else(|| format!("step {step} missing from transcript"))?;
    s.outcome
        .reply()
        .ok_or_else(|| format!("step {step}: {}", match &s.outcome {
            crate::bridge::StepOutcome::Failed { error } => error.as_str(),
            _ => "no reply",
        }))
}

fn judge_understanding(transcript: &ProtocolTranscript, map: &GridMap) -> CriterionResult {
    let reply = match reply_of(transcript, 1) {
        Ok(r) => r,
        Err(e) => return CriterionResult::fail(1, Verdict::ProviderError, e),
    };
    let lower = reply.to_lowercase();
    let missing: Vec<&str> = map
        .obstacles()
        .iter()
        .map(|o| o.label.as_str())
        .filter(|l| !lower.contains(&l.to_lowercase()))
        .collect();
    if !missing.is_empty() {
        return CriterionResult::fail(1, Verdict::SemanticError, format!("labels not mentioned: {}", missing.join(", ")));
    }
    for (name, n) in [("width", map.width()), ("height", map.height())] {
        if !mentions_number(reply, n) {
            return CriterionResult::fail(1, Verdict::SemanticError, format!("{name} {n} not mentioned"));
        }
    }
    CriterionResult::pass(1)
}

/// Resolves the extraction for an edit step, or the verdict that ends judging.
fn edited_map(transcript: &ProtocolTranscript, id: u8, step: u8, original: &GridMap) -> Result<(GridMap, Vec<Obstacle>), CriterionResult> {
    let Some(extraction) = transcript.step(step).and_then(|s| s.extraction.as_ref()) else {
        return Err(CriterionResult::fail(id, Verdict::ProviderError, format!("step {step} has no reply")));
    };
    let map = match extraction {
        ExtractionResult::Ok { map } => map.clone(),
        ExtractionResult::FormatError { detail } => {
            return Err(CriterionResult::fail(id, Verdict::FormatError, detail.clone()))
        }
        ExtractionResult::InvalidMap { detail } => {
            return Err(CriterionResult::fail(id, Verdict::SemanticError, detail.clone()))
        }
        ExtractionResult::ProviderError { detail } => {
            return Err(CriterionResult::fail(id, Verdict::ProviderError, detail.clone()))
        }
    };
    if (map.width(), map.height(), map.start(), map.end()) != (original.width(), original.height(), original.start(), original.end()) {
        return Err(CriterionResult::fail(id, Verdict::SemanticError, "dimensions or endpoints changed"));
    }
    for ob in original.obstacles() {
        if !map.obstacles().iter().any(|o| o.same_rect(ob)) {
            return Err(CriterionResult::fail(
                id,
                Verdict::SemanticError,
                format!("original obstacle '{}' is missing", ob.label),
            ));
        }
    }
    let new: Vec<Obstacle> = map
        .obstacles()
        .iter()
        .filter(|o| !original.obstacles().iter().any(|b| b.same_rect(o)))
        .cloned()
        .collect();
    if new.is_empty() {
        return Err(CriterionResult::fail(id, Verdict::SemanticError, "no new region was added"));
    }
    if let Some(o) = new.iter().find(|o| o.contains(original.start()) || o.contains(original.end())) {
        return Err(CriterionResult::fail(
            id,
            Verdict::SemanticError,
            format!("new region '{}' covers the start or end cell", o.label),
        ));
    }
    Ok((map, new))
}

fn judge_lunch_break(transcript: &ProtocolTranscript, scenario: &Scenario) -> CriterionResult {
    let original = &scenario.map;
    let (_, new) = match edited_map(transcript, 2, 3, original) {
        Ok(v) => v,
        Err(r) => return r,
    };
    let Some(target) = original.obstacle(&scenario.lunch_break_target) else {
        return CriterionResult::fail(2, Verdict::SemanticError, "scenario target missing from map");
    };
    let dilated = dilate_region(target, LUNCH_BREAK_MARGIN, original);
    let ring: Vec<GridCoord> = dilated.cells().filter(|&c| !target.contains(c)).collect();
    let covered: HashSet<GridCoord> = new.iter().flat_map(|o| o.cells()).collect();
    let hit = ring.iter().filter(|c| covered.contains(c)).count();
    let coverage = if ring.is_empty() { 1.0 } else { hit as f64 / ring.len() as f64 };
    if coverage < RING_COVERAGE_THRESHOLD {
        return CriterionResult::fail(
            2,
            Verdict::SemanticError,
            format!(
                "new regions cover {hit}/{} cells of the {}-cell ring around '{}' ({:.0}% < {:.0}%)",
                ring.len(),
                LUNCH_BREAK_MARGIN,
                target.label,
                coverage * 100.0,
                RING_COVERAGE_THRESHOLD * 100.0
            ),
        );
    }
    CriterionResult::pass(2)
}

fn judge_flock(transcript: &ProtocolTranscript, scenario: &Scenario) -> CriterionResult {
    let (_, new) = match edited_map(transcript, 3, 4, &scenario.map) {
        Ok(v) => v,
        Err(r) => return r,
    };
    let anchor = scenario.flock_anchor;
    let covering: Vec<&Obstacle> = new.iter().filter(|o| o.contains(anchor)).collect();
    if covering.is_empty() {
        return CriterionResult::fail(3, Verdict::SemanticError, format!("no new region covers {anchor}"));
    }
    if !covering
        .iter()
        .any(|o| (FLOCK_AREA_MIN..=FLOCK_AREA_MAX).contains(&o.area()))
    {
        let areas: Vec<String> = covering.iter().map(|o| o.area().to_string()).collect();
        return CriterionResult::fail(
            3,
            Verdict::SemanticError,
            format!(
                "region over {anchor} has area {} outside [{FLOCK_AREA_MIN}, {FLOCK_AREA_MAX}]",
                areas.join("/")
            ),
        );
    }
    CriterionResult::pass(3)
}

fn judge_instructions(transcript: &ProtocolTranscript, map: &GridMap) -> CriterionResult {
    let reply = match reply_of(transcript, 5) {
        Ok(r) => r,
        Err(e) => return CriterionResult::fail(4, Verdict::ProviderError, e),
    };
    let mut problems = Vec::new();
    if !TAKEOFF.is_match(reply) {
        problems.push("no takeoff step".to_string());
    }
    if !LANDING.is_match(reply) {
        problems.push("no landing step".to_string());
    }
    for (name, c) in [("start", map.start()), ("end", map.end())] {
        if !mentions_coord(reply, c) {
            problems.push(format!("{name} {c} not mentioned"));
        }
    }
    if problems.is_empty() {
        CriterionResult::pass(4)
    } else {
        CriterionResult::fail(4, Verdict::SemanticError, problems.join("; "))
    }
}

fn judge_commands(transcript: &ProtocolTranscript, map: &GridMap) -> CriterionResult {
    let reply = match reply_of(transcript, 6) {
        Ok(r) => r,
        Err(e) => return CriterionResult::fail(5, Verdict::ProviderError, e),
    };
    let Some(commands) = parse_command_text(reply) else {
        return CriterionResult::fail(5, Verdict::FormatError, "no command block found");
    };
    if !commands.contains(&Command::Takeoff) || !commands.contains(&Command::Land) {
        return CriterionResult::fail(5, Verdict::SemanticError, "commands lack takeoff or landing");
    }
    let grid = rasterize(map);
    let mut failures: Vec<String> = Vec::new();
    // The initial facing is not part of the protocol, so any heading may start.
    for heading in Heading::ALL {
        match trace(&commands, Some(heading), map.start(), &grid) {
            Ok(cells) if cells.last() == Some(&map.end()) => return CriterionResult::pass(5),
            Ok(cells) => failures.push(format!(
                "facing {heading:?}: stops at {} instead of {}",
                cells.last().copied().unwrap_or(map.start()),
                map.end()
            )),
            Err(CommandError::CollisionOrEscape(c)) => failures.push(format!("facing {heading:?}: collision at {c}")),
            Err(e) => failures.push(format!("facing {heading:?}: {e}")),
        }
    }
    CriterionResult::fail(5, Verdict::SemanticError, failures.join("; "))
}

/// Scores a protocol transcript against its scenario. Deterministic.
pub fn judge(transcript: &ProtocolTranscript, scenario: &Scenario) -> [CriterionResult; 5] {
    [
        judge_understanding(transcript, &scenario.map),
        judge_lunch_break(transcript, scenario),
        judge_flock(transcript, scenario),
        judge_instructions(transcript, &scenario.map),
        judge_commands(transcript, &scenario.map),
    ]
}
