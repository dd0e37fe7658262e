//! Turns operator utterances into context zones.

use std::sync::{Arc, LazyLock};

use ctxnav_core::bridge::{extract_map, ChatProvider, ChatSession, ExtractionResult, ProviderProfile};
use ctxnav_core::field::{dilate_region, zone_from_anchor, ContextZone};
use ctxnav_core::map::{serialize_map, GridCoord, GridMap, Obstacle};
use regex::Regex;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InterpretError {
    #[error("utterance not understood: {0}")]
    NoMatch(String),
    #[error("no obstacle labelled '{0}' on the map")]
    UnknownLabel(String),
    #[error("{0} lies outside the map")]
    OutOfBounds(GridCoord),
    #[error("model reply has no usable map: {0}")]
    Extraction(String),
    #[error("model reply changed the grid or its endpoints")]
    MapChanged,
    #[error("model reply adds no new region")]
    NoNewRegion,
    #[error("provider call failed: {0}")]
    Provider(String),
}

static AVOID_AROUND: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^\s*avoid\s+(?:the\s+area\s+)?within\s+(\d+)\s+(?:squares?|grids?|cells?)\s+(?:of|around)\s+(?:the\s+)?(.+?)\s*[.!]?\s*$")
        .unwrap()
});

static ANCHORED_AREA: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)^\s*(?:there\s+(?:is|are)\s+)?(?:an?\s+)?(.+?)\s+at\s+\(\s*(\d+)\s*,\s*(\d+)\s*\)\s*,?\s*covering\s+(?:an\s+area\s+of\s+)?(?:about\s+)?(\d+)\s+(?:grids?|cells?|squares?)\s*[.!]?\s*$",
    )
    .unwrap()
});

/// Offline grammar with two shapes:
/// `avoid within N squares of <label>` and
/// `<thing> at (x, y) covering about K grids`.
pub fn interpret_deterministic(utterance: &str, map: &GridMap) -> Result<Vec<ContextZone>, InterpretError> {
    if let Some(c) = AVOID_AROUND.captures(utterance) {
        let margin: u32 = c[1].parse().map_err(|_| InterpretError::NoMatch(utterance.into()))?;
        let label = c[2].trim();
        let ob = map
            .obstacle(label)
            .ok_or_else(|| InterpretError::UnknownLabel(label.to_string()))?;
        let zone = ContextZone::from_obstacle(&dilate_region(ob, margin, map)).with_label(format!("near {}", ob.label));
        return Ok(vec![zone]);
    }
    if let Some(c) = ANCHORED_AREA.captures(utterance) {
        let parse = |s: &str| s.parse::<i32>().map_err(|_| InterpretError::NoMatch(utterance.into()));
        let anchor = GridCoord::new(parse(&c[2])?, parse(&c[3])?);
        if !map.in_bounds(anchor) {
            return Err(InterpretError::OutOfBounds(anchor));
        }
        let cells: u32 = c[4].parse().map_err(|_| InterpretError::NoMatch(utterance.into()))?;
        let zone = zone_from_anchor(anchor, cells.max(1), map).with_label(c[1].trim());
        return Ok(vec![zone]);
    }
    Err(InterpretError::NoMatch(utterance.to_string()))
}

/// The current map with zones appended, in the map JSON schema. Built as
/// text because a zone may cover the original start after take-off, which a
/// validated map would reject.
pub fn current_map_document(map: &GridMap, zones: &[ContextZone]) -> String {
    let text = serialize_map(map);
    // obstacle_list is the last field, so the document ends with "]}"
    let head = text.strip_suffix("]}").expect("obstacle_list closes the document");
    let mut out = head.to_string();
    for (i, z) in zones.iter().enumerate() {
        if i > 0 || !map.obstacles().is_empty() {
            out.push(',');
        }
        out.push_str(&serde_json::to_string(&z.to_obstacle()).expect("obstacle serializes"));
    }
    out.push_str("]}");
    out
}

pub fn context_prompt(map: &GridMap, zones: &[ContextZone], utterance: &str) -> String {
    format!(
        "Here is the current drone map in JSON format:\n{}\nNew information: {utterance}\nOn the basis of this map, \
mark the area that should be avoided. Please generate a new map and output it in the original JSON format.",
        current_map_document(map, zones)
    )
}

/// New regions in `edited` that are neither map obstacles nor existing zones.
pub fn diff_zones(map: &GridMap, zones: &[ContextZone], edited: &GridMap) -> Result<Vec<ContextZone>, InterpretError> {
    if (edited.width(), edited.height(), edited.end()) != (map.width(), map.height(), map.end()) {
        return Err(InterpretError::MapChanged);
    }
    let known: Vec<Obstacle> = map
        .obstacles()
        .iter()
        .cloned()
        .chain(zones.iter().map(|z| z.to_obstacle()))
        .collect();
    let new: Vec<ContextZone> = edited
        .obstacles()
        .iter()
        .filter(|o| !known.iter().any(|k| k.same_rect(o)))
        .map(ContextZone::from_obstacle)
        .collect();
    if new.is_empty() {
        return Err(InterpretError::NoNewRegion);
    }
    Ok(new)
}

/// A provider the service may route `llm` interpretation to.
#[derive(Clone)]
pub struct LlmInterpreter {
    pub profile: ProviderProfile,
    pub provider: Arc<dyn ChatProvider>,
}

impl LlmInterpreter {
    /// Blocking: performs one provider round trip.
    pub fn interpret(&self, utterance: &str, map: &GridMap, zones: &[ContextZone]) -> Result<Vec<ContextZone>, InterpretError> {
        let mut session = ChatSession::new(&self.profile, self.provider.clone());
        let reply = session
            .send(&context_prompt(map, zones, utterance))
            .map_err(|e| InterpretError::Provider(e.to_string()))?;
        match extract_map(&reply) {
            ExtractionResult::Ok { map: edited } => diff_zones(map, zones, &edited),
            ExtractionResult::FormatError { detail } | ExtractionResult::InvalidMap { detail } => {
                Err(InterpretError::Extraction(detail))
            }
            ExtractionResult::ProviderError { detail } => Err(InterpretError::Provider(detail)),
        }
    }
}
