//! The six-turn benchmark conversation: map analysis, two contextual map
//! edits, path-to-language translation and command generation.

use serde::{Deserialize, Serialize};

use super::extract::{extract_map, ExtractionResult};
use super::session::ChatSession;
use crate::eval::Scenario;
use crate::map::{serialize_map, GridCoord, GridMap};

pub const STEP_COUNT: usize = 6;

/// Appended to the last turn so replies can be parsed mechanically.
pub const COMMAND_FORMAT_HINT: &str = "List the commands one per line using only: preflight, takeoff, hover, \
forward <cells>, left, right, around, land, postflight.";

pub fn obstacle_summary(map: &GridMap) -> String {
    map.obstacles()
        .iter()
        .map(|o| format!("{} ({}, {}, {}, {})", o.label, o.x1, o.y1, o.x2, o.y2))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn path_text(waypoints: &[GridCoord]) -> String {
    let cells: Vec<String> = waypoints.iter().map(|c| c.to_string()).collect();
    format!("[{}]", cells.join(", "))
}

pub fn map_prompt(map: &GridMap) -> String {
    format!(
        "width: {}, height: {}, start_x: {}, start_y: {}, end_x: {}, end_y: {}, obstacle list: {}. \
The same map in JSON format:\n{}\nThis is a maze map - please analyze it.",
        map.width(),
        map.height(),
        map.start().x,
        map.start().y,
        map.end().x,
        map.end().y,
        obstacle_summary(map),
        serialize_map(map)
    )
}

pub fn lunch_break_prompt(target: &str) -> String {
    format!(
        "On the basis of the original map, 1 PM is the break time at the {target}, so the area within two \
squares around it should be avoided. Please generate a new map and output it in the original JSON format."
    )
}

pub fn flock_prompt(anchor: GridCoord) -> String {
    format!(
        "On the basis of the original map, we have received a notice that there is a flock of birds at {anchor}, \
covering an area of about 3 grids, and this area should be avoided. Please generate a new map and output it \
in the original JSON format."
    )
}

pub fn translation_prompt(waypoints: &[GridCoord]) -> String {
    format!(
        "According to the path planning algorithm, the resulting path is {}. Assuming you are a professional \
drone pilot, you need to translate the output of the path planning algorithm into a navigation language that \
you can understand. How would you do this?",
        path_text(waypoints)
    )
}

pub fn command_prompt() -> String {
    format!(
        "Assuming you are a professional drone pilot and need to actually execute the drone flight according \
to the method mentioned earlier, here is how you would control the drone, assuming the drone's movements \
include (takeoff, landing, hovering, flying forward, and turning left, right, and around), and noting that you \
need to consider takeoff and landing at the start and end point. {COMMAND_FORMAT_HINT}"
    )
}

/// User turns 1-6 for a scenario.
pub fn protocol_prompts(scenario: &Scenario) -> [String; STEP_COUNT] {
    [
        map_prompt(&scenario.map),
        "Next, I will provide you with some new descriptions and you need to regenerate the map based on those \
descriptions."
            .to_string(),
        lunch_break_prompt(&scenario.lunch_break_target),
        flock_prompt(scenario.flock_anchor),
        translation_prompt(&scenario.reference_path.waypoints),
        command_prompt(),
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum StepOutcome {
    Replied { reply: String },
    Failed { error: String },
}

impl StepOutcome {
    pub fn reply(&self) -> Option<&str> {
        match self {
            StepOutcome::Replied { reply } => Some(reply),
            StepOutcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolStep {
    pub step: u8,
    pub prompt: String,
    pub outcome: StepOutcome,
    /// Present for the two map-editing turns (3 and 4).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extraction: Option<ExtractionResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTranscript {
    pub provider_id: String,
    pub model_id: String,
    pub scenario: String,
    pub steps: Vec<ProtocolStep>,
}

impl ProtocolTranscript {
    pub fn step(&self, n: u8) -> Option<&ProtocolStep> {
        self.steps.iter().find(|s| s.step == n)
    }
}

/// Runs all six turns. Failures are recorded per step and never stop the run.
pub fn run_protocol(session: &mut ChatSession, scenario: &Scenario) -> ProtocolTranscript {
    let prompts = protocol_prompts(scenario);
    let mut steps = Vec::with_capacity(STEP_COUNT);
    for (i, prompt) in prompts.into_iter().enumerate() {
        let step = (i + 1) as u8;
        let outcome = match session.send(&prompt) {
            Ok(reply) => StepOutcome::Replied { reply },
            Err(e) => {
                tracing::warn!(provider = session.provider_id(), step, "protocol step failed: {e}");
                StepOutcome::Failed { error: e.to_string() }
            }
        };
        let extraction = matches!(step, 3 | 4).then(|| match &outcome {
            StepOutcome::Replied { reply } => extract_map(reply),
            StepOutcome::Failed { error } => ExtractionResult::ProviderError { detail: error.clone() },
        });
        steps.push(ProtocolStep {
            step,
            prompt,
            outcome,
            extraction,
        });
    }
    ProtocolTranscript {
        provider_id: session.provider_id().to_string(),
        model_id: session.model_id().to_string(),
        scenario: scenario.name.clone(),
        steps,
    }
}
