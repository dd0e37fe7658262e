//! Replies synthesized from the deterministic core. A provider that answers
//! with these is the harness's own oracle and must earn five passes.

use super::scenario::{Scenario, FLOCK_CELLS, LUNCH_BREAK_MARGIN};
use crate::bridge::{
    extract_map, protocol_prompts, ChatMessage, ChatParams, ChatProvider, ExtractionResult, ProtocolStep,
    ProtocolTranscript, ProviderError, Role, StepOutcome, STEP_COUNT,
};
use crate::command::{compile_commands, CompileOptions};
use crate::field::{dilate_region, zone_from_anchor};
use crate::map::{serialize_map_pretty, Obstacle, ObstacleKind};
use crate::narrate::narrate;

fn describe_map(scenario: &Scenario) -> String {
    let map = &scenario.map;
    let mut out = format!(
        "The map is a grid {} cells wide and {} cells high. The flight starts at {} and ends at {}. \
It contains {} no-fly obstacles:\n",
        map.width(),
        map.height(),
        map.start(),
        map.end(),
        map.obstacles().len()
    );
    for o in map.obstacles() {
        out.push_str(&format!(
            "- {}: cells ({}, {}) to ({}, {}), {} cells\n",
            o.label,
            o.x1,
            o.y1,
            o.x2,
            o.y2,
            o.area()
        ));
    }
    out
}

fn as_static(mut ob: Obstacle, label: String) -> Obstacle {
    ob.label = label;
    ob.kind = ObstacleKind::Static;
    ob.penalty = f64::INFINITY;
    ob
}

/// The six assistant replies, in protocol order.
pub fn synthetic_replies(scenario: &Scenario) -> [String; STEP_COUNT] {
    let map = &scenario.map;
    let target = map
        .obstacle(&scenario.lunch_break_target)
        .expect("scenario target exists");
    let lunch = as_static(
        dilate_region(target, LUNCH_BREAK_MARGIN, map),
        format!("{} lunch break", target.label),
    );
    let lunch_map = map.with_obstacles([lunch]).expect("lunch-break zone keeps the map valid");
    let flock = as_static(
        zone_from_anchor(scenario.flock_anchor, FLOCK_CELLS, map).to_obstacle(),
        "flock of birds".into(),
    );
    let flock_map = map.with_obstacles([flock]).expect("flock zone keeps the map valid");

    let seq = compile_commands(&scenario.reference_path, CompileOptions::default())
        .expect("reference path has at least two waypoints");
    [
        describe_map(scenario),
        "Understood. Send the new descriptions and I will regenerate the map in the same JSON format.".into(),
        format!("Here is the updated map:\n```json\n{}\n```", serialize_map_pretty(&lunch_map)),
        format!("Here is the updated map:\n```json\n{}\n```", serialize_map_pretty(&flock_map)),
        narrate(&seq, &scenario.reference_path),
        format!("Flight commands:\n\n{}\n\nThe drone lands at {}.", seq.to_text(), map.end()),
    ]
}

/// Removes the last closing brace from `reply`.
pub fn drop_last_brace(reply: &str) -> String {
    match reply.rfind('}') {
        Some(i) => format!("{}{}", &reply[..i], &reply[i + 1..]),
        None => reply.to_string(),
    }
}

/// A full transcript built without any provider.
pub fn synthesize_transcript(scenario: &Scenario) -> ProtocolTranscript {
    let prompts = protocol_prompts(scenario);
    let replies = synthetic_replies(scenario);
    let steps = prompts
        .into_iter()
        .zip(replies)
        .enumerate()
        .map(|(i, (prompt, reply))| {
            let step = (i + 1) as u8;
            ProtocolStep {
                step,
                prompt,
                extraction: matches!(step, 3 | 4).then(|| extract_map(&reply)),
                outcome: StepOutcome::Replied { reply },
            }
        })
        .collect();
    ProtocolTranscript {
        provider_id: "synthetic".into(),
        model_id: "synthetic".into(),
        scenario: scenario.name.clone(),
        steps,
    }
}

/// Drops a brace from the reply of `step` and re-runs extraction.
pub fn corrupt_step(mut transcript: ProtocolTranscript, step: u8) -> ProtocolTranscript {
    if let Some(s) = transcript.steps.iter_mut().find(|s| s.step == step) {
        if let StepOutcome::Replied { reply } = &s.outcome {
            let corrupted = drop_last_brace(reply);
            if s.extraction.is_some() {
                s.extraction = Some(extract_map(&corrupted));
            }
            s.outcome = StepOutcome::Replied { reply: corrupted };
        }
    }
    transcript
}

/// Mock provider answering each protocol turn with the synthesized reply,
/// optionally dropping a brace from selected steps.
pub struct SyntheticProvider {
    replies: [String; STEP_COUNT],
}

impl SyntheticProvider {
    pub fn new(scenario: &Scenario) -> Self {
        Self {
            replies: synthetic_replies(scenario),
        }
    }

    pub fn with_corrupted_steps(scenario: &Scenario, steps: &[u8]) -> Self {
        let mut replies = synthetic_replies(scenario);
        for &s in steps {
            if (1..=STEP_COUNT as u8).contains(&s) {
                let r = &mut replies[s as usize - 1];
                *r = drop_last_brace(r);
            }
        }
        Self { replies }
    }

    /// Resolves `mock:<name>` endpoints: `perfect` or `drop-brace-step<N>`.
    pub fn from_mock_name(name: &str, scenario: &Scenario) -> Option<Self> {
        if name == "perfect" {
            return Some(Self::new(scenario));
        }
        let step: u8 = name.strip_prefix("drop-brace-step")?.parse().ok()?;
        Some(Self::with_corrupted_steps(scenario, &[step]))
    }
}

impl ChatProvider for SyntheticProvider {
    fn complete(&self, messages: &[ChatMessage], _params: &ChatParams) -> Result<String, ProviderError> {
        let turn = messages.iter().filter(|m| m.role == Role::User).count();
        self.replies
            .get(turn.wrapping_sub(1))
            .cloned()
            .ok_or_else(|| ProviderError::Rejected(format!("no synthetic reply for turn {turn}")))
    }
}

/// Convenience for tests: the extraction outcome of a synthesized step.
pub fn synthetic_extraction(scenario: &Scenario, step: u8) -> Option<ExtractionResult> {
    matches!(step, 3 | 4).then(|| extract_map(&synthetic_replies(scenario)[step as usize - 1]))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::bridge::{run_protocol, ChatSession, ProviderProfile};
    use crate::eval::{appendix_scenario, generate_scenario, judge, Verdict};

    fn session(provider: SyntheticProvider) -> ChatSession {
        let profile = ProviderProfile {
            id: "synthetic".into(),
            endpoint: "mock:perfect".into(),
            auth_env_var: String::new(),
            model_id: "synthetic".into(),
            context_tokens: 1_000_000,
        };
        ChatSession::new(&profile, Arc::new(provider))
    }

    #[test]
    fn provider_reproduces_synthesized_transcript() {
        let s = appendix_scenario();
        let mut sess = session(SyntheticProvider::new(&s));
        let t = run_protocol(&mut sess, &s);
        assert_eq!(t.steps, synthesize_transcript(&s).steps);
    }

    #[test]
    fn corrupted_step_three_mirrors_format_error_row() {
        let s = appendix_scenario();
        let mut sess = session(SyntheticProvider::from_mock_name("drop-brace-step3", &s).unwrap());
        let t = run_protocol(&mut sess, &s);
        assert!(matches!(t.step(3).unwrap().extraction, Some(ExtractionResult::FormatError { .. })));
        let v: Vec<Verdict> = judge(&t, &s).iter().map(|r| r.verdict).collect();
        assert_eq!(v, [Verdict::Pass, Verdict::FormatError, Verdict::Pass, Verdict::Pass, Verdict::Pass]);
    }

    #[test]
    fn generated_scenarios_self_consistent() {
        for seed in 0..20 {
            let s = generate_scenario(seed, 20, 20, 3).unwrap();
            assert!(judge(&synthesize_transcript(&s), &s).iter().all(|r| r.verdict == Verdict::Pass));
            assert!(synthetic_extraction(&s, 3).unwrap().map().is_some());
        }
    }

    #[test]
    fn unknown_mock_names() {
        let s = appendix_scenario();
        assert!(SyntheticProvider::from_mock_name("nope", &s).is_none());
        assert!(SyntheticProvider::from_mock_name("drop-brace-stepx", &s).is_none());
    }
}
