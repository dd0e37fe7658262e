//! Provider-agnostic chat sessions and the benchmark conversation protocol.

mod extract;
mod protocol;
mod provider;
mod session;

pub use extract::{extract_map, json_candidates, ExtractionResult};
pub use protocol::{
    command_prompt, flock_prompt, lunch_break_prompt, map_prompt, obstacle_summary, path_text, protocol_prompts,
    run_protocol, translation_prompt, ProtocolStep, ProtocolTranscript, StepOutcome, COMMAND_FORMAT_HINT,
    STEP_COUNT,
};
pub use provider::{
    load_provider_profiles, read_turn_records, ChatMessage, ChatParams, ChatProvider, HttpProvider,
    ProviderConfigError, ProviderError, ProviderProfile, RecordingProvider, ReplayProvider, Role,
    ScriptedProvider, TurnRecord,
};
pub use session::{estimate_tokens, ChatSession, SessionError};
