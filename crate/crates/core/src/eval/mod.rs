//! Benchmark scenarios, criterion judges and result tables.

mod judge;
mod report;
mod scenario;
pub mod synth;

pub use judge::{judge, CriterionResult, Verdict, CRITERIA, FLOCK_AREA_MAX, FLOCK_AREA_MIN, RING_COVERAGE_THRESHOLD};
pub use report::{parse_overrides, EvalReport, ReportRow, ScenarioMeta, VerdictOverride};
pub use scenario::{
    appendix_reference_path, appendix_scenario, generate_scenario, Scenario, ScenarioError, ScenarioSidecar,
    FLOCK_CELLS, LUNCH_BREAK_MARGIN,
};
