//! Benchmark result tables.

use serde::{Deserialize, Serialize};

use super::judge::{CriterionResult, Verdict, CRITERIA};
use super::scenario::{Scenario, ScenarioError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMeta {
    pub name: String,
    pub seed: u64,
    pub width: i32,
    pub height: i32,
    pub obstacles: usize,
}

impl From<&Scenario> for ScenarioMeta {
    fn from(s: &Scenario) -> Self {
        Self {
            name: s.name.clone(),
            seed: s.seed,
            width: s.map.width(),
            height: s.map.height(),
            obstacles: s.map.obstacles().len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model_id: String,
    pub results: Vec<CriterionResult>,
}

/// One manual correction to an automated verdict. Without `scenario` it
/// applies to any report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictOverride {
    pub model_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    pub criterion: u8,
    pub verdict: Verdict,
    #[serde(default)]
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scenario: ScenarioMeta,
    pub rows: Vec<ReportRow>,
}

fn cell(r: &CriterionResult) -> String {
    let base = match r.verdict {
        Verdict::Pass => "✓",
        Verdict::FormatError => "Format",
        Verdict::SemanticError => "Semantic",
        Verdict::ProviderError => "Provider",
    };
    if r.overridden {
        format!("{base}*")
    } else {
        base.to_string()
    }
}

impl EvalReport {
    /// Rows are kept sorted by model id so output is stable across runs.
    pub fn new(scenario: &Scenario, rows: impl IntoIterator<Item = (String, [CriterionResult; 5])>) -> Self {
        let mut rows: Vec<ReportRow> = rows
            .into_iter()
            .map(|(model_id, results)| ReportRow {
                model_id,
                results: results.to_vec(),
            })
            .collect();
        rows.sort_by(|a, b| a.model_id.cmp(&b.model_id));
        Self {
            scenario: scenario.into(),
            rows,
        }
    }

    pub fn row(&self, model_id: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.model_id == model_id)
    }

    /// Applies overrides; returns the ones that matched no row.
    pub fn apply_overrides(&mut self, overrides: &[VerdictOverride]) -> Vec<VerdictOverride> {
        let mut unmatched = Vec::new();
        for o in overrides {
            if o.scenario.as_ref().is_some_and(|s| *s != self.scenario.name) {
                unmatched.push(o.clone());
                continue;
            }
            let target = self
                .rows
                .iter_mut()
                .find(|r| r.model_id == o.model_id)
                .and_then(|r| r.results.iter_mut().find(|c| c.id == o.criterion));
            match target {
                Some(c) => {
                    c.verdict = o.verdict;
                    c.overridden = true;
                    if !o.note.is_empty() {
                        c.detail = o.note.clone();
                    }
                }
                None => unmatched.push(o.clone()),
            }
        }
        unmatched
    }

    pub fn to_markdown(&self) -> String {
        let s = &self.scenario;
        let mut out = format!(
            "# Benchmark: {}\n\nGrid {}x{}, {} obstacles, seed {}.\n\n| Model | {} |\n|---|{}\n",
            s.name,
            s.width,
            s.height,
            s.obstacles,
            s.seed,
            CRITERIA.join(" | "),
            "---|".repeat(CRITERIA.len())
        );
        for row in &self.rows {
            let cells: Vec<String> = row.results.iter().map(cell).collect();
            out.push_str(&format!("| {} | {} |\n", row.model_id, cells.join(" | ")));
        }
        let notes: Vec<String> = self
            .rows
            .iter()
            .flat_map(|r| {
                r.results
                    .iter()
                    .filter(|c| !c.detail.is_empty())
                    .map(move |c| format!("- {} / {}: {}", r.model_id, c.id, c.detail))
            })
            .collect();
        if self.rows.iter().any(|r| r.results.iter().any(|c| c.overridden)) {
            out.push_str("\n`*` marks a manually overridden verdict.\n");
        }
        if !notes.is_empty() {
            out.push_str("\n## Details\n\n");
            out.push_str(&notes.join("\n"));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let report: EvalReport = serde_json::from_str(text)?;
        for row in &report.rows {
            let ids: Vec<u8> = row.results.iter().map(|c| c.id).collect();
            if ids != [1, 2, 3, 4, 5] {
                return Err(ScenarioError::Invalid(format!(
                    "row '{}' must hold criteria 1-5 in order",
                    row.model_id
                )));
            }
        }
        Ok(report)
    }
}

pub fn parse_overrides(text: &str) -> Result<Vec<VerdictOverride>, ScenarioError> {
    Ok(serde_json::from_str(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::synth::{corrupt_step, synthesize_transcript};
    use crate::eval::{appendix_scenario, judge};

    fn report() -> EvalReport {
        let s = appendix_scenario();
        let good = judge(&synthesize_transcript(&s), &s);
        let bad = judge(&corrupt_step(synthesize_transcript(&s), 3), &s);
        EvalReport::new(&s, [("zeta".to_string(), good), ("alpha".to_string(), bad)])
    }

    #[test]
    fn markdown_row_order_and_cells() {
        let md = report().to_markdown();
        let alpha = md.find("| alpha | ✓ | Format | ✓ | ✓ | ✓ |").unwrap();
        let zeta = md.find("| zeta | ✓ | ✓ | ✓ | ✓ | ✓ |").unwrap();
        assert!(alpha < zeta);
        assert!(md.contains("| Model | Map correctly understood |"));
    }

    #[test]
    fn json_round_trip() {
        let r = report();
        assert_eq!(EvalReport::from_json(&r.to_json()).unwrap(), r);
    }

    #[test]
    fn rejects_short_rows() {
        let mut r = report();
        r.rows[0].results.pop();
        assert!(EvalReport::from_json(&r.to_json()).is_err());
    }

    #[test]
    fn overrides_are_marked() {
        let mut r = report();
        let text = r#"[{"model_id":"alpha","criterion":2,"verdict":"pass","note":"brace dropped by transport"},
                      {"model_id":"nobody","criterion":1,"verdict":"pass"},
                      {"model_id":"zeta","scenario":"seed1-20x20-3","criterion":1,"verdict":"format_error"}]"#;
        let unmatched = r.apply_overrides(&parse_overrides(text).unwrap());
        assert_eq!(unmatched.len(), 2);
        assert!(!r.row("zeta").unwrap().results[0].overridden);
        let c = &r.row("alpha").unwrap().results[1];
        assert!(c.overridden && c.verdict == Verdict::Pass);
        assert!(r.to_markdown().contains("| alpha | ✓ | ✓* |"));
        assert_eq!(EvalReport::from_json(&r.to_json()).unwrap(), r);
    }
}
