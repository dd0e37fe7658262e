//! Memory feasibility and latency model for placing language models on
//! RU / DU / CU tiers of a radio access network.

use std::fmt::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_CONFIG: &str = include_str!("../config/placement.toml");

#[derive(Debug, Error)]
pub enum PlacementError {
    #[error("model '{0}' has no published parameter count")]
    UnknownSize(String),
    #[error("invalid placement config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Tier {
    RU,
    DU,
    CU,
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::RU => "RU",
            Tier::DU => "DU",
            Tier::CU => "CU",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProfile {
    pub name: String,
    /// Parameter count in billions; absent when unpublished.
    #[serde(default, rename = "params_b")]
    pub params: Option<f64>,
    pub context_tokens: u64,
    pub nation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierNode {
    pub tier: Tier,
    pub memory_gb: f64,
    /// Prompt tokens per second per billion parameters.
    pub prefill_rate: f64,
    /// Generated tokens per second per billion parameters.
    pub decode_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskClass {
    pub name: String,
    pub prompt_tokens: u64,
    pub output_tokens: u64,
    /// Seconds.
    pub latency_budget: f64,
}

/// Round-trip times in seconds for each hop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkLatency {
    pub ue_ru: f64,
    pub ru_du: f64,
    pub du_cu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub nodes: Vec<TierNode>,
    pub links: LinkLatency,
}

impl Topology {
    /// Sum of hop RTTs from the user equipment to `tier`.
    pub fn network_rtt(&self, tier: Tier) -> f64 {
        let l = &self.links;
        match tier {
            Tier::RU => l.ue_ru,
            Tier::DU => l.ue_ru + l.ru_du,
            Tier::CU => l.ue_ru + l.ru_du + l.du_cu,
        }
    }

    pub fn node(&self, tier: Tier) -> Option<&TierNode> {
        self.nodes.iter().find(|n| n.tier == tier)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementConfig {
    #[serde(default = "default_bytes_per_param")]
    pub bytes_per_param: f64,
    pub links: LinkLatency,
    pub nodes: Vec<TierNode>,
    #[serde(default)]
    pub tasks: Vec<TaskClass>,
    #[serde(default)]
    pub models: Vec<ModelProfile>,
}

fn default_bytes_per_param() -> f64 {
    2.0
}

impl PlacementConfig {
    pub fn parse(text: &str) -> Result<Self, PlacementError> {
        let cfg: PlacementConfig = toml::from_str(text).map_err(|e| PlacementError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn shipped_default() -> Self {
        Self::parse(DEFAULT_CONFIG).expect("shipped placement config is valid")
    }

    pub fn topology(&self) -> Topology {
        Topology {
            nodes: self.nodes.clone(),
            links: self.links,
        }
    }

    fn validate(&self) -> Result<(), PlacementError> {
        let bad = |m: String| Err(PlacementError::Config(m));
        if self.bytes_per_param <= 0.0 {
            return bad("bytes_per_param must be positive".into());
        }
        let l = self.links;
        if [l.ue_ru, l.ru_du, l.du_cu].iter().any(|v| v.is_nan() || *v < 0.0) {
            return bad("link latencies must be non-negative".into());
        }
        for n in &self.nodes {
            if !(n.memory_gb > 0.0 && n.prefill_rate > 0.0 && n.decode_rate > 0.0) {
                return bad(format!("node {} needs positive memory and rates", n.tier));
            }
        }
        for t in &self.tasks {
            if t.latency_budget.is_nan() || t.latency_budget <= 0.0 {
                return bad(format!("task {} needs a positive budget", t.name));
            }
        }
        for m in &self.models {
            if m.params.is_some_and(|p| p.is_nan() || p <= 0.0) {
                return bad(format!("model {} has a non-positive size", m.name));
            }
            if m.context_tokens == 0 {
                return bad(format!("model {} has zero context tokens", m.name));
            }
        }
        Ok(())
    }
}

fn known_params(model: &ModelProfile) -> Result<f64, PlacementError> {
    model.params.ok_or_else(|| PlacementError::UnknownSize(model.name.clone()))
}

/// Weights fit when `params * bytes_per_param` (GB) does not exceed node memory.
pub fn memory_feasible(model: &ModelProfile, node: &TierNode, bytes_per_param: f64) -> Result<bool, PlacementError> {
    Ok(known_params(model)? * bytes_per_param <= node.memory_gb)
}

pub fn estimate_latency(
    model: &ModelProfile,
    node: &TierNode,
    task: &TaskClass,
    topo: &Topology,
) -> Result<f64, PlacementError> {
    let params = known_params(model)?;
    Ok(topo.network_rtt(node.tier)
        + task.prompt_tokens as f64 * params / node.prefill_rate
        + task.output_tokens as f64 * params / node.decode_rate)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum PlacementOutcome {
    Placed { tier: Tier, latency: f64, margin: f64 },
    /// No tier meets the budget; `best` is the fastest memory-feasible tier, if any.
    Unplaceable { best: Option<TierLatency> },
    Unassessable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierLatency {
    pub tier: Tier,
    pub latency: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementEntry {
    pub model: String,
    pub task: String,
    pub budget: f64,
    #[serde(flatten)]
    pub outcome: PlacementOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct PlacementReport {
    pub entries: Vec<PlacementEntry>,
}

/// Picks, for every (model, task), the lowest-latency memory-feasible tier
/// that meets the task budget.
pub fn assign(models: &[ModelProfile], tasks: &[TaskClass], topo: &Topology, bytes_per_param: f64) -> PlacementReport {
    let mut entries = Vec::new();
    for model in models {
        for task in tasks {
            let outcome = if model.params.is_none() {
                PlacementOutcome::Unassessable
            } else {
                let mut best: Option<TierLatency> = None;
                let mut tiers: Vec<&TierNode> = topo.nodes.iter().collect();
                tiers.sort_by_key(|n| n.tier);
                for node in tiers {
                    if !memory_feasible(model, node, bytes_per_param).unwrap_or(false) {
                        continue;
                    }
                    let latency = estimate_latency(model, node, task, topo).expect("size checked above");
                    if best.as_ref().is_none_or(|b| latency < b.latency) {
                        best = Some(TierLatency {
                            tier: node.tier,
                            latency,
                            margin: task.latency_budget - latency,
                        });
                    }
                }
                match best {
                    Some(b) if b.margin >= 0.0 => PlacementOutcome::Placed {
                        tier: b.tier,
                        latency: b.latency,
                        margin: b.margin,
                    },
                    other => PlacementOutcome::Unplaceable { best: other },
                }
            };
            entries.push(PlacementEntry {
                model: model.name.clone(),
                task: task.name.clone(),
                budget: task.latency_budget,
                outcome,
            });
        }
    }
    PlacementReport { entries }
}

impl PlacementReport {
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| Model | Task | Budget (s) | Tier | Latency (s) | Margin (s) |\n");
        out.push_str("|---|---|---|---|---|---|\n");
        for e in &self.entries {
            let (tier, latency, margin) = match &e.outcome {
                PlacementOutcome::Placed { tier, latency, margin } => {
                    (tier.to_string(), format!("{latency:.4}"), format!("{margin:.4}"))
                }
                PlacementOutcome::Unplaceable { best: Some(b) } => (
                    format!("unplaceable ({} over budget)", b.tier),
                    format!("{:.4}", b.latency),
                    format!("{:.4}", b.margin),
                ),
                PlacementOutcome::Unplaceable { best: None } => {
                    ("unplaceable (no tier fits)".into(), "-".into(), "-".into())
                }
                PlacementOutcome::Unassessable => ("unassessable (size unknown)".into(), "-".into(), "-".into()),
            };
            let _ = writeln!(
                out,
                "| {} | {} | {} | {tier} | {latency} | {margin} |",
                e.model, e.task, e.budget
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn find(&self, model: &str, task: &str) -> Option<&PlacementEntry> {
        self.entries.iter().find(|e| e.model == model && e.task == task)
    }
}
