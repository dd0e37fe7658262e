use std::fmt::Write as _;
use std::path::Path;

use ctxnav_core::placement::{assign, memory_feasible, PlacementConfig, PlacementReport};

use crate::error::{input, write, CliError};

pub fn load_config(spec: &str) -> Result<PlacementConfig, CliError> {
    if spec == "defaults" {
        return Ok(PlacementConfig::shipped_default());
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path).map_err(|e| input(path, e))?;
    PlacementConfig::parse(&text).map_err(|e| input(path, e))
}

/// Which tiers can hold each model's weights: `yes`, `no`, or `?` when the
/// size is unpublished.
pub fn feasibility_markdown(cfg: &PlacementConfig) -> String {
    let mut nodes: Vec<_> = cfg.nodes.iter().collect();
    nodes.sort_by_key(|n| n.tier);
    let mut out = String::from("| Model | Params (B) |");
    for n in &nodes {
        let _ = write!(out, " {} ({} GB) |", n.tier, n.memory_gb);
    }
    out.push_str("\n|---|---|");
    out.push_str(&"---|".repeat(nodes.len()));
    out.push('\n');
    for m in &cfg.models {
        let size = m.params.map_or("?".to_string(), |p| p.to_string());
        let _ = write!(out, "| {} | {size} |", m.name);
        for n in &nodes {
            let cell = match memory_feasible(m, n, cfg.bytes_per_param) {
                Ok(true) => "yes",
                Ok(false) => "no",
                Err(_) => "?",
            };
            let _ = write!(out, " {cell} |");
        }
        out.push('\n');
    }
    out
}

pub fn render(cfg: &PlacementConfig, report: &PlacementReport) -> String {
    format!(
        "# Placement\n\n## Memory feasibility ({} bytes/param)\n\n{}\n## Task placement\n\n{}",
        cfg.bytes_per_param,
        feasibility_markdown(cfg),
        report.to_markdown()
    )
}

pub fn run(config: &str, json: bool, out: Option<&Path>) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let report = assign(&cfg.models, &cfg.tasks, &cfg.topology(), cfg.bytes_per_param);
    let md = render(&cfg, &report);
    let js = report.to_json() + "\n";
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Internal(format!("creating {}: {e}", dir.display())))?;
        write(&dir.join("placement.md"), &md)?;
        write(&dir.join("placement.json"), &js)?;
    }
    print!("{}", if json { js } else { md });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_feasibility_rows() {
        let md = feasibility_markdown(&load_config("defaults").unwrap());
        assert!(md.contains("| Llama3:8b | 8 | no | yes | yes |"), "{md}");
        assert!(md.contains("| Llama3:70b | 70 | no | no | yes |"), "{md}");
        assert!(md.contains("| Moonshot v1-8k | ? | ? | ? | ? |"), "{md}");
    }

    #[test]
    fn missing_config_is_input_error() {
        assert_eq!(load_config("/nonexistent.toml").unwrap_err().exit_code(), crate::error::EX_DATAERR);
    }
}
