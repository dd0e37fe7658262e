use std::fmt::Write as _;
use std::path::Path;

use ctxnav_core::command::{compile_commands, CompileOptions};
use ctxnav_core::field::{build_cost_field, plan_astar, ContextZone, PlanError};
use ctxnav_core::map::{parse_map, render_ascii, GridMap};
use ctxnav_core::narrate::narrate;
use ctxnav_service::interpret_deterministic;

use crate::error::{input, CliError};

pub fn run(map_path: &Path, contexts: &[String], ascii: bool) -> Result<(), CliError> {
    let text = std::fs::read_to_string(map_path).map_err(|e| input(map_path, e))?;
    let map = parse_map(&text).map_err(|e| input(map_path, e))?;
    print!("{}", render_plan(&map, contexts, ascii)?);
    Ok(())
}

pub fn render_plan(map: &GridMap, contexts: &[String], ascii: bool) -> Result<String, CliError> {
    let mut zones: Vec<ContextZone> = Vec::new();
    for u in contexts {
        let found = interpret_deterministic(u, map).map_err(|e| CliError::Input(format!("context '{u}': {e}")))?;
        zones.extend(found);
    }
    let field = build_cost_field(map, &zones);
    let path = plan_astar(&field, map.start(), map.end()).map_err(|e| match e {
        PlanError::NoPath { .. } => CliError::NoPath(e.to_string()),
        other => CliError::Input(other.to_string()),
    })?;
    let seq = compile_commands(&path, CompileOptions::default()).map_err(|e| CliError::Internal(e.to_string()))?;

    let mut out = String::new();
    let _ = writeln!(out, "Total cost: {}", path.total_cost);
    let _ = writeln!(out, "Waypoints ({}):", path.waypoints.len());
    let cells: Vec<String> = path.waypoints.iter().map(|c| c.to_string()).collect();
    let _ = writeln!(out, "{}", cells.join(" -> "));
    if !zones.is_empty() {
        let _ = writeln!(out, "\nContext zones:");
        for z in &zones {
            let (x1, y1, x2, y2) = z.rect();
            let mode = if z.is_hard() { "avoid" } else { "penalized" };
            let _ = writeln!(out, "- {} ({x1}, {y1})-({x2}, {y2}) {mode}", z.source_label);
        }
    }
    let _ = writeln!(out, "\nCommands:\n{}", seq.to_text());
    let _ = writeln!(out, "\nBriefing:\n{}", narrate(&seq, &path));
    if ascii {
        let view = map
            .with_obstacles(zones.iter().map(|z| z.to_obstacle()))
            .unwrap_or_else(|_| map.clone());
        let _ = writeln!(out, "\n{}", render_ascii(&view, Some(&path.waypoints)).trim_end());
    }
    Ok(out)
}
