//! Human-language mission briefing generated from a compiled flight.

use std::fmt::Write;

use crate::command::{Command, CommandSequence};
use crate::field::FlightPath;
use crate::map::GridCoord;

fn coord_list(waypoints: &[GridCoord]) -> String {
    let items: Vec<String> = waypoints.iter().map(|c| c.to_string()).collect();
    format!("[{}]", items.join(", "))
}

/// Ten-step briefing: checks, departure, waypoint legs, arrival and checks.
pub fn narrate(seq: &CommandSequence, path: &FlightPath) -> String {
    let start = path.start().unwrap_or(GridCoord::new(0, 0));
    let end = path.end().unwrap_or(GridCoord::new(0, 0));
    let first_leg = path.waypoints.get(1).copied().unwrap_or(end);
    let legs = seq.forward_runs();
    let turns = seq.turn_count();
    let hover_turns = seq
        .commands
        .windows(2)
        .filter(|w| w[0] == Command::Hover && w[1].is_turn())
        .count();

    let mut out = String::new();
    let _ = writeln!(
        out,
        "Mission briefing: {} waypoints from {start} to {end}, {legs} straight leg(s), {turns} turn(s).",
        path.waypoints.len()
    );
    let steps = [
        ("Pre-Flight Check", "Inspect the airframe, battery, propellers and links on the ground at the departure cell; do not start the motors until everything reports ready.".to_string()),
        ("Takeoff", format!("Start the takeoff at {start} and climb vertically to the working altitude.")),
        ("Hover", format!("Hold position over {start} until the aircraft is stable and ready to proceed.")),
        ("Navigate to First Waypoint", format!("Fly forward to {first_leg}, keeping altitude steady and watching for traffic.")),
        ("Sequential Waypoints", format!("Follow the waypoints {} one cell at a time, flying forward along each straight leg and turning at each corner; altitude is held constant.", coord_list(&path.waypoints))),
        ("Avoid Obstacles", "Keep scanning around the aircraft and correct the track if anything blocks the next cell, then rejoin the route.".to_string()),
        ("Hover Before Turns", format!("Pause in a hover before each of the {hover_turns} planned direction change(s) to confirm the next leg is clear.")),
        ("Final Approach", format!("Slow down as {end} comes up and get ready to descend.")),
        ("Land", format!("Descend gently and touch down at {end}.")),
        ("Post-Flight", "Stop the motors, inspect the aircraft for damage and log the flight.".to_string()),
    ];
    for (i, (title, body)) in steps.iter().enumerate() {
        let _ = writeln!(out, "{}. {title}: {body}", i + 1);
    }
    out
}
