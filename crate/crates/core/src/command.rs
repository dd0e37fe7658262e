//! Drone command vocabulary, path compilation and grid simulation.
//!
//! Axis convention: x grows to the right, y grows upward. Turning from +x to
//! +y is a left turn.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::FlightPath;
use crate::map::{rasterize, GridCoord, GridMap, OccupancyGrid};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CommandError {
    #[error("path has {0} waypoint(s); at least 2 are required")]
    DegeneratePath(usize),
    #[error("path step {from} -> {to} is not a single 4-connected move")]
    NotFourConnected { from: GridCoord, to: GridCoord },
    #[error("collision or escape at {0}")]
    CollisionOrEscape(GridCoord),
    #[error("malformed command sequence: {0}")]
    MalformedSequence(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "action", content = "cells")]
pub enum Command {
    PreFlightCheck,
    Takeoff,
    Hover,
    FlyForward(u32),
    TurnLeft,
    TurnRight,
    TurnAround,
    Land,
    PostFlightCheck,
}

impl Command {
    pub fn is_turn(self) -> bool {
        matches!(self, Command::TurnLeft | Command::TurnRight | Command::TurnAround)
    }
}

/// Renders the line grammar used for LLM replies (`forward 3`, `left`, ...).
impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::PreFlightCheck => f.write_str("preflight"),
            Command::Takeoff => f.write_str("takeoff"),
            Command::Hover => f.write_str("hover"),
            Command::FlyForward(n) => write!(f, "forward {n}"),
            Command::TurnLeft => f.write_str("left"),
            Command::TurnRight => f.write_str("right"),
            Command::TurnAround => f.write_str("around"),
            Command::Land => f.write_str("land"),
            Command::PostFlightCheck => f.write_str("postflight"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Heading {
    #[serde(rename = "+x")]
    PosX,
    #[serde(rename = "-x")]
    NegX,
    #[serde(rename = "+y")]
    PosY,
    #[serde(rename = "-y")]
    NegY,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::PosX, Heading::NegX, Heading::PosY, Heading::NegY];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Heading::PosX => (1, 0),
            Heading::NegX => (-1, 0),
            Heading::PosY => (0, 1),
            Heading::NegY => (0, -1),
        }
    }

    pub fn from_step(from: GridCoord, to: GridCoord) -> Option<Heading> {
        match (to.x - from.x, to.y - from.y) {
            (1, 0) => Some(Heading::PosX),
            (-1, 0) => Some(Heading::NegX),
            (0, 1) => Some(Heading::PosY),
            (0, -1) => Some(Heading::NegY),
            _ => None,
        }
    }

    pub fn left(self) -> Heading {
        match self {
            Heading::PosX => Heading::PosY,
            Heading::PosY => Heading::NegX,
            Heading::NegX => Heading::NegY,
            Heading::NegY => Heading::PosX,
        }
    }

    pub fn right(self) -> Heading {
        self.left().left().left()
    }

    pub fn reverse(self) -> Heading {
        self.left().left()
    }

    /// Turn needed to go from `self` to `next`, or `None` when already aligned.
    pub fn turn_to(self, next: Heading) -> Option<Command> {
        let (ax, ay) = self.delta();
        let (bx, by) = next.delta();
        let cross = ax * by - ay * bx;
        let dot = ax * bx + ay * by;
        match (cross, dot) {
            (0, 1) => None,
            (0, _) => Some(Command::TurnAround),
            (c, _) if c > 0 => Some(Command::TurnLeft),
            _ => Some(Command::TurnRight),
        }
    }

    /// Heading after a turn command; other commands leave it unchanged.
    pub fn apply(self, turn: Command) -> Heading {
        match turn {
            Command::TurnLeft => self.left(),
            Command::TurnRight => self.right(),
            Command::TurnAround => self.reverse(),
            _ => self,
        }
    }
}

pub const OPENING: [Command; 3] = [Command::PreFlightCheck, Command::Takeoff, Command::Hover];
pub const CLOSING: [Command; 3] = [Command::Hover, Command::Land, Command::PostFlightCheck];

/// Commands plus the heading the airframe faces when it starts moving.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct CommandSequence {
    pub initial_heading: Option<Heading>,
    pub commands: Vec<Command>,
}

impl CommandSequence {
    pub fn forward_total(&self) -> u64 {
        self.commands
            .iter()
            .map(|c| match c {
                Command::FlyForward(n) => *n as u64,
                _ => 0,
            })
            .sum()
    }

    pub fn turn_count(&self) -> usize {
        self.commands.iter().filter(|c| c.is_turn()).count()
    }

    pub fn forward_runs(&self) -> usize {
        self.commands
            .iter()
            .filter(|c| matches!(c, Command::FlyForward(_)))
            .count()
    }

    /// One command per line in the reply grammar.
    pub fn to_text(&self) -> String {
        self.commands
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompileOptions {
    pub hover_before_turns: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self {
            hover_before_turns: true,
        }
    }
}

/// Counts direction changes along a 4-connected waypoint list.
pub fn heading_changes(waypoints: &[GridCoord]) -> usize {
    let headings: Vec<_> = waypoints
        .windows(2)
        .filter_map(|w| Heading::from_step(w[0], w[1]))
        .collect();
    headings.windows(2).filter(|h| h[0] != h[1]).count()
}

pub fn compile_commands(path: &FlightPath, opts: CompileOptions) -> Result<CommandSequence, CommandError> {
    compile_waypoints(&path.waypoints, opts)
}

pub fn compile_waypoints(waypoints: &[GridCoord], opts: CompileOptions) -> Result<CommandSequence, CommandError> {
    if waypoints.len() < 2 {
        return Err(CommandError::DegeneratePath(waypoints.len()));
    }
    let mut headings = Vec::with_capacity(waypoints.len() - 1);
    for w in waypoints.windows(2) {
        let h = Heading::from_step(w[0], w[1]).ok_or(CommandError::NotFourConnected { from: w[0], to: w[1] })?;
        headings.push(h);
    }

    let mut commands = OPENING.to_vec();
    let mut current = headings[0];
    let mut run = 0u32;
    for &h in &headings {
        if let Some(turn) = current.turn_to(h) {
            commands.push(Command::FlyForward(run));
            if opts.hover_before_turns {
                commands.push(Command::Hover);
            }
            commands.push(turn);
            current = h;
            run = 0;
        }
        run += 1;
    }
    commands.push(Command::FlyForward(run));
    commands.extend(CLOSING);
    Ok(CommandSequence {
        initial_heading: Some(headings[0]),
        commands,
    })
}

fn check_opening(commands: &[Command]) -> Result<(), CommandError> {
    if !commands.starts_with(&OPENING) {
        return Err(CommandError::MalformedSequence(
            "sequence must open with preflight, takeoff, hover".into(),
        ));
    }
    Ok(())
}

fn check_closing(commands: &[Command]) -> Result<(), CommandError> {
    if commands.len() < OPENING.len() + CLOSING.len() || !commands.ends_with(&CLOSING) {
        return Err(CommandError::MalformedSequence(
            "sequence must close with hover, land, postflight".into(),
        ));
    }
    Ok(())
}

/// Runs movement commands from `start`, returning every visited cell.
///
/// Framing verbs are only checked for order: nothing moves before `takeoff`
/// or after `land`. Pass/fail on framing shape is left to the callers.
pub fn trace(
    commands: &[Command],
    initial_heading: Option<Heading>,
    start: GridCoord,
    grid: &OccupancyGrid,
) -> Result<Vec<GridCoord>, CommandError> {
    if grid.is_blocked(start) {
        return Err(CommandError::CollisionOrEscape(start));
    }
    let mut heading = initial_heading;
    let mut airborne = false;
    let mut landed = false;
    let mut cell = start;
    let mut visited = vec![start];
    for &cmd in commands {
        match cmd {
            Command::Takeoff => {
                if airborne || landed {
                    return Err(CommandError::MalformedSequence("takeoff while not on the ground".into()));
                }
                airborne = true;
            }
            Command::Land => {
                if !airborne {
                    return Err(CommandError::MalformedSequence("land before takeoff".into()));
                }
                airborne = false;
                landed = true;
            }
            Command::PreFlightCheck | Command::PostFlightCheck | Command::Hover => {}
            Command::TurnLeft | Command::TurnRight | Command::TurnAround => {
                let h = heading.ok_or_else(|| {
                    CommandError::MalformedSequence("turn before any heading is established".into())
                })?;
                heading = Some(h.apply(cmd));
            }
            Command::FlyForward(n) => {
                if !airborne {
                    return Err(CommandError::MalformedSequence("forward while not airborne".into()));
                }
                if n == 0 {
                    return Err(CommandError::MalformedSequence("forward 0".into()));
                }
                let h = heading
                    .ok_or_else(|| CommandError::MalformedSequence("forward without a heading".into()))?;
                let (dx, dy) = h.delta();
                for _ in 0..n {
                    cell = GridCoord::new(cell.x + dx, cell.y + dy);
                    if grid.is_blocked(cell) {
                        return Err(CommandError::CollisionOrEscape(cell));
                    }
                    visited.push(cell);
                }
            }
        }
    }
    Ok(visited)
}

/// Executes a complete, framed sequence on the map.
pub fn simulate_commands(seq: &CommandSequence, start: GridCoord, map: &GridMap) -> Result<Vec<GridCoord>, CommandError> {
    check_opening(&seq.commands)?;
    check_closing(&seq.commands)?;
    trace(&seq.commands, seq.initial_heading, start, &rasterize(map))
}

/// Executes a sequence that may still be in flight (opening framing only).
pub fn replay_partial(seq: &CommandSequence, start: GridCoord, map: &GridMap) -> Result<Vec<GridCoord>, CommandError> {
    if seq.commands.is_empty() {
        return Ok(vec![start]);
    }
    check_opening(&seq.commands)?;
    trace(&seq.commands, seq.initial_heading, start, &rasterize(map))
}

fn parse_line(line: &str) -> Option<Command> {
    let mut s = line.trim().to_ascii_lowercase();
    // list markers and emphasis
    s = s
        .trim_start_matches(|c: char| c.is_ascii_digit() || matches!(c, '.' | ')' | '-' | '*' | '#' | '>' | ' ' | '`'))
        .trim_end_matches(['.', ',', ';', '!', '*', '`', ' '])
        .to_string();
    let words: Vec<&str> = s.split_whitespace().collect();
    let cmd = match words.as_slice() {
        ["preflight"] | ["pre-flight"] | ["preflight", "check"] | ["pre-flight", "check"] => Command::PreFlightCheck,
        ["takeoff"] | ["take", "off"] | ["take-off"] => Command::Takeoff,
        ["hover"] => Command::Hover,
        ["forward", n] | ["fly", "forward", n] => Command::FlyForward(n.parse().ok()?),
        ["left"] | ["turn", "left"] => Command::TurnLeft,
        ["right"] | ["turn", "right"] => Command::TurnRight,
        ["around"] | ["turn", "around"] => Command::TurnAround,
        ["land"] => Command::Land,
        ["postflight"] | ["post-flight"] | ["postflight", "check"] | ["post-flight", "check"] => Command::PostFlightCheck,
        _ => return None,
    };
    Some(cmd)
}

/// Extracts the longest contiguous block of command lines from free text.
///
/// Blank lines do not break a block; any other non-command line does. Ties go
/// to the earliest block. Returns `None` when no command line is present.
pub fn parse_command_text(text: &str) -> Option<Vec<Command>> {
    let mut best: Vec<Command> = Vec::new();
    let mut current: Vec<Command> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(line) {
            Some(cmd) => current.push(cmd),
            None => {
                if current.len() > best.len() {
                    best = std::mem::take(&mut current);
                } else {
                    current.clear();
                }
            }
        }
    }
    if current.len() > best.len() {
        best = current;
    }
    (!best.is_empty()).then_some(best)
}
