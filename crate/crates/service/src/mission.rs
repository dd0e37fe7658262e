//! Mission state and the simulated flight runtime. Everything here is
//! synchronous and operates on owned values; locking lives in the store.

use std::time::{SystemTime, UNIX_EPOCH};

use ctxnav_core::command::{Command, CommandSequence, Heading, CLOSING, OPENING};
use ctxnav_core::field::{build_cost_field, plan_astar, ContextZone, CostField, FlightPath, PlanError};
use ctxnav_core::map::{GridCoord, GridMap};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::interpret::InterpretError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MissionError {
    #[error("mission '{0}' not found")]
    MissionNotFound(String),
    #[error("mission has already landed")]
    AlreadyLanded,
    #[error("mission was aborted")]
    MissionAborted,
    #[error("no path: {0}")]
    NoPath(String),
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error(transparent)]
    InterpretationFailed(#[from] InterpretError),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl MissionError {
    /// Stable name used in the HTTP error envelope.
    pub fn code(&self) -> &'static str {
        match self {
            MissionError::MissionNotFound(_) => "MissionNotFound",
            MissionError::AlreadyLanded => "AlreadyLanded",
            MissionError::MissionAborted => "MissionAborted",
            MissionError::NoPath(_) => "NoPath",
            MissionError::InvalidMap(_) => "InvalidMap",
            MissionError::InterpretationFailed(_) => "InterpretationFailed",
            MissionError::InvalidRequest(_) => "InvalidRequest",
            MissionError::Internal(_) => "Internal",
        }
    }
}

impl From<PlanError> for MissionError {
    fn from(e: PlanError) -> Self {
        MissionError::NoPath(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Planned,
    Airborne,
    Landed,
    Aborted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Created,
    Takeoff,
    Moved,
    Landed,
    ContextApplied,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionEvent {
    /// 1-based, gapless per mission.
    pub seq: u64,
    /// Milliseconds since the Unix epoch; never decreases within a mission.
    pub timestamp_ms: u64,
    pub kind: EventKind,
    pub payload: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionState {
    pub mission_id: String,
    pub map: GridMap,
    pub zones: Vec<ContextZone>,
    pub current_cell: GridCoord,
    pub remaining_path: FlightPath,
    pub command_log: CommandSequence,
    pub phase: Phase,
    pub event_log: Vec<MissionEvent>,
    /// Heading after the last executed command; `None` before the first move.
    pub heading: Option<Heading>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl MissionState {
    pub fn create(mission_id: String, map: GridMap) -> Result<Self, MissionError> {
        let field = build_cost_field(&map, &[]);
        let path = plan_astar(&field, map.start(), map.end())?;
        let mut state = Self {
            mission_id,
            current_cell: map.start(),
            map,
            zones: Vec::new(),
            remaining_path: path,
            command_log: CommandSequence::default(),
            phase: Phase::Planned,
            event_log: Vec::new(),
            heading: None,
        };
        state.push_event(
            EventKind::Created,
            json!({"total_cost": state.remaining_path.total_cost, "waypoints": state.remaining_path.waypoints.len()}),
        );
        Ok(state)
    }

    pub fn last_seq(&self) -> u64 {
        self.event_log.last().map_or(0, |e| e.seq)
    }

    pub fn events_since(&self, since: u64) -> &[MissionEvent] {
        // seq is 1-based and gapless, so seq n sits at index n-1
        let start = (since as usize).min(self.event_log.len());
        &self.event_log[start..]
    }

    pub fn cost_field(&self) -> CostField {
        build_cost_field(&self.map, &self.zones)
    }

    fn push_event(&mut self, kind: EventKind, payload: serde_json::Value) {
        let last = self.event_log.last().map_or(0, |e| e.timestamp_ms);
        self.event_log.push(MissionEvent {
            seq: self.last_seq() + 1,
            timestamp_ms: now_ms().max(last),
            kind,
            payload,
        });
    }

    fn ensure_open(&self) -> Result<(), MissionError> {
        match self.phase {
            Phase::Planned | Phase::Airborne => Ok(()),
            Phase::Landed => Err(MissionError::AlreadyLanded),
            Phase::Aborted => Err(MissionError::MissionAborted),
        }
    }

    /// First call takes off; each later call flies one waypoint. Reaching the
    /// end appends the landing framing.
    pub fn step(&mut self) -> Result<(), MissionError> {
        self.ensure_open()?;
        if self.phase == Phase::Planned {
            self.command_log.commands.extend(OPENING);
            self.phase = Phase::Airborne;
            self.push_event(EventKind::Takeoff, json!({"cell": self.current_cell}));
            return Ok(());
        }

        let next = *self
            .remaining_path
            .waypoints
            .get(1)
            .ok_or_else(|| MissionError::Internal("airborne with no remaining waypoint".into()))?;
        let dir = Heading::from_step(self.current_cell, next)
            .ok_or_else(|| MissionError::Internal(format!("{} -> {next} is not a unit move", self.current_cell)))?;
        self.append_move(dir);

        let field = self.cost_field();
        self.current_cell = next;
        self.remaining_path = FlightPath::new(self.remaining_path.waypoints[1..].to_vec(), &field);
        self.push_event(
            EventKind::Moved,
            json!({"cell": next, "remaining_cost": self.remaining_path.total_cost}),
        );

        if self.current_cell == self.map.end() {
            self.command_log.commands.extend(CLOSING);
            self.phase = Phase::Landed;
            self.push_event(EventKind::Landed, json!({"cell": next}));
        }
        Ok(())
    }

    /// Same shape as whole-path compilation: runs merge, a hover precedes
    /// every turn.
    fn append_move(&mut self, dir: Heading) {
        let log = &mut self.command_log;
        match self.heading {
            None => {
                log.initial_heading = Some(dir);
                log.commands.push(Command::FlyForward(1));
            }
            Some(h) => match h.turn_to(dir) {
                None => match log.commands.last_mut() {
                    Some(Command::FlyForward(n)) => *n += 1,
                    _ => log.commands.push(Command::FlyForward(1)),
                },
                Some(turn) => {
                    log.commands.push(Command::Hover);
                    log.commands.push(turn);
                    log.commands.push(Command::FlyForward(1));
                }
            },
        }
        self.heading = Some(dir);
    }

    /// Adds zones and re-plans from the current cell. On `NoPath` the mission
    /// is aborted in place (landing framing appended when airborne) and the
    /// error is returned; the caller still commits the aborted state.
    pub fn apply_zones(&mut self, utterance: &str, new_zones: Vec<ContextZone>) -> Result<(), MissionError> {
        self.ensure_open()?;
        let mut zones = self.zones.clone();
        zones.extend(new_zones.iter().cloned());
        // The occupied cell is never charged, so a zone declared on top of the
        // drone still lets it leave by the cheapest exit.
        let field = build_cost_field(&self.map, &zones);
        match plan_astar(&field, self.current_cell, self.map.end()) {
            Ok(path) => {
                self.zones = zones;
                self.remaining_path = path;
                self.push_event(
                    EventKind::ContextApplied,
                    json!({
                        "utterance": utterance,
                        "zones": new_zones,
                        "total_cost": self.remaining_path.total_cost,
                    }),
                );
                Ok(())
            }
            Err(e) => {
                self.zones = zones;
                self.remaining_path = FlightPath {
                    waypoints: vec![self.current_cell],
                    total_cost: 0.0,
                };
                if self.phase == Phase::Airborne {
                    self.command_log.commands.extend(CLOSING);
                }
                self.phase = Phase::Aborted;
                self.push_event(
                    EventKind::Aborted,
                    json!({"utterance": utterance, "zones": new_zones, "reason": e.to_string()}),
                );
                Err(e.into())
            }
        }
    }

    /// Cells flown so far, starting at the original start.
    pub fn visited(&self) -> Vec<GridCoord> {
        let mut cells = vec![self.map.start()];
        let mut cell = self.map.start();
        let mut heading = self.command_log.initial_heading;
        for cmd in &self.command_log.commands {
            match *cmd {
                Command::TurnLeft | Command::TurnRight | Command::TurnAround => heading = heading.map(|h| h.apply(*cmd)),
                Command::FlyForward(n) => {
                    if let Some(h) = heading {
                        let (dx, dy) = h.delta();
                        for _ in 0..n {
                            cell = GridCoord::new(cell.x + dx, cell.y + dy);
                            cells.push(cell);
                        }
                    }
                }
                _ => {}
            }
        }
        cells
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ctxnav_core::command::{compile_waypoints, replay_partial, simulate_commands, CompileOptions};
    use ctxnav_core::field::oracle_cheapest_cost;
    use ctxnav_core::map::{appendix_map, Obstacle};

    use crate::interpret::interpret_deterministic;

    fn mission() -> MissionState {
        MissionState::create("m1".into(), appendix_map()).unwrap()
    }

    #[test]
    fn appendix_mission_lands_after_38_airborne_steps() {
        let mut m = mission();
        assert_eq!(m.remaining_path.total_cost, 38.0);
        m.step().unwrap();
        assert_eq!(m.phase, Phase::Airborne);
        let mut airborne = 0;
        while m.phase == Phase::Airborne {
            m.step().unwrap();
            airborne += 1;
        }
        assert_eq!(airborne, 38);
        assert_eq!(m.phase, Phase::Landed);
        assert_eq!(m.step(), Err(MissionError::AlreadyLanded));
        let visited = m.visited();
        assert_eq!(simulate_commands(&m.command_log, m.map.start(), &m.map).unwrap(), visited);
        assert_eq!(m.command_log, compile_waypoints(&visited, CompileOptions::default()).unwrap());
    }

    #[test]
    fn two_waypoint_mission() {
        let map = GridMap::new(2, 2, GridCoord::new(0, 0), GridCoord::new(1, 0), vec![]).unwrap();
        let mut m = MissionState::create("m".into(), map.clone()).unwrap();
        m.step().unwrap();
        m.step().unwrap();
        assert_eq!(m.phase, Phase::Landed);
        assert_eq!(simulate_commands(&m.command_log, map.start(), &map).unwrap().len(), 2);
    }

    #[test]
    fn walled_off_end_is_no_path() {
        let map = GridMap::new(
            5,
            5,
            GridCoord::new(0, 0),
            GridCoord::new(4, 4),
            vec![Obstacle::new("wall", 0, 2, 4, 2)],
        )
        .unwrap();
        assert!(matches!(MissionState::create("m".into(), map), Err(MissionError::NoPath(_))));
    }

    #[test]
    fn replan_mid_flight_stays_optimal_and_replayable() {
        let mut m = mission();
        for _ in 0..6 {
            m.step().unwrap();
        }
        let zones = interpret_deterministic("avoid within 2 squares of school", &m.map).unwrap();
        m.apply_zones("avoid within 2 squares of school", zones).unwrap();
        let field = m.cost_field();
        assert_eq!(
            m.remaining_path.total_cost,
            oracle_cheapest_cost(&field, m.current_cell, m.map.end()).unwrap()
        );
        assert!(!m.remaining_path.waypoints.contains(&GridCoord::new(10, 7)));
        while m.phase == Phase::Airborne {
            m.step().unwrap();
            assert_eq!(replay_partial(&m.command_log, m.map.start(), &m.map).unwrap(), m.visited());
        }
        assert_eq!(simulate_commands(&m.command_log, m.map.start(), &m.map).unwrap(), m.visited());
        let last = m.event_log.iter().rev().find(|e| e.kind == EventKind::ContextApplied).unwrap();
        assert_eq!(last.payload["utterance"], "avoid within 2 squares of school");
    }

    #[test]
    fn zone_over_drone_lets_it_leave() {
        let mut m = mission();
        m.step().unwrap();
        m.step().unwrap();
        let here = m.current_cell;
        // drone sits in the zone's corner; the cells behind it stay open
        let zone = ContextZone::hard("storm", here.x, here.y, here.x + 2, here.y + 2);
        m.apply_zones("storm", vec![zone.clone()]).unwrap();
        assert_eq!(m.remaining_path.waypoints[0], here);
        assert!(m.remaining_path.waypoints[1..].iter().all(|&c| !zone.region.contains(c)));
        assert_eq!(
            m.remaining_path.total_cost,
            oracle_cheapest_cost(&m.cost_field(), here, m.map.end()).unwrap()
        );
    }

    #[test]
    fn unreachable_end_aborts_with_landing() {
        let mut m = mission();
        m.step().unwrap();
        m.step().unwrap();
        let before = m.last_seq();
        let wall = ContextZone::hard("wall", 0, 5, 19, 5);
        assert!(matches!(m.apply_zones("wall", vec![wall]), Err(MissionError::NoPath(_))));
        assert_eq!(m.phase, Phase::Aborted);
        assert!(m.command_log.commands.ends_with(&CLOSING));
        assert_eq!(m.event_log.last().unwrap().kind, EventKind::Aborted);
        assert_eq!(m.last_seq(), before + 1);
        assert_eq!(simulate_commands(&m.command_log, m.map.start(), &m.map).unwrap(), m.visited());
        assert_eq!(m.step(), Err(MissionError::MissionAborted));
    }

    #[test]
    fn events_are_ordered() {
        let mut m = mission();
        for _ in 0..5 {
            m.step().unwrap();
        }
        let seqs: Vec<u64> = m.event_log.iter().map(|e| e.seq).collect();
        assert_eq!(seqs, (1..=6).collect::<Vec<_>>());
        assert!(m.event_log.windows(2).all(|w| w[0].timestamp_ms <= w[1].timestamp_ms));
        assert_eq!(m.events_since(4).len(), 2);
        assert!(m.events_since(m.last_seq()).is_empty());
        assert!(m.events_since(99).is_empty());
    }
}
