//! Contextual drone navigation core.
//!
//! * [`map`]: JSON grid maps, rasterization, ASCII rendering
//! * [`field`]: cost fields, contextual zones, A* and a uniform-cost oracle
//! * [`command`] / [`narrate`]: flight command compilation, simulation, briefings
//! * [`bridge`]: chat sessions, providers, map extraction, the six-turn protocol
//! * [`eval`]: scenarios, criterion judges, benchmark reports
//! * [`placement`]: RU/DU/CU memory and latency model

pub mod bridge;
pub mod command;
pub mod eval;
pub mod field;
pub mod map;
pub mod narrate;
pub mod placement;
