//! Cost fields ("potential fields") and minimum-cost grid planning.
//!
//! Cell cost is `1 + sum of soft penalties` (capped at a ceiling), or infinity
//! on impassable obstacles and hard zones. Moves are 4-connected and a path
//! pays the cost of every cell it enters; the start cell is never charged.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::map::{GridCoord, GridMap, Obstacle, ObstacleKind};

pub const DEFAULT_PENALTY_CEILING: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("no path from {start} to {end}")]
    NoPath { start: GridCoord, end: GridCoord },
    #[error("{0} lies outside the cost field")]
    OutOfBounds(GridCoord),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "penalty")]
pub enum ZoneMode {
    Hard,
    Soft(f64),
}

/// A region added at runtime from a situational description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextZone {
    pub source_label: String,
    pub region: Obstacle,
    pub mode: ZoneMode,
}

impl ContextZone {
    pub fn hard(label: impl Into<String>, x1: i32, y1: i32, x2: i32, y2: i32) -> Self {
        let label = label.into();
        Self {
            region: Obstacle::contextual(label.clone(), x1, y1, x2, y2, f64::INFINITY),
            source_label: label,
            mode: ZoneMode::Hard,
        }
    }

    /// # Panics
    /// If `penalty` is not strictly positive and finite.
    pub fn soft(label: impl Into<String>, x1: i32, y1: i32, x2: i32, y2: i32, penalty: f64) -> Self {
        assert!(penalty > 0.0 && penalty.is_finite(), "soft penalty must be positive");
        let label = label.into();
        Self {
            region: Obstacle::contextual(label.clone(), x1, y1, x2, y2, penalty),
            source_label: label,
            mode: ZoneMode::Soft(penalty),
        }
    }

    /// Zone equivalent of a contextual obstacle read back from a map document.
    pub fn from_obstacle(ob: &Obstacle) -> Self {
        let mut region = ob.clone();
        region.kind = ObstacleKind::Contextual;
        let mode = if ob.penalty.is_finite() && ob.penalty > 0.0 {
            ZoneMode::Soft(ob.penalty)
        } else {
            region.penalty = f64::INFINITY;
            ZoneMode::Hard
        };
        Self {
            source_label: ob.label.clone(),
            region,
            mode,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.source_label = label.into();
        self.region.label = self.source_label.clone();
        self
    }

    pub fn rect(&self) -> (i32, i32, i32, i32) {
        (self.region.x1, self.region.y1, self.region.x2, self.region.y2)
    }

    pub fn is_hard(&self) -> bool {
        self.mode == ZoneMode::Hard
    }

    pub fn to_obstacle(&self) -> Obstacle {
        self.region.clone()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostField {
    width: i32,
    height: i32,
    cost: Vec<f64>,
}

impl CostField {
    pub fn uniform(width: i32, height: i32) -> Self {
        Self {
            width,
            height,
            cost: vec![1.0; (width * height) as usize],
        }
    }

    pub fn width(&self) -> i32 {
        self.width
    }

    pub fn height(&self) -> i32 {
        self.height
    }

    pub fn in_bounds(&self, c: GridCoord) -> bool {
        c.x >= 0 && c.y >= 0 && c.x < self.width && c.y < self.height
    }

    /// Cost of entering `c`; infinite outside the field.
    pub fn cost(&self, c: GridCoord) -> f64 {
        if self.in_bounds(c) {
            self.cost[self.index(c)]
        } else {
            f64::INFINITY
        }
    }

    pub fn set_cost(&mut self, c: GridCoord, value: f64) {
        assert!(value >= 1.0, "cell cost must be at least 1");
        let i = self.index(c);
        self.cost[i] = value;
    }

    pub fn is_passable(&self, c: GridCoord) -> bool {
        self.cost(c).is_finite()
    }

    pub fn impassable_count(&self) -> usize {
        self.cost.iter().filter(|c| c.is_infinite()).count()
    }

    /// Sum of entered-cell costs along `waypoints` (first cell excluded).
    pub fn path_cost(&self, waypoints: &[GridCoord]) -> f64 {
        waypoints.iter().skip(1).map(|&c| self.cost(c)).sum()
    }

    fn index(&self, c: GridCoord) -> usize {
        (c.y * self.width + c.x) as usize
    }

    fn coord(&self, i: usize) -> GridCoord {
        GridCoord::new(i as i32 % self.width, i as i32 / self.width)
    }

    fn apply(&mut self, ob: &Obstacle, ceiling: f64) {
        let cells: Vec<GridCoord> = ob.cells().filter(|&c| self.in_bounds(c)).collect();
        for c in cells {
            let i = self.index(c);
            if ob.is_impassable() {
                self.cost[i] = f64::INFINITY;
            } else if self.cost[i].is_finite() {
                self.cost[i] = (self.cost[i] + ob.penalty).min(ceiling.max(1.0));
            }
        }
    }
}

/// Builds the cost field with the default soft-penalty ceiling.
pub fn build_cost_field(map: &GridMap, zones: &[ContextZone]) -> CostField {
    build_cost_field_with_ceiling(map, zones, DEFAULT_PENALTY_CEILING)
}

/// Obstacles from the map (including contextual ones carried in the document)
/// are applied first, then `zones`. Soft penalties add up to `ceiling`.
pub fn build_cost_field_with_ceiling(map: &GridMap, zones: &[ContextZone], ceiling: f64) -> CostField {
    let mut field = CostField::uniform(map.width(), map.height());
    for ob in map.obstacles() {
        field.apply(ob, ceiling);
    }
    for zone in zones {
        field.apply(&zone.region, ceiling);
    }
    field
}

/// Expands `ob` by `margin` cells on every side, clipped to the map.
pub fn dilate_region(ob: &Obstacle, margin: u32, map: &GridMap) -> Obstacle {
    let m = margin as i32;
    Obstacle {
        label: ob.label.clone(),
        x1: (ob.x1 - m).max(0),
        y1: (ob.y1 - m).max(0),
        x2: (ob.x2 + m).min(map.width() - 1),
        y2: (ob.y2 + m).min(map.height() - 1),
        kind: ObstacleKind::Contextual,
        penalty: ob.penalty,
    }
}

/// Smallest odd-sided square centered on `anchor` whose area reaches
/// `approx_cells`, clipped to the map, as a hard zone.
pub fn zone_from_anchor(anchor: GridCoord, approx_cells: u32, map: &GridMap) -> ContextZone {
    let mut side: u32 = 1;
    while side * side < approx_cells {
        side += 2;
    }
    let half = ((side - 1) / 2) as i32;
    ContextZone::hard(
        format!("zone at {anchor}"),
        (anchor.x - half).max(0),
        (anchor.y - half).max(0),
        (anchor.x + half).min(map.width() - 1),
        (anchor.y + half).min(map.height() - 1),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightPath {
    pub waypoints: Vec<GridCoord>,
    pub total_cost: f64,
}

impl FlightPath {
    pub fn new(waypoints: Vec<GridCoord>, field: &CostField) -> Self {
        let total_cost = field.path_cost(&waypoints);
        Self { waypoints, total_cost }
    }

    pub fn start(&self) -> Option<GridCoord> {
        self.waypoints.first().copied()
    }

    pub fn end(&self) -> Option<GridCoord> {
        self.waypoints.last().copied()
    }

    pub fn moves(&self) -> usize {
        self.waypoints.len().saturating_sub(1)
    }

    /// True when every step moves exactly one cell along one axis.
    pub fn is_four_connected(&self) -> bool {
        self.waypoints.windows(2).all(|w| w[0].manhattan(w[1]) == 1)
    }
}

/// Neighbor expansion order: +x, -x, +y, -y.
pub const NEIGHBOR_STEPS: [(i32, i32); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

#[derive(Debug)]
struct OpenEntry {
    f: f64,
    g: f64,
    seq: u64,
    cell: usize,
}

impl PartialEq for OpenEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for OpenEntry {}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OpenEntry {
    // max-heap: smaller f first, then larger g, then earlier insertion
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| self.g.total_cmp(&other.g))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// A* over the cost field with a Manhattan heuristic.
///
/// The start cell may itself be impassable (it is never charged); the end
/// cell must be passable. Ties on `f` prefer the larger `g`, then insertion
/// order, so results are reproducible.
pub fn plan_astar(field: &CostField, start: GridCoord, end: GridCoord) -> Result<FlightPath, PlanError> {
    for c in [start, end] {
        if !field.in_bounds(c) {
            return Err(PlanError::OutOfBounds(c));
        }
    }
    if !field.is_passable(end) {
        return Err(PlanError::NoPath { start, end });
    }
    let n = field.cost.len();
    let mut g_score = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;

    let s = field.index(start);
    let goal = field.index(end);
    g_score[s] = 0.0;
    open.push(OpenEntry {
        f: start.manhattan(end) as f64,
        g: 0.0,
        seq,
        cell: s,
    });

    while let Some(OpenEntry { g, cell, .. }) = open.pop() {
        if closed[cell] || g > g_score[cell] {
            continue;
        }
        closed[cell] = true;
        if cell == goal {
            let mut waypoints = vec![end];
            let mut cur = goal;
            while cur != s {
                cur = parent[cur];
                waypoints.push(field.coord(cur));
            }
            waypoints.reverse();
            return Ok(FlightPath {
                waypoints,
                total_cost: g,
            });
        }
        let here = field.coord(cell);
        for (dx, dy) in NEIGHBOR_STEPS {
            let next = GridCoord::new(here.x + dx, here.y + dy);
            let step = field.cost(next);
            if !step.is_finite() {
                continue;
            }
            let ni = field.index(next);
            if closed[ni] {
                continue;
            }
            let tentative = g + step;
            if tentative < g_score[ni] {
                g_score[ni] = tentative;
                parent[ni] = cell;
                seq += 1;
                open.push(OpenEntry {
                    f: tentative + next.manhattan(end) as f64,
                    g: tentative,
                    seq,
                    cell: ni,
                });
            }
        }
    }
    Err(PlanError::NoPath { start, end })
}

/// Exhaustive uniform-cost search returning only the optimal cost.
///
/// Kept deliberately separate from [`plan_astar`]: no heuristic, no
/// tie-breaking, a plain label-correcting sweep over a sorted frontier.
pub fn oracle_cheapest_cost(field: &CostField, start: GridCoord, end: GridCoord) -> Result<f64, PlanError> {
    for c in [start, end] {
        if !field.in_bounds(c) {
            return Err(PlanError::OutOfBounds(c));
        }
    }
    if !field.is_passable(end) {
        return Err(PlanError::NoPath { start, end });
    }
    let w = field.width as usize;
    let h = field.height as usize;
    let mut dist = vec![vec![f64::INFINITY; w]; h];
    dist[start.y as usize][start.x as usize] = 0.0;
    let mut frontier: std::collections::BTreeSet<(u64, usize, usize)> = std::collections::BTreeSet::new();
    frontier.insert((0f64.to_bits(), start.x as usize, start.y as usize));
    // Costs are non-negative, so f64 bit patterns order like the values.
    while let Some((bits, x, y)) = frontier.pop_first() {
        let d = f64::from_bits(bits);
        if d > dist[y][x] {
            continue;
        }
        if (x as i32, y as i32) == (end.x, end.y) {
            return Ok(d);
        }
        let candidates = [
            (x.wrapping_sub(1), y),
            (x + 1, y),
            (x, y.wrapping_sub(1)),
            (x, y + 1),
        ];
        for (nx, ny) in candidates {
            if nx >= w || ny >= h {
                continue;
            }
            let c = field.cost[ny * w + nx];
            if c.is_infinite() {
                continue;
            }
            let nd = d + c;
            if nd < dist[ny][nx] {
                dist[ny][nx] = nd;
                frontier.insert((nd.to_bits(), nx, ny));
            }
        }
    }
    Err(PlanError::NoPath { start, end })
}
