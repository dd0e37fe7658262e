//! JSON grid maps: parsing, validation, rasterization and ASCII rendering.
//!
//! Wire format (field order is canonical):
//!
//! ```json
//! {"width":20,"height":20,"start_x":0,"start_y":0,"end_x":19,"end_y":19,
//!  "obstacle_list":[{"label":"school","x1":6,"y1":9,"x2":8,"y2":11,"kind":"static"}]}
//! ```
//!
//! Rectangles are inclusive on both corners. `kind` and `penalty` are optional
//! on input (default `static`, infinite penalty). An infinite penalty is
//! serialized by omitting the `penalty` field.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapError {
    #[error("malformed map document: {0}")]
    MalformedDocument(String),
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
}

/// Cell index; `x` is the column, `y` the row, origin at (0, 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridCoord {
    pub x: i32,
    pub y: i32,
}

impl GridCoord {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn manhattan(self, other: GridCoord) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

impl fmt::Display for GridCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl From<(i32, i32)> for GridCoord {
    fn from((x, y): (i32, i32)) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ObstacleKind {
    #[default]
    Static,
    Contextual,
}

/// Labeled inclusive rectangle of cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle {
    pub label: String,
    pub x1: i32,
    pub y1: i32,
    pub x2: i32,
    pub y2: i32,
    pub kind: ObstacleKind,
    /// Cost units added per cell; `f64::INFINITY` means impassable.
    pub penalty: f64,
}

impl Obstacle {
    /// Impassable static obstacle with normalized bounds.
    pub fn new(label: impl Into<String>, x1: i32, y1: i32, x2: i32, y2: i32) -> Self {
        Self {
            label: label.into(),
            x1,
            y1,
            x2,
            y2,
            kind: ObstacleKind::Static,
            penalty: f64::INFINITY,
        }
        .normalized()
    }

    pub fn contextual(label: impl Into<String>, x1: i32, y1: i32, x2: i32, y2: i32, penalty: f64) -> Self {
        Self {
            kind: ObstacleKind::Contextual,
            penalty,
            ..Self::new(label, x1, y1, x2, y2)
        }
    }

    /// Swaps reversed corners so that `x1 <= x2` and `y1 <= y2`.
    pub fn normalized(mut self) -> Self {
        if self.x1 > self.x2 {
            std::mem::swap(&mut self.x1, &mut self.x2);
        }
        if self.y1 > self.y2 {
            std::mem::swap(&mut self.y1, &mut self.y2);
        }
        self
    }

    pub fn is_impassable(&self) -> bool {
        self.penalty.is_infinite()
    }

    pub fn contains(&self, c: GridCoord) -> bool {
        (self.x1..=self.x2).contains(&c.x) && (self.y1..=self.y2).contains(&c.y)
    }

    pub fn area(&self) -> u64 {
        (self.x2 - self.x1 + 1) as u64 * (self.y2 - self.y1 + 1) as u64
    }

    pub fn same_rect(&self, other: &Obstacle) -> bool {
        (self.x1, self.y1, self.x2, self.y2) == (other.x1, other.y1, other.x2, other.y2)
    }

    pub fn cells(&self) -> impl Iterator<Item = GridCoord> + '_ {
        (self.y1..=self.y2).flat_map(move |y| (self.x1..=self.x2).map(move |x| GridCoord::new(x, y)))
    }

    fn within(&self, width: i32, height: i32) -> bool {
        self.x1 >= 0 && self.y1 >= 0 && self.x2 < width && self.y2 < height
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    width: i32,
    height: i32,
    start: GridCoord,
    end: GridCoord,
    obstacles: Vec<Obstacle>,
}

impl GridMap {
    /// Builds a map, normalizing obstacle bounds and checking every invariant.
    pub fn new(
        width: i32,
        height: i32,
        start: GridCoord,
        end: GridCoord,
        obstacles: Vec<Obstacle>,
    ) -> Result<Self, MapError> {
        if width < 2 || height < 2 {
            return Err(MapError::InvalidBounds(format!(
                "map must be at least 2x2, got {width}x{height}"
            )));
        }
        let obstacles: Vec<Obstacle> = obstacles.into_iter().map(Obstacle::normalized).collect();
        let map = Self {
            width,
            height,
            start,
            end,
            obstacles,
        };
        for (name, c) in [("start", start), ("end", end)] {
            if !map.in_bounds(c) {
                return Err(MapError::InvalidBounds(format!("{name} {c} lies outside the map")));
            }
        }
        if start == end {
            return Err(MapError::InvalidBounds(format!("start and end coincide at {start}")));
        }
        for ob in &map.obstacles {
            if ob.penalty.is_nan() || ob.penalty < 0.0 {
                return Err(MapError::MalformedDocument(format!(
                    "obstacle '{}' has a negative or NaN penalty",
                    ob.label
                )));
            }
            if ob.kind == ObstacleKind::Static && !ob.is_impassable() {
                return Err(MapError::MalformedDocument(format!(
                    "static obstacle '{}' cannot carry a finite penalty",
                    ob.label
                )));
            }
            if !ob.within(width, height) {
                return Err(MapError::InvalidBounds(format!(
                    "obstacle '{}' ({}, {}, {}, {}) escapes the {width}x{height} grid",
                    ob.label, ob.x1, ob.y1, ob.x2, ob.y2
                )));
            }
            if ob.is_impassable() {
                for (name, c) in [("start", start), ("end", end)] {
                    if ob.contains(c) {
                        return Err(MapError::InvalidBounds(format!(
                            "{name} {c} lies inside impassable obstacle '{}'",
                            ob.label
                        )));
                    }
                }
            }
        }
        Ok(map)
    }

    pub fn width(&self) -> i32 {
        self.width
    }

    pub fn height(&self) -> i32 {
        self.height
    }

    pub fn start(&self) -> GridCoord {
        self.start
    }

    pub fn end(&self) -> GridCoord {
        self.end
    }

    pub fn obstacles(&self) -> &[Obstacle] {
        &self.obstacles
    }

    pub fn in_bounds(&self, c: GridCoord) -> bool {
        c.x >= 0 && c.y >= 0 && c.x < self.width && c.y < self.height
    }

    pub fn obstacle(&self, label: &str) -> Option<&Obstacle> {
        self.obstacles
            .iter()
            .find(|o| o.label.eq_ignore_ascii_case(label))
    }

    /// Same map with `extra` appended to the obstacle list, re-validated.
    pub fn with_obstacles(&self, extra: impl IntoIterator<Item = Obstacle>) -> Result<Self, MapError> {
        let mut obstacles = self.obstacles.clone();
        obstacles.extend(extra);
        Self::new(self.width, self.height, self.start, self.end, obstacles)
    }

    /// Same map with a different start cell, re-validated.
    pub fn with_start(&self, start: GridCoord) -> Result<Self, MapError> {
        Self::new(self.width, self.height, start, self.end, self.obstacles.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyGrid {
    width: i32,
    height: i32,
    cells: Vec<bool>,
}

impl OccupancyGrid {
    pub fn width(&self) -> i32 {
        self.width
    }

    pub fn height(&self) -> i32 {
        self.height
    }

    /// Out-of-bounds cells count as blocked.
    pub fn is_blocked(&self, c: GridCoord) -> bool {
        if c.x < 0 || c.y < 0 || c.x >= self.width || c.y >= self.height {
            return true;
        }
        self.cells[(c.y * self.width + c.x) as usize]
    }

    pub fn blocked_count(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }
}

/// Marks every cell covered by an impassable obstacle.
pub fn rasterize(map: &GridMap) -> OccupancyGrid {
    let mut cells = vec![false; (map.width * map.height) as usize];
    for ob in map.obstacles.iter().filter(|o| o.is_impassable()) {
        for c in ob.cells() {
            cells[(c.y * map.width + c.x) as usize] = true;
        }
    }
    OccupancyGrid {
        width: map.width,
        height: map.height,
        cells,
    }
}

#[derive(Serialize, Deserialize)]
struct MapDocument {
    width: i32,
    height: i32,
    start_x: i32,
    start_y: i32,
    end_x: i32,
    end_y: i32,
    obstacle_list: Vec<ObstacleDocument>,
}

#[derive(Serialize, Deserialize)]
struct ObstacleDocument {
    label: String,
    x1: i32,
    y1: i32,
    x2: i32,
    y2: i32,
    #[serde(default)]
    kind: ObstacleKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    penalty: Option<f64>,
}

impl From<&Obstacle> for ObstacleDocument {
    fn from(o: &Obstacle) -> Self {
        Self {
            label: o.label.clone(),
            x1: o.x1,
            y1: o.y1,
            x2: o.x2,
            y2: o.y2,
            kind: o.kind,
            penalty: o.penalty.is_finite().then_some(o.penalty),
        }
    }
}

impl From<ObstacleDocument> for Obstacle {
    fn from(d: ObstacleDocument) -> Self {
        Obstacle {
            label: d.label,
            x1: d.x1,
            y1: d.y1,
            x2: d.x2,
            y2: d.y2,
            kind: d.kind,
            penalty: d.penalty.unwrap_or(f64::INFINITY),
        }
    }
}

impl MapDocument {
    fn from_map(map: &GridMap) -> Self {
        Self {
            width: map.width,
            height: map.height,
            start_x: map.start.x,
            start_y: map.start.y,
            end_x: map.end.x,
            end_y: map.end.y,
            obstacle_list: map.obstacles.iter().map(ObstacleDocument::from).collect(),
        }
    }
}

/// Parses a map document. Unknown fields are ignored; reversed bounds are swapped.
pub fn parse_map(text: &str) -> Result<GridMap, MapError> {
    let doc: MapDocument =
        serde_json::from_str(text).map_err(|e| MapError::MalformedDocument(e.to_string()))?;
    map_from_value_doc(doc)
}

/// Like [`parse_map`] but from an already-decoded JSON value.
pub fn map_from_value(value: serde_json::Value) -> Result<GridMap, MapError> {
    let doc: MapDocument =
        serde_json::from_value(value).map_err(|e| MapError::MalformedDocument(e.to_string()))?;
    map_from_value_doc(doc)
}

fn map_from_value_doc(doc: MapDocument) -> Result<GridMap, MapError> {
    GridMap::new(
        doc.width,
        doc.height,
        GridCoord::new(doc.start_x, doc.start_y),
        GridCoord::new(doc.end_x, doc.end_y),
        doc.obstacle_list.into_iter().map(Obstacle::from).collect(),
    )
}

/// Canonical compact serialization.
pub fn serialize_map(map: &GridMap) -> String {
    serde_json::to_string(&MapDocument::from_map(map)).expect("map documents always serialize")
}

pub fn serialize_map_pretty(map: &GridMap) -> String {
    serde_json::to_string_pretty(&MapDocument::from_map(map)).expect("map documents always serialize")
}

impl Serialize for GridMap {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        MapDocument::from_map(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GridMap {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = MapDocument::deserialize(deserializer)?;
        map_from_value_doc(doc).map_err(serde::de::Error::custom)
    }
}

impl Serialize for Obstacle {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ObstacleDocument::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Obstacle {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(Obstacle::from(ObstacleDocument::deserialize(deserializer)?).normalized())
    }
}

/// Renders the map one text row per grid row, row `y = 0` first.
///
/// Glyphs: `S` start, `E` end, `#` blocked, `*` path, `.` free. Lines are
/// joined with `\n` without a trailing newline.
pub fn render_ascii(map: &GridMap, path: Option<&[GridCoord]>) -> String {
    let grid = rasterize(map);
    let mut rows: Vec<Vec<char>> = (0..map.height)
        .map(|y| {
            (0..map.width)
                .map(|x| if grid.is_blocked(GridCoord::new(x, y)) { '#' } else { '.' })
                .collect()
        })
        .collect();
    for &c in path.unwrap_or_default() {
        if map.in_bounds(c) && rows[c.y as usize][c.x as usize] == '.' {
            rows[c.y as usize][c.x as usize] = '*';
        }
    }
    rows[map.start.y as usize][map.start.x as usize] = 'S';
    rows[map.end.y as usize][map.end.x as usize] = 'E';
    rows.into_iter()
        .map(|r| r.into_iter().collect::<String>())
        .collect::<Vec<_>>()
        .join("\n")
}

/// The 20x20 three-obstacle map used by the reference experiment.
pub fn appendix_map() -> GridMap {
    GridMap::new(
        20,
        20,
        GridCoord::new(0, 0),
        GridCoord::new(19, 19),
        vec![
            Obstacle::new("school", 6, 9, 8, 11),
            Obstacle::new("office building", 15, 10, 17, 12),
            Obstacle::new("park", 0, 17, 1, 19),
        ],
    )
    .expect("reference map is valid")
}
