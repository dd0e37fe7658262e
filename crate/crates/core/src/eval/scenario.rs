use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{build_cost_field, dilate_region, oracle_cheapest_cost, plan_astar, zone_from_anchor, FlightPath};
use crate::map::{appendix_map, rasterize, GridCoord, GridMap, MapError, Obstacle};

const MAX_SIDE: i32 = 5;
const MAX_ATTEMPTS: usize = 200;
const PLACEMENT_TRIES: usize = 500;
pub const LUNCH_BREAK_MARGIN: u32 = 2;
pub const FLOCK_CELLS: u32 = 3;

const LABELS: [&str; 10] = [
    "school",
    "office building",
    "park",
    "hospital",
    "stadium",
    "market",
    "library",
    "station",
    "factory",
    "museum",
];

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("could not place {n_obstacles} obstacles on a {width}x{height} grid after {attempts} attempts")]
    PlacementExhausted {
        width: i32,
        height: i32,
        n_obstacles: usize,
        attempts: usize,
    },
    #[error("invalid scenario request: {0}")]
    InvalidRequest(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("scenario file: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario file: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub map: GridMap,
    pub lunch_break_target: String,
    pub flock_anchor: GridCoord,
    pub reference_path: FlightPath,
}

/// Everything but the map, stored next to a map fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSidecar {
    pub name: String,
    pub seed: u64,
    pub lunch_break_target: String,
    pub flock_anchor: GridCoord,
    pub reference_path: Vec<GridCoord>,
}

impl Scenario {
    /// Checks the target exists and the reference path is a valid optimal route.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.map.obstacle(&self.lunch_break_target).is_none() {
            return Err(ScenarioError::Invalid(format!(
                "lunch-break target '{}' is not on the map",
                self.lunch_break_target
            )));
        }
        if !self.map.in_bounds(self.flock_anchor) {
            return Err(ScenarioError::Invalid(format!("flock anchor {} is off the map", self.flock_anchor)));
        }
        let field = build_cost_field(&self.map, &[]);
        let path = &self.reference_path;
        if path.start() != Some(self.map.start())
            || path.end() != Some(self.map.end())
            || !path.is_four_connected()
            || path.waypoints.iter().any(|&c| !field.is_passable(c))
        {
            return Err(ScenarioError::Invalid("reference path is not a valid start-to-end route".into()));
        }
        let optimal = oracle_cheapest_cost(&field, self.map.start(), self.map.end())
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        if field.path_cost(&path.waypoints) != optimal || path.total_cost != optimal {
            return Err(ScenarioError::Invalid(format!(
                "reference path costs {} but the optimum is {optimal}",
                path.total_cost
            )));
        }
        Ok(())
    }

    pub fn sidecar(&self) -> ScenarioSidecar {
        ScenarioSidecar {
            name: self.name.clone(),
            seed: self.seed,
            lunch_break_target: self.lunch_break_target.clone(),
            flock_anchor: self.flock_anchor,
            reference_path: self.reference_path.waypoints.clone(),
        }
    }

    pub fn from_parts(map: GridMap, sidecar: ScenarioSidecar) -> Result<Self, ScenarioError> {
        let field = build_cost_field(&map, &[]);
        let reference_path = FlightPath::new(sidecar.reference_path, &field);
        let scenario = Scenario {
            name: sidecar.name,
            seed: sidecar.seed,
            map,
            lunch_break_target: sidecar.lunch_break_target,
            flock_anchor: sidecar.flock_anchor,
            reference_path,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Writes `<name>.map.json` and `<name>.scenario.json` into `dir`.
    pub fn write_fixture(&self, dir: &Path) -> Result<(), ScenarioError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(
            dir.join(format!("{}.map.json", self.name)),
            crate::map::serialize_map_pretty(&self.map) + "\n",
        )?;
        std::fs::write(
            dir.join(format!("{}.scenario.json", self.name)),
            serde_json::to_string_pretty(&self.sidecar())? + "\n",
        )?;
        Ok(())
    }

    pub fn read_fixture(map_path: &Path, sidecar_path: &Path) -> Result<Self, ScenarioError> {
        let map = crate::map::parse_map(&std::fs::read_to_string(map_path)?)?;
        let sidecar: ScenarioSidecar = serde_json::from_str(&std::fs::read_to_string(sidecar_path)?)?;
        Self::from_parts(map, sidecar)
    }
}

/// The waypoint list printed for the reference experiment (39 cells, cost 38).
pub fn appendix_reference_path() -> Vec<GridCoord> {
    [
        (0, 0), (0, 1), (0, 2), (0, 3), (1, 3), (2, 3), (2, 4), (3, 4), (4, 4), (5, 4), (6, 4), (6, 5),
        (7, 5), (8, 5), (9, 5), (9, 6), (10, 6), (10, 7), (11, 7), (12, 7), (12, 8), (13, 8), (14, 8),
        (15, 8), (16, 8), (17, 8), (18, 8), (19, 8), (19, 9), (19, 10), (19, 11), (19, 12), (19, 13),
        (19, 14), (19, 15), (19, 16), (19, 17), (19, 18), (19, 19),
    ]
    .into_iter()
    .map(GridCoord::from)
    .collect()
}

/// The reference experiment: three obstacles on 20x20, lunch break at the
/// school, birds at (13, 15).
pub fn appendix_scenario() -> Scenario {
    let map = appendix_map();
    let field = build_cost_field(&map, &[]);
    Scenario {
        name: "appendix".into(),
        seed: 0,
        reference_path: FlightPath::new(appendix_reference_path(), &field),
        map,
        lunch_break_target: "school".into(),
        flock_anchor: GridCoord::new(13, 15),
    }
}

fn label_for(i: usize) -> String {
    let base = LABELS[i % LABELS.len()];
    match i / LABELS.len() {
        0 => base.to_string(),
        round => format!("{base} {}", round + 1),
    }
}

fn overlaps(a: &Obstacle, b: &Obstacle) -> bool {
    a.x1 <= b.x2 && b.x1 <= a.x2 && a.y1 <= b.y2 && b.y1 <= a.y2
}

fn place_obstacles(
    rng: &mut ChaCha8Rng,
    width: i32,
    height: i32,
    n: usize,
    start: GridCoord,
    end: GridCoord,
) -> Option<Vec<Obstacle>> {
    let mut placed: Vec<Obstacle> = Vec::with_capacity(n);
    for i in 0..n {
        let mut ok = false;
        for _ in 0..PLACEMENT_TRIES {
            let w = rng.random_range(1..=MAX_SIDE.min(width));
            let h = rng.random_range(1..=MAX_SIDE.min(height));
            let x = rng.random_range(0..=width - w);
            let y = rng.random_range(0..=height - h);
            let candidate = Obstacle::new(label_for(i), x, y, x + w - 1, y + h - 1);
            if candidate.contains(start) || candidate.contains(end) || placed.iter().any(|p| overlaps(p, &candidate))
            {
                continue;
            }
            placed.push(candidate);
            ok = true;
            break;
        }
        if !ok {
            return None;
        }
    }
    Some(placed)
}

/// Deterministic random scenario: disjoint rectangles with sides 1..=5 that
/// keep the corners (0, 0) and (W-1, H-1) free and connected.
pub fn generate_scenario(seed: u64, width: i32, height: i32, n_obstacles: usize) -> Result<Scenario, ScenarioError> {
    if n_obstacles == 0 {
        return Err(ScenarioError::InvalidRequest("at least one obstacle is required".into()));
    }
    if width < 2 || height < 2 {
        return Err(ScenarioError::InvalidRequest(format!("grid {width}x{height} is too small")));
    }
    let start = GridCoord::new(0, 0);
    let end = GridCoord::new(width - 1, height - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for _ in 0..MAX_ATTEMPTS {
        let Some(obstacles) = place_obstacles(&mut rng, width, height, n_obstacles, start, end) else {
            continue;
        };
        let map = GridMap::new(width, height, start, end, obstacles)?;
        let field = build_cost_field(&map, &[]);
        if oracle_cheapest_cost(&field, start, end).is_err() {
            continue;
        }

        let mut order: Vec<usize> = (0..map.obstacles().len()).collect();
        order.shuffle(&mut rng);
        let target = order.into_iter().map(|i| &map.obstacles()[i]).find(|o| {
            let d = dilate_region(o, LUNCH_BREAK_MARGIN, &map);
            !d.contains(start) && !d.contains(end) && d.area() > o.area()
        });
        let Some(target) = target.map(|o| o.label.clone()) else {
            continue;
        };

        let grid = rasterize(&map);
        let mut anchor = None;
        for _ in 0..PLACEMENT_TRIES {
            let c = GridCoord::new(rng.random_range(0..width), rng.random_range(0..height));
            let zone = zone_from_anchor(c, FLOCK_CELLS, &map);
            if grid.is_blocked(c) || zone.region.contains(start) || zone.region.contains(end) {
                continue;
            }
            anchor = Some(c);
            break;
        }
        let Some(flock_anchor) = anchor else {
            continue;
        };

        let reference_path = plan_astar(&field, start, end).expect("oracle found a path");
        return Ok(Scenario {
            name: format!("seed{seed}-{width}x{height}-{n_obstacles}"),
            seed,
            map,
            lunch_break_target: target,
            flock_anchor,
            reference_path,
        });
    }
    Err(ScenarioError::PlacementExhausted {
        width,
        height,
        n_obstacles,
        attempts: MAX_ATTEMPTS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn appendix_scenario_is_valid() {
        let s = appendix_scenario();
        s.validate().unwrap();
        assert_eq!(s.reference_path.waypoints.len(), 39);
        assert_eq!(s.reference_path.total_cost, 38.0);
    }

    #[test]
    fn seed_zero_is_reproducible() {
        let a = generate_scenario(0, 20, 20, 3).unwrap();
        let b = generate_scenario(0, 20, 20, 3).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
        assert_eq!(a.map.obstacles().len(), 3);
    }

    #[test]
    fn large_scenario_constraints() {
        for seed in 0..5 {
            let s = generate_scenario(seed, 40, 40, 10).unwrap();
            s.validate().unwrap();
            let obs = s.map.obstacles();
            assert_eq!(obs.len(), 10);
            for (i, a) in obs.iter().enumerate() {
                assert!(a.x2 - a.x1 < 5 && a.y2 - a.y1 < 5);
                assert!(!a.contains(s.map.start()) && !a.contains(s.map.end()));
                for b in &obs[i + 1..] {
                    assert!(!overlaps(a, b));
                }
            }
            let field = build_cost_field(&s.map, &[]);
            assert!(oracle_cheapest_cost(&field, s.map.start(), s.map.end()).is_ok());
        }
    }

    #[test]
    fn impossible_requests() {
        assert!(matches!(generate_scenario(1, 3, 3, 0), Err(ScenarioError::InvalidRequest(_))));
        assert!(matches!(
            generate_scenario(1, 3, 3, 9),
            Err(ScenarioError::PlacementExhausted { .. })
        ));
    }

    #[test]
    fn fixture_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = generate_scenario(7, 20, 20, 3).unwrap();
        s.write_fixture(dir.path()).unwrap();
        let back = Scenario::read_fixture(
            &dir.path().join(format!("{}.map.json", s.name)),
            &dir.path().join(format!("{}.scenario.json", s.name)),
        )
        .unwrap();
        assert_eq!(back, s);
    }
}
