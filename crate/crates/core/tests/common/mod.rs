#![allow(dead_code)]

use ctxnav_core::field::ContextZone;
use ctxnav_core::map::{GridCoord, GridMap, Obstacle};
use proptest::prelude::*;

pub type Rect = (i32, i32, i32, i32);

fn rect_in(w: i32, h: i32) -> impl Strategy<Value = Rect> {
    (0..w, 0..h, 0..w, 0..h)
}

/// Obstacles may be given with reversed corners; the map normalizes them.
/// Rectangles covering start or end are dropped.
pub fn arb_map(max_side: i32, max_obstacles: usize) -> impl Strategy<Value = GridMap> {
    (2..=max_side, 2..=max_side)
        .prop_flat_map(move |(w, h)| {
            (
                Just(w),
                Just(h),
                (0..w, 0..h),
                (0..w, 0..h),
                proptest::collection::vec(rect_in(w, h), 0..=max_obstacles),
            )
        })
        .prop_filter_map("start and end coincide", |(w, h, s, e, rects)| {
            let (start, end) = (GridCoord::new(s.0, s.1), GridCoord::new(e.0, e.1));
            if start == end {
                return None;
            }
            let obstacles = rects
                .into_iter()
                .enumerate()
                .map(|(i, (x1, y1, x2, y2))| Obstacle::new(format!("obstacle {i}"), x1, y1, x2, y2))
                .filter(|o| {
                    let n = o.clone().normalized();
                    !n.contains(start) && !n.contains(end)
                })
                .collect();
            GridMap::new(w, h, start, end, obstacles).ok()
        })
}

/// Zones inside a `w` x `h` grid; `None` penalty means hard.
pub fn arb_zones(w: i32, h: i32, max: usize) -> impl Strategy<Value = Vec<ContextZone>> {
    proptest::collection::vec((rect_in(w, h), proptest::option::of(1u32..=20)), 0..=max).prop_map(|zs| {
        zs.into_iter()
            .enumerate()
            .map(|(i, ((x1, y1, x2, y2), p))| {
                let label = format!("zone {i}");
                match p {
                    None => ContextZone::hard(label, x1, y1, x2, y2),
                    Some(p) => ContextZone::soft(label, x1, y1, x2, y2, f64::from(p)),
                }
            })
            .collect()
    })
}

pub fn arb_map_with_zones(max_side: i32, max_obstacles: usize, max_zones: usize) -> impl Strategy<Value = (GridMap, Vec<ContextZone>)> {
    arb_map(max_side, max_obstacles).prop_flat_map(move |m| {
        let (w, h) = (m.width(), m.height());
        (Just(m), arb_zones(w, h, max_zones))
    })
}

/// Independent 4-connected walk: each step picks one of four directions,
/// steps leaving the grid are skipped.
pub fn arb_walk(side: i32, max_moves: usize) -> impl Strategy<Value = Vec<GridCoord>> {
    ((0..side, 0..side), proptest::collection::vec(0usize..4, 1..=max_moves))
        .prop_map(move |((x, y), dirs)| {
            let mut cells = vec![GridCoord::new(x, y)];
            for d in dirs {
                let (dx, dy) = [(1, 0), (-1, 0), (0, 1), (0, -1)][d];
                let last = *cells.last().unwrap();
                let next = GridCoord::new(last.x + dx, last.y + dy);
                if next.x >= 0 && next.y >= 0 && next.x < side && next.y < side {
                    cells.push(next);
                }
            }
            cells
        })
        .prop_filter("walk never left its start", |c| c.len() >= 2)
}
