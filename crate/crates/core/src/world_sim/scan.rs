use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geometry::{Point2, Pose2};
use crate::grid::{CellState, OccupancyGrid};

use super::World;

// cells entered within this distance of a recorded hit are the hit cell
const HIT_TOLERANCE: f64 = 1e-5;

/// 360° range scan. Beam `i` points at `2πi/n` in the sensor frame.
/// A range of `f32::INFINITY` marks a beam with no return.
#[derive(Debug, Clone, PartialEq)]
pub struct LaserScan {
    ranges: Vec<f32>,
    max_range: f32,
}

impl LaserScan {
    pub const NO_RETURN: f32 = f32::INFINITY;

    pub fn new(ranges: Vec<f32>, max_range: f32) -> Self {
        Self { ranges, max_range }
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn max_range(&self) -> f32 {
        self.max_range
    }

    pub fn ranges(&self) -> &[f32] {
        &self.ranges
    }

    pub fn angle(&self, i: usize) -> f64 {
        TAU * i as f64 / self.ranges.len() as f64
    }

    pub fn range(&self, i: usize) -> Option<f32> {
        let r = self.ranges[i];
        r.is_finite().then_some(r)
    }

    /// Returned beams as points in the sensor frame.
    pub fn points(&self) -> Vec<Point2> {
        (0..self.ranges.len())
            .filter_map(|i| {
                self.range(i).map(|r| {
                    let (s, c) = self.angle(i).sin_cos();
                    Point2::new(c * r as f64, s * r as f64)
                })
            })
            .collect()
    }
}

/// Simulated LiDAR: distance along each beam to the first Occupied cell
/// boundary, by exact DDA traversal.
pub fn raycast_scan(
    world: &World,
    pose: &Pose2,
    n_beams: usize,
    max_range: f64,
) -> Result<LaserScan> {
    let grid = world.truth();
    let origin = pose.position();
    if grid.get(grid.cell_of(origin)) != Some(CellState::Free) {
        return Err(Error::PoseInObstacle {
            x: pose.x,
            y: pose.y,
        });
    }
    assert!(n_beams >= 4, "need at least four beams");
    let max_range = max_range as f32;
    let limit = max_range as f64;
    let ranges = (0..n_beams)
        .map(|i| {
            let angle = pose.theta + TAU * i as f64 / n_beams as f64;
            first_hit(grid, origin, angle, limit)
                .map_or(LaserScan::NO_RETURN, |t| (t.max(1e-6)) as f32)
        })
        .collect();
    Ok(LaserScan::new(ranges, max_range))
}

/// Entry distance of the first Occupied cell along the ray, if within `limit`.
pub(crate) fn first_hit(
    grid: &OccupancyGrid,
    origin: Point2,
    angle: f64,
    limit: f64,
) -> Option<f64> {
    first_hit_cell(grid, origin, angle, limit).map(|(_, t)| t)
}

pub(crate) fn first_hit_cell(
    grid: &OccupancyGrid,
    origin: Point2,
    angle: f64,
    limit: f64,
) -> Option<(crate::grid::GridCoord, f64)> {
    let cells = grid.cells();
    for (c, t) in grid.traverse(origin, angle, limit) {
        if cells[grid.index(c)] == CellState::Occupied {
            return Some((c, t));
        }
    }
    None
}

/// Fold a scan taken at `pose` into an explored grid: traversed cells become
/// Free, the hit cell becomes Occupied. Occupied cells are never freed and
/// Free cells are never re-marked.
pub fn integrate_scan(explored: &mut OccupancyGrid, pose: &Pose2, scan: &LaserScan) {
    let origin = pose.position();
    let n = scan.len();
    for i in 0..n {
        let angle = pose.theta + TAU * i as f64 / n as f64;
        match scan.range(i) {
            Some(r) => {
                let r = r as f64;
                for (k, (c, t)) in explored
                    .traverse(origin, angle, r + HIT_TOLERANCE)
                    .enumerate()
                {
                    // the sensor's own cell is free
                    if k == 0 || t < r - HIT_TOLERANCE {
                        mark(explored, c, CellState::Free);
                    } else {
                        mark(explored, c, CellState::Occupied);
                        break;
                    }
                }
            }
            None => {
                let limit = scan.max_range() as f64;
                for (c, _) in explored.traverse(origin, angle, limit) {
                    mark(explored, c, CellState::Free);
                }
            }
        }
    }
}

fn mark(grid: &mut OccupancyGrid, c: crate::grid::GridCoord, s: CellState) {
    let i = grid.index(c);
    let cur = grid.cells()[i];
    if cur == CellState::Unknown {
        grid.set(c, s);
    }
}
