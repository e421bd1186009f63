//! Frontier detection and next-best-view exploration.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Pose2};
use crate::grid::{CellState, GridCoord, OccupancyGrid};
use crate::gridpath::{astar, smooth_path_by, DistanceField, Passable};
use crate::world_sim::{integrate_scan, move_along, raycast_scan, LaserScan, World};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExploreConfig {
    /// Maximum number of motion steps.
    pub budget: usize,
    /// Radius for counting Unknown cells around a frontier, meters.
    pub r_info: f64,
    pub replan_every: usize,
    pub min_frontier_cells: usize,
    /// Motion step, meters.
    pub step: f64,
    /// Distance kept from Occupied cells while navigating, meters.
    pub robot_radius: f64,
    pub n_beams: usize,
    pub max_range: f64,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        Self {
            budget: 4000,
            r_info: 7.0,
            replan_every: 10,
            min_frontier_cells: 3,
            step: 0.25,
            robot_radius: 0.2,
            n_beams: 360,
            max_range: 7.0,
        }
    }
}

/// Cluster of Free cells bordering Unknown space.
#[derive(Debug, Clone, PartialEq)]
pub struct Frontier {
    pub cells: Vec<GridCoord>,
    /// Center of the member cell nearest the cluster mean.
    pub centroid: Point2,
    pub centroid_cell: GridCoord,
    /// Unknown cells within `r_info` of the centroid.
    pub info_gain: usize,
}

pub fn is_frontier_cell(grid: &OccupancyGrid, c: GridCoord) -> bool {
    grid.is_free(c)
        && grid
            .neighbors4(c)
            .any(|n| grid.get(n) == Some(CellState::Unknown))
}

/// Row-wise prefix counts of Unknown cells for fast disk queries.
struct UnknownCounter {
    width: usize,
    prefix: Vec<u32>,
}

impl UnknownCounter {
    fn new(grid: &OccupancyGrid) -> Self {
        let w = grid.width();
        let mut prefix = vec![0u32; (w + 1) * grid.height()];
        for r in 0..grid.height() {
            for c in 0..w {
                let unknown = grid.cells()[r * w + c] == CellState::Unknown;
                prefix[r * (w + 1) + c + 1] = prefix[r * (w + 1) + c] + unknown as u32;
            }
        }
        Self { width: w, prefix }
    }

    fn count_in_disk(&self, grid: &OccupancyGrid, center: GridCoord, radius_cells: f64) -> usize {
        let rc = radius_cells.floor() as i32;
        let mut total = 0usize;
        for dr in -rc..=rc {
            let row = center.row + dr;
            if row < 0 || row as usize >= grid.height() {
                continue;
            }
            let half = (radius_cells * radius_cells - (dr * dr) as f64)
                .max(0.0)
                .sqrt()
                .floor() as i32;
            let c0 = (center.col - half).max(0) as usize;
            let c1 = ((center.col + half) as usize).min(self.width - 1);
            if (center.col + half) < 0 || c0 > c1 {
                continue;
            }
            let base = row as usize * (self.width + 1);
            total += (self.prefix[base + c1 + 1] - self.prefix[base + c0]) as usize;
        }
        total
    }
}

/// Free cells 4-adjacent to Unknown, grouped into 8-connected clusters of at
/// least `min_cells` cells. Clusters are ordered by their first cell in
/// row-major order.
pub fn detect_frontiers(explored: &OccupancyGrid, min_cells: usize, r_info: f64) -> Vec<Frontier> {
    let n = explored.len();
    let is_f: Vec<bool> = (0..n)
        .map(|i| is_frontier_cell(explored, explored.coord_of(i)))
        .collect();
    let mut seen = vec![false; n];
    let counter = UnknownCounter::new(explored);
    let radius_cells = r_info / explored.resolution();
    let mut out = vec![];
    for start in 0..n {
        if !is_f[start] || seen[start] {
            continue;
        }
        let mut cells = vec![];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(i) = queue.pop_front() {
            let c = explored.coord_of(i);
            cells.push(c);
            for nb in explored.neighbors8(c) {
                let j = explored.index(nb);
                if is_f[j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        if cells.len() < min_cells {
            continue;
        }
        cells.sort();
        let centroid_cell = nearest_to_mean(explored, &cells, |_| true).expect("non-empty cluster");
        out.push(Frontier {
            centroid: explored.cell_center(centroid_cell),
            centroid_cell,
            info_gain: counter.count_in_disk(explored, centroid_cell, radius_cells),
            cells,
        });
    }
    out
}

fn nearest_to_mean<F: Fn(GridCoord) -> bool>(
    grid: &OccupancyGrid,
    cells: &[GridCoord],
    keep: F,
) -> Option<GridCoord> {
    let k = cells.len() as f64;
    let mean = cells
        .iter()
        .fold(Point2::default(), |acc, &c| acc + grid.cell_center(c))
        * (1.0 / k);
    cells.iter().copied().filter(|&c| keep(c)).min_by(|&a, &b| {
        let da = grid.cell_center(a).dist_sq(mean);
        let db = grid.cell_center(b).dist_sq(mean);
        da.partial_cmp(&db).unwrap().then(a.cmp(&b))
    })
}

/// Information gain over navigation cost. Cost is the A* length over Free
/// cells from the pose to the frontier centroid, floored at one cell; an
/// unreachable frontier scores 0.
pub fn frontier_utility(f: &Frontier, pose: &Pose2, explored: &OccupancyGrid) -> f64 {
    let pass = Passable::free(explored);
    match astar(&pass, explored.cell_of(pose.position()), f.centroid_cell) {
        Some((cost, _)) => utility(f.info_gain, cost, explored.resolution()),
        None => 0.0,
    }
}

fn utility(info_gain: usize, cost: f64, resolution: f64) -> f64 {
    info_gain as f64 / cost.max(resolution)
}

/// Index of the best frontier by utility; ties go to the lower centroid
/// (row, then column). None when every frontier scores 0.
pub fn best_frontier(utilities: &[(f64, GridCoord)]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &(u, c)) in utilities.iter().enumerate() {
        if u <= 0.0 {
            continue;
        }
        best = match best {
            None => Some(i),
            Some(b) => {
                let (bu, bc) = utilities[b];
                if u > bu || (u == bu && c < bc) {
                    Some(i)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

#[derive(Debug, Clone)]
pub struct ExploreOutcome {
    pub trajectory: Vec<Pose2>,
    pub explored: OccupancyGrid,
    /// False when the step budget ran out before frontiers were exhausted.
    pub finished: bool,
}

impl ExploreOutcome {
    pub fn distance(&self) -> f64 {
        self.trajectory
            .windows(2)
            .map(|w| w[0].position().dist(w[1].position()))
            .sum()
    }
}

/// Observer invoked after every sensing step with the pose, the robot-frame
/// scan and the explored grid after integration.
pub trait StepObserver {
    fn observe(&mut self, pose: &Pose2, scan: &LaserScan, explored: &OccupancyGrid) -> Result<()>;
}

impl<F> StepObserver for F
where
    F: FnMut(&Pose2, &LaserScan, &OccupancyGrid) -> Result<()>,
{
    fn observe(&mut self, pose: &Pose2, scan: &LaserScan, explored: &OccupancyGrid) -> Result<()> {
        self(pose, scan, explored)
    }
}

struct Target {
    cell: GridCoord,
    plan: VecDeque<Pose2>,
    since_replan: usize,
}

/// Frontier exploration from `start`. Each step senses, integrates the scan
/// and calls `observer`; navigation plans on the explored grid only.
pub fn explore(
    world: &World,
    start: Pose2,
    config: &ExploreConfig,
    observer: &mut dyn StepObserver,
) -> Result<ExploreOutcome> {
    let truth = world.truth();
    if !truth.is_free_at(start.position()) {
        return Err(Error::PoseInObstacle {
            x: start.x,
            y: start.y,
        });
    }
    let mut explored = truth.unknown_like();
    let mut trajectory = vec![start];
    sense(world, &start, config, &mut explored, observer)?;

    let mut target: Option<Target> = None;
    let mut abandoned: HashSet<GridCoord> = HashSet::new();
    let mut steps = 0usize;
    let mut plans = 0usize;
    let finished = loop {
        let pose = *trajectory.last().unwrap();
        let stale = match &target {
            None => true,
            Some(t) => {
                t.plan.is_empty()
                    || t.since_replan >= config.replan_every
                    || !is_frontier_cell(&explored, t.cell)
            }
        };
        if stale {
            if let Some(t) = &target {
                if t.plan.is_empty() && is_frontier_cell(&explored, t.cell) {
                    // arrived without clearing it
                    abandoned.insert(t.cell);
                }
            }
            plans += 1;
            if plans > config.budget.max(1) * 2 {
                break false;
            }
            let planned = match plan_to_frontier(
                world,
                &explored,
                &pose,
                config.robot_radius,
                config,
                &abandoned,
            )? {
                Some(t) => Some(t),
                // squeeze through gaps narrower than the safety margin
                None => plan_to_frontier(world, &explored, &pose, 0.0, config, &abandoned)?,
            };
            match planned {
                Some(t) => target = Some(t),
                None => break true,
            }
        }
        let t = target.as_mut().unwrap();
        let Some(next) = t.plan.pop_front() else {
            continue;
        };
        if steps >= config.budget {
            break false;
        }
        sense(world, &next, config, &mut explored, observer)?;
        trajectory.push(next);
        steps += 1;
        t.since_replan += 1;
    };
    Ok(ExploreOutcome {
        trajectory,
        explored,
        finished,
    })
}

fn sense(
    world: &World,
    pose: &Pose2,
    config: &ExploreConfig,
    explored: &mut OccupancyGrid,
    observer: &mut dyn StepObserver,
) -> Result<()> {
    let scan = raycast_scan(world, pose, config.n_beams, config.max_range)?;
    integrate_scan(explored, pose, &scan);
    observer.observe(pose, &scan, explored)
}

fn plan_to_frontier(
    world: &World,
    explored: &OccupancyGrid,
    pose: &Pose2,
    margin: f64,
    config: &ExploreConfig,
    abandoned: &HashSet<GridCoord>,
) -> Result<Option<Target>> {
    let frontiers = detect_frontiers(explored, config.min_frontier_cells, config.r_info);
    if frontiers.is_empty() {
        return Ok(None);
    }
    let here = explored.cell_of(pose.position());
    let mut pass = Passable::from_mask(explored, explored.clearance_mask(margin, false));
    pass.allow(here);
    let field = DistanceField::compute(&pass, here);

    let mut candidates = Vec::with_capacity(frontiers.len());
    let mut goals = Vec::with_capacity(frontiers.len());
    for f in &frontiers {
        let goal = nearest_to_mean(explored, &f.cells, |c| {
            pass.is_passable(c) && !abandoned.contains(&c) && c != here
        });
        let u = goal
            .map(|g| field.distance(g))
            .filter(|d| d.is_finite())
            .map_or(0.0, |d| utility(f.info_gain, d, explored.resolution()));
        candidates.push((u, f.centroid_cell));
        goals.push(goal);
    }
    let Some(best) = best_frontier(&candidates) else {
        return Ok(None);
    };
    let goal = goals[best].unwrap();
    let cells = field.path_to(goal).expect("reachable goal");
    let mut points: Vec<Point2> = cells.iter().map(|&c| explored.cell_center(c)).collect();
    points[0] = pose.position();
    let mask = pass.mask();
    let points = smooth_path_by(&points, |a, b| {
        explored.segment_clear_by(a, b, 0.0, |i| mask[i])
    });
    let poses = move_along(world, &points, config.step)?;
    Ok(Some(Target {
        cell: goal,
        plan: poses.into_iter().skip(1).collect(),
        since_replan: 0,
    }))
}

/// Fraction of ground-truth Free cells that are Free in `explored`.
pub fn coverage(world: &World, explored: &OccupancyGrid) -> f64 {
    let truth_free = world.truth().count(CellState::Free);
    if truth_free == 0 {
        return 1.0;
    }
    explored.count(CellState::Free) as f64 / truth_free as f64
}
