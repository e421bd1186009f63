//! Octile shortest paths on grids (8-connected, no corner cutting).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::geometry::{polyline_length, Point2};
use crate::grid::{GridCoord, OccupancyGrid};

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    cost: f64,
    index: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on cost, then index for determinism
        other
            .cost
            .partial_cmp(&self.cost)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Passable cells of a grid, one flag per cell.
pub struct Passable<'a> {
    grid: &'a OccupancyGrid,
    mask: Vec<bool>,
}

impl<'a> Passable<'a> {
    /// Free cells are passable.
    pub fn free(grid: &'a OccupancyGrid) -> Self {
        let mask = (0..grid.len())
            .map(|i| grid.is_free(grid.coord_of(i)))
            .collect();
        Self { grid, mask }
    }

    pub fn from_mask(grid: &'a OccupancyGrid, mask: Vec<bool>) -> Self {
        assert_eq!(mask.len(), grid.len());
        Self { grid, mask }
    }

    pub fn grid(&self) -> &OccupancyGrid {
        self.grid
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn is_passable(&self, c: GridCoord) -> bool {
        self.grid.in_bounds(c) && self.mask[self.grid.index(c)]
    }

    /// Mark a cell passable, e.g. a start cell inside an inflated margin.
    pub fn allow(&mut self, c: GridCoord) {
        if self.grid.in_bounds(c) && self.grid.is_free(c) {
            let i = self.grid.index(c);
            self.mask[i] = true;
        }
    }

    fn successors(&self, c: GridCoord, out: &mut Vec<(GridCoord, f64)>) {
        out.clear();
        for dr in -1..=1 {
            for dc in -1..=1 {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let n = GridCoord::new(c.col + dc, c.row + dr);
                if !self.is_passable(n) {
                    continue;
                }
                if dr != 0 && dc != 0 {
                    let a = GridCoord::new(c.col + dc, c.row);
                    let b = GridCoord::new(c.col, c.row + dr);
                    if !self.is_passable(a) || !self.is_passable(b) {
                        continue;
                    }
                    out.push((n, SQRT2));
                } else {
                    out.push((n, 1.0));
                }
            }
        }
    }
}

/// Single-source octile distances (in meters) with parent links.
pub struct DistanceField {
    width: usize,
    resolution: f64,
    dist: Vec<f64>,
    parent: Vec<usize>,
    source: usize,
}

impl DistanceField {
    pub fn compute(pass: &Passable, source: GridCoord) -> Self {
        let grid = pass.grid;
        let n = grid.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut parent = vec![usize::MAX; n];
        let s = grid.index(source);
        let mut heap = BinaryHeap::new();
        if grid.in_bounds(source) {
            dist[s] = 0.0;
            heap.push(Entry {
                cost: 0.0,
                index: s,
            });
        }
        let mut succ = Vec::with_capacity(8);
        while let Some(Entry { cost, index }) = heap.pop() {
            if cost > dist[index] {
                continue;
            }
            pass.successors(grid.coord_of(index), &mut succ);
            for &(nc, w) in &succ {
                let j = grid.index(nc);
                let nd = cost + w;
                if nd < dist[j] {
                    dist[j] = nd;
                    parent[j] = index;
                    heap.push(Entry { cost: nd, index: j });
                }
            }
        }
        Self {
            width: grid.width(),
            resolution: grid.resolution(),
            dist,
            parent,
            source: s,
        }
    }

    pub fn distance(&self, c: GridCoord) -> f64 {
        if c.col < 0 || c.row < 0 || c.col as usize >= self.width {
            return f64::INFINITY;
        }
        let i = c.row as usize * self.width + c.col as usize;
        self.dist
            .get(i)
            .map_or(f64::INFINITY, |d| d * self.resolution)
    }

    /// Cells from the source to `target`, inclusive; None if unreachable.
    pub fn path_to(&self, target: GridCoord) -> Option<Vec<GridCoord>> {
        if !self.distance(target).is_finite() {
            return None;
        }
        let w = self.width;
        let mut i = target.row as usize * w + target.col as usize;
        let mut out = vec![];
        loop {
            out.push(GridCoord::new((i % w) as i32, (i / w) as i32));
            if i == self.source {
                break;
            }
            i = self.parent[i];
        }
        out.reverse();
        Some(out)
    }
}

fn octile(a: GridCoord, b: GridCoord) -> f64 {
    let dx = (a.col - b.col).abs() as f64;
    let dy = (a.row - b.row).abs() as f64;
    dx.max(dy) + (SQRT2 - 1.0) * dx.min(dy)
}

/// A* from `start` to `goal`; returns (length in meters, cells).
pub fn astar(pass: &Passable, start: GridCoord, goal: GridCoord) -> Option<(f64, Vec<GridCoord>)> {
    let grid = pass.grid;
    if !pass.is_passable(start) || !pass.is_passable(goal) {
        return None;
    }
    let n = grid.len();
    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let s = grid.index(start);
    let t = grid.index(goal);
    g[s] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Entry {
        cost: octile(start, goal),
        index: s,
    });
    let mut succ = Vec::with_capacity(8);
    while let Some(Entry { cost, index }) = heap.pop() {
        if index == t {
            break;
        }
        let c = grid.coord_of(index);
        if cost > g[index] + octile(c, goal) + 1e-9 {
            continue;
        }
        pass.successors(c, &mut succ);
        for &(nc, w) in &succ {
            let j = grid.index(nc);
            let ng = g[index] + w;
            if ng < g[j] {
                g[j] = ng;
                parent[j] = index;
                heap.push(Entry {
                    cost: ng + octile(nc, goal),
                    index: j,
                });
            }
        }
    }
    if !g[t].is_finite() {
        return None;
    }
    let mut cells = vec![];
    let mut i = t;
    loop {
        cells.push(grid.coord_of(i));
        if i == s {
            break;
        }
        i = parent[i];
    }
    cells.reverse();
    Some((g[t] * grid.resolution(), cells))
}

/// Greedy line-of-sight shortening: from each kept point, advance while the
/// next point is still visible with `clearance`.
pub fn smooth_path(grid: &OccupancyGrid, points: &[Point2], clearance: f64) -> Vec<Point2> {
    smooth_path_by(points, |a, b| grid.segment_in_free(a, b, clearance))
}

/// [`smooth_path`] with a caller-supplied visibility test.
pub fn smooth_path_by<F: Fn(Point2, Point2) -> bool>(points: &[Point2], visible: F) -> Vec<Point2> {
    if points.len() <= 2 {
        return points.to_vec();
    }
    let mut out = vec![points[0]];
    let mut i = 0;
    while i < points.len() - 1 {
        let mut next = i + 1;
        while next + 1 < points.len() && visible(points[i], points[next + 1]) {
            next += 1;
        }
        out.push(points[next]);
        i = next;
    }
    out
}

/// Shortest grid route between two points on Free cells, smoothed by
/// line of sight; endpoints are the exact query points.
pub fn grid_route(
    grid: &OccupancyGrid,
    a: Point2,
    b: Point2,
    clearance: f64,
) -> Option<Vec<Point2>> {
    if grid.segment_in_free(a, b, clearance) {
        return Some(vec![a, b]);
    }
    let pass = Passable::free(grid);
    let (_, cells) = astar(&pass, grid.cell_of(a), grid.cell_of(b))?;
    let mut pts: Vec<Point2> = Vec::with_capacity(cells.len() + 2);
    pts.push(a);
    pts.extend(
        cells
            .iter()
            .skip(1)
            .take(cells.len().saturating_sub(2))
            .map(|&c| grid.cell_center(c)),
    );
    pts.push(b);
    Some(smooth_path(grid, &pts, clearance))
}

/// Length of [`grid_route`].
pub fn grid_route_length(
    grid: &OccupancyGrid,
    a: Point2,
    b: Point2,
    clearance: f64,
) -> Option<f64> {
    grid_route(grid, a, b, clearance).map(|p| polyline_length(&p))
}
