//! Dense occupancy grids, exact DDA cell traversal and free-space queries.

use serde::{Deserialize, Serialize};

use crate::geometry::{segment_rect_distance, Point2, Pose2, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellState {
    Free,
    Occupied,
    Unknown,
}

/// Integer cell coordinate. `row` grows with y, `col` grows with x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridCoord {
    pub row: i32,
    pub col: i32,
}

impl GridCoord {
    pub const fn new(col: i32, row: i32) -> Self {
        Self { row, col }
    }
}

/// Row-major grid of [`CellState`]. Cell `(col, row)` covers
/// `[ox + col·res, ox + (col+1)·res) × [oy + row·res, oy + (row+1)·res)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    resolution: f64,
    origin: Pose2,
    cells: Vec<CellState>,
}

impl OccupancyGrid {
    pub fn new(width: usize, height: usize, resolution: f64, fill: CellState) -> Self {
        assert!(
            width >= 1 && height >= 1,
            "grid must have at least one cell"
        );
        assert!(resolution > 0.0, "resolution must be positive");
        Self {
            width,
            height,
            resolution,
            origin: Pose2::default(),
            cells: vec![fill; width * height],
        }
    }

    pub fn with_origin(mut self, origin: Pose2) -> Self {
        self.origin = origin;
        self
    }

    /// Same geometry, every cell Unknown.
    pub fn unknown_like(&self) -> Self {
        Self {
            cells: vec![CellState::Unknown; self.cells.len()],
            ..self.clone()
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> Pose2 {
        self.origin
    }

    pub fn cells(&self) -> &[CellState] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn in_bounds(&self, c: GridCoord) -> bool {
        c.col >= 0 && c.row >= 0 && (c.col as usize) < self.width && (c.row as usize) < self.height
    }

    pub fn index(&self, c: GridCoord) -> usize {
        c.row as usize * self.width + c.col as usize
    }

    pub fn coord_of(&self, index: usize) -> GridCoord {
        GridCoord::new((index % self.width) as i32, (index / self.width) as i32)
    }

    pub fn get(&self, c: GridCoord) -> Option<CellState> {
        self.in_bounds(c).then(|| self.cells[self.index(c)])
    }

    pub fn set(&mut self, c: GridCoord, s: CellState) {
        let i = self.index(c);
        self.cells[i] = s;
    }

    pub fn is_free(&self, c: GridCoord) -> bool {
        self.get(c) == Some(CellState::Free)
    }

    pub fn count(&self, s: CellState) -> usize {
        self.cells.iter().filter(|&&c| c == s).count()
    }

    pub fn cell_of(&self, p: Point2) -> GridCoord {
        GridCoord::new(
            ((p.x - self.origin.x) / self.resolution).floor() as i32,
            ((p.y - self.origin.y) / self.resolution).floor() as i32,
        )
    }

    pub fn cell_center(&self, c: GridCoord) -> Point2 {
        Point2::new(
            self.origin.x + (c.col as f64 + 0.5) * self.resolution,
            self.origin.y + (c.row as f64 + 0.5) * self.resolution,
        )
    }

    pub fn cell_rect(&self, c: GridCoord) -> Rect {
        let x0 = self.origin.x + c.col as f64 * self.resolution;
        let y0 = self.origin.y + c.row as f64 * self.resolution;
        Rect::new(x0, y0, x0 + self.resolution, y0 + self.resolution)
    }

    /// Map-frame rectangle covered by the inclusive cell range.
    pub fn span_rect(&self, lo: GridCoord, hi: GridCoord) -> Rect {
        let a = self.cell_rect(lo);
        let b = self.cell_rect(hi);
        Rect::new(a.xmin, a.ymin, b.xmax, b.ymax)
    }

    pub fn is_free_at(&self, p: Point2) -> bool {
        self.is_free(self.cell_of(p))
    }

    pub fn neighbors4(&self, c: GridCoord) -> impl Iterator<Item = GridCoord> + '_ {
        const D: [(i32, i32); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
        D.iter()
            .map(move |&(dc, dr)| GridCoord::new(c.col + dc, c.row + dr))
            .filter(move |&n| self.in_bounds(n))
    }

    pub fn neighbors8(&self, c: GridCoord) -> impl Iterator<Item = GridCoord> + '_ {
        const D: [(i32, i32); 8] = [
            (1, 0),
            (-1, 0),
            (0, 1),
            (0, -1),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
        ];
        D.iter()
            .map(move |&(dc, dr)| GridCoord::new(c.col + dc, c.row + dr))
            .filter(move |&n| self.in_bounds(n))
    }

    /// Exact DDA traversal of the ray `origin + t·(cos a, sin a)` for
    /// `t ∈ [0, max_t]`, in meters.
    pub fn traverse(&self, origin: Point2, angle: f64, max_t: f64) -> RayCells {
        RayCells::new(self, origin, angle, max_t)
    }

    /// True iff every cell within `clearance` of the segment `ab` is Free.
    /// Cells outside the grid and Unknown cells count as not free.
    pub fn segment_in_free(&self, a: Point2, b: Point2, clearance: f64) -> bool {
        let cells = &self.cells;
        self.segment_clear_by(a, b, clearance, |i| cells[i] == CellState::Free)
    }

    /// [`segment_in_free`](Self::segment_in_free) with a caller-supplied
    /// passability test on cell indices.
    pub fn segment_clear_by<F: Fn(usize) -> bool>(
        &self,
        a: Point2,
        b: Point2,
        clearance: f64,
        passable: F,
    ) -> bool {
        // canonical endpoint order makes the test exactly symmetric
        let (a, b) = if (a.x, a.y) <= (b.x, b.y) {
            (a, b)
        } else {
            (b, a)
        };
        let res = self.resolution;
        let ymin = a.y.min(b.y) - clearance;
        let ymax = a.y.max(b.y) + clearance;
        let r0 = ((ymin - self.origin.y) / res).floor() as i64;
        let r1 = ((ymax - self.origin.y) / res).floor() as i64;
        for row in r0..=r1 {
            let band_lo = self.origin.y + row as f64 * res - clearance;
            let band_hi = band_lo + res + 2.0 * clearance;
            let Some((xlo, xhi)) = x_span_in_band(a, b, band_lo, band_hi) else {
                continue;
            };
            let c0 = ((xlo - clearance - self.origin.x) / res).floor() as i64;
            let c1 = ((xhi + clearance - self.origin.x) / res).floor() as i64;
            for col in c0..=c1 {
                let c = GridCoord::new(col as i32, row as i32);
                if row < 0 || col < 0 || !self.in_bounds(c) {
                    // outside the grid; only matters if actually within clearance
                    let d = segment_rect_distance(a, b, &self.cell_rect(c));
                    if within(d, clearance) {
                        return false;
                    }
                    continue;
                }
                if passable(self.index(c)) {
                    continue;
                }
                let d = segment_rect_distance(a, b, &self.cell_rect(c));
                if within(d, clearance) {
                    return false;
                }
            }
        }
        true
    }

    /// Cells that are Free and farther than `radius` (meters) from every
    /// Occupied cell, and also from Unknown cells when `unknown_blocks`.
    pub fn clearance_mask(&self, radius: f64, unknown_blocks: bool) -> Vec<bool> {
        let r = (radius / self.resolution).ceil() as i32;
        let blocked = |s: CellState| match s {
            CellState::Occupied => true,
            CellState::Unknown => unknown_blocks,
            CellState::Free => false,
        };
        let mut mask: Vec<bool> = self.cells.iter().map(|&s| s == CellState::Free).collect();
        if r <= 0 {
            return mask;
        }
        // blocked cell centers within radius + half a cell of a cell center
        let reach = radius / self.resolution + 0.5;
        let offsets: Vec<(i32, i32)> = (-r..=r)
            .flat_map(|dr| (-r..=r).map(move |dc| (dc, dr)))
            .filter(|&(dc, dr)| ((dc * dc + dr * dr) as f64) <= reach * reach)
            .collect();
        for (i, &s) in self.cells.iter().enumerate() {
            if !blocked(s) {
                continue;
            }
            let c = self.coord_of(i);
            for &(dc, dr) in &offsets {
                let n = GridCoord::new(c.col + dc, c.row + dr);
                if self.in_bounds(n) {
                    let j = self.index(n);
                    mask[j] = false;
                }
            }
        }
        mask
    }
}

fn within(d: f64, clearance: f64) -> bool {
    d <= 0.0 || d < clearance
}

// x-extent of the part of segment ab whose y lies in [lo, hi].
fn x_span_in_band(a: Point2, b: Point2, lo: f64, hi: f64) -> Option<(f64, f64)> {
    let dy = b.y - a.y;
    let (t0, t1) = if dy.abs() < 1e-15 {
        if a.y < lo || a.y > hi {
            return None;
        }
        (0.0, 1.0)
    } else {
        let ta = (lo - a.y) / dy;
        let tb = (hi - a.y) / dy;
        let (ta, tb) = if ta < tb { (ta, tb) } else { (tb, ta) };
        let t0 = ta.max(0.0);
        let t1 = tb.min(1.0);
        if t0 > t1 {
            return None;
        }
        (t0, t1)
    };
    let x0 = a.x + (b.x - a.x) * t0;
    let x1 = a.x + (b.x - a.x) * t1;
    Some((x0.min(x1), x0.max(x1)))
}

/// Cells crossed by a ray, with the parametric distance at which each is entered.
pub struct RayCells {
    cell: GridCoord,
    step: (i32, i32),
    t_max: (f64, f64),
    t_delta: (f64, f64),
    t_entry: f64,
    max_t: f64,
    width: i32,
    height: i32,
    done: bool,
}

impl RayCells {
    fn new(grid: &OccupancyGrid, origin: Point2, angle: f64, max_t: f64) -> Self {
        let res = grid.resolution;
        let (dy, dx) = angle.sin_cos();
        let gx = (origin.x - grid.origin.x) / res;
        let gy = (origin.y - grid.origin.y) / res;
        let cell = GridCoord::new(gx.floor() as i32, gy.floor() as i32);
        let axis = |g: f64, d: f64, c: i32| -> (i32, f64, f64) {
            if d > 0.0 {
                (1, ((c as f64 + 1.0 - g) / d) * res, res / d)
            } else if d < 0.0 {
                (-1, ((g - c as f64) / -d) * res, res / -d)
            } else {
                (0, f64::INFINITY, f64::INFINITY)
            }
        };
        let (sx, tmx, tdx) = axis(gx, dx, cell.col);
        let (sy, tmy, tdy) = axis(gy, dy, cell.row);
        Self {
            cell,
            step: (sx, sy),
            t_max: (tmx, tmy),
            t_delta: (tdx, tdy),
            t_entry: 0.0,
            max_t,
            width: grid.width as i32,
            height: grid.height as i32,
            done: false,
        }
    }
}

impl Iterator for RayCells {
    /// `(cell, t_entry)` in traversal order; stops when leaving the grid or
    /// when the next entry lies beyond `max_t`.
    type Item = (GridCoord, f64);

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let c = self.cell;
        if c.col < 0
            || c.row < 0
            || c.col >= self.width
            || c.row >= self.height
            || self.t_entry > self.max_t
        {
            self.done = true;
            return None;
        }
        let out = (c, self.t_entry);
        if self.t_max.0 < self.t_max.1 {
            self.t_entry = self.t_max.0;
            self.cell.col += self.step.0;
            self.t_max.0 += self.t_delta.0;
        } else {
            self.t_entry = self.t_max.1;
            self.cell.row += self.step.1;
            self.t_max.1 += self.t_delta.1;
        }
        Some(out)
    }
}
