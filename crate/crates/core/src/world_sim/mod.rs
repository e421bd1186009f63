//! Deterministic 2D grid worlds: ground truth, simulated sensors and motion.
//!
//! A world file is ASCII. The first line is `world <width> <height> <resolution>`,
//! followed by `height` rows of exactly `width` characters: `.` is Free, `#` is
//! Occupied with texture 0.5 and a digit `d` is Occupied with texture `d/9`.
//! The first grid row in the file is grid row 0 (smallest y).

mod descriptor;
mod motion;
mod random;
mod scan;

pub use descriptor::{sense_descriptor, Descriptor};
pub use motion::move_along;
pub use random::{random_world, RandomWorldConfig};
pub use scan::{integrate_scan, raycast_scan, LaserScan};

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::grid::{CellState, GridCoord, OccupancyGrid};

/// Texture assigned to `#` cells.
pub const DEFAULT_TEXTURE: f32 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub name: String,
    truth: OccupancyGrid,
    texture: Vec<f32>,
}

impl World {
    /// Build from a ground-truth grid; Occupied cells get [`DEFAULT_TEXTURE`].
    pub fn from_grid(name: impl Into<String>, truth: OccupancyGrid) -> Self {
        assert!(
            truth.count(CellState::Unknown) == 0,
            "ground truth may not contain unknown cells"
        );
        let texture = truth
            .cells()
            .iter()
            .map(|&s| {
                if s == CellState::Occupied {
                    DEFAULT_TEXTURE
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            name: name.into(),
            truth,
            texture,
        }
    }

    pub fn truth(&self) -> &OccupancyGrid {
        &self.truth
    }

    pub fn resolution(&self) -> f64 {
        self.truth.resolution()
    }

    pub fn texture(&self, c: GridCoord) -> Option<f32> {
        (self.truth.get(c) == Some(CellState::Occupied)).then(|| self.texture[self.truth.index(c)])
    }

    /// Mark a cell Occupied with the given texture in `[0, 1]`.
    pub fn set_occupied(&mut self, c: GridCoord, texture: f32) {
        self.truth.set(c, CellState::Occupied);
        let i = self.truth.index(c);
        self.texture[i] = texture.clamp(0.0, 1.0);
    }

    pub fn set_free(&mut self, c: GridCoord) {
        self.truth.set(c, CellState::Free);
        let i = self.truth.index(c);
        self.texture[i] = 0.0;
    }

    pub fn is_free_at(&self, p: Point2) -> bool {
        self.truth.is_free_at(p)
    }

    /// Centers of all Free cells.
    pub fn free_cells(&self) -> Vec<GridCoord> {
        (0..self.truth.len())
            .map(|i| self.truth.coord_of(i))
            .filter(|&c| self.truth.is_free(c))
            .collect()
    }
}

/// Parse a world file.
pub fn load_world(name: &str, text: &str) -> Result<World> {
    let err = |line: usize, column: usize, msg: &str| Error::WorldParse {
        line,
        column,
        msg: msg.to_string(),
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| err(1, 1, "missing header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "world" {
        return Err(err(
            1,
            1,
            "missing header `world <width> <height> <resolution>`",
        ));
    }
    let width: usize = fields[1].parse().map_err(|_| err(1, 7, "bad width"))?;
    let height: usize = fields[2].parse().map_err(|_| err(1, 7, "bad height"))?;
    let resolution: f64 = fields[3].parse().map_err(|_| err(1, 7, "bad resolution"))?;
    if width == 0 || height == 0 {
        return Err(err(1, 7, "width and height must be at least 1"));
    }
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(err(1, 7, "resolution must be positive"));
    }

    let mut world = World::from_grid(
        name,
        OccupancyGrid::new(width, height, resolution, CellState::Free),
    );
    let mut row = 0usize;
    for (ln, line) in lines {
        let line_no = ln + 1;
        if row == height {
            if line.trim().is_empty() {
                continue;
            }
            return Err(err(line_no, 1, "more rows than the header declares"));
        }
        let chars: Vec<char> = line.chars().collect();
        if chars.len() != width {
            return Err(err(
                line_no,
                chars.len().min(width) + 1,
                &format!("row has {} characters, expected {}", chars.len(), width),
            ));
        }
        for (col, ch) in chars.into_iter().enumerate() {
            let c = GridCoord::new(col as i32, row as i32);
            match ch {
                '.' => {}
                '#' => world.set_occupied(c, DEFAULT_TEXTURE),
                '0'..='9' => world.set_occupied(c, (ch as u8 - b'0') as f32 / 9.0),
                _ => return Err(err(line_no, col + 1, &format!("unknown character {ch:?}"))),
            }
        }
        row += 1;
    }
    if row < height {
        return Err(err(
            row + 2,
            1,
            &format!("expected {height} rows, found {row}"),
        ));
    }
    Ok(world)
}

/// Serialize a world in the file format accepted by [`load_world`].
pub fn save_world(world: &World) -> String {
    let g = world.truth();
    let mut out = String::with_capacity((g.width() + 1) * (g.height() + 1));
    let _ = writeln!(out, "world {} {} {}", g.width(), g.height(), g.resolution());
    for row in 0..g.height() as i32 {
        for col in 0..g.width() as i32 {
            let c = GridCoord::new(col, row);
            let ch = match world.texture(c) {
                None => '.',
                Some(t) if t == DEFAULT_TEXTURE => '#',
                Some(t) => (b'0' + (t * 9.0).round().clamp(0.0, 9.0) as u8) as char,
            };
            out.push(ch);
        }
        out.push('\n');
    }
    out
}
