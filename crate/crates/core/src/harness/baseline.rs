//! Run-length encoding of an occupancy grid, the storage baseline.
//!
//! Layout: width and height as little-endian u32, resolution as f64, then
//! row-major runs of `(state byte, LEB128 run length)`.

use crate::error::{Error, Result};
use crate::grid::{CellState, OccupancyGrid};

fn state_byte(s: CellState) -> u8 {
    match s {
        CellState::Unknown => 0,
        CellState::Free => 1,
        CellState::Occupied => 2,
    }
}

pub fn encode_grid_rle(grid: &OccupancyGrid) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&(grid.width() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.height() as u32).to_le_bytes());
    out.extend_from_slice(&grid.resolution().to_le_bytes());
    let cells = grid.cells();
    let mut i = 0;
    while i < cells.len() {
        let s = cells[i];
        let mut n = 1usize;
        while i + n < cells.len() && cells[i + n] == s {
            n += 1;
        }
        out.push(state_byte(s));
        let mut v = n;
        loop {
            let b = (v & 0x7f) as u8;
            v >>= 7;
            if v == 0 {
                out.push(b);
                break;
            }
            out.push(b | 0x80);
        }
        i += n;
    }
    out
}

pub fn grid_rle_bytes(grid: &OccupancyGrid) -> usize {
    encode_grid_rle(grid).len()
}

pub fn decode_grid_rle(bytes: &[u8]) -> Result<OccupancyGrid> {
    let bad = |m: &str| Error::MalformedMap(m.to_string());
    if bytes.len() < 16 {
        return Err(bad("grid header truncated"));
    }
    let width = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let resolution = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let mut grid = OccupancyGrid::new(width, height, resolution, CellState::Unknown);
    let mut pos = 16;
    let mut idx = 0;
    while pos < bytes.len() {
        let state = match bytes[pos] {
            0 => CellState::Unknown,
            1 => CellState::Free,
            2 => CellState::Occupied,
            _ => return Err(bad("bad cell state")),
        };
        pos += 1;
        let mut n = 0usize;
        let mut shift = 0;
        loop {
            let b = *bytes.get(pos).ok_or_else(|| bad("run length truncated"))?;
            pos += 1;
            n |= ((b & 0x7f) as usize) << shift;
            shift += 7;
            if b & 0x80 == 0 {
                break;
            }
        }
        if idx + n > grid.len() {
            return Err(bad("runs exceed grid size"));
        }
        for k in idx..idx + n {
            grid.set(grid.coord_of(k), state);
        }
        idx += n;
    }
    if idx != grid.len() {
        return Err(bad("runs do not cover the grid"));
    }
    Ok(grid)
}
