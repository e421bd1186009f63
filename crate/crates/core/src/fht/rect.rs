use crate::error::{Error, Result};
use crate::geometry::{Point2, Rect};
use crate::grid::{GridCoord, OccupancyGrid};

/// Largest axis-aligned block of Free cells grown side by side from the
/// cell under `center`. Each side grows one cell at a time until it meets a
/// non-Free cell or its extent from the center cell would exceed
/// `max_half_extent`.
pub fn grow_free_rect(
    explored: &OccupancyGrid,
    center: Point2,
    max_half_extent: f64,
) -> Result<Rect> {
    let c = explored.cell_of(center);
    if !explored.is_free(c) {
        return Err(Error::NotFree {
            x: center.x,
            y: center.y,
        });
    }
    let cap = (max_half_extent / explored.resolution() + 1e-9).floor() as i32;
    let (mut lo, mut hi) = (c, c);
    // +x, -x, +y, -y
    let mut frozen = [false; 4];
    let row_free = |row: i32, c0: i32, c1: i32| {
        (c0..=c1).all(|col| explored.is_free(GridCoord::new(col, row)))
    };
    let col_free = |col: i32, r0: i32, r1: i32| {
        (r0..=r1).all(|row| explored.is_free(GridCoord::new(col, row)))
    };
    while frozen.iter().any(|f| !f) {
        for (side, done) in frozen.iter_mut().enumerate() {
            if *done {
                continue;
            }
            let grown = match side {
                0 => hi.col + 1 - c.col <= cap && col_free(hi.col + 1, lo.row, hi.row),
                1 => c.col - (lo.col - 1) <= cap && col_free(lo.col - 1, lo.row, hi.row),
                2 => hi.row + 1 - c.row <= cap && row_free(hi.row + 1, lo.col, hi.col),
                _ => c.row - (lo.row - 1) <= cap && row_free(lo.row - 1, lo.col, hi.col),
            };
            if !grown {
                *done = true;
                continue;
            }
            match side {
                0 => hi.col += 1,
                1 => lo.col -= 1,
                2 => hi.row += 1,
                _ => lo.row -= 1,
            }
        }
    }
    Ok(explored.span_rect(lo, hi))
}
