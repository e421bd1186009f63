use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geometry::Point2;

use super::scan::first_hit_cell;
use super::World;

const BIN_FLOOR: f64 = 1e-6;

/// Unit-norm place descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    values: Vec<f32>,
}

impl Descriptor {
    /// Normalizes `values`; an all-zero input is rejected.
    pub fn from_unnormalized(values: &[f64]) -> Option<Self> {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return None;
        }
        Some(Self {
            values: values.iter().map(|v| (v / norm) as f32).collect(),
        })
    }

    /// Takes stored components as-is (e.g. from a map file).
    pub fn from_raw(values: Vec<f32>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn dot(&self, other: &Descriptor) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a as f64 * b as f64)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

/// Reference heading-invariant descriptor: `4·dim` rays over 360° feed a
/// histogram of normalized hit ranges and a histogram of hit textures
/// (`dim/2` bins each); every bin gets a small floor before L2 normalization.
pub fn sense_descriptor(
    world: &World,
    position: Point2,
    max_range: f64,
    dim: usize,
) -> Result<Descriptor> {
    assert!(
        dim >= 2 && dim.is_multiple_of(2),
        "descriptor dimension must be even"
    );
    let grid = world.truth();
    if !grid.is_free_at(position) {
        return Err(Error::NotFree {
            x: position.x,
            y: position.y,
        });
    }
    let half = dim / 2;
    let n_rays = 4 * dim;
    let mut hist = vec![BIN_FLOOR; dim];
    let bin = |v: f64| ((v * half as f64).floor().max(0.0) as usize).min(half - 1);
    for k in 0..n_rays {
        let angle = TAU * k as f64 / n_rays as f64;
        if let Some((cell, t)) = first_hit_cell(grid, position, angle, max_range) {
            hist[bin(t / max_range)] += 1.0;
            let tex = world.texture(cell).unwrap_or(0.0) as f64;
            hist[half + bin(tex)] += 1.0;
        }
    }
    Ok(Descriptor::from_unnormalized(&hist).expect("floored histogram is non-zero"))
}
