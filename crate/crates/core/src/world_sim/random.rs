use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{CellState, GridCoord, OccupancyGrid};

use super::World;

/// Shape of a [`random_world`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomWorldConfig {
    pub resolution: f64,
    /// Room extent range in meters, both axes.
    pub size: (f64, f64),
    pub max_obstacles: usize,
    /// Obstacle side range in meters.
    pub obstacle_side: (f64, f64),
    /// Wall texture changes every this many meters.
    pub texture_run: f64,
}

impl Default for RandomWorldConfig {
    fn default() -> Self {
        Self {
            resolution: 0.1,
            size: (8.0, 16.0),
            max_obstacles: 10,
            obstacle_side: (0.4, 1.6),
            texture_run: 1.5,
        }
    }
}

/// Rectangular room with a textured two-cell wall and random box
/// obstacles. Free cells outside the largest 4-connected free region are
/// filled in, so every free cell is reachable.
pub fn random_world(seed: u64, cfg: &RandomWorldConfig) -> World {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = |m: f64| (m / cfg.resolution).round().max(1.0) as i32;
    let w = cells(rng.gen_range(cfg.size.0..=cfg.size.1)).max(6);
    let h = cells(rng.gen_range(cfg.size.0..=cfg.size.1)).max(6);
    let mut world = World::from_grid(
        format!("random_{seed}"),
        OccupancyGrid::new(w as usize, h as usize, cfg.resolution, CellState::Free),
    );

    // walk the border once so texture runs continue around corners
    let mut border = vec![];
    border.extend((0..w).map(|c| (c, 0)));
    border.extend((1..h).map(|r| (w - 1, r)));
    border.extend((0..w - 1).rev().map(|c| (c, h - 1)));
    border.extend((1..h - 1).rev().map(|r| (0, r)));
    let run = cells(cfg.texture_run) as usize;
    let mut texture = 0.0;
    for (k, &(c, r)) in border.iter().enumerate() {
        if k % run == 0 {
            texture = rng.gen_range(0..10) as f32 / 9.0;
        }
        world.set_occupied(GridCoord::new(c, r), texture);
        let inner = GridCoord::new(c.clamp(1, w - 2), r.clamp(1, h - 2));
        world.set_occupied(inner, texture);
    }

    for _ in 0..rng.gen_range(0..=cfg.max_obstacles) {
        let bw = cells(rng.gen_range(cfg.obstacle_side.0..=cfg.obstacle_side.1));
        let bh = cells(rng.gen_range(cfg.obstacle_side.0..=cfg.obstacle_side.1));
        if bw >= w - 4 || bh >= h - 4 {
            continue;
        }
        let c0 = rng.gen_range(2..w - 2 - bw);
        let r0 = rng.gen_range(2..h - 2 - bh);
        let t = rng.gen_range(0..10) as f32 / 9.0;
        for r in r0..r0 + bh {
            for c in c0..c0 + bw {
                world.set_occupied(GridCoord::new(c, r), t);
            }
        }
    }

    let keep = largest_free_region(world.truth());
    for (i, &kept) in keep.iter().enumerate() {
        if world.truth().cells()[i] == CellState::Free && !kept {
            world.set_occupied(world.truth().coord_of(i), super::DEFAULT_TEXTURE);
        }
    }
    world
}

fn largest_free_region(g: &OccupancyGrid) -> Vec<bool> {
    let mut label = vec![usize::MAX; g.len()];
    let mut sizes = vec![];
    for start in 0..g.len() {
        if label[start] != usize::MAX || g.cells()[start] != CellState::Free {
            continue;
        }
        let id = sizes.len();
        let mut size = 0;
        let mut queue = VecDeque::from([start]);
        label[start] = id;
        while let Some(i) = queue.pop_front() {
            size += 1;
            for n in g.neighbors4(g.coord_of(i)) {
                let j = g.index(n);
                if label[j] == usize::MAX && g.cells()[j] == CellState::Free {
                    label[j] = id;
                    queue.push_back(j);
                }
            }
        }
        sizes.push(size);
    }
    let best = (0..sizes.len()).max_by_key(|&k| (sizes[k], std::cmp::Reverse(k)));
    label.iter().map(|&l| Some(l) == best).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_and_connected() {
        let cfg = RandomWorldConfig::default();
        for seed in 0..20 {
            let a = random_world(seed, &cfg);
            assert_eq!(a, random_world(seed, &cfg));
            let g = a.truth();
            let free = g.count(CellState::Free);
            assert!(free > 0);
            assert_eq!(largest_free_region(g).iter().filter(|&&k| k).count(), free);
            // closed border
            for c in 0..g.width() as i32 {
                assert!(!g.is_free(GridCoord::new(c, 0)));
                assert!(!g.is_free(GridCoord::new(c, g.height() as i32 - 1)));
            }
        }
    }
}
