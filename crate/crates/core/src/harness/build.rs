use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::exploration::{explore, ExploreConfig};
use crate::fht::{BuildStats, BuilderConfig, BuilderState, FhtMap, MapMeta, Sample};
use crate::geometry::{Point2, Pose2};
use crate::grid::OccupancyGrid;
use crate::world_sim::{raycast_scan, sense_descriptor, World};

/// Everything produced by one exploration run with online map building.
#[derive(Debug, Clone)]
pub struct BuiltMap {
    pub map: FhtMap,
    pub explored: OccupancyGrid,
    pub trajectory: Vec<Pose2>,
    pub stats: BuildStats,
    pub finished: bool,
}

/// Seeded start position: a Free cell at least `margin` from obstacles.
pub fn pick_start(world: &World, margin: f64, seed: u64) -> Point2 {
    let truth = world.truth();
    let mask = truth.clearance_mask(margin, true);
    let cells: Vec<_> = (0..truth.len())
        .filter(|&i| mask[i])
        .map(|i| truth.coord_of(i))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = match cells.choose(&mut rng) {
        Some(&c) => c,
        None => world.free_cells()[0],
    };
    truth.cell_center(c)
}

/// Explore `world` from `start`, feeding every step to the builder.
/// `on_step` sees the map after each build step.
pub fn build_map_with(
    world: &World,
    start: Point2,
    explore_cfg: &ExploreConfig,
    builder_cfg: &BuilderConfig,
    descriptor_dim: usize,
    on_step: &mut dyn FnMut(&FhtMap, &OccupancyGrid) -> Result<()>,
) -> Result<BuiltMap> {
    let mut state = BuilderState::new(builder_cfg.clone())?;
    let mut map = FhtMap::new(MapMeta::new(descriptor_dim, world.resolution()));
    let n_bins = builder_cfg.n_bins;
    let mut observer = |pose: &Pose2,
                        _scan: &crate::world_sim::LaserScan,
                        explored: &OccupancyGrid|
     -> Result<()> {
        let p = pose.position();
        let d = sense_descriptor(world, p, explore_cfg.max_range, descriptor_dim)?;
        let scan = raycast_scan(
            world,
            &Pose2::new(p.x, p.y, 0.0),
            explore_cfg.n_beams,
            explore_cfg.max_range,
        )?;
        state.build_step(&mut map, Sample::new(*pose, d, scan, n_bins), explored)?;
        on_step(&map, explored)
    };
    let outcome = explore(
        world,
        Pose2::new(start.x, start.y, 0.0),
        explore_cfg,
        &mut observer,
    )?;
    state.finish(&mut map, &outcome.explored)?;
    on_step(&map, &outcome.explored)?;
    Ok(BuiltMap {
        map,
        explored: outcome.explored,
        trajectory: outcome.trajectory,
        stats: state.stats(),
        finished: outcome.finished,
    })
}

pub fn build_map(
    world: &World,
    start: Point2,
    explore_cfg: &ExploreConfig,
    builder_cfg: &BuilderConfig,
    descriptor_dim: usize,
) -> Result<BuiltMap> {
    build_map_with(
        world,
        start,
        explore_cfg,
        builder_cfg,
        descriptor_dim,
        &mut |_, _| Ok(()),
    )
}
