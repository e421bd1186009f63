use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fht::{storage_bytes, FhtMap, NodeKind};
use crate::geometry::{Point2, Transform2};
use crate::grid::{GridCoord, OccupancyGrid};
use crate::planning::{execute_with_skip, plan};
use crate::relocalization::{random_walk, relocalize};
use crate::world_sim::{load_world, World};

use super::baseline::grid_rle_bytes;
use super::build::{build_map, pick_start, BuiltMap};
use super::config::{ExperimentConfig, Mode};
use super::metrics::{
    grid_baseline_length, metric_c_path, metric_reloc_errors, metric_success, summarize, Summary,
};

// hidden offsets have a translation norm in this range, meters
const OFFSET_RANGE: (f64, f64) = (3.0, 10.0);
// distance kept from obstacles by trial start and goal positions, meters
const TRIAL_MARGIN: f64 = 0.3;
const WALK_STEP: f64 = 0.25;
const MIN_PAIR_DISTANCE: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelocTrial {
    pub trial: usize,
    pub failed: bool,
    pub error: Option<String>,
    pub converged: bool,
    pub success: bool,
    pub eps_t: f64,
    pub eps_theta_deg: f64,
    pub abs_t: f64,
    /// Distance walked until convergence; the whole walk when the trial
    /// did not succeed.
    pub l_reloca: f64,
    pub n_used: usize,
    pub offset: [f64; 3],
    pub estimate: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanTrial {
    pub pair: usize,
    pub failed: bool,
    /// Goal unreachable on the explored grid; excluded from the summary.
    pub discarded: bool,
    pub error: Option<String>,
    pub start: [f64; 2],
    pub goal: [f64; 2],
    pub s_topo: f64,
    pub s_grid: f64,
    pub c_path: f64,
    pub path: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub world: String,
    pub mode: Mode,
    pub seed: u64,
    pub main_nodes: usize,
    pub support_nodes: usize,
    pub edges: usize,
    pub storage_bytes: usize,
    pub grid_storage_bytes: usize,
    pub exploration_length_m: f64,
    pub success_rate: Option<f64>,
    pub l_reloca: Summary,
    pub eps_t: Summary,
    pub eps_theta_deg: Summary,
    pub c_path: Summary,
    pub failed_trials: usize,
    pub reloc_trials: Vec<RelocTrial>,
    pub plan_trials: Vec<PlanTrial>,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct")
    }
}

/// Load the configured world and run the experiment on it.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    let text = std::fs::read_to_string(&cfg.world)?;
    let name = cfg
        .world
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("world");
    let world = load_world(name, &text)?;
    run_on_world(cfg, &world)
}

/// Build the map for `cfg.mode`; the exploration start is drawn from the seed.
pub fn build_for(cfg: &ExperimentConfig, world: &World) -> Result<BuiltMap> {
    cfg.validate()?;
    let start = pick_start(world, 0.5, cfg.seed);
    build_map(
        world,
        start,
        &cfg.explore_config(),
        &cfg.builder_config(),
        cfg.descriptor_dim,
    )
}

pub fn run_on_world(cfg: &ExperimentConfig, world: &World) -> Result<MetricsReport> {
    let built = build_for(cfg, world)?;
    Ok(evaluate(cfg, world, &built))
}

/// Relocalization trials and planning pairs on an already built map.
pub fn evaluate(cfg: &ExperimentConfig, world: &World, built: &BuiltMap) -> MetricsReport {
    let map = &built.map;
    let reloc_trials: Vec<RelocTrial> = (0..cfg.reloc_trials)
        .map(|i| reloc_trial(cfg, world, map, i))
        .collect();
    let plan_trials: Vec<PlanTrial> = (0..cfg.plan_pairs)
        .map(|i| plan_trial(cfg, world, built, i))
        .collect();

    let ok: Vec<&RelocTrial> = reloc_trials.iter().filter(|t| !t.failed).collect();
    let col = |f: fn(&RelocTrial) -> f64| ok.iter().map(|t| f(t)).collect::<Vec<f64>>();
    let c_paths: Vec<f64> = plan_trials
        .iter()
        .filter(|t| !t.failed && !t.discarded)
        .map(|t| t.c_path)
        .collect();
    let failed_trials = reloc_trials.iter().filter(|t| t.failed).count()
        + plan_trials.iter().filter(|t| t.failed).count();

    MetricsReport {
        world: world.name.clone(),
        mode: cfg.mode,
        seed: cfg.seed,
        main_nodes: map.count(NodeKind::Main),
        support_nodes: map.count(NodeKind::Support),
        edges: map.edges().len(),
        storage_bytes: storage_bytes(map),
        grid_storage_bytes: grid_rle_bytes(&built.explored),
        exploration_length_m: built
            .trajectory
            .windows(2)
            .map(|w| w[0].position().dist(w[1].position()))
            .sum(),
        success_rate: (!reloc_trials.is_empty()).then(|| {
            reloc_trials.iter().filter(|t| t.success).count() as f64 / reloc_trials.len() as f64
        }),
        l_reloca: summarize(&col(|t| t.l_reloca)),
        eps_t: summarize(&col(|t| t.eps_t)),
        eps_theta_deg: summarize(&col(|t| t.eps_theta_deg)),
        c_path: summarize(&c_paths),
        failed_trials,
        reloc_trials,
        plan_trials,
    }
}

fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn panic_text(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".into())
}

fn run_guarded<T>(f: impl FnOnce() -> Result<T>) -> std::result::Result<T, String> {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(v)) => Ok(v),
        Ok(Err(e)) => Err(e.to_string()),
        Err(p) => Err(format!("panicked: {}", panic_text(p))),
    }
}

/// Hidden map-to-odometry offset for relocalization trial `i`.
pub fn trial_offset(seed: u64, i: usize) -> Transform2 {
    let mut rng = trial_rng(seed, 1000 + i as u64);
    let r = rng.gen_range(OFFSET_RANGE.0..=OFFSET_RANGE.1);
    let phi = rng.gen_range(-PI..PI);
    Transform2::new(r * phi.cos(), r * phi.sin(), rng.gen_range(-PI..PI))
}

fn passable_cells(grid: &OccupancyGrid) -> Vec<GridCoord> {
    let mask = grid.clearance_mask(TRIAL_MARGIN, true);
    (0..grid.len())
        .filter(|&i| mask[i])
        .map(|i| grid.coord_of(i))
        .collect()
}

pub fn reloc_trial(cfg: &ExperimentConfig, world: &World, map: &FhtMap, i: usize) -> RelocTrial {
    let offset = trial_offset(cfg.seed, i);
    let result = run_guarded(|| {
        let mut rng = trial_rng(cfg.seed, 2000 + i as u64);
        let cells = passable_cells(world.truth());
        if cells.is_empty() {
            return Err(Error::Config("world has no room for a walk".into()));
        }
        let start = world
            .truth()
            .cell_center(cells[rng.gen_range(0..cells.len())]);
        let walk = random_walk(
            world,
            start,
            cfg.walk_length,
            WALK_STEP,
            TRIAL_MARGIN,
            &mut rng,
        )?;
        let walked: f64 = walk
            .windows(2)
            .map(|w| w[0].position().dist(w[1].position()))
            .sum();
        Ok((
            relocalize(map, world, &offset, &walk, &cfg.reloc_config())?,
            walked,
        ))
    });
    let as_arr = |t: &Transform2| [t.x, t.y, t.theta];
    match result {
        Ok((r, walked)) => {
            let e = metric_reloc_errors(&r.t_final, &offset);
            let success = r.converged && metric_success(&r.t_final, &offset);
            RelocTrial {
                trial: i,
                failed: false,
                error: None,
                converged: r.converged,
                success,
                eps_t: e.eps_t,
                eps_theta_deg: e.eps_theta_deg,
                abs_t: e.abs_t,
                l_reloca: if success { r.trail_length } else { walked },
                n_used: r.n_used,
                offset: as_arr(&offset),
                estimate: as_arr(&r.t_final),
            }
        }
        Err(msg) => RelocTrial {
            trial: i,
            failed: true,
            error: Some(msg),
            converged: false,
            success: false,
            eps_t: f64::NAN,
            eps_theta_deg: f64::NAN,
            abs_t: f64::NAN,
            l_reloca: f64::NAN,
            n_used: 0,
            offset: as_arr(&offset),
            estimate: [f64::NAN; 3],
        },
    }
}

/// Seeded start and goal on the explored map, at least a few meters apart.
pub fn plan_pair(explored: &OccupancyGrid, seed: u64, i: usize) -> Option<(Point2, Point2)> {
    let cells = passable_cells(explored);
    if cells.len() < 2 {
        return None;
    }
    let mut rng = trial_rng(seed, 3000 + i as u64);
    let mut pick = || explored.cell_center(cells[rng.gen_range(0..cells.len())]);
    let a = pick();
    let mut b = pick();
    for _ in 0..100 {
        if a.dist(b) >= MIN_PAIR_DISTANCE {
            break;
        }
        b = pick();
    }
    Some((a, b))
}

pub fn plan_trial(cfg: &ExperimentConfig, world: &World, built: &BuiltMap, i: usize) -> PlanTrial {
    let explored = &built.explored;
    let mut row = PlanTrial {
        pair: i,
        failed: false,
        discarded: false,
        error: None,
        start: [f64::NAN; 2],
        goal: [f64::NAN; 2],
        s_topo: f64::NAN,
        s_grid: f64::NAN,
        c_path: f64::NAN,
        path: vec![],
    };
    let Some((a, b)) = plan_pair(explored, cfg.seed, i) else {
        row.discarded = true;
        row.error = Some("no room for a start/goal pair".into());
        return row;
    };
    row.start = [a.x, a.y];
    row.goal = [b.x, b.y];
    let Some(s_grid) = grid_baseline_length(explored, a, b).filter(|&s| s > 0.0) else {
        row.discarded = true;
        row.error = Some("goal unreachable on the explored grid".into());
        return row;
    };
    row.s_grid = s_grid;
    let clearance = cfg.builder_config().clearance_cells * explored.resolution();
    match run_guarded(|| {
        let p = plan(&built.map, &Transform2::IDENTITY, a, b, cfg.k)?;
        execute_with_skip(world, &p, explored, clearance)
    }) {
        Ok(ex) => {
            row.s_topo = ex.traveled;
            row.c_path = metric_c_path(ex.traveled, s_grid);
            row.path = ex.path.iter().map(|p| [p.x, p.y]).collect();
        }
        Err(msg) => {
            row.failed = true;
            row.error = Some(msg);
        }
    }
    row
}
