//! Global relocalization against a received map: descriptor matching, scan
//! alignment, per-node estimates of the map-to-odometry transform and their
//! robust fusion.

mod icp;
mod robust;

pub use icp::{global_icp, Alignment, IcpConfig, MIN_POINTS};
pub use robust::{
    average_transforms, circular_median, objective, optimize_transform, reject_outliers,
    AveragingConfig, Loss,
};

use std::collections::BTreeSet;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fht::FhtMap;
use crate::geometry::{Point2, Pose2, Transform2};
use crate::grid::GridCoord;
use crate::gridpath::{astar, smooth_path_by, Passable};
use crate::world_sim::{move_along, raycast_scan, sense_descriptor, Descriptor, World};

/// One hypothesis of the map-to-odometry transform from a matched node.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimation {
    pub node_id: usize,
    /// Robot pose in the node frame.
    pub t_node_robot: Transform2,
    pub t_est: Transform2,
    pub score: f64,
    pub icp_rms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelocConfig {
    pub th_match: f64,
    pub min_estimations: usize,
    /// Convergence also needs every surviving estimate within this distance
    /// (meters) and angle (radians) of the fused transform.
    pub max_spread_t: f64,
    pub max_spread_theta: f64,
    /// Align scans with global ICP; when false the robot is assumed to sit
    /// at the matched node with heading 0.
    pub use_icp: bool,
    pub icp: IcpConfig,
    pub averaging: AveragingConfig,
    pub descriptor_dim: usize,
    pub n_beams: usize,
    pub max_range: f64,
}

impl Default for RelocConfig {
    fn default() -> Self {
        Self {
            th_match: 0.85,
            min_estimations: 3,
            max_spread_t: 0.75,
            max_spread_theta: 3f64.to_radians(),
            use_icp: true,
            icp: IcpConfig::default(),
            averaging: AveragingConfig::default(),
            descriptor_dim: 512,
            n_beams: 360,
            max_range: 7.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelocResult {
    pub t_final: Transform2,
    pub n_used: usize,
    pub converged: bool,
    /// Distance walked until convergence, or the whole walk otherwise.
    pub trail_length: f64,
    pub estimations: Vec<Estimation>,
    /// `(distance walked, fused transform)` after every new estimate.
    pub history: Vec<(f64, Transform2)>,
}

#[derive(Serialize)]
struct PoseJson {
    x: f64,
    y: f64,
    theta: f64,
}

#[derive(Serialize)]
struct RelocJson {
    t_final: PoseJson,
    n_used: usize,
    converged: bool,
    trail_length_m: f64,
}

impl RelocResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(RelocJson {
            t_final: PoseJson {
                x: self.t_final.x,
                y: self.t_final.y,
                theta: self.t_final.theta,
            },
            n_used: self.n_used,
            converged: self.converged,
            trail_length_m: self.trail_length,
        })
        .expect("plain struct")
    }
}

/// Best main node by inner product, if it reaches `th_match`. Ties go to
/// the lower id.
pub fn match_descriptor(map: &FhtMap, query: &Descriptor, th_match: f64) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for n in map.main_nodes() {
        let s = n.descriptor().expect("main node").dot(query);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((n.id(), s));
        }
    }
    best.filter(|&(_, s)| s >= th_match)
}

/// `T_map_node · T_node_robot · T_odom_robot⁻¹`, with the node frame a pure
/// translation to the node position.
pub fn make_estimation(
    map: &FhtMap,
    node_id: usize,
    t_node_robot: Transform2,
    odom_pose: &Pose2,
    score: f64,
    icp_rms: f64,
) -> Result<Estimation> {
    let node = map.node(node_id)?;
    if !node.is_main() {
        return Err(Error::NotMainNode(node_id));
    }
    let t_map_node = Transform2::from_translation(node.position());
    let t_est = t_map_node
        .compose(&t_node_robot)
        .compose(&odom_pose.to_transform().inverse());
    Ok(Estimation {
        node_id,
        t_node_robot,
        t_est,
        score,
        icp_rms,
    })
}

/// Walks `walk` (true poses) while the robot only knows its odometry pose
/// `odom_offset⁻¹ · pose`. Each matched main node contributes at most one
/// estimate; the fused transform is recomputed after every new estimate and
/// the walk stops once `min_estimations` survive outlier rejection and
/// agree with the fused transform.
pub fn relocalize(
    map: &FhtMap,
    world: &World,
    odom_offset: &Transform2,
    walk: &[Pose2],
    cfg: &RelocConfig,
) -> Result<RelocResult> {
    let odom_from_map = odom_offset.inverse();
    let mut ests: Vec<Estimation> = vec![];
    let mut used: BTreeSet<usize> = BTreeSet::new();
    let mut history = vec![];
    let mut walked = 0.0;
    let mut t_final = Transform2::IDENTITY;
    let mut n_used = 0;
    for (k, pose) in walk.iter().enumerate() {
        if k > 0 {
            walked += walk[k - 1].position().dist(pose.position());
        }
        let d = sense_descriptor(world, pose.position(), cfg.max_range, cfg.descriptor_dim)?;
        let Some((node_id, score)) = match_descriptor(map, &d, cfg.th_match) else {
            continue;
        };
        if used.contains(&node_id) {
            continue;
        }
        let (t_node_robot, rms) = if cfg.use_icp {
            let scan = raycast_scan(world, pose, cfg.n_beams, cfg.max_range)?;
            let reference = map.node(node_id)?.scan().expect("main node");
            match global_icp(reference, &scan, &cfg.icp) {
                Ok(a) => (a.transform, a.rms),
                Err(Error::AlignmentFailed(_) | Error::InsufficientOverlap(_)) => continue,
                Err(e) => return Err(e),
            }
        } else {
            (Transform2::IDENTITY, 0.0)
        };
        let odom_pose = odom_from_map.apply_pose(pose);
        ests.push(make_estimation(
            map,
            node_id,
            t_node_robot,
            &odom_pose,
            score,
            rms,
        )?);
        used.insert(node_id);

        let kept = reject_outliers(&ests);
        t_final = optimize_transform(&kept, &cfg.averaging);
        n_used = kept.len();
        history.push((walked, t_final));
        if n_used >= cfg.min_estimations && consistent(&kept, &t_final, cfg) {
            return Ok(RelocResult {
                t_final,
                n_used,
                converged: true,
                trail_length: walked,
                estimations: ests,
                history,
            });
        }
    }
    Ok(RelocResult {
        t_final,
        n_used,
        converged: false,
        trail_length: walked,
        estimations: ests,
        history,
    })
}

/// True when every estimate lies within the configured spread of `fused`.
pub fn consistent(kept: &[Estimation], fused: &Transform2, cfg: &RelocConfig) -> bool {
    kept.iter().all(|e| {
        let r = e.t_est.residual(fused);
        r[0].hypot(r[1]) <= cfg.max_spread_t && r[2].abs() <= cfg.max_spread_theta
    })
}

/// Seeded wandering: repeated shortest paths to uniformly drawn cells that
/// keep `margin` from obstacles, until `length` meters are covered.
pub fn random_walk<R: Rng>(
    world: &World,
    start: Point2,
    length: f64,
    step: f64,
    margin: f64,
    rng: &mut R,
) -> Result<Vec<Pose2>> {
    let truth = world.truth();
    let mut pass = Passable::from_mask(truth, truth.clearance_mask(margin, true));
    let start_cell = truth.cell_of(start);
    pass.allow(start_cell);
    let targets: Vec<GridCoord> = (0..truth.len())
        .map(|i| truth.coord_of(i))
        .filter(|&c| pass.is_passable(c))
        .collect();
    if targets.is_empty() {
        return Err(Error::NotFree {
            x: start.x,
            y: start.y,
        });
    }
    let mut poses = vec![Pose2::new(start.x, start.y, 0.0)];
    let mut walked = 0.0;
    let mut here = start;
    let mut failures = 0;
    while walked < length && failures < 100 {
        let goal = targets[rng.gen_range(0..targets.len())];
        let Some((_, cells)) = astar(&pass, truth.cell_of(here), goal) else {
            failures += 1;
            continue;
        };
        if cells.len() < 2 {
            failures += 1;
            continue;
        }
        let mut pts: Vec<Point2> = vec![here];
        pts.extend(cells[1..].iter().map(|&c| truth.cell_center(c)));
        let mask = pass.mask();
        let pts = smooth_path_by(&pts, |a, b| truth.segment_clear_by(a, b, 0.0, |i| mask[i]));
        let leg = move_along(world, &pts, step)?;
        for p in leg.into_iter().skip(1) {
            walked += poses.last().unwrap().position().dist(p.position());
            poses.push(p);
            if walked >= length {
                break;
            }
        }
        here = poses.last().unwrap().position();
    }
    Ok(poses)
}
