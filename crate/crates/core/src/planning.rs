//! Route planning on a relocalized map: terminal selection, graph shortest
//! paths, execution with node skipping and replanning on new estimates.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fht::{FhtMap, MapNode};
use crate::geometry::{polyline_length, Point2, Pose2, Transform2};
use crate::grid::OccupancyGrid;
use crate::gridpath::grid_route;
use crate::relocalization::{
    global_icp, make_estimation, match_descriptor, optimize_transform, reject_outliers, relocalize,
    Estimation, RelocConfig, RelocResult,
};
use crate::world_sim::{move_along, raycast_scan, sense_descriptor, World};

pub const DEFAULT_K: f64 = 1000.0;

/// Graph distance and node path from `a` to `b`. Disconnected pairs give an
/// infinite distance and an empty path.
pub fn shortest_topo(map: &FhtMap, a: usize, b: usize) -> Result<(f64, Vec<usize>)> {
    map.node(a)?;
    map.node(b)?;
    let (dist, parent) = map.distances_from(a);
    if !dist[b].is_finite() {
        return Ok((f64::INFINITY, vec![]));
    }
    let mut path = vec![b];
    let mut v = b;
    while v != a {
        v = parent[v];
        path.push(v);
    }
    path.reverse();
    Ok((dist[b], path))
}

/// Cost of reaching `node` from `n`: the distance when `n` lies in the
/// node's free rectangle, `k` times the distance otherwise.
pub fn access_cost(n: Point2, node: &MapNode, k: f64) -> f64 {
    let d = n.dist(node.position());
    if node.free_rect().contains(n) {
        d
    } else {
        k * d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Terminals {
    pub start: usize,
    pub end: usize,
    pub cost: f64,
}

/// Node pair minimizing access cost at both ends plus the graph distance
/// between them, over all pairs. Ties go to the smallest `(start, end)`.
pub fn select_terminals(map: &FhtMap, n_s: Point2, n_d: Point2, k: f64) -> Result<Terminals> {
    if map.is_empty() {
        return Err(Error::EmptyMap);
    }
    let fd: Vec<f64> = map.nodes().iter().map(|n| access_cost(n_d, n, k)).collect();
    let mut best = Terminals {
        start: 0,
        end: 0,
        cost: f64::INFINITY,
    };
    for s in map.nodes() {
        let fs = access_cost(n_s, s, k);
        if fs >= best.cost {
            continue;
        }
        let (dist, _) = map.distances_from(s.id());
        for (e, (&d, &f)) in dist.iter().zip(&fd).enumerate() {
            let c = fs + d + f;
            if c < best.cost {
                best = Terminals {
                    start: s.id(),
                    end: e,
                    cost: c,
                };
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub start_node: usize,
    pub end_node: usize,
    /// `n_s`, the node positions from start to end node, then `n_d`; map frame.
    pub waypoints: Vec<Point2>,
    pub node_path: Vec<usize>,
    pub topo_length: f64,
    pub total_cost: f64,
}

#[derive(Serialize)]
struct PlanJson {
    start_node: usize,
    end_node: usize,
    topo_length_m: f64,
    total_cost: f64,
    waypoints: Vec<[f64; 2]>,
}

impl PlanResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(PlanJson {
            start_node: self.start_node,
            end_node: self.end_node,
            topo_length_m: self.topo_length,
            total_cost: self.total_cost,
            waypoints: self.waypoints.iter().map(|p| [p.x, p.y]).collect(),
        })
        .expect("plain struct")
    }

    /// Length of the polyline through all waypoints.
    pub fn planned_length(&self) -> f64 {
        polyline_length(&self.waypoints)
    }
}

/// Plan from `n_s_odom` (odometry frame) to `n_d_map` (map frame).
pub fn plan(
    map: &FhtMap,
    t_map_odom: &Transform2,
    n_s_odom: Point2,
    n_d_map: Point2,
    k: f64,
) -> Result<PlanResult> {
    let n_s = t_map_odom.apply(n_s_odom);
    let t = select_terminals(map, n_s, n_d_map, k)?;
    let (topo_length, node_path) = shortest_topo(map, t.start, t.end)?;
    let mut waypoints = vec![n_s];
    for &id in &node_path {
        waypoints.push(map.node(id)?.position());
    }
    waypoints.push(n_d_map);
    Ok(PlanResult {
        start_node: t.start,
        end_node: t.end,
        waypoints,
        node_path,
        topo_length,
        total_cost: t.cost,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub traveled: f64,
    pub reached: bool,
    /// Vertices actually driven through.
    pub path: Vec<Point2>,
}

const MOTION_STEP: f64 = 0.1;

/// One leg from `from` to waypoint `to`; falls back to a route on the
/// explored grid when the straight segment is not clear.
fn leg(explored: &OccupancyGrid, from: Point2, to: Point2, clearance: f64) -> Result<Vec<Point2>> {
    if explored.segment_in_free(from, to, clearance) {
        return Ok(vec![from, to]);
    }
    grid_route(explored, from, to, 0.0).ok_or(Error::MotionBlocked { at: from })
}

/// Drive the plan in `world`. Before each leg the robot heads for the
/// farthest later waypoint it can see on `explored`.
pub fn execute_with_skip(
    world: &World,
    plan: &PlanResult,
    explored: &OccupancyGrid,
    clearance: f64,
) -> Result<Execution> {
    execute(world, plan, explored, clearance, true)
}

/// Drive the plan leg by leg without skipping.
pub fn execute_without_skip(
    world: &World,
    plan: &PlanResult,
    explored: &OccupancyGrid,
    clearance: f64,
) -> Result<Execution> {
    execute(world, plan, explored, clearance, false)
}

fn execute(
    world: &World,
    plan: &PlanResult,
    explored: &OccupancyGrid,
    clearance: f64,
    skip: bool,
) -> Result<Execution> {
    let w = &plan.waypoints;
    let mut path = vec![w[0]];
    let mut idx = 0;
    while idx + 1 < w.len() {
        let cur = w[idx];
        let next = if skip {
            (idx + 1..w.len())
                .rev()
                .find(|&j| explored.segment_in_free(cur, w[j], clearance))
                .unwrap_or(idx + 1)
        } else {
            idx + 1
        };
        let pts = leg(explored, cur, w[next], clearance)?;
        drive(world, &pts)?;
        path.extend_from_slice(&pts[1..]);
        idx = next;
    }
    Ok(Execution {
        traveled: polyline_length(&path),
        reached: true,
        path,
    })
}

fn drive(world: &World, pts: &[Point2]) -> Result<Vec<Pose2>> {
    move_along(world, pts, MOTION_STEP).map_err(|e| match e {
        Error::PathBlocked { index } => Error::MotionBlocked {
            at: pts[index.saturating_sub(1)],
        },
        e => e,
    })
}

#[derive(Debug, Clone)]
pub struct UtilizeConfig {
    pub reloc: RelocConfig,
    pub k: f64,
    pub clearance: f64,
    /// Distance to the goal counted as arrival, meters.
    pub goal_tolerance: f64,
    pub max_replans: usize,
}

impl Default for UtilizeConfig {
    fn default() -> Self {
        Self {
            reloc: RelocConfig::default(),
            k: DEFAULT_K,
            clearance: 0.05,
            goal_tolerance: 0.5,
            max_replans: 20,
        }
    }
}

#[derive(Debug, Clone)]
pub struct UtilizeOutcome {
    pub reloc: RelocResult,
    /// The last plan followed, if relocalization succeeded.
    pub plan: Option<PlanResult>,
    pub traveled: f64,
    pub reached: bool,
    pub replans: usize,
    /// True position at the end.
    pub final_position: Point2,
}

/// Relocalize along `walk`, then plan to `n_d` and drive there. Main nodes
/// passed on the way add estimates; each one refreshes the transform and
/// triggers a replan from the current position. Estimates farther from the
/// current transform than the convergence spread are ignored. With `known` the transform
/// is taken as given and relocalization is skipped.
#[allow(clippy::too_many_arguments)]
pub fn utilize(
    map: &FhtMap,
    world: &World,
    explored: &OccupancyGrid,
    odom_offset: &Transform2,
    walk: &[Pose2],
    n_d: Point2,
    known: Option<Transform2>,
    cfg: &UtilizeConfig,
) -> Result<UtilizeOutcome> {
    let reloc = match known {
        Some(t) => RelocResult {
            t_final: t,
            n_used: 0,
            converged: true,
            trail_length: 0.0,
            estimations: vec![],
            history: vec![],
        },
        None => relocalize(map, world, odom_offset, walk, &cfg.reloc)?,
    };
    let start = walk.first().map(|p| p.position()).ok_or(Error::EmptyMap)?;
    let here = match known {
        Some(_) => start,
        None => walk_position_at(walk, reloc.trail_length),
    };
    if !reloc.converged {
        return Ok(UtilizeOutcome {
            reloc,
            plan: None,
            traveled: 0.0,
            reached: false,
            replans: 0,
            final_position: here,
        });
    }

    let odom_from_map = odom_offset.inverse();
    let mut t_est = reloc.t_final;
    let mut ests: Vec<Estimation> = reloc.estimations.clone();
    let mut used: BTreeSet<usize> = ests.iter().map(|e| e.node_id).collect();
    let mut here = here;
    let mut traveled = 0.0;
    let mut replans = 0;
    let mut current: Option<PlanResult> = None;

    'replan: while replans <= cfg.max_replans {
        let odom_here = odom_from_map.apply(here);
        let p = plan(map, &t_est, odom_here, n_d, cfg.k)?;
        current = Some(p.clone());
        // believed map-frame waypoints, driven in the true frame
        let to_true = odom_offset.compose(&t_est.inverse());
        let w: Vec<Point2> = p.waypoints.iter().map(|&q| to_true.apply(q)).collect();
        let mut idx = 0;
        let mut cur = here;
        while idx + 1 < w.len() {
            let believed = t_est.compose(&odom_from_map).apply(cur);
            let next = (idx + 1..w.len())
                .rev()
                .find(|&j| explored.segment_in_free(believed, p.waypoints[j], cfg.clearance))
                .unwrap_or(idx + 1);
            let pts = match leg(world.truth(), cur, w[next], 0.0) {
                Ok(pts) => pts,
                Err(_) => break,
            };
            let poses = drive(world, &pts)?;
            for (i, pose) in poses.iter().enumerate() {
                if i > 0 {
                    traveled += poses[i - 1].position().dist(pose.position());
                }
                cur = pose.position();
                if let Some(e) = observe(map, world, pose, &odom_from_map, &used, &cfg.reloc)? {
                    used.insert(e.node_id);
                    let r = e.t_est.residual(&t_est);
                    if r[0].hypot(r[1]) > cfg.reloc.max_spread_t
                        || r[2].abs() > cfg.reloc.max_spread_theta
                    {
                        continue;
                    }
                    ests.push(e);
                    let kept = reject_outliers(&ests);
                    let t_new = optimize_transform(&kept, &cfg.reloc.averaging);
                    let r = t_new.residual(&t_est);
                    t_est = t_new;
                    if r[0].hypot(r[1]) > 1e-3 || r[2].abs() > 1e-4 {
                        here = cur;
                        replans += 1;
                        continue 'replan;
                    }
                }
            }
            idx = next;
        }
        here = cur;
        break;
    }
    let reached = here.dist(n_d) <= cfg.goal_tolerance;
    Ok(UtilizeOutcome {
        reloc,
        plan: current,
        traveled,
        reached,
        replans,
        final_position: here,
    })
}

fn walk_position_at(walk: &[Pose2], distance: f64) -> Point2 {
    let mut acc = 0.0;
    for w in walk.windows(2) {
        acc += w[0].position().dist(w[1].position());
        if acc >= distance - 1e-9 {
            return w[1].position();
        }
    }
    walk.last().expect("non-empty walk").position()
}

/// New estimate at `pose` from a main node not yet used, if any.
fn observe(
    map: &FhtMap,
    world: &World,
    pose: &Pose2,
    odom_from_map: &Transform2,
    used: &BTreeSet<usize>,
    cfg: &RelocConfig,
) -> Result<Option<Estimation>> {
    let d = sense_descriptor(world, pose.position(), cfg.max_range, cfg.descriptor_dim)?;
    let Some((id, score)) = match_descriptor(map, &d, cfg.th_match) else {
        return Ok(None);
    };
    if used.contains(&id) {
        return Ok(None);
    }
    let (t_node_robot, rms) = if cfg.use_icp {
        let scan = raycast_scan(world, pose, cfg.n_beams, cfg.max_range)?;
        match global_icp(map.node(id)?.scan().expect("main node"), &scan, &cfg.icp) {
            Ok(a) => (a.transform, a.rms),
            Err(Error::AlignmentFailed(_) | Error::InsufficientOverlap(_)) => return Ok(None),
            Err(e) => return Err(e),
        }
    } else {
        (Transform2::IDENTITY, 0.0)
    };
    make_estimation(
        map,
        id,
        t_node_robot,
        &odom_from_map.apply_pose(pose),
        score,
        rms,
    )
    .map(Some)
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::fht::{MainData, MapMeta};
    use crate::geometry::Rect;
    use crate::grid::{CellState, GridCoord};
    use crate::world_sim::{Descriptor, LaserScan};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn support_map(points: &[(f64, f64)], rects: &[Rect], edges: &[(usize, usize)]) -> FhtMap {
        let mut m = FhtMap::new(MapMeta::new(4, 0.1));
        for (i, &(x, y)) in points.iter().enumerate() {
            m.add_node(
                Point2::new(x, y),
                rects.get(i).copied().unwrap_or_default(),
                None,
            );
        }
        for &(a, b) in edges {
            m.add_edge(a, b).unwrap();
        }
        m
    }

    fn random_map(rng: &mut impl Rng, n: usize, p_edge: f64) -> FhtMap {
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)))
            .collect();
        let rects: Vec<Rect> = pts
            .iter()
            .map(|&(x, y)| {
                let h = rng.gen_range(0.1..3.0);
                Rect::new(x - h, y - h, x + h, y + h)
            })
            .collect();
        let mut edges = vec![];
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(p_edge) {
                    edges.push((a, b));
                }
            }
        }
        support_map(&pts, &rects, &edges)
    }

    fn floyd_warshall(m: &FhtMap) -> Vec<Vec<f64>> {
        let n = m.len();
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for i in 0..n {
            d[i][i] = 0.0;
        }
        for &(a, b) in m.edges() {
            let w = m.nodes()[a].position().dist(m.nodes()[b].position());
            d[a][b] = w;
            d[b][a] = w;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        d
    }

    #[test]
    fn same_node_is_free() {
        let m = support_map(&[(0.0, 0.0), (1.0, 0.0)], &[], &[(0, 1)]);
        assert_eq!(shortest_topo(&m, 1, 1).unwrap(), (0.0, vec![1]));
    }

    #[test]
    fn triangle_takes_direct_edge() {
        let m = support_map(
            &[(0.0, 0.0), (3.0, 0.0), (3.0, 4.0)],
            &[],
            &[(0, 1), (1, 2), (0, 2)],
        );
        let (d, p) = shortest_topo(&m, 0, 2).unwrap();
        assert_eq!(d, 5.0);
        assert_eq!(p, vec![0, 2]);
    }

    #[test]
    fn unknown_id_is_an_error() {
        let m = support_map(&[(0.0, 0.0)], &[], &[]);
        assert!(matches!(
            shortest_topo(&m, 0, 3),
            Err(Error::UnknownNode(3))
        ));
    }

    #[test]
    fn disconnected_is_infinite() {
        let m = support_map(&[(0.0, 0.0), (1.0, 0.0)], &[], &[]);
        let (d, p) = shortest_topo(&m, 0, 1).unwrap();
        assert!(d.is_infinite() && p.is_empty());
    }

    #[test]
    fn access_cost_branches() {
        let m = support_map(&[(0.0, 0.0)], &[Rect::new(-3.0, -3.0, 3.0, 3.0)], &[]);
        let n = m.node(0).unwrap();
        assert_eq!(access_cost(Point2::new(0.0, 0.0), n, 1000.0), 0.0);
        assert_eq!(access_cost(Point2::new(2.0, 0.0), n, 1000.0), 2.0);
        let small = support_map(&[(0.0, 0.0)], &[Rect::new(-1.0, -1.0, 1.0, 1.0)], &[]);
        assert_eq!(
            access_cost(Point2::new(0.0, 2.0), small.node(0).unwrap(), 1000.0),
            2000.0
        );
    }

    #[test]
    fn single_node_selects_itself() {
        let m = support_map(&[(1.0, 1.0)], &[], &[]);
        let t =
            select_terminals(&m, Point2::new(5.0, 5.0), Point2::new(-2.0, 0.0), 1000.0).unwrap();
        assert_eq!((t.start, t.end), (0, 0));
    }

    #[test]
    fn containing_rects_dominate() {
        // chain 0-1-2-3; n_s only in rect 0, n_d only in rect 3, but nodes 1 and
        // 2 are closer to the query points
        let rects = [
            Rect::new(-1.0, -1.0, 1.0, 1.0),
            Rect::new(1.5, -0.5, 2.5, 0.5),
            Rect::new(7.5, -0.5, 8.5, 0.5),
            Rect::new(9.0, -1.0, 11.0, 1.0),
        ];
        let m = support_map(
            &[(0.0, 0.0), (2.0, 0.0), (8.0, 0.0), (10.0, 0.0)],
            &rects,
            &[(0, 1), (1, 2), (2, 3)],
        );
        let t = select_terminals(&m, Point2::new(0.9, 0.0), Point2::new(9.1, 0.0), 1000.0).unwrap();
        assert_eq!((t.start, t.end), (0, 3));
        assert!((t.cost - (0.9 + 10.0 + 0.9)).abs() < 1e-12);
    }

    #[test]
    fn empty_map_cannot_plan() {
        let m = FhtMap::new(MapMeta::new(4, 0.1));
        assert!(matches!(
            plan(
                &m,
                &Transform2::IDENTITY,
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 1.0),
                1000.0
            ),
            Err(Error::EmptyMap)
        ));
    }

    #[test]
    fn degenerate_plan_has_zero_topo_length() {
        let rects = [
            Rect::new(-1.0, -1.0, 1.0, 1.0),
            Rect::new(2.0, -1.0, 4.0, 1.0),
        ];
        let m = support_map(&[(0.0, 0.0), (3.0, 0.0)], &rects, &[(0, 1)]);
        let q = Point2::new(2.5, 0.2);
        let p = plan(&m, &Transform2::IDENTITY, q, q, 1000.0).unwrap();
        assert_eq!(p.topo_length, 0.0);
        assert_eq!(p.start_node, 1);
        assert_eq!(p.end_node, 1);
    }

    #[test]
    fn fixture_plan_waypoints() {
        // L-shaped chain: (0,0) (4,0) (4,3) with a long detour node (10, 10)
        let rects = [
            Rect::new(-1.0, -1.0, 1.0, 1.0),
            Rect::new(3.0, -1.0, 5.0, 1.0),
            Rect::new(3.0, 2.0, 5.0, 4.0),
            Rect::new(9.0, 9.0, 11.0, 11.0),
        ];
        let m = support_map(
            &[(0.0, 0.0), (4.0, 0.0), (4.0, 3.0), (10.0, 10.0)],
            &rects,
            &[(0, 1), (1, 2), (0, 3), (3, 2)],
        );
        // odometry frame shifted by (+1, 0): odom (−1.5, 0.5) is map (−0.5, 0.5)
        let t = Transform2::new(1.0, 0.0, 0.0);
        let p = plan(
            &m,
            &t,
            Point2::new(-1.5, 0.5),
            Point2::new(4.5, 3.5),
            1000.0,
        )
        .unwrap();
        let expect = [(-0.5, 0.5), (0.0, 0.0), (4.0, 0.0), (4.0, 3.0), (4.5, 3.5)];
        assert_eq!(p.waypoints.len(), expect.len());
        for (w, e) in p.waypoints.iter().zip(expect) {
            assert!(
                (w.x - e.0).abs() < 1e-12 && (w.y - e.1).abs() < 1e-12,
                "{w:?}"
            );
        }
        assert_eq!(p.topo_length, 7.0);
        assert_eq!(p.node_path, vec![0, 1, 2]);
        let j = p.to_json();
        assert_eq!(j["topo_length_m"], 7.0);
        assert_eq!(j["waypoints"][0][0], -0.5);
    }

    fn open_world(w: usize, h: usize) -> (World, OccupancyGrid) {
        let g = OccupancyGrid::new(w, h, 0.1, CellState::Free);
        (World::from_grid("open", g.clone()), g)
    }

    #[test]
    fn full_skip_goes_straight() {
        let (world, explored) = open_world(100, 100);
        let p = PlanResult {
            start_node: 0,
            end_node: 1,
            waypoints: vec![
                Point2::new(1.0, 1.0),
                Point2::new(5.0, 2.0),
                Point2::new(2.0, 8.0),
                Point2::new(8.0, 8.0),
            ],
            node_path: vec![0, 1],
            topo_length: 0.0,
            total_cost: 0.0,
        };
        let e = execute_with_skip(&world, &p, &explored, 0.1).unwrap();
        assert!((e.traveled - Point2::new(1.0, 1.0).dist(Point2::new(8.0, 8.0))).abs() < 1e-12);
        assert!(e.reached);
    }

    #[test]
    fn corridor_without_shortcuts_follows_legs() {
        // U-shaped corridor: no waypoint sees past the next one
        let (mut world, _) = open_world(60, 60);
        for x in 0..50 {
            for y in 20..40 {
                world.set_occupied(GridCoord::new(x, y), 0.5);
            }
        }
        let explored = world.truth().clone();
        let pts = vec![
            Point2::new(1.0, 1.0),
            Point2::new(5.5, 1.0),
            Point2::new(5.5, 5.0),
            Point2::new(1.0, 5.0),
        ];
        let p = PlanResult {
            start_node: 0,
            end_node: 1,
            waypoints: pts.clone(),
            node_path: vec![0, 1],
            topo_length: 0.0,
            total_cost: 0.0,
        };
        let e = execute_with_skip(&world, &p, &explored, 0.1).unwrap();
        assert!((e.traveled - polyline_length(&pts)).abs() < 1e-12);
    }

    #[test]
    fn known_transform_skips_relocalization() {
        let (world, explored) = open_world(80, 40);
        let rects = [Rect::new(0.0, 0.0, 4.0, 4.0), Rect::new(4.0, 0.0, 8.0, 4.0)];
        let m = support_map(&[(2.0, 2.0), (6.0, 2.0)], &rects, &[(0, 1)]);
        let offset = Transform2::new(0.5, -0.3, 0.2);
        let walk = [Pose2::new(1.0, 1.0, 0.0)];
        let out = utilize(
            &m,
            &world,
            &explored,
            &offset,
            &walk,
            Point2::new(7.0, 3.0),
            Some(offset),
            &UtilizeConfig::default(),
        )
        .unwrap();
        assert!(out.reloc.converged && out.reloc.estimations.is_empty());
        assert!(out.reached);
        assert!(out.final_position.dist(Point2::new(7.0, 3.0)) < 1e-9);
    }

    #[test]
    fn unconverged_relocalization_executes_nothing() {
        let (world, explored) = open_world(40, 40);
        let mut m = FhtMap::new(MapMeta::new(8, 0.1));
        // a descriptor that never matches anything the open world produces
        let mut v = vec![0.0f32; 8];
        v[0] = 1.0;
        m.add_node(
            Point2::new(2.0, 2.0),
            Rect::new(0.0, 0.0, 4.0, 4.0),
            Some(MainData {
                descriptor: Descriptor::from_raw(v),
                scan: LaserScan::new(vec![1.0; 8], 7.0),
                entropy: 0.1,
            }),
        );
        let walk = [Pose2::new(1.0, 1.0, 0.0), Pose2::new(1.5, 1.0, 0.0)];
        let cfg = UtilizeConfig {
            reloc: RelocConfig {
                descriptor_dim: 8,
                ..Default::default()
            },
            ..Default::default()
        };
        let out = utilize(
            &m,
            &world,
            &explored,
            &Transform2::IDENTITY,
            &walk,
            Point2::new(3.0, 3.0),
            None,
            &cfg,
        )
        .unwrap();
        assert!(!out.reloc.converged);
        assert!(out.plan.is_none() && !out.reached);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn shortest_topo_matches_floyd_warshall(seed in any::<u64>(), n in 1usize..=12, p in 0.1..0.6f64) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let m = random_map(&mut rng, n, p);
            let fw = floyd_warshall(&m);
            for a in 0..n {
                for b in 0..n {
                    let (d, path) = shortest_topo(&m, a, b).unwrap();
                    if fw[a][b].is_infinite() {
                        prop_assert!(d.is_infinite());
                        continue;
                    }
                    prop_assert!((d - fw[a][b]).abs() < 1e-9);
                    prop_assert_eq!(path[0], a);
                    prop_assert_eq!(*path.last().unwrap(), b);
                    let len: f64 = path.windows(2).map(|w| {
                        prop_assert!(m.edges().contains(&(w[0].min(w[1]), w[0].max(w[1]))));
                        Ok(m.edge_length(w[0], w[1]))
                    }).sum::<std::result::Result<f64, TestCaseError>>()?;
                    prop_assert!((len - d).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn terminals_match_exhaustive_pairs(seed in any::<u64>(), n in 1usize..=15) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let m = random_map(&mut rng, n, 0.3);
            let fw = floyd_warshall(&m);
            let ns = Point2::new(rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0));
            let nd = Point2::new(rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0));
            let mut best = (f64::INFINITY, 0, 0);
            for a in 0..n {
                for b in 0..n {
                    let c = access_cost(ns, &m.nodes()[a], 1000.0) + fw[a][b] + access_cost(nd, &m.nodes()[b], 1000.0);
                    if c < best.0 {
                        best = (c, a, b);
                    }
                }
            }
            let t = select_terminals(&m, ns, nd, 1000.0).unwrap();
            prop_assert!((t.cost - best.0).abs() < 1e-9);
            prop_assert_eq!((t.start, t.end), (best.1, best.2));
        }

        #[test]
        fn plan_invariant_under_rigid_motion(seed in any::<u64>(), tx in -5.0..5.0f64, ty in -5.0..5.0f64, th in -3.0..3.0f64) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let m = random_map(&mut rng, 8, 0.4);
            let ns = Point2::new(rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0));
            let nd = Point2::new(rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0));
            let a = plan(&m, &Transform2::IDENTITY, ns, nd, 1000.0).unwrap();
            // rotating by a multiple of 90° keeps rects axis-aligned
            let quarter = (th / std::f64::consts::FRAC_PI_2).round() * std::f64::consts::FRAC_PI_2;
            let t = Transform2::new(tx, ty, quarter);
            let mut moved = FhtMap::new(MapMeta::new(4, 0.1));
            for n in m.nodes() {
                let r = n.free_rect();
                let c1 = t.apply(Point2::new(r.xmin, r.ymin));
                let c2 = t.apply(Point2::new(r.xmax, r.ymax));
                moved.add_node(t.apply(n.position()), Rect::new(c1.x.min(c2.x), c1.y.min(c2.y), c1.x.max(c2.x), c1.y.max(c2.y)), None);
            }
            for &(x, y) in m.edges() {
                moved.add_edge(x, y).unwrap();
            }
            let b = plan(&moved, &Transform2::IDENTITY, t.apply(ns), t.apply(nd), 1000.0).unwrap();
            prop_assert!((a.total_cost - b.total_cost).abs() < 1e-3 * a.total_cost.max(1.0));
            if (a.start_node, a.end_node) != (b.start_node, b.end_node) {
                // only a numerical near-tie may flip the choice
                let alt = access_cost(t.apply(ns), moved.node(a.start_node).unwrap(), 1000.0)
                    + shortest_topo(&moved, a.start_node, a.end_node).unwrap().0
                    + access_cost(t.apply(nd), moved.node(a.end_node).unwrap(), 1000.0);
                prop_assert!((alt - b.total_cost).abs() < 1e-3 * b.total_cost.max(1.0));
            }
        }

        #[test]
        fn skipping_never_travels_farther(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let (mut world, _) = open_world(60, 60);
            for _ in 0..6 {
                let (x, y) = (rng.gen_range(0..55), rng.gen_range(0..55));
                for dx in 0..5 {
                    for dy in 0..5 {
                        world.set_occupied(GridCoord::new(x + dx, y + dy), 0.5);
                    }
                }
            }
            let explored = world.truth().clone();
            let free = world.free_cells();
            let mut pts = vec![explored.cell_center(free[rng.gen_range(0..free.len())])];
            for _ in 0..2000 {
                let q = explored.cell_center(free[rng.gen_range(0..free.len())]);
                if explored.segment_in_free(*pts.last().unwrap(), q, 0.1) {
                    pts.push(q);
                }
                if pts.len() == 6 {
                    break;
                }
            }
            prop_assume!(pts.len() >= 2);
            let p = PlanResult { start_node: 0, end_node: 0, waypoints: pts.clone(), node_path: vec![], topo_length: 0.0, total_cost: 0.0 };
            let skip = execute_with_skip(&world, &p, &explored, 0.1).unwrap();
            let plain = execute_without_skip(&world, &p, &explored, 0.1).unwrap();
            prop_assert!(skip.traveled <= plain.traveled + 1e-9);
            prop_assert!((plain.traveled - polyline_length(&pts)).abs() < 1e-9);
        }
    }
}
