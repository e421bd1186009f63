use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{polyline_length, Point2, Pose2};
use crate::grid::OccupancyGrid;
use crate::gridpath::{smooth_path, DistanceField, Passable};
use crate::world_sim::{Descriptor, LaserScan};

use super::{entropy, grow_free_rect, reloc_capability, FhtMap, MainData};

// octile length exceeds the Euclidean length by at most this factor
const OCTILE_STRETCH: f64 = 1.082_392_200_292_394;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuildMode {
    /// Main nodes where descriptors are informative, support nodes elsewhere.
    Fht,
    /// Every node is a main node; no refinement.
    MainOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuilderConfig {
    pub gamma1: f64,
    pub gamma2: f64,
    pub sigma_c: f64,
    pub th_s: f64,
    pub n_bins: usize,
    /// Edge and visibility clearance in cells.
    pub clearance_cells: f64,
    pub rho: f64,
    pub max_half_extent: f64,
    pub mode: BuildMode,
}

impl Default for BuilderConfig {
    fn default() -> Self {
        Self {
            gamma1: 0.04,
            gamma2: 0.015,
            sigma_c: 2.65,
            th_s: 3.0,
            n_bins: 10,
            clearance_cells: 1.0,
            rho: 1.5,
            max_half_extent: 7.0,
            mode: BuildMode::Fht,
        }
    }
}

impl BuilderConfig {
    // negated comparisons so NaN is rejected too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.gamma2 < self.gamma1) {
            return bad("gamma2 must be smaller than gamma1");
        }
        if !(self.sigma_c > 0.0) {
            return bad("sigma_c must be positive");
        }
        if !(self.th_s > 0.0) {
            return bad("th_s must be positive");
        }
        if self.n_bins < 2 {
            return bad("n_bins must be at least 2");
        }
        if !(self.clearance_cells >= 0.0) {
            return bad("clearance_cells must be non-negative");
        }
        if !(self.rho >= 1.0) {
            return bad("rho must be at least 1");
        }
        if !(self.max_half_extent > 0.0) {
            return bad("max_half_extent must be positive");
        }
        Ok(())
    }
}

/// What the robot perceived at one pose. `scan` is taken at heading 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub pose: Pose2,
    pub descriptor: Descriptor,
    pub scan: LaserScan,
    pub entropy: f64,
}

impl Sample {
    pub fn new(pose: Pose2, descriptor: Descriptor, scan: LaserScan, n_bins: usize) -> Self {
        let entropy = entropy(&descriptor, n_bins);
        Self {
            pose,
            descriptor,
            scan,
            entropy,
        }
    }

    fn main_data(&self) -> MainData {
        MainData {
            descriptor: self.descriptor.clone(),
            scan: self.scan.clone(),
            entropy: self.entropy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportTrigger {
    /// No existing node is visible from the pose.
    Disconnected,
    /// Every existing node is farther than `th_s`.
    Sparse,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct BuildStats {
    pub steps: usize,
    pub main_nodes: usize,
    pub support_nodes: usize,
    pub refinement_nodes: usize,
}

#[derive(Debug, Clone)]
struct Candidate {
    sample: Sample,
    connected: bool,
}

/// Online map construction state, fed one sample per exploration step.
#[derive(Debug, Clone)]
pub struct BuilderState {
    config: BuilderConfig,
    candidates: Vec<Candidate>,
    in_candidate_phase: bool,
    // most recent pose from which some node was visible
    last_connected: Option<Sample>,
    // nodes whose rectangle is still the provisional single cell
    provisional: Vec<usize>,
    stats: BuildStats,
}

impl BuilderState {
    pub fn new(config: BuilderConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            candidates: vec![],
            in_candidate_phase: false,
            last_connected: None,
            provisional: vec![],
            stats: BuildStats::default(),
        })
    }

    pub fn config(&self) -> &BuilderConfig {
        &self.config
    }

    pub fn stats(&self) -> BuildStats {
        self.stats
    }

    pub fn in_candidate_phase(&self) -> bool {
        self.in_candidate_phase
    }

    pub fn candidate_count(&self) -> usize {
        self.candidates.len()
    }

    /// Main-node selection. Bootstraps on an empty map; otherwise opens a
    /// candidate window when coverage drops below `gamma1`, collects samples
    /// while it stays above `gamma2`, and then returns the collected sample of
    /// highest entropy (earliest on ties). Only samples from which an
    /// existing node was visible are eligible, so the new node gets an edge.
    pub fn update_main_node(
        &mut self,
        map: &FhtMap,
        sample: &Sample,
        connected: bool,
    ) -> Option<Sample> {
        if map.is_empty() {
            return Some(sample.clone());
        }
        let c = reloc_capability(map, sample.pose.position(), self.config.sigma_c);
        if !self.in_candidate_phase && c < self.config.gamma1 {
            self.in_candidate_phase = true;
        }
        if !self.in_candidate_phase {
            return None;
        }
        if c > self.config.gamma2 {
            self.candidates.push(Candidate {
                sample: sample.clone(),
                connected,
            });
            return None;
        }
        if self.candidates.is_empty() {
            self.candidates.push(Candidate {
                sample: sample.clone(),
                connected,
            });
        }
        self.close_window()
    }

    fn close_window(&mut self) -> Option<Sample> {
        let mut best: Option<&Candidate> = None;
        for cand in self.candidates.iter().filter(|c| c.connected) {
            if best.is_none_or(|b| cand.sample.entropy > b.sample.entropy) {
                best = Some(cand);
            }
        }
        let out = best.map(|b| b.sample.clone());
        self.candidates.clear();
        self.in_candidate_phase = false;
        out
    }

    fn clearance(&self, explored: &OccupancyGrid) -> f64 {
        self.config.clearance_cells * explored.resolution()
    }

    /// One construction step: main-node check, then support-node check,
    /// then edges, rectangles of earlier nodes and refinement for every node
    /// created. Returns the ids created in this step.
    pub fn build_step(
        &mut self,
        map: &mut FhtMap,
        sample: Sample,
        explored: &OccupancyGrid,
    ) -> Result<Vec<usize>> {
        self.stats.steps += 1;
        let clearance = self.clearance(explored);
        let pos = sample.pose.position();
        let connected = sees_any_node(map, pos, explored, clearance);

        let mut created = vec![];
        if let Some(s) = self.update_main_node(map, &sample, connected) {
            if !is_node_position(map, s.pose.position()) {
                created.push(self.insert(map, &s, true, explored));
            }
        } else if let Some(trigger) =
            update_support_node(map, &sample.pose, explored, self.config.th_s, clearance)
        {
            let at = match (trigger, connected) {
                (SupportTrigger::Sparse, true) => Some(sample.clone()),
                _ => self.last_connected.clone(),
            };
            if let Some(s) = at.filter(|s| !is_node_position(map, s.pose.position())) {
                let main = self.config.mode == BuildMode::MainOnly;
                created.push(self.insert(map, &s, main, explored));
            }
        }

        for &id in &created {
            add_edges(map, id, explored, clearance)?;
        }
        if !created.is_empty() {
            self.finalize_previous_rects(map, explored, &created)?;
            self.provisional.extend(&created);
            if self.config.mode == BuildMode::Fht {
                for &id in &created {
                    self.stats.refinement_nodes += refine_map(
                        map,
                        explored,
                        id,
                        self.config.rho,
                        self.config.th_s,
                        clearance,
                        self.config.max_half_extent,
                    )?;
                }
            }
        }
        if connected || (!created.is_empty() && sees_any_node(map, pos, explored, clearance)) {
            self.last_connected = Some(sample);
        }
        Ok(created)
    }

    fn insert(
        &mut self,
        map: &mut FhtMap,
        s: &Sample,
        main: bool,
        explored: &OccupancyGrid,
    ) -> usize {
        let p = s.pose.position();
        let cell = explored.cell_rect(explored.cell_of(p));
        if main {
            self.stats.main_nodes += 1;
            map.add_node(p, cell, Some(s.main_data()))
        } else {
            self.stats.support_nodes += 1;
            map.add_node(p, cell, None)
        }
    }

    /// Regrow the rectangles of nodes created before `current` against the
    /// newer explored grid. A rectangle never shrinks.
    pub fn finalize_previous_rects(
        &mut self,
        map: &mut FhtMap,
        explored: &OccupancyGrid,
        current: &[usize],
    ) -> Result<()> {
        let pending: Vec<usize> = self
            .provisional
            .drain(..)
            .filter(|id| !current.contains(id))
            .collect();
        for id in pending {
            finalize_rect(map, explored, id, self.config.max_half_extent)?;
        }
        Ok(())
    }

    /// End of exploration: emit a pending candidate and finalize remaining
    /// provisional rectangles.
    pub fn finish(&mut self, map: &mut FhtMap, explored: &OccupancyGrid) -> Result<Vec<usize>> {
        let clearance = self.clearance(explored);
        let mut created = vec![];
        if self.in_candidate_phase {
            if let Some(s) = self.close_window() {
                if !is_node_position(map, s.pose.position()) {
                    let id = self.insert(map, &s, true, explored);
                    add_edges(map, id, explored, clearance)?;
                    if self.config.mode == BuildMode::Fht {
                        self.stats.refinement_nodes += refine_map(
                            map,
                            explored,
                            id,
                            self.config.rho,
                            self.config.th_s,
                            clearance,
                            self.config.max_half_extent,
                        )?;
                    }
                    created.push(id);
                    self.provisional.push(id);
                }
            }
        }
        self.finalize_previous_rects(map, explored, &[])?;
        Ok(created)
    }
}

fn finalize_rect(
    map: &mut FhtMap,
    explored: &OccupancyGrid,
    id: usize,
    max_half_extent: f64,
) -> Result<()> {
    let node = map.node(id)?;
    let old = node.free_rect();
    let new = grow_free_rect(explored, node.position(), max_half_extent)?;
    if new.area() > old.area() {
        map.set_free_rect(id, new)?;
    }
    Ok(())
}

fn is_node_position(map: &FhtMap, p: Point2) -> bool {
    let p = p.snap_f32();
    map.nodes().iter().any(|n| n.position() == p)
}

/// True if some node has a free line of sight to `p`; nearest nodes are
/// tried first. Tested exactly as [`add_edges`] would test a node stored at `p`.
fn sees_any_node(map: &FhtMap, p: Point2, explored: &OccupancyGrid, clearance: f64) -> bool {
    let p = p.snap_f32();
    let mut order: Vec<(f64, usize)> = map
        .nodes()
        .iter()
        .map(|n| (n.position().dist_sq(p), n.id()))
        .collect();
    order.sort_by(|a, b| a.partial_cmp(b).unwrap());
    order
        .iter()
        .any(|&(_, id)| explored.segment_in_free(p, map.nodes()[id].position(), clearance))
}

/// Support-node trigger at `pose`: no node visible, or every node farther
/// than `th_s`. Nothing on an empty map.
pub fn update_support_node(
    map: &FhtMap,
    pose: &Pose2,
    explored: &OccupancyGrid,
    th_s: f64,
    clearance: f64,
) -> Option<SupportTrigger> {
    if map.is_empty() {
        return None;
    }
    let p = pose.position();
    if !sees_any_node(map, p, explored, clearance) {
        return Some(SupportTrigger::Disconnected);
    }
    let nearest = map
        .nodes()
        .iter()
        .map(|n| n.position().dist(p))
        .fold(f64::INFINITY, f64::min);
    (nearest > th_s).then_some(SupportTrigger::Sparse)
}

/// Connect `id` to every node reachable by a free straight segment.
pub fn add_edges(
    map: &mut FhtMap,
    id: usize,
    explored: &OccupancyGrid,
    clearance: f64,
) -> Result<usize> {
    let p = map.node(id)?.position();
    let mut added = 0;
    for j in 0..map.len() {
        if j != id
            && explored.segment_in_free(p, map.nodes()[j].position(), clearance)
            && map.add_edge(id, j)?
        {
            added += 1;
        }
    }
    Ok(added)
}

/// Shortcut insertion: where the graph distance from `new_id` to a node
/// exceeds `rho` times the free-space distance, support nodes are placed
/// along the free-space path at spacing at most `th_s`. Returns the number
/// of nodes inserted.
pub fn refine_map(
    map: &mut FhtMap,
    explored: &OccupancyGrid,
    new_id: usize,
    rho: f64,
    th_s: f64,
    clearance: f64,
    max_half_extent: f64,
) -> Result<usize> {
    if !rho.is_finite() || map.len() < 2 {
        return Ok(0);
    }
    let origin = map.node(new_id)?.position();
    let mut pass = Passable::from_mask(explored, explored.clearance_mask(2.0 * clearance, true));
    for n in map.nodes() {
        pass.allow(explored.cell_of(n.position()));
    }
    let field = DistanceField::compute(&pass, explored.cell_of(origin));

    let mut targets: Vec<(f64, usize)> = (0..map.len())
        .filter(|&j| j != new_id)
        .map(|j| {
            (
                field.distance(explored.cell_of(map.nodes()[j].position())),
                j,
            )
        })
        .filter(|(d, _)| d.is_finite())
        .collect();
    targets.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let (mut topo, _) = map.distances_from(new_id);
    let mut inserted = 0;
    for (octile, j) in targets {
        if topo[j] <= rho * octile / OCTILE_STRETCH {
            continue;
        }
        let target = map.nodes()[j].position();
        let cells = field
            .path_to(explored.cell_of(target))
            .expect("finite distance");
        let mut raw: Vec<Point2> = vec![origin];
        raw.extend(
            cells
                .iter()
                .skip(1)
                .take(cells.len().saturating_sub(2))
                .map(|&c| explored.cell_center(c)),
        );
        raw.push(target);
        let path = smooth_path(explored, &raw, clearance);
        if topo[j] <= rho * polyline_length(&path) {
            continue;
        }
        let mut added_here = 0;
        for p in spaced_points(&path, th_s) {
            let near = map
                .nodes()
                .iter()
                .any(|n| n.position().dist(p) < th_s / 2.0);
            if near || !explored.is_free_at(p) || !sees_any_node(map, p, explored, clearance) {
                continue;
            }
            let rect = grow_free_rect(explored, p, max_half_extent)?;
            let id = map.add_node(p, rect, None);
            add_edges(map, id, explored, clearance)?;
            added_here += 1;
        }
        if added_here > 0 {
            inserted += added_here;
            topo = map.distances_from(new_id).0;
        }
    }
    Ok(inserted)
}

/// Interior vertices of `path` plus evenly spaced points so that no gap
/// exceeds `spacing`; the two endpoints are excluded.
fn spaced_points(path: &[Point2], spacing: f64) -> Vec<Point2> {
    let mut out = vec![];
    for (k, w) in path.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        if k > 0 {
            out.push(a);
        }
        let n = (a.dist(b) / spacing).ceil().max(1.0) as usize;
        for i in 1..n {
            out.push(a.lerp(b, i as f64 / n as f64));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fht::{MapMeta, NodeKind};
    use crate::geometry::Rect;
    use crate::grid::{CellState, GridCoord};

    fn sample_at(x: f64, y: f64, entropy: f64) -> Sample {
        Sample {
            pose: Pose2::new(x, y, 0.0),
            descriptor: Descriptor::from_raw(vec![0.5; 4]),
            scan: LaserScan::new(vec![1.0; 8], 7.0),
            entropy,
        }
    }

    fn open(w: usize, h: usize) -> OccupancyGrid {
        OccupancyGrid::new(w, h, 0.1, CellState::Free)
    }

    #[test]
    fn gamma_order_is_validated() {
        let cfg = BuilderConfig {
            gamma1: 0.5,
            gamma2: 0.5,
            ..Default::default()
        };
        assert!(matches!(BuilderState::new(cfg), Err(Error::Config(_))));
    }

    #[test]
    fn bootstrap_creates_main_node() {
        let g = open(50, 50);
        let mut st = BuilderState::new(BuilderConfig::default()).unwrap();
        let mut m = FhtMap::new(MapMeta::new(4, 0.1));
        let ids = st.build_step(&mut m, sample_at(1.0, 1.0, 0.3), &g).unwrap();
        assert_eq!(ids, vec![0]);
        assert_eq!(m.node(0).unwrap().kind(), NodeKind::Main);
    }

    #[test]
    fn high_capability_never_emits() {
        let g = open(50, 50);
        let mut st = BuilderState::new(BuilderConfig::default()).unwrap();
        let mut m = FhtMap::new(MapMeta::new(4, 0.1));
        st.build_step(&mut m, sample_at(1.0, 1.0, 5.0), &g).unwrap();
        for i in 0..20 {
            let x = 1.0 + 0.05 * i as f64;
            assert!(st
                .build_step(&mut m, sample_at(x, 1.0, 0.1), &g)
                .unwrap()
                .is_empty());
        }
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn candidate_window_picks_highest_entropy() {
        // capability along x from a node at the origin with entropy 1,
        // sigma 1: C(x) = exp(-x²)
        let cfg = BuilderConfig {
            gamma1: 0.8,
            gamma2: 0.2,
            sigma_c: 1.0,
            ..Default::default()
        };
        let mut st = BuilderState::new(cfg).unwrap();
        let mut m = FhtMap::new(MapMeta::new(4, 0.1));
        m.add_node(
            Point2::new(0.0, 0.0),
            Rect::default(),
            Some(sample_at(0.0, 0.0, 1.0).main_data()),
        );
        let script = [(0.3, 0.1), (0.6, 0.5), (0.9, 0.9), (1.1, 0.7), (2.0, 0.0)];
        let mut out = None;
        for (x, h) in script {
            out = st.update_main_node(&m, &sample_at(x, 0.0, h), true).or(out);
        }
        assert_eq!(out.unwrap().pose.x, 0.9);
        assert!(!st.in_candidate_phase() && st.candidate_count() == 0);
    }

    #[test]
    fn candidate_ties_go_to_earliest() {
        let cfg = BuilderConfig {
            gamma1: 0.8,
            gamma2: 0.2,
            sigma_c: 1.0,
            ..Default::default()
        };
        let mut st = BuilderState::new(cfg).unwrap();
        let mut m = FhtMap::new(MapMeta::new(4, 0.1));
        m.add_node(
            Point2::new(0.0, 0.0),
            Rect::default(),
            Some(sample_at(0.0, 0.0, 1.0).main_data()),
        );
        let mut out = None;
        for (x, h) in [(0.6, 0.4), (0.9, 0.4), (2.0, 0.9)] {
            out = st.update_main_node(&m, &sample_at(x, 0.0, h), true).or(out);
        }
        assert_eq!(out.unwrap().pose.x, 0.6);
    }

    #[test]
    fn support_not_triggered_near_visible_node() {
        let g = open(50, 50);
        let mut m = FhtMap::new(MapMeta::new(4, 0.1));
        assert!(update_support_node(&m, &Pose2::new(1.0, 1.0, 0.0), &g, 3.0, 0.1).is_none());
        m.add_node(Point2::new(1.0, 1.0), Rect::default(), None);
        assert!(update_support_node(&m, &Pose2::new(1.5, 1.0, 0.0), &g, 3.0, 0.1).is_none());
        assert_eq!(
            update_support_node(&m, &Pose2::new(4.5, 1.0, 0.0), &g, 3.0, 0.1),
            Some(SupportTrigger::Sparse)
        );
    }

    #[test]
    fn support_triggered_behind_wall() {
        let mut g = open(50, 50);
        for r in 0..40 {
            g.set(GridCoord::new(15, r), CellState::Occupied);
        }
        let mut m = FhtMap::new(MapMeta::new(4, 0.1));
        m.add_node(Point2::new(1.0, 1.0), Rect::default(), None);
        assert_eq!(
            update_support_node(&m, &Pose2::new(2.0, 1.0, 0.0), &g, 3.0, 0.1),
            Some(SupportTrigger::Disconnected)
        );
    }

    #[test]
    fn edges_in_a_room() {
        let g = open(50, 50);
        let mut m = FhtMap::new(MapMeta::new(4, 0.1));
        let a = m.add_node(Point2::new(1.0, 1.0), Rect::default(), None);
        assert_eq!(add_edges(&mut m, a, &g, 0.1).unwrap(), 0);
        let b = m.add_node(Point2::new(3.0, 4.0), Rect::default(), None);
        assert_eq!(add_edges(&mut m, b, &g, 0.1).unwrap(), 1);
    }

    #[test]
    fn infinite_rho_never_refines() {
        let g = open(50, 50);
        let mut m = FhtMap::new(MapMeta::new(4, 0.1));
        m.add_node(Point2::new(1.0, 1.0), Rect::default(), None);
        m.add_node(Point2::new(3.0, 1.0), Rect::default(), None);
        assert_eq!(
            refine_map(&mut m, &g, 1, f64::INFINITY, 3.0, 0.1, 7.0).unwrap(),
            0
        );
    }

    #[test]
    fn spaced_points_respect_spacing() {
        let path = [
            Point2::new(0.0, 0.0),
            Point2::new(7.0, 0.0),
            Point2::new(7.0, 2.0),
        ];
        let pts = spaced_points(&path, 3.0);
        let mut all = vec![path[0]];
        all.extend(&pts);
        all.push(path[2]);
        assert!(all.windows(2).all(|w| w[0].dist(w[1]) <= 3.0 + 1e-12));
        assert!(pts.contains(&Point2::new(7.0, 0.0)));
    }
}
