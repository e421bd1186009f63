//! The hierarchical topological map: main nodes carry a place descriptor and
//! a local scan, support nodes only a position and a free rectangle.

mod builder;
mod io;
mod rect;

pub use builder::{
    add_edges, refine_map, update_support_node, BuildMode, BuildStats, BuilderConfig, BuilderState,
    Sample, SupportTrigger,
};
pub use io::{deserialize, serialize, storage_bytes, MAP_VERSION};
pub use rect::grow_free_rect;

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::geometry::{Point2, Rect};
use crate::world_sim::{Descriptor, LaserScan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Main,
    Support,
}

/// Payload only main nodes carry.
#[derive(Debug, Clone, PartialEq)]
pub struct MainData {
    pub descriptor: Descriptor,
    /// Scan captured at heading 0, so the node frame is a pure translation.
    pub scan: LaserScan,
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapNode {
    id: usize,
    position: Point2,
    free_rect: Rect,
    main: Option<MainData>,
}

impl MapNode {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn kind(&self) -> NodeKind {
        if self.main.is_some() {
            NodeKind::Main
        } else {
            NodeKind::Support
        }
    }

    pub fn is_main(&self) -> bool {
        self.main.is_some()
    }

    pub fn position(&self) -> Point2 {
        self.position
    }

    pub fn free_rect(&self) -> Rect {
        self.free_rect
    }

    pub fn main(&self) -> Option<&MainData> {
        self.main.as_ref()
    }

    pub fn descriptor(&self) -> Option<&Descriptor> {
        self.main.as_ref().map(|m| &m.descriptor)
    }

    pub fn scan(&self) -> Option<&LaserScan> {
        self.main.as_ref().map(|m| &m.scan)
    }

    pub fn entropy(&self) -> Option<f64> {
        self.main.as_ref().map(|m| m.entropy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapMeta {
    pub descriptor_dim: usize,
    pub resolution: f64,
    pub frame: String,
}

impl MapMeta {
    pub fn new(descriptor_dim: usize, resolution: f64) -> Self {
        Self {
            descriptor_dim,
            resolution,
            frame: "map".to_string(),
        }
    }
}

/// Undirected graph of map nodes. Ids are dense in creation order; edges are
/// stored as ordered pairs `(lo, hi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FhtMap {
    meta: MapMeta,
    nodes: Vec<MapNode>,
    edges: BTreeSet<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl FhtMap {
    pub fn new(meta: MapMeta) -> Self {
        Self {
            meta,
            nodes: vec![],
            edges: BTreeSet::new(),
            adjacency: vec![],
        }
    }

    pub fn meta(&self) -> &MapMeta {
        &self.meta
    }

    pub fn nodes(&self) -> &[MapNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: usize) -> Result<&MapNode> {
        self.nodes.get(id).ok_or(Error::UnknownNode(id))
    }

    pub fn main_nodes(&self) -> impl Iterator<Item = &MapNode> {
        self.nodes.iter().filter(|n| n.is_main())
    }

    pub fn count(&self, kind: NodeKind) -> usize {
        self.nodes.iter().filter(|n| n.kind() == kind).count()
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn neighbors(&self, id: usize) -> &[usize] {
        &self.adjacency[id]
    }

    /// Appends a node; position and rectangle are rounded to binary32 so the
    /// map survives a file round trip unchanged.
    pub fn add_node(&mut self, position: Point2, free_rect: Rect, main: Option<MainData>) -> usize {
        let id = self.nodes.len();
        let main = main.map(|mut m| {
            m.entropy = crate::geometry::snap_f32(m.entropy);
            m
        });
        self.nodes.push(MapNode {
            id,
            position: position.snap_f32(),
            free_rect: free_rect.snap_f32(),
            main,
        });
        self.adjacency.push(vec![]);
        id
    }

    pub fn set_free_rect(&mut self, id: usize, rect: Rect) -> Result<()> {
        let node = self.nodes.get_mut(id).ok_or(Error::UnknownNode(id))?;
        node.free_rect = rect.snap_f32();
        Ok(())
    }

    /// Returns false if the edge already existed.
    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<bool> {
        if a >= self.nodes.len() {
            return Err(Error::UnknownNode(a));
        }
        if b >= self.nodes.len() {
            return Err(Error::UnknownNode(b));
        }
        if a == b {
            return Err(Error::MalformedMap(format!("self-loop on node {a}")));
        }
        let key = (a.min(b), a.max(b));
        if !self.edges.insert(key) {
            return Ok(false);
        }
        self.adjacency[a].push(b);
        self.adjacency[b].push(a);
        Ok(true)
    }

    pub fn edge_length(&self, a: usize, b: usize) -> f64 {
        self.nodes[a].position.dist(self.nodes[b].position)
    }

    /// Number of connected components (0 for an empty map).
    pub fn components(&self) -> usize {
        let n = self.nodes.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        let mut count = n;
        for &(a, b) in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
                count -= 1;
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.components() <= 1
    }

    /// Graph distances from `source` with Euclidean edge weights.
    pub fn distances_from(&self, source: usize) -> (Vec<f64>, Vec<usize>) {
        graph_dijkstra(self, source)
    }
}

fn graph_dijkstra(map: &FhtMap, source: usize) -> (Vec<f64>, Vec<usize>) {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    #[derive(PartialEq)]
    struct Key(f64);
    impl Eq for Key {}
    impl Ord for Key {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.0.total_cmp(&other.0)
        }
    }
    impl PartialOrd for Key {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }

    let n = map.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    if source >= n {
        return (dist, parent);
    }
    dist[source] = 0.0;
    let mut heap = BinaryHeap::from([Reverse((Key(0.0), source))]);
    while let Some(Reverse((Key(d), u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &v in map.neighbors(u) {
            let nd = d + map.edge_length(u, v);
            if nd < dist[v] {
                dist[v] = nd;
                parent[v] = u;
                heap.push(Reverse((Key(nd), v)));
            }
        }
    }
    (dist, parent)
}

/// Shannon entropy (natural log) of the histogram of descriptor components
/// over `n_bins` equal sub-intervals of [0, 1].
pub fn entropy(d: &Descriptor, n_bins: usize) -> f64 {
    assert!(n_bins >= 2, "entropy needs at least two bins");
    let mut counts = vec![0usize; n_bins];
    for &v in d.values() {
        let v = (v as f64).clamp(0.0, 1.0);
        counts[((v * n_bins as f64) as usize).min(n_bins - 1)] += 1;
    }
    let total = d.dim() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum()
}

/// Entropy-weighted Gaussian coverage of main nodes at `q`.
pub fn reloc_capability(map: &FhtMap, q: Point2, sigma_c: f64) -> f64 {
    let s2 = sigma_c * sigma_c;
    map.main_nodes()
        .map(|n| n.entropy().unwrap_or(0.0) * (-n.position().dist_sq(q) / s2).exp())
        .sum()
}
