#![allow(dead_code)]

use std::path::PathBuf;

use fht_core::fht::{FhtMap, MapMeta};
use fht_core::geometry::{Point2, Rect};
use fht_core::world_sim::{load_world, World};
use rand::Rng;

pub fn world_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("worlds")
        .join(format!("{name}.world"))
}

pub fn bundled_world(name: &str) -> World {
    let text = std::fs::read_to_string(world_path(name)).expect("bundled world");
    load_world(name, &text).expect("bundled world parses")
}

/// Support-only graph with square rects of random half size around
/// random positions in a 10 m square.
pub fn random_map(rng: &mut impl Rng, n: usize, p_edge: f64) -> FhtMap {
    let mut m = FhtMap::new(MapMeta::new(4, 0.1));
    for _ in 0..n {
        let p = Point2::new(rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0));
        let h = rng.gen_range(0.1..3.0);
        m.add_node(p, Rect::new(p.x - h, p.y - h, p.x + h, p.y + h), None);
    }
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(p_edge) {
                m.add_edge(a, b).unwrap();
            }
        }
    }
    m
}

/// All-pairs graph distances with straight-line edge weights.
pub fn floyd_warshall(m: &FhtMap) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
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
