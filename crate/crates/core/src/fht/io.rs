//! Versioned JSON map files. Coordinates, descriptors and ranges are binary32;
//! a beam without return is written as range 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Rect};
use crate::world_sim::{Descriptor, LaserScan};

use super::{FhtMap, MainData, MapMeta};

pub const MAP_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct FileMap {
    version: u32,
    meta: FileMeta,
    nodes: Vec<FileNode>,
    edges: Vec<[usize; 2]>,
}

#[derive(Serialize, Deserialize)]
struct FileMeta {
    descriptor_dim: usize,
    resolution: f64,
    frame: String,
}

#[derive(Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum FileKind {
    Main,
    Support,
}

#[derive(Serialize, Deserialize)]
struct FileNode {
    id: usize,
    kind: FileKind,
    position: [f32; 2],
    rect: [f32; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    entropy: Option<f32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    descriptor: Option<Vec<f32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scan: Option<FileScan>,
}

#[derive(Serialize, Deserialize)]
struct FileScan {
    max_range: f32,
    ranges: Vec<f32>,
}

/// Compact (whitespace-free) JSON encoding.
pub fn serialize(map: &FhtMap) -> Vec<u8> {
    let nodes = map
        .nodes()
        .iter()
        .map(|n| {
            let p = n.position();
            let r = n.free_rect();
            let main = n.main();
            FileNode {
                id: n.id(),
                kind: if main.is_some() {
                    FileKind::Main
                } else {
                    FileKind::Support
                },
                position: [p.x as f32, p.y as f32],
                rect: [r.xmin as f32, r.ymin as f32, r.xmax as f32, r.ymax as f32],
                entropy: main.map(|m| m.entropy as f32),
                descriptor: main.map(|m| m.descriptor.values().to_vec()),
                scan: main.map(|m| FileScan {
                    max_range: m.scan.max_range(),
                    ranges: m
                        .scan
                        .ranges()
                        .iter()
                        .map(|&r| if r.is_finite() { r } else { 0.0 })
                        .collect(),
                }),
            }
        })
        .collect();
    let file = FileMap {
        version: MAP_VERSION,
        meta: FileMeta {
            descriptor_dim: map.meta().descriptor_dim,
            resolution: map.meta().resolution,
            frame: map.meta().frame.clone(),
        },
        nodes,
        edges: map.edges().iter().map(|&(a, b)| [a, b]).collect(),
    };
    serde_json::to_vec(&file).expect("map serialization cannot fail")
}

pub fn storage_bytes(map: &FhtMap) -> usize {
    serialize(map).len()
}

pub fn deserialize(bytes: &[u8]) -> Result<FhtMap> {
    #[derive(Deserialize)]
    struct Probe {
        version: u32,
    }
    let probe: Probe = serde_json::from_slice(bytes)?;
    if probe.version != MAP_VERSION {
        return Err(Error::Version {
            found: probe.version,
            expected: MAP_VERSION,
        });
    }
    let file: FileMap = serde_json::from_slice(bytes)?;
    let mut map = FhtMap::new(MapMeta {
        descriptor_dim: file.meta.descriptor_dim,
        resolution: file.meta.resolution,
        frame: file.meta.frame,
    });
    for (expected, n) in file.nodes.into_iter().enumerate() {
        if n.id != expected {
            return Err(Error::MalformedMap(format!(
                "node ids must be dense, found {} at {expected}",
                n.id
            )));
        }
        let main = match (n.kind, n.entropy, n.descriptor, n.scan) {
            (FileKind::Support, None, None, None) => None,
            (FileKind::Support, ..) => {
                return Err(Error::MalformedMap(format!(
                    "support node {expected} carries main-node fields"
                )));
            }
            (FileKind::Main, Some(entropy), Some(descriptor), Some(scan)) => {
                if descriptor.len() != map.meta().descriptor_dim {
                    return Err(Error::MalformedMap(format!(
                        "node {expected}: descriptor has {} components, expected {}",
                        descriptor.len(),
                        map.meta().descriptor_dim
                    )));
                }
                let ranges = scan
                    .ranges
                    .into_iter()
                    .map(|r| if r > 0.0 { r } else { LaserScan::NO_RETURN })
                    .collect();
                Some(MainData {
                    descriptor: Descriptor::from_raw(descriptor),
                    scan: LaserScan::new(ranges, scan.max_range),
                    entropy: entropy as f64,
                })
            }
            (FileKind::Main, ..) => {
                return Err(Error::MalformedMap(format!(
                    "main node {expected} is missing fields"
                )));
            }
        };
        let [x, y] = n.position;
        let [x0, y0, x1, y1] = n.rect;
        map.add_node(
            Point2::new(x as f64, y as f64),
            Rect::new(x0 as f64, y0 as f64, x1 as f64, y1 as f64),
            main,
        );
    }
    for [a, b] in file.edges {
        if !map
            .add_edge(a, b)
            .map_err(|e| Error::MalformedMap(e.to_string()))?
        {
            return Err(Error::MalformedMap(format!("duplicate edge ({a}, {b})")));
        }
    }
    Ok(map)
}
