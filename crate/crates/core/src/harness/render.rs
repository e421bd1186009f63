//! Plain-text and portable-bitmap renders of a map over its explored grid.

use std::fmt::Write as _;

use crate::fht::{FhtMap, NodeKind};
use crate::geometry::{Point2, Pose2};
use crate::grid::{CellState, OccupancyGrid};

/// Render layers, later variants drawn on top.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Glyph {
    Unknown,
    Free,
    Occupied,
    Rect,
    Trajectory,
    Edge,
    Support,
    Main,
}

impl Glyph {
    fn ascii(self) -> char {
        match self {
            Glyph::Unknown => ' ',
            Glyph::Free => '.',
            Glyph::Occupied => '#',
            Glyph::Rect => ':',
            Glyph::Trajectory => '~',
            Glyph::Edge => '+',
            Glyph::Support => 's',
            Glyph::Main => 'M',
        }
    }
}

struct Canvas {
    width: usize,
    height: usize,
    origin: Point2,
    // meters per canvas pixel
    scale: f64,
    pixels: Vec<Glyph>,
}

impl Canvas {
    fn new(origin: Point2, extent: Point2, scale: f64) -> Self {
        let width = ((extent.x - origin.x) / scale).ceil().max(1.0) as usize;
        let height = ((extent.y - origin.y) / scale).ceil().max(1.0) as usize;
        Self {
            width,
            height,
            origin,
            scale,
            pixels: vec![Glyph::Unknown; width * height],
        }
    }

    fn pixel_of(&self, p: Point2) -> (i64, i64) {
        (
            ((p.x - self.origin.x) / self.scale).floor() as i64,
            ((p.y - self.origin.y) / self.scale).floor() as i64,
        )
    }

    fn put(&mut self, x: i64, y: i64, g: Glyph) {
        if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            let i = y as usize * self.width + x as usize;
            self.pixels[i] = self.pixels[i].max(g);
        }
    }

    fn line(&mut self, a: Point2, b: Point2, g: Glyph) {
        let (x0, y0) = self.pixel_of(a);
        let (x1, y1) = self.pixel_of(b);
        let n = (x1 - x0).abs().max((y1 - y0).abs()).max(1);
        for k in 0..=n {
            let t = k as f64 / n as f64;
            let x = x0 as f64 + t * (x1 - x0) as f64;
            let y = y0 as f64 + t * (y1 - y0) as f64;
            self.put(x.round() as i64, y.round() as i64, g);
        }
    }

    /// Rows from the top (largest y) down.
    fn rows(&self) -> impl Iterator<Item = &[Glyph]> {
        self.pixels.chunks(self.width).rev()
    }
}

/// Counts shown in the legend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Legend {
    pub main_nodes: usize,
    pub support_nodes: usize,
    pub edges: usize,
    pub trajectory_poses: usize,
}

impl Legend {
    pub fn of(map: &FhtMap, trajectory: &[Pose2]) -> Self {
        Self {
            main_nodes: map.count(NodeKind::Main),
            support_nodes: map.count(NodeKind::Support),
            edges: map.edges().len(),
            trajectory_poses: trajectory.len(),
        }
    }
}

fn draw(
    map: &FhtMap,
    explored: Option<&OccupancyGrid>,
    trajectory: &[Pose2],
    scale: f64,
) -> Canvas {
    let mut canvas = match explored {
        Some(g) => {
            let o = g.origin().position();
            let extent = Point2::new(
                o.x + g.width() as f64 * g.resolution(),
                o.y + g.height() as f64 * g.resolution(),
            );
            Canvas::new(o, extent, scale)
        }
        None => {
            let (mut lo, mut hi) = (Point2::new(0.0, 0.0), Point2::new(1.0, 1.0));
            if let Some(first) = map.nodes().first() {
                let r = first.free_rect();
                lo = Point2::new(r.xmin, r.ymin);
                hi = Point2::new(r.xmax, r.ymax);
            }
            for n in map.nodes() {
                let r = n.free_rect();
                let p = n.position();
                lo = Point2::new(lo.x.min(r.xmin).min(p.x), lo.y.min(r.ymin).min(p.y));
                hi = Point2::new(hi.x.max(r.xmax).max(p.x), hi.y.max(r.ymax).max(p.y));
            }
            for t in trajectory {
                lo = Point2::new(lo.x.min(t.x), lo.y.min(t.y));
                hi = Point2::new(hi.x.max(t.x), hi.y.max(t.y));
            }
            let pad = 2.0 * scale;
            Canvas::new(
                Point2::new(lo.x - pad, lo.y - pad),
                Point2::new(hi.x + pad, hi.y + pad),
                scale,
            )
        }
    };

    if let Some(g) = explored {
        for i in 0..g.len() {
            let c = g.coord_of(i);
            let glyph = match g.cells()[i] {
                CellState::Unknown => Glyph::Unknown,
                CellState::Free => Glyph::Free,
                CellState::Occupied => Glyph::Occupied,
            };
            let (x, y) = canvas.pixel_of(g.cell_center(c));
            canvas.put(x, y, glyph);
        }
    }
    for n in map.nodes() {
        let r = n.free_rect();
        let corners = [
            Point2::new(r.xmin, r.ymin),
            Point2::new(r.xmax, r.ymin),
            Point2::new(r.xmax, r.ymax),
            Point2::new(r.xmin, r.ymax),
        ];
        // keep the outline inside the rectangle
        let inset = |p: Point2| {
            Point2::new(
                p.x.clamp(r.xmin, (r.xmax - 1e-9).max(r.xmin)),
                p.y.clamp(r.ymin, (r.ymax - 1e-9).max(r.ymin)),
            )
        };
        for k in 0..4 {
            canvas.line(inset(corners[k]), inset(corners[(k + 1) % 4]), Glyph::Rect);
        }
    }
    for w in trajectory.windows(2) {
        canvas.line(w[0].position(), w[1].position(), Glyph::Trajectory);
    }
    if trajectory.len() == 1 {
        let (x, y) = canvas.pixel_of(trajectory[0].position());
        canvas.put(x, y, Glyph::Trajectory);
    }
    for &(a, b) in map.edges() {
        canvas.line(
            map.nodes()[a].position(),
            map.nodes()[b].position(),
            Glyph::Edge,
        );
    }
    for n in map.nodes() {
        let (x, y) = canvas.pixel_of(n.position());
        canvas.put(
            x,
            y,
            if n.is_main() {
                Glyph::Main
            } else {
                Glyph::Support
            },
        );
    }
    canvas
}

/// Text render, one character per `scale` meters, top row is largest y.
/// A legend with node, edge and pose counts follows the picture.
pub fn render_ascii(
    map: &FhtMap,
    explored: Option<&OccupancyGrid>,
    trajectory: &[Pose2],
    scale: f64,
) -> String {
    let canvas = draw(map, explored, trajectory, scale);
    let mut out = String::with_capacity((canvas.width + 1) * canvas.height + 256);
    for row in canvas.rows() {
        out.extend(row.iter().map(|g| g.ascii()));
        out.push('\n');
    }
    let l = Legend::of(map, trajectory);
    let _ = writeln!(out, "M main node ({})", l.main_nodes);
    let _ = writeln!(out, "s support node ({})", l.support_nodes);
    let _ = writeln!(out, "+ edge ({})", l.edges);
    let _ = writeln!(out, "~ trajectory ({} poses)", l.trajectory_poses);
    let _ = writeln!(out, ": free rectangle");
    let _ = writeln!(out, "# occupied  . free  (blank) unknown");
    out
}

/// Legend counts parsed back from [`render_ascii`] output.
pub fn parse_legend(text: &str) -> Option<Legend> {
    let count = |prefix: &str| -> Option<usize> {
        let line = text.lines().find(|l| l.starts_with(prefix))?;
        let inner = &line[line.find('(')? + 1..line.find(')')?];
        inner.split_whitespace().next()?.parse().ok()
    };
    Some(Legend {
        main_nodes: count("M main node")?,
        support_nodes: count("s support node")?,
        edges: count("+ edge")?,
        trajectory_poses: count("~ trajectory")?,
    })
}

/// Plain PBM. Occupied cells, edges and the trajectory are black; main
/// nodes are filled 5×5 squares and support nodes hollow 5×5 squares, so
/// the two stay distinguishable in one bit per pixel.
pub fn render_pbm(
    map: &FhtMap,
    explored: Option<&OccupancyGrid>,
    trajectory: &[Pose2],
    scale: f64,
) -> String {
    let mut canvas = draw(map, explored, trajectory, scale);
    let mut marks = vec![false; canvas.pixels.len()];
    for (i, g) in canvas.pixels.iter().enumerate() {
        marks[i] = matches!(g, Glyph::Occupied | Glyph::Edge | Glyph::Trajectory);
    }
    for n in map.nodes() {
        let (cx, cy) = canvas.pixel_of(n.position());
        for dy in -2..=2i64 {
            for dx in -2..=2i64 {
                let ring = dx.abs() == 2 || dy.abs() == 2;
                let (x, y) = (cx + dx, cy + dy);
                if x < 0 || y < 0 || x as usize >= canvas.width || y as usize >= canvas.height {
                    continue;
                }
                let i = y as usize * canvas.width + x as usize;
                if n.is_main() || ring {
                    marks[i] = true;
                } else {
                    marks[i] = false;
                    canvas.pixels[i] = Glyph::Support;
                }
            }
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "P1");
    let l = Legend::of(map, trajectory);
    let _ = writeln!(
        out,
        "# main {} support {} edges {} poses {}",
        l.main_nodes, l.support_nodes, l.edges, l.trajectory_poses
    );
    let _ = writeln!(out, "{} {}", canvas.width, canvas.height);
    for y in (0..canvas.height).rev() {
        let row = &marks[y * canvas.width..(y + 1) * canvas.width];
        // plain PBM lines should stay under 70 characters
        for chunk in row.chunks(34) {
            let line: Vec<&str> = chunk.iter().map(|&m| if m { "1" } else { "0" }).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fht::MapMeta;
    use crate::geometry::Rect;

    #[test]
    fn empty_map_renders_grid_only() {
        let mut g = OccupancyGrid::new(4, 3, 1.0, CellState::Free);
        g.set(crate::grid::GridCoord::new(0, 0), CellState::Occupied);
        let text = render_ascii(&FhtMap::new(MapMeta::new(4, 1.0)), Some(&g), &[], 1.0);
        let rows: Vec<&str> = text.lines().take(3).collect();
        assert_eq!(rows, ["....", "....", "#..."]);
        assert_eq!(
            parse_legend(&text).unwrap(),
            Legend {
                main_nodes: 0,
                support_nodes: 0,
                edges: 0,
                trajectory_poses: 0
            }
        );
    }

    #[test]
    fn pbm_header_matches_canvas() {
        let mut m = FhtMap::new(MapMeta::new(4, 0.5));
        m.add_node(Point2::new(1.0, 1.0), Rect::new(0.0, 0.0, 2.0, 2.0), None);
        let pbm = render_pbm(&m, None, &[], 0.5);
        let mut lines = pbm.lines();
        assert_eq!(lines.next(), Some("P1"));
        assert!(lines.next().unwrap().starts_with('#'));
        let dims: Vec<usize> = lines
            .next()
            .unwrap()
            .split(' ')
            .map(|v| v.parse().unwrap())
            .collect();
        let bits: usize = lines.map(|l| l.split(' ').count()).sum();
        assert_eq!(bits, dims[0] * dims[1]);
    }
}
