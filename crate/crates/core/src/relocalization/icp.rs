//! Global 2D ICP: point-to-point from multiple rotation seeds, then a
//! point-to-line polish of the winner.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Transform2};
use crate::world_sim::LaserScan;

pub const MIN_POINTS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct IcpConfig {
    pub n_seeds: usize,
    pub max_iterations: usize,
    /// Fraction of closest pairs kept in each iteration.
    pub trim: f64,
    /// Residuals above this count as non-overlap when ranking seeds.
    pub truncation: f64,
    /// Distance within which a point counts as an inlier.
    pub inlier_distance: f64,
    pub min_inlier_fraction: f64,
    pub rms_accept: f64,
    /// Reject when a clearly different alignment costs at most this many
    /// times the best one (symmetric surroundings).
    pub ambiguity_ratio: f64,
}

impl Default for IcpConfig {
    fn default() -> Self {
        Self {
            n_seeds: 36,
            max_iterations: 40,
            trim: 0.7,
            truncation: 0.5,
            inlier_distance: 0.3,
            min_inlier_fraction: 0.5,
            rms_accept: 0.2,
            ambiguity_ratio: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alignment {
    /// Maps current-frame points into the reference frame.
    pub transform: Transform2,
    /// RMS over inlier pairs, meters.
    pub rms: f64,
    pub inlier_fraction: f64,
    cost: f64,
}

/// Bucketed nearest-neighbour lookup over a fixed point set.
struct PointIndex<'a> {
    points: &'a [Point2],
    cell: f64,
    buckets: HashMap<(i32, i32), Vec<usize>>,
}

impl<'a> PointIndex<'a> {
    fn new(points: &'a [Point2], cell: f64) -> Self {
        let mut buckets: HashMap<(i32, i32), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(Self::key(*p, cell)).or_default().push(i);
        }
        Self {
            points,
            cell,
            buckets,
        }
    }

    fn key(p: Point2, cell: f64) -> (i32, i32) {
        ((p.x / cell).floor() as i32, (p.y / cell).floor() as i32)
    }

    /// Nearest point within `max_dist`, as (index, distance).
    fn nearest(&self, q: Point2, max_dist: f64) -> Option<(usize, f64)> {
        let (kx, ky) = Self::key(q, self.cell);
        let max_ring = (max_dist / self.cell).ceil() as i32 + 1;
        let mut best: Option<(usize, f64)> = None;
        for ring in 0..=max_ring {
            if let Some((_, d)) = best {
                // every point in this ring is at least (ring-1)·cell away
                if d <= (ring - 1) as f64 * self.cell {
                    break;
                }
            }
            for dy in -ring..=ring {
                for dx in -ring..=ring {
                    if dx.abs() != ring && dy.abs() != ring {
                        continue;
                    }
                    let Some(bucket) = self.buckets.get(&(kx + dx, ky + dy)) else {
                        continue;
                    };
                    for &i in bucket {
                        let d = self.points[i].dist(q);
                        if d <= max_dist && best.is_none_or(|(_, b)| d < b) {
                            best = Some((i, d));
                        }
                    }
                }
            }
        }
        best
    }
}

/// Closed-form rigid fit mapping `src[i]` onto `dst[i]`.
fn fit_rigid(src: &[Point2], dst: &[Point2]) -> Transform2 {
    let n = src.len() as f64;
    let sc = src.iter().fold(Point2::default(), |a, &p| a + p) * (1.0 / n);
    let dc = dst.iter().fold(Point2::default(), |a, &p| a + p) * (1.0 / n);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (s, d) in src.iter().zip(dst) {
        let (a, b) = (*s - sc, *d - dc);
        sxx += a.x * b.x + a.y * b.y;
        sxy += a.x * b.y - a.y * b.x;
    }
    let theta = sxy.atan2(sxx);
    let rot = Transform2::new(0.0, 0.0, theta);
    let t = dc - rot.rotate(sc);
    Transform2::new(t.x, t.y, theta)
}

fn refine(
    reference: &PointIndex,
    current: &[Point2],
    init: Transform2,
    cfg: &IcpConfig,
) -> Transform2 {
    let mut t = init;
    let search = 2.0;
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(current.len());
    for _ in 0..cfg.max_iterations {
        pairs.clear();
        for (j, &q) in current.iter().enumerate() {
            if let Some((i, d)) = reference.nearest(t.apply(q), search) {
                pairs.push((d, j, i));
            }
        }
        if pairs.len() < MIN_POINTS {
            break;
        }
        pairs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let keep = ((pairs.len() as f64 * cfg.trim).ceil() as usize)
            .max(MIN_POINTS)
            .min(pairs.len());
        let src: Vec<Point2> = pairs[..keep].iter().map(|&(_, j, _)| current[j]).collect();
        let dst: Vec<Point2> = pairs[..keep]
            .iter()
            .map(|&(_, _, i)| reference.points[i])
            .collect();
        let next = fit_rigid(&src, &dst);
        let r = next.residual(&t);
        t = next;
        if r[0].abs() < 1e-7 && r[1].abs() < 1e-7 && r[2].abs() < 1e-9 {
            break;
        }
    }
    t
}

/// Unit normals of scan points from their beam neighbours; None where the
/// neighbours are too far apart to share a surface.
fn normals(points: &[Point2]) -> Vec<Option<Point2>> {
    let n = points.len();
    (0..n)
        .map(|i| {
            let a = points[(i + n - 1) % n];
            let b = points[(i + 1) % n];
            let p = points[i];
            if n < 3 || a.dist(p) > 0.3 || b.dist(p) > 0.3 {
                return None;
            }
            let t = b - a;
            let len = t.norm();
            (len > 1e-9).then(|| Point2::new(-t.y / len, t.x / len))
        })
        .collect()
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    if d.abs() < 1e-12 {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut m = a;
        for r in 0..3 {
            m[r][k] = b[r];
        }
        *o = det(m) / d;
    }
    Some(out)
}

/// Point-to-line Gauss-Newton polish of an alignment.
fn refine_point_to_line(
    reference: &PointIndex,
    normals: &[Option<Point2>],
    current: &[Point2],
    init: Transform2,
    cfg: &IcpConfig,
) -> Transform2 {
    let mut t = init;
    let mut rows: Vec<(f64, [f64; 3])> = Vec::with_capacity(current.len());
    for _ in 0..cfg.max_iterations {
        rows.clear();
        for &q in current {
            let tq = t.apply(q);
            let Some((i, _)) = reference.nearest(tq, cfg.inlier_distance) else {
                continue;
            };
            let Some(n) = normals[i] else {
                continue;
            };
            let r = n.dot(tq - reference.points[i]);
            let rq = t.rotate(q);
            rows.push((r, [n.x, n.y, n.x * -rq.y + n.y * rq.x]));
        }
        if rows.len() < MIN_POINTS {
            return t;
        }
        rows.sort_by(|a, b| a.0.abs().partial_cmp(&b.0.abs()).unwrap());
        let keep = ((rows.len() as f64 * cfg.trim).ceil() as usize)
            .max(MIN_POINTS)
            .min(rows.len());
        let mut h = [[0.0; 3]; 3];
        let mut g = [0.0; 3];
        for (r, j) in &rows[..keep] {
            for a in 0..3 {
                g[a] -= j[a] * r;
                for b in 0..3 {
                    h[a][b] += j[a] * j[b];
                }
            }
        }
        let Some(dx) = solve3(h, g) else {
            return t;
        };
        t = Transform2::new(t.x + dx[0], t.y + dx[1], t.theta + dx[2]);
        if dx[0].abs() < 1e-8 && dx[1].abs() < 1e-8 && dx[2].abs() < 1e-10 {
            break;
        }
    }
    t
}

fn score(reference: &PointIndex, current: &[Point2], t: Transform2, cfg: &IcpConfig) -> Alignment {
    let tau = cfg.truncation;
    let mut cost = 0.0;
    let mut sq_in = 0.0;
    let mut n_in = 0usize;
    for &q in current {
        let d = reference.nearest(t.apply(q), tau).map_or(tau, |(_, d)| d);
        cost += d * d;
        if d < cfg.inlier_distance {
            sq_in += d * d;
            n_in += 1;
        }
    }
    Alignment {
        transform: t,
        rms: if n_in > 0 {
            (sq_in / n_in as f64).sqrt()
        } else {
            f64::INFINITY
        },
        inlier_fraction: n_in as f64 / current.len() as f64,
        cost: cost / current.len() as f64,
    }
}

fn distinct(a: &Transform2, b: &Transform2) -> bool {
    let r = a.residual(b);
    r[0].hypot(r[1]) > 0.5 || r[2].abs() > 10f64.to_radians()
}

/// Aligns `current` to `reference` without an initial guess. Every seed
/// rotation starts with the translation that matches the centroids; the
/// seed with the lowest truncated residual wins and must pass the inlier
/// checks. A clearly different seed result of nearly the same cost makes
/// the alignment ambiguous and it is rejected.
pub fn global_icp(
    reference: &LaserScan,
    current: &LaserScan,
    cfg: &IcpConfig,
) -> Result<Alignment> {
    let p = reference.points();
    let q = current.points();
    let n = p.len().min(q.len());
    if n < MIN_POINTS {
        return Err(Error::InsufficientOverlap(n));
    }
    let index = PointIndex::new(&p, 0.25);
    let pc = p.iter().fold(Point2::default(), |a, &x| a + x) * (1.0 / p.len() as f64);
    let qc = q.iter().fold(Point2::default(), |a, &x| a + x) * (1.0 / q.len() as f64);

    let seeds: Vec<Alignment> = (0..cfg.n_seeds.max(1))
        .map(|k| {
            let theta = -PI + TAU * (k + 1) as f64 / cfg.n_seeds.max(1) as f64;
            let rot = Transform2::new(0.0, 0.0, theta);
            let t0 = pc - rot.rotate(qc);
            let t = refine(&index, &q, Transform2::new(t0.x, t0.y, theta), cfg);
            score(&index, &q, t, cfg)
        })
        .collect();
    let mut coarse = seeds[0];
    for a in &seeds[1..] {
        if a.cost < coarse.cost {
            coarse = *a;
        }
    }
    let rival = seeds
        .iter()
        .filter(|a| distinct(&a.transform, &coarse.transform))
        .map(|a| a.cost)
        .fold(f64::INFINITY, f64::min);
    if rival <= cfg.ambiguity_ratio * coarse.cost {
        return Err(Error::AlignmentFailed(coarse.rms));
    }
    let polished = refine_point_to_line(&index, &normals(&p), &q, coarse.transform, cfg);
    let fine = score(&index, &q, polished, cfg);
    // the point-to-point cost favours its own optimum; accept the polish
    // unless it lost overlap
    let best = if fine.inlier_fraction >= 0.95 * coarse.inlier_fraction {
        fine
    } else {
        coarse
    };
    if best.inlier_fraction < cfg.min_inlier_fraction
        || best.rms.is_nan()
        || best.rms >= cfg.rms_accept
    {
        return Err(Error::AlignmentFailed(best.rms));
    }
    Ok(best)
}
