use crate::error::{Error, Result};
use crate::geometry::{Point2, Pose2};

use super::World;

/// Sample poses along a polyline, each segment split into pieces no longer
/// than `step`, heading tangent to the motion. Vertices are kept, so the last
/// pose sits at the path end.
pub fn move_along(world: &World, path: &[Point2], step: f64) -> Result<Vec<Pose2>> {
    assert!(step > 0.0, "step must be positive");
    let grid = world.truth();
    let Some(&first) = path.first() else {
        return Ok(vec![]);
    };
    if !grid.is_free_at(first) {
        return Err(Error::PathBlocked { index: 0 });
    }
    for (i, w) in path.windows(2).enumerate() {
        if !grid.segment_in_free(w[0], w[1], 0.0) {
            return Err(Error::PathBlocked { index: i + 1 });
        }
    }

    let mut poses = vec![];
    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = a.dist(b);
        if len == 0.0 {
            continue;
        }
        let heading = (b.y - a.y).atan2(b.x - a.x);
        let n = (len / step).ceil().max(1.0) as usize;
        let start = if poses.is_empty() { 0 } else { 1 };
        for i in start..=n {
            let p = if i == n {
                b
            } else {
                a.lerp(b, i as f64 / n as f64)
            };
            poses.push(Pose2::new(p.x, p.y, heading));
        }
    }
    if poses.is_empty() {
        poses.push(Pose2::new(first.x, first.y, 0.0));
    }
    Ok(poses)
}
