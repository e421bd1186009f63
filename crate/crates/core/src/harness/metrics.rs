use serde::Serialize;

use crate::geometry::Point2;
use crate::geometry::{angle_diff, Transform2};
use crate::grid::OccupancyGrid;
use crate::gridpath::grid_route_length;

/// Translation and heading error of a relocalization result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelocErrors {
    /// Translation error relative to the true offset, or absolute when the
    /// true offset is (near) zero.
    pub eps_t: f64,
    pub eps_theta_deg: f64,
    /// Absolute translation error, meters.
    pub abs_t: f64,
    /// Set when `eps_t` is absolute.
    pub absolute: bool,
}

pub fn metric_reloc_errors(t_final: &Transform2, t_gt: &Transform2) -> RelocErrors {
    let abs_t = (t_final.x - t_gt.x).hypot(t_final.y - t_gt.y);
    let norm = t_gt.x.hypot(t_gt.y);
    let absolute = norm < 1e-6;
    RelocErrors {
        eps_t: if absolute { abs_t } else { abs_t / norm },
        eps_theta_deg: angle_diff(t_final.theta, t_gt.theta).abs().to_degrees(),
        abs_t,
        absolute,
    }
}

/// Under 1 m of translation error and under 5° of heading error.
pub fn metric_success(t_final: &Transform2, t_gt: &Transform2) -> bool {
    let e = metric_reloc_errors(t_final, t_gt);
    e.abs_t < 1.0 && e.eps_theta_deg < 5.0
}

pub fn metric_c_path(s_topo: f64, s_grid: f64) -> f64 {
    assert!(s_grid > 0.0, "grid distance must be positive");
    s_topo / s_grid
}

/// Baseline travel distance: A* over Free cells, shortened by line of sight.
pub fn grid_baseline_length(explored: &OccupancyGrid, a: Point2, b: Point2) -> Option<f64> {
    grid_route_length(explored, a, b, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub max: Option<f64>,
}

/// Mean, population standard deviation and maximum; `None` when empty.
pub fn summarize(values: &[f64]) -> Summary {
    if values.is_empty() {
        return Summary {
            mean: None,
            std: None,
            max: None,
        };
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Summary {
        mean: Some(mean),
        std: Some(var.sqrt()),
        max: values.iter().copied().reduce(f64::max),
    }
}
