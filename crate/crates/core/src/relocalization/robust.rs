//! Outlier rejection and robust averaging of SE(2) estimates.

use serde::{Deserialize, Serialize};

use crate::geometry::{angle_diff, wrap_angle, Transform2};

use super::Estimation;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// Per-component Huber with threshold `delta` (meters and radians).
    Huber {
        delta: f64,
    },
    L2,
}

impl Default for Loss {
    fn default() -> Self {
        Loss::Huber { delta: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragingConfig {
    pub loss: Loss,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for AveragingConfig {
    fn default() -> Self {
        Self {
            loss: Loss::default(),
            max_iterations: 50,
            tolerance: 1e-6,
        }
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// The sample angle with the smallest summed arc distance to all others.
pub fn circular_median(angles: &[f64]) -> f64 {
    let mut best = (f64::INFINITY, 0.0);
    for &a in angles {
        let cost: f64 = angles.iter().map(|&b| angle_diff(b, a).abs()).sum();
        if cost < best.0 {
            best = (cost, a);
        }
    }
    best.1
}

/// Drops estimates far from the component-wise median: translation
/// deviation above `3·MAD + 0.2 m` or angular deviation above
/// `3·MAD + 2°`. Order is preserved and at least one estimate survives.
pub fn reject_outliers(ests: &[Estimation]) -> Vec<Estimation> {
    if ests.len() <= 1 {
        return ests.to_vec();
    }
    let mx = median(&mut ests.iter().map(|e| e.t_est.x).collect::<Vec<_>>());
    let my = median(&mut ests.iter().map(|e| e.t_est.y).collect::<Vec<_>>());
    let thetas: Vec<f64> = ests.iter().map(|e| e.t_est.theta).collect();
    let mt = circular_median(&thetas);

    let dev_t: Vec<f64> = ests
        .iter()
        .map(|e| (e.t_est.x - mx).hypot(e.t_est.y - my))
        .collect();
    let dev_r: Vec<f64> = thetas.iter().map(|&t| angle_diff(t, mt).abs()).collect();
    let mad_t = median(&mut dev_t.clone());
    let mad_r = median(&mut dev_r.clone());
    let lim_t = 3.0 * mad_t + 0.2;
    let lim_r = 3.0 * mad_r + 2f64.to_radians();

    let kept: Vec<Estimation> = ests
        .iter()
        .zip(dev_t.iter().zip(&dev_r))
        .filter(|(_, (&dt, &dr))| dt <= lim_t && dr <= lim_r)
        .map(|(e, _)| e.clone())
        .collect();
    if !kept.is_empty() {
        return kept;
    }
    let nearest = (0..ests.len())
        .min_by(|&a, &b| {
            (dev_t[a], dev_r[a])
                .partial_cmp(&(dev_t[b], dev_r[b]))
                .unwrap()
        })
        .unwrap();
    vec![ests[nearest].clone()]
}

fn weight(loss: Loss, r: f64) -> f64 {
    match loss {
        Loss::L2 => 1.0,
        Loss::Huber { delta } => {
            let a = r.abs();
            if a <= delta {
                1.0
            } else {
                delta / a
            }
        }
    }
}

/// Per-component robust loss of `T_i ⊖ T` summed over all estimates.
pub fn objective(samples: &[Transform2], t: &Transform2, loss: Loss) -> f64 {
    let rho = |r: f64| match loss {
        Loss::L2 => 0.5 * r * r,
        Loss::Huber { delta } => {
            let a = r.abs();
            if a <= delta {
                0.5 * r * r
            } else {
                delta * (a - 0.5 * delta)
            }
        }
    };
    samples
        .iter()
        .map(|s| s.residual(t).iter().map(|&r| rho(r)).sum::<f64>())
        .sum()
}

/// Minimizer of [`objective`] by iteratively reweighted least squares.
/// Translation components are weighted means; the angle is the weighted
/// intrinsic mean of wrapped residuals, started from the circular mean.
pub fn average_transforms(samples: &[Transform2], cfg: &AveragingConfig) -> Transform2 {
    assert!(!samples.is_empty(), "nothing to average");
    if samples.len() == 1 {
        return samples[0];
    }
    let n = samples.len() as f64;
    let mut x = samples.iter().map(|s| s.x).sum::<f64>() / n;
    let mut y = samples.iter().map(|s| s.y).sum::<f64>() / n;
    let (ss, cs) = samples.iter().fold((0.0, 0.0), |(a, b), s| {
        (a + s.theta.sin(), b + s.theta.cos())
    });
    let mut theta = ss.atan2(cs);
    theta = intrinsic_mean(samples, theta, &vec![1.0; samples.len()]);

    let mut weights = vec![[1.0f64; 3]; samples.len()];
    for _ in 0..cfg.max_iterations {
        let t = Transform2::new(x, y, theta);
        let mut change = 0.0f64;
        for (w, s) in weights.iter_mut().zip(samples) {
            let r = s.residual(&t);
            for k in 0..3 {
                let nw = weight(cfg.loss, r[k]);
                change = change.max((nw - w[k]).abs());
                w[k] = nw;
            }
        }
        let wsum = |k: usize| weights.iter().map(|w| w[k]).sum::<f64>();
        x = samples
            .iter()
            .zip(&weights)
            .map(|(s, w)| w[0] * s.x)
            .sum::<f64>()
            / wsum(0);
        y = samples
            .iter()
            .zip(&weights)
            .map(|(s, w)| w[1] * s.y)
            .sum::<f64>()
            / wsum(1);
        let wt: Vec<f64> = weights.iter().map(|w| w[2]).collect();
        theta = intrinsic_mean(samples, theta, &wt);
        if change < cfg.tolerance {
            break;
        }
    }
    Transform2::new(x, y, theta)
}

fn intrinsic_mean(samples: &[Transform2], start: f64, w: &[f64]) -> f64 {
    let total: f64 = w.iter().sum();
    let mut theta = start;
    for _ in 0..100 {
        let step = samples
            .iter()
            .zip(w)
            .map(|(s, &wi)| wi * angle_diff(s.theta, theta))
            .sum::<f64>()
            / total;
        theta = wrap_angle(theta + step);
        if step.abs() < 1e-13 {
            break;
        }
    }
    theta
}

/// Final map-to-odometry transform from a set of estimates.
pub fn optimize_transform(ests: &[Estimation], cfg: &AveragingConfig) -> Transform2 {
    let samples: Vec<Transform2> = ests.iter().map(|e| e.t_est).collect();
    average_transforms(&samples, cfg)
}
