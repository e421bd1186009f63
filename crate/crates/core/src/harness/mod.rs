//! Experiment orchestration: configuration, map building, trials, metrics,
//! the grid storage baseline and renders.

mod baseline;
mod build;
mod config;
mod experiment;
mod metrics;
mod render;

pub use baseline::{decode_grid_rle, encode_grid_rle, grid_rle_bytes};
pub use build::{build_map, build_map_with, pick_start, BuiltMap};
pub use config::{ExperimentConfig, Mode};
pub use experiment::{
    build_for, evaluate, plan_pair, plan_trial, reloc_trial, run_experiment, run_on_world,
    trial_offset, MetricsReport, PlanTrial, RelocTrial,
};
pub use metrics::{
    grid_baseline_length, metric_c_path, metric_reloc_errors, metric_success, summarize,
    RelocErrors, Summary,
};
pub use render::{parse_legend, render_ascii, render_pbm, Legend};
