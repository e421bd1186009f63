use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exploration::ExploreConfig;
use crate::fht::{BuildMode, BuilderConfig};
use crate::planning::{UtilizeConfig, DEFAULT_K};
use crate::relocalization::RelocConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Main and support nodes with refinement; relocalization with ICP.
    Fht,
    /// Every node a main node, no refinement; relocalization with ICP.
    MainOnly,
    /// The main-only map, relocalized without scan alignment.
    FeatureOnly,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Fht, Mode::MainOnly, Mode::FeatureOnly];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Fht => "fht",
            Mode::MainOnly => "main_only",
            Mode::FeatureOnly => "feature_only",
        }
    }

    pub fn build_mode(self) -> BuildMode {
        match self {
            Mode::Fht => BuildMode::Fht,
            Mode::MainOnly | Mode::FeatureOnly => BuildMode::MainOnly,
        }
    }

    pub fn uses_icp(self) -> bool {
        self != Mode::FeatureOnly
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown mode {s:?}")))
    }
}

/// Flat experiment configuration, read from TOML. Missing keys take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub world: PathBuf,
    pub seed: u64,
    pub mode: Mode,
    pub sigma_c: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub th_s: f64,
    pub th_match: f64,
    pub n_bins: usize,
    pub rho: f64,
    pub k: f64,
    #[serde(alias = "D")]
    pub descriptor_dim: usize,
    pub n_beams: usize,
    pub max_range: f64,
    pub reloc_trials: usize,
    pub plan_pairs: usize,
    /// Length of each relocalization walk, meters.
    pub walk_length: f64,
    /// Exploration step budget.
    pub budget: usize,
    pub r_info: f64,
    pub replan_every: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let b = BuilderConfig::default();
        let e = ExploreConfig::default();
        let r = RelocConfig::default();
        Self {
            world: PathBuf::new(),
            seed: 1,
            mode: Mode::Fht,
            sigma_c: b.sigma_c,
            gamma1: b.gamma1,
            gamma2: b.gamma2,
            th_s: b.th_s,
            th_match: r.th_match,
            n_bins: b.n_bins,
            rho: b.rho,
            k: DEFAULT_K,
            descriptor_dim: r.descriptor_dim,
            n_beams: e.n_beams,
            max_range: e.max_range,
            reloc_trials: 8,
            plan_pairs: 6,
            walk_length: 80.0,
            budget: e.budget,
            r_info: e.r_info,
            replan_every: e.replan_every,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    // negated comparisons so NaN is rejected too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        self.builder_config().validate()?;
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.k > 1.0) {
            return bad("k must exceed 1");
        }
        if !(self.th_match > 0.0 && self.th_match <= 1.0) {
            return bad("th_match must lie in (0, 1]");
        }
        if self.descriptor_dim == 0 || self.n_beams < 8 {
            return bad("descriptor_dim must be positive and n_beams at least 8");
        }
        if !(self.max_range > 0.0) || !(self.walk_length > 0.0) || !(self.r_info > 0.0) {
            return bad("max_range, walk_length and r_info must be positive");
        }
        if self.replan_every == 0 {
            return bad("replan_every must be positive");
        }
        Ok(())
    }

    pub fn builder_config(&self) -> BuilderConfig {
        BuilderConfig {
            gamma1: self.gamma1,
            gamma2: self.gamma2,
            sigma_c: self.sigma_c,
            th_s: self.th_s,
            n_bins: self.n_bins,
            rho: self.rho,
            mode: self.mode.build_mode(),
            ..BuilderConfig::default()
        }
    }

    pub fn explore_config(&self) -> ExploreConfig {
        ExploreConfig {
            budget: self.budget,
            r_info: self.r_info,
            replan_every: self.replan_every,
            n_beams: self.n_beams,
            max_range: self.max_range,
            ..ExploreConfig::default()
        }
    }

    pub fn reloc_config(&self) -> RelocConfig {
        RelocConfig {
            th_match: self.th_match,
            use_icp: self.mode.uses_icp(),
            descriptor_dim: self.descriptor_dim,
            n_beams: self.n_beams,
            max_range: self.max_range,
            ..RelocConfig::default()
        }
    }

    pub fn utilize_config(&self, resolution: f64) -> UtilizeConfig {
        UtilizeConfig {
            reloc: self.reloc_config(),
            k: self.k,
            clearance: self.builder_config().clearance_cells * resolution,
            ..UtilizeConfig::default()
        }
    }

    pub fn with_mode(&self, mode: Mode) -> Self {
        Self {
            mode,
            ..self.clone()
        }
    }
}
