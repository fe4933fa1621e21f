//! Run configuration read from a TOML file.

use std::path::Path;

use ldgas_core::{Bound, ConfinementPotential, GasParameters, LinearStatistic, Polynomial, Walls};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed for sampling; `LDGAS_SEED` takes precedence.
    #[serde(default)]
    pub seed: u64,
    pub ensemble: EnsembleConfig,
    pub statistic: StatisticConfig,
    /// Second statistic, used by `joint`.
    pub statistic2: Option<StatisticConfig>,
    #[serde(default)]
    pub equilibrium: EquilibriumConfig,
    #[serde(default)]
    pub ldf: CurveConfig,
    #[serde(default)]
    pub cumulants: CumulantsConfig,
    #[serde(default)]
    pub transitions: TransitionsConfig,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub joint: JointConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    /// Coefficients of V in increasing degree.
    pub potential: Vec<f64>,
    /// Hard walls; omitted sides are open.
    pub lower_wall: Option<f64>,
    pub upper_wall: Option<f64>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_n")]
    pub n_particles: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatisticConfig {
    /// Coefficients of f in increasing degree.
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumConfig {
    #[serde(default)]
    pub s: f64,
    #[serde(default = "default_density_points")]
    pub points: usize,
}

impl Default for EquilibriumConfig {
    fn default() -> Self {
        EquilibriumConfig {
            s: 0.0,
            points: default_density_points(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    #[serde(default = "default_s_min")]
    pub s_min: f64,
    #[serde(default = "default_s_max")]
    pub s_max: f64,
    #[serde(default = "default_curve_points")]
    pub points: usize,
    #[serde(default = "default_true")]
    pub continue_past_confinement: bool,
    #[serde(default = "default_legendre_tolerance")]
    pub legendre_tolerance: f64,
}

impl Default for CurveConfig {
    fn default() -> Self {
        CurveConfig {
            s_min: default_s_min(),
            s_max: default_s_max(),
            points: default_curve_points(),
            continue_past_confinement: true,
            legendre_tolerance: default_legendre_tolerance(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CumulantsConfig {
    #[serde(default = "default_m_max")]
    pub m_max: usize,
}

impl Default for CumulantsConfig {
    fn default() -> Self {
        CumulantsConfig {
            m_max: default_m_max(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionsConfig {
    /// Curve range; defaults to the `[ldf]` settings.
    pub s_min: Option<f64>,
    pub s_max: Option<f64>,
    pub points: Option<usize>,
    #[serde(default = "default_max_order")]
    pub max_order: usize,
}

impl Default for TransitionsConfig {
    fn default() -> Self {
        TransitionsConfig {
            s_min: None,
            s_max: None,
            points: None,
            max_order: default_max_order(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    #[serde(default = "default_mc_s")]
    pub s_values: Vec<f64>,
    #[serde(default = "default_sweeps")]
    pub sweeps: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_one")]
    pub thinning: usize,
    #[serde(default = "default_step")]
    pub step_scale: f64,
    #[serde(default = "default_true")]
    pub auto_tune: bool,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_z")]
    pub z_threshold: f64,
    /// Accepted range of `var_F·βN²` on the untilted chain.
    pub variance_band: Option<[f64; 2]>,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            s_values: default_mc_s(),
            sweeps: default_sweeps(),
            burn_in: default_burn_in(),
            thinning: 1,
            step_scale: default_step(),
            auto_tune: true,
            bins: default_bins(),
            z_threshold: default_z(),
            variance_band: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointConfig {
    #[serde(default = "default_joint_axis")]
    pub s1: AxisConfig,
    #[serde(default = "default_joint_axis")]
    pub s2: AxisConfig,
    #[serde(default = "default_mixed_step")]
    pub mixed_step: f64,
    #[serde(default = "default_symmetry_tolerance")]
    pub symmetry_tolerance: f64,
}

impl Default for JointConfig {
    fn default() -> Self {
        JointConfig {
            s1: default_joint_axis(),
            s2: default_joint_axis(),
            mixed_step: default_mixed_step(),
            symmetry_tolerance: default_symmetry_tolerance(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl AxisConfig {
    /// Uniform grid with 0 inserted if it is not already a node.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.points.max(2);
        let mut g: Vec<f64> = (0..n)
            .map(|k| self.min + (self.max - self.min) * k as f64 / (n - 1) as f64)
            .map(|s| if s.abs() < 1e-14 { 0.0 } else { s })
            .collect();
        if self.min <= 0.0 && self.max >= 0.0 && !g.contains(&0.0) {
            g.push(0.0);
            g.sort_by(f64::total_cmp);
        }
        g
    }
}

fn default_beta() -> f64 {
    GasParameters::DEFAULT_BETA
}
fn default_n() -> usize {
    32
}
fn default_density_points() -> usize {
    513
}
fn default_s_min() -> f64 {
    -3.0
}
fn default_s_max() -> f64 {
    3.0
}
fn default_curve_points() -> usize {
    801
}
fn default_true() -> bool {
    true
}
fn default_legendre_tolerance() -> f64 {
    1e-5
}
fn default_m_max() -> usize {
    4
}
fn default_max_order() -> usize {
    4
}
fn default_mc_s() -> Vec<f64> {
    vec![0.0]
}
fn default_sweeps() -> usize {
    100_000
}
fn default_burn_in() -> usize {
    10_000
}
fn default_one() -> usize {
    1
}
fn default_step() -> f64 {
    0.1
}
fn default_bins() -> usize {
    50
}
fn default_z() -> f64 {
    3.0
}
fn default_joint_axis() -> AxisConfig {
    AxisConfig {
        min: -1.0,
        max: 1.0,
        points: 21,
    }
}
fn default_mixed_step() -> f64 {
    1e-3
}
fn default_symmetry_tolerance() -> f64 {
    1e-5
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Ok(seed) = std::env::var("LDGAS_SEED") {
            cfg.seed = seed
                .trim()
                .parse()
                .map_err(|_| CliError::Parse(format!("LDGAS_SEED is not an integer: {seed:?}")))?;
        }
        Ok(cfg)
    }

    pub fn walls(&self) -> Result<Walls, CliError> {
        let b = |w: Option<f64>| w.map_or(Bound::Infinite, Bound::Finite);
        Ok(Walls::new(
            b(self.ensemble.lower_wall),
            b(self.ensemble.upper_wall),
        )?)
    }

    pub fn potential(&self) -> Result<ConfinementPotential, CliError> {
        Ok(ConfinementPotential::new(
            Polynomial::new(self.ensemble.potential.clone()),
            self.walls()?,
        )?)
    }

    pub fn statistic(&self) -> Result<LinearStatistic, CliError> {
        Ok(LinearStatistic::new(Polynomial::new(
            self.statistic.coefficients.clone(),
        ))?)
    }

    pub fn statistic2(&self) -> Result<LinearStatistic, CliError> {
        let s = self
            .statistic2
            .as_ref()
            .ok_or_else(|| CliError::Parse("joint runs need a [statistic2] table".into()))?;
        Ok(LinearStatistic::new(Polynomial::new(
            s.coefficients.clone(),
        ))?)
    }

    pub fn gas(&self) -> Result<GasParameters, CliError> {
        Ok(GasParameters::new(
            self.ensemble.n_particles,
            self.ensemble.beta,
        )?)
    }
}
