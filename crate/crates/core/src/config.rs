//! The TOML experiment schema.
//!
//! ```toml
//! phi = "clip"                      # catalog name or phi syntax, or a table
//!
//! [model]
//! zeta_lo = 1.0
//! zeta_hi = 2.0
//! alpha = 1.0
//! z = { kind = "rademacher" }
//! k = { kind = "gaussian", mean = 0.0, stddev = 1.0 }
//!
//! [run]
//! n_list = [4, 16, 64, 256]
//! grid_points = 2048
//! quad_nodes = 64
//! reps = 100000
//! seed = 7
//! output = "results"
//!
//! [mc]
//! strategies = ["constant:1", "constant:2", "bangbang:3,1,2", "policy"]
//!
//! [ldp]
//! sigma2 = 1.0
//! x = [1.5, 2.0]
//! n = 50
//! family = { lo = 0.5, hi = 1.0, points = 33 }
//!
//! [detection]
//! p = 0.5
//! n = 1024
//! alpha = 1.0
//! zeta_lo = 1.0
//! zeta_hi = 1.1
//! eps = { kind = "rademacher" }
//! noise = { kind = "gaussian", var_lo = 0.04, var_hi = 0.09 }
//! ```
//!
//! Every section is optional. Without `[model]` the model is
//! [`ExperimentConfig::default_model`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detection::DetectionConfig;
use crate::distributions::DistributionSpec;
use crate::engine::EngineConfig;
use crate::error::{Error, Result};
use crate::model::{ModelParams, ModelSpec};
use crate::phi::{standard_catalog, TestFunction};

pub const DEFAULT_N_LIST: [usize; 4] = [4, 16, 64, 256];
pub const DEFAULT_REPS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhiSpec {
    /// A catalog name (`identity`, `clip`, `dist`, `indicator`, `neg_*`)
    /// or the string syntax of [`TestFunction`].
    Text(String),
    Function(TestFunction),
}

impl PhiSpec {
    pub fn resolve(&self, params: &ModelParams) -> Result<TestFunction> {
        match self {
            PhiSpec::Text(s) => resolve_phi(s, params),
            PhiSpec::Function(f) => {
                f.validate()?;
                Ok(f.clone())
            }
        }
    }
}

/// Catalog names are looked up against `[μ̲, μ̄]` of `params` first.
pub fn resolve_phi(text: &str, params: &ModelParams) -> Result<TestFunction> {
    let text = text.trim();
    if let Some((_, f)) = standard_catalog(params.mu_lo(), params.mu_hi())
        .into_iter()
        .find(|(name, _)| name == text)
    {
        return Ok(f);
    }
    text.parse()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub n_list: Option<Vec<usize>>,
    pub grid_points: Option<usize>,
    pub quad_nodes: Option<usize>,
    pub m_max: Option<f64>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarianceRange {
    pub lo: f64,
    pub hi: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_points() -> usize {
    33
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdpSection {
    pub sigma2: f64,
    pub x: Vec<f64>,
    pub n: usize,
    pub family: Option<VarianceRange>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    /// Strategy specs; `policy` alone means the engine policy for `phi`.
    pub strategies: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub phi: Option<PhiSpec>,
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub run: RunSection,
    pub mc: Option<McSection>,
    pub ldp: Option<LdpSection>,
    pub detection: Option<DetectionConfig>,
}

fn config_error(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::de::Deserializer::parse(text)
            .map_err(|e| config_error("", e.to_string().trim().to_string()))?;
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_error(path, e.into_inner().to_string().trim().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_error("", e.to_string()))
    }

    /// `Z`, `K` Rademacher on `[1, 2]` with `α = 1`.
    pub fn default_model() -> ModelSpec {
        ModelSpec {
            zeta_lo: 1.0,
            zeta_hi: 2.0,
            alpha: 1.0,
            z: DistributionSpec::Rademacher,
            k: DistributionSpec::Rademacher,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model_params()?;
        if let Some(list) = &self.run.n_list {
            validate_n_list(list)?;
        }
        if let Some(p) = self.run.grid_points {
            if p < 3 {
                return Err(config_error("run.grid_points", "need at least 3 points"));
            }
        }
        if let Some(q) = self.run.quad_nodes {
            if q == 0 {
                return Err(config_error("run.quad_nodes", "need at least 1 node"));
            }
        }
        if let Some(m) = self.run.m_max {
            if !(m > 0.0 && m.is_finite()) {
                return Err(config_error("run.m_max", "need 0 < m_max < inf"));
            }
        }
        if let Some(r) = self.run.reps {
            if r < 2 {
                return Err(config_error("run.reps", "need at least 2 replications"));
            }
        }
        if let Some(phi) = &self.phi {
            phi.resolve(&self.model_params()?)
                .map_err(|e| config_error("phi", e.to_string()))?;
        }
        if let Some(ldp) = &self.ldp {
            if !(ldp.sigma2 > 0.0 && ldp.sigma2.is_finite()) {
                return Err(config_error("ldp.sigma2", "need sigma2 > 0"));
            }
            if ldp.x.is_empty() {
                return Err(config_error("ldp.x", "need at least one point"));
            }
            if ldp.n == 0 {
                return Err(config_error("ldp.n", "need n >= 1"));
            }
            if let Some(f) = &ldp.family {
                if !(f.lo > 0.0 && f.lo <= f.hi && f.points >= 1) {
                    return Err(config_error(
                        "ldp.family",
                        "need 0 < lo <= hi and points >= 1",
                    ));
                }
            }
        }
        if let Some(d) = &self.detection {
            d.validate()
                .map_err(|e| config_error("detection", e.to_string()))?;
        }
        Ok(())
    }

    pub fn model_spec(&self) -> ModelSpec {
        self.model.clone().unwrap_or_else(Self::default_model)
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        ModelParams::try_from(self.model_spec()).map_err(|e| config_error("model", e.to_string()))
    }

    pub fn n_list(&self) -> Vec<usize> {
        self.run
            .n_list
            .clone()
            .unwrap_or_else(|| DEFAULT_N_LIST.to_vec())
    }

    pub fn reps(&self) -> usize {
        self.run.reps.unwrap_or(DEFAULT_REPS)
    }

    /// `seed` must come from the config or a flag for any simulation.
    pub fn require_seed(&self) -> Result<u64> {
        self.run.seed.ok_or_else(|| {
            config_error(
                "run.seed",
                "a seed is required for simulations (pass --seed or set run.seed)",
            )
        })
    }

    pub fn engine_config(&self) -> EngineConfig {
        let mut cfg = EngineConfig::default();
        if let Some(p) = self.run.grid_points {
            cfg = cfg.with_points(p);
        }
        if let Some(q) = self.run.quad_nodes {
            cfg = cfg.with_quad_nodes(q);
        }
        if let Some(m) = self.run.m_max {
            cfg = cfg.with_m_max(m);
        }
        cfg
    }
}

pub fn validate_n_list(list: &[usize]) -> Result<()> {
    if list.is_empty() {
        return Err(config_error("run.n_list", "must not be empty"));
    }
    if list[0] == 0 {
        return Err(config_error("run.n_list", "sample sizes must be >= 1"));
    }
    if list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(config_error("run.n_list", "must be strictly increasing"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
phi = "clip"

[model]
zeta_lo = 1.0
zeta_hi = 2.0
alpha = 1.0
z = { kind = "rademacher" }
k = { kind = "gaussian", mean = 0.0, stddev = 1.0 }

[run]
n_list = [4, 16, 64]
grid_points = 512
seed = 3

[mc]
strategies = ["constant:1", "policy"]

[ldp]
sigma2 = 1.0
x = [1.5, 2.0]
n = 50

[detection]
p = 0.5
n = 1024
alpha = 1.0
zeta_lo = 1.0
zeta_hi = 1.1
eps = { kind = "rademacher" }
noise = { kind = "gaussian", var_lo = 0.04, var_hi = 0.09 }
"#;

    #[test]
    fn parses_the_documented_example() {
        let cfg = ExperimentConfig::from_toml_str(FULL).unwrap();
        assert_eq!(cfg.n_list(), vec![4, 16, 64]);
        assert_eq!(cfg.engine_config().grid.points, 512);
        assert_eq!(cfg.require_seed().unwrap(), 3);
        let params = cfg.model_params().unwrap();
        assert_eq!(
            cfg.phi.as_ref().unwrap().resolve(&params).unwrap(),
            TestFunction::clipped(0.5 * (params.mu_lo() + params.mu_hi()))
        );
        let again = ExperimentConfig::from_toml_str(
            &ExperimentConfig::from_toml_str(FULL)
                .unwrap()
                .to_toml_string()
                .unwrap(),
        )
        .unwrap();
        assert_eq!(again, ExperimentConfig::from_toml_str(FULL).unwrap());
    }

    #[test]
    fn errors_carry_field_paths() {
        let bad = FULL.replace(
            "zeta_lo = 1.0\nzeta_hi = 2.0",
            "zeta_lo = 3.0\nzeta_hi = 2.0",
        );
        match ExperimentConfig::from_toml_str(&bad) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "model"),
            other => panic!("{other:?}"),
        }
        let typo = FULL.replace("grid_points", "grid_pionts");
        match ExperimentConfig::from_toml_str(&typo) {
            Err(Error::Config { path, message }) => {
                assert!(path.starts_with("run"), "{path}");
                assert!(message.contains("grid_pionts"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let wrong = FULL.replace("n = 50", "n = \"fifty\"");
        match ExperimentConfig::from_toml_str(&wrong) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "ldp.n"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn n_list_rules() {
        assert!(validate_n_list(&[4, 16]).is_ok());
        assert!(validate_n_list(&[]).is_err());
        assert!(validate_n_list(&[4, 4]).is_err());
        assert!(validate_n_list(&[16, 4]).is_err());
        let cfg = ExperimentConfig::from_toml_str("[run]\nn_list = [8, 2]\n");
        assert!(matches!(cfg, Err(Error::Config { .. })));
    }

    #[test]
    fn phi_table_and_lipschitz() {
        let cfg = ExperimentConfig::from_toml_str(
            "[phi]\nkind = \"piecewise_linear\"\nknots = [1.0, 3.0]\nslopes = [0.0, 2.0, -0.5]\nvalue_at_first_knot = 0.0\n",
        )
        .unwrap();
        let phi = cfg
            .phi
            .as_ref()
            .unwrap()
            .resolve(&cfg.model_params().unwrap())
            .unwrap();
        assert_eq!(phi.lipschitz(), 2.0);
        let empty = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(empty.model_spec(), ExperimentConfig::default_model());
        assert!(empty.require_seed().is_err());
    }
}
