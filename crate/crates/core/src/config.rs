//! Run configuration read from TOML, with the free constants exposed as keys.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::flow::{FlowSpec, ToyModel};
use crate::lattice::{CubeGrid, TorusSpec};
use crate::{Error, Result};

/// Pass lines of the oracles; all scaled by `--tolerance-scale`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub grassmann: f64,
    pub covariance: f64,
    pub minimizer: f64,
    pub splitting: f64,
    pub cluster: f64,
    pub determinant: f64,
    pub sunset: f64,
    pub series: f64,
    pub bvp: f64,
    pub consistency: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            grassmann: 1e-12,
            covariance: 1e-12,
            minimizer: 1e-12,
            splitting: 1e-10,
            cluster: 1e-8,
            determinant: 1e-10,
            sunset: 1e-10,
            series: 1e-6,
            bvp: 1e-12,
            consistency: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            grassmann: self.grassmann * s,
            covariance: self.covariance * s,
            minimizer: self.minimizer * s,
            splitting: self.splitting * s,
            cluster: self.cluster * s,
            determinant: self.determinant * s,
            sunset: self.sunset * s,
            series: self.series * s,
            bvp: self.bvp * s,
            consistency: self.consistency * s,
        }
    }

    fn all(&self) -> [f64; 10] {
        [
            self.grassmann,
            self.covariance,
            self.minimizer,
            self.splitting,
            self.cluster,
            self.determinant,
            self.sunset,
            self.series,
            self.bvp,
            self.consistency,
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowModelKind {
    Zero,
    Linear,
    Toy,
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Blocking factor `L`.
    pub base_scale: usize,
    pub spacing_exp: i32,
    pub extent_exp: i32,
    /// Cube width `M = L^{M_exp}` in lattice units.
    #[serde(rename = "M_exp")]
    pub m_exp: u32,
    pub e: f64,
    pub mass_bar: f64,
    pub b: f64,
    pub p_exp: u32,
    pub h: f64,
    pub kappa: f64,
    pub order_max: usize,
    /// Total number of steps `N` and the final step `K` of the flow.
    #[serde(rename = "N")]
    pub n_steps: u32,
    #[serde(rename = "K")]
    pub k_steps: u32,
    pub flow_e: f64,
    pub flow_model: FlowModelKind,
    pub toy: ToyModel,
    pub linear_a: f64,
    pub linear_b: f64,
    pub multistarts: usize,
    /// RG steps in the sunset oracle.
    pub levels: usize,
    pub gauge_samples: usize,
    pub fermion_samples: usize,
    pub cluster_coupling: f64,
    pub site_cap: usize,
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            base_scale: 2,
            spacing_exp: 0,
            extent_exp: 2,
            m_exp: 1,
            e: 0.1,
            mass_bar: 0.1,
            b: 1.0,
            p_exp: 2,
            h: 1.0,
            kappa: 0.5,
            order_max: 4,
            n_steps: 8,
            k_steps: 6,
            flow_e: 1e-3,
            flow_model: FlowModelKind::Toy,
            toy: ToyModel::default(),
            linear_a: 1.0,
            linear_b: 0.1,
            multistarts: 10,
            levels: 2,
            gauge_samples: 10,
            fermion_samples: 3,
            cluster_coupling: 1e-3,
            site_cap: 4096,
            output_dir: None,
            seed: 0,
            tolerances: Tolerances::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.base_scale < 2 {
            return Err(Error::Config(format!("base_scale {} < 2", self.base_scale)));
        }
        if self.tolerances.all().iter().any(|t| !(*t > 0.0)) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        let spec = self.lattice()?;
        if spec.site_count() > self.site_cap {
            return Err(Error::Config(format!(
                "{} fine sites exceed the cap {}",
                spec.site_count(),
                self.site_cap
            )));
        }
        CubeGrid::new(&spec, self.m_exp)?;
        if !(self.b > 0.0) || self.mass_bar < 0.0 || !(self.h > 0.0) || self.kappa < 0.0 {
            return Err(Error::Config("need b > 0, mass_bar ≥ 0, h > 0, κ ≥ 0".into()));
        }
        if !(self.cluster_coupling >= 0.0 && self.cluster_coupling <= 1e-3) {
            return Err(Error::Config("cluster_coupling must lie in [0, 1e-3]".into()));
        }
        self.flow_spec()?;
        Ok(())
    }

    pub fn lattice(&self) -> Result<TorusSpec> {
        TorusSpec::new(self.base_scale, self.spacing_exp, self.extent_exp)
    }

    pub fn flow_spec(&self) -> Result<FlowSpec> {
        FlowSpec::new(self.base_scale as u64, self.n_steps, self.k_steps, self.flow_e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = RunConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn upper_case_keys_are_accepted() {
        let cfg = RunConfig::from_toml("N = 10\nK = 7\nM_exp = 1\nflow_model = \"linear\"\n[tolerances]\nbvp = 1e-11\n").unwrap();
        assert_eq!((cfg.n_steps, cfg.k_steps), (10, 7));
        assert_eq!(cfg.flow_model, FlowModelKind::Linear);
        assert_eq!(cfg.tolerances.bvp, 1e-11);
        let toy = RunConfig::from_toml("[toy]\nc_m = 0.02\n").unwrap().toy;
        assert_eq!(toy, ToyModel { c_m: 0.02, ..ToyModel::default() });
    }

    #[test]
    fn bad_values_are_rejected() {
        assert!(RunConfig::from_toml("base_scale = 1").is_err());
        assert!(RunConfig::from_toml("[tolerances]\nsunset = 0.0").is_err());
        assert!(RunConfig::from_toml("K = 9").is_err());
        assert!(RunConfig::from_toml("unknown_key = 3").is_err());
        assert!(RunConfig::from_toml("extent_exp = 7").is_err());
    }
}
