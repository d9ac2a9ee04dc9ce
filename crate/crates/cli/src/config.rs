//! Flat run configuration. Every key has a default; misspelled keys are
//! rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use randwave::data::{sharp_pair, Phases};
use randwave::io::load_field;
use randwave::norms::{config_derive, default_eps, HighLowConfig};
use randwave::partition::UnitScalePartition;
use randwave::propagator::QuadratureRule;
use randwave::random::{Family, RandomSpec, StreamMode};
use randwave::solver::{HighLowOptions, KChoice, PicardOptions, QuinticOptions, SplitOptions};
use randwave::{SpectralField, TorusGrid};

use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyName {
    Gaussian,
    Rademacher,
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataProfile {
    /// `sharp_pair` at regularity `data_s`.
    Sharp,
    /// RWF1 files `f1_path`, `f2_path`.
    Files,
}

/// Statistic sampled by `verify tail`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailStatistic {
    /// One draw of the configured family.
    Coefficient,
    /// `‖f^ω_{1,<=N}‖_{H^s}` minus its sample mean.
    LowSobolev,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KMode {
    Auto,
    Fixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct Config {
    // grid
    pub M: usize,
    pub L: f64,
    pub dim: usize,

    // data
    pub data: DataProfile,
    pub data_s: Option<f64>,
    pub amplitude: f64,
    pub phases: Phases,
    pub data_seed: u64,
    pub f1_path: Option<PathBuf>,
    pub f2_path: Option<PathBuf>,

    // randomization
    pub family: FamilyName,
    pub a: f64,
    pub mode: StreamMode,
    pub seed: u64,

    // equation and high-low scalars
    pub rho: f64,
    pub s: f64,
    pub K_mode: KMode,
    /// Safety factor in auto mode, the value itself in fixed mode.
    pub K: f64,
    pub N: f64,
    pub eps: Option<f64>,
    pub c: f64,
    pub T: f64,

    // numerics
    pub dt: f64,
    pub nodes_per_step: usize,
    pub record_stride: usize,
    pub stat_nodes: usize,
    pub max_steps: usize,
    pub max_c_halvings: u32,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub quadrature: QuadratureRule,
    pub drift_target: f64,
    pub drift_limit: f64,

    // quintic
    pub eps0: f64,
    pub T_max: f64,
    pub window: f64,
    pub scatter_points: usize,

    // experiments
    pub samples: usize,
    pub p_pairs: Vec<[f64; 2]>,
    pub p_grid: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub N_grid: Vec<f64>,
    pub K_grid_A: Option<Vec<f64>>,
    pub K_grid_B: Option<Vec<f64>>,
    pub lambda: Option<Vec<f64>>,
    pub tail_statistic: TailStatistic,
    pub normequiv_M: Vec<usize>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            M: 32,
            L: 4.0,
            dim: 3,
            data: DataProfile::Sharp,
            data_s: None,
            amplitude: 5e-4,
            phases: Phases::Random,
            data_seed: 0,
            f1_path: None,
            f2_path: None,
            family: FamilyName::Gaussian,
            a: 1.0,
            mode: StreamMode::Symmetric,
            seed: 0,
            rho: 3.0,
            s: 0.8,
            K_mode: KMode::Auto,
            K: 2.0,
            N: 3.0,
            eps: None,
            c: 0.5,
            T: 0.5,
            dt: 0.05,
            nodes_per_step: 64,
            record_stride: 8,
            stat_nodes: 65,
            max_steps: 10_000,
            max_c_halvings: 6,
            picard_tol: 1e-10,
            picard_max_iter: 60,
            quadrature: QuadratureRule::Simpson,
            drift_target: 1e-5,
            drift_limit: 1e-3,
            eps0: 0.1,
            T_max: 8.0,
            window: 1.0,
            scatter_points: 6,
            samples: 10_000,
            p_pairs: vec![[2.0, 4.0], [2.0, 6.0], [4.0, 10.0]],
            p_grid: vec![2.0, 4.0, 6.0, 8.0, 12.0, 16.0, 20.0],
            coefficients: vec![0.1; 100],
            N_grid: vec![3.0, 4.0, 5.0, 6.0, 7.0],
            K_grid_A: None,
            K_grid_B: None,
            lambda: None,
            tail_statistic: TailStatistic::Coefficient,
            normequiv_M: vec![16, 32],
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Read a TOML config, or the resolved config stored in a manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            let manifest: serde_json::Value = serde_json::from_str(&text)?;
            let resolved = manifest
                .get("resolved_config")
                .and_then(|v| v.as_str())
                .ok_or("manifest has no resolved_config")?;
            return Self::parse(resolved);
        }
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn grid(&self) -> Result<TorusGrid> {
        Ok(TorusGrid::new(self.M, self.L, self.dim)?)
    }

    pub fn partition(&self) -> Result<UnitScalePartition> {
        Ok(UnitScalePartition::new(&self.grid()?)?)
    }

    pub fn family(&self) -> Family {
        match self.family {
            FamilyName::Gaussian => Family::Gaussian,
            FamilyName::Rademacher => Family::Rademacher,
            FamilyName::Uniform => Family::Uniform { a: self.a },
        }
    }

    pub fn spec(&self) -> RandomSpec {
        RandomSpec::new(self.family(), self.seed).with_mode(self.mode)
    }

    pub fn eps(&self) -> f64 {
        self.eps.unwrap_or_else(|| default_eps(self.rho, self.s))
    }

    /// Deterministic data pair before randomization, and the input files
    /// it was read from.
    pub fn data_pair(&self, grid: &TorusGrid) -> Result<(SpectralField, SpectralField, Vec<PathBuf>)> {
        match self.data {
            DataProfile::Sharp => {
                let s = self.data_s.unwrap_or(self.s);
                let (f1, f2) = sharp_pair(grid, s, self.amplitude, self.phases, self.data_seed);
                Ok((f1, f2, Vec::new()))
            }
            DataProfile::Files => {
                let (p1, p2) = match (&self.f1_path, &self.f2_path) {
                    (Some(a), Some(b)) => (a.clone(), b.clone()),
                    _ => return Err("data = \"files\" needs f1_path and f2_path".into()),
                };
                let f1 = load_field(&p1)?;
                let f2 = load_field(&p2)?;
                if f1.grid() != grid || f2.grid() != grid {
                    return Err(format!(
                        "input fields are not on the configured grid M = {}, L = {}",
                        self.M, self.L
                    )
                    .into());
                }
                Ok((f1, f2, vec![p1, p2]))
            }
        }
    }

    /// Derived scalars with `K = 1` as placeholder in auto mode; the
    /// solver replaces it.
    pub fn high_low_config(&self) -> Result<HighLowConfig> {
        let k = match self.K_mode {
            KMode::Auto => 1.0,
            KMode::Fixed => self.K,
        };
        Ok(config_derive(self.rho, self.s, k, self.N, self.eps(), self.c, self.T)?)
    }

    pub fn picard(&self) -> PicardOptions {
        PicardOptions {
            tol: self.picard_tol,
            max_iter: self.picard_max_iter,
            rule: self.quadrature,
            ..PicardOptions::default()
        }
    }

    pub fn split(&self) -> SplitOptions {
        SplitOptions {
            drift_target: self.drift_target,
            drift_limit: self.drift_limit,
            ..SplitOptions::default()
        }
    }

    pub fn high_low_options(&self) -> HighLowOptions {
        HighLowOptions {
            k: match self.K_mode {
                KMode::Auto => KChoice::Auto(self.K),
                KMode::Fixed => KChoice::Fixed(self.K),
            },
            nodes_per_step: self.nodes_per_step,
            picard: self.picard(),
            split: self.split(),
            max_c_halvings: self.max_c_halvings,
            record_stride: self.record_stride,
            stat_nodes: self.stat_nodes,
            max_steps: self.max_steps,
        }
    }

    pub fn quintic_options(&self) -> QuinticOptions {
        QuinticOptions {
            eps0: self.eps0,
            t_max: self.T_max,
            dt: self.dt,
            window: self.window,
            picard: self.picard(),
            scatter_points: self.scatter_points,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn misspelled_key_is_rejected() {
        let err = Config::parse("M = 16\nrhoo = 3.0\n").unwrap_err().to_string();
        assert!(err.contains("rhoo"), "{err}");
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = Config::parse("M = 16\nfamily = \"uniform\"\na = 2.0\nK_mode = \"fixed\"\nK = 3.5\n").unwrap();
        let again = Config::parse(&c.to_toml().unwrap()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.family(), Family::Uniform { a: 2.0 });
    }

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(Config::parse("").unwrap(), Config::default());
    }
}
