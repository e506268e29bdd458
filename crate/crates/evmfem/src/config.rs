//! JSON run configuration consumed by the CLI and the conv study driver.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cases::{ManufacturedCase, PolyTerm};
use crate::error::{Error, Result};
use crate::mesh::DomainSpec;
use crate::postprocess::OswaldBoundary;
use crate::solver::{SolverConfig, SolverMethod};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlocksConfig {
    pub nbx: usize,
    pub nby: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub method: SolverMethod,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSettings {
            method: d.method,
            tol: d.tol,
            max_iter: d.max_iter,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputSettings {
    pub csv: bool,
    pub vtk: bool,
}

impl Default for OutputSettings {
    fn default() -> Self {
        OutputSettings { csv: true, vtk: false }
    }
}

/// Pressure polynomial and constant diagonal permeability of a `custom` case.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CustomCaseConfig {
    pub terms: Vec<PolyTerm>,
    #[serde(default = "one")]
    pub kx: f64,
    #[serde(default = "one")]
    pub ky: f64,
}

fn one() -> f64 {
    1.0
}

fn default_ratio() -> usize {
    2
}

fn default_oswald() -> OswaldBoundary {
    OswaldBoundary::DirichletData
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    /// example1 | example2 | example3 | patch | custom.
    pub case: String,
    #[serde(default)]
    pub custom: Option<CustomCaseConfig>,
    pub blocks: BlocksConfig,
    /// Cells per side of a coarse block; fine blocks use `ratio` times as many.
    pub coarse_n: usize,
    #[serde(default = "default_ratio")]
    pub ratio: usize,
    /// Coarse-n values of a convergence study, finest last.
    #[serde(default)]
    pub levels: Option<Vec<usize>>,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default = "default_oswald")]
    pub oswald_boundary: OswaldBoundary,
    #[serde(default)]
    pub outputs: OutputSettings,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::config(format!("config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.manufactured_case()?;
        if self.blocks.nbx == 0 || self.blocks.nby == 0 {
            return Err(Error::config("blocks.nbx and blocks.nby must be at least 1"));
        }
        if self.coarse_n == 0 {
            return Err(Error::config("coarse_n must be at least 1"));
        }
        if self.ratio == 0 {
            return Err(Error::config("ratio must be at least 1"));
        }
        if let Some(levels) = &self.levels {
            if levels.iter().any(|&n| n == 0) {
                return Err(Error::config("levels must be positive coarse_n values"));
            }
        }
        self.solver_config().validate()
    }

    pub fn manufactured_case(&self) -> Result<ManufacturedCase> {
        if self.case == "custom" {
            let custom = self.custom.as_ref().ok_or_else(|| {
                Error::config("case 'custom' requires a 'custom' section with polynomial terms")
            })?;
            if custom.terms.is_empty() {
                return Err(Error::config("custom case needs at least one polynomial term"));
            }
            if !(custom.kx > 0.0 && custom.ky > 0.0) {
                return Err(Error::config("custom permeability must be positive"));
            }
            Ok(ManufacturedCase::CustomPoly {
                terms: custom.terms.clone(),
                kx: custom.kx,
                ky: custom.ky,
            })
        } else {
            ManufacturedCase::from_name(&self.case)
        }
    }

    /// Checkerboard domain spec on the unit square for a given coarse block count.
    pub fn domain_spec(&self, coarse_n: usize) -> DomainSpec {
        DomainSpec::checkerboard(self.blocks.nbx, self.blocks.nby, coarse_n, self.ratio)
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            method: self.solver.method,
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
        }
    }

    /// Level list for a convergence study: explicit `levels` or the single
    /// `coarse_n`.
    pub fn level_list(&self) -> Vec<usize> {
        self.levels.clone().unwrap_or_else(|| vec![self.coarse_n])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let json = r#"{
            "case": "example3",
            "blocks": {"nbx": 3, "nby": 3},
            "coarse_n": 4
        }"#;
        let cfg: RunConfig = serde_json::from_str(json).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.ratio, 2);
        assert_eq!(cfg.solver.method, SolverMethod::Direct);
        assert_eq!(cfg.oswald_boundary, OswaldBoundary::DirichletData);
        assert!(cfg.outputs.csv && !cfg.outputs.vtk);
    }

    #[test]
    fn unknown_case_rejected_with_known_list() {
        let json = r#"{
            "case": "exampleX",
            "blocks": {"nbx": 2, "nby": 2},
            "coarse_n": 4
        }"#;
        let cfg: RunConfig = serde_json::from_str(json).unwrap();
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("known cases"));
    }

    #[test]
    fn custom_case_requires_terms() {
        let json = r#"{
            "case": "custom",
            "blocks": {"nbx": 2, "nby": 2},
            "coarse_n": 4
        }"#;
        let cfg: RunConfig = serde_json::from_str(json).unwrap();
        assert!(cfg.validate().is_err());

        let json = r#"{
            "case": "custom",
            "custom": {"terms": [{"coeff": 1.0, "px": 1, "py": 1}], "kx": 2.0, "ky": 0.5},
            "blocks": {"nbx": 2, "nby": 2},
            "coarse_n": 4
        }"#;
        let cfg: RunConfig = serde_json::from_str(json).unwrap();
        cfg.validate().unwrap();
    }

    #[test]
    fn solver_settings_parse_kebab_case() {
        let json = r#"{
            "case": "patch",
            "blocks": {"nbx": 2, "nby": 2},
            "coarse_n": 4,
            "solver": {"method": "schur-cg", "tol": 1e-9, "max_iter": 500},
            "oswald_boundary": "zero"
        }"#;
        let cfg: RunConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.solver.method, SolverMethod::SchurCg);
        assert_eq!(cfg.oswald_boundary, OswaldBoundary::Zero);
    }
}
