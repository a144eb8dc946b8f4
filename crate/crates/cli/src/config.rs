//! Run configuration: TOML on disk, validated before any computation starts.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use hyperlat_core::certify::PipelineConfig;
use hyperlat_core::operator_core::OperatorDescriptor;
use hyperlat_core::presets::{CalculusParams, SectorPlan};
use hyperlat_core::resolvent_probe::{GrowthForm, ProbeMethod};
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_N_MAX: usize = 4;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RunConfig {
    pub operator: OperatorDescriptor,
    pub sectors: Vec<SectorPlan>,
    #[serde(default)]
    pub calculus: CalculusSection,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_rank_threshold")]
    pub rank_threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub probe: ProbeSection,
    #[serde(default)]
    pub comb: CombSection,
    #[serde(default)]
    pub integrate: IntegrateSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CalculusSection {
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_c0")]
    pub c0: f64,
    /// Ray constant; calibrated from the operator when absent.
    #[serde(rename = "C0", default, skip_serializing_if = "Option::is_none")]
    pub big_c0: Option<f64>,
    /// `C1 = c1Factor * C0`.
    #[serde(default = "default_c1_factor")]
    pub c1_factor: f64,
}

impl Default for CalculusSection {
    fn default() -> Self {
        CalculusSection { beta: default_beta(), c0: default_c0(), big_c0: None, c1_factor: default_c1_factor() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ProbeSection {
    /// Strictly decreasing radii, used both for the sample grid and the ray fits.
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    /// Interior angles per radius in the sample grid.
    #[serde(default = "default_angles")]
    pub angles: usize,
    #[serde(default = "default_form")]
    pub form: GrowthForm,
    #[serde(default = "default_method")]
    pub method: ProbeMethod,
    /// Decay constants for the unboundedness trend test; empty skips it.
    #[serde(default)]
    pub c_list: Vec<f64>,
}

impl Default for ProbeSection {
    fn default() -> Self {
        ProbeSection {
            radii: default_radii(),
            angles: default_angles(),
            form: default_form(),
            method: default_method(),
            c_list: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CombSection {
    /// Probe density multiplier of the validation pass.
    #[serde(default = "default_validation_factor")]
    pub validation_factor: f64,
}

impl Default for CombSection {
    fn default() -> Self {
        CombSection { validation_factor: default_validation_factor() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct IntegrateSection {
    /// Index into `sectors`.
    #[serde(default)]
    pub sector: usize,
    /// Multiplier `g(z) = z^power`.
    #[serde(default)]
    pub power: usize,
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_n_max() -> usize {
    DEFAULT_N_MAX
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_rank_threshold() -> f64 {
    1e-6
}

fn default_beta() -> f64 {
    PI / 2.0
}

fn default_c0() -> f64 {
    1.0
}

fn default_c1_factor() -> f64 {
    2.0
}

fn default_radii() -> Vec<f64> {
    (0..12).map(|k| 0.5 * 0.7f64.powi(k)).collect()
}

fn default_angles() -> usize {
    8
}

fn default_form() -> GrowthForm {
    GrowthForm::ExpPower
}

fn default_method() -> ProbeMethod {
    ProbeMethod::DenseSvd
}

fn default_validation_factor() -> f64 {
    4.0
}

/// Scalar overrides given on the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        let de = toml::Deserializer::parse(text).map_err(|e| Failure::Config(e.to_string()))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Failure::Config(format!("at `{path}`: {}", e.into_inner()))
        })
    }

    pub fn load(path: &Path, overrides: Overrides) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::parse(&text)?;
        config.apply(overrides);
        config.validate()?;
        Ok(config)
    }

    pub fn apply(&mut self, overrides: Overrides) {
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        if let Some(tol) = overrides.tol {
            self.tol = tol;
        }
    }

    pub fn validate(&self) -> Result<(), Failure> {
        let bad = |field: &str, msg: String| Err(Failure::Config(format!("at `{field}`: {msg}")));
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad("tol", format!("must lie in (0, 1), got {}", self.tol));
        }
        if self.n_max < 1 {
            return bad("nMax", "must be at least 1".into());
        }
        if !(self.rank_threshold > 0.0 && self.rank_threshold < 1.0) {
            return bad("rankThreshold", format!("must lie in (0, 1), got {}", self.rank_threshold));
        }
        if self.sectors.is_empty() || self.sectors.len() > 2 {
            return bad("sectors", format!("expected one or two sectors, got {}", self.sectors.len()));
        }
        for (k, s) in self.sectors.iter().enumerate() {
            if !(s.half_angle > 0.0 && s.half_angle < PI) {
                return bad(&format!("sectors[{k}].halfAngle"), format!("must lie in (0, pi), got {}", s.half_angle));
            }
            if let Err(e) = s.sector() {
                return bad(&format!("sectors[{k}]"), e.to_string());
            }
        }
        let c = &self.calculus;
        let widest = self.sectors.iter().map(|s| s.half_angle).fold(0.0, f64::max);
        if !(c.beta > widest && c.beta <= PI) {
            return bad(
                "calculus.beta",
                format!(
                    "theorem precondition beta > max(beta_1, beta_2) violated: beta = {}, widest half-angle = {widest}",
                    c.beta
                ),
            );
        }
        if !(c.c0 > 0.0 && c.c0.is_finite()) {
            return bad("calculus.c0", format!("must be positive, got {}", c.c0));
        }
        if let Some(v) = c.big_c0 {
            if !(v > 0.0 && v.is_finite()) {
                return bad("calculus.C0", format!("must be positive, got {v}"));
            }
        }
        if !(c.c1_factor > 1.0 && c.c1_factor.is_finite()) {
            return bad("calculus.c1Factor", format!("must exceed 1, got {}", c.c1_factor));
        }
        if self.probe.angles == 0 {
            return bad("probe.angles", "must be at least 1".into());
        }
        if self.probe.radii.len() < 8 || self.probe.radii.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return bad("probe.radii", "need at least 8 finite non-negative radii".into());
        }
        if self.comb.validation_factor.is_nan() || self.comb.validation_factor < 1.0 {
            return bad("comb.validationFactor", format!("must be at least 1, got {}", self.comb.validation_factor));
        }
        if self.integrate.sector >= self.sectors.len() {
            return bad(
                "integrate.sector",
                format!("no sector {} among {}", self.integrate.sector, self.sectors.len()),
            );
        }
        Ok(())
    }

    pub fn calculus_params(&self) -> CalculusParams {
        let c = &self.calculus;
        CalculusParams { beta: c.beta, c0: c.c0, big_c0: c.big_c0, c1_factor: c.c1_factor, tol: self.tol }
    }

    pub fn pipeline(&self) -> Result<PipelineConfig, Failure> {
        let [first, second] = <[SectorPlan; 2]>::try_from(self.sectors.clone()).map_err(|s| {
            Failure::Config(format!("at `sectors`: certify needs exactly two sectors, got {}", s.len()))
        })?;
        Ok(PipelineConfig {
            sectors: [first, second],
            calculus: self.calculus_params(),
            n_max: self.n_max,
            rank_threshold: self.rank_threshold,
            seed: self.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
operator = { kind = "jordanNilpotent", n = 8 }

[[sectors]]
direction = [1.0, 0.0]
halfAngle = 1.0471975511965976

[[sectors]]
direction = [-1.0, 0.0]
halfAngle = 1.0471975511965976
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        c.validate().unwrap();
        assert_eq!(c.tol, 1e-8);
        assert_eq!(c.n_max, 4);
        assert_eq!(c.seed, 42);
        assert_eq!(c.calculus, CalculusSection::default());
        assert_eq!(c.operator, OperatorDescriptor::JordanNilpotent { n: 8 });
        assert_eq!(c.sectors[0].clip_radius, 1.0);
    }

    #[test]
    fn overrides_replace_scalars() {
        let mut c = RunConfig::parse(MINIMAL).unwrap();
        c.apply(Overrides { seed: Some(7), tol: Some(1e-6) });
        assert_eq!((c.seed, c.tol), (7, 1e-6));
        assert_eq!(c.pipeline().unwrap().seed, 7);
    }

    #[test]
    fn narrow_beta_names_the_precondition() {
        let text = format!("{MINIMAL}\n[calculus]\nbeta = 1.0\n");
        let err = RunConfig::parse(&text).unwrap().validate().unwrap_err().to_string();
        assert!(err.contains("calculus.beta") && err.contains("precondition"), "{err}");
    }

    #[test]
    fn unknown_kind_lists_the_catalog() {
        let text = MINIMAL.replace("jordanNilpotent", "hilbertMatrix");
        let err = RunConfig::parse(&text).unwrap_err().to_string();
        for kind in ["dense", "jordanNilpotent", "volterraAnalytic", "weightedShift", "unitaryDiagonal"] {
            assert!(err.contains(kind), "{err}");
        }
    }

    #[test]
    fn misspelled_field_reports_its_path() {
        let text = format!("{MINIMAL}\n[calculus]\nbta = 2.0\n");
        let err = RunConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("calculus") && err.contains("bta"), "{err}");
    }

    #[test]
    fn effective_config_round_trips() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }
}
