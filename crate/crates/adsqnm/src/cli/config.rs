//! Run configuration: JSON file, schema validation and physical re-checks.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::energy::{KillingField, DEFAULT_STRIP};
use crate::geometry::{find_horizon, BlackHoleParams, DEFAULT_DELTA_FACTOR};
use crate::numerics::C64;
use crate::operator::{BoundaryCondition, MIN_ANGULAR, MIN_RADIAL};
use crate::quasimodes::QuasimodeConfig;
use crate::spectra::{MatchWindow, ScanSpec, SearchRegion};

use super::CliError;

/// Published schema for [`RunConfig`].
pub const CONFIG_SCHEMA: &str = include_str!("../../schemas/run_config.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Horizon,
    Assemble,
    Solve,
    Scan,
    Quasimodes,
    Match,
    Verify,
    Flow,
    Probe,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::Horizon,
        Stage::Assemble,
        Stage::Solve,
        Stage::Scan,
        Stage::Quasimodes,
        Stage::Match,
        Stage::Verify,
        Stage::Flow,
        Stage::Probe,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Horizon => "horizon",
            Stage::Assemble => "assemble",
            Stage::Solve => "solve",
            Stage::Scan => "scan",
            Stage::Quasimodes => "quasimodes",
            Stage::Match => "match",
            Stage::Verify => "verify",
            Stage::Flow => "flow",
            Stage::Probe => "probe",
        }
    }

    /// Stages whose results this one reads.
    pub fn dependencies(self) -> &'static [Stage] {
        match self {
            Stage::Horizon => &[],
            Stage::Assemble | Stage::Quasimodes | Stage::Flow | Stage::Probe => &[Stage::Horizon],
            Stage::Solve | Stage::Scan => &[Stage::Assemble],
            Stage::Match => &[Stage::Solve, Stage::Quasimodes],
            Stage::Verify => &[Stage::Solve],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n_radial: usize,
    pub n_angular: usize,
    pub delta_factor: f64,
    /// Radial nodes of the grid used for the resolution check; defaults to 2·n_radial.
    pub fine_n_radial: Option<usize>,
    /// Write the assembled (P0, P1, P2) as `operator.bin`.
    pub dump_operator: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n_radial: 32, n_angular: 12, delta_factor: DEFAULT_DELTA_FACTOR, fine_n_radial: None, dump_operator: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuasimodeStageConfig {
    pub ell_min: usize,
    pub ell_max: usize,
    pub n_radial: usize,
    pub n_angular: usize,
    pub n_radial_full: usize,
    pub r1: Option<f64>,
    pub transition_width: Option<f64>,
}

impl Default for QuasimodeStageConfig {
    fn default() -> Self {
        let q = QuasimodeConfig::default();
        Self {
            ell_min: 3,
            ell_max: 9,
            n_radial: q.n_radial,
            n_angular: q.n_angular,
            n_radial_full: q.n_radial_full,
            r1: q.r1,
            transition_width: q.transition_width,
        }
    }
}

impl QuasimodeStageConfig {
    pub fn to_config(&self) -> QuasimodeConfig {
        QuasimodeConfig {
            n_radial: self.n_radial,
            n_angular: self.n_angular,
            n_radial_full: self.n_radial_full,
            r1: self.r1,
            transition_width: self.transition_width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub field: KillingField,
    /// Frequency at which the manufactured mode is tested.
    pub manufactured_lambda: [f64; 2],
    pub indicial_k: Vec<i32>,
    /// Frequencies for indicial.csv, in addition to the converged QNFs.
    pub indicial_lambdas: Vec<[f64; 2]>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            field: KillingField::K,
            manufactured_lambda: [1.0, -0.5],
            indicial_k: vec![-2, -1, 0, 1, 2],
            indicial_lambdas: vec![[1.0, 0.0], [2.0, -0.5]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub k_values: Vec<i32>,
    pub strip: f64,
    /// Defaults to [`crate::energy::default_samples`].
    pub samples: Option<Vec<[f64; 2]>>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { k_values: vec![0], strip: DEFAULT_STRIP, samples: None }
    }
}

impl ProbeConfig {
    pub fn sample_points(&self) -> Vec<C64> {
        match &self.samples {
            Some(s) => s.iter().map(|z| C64::new(z[0], z[1])).collect(),
            None => crate::energy::default_samples(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub n_seeds: usize,
    pub z_min: f64,
    pub z_max: f64,
    pub t_max: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self { n_seeds: 8, z_min: 1.0, z_max: 2.0, t_max: 1e3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: BlackHoleParams,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "dirichlet")]
    pub bc: BoundaryCondition,
    pub pipeline: Vec<Stage>,
    /// Stages whose failure only sets the partial-success flag.
    #[serde(default)]
    pub optional_stages: Vec<Stage>,
    #[serde(default = "default_region")]
    pub solve: SearchRegion,
    /// Defaults to a rectangle derived from the surface gravity.
    #[serde(default)]
    pub scan: Option<ScanSpec>,
    #[serde(default)]
    pub quasimodes: QuasimodeStageConfig,
    #[serde(default, rename = "match")]
    pub match_window: MatchWindow,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn dirichlet() -> BoundaryCondition {
    BoundaryCondition::Dirichlet
}

fn default_region() -> SearchRegion {
    SearchRegion { re_min: 0.5, re_max: 15.0, im_min: -4.0, im_max: 0.5 }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("adsqnm_out")
}

impl RunConfig {
    /// Minimal configuration running only the given stages.
    pub fn new(params: BlackHoleParams, pipeline: Vec<Stage>) -> Self {
        Self {
            params,
            grid: GridConfig::default(),
            bc: dirichlet(),
            pipeline,
            optional_stages: Vec::new(),
            solve: default_region(),
            scan: None,
            quasimodes: QuasimodeStageConfig::default(),
            match_window: MatchWindow::default(),
            verify: VerifyConfig::default(),
            probe: ProbeConfig::default(),
            flow: FlowConfig::default(),
            output_dir: default_output_dir(),
            seed: 0,
        }
    }

    /// Parse JSON text: schema first, then typed decoding, then physical checks.
    pub fn from_json_str(text: &str) -> Result<Self, CliError> {
        let value: Value = serde_json::from_str(text).map_err(|e| CliError::ConfigInvalid(format!("not JSON: {e}")))?;
        if let Err(CliError::ConfigInvalid(m)) = validate_against_schema(&value) {
            // Lead with the physical reason when the parameters themselves are at fault.
            let physical = serde_json::from_value::<BlackHoleParams>(value["params"].clone())
                .ok()
                .and_then(|p| p.validate().err());
            return Err(CliError::ConfigInvalid(match physical {
                Some(e) => format!("{e} ({m})"),
                None => m,
            }));
        }
        let cfg: RunConfig = serde_json::from_value(value).map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// Physical and numerical invariants the schema cannot express.
    pub fn check(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::ConfigInvalid(m));
        if let Err(e) = self.params.validate() {
            return bad(e.to_string());
        }
        if let Err(e) = find_horizon(&self.params) {
            return bad(format!("no horizon: {e}"));
        }
        let g = &self.grid;
        if g.n_radial < MIN_RADIAL || g.n_angular < MIN_ANGULAR {
            return bad(format!("grid needs n_radial ≥ {MIN_RADIAL} and n_angular ≥ {MIN_ANGULAR}"));
        }
        if g.fine_n_radial.is_some_and(|n| n <= g.n_radial) {
            return bad("fine_n_radial must exceed n_radial".into());
        }
        if !(g.delta_factor > 0.0 && g.delta_factor < 1.0) {
            return bad(format!("delta_factor must lie in (0, 1), got {}", g.delta_factor));
        }
        if self.params.k.unsigned_abs() as usize > g.n_angular {
            return bad(format!("|k| = {} exceeds n_angular = {}", self.params.k.abs(), g.n_angular));
        }
        let r = &self.solve;
        if !(r.re_min < r.re_max && r.im_min < r.im_max) {
            return bad("solve region is empty".into());
        }
        let q = &self.quasimodes;
        if q.ell_min > q.ell_max {
            return bad("quasimodes.ell_min exceeds ell_max".into());
        }
        if !(self.flow.z_min <= self.flow.z_max) {
            return bad("flow.z_min exceeds z_max".into());
        }
        if self.pipeline.is_empty() {
            return bad("empty pipeline".into());
        }
        if matches!(self.bc, BoundaryCondition::Robin { .. }) && self.params.nu >= 1.0 {
            log::warn!("Robin condition with ν = {} ≥ 1 is imposed as Dirichlet", self.params.nu);
        }
        Ok(())
    }

    /// Requested stages plus their dependencies, in execution order.
    pub fn stage_plan(&self) -> Vec<Stage> {
        let mut want = std::collections::BTreeSet::new();
        let mut stack: Vec<Stage> = self.pipeline.clone();
        while let Some(s) = stack.pop() {
            if want.insert(s) {
                stack.extend_from_slice(s.dependencies());
            }
        }
        Stage::ALL.iter().copied().filter(|s| want.contains(s)).collect()
    }

    /// sha256 of the canonical (defaults filled in) JSON form, ignoring the output directory.
    pub fn hash(&self) -> String {
        let canonical = Self { output_dir: PathBuf::new(), ..self.clone() };
        let text = serde_json::to_string(&canonical).expect("config serializes");
        hex(&Sha256::digest(text.as_bytes()))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn compiled(schema: &str) -> jsonschema::Validator {
    let schema: Value = serde_json::from_str(schema).expect("bundled schema is JSON");
    jsonschema::validator_for(&schema).expect("bundled schema compiles")
}

pub(crate) fn schema_errors(schema: &str, instance: &Value) -> Vec<String> {
    compiled(schema).iter_errors(instance).map(|e| format!("{}: {e}", e.instance_path)).collect()
}

pub fn validate_against_schema(value: &Value) -> Result<(), CliError> {
    let errors = schema_errors(CONFIG_SCHEMA, value);
    if errors.is_empty() {
        Ok(())
    } else {
        Err(CliError::ConfigInvalid(errors.join("; ")))
    }
}
