//! Run configuration: a sectioned key = value file (TOML), unknown keys rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use qcorr::budget::{READOUT_SIGMA_FOURTH_ORDER, READOUT_SIGMA_SECOND_ORDER};
use qcorr::{CouplingMode, ErrorParams, ExperimentParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// `coupling-only` or `coupling-plus-bath-drive`.
    pub coupling_mode: String,
    pub experiment: ExperimentSection,
    pub errors: ErrorSection,
    pub protocol: ProtocolSection,
    pub sweep: SweepSection,
    pub budget: BudgetSection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            coupling_mode: CouplingMode::default().to_string(),
            experiment: ExperimentSection::default(),
            errors: ErrorSection::default(),
            protocol: ProtocolSection::default(),
            sweep: SweepSection::default(),
            budget: BudgetSection::default(),
            output: OutputSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub j_ch: f64,
    pub nu: f64,
    pub p_c: f64,
    pub p_h: f64,
    pub delta_t: f64,
    pub n_repeat: usize,
    pub bath_spins: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        let p = ExperimentParams::default();
        Self {
            j_ch: p.j_ch,
            nu: p.nu,
            p_c: p.p_c,
            p_h: p.p_h,
            delta_t: p.delta_t,
            n_repeat: p.n_repeat,
            bath_spins: p.bath_spins,
        }
    }
}

impl ExperimentSection {
    pub fn params(&self) -> ExperimentParams {
        ExperimentParams {
            j_ch: self.j_ch,
            nu: self.nu,
            p_c: self.p_c,
            p_h: self.p_h,
            delta_t: self.delta_t,
            n_repeat: self.n_repeat,
            bath_spins: self.bath_spins,
        }
    }
}

/// Unset fields resolve per command: off for `simulate`, the published values for `budget`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ErrorSection {
    pub delta_theta: Option<f64>,
    pub k_decay: Option<f64>,
    pub readout_sigma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Second,
    Fourth,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolSection {
    pub kind: ProtocolKind,
    pub tau32: f64,
    pub tau43: f64,
    /// Channel file for `custom`: one channel per block, blocks separated by `---`.
    pub channels: Option<PathBuf>,
    /// Free evolution after each custom slot; the sweep replaces the first.
    pub delays: Vec<f64>,
    /// Highest δt order kept in the custom-protocol target.
    pub target_order: usize,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self {
            kind: ProtocolKind::Second,
            tau32: 10e-6,
            tau43: 10e-6,
            channels: None,
            delays: Vec::new(),
            target_order: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Tau21,
    DeltaT,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub axis: SweepAxis,
    pub start: f64,
    pub step: f64,
    pub points: usize,
    /// τ21 held fixed when sweeping δt.
    pub tau21: f64,
    /// Side length and step of the τ21 × τ43 grid for `--2d`.
    pub points_2d: usize,
    pub step_2d: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { axis: SweepAxis::Tau21, start: 0.0, step: 2e-6, points: 40, tau21: 10e-6, points_2d: 32, step_2d: 2e-6 }
    }
}

impl SweepSection {
    pub fn grid(&self) -> Vec<f64> {
        (0..self.points).map(|k| self.start + k as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetSection {
    pub theta: usize,
    pub dt_min: f64,
    pub dt_max: f64,
    pub points: usize,
}

impl Default for BudgetSection {
    fn default() -> Self {
        Self { theta: 2, dt_min: 0.05e-3, dt_max: 2e-3, points: 400 }
    }
}

impl BudgetSection {
    /// Log-spaced δt values.
    pub fn grid(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.dt_min];
        }
        let r = (self.dt_max / self.dt_min).ln();
        (0..self.points).map(|k| self.dt_min * (r * k as f64 / (self.points - 1) as f64).exp()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub path: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { path: PathBuf::from("qcorr_out.csv") }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.mode()?;
        self.experiment.params().validate()?;
        let s = &self.sweep;
        if s.points == 0 || s.points_2d == 0 {
            return Err(CliError::Config("sweep grids need at least one point".into()));
        }
        if !(s.step > 0.0 && s.step_2d > 0.0) {
            return Err(CliError::Config("sweep steps must be positive".into()));
        }
        if s.axis == SweepAxis::Tau21 && s.start < 0.0 {
            return Err(CliError::Config("tau21 grid must start at or after zero".into()));
        }
        if s.axis == SweepAxis::DeltaT && s.start <= 0.0 {
            return Err(CliError::Config("delta_t grid must start above zero".into()));
        }
        let b = &self.budget;
        if b.points == 0 {
            return Err(CliError::Config("budget grid is empty".into()));
        }
        if !(b.dt_min > 0.0 && b.dt_max >= b.dt_min) {
            return Err(CliError::Config("budget needs 0 < dt_min <= dt_max".into()));
        }
        if ![2, 4].contains(&b.theta) {
            return Err(CliError::Config(format!("budget.theta must be 2 or 4 (got {})", b.theta)));
        }
        if self.protocol.target_order == 0 || self.protocol.target_order % 2 == 1 {
            return Err(CliError::Config("protocol.target_order must be a positive even number".into()));
        }
        if self.protocol.kind == ProtocolKind::Custom && self.protocol.channels.is_none() {
            return Err(CliError::Config("custom protocol needs protocol.channels".into()));
        }
        Ok(())
    }

    pub fn mode(&self) -> Result<CouplingMode, CliError> {
        self.coupling_mode.parse().map_err(|e: qcorr::Error| CliError::Config(e.to_string()))
    }

    /// Error parameters for `simulate`: unset mechanisms are off.
    pub fn simulate_errors(&self) -> ErrorParams {
        let e = &self.errors;
        ErrorParams {
            delta_theta: e.delta_theta.unwrap_or(0.0),
            k_decay: e.k_decay.unwrap_or(0.0),
            readout_sigma: e.readout_sigma.unwrap_or(0.0),
            seed: self.seed,
            ..ErrorParams::ideal()
        }
    }

    /// Error parameters for `budget`: unset fields take the published values for Θ.
    pub fn budget_errors(&self) -> ErrorParams {
        let base = ErrorParams::default();
        let sigma = if self.budget.theta == 4 { READOUT_SIGMA_FOURTH_ORDER } else { READOUT_SIGMA_SECOND_ORDER };
        let e = &self.errors;
        ErrorParams {
            delta_theta: e.delta_theta.unwrap_or(base.delta_theta),
            k_decay: e.k_decay.unwrap_or(base.k_decay),
            readout_sigma: e.readout_sigma.unwrap_or(sigma),
            seed: self.seed,
            ..base
        }
    }

    /// Copy with every optional error field filled in as resolved.
    pub fn resolved(&self, errors: &ErrorParams) -> Self {
        let mut c = self.clone();
        c.errors = ErrorSection {
            delta_theta: Some(errors.delta_theta),
            k_decay: Some(errors.k_decay),
            readout_sigma: Some(errors.readout_sigma),
        };
        c
    }

    /// Dotted `config.section.key` entries, output paths left out so that
    /// rerunning to another file reproduces the same bytes.
    pub fn metadata(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        let value = toml::Value::try_from(self).expect("config serializes");
        flatten("config", &value, &mut out);
        out.retain(|k, _| !k.starts_with("config.output."));
        out
    }

    /// Inverse of [`RunConfig::metadata`]; the output path is left at its default.
    pub fn from_metadata(meta: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let mut doc = String::new();
        for (k, v) in meta {
            if let Some(key) = k.strip_prefix("config.") {
                doc.push_str(&format!("{key} = {v}\n"));
            }
        }
        if doc.is_empty() {
            return Err(CliError::Config("no embedded config found".into()));
        }
        Self::from_toml(&doc)
    }
}

fn flatten(prefix: &str, v: &toml::Value, out: &mut BTreeMap<String, String>) {
    match v {
        toml::Value::Table(t) => {
            for (k, x) in t {
                flatten(&format!("{prefix}.{k}"), x, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other.to_string());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(RunConfig::from_toml("sede = 3"), Err(CliError::Config(_))));
        assert!(matches!(RunConfig::from_toml("[experiment]\nj = 1.0"), Err(CliError::Config(_))));
    }

    #[test]
    fn sections_parse() {
        let c = RunConfig::from_toml(
            "seed = 7\ncoupling_mode = \"coupling-plus-bath-drive\"\n[experiment]\ndelta_t = 1e-4\n[protocol]\nkind = \"fourth\"\n[sweep]\naxis = \"delta_t\"\nstart = 1e-5\nstep = 1e-5\npoints = 3\n",
        )
        .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.mode().unwrap(), CouplingMode::CouplingPlusBathDrive);
        assert_eq!(c.protocol.kind, ProtocolKind::Fourth);
        assert_eq!(c.sweep.grid().len(), 3);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(RunConfig::from_toml("coupling_mode = \"sideways\"").is_err());
        assert!(RunConfig::from_toml("[experiment]\ndelta_t = -1.0").is_err());
        assert!(RunConfig::from_toml("[budget]\npoints = 0").is_err());
        assert!(RunConfig::from_toml("[protocol]\nkind = \"custom\"").is_err());
    }

    #[test]
    fn metadata_round_trip() {
        let mut c =
            RunConfig::from_toml("seed = 11\n[experiment]\ndelta_t = 3.3e-4\n[errors]\nk_decay = 2760.0").unwrap();
        c = c.resolved(&c.simulate_errors());
        let back = RunConfig::from_metadata(&c.metadata()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn budget_defaults_follow_theta() {
        let c = RunConfig::from_toml("[budget]\ntheta = 4").unwrap();
        assert_eq!(c.budget_errors().readout_sigma, READOUT_SIGMA_FOURTH_ORDER);
        assert_eq!(c.simulate_errors().readout_sigma, 0.0);
    }
}
