//! Experiment configuration: JSON in, validated structs out.

use crate::bases::{BasisLabel, BlockPartition};
use crate::operators::OperatorKind;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Which experiment a config drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    PhaseTransition,
    CoherenceMc,
    RicCompare,
    CirculantDemo,
}

/// An inclusive arithmetic progression of grid values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRange {
    pub start: usize,
    pub end: usize,
    #[serde(default = "default_step")]
    pub step: usize,
}

fn default_step() -> usize {
    1
}

impl GridRange {
    pub fn new(start: usize, end: usize, step: usize) -> Result<Self> {
        let range = GridRange { start, end, step };
        range.validate()?;
        Ok(range)
    }

    pub fn validate(&self) -> Result<()> {
        if self.start == 0 || self.step == 0 || self.start > self.end {
            return Err(Error::Config(format!(
                "grid range needs 1 <= start <= end and step >= 1; \
                 got start={}, end={}, step={}",
                self.start, self.end, self.step
            )));
        }
        Ok(())
    }

    /// The values start, start+step, ... up to and including `end` when hit.
    pub fn values(&self) -> Vec<usize> {
        (self.start..=self.end).step_by(self.step).collect()
    }
}

fn default_n_trials() -> usize {
    20
}

fn default_success_threshold() -> f64 {
    1e-2
}

/// Everything a reproducible experiment run needs.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Block structure of the master operator (square: one full block per
    /// signal block; the grid truncates it).
    pub partition: BlockPartition,
    pub basis_label: BasisLabel,
    pub operator_kind: OperatorKind,
    #[serde(default = "default_n_trials")]
    pub n_trials: usize,
    #[serde(default = "default_success_threshold")]
    pub success_threshold: f64,
    pub master_seed: u64,
    pub s_range: GridRange,
    pub m_range: GridRange,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Parse a JSON config file; unknown keys are rejected.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.partition.validate()?;
        if self.n_trials == 0 {
            return Err(Error::Config("n_trials must be at least 1".into()));
        }
        if !(self.success_threshold > 0.0) {
            return Err(Error::Config(format!(
                "success_threshold must be positive; got {}",
                self.success_threshold
            )));
        }
        self.s_range.validate()?;
        self.m_range.validate()?;
        if self.kind == ExperimentKind::PhaseTransition {
            if self.partition.meas_per_block != self.partition.block_len {
                return Err(Error::Config(format!(
                    "the grid truncates a square master operator, so the config \
                     partition needs meas_per_block = block_len; got {} and {}",
                    self.partition.meas_per_block, self.partition.block_len
                )));
            }
            if self.m_range.end > self.partition.block_len {
                return Err(Error::Config(format!(
                    "m_range reaches {} but each block has only {} rows",
                    self.m_range.end, self.partition.block_len
                )));
            }
            if self.s_range.end > self.partition.meas_total {
                return Err(Error::Config(format!(
                    "s_range reaches {} but the master operator has only {} rows",
                    self.s_range.end, self.partition.meas_total
                )));
            }
            match self.basis_label {
                BasisLabel::Canonical | BasisLabel::Fourier | BasisLabel::Generic => {}
                other => {
                    return Err(Error::Config(format!(
                        "phase transitions support the canonical, fourier, and \
                         generic bases; got {other}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn valid_config() -> ExperimentConfig {
        ExperimentConfig {
            kind: ExperimentKind::PhaseTransition,
            partition: BlockPartition::new(4, 32, 32).unwrap(),
            basis_label: BasisLabel::Fourier,
            operator_kind: OperatorKind::Dbd,
            n_trials: 20,
            success_threshold: 1e-2,
            master_seed: 7,
            s_range: GridRange::new(2, 8, 2).unwrap(),
            m_range: GridRange::new(2, 24, 2).unwrap(),
            output_path: None,
        }
    }

    #[test]
    fn grid_range_values_are_inclusive() {
        assert_eq!(GridRange::new(2, 8, 2).unwrap().values(), vec![2, 4, 6, 8]);
        assert_eq!(GridRange::new(1, 7, 3).unwrap().values(), vec![1, 4, 7]);
        assert_eq!(GridRange::new(5, 5, 1).unwrap().values(), vec![5]);
        assert!(GridRange::new(0, 5, 1).is_err());
        assert!(GridRange::new(3, 2, 1).is_err());
        assert!(GridRange::new(1, 2, 0).is_err());
    }

    #[test]
    fn validation_enforces_protocol_constraints() {
        assert!(valid_config().validate().is_ok());

        let mut c = valid_config();
        c.n_trials = 0;
        assert!(c.validate().is_err());

        let mut c = valid_config();
        c.success_threshold = 0.0;
        assert!(c.validate().is_err());

        let mut c = valid_config();
        c.partition = BlockPartition::new(4, 32, 16).unwrap();
        assert!(c.validate().is_err(), "master must be square");

        let mut c = valid_config();
        c.m_range = GridRange::new(2, 40, 2).unwrap();
        assert!(c.validate().is_err(), "m_range beyond block rows");

        let mut c = valid_config();
        c.s_range = GridRange::new(2, 200, 2).unwrap();
        assert!(c.validate().is_err(), "s_range beyond total rows");

        let mut c = valid_config();
        c.basis_label = BasisLabel::Circulant;
        assert!(c.validate().is_err(), "unsupported phase basis");
    }

    #[test]
    fn json_round_trip_and_unknown_key_rejection() {
        let config = valid_config();
        let json = config.to_json_string().unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back.master_seed, config.master_seed);
        assert_eq!(back.s_range, config.s_range);
        assert_eq!(back.basis_label, config.basis_label);

        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(json.as_bytes()).unwrap();
        let loaded = ExperimentConfig::from_json_file(file.path()).unwrap();
        assert_eq!(loaded.m_range, config.m_range);

        let sneaky = json.replacen('{', "{\n  \"extra_knob\": 3,", 1);
        let err = serde_json::from_str::<ExperimentConfig>(&sneaky);
        assert!(err.is_err(), "unknown keys must be rejected");
    }

    #[test]
    fn defaults_fill_in_optional_fields() {
        let json = r#"{
            "kind": "phase_transition",
            "partition": {
                "n_total": 128, "block_len": 32, "n_blocks": 4,
                "meas_per_block": 32, "meas_total": 128
            },
            "basis_label": "canonical",
            "operator_kind": "rbd",
            "master_seed": 11,
            "s_range": {"start": 2, "end": 8, "step": 2},
            "m_range": {"start": 2, "end": 24}
        }"#;
        let config: ExperimentConfig = serde_json::from_str(json).unwrap();
        assert_eq!(config.n_trials, 20);
        assert_eq!(config.success_threshold, 1e-2);
        assert_eq!(config.m_range.step, 1);
        assert!(config.output_path.is_none());
        assert!(config.validate().is_ok());
    }
}
