//! Key-value run configuration shared by all subcommands.

use std::collections::HashMap;
use std::path::Path;

use radiomics_core::extract::ExtractionParams;
use radiomics_core::quantize::{QuantAlgorithm, QuantizerSpec};
use radiomics_core::selection::SelectionConfig;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSet {
    Pet,
    Ct,
    PetCt,
}

impl FeatureSet {
    pub fn keeps(self, column: &str) -> bool {
        match self {
            FeatureSet::Pet => column.starts_with("PET_"),
            FeatureSet::Ct => column.starts_with("CT_"),
            FeatureSet::PetCt => column.starts_with("PET_") || column.starts_with("CT_"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Lr,
    Dm,
    Os,
}

impl Outcome {
    pub fn tag(self) -> &'static str {
        match self {
            Outcome::Lr => "LR",
            Outcome::Dm => "DM",
            Outcome::Os => "OS",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub feature_set: FeatureSet,
    pub outcome: Outcome,
    pub voxel_sizes: Vec<f64>,
    pub algorithms: Vec<QuantAlgorithm>,
    pub gray_levels: Vec<u16>,
    pub selection: SelectionConfig,
    pub forest_bootstrap: usize,
    pub n_splits: usize,
    pub fdr_q: f64,
    pub three_group: bool,
    // synthetic-cohort keys
    pub synth_patients: usize,
    pub synth_event_rate: f64,
    pub synth_effect_size: f64,
    pub synth_train_fraction: f64,
    pub synth_dims: [usize; 3],
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            feature_set: FeatureSet::PetCt,
            outcome: Outcome::Dm,
            voxel_sizes: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            algorithms: vec![QuantAlgorithm::EqualProbability, QuantAlgorithm::Uniform],
            gray_levels: vec![8, 16, 32, 64],
            selection: SelectionConfig::default(),
            forest_bootstrap: 100,
            n_splits: 10,
            fdr_q: 0.10,
            three_group: true,
            synth_patients: 30,
            synth_event_rate: 0.15,
            synth_effect_size: 1.0,
            synth_train_fraction: 2.0 / 3.0,
            synth_dims: [12, 12, 8],
        }
    }
}

impl RunConfig {
    pub fn grid(&self) -> Vec<ExtractionParams> {
        let mut grid = Vec::new();
        for &vs in &self.voxel_sizes {
            for &alg in &self.algorithms {
                for &ng in &self.gray_levels {
                    grid.push(ExtractionParams {
                        voxel_size_mm: vs,
                        quantizer: QuantizerSpec { algorithm: alg, levels: ng },
                    });
                }
            }
        }
        grid
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let Some(path) = path else { return Ok(cfg) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        let mut kv = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Validation(format!("config line {}: expected key = value", lineno + 1))
            })?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        for (k, v) in kv {
            cfg.apply(&k, &v)?;
        }
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| CliError::Validation(format!("config key {key}: {what} ({value:?})"));
        match key {
            "feature_set" => {
                self.feature_set = match value {
                    "PET" => FeatureSet::Pet,
                    "CT" => FeatureSet::Ct,
                    "PETCT" => FeatureSet::PetCt,
                    _ => return Err(bad("expected PET, CT or PETCT")),
                }
            }
            "outcome" => {
                self.outcome = match value {
                    "LR" => Outcome::Lr,
                    "DM" => Outcome::Dm,
                    "OS" => Outcome::Os,
                    _ => return Err(bad("expected LR, DM or OS")),
                }
            }
            "voxel_sizes" => {
                self.voxel_sizes = parse_list(value).map_err(|e| bad(&e))?;
                if self.voxel_sizes.iter().any(|&v| !(v > 0.0)) {
                    return Err(bad("voxel sizes must be positive"));
                }
            }
            "quant_algorithms" => {
                let mut algs = Vec::new();
                for part in value.split(',') {
                    algs.push(match part.trim() {
                        "unif" => QuantAlgorithm::Uniform,
                        "eqprob" => QuantAlgorithm::EqualProbability,
                        _ => return Err(bad("expected unif and/or eqprob")),
                    });
                }
                self.algorithms = algs;
            }
            "gray_levels" => {
                self.gray_levels = parse_list(value).map_err(|e| bad(&e))?;
                if self.gray_levels.iter().any(|&g| g < 2) {
                    return Err(bad("gray levels must be at least 2"));
                }
            }
            "reduced_set_size" => self.selection.reduced_set_size = value.parse().map_err(|_| bad("integer"))?,
            "n_experiments" => self.selection.n_experiments = value.parse().map_err(|_| bad("integer"))?,
            "n_bootstrap" => self.selection.n_bootstrap = value.parse().map_err(|_| bad("integer"))?,
            "max_order" => self.selection.max_order = value.parse().map_err(|_| bad("integer"))?,
            "gain_tradeoff" => {
                self.selection.gain_tradeoff = value.parse().map_err(|_| bad("number"))?;
                if !(0.0..=1.0).contains(&self.selection.gain_tradeoff) {
                    return Err(bad("must lie in [0,1]"));
                }
            }
            "forest_bootstrap" => self.forest_bootstrap = value.parse().map_err(|_| bad("integer"))?,
            "n_splits" => self.n_splits = value.parse().map_err(|_| bad("integer"))?,
            "fdr_q" => self.fdr_q = value.parse().map_err(|_| bad("number"))?,
            "risk_groups" => {
                self.three_group = match value {
                    "2" => false,
                    "3" => true,
                    _ => return Err(bad("expected 2 or 3")),
                }
            }
            "synth_patients" => self.synth_patients = value.parse().map_err(|_| bad("integer"))?,
            "synth_event_rate" => {
                self.synth_event_rate = value.parse().map_err(|_| bad("number"))?;
                if !(0.0..1.0).contains(&self.synth_event_rate) {
                    return Err(bad("must lie in [0,1)"));
                }
            }
            "synth_effect_size" => {
                self.synth_effect_size = value.parse().map_err(|_| bad("number"))?;
                if !(0.0..=4.0).contains(&self.synth_effect_size) {
                    return Err(bad("must lie in [0,4]"));
                }
            }
            "synth_train_fraction" => {
                self.synth_train_fraction = value.parse().map_err(|_| bad("number"))?;
                if !(0.0..1.0).contains(&self.synth_train_fraction) {
                    return Err(bad("must lie in (0,1)"));
                }
            }
            "synth_dims" => {
                let d: Vec<usize> = parse_list(value).map_err(|e| bad(&e))?;
                if d.len() != 3 || d.iter().any(|&v| v < 4) {
                    return Err(bad("expected three extents of at least 4"));
                }
                self.synth_dims = [d[0], d[1], d[2]];
            }
            _ => return Err(CliError::Validation(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }
}

fn parse_list<T: std::str::FromStr>(value: &str) -> std::result::Result<Vec<T>, String> {
    value
        .split(',')
        .map(|p| p.trim().parse::<T>().map_err(|_| format!("bad list element {p:?}")))
        .collect()
}
