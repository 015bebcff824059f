//! Run configuration: a flat TOML file whose every key has a baseline
//! default, so an empty file reproduces the reference highway setup.
//! Unknown keys are rejected by name.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::LinkBudget;
use crate::l2s::{load_table, synth_table, L2sError, L2sTable};
use crate::scenario::ScenarioConfig;
use crate::traffic::{McsTable, TrafficConfig, TrafficError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse config `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config: {reason}")]
    Invalid { reason: String },
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error(transparent)]
    L2s(#[from] L2sError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub highway_length_m: f64,
    pub lane_count: u32,
    pub lane_width_m: f64,
    pub isd_m: f64,
    pub bs_count: u32,
    pub comm_range_m: f64,
    pub random_lane_offsets: bool,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            highway_length_m: 3464.0,
            lane_count: 6,
            lane_width_m: 4.0,
            isd_m: 1732.0,
            bs_count: 2,
            comm_range_m: 400.0,
            random_lane_offsets: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficSection {
    pub packet_size_bytes: u32,
}

impl Default for TrafficSection {
    fn default() -> Self {
        Self {
            packet_size_bytes: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSection {
    pub eirp_dbm: f64,
    pub carrier_freq_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    pub antenna_height_m: f64,
}

impl Default for LinkSection {
    fn default() -> Self {
        Self {
            eirp_dbm: 23.0,
            carrier_freq_hz: 5.9e9,
            bandwidth_hz: 10.0e6,
            noise_figure_db: 9.0,
            antenna_height_m: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub iterations: u64,
    pub rng_seed: u64,
    pub record_iterations: bool,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            iterations: 1000,
            rng_seed: 1,
            record_iterations: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub ivd_m: Vec<f64>,
    pub message_rates_hz: Vec<f64>,
    pub speeds_kmh: Vec<f64>,
    pub retx: Vec<bool>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            ivd_m: vec![3.0, 5.0, 10.0, 20.0, 40.0, 50.0, 80.0, 100.0],
            message_rates_hz: vec![10.0],
            speeds_kmh: vec![100.0],
            retx: vec![false, true],
        }
    }
}

/// Parameters of the generated error-rate curves, used for every
/// (speed, scheme) pair without an explicit `[[tables]]` entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSection {
    /// Waterfall steepness of the generated curves.
    pub slope_k: f64,
    /// Fading penalty applied to both schemes, scaled by speed / 100 km/h.
    pub channel_penalty_db_per_100kmh: f64,
    /// Combining gain of the retransmission scheme, independent of speed.
    pub retx_gain_base_db: f64,
    /// Speed-scaled part of the combining gain (time diversity grows with
    /// channel variation).
    pub retx_gain_db_per_100kmh: f64,
}

impl Default for SyntheticSection {
    fn default() -> Self {
        Self {
            slope_k: 2.0,
            channel_penalty_db_per_100kmh: 3.0,
            retx_gain_base_db: 2.0,
            retx_gain_db_per_100kmh: 2.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McsSection {
    /// "builtin" for the built-in ladder, otherwise a path to an
    /// `index,spectral_efficiency` file.
    pub source: String,
}

impl Default for McsSection {
    fn default() -> Self {
        Self {
            source: "builtin".into(),
        }
    }
}

/// Maps one (speed, scheme) pair to an error-rate table source:
/// "synthetic" or a path to an `mcs,snr_db,bler` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub speed_kmh: f64,
    pub retx: bool,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RootConfig {
    pub output_dir: String,
    pub scenario: ScenarioSection,
    pub traffic: TrafficSection,
    pub link: LinkSection,
    pub sim: SimSection,
    pub sweep: SweepSection,
    pub synthetic: SyntheticSection,
    pub mcs: McsSection,
    pub tables: Vec<TableEntry>,
}

impl Default for RootConfig {
    fn default() -> Self {
        Self {
            output_dir: "out".into(),
            scenario: ScenarioSection::default(),
            traffic: TrafficSection::default(),
            link: LinkSection::default(),
            sim: SimSection::default(),
            sweep: SweepSection::default(),
            synthetic: SyntheticSection::default(),
            mcs: McsSection::default(),
            tables: Vec::new(),
        }
    }
}

impl RootConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |reason: String| ConfigError::Invalid { reason };
        self.scenario_config(10.0, 0)
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        self.link_budget().validate().map_err(|e| invalid(e.to_string()))?;
        if self.sim.iterations == 0 {
            return Err(invalid("sim.iterations must be >= 1".into()));
        }
        if self.sweep.ivd_m.is_empty()
            || self.sweep.message_rates_hz.is_empty()
            || self.sweep.speeds_kmh.is_empty()
            || self.sweep.retx.is_empty()
        {
            return Err(invalid("sweep lists must not be empty".into()));
        }
        for &ivd in &self.sweep.ivd_m {
            if !ivd.is_finite() || ivd <= 0.0 {
                return Err(invalid(format!("sweep.ivd_m value {ivd} must be > 0")));
            }
        }
        for &rate in &self.sweep.message_rates_hz {
            self.traffic_config(rate)?.validate()?;
        }
        for &speed in &self.sweep.speeds_kmh {
            if !speed.is_finite() || speed < 0.0 {
                return Err(invalid(format!("sweep.speeds_kmh value {speed} must be >= 0")));
            }
        }
        if self.synthetic.slope_k <= 0.0 {
            return Err(invalid("synthetic.slope_k must be > 0".into()));
        }
        for entry in &self.tables {
            if entry.source.is_empty() {
                return Err(invalid(format!(
                    "tables entry for speed {} must name a source",
                    entry.speed_kmh
                )));
            }
        }
        Ok(())
    }

    pub fn scenario_config(&self, ivd_m: f64, rng_seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            highway_length_m: self.scenario.highway_length_m,
            lane_count: self.scenario.lane_count,
            lane_width_m: self.scenario.lane_width_m,
            ivd_m,
            isd_m: self.scenario.isd_m,
            bs_count: self.scenario.bs_count,
            comm_range_m: self.scenario.comm_range_m,
            rng_seed,
            random_lane_offsets: self.scenario.random_lane_offsets,
        }
    }

    pub fn traffic_config(&self, message_rate_hz: f64) -> Result<TrafficConfig, ConfigError> {
        Ok(TrafficConfig {
            packet_size_bytes: self.traffic.packet_size_bytes,
            message_rate_hz,
        })
    }

    pub fn link_budget(&self) -> LinkBudget {
        LinkBudget {
            eirp_dbm: self.link.eirp_dbm,
            carrier_freq_hz: self.link.carrier_freq_hz,
            bandwidth_hz: self.link.bandwidth_hz,
            noise_figure_db: self.link.noise_figure_db,
            antenna_height_m: self.link.antenna_height_m,
        }
    }

    pub fn mcs_table(&self) -> Result<McsTable, ConfigError> {
        if self.mcs.source == "builtin" {
            Ok(McsTable::default())
        } else {
            Ok(McsTable::from_file(Path::new(&self.mcs.source))?)
        }
    }

    /// Error-rate table for one speed and one scheme (`retx_mode` true for
    /// the combined first-plus-retransmission curves). An explicit
    /// `[[tables]]` entry wins; otherwise curves are generated
    /// synthetically from the MCS ladder and the `[synthetic]` knobs.
    pub fn table_for(
        &self,
        mcs: &McsTable,
        speed_kmh: f64,
        retx_mode: bool,
    ) -> Result<L2sTable, ConfigError> {
        let scheme = if retx_mode { "retx" } else { "first" };
        let default_label = format!("synthetic-{}kmh-{scheme}", crate::metrics::fmt_grid_value(speed_kmh));
        let entry = self
            .tables
            .iter()
            .find(|t| t.speed_kmh == speed_kmh && t.retx == retx_mode);
        match entry {
            Some(e) if e.source != "synthetic" => {
                let label = e.label.as_deref().unwrap_or(&default_label);
                Ok(load_table(Path::new(&e.source), label, "file", speed_kmh)?)
            }
            other => {
                let label = other
                    .and_then(|e| e.label.as_deref())
                    .unwrap_or(&default_label);
                let penalty =
                    self.synthetic.channel_penalty_db_per_100kmh * speed_kmh / 100.0;
                let gain = if retx_mode {
                    self.synthetic.retx_gain_base_db
                        + self.synthetic.retx_gain_db_per_100kmh * speed_kmh / 100.0
                } else {
                    0.0
                };
                Ok(synth_table(
                    mcs,
                    penalty,
                    gain,
                    self.synthetic.slope_k,
                    label,
                    "EVA",
                    speed_kmh,
                ))
            }
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        PathBuf::from(&self.output_dir)
    }
}

/// Reads and validates a config file. An empty file is valid and yields
/// the full baseline setup.
pub fn load_config(path: &Path) -> Result<RootConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let config: RootConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    config.validate()?;
    Ok(config)
}
