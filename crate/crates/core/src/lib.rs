//! System-level Monte Carlo simulator for direct C-V2X sidelink (mode 3)
//! broadcast on a highway.
//!
//! The crate models a multi-lane highway where every vehicle periodically
//! broadcasts cooperative awareness messages over PC5 under base-station
//! scheduling, and quantifies how one blind HARQ retransmission shifts the
//! packet reception ratio (PRR) across inter-vehicle distances, message
//! rates, and speed-dependent link conditions.
//!
//! Modules follow the processing chain: [`scenario`] lays out vehicles and
//! base stations, [`traffic`] sizes the offered load and picks the MCS,
//! [`channel`] turns geometry into SINR, [`l2s`] maps SINR to block error
//! rate, [`engine`] runs the seeded iteration loop, [`metrics`] folds runs
//! into PRR figures, and [`config`]/[`sweep`] drive parameter sweeps from a
//! config file to CSV output.

pub mod channel;
pub mod config;
pub mod engine;
pub mod l2s;
pub mod metrics;
pub mod scenario;
pub mod sweep;
pub mod traffic;

pub use channel::{dbm_to_mw, mw_to_dbm, noise_power_mw, pathloss_db, sinr, LinkBudget, SinrSample};
pub use config::{load_config, RootConfig};
pub use engine::{combine_sinr_db, run, RunResult, SimConfig, TableSet};
pub use l2s::{bler_lookup, load_table, save_table, synth_table, L2sTable};
pub use metrics::{ci95_halfwidth, effective_prr, SweepPoint, SweepResult};
pub use scenario::{deploy, ue_count_highway, BaseStation, Deployment, ScenarioConfig, Vehicle};
pub use sweep::{emit_plot_data, run_sweep};
pub use traffic::{plan_load, select_mcs, LoadPlan, McsTable, TrafficConfig};
