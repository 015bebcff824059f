//! Sweep orchestration: runs the engine over the cross product of
//! inter-vehicle distance, message rate, speed, and retransmission mode,
//! then writes the aggregate table, per-cell traces, and plot series.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{ConfigError, RootConfig};
use crate::engine::{run, RunResult, SimConfig, TableSet};
use crate::l2s::L2sTable;
use crate::metrics::{
    assemble_sweep, ci95_halfwidth, effective_prr, fmt_grid_value, SweepPoint, SweepResult,
};
use crate::scenario::{deploy, Deployment};
use crate::traffic::plan_load;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("failed to write `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One sweep cell that could not be completed; the rest of the sweep
/// proceeds around it.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub ivd_m: f64,
    pub message_rate_hz: f64,
    pub speed_kmh: f64,
    pub retx: bool,
    pub message: String,
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub result: SweepResult,
    pub failures: Vec<CellFailure>,
    /// Every file written, aggregate table first.
    pub files: Vec<PathBuf>,
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds the root seed, a purpose tag, and parameter bits into one
/// sub-seed. Cells that must stay comparable share their parameter bits:
/// deployments depend only on the spacing, engine streams only on the
/// spacing and message rate, so toggling retransmission or speed replays
/// the same drops and draws.
fn derive_seed(root: u64, tag: &str, bits: &[u64]) -> u64 {
    let mut state = splitmix64(root);
    for b in tag.bytes() {
        state = splitmix64(state ^ u64::from(b));
    }
    for &b in bits {
        state = splitmix64(state ^ b);
    }
    state
}

/// Hex digest identifying the exact configuration a result came from.
pub fn config_fingerprint(config: &RootConfig) -> String {
    let canonical = toml::to_string(config).expect("config serializes to TOML");
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    let mut hex = String::with_capacity(64);
    for byte in hasher.finalize() {
        write!(hex, "{byte:02x}").expect("write to String");
    }
    hex
}

fn write_file(path: &Path, content: &str) -> Result<(), SweepError> {
    std::fs::write(path, content).map_err(|source| SweepError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn sweep_csv(result: &SweepResult) -> String {
    let mut s = String::from(
        "ivd_m,message_rate_hz,speed_kmh,retx,mcs,ue_per_bs,data_volume_mbps,prr_max,runtime_prr,effective_prr,ci95\n",
    );
    for p in &result.points {
        writeln!(
            s,
            "{},{},{},{},{},{},{:.4},{:.4},{:.4},{:.4},{:.4}",
            fmt_grid_value(p.ivd_m),
            fmt_grid_value(p.message_rate_hz),
            fmt_grid_value(p.speed_kmh),
            u8::from(p.retx),
            p.mcs,
            p.ue_per_bs,
            p.data_volume_mbps,
            p.prr_max,
            p.runtime_prr,
            p.effective_prr,
            p.ci95
        )
        .expect("write to String");
    }
    s
}

fn point_file(point: &SweepPoint, run_result: &RunResult, fingerprint: &str) -> String {
    let mut s = String::new();
    let mut meta = |k: &str, v: String| writeln!(s, "# {k} = {v}").expect("write to String");
    meta("ivd_m", fmt_grid_value(point.ivd_m));
    meta("message_rate_hz", fmt_grid_value(point.message_rate_hz));
    meta("speed_kmh", fmt_grid_value(point.speed_kmh));
    meta("retx", u8::from(point.retx).to_string());
    meta("mcs", point.mcs.to_string());
    meta("ue_per_bs", point.ue_per_bs.to_string());
    meta("data_volume_mbps", format!("{:.4}", point.data_volume_mbps));
    meta("prr_max", format!("{:.4}", point.prr_max));
    meta("runtime_prr", format!("{:.4}", point.runtime_prr));
    meta("effective_prr", format!("{:.4}", point.effective_prr));
    meta("ci95", format!("{:.4}", point.ci95));
    meta("mean_sinr_db", format!("{:.4}", point.mean_sinr_db));
    meta("evaluated", point.evaluated.to_string());
    meta("received", point.received.to_string());
    meta("config", fingerprint.to_string());
    for (lo, hi, n) in run_result.sinr.occupied_bins() {
        writeln!(
            s,
            "# sinr_bin,{},{},{n}",
            fmt_grid_value(lo),
            fmt_grid_value(hi)
        )
        .expect("write to String");
    }
    s.push_str("iteration,evaluated,received,mean_sinr_db\n");
    for (i, o) in run_result.per_iteration.iter().enumerate() {
        let mean = match o.sinr.mean_db() {
            Some(m) => format!("{m:.4}"),
            None => "nan".into(),
        };
        writeln!(s, "{i},{},{},{mean}", o.evaluated, o.received).expect("write to String");
    }
    s
}

/// Writes one `ivd_m,effective_prr,ci95` series per (message rate, speed,
/// scheme), sorted by spacing, ready for direct plotting.
pub fn emit_plot_data(result: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>, SweepError> {
    let mut keys: Vec<(f64, f64, bool)> = Vec::new();
    for p in &result.points {
        let key = (p.message_rate_hz, p.speed_kmh, p.retx);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut files = Vec::new();
    for (rate, speed, retx) in keys {
        let mut rows: Vec<&SweepPoint> = result
            .points
            .iter()
            .filter(|p| p.message_rate_hz == rate && p.speed_kmh == speed && p.retx == retx)
            .collect();
        rows.sort_by(|a, b| a.ivd_m.total_cmp(&b.ivd_m));
        let mut s = String::from("ivd_m,effective_prr,ci95\n");
        for p in rows {
            writeln!(
                s,
                "{},{:.4},{:.4}",
                fmt_grid_value(p.ivd_m),
                p.effective_prr,
                p.ci95
            )
            .expect("write to String");
        }
        let name = format!(
            "series-rate{}-speed{}-{}.csv",
            fmt_grid_value(rate),
            fmt_grid_value(speed),
            if retx { "retx" } else { "noretx" }
        );
        let path = dir.join(name);
        write_file(&path, &s)?;
        files.push(path);
    }
    Ok(files)
}

fn run_info(fingerprint: &str, config: &RootConfig, completed: usize, failed: usize) -> String {
    let mut s = String::new();
    let mut line = |k: &str, v: String| writeln!(s, "{k} = {v}").expect("write to String");
    line("config_fingerprint", fingerprint.to_string());
    line("rng_seed", config.sim.rng_seed.to_string());
    line("iterations", config.sim.iterations.to_string());
    line("cells_completed", completed.to_string());
    line("cells_failed", failed.to_string());
    s
}

/// Runs every sweep cell and writes all result files into `output_dir`.
///
/// Cell errors (an unbuildable deployment, table, or load plan, or an
/// engine failure) abort only that cell and are reported in the outcome;
/// I/O and configuration errors abort the whole sweep.
pub fn run_sweep(
    config: &RootConfig,
    output_dir: &Path,
    parallel: bool,
) -> Result<SweepOutcome, SweepError> {
    config.validate()?;
    let mcs = config.mcs_table()?;
    let fingerprint = config_fingerprint(config);
    let budget = config.link_budget();
    let root = config.sim.rng_seed;

    // one deployment per distinct spacing, shared by every scheme and rate
    let mut deployments: Vec<(u64, Result<Deployment, String>)> = Vec::new();
    for &ivd in &config.sweep.ivd_m {
        let bits = ivd.to_bits();
        if deployments.iter().any(|(b, _)| *b == bits) {
            continue;
        }
        let seed = derive_seed(root, "deploy", &[bits]);
        let d = deploy(&config.scenario_config(ivd, seed)).map_err(|e| e.to_string());
        deployments.push((bits, d));
    }

    // one error-rate table per (speed, scheme)
    let need_retx = config.sweep.retx.iter().any(|&r| r);
    let mut l2s_tables: Vec<((u64, bool), Result<L2sTable, String>)> = Vec::new();
    for &speed in &config.sweep.speeds_kmh {
        let bits = speed.to_bits();
        for mode in [false, true] {
            if mode && !need_retx {
                continue;
            }
            if l2s_tables.iter().any(|(k, _)| *k == (bits, mode)) {
                continue;
            }
            let t = config.table_for(&mcs, speed, mode).map_err(|e| e.to_string());
            l2s_tables.push(((bits, mode), t));
        }
    }
    let table_for = |speed: f64, mode: bool| -> &Result<L2sTable, String> {
        &l2s_tables
            .iter()
            .find(|(k, _)| *k == (speed.to_bits(), mode))
            .expect("table cached")
            .1
    };

    let mut cells: Vec<(f64, f64, f64, bool)> = Vec::new();
    for &retx in &config.sweep.retx {
        for &rate in &config.sweep.message_rates_hz {
            for &ivd in &config.sweep.ivd_m {
                for &speed in &config.sweep.speeds_kmh {
                    cells.push((ivd, rate, speed, retx));
                }
            }
        }
    }

    let eval_cell = |cell: &(f64, f64, f64, bool)| -> Result<(SweepPoint, String, String), CellFailure> {
        let (ivd, rate, speed, retx) = *cell;
        let fail = |message: String| CellFailure {
            ivd_m: ivd,
            message_rate_hz: rate,
            speed_kmh: speed,
            retx,
            message,
        };
        let deployment = deployments
            .iter()
            .find(|(b, _)| *b == ivd.to_bits())
            .expect("deployment cached")
            .1
            .as_ref()
            .map_err(|e| fail(e.clone()))?;
        let first = table_for(speed, false).as_ref().map_err(|e| fail(e.clone()))?;
        let retx_table = if retx {
            Some(table_for(speed, true).as_ref().map_err(|e| fail(e.clone()))?.clone())
        } else {
            None
        };
        let traffic = config.traffic_config(rate).map_err(|e| fail(e.to_string()))?;
        let plan = plan_load(
            &mcs,
            &traffic,
            config.link.bandwidth_hz,
            config.scenario.isd_m,
            ivd,
            config.scenario.lane_count,
            retx,
        )
        .map_err(|e| fail(e.to_string()))?;
        let sim = SimConfig {
            iterations: config.sim.iterations,
            retx_enabled: retx,
            rng_seed: derive_seed(root, "engine", &[ivd.to_bits(), rate.to_bits()]),
            comm_range_m: config.scenario.comm_range_m,
            record_iterations: config.sim.record_iterations,
            parallel,
        };
        let tables = TableSet {
            first: first.clone(),
            retx: retx_table,
        };
        let run_result =
            run(deployment, &plan, &budget, &tables, &sim).map_err(|e| fail(e.to_string()))?;
        let point = SweepPoint {
            ivd_m: ivd,
            message_rate_hz: rate,
            speed_kmh: speed,
            retx,
            mcs: plan.applied_mcs,
            overloaded: plan.overloaded(),
            ue_per_bs: plan.ue_per_bs,
            data_volume_mbps: plan.data_volume_mbps_display(),
            prr_max: plan.prr_max,
            runtime_prr: run_result.runtime_prr,
            effective_prr: effective_prr(plan.prr_max, run_result.runtime_prr),
            ci95: ci95_halfwidth(run_result.received, run_result.evaluated),
            mean_sinr_db: run_result.sinr.mean_db().unwrap_or(f64::NAN),
            evaluated: run_result.evaluated,
            received: run_result.received,
        };
        let name = format!(
            "point-ivd{}-rate{}-speed{}-retx{}.csv",
            fmt_grid_value(ivd),
            fmt_grid_value(rate),
            fmt_grid_value(speed),
            u8::from(retx)
        );
        let content = point_file(&point, &run_result, &fingerprint);
        Ok((point, name, content))
    };

    let outcomes: Vec<Result<(SweepPoint, String, String), CellFailure>> = if parallel {
        cells.par_iter().map(eval_cell).collect()
    } else {
        cells.iter().map(eval_cell).collect()
    };

    let mut points = Vec::new();
    let mut point_files = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok((p, name, content)) => {
                points.push(p);
                point_files.push((name, content));
            }
            Err(f) => failures.push(f),
        }
    }
    let result = assemble_sweep(points, fingerprint.clone());

    std::fs::create_dir_all(output_dir).map_err(|source| SweepError::Io {
        path: output_dir.display().to_string(),
        source,
    })?;
    let mut files = Vec::new();
    let csv_path = output_dir.join("sweep.csv");
    write_file(&csv_path, &sweep_csv(&result))?;
    files.push(csv_path);
    point_files.sort_by(|a, b| a.0.cmp(&b.0));
    for (name, content) in &point_files {
        let path = output_dir.join(name);
        write_file(&path, content)?;
        files.push(path);
    }
    files.extend(emit_plot_data(&result, output_dir)?);
    let info_path = output_dir.join("run-info.txt");
    write_file(
        &info_path,
        &run_info(&fingerprint, config, result.points.len(), failures.len()),
    )?;
    files.push(info_path);

    Ok(SweepOutcome {
        result,
        failures,
        files,
    })
}
