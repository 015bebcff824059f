//! Monte Carlo engine: per-iteration transmitter draws, SINR evaluation
//! against every in-range receiver, blind-retransmission combining, and
//! reception decisions, all driven by named substreams of one root seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::channel::{dbm_to_mw, mw_to_dbm, sinr, ChannelError, LinkBudget};
use crate::l2s::{bler_lookup, L2sError, L2sTable};
use crate::scenario::Deployment;
use crate::traffic::LoadPlan;

// Substream ids; each (kind, iteration) pair owns a disjoint ChaCha stream
// so toggling retransmission or recording never shifts another stream.
const STREAM_DROP: u64 = 1;
const STREAM_TX_SELECT: u64 = 2;
const STREAM_RETX_SELECT: u64 = 3;
const STREAM_RECEPTION: u64 = 4;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("retransmission is enabled but no combined-transmission table was given")]
    MissingRetxTable,
    #[error("base station {bs} has no eligible transmitter")]
    NoEligibleTransmitter { bs: u32 },
    #[error("no message was ever evaluated; no transmitter fell inside the evaluation region")]
    NothingEvaluated,
    #[error("invalid simulation parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error(transparent)]
    L2s(#[from] L2sError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Error-rate tables for the two transmission schemes: `first` covers a
/// single transmission, `retx` the combination of first transmission and
/// blind retransmission.
#[derive(Debug, Clone, PartialEq)]
pub struct TableSet {
    pub first: L2sTable,
    pub retx: Option<L2sTable>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub iterations: u64,
    pub retx_enabled: bool,
    pub rng_seed: u64,
    pub comm_range_m: f64,
    /// Keep per-receiver records for every iteration (memory-heavy; meant
    /// for small scenarios and debugging).
    pub record_iterations: bool,
    pub parallel: bool,
}

impl SimConfig {
    pub fn new(iterations: u64, retx_enabled: bool, rng_seed: u64) -> Self {
        Self {
            iterations,
            retx_enabled,
            rng_seed,
            comm_range_m: 400.0,
            record_iterations: false,
            parallel: true,
        }
    }
}

/// Linear-domain average of two SINR values given in dB:
/// 10 log10((10^(a/10) + 10^(b/10)) / 2).
pub fn combine_sinr_db(first_db: f64, second_db: f64) -> f64 {
    mw_to_dbm((dbm_to_mw(first_db) + dbm_to_mw(second_db)) / 2.0)
}

/// Reception test: draw X ~ U[0, 1) and receive iff X >= bler, so the
/// success probability is exactly 1 - bler.
pub fn receive_decision(bler: f64, rng: &mut impl Rng) -> bool {
    rng.gen::<f64>() >= bler
}

/// One scheduled transmitter per base station, drawn uniformly from each
/// station's eligible pool.
pub fn select_transmitters(
    eligible_by_bs: &[Vec<u32>],
    rng: &mut impl Rng,
) -> Result<Vec<u32>, EngineError> {
    eligible_by_bs
        .iter()
        .enumerate()
        .map(|(bs, pool)| {
            if pool.is_empty() {
                return Err(EngineError::NoEligibleTransmitter { bs: bs as u32 });
            }
            Ok(pool[rng.gen_range(0..pool.len())])
        })
        .collect()
}

/// Running summary of effective SINR samples, mergeable across iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrStats {
    pub count: u64,
    pub sum_db: f64,
    pub min_db: f64,
    pub max_db: f64,
    bins: Vec<u64>,
}

impl SinrStats {
    pub const BIN_LO_DB: f64 = -30.0;
    pub const BIN_WIDTH_DB: f64 = 1.0;
    pub const BIN_COUNT: usize = 80;

    pub fn new() -> Self {
        Self {
            count: 0,
            sum_db: 0.0,
            min_db: f64::INFINITY,
            max_db: f64::NEG_INFINITY,
            // two extra slots catch values beyond either edge
            bins: vec![0; Self::BIN_COUNT + 2],
        }
    }

    pub fn add(&mut self, sinr_db: f64) {
        self.count += 1;
        self.sum_db += sinr_db;
        self.min_db = self.min_db.min(sinr_db);
        self.max_db = self.max_db.max(sinr_db);
        let rel = (sinr_db - Self::BIN_LO_DB) / Self::BIN_WIDTH_DB;
        let slot = if rel < 0.0 {
            0
        } else if rel >= Self::BIN_COUNT as f64 {
            Self::BIN_COUNT + 1
        } else {
            rel as usize + 1
        };
        self.bins[slot] += 1;
    }

    /// Associative merge; folding outcomes in iteration order keeps the
    /// floating-point sums identical between parallel and sequential runs.
    pub fn merge(&mut self, other: &SinrStats) {
        self.count += other.count;
        self.sum_db += other.sum_db;
        self.min_db = self.min_db.min(other.min_db);
        self.max_db = self.max_db.max(other.max_db);
        for (a, b) in self.bins.iter_mut().zip(&other.bins) {
            *a += b;
        }
    }

    pub fn mean_db(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum_db / self.count as f64)
    }

    /// (lower dB bound, upper dB bound, count) per occupied slot; edge
    /// slots use infinite bounds.
    pub fn occupied_bins(&self) -> Vec<(f64, f64, u64)> {
        self.bins
            .iter()
            .enumerate()
            .filter(|&(_, &n)| n > 0)
            .map(|(slot, &n)| {
                if slot == 0 {
                    (f64::NEG_INFINITY, Self::BIN_LO_DB, n)
                } else if slot == Self::BIN_COUNT + 1 {
                    (
                        Self::BIN_LO_DB + Self::BIN_COUNT as f64 * Self::BIN_WIDTH_DB,
                        f64::INFINITY,
                        n,
                    )
                } else {
                    let lo = Self::BIN_LO_DB + (slot - 1) as f64 * Self::BIN_WIDTH_DB;
                    (lo, lo + Self::BIN_WIDTH_DB, n)
                }
            })
            .collect()
    }
}

impl Default for SinrStats {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RxRecord {
    pub rx: u32,
    pub sinr_first_db: f64,
    pub sinr_second_db: Option<f64>,
    pub effective_sinr_db: f64,
    pub bler: f64,
    pub received: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TxRecord {
    pub bs: u32,
    pub tx: u32,
    pub rxs: Vec<RxRecord>,
}

/// Per-iteration tally; full per-receiver records are attached only when
/// `record_iterations` is on.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationOutcome {
    pub evaluated: u64,
    pub received: u64,
    pub sinr: SinrStats,
    pub tx_records: Option<Vec<TxRecord>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub evaluated: u64,
    pub received: u64,
    /// Ratio of sums over all iterations: total received / total evaluated.
    pub runtime_prr: f64,
    pub sinr: SinrStats,
    pub per_iteration: Vec<IterationOutcome>,
}

fn substream(seed: u64, kind: u64, index: u64) -> ChaCha8Rng {
    debug_assert!(index < 1 << 56);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((kind << 56) | index);
    rng
}

struct RunContext<'a> {
    deployment: &'a Deployment,
    budget: &'a LinkBudget,
    tables: &'a TableSet,
    sim: &'a SimConfig,
    applied_mcs: u8,
    /// Per base station: vehicle ids granted transmission resources.
    eligible_by_bs: Vec<Vec<u32>>,
    /// Per vehicle id: whether the UE kept its resource grant; dropped UEs
    /// neither transmit nor count as receivers.
    supported: Vec<bool>,
}

/// Draws the resource-denied UEs of an overloaded cell uniformly per run
/// from the drop substream. Without overload every controlled UE is kept.
fn draw_supported(
    deployment: &Deployment,
    plan: &LoadPlan,
    seed: u64,
) -> (Vec<Vec<u32>>, Vec<bool>) {
    let n_bs = deployment.base_stations().len();
    let mut eligible_by_bs = Vec::with_capacity(n_bs);
    let mut supported = vec![false; deployment.vehicles().len()];
    let mut rng = substream(seed, STREAM_DROP, 0);
    for bs in 0..n_bs as u32 {
        let controlled = deployment.controlled_by(bs);
        let keep: Vec<u32> = if !plan.overloaded() || controlled.len() as u64 <= plan.ue_supported {
            controlled.to_vec()
        } else {
            let picked =
                rand::seq::index::sample(&mut rng, controlled.len(), plan.ue_supported as usize);
            let mut ids: Vec<u32> = picked.iter().map(|i| controlled[i]).collect();
            ids.sort_unstable();
            ids
        };
        for &id in &keep {
            supported[id as usize] = true;
        }
        eligible_by_bs.push(keep);
    }
    (eligible_by_bs, supported)
}

fn run_iteration(ctx: &RunContext<'_>, iteration: u64) -> Result<IterationOutcome, EngineError> {
    let seed = ctx.sim.rng_seed;
    let mut tx_rng = substream(seed, STREAM_TX_SELECT, iteration);
    let txs_first = select_transmitters(&ctx.eligible_by_bs, &mut tx_rng)?;
    let txs_second = if ctx.sim.retx_enabled {
        let mut retx_rng = substream(seed, STREAM_RETX_SELECT, iteration);
        Some(select_transmitters(&ctx.eligible_by_bs, &mut retx_rng)?)
    } else {
        None
    };
    let mut rx_rng = substream(seed, STREAM_RECEPTION, iteration);

    let vehicles = ctx.deployment.vehicles();
    let pos = |id: u32| vehicles[id as usize].pos();
    let interferer_positions = |txs: &[u32], own_bs: usize, rx: u32| -> Vec<(f64, f64)> {
        txs.iter()
            .enumerate()
            .filter(|&(bs, &tx)| bs != own_bs && tx != rx)
            .map(|(_, &tx)| pos(tx))
            .collect()
    };

    let mut evaluated = 0u64;
    let mut received = 0u64;
    let mut stats = SinrStats::new();
    let mut records = ctx.sim.record_iterations.then(Vec::new);

    for (bs, &tx) in txs_first.iter().enumerate() {
        if !ctx.deployment.in_eval_region(tx) {
            continue;
        }
        let mut tx_record = records.as_ref().map(|_| TxRecord {
            bs: bs as u32,
            tx,
            rxs: Vec::new(),
        });
        for rx in ctx.deployment.neighbors_within(tx, ctx.sim.comm_range_m) {
            if !ctx.supported[rx as usize] {
                continue;
            }
            let first = sinr(
                pos(tx),
                pos(rx),
                &interferer_positions(&txs_first, bs, rx),
                ctx.budget,
            );
            let (effective_db, second_db, table) = match &txs_second {
                Some(txs2) => {
                    let second = sinr(
                        pos(tx),
                        pos(rx),
                        &interferer_positions(txs2, bs, rx),
                        ctx.budget,
                    );
                    let combined = combine_sinr_db(first.sinr_db, second.sinr_db);
                    let table = ctx.tables.retx.as_ref().expect("checked by run");
                    (combined, Some(second.sinr_db), table)
                }
                None => (first.sinr_db, None, &ctx.tables.first),
            };
            let bler = bler_lookup(table, ctx.applied_mcs, effective_db)?;
            let ok = receive_decision(bler, &mut rx_rng);

            evaluated += 1;
            received += ok as u64;
            stats.add(effective_db);
            if let Some(rec) = tx_record.as_mut() {
                rec.rxs.push(RxRecord {
                    rx,
                    sinr_first_db: first.sinr_db,
                    sinr_second_db: second_db,
                    effective_sinr_db: effective_db,
                    bler,
                    received: ok,
                });
            }
        }
        if let (Some(records), Some(rec)) = (records.as_mut(), tx_record) {
            records.push(rec);
        }
    }

    Ok(IterationOutcome {
        evaluated,
        received,
        sinr: stats,
        tx_records: records,
    })
}

/// Runs the full iteration loop for one deployment and load plan.
///
/// Iterations are independent given their substreams, so they may run
/// concurrently; outcomes are folded back in iteration order, which keeps
/// the result bit-identical to a sequential run with the same seed.
pub fn run(
    deployment: &Deployment,
    plan: &LoadPlan,
    budget: &LinkBudget,
    tables: &TableSet,
    sim: &SimConfig,
) -> Result<RunResult, EngineError> {
    budget.validate()?;
    if sim.iterations == 0 {
        return Err(EngineError::InvalidParameter {
            name: "iterations",
            reason: "must be >= 1".into(),
        });
    }
    if !sim.comm_range_m.is_finite() || sim.comm_range_m <= 0.0 {
        return Err(EngineError::InvalidParameter {
            name: "comm_range_m",
            reason: "must be finite and > 0".into(),
        });
    }
    if sim.retx_enabled && tables.retx.is_none() {
        return Err(EngineError::MissingRetxTable);
    }
    let lookup_table = if sim.retx_enabled {
        tables.retx.as_ref().expect("just checked")
    } else {
        &tables.first
    };
    if lookup_table.curve(plan.applied_mcs).is_none() {
        return Err(L2sError::UnknownMcs {
            mcs: plan.applied_mcs,
        }
        .into());
    }

    let (eligible_by_bs, supported) = draw_supported(deployment, plan, sim.rng_seed);
    let ctx = RunContext {
        deployment,
        budget,
        tables,
        sim,
        applied_mcs: plan.applied_mcs,
        eligible_by_bs,
        supported,
    };

    let outcomes: Result<Vec<IterationOutcome>, EngineError> = if sim.parallel {
        (0..sim.iterations)
            .into_par_iter()
            .map(|i| run_iteration(&ctx, i))
            .collect()
    } else {
        (0..sim.iterations).map(|i| run_iteration(&ctx, i)).collect()
    };
    let outcomes = outcomes?;

    let mut evaluated = 0u64;
    let mut received = 0u64;
    let mut sinr_stats = SinrStats::new();
    for o in &outcomes {
        evaluated += o.evaluated;
        received += o.received;
        sinr_stats.merge(&o.sinr);
    }
    if evaluated == 0 {
        return Err(EngineError::NothingEvaluated);
    }

    Ok(RunResult {
        evaluated,
        received,
        runtime_prr: received as f64 / evaluated as f64,
        sinr: sinr_stats,
        per_iteration: outcomes,
    })
}
