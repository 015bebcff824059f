//! End-to-end acceptance checks, one per release criterion. Each test
//! prints a single `[acceptance] criterion N (...): PASS` or `... FAIL`
//! line (visible with `cargo test --test acceptance -- --nocapture`).

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sidelink_sim::channel::{dbm_to_mw, mw_to_dbm, pathloss_db, sinr, LinkBudget};
use sidelink_sim::engine::{combine_sinr_db, run, SimConfig, TableSet};
use sidelink_sim::l2s::{bler_lookup, constant_table, synth_table};
use sidelink_sim::metrics::SweepPoint;
use sidelink_sim::scenario::{ue_count_highway, BaseStation, Deployment, Vehicle};
use sidelink_sim::sweep::run_sweep;
use sidelink_sim::traffic::{plan_load, LoadPlan, McsTable, TrafficConfig};
use sidelink_sim::RootConfig;

const IVD_GRID: [f64; 8] = [3.0, 5.0, 10.0, 20.0, 40.0, 50.0, 80.0, 100.0];

fn criterion(n: u32, name: &str, body: impl FnOnce() -> Result<(), String>) {
    match body() {
        Ok(()) => println!("[acceptance] criterion {n} ({name}): PASS"),
        Err(msg) => {
            println!("[acceptance] criterion {n} ({name}): FAIL - {msg}");
            panic!("criterion {n} ({name}) failed: {msg}");
        }
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(start: Instant, budget: Duration) -> Result<(), String> {
    let elapsed = start.elapsed();
    ensure(elapsed < budget, || {
        format!("took {elapsed:?}, budget {budget:?}")
    })
}

fn baseline_plans(retx: bool) -> Result<Vec<LoadPlan>, String> {
    let mcs = McsTable::default();
    let traffic = TrafficConfig {
        packet_size_bytes: 256,
        message_rate_hz: 10.0,
    };
    IVD_GRID
        .iter()
        .map(|&ivd| {
            plan_load(&mcs, &traffic, 10.0e6, 1732.0, ivd, 6, retx).map_err(|e| e.to_string())
        })
        .collect()
}

#[test]
fn criterion_1_single_transmission_load_table() {
    criterion(1, "single-transmission load table", || {
        let start = Instant::now();
        let expected_highway: [u64; 8] = [6928, 4156, 2078, 1039, 519, 415, 259, 207];
        let expected_per_bs: [u64; 8] = [3464, 2078, 1039, 519, 259, 207, 129, 103];
        let expected_mbps: [f64; 8] = [
            70.9427, 42.5574, 21.2787, 10.6291, 5.3043, 4.2394, 2.6419, 2.1094,
        ];
        let expected_mcs: [u8; 8] = [20, 20, 14, 7, 4, 3, 1, 0];

        let plans = baseline_plans(false)?;
        for (i, plan) in plans.iter().enumerate() {
            let ivd = IVD_GRID[i];
            let highway = ue_count_highway(3464.0, ivd, 6);
            ensure(highway == expected_highway[i], || {
                format!("ivd {ivd}: highway count {highway} != {}", expected_highway[i])
            })?;
            ensure(plan.ue_per_bs == expected_per_bs[i], || {
                format!("ivd {ivd}: per-BS count {} != {}", plan.ue_per_bs, expected_per_bs[i])
            })?;
            let mbps = plan.data_volume_mbps_display();
            ensure((mbps - expected_mbps[i]).abs() < 1e-9, || {
                format!("ivd {ivd}: volume {mbps} != {}", expected_mbps[i])
            })?;
            ensure(plan.applied_mcs == expected_mcs[i], || {
                format!("ivd {ivd}: mcs {} != {}", plan.applied_mcs, expected_mcs[i])
            })?;
        }
        within_budget(start, Duration::from_secs(1))
    });
}

#[test]
fn criterion_2_retransmission_load_table() {
    criterion(2, "retransmission load table", || {
        let start = Instant::now();
        let expected_mbps: [f64; 8] = [
            141.8854, 85.1148, 42.5574, 21.2582, 10.6086, 8.4788, 5.2838, 4.2188,
        ];
        let expected_mcs: [u8; 8] = [20, 20, 20, 14, 7, 6, 4, 3];

        let plans = baseline_plans(true)?;
        for (i, plan) in plans.iter().enumerate() {
            let ivd = IVD_GRID[i];
            let mbps = plan.data_volume_mbps_display();
            ensure((mbps - expected_mbps[i]).abs() < 1e-9, || {
                format!("ivd {ivd}: volume {mbps} != {}", expected_mbps[i])
            })?;
            ensure(plan.applied_mcs == expected_mcs[i], || {
                format!("ivd {ivd}: mcs {} != {}", plan.applied_mcs, expected_mcs[i])
            })?;
        }
        within_budget(start, Duration::from_secs(1))
    });
}

#[test]
fn criterion_3_overload_thresholds() {
    criterion(3, "overload thresholds", || {
        // without retransmission only spacings below 10 m overload; the
        // doubled volume moves the threshold to spacings below 20 m
        for (retx, boundary) in [(false, 10.0), (true, 20.0)] {
            for (i, plan) in baseline_plans(retx)?.iter().enumerate() {
                let ivd = IVD_GRID[i];
                let expect = ivd < boundary;
                ensure(plan.overloaded() == expect, || {
                    format!(
                        "retx {retx}, ivd {ivd}: overloaded {} expected {expect}",
                        plan.overloaded()
                    )
                })?;
                ensure(plan.overloaded() == plan.selected_mcs.is_none(), || {
                    format!("retx {retx}, ivd {ivd}: overload flag out of step with selection")
                })?;
                ensure((plan.prr_max < 1.0) == expect, || {
                    format!("retx {retx}, ivd {ivd}: prr_max {} out of step", plan.prr_max)
                })?;
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_4_micro_scenario_prr_oracle() {
    criterion(4, "micro-scenario reception oracle", || {
        let start = Instant::now();
        // Two stations at x 866 and 2598 bound the evaluation region
        // [866, 2598]. Four vehicles, one in-range pair per cell:
        //   u0 (700, 0)  outside the region, controlled by station 0
        //   u1 (1000, 0) inside,              controlled by station 0
        //   u2 (2400, 4) inside,              controlled by station 1
        //   u3 (2700, 4) outside,             controlled by station 1
        // u0-u1 and u2-u3 are 300 m apart; cross-cell distances exceed
        // the 400 m range. Each station draws its transmitter uniformly
        // from its two vehicles, so the four equally likely pairs
        // (u0,u2), (u0,u3), (u1,u2), (u1,u3) evaluate 1, 0, 2, and 1
        // receivers: transmitters outside the region are skipped, and
        // each in-region transmitter reaches exactly its one neighbour.
        // With a flat block error rate of 0.3 every evaluated receiver
        // decodes with probability 0.7 independently, so the expected
        // reception ratio is exactly 0.7 and the expected number of
        // evaluated receivers per iteration is (1 + 0 + 2 + 1) / 4 = 1.
        let stations = vec![
            BaseStation { id: 0, x_m: 866.0, y_m: -47.0 },
            BaseStation { id: 1, x_m: 2598.0, y_m: -47.0 },
        ];
        let mk = |id: u32, x: f64, y: f64| Vehicle {
            id,
            lane: 0,
            x_m: x,
            y_m: y,
            controlling_bs: 0,
        };
        let vehicles = vec![
            mk(0, 700.0, 0.0),
            mk(1, 1000.0, 0.0),
            mk(2, 2400.0, 4.0),
            mk(3, 2700.0, 4.0),
        ];
        let deployment = Deployment::new(vehicles, stations).map_err(|e| e.to_string())?;

        let mcs = McsTable::default();
        let traffic = TrafficConfig {
            packet_size_bytes: 256,
            message_rate_hz: 10.0,
        };
        // an uncongested plan: every vehicle keeps its resource grant
        let plan = plan_load(&mcs, &traffic, 10.0e6, 1732.0, 50.0, 6, false)
            .map_err(|e| e.to_string())?;
        let tables = TableSet {
            first: constant_table(&mcs, 0.3, "flat"),
            retx: None,
        };
        let iterations = 100_000;
        let sim = SimConfig::new(iterations, false, 42);
        let result = run(&deployment, &plan, &LinkBudget::default(), &tables, &sim)
            .map_err(|e| e.to_string())?;

        ensure((result.runtime_prr - 0.7).abs() <= 0.005, || {
            format!("runtime ratio {} not within 0.005 of 0.7", result.runtime_prr)
        })?;
        let per_iter = result.evaluated as f64 / iterations as f64;
        ensure((0.99..=1.01).contains(&per_iter), || {
            format!("evaluated per iteration {per_iter} not within 1% of 1")
        })?;
        within_budget(start, Duration::from_secs(10))
    });
}

#[test]
fn criterion_5_sinr_combining_formula() {
    criterion(5, "combined-transmission formula", || {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let a: f64 = rng.gen_range(-30.0..40.0);
            let b: f64 = rng.gen_range(-30.0..40.0);
            let expect = 10.0 * ((10f64.powf(a / 10.0) + 10f64.powf(b / 10.0)) / 2.0).log10();
            let got = combine_sinr_db(a, b);
            ensure((got - expect).abs() <= 1e-9, || {
                format!("combine({a}, {b}) = {got}, expected {expect}")
            })?;
        }
        Ok(())
    });
}

fn curve(points: &[SweepPoint], retx: bool) -> Vec<&SweepPoint> {
    let mut c: Vec<&SweepPoint> = points.iter().filter(|p| p.retx == retx).collect();
    c.sort_by(|a, b| a.ivd_m.total_cmp(&b.ivd_m));
    c
}

#[test]
fn criterion_6_sweep_trends() {
    criterion(6, "sweep trends", || {
        let start = Instant::now();
        let config = RootConfig::default();
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let outcome = run_sweep(&config, dir.path(), true).map_err(|e| e.to_string())?;
        ensure(outcome.failures.is_empty(), || {
            format!("{} cells failed", outcome.failures.len())
        })?;
        let points = &outcome.result.points;
        ensure(points.len() == 16, || format!("{} points, expected 16", points.len()))?;
        let single = curve(points, false);
        let combined = curve(points, true);

        // (a) without retransmission the effective ratio keeps rising
        // with spacing from 10 m up, within twice the interval widths
        for w in single[2..].windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let slack = 2.0 * (lo.ci95 + hi.ci95);
            ensure(hi.effective_prr >= lo.effective_prr - slack, || {
                format!(
                    "effective ratio fell from {} at ivd {} to {} at ivd {}",
                    lo.effective_prr, lo.ivd_m, hi.effective_prr, hi.ivd_m
                )
            })?;
        }

        for (s, c) in single.iter().zip(&combined) {
            ensure(s.ivd_m == c.ivd_m, || "curves misaligned".into())?;
            if s.ivd_m >= 40.0 {
                // (b) at wide spacings the retransmission gain wins
                ensure(c.effective_prr > s.effective_prr, || {
                    format!(
                        "ivd {}: retransmission {} not above single {}",
                        s.ivd_m, c.effective_prr, s.effective_prr
                    )
                })?;
            }
            if s.ivd_m < 20.0 {
                // (c) at tight spacings the doubled load overloads the
                // cell and drags the effective ratio below single-shot
                ensure(c.effective_prr < s.effective_prr, || {
                    format!(
                        "ivd {}: retransmission {} not below single {}",
                        s.ivd_m, c.effective_prr, s.effective_prr
                    )
                })?;
            }
        }
        within_budget(start, Duration::from_secs(60))
    });
}

#[test]
fn criterion_7_determinism() {
    criterion(7, "determinism", || {
        let mut config = RootConfig::default();
        config.sim.iterations = 250;
        let mut csvs: Vec<Vec<u8>> = Vec::new();
        for parallel in [true, true, false] {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            run_sweep(&config, dir.path(), parallel).map_err(|e| e.to_string())?;
            csvs.push(std::fs::read(dir.path().join("sweep.csv")).map_err(|e| e.to_string())?);
        }
        ensure(csvs[0] == csvs[1], || "two identical runs differ".into())?;
        ensure(csvs[0] == csvs[2], || "parallel and sequential runs differ".into())?;
        Ok(())
    });
}

#[test]
fn criterion_8_model_properties() {
    criterion(8, "model properties", || {
        let cases = 1000;

        // pathloss never decreases with distance
        let mut rng = ChaCha8Rng::seed_from_u64(81);
        for _ in 0..cases {
            let f = rng.gen_range(2.0e9..6.0e9);
            let h = rng.gen_range(1.2..10.0);
            let d1 = rng.gen_range(0.5..5000.0);
            let d2 = rng.gen_range(0.5..5000.0);
            let (near, far) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            let (pl_near, pl_far) = (pathloss_db(near, f, h, h), pathloss_db(far, f, h, h));
            ensure(pl_far >= pl_near - 1e-9, || {
                format!("pathloss fell from {pl_near} at {near} m to {pl_far} at {far} m")
            })?;
        }

        // error rate never rises with SINR on any generated curve
        let table = synth_table(&McsTable::default(), 3.0, 0.0, 2.0, "t", "EVA", 100.0);
        let mut rng = ChaCha8Rng::seed_from_u64(82);
        for _ in 0..cases {
            let mcs = rng.gen_range(0..21u8);
            let s1 = rng.gen_range(-40.0..40.0);
            let s2 = rng.gen_range(-40.0..40.0);
            let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
            let (b_lo, b_hi) = (
                bler_lookup(&table, mcs, lo).map_err(|e| e.to_string())?,
                bler_lookup(&table, mcs, hi).map_err(|e| e.to_string())?,
            );
            ensure(b_hi <= b_lo + 1e-12, || {
                format!("mcs {mcs}: error rate rose from {b_lo} at {lo} dB to {b_hi} at {hi} dB")
            })?;
        }

        // adding an interferer never raises the SINR
        let budget = LinkBudget::default();
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        for _ in 0..cases {
            fn point(rng: &mut ChaCha8Rng) -> (f64, f64) {
                (rng.gen_range(0.0..3000.0), rng.gen_range(-12.0..12.0))
            }
            let tx = point(&mut rng);
            let mut rx = point(&mut rng);
            while rx == tx {
                rx = point(&mut rng);
            }
            let n_base = rng.gen_range(0..4usize);
            let base: Vec<(f64, f64)> = (0..n_base).map(|_| point(&mut rng)).collect();
            let mut extended = base.clone();
            extended.push(point(&mut rng));
            let with = sinr(tx, rx, &extended, &budget).sinr_db;
            let without = sinr(tx, rx, &base, &budget).sinr_db;
            ensure(with <= without + 1e-12, || {
                format!("SINR rose from {without} to {with} after adding an interferer")
            })?;
        }

        // dBm <-> mW round trips
        let mut rng = ChaCha8Rng::seed_from_u64(84);
        for _ in 0..cases {
            let dbm = rng.gen_range(-200.0..100.0);
            let back = mw_to_dbm(dbm_to_mw(dbm));
            ensure((back - dbm).abs() <= 1e-9, || {
                format!("dBm round trip {dbm} -> {back}")
            })?;
            let mw = 10f64.powf(rng.gen_range(-20.0..10.0));
            let back = dbm_to_mw(mw_to_dbm(mw));
            ensure((back - mw).abs() <= 1e-9 * mw, || {
                format!("mW round trip {mw} -> {back}")
            })?;
        }

        // the reception ratio is the ratio of sums, invariant to how the
        // per-iteration tallies are grouped or ordered
        let mut rng = ChaCha8Rng::seed_from_u64(85);
        for _ in 0..cases {
            let len = rng.gen_range(1..50usize);
            let tallies: Vec<(u64, u64)> = (0..len)
                .map(|_| {
                    let evaluated = rng.gen_range(0..100u64);
                    let received = if evaluated == 0 {
                        0
                    } else {
                        rng.gen_range(0..=evaluated)
                    };
                    (evaluated, received)
                })
                .collect();
            let total_e: u64 = tallies.iter().map(|t| t.0).sum();
            if total_e == 0 {
                continue;
            }
            let total_r: u64 = tallies.iter().map(|t| t.1).sum();
            let forward = total_r as f64 / total_e as f64;
            let (mut re, mut rr) = (0u64, 0u64);
            for &(e, r) in tallies.iter().rev() {
                re += e;
                rr += r;
            }
            ensure(rr as f64 / re as f64 == forward, || {
                "ratio of sums changed under reordering".into()
            })?;
        }

        // and the engine reports exactly that ratio over its iterations
        let stations = vec![
            BaseStation { id: 0, x_m: 866.0, y_m: -47.0 },
            BaseStation { id: 1, x_m: 2598.0, y_m: -47.0 },
        ];
        let mk = |id: u32, x: f64| Vehicle {
            id,
            lane: 0,
            x_m: x,
            y_m: 0.0,
            controlling_bs: 0,
        };
        let vehicles = vec![mk(0, 1000.0), mk(1, 1200.0), mk(2, 2400.0), mk(3, 2500.0)];
        let deployment = Deployment::new(vehicles, stations).map_err(|e| e.to_string())?;
        let mcs = McsTable::default();
        let traffic = TrafficConfig {
            packet_size_bytes: 256,
            message_rate_hz: 10.0,
        };
        let plan =
            plan_load(&mcs, &traffic, 10.0e6, 1732.0, 50.0, 6, false).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(86);
        for _ in 0..20 {
            let tables = TableSet {
                first: constant_table(&mcs, rng.gen_range(0.05..0.95), "flat"),
                retx: None,
            };
            let sim = SimConfig::new(rng.gen_range(10..200), false, rng.gen());
            let result = run(&deployment, &plan, &LinkBudget::default(), &tables, &sim)
                .map_err(|e| e.to_string())?;
            let (sum_e, sum_r) = result
                .per_iteration
                .iter()
                .fold((0u64, 0u64), |(e, r), o| (e + o.evaluated, r + o.received));
            ensure(sum_e == result.evaluated && sum_r == result.received, || {
                "iteration tallies do not sum to the run totals".into()
            })?;
            ensure(result.runtime_prr == sum_r as f64 / sum_e as f64, || {
                "reported ratio is not the ratio of summed tallies".into()
            })?;
        }
        Ok(())
    });
}
