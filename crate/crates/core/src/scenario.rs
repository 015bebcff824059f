//! Highway layout: lanes, vehicle placement, base stations, and the
//! evaluation region between the outermost base stations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Lateral distance from the nearest highway edge to a base station, in m.
pub const BS_LATERAL_OFFSET_M: f64 = 35.0;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("deployment produced zero vehicles")]
    ZeroVehicles,
    #[error("vehicle ids must equal their index (vehicle {index} has id {id})")]
    BadVehicleId { index: usize, id: u32 },
}

/// Static description of the highway segment under study.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub highway_length_m: f64,
    pub lane_count: u32,
    pub lane_width_m: f64,
    /// Target inter-vehicle distance along each lane, in m.
    pub ivd_m: f64,
    /// Inter-site distance between neighbouring base stations, in m.
    pub isd_m: f64,
    pub bs_count: u32,
    pub comm_range_m: f64,
    /// Seed for the per-lane placement offsets.
    pub rng_seed: u64,
    /// When false every lane starts at x = 0 (deterministic grid placement).
    pub random_lane_offsets: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            highway_length_m: 3464.0,
            lane_count: 6,
            lane_width_m: 4.0,
            ivd_m: 10.0,
            isd_m: 1732.0,
            bs_count: 2,
            comm_range_m: 400.0,
            rng_seed: 1,
            random_lane_offsets: true,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let positive = [
            ("highway_length_m", self.highway_length_m),
            ("lane_width_m", self.lane_width_m),
            ("ivd_m", self.ivd_m),
            ("isd_m", self.isd_m),
            ("comm_range_m", self.comm_range_m),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(ScenarioError::InvalidParameter {
                    name,
                    reason: format!("must be finite and > 0, got {value}"),
                });
            }
        }
        if self.lane_count == 0 {
            return Err(ScenarioError::InvalidParameter {
                name: "lane_count",
                reason: "must be >= 1".into(),
            });
        }
        if self.bs_count == 0 {
            return Err(ScenarioError::InvalidParameter {
                name: "bs_count",
                reason: "must be >= 1".into(),
            });
        }
        let span = self.isd_m * (self.bs_count.saturating_sub(1)) as f64;
        if span > self.highway_length_m {
            return Err(ScenarioError::InvalidParameter {
                name: "isd_m",
                reason: format!(
                    "base station span {span} m exceeds highway length {} m",
                    self.highway_length_m
                ),
            });
        }
        Ok(())
    }
}

/// One vehicle UE. `id` equals its index in the deployment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vehicle {
    pub id: u32,
    pub lane: u32,
    pub x_m: f64,
    pub y_m: f64,
    /// Index of the nearest base station; assigned by [`Deployment::new`].
    pub controlling_bs: u32,
}

impl Vehicle {
    pub fn pos(&self) -> (f64, f64) {
        (self.x_m, self.y_m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseStation {
    pub id: u32,
    pub x_m: f64,
    pub y_m: f64,
}

/// Immutable snapshot of vehicles and base stations plus derived lookup
/// structures for control assignment and range queries.
#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    vehicles: Vec<Vehicle>,
    base_stations: Vec<BaseStation>,
    eval_region: (f64, f64),
    by_bs: Vec<Vec<u32>>,
    x_order: Vec<u32>,
}

impl Deployment {
    /// Builds a deployment from raw vehicles and base stations.
    ///
    /// Controlling base stations are (re)assigned here: each vehicle is
    /// attached to its nearest base station, ties resolved towards the lower
    /// station id. The evaluation region is the x interval spanned by the
    /// outermost base stations.
    pub fn new(
        mut vehicles: Vec<Vehicle>,
        base_stations: Vec<BaseStation>,
    ) -> Result<Self, ScenarioError> {
        if vehicles.is_empty() {
            return Err(ScenarioError::ZeroVehicles);
        }
        if base_stations.is_empty() {
            return Err(ScenarioError::InvalidParameter {
                name: "bs_count",
                reason: "at least one base station is required".into(),
            });
        }
        for (index, v) in vehicles.iter().enumerate() {
            if v.id as usize != index {
                return Err(ScenarioError::BadVehicleId { index, id: v.id });
            }
        }

        let mut by_bs = vec![Vec::new(); base_stations.len()];
        for v in vehicles.iter_mut() {
            v.controlling_bs = nearest_bs(v.x_m, v.y_m, &base_stations);
            by_bs[v.controlling_bs as usize].push(v.id);
        }

        let lo = base_stations.iter().map(|b| b.x_m).fold(f64::INFINITY, f64::min);
        let hi = base_stations.iter().map(|b| b.x_m).fold(f64::NEG_INFINITY, f64::max);

        let mut x_order: Vec<u32> = (0..vehicles.len() as u32).collect();
        x_order.sort_by(|&a, &b| {
            let (va, vb) = (&vehicles[a as usize], &vehicles[b as usize]);
            va.x_m.total_cmp(&vb.x_m).then(a.cmp(&b))
        });

        Ok(Self {
            vehicles,
            base_stations,
            eval_region: (lo, hi),
            by_bs,
            x_order,
        })
    }

    pub fn vehicles(&self) -> &[Vehicle] {
        &self.vehicles
    }

    pub fn base_stations(&self) -> &[BaseStation] {
        &self.base_stations
    }

    /// x interval between the outermost base stations, inclusive.
    pub fn eval_region(&self) -> (f64, f64) {
        self.eval_region
    }

    pub fn controlled_by(&self, bs: u32) -> &[u32] {
        &self.by_bs[bs as usize]
    }

    pub fn in_eval_region(&self, vehicle: u32) -> bool {
        let x = self.vehicles[vehicle as usize].x_m;
        x >= self.eval_region.0 && x <= self.eval_region.1
    }

    /// Ids of all vehicles within `range_m` of `vehicle` (excluding itself),
    /// ordered by (x, id). Order is deterministic so downstream random draws
    /// consume their streams identically across runs.
    pub fn neighbors_within(&self, vehicle: u32, range_m: f64) -> Vec<u32> {
        let center = &self.vehicles[vehicle as usize];
        let lo_x = center.x_m - range_m;
        let hi_x = center.x_m + range_m;
        let start = self
            .x_order
            .partition_point(|&id| self.vehicles[id as usize].x_m < lo_x);
        let mut out = Vec::new();
        for &id in &self.x_order[start..] {
            let v = &self.vehicles[id as usize];
            if v.x_m > hi_x {
                break;
            }
            if id != vehicle && in_comm_range(center.pos(), v.pos(), range_m) {
                out.push(id);
            }
        }
        out
    }
}

/// True when two positions are within `range_m` of each other (inclusive).
pub fn in_comm_range(a: (f64, f64), b: (f64, f64), range_m: f64) -> bool {
    distance(a, b) <= range_m
}

pub fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (a.0 - b.0, a.1 - b.1);
    (dx * dx + dy * dy).sqrt()
}

/// Index of the base station nearest to (x, y); ties go to the lower id.
pub fn nearest_bs(x: f64, y: f64, base_stations: &[BaseStation]) -> u32 {
    let mut best = 0u32;
    let mut best_d = f64::INFINITY;
    for bs in base_stations {
        let d = distance((x, y), (bs.x_m, bs.y_m));
        if d < best_d {
            best_d = d;
            best = bs.id;
        }
    }
    best
}

/// Planner-level vehicle count for the whole highway:
/// floor(length / ivd * lanes), floored once over the full product.
pub fn ue_count_highway(highway_length_m: f64, ivd_m: f64, lane_count: u32) -> u64 {
    ((highway_length_m * lane_count as f64) / ivd_m).floor() as u64
}

/// Places vehicles lane by lane and base stations centred on the highway.
///
/// Each lane `l` draws an offset in [0, ivd) (zero when
/// `random_lane_offsets` is off) and holds vehicles at
/// `x = offset + k * ivd` for k = 0, 1, ... while x <= highway length.
/// Lanes are centred across the median; base stations sit
/// [`BS_LATERAL_OFFSET_M`] beyond the nearer edge, spaced `isd_m` apart and
/// centred along the highway.
pub fn deploy(cfg: &ScenarioConfig) -> Result<Deployment, ScenarioError> {
    cfg.validate()?;

    let half_width = cfg.lane_count as f64 * cfg.lane_width_m / 2.0;
    let bs_y = -(half_width + BS_LATERAL_OFFSET_M);
    let center = cfg.highway_length_m / 2.0;
    let base_stations: Vec<BaseStation> = (0..cfg.bs_count)
        .map(|j| BaseStation {
            id: j,
            x_m: center + (j as f64 - (cfg.bs_count - 1) as f64 / 2.0) * cfg.isd_m,
            y_m: bs_y,
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut vehicles = Vec::new();
    for lane in 0..cfg.lane_count {
        let lane_y = (lane as f64 - (cfg.lane_count - 1) as f64 / 2.0) * cfg.lane_width_m;
        let offset = if cfg.random_lane_offsets {
            rng.gen::<f64>() * cfg.ivd_m
        } else {
            0.0
        };
        let mut k = 0u64;
        loop {
            let x = offset + k as f64 * cfg.ivd_m;
            if x > cfg.highway_length_m {
                break;
            }
            vehicles.push(Vehicle {
                id: vehicles.len() as u32,
                lane,
                x_m: x,
                y_m: lane_y,
                controlling_bs: 0,
            });
            k += 1;
        }
    }

    Deployment::new(vehicles, base_stations)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(ivd: f64) -> ScenarioConfig {
        ScenarioConfig {
            ivd_m: ivd,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn highway_counts_match_planner_formula() {
        assert_eq!(ue_count_highway(3464.0, 3.0, 6), 6928);
        assert_eq!(ue_count_highway(3464.0, 5.0, 6), 4156);
        assert_eq!(ue_count_highway(3464.0, 10.0, 6), 2078);
        assert_eq!(ue_count_highway(3464.0, 20.0, 6), 1039);
        assert_eq!(ue_count_highway(3464.0, 40.0, 6), 519);
        assert_eq!(ue_count_highway(3464.0, 50.0, 6), 415);
        assert_eq!(ue_count_highway(3464.0, 80.0, 6), 259);
        assert_eq!(ue_count_highway(3464.0, 100.0, 6), 207);
        assert_eq!(ue_count_highway(3464.0, 3464.0, 6), 6);
    }

    #[test]
    fn zero_offset_single_lane_includes_both_endpoints() {
        let c = ScenarioConfig {
            lane_count: 1,
            ivd_m: 3464.0,
            isd_m: 1732.0,
            random_lane_offsets: false,
            ..ScenarioConfig::default()
        };
        let d = deploy(&c).unwrap();
        assert_eq!(d.vehicles().len(), 2);
        assert_eq!(d.vehicles()[0].x_m, 0.0);
        assert_eq!(d.vehicles()[1].x_m, 3464.0);
    }

    #[test]
    fn per_lane_counts_stay_within_one_of_the_grid_count() {
        // floor(3464/3) = 1154, so each lane holds 1154 or 1155 vehicles and
        // the highway total stays near the planner figure of 6928.
        for seed in 0..20 {
            let c = ScenarioConfig {
                rng_seed: seed,
                ..cfg(3.0)
            };
            let d = deploy(&c).unwrap();
            for lane in 0..6 {
                let n = d.vehicles().iter().filter(|v| v.lane == lane).count();
                assert!(n == 1154 || n == 1155, "lane {lane} holds {n}");
            }
            let total = d.vehicles().len() as i64;
            assert!((total - 6928).abs() <= 6, "total {total}");
        }
    }

    #[test]
    fn random_offset_totals_average_to_the_planner_count() {
        let mut sum = 0f64;
        let runs = 200;
        for seed in 0..runs {
            let c = ScenarioConfig {
                rng_seed: seed,
                ..cfg(50.0)
            };
            sum += deploy(&c).unwrap().vehicles().len() as f64;
        }
        let mean = sum / runs as f64;
        // planner figure: floor(3464/50 * 6) = 415 (expectation 415.68)
        assert!((mean - 415.68).abs() < 2.0, "mean {mean}");
    }

    #[test]
    fn base_stations_are_centered_and_offset_from_the_edge() {
        let d = deploy(&cfg(10.0)).unwrap();
        let bs = d.base_stations();
        assert_eq!(bs.len(), 2);
        assert_eq!(bs[0].x_m, 866.0);
        assert_eq!(bs[1].x_m, 2598.0);
        // 6 lanes of 4 m: edge at y = -12, station 35 m beyond it
        assert_eq!(bs[0].y_m, -47.0);
        assert_eq!(d.eval_region(), (866.0, 2598.0));

        let wide = ScenarioConfig {
            highway_length_m: 6928.0,
            bs_count: 4,
            ..cfg(10.0)
        };
        let d4 = deploy(&wide).unwrap();
        let xs: Vec<f64> = d4.base_stations().iter().map(|b| b.x_m).collect();
        assert_eq!(xs, vec![866.0, 2598.0, 4330.0, 6062.0]);
    }

    #[test]
    fn lanes_are_centered_across_the_median() {
        let d = deploy(&ScenarioConfig {
            random_lane_offsets: false,
            ..cfg(1732.0)
        })
        .unwrap();
        let mut ys: Vec<f64> = d.vehicles().iter().map(|v| v.y_m).collect();
        ys.sort_by(f64::total_cmp);
        ys.dedup();
        assert_eq!(ys, vec![-10.0, -6.0, -2.0, 2.0, 6.0, 10.0]);
    }

    #[test]
    fn controlling_bs_is_the_nearest_with_ties_to_lower_id() {
        let bs = vec![
            BaseStation { id: 0, x_m: 866.0, y_m: -47.0 },
            BaseStation { id: 1, x_m: 2598.0, y_m: -47.0 },
        ];
        assert_eq!(nearest_bs(0.0, 0.0, &bs), 0);
        assert_eq!(nearest_bs(2000.0, 0.0, &bs), 1);
        // exact midpoint: equidistant, lower id wins
        assert_eq!(nearest_bs(1732.0, 0.0, &bs), 0);

        let d = deploy(&cfg(10.0)).unwrap();
        for v in d.vehicles() {
            let me = distance(v.pos(), (bs[v.controlling_bs as usize].x_m, -47.0));
            for other in d.base_stations() {
                let dist = distance(v.pos(), (other.x_m, other.y_m));
                assert!(me <= dist + 1e-12);
            }
        }
    }

    #[test]
    fn deploy_is_deterministic_per_seed() {
        let a = deploy(&cfg(10.0)).unwrap();
        let b = deploy(&cfg(10.0)).unwrap();
        assert_eq!(a, b);
        let c = deploy(&ScenarioConfig {
            rng_seed: 2,
            ..cfg(10.0)
        })
        .unwrap();
        assert_ne!(a.vehicles()[0].x_m, c.vehicles()[0].x_m);
    }

    #[test]
    fn comm_range_is_inclusive_and_uses_euclidean_distance() {
        assert!(in_comm_range((0.0, 0.0), (400.0, 0.0), 400.0));
        assert!(!in_comm_range((0.0, 0.0), (400.1, 0.0), 400.0));
        // lateral offset counts: sqrt(300^2 + 20^2) = 300.67 m
        assert!(in_comm_range((0.0, 0.0), (300.0, 20.0), 400.0));
        assert!(!in_comm_range((0.0, 0.0), (399.9, 20.0), 400.0));
    }

    #[test]
    fn neighbor_query_matches_brute_force() {
        let d = deploy(&cfg(40.0)).unwrap();
        for probe in [0u32, 100, 250, 518] {
            let fast = d.neighbors_within(probe, 400.0);
            let probe_v = &d.vehicles()[probe as usize];
            let mut slow: Vec<u32> = d
                .vehicles()
                .iter()
                .filter(|v| v.id != probe && in_comm_range(probe_v.pos(), v.pos(), 400.0))
                .map(|v| v.id)
                .collect();
            slow.sort_by(|&a, &b| {
                let (va, vb) = (&d.vehicles()[a as usize], &d.vehicles()[b as usize]);
                va.x_m.total_cmp(&vb.x_m).then(a.cmp(&b))
            });
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn invalid_parameters_are_rejected_by_name() {
        let bad = ScenarioConfig {
            ivd_m: 0.0,
            ..ScenarioConfig::default()
        };
        let err = deploy(&bad).unwrap_err().to_string();
        assert!(err.contains("ivd_m"), "{err}");

        let bad = ScenarioConfig {
            lane_count: 0,
            ..ScenarioConfig::default()
        };
        assert!(deploy(&bad).unwrap_err().to_string().contains("lane_count"));
    }
}
