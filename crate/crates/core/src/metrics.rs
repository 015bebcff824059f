//! Result folding: confidence intervals, the effective packet reception
//! ratio, and ordered sweep assembly.

/// Half-width of the 95% normal-approximation interval for a binomial
/// proportion: 1.96 * sqrt(p (1 - p) / n) with p = received / evaluated.
/// Zero when nothing was evaluated.
pub fn ci95_halfwidth(received: u64, evaluated: u64) -> f64 {
    if evaluated == 0 {
        return 0.0;
    }
    let p = received as f64 / evaluated as f64;
    1.96 * (p * (1.0 - p) / evaluated as f64).sqrt()
}

/// Overall reception ratio: the scheduler cap times the on-air ratio among
/// served UEs.
pub fn effective_prr(prr_max: f64, runtime_prr: f64) -> f64 {
    prr_max * runtime_prr
}

/// One finished sweep cell, carrying everything a result row reports.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub ivd_m: f64,
    pub message_rate_hz: f64,
    pub speed_kmh: f64,
    pub retx: bool,
    pub mcs: u8,
    pub overloaded: bool,
    pub ue_per_bs: u64,
    /// Display figure in Mbit/s (per-transmission value rounded to 4
    /// decimals, doubled under retransmission).
    pub data_volume_mbps: f64,
    pub prr_max: f64,
    pub runtime_prr: f64,
    pub effective_prr: f64,
    pub ci95: f64,
    pub mean_sinr_db: f64,
    pub evaluated: u64,
    pub received: u64,
}

/// Full sweep, ordered by (retx, message rate, ivd, speed).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// Hex digest of the canonicalized configuration; identical configs
    /// yield identical digests so curves stay traceable to their inputs.
    pub config_fingerprint: String,
}

/// Sorts finished points into the canonical row order and attaches the
/// configuration fingerprint.
pub fn assemble_sweep(mut points: Vec<SweepPoint>, config_fingerprint: String) -> SweepResult {
    points.sort_by(|a, b| {
        a.retx
            .cmp(&b.retx)
            .then(a.message_rate_hz.total_cmp(&b.message_rate_hz))
            .then(a.ivd_m.total_cmp(&b.ivd_m))
            .then(a.speed_kmh.total_cmp(&b.speed_kmh))
    });
    SweepResult {
        points,
        config_fingerprint,
    }
}

/// Grid values print without a trailing `.0` (10 rather than 10.0) and
/// otherwise use the shortest round-trip form (2.5 stays 2.5).
pub fn fmt_grid_value(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(ivd: f64, rate: f64, retx: bool) -> SweepPoint {
        SweepPoint {
            ivd_m: ivd,
            message_rate_hz: rate,
            speed_kmh: 100.0,
            retx,
            mcs: 0,
            overloaded: false,
            ue_per_bs: 1,
            data_volume_mbps: 0.0,
            prr_max: 1.0,
            runtime_prr: 1.0,
            effective_prr: 1.0,
            ci95: 0.0,
            mean_sinr_db: 0.0,
            evaluated: 1,
            received: 1,
        }
    }

    #[test]
    fn ci_matches_the_normal_approximation() {
        assert_eq!(ci95_halfwidth(0, 1000), 0.0);
        assert_eq!(ci95_halfwidth(1000, 1000), 0.0);
        // p = 0.5, n = 10000: 1.96 * sqrt(0.25 / 10000) = 0.0098
        assert!((ci95_halfwidth(5000, 10_000) - 0.0098).abs() < 1e-12);
        assert_eq!(ci95_halfwidth(3, 0), 0.0);
    }

    #[test]
    fn ci_shrinks_with_sample_size() {
        assert!(ci95_halfwidth(500, 1000) > ci95_halfwidth(5000, 10_000));
        assert!(ci95_halfwidth(5000, 10_000) > ci95_halfwidth(50_000, 100_000));
    }

    #[test]
    fn effective_prr_multiplies_the_cap_into_the_runtime_ratio() {
        assert_eq!(effective_prr(1.0, 0.967), 0.967);
        assert!((effective_prr(0.5219, 0.95) - 0.495805).abs() < 1e-9);
        assert_eq!(effective_prr(0.0, 1.0), 0.0);
    }

    #[test]
    fn assembly_orders_by_retx_then_rate_then_ivd() {
        let pts = vec![
            point(50.0, 10.0, true),
            point(10.0, 10.0, false),
            point(10.0, 2.0, true),
            point(3.0, 10.0, false),
        ];
        let r = assemble_sweep(pts, "digest".into());
        let key: Vec<(bool, f64, f64)> = r
            .points
            .iter()
            .map(|p| (p.retx, p.message_rate_hz, p.ivd_m))
            .collect();
        assert_eq!(
            key,
            vec![
                (false, 10.0, 3.0),
                (false, 10.0, 10.0),
                (true, 2.0, 10.0),
                (true, 10.0, 50.0),
            ]
        );
        assert_eq!(r.config_fingerprint, "digest");
    }

    #[test]
    fn grid_values_print_compactly() {
        assert_eq!(fmt_grid_value(10.0), "10");
        assert_eq!(fmt_grid_value(2.5), "2.5");
        assert_eq!(fmt_grid_value(100.0), "100");
        assert_eq!(fmt_grid_value(0.25), "0.25");
    }
}
