//! Radio propagation: urban-street LOS two-slope pathloss, thermal noise,
//! and SINR assembly from transmitter, receiver, and interferer geometry.

use thiserror::Error;

pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;

/// Distances below this are clamped before the pathloss evaluation; the
/// model is not defined for near-zero separation.
pub const MIN_PATHLOSS_DISTANCE_M: f64 = 3.0;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("invalid link budget parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

/// Transmit and receiver-side RF assumptions shared by every link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudget {
    pub eirp_dbm: f64,
    pub carrier_freq_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    pub antenna_height_m: f64,
}

impl Default for LinkBudget {
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

impl LinkBudget {
    pub fn validate(&self) -> Result<(), ChannelError> {
        if !self.carrier_freq_hz.is_finite() || self.carrier_freq_hz <= 0.0 {
            return Err(ChannelError::InvalidParameter {
                name: "carrier_freq_hz",
                reason: "must be finite and > 0".into(),
            });
        }
        if !self.bandwidth_hz.is_finite() || self.bandwidth_hz <= 0.0 {
            return Err(ChannelError::InvalidParameter {
                name: "bandwidth_hz",
                reason: "must be finite and > 0".into(),
            });
        }
        // effective antenna height is h - 1 m; the far branch needs it > 0
        if !self.antenna_height_m.is_finite() || self.antenna_height_m <= 1.0 {
            return Err(ChannelError::InvalidParameter {
                name: "antenna_height_m",
                reason: "must be > 1.0 m".into(),
            });
        }
        if !self.eirp_dbm.is_finite() || !self.noise_figure_db.is_finite() {
            return Err(ChannelError::InvalidParameter {
                name: "eirp_dbm",
                reason: "eirp_dbm and noise_figure_db must be finite".into(),
            });
        }
        Ok(())
    }

    pub fn noise_mw(&self) -> f64 {
        noise_power_mw(self.bandwidth_hz, self.noise_figure_db)
    }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Breakpoint distance of the two-slope model:
/// 4 * h'_tx * h'_rx * f / c with effective heights h' = h - 1 m.
pub fn breakpoint_distance_m(freq_hz: f64, h_tx_m: f64, h_rx_m: f64) -> f64 {
    4.0 * (h_tx_m - 1.0) * (h_rx_m - 1.0) * freq_hz / SPEED_OF_LIGHT_M_S
}

/// Urban-street LOS pathloss in dB at distance `distance_m`.
///
/// Below the breakpoint:
///   PL = 22.7 log10(d) + 41.0 + 20 log10(f_GHz / 5)
/// beyond it:
///   PL = 40 log10(d) + 9.45 - 17.3 log10(h'_tx) - 17.3 log10(h'_rx)
///        + 2.7 log10(f_GHz / 5)
/// with effective antenna heights h' = h - 1 m. Distances below
/// [`MIN_PATHLOSS_DISTANCE_M`] clamp to that minimum. The two branches agree
/// at the breakpoint to within a few hundredths of a dB, so the curve is
/// continuous and monotone in distance.
pub fn pathloss_db(distance_m: f64, freq_hz: f64, h_tx_m: f64, h_rx_m: f64) -> f64 {
    let d = distance_m.max(MIN_PATHLOSS_DISTANCE_M);
    let f_ghz = freq_hz / 1e9;
    let freq_term = (f_ghz / 5.0).log10();
    let d_bp = breakpoint_distance_m(freq_hz, h_tx_m, h_rx_m);
    if d <= d_bp {
        22.7 * d.log10() + 41.0 + 20.0 * freq_term
    } else {
        let hp_tx = h_tx_m - 1.0;
        let hp_rx = h_rx_m - 1.0;
        40.0 * d.log10() + 9.45 - 17.3 * hp_tx.log10() - 17.3 * hp_rx.log10() + 2.7 * freq_term
    }
}

/// Thermal noise power over `bandwidth_hz` with the given noise figure,
/// in mW: -174 dBm/Hz + 10 log10(BW) + NF.
pub fn noise_power_mw(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    dbm_to_mw(-174.0 + 10.0 * bandwidth_hz.log10() + noise_figure_db)
}

/// One link's power bookkeeping. Interference and noise are kept in mW so
/// further interferers add linearly; the SINR itself is reported in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrSample {
    pub signal_dbm: f64,
    pub interference_mw: f64,
    pub noise_mw: f64,
    pub sinr_db: f64,
}

/// SINR at `rx` for a transmission from `tx` while `interferers` transmit
/// co-channel. Positions are (x, y) in m; `interferers` must not contain
/// `tx` or `rx` themselves.
pub fn sinr(
    tx: (f64, f64),
    rx: (f64, f64),
    interferers: &[(f64, f64)],
    budget: &LinkBudget,
) -> SinrSample {
    let h = budget.antenna_height_m;
    let loss = |a: (f64, f64), b: (f64, f64)| {
        pathloss_db(crate::scenario::distance(a, b), budget.carrier_freq_hz, h, h)
    };
    let signal_dbm = budget.eirp_dbm - loss(tx, rx);
    let interference_mw: f64 = interferers
        .iter()
        .map(|&i| dbm_to_mw(budget.eirp_dbm - loss(i, rx)))
        .sum();
    let noise_mw = budget.noise_mw();
    let sinr_db = mw_to_dbm(dbm_to_mw(signal_dbm) / (interference_mw + noise_mw));
    SinrSample {
        signal_dbm,
        interference_mw,
        noise_mw,
        sinr_db,
    }
}
