//! Offered-load planning: per-cell UE counts, aggregate data volume, MCS
//! selection against the channel bandwidth, and the share of UEs a cell can
//! actually serve when it is overloaded.

use std::fmt;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrafficError {
    #[error("invalid traffic parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("mcs table `{path}` line {line}: {reason}")]
    BadMcsFile {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("failed to read mcs table `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("mcs table must not be empty")]
    EmptyMcsTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modulation {
    Qpsk,
    Qam16,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> u32 {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Modulation::Qpsk => write!(f, "QPSK"),
            Modulation::Qam16 => write!(f, "16QAM"),
        }
    }
}

/// Built-in modulation-and-coding ladder: QPSK for indices 0..=10, 16QAM for
/// 11..=20, code rates in units of x/1024. Spectral efficiency is
/// bits_per_symbol * rate, so the ladder tops out at 4 * 948/1024 = 3.7031
/// bit/s/Hz.
const DEFAULT_LADDER: [(Modulation, u32); 21] = [
    (Modulation::Qpsk, 120),
    (Modulation::Qpsk, 157),
    (Modulation::Qpsk, 193),
    (Modulation::Qpsk, 251),
    (Modulation::Qpsk, 308),
    (Modulation::Qpsk, 379),
    (Modulation::Qpsk, 449),
    (Modulation::Qpsk, 553),
    (Modulation::Qpsk, 602),
    (Modulation::Qpsk, 679),
    (Modulation::Qpsk, 711),
    (Modulation::Qam16, 378),
    (Modulation::Qam16, 434),
    (Modulation::Qam16, 490),
    (Modulation::Qam16, 553),
    (Modulation::Qam16, 616),
    (Modulation::Qam16, 658),
    (Modulation::Qam16, 719),
    (Modulation::Qam16, 772),
    (Modulation::Qam16, 873),
    (Modulation::Qam16, 948),
];

/// Ordered table of MCS indices and their spectral efficiencies in
/// bit/s/Hz. Indices are contiguous from 0 and efficiencies strictly
/// increase.
#[derive(Debug, Clone, PartialEq)]
pub struct McsTable {
    efficiencies: Vec<f64>,
}

impl Default for McsTable {
    fn default() -> Self {
        let efficiencies = DEFAULT_LADDER
            .iter()
            .map(|&(m, rate)| m.bits_per_symbol() as f64 * rate as f64 / 1024.0)
            .collect();
        Self { efficiencies }
    }
}

impl McsTable {
    /// Builds a table from raw efficiencies; index i gets the i-th value.
    pub fn from_efficiencies(efficiencies: Vec<f64>) -> Result<Self, TrafficError> {
        if efficiencies.is_empty() {
            return Err(TrafficError::EmptyMcsTable);
        }
        for (i, w) in efficiencies.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(TrafficError::InvalidParameter {
                    name: "spectral_efficiency",
                    reason: format!(
                        "efficiencies must strictly increase, but index {} has {} after {}",
                        i + 1,
                        w[1],
                        w[0]
                    ),
                });
            }
        }
        if efficiencies.iter().any(|&e| !e.is_finite() || e <= 0.0) {
            return Err(TrafficError::InvalidParameter {
                name: "spectral_efficiency",
                reason: "all efficiencies must be finite and > 0".into(),
            });
        }
        Ok(Self { efficiencies })
    }

    /// Loads `index,spectral_efficiency` lines; '#' starts a comment.
    /// Indices must arrive contiguous and ascending from 0.
    pub fn from_file(path: &Path) -> Result<Self, TrafficError> {
        let text = std::fs::read_to_string(path).map_err(|source| TrafficError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut efficiencies = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let bad = |reason: String| TrafficError::BadMcsFile {
                path: path.display().to_string(),
                line,
                reason,
            };
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut parts = content.split(',');
            let idx: usize = parts
                .next()
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|e| bad(format!("bad index: {e}")))?;
            let se: f64 = parts
                .next()
                .ok_or_else(|| bad("missing spectral_efficiency column".into()))?
                .trim()
                .parse()
                .map_err(|e| bad(format!("bad spectral_efficiency: {e}")))?;
            if parts.next().is_some() {
                return Err(bad("expected exactly two columns".into()));
            }
            if idx != efficiencies.len() {
                return Err(bad(format!(
                    "index {idx} out of order, expected {}",
                    efficiencies.len()
                )));
            }
            efficiencies.push(se);
        }
        Self::from_efficiencies(efficiencies)
    }

    pub fn len(&self) -> usize {
        self.efficiencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.efficiencies.is_empty()
    }

    pub fn spectral_efficiency(&self, mcs: u8) -> Option<f64> {
        self.efficiencies.get(mcs as usize).copied()
    }

    pub fn max_index(&self) -> u8 {
        (self.efficiencies.len() - 1) as u8
    }

    pub fn max_spectral_efficiency(&self) -> f64 {
        *self.efficiencies.last().expect("table is never empty")
    }
}

/// Message traffic every vehicle offers.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficConfig {
    pub packet_size_bytes: u32,
    pub message_rate_hz: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            packet_size_bytes: 256,
            message_rate_hz: 10.0,
        }
    }
}

impl TrafficConfig {
    pub fn validate(&self) -> Result<(), TrafficError> {
        if self.packet_size_bytes == 0 {
            return Err(TrafficError::InvalidParameter {
                name: "packet_size_bytes",
                reason: "must be >= 1".into(),
            });
        }
        if !self.message_rate_hz.is_finite() || self.message_rate_hz <= 0.0 {
            return Err(TrafficError::InvalidParameter {
                name: "message_rate_hz",
                reason: "must be finite and > 0".into(),
            });
        }
        Ok(())
    }
}

/// Vehicles scheduled by one base station:
/// floor(isd / ivd * lanes), floored once over the full product.
pub fn ue_count_per_bs(isd_m: f64, ivd_m: f64, lane_count: u32) -> u64 {
    ((isd_m * lane_count as f64) / ivd_m).floor() as u64
}

/// Aggregate offered load of one cell in bit/s:
/// packet_size * 8 * ue_per_bs * message_rate, doubled when every packet is
/// blindly retransmitted once.
pub fn data_volume_bps(
    packet_size_bytes: u32,
    message_rate_hz: f64,
    ue_per_bs: u64,
    retx: bool,
) -> f64 {
    let per_ue = packet_size_bytes as f64 * 8.0 * message_rate_hz;
    per_ue * ue_per_bs as f64 * if retx { 2.0 } else { 1.0 }
}

/// Smallest MCS index whose spectral efficiency covers `required_se`;
/// `None` when even the top entry falls short (the cell is overloaded).
pub fn select_mcs(table: &McsTable, required_se: f64) -> Option<u8> {
    table
        .efficiencies
        .iter()
        .position(|&se| se >= required_se)
        .map(|i| i as u8)
}

/// Per-cell load decision for one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadPlan {
    pub ivd_m: f64,
    pub message_rate_hz: f64,
    pub retx: bool,
    pub ue_per_bs: u64,
    /// Offered load in bit/s, exact (no display rounding).
    pub data_volume_bps: f64,
    pub required_se: f64,
    /// Smallest adequate MCS; `None` flags overload.
    pub selected_mcs: Option<u8>,
    /// MCS actually used on air: the selected one, or the top of the ladder
    /// when the cell is overloaded.
    pub applied_mcs: u8,
    /// UEs the cell can serve at the applied MCS; equals `ue_per_bs` when
    /// the cell is not overloaded.
    pub ue_supported: u64,
    /// Fraction of UEs granted resources: ue_supported / ue_per_bs. 1.0
    /// exactly unless the cell is overloaded.
    pub prr_max: f64,
}

impl LoadPlan {
    pub fn overloaded(&self) -> bool {
        self.selected_mcs.is_none()
    }

    /// Offered load in Mbit/s as reported in result tables: the
    /// per-transmission figure rounded to 4 decimals, then doubled when
    /// retransmission is on.
    pub fn data_volume_mbps_display(&self) -> f64 {
        let factor = if self.retx { 2.0 } else { 1.0 };
        let base_mbps = self.data_volume_bps / factor / 1e6;
        (base_mbps * 1e4).round() / 1e4 * factor
    }
}

/// Sizes one cell's load and picks the MCS.
///
/// When even the top MCS cannot carry the offered volume the cell is
/// overloaded: the base station serves only
/// floor(bandwidth * se_max / per_ue_rate) UEs at the top MCS and the rest
/// are denied resources, which caps the reachable reception ratio at
/// `prr_max` < 1.
pub fn plan_load(
    table: &McsTable,
    traffic: &TrafficConfig,
    bandwidth_hz: f64,
    isd_m: f64,
    ivd_m: f64,
    lane_count: u32,
    retx: bool,
) -> Result<LoadPlan, TrafficError> {
    traffic.validate()?;
    if !bandwidth_hz.is_finite() || bandwidth_hz <= 0.0 {
        return Err(TrafficError::InvalidParameter {
            name: "bandwidth_hz",
            reason: "must be finite and > 0".into(),
        });
    }
    if !ivd_m.is_finite() || ivd_m <= 0.0 {
        return Err(TrafficError::InvalidParameter {
            name: "ivd_m",
            reason: "must be finite and > 0".into(),
        });
    }
    let ue_per_bs = ue_count_per_bs(isd_m, ivd_m, lane_count);
    if ue_per_bs == 0 {
        return Err(TrafficError::InvalidParameter {
            name: "ivd_m",
            reason: format!("no vehicles per base station at ivd {ivd_m} m"),
        });
    }

    let volume = data_volume_bps(traffic.packet_size_bytes, traffic.message_rate_hz, ue_per_bs, retx);
    let required_se = volume / bandwidth_hz;
    let selected_mcs = select_mcs(table, required_se);

    let (applied_mcs, ue_supported) = match selected_mcs {
        Some(mcs) => (mcs, ue_per_bs),
        None => {
            let per_ue_bps = traffic.packet_size_bytes as f64
                * 8.0
                * traffic.message_rate_hz
                * if retx { 2.0 } else { 1.0 };
            let supported = (bandwidth_hz * table.max_spectral_efficiency() / per_ue_bps).floor();
            (table.max_index(), supported as u64)
        }
    };
    let prr_max = if selected_mcs.is_some() {
        1.0
    } else {
        ue_supported as f64 / ue_per_bs as f64
    };

    Ok(LoadPlan {
        ivd_m,
        message_rate_hz: traffic.message_rate_hz,
        retx,
        ue_per_bs,
        data_volume_bps: volume,
        required_se,
        selected_mcs,
        applied_mcs,
        ue_supported,
        prr_max,
    })
}
