//! Link-to-system abstraction: per-MCS curves mapping SINR to block error
//! rate, loaded from files or generated synthetically. Lookups interpolate
//! linearly in (dB, BLER) and extrapolate with the nearest edge value.

use std::path::Path;

use thiserror::Error;

use crate::traffic::McsTable;

/// Floor applied to generated BLER values; keeps curves strictly positive
/// so reception never becomes a certainty.
pub const BLER_FLOOR: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum L2sError {
    #[error("l2s table `{path}` line {line}: {reason}")]
    BadTableFile {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("failed to read l2s table `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("l2s table has no curve for mcs {mcs}")]
    UnknownMcs { mcs: u8 },
    #[error("l2s table `{label}`: {reason}")]
    BadTable { label: String, reason: String },
}

/// One MCS's SINR-to-BLER curve; grid points ascend in SINR.
#[derive(Debug, Clone, PartialEq)]
pub struct BlerCurve {
    pub mcs: u8,
    pub points: Vec<(f64, f64)>,
}

/// Set of BLER curves for one channel condition (speed) and one
/// transmission scheme (single shot, or first plus blind retransmission).
#[derive(Debug, Clone, PartialEq)]
pub struct L2sTable {
    pub label: String,
    pub channel: String,
    pub speed_kmh: f64,
    pub curves: Vec<BlerCurve>,
}

impl L2sTable {
    pub fn curve(&self, mcs: u8) -> Option<&BlerCurve> {
        self.curves.iter().find(|c| c.mcs == mcs)
    }

    pub fn validate(&self) -> Result<(), L2sError> {
        let bad = |reason: String| L2sError::BadTable {
            label: self.label.clone(),
            reason,
        };
        if self.curves.is_empty() {
            return Err(bad("table holds no curves".into()));
        }
        for c in &self.curves {
            if c.points.len() < 2 {
                return Err(bad(format!("mcs {} curve has fewer than 2 points", c.mcs)));
            }
            for w in c.points.windows(2) {
                if !(w[1].0 > w[0].0) {
                    return Err(bad(format!("mcs {} grid is not strictly ascending", c.mcs)));
                }
            }
            for &(snr, bler) in &c.points {
                if !snr.is_finite() || !(0.0..=1.0).contains(&bler) {
                    return Err(bad(format!(
                        "mcs {} holds point ({snr}, {bler}) outside [0, 1]",
                        c.mcs
                    )));
                }
            }
        }
        for w in self.curves.windows(2) {
            if !(w[1].mcs > w[0].mcs) {
                return Err(bad("curves must ascend in mcs index".into()));
            }
        }
        Ok(())
    }
}

/// BLER for `mcs` at `sinr_db`: linear interpolation between grid points,
/// constant extrapolation beyond either end.
pub fn bler_lookup(table: &L2sTable, mcs: u8, sinr_db: f64) -> Result<f64, L2sError> {
    let curve = table.curve(mcs).ok_or(L2sError::UnknownMcs { mcs })?;
    let pts = &curve.points;
    if sinr_db <= pts[0].0 {
        return Ok(pts[0].1);
    }
    let last = pts[pts.len() - 1];
    if sinr_db >= last.0 {
        return Ok(last.1);
    }
    let hi = pts.partition_point(|&(snr, _)| snr < sinr_db);
    let (x0, y0) = pts[hi - 1];
    let (x1, y1) = pts[hi];
    let t = (sinr_db - x0) / (x1 - x0);
    Ok(y0 + t * (y1 - y0))
}

/// Loads `mcs,snr_db,bler` rows; '#' starts a comment. Metadata may be
/// carried in comment directives `# label: ...`, `# channel: ...`,
/// `# speed_kmh: ...`; absent directives fall back to the given defaults.
pub fn load_table(
    path: &Path,
    default_label: &str,
    default_channel: &str,
    default_speed_kmh: f64,
) -> Result<L2sTable, L2sError> {
    let text = std::fs::read_to_string(path).map_err(|source| L2sError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut label = default_label.to_string();
    let mut channel = default_channel.to_string();
    let mut speed_kmh = default_speed_kmh;
    let mut curves: Vec<BlerCurve> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let bad = |reason: String| L2sError::BadTableFile {
            path: path.display().to_string(),
            line,
            reason,
        };
        let trimmed = raw.trim();
        if let Some(comment) = trimmed.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(v) = comment.strip_prefix("label:") {
                label = v.trim().to_string();
            } else if let Some(v) = comment.strip_prefix("channel:") {
                channel = v.trim().to_string();
            } else if let Some(v) = comment.strip_prefix("speed_kmh:") {
                speed_kmh = v
                    .trim()
                    .parse()
                    .map_err(|e| bad(format!("bad speed_kmh: {e}")))?;
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        let mut parts = trimmed.split(',');
        let mcs: u8 = parts
            .next()
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|e| bad(format!("bad mcs: {e}")))?;
        let snr: f64 = parts
            .next()
            .ok_or_else(|| bad("missing snr_db column".into()))?
            .trim()
            .parse()
            .map_err(|e| bad(format!("bad snr_db: {e}")))?;
        let bler: f64 = parts
            .next()
            .ok_or_else(|| bad("missing bler column".into()))?
            .trim()
            .parse()
            .map_err(|e| bad(format!("bad bler: {e}")))?;
        if parts.next().is_some() {
            return Err(bad("expected exactly three columns".into()));
        }
        if !(0.0..=1.0).contains(&bler) {
            return Err(bad(format!("bler {bler} outside [0, 1]")));
        }
        match curves.last_mut() {
            Some(c) if c.mcs == mcs => c.points.push((snr, bler)),
            _ => {
                if curves.iter().any(|c| c.mcs == mcs) {
                    return Err(bad(format!("rows for mcs {mcs} are not contiguous")));
                }
                curves.push(BlerCurve {
                    mcs,
                    points: vec![(snr, bler)],
                });
            }
        }
    }

    let table = L2sTable {
        label,
        channel,
        speed_kmh,
        curves,
    };
    table.validate()?;
    Ok(table)
}

/// Writes a table in the format [`load_table`] reads: metadata comment
/// directives followed by `mcs,snr_db,bler` rows. Loading the output and
/// saving it again reproduces the bytes exactly.
pub fn save_table(table: &L2sTable, path: &Path) -> Result<(), L2sError> {
    table.validate()?;
    let mut out = String::new();
    out.push_str(&format!("# label: {}\n", table.label));
    out.push_str(&format!("# channel: {}\n", table.channel));
    out.push_str(&format!("# speed_kmh: {}\n", table.speed_kmh));
    out.push_str("# mcs,snr_db,bler\n");
    for c in &table.curves {
        for &(snr, bler) in &c.points {
            out.push_str(&format!("{},{},{}\n", c.mcs, snr, bler));
        }
    }
    std::fs::write(path, out).map_err(|source| L2sError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Generates waterfall curves for every MCS in `mcs_table`.
///
/// Each curve is anchored where an AWGN channel would just reach the MCS's
/// spectral efficiency: snr50_db = 10 log10(2^SE - 1) + channel_penalty_db
/// - diversity_gain_db, and falls off as
/// bler(snr) = min(1, 0.5 * exp(-slope_k * (snr_lin / snr50_lin - 1))),
/// floored at [`BLER_FLOOR`]. The curve passes through BLER 0.5 at the
/// anchor; `channel_penalty_db` shifts it right (harsher fading),
/// `diversity_gain_db` shifts it left (combining gain).
#[allow(clippy::too_many_arguments)]
pub fn synth_table(
    mcs_table: &McsTable,
    channel_penalty_db: f64,
    diversity_gain_db: f64,
    slope_k: f64,
    label: &str,
    channel: &str,
    speed_kmh: f64,
) -> L2sTable {
    let mut curves = Vec::with_capacity(mcs_table.len());
    for mcs in 0..mcs_table.len() as u8 {
        let se = mcs_table.spectral_efficiency(mcs).expect("index in range");
        let snr50_db = 10.0 * (2f64.powf(se) - 1.0).log10() + channel_penalty_db - diversity_gain_db;
        let snr50_lin = 10f64.powf(snr50_db / 10.0);
        let points = (0..=100)
            .map(|i| {
                let snr_db = snr50_db - 25.0 + i as f64 * 0.5;
                let snr_lin = 10f64.powf(snr_db / 10.0);
                let raw = 0.5 * (-slope_k * (snr_lin / snr50_lin - 1.0)).exp();
                (snr_db, raw.min(1.0).max(BLER_FLOOR))
            })
            .collect();
        curves.push(BlerCurve { mcs, points });
    }
    L2sTable {
        label: label.to_string(),
        channel: channel.to_string(),
        speed_kmh,
        curves,
    }
}

/// Constant-BLER table over every MCS of `mcs_table`; used for controlled
/// experiments where the link must succeed with a fixed probability.
pub fn constant_table(mcs_table: &McsTable, bler: f64, label: &str) -> L2sTable {
    let curves = (0..mcs_table.len() as u8)
        .map(|mcs| BlerCurve {
            mcs,
            points: vec![(-1000.0, bler), (1000.0, bler)],
        })
        .collect();
    L2sTable {
        label: label.to_string(),
        channel: "flat".to_string(),
        speed_kmh: 0.0,
        curves,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synth_default(gain: f64) -> L2sTable {
        synth_table(&McsTable::default(), 3.0, gain, 2.0, "synthetic", "EVA", 100.0)
    }

    #[test]
    fn anchor_sits_at_half_bler() {
        // SE = 1 bit/s/Hz with no penalty or gain anchors at exactly 0 dB
        let table = synth_table(
            &McsTable::from_efficiencies(vec![1.0]).unwrap(),
            0.0,
            0.0,
            2.0,
            "t",
            "awgn",
            0.0,
        );
        let bler = bler_lookup(&table, 0, 0.0).unwrap();
        assert!((bler - 0.5).abs() < 1e-12, "bler {bler}");
    }

    #[test]
    fn lookup_interpolates_linearly_between_grid_points() {
        let table = L2sTable {
            label: "t".into(),
            channel: "flat".into(),
            speed_kmh: 0.0,
            curves: vec![BlerCurve {
                mcs: 0,
                points: vec![(0.0, 0.8), (2.0, 0.2)],
            }],
        };
        assert_eq!(bler_lookup(&table, 0, 0.0).unwrap(), 0.8);
        assert_eq!(bler_lookup(&table, 0, 2.0).unwrap(), 0.2);
        let mid = bler_lookup(&table, 0, 1.0).unwrap();
        assert!((mid - 0.5).abs() < 1e-12);
    }

    #[test]
    fn lookup_extrapolates_with_edge_values() {
        let table = synth_default(0.0);
        let first = table.curves[0].points[0];
        let last = *table.curves[0].points.last().unwrap();
        assert_eq!(bler_lookup(&table, 0, first.0 - 1000.0).unwrap(), first.1);
        assert_eq!(bler_lookup(&table, 0, last.0 + 1000.0).unwrap(), last.1);
    }

    #[test]
    fn unknown_mcs_is_reported() {
        let table = synth_default(0.0);
        let err = bler_lookup(&table, 99, 0.0).unwrap_err().to_string();
        assert!(err.contains("mcs 99"), "{err}");
    }

    #[test]
    fn curves_fall_with_sinr_and_rise_with_mcs() {
        let table = synth_default(0.0);
        for c in &table.curves {
            for w in c.points.windows(2) {
                assert!(w[1].1 <= w[0].1, "mcs {} not monotone", c.mcs);
            }
        }
        // at a fixed SINR a higher MCS can only be harder to decode
        for snr in [-10.0, -3.0, 0.0, 3.0, 8.0, 15.0] {
            let mut prev = 0.0;
            for mcs in 0..21u8 {
                let b = bler_lookup(&table, mcs, snr).unwrap();
                assert!(b >= prev - 1e-12, "mcs {mcs} at {snr} dB");
                prev = b;
            }
        }
    }

    #[test]
    fn diversity_gain_never_hurts() {
        let single = synth_default(0.0);
        let combined = synth_default(4.5);
        for snr in [-15.0, -5.0, 0.0, 5.0, 10.0, 20.0] {
            for mcs in 0..21u8 {
                let a = bler_lookup(&single, mcs, snr).unwrap();
                let b = bler_lookup(&combined, mcs, snr).unwrap();
                assert!(b <= a + 1e-12, "mcs {mcs} at {snr} dB: {b} > {a}");
            }
        }
    }

    #[test]
    fn generated_values_stay_clipped() {
        let table = synth_default(0.0);
        for c in &table.curves {
            for &(_, bler) in &c.points {
                assert!((BLER_FLOOR..=1.0).contains(&bler));
            }
        }
    }

    #[test]
    fn file_round_trip_reproduces_data_rows() {
        let dir = tempfile::tempdir().unwrap();
        let first = dir.path().join("a.csv");
        let second = dir.path().join("b.csv");

        let table = synth_default(4.5);
        save_table(&table, &first).unwrap();
        let loaded = load_table(&first, "fallback", "fallback", 0.0).unwrap();
        assert_eq!(loaded.label, "synthetic");
        assert_eq!(loaded.channel, "EVA");
        assert_eq!(loaded.speed_kmh, 100.0);
        save_table(&loaded, &second).unwrap();

        let strip = |p: &Path| {
            std::fs::read_to_string(p)
                .unwrap()
                .lines()
                .filter(|l| !l.trim_start().starts_with('#'))
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(std::fs::read_to_string(&first).unwrap(), std::fs::read_to_string(&second).unwrap());
        assert!(!strip(&first).is_empty());
    }

    #[test]
    fn single_mcs_file_loads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.csv");
        std::fs::write(&path, "# speed_kmh: 30\n5,-2.0,0.9\n5,4.0,0.1\n").unwrap();
        let t = load_table(&path, "lab", "eva", 100.0).unwrap();
        assert_eq!(t.speed_kmh, 30.0);
        assert_eq!(t.curves.len(), 1);
        assert_eq!(bler_lookup(&t, 5, -2.0).unwrap(), 0.9);
    }

    #[test]
    fn out_of_range_bler_is_rejected_with_its_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "0,0.0,0.5\n0,1.0,1.2\n").unwrap();
        let err = load_table(&path, "l", "c", 0.0).unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("1.2"), "{err}");
    }

    #[test]
    fn short_curves_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.csv");
        std::fs::write(&path, "0,0.0,0.5\n").unwrap();
        let err = load_table(&path, "l", "c", 0.0).unwrap_err().to_string();
        assert!(err.contains("fewer than 2"), "{err}");
    }

    #[test]
    fn non_ascending_grid_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.csv");
        std::fs::write(&path, "0,1.0,0.5\n0,0.0,0.6\n").unwrap();
        let err = load_table(&path, "l", "c", 0.0).unwrap_err().to_string();
        assert!(err.contains("ascending"), "{err}");
    }
}
