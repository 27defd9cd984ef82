//! Tide records, harmonic synthesis, and site datum computation.
//!
//! Everything downstream consumes a [`TideRecord`]: a gap-free, one-minute
//! sea-level series in meters relative to Mean Sea Level. Records are either
//! ingested from gauge CSV files or synthesized from harmonic constituents.
//! [`compute_datums`] derives the site reference levels (MLLW, MLW, MSL, MHW,
//! MHHW, record extremes) and the standard deviation of the series.

use std::io::{BufRead, Write};

use chrono::{DateTime, Duration, SecondsFormat, Utc};

use crate::error::{Error, Result};

/// Lunar day used to partition records for datum computation (24 h 50 m).
pub const TIDAL_DAY_MINUTES: usize = 1490;

/// Half-width of the local-extremum detection window, in minutes.
pub const EXTREMUM_WINDOW_MINUTES: usize = 120;

/// Records shorter than this many tidal days get a datum-quality warning.
pub const MIN_TIDAL_DAYS: usize = 40;

/// Largest |mean| (m) a record may have while claiming an MSL reference.
pub const MSL_REFERENCE_TOLERANCE: f64 = 0.05;

fn default_start_epoch() -> DateTime<Utc> {
    DateTime::parse_from_rfc3339("2000-01-01T00:00:00Z")
        .expect("valid constant")
        .with_timezone(&Utc)
}

/// One tidal constituent: `level(t) = amplitude * cos(speed * t + phase)`
/// with `t` in hours and angles in degrees.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HarmonicConstituent {
    pub name: String,
    pub amplitude_m: f64,
    pub speed_deg_per_hr: f64,
    pub phase_deg: f64,
}

impl HarmonicConstituent {
    pub fn new(name: &str, amplitude_m: f64, speed_deg_per_hr: f64, phase_deg: f64) -> Self {
        Self {
            name: name.to_string(),
            amplitude_m,
            speed_deg_per_hr,
            phase_deg,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.amplitude_m >= 0.0) || !self.amplitude_m.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "constituent {}: amplitude must be finite and >= 0",
                self.name
            )));
        }
        if !(self.speed_deg_per_hr > 0.0) || !self.speed_deg_per_hr.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "constituent {}: speed must be finite and > 0",
                self.name
            )));
        }
        if !self.phase_deg.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "constituent {}: phase must be finite",
                self.name
            )));
        }
        Ok(())
    }
}

/// How ingestion treats missing minutes between consecutive rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GapPolicy {
    /// Fill gaps up to `max_minutes` by linear interpolation; error beyond.
    Interpolate { max_minutes: i64 },
    /// Any gap is an error.
    Fail,
}

impl Default for GapPolicy {
    fn default() -> Self {
        // Small outages are routine in gauge data; long ones bias the statistics.
        GapPolicy::Interpolate { max_minutes: 120 }
    }
}

/// Options for [`ingest_tide_csv`].
#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub gap: GapPolicy,
    /// Subtract the mean after ingestion so the record is exactly MSL-referenced.
    pub rebase_to_mean: bool,
    pub min_samples: usize,
    pub site_label: String,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            gap: GapPolicy::default(),
            rebase_to_mean: false,
            min_samples: 2,
            site_label: String::new(),
        }
    }
}

/// A uniform one-minute sea-level series in meters relative to MSL.
#[derive(Debug, Clone, PartialEq)]
pub struct TideRecord {
    start_epoch: DateTime<Utc>,
    cadence_minutes: u32,
    levels: Vec<f64>,
    site_label: String,
}

impl TideRecord {
    pub fn new(start_epoch: DateTime<Utc>, levels: Vec<f64>, site_label: &str) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::TooFewSamples { got: 0, min: 1 });
        }
        if let Some(bad) = levels.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse {
                line: bad + 1,
                msg: "non-finite level".to_string(),
            });
        }
        Ok(Self {
            start_epoch,
            cadence_minutes: 1,
            levels,
            site_label: site_label.to_string(),
        })
    }

    pub fn start_epoch(&self) -> DateTime<Utc> {
        self.start_epoch
    }

    pub fn cadence_minutes(&self) -> u32 {
        self.cadence_minutes
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn site_label(&self) -> &str {
        &self.site_label
    }

    pub fn set_site_label(&mut self, label: &str) {
        self.site_label = label.to_string();
    }

    pub fn timestamp(&self, index: usize) -> DateTime<Utc> {
        self.start_epoch + Duration::minutes(index as i64)
    }

    pub fn mean(&self) -> f64 {
        self.levels.iter().sum::<f64>() / self.levels.len() as f64
    }

    pub fn min_level(&self) -> f64 {
        self.levels.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_level(&self) -> f64 {
        self.levels
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Population standard deviation of the series.
    pub fn sigma0(&self) -> f64 {
        let mean = self.mean();
        let var = self
            .levels
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / self.levels.len() as f64;
        var.sqrt()
    }

    /// Sub-record starting at minute `from` (same site label, shifted epoch).
    pub fn slice(&self, from: usize) -> Result<Self> {
        if from >= self.levels.len() {
            return Err(Error::InvalidParameter(format!(
                "slice start {from} beyond record length {}",
                self.levels.len()
            )));
        }
        Ok(Self {
            start_epoch: self.timestamp(from),
            cadence_minutes: 1,
            levels: self.levels[from..].to_vec(),
            site_label: self.site_label.clone(),
        })
    }

    /// Data-quality notes that do not block processing.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mean = self.mean();
        if mean.abs() > MSL_REFERENCE_TOLERANCE {
            out.push(format!(
                "record mean {mean:.3} m is more than {MSL_REFERENCE_TOLERANCE} m from 0; \
                 levels may not be MSL-referenced (consider --rebase)"
            ));
        }
        if self.levels.len() < MIN_TIDAL_DAYS * TIDAL_DAY_MINUTES {
            out.push(format!(
                "record spans {:.1} tidal days, fewer than the {MIN_TIDAL_DAYS} recommended \
                 for stable datums",
                self.levels.len() as f64 / TIDAL_DAY_MINUTES as f64
            ));
        }
        out
    }

    /// Write the record as `timestamp,level_m` CSV. Levels use shortest
    /// round-trip formatting so ingestion reproduces them bit-exactly.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "timestamp,level_m")?;
        for (i, level) in self.levels.iter().enumerate() {
            writeln!(
                out,
                "{},{}",
                self.timestamp(i).to_rfc3339_opts(SecondsFormat::Secs, true),
                level
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to vec");
        String::from_utf8(buf).expect("utf8")
    }
}

/// Parse a `timestamp,level_m` stream into a gap-free one-minute record.
///
/// Rows must be time-ordered on a one-minute grid anchored at the first row.
/// Missing minutes are linearly interpolated when the jump between rows is
/// within the gap policy, otherwise ingestion fails. Lines starting with `#`
/// are ignored.
pub fn ingest_tide_csv<R: BufRead>(reader: R, opts: &IngestOptions) -> Result<TideRecord> {
    let mut start: Option<DateTime<Utc>> = None;
    let mut prev_index: i64 = -1;
    let mut levels: Vec<f64> = Vec::new();
    let mut saw_header = false;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line_num = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !saw_header {
            let lowered = trimmed.to_ascii_lowercase();
            if lowered != "timestamp,level_m" {
                return Err(Error::Parse {
                    line: line_num,
                    msg: format!("expected header 'timestamp,level_m', got '{trimmed}'"),
                });
            }
            saw_header = true;
            continue;
        }

        let mut parts = trimmed.splitn(2, ',');
        let (ts_str, level_str) = match (parts.next(), parts.next()) {
            (Some(a), Some(b)) => (a.trim(), b.trim()),
            _ => {
                return Err(Error::Parse {
                    line: line_num,
                    msg: "expected 'timestamp,level_m'".to_string(),
                })
            }
        };
        let ts = DateTime::parse_from_rfc3339(ts_str)
            .map_err(|e| Error::Parse {
                line: line_num,
                msg: format!("bad timestamp '{ts_str}': {e}"),
            })?
            .with_timezone(&Utc);
        let level: f64 = level_str.parse().map_err(|e| Error::Parse {
            line: line_num,
            msg: format!("bad level '{level_str}': {e}"),
        })?;
        if !level.is_finite() {
            return Err(Error::Parse {
                line: line_num,
                msg: format!("non-finite level '{level_str}'"),
            });
        }

        let start = *start.get_or_insert(ts);
        let offset_secs = (ts - start).num_seconds();
        if offset_secs % 60 != 0 {
            return Err(Error::OffGridTimestamp { line: line_num });
        }
        let index = offset_secs / 60;
        if index <= prev_index {
            return Err(Error::NonMonotoneTimestamps { line: line_num });
        }

        let delta = index - prev_index;
        if prev_index >= 0 && delta > 1 {
            match opts.gap {
                GapPolicy::Fail => {
                    return Err(Error::GapExceedsPolicy {
                        line: line_num,
                        gap_minutes: delta,
                        max_minutes: 0,
                    })
                }
                GapPolicy::Interpolate { max_minutes } => {
                    if delta > max_minutes {
                        return Err(Error::GapExceedsPolicy {
                            line: line_num,
                            gap_minutes: delta,
                            max_minutes,
                        });
                    }
                    let prev_level = *levels.last().expect("gap implies earlier sample");
                    for j in 1..delta {
                        let frac = j as f64 / delta as f64;
                        levels.push(prev_level + (level - prev_level) * frac);
                    }
                }
            }
        }
        levels.push(level);
        prev_index = index;
    }

    if levels.len() < opts.min_samples {
        return Err(Error::TooFewSamples {
            got: levels.len(),
            min: opts.min_samples,
        });
    }
    let start = start.expect("non-empty record has a start");
    let mut record = TideRecord::new(start, levels, &opts.site_label)?;
    if opts.rebase_to_mean {
        let mean = record.mean();
        for v in &mut record.levels {
            *v -= mean;
        }
    }
    Ok(record)
}

/// Synthesize a record from harmonic constituents at one-minute cadence:
/// `level(t) = msl_offset + sum_i A_i cos(speed_i * t + phase_i)`, t in hours.
pub fn synthesize_tide(
    constituents: &[HarmonicConstituent],
    duration_days: f64,
    msl_offset: f64,
) -> Result<TideRecord> {
    if constituents.is_empty() {
        return Err(Error::EmptyConstituents);
    }
    if !(duration_days >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "duration_days must be >= 1, got {duration_days}"
        )));
    }
    for c in constituents {
        c.validate()?;
    }
    let n = (duration_days * 24.0 * 60.0).round() as usize;
    let mut levels = Vec::with_capacity(n);
    for m in 0..n {
        let t_hours = m as f64 / 60.0;
        let mut level = msl_offset;
        for c in constituents {
            level += c.amplitude_m
                * (c.speed_deg_per_hr * t_hours + c.phase_deg)
                    .to_radians()
                    .cos();
        }
        levels.push(level);
    }
    TideRecord::new(default_start_epoch(), levels, "synthetic")
}

/// Site reference levels in meters relative to MSL, plus the record spread.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TidalDatums {
    pub xi_mllw: f64,
    pub xi_mlw: f64,
    pub xi_msl: f64,
    pub xi_mhw: f64,
    pub xi_mhhw: f64,
    pub xi_lowest: f64,
    pub xi_highest: f64,
    pub sigma0: f64,
}

impl TidalDatums {
    pub fn validate(&self) -> Result<()> {
        let ordered = [
            ("xi_lowest", self.xi_lowest),
            ("xi_mllw", self.xi_mllw),
            ("xi_mlw", self.xi_mlw),
            ("xi_msl", self.xi_msl),
            ("xi_mhw", self.xi_mhw),
            ("xi_mhhw", self.xi_mhhw),
            ("xi_highest", self.xi_highest),
        ];
        for pair in ordered.windows(2) {
            let ((name_a, a), (name_b, b)) = (pair[0], pair[1]);
            // Averaging tied extrema over different subsets can disorder
            // neighbors by a few ulp; only real violations count.
            if !(a <= b + 1e-9) {
                return Err(Error::DatumOrdering(format!(
                    "{name_a}={a} must be <= {name_b}={b}"
                )));
            }
        }
        if !(self.sigma0 > 0.0) {
            return Err(Error::DatumOrdering(format!(
                "sigma0={} must be > 0",
                self.sigma0
            )));
        }
        Ok(())
    }

    /// `(datum, value)` rows in report order.
    pub fn rows(&self) -> [(&'static str, f64); 8] {
        [
            ("xi_mllw", self.xi_mllw),
            ("xi_mlw", self.xi_mlw),
            ("xi_msl", self.xi_msl),
            ("xi_mhw", self.xi_mhw),
            ("xi_mhhw", self.xi_mhhw),
            ("xi_lowest", self.xi_lowest),
            ("xi_highest", self.xi_highest),
            ("sigma0", self.sigma0),
        ]
    }

    /// Write the `datum,value_m` report (fixed 6-decimal formatting).
    pub fn write_report<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "datum,value_m")?;
        for (name, value) in self.rows() {
            writeln!(out, "{name},{value:.6}")?;
        }
        Ok(())
    }
}

/// True when `levels[i]` is a local high over the +/-120-minute window:
/// strictly greater than every other sample, with ties won by the earliest.
/// Only positions with a full window inside the record are eligible.
fn is_local_high(levels: &[f64], i: usize) -> bool {
    let w = EXTREMUM_WINDOW_MINUTES;
    if i < w || i + w >= levels.len() {
        return false;
    }
    let v = levels[i];
    for j in (i - w)..=(i + w) {
        if j == i {
            continue;
        }
        if levels[j] > v || (levels[j] == v && j < i) {
            return false;
        }
    }
    true
}

fn is_local_low(levels: &[f64], i: usize) -> bool {
    let w = EXTREMUM_WINDOW_MINUTES;
    if i < w || i + w >= levels.len() {
        return false;
    }
    let v = levels[i];
    for j in (i - w)..=(i + w) {
        if j == i {
            continue;
        }
        if levels[j] < v || (levels[j] == v && j < i) {
            return false;
        }
    }
    true
}

/// Derive site datums from a record.
///
/// The record is partitioned into complete 1490-minute tidal days. Highs and
/// lows come from local-extremum detection over a +/-120-minute window. MHHW
/// and MLLW average the higher high / lower low of each complete tidal day;
/// MHW and MLW average every detected high / low.
pub fn compute_datums(record: &TideRecord) -> Result<TidalDatums> {
    let n = record.len();
    if n < TIDAL_DAY_MINUTES {
        return Err(Error::ShorterThanTidalDay {
            got: n,
            need: TIDAL_DAY_MINUTES,
        });
    }
    let levels = record.levels();

    let mut highs: Vec<usize> = Vec::new();
    let mut lows: Vec<usize> = Vec::new();
    for i in 0..n {
        if is_local_high(levels, i) {
            highs.push(i);
        } else if is_local_low(levels, i) {
            lows.push(i);
        }
    }
    if highs.is_empty() || lows.is_empty() {
        return Err(Error::InvalidParameter(
            "no tidal extrema detected; record may not be tidal".to_string(),
        ));
    }

    let n_days = n / TIDAL_DAY_MINUTES;
    let mut higher_highs: Vec<f64> = Vec::new();
    let mut lower_lows: Vec<f64> = Vec::new();
    for d in 0..n_days {
        let lo = d * TIDAL_DAY_MINUTES;
        let hi = lo + TIDAL_DAY_MINUTES;
        let hh = highs
            .iter()
            .filter(|&&i| i >= lo && i < hi)
            .map(|&i| levels[i])
            .fold(f64::NEG_INFINITY, f64::max);
        if hh.is_finite() {
            higher_highs.push(hh);
        }
        let ll = lows
            .iter()
            .filter(|&&i| i >= lo && i < hi)
            .map(|&i| levels[i])
            .fold(f64::INFINITY, f64::min);
        if ll.is_finite() {
            lower_lows.push(ll);
        }
    }
    if higher_highs.is_empty() || lower_lows.is_empty() {
        return Err(Error::InvalidParameter(
            "no complete tidal day contains both a high and a low".to_string(),
        ));
    }

    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let datums = TidalDatums {
        xi_mllw: mean(&lower_lows),
        xi_mlw: mean(&lows.iter().map(|&i| levels[i]).collect::<Vec<_>>()),
        xi_msl: record.mean(),
        xi_mhw: mean(&highs.iter().map(|&i| levels[i]).collect::<Vec<_>>()),
        xi_mhhw: mean(&higher_highs),
        xi_lowest: record.min_level(),
        xi_highest: record.max_level(),
        sigma0: record.sigma0(),
    };
    datums.validate()?;
    Ok(datums)
}

/// Read a `name,amplitude_m,speed_deg_per_hr,phase_deg` constituent file.
pub fn read_constituents_csv<R: BufRead>(reader: R) -> Result<Vec<HarmonicConstituent>> {
    let mut out = Vec::new();
    let mut saw_header = false;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line_num = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !saw_header {
            if trimmed.to_ascii_lowercase() != "name,amplitude_m,speed_deg_per_hr,phase_deg" {
                return Err(Error::Parse {
                    line: line_num,
                    msg: format!(
                        "expected header 'name,amplitude_m,speed_deg_per_hr,phase_deg', got '{trimmed}'"
                    ),
                });
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: line_num,
                msg: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let parse = |s: &str, what: &str| -> Result<f64> {
            s.parse().map_err(|e| Error::Parse {
                line: line_num,
                msg: format!("bad {what} '{s}': {e}"),
            })
        };
        let c = HarmonicConstituent::new(
            fields[0],
            parse(fields[1], "amplitude")?,
            parse(fields[2], "speed")?,
            parse(fields[3], "phase")?,
        );
        c.validate()?;
        out.push(c);
    }
    if out.is_empty() {
        return Err(Error::EmptyConstituents);
    }
    Ok(out)
}

pub fn write_constituents_csv<W: Write>(
    constituents: &[HarmonicConstituent],
    mut out: W,
) -> Result<()> {
    writeln!(out, "name,amplitude_m,speed_deg_per_hr,phase_deg")?;
    for c in constituents {
        writeln!(
            out,
            "{},{},{},{}",
            c.name, c.amplitude_m, c.speed_deg_per_hr, c.phase_deg
        )?;
    }
    Ok(())
}
