//! Square-wave descriptions of tsunami wave trains.
//!
//! A simulated gauge series is reduced to K disjoint intervals `[S_k, T_k]`
//! (integer minutes, first wave at 0) and offsets `D_k = H - H_k`, the height
//! deficit of each wave relative to the tallest. Sliding this pattern over a
//! tide record yields the pattern-weighted exceedance CCDF; the 5-day
//! exponentially decaying proxy series generated here feeds the closed-form
//! variant.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::ccdf::GMethodParams;
use crate::error::{Error, Result};

/// Sea-surface elevation seen at a simulated gauge, relative to the static
/// run level of the generating simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeSeries {
    minutes: Vec<f64>,
    eta: Vec<f64>,
    run_stage: f64,
}

impl GaugeSeries {
    pub fn new(minutes: Vec<f64>, eta: Vec<f64>, run_stage: f64) -> Result<Self> {
        if minutes.len() != eta.len() {
            return Err(Error::ShapeMismatch(format!(
                "times ({}) and eta ({}) differ in length",
                minutes.len(),
                eta.len()
            )));
        }
        if minutes.is_empty() {
            return Err(Error::InvalidParameter("empty gauge series".to_string()));
        }
        if minutes.iter().any(|t| !t.is_finite()) || eta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "gauge series has non-finite values".to_string(),
            ));
        }
        if minutes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "gauge times must be strictly ascending".to_string(),
            ));
        }
        if !run_stage.is_finite() {
            return Err(Error::InvalidParameter("non-finite run stage".to_string()));
        }
        Ok(Self {
            minutes,
            eta,
            run_stage,
        })
    }

    pub fn minutes(&self) -> &[f64] {
        &self.minutes
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn run_stage(&self) -> f64 {
        self.run_stage
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    /// Write as `t_min,eta_m` CSV with a `# run_stage_m=` metadata line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# run_stage_m={}", self.run_stage)?;
        writeln!(out, "t_min,eta_m")?;
        for (t, v) in self.minutes.iter().zip(&self.eta) {
            writeln!(out, "{t},{v}")?;
        }
        Ok(())
    }
}

/// Read a gauge CSV written by [`GaugeSeries::write_csv`].
pub fn read_gauge_csv<R: BufRead>(reader: R) -> Result<GaugeSeries> {
    let mut run_stage = 0.0;
    let mut minutes = Vec::new();
    let mut eta = Vec::new();
    let mut saw_header = false;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line_num = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            if let Some(value) = rest.trim().strip_prefix("run_stage_m=") {
                run_stage = value.trim().parse().map_err(|e| Error::Parse {
                    line: line_num,
                    msg: format!("bad run_stage_m: {e}"),
                })?;
            }
            continue;
        }
        if !saw_header {
            if trimmed.to_ascii_lowercase() != "t_min,eta_m" {
                return Err(Error::Parse {
                    line: line_num,
                    msg: format!("expected header 't_min,eta_m', got '{trimmed}'"),
                });
            }
            saw_header = true;
            continue;
        }
        let mut parts = trimmed.splitn(2, ',');
        match (parts.next(), parts.next()) {
            (Some(t), Some(v)) => {
                minutes.push(t.trim().parse().map_err(|e| Error::Parse {
                    line: line_num,
                    msg: format!("bad time '{t}': {e}"),
                })?);
                eta.push(v.trim().parse().map_err(|e| Error::Parse {
                    line: line_num,
                    msg: format!("bad eta '{v}': {e}"),
                })?);
            }
            _ => {
                return Err(Error::Parse {
                    line: line_num,
                    msg: "expected 't_min,eta_m'".to_string(),
                })
            }
        }
    }
    GaugeSeries::new(minutes, eta, run_stage)
}

/// K square waves: intervals in integer minutes since the first wave starts,
/// and each wave's height deficit relative to the tallest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavePattern {
    #[serde(rename = "source")]
    source_label: String,
    intervals: Vec<(u32, u32)>,
    offsets: Vec<f64>,
    duration: u32,
}

impl WavePattern {
    pub fn new(intervals: Vec<(u32, u32)>, offsets: Vec<f64>, source_label: &str) -> Result<Self> {
        let duration = intervals.last().map(|&(_, t)| t).unwrap_or(0);
        let p = Self {
            source_label: source_label.to_string(),
            intervals,
            offsets,
            duration,
        };
        p.validate()?;
        Ok(p)
    }

    /// Single contiguous wave `[0, width]` with zero offset.
    pub fn single(width_minutes: u32, source_label: &str) -> Result<Self> {
        Self::new(vec![(0, width_minutes)], vec![0.0], source_label)
    }

    pub fn validate(&self) -> Result<()> {
        if self.intervals.is_empty() {
            return Err(Error::InvalidPattern("no waves".to_string()));
        }
        if self.intervals.len() != self.offsets.len() {
            return Err(Error::InvalidPattern(format!(
                "{} intervals but {} offsets",
                self.intervals.len(),
                self.offsets.len()
            )));
        }
        if self.intervals[0].0 != 0 {
            return Err(Error::InvalidPattern(format!(
                "first wave must start at 0, starts at {}",
                self.intervals[0].0
            )));
        }
        for &(s, t) in &self.intervals {
            if s >= t {
                return Err(Error::InvalidPattern(format!(
                    "interval [{s}, {t}] is empty"
                )));
            }
        }
        for pair in self.intervals.windows(2) {
            if pair[0].1 > pair[1].0 {
                return Err(Error::InvalidPattern(format!(
                    "intervals [{}, {}] and [{}, {}] overlap",
                    pair[0].0, pair[0].1, pair[1].0, pair[1].1
                )));
            }
        }
        if self.offsets.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::InvalidPattern(
                "offsets must be finite and >= 0".to_string(),
            ));
        }
        let min_offset = self.offsets.iter().copied().fold(f64::INFINITY, f64::min);
        if min_offset.abs() > 1e-12 {
            return Err(Error::InvalidPattern(format!(
                "tallest wave must have zero offset, smallest offset is {min_offset}"
            )));
        }
        if self.duration != self.intervals.last().expect("non-empty").1 {
            return Err(Error::InvalidPattern(format!(
                "duration {} does not equal the last interval end {}",
                self.duration,
                self.intervals.last().expect("non-empty").1
            )));
        }
        Ok(())
    }

    pub fn source_label(&self) -> &str {
        &self.source_label
    }

    pub fn intervals(&self) -> &[(u32, u32)] {
        &self.intervals
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn duration_minutes(&self) -> u32 {
        self.duration
    }

    pub fn wave_count(&self) -> usize {
        self.intervals.len()
    }

    pub fn max_offset(&self) -> f64 {
        self.offsets.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    /// Reference 7-wave pattern recorded at the Crescent City harbor gauge
    /// for the AASZe02 source. Shipped as data; the generating gauge series
    /// is not redistributable.
    pub fn aasze02() -> Self {
        Self::new(
            vec![
                (0, 42),
                (84, 124),
                (160, 202),
                (243, 275),
                (309, 325),
                (342, 349),
                (372, 396),
            ],
            vec![0.561, 0.498, 0.517, 0.782, 0.876, 1.450, 0.000],
            "AASZe02",
        )
        .expect("reference pattern is valid")
    }
}

/// How each wave's interval is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum WidthRule {
    /// Span of contiguous samples exceeding half the wave's crest height.
    #[default]
    HalfAmplitude,
    /// Span of the thresholded run itself.
    FullRun,
}

/// Tunables for [`extract_pattern`]. All three knobs are exposed on the CLI.
#[derive(Debug, Clone)]
pub struct ExtractParams {
    /// Candidate waves must exceed this fraction of the tallest crest.
    pub threshold_fraction: f64,
    /// Runs separated by less than this many minutes merge into one wave.
    pub min_gap_minutes: f64,
    pub width_rule: WidthRule,
    /// Label stored on the resulting pattern.
    pub source: String,
}

impl Default for ExtractParams {
    fn default() -> Self {
        Self {
            threshold_fraction: 0.25,
            min_gap_minutes: 20.0,
            width_rule: WidthRule::HalfAmplitude,
            source: "extracted".to_string(),
        }
    }
}

/// Reduce a gauge series to a square-wave pattern.
///
/// Candidate waves are maximal runs with `eta > threshold_fraction * H`
/// (H the tallest crest); nearby runs merge per `min_gap_minutes`; each
/// wave's interval follows the width rule, rounded outward to whole minutes.
/// Negative excursions never form waves. Times are rebased so the first
/// wave starts at 0.
pub fn extract_pattern(g: &GaugeSeries, params: &ExtractParams) -> Result<WavePattern> {
    if !(params.threshold_fraction > 0.0 && params.threshold_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold_fraction must be in (0, 1), got {}",
            params.threshold_fraction
        )));
    }
    if !(params.min_gap_minutes >= 0.0) {
        return Err(Error::InvalidParameter(
            "min_gap_minutes must be >= 0".to_string(),
        ));
    }
    let eta = g.eta();
    let times = g.minutes();
    let h = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(h > 0.0) {
        return Err(Error::NoPositiveCrest);
    }
    let threshold = params.threshold_fraction * h;

    // Maximal sample runs above the detection threshold.
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start: Option<usize> = None;
    for (i, &v) in eta.iter().enumerate() {
        if v > threshold {
            start.get_or_insert(i);
        } else if let Some(s) = start.take() {
            runs.push((s, i - 1));
        }
    }
    if let Some(s) = start {
        runs.push((s, eta.len() - 1));
    }

    // Merge runs separated by less than the minimum gap.
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for run in runs {
        match merged.last_mut() {
            Some(prev) if times[run.0] - times[prev.1] < params.min_gap_minutes => {
                prev.1 = run.1;
            }
            _ => merged.push(run),
        }
    }

    // Interval and crest height per wave.
    let mut waves: Vec<(i64, i64, f64)> = Vec::new();
    for (lo, hi) in merged {
        let crest = (lo..=hi)
            .max_by(|&a, &b| eta[a].partial_cmp(&eta[b]).expect("finite"))
            .expect("non-empty run");
        // max_by returns the last maximum; take the earliest.
        let crest = (lo..=hi).find(|&i| eta[i] == eta[crest]).expect("present");
        let h_k = eta[crest];
        let (first, last) = match params.width_rule {
            WidthRule::FullRun => (lo, hi),
            WidthRule::HalfAmplitude => {
                let level = h_k / 2.0;
                let mut l = crest;
                while l > 0 && eta[l - 1] > level {
                    l -= 1;
                }
                let mut r = crest;
                while r + 1 < eta.len() && eta[r + 1] > level {
                    r += 1;
                }
                (l, r)
            }
        };
        let s = times[first].floor() as i64;
        let mut t = times[last].ceil() as i64;
        if t == s {
            t = s + 1;
        }
        waves.push((s, t, h_k));
    }

    // Half-amplitude spans of neighboring waves can overlap; coalesce.
    waves.sort_by_key(|w| w.0);
    let mut disjoint: Vec<(i64, i64, f64)> = Vec::new();
    for w in waves {
        match disjoint.last_mut() {
            Some(prev) if w.0 < prev.1 => {
                prev.1 = prev.1.max(w.1);
                prev.2 = prev.2.max(w.2);
            }
            _ => disjoint.push(w),
        }
    }

    let t0 = disjoint[0].0;
    let intervals: Vec<(u32, u32)> = disjoint
        .iter()
        .map(|&(s, t, _)| ((s - t0) as u32, (t - t0) as u32))
        .collect();
    let offsets: Vec<f64> = disjoint.iter().map(|&(_, _, hk)| h - hk).collect();
    WavePattern::new(intervals, offsets, &params.source)
}

/// Minute-sampled proxy tsunami: amplitude `a_g`, exponentially decaying
/// envelope, fixed period, spanning `[0, T_G]` inclusive.
pub fn proxy_pattern(a_g: f64, gp: &GMethodParams) -> Result<GaugeSeries> {
    if !(a_g > 0.0) || !a_g.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "proxy amplitude must be > 0, got {a_g}"
        )));
    }
    gp.validate()?;
    let n = gp.t_g_minutes as usize + 1;
    let mut minutes = Vec::with_capacity(n);
    let mut eta = Vec::with_capacity(n);
    for t in 0..n {
        let t = t as f64;
        minutes.push(t);
        eta.push(
            a_g * (-t / gp.efold_minutes).exp()
                * (2.0 * std::f64::consts::PI * t / gp.period_minutes).cos(),
        );
    }
    GaugeSeries::new(minutes, eta, 0.0)
}

/// Contiguous window width covering the tallest wave and every wave whose
/// height is within `near_equal_margin` of it.
pub fn recommend_dt(p: &WavePattern, near_equal_margin: f64) -> u32 {
    let mut earliest = u32::MAX;
    let mut latest = 0u32;
    for (&(s, t), &d) in p.intervals().iter().zip(p.offsets()) {
        if d <= near_equal_margin {
            earliest = earliest.min(s);
            latest = latest.max(t);
        }
    }
    latest - earliest
}
