//! Composition of a stage response with a tide CCDF into exceedance
//! probabilities, grid sweeps, and method comparison.
//!
//! The probability that the QoI exceeds a level is the probability that the
//! tide is high enough when the event arrives: `psi(q) = phi(inverse_z(q))`.
//! For non-monotone responses the interval-sum mode integrates the CCDF over
//! the exact exceedance set instead of its infimum alone.

use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::ccdf::{BinSpec, CcdfTable};
use crate::error::{Error, Result};
use crate::pattern::WavePattern;
use crate::stage::{Location, StageDomain, StageResponse};
use crate::tide::TideRecord;

/// QoI thresholds a hazard curve is evaluated at.
#[derive(Debug, Clone, PartialEq)]
pub struct ExceedanceLevels {
    levels: Vec<f64>,
}

impl ExceedanceLevels {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidParameter("no exceedance levels".to_string()));
        }
        if levels.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter(
                "levels must be finite and >= 0".to_string(),
            ));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "levels must be strictly ascending".to_string(),
            ));
        }
        Ok(Self { levels })
    }

    /// The standard 35 levels: 0.0–2.0 by 0.1, 2.5–5.5 by 0.5, 6.0–12.0 by 1.0.
    pub fn standard() -> Self {
        let mut tenths: Vec<u32> = (0..=20).collect();
        tenths.extend((25..=55).step_by(5));
        tenths.extend((60..=120).step_by(10));
        Self {
            levels: tenths.into_iter().map(|t| t as f64 / 10.0).collect(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

impl Default for ExceedanceLevels {
    fn default() -> Self {
        Self::standard()
    }
}

/// Exceedance probabilities at each level for one location.
#[derive(Debug, Clone, PartialEq)]
pub struct HazardCurve {
    pub location: Location,
    pub levels: ExceedanceLevels,
    pub probabilities: Vec<f64>,
    pub method_tag: String,
}

/// Hazard curves over a set of locations sharing one level grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub locations: Vec<Location>,
    pub levels: ExceedanceLevels,
    /// One probability row per location, one column per level.
    pub rows: Vec<Vec<f64>>,
    pub method_tag: String,
}

/// Signed per-cell differences between two grid fields, with the extremes.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffSummary {
    pub locations: Vec<Location>,
    pub levels: ExceedanceLevels,
    /// `a - b`, one row per location.
    pub rows: Vec<Vec<f64>>,
    pub max_diff: f64,
    pub min_diff: f64,
}

/// How exceedance probabilities are composed from the response and the CCDF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PsiMode {
    /// Evaluate the CCDF at the infimum inverse (conservative for
    /// non-monotone responses).
    #[default]
    Infimum,
    /// Sum the CCDF drop over every exceedance interval.
    IntervalSum,
}

/// Exceedance probability curve for one location.
///
/// Interval endpoints on the stage-domain boundary use the exact boundary
/// probabilities (1 at the bottom, 0 at the top) when the response exceeds
/// the level there: the tide never leaves the domain, so both modes agree
/// bit-exactly on monotone responses.
pub fn psi(
    sr: &StageResponse,
    phi: &CcdfTable,
    levels: &ExceedanceLevels,
    mode: PsiMode,
    domain: StageDomain,
) -> HazardCurve {
    let probabilities = levels
        .values()
        .iter()
        .map(|&q| match mode {
            PsiMode::Infimum => {
                let x = sr.inverse_z(q, domain);
                if x == f64::NEG_INFINITY {
                    1.0
                } else if x == f64::INFINITY {
                    0.0
                } else {
                    phi.eval(x)
                }
            }
            PsiMode::IntervalSum => {
                let set = sr.exceedance_intervals(q, domain);
                let mut p = 0.0;
                for &(a, b) in &set.intervals {
                    let left = if a == domain.lo() && sr.eval_z(domain.lo()) > q {
                        1.0
                    } else {
                        phi.eval(a)
                    };
                    let right = if b == domain.hi() && sr.eval_z(domain.hi()) > q {
                        0.0
                    } else {
                        phi.eval(b)
                    };
                    p += left - right;
                }
                p
            }
        })
        .collect();
    HazardCurve {
        location: sr.location(),
        levels: levels.clone(),
        probabilities,
        method_tag: phi.method_tag().to_string(),
    }
}

/// Evaluate [`psi`] per location; rows preserve input order regardless of
/// the worker count.
pub fn hazard_grid(
    responses: &[StageResponse],
    phi: &CcdfTable,
    levels: &ExceedanceLevels,
    mode: PsiMode,
    domain: StageDomain,
) -> Result<GridField> {
    if responses.is_empty() {
        return Err(Error::InvalidParameter("no locations".to_string()));
    }
    let curves: Vec<HazardCurve> = responses
        .par_iter()
        .map(|sr| psi(sr, phi, levels, mode, domain))
        .collect();
    Ok(GridField {
        locations: curves.iter().map(|c| c.location).collect(),
        levels: levels.clone(),
        rows: curves.into_iter().map(|c| c.probabilities).collect(),
        method_tag: phi.method_tag().to_string(),
    })
}

/// Element-wise signed differences `a - b` with global extremes.
pub fn compare_fields(a: &GridField, b: &GridField) -> Result<DiffSummary> {
    if a.levels != b.levels {
        return Err(Error::ShapeMismatch(
            "fields use different exceedance levels".to_string(),
        ));
    }
    if a.locations.len() != b.locations.len() {
        return Err(Error::ShapeMismatch(format!(
            "fields cover {} vs {} locations",
            a.locations.len(),
            b.locations.len()
        )));
    }
    for (la, lb) in a.locations.iter().zip(&b.locations) {
        if la != lb {
            return Err(Error::ShapeMismatch(format!(
                "location mismatch: ({}, {}) vs ({}, {})",
                la.lon, la.lat, lb.lon, lb.lat
            )));
        }
    }
    let mut rows = Vec::with_capacity(a.rows.len());
    let mut max_diff = f64::NEG_INFINITY;
    let mut min_diff = f64::INFINITY;
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        let row: Vec<f64> = ra.iter().zip(rb).map(|(x, y)| x - y).collect();
        for &d in &row {
            max_diff = max_diff.max(d);
            min_diff = min_diff.min(d);
        }
        rows.push(row);
    }
    Ok(DiffSummary {
        locations: a.locations.clone(),
        levels: a.levels.clone(),
        rows,
        max_diff,
        min_diff,
    })
}

const ORACLE_LIMIT_MINUTES: usize = 10_000;

/// Brute-force reference for the pattern CCDF: direct triple loop over start
/// times, waves, and in-wave minutes, with the same binning rules and no
/// sliding-window machinery. Guarded to small records.
pub fn oracle_phi(rec: &TideRecord, p: &WavePattern, bins: BinSpec) -> Result<CcdfTable> {
    if rec.len() > ORACLE_LIMIT_MINUTES {
        return Err(Error::OracleGuard {
            got: rec.len(),
            limit: ORACLE_LIMIT_MINUTES,
        });
    }
    p.validate()?;
    let duration = p.duration_minutes() as usize;
    if duration >= rec.len() {
        return Err(Error::WindowTooLong {
            window: duration,
            record: rec.len(),
        });
    }
    let levels = rec.levels();
    let n_windows = rec.len() - duration;
    let mut counts = vec![0u64; bins.n_bins()];
    for t0 in 0..n_windows {
        let mut value = f64::NEG_INFINITY;
        for (&(s, t), &d) in p.intervals().iter().zip(p.offsets()) {
            for m in s..=t {
                let v = levels[t0 + m as usize] - d;
                if v > value {
                    value = v;
                }
            }
        }
        counts[bins.index_for(value)] += 1;
    }
    let mut phi = vec![0.0; bins.n_bins()];
    let mut above = 0u64;
    for i in (0..bins.n_bins()).rev() {
        above += counts[i];
        phi[i] = above as f64 / n_windows as f64;
    }
    CcdfTable::from_phi(bins, phi, n_windows as u64, "oracle")
}

/// Write a grid field as `lon,lat,bathy_m,p_gt_<level>,...` CSV.
pub fn write_hazard_csv<W: Write>(field: &GridField, mut out: W) -> Result<()> {
    writeln!(out, "# method={}", field.method_tag)?;
    write!(out, "lon,lat,bathy_m")?;
    for level in field.levels.values() {
        write!(out, ",p_gt_{level}")?;
    }
    writeln!(out)?;
    for (loc, row) in field.locations.iter().zip(&field.rows) {
        write!(out, "{:.6},{:.6},{:.6}", loc.lon, loc.lat, loc.bathy_m)?;
        for p in row {
            write!(out, ",{p:.6}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Read a grid field written by [`write_hazard_csv`].
pub fn read_hazard_csv<R: BufRead>(reader: R) -> Result<GridField> {
    let mut method_tag = String::from("unknown");
    let mut levels: Option<ExceedanceLevels> = None;
    let mut locations = Vec::new();
    let mut rows = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line_num = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            if let Some((key, value)) = rest.trim().split_once('=') {
                if key.trim() == "method" {
                    method_tag = value.trim().to_string();
                }
            }
            continue;
        }
        if levels.is_none() {
            let fields: Vec<&str> = trimmed.split(',').collect();
            if fields.len() < 4
                || fields[0] != "lon"
                || fields[1] != "lat"
                || fields[2] != "bathy_m"
            {
                return Err(Error::Parse {
                    line: line_num,
                    msg: format!("bad hazard header '{trimmed}'"),
                });
            }
            let mut parsed = Vec::new();
            for f in &fields[3..] {
                let Some(level) = f.strip_prefix("p_gt_") else {
                    return Err(Error::Parse {
                        line: line_num,
                        msg: format!("bad level column '{f}'"),
                    });
                };
                parsed.push(level.parse().map_err(|e| Error::Parse {
                    line: line_num,
                    msg: format!("bad level '{level}': {e}"),
                })?);
            }
            levels = Some(ExceedanceLevels::new(parsed)?);
            continue;
        }
        let levels_ref = levels.as_ref().expect("header parsed");
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 3 + levels_ref.len() {
            return Err(Error::Parse {
                line: line_num,
                msg: format!(
                    "expected {} fields, got {}",
                    3 + levels_ref.len(),
                    fields.len()
                ),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse().map_err(|e| Error::Parse {
                line: line_num,
                msg: format!("bad number '{s}': {e}"),
            })
        };
        locations.push(Location::new(
            parse(fields[0])?,
            parse(fields[1])?,
            parse(fields[2])?,
        ));
        rows.push(
            fields[3..]
                .iter()
                .map(|s| parse(s))
                .collect::<Result<Vec<f64>>>()?,
        );
    }
    let levels = levels.ok_or_else(|| Error::InvalidTable("empty hazard file".to_string()))?;
    if rows.is_empty() {
        return Err(Error::InvalidTable("hazard file has no rows".to_string()));
    }
    Ok(GridField {
        locations,
        levels,
        rows,
        method_tag,
    })
}

/// Write a diff as `lon,lat,bathy_m,d_<level>,...` CSV with a summary footer.
pub fn write_diff_csv<W: Write>(diff: &DiffSummary, mut out: W) -> Result<()> {
    write!(out, "lon,lat,bathy_m")?;
    for level in diff.levels.values() {
        write!(out, ",d_{level}")?;
    }
    writeln!(out)?;
    for (loc, row) in diff.locations.iter().zip(&diff.rows) {
        write!(out, "{:.6},{:.6},{:.6}", loc.lon, loc.lat, loc.bathy_m)?;
        for d in row {
            write!(out, ",{d:.6}")?;
        }
        writeln!(out)?;
    }
    writeln!(
        out,
        "# max_diff={:.6}, min_diff={:.6}",
        diff.max_diff, diff.min_diff
    )?;
    Ok(())
}
