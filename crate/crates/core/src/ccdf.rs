//! Tide-exceedance CCDFs.
//!
//! Every builder here answers the same question for a family of arrival
//! scenarios: if the event arrives at a uniformly random minute of the
//! record, what is the probability that the (suitably windowed and offset)
//! tide exceeds a stage `xi`?
//!
//! * [`build_phi0`] - instantaneous tide, no window.
//! * [`build_phi_dt`] - maximum over a window of `dt` minutes.
//! * [`build_phi_pattern`] - maximum over a square-wave pattern's intervals,
//!   each shifted down by its height deficit.
//! * [`build_phi_g_direct`] - maximum against the full 5-day decaying proxy
//!   template, per-minute offsets.
//! * [`phi_erf`] / [`mofjeld_params`] - Gaussian closed form from site
//!   regression constants.
//!
//! Construction slides a window one minute at a time, bins each window
//! maximum (a maximum equal to a bin's right edge falls in that bin), and
//! accumulates the cumulative histogram downward. Tables store the CCDF at
//! bin left edges with the companion density. Start times are partitioned
//! across workers; bin counts are integer sums, so results are identical for
//! any worker count.

use std::collections::VecDeque;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::{proxy_pattern, WavePattern};
use crate::tide::{TidalDatums, TideRecord};

/// Start times are processed in fixed-size blocks so that the partitioning
/// (and therefore the output) is independent of the worker count.
const T0_CHUNK: usize = 16_384;

const MAX_BINS: usize = 10_000_000;

/// Uniform binning of the stage axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    origin: f64,
    width: f64,
    n_bins: usize,
}

impl BinSpec {
    pub const DEFAULT_WIDTH: f64 = 0.01;

    pub fn new(origin: f64, width: f64, n_bins: usize) -> Result<Self> {
        if !origin.is_finite() || !width.is_finite() || !(width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bad bin spec: origin {origin}, width {width}"
            )));
        }
        if n_bins == 0 || n_bins > MAX_BINS {
            return Err(Error::InvalidParameter(format!(
                "bin count {n_bins} out of range (1..={MAX_BINS})"
            )));
        }
        Ok(Self {
            origin,
            width,
            n_bins,
        })
    }

    /// Bins spanning `[lo - max_offset - width, hi + width]`, so that the
    /// lowest edge sits below any offset window maximum and the top edge
    /// clears the record maximum.
    pub fn covering(lo: f64, hi: f64, max_offset: f64, width: f64) -> Result<Self> {
        if !(max_offset >= 0.0) || !max_offset.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "max_offset must be >= 0, got {max_offset}"
            )));
        }
        if !(lo <= hi) {
            return Err(Error::InvalidParameter(format!(
                "bin range inverted: [{lo}, {hi}]"
            )));
        }
        let origin = lo - max_offset - width;
        let n_bins = ((hi - origin) / width).ceil() as usize + 1;
        Self::new(origin, width, n_bins)
    }

    /// Convenience form of [`BinSpec::covering`] for a record.
    pub fn for_record(rec: &TideRecord, max_offset: f64, width: f64) -> Result<Self> {
        Self::covering(rec.min_level(), rec.max_level(), max_offset, width)
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn left_edge(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.width
    }

    pub fn right_edge(&self, i: usize) -> f64 {
        self.origin + (i + 1) as f64 * self.width
    }

    pub fn center(&self, i: usize) -> f64 {
        self.origin + (i as f64 + 0.5) * self.width
    }

    /// First bin whose right edge is >= `value` (ties fall in that bin).
    pub fn index_for(&self, value: f64) -> usize {
        let r = ((value - self.origin) / self.width).ceil() as i64 - 1;
        r.clamp(0, self.n_bins as i64 - 1) as usize
    }
}

/// Mean and standard deviation of a CCDF's density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub xi0: f64,
    pub sigma: f64,
}

/// Site constants for the Gaussian closed form: the tide's standard
/// deviation, the two regression triples, and the proxy-template geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GMethodParams {
    pub sigma0: f64,
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
    pub alpha_prime: f64,
    pub beta_prime: f64,
    pub c_prime: f64,
    /// Reference level the amplitude convention is quoted against.
    pub xi_ref: f64,
    /// Coseismic subsidence (positive down); 0 when not modeled.
    pub subsidence: f64,
    pub t_g_minutes: u32,
    pub period_minutes: f64,
    pub efold_minutes: f64,
}

impl GMethodParams {
    /// Published constants for Crescent City, CA.
    pub fn crescent_city() -> Self {
        Self {
            sigma0: 0.638,
            alpha: 0.17,
            beta: 0.858,
            c: 1.044,
            alpha_prime: 0.056,
            beta_prime: 1.119,
            c_prime: 0.707,
            xi_ref: -1.13,
            subsidence: 0.0,
            t_g_minutes: 7200,
            period_minutes: 20.0,
            efold_minutes: 2880.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma0 must be > 0, got {}",
                self.sigma0
            )));
        }
        if self.t_g_minutes == 0 {
            return Err(Error::InvalidParameter("t_g_minutes must be > 0".into()));
        }
        if !(self.period_minutes > 0.0) || !(self.efold_minutes > 0.0) {
            return Err(Error::InvalidParameter(
                "period and e-folding time must be > 0".to_string(),
            ));
        }
        Ok(())
    }
}

/// A binned complementary CDF with its density and window bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct CcdfTable {
    bins: BinSpec,
    phi: Vec<f64>,
    pdf: Vec<f64>,
    n_windows: u64,
    method_tag: String,
    /// Largest window maximum seen during construction; the CCDF is exactly
    /// 0 at and above it. Infinite for tables not built from window maxima.
    upper_support: f64,
}

impl CcdfTable {
    /// Bin window maxima and accumulate the cumulative histogram downward.
    fn from_window_maxima(maxima: &[f64], bins: BinSpec, method_tag: &str) -> Result<Self> {
        if maxima.is_empty() {
            return Err(Error::InvalidTable("no windows".to_string()));
        }
        let mut counts = vec![0u64; bins.n_bins];
        let mut upper_support = f64::NEG_INFINITY;
        for &m in maxima {
            debug_assert!(m.is_finite());
            counts[bins.index_for(m)] += 1;
            if m > upper_support {
                upper_support = m;
            }
        }
        let n = maxima.len() as u64;
        let mut phi = vec![0.0; bins.n_bins];
        let mut pdf = vec![0.0; bins.n_bins];
        let mut above: u64 = 0;
        for i in (0..bins.n_bins).rev() {
            above += counts[i];
            phi[i] = above as f64 / n as f64;
            pdf[i] = counts[i] as f64 / (n as f64 * bins.width);
        }
        Ok(Self {
            bins,
            phi,
            pdf,
            n_windows: n,
            method_tag: method_tag.to_string(),
            upper_support,
        })
    }

    /// Build from explicit CCDF values at the bin left edges; the density is
    /// derived from differences.
    pub fn from_phi(
        bins: BinSpec,
        phi: Vec<f64>,
        n_windows: u64,
        method_tag: &str,
    ) -> Result<Self> {
        if phi.len() != bins.n_bins {
            return Err(Error::InvalidTable(format!(
                "{} phi values for {} bins",
                phi.len(),
                bins.n_bins
            )));
        }
        for (i, &p) in phi.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidTable(format!(
                    "phi[{i}] = {p} outside [0, 1]"
                )));
            }
            if i > 0 && phi[i - 1] < p {
                return Err(Error::InvalidTable(format!(
                    "phi increases at bin {i}: {} -> {p}",
                    phi[i - 1]
                )));
            }
        }
        let mut pdf = vec![0.0; phi.len()];
        for i in 0..phi.len() {
            let next = if i + 1 < phi.len() { phi[i + 1] } else { 0.0 };
            pdf[i] = (phi[i] - next) / bins.width;
        }
        Ok(Self {
            bins,
            phi,
            pdf,
            n_windows,
            method_tag: method_tag.to_string(),
            upper_support: f64::INFINITY,
        })
    }

    /// Discretize the Gaussian closed form onto a bin grid.
    pub fn from_moments_erf(m: &MomentSummary, bins: BinSpec, method_tag: &str) -> Result<Self> {
        let mut phi = Vec::with_capacity(bins.n_bins);
        for i in 0..bins.n_bins {
            phi.push(phi_erf(bins.left_edge(i), m)?);
        }
        Self::from_phi(bins, phi, 0, method_tag)
    }

    pub fn bins(&self) -> BinSpec {
        self.bins
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn pdf(&self) -> &[f64] {
        &self.pdf
    }

    pub fn n_windows(&self) -> u64 {
        self.n_windows
    }

    pub fn method_tag(&self) -> &str {
        &self.method_tag
    }

    /// Support of the table on the stage axis: lowest edge to top right edge.
    pub fn support(&self) -> (f64, f64) {
        (
            self.bins.left_edge(0),
            self.bins.right_edge(self.bins.n_bins - 1),
        )
    }

    /// Stage at and above which the CCDF is exactly zero (the largest window
    /// maximum observed at construction; infinite for synthetic tables).
    pub fn upper_support(&self) -> f64 {
        self.upper_support
    }

    /// Interpolate the CCDF at a stage: stored values at left edges, linear
    /// between them, 1 below the table, 0 above it. At and above the largest
    /// observed window maximum the value is exactly 0 rather than the
    /// interpolation of the final occupied bin.
    pub fn eval(&self, xi: f64) -> f64 {
        if xi >= self.upper_support {
            return 0.0;
        }
        let first = self.bins.left_edge(0);
        let last = self.bins.left_edge(self.bins.n_bins - 1);
        if xi < first {
            return 1.0;
        }
        if xi > last {
            return 0.0;
        }
        let mut i = (((xi - self.bins.origin) / self.bins.width).floor() as i64)
            .clamp(0, self.bins.n_bins as i64 - 1) as usize;
        // Land exactly on stored edges despite floating-point division.
        if i + 1 < self.bins.n_bins && xi >= self.bins.left_edge(i + 1) {
            i += 1;
        } else if xi < self.bins.left_edge(i) && i > 0 {
            i -= 1;
        }
        let frac = (xi - self.bins.left_edge(i)) / self.bins.width;
        let next = if i + 1 < self.bins.n_bins {
            self.phi[i + 1]
        } else {
            0.0
        };
        self.phi[i] + frac * (next - self.phi[i])
    }

    /// Mean and standard deviation of the density.
    ///
    /// Requires the binned mass to account for (almost) all probability;
    /// tables whose support truncates the distribution are rejected.
    pub fn moments(&self) -> Result<MomentSummary> {
        let mut total = 0.0;
        let mut mean = 0.0;
        for i in 0..self.bins.n_bins {
            let mass = self.pdf[i] * self.bins.width;
            total += mass;
            mean += self.bins.center(i) * mass;
        }
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::IncompleteMass(total));
        }
        let mut var = 0.0;
        for i in 0..self.bins.n_bins {
            let mass = self.pdf[i] * self.bins.width;
            let d = self.bins.center(i) - mean;
            var += d * d * mass;
        }
        Ok(MomentSummary {
            xi0: mean,
            sigma: var.sqrt(),
        })
    }

    /// Write as `bin_left_m,phi,pdf_per_m` with metadata comment lines.
    pub fn write_csv<W: Write>(&self, mut out: W, extra_meta: &[(&str, String)]) -> Result<()> {
        writeln!(out, "# method={}", self.method_tag)?;
        writeln!(out, "# n_windows={}", self.n_windows)?;
        writeln!(out, "# bin_width_m={}", self.bins.width)?;
        for (key, value) in extra_meta {
            writeln!(out, "# {key}={value}")?;
        }
        writeln!(out, "bin_left_m,phi,pdf_per_m")?;
        for i in 0..self.bins.n_bins {
            writeln!(
                out,
                "{:.6},{:.6},{:.6}",
                self.bins.left_edge(i),
                self.phi[i],
                self.pdf[i]
            )?;
        }
        Ok(())
    }
}

/// Read a table written by [`CcdfTable::write_csv`].
pub fn read_ccdf_csv<R: BufRead>(reader: R) -> Result<CcdfTable> {
    let mut method = String::from("unknown");
    let mut n_windows: u64 = 0;
    let mut width: Option<f64> = None;
    let mut edges: Vec<f64> = Vec::new();
    let mut phi: Vec<f64> = Vec::new();
    let mut pdf: Vec<f64> = Vec::new();
    let mut saw_header = false;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line_num = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            let rest = rest.trim();
            if let Some((key, value)) = rest.split_once('=') {
                match key.trim() {
                    "method" => method = value.trim().to_string(),
                    "n_windows" => {
                        n_windows = value.trim().parse().map_err(|e| Error::Parse {
                            line: line_num,
                            msg: format!("bad n_windows: {e}"),
                        })?
                    }
                    "bin_width_m" => {
                        width = Some(value.trim().parse().map_err(|e| Error::Parse {
                            line: line_num,
                            msg: format!("bad bin_width_m: {e}"),
                        })?)
                    }
                    _ => {}
                }
            }
            continue;
        }
        if !saw_header {
            if trimmed.to_ascii_lowercase() != "bin_left_m,phi,pdf_per_m" {
                return Err(Error::Parse {
                    line: line_num,
                    msg: format!("expected header 'bin_left_m,phi,pdf_per_m', got '{trimmed}'"),
                });
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_num,
                msg: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse().map_err(|e| Error::Parse {
                line: line_num,
                msg: format!("bad number '{s}': {e}"),
            })
        };
        edges.push(parse(fields[0])?);
        phi.push(parse(fields[1])?);
        pdf.push(parse(fields[2])?);
    }
    if edges.is_empty() {
        return Err(Error::InvalidTable("no bins in file".to_string()));
    }
    let width = width.unwrap_or_else(|| {
        if edges.len() >= 2 {
            edges[1] - edges[0]
        } else {
            BinSpec::DEFAULT_WIDTH
        }
    });
    let bins = BinSpec::new(edges[0], width, edges.len())?;
    // File values are rounded to 6 decimals; keep them as stored.
    let mut table = CcdfTable::from_phi(bins, phi, n_windows, &method)?;
    table.pdf = pdf;
    Ok(table)
}

/// CCDF evaluation as a free function.
pub fn eval_phi(table: &CcdfTable, xi_hat: f64) -> f64 {
    table.eval(xi_hat)
}

/// Moment summary as a free function.
pub fn moments(table: &CcdfTable) -> Result<MomentSummary> {
    table.moments()
}

/// Sliding maxima over a pattern of inclusive intervals with offsets:
/// for each start minute `t0`, `max_k (max_{t in [S_k, T_k]} x[t0+t] - D_k)`.
fn windowed_maxima(levels: &[f64], intervals: &[(u32, u32)], offsets: &[f64]) -> Vec<f64> {
    let duration = intervals.last().map(|&(_, t)| t).unwrap_or(0) as usize;
    let n_windows = levels.len() - duration;
    let mut combined = vec![f64::NEG_INFINITY; n_windows];
    for (&(s, t), &offset) in intervals.iter().zip(offsets) {
        let s = s as usize;
        let t = t as usize;
        let w = t - s + 1;
        combined
            .par_chunks_mut(T0_CHUNK)
            .enumerate()
            .for_each(|(ci, chunk)| {
                let base = ci * T0_CHUNK;
                let lo = base + s;
                let hi = base + chunk.len() - 1 + t;
                let mut deque: VecDeque<usize> = VecDeque::new();
                for i in lo..=hi {
                    while let Some(&back) = deque.back() {
                        if levels[back] <= levels[i] {
                            deque.pop_back();
                        } else {
                            break;
                        }
                    }
                    deque.push_back(i);
                    if i >= lo + w - 1 {
                        let window_start = i + 1 - w;
                        while *deque.front().expect("non-empty") < window_start {
                            deque.pop_front();
                        }
                        let value = levels[*deque.front().expect("non-empty")] - offset;
                        let slot = window_start - s - base;
                        if chunk[slot] < value {
                            chunk[slot] = value;
                        }
                    }
                }
            });
    }
    combined
}

/// Maxima against a dense per-minute offset template:
/// for each `t0`, `max_{t in [0, len-1]} (x[t0+t] - template[t])`.
///
/// Template entries larger than the record's value range are skipped; such
/// terms are bounded above by the record minimum and can never attain the
/// maximum (the `t = 0` term is always at least that).
fn offset_template_maxima(levels: &[f64], template: &[f64]) -> Vec<f64> {
    let duration = template.len() - 1;
    let n_windows = levels.len() - duration;
    let lo = levels.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let useful: Vec<(usize, f64)> = template
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, d)| d <= span)
        .collect();
    debug_assert!(!useful.is_empty());
    let mut combined = vec![f64::NEG_INFINITY; n_windows];
    combined
        .par_chunks_mut(T0_CHUNK)
        .enumerate()
        .for_each(|(ci, chunk)| {
            let base = ci * T0_CHUNK;
            for (j, out) in chunk.iter_mut().enumerate() {
                let t0 = base + j;
                let mut best = f64::NEG_INFINITY;
                for &(m, d) in &useful {
                    let v = levels[t0 + m] - d;
                    if v > best {
                        best = v;
                    }
                }
                *out = best;
            }
        });
    combined
}

/// CCDF of the instantaneous tide (no window).
pub fn build_phi0(rec: &TideRecord, bins: BinSpec) -> Result<CcdfTable> {
    let mut table = build_phi_dt(rec, 0, bins)?;
    table.method_tag = "phi0".to_string();
    Ok(table)
}

/// CCDF of the maximum tide over a sliding window of `dt_minutes`.
pub fn build_phi_dt(rec: &TideRecord, dt_minutes: u32, bins: BinSpec) -> Result<CcdfTable> {
    let n = rec.len();
    if dt_minutes as usize >= n {
        return Err(Error::WindowTooLong {
            window: dt_minutes as usize,
            record: n,
        });
    }
    let maxima = windowed_maxima(rec.levels(), &[(0, dt_minutes)], &[0.0]);
    CcdfTable::from_window_maxima(&maxima, bins, &format!("dt:{dt_minutes}"))
}

/// Degenerate CCDF of an unbounded window: 1 below the highest observable
/// stage, 0 at or above it.
pub fn phi_infinity(xi_hat: f64, datums: &TidalDatums) -> f64 {
    if xi_hat < datums.xi_highest {
        1.0
    } else {
        0.0
    }
}

/// CCDF of the offset maximum over a square-wave pattern.
pub fn build_phi_pattern(rec: &TideRecord, p: &WavePattern, bins: BinSpec) -> Result<CcdfTable> {
    p.validate()?;
    let n = rec.len();
    let duration = p.duration_minutes() as usize;
    if duration >= n {
        return Err(Error::WindowTooLong {
            window: duration,
            record: n,
        });
    }
    let maxima = windowed_maxima(rec.levels(), p.intervals(), p.offsets());
    CcdfTable::from_window_maxima(&maxima, bins, &format!("pattern:{}", p.source_label()))
}

/// CCDF of the tide against the decaying proxy template of amplitude `a_g`:
/// the window maximum of `xi(t0 + t) - D(t)` with `D(t) = a_g - eta(t)`.
pub fn build_phi_g_direct(
    rec: &TideRecord,
    a_g: f64,
    gp: &GMethodParams,
    bins: BinSpec,
) -> Result<CcdfTable> {
    let proxy = proxy_pattern(a_g, gp)?;
    let n = rec.len();
    if proxy.len() > n {
        return Err(Error::WindowTooLong {
            window: proxy.len() - 1,
            record: n,
        });
    }
    let template: Vec<f64> = proxy.eta().iter().map(|&e| a_g - e).collect();
    let maxima = offset_template_maxima(rec.levels(), &template);
    CcdfTable::from_window_maxima(&maxima, bins, &format!("g_direct:{a_g}"))
}

/// Gaussian moments from the site regression constants:
/// `xi0 = C * xi_MHHW * exp(-alpha (A/s0)^beta)` and
/// `sigma = s0 (1 - C' exp(-alpha' (A/s0)^beta'))`.
pub fn mofjeld_params(a_g: f64, gp: &GMethodParams, datums: &TidalDatums) -> Result<MomentSummary> {
    if !(a_g > 0.0) || !a_g.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "amplitude must be > 0, got {a_g}"
        )));
    }
    gp.validate()?;
    let r = a_g / gp.sigma0;
    let xi0 = gp.c * datums.xi_mhhw * (-gp.alpha * r.powf(gp.beta)).exp();
    let sigma = gp.sigma0 * (1.0 - gp.c_prime * (-gp.alpha_prime * r.powf(gp.beta_prime)).exp());
    Ok(MomentSummary { xi0, sigma })
}

/// Gaussian CCDF: `(1 - erf((xi - xi0) / (sqrt(2) sigma))) / 2`.
pub fn phi_erf(xi_hat: f64, m: &MomentSummary) -> Result<f64> {
    if !(m.sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be > 0, got {}",
            m.sigma
        )));
    }
    Ok(0.5 * (1.0 - libm::erf((xi_hat - m.xi0) / (std::f64::consts::SQRT_2 * m.sigma))))
}

/// Proxy amplitude convention: `A = Z(MHHW) + xi_ref - (MHHW - S)`.
pub fn g_amplitude(z_at_mhhw: f64, xi_ref: f64, xi_mhhw: f64, subsidence: f64) -> f64 {
    z_at_mhhw + xi_ref - (xi_mhhw - subsidence)
}

/// Mean of the QoI under the slope-one response: `Z(MHHW) - MHHW + xi0`.
pub fn g_qoi_mean(z_at_mhhw: f64, xi_mhhw: f64, xi0: f64) -> f64 {
    z_at_mhhw - xi_mhhw + xi0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tide::{synthesize_tide, HarmonicConstituent};

    fn assert_close(got: f64, want: f64, tol: f64) {
        assert!(
            (got - want).abs() <= tol,
            "got {got}, want {want} +/- {tol}"
        );
    }

    fn sinusoid_12h(days: f64) -> TideRecord {
        synthesize_tide(&[HarmonicConstituent::new("S2", 1.0, 30.0, 0.0)], days, 0.0).unwrap()
    }

    fn default_bins(rec: &TideRecord, max_offset: f64) -> BinSpec {
        BinSpec::for_record(rec, max_offset, BinSpec::DEFAULT_WIDTH).unwrap()
    }

    fn cc_datums() -> TidalDatums {
        TidalDatums {
            xi_mllw: -1.13,
            xi_mlw: -0.75,
            xi_msl: 0.0,
            xi_mhw: 0.77,
            xi_mhhw: 0.97,
            xi_lowest: -1.83,
            xi_highest: 1.50,
            sigma0: 0.638,
        }
    }

    #[test]
    fn bin_index_ties_fall_in_lower_bin() {
        let bins = BinSpec::new(0.0, 0.5, 4).unwrap();
        assert_eq!(bins.index_for(0.25), 0);
        assert_eq!(bins.index_for(0.5), 0); // exactly the right edge of bin 0
        assert_eq!(bins.index_for(0.75), 1);
        assert_eq!(bins.index_for(1.0), 1);
        assert_eq!(bins.index_for(-3.0), 0);
        assert_eq!(bins.index_for(99.0), 3);
    }

    #[test]
    fn covering_spans_record_and_offsets() {
        let bins = BinSpec::covering(-1.83, 1.5, 1.45, 0.01).unwrap();
        assert!(bins.left_edge(0) < -1.83 - 1.45);
        assert!(bins.left_edge(bins.n_bins() - 1) >= 1.5);
    }

    #[test]
    fn phi0_matches_occupation_fraction_of_sinusoid() {
        let rec = sinusoid_12h(35.0);
        let t = build_phi0(&rec, default_bins(&rec, 0.0)).unwrap();
        assert_close(t.eval(0.0), 0.5, 0.01);
        assert_close(t.eval(0.5), (0.5f64).acos() / std::f64::consts::PI, 0.01);
        assert_eq!(t.eval(rec.max_level()), 0.0);
        assert_eq!(t.n_windows(), rec.len() as u64);
        assert_eq!(t.phi()[0], 1.0);
    }

    #[test]
    fn dt_zero_equals_phi0() {
        let rec = sinusoid_12h(3.0);
        let bins = default_bins(&rec, 0.0);
        let a = build_phi0(&rec, bins).unwrap();
        let b = build_phi_dt(&rec, 0, bins).unwrap();
        assert_eq!(a.phi(), b.phi());
        assert_eq!(a.pdf(), b.pdf());
        assert_eq!(a.n_windows(), b.n_windows());
    }

    #[test]
    fn dt_window_adds_linear_hit_probability_for_periodic_tide() {
        let rec = sinusoid_12h(35.0);
        let t = build_phi_dt(&rec, 72, default_bins(&rec, 0.0)).unwrap();
        let expected = ((0.5f64).acos() / std::f64::consts::PI + 72.0 / 720.0).min(1.0);
        assert_close(t.eval(0.5), expected, 0.01);
    }

    #[test]
    fn dt_of_full_period_saturates_below_crest() {
        let rec = sinusoid_12h(5.0);
        let t = build_phi_dt(&rec, 720, default_bins(&rec, 0.0)).unwrap();
        for i in 0..t.bins().n_bins() {
            let edge = t.bins().left_edge(i);
            if edge < 0.99 {
                assert_eq!(t.phi()[i], 1.0, "phi at edge {edge}");
            }
        }
    }

    #[test]
    fn dt_longer_than_record_is_rejected() {
        let rec = sinusoid_12h(1.0);
        let bins = default_bins(&rec, 0.0);
        assert!(matches!(
            build_phi_dt(&rec, rec.len() as u32, bins),
            Err(Error::WindowTooLong { .. })
        ));
    }

    #[test]
    fn sliding_maxima_match_naive_windows() {
        let rec = sinusoid_12h(2.0);
        let dt = 37u32;
        let got = windowed_maxima(rec.levels(), &[(0, dt)], &[0.0]);
        let n = rec.len() - dt as usize;
        assert_eq!(got.len(), n);
        for t0 in 0..n {
            let naive = rec.levels()[t0..=t0 + dt as usize]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(got[t0], naive, "window at {t0}");
        }
    }

    #[test]
    fn sliding_maxima_cross_chunk_boundaries_exactly() {
        // 28 days = 40320 minutes, several per-worker blocks; each deque
        // restarts at a block boundary and must agree with the naive scan.
        let rec = synthesize_tide(
            &[
                HarmonicConstituent::new("M2", 0.8, 28.9841042, 0.0),
                HarmonicConstituent::new("K1", 0.42, 15.0410686, 70.0),
            ],
            28.0,
            0.0,
        )
        .unwrap();
        let intervals = [(0u32, 42u32), (372, 396)];
        let offsets = [0.5, 0.0];
        let got = windowed_maxima(rec.levels(), &intervals, &offsets);
        assert_eq!(got.len(), rec.len() - 396);
        assert!(got.len() > 2 * T0_CHUNK, "record must span several blocks");
        let levels = rec.levels();
        for t0 in (0..got.len()).step_by(7) {
            let mut naive = f64::NEG_INFINITY;
            for (&(s, t), &d) in intervals.iter().zip(&offsets) {
                for m in s..=t {
                    naive = naive.max(levels[t0 + m as usize] - d);
                }
            }
            assert_eq!(got[t0], naive, "window at {t0}");
        }
        // Dense check around every block boundary.
        for boundary in (T0_CHUNK..got.len()).step_by(T0_CHUNK) {
            for t0 in boundary.saturating_sub(2)..(boundary + 2).min(got.len()) {
                let mut naive = f64::NEG_INFINITY;
                for (&(s, t), &d) in intervals.iter().zip(&offsets) {
                    for m in s..=t {
                        naive = naive.max(levels[t0 + m as usize] - d);
                    }
                }
                assert_eq!(got[t0], naive, "window at block boundary {t0}");
            }
        }
    }

    #[test]
    fn degenerate_single_wave_pattern_equals_dt() {
        let rec = sinusoid_12h(4.0);
        let bins = default_bins(&rec, 0.0);
        for width in [1u32, 24, 137, 720] {
            let p = WavePattern::single(width, "w").unwrap();
            let a = build_phi_pattern(&rec, &p, bins).unwrap();
            let b = build_phi_dt(&rec, width, bins).unwrap();
            assert_eq!(a.phi(), b.phi());
            assert_eq!(a.n_windows(), b.n_windows());
        }
    }

    #[test]
    fn dominated_offsets_reduce_to_tallest_wave() {
        // Offsets far beyond the tide range contribute nothing; the pattern
        // behaves like the tallest wave alone, which on the shifted record
        // is a plain dt window.
        let rec = sinusoid_12h(6.0);
        let bins = default_bins(&rec, 10.0);
        let p = WavePattern::new(vec![(0, 42), (372, 396)], vec![10.0, 0.0], "dom").unwrap();
        let a = build_phi_pattern(&rec, &p, bins).unwrap();
        let shifted = rec.slice(372).unwrap();
        let b = build_phi_dt(&shifted, 24, bins).unwrap();
        assert_eq!(a.phi(), b.phi());
        assert_eq!(a.n_windows(), b.n_windows());
    }

    #[test]
    fn pattern_is_sandwiched_between_dt_bounds() {
        // Each wave window sits inside [t0, t0 + duration] with a nonnegative
        // offset, so the whole-duration window bounds the pattern from above
        // exactly (same start times). The tallest wave's width bounds it from
        // below up to the start times the shorter window has and the pattern
        // does not; allow that boundary share.
        let rec = synthesize_tide(
            &[
                HarmonicConstituent::new("M2", 0.8, 28.9841042, 0.0),
                HarmonicConstituent::new("K1", 0.42, 15.0410686, 30.0),
            ],
            45.0,
            0.0,
        )
        .unwrap();
        let p = WavePattern::aasze02();
        let bins = default_bins(&rec, p.max_offset());
        let pat = build_phi_pattern(&rec, &p, bins).unwrap();
        let whole = build_phi_dt(&rec, p.duration_minutes(), bins).unwrap();
        let tallest_width = p
            .intervals()
            .iter()
            .zip(p.offsets())
            .find(|(_, &d)| d == 0.0)
            .map(|(&(s, t), _)| t - s)
            .unwrap();
        let tallest = build_phi_dt(&rec, tallest_width, bins).unwrap();
        let slack = p.duration_minutes() as f64 / pat.n_windows() as f64;
        for i in 0..bins.n_bins() {
            assert!(
                pat.phi()[i] <= whole.phi()[i],
                "upper bound fails at bin {i}"
            );
            assert!(
                tallest.phi()[i] <= pat.phi()[i] + slack,
                "lower bound fails at bin {i}: {} vs {}",
                tallest.phi()[i],
                pat.phi()[i]
            );
        }
    }

    #[test]
    fn pattern_longer_than_record_is_rejected() {
        let rec = sinusoid_12h(1.0);
        let bins = default_bins(&rec, 0.0);
        let p = WavePattern::single(2000, "long").unwrap();
        assert!(matches!(
            build_phi_pattern(&rec, &p, bins),
            Err(Error::WindowTooLong { .. })
        ));
    }

    #[test]
    fn phi_infinity_is_a_step_at_the_record_maximum() {
        let d = cc_datums();
        assert_eq!(phi_infinity(d.xi_highest - 0.01, &d), 1.0);
        assert_eq!(phi_infinity(d.xi_highest, &d), 0.0);
        assert_eq!(phi_infinity(-10.0, &d), 1.0);
    }

    #[test]
    fn g_direct_dominates_phi0_for_large_amplitude() {
        let rec = sinusoid_12h(30.0);
        let gp = GMethodParams::crescent_city();
        let bins = default_bins(&rec, 2.0 * 20.0);
        let g = build_phi_g_direct(&rec, 20.0, &gp, bins).unwrap();
        let p0 = build_phi0(&rec, bins).unwrap();
        for i in 0..bins.n_bins() {
            assert!(
                g.phi()[i] >= p0.phi()[i] - 1e-12,
                "bin {i}: {} < {}",
                g.phi()[i],
                p0.phi()[i]
            );
        }
    }

    #[test]
    fn g_direct_pruning_matches_unpruned_evaluation() {
        let rec = sinusoid_12h(2.0);
        let gp = GMethodParams {
            t_g_minutes: 300,
            efold_minutes: 100.0,
            ..GMethodParams::crescent_city()
        };
        let a_g = 2.5;
        let bins = default_bins(&rec, 2.0 * a_g);
        let table = build_phi_g_direct(&rec, a_g, &gp, bins).unwrap();

        let proxy = proxy_pattern(a_g, &gp).unwrap();
        let template: Vec<f64> = proxy.eta().iter().map(|&e| a_g - e).collect();
        let n = rec.len() - (template.len() - 1);
        let mut maxima = Vec::with_capacity(n);
        for t0 in 0..n {
            let mut best = f64::NEG_INFINITY;
            for (m, d) in template.iter().enumerate() {
                best = best.max(rec.levels()[t0 + m] - d);
            }
            maxima.push(best);
        }
        let want = CcdfTable::from_window_maxima(&maxima, bins, "naive").unwrap();
        assert_eq!(table.phi(), want.phi());
    }

    #[test]
    fn g_direct_requires_record_longer_than_template() {
        let rec = sinusoid_12h(3.0); // 4320 < 7201
        let gp = GMethodParams::crescent_city();
        let bins = default_bins(&rec, 8.0);
        assert!(matches!(
            build_phi_g_direct(&rec, 3.92, &gp, bins),
            Err(Error::WindowTooLong { .. })
        ));
    }

    #[test]
    fn mofjeld_reproduces_published_moments() {
        let gp = GMethodParams::crescent_city();
        let d = cc_datums();
        let m = mofjeld_params(3.92, &gp, &d).unwrap();
        assert_close(m.xi0, 0.45, 0.01);
        assert_close(m.sigma, 0.34, 0.01);
        let m = mofjeld_params(14.18, &gp, &d).unwrap();
        assert_close(m.xi0, 0.09, 0.01);
        assert_close(m.sigma, 0.56, 0.01);
        let m = mofjeld_params(0.30, &gp, &d).unwrap();
        assert_close(m.xi0, 0.93, 0.01);
        assert_close(m.sigma, 0.20, 0.01);
    }

    #[test]
    fn mofjeld_mean_approaches_mhhw_for_vanishing_amplitude() {
        let gp = GMethodParams {
            c: 1.0,
            ..GMethodParams::crescent_city()
        };
        let d = cc_datums();
        let m = mofjeld_params(1e-9, &gp, &d).unwrap();
        assert_close(m.xi0, d.xi_mhhw, 1e-6);
    }

    #[test]
    fn mofjeld_rejects_nonpositive_amplitude() {
        let gp = GMethodParams::crescent_city();
        assert!(mofjeld_params(0.0, &gp, &cc_datums()).is_err());
    }

    /// Standard normal upper tail by Simpson quadrature, independent of erf.
    fn normal_tail_quadrature(z: f64) -> f64 {
        let (a, b) = (z, z + 12.0);
        let n = 20_000usize;
        let h = (b - a) / n as f64;
        let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut sum = pdf(a) + pdf(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            sum += pdf(x) * if i % 2 == 0 { 2.0 } else { 4.0 };
        }
        sum * h / 3.0
    }

    #[test]
    fn phi_erf_matches_quadrature_oracle() {
        let m = MomentSummary {
            xi0: 0.0,
            sigma: 1.0,
        };
        let got = phi_erf(1.0, &m).unwrap();
        assert_close(got, normal_tail_quadrature(1.0), 1e-6);
        assert_close(got, 0.15866, 1e-4);
        assert_close(
            phi_erf(
                0.3,
                &MomentSummary {
                    xi0: 0.45,
                    sigma: 0.34,
                },
            )
            .unwrap(),
            normal_tail_quadrature((0.3 - 0.45) / 0.34),
            1e-6,
        );
    }

    #[test]
    fn phi_erf_boundary_values() {
        let m = MomentSummary {
            xi0: 0.45,
            sigma: 0.34,
        };
        assert_eq!(phi_erf(0.45, &m).unwrap(), 0.5);
        assert_eq!(phi_erf(f64::INFINITY, &m).unwrap(), 0.0);
        assert_eq!(phi_erf(f64::NEG_INFINITY, &m).unwrap(), 1.0);
        assert!(phi_erf(
            0.0,
            &MomentSummary {
                xi0: 0.0,
                sigma: 0.0
            }
        )
        .is_err());
    }

    #[test]
    fn moments_recover_discretized_gaussian() {
        let m = MomentSummary {
            xi0: 0.3,
            sigma: 0.5,
        };
        let bins = BinSpec::new(-2.7, 0.01, 600).unwrap();
        let t = CcdfTable::from_moments_erf(&m, bins, "erf").unwrap();
        let got = t.moments().unwrap();
        assert_close(got.xi0, 0.3, 0.01);
        assert_close(got.sigma, 0.5, 0.01);
    }

    #[test]
    fn moments_of_point_mass() {
        let bins = BinSpec::new(0.695, 0.01, 2).unwrap();
        let t = CcdfTable::from_phi(bins, vec![1.0, 0.0], 1, "point").unwrap();
        let m = t.moments().unwrap();
        assert_close(m.xi0, 0.7, 1e-12);
        assert_eq!(m.sigma, 0.0);
    }

    #[test]
    fn moments_of_sinusoid_occupation_are_arcsine() {
        let rec = sinusoid_12h(35.0);
        let t = build_phi0(&rec, default_bins(&rec, 0.0)).unwrap();
        let m = t.moments().unwrap();
        assert_close(m.xi0, 0.0, 0.01);
        assert_close(m.sigma, std::f64::consts::FRAC_1_SQRT_2, 0.01);
    }

    #[test]
    fn moments_reject_truncated_support() {
        let bins = BinSpec::new(0.0, 0.01, 10).unwrap();
        let phi = vec![0.6; 10];
        let t = CcdfTable::from_phi(bins, phi, 1, "trunc").unwrap();
        assert!(matches!(t.moments(), Err(Error::IncompleteMass(_))));
    }

    #[test]
    fn eval_interpolates_between_edges() {
        let bins = BinSpec::new(0.0, 0.1, 3).unwrap();
        let t = CcdfTable::from_phi(bins, vec![1.0, 0.6, 0.0], 1, "x").unwrap();
        assert_eq!(t.eval(0.0), 1.0);
        assert_eq!(t.eval(0.1), 0.6);
        assert_eq!(t.eval(0.2), 0.0);
        assert_close(t.eval(0.05), 0.8, 1e-12);
        assert_eq!(t.eval(-1.0), 1.0);
        assert_eq!(t.eval(5.0), 0.0);
        assert_eq!(t.eval(f64::NEG_INFINITY), 1.0);
        assert_eq!(t.eval(f64::INFINITY), 0.0);
    }

    #[test]
    fn eval_hits_stored_edges_exactly() {
        let rec = sinusoid_12h(3.0);
        let t = build_phi0(&rec, default_bins(&rec, 0.0)).unwrap();
        for i in [0usize, 1, 17, t.bins().n_bins() - 1] {
            assert_eq!(t.eval(t.bins().left_edge(i)), t.phi()[i], "edge {i}");
        }
    }

    #[test]
    fn from_phi_rejects_bad_tables() {
        let bins = BinSpec::new(0.0, 0.1, 3).unwrap();
        assert!(CcdfTable::from_phi(bins, vec![1.0, 0.6], 1, "x").is_err());
        assert!(CcdfTable::from_phi(bins, vec![1.0, 0.6, 0.7], 1, "x").is_err());
        assert!(CcdfTable::from_phi(bins, vec![1.2, 0.6, 0.0], 1, "x").is_err());
    }

    #[test]
    fn ccdf_csv_round_trips_through_fixed_format() {
        let rec = sinusoid_12h(2.0);
        let t = build_phi_dt(&rec, 30, default_bins(&rec, 0.0)).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf, &[]).unwrap();
        let back = read_ccdf_csv(std::io::Cursor::new(&buf)).unwrap();
        assert_eq!(back.method_tag(), t.method_tag());
        assert_eq!(back.n_windows(), t.n_windows());
        assert_eq!(back.bins().n_bins(), t.bins().n_bins());
        for i in 0..t.bins().n_bins() {
            assert_close(back.phi()[i], t.phi()[i], 5e-7);
        }
    }

    #[test]
    fn g_amplitude_and_qoi_mean_conventions() {
        assert_close(g_amplitude(4.89, 0.0, 0.97, 0.0), 3.92, 1e-12);
        assert_close(g_qoi_mean(4.89, 0.97, 0.45), 4.37, 1e-12);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn small_record(seed_levels: Vec<f64>) -> TideRecord {
            let start = chrono::DateTime::parse_from_rfc3339("2000-01-01T00:00:00Z")
                .unwrap()
                .with_timezone(&chrono::Utc);
            TideRecord::new(start, seed_levels, "prop").unwrap()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn phi_dt_is_monotone_in_dt(
                levels in proptest::collection::vec(-1.5f64..1.5, 200..600),
                dt1 in 0u32..80,
                dt2 in 0u32..80,
            ) {
                let rec = small_record(levels);
                let bins = BinSpec::for_record(&rec, 0.0, 0.05).unwrap();
                let (lo, hi) = if dt1 <= dt2 { (dt1, dt2) } else { (dt2, dt1) };
                let a = build_phi_dt(&rec, lo, bins).unwrap();
                let b = build_phi_dt(&rec, hi, bins).unwrap();
                for i in 0..bins.n_bins() {
                    prop_assert!(a.phi()[i] <= b.phi()[i] + 1e-12);
                }
            }

            #[test]
            fn tables_are_nonincreasing_in_unit_range(
                levels in proptest::collection::vec(-2.0f64..2.0, 100..400),
                dt in 0u32..50,
            ) {
                let rec = small_record(levels);
                let bins = BinSpec::for_record(&rec, 0.0, 0.05).unwrap();
                let t = build_phi_dt(&rec, dt, bins).unwrap();
                for w in t.phi().windows(2) {
                    prop_assert!(w[0] >= w[1]);
                }
                prop_assert!(t.phi().iter().all(|p| (0.0..=1.0).contains(p)));
                prop_assert!(t.pdf().iter().all(|p| *p >= 0.0));
            }

            #[test]
            fn erf_table_symmetry(x in 0.0f64..3.0) {
                let m = MomentSummary { xi0: 0.45, sigma: 0.34 };
                let sum = phi_erf(m.xi0 - x, &m).unwrap() + phi_erf(m.xi0 + x, &m).unwrap();
                prop_assert!((sum - 1.0).abs() < 1e-12);
            }
        }
    }
}
