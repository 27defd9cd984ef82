//! The per-location stage response `Z`: how the simulated quantity of
//! interest depends on the static tide stage the simulation was run at.
//!
//! A response is either a piecewise-linear interpolant through several
//! (stage, QoI) run results, or a slope-one line anchored at a single run.
//! Inversion follows the conservative convention: `inverse_z(q)` is the
//! lowest stage above which the response exceeds `q` over the evaluation
//! domain, and [`StageResponse::exceedance_intervals`] produces the exact
//! open-interval decomposition of the exceedance set for non-monotone
//! responses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tide::TidalDatums;

/// Grid-point identity carried through hazard outputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub lon: f64,
    pub lat: f64,
    pub bathy_m: f64,
}

impl Location {
    pub fn new(lon: f64, lat: f64, bathy_m: f64) -> Self {
        Self { lon, lat, bathy_m }
    }
}

/// One simulation result: the QoI produced at a static run stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageSample {
    /// Static tide stage of the run, meters relative to MSL.
    pub stage: f64,
    /// Simulated quantity of interest at that stage.
    pub qoi: f64,
}

impl StageSample {
    pub fn new(stage: f64, qoi: f64) -> Self {
        Self { stage, qoi }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResponseMode {
    /// Interpolate between two or more run results.
    PiecewiseLinear,
    /// Single run; any stage change shifts the QoI one-for-one.
    SlopeOneSingleRun,
}

/// Behavior outside the sampled stage span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Extrapolation {
    /// Continue the terminal segment's slope.
    #[default]
    LinearContinuation,
    /// Hold the end value.
    Clamp,
}

/// Closed stage interval over which inversion is performed, normally
/// `[xi_lowest, xi_highest]` from the site datums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageDomain {
    lo: f64,
    hi: f64,
}

impl StageDomain {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || !(lo < hi) {
            return Err(Error::InvalidParameter(format!(
                "stage domain must be finite with lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn from_datums(datums: &TidalDatums) -> Result<Self> {
        Self::new(datums.xi_lowest, datums.xi_highest)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }
}

/// Disjoint ascending open stage intervals where the response exceeds a level.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExceedanceSet {
    pub intervals: Vec<(f64, f64)>,
}

impl ExceedanceSet {
    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }
}

/// A per-location stage-to-QoI response with its evaluation policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageResponse {
    location: Location,
    samples: Vec<StageSample>,
    mode: ResponseMode,
    extrapolation: Extrapolation,
    /// Lower bound applied to extrapolated values (piecewise mode only).
    floor: Option<f64>,
}

/// Build a response from run results. Samples are sorted by stage; duplicate
/// stages are rejected. Slope-one mode anchors at the highest-stage sample.
pub fn build_response(
    location: Location,
    samples: Vec<StageSample>,
    mode: ResponseMode,
    extrapolation: Extrapolation,
) -> Result<StageResponse> {
    StageResponse::new(location, samples, mode, extrapolation)
}

impl StageResponse {
    pub fn new(
        location: Location,
        mut samples: Vec<StageSample>,
        mode: ResponseMode,
        extrapolation: Extrapolation,
    ) -> Result<Self> {
        let need = match mode {
            ResponseMode::PiecewiseLinear => 2,
            ResponseMode::SlopeOneSingleRun => 1,
        };
        if samples.len() < need {
            return Err(Error::TooFewStageSamples {
                need,
                got: samples.len(),
            });
        }
        for s in &samples {
            if !s.stage.is_finite() || !s.qoi.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "non-finite stage sample ({}, {})",
                    s.stage, s.qoi
                )));
            }
        }
        samples.sort_by(|a, b| a.stage.partial_cmp(&b.stage).expect("finite stages"));
        for pair in samples.windows(2) {
            if pair[0].stage == pair[1].stage {
                return Err(Error::DuplicateStage(pair[0].stage));
            }
        }
        Ok(Self {
            location,
            samples,
            mode,
            extrapolation,
            floor: None,
        })
    }

    /// Clamp extrapolated values from below, e.g. at the dry floor of a
    /// depth QoI. Piecewise mode only, and the floor may not exceed any
    /// sampled QoI (that would make the response discontinuous).
    pub fn with_floor(mut self, floor: f64) -> Result<Self> {
        if self.mode == ResponseMode::SlopeOneSingleRun {
            return Err(Error::InvalidParameter(
                "a QoI floor is incompatible with slope-one mode".to_string(),
            ));
        }
        let min_qoi = self
            .samples
            .iter()
            .map(|s| s.qoi)
            .fold(f64::INFINITY, f64::min);
        if floor > min_qoi {
            return Err(Error::InvalidParameter(format!(
                "floor {floor} exceeds the smallest sampled QoI {min_qoi}"
            )));
        }
        self.floor = Some(floor);
        Ok(self)
    }

    pub fn location(&self) -> Location {
        self.location
    }

    pub fn samples(&self) -> &[StageSample] {
        &self.samples
    }

    pub fn mode(&self) -> ResponseMode {
        self.mode
    }

    pub fn extrapolation(&self) -> Extrapolation {
        self.extrapolation
    }

    /// True when the sampled QoIs are nondecreasing in stage.
    pub fn is_monotone(&self) -> bool {
        self.samples.windows(2).all(|p| p[0].qoi <= p[1].qoi)
    }

    /// Evaluate `Z` at a stage.
    pub fn eval_z(&self, stage: f64) -> f64 {
        match self.mode {
            ResponseMode::SlopeOneSingleRun => {
                let anchor = self.samples.last().expect("validated non-empty");
                anchor.qoi + (stage - anchor.stage)
            }
            ResponseMode::PiecewiseLinear => {
                let s = &self.samples;
                let n = s.len();
                if stage <= s[0].stage {
                    let v = match self.extrapolation {
                        Extrapolation::Clamp => s[0].qoi,
                        Extrapolation::LinearContinuation => {
                            s[0].qoi + (stage - s[0].stage) * segment_slope(&s[0], &s[1])
                        }
                    };
                    return self.apply_floor(v);
                }
                if stage >= s[n - 1].stage {
                    let v = match self.extrapolation {
                        Extrapolation::Clamp => s[n - 1].qoi,
                        Extrapolation::LinearContinuation => {
                            s[n - 1].qoi
                                + (stage - s[n - 1].stage) * segment_slope(&s[n - 2], &s[n - 1])
                        }
                    };
                    return self.apply_floor(v);
                }
                let hi = s.partition_point(|p| p.stage <= stage);
                let (a, b) = (&s[hi - 1], &s[hi]);
                a.qoi + (stage - a.stage) * (b.qoi - a.qoi) / (b.stage - a.stage)
            }
        }
    }

    fn apply_floor(&self, v: f64) -> f64 {
        match self.floor {
            Some(f) => v.max(f),
            None => v,
        }
    }

    /// Vertices of the exact piecewise-linear form of `Z` over the domain,
    /// including extrapolation endpoints and any floor kinks, so that
    /// interval arithmetic agrees with [`Self::eval_z`] everywhere.
    fn effective_polyline(&self, domain: StageDomain) -> Vec<(f64, f64)> {
        let (lo, hi) = (domain.lo, domain.hi);
        let mut pts: Vec<(f64, f64)> = Vec::new();
        pts.push((lo, self.eval_z(lo)));
        if self.mode == ResponseMode::PiecewiseLinear {
            let s = &self.samples;
            let first = s[0];
            let last = s[s.len() - 1];
            // Floor kink in the lower extension.
            if let (Some(f), Extrapolation::LinearContinuation) = (self.floor, self.extrapolation) {
                let slope = segment_slope(&s[0], &s[1]);
                if slope != 0.0 {
                    let xf = first.stage + (f - first.qoi) / slope;
                    if xf > lo && xf < first.stage.min(hi) {
                        pts.push((xf, f));
                    }
                }
            }
            for p in s {
                if p.stage > lo && p.stage < hi {
                    pts.push((p.stage, p.qoi));
                }
            }
            // Floor kink in the upper extension.
            if let (Some(f), Extrapolation::LinearContinuation) = (self.floor, self.extrapolation) {
                let slope = segment_slope(&s[s.len() - 2], &s[s.len() - 1]);
                if slope != 0.0 {
                    let xf = last.stage + (f - last.qoi) / slope;
                    if xf > last.stage.max(lo) && xf < hi {
                        pts.push((xf, f));
                    }
                }
            }
        }
        pts.push((hi, self.eval_z(hi)));
        pts
    }

    /// Exact open-interval decomposition of `{stage in domain : Z(stage) > q}`.
    ///
    /// Exact equality `Z == q` is excluded. Intervals touching only at a
    /// point where `Z == q` stay separate.
    pub fn exceedance_intervals(&self, q: f64, domain: StageDomain) -> ExceedanceSet {
        let pts = self.effective_polyline(domain);
        let mut intervals: Vec<(f64, f64)> = Vec::new();
        for seg in pts.windows(2) {
            let (x0, y0) = seg[0];
            let (x1, y1) = seg[1];
            if x1 <= x0 {
                continue;
            }
            let above0 = y0 > q;
            let above1 = y1 > q;
            let run = if y0 == y1 {
                if above0 {
                    Some((x0, x1))
                } else {
                    None
                }
            } else {
                let xc = x0 + (q - y0) * (x1 - x0) / (y1 - y0);
                match (above0, above1) {
                    (true, true) => Some((x0, x1)),
                    (true, false) => Some((x0, xc)),
                    (false, true) => Some((xc, x1)),
                    (false, false) => None,
                }
            };
            let Some((a, b)) = run else { continue };
            if !(a < b) {
                continue;
            }
            // Extend the previous run through a shared vertex that exceeds q.
            if let Some(last) = intervals.last_mut() {
                if last.1 == a && above0 {
                    last.1 = b;
                    continue;
                }
            }
            intervals.push((a, b));
        }
        debug_assert!(intervals.windows(2).all(|w| w[0].1 <= w[1].0));
        ExceedanceSet { intervals }
    }

    /// The lowest stage in the domain above which `Z` exceeds `q`.
    ///
    /// Returns `-inf` when `Z > q` over the whole domain and `+inf` when
    /// `Z > q` nowhere on it.
    pub fn inverse_z(&self, q: f64, domain: StageDomain) -> f64 {
        let set = self.exceedance_intervals(q, domain);
        if set.is_empty() {
            return f64::INFINITY;
        }
        let min_z = self
            .effective_polyline(domain)
            .iter()
            .map(|&(_, y)| y)
            .fold(f64::INFINITY, f64::min);
        if min_z > q {
            return f64::NEG_INFINITY;
        }
        set.intervals[0].0
    }
}

fn segment_slope(a: &StageSample, b: &StageSample) -> f64 {
    (b.qoi - a.qoi) / (b.stage - a.stage)
}

/// Parse a Z-table: `lon,lat,bathy_m,stage:<s1>,stage:<s2>,...`, one location
/// per row, missing cells forbidden. A single stage column yields slope-one
/// responses anchored there; two or more yield piecewise-linear responses.
pub fn read_ztable_csv<R: std::io::BufRead>(
    reader: R,
    extrapolation: Extrapolation,
    floor: Option<f64>,
) -> Result<Vec<StageResponse>> {
    let mut stages: Option<Vec<f64>> = None;
    let mut responses = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line_num = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if stages.is_none() {
            let fields: Vec<&str> = trimmed.split(',').collect();
            if fields.len() < 4
                || fields[0] != "lon"
                || fields[1] != "lat"
                || fields[2] != "bathy_m"
            {
                return Err(Error::Parse {
                    line: line_num,
                    msg: format!("bad z-table header '{trimmed}'"),
                });
            }
            let mut parsed = Vec::new();
            for f in &fields[3..] {
                let Some(stage) = f.strip_prefix("stage:") else {
                    return Err(Error::Parse {
                        line: line_num,
                        msg: format!("bad stage column '{f}'"),
                    });
                };
                parsed.push(stage.parse().map_err(|e| Error::Parse {
                    line: line_num,
                    msg: format!("bad stage '{stage}': {e}"),
                })?);
            }
            stages = Some(parsed);
            continue;
        }
        let stages_ref = stages.as_ref().expect("header parsed");
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 3 + stages_ref.len() {
            return Err(Error::Parse {
                line: line_num,
                msg: format!(
                    "expected {} fields, got {} (missing cells are forbidden)",
                    3 + stages_ref.len(),
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
        let location = Location::new(parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
        let samples: Vec<StageSample> = stages_ref
            .iter()
            .zip(&fields[3..])
            .map(|(&stage, qoi)| Ok(StageSample::new(stage, parse(qoi)?)))
            .collect::<Result<_>>()?;
        let mode = if samples.len() == 1 {
            ResponseMode::SlopeOneSingleRun
        } else {
            ResponseMode::PiecewiseLinear
        };
        let mut sr = build_response(location, samples, mode, extrapolation)?;
        if let Some(f) = floor {
            sr = sr.with_floor(f)?;
        }
        responses.push(sr);
    }
    if responses.is_empty() {
        return Err(Error::InvalidTable("z-table has no rows".to_string()));
    }
    Ok(responses)
}

/// Write responses as a Z-table (requires a shared stage grid).
pub fn write_ztable_csv<W: std::io::Write>(responses: &[StageResponse], mut out: W) -> Result<()> {
    let first = responses
        .first()
        .ok_or_else(|| Error::InvalidTable("no responses".to_string()))?;
    let stages: Vec<f64> = first.samples().iter().map(|s| s.stage).collect();
    write!(out, "lon,lat,bathy_m")?;
    for s in &stages {
        write!(out, ",stage:{s}")?;
    }
    writeln!(out)?;
    for sr in responses {
        let own: Vec<f64> = sr.samples().iter().map(|s| s.stage).collect();
        if own != stages {
            return Err(Error::ShapeMismatch(
                "responses do not share one stage grid".to_string(),
            ));
        }
        let loc = sr.location();
        write!(out, "{:.6},{:.6},{:.6}", loc.lon, loc.lat, loc.bathy_m)?;
        for s in sr.samples() {
            write!(out, ",{:.6}", s.qoi)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loc() -> Location {
        Location::new(-124.18, 41.74, -5.0)
    }

    fn piecewise(knots: &[(f64, f64)], extrapolation: Extrapolation) -> StageResponse {
        build_response(
            loc(),
            knots.iter().map(|&(s, q)| StageSample::new(s, q)).collect(),
            ResponseMode::PiecewiseLinear,
            extrapolation,
        )
        .unwrap()
    }

    fn slope_one(anchor_stage: f64, anchor_qoi: f64) -> StageResponse {
        build_response(
            loc(),
            vec![StageSample::new(anchor_stage, anchor_qoi)],
            ResponseMode::SlopeOneSingleRun,
            Extrapolation::LinearContinuation,
        )
        .unwrap()
    }

    fn domain(lo: f64, hi: f64) -> StageDomain {
        StageDomain::new(lo, hi).unwrap()
    }

    #[test]
    fn slope_one_shifts_anchor_by_stage_difference() {
        let sr = slope_one(0.97, 4.89);
        assert!((sr.eval_z(0.0) - 3.92).abs() < 1e-12);
        assert!((sr.eval_z(-1.13) - 2.79).abs() < 1e-12);
    }

    #[test]
    fn piecewise_interpolates_segment_midpoint() {
        let sr = piecewise(
            &[(-1.13, 2.0), (0.0, 2.0), (0.97, 3.0)],
            Extrapolation::LinearContinuation,
        );
        assert!((sr.eval_z(0.485) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn duplicate_stage_is_rejected() {
        let samples = vec![StageSample::new(0.0, 1.0), StageSample::new(0.0, 2.0)];
        assert!(matches!(
            build_response(
                loc(),
                samples,
                ResponseMode::PiecewiseLinear,
                Extrapolation::Clamp
            ),
            Err(Error::DuplicateStage(_))
        ));
    }

    #[test]
    fn empty_samples_are_rejected() {
        assert!(matches!(
            build_response(
                loc(),
                vec![],
                ResponseMode::SlopeOneSingleRun,
                Extrapolation::Clamp
            ),
            Err(Error::TooFewStageSamples { .. })
        ));
    }

    #[test]
    fn knot_hit_returns_stored_qoi_exactly() {
        let sr = piecewise(&[(-1.13, 2.0), (0.97, 4.1)], Extrapolation::Clamp);
        assert_eq!(sr.eval_z(0.97), 4.1);
        assert_eq!(sr.eval_z(-1.13), 2.0);
    }

    #[test]
    fn linear_continuation_extends_end_segment() {
        // End slope (4.1 - 2.0) / (0.97 + 1.13) = 1.0.
        let sr = piecewise(
            &[(-1.13, 2.0), (0.97, 4.1)],
            Extrapolation::LinearContinuation,
        );
        assert!((sr.eval_z(1.5) - 4.63).abs() < 1e-12);
    }

    #[test]
    fn clamp_holds_end_values() {
        let sr = piecewise(&[(-1.13, 2.0), (0.97, 4.1)], Extrapolation::Clamp);
        assert_eq!(sr.eval_z(5.0), 4.1);
        assert_eq!(sr.eval_z(-5.0), 2.0);
    }

    #[test]
    fn inverse_on_monotone_segment() {
        let sr = piecewise(&[(-1.13, 2.0), (0.97, 4.1)], Extrapolation::Clamp);
        let x = sr.inverse_z(3.05, domain(-1.13, 0.97));
        assert!((x - (-0.08)).abs() < 1e-12, "got {x}");
    }

    #[test]
    fn inverse_is_infinite_when_never_exceeded() {
        let sr = piecewise(&[(-1.13, 2.0), (0.97, 4.1)], Extrapolation::Clamp);
        assert_eq!(sr.inverse_z(10.0, domain(-1.13, 0.97)), f64::INFINITY);
    }

    #[test]
    fn inverse_is_negative_infinite_when_always_exceeded() {
        let sr = piecewise(&[(-1.13, 2.0), (0.97, 4.1)], Extrapolation::Clamp);
        assert_eq!(sr.inverse_z(-5.0, domain(-1.13, 0.97)), f64::NEG_INFINITY);
    }

    #[test]
    fn triangle_response_yields_single_interior_interval() {
        let sr = piecewise(&[(-1.0, 1.0), (0.0, 3.0), (1.0, 1.0)], Extrapolation::Clamp);
        let set = sr.exceedance_intervals(2.0, domain(-1.0, 1.0));
        assert_eq!(set.intervals.len(), 1);
        let (a, b) = set.intervals[0];
        assert!((a + 0.5).abs() < 1e-12);
        assert!((b - 0.5).abs() < 1e-12);
    }

    #[test]
    fn monotone_exceedance_is_single_interval_to_domain_top() {
        let sr = piecewise(&[(-1.13, 2.0), (0.97, 4.1)], Extrapolation::Clamp);
        let d = domain(-1.13, 0.97);
        let set = sr.exceedance_intervals(3.05, d);
        assert_eq!(set.intervals.len(), 1);
        assert_eq!(set.intervals[0].0, sr.inverse_z(3.05, d));
        assert_eq!(set.intervals[0].1, d.hi());
    }

    #[test]
    fn level_above_global_max_gives_empty_set() {
        let sr = piecewise(&[(-1.0, 1.0), (0.0, 3.0), (1.0, 1.0)], Extrapolation::Clamp);
        assert!(sr.exceedance_intervals(3.5, domain(-1.0, 1.0)).is_empty());
    }

    #[test]
    fn w_shaped_response_produces_two_intervals() {
        let sr = piecewise(
            &[(-2.0, 3.0), (-1.0, 0.0), (0.0, 3.0), (1.0, 0.0), (2.0, 3.0)],
            Extrapolation::Clamp,
        );
        let set = sr.exceedance_intervals(1.5, domain(-2.0, 2.0));
        assert_eq!(set.intervals.len(), 3);
        for w in set.intervals.windows(2) {
            assert!(w[0].1 <= w[1].0);
        }
    }

    #[test]
    fn floor_clamps_extrapolated_tail_consistently() {
        // Downward upper extension crosses 0 at stage 3.
        let sr = piecewise(&[(0.0, 2.0), (1.0, 1.0)], Extrapolation::LinearContinuation)
            .with_floor(0.0)
            .unwrap();
        assert_eq!(sr.eval_z(4.0), 0.0);
        assert!((sr.eval_z(2.0) - 0.0).abs() < 1e-12);
        let d = domain(-1.0, 5.0);
        // Interval arithmetic must agree with eval_z across the kink.
        let set = sr.exceedance_intervals(0.5, d);
        assert_eq!(set.intervals.len(), 1);
        let (a, b) = set.intervals[0];
        assert_eq!(a, -1.0);
        assert!((b - 1.5).abs() < 1e-12, "got {b}");
        for i in 0..61 {
            // Interior points only; the open decomposition drops boundaries.
            let x = -1.0 + 6.0 * (i as f64 + 0.5) / 61.5;
            let inside = set.intervals.iter().any(|&(a, b)| x > a && x < b);
            assert_eq!(sr.eval_z(x) > 0.5, inside, "at stage {x}");
        }
    }

    #[test]
    fn floor_is_rejected_for_slope_one() {
        let sr = slope_one(0.97, 4.89);
        assert!(sr.with_floor(0.0).is_err());
    }

    #[test]
    fn floor_above_sampled_qoi_is_rejected() {
        let sr = piecewise(&[(0.0, 2.0), (1.0, 1.0)], Extrapolation::LinearContinuation);
        assert!(sr.with_floor(1.5).is_err());
    }

    #[test]
    fn ztable_round_trips_and_rejects_missing_cells() {
        let responses = vec![
            piecewise(
                &[(-1.13, 2.0), (0.0, 2.5), (0.97, 3.0)],
                Extrapolation::Clamp,
            ),
            piecewise(
                &[(-1.13, 1.0), (0.0, 1.5), (0.97, 2.0)],
                Extrapolation::Clamp,
            ),
        ];
        let mut buf = Vec::new();
        write_ztable_csv(&responses, &mut buf).unwrap();
        let back = read_ztable_csv(std::io::Cursor::new(&buf), Extrapolation::Clamp, None).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].samples(), responses[0].samples());

        let bad = "lon,lat,bathy_m,stage:0,stage:1\n1.0,2.0,3.0,0.5\n";
        assert!(read_ztable_csv(
            std::io::Cursor::new(bad.as_bytes()),
            Extrapolation::Clamp,
            None
        )
        .is_err());
    }

    #[test]
    fn single_stage_column_builds_slope_one() {
        let csv = "lon,lat,bathy_m,stage:0.97\n-124.2,41.75,-3.0,4.89\n";
        let responses = read_ztable_csv(
            std::io::Cursor::new(csv.as_bytes()),
            Extrapolation::Clamp,
            None,
        )
        .unwrap();
        assert_eq!(responses[0].mode(), ResponseMode::SlopeOneSingleRun);
        assert!((responses[0].eval_z(0.0) - 3.92).abs() < 1e-12);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn monotone_response() -> impl Strategy<Value = StageResponse> {
            (
                proptest::collection::vec(0.01f64..0.8, 1..6),
                proptest::collection::vec(0.01f64..1.5, 1..6),
                -2.0f64..0.0,
                -1.0f64..3.0,
            )
                .prop_map(|(dx, dq, x0, q0)| {
                    let mut samples = vec![StageSample::new(x0, q0)];
                    let n = dx.len().min(dq.len());
                    let (mut x, mut q) = (x0, q0);
                    for i in 0..n {
                        x += dx[i];
                        q += dq[i];
                        samples.push(StageSample::new(x, q));
                    }
                    build_response(
                        Location::new(0.0, 0.0, 0.0),
                        samples,
                        ResponseMode::PiecewiseLinear,
                        Extrapolation::LinearContinuation,
                    )
                    .unwrap()
                })
        }

        proptest! {
            #[test]
            fn eval_of_inverse_recovers_level(sr in monotone_response(), t in 0.05f64..0.95) {
                let d = StageDomain::new(
                    sr.samples()[0].stage,
                    sr.samples().last().unwrap().stage,
                ).unwrap();
                let (zmin, zmax) = (sr.eval_z(d.lo()), sr.eval_z(d.hi()));
                let q = zmin + t * (zmax - zmin);
                let x = sr.inverse_z(q, d);
                if x.is_finite() && x > d.lo() && x < d.hi() {
                    prop_assert!((sr.eval_z(x) - q).abs() < 1e-9);
                }
            }

            #[test]
            fn inverse_is_monotone_in_level(sr in monotone_response(), a in -1.0f64..4.0, b in -1.0f64..4.0) {
                let d = StageDomain::new(
                    sr.samples()[0].stage - 0.5,
                    sr.samples().last().unwrap().stage + 0.5,
                ).unwrap();
                let (qa, qb) = if a <= b { (a, b) } else { (b, a) };
                prop_assert!(sr.inverse_z(qa, d) <= sr.inverse_z(qb, d));
            }

            #[test]
            fn monotone_set_is_single_interval(sr in monotone_response(), t in 0.05f64..0.95) {
                let d = StageDomain::new(
                    sr.samples()[0].stage,
                    sr.samples().last().unwrap().stage,
                ).unwrap();
                let (zmin, zmax) = (sr.eval_z(d.lo()), sr.eval_z(d.hi()));
                let q = zmin + t * (zmax - zmin);
                let set = sr.exceedance_intervals(q, d);
                if !set.is_empty() {
                    prop_assert_eq!(set.intervals.len(), 1);
                    prop_assert_eq!(set.intervals[0].1, d.hi());
                    let inv = sr.inverse_z(q, d);
                    if inv.is_finite() {
                        prop_assert_eq!(set.intervals[0].0, inv);
                    }
                }
            }

            #[test]
            fn exceedance_length_shrinks_with_level(
                knots in proptest::collection::vec((-2.0f64..2.0, -1.0f64..4.0), 2..7),
                qa in -1.0f64..4.0,
                qb in -1.0f64..4.0,
            ) {
                let mut samples: Vec<StageSample> = Vec::new();
                for (i, &(_, q)) in knots.iter().enumerate() {
                    samples.push(StageSample::new(i as f64 * 0.5 - 1.0, q));
                }
                let sr = build_response(
                    Location::new(0.0, 0.0, 0.0),
                    samples,
                    ResponseMode::PiecewiseLinear,
                    Extrapolation::Clamp,
                ).unwrap();
                let d = StageDomain::new(-1.0, (knots.len() - 1) as f64 * 0.5 - 1.0).unwrap();
                let (lo, hi) = if qa <= qb { (qa, qb) } else { (qb, qa) };
                let len_lo = sr.exceedance_intervals(lo, d).total_length();
                let len_hi = sr.exceedance_intervals(hi, d).total_length();
                prop_assert!(len_hi <= len_lo + 1e-12);
            }

            #[test]
            fn slope_one_differences_are_exact(anchor in -1.0f64..5.0, x1 in -3.0f64..3.0, x2 in -3.0f64..3.0) {
                let sr = build_response(
                    Location::new(0.0, 0.0, 0.0),
                    vec![StageSample::new(0.97, anchor)],
                    ResponseMode::SlopeOneSingleRun,
                    Extrapolation::LinearContinuation,
                ).unwrap();
                let diff = sr.eval_z(x1) - sr.eval_z(x2);
                prop_assert!((diff - (x1 - x2)).abs() < 1e-12);
            }
        }
    }
}
