//! Tidal-stage uncertainty for probabilistic tsunami hazard assessment.
//!
//! Given the time history of the tide at a site and per-location tables of
//! how a simulated quantity of interest responds to the static tide stage,
//! this crate estimates the conditional probability that the quantity
//! exceeds a threshold when the triggering event arrives at a uniformly
//! random time. The moving parts:
//!
//! * [`tide`] - tide records, harmonic synthesis, site datums.
//! * [`stage`] - the stage-to-QoI response `Z`, its infimum inverse, and
//!   exceedance-interval decomposition for non-monotone responses.
//! * [`pattern`] - square-wave descriptions of tsunami wave trains extracted
//!   from simulated gauges, the 5-day decaying proxy, and window-width
//!   recommendations.
//! * [`ccdf`] - the tide-exceedance CCDFs: instantaneous, sliding-window
//!   (Δt), pattern-weighted, proxy-template, and Gaussian/erf closed form,
//!   with densities and moment summaries.
//! * [`hazard`] - composition into hazard curves and grids, method
//!   comparison, and a brute-force reference evaluator.
//! * [`preset`] - site parameter bundles (datums, regression constants,
//!   exceedance levels) loaded from data files.
//! * [`manifest`] - run provenance written alongside every CLI output.
//!
//! Probabilities refer to a single event; multiply by the event's annual
//! probability to fold a curve into an annual hazard product.

pub mod ccdf;
pub mod error;
pub mod hazard;
pub mod manifest;
pub mod pattern;
pub mod preset;
pub mod stage;
pub mod tide;

pub use ccdf::{
    build_phi0, build_phi_dt, build_phi_g_direct, build_phi_pattern, eval_phi, mofjeld_params,
    moments, phi_erf, phi_infinity, read_ccdf_csv, BinSpec, CcdfTable, GMethodParams,
    MomentSummary,
};
pub use error::{Error, Result};
pub use hazard::{
    compare_fields, hazard_grid, oracle_phi, psi, read_hazard_csv, write_diff_csv,
    write_hazard_csv, DiffSummary, ExceedanceLevels, GridField, HazardCurve, PsiMode,
};
pub use pattern::{
    extract_pattern, proxy_pattern, read_gauge_csv, recommend_dt, ExtractParams, GaugeSeries,
    WavePattern, WidthRule,
};
pub use preset::SitePreset;
pub use stage::{
    build_response, read_ztable_csv, write_ztable_csv, ExceedanceSet, Extrapolation, Location,
    ResponseMode, StageDomain, StageResponse, StageSample,
};
pub use tide::{
    compute_datums, ingest_tide_csv, read_constituents_csv, synthesize_tide, GapPolicy,
    HarmonicConstituent, IngestOptions, TidalDatums, TideRecord,
};
