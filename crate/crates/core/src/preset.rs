//! Site parameter bundles: datums, regression constants, exceedance levels,
//! and recommended window widths per source.
//!
//! Presets are data files, not code; new sites need a JSON file, not a
//! rebuild. Lookup order for a preset name: an existing file path, then
//! `<name>.json` in each directory on `TIDEPROB_PRESET_PATH`, then the
//! built-in set (currently `crescent_city`).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ccdf::GMethodParams;
use crate::error::{Error, Result};
use crate::hazard::ExceedanceLevels;
use crate::tide::TidalDatums;

/// Environment variable holding a colon-separated preset search path.
pub const PRESET_PATH_ENV: &str = "TIDEPROB_PRESET_PATH";

const CRESCENT_CITY_JSON: &str = include_str!("../presets/crescent_city.json");

/// Recommended contiguous window widths per tsunami source.
///
/// `units_assumed` flags that the unit interpretation is a working
/// convention rather than a property of the underlying study data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendedDt {
    pub units: String,
    pub units_assumed: bool,
    pub per_source: BTreeMap<String, f64>,
}

/// Everything site-specific the pipeline needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SitePreset {
    pub name: String,
    pub datums: TidalDatums,
    pub g_params: GMethodParams,
    levels: Vec<f64>,
    pub recommended_dt: Option<RecommendedDt>,
}

impl SitePreset {
    pub fn from_json(text: &str) -> Result<Self> {
        let preset: Self = serde_json::from_str(text)?;
        preset.validate()?;
        Ok(preset)
    }

    pub fn validate(&self) -> Result<()> {
        self.datums.validate()?;
        self.g_params.validate()?;
        ExceedanceLevels::new(self.levels.clone())?;
        Ok(())
    }

    pub fn levels(&self) -> ExceedanceLevels {
        ExceedanceLevels::new(self.levels.clone()).expect("validated on construction")
    }

    /// Built-in preset for Crescent City, CA.
    pub fn crescent_city() -> Self {
        Self::from_json(CRESCENT_CITY_JSON).expect("embedded preset is valid")
    }

    /// Resolve a preset by file path, search path, or built-in name.
    pub fn load(name_or_path: &str) -> Result<Self> {
        let direct = Path::new(name_or_path);
        if direct.is_file() {
            return Self::from_json(&std::fs::read_to_string(direct)?);
        }
        if let Ok(search) = std::env::var(PRESET_PATH_ENV) {
            for dir in search.split(':').filter(|d| !d.is_empty()) {
                let candidate = Path::new(dir).join(format!("{name_or_path}.json"));
                if candidate.is_file() {
                    return Self::from_json(&std::fs::read_to_string(candidate)?);
                }
            }
        }
        match name_or_path {
            "crescent_city" => Ok(Self::crescent_city()),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }
}
