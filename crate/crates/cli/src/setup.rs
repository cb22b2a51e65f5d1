//! Config loading: defaults, then an optional file, then `--set` overrides.

use std::collections::BTreeMap;
use std::path::Path;

use d2d_offload::{ParamSet, Result, SystemConfig};

pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<SystemConfig> {
    let mut params = SystemConfig::default().to_params();
    if let Some(p) = path {
        params.merge(&ParamSet::from_file(p)?);
    }
    for o in overrides {
        params.set_assignment(o)?;
    }
    SystemConfig::validate(&params)
}

/// `cfg` with `overrides` applied and revalidated.
pub fn apply_overrides(cfg: &SystemConfig, overrides: &BTreeMap<String, String>) -> Result<SystemConfig> {
    if overrides.is_empty() {
        return Ok(cfg.clone());
    }
    let mut params = cfg.to_params();
    params.merge(&ParamSet::from_map(overrides)?);
    SystemConfig::validate(&params)
}
