//! System parameters and the quantities derived from them.
//!
//! Parameters are read from a flat `key = value` text format. Most quantities
//! can be given either in SI units or in the units a datasheet would use
//! (mAh, dBm, MBytes, mW, MHz); everything is converted to SI on validation.
//!
//! | quantity                | SI key                      | alternative key              |
//! |-------------------------|-----------------------------|------------------------------|
//! | user density            | `user_density` (m⁻²)        |                              |
//! | collaboration distance  | `collab_distance_m`         |                              |
//! | battery fraction ρ      | `battery_fraction`          |                              |
//! | bandwidth               | `bandwidth_hz`              | `bandwidth_mhz`              |
//! | noise power             | `noise_power_w`             | `noise_power_dbm`            |
//! | path-loss exponent      | `pathloss_exponent`         |                              |
//! | path-loss gain at 1 m   | `pathloss_gain`             | `pathloss_gain_db`           |
//! | file size               | `file_size_bits`            | `file_size_mbytes` (10⁶ B)   |
//! | catalog size            | `catalog_size`              |                              |
//! | Zipf exponent           | `zipf_exponent`             |                              |
//! | max transmit power      | `max_tx_power_w`            | `max_tx_power_mw`            |
//! | active circuit power    | `tx_circuit_power_w`        | `tx_circuit_power_mw`        |
//! | idle circuit power      | `idle_power_w`              | `idle_power_mw`              |
//! | PA efficiency           | `pa_efficiency`             |                              |
//! | battery capacity        | `battery_capacity_c`        | `battery_capacity_mah`       |
//! | operating voltage       | `operating_voltage_v`       |                              |
//! | cell side               | `cell_side_m`               |                              |
//! | interference truncation | `interference_truncation_m` |                              |
//! | files cached per user   | `cache_slots`               |                              |
//!
//! `#` starts a comment. Setting two keys for the same quantity in one source
//! is an error; a later source (e.g. a `--set` override) replaces an earlier
//! one regardless of which alias either used.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Field {
    UserDensity,
    CollabDistance,
    BatteryFraction,
    Bandwidth,
    NoisePower,
    PathlossExponent,
    PathlossGain,
    FileSize,
    CatalogSize,
    ZipfExponent,
    MaxTxPower,
    TxCircuitPower,
    IdlePower,
    PaEfficiency,
    BatteryCapacity,
    OperatingVoltage,
    CellSide,
    InterferenceTruncation,
    CacheSlots,
}

#[derive(Debug, Clone, Copy)]
enum Unit {
    Si,
    Scale(f64),
    Dbm,
    Db,
}

impl Unit {
    fn to_si(self, v: f64) -> f64 {
        match self {
            Unit::Si => v,
            Unit::Scale(s) => v * s,
            Unit::Dbm => 10f64.powf((v - 30.0) / 10.0),
            Unit::Db => 10f64.powf(v / 10.0),
        }
    }
}

const KEYS: &[(&str, Field, Unit)] = &[
    ("user_density", Field::UserDensity, Unit::Si),
    ("collab_distance_m", Field::CollabDistance, Unit::Si),
    ("battery_fraction", Field::BatteryFraction, Unit::Si),
    ("bandwidth_hz", Field::Bandwidth, Unit::Si),
    ("bandwidth_mhz", Field::Bandwidth, Unit::Scale(1e6)),
    ("noise_power_w", Field::NoisePower, Unit::Si),
    ("noise_power_dbm", Field::NoisePower, Unit::Dbm),
    ("pathloss_exponent", Field::PathlossExponent, Unit::Si),
    ("pathloss_gain", Field::PathlossGain, Unit::Si),
    ("pathloss_gain_db", Field::PathlossGain, Unit::Db),
    ("file_size_bits", Field::FileSize, Unit::Si),
    ("file_size_mbytes", Field::FileSize, Unit::Scale(8e6)),
    ("catalog_size", Field::CatalogSize, Unit::Si),
    ("zipf_exponent", Field::ZipfExponent, Unit::Si),
    ("max_tx_power_w", Field::MaxTxPower, Unit::Si),
    ("max_tx_power_mw", Field::MaxTxPower, Unit::Scale(1e-3)),
    ("tx_circuit_power_w", Field::TxCircuitPower, Unit::Si),
    ("tx_circuit_power_mw", Field::TxCircuitPower, Unit::Scale(1e-3)),
    ("idle_power_w", Field::IdlePower, Unit::Si),
    ("idle_power_mw", Field::IdlePower, Unit::Scale(1e-3)),
    ("pa_efficiency", Field::PaEfficiency, Unit::Si),
    ("battery_capacity_c", Field::BatteryCapacity, Unit::Si),
    ("battery_capacity_mah", Field::BatteryCapacity, Unit::Scale(3.6)),
    ("operating_voltage_v", Field::OperatingVoltage, Unit::Si),
    ("cell_side_m", Field::CellSide, Unit::Si),
    ("interference_truncation_m", Field::InterferenceTruncation, Unit::Si),
    ("cache_slots", Field::CacheSlots, Unit::Si),
];

fn lookup(key: &str) -> Option<(Field, Unit)> {
    KEYS.iter()
        .find(|(k, _, _)| *k == key)
        .map(|&(_, f, u)| (f, u))
}

/// Raw, unvalidated parameters keyed by quantity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSet {
    entries: BTreeMap<Field, (String, String)>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets `key`, replacing whatever alias previously set the same quantity.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        let (field, _) = lookup(key).ok_or_else(|| Error::UnknownKey(key.to_string()))?;
        self.entries
            .insert(field, (key.to_string(), value.trim().to_string()));
        Ok(())
    }

    /// Parses a `key=value` override as given on the command line.
    pub fn set_assignment(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment.split_once('=').ok_or_else(|| Error::Syntax {
            line: 0,
            reason: format!("expected key=value, got `{assignment}`"),
        })?;
        self.set(k, v)
    }

    /// Later entries win.
    pub fn merge(&mut self, other: &ParamSet) {
        for (f, kv) in &other.entries {
            self.entries.insert(*f, kv.clone());
        }
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut set = ParamSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Syntax {
                line: n + 1,
                reason: "expected `key = value`".into(),
            })?;
            let k = k.trim();
            let (field, _) = lookup(k).ok_or_else(|| Error::UnknownKey(k.to_string()))?;
            if let Some((prev, _)) = set.entries.get(&field) {
                return Err(Error::ConflictingKeys(prev.clone(), k.to_string()));
            }
            set.set(k, v)?;
        }
        Ok(set)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Syntax {
            line: 0,
            reason: format!("{}: {e}", path.display()),
        })?;
        Self::parse_str(&text)
    }

    /// Builds a set from a plain map, rejecting two aliases for one quantity.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let mut set = ParamSet::new();
        for (k, v) in map {
            let (field, _) = lookup(k).ok_or_else(|| Error::UnknownKey(k.clone()))?;
            if let Some((prev, _)) = set.entries.get(&field) {
                return Err(Error::ConflictingKeys(prev.clone(), k.clone()));
            }
            set.set(k, v)?;
        }
        Ok(set)
    }

    fn number(&self, field: Field) -> Result<f64> {
        let (key, value) = self.entries.get(&field).ok_or_else(|| {
            let name = KEYS.iter().find(|(_, f, _)| *f == field).unwrap().0;
            Error::MissingKey(name.to_string())
        })?;
        let (_, unit) = lookup(key).expect("stored keys are known");
        let v: f64 = value.parse().map_err(|_| Error::Parse {
            key: key.clone(),
            value: value.clone(),
        })?;
        Ok(unit.to_si(v))
    }

    fn count(&self, field: Field) -> Result<usize> {
        let v = self.number(field)?;
        if v.fract() != 0.0 || v < 0.0 || !v.is_finite() {
            let key = &self.entries[&field].0;
            return Err(Error::InvalidValue(format!("{key} must be a whole number")));
        }
        Ok(v as usize)
    }
}

/// Every physical and system parameter of the model, in SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// λ, users per m².
    pub user_density: f64,
    /// r_c, m.
    pub collab_distance: f64,
    /// ρ, fraction of the battery a helper spends per served request.
    pub battery_fraction: f64,
    /// W, Hz.
    pub bandwidth: f64,
    /// σ², W (total over the band).
    pub noise_power: f64,
    pub pathloss_exponent: f64,
    /// Linear gain at 1 m; received power is P_t·K·h·r^(−α).
    pub pathloss_gain: f64,
    /// F, bits.
    pub file_size: f64,
    pub catalog_size: usize,
    pub zipf_exponent: f64,
    pub max_tx_power: f64,
    pub tx_circuit_power: f64,
    pub idle_power: f64,
    pub pa_efficiency: f64,
    /// Q, coulomb.
    pub battery_capacity: f64,
    pub operating_voltage: f64,
    pub cell_side: f64,
    /// r_max, m. Only used by the α = 2 approximation and its simulator mode.
    pub interference_truncation: f64,
    pub cache_slots: usize,
}

impl Default for SystemConfig {
    /// 500 m cell, λ = 0.01, 20 MHz, −100 dBm noise, 37.6 + 36.8·log10(r) dB
    /// path loss, 200 mW max power, 115.9 mW circuit power, 25 mW idle power,
    /// η = 0.5, 1800 mAh at 4 V, 1000 files of 30 MB with Zipf β = 1.
    fn default() -> Self {
        SystemConfig {
            user_density: 0.01,
            collab_distance: 100.0,
            battery_fraction: 0.01,
            bandwidth: 20e6,
            noise_power: 1e-13,
            pathloss_exponent: 3.68,
            pathloss_gain: 10f64.powf(-3.76),
            file_size: 2.4e8,
            catalog_size: 1000,
            zipf_exponent: 1.0,
            max_tx_power: 0.2,
            tx_circuit_power: 0.1159,
            idle_power: 0.025,
            pa_efficiency: 0.5,
            battery_capacity: 6480.0,
            operating_voltage: 4.0,
            cell_side: 500.0,
            interference_truncation: 100.0,
            cache_slots: 1,
        }
    }
}

/// Quantities derived from a config at a given transmit power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedQuantities {
    /// σ₀² = σ²/(P_t·K).
    pub normalized_noise: f64,
    /// ρ·Q·V₀, J.
    pub budget_joules: f64,
    /// a = F·ln2/(W·ρ·Q·V₀·η), W⁻¹.
    pub a_coeff: f64,
    /// S, m².
    pub cell_area: f64,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidValue(format!("{name} must be positive")))
    }
}

impl SystemConfig {
    /// Validates a parameter set and converts it to SI.
    pub fn validate(params: &ParamSet) -> Result<Self> {
        let cfg = SystemConfig {
            user_density: params.number(Field::UserDensity)?,
            collab_distance: params.number(Field::CollabDistance)?,
            battery_fraction: params.number(Field::BatteryFraction)?,
            bandwidth: params.number(Field::Bandwidth)?,
            noise_power: params.number(Field::NoisePower)?,
            pathloss_exponent: params.number(Field::PathlossExponent)?,
            pathloss_gain: params.number(Field::PathlossGain)?,
            file_size: params.number(Field::FileSize)?,
            catalog_size: params.count(Field::CatalogSize)?,
            zipf_exponent: params.number(Field::ZipfExponent)?,
            max_tx_power: params.number(Field::MaxTxPower)?,
            tx_circuit_power: params.number(Field::TxCircuitPower)?,
            idle_power: params.number(Field::IdlePower)?,
            pa_efficiency: params.number(Field::PaEfficiency)?,
            battery_capacity: params.number(Field::BatteryCapacity)?,
            operating_voltage: params.number(Field::OperatingVoltage)?,
            cell_side: params.number(Field::CellSide)?,
            interference_truncation: params.number(Field::InterferenceTruncation)?,
            cache_slots: params.count(Field::CacheSlots)?,
        };
        cfg.check()?;
        Ok(cfg)
    }

    /// Checks the invariants of an already-built record.
    pub fn check(&self) -> Result<()> {
        positive("user_density", self.user_density)?;
        positive("collab_distance", self.collab_distance)?;
        positive("battery_fraction", self.battery_fraction)?;
        positive("bandwidth", self.bandwidth)?;
        positive("noise_power", self.noise_power)?;
        positive("pathloss_gain", self.pathloss_gain)?;
        positive("file_size", self.file_size)?;
        positive("max_tx_power", self.max_tx_power)?;
        positive("tx_circuit_power", self.tx_circuit_power)?;
        positive("battery_capacity", self.battery_capacity)?;
        positive("operating_voltage", self.operating_voltage)?;
        positive("cell_side", self.cell_side)?;
        positive("interference_truncation", self.interference_truncation)?;
        positive("pa_efficiency", self.pa_efficiency)?;
        if self.pa_efficiency > 1.0 {
            return Err(Error::InvalidValue("pa_efficiency must be at most 1".into()));
        }
        if !(self.pathloss_exponent >= 2.0) || !self.pathloss_exponent.is_finite() {
            return Err(Error::InvalidValue("pathloss_exponent must be at least 2".into()));
        }
        if !(self.idle_power >= 0.0) || !self.idle_power.is_finite() {
            return Err(Error::InvalidValue("idle_power must be non-negative".into()));
        }
        if !(self.zipf_exponent >= 0.0) || !self.zipf_exponent.is_finite() {
            return Err(Error::InvalidValue("zipf_exponent must be non-negative".into()));
        }
        if self.catalog_size < 1 {
            return Err(Error::InvalidValue("catalog_size must be at least 1".into()));
        }
        if self.cache_slots < 1 {
            return Err(Error::InvalidValue("cache_slots must be at least 1".into()));
        }
        if self.cache_slots > self.catalog_size {
            return Err(Error::InvalidValue("cache_slots cannot exceed catalog_size".into()));
        }
        let budget = self.battery_budget();
        if !(budget > 0.0 && budget.is_finite()) {
            return Err(Error::InvalidValue("battery budget must be finite and positive".into()));
        }
        Ok(())
    }

    /// The analytical model caches exactly one file per user.
    pub fn require_single_slot(&self) -> Result<()> {
        if self.cache_slots != 1 {
            return Err(Error::InvalidValue(format!(
                "analytic results need cache_slots = 1, got {}",
                self.cache_slots
            )));
        }
        Ok(())
    }

    /// Full battery energy Q·V₀, J.
    pub fn battery_energy(&self) -> f64 {
        self.battery_capacity * self.operating_voltage
    }

    /// ρ·Q·V₀, J.
    pub fn battery_budget(&self) -> f64 {
        self.battery_fraction * self.battery_energy()
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_side * self.cell_side
    }

    pub fn with_battery_fraction(&self, rho: f64) -> Self {
        SystemConfig {
            battery_fraction: rho,
            ..self.clone()
        }
    }

    pub fn with_collab_distance(&self, rc: f64) -> Self {
        SystemConfig {
            collab_distance: rc,
            ..self.clone()
        }
    }

    pub fn derived(&self, tx_power: f64) -> Result<DerivedQuantities> {
        positive("tx_power", tx_power)?;
        Ok(DerivedQuantities {
            normalized_noise: self.noise_power / (tx_power * self.pathloss_gain),
            budget_joules: self.battery_budget(),
            a_coeff: self.a_coeff(self.battery_fraction),
            cell_area: self.cell_area(),
        })
    }

    /// a = F·ln2/(W·ρ·Q·V₀·η) for an explicit ρ.
    pub fn a_coeff(&self, rho: f64) -> f64 {
        self.file_size * std::f64::consts::LN_2
            / (self.bandwidth * rho * self.battery_energy() * self.pa_efficiency)
    }

    /// σ²/(P_t·K).
    pub fn normalized_noise(&self, tx_power: f64) -> f64 {
        self.noise_power / (tx_power * self.pathloss_gain)
    }

    /// SI-keyed parameters; validating them reproduces `self` exactly.
    pub fn to_params(&self) -> ParamSet {
        let mut p = ParamSet::new();
        let pairs: [(&str, String); 19] = [
            ("user_density", self.user_density.to_string()),
            ("collab_distance_m", self.collab_distance.to_string()),
            ("battery_fraction", self.battery_fraction.to_string()),
            ("bandwidth_hz", self.bandwidth.to_string()),
            ("noise_power_w", self.noise_power.to_string()),
            ("pathloss_exponent", self.pathloss_exponent.to_string()),
            ("pathloss_gain", self.pathloss_gain.to_string()),
            ("file_size_bits", self.file_size.to_string()),
            ("catalog_size", self.catalog_size.to_string()),
            ("zipf_exponent", self.zipf_exponent.to_string()),
            ("max_tx_power_w", self.max_tx_power.to_string()),
            ("tx_circuit_power_w", self.tx_circuit_power.to_string()),
            ("idle_power_w", self.idle_power.to_string()),
            ("pa_efficiency", self.pa_efficiency.to_string()),
            ("battery_capacity_c", self.battery_capacity.to_string()),
            ("operating_voltage_v", self.operating_voltage.to_string()),
            ("cell_side_m", self.cell_side.to_string()),
            ("interference_truncation_m", self.interference_truncation.to_string()),
            ("cache_slots", self.cache_slots.to_string()),
        ];
        for (k, v) in pairs {
            p.set(k, &v).expect("known key");
        }
        p
    }

    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        for (_, (k, v)) in &self.to_params().entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults_with(key: &str, value: &str) -> Result<SystemConfig> {
        let mut p = SystemConfig::default().to_params();
        p.set(key, value)?;
        SystemConfig::validate(&p)
    }

    #[test]
    fn mah_is_converted_to_coulomb() {
        let cfg = defaults_with("battery_capacity_mah", "1800").unwrap();
        assert!((cfg.battery_capacity - 6480.0).abs() < 1e-9);
    }

    #[test]
    fn dbm_is_converted_to_watts() {
        let cfg = defaults_with("noise_power_dbm", "-100").unwrap();
        assert!((cfg.noise_power / 1e-13 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_battery_fraction_is_rejected() {
        let err = defaults_with("battery_fraction", "0").unwrap_err();
        assert_eq!(err.to_string(), "battery_fraction must be positive");
    }

    #[test]
    fn sub_quadratic_pathloss_is_rejected() {
        assert!(defaults_with("pathloss_exponent", "1.9").is_err());
    }

    #[test]
    fn missing_key_is_reported() {
        let mut map = BTreeMap::new();
        map.insert("user_density".to_string(), "0.01".to_string());
        let p = ParamSet::from_map(&map).unwrap();
        assert!(matches!(SystemConfig::validate(&p), Err(Error::MissingKey(_))));
    }

    #[test]
    fn aliases_for_one_quantity_conflict_within_a_file() {
        let text = "bandwidth_hz = 2e7\nbandwidth_mhz = 20\n";
        assert!(matches!(
            ParamSet::parse_str(text),
            Err(Error::ConflictingKeys(_, _))
        ));
    }

    #[test]
    fn override_replaces_other_alias() {
        let mut p = SystemConfig::default().to_params();
        p.set_assignment("bandwidth_mhz=10").unwrap();
        let cfg = SystemConfig::validate(&p).unwrap();
        assert_eq!(cfg.bandwidth, 10e6);
    }

    #[test]
    fn natural_unit_file_round_trips_to_defaults() {
        let text = "\
            user_density = 0.01\n\
            collab_distance_m = 100\n\
            battery_fraction = 0.01\n\
            bandwidth_mhz = 20\n\
            noise_power_dbm = -100   # total over the band\n\
            pathloss_exponent = 3.68\n\
            pathloss_gain_db = -37.6\n\
            file_size_mbytes = 30\n\
            catalog_size = 1000\n\
            zipf_exponent = 1\n\
            max_tx_power_mw = 200\n\
            tx_circuit_power_mw = 115.9\n\
            idle_power_mw = 25\n\
            pa_efficiency = 0.5\n\
            battery_capacity_mah = 1800\n\
            operating_voltage_v = 4\n\
            cell_side_m = 500\n\
            interference_truncation_m = 100\n\
            cache_slots = 1\n";
        let cfg = SystemConfig::validate(&ParamSet::parse_str(text).unwrap()).unwrap();
        let d = SystemConfig::default();
        assert!((cfg.noise_power / d.noise_power - 1.0).abs() < 1e-14);
        assert!((cfg.pathloss_gain / d.pathloss_gain - 1.0).abs() < 1e-14);
        assert!((cfg.battery_capacity - d.battery_capacity).abs() < 1e-9);
        assert_eq!(cfg.file_size, d.file_size);
        assert!((cfg.max_tx_power - d.max_tx_power).abs() < 1e-15);
    }

    #[test]
    fn a_coefficient_and_budget_at_defaults() {
        let cfg = SystemConfig::default();
        let d = cfg.derived(1.0).unwrap();
        // 2.4e8·ln2 / (2e7·0.01·25920·0.5)
        assert!((d.a_coeff - 0.064_180_294_496_291_23).abs() < 1e-12);
        assert!((d.budget_joules - 259.2).abs() < 1e-9);
        assert_eq!(d.cell_area, 250_000.0);
    }

    #[test]
    fn normalized_noise_with_unit_gain() {
        let cfg = SystemConfig {
            pathloss_gain: 1.0,
            ..SystemConfig::default()
        };
        assert_eq!(cfg.derived(1.0).unwrap().normalized_noise, 1e-13);
        assert!(cfg.derived(0.0).is_err());
    }

    #[test]
    fn analytics_need_one_slot() {
        let cfg = SystemConfig {
            cache_slots: 2,
            ..SystemConfig::default()
        };
        assert!(cfg.require_single_slot().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn serialize_then_validate_is_identity(
                lambda in 1e-4f64..1.0,
                rc in 1.0f64..1000.0,
                rho in 1e-4f64..10.0,
                alpha in 2.0f64..6.0,
                beta in 0.0f64..3.0,
                nf in 1usize..5000,
                pci in 0.0f64..0.1,
            ) {
                let cfg = SystemConfig {
                    user_density: lambda,
                    collab_distance: rc,
                    battery_fraction: rho,
                    pathloss_exponent: alpha,
                    zipf_exponent: beta,
                    catalog_size: nf,
                    idle_power: pci,
                    ..SystemConfig::default()
                };
                let text = cfg.to_config_string();
                let back = SystemConfig::validate(&ParamSet::parse_str(&text).unwrap()).unwrap();
                prop_assert_eq!(back, cfg);
            }

            #[test]
            fn derived_is_bit_stable(pt in 1e-6f64..1.0) {
                let cfg = SystemConfig::default();
                let a = cfg.derived(pt).unwrap();
                let b = cfg.derived(pt).unwrap();
                prop_assert_eq!(a.normalized_noise.to_bits(), b.normalized_noise.to_bits());
                prop_assert_eq!(a.a_coeff.to_bits(), b.a_coeff.to_bits());
            }
        }
    }
}
