//! Annual storage energy and carbon accounting.
//!
//! Energy for a year of keeping `S` terabytes online is
//! `power_per_tb_w * 365 * 24 * S` watt-hours, reported in kWh.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HOURS_PER_YEAR: f64 = 365.0 * 24.0;
pub const DISTRIBUTED_W_PER_TB: f64 = 2.55;
pub const CENTRALIZED_W_PER_TB: f64 = 11.55;
pub const DEFAULT_CARBON_G_PER_KWH: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Distributed,
    Centralized,
}

impl Architecture {
    pub const ALL: [Architecture; 2] = [Architecture::Distributed, Architecture::Centralized];

    pub fn default_power_per_tb_w(self) -> f64 {
        match self {
            Architecture::Distributed => DISTRIBUTED_W_PER_TB,
            Architecture::Centralized => CENTRALIZED_W_PER_TB,
        }
    }
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Architecture::Distributed => "distributed",
            Architecture::Centralized => "centralized",
        })
    }
}

/// How byte counts convert to terabytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TbMode {
    /// 1 TB = 2^40 bytes.
    #[default]
    Binary,
    /// 1 TB = 10^12 bytes.
    Decimal,
}

impl TbMode {
    pub fn bytes_per_tb(self) -> f64 {
        match self {
            TbMode::Binary => (1u64 << 40) as f64,
            TbMode::Decimal => 1e12,
        }
    }

    /// Bytes in one megabyte under the same convention.
    pub fn bytes_per_mb(self) -> f64 {
        match self {
            TbMode::Binary => (1u64 << 20) as f64,
            TbMode::Decimal => 1e6,
        }
    }

    pub fn bytes_to_tb(self, bytes: u64) -> f64 {
        bytes as f64 / self.bytes_per_tb()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyScenario {
    pub stored_tb: f64,
    pub architecture: Architecture,
    pub power_per_tb_w: f64,
    pub carbon_g_per_kwh: f64,
}

impl EnergyScenario {
    pub fn new(stored_tb: f64, architecture: Architecture) -> Self {
        Self {
            stored_tb,
            architecture,
            power_per_tb_w: architecture.default_power_per_tb_w(),
            carbon_g_per_kwh: DEFAULT_CARBON_G_PER_KWH,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.stored_tb >= 0.0 && self.stored_tb.is_finite()) {
            return Err(Error::InvalidConfig(format!("stored size must be >= 0 TB, got {}", self.stored_tb)));
        }
        if !(self.power_per_tb_w > 0.0 && self.power_per_tb_w.is_finite()) {
            return Err(Error::InvalidConfig(format!("power per TB must be > 0 W, got {}", self.power_per_tb_w)));
        }
        validate_carbon(self.carbon_g_per_kwh)
    }
}

fn validate_carbon(g_per_kwh: f64) -> Result<()> {
    if !(g_per_kwh >= 0.0 && g_per_kwh.is_finite()) {
        return Err(Error::InvalidConfig(format!("carbon factor must be >= 0 g/kWh, got {g_per_kwh}")));
    }
    Ok(())
}

/// Annual energy in kWh for the scenario.
pub fn annual_energy_kwh(scenario: &EnergyScenario) -> Result<f64> {
    scenario.validate()?;
    let watt_hours = scenario.power_per_tb_w * HOURS_PER_YEAR * scenario.stored_tb;
    Ok(watt_hours / 1000.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub architecture: Architecture,
    pub original_tb: f64,
    pub stored_tb: f64,
    pub power_per_tb_w: f64,
    pub carbon_g_per_kwh: f64,
    pub initial_kwh: f64,
    pub final_kwh: f64,
    pub savings_kwh: f64,
    pub carbon_saved_g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyOptions {
    pub carbon_g_per_kwh: f64,
    pub tb_mode: TbMode,
    /// Overrides the architecture's default W/TB.
    pub power_per_tb_w: Option<f64>,
    /// Permit stored > original, producing negative savings.
    pub allow_negative: bool,
}

impl Default for EnergyOptions {
    fn default() -> Self {
        Self {
            carbon_g_per_kwh: DEFAULT_CARBON_G_PER_KWH,
            tb_mode: TbMode::Binary,
            power_per_tb_w: None,
            allow_negative: false,
        }
    }
}

/// Annual energy before and after shrinking `original_bytes` to `stored_bytes`.
pub fn savings_report(original_bytes: u64, stored_bytes: u64, architecture: Architecture, opts: &EnergyOptions) -> Result<EnergyReport> {
    if stored_bytes > original_bytes && !opts.allow_negative {
        return Err(Error::InvalidConfig(format!(
            "stored size {stored_bytes} B exceeds original size {original_bytes} B"
        )));
    }
    let scenario = |bytes: u64| EnergyScenario {
        stored_tb: opts.tb_mode.bytes_to_tb(bytes),
        architecture,
        power_per_tb_w: opts.power_per_tb_w.unwrap_or(architecture.default_power_per_tb_w()),
        carbon_g_per_kwh: opts.carbon_g_per_kwh,
    };
    let before = scenario(original_bytes);
    let after = scenario(stored_bytes);
    let initial_kwh = annual_energy_kwh(&before)?;
    let final_kwh = annual_energy_kwh(&after)?;
    let savings_kwh = initial_kwh - final_kwh;
    Ok(EnergyReport {
        architecture,
        original_tb: before.stored_tb,
        stored_tb: after.stored_tb,
        power_per_tb_w: before.power_per_tb_w,
        carbon_g_per_kwh: opts.carbon_g_per_kwh,
        initial_kwh,
        final_kwh,
        savings_kwh,
        carbon_saved_g: savings_kwh * opts.carbon_g_per_kwh,
    })
}

/// Yearly savings from removing `compression_fraction` of `original_tb`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub original_tb: f64,
    pub compression_fraction: f64,
    pub carbon_g_per_kwh: f64,
    pub kwh_distributed: f64,
    pub kwh_centralized: f64,
    pub carbon_kg_distributed: f64,
    pub carbon_kg_centralized: f64,
}

pub fn projection(original_tb: f64, compression_fraction: f64, carbon_g_per_kwh: f64) -> Result<Projection> {
    if !(0.0..=1.0).contains(&compression_fraction) {
        return Err(Error::InvalidConfig(format!(
            "compression fraction must be in [0, 1], got {compression_fraction}"
        )));
    }
    validate_carbon(carbon_g_per_kwh)?;
    let saved_tb = compression_fraction * original_tb;
    let kwh = |arch| annual_energy_kwh(&EnergyScenario::new(saved_tb, arch));
    let kwh_distributed = kwh(Architecture::Distributed)?;
    let kwh_centralized = kwh(Architecture::Centralized)?;
    Ok(Projection {
        original_tb,
        compression_fraction,
        carbon_g_per_kwh,
        kwh_distributed,
        kwh_centralized,
        carbon_kg_distributed: kwh_distributed * carbon_g_per_kwh / 1000.0,
        carbon_kg_centralized: kwh_centralized * carbon_g_per_kwh / 1000.0,
    })
}

/// Parses sizes like `10TB`, `428MB`, `1.5PB` into terabytes under `mode`.
pub fn parse_size_tb(text: &str, mode: TbMode) -> Result<f64> {
    let t = text.trim();
    let split = t
        .find(|c: char| c.is_ascii_alphabetic())
        .ok_or_else(|| Error::InvalidConfig(format!("size {text:?} needs a unit such as TB")))?;
    let (num, unit) = t.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("invalid size number in {text:?}")))?;
    let step = match mode {
        TbMode::Binary => 1024f64,
        TbMode::Decimal => 1000f64,
    };
    let exp = match unit.to_ascii_uppercase().as_str() {
        "B" => -4,
        "KB" | "KIB" => -3,
        "MB" | "MIB" => -2,
        "GB" | "GIB" => -1,
        "TB" | "TIB" => 0,
        "PB" | "PIB" => 1,
        _ => return Err(Error::InvalidConfig(format!("unknown size unit {unit:?}"))),
    };
    if !(value >= 0.0 && value.is_finite()) {
        return Err(Error::InvalidConfig(format!("size must be >= 0, got {text:?}")));
    }
    Ok(value * step.powi(exp))
}
