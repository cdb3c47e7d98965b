use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Category, CarbonIntensityMap, EnergyBreakdown, EnergyError, Ledger, Result};

pub const JOULES_PER_KWH: f64 = 3.6e6;
pub const HOURS_PER_YEAR: f64 = 8760.0;

/// Grams of CO2-eq for `joules` drawn at `ci` kgCO2-eq/kWh.
pub fn grams_co2(joules: f64, ci: f64) -> f64 {
    joules / JOULES_PER_KWH * ci * 1000.0
}

/// Emissions split into communication and computing parts, with the
/// per-node ledger they were summed from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CarbonReport {
    pub total_g: f64,
    pub comm_g: f64,
    pub compute_g: f64,
    pub per_node_g: Ledger,
}

/// Converts every ledger entry at the intensity of the node it is billed to.
///
/// Center entries (data-center or PS compute, downlink transmission) use the
/// center's intensity; device entries (compute, uplink, mesh sends) use the
/// device's.
pub fn carbon_of(breakdown: &EnergyBreakdown, ci: &CarbonIntensityMap) -> Result<CarbonReport> {
    ci.validate()?;
    let mut per_node_g = Ledger::new();
    let (mut comm_g, mut compute_g) = (0.0, 0.0);
    for (node, category, joules) in breakdown.per_node_j.iter() {
        let g = grams_co2(joules, ci.intensity(node)?);
        per_node_g.add(node, category, g);
        match category {
            Category::Compute => compute_g += g,
            _ => comm_g += g,
        }
    }
    Ok(CarbonReport {
        total_g: comm_g + compute_g,
        comm_g,
        compute_g,
        per_node_g,
    })
}

/// Yearly emissions (kgCO2-eq/yr) when a training costing `g_per_training`
/// grams is repeated every `retrain_period_h` hours.
pub fn annualize(g_per_training: f64, retrain_period_h: f64) -> Result<f64> {
    if !(retrain_period_h > 0.0 && retrain_period_h.is_finite()) {
        return Err(EnergyError::Invalid {
            field: "retrain_period_h",
            reason: format!("{retrain_period_h} is not a positive number of hours"),
        });
    }
    Ok(g_per_training * (HOURS_PER_YEAR / retrain_period_h) / 1000.0)
}

/// Named grid carbon-intensity regions (2019 EU figures).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    /// Highest intensity in the EU.
    #[serde(rename = "max-EU")]
    MaxEu,
    #[serde(rename = "IT")]
    Italy,
    #[serde(rename = "FI")]
    Finland,
}

impl Region {
    /// kgCO2-eq/kWh.
    pub fn intensity(self) -> f64 {
        match self {
            Region::MaxEu => 0.97,
            Region::Italy => 0.28,
            Region::Finland => 0.11,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Region::MaxEu => "max-EU",
            Region::Italy => "IT",
            Region::Finland => "FI",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Region {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "max-EU" | "max-eu" | "maxEU" => Ok(Region::MaxEu),
            "IT" | "it" => Ok(Region::Italy),
            "FI" | "fi" => Ok(Region::Finland),
            _ => Err(format!("unknown region `{s}` (expected max-EU, IT or FI)")),
        }
    }
}
