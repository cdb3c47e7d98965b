//! Closed-form energy and carbon models.
//!
//! Units used throughout: joules (J), bits, bit/J for link energy
//! efficiency, kgCO2-eq/kWh for carbon intensity and gCO2-eq for emissions.
//! All functions here are pure.

mod carbon;
mod closed_form;
mod ledger;
mod params;

pub use carbon::{
    annualize, carbon_of, grams_co2, CarbonReport, Region, HOURS_PER_YEAR, JOULES_PER_KWH,
};
pub use closed_form::{
    ee_from_link, ee_mesh_compose, energy_cfl, energy_cfl_with, energy_cl, energy_fl,
    energy_fl_with, energy_for, round_compute_energy, transfer_energy, DownlinkMode,
    Participation,
};
pub use ledger::{Category, EnergyBreakdown, Ledger, Node};
pub use params::{
    CarbonIntensityMap, ComputeProfile, DeviceCompute, FleetSpec, LinkEfficiencies,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("invalid energy efficiency for `{what}`: {value} (must be > 0)")]
    InvalidEfficiency { what: &'static str, value: f64 },
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("invalid fleet: {0}")]
    InvalidFleet(String),
    #[error("no carbon intensity for {0}")]
    MissingRegion(Node),
}

pub type Result<T> = std::result::Result<T, EnergyError>;

pub(crate) fn require_positive(field: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(EnergyError::Invalid {
            field,
            reason: format!("{value} is not a positive finite number"),
        })
    }
}

/// Efficiencies may be `+inf` (free link) but never zero, negative or NaN.
pub(crate) fn require_efficiency(what: &'static str, value: f64) -> Result<()> {
    if value > 0.0 {
        Ok(())
    } else {
        Err(EnergyError::InvalidEfficiency { what, value })
    }
}
