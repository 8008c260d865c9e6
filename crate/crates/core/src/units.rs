//! Unit conventions. Internally ħ = 1 and every energy is stored as an
//! angular frequency.

use serde::{Deserialize, Serialize};

/// Speed of light in cm/ps.
pub const SPEED_OF_LIGHT_CM_PER_PS: f64 = 0.029_979_245_8;

/// Angular frequency (rad/ps) of one wavenumber.
pub const RAD_PER_PS_PER_WAVENUMBER: f64 = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT_CM_PER_PS;

/// Which unit system the stored angular frequencies refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnitSystem {
    /// Energies in units of a reference coupling V, time in ħ/V.
    #[serde(rename = "V")]
    DimensionlessV,
    /// Inputs given in cm⁻¹, stored in rad/ps, time in ps.
    #[serde(rename = "cm-1")]
    Wavenumber,
}

impl UnitSystem {
    pub fn energy_label(self) -> &'static str {
        match self {
            UnitSystem::DimensionlessV => "V",
            UnitSystem::Wavenumber => "cm-1",
        }
    }

    pub fn time_label(self) -> &'static str {
        match self {
            UnitSystem::DimensionlessV => "hbar/V",
            UnitSystem::Wavenumber => "ps",
        }
    }

    /// Converts an input energy in this unit system to internal angular frequency.
    pub fn to_internal(self, value: f64) -> f64 {
        match self {
            UnitSystem::DimensionlessV => value,
            UnitSystem::Wavenumber => convert_energy(value),
        }
    }

    pub fn from_internal(self, value: f64) -> f64 {
        match self {
            UnitSystem::DimensionlessV => value,
            UnitSystem::Wavenumber => value / RAD_PER_PS_PER_WAVENUMBER,
        }
    }
}

/// Converts a wavenumber (cm⁻¹) to an angular frequency in rad/ps.
pub fn convert_energy(wavenumber: f64) -> f64 {
    wavenumber * RAD_PER_PS_PER_WAVENUMBER
}
