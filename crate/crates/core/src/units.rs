//! Unit tags and the handful of conversions the observables need.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// ħc in GeV·fm; the only constant bridging momentum and length units.
pub const HBAR_C_GEV_FM: f64 = 0.1973269804;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Unit {
    Dimensionless,
    MeV,
    GeV,
    MeV2,
    GeV2,
    InvGeV2,
    Fm,
    Fm2,
}

impl Unit {
    pub fn as_str(self) -> &'static str {
        match self {
            Unit::Dimensionless => "1",
            Unit::MeV => "MeV",
            Unit::GeV => "GeV",
            Unit::MeV2 => "MeV^2",
            Unit::GeV2 => "GeV^2",
            Unit::InvGeV2 => "GeV^-2",
            Unit::Fm => "fm",
            Unit::Fm2 => "fm^2",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unit = match s.trim() {
            "" | "1" | "dimensionless" | "none" => Unit::Dimensionless,
            "MeV" => Unit::MeV,
            "GeV" => Unit::GeV,
            "MeV^2" | "MeV2" | "MeV²" => Unit::MeV2,
            "GeV^2" | "GeV2" | "GeV²" => Unit::GeV2,
            "GeV^-2" | "GeV-2" | "GeV⁻²" | "1/GeV^2" => Unit::InvGeV2,
            "fm" => Unit::Fm,
            "fm^2" | "fm2" | "fm²" => Unit::Fm2,
            other => return Err(Error::Parse(format!("unknown unit `{other}`"))),
        };
        Ok(unit)
    }
}

impl TryFrom<String> for Unit {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Unit> for String {
    fn from(u: Unit) -> String {
        u.as_str().to_string()
    }
}

/// Converts `value` between the supported unit pairs.
///
/// Supported: MeV² ↔ GeV², MeV ↔ GeV, GeV⁻² ↔ fm². Identity conversions are
/// always allowed.
pub fn convert_units(value: f64, from: Unit, to: Unit) -> Result<f64> {
    use Unit::*;
    let hbarc2 = HBAR_C_GEV_FM * HBAR_C_GEV_FM;
    let out = match (from, to) {
        (a, b) if a == b => value,
        (MeV2, GeV2) => value / 1.0e6,
        (GeV2, MeV2) => value * 1.0e6,
        (MeV, GeV) => value / 1.0e3,
        (GeV, MeV) => value * 1.0e3,
        (InvGeV2, Fm2) => value * hbarc2,
        (Fm2, InvGeV2) => value / hbarc2,
        _ => {
            return Err(Error::UnsupportedConversion {
                from: from.to_string(),
                to: to.to_string(),
            })
        }
    };
    Ok(out)
}
