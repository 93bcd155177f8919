//! Closed enumerations for World Bank regions and disaster types.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The seven World Bank regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Region {
    #[serde(rename = "EAP")]
    EastAsiaPacific,
    #[serde(rename = "ECA")]
    EuropeCentralAsia,
    #[serde(rename = "LAC")]
    LatinAmericaCaribbean,
    #[serde(rename = "MNA")]
    MiddleEastNorthAfrica,
    #[serde(rename = "NAC")]
    NorthAmerica,
    #[serde(rename = "SAS")]
    SouthAsia,
    #[serde(rename = "SSF")]
    SubSaharanAfrica,
}

impl Region {
    pub const ALL: [Region; 7] = [
        Region::EastAsiaPacific,
        Region::EuropeCentralAsia,
        Region::LatinAmericaCaribbean,
        Region::MiddleEastNorthAfrica,
        Region::NorthAmerica,
        Region::SouthAsia,
        Region::SubSaharanAfrica,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Region::EastAsiaPacific => "EAP",
            Region::EuropeCentralAsia => "ECA",
            Region::LatinAmericaCaribbean => "LAC",
            Region::MiddleEastNorthAfrica => "MNA",
            Region::NorthAmerica => "NAC",
            Region::SouthAsia => "SAS",
            Region::SubSaharanAfrica => "SSF",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Region::EastAsiaPacific => "East Asia - Pacific",
            Region::EuropeCentralAsia => "Europe - Central Asia",
            Region::LatinAmericaCaribbean => "Latin America - Caribbean",
            Region::MiddleEastNorthAfrica => "Middle East - North Africa",
            Region::NorthAmerica => "North America",
            Region::SouthAsia => "South Asia",
            Region::SubSaharanAfrica => "Sub-Saharan Africa",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Region::ALL
            .into_iter()
            .find(|r| r.code().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Domain(format!("unknown region `{s}`")))
    }
}

/// Disaster types in scope. Droughts are deliberately absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisasterType {
    Flood,
    Storm,
    Landslide,
    Wildfire,
    HeatWave,
    ColdWave,
}

impl DisasterType {
    pub const ALL: [DisasterType; 6] = [
        DisasterType::Flood,
        DisasterType::Storm,
        DisasterType::Landslide,
        DisasterType::Wildfire,
        DisasterType::HeatWave,
        DisasterType::ColdWave,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DisasterType::Flood => "flood",
            DisasterType::Storm => "storm",
            DisasterType::Landslide => "landslide",
            DisasterType::Wildfire => "wildfire",
            DisasterType::HeatWave => "heat_wave",
            DisasterType::ColdWave => "cold_wave",
        }
    }
}

impl fmt::Display for DisasterType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DisasterType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        DisasterType::ALL
            .into_iter()
            .find(|t| t.as_str() == key)
            .ok_or_else(|| Error::Domain(format!("unknown disaster type `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_round_trip() {
        for r in Region::ALL {
            assert_eq!(r.code().parse::<Region>().unwrap(), r);
        }
        for t in DisasterType::ALL {
            assert_eq!(t.as_str().parse::<DisasterType>().unwrap(), t);
        }
        assert_eq!("Heat Wave".parse::<DisasterType>().unwrap(), DisasterType::HeatWave);
    }

    #[test]
    fn rejects_unknown() {
        assert!("XYZ".parse::<Region>().is_err());
        assert!("drought".parse::<DisasterType>().is_err());
    }
}
