//! Design terms for the regressions: intercept, region dummies, log
//! covariates and their region interactions.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::region::Region;

/// Covariate values for one (year, region) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignRow {
    pub region: Region,
    /// log of world CO2 emissions per capita
    pub log_co2: f64,
    /// log of regional real GDP per capita
    pub log_gdp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Intercept,
    RegionDummy(Region),
    LogCo2,
    LogCo2ByRegion(Region),
    LogGdp,
    LogGdpByRegion(Region),
}

impl Term {
    pub fn value(&self, row: &DesignRow) -> f64 {
        let dummy = |r: Region| if row.region == r { 1.0 } else { 0.0 };
        match *self {
            Term::Intercept => 1.0,
            Term::RegionDummy(r) => dummy(r),
            Term::LogCo2 => row.log_co2,
            Term::LogCo2ByRegion(r) => dummy(r) * row.log_co2,
            Term::LogGdp => row.log_gdp,
            Term::LogGdpByRegion(r) => dummy(r) * row.log_gdp,
        }
    }

    /// The log-GDP slope terms, subject to the negative-sign restriction.
    pub fn is_gdp_slope(&self) -> bool {
        matches!(self, Term::LogGdp | Term::LogGdpByRegion(_))
    }

    /// Whether this term lies in the linear span of `terms`.
    pub fn spanned_by(&self, terms: &[Term]) -> bool {
        if terms.contains(self) {
            return true;
        }
        let all = |f: fn(Region) -> Term| Region::ALL.iter().all(|&r| terms.contains(&f(r)));
        match self {
            Term::LogCo2 => all(Term::LogCo2ByRegion),
            Term::LogGdp => all(Term::LogGdpByRegion),
            _ => false,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Term::Intercept => "const".into(),
            Term::RegionDummy(r) => format!("D({r})"),
            Term::LogCo2 => "log_co2".into(),
            Term::LogCo2ByRegion(r) => format!("log_co2:D({r})"),
            Term::LogGdp => "log_gdp".into(),
            Term::LogGdpByRegion(r) => format!("log_gdp:D({r})"),
        }
    }

    /// Row label in the printed parameter tables.
    pub fn label(&self) -> String {
        match self {
            Term::Intercept => "Constant".into(),
            Term::RegionDummy(r) => format!("D({})", r.label()),
            Term::LogCo2 => "log(CO2)".into(),
            Term::LogCo2ByRegion(r) => format!("log(CO2) x D({})", r.label()),
            Term::LogGdp => "log(GDP)".into(),
            Term::LogGdpByRegion(r) => format!("log(GDP) x D({})", r.label()),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Term {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let region_of = |inner: &str| -> Result<Region> {
            inner
                .strip_prefix("D(")
                .and_then(|x| x.strip_suffix(')'))
                .ok_or_else(|| Error::Spec(format!("bad term `{s}`")))?
                .parse()
        };
        match s {
            "const" => Ok(Term::Intercept),
            "log_co2" => Ok(Term::LogCo2),
            "log_gdp" => Ok(Term::LogGdp),
            _ => {
                if let Some(rest) = s.strip_prefix("log_co2:") {
                    Ok(Term::LogCo2ByRegion(region_of(rest)?))
                } else if let Some(rest) = s.strip_prefix("log_gdp:") {
                    Ok(Term::LogGdpByRegion(region_of(rest)?))
                } else {
                    Ok(Term::RegionDummy(region_of(s)?))
                }
            }
        }
    }
}

impl Serialize for Term {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for Term {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Region dummies for every region except the East Asia - Pacific baseline.
pub fn region_dummies() -> Vec<Term> {
    Region::ALL[1..].iter().map(|&r| Term::RegionDummy(r)).collect()
}

pub fn co2_by_region() -> Vec<Term> {
    Region::ALL.iter().map(|&r| Term::LogCo2ByRegion(r)).collect()
}

pub fn gdp_by_region() -> Vec<Term> {
    Region::ALL.iter().map(|&r| Term::LogGdpByRegion(r)).collect()
}

/// Checks the structural invariants shared by every term list.
pub fn validate_terms(terms: &[Term], what: &str) -> Result<()> {
    if terms.is_empty() {
        return Err(Error::Spec(format!("{what}: empty term list")));
    }
    if !terms.contains(&Term::Intercept) {
        return Err(Error::Spec(format!("{what}: intercept missing")));
    }
    for (i, t) in terms.iter().enumerate() {
        if terms[..i].contains(t) {
            return Err(Error::Spec(format!("{what}: duplicate term {t}")));
        }
    }
    Ok(())
}

pub fn linear_predictor(terms: &[Term], coefficients: &[f64], row: &DesignRow) -> Result<f64> {
    if terms.len() != coefficients.len() {
        return Err(Error::Dimension {
            expected: terms.len(),
            got: coefficients.len(),
        });
    }
    Ok(terms.iter().zip(coefficients).map(|(t, c)| t.value(row) * c).sum())
}

pub fn design_matrix<'a>(terms: &[Term], rows: impl ExactSizeIterator<Item = &'a DesignRow>) -> DMatrix<f64> {
    let n = rows.len();
    let mut x = DMatrix::zeros(n, terms.len());
    for (i, row) in rows.enumerate() {
        for (j, t) in terms.iter().enumerate() {
            x[(i, j)] = t.value(row);
        }
    }
    x
}
