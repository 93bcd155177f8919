//! Frequency and severity model for climate-related disaster death tolls.
//!
//! Annual disaster counts follow a Poisson regression on log world CO2
//! emissions; deaths per disaster follow a generalized Pareto distribution
//! whose scale and tail index depend on regional GDP. The two combine into
//! projected annual death tolls under emission scenarios.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` deliberately rejects NaN

pub mod bootstrap;
pub mod calibration;
pub mod data;
pub mod dependence;
pub mod design;
pub mod distributions;
pub mod error;
pub mod frequency;
pub mod optim;
pub mod projection;
pub mod region;
pub mod report;
pub mod rng;
pub mod selection;
pub mod severity;
pub mod spline;
pub mod synthetic;

pub use error::{Error, Result};

/// JSON has no NaN; unset statistics travel as `null`.
pub(crate) mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            s.serialize_none()
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}
pub use region::{DisasterType, Region};
