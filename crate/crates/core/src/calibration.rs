//! Reference coefficient sets for the six disaster types, estimated on
//! 1960-2019 data. Used to calibrate synthetic generators and as default
//! fits for projection examples.

use crate::data::YearRange;
use crate::frequency::{FrequencyFit, FrequencySpec};
use crate::region::DisasterType;
use crate::severity::{SeverityFit, SeveritySpec, XiLink};

struct Block {
    coef: &'static [f64],
    se: &'static [f64],
}

struct Reference {
    frequency: Block,
    nu: Block,
    xi: Block,
    n_obs: usize,
    loglik: f64,
}

// Term order follows the standard specs: frequency `const, log_co2 x region`;
// water-cycle nu `const, 6 dummies, log_gdp x region`, xi `const, log_gdp x region`;
// temperature nu `const, log_gdp x region`, xi `const, 6 dummies`.
fn reference(t: DisasterType) -> Reference {
    use DisasterType::*;
    match t {
        Flood => Reference {
            frequency: Block {
                coef: &[-5.141, 5.610, 5.243, 5.421, 4.644, 4.439, 5.214, 5.418],
                se: &[0.228, 0.154, 0.155, 0.155, 0.159, 0.161, 0.156, 0.155],
            },
            nu: Block {
                coef: &[
                    13.748, 20.051, 23.051, 18.951, 22.508, 2.730, -0.113, -1.090, -3.079, -3.522, -3.063, -3.131,
                    -1.446, -1.251,
                ],
                se: &[
                    1.364, 5.977, 4.368, 5.500, 7.091, 2.133, 5.785, 0.150, 0.570, 0.438, 0.563, 0.645, 0.203, 0.695,
                ],
            },
            xi: Block {
                coef: &[4.108, -0.379, -0.350, -0.366, -0.384, -0.375, -0.425, -0.436],
                se: &[0.439, 0.048, 0.043, 0.047, 0.047, 0.041, 0.055, 0.055],
            },
            n_obs: 3658,
            loglik: -17825.8,
        },
        Storm => Reference {
            frequency: Block {
                coef: &[-2.231, 3.768, 3.062, 3.145, 1.713, 3.169, 2.850, 2.556],
                se: &[0.233, 0.159, 0.162, 0.161, 0.179, 0.161, 0.163, 0.165],
            },
            nu: Block {
                coef: &[
                    14.536, 17.899, 14.969, 15.205, 16.772, 3.426, -5.568, -1.222, -2.984, -2.804, -2.777, -2.624,
                    -1.672, -0.669,
                ],
                se: &[
                    1.948, 8.663, 9.899, 30.056, 6.706, 3.855, 19.889, 0.218, 0.828, 1.026, 3.143, 0.598, 0.417, 2.456,
                ],
            },
            xi: Block {
                coef: &[4.204, -0.370, -0.396, -0.325, -0.387, -0.355, -0.422, -0.405],
                se: &[0.381, 0.043, 0.038, 0.041, 0.042, 0.035, 0.049, 0.049],
            },
            n_obs: 2916,
            loglik: -13833.0,
        },
        Landslide => Reference {
            frequency: Block {
                coef: &[-4.044, 3.747, 3.168, 3.485, 1.699, 1.217, 3.338, 2.757],
                se: &[0.557, 0.381, 0.386, 0.383, 0.432, 0.477, 0.384, 0.392],
            },
            nu: Block {
                coef: &[
                    9.523, 13.143, 23.429, 6.216, 47.377, 6.166, 5.867, -0.613, -1.894, -3.028, -1.319, -5.154, -1.402,
                    -1.411,
                ],
                se: &[
                    1.954, 7.533, 6.880, 10.769, 4.048, 3.188, 14.949, 0.217, 0.726, 0.702, 1.117, 0.328, 0.315, 1.826,
                ],
            },
            xi: Block {
                coef: &[0.289, 0.002, 0.009, 0.013, -0.096, -0.114, -0.003, 0.041],
                se: &[0.051, 0.006, 0.005, 0.006, 0.007, 0.005, 0.007, 0.006],
            },
            n_obs: 672,
            loglik: -3513.5,
        },
        Wildfire => Reference {
            frequency: Block {
                coef: &[-1.394, 1.436, 1.498, 0.973, -0.183, 1.417, -0.274, 0.539],
                se: &[0.819, 0.563, 0.563, 0.568, 0.603, 0.563, 0.609, 0.576],
            },
            nu: Block {
                coef: &[10.532, -0.853, -0.780, -0.824, -0.845, -0.809, -11.452, -0.939],
                se: &[5.253, 0.589, 0.518, 0.553, 0.547, 0.484, 0.645, 0.656],
            },
            xi: Block {
                coef: &[1.034, -0.677, -0.899, -1.777, -0.480, -1.978, -0.790],
                se: &[0.080, 0.094, 0.141, 0.084, 0.100, 0.133, 0.123],
            },
            n_obs: 178,
            loglik: -645.0,
        },
        HeatWave => Reference {
            frequency: Block {
                coef: &[-4.146, 2.628, 3.275, 1.717, 1.654, 2.340, 2.809, 1.026],
                se: &[1.145, 0.781, 0.773, 0.810, 0.813, 0.787, 0.778, 0.870],
            },
            nu: Block {
                coef: &[5.365, -0.136, -0.095, -0.029, -0.222, -0.031, 0.075, -0.374],
                se: &[10.030, 1.085, 0.985, 1.107, 1.037, 0.949, 1.270, 1.266],
            },
            xi: Block {
                coef: &[0.581, 1.964, -0.574, -1.324, -0.014, -0.162, -1.455],
                se: &[0.044, 0.053, 0.122, 0.053, 0.064, 0.063, 0.045],
            },
            n_obs: 176,
            loglik: -1119.8,
        },
        ColdWave => Reference {
            frequency: Block {
                coef: &[-7.780, 4.693, 6.247, 5.467, 4.258, 4.462, 5.545, 3.608],
                se: &[0.968, 0.664, 0.644, 0.650, 0.681, 0.672, 0.649, 0.734],
            },
            nu: Block {
                coef: &[18.380, -1.620, -1.473, -1.520, -1.811, -1.491, -1.654, -10.968],
                se: &[3.482, 0.378, 0.339, 0.370, 0.374, 0.330, 0.438, 0.449],
            },
            xi: Block {
                coef: &[0.566, 0.041, 0.066, -3.131, -2.943, -0.360, -3.367],
                se: &[0.305, 0.316, 0.351, 0.308, 0.306, 0.326, 0.367],
            },
            n_obs: 294,
            loglik: -1470.0,
        },
    }
}

/// Standard severity specification for a disaster type.
pub fn standard_severity_spec(t: DisasterType, window: YearRange) -> SeveritySpec {
    match t {
        DisasterType::Flood | DisasterType::Storm | DisasterType::Landslide => SeveritySpec::water_cycle(t, window),
        DisasterType::Wildfire | DisasterType::HeatWave => SeveritySpec::temperature(t, XiLink::Identity, window),
        DisasterType::ColdWave => SeveritySpec::temperature(t, XiLink::Log1p, window),
    }
}

pub fn reference_frequency(t: DisasterType) -> FrequencyFit {
    let r = reference(t);
    FrequencyFit::from_coefficients(
        FrequencySpec::standard(t, YearRange::default()),
        r.frequency.coef.to_vec(),
        r.frequency.se.to_vec(),
    )
    .expect("reference table matches the standard spec")
}

pub fn reference_severity(t: DisasterType) -> SeverityFit {
    let r = reference(t);
    let mut fit = SeverityFit::from_coefficients(
        standard_severity_spec(t, YearRange::default()),
        r.nu.coef.to_vec(),
        r.xi.coef.to_vec(),
        r.nu.se.to_vec(),
        r.xi.se.to_vec(),
    )
    .expect("reference table matches the standard spec");
    fit.n_obs = r.n_obs;
    fit.loglik = r.loglik;
    fit
}
