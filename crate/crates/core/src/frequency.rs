//! Poisson regression with log link for annual disaster counts.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::data::{AnnualPanel, PanelRow, YearRange};
use crate::design::{self, co2_by_region, linear_predictor, DesignRow, Term};
use crate::error::{Error, Result};
use crate::optim::{self, Linear, Objective, OptimOptions};
use crate::region::{DisasterType, Region};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencySpec {
    pub response: DisasterType,
    pub terms: Vec<Term>,
    pub window: YearRange,
}

impl FrequencySpec {
    pub fn new(response: DisasterType, terms: Vec<Term>, window: YearRange) -> Result<Self> {
        design::validate_terms(&terms, "frequency spec")?;
        Ok(Self {
            response,
            terms,
            window,
        })
    }

    /// Intercept plus a log-CO2 slope per region.
    pub fn standard(response: DisasterType, window: YearRange) -> Self {
        let mut terms = vec![Term::Intercept];
        terms.extend(co2_by_region());
        Self {
            response,
            terms,
            window,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedLambda {
    pub year: i32,
    pub region: Region,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyFit {
    pub spec: FrequencySpec,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    #[serde(with = "crate::nan_as_null")]
    pub loglik: f64,
    #[serde(with = "crate::nan_as_null")]
    pub adj_r2: f64,
    pub n_obs: usize,
    pub iterations: usize,
    #[serde(with = "crate::nan_as_null")]
    pub grad_norm: f64,
    pub fitted_lambda: Vec<FittedLambda>,
}

impl FrequencyFit {
    /// A fit with externally supplied coefficients (no data attached).
    pub fn from_coefficients(spec: FrequencySpec, coefficients: Vec<f64>, std_errors: Vec<f64>) -> Result<Self> {
        for v in [&coefficients, &std_errors] {
            if v.len() != spec.terms.len() {
                return Err(Error::Dimension {
                    expected: spec.terms.len(),
                    got: v.len(),
                });
            }
        }
        Ok(Self {
            spec,
            coefficients,
            std_errors,
            loglik: f64::NAN,
            adj_r2: f64::NAN,
            n_obs: 0,
            iterations: 0,
            grad_norm: f64::NAN,
            fitted_lambda: Vec::new(),
        })
    }

    pub fn coefficient(&self, term: Term) -> Option<f64> {
        self.spec
            .terms
            .iter()
            .position(|&t| t == term)
            .map(|i| self.coefficients[i])
    }

    pub fn lambda_at(&self, year: i32, region: Region) -> Option<f64> {
        self.fitted_lambda
            .iter()
            .find(|f| f.year == year && f.region == region)
            .map(|f| f.lambda)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit serializes")
    }
}

/// Poisson log-likelihood over panel cells, as a function of the coefficients.
pub struct PoissonLoglik {
    x: DMatrix<f64>,
    y: Vec<f64>,
    log_fact: f64,
}

impl PoissonLoglik {
    pub fn new(terms: &[Term], rows: &[PanelRow]) -> Self {
        let designs: Vec<DesignRow> = rows.iter().map(PanelRow::design).collect();
        let x = design::design_matrix(terms, designs.iter());
        let y: Vec<f64> = rows.iter().map(|r| r.count as f64).collect();
        let log_fact = y.iter().map(|&v| ln_gamma(v + 1.0)).sum();
        Self { x, y, log_fact }
    }

    fn mu(&self, theta: &[f64]) -> Vec<f64> {
        let t = nalgebra::DVector::from_column_slice(theta);
        (&self.x * t).iter().map(|eta| eta.exp()).collect()
    }
}

impl Objective for PoissonLoglik {
    fn dim(&self) -> usize {
        self.x.ncols()
    }

    fn value_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let t = nalgebra::DVector::from_column_slice(theta);
        let eta = &self.x * t;
        let mut ll = -self.log_fact;
        let mut resid = vec![0.0; self.y.len()];
        for (i, (&e, &y)) in eta.iter().zip(&self.y).enumerate() {
            let mu = e.exp();
            if !mu.is_finite() {
                grad.fill(0.0);
                return f64::NEG_INFINITY;
            }
            ll += y * e - mu;
            resid[i] = y - mu;
        }
        let g = self.x.transpose() * nalgebra::DVector::from_vec(resid);
        grad.copy_from_slice(g.as_slice());
        ll
    }

    fn hessian(&self, theta: &[f64]) -> Option<DMatrix<f64>> {
        let mu = self.mu(theta);
        let mut xw = self.x.clone();
        for (i, m) in mu.iter().enumerate() {
            xw.row_mut(i).scale_mut(*m);
        }
        Some(-(self.x.transpose() * xw))
    }
}

fn deviance(y: &[f64], mu: &[f64]) -> f64 {
    2.0 * y
        .iter()
        .zip(mu)
        .map(|(&y, &m)| {
            let t = if y > 0.0 { y * (y / m).ln() } else { 0.0 };
            t - (y - m)
        })
        .sum::<f64>()
}

/// Maximum-likelihood fit of the count model.
pub fn fit_frequency(panel: &AnnualPanel, spec: &FrequencySpec) -> Result<FrequencyFit> {
    fit_frequency_with(panel, spec, &OptimOptions::default())
}

pub fn fit_frequency_with(panel: &AnnualPanel, spec: &FrequencySpec, opts: &OptimOptions) -> Result<FrequencyFit> {
    design::validate_terms(&spec.terms, "frequency spec")?;
    if !panel.window().contains_range(&spec.window) {
        return Err(Error::Coverage(format!(
            "panel window {} does not cover {}",
            panel.window(),
            spec.window
        )));
    }
    let rows: Vec<PanelRow> = panel
        .rows(spec.response)
        .iter()
        .filter(|r| spec.window.contains(r.year))
        .copied()
        .collect();
    let total: u64 = rows.iter().map(|r| r.count as u64).sum();
    if total == 0 {
        return Err(Error::Degenerate(format!(
            "no {} events in {}",
            spec.response, spec.window
        )));
    }
    let obj = PoissonLoglik::new(&spec.terms, &rows);
    let r = optim::qr_r(&obj.x)?;
    let pre = Linear::new(&obj, r)?;

    let mean = total as f64 / rows.len() as f64;
    let theta0: Vec<f64> = spec
        .terms
        .iter()
        .map(|t| if *t == Term::Intercept { mean.ln() } else { 0.0 })
        .collect();
    let res = optim::maximize(&pre, &pre.from_inner(&theta0), opts)?;
    let theta = pre.to_inner(&res.x);

    let h = obj.hessian(&theta).expect("analytic");
    let cov = optim::covariance_from_hessian(&h)?;
    let std_errors: Vec<f64> = cov.diagonal().iter().map(|v| v.sqrt()).collect();
    let mu = obj.mu(&theta);
    let loglik = obj.value(&theta);

    let n = rows.len() as f64;
    let p = spec.terms.len() as f64;
    let null_mu = vec![mean; rows.len()];
    let d0 = deviance(&obj.y, &null_mu);
    let d = deviance(&obj.y, &mu);
    let adj_r2 = if d0 > 0.0 && n > p {
        1.0 - (n - 1.0) / (n - p) * d / d0
    } else {
        f64::NAN
    };
    let fitted_lambda = rows
        .iter()
        .zip(&mu)
        .map(|(r, &lambda)| FittedLambda {
            year: r.year,
            region: r.region,
            lambda,
        })
        .collect();
    Ok(FrequencyFit {
        spec: spec.clone(),
        coefficients: theta,
        std_errors,
        loglik,
        adj_r2,
        n_obs: rows.len(),
        iterations: res.iterations,
        grad_norm: res.grad_norm,
        fitted_lambda,
    })
}

/// Expected annual number of disasters for one covariate row.
pub fn predict_lambda(fit: &FrequencyFit, row: &DesignRow) -> Result<f64> {
    Ok(linear_predictor(&fit.spec.terms, &fit.coefficients, row)?.exp())
}

/// Expected count from explicit linear-predictor values (one per term).
pub fn predict_lambda_values(fit: &FrequencyFit, values: &[f64]) -> Result<f64> {
    if values.len() != fit.coefficients.len() {
        return Err(Error::Dimension {
            expected: fit.coefficients.len(),
            got: values.len(),
        });
    }
    Ok(values
        .iter()
        .zip(&fit.coefficients)
        .map(|(v, c)| v * c)
        .sum::<f64>()
        .exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn supplied_fit_survives_json() {
        let fit = crate::calibration::reference_frequency(DisasterType::Flood);
        let back: FrequencyFit = serde_json::from_str(&serde_json::to_string(&fit).unwrap()).unwrap();
        assert_eq!(back.coefficients, fit.coefficients);
        assert!(back.loglik.is_nan() && back.adj_r2.is_nan());
    }

    #[test]
    fn zero_coefficients_give_unit_lambda() {
        let spec = FrequencySpec::standard(DisasterType::Flood, YearRange::default());
        let fit = FrequencyFit::from_coefficients(spec, vec![0.0; 8], vec![1.0; 8]).unwrap();
        let row = DesignRow {
            region: Region::SouthAsia,
            log_co2: 1.4,
            log_gdp: 8.0,
        };
        assert_eq!(predict_lambda(&fit, &row).unwrap(), 1.0);
    }

    #[test]
    fn power_law_ratio() {
        // lambda(x2)/lambda(x1) = (CO2_2 / CO2_1)^slope
        let spec = FrequencySpec::standard(DisasterType::Flood, YearRange::default());
        let mut coefs = vec![0.0; 8];
        coefs[0] = -5.141;
        coefs[1] = 5.610;
        let fit = FrequencyFit::from_coefficients(spec, coefs, vec![0.1; 8]).unwrap();
        let at = |co2: f64| {
            predict_lambda(
                &fit,
                &DesignRow {
                    region: Region::EastAsiaPacific,
                    log_co2: f64::ln(co2),
                    log_gdp: 0.0,
                },
            )
            .unwrap()
        };
        assert_relative_eq!(at(4.61) / at(4.11), (4.61f64 / 4.11).powf(5.610), max_relative = 1e-12);
        assert_eq!(at(4.11), at(4.11));
    }

    #[test]
    fn dimension_mismatch() {
        let spec = FrequencySpec::standard(DisasterType::Flood, YearRange::default());
        assert!(FrequencyFit::from_coefficients(spec.clone(), vec![0.0; 3], vec![0.0; 8]).is_err());
        let fit = FrequencyFit::from_coefficients(spec, vec![0.0; 8], vec![0.0; 8]).unwrap();
        assert!(predict_lambda_values(&fit, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn deviance_of_perfect_fit_is_zero() {
        assert!(deviance(&[0.0, 2.0, 5.0], &[1e-300, 2.0, 5.0]).abs() < 1e-12);
    }
}
