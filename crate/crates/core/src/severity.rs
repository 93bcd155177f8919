//! Covariate-dependent generalized Pareto regression for deaths per disaster.
//!
//! Both the orthogonal scale `nu` and the tail index `xi` are linear in the
//! design terms; `xi` may instead be modelled through `log(1 + xi)` to keep
//! it above -1. All regions of one disaster type are pooled in a single
//! likelihood.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{AnnualPanel, RescaledEvent, YearRange};
use crate::design::{self, gdp_by_region, linear_predictor, region_dummies, DesignRow, Term};
use crate::distributions::{ortho_log_density_hessian, ortho_log_density_score, GpdParams};
use crate::error::{Error, Result};
use crate::optim::{self, Linear, Objective, OptimOptions};
use crate::region::{DisasterType, Region};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum XiLink {
    #[default]
    Identity,
    /// The linear predictor is `log(1 + xi)`.
    Log1p,
}

impl XiLink {
    pub fn xi(self, eta: f64) -> f64 {
        match self {
            XiLink::Identity => eta,
            XiLink::Log1p => eta.exp_m1(),
        }
    }

    fn dxi_deta(self, eta: f64) -> f64 {
        match self {
            XiLink::Identity => 1.0,
            XiLink::Log1p => eta.exp(),
        }
    }

    fn d2xi_deta2(self, eta: f64) -> f64 {
        match self {
            XiLink::Identity => 0.0,
            XiLink::Log1p => eta.exp(),
        }
    }

    pub fn eta(self, xi: f64) -> f64 {
        match self {
            XiLink::Identity => xi,
            XiLink::Log1p => xi.ln_1p(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeveritySpec {
    pub response: DisasterType,
    pub nu_terms: Vec<Term>,
    pub xi_terms: Vec<Term>,
    pub xi_link: XiLink,
    pub window: YearRange,
}

impl SeveritySpec {
    pub fn new(
        response: DisasterType,
        nu_terms: Vec<Term>,
        xi_terms: Vec<Term>,
        xi_link: XiLink,
        window: YearRange,
    ) -> Result<Self> {
        design::validate_terms(&nu_terms, "nu terms")?;
        design::validate_terms(&xi_terms, "xi terms")?;
        Ok(Self {
            response,
            nu_terms,
            xi_terms,
            xi_link,
            window,
        })
    }

    pub fn intercept_only(response: DisasterType, xi_link: XiLink, window: YearRange) -> Self {
        Self {
            response,
            nu_terms: vec![Term::Intercept],
            xi_terms: vec![Term::Intercept],
            xi_link,
            window,
        }
    }

    /// Water-cycle specification: `nu` on region dummies and log GDP by region, `xi` on log GDP by region.
    pub fn water_cycle(response: DisasterType, window: YearRange) -> Self {
        let mut nu = vec![Term::Intercept];
        nu.extend(region_dummies());
        nu.extend(gdp_by_region());
        let mut xi = vec![Term::Intercept];
        xi.extend(gdp_by_region());
        Self {
            response,
            nu_terms: nu,
            xi_terms: xi,
            xi_link: XiLink::Identity,
            window,
        }
    }

    /// Temperature specification: `nu` on log GDP by region, `xi` on region dummies.
    pub fn temperature(response: DisasterType, xi_link: XiLink, window: YearRange) -> Self {
        let mut nu = vec![Term::Intercept];
        nu.extend(gdp_by_region());
        let mut xi = vec![Term::Intercept];
        xi.extend(region_dummies());
        Self {
            response,
            nu_terms: nu,
            xi_terms: xi,
            xi_link,
            window,
        }
    }

    pub fn n_params(&self) -> usize {
        self.nu_terms.len() + self.xi_terms.len()
    }
}

/// One strictly positive rescaled death count with its covariate cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeverityObservation {
    pub year: i32,
    pub region: Region,
    pub deaths: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedGpd {
    pub year: i32,
    pub region: Region,
    pub xi: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeverityFit {
    pub spec: SeveritySpec,
    pub nu_coefficients: Vec<f64>,
    pub xi_coefficients: Vec<f64>,
    pub nu_std_errors: Vec<f64>,
    pub xi_std_errors: Vec<f64>,
    #[serde(with = "crate::nan_as_null")]
    pub loglik: f64,
    pub n_obs: usize,
    pub iterations: usize,
    #[serde(with = "crate::nan_as_null")]
    pub grad_norm: f64,
    pub fitted_params: Vec<FittedGpd>,
    pub warnings: Vec<String>,
}

impl SeverityFit {
    pub fn from_coefficients(
        spec: SeveritySpec,
        nu_coefficients: Vec<f64>,
        xi_coefficients: Vec<f64>,
        nu_std_errors: Vec<f64>,
        xi_std_errors: Vec<f64>,
    ) -> Result<Self> {
        for (v, n) in [
            (&nu_coefficients, spec.nu_terms.len()),
            (&nu_std_errors, spec.nu_terms.len()),
            (&xi_coefficients, spec.xi_terms.len()),
            (&xi_std_errors, spec.xi_terms.len()),
        ] {
            if v.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: v.len(),
                });
            }
        }
        Ok(Self {
            spec,
            nu_coefficients,
            xi_coefficients,
            nu_std_errors,
            xi_std_errors,
            loglik: f64::NAN,
            n_obs: 0,
            iterations: 0,
            grad_norm: f64::NAN,
            fitted_params: Vec::new(),
            warnings: Vec::new(),
        })
    }

    /// `(nu, xi)` at a covariate row; `xi` on its natural scale.
    pub fn linear_predictors(&self, row: &DesignRow) -> Result<(f64, f64)> {
        let nu = linear_predictor(&self.spec.nu_terms, &self.nu_coefficients, row)?;
        let eta = linear_predictor(&self.spec.xi_terms, &self.xi_coefficients, row)?;
        Ok((nu, self.spec.xi_link.xi(eta)))
    }

    pub fn params_at(&self, year: i32, region: Region) -> Option<GpdParams> {
        self.fitted_params
            .iter()
            .find(|f| f.year == year && f.region == region)
            .map(|f| GpdParams { xi: f.xi, beta: f.beta })
    }

    pub fn coefficients(&self) -> Vec<f64> {
        self.nu_coefficients
            .iter()
            .chain(&self.xi_coefficients)
            .copied()
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit serializes")
    }
}

/// GPD parameters at a covariate row; errors when the tail index is at or below -1.
pub fn severity_params_at(fit: &SeverityFit, row: &DesignRow) -> Result<GpdParams> {
    let (nu, xi) = fit.linear_predictors(row)?;
    if !(xi > -1.0) {
        return Err(Error::Boundary { xi });
    }
    GpdParams::new(xi, nu.exp() / (1.0 + xi))
}

/// Pooled GPD log-likelihood of the regression coefficients `[nu block, xi block]`.
pub struct GpdRegressionLoglik {
    x_nu: DMatrix<f64>,
    x_xi: DMatrix<f64>,
    y: Vec<f64>,
    link: XiLink,
}

impl GpdRegressionLoglik {
    pub fn new(spec: &SeveritySpec, rows: &[DesignRow], y: Vec<f64>) -> Self {
        Self {
            x_nu: design::design_matrix(&spec.nu_terms, rows.iter()),
            x_xi: design::design_matrix(&spec.xi_terms, rows.iter()),
            y,
            link: spec.xi_link,
        }
    }

    fn split<'a>(&self, theta: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        theta.split_at(self.x_nu.ncols())
    }

    /// Per-observation `(nu, xi)` at `theta`.
    pub fn per_observation(&self, theta: &[f64]) -> Vec<(f64, f64)> {
        let (a, b) = self.split(theta);
        let nu = &self.x_nu * DVector::from_column_slice(a);
        let eta = &self.x_xi * DVector::from_column_slice(b);
        nu.iter().zip(eta.iter()).map(|(&n, &e)| (n, self.link.xi(e))).collect()
    }
}

impl Objective for GpdRegressionLoglik {
    fn dim(&self) -> usize {
        self.x_nu.ncols() + self.x_xi.ncols()
    }

    fn value_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let (a, b) = self.split(theta);
        let nu = &self.x_nu * DVector::from_column_slice(a);
        let eta = &self.x_xi * DVector::from_column_slice(b);
        let n = self.y.len();
        let mut s_nu = DVector::zeros(n);
        let mut s_eta = DVector::zeros(n);
        let mut ll = 0.0;
        for i in 0..n {
            let xi = self.link.xi(eta[i]);
            let (l, dn, dx) = ortho_log_density_score(nu[i], xi, self.y[i]);
            if !l.is_finite() {
                grad.fill(0.0);
                return f64::NEG_INFINITY;
            }
            ll += l;
            s_nu[i] = dn;
            s_eta[i] = dx * self.link.dxi_deta(eta[i]);
        }
        let ga = self.x_nu.transpose() * s_nu;
        let gb = self.x_xi.transpose() * s_eta;
        let (g1, g2) = grad.split_at_mut(a.len());
        g1.copy_from_slice(ga.as_slice());
        g2.copy_from_slice(gb.as_slice());
        ll
    }

    fn hessian(&self, theta: &[f64]) -> Option<DMatrix<f64>> {
        let (a, b) = self.split(theta);
        let nu = &self.x_nu * DVector::from_column_slice(a);
        let eta = &self.x_xi * DVector::from_column_slice(b);
        let n = self.y.len();
        let (mut w_nn, mut w_ne, mut w_ee) = (DVector::zeros(n), DVector::zeros(n), DVector::zeros(n));
        for i in 0..n {
            let xi = self.link.xi(eta[i]);
            let (_, _, d_xi) = ortho_log_density_score(nu[i], xi, self.y[i]);
            let (h_nn, h_nx, h_xx) = ortho_log_density_hessian(nu[i], xi, self.y[i]);
            let g1 = self.link.dxi_deta(eta[i]);
            w_nn[i] = h_nn;
            w_ne[i] = h_nx * g1;
            w_ee[i] = h_xx * g1 * g1 + d_xi * self.link.d2xi_deta2(eta[i]);
        }
        let weigh = |x: &DMatrix<f64>, wt: &DVector<f64>| {
            let mut m = x.clone();
            for (mut row, &v) in m.row_iter_mut().zip(wt.iter()) {
                row *= v;
            }
            m
        };
        let (pn, px) = (a.len(), b.len());
        let mut h = DMatrix::zeros(pn + px, pn + px);
        h.view_mut((0, 0), (pn, pn))
            .copy_from(&(self.x_nu.transpose() * weigh(&self.x_nu, &w_nn)));
        let cross = self.x_nu.transpose() * weigh(&self.x_xi, &w_ne);
        h.view_mut((0, pn), (pn, px)).copy_from(&cross);
        h.view_mut((pn, 0), (px, pn)).copy_from(&cross.transpose());
        h.view_mut((pn, pn), (px, px))
            .copy_from(&(self.x_xi.transpose() * weigh(&self.x_xi, &w_ee)));
        Some(h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeverityOptions {
    /// Minimum positive-death events per free parameter.
    pub min_obs_per_param: usize,
    pub optim: OptimOptions,
}

impl Default for SeverityOptions {
    fn default() -> Self {
        Self {
            min_obs_per_param: 10,
            optim: OptimOptions {
                max_iter: 500,
                grad_tol: 1e-5,
                rel_tol: 1e-10,
            },
        }
    }
}

/// Probability-weighted-moment estimate `(xi, beta)` for a pooled sample.
pub fn pwm_estimate(sample: &[f64]) -> (f64, f64) {
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len() as f64;
    let a0 = s.iter().sum::<f64>() / n;
    let a1 = s
        .iter()
        .enumerate()
        .map(|(i, x)| (1.0 - (i as f64 + 0.65) / n) * x)
        .sum::<f64>()
        / n;
    let denom = a0 - 2.0 * a1;
    if denom <= 0.0 || !denom.is_finite() {
        return (0.5, a0.max(f64::MIN_POSITIVE));
    }
    let xi = 2.0 - a0 / denom;
    let beta = 2.0 * a0 * a1 / denom;
    (xi, beta)
}

/// Keeps strictly positive events of one type inside a window.
pub fn severity_observations(
    events: &[RescaledEvent],
    response: DisasterType,
    window: YearRange,
) -> Result<Vec<SeverityObservation>> {
    let mut out = Vec::new();
    for ev in events
        .iter()
        .filter(|e| e.base.disaster_type == response && window.contains(e.base.year()))
    {
        if !(ev.rescaled_deaths > 0.0) {
            return Err(Error::Domain(format!(
                "event {} has non-positive deaths; severity input must be strictly positive",
                ev.base.event_id
            )));
        }
        out.push(SeverityObservation {
            year: ev.base.year(),
            region: ev.base.region,
            deaths: ev.rescaled_deaths,
        });
    }
    Ok(out)
}

/// Events with at least one death; zero-death events only enter frequency counts.
pub fn positive_events(events: &[RescaledEvent]) -> Vec<RescaledEvent> {
    events.iter().filter(|e| e.rescaled_deaths > 0.0).cloned().collect()
}

pub fn fit_severity(events: &[RescaledEvent], panel: &AnnualPanel, spec: &SeveritySpec) -> Result<SeverityFit> {
    let obs = severity_observations(events, spec.response, spec.window)?;
    fit_severity_observations(&obs, panel, spec, &SeverityOptions::default())
}

pub fn fit_severity_observations(
    obs: &[SeverityObservation],
    panel: &AnnualPanel,
    spec: &SeveritySpec,
    opts: &SeverityOptions,
) -> Result<SeverityFit> {
    design::validate_terms(&spec.nu_terms, "nu terms")?;
    design::validate_terms(&spec.xi_terms, "xi terms")?;
    let p = spec.n_params();
    if obs.len() < opts.min_obs_per_param * p {
        return Err(Error::Degenerate(format!(
            "{} positive {} events for {p} parameters (floor {} per parameter)",
            obs.len(),
            spec.response,
            opts.min_obs_per_param
        )));
    }
    if let Some(o) = obs.iter().find(|o| !(o.deaths > 0.0)) {
        return Err(Error::Domain(format!(
            "non-positive deaths {} in {} {}",
            o.deaths, o.year, o.region
        )));
    }
    let rows: Vec<DesignRow> = obs
        .iter()
        .map(|o| {
            panel
                .design_row(o.year, o.region)
                .ok_or_else(|| Error::Coverage(format!("no covariates for {} {}", o.year, o.region)))
        })
        .collect::<Result<_>>()?;
    let y: Vec<f64> = obs.iter().map(|o| o.deaths).collect();
    let obj = GpdRegressionLoglik::new(spec, &rows, y);

    let r_nu = optim::qr_r(&obj.x_nu)?;
    let r_xi = optim::qr_r(&obj.x_xi)?;
    let (pn, px) = (r_nu.ncols(), r_xi.ncols());
    let mut r = DMatrix::zeros(p, p);
    r.view_mut((0, 0), (pn, pn)).copy_from(&r_nu);
    r.view_mut((pn, pn), (px, px)).copy_from(&r_xi);
    let pre = Linear::new(&obj, r)?;

    let (xi0, beta0) = pwm_estimate(&obj.y);
    let xi0 = xi0.clamp(0.0, 0.9);
    let nu0 = (1.0 + xi0).ln() + beta0.ln();
    let mut theta0 = vec![0.0; p];
    for (i, t) in spec.nu_terms.iter().enumerate() {
        if *t == Term::Intercept {
            theta0[i] = nu0;
        }
    }
    for (i, t) in spec.xi_terms.iter().enumerate() {
        if *t == Term::Intercept {
            theta0[pn + i] = spec.xi_link.eta(xi0);
        }
    }
    let res = optim::maximize(&pre, &pre.from_inner(&theta0), &opts.optim)?;
    let theta = pre.to_inner(&res.x);

    let h = optim::hessian_of(&obj, &theta);
    let cov = optim::covariance_from_hessian(&h)?;
    let se: Vec<f64> = cov.diagonal().iter().map(|v| v.sqrt()).collect();
    let loglik = obj.value(&theta);

    let mut fit = SeverityFit {
        spec: spec.clone(),
        nu_coefficients: theta[..pn].to_vec(),
        xi_coefficients: theta[pn..].to_vec(),
        nu_std_errors: se[..pn].to_vec(),
        xi_std_errors: se[pn..].to_vec(),
        loglik,
        n_obs: obs.len(),
        iterations: res.iterations,
        grad_norm: res.grad_norm,
        fitted_params: Vec::new(),
        warnings: Vec::new(),
    };
    attach_fitted_params(&mut fit, panel);
    Ok(fit)
}

/// Fills `fitted_params` over the panel cells of the fit window and records boundary warnings.
pub fn attach_fitted_params(fit: &mut SeverityFit, panel: &AnnualPanel) {
    let mut params = Vec::new();
    let mut boundary = 0usize;
    let mut infinite_mean = 0usize;
    for row in panel
        .rows(fit.spec.response)
        .iter()
        .filter(|r| fit.spec.window.contains(r.year))
    {
        match severity_params_at(fit, &row.design()) {
            Ok(g) => {
                if g.xi >= 1.0 {
                    infinite_mean += 1;
                }
                params.push(FittedGpd {
                    year: row.year,
                    region: row.region,
                    xi: g.xi,
                    beta: g.beta,
                })
            }
            Err(_) => boundary += 1,
        }
    }
    fit.fitted_params = params;
    fit.warnings
        .retain(|w| !w.starts_with("boundary") && !w.starts_with("infinite"));
    if boundary > 0 {
        fit.warnings.push(format!(
            "boundary: fitted xi <= -1 in {boundary} (year, region) cell(s)"
        ));
    }
    if infinite_mean > 0 {
        fit.warnings.push(format!(
            "infinite mean: fitted xi >= 1 in {infinite_mean} (year, region) cell(s)"
        ));
    }
}
