//! Python bindings: distributions, fits, projections, bootstrap and chi-bar.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use deathtoll::bootstrap::{run_bootstrap, BootstrapConfig};
use deathtoll::calibration::{reference_frequency, reference_severity, standard_severity_spec};
use deathtoll::data::{
    build_panel, load_covariates, load_events, rescale_all, AnnualPanel, CovariateSet, EventSchema, RescaledEvent,
    YearRange,
};
use deathtoll::dependence::{chi_bar_uniform, empirical_margins};
use deathtoll::design::DesignRow;
use deathtoll::distributions::{gpd_cdf, gpd_mean, gpd_median, gpd_quantile, gpd_sample, GpdParams};
use deathtoll::frequency::{fit_frequency, predict_lambda, FrequencySpec};
use deathtoll::projection::{load_scenarios, project as project_table, ScenarioPath};
use deathtoll::rng::stream;
use deathtoll::selection::lr_test_from_logliks;
use deathtoll::severity::{fit_severity, severity_params_at};
use deathtoll::synthetic::{reference_covariates, sustainable_scenario};
use deathtoll::{DisasterType, Region};

create_exception!(
    deathtoll,
    DeathtollError,
    PyException,
    "Error raised by the model library."
);

fn err(e: deathtoll::Error) -> PyErr {
    DeathtollError::new_err(e.to_string())
}

fn disaster(name: &str) -> PyResult<DisasterType> {
    name.parse().map_err(err)
}

fn region(code: &str) -> PyResult<Region> {
    code.parse().map_err(err)
}

fn window(w: (i32, i32)) -> PyResult<YearRange> {
    YearRange::new(w.0, w.1).map_err(err)
}

/// Generalized Pareto distribution with tail index `xi` and scale `beta`.
#[pyclass(name = "Gpd", frozen, from_py_object)]
#[derive(Clone)]
struct PyGpd(GpdParams);

#[pymethods]
impl PyGpd {
    #[new]
    fn new(xi: f64, beta: f64) -> PyResult<Self> {
        GpdParams::new(xi, beta).map(Self).map_err(err)
    }

    #[getter]
    fn xi(&self) -> f64 {
        self.0.xi
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta
    }

    fn cdf(&self, y: f64) -> PyResult<f64> {
        gpd_cdf(&self.0, y).map_err(err)
    }

    fn quantile(&self, p: f64) -> PyResult<f64> {
        gpd_quantile(&self.0, p).map_err(err)
    }

    /// `None` when the tail index is at least 1.
    fn mean(&self) -> Option<f64> {
        gpd_mean(&self.0).finite()
    }

    fn median(&self) -> f64 {
        gpd_median(&self.0)
    }

    #[pyo3(signature = (n, seed = 0))]
    fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        gpd_sample(&self.0, n, &mut stream(seed, 0))
    }

    fn __repr__(&self) -> String {
        format!("Gpd(xi={}, beta={})", self.0.xi, self.0.beta)
    }
}

/// Events rescaled to a reference population, with their annual count panel.
#[pyclass(name = "Dataset", frozen)]
struct PyDataset {
    events: Vec<RescaledEvent>,
    panel: AnnualPanel,
    covariates: CovariateSet,
}

#[pymethods]
impl PyDataset {
    #[staticmethod]
    #[pyo3(signature = (events, covariates, window = (1960, 2019), reference_year = 2019))]
    fn load(events: PathBuf, covariates: PathBuf, window: (i32, i32), reference_year: i32) -> PyResult<Self> {
        let w = self::window(window)?;
        let schema = EventSchema {
            window: w,
            ..EventSchema::default()
        };
        let raw = load_events(&events, &schema).map_err(err)?;
        let cov = CovariateSet::new(load_covariates(&covariates).map_err(err)?);
        let events = rescale_all(&raw, &cov, reference_year).map_err(err)?;
        let panel = build_panel(&events, &cov, w).map_err(err)?;
        Ok(Self {
            events,
            panel,
            covariates: cov,
        })
    }

    fn __len__(&self) -> usize {
        self.events.len()
    }

    /// Annual counts of one disaster type as `(year, region, count)`.
    fn counts(&self, disaster_type: &str) -> PyResult<Vec<(i32, String, u32)>> {
        let t = disaster(disaster_type)?;
        Ok(self
            .panel
            .rows(t)
            .iter()
            .map(|r| (r.year, r.region.code().to_string(), r.count))
            .collect())
    }
}

#[pyclass(name = "FrequencyFit", frozen)]
struct PyFrequencyFit(deathtoll::frequency::FrequencyFit);

#[pymethods]
impl PyFrequencyFit {
    #[getter]
    fn disaster_type(&self) -> &'static str {
        self.0.spec.response.as_str()
    }

    #[getter]
    fn terms(&self) -> Vec<String> {
        self.0.spec.terms.iter().map(|t| t.to_string()).collect()
    }

    #[getter]
    fn coefficients(&self) -> Vec<f64> {
        self.0.coefficients.clone()
    }

    #[getter]
    fn std_errors(&self) -> Vec<f64> {
        self.0.std_errors.clone()
    }

    #[getter]
    fn loglik(&self) -> f64 {
        self.0.loglik
    }

    /// Expected annual count in `region` at CO2 per capita `co2` and GDP per capita `gdp`.
    fn predict(&self, region: &str, co2: f64, gdp: f64) -> PyResult<f64> {
        let row = DesignRow {
            region: self::region(region)?,
            log_co2: co2.ln(),
            log_gdp: gdp.ln(),
        };
        predict_lambda(&self.0, &row).map_err(err)
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.0).expect("fit serializes")
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text)
            .map(Self)
            .map_err(|e| DeathtollError::new_err(e.to_string()))
    }
}

#[pyclass(name = "SeverityFit", frozen)]
struct PySeverityFit(deathtoll::severity::SeverityFit);

#[pymethods]
impl PySeverityFit {
    #[getter]
    fn disaster_type(&self) -> &'static str {
        self.0.spec.response.as_str()
    }

    #[getter]
    fn nu_coefficients(&self) -> Vec<f64> {
        self.0.nu_coefficients.clone()
    }

    #[getter]
    fn xi_coefficients(&self) -> Vec<f64> {
        self.0.xi_coefficients.clone()
    }

    #[getter]
    fn nu_std_errors(&self) -> Vec<f64> {
        self.0.nu_std_errors.clone()
    }

    #[getter]
    fn xi_std_errors(&self) -> Vec<f64> {
        self.0.xi_std_errors.clone()
    }

    #[getter]
    fn loglik(&self) -> f64 {
        self.0.loglik
    }

    #[getter]
    fn n_obs(&self) -> usize {
        self.0.n_obs
    }

    /// Deaths-per-disaster distribution in `region` at GDP per capita `gdp`.
    fn distribution(&self, region: &str, gdp: f64) -> PyResult<PyGpd> {
        let row = DesignRow {
            region: self::region(region)?,
            log_co2: 0.0,
            log_gdp: gdp.ln(),
        };
        severity_params_at(&self.0, &row).map(PyGpd).map_err(err)
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.0).expect("fit serializes")
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text)
            .map(Self)
            .map_err(|e| DeathtollError::new_err(e.to_string()))
    }
}

/// Covariate path of one socioeconomic scenario, spliced onto observed levels.
#[pyclass(name = "Scenario", frozen)]
struct PyScenario(ScenarioPath);

#[pymethods]
impl PyScenario {
    /// The built-in sustainable-development path over the synthetic covariates.
    #[staticmethod]
    #[pyo3(signature = (name = "SSP1", base_year = 2019))]
    fn reference(name: &str, base_year: i32) -> PyResult<Self> {
        let cov = reference_covariates(YearRange::default()).map_err(err)?;
        let rows = sustainable_scenario(name, &cov, base_year).map_err(err)?;
        ScenarioPath::from_rows(&rows, name, base_year)
            .and_then(|p| p.ratio_splice(&cov))
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (path, name, dataset, base_year = 2019))]
    fn load(path: PathBuf, name: &str, dataset: &PyDataset, base_year: i32) -> PyResult<Self> {
        let rows = load_scenarios(&path).map_err(err)?;
        ScenarioPath::from_rows(&rows, name, base_year)
            .and_then(|p| p.ratio_splice(&dataset.covariates))
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name.clone()
    }
}

#[pyfunction]
fn reference_fits(disaster_type: &str) -> PyResult<(PyFrequencyFit, PySeverityFit)> {
    let t = disaster(disaster_type)?;
    Ok((
        PyFrequencyFit(reference_frequency(t)),
        PySeverityFit(reference_severity(t)),
    ))
}

/// Poisson regression on log CO2 by region.
#[pyfunction]
#[pyo3(signature = (dataset, disaster_type, window = (1960, 2019)))]
fn fit_frequency_model(dataset: &PyDataset, disaster_type: &str, window: (i32, i32)) -> PyResult<PyFrequencyFit> {
    let spec = FrequencySpec::standard(disaster(disaster_type)?, self::window(window)?);
    fit_frequency(&dataset.panel, &spec).map(PyFrequencyFit).map_err(err)
}

/// GPD regression with the standard nu and xi terms of the type.
#[pyfunction]
#[pyo3(signature = (dataset, disaster_type, window = (1960, 2019)))]
fn fit_severity_model(dataset: &PyDataset, disaster_type: &str, window: (i32, i32)) -> PyResult<PySeverityFit> {
    let spec = standard_severity_spec(disaster(disaster_type)?, self::window(window)?);
    fit_severity(&dataset.events, &dataset.panel, &spec)
        .map(PySeverityFit)
        .map_err(err)
}

#[pyfunction]
fn lr_test<'py>(py: Python<'py>, null_loglik: f64, alt_loglik: f64, df: usize) -> PyResult<Bound<'py, PyDict>> {
    let r = lr_test_from_logliks(null_loglik, alt_loglik, df).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("statistic", r.statistic)?;
    d.set_item("df", r.df)?;
    d.set_item("p_value", r.p_value)?;
    Ok(d)
}

/// Projection rows as dictionaries; the world aggregate has region `None`.
#[pyfunction]
#[pyo3(signature = (frequency, severity, scenario, horizons = vec![2040, 2060, 2080, 2100]))]
fn project<'py>(
    py: Python<'py>,
    frequency: &PyFrequencyFit,
    severity: &PySeverityFit,
    scenario: &PyScenario,
    horizons: Vec<i32>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let table = project_table(&frequency.0, &severity.0, &scenario.0, &horizons).map_err(err)?;
    table
        .rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("disaster_type", r.disaster_type.as_str())?;
            d.set_item("region", r.region.map(Region::code))?;
            d.set_item("horizon", r.horizon)?;
            d.set_item("n_disasters", r.n_disasters)?;
            d.set_item("deaths_per_disaster", r.deaths_per_disaster)?;
            d.set_item("stat", r.deaths_stat.as_str())?;
            d.set_item("annual_deaths", r.annual_deaths)?;
            Ok(d)
        })
        .collect()
}

/// Parametric bootstrap of the projections; returns one dictionary per entry.
/// Replicates are simulated over the covariates of `dataset`, or the synthetic ones.
#[pyfunction]
#[pyo3(signature = (
    frequency, severity, scenario, horizons = vec![2040], replications = 500, seed = 0,
    subsample_count = 100, subsample_size = 50, interval_level = 0.95, jobs = None, dataset = None
))]
#[allow(clippy::too_many_arguments)]
fn bootstrap<'py>(
    py: Python<'py>,
    frequency: &PyFrequencyFit,
    severity: &PySeverityFit,
    scenario: &PyScenario,
    horizons: Vec<i32>,
    replications: usize,
    seed: u64,
    subsample_count: usize,
    subsample_size: usize,
    interval_level: f64,
    jobs: Option<usize>,
    dataset: Option<&PyDataset>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let config = BootstrapConfig {
        replications,
        seed,
        subsample_count,
        subsample_size,
        interval_level,
        jobs,
    };
    let w = frequency.0.spec.window;
    let result = py
        .detach(|| {
            let panel = match dataset {
                Some(d) => build_panel(&[], &d.covariates, w)?,
                None => build_panel(&[], &reference_covariates(w)?, w)?,
            };
            run_bootstrap(&frequency.0, &severity.0, &panel, &scenario.0, &horizons, &config)
        })
        .map_err(err)?;
    result
        .entries
        .iter()
        .map(|e| {
            let d = PyDict::new(py);
            d.set_item("region", e.region.map(Region::code))?;
            d.set_item("horizon", e.horizon)?;
            d.set_item("quantity", e.quantity.as_str())?;
            d.set_item("median", e.median)?;
            d.set_item("low", e.low)?;
            d.set_item("high", e.high)?;
            d.set_item("n_effective", e.values.len())?;
            Ok(d)
        })
        .collect()
}

/// Chi-bar of two paired samples at each threshold; `None` where undefined.
#[pyfunction]
#[pyo3(signature = (a, b, u, conventional = false))]
fn chi_bar(a: Vec<f64>, b: Vec<f64>, u: Vec<f64>, conventional: bool) -> PyResult<Vec<Option<f64>>> {
    if a.len() != b.len() {
        return Err(DeathtollError::new_err(format!(
            "samples have different lengths ({} and {})",
            a.len(),
            b.len()
        )));
    }
    Ok(chi_bar_uniform(
        &empirical_margins(&a),
        &empirical_margins(&b),
        &u,
        conventional,
    ))
}

#[pymodule(name = "deathtoll")]
fn deathtoll_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("DeathtollError", m.py().get_type::<DeathtollError>())?;
    m.add_class::<PyGpd>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyFrequencyFit>()?;
    m.add_class::<PySeverityFit>()?;
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(reference_fits, m)?)?;
    m.add_function(wrap_pyfunction!(fit_frequency_model, m)?)?;
    m.add_function(wrap_pyfunction!(fit_severity_model, m)?)?;
    m.add_function(wrap_pyfunction!(lr_test, m)?)?;
    m.add_function(wrap_pyfunction!(project, m)?)?;
    m.add_function(wrap_pyfunction!(bootstrap, m)?)?;
    m.add_function(wrap_pyfunction!(chi_bar, m)?)?;
    Ok(())
}
