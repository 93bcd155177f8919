//! Parametric bootstrap: simulate histories from fitted models, refit,
//! reproject, and summarize with subsample-median intervals.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{AnnualPanel, YearRange};
use crate::distributions::{gpd_draw, poisson_sample, PoissonParams};
use crate::error::{Error, Result};
use crate::frequency::{fit_frequency, predict_lambda, FrequencyFit};
use crate::projection::{project, ProjectionTable, ScenarioPath};
use crate::region::{DisasterType, Region};
use crate::rng::{self, streams};
use crate::severity::{
    fit_severity_observations, severity_params_at, SeverityFit, SeverityObservation, SeverityOptions,
};

/// Counts and severities simulated for one disaster type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticHistory {
    pub disaster_type: DisasterType,
    pub window: YearRange,
    /// One count per panel row of the type, in panel order; zero outside `window`.
    pub counts: Vec<u32>,
    pub observations: Vec<SeverityObservation>,
}

impl SyntheticHistory {
    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }
}

/// Draws annual Poisson counts and, for each disaster, GPD deaths at the cell's parameters.
pub fn simulate_history<R: Rng + ?Sized>(
    freq: &FrequencyFit,
    sev: &SeverityFit,
    panel: &AnnualPanel,
    window: YearRange,
    rng: &mut R,
) -> Result<SyntheticHistory> {
    let t = freq.spec.response;
    if sev.spec.response != t {
        return Err(Error::Spec(format!(
            "frequency fit is for {t}, severity fit for {}",
            sev.spec.response
        )));
    }
    if !panel.window().contains_range(&window) {
        return Err(Error::Coverage(format!(
            "panel window {} does not cover {window}",
            panel.window()
        )));
    }
    let rows = panel.rows(t);
    let mut counts = vec![0u32; rows.len()];
    let mut observations = Vec::new();
    for (k, row) in rows.iter().enumerate() {
        if !window.contains(row.year) {
            continue;
        }
        let design = row.design();
        let lambda = predict_lambda(freq, &design)?;
        let n = poisson_sample(&PoissonParams::new(lambda)?, rng);
        counts[k] = u32::try_from(n).map_err(|_| Error::Domain(format!("simulated count {n} overflows")))?;
        if n == 0 {
            continue;
        }
        let params = severity_params_at(sev, &design)?;
        for _ in 0..n {
            let mut y = gpd_draw(&params, rng);
            while !(y > 0.0) {
                y = gpd_draw(&params, rng);
            }
            observations.push(SeverityObservation {
                year: row.year,
                region: row.region,
                deaths: y,
            });
        }
    }
    Ok(SyntheticHistory {
        disaster_type: t,
        window,
        counts,
        observations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replications: usize,
    pub seed: u64,
    pub subsample_count: usize,
    pub subsample_size: usize,
    pub interval_level: f64,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replications: 10_000,
            seed: 0,
            subsample_count: 100,
            subsample_size: 50,
            interval_level: 0.95,
            jobs: None,
        }
    }
}

impl BootstrapConfig {
    /// Reduced replication count for test runs.
    pub fn test_profile() -> Self {
        Self {
            replications: 500,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 || self.subsample_count == 0 || self.subsample_size == 0 {
            return Err(Error::Config(
                "replications, subsample_count and subsample_size must be positive".into(),
            ));
        }
        if self.subsample_size > self.replications {
            return Err(Error::Config(format!(
                "subsample_size {} exceeds replications {}",
                self.subsample_size, self.replications
            )));
        }
        if !(self.interval_level > 0.0 && self.interval_level < 1.0) {
            return Err(Error::Config(format!(
                "interval_level {} not in (0, 1)",
                self.interval_level
            )));
        }
        if self.jobs == Some(0) {
            return Err(Error::Config("jobs must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    NDisasters,
    DeathsPerDisaster,
    AnnualDeaths,
}

impl Quantity {
    pub const ALL: [Quantity; 3] = [
        Quantity::NDisasters,
        Quantity::DeathsPerDisaster,
        Quantity::AnnualDeaths,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Quantity::NDisasters => "n_disasters",
            Quantity::DeathsPerDisaster => "deaths_per_disaster",
            Quantity::AnnualDeaths => "annual_deaths",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapEntry {
    /// `None` is the world aggregate.
    pub region: Option<Region>,
    pub horizon: i32,
    pub quantity: Quantity,
    /// Finite values from the surviving replicates, in replicate-index order.
    pub values: Vec<f64>,
    pub median: f64,
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub scenario: String,
    pub disaster_type: DisasterType,
    pub config: BootstrapConfig,
    pub entries: Vec<BootstrapEntry>,
    pub refit_failures: usize,
    /// Indices of the dropped replicates.
    pub failed_replicates: Vec<usize>,
    pub warnings: Vec<String>,
}

fn keys(horizons: &[i32]) -> Vec<(Option<Region>, i32, Quantity)> {
    let mut out = Vec::new();
    for &h in horizons {
        for reg in Region::ALL.iter().map(|&r| Some(r)).chain([None]) {
            for q in Quantity::ALL {
                out.push((reg, h, q));
            }
        }
    }
    out
}

fn extract(table: &ProjectionTable, t: DisasterType, keys: &[(Option<Region>, i32, Quantity)]) -> Option<Vec<f64>> {
    keys.iter()
        .map(|&(reg, h, q)| {
            table.get(t, reg, h).map(|r| match q {
                Quantity::NDisasters => r.n_disasters,
                Quantity::DeathsPerDisaster => r.deaths_per_disaster,
                Quantity::AnnualDeaths => r.annual_deaths,
            })
        })
        .collect()
}

/// One simulate-refit-project cycle; `None` when a refit fails.
pub fn replicate(
    freq: &FrequencyFit,
    sev: &SeverityFit,
    panel: &AnnualPanel,
    path: &ScenarioPath,
    horizons: &[i32],
    seed: u64,
    index: u64,
) -> Result<Option<ProjectionTable>> {
    let t = freq.spec.response;
    let mut rng = rng::stream(seed, index);
    let hist = simulate_history(freq, sev, panel, freq.spec.window, &mut rng)?;
    let boot_panel = panel.with_counts(t, &hist.counts)?;
    let Ok(f) = fit_frequency(&boot_panel, &freq.spec) else {
        return Ok(None);
    };
    let Ok(s) = fit_severity_observations(&hist.observations, panel, &sev.spec, &SeverityOptions::default()) else {
        return Ok(None);
    };
    Ok(project(&f, &s, path, horizons).ok())
}

/// Linear-interpolation sample quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    quantile_sorted(&s, 0.5)
}

/// Interval from the spread of medians of random subsamples (drawn without replacement).
pub fn subsample_median_interval<R: Rng + ?Sized>(
    values: &[f64],
    count: usize,
    size: usize,
    level: f64,
    rng: &mut R,
) -> (f64, f64) {
    let n = values.len();
    let size = size.min(n).max(1);
    let mut medians: Vec<f64> = (0..count)
        .map(|_| {
            let picked: Vec<f64> = index::sample(rng, n, size).iter().map(|i| values[i]).collect();
            median(&picked)
        })
        .collect();
    medians.sort_by(|a, b| a.total_cmp(b));
    let alpha = (1.0 - level) / 2.0;
    (quantile_sorted(&medians, alpha), quantile_sorted(&medians, 1.0 - alpha))
}

pub fn run_bootstrap(
    freq: &FrequencyFit,
    sev: &SeverityFit,
    panel: &AnnualPanel,
    path: &ScenarioPath,
    horizons: &[i32],
    config: &BootstrapConfig,
) -> Result<BootstrapResult> {
    config.validate()?;
    let t = freq.spec.response;
    let keys = keys(horizons);
    let work = || -> Result<Vec<Option<Vec<f64>>>> {
        (0..config.replications)
            .into_par_iter()
            .map(|i| {
                Ok(replicate(freq, sev, panel, path, horizons, config.seed, i as u64)?
                    .and_then(|table| extract(&table, t, &keys)))
            })
            .collect()
    };
    let outcomes = match config.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    summarize(&path.name, t, horizons, outcomes, config)
}

/// Merges per-replicate outcomes (in replicate-index order) into a result.
pub fn summarize(
    scenario: &str,
    t: DisasterType,
    horizons: &[i32],
    outcomes: Vec<Option<Vec<f64>>>,
    config: &BootstrapConfig,
) -> Result<BootstrapResult> {
    let keys = keys(horizons);
    let failed_replicates: Vec<usize> = outcomes
        .iter()
        .enumerate()
        .filter(|(_, o)| o.is_none())
        .map(|(i, _)| i)
        .collect();
    let surviving: Vec<Vec<f64>> = outcomes.into_iter().flatten().collect();
    if surviving.is_empty() {
        return Err(Error::Optimizer {
            reason: format!("all {} bootstrap refits failed", failed_replicates.len()),
            iterations: 0,
            trace: Vec::new(),
        });
    }
    let sub_seed = rng::derive_seed(config.seed, streams::SUBSAMPLE);
    let entries = keys
        .iter()
        .enumerate()
        .map(|(k, &(region, horizon, quantity))| {
            // Cells with an undefined projection are NaN and leave the entry, not the replicate.
            let values: Vec<f64> = surviving.iter().map(|v| v[k]).filter(|x| x.is_finite()).collect();
            if values.is_empty() {
                return BootstrapEntry {
                    region,
                    horizon,
                    quantity,
                    values,
                    median: f64::NAN,
                    low: f64::NAN,
                    high: f64::NAN,
                };
            }
            let med = median(&values);
            let mut r = rng::stream(sub_seed, k as u64);
            let (lo, hi) = subsample_median_interval(
                &values,
                config.subsample_count,
                config.subsample_size,
                config.interval_level,
                &mut r,
            );
            BootstrapEntry {
                region,
                horizon,
                quantity,
                values,
                median: med,
                low: lo.min(med),
                high: hi.max(med),
            }
        })
        .collect::<Vec<BootstrapEntry>>();
    let mut warnings = Vec::new();
    let short = entries.iter().filter(|e| e.values.len() < surviving.len()).count();
    if short > 0 {
        warnings.push(format!(
            "{short} entries lost replicates whose tail index fell to -1 or below"
        ));
    }
    let n_fail = failed_replicates.len();
    if n_fail as f64 > 0.05 * config.replications as f64 {
        warnings.push(format!(
            "{n_fail} of {} replicates failed to refit (more than 5%)",
            config.replications
        ));
    }
    Ok(BootstrapResult {
        scenario: scenario.to_string(),
        disaster_type: t,
        config: *config,
        entries,
        refit_failures: n_fail,
        failed_replicates,
        warnings,
    })
}

impl BootstrapResult {
    pub fn entry(&self, region: Option<Region>, horizon: i32, quantity: Quantity) -> Option<&BootstrapEntry> {
        self.entries
            .iter()
            .find(|e| e.region == region && e.horizon == horizon && e.quantity == quantity)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::Csv {
            path: "<output>".into(),
            message: e.to_string(),
        };
        w.write_record([
            "scenario",
            "disaster_type",
            "region",
            "horizon",
            "quantity",
            "median",
            "low",
            "high",
            "n_effective",
        ])
        .map_err(err)?;
        for e in &self.entries {
            w.write_record([
                self.scenario.clone(),
                self.disaster_type.as_str().to_string(),
                e.region.map(Region::code).unwrap_or("WORLD").to_string(),
                e.horizon.to_string(),
                e.quantity.as_str().to_string(),
                format!("{:.6}", e.median),
                format!("{:.6}", e.low),
                format!("{:.6}", e.high),
                e.values.len().to_string(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::io("<output>", e))?;
        Ok(())
    }

    /// Per-replicate values, one row per (replicate, key).
    pub fn write_replicates_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::Csv {
            path: "<output>".into(),
            message: e.to_string(),
        };
        w.write_record(["replicate", "region", "horizon", "quantity", "value"])
            .map_err(err)?;
        let surviving: Vec<usize> = (0..self.config.replications)
            .filter(|i| !self.failed_replicates.contains(i))
            .collect();
        for e in &self.entries {
            for (i, v) in surviving.iter().zip(&e.values) {
                w.write_record([
                    i.to_string(),
                    e.region.map(Region::code).unwrap_or("WORLD").to_string(),
                    e.horizon.to_string(),
                    e.quantity.as_str().to_string(),
                    format!("{v:.6}"),
                ])
                .map_err(err)?;
            }
        }
        w.flush().map_err(|e| Error::io("<output>", e))?;
        Ok(())
    }
}
