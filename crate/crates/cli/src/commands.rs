//! The five subcommands. Each reads its inputs, calls the library and
//! hands the results to an output [`Writer`].

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use deathtoll::bootstrap::run_bootstrap;
use deathtoll::calibration::{reference_frequency, reference_severity, standard_severity_spec};
use deathtoll::data::{
    build_panel, load_covariates, load_events, rescale_all, write_covariates, write_events, AnnualPanel, CovariateSet,
    EventSchema, RescaledEvent,
};
use deathtoll::dependence::{
    chi_bar_pair, count_residual_correlation, null_band, u_grid, write_chi_bar_csv, write_correlation_csv,
    ChiBarOptions,
};
use deathtoll::design::Term;
use deathtoll::frequency::{fit_frequency, FrequencyFit, FrequencySpec};
use deathtoll::projection::{load_scenarios, project, write_scenarios, ProjectionTable, ScenarioPath, Stat};
use deathtoll::report::render_parameter_table;
use deathtoll::rng::{derive_seed, stream, streams};
use deathtoll::selection::{ladder_terms, selection_ladder, Block, LadderConfig, LadderReport};
use deathtoll::severity::{fit_severity, severity_observations, SeverityFit, SeverityOptions, SeveritySpec};
use deathtoll::synthetic::{reference_covariates, simulate_events, sustainable_scenario};
use deathtoll::{DisasterType, Region};

use crate::config::{RunConfig, Selection};
use crate::error::{CliError, Context};
use crate::output::{read_json, Writer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedCoefficient {
    pub term: String,
    pub estimate: f64,
    pub std_error: f64,
}

fn named(terms: &[Term], coefs: &[f64], ses: &[f64]) -> Vec<NamedCoefficient> {
    terms
        .iter()
        .zip(coefs.iter().zip(ses))
        .map(|(t, (&estimate, &std_error))| NamedCoefficient {
            term: t.name(),
            estimate,
            std_error,
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FrequencyDocument {
    pub coefficients: Vec<NamedCoefficient>,
    pub loglik: f64,
    pub adj_r2: f64,
    pub fit: FrequencyFit,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SeverityDocument {
    pub nu: Vec<NamedCoefficient>,
    pub xi: Vec<NamedCoefficient>,
    pub loglik: f64,
    pub fit: SeverityFit,
}

#[derive(Debug, Serialize)]
struct LadderDocument<'a> {
    nu: &'a LadderReport,
    xi: &'a LadderReport,
}

fn frequency_file(t: DisasterType) -> String {
    format!("{}_frequency.json", t.as_str())
}

fn severity_file(t: DisasterType) -> String {
    format!("{}_severity.json", t.as_str())
}

fn type_index(t: DisasterType) -> u64 {
    DisasterType::ALL.iter().position(|&x| x == t).expect("listed type") as u64
}

fn require(path: &Path) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found"),
        ))
    }
}

fn covariates(cfg: &RunConfig) -> Result<CovariateSet, CliError> {
    let path = cfg.covariates_path();
    require(&path)?;
    let series = load_covariates(&path).context(|| "loading covariates".into())?;
    Ok(CovariateSet::new(series))
}

struct Observed {
    events: Vec<RescaledEvent>,
    panel: AnnualPanel,
}

fn observed(cfg: &RunConfig, cov: &CovariateSet) -> Result<Observed, CliError> {
    let window = cfg.window()?;
    let path = cfg.events_path();
    require(&path)?;
    let schema = EventSchema {
        window,
        ..EventSchema::default()
    };
    let raw = load_events(&path, &schema).context(|| "loading events".into())?;
    let events = rescale_all(&raw, cov, cfg.reference_year).context(|| "rescaling deaths".into())?;
    let panel = build_panel(&events, cov, window).context(|| "building the annual panel".into())?;
    Ok(Observed { events, panel })
}

fn scenario_path(cfg: &RunConfig, cov: &CovariateSet) -> Result<ScenarioPath, CliError> {
    let path = cfg.scenarios_path();
    require(&path)?;
    let rows = load_scenarios(&path).context(|| "loading scenarios".into())?;
    ScenarioPath::from_rows(&rows, &cfg.scenario, cfg.scenario_base_year)
        .and_then(|p| p.ratio_splice(cov))
        .context(|| format!("scenario {}", cfg.scenario))
}

fn load_fits(dir: &Path, t: DisasterType) -> Result<(FrequencyFit, SeverityFit), CliError> {
    let f = read_json::<FrequencyDocument>(&dir.join(frequency_file(t)))?.body.fit;
    let s = read_json::<SeverityDocument>(&dir.join(severity_file(t)))?.body.fit;
    Ok((f, s))
}

fn generator(cfg: &RunConfig, t: DisasterType) -> Result<(FrequencyFit, SeverityFit), CliError> {
    if cfg.generator == "reference" {
        Ok((reference_frequency(t), reference_severity(t)))
    } else {
        load_fits(Path::new(&cfg.generator), t)
    }
}

/// Synthetic covariates, scenario paths and events from the configured generator.
pub fn simulate(cfg: &RunConfig, out: &mut Writer) -> Result<(), CliError> {
    let window = cfg.window()?;
    let cov = reference_covariates(window).context(|| "synthetic covariates".into())?;
    let scenarios =
        sustainable_scenario(&cfg.scenario, &cov, cfg.scenario_base_year).context(|| "synthetic scenario".into())?;
    let master = derive_seed(cfg.seed, streams::SIMULATE);
    let mut events = Vec::new();
    for &t in &cfg.types {
        let (f, s) = generator(cfg, t)?;
        let mut rng = stream(master, type_index(t));
        events.extend(
            simulate_events(&f, &s, &cov, window, cfg.reference_year, &mut rng)
                .context(|| format!("simulating {t}"))?,
        );
    }
    let series: Vec<_> = cov.iter().cloned().collect();
    out.text("events.csv", |b| write_events(b, &events))?;
    out.text("covariates.csv", |b| write_covariates(b, &series))?;
    out.text("scenarios.csv", |b| write_scenarios(b, &scenarios))?;
    Ok(())
}

struct TypeFit {
    t: DisasterType,
    frequency: FrequencyFit,
    severity: SeverityFit,
    ladders: Option<(LadderReport, LadderReport)>,
}

fn fit_type(cfg: &RunConfig, obs: &Observed, t: DisasterType) -> Result<TypeFit, CliError> {
    let window = cfg.window()?;
    let frequency =
        fit_frequency(&obs.panel, &FrequencySpec::standard(t, window)).context(|| format!("{t} frequency fit"))?;
    let base = standard_severity_spec(t, window);
    let (severity, ladders) = match cfg.selection {
        Selection::Standard => (
            fit_severity(&obs.events, &obs.panel, &base).context(|| format!("{t} severity fit"))?,
            None,
        ),
        Selection::Ladder => {
            let sample = severity_observations(&obs.events, t, window).context(|| format!("{t} severities"))?;
            let opts = SeverityOptions::default();
            let ladder = |spec: &SeveritySpec, block: Block, choice: Option<usize>| {
                let config = LadderConfig {
                    alpha: cfg.alpha,
                    override_choice: choice,
                    ..LadderConfig::default()
                };
                selection_ladder(&sample, &obs.panel, spec, block, &config, &opts)
                    .context(|| format!("{t} {} ladder", block.as_str()))
            };
            let nu = ladder(&base, Block::Nu, cfg.nu_override.get(&t).copied())?;
            let with_nu = SeveritySpec {
                nu_terms: ladder_terms(nu.selected).context(|| format!("{t} nu ladder"))?,
                ..base
            };
            let xi = ladder(&with_nu, Block::Xi, cfg.xi_override.get(&t).copied())?;
            let fit = xi
                .selected_fit()
                .cloned()
                .ok_or_else(|| CliError::Config(format!("{t}: selected xi model has no fit")))?;
            (fit, Some((nu, xi)))
        }
    };
    Ok(TypeFit {
        t,
        frequency,
        severity,
        ladders,
    })
}

/// Frequency and severity fits per type, ladder reports and the parameter table.
pub fn fit(cfg: &RunConfig, out: &mut Writer) -> Result<(), CliError> {
    let cov = covariates(cfg)?;
    let obs = observed(cfg, &cov)?;
    let fits: Vec<TypeFit> = cfg
        .types
        .par_iter()
        .map(|&t| fit_type(cfg, &obs, t))
        .collect::<Result<_, _>>()?;
    for f in &fits {
        let (fr, sv) = (&f.frequency, &f.severity);
        out.json(
            &format!("fits/{}", frequency_file(f.t)),
            &FrequencyDocument {
                coefficients: named(&fr.spec.terms, &fr.coefficients, &fr.std_errors),
                loglik: fr.loglik,
                adj_r2: fr.adj_r2,
                fit: fr.clone(),
            },
        )?;
        out.json(
            &format!("fits/{}", severity_file(f.t)),
            &SeverityDocument {
                nu: named(&sv.spec.nu_terms, &sv.nu_coefficients, &sv.nu_std_errors),
                xi: named(&sv.spec.xi_terms, &sv.xi_coefficients, &sv.xi_std_errors),
                loglik: sv.loglik,
                fit: sv.clone(),
            },
        )?;
        if let Some((nu, xi)) = &f.ladders {
            out.json(
                &format!("fits/{}_ladder.json", f.t.as_str()),
                &LadderDocument { nu, xi },
            )?;
            out.text(&format!("fits/{}_ladder.txt", f.t.as_str()), |b| {
                b.extend_from_slice(nu.render_text().as_bytes());
                b.push(b'\n');
                b.extend_from_slice(xi.render_text().as_bytes());
                Ok(())
            })?;
        }
        for w in &sv.warnings {
            eprintln!("warning: {} severity: {w}", f.t);
        }
    }
    let columns: Vec<_> = fits.iter().map(|f| (Some(&f.frequency), Some(&f.severity))).collect();
    let table = render_parameter_table(&columns);
    out.text("fits/table.txt", |b| {
        b.extend_from_slice(table.as_bytes());
        Ok(())
    })?;
    Ok(())
}

/// Point projections for every type under the configured scenario.
pub fn project_cmd(cfg: &RunConfig, out: &mut Writer) -> Result<(), CliError> {
    let cov = covariates(cfg)?;
    let path = scenario_path(cfg, &cov)?;
    let dir = cfg.fits_dir();
    let mut table = ProjectionTable::default();
    for &t in &cfg.types {
        let (f, s) = load_fits(&dir, t)?;
        let part = project(&f, &s, &path, &cfg.horizons).context(|| format!("{t} projection"))?;
        for r in part
            .rows
            .iter()
            .filter(|r| r.deaths_stat == Stat::Undefined && r.region.is_some())
        {
            eprintln!(
                "warning: {t} {} {}: tail index <= -1, deaths left undefined",
                r.region.map(Region::code).unwrap_or_default(),
                r.horizon
            );
        }
        table.extend(part);
    }
    let name = &cfg.scenario;
    out.text(&format!("projections/{name}.csv"), |b| table.write_csv(b))?;
    let text = table.render_text();
    out.text(&format!("projections/{name}.txt"), |b| {
        b.extend_from_slice(text.as_bytes());
        Ok(())
    })?;
    Ok(())
}

/// Parametric bootstrap of the projections for every type.
pub fn bootstrap(cfg: &RunConfig, out: &mut Writer) -> Result<(), CliError> {
    let cov = covariates(cfg)?;
    let path = scenario_path(cfg, &cov)?;
    let panel = build_panel(&[], &cov, cfg.window()?).context(|| "building the covariate panel".into())?;
    let dir = cfg.fits_dir();
    for &t in &cfg.types {
        let (f, s) = load_fits(&dir, t)?;
        let config = deathtoll::bootstrap::BootstrapConfig {
            seed: derive_seed(cfg.seed, type_index(t)),
            ..cfg.bootstrap()
        };
        let result =
            run_bootstrap(&f, &s, &panel, &path, &cfg.horizons, &config).context(|| format!("{t} bootstrap"))?;
        for w in &result.warnings {
            eprintln!("warning: {t} bootstrap: {w}");
        }
        out.text(&format!("bootstrap/{}.csv", t.as_str()), |b| result.write_csv(b))?;
        out.text(&format!("bootstrap/{}_replicates.csv", t.as_str()), |b| {
            result.write_replicates_csv(b)
        })?;
    }
    Ok(())
}

/// Count-residual correlations with a Monte Carlo null band, and chi-bar curves.
pub fn depend(cfg: &RunConfig, out: &mut Writer) -> Result<(), CliError> {
    let cov = covariates(cfg)?;
    let obs = observed(cfg, &cov)?;
    let dir = cfg.fits_dir();
    let grid = u_grid(cfg.chi_u_from, cfg.chi_u_to, cfg.chi_u_steps);
    for (k, (a, b)) in cfg.pair_types()?.into_iter().enumerate() {
        let (fa, sa) = load_fits(&dir, a)?;
        let (fb, sb) = load_fits(&dir, b)?;
        let label = format!("{}_{}", a.as_str(), b.as_str());
        let corr = count_residual_correlation(&fa, &fb, &obs.panel, cfg.window_length)
            .context(|| format!("{a}/{b} count correlation"))?;
        let band = null_band(
            &fa,
            &fb,
            &obs.panel,
            cfg.window_length,
            cfg.null_simulations,
            cfg.null_level,
            derive_seed(derive_seed(cfg.seed, streams::NULL_BAND), k as u64),
        )
        .context(|| format!("{a}/{b} null band"))?;
        out.text(&format!("depend/counts_{label}.csv"), |w| {
            write_correlation_csv(w, &corr, Some(&band))
        })?;
        let opts = ChiBarOptions {
            conventional: cfg.conventional,
            resamples: cfg.chi_resamples,
            seed: derive_seed(derive_seed(cfg.seed, streams::CHI_BAR), k as u64),
        };
        let (raw, filtered) =
            chi_bar_pair(&obs.events, &sa, &sb, &obs.panel, &grid, &opts).context(|| format!("{a}/{b} chi-bar"))?;
        out.text(&format!("depend/chi_bar_{label}.csv"), |w| {
            write_chi_bar_csv(w, &[&raw, &filtered])
        })?;
    }
    Ok(())
}

/// Paths written by a command, relative to the output root.
pub fn relative(paths: &[PathBuf], root: &Path) -> Vec<String> {
    paths
        .iter()
        .map(|p| p.strip_prefix(root).unwrap_or(p).display().to_string())
        .collect()
}
