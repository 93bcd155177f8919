//! Run configuration: one flat TOML document, overridable from the command line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use deathtoll::bootstrap::BootstrapConfig;
use deathtoll::data::YearRange;
use deathtoll::projection::DEFAULT_HORIZONS;
use deathtoll::DisasterType;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// The fixed specification of each type.
    Standard,
    /// Likelihood-ratio ladder on nu, then on xi.
    Ladder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Events CSV; defaults to `<out>/events.csv`.
    pub events: Option<PathBuf>,
    /// Covariates CSV; defaults to `<out>/covariates.csv`.
    pub covariates: Option<PathBuf>,
    /// Scenario CSV; defaults to `<out>/scenarios.csv`.
    pub scenarios: Option<PathBuf>,
    /// Directory of fit documents read by project, bootstrap and depend; defaults to `<out>/fits`.
    pub fits: Option<PathBuf>,
    /// Generator for `simulate`: "reference" or a fits directory.
    pub generator: String,

    pub window_start: i32,
    pub window_end: i32,
    pub reference_year: i32,
    pub types: Vec<DisasterType>,

    pub selection: Selection,
    pub alpha: f64,
    /// Manual ladder choices by disaster type, e.g. `{ wildfire = 4 }`.
    pub nu_override: BTreeMap<DisasterType, usize>,
    pub xi_override: BTreeMap<DisasterType, usize>,

    pub scenario: String,
    pub scenario_base_year: i32,
    pub horizons: Vec<i32>,

    pub replications: usize,
    pub subsample_count: usize,
    pub subsample_size: usize,
    pub interval_level: f64,

    /// Type pairs for dependence diagnostics, e.g. `["flood:storm"]`.
    pub pairs: Vec<String>,
    pub window_length: usize,
    pub null_simulations: usize,
    pub null_level: f64,
    pub chi_u_from: f64,
    pub chi_u_to: f64,
    pub chi_u_steps: usize,
    pub chi_resamples: usize,
    pub conventional: bool,

    #[serde(skip_serializing)]
    pub seed: u64,
    #[serde(skip_serializing)]
    pub jobs: Option<usize>,
    #[serde(skip_serializing)]
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let window = YearRange::default();
        let boot = BootstrapConfig::test_profile();
        Self {
            events: None,
            covariates: None,
            scenarios: None,
            fits: None,
            generator: "reference".into(),
            window_start: window.start,
            window_end: window.end,
            reference_year: deathtoll::data::DEFAULT_REFERENCE_YEAR,
            types: vec![DisasterType::Flood, DisasterType::Storm],
            selection: Selection::Standard,
            alpha: 0.05,
            nu_override: BTreeMap::new(),
            xi_override: BTreeMap::new(),
            scenario: "SSP1".into(),
            scenario_base_year: 2019,
            horizons: DEFAULT_HORIZONS.to_vec(),
            replications: boot.replications,
            subsample_count: boot.subsample_count,
            subsample_size: boot.subsample_size,
            interval_level: boot.interval_level,
            pairs: vec!["flood:storm".into()],
            window_length: deathtoll::dependence::DEFAULT_WINDOW,
            null_simulations: 200,
            null_level: 0.99,
            chi_u_from: 0.5,
            chi_u_to: 0.95,
            chi_u_steps: 10,
            chi_resamples: deathtoll::dependence::DEFAULT_RESAMPLES,
            conventional: false,
            seed: 0,
            jobs: None,
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// Parses a config document; relative paths are taken relative to `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        for p in [&mut cfg.events, &mut cfg.covariates, &mut cfg.scenarios, &mut cfg.fits]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.out.is_relative() {
            cfg.out = base.join(&cfg.out);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.into(),
            source: e,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        self.window()?;
        if self.types.is_empty() {
            return bad("`types` is empty".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha = {} outside (0, 1)", self.alpha));
        }
        for (t, &k) in self.nu_override.iter().chain(&self.xi_override) {
            if !(1..=5).contains(&k) {
                return bad(format!("override for {t}: model {k} outside 1..=5"));
            }
        }
        if self.horizons.is_empty() {
            return bad("`horizons` is empty".into());
        }
        if self.generator != "reference" && !Path::new(&self.generator).is_dir() {
            return bad(format!(
                "generator `{}` is neither \"reference\" nor a directory",
                self.generator
            ));
        }
        if !(self.null_level > 0.0 && self.null_level < 1.0) {
            return bad(format!("null_level = {} outside (0, 1)", self.null_level));
        }
        if !(0.0 < self.chi_u_from && self.chi_u_from <= self.chi_u_to && self.chi_u_to < 1.0) || self.chi_u_steps == 0
        {
            return bad("chi-bar grid needs 0 < chi_u_from <= chi_u_to < 1 and chi_u_steps > 0".into());
        }
        self.pair_types()?;
        self.bootstrap()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn window(&self) -> Result<YearRange, CliError> {
        YearRange::new(self.window_start, self.window_end).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn bootstrap(&self) -> BootstrapConfig {
        BootstrapConfig {
            replications: self.replications,
            seed: self.seed,
            subsample_count: self.subsample_count,
            subsample_size: self.subsample_size,
            interval_level: self.interval_level,
            jobs: None,
        }
    }

    pub fn pair_types(&self) -> Result<Vec<(DisasterType, DisasterType)>, CliError> {
        self.pairs
            .iter()
            .map(|p| {
                let (a, b) = p
                    .split_once(':')
                    .ok_or_else(|| CliError::Config(format!("pair `{p}` is not of the form a:b")))?;
                let parse = |s: &str| s.parse::<DisasterType>().map_err(|e| CliError::Config(e.to_string()));
                Ok((parse(a)?, parse(b)?))
            })
            .collect()
    }

    fn input(&self, given: &Option<PathBuf>, default: &str) -> PathBuf {
        given.clone().unwrap_or_else(|| self.out.join(default))
    }

    pub fn events_path(&self) -> PathBuf {
        self.input(&self.events, "events.csv")
    }

    pub fn covariates_path(&self) -> PathBuf {
        self.input(&self.covariates, "covariates.csv")
    }

    pub fn scenarios_path(&self) -> PathBuf {
        self.input(&self.scenarios, "scenarios.csv")
    }

    pub fn fits_dir(&self) -> PathBuf {
        self.input(&self.fits, "fits")
    }

    /// SHA-256 of the settings that determine results; excludes seed, jobs and output directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        // input locations that default to the output directory are hashed as unset
        for p in [
            &mut canonical.events,
            &mut canonical.covariates,
            &mut canonical.scenarios,
            &mut canonical.fits,
        ]
        .into_iter()
        .flatten()
        {
            if p.starts_with(&self.out) {
                *p = p.strip_prefix(&self.out).expect("prefix checked").to_path_buf();
            }
        }
        let doc = serde_json::to_string(&canonical).expect("config serializes");
        let digest = Sha256::digest(doc.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn parses_flat_document() {
        let text = r#"
            types = ["flood", "landslide"]
            selection = "ladder"
            nu_override = { wildfire = 4 }
            replications = 20
            subsample_size = 10
            events = "data/events.csv"
        "#;
        let cfg = RunConfig::parse(text, Path::new("/runs")).unwrap();
        assert_eq!(cfg.types, vec![DisasterType::Flood, DisasterType::Landslide]);
        assert_eq!(cfg.selection, Selection::Ladder);
        assert_eq!(cfg.nu_override[&DisasterType::Wildfire], 4);
        assert_eq!(cfg.events_path(), PathBuf::from("/runs/data/events.csv"));
        assert_eq!(cfg.covariates_path(), PathBuf::from("/runs/out/covariates.csv"));
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            RunConfig::parse("replicates = 3", Path::new(".")),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn hash_ignores_seed_jobs_and_output() {
        let a = RunConfig::default();
        let b = RunConfig {
            seed: 7,
            jobs: Some(4),
            out: "elsewhere".into(),
            ..a.clone()
        };
        assert_eq!(a.hash(), b.hash());
        let c = RunConfig {
            replications: 10,
            ..a.clone()
        };
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn bad_values_are_config_errors() {
        let cfg = RunConfig {
            nu_override: [(DisasterType::Flood, 7)].into(),
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = RunConfig {
            pairs: vec!["flood-storm".into()],
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
