//! Projection of disaster counts, deaths per disaster and annual death tolls
//! along scenario covariate paths.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{CovariateSet, Scope, CO2_PER_CAPITA, GDP_PER_CAPITA, POPULATION};
use crate::design::DesignRow;
use crate::distributions::{gpd_mean, gpd_median, Moment};
use crate::error::{Error, Result, RowDiagnostic};
use crate::frequency::{predict_lambda, FrequencyFit};
use crate::region::{DisasterType, Region};
use crate::severity::{severity_params_at, SeverityFit};
use crate::spline::Interpolant;

pub const DEFAULT_HORIZONS: [i32; 4] = [2040, 2060, 2080, 2100];

/// One knot of a raw scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub scenario: String,
    pub series: String,
    pub scope: Scope,
    pub year: i32,
    pub value: f64,
}

pub fn load_scenarios(path: &Path) -> Result<Vec<ScenarioRow>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_scenarios(file, path)
}

pub fn parse_scenarios<R: std::io::Read>(reader: R, path: &Path) -> Result<Vec<ScenarioRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?
        .clone();
    let mut idx = [0usize; 5];
    for (k, name) in ["scenario", "series", "scope", "year", "value"].iter().enumerate() {
        idx[k] = headers.iter().position(|h| h == *name).ok_or_else(|| Error::Header {
            path: path.to_path_buf(),
            expected: name.to_string(),
        })?;
    }
    let mut rows = Vec::new();
    let mut bad = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                bad.push(RowDiagnostic {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let get = |k: usize| rec.get(idx[k]).unwrap_or("");
        let parsed = (|| -> std::result::Result<ScenarioRow, String> {
            let series = get(1).to_string();
            if ![CO2_PER_CAPITA, GDP_PER_CAPITA, POPULATION].contains(&series.as_str()) {
                return Err(format!("unknown series `{series}`"));
            }
            let scope = Scope::from_str(get(2)).map_err(|e| e.to_string())?;
            let year = get(3).parse::<i32>().map_err(|_| format!("bad year `{}`", get(3)))?;
            let value = get(4).parse::<f64>().map_err(|_| format!("bad value `{}`", get(4)))?;
            if !(value.is_finite() && value > 0.0) {
                return Err(format!("non-positive value {value}"));
            }
            Ok(ScenarioRow {
                scenario: get(0).to_string(),
                series,
                scope,
                year,
                value,
            })
        })();
        match parsed {
            Ok(r) => rows.push(r),
            Err(message) => bad.push(RowDiagnostic { line, message }),
        }
    }
    if !bad.is_empty() {
        return Err(Error::Rows {
            path: path.to_path_buf(),
            rows: bad,
        });
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    Ok(rows)
}

pub fn write_scenarios<W: std::io::Write>(writer: W, rows: &[ScenarioRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::Csv {
        path: "<output>".into(),
        message: e.to_string(),
    };
    w.write_record(["scenario", "series", "scope", "year", "value"])
        .map_err(err)?;
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            r.series.clone(),
            r.scope.to_string(),
            r.year.to_string(),
            format!("{}", r.value),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

/// Names of the scenarios present in a set of rows, in first-seen order.
pub fn scenario_names(rows: &[ScenarioRow]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for r in rows {
        if !out.contains(&r.scenario) {
            out.push(r.scenario.clone());
        }
    }
    out
}

/// Annual scenario covariates from the base year to the last projected year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioPath {
    pub name: String,
    pub base_year: i32,
    pub world_co2_pc: BTreeMap<i32, f64>,
    pub regional_gdp_pc: BTreeMap<Region, BTreeMap<i32, f64>>,
    pub regional_population: BTreeMap<Region, BTreeMap<i32, f64>>,
}

fn check_series(what: &str, base: i32, s: &BTreeMap<i32, f64>) -> Result<i32> {
    let (Some((&first, _)), Some((&last, _))) = (s.first_key_value(), s.last_key_value()) else {
        return Err(Error::Coverage(format!("{what}: empty series")));
    };
    if first > base {
        return Err(Error::Coverage(format!(
            "{what}: starts in {first}, after base year {base}"
        )));
    }
    if (last - first + 1) as usize != s.len() {
        return Err(Error::Coverage(format!("{what}: years are not contiguous")));
    }
    if let Some((y, v)) = s.iter().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::Domain(format!("{what}: non-positive value {v} in {y}")));
    }
    Ok(last)
}

impl ScenarioPath {
    pub fn new(
        name: &str,
        base_year: i32,
        world_co2_pc: BTreeMap<i32, f64>,
        regional_gdp_pc: BTreeMap<Region, BTreeMap<i32, f64>>,
        regional_population: BTreeMap<Region, BTreeMap<i32, f64>>,
    ) -> Result<Self> {
        check_series("co2_pc WORLD", base_year, &world_co2_pc)?;
        for r in Region::ALL {
            for (what, m) in [("gdp_pc", &regional_gdp_pc), ("population", &regional_population)] {
                let s = m
                    .get(&r)
                    .ok_or_else(|| Error::Coverage(format!("scenario `{name}` has no {what} for {r}")))?;
                check_series(&format!("{what} {r}"), base_year, s)?;
            }
        }
        Ok(Self {
            name: name.to_string(),
            base_year,
            world_co2_pc,
            regional_gdp_pc,
            regional_population,
        })
    }

    /// Builds annual paths by spline interpolation through the knots of one scenario.
    pub fn from_rows(rows: &[ScenarioRow], name: &str, base_year: i32) -> Result<Self> {
        let mine: Vec<&ScenarioRow> = rows.iter().filter(|r| r.scenario == name).collect();
        if mine.is_empty() {
            return Err(Error::Coverage(format!("no rows for scenario `{name}`")));
        }
        let annual = |series: &str, scope: &Scope| -> Result<BTreeMap<i32, f64>> {
            let mut knots: BTreeMap<i32, f64> = BTreeMap::new();
            for r in mine.iter().filter(|r| r.series == series && &r.scope == scope) {
                if knots.insert(r.year, r.value).is_some() {
                    return Err(Error::Spec(format!(
                        "scenario `{name}`: duplicate {series} {scope} {}",
                        r.year
                    )));
                }
            }
            if knots.is_empty() {
                return Err(Error::Coverage(format!(
                    "scenario `{name}` has no {series} for {scope}"
                )));
            }
            let (&first, _) = knots.first_key_value().unwrap();
            let (&last, _) = knots.last_key_value().unwrap();
            if first > base_year {
                return Err(Error::Coverage(format!(
                    "scenario `{name}` {series} {scope} starts in {first}, after base year {base_year}"
                )));
            }
            let spline = Interpolant::new(
                knots.keys().map(|&y| y as f64).collect(),
                knots.values().copied().collect(),
            )?;
            (base_year..=last).map(|y| Ok((y, spline.eval(y as f64)?))).collect()
        };
        let co2 = annual(CO2_PER_CAPITA, &Scope::World)?;
        let mut gdp = BTreeMap::new();
        let mut pop = BTreeMap::new();
        for r in Region::ALL {
            gdp.insert(r, annual(GDP_PER_CAPITA, &Scope::Region(r))?);
            pop.insert(r, annual(POPULATION, &Scope::Region(r))?);
        }
        Self::new(name, base_year, co2, gdp, pop)
    }

    fn lookup(&self, what: &str, s: Option<&BTreeMap<i32, f64>>, year: i32) -> Result<f64> {
        s.and_then(|m| m.get(&year))
            .copied()
            .ok_or_else(|| Error::Coverage(format!("scenario `{}` has no {what} for {year}", self.name)))
    }

    pub fn co2(&self, year: i32) -> Result<f64> {
        self.lookup("co2_pc", Some(&self.world_co2_pc), year)
    }

    pub fn gdp(&self, region: Region, year: i32) -> Result<f64> {
        self.lookup(&format!("gdp_pc {region}"), self.regional_gdp_pc.get(&region), year)
    }

    pub fn population(&self, region: Region, year: i32) -> Result<f64> {
        self.lookup(
            &format!("population {region}"),
            self.regional_population.get(&region),
            year,
        )
    }

    pub fn design_row(&self, year: i32, region: Region) -> Result<DesignRow> {
        Ok(DesignRow {
            region,
            log_co2: self.co2(year)?.ln(),
            log_gdp: self.gdp(region, year)?.ln(),
        })
    }

    /// Population at `year` relative to the base year.
    pub fn population_ratio(&self, region: Region, year: i32) -> Result<f64> {
        Ok(self.population(region, year)? / self.population(region, self.base_year)?)
    }

    /// Rescales each series so that its base-year value equals the observed one.
    pub fn ratio_splice(&self, observed: &CovariateSet) -> Result<Self> {
        let b = self.base_year;
        let scale = |m: &BTreeMap<i32, f64>, obs: f64| -> BTreeMap<i32, f64> {
            let k = obs / m[&b];
            m.iter().map(|(&y, &v)| (y, v * k)).collect()
        };
        let co2 = scale(&self.world_co2_pc, observed.world_co2(b)?);
        let mut gdp = BTreeMap::new();
        let mut pop = BTreeMap::new();
        for r in Region::ALL {
            gdp.insert(r, scale(&self.regional_gdp_pc[&r], observed.regional_gdp(r, b)?));
            pop.insert(
                r,
                scale(&self.regional_population[&r], observed.population(Scope::Region(r), b)?),
            );
        }
        Self::new(&self.name, b, co2, gdp, pop)
    }

    /// Copy with the CO2 path transformed year by year.
    pub fn map_co2(&self, f: impl Fn(i32, f64) -> f64) -> Result<Self> {
        let co2 = self.world_co2_pc.iter().map(|(&y, &v)| (y, f(y, v))).collect();
        Self::new(
            &self.name,
            self.base_year,
            co2,
            self.regional_gdp_pc.clone(),
            self.regional_population.clone(),
        )
    }

    /// Copy with one region's population multiplied by `factor` after the base year.
    pub fn scale_population(&self, region: Region, factor: f64) -> Result<Self> {
        let mut pop = self.regional_population.clone();
        for (y, v) in pop.get_mut(&region).unwrap().iter_mut() {
            if *y > self.base_year {
                *v *= factor;
            }
        }
        Self::new(
            &self.name,
            self.base_year,
            self.world_co2_pc.clone(),
            self.regional_gdp_pc.clone(),
            pop,
        )
    }
}

/// Which statistic of the deaths-per-disaster distribution a value is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stat {
    Mean,
    /// Used when the tail index is at least 1 and the mean is infinite.
    Median,
    /// Aggregate of mean and median components.
    Mixed,
    /// Tail index at or below -1, where the scale is not identified; the value is NaN.
    Undefined,
}

impl Stat {
    pub fn as_str(self) -> &'static str {
        match self {
            Stat::Mean => "mean",
            Stat::Median => "median",
            Stat::Mixed => "mixed",
            Stat::Undefined => "undefined",
        }
    }
}

/// Expected annual number of disasters per (region, horizon).
pub fn project_counts(
    fit: &FrequencyFit,
    path: &ScenarioPath,
    horizons: &[i32],
) -> Result<BTreeMap<(Region, i32), f64>> {
    let mut out = BTreeMap::new();
    for &h in horizons {
        for r in Region::ALL {
            out.insert((r, h), predict_lambda(fit, &path.design_row(h, r)?)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeathsProjection {
    pub value: f64,
    pub stat: Stat,
    pub xi: f64,
}

/// Deaths per disaster at the horizon, scaled to the projected population.
pub fn project_deaths(
    fit: &SeverityFit,
    path: &ScenarioPath,
    region: Region,
    horizon: i32,
) -> Result<DeathsProjection> {
    let params = match severity_params_at(fit, &path.design_row(horizon, region)?) {
        Ok(p) => p,
        Err(Error::Boundary { xi }) => {
            return Ok(DeathsProjection {
                value: f64::NAN,
                stat: Stat::Undefined,
                xi,
            })
        }
        Err(e) => return Err(e),
    };
    let ratio = path.population_ratio(region, horizon)?;
    let (value, stat) = match gpd_mean(&params) {
        Moment::Finite(m) => (m, Stat::Mean),
        Moment::Infinite => (gpd_median(&params), Stat::Median),
    };
    Ok(DeathsProjection {
        value: value * ratio,
        stat,
        xi: params.xi,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionRow {
    pub scenario: String,
    pub disaster_type: DisasterType,
    /// `None` is the world aggregate.
    pub region: Option<Region>,
    pub horizon: i32,
    pub n_disasters: f64,
    pub deaths_per_disaster: f64,
    pub deaths_stat: Stat,
    pub annual_deaths: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProjectionTable {
    pub rows: Vec<ProjectionRow>,
}

pub fn project_annual_toll(
    scenario: &str,
    disaster_type: DisasterType,
    counts: &BTreeMap<(Region, i32), f64>,
    deaths: &BTreeMap<(Region, i32), DeathsProjection>,
) -> Result<ProjectionTable> {
    if counts.len() != deaths.len() || counts.keys().any(|k| !deaths.contains_key(k)) {
        return Err(Error::Spec("count and death projections have different keys".into()));
    }
    let mut rows = Vec::new();
    let horizons: Vec<i32> = {
        let mut h: Vec<i32> = counts.keys().map(|&(_, h)| h).collect();
        h.sort_unstable();
        h.dedup();
        h
    };
    for h in horizons {
        let mut n_sum = 0.0;
        let mut d_sum = 0.0;
        let mut stats = Vec::new();
        for r in Region::ALL {
            let (Some(&n), Some(d)) = (counts.get(&(r, h)), deaths.get(&(r, h))) else {
                continue;
            };
            let annual = n * d.value;
            n_sum += n;
            d_sum += annual;
            stats.push(d.stat);
            rows.push(ProjectionRow {
                scenario: scenario.to_string(),
                disaster_type,
                region: Some(r),
                horizon: h,
                n_disasters: n,
                deaths_per_disaster: d.value,
                deaths_stat: d.stat,
                annual_deaths: annual,
            });
        }
        let stat = if stats.contains(&Stat::Undefined) {
            Stat::Undefined
        } else if stats.iter().all(|s| *s == Stat::Mean) {
            Stat::Mean
        } else if stats.iter().all(|s| *s == Stat::Median) {
            Stat::Median
        } else {
            Stat::Mixed
        };
        rows.push(ProjectionRow {
            scenario: scenario.to_string(),
            disaster_type,
            region: None,
            horizon: h,
            n_disasters: n_sum,
            deaths_per_disaster: if n_sum > 0.0 || d_sum.is_nan() {
                d_sum / n_sum
            } else {
                0.0
            },
            deaths_stat: stat,
            annual_deaths: d_sum,
        });
    }
    Ok(ProjectionTable { rows })
}

/// Counts, deaths and tolls for one disaster type.
pub fn project(
    freq: &FrequencyFit,
    sev: &SeverityFit,
    path: &ScenarioPath,
    horizons: &[i32],
) -> Result<ProjectionTable> {
    if freq.spec.response != sev.spec.response {
        return Err(Error::Spec(format!(
            "frequency fit is for {}, severity fit for {}",
            freq.spec.response, sev.spec.response
        )));
    }
    let counts = project_counts(freq, path, horizons)?;
    let mut deaths = BTreeMap::new();
    for &h in horizons {
        for r in Region::ALL {
            deaths.insert((r, h), project_deaths(sev, path, r, h)?);
        }
    }
    project_annual_toll(&path.name, freq.spec.response, &counts, &deaths)
}

fn region_code(r: Option<Region>) -> &'static str {
    r.map(Region::code).unwrap_or("WORLD")
}

impl ProjectionTable {
    pub fn extend(&mut self, other: ProjectionTable) {
        self.rows.extend(other.rows);
    }

    pub fn get(&self, t: DisasterType, region: Option<Region>, horizon: i32) -> Option<&ProjectionRow> {
        self.rows
            .iter()
            .find(|r| r.disaster_type == t && r.region == region && r.horizon == horizon)
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
            "n_disasters",
            "deaths_per_disaster",
            "stat",
            "annual_deaths",
        ])
        .map_err(err)?;
        for r in &self.rows {
            w.write_record([
                r.scenario.clone(),
                r.disaster_type.as_str().to_string(),
                region_code(r.region).to_string(),
                r.horizon.to_string(),
                format!("{:.6}", r.n_disasters),
                format!("{:.6}", r.deaths_per_disaster),
                r.deaths_stat.as_str().to_string(),
                format!("{:.6}", r.annual_deaths),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::io("<output>", e))?;
        Ok(())
    }

    /// Aligned text panels, one per horizon; a `*` marks median-based deaths per disaster.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let mut keys: Vec<(String, i32)> = self.rows.iter().map(|r| (r.scenario.clone(), r.horizon)).collect();
        keys.sort();
        keys.dedup();
        let types: Vec<DisasterType> = DisasterType::ALL
            .into_iter()
            .filter(|t| self.rows.iter().any(|r| r.disaster_type == *t))
            .collect();
        for (scenario, h) in keys {
            let _ = writeln!(out, "Projections -- {scenario} -- {h}");
            let _ = write!(out, "{:<28}", "");
            for t in &types {
                let _ = write!(out, "| {:^32}", t.as_str());
            }
            out.push('\n');
            let _ = write!(out, "{:<28}", "");
            for _ in &types {
                let _ = write!(out, "| {:>10} {:>10} {:>10}", "disasters", "deaths", "annual");
            }
            out.push('\n');
            let regions: Vec<Option<Region>> = Region::ALL.iter().map(|&r| Some(r)).chain([None]).collect();
            for reg in regions {
                let label = reg.map(Region::label).unwrap_or("World");
                let _ = write!(out, "{label:<28}");
                for t in &types {
                    match self
                        .rows
                        .iter()
                        .find(|r| r.scenario == scenario && r.horizon == h && r.disaster_type == *t && r.region == reg)
                    {
                        Some(r) if r.deaths_stat == Stat::Undefined => {
                            let _ = write!(out, "| {:>10.1} {:>10} {:>10}", r.n_disasters, "n/a", "n/a");
                        }
                        Some(r) => {
                            let star = if r.deaths_stat == Stat::Median { "*" } else { " " };
                            let _ = write!(
                                out,
                                "| {:>10.1} {:>9.1}{star} {:>10.1}",
                                r.n_disasters, r.deaths_per_disaster, r.annual_deaths
                            );
                        }
                        None => {
                            let _ = write!(out, "| {:>10} {:>10} {:>10}", "-", "-", "-");
                        }
                    }
                }
                out.push('\n');
            }
            out.push('\n');
        }
        if self.rows.iter().any(|r| r.deaths_stat == Stat::Median) {
            out.push_str("* median instead of mean (tail index >= 1)\n");
        }
        if self.rows.iter().any(|r| r.deaths_stat == Stat::Undefined) {
            out.push_str("n/a: tail index <= -1 at the horizon covariates\n");
        }
        out
    }
}
