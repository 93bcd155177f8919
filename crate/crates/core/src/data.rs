//! Event and covariate data model: CSV ingestion, annual-series
//! interpolation, population rescaling, and the annual count panel.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::design::DesignRow;
use crate::error::{Error, Result, RowDiagnostic};
use crate::region::{DisasterType, Region};
use crate::spline::Interpolant;

pub const CO2_PER_CAPITA: &str = "co2_pc";
pub const GDP_PER_CAPITA: &str = "gdp_pc";
pub const POPULATION: &str = "population";

pub const DEFAULT_REFERENCE_YEAR: i32 = 2019;

const DEFAULT_COUNTRY_REGIONS: &str = include_str!("../assets/country_regions.csv");

/// Inclusive range of calendar years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct YearRange {
    pub start: i32,
    pub end: i32,
}

impl YearRange {
    pub fn new(start: i32, end: i32) -> Result<Self> {
        if end < start {
            return Err(Error::Domain(format!("empty year range {start}..{end}")));
        }
        Ok(Self { start, end })
    }

    pub fn len(&self) -> usize {
        (self.end - self.start + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, year: i32) -> bool {
        year >= self.start && year <= self.end
    }

    pub fn contains_range(&self, other: &YearRange) -> bool {
        self.contains(other.start) && self.contains(other.end)
    }

    pub fn years(&self) -> impl Iterator<Item = i32> {
        self.start..=self.end
    }
}

impl Default for YearRange {
    fn default() -> Self {
        Self { start: 1960, end: 2019 }
    }
}

impl fmt::Display for YearRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.start, self.end)
    }
}

/// Calendar date mapped onto a continuous year axis; January 1 of year `y` is `y.0`.
pub fn fractional_year(date: NaiveDate) -> f64 {
    let year = date.year();
    let days = if NaiveDate::from_ymd_opt(year, 12, 31).unwrap().ordinal() == 366 {
        366.0
    } else {
        365.0
    };
    year as f64 + date.ordinal0() as f64 / days
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisasterEvent {
    pub event_id: String,
    pub date: NaiveDate,
    pub country: String,
    pub region: Region,
    pub disaster_type: DisasterType,
    pub deaths: u64,
}

impl DisasterEvent {
    /// Events are attributed to the calendar year in which they start.
    pub fn year(&self) -> i32 {
        self.date.year()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledEvent {
    pub base: DisasterEvent,
    pub rescaled_deaths: f64,
}

/// Country code to World Bank region lookup.
#[derive(Debug, Clone, Default)]
pub struct RegionMap {
    map: HashMap<String, Region>,
}

impl RegionMap {
    /// The bundled World Bank seven-region classification.
    pub fn world_bank() -> Self {
        Self::parse_csv(DEFAULT_COUNTRY_REGIONS.as_bytes(), Path::new("<bundled>"))
            .expect("bundled country map is valid")
    }

    pub fn from_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(file, path)
    }

    fn parse_csv<R: std::io::Read>(reader: R, path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut map = HashMap::new();
        let mut bad = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| csv_err(path, e))?;
            let (Some(c), Some(r)) = (rec.get(0), rec.get(1)) else {
                bad.push(RowDiagnostic {
                    line,
                    message: "expected `country,region`".into(),
                });
                continue;
            };
            match r.parse::<Region>() {
                Ok(region) => {
                    map.insert(c.to_ascii_uppercase(), region);
                }
                Err(e) => bad.push(RowDiagnostic {
                    line,
                    message: e.to_string(),
                }),
            }
        }
        if !bad.is_empty() {
            return Err(Error::Rows {
                path: path.into(),
                rows: bad,
            });
        }
        Ok(Self { map })
    }

    pub fn get(&self, country: &str) -> Option<Region> {
        self.map.get(&country.to_ascii_uppercase()).copied()
    }

    pub fn insert(&mut self, country: &str, region: Region) {
        self.map.insert(country.to_ascii_uppercase(), region);
    }
}

/// Column names and validation settings for an events file.
#[derive(Debug, Clone)]
pub struct EventSchema {
    pub date: String,
    pub country: String,
    pub region: String,
    pub disaster_type: String,
    pub deaths: String,
    /// Id column, used when present; rows get `L<line>` ids otherwise.
    pub event_id: Option<String>,
    pub window: YearRange,
    /// Used when the region cell is blank, and to cross-check it otherwise.
    pub region_map: Option<RegionMap>,
}

impl Default for EventSchema {
    fn default() -> Self {
        Self {
            date: "date".into(),
            country: "country".into(),
            region: "region".into(),
            disaster_type: "disaster_type".into(),
            deaths: "deaths".into(),
            event_id: Some("event_id".into()),
            window: YearRange::default(),
            region_map: None,
        }
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Csv {
        path: path.into(),
        message: e.to_string(),
    }
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim().eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::Header {
            path: path.into(),
            expected: name.into(),
        })
}

/// Reads an events CSV. Every rejected row is reported; nothing is dropped silently.
pub fn load_events(path: &Path, schema: &EventSchema) -> Result<Vec<DisasterEvent>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_events(file, path, schema)
}

pub fn parse_events<R: std::io::Read>(reader: R, path: &Path, schema: &EventSchema) -> Result<Vec<DisasterEvent>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if headers.is_empty() {
        return Err(Error::EmptyFile { path: path.into() });
    }
    let i_date = column(&headers, &schema.date, path)?;
    let i_country = column(&headers, &schema.country, path)?;
    let i_region = column(&headers, &schema.region, path)?;
    let i_type = column(&headers, &schema.disaster_type, path)?;
    let i_deaths = column(&headers, &schema.deaths, path)?;
    let i_id = schema.event_id.as_deref().and_then(|c| column(&headers, c, path).ok());

    let mut events = Vec::new();
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
        match parse_event_row(
            &rec,
            line,
            schema,
            [i_date, i_country, i_region, i_type, i_deaths],
            i_id,
        ) {
            Ok(ev) => events.push(ev),
            Err(message) => bad.push(RowDiagnostic { line, message }),
        }
    }
    if !bad.is_empty() {
        return Err(Error::Rows {
            path: path.into(),
            rows: bad,
        });
    }
    if events.is_empty() {
        return Err(Error::EmptyFile { path: path.into() });
    }
    Ok(events)
}

fn parse_event_row(
    rec: &csv::StringRecord,
    line: usize,
    schema: &EventSchema,
    cols: [usize; 5],
    id_col: Option<usize>,
) -> std::result::Result<DisasterEvent, String> {
    let field = |i: usize| rec.get(i).unwrap_or("");
    let [i_date, i_country, i_region, i_type, i_deaths] = cols;

    let date = NaiveDate::parse_from_str(field(i_date), "%Y-%m-%d")
        .map_err(|_| format!("malformed date `{}`", field(i_date)))?;
    if !schema.window.contains(date.year()) {
        return Err(format!("date {date} outside study window {}", schema.window));
    }
    let country = field(i_country).to_ascii_uppercase();
    if country.is_empty() {
        return Err("missing country".into());
    }
    let region_cell = field(i_region);
    let mapped = schema.region_map.as_ref().and_then(|m| m.get(&country));
    let region = if region_cell.is_empty() {
        match (&schema.region_map, mapped) {
            (_, Some(r)) => r,
            (Some(_), None) => return Err(format!("country `{country}` has no region mapping")),
            (None, None) => return Err("missing region".into()),
        }
    } else {
        let r = Region::from_str(region_cell).map_err(|e| e.to_string())?;
        if let Some(m) = mapped {
            if m != r {
                return Err(format!("region {r} disagrees with mapping {m} for `{country}`"));
            }
        }
        r
    };
    let disaster_type = DisasterType::from_str(field(i_type)).map_err(|e| e.to_string())?;
    let raw = field(i_deaths);
    let deaths = match raw.parse::<i64>() {
        Ok(d) if d >= 0 => d as u64,
        Ok(d) => return Err(format!("negative deaths {d}")),
        Err(_) => return Err(format!("unparseable deaths `{raw}`")),
    };
    let event_id = match id_col {
        Some(i) => field(i).to_string(),
        None => format!("L{line}"),
    };
    Ok(DisasterEvent {
        event_id,
        date,
        country,
        region,
        disaster_type,
        deaths,
    })
}

/// Writes events in the canonical `event_id,date,country,region,disaster_type,deaths` layout.
pub fn write_events<W: std::io::Write>(writer: W, events: &[DisasterEvent]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let wrap = |e: csv::Error| Error::Csv {
        path: "<output>".into(),
        message: e.to_string(),
    };
    w.write_record(["event_id", "date", "country", "region", "disaster_type", "deaths"])
        .map_err(wrap)?;
    for ev in events {
        w.write_record([
            ev.event_id.clone(),
            ev.date.format("%Y-%m-%d").to_string(),
            ev.country.clone(),
            ev.region.code().to_string(),
            ev.disaster_type.as_str().to_string(),
            ev.deaths.to_string(),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

/// Geographic scope of a covariate series.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scope {
    World,
    Region(Region),
    Country(String),
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::World => f.write_str("WORLD"),
            Scope::Region(r) => f.write_str(r.code()),
            Scope::Country(c) => f.write_str(c),
        }
    }
}

impl FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Domain("empty scope".into()));
        }
        if s.eq_ignore_ascii_case("world") || s.eq_ignore_ascii_case("wld") {
            return Ok(Scope::World);
        }
        if let Ok(r) = s.parse::<Region>() {
            return Ok(Scope::Region(r));
        }
        Ok(Scope::Country(s.to_ascii_uppercase()))
    }
}

/// An annual series with contiguous years.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateSeries {
    pub name: String,
    pub scope: Scope,
    pub unit: String,
    observations: BTreeMap<i32, f64>,
}

fn default_unit(name: &str) -> &'static str {
    match name {
        CO2_PER_CAPITA => "t CO2 per capita",
        GDP_PER_CAPITA => "USD PPP 2017 per capita",
        POPULATION => "persons",
        _ => "",
    }
}

impl CovariateSeries {
    pub fn new(name: impl Into<String>, scope: Scope, observations: BTreeMap<i32, f64>) -> Result<Self> {
        let name = name.into();
        let label = format!("{name}/{scope}");
        if observations.is_empty() {
            return Err(Error::Degenerate(format!("series {label} has no observations")));
        }
        let first = *observations.keys().next().unwrap();
        for (k, (year, value)) in observations.iter().enumerate() {
            if *year != first + k as i32 {
                return Err(Error::Coverage(format!(
                    "series {label} is not contiguous: gap before {year}"
                )));
            }
            if !value.is_finite() {
                return Err(Error::Domain(format!("series {label}: non-finite value in {year}")));
            }
            let must_be_positive = matches!(name.as_str(), CO2_PER_CAPITA | GDP_PER_CAPITA | POPULATION);
            if must_be_positive && *value <= 0.0 {
                return Err(Error::Domain(format!(
                    "series {label}: value {value} in {year} must be strictly positive"
                )));
            }
        }
        let unit = default_unit(&name).to_string();
        Ok(Self {
            name,
            scope,
            unit,
            observations,
        })
    }

    pub fn from_pairs(name: &str, scope: Scope, pairs: impl IntoIterator<Item = (i32, f64)>) -> Result<Self> {
        Self::new(name, scope, pairs.into_iter().collect())
    }

    pub fn value(&self, year: i32) -> Option<f64> {
        self.observations.get(&year).copied()
    }

    pub fn years(&self) -> YearRange {
        YearRange {
            start: *self.observations.keys().next().unwrap(),
            end: *self.observations.keys().next_back().unwrap(),
        }
    }

    pub fn observations(&self) -> &BTreeMap<i32, f64> {
        &self.observations
    }

    pub fn interpolant(&self) -> Interpolant {
        let xs = self.observations.keys().map(|&y| y as f64).collect();
        let ys = self.observations.values().copied().collect();
        Interpolant::new(xs, ys).expect("validated series")
    }
}

/// Value of an annual series at a calendar date (natural cubic spline; linear below four knots).
pub fn interpolate_annual(series: &CovariateSeries, date: NaiveDate) -> Result<f64> {
    series.interpolant().eval(fractional_year(date))
}

/// Reads `name,scope,year,value` rows and groups them into series.
pub fn load_covariates(path: &Path) -> Result<Vec<CovariateSeries>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_covariates(file, path)
}

pub fn parse_covariates<R: std::io::Read>(reader: R, path: &Path) -> Result<Vec<CovariateSeries>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let cols: Vec<usize> = ["name", "scope", "year", "value"]
        .iter()
        .map(|c| column(&headers, c, path))
        .collect::<Result<_>>()?;
    let mut groups: BTreeMap<(String, Scope), BTreeMap<i32, f64>> = BTreeMap::new();
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
        let field = |k: usize| rec.get(cols[k]).unwrap_or("");
        let parsed = (|| -> std::result::Result<(String, Scope, i32, f64), String> {
            let name = field(0).to_string();
            if name.is_empty() {
                return Err("missing name".into());
            }
            let scope = field(1).parse::<Scope>().map_err(|e| e.to_string())?;
            let year = field(2)
                .parse::<i32>()
                .map_err(|_| format!("bad year `{}`", field(2)))?;
            let value = field(3)
                .parse::<f64>()
                .map_err(|_| format!("bad value `{}`", field(3)))?;
            Ok((name, scope, year, value))
        })();
        match parsed {
            Ok((name, scope, year, value)) => {
                if groups
                    .entry((name.clone(), scope.clone()))
                    .or_default()
                    .insert(year, value)
                    .is_some()
                {
                    bad.push(RowDiagnostic {
                        line,
                        message: format!("duplicate {name}/{scope} for {year}"),
                    });
                }
            }
            Err(message) => bad.push(RowDiagnostic { line, message }),
        }
    }
    if !bad.is_empty() {
        return Err(Error::Rows {
            path: path.into(),
            rows: bad,
        });
    }
    if groups.is_empty() {
        return Err(Error::EmptyFile { path: path.into() });
    }
    groups
        .into_iter()
        .map(|((name, scope), obs)| CovariateSeries::new(name, scope, obs))
        .collect()
}

pub fn write_covariates<W: std::io::Write>(writer: W, series: &[CovariateSeries]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let wrap = |e: csv::Error| Error::Csv {
        path: "<output>".into(),
        message: e.to_string(),
    };
    w.write_record(["name", "scope", "year", "value"]).map_err(wrap)?;
    for s in series {
        for (year, value) in s.observations() {
            w.write_record([
                s.name.clone(),
                s.scope.to_string(),
                year.to_string(),
                format!("{value}"),
            ])
            .map_err(wrap)?;
        }
    }
    w.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

/// Keyed collection of covariate series.
#[derive(Debug, Clone, Default)]
pub struct CovariateSet {
    series: BTreeMap<(String, Scope), CovariateSeries>,
}

impl CovariateSet {
    pub fn new(series: impl IntoIterator<Item = CovariateSeries>) -> Self {
        Self {
            series: series
                .into_iter()
                .map(|s| ((s.name.clone(), s.scope.clone()), s))
                .collect(),
        }
    }

    pub fn get(&self, name: &str, scope: &Scope) -> Option<&CovariateSeries> {
        self.series.get(&(name.to_string(), scope.clone()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &CovariateSeries> {
        self.series.values()
    }

    fn annual(&self, name: &str, scope: Scope, year: i32) -> Result<f64> {
        let s = self
            .get(name, &scope)
            .ok_or_else(|| Error::Coverage(format!("no `{name}` series for scope {scope}")))?;
        s.value(year)
            .ok_or_else(|| Error::Coverage(format!("`{name}` for {scope} has no value for {year}")))
    }

    pub fn world_co2(&self, year: i32) -> Result<f64> {
        self.annual(CO2_PER_CAPITA, Scope::World, year)
    }

    pub fn regional_gdp(&self, region: Region, year: i32) -> Result<f64> {
        self.annual(GDP_PER_CAPITA, Scope::Region(region), year)
    }

    pub fn population(&self, scope: Scope, year: i32) -> Result<f64> {
        self.annual(POPULATION, scope, year)
    }

    /// Design covariates attached to a (year, region) cell.
    pub fn design_row(&self, year: i32, region: Region) -> Result<DesignRow> {
        Ok(DesignRow {
            region,
            log_co2: self.world_co2(year)?.ln(),
            log_gdp: self.regional_gdp(region, year)?.ln(),
        })
    }
}

/// Rescales deaths to the reference-year population of the event's country.
pub fn rescale_deaths(
    event: &DisasterEvent,
    population: &CovariateSeries,
    reference_year: i32,
) -> Result<RescaledEvent> {
    if population.name != POPULATION {
        return Err(Error::Spec(format!(
            "expected a `{POPULATION}` series, got `{}`",
            population.name
        )));
    }
    if population.scope != Scope::Country(event.country.clone()) {
        return Err(Error::Coverage(format!(
            "population series scope {} does not match country {}",
            population.scope, event.country
        )));
    }
    rescale_with(event, &population.interpolant(), reference_year)
}

fn rescale_with(event: &DisasterEvent, pop: &Interpolant, reference_year: i32) -> Result<RescaledEvent> {
    let coverage = |what: String| Error::Coverage(format!("population of {} does not cover {what}", event.country));
    let p_ref = pop
        .eval(reference_year as f64)
        .map_err(|_| coverage(format!("reference year {reference_year}")))?;
    let p_event = pop
        .eval(fractional_year(event.date))
        .map_err(|_| coverage(format!("event date {}", event.date)))?;
    if !(p_event > 0.0 && p_ref > 0.0) {
        return Err(Error::Domain(format!(
            "non-positive interpolated population for {} at {}",
            event.country, event.date
        )));
    }
    let rescaled_deaths = if event.deaths == 0 {
        0.0
    } else {
        event.deaths as f64 * p_ref / p_event
    };
    Ok(RescaledEvent {
        base: event.clone(),
        rescaled_deaths,
    })
}

/// Rescales a batch of events, building each country's spline once.
pub fn rescale_all(
    events: &[DisasterEvent],
    covariates: &CovariateSet,
    reference_year: i32,
) -> Result<Vec<RescaledEvent>> {
    let mut cache: HashMap<&str, Interpolant> = HashMap::new();
    events
        .iter()
        .map(|ev| {
            if !cache.contains_key(ev.country.as_str()) {
                let s = covariates
                    .get(POPULATION, &Scope::Country(ev.country.clone()))
                    .ok_or_else(|| Error::Coverage(format!("no population series for country {}", ev.country)))?;
                cache.insert(ev.country.as_str(), s.interpolant());
            }
            rescale_with(ev, &cache[ev.country.as_str()], reference_year)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelRow {
    pub year: i32,
    pub region: Region,
    pub disaster_type: DisasterType,
    pub count: u32,
    pub log_co2: f64,
    pub log_gdp: f64,
}

impl PanelRow {
    pub fn design(&self) -> DesignRow {
        DesignRow {
            region: self.region,
            log_co2: self.log_co2,
            log_gdp: self.log_gdp,
        }
    }
}

/// One row per (year, region, disaster type); zero-count cells are kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnualPanel {
    window: YearRange,
    /// Ordered by disaster type, then year, then region.
    rows: Vec<PanelRow>,
}

impl AnnualPanel {
    fn offset(&self, t: DisasterType) -> usize {
        DisasterType::ALL.iter().position(|&d| d == t).unwrap() * self.cells_per_type()
    }

    fn cells_per_type(&self) -> usize {
        self.window.len() * Region::ALL.len()
    }

    pub fn window(&self) -> YearRange {
        self.window
    }

    pub fn all_rows(&self) -> &[PanelRow] {
        &self.rows
    }

    /// Rows for one disaster type, ordered by year then region.
    pub fn rows(&self, t: DisasterType) -> &[PanelRow] {
        let o = self.offset(t);
        &self.rows[o..o + self.cells_per_type()]
    }

    pub fn row(&self, t: DisasterType, year: i32, region: Region) -> Option<&PanelRow> {
        if !self.window.contains(year) {
            return None;
        }
        let i = (year - self.window.start) as usize * Region::ALL.len() + region.index();
        Some(&self.rows(t)[i])
    }

    pub fn design_row(&self, year: i32, region: Region) -> Option<DesignRow> {
        self.row(DisasterType::Flood, year, region).map(PanelRow::design)
    }

    pub fn total_count(&self, t: DisasterType) -> u64 {
        self.rows(t).iter().map(|r| r.count as u64).sum()
    }

    /// Copy of the panel with the counts of one type replaced (same row order as [`Self::rows`]).
    pub fn with_counts(&self, t: DisasterType, counts: &[u32]) -> Result<Self> {
        if counts.len() != self.cells_per_type() {
            return Err(Error::Dimension {
                expected: self.cells_per_type(),
                got: counts.len(),
            });
        }
        let mut out = self.clone();
        let o = self.offset(t);
        for (row, &c) in out.rows[o..o + counts.len()].iter_mut().zip(counts) {
            row.count = c;
        }
        Ok(out)
    }

    /// Copy with every row's covariates transformed; used for equivariance checks.
    pub fn map_covariates(&self, f: impl Fn(&PanelRow) -> (f64, f64)) -> Self {
        let mut out = self.clone();
        for row in &mut out.rows {
            let (c, g) = f(row);
            row.log_co2 = c;
            row.log_gdp = g;
        }
        out
    }
}

/// Builds the annual count panel; events outside the window are a coverage error.
pub fn build_panel(events: &[RescaledEvent], covariates: &CovariateSet, window: YearRange) -> Result<AnnualPanel> {
    let mut design = Vec::with_capacity(window.len() * Region::ALL.len());
    for year in window.years() {
        for region in Region::ALL {
            design.push(covariates.design_row(year, region)?);
        }
    }
    let mut counts: HashMap<(DisasterType, i32, Region), u32> = HashMap::new();
    for ev in events {
        let year = ev.base.year();
        if !window.contains(year) {
            return Err(Error::Coverage(format!(
                "event {} in {year} outside panel window {window}",
                ev.base.event_id
            )));
        }
        *counts.entry((ev.base.disaster_type, year, ev.base.region)).or_default() += 1;
    }
    let mut rows = Vec::with_capacity(design.len() * DisasterType::ALL.len());
    for t in DisasterType::ALL {
        for (k, d) in design.iter().enumerate() {
            let year = window.start + (k / Region::ALL.len()) as i32;
            rows.push(PanelRow {
                year,
                region: d.region,
                disaster_type: t,
                count: counts.get(&(t, year, d.region)).copied().unwrap_or(0),
                log_co2: d.log_co2,
                log_gdp: d.log_gdp,
            });
        }
    }
    Ok(AnnualPanel { window, rows })
}

/// Average annual frequency and severity for one (type, region) cell; `region == None` is the world.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub disaster_type: DisasterType,
    pub region: Option<Region>,
    pub disasters_per_year: f64,
    pub deaths_per_disaster: f64,
    pub annual_deaths: f64,
}

pub fn summarize(events: &[RescaledEvent], window: YearRange) -> Vec<SummaryRow> {
    let years = window.len() as f64;
    let mut acc: BTreeMap<(DisasterType, Option<Region>), (u64, f64)> = BTreeMap::new();
    for ev in events.iter().filter(|e| window.contains(e.base.year())) {
        for key in [Some(ev.base.region), None] {
            let e = acc.entry((ev.base.disaster_type, key)).or_default();
            e.0 += 1;
            e.1 += ev.rescaled_deaths;
        }
    }
    let mut out = Vec::new();
    for t in DisasterType::ALL {
        for region in Region::ALL.into_iter().map(Some).chain([None]) {
            let (n, d) = acc.get(&(t, region)).copied().unwrap_or_default();
            out.push(SummaryRow {
                disaster_type: t,
                region,
                disasters_per_year: n as f64 / years,
                deaths_per_disaster: if n > 0 { d / n as f64 } else { 0.0 },
                annual_deaths: d / years,
            });
        }
    }
    out
}
