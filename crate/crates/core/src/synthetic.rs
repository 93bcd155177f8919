//! Synthetic covariates, scenario paths and event files with realistic
//! magnitudes, for examples, tests and round trips through the CLI.

use chrono::{Days, NaiveDate};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::bootstrap::simulate_history;
use crate::data::{
    build_panel, AnnualPanel, CovariateSeries, CovariateSet, DisasterEvent, Scope, YearRange, CO2_PER_CAPITA,
    GDP_PER_CAPITA, POPULATION,
};
use crate::distributions::gpd_draw;
use crate::error::{Error, Result};
use crate::frequency::{predict_lambda, FrequencyFit};
use crate::projection::ScenarioRow;
use crate::region::Region;
use crate::severity::{severity_params_at, SeverityFit, SeverityObservation};

/// One country standing in for each region; its population is the region's.
pub fn representative_country(r: Region) -> &'static str {
    match r {
        Region::EastAsiaPacific => "CHN",
        Region::EuropeCentralAsia => "DEU",
        Region::LatinAmericaCaribbean => "BRA",
        Region::MiddleEastNorthAfrica => "EGY",
        Region::NorthAmerica => "USA",
        Region::SouthAsia => "IND",
        Region::SubSaharanAfrica => "NGA",
    }
}

// (year, tonnes per capita); linear in between, flat outside.
const CO2_KNOTS: [(i32, f64); 13] = [
    (1960, 3.10),
    (1965, 3.45),
    (1970, 3.95),
    (1975, 4.10),
    (1979, 4.40),
    (1983, 4.00),
    (1990, 4.12),
    (1995, 4.05),
    (1999, 4.10),
    (2002, 4.20),
    (2007, 4.55),
    (2012, 4.85),
    (2019, 4.75),
];

/// World CO2 emissions per capita of the synthetic history.
pub fn co2_at(year: i32) -> f64 {
    let k = &CO2_KNOTS;
    if year <= k[0].0 {
        return k[0].1;
    }
    for w in k.windows(2) {
        let ((y0, v0), (y1, v1)) = (w[0], w[1]);
        if year <= y1 {
            return v0 + (v1 - v0) * (year - y0) as f64 / (y1 - y0) as f64;
        }
    }
    k[k.len() - 1].1
}

// GDP per capita (PPP) in 1960 and 2019, population (millions) in 1960 and 2019.
fn anchors(r: Region) -> (f64, f64, f64, f64) {
    match r {
        Region::EastAsiaPacific => (1_500.0, 17_000.0, 1_040.0, 2_340.0),
        Region::EuropeCentralAsia => (10_000.0, 33_000.0, 660.0, 920.0),
        Region::LatinAmericaCaribbean => (6_000.0, 16_000.0, 220.0, 650.0),
        Region::MiddleEastNorthAfrica => (5_500.0, 19_000.0, 105.0, 456.0),
        Region::NorthAmerica => (19_000.0, 62_000.0, 200.0, 365.0),
        Region::SouthAsia => (1_100.0, 6_300.0, 570.0, 1_840.0),
        Region::SubSaharanAfrica => (2_300.0, 3_900.0, 230.0, 1_100.0),
    }
}

fn geometric(v0: f64, v1: f64, year: i32) -> f64 {
    let s = (year - 1960) as f64 / 59.0;
    v0 * (v1 / v0).powf(s)
}

/// Regional GDP per capita of the synthetic history, with a mild business cycle.
pub fn gdp_at(r: Region, year: i32) -> f64 {
    let (g0, g1, _, _) = anchors(r);
    let phase = r.index() as f64;
    let cycle = 0.03 * (((year - 1960) as f64) * 2.0 * std::f64::consts::PI / 9.0 + phase).sin();
    let edge = if year == 1960 || year == 2019 { 0.0 } else { cycle };
    geometric(g0, g1, year) * (1.0 + edge)
}

/// Regional population of the synthetic history, in persons.
pub fn population_at(r: Region, year: i32) -> f64 {
    let (_, _, p0, p1) = anchors(r);
    geometric(p0, p1, year) * 1e6
}

/// World CO2, regional GDP and regional plus representative-country population.
///
/// Population runs one year past the window so that events late in the last
/// year can be rescaled.
pub fn reference_covariates(window: YearRange) -> Result<CovariateSet> {
    let mut series = Vec::new();
    series.push(CovariateSeries::from_pairs(
        CO2_PER_CAPITA,
        Scope::World,
        window.years().map(|y| (y, co2_at(y))),
    )?);
    for r in Region::ALL {
        series.push(CovariateSeries::from_pairs(
            GDP_PER_CAPITA,
            Scope::Region(r),
            window.years().map(|y| (y, gdp_at(r, y))),
        )?);
        let pop: Vec<(i32, f64)> = (window.start..=window.end + 1)
            .map(|y| (y, population_at(r, y)))
            .collect();
        series.push(CovariateSeries::from_pairs(POPULATION, Scope::Region(r), pop.clone())?);
        series.push(CovariateSeries::from_pairs(
            POPULATION,
            Scope::Country(representative_country(r).to_string()),
            pop,
        )?);
    }
    Ok(CovariateSet::new(series))
}

/// Panel with zero counts over the reference covariates.
pub fn reference_panel(window: YearRange) -> Result<AnnualPanel> {
    build_panel(&[], &reference_covariates(window)?, window)
}

/// Values of an SSP-style "sustainable" path at 2040, 2060, 2080 and 2100.
struct Anchor {
    co2: [f64; 4],
    gdp: [(Region, [f64; 4]); 7],
    pop_ratio: [(Region, [f64; 4]); 7],
}

fn sustainable_anchor() -> Anchor {
    use Region::*;
    Anchor {
        co2: [4.973, 4.678, 4.565, 3.581],
        gdp: [
            (EastAsiaPacific, [42_100.0, 61_000.0, 80_000.0, 98_000.0]),
            (EuropeCentralAsia, [51_300.0, 68_000.0, 85_000.0, 101_000.0]),
            (LatinAmericaCaribbean, [29_000.0, 44_000.0, 60_000.0, 76_000.0]),
            (MiddleEastNorthAfrica, [28_000.0, 42_000.0, 57_000.0, 72_000.0]),
            (NorthAmerica, [75_000.0, 78_000.0, 80_000.0, 81_000.0]),
            (SouthAsia, [19_000.0, 35_000.0, 52_000.0, 68_000.0]),
            (SubSaharanAfrica, [9_040.0, 19_000.0, 32_000.0, 45_000.0]),
        ],
        pop_ratio: [
            (EastAsiaPacific, [0.98, 0.90, 0.78, 0.66]),
            (EuropeCentralAsia, [1.02, 1.00, 0.95, 0.88]),
            (LatinAmericaCaribbean, [1.10, 1.10, 1.02, 0.92]),
            (MiddleEastNorthAfrica, [1.22, 1.30, 1.30, 1.25]),
            (NorthAmerica, [1.12, 1.20, 1.25, 1.28]),
            (SouthAsia, [1.15, 1.15, 1.05, 0.92]),
            (SubSaharanAfrica, [1.60, 1.95, 2.10, 2.10]),
        ],
    }
}

/// Log-linear path through (base, v0) and the anchor years, at `year`.
fn anchored(base_year: i32, v0: f64, anchors: &[f64; 4], year: i32) -> f64 {
    let pts: [(i32, f64); 5] = [
        (base_year, v0),
        (2040, anchors[0]),
        (2060, anchors[1]),
        (2080, anchors[2]),
        (2100, anchors[3]),
    ];
    let seg = if year <= pts[1].0 {
        (pts[0], pts[1])
    } else {
        let i = pts.windows(2).position(|w| year <= w[1].0).unwrap_or(3);
        (pts[i], pts[i + 1])
    };
    let ((y0, a), (y1, b)) = seg;
    let s = (year - y0) as f64 / (y1 - y0) as f64;
    (a.ln() + s * (b.ln() - a.ln())).exp()
}

/// Raw five-year knots (2015-2100) of an SSP-style sustainable scenario.
///
/// The knots are deliberately offset from the observed base-year values by a
/// constant factor per series, as published scenario paths are; ratio
/// splicing onto `observed` removes the offset.
pub fn sustainable_scenario(name: &str, observed: &CovariateSet, base_year: i32) -> Result<Vec<ScenarioRow>> {
    if !(2015..2040).contains(&base_year) {
        return Err(Error::OutOfRange(format!("base year {base_year} outside 2015..2040")));
    }
    let a = sustainable_anchor();
    let mut rows = Vec::new();
    let mut push = |series: &str, scope: Scope, offset: f64, f: &dyn Fn(i32) -> f64| {
        for y in (2015..=2100).step_by(5) {
            rows.push(ScenarioRow {
                scenario: name.to_string(),
                series: series.to_string(),
                scope: scope.clone(),
                year: y,
                value: f(y) * offset,
            });
        }
    };
    let co2_0 = observed.world_co2(base_year)?;
    push(CO2_PER_CAPITA, Scope::World, 1.04, &|y| {
        anchored(base_year, co2_0, &a.co2, y)
    });
    for (r, g) in a.gdp {
        let g0 = observed.regional_gdp(r, base_year)?;
        push(GDP_PER_CAPITA, Scope::Region(r), 0.93, &|y| {
            anchored(base_year, g0, &g, y)
        });
    }
    for (r, p) in a.pop_ratio {
        let p0 = observed.population(Scope::Region(r), base_year)?;
        let levels = p.map(|x| x * p0);
        push(POPULATION, Scope::Region(r), 1.02, &|y| {
            anchored(base_year, p0, &levels, y)
        });
    }
    Ok(rows)
}

/// Synthetic dated events for one (frequency, severity) model pair.
///
/// Rescaled deaths are drawn from the model and converted to raw counts at
/// the event date: `ceil(rescaled * P(date) / P(reference_year))`.
pub fn simulate_events<R: Rng + ?Sized>(
    freq: &FrequencyFit,
    sev: &SeverityFit,
    covariates: &CovariateSet,
    window: YearRange,
    reference_year: i32,
    rng: &mut R,
) -> Result<Vec<DisasterEvent>> {
    let t = freq.spec.response;
    let panel = build_panel(&[], covariates, window)?;
    let hist = simulate_history(freq, sev, &panel, window, rng)?;
    let mut out = Vec::with_capacity(hist.observations.len());
    for (seq, obs) in hist.observations.iter().enumerate() {
        let country = representative_country(obs.region);
        let pop = covariates
            .get(POPULATION, &Scope::Country(country.to_string()))
            .ok_or_else(|| Error::Coverage(format!("no population series for {country}")))?
            .interpolant();
        let jan1 = NaiveDate::from_ymd_opt(obs.year, 1, 1).expect("valid year");
        let days = if jan1.leap_year() { 366 } else { 365 };
        let date = jan1 + Days::new(rng.random_range(0..days));
        let p_event = pop.eval(crate::data::fractional_year(date))?;
        let p_ref = pop.eval(reference_year as f64)?;
        let raw = (obs.deaths * p_event / p_ref).ceil();
        out.push(DisasterEvent {
            event_id: format!("SYN-{}-{:05}", t.as_str(), seq + 1),
            date,
            country: country.to_string(),
            region: obs.region,
            disaster_type: t,
            deaths: if raw.is_finite() { raw as u64 } else { u64::MAX },
        });
    }
    Ok(out)
}

/// Exactly `n` severity observations, spread over the cells of `window` in
/// proportion to the fitted intensities.
pub fn severity_sample<R: Rng + ?Sized>(
    freq: &FrequencyFit,
    sev: &SeverityFit,
    panel: &AnnualPanel,
    window: YearRange,
    n: usize,
    rng: &mut R,
) -> Result<Vec<SeverityObservation>> {
    let rows: Vec<_> = panel
        .rows(freq.spec.response)
        .iter()
        .filter(|r| window.contains(r.year))
        .collect();
    let weights: Vec<f64> = rows
        .iter()
        .map(|r| predict_lambda(freq, &r.design()))
        .collect::<Result<_>>()?;
    let params: Vec<_> = rows
        .iter()
        .map(|r| severity_params_at(sev, &r.design()))
        .collect::<Result<_>>()?;
    let pick = WeightedIndex::new(&weights).map_err(|e| Error::Domain(e.to_string()))?;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let k = pick.sample(rng);
        let mut y = gpd_draw(&params[k], rng);
        while !(y > 0.0) {
            y = gpd_draw(&params[k], rng);
        }
        out.push(SeverityObservation {
            year: rows[k].year,
            region: rows[k].region,
            deaths: y,
        });
    }
    Ok(out)
}
