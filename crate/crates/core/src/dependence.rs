//! Residual dependence between disaster types: moving-window correlations of
//! Pearson count residuals and the tail quantity chi-bar for severities.
//!
//! Chi-bar follows the formula
//! `chi_bar(u) = 2 log P(F_X > u) / log P(F_X > u, F_Y > u)`,
//! under which independence gives 1 and comonotonicity gives 2. The usual
//! coefficient subtracts 1 (independence at 0); pass `conventional = true`
//! for that scale.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bootstrap::quantile_sorted;
use crate::data::{AnnualPanel, RescaledEvent, YearRange};
use crate::distributions::{gpd_cdf, poisson_sample, PoissonParams};
use crate::error::{Error, Result};
use crate::frequency::{predict_lambda, FrequencyFit};
use crate::region::{DisasterType, Region};
use crate::rng::stream;
use crate::severity::{severity_params_at, SeverityFit};

pub const DEFAULT_WINDOW: usize = 20;
pub const MIN_PAIRS: usize = 50;
pub const DEFAULT_RESAMPLES: usize = 500;

/// Pearson residual `(N - lambda) / sqrt(lambda)` of one panel cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub year: i32,
    pub region: Region,
    pub value: f64,
}

pub fn pearson_residuals(fit: &FrequencyFit, panel: &AnnualPanel) -> Result<Vec<Residual>> {
    panel
        .rows(fit.spec.response)
        .iter()
        .filter(|r| fit.spec.window.contains(r.year))
        .map(|r| {
            let lambda = predict_lambda(fit, &r.design())?;
            Ok(Residual {
                year: r.year,
                region: r.region,
                value: (r.count as f64 - lambda) / lambda.sqrt(),
            })
        })
        .collect()
}

pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 95% Fisher-z interval for a correlation estimated from `n` pairs.
pub fn fisher_band(r: f64, n: usize) -> (f64, f64) {
    if n <= 3 || r.abs() >= 1.0 {
        return (r, r);
    }
    let z = r.atanh();
    let h = 1.959_963_984_540_054 / ((n - 3) as f64).sqrt();
    ((z - h).tanh(), (z + h).tanh())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowPoint {
    pub start: i32,
    pub end: i32,
    pub n: usize,
    /// `None` when one residual series is constant in the window.
    pub value: Option<f64>,
    pub low: Option<f64>,
    pub high: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowCorrelation {
    pub pair: (DisasterType, DisasterType),
    pub window_length: usize,
    /// Region-level residual pairs pooled within each window.
    pub pooled: Vec<WindowPoint>,
    pub by_region: BTreeMap<Region, Vec<WindowPoint>>,
}

/// Moving windows `[start, start + length - 1]` fully inside `range`.
pub fn windows(range: YearRange, length: usize) -> Result<Vec<YearRange>> {
    if length < 3 {
        return Err(Error::Config(format!("window length {length} below 3 years")));
    }
    if length > range.len() {
        return Err(Error::OutOfRange(format!(
            "window of {length} years longer than study range {range}"
        )));
    }
    let last = range.end - length as i32 + 1;
    (range.start..=last)
        .map(|s| YearRange::new(s, s + length as i32 - 1))
        .collect()
}

fn window_point(w: YearRange, x: &[f64], y: &[f64]) -> WindowPoint {
    let value = pearson_correlation(x, y);
    let band = value.map(|r| fisher_band(r, x.len()));
    WindowPoint {
        start: w.start,
        end: w.end,
        n: x.len(),
        value,
        low: band.map(|b| b.0),
        high: band.map(|b| b.1),
    }
}

fn paired(a: &[Residual], b: &[Residual]) -> Result<Vec<(i32, Region, f64, f64)>> {
    let lookup: BTreeMap<(i32, Region), f64> = b.iter().map(|r| ((r.year, r.region), r.value)).collect();
    let out: Vec<_> = a
        .iter()
        .filter_map(|r| lookup.get(&(r.year, r.region)).map(|&v| (r.year, r.region, r.value, v)))
        .collect();
    if out.len() != a.len() || out.len() != b.len() {
        return Err(Error::Coverage(
            "count residuals of the two types do not share cells".into(),
        ));
    }
    Ok(out)
}

fn correlate_windows(
    cells: &[(i32, Region, f64, f64)],
    wins: &[YearRange],
) -> (Vec<WindowPoint>, BTreeMap<Region, Vec<WindowPoint>>) {
    let mut pooled = Vec::with_capacity(wins.len());
    let mut by_region: BTreeMap<Region, Vec<WindowPoint>> = BTreeMap::new();
    for w in wins {
        let inside: Vec<_> = cells.iter().filter(|c| w.contains(c.0)).collect();
        let x: Vec<f64> = inside.iter().map(|c| c.2).collect();
        let y: Vec<f64> = inside.iter().map(|c| c.3).collect();
        pooled.push(window_point(*w, &x, &y));
        for r in Region::ALL {
            let x: Vec<f64> = inside.iter().filter(|c| c.1 == r).map(|c| c.2).collect();
            let y: Vec<f64> = inside.iter().filter(|c| c.1 == r).map(|c| c.3).collect();
            by_region.entry(r).or_default().push(window_point(*w, &x, &y));
        }
    }
    (pooled, by_region)
}

fn shared_window(fit_a: &FrequencyFit, fit_b: &FrequencyFit) -> Result<YearRange> {
    if fit_a.spec.window != fit_b.spec.window {
        return Err(Error::Coverage(format!(
            "fits cover different windows ({} vs {})",
            fit_a.spec.window, fit_b.spec.window
        )));
    }
    Ok(fit_a.spec.window)
}

pub fn count_residual_correlation(
    fit_a: &FrequencyFit,
    fit_b: &FrequencyFit,
    panel: &AnnualPanel,
    window_length: usize,
) -> Result<WindowCorrelation> {
    let range = shared_window(fit_a, fit_b)?;
    let wins = windows(range, window_length)?;
    let cells = paired(&pearson_residuals(fit_a, panel)?, &pearson_residuals(fit_b, panel)?)?;
    let (pooled, by_region) = correlate_windows(&cells, &wins);
    Ok(WindowCorrelation {
        pair: (fit_a.spec.response, fit_b.spec.response),
        window_length,
        pooled,
        by_region,
    })
}

/// Pointwise band of pooled window correlations under independence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullBand {
    pub level: f64,
    pub simulations: usize,
    /// `(start, end, low, high)` per window.
    pub bounds: Vec<(i32, i32, f64, f64)>,
}

impl NullBand {
    pub fn contains(&self, p: &WindowPoint) -> Option<bool> {
        let v = p.value?;
        let b = self.bounds.iter().find(|b| b.0 == p.start && b.1 == p.end)?;
        Some(v >= b.2 && v <= b.3)
    }
}

/// Monte Carlo band: counts of both types redrawn independently from the
/// fitted intensities, residuals taken against the same intensities.
pub fn null_band(
    fit_a: &FrequencyFit,
    fit_b: &FrequencyFit,
    panel: &AnnualPanel,
    window_length: usize,
    simulations: usize,
    level: f64,
    seed: u64,
) -> Result<NullBand> {
    if simulations < 2 || !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!(
            "null band needs >= 2 simulations and a level in (0, 1), got {simulations}, {level}"
        )));
    }
    let range = shared_window(fit_a, fit_b)?;
    let wins = windows(range, window_length)?;
    let lambdas = |fit: &FrequencyFit| -> Result<Vec<(i32, Region, f64)>> {
        panel
            .rows(fit.spec.response)
            .iter()
            .filter(|r| range.contains(r.year))
            .map(|r| Ok((r.year, r.region, predict_lambda(fit, &r.design())?)))
            .collect()
    };
    let (la, lb) = (lambdas(fit_a)?, lambdas(fit_b)?);
    let pa: Vec<PoissonParams> = la.iter().map(|c| PoissonParams::new(c.2)).collect::<Result<_>>()?;
    let pb: Vec<PoissonParams> = lb.iter().map(|c| PoissonParams::new(c.2)).collect::<Result<_>>()?;

    let sims: Vec<Vec<Option<f64>>> = (0..simulations as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            let cells: Vec<(i32, Region, f64, f64)> = la
                .iter()
                .zip(&lb)
                .zip(pa.iter().zip(&pb))
                .map(|(((y, r, a), (_, _, b)), (qa, qb))| {
                    let na = poisson_sample(qa, &mut rng) as f64;
                    let nb = poisson_sample(qb, &mut rng) as f64;
                    (*y, *r, (na - a) / a.sqrt(), (nb - b) / b.sqrt())
                })
                .collect();
            wins.iter()
                .map(|w| {
                    let inside: Vec<_> = cells.iter().filter(|c| w.contains(c.0)).collect();
                    let x: Vec<f64> = inside.iter().map(|c| c.2).collect();
                    let y: Vec<f64> = inside.iter().map(|c| c.3).collect();
                    pearson_correlation(&x, &y)
                })
                .collect()
        })
        .collect();

    let tail = (1.0 - level) / 2.0;
    let bounds = wins
        .iter()
        .enumerate()
        .map(|(k, w)| {
            let mut v: Vec<f64> = sims.iter().filter_map(|s| s[k]).collect();
            v.sort_by(|a, b| a.total_cmp(b));
            if v.is_empty() {
                (w.start, w.end, f64::NAN, f64::NAN)
            } else {
                (
                    w.start,
                    w.end,
                    quantile_sorted(&v, tail),
                    quantile_sorted(&v, 1.0 - tail),
                )
            }
        })
        .collect();
    Ok(NullBand {
        level,
        simulations,
        bounds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChiBarVariant {
    /// Empirical margins.
    Raw,
    /// Margins from the fitted severity models.
    Filtered,
}

impl ChiBarVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            ChiBarVariant::Raw => "raw",
            ChiBarVariant::Filtered => "filtered",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiBarPoint {
    pub u: f64,
    /// `None` marks a gap: no joint exceedance at `u`.
    pub value: Option<f64>,
    pub low: Option<f64>,
    pub high: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiBarCurve {
    pub pair: (DisasterType, DisasterType),
    pub variant: ChiBarVariant,
    pub conventional: bool,
    pub n: usize,
    pub points: Vec<ChiBarPoint>,
}

/// Ranks scaled to (0, 1) as `rank / (n + 1)`, ties sharing their mean rank.
pub fn empirical_margins(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank / (n + 1) as f64;
        }
        i = j + 1;
    }
    out
}

/// Chi-bar at each `u` from margins already on the uniform scale.
pub fn chi_bar_uniform(fa: &[f64], fb: &[f64], u_grid: &[f64], conventional: bool) -> Vec<Option<f64>> {
    let n = fa.len() as f64;
    u_grid
        .iter()
        .map(|&u| {
            let mut marg = 0usize;
            let mut joint = 0usize;
            for (a, b) in fa.iter().zip(fb) {
                if *a > u {
                    marg += 1;
                    if *b > u {
                        joint += 1;
                    }
                }
            }
            if joint == 0 || joint as f64 == n {
                return None;
            }
            let v = 2.0 * (marg as f64 / n).ln() / (joint as f64 / n).ln();
            Some(if conventional { v - 1.0 } else { v })
        })
        .collect()
}

fn check_chi_inputs(a: &[f64], b: &[f64], u_grid: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.len() < MIN_PAIRS {
        return Err(Error::Degenerate(format!(
            "{} pairs, chi-bar needs at least {MIN_PAIRS}",
            a.len()
        )));
    }
    if let Some(u) = u_grid.iter().find(|u| !(**u > 0.0 && **u < 1.0)) {
        return Err(Error::OutOfRange(format!("threshold {u} outside (0, 1)")));
    }
    Ok(())
}

/// Percentile band of chi-bar from `resamples` bootstrap draws of pairs.
/// With `rerank`, margins are recomputed empirically in each draw.
fn chi_bar_band(
    fa: &[f64],
    fb: &[f64],
    u_grid: &[f64],
    conventional: bool,
    rerank: bool,
    resamples: usize,
    seed: u64,
) -> Vec<(Option<f64>, Option<f64>)> {
    let n = fa.len();
    let draws: Vec<Vec<Option<f64>>> = (0..resamples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            let pick: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut a: Vec<f64> = pick.iter().map(|&k| fa[k]).collect();
            let mut b: Vec<f64> = pick.iter().map(|&k| fb[k]).collect();
            if rerank {
                a = empirical_margins(&a);
                b = empirical_margins(&b);
            }
            chi_bar_uniform(&a, &b, u_grid, conventional)
        })
        .collect();
    (0..u_grid.len())
        .map(|k| {
            let mut v: Vec<f64> = draws.iter().filter_map(|d| d[k]).collect();
            if v.is_empty() {
                return (None, None);
            }
            v.sort_by(|a, b| a.total_cmp(b));
            (Some(quantile_sorted(&v, 0.025)), Some(quantile_sorted(&v, 0.975)))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiBarOptions {
    pub conventional: bool,
    pub resamples: usize,
    pub seed: u64,
}

impl Default for ChiBarOptions {
    fn default() -> Self {
        Self {
            conventional: false,
            resamples: DEFAULT_RESAMPLES,
            seed: 0,
        }
    }
}

fn curve(
    pair: (DisasterType, DisasterType),
    variant: ChiBarVariant,
    fa: &[f64],
    fb: &[f64],
    u_grid: &[f64],
    opts: &ChiBarOptions,
) -> ChiBarCurve {
    let values = chi_bar_uniform(fa, fb, u_grid, opts.conventional);
    let band = if opts.resamples > 0 {
        chi_bar_band(
            fa,
            fb,
            u_grid,
            opts.conventional,
            variant == ChiBarVariant::Raw,
            opts.resamples,
            opts.seed,
        )
    } else {
        vec![(None, None); u_grid.len()]
    };
    let points = u_grid
        .iter()
        .zip(values)
        .zip(band)
        .map(|((&u, value), (low, high))| ChiBarPoint { u, value, low, high })
        .collect();
    ChiBarCurve {
        pair,
        variant,
        conventional: opts.conventional,
        n: fa.len(),
        points,
    }
}

/// Chi-bar of paired samples with empirical margins.
pub fn chi_bar(
    pair: (DisasterType, DisasterType),
    a: &[f64],
    b: &[f64],
    u_grid: &[f64],
    opts: &ChiBarOptions,
) -> Result<ChiBarCurve> {
    check_chi_inputs(a, b, u_grid)?;
    let (fa, fb) = (empirical_margins(a), empirical_margins(b));
    Ok(curve(pair, ChiBarVariant::Raw, &fa, &fb, u_grid, opts))
}

/// Annual maximum of one type in one (year, region) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellMaximum {
    pub year: i32,
    pub region: Region,
    pub maximum: f64,
    pub events: usize,
}

fn cell_maxima(events: &[RescaledEvent], t: DisasterType, window: YearRange) -> BTreeMap<(i32, Region), CellMaximum> {
    let mut out: BTreeMap<(i32, Region), CellMaximum> = BTreeMap::new();
    for ev in events
        .iter()
        .filter(|e| e.base.disaster_type == t && e.rescaled_deaths > 0.0)
    {
        let (year, region) = (ev.base.year(), ev.base.region);
        if !window.contains(year) {
            continue;
        }
        let c = out.entry((year, region)).or_insert(CellMaximum {
            year,
            region,
            maximum: 0.0,
            events: 0,
        });
        c.maximum = c.maximum.max(ev.rescaled_deaths);
        c.events += 1;
    }
    out
}

/// Pairs of annual maxima for the (year, region) cells in which both types occur.
pub fn pair_annual_maxima(
    events: &[RescaledEvent],
    a: DisasterType,
    b: DisasterType,
    window: YearRange,
) -> Vec<(CellMaximum, CellMaximum)> {
    let ma = cell_maxima(events, a, window);
    let mb = cell_maxima(events, b, window);
    ma.iter().filter_map(|(k, x)| mb.get(k).map(|y| (*x, *y))).collect()
}

/// `G(x)^k`: the fitted distribution function of the maximum of `k` events.
pub fn maximum_cdf(fit: &SeverityFit, panel: &AnnualPanel, c: &CellMaximum) -> Result<f64> {
    let row = panel
        .design_row(c.year, c.region)
        .ok_or_else(|| Error::Coverage(format!("no covariates for {} {}", c.year, c.region)))?;
    let g = severity_params_at(fit, &row)?;
    Ok(gpd_cdf(&g, c.maximum)?.powi(c.events as i32))
}

/// Raw and filtered chi-bar curves for the annual-maximum pairs of two types.
pub fn chi_bar_pair(
    events: &[RescaledEvent],
    fit_a: &SeverityFit,
    fit_b: &SeverityFit,
    panel: &AnnualPanel,
    u_grid: &[f64],
    opts: &ChiBarOptions,
) -> Result<(ChiBarCurve, ChiBarCurve)> {
    let pair = (fit_a.spec.response, fit_b.spec.response);
    let window = fit_a.spec.window;
    let pairs = pair_annual_maxima(events, pair.0, pair.1, window);
    let a: Vec<f64> = pairs.iter().map(|p| p.0.maximum).collect();
    let b: Vec<f64> = pairs.iter().map(|p| p.1.maximum).collect();
    let raw = chi_bar(pair, &a, &b, u_grid, opts)?;
    let fa: Vec<f64> = pairs
        .iter()
        .map(|p| maximum_cdf(fit_a, panel, &p.0))
        .collect::<Result<_>>()?;
    let fb: Vec<f64> = pairs
        .iter()
        .map(|p| maximum_cdf(fit_b, panel, &p.1))
        .collect::<Result<_>>()?;
    let filtered = curve(pair, ChiBarVariant::Filtered, &fa, &fb, u_grid, opts);
    Ok((raw, filtered))
}

/// Evenly spaced thresholds `from..=to` in `steps` intervals.
pub fn u_grid(from: f64, to: f64, steps: usize) -> Vec<f64> {
    (0..=steps)
        .map(|i| from + (to - from) * i as f64 / steps.max(1) as f64)
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn pair_name(p: (DisasterType, DisasterType)) -> String {
    format!("{}:{}", p.0.as_str(), p.1.as_str())
}

/// Header `pair,region,window_start,window_end,n,value,low,high,null_low,null_high`;
/// `ALL` is the pooled series and empty cells mark gaps.
pub fn write_correlation_csv<W: std::io::Write>(
    mut w: W,
    corr: &WindowCorrelation,
    band: Option<&NullBand>,
) -> Result<()> {
    let mut s = String::from("pair,region,window_start,window_end,n,value,low,high,null_low,null_high\n");
    let name = pair_name(corr.pair);
    let mut emit = |scope: &str, p: &WindowPoint, null: Option<(f64, f64)>| {
        let _ = writeln!(
            s,
            "{name},{scope},{},{},{},{},{},{},{},{}",
            p.start,
            p.end,
            p.n,
            opt(p.value),
            opt(p.low),
            opt(p.high),
            opt(null.map(|b| b.0)),
            opt(null.map(|b| b.1))
        );
    };
    for p in &corr.pooled {
        let null = band.and_then(|b| {
            b.bounds
                .iter()
                .find(|x| x.0 == p.start && x.1 == p.end)
                .map(|x| (x.2, x.3))
        });
        emit("ALL", p, null);
    }
    for (r, points) in &corr.by_region {
        for p in points {
            emit(r.code(), p, None);
        }
    }
    w.write_all(s.as_bytes()).map_err(|e| Error::io("<correlation csv>", e))
}

/// Header `pair,variant,u,value,low,high`; empty value cells are gaps.
pub fn write_chi_bar_csv<W: std::io::Write>(mut w: W, curves: &[&ChiBarCurve]) -> Result<()> {
    let mut s = String::from("pair,variant,u,value,low,high\n");
    for c in curves {
        for p in &c.points {
            let _ = writeln!(
                s,
                "{},{},{:.4},{},{},{}",
                pair_name(c.pair),
                c.variant.as_str(),
                p.u,
                opt(p.value),
                opt(p.low),
                opt(p.high)
            );
        }
    }
    w.write_all(s.as_bytes()).map_err(|e| Error::io("<chi-bar csv>", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    const PAIR: (DisasterType, DisasterType) = (DisasterType::Flood, DisasterType::Storm);

    fn no_band() -> ChiBarOptions {
        ChiBarOptions {
            resamples: 0,
            ..Default::default()
        }
    }

    #[test]
    fn comonotone_is_two() {
        let x: Vec<f64> = (0..200).map(|i| (i as f64 * 0.37).sin() + i as f64 * 0.01).collect();
        let c = chi_bar(PAIR, &x, &x, &[0.5, 0.8, 0.9, 0.95], &no_band()).unwrap();
        for p in &c.points {
            assert_eq!(p.value, Some(2.0));
        }
        let c = chi_bar(
            PAIR,
            &x,
            &x,
            &[0.9],
            &ChiBarOptions {
                conventional: true,
                resamples: 0,
                seed: 0,
            },
        )
        .unwrap();
        assert_eq!(c.points[0].value, Some(1.0));
    }

    #[test]
    fn countermonotone_gaps() {
        let x: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        let c = chi_bar(PAIR, &x, &y, &[0.9], &no_band()).unwrap();
        assert_eq!(c.points[0].value, None);
    }

    #[test]
    fn invariant_to_increasing_transforms() {
        let mut rng = stream(3, 0);
        let x: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = x.iter().map(|v| v + 0.3 * rng.random::<f64>()).collect();
        let y3: Vec<f64> = y.iter().map(|v| v * v * v).collect();
        let grid = u_grid(0.5, 0.95, 9);
        let a = chi_bar(PAIR, &x, &y, &grid, &no_band()).unwrap();
        let b = chi_bar(PAIR, &x, &y3, &grid, &no_band()).unwrap();
        assert_eq!(a.points, b.points);
    }

    #[test]
    fn input_checks() {
        let x = vec![1.0; 10];
        assert!(matches!(
            chi_bar(PAIR, &x, &x, &[0.5], &no_band()),
            Err(Error::Degenerate(_))
        ));
        let x: Vec<f64> = (0..60).map(f64::from).collect();
        assert!(chi_bar(PAIR, &x, &x, &[1.0], &no_band()).is_err());
        assert!(chi_bar(PAIR, &x, &x[..59], &[0.5], &no_band()).is_err());
    }

    #[test]
    fn band_brackets_estimate() {
        let mut rng = stream(5, 0);
        let x: Vec<f64> = (0..400).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = x.iter().map(|v| v + rng.random::<f64>()).collect();
        let opts = ChiBarOptions {
            resamples: 200,
            seed: 9,
            conventional: false,
        };
        let c = chi_bar(PAIR, &x, &y, &[0.7], &opts).unwrap();
        let p = c.points[0];
        assert!(p.low.unwrap() <= p.value.unwrap() && p.value.unwrap() <= p.high.unwrap());
        let again = chi_bar(PAIR, &x, &y, &[0.7], &opts).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn ranks_share_ties() {
        assert_eq!(
            empirical_margins(&[3.0, 1.0, 3.0, 2.0]),
            vec![3.5 / 5.0, 0.2, 3.5 / 5.0, 0.4]
        );
    }

    #[test]
    fn windows_inside_range() {
        let w = windows(YearRange::default(), 20).unwrap();
        assert_eq!(w.len(), 41);
        assert_eq!((w[0].start, w[0].end), (1960, 1979));
        assert_eq!(w[40].end, 2019);
        assert!(windows(YearRange::new(2000, 2010).unwrap(), 20).is_err());
    }

    #[test]
    fn fisher_band_brackets() {
        let (lo, hi) = fisher_band(0.4, 140);
        assert!(lo < 0.4 && hi > 0.4 && lo > 0.2 && hi < 0.6);
        assert_eq!(pearson_correlation(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]), Some(1.0));
        assert_eq!(pearson_correlation(&[1.0, 1.0], &[2.0, 4.0]), None);
    }
}
