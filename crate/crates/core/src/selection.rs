//! Likelihood-ratio comparison of nested specifications and the five-model
//! selection ladder for the GPD parameters.

use std::fmt::Write as _;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::data::{AnnualPanel, YearRange};
use crate::design::{gdp_by_region, region_dummies, Term};
use crate::error::{Error, Result};
use crate::frequency::FrequencyFit;
use crate::region::DisasterType;
use crate::severity::{
    fit_severity_observations, SeverityFit, SeverityObservation, SeverityOptions, SeveritySpec, XiLink,
};

/// Slack below which a negative log-likelihood gain is treated as zero.
pub const LOGLIK_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LrTestResult {
    pub null_loglik: f64,
    pub alt_loglik: f64,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// LR test from two maximized log-likelihoods and the parameter-count difference.
pub fn lr_test_from_logliks(null_loglik: f64, alt_loglik: f64, df: usize) -> Result<LrTestResult> {
    if !null_loglik.is_finite() || !alt_loglik.is_finite() {
        return Err(Error::Domain(format!(
            "non-finite log-likelihoods {null_loglik}, {alt_loglik}"
        )));
    }
    let gain = alt_loglik - null_loglik;
    if gain < -LOGLIK_SLACK {
        return Err(Error::ConvergenceSuspect {
            null: null_loglik,
            alt: alt_loglik,
        });
    }
    let statistic = (2.0 * gain).max(0.0);
    let p_value = if df == 0 {
        if gain > LOGLIK_SLACK {
            return Err(Error::ConvergenceSuspect {
                null: alt_loglik,
                alt: null_loglik,
            });
        }
        1.0
    } else {
        ChiSquared::new(df as f64)
            .map_err(|e| Error::Domain(e.to_string()))?
            .sf(statistic)
    };
    Ok(LrTestResult {
        null_loglik,
        alt_loglik,
        statistic,
        df,
        p_value,
    })
}

/// A fitted model that can take part in a likelihood-ratio comparison.
pub trait Nested {
    fn response(&self) -> DisasterType;
    fn window(&self) -> YearRange;
    fn n_obs(&self) -> usize;
    fn loglik(&self) -> f64;
    fn n_params(&self) -> usize;
    /// Ok when every model of `self`'s family is also a model of `alt`'s.
    fn check_nested_in(&self, alt: &Self) -> Result<()>;
}

fn check_block(null: &[Term], alt: &[Term], what: &str) -> Result<()> {
    match null.iter().find(|t| !t.spanned_by(alt)) {
        Some(t) => Err(Error::NotNested(format!("{what} term {t} not in the alternative"))),
        None => Ok(()),
    }
}

impl Nested for FrequencyFit {
    fn response(&self) -> DisasterType {
        self.spec.response
    }
    fn window(&self) -> YearRange {
        self.spec.window
    }
    fn n_obs(&self) -> usize {
        self.n_obs
    }
    fn loglik(&self) -> f64 {
        self.loglik
    }
    fn n_params(&self) -> usize {
        self.coefficients.len()
    }
    fn check_nested_in(&self, alt: &Self) -> Result<()> {
        check_block(&self.spec.terms, &alt.spec.terms, "frequency")
    }
}

impl Nested for SeverityFit {
    fn response(&self) -> DisasterType {
        self.spec.response
    }
    fn window(&self) -> YearRange {
        self.spec.window
    }
    fn n_obs(&self) -> usize {
        self.n_obs
    }
    fn loglik(&self) -> f64 {
        self.loglik
    }
    fn n_params(&self) -> usize {
        self.spec.n_params()
    }
    fn check_nested_in(&self, alt: &Self) -> Result<()> {
        check_block(&self.spec.nu_terms, &alt.spec.nu_terms, "nu")?;
        check_block(&self.spec.xi_terms, &alt.spec.xi_terms, "xi")?;
        // A constant tail index is representable under either link.
        let constant_xi = self.spec.xi_terms == [Term::Intercept];
        if self.spec.xi_link != alt.spec.xi_link && !constant_xi {
            return Err(Error::NotNested(format!(
                "xi links differ ({:?} vs {:?})",
                self.spec.xi_link, alt.spec.xi_link
            )));
        }
        Ok(())
    }
}

/// Likelihood-ratio test of `null` against the larger model `alt`.
pub fn lr_test<F: Nested>(null: &F, alt: &F) -> Result<LrTestResult> {
    if null.response() != alt.response() {
        return Err(Error::NotNested(format!(
            "responses differ ({} vs {})",
            null.response(),
            alt.response()
        )));
    }
    if null.window() != alt.window() || null.n_obs() != alt.n_obs() {
        return Err(Error::NotNested(format!(
            "fits use different data ({} obs in {} vs {} obs in {})",
            null.n_obs(),
            null.window(),
            alt.n_obs(),
            alt.window()
        )));
    }
    null.check_nested_in(alt)?;
    let (pn, pa) = (null.n_params(), alt.n_params());
    if pa < pn {
        return Err(Error::NotNested(format!(
            "alternative has fewer parameters ({pa} < {pn})"
        )));
    }
    lr_test_from_logliks(null.loglik(), alt.loglik(), pa - pn)
}

/// Which GPD parameter the ladder varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Block {
    Nu,
    Xi,
}

impl Block {
    pub fn as_str(self) -> &'static str {
        match self {
            Block::Nu => "nu",
            Block::Xi => "xi",
        }
    }
}

pub const LADDER_LABELS: [&str; 5] = ["Constant", "GDP", "Regions", "GDP by Regions", "GDP by Regions+Regions"];

/// (null, alternative) pairs compared in the ladder, 1-based.
pub const LADDER_EDGES: [(usize, usize); 5] = [(1, 2), (1, 3), (2, 4), (3, 5), (4, 5)];

/// Terms of ladder model `k` (1-based).
pub fn ladder_terms(k: usize) -> Result<Vec<Term>> {
    let mut terms = vec![Term::Intercept];
    match k {
        1 => {}
        2 => terms.push(Term::LogGdp),
        3 => terms.extend(region_dummies()),
        4 => terms.extend(gdp_by_region()),
        5 => {
            terms.extend(region_dummies());
            terms.extend(gdp_by_region());
        }
        _ => return Err(Error::Config(format!("ladder model {k} outside 1..=5"))),
    }
    Ok(terms)
}

/// The five candidate specs. The nu ladder holds xi constant; the xi ladder
/// keeps `base`'s nu terms.
pub fn ladder_specs(base: &SeveritySpec, block: Block) -> Result<Vec<SeveritySpec>> {
    (1..=5)
        .map(|k| {
            let terms = ladder_terms(k)?;
            let (nu, xi) = match block {
                Block::Nu => (terms, vec![Term::Intercept]),
                Block::Xi => (base.nu_terms.clone(), terms),
            };
            SeveritySpec::new(base.response, nu, xi, base.xi_link, base.window)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderConfig {
    pub alpha: f64,
    /// Two-sided level at which a positive log-GDP slope counts as significant.
    pub sign_alpha: f64,
    /// Manually chosen model (1-based), bypassing the rule.
    pub override_choice: Option<usize>,
}

impl Default for LadderConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            sign_alpha: 0.05,
            override_choice: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CandidateStatus {
    Converged,
    NoConvergence {
        reason: String,
    },
    /// Converged, but some log-GDP slope is significantly positive.
    WrongSign {
        terms: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeTest {
    pub null: usize,
    pub result: Option<LrTestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderRow {
    pub index: usize,
    pub label: &'static str,
    pub n_params: usize,
    pub loglik: Option<f64>,
    pub status: CandidateStatus,
    /// Tests of this model against each of its ladder parents.
    pub tests: Vec<EdgeTest>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderReport {
    pub disaster_type: DisasterType,
    pub block: Block,
    pub xi_link: XiLink,
    pub alpha: f64,
    pub rows: Vec<LadderRow>,
    pub selected: usize,
    pub overridden: bool,
    #[serde(skip)]
    pub fits: Vec<Option<SeverityFit>>,
}

/// Significantly positive log-GDP slopes, two-sided at `alpha`.
pub fn positive_gdp_slopes(fit: &SeverityFit, alpha: f64) -> Vec<String> {
    let z = Normal::standard().inverse_cdf(1.0 - alpha / 2.0);
    let blocks = [
        ("nu", &fit.spec.nu_terms, &fit.nu_coefficients, &fit.nu_std_errors),
        ("xi", &fit.spec.xi_terms, &fit.xi_coefficients, &fit.xi_std_errors),
    ];
    let mut out = Vec::new();
    for (name, terms, coef, se) in blocks {
        for ((t, &c), &s) in terms.iter().zip(coef.iter()).zip(se.iter()) {
            if t.is_gdp_slope() && c > 0.0 && c / s > z {
                out.push(format!("{name}:{t}"));
            }
        }
    }
    out
}

fn failed_fit(e: &Error) -> bool {
    e.is_convergence() || matches!(e, Error::Degenerate(_) | Error::Boundary { .. })
}

/// Fits the five candidates and picks one.
///
/// Candidates that converged and pass the sign filter are admissible. The
/// walk starts at the constant model and moves to the first admissible
/// child (GDP branch before regions branch) that improves on the current
/// model at `alpha`, stopping when no child does.
pub fn selection_ladder(
    obs: &[SeverityObservation],
    panel: &AnnualPanel,
    base: &SeveritySpec,
    block: Block,
    config: &LadderConfig,
    opts: &SeverityOptions,
) -> Result<LadderReport> {
    let specs = ladder_specs(base, block)?;
    let mut fits = Vec::with_capacity(5);
    for spec in &specs {
        match fit_severity_observations(obs, panel, spec, opts) {
            Ok(f) => fits.push(Ok(f)),
            Err(e) if failed_fit(&e) => fits.push(Err(e.to_string())),
            Err(e) => return Err(e),
        }
    }
    let fits: Vec<std::result::Result<SeverityFit, String>> = fits;
    let fitted: Vec<Option<SeverityFit>> = fits.iter().map(|f| f.as_ref().ok().cloned()).collect();
    ladder_from_fits(
        base.response,
        block,
        base.xi_link,
        specs.iter().map(|s| s.n_params()).collect(),
        fits,
        config,
    )
    .map(|mut r| {
        r.fits = fitted;
        r
    })
}

/// Ladder bookkeeping over already fitted candidates (`Err` = failed fit).
pub fn ladder_from_fits(
    disaster_type: DisasterType,
    block: Block,
    xi_link: XiLink,
    n_params: Vec<usize>,
    fits: Vec<std::result::Result<SeverityFit, String>>,
    config: &LadderConfig,
) -> Result<LadderReport> {
    if fits.len() != 5 || n_params.len() != 5 {
        return Err(Error::Dimension {
            expected: 5,
            got: fits.len(),
        });
    }
    if !(config.alpha > 0.0 && config.alpha < 1.0) || !(config.sign_alpha > 0.0 && config.sign_alpha < 1.0) {
        return Err(Error::Config(format!(
            "significance levels must lie in (0, 1), got {} and {}",
            config.alpha, config.sign_alpha
        )));
    }
    let mut rows: Vec<LadderRow> = (0..5)
        .map(|i| {
            let (loglik, status) = match &fits[i] {
                Ok(f) => {
                    let wrong = positive_gdp_slopes(f, config.sign_alpha);
                    let status = if wrong.is_empty() {
                        CandidateStatus::Converged
                    } else {
                        CandidateStatus::WrongSign { terms: wrong }
                    };
                    (Some(f.loglik), status)
                }
                Err(reason) => (None, CandidateStatus::NoConvergence { reason: reason.clone() }),
            };
            LadderRow {
                index: i + 1,
                label: LADDER_LABELS[i],
                n_params: n_params[i],
                loglik,
                status,
                tests: Vec::new(),
            }
        })
        .collect();

    for &(a, b) in &LADDER_EDGES {
        let result = match (&fits[a - 1], &fits[b - 1]) {
            (Ok(null), Ok(alt)) => match lr_test(null, alt) {
                Ok(r) => Some(r),
                Err(e) if e.is_convergence() => None,
                Err(e) => return Err(e),
            },
            _ => None,
        };
        rows[b - 1].tests.push(EdgeTest { null: a, result });
    }

    let admissible = |k: usize| rows[k - 1].status == CandidateStatus::Converged;
    let improves = |a: usize, b: usize| {
        admissible(b)
            && rows[b - 1]
                .tests
                .iter()
                .find(|t| t.null == a)
                .and_then(|t| t.result)
                .is_some_and(|r| r.p_value < config.alpha)
    };

    let (selected, overridden) = match config.override_choice {
        Some(k) => {
            if !(1..=5).contains(&k) {
                return Err(Error::Config(format!("ladder override {k} outside 1..=5")));
            }
            if rows[k - 1].loglik.is_none() {
                return Err(Error::Config(format!(
                    "ladder override {k} names a candidate that did not converge"
                )));
            }
            (k, true)
        }
        None => {
            if !admissible(1) {
                return Err(Error::Degenerate(format!(
                    "constant {} model for {disaster_type} is not admissible",
                    block.as_str()
                )));
            }
            let mut k = 1;
            while let Some(&(_, b)) = LADDER_EDGES.iter().find(|&&(a, b)| a == k && improves(a, b)) {
                k = b;
            }
            (k, false)
        }
    };

    Ok(LadderReport {
        disaster_type,
        block,
        xi_link,
        alpha: config.alpha,
        rows,
        selected,
        overridden,
        fits: Vec::new(),
    })
}

impl LadderReport {
    pub fn selected_fit(&self) -> Option<&SeverityFit> {
        self.fits.get(self.selected - 1).and_then(|f| f.as_ref())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned text table: log-likelihood rows followed by p-values in
    /// parentheses; the selected model is starred.
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "Likelihood ratio tests for {} ({})",
            self.block.as_str(),
            self.disaster_type
        );
        for row in &self.rows {
            let mark = if row.index == self.selected { "*" } else { " " };
            let value = match (&row.status, row.loglik) {
                (CandidateStatus::NoConvergence { .. }, _) | (_, None) => "no cvg".to_string(),
                (_, Some(ll)) => format!("{ll:.1}"),
            };
            let sign = if matches!(row.status, CandidateStatus::WrongSign { .. }) {
                "  (wrong sign)"
            } else {
                ""
            };
            let _ = writeln!(s, "({}) {:<26}{:>12}{mark}{sign}", row.index, row.label, value);
            for t in &row.tests {
                let p = match t.result {
                    Some(r) => format!("({:.3})", r.p_value),
                    None => "(--)".to_string(),
                };
                let _ = writeln!(s, "    wrt {:<22}{:>12}", LADDER_LABELS[t.null - 1], p);
            }
        }
        if self.overridden {
            let _ = writeln!(s, "* selected by override");
        } else {
            let _ = writeln!(s, "* selected at alpha = {}", self.alpha);
        }
        s
    }
}
