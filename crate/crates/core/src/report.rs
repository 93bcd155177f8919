//! Parameter tables in the layout of the printed estimates: one column
//! group per disaster type, coefficient, significance marker, standard error.

use std::fmt::Write as _;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::design::Term;
use crate::frequency::FrequencyFit;
use crate::severity::SeverityFit;

/// Two-sided normal p-value of `coef / se`.
pub fn p_value(coef: f64, se: f64) -> f64 {
    if !(se > 0.0) || !coef.is_finite() {
        return f64::NAN;
    }
    2.0 * Normal::standard().sf((coef / se).abs())
}

/// `(a)` to `(d)` for significance at 0.1%, 1%, 5% and 10%.
pub fn marker(p: f64) -> &'static str {
    match p {
        p if p < 0.001 => "(a)",
        p if p < 0.01 => "(b)",
        p if p < 0.05 => "(c)",
        p if p < 0.10 => "(d)",
        _ => "",
    }
}

type Column<'a> = (&'a [Term], &'a [f64], &'a [f64]);

fn panel(out: &mut String, title: &str, columns: &[Option<Column<'_>>], width: usize) {
    let _ = writeln!(out, "{title}");
    let mut terms: Vec<Term> = Vec::new();
    for (ts, _, _) in columns.iter().flatten() {
        for t in ts.iter() {
            if !terms.contains(t) {
                terms.push(*t);
            }
        }
    }
    for t in terms {
        let _ = write!(out, "{:<width$}", t.label());
        for col in columns {
            let cell = col.and_then(|(ts, c, s)| ts.iter().position(|x| *x == t).map(|i| (c[i], s[i])));
            match cell {
                Some((c, s)) => {
                    let _ = write!(out, "{c:>10.3} {:<4}{s:>8.3}", marker(p_value(c, s)));
                }
                None => {
                    let _ = write!(out, "{:>23}", "");
                }
            }
        }
        out.push('\n');
    }
}

/// Text table for a set of (frequency, severity) fits, one column group each.
pub fn render_parameter_table(fits: &[(Option<&FrequencyFit>, Option<&SeverityFit>)]) -> String {
    let width = 46;
    let mut out = String::new();
    let _ = write!(out, "{:<width$}", "");
    for (f, s) in fits {
        let name = f
            .map(|f| f.spec.response)
            .or_else(|| s.map(|s| s.spec.response))
            .map(|t| t.to_string())
            .unwrap_or_default();
        let _ = write!(out, "{name:>23}");
    }
    out.push('\n');

    let freq: Vec<Option<Column>> = fits
        .iter()
        .map(|(f, _)| f.map(|f| (&f.spec.terms[..], &f.coefficients[..], &f.std_errors[..])))
        .collect();
    let nu: Vec<Option<Column>> = fits
        .iter()
        .map(|(_, s)| s.map(|s| (&s.spec.nu_terms[..], &s.nu_coefficients[..], &s.nu_std_errors[..])))
        .collect();
    let xi: Vec<Option<Column>> = fits
        .iter()
        .map(|(_, s)| s.map(|s| (&s.spec.xi_terms[..], &s.xi_coefficients[..], &s.xi_std_errors[..])))
        .collect();
    if freq.iter().any(Option::is_some) {
        panel(&mut out, "Panel A: frequency (lambda)", &freq, width);
    }
    if nu.iter().any(Option::is_some) {
        panel(&mut out, "Panel B: severity (nu)", &nu, width);
        panel(&mut out, "Panel C: severity (xi)", &xi, width);
    }

    let mut footer = |label: &str, value: &dyn Fn(usize) -> Option<String>| {
        let _ = write!(out, "{label:<width$}");
        for i in 0..fits.len() {
            let _ = write!(out, "{:>23}", value(i).unwrap_or_default());
        }
        out.push('\n');
    };
    footer("Observations (frequency)", &|i| fits[i].0.map(|f| f.n_obs.to_string()));
    footer("Log likelihood (frequency)", &|i| {
        fits[i].0.map(|f| format!("{:.1}", f.loglik))
    });
    footer("Adjusted R2 (frequency)", &|i| {
        fits[i].0.map(|f| format!("{:.3}", f.adj_r2))
    });
    footer("Observations (severity)", &|i| fits[i].1.map(|s| s.n_obs.to_string()));
    footer("Log likelihood (severity)", &|i| {
        fits[i].1.map(|s| format!("{:.1}", s.loglik))
    });
    out.push_str("(a), (b), (c), (d): significant at the 0.1%, 1%, 5% and 10% levels\n");
    out
}
