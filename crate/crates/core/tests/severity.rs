mod common;

use deathtoll::design::DesignRow;
use deathtoll::distributions::{gpd_log_density, gpd_sample, GpdParams};
use deathtoll::optim::Objective;
use deathtoll::rng::stream;
use deathtoll::severity::{
    fit_severity_observations, severity_params_at, GpdRegressionLoglik, SeverityFit, SeverityObservation,
    SeverityOptions, SeveritySpec, XiLink,
};
use deathtoll::synthetic::severity_sample;
use deathtoll::{DisasterType, Region};
use rand::seq::SliceRandom;
use rand::Rng;

fn iid_observations(g: &GpdParams, n: usize, seed: u64) -> Vec<SeverityObservation> {
    let w = common::window();
    gpd_sample(g, n, &mut stream(seed, 0))
        .into_iter()
        .enumerate()
        .map(|(i, y)| SeverityObservation {
            year: w.start + (i % w.len()) as i32,
            region: Region::ALL[i % Region::ALL.len()],
            deaths: y.max(f64::MIN_POSITIVE),
        })
        .collect()
}

fn flood_sample(seed: u64) -> Vec<SeverityObservation> {
    let (f0, s0) = common::reference(DisasterType::Flood);
    severity_sample(&f0, &s0, &common::panel(), common::window(), 3658, &mut stream(seed, 0)).unwrap()
}

fn rows(panel: &deathtoll::data::AnnualPanel, obs: &[SeverityObservation]) -> Vec<DesignRow> {
    obs.iter()
        .map(|o| panel.design_row(o.year, o.region).unwrap())
        .collect()
}

#[test]
fn intercept_only_recovers_generator() {
    let g = GpdParams::new(0.3, 2.0).unwrap();
    let obs = iid_observations(&g, 5000, 4);
    let spec = SeveritySpec::intercept_only(DisasterType::Flood, XiLink::Identity, common::window());
    let fit = fit_severity_observations(&obs, &common::panel(), &spec, &SeverityOptions::default()).unwrap();
    let p = fit.fitted_params[0];
    assert!((p.xi - 0.3).abs() < 0.05, "{p:?}");
    assert!((p.beta - 2.0).abs() < 0.1, "{p:?}");
}

#[test]
fn log1p_link_recovers_negative_tail_index() {
    let g = GpdParams::new(-0.2, 50.0).unwrap();
    let obs = iid_observations(&g, 3000, 5);
    let spec = SeveritySpec::intercept_only(DisasterType::ColdWave, XiLink::Log1p, common::window());
    let fit = fit_severity_observations(&obs, &common::panel(), &spec, &SeverityOptions::default()).unwrap();
    let eta = fit.xi_coefficients[0];
    assert!(
        (eta - XiLink::Log1p.eta(-0.2)).abs() < 3.0 * fit.xi_std_errors[0],
        "{eta}"
    );
}

#[test]
fn flood_regression_recovers_every_coefficient() {
    let panel = common::panel();
    let obs = flood_sample(9);
    let (_, s0) = common::reference(DisasterType::Flood);
    let fit = fit_severity_observations(&obs, &panel, &s0.spec, &SeverityOptions::default()).unwrap();
    assert!(fit.grad_norm < 1e-5);
    let truth = s0.coefficients();
    let se: Vec<f64> = fit.nu_std_errors.iter().chain(&fit.xi_std_errors).copied().collect();
    for (i, ((c, c0), s)) in fit.coefficients().iter().zip(&truth).zip(&se).enumerate() {
        assert!((c - c0).abs() < 3.0 * s, "coefficient {i}: {c} vs {c0} (se {s})");
    }
}

#[test]
fn reported_loglik_matches_per_event_densities() {
    let panel = common::panel();
    let obs = flood_sample(10);
    let (_, s0) = common::reference(DisasterType::Flood);
    let fit = fit_severity_observations(&obs, &panel, &s0.spec, &SeverityOptions::default()).unwrap();
    let direct: f64 = obs
        .iter()
        .map(|o| {
            let g = severity_params_at(&fit, &panel.design_row(o.year, o.region).unwrap()).unwrap();
            gpd_log_density(&g, o.deaths)
        })
        .sum();
    assert!(
        (fit.loglik - direct).abs() < 1e-8 * direct.abs(),
        "{} vs {direct}",
        fit.loglik
    );
}

#[test]
fn analytic_gradient_matches_differences_at_random_points() {
    let panel = common::panel();
    let obs = flood_sample(12);
    let rows = rows(&panel, &obs);
    let y: Vec<f64> = obs.iter().map(|o| o.deaths).collect();
    let mut rng = stream(12, 1);
    for (spec, base) in [
        (
            common::reference(DisasterType::Flood).1.spec,
            common::reference(DisasterType::Flood).1.coefficients(),
        ),
        (
            SeveritySpec::intercept_only(DisasterType::Flood, XiLink::Log1p, common::window()),
            vec![5.0, 0.3],
        ),
    ] {
        let obj = GpdRegressionLoglik::new(&spec, &rows, y.clone());
        let mut checked = 0;
        while checked < 20 {
            let x: Vec<f64> = base.iter().map(|c| c + 0.02 * (rng.random::<f64>() - 0.5)).collect();
            if !obj.value(&x).is_finite() {
                continue;
            }
            let err = common::gradient_error(&obj, &x);
            assert!(err < 1e-5, "relative gradient error {err}");
            checked += 1;
        }
    }
}

#[test]
fn fit_is_invariant_to_event_order() {
    let panel = common::panel();
    let obs = flood_sample(13);
    let (_, s0) = common::reference(DisasterType::Flood);
    let a = fit_severity_observations(&obs, &panel, &s0.spec, &SeverityOptions::default()).unwrap();
    let mut shuffled = obs.clone();
    shuffled.shuffle(&mut stream(13, 1));
    let b = fit_severity_observations(&shuffled, &panel, &s0.spec, &SeverityOptions::default()).unwrap();
    let se: Vec<f64> = a.nu_std_errors.iter().chain(&a.xi_std_errors).copied().collect();
    for ((x, y), s) in a.coefficients().iter().zip(b.coefficients()).zip(se) {
        assert!((x - y).abs() < 1e-3 * s);
    }
    assert!((a.loglik - b.loglik).abs() < 1e-6);
}

/// `|H12| / sqrt(H11 H22)` of a two-parameter objective at `x`.
fn normalized_cross_information(f: impl Fn(f64, f64) -> f64, x: (f64, f64)) -> f64 {
    let (a, b) = x;
    let (ha, hb) = (1e-4 * a.abs().max(1e-2), 1e-4);
    let h11 = (f(a + ha, b) - 2.0 * f(a, b) + f(a - ha, b)) / (ha * ha);
    let h22 = (f(a, b + hb) - 2.0 * f(a, b) + f(a, b - hb)) / (hb * hb);
    let h12 = (f(a + ha, b + hb) - f(a + ha, b - hb) - f(a - ha, b + hb) + f(a - ha, b - hb)) / (4.0 * ha * hb);
    h12.abs() / (h11 * h22).sqrt()
}

#[test]
fn orthogonal_parametrization_decorrelates_information() {
    let g = GpdParams::new(0.3, 2.0).unwrap();
    let obs = iid_observations(&g, 5000, 14);
    let spec = SeveritySpec::intercept_only(DisasterType::Flood, XiLink::Identity, common::window());
    let fit: SeverityFit =
        fit_severity_observations(&obs, &common::panel(), &spec, &SeverityOptions::default()).unwrap();
    let y: Vec<f64> = obs.iter().map(|o| o.deaths).collect();
    let (nu, xi) = (fit.nu_coefficients[0], fit.xi_coefficients[0]);
    let beta = nu.exp() / (1.0 + xi);
    let ortho = normalized_cross_information(
        |n, x| {
            y.iter()
                .map(|&v| {
                    gpd_log_density(
                        &GpdParams {
                            xi: x,
                            beta: n.exp() / (1.0 + x),
                        },
                        v,
                    )
                })
                .sum()
        },
        (nu, xi),
    );
    let plain = normalized_cross_information(
        |b, x| {
            y.iter()
                .map(|&v| gpd_log_density(&GpdParams { xi: x, beta: b }, v))
                .sum()
        },
        (beta, xi),
    );
    assert!(ortho < plain, "orthogonal {ortho} vs plain {plain}");
    assert!(ortho < 0.1, "{ortho}");
}
