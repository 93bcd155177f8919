#![allow(dead_code)]

use deathtoll::bootstrap::simulate_history;
use deathtoll::calibration::{reference_frequency, reference_severity};
use deathtoll::data::{AnnualPanel, YearRange};
use deathtoll::frequency::FrequencyFit;
use deathtoll::rng::stream;
use deathtoll::severity::{SeverityFit, SeverityObservation};
use deathtoll::synthetic::reference_panel;
use deathtoll::DisasterType;

pub fn window() -> YearRange {
    YearRange::default()
}

pub fn panel() -> AnnualPanel {
    reference_panel(window()).unwrap()
}

pub fn reference(t: DisasterType) -> (FrequencyFit, SeverityFit) {
    (reference_frequency(t), reference_severity(t))
}

/// One synthetic history from the given generator: panel with simulated counts and the severities.
pub fn simulate(
    freq: &FrequencyFit,
    sev: &SeverityFit,
    panel: &AnnualPanel,
    seed: u64,
    index: u64,
) -> (AnnualPanel, Vec<SeverityObservation>) {
    let mut rng = stream(seed, index);
    let h = simulate_history(freq, sev, panel, freq.spec.window, &mut rng).unwrap();
    (
        panel.with_counts(freq.spec.response, &h.counts).unwrap(),
        h.observations,
    )
}

/// Five-point central-difference check of an analytic gradient, relative to max(1, |g|).
pub fn gradient_error<O: deathtoll::optim::Objective>(obj: &O, x: &[f64]) -> f64 {
    let mut g = vec![0.0; obj.dim()];
    obj.value_grad(x, &mut g);
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let h = 1e-4 * x[i].abs().max(1.0);
        let at = |d: f64| {
            let mut xs = x.to_vec();
            xs[i] += d;
            obj.value(&xs)
        };
        let fd = (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h);
        worst = worst.max((fd - g[i]).abs() / g[i].abs().max(1.0));
    }
    worst
}

/// Kolmogorov-Smirnov distance of a sample from Uniform(0, 1).
pub fn ks_uniform(sample: &[f64]) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &u)| ((i + 1) as f64 / n - u).max(u - i as f64 / n))
        .fold(0.0, f64::max)
}
