//! Generalized Pareto (threshold zero) and Poisson kernels.
//!
//! The GPD is available in the usual `(beta, xi)` form and in the
//! orthogonal form `nu = log((1 + xi) * beta)`, whose Fisher information is
//! diagonal in `(nu, xi)`. Likelihood code works in the orthogonal form.

use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Below this |xi| the exponential-limit series is used in cdf/quantile.
pub const XI_ZERO_SWITCH: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpdParams {
    pub xi: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpdOrthoParams {
    pub nu: f64,
    pub xi: f64,
}

impl GpdParams {
    pub fn new(xi: f64, beta: f64) -> Result<Self> {
        if !(xi > -1.0) || !xi.is_finite() {
            return Err(Error::Boundary { xi });
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Domain(format!("scale beta = {beta} must be positive")));
        }
        Ok(Self { xi, beta })
    }

    pub fn to_ortho(&self) -> GpdOrthoParams {
        GpdOrthoParams {
            nu: self.xi.ln_1p() + self.beta.ln(),
            xi: self.xi,
        }
    }

    /// Upper end of the support; `None` when unbounded.
    pub fn upper_endpoint(&self) -> Option<f64> {
        (self.xi < 0.0).then(|| -self.beta / self.xi)
    }
}

impl GpdOrthoParams {
    pub fn to_params(&self) -> Result<GpdParams> {
        GpdParams::new(self.xi, self.nu.exp() / (1.0 + self.xi))
    }
}

/// `log(1 + z) / z`, continuous at zero.
fn log1p_ratio(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        1.0 - z / 2.0 + z * z / 3.0 - z * z * z / 4.0
    } else {
        z.ln_1p() / z
    }
}

/// `(log(1 + z) - z / (1 + z)) / z^2`, continuous at zero.
fn log1p_curvature(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        0.5 - 2.0 * z / 3.0 + 0.75 * z * z - 0.8 * z * z * z
    } else {
        (z.ln_1p() - z / (1.0 + z)) / (z * z)
    }
}

/// `expm1(u) / u`, continuous at zero.
fn expm1_ratio(u: f64) -> f64 {
    if u.abs() < 1e-5 {
        1.0 + u / 2.0 + u * u / 6.0
    } else {
        u.exp_m1() / u
    }
}

fn check_support(p: &GpdParams, y: f64) -> Result<()> {
    if !(y >= 0.0) {
        return Err(Error::Domain(format!("y = {y} is negative")));
    }
    if let Some(end) = p.upper_endpoint() {
        if y > end * (1.0 + 1e-12) {
            return Err(Error::Domain(format!("y = {y} beyond upper endpoint {end}")));
        }
    }
    Ok(())
}

pub fn gpd_cdf(params: &GpdParams, y: f64) -> Result<f64> {
    check_support(params, y)?;
    let t = params.xi * y / params.beta;
    if t <= -1.0 {
        return Ok(1.0);
    }
    let s = if params.xi.abs() < XI_ZERO_SWITCH {
        1.0 - t / 2.0 + t * t / 3.0
    } else {
        t.ln_1p() / t
    };
    Ok(-(-(y / params.beta) * s).exp_m1())
}

pub fn gpd_quantile(params: &GpdParams, p: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Domain(format!("probability {p} outside [0, 1)")));
    }
    let l = -(-p).ln_1p();
    let u = params.xi * l;
    let e = if params.xi.abs() < XI_ZERO_SWITCH {
        1.0 + u / 2.0 + u * u / 6.0
    } else {
        expm1_ratio(u)
    };
    Ok(params.beta * l * e)
}

pub fn gpd_median(params: &GpdParams) -> f64 {
    gpd_quantile(params, 0.5).expect("0.5 is a valid probability")
}

/// Expected value with an explicit marker for the infinite case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Moment {
    Finite(f64),
    Infinite,
}

impl Moment {
    pub fn finite(self) -> Option<f64> {
        match self {
            Moment::Finite(v) => Some(v),
            Moment::Infinite => None,
        }
    }
}

pub fn gpd_mean(params: &GpdParams) -> Moment {
    if params.xi < 1.0 {
        Moment::Finite(params.beta / (1.0 - params.xi))
    } else {
        Moment::Infinite
    }
}

/// Log density in the `(beta, xi)` form; `-inf` outside the support.
pub fn gpd_log_density(params: &GpdParams, y: f64) -> f64 {
    if !(params.xi > -1.0 && params.beta > 0.0) {
        return f64::NEG_INFINITY;
    }
    let o = params.to_ortho();
    ortho_log_density(o.nu, o.xi, y)
}

/// Per-observation log density in `(nu, xi)`.
pub fn ortho_log_density(nu: f64, xi: f64, y: f64) -> f64 {
    ortho_log_density_score(nu, xi, y).0
}

/// Log density and its partial derivatives with respect to `nu` and `xi`.
///
/// Uses `w = y exp(-nu)` and `z = xi (1 + xi) w = xi y / beta`, which
/// keeps every expression finite through `xi = 0`.
pub fn ortho_log_density_score(nu: f64, xi: f64, y: f64) -> (f64, f64, f64) {
    if !(xi > -1.0) || !(y >= 0.0) || !nu.is_finite() {
        return (f64::NEG_INFINITY, 0.0, 0.0);
    }
    let a = 1.0 + xi;
    let w = y * (-nu).exp();
    let z = xi * a * w;
    if !(1.0 + z > 0.0) {
        return (f64::NEG_INFINITY, 0.0, 0.0);
    }
    let ll = -nu + a.ln() - a * a * w * log1p_ratio(z);
    let d_nu = -1.0 + a * a * w / (1.0 + z);
    let d_xi = 1.0 / a + a * a * w * w * log1p_curvature(z) - 2.0 * a * w / (1.0 + z);
    (ll, d_nu, d_xi)
}

/// Second derivatives `(d2/dnu2, d2/dnu dxi, d2/dxi2)` of the log density.
///
/// Zero outside the support. Near `xi = 0` the `xi` curvature comes from a
/// central difference of the (stable) score.
pub fn ortho_log_density_hessian(nu: f64, xi: f64, y: f64) -> (f64, f64, f64) {
    if !(xi > -1.0) || !(y >= 0.0) || !nu.is_finite() {
        return (0.0, 0.0, 0.0);
    }
    let a = 1.0 + xi;
    let w = y * (-nu).exp();
    let z = xi * a * w;
    if !(1.0 + z > 0.0) {
        return (0.0, 0.0, 0.0);
    }
    let d2 = (1.0 + z) * (1.0 + z);
    let h_nn = -a * a * w / d2;
    let h_nx = a * w * (2.0 - a * w) / d2;
    let h_xx = if xi.abs() > 1e-2 {
        let b = (1.0 + 2.0 * xi) * w / (1.0 + z);
        -1.0 / (a * a) - 2.0 / (xi * xi * xi) * z.ln_1p() + 2.0 / (xi * xi) * b - a / xi * (2.0 * w / (1.0 + z) - b * b)
    } else {
        let h = 1e-4;
        let up = ortho_log_density_score(nu, xi + h, y).2;
        let down = ortho_log_density_score(nu, xi - h, y).2;
        (up - down) / (2.0 * h)
    };
    (h_nn, h_nx, h_xx)
}

/// Sample log-likelihood; `-inf` when a point leaves the support or `xi <= -1`.
pub fn gpd_loglik(params: &GpdOrthoParams, sample: &[f64]) -> f64 {
    let mut total = 0.0;
    for &y in sample {
        let l = ortho_log_density(params.nu, params.xi, y);
        if l == f64::NEG_INFINITY {
            return l;
        }
        total += l;
    }
    total
}

/// Inverse-transform draws.
pub fn gpd_sample<R: Rng + ?Sized>(params: &GpdParams, n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| gpd_draw(params, rng)).collect()
}

pub fn gpd_draw<R: Rng + ?Sized>(params: &GpdParams, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    gpd_quantile(params, u).expect("uniform draw in [0, 1)")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonParams {
    pub lambda: f64,
}

impl PoissonParams {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!("Poisson intensity {lambda} must be positive")));
        }
        Ok(Self { lambda })
    }
}

pub fn poisson_log_pmf(params: &PoissonParams, n: u64) -> f64 {
    let n = n as f64;
    n * params.lambda.ln() - params.lambda - ln_gamma(n + 1.0)
}

pub fn poisson_pmf(params: &PoissonParams, n: u64) -> f64 {
    poisson_log_pmf(params, n).exp()
}

pub fn poisson_sample<R: Rng + ?Sized>(params: &PoissonParams, rng: &mut R) -> u64 {
    let d = rand_distr::Poisson::new(params.lambda).expect("validated intensity");
    d.sample(rng) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(xi: f64, beta: f64) -> GpdParams {
        GpdParams::new(xi, beta).unwrap()
    }

    #[test]
    fn cdf_examples() {
        assert_relative_eq!(
            gpd_cdf(&p(0.0, 1.0), 1.0).unwrap(),
            1.0 - (-1.0f64).exp(),
            epsilon = 1e-15
        );
        assert_relative_eq!(gpd_cdf(&p(1.0, 1.0), 1.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(gpd_cdf(&p(-0.5, 1.0), 2.0).unwrap(), 1.0);
        assert!(gpd_cdf(&p(-0.5, 1.0), 2.5).is_err());
        assert!(gpd_cdf(&p(0.5, 1.0), -1.0).is_err());
    }

    #[test]
    fn quantile_examples() {
        assert_relative_eq!(gpd_quantile(&p(1.0, 1.0), 0.5).unwrap(), 1.0, epsilon = 1e-14);
        let q = gpd_quantile(&p(0.0, 2.0), 1.0 - (-1.0f64).exp()).unwrap();
        assert_relative_eq!(q, 2.0, epsilon = 1e-12);
        assert!(gpd_quantile(&p(0.3, 2.0), 1.0).is_err());
        assert!(gpd_quantile(&p(0.3, 2.0), -0.1).is_err());
    }

    /// Bisection inverse of the cdf, independent of the closed-form quantile.
    fn bisect_quantile(params: &GpdParams, prob: f64) -> f64 {
        let mut lo = 0.0;
        let mut hi = params.upper_endpoint().unwrap_or(1.0);
        while params.upper_endpoint().is_none() && gpd_cdf(params, hi).unwrap() < prob {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if gpd_cdf(params, mid).unwrap() < prob {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn quantile_matches_bisection() {
        let params = p(0.3, 2.0);
        let q = gpd_quantile(&params, 0.9).unwrap();
        assert_relative_eq!(q, bisect_quantile(&params, 0.9), max_relative = 1e-10);
        assert!((gpd_cdf(&params, q).unwrap() - 0.9).abs() < 1e-10);
    }

    #[test]
    fn mean_examples() {
        assert_eq!(gpd_mean(&p(0.5, 2.0)), Moment::Finite(4.0));
        assert_eq!(gpd_mean(&p(0.0, 3.0)), Moment::Finite(3.0));
        assert_eq!(gpd_mean(&p(1.2, 1.0)), Moment::Infinite);
        assert_eq!(gpd_mean(&p(1.0, 1.0)), Moment::Infinite);
    }

    #[test]
    fn loglik_examples() {
        let o = p(0.0, 1.0).to_ortho();
        assert_relative_eq!(gpd_loglik(&o, &[1.0]), -1.0, epsilon = 1e-14);
        let heavy = gpd_loglik(&p(0.5, 2.0).to_ortho(), &[1e6]);
        assert!(heavy.is_finite() && heavy < 0.0);
        assert_eq!(gpd_loglik(&p(-0.5, 2.0).to_ortho(), &[1e6]), f64::NEG_INFINITY);
        assert_eq!(
            gpd_loglik(&GpdOrthoParams { nu: 0.0, xi: -1.0 }, &[0.1]),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn log_density_matches_closed_form() {
        // f(y) = (1/beta) (1 + xi y / beta)^(-1/xi - 1)
        for (xi, beta, y) in [
            (0.3f64, 2.0f64, 1.7f64),
            (-0.4, 3.0, 2.0),
            (2.5, 0.5, 40.0),
            (1e-9, 1.5, 0.8),
        ] {
            let direct = -beta.ln() - (1.0 / xi + 1.0) * (xi * y / beta).ln_1p();
            assert_relative_eq!(gpd_log_density(&p(xi, beta), y), direct, max_relative = 1e-7);
        }
    }

    #[test]
    fn score_matches_finite_differences() {
        let h = 1e-6;
        for (nu, xi, y) in [
            (0.7, 0.3, 2.0),
            (1.2, -0.3, 1.0),
            (0.0, 0.0, 3.0),
            (2.0, 1.5, 100.0),
            (0.5, 2e-5, 4.0),
        ] {
            let (_, dn, dx) = ortho_log_density_score(nu, xi, y);
            let fd_n = (ortho_log_density(nu + h, xi, y) - ortho_log_density(nu - h, xi, y)) / (2.0 * h);
            let fd_x = (ortho_log_density(nu, xi + h, y) - ortho_log_density(nu, xi - h, y)) / (2.0 * h);
            assert_relative_eq!(dn, fd_n, max_relative = 1e-6, epsilon = 1e-8);
            assert_relative_eq!(dx, fd_x, max_relative = 1e-6, epsilon = 1e-8);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let mut a = ChaCha8Rng::seed_from_u64(11);
        let mut b = ChaCha8Rng::seed_from_u64(11);
        assert!(gpd_sample(&p(0.3, 2.0), 0, &mut a).is_empty());
        assert_eq!(
            gpd_sample(&p(0.3, 2.0), 50, &mut a),
            gpd_sample(&p(0.3, 2.0), 50, &mut b)
        );
    }

    #[test]
    fn exponential_sample_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let xs = gpd_sample(&p(0.0, 2.0), n, &mut rng);
        let mean = xs.iter().sum::<f64>() / n as f64;
        // variance beta^2 = 4
        assert!((mean - 2.0).abs() < 3.0 * 2.0 / (n as f64).sqrt());
    }

    #[test]
    fn poisson_examples() {
        let one = PoissonParams::new(1.0).unwrap();
        assert_relative_eq!(poisson_pmf(&one, 0), (-1.0f64).exp(), epsilon = 1e-15);
        let two = PoissonParams::new(2.0).unwrap();
        assert_relative_eq!(poisson_pmf(&two, 2), 2.0 * (-2.0f64).exp(), epsilon = 1e-15);
        assert!(PoissonParams::new(0.0).is_err());
    }

    #[test]
    fn poisson_pmf_sums_to_one() {
        for lambda in [0.01, 1.0, 7.5, 60.0] {
            let params = PoissonParams::new(lambda).unwrap();
            let total: f64 = (0..400).map(|n| poisson_pmf(&params, n)).sum();
            assert!((total - 1.0).abs() < 1e-12, "lambda {lambda}: {total}");
        }
    }

    #[test]
    fn poisson_sample_mean() {
        let params = PoissonParams::new(5.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 100_000;
        let mean = (0..n).map(|_| poisson_sample(&params, &mut rng) as f64).sum::<f64>() / n as f64;
        assert!((mean - 5.0).abs() < 3.0 * (5.0 / n as f64).sqrt());
    }

    #[test]
    fn density_hessian_matches_score_differences() {
        for &(nu, xi, y) in &[
            (0.3, 0.4, 2.0),
            (1.0, -0.6, 1.5),
            (0.0, 0.005, 3.0),
            (0.5, 2.5, 40.0),
            (0.2, -0.95, 0.9),
        ] {
            let (h_nn, h_nx, h_xx) = ortho_log_density_hessian(nu, xi, y);
            let e = 1e-6;
            let (_, n_up, x_up) = ortho_log_density_score(nu + e, xi, y);
            let (_, n_dn, x_dn) = ortho_log_density_score(nu - e, xi, y);
            let (_, n_r, x_r) = ortho_log_density_score(nu, xi + e, y);
            let (_, n_l, x_l) = ortho_log_density_score(nu, xi - e, y);
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-5 * (1.0 + b.abs());
            assert!(close(h_nn, (n_up - n_dn) / (2.0 * e)), "{nu} {xi} {y}");
            assert!(close(h_nx, (n_r - n_l) / (2.0 * e)), "{nu} {xi} {y}");
            assert!(close(h_nx, (x_up - x_dn) / (2.0 * e)), "{nu} {xi} {y}");
            assert!(close(h_xx, (x_r - x_l) / (2.0 * e)), "{nu} {xi} {y}: {h_xx}");
        }
    }
}
