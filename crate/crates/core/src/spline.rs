//! Natural cubic spline through annual knots.

use crate::error::{Error, Result};

/// Piecewise interpolant through strictly increasing knots.
///
/// With four or more knots this is a natural cubic spline (zero second
/// derivative at both ends); with two or three knots it degrades to
/// piecewise-linear interpolation.
#[derive(Debug, Clone)]
pub struct Interpolant {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots; empty for the linear fallback.
    m: Vec<f64>,
}

impl Interpolant {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::Dimension {
                expected: xs.len(),
                got: ys.len(),
            });
        }
        if xs.is_empty() {
            return Err(Error::Degenerate("interpolant needs at least one knot".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("knots must be strictly increasing".into()));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::Domain("knots must be finite".into()));
        }
        let m = if xs.len() >= 4 {
            natural_second_derivatives(&xs, &ys)
        } else {
            Vec::new()
        };
        Ok(Self { xs, ys, m })
    }

    pub fn is_cubic(&self) -> bool {
        !self.m.is_empty()
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    /// Evaluates at `x`; no extrapolation outside the knot range.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if !(x >= lo && x <= hi) {
            return Err(Error::OutOfRange(format!(
                "{x} outside interpolation range [{lo}, {hi}]"
            )));
        }
        let n = self.xs.len();
        if n == 1 {
            return Ok(self.ys[0]);
        }
        // index of the interval [xs[k], xs[k+1]] containing x
        let k = match self.xs.partition_point(|&v| v <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let (x0, x1) = (self.xs[k], self.xs[k + 1]);
        let (y0, y1) = (self.ys[k], self.ys[k + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        if self.m.is_empty() {
            return Ok(a * y0 + b * y1);
        }
        let (m0, m1) = (self.m[k], self.m[k + 1]);
        Ok(a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0)
    }
}

fn natural_second_derivatives(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut m = vec![0.0; n];
    // Thomas algorithm on the interior equations.
    let inner = n - 2;
    let mut diag = vec![0.0; inner];
    let mut upper = vec![0.0; inner];
    let mut rhs = vec![0.0; inner];
    for i in 1..n - 1 {
        let h0 = xs[i] - xs[i - 1];
        let h1 = xs[i + 1] - xs[i];
        diag[i - 1] = 2.0 * (h0 + h1);
        upper[i - 1] = h1;
        rhs[i - 1] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
    }
    for i in 1..inner {
        let lower = xs[i + 1] - xs[i];
        let w = lower / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    for i in (0..inner).rev() {
        let next = if i + 1 < inner { m[i + 2] } else { 0.0 };
        m[i + 1] = (rhs[i] - upper[i] * next) / diag[i];
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn linear_fallback_below_four_knots() {
        let s = Interpolant::new(vec![2018.0, 2019.0], vec![100.0, 110.0]).unwrap();
        assert!(!s.is_cubic());
        assert_relative_eq!(s.eval(2019.0).unwrap(), 110.0);
        assert_relative_eq!(s.eval(2018.5).unwrap(), 105.0);
    }

    #[test]
    fn constant_data_is_constant() {
        let s = Interpolant::new(vec![0.0, 1.0, 2.0, 3.0], vec![50.0; 4]).unwrap();
        for i in 0..=30 {
            assert_relative_eq!(s.eval(i as f64 / 10.0).unwrap(), 50.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn reproduces_knots_and_rejects_extrapolation() {
        let xs = vec![0.0, 1.0, 2.5, 3.0, 5.0];
        let ys = vec![1.0, -2.0, 0.5, 4.0, 3.0];
        let s = Interpolant::new(xs.clone(), ys.clone()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert_relative_eq!(s.eval(*x).unwrap(), *y, epsilon = 1e-12);
        }
        assert!(matches!(s.eval(5.0001), Err(Error::OutOfRange(_))));
        assert!(matches!(s.eval(-0.1), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn rejects_unsorted_knots() {
        assert!(Interpolant::new(vec![0.0, 0.0, 1.0], vec![1.0, 2.0, 3.0]).is_err());
    }
}
