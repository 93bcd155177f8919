//! Maximization of smooth log-likelihoods.
//!
//! A BFGS phase with Armijo backtracking does the bulk of the work; a
//! damped Newton phase then drives the gradient below tolerance. A trial
//! point with likelihood `-inf` (outside the support) simply fails the
//! Armijo test, so the line search backtracks into the feasible region.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub trait Objective {
    fn dim(&self) -> usize;

    /// Objective value (to be maximized) and its gradient. May return `-inf`.
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64;

    fn value(&self, x: &[f64]) -> f64 {
        let mut g = vec![0.0; self.dim()];
        self.value_grad(x, &mut g)
    }

    /// Analytic Hessian if available; otherwise central differences of the gradient are used.
    fn hessian(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    /// Norm used for the convergence test.
    fn gradient_norm(&self, _x: &[f64], grad: &[f64]) -> f64 {
        norm(grad)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
    pub rel_tol: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            grad_tol: 1e-6,
            rel_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub value: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub trace: Vec<TraceEntry>,
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Central-difference Hessian of the gradient, symmetrized.
pub fn numerical_hessian<O: Objective + ?Sized>(obj: &O, x: &[f64]) -> DMatrix<f64> {
    let n = obj.dim();
    let mut h = DMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    let mut gp = vec![0.0; n];
    let mut gm = vec![0.0; n];
    for j in 0..n {
        let step = 1e-5 * x[j].abs().max(1.0);
        xp[j] = x[j] + step;
        obj.value_grad(&xp, &mut gp);
        xp[j] = x[j] - step;
        obj.value_grad(&xp, &mut gm);
        xp[j] = x[j];
        for i in 0..n {
            h[(i, j)] = (gp[i] - gm[i]) / (2.0 * step);
        }
    }
    (&h + h.transpose()) * 0.5
}

pub fn hessian_of<O: Objective + ?Sized>(obj: &O, x: &[f64]) -> DMatrix<f64> {
    obj.hessian(x).unwrap_or_else(|| numerical_hessian(obj, x))
}

struct State {
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
}

/// Backtracking along `dir` (an ascent direction); returns the accepted state and step.
fn line_search<O: Objective + ?Sized>(obj: &O, s: &State, dir: &[f64], initial: f64) -> Option<(State, f64)> {
    let slope = dot(&s.g, dir);
    if !(slope > 0.0) {
        return None;
    }
    let mut alpha = initial;
    let mut g = vec![0.0; s.x.len()];
    for _ in 0..60 {
        let x: Vec<f64> = s.x.iter().zip(dir).map(|(xi, di)| xi + alpha * di).collect();
        let f = obj.value_grad(&x, &mut g);
        if f.is_finite() && f >= s.f + 1e-4 * alpha * slope {
            return Some((State { x, f, g: g.clone() }, alpha));
        }
        alpha *= 0.5;
    }
    None
}

pub fn maximize<O: Objective + ?Sized>(obj: &O, x0: &[f64], opts: &OptimOptions) -> Result<OptimResult> {
    let n = obj.dim();
    if x0.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: x0.len(),
        });
    }
    let mut g0 = vec![0.0; n];
    let f0 = obj.value_grad(x0, &mut g0);
    if !f0.is_finite() {
        return Err(Error::Optimizer {
            reason: "objective is not finite at the starting point".into(),
            iterations: 0,
            trace: Vec::new(),
        });
    }
    let mut s = State {
        x: x0.to_vec(),
        f: f0,
        g: g0,
    };
    let mut trace = Vec::new();
    let mut iter = 0;
    let gnorm = |s: &State| obj.gradient_norm(&s.x, &s.g);

    // BFGS on the ascent problem; `hinv` approximates the inverse of the negative Hessian.
    let mut hinv = DMatrix::<f64>::identity(n, n);
    let mut first = true;
    while iter < opts.max_iter && gnorm(&s) >= opts.grad_tol {
        iter += 1;
        let g = DVector::from_column_slice(&s.g);
        let mut dir: Vec<f64> = (&hinv * &g).iter().copied().collect();
        if !(dot(&dir, &s.g) > 0.0) {
            hinv = DMatrix::identity(n, n);
            dir = s.g.clone();
        }
        let initial = if first { (1.0 / norm(&dir)).min(1.0) } else { 1.0 };
        let Some((next, alpha)) = line_search(obj, &s, &dir, initial) else {
            break;
        };
        let sv: Vec<f64> = next.x.iter().zip(&s.x).map(|(a, b)| a - b).collect();
        // y for the minimization of -f
        let yv: Vec<f64> = s.g.iter().zip(&next.g).map(|(a, b)| a - b).collect();
        let sy = dot(&sv, &yv);
        let rel_change = (next.f - s.f).abs() / (s.f.abs() + opts.rel_tol);
        s = next;
        trace.push(TraceEntry {
            iteration: iter,
            value: s.f,
            grad_norm: gnorm(&s),
            step: alpha,
        });
        if sy > 1e-12 * norm(&sv) * norm(&yv) {
            let sd = DVector::from_column_slice(&sv);
            let yd = DVector::from_column_slice(&yv);
            if first {
                hinv *= sy / dot(&yv, &yv);
                first = false;
            }
            let rho = 1.0 / sy;
            let hy = &hinv * &yd;
            let yhy = yd.dot(&hy);
            hinv +=
                (&sd * sd.transpose()) * (rho * rho * yhy + rho) - (&hy * sd.transpose() + &sd * hy.transpose()) * rho;
        }
        if rel_change < opts.rel_tol {
            break;
        }
    }

    // Damped Newton polish.
    let mut stalls = 0;
    while gnorm(&s) >= opts.grad_tol && iter < opts.max_iter + 100 {
        iter += 1;
        let neg_h = -hessian_of(obj, &s.x);
        let g = DVector::from_column_slice(&s.g);
        let scale = neg_h.diagonal().iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-12);
        let mut mu = 0.0;
        let mut dir = None;
        for _ in 0..40 {
            let m = &neg_h + DMatrix::identity(n, n) * mu;
            if let Some(ch) = m.cholesky() {
                dir = Some(ch.solve(&g));
                break;
            }
            mu = if mu == 0.0 { 1e-10 * scale } else { mu * 10.0 };
        }
        let Some(dir) = dir else { break };
        let dir: Vec<f64> = dir.iter().copied().collect();
        // Near the optimum the gain of a full step is below the rounding of
        // f; accept it when f holds up to rounding and the gradient shrinks.
        let x1: Vec<f64> = s.x.iter().zip(&dir).map(|(a, d)| a + d).collect();
        let mut g1 = vec![0.0; n];
        let f1 = obj.value_grad(&x1, &mut g1);
        let noise = 1e-12 * (1.0 + s.f.abs());
        if f1.is_finite() && f1 >= s.f - noise && obj.gradient_norm(&x1, &g1) < gnorm(&s) {
            s = State { x: x1, f: f1, g: g1 };
            trace.push(TraceEntry {
                iteration: iter,
                value: s.f,
                grad_norm: gnorm(&s),
                step: 1.0,
            });
            stalls = 0;
            continue;
        }
        match line_search(obj, &s, &dir, 1.0) {
            Some((next, alpha)) => {
                s = next;
                trace.push(TraceEntry {
                    iteration: iter,
                    value: s.f,
                    grad_norm: gnorm(&s),
                    step: alpha,
                });
                stalls = 0;
            }
            None => {
                // Rounding-level plateau: the step cannot raise f any further.
                stalls += 1;
                if stalls > 2 {
                    break;
                }
            }
        }
    }

    let grad_norm = gnorm(&s);
    if !(grad_norm < opts.grad_tol) {
        return Err(Error::Optimizer {
            reason: format!("gradient norm {grad_norm:.3e} above tolerance {:.1e}", opts.grad_tol),
            iterations: iter,
            trace,
        });
    }
    Ok(OptimResult {
        x: s.x,
        value: s.f,
        grad_norm,
        iterations: iter,
        trace,
    })
}

/// Objective seen through the linear reparametrization `theta = T phi`.
///
/// Used to precondition regressions: with `T = R^-1` from a thin QR of the
/// design, the transformed problem is close to isotropic.
pub struct Linear<'a, O: Objective + ?Sized> {
    inner: &'a O,
    t: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl<'a, O: Objective + ?Sized> Linear<'a, O> {
    /// `r` is upper-triangular and invertible.
    pub fn new(inner: &'a O, r: DMatrix<f64>) -> Result<Self> {
        let t = r
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("design matrix is rank deficient".into()))?;
        if t.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate("design matrix is rank deficient".into()));
        }
        Ok(Self { inner, t, r })
    }

    pub fn to_inner(&self, phi: &[f64]) -> Vec<f64> {
        (&self.t * DVector::from_column_slice(phi)).iter().copied().collect()
    }

    pub fn from_inner(&self, theta: &[f64]) -> Vec<f64> {
        (&self.r * DVector::from_column_slice(theta)).iter().copied().collect()
    }
}

impl<O: Objective + ?Sized> Objective for Linear<'_, O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value_grad(&self, phi: &[f64], grad: &mut [f64]) -> f64 {
        let theta = self.to_inner(phi);
        let mut gt = vec![0.0; theta.len()];
        let f = self.inner.value_grad(&theta, &mut gt);
        let gp = self.t.transpose() * DVector::from_column_slice(&gt);
        grad.copy_from_slice(gp.as_slice());
        f
    }

    fn hessian(&self, phi: &[f64]) -> Option<DMatrix<f64>> {
        let theta = self.to_inner(phi);
        self.inner.hessian(&theta).map(|h| self.t.transpose() * h * &self.t)
    }

    fn gradient_norm(&self, _phi: &[f64], grad: &[f64]) -> f64 {
        // gradient in the original coordinates is R^T grad_phi
        let g = self.r.transpose() * DVector::from_column_slice(grad);
        g.norm()
    }
}

/// R factor of a thin QR of `x`, with signs fixed so the diagonal is positive.
pub fn qr_r(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = x.ncols();
    if x.nrows() < p {
        return Err(Error::Degenerate(format!(
            "{} observations for {} parameters",
            x.nrows(),
            p
        )));
    }
    let mut r = x.clone().qr().r();
    let max_diag = r.diagonal().iter().map(|v| v.abs()).fold(0.0, f64::max);
    for i in 0..p {
        if r[(i, i)].abs() <= 1e-10 * max_diag.max(1e-300) {
            return Err(Error::Degenerate("design matrix is rank deficient".into()));
        }
        if r[(i, i)] < 0.0 {
            for j in 0..p {
                r[(i, j)] = -r[(i, j)];
            }
        }
    }
    Ok(r)
}

/// Inverse of the observed information (negative Hessian); errors if not positive definite.
pub fn covariance_from_hessian(h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let info = -h.clone();
    let ch = info
        .cholesky()
        .ok_or_else(|| Error::Degenerate("observed information is not positive definite".into()))?;
    Ok(ch.inverse())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Concave quadratic with a known maximum.
    struct Quad {
        a: DMatrix<f64>,
        b: Vec<f64>,
    }

    impl Objective for Quad {
        fn dim(&self) -> usize {
            self.b.len()
        }
        fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
            let xv = DVector::from_column_slice(x) - DVector::from_column_slice(&self.b);
            let ax = &self.a * &xv;
            grad.iter_mut().zip(ax.iter()).for_each(|(g, v)| *g = -v);
            -0.5 * xv.dot(&ax)
        }
    }

    #[test]
    fn finds_quadratic_maximum() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 100.0]);
        let q = Quad {
            a,
            b: vec![1.0, -2.0, 0.3],
        };
        let res = maximize(&q, &[0.0; 3], &OptimOptions::default()).unwrap();
        for (x, b) in res.x.iter().zip(&q.b) {
            assert!((x - b).abs() < 1e-6);
        }
        assert!(res.grad_norm < 1e-6);
    }

    /// Rosenbrock with a support barrier: -inf for x0 < -1.5.
    struct Banana;

    impl Objective for Banana {
        fn dim(&self) -> usize {
            2
        }
        fn value_grad(&self, x: &[f64], g: &mut [f64]) -> f64 {
            if x[0] < -1.5 {
                return f64::NEG_INFINITY;
            }
            let (a, b) = (1.0 - x[0], x[1] - x[0] * x[0]);
            g[0] = 2.0 * a + 400.0 * x[0] * b;
            g[1] = -200.0 * b;
            -(a * a + 100.0 * b * b)
        }
    }

    #[test]
    fn handles_curved_valley_and_barrier() {
        let res = maximize(&Banana, &[-1.2, 1.0], &OptimOptions::default()).unwrap();
        assert!((res.x[0] - 1.0).abs() < 1e-5 && (res.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn infinite_start_is_an_error() {
        let err = maximize(&Banana, &[-2.0, 0.0], &OptimOptions::default()).unwrap_err();
        assert!(err.is_convergence());
    }

    #[test]
    fn numerical_hessian_of_quadratic() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let q = Quad {
            a: a.clone(),
            b: vec![0.0, 0.0],
        };
        let h = numerical_hessian(&q, &[0.3, -0.7]);
        assert!((h + a).abs().max() < 1e-8);
    }

    #[test]
    fn rank_deficient_design_detected() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        assert!(matches!(qr_r(&x), Err(Error::Degenerate(_))));
    }
}
