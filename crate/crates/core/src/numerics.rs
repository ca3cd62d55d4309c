//! Quadrature, interpolation, fixed-step integrators and small regressions.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul};

use nalgebra::SMatrix;

use crate::error::{Error, Result};
use crate::params::TimeGrid;

/// Fixed-order pairwise summation. The split points depend only on the
/// length, so results are reproducible regardless of how values were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if values.len() <= LEAF {
        let mut s = 0.0;
        for v in values {
            s += v;
        }
        return s;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn mean(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}

/// Sample mean and standard error (`n - 1` normalisation; zero for one value).
pub fn mean_and_se(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = values.len();
    let m = mean(values);
    if n == 1 {
        return Ok((m, 0.0));
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    Ok((m, libm::sqrt(var / n as f64)))
}

/// Fixed-point scale for [`exact_mean`].
const FIXED_SCALE: f64 = 79228162514264337593543950336.0; // 2^96

/// Mean computed with an integer accumulator, so the result does not depend
/// on the order of `values`. Each value is truncated to a multiple of
/// `2^-96`; `None` if any magnitude reaches `2^30` or is not finite.
pub fn exact_mean(values: &[f64]) -> Option<f64> {
    let mut acc: i128 = 0;
    for &v in values {
        if !v.is_finite() || v.abs() >= 1073741824.0 {
            return None;
        }
        acc = acc.checked_add((v * FIXED_SCALE) as i128)?;
    }
    Some((acc as f64) / FIXED_SCALE / values.len() as f64)
}

/// Trapezoid rule on a uniform grid.
pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner = pairwise_sum(&values[1..n - 1]);
            dt * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Running trapezoid integral, `out[0] = 0`.
pub fn cumulative_trapezoid(values: &[f64], dt: f64) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for k in 1..values.len() {
        out[k] = out[k - 1] + 0.5 * dt * (values[k - 1] + values[k]);
    }
    out
}

/// State types the fixed-step integrators can advance.
pub trait OdeState: Copy + Add<Output = Self> + Mul<f64, Output = Self> {
    fn is_finite(&self) -> bool;
}

impl OdeState for f64 {
    #[inline]
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

impl<const R: usize, const C: usize> OdeState for SMatrix<f64, R, C> {
    #[inline]
    fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

/// Cubic Hermite interpolation on `[0, h]` at fraction `s`, given end values
/// and end derivatives.
#[inline]
pub fn hermite<S: OdeState>(y0: S, y1: S, d0: S, d1: S, h: f64, s: f64) -> S {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    y0 * h00 + d0 * (h10 * h) + y1 * h01 + d1 * (h11 * h)
}

/// Midpoint of a Hermite segment.
#[inline]
pub fn hermite_mid<S: OdeState>(y0: S, y1: S, d0: S, d1: S, h: f64) -> S {
    (y0 + y1) * 0.5 + (d0 + d1 * -1.0) * (h / 8.0)
}

/// Classic RK4, integrated backward from `terminal` at `t = T`. `rhs(k2, y)`
/// receives the time as a half-step index `k2` (`t = k2 * dt / 2`) so callers
/// can supply exact node values and interpolated midpoints.
pub fn rk4_backward<S, F>(grid: &TimeGrid, terminal: S, mut rhs: F) -> Result<Vec<S>>
where
    S: OdeState,
    F: FnMut(usize, &S) -> S,
{
    let n = grid.n_steps();
    let h = grid.dt();
    let mut out = vec![terminal; n + 1];
    let mut y = terminal;
    for k in (0..n).rev() {
        let hi = 2 * (k + 1);
        let mid = 2 * k + 1;
        let lo = 2 * k;
        let k1 = rhs(hi, &y);
        let k2 = rhs(mid, &(y + k1 * (-0.5 * h)));
        let k3 = rhs(mid, &(y + k2 * (-0.5 * h)));
        let k4 = rhs(lo, &(y + k3 * (-h)));
        y = y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (-h / 6.0);
        if !y.is_finite() {
            return Err(Error::BlowUp {
                t_lo: grid.t(k),
                t_hi: grid.t(k + 1),
            });
        }
        out[k] = y;
    }
    Ok(out)
}

/// Classic RK4 forward from `initial` at `t = 0`, same half-step convention.
pub fn rk4_forward<S, F>(grid: &TimeGrid, initial: S, mut rhs: F) -> Result<Vec<S>>
where
    S: OdeState,
    F: FnMut(usize, &S) -> S,
{
    let n = grid.n_steps();
    let h = grid.dt();
    let mut out = Vec::with_capacity(n + 1);
    out.push(initial);
    let mut y = initial;
    for k in 0..n {
        let k1 = rhs(2 * k, &y);
        let k2 = rhs(2 * k + 1, &(y + k1 * (0.5 * h)));
        let k3 = rhs(2 * k + 1, &(y + k2 * (0.5 * h)));
        let k4 = rhs(2 * k + 2, &(y + k3 * h));
        y = y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if !y.is_finite() {
            return Err(Error::Diverged { step: k + 1 });
        }
        out.push(y);
    }
    Ok(out)
}

/// Value of grid samples `v` at half-step index `k2`: exact at nodes, cubic
/// (four-point) interpolation at midpoints.
#[inline]
pub fn sampled_half<S: OdeState>(v: &[S], k2: usize) -> S {
    let k = k2 / 2;
    if k2.is_multiple_of(2) {
        return v[k];
    }
    let n = v.len();
    if n < 4 {
        return (v[k] + v[k + 1]) * 0.5;
    }
    let w = 1.0 / 16.0;
    if k == 0 {
        (v[0] * 5.0 + v[1] * 15.0 + v[2] * -5.0 + v[3]) * w
    } else if k + 2 >= n {
        (v[n - 1] * 5.0 + v[n - 2] * 15.0 + v[n - 3] * -5.0 + v[n - 4]) * w
    } else {
        (v[k - 1] * -1.0 + v[k] * 9.0 + v[k + 1] * 9.0 + v[k + 2] * -1.0) * w
    }
}

/// Grid-sampled function with stored derivatives, evaluable at half steps.
#[derive(Debug, Clone)]
pub struct HermiteSamples<S> {
    pub values: Vec<S>,
    pub slopes: Vec<S>,
    pub dt: f64,
}

impl<S: OdeState> HermiteSamples<S> {
    /// Value at half-step index `k2`.
    #[inline]
    pub fn at_half(&self, k2: usize) -> S {
        let k = k2 / 2;
        if k2.is_multiple_of(2) {
            self.values[k]
        } else {
            hermite_mid(
                self.values[k],
                self.values[k + 1],
                self.slopes[k],
                self.slopes[k + 1],
                self.dt,
            )
        }
    }
}

/// Solves `A X = B` by Gaussian elimination with partial pivoting. Returns
/// the solution and `det A`, or `None` (with the determinant) when a pivot is
/// exactly zero.
pub fn lu_solve<const N: usize, const K: usize>(
    a: &SMatrix<f64, N, N>,
    b: &SMatrix<f64, N, K>,
) -> (Option<SMatrix<f64, N, K>>, f64) {
    let mut a = *a;
    let mut x = *b;
    let mut det = 1.0;
    for col in 0..N {
        let mut piv = col;
        for r in col + 1..N {
            if a[(r, col)].abs() > a[(piv, col)].abs() {
                piv = r;
            }
        }
        if a[(piv, col)] == 0.0 {
            return (None, 0.0);
        }
        if piv != col {
            a.swap_rows(piv, col);
            x.swap_rows(piv, col);
            det = -det;
        }
        let d = a[(col, col)];
        det *= d;
        for r in col + 1..N {
            let factor = a[(r, col)] / d;
            if factor != 0.0 {
                for c in col..N {
                    a[(r, c)] -= factor * a[(col, c)];
                }
                for c in 0..K {
                    x[(r, c)] -= factor * x[(col, c)];
                }
            }
        }
    }
    for col in (0..N).rev() {
        let d = a[(col, col)];
        for c in 0..K {
            let mut v = x[(col, c)];
            for j in col + 1..N {
                v -= a[(col, j)] * x[(j, c)];
            }
            x[(col, c)] = v / d;
        }
    }
    (Some(x), det)
}

/// Ordinary least-squares line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope from the residual scatter (zero when the
    /// fit has no degrees of freedom left).
    pub slope_se_residual: f64,
    /// Standard error of the slope propagated from per-point errors, if given.
    pub slope_se_propagated: f64,
}

/// OLS fit. `y_err` holds per-point standard errors to propagate (may be empty).
pub fn fit_line(x: &[f64], y: &[f64], y_err: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::TooFewSizes { needed: 2, got: n });
    }
    let xm = mean(x);
    let ym = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - xm) * (v - xm)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let slope_se_residual = if n > 2 {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| {
                let r = b - intercept - slope * a;
                r * r
            })
            .sum();
        libm::sqrt(rss / (n - 2) as f64 / sxx)
    } else {
        0.0
    };
    let slope_se_propagated = if y_err.len() == n {
        let v: f64 = x
            .iter()
            .zip(y_err)
            .map(|(a, e)| {
                let w = (a - xm) / sxx;
                w * w * e * e
            })
            .sum();
        libm::sqrt(v)
    } else {
        0.0
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_se_residual,
        slope_se_propagated,
    })
}

/// Least-squares fit of `y = c1 * x + c2 * x^2` (no intercept).
pub fn fit_linear_quadratic(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (mut s2, mut s3, mut s4, mut sy1, mut sy2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&e, &d) in x.iter().zip(y) {
        let e2 = e * e;
        s2 += e2;
        s3 += e2 * e;
        s4 += e2 * e2;
        sy1 += d * e;
        sy2 += d * e2;
    }
    let det = s2 * s4 - s3 * s3;
    if det == 0.0 {
        return (0.0, 0.0);
    }
    ((sy1 * s4 - sy2 * s3) / det, (s2 * sy2 - s3 * sy1) / det)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_grid;

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 500500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn exact_mean_is_order_independent() {
        let v = [0.1, -1e-9, 3.7, 1e6, -2.5e-3, 0.3];
        let mut w = v;
        w.reverse();
        assert_eq!(exact_mean(&v), exact_mean(&w));
        let naive = v.iter().sum::<f64>() / 6.0;
        assert!((exact_mean(&v).unwrap() - naive).abs() < 1e-15 * naive.abs());
        assert_eq!(exact_mean(&[f64::NAN]), None);
        assert_eq!(exact_mean(&[2e9]), None);
    }

    #[test]
    fn trapezoid_is_exact_on_lines() {
        let g = make_grid(2.0, 10).unwrap();
        let v: Vec<f64> = g.points().iter().map(|t| 3.0 * t - 1.0).collect();
        assert!((trapezoid(&v, g.dt()) - 4.0).abs() < 1e-14);
        let c = cumulative_trapezoid(&v, g.dt());
        assert!((c[10] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn mean_and_se_two_point() {
        assert_eq!(mean_and_se(&[1.0, -1.0]).unwrap(), (0.0, 1.0));
        assert_eq!(mean_and_se(&[3.5]).unwrap(), (3.5, 0.0));
        assert!(mean_and_se(&[]).is_err());
    }

    #[test]
    fn rk4_backward_linear() {
        let g = make_grid(1.0, 100).unwrap();
        let y = rk4_backward(&g, 1.0, |_, y| *y).unwrap();
        for (k, t) in g.points().iter().enumerate() {
            assert!((y[k] - libm::exp(t - 1.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn rk4_backward_reports_blow_up() {
        let g = make_grid(1.0, 100).unwrap();
        // y' = y^2, y(1) = -2 has the solution -1 / (t - 1/2).
        match rk4_backward(&g, -2.0, |_, y| (*y) * (*y)) {
            Err(Error::BlowUp { t_lo, t_hi }) => {
                assert!(t_lo >= 0.4 && t_hi <= 0.6, "{t_lo} {t_hi}")
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sampled_half_reproduces_cubics() {
        let f = |t: f64| 2.0 * t * t * t - t * t + 0.5 * t - 3.0;
        let h = 0.1;
        let v: Vec<f64> = (0..6).map(|k| f(k as f64 * h)).collect();
        for k in 0..5 {
            assert!(
                (sampled_half(&v, 2 * k + 1) - f((k as f64 + 0.5) * h)).abs() < 1e-13,
                "{k}"
            );
            assert_eq!(sampled_half(&v, 2 * k), v[k]);
        }
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let f = |t: f64| t * t * t - 2.0 * t + 0.5;
        let df = |t: f64| 3.0 * t * t - 2.0;
        let (a, h) = (0.3, 0.2);
        let m = hermite_mid(f(a), f(a + h), df(a), df(a + h), h);
        assert!((m - f(a + 0.5 * h)).abs() < 1e-14);
        let q = hermite(f(a), f(a + h), df(a), df(a + h), h, 0.25);
        assert!((q - f(a + 0.25 * h)).abs() < 1e-14);
    }

    #[test]
    fn lu_solve_small_systems() {
        use nalgebra::{Matrix3, Vector3};
        let a = Matrix3::new(0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0);
        let x = Vector3::new(1.0, -2.0, 0.5);
        let (sol, det) = lu_solve(&a, &(a * x));
        assert!((sol.unwrap() - x).amax() < 1e-14);
        assert!((det - a.determinant()).abs() < 1e-13);
        let singular = Matrix3::new(1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 1.0, 1.0);
        assert!(lu_solve(&singular, &Vector3::zeros()).0.is_none());
    }

    #[test]
    fn line_fit_recovers_slope() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let f = fit_line(&x, &y, &[0.1; 4]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14);
        assert!((f.intercept + 1.0).abs() < 1e-14);
        assert!(f.slope_se_residual < 1e-12);
        assert!(f.slope_se_propagated > 0.0);
    }

    #[test]
    fn linear_quadratic_fit_exact() {
        let x = [0.1, 0.25, 0.5, 1.0];
        let y: Vec<f64> = x.iter().map(|e| -0.3 * e - 2.0 * e * e).collect();
        let (c1, c2) = fit_linear_quadratic(&x, &y);
        assert!((c1 + 0.3).abs() < 1e-12 && (c2 + 2.0).abs() < 1e-12);
    }
}
