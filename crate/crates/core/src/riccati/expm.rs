//! Matrix exponential by scaling and squaring with a degree-13 Padé core.

use nalgebra::SMatrix;

use crate::error::{Error, Result};
use crate::numerics::lu_solve;

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Largest 1-norm for which the unscaled degree-13 approximant is accurate to
/// double precision.
const THETA13: f64 = 5.371920351148152;

fn norm1<const N: usize>(a: &SMatrix<f64, N, N>) -> f64 {
    (0..N)
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `e^{M s}`.
pub fn matrix_exponential<const N: usize>(m: &SMatrix<f64, N, N>, s: f64) -> Result<SMatrix<f64, N, N>> {
    if !s.is_finite() || m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let a = m * s;
    let eye = SMatrix::<f64, N, N>::identity();
    let norm = norm1(&a);
    if norm == 0.0 {
        return Ok(eye);
    }
    let squarings = if norm > THETA13 {
        libm::ceil(libm::log2(norm / THETA13)) as i32
    } else {
        0
    };
    let a = a * libm::exp2(-f64::from(squarings));

    let b = &PADE13;
    let a2 = a * a;
    let a4 = a2 * a2;
    let a6 = a4 * a2;
    let u_inner = a6 * (a6 * b[13] + a4 * b[11] + a2 * b[9]) + a6 * b[7] + a4 * b[5] + a2 * b[3] + eye * b[1];
    let u = a * u_inner;
    let v = a6 * (a6 * b[12] + a4 * b[10] + a2 * b[8]) + a6 * b[6] + a4 * b[4] + a2 * b[2] + eye * b[0];

    let mut r = lu_solve(&(v - u), &(v + u)).0.ok_or(Error::NonFinite)?;
    for _ in 0..squarings {
        r = r * r;
    }
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix2, Matrix4};
    use proptest::prelude::*;

    fn max_abs<const N: usize>(a: &SMatrix<f64, N, N>) -> f64 {
        a.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
    }

    #[test]
    fn zero_and_s_zero_give_identity() {
        let z = Matrix4::<f64>::zeros();
        assert_eq!(matrix_exponential(&z, 1.0).unwrap(), Matrix4::identity());
        let m = Matrix4::from_fn(|i, j| (i as f64) - 0.5 * (j as f64));
        assert_eq!(matrix_exponential(&m, 0.0).unwrap(), Matrix4::identity());
    }

    #[test]
    fn diagonal_and_rotation() {
        let d = Matrix2::new(1.0, 0.0, 0.0, -2.0);
        let e = matrix_exponential(&d, 1.5).unwrap();
        assert!((e[(0, 0)] - libm::exp(1.5)).abs() < 1e-13 * libm::exp(1.5));
        assert!((e[(1, 1)] - libm::exp(-3.0)).abs() < 1e-15);
        let w = Matrix2::new(0.0, -1.0, 1.0, 0.0);
        let e = matrix_exponential(&w, 10.0).unwrap();
        assert!((e[(0, 0)] - libm::cos(10.0)).abs() < 1e-12);
        assert!((e[(1, 0)] - libm::sin(10.0)).abs() < 1e-12);
    }

    #[test]
    fn nilpotent_is_exact() {
        let n = Matrix2::new(0.0, 3.0, 0.0, 0.0);
        let e = matrix_exponential(&n, 2.0).unwrap();
        assert_eq!(e, Matrix2::new(1.0, 6.0, 0.0, 1.0));
    }

    #[test]
    fn rejects_non_finite() {
        let m = Matrix2::new(f64::NAN, 0.0, 0.0, 0.0);
        assert_eq!(matrix_exponential(&m, 1.0), Err(Error::NonFinite));
    }

    fn mat4() -> impl Strategy<Value = Matrix4<f64>> {
        proptest::collection::vec(-1.0f64..1.0, 16).prop_map(Matrix4::from_iterator)
    }

    fn mat8() -> impl Strategy<Value = SMatrix<f64, 8, 8>> {
        proptest::collection::vec(-1.0f64..1.0, 64).prop_map(SMatrix::<f64, 8, 8>::from_iterator)
    }

    proptest! {
        #[test]
        fn semigroup_4(m in mat4()) {
            let whole = matrix_exponential(&m, 1.0).unwrap();
            let split = matrix_exponential(&m, 0.3).unwrap() * matrix_exponential(&m, 0.7).unwrap();
            prop_assert!(max_abs(&(whole - split)) <= 1e-9 * max_abs(&whole).max(1.0));
        }

        #[test]
        fn inverse_4(m in mat4(), s in -3.0f64..3.0) {
            let p = matrix_exponential(&m, s).unwrap() * matrix_exponential(&m, -s).unwrap();
            prop_assert!(max_abs(&(p - Matrix4::identity())) <= 1e-9);
        }

        #[test]
        fn semigroup_8(m in mat8()) {
            let whole = matrix_exponential(&m, 1.0).unwrap();
            let split = matrix_exponential(&m, 0.3).unwrap() * matrix_exponential(&m, 0.7).unwrap();
            prop_assert!(max_abs(&(whole - split)) <= 1e-9 * max_abs(&whole).max(1.0));
        }

        #[test]
        fn inverse_8(m in mat8(), s in -1.0f64..1.0) {
            let p = matrix_exponential(&m, s).unwrap() * matrix_exponential(&m, -s).unwrap();
            prop_assert!(max_abs(&(p - SMatrix::<f64, 8, 8>::identity())) <= 1e-9);
        }
    }
}
