//! Coefficient matrices of the broker-level and buyer-level conditional
//! systems
//!
//! ```text
//! dX = (A1 X + B1 Y) dt + D dW0,        X = (Q̄, V̄),
//! dY = (A2 X + B2 Y + C) dt + ... dW0,  Y = (Ȳ, Ū),
//! ```
//!
//! and the four-dimensional analogue with `X = (Q̄, V̄, K̄, L̄)`,
//! `Y = (Ȳ, Ū, R̄, Ḡ)`. In the broker system `C_t = c_price * p_bu(t)`.

use nalgebra::{Matrix2, Matrix4, SMatrix, Vector2, Vector4};

use crate::params::MarketParams;

pub type Matrix8 = SMatrix<f64, 8, 8>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientMatrices {
    pub a1: Matrix2<f64>,
    pub b1: Matrix2<f64>,
    pub a2: Matrix2<f64>,
    pub b2: Matrix2<f64>,
    /// Broker source per unit buyer price: `C_t = c_price * p_bu(t)`.
    pub c_price: Vector2<f64>,
    pub d: Vector2<f64>,
    pub bb_a1: Matrix4<f64>,
    pub bb_b1: Matrix4<f64>,
    pub bb_a2: Matrix4<f64>,
    pub bb_b2: Matrix4<f64>,
    pub bb_c: Vector4<f64>,
    pub bb_d: Vector4<f64>,
}

pub fn assemble_coefficients(p: &MarketParams) -> CoefficientMatrices {
    let k = p.effort_gain();
    let (a2, nu2) = (p.a * p.a, p.nu * p.nu);
    let (al, b) = (p.alpha, p.b);
    CoefficientMatrices {
        a1: Matrix2::new(0.0, 0.0, 0.0, -al),
        b1: Matrix2::new(k, 0.0, 0.0, -k),
        a2: Matrix2::new(b + a2, a2, 2.0 * p.kappa - a2, -b - a2),
        b2: Matrix2::new(al, 0.0, 0.0, 0.0),
        c_price: Vector2::new(0.0, -p.nu),
        d: Vector2::new(p.sigma0, 0.0),
        bb_a1: Matrix4::from_diagonal(&Vector4::new(0.0, -al, -al, 0.0)),
        bb_b1: Matrix4::from_diagonal(&Vector4::new(k, -k, -k, k)),
        #[rustfmt::skip]
        bb_a2: Matrix4::new(
            b + a2,                        a2,      0.0,     0.0,
            2.0 * p.kappa + nu2 - a2,      -b - a2, 0.0,     nu2,
            2.0 * p.rho - nu2,             0.0,     -b - a2, a2 - nu2 - 2.0 * p.kappa,
            0.0,                           0.0,     -a2,     b + a2,
        ),
        bb_b2: Matrix4::from_diagonal(&Vector4::new(al, 0.0, 0.0, al)),
        bb_c: Vector4::new(0.0, 0.0, -p.lambda, 0.0),
        bb_d: Vector4::new(p.sigma0, 0.0, 0.0, 0.0),
    }
}

impl CoefficientMatrices {
    /// `[[A1, -B1], [-A2, B2]]`.
    pub fn broker_hamiltonian(&self) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(&self.a1);
        m.fixed_view_mut::<2, 2>(0, 2).copy_from(&(-self.b1));
        m.fixed_view_mut::<2, 2>(2, 0).copy_from(&(-self.a2));
        m.fixed_view_mut::<2, 2>(2, 2).copy_from(&self.b2);
        m
    }

    pub fn buyer_hamiltonian(&self) -> Matrix8 {
        let mut m = Matrix8::zeros();
        m.fixed_view_mut::<4, 4>(0, 0).copy_from(&self.bb_a1);
        m.fixed_view_mut::<4, 4>(0, 4).copy_from(&(-self.bb_b1));
        m.fixed_view_mut::<4, 4>(4, 0).copy_from(&(-self.bb_a2));
        m.fixed_view_mut::<4, 4>(4, 4).copy_from(&self.bb_b2);
        m
    }
}
