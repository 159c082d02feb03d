//! Closed-form derivative ladders for the elementwise primitives.

use std::sync::OnceLock;

use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryFn {
    Sin,
    Cos,
    Tanh,
    Exp,
}

impl UnaryFn {
    pub fn name(self) -> &'static str {
        match self {
            UnaryFn::Sin => "sin",
            UnaryFn::Cos => "cos",
            UnaryFn::Tanh => "tanh",
            UnaryFn::Exp => "exp",
        }
    }

    pub fn from_name(name: &str) -> Option<UnaryFn> {
        match name {
            "sin" => Some(UnaryFn::Sin),
            "cos" => Some(UnaryFn::Cos),
            "tanh" => Some(UnaryFn::Tanh),
            "exp" => Some(UnaryFn::Exp),
            _ => None,
        }
    }

    pub fn apply_scalar(self, x: f64) -> f64 {
        match self {
            UnaryFn::Sin => x.sin(),
            UnaryFn::Cos => x.cos(),
            UnaryFn::Tanh => x.tanh(),
            UnaryFn::Exp => x.exp(),
        }
    }

    /// j-th derivative at `x`, elementwise closed form.
    pub fn derivative_scalar(self, j: usize, x: f64) -> f64 {
        match self {
            // sin cycles through sin, cos, -sin, -cos
            UnaryFn::Sin => match j % 4 {
                0 => x.sin(),
                1 => x.cos(),
                2 => -x.sin(),
                _ => -x.cos(),
            },
            UnaryFn::Cos => match j % 4 {
                0 => x.cos(),
                1 => -x.sin(),
                2 => -x.cos(),
                _ => x.sin(),
            },
            UnaryFn::Exp => x.exp(),
            // d^j tanh = P_j(tanh x) with P_{j+1} = P_j' * (1 - t^2)
            UnaryFn::Tanh => eval_poly(tanh_poly(j), x.tanh()),
        }
    }

    /// Derivatives d^0 f(x0) .. d^upto f(x0), elementwise over `x0`.
    pub fn derivative_ladder(self, x0: &Tensor, upto: usize) -> Vec<Tensor> {
        (0..=upto)
            .map(|j| x0.map_unary(|x| self.derivative_scalar(j, x)))
            .collect()
    }
}

fn eval_poly(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

/// Coefficients of P_j over powers of t, where d^j tanh(x) = P_j(tanh x).
fn tanh_poly(j: usize) -> &'static [f64] {
    static POLYS: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    let polys = POLYS.get_or_init(|| {
        let mut polys: Vec<Vec<f64>> = vec![vec![0.0, 1.0]]; // P_0(t) = t
        for _ in 0..crate::taylor::MAX_DEGREE {
            let prev = polys.last().unwrap();
            // derivative of prev, then multiply by (1 - t^2)
            let mut deriv = vec![0.0; prev.len().max(1) - 1];
            for (p, &c) in prev.iter().enumerate().skip(1) {
                deriv[p - 1] = c * p as f64;
            }
            let mut next = vec![0.0; deriv.len() + 2];
            for (p, &c) in deriv.iter().enumerate() {
                next[p] += c;
                next[p + 2] -= c;
            }
            polys.push(next);
        }
        polys
    });
    &polys[j]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sin_cycle_at_zero() {
        assert_relative_eq!(UnaryFn::Sin.derivative_scalar(0, 0.0), 0.0);
        assert_relative_eq!(UnaryFn::Sin.derivative_scalar(1, 0.0), 1.0);
        assert_relative_eq!(UnaryFn::Sin.derivative_scalar(2, 0.0), 0.0);
        assert_relative_eq!(UnaryFn::Sin.derivative_scalar(3, 0.0), -1.0);
        assert_relative_eq!(UnaryFn::Sin.derivative_scalar(4, 0.0), 0.0);
    }

    #[test]
    fn tanh_low_order_closed_forms() {
        // tanh' = 1 - t^2, tanh'' = -2t(1 - t^2), tanh'''(0) = -2
        let x = 0.7_f64;
        let t = x.tanh();
        assert_relative_eq!(
            UnaryFn::Tanh.derivative_scalar(1, x),
            1.0 - t * t,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            UnaryFn::Tanh.derivative_scalar(2, x),
            -2.0 * t * (1.0 - t * t),
            max_relative = 1e-14
        );
        assert_relative_eq!(UnaryFn::Tanh.derivative_scalar(3, 0.0), -2.0);
    }

    #[test]
    fn ladders_match_finite_differences() {
        // independent check: 4th-order central stencil, two step sizes with
        // Richardson extrapolation
        fn fd4(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
            (f(x + 2.0 * h) - 4.0 * f(x + h) + 6.0 * f(x) - 4.0 * f(x - h) + f(x - 2.0 * h))
                / h.powi(4)
        }
        for (unary, f) in [
            (UnaryFn::Sin, f64::sin as fn(f64) -> f64),
            (UnaryFn::Cos, f64::cos),
            (UnaryFn::Tanh, f64::tanh),
            (UnaryFn::Exp, f64::exp),
        ] {
            let x = 0.3_f64;
            let h = 1e-2;
            let coarse = fd4(f, x, h);
            let fine = fd4(f, x, h / 2.0);
            let richardson = (4.0 * fine - coarse) / 3.0;
            let exact = unary.derivative_scalar(4, x);
            assert!(
                (richardson - exact).abs() <= 1e-6 * exact.abs().max(1.0),
                "{unary:?}: fd {richardson} vs ladder {exact}"
            );
        }
    }

    #[test]
    fn tanh_fourth_derivative_frozen_value() {
        // frozen from the finite-difference oracle above at x0 = 0.3
        assert_relative_eq!(
            UnaryFn::Tanh.derivative_scalar(4, 0.3),
            3.7224858166,
            max_relative = 1e-6
        );
    }
}
