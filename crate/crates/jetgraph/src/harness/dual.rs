//! Nested first-order dual numbers, the independent oracle for every
//! jet-based derivative in this crate. A `Dual<Dual<...>>` of depth k
//! carries one mixed partial per epsilon combination; nesting k levels
//! and reading the all-epsilon component gives a k-th mixed partial
//! through nothing but the product and chain rules of first order.

/// Scalar-like values a function graph can be evaluated over.
pub trait Scalar: Copy {
    fn from_f64(x: f64) -> Self;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn mul_f64(self, c: f64) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tanh(self) -> Self;
    fn exp(self) -> Self;
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn mul_f64(self, c: f64) -> Self {
        self * c
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Scalar> Dual<T> {
    pub fn constant(x: T) -> Self {
        Dual {
            re: x,
            eps: T::from_f64(0.0),
        }
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn from_f64(x: f64) -> Self {
        Dual {
            re: T::from_f64(x),
            eps: T::from_f64(0.0),
        }
    }
    fn add(self, o: Self) -> Self {
        Dual {
            re: self.re.add(o.re),
            eps: self.eps.add(o.eps),
        }
    }
    fn sub(self, o: Self) -> Self {
        Dual {
            re: self.re.sub(o.re),
            eps: self.eps.sub(o.eps),
        }
    }
    fn mul(self, o: Self) -> Self {
        Dual {
            re: self.re.mul(o.re),
            eps: self.re.mul(o.eps).add(self.eps.mul(o.re)),
        }
    }
    fn mul_f64(self, c: f64) -> Self {
        Dual {
            re: self.re.mul_f64(c),
            eps: self.eps.mul_f64(c),
        }
    }
    fn sin(self) -> Self {
        Dual {
            re: self.re.sin(),
            eps: self.eps.mul(self.re.cos()),
        }
    }
    fn cos(self) -> Self {
        Dual {
            re: self.re.cos(),
            eps: self.eps.mul(self.re.sin()).mul_f64(-1.0),
        }
    }
    fn tanh(self) -> Self {
        let t = self.re.tanh();
        // sech^2 = 1 - tanh^2
        let one = T::from_f64(1.0);
        Dual {
            re: t,
            eps: self.eps.mul(one.sub(t.mul(t))),
        }
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual {
            re: e,
            eps: self.eps.mul(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn second_derivative_of_sin_by_nesting() {
        // d2/dx2 sin at x: seed both epsilon levels with 1
        let x = 0.8_f64;
        let v: Dual<Dual<f64>> = Dual {
            re: Dual { re: x, eps: 1.0 },
            eps: Dual { re: 1.0, eps: 0.0 },
        };
        let out = v.sin();
        assert_relative_eq!(out.eps.eps, -x.sin(), max_relative = 1e-14);
    }

    #[test]
    fn product_rule_mixed_partial() {
        // f(x, y) = x*y: d2f/dxdy = 1
        let x: Dual<Dual<f64>> = Dual {
            re: Dual { re: 2.0, eps: 0.0 },
            eps: Dual { re: 1.0, eps: 0.0 },
        };
        let y: Dual<Dual<f64>> = Dual {
            re: Dual { re: 3.0, eps: 1.0 },
            eps: Dual { re: 0.0, eps: 0.0 },
        };
        let out = x.mul(y);
        assert_relative_eq!(out.eps.eps, 1.0);
        assert_relative_eq!(out.re.re, 6.0);
    }
}
