//! Second-order jets (value, gradient, Hessian) of closed-form fields.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::Matrix2;

use crate::mesh::{Point, Vec2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarJet {
    pub value: f64,
    pub grad: Vec2,
    pub hess: Matrix2<f64>,
}

/// Jet of a vector field; `grad[(i, j)] = d v_i / d x_j` and `hess[i]` is
/// the Hessian of component `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorJet {
    pub value: Vec2,
    pub grad: Matrix2<f64>,
    pub hess: [Matrix2<f64>; 2],
}

impl ScalarJet {
    pub fn constant(c: f64) -> Self {
        ScalarJet {
            value: c,
            grad: Vec2::zeros(),
            hess: Matrix2::zeros(),
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn x(p: &Point) -> Self {
        ScalarJet {
            value: p.x,
            grad: Vec2::new(1.0, 0.0),
            hess: Matrix2::zeros(),
        }
    }

    pub fn y(p: &Point) -> Self {
        ScalarJet {
            value: p.y,
            grad: Vec2::new(0.0, 1.0),
            hess: Matrix2::zeros(),
        }
    }

    /// `f(self)` given `f`, `f'` and `f''` at the current value.
    fn compose(self, f: f64, df: f64, d2f: f64) -> Self {
        ScalarJet {
            value: f,
            grad: self.grad * df,
            hess: self.grad * self.grad.transpose() * d2f + self.hess * df,
        }
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.compose(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.compose(c, -s, -c)
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        self.compose(e, e, e)
    }

    pub fn powi(self, n: i32) -> Self {
        let v = self.value;
        let nf = n as f64;
        let d2 = if n >= 2 {
            nf * (nf - 1.0) * v.powi(n - 2)
        } else {
            0.0
        };
        let d1 = if n >= 1 { nf * v.powi(n - 1) } else { 0.0 };
        self.compose(v.powi(n), d1, d2)
    }

    pub fn laplacian(&self) -> f64 {
        self.hess.trace()
    }
}

impl Add for ScalarJet {
    type Output = ScalarJet;
    fn add(self, o: ScalarJet) -> ScalarJet {
        ScalarJet {
            value: self.value + o.value,
            grad: self.grad + o.grad,
            hess: self.hess + o.hess,
        }
    }
}

impl Sub for ScalarJet {
    type Output = ScalarJet;
    fn sub(self, o: ScalarJet) -> ScalarJet {
        self + (-o)
    }
}

impl Neg for ScalarJet {
    type Output = ScalarJet;
    fn neg(self) -> ScalarJet {
        self * -1.0
    }
}

impl Add<f64> for ScalarJet {
    type Output = ScalarJet;
    fn add(self, c: f64) -> ScalarJet {
        ScalarJet {
            value: self.value + c,
            ..self
        }
    }
}

impl Mul<f64> for ScalarJet {
    type Output = ScalarJet;
    fn mul(self, s: f64) -> ScalarJet {
        ScalarJet {
            value: self.value * s,
            grad: self.grad * s,
            hess: self.hess * s,
        }
    }
}

impl Mul for ScalarJet {
    type Output = ScalarJet;
    fn mul(self, o: ScalarJet) -> ScalarJet {
        let cross = self.grad * o.grad.transpose();
        ScalarJet {
            value: self.value * o.value,
            grad: self.grad * o.value + o.grad * self.value,
            hess: self.hess * o.value + o.hess * self.value + cross + cross.transpose(),
        }
    }
}

impl VectorJet {
    pub fn new(a: ScalarJet, b: ScalarJet) -> Self {
        VectorJet {
            value: Vec2::new(a.value, b.value),
            grad: Matrix2::from_rows(&[a.grad.transpose(), b.grad.transpose()]),
            hess: [a.hess, b.hess],
        }
    }

    pub fn zero() -> Self {
        Self::new(ScalarJet::zero(), ScalarJet::zero())
    }

    pub fn component(&self, i: usize) -> ScalarJet {
        ScalarJet {
            value: self.value[i],
            grad: self.grad.row(i).transpose(),
            hess: self.hess[i],
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        VectorJet {
            value: self.value * s,
            grad: self.grad * s,
            hess: [self.hess[0] * s, self.hess[1] * s],
        }
    }

    pub fn div(&self) -> f64 {
        self.grad.trace()
    }

    /// Gradient of the divergence.
    pub fn grad_div(&self) -> Vec2 {
        Vec2::new(
            self.hess[0][(0, 0)] + self.hess[1][(1, 0)],
            self.hess[0][(0, 1)] + self.hess[1][(1, 1)],
        )
    }

    /// Componentwise Laplacian.
    pub fn laplacian(&self) -> Vec2 {
        Vec2::new(self.hess[0].trace(), self.hess[1].trace())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(f: impl Fn(&Point) -> ScalarJet, p: Point) {
        let h = 1e-5;
        let j = f(&p);
        for d in 0..2 {
            let mut e = Vec2::zeros();
            e[d] = h;
            let (fp, fm) = (f(&(p + e)), f(&(p - e)));
            assert!(((fp.value - fm.value) / (2.0 * h) - j.grad[d]).abs() < 1e-8);
            let dg = (fp.grad - fm.grad) / (2.0 * h);
            for r in 0..2 {
                assert!((dg[r] - j.hess[(r, d)]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn composite_jets_match_finite_differences() {
        let p = Point::new(0.3, 0.7);
        fd_check(
            |p| (ScalarJet::x(p) * 2.0 + ScalarJet::y(p)).sin() * ScalarJet::y(p).exp(),
            p,
        );
        fd_check(
            |p| ScalarJet::x(p).powi(3) * ScalarJet::y(p).cos() - ScalarJet::y(p).powi(2),
            p,
        );
        fd_check(|p| (ScalarJet::x(p) * ScalarJet::y(p) + 1.0).powi(2), p);
    }

    #[test]
    fn vector_operators() {
        let p = Point::new(0.4, 0.2);
        // v = (x^2 y, x y^2): div = 4xy, grad div = (4y, 4x), lap = (2y, 2x)
        let x = ScalarJet::x(&p);
        let y = ScalarJet::y(&p);
        let v = VectorJet::new(x.powi(2) * y, x * y.powi(2));
        assert!((v.div() - 4.0 * 0.4 * 0.2).abs() < 1e-15);
        assert!((v.grad_div() - Vec2::new(0.8, 1.6)).norm() < 1e-14);
        assert!((v.laplacian() - Vec2::new(0.4, 0.8)).norm() < 1e-14);
        assert_eq!(v.component(1).value, v.value.y);
    }
}
