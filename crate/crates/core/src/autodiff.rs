//! Second-order forward-mode automatic differentiation on a fixed number of
//! variables.
//!
//! [`Dual2`] carries a value together with its dense gradient and Hessian
//! w.r.t. `N` independent variables. The distance kernels evaluate their
//! closed-form (per-region) expressions on `Dual2` inputs, which yields exact
//! first and second derivatives without hand-deriving each Hessian.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Value, gradient, and Hessian w.r.t. `N` scalar inputs.
#[derive(Clone, Copy, Debug)]
pub struct Dual2<const N: usize> {
    pub val: f64,
    pub grad: [f64; N],
    pub hess: [[f64; N]; N],
}

impl<const N: usize> Dual2<N> {
    pub fn constant(c: f64) -> Self {
        Self { val: c, grad: [0.0; N], hess: [[0.0; N]; N] }
    }

    /// Independent variable number `i` with value `x`.
    pub fn var(i: usize, x: f64) -> Self {
        let mut grad = [0.0; N];
        grad[i] = 1.0;
        Self { val: x, grad, hess: [[0.0; N]; N] }
    }

    /// Chain rule for a scalar function given f(a), f'(a), f''(a).
    fn chain(self, f: f64, df: f64, ddf: f64) -> Self {
        let mut out = Self::constant(f);
        for i in 0..N {
            out.grad[i] = df * self.grad[i];
        }
        for i in 0..N {
            for j in 0..N {
                out.hess[i][j] = df * self.hess[i][j] + ddf * self.grad[i] * self.grad[j];
            }
        }
        out
    }

    pub fn sqrt(self) -> Self {
        let s = self.val.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.val))
    }

    pub fn recip(self) -> Self {
        let inv = 1.0 / self.val;
        self.chain(inv, -inv * inv, 2.0 * inv * inv * inv)
    }

    pub fn powi2(self) -> Self {
        self.chain(self.val * self.val, 2.0 * self.val, 2.0)
    }

    pub fn scale(self, c: f64) -> Self {
        self.chain(c * self.val, c, 0.0)
    }
}

impl<const N: usize> Add for Dual2<N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self.val += rhs.val;
        for i in 0..N {
            self.grad[i] += rhs.grad[i];
        }
        for i in 0..N {
            for j in 0..N {
                self.hess[i][j] += rhs.hess[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Sub for Dual2<N> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        self.val -= rhs.val;
        for i in 0..N {
            self.grad[i] -= rhs.grad[i];
        }
        for i in 0..N {
            for j in 0..N {
                self.hess[i][j] -= rhs.hess[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Neg for Dual2<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const N: usize> Mul for Dual2<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::constant(self.val * rhs.val);
        for i in 0..N {
            out.grad[i] = self.grad[i] * rhs.val + self.val * rhs.grad[i];
        }
        for i in 0..N {
            for j in 0..N {
                out.hess[i][j] = self.hess[i][j] * rhs.val
                    + self.val * rhs.hess[i][j]
                    + self.grad[i] * rhs.grad[j]
                    + rhs.grad[i] * self.grad[j];
            }
        }
        out
    }
}

impl<const N: usize> Div for Dual2<N> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

/// Fixed-dimension vector of dual numbers.
pub type DualVec<const N: usize, const D: usize> = [Dual2<N>; D];

pub fn dual_vec_sub<const N: usize, const D: usize>(
    a: &DualVec<N, D>,
    b: &DualVec<N, D>,
) -> DualVec<N, D> {
    std::array::from_fn(|k| a[k] - b[k])
}

pub fn dual_dot<const N: usize, const D: usize>(a: &DualVec<N, D>, b: &DualVec<N, D>) -> Dual2<N> {
    let mut acc = Dual2::constant(0.0);
    for k in 0..D {
        acc = acc + a[k] * b[k];
    }
    acc
}

pub fn dual_scale_vec<const N: usize, const D: usize>(
    v: &DualVec<N, D>,
    s: Dual2<N>,
) -> DualVec<N, D> {
    std::array::from_fn(|k| v[k] * s)
}

pub fn dual_vec_add<const N: usize, const D: usize>(
    a: &DualVec<N, D>,
    b: &DualVec<N, D>,
) -> DualVec<N, D> {
    std::array::from_fn(|k| a[k] + b[k])
}

pub fn dual_norm<const N: usize, const D: usize>(v: &DualVec<N, D>) -> Dual2<N> {
    dual_dot(v, v).sqrt()
}

/// 3D cross product.
pub fn dual_cross3<const N: usize>(a: &DualVec<N, 3>, b: &DualVec<N, 3>) -> DualVec<N, 3> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Loads point `p` (slice of length D) starting at variable offset `off`.
pub fn dual_point<const N: usize, const D: usize>(p: &[f64], off: usize) -> DualVec<N, D> {
    std::array::from_fn(|k| Dual2::var(off + k, p[k]))
}

/// Loads point `p` as constants (e.g. a pinned primitive).
pub fn dual_const_point<const N: usize, const D: usize>(p: &[f64]) -> DualVec<N, D> {
    std::array::from_fn(|k| Dual2::constant(p[k]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn f(x: f64, y: f64) -> f64 {
        (x * x + y * y).sqrt() * x / y
    }

    #[test]
    fn matches_finite_differences() {
        let (x, y) = (1.3, 0.7);
        let xd = Dual2::<2>::var(0, x);
        let yd = Dual2::<2>::var(1, y);
        let r = (xd * xd + yd * yd).sqrt() * xd / yd;

        assert_relative_eq!(r.val, f(x, y), max_relative = 1e-14);

        let h = 1e-5;
        let gx = (f(x + h, y) - f(x - h, y)) / (2.0 * h);
        let gy = (f(x, y + h) - f(x, y - h)) / (2.0 * h);
        assert_relative_eq!(r.grad[0], gx, max_relative = 1e-8);
        assert_relative_eq!(r.grad[1], gy, max_relative = 1e-8);

        let hxx = (f(x + h, y) - 2.0 * f(x, y) + f(x - h, y)) / (h * h);
        let hyy = (f(x, y + h) - 2.0 * f(x, y) + f(x, y - h)) / (h * h);
        let hxy = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h))
            / (4.0 * h * h);
        assert_relative_eq!(r.hess[0][0], hxx, max_relative = 1e-4);
        assert_relative_eq!(r.hess[1][1], hyy, max_relative = 1e-4);
        assert_relative_eq!(r.hess[0][1], hxy, max_relative = 1e-4);
        assert_relative_eq!(r.hess[0][1], r.hess[1][0], max_relative = 1e-14);
    }

    #[test]
    fn ln_and_recip_chain() {
        // d/dx 1/x = -1/x^2, d2/dx2 = 2/x^3
        let x = 0.37;
        let d = Dual2::<1>::var(0, x).recip();
        assert_relative_eq!(d.val, 1.0 / x, max_relative = 1e-15);
        assert_relative_eq!(d.grad[0], -1.0 / (x * x), max_relative = 1e-14);
        assert_relative_eq!(d.hess[0][0], 2.0 / (x * x * x), max_relative = 1e-14);
    }
}
