//! Forward-mode jets.
//!
//! A [`Jet<N>`] carries a value together with its gradient and Hessian with
//! respect to `N` independent parameters. Arithmetic and the elementary
//! functions propagate both orders by the chain rule, so every first and
//! second partial derivative of a composite expression is exact up to
//! rounding. Chart computations use [`Jet2`]; the ambient Hessians needed on
//! the sphere use `Jet<3>`. [`Jet3`] adds the third derivatives, which the
//! normal derivative of the mean curvature vector needs.
//!
//! Both implement [`Scalar`], which is what expressions evaluate on.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::minkowski::Vec4;

/// A number with derivatives attached. The elementary functions are
/// written once here in terms of [`Scalar::lift`].
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
{
    fn constant(value: f64) -> Self;

    /// The coordinate function `i` evaluated at `value`.
    fn variable(i: usize, value: f64) -> Self;

    fn value(&self) -> f64;

    fn is_finite(&self) -> bool;

    /// Lifts a scalar function given its value and first three derivatives
    /// at `self.value()`. Orders the jet does not carry are ignored.
    fn lift(&self, f: [f64; 4]) -> Self;

    fn scale(&self, s: f64) -> Self {
        self.lift([s * self.value(), s, 0.0, 0.0])
    }

    fn recip(&self) -> Result<Self> {
        let v = self.value();
        if v == 0.0 || !v.is_finite() {
            return Err(Error::Domain { func: "div", arg: v });
        }
        let r = 1.0 / v;
        let r2 = r * r;
        Ok(self.lift([r, -r2, 2.0 * r2 * r, -6.0 * r2 * r2]))
    }

    fn checked_div(&self, other: &Self) -> Result<Self> {
        Ok(*self * other.recip()?)
    }

    fn exp(&self) -> Self {
        let e = self.value().exp();
        self.lift([e; 4])
    }

    fn ln(&self) -> Result<Self> {
        let v = self.value();
        if v <= 0.0 || !v.is_finite() {
            return Err(Error::Domain { func: "log", arg: v });
        }
        let r = 1.0 / v;
        Ok(self.lift([v.ln(), r, -r * r, 2.0 * r * r * r]))
    }

    fn sqrt(&self) -> Result<Self> {
        let v = self.value();
        if v <= 0.0 || !v.is_finite() {
            return Err(Error::Domain { func: "sqrt", arg: v });
        }
        let r = v.sqrt();
        Ok(self.lift([r, 0.5 / r, -0.25 / (r * v), 0.375 / (r * v * v)]))
    }

    fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.lift([s, c, -s, -c])
    }

    fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.lift([c, -s, -c, s])
    }

    fn sinh(&self) -> Self {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.lift([s, c, s, c])
    }

    fn cosh(&self) -> Self {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.lift([c, s, c, s])
    }

    fn tanh(&self) -> Self {
        let t = self.value().tanh();
        let d = 1.0 - t * t;
        self.lift([t, d, -2.0 * t * d, d * (4.0 * t * t - 2.0 * d)])
    }

    fn sech(&self) -> Self {
        // cosh never vanishes
        self.cosh().recip().expect("cosh is positive")
    }

    fn csch(&self) -> Result<Self> {
        self.sinh().recip().map_err(|_| Error::Domain { func: "csch", arg: self.value() })
    }

    fn sec(&self) -> Result<Self> {
        self.cos().recip().map_err(|_| Error::Domain { func: "sec", arg: self.value() })
    }

    fn csc(&self) -> Result<Self> {
        self.sin().recip().map_err(|_| Error::Domain { func: "csc", arg: self.value() })
    }

    /// `self^c` for a constant exponent.
    ///
    /// Negative bases need an integer exponent, a zero base a non-negative
    /// integer one.
    fn powf(&self, c: f64) -> Result<Self> {
        let v = self.value();
        let integral = c.fract() == 0.0;
        if (v < 0.0 && !integral) || (v == 0.0 && !(integral && c >= 0.0)) || !v.is_finite() {
            return Err(Error::Domain { func: "pow", arg: v });
        }
        if c == 0.0 {
            return Ok(Self::constant(1.0));
        }
        // small integer powers are kept exact at v = 0
        let f = match c {
            1.0 => [v, 1.0, 0.0, 0.0],
            2.0 => [v * v, 2.0 * v, 2.0, 0.0],
            3.0 => [v * v * v, 3.0 * v * v, 6.0 * v, 6.0],
            _ => [
                v.powf(c),
                c * v.powf(c - 1.0),
                c * (c - 1.0) * v.powf(c - 2.0),
                c * (c - 1.0) * (c - 2.0) * v.powf(c - 3.0),
            ],
        };
        Ok(self.lift(f))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<const N: usize> {
    pub value: f64,
    pub grad: [f64; N],
    /// Symmetric; `hess[i][j] == hess[j][i]` is maintained by every operation.
    pub hess: [[f64; N]; N],
}

/// Jet over the two chart parameters `(s, t)`.
pub type Jet2 = Jet<2>;

impl<const N: usize> Jet<N> {
    pub fn constant(value: f64) -> Self {
        Jet {
            value,
            grad: [0.0; N],
            hess: [[0.0; N]; N],
        }
    }

    pub fn variable(i: usize, value: f64) -> Self {
        let mut j = Self::constant(value);
        j.grad[i] = 1.0;
        j
    }
}

impl<const N: usize> Scalar for Jet<N> {
    fn constant(value: f64) -> Self {
        Jet::constant(value)
    }

    fn variable(i: usize, value: f64) -> Self {
        Jet::variable(i, value)
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|g| g.is_finite())
            && self.hess.iter().flatten().all(|h| h.is_finite())
    }

    fn lift(&self, [f0, f1, f2, _]: [f64; 4]) -> Self {
        let mut out = Self::constant(f0);
        for i in 0..N {
            out.grad[i] = f1 * self.grad[i];
            for j in 0..N {
                out.hess[i][j] = f1 * self.hess[i][j] + f2 * self.grad[i] * self.grad[j];
            }
        }
        out
    }
}

impl<const N: usize> Add for Jet<N> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut out = self;
        out.value += o.value;
        for i in 0..N {
            out.grad[i] += o.grad[i];
            for j in 0..N {
                out.hess[i][j] += o.hess[i][j];
            }
        }
        out
    }
}

impl<const N: usize> Neg for Jet<N> {
    type Output = Self;
    fn neg(self) -> Self {
        let mut out = self;
        out.value = -out.value;
        out.grad = out.grad.map(|g| -g);
        out.hess = out.hess.map(|row| row.map(|h| -h));
        out
    }
}

impl<const N: usize> Mul for Jet<N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (a, b) = (self.value, o.value);
        let mut out = Self::constant(a * b);
        for i in 0..N {
            out.grad[i] = a * o.grad[i] + b * self.grad[i];
            for j in 0..N {
                out.hess[i][j] = a * o.hess[i][j]
                    + b * self.hess[i][j]
                    + self.grad[i] * o.grad[j]
                    + o.grad[i] * self.grad[j];
            }
        }
        out
    }
}

/// Third-order jet over `N` parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet3<const N: usize> {
    pub value: f64,
    pub grad: [f64; N],
    pub hess: [[f64; N]; N],
    /// Fully symmetric third derivatives.
    pub third: [[[f64; N]; N]; N],
}

impl<const N: usize> Jet3<N> {
    pub fn constant(value: f64) -> Self {
        Jet3 {
            value,
            grad: [0.0; N],
            hess: [[0.0; N]; N],
            third: [[[0.0; N]; N]; N],
        }
    }

    pub fn variable(i: usize, value: f64) -> Self {
        let mut j = Self::constant(value);
        j.grad[i] = 1.0;
        j
    }

    /// Drops the third order.
    pub fn truncate(&self) -> Jet<N> {
        Jet { value: self.value, grad: self.grad, hess: self.hess }
    }
}

impl<const N: usize> Scalar for Jet3<N> {
    fn constant(value: f64) -> Self {
        Jet3::constant(value)
    }

    fn variable(i: usize, value: f64) -> Self {
        Jet3::variable(i, value)
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn is_finite(&self) -> bool {
        self.truncate().is_finite() && self.third.iter().flatten().flatten().all(|x| x.is_finite())
    }

    fn lift(&self, [f0, f1, f2, f3]: [f64; 4]) -> Self {
        let (g, h, t) = (&self.grad, &self.hess, &self.third);
        let mut out = Self::constant(f0);
        for i in 0..N {
            out.grad[i] = f1 * g[i];
            for j in 0..N {
                out.hess[i][j] = f1 * h[i][j] + f2 * g[i] * g[j];
                for k in 0..N {
                    out.third[i][j][k] = f1 * t[i][j][k]
                        + f2 * (h[i][j] * g[k] + h[i][k] * g[j] + h[j][k] * g[i])
                        + f3 * g[i] * g[j] * g[k];
                }
            }
        }
        out
    }
}

impl<const N: usize> Add for Jet3<N> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut out = self;
        out.value += o.value;
        for i in 0..N {
            out.grad[i] += o.grad[i];
            for j in 0..N {
                out.hess[i][j] += o.hess[i][j];
                for k in 0..N {
                    out.third[i][j][k] += o.third[i][j][k];
                }
            }
        }
        out
    }
}

impl<const N: usize> Neg for Jet3<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const N: usize> Mul for Jet3<N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (a, b) = (&self, &o);
        let mut out = Self::constant(a.value * b.value);
        for i in 0..N {
            out.grad[i] = a.value * b.grad[i] + b.value * a.grad[i];
            for j in 0..N {
                out.hess[i][j] = a.value * b.hess[i][j]
                    + b.value * a.hess[i][j]
                    + a.grad[i] * b.grad[j]
                    + b.grad[i] * a.grad[j];
                for k in 0..N {
                    out.third[i][j][k] = a.value * b.third[i][j][k]
                        + b.value * a.third[i][j][k]
                        + a.grad[i] * b.hess[j][k]
                        + a.grad[j] * b.hess[i][k]
                        + a.grad[k] * b.hess[i][j]
                        + b.grad[i] * a.hess[j][k]
                        + b.grad[j] * a.hess[i][k]
                        + b.grad[k] * a.hess[i][j];
                }
            }
        }
        out
    }
}

macro_rules! derived_ops {
    ($t:ident) => {
        impl<const N: usize> Sub for $t<N> {
            type Output = Self;
            fn sub(self, o: Self) -> Self {
                self + (-o)
            }
        }

        /// Unchecked division; produces non-finite parts for a zero divisor.
        /// Use [`Scalar::checked_div`] where the divisor may vanish.
        impl<const N: usize> Div for $t<N> {
            type Output = Self;
            fn div(self, o: Self) -> Self {
                let r = 1.0 / o.value;
                let r2 = r * r;
                self * o.lift([r, -r2, 2.0 * r2 * r, -6.0 * r2 * r2])
            }
        }

        impl<const N: usize> Add<f64> for $t<N> {
            type Output = Self;
            fn add(self, c: f64) -> Self {
                let mut out = self;
                out.value += c;
                out
            }
        }

        impl<const N: usize> Sub<f64> for $t<N> {
            type Output = Self;
            fn sub(self, c: f64) -> Self {
                self + (-c)
            }
        }

        impl<const N: usize> Mul<f64> for $t<N> {
            type Output = Self;
            fn mul(self, c: f64) -> Self {
                self.scale(c)
            }
        }

        impl<const N: usize> Mul<$t<N>> for f64 {
            type Output = $t<N>;
            fn mul(self, j: $t<N>) -> $t<N> {
                j.scale(self)
            }
        }
    };
}

derived_ops!(Jet);
derived_ops!(Jet3);

/// The four coordinate jets of an immersion into `L^4` at one chart point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImmersionJet {
    pub coords: [Jet2; 4],
}

impl ImmersionJet {
    pub fn new(coords: [Jet2; 4]) -> Self {
        ImmersionJet { coords }
    }

    pub fn position(&self) -> Vec4 {
        Vec4(self.coords.map(|c| c.value))
    }

    /// The tangent column `d psi / d param_i`.
    pub fn d(&self, i: usize) -> Vec4 {
        Vec4(self.coords.map(|c| c.grad[i]))
    }

    /// The second derivative column `d^2 psi / d param_i d param_j`.
    pub fn dd(&self, i: usize, j: usize) -> Vec4 {
        Vec4(self.coords.map(|c| c.hess[i][j]))
    }

    /// Multiplies every coordinate by a scalar jet (conformal rescaling).
    pub fn scaled_by(&self, factor: &Jet2) -> Self {
        ImmersionJet {
            coords: self.coords.map(|c| c * *factor),
        }
    }

    /// Determinant of the induced metric, the spacelike check.
    pub fn metric_det(&self) -> f64 {
        let (a, b) = (self.d(0), self.d(1));
        a.norm_sq() * b.norm_sq() - a.inner(&b).powi(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn central_1d(f: impl Fn(f64) -> f64, x: f64, h: f64) -> (f64, f64) {
        let (fp, f0, fm) = (f(x + h), f(x), f(x - h));
        ((fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / (h * h))
    }

    #[test]
    fn lifted_coordinate() {
        let s = Jet2::variable(0, 0.7);
        assert_eq!(s.value, 0.7);
        assert_eq!(s.grad, [1.0, 0.0]);
        assert_eq!(s.hess, [[0.0; 2]; 2]);
    }

    #[test]
    fn cosh_at_zero() {
        let c = Jet2::variable(0, 0.0).cosh();
        assert_eq!(c.value, 1.0);
        assert_eq!(c.grad[0], 0.0);
        assert_eq!(c.hess[0][0], 1.0);
    }

    #[test]
    fn product_is_exact() {
        let f = Jet2::variable(0, 2.0) * Jet2::variable(1, 3.0);
        assert_eq!(f.value, 6.0);
        assert_eq!(f.grad, [3.0, 2.0]);
        assert_eq!(f.hess, [[0.0, 1.0], [1.0, 0.0]]);
    }

    #[test]
    fn log_cosh_matches_finite_differences() {
        let j = Jet2::variable(0, 1.0).cosh().ln().unwrap();
        assert!((j.grad[0] - 1f64.tanh()).abs() < 1e-15);
        let sech = 1.0 / 1f64.cosh();
        assert!((j.hess[0][0] - sech * sech).abs() < 1e-15);
        // The second derivative is differenced from the (already checked)
        // first derivative: a direct second difference at step 1e-5 carries
        // ~1e-6 rounding error.
        let f = |x: f64| x.cosh().ln();
        let df = |x: f64| Jet2::variable(0, x).cosh().ln().unwrap().grad[0];
        let (d1, _) = central_1d(f, 1.0, 1e-5);
        let (d2, _) = central_1d(df, 1.0, 1e-5);
        assert!((j.grad[0] - d1).abs() < 1e-8);
        assert!((j.hess[0][0] - d2).abs() < 1e-8);
    }

    #[test]
    fn domain_errors_name_the_function() {
        let neg = Jet2::constant(-1.0);
        assert_eq!(neg.ln().unwrap_err(), Error::Domain { func: "log", arg: -1.0 });
        assert_eq!(neg.sqrt().unwrap_err(), Error::Domain { func: "sqrt", arg: -1.0 });
        assert!(matches!(
            Jet2::constant(1.0).checked_div(&Jet2::constant(0.0)),
            Err(Error::Domain { func: "div", .. })
        ));
        assert!(matches!(Jet2::constant(0.0).csc(), Err(Error::Domain { func: "csc", .. })));
        assert!(matches!(Jet2::constant(0.0).csch(), Err(Error::Domain { func: "csch", .. })));
        assert!(neg.powf(0.5).is_err());
        assert!(neg.powf(3.0).is_ok());
    }

    /// Scalar function with its first three derivatives, for the chain-rule oracle.
    #[derive(Debug, Clone, Copy)]
    enum F {
        Exp,
        Sin,
        Cos,
        Sinh,
        Cosh,
        Tanh,
        Sech,
        Sqrt,
        Log,
        Cube,
    }

    impl F {
        fn jet<T: Scalar>(self, j: T) -> T {
            match self {
                F::Exp => j.exp(),
                F::Sin => j.sin(),
                F::Cos => j.cos(),
                F::Sinh => j.sinh(),
                F::Cosh => j.cosh(),
                F::Tanh => j.tanh(),
                F::Sech => j.sech(),
                F::Sqrt => j.sqrt().unwrap(),
                F::Log => j.ln().unwrap(),
                F::Cube => j.powf(3.0).unwrap(),
            }
        }

        /// Independent closed-form derivatives.
        fn derivs(self, x: f64) -> (f64, f64, f64, f64) {
            match self {
                F::Exp => (x.exp(), x.exp(), x.exp(), x.exp()),
                F::Sin => (x.sin(), x.cos(), -x.sin(), -x.cos()),
                F::Cos => (x.cos(), -x.sin(), -x.cos(), x.sin()),
                F::Sinh => (x.sinh(), x.cosh(), x.sinh(), x.cosh()),
                F::Cosh => (x.cosh(), x.sinh(), x.cosh(), x.sinh()),
                F::Tanh => {
                    let s = 1.0 / x.cosh();
                    let t = x.tanh();
                    (t, s * s, -2.0 * t * s * s, 4.0 * t * t * s * s - 2.0 * s.powi(4))
                }
                F::Sech => {
                    let s = 1.0 / x.cosh();
                    let t = x.tanh();
                    (s, -s * t, s * t * t - s * s * s, 5.0 * s.powi(3) * t - s * t.powi(3))
                }
                F::Sqrt => (x.sqrt(), 0.5 / x.sqrt(), -0.25 * x.powf(-1.5), 0.375 * x.powf(-2.5)),
                F::Log => (x.ln(), 1.0 / x, -1.0 / (x * x), 2.0 / x.powi(3)),
                F::Cube => (x.powi(3), 3.0 * x * x, 6.0 * x, 6.0),
            }
        }

        fn positive_range(self) -> bool {
            matches!(self, F::Sqrt | F::Log)
        }
    }

    fn any_f() -> impl Strategy<Value = F> {
        prop_oneof![
            Just(F::Exp),
            Just(F::Sin),
            Just(F::Cos),
            Just(F::Sinh),
            Just(F::Cosh),
            Just(F::Tanh),
            Just(F::Sech),
            Just(F::Sqrt),
            Just(F::Log),
            Just(F::Cube),
        ]
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    proptest! {
        #[test]
        fn chain_rule_consistency(f in any_f(), g in any_f(), x in 0.2f64..1.5) {
            // g maps into (0, inf) for the positive-only outer functions
            let gx = g.derivs(x).0;
            prop_assume!(!f.positive_range() || gx > 0.05);
            let composed = f.jet(g.jet(Jet3::<1>::variable(0, x)));
            let (g0, g1, g2, g3) = g.derivs(x);
            let (f0, f1, f2, f3) = f.derivs(g0);
            prop_assert!(close(composed.value, f0, 1e-12));
            prop_assert!(close(composed.grad[0], f1 * g1, 1e-12));
            prop_assert!(close(composed.hess[0][0], f2 * g1 * g1 + f1 * g2, 1e-12));
            let third = f3 * g1.powi(3) + 3.0 * f2 * g1 * g2 + f1 * g3;
            prop_assert!(close(composed.third[0][0][0], third, 1e-11));
            // the second-order jet agrees with the truncation
            prop_assert_eq!(f.jet(g.jet(Jet::<1>::variable(0, x))), composed.truncate());
        }

        #[test]
        fn polynomial_exactness(c in proptest::array::uniform8(-3.0f64..3.0), s in -2.0f64..2.0, t in -2.0f64..2.0) {
            // p = c0 + c1 s + c2 t + c3 s^2 t + c4 s t^2 + c5 s^4 + c6 t^4 + c7 s^2 t^2
            let (js, jt) = (Jet2::variable(0, s), Jet2::variable(1, t));
            let p = Jet2::constant(c[0]) + c[1] * js + c[2] * jt
                + c[3] * js * js * jt + c[4] * js * jt * jt
                + c[5] * js.powf(4.0).unwrap() + c[6] * jt * jt * jt * jt
                + c[7] * js * js * jt * jt;
            let ps = c[1] + 2.0 * c[3] * s * t + c[4] * t * t + 4.0 * c[5] * s.powi(3) + 2.0 * c[7] * s * t * t;
            let pt = c[2] + c[3] * s * s + 2.0 * c[4] * s * t + 4.0 * c[6] * t.powi(3) + 2.0 * c[7] * s * s * t;
            let pss = 2.0 * c[3] * t + 12.0 * c[5] * s * s + 2.0 * c[7] * t * t;
            let pst = 2.0 * c[3] * s + 2.0 * c[4] * t + 4.0 * c[7] * s * t;
            let ptt = 2.0 * c[4] * s + 12.0 * c[6] * t * t + 2.0 * c[7] * s * s;
            let scale = 1.0 + c.iter().map(|x| x.abs()).sum::<f64>() * 50.0;
            prop_assert!((p.grad[0] - ps).abs() <= 1e-13 * scale);
            prop_assert!((p.grad[1] - pt).abs() <= 1e-13 * scale);
            prop_assert!((p.hess[0][0] - pss).abs() <= 1e-13 * scale);
            prop_assert!((p.hess[0][1] - pst).abs() <= 1e-13 * scale);
            prop_assert!((p.hess[1][1] - ptt).abs() <= 1e-13 * scale);
            prop_assert_eq!(p.hess[0][1], p.hess[1][0]);
        }

        #[test]
        fn third_order_polynomial_exactness(c in proptest::array::uniform5(-3.0f64..3.0), s in -2.0f64..2.0, t in -2.0f64..2.0) {
            // p = c0 s^3 + c1 s^2 t + c2 s t^2 + c3 t^3 + c4 s^2 t^2 / (1 + s^2)
            let (js, jt) = (Jet3::<2>::variable(0, s), Jet3::<2>::variable(1, t));
            let one = Jet3::<2>::constant(1.0);
            let q = (one + js * js).recip().unwrap();
            let p = c[0] * js * js * js + c[1] * js * js * jt + c[2] * js * jt * jt + c[3] * jt * jt * jt
                + c[4] * js * js * jt * jt * q;
            // r(s) = s^2 / (1 + s^2) = 1 - 1 / (1 + s^2)
            let d = 1.0 + s * s;
            let r1 = 2.0 * s / (d * d);
            let r2 = (2.0 - 6.0 * s * s) / d.powi(3);
            let r3 = 24.0 * s * (s * s - 1.0) / d.powi(4);
            let sss = 6.0 * c[0] + c[4] * t * t * r3;
            let sst = 2.0 * c[1] + 2.0 * c[4] * t * r2;
            let stt = 2.0 * c[2] + 2.0 * c[4] * r1;
            let ttt = 6.0 * c[3];
            let tol = 1e-12 * (1.0 + c.iter().map(|x| x.abs()).sum::<f64>() * 50.0);
            prop_assert!((p.third[0][0][0] - sss).abs() <= tol);
            prop_assert!((p.third[0][0][1] - sst).abs() <= tol);
            prop_assert!((p.third[0][1][0] - sst).abs() <= tol);
            prop_assert!((p.third[1][0][0] - sst).abs() <= tol);
            prop_assert!((p.third[0][1][1] - stt).abs() <= tol);
            prop_assert!((p.third[1][1][0] - stt).abs() <= tol);
            prop_assert!((p.third[1][1][1] - ttt).abs() <= tol);
        }
    }
}
