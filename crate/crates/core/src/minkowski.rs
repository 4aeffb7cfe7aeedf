//! Lorentz-Minkowski space `L^4` with signature `(-,+,+,+)`.

use std::ops::{Add, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Default tolerance for lightcone membership.
pub const DEFAULT_LIGHTCONE_TOL: f64 = 1e-9;

/// A point or vector of `L^4`, coordinates `(x0, x1, x2, x3)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec4(pub [f64; 4]);

/// The future-pointing unit timelike vector `d/dx0`.
pub const E0: Vec4 = Vec4([1.0, 0.0, 0.0, 0.0]);

impl Vec4 {
    pub const ZERO: Vec4 = Vec4([0.0; 4]);

    pub const fn new(x0: f64, x1: f64, x2: f64, x3: f64) -> Self {
        Vec4([x0, x1, x2, x3])
    }

    pub fn t(&self) -> f64 {
        self.0[0]
    }

    /// Lorentzian inner product.
    pub fn inner(&self, other: &Vec4) -> f64 {
        inner(self, other)
    }

    pub fn norm_sq(&self) -> f64 {
        inner(self, self)
    }

    pub fn euclid_norm_sq(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum()
    }

    pub fn euclid_norm(&self) -> f64 {
        self.euclid_norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }
}

impl Index<usize> for Vec4 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for Vec4 {
    type Output = Vec4;
    fn add(self, o: Vec4) -> Vec4 {
        Vec4(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }
}

impl Sub for Vec4 {
    type Output = Vec4;
    fn sub(self, o: Vec4) -> Vec4 {
        Vec4(std::array::from_fn(|i| self.0[i] - o.0[i]))
    }
}

impl Neg for Vec4 {
    type Output = Vec4;
    fn neg(self) -> Vec4 {
        Vec4(self.0.map(|c| -c))
    }
}

impl Mul<Vec4> for f64 {
    type Output = Vec4;
    fn mul(self, v: Vec4) -> Vec4 {
        Vec4(v.0.map(|c| self * c))
    }
}

impl Mul<f64> for Vec4 {
    type Output = Vec4;
    fn mul(self, s: f64) -> Vec4 {
        s * self
    }
}

/// `-a0 b0 + a1 b1 + a2 b2 + a3 b3`
pub fn inner(a: &Vec4, b: &Vec4) -> f64 {
    -a.0[0] * b.0[0] + a.0[1] * b.0[1] + a.0[2] * b.0[2] + a.0[3] * b.0[3]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CausalClass {
    Spacelike,
    Timelike,
    LightlikeFuture,
    LightlikePast,
    Zero,
}

/// Classifies `v` by the sign of `<v,v>`, with `tol` as the dead band.
///
/// The band is scaled by the Euclidean size of `v` so the class does not
/// depend on positive rescaling.
pub fn causal_character(v: &Vec4, tol: f64) -> CausalClass {
    let scale = v.euclid_norm_sq();
    if v.0.iter().all(|c| c.abs() <= tol) && scale <= tol * tol {
        return CausalClass::Zero;
    }
    let q = v.norm_sq() / scale;
    if q > tol {
        CausalClass::Spacelike
    } else if q < -tol {
        CausalClass::Timelike
    } else if v.0[0] > 0.0 {
        CausalClass::LightlikeFuture
    } else {
        CausalClass::LightlikePast
    }
}

/// Membership in the future lightcone `{<v,v> = 0, v0 > 0}`.
pub fn on_future_lightcone(v: &Vec4, tol: f64) -> bool {
    v.norm_sq().abs() <= tol * v.euclid_norm_sq().max(1.0) && v.0[0] > 0.0
}

/// True when `u` is a unit timelike past-pointing vector, `<u,u> = -1`, `u0 < 0`.
pub fn is_unit_past_timelike(u: &Vec4, tol: f64) -> bool {
    (u.norm_sq() + 1.0).abs() <= tol && u.0[0] < 0.0
}
