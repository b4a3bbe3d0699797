//! Scalar abstraction for the differentiable computations.
//!
//! Every formula on the loss path is written once, generically over [`Real`],
//! and instantiated twice: with `f64` for plain evaluation and with [`Dual`]
//! for forward-mode derivatives. The `Dual` primal part performs the exact
//! same sequence of `f64` operations as the plain path, so values agree
//! bit-for-bit between the two instantiations.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Derivative clamp for `acos` near ±1: the primal is clamped to [-1, 1]
/// exactly, while the derivative is evaluated at an argument pulled inside by
/// this margin so it stays finite.
pub const ACOS_GRAD_EPS: f64 = 1e-7;

/// Scalar usable in the differentiable core.
pub trait Real:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;

    /// Primal value. All branch decisions in generic code compare this.
    fn value(self) -> f64;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }

    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn abs(self) -> Self;

    /// Maximum by primal value; ties keep `self`.
    fn max(self, other: Self) -> Self {
        if other.value() > self.value() {
            other
        } else {
            self
        }
    }

    /// Minimum by primal value; ties keep `self`.
    fn min(self, other: Self) -> Self {
        if other.value() < self.value() {
            other
        } else {
            self
        }
    }

    /// `acos` with the argument clamped to [-1, 1].
    ///
    /// The derivative (when the scalar carries one) is evaluated at an
    /// argument clamped to [-1 + ε, 1 - ε] with ε = [`ACOS_GRAD_EPS`] so it
    /// stays finite at the boundary.
    fn acos_clamped(self) -> Self;

    /// Returns `primary` with its tangent replaced by the mean of the
    /// tangents of `ties`. Used to give argmin kinks a deterministic,
    /// symmetric subgradient when several entries tie. A no-op for `f64`.
    fn mean_tangent(primary: Self, ties: &[Self]) -> Self;
}

impl Real for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }

    #[inline]
    fn value(self) -> f64 {
        self
    }

    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }

    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }

    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }

    #[inline]
    fn acos_clamped(self) -> Self {
        self.clamp(-1.0, 1.0).acos()
    }

    #[inline]
    fn mean_tangent(primary: Self, _ties: &[Self]) -> Self {
        primary
    }
}

/// Forward-mode dual number: primal value plus one directional derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    pub re: f64,
    pub du: f64,
}

impl Dual {
    #[inline]
    pub fn constant(re: f64) -> Self {
        Dual { re, du: 0.0 }
    }

    #[inline]
    pub fn seeded(re: f64) -> Self {
        Dual { re, du: 1.0 }
    }
}

impl Add for Dual {
    type Output = Dual;
    #[inline]
    fn add(self, o: Dual) -> Dual {
        Dual {
            re: self.re + o.re,
            du: self.du + o.du,
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    #[inline]
    fn sub(self, o: Dual) -> Dual {
        Dual {
            re: self.re - o.re,
            du: self.du - o.du,
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    #[inline]
    fn mul(self, o: Dual) -> Dual {
        Dual {
            re: self.re * o.re,
            du: self.du * o.re + self.re * o.du,
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    #[inline]
    fn div(self, o: Dual) -> Dual {
        Dual {
            re: self.re / o.re,
            du: (self.du * o.re - self.re * o.du) / (o.re * o.re),
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    #[inline]
    fn neg(self) -> Dual {
        Dual {
            re: -self.re,
            du: -self.du,
        }
    }
}

impl Real for Dual {
    #[inline]
    fn from_f64(x: f64) -> Self {
        Dual::constant(x)
    }

    #[inline]
    fn value(self) -> f64 {
        self.re
    }

    #[inline]
    fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        Dual {
            re: r,
            du: self.du / (2.0 * r),
        }
    }

    #[inline]
    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual {
            re: e,
            du: self.du * e,
        }
    }

    #[inline]
    fn abs(self) -> Self {
        if self.re < 0.0 {
            -self
        } else {
            self
        }
    }

    #[inline]
    fn acos_clamped(self) -> Self {
        let re = self.re.clamp(-1.0, 1.0).acos();
        let xc = self.re.clamp(-1.0 + ACOS_GRAD_EPS, 1.0 - ACOS_GRAD_EPS);
        Dual {
            re,
            du: -self.du / (1.0 - xc * xc).sqrt(),
        }
    }

    #[inline]
    fn mean_tangent(primary: Self, ties: &[Self]) -> Self {
        if ties.len() <= 1 {
            return primary;
        }
        let mean = ties.iter().map(|t| t.du).sum::<f64>() / ties.len() as f64;
        Dual {
            re: primary.re,
            du: mean,
        }
    }
}

/// 3-vector over a generic scalar.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct V3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> V3<T> {
    #[inline]
    pub fn new(x: T, y: T, z: T) -> Self {
        V3 { x, y, z }
    }

    #[inline]
    pub fn zeros() -> Self {
        V3::new(T::zero(), T::zero(), T::zero())
    }

    #[inline]
    pub fn from_f64(v: [f64; 3]) -> Self {
        V3::new(T::from_f64(v[0]), T::from_f64(v[1]), T::from_f64(v[2]))
    }

    #[inline]
    pub fn values(self) -> [f64; 3] {
        [self.x.value(), self.y.value(), self.z.value()]
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        V3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.norm_squared().sqrt()
    }

    #[inline]
    pub fn scale(self, s: T) -> Self {
        V3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Add for V3<T> {
    type Output = V3<T>;
    #[inline]
    fn add(self, o: V3<T>) -> V3<T> {
        V3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for V3<T> {
    type Output = V3<T>;
    #[inline]
    fn sub(self, o: V3<T>) -> V3<T> {
        V3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Neg for V3<T> {
    type Output = V3<T>;
    #[inline]
    fn neg(self) -> V3<T> {
        V3::new(-self.x, -self.y, -self.z)
    }
}

/// Column-major 3x3 matrix over a generic scalar.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct M3<T> {
    pub cols: [V3<T>; 3],
}

impl<T: Real> M3<T> {
    #[inline]
    pub fn from_columns(c0: V3<T>, c1: V3<T>, c2: V3<T>) -> Self {
        M3 { cols: [c0, c1, c2] }
    }

    #[inline]
    pub fn identity() -> Self {
        M3::from_columns(
            V3::new(T::one(), T::zero(), T::zero()),
            V3::new(T::zero(), T::one(), T::zero()),
            V3::new(T::zero(), T::zero(), T::one()),
        )
    }

    /// `trace(self · otherᵀ)`, i.e. the sum of elementwise products.
    #[inline]
    pub fn trace_mul_transpose(self, other: Self) -> T {
        self.cols[0].dot(other.cols[0])
            + self.cols[1].dot(other.cols[1])
            + self.cols[2].dot(other.cols[2])
    }
}
