//! Three-phase, stationary (αβ) and rotating (dq) coordinates.
//!
//! The Clarke map uses the power-invariant scaling √(2/3): the 3×3 matrix is
//! orthonormal, so instantaneous power is the same in `abc` and in `αβγ`. A
//! consequence worth remembering when reading amplitudes: a balanced phase
//! quantity of peak value `A` has `αβ` magnitude `√(3/2)·A`.
//!
//! Vectors carry their frame and physical unit as zero-sized type parameters,
//! so adding an `αβ` current to a `dq` voltage does not compile.
//!
//! ```
//! use gridform::frames::{park, inverse_park, CurrentAb};
//!
//! let i = CurrentAb::new(0.6, 0.8);
//! let back = inverse_park(park(i, 1.3), 1.3);
//! assert!((back.x1 - 0.6).abs() < 1e-12 && (back.x2 - 0.8).abs() < 1e-12);
//! ```

use std::fmt;
use std::marker::PhantomData;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

/// Marker trait for a two-axis reference frame.
pub trait Frame: Copy + fmt::Debug + Default + 'static {
    const NAME: &'static str;
}

/// Marker trait for the physical unit of a vector.
pub trait Unit: Copy + fmt::Debug + Default + 'static {
    const SYMBOL: &'static str;
}

/// Stationary frame.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AlphaBeta;

/// Frame rotating with an angle θ (the converter's internal oscillator).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Dq;

impl Frame for AlphaBeta {
    const NAME: &'static str = "alpha_beta";
}
impl Frame for Dq {
    const NAME: &'static str = "dq";
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Volts;
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Amperes;
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Unitless;

impl Unit for Volts {
    const SYMBOL: &'static str = "V";
}
impl Unit for Amperes {
    const SYMBOL: &'static str = "A";
}
impl Unit for Unitless {
    const SYMBOL: &'static str = "1";
}

/// A three-phase quantity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Abc {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Abc {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    /// Whether the phases sum to zero within `tol`. Not enforced anywhere.
    pub fn is_balanced(&self, tol: f64) -> bool {
        (self.a + self.b + self.c).abs() <= tol
    }
}

/// A 2-vector tagged with its frame `F` and unit `U`.
pub struct FrameVector<F: Frame, U: Unit> {
    pub x1: f64,
    pub x2: f64,
    _tag: PhantomData<(F, U)>,
}

pub type VoltageAb = FrameVector<AlphaBeta, Volts>;
pub type CurrentAb = FrameVector<AlphaBeta, Amperes>;
pub type ModulationAb = FrameVector<AlphaBeta, Unitless>;
pub type VoltageDq = FrameVector<Dq, Volts>;
pub type CurrentDq = FrameVector<Dq, Amperes>;

impl<F: Frame, U: Unit> FrameVector<F, U> {
    pub const ZERO: Self = Self::new(0.0, 0.0);

    pub const fn new(x1: f64, x2: f64) -> Self {
        Self {
            x1,
            x2,
            _tag: PhantomData,
        }
    }

    pub fn from_array([x1, x2]: [f64; 2]) -> Self {
        Self::new(x1, x2)
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.x1, self.x2]
    }

    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2)
    }

    pub fn norm_sq(self) -> f64 {
        self.x1 * self.x1 + self.x2 * self.x2
    }

    /// Euclidean inner product with a vector of the same frame (any unit).
    pub fn dot<V: Unit>(self, other: FrameVector<F, V>) -> f64 {
        self.x1 * other.x1 + self.x2 * other.x2
    }

    /// `J·z`, the rotation by π/2.
    pub fn quarter_turn(self) -> Self {
        Self::new(-self.x2, self.x1)
    }

    /// Reinterpret the unit, e.g. after multiplying by an impedance.
    pub fn cast<V: Unit>(self) -> FrameVector<F, V> {
        FrameVector::new(self.x1, self.x2)
    }

    pub fn is_finite(self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }
}

impl<F: Frame, U: Unit> Clone for FrameVector<F, U> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<F: Frame, U: Unit> Copy for FrameVector<F, U> {}

impl<F: Frame, U: Unit> Default for FrameVector<F, U> {
    fn default() -> Self {
        Self::ZERO
    }
}

impl<F: Frame, U: Unit> PartialEq for FrameVector<F, U> {
    fn eq(&self, other: &Self) -> bool {
        self.x1 == other.x1 && self.x2 == other.x2
    }
}

impl<F: Frame, U: Unit> fmt::Debug for FrameVector<F, U> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}[{}]({}, {})",
            F::NAME,
            U::SYMBOL,
            self.x1,
            self.x2
        )
    }
}

impl<F: Frame, U: Unit> Add for FrameVector<F, U> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x1 + rhs.x1, self.x2 + rhs.x2)
    }
}

impl<F: Frame, U: Unit> Sub for FrameVector<F, U> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x1 - rhs.x1, self.x2 - rhs.x2)
    }
}

impl<F: Frame, U: Unit> Neg for FrameVector<F, U> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x1, -self.x2)
    }
}

impl<F: Frame, U: Unit> AddAssign for FrameVector<F, U> {
    fn add_assign(&mut self, rhs: Self) {
        self.x1 += rhs.x1;
        self.x2 += rhs.x2;
    }
}

impl<F: Frame, U: Unit> SubAssign for FrameVector<F, U> {
    fn sub_assign(&mut self, rhs: Self) {
        self.x1 -= rhs.x1;
        self.x2 -= rhs.x2;
    }
}

impl<F: Frame, U: Unit> Mul<f64> for FrameVector<F, U> {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self::new(self.x1 * k, self.x2 * k)
    }
}

impl<F: Frame, U: Unit> Mul<FrameVector<F, U>> for f64 {
    type Output = FrameVector<F, U>;
    fn mul(self, v: FrameVector<F, U>) -> FrameVector<F, U> {
        v * self
    }
}

const SQRT_2_3: f64 = 0.816_496_580_927_726;
const HALF_SQRT_3: f64 = 0.866_025_403_784_438_6;
const INV_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// The orthonormal Clarke matrix, rows (α, β, γ).
pub fn clarke_matrix() -> [[f64; 3]; 3] {
    [
        [SQRT_2_3, -0.5 * SQRT_2_3, -0.5 * SQRT_2_3],
        [0.0, SQRT_2_3 * HALF_SQRT_3, -SQRT_2_3 * HALF_SQRT_3],
        [SQRT_2_3 * INV_SQRT_2, SQRT_2_3 * INV_SQRT_2, SQRT_2_3 * INV_SQRT_2],
    ]
}

/// Power-invariant Clarke transform. Returns the αβ part and the γ (zero
/// sequence) component.
pub fn clarke<U: Unit>(z: Abc) -> (FrameVector<AlphaBeta, U>, f64) {
    let t = clarke_matrix();
    let row = |r: [f64; 3]| r[0] * z.a + r[1] * z.b + r[2] * z.c;
    (FrameVector::new(row(t[0]), row(t[1])), row(t[2]))
}

/// Inverse Clarke transform (the transpose of [`clarke_matrix`]).
pub fn inverse_clarke<U: Unit>(z: FrameVector<AlphaBeta, U>, gamma: f64) -> Abc {
    let t = clarke_matrix();
    let col = |j: usize| t[0][j] * z.x1 + t[1][j] * z.x2 + t[2][j] * gamma;
    Abc::new(col(0), col(1), col(2))
}

/// `z_dq = R_θᵀ z_αβ`.
pub fn park<U: Unit>(z: FrameVector<AlphaBeta, U>, theta: f64) -> FrameVector<Dq, U> {
    let (s, c) = theta.sin_cos();
    FrameVector::new(c * z.x1 + s * z.x2, -s * z.x1 + c * z.x2)
}

/// `z_αβ = R_θ z_dq`.
pub fn inverse_park<U: Unit>(z: FrameVector<Dq, U>, theta: f64) -> FrameVector<AlphaBeta, U> {
    let (s, c) = theta.sin_cos();
    FrameVector::new(c * z.x1 - s * z.x2, s * z.x1 + c * z.x2)
}

/// The 2×2 matrix `a·I + b·J`.
///
/// These matrices form a field isomorphic to the complex numbers. Impedances
/// `R·I + ωL·J`, admittances `G·I + ωC·J` and rotations `R_θ` are all of this
/// form, which is why they commute with each other.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanarOperator {
    pub a: f64,
    pub b: f64,
}

impl PlanarOperator {
    pub const IDENTITY: Self = Self { a: 1.0, b: 0.0 };
    pub const J: Self = Self { a: 0.0, b: 1.0 };
    pub const ZERO: Self = Self { a: 0.0, b: 0.0 };

    pub const fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    pub const fn scalar(a: f64) -> Self {
        Self { a, b: 0.0 }
    }

    /// The rotation matrix `R_θ`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { a: c, b: s }
    }

    /// Series impedance of a resistance and inductance at frequency `omega`.
    pub fn impedance(r: f64, l: f64, omega: f64) -> Self {
        Self::new(r, omega * l)
    }

    /// Shunt admittance of a conductance and capacitance at frequency `omega`.
    pub fn admittance(g: f64, c: f64, omega: f64) -> Self {
        Self::new(g, omega * c)
    }

    pub fn apply<F: Frame, U: Unit>(self, z: FrameVector<F, U>) -> FrameVector<F, U> {
        FrameVector::new(self.a * z.x1 - self.b * z.x2, self.b * z.x1 + self.a * z.x2)
    }

    pub fn transpose(self) -> Self {
        Self::new(self.a, -self.b)
    }

    /// Determinant `a² + b²`.
    pub fn det(self) -> f64 {
        self.a * self.a + self.b * self.b
    }

    /// Induced Euclidean norm, `√(a² + b²)`.
    pub fn norm(self) -> f64 {
        self.a.hypot(self.b)
    }

    pub fn inv(self) -> Result<Self> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return Err(Error::SingularOperator);
        }
        Ok(Self::new(self.a / d, -self.b / d))
    }

    /// Dense 2×2 form, row-major.
    pub fn to_matrix(self) -> [[f64; 2]; 2] {
        [[self.a, -self.b], [self.b, self.a]]
    }
}

impl Add for PlanarOperator {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.a + rhs.a, self.b + rhs.b)
    }
}

impl Sub for PlanarOperator {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.a - rhs.a, self.b - rhs.b)
    }
}

impl Neg for PlanarOperator {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.a, -self.b)
    }
}

impl Mul for PlanarOperator {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.a * rhs.a - self.b * rhs.b,
            self.a * rhs.b + self.b * rhs.a,
        )
    }
}

impl Mul<f64> for PlanarOperator {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self::new(self.a * k, self.b * k)
    }
}

impl<F: Frame, U: Unit> Mul<FrameVector<F, U>> for PlanarOperator {
    type Output = FrameVector<F, U>;
    fn mul(self, z: FrameVector<F, U>) -> FrameVector<F, U> {
        self.apply(z)
    }
}

/// Wrap an unwrapped angle to `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    theta.rem_euclid(std::f64::consts::TAU)
}
