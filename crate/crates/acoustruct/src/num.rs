//! Scalar abstraction and compensated summation.

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar the numerical core is generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + std::fmt::Debug
    + std::fmt::Display
    + std::fmt::LowerExp
    + std::iter::Sum
    + Send
    + Sync
    + 'static
{
    /// Shorthand conversion from an `f64` literal.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal must convert into the scalar type")
    }

    #[inline]
    fn half() -> Self {
        Self::of(0.5)
    }

    #[inline]
    fn two() -> Self {
        Self::of(2.0)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Neumaier-compensated accumulator.
///
/// The energy identity checks in this crate compare quantities to ~1e-12 of
/// their magnitude; plain summation over ~1e4 grid nodes would eat most of
/// that budget.
#[derive(Clone, Copy, Debug)]
pub struct Accum<T> {
    sum: T,
    comp: T,
}

impl<T: Scalar> Default for Accum<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Accum<T> {
    #[inline]
    pub fn new() -> Self {
        Accum {
            sum: T::zero(),
            comp: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp = self.comp + ((self.sum - t) + x);
        } else {
            self.comp = self.comp + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum + self.comp
    }
}

/// Compensated sum of `a[i] * b[i] * w[i]`.
pub fn weighted_dot<T: Scalar>(a: &[T], b: &[T], w: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    debug_assert_eq!(a.len(), w.len());
    let mut acc = Accum::new();
    for i in 0..a.len() {
        acc.add(a[i] * b[i] * w[i]);
    }
    acc.value()
}

/// Compensated sum of `a[i] * b[i]`.
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Accum::new();
    for i in 0..a.len() {
        acc.add(a[i] * b[i]);
    }
    acc.value()
}
