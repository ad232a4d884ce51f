//! Scalar fields for taped computation: real `f64` and `Complex64`.
//!
//! Reverse-mode differentiation of a real-valued loss over complex
//! parameters propagates the conjugate-direction (Wirtinger) derivative
//! `dL/dz̄ = (dL/dx + i dL/dy) / 2`. The chain rule for an intermediate
//! `w = f(u, ū)` reads
//!
//! ```text
//! adj(u) += conj(adj(w)) * (∂w/∂ū) + adj(w) * conj(∂w/∂u)
//! ```
//!
//! so every primitive exposes the pair `(∂w/∂u, ∂w/∂ū)`. Over the reals the
//! conjugate partial vanishes and conjugation is the identity, which reduces
//! the rule to ordinary backpropagation; one tape implementation therefore
//! serves both modes.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Number field a [`crate::tape::Tape`] can be recorded over.
///
/// Finiteness is only guaranteed while inputs stay inside the dynamic range
/// of `f64`; trajectory drivers watch for escapes and report divergence.
pub trait TapeScalar:
    Copy
    + PartialEq
    + Debug
    + Display
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    const IS_COMPLEX: bool;

    fn from_re(x: f64) -> Self;
    /// Builds a scalar from components; over the reals the imaginary part
    /// must be zero.
    fn from_re_im(re: f64, im: f64) -> Self;
    fn zero() -> Self;
    fn one() -> Self;
    fn re(self) -> f64;
    fn im(self) -> f64;
    fn conj(self) -> Self;
    /// Modulus (absolute value over the reals).
    fn modulus(self) -> f64;
    fn is_finite(self) -> bool;

    fn exp(self) -> Self;
    fn ln(self) -> Self;

    /// Logistic function; `None` where the field does not admit it as an
    /// activation (complex mode restricts activations to identity and the
    /// separable tanh).
    fn sigmoid(self) -> Option<Self>;
    /// Derivative of the logistic function expressed through its value `w`.
    fn d_sigmoid(w: Self) -> Self;

    /// Rectifier; `None` over the complex numbers, where no total order
    /// exists to define it.
    fn relu(self) -> Option<Self>;
    /// Rectifier slope with the flat convention at the kink: `d_relu(0) = 0`.
    fn d_relu(u: Self) -> Self;

    /// Hyperbolic tangent over the reals; over the complex numbers the
    /// separable map `tanh(x) + i tanh(y)`.
    fn tanh_sep(self) -> Self;
    /// Partials `(∂w/∂u, ∂w/∂ū)` of [`TapeScalar::tanh_sep`] at input `u`.
    fn d_tanh_sep(u: Self) -> (Self, Self);

    /// Adjoint seeded at the loss node: differentiating `Re(output)` needs
    /// `1` over the reals and `1/2` over the complex numbers.
    fn output_seed() -> Self;

    /// Draws an initialization value of the given scale: `scale · N(0, 1)`
    /// over the reals, and over the complex numbers a circular Gaussian
    /// whose modulus has the same second moment.
    fn sample_init<R: Rng>(rng: &mut R, scale: f64) -> Self;
}

/// Overflow-free logistic function.
pub fn real_sigmoid(x: f64) -> f64 {
    // Branch on sign so neither exponential overflows.
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl TapeScalar for f64 {
    const IS_COMPLEX: bool = false;

    fn from_re(x: f64) -> Self {
        x
    }
    fn from_re_im(re: f64, im: f64) -> Self {
        debug_assert_eq!(im, 0.0, "real scalar built from a complex value");
        re
    }
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn re(self) -> f64 {
        self
    }
    fn im(self) -> f64 {
        0.0
    }
    fn conj(self) -> Self {
        self
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }

    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }

    fn sigmoid(self) -> Option<Self> {
        Some(real_sigmoid(self))
    }
    fn d_sigmoid(w: Self) -> Self {
        w * (1.0 - w)
    }

    fn relu(self) -> Option<Self> {
        Some(if self > 0.0 { self } else { 0.0 })
    }
    fn d_relu(u: Self) -> Self {
        if u > 0.0 {
            1.0
        } else {
            0.0
        }
    }

    fn tanh_sep(self) -> Self {
        self.tanh()
    }
    fn d_tanh_sep(u: Self) -> (Self, Self) {
        let t = u.tanh();
        (1.0 - t * t, 0.0)
    }

    fn output_seed() -> Self {
        1.0
    }

    fn sample_init<R: Rng>(rng: &mut R, scale: f64) -> Self {
        let x: f64 = rng.sample(StandardNormal);
        x * scale
    }
}

impl TapeScalar for Complex64 {
    const IS_COMPLEX: bool = true;

    fn from_re(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn from_re_im(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn im(self) -> f64 {
        self.im
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    fn exp(self) -> Self {
        Complex64::exp(self)
    }
    fn ln(self) -> Self {
        Complex64::ln(self)
    }

    fn sigmoid(self) -> Option<Self> {
        None
    }
    fn d_sigmoid(_w: Self) -> Self {
        unreachable!("sigmoid nodes are never recorded on complex tapes")
    }

    fn relu(self) -> Option<Self> {
        None
    }
    fn d_relu(_u: Self) -> Self {
        unreachable!("relu nodes are never recorded on complex tapes")
    }

    fn tanh_sep(self) -> Self {
        Complex64::new(self.re.tanh(), self.im.tanh())
    }
    fn d_tanh_sep(u: Self) -> (Self, Self) {
        // w = tanh(x) + i tanh(y):
        //   ∂w/∂u = (a + b)/2,  ∂w/∂ū = (a − b)/2
        // with a = 1 − tanh²x and b = 1 − tanh²y; both partials are real.
        let tx = u.re.tanh();
        let ty = u.im.tanh();
        let a = 1.0 - tx * tx;
        let b = 1.0 - ty * ty;
        (
            Complex64::new(0.5 * (a + b), 0.0),
            Complex64::new(0.5 * (a - b), 0.0),
        )
    }

    fn output_seed() -> Self {
        Complex64::new(0.5, 0.0)
    }

    fn sample_init<R: Rng>(rng: &mut R, scale: f64) -> Self {
        let s = scale / std::f64::consts::SQRT_2;
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * s, im * s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(real_sigmoid(800.0), 1.0);
        assert_eq!(real_sigmoid(-800.0), 0.0);
        assert!((real_sigmoid(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn relu_kink_uses_flat_subgradient() {
        assert_eq!(<f64 as TapeScalar>::d_relu(0.0), 0.0);
        assert_eq!(<f64 as TapeScalar>::d_relu(1e-300), 1.0);
        assert_eq!(<f64 as TapeScalar>::d_relu(-1e-300), 0.0);
    }

    #[test]
    fn separable_tanh_partials_match_difference_quotients() {
        let u = Complex64::new(0.3, -0.7);
        let (p, q) = <Complex64 as TapeScalar>::d_tanh_sep(u);
        let h = 1e-6;
        let dx = (Complex64::new(u.re + h, u.im).tanh_sep()
            - Complex64::new(u.re - h, u.im).tanh_sep())
            / Complex64::new(2.0 * h, 0.0);
        let dy = (Complex64::new(u.re, u.im + h).tanh_sep()
            - Complex64::new(u.re, u.im - h).tanh_sep())
            / Complex64::new(2.0 * h, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let half = Complex64::new(0.5, 0.0);
        let p_fd = half * (dx - i * dy);
        let q_fd = half * (dx + i * dy);
        assert!((p - p_fd).norm() < 1e-9);
        assert!((q - q_fd).norm() < 1e-9);
    }

    #[test]
    fn complex_field_refuses_ordered_activations() {
        assert!(Complex64::new(1.0, 0.0).relu().is_none());
        assert!(Complex64::new(1.0, 0.0).sigmoid().is_none());
    }
}
