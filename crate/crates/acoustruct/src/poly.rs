//! Dense real polynomials and odd polynomials.
//!
//! The model nonlinearities are odd polynomials; their potentials, divided
//! differences (for the discrete-gradient integrator) and extrema (for the
//! energy-bound constants) are all computed here in closed form.

use crate::num::Scalar;

/// Dense polynomial `p(s) = c[0] + c[1] s + c[2] s² + …`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<T> {
    pub coeffs: Vec<T>,
}

impl<T: Scalar> Poly<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    fn trim(&mut self) {
        while self.coeffs.len() > 1 && *self.coeffs.last().unwrap() == T::zero() {
            self.coeffs.pop();
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> T {
        *self.coeffs.last().unwrap_or(&T::zero())
    }

    pub fn eval(&self, s: T) -> T {
        let mut acc = T::zero();
        for &c in self.coeffs.iter().rev() {
            acc = acc * s + c;
        }
        acc
    }

    pub fn derivative(&self) -> Poly<T> {
        if self.coeffs.len() <= 1 {
            return Poly::new(vec![T::zero()]);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * T::of(k as f64))
            .collect();
        Poly::new(coeffs)
    }

    /// Antiderivative with zero constant term.
    pub fn antiderivative(&self) -> Poly<T> {
        let mut coeffs = vec![T::zero(); self.coeffs.len() + 1];
        for (k, &c) in self.coeffs.iter().enumerate() {
            coeffs[k + 1] = c / T::of((k + 1) as f64);
        }
        Poly::new(coeffs)
    }

    /// Divided difference `(p(b) - p(a)) / (b - a)`, evaluated in a
    /// cancellation-free form (`(b^k - a^k)/(b-a) = Σ a^i b^{k-1-i}`).
    pub fn divided_difference(&self, a: T, b: T) -> T {
        let mut acc = T::zero();
        for (k, &c) in self.coeffs.iter().enumerate().skip(1) {
            // h_k = Σ_{i=0}^{k-1} a^i b^{k-1-i}
            let mut h = T::zero();
            let mut apow = T::one();
            for i in 0..k {
                h = h + apow * b.powi((k - 1 - i) as i32);
                apow = apow * a;
            }
            acc = acc + c * h;
        }
        acc
    }

    /// Partial derivative of [`Poly::divided_difference`] with respect to `b`.
    pub fn divided_difference_db(&self, a: T, b: T) -> T {
        let mut acc = T::zero();
        for (k, &c) in self.coeffs.iter().enumerate().skip(2) {
            let mut h = T::zero();
            let mut apow = T::one();
            for i in 0..k - 1 {
                let e = (k - 1 - i) as i32;
                h = h + apow * T::of(e as f64) * b.powi(e - 1);
                apow = apow * a;
            }
            acc = acc + c * h;
        }
        acc
    }

    /// All real roots inside `[-bound, bound]`, found by a sign scan plus
    /// bisection. `bound` defaults to the Cauchy root bound when `None`.
    pub fn real_roots(&self, bound: Option<T>) -> Vec<T> {
        let lead = self.leading();
        if self.degree() == 0 || lead == T::zero() {
            return vec![];
        }
        let b = bound.unwrap_or_else(|| {
            let mut m = T::zero();
            for &c in &self.coeffs[..self.coeffs.len() - 1] {
                m = m.max((c / lead).abs());
            }
            T::one() + m
        });
        let n_scan = 4096;
        let mut roots: Vec<T> = Vec::new();
        let push_root = |r: T, roots: &mut Vec<T>| {
            let tol = T::of(1e-9) * (T::one() + b);
            if !roots.iter().any(|&q| (q - r).abs() < tol) {
                roots.push(r);
            }
        };
        let step = T::two() * b / T::of(n_scan as f64);
        let mut x0 = -b;
        let mut f0 = self.eval(x0);
        for i in 1..=n_scan {
            let x1 = -b + step * T::of(i as f64);
            let f1 = self.eval(x1);
            if f0 == T::zero() {
                push_root(x0, &mut roots);
            } else if f0 * f1 < T::zero() {
                let (mut lo, mut hi, mut flo) = (x0, x1, f0);
                for _ in 0..200 {
                    let mid = (lo + hi) * T::half();
                    let fm = self.eval(mid);
                    if fm == T::zero() {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if flo * fm < T::zero() {
                        hi = mid;
                    } else {
                        lo = mid;
                        flo = fm;
                    }
                }
                push_root((lo + hi) * T::half(), &mut roots);
            }
            x0 = x1;
            f0 = f1;
        }
        if f0 == T::zero() {
            push_root(x0, &mut roots);
        }
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        roots
    }

    /// Global maximum of the polynomial over the real line (finite only when
    /// the polynomial tends to -∞ on both sides). Searches critical points.
    pub fn global_max(&self) -> Option<(T, T)> {
        let deg = self.degree();
        if deg == 0 {
            return Some((T::zero(), self.coeffs[0]));
        }
        let lead = self.leading();
        let tends_down = deg % 2 == 0 && lead < T::zero();
        if !tends_down {
            return None;
        }
        let mut best = (T::zero(), self.eval(T::zero()));
        for r in self.derivative().real_roots(None) {
            let v = self.eval(r);
            if v > best.1 {
                best = (r, v);
            }
        }
        Some(best)
    }
}

/// Odd polynomial `f(s) = c₁ s + c₃ s³ + c₅ s⁵ + …`, stored by its odd-power
/// coefficients `[c₁, c₃, …]`.
#[derive(Clone, Debug, PartialEq)]
pub struct OddPoly<T> {
    pub coeffs: Vec<T>,
}

impl<T: Scalar> OddPoly<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        OddPoly { coeffs }
    }

    /// Evaluate via Horner in `s²`.
    #[inline]
    pub fn eval(&self, s: T) -> T {
        let s2 = s * s;
        let mut acc = T::zero();
        for &c in self.coeffs.iter().rev() {
            acc = acc * s2 + c;
        }
        acc * s
    }

    /// Derivative value `f'(s)`.
    #[inline]
    pub fn deriv(&self, s: T) -> T {
        let s2 = s * s;
        let mut acc = T::zero();
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            let deg = T::of((2 * k + 1) as f64);
            acc = acc * s2 + c * deg;
        }
        acc
    }

    pub fn degree(&self) -> usize {
        let mut deg = 0;
        for (k, &c) in self.coeffs.iter().enumerate() {
            if c != T::zero() {
                deg = 2 * k + 1;
            }
        }
        deg
    }

    pub fn leading(&self) -> T {
        for &c in self.coeffs.iter().rev() {
            if c != T::zero() {
                return c;
            }
        }
        T::zero()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == T::zero())
    }

    /// Dense form as a [`Poly`].
    pub fn to_poly(&self) -> Poly<T> {
        let mut coeffs = vec![T::zero(); 2 * self.coeffs.len()];
        for (k, &c) in self.coeffs.iter().enumerate() {
            coeffs[2 * k + 1] = c;
        }
        Poly::new(coeffs)
    }

    /// Antiderivative of `f(s) - mu·s` with zero constant: the scalar
    /// potential under the wave potential integral.
    pub fn shifted_potential(&self, mu: T) -> Poly<T> {
        let mut p = self.to_poly();
        if p.coeffs.len() < 2 {
            p.coeffs.resize(2, T::zero());
        }
        p.coeffs[1] = p.coeffs[1] - mu;
        p.antiderivative()
    }

    pub fn real_roots(&self) -> Vec<T> {
        self.to_poly().real_roots(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_derivative() {
        // f(s) = s³ - s
        let f = OddPoly::new(vec![-1.0f64, 1.0]);
        assert_eq!(f.eval(2.0), 6.0);
        assert_eq!(f.deriv(2.0), 11.0);
        assert_eq!(f.degree(), 3);
        assert_eq!(f.leading(), 1.0);
    }

    #[test]
    fn divided_difference_matches_direct_quotient() {
        let p = Poly::new(vec![1.0f64, -2.0, 0.5, 3.0, -0.25]);
        let (a, b) = (0.7, 1.9);
        let direct = (p.eval(b) - p.eval(a)) / (b - a);
        assert!((p.divided_difference(a, b) - direct).abs() < 1e-12);
        // Coincident arguments give the derivative.
        let d = p.divided_difference(a, a);
        assert!((d - p.derivative().eval(a)).abs() < 1e-12);
    }

    #[test]
    fn divided_difference_db_matches_finite_difference() {
        let p = Poly::new(vec![0.0f64, 1.0, -0.5, 2.0, 0.0, 0.3]);
        let (a, b) = (-0.4, 1.1);
        let h = 1e-6;
        let fd = (p.divided_difference(a, b + h) - p.divided_difference(a, b - h)) / (2.0 * h);
        assert!((p.divided_difference_db(a, b) - fd).abs() < 1e-6);
    }

    #[test]
    fn roots_of_cubic() {
        // s³ - s has roots -1, 0, 1
        let f = OddPoly::new(vec![-1.0f64, 1.0]);
        let roots = f.real_roots();
        assert_eq!(roots.len(), 3);
        for (r, expect) in roots.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((r - expect).abs() < 1e-9, "root {r} vs {expect}");
        }
        // s³ + s has the single real root 0
        let f = OddPoly::new(vec![1.0f64, 1.0]);
        assert_eq!(f.real_roots().len(), 1);
    }

    #[test]
    fn global_max_of_downward_quartic() {
        // q(s) = s² - s⁴/4 has maximum 1 at s = ±√2
        let q = Poly::new(vec![0.0f64, 0.0, 1.0, 0.0, -0.25]);
        let (s, v) = q.global_max().unwrap();
        assert!((v - 1.0).abs() < 1e-9);
        assert!((s.abs() - 2.0f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn shifted_potential_example() {
        // f(s) = s³ - s, mu = 1: ∫₀¹ (ξ³ - 2ξ) dξ = 1/4 - 1 = -3/4
        let f = OddPoly::new(vec![-1.0f64, 1.0]);
        let pot = f.shifted_potential(1.0);
        assert!((pot.eval(1.0) + 0.75).abs() < 1e-15);
    }
}
