//! Model data: parameters, the nonlinearities `f` and `g` with assumption
//! validators, force operators, potentials, and energy functionals.
//!
//! `f` is always an odd polynomial (its antiderivative enters the wave
//! potential in closed form); `g` may be an odd polynomial or a tabulated
//! monotone function. The wave force is `F₁(z) = f(z) - μz` and the beam
//! force is `F₂(v) = -(Q - ||𝓐^{1/2}v||²)·𝓐v - p₀`. The μ-shift inside `F₁`
//! cancels the μ-part of the wave operator, so the dynamics and the total
//! energy are exactly μ-independent.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{BeamField, WaveField};
use crate::num::{Accum, Scalar};
use crate::operators::DiscreteOperators;
use crate::poly::{OddPoly, Poly};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    Config(String),
    #[error("energy bound constants unavailable: {0}")]
    PotentialBound(String),
}

/// Specification of a scalar nonlinearity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NonlinearitySpec<T> {
    /// `f(s) = c₁ s + c₃ s³ + …`, coefficients in odd-power order.
    OddPolynomial { coeffs: Vec<T> },
    /// Piecewise-linear monotone table; extended by its end slopes.
    TabulatedMonotone { s: Vec<T>, values: Vec<T> },
}

impl<T: Scalar> NonlinearitySpec<T> {
    pub fn odd_poly(coeffs: Vec<T>) -> Self {
        NonlinearitySpec::OddPolynomial { coeffs }
    }

    pub fn as_odd_poly(&self) -> Option<OddPoly<T>> {
        match self {
            NonlinearitySpec::OddPolynomial { coeffs } => Some(OddPoly::new(coeffs.clone())),
            NonlinearitySpec::TabulatedMonotone { .. } => None,
        }
    }

    pub fn eval(&self, x: T) -> T {
        match self {
            NonlinearitySpec::OddPolynomial { coeffs } => odd_eval(coeffs, x),
            NonlinearitySpec::TabulatedMonotone { s, values } => interp_extend(s, values, x),
        }
    }

    pub fn deriv(&self, x: T) -> T {
        match self {
            NonlinearitySpec::OddPolynomial { coeffs } => odd_deriv(coeffs, x),
            NonlinearitySpec::TabulatedMonotone { s, values } => slope_at(s, values, x),
        }
    }
}

#[inline]
pub(crate) fn odd_eval<T: Scalar>(coeffs: &[T], s: T) -> T {
    let s2 = s * s;
    let mut acc = T::zero();
    for &c in coeffs.iter().rev() {
        acc = acc * s2 + c;
    }
    acc * s
}

#[inline]
pub(crate) fn odd_deriv<T: Scalar>(coeffs: &[T], s: T) -> T {
    let s2 = s * s;
    let mut acc = T::zero();
    for (k, &c) in coeffs.iter().enumerate().rev() {
        acc = acc * s2 + c * T::of((2 * k + 1) as f64);
    }
    acc
}

fn interp_extend<T: Scalar>(s: &[T], v: &[T], x: T) -> T {
    let n = s.len();
    if n == 0 {
        return T::zero();
    }
    if n == 1 {
        return v[0];
    }
    if x <= s[0] {
        let m = (v[1] - v[0]) / (s[1] - s[0]);
        return v[0] + m * (x - s[0]);
    }
    if x >= s[n - 1] {
        let m = (v[n - 1] - v[n - 2]) / (s[n - 1] - s[n - 2]);
        return v[n - 1] + m * (x - s[n - 1]);
    }
    let k = (s.partition_point(|&t| t <= x) - 1).min(n - 2);
    let w = (x - s[k]) / (s[k + 1] - s[k]);
    v[k] + w * (v[k + 1] - v[k])
}

fn slope_at<T: Scalar>(s: &[T], v: &[T], x: T) -> T {
    let n = s.len();
    if n < 2 {
        return T::zero();
    }
    let k = if x <= s[0] {
        0
    } else if x >= s[n - 1] {
        n - 2
    } else {
        (s.partition_point(|&t| t <= x) - 1).min(n - 2)
    };
    (v[k + 1] - v[k]) / (s[k + 1] - s[k])
}

/// Physical and coupling parameters.
///
/// `p0` is stored as a ready-made beam field so the hot paths never rebuild
/// it; construct through [`ModelParams::new`] once the grid is known.
#[derive(Clone, Debug)]
pub struct ModelParams<T> {
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
    pub kappa: T,
    pub q_inplane: T,
    pub mu: T,
    pub p0: BeamField<T>,
    pub f: OddPoly<T>,
    pub g: NonlinearitySpec<T>,
}

impl<T: Scalar> ModelParams<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        alpha: T,
        beta: T,
        gamma: T,
        kappa: T,
        q_inplane: T,
        mu: T,
        p0: BeamField<T>,
        f: OddPoly<T>,
        g: NonlinearitySpec<T>,
    ) -> Result<Self, ModelError> {
        if !(alpha > T::zero() && beta > T::zero() && mu > T::zero()) {
            return Err(ModelError::Config(
                "alpha, beta and mu must be positive".into(),
            ));
        }
        if !(gamma >= T::zero() && gamma <= T::one() && kappa >= T::zero() && kappa <= T::one()) {
            return Err(ModelError::Config(
                "gamma and kappa must lie in [0,1]".into(),
            ));
        }
        Ok(ModelParams {
            alpha,
            beta,
            gamma,
            kappa,
            q_inplane,
            mu,
            p0,
            f,
            g,
        })
    }

    /// Scalar potential `π(s) = ∫₀ˢ (f(ξ) - μξ) dξ`.
    pub fn wave_scalar_potential(&self) -> Poly<T> {
        self.f.shifted_potential(self.mu)
    }
}

// ---------------------------------------------------------------------------
// assumption validators
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssumptionLevel {
    /// Monotone continuous damping with `g(0) = 0` plus the growth bounds.
    Basic,
    /// Adds the near-zero coercivity `s² ≤ ε + c_ε s g(s)`.
    Attractor,
    /// Adds the two-sided difference-quotient bounds with `m > 0`.
    Dimension,
}

#[derive(Clone, Debug)]
pub struct LevelCheck {
    pub level: AssumptionLevel,
    pub passed: bool,
    pub details: String,
}

#[derive(Clone, Debug)]
pub struct AssumptionReport {
    pub checks: Vec<LevelCheck>,
}

impl AssumptionReport {
    pub fn passes(&self, level: AssumptionLevel) -> bool {
        self.checks
            .iter()
            .filter(|c| c.level <= level)
            .all(|c| c.passed)
    }

    pub fn first_failure(&self, level: AssumptionLevel) -> Option<&LevelCheck> {
        self.checks.iter().find(|c| c.level <= level && !c.passed)
    }
}

/// Minimum of a polynomial over the real line; `None` when unbounded below.
fn poly_min<T: Scalar>(p: &Poly<T>) -> Option<(T, T)> {
    let neg = Poly::new(p.coeffs.iter().map(|&c| -c).collect());
    neg.global_max().map(|(s, v)| (s, -v))
}

/// Validate the damping assumptions on `g`, cumulatively up to `level`.
///
/// Returns a report with per-level pass flags and witnesses: for polynomials
/// the checks are symbolic (derivative sign, `m = min g'`); for tabulated `g`
/// they are sampled difference quotients over the table range.
pub fn validate_assumptions<T: Scalar>(
    spec: &NonlinearitySpec<T>,
    level: AssumptionLevel,
) -> AssumptionReport {
    let mut checks = Vec::new();

    // --- basic: continuous, non-decreasing, g(0) = 0, finite growth -------
    let (min_slope, growth_note, zero_ok): (Option<T>, String, bool) = match spec {
        NonlinearitySpec::OddPolynomial { coeffs } => {
            let g = OddPoly::new(coeffs.clone());
            let dp = g.to_poly().derivative();
            let ms = if dp.degree() == 0 {
                Some((T::zero(), dp.eval(T::zero())))
            } else {
                poly_min(&dp)
            };
            let note = format!("polynomial growth exponent p = {}", g.degree().max(1));
            (ms.map(|(_, v)| v), note, true)
        }
        NonlinearitySpec::TabulatedMonotone { s, values } => {
            let mut ms: Option<T> = None;
            let mut sorted = s.len() >= 2 && s.len() == values.len();
            if sorted {
                for k in 0..s.len() - 1 {
                    if s[k + 1] <= s[k] {
                        sorted = false;
                        break;
                    }
                    let q = (values[k + 1] - values[k]) / (s[k + 1] - s[k]);
                    ms = Some(match ms {
                        None => q,
                        Some(m) => m.min(q),
                    });
                }
            }
            let zero_ok = sorted && interp_extend(s, values, T::zero()).abs() < T::of(1e-12);
            let note = format!("tabulated with {} knots", s.len());
            if !sorted {
                ms = None;
            }
            (ms, note, zero_ok)
        }
    };

    let monotone = min_slope.map(|m| m >= -T::of(1e-14)).unwrap_or(false);
    checks.push(LevelCheck {
        level: AssumptionLevel::Basic,
        passed: monotone && zero_ok,
        details: if monotone && zero_ok {
            format!(
                "g is non-decreasing (min slope {:.3e}) with g(0) = 0; {}",
                min_slope.unwrap_or(T::zero()),
                growth_note
            )
        } else if !zero_ok {
            "g(0) = 0 fails or table malformed".into()
        } else {
            format!(
                "g must be non-decreasing: minimum slope {:.3e} < 0",
                min_slope.unwrap_or(T::nan())
            )
        },
    });

    if level == AssumptionLevel::Basic {
        return AssumptionReport { checks };
    }

    // --- attractor: s² ≤ ε + c_ε s g(s) ------------------------------------
    let superlinear_at_infinity = match spec {
        NonlinearitySpec::OddPolynomial { coeffs } => {
            let g = OddPoly::new(coeffs.clone());
            !g.is_zero() && g.leading() > T::zero()
        }
        NonlinearitySpec::TabulatedMonotone { s, values } => {
            let n = s.len();
            n >= 2 && (values[n - 1] - values[n - 2]) / (s[n - 1] - s[n - 2]) > T::zero()
        }
    };
    // sampled witness: c_ε for ε = 1 over s in (0, 20]
    let mut c_eps = T::zero();
    let mut positive_product = true;
    for k in 1..=400 {
        let s = T::of(k as f64) * T::of(0.05);
        let prod = s * spec.eval(s);
        let num = s * s - T::one();
        if num > T::zero() {
            if prod <= T::zero() {
                positive_product = false;
                break;
            }
            c_eps = c_eps.max(num / prod);
        }
    }
    let attractor_ok = monotone && zero_ok && superlinear_at_infinity && positive_product;
    checks.push(LevelCheck {
        level: AssumptionLevel::Attractor,
        passed: attractor_ok,
        details: if attractor_ok {
            format!("s² ≤ ε + c_ε·s·g(s) holds; sampled c_ε(ε=1) ≈ {c_eps:.3}")
        } else if !positive_product {
            "s·g(s) vanishes away from zero".into()
        } else {
            "g(s)/s must stay positive as |s| → ∞".into()
        },
    });

    if level == AssumptionLevel::Attractor {
        return AssumptionReport { checks };
    }

    // --- dimension: m ≤ Δg/Δs ≤ M(1 + s₁g(s₁) + s₂g(s₂))^σ ------------------
    let (m_const, sigma, m_upper) = match spec {
        NonlinearitySpec::OddPolynomial { coeffs } => {
            let g = OddPoly::new(coeffs.clone());
            let m = min_slope.unwrap_or(T::zero()).max(T::zero());
            let deg = g.degree().max(1);
            let sigma = T::of((deg - 1) as f64) / T::of((deg + 1) as f64);
            let mut mm = T::zero();
            for k in 0..=400 {
                let s = T::of(k as f64) * T::of(0.05);
                let denom = (T::one() + s * g.eval(s)).powf(sigma);
                mm = mm.max(g.deriv(s) / denom);
            }
            (m, sigma, mm)
        }
        NonlinearitySpec::TabulatedMonotone { s, values } => {
            let mut mmin: Option<T> = None;
            let mut mmax = T::zero();
            for k in 0..s.len().saturating_sub(1) {
                let q = (values[k + 1] - values[k]) / (s[k + 1] - s[k]);
                mmin = Some(match mmin {
                    None => q,
                    Some(m) => m.min(q),
                });
                mmax = mmax.max(q);
            }
            (mmin.unwrap_or(T::zero()).max(T::zero()), T::zero(), mmax)
        }
    };
    let dim_ok = attractor_ok && m_const > T::zero();
    checks.push(LevelCheck {
        level: AssumptionLevel::Dimension,
        passed: dim_ok,
        details: if dim_ok {
            format!(
                "difference quotients in [m, M(1+s₁g(s₁)+s₂g(s₂))^σ] with m = {m_const:.4e}, M ≈ {m_upper:.4}, σ = {sigma:.3}"
            )
        } else {
            format!("lower difference-quotient bound fails: m = {m_const:.4e}")
        },
    });

    AssumptionReport { checks }
}

/// Validate the force assumptions on `f`: the Lipschitz/growth bounds are
/// automatic for polynomials, so the substantive check is the dissipativity
/// `liminf f(s)/s > 0`.
pub fn validate_force_assumptions<T: Scalar>(f: &OddPoly<T>) -> AssumptionReport {
    let lead = f.leading();
    let deg = f.degree();
    let dissipative = lead > T::zero() && deg >= 1;
    let details = if dissipative {
        if deg > 1 {
            format!("liminf f(s)/s = +inf (degree {deg}, leading {lead:.3})")
        } else {
            format!("liminf f(s)/s = {lead:.3} > 0")
        }
    } else {
        "dissipativity fails: need liminf f(s)/s > 0 (positive leading coefficient)".into()
    };
    AssumptionReport {
        checks: vec![LevelCheck {
            level: AssumptionLevel::Basic,
            passed: dissipative,
            details,
        }],
    }
}

// ---------------------------------------------------------------------------
// forces and potentials
// ---------------------------------------------------------------------------

/// `F₁(z) = f(z) - μz`, pointwise.
pub fn eval_f1<T: Scalar>(z: &WaveField<T>, params: &ModelParams<T>) -> WaveField<T> {
    WaveField(
        z.iter()
            .map(|&s| params.f.eval(s) - params.mu * s)
            .collect(),
    )
}

/// Berger coefficient `Q - ||𝓐^{1/2} v||²`.
pub fn berger_coefficient<T: Scalar>(
    v: &BeamField<T>,
    params: &ModelParams<T>,
    ops: &DiscreteOperators<T>,
) -> T {
    params.q_inplane - ops.beam_grad_energy(v)
}

/// `F₂(v) = -(Q - ||𝓐^{1/2}v||²)·𝓐v - p₀`.
pub fn eval_f2<T: Scalar>(
    v: &BeamField<T>,
    params: &ModelParams<T>,
    ops: &DiscreteOperators<T>,
) -> BeamField<T> {
    let coef = berger_coefficient(v, params, ops);
    let mut tv = vec![T::zero(); v.len()];
    ops.apply_beam_t(v, &mut tv);
    BeamField(
        tv.iter()
            .zip(params.p0.iter())
            .map(|(&t, &p)| -coef * t - p)
            .collect(),
    )
}

/// `Π(z) = ∫_Ω π(z)` with the closed-form antiderivative `π` of `f - μ·id`.
pub fn potential_pi<T: Scalar>(
    z: &WaveField<T>,
    params: &ModelParams<T>,
    ops: &DiscreteOperators<T>,
) -> T {
    let pot = params.wave_scalar_potential();
    let w = ops.wave_weights();
    let mut acc = Accum::new();
    for (&zi, &wi) in z.iter().zip(w.iter()) {
        acc.add(wi * pot.eval(zi));
    }
    acc.value()
}

/// `Φ(v) = ¼||𝓐^{1/2}v||⁴ - (Q/2)||𝓐^{1/2}v||² - (p₀, v)`.
pub fn potential_phi<T: Scalar>(
    v: &BeamField<T>,
    params: &ModelParams<T>,
    ops: &DiscreteOperators<T>,
) -> T {
    let s = ops.beam_grad_energy(v);
    s * s / T::of(4.0) - params.q_inplane * T::half() * s - ops.dot_beam(&params.p0, v)
}

// ---------------------------------------------------------------------------
// energies
// ---------------------------------------------------------------------------

/// All energy functionals of one state, plus the dissipation integrals
/// accumulated so far along the trajectory that produced it.
#[derive(Clone, Copy, Debug, Default)]
pub struct EnergyLedger<T> {
    /// Free wave energy `½(||A^{1/2}z||² + ||z_t||²)`.
    pub ez0: T,
    /// Free beam energy `½(||𝓐v||² + ||M_γ^{1/2}v_t||²)`.
    pub ev0: T,
    /// Thermal energy `½||θ||²`.
    pub etheta: T,
    pub pi: T,
    pub phi: T,
    /// Total energy `𝓔 = β(E⁰_z + Π) + α(E⁰_v + Φ + ½||θ||²)`.
    pub e_total: T,
    /// Positive-part energy `E` (shifted by `M_f` and the quartic term).
    pub e_plus: T,
    /// `∫ (g(z_t), z_t) dτ` to date.
    pub d_wave_accum: T,
    /// `∫ ||𝓐^{1/2}θ||² dτ` to date.
    pub d_heat_accum: T,
}

/// Fill an [`EnergyLedger`] from state components. Dissipation accumulators
/// start at zero; the integrator owns them along a trajectory.
pub fn total_energy<T: Scalar>(
    z: &WaveField<T>,
    zt: &WaveField<T>,
    v: &BeamField<T>,
    vt: &BeamField<T>,
    theta: &BeamField<T>,
    params: &ModelParams<T>,
    ops: &DiscreteOperators<T>,
) -> EnergyLedger<T> {
    let m_f = wave_potential_bound(&params.f, params.mu)
        .map(|(_, m)| m)
        .unwrap_or(T::zero());
    total_energy_with_mf(z, zt, v, vt, theta, params, ops, m_f)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn total_energy_with_mf<T: Scalar>(
    z: &WaveField<T>,
    zt: &WaveField<T>,
    v: &BeamField<T>,
    vt: &BeamField<T>,
    theta: &BeamField<T>,
    params: &ModelParams<T>,
    ops: &DiscreteOperators<T>,
    m_f: T,
) -> EnergyLedger<T> {
    let half = T::half();
    let ez0 = half * (ops.a_wave_energy(z) + ops.dot_wave(zt, zt));
    let mut tv = vec![T::zero(); v.len()];
    ops.apply_beam_t(v, &mut tv);
    let mut mvt = vec![T::zero(); vt.len()];
    ops.apply_m_gamma(vt, &mut mvt);
    let ev0 = half * (ops.dot_beam(&tv, &tv) + ops.dot_beam(&mvt, vt));
    let etheta = half * ops.dot_beam(theta, theta);
    let pi = potential_pi(z, params, ops);
    let phi = potential_phi(v, params, ops);
    let e_total = params.beta * (ez0 + pi) + params.alpha * (ev0 + phi + etheta);
    let s = ops.dot_beam(&tv, v);
    let e_plus =
        params.beta * (ez0 + pi + m_f) + params.alpha * (ev0 + s * s / T::of(4.0) + etheta);
    EnergyLedger {
        ez0,
        ev0,
        etheta,
        pi,
        phi,
        e_total,
        e_plus,
        d_wave_accum: T::zero(),
        d_heat_accum: T::zero(),
    }
}

/// Constants of the energy sandwich `c·E - M₀ ≤ 𝓔 ≤ C·E + M₀`.
#[derive(Clone, Copy, Debug)]
pub struct EnergyBoundConstants<T> {
    /// Quadratic lower-bound rate of the wave potential: `Π ≥ δ_f||z||² - M_f`.
    pub delta_f: T,
    pub m_f: T,
    pub c: T,
    pub c_big: T,
    /// `M₀ = α M₀¹ + β M₀²`.
    pub m0: T,
    pub m0_plate: T,
    pub m0_wave: T,
}

/// Scalar inequality `π(s) ≥ δ_f s² - M_f` by 1-D minimization.
pub fn wave_potential_bound<T: Scalar>(f: &OddPoly<T>, mu: T) -> Result<(T, T), ModelError> {
    let lead = f.leading();
    let deg = f.degree();
    if deg == 0 || lead <= T::zero() {
        return Err(ModelError::PotentialBound(
            "f must grow superlinearly with positive leading coefficient".into(),
        ));
    }
    let pot = f.shifted_potential(mu);
    let delta = if deg >= 3 {
        T::half()
    } else {
        // linear f: π(s) = ((c₁ - μ)/2) s² exactly
        let r = (lead - mu) * T::half();
        if r <= T::zero() {
            return Err(ModelError::PotentialBound(format!(
                "linear f needs slope above mu: c1 = {lead}, mu = {mu}"
            )));
        }
        r.min(T::half())
    };
    // M_f = max(0, sup_s (δ s² - π(s)))
    let mut coeffs: Vec<T> = pot.coeffs.iter().map(|&c| -c).collect();
    while coeffs.len() < 3 {
        coeffs.push(T::zero());
    }
    coeffs[2] = coeffs[2] + delta;
    let q = Poly::new(coeffs);
    let m_f = match q.global_max() {
        Some((_, v)) => v.max(T::zero()),
        None => {
            return Err(ModelError::PotentialBound(
                "potential minus quadratic is unbounded above".into(),
            ))
        }
    };
    Ok((delta, m_f))
}

/// Compute `(δ_f, M_f, c, C, M₀)` with the split `M₀ = α M₀¹ + β M₀²`.
///
/// The plate part `M₀¹ = Q²/2 + 2||p₀||²/λ₁²` absorbs
/// `(Q/2)||𝓐^{1/2}v||² + (p₀, v)` into `¾ E_v` via Young's inequality and the
/// beam Poincaré constant `1/λ₁`; the wave part is `M₀² = M_f`. The sandwich
/// then holds with `c = 1/4`, `C = 7/4`.
pub fn compute_energy_bound_constants<T: Scalar>(
    params: &ModelParams<T>,
    ops: &DiscreteOperators<T>,
) -> Result<EnergyBoundConstants<T>, ModelError> {
    let (delta_f, m_f) = wave_potential_bound(&params.f, params.mu)?;
    let lam1 = ops.beam_eigenvalue(1);
    let p0_norm2 = ops.dot_beam(&params.p0, &params.p0);
    let m0_plate =
        params.q_inplane * params.q_inplane * T::half() + T::two() * p0_norm2 / (lam1 * lam1);
    let m0_wave = m_f;
    Ok(EnergyBoundConstants {
        delta_f,
        m_f,
        c: T::of(0.25),
        c_big: T::of(1.75),
        m0: params.alpha * m0_plate + params.beta * m0_wave,
        m0_plate,
        m0_wave,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::operators::build_operators;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn default_params(gamma: f64, ops: &DiscreteOperators<f64>) -> ModelParams<f64> {
        ModelParams::new(
            1.0,
            1.0,
            gamma,
            1.0,
            2.0 * std::f64::consts::PI.powi(2),
            1.0,
            BeamField::zeros(ops.grid().beam_len()),
            OddPoly::new(vec![-1.0, 1.0]),
            NonlinearitySpec::odd_poly(vec![1.0, 1.0]),
        )
        .unwrap()
    }

    fn small_ops(gamma: f64) -> DiscreteOperators<f64> {
        build_operators(GridSpec::new(12, 10).unwrap(), 1.0, gamma).unwrap()
    }

    #[test]
    fn validator_examples() {
        // g(s) = s: all levels pass
        let lin = NonlinearitySpec::odd_poly(vec![1.0]);
        let rep = validate_assumptions(&lin, AssumptionLevel::Dimension);
        assert!(rep.passes(AssumptionLevel::Dimension));

        // g(s) = s³: basic and attractor pass, dimension fails since m = g'(0) = 0
        let cubic = NonlinearitySpec::odd_poly(vec![0.0, 1.0]);
        let rep = validate_assumptions(&cubic, AssumptionLevel::Dimension);
        assert!(rep.passes(AssumptionLevel::Attractor));
        assert!(!rep.passes(AssumptionLevel::Dimension));

        // g(s) = -s: fails basic, message cites monotonicity
        let neg = NonlinearitySpec::odd_poly(vec![-1.0]);
        let rep = validate_assumptions(&neg, AssumptionLevel::Dimension);
        assert!(!rep.passes(AssumptionLevel::Basic));
        assert!(rep
            .first_failure(AssumptionLevel::Basic)
            .unwrap()
            .details
            .contains("non-decreasing"));
    }

    #[test]
    fn validator_sampled_c_eps_for_cubic() {
        // For g = s³ the two-term mean inequality gives c_ε = 1/(4ε); the
        // sampled witness at ε = 1 should land at 1/4.
        let cubic = NonlinearitySpec::odd_poly(vec![0.0, 1.0]);
        let rep = validate_assumptions(&cubic, AssumptionLevel::Attractor);
        let details = &rep.checks[1].details;
        assert!(details.contains("0.250"), "details: {details}");
    }

    #[test]
    fn tabulated_monotone_validates() {
        let spec = NonlinearitySpec::TabulatedMonotone {
            s: vec![-2.0, -1.0, 0.0, 1.0, 2.0],
            values: vec![-3.0, -1.0, 0.0, 1.0, 3.0],
        };
        let rep = validate_assumptions(&spec, AssumptionLevel::Dimension);
        assert!(rep.passes(AssumptionLevel::Dimension));
        assert_eq!(spec.eval(0.5), 0.5);
        assert_eq!(spec.eval(3.0), 5.0); // extended by the end slope 2
    }

    #[test]
    fn force_validator() {
        assert!(validate_force_assumptions(&OddPoly::new(vec![-1.0, 1.0]))
            .passes(AssumptionLevel::Basic));
        assert!(!validate_force_assumptions(&OddPoly::new(vec![1.0, -1.0]))
            .passes(AssumptionLevel::Basic));
    }

    #[test]
    fn f1_examples() {
        let ops = small_ops(0.0);
        let mut p = default_params(0.0, &ops);
        let n = ops.grid().wave_len();
        // f(s) = s³ - s, μ = 1, z ≡ 1 → F₁ ≡ -1
        let f1 = eval_f1(&WaveField::constant(n, 1.0), &p);
        assert!(f1.iter().all(|&v| (v + 1.0).abs() < 1e-15));
        // z ≡ 0 → 0
        let f0 = eval_f1(&WaveField::zeros(n), &p);
        assert!(f0.iter().all(|&v| v == 0.0));
        // μ = 0.5, z ≡ 2 → 6 - 1 = 5
        p.mu = 0.5;
        let f2 = eval_f1(&WaveField::constant(n, 2.0), &p);
        assert!(f2.iter().all(|&v| (v - 5.0).abs() < 1e-13));
    }

    #[test]
    fn berger_coefficient_examples() {
        let ops = small_ops(0.0);
        let p = default_params(0.0, &ops);
        let q = p.q_inplane;
        assert_eq!(
            berger_coefficient(&BeamField::zeros(ops.grid().beam_len()), &p, &ops),
            q
        );
        // eigenvector: v = a sin(πx) → Q - a²λ₁/2
        let a = 0.8;
        let mut v = BeamField::from_fn(ops.grid().beam_len(), |k| {
            a * (std::f64::consts::PI * ops.grid().beam_x::<f64>(k)).sin()
        });
        let lam = ops.beam_eigenvalue(1);
        let c1 = berger_coefficient(&v, &p, &ops);
        assert!((c1 - (q - a * a * lam / 2.0)).abs() < 1e-12);
        // quadratic homogeneity: v → 2v maps Q - S to Q - 4S
        v.scale(2.0);
        let c2 = berger_coefficient(&v, &p, &ops);
        assert!((c2 - (q - 4.0 * (q - c1))).abs() < 1e-11);
    }

    #[test]
    fn f2_examples() {
        let ops = small_ops(0.0);
        let nb = ops.grid().beam_len();
        let mut p = default_params(0.0, &ops);
        p.p0 = BeamField::from_fn(nb, |k| 0.1 * (k as f64 + 1.0));
        // v ≡ 0 → -p0
        let f = eval_f2(&BeamField::zeros(nb), &p, &ops);
        for (a, b) in f.iter().zip(p.p0.iter()) {
            assert!((a + b).abs() < 1e-15);
        }
        // eigenvector with p0 = 0: F₂ = -(Q - S) λ v
        p.p0 = BeamField::zeros(nb);
        let v = ops.beam_mode(1);
        let lam = ops.beam_eigenvalue(1);
        let s = ops.beam_grad_energy(&v);
        let f = eval_f2(&v, &p, &ops);
        for (fi, vi) in f.iter().zip(v.iter()) {
            assert!((fi + (p.q_inplane - s) * lam * vi).abs() < 1e-10);
        }
        // Q = 0, p0 = 0, small v: F₂ = O(amplitude³)
        p.q_inplane = 0.0;
        let small = BeamField::from_fn(nb, |k| {
            1e-3 * (std::f64::consts::PI * ops.grid().beam_x::<f64>(k)).sin()
        });
        let f = eval_f2(&small, &p, &ops);
        let fmax = f.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        assert!(fmax < 1e-6, "cubic smallness violated: {fmax}");
    }

    #[test]
    fn potential_pi_examples_and_gradient() {
        let ops = small_ops(0.0);
        let p = default_params(0.0, &ops);
        let n = ops.grid().wave_len();
        assert_eq!(potential_pi(&WaveField::zeros(n), &p, &ops), 0.0);
        // closed-form oracle: ∫₀¹(ξ³ - 2ξ)dξ = -3/4 on the unit-area chamber
        let pi1 = potential_pi(&WaveField::constant(n, 1.0), &p, &ops);
        assert!((pi1 + 0.75).abs() < 1e-13);

        // discrete gradient of Π equals w_n·F₁ pointwise
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let z = WaveField::from_fn(n, |_| rng.gen_range(-1.5..1.5));
        let f1 = eval_f1(&z, &p);
        let w = ops.wave_weights().to_vec();
        let h = 1e-6;
        for &node in &[0usize, 5, n / 2, n - 1] {
            let mut zp = z.clone();
            zp.0[node] += h;
            let mut zm = z.clone();
            zm.0[node] -= h;
            let fd = (potential_pi(&zp, &p, &ops) - potential_pi(&zm, &p, &ops)) / (2.0 * h);
            let exact = w[node] * f1[node];
            assert!(
                (fd - exact).abs() <= 1e-6 * exact.abs().max(1e-8),
                "node {node}: fd {fd} vs {exact}"
            );
        }
    }

    #[test]
    fn potential_phi_examples_and_gradient() {
        let ops = small_ops(0.0);
        let nb = ops.grid().beam_len();
        let mut p = default_params(0.0, &ops);
        p.p0 = BeamField::from_fn(nb, |k| 0.3 * ((k % 3) as f64 - 1.0));
        assert_eq!(potential_phi(&BeamField::zeros(nb), &p, &ops), 0.0);

        // p0 = 0: Φ = S²/4 - QS/2 at an eigenvector
        let mut p2 = p.clone();
        p2.p0 = BeamField::zeros(nb);
        let v = ops.beam_mode(2);
        let s = ops.beam_grad_energy(&v);
        let phi = potential_phi(&v, &p2, &ops);
        assert!((phi - (s * s / 4.0 - p2.q_inplane * s / 2.0)).abs() < 1e-10);

        // gradient check: ∂Φ/∂v_k = h0·F₂_k
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let v = BeamField::from_fn(nb, |_| rng.gen_range(-0.7..0.7));
        let f2 = eval_f2(&v, &p, &ops);
        let h0 = ops.grid().h0::<f64>();
        let h = 1e-6;
        for &k in &[0usize, nb / 2, nb - 1] {
            let mut vp = v.clone();
            vp.0[k] += h;
            let mut vm = v.clone();
            vm.0[k] -= h;
            let fd = (potential_phi(&vp, &p, &ops) - potential_phi(&vm, &p, &ops)) / (2.0 * h);
            let exact = h0 * f2[k];
            assert!(
                (fd - exact).abs() <= 1e-6 * exact.abs().max(1e-8),
                "k {k}: fd {fd} vs {exact}"
            );
        }
    }

    #[test]
    fn mu_cancellation_in_wave_energy() {
        // β(A_wave z, z)/2 + Π(z) must not depend on μ.
        let grid = GridSpec::new(12, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let z = WaveField::from_fn(grid.wave_len(), |_| rng.gen_range(-2.0..2.0));
        let mut values = Vec::new();
        for &mu in &[0.5, 1.0, 2.0] {
            let ops = build_operators(grid, mu, 0.0).unwrap();
            let mut p = default_params(0.0, &ops);
            p.mu = mu;
            values.push(0.5 * ops.a_wave_energy(&z) + potential_pi(&z, &p, &ops));
        }
        let scale = values[0].abs().max(1.0);
        for v in &values[1..] {
            assert!((v - values[0]).abs() <= 1e-12 * scale, "{values:?}");
        }
    }

    #[test]
    fn total_energy_examples() {
        let ops = small_ops(0.0);
        let g = *ops.grid();
        let p = default_params(0.0, &ops);
        let zero = total_energy(
            &WaveField::zeros(g.wave_len()),
            &WaveField::zeros(g.wave_len()),
            &BeamField::zeros(g.beam_len()),
            &BeamField::zeros(g.beam_len()),
            &BeamField::zeros(g.beam_len()),
            &p,
            &ops,
        );
        assert_eq!(zero.e_total, 0.0);

        // kinetic only: 𝓔 = (β/2)||z₁||²
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let z1 = WaveField::from_fn(g.wave_len(), |_| rng.gen_range(-1.0..1.0));
        let led = total_energy(
            &WaveField::zeros(g.wave_len()),
            &z1,
            &BeamField::zeros(g.beam_len()),
            &BeamField::zeros(g.beam_len()),
            &BeamField::zeros(g.beam_len()),
            &p,
            &ops,
        );
        let expect = 0.5 * p.beta * ops.dot_wave(&z1, &z1);
        assert!((led.e_total - expect).abs() < 1e-13);

        // γ-dependence: difference is exactly (α/2)·(A_beam v_t, v_t) at γ = 1 vs 0
        let vt = BeamField::from_fn(g.beam_len(), |_| rng.gen_range(-1.0..1.0));
        let zeros_w = WaveField::zeros(g.wave_len());
        let zeros_b = BeamField::zeros(g.beam_len());
        let ops0 = small_ops(0.0);
        let ops1 = small_ops(1.0);
        let p0 = default_params(0.0, &ops0);
        let p1 = default_params(1.0, &ops1);
        let e0 = total_energy(&zeros_w, &zeros_w, &zeros_b, &vt, &zeros_b, &p0, &ops0);
        let e1 = total_energy(&zeros_w, &zeros_w, &zeros_b, &vt, &zeros_b, &p1, &ops1);
        let mut tvt = vec![0.0; vt.len()];
        ops0.apply_beam_t(&vt, &mut tvt);
        let expect = 0.5 * p0.alpha * ops0.dot_beam(&tvt, &vt);
        assert!((e1.e_total - e0.e_total - expect).abs() < 1e-12);
    }

    #[test]
    fn energy_bound_constants_examples() {
        let ops = small_ops(0.0);
        // f(s) = s³, μ = 1 → δ = 1/2, M_f = 1 (s⁴/4 ≥ s² - 1)
        let (d, m) = wave_potential_bound(&OddPoly::new(vec![0.0f64, 1.0]), 1.0).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
        assert!((m - 1.0).abs() < 1e-9);
        // f(s) = s, μ = 0.25 → δ = 3/8, M_f = 0
        let (d, m) = wave_potential_bound(&OddPoly::new(vec![1.0f64]), 0.25).unwrap();
        assert!((d - 0.375).abs() < 1e-12);
        assert!(m.abs() < 1e-12);
        // f ≡ 0 fails
        assert!(wave_potential_bound(&OddPoly::new(vec![0.0f64]), 1.0).is_err());

        let p = default_params(0.0, &ops);
        let b = compute_energy_bound_constants(&p, &ops).unwrap();
        assert!(b.delta_f > 0.0 && b.m_f >= 0.0 && b.m0 >= 0.0);
        assert!((b.m0 - (p.alpha * b.m0_plate + p.beta * b.m0_wave)).abs() < 1e-12);
    }

    #[test]
    fn energy_sandwich_on_random_states() {
        let ops = small_ops(0.5);
        let g = *ops.grid();
        let mut p = default_params(0.5, &ops);
        p.p0 = BeamField::from_fn(g.beam_len(), |k| 0.2 * (k as f64 * 0.3).sin());
        let b = compute_energy_bound_constants(&p, &ops).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for _ in 0..100 {
            let amp: f64 = rng.gen_range(0.1..3.0);
            let z = WaveField::from_fn(g.wave_len(), |_| amp * rng.gen_range(-1.0..1.0));
            let zt = WaveField::from_fn(g.wave_len(), |_| amp * rng.gen_range(-1.0..1.0));
            let v = BeamField::from_fn(g.beam_len(), |_| amp * rng.gen_range(-1.0..1.0));
            let vt = BeamField::from_fn(g.beam_len(), |_| amp * rng.gen_range(-1.0..1.0));
            let th = BeamField::from_fn(g.beam_len(), |_| amp * rng.gen_range(-1.0..1.0));
            let led = total_energy_with_mf(&z, &zt, &v, &vt, &th, &p, &ops, b.m_f);
            let slack = 1e-10 * (1.0 + led.e_plus.abs());
            assert!(
                led.e_total <= b.c_big * led.e_plus + b.m0 + slack,
                "upper bound fails: {} vs {}",
                led.e_total,
                b.c_big * led.e_plus + b.m0
            );
            assert!(
                led.e_total >= b.c * led.e_plus - b.m0 - slack,
                "lower bound fails: {} vs {}",
                led.e_total,
                b.c * led.e_plus - b.m0
            );
            // E ≥ 0 is the sharp form of "E ≥ -||p0||·||v||"
            assert!(led.e_plus >= -1e-11 * (1.0 + led.e_total.abs()));
        }
    }

    #[test]
    fn params_validation() {
        let ops = small_ops(0.0);
        let nb = ops.grid().beam_len();
        let f = OddPoly::new(vec![-1.0, 1.0]);
        let g = NonlinearitySpec::odd_poly(vec![1.0]);
        assert!(ModelParams::new(
            0.0,
            1.0,
            0.0,
            0.0,
            0.0,
            1.0,
            BeamField::zeros(nb),
            f.clone(),
            g.clone()
        )
        .is_err());
        assert!(
            ModelParams::new(1.0, 1.0, 1.5, 0.0, 0.0, 1.0, BeamField::zeros(nb), f, g).is_err()
        );
    }
}
