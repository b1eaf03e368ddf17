//! Trajectory-difference functionals and the stabilizability fit.
//!
//! For two stored trajectories with states `(h, h_t, u, u_t, ψ)` and
//! `(ζ, ζ_t, w, w_t, ξ)` the difference `z = h - ζ`, `v = u - w`,
//! `θ = ψ - ξ` satisfies a damped system whose free energy
//! `E⁰(t) = βE⁰_z + αE⁰_v + (α/2)||θ||²` obeys a reconstruction inequality
//! driven by the damping functionals `G`, `H`, the potential functional
//! `Ψ_T` and lower-order terms. Everything here is evaluated by trapezoidal
//! quadrature along the stored save points; the lower-order norms use the
//! spectral `H^{1-δ}` / `H^{2-δ}` norms with cutoff exponent δ.

use crate::diagnostics::spectral::SpectralBasis;
use crate::diagnostics::DiagnosticsError;
use crate::integrator::Trajectory;
use crate::model::{self, ModelParams};
use crate::num::Scalar;
use crate::operators::DiscreteOperators;

/// Default fractional-norm offset δ for the lower-order terms.
pub const DEFAULT_DELTA: f64 = 0.25;

/// Functionals of one trajectory pair, sampled at the stored times.
#[derive(Clone, Debug)]
pub struct DiffDiagnostics<T> {
    pub times: Vec<T>,
    /// `E⁰(t)` of the difference.
    pub e0_series: Vec<T>,
    /// Cumulative damping functional `G₀ᵗ(z)` (non-decreasing).
    pub g_series: Vec<T>,
    /// Cumulative `H₀ᵗ(z)`.
    pub h_series: Vec<T>,
    /// `Ψ_T` at the final horizon.
    pub psi_t: T,
    /// Running max of the weak-norm functional (non-decreasing).
    pub lot_series: Vec<T>,
    /// Squared Y-distance of the states along the pair.
    pub y_sq_series: Vec<T>,
    /// Main-inequality left-hand side `T·E⁰(T) + ∫₀ᵀ E⁰`.
    pub main_lhs: T,
    /// Bracket multiplying c₀: `∫(||z_t||² + α||𝓐^{1/2}θ||²) + βG₀ᵀ`.
    pub main_damping: T,
    /// Bracket multiplying c₁: `H₀ᵀ + Ψ_T`.
    pub main_compact: T,
    /// Bracket multiplying c₂: `∫(||z||² + ||v||²)`.
    pub main_l2: T,
    /// Stabilizability constants, filled by [`stabilizability_fit`].
    pub stabilizability: Option<StabilizabilityFit<T>>,
}

fn trapezoid_cumulative<T: Scalar>(times: &[T], values: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); values.len()];
    for m in 1..values.len() {
        let dt = times[m] - times[m - 1];
        out[m] = out[m - 1] + dt * T::half() * (values[m] + values[m - 1]);
    }
    out
}

fn trapezoid<T: Scalar>(times: &[T], values: &[T]) -> T {
    *trapezoid_cumulative(times, values)
        .last()
        .unwrap_or(&T::zero())
}

/// Evaluate `E⁰`, `G`, `H`, `Ψ_T` and the lower-order series for a stored
/// trajectory pair. Both trajectories must carry states at identical times.
pub fn difference_functionals<T: Scalar>(
    traj_1: &Trajectory<T>,
    traj_2: &Trajectory<T>,
    params: &ModelParams<T>,
    ops: &DiscreteOperators<T>,
    basis: &SpectralBasis<T>,
    delta: T,
) -> Result<DiffDiagnostics<T>, DiagnosticsError> {
    let n = traj_1.states.len();
    if n == 0 || traj_2.states.len() != n || traj_1.times.len() != n {
        return Err(DiagnosticsError::MisalignedTimes);
    }
    for (a, b) in traj_1.times.iter().zip(traj_2.times.iter()) {
        if (*a - *b).abs() > T::of(1e-10) * (T::one() + a.abs()) {
            return Err(DiagnosticsError::MisalignedTimes);
        }
    }
    let times = traj_1.times.clone();
    let nb = ops.grid().beam_len();

    let mut e0 = Vec::with_capacity(n);
    let mut g_int = Vec::with_capacity(n);
    let mut h_int = Vec::with_capacity(n);
    let mut a_int = Vec::with_capacity(n);
    let mut b_int = Vec::with_capacity(n);
    let mut weak = Vec::with_capacity(n);
    let mut zt2_th2 = Vec::with_capacity(n);
    let mut z2v2 = Vec::with_capacity(n);
    let mut y_sq = Vec::with_capacity(n);

    for m in 0..n {
        let s1 = &traj_1.states[m];
        let s2 = &traj_2.states[m];
        let mut dz = s1.z.clone();
        dz.axpy(-T::one(), &s2.z);
        let mut dzt = s1.zt.clone();
        dzt.axpy(-T::one(), &s2.zt);
        let mut dv = s1.v.clone();
        dv.axpy(-T::one(), &s2.v);
        let mut dvt = s1.vt.clone();
        dvt.axpy(-T::one(), &s2.vt);
        let mut dth = s1.theta.clone();
        dth.axpy(-T::one(), &s2.theta);

        let az_quad = ops.a_wave_energy(&dz);
        let zt_quad = ops.dot_wave(&dzt, &dzt);
        let mut tdv = vec![T::zero(); nb];
        ops.apply_beam_t(&dv, &mut tdv);
        let mut mdvt = vec![T::zero(); nb];
        ops.apply_m_gamma(&dvt, &mut mdvt);
        let tv_quad = ops.dot_beam(&tdv, &tdv);
        let mvt_quad = ops.dot_beam(&mdvt, &dvt);
        let th_quad = ops.dot_beam(&dth, &dth);
        let e0_m = params.beta * T::half() * (az_quad + zt_quad)
            + params.alpha * T::half() * (tv_quad + mvt_quad)
            + params.alpha * T::half() * th_quad;
        e0.push(e0_m);
        y_sq.push(
            params.beta * (az_quad + zt_quad) + params.alpha * (tv_quad + mvt_quad + th_quad),
        );

        // damping differences (D(ζ_t + z_t) - D(ζ_t), ·)
        let gdiff: Vec<T> = s1
            .zt
            .iter()
            .zip(s2.zt.iter())
            .map(|(&a, &b)| params.g.eval(a) - params.g.eval(b))
            .collect();
        g_int.push(crate::num::weighted_dot(&gdiff, &dzt, ops.wave_weights()));
        h_int.push(crate::num::weighted_dot(&gdiff, &dz, ops.wave_weights()).abs());

        // potential-force differences
        let f1 = {
            let f1a = model::eval_f1(&s1.z, params);
            let mut d = f1a;
            let f1b = model::eval_f1(&s2.z, params);
            d.axpy(-T::one(), &f1b);
            d
        };
        a_int.push(ops.dot_wave(&f1, &dzt));
        let f2 = {
            let mut d = model::eval_f2(&s1.v, params, ops);
            let f2b = model::eval_f2(&s2.v, params, ops);
            d.axpy(-T::one(), &f2b);
            d
        };
        b_int.push(ops.dot_beam(&f2, &dvt));

        // lower-order weak norms
        weak.push(
            basis.wave_frac_norm_sq(&dz, T::one() - delta)
                + basis.beam_frac_norm_sq(&dv, T::two() - delta),
        );
        let mut tdth = vec![T::zero(); nb];
        ops.apply_beam_t(&dth, &mut tdth);
        zt2_th2.push(zt_quad + params.alpha * ops.dot_beam(&tdth, &dth));
        z2v2.push(ops.dot_wave(&dz, &dz) + ops.dot_beam(&dv, &dv));
    }

    let g_series = trapezoid_cumulative(&times, &g_int);
    let h_series = trapezoid_cumulative(&times, &h_int);
    let mut lot_series = Vec::with_capacity(n);
    let mut run_max = T::zero();
    for &wk in &weak {
        run_max = run_max.max(wk);
        lot_series.push(run_max);
    }

    // Ψ_T = β|∫a| + β|∫∫a| + α|∫b| + α|∫∫b|, with ∫₀ᵀ∫ₜᵀ φ dτ dt = ∫₀ᵀ τ·φ(τ) dτ
    let ta: Vec<T> = times
        .iter()
        .zip(a_int.iter())
        .map(|(&t, &a)| t * a)
        .collect();
    let tb: Vec<T> = times
        .iter()
        .zip(b_int.iter())
        .map(|(&t, &b)| t * b)
        .collect();
    let psi_t = params.beta * trapezoid(&times, &a_int).abs()
        + params.beta * trapezoid(&times, &ta).abs()
        + params.alpha * trapezoid(&times, &b_int).abs()
        + params.alpha * trapezoid(&times, &tb).abs();

    let t_final = *times.last().unwrap();
    let main_lhs = t_final * *e0.last().unwrap() + trapezoid(&times, &e0);
    let main_damping = trapezoid(&times, &zt2_th2) + params.beta * *g_series.last().unwrap();
    let main_compact = *h_series.last().unwrap() + psi_t;
    let main_l2 = trapezoid(&times, &z2v2);

    Ok(DiffDiagnostics {
        times,
        e0_series: e0,
        g_series,
        h_series,
        psi_t,
        lot_series,
        y_sq_series: y_sq,
        main_lhs,
        main_damping,
        main_compact,
        main_l2,
        stabilizability: None,
    })
}

/// Feasible nonnegative constants `(c₀, c₁, c₂)` for the reconstruction
/// inequality over a batch of pairs, with the per-pair ratios RHS/LHS.
#[derive(Clone, Debug)]
pub struct MainInequalityFit<T> {
    pub c0: T,
    pub c1: T,
    pub c2: T,
    pub ratios: Vec<T>,
}

/// Smallest equal constants `c₀ = c₁ = c₂ = c` making the inequality hold
/// for every pair in the batch.
pub fn fit_main_inequality<T: Scalar>(pairs: &[&DiffDiagnostics<T>]) -> MainInequalityFit<T> {
    let mut c = T::zero();
    for d in pairs {
        let denom = d.main_damping + d.main_compact + d.main_l2;
        if denom > T::zero() {
            c = c.max(d.main_lhs / denom);
        }
    }
    let ratios = pairs
        .iter()
        .map(|d| {
            let rhs = c * (d.main_damping + d.main_compact + d.main_l2);
            if d.main_lhs > T::zero() {
                rhs / d.main_lhs
            } else {
                T::infinity()
            }
        })
        .collect();
    MainInequalityFit {
        c0: c,
        c1: c,
        c2: c,
        ratios,
    }
}

/// Fitted constants of the trajectory-difference decay estimate
/// `||S_t y₁ - S_t y₂||²_Y ≤ C₁ e^{-ωt} ||y₁ - y₂||²_Y + C₂·lot_t`.
#[derive(Clone, Copy, Debug)]
pub struct StabilizabilityFit<T> {
    pub c1: T,
    pub omega: T,
    pub c2: T,
    /// Pointwise violations after the fit (zero when the fit is valid).
    pub violations: usize,
    pub omega_positive: bool,
    /// False when a positive deficit met a vanishing lower-order term.
    pub feasible: bool,
}

fn linear_fit<T: Scalar>(x: &[T], y: &[T]) -> (T, T) {
    let n = T::of(x.len() as f64);
    let mut sx = T::zero();
    let mut sy = T::zero();
    for (&a, &b) in x.iter().zip(y.iter()) {
        sx = sx + a;
        sy = sy + b;
    }
    let (mx, my) = (sx / n, sy / n);
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for (&a, &b) in x.iter().zip(y.iter()) {
        sxx = sxx + (a - mx) * (a - mx);
        sxy = sxy + (a - mx) * (b - my);
    }
    if sxx == T::zero() {
        return (T::zero(), my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Fit `(C₁, ω, C₂)`: ω by least squares in log space over the decaying
/// window, then the minimal `C₂` that removes all slack, verified pointwise.
pub fn stabilizability_fit<T: Scalar>(
    traj_1: &Trajectory<T>,
    traj_2: &Trajectory<T>,
    params: &ModelParams<T>,
    ops: &DiscreteOperators<T>,
    basis: &SpectralBasis<T>,
    delta: T,
) -> Result<DiffDiagnostics<T>, DiagnosticsError> {
    let mut diag = difference_functionals(traj_1, traj_2, params, ops, basis, delta)?;
    let d = &diag.y_sq_series;
    let l = &diag.lot_series;
    let t = &diag.times;
    let d0 = d[0];
    if !(d0 > T::zero()) {
        return Err(DiagnosticsError::DegenerateFit);
    }

    // decaying window: up to the global minimum of d
    let mut m_star = 0;
    let mut dmin = d[0];
    for (m, &dm) in d.iter().enumerate() {
        if dm < dmin {
            dmin = dm;
            m_star = m;
        }
    }
    let omega_floor = T::of(1e-3);
    let (omega, c1) = if m_star == 0 {
        (omega_floor, T::one())
    } else {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for m in 0..=m_star {
            if d[m] > d0 * T::of(1e-280) {
                xs.push(t[m]);
                ys.push((d[m] / d0).ln());
            }
        }
        let (slope, intercept) = linear_fit(&xs, &ys);
        ((-slope).max(omega_floor), intercept.exp().max(T::one()))
    };

    let mut c2 = T::zero();
    let mut feasible = true;
    for m in 1..d.len() {
        let deficit = d[m] - c1 * (-omega * t[m]).exp() * d0;
        if deficit > T::zero() {
            if l[m] > T::zero() {
                c2 = c2.max(deficit / l[m]);
            } else {
                feasible = false;
            }
        }
    }
    // verify pointwise with a relative rounding allowance
    let dmax = d.iter().fold(T::zero(), |a, &b| a.max(b));
    let slack = T::of(1e-10) * (d0 + dmax);
    let mut violations = 0;
    for m in 0..d.len() {
        let bound = c1 * (-omega * t[m]).exp() * d0 + c2 * l[m];
        if d[m] > bound + slack {
            violations += 1;
        }
    }
    diag.stabilizability = Some(StabilizabilityFit {
        c1,
        omega,
        c2,
        violations,
        omega_positive: omega > T::zero(),
        feasible,
    });
    Ok(diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{random_state_in_wr, DiagnosticsError};
    use crate::grid::{BeamField, GridSpec};
    use crate::integrator::{simulate, SimOptions};
    use crate::model::NonlinearitySpec;
    use crate::operators::{build_operators, DiscreteOperators};
    use crate::poly::OddPoly;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(
        gamma: f64,
        kappa: f64,
        g1: f64,
        g3: f64,
    ) -> (DiscreteOperators<f64>, ModelParams<f64>) {
        let ops = build_operators(GridSpec::new(12, 12).unwrap(), 1.0, gamma).unwrap();
        let p = ModelParams::new(
            1.0,
            1.0,
            gamma,
            kappa,
            2.0 * std::f64::consts::PI.powi(2),
            1.0,
            BeamField::zeros(ops.grid().beam_len()),
            OddPoly::new(vec![-1.0, 1.0]),
            NonlinearitySpec::odd_poly(vec![g1, g3]),
        )
        .unwrap();
        (ops, p)
    }

    fn run(
        ops: &DiscreteOperators<f64>,
        p: &ModelParams<f64>,
        seed: u64,
        t_end: f64,
    ) -> crate::integrator::Trajectory<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let init = random_state_in_wr(6.0, p, ops, &mut rng);
        let opts = SimOptions {
            dt: 0.02,
            t_end,
            save_every: 5,
            tol: 1e-11,
            store_states: true,
        };
        simulate(&init, &opts, p, ops).unwrap()
    }

    #[test]
    fn identical_trajectories_vanish() {
        let (ops, p) = setup(0.5, 1.0, 1.0, 1.0);
        let basis = SpectralBasis::new(&ops);
        let t1 = run(&ops, &p, 61, 2.0);
        let d = difference_functionals(&t1, &t1, &p, &ops, &basis, 0.25).unwrap();
        assert!(d.e0_series.iter().all(|&x| x == 0.0));
        assert!(d.g_series.iter().all(|&x| x == 0.0));
        assert!(d.h_series.iter().all(|&x| x == 0.0));
        assert_eq!(d.psi_t, 0.0);
        assert!(d.lot_series.iter().all(|&x| x == 0.0));
        // identical initial states → degenerate stabilizability fit
        assert!(matches!(
            stabilizability_fit(&t1, &t1, &p, &ops, &basis, 0.25),
            Err(DiagnosticsError::DegenerateFit)
        ));
    }

    #[test]
    fn g_series_is_monotone_and_fit_is_feasible() {
        let (ops, p) = setup(0.5, 1.0, 1.0, 1.0);
        let basis = SpectralBasis::new(&ops);
        let t1 = run(&ops, &p, 62, 3.0);
        let t2 = run(&ops, &p, 63, 3.0);
        let d = difference_functionals(&t1, &t2, &p, &ops, &basis, 0.25).unwrap();
        for w in d.g_series.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "G must be non-decreasing");
        }
        for w in d.lot_series.windows(2) {
            assert!(w[1] >= w[0]);
        }
        let fit = fit_main_inequality(&[&d]);
        assert!(fit.c0.is_finite() && fit.c0 > 0.0);
        for r in &fit.ratios {
            assert!(*r >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn main_inequality_feasible_over_random_pairs() {
        let (ops, p) = setup(0.5, 1.0, 1.0, 1.0);
        let basis = SpectralBasis::new(&ops);
        let trajs: Vec<_> = (0..4).map(|k| run(&ops, &p, 80 + k, 2.0)).collect();
        let mut diags = Vec::new();
        for i in 0..trajs.len() {
            for j in i + 1..trajs.len() {
                diags.push(
                    difference_functionals(&trajs[i], &trajs[j], &p, &ops, &basis, 0.25).unwrap(),
                );
            }
        }
        let refs: Vec<&DiffDiagnostics<f64>> = diags.iter().collect();
        let fit = fit_main_inequality(&refs);
        assert!(fit.c0 > 0.0 && fit.c0.is_finite());
        assert!(fit.c1 > 0.0 && fit.c2 > 0.0);
        for r in &fit.ratios {
            assert!(
                *r >= 1.0 - 1e-12,
                "inequality violated after fit: ratio {r}"
            );
        }
    }

    #[test]
    fn linear_regime_decays_without_lot_term() {
        // Equal wave components, tiny distinct plate data, g(s) = s, Q = 0:
        // the difference is governed by the linear thermoelastic beam and
        // decays exponentially; the fit needs no lower-order term.
        let ops = build_operators(GridSpec::new(12, 12).unwrap(), 1.0, 0.5).unwrap();
        let p = ModelParams::new(
            1.0,
            1.0,
            0.5,
            0.0,
            0.0,
            1.0,
            BeamField::zeros(ops.grid().beam_len()),
            OddPoly::new(vec![-1.0, 1.0]),
            NonlinearitySpec::odd_poly(vec![1.0]),
        )
        .unwrap();
        let basis = SpectralBasis::new(&ops);
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let base = random_state_in_wr(4.0, &p, &ops, &mut rng);
        let mut init1 = base.clone();
        let mut init2 = base;
        for k in 0..ops.grid().beam_len() {
            let x = ops.grid().beam_x::<f64>(k);
            let b1 = 1e-4 * (std::f64::consts::PI * x).sin();
            let b2 = -5e-5 * (2.0 * std::f64::consts::PI * x).sin();
            init1.v.0[k] += b1;
            init2.v.0[k] += b2;
        }
        let opts = SimOptions {
            dt: 0.02,
            t_end: 12.0,
            save_every: 10,
            tol: 1e-12,
            store_states: true,
        };
        let t1 = simulate(&init1, &opts, &p, &ops).unwrap();
        let t2 = simulate(&init2, &opts, &p, &ops).unwrap();
        let d = stabilizability_fit(&t1, &t2, &p, &ops, &basis, 0.25).unwrap();
        let fit = d.stabilizability.unwrap();
        assert!(fit.omega > 0.05, "expected clear decay, got {}", fit.omega);
        assert_eq!(fit.violations, 0);
        assert!(fit.feasible);
        // the exponential term alone nearly explains the decay
        let bound_scale = fit.c2 * d.lot_series.last().unwrap() / d.y_sq_series[0];
        assert!(
            bound_scale < 0.5,
            "lot term should stay small: {bound_scale}"
        );
    }

    #[test]
    fn misaligned_trajectories_are_rejected() {
        let (ops, p) = setup(0.5, 1.0, 1.0, 1.0);
        let basis = SpectralBasis::new(&ops);
        let t1 = run(&ops, &p, 65, 2.0);
        let mut t2 = run(&ops, &p, 66, 2.0);
        t2.times.pop();
        t2.states.pop();
        assert!(matches!(
            difference_functionals(&t1, &t2, &p, &ops, &basis, 0.25),
            Err(DiagnosticsError::MisalignedTimes)
        ));
    }
}
