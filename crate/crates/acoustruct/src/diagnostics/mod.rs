//! Attractor-related measurements: phase-space norms, distance to the
//! stationary set, bounded-set sampling, trajectory-difference functionals,
//! stabilizability fits, box-counting dimension and parameter
//! semi-continuity trends.

pub mod dimension;
pub mod functionals;
pub mod semicontinuity;
pub mod spectral;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::equilibria::Equilibrium;
use crate::integrator::{simulate, SimOptions, SimState, Trajectory};
use crate::model::ModelParams;
use crate::num::Scalar;
use crate::operators::DiscreteOperators;

pub use dimension::{fractal_dimension, DimensionEstimate};
pub use functionals::{
    difference_functionals, fit_main_inequality, stabilizability_fit, DiffDiagnostics,
    MainInequalityFit, StabilizabilityFit,
};
pub use semicontinuity::{semicontinuity_experiment, SemicontinuityConfig, SemicontinuityRow};
pub use spectral::SpectralBasis;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("state dimensions do not match the operator grid")]
    GridMismatch,
    #[error("equilibria list is empty")]
    EmptyEquilibria,
    #[error("sample too small: got {got}, need at least {need}")]
    SampleTooSmall { got: usize, need: usize },
    #[error("identical initial states give a degenerate stabilizability fit")]
    DegenerateFit,
    #[error("trajectories are not aligned in time")]
    MisalignedTimes,
    #[error("simulation failed during sampling at t = {t}: {message}")]
    SimulationFailed { t: f64, message: String },
}

/// Squared phase-space distance
/// `β(||A^{1/2}Δz||² + ||Δz_t||²) + α(||𝓐Δv||² + ||M_γ^{1/2}Δv_t||² + ||Δθ||²)`.
pub fn y_norm_sq<T: Scalar>(
    a: &SimState<T>,
    b: &SimState<T>,
    params: &ModelParams<T>,
    ops: &DiscreteOperators<T>,
) -> Result<T, DiagnosticsError> {
    let g = ops.grid();
    if a.z.len() != g.wave_len()
        || b.z.len() != g.wave_len()
        || a.v.len() != g.beam_len()
        || b.v.len() != g.beam_len()
    {
        return Err(DiagnosticsError::GridMismatch);
    }
    let mut dz = a.z.clone();
    dz.axpy(-T::one(), &b.z);
    let mut dzt = a.zt.clone();
    dzt.axpy(-T::one(), &b.zt);
    let mut dv = a.v.clone();
    dv.axpy(-T::one(), &b.v);
    let mut dvt = a.vt.clone();
    dvt.axpy(-T::one(), &b.vt);
    let mut dth = a.theta.clone();
    dth.axpy(-T::one(), &b.theta);

    let wave = ops.a_wave_energy(&dz) + ops.dot_wave(&dzt, &dzt);
    let mut tdv = vec![T::zero(); dv.len()];
    ops.apply_beam_t(&dv, &mut tdv);
    let mut mdvt = vec![T::zero(); dvt.len()];
    ops.apply_m_gamma(&dvt, &mut mdvt);
    let plate = ops.dot_beam(&tdv, &tdv) + ops.dot_beam(&mdvt, &dvt) + ops.dot_beam(&dth, &dth);
    Ok(params.beta * wave + params.alpha * plate)
}

pub fn y_norm<T: Scalar>(
    a: &SimState<T>,
    b: &SimState<T>,
    params: &ModelParams<T>,
    ops: &DiscreteOperators<T>,
) -> Result<T, DiagnosticsError> {
    Ok(y_norm_sq(a, b, params, ops)?.max(T::zero()).sqrt())
}

/// `min over 𝓝 of dist_Y(state, (z*, 0, v*, 0, 0))`.
pub fn dist_to_equilibria<T: Scalar>(
    state: &SimState<T>,
    equilibria: &[Equilibrium<T>],
    params: &ModelParams<T>,
    ops: &DiscreteOperators<T>,
) -> Result<T, DiagnosticsError> {
    if equilibria.is_empty() {
        return Err(DiagnosticsError::EmptyEquilibria);
    }
    let mut best = T::infinity();
    for eq in equilibria {
        let d = y_norm(state, &eq.to_state(ops), params, ops)?;
        best = best.min(d);
    }
    Ok(best)
}

/// Draw a random smooth state with prescribed total energy below `r`.
///
/// Low-mode coefficients are drawn from the seeded generator, then the field
/// is rescaled by bisection until `𝓔 = u·r` for a random `u ∈ (0.2, 0.9)`,
/// which keeps the draw inside the invariant sublevel set.
pub fn random_state_in_wr<T: Scalar>(
    r: T,
    params: &ModelParams<T>,
    ops: &DiscreteOperators<T>,
    rng: &mut ChaCha8Rng,
) -> SimState<T> {
    let g = *ops.grid();
    let mut base = SimState::zeros(&g);
    for l in 0..3usize {
        for k in 0..3usize {
            let a1 = T::of(rng.gen_range(-1.0..1.0));
            let a2 = T::of(rng.gen_range(-1.0..1.0));
            let mode = ops.wave_mode(k, l);
            base.z.axpy(a1, &mode);
            base.zt.axpy(a2, &mode);
        }
    }
    for k in 1..=3usize {
        let mode = ops.beam_mode(k);
        base.v.axpy(T::of(rng.gen_range(-1.0..1.0)), &mode);
        base.vt.axpy(T::of(rng.gen_range(-1.0..1.0)), &mode);
        base.theta.axpy(T::of(rng.gen_range(-0.5..0.5)), &mode);
    }
    let target = r * T::of(rng.gen_range(0.2..0.9));
    let energy_at = |c: T| {
        let mut s = base.clone();
        s.z.scale(c);
        s.zt.scale(c);
        s.v.scale(c);
        s.vt.scale(c);
        s.theta.scale(c);
        (s.energy_ledger(params, ops).e_total, s)
    };
    let mut c_hi = T::one();
    let mut grow = 0;
    while energy_at(c_hi).0 < target && grow < 60 {
        c_hi = c_hi * T::two();
        grow += 1;
    }
    let mut lo = T::zero();
    let mut hi = c_hi;
    for _ in 0..80 {
        let mid = (lo + hi) * T::half();
        if energy_at(mid).0 < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (_, state) = energy_at((lo + hi) * T::half());
    state
}

/// Controls for [`attractor_sample`].
#[derive(Clone, Copy, Debug)]
pub struct AttractorSampleConfig<T> {
    /// Energy level of the initial sublevel set.
    pub r: T,
    pub dt: T,
    pub tol: T,
    /// Time between retained samples after burn-in.
    pub sample_every: T,
    pub seed: u64,
}

/// Post-burn-in states from `n_trajectories` starts in the energy sublevel
/// set: the empirical attractor proxy. Trajectories run in parallel with
/// per-trajectory seeds, so the result is independent of thread scheduling.
pub fn attractor_sample<T: Scalar>(
    params: &ModelParams<T>,
    ops: &DiscreteOperators<T>,
    n_trajectories: usize,
    t_burn: T,
    t_sample: T,
    cfg: &AttractorSampleConfig<T>,
) -> Result<Vec<SimState<T>>, DiagnosticsError> {
    let results: Vec<Result<Vec<SimState<T>>, DiagnosticsError>> = (0..n_trajectories)
        .into_par_iter()
        .map(|idx| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(cfg.seed ^ (idx as u64).wrapping_mul(0x9e3779b97f4a7c15));
            let initial = random_state_in_wr(cfg.r, params, ops, &mut rng);
            let save_steps = (cfg.sample_every / cfg.dt)
                .round()
                .to_f64()
                .map(|x| x as usize)
                .unwrap_or(1)
                .max(1);
            let opts = SimOptions {
                dt: cfg.dt,
                t_end: t_burn + t_sample,
                save_every: save_steps,
                tol: cfg.tol,
                store_states: true,
            };
            let traj = simulate(&initial, &opts, params, ops).map_err(|e| {
                DiagnosticsError::SimulationFailed {
                    t: e.t,
                    message: e.source.to_string(),
                }
            })?;
            let cut = t_burn - cfg.dt * T::half();
            Ok(traj
                .states
                .into_iter()
                .filter(|s| s.t > cut)
                .collect::<Vec<_>>())
        })
        .collect();
    let mut sample = Vec::new();
    for r in results {
        sample.extend(r?);
    }
    Ok(sample)
}

/// Convenience: run one trajectory from a seeded random start in the energy
/// sublevel set, storing states at every save point.
pub fn sample_trajectory<T: Scalar>(
    params: &ModelParams<T>,
    ops: &DiscreteOperators<T>,
    r: T,
    dt: T,
    t_end: T,
    save_every: usize,
    tol: T,
    seed: u64,
) -> Result<Trajectory<T>, DiagnosticsError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial = random_state_in_wr(r, params, ops, &mut rng);
    let opts = SimOptions {
        dt,
        t_end,
        save_every,
        tol,
        store_states: true,
    };
    simulate(&initial, &opts, params, ops).map_err(|e| DiagnosticsError::SimulationFailed {
        t: e.t,
        message: e.source.to_string(),
    })
}

/// The uniform bound functional of the attractor statement:
/// `||z||₁² + ||z_t||² + ||Δv||² + ||v_t||² + γ||∇v_t||² + ||θ||²`.
pub fn attractor_bound_functional<T: Scalar>(state: &SimState<T>, ops: &DiscreteOperators<T>) -> T {
    let wave = ops.a_wave_energy(&state.z) + ops.dot_wave(&state.zt, &state.zt);
    let mut tv = vec![T::zero(); state.v.len()];
    ops.apply_beam_t(&state.v, &mut tv);
    let mut tvt = vec![T::zero(); state.vt.len()];
    ops.apply_beam_t(&state.vt, &mut tvt);
    wave + ops.dot_beam(&tv, &tv)
        + ops.dot_beam(&state.vt, &state.vt)
        + ops.gamma() * ops.dot_beam(&tvt, &state.vt)
        + ops.dot_beam(&state.theta, &state.theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BeamField, GridSpec};
    use crate::model::NonlinearitySpec;
    use crate::operators::build_operators;
    use crate::poly::OddPoly;

    fn setup(gamma: f64) -> (DiscreteOperators<f64>, ModelParams<f64>) {
        let ops = build_operators(GridSpec::new(12, 12).unwrap(), 1.0, gamma).unwrap();
        let p = ModelParams::new(
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
        .unwrap();
        (ops, p)
    }

    #[test]
    fn y_norm_examples() {
        let (ops, p) = setup(0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let a = random_state_in_wr(5.0, &p, &ops, &mut rng);
        assert_eq!(y_norm(&a, &a, &p, &ops).unwrap(), 0.0);

        // γ = 0 vs γ = 1 on a pure-velocity state differ by α(A_beam v₂, v₂)
        let (ops0, p0) = setup(0.0);
        let (ops1, p1) = setup(1.0);
        let mut s = SimState::zeros(ops0.grid());
        s.vt = BeamField::from_fn(ops0.grid().beam_len(), |k| ((k as f64) * 0.37).sin());
        let zero = SimState::zeros(ops0.grid());
        let n0 = y_norm_sq(&s, &zero, &p0, &ops0).unwrap();
        let n1 = y_norm_sq(&s, &zero, &p1, &ops1).unwrap();
        let mut tvt = vec![0.0; s.vt.len()];
        ops0.apply_beam_t(&s.vt, &mut tvt);
        let expect = p0.alpha * ops0.dot_beam(&tvt, &s.vt);
        assert!((n1 - n0 - expect).abs() < 1e-12);

        // triangle inequality on random triples
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..5 {
            let x = random_state_in_wr(5.0, &p, &ops, &mut rng);
            let y = random_state_in_wr(5.0, &p, &ops, &mut rng);
            let z = random_state_in_wr(5.0, &p, &ops, &mut rng);
            let ab = y_norm(&x, &y, &p, &ops).unwrap();
            let bc = y_norm(&y, &z, &p, &ops).unwrap();
            let ac = y_norm(&x, &z, &p, &ops).unwrap();
            assert!(ac <= ab + bc + 1e-12);
        }
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let (ops, p) = setup(0.0);
        let other = build_operators(GridSpec::new(16, 16).unwrap(), 1.0, 0.0).unwrap();
        let a = SimState::zeros(ops.grid());
        let b = SimState::zeros(other.grid());
        assert!(matches!(
            y_norm(&a, &b, &p, &ops),
            Err(DiagnosticsError::GridMismatch)
        ));
    }

    #[test]
    fn dist_to_equilibria_basics() {
        let (ops, p) = setup(0.5);
        let set = crate::equilibria::enumerate_equilibria(&p, &ops, 4, 1e-11, 19);
        let eq_state = set.list[0].to_state(&ops);
        let d = dist_to_equilibria(&eq_state, &set.list, &p, &ops).unwrap();
        assert!(d < 1e-9);
        assert!(matches!(
            dist_to_equilibria(&eq_state, &[], &p, &ops),
            Err(DiagnosticsError::EmptyEquilibria)
        ));
    }

    #[test]
    fn random_wr_state_lands_in_sublevel_set() {
        let (ops, p) = setup(0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..10 {
            let s = random_state_in_wr(8.0, &p, &ops, &mut rng);
            let e = s.energy_ledger(&p, &ops).e_total;
            assert!(e <= 8.0 + 1e-9 && e > 0.0, "energy {e}");
        }
    }

    #[test]
    fn samples_cluster_near_equilibria_under_strong_damping() {
        let (ops, p) = setup(0.5);
        let cfg = AttractorSampleConfig {
            r: 6.0,
            dt: 0.05,
            tol: 1e-10,
            sample_every: 2.0,
            seed: 17,
        };
        let sample = attractor_sample(&p, &ops, 3, 40.0, 6.0, &cfg).unwrap();
        let set = crate::equilibria::enumerate_equilibria(&p, &ops, 4, 1e-10, 23);
        let sup_stationary = set
            .list
            .iter()
            .map(|eq| eq.to_state(&ops).energy_ledger(&p, &ops).e_total)
            .fold(f64::NEG_INFINITY, f64::max);
        for s in &sample {
            let d = dist_to_equilibria(s, &set.list, &p, &ops).unwrap();
            assert!(d < 1e-2, "sample strayed from the stationary set: {d}");
            let e = s.energy_ledger(&p, &ops).e_total;
            assert!(
                e <= sup_stationary + 1e-3,
                "sample energy {e} above stationary sup {sup_stationary}"
            );
        }
    }

    #[test]
    fn attractor_sample_is_deterministic_and_bounded() {
        let (ops, p) = setup(0.5);
        let cfg = AttractorSampleConfig {
            r: 5.0,
            dt: 0.05,
            tol: 1e-10,
            sample_every: 0.5,
            seed: 7,
        };
        let s1 = attractor_sample(&p, &ops, 2, 1.0, 1.0, &cfg).unwrap();
        let s2 = attractor_sample(&p, &ops, 2, 1.0, 1.0, &cfg).unwrap();
        assert_eq!(s1.len(), s2.len());
        assert!(!s1.is_empty());
        for (a, b) in s1.iter().zip(s2.iter()) {
            assert_eq!(a.z, b.z);
        }
        for s in &s1 {
            assert!(attractor_bound_functional(s, &ops).is_finite());
        }
    }
}
