//! Stationary states of the coupled system.
//!
//! Every stationary point has the form `(z*, 0, v*, 0, 0)` where `z*` solves
//! the Neumann problem `-Δz + f(z) = 0` on the chamber and `v*` solves the
//! hinged Berger problem `𝓐²v - (Q - ||𝓐^{1/2}v||²)𝓐v = p₀` on the wall.
//! Neither subproblem involves γ or κ, so the stationary set is a product
//! and independent of both parameters; the enumerator exploits this by
//! multi-starting Newton on each factor separately and forming the product.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grid::{BeamField, WaveField};
use crate::integrator::SimState;
use crate::linalg::{DenseMatrix, LinalgError};
use crate::model::{self, ModelParams};
use crate::num::Scalar;
use crate::operators::{DiscreteOperators, OperatorError};

#[derive(Debug, Error)]
pub enum EquilibriaError {
    #[error("newton diverged: residual {residual:e} after {iters} iterations")]
    NewtonDiverged { residual: f64, iters: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// One stationary point, stored by its position fields.
#[derive(Clone, Debug)]
pub struct Equilibrium<T> {
    pub z_star: WaveField<T>,
    pub v_star: BeamField<T>,
    pub residual_wave: T,
    pub residual_plate: T,
    pub label: String,
}

impl<T: Scalar> Equilibrium<T> {
    /// Embed as the full state `(z*, 0, v*, 0, 0)`.
    pub fn to_state(&self, ops: &DiscreteOperators<T>) -> SimState<T> {
        let mut s = SimState::zeros(ops.grid());
        s.z = self.z_star.clone();
        s.v = self.v_star.clone();
        s
    }
}

/// Newton solve of the stationary wave problem `A_wave z + F₁(z) = 0`
/// (equivalently `-Δz + f(z) = 0` by μ-cancellation). Returns the solution
/// and its final residual norm. Convergence is declared at
/// `tol · (1 + ||A_wave z|| + ||F₁(z)||)`, which keeps the target above the
/// rounding floor of the stencil evaluation on fine grids.
pub fn solve_wave_stationary<T: Scalar>(
    guess: &WaveField<T>,
    params: &ModelParams<T>,
    ops: &DiscreteOperators<T>,
    tol: T,
) -> Result<(WaveField<T>, T), EquilibriaError> {
    let nw = ops.grid().wave_len();
    let mut z = guess.clone();
    let mut az = vec![T::zero(); nw];
    let residual = |z: &WaveField<T>, az: &mut Vec<T>| -> (Vec<T>, T, T) {
        ops.apply_a_wave(z, az);
        let f1 = model::eval_f1(z, params);
        let r: Vec<T> = (0..nw).map(|n| az[n] + f1[n]).collect();
        let nrm = ops.norm_wave(&r);
        // stencil intermediates have magnitude ~||z||/h², which sets the
        // rounding floor of the residual evaluation
        let g = ops.grid();
        let ih2 = T::one() / (g.hx::<T>() * g.hx::<T>()) + T::one() / (g.hy::<T>() * g.hy::<T>());
        let scale = T::one() + ih2 * ops.norm_wave(z) + ops.norm_wave(az) + ops.norm_wave(&f1);
        (r, nrm, scale)
    };
    let (mut r, mut rnorm, mut scale) = residual(&z, &mut az);
    for iter in 0..60 {
        if rnorm <= tol * scale {
            return Ok((z, rnorm));
        }
        let extra: Vec<T> = z.iter().map(|&s| params.f.deriv(s) - params.mu).collect();
        let lu = ops
            .wave_system_matrix(T::zero(), T::one(), Some(&extra))
            .factor()?;
        let mut dz = r.clone();
        lu.solve(&mut dz)?;
        // damped update: halve until the residual decreases
        let mut lam = T::one();
        let mut accepted = false;
        for _ in 0..30 {
            let mut trial = z.clone();
            for n in 0..nw {
                trial.0[n] = trial.0[n] - lam * dz[n];
            }
            let (rt, nt, st) = residual(&trial, &mut az);
            if nt < rnorm {
                z = trial;
                r = rt;
                rnorm = nt;
                scale = st;
                accepted = true;
                break;
            }
            lam = lam * T::half();
        }
        if !accepted {
            return Err(EquilibriaError::NewtonDiverged {
                residual: rnorm.to_f64().unwrap_or(f64::NAN),
                iters: iter,
            });
        }
    }
    if rnorm <= tol * scale {
        Ok((z, rnorm))
    } else {
        Err(EquilibriaError::NewtonDiverged {
            residual: rnorm.to_f64().unwrap_or(f64::NAN),
            iters: 60,
        })
    }
}

/// Newton solve of the stationary hinged Berger problem
/// `A_beam² v - (Q - (A_beam v, v)) A_beam v = p₀`. Convergence is declared
/// at `tol · (1 + ||A_beam²v|| + |Q - S|·||A_beam v|| + ||p₀||)`: the
/// biharmonic evaluation has a rounding floor ~`ε/h0⁴` that an absolute
/// target would undercut on fine wall grids.
pub fn solve_plate_stationary<T: Scalar>(
    guess: &BeamField<T>,
    params: &ModelParams<T>,
    ops: &DiscreteOperators<T>,
    tol: T,
) -> Result<(BeamField<T>, T), EquilibriaError> {
    let nb = ops.grid().beam_len();
    let h0 = ops.grid().h0::<T>();
    let p0_norm = ops.norm_beam(&params.p0);
    let mut v = guess.clone();
    let residual = |v: &BeamField<T>| -> (Vec<T>, Vec<T>, T, T) {
        let mut tv = vec![T::zero(); nb];
        ops.apply_beam_t(v, &mut tv);
        let mut t2v = vec![T::zero(); nb];
        ops.apply_beam_t(&tv, &mut t2v);
        let s = ops.dot_beam(&tv, v);
        let coef = params.q_inplane - s;
        let r: Vec<T> = (0..nb)
            .map(|k| t2v[k] - coef * tv[k] - params.p0[k])
            .collect();
        let nrm = ops.norm_beam(&r);
        // the biharmonic evaluation T(Tv) carries intermediates ~||Tv||/h0²
        let ih2 = T::one() / (h0 * h0);
        let scale = T::one()
            + ih2 * (ops.norm_beam(v) + ops.norm_beam(&tv))
            + coef.abs() * ops.norm_beam(&tv)
            + p0_norm;
        (r, tv, nrm, scale)
    };
    let (mut r, mut tv, mut rnorm, mut scale) = residual(&v);
    for iter in 0..80 {
        if rnorm <= tol * scale {
            return Ok((v, rnorm));
        }
        let s = ops.dot_beam(&tv, &v);
        let coef = params.q_inplane - s;
        let ih2 = T::one() / (h0 * h0);
        // J = T² - (Q - S)T + 2 h0 (Tv)(Tv)ᵀ, assembled densely
        let mut jac = DenseMatrix::zeros(nb);
        for i in 0..nb {
            for j in 0..nb {
                let tij = if i == j {
                    T::two() * ih2
                } else if i.abs_diff(j) == 1 {
                    -ih2
                } else {
                    T::zero()
                };
                let mut t2ij = T::zero();
                if i.abs_diff(j) <= 2 {
                    for k in i.saturating_sub(1)..=(i + 1).min(nb - 1) {
                        let tik = if i == k {
                            T::two() * ih2
                        } else if i.abs_diff(k) == 1 {
                            -ih2
                        } else {
                            T::zero()
                        };
                        let tkj = if k == j {
                            T::two() * ih2
                        } else if k.abs_diff(j) == 1 {
                            -ih2
                        } else {
                            T::zero()
                        };
                        t2ij = t2ij + tik * tkj;
                    }
                }
                jac.set(i, j, t2ij - coef * tij + T::two() * h0 * tv[i] * tv[j]);
            }
        }
        let lu = jac.factor()?;
        let mut dv = r.clone();
        lu.solve(&mut dv)?;
        let mut lam = T::one();
        let mut accepted = false;
        for _ in 0..30 {
            let mut trial = v.clone();
            for k in 0..nb {
                trial.0[k] = trial.0[k] - lam * dv[k];
            }
            let (rt, tvt, nt, st) = residual(&trial);
            if nt < rnorm {
                v = trial;
                r = rt;
                tv = tvt;
                rnorm = nt;
                scale = st;
                accepted = true;
                break;
            }
            lam = lam * T::half();
        }
        if !accepted {
            return Err(EquilibriaError::NewtonDiverged {
                residual: rnorm.to_f64().unwrap_or(f64::NAN),
                iters: iter,
            });
        }
    }
    if rnorm <= tol * scale {
        Ok((v, rnorm))
    } else {
        Err(EquilibriaError::NewtonDiverged {
            residual: rnorm.to_f64().unwrap_or(f64::NAN),
            iters: 80,
        })
    }
}

/// Result of the multi-start enumeration.
#[derive(Clone, Debug)]
pub struct EquilibriaSet<T> {
    pub list: Vec<Equilibrium<T>>,
    /// Largest Y-norm over the found equilibria (the boundedness witness).
    pub max_y_norm: T,
}

/// Multi-start enumeration of the stationary set: constants at the roots of
/// `f` and scaled beam eigenmodes as structured seeds, plus seeded random
/// smooth fields, deduplicated by Y-distance.
pub fn enumerate_equilibria<T: Scalar>(
    params: &ModelParams<T>,
    ops: &DiscreteOperators<T>,
    n_starts: usize,
    tol: T,
    seed: u64,
) -> EquilibriaSet<T> {
    let g = *ops.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_starts = n_starts.max(1);

    // wave factor
    let mut wave_guesses: Vec<WaveField<T>> = params
        .f
        .real_roots()
        .into_iter()
        .map(|r| WaveField::constant(g.wave_len(), r))
        .collect();
    wave_guesses.push(WaveField::zeros(g.wave_len()));
    for _ in 0..n_starts {
        let mut w = WaveField::zeros(g.wave_len());
        for l in 0..3usize {
            for k in 0..3usize {
                let amp = T::of(rng.gen_range(-1.5..1.5));
                let mode = ops.wave_mode(k, l);
                w.axpy(amp, &mode);
            }
        }
        wave_guesses.push(w);
    }
    let mut wave_solutions: Vec<(WaveField<T>, T)> = Vec::new();
    for guess in &wave_guesses {
        if let Ok((z, res)) = solve_wave_stationary(guess, params, ops, tol) {
            let dup = wave_solutions.iter().any(|(zs, _)| {
                let mut d = zs.clone();
                d.axpy(-T::one(), &z);
                ops.norm_wave(&d) < T::of(1e-6) * (T::one() + ops.norm_wave(zs))
            });
            if !dup {
                wave_solutions.push((z, res));
            }
        }
    }

    // beam factor
    let mut beam_guesses: Vec<BeamField<T>> = vec![BeamField::zeros(g.beam_len())];
    for k in 1..=3usize {
        let lam = ops.beam_eigenvalue(k);
        if params.q_inplane > lam {
            let amp = (T::two() * (params.q_inplane - lam) / lam).sqrt();
            // one-mode amplitude a multiplies sin(kπx); beam_mode is √2·sin
            let coeff = amp / T::two().sqrt();
            for sign in [T::one(), -T::one()] {
                let mut v = BeamField::zeros(g.beam_len());
                v.axpy(sign * coeff, &ops.beam_mode(k));
                beam_guesses.push(v);
            }
        }
    }
    for _ in 0..n_starts {
        let mut v = BeamField::zeros(g.beam_len());
        for k in 1..=3usize {
            let amp = T::of(rng.gen_range(-2.0..2.0));
            v.axpy(amp, &ops.beam_mode(k));
        }
        beam_guesses.push(v);
    }
    let mut beam_solutions: Vec<(BeamField<T>, T)> = Vec::new();
    for guess in &beam_guesses {
        if let Ok((v, res)) = solve_plate_stationary(guess, params, ops, tol) {
            let dup = beam_solutions.iter().any(|(vs, _)| {
                let mut d = vs.clone();
                d.axpy(-T::one(), &v);
                let mut td = vec![T::zero(); d.len()];
                ops.apply_beam_t(&d, &mut td);
                ops.dot_beam(&td, &td).sqrt() < T::of(1e-6) * (T::one() + ops.norm_beam(vs))
            });
            if !dup {
                beam_solutions.push((v, res));
            }
        }
    }

    // canonical ordering for reproducible output
    let mean = |z: &WaveField<T>| {
        let one = WaveField::constant(z.len(), T::one());
        ops.dot_wave(z, &one)
    };
    wave_solutions.sort_by(|a, b| mean(&a.0).partial_cmp(&mean(&b.0)).unwrap());
    let mid = g.beam_len() / 2;
    beam_solutions.sort_by(|a, b| a.0[mid].partial_cmp(&b.0[mid]).unwrap());

    let mut list = Vec::new();
    let mut max_y = T::zero();
    for (z, rw) in &wave_solutions {
        for (v, rp) in &beam_solutions {
            let zm = mean(z);
            let vm = v[mid];
            let label = format!("z_mean={zm:+.6}|v_mid={vm:+.6}");
            // Y-norm of the embedded equilibrium
            let mut tv = vec![T::zero(); v.len()];
            ops.apply_beam_t(v, &mut tv);
            let y =
                (params.beta * ops.a_wave_energy(z) + params.alpha * ops.dot_beam(&tv, &tv)).sqrt();
            max_y = max_y.max(y);
            list.push(Equilibrium {
                z_star: z.clone(),
                v_star: v.clone(),
                residual_wave: *rw,
                residual_plate: *rp,
                label,
            });
        }
    }
    EquilibriaSet {
        list,
        max_y_norm: max_y,
    }
}
