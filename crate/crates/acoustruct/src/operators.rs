//! Finite-difference realizations of the abstract operators.
//!
//! * `A_wave = -Δ + μ` on the chamber with homogeneous Neumann flux realized
//!   by ghost-node reflection (so constants are exact eigenvectors with
//!   eigenvalue μ);
//! * `A_beam = -d²/dx²` on the interior wall nodes with Dirichlet ends; the
//!   hinged beam biharmonic is its square, which imposes `v = Δv = 0`
//!   spectrally exactly;
//! * `M_γ = I + γ A_beam`;
//! * the boundary coupling pair `trace` / `flux_inject`, built so that
//!   `(flux_inject φ, w)_Ω = (φ, trace w)_{Γ₀}` holds exactly with
//!   trapezoidal quadrature on `Γ₀` and tensor-trapezoidal quadrature on `Ω`.
//!
//! The exact adjointness is what makes the coupling terms cancel identically
//! in the discrete energy balance and the dynamics independent of μ.

use crate::grid::{BeamField, BoundaryField, GridSpec, WaveField};
use crate::linalg::{BandedLu, BandedMatrix, LinalgError};
use crate::num::{weighted_dot, Scalar};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("linear solve failed: {source} (residual {residual:e})")]
    Solver { source: LinalgError, residual: f64 },
}

/// Assembled discrete operators for one grid. Immutable after construction
/// and safe to share across threads.
#[derive(Clone, Debug)]
pub struct DiscreteOperators<T> {
    grid: GridSpec,
    mu: T,
    gamma: T,
    /// Tensor-trapezoid quadrature weight per wave node.
    wave_w: Vec<T>,
    /// Trapezoid quadrature weight per wall node (ends halved), times h0.
    bnd_w: Vec<T>,
    m_gamma_lu: Option<BandedLu<T>>,
}

/// Build the operator set for `A h = -Δh + μh` and the beam/inertia/coupling
/// operators on the given grid.
pub fn build_operators<T: Scalar>(
    grid: GridSpec,
    mu: T,
    gamma: T,
) -> Result<DiscreteOperators<T>, OperatorError> {
    if !(mu > T::zero()) || !mu.is_finite() {
        return Err(OperatorError::Config(format!(
            "mu must be positive and finite, got {mu}"
        )));
    }
    if !(gamma >= T::zero() && gamma <= T::one()) {
        return Err(OperatorError::Config(format!(
            "gamma must lie in [0, 1], got {gamma}"
        )));
    }
    let (nx, ny, n0) = (grid.nx(), grid.ny(), grid.n0());
    let (hx, hy, h0) = (grid.hx::<T>(), grid.hy::<T>(), grid.h0::<T>());

    let mut wave_w = vec![T::zero(); grid.wave_len()];
    for j in 0..=ny {
        let cy = if j == 0 || j == ny {
            T::half()
        } else {
            T::one()
        };
        for i in 0..=nx {
            let cx = if i == 0 || i == nx {
                T::half()
            } else {
                T::one()
            };
            wave_w[grid.node(i, j)] = hx * hy * cx * cy;
        }
    }
    let mut bnd_w = vec![T::zero(); grid.boundary_len()];
    for i in 0..=n0 {
        let d = if i == 0 || i == n0 {
            T::half()
        } else {
            T::one()
        };
        bnd_w[i] = h0 * d;
    }

    let m_gamma_lu = if gamma > T::zero() {
        let nb = grid.beam_len();
        let ih2 = T::one() / (h0 * h0);
        let mut m = BandedMatrix::zeros(nb, 1, 1);
        for k in 0..nb {
            m.add(k, k, T::one() + gamma * T::two() * ih2);
            if k > 0 {
                m.add(k, k - 1, -gamma * ih2);
            }
            if k + 1 < nb {
                m.add(k, k + 1, -gamma * ih2);
            }
        }
        Some(m.factor().map_err(|source| OperatorError::Solver {
            source,
            residual: f64::NAN,
        })?)
    } else {
        None
    };

    Ok(DiscreteOperators {
        grid,
        mu,
        gamma,
        wave_w,
        bnd_w,
        m_gamma_lu,
    })
}

impl<T: Scalar> DiscreteOperators<T> {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn wave_weights(&self) -> &[T] {
        &self.wave_w
    }

    pub fn boundary_weights(&self) -> &[T] {
        &self.bnd_w
    }

    // ---- wave operator -------------------------------------------------

    /// `out = (-Δ_h + μ) z` with reflected ghost nodes on all of Γ.
    pub fn apply_a_wave(&self, z: &[T], out: &mut [T]) {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let ihx2 = T::one() / (g.hx::<T>() * g.hx::<T>());
        let ihy2 = T::one() / (g.hy::<T>() * g.hy::<T>());
        let row = nx + 1;
        debug_assert_eq!(z.len(), g.wave_len());
        debug_assert_eq!(out.len(), g.wave_len());
        for j in 0..=ny {
            let base = j * row;
            for i in 0..=nx {
                let n = base + i;
                let zc = z[n];
                let zw = if i == 0 { z[n + 1] } else { z[n - 1] };
                let ze = if i == nx { z[n - 1] } else { z[n + 1] };
                let zs = if j == 0 { z[n + row] } else { z[n - row] };
                let zn = if j == ny { z[n - row] } else { z[n + row] };
                out[n] = (T::two() * zc - zw - ze) * ihx2
                    + (T::two() * zc - zs - zn) * ihy2
                    + self.mu * zc;
            }
        }
    }

    /// Banded matrix of `c0·I + c1·A_wave + diag(extra)` in node space.
    pub fn wave_system_matrix(&self, c0: T, c1: T, extra_diag: Option<&[T]>) -> BandedMatrix<T> {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let row = nx + 1;
        let ihx2 = T::one() / (g.hx::<T>() * g.hx::<T>());
        let ihy2 = T::one() / (g.hy::<T>() * g.hy::<T>());
        let mut m = BandedMatrix::zeros(g.wave_len(), row, row);
        for j in 0..=ny {
            for i in 0..=nx {
                let n = g.node(i, j);
                let mut diag = c0 + c1 * (self.mu + T::two() * ihx2 + T::two() * ihy2);
                if let Some(d) = extra_diag {
                    diag = diag + d[n];
                }
                m.add(n, n, diag);
                let cw = if i == 0 || i == nx {
                    -T::two() * ihx2
                } else {
                    -ihx2
                };
                if i == 0 {
                    m.add(n, n + 1, c1 * cw);
                } else if i == nx {
                    m.add(n, n - 1, c1 * cw);
                } else {
                    m.add(n, n - 1, c1 * cw);
                    m.add(n, n + 1, c1 * cw);
                }
                let cv = if j == 0 || j == ny {
                    -T::two() * ihy2
                } else {
                    -ihy2
                };
                if j == 0 {
                    m.add(n, n + row, c1 * cv);
                } else if j == ny {
                    m.add(n, n - row, c1 * cv);
                } else {
                    m.add(n, n - row, c1 * cv);
                    m.add(n, n + row, c1 * cv);
                }
            }
        }
        m
    }

    /// Discrete eigenvalue of `A_wave` for the mode `cos(kπx)cos(lπy)`.
    pub fn wave_eigenvalue(&self, k: usize, l: usize) -> T {
        let g = &self.grid;
        let (hx, hy) = (g.hx::<T>(), g.hy::<T>());
        let sx = T::two() / (hx * hx) * (T::one() - (T::of(k as f64) * T::PI() * hx).cos());
        let sy = T::two() / (hy * hy) * (T::one() - (T::of(l as f64) * T::PI() * hy).cos());
        self.mu + sx + sy
    }

    /// Mode `cos(kπx)cos(lπy)` normalized to unit weighted L² norm.
    pub fn wave_mode(&self, k: usize, l: usize) -> WaveField<T> {
        let g = &self.grid;
        let nrm_x = if k == 0 || k == g.nx() {
            T::one()
        } else {
            T::half()
        };
        let nrm_y = if l == 0 || l == g.ny() {
            T::one()
        } else {
            T::half()
        };
        let scale = T::one() / (nrm_x * nrm_y).sqrt();
        let mut f = WaveField::zeros(g.wave_len());
        for j in 0..=g.ny() {
            let cy = (T::of(l as f64) * T::PI() * g.node_y::<T>(j)).cos();
            for i in 0..=g.nx() {
                let cx = (T::of(k as f64) * T::PI() * g.node_x::<T>(i)).cos();
                f.0[g.node(i, j)] = scale * cx * cy;
            }
        }
        f
    }

    // ---- beam operators ------------------------------------------------

    /// `out = A_beam v` (three-point Dirichlet Laplacian).
    pub fn apply_beam_t(&self, v: &[T], out: &mut [T]) {
        let nb = self.grid.beam_len();
        debug_assert_eq!(v.len(), nb);
        debug_assert_eq!(out.len(), nb);
        let h0 = self.grid.h0::<T>();
        let ih2 = T::one() / (h0 * h0);
        for k in 0..nb {
            let vm = if k == 0 { T::zero() } else { v[k - 1] };
            let vp = if k + 1 == nb { T::zero() } else { v[k + 1] };
            out[k] = (T::two() * v[k] - vm - vp) * ih2;
        }
    }

    /// `out = A_beam² v` — the hinged biharmonic.
    pub fn apply_beam_t2(&self, v: &[T], out: &mut [T], scratch: &mut [T]) {
        self.apply_beam_t(v, scratch);
        self.apply_beam_t(scratch, out);
    }

    /// `out = (I + γ A_beam) v`.
    pub fn apply_m_gamma(&self, v: &[T], out: &mut [T]) {
        self.apply_beam_t(v, out);
        for k in 0..v.len() {
            out[k] = v[k] + self.gamma * out[k];
        }
    }

    /// `out = M_γ (a - b)` without forming the difference separately.
    pub fn apply_m_gamma_diff(&self, a: &[T], b: &[T], out: &mut [T]) {
        let nb = self.grid.beam_len();
        debug_assert!(a.len() == nb && b.len() == nb && out.len() == nb);
        let h0 = self.grid.h0::<T>();
        let ih2 = T::one() / (h0 * h0);
        for k in 0..nb {
            let d = a[k] - b[k];
            let dm = if k == 0 {
                T::zero()
            } else {
                a[k - 1] - b[k - 1]
            };
            let dp = if k + 1 == nb {
                T::zero()
            } else {
                a[k + 1] - b[k + 1]
            };
            out[k] = d + self.gamma * (T::two() * d - dm - dp) * ih2;
        }
    }

    /// Solve `M_γ x = rhs` in place. Identity when γ = 0.
    pub fn solve_m_gamma(&self, rhs: &mut [T]) -> Result<(), OperatorError> {
        if let Some(lu) = &self.m_gamma_lu {
            lu.solve(rhs).map_err(|source| OperatorError::Solver {
                source,
                residual: f64::NAN,
            })?;
        }
        Ok(())
    }

    /// Discrete eigenvalue `λ_k = (2/h0²)(1 - cos(kπh0))` of `A_beam`.
    pub fn beam_eigenvalue(&self, k: usize) -> T {
        let h0 = self.grid.h0::<T>();
        T::two() / (h0 * h0) * (T::one() - (T::of(k as f64) * T::PI() * h0).cos())
    }

    pub fn beam_eigenvalue_max(&self) -> T {
        self.beam_eigenvalue(self.grid.n0() - 1)
    }

    /// Mode `sin(kπx)` normalized to unit beam L² norm.
    pub fn beam_mode(&self, k: usize) -> BeamField<T> {
        let g = &self.grid;
        // ||sin(kπx)||² = 1/2 under the interior-node quadrature
        let scale = T::two().sqrt();
        BeamField::from_fn(g.beam_len(), |i| {
            scale * (T::of(k as f64) * T::PI() * g.beam_x::<T>(i)).sin()
        })
    }

    // ---- coupling ------------------------------------------------------

    /// Restriction of a wave field to the wall nodes: the boundary-trace
    /// side of the coupling pair.
    pub fn trace(&self, z: &[T]) -> BoundaryField<T> {
        let g = &self.grid;
        BoundaryField(z[..=g.nx()].to_vec())
    }

    /// Restriction to the interior wall nodes only.
    pub fn trace_interior(&self, z: &[T]) -> BeamField<T> {
        BeamField(z[1..self.grid.nx()].to_vec())
    }

    /// Load field imposing the inhomogeneous Neumann flux `phi` on Γ₀; exact
    /// adjoint of [`DiscreteOperators::trace`] under the discrete inner
    /// products.
    pub fn flux_inject(&self, phi: &BoundaryField<T>) -> WaveField<T> {
        let g = &self.grid;
        debug_assert_eq!(phi.len(), g.boundary_len());
        let mut out = WaveField::zeros(g.wave_len());
        let c = T::two() / g.hy::<T>();
        for i in 0..=g.nx() {
            out.0[i] = c * phi[i];
        }
        out
    }

    /// Flux injection of a beam field (zero end values).
    pub fn flux_inject_beam(&self, v: &BeamField<T>) -> WaveField<T> {
        let g = &self.grid;
        debug_assert_eq!(v.len(), g.beam_len());
        let mut out = WaveField::zeros(g.wave_len());
        let c = T::two() / g.hy::<T>();
        for k in 0..g.beam_len() {
            out.0[k + 1] = c * v[k];
        }
        out
    }

    /// Solve `A_wave ψ = flux_inject(phi)`: the discrete Neumann map `N₀`.
    /// Testing utility only — the simulator couples through `flux_inject`.
    pub fn neumann_map_solve(&self, phi: &BoundaryField<T>) -> Result<WaveField<T>, OperatorError> {
        let rhs = self.flux_inject(phi);
        let lu = self
            .wave_system_matrix(T::zero(), T::one(), None)
            .factor()
            .map_err(|source| OperatorError::Solver {
                source,
                residual: f64::NAN,
            })?;
        let mut psi = rhs.0.clone();
        lu.solve(&mut psi).map_err(|source| OperatorError::Solver {
            source,
            residual: f64::NAN,
        })?;
        // residual check
        let psi = WaveField(psi);
        let mut az = vec![T::zero(); psi.len()];
        self.apply_a_wave(&psi, &mut az);
        let mut res = T::zero();
        for n in 0..az.len() {
            res = res.max((az[n] - rhs[n]).abs());
        }
        let scale = T::one() + self.norm_wave(&rhs);
        if !(res / scale < T::of(1e-8)) {
            return Err(OperatorError::Solver {
                source: LinalgError::Dimension {
                    expected: 0,
                    got: 0,
                },
                residual: (res / scale).to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(psi)
    }

    // ---- inner products ------------------------------------------------

    /// Weighted chamber inner product `(u, w)_Ω,h`.
    pub fn dot_wave(&self, a: &[T], b: &[T]) -> T {
        weighted_dot(a, b, &self.wave_w)
    }

    pub fn norm_wave(&self, a: &[T]) -> T {
        self.dot_wave(a, a).max(T::zero()).sqrt()
    }

    /// Beam inner product `h0 Σ u_j w_j` over interior nodes.
    pub fn dot_beam(&self, a: &[T], b: &[T]) -> T {
        let h0 = self.grid.h0::<T>();
        crate::num::dot(a, b) * h0
    }

    pub fn norm_beam(&self, a: &[T]) -> T {
        self.dot_beam(a, a).max(T::zero()).sqrt()
    }

    /// Wall inner product with trapezoid weights.
    pub fn dot_boundary(&self, a: &[T], b: &[T]) -> T {
        weighted_dot(a, b, &self.bnd_w)
    }

    /// `(A_wave z, z)_Ω,h = ||A^{1/2} z||²`.
    pub fn a_wave_energy(&self, z: &[T]) -> T {
        let mut az = vec![T::zero(); z.len()];
        self.apply_a_wave(z, &mut az);
        self.dot_wave(&az, z)
    }

    /// `(A_beam v, v)_b = ||𝓐^{1/2} v||²` (the squared wall gradient norm).
    pub fn beam_grad_energy(&self, v: &[T]) -> T {
        let mut tv = vec![T::zero(); v.len()];
        self.apply_beam_t(v, &mut tv);
        self.dot_beam(&tv, v)
    }
}
