//! Spectral transforms in the exact discrete eigenbases.
//!
//! The reflected-Neumann wave operator diagonalizes in the tensor cosine
//! basis and the Dirichlet beam operator in the sine basis, with closed-form
//! eigenvalues, so fractional-power norms (`H^{1-δ}` on the chamber,
//! `H^{2-δ}` on the wall) reduce to eigenvalue-weighted coefficient sums.
//! The transforms are separable; no FFT is needed at these grid sizes.

use crate::grid::{BeamField, WaveField};
use crate::num::Scalar;
use crate::operators::DiscreteOperators;

/// Precomputed 1-D transform tables for one grid.
pub struct SpectralBasis<T> {
    nx: usize,
    ny: usize,
    nb: usize,
    /// `matx[k][i] = wx_i · φ̂_k(x_i)` — weighted normalized cosine rows.
    matx: Vec<T>,
    maty: Vec<T>,
    /// `mats[k][j] = h0 · ŝ_k(x_j)` — weighted normalized sine rows.
    mats: Vec<T>,
    /// Wave eigenvalues `λ_{kl}` indexed `l·(nx+1)+k`.
    wave_eigs: Vec<T>,
    beam_eigs: Vec<T>,
}

impl<T: Scalar> SpectralBasis<T> {
    pub fn new(ops: &DiscreteOperators<T>) -> Self {
        let g = ops.grid();
        let (nx, ny, nb) = (g.nx(), g.ny(), g.beam_len());
        let hx = g.hx::<T>();
        let hy = g.hy::<T>();
        let h0 = g.h0::<T>();

        let cos_table = |n: usize, h: T| -> Vec<T> {
            let mut m = vec![T::zero(); (n + 1) * (n + 1)];
            for k in 0..=n {
                let nrm = if k == 0 || k == n {
                    T::one()
                } else {
                    T::half()
                };
                let scale = T::one() / nrm.sqrt();
                for i in 0..=n {
                    let w = if i == 0 || i == n {
                        T::half()
                    } else {
                        T::one()
                    } * h;
                    let x = T::of(i as f64) * h;
                    m[k * (n + 1) + i] = w * scale * (T::of(k as f64) * T::PI() * x).cos();
                }
            }
            m
        };
        let matx = cos_table(nx, hx);
        let maty = cos_table(ny, hy);

        let mut mats = vec![T::zero(); nb * nb];
        let scale = T::two().sqrt();
        for k in 0..nb {
            for j in 0..nb {
                let x = T::of((j + 1) as f64) * h0;
                mats[k * nb + j] = h0 * scale * (T::of((k + 1) as f64) * T::PI() * x).sin();
            }
        }

        let mut wave_eigs = vec![T::zero(); (nx + 1) * (ny + 1)];
        for l in 0..=ny {
            for k in 0..=nx {
                wave_eigs[l * (nx + 1) + k] = ops.wave_eigenvalue(k, l);
            }
        }
        let beam_eigs = (1..=nb).map(|k| ops.beam_eigenvalue(k)).collect();

        SpectralBasis {
            nx,
            ny,
            nb,
            matx,
            maty,
            mats,
            wave_eigs,
            beam_eigs,
        }
    }

    pub fn wave_eigenvalues(&self) -> &[T] {
        &self.wave_eigs
    }

    pub fn beam_eigenvalues(&self) -> &[T] {
        &self.beam_eigs
    }

    /// Coefficients of `z` in the orthonormal cosine basis, indexed
    /// `l·(nx+1)+k`. Parseval: `Σ ĉ² = (z, z)_Ω,h`.
    pub fn wave_coeffs(&self, z: &WaveField<T>) -> Vec<T> {
        let (nx, ny) = (self.nx, self.ny);
        // x-transform per row, then y-transform per mode column
        let mut partial = vec![T::zero(); (nx + 1) * (ny + 1)]; // [j][k]
        for j in 0..=ny {
            let row = &z[j * (nx + 1)..(j + 1) * (nx + 1)];
            for k in 0..=nx {
                let tab = &self.matx[k * (nx + 1)..(k + 1) * (nx + 1)];
                let mut s = T::zero();
                for i in 0..=nx {
                    s = s + tab[i] * row[i];
                }
                partial[j * (nx + 1) + k] = s;
            }
        }
        let mut coeffs = vec![T::zero(); (nx + 1) * (ny + 1)];
        for l in 0..=ny {
            let tab = &self.maty[l * (ny + 1)..(l + 1) * (ny + 1)];
            for k in 0..=nx {
                let mut s = T::zero();
                for j in 0..=ny {
                    s = s + tab[j] * partial[j * (nx + 1) + k];
                }
                coeffs[l * (nx + 1) + k] = s;
            }
        }
        coeffs
    }

    /// Coefficients of `v` in the orthonormal sine basis.
    pub fn beam_coeffs(&self, v: &BeamField<T>) -> Vec<T> {
        let nb = self.nb;
        let mut coeffs = vec![T::zero(); nb];
        for k in 0..nb {
            let tab = &self.mats[k * nb..(k + 1) * nb];
            let mut s = T::zero();
            for j in 0..nb {
                s = s + tab[j] * v[j];
            }
            coeffs[k] = s;
        }
        coeffs
    }

    /// `||A^{σ/2} z||²  = Σ λ_{kl}^σ ĉ_{kl}²` — the discrete `H^σ(Ω)` norm
    /// squared (σ = 1 recovers `||A^{1/2}z||²`).
    pub fn wave_frac_norm_sq(&self, z: &WaveField<T>, sigma: T) -> T {
        self.wave_coeffs(z)
            .iter()
            .zip(self.wave_eigs.iter())
            .map(|(&c, &lam)| lam.powf(sigma) * c * c)
            .sum()
    }

    /// `||𝓐^{σ/2} v||² = Σ λ_k^σ v̂_k²` — the discrete `H^σ(Γ₀)` norm squared.
    pub fn beam_frac_norm_sq(&self, v: &BeamField<T>, sigma: T) -> T {
        self.beam_coeffs(v)
            .iter()
            .zip(self.beam_eigs.iter())
            .map(|(&c, &lam)| lam.powf(sigma) * c * c)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::operators::build_operators;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parseval_and_integer_power_consistency() {
        let ops = build_operators::<f64>(GridSpec::new(12, 10).unwrap(), 1.3, 0.0).unwrap();
        let basis = SpectralBasis::new(&ops);
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let z = WaveField::from_fn(ops.grid().wave_len(), |_| rng.gen_range(-1.0..1.0));

        let coeffs = basis.wave_coeffs(&z);
        let parseval: f64 = coeffs.iter().map(|c| c * c).sum();
        let direct = ops.dot_wave(&z, &z);
        assert!((parseval - direct).abs() < 1e-10 * direct.max(1.0));

        // σ = 1 equals the quadratic form of A_wave
        let h1 = basis.wave_frac_norm_sq(&z, 1.0);
        let aq = ops.a_wave_energy(&z);
        assert!((h1 - aq).abs() < 1e-8 * aq.max(1.0));

        let v = BeamField::from_fn(ops.grid().beam_len(), |_| rng.gen_range(-1.0..1.0));
        let bc = basis.beam_coeffs(&v);
        let pv: f64 = bc.iter().map(|c| c * c).sum();
        assert!((pv - ops.dot_beam(&v, &v)).abs() < 1e-11);
        let h2 = basis.beam_frac_norm_sq(&v, 2.0);
        let mut tv = vec![0.0; v.len()];
        ops.apply_beam_t(&v, &mut tv);
        let direct2 = ops.dot_beam(&tv, &tv);
        assert!((h2 - direct2).abs() < 1e-7 * direct2.max(1.0));
    }

    #[test]
    fn fractional_norm_interpolates() {
        let ops = build_operators::<f64>(GridSpec::new(16, 16).unwrap(), 1.0, 0.0).unwrap();
        let basis = SpectralBasis::new(&ops);
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let z = WaveField::from_fn(ops.grid().wave_len(), |_| rng.gen_range(-1.0..1.0));
        let n0 = basis.wave_frac_norm_sq(&z, 0.0);
        let nh = basis.wave_frac_norm_sq(&z, 0.75);
        let n1 = basis.wave_frac_norm_sq(&z, 1.0);
        assert!(n0 <= nh && nh <= n1, "{n0} {nh} {n1}");
    }
}
