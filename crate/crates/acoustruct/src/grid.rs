//! Grids and field containers.
//!
//! The chamber is the unit square discretized by an `(nx+1) × (ny+1)` tensor
//! node grid; the elastic wall is the bottom edge `y = 0`, shared with the
//! beam grid (`n0 = nx` cells). Beam unknowns live on the interior wall nodes
//! only, since displacement, bending moment and temperature all vanish at the
//! wall ends.

use serde::{Deserialize, Serialize};
use std::ops::{Deref, DerefMut};
use thiserror::Error;

use crate::num::Scalar;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("cell counts must be at least 8, got nx={nx}, ny={ny}")]
    TooCoarse { nx: usize, ny: usize },
}

/// Tensor grid on `Ω = [0,1]²` plus the shared wall grid on `Γ₀ = [0,1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    nx: usize,
    ny: usize,
    n0: usize,
}

impl GridSpec {
    /// `n0` is tied to `nx` so the wave bottom row and the beam share nodes.
    pub fn new(nx: usize, ny: usize) -> Result<Self, GridError> {
        if nx < 8 || ny < 8 {
            return Err(GridError::TooCoarse { nx, ny });
        }
        Ok(GridSpec { nx, ny, n0: nx })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn hx<T: Scalar>(&self) -> T {
        T::one() / T::of(self.nx as f64)
    }

    pub fn hy<T: Scalar>(&self) -> T {
        T::one() / T::of(self.ny as f64)
    }

    pub fn h0<T: Scalar>(&self) -> T {
        T::one() / T::of(self.n0 as f64)
    }

    /// Number of wave nodes.
    pub fn wave_len(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    /// Number of interior beam nodes.
    pub fn beam_len(&self) -> usize {
        self.n0 - 1
    }

    /// Number of wall nodes including the ends.
    pub fn boundary_len(&self) -> usize {
        self.n0 + 1
    }

    /// Flat index of wave node `(i, j)`; the bottom row is `j = 0`.
    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn node_x<T: Scalar>(&self, i: usize) -> T {
        T::of(i as f64) * self.hx::<T>()
    }

    pub fn node_y<T: Scalar>(&self, j: usize) -> T {
        T::of(j as f64) * self.hy::<T>()
    }

    /// Coordinate of interior beam node `k` (zero-based, `x = (k+1)·h0`).
    pub fn beam_x<T: Scalar>(&self, k: usize) -> T {
        T::of((k + 1) as f64) * self.h0::<T>()
    }
}

macro_rules! field_type {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name<T>(pub Vec<T>);

        impl<T: Scalar> $name<T> {
            pub fn zeros(len: usize) -> Self {
                $name(vec![T::zero(); len])
            }

            pub fn from_fn(len: usize, f: impl FnMut(usize) -> T) -> Self {
                $name((0..len).map(f).collect())
            }

            pub fn constant(len: usize, c: T) -> Self {
                $name(vec![c; len])
            }

            /// `self += a * x`
            pub fn axpy(&mut self, a: T, x: &Self) {
                debug_assert_eq!(self.0.len(), x.0.len());
                for (s, &v) in self.0.iter_mut().zip(x.0.iter()) {
                    *s = *s + a * v;
                }
            }

            pub fn scale(&mut self, a: T) {
                for s in self.0.iter_mut() {
                    *s = *s * a;
                }
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|v| v.is_finite())
            }
        }

        impl<T> Deref for $name<T> {
            type Target = [T];
            fn deref(&self) -> &[T] {
                &self.0
            }
        }

        impl<T> DerefMut for $name<T> {
            fn deref_mut(&mut self) -> &mut [T] {
                &mut self.0
            }
        }
    };
}

field_type!(
    /// Scalar field on the wave nodes, stored row-major by `y`.
    WaveField
);
field_type!(
    /// Scalar field on the interior beam nodes (hinged/Dirichlet ends).
    BeamField
);
field_type!(
    /// Scalar field on all wall nodes of `Γ₀`, ends included.
    BoundaryField
);

impl<T: Scalar> BeamField<T> {
    /// Embed into a wall field with zero end values.
    pub fn to_boundary(&self, grid: &GridSpec) -> BoundaryField<T> {
        debug_assert_eq!(self.0.len(), grid.beam_len());
        let mut out = BoundaryField::zeros(grid.boundary_len());
        out.0[1..grid.n0()].copy_from_slice(&self.0);
        out
    }
}

impl<T: Scalar> BoundaryField<T> {
    /// Restrict to the interior beam nodes.
    pub fn to_beam(&self, grid: &GridSpec) -> BeamField<T> {
        debug_assert_eq!(self.0.len(), grid.boundary_len());
        BeamField(self.0[1..grid.n0()].to_vec())
    }
}
