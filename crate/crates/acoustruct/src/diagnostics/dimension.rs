//! Box-counting dimension of projected state samples.
//!
//! States are projected onto the leading coordinates of a fixed orthogonal
//! basis (low wave/beam modes, weighted so the full coordinate sum equals the
//! squared Y-norm), then covered by dyadic boxes; the dimension estimate is
//! the log-log slope of the cover counts over the unsaturated window.

use std::collections::HashSet;

use crate::diagnostics::DiagnosticsError;
use crate::integrator::SimState;
use crate::model::ModelParams;
use crate::num::Scalar;
use crate::operators::DiscreteOperators;

#[derive(Clone, Debug)]
pub struct DimensionEstimate<T> {
    /// Box sizes, ascending.
    pub epsilons: Vec<T>,
    /// Cover counts `N(M, ε)`, non-increasing in ε.
    pub counts: Vec<usize>,
    pub slope: T,
    pub slope_stderr: T,
    pub projection: String,
}

enum Component {
    Z,
    Zt,
    V,
    Vt,
    Theta,
}

/// Project states onto `dim` Y-weighted leading basis coordinates.
pub fn project_states<T: Scalar>(
    sample: &[SimState<T>],
    dim: usize,
    params: &ModelParams<T>,
    ops: &DiscreteOperators<T>,
) -> (Vec<Vec<T>>, String) {
    let g = ops.grid();
    // wave modes sorted by eigenvalue
    let mut wave_modes: Vec<(usize, usize)> = (0..=g.ny())
        .flat_map(|l| (0..=g.nx()).map(move |k| (k, l)))
        .collect();
    wave_modes.sort_by(|a, b| {
        ops.wave_eigenvalue(a.0, a.1)
            .partial_cmp(&ops.wave_eigenvalue(b.0, b.1))
            .unwrap()
            .then(a.cmp(b))
    });

    // coordinate schedule: cycle the five components through their mode ladders
    let cycle = [
        Component::Z,
        Component::Zt,
        Component::V,
        Component::Vt,
        Component::Theta,
    ];
    let mut coords = Vec::with_capacity(dim);
    let mut wave_rank = [0usize; 2];
    let mut beam_rank = [0usize; 3];
    let mut turn = 0usize;
    while coords.len() < dim {
        let comp = &cycle[turn % 5];
        turn += 1;
        match comp {
            Component::Z | Component::Zt => {
                let slot = matches!(comp, Component::Zt) as usize;
                let (k, l) = wave_modes[wave_rank[slot] % wave_modes.len()];
                wave_rank[slot] += 1;
                let mode = ops.wave_mode(k, l);
                let lam = ops.wave_eigenvalue(k, l);
                let weight = match comp {
                    Component::Z => (params.beta * lam).sqrt(),
                    _ => params.beta.sqrt(),
                };
                coords.push((comp_tag(comp), mode.0, weight));
            }
            Component::V | Component::Vt | Component::Theta => {
                let slot = match comp {
                    Component::V => 0,
                    Component::Vt => 1,
                    _ => 2,
                };
                let k = beam_rank[slot] % g.beam_len() + 1;
                beam_rank[slot] += 1;
                let mode = ops.beam_mode(k);
                let lam = ops.beam_eigenvalue(k);
                let weight = match comp {
                    Component::V => params.alpha.sqrt() * lam,
                    Component::Vt => (params.alpha * (T::one() + params.gamma * lam)).sqrt(),
                    _ => params.alpha.sqrt(),
                };
                coords.push((comp_tag(comp), mode.0, weight));
            }
        }
    }

    let desc = format!(
        "{} leading Y-weighted coordinates over interleaved (z, z_t, v, v_t, theta) low modes",
        dim
    );
    let points = sample
        .iter()
        .map(|s| {
            coords
                .iter()
                .map(|(tag, mode, weight)| {
                    let dot = match tag {
                        0 => ops.dot_wave(&s.z, mode),
                        1 => ops.dot_wave(&s.zt, mode),
                        2 => ops.dot_beam(&s.v, mode),
                        3 => ops.dot_beam(&s.vt, mode),
                        _ => ops.dot_beam(&s.theta, mode),
                    };
                    *weight * dot
                })
                .collect()
        })
        .collect();
    (points, desc)
}

fn comp_tag(c: &Component) -> u8 {
    match c {
        Component::Z => 0,
        Component::Zt => 1,
        Component::V => 2,
        Component::Vt => 3,
        Component::Theta => 4,
    }
}

/// Box-count a point cloud over a dyadic ε ladder and fit the dimension.
pub fn box_counting_dimension<T: Scalar>(points: &[Vec<T>]) -> (Vec<T>, Vec<usize>, T, T) {
    let n = points.len();
    let dim = points.first().map(|p| p.len()).unwrap_or(0);
    let mut lo = vec![T::infinity(); dim];
    let mut hi = vec![T::neg_infinity(); dim];
    for p in points {
        for (d, &x) in p.iter().enumerate() {
            lo[d] = lo[d].min(x);
            hi[d] = hi[d].max(x);
        }
    }
    let mut extent = T::zero();
    for d in 0..dim {
        extent = extent.max(hi[d] - lo[d]);
    }
    if !(extent > T::of(1e-12)) {
        // a cloud of coincident points covers with a single box at every scale
        return (vec![T::one()], vec![1], T::zero(), T::zero());
    }

    let mut epsilons = Vec::new();
    let mut counts = Vec::new();
    let mut eps = extent * T::of(1.0 + 1e-9);
    for _ in 0..26 {
        let mut boxes: HashSet<Vec<i64>> = HashSet::new();
        for p in points {
            let key: Vec<i64> = p
                .iter()
                .enumerate()
                .map(|(d, &x)| ((x - lo[d]) / eps).floor().to_f64().unwrap_or(0.0) as i64)
                .collect();
            boxes.insert(key);
        }
        let c = boxes.len();
        epsilons.push(eps);
        counts.push(c);
        if c * 2 > n {
            break;
        }
        eps = eps * T::half();
    }
    // ascending ε with non-increasing counts
    epsilons.reverse();
    counts.reverse();

    // scaling window: drop saturated ends
    let window: Vec<usize> = (0..counts.len())
        .filter(|&i| counts[i] >= 8 && counts[i] * 8 <= n)
        .collect();
    let window = if window.len() >= 2 {
        window
    } else {
        (0..counts.len())
            .filter(|&i| counts[i] >= 2 && counts[i] * 2 <= n)
            .collect()
    };
    if window.len() < 2 {
        return (epsilons, counts, T::zero(), T::zero());
    }
    let xs: Vec<T> = window
        .iter()
        .map(|&i| (T::one() / epsilons[i]).ln())
        .collect();
    let ys: Vec<T> = window
        .iter()
        .map(|&i| T::of(counts[i] as f64).ln())
        .collect();
    let m = T::of(xs.len() as f64);
    let mx = xs.iter().fold(T::zero(), |a, &b| a + b) / m;
    let my = ys.iter().fold(T::zero(), |a, &b| a + b) / m;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for (&x, &y) in xs.iter().zip(ys.iter()) {
        sxx = sxx + (x - mx) * (x - mx);
        sxy = sxy + (x - mx) * (y - my);
    }
    let slope = if sxx > T::zero() {
        sxy / sxx
    } else {
        T::zero()
    };
    let mut ss_res = T::zero();
    for (&x, &y) in xs.iter().zip(ys.iter()) {
        let r = y - (my + slope * (x - mx));
        ss_res = ss_res + r * r;
    }
    let dof = (xs.len() as f64 - 2.0).max(1.0);
    let mut stderr = if sxx > T::zero() {
        (ss_res / T::of(dof) / sxx).sqrt()
    } else {
        T::zero()
    };
    // resolution floor: one count-doubling across the fitted window is the
    // smallest slope change the dyadic ladder can resolve
    let xrange = (*xs.last().unwrap() - xs[0]).abs();
    if xrange > T::zero() {
        stderr = stderr.max(T::of(std::f64::consts::LN_2) / xrange);
    }
    (epsilons, counts, slope.max(T::zero()), stderr)
}

/// Estimate the fractal (box-counting) dimension of a state sample from the
/// log-log slope of `N(M, ε)` over a dyadic ladder.
pub fn fractal_dimension<T: Scalar>(
    sample: &[SimState<T>],
    projection_dim: usize,
    params: &ModelParams<T>,
    ops: &DiscreteOperators<T>,
) -> Result<DimensionEstimate<T>, DiagnosticsError> {
    if sample.len() < 100 {
        return Err(DiagnosticsError::SampleTooSmall {
            got: sample.len(),
            need: 100,
        });
    }
    let (points, projection) = project_states(sample, projection_dim, params, ops);
    let (epsilons, counts, slope, slope_stderr) = box_counting_dimension(&points);
    Ok(DimensionEstimate {
        epsilons,
        counts,
        slope,
        slope_stderr,
        projection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BeamField, GridSpec};
    use crate::model::NonlinearitySpec;
    use crate::operators::build_operators;
    use crate::poly::OddPoly;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (DiscreteOperators<f64>, ModelParams<f64>) {
        let ops = build_operators(GridSpec::new(12, 12).unwrap(), 1.0, 0.5).unwrap();
        let p = ModelParams::new(
            1.0,
            1.0,
            0.5,
            1.0,
            10.0,
            1.0,
            BeamField::zeros(ops.grid().beam_len()),
            OddPoly::new(vec![-1.0, 1.0]),
            NonlinearitySpec::odd_poly(vec![1.0]),
        )
        .unwrap();
        (ops, p)
    }

    fn segment_states(
        ops: &DiscreteOperators<f64>,
        n: usize,
        rng: &mut ChaCha8Rng,
    ) -> Vec<SimState<f64>> {
        // direction with weight on the leading projection coordinates
        let mode = ops.wave_mode(0, 0);
        let beam = ops.beam_mode(1);
        (0..n)
            .map(|_| {
                let s: f64 = rng.gen_range(0.0..1.0);
                let mut st = SimState::zeros(ops.grid());
                st.z.axpy(s, &mode);
                st.zt.axpy(0.5 * s, &mode);
                st.v.axpy(0.25 * s, &beam);
                st
            })
            .collect()
    }

    #[test]
    fn too_small_sample_is_rejected() {
        let (ops, p) = setup();
        let sample = vec![SimState::zeros(ops.grid()); 10];
        assert!(matches!(
            fractal_dimension(&sample, 4, &p, &ops),
            Err(DiagnosticsError::SampleTooSmall { .. })
        ));
    }

    #[test]
    fn identical_points_have_dimension_zero() {
        let (ops, p) = setup();
        let sample = vec![SimState::zeros(ops.grid()); 200];
        let est = fractal_dimension(&sample, 6, &p, &ops).unwrap();
        assert_eq!(est.slope, 0.0);
    }

    #[test]
    fn segment_has_dimension_one() {
        let (ops, p) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let sample = segment_states(&ops, 10_000, &mut rng);
        let est = fractal_dimension(&sample, 8, &p, &ops).unwrap();
        assert!(
            (est.slope - 1.0).abs() <= 0.1,
            "slope {} ± {}",
            est.slope,
            est.slope_stderr
        );
        // counts non-increasing in ε
        for w in est.counts.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn planar_patch_has_dimension_two() {
        let (ops, p) = setup();
        let m1 = ops.wave_mode(0, 0);
        let b1 = ops.beam_mode(1);
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        let sample: Vec<SimState<f64>> = (0..10_000)
            .map(|_| {
                let mut st = SimState::zeros(ops.grid());
                st.z.axpy(rng.gen_range(0.0..1.0), &m1);
                st.v.axpy(rng.gen_range(0.0..1.0), &b1);
                st
            })
            .collect();
        let est = fractal_dimension(&sample, 8, &p, &ops).unwrap();
        assert!(
            (est.slope - 2.0).abs() <= 0.2,
            "slope {} ± {}",
            est.slope,
            est.slope_stderr
        );
    }
}
