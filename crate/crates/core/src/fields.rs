//! Smooth test fields with exact reflection parity.

use crate::algebra::LieAlgebraSpec;
use crate::boundary::{apply_boundary, BoundarySpec};
use crate::form::{components, KForm};
use crate::grid::GridSpec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomFieldSpec {
    pub amplitude: f64,
    /// Mode numbers per axis run over 0..=max_mode.
    pub max_mode: usize,
    pub seed: u64,
}

struct Term {
    comp: usize,
    alg_index: usize,
    modes: [usize; 3],
    odd: [bool; 3],
    coeff: f64,
}

/// Sum of separable cosine/sine modes whose parity on every face matches `bc`,
/// so the reflection fill is exact. Ghosts are filled on return.
pub fn random_smooth(
    degree: usize,
    grid: GridSpec,
    alg: LieAlgebraSpec,
    bc: BoundarySpec,
    spec: RandomFieldSpec,
) -> KForm {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut terms = Vec::new();
    for (comp, multi) in components(degree).iter().enumerate() {
        let odd = [
            bc.is_odd(degree, multi, 0),
            bc.is_odd(degree, multi, 1),
            bc.is_odd(degree, multi, 2),
        ];
        for a in 0..alg.dim {
            for k2 in 0..=spec.max_mode {
                for k1 in 0..=spec.max_mode {
                    for k0 in 0..=spec.max_mode {
                        let modes = [k0, k1, k2];
                        if (0..3).any(|q| odd[q] && modes[q] == 0) {
                            continue;
                        }
                        let weight = 1.0 / (1.0 + (k0 * k0 + k1 * k1 + k2 * k2) as f64);
                        let coeff = spec.amplitude * weight * rng.gen_range(-1.0..1.0);
                        terms.push(Term { comp, alg_index: a, modes, odd, coeff });
                    }
                }
            }
        }
    }
    let mut w = KForm::from_fn(degree, grid, alg, |c, x| {
        let mut v = [0.0; 3];
        for t in terms.iter().filter(|t| t.comp == c) {
            let mut p = t.coeff;
            for q in 0..3 {
                let arg = PI * t.modes[q] as f64 * x[q] / grid.extents[q];
                p *= if t.odd[q] { arg.sin() } else { arg.cos() };
            }
            v[t.alg_index] += p;
        }
        v
    });
    apply_boundary(&mut w, bc);
    w
}

/// Divergence-free Neumann 1-form in the x-y plane, from the stream function
/// ψ = a·sin(πx/L₁)sin(πy/L₂); values placed in algebra index 0.
pub fn coulomb_cosine_mode(grid: GridSpec, alg: LieAlgebraSpec, amplitude: f64) -> KForm {
    let (l0, l1) = (grid.extents[0], grid.extents[1]);
    let mut w = KForm::from_fn(1, grid, alg, |c, x| {
        let (sx, cx) = (PI * x[0] / l0).sin_cos();
        let (sy, cy) = (PI * x[1] / l1).sin_cos();
        let v = match c {
            0 => amplitude * (PI / l1) * sx * cy,
            1 => -amplitude * (PI / l0) * cx * sy,
            _ => 0.0,
        };
        [v, 0.0, 0.0]
    });
    apply_boundary(&mut w, crate::BoundaryKind::Neumann.into());
    w
}

/// Eigenvalue of [`coulomb_cosine_mode`] under the continuum Neumann Laplacian.
pub fn coulomb_cosine_eigenvalue(grid: &GridSpec) -> f64 {
    (PI / grid.extents[0]).powi(2) + (PI / grid.extents[1]).powi(2)
}
