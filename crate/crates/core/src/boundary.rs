//! Ghost-layer fill by reflection parity.
//!
//! A component is *normal* to a face when its multi-index contains the face's
//! axis. Odd components vanish on the face and are mirrored with a sign flip.
//! Axes are filled in order x, y, z over the full ghosted range, so edge and
//! corner ghosts receive the product parity.

use crate::form::{components, KForm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
    Marini,
}

impl BoundaryKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryKind::Dirichlet => "dirichlet",
            BoundaryKind::Neumann => "neumann",
            BoundaryKind::Marini => "marini",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundarySpec {
    pub kind: BoundaryKind,
}

impl From<BoundaryKind> for BoundarySpec {
    fn from(kind: BoundaryKind) -> Self {
        BoundarySpec { kind }
    }
}

impl BoundarySpec {
    /// True when component `multi` of a `degree`-form is odd across faces normal to `axis`.
    pub fn is_odd(&self, degree: usize, multi: &[usize], axis: usize) -> bool {
        let normal = multi.contains(&axis);
        match self.kind {
            BoundaryKind::Neumann => normal,
            BoundaryKind::Dirichlet => !normal,
            BoundaryKind::Marini => degree != 1 && normal,
        }
    }
}

/// Fills the ghost layer of `w` and zeroes odd components on face nodes.
pub fn apply_boundary(w: &mut KForm, bc: BoundarySpec) {
    let g = w.grid;
    let d = w.alg.dim;
    let n = g.nodes;
    for axis in 0..3 {
        let (a1, a2) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let st = g.stride(axis);
        let last = n[axis] as isize - 1;
        for (c, multi) in components(w.degree).iter().enumerate() {
            let odd = bc.is_odd(w.degree, multi, axis);
            let s = if odd { -1.0 } else { 1.0 };
            for q in -1..=n[a2] as isize {
                for p in -1..=n[a1] as isize {
                    let mut ix = [0isize; 3];
                    ix[a1] = p;
                    ix[a2] = q;
                    ix[axis] = 0;
                    let lo = g.idx(ix[0], ix[1], ix[2]);
                    ix[axis] = last;
                    let hi = g.idx(ix[0], ix[1], ix[2]);
                    for a in 0..d {
                        let face_lo = w.offset(c, lo) + a;
                        let face_hi = w.offset(c, hi) + a;
                        let in_lo = w.offset(c, lo + st) + a;
                        let in_hi = w.offset(c, hi - st) + a;
                        let gh_lo = w.offset(c, lo - st) + a;
                        let gh_hi = w.offset(c, hi + st) + a;
                        if odd {
                            w.data[face_lo] = 0.0;
                            w.data[face_hi] = 0.0;
                        }
                        w.data[gh_lo] = s * w.data[in_lo];
                        w.data[gh_hi] = s * w.data[in_hi];
                    }
                }
            }
        }
    }
    w.set_ghosts(Some(bc.kind));
}

/// Owned variant of [`apply_boundary`].
pub fn with_boundary(mut w: KForm, bc: BoundarySpec) -> KForm {
    apply_boundary(&mut w, bc);
    w
}

/// Largest face value of a component that the boundary condition forces to zero.
pub fn constraint_violation(w: &KForm, bc: BoundarySpec) -> f64 {
    let g = w.grid;
    let mut worst: f64 = 0.0;
    for (c, multi) in components(w.degree).iter().enumerate() {
        g.for_each_real(|i, j, k| {
            let ix = [i, j, k];
            let on_odd_face = (0..3).any(|axis| {
                (ix[axis] == 0 || ix[axis] + 1 == g.nodes[axis]) && bc.is_odd(w.degree, multi, axis)
            });
            if on_odd_face {
                let node = g.idx(i as isize, j as isize, k as isize);
                for v in w.at(c, node) {
                    worst = worst.max(v.abs());
                }
            }
        });
    }
    worst
}
