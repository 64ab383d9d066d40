//! Uniform node-collocated box grid with one ghost layer.

use crate::error::{Error, Result};
use alloc::format;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub extents: [f64; 3],
    pub nodes: [usize; 3],
}

impl GridSpec {
    /// Structural validation only (n ≥ 2). Solvers demand n ≥ 8 via [`GridSpec::require_min_nodes`].
    pub fn new(extents: [f64; 3], nodes: [usize; 3]) -> Result<Self> {
        for k in 0..3 {
            if !(extents[k].is_finite() && extents[k] > 0.0) {
                return Err(Error::InvalidGrid(format!("extent {} must be positive", k)));
            }
            if nodes[k] < 2 {
                return Err(Error::InvalidGrid(format!("axis {} needs at least 2 nodes", k)));
            }
        }
        Ok(GridSpec { extents, nodes })
    }

    pub fn cube(side: f64, n: usize) -> Result<Self> {
        Self::new([side; 3], [n; 3])
    }

    pub fn require_min_nodes(&self, min: usize) -> Result<()> {
        if self.nodes.iter().any(|&n| n < min) {
            return Err(Error::InvalidGrid(format!("every axis needs at least {} nodes", min)));
        }
        Ok(())
    }

    #[inline]
    pub fn spacing(&self, axis: usize) -> f64 {
        self.extents[axis] / (self.nodes[axis] - 1) as f64
    }

    pub fn spacings(&self) -> [f64; 3] {
        [self.spacing(0), self.spacing(1), self.spacing(2)]
    }

    pub fn min_spacing(&self) -> f64 {
        let h = self.spacings();
        h[0].min(h[1]).min(h[2])
    }

    /// Extended (ghosted) dimensions.
    #[inline]
    pub fn ext(&self) -> [usize; 3] {
        [self.nodes[0] + 2, self.nodes[1] + 2, self.nodes[2] + 2]
    }

    pub fn ext_len(&self) -> usize {
        let e = self.ext();
        e[0] * e[1] * e[2]
    }

    pub fn real_len(&self) -> usize {
        self.nodes[0] * self.nodes[1] * self.nodes[2]
    }

    /// Index into the ghosted array; each coordinate ranges over −1..=n.
    #[inline]
    pub fn idx(&self, i: isize, j: isize, k: isize) -> usize {
        let e = self.ext();
        ((i + 1) as usize) + e[0] * (((j + 1) as usize) + e[1] * ((k + 1) as usize))
    }

    /// Index into a real-node array (x fastest).
    #[inline]
    pub fn real_idx(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.nodes[0] * (j + self.nodes[1] * k)
    }

    /// Ghosted-array stride along an axis.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        let e = self.ext();
        match axis {
            0 => 1,
            1 => e[0],
            _ => e[0] * e[1],
        }
    }

    pub fn position(&self, i: isize, j: isize, k: isize) -> [f64; 3] {
        [
            i as f64 * self.spacing(0),
            j as f64 * self.spacing(1),
            k as f64 * self.spacing(2),
        ]
    }

    /// One-dimensional trapezoid weight for node `i` on `axis`.
    #[inline]
    pub fn trapezoid_weight(&self, axis: usize, i: usize) -> f64 {
        let h = self.spacing(axis);
        if i == 0 || i + 1 == self.nodes[axis] {
            0.5 * h
        } else {
            h
        }
    }

    pub fn volume(&self) -> f64 {
        self.extents[0] * self.extents[1] * self.extents[2]
    }

    /// Calls `f(i, j, k)` for every real node, x fastest.
    pub fn for_each_real(&self, mut f: impl FnMut(usize, usize, usize)) {
        for k in 0..self.nodes[2] {
            for j in 0..self.nodes[1] {
                for i in 0..self.nodes[0] {
                    f(i, j, k);
                }
            }
        }
    }
}
