//! Lie-algebra valued p-forms sampled on a ghosted grid.

use crate::algebra::LieAlgebraSpec;
use crate::boundary::BoundaryKind;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::group::GroupMat;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

const C0: [&[usize]; 1] = [&[]];
const C1: [&[usize]; 3] = [&[0], &[1], &[2]];
const C2: [&[usize]; 3] = [&[0, 1], &[0, 2], &[1, 2]];
const C3: [&[usize]; 1] = [&[0, 1, 2]];

/// Increasing multi-indices of degree `p`, in lexicographic order.
pub fn components(p: usize) -> &'static [&'static [usize]] {
    match p {
        0 => &C0,
        1 => &C1,
        2 => &C2,
        3 => &C3,
        _ => &[],
    }
}

/// Position of a sorted multi-index in [`components`].
pub fn component_index(multi: &[usize]) -> usize {
    components(multi.len())
        .iter()
        .position(|c| *c == multi)
        .expect("multi-index must be increasing and in range")
}

/// Index and permutation sign for `k` prepended to the sorted multi-index `rest`;
/// `None` when `k ∈ rest`.
pub fn prepend_index(k: usize, rest: &[usize]) -> Option<(usize, f64)> {
    if rest.contains(&k) {
        return None;
    }
    let mut buf = [0usize; 3];
    let mut n = 0;
    let mut placed = false;
    let mut sign = 1.0;
    for &r in rest {
        if !placed && k < r {
            buf[n] = k;
            n += 1;
            placed = true;
        }
        if !placed {
            sign = -sign;
        }
        buf[n] = r;
        n += 1;
    }
    if !placed {
        buf[n] = k;
        n += 1;
    }
    Some((component_index(&buf[..n]), sign))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L2,
    Linf,
    W1,
}

/// A 𝔨-valued p-form. Memory layout is `[component][ghosted node][algebra index]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KForm {
    pub degree: usize,
    pub grid: GridSpec,
    pub alg: LieAlgebraSpec,
    pub data: Vec<f64>,
    ghosts: Option<BoundaryKind>,
}

impl KForm {
    pub fn zeros(degree: usize, grid: GridSpec, alg: LieAlgebraSpec) -> Self {
        assert!(degree <= 3);
        let len = components(degree).len() * grid.ext_len() * alg.dim;
        KForm { degree, grid, alg, data: vec![0.0; len], ghosts: None }
    }

    /// Samples `f(component, x)` at every real node; ghosts are left unfilled.
    pub fn from_fn(
        degree: usize,
        grid: GridSpec,
        alg: LieAlgebraSpec,
        mut f: impl FnMut(usize, [f64; 3]) -> [f64; 3],
    ) -> Self {
        let mut w = Self::zeros(degree, grid, alg);
        for c in 0..w.n_comp() {
            grid.for_each_real(|i, j, k| {
                let (i, j, k) = (i as isize, j as isize, k as isize);
                let v = f(c, grid.position(i, j, k));
                let node = grid.idx(i, j, k);
                w.at_mut(c, node).copy_from_slice(&v[..alg.dim]);
            });
        }
        w
    }

    #[inline]
    pub fn n_comp(&self) -> usize {
        components(self.degree).len()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.alg.dim
    }

    #[inline]
    pub fn offset(&self, comp: usize, node: usize) -> usize {
        (comp * self.grid.ext_len() + node) * self.alg.dim
    }

    #[inline]
    pub fn at(&self, comp: usize, node: usize) -> &[f64] {
        let o = self.offset(comp, node);
        &self.data[o..o + self.alg.dim]
    }

    #[inline]
    pub fn at_mut(&mut self, comp: usize, node: usize) -> &mut [f64] {
        let o = self.offset(comp, node);
        let d = self.alg.dim;
        &mut self.data[o..o + d]
    }

    /// Component block (all ghosted nodes) as a flat slice.
    pub fn comp_slice(&self, comp: usize) -> &[f64] {
        let n = self.grid.ext_len() * self.alg.dim;
        &self.data[comp * n..(comp + 1) * n]
    }

    pub fn ghosts(&self) -> Option<BoundaryKind> {
        self.ghosts
    }

    pub(crate) fn set_ghosts(&mut self, kind: Option<BoundaryKind>) {
        self.ghosts = kind;
    }

    pub fn require_ghosts(&self) -> Result<()> {
        if self.ghosts.is_none() {
            Err(Error::GhostsUnfilled)
        } else {
            Ok(())
        }
    }

    pub fn require_degree(&self, p: usize) -> Result<()> {
        if self.degree != p {
            Err(Error::DegreeMismatch { expected: p, found: self.degree })
        } else {
            Ok(())
        }
    }

    pub fn require_compatible(&self, other: &KForm) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.alg.group_id != other.alg.group_id {
            return Err(Error::AlgebraMismatch);
        }
        Ok(())
    }

    /// |ω(x)|² at a ghosted node index.
    #[inline]
    pub fn pointwise_norm_sq(&self, node: usize) -> f64 {
        (0..self.n_comp()).map(|c| self.at(c, node).iter().map(|v| v * v).sum::<f64>()).sum()
    }

    /// |ω(x)| at every real node, x fastest.
    pub fn pointwise_norms(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.grid.real_len());
        self.grid.for_each_real(|i, j, k| {
            let node = self.grid.idx(i as isize, j as isize, k as isize);
            out.push(self.pointwise_norm_sq(node).sqrt());
        });
        out
    }

    /// Trapezoid-rule integral of a per-node quantity.
    pub(crate) fn integrate_nodes(&self, mut f: impl FnMut(usize) -> f64) -> f64 {
        let g = &self.grid;
        let mut total = 0.0;
        for k in 0..g.nodes[2] {
            let wk = g.trapezoid_weight(2, k);
            for j in 0..g.nodes[1] {
                let wjk = wk * g.trapezoid_weight(1, j);
                for i in 0..g.nodes[0] {
                    let w = wjk * g.trapezoid_weight(0, i);
                    total += w * f(g.idx(i as isize, j as isize, k as isize));
                }
            }
        }
        total
    }

    /// L² inner product (trapezoid rule).
    pub fn inner(&self, other: &KForm) -> Result<f64> {
        self.require_compatible(other)?;
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch { expected: self.degree, found: other.degree });
        }
        Ok(self.integrate_nodes(|node| {
            (0..self.n_comp()).map(|c| self.alg.inner(self.at(c, node), other.at(c, node))).sum()
        }))
    }

    pub fn norm(&self, kind: NormKind) -> Result<f64> {
        match kind {
            NormKind::L2 => Ok(self.integrate_nodes(|n| self.pointwise_norm_sq(n)).sqrt()),
            NormKind::Linf => {
                let mut m: f64 = 0.0;
                self.grid.for_each_real(|i, j, k| {
                    let node = self.grid.idx(i as isize, j as isize, k as isize);
                    m = m.max(self.pointwise_norm_sq(node));
                });
                Ok(m.sqrt())
            }
            NormKind::W1 => {
                let g = self.gradient_l2_sq()?;
                let l2 = self.norm(NormKind::L2)?;
                Ok((g + l2 * l2).sqrt())
            }
        }
    }

    /// ∫ Σ_k |∂_k ω|² with central differences.
    pub fn gradient_l2_sq(&self) -> Result<f64> {
        self.require_ghosts()?;
        let h = self.grid.spacings();
        Ok(self.integrate_nodes(|node| {
            let mut s = 0.0;
            for (axis, hk) in h.iter().enumerate() {
                let st = self.grid.stride(axis);
                for c in 0..self.n_comp() {
                    let p = self.at(c, node + st);
                    let m = self.at(c, node - st);
                    for a in 0..self.alg.dim {
                        let d = (p[a] - m[a]) / (2.0 * hk);
                        s += d * d;
                    }
                }
            }
            s
        }))
    }

    /// self += s·other on every stored value (ghosts included); ghost state is cleared.
    pub fn axpy(&mut self, s: f64, other: &KForm) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
        self.ghosts = None;
    }

    pub fn scaled(&self, s: f64) -> KForm {
        let mut w = self.clone();
        for v in w.data.iter_mut() {
            *v *= s;
        }
        w
    }

    /// Largest pointwise |self − other| over real nodes.
    pub fn max_diff(&self, other: &KForm) -> f64 {
        let mut d = self.clone();
        d.axpy(-1.0, other);
        d.norm(NormKind::Linf).unwrap_or(f64::NAN)
    }

    /// Same as [`max_diff`](Self::max_diff) restricted to nodes at least `margin` nodes from every face.
    pub fn max_diff_interior(&self, other: &KForm, margin: usize) -> f64 {
        let g = self.grid;
        let mut m: f64 = 0.0;
        for k in margin..g.nodes[2] - margin {
            for j in margin..g.nodes[1] - margin {
                for i in margin..g.nodes[0] - margin {
                    let node = g.idx(i as isize, j as isize, k as isize);
                    let mut s = 0.0;
                    for c in 0..self.n_comp() {
                        for (a, b) in self.at(c, node).iter().zip(other.at(c, node)) {
                            s += (a - b) * (a - b);
                        }
                    }
                    m = m.max(s);
                }
            }
        }
        m.sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Pointwise adjoint action ξ ↦ k⁻¹ξk by a constant group element.
    pub fn adjoint_action(&self, k: &GroupMat) -> KForm {
        let mut out = self.clone();
        let kinv = k.adjoint();
        let n = self.grid.ext_len();
        for c in 0..self.n_comp() {
            for node in 0..n {
                let m = self.alg.to_matrix(self.at(c, node));
                let r = self.alg.from_matrix(&(kinv * m * *k));
                out.at_mut(c, node).copy_from_slice(&r[..self.alg.dim]);
            }
        }
        out
    }
}
