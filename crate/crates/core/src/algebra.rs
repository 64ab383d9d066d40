//! Lie algebras of U(1) and SU(2) in an orthonormal basis.
//!
//! Algebra elements are handled as real coefficient vectors with respect to
//! the basis. U(1) is spanned by `i`; SU(2) by `iσ_k/2`, which is orthonormal
//! for ⟨ξ,η⟩ = −2 tr(ξη).

use crate::group::GroupMat;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupId {
    U1,
    SU2,
}

impl GroupId {
    pub fn name(self) -> &'static str {
        match self {
            GroupId::U1 => "U1",
            GroupId::SU2 => "SU2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LieAlgebraSpec {
    pub group_id: GroupId,
    /// Algebra dimension (number of basis elements).
    pub dim: usize,
    /// Dimension of the representation space.
    pub rep_dim: usize,
    pub basis: [GroupMat; 3],
    /// ⟨X,Y⟩ = −trace_scale · Re tr(XY).
    pub trace_scale: f64,
    /// [e_a, e_b] = Σ_c f[a][b][c] e_c.
    pub structure: [[[f64; 3]; 3]; 3],
    /// Smallest c with |[ξ,η]| ≤ c|ξ||η|.
    pub c: f64,
}

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl LieAlgebraSpec {
    pub fn new(group_id: GroupId) -> Self {
        let (dim, rep_dim, trace_scale) = match group_id {
            GroupId::U1 => (1, 1, 1.0),
            GroupId::SU2 => (3, 2, 2.0),
        };
        let mut basis = [GroupMat::zeros(rep_dim); 3];
        match group_id {
            GroupId::U1 => basis[0] = GroupMat::scalar(cx(0.0, 1.0)),
            GroupId::SU2 => {
                let z = cx(0.0, 0.0);
                basis[0] = GroupMat::from_rows([[z, cx(0.0, 0.5)], [cx(0.0, 0.5), z]]);
                basis[1] = GroupMat::from_rows([[z, cx(0.5, 0.0)], [cx(-0.5, 0.0), z]]);
                basis[2] = GroupMat::from_rows([[cx(0.0, 0.5), z], [z, cx(0.0, -0.5)]]);
            }
        }
        let mut spec = LieAlgebraSpec {
            group_id,
            dim,
            rep_dim,
            basis,
            trace_scale,
            structure: [[[0.0; 3]; 3]; 3],
            c: 0.0,
        };
        for a in 0..dim {
            for b in 0..dim {
                let comm = basis[a] * basis[b] - basis[b] * basis[a];
                let coeffs = spec.from_matrix(&comm);
                spec.structure[a][b] = coeffs;
            }
        }
        spec.c = spec.search_commutator_constant();
        spec
    }

    pub fn u1() -> Self {
        Self::new(GroupId::U1)
    }

    pub fn su2() -> Self {
        Self::new(GroupId::SU2)
    }

    pub fn is_abelian(&self) -> bool {
        self.c == 0.0
    }

    /// ⟨X,Y⟩ for matrices in the representation.
    pub fn matrix_inner(&self, x: &GroupMat, y: &GroupMat) -> f64 {
        -self.trace_scale * (*x * *y).trace().re
    }

    /// Coefficients of the orthogonal projection of a matrix onto the algebra.
    pub fn from_matrix(&self, m: &GroupMat) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (a, o) in out.iter_mut().enumerate().take(self.dim) {
            *o = self.matrix_inner(m, &self.basis[a]);
        }
        out
    }

    pub fn to_matrix(&self, x: &[f64]) -> GroupMat {
        let mut m = GroupMat::zeros(self.rep_dim);
        for a in 0..self.dim {
            m = m + self.basis[a].scale(x[a]);
        }
        m
    }

    /// out = [x, y].
    #[inline]
    pub fn bracket(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        match self.group_id {
            GroupId::U1 => out[0] = 0.0,
            GroupId::SU2 => {
                // structure constants reduce to [e_a, e_b] = −ε_abc e_c
                out[0] = -(x[1] * y[2] - x[2] * y[1]);
                out[1] = -(x[2] * y[0] - x[0] * y[2]);
                out[2] = -(x[0] * y[1] - x[1] * y[0]);
            }
        }
    }

    /// out += s·[x, y].
    #[inline]
    pub fn bracket_acc(&self, s: f64, x: &[f64], y: &[f64], out: &mut [f64]) {
        if let GroupId::SU2 = self.group_id {
            out[0] -= s * (x[1] * y[2] - x[2] * y[1]);
            out[1] -= s * (x[2] * y[0] - x[0] * y[2]);
            out[2] -= s * (x[0] * y[1] - x[1] * y[0]);
        }
    }

    /// Bracket computed from the stored structure constants.
    pub fn bracket_structure(&self, x: &[f64], y: &[f64]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for a in 0..self.dim {
            for b in 0..self.dim {
                for (c, o) in out.iter_mut().enumerate().take(self.dim) {
                    *o += x[a] * y[b] * self.structure[a][b][c];
                }
            }
        }
        out
    }

    #[inline]
    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        x[..self.dim].iter().zip(&y[..self.dim]).map(|(a, b)| a * b).sum()
    }

    #[inline]
    pub fn norm(&self, x: &[f64]) -> f64 {
        self.inner(x, x).sqrt()
    }

    /// Matrix of ad_η acting on coefficient vectors: (ad_η ξ)_c = Σ_a M[c][a] ξ_a.
    fn ad_matrix(&self, eta: &[f64; 3]) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        for a in 0..self.dim {
            for b in 0..self.dim {
                for (c, row) in m.iter_mut().enumerate().take(self.dim) {
                    // [ξ, η] with ξ = e_a
                    row[a] += eta[b] * self.structure[a][b][c];
                }
            }
        }
        m
    }

    /// sup |[ξ,η]| over unit ξ, η by alternating maximisation from several starts.
    fn search_commutator_constant(&self) -> f64 {
        let n = self.dim;
        let mut best: f64 = 0.0;
        for start in 0..n {
            let mut eta = [0.0; 3];
            for (b, e) in eta.iter_mut().enumerate().take(n) {
                *e = if b == start { 1.0 } else { 0.3 };
            }
            normalise(&mut eta, n);
            let mut xi = [0.0; 3];
            for _ in 0..200 {
                xi = top_singular_vector(&self.ad_matrix(&eta), n);
                // |[ξ,η]| = |[η,ξ]|, so the roles swap symmetrically
                eta = top_singular_vector(&self.ad_matrix(&xi), n);
            }
            let v = self.norm(&self.bracket_structure(&xi, &eta));
            best = best.max(v);
        }
        // the search result is exact up to rounding; clean it for exact algebra constants
        if best < 1e-14 {
            0.0
        } else {
            best
        }
    }
}

fn normalise(v: &mut [f64; 3], n: usize) {
    let s = v[..n].iter().map(|x| x * x).sum::<f64>().sqrt();
    if s > 0.0 {
        for x in v[..n].iter_mut() {
            *x /= s;
        }
    }
}

/// Dominant right singular vector by power iteration on MᵀM.
fn top_singular_vector(m: &[[f64; 3]; 3], n: usize) -> [f64; 3] {
    let mut g = [[0.0; 3]; 3];
    for i in 0..n {
        for j in 0..n {
            g[i][j] = (0..n).map(|k| m[k][i] * m[k][j]).sum();
        }
    }
    let mut v = [0.0; 3];
    for (i, x) in v.iter_mut().enumerate().take(n) {
        *x = 1.0 + 0.1 * i as f64;
    }
    normalise(&mut v, n);
    for _ in 0..100 {
        let mut w = [0.0; 3];
        for i in 0..n {
            w[i] = (0..n).map(|j| g[i][j] * v[j]).sum();
        }
        if w[..n].iter().all(|x| *x == 0.0) {
            return v;
        }
        normalise(&mut w, n);
        v = w;
    }
    v
}

/// exp of an algebra element in the representation.
pub fn exp_algebra(alg: &LieAlgebraSpec, x: &[f64]) -> GroupMat {
    match alg.group_id {
        GroupId::U1 => GroupMat::scalar(Complex64::new(x[0].cos(), x[0].sin())),
        GroupId::SU2 => {
            let th = alg.norm(x);
            let half = 0.5 * th;
            let (s, c) = (half.sin(), half.cos());
            // exp(θ n·iσ/2) = cos(θ/2) + i sin(θ/2) n·σ
            let f = if th > 1e-300 { s / th } else { 0.5 };
            let m = alg.to_matrix(x).scale(2.0 * f);
            GroupMat::identity(2).scale(c) + m
        }
    }
}
