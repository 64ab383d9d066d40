//! Small complex matrices acting on the representation space (dimension 1 or 2).

use core::ops::{Add, Mul, Sub};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

/// A `dim`×`dim` complex matrix with `dim` ∈ {1, 2}, stored row-major in a 2×2 array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupMat {
    pub dim: usize,
    pub e: [[Complex64; 2]; 2],
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

impl GroupMat {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim == 1 || dim == 2, "representation dimension must be 1 or 2");
        GroupMat { dim, e: [[ZERO; 2]; 2] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.e[i][i] = ONE;
        }
        m
    }

    pub fn scalar(z: Complex64) -> Self {
        let mut m = Self::zeros(1);
        m.e[0][0] = z;
        m
    }

    pub fn from_rows(rows: [[Complex64; 2]; 2]) -> Self {
        GroupMat { dim: 2, e: rows }
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.e[i][j] = self.e[j][i].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.e[i][i]).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = *self;
        for row in m.e.iter_mut() {
            for x in row.iter_mut() {
                *x *= s;
            }
        }
        m
    }

    pub fn det(&self) -> Complex64 {
        if self.dim == 1 {
            self.e[0][0]
        } else {
            self.e[0][0] * self.e[1][1] - self.e[0][1] * self.e[1][0]
        }
    }

    /// Inverse; for group elements prefer `adjoint`.
    pub fn inverse(&self) -> Self {
        if self.dim == 1 {
            return Self::scalar(ONE / self.e[0][0]);
        }
        let d = self.det();
        let e = &self.e;
        GroupMat::from_rows([[e[1][1] / d, -e[0][1] / d], [-e[1][0] / d, e[0][0] / d]])
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m = m.max(self.e[i][j].norm());
            }
        }
        m
    }

    pub fn frobenius(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.e[i][j].norm_sqr();
            }
        }
        s.sqrt()
    }

    /// Operator 2-norm (largest singular value).
    pub fn op_norm(&self) -> f64 {
        if self.dim == 1 {
            return self.e[0][0].norm();
        }
        let g = self.adjoint() * *self;
        let a = g.e[0][0].re;
        let d = g.e[1][1].re;
        let b = g.e[0][1].norm();
        let mean = 0.5 * (a + d);
        let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        (mean + disc).max(0.0).sqrt()
    }

    /// max |M†M − I| entrywise.
    pub fn unitarity_deviation(&self) -> f64 {
        (self.adjoint() * *self - Self::identity(self.dim)).max_abs()
    }

    /// Nearest group element: U(1) normalises the phase, SU(2) projects onto the
    /// quaternion subspace and normalises.
    pub fn project_to_group(&self) -> Self {
        if self.dim == 1 {
            let z = self.e[0][0];
            return Self::scalar(z / z.norm());
        }
        let e = &self.e;
        let q = (e[0][0] + e[1][1].conj()) * 0.5;
        let p = (e[0][1] - e[1][0].conj()) * 0.5;
        let n = (q.norm_sqr() + p.norm_sqr()).sqrt();
        let (q, p) = (q / n, p / n);
        GroupMat::from_rows([[q, p], [-p.conj(), q.conj()]])
    }

    /// Newton iteration X ← (X + X^{-†})/2 for the unitary polar factor.
    pub fn polar_unitary(&self) -> Self {
        let mut x = *self;
        for _ in 0..60 {
            let next = (x + x.inverse().adjoint()).scale(0.5);
            let delta = (next - x).max_abs();
            x = next;
            if delta < 1e-15 {
                break;
            }
        }
        x
    }
}

impl Add for GroupMat {
    type Output = GroupMat;
    fn add(self, o: GroupMat) -> GroupMat {
        debug_assert_eq!(self.dim, o.dim);
        let mut m = self;
        for i in 0..2 {
            for j in 0..2 {
                m.e[i][j] += o.e[i][j];
            }
        }
        m
    }
}

impl Sub for GroupMat {
    type Output = GroupMat;
    fn sub(self, o: GroupMat) -> GroupMat {
        debug_assert_eq!(self.dim, o.dim);
        let mut m = self;
        for i in 0..2 {
            for j in 0..2 {
                m.e[i][j] -= o.e[i][j];
            }
        }
        m
    }
}

impl Mul for GroupMat {
    type Output = GroupMat;
    fn mul(self, o: GroupMat) -> GroupMat {
        debug_assert_eq!(self.dim, o.dim);
        let mut m = GroupMat::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let mut s = ZERO;
                for k in 0..self.dim {
                    s += self.e[i][k] * o.e[k][j];
                }
                m.e[i][j] = s;
            }
        }
        m
    }
}
