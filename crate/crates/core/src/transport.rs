//! Parallel transport g⁻¹g′ = A⟨γ′⟩ along piecewise C¹ paths, Wilson loops,
//! the loops-to-paths construction and the long-time trace probe.
//!
//! Paths are expression trees (segments, concatenation, inverse,
//! reparametrization, perturbation) evaluated exactly in position and
//! velocity. The connection between grid nodes is the trilinear interpolant.

use crate::error::{Error, Result};
use crate::flow::FlowTrajectory;
use crate::form::KForm;
use crate::group::GroupMat;
use crate::quad::gauss_kronrod_pts;
use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

pub type Vec3 = [f64; 3];

/// Endpoint matching tolerance for concatenation and loop closure.
pub const JOIN_TOL: f64 = 1e-12;

fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn scale(s: f64, a: Vec3) -> Vec3 {
    [s * a[0], s * a[1], s * a[2]]
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    Line { from: Vec3, to: Vec3 },
    /// center + cos θ·e1 + sin θ·e2, θ running from theta0 to theta1.
    Arc { center: Vec3, e1: Vec3, e2: Vec3, theta0: f64, theta1: f64 },
}

impl Segment {
    fn eval(&self, s: f64) -> (Vec3, Vec3) {
        match *self {
            Segment::Line { from, to } => {
                let d = sub(to, from);
                (add(from, scale(s, d)), d)
            }
            Segment::Arc { center, e1, e2, theta0, theta1 } => {
                let dth = theta1 - theta0;
                let (sn, cs) = (theta0 + s * dth).sin_cos();
                let p = add(center, add(scale(cs, e1), scale(sn, e2)));
                let v = scale(dth, add(scale(-sn, e1), scale(cs, e2)));
                (p, v)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reparam {
    Identity,
    /// φ(s) = s^p, p > 0.
    Power(f64),
}

impl Reparam {
    fn phi(self, s: f64) -> (f64, f64) {
        match self {
            Reparam::Identity => (s, 1.0),
            Reparam::Power(p) => (s.powf(p), if s == 0.0 && p < 1.0 { 0.0 } else { p * s.powf(p - 1.0) }),
        }
    }

    fn phi_inv(self, s: f64) -> f64 {
        match self {
            Reparam::Identity => s,
            Reparam::Power(p) => s.powf(1.0 / p),
        }
    }
}

/// A vector field along a path vanishing at both ends.
#[derive(Debug, Clone, PartialEq)]
pub enum PathPerturbation {
    /// u(s) = Σ_m c_m sin(mπs), m = 1, 2, ...
    Sine(Vec<Vec3>),
    /// u(s) = amplitude·sin(πs)·(γ(s) − center)/|γ(s) − center|.
    Radial { center: Vec3, amplitude: f64 },
}

impl PathPerturbation {
    pub fn zero() -> Self {
        PathPerturbation::Sine(Vec::new())
    }

    /// u(s), u′(s) along a base path with position p and velocity v at s.
    fn eval(&self, s: f64, p: Vec3, v: Vec3) -> (Vec3, Vec3) {
        match self {
            PathPerturbation::Sine(coeffs) => {
                let mut u = [0.0; 3];
                let mut du = [0.0; 3];
                for (m, c) in coeffs.iter().enumerate() {
                    let w = PI * (m + 1) as f64;
                    let (sn, cs) = (w * s).sin_cos();
                    u = add(u, scale(sn, *c));
                    du = add(du, scale(w * cs, *c));
                }
                (u, du)
            }
            PathPerturbation::Radial { center, amplitude } => {
                let r = sub(p, *center);
                let rn = norm(r);
                let n = scale(1.0 / rn, r);
                let dn = scale(1.0 / rn, sub(v, scale(dot(n, v), n)));
                let (sn, cs) = (PI * s).sin_cos();
                (scale(amplitude * sn, n), add(scale(amplitude * PI * cs, n), scale(amplitude * sn, dn)))
            }
        }
    }

    /// (sup|u|, sup|u′|) sampled along `base`; the norm is their sum.
    pub fn sup_norms(&self, base: &Path) -> (f64, f64) {
        let mut su: f64 = 0.0;
        let mut sdu: f64 = 0.0;
        for s in base.sample_params(4000) {
            let (p, v) = base.eval(s, true);
            let (u, du) = self.eval(s, p, v);
            su = su.max(norm(u));
            sdu = sdu.max(norm(du));
        }
        (su, sdu)
    }

    pub fn norm(&self, base: &Path) -> f64 {
        let (a, b) = self.sup_norms(base);
        a + b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Path {
    Segment(Segment),
    Concat(Box<Path>, Box<Path>),
    Inverse(Box<Path>),
    Reparam(Box<Path>, Reparam),
    Perturbed { base: Box<Path>, u: PathPerturbation, eps: f64 },
}

impl Path {
    pub fn line(from: Vec3, to: Vec3) -> Path {
        Path::Segment(Segment::Line { from, to })
    }

    pub fn arc(center: Vec3, e1: Vec3, e2: Vec3, theta0: f64, theta1: f64) -> Path {
        Path::Segment(Segment::Arc { center, e1, e2, theta0, theta1 })
    }

    /// Full counter-clockwise turn in the (e1, e2) plane starting at center + e1.
    pub fn circle(center: Vec3, e1: Vec3, e2: Vec3) -> Path {
        Path::arc(center, e1, e2, 0.0, 2.0 * PI)
    }

    /// Polygon through the given vertices, closed back to the first one.
    pub fn polygon(vertices: &[Vec3]) -> Result<Path> {
        if vertices.len() < 2 {
            return Err(Error::InvalidConfig(format!("polygon needs 2 vertices, got {}", vertices.len())));
        }
        let n = vertices.len();
        let mut p = Path::line(vertices[0], vertices[1]);
        for i in 1..n {
            p = p.concat(Path::line(vertices[i], vertices[(i + 1) % n]))?;
        }
        Ok(p)
    }

    /// γμ: γ on [0, 1/2] and μ on [1/2, 1].
    pub fn concat(self, other: Path) -> Result<Path> {
        let gap = norm(sub(self.end(), other.start()));
        if gap > JOIN_TOL {
            return Err(Error::NotComposable(gap));
        }
        Ok(Path::Concat(Box::new(self), Box::new(other)))
    }

    pub fn inverse(self) -> Path {
        Path::Inverse(Box::new(self))
    }

    pub fn reparam(self, r: Reparam) -> Result<Path> {
        if let Reparam::Power(p) = r {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::InvalidConfig(format!("power reparametrization needs p > 0, got {}", p)));
            }
        }
        Ok(Path::Reparam(Box::new(self), r))
    }

    /// γ + ε·u.
    pub fn perturbed(self, u: PathPerturbation, eps: f64) -> Path {
        Path::Perturbed { base: Box::new(self), u, eps }
    }

    /// Position and velocity at s; at a breakpoint `right` selects the one-sided velocity.
    pub fn eval(&self, s: f64, right: bool) -> (Vec3, Vec3) {
        let pick = if right { s + 1e-13 } else { s - 1e-13 };
        self.eval_at(s, pick.clamp(0.0, 1.0))
    }

    /// Position and velocity at s using the smooth piece that contains `pick`.
    /// Inside RK4 stages `pick` is the midpoint of the current interval, so the
    /// piece choice is immune to rounding of s near a join.
    fn eval_at(&self, s: f64, pick: f64) -> (Vec3, Vec3) {
        match self {
            Path::Segment(seg) => seg.eval(s),
            Path::Concat(a, b) => {
                if pick < 0.5 {
                    let (p, v) = a.eval_at(2.0 * s, 2.0 * pick);
                    (p, scale(2.0, v))
                } else {
                    let (p, v) = b.eval_at(2.0 * s - 1.0, 2.0 * pick - 1.0);
                    (p, scale(2.0, v))
                }
            }
            Path::Inverse(a) => {
                let (p, v) = a.eval_at(1.0 - s, 1.0 - pick);
                (p, scale(-1.0, v))
            }
            Path::Reparam(a, r) => {
                let (t, dt) = r.phi(s);
                let (p, v) = a.eval_at(t, r.phi(pick).0);
                (p, scale(dt, v))
            }
            Path::Perturbed { base, u, eps } => {
                let (p, v) = base.eval_at(s, pick);
                let (w, dw) = u.eval(s, p, v);
                (add(p, scale(*eps, w)), add(v, scale(*eps, dw)))
            }
        }
    }

    pub fn point(&self, s: f64) -> Vec3 {
        self.eval(s, true).0
    }

    pub fn start(&self) -> Vec3 {
        self.point(0.0)
    }

    pub fn end(&self) -> Vec3 {
        self.point(1.0)
    }

    /// Parameters where the velocity may jump, including 0 and 1.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = match self {
            Path::Segment(_) => vec![0.0, 1.0],
            Path::Concat(a, b) => {
                let mut v: Vec<f64> = a.breakpoints().iter().map(|s| 0.5 * s).collect();
                v.extend(b.breakpoints().iter().map(|s| 0.5 + 0.5 * s));
                v
            }
            Path::Inverse(a) => a.breakpoints().iter().rev().map(|s| 1.0 - s).collect(),
            Path::Reparam(a, r) => a.breakpoints().iter().map(|&s| r.phi_inv(s)).collect(),
            Path::Perturbed { base, .. } => base.breakpoints(),
        };
        out.sort_by(|x, y| x.partial_cmp(y).unwrap());
        out.dedup();
        out
    }

    /// Uniform samples plus all breakpoints.
    fn sample_params(&self, n: usize) -> Vec<f64> {
        let mut s: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        s.extend(self.breakpoints());
        s.sort_by(|x, y| x.partial_cmp(y).unwrap());
        s.dedup();
        s
    }

    /// ∫₀¹|γ′(s)| ds.
    pub fn length(&self) -> f64 {
        let bp = self.breakpoints();
        let mut total = 0.0;
        for w in bp.windows(2) {
            let (a, b) = (w[0], w[1]);
            let r = crate::quad::gauss_kronrod(
                |s| norm(self.eval(s, s < b).1),
                a,
                b,
                1e-14,
                1e-13,
                200,
            );
            total += r.value;
        }
        total
    }

    /// sup_s |γ(s) − η(s)| on a dense sample.
    pub fn sup_distance(&self, other: &Path) -> f64 {
        let mut s = self.sample_params(4000);
        s.extend(other.breakpoints());
        s.iter().map(|&x| norm(sub(self.point(x), other.point(x)))).fold(0.0, f64::max)
    }

    /// Diagonal of the bounding box of a dense sample.
    pub fn diameter(&self) -> f64 {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for s in self.sample_params(2000) {
            let p = self.point(s);
            for q in 0..3 {
                lo[q] = lo[q].min(p[q]);
                hi[q] = hi[q].max(p[q]);
            }
        }
        norm(sub(hi, lo))
    }
}

/// A path with γ(0) = γ(1).
#[derive(Debug, Clone, PartialEq)]
pub struct Loop {
    pub path: Path,
}

impl Loop {
    pub fn new(path: Path) -> Result<Loop> {
        let gap = norm(sub(path.start(), path.end()));
        if gap > JOIN_TOL {
            return Err(Error::NotClosed(gap));
        }
        Ok(Loop { path })
    }

    pub fn base(&self) -> Vec3 {
        self.path.start()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportOptions {
    /// RK4 steps per grid spacing of displacement.
    pub steps_per_cell: usize,
}

impl Default for TransportOptions {
    fn default() -> Self {
        TransportOptions { steps_per_cell: 16 }
    }
}

/// Trilinear interpolation of a 1-form, restricted to the band at distance ≥ h from the faces.
struct Interp<'a> {
    a: &'a KForm,
    h: [f64; 3],
}

impl<'a> Interp<'a> {
    fn new(a: &'a KForm) -> Self {
        Interp { a, h: a.grid.spacings() }
    }

    fn in_band(&self, x: Vec3) -> bool {
        (0..3).all(|q| {
            let l = self.a.grid.extents[q];
            let slack = 1e-12 * l;
            x[q] >= self.h[q] - slack && x[q] <= l - self.h[q] + slack
        })
    }

    fn cell(&self, x: Vec3) -> [isize; 3] {
        let mut c = [0isize; 3];
        for q in 0..3 {
            let n = self.a.grid.nodes[q] as isize;
            c[q] = ((x[q] / self.h[q]).floor() as isize).clamp(0, n - 2);
        }
        c
    }

    /// A⟨v⟩ at x as algebra coefficients.
    fn contract(&self, x: Vec3, v: Vec3) -> [f64; 3] {
        let g = &self.a.grid;
        let c = self.cell(x);
        let mut t = [0.0; 3];
        for q in 0..3 {
            t[q] = x[q] / self.h[q] - c[q] as f64;
        }
        let mut out = [0.0; 3];
        let d = self.a.alg.dim;
        for corner in 0..8usize {
            let o = [(corner & 1) as isize, ((corner >> 1) & 1) as isize, ((corner >> 2) & 1) as isize];
            let mut w = 1.0;
            for q in 0..3 {
                w *= if o[q] == 1 { t[q] } else { 1.0 - t[q] };
            }
            if w == 0.0 {
                continue;
            }
            let node = g.idx(c[0] + o[0], c[1] + o[1], c[2] + o[2]);
            for (k, vk) in v.iter().enumerate() {
                let ak = self.a.at(k, node);
                for q in 0..d {
                    out[q] += w * vk * ak[q];
                }
            }
        }
        out
    }
}

/// Breakpoints of `path` refined by the parameters where it crosses a grid plane.
fn smooth_intervals(path: &Path, ip: &Interp) -> Vec<f64> {
    let bp = path.breakpoints();
    let mut out = bp.clone();
    let hmin = ip.h.iter().cloned().fold(f64::INFINITY, f64::min);
    for w in bp.windows(2) {
        let (a, b) = (w[0], w[1]);
        let speed = (0..=8)
            .map(|i| norm(path.eval(a + (b - a) * i as f64 / 8.0, i < 8).1))
            .fold(0.0, f64::max);
        let m = ((speed * (b - a) / (0.25 * hmin)).ceil() as usize).clamp(8, 1 << 20);
        let mut s0 = a;
        let mut p0 = path.point(a);
        for i in 1..=m {
            let s1 = a + (b - a) * i as f64 / m as f64;
            let p1 = path.point(s1);
            for q in 0..3 {
                let c0 = (p0[q] / ip.h[q]).floor();
                let c1 = (p1[q] / ip.h[q]).floor();
                if c0 == c1 {
                    continue;
                }
                let (lo, hi) = (c0.min(c1), c0.max(c1));
                let mut plane = lo + 1.0;
                while plane <= hi {
                    // same scaled coordinate as the floor test above, so the signs agree
                    let f = |s: f64| path.point(s)[q] / ip.h[q] - plane;
                    let (mut l, mut r) = (s0, s1);
                    let fl = f(l);
                    for _ in 0..200 {
                        let mid = 0.5 * (l + r);
                        if mid <= l || mid >= r {
                            break;
                        }
                        if (f(mid) < 0.0) == (fl < 0.0) {
                            l = mid;
                        } else {
                            r = mid;
                        }
                    }
                    out.push(0.5 * (l + r));
                    plane += 1.0;
                }
            }
            s0 = s1;
            p0 = p1;
        }
    }
    out.sort_by(|x, y| x.partial_cmp(y).unwrap());
    // crossings within the floor of an existing breakpoint add nothing but tiny steps
    let mut kept: Vec<f64> = Vec::with_capacity(out.len());
    for s in out {
        if kept.last().map_or(true, |&l| s - l > 1e-9) {
            kept.push(s);
        } else if s == 1.0 {
            *kept.last_mut().unwrap() = 1.0;
        }
    }
    kept
}

/// //_γ^A = g(1) for g⁻¹g′ = A⟨γ′⟩, g(0) = I.
pub fn transport_with(a: &KForm, path: &Path, opts: TransportOptions) -> Result<GroupMat> {
    a.require_degree(1)?;
    let ip = Interp::new(a);
    let alg = a.alg;
    let hmin = a.grid.min_spacing();
    let x_at = |s: f64, pick: f64| -> Result<GroupMat> {
        let (p, v) = path.eval_at(s, pick);
        if !ip.in_band(p) {
            return Err(Error::OutsideBand { s });
        }
        Ok(alg.to_matrix(&ip.contract(p, v)))
    };
    let mut g = GroupMat::identity(alg.rep_dim);
    let knots = smooth_intervals(path, &ip);
    for w in knots.windows(2) {
        let (sa, sb) = (w[0], w[1]);
        let speed = (0..=4)
            .map(|i| norm(path.eval(sa + (sb - sa) * i as f64 / 4.0, i < 4).1))
            .fold(0.0, f64::max);
        let n = ((speed * (sb - sa) * opts.steps_per_cell as f64 / hmin).ceil() as usize).max(2);
        let ds = (sb - sa) / n as f64;
        for i in 0..n {
            let s0 = sa + ds * i as f64;
            let s1 = if i + 1 == n { sb } else { s0 + ds };
            let mid = s0 + 0.5 * ds;
            let pick = 0.5 * (sa + sb);
            let x1 = x_at(s0, pick)?;
            let x2 = x_at(mid, pick)?;
            let x4 = x_at(s1, pick)?;
            let k1 = g * x1;
            let k2 = (g + k1.scale(0.5 * ds)) * x2;
            let k3 = (g + k2.scale(0.5 * ds)) * x2;
            let k4 = (g + k3.scale(ds)) * x4;
            g = g + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(ds / 6.0);
            g = g.project_to_group();
        }
    }
    Ok(g)
}

pub fn transport(a: &KForm, path: &Path) -> Result<GroupMat> {
    transport_with(a, path, TransportOptions::default())
}

/// trace //_γ^A.
pub fn wilson_trace(a: &KForm, lp: &Loop) -> Result<Complex64> {
    Ok(transport(a, &lp.path)?.trace())
}

/// ∫_γ A as algebra coefficients, by adaptive quadrature between crossings.
pub fn line_integral(a: &KForm, path: &Path) -> Result<[f64; 3]> {
    a.require_degree(1)?;
    let ip = Interp::new(a);
    let knots = smooth_intervals(path, &ip);
    for &s in &knots {
        if !ip.in_band(path.point(s)) {
            return Err(Error::OutsideBand { s });
        }
    }
    let mut out = [0.0; 3];
    let mut err = None;
    for q in 0..a.alg.dim {
        let r = gauss_kronrod_pts(
            |s| {
                let (p, v) = path.eval(s, true);
                if !ip.in_band(p) {
                    err = Some(Error::OutsideBand { s });
                    return 0.0;
                }
                ip.contract(p, v)[q]
            },
            &knots,
            1e-15,
            1e-14,
            200,
        );
        out[q] = r.value;
    }
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// P(h_x γ h_y⁻¹) with the radial homotopy h_x(s) = x₀ + s(x − x₀).
pub fn loops_to_paths(
    mut p: impl FnMut(&Loop) -> Result<GroupMat>,
    x0: Vec3,
    gamma: &Path,
) -> Result<GroupMat> {
    let hx = Path::line(x0, gamma.start());
    let hy = Path::line(x0, gamma.end());
    let lp = Loop::new(hx.concat(gamma.clone())?.concat(hy.inverse())?)?;
    p(&lp)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivReport {
    /// ‖∂_u //_γ‖ from the Richardson-extrapolated central difference.
    pub derivative_norm: f64,
    /// ‖B‖∞ · sup|u| · Length(γ).
    pub bound: f64,
    pub margin: f64,
    pub eps: [f64; 3],
    /// Relative gap between the two Richardson extrapolants.
    pub richardson_gap: f64,
    pub b_inf: f64,
    pub sup_u: f64,
    pub length: f64,
}

/// Fractions of the loop diameter used as perturbation sizes.
pub const EPS_LADDER: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

/// Checks ‖∂_u //_γ‖ ≤ ‖B‖∞ sup|u| Length(γ) by central differences in ε.
pub fn deriv_bound_check(a: &KForm, lp: &Loop, u: &PathPerturbation) -> Result<DerivReport> {
    a.require_ghosts()?;
    let b = crate::ops::curvature(a)?;
    let b_inf = b.pointwise_norms().into_iter().fold(0.0, f64::max);
    let (sup_u, _) = u.sup_norms(&lp.path);
    let length = lp.path.length();
    let bound = b_inf * sup_u * length;
    if sup_u == 0.0 {
        return Ok(DerivReport {
            derivative_norm: 0.0,
            bound,
            margin: bound,
            eps: [0.0; 3],
            richardson_gap: 0.0,
            b_inf,
            sup_u,
            length,
        });
    }
    let diam = lp.path.diameter();
    let eps = EPS_LADDER.map(|f| f * diam / sup_u);
    let mut d = Vec::with_capacity(3);
    for &e in &eps {
        let plus = transport(a, &lp.path.clone().perturbed(u.clone(), e))?;
        let minus = transport(a, &lp.path.clone().perturbed(u.clone(), -e))?;
        d.push((plus - minus).scale(0.5 / e));
    }
    let r1 = (d[1].scale(4.0) - d[0]).scale(1.0 / 3.0);
    let r2 = (d[2].scale(4.0) - d[1]).scale(1.0 / 3.0);
    let derivative_norm = r2.op_norm();
    let gap = (r2 - r1).op_norm();
    let floor = 1e-9 * (1.0 + bound);
    if gap > 0.1 * derivative_norm + floor {
        return Err(Error::NoiseFloor(format!(
            "Richardson extrapolants differ by {:e} against a derivative of {:e}",
            gap, derivative_norm
        )));
    }
    Ok(DerivReport {
        derivative_norm,
        bound,
        margin: bound - derivative_norm,
        eps,
        richardson_gap: gap / derivative_norm.max(floor),
        b_inf,
        sup_u,
        length,
    })
}

/// Absolute slack below which successive trace differences count as noise.
pub const TRACE_NOISE: f64 = 1e-12;
/// ODE tolerance added to the equicontinuity bound.
pub const ODE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct LoopProbe {
    pub traces: Vec<Complex64>,
    /// |trace_{j+1} − trace_j|.
    pub differences: Vec<f64>,
    /// Whether the last three differences are nonincreasing (within TRACE_NOISE).
    pub settling: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub rungs: Vec<f64>,
    pub loops: Vec<LoopProbe>,
    /// sup over t ≥ t₀ of ‖B(t)‖∞ from the monitors.
    pub b: f64,
    /// Worst 2bL·sup|γ−η| + tol − ‖//_γ − //_η‖ over loop pairs and rungs.
    pub equicontinuity_margin: f64,
    pub pass: bool,
}

/// Wilson traces along the dyadic ladder of snapshots t₀·2^j.
pub fn convergence_probe(traj: &FlowTrajectory, loops: &[Loop]) -> Result<ProbeReport> {
    let positive: Vec<(f64, &KForm)> =
        traj.times.iter().zip(&traj.fields).filter(|(t, _)| **t > 0.0).map(|(t, f)| (*t, f)).collect();
    let t0 = positive.first().map(|p| p.0).ok_or_else(|| Error::MissingSnapshots(format!("no snapshots after t = 0")))?;
    let mut ladder = Vec::new();
    for (t, f) in positive {
        let j = (t / t0).log2();
        if (j - j.round()).abs() < 1e-9 && (ladder.is_empty() || j.round() as usize == ladder.len()) {
            ladder.push((t, f));
        }
    }
    if ladder.len() < 4 {
        return Err(Error::MissingSnapshots(format!("dyadic ladder has {} rungs, need 4", ladder.len())));
    }
    let m = &traj.monitors;
    if m.is_empty() {
        return Err(Error::MissingMonitors);
    }
    let b = m.t.iter().zip(&m.b_linf).filter(|(t, _)| **t >= t0 * (1.0 - 1e-12)).map(|(_, b)| *b).fold(0.0, f64::max);

    let mut ops: Vec<Vec<GroupMat>> = Vec::with_capacity(loops.len());
    for lp in loops {
        ops.push(ladder.iter().map(|(_, a)| transport(a, &lp.path)).collect::<Result<_>>()?);
    }
    let mut probes = Vec::new();
    for o in &ops {
        let traces: Vec<Complex64> = o.iter().map(|g| g.trace()).collect();
        let differences: Vec<f64> = traces.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
        let n = differences.len();
        let settling = differences[n - 3..].windows(2).all(|w| w[1] <= w[0] + TRACE_NOISE);
        probes.push(LoopProbe { traces, differences, settling });
    }
    let lengths: Vec<f64> = loops.iter().map(|l| l.path.length()).collect();
    let mut worst = f64::INFINITY;
    for i in 0..loops.len() {
        for j in i + 1..loops.len() {
            if norm(sub(loops[i].base(), loops[j].base())) > JOIN_TOL {
                continue;
            }
            let l = lengths[i].max(lengths[j]);
            let dist = loops[i].path.sup_distance(&loops[j].path);
            for r in 0..ladder.len() {
                let lhs = (ops[i][r] - ops[j][r]).op_norm();
                worst = worst.min(2.0 * b * l * dist + ODE_TOL - lhs);
            }
        }
    }
    let pass = probes.iter().all(|p| p.settling) && worst >= 0.0;
    Ok(ProbeReport {
        rungs: ladder.iter().map(|r| r.0).collect(),
        loops: probes,
        b,
        equicontinuity_margin: worst,
        pass,
    })
}
