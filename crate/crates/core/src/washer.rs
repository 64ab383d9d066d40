//! Magnetic potential of a planar washer carrying the rim-weighted current
//! λ(r) = 1/((1−r) log²(1/(1−r))), 1/2 ≤ r < 1, in the z = 0 plane.
//!
//! All radial integrals use u = log(1/(1−r)), for which λ dr = u⁻² du.
//! The azimuthal integral of 1/|x − x′| against cos φ is the circular-loop
//! kernel (2a/(ρr))·[(1 − k²/2)K − E].

use crate::boundary::{apply_boundary, BoundarySpec};
use crate::error::{Error, Result};
use crate::form::KForm;
use crate::grid::GridSpec;
use crate::quad::{gauss_kronrod, gauss_kronrod_pts, tanh_sinh_dist, QuadResult};
use crate::special::{loop_kernel, loop_kernel_log_kp};
use crate::transport::{line_integral, Path, Vec3};
use crate::LieAlgebraSpec;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_4, LN_2, PI, SQRT_2};
#[allow(unused_imports)]
use num_traits::Float;

pub const INNER_RADIUS: f64 = 0.5;
pub const OUTER_RADIUS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WasherConfig {
    /// Multiplies the profile λ.
    pub amplitude: f64,
    /// Cutoff for u = log(1/(1−r)); the remainder is added as I(r=1)/u_max.
    pub u_max: f64,
    /// Relative quadrature tolerance.
    pub tol: f64,
    /// Cutoff doublings in the energy refinement ladder.
    pub energy_doublings: usize,
}

impl Default for WasherConfig {
    fn default() -> Self {
        WasherConfig { amplitude: 1.0, u_max: 40.0, tol: 1e-11, energy_doublings: 12 }
    }
}

/// λ(r).
pub fn profile(r: f64) -> f64 {
    let s = 1.0 - r;
    1.0 / (s * (1.0 / s).ln().powi(2))
}

fn check(r: QuadResult, what: &str) -> Result<f64> {
    if r.converged && r.value.is_finite() {
        Ok(r.value)
    } else {
        Err(Error::Quadrature(format!("{} did not converge (error estimate {:e})", what, r.error)))
    }
}

/// ∫_{−π}^{π} cos φ dφ / |x − (r cos φ, r sin φ, 0)| at cylindrical (ρ, z), r = 1 − s.
fn ring_kernel(s: f64, rho: f64, z: f64) -> f64 {
    if rho == 0.0 {
        return 0.0;
    }
    let r = 1.0 - s;
    let dr = (rho - 1.0) + s;
    let a2 = (rho + r).powi(2) + z * z;
    let m1 = (dr * dr + z * z) / a2;
    let m = 4.0 * rho * r / a2;
    2.0 * a2.sqrt() / (rho * r) * loop_kernel(m, m1)
}

fn on_washer(rho: f64, z: f64) -> bool {
    z == 0.0 && (INNER_RADIUS..=OUTER_RADIUS).contains(&rho)
}

/// Parameters in u where the integrand in u changes scale for a field point (ρ, z).
fn u_breaks(rho: f64, z: f64, u_max: f64) -> Vec<f64> {
    let mut pts = vec![LN_2, u_max];
    let near = (1.0 - rho).abs().max(z.abs());
    if near > 0.0 {
        let u = -near.ln();
        for c in [u - 1.0, u, u + 1.0] {
            if c > LN_2 && c < u_max {
                pts.push(c);
            }
        }
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Potential {
    /// Cartesian components of A.
    pub value: Vec3,
    /// Azimuthal component A·φ̂.
    pub a_phi: f64,
    /// Magnitude of the analytic tail added beyond u_max.
    pub tail_bound: f64,
}

fn azimuthal(rho: f64, _z: f64, a_phi: f64, x: Vec3) -> Vec3 {
    if rho == 0.0 {
        [0.0; 3]
    } else {
        [-a_phi * x[1] / rho, a_phi * x[0] / rho, 0.0]
    }
}

/// A(x) = (4π)⁻¹ ∫ J(x′)/|x − x′| d²x′ via the ring kernel and a u-quadrature.
pub fn vector_potential(x: Vec3, cfg: &WasherConfig) -> Result<Potential> {
    let rho = x[0].hypot(x[1]);
    let z = x[2];
    if on_washer(rho, z) {
        return Err(Error::OnWasher);
    }
    if rho == 0.0 {
        return Ok(Potential { value: [0.0; 3], a_phi: 0.0, tail_bound: 0.0 });
    }
    let pts = u_breaks(rho, z, cfg.u_max);
    let body = check(
        gauss_kronrod_pts(|u| ring_kernel((-u).exp(), rho, z) / (u * u), &pts, 1e-15, cfg.tol, 400),
        "potential u-integral",
    )?;
    let tail = ring_kernel(0.0, rho, z) / cfg.u_max;
    let a_phi = cfg.amplitude * (body + tail) / (4.0 * PI);
    Ok(Potential {
        value: azimuthal(rho, z, a_phi, x),
        a_phi,
        tail_bound: cfg.amplitude * tail.abs() / (4.0 * PI),
    })
}

/// The same potential by direct quadrature in (u, φ), without the elliptic kernel.
pub fn vector_potential_direct(x: Vec3, cfg: &WasherConfig) -> Result<Potential> {
    let rho = x[0].hypot(x[1]);
    let z = x[2];
    if on_washer(rho, z) {
        return Err(Error::OnWasher);
    }
    if rho == 0.0 {
        return Ok(Potential { value: [0.0; 3], a_phi: 0.0, tail_bound: 0.0 });
    }
    let phi_integral = |s: f64| {
        let r = 1.0 - s;
        let d2 = ((rho - 1.0) + s).powi(2) + z * z;
        let width = (d2.sqrt() / rho.max(r)).min(PI);
        let pts = [0.0, 0.1 * width, width, PI];
        let res = gauss_kronrod_pts(
            |p| {
                let sh = (0.5 * p).sin();
                p.cos() / (d2 + 4.0 * rho * r * sh * sh).sqrt()
            },
            &pts,
            1e-15,
            1e-13,
            400,
        );
        2.0 * res.value
    };
    let pts = u_breaks(rho, z, cfg.u_max);
    let body = check(
        gauss_kronrod_pts(|u| phi_integral((-u).exp()) / (u * u), &pts, 1e-14, 1e-10, 400),
        "direct potential",
    )?;
    let tail = phi_integral(0.0) / cfg.u_max;
    let a_phi = cfg.amplitude * (body + tail) / (4.0 * PI);
    Ok(Potential {
        value: azimuthal(rho, z, a_phi, x),
        a_phi,
        tail_bound: cfg.amplitude * tail.abs() / (4.0 * PI),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentReport {
    /// amplitude / log 2 from the antiderivative −1/log(1/(1−r)).
    pub closed_form: f64,
    /// Gauss–Kronrod in u on [log 2, u_max] plus the exact tail 1/u_max.
    pub quadrature: f64,
}

/// ∫_{1/2}^{1} λ(r) dr.
pub fn total_current(cfg: &WasherConfig) -> Result<CurrentReport> {
    let body = check(gauss_kronrod(|u| 1.0 / (u * u), LN_2, cfg.u_max, 1e-16, 1e-14, 200), "current")?;
    Ok(CurrentReport {
        closed_form: cfg.amplitude / LN_2,
        quadrature: cfg.amplitude * (body + 1.0 / cfg.u_max),
    })
}

/// ∫_{−π}^{π} cos θ dθ / ((r−r′)² + 2rr′(1−cos θ))^{1/2} for r = 1 − e^{−u}, r′ = 1 − e^{−u′}
/// with d = |u − u′| > 0 supplied separately. Works in ln k′, so huge u never underflows.
fn energy_kernel(u: f64, up: f64, d: f64) -> f64 {
    let lo = u.min(up);
    let r1 = 1.0 - (-u).exp();
    let r2 = 1.0 - (-up).exp();
    let a = r1 + r2;
    let ln_kp = -lo + (-(-d).exp_m1()).ln() - a.ln();
    let l = if ln_kp < -18.5 {
        loop_kernel_log_kp(ln_kp)
    } else {
        let m1 = (2.0 * ln_kp).exp();
        let m = 4.0 * r1 * r2 / (a * a);
        loop_kernel(m, m1)
    };
    2.0 * a / (r1 * r2) * l
}

/// ∫_{log 2}^{u′} Θ(u, u′) u⁻² du.
fn energy_inner(up: f64, tol: f64) -> Result<f64> {
    let split = up - 1.0;
    let mut total = 0.0;
    let near_lo = if split > LN_2 {
        let r = gauss_kronrod(
            |w| {
                let u = w.exp();
                energy_kernel(u, up, up - u) / u
            },
            LN_2.ln(),
            split.ln(),
            1e-15,
            tol,
            400,
        );
        total += check(r, "energy inner (far)")?;
        split
    } else {
        LN_2
    };
    let r = tanh_sinh_dist(|u, _, db| energy_kernel(u, up, db) / (u * u), near_lo, up, tol, 12);
    total += check(QuadResult { converged: r.converged || r.error < 1e-9 * r.value.abs(), ..r }, "energy inner (near)")?;
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    /// Energy at the last cutoff.
    pub value: f64,
    /// u-cutoffs u_max·2^j.
    pub cutoffs: Vec<f64>,
    pub values: Vec<f64>,
    /// Relative change over the final doubling.
    pub last_gap: f64,
}

/// Relative gap allowed over the final cutoff doubling.
pub const ENERGY_CAUCHY_TOL: f64 = 1e-3;

/// W = 2π∫∫ λ(r)λ(r′) Θ(r, r′) dr dr′ on the triangle u < u′ doubled, in t = 1/u′.
pub fn energy(cfg: &WasherConfig) -> Result<EnergyReport> {
    let tol = cfg.tol.max(1e-10);
    let piece = |t0: f64, t1: f64| -> Result<f64> {
        let mut err = None;
        let r = gauss_kronrod(
            |t| match energy_inner(1.0 / t, tol) {
                Ok(v) => v,
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            },
            t0,
            t1,
            1e-14,
            1e-9,
            200,
        );
        if let Some(e) = err {
            return Err(e);
        }
        Ok(4.0 * PI * cfg.amplitude * cfg.amplitude * check(r, "energy outer")?)
    };
    let mut cutoffs = vec![cfg.u_max];
    let mut w = piece(1.0 / cfg.u_max, 1.0 / LN_2)?;
    let mut values = vec![w];
    let mut last_gap = f64::INFINITY;
    for j in 0..cfg.energy_doublings {
        let u0 = cutoffs[j];
        let inc = piece(0.5 / u0, 1.0 / u0)?;
        w += inc;
        last_gap = inc / w;
        cutoffs.push(2.0 * u0);
        values.push(w);
    }
    if !(last_gap <= ENERGY_CAUCHY_TOL) {
        return Err(Error::NotCauchy(last_gap));
    }
    Ok(EnergyReport { value: w, cutoffs, values, last_gap })
}

/// W at a fixed u-cutoff by integrating over the full square (both triangles),
/// for comparison with the doubled-triangle evaluation.
pub fn energy_square(cfg: &WasherConfig, cutoff: f64) -> Result<f64> {
    let tol = cfg.tol.max(1e-10);
    let mut err = None;
    let r = gauss_kronrod(
        |up| {
            let lower = energy_inner(up, tol);
            let upper = tanh_sinh_dist(|u, da, _| energy_kernel(u, up, da) / (u * u), up, cutoff, tol, 12);
            match lower {
                Ok(v) => (v + upper.value) / (up * up),
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            }
        },
        LN_2,
        cutoff,
        1e-13,
        1e-9,
        200,
    );
    if let Some(e) = err {
        return Err(e);
    }
    Ok(2.0 * PI * cfg.amplitude * cfg.amplitude * check(r, "energy square")?)
}

/// W at a fixed cutoff by the doubled triangle.
pub fn energy_triangle(cfg: &WasherConfig, cutoff: f64) -> Result<f64> {
    let tol = cfg.tol.max(1e-10);
    let mut err = None;
    let r = gauss_kronrod(
        |up| match energy_inner(up, tol) {
            Ok(v) => v / (up * up),
            Err(e) => {
                err = Some(e);
                0.0
            }
        },
        LN_2,
        cutoff,
        1e-13,
        1e-9,
        200,
    );
    if let Some(e) = err {
        return Err(e);
    }
    Ok(4.0 * PI * cfg.amplitude * cfg.amplitude * check(r, "energy triangle")?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerBound {
    pub value: f64,
    /// 1 + (1 + log(2/s′))/log²(2/s′).
    pub bound: f64,
}

/// ∫₀^{s′} μ(s) log(1/(s′ − s)) ds with μ(s) = 1/(s log² s), against its bound.
pub fn inner_log_bound(s_prime: f64) -> Result<InnerBound> {
    if !(s_prime > 0.0 && s_prime <= 0.5) {
        return Err(Error::OutOfRange(format!("s′ = {} outside (0, 1/2]", s_prime)));
    }
    // s = e^{−1/t}: μ ds = dt, t ∈ (0, 1/log(1/s′)]
    let w_end = -s_prime.ln();
    let t_end = 1.0 / w_end;
    let r = tanh_sinh_dist(
        |t, _, db| {
            if t <= 0.0 {
                return w_end;
            }
            let dw = db / (t_end * (t_end - db));
            -(s_prime.ln() + (-(-dw).exp_m1()).ln())
        },
        0.0,
        t_end,
        1e-12,
        12,
    );
    let l = (2.0 / s_prime).ln();
    Ok(InnerBound { value: r.value, bound: 1.0 + (1.0 + l) / (l * l) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaBound {
    pub u: f64,
    pub v: f64,
    pub theta0: f64,
    /// a = (sin θ₀/θ₀)^{1/2}.
    pub a: f64,
    pub lower: f64,
    pub integral: f64,
    pub upper: f64,
    pub pass: bool,
}

/// Quadrature tolerance applied to the sandwich comparison.
pub const SANDWICH_TOL: f64 = 1e-8;

fn theta_integral(u: f64, v: f64, theta0: f64, weight_cos: bool) -> Result<f64> {
    let w = (u / v).min(theta0);
    let mut pts = vec![0.0, 0.1 * w, w, theta0];
    if 10.0 * w < theta0 {
        pts.insert(3, 10.0 * w);
    }
    let r = gauss_kronrod_pts(
        |t| {
            let sh = (0.5 * t).sin();
            let c = if weight_cos { t.cos() } else { 1.0 };
            c / (u * u + 4.0 * v * v * sh * sh).sqrt()
        },
        &pts,
        1e-15,
        1e-13,
        400,
    );
    check(r, "θ integral")
}

/// (1/v)log(1 + vθ₀/u) ≤ ∫₀^{θ₀}(u² + 2v²(1 − cos θ))^{−1/2}dθ ≤ (√2/(va))log(1 + vaθ₀/u).
pub fn theta_bounds_check(u: f64, v: f64, theta0: f64) -> Result<ThetaBound> {
    if !(u > 0.0 && u < 1.0) || !(0.5..=2.0).contains(&v) || !(theta0 > 0.0 && theta0 < 0.5 * PI) {
        return Err(Error::OutOfRange(format!("u = {}, v = {}, θ₀ = {}", u, v, theta0)));
    }
    let a = (theta0.sin() / theta0).sqrt();
    let integral = theta_integral(u, v, theta0, false)?;
    let lower = (v * theta0 / u).ln_1p() / v;
    let upper = SQRT_2 / (v * a) * (v * a * theta0 / u).ln_1p();
    let pass = lower <= integral + SANDWICH_TOL && integral <= upper + SANDWICH_TOL;
    Ok(ThetaBound { u, v, theta0, a, lower, integral, upper, pass })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundFit {
    pub c1: f64,
    pub c2: f64,
    pub big_c1: f64,
    pub big_c2: f64,
    /// (u, v, ∫_{−π/4}^{π/4} cos θ (u² + 2v²(1 − cos θ))^{−1/2} dθ).
    pub rows: Vec<(f64, f64, f64)>,
    pub pass: bool,
}

/// Fits c₁ + c₂ log(1/u) ≤ M(u, v) ≤ C₁ + C₂ log(1/u) over a (u, v) grid: the common
/// slope is the least-squares slope, the intercepts are the extreme residuals.
pub fn fit_log_sandwich(us: &[f64], vs: &[f64]) -> Result<BoundFit> {
    let mut rows = Vec::new();
    for &u in us {
        for &v in vs {
            if !(u > 0.0 && u < 1.0) || !(0.5..=2.0).contains(&v) {
                return Err(Error::OutOfRange(format!("u = {}, v = {}", u, v)));
            }
            rows.push((u, v, 2.0 * theta_integral(u, v, FRAC_PI_4, true)?));
        }
    }
    if rows.len() < 2 {
        return Err(Error::OutOfRange(format!("{} grid points, need 2", rows.len())));
    }
    let n = rows.len() as f64;
    let xs: Vec<f64> = rows.iter().map(|r| (1.0 / r.0).ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = rows.iter().map(|r| r.2).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&rows).map(|(x, r)| (x - mx) * (r.2 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::OutOfRange(format!("need at least two distinct u values")));
    }
    let slope = sxy / sxx;
    let resid: Vec<f64> = xs.iter().zip(&rows).map(|(x, r)| r.2 - slope * x).collect();
    let c1 = resid.iter().cloned().fold(f64::INFINITY, f64::min);
    let big_c1 = resid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pass = slope > 0.0
        && xs.iter().zip(&rows).all(|(x, r)| {
            c1 + slope * x <= r.2 + SANDWICH_TOL && r.2 <= big_c1 + slope * x + SANDWICH_TOL
        });
    Ok(BoundFit { c1, c2: slope, big_c1, big_c2: slope, rows, pass })
}

/// Boundary of the annular sector 1+ε ≤ ρ ≤ R_out, 0 ≤ φ ≤ Φ in the z = 0 plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopCEpsilon {
    pub eps: f64,
    pub r_out: f64,
    pub phi_span: f64,
}

impl LoopCEpsilon {
    pub fn new(eps: f64) -> Self {
        LoopCEpsilon { eps, r_out: 1.5, phi_span: 0.5 * PI }
    }

    /// Inner arc counter-clockwise, radial out, outer arc clockwise, radial in;
    /// positions are shifted by −origin.
    pub fn segments(&self, origin: Vec3) -> [Path; 4] {
        let r_in = 1.0 + self.eps;
        let c = [-origin[0], -origin[1], -origin[2]];
        let (sp, cp) = self.phi_span.sin_cos();
        let at = |r: f64, s: f64, co: f64| [c[0] + r * co, c[1] + r * s, c[2]];
        [
            Path::arc(c, [r_in, 0.0, 0.0], [0.0, r_in, 0.0], 0.0, self.phi_span),
            Path::line(at(r_in, sp, cp), at(self.r_out, sp, cp)),
            Path::arc(c, [self.r_out, 0.0, 0.0], [0.0, self.r_out, 0.0], self.phi_span, 0.0),
            Path::line(at(self.r_out, 0.0, 1.0), at(r_in, 0.0, 1.0)),
        ]
    }

    pub fn path(&self, origin: Vec3) -> Result<Path> {
        let [a, b, c, d] = self.segments(origin);
        a.concat(b)?.concat(c)?.concat(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxReport {
    pub eps: f64,
    pub flux: f64,
    pub inner: f64,
    pub outer: f64,
    /// Sum over both radial segments.
    pub radial: f64,
    pub tail_bound: f64,
}

/// ∮_{C_ε} A·dx for the washer potential, segment by segment.
pub fn flux_probe(lp: &LoopCEpsilon, cfg: &WasherConfig) -> Result<FluxReport> {
    if !(lp.eps > 0.0) {
        return Err(Error::DivergentFlux);
    }
    let segs = lp.segments([0.0; 3]);
    let mut parts = [0.0; 4];
    let mut tail: f64 = 0.0;
    for (k, seg) in segs.iter().enumerate() {
        let mut err = None;
        let r = gauss_kronrod(
            |s| {
                let (p, v) = seg.eval(s, true);
                match vector_potential(p, cfg) {
                    Ok(a) => {
                        tail = tail.max(a.tail_bound);
                        a.value[0] * v[0] + a.value[1] * v[1] + a.value[2] * v[2]
                    }
                    Err(e) => {
                        err = Some(e);
                        0.0
                    }
                }
            },
            0.0,
            1.0,
            1e-13,
            1e-10,
            50,
        );
        if let Some(e) = err {
            return Err(e);
        }
        parts[k] = check(r, "flux segment")?;
    }
    let len = lp.phi_span * (1.0 + lp.eps + lp.r_out);
    Ok(FluxReport {
        eps: lp.eps,
        flux: parts.iter().sum(),
        inner: parts[0],
        outer: parts[2],
        radial: parts[1] + parts[3],
        tail_bound: tail * len,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthFit {
    /// flux ≈ a·log log(1/ε) + b.
    pub a: f64,
    pub b: f64,
    /// max |fit − flux|/|flux| over the ladder.
    pub max_rel_residual: f64,
    pub strictly_increasing: bool,
}

/// Least-squares fit of a flux ladder (ε decreasing) against log log(1/ε).
pub fn fit_loglog(eps: &[f64], flux: &[f64]) -> Result<GrowthFit> {
    if eps.len() != flux.len() || eps.len() < 3 || eps.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::OutOfRange(format!("ladder needs ≥ 3 values of ε in (0, 1)")));
    }
    let xs: Vec<f64> = eps.iter().map(|e| (1.0 / e).ln().ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = flux.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(flux).map(|(x, y)| (x - mx) * (y - my)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let max_rel_residual = xs.iter().zip(flux).map(|(x, y)| ((a * x + b - y) / y).abs()).fold(0.0, f64::max);
    let mut order: Vec<(f64, f64)> = eps.iter().cloned().zip(flux.iter().cloned()).collect();
    order.sort_by(|p, q| q.0.partial_cmp(&p.0).unwrap());
    let strictly_increasing = order.windows(2).all(|w| w[1].1 > w[0].1);
    Ok(GrowthFit { a, b, max_rel_residual, strictly_increasing })
}

#[derive(Debug, Clone)]
pub struct WasherGrid {
    pub form: KForm,
    /// Position of grid node (0, 0, 0) in washer coordinates.
    pub origin: Vec3,
    /// Nodes within one grid spacing of the washer.
    pub near_nodes: usize,
    /// Nodes whose |A| was reduced to the cap.
    pub clipped_nodes: usize,
    pub cap: Option<f64>,
    /// Largest face-normal component removed by the boundary fill.
    pub removed_normal: f64,
}

fn washer_distance(x: Vec3) -> f64 {
    let rho = x[0].hypot(x[1]);
    let dr = (INNER_RADIUS - rho).max(rho - OUTER_RADIUS).max(0.0);
    dr.hypot(x[2])
}

/// Samples A at the nodes of `grid` placed with node (0,0,0) at `origin`, then applies `bc`.
/// Nodes within one spacing of the washer need a cap on |A|; without one the call fails.
pub fn washer_to_grid(
    cfg: &WasherConfig,
    grid: GridSpec,
    origin: Vec3,
    bc: BoundarySpec,
    cap: Option<f64>,
) -> Result<WasherGrid> {
    let h = grid.min_spacing();
    let mut near_nodes = 0;
    let mut clipped_nodes = 0;
    let mut form = KForm::zeros(1, grid, LieAlgebraSpec::u1());
    let mut failure = None;
    grid.for_each_real(|i, j, k| {
        if failure.is_some() {
            return;
        }
        let p = grid.position(i as isize, j as isize, k as isize);
        let x = [p[0] + origin[0], p[1] + origin[1], p[2] + origin[2]];
        let near = washer_distance(x) < h;
        if near {
            near_nodes += 1;
        }
        let a = match (near, cap) {
            (true, None) => {
                failure = Some(Error::WasherIntersectsBox);
                return;
            }
            (true, Some(c)) => {
                let rho = x[0].hypot(x[1]);
                let a_phi = if on_washer(rho, x[2]) {
                    clipped_nodes += 1;
                    c
                } else {
                    match vector_potential(x, cfg) {
                        Ok(v) if v.a_phi.abs() > c => {
                            clipped_nodes += 1;
                            c * v.a_phi.signum()
                        }
                        Ok(v) => v.a_phi,
                        Err(e) => {
                            failure = Some(e);
                            return;
                        }
                    }
                };
                azimuthal(rho, x[2], a_phi, x)
            }
            (false, _) => match vector_potential(x, cfg) {
                Ok(v) => v.value,
                Err(e) => {
                    failure = Some(e);
                    return;
                }
            },
        };
        let node = grid.idx(i as isize, j as isize, k as isize);
        for (c, ac) in a.iter().enumerate() {
            form.at_mut(c, node)[0] = *ac;
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let before = form.clone();
    apply_boundary(&mut form, bc);
    let mut removed_normal: f64 = 0.0;
    grid.for_each_real(|i, j, k| {
        let node = grid.idx(i as isize, j as isize, k as isize);
        for c in 0..3 {
            removed_normal = removed_normal.max((before.at(c, node)[0] - form.at(c, node)[0]).abs());
        }
    });
    Ok(WasherGrid { form, origin, near_nodes, clipped_nodes, cap, removed_normal })
}

/// ∮_{C_ε} A·dx for a U(1) grid field, via the trilinear interpolant.
pub fn grid_flux(a: &KForm, lp: &LoopCEpsilon, origin: Vec3) -> Result<f64> {
    Ok(line_integral(a, &lp.path(origin)?)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::BoundaryKind;

    fn cfg() -> WasherConfig {
        WasherConfig::default()
    }

    #[test]
    fn potential_vanishes_on_axis_and_is_azimuthal() {
        let c = cfg();
        for z in [-1.0, 0.0, 0.3] {
            assert_eq!(vector_potential([0.0, 0.0, z], &c).unwrap().value, [0.0; 3]);
        }
        for x in [[0.3, 0.4, 0.1], [-1.2, 0.5, -0.2], [0.7, 0.7, 0.05], [0.2, 0.0, 0.0]] {
            let p = vector_potential(x, &c).unwrap();
            let radial = p.value[0] * x[0] + p.value[1] * x[1];
            assert!(radial.abs() < 1e-15 * (1.0 + p.a_phi.abs()));
            assert_eq!(p.value[2], 0.0);
            assert!(p.a_phi > 0.0);
        }
        assert!(matches!(vector_potential([0.75, 0.0, 0.0], &c), Err(Error::OnWasher)));
        assert!(matches!(vector_potential([0.0, 1.0, 0.0], &c), Err(Error::OnWasher)));
    }

    #[test]
    fn kernel_route_matches_direct_quadrature() {
        let c = cfg();
        for x in [[0.3, 0.4, 0.1], [1.3, 0.0, 0.0], [0.6, 0.0, 0.2], [0.0, 1.05, 0.01], [2.0, 1.0, -1.0]] {
            let a = vector_potential(x, &c).unwrap();
            let b = vector_potential_direct(x, &c).unwrap();
            assert!((a.a_phi - b.a_phi).abs() < 1e-8 * a.a_phi.abs(), "{:?}: {} vs {}", x, a.a_phi, b.a_phi);
        }
    }

    #[test]
    fn potential_grows_toward_the_rim() {
        let c = cfg();
        let mut last = 0.0;
        for d in [1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
            let a = vector_potential([1.0 + d, 0.0, 0.0], &c).unwrap().a_phi;
            assert!(a > last);
            last = a;
        }
        // far field falls off like a dipole
        let a1 = vector_potential([0.0, 20.0, 0.0], &c).unwrap().a_phi;
        let a2 = vector_potential([0.0, 40.0, 0.0], &c).unwrap().a_phi;
        assert!((a1 / a2 - 4.0).abs() < 0.05);
    }

    #[test]
    fn total_current_matches_closed_form() {
        let c = cfg();
        let r = total_current(&c).unwrap();
        assert!((r.quadrature - r.closed_form).abs() < 1e-10);
        assert!((r.closed_form - 1.0 / LN_2).abs() < 1e-15);
        let r2 = total_current(&WasherConfig { amplitude: 2.5, ..c }).unwrap();
        assert!((r2.quadrature - 2.5 * r.quadrature).abs() < 1e-12);
        // the profile integrated in s = 1 − r on dyadic pieces down to 2⁻⁶⁰, plus the exact remainder
        let pts: Vec<f64> = (1..=60).rev().map(|k| 0.5f64.powi(k)).collect();
        let s_int = gauss_kronrod_pts(|s| 1.0 / (s * s.ln().powi(2)), &pts, 1e-16, 1e-13, 2000).value;
        assert!((s_int + 1.0 / (60.0 * LN_2) - r.closed_form).abs() < 1e-10);
    }

    #[test]
    fn inner_log_integral_against_reference_values() {
        // reference values from an independent 30-digit evaluation
        let reference = [(0.5, 2.508_807_502_286_721_1), (0.1, 1.209_350_946_031_438_4), (0.01, 1.061_253_528_485_378_6)];
        for (s, v) in reference {
            let r = inner_log_bound(s).unwrap();
            assert!((r.value - v).abs() < 1e-10, "{}: {}", s, r.value);
        }
        // the bound needs μ decreasing on (s′/2, s′), i.e. s′ ≤ 2e⁻²; at s′ = 1/2 it fails
        assert!(inner_log_bound(0.1).unwrap().value <= inner_log_bound(0.1).unwrap().bound);
        assert!(inner_log_bound(0.01).unwrap().value <= inner_log_bound(0.01).unwrap().bound);
        let half = inner_log_bound(0.5).unwrap();
        assert!(half.value > half.bound);
        assert!(inner_log_bound(0.7).is_err());
        assert!(inner_log_bound(0.0).is_err());
    }

    #[test]
    fn theta_sandwich_holds_on_the_grid() {
        let r = theta_bounds_check(0.1, 1.0, FRAC_PI_4).unwrap();
        assert!((r.a * r.a - 0.900316316157106).abs() < 1e-12);
        for u in [0.5, 0.1, 0.01, 0.001] {
            for v in [0.5, 1.0, 2.0] {
                let r = theta_bounds_check(u, v, FRAC_PI_4).unwrap();
                assert!(r.pass, "{:?}", r);
            }
        }
        assert!(theta_bounds_check(1.0, 1.0, 0.5).is_err());
        assert!(theta_bounds_check(0.5, 3.0, 0.5).is_err());
        assert!(theta_bounds_check(0.5, 1.0, 2.0).is_err());
    }

    #[test]
    fn log_sandwich_fit_covers_the_grid() {
        let f = fit_log_sandwich(&[0.5, 0.1, 0.01, 0.001], &[0.5, 1.0, 2.0]).unwrap();
        assert!(f.pass && f.c2 > 0.0 && f.c1 <= f.big_c1);
        assert_eq!(f.rows.len(), 12);
    }

    #[test]
    fn loop_flux_has_no_radial_part_and_grows() {
        let c = cfg();
        let eps = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];
        let mut flux = Vec::new();
        for &e in &eps {
            let r = flux_probe(&LoopCEpsilon::new(e), &c).unwrap();
            assert!(r.radial.abs() < 1e-12);
            assert!(r.inner > 0.0 && r.outer < 0.0);
            flux.push(r.flux);
        }
        let fit = fit_loglog(&eps, &flux).unwrap();
        assert!(fit.strictly_increasing);
        assert!(fit.a > 0.0);
        assert!(fit.max_rel_residual <= 0.05, "{:?}", fit);
        assert!(matches!(flux_probe(&LoopCEpsilon::new(0.0), &c), Err(Error::DivergentFlux)));
    }

    #[test]
    fn loop_geometry() {
        let lp = LoopCEpsilon::new(0.1);
        let p = lp.path([0.0; 3]).unwrap();
        let s = p.start();
        assert!((s[0] - 1.1).abs() < 1e-15 && s[1].abs() < 1e-15);
        let e = p.end();
        assert!((e[0] - 1.1).abs() < 1e-12 && e[1].abs() < 1e-12);
        let len = p.length();
        assert!((len - (0.5 * PI * 2.6 + 0.8)).abs() < 1e-10);
    }

    #[test]
    fn grid_sampling() {
        let c = cfg();
        let g = GridSpec::new([2.0, 2.0, 1.0], [11, 11, 6]).unwrap();
        let origin = [-0.25, -0.25, -0.5];
        // node at z = 0 within the washer footprint
        assert!(matches!(
            washer_to_grid(&c, g, [-1.0, -1.0, -0.5], BoundaryKind::Neumann.into(), None),
            Err(Error::WasherIntersectsBox)
        ));
        let w = washer_to_grid(&c, g, origin, BoundaryKind::Neumann.into(), Some(1.0)).unwrap();
        assert_eq!(w.clipped_nodes, 0);
        assert!(w.removed_normal > 0.0);
        let x = [0.75, 0.4, 0.3];
        let i = g.idx(5, 3, 4);
        let p = g.position(5, 3, 4);
        let q = [p[0] + origin[0], p[1] + origin[1], p[2] + origin[2]];
        let v = vector_potential(q, &c).unwrap();
        let _ = x;
        assert!((w.form.at(1, i)[0] - v.value[1]).abs() < 1e-15);
        assert_eq!(w.form.at(2, i)[0], 0.0);
    }

    #[test]
    fn energy_triangle_doubling_matches_full_square() {
        let c = cfg();
        let t = energy_triangle(&c, 20.0).unwrap();
        let q = energy_square(&c, 20.0).unwrap();
        assert!((t - q).abs() < 1e-8 * t, "{} vs {}", t, q);
    }

    #[test]
    fn energy_ladder_is_increasing_and_cauchy() {
        let c = cfg();
        let r = energy(&c).unwrap();
        assert!(r.values.windows(2).all(|w| w[1] > w[0]));
        assert!(r.last_gap <= ENERGY_CAUCHY_TOL);
        assert!((r.values[0] - energy_triangle(&c, c.u_max).unwrap()).abs() < 1e-8 * r.values[0]);
        let short = WasherConfig { energy_doublings: 1, ..c };
        assert!(matches!(energy(&short), Err(Error::NotCauchy(_))));
    }

    #[test]
    fn theta_bounds_near_u_one_are_comparable() {
        let r = theta_bounds_check(1.0 - 1e-9, 1.0, FRAC_PI_4).unwrap();
        assert!(r.pass);
        assert!(r.upper / r.lower < 4.0 && r.integral / r.lower < 4.0);
    }

    #[test]
    fn sampled_field_matches_continuum_loop_integral() {
        let c = cfg();
        let g = GridSpec::new([2.0, 2.0, 1.0], [21, 21, 12]).unwrap();
        let origin = [-0.25, -0.25, -0.5];
        let w = washer_to_grid(&c, g, origin, BoundaryKind::Neumann.into(), Some(100.0)).unwrap();
        assert!(w.near_nodes > 0);
        assert_eq!(w.clipped_nodes, 0);
        // no node sits on the axis here; check azimuthality instead
        g.for_each_real(|i, j, k| {
            if i == 0 || j == 0 || i == 20 || j == 20 || k == 0 || k == 11 {
                return;
            }
            let p = g.position(i as isize, j as isize, k as isize);
            let x = [p[0] + origin[0], p[1] + origin[1]];
            let n = g.idx(i as isize, j as isize, k as isize);
            let a = [w.form.at(0, n)[0], w.form.at(1, n)[0], w.form.at(2, n)[0]];
            assert!((a[0] * x[0] + a[1] * x[1]).abs() < 1e-14 && a[2] == 0.0);
        });
        let lp = LoopCEpsilon { eps: 0.2, r_out: 1.4, phi_span: 0.5 * PI };
        let cont = flux_probe(&lp, &c).unwrap().flux;
        let grid = grid_flux(&w.form, &lp, origin).unwrap();
        assert!((grid - cont).abs() <= g.min_spacing() * cont.abs(), "{} vs {}", grid, cont);
    }

    #[test]
    fn axis_nodes_are_zero() {
        let c = cfg();
        let g = GridSpec::new([1.0, 1.0, 1.0], [5, 5, 5]).unwrap();
        let w = washer_to_grid(&c, g, [-0.5, -0.5, 0.25], BoundaryKind::Dirichlet.into(), None).unwrap();
        for k in 0..5 {
            let n = g.idx(2, 2, k);
            for comp in 0..3 {
                assert_eq!(w.form.at(comp, n)[0], 0.0);
            }
        }
    }
}
