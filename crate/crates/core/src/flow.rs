//! Yang-Mills heat flow A' = −d_A*B (and the gauge-fixed ZDS variant) by RK4,
//! with monitor series and checks of the smoothing bounds.

use crate::boundary::{apply_boundary, constraint_violation, BoundaryKind, BoundarySpec};
use crate::error::{Error, Result};
use crate::form::{KForm, NormKind};
use crate::ops::{contraction_bracket, curvature, d_cov, dstar, dstar_cov, hodge_laplacian};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    YM,
    ZDS,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    RK4,
}

/// Relative slack for the energy-increase step rejection.
pub const ENERGY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub bc: BoundarySpec,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub variant: Variant,
    /// Times at which A is stored; t = 0 and t_end are always stored.
    pub snapshot_times: Vec<f64>,
}

impl FlowConfig {
    pub fn new(bc: BoundaryKind, dt: f64, t_end: f64) -> Self {
        FlowConfig {
            bc: bc.into(),
            dt,
            t_end,
            scheme: Scheme::RK4,
            variant: Variant::YM,
            snapshot_times: Vec::new(),
        }
    }

    /// Snapshots every `every` time units.
    pub fn with_uniform_snapshots(mut self, every: f64) -> Self {
        let n = (self.t_end / every).round() as usize;
        self.snapshot_times = (1..=n).map(|i| i as f64 * every).collect();
        self
    }

    pub fn validate(&self, h: f64) -> Result<()> {
        if !(self.t_end > 0.0) {
            return Err(Error::InvalidConfig(format!("t_end = {} must be positive", self.t_end)));
        }
        let ceiling = h * h / 8.0;
        if !(self.dt > 0.0) || self.dt > ceiling * (1.0 + 1e-12) {
            return Err(Error::InvalidConfig(format!("dt = {} outside (0, h²/8 = {}]", self.dt, ceiling)));
        }
        if self.variant == Variant::ZDS && self.bc.kind == BoundaryKind::Marini {
            return Err(Error::InvalidConfig(String::from("the ZDS variant needs Neumann or Dirichlet")));
        }
        if self.snapshot_times.iter().any(|&t| !(t >= 0.0 && t <= self.t_end * (1.0 + 1e-12))) {
            return Err(Error::InvalidConfig(String::from("snapshot times must lie in [0, t_end]")));
        }
        Ok(())
    }
}

/// Per accepted step diagnostics; index 0 is t = 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MonitorSeries {
    pub t: Vec<f64>,
    pub b_l2: Vec<f64>,
    pub b_linf: Vec<f64>,
    pub ap_l2: Vec<f64>,
    pub ap_linf: Vec<f64>,
    /// ‖B′‖₂ with B′ = d_A A′.
    pub bp_l2: Vec<f64>,
    /// Trapezoid approximation of ∫₀ᵗ‖A′‖₂².
    pub action: Vec<f64>,
    /// 2c∫₀ᵗ‖B‖∞ (trapezoid).
    pub psi_inf: Vec<f64>,
    /// max_{s≤t} s^{3/4}‖B(s)‖∞.
    pub beta: Vec<f64>,
    /// Number of step halvings forced by the energy check.
    pub rejections: usize,
}

impl MonitorSeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    fn push(&mut self, t: f64, b: &KForm, ap: &KForm, bp: &KForm, c: f64) -> Result<()> {
        let b_l2 = b.norm(NormKind::L2)?;
        let b_linf = b.norm(NormKind::Linf)?;
        let ap_l2 = ap.norm(NormKind::L2)?;
        let ap_linf = ap.norm(NormKind::Linf)?;
        let bp_l2 = bp.norm(NormKind::L2)?;
        let (action, psi, beta) = match self.t.last() {
            None => (0.0, 0.0, 0.0),
            Some(&t0) => {
                let n = self.t.len() - 1;
                let d = t - t0;
                (
                    self.action[n] + 0.5 * d * (self.ap_l2[n].powi(2) + ap_l2 * ap_l2),
                    self.psi_inf[n] + c * d * (self.b_linf[n] + b_linf),
                    self.beta[n].max(t.powf(0.75) * b_linf),
                )
            }
        };
        self.t.push(t);
        self.b_l2.push(b_l2);
        self.b_linf.push(b_linf);
        self.ap_l2.push(ap_l2);
        self.ap_linf.push(ap_linf);
        self.bp_l2.push(bp_l2);
        self.action.push(action);
        self.psi_inf.push(psi);
        self.beta.push(beta);
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FlowTrajectory {
    pub times: Vec<f64>,
    pub fields: Vec<KForm>,
    pub monitors: MonitorSeries,
    pub config: FlowConfig,
}

/// A' = −d_A* B.
pub fn ym_rhs(a: &KForm, bc: BoundarySpec) -> Result<KForm> {
    let mut b = curvature(a)?;
    apply_boundary(&mut b, bc);
    Ok(dstar_cov(a, &b)?.scaled(-1.0))
}

/// C' = −(d_C* B_C + d_C d*C) with the plain codifferential in the gauge term.
pub fn zds_rhs(c: &KForm, bc: BoundarySpec) -> Result<KForm> {
    let mut out = ym_rhs(c, bc)?;
    let mut div = dstar(c)?;
    apply_boundary(&mut div, bc);
    let g = d_cov(c, &div)?;
    out.axpy(-1.0, &g);
    Ok(out)
}

fn rhs(a: &KForm, cfg: &FlowConfig) -> Result<KForm> {
    let mut r = match cfg.variant {
        Variant::YM => ym_rhs(a, cfg.bc)?,
        Variant::ZDS => zds_rhs(a, cfg.bc)?,
    };
    apply_boundary(&mut r, cfg.bc);
    Ok(r)
}

fn stage(a: &KForm, s: f64, k: &KForm, bc: BoundarySpec) -> KForm {
    let mut x = a.clone();
    x.axpy(s, k);
    apply_boundary(&mut x, bc);
    x
}

fn rk4_step(a: &KForm, k1: &KForm, dt: f64, cfg: &FlowConfig) -> Result<KForm> {
    let k2 = rhs(&stage(a, 0.5 * dt, k1, cfg.bc), cfg)?;
    let k3 = rhs(&stage(a, 0.5 * dt, &k2, cfg.bc), cfg)?;
    let k4 = rhs(&stage(a, dt, &k3, cfg.bc), cfg)?;
    let mut out = a.clone();
    out.axpy(dt / 6.0, k1);
    out.axpy(dt / 3.0, &k2);
    out.axpy(dt / 3.0, &k3);
    out.axpy(dt / 6.0, &k4);
    apply_boundary(&mut out, cfg.bc);
    Ok(out)
}

/// Monitor quantities at a state: (B, A', B').
fn diagnostics(a: &KForm, ap: &KForm) -> Result<(KForm, KForm)> {
    let b = curvature(a)?;
    let bp = d_cov(a, ap)?;
    Ok((b, bp))
}

/// RK4 integration from A₀ to `cfg.t_end`.
pub fn integrate(a0: &KForm, cfg: &FlowConfig) -> Result<FlowTrajectory> {
    a0.require_degree(1)?;
    a0.grid.require_min_nodes(8)?;
    cfg.validate(a0.grid.min_spacing())?;
    let scale = 1.0 + a0.norm(NormKind::Linf)?;
    let violation = constraint_violation(a0, cfg.bc);
    if violation > 1e-12 * scale {
        return Err(Error::BoundaryViolation(violation));
    }
    let c = a0.alg.c;
    let mut a = a0.clone();
    apply_boundary(&mut a, cfg.bc);

    let mut stops: Vec<f64> = cfg.snapshot_times.iter().copied().filter(|&t| t > 0.0).collect();
    stops.push(cfg.t_end);
    stops.sort_by(|x, y| x.partial_cmp(y).unwrap());
    stops.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * cfg.t_end);

    let mut times = vec![0.0];
    let mut fields = vec![a.clone()];
    let mut monitors = MonitorSeries::default();
    let mut k1 = rhs(&a, cfg)?;
    let (b, bp) = diagnostics(&a, &k1)?;
    let mut energy = b.norm(NormKind::L2)?;
    monitors.push(0.0, &b, &k1, &bp, c)?;

    let mut t = 0.0;
    let mut step = 0usize;
    for &stop in &stops {
        while stop - t > 1e-12 * cfg.t_end {
            let mut dt = cfg.dt.min(stop - t);
            let (next, b_next, e_next) = loop {
                let cand = rk4_step(&a, &k1, dt, cfg)?;
                if !cand.is_finite() {
                    return Err(Error::NonFinite { step, t: t + dt });
                }
                let b_cand = curvature(&cand)?;
                let e = b_cand.norm(NormKind::L2)?;
                if !e.is_finite() {
                    return Err(Error::NonFinite { step, t: t + dt });
                }
                if cfg.variant == Variant::YM && e > energy * (1.0 + ENERGY_SLACK) {
                    monitors.rejections += 1;
                    dt *= 0.5;
                    if dt < 1e-12 {
                        return Err(Error::StepUnderflow { step, t });
                    }
                    continue;
                }
                break (cand, b_cand, e);
            };
            t = if stop - (t + dt) <= 1e-12 * cfg.t_end { stop } else { t + dt };
            a = next;
            energy = e_next;
            k1 = rhs(&a, cfg)?;
            let bp = d_cov(&a, &k1)?;
            monitors.push(t, &b_next, &k1, &bp, c)?;
            step += 1;
        }
        if times.last().map_or(true, |&l| stop > l) {
            times.push(stop);
            fields.push(a.clone());
        }
    }
    Ok(FlowTrajectory { times, fields, monitors, config: cfg.clone() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    /// max |∂_t B − (bochner + defect)(B)| over interior snapshots and nodes.
    pub b_residual: f64,
    /// max |∂_t A′ − (bochner + defect)(A′) − [A′⌟B]|.
    pub ap_residual: f64,
    /// Largest |∂_t B| and |∂_t A′| seen, for normalisation.
    pub b_scale: f64,
    pub ap_scale: f64,
    pub spacing: f64,
}

/// Compares central time differences of B and A′ across snapshots with the
/// evolution identities they satisfy along the flow.
pub fn verify_identities(traj: &FlowTrajectory) -> Result<IdentityReport> {
    let n = traj.times.len();
    if n < 3 {
        return Err(Error::MissingSnapshots(format!("{} snapshots, need 3", n)));
    }
    if traj.config.variant != Variant::YM {
        return Err(Error::InvalidConfig(String::from("identities hold for the YM variant")));
    }
    let spacing = traj.times[1] - traj.times[0];
    for w in traj.times.windows(2) {
        if ((w[1] - w[0]) - spacing).abs() > 1e-9 * spacing {
            return Err(Error::NonUniformSnapshots);
        }
    }
    let bc = traj.config.bc;
    let bs: Vec<KForm> = traj
        .fields
        .iter()
        .map(|a| {
            let mut b = curvature(a)?;
            apply_boundary(&mut b, bc);
            Ok(b)
        })
        .collect::<Result<_>>()?;
    let aps: Vec<KForm> = traj.fields.iter().map(|a| rhs(a, &traj.config)).collect::<Result<_>>()?;
    let mut rep = IdentityReport { b_residual: 0.0, ap_residual: 0.0, b_scale: 0.0, ap_scale: 0.0, spacing };
    for m in 1..n - 1 {
        let a = &traj.fields[m];
        let mut db = bs[m + 1].clone();
        db.axpy(-1.0, &bs[m - 1]);
        let db = db.scaled(0.5 / spacing);
        let rb = hodge_laplacian(a, &bs[m])?;
        rep.b_residual = rep.b_residual.max(db.max_diff(&rb));
        rep.b_scale = rep.b_scale.max(db.norm(NormKind::Linf)?);

        let mut dap = aps[m + 1].clone();
        dap.axpy(-1.0, &aps[m - 1]);
        let dap = dap.scaled(0.5 / spacing);
        let mut ra = hodge_laplacian(a, &aps[m])?;
        ra.axpy(1.0, &contraction_bracket(&aps[m], &bs[m])?);
        rep.ap_residual = rep.ap_residual.max(dap.max_diff(&ra));
        rep.ap_scale = rep.ap_scale.max(dap.norm(NormKind::Linf)?);
    }
    Ok(rep)
}

/// Constants of the smoothing theorem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConstants {
    pub c_n: f64,
    pub a4: f64,
    /// Commutator constant of the algebra.
    pub c: f64,
    pub tau: f64,
    pub a: f64,
    pub gamma: f64,
}

impl FlowConstants {
    pub fn new(c_n: f64, a4: f64, c: f64, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau <= 0.5) {
            return Err(Error::InvalidConfig(format!("τ = {} outside (0, 1/2]", tau)));
        }
        let a = 1.0 / (2.0 * c_n * a4);
        let gamma = c_n + 4.0 * c_n * c_n * a * (8.0 * c_n * a).exp() * a4;
        Ok(FlowConstants { c_n, a4, c, tau, a, gamma })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub name: &'static str,
    /// Worst-case left and right sides (at the time of the smallest margin).
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tol: f64,
    pub at_time: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub gate_lhs: f64,
    pub gate_rhs: f64,
    pub gate_pass: bool,
    pub checks: Vec<BoundCheck>,
}

impl BoundReport {
    pub fn check(&self, name: &str) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.verdict != Verdict::Fail)
    }
}

/// Relative time-quadrature tolerance for the energy-type inequality of A′.
pub const A33_REL_TOL: f64 = 1e-6;

fn worst(
    name: &'static str,
    rows: impl Iterator<Item = (f64, f64, f64)>,
    tol: f64,
    applicable: bool,
) -> BoundCheck {
    let mut best = BoundCheck {
        name,
        lhs: 0.0,
        rhs: 0.0,
        margin: f64::INFINITY,
        tol,
        at_time: f64::NAN,
        verdict: Verdict::Pass,
    };
    for (t, lhs, rhs) in rows {
        let m = rhs - lhs;
        if m < best.margin {
            best.margin = m;
            best.lhs = lhs;
            best.rhs = rhs;
            best.at_time = t;
        }
    }
    best.verdict = if !applicable {
        Verdict::NotApplicable
    } else if best.margin >= -tol {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    best
}

/// Evaluates the smoothing bounds on the monitor series.
pub fn verify_bounds(traj: &FlowTrajectory, k: &FlowConstants) -> Result<BoundReport> {
    let m = &traj.monitors;
    if m.is_empty() || m.bp_l2.len() != m.len() {
        return Err(Error::MissingMonitors);
    }
    let b0 = m.b_l2[0];
    let ap0 = m.ap_l2[0];
    let tau = k.tau;
    let gate_lhs = (2.0 * tau).powf(0.25) * k.c * b0;
    let gate_pass = gate_lhs <= k.a;
    let idx = 0..m.len();
    let mut checks = Vec::new();
    checks.push(worst(
        "AA1",
        idx.clone()
            .filter(|&i| m.t[i] > 0.0 && m.t[i] <= 2.0 * tau)
            .map(|i| (m.t[i], m.t[i].powf(0.75) * m.b_linf[i], 2.0 * k.c_n * b0)),
        0.0,
        gate_pass,
    ));
    checks.push(worst(
        "AA2",
        idx.clone()
            .filter(|&i| m.t[i] >= tau)
            .map(|i| (m.t[i], m.b_linf[i], 2.0 * k.c_n * b0 * tau.powf(-0.75))),
        0.0,
        gate_pass,
    ));
    checks.push(worst(
        "AA3",
        idx.clone()
            .filter(|&i| m.t[i] > 0.0 && m.t[i] <= 2.0 * tau)
            .map(|i| (m.t[i], m.t[i].powf(0.75) * m.ap_linf[i], k.gamma * ap0)),
        0.0,
        gate_pass,
    ));
    checks.push(worst(
        "AA4",
        idx.clone()
            .filter(|&i| m.t[i] >= 2.0 * tau)
            .map(|i| (m.t[i], tau.powf(1.25) * m.ap_linf[i], k.gamma * b0)),
        0.0,
        gate_pass,
    ));
    // ‖A′(t)‖² + 2∫₀ᵗ e^{ψ(t)−ψ(s)}‖B′(s)‖² ds ≤ e^{ψ(t)}‖A′(0)‖²
    let mut a33 = Vec::with_capacity(m.len());
    for i in 0..m.len() {
        let psi_t = m.psi_inf[i];
        let mut integral = 0.0;
        for q in 0..i {
            let d = m.t[q + 1] - m.t[q];
            let f0 = (psi_t - m.psi_inf[q]).exp() * m.bp_l2[q].powi(2);
            let f1 = (psi_t - m.psi_inf[q + 1]).exp() * m.bp_l2[q + 1].powi(2);
            integral += 0.5 * d * (f0 + f1);
        }
        a33.push((m.t[i], m.ap_l2[i].powi(2) + 2.0 * integral, psi_t.exp() * ap0 * ap0));
    }
    checks.push(worst("A33", a33.into_iter(), A33_REL_TOL * ap0 * ap0, true));
    checks.push(worst(
        "AA35",
        idx.clone()
            .filter(|&i| m.t[i] <= 2.0 * tau)
            .map(|i| (m.t[i], m.ap_l2[i], (8.0 * k.c_n * k.c * b0 * m.t[i].powf(0.25)).exp() * ap0)),
        0.0,
        gate_pass,
    ));
    let last = m.len() - 1;
    checks.push(worst(
        "action",
        core::iter::once((m.t[last], m.action[last], b0 * b0 * (1.0 + 1e-3))),
        0.0,
        true,
    ));
    Ok(BoundReport { gate_lhs, gate_rhs: k.a, gate_pass, checks })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DominatedField {
    /// ω = B with source B#B.
    Curvature,
    /// ω = A′ with source A′#B-type terms: defect(A, A′) + [A′⌟B].
    Velocity,
}

/// Pointwise domination of |ω(t)| by the scalar Neumann heat flow of |ω(0)|
/// plus the Duhamel term of the source, at every snapshot of `traj`.
pub fn domination_check(
    sg: &crate::neumann::NeumannSemigroup,
    traj: &FlowTrajectory,
    field: DominatedField,
) -> Result<crate::neumann::MarginReport> {
    use crate::neumann::{domination_margins, ScalarField};
    use crate::ops::weitzenbock_defect;
    if traj.times.len() < 2 {
        return Err(Error::MissingSnapshots(format!("{} snapshots, need 2", traj.times.len())));
    }
    if sg.grid != traj.fields[0].grid {
        return Err(Error::GridMismatch);
    }
    let bc = traj.config.bc;
    let mut omega = Vec::with_capacity(traj.times.len());
    let mut source = Vec::with_capacity(traj.times.len());
    for a in &traj.fields {
        let mut b = curvature(a)?;
        apply_boundary(&mut b, bc);
        let (w, h) = match field {
            DominatedField::Curvature => {
                let h = weitzenbock_defect(a, &b)?;
                (b, h)
            }
            DominatedField::Velocity => {
                let ap = rhs(a, &traj.config)?;
                let mut h = weitzenbock_defect(a, &ap)?;
                h.axpy(1.0, &contraction_bracket(&ap, &b)?);
                (ap, h)
            }
        };
        omega.push(ScalarField::new(sg.grid, w.pointwise_norms()));
        source.push(ScalarField::new(sg.grid, h.pointwise_norms()));
    }
    domination_margins(sg, &traj.times, &omega, &source, traj.config.dt)
}
