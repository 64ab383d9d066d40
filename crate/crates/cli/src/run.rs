//! Command dispatch. Every command returns a [`Report`] and writes its files
//! into the output directory.

use crate::config::{ConfigError, FlowVariant, InitialData, RunConfig};
use crate::report::{checks_table, write_json, CheckRow, Report, Table};
use crate::snapshot::{self, SnapshotError};
use std::path::{Path, PathBuf};
use ymflow_core::boundary::constraint_violation;
use ymflow_core::fields::{coulomb_cosine_mode, random_smooth, RandomFieldSpec};
use ymflow_core::flow::{
    domination_check, integrate, verify_bounds, verify_identities, DominatedField, FlowConfig, FlowConstants,
    FlowTrajectory, MonitorSeries, Variant, Verdict,
};
use ymflow_core::neumann::{a4_constant, diamagnetic_check, NeumannSemigroup};
use ymflow_core::transport::{convergence_probe, transport, Loop};
use ymflow_core::washer::{
    energy, fit_log_sandwich, fit_loglog, flux_probe, grid_flux, inner_log_bound, theta_bounds_check, total_current,
    washer_to_grid, LoopCEpsilon, WasherConfig,
};
use ymflow_core::{apply_boundary, Error, KForm, LieAlgebraSpec, NormKind};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical error during {stage}: {source}")]
    Numerical { stage: &'static str, source: Error },
    #[error("snapshot error: {0}")]
    Snapshot(#[from] SnapshotError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for configuration and input problems, 3 for numerical aborts.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Snapshot(_) | CliError::Io(_) => 2,
            CliError::Numerical { .. } => 3,
        }
    }
}

trait Stage<T> {
    fn during(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T> Stage<T> for Result<T, Error> {
    fn during(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|source| match source {
            Error::InvalidConfig(m) => CliError::Config(ConfigError(format!("{}: {}", stage, m))),
            source => CliError::Numerical { stage, source },
        })
    }
}

/// Options that override the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub tol_scale: Option<f64>,
    pub seed: Option<u64>,
}

pub struct Context {
    pub cfg: RunConfig,
    pub out: PathBuf,
    pub tol_scale: f64,
}

impl Context {
    pub fn new(mut cfg: RunConfig, ov: Overrides) -> Result<Self, CliError> {
        if let Some(seed) = ov.seed {
            if let InitialData::Random { seed: s, .. } = &mut cfg.initial {
                *s = seed;
            }
            cfg.diamagnetic.omega_seed = seed.wrapping_add(1);
        }
        let tol_scale = ov.tol_scale.unwrap_or(cfg.tol_scale);
        if !(tol_scale > 0.0 && tol_scale.is_finite()) {
            return Err(ConfigError(format!("tol-scale {} must be positive", tol_scale)).into());
        }
        let out = ov.out.or_else(|| cfg.output.clone().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("."));
        Ok(Context { cfg, out, tol_scale })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

pub fn execute(ctx: &Context) -> Result<Report, CliError> {
    std::fs::create_dir_all(&ctx.out)?;
    use crate::config::Command::*;
    let mut report = match ctx.cfg.command {
        Flow => cmd_flow(ctx)?,
        VerifyDomination => cmd_domination(ctx)?,
        VerifyDiamagnetic => cmd_diamagnetic(ctx)?,
        VerifyBounds => cmd_bounds(ctx)?,
        Constants => cmd_constants(ctx)?,
        Wilson => cmd_wilson(ctx)?,
        WasherEnergy => cmd_washer_energy(ctx)?,
        WasherFlux => cmd_washer_flux(ctx)?,
        WasherRegularize => cmd_washer_regularize(ctx)?,
    };
    report.pass = report.checks.iter().all(|c| !c.failed());
    write_json(&ctx.path("report.json"), &report)?;
    checks_table(&report.checks).write(&ctx.path("checks.csv"))?;
    Ok(report)
}

pub fn initial_field(cfg: &RunConfig) -> Result<KForm, CliError> {
    let grid = cfg.grid()?;
    let alg = cfg.algebra.spec();
    let bc = cfg.boundary.kind();
    let a = match &cfg.initial {
        InitialData::Zero => {
            let mut a = KForm::zeros(1, grid, alg);
            apply_boundary(&mut a, bc.into());
            a
        }
        InitialData::Random { amplitude, max_mode, seed } => random_smooth(
            1,
            grid,
            alg,
            bc.into(),
            RandomFieldSpec { amplitude: *amplitude, max_mode: *max_mode, seed: *seed },
        ),
        InitialData::Coulomb { amplitude } => {
            let mut a = coulomb_cosine_mode(grid, alg, *amplitude);
            apply_boundary(&mut a, bc.into());
            a
        }
        InitialData::Snapshot { path } => {
            let (mut a, _) = snapshot::read(Path::new(path))?;
            if a.grid != grid || a.alg.group_id != alg.group_id || a.degree != 1 {
                return Err(ConfigError(format!("snapshot {} does not match grid/algebra/degree", path)).into());
            }
            apply_boundary(&mut a, bc.into());
            a
        }
    };
    Ok(a)
}

fn flow_config(cfg: &RunConfig) -> Result<FlowConfig, CliError> {
    let grid = cfg.grid()?;
    let h = grid.min_spacing();
    let f = &cfg.flow;
    let mut fc = FlowConfig::new(cfg.boundary.kind(), f.dt.unwrap_or(h * h / 8.0), f.t_end);
    if let Some(e) = f.snapshot_every {
        fc = fc.with_uniform_snapshots(e);
    }
    fc.snapshot_times.extend(f.snapshot_times.iter().copied());
    fc.variant = match f.variant {
        FlowVariant::Ym => Variant::YM,
        FlowVariant::Zds => Variant::ZDS,
    };
    Ok(fc)
}

fn run_flow(ctx: &Context, a0: &KForm) -> Result<FlowTrajectory, CliError> {
    let traj = integrate(a0, &flow_config(&ctx.cfg)?).during("flow")?;
    monitors_table(&traj.monitors).write(&ctx.path("monitors.csv"))?;
    if ctx.cfg.flow.write_snapshots {
        for (i, (t, f)) in traj.times.iter().zip(&traj.fields).enumerate() {
            snapshot::write(&ctx.path(&format!("snapshot_{:04}.ymf", i)), f, *t)?;
        }
    }
    Ok(traj)
}

pub fn monitors_table(m: &MonitorSeries) -> Table {
    let mut t = Table::new(&["t", "b_l2", "b_linf", "ap_l2", "beta", "psi_inf"]);
    for i in 0..m.len() {
        t.push(&[m.t[i], m.b_l2[i], m.b_linf[i], m.ap_l2[i], m.beta[i], m.psi_inf[i]]);
    }
    t
}

fn flow_checks(ctx: &Context, traj: &FlowTrajectory, r: &mut Report) {
    let m = &traj.monitors;
    let b0 = m.b_l2[0];
    let worst = m.b_l2.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max).max(0.0);
    r.check(CheckRow::new("energy-monotone", worst, 0.0, 1e-12 * b0 * ctx.tol_scale));
    let action = *m.action.last().unwrap();
    r.check(CheckRow::new("action", action, b0 * b0 * (1.0 + 1e-3 * ctx.tol_scale), 0.0));
    r.value("rejections", m.rejections as f64);
    r.value("t_end", *traj.times.last().unwrap());
    r.value("b_l2_end", *m.b_l2.last().unwrap());
}

fn cmd_flow(ctx: &Context) -> Result<Report, CliError> {
    let cfg = &ctx.cfg;
    let a0 = initial_field(cfg)?;
    let traj = run_flow(ctx, &a0)?;
    let mut r = Report::new("flow");
    if traj.config.variant == Variant::YM {
        flow_checks(ctx, &traj, &mut r);
    }
    if let InitialData::Coulomb { amplitude } = cfg.initial {
        if a0.alg.is_abelian() && traj.config.bc.kind == ymflow_core::BoundaryKind::Neumann {
            let grid = a0.grid;
            let t = *traj.times.last().unwrap();
            let last = traj.fields.last().unwrap();
            let rel = |lam: f64| -> Result<f64, CliError> {
                let mut e = coulomb_cosine_mode(grid, a0.alg, amplitude).scaled((-lam * t).exp());
                let scale = e.norm(NormKind::L2).during("spectral comparison")?;
                e.axpy(-1.0, last);
                Ok(e.norm(NormKind::L2).during("spectral comparison")? / scale)
            };
            let lam = ymflow_core::fields::coulomb_cosine_eigenvalue(&grid);
            let h = [grid.spacing(0), grid.spacing(1)];
            let pi = std::f64::consts::PI;
            let lam_h = (0..2)
                .map(|q| ((pi * h[q] / grid.extents[q]).sin() / h[q]).powi(2))
                .sum::<f64>();
            r.check(CheckRow::new("spectral-equivalence", rel(lam)?, 1e-4 * ctx.tol_scale, 0.0));
            r.check(CheckRow::new("discrete-eigenmode", rel(lam_h)?, 1e-8 * ctx.tol_scale, 0.0));
            r.value("continuum_eigenvalue", lam);
            r.value("stencil_eigenvalue", lam_h);
        }
    }
    Ok(r)
}

fn constants(ctx: &Context, grid: ymflow_core::GridSpec, alg: &LieAlgebraSpec) -> Result<(FlowConstants, f64, f64), CliError> {
    let sg = NeumannSemigroup::new(grid).during("semigroup")?;
    let c = sg.c_n_default().during("c_N")?;
    let doubled = [2 * grid.nodes[0], 2 * grid.nodes[1], 2 * grid.nodes[2]];
    let fine_grid = ymflow_core::GridSpec::new(grid.extents, doubled).during("refined grid")?;
    let fine = NeumannSemigroup::with_modes(fine_grid, doubled)
        .during("semigroup")?
        .c_n_estimate(c.t_min, 400)
        .during("c_N refinement")?;
    let a4 = a4_constant();
    let k = FlowConstants::new(c.value, a4.value, alg.c, ctx.cfg.flow.tau).during("constants")?;
    Ok((k, (fine.value - c.value).abs(), a4.refinement_delta))
}

fn cmd_constants(ctx: &Context) -> Result<Report, CliError> {
    let grid = ctx.cfg.grid()?;
    let alg = ctx.cfg.algebra.spec();
    let (k, dc, da) = constants(ctx, grid, &alg)?;
    let mut r = Report::new("constants");
    r.value("c_N", k.c_n);
    r.value("c_N_refinement_delta", dc);
    r.value("a4", k.a4);
    r.value("a4_refinement_delta", da);
    r.value("c", k.c);
    r.value("tau", k.tau);
    r.value("a", k.a);
    r.value("gamma", k.gamma);
    r.check(CheckRow::new("c_N-lower-bound", 1.0, k.c_n, 1e-12 * ctx.tol_scale));
    r.check(CheckRow::new("c_N-refinement", dc / k.c_n, 0.01 * ctx.tol_scale, 0.0));
    Ok(r)
}

fn bound_rows(ctx: &Context, traj: &FlowTrajectory, r: &mut Report) -> Result<(), CliError> {
    let grid = traj.fields[0].grid;
    let (k, _, _) = constants(ctx, grid, &traj.fields[0].alg)?;
    let b = verify_bounds(traj, &k).during("bounds")?;
    r.check(CheckRow::new("gate", b.gate_lhs, b.gate_rhs, 0.0));
    for c in &b.checks {
        let row = match c.verdict {
            Verdict::NotApplicable => CheckRow::not_applicable(c.name, c.lhs, c.rhs),
            _ => CheckRow::with_margin(c.name, c.lhs, c.rhs, c.margin, c.tol * ctx.tol_scale),
        };
        r.check(row);
    }
    r.value("c_N", k.c_n);
    r.value("a", k.a);
    r.value("gamma", k.gamma);
    Ok(())
}

fn cmd_bounds(ctx: &Context) -> Result<Report, CliError> {
    let a0 = initial_field(&ctx.cfg)?;
    let traj = run_flow(ctx, &a0)?;
    let mut r = Report::new("verify-bounds");
    bound_rows(ctx, &traj, &mut r)?;
    if traj.times.len() >= 3 {
        match verify_identities(&traj) {
            Ok(id) => {
                r.value("identity_b_residual", id.b_residual / id.b_scale.max(f64::MIN_POSITIVE));
                r.value("identity_ap_residual", id.ap_residual / id.ap_scale.max(f64::MIN_POSITIVE));
                r.value("identity_spacing", id.spacing);
            }
            Err(e) => r.note(format!("identities skipped: {}", e)),
        }
    }
    Ok(r)
}

fn cmd_domination(ctx: &Context) -> Result<Report, CliError> {
    let a0 = initial_field(&ctx.cfg)?;
    let traj = run_flow(ctx, &a0)?;
    let mut r = Report::new("verify-domination");
    bound_rows(ctx, &traj, &mut r)?;
    let sg = NeumannSemigroup::new(a0.grid).during("semigroup")?;
    for (name, field) in [("domination-curvature", DominatedField::Curvature), ("domination-velocity", DominatedField::Velocity)] {
        let m = domination_check(&sg, &traj, field).during("domination")?;
        r.check(CheckRow::with_margin(name, 0.0, m.min_margin, m.min_margin, m.tol * ctx.tol_scale));
        r.value(&format!("{}_at_time", name), m.at_time);
    }
    Ok(r)
}

fn cmd_diamagnetic(ctx: &Context) -> Result<Report, CliError> {
    let cfg = &ctx.cfg;
    let a = initial_field(cfg)?;
    let d = &cfg.diamagnetic;
    let omega = random_smooth(
        d.omega_degree,
        a.grid,
        a.alg,
        cfg.boundary.kind().into(),
        RandomFieldSpec { amplitude: d.omega_amplitude, max_mode: 2, seed: d.omega_seed },
    );
    let sg = NeumannSemigroup::new(a.grid).during("semigroup")?;
    let h = a.grid.min_spacing();
    let dt = cfg.flow.dt.unwrap_or(h * h / 8.0);
    let m = diamagnetic_check(&sg, &a, &omega, d.t, dt, cfg.boundary.kind().into()).during("diamagnetic")?;
    let mut r = Report::new("verify-diamagnetic");
    r.check(CheckRow::with_margin("diamagnetic", 0.0, m.min_margin, m.min_margin, m.tol * ctx.tol_scale));
    r.value("at_time", m.at_time);
    r.value("scale", m.scale);
    Ok(r)
}

fn cmd_wilson(ctx: &Context) -> Result<Report, CliError> {
    let cfg = &ctx.cfg;
    let loops: Vec<Loop> = cfg
        .loops
        .iter()
        .map(|l| Loop::new(l.path()?).map_err(|e| ConfigError(format!("loop: {}", e))))
        .collect::<Result<_, _>>()?;
    if loops.is_empty() {
        return Err(ConfigError("wilson needs at least one loop".into()).into());
    }
    let a0 = initial_field(cfg)?;
    let traj = run_flow(ctx, &a0)?;
    let mut table = Table::new(&["t", "loop", "trace_re", "trace_im", "unitarity"]);
    for (t, f) in traj.times.iter().zip(&traj.fields) {
        for (i, lp) in loops.iter().enumerate() {
            let g = transport(f, &lp.path).during("transport")?;
            let tr = g.trace();
            table.push(&[*t, i as f64, tr.re, tr.im, g.unitarity_deviation()]);
        }
    }
    table.write(&ctx.path("wilson.csv"))?;
    let mut r = Report::new("wilson");
    match convergence_probe(&traj, &loops) {
        Ok(p) => {
            for (i, l) in p.loops.iter().enumerate() {
                let n = l.differences.len();
                let worst = l.differences[n - 3..].windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
                r.check(CheckRow::new(&format!("settling-loop-{}", i), worst, 0.0, ymflow_core::transport::TRACE_NOISE * ctx.tol_scale));
            }
            r.check(CheckRow::with_margin("equicontinuity", 0.0, p.equicontinuity_margin, p.equicontinuity_margin, 0.0));
        }
        Err(Error::MissingSnapshots(m)) => r.note(format!("convergence probe skipped: {}", m)),
        Err(e) => return Err(CliError::Numerical { stage: "convergence probe", source: e }),
    }
    Ok(r)
}

fn washer_config(cfg: &RunConfig) -> WasherConfig {
    let w = &cfg.washer;
    WasherConfig { amplitude: w.amplitude, u_max: w.u_max, tol: w.tol, energy_doublings: w.energy_doublings }
}

fn lp(cfg: &RunConfig, eps: f64) -> LoopCEpsilon {
    LoopCEpsilon { eps, r_out: cfg.washer.r_out, phi_span: cfg.washer.phi_span }
}

fn cmd_washer_energy(ctx: &Context) -> Result<Report, CliError> {
    let cfg = &ctx.cfg;
    let wc = washer_config(cfg);
    let mut r = Report::new("washer-energy");
    let cur = total_current(&wc).during("total current")?;
    r.value("current_closed_form", cur.closed_form);
    r.value("current_quadrature", cur.quadrature);
    r.check(CheckRow::new("current", (cur.quadrature - cur.closed_form).abs(), 1e-10 * ctx.tol_scale, 0.0));
    let e = match energy(&wc) {
        Ok(e) => e,
        Err(Error::NotCauchy(gap)) => {
            r.check(CheckRow::new("energy-cauchy", gap, 1e-3, 0.0));
            return Ok(r);
        }
        Err(e) => return Err(CliError::Numerical { stage: "energy", source: e }),
    };
    let mut t = Table::new(&["u_cutoff", "energy"]);
    for (u, w) in e.cutoffs.iter().zip(&e.values) {
        t.push(&[*u, *w]);
    }
    t.write(&ctx.path("energy.csv"))?;
    r.value("energy", e.value);
    r.check(CheckRow::new("energy-cauchy", e.last_gap, 1e-3 * ctx.tol_scale, 0.0));
    let increase = e.values.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max);
    r.check(CheckRow::new("energy-increasing", increase, 0.0, 0.0));
    for &s in &cfg.washer.inner_s {
        let b = inner_log_bound(s).during("inner bound")?;
        r.check(CheckRow::new(&format!("inner-bound-s{}", s), b.value, b.bound, 1e-10 * ctx.tol_scale));
    }
    let w = &cfg.washer;
    for &u in &w.sandwich_u {
        for &v in &w.sandwich_v {
            let b = theta_bounds_check(u, v, w.theta0).during("sandwich")?;
            let tol = ymflow_core::washer::SANDWICH_TOL * ctx.tol_scale;
            r.check(CheckRow::new(&format!("sandwich-lower-u{}-v{}", u, v), b.lower, b.integral, tol));
            r.check(CheckRow::new(&format!("sandwich-upper-u{}-v{}", u, v), b.integral, b.upper, tol));
        }
    }
    let fit = fit_log_sandwich(&w.sandwich_u, &w.sandwich_v).during("sandwich fit")?;
    r.value("fit_c1", fit.c1);
    r.value("fit_c2", fit.c2);
    r.value("fit_C1", fit.big_c1);
    r.value("fit_C2", fit.big_c2);
    r.check(CheckRow::new("fit-slope-positive", 0.0, fit.c2, 0.0));
    Ok(r)
}

fn flux_ladder(ctx: &Context) -> Result<(Table, Vec<f64>, f64), CliError> {
    let wc = washer_config(&ctx.cfg);
    let mut t = Table::new(&["eps", "flux", "tail_bound"]);
    let mut flux = Vec::new();
    let mut radial: f64 = 0.0;
    for &e in &ctx.cfg.washer.eps {
        let p = flux_probe(&lp(&ctx.cfg, e), &wc).during("flux probe")?;
        t.push(&[e, p.flux, p.tail_bound]);
        flux.push(p.flux);
        radial = radial.max(p.radial.abs());
    }
    Ok((t, flux, radial))
}

fn cmd_washer_flux(ctx: &Context) -> Result<Report, CliError> {
    let (t, flux, radial) = flux_ladder(ctx)?;
    t.write(&ctx.path("flux.csv"))?;
    let mut r = Report::new("washer-flux");
    r.check(CheckRow::new("radial-zero", radial, 1e-10 * ctx.tol_scale, 0.0));
    let fit = fit_loglog(&ctx.cfg.washer.eps, &flux).during("growth fit")?;
    r.check(CheckRow::new("strictly-increasing", if fit.strictly_increasing { 0.0 } else { 1.0 }, 0.0, 0.0));
    r.check(CheckRow::new("loglog-fit", fit.max_rel_residual, 0.05 * ctx.tol_scale, 0.0));
    r.value("fit_a", fit.a);
    r.value("fit_b", fit.b);
    r.note("the log log(1/ε) growth rate is conjectural; the divergence itself is the claim");
    Ok(r)
}

fn cmd_washer_regularize(ctx: &Context) -> Result<Report, CliError> {
    let cfg = &ctx.cfg;
    let grid = cfg.grid()?;
    if cfg.algebra != crate::config::Algebra::U1 {
        return Err(ConfigError("washer-regularize needs the u1 algebra".into()).into());
    }
    let origin = cfg.washer.origin;
    let w = washer_to_grid(&washer_config(cfg), grid, origin, cfg.boundary.kind().into(), cfg.washer.cap)
        .during("washer sampling")?;
    let mut r = Report::new("washer-regularize");
    r.value("near_nodes", w.near_nodes as f64);
    r.value("clipped_nodes", w.clipped_nodes as f64);
    r.value("removed_normal", w.removed_normal);
    r.value("constraint_violation", constraint_violation(&w.form, cfg.boundary.kind().into()));
    let traj = run_flow(ctx, &w.form)?;
    let [e1, e2] = cfg.washer.regularize_eps;
    let mut t = Table::new(&["t", "eps", "flux"]);
    let mut last = (0.0, 0.0);
    for (time, f) in traj.times.iter().zip(&traj.fields) {
        let f1 = grid_flux(f, &lp(cfg, e1), origin).during("grid flux")?;
        let f2 = grid_flux(f, &lp(cfg, e2), origin).during("grid flux")?;
        t.push(&[*time, e1, f1]);
        t.push(&[*time, e2, f2]);
        last = (f1, f2);
    }
    t.write(&ctx.path("regularized_flux.csv"))?;
    let (f1, f2) = last;
    r.check(CheckRow::new("ladder-converges", (f1 - f2).abs(), 1e-3 * f1.abs() * ctx.tol_scale, 0.0));
    r.check(CheckRow::new("finite", if f1.is_finite() && f2.is_finite() { 0.0 } else { 1.0 }, 0.0, 0.0));
    let (ladder, flux, _) = flux_ladder(ctx)?;
    ladder.write(&ctx.path("flux.csv"))?;
    let fit = fit_loglog(&cfg.washer.eps, &flux).during("growth fit")?;
    r.check(CheckRow::new("t0-ladder-diverges", if fit.strictly_increasing && fit.a > 0.0 { 0.0 } else { 1.0 }, 0.0, 0.0));
    r.value("flux_t_end_eps1", f1);
    r.value("flux_t_end_eps2", f2);
    r.value("t0_fit_a", fit.a);
    Ok(r)
}
