//! Cosine-spectral Neumann heat semigroup on the box and the inequality checkers
//! that use it as an oracle.

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::quad::tanh_sinh;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

/// Real values at the real nodes of a grid, x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.real_len());
        ScalarField { grid, values }
    }

    pub fn from_fn(grid: GridSpec, mut f: impl FnMut([f64; 3]) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.real_len());
        grid.for_each_real(|i, j, k| values.push(f(grid.position(i as isize, j as isize, k as isize))));
        ScalarField { grid, values }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        ScalarField { grid, values: vec![c; grid.real_len()] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.real_idx(i, j, k)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    /// Trapezoid-rule L² inner product.
    pub fn inner(&self, other: &ScalarField) -> f64 {
        let g = &self.grid;
        let mut s = 0.0;
        g.for_each_real(|i, j, k| {
            let w = g.trapezoid_weight(0, i) * g.trapezoid_weight(1, j) * g.trapezoid_weight(2, k);
            let q = g.real_idx(i, j, k);
            s += w * self.values[q] * other.values[q];
        });
        s
    }

    pub fn norm_l2(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        ScalarField { grid: self.grid, values }
    }

    pub fn add_scaled(&mut self, s: f64, other: &ScalarField) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }
}

/// Per-axis cosine basis: forward rows are modes, columns nodes.
#[derive(Debug, Clone)]
struct AxisBasis {
    modes: usize,
    nodes: usize,
    forward: Vec<f64>,
    inverse: Vec<f64>,
    eigen: Vec<f64>,
}

impl AxisBasis {
    fn new(n: usize, modes: usize, length: f64) -> Self {
        let big_n = (n - 1) as f64;
        let mut forward = vec![0.0; modes * n];
        let mut inverse = vec![0.0; n * modes];
        for k in 0..modes {
            for i in 0..n {
                let c = (PI * (k * i) as f64 / big_n).cos();
                let wi = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                let ak = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
                forward[k * n + i] = 2.0 / big_n * wi * c;
                inverse[i * modes + k] = ak * c;
            }
        }
        let eigen = (0..modes).map(|k| (PI * k as f64 / length).powi(2)).collect();
        AxisBasis { modes, nodes: n, forward, inverse, eigen }
    }
}

/// Applies a (rows × cols) matrix along `axis` of a 3-D array with x fastest.
fn transform_axis(data: &[f64], dims: [usize; 3], axis: usize, mat: &[f64], rows: usize) -> (Vec<f64>, [usize; 3]) {
    let cols = dims[axis];
    let mut out_dims = dims;
    out_dims[axis] = rows;
    let mut out = vec![0.0; out_dims[0] * out_dims[1] * out_dims[2]];
    let stride_in = match axis {
        0 => 1,
        1 => dims[0],
        _ => dims[0] * dims[1],
    };
    let stride_out = match axis {
        0 => 1,
        1 => out_dims[0],
        _ => out_dims[0] * out_dims[1],
    };
    let (o1, o2) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let mut line = vec![0.0; cols];
    for q2 in 0..dims[o2] {
        for q1 in 0..dims[o1] {
            let mut base_in = [0usize; 3];
            base_in[o1] = q1;
            base_in[o2] = q2;
            let bi = base_in[0] + dims[0] * (base_in[1] + dims[1] * base_in[2]);
            let bo = base_in[0] + out_dims[0] * (base_in[1] + out_dims[1] * base_in[2]);
            for (c, l) in line.iter_mut().enumerate() {
                *l = data[bi + c * stride_in];
            }
            for r in 0..rows {
                let row = &mat[r * cols..(r + 1) * cols];
                let s: f64 = row.iter().zip(&line).map(|(a, b)| a * b).sum();
                out[bo + r * stride_out] = s;
            }
        }
    }
    (out, out_dims)
}

/// e^{tΔ_N} on the box via per-axis cosine (DCT-I) transforms with continuum
/// eigenvalues λ_k = Σ (πk_i/L_i)².
#[derive(Debug, Clone)]
pub struct NeumannSemigroup {
    pub grid: GridSpec,
    pub modes: [usize; 3],
    axes: [AxisBasis; 3],
}

/// Spectral coefficients of a scalar field.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub coeffs: Vec<f64>,
}

impl NeumannSemigroup {
    /// Retains every resolvable mode, making t = 0 the identity on grid data.
    pub fn new(grid: GridSpec) -> Result<Self> {
        Self::with_modes(grid, grid.nodes)
    }

    pub fn with_modes(grid: GridSpec, modes: [usize; 3]) -> Result<Self> {
        grid.require_min_nodes(8)?;
        for q in 0..3 {
            if modes[q] == 0 || modes[q] > grid.nodes[q] {
                return Err(Error::InvalidConfig(format!("axis {} retains {} modes", q, modes[q])));
            }
        }
        let axes = [
            AxisBasis::new(grid.nodes[0], modes[0], grid.extents[0]),
            AxisBasis::new(grid.nodes[1], modes[1], grid.extents[1]),
            AxisBasis::new(grid.nodes[2], modes[2], grid.extents[2]),
        ];
        Ok(NeumannSemigroup { grid, modes, axes })
    }

    pub fn eigenvalue(&self, k: [usize; 3]) -> f64 {
        self.axes[0].eigen[k[0]] + self.axes[1].eigen[k[1]] + self.axes[2].eigen[k[2]]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalue([self.modes[0] - 1, self.modes[1] - 1, self.modes[2] - 1])
    }

    pub fn forward(&self, f: &ScalarField) -> Spectrum {
        let mut data = f.values.clone();
        let mut dims = self.grid.nodes;
        for axis in 0..3 {
            let b = &self.axes[axis];
            let (d, nd) = transform_axis(&data, dims, axis, &b.forward, b.modes);
            data = d;
            dims = nd;
        }
        Spectrum { coeffs: data }
    }

    pub fn inverse(&self, s: &Spectrum) -> ScalarField {
        let mut data = s.coeffs.clone();
        let mut dims = self.modes;
        for axis in 0..3 {
            let b = &self.axes[axis];
            let (d, nd) = transform_axis(&data, dims, axis, &b.inverse, b.nodes);
            data = d;
            dims = nd;
        }
        ScalarField { grid: self.grid, values: data }
    }

    /// Multiplies every coefficient by `m(λ_k)`.
    pub fn multiply(&self, s: &Spectrum, mut m: impl FnMut(f64) -> f64) -> Spectrum {
        let mut out = s.clone();
        let md = self.modes;
        for k2 in 0..md[2] {
            for k1 in 0..md[1] {
                for k0 in 0..md[0] {
                    let q = k0 + md[0] * (k1 + md[1] * k2);
                    out.coeffs[q] *= m(self.eigenvalue([k0, k1, k2]));
                }
            }
        }
        out
    }

    /// Σ_s w_s · e^{-λ(t - s)} ŝ over a list of (weight, lag, spectrum).
    pub fn accumulate(&self, terms: &[(f64, f64, &Spectrum)]) -> Spectrum {
        let md = self.modes;
        let mut out = Spectrum { coeffs: vec![0.0; md[0] * md[1] * md[2]] };
        for k2 in 0..md[2] {
            for k1 in 0..md[1] {
                for k0 in 0..md[0] {
                    let q = k0 + md[0] * (k1 + md[1] * k2);
                    let lam = self.eigenvalue([k0, k1, k2]);
                    let mut s = 0.0;
                    for (w, lag, sp) in terms {
                        s += w * (-lam * lag).exp() * sp.coeffs[q];
                    }
                    out.coeffs[q] = s;
                }
            }
        }
        out
    }

    pub fn heat_apply(&self, t: f64, f: &ScalarField) -> Result<ScalarField> {
        if !(t >= 0.0) {
            return Err(Error::NegativeTime(t));
        }
        let s = self.forward(f);
        Ok(self.inverse(&self.multiply(&s, |lam| (-lam * t).exp())))
    }

    /// Δ_N e^{tΔ_N} f.
    pub fn laplacian_heat_apply(&self, t: f64, f: &ScalarField) -> Result<ScalarField> {
        if !(t >= 0.0) {
            return Err(Error::NegativeTime(t));
        }
        let s = self.forward(f);
        Ok(self.inverse(&self.multiply(&s, |lam| -lam * (-lam * t).exp())))
    }

    /// Diagonal of the one-axis kernel at time `t`, maximised over the nodes.
    fn axis_kernel_diag_max(&self, axis: usize, t: f64) -> f64 {
        let b = &self.axes[axis];
        let l = self.grid.extents[axis];
        let h = self.grid.spacing(axis);
        let mut best: f64 = 0.0;
        for i in 0..b.nodes {
            let x = i as f64 * h;
            let mut s = 1.0;
            for k in 1..b.modes {
                let c = (PI * k as f64 * x / l).cos();
                s += 2.0 * (-b.eigen[k] * t).exp() * c * c;
            }
            best = best.max(s / l);
        }
        best
    }

    /// t^{3/4} ‖e^{tΔ_N}‖_{2→∞} = t^{3/4} sup_x √K_{2t}(x,x).
    pub fn smoothing_profile(&self, t: f64) -> f64 {
        let mut p = 1.0;
        for axis in 0..3 {
            p *= self.axis_kernel_diag_max(axis, 2.0 * t).sqrt();
        }
        t.powf(0.75) * p
    }

    /// Smallest t for which the first dropped mode on every axis carries weight ≤ 1e-12.
    pub fn min_resolved_time(&self) -> f64 {
        (0..3)
            .map(|q| {
                let lam = (PI * self.modes[q] as f64 / self.grid.extents[q]).powi(2);
                -(1e-12f64).ln() / (2.0 * lam)
            })
            .fold(0.0, f64::max)
    }

    /// c_N = sup_{t ∈ [t_min, 1]} t^{3/4}‖e^{tΔ_N}‖_{2→∞} on a log-spaced grid, refined by golden section.
    pub fn c_n_estimate(&self, t_min: f64, samples: usize) -> Result<CnEstimate> {
        let need = self.min_resolved_time();
        if t_min < need || !(t_min > 0.0) || t_min > 1.0 {
            let tail = (0..3)
                .map(|q| (-2.0 * (PI * self.modes[q] as f64 / self.grid.extents[q]).powi(2) * t_min).exp())
                .fold(0.0, f64::max);
            return Err(Error::InsufficientModes { t: t_min, tail });
        }
        let samples = samples.max(2);
        let mut best = (0.0, 0.0);
        let mut best_i = 0;
        let ts: Vec<f64> = (0..samples)
            .map(|i| (t_min.ln() + (0.0 - t_min.ln()) * i as f64 / (samples - 1) as f64).exp())
            .collect();
        for (i, &t) in ts.iter().enumerate() {
            let v = self.smoothing_profile(t);
            if v > best.1 {
                best = (t, v);
                best_i = i;
            }
        }
        if best_i > 0 && best_i + 1 < samples {
            let (mut lo, mut hi) = (ts[best_i - 1].ln(), ts[best_i + 1].ln());
            let g = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..80 {
                let a = hi - g * (hi - lo);
                let b = lo + g * (hi - lo);
                if self.smoothing_profile(a.exp()) > self.smoothing_profile(b.exp()) {
                    hi = b;
                } else {
                    lo = a;
                }
            }
            let t = (0.5 * (lo + hi)).exp();
            let v = self.smoothing_profile(t);
            if v > best.1 {
                best = (t, v);
            }
        }
        Ok(CnEstimate { value: best.1, t_star: best.0, t_min })
    }

    /// [`c_n_estimate`](Self::c_n_estimate) from the smallest resolved time.
    pub fn c_n_default(&self) -> Result<CnEstimate> {
        let t_min = self.min_resolved_time().max(1e-6) * 1.000001;
        self.c_n_estimate(t_min.min(1.0), 400)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnEstimate {
    pub value: f64,
    pub t_star: f64,
    pub t_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct A4Estimate {
    pub value: f64,
    /// Change between the last two node doublings.
    pub refinement_delta: f64,
}

/// a₄ = ∫₀¹ σ^{-3/4}(1−σ)^{-3/4} dσ via σ = sin²θ, i.e. 4∫₀^{π/4} (sinθ cosθ)^{-1/2} dθ.
pub fn a4_constant() -> A4Estimate {
    let r = tanh_sinh(|th| 1.0 / (0.5 * (2.0 * th).sin()).sqrt(), 0.0, PI / 4.0, 1e-15, 14);
    A4Estimate { value: 4.0 * r.value, refinement_delta: 4.0 * r.error }
}

/// a₄ over the full θ range [0, π/2] without using the σ ↔ 1−σ symmetry.
pub fn a4_full_interval() -> f64 {
    // cos θ = sin(π/2 − θ) evaluated from the endpoint distance
    2.0 * crate::quad::tanh_sinh_dist(|_, da, db| 1.0 / (da.sin() * db.sin()).sqrt(), 0.0, PI / 2.0, 1e-14, 14).value
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginReport {
    /// Smallest pointwise margin (right side minus left side), unnormalised.
    pub min_margin: f64,
    /// Allowed negative margin.
    pub tol: f64,
    pub pass: bool,
    /// Snapshot / node where the minimum occurs.
    pub at_time: f64,
    pub at_node: usize,
    /// Scale used to normalise the tolerance.
    pub scale: f64,
}

/// Second derivative along an axis with one-sided second-order stencils on the faces.
fn second_difference(f: &ScalarField, axis: usize, i: usize, j: usize, k: usize) -> f64 {
    let g = &f.grid;
    let n = g.nodes[axis];
    let h = g.spacing(axis);
    let at = |q: usize| {
        let mut ix = [i, j, k];
        ix[axis] = q;
        f.get(ix[0], ix[1], ix[2])
    };
    let q = [i, j, k][axis];
    let v = if q == 0 {
        2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)
    } else if q == n - 1 {
        2.0 * at(n - 1) - 5.0 * at(n - 2) + 4.0 * at(n - 3) - at(n - 4)
    } else {
        at(q + 1) - 2.0 * at(q) + at(q - 1)
    };
    v / (h * h)
}

/// Δψ with central stencils inside and one-sided second-order stencils on faces.
pub fn discrete_laplacian(f: &ScalarField) -> ScalarField {
    let g = f.grid;
    let mut values = Vec::with_capacity(g.real_len());
    g.for_each_real(|i, j, k| values.push((0..3).map(|a| second_difference(f, a, i, j, k)).sum()));
    ScalarField { grid: g, values }
}

/// Largest outward normal derivative on any face (one-sided second-order).
pub fn max_outward_normal_derivative(f: &ScalarField) -> f64 {
    let g = f.grid;
    let mut worst = f64::NEG_INFINITY;
    g.for_each_real(|i, j, k| {
        for axis in 0..3 {
            let ix = [i, j, k];
            let n = g.nodes[axis];
            let h = g.spacing(axis);
            let at = |q: usize| {
                let mut p = ix;
                p[axis] = q;
                f.get(p[0], p[1], p[2])
            };
            if ix[axis] == 0 {
                worst = worst.max(-(-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h));
            } else if ix[axis] == n - 1 {
                worst = worst.max((3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h));
            }
        }
    });
    worst
}

/// Pinned constant for the monotone-lemma tolerance C·h²·‖Δ_hΔ_hψ‖∞; twice the
/// Taylor coefficient 1/12 of the second-difference truncation error.
pub const MONOTONE_C: f64 = 1.0 / 6.0;

/// Checks e^{tΔ_N}Δψ ≤ Δ_N e^{tΔ_N}ψ pointwise.
pub fn monotone_lemma_check(sg: &NeumannSemigroup, psi: &ScalarField, t: f64) -> Result<MarginReport> {
    let lap = discrete_laplacian(psi);
    let scale = lap.max_abs();
    let h = sg.grid.min_spacing();
    // sampled data carries an O(h³) one-sided derivative error even when ∇_nψ = 0 exactly
    let pre_tol = 1e-12 + h * h * scale;
    let dn = max_outward_normal_derivative(psi);
    if dn > pre_tol {
        return Err(Error::Precondition(format!("outward normal derivative {:e} > 0", dn)));
    }
    let lhs = sg.heat_apply(t, &lap)?;
    let rhs = sg.laplacian_heat_apply(t, psi)?;
    let margin = rhs.sub(&lhs);
    let (at_node, min_margin) = margin
        .values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });
    let fourth = discrete_laplacian(&lap).max_abs();
    let tol = MONOTONE_C * h * h * fourth + 1e-12 * sg.max_eigenvalue() * psi.max_abs();
    Ok(MarginReport { min_margin, tol, pass: min_margin >= -tol, at_time: t, at_node, scale: fourth })
}

/// Pinned constant C in the domination tolerance C(h² + dt²)·‖ω₀‖∞, calibrated on
/// abelian runs, where the worst observed ratio was 0.29 (see the
/// `abelian_domination_calibration` test in the flow module).
pub const DOMINATION_C: f64 = 0.5;

/// Pointwise |ω(t_m)| ≤ e^{t_mΔ}|ω(0)| + ∫₀^{t_m} e^{(t_m−s)Δ}|h(s)| ds at every snapshot,
/// with the time integral by the composite trapezoid rule over snapshots.
pub fn domination_margins(
    sg: &NeumannSemigroup,
    times: &[f64],
    omega_abs: &[ScalarField],
    h_abs: &[ScalarField],
    dt: f64,
) -> Result<MarginReport> {
    if times.is_empty() || omega_abs.len() != times.len() || h_abs.len() != times.len() {
        return Err(Error::MissingSnapshots(format!("{} times, {} fields", times.len(), omega_abs.len())));
    }
    let w0 = sg.forward(&omega_abs[0]);
    let hs: Vec<Spectrum> = h_abs.iter().map(|f| sg.forward(f)).collect();
    let scale = omega_abs[0].max_abs();
    let h = sg.grid.min_spacing();
    let tol = DOMINATION_C * (h * h + dt * dt) * scale;
    let mut worst = (f64::INFINITY, 0.0, 0usize);
    for m in 0..times.len() {
        let tm = times[m] - times[0];
        let mut terms: Vec<(f64, f64, &Spectrum)> = vec![(1.0, tm, &w0)];
        for q in 0..m {
            let dtq = times[q + 1] - times[q];
            terms.push((0.5 * dtq, times[m] - times[q], &hs[q]));
            terms.push((0.5 * dtq, times[m] - times[q + 1], &hs[q + 1]));
        }
        let bound = sg.inverse(&sg.accumulate(&terms));
        for (node, (b, w)) in bound.values.iter().zip(&omega_abs[m].values).enumerate() {
            let margin = b - w;
            if margin < worst.0 {
                worst = (margin, times[m], node);
            }
        }
    }
    Ok(MarginReport {
        min_margin: worst.0,
        tol,
        pass: worst.0 >= -tol,
        at_time: worst.1,
        at_node: worst.2,
        scale,
    })
}

/// Trapezoid Duhamel bound on [times[a], times[b]] starting from u(times[a]).
fn interval_bound(sg: &NeumannSemigroup, times: &[f64], u0: &Spectrum, g: &[Spectrum], a: usize, b: usize) -> Spectrum {
    let tb = times[b];
    let mut terms: Vec<(f64, f64, &Spectrum)> = vec![(1.0, tb - times[a], u0)];
    for q in a..b {
        let d = times[q + 1] - times[q];
        terms.push((0.5 * d, tb - times[q], &g[q]));
        terms.push((0.5 * d, tb - times[q + 1], &g[q + 1]));
    }
    sg.accumulate(&terms)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComposeReport {
    /// Worst margin of u(a_i) against the composed bound over all partition points.
    pub worst_intermediate_margin: f64,
    /// Largest |composed − direct| full-interval bound.
    pub composition_gap: f64,
    /// Worst subinterval margin.
    pub worst_subinterval_margin: f64,
    pub pass: bool,
}

/// Lemma-style composition: the inequality on each subinterval of `partition`
/// (indices into `times`) implies it on the whole interval.
pub fn compose_lemma_check(
    sg: &NeumannSemigroup,
    times: &[f64],
    u: &[ScalarField],
    g: &[ScalarField],
    partition: &[usize],
    tol: f64,
) -> Result<ComposeReport> {
    if partition.len() < 2 || u.len() != times.len() || g.len() != times.len() {
        return Err(Error::MissingSnapshots(format!("partition of {} points", partition.len())));
    }
    if partition.windows(2).any(|w| w[1] <= w[0]) || *partition.last().unwrap() >= times.len() {
        return Err(Error::InvalidConfig(format!("partition {:?} is not increasing within range", partition)));
    }
    let us: Vec<Spectrum> = u.iter().map(|f| sg.forward(f)).collect();
    let gs: Vec<Spectrum> = g.iter().map(|f| sg.forward(f)).collect();
    let mut worst_sub = f64::INFINITY;
    for (index, w) in partition.windows(2).enumerate() {
        let bound = sg.inverse(&interval_bound(sg, times, &us[w[0]], &gs, w[0], w[1]));
        let margin = bound.sub(&u[w[1]]).min();
        worst_sub = worst_sub.min(margin);
        if margin < -tol {
            return Err(Error::SubintervalFails { index, margin });
        }
    }
    // induction: bound_{i+1} = e^{ΔtΔ} bound_i + Duhamel over the next subinterval
    let mut composed = us[partition[0]].clone();
    let mut worst_mid = f64::INFINITY;
    for w in partition.windows(2) {
        composed = interval_bound(sg, times, &composed, &gs, w[0], w[1]);
        let field = sg.inverse(&composed);
        worst_mid = worst_mid.min(field.sub(&u[w[1]]).min());
    }
    let first = partition[0];
    let last = *partition.last().unwrap();
    let direct = sg.inverse(&interval_bound(sg, times, &us[first], &gs, first, last));
    let composed_field = sg.inverse(&composed);
    let gap = direct.sub(&composed_field).max_abs();
    Ok(ComposeReport {
        worst_intermediate_margin: worst_mid,
        composition_gap: gap,
        worst_subinterval_margin: worst_sub,
        pass: worst_mid >= -tol,
    })
}

/// Evolves ω by the covariant Bochner heat equation ω' = Σ_j(∇_j^A)²ω with RK4
/// and compares |ω(t)| against e^{tΔ_N}|ω(0)|.
pub fn diamagnetic_check(
    sg: &NeumannSemigroup,
    a: &crate::form::KForm,
    omega0: &crate::form::KForm,
    t: f64,
    dt: f64,
    bc: crate::boundary::BoundarySpec,
) -> Result<MarginReport> {
    use crate::boundary::{apply_boundary, BoundaryKind};
    use crate::ops::bochner_laplacian;
    if bc.kind == BoundaryKind::Marini {
        return Err(Error::InvalidConfig(format!("diamagnetic check needs Neumann or Dirichlet")));
    }
    a.require_ghosts()?;
    let h = sg.grid.min_spacing();
    if !(dt > 0.0) || dt > h * h / 8.0 * (1.0 + 1e-12) {
        return Err(Error::InvalidConfig(format!("dt = {} exceeds h²/8 = {}", dt, h * h / 8.0)));
    }
    if !(t >= 0.0) {
        return Err(Error::NegativeTime(t));
    }
    let steps = (t / dt).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let mut w = omega0.clone();
    apply_boundary(&mut w, bc);
    let abs0 = ScalarField::new(sg.grid, w.pointwise_norms());
    for step in 0..steps {
        let k1 = bochner_laplacian(a, &w)?;
        let mut s = w.clone();
        s.axpy(0.5 * dt, &k1);
        apply_boundary(&mut s, bc);
        let k2 = bochner_laplacian(a, &s)?;
        let mut s = w.clone();
        s.axpy(0.5 * dt, &k2);
        apply_boundary(&mut s, bc);
        let k3 = bochner_laplacian(a, &s)?;
        let mut s = w.clone();
        s.axpy(dt, &k3);
        apply_boundary(&mut s, bc);
        let k4 = bochner_laplacian(a, &s)?;
        w.axpy(dt / 6.0, &k1);
        w.axpy(dt / 3.0, &k2);
        w.axpy(dt / 3.0, &k3);
        w.axpy(dt / 6.0, &k4);
        apply_boundary(&mut w, bc);
        if !w.is_finite() {
            return Err(Error::NonFinite { step, t: (step + 1) as f64 * dt });
        }
    }
    let bound = sg.heat_apply(t, &abs0)?;
    let now = w.pointwise_norms();
    let (at_node, min_margin) = bound
        .values
        .iter()
        .zip(&now)
        .map(|(b, x)| b - x)
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, v)| if v < bv { (i, v) } else { (bi, bv) });
    let scale = abs0.max_abs();
    let tol = DOMINATION_C * (h * h + dt * dt) * scale;
    Ok(MarginReport { min_margin, tol, pass: min_margin >= -tol, at_time: t, at_node, scale })
}
