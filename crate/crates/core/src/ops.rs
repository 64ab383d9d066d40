//! Covariant difference operators on ghosted forms.
//!
//! All derivatives are second-order central differences evaluated at real
//! nodes; outputs have unfilled ghosts.

use crate::boundary::{apply_boundary, BoundarySpec};
use crate::error::{Error, Result};
use crate::form::{component_index, components, prepend_index, KForm};
use crate::grid::GridSpec;
use crate::group::GroupMat;
use alloc::vec::Vec;

/// Calls `f(node)` for each real node in the ghosted index space.
#[inline]
fn for_real_nodes(g: &GridSpec, mut f: impl FnMut(usize)) {
    for k in 0..g.nodes[2] as isize {
        for j in 0..g.nodes[1] as isize {
            let base = g.idx(0, j, k);
            for i in 0..g.nodes[0] {
                f(base + i);
            }
        }
    }
}

/// out += s · ∂_axis ω_c at `node`.
#[inline]
fn acc_deriv(w: &KForm, c: usize, node: usize, axis: usize, s: f64, out: &mut [f64; 3]) {
    let st = w.grid.stride(axis);
    let inv = s / (2.0 * w.grid.spacing(axis));
    let p = w.at(c, node + st);
    let m = w.at(c, node - st);
    for a in 0..w.alg.dim {
        out[a] += inv * (p[a] - m[a]);
    }
}

fn check_pair(a: &KForm, w: &KForm) -> Result<()> {
    a.require_degree(1)?;
    a.require_compatible(w)?;
    a.require_ghosts()?;
    w.require_ghosts()
}

/// B_ij = ∂_i A_j − ∂_j A_i + [A_i, A_j].
pub fn curvature(a: &KForm) -> Result<KForm> {
    a.require_degree(1)?;
    a.require_ghosts()?;
    let g = a.grid;
    let alg = a.alg;
    let mut b = KForm::zeros(2, g, alg);
    for (c, ij) in components(2).iter().enumerate() {
        let (i, j) = (ij[0], ij[1]);
        for_real_nodes(&g, |node| {
            let mut v = [0.0; 3];
            acc_deriv(a, j, node, i, 1.0, &mut v);
            acc_deriv(a, i, node, j, -1.0, &mut v);
            alg.bracket_acc(1.0, a.at(i, node), a.at(j, node), &mut v);
            b.at_mut(c, node).copy_from_slice(&v[..alg.dim]);
        });
    }
    Ok(b)
}

/// d_A ω = dω + [A∧ω] for ω of degree ≤ 2.
pub fn d_cov(a: &KForm, w: &KForm) -> Result<KForm> {
    check_pair(a, w)?;
    if w.degree > 2 {
        return Err(Error::UnsupportedDegree { degree: w.degree, op: "d_cov" });
    }
    let g = a.grid;
    let alg = a.alg;
    let mut out = KForm::zeros(w.degree + 1, g, alg);
    let mut rest = [0usize; 3];
    for (c, multi) in components(w.degree + 1).iter().enumerate() {
        let mut terms: Vec<(usize, usize, f64)> = Vec::new();
        for m in 0..multi.len() {
            let mut n = 0;
            for (q, &x) in multi.iter().enumerate() {
                if q != m {
                    rest[n] = x;
                    n += 1;
                }
            }
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            terms.push((multi[m], component_index(&rest[..n]), sign));
        }
        for_real_nodes(&g, |node| {
            let mut v = [0.0; 3];
            for &(k, r, s) in &terms {
                acc_deriv(w, r, node, k, s, &mut v);
                alg.bracket_acc(s, a.at(k, node), w.at(r, node), &mut v);
            }
            out.at_mut(c, node).copy_from_slice(&v[..alg.dim]);
        });
    }
    Ok(out)
}

/// d_A* ω, the flat-metric adjoint of d_A: (d_A*ω)_J = −Σ_k (∂_k ω_{kJ} + [A_k, ω_{kJ}]).
pub fn dstar_cov(a: &KForm, w: &KForm) -> Result<KForm> {
    check_pair(a, w)?;
    if w.degree == 0 {
        return Err(Error::UnsupportedDegree { degree: 0, op: "dstar_cov" });
    }
    let g = a.grid;
    let alg = a.alg;
    let mut out = KForm::zeros(w.degree - 1, g, alg);
    for (c, multi) in components(w.degree - 1).iter().enumerate() {
        let terms: Vec<(usize, usize, f64)> = (0..3)
            .filter_map(|k| prepend_index(k, multi).map(|(idx, s)| (k, idx, -s)))
            .collect();
        for_real_nodes(&g, |node| {
            let mut v = [0.0; 3];
            for &(k, r, s) in &terms {
                acc_deriv(w, r, node, k, s, &mut v);
                alg.bracket_acc(s, a.at(k, node), w.at(r, node), &mut v);
            }
            out.at_mut(c, node).copy_from_slice(&v[..alg.dim]);
        });
    }
    Ok(out)
}

/// Plain codifferential (A = 0).
pub fn dstar(w: &KForm) -> Result<KForm> {
    let zero = zero_connection(w);
    dstar_cov(&zero, w)
}

/// Plain exterior derivative (A = 0).
pub fn d(w: &KForm) -> Result<KForm> {
    let zero = zero_connection(w);
    d_cov(&zero, w)
}

fn zero_connection(w: &KForm) -> KForm {
    let mut z = KForm::zeros(1, w.grid, w.alg);
    apply_boundary(&mut z, BoundarySpec { kind: w.ghosts().unwrap_or(crate::BoundaryKind::Neumann) });
    z
}

/// Σ_j (∂_j + ad A_j)² ω with a compact second difference.
pub fn bochner_laplacian(a: &KForm, w: &KForm) -> Result<KForm> {
    check_pair(a, w)?;
    let g = a.grid;
    let alg = a.alg;
    let d = alg.dim;
    let mut out = KForm::zeros(w.degree, g, alg);
    let h = g.spacings();
    for c in 0..w.n_comp() {
        for_real_nodes(&g, |node| {
            let mut v = [0.0; 3];
            let w0 = w.at(c, node);
            for axis in 0..3 {
                let st = g.stride(axis);
                let inv2 = 1.0 / (h[axis] * h[axis]);
                let wp = w.at(c, node + st);
                let wm = w.at(c, node - st);
                for q in 0..d {
                    v[q] += inv2 * (wp[q] - 2.0 * w0[q] + wm[q]);
                }
                if !alg.is_abelian() {
                    let aj = a.at(axis, node);
                    let mut da = [0.0; 3];
                    acc_deriv(a, axis, node, axis, 1.0, &mut da);
                    let mut dw = [0.0; 3];
                    acc_deriv(w, c, node, axis, 1.0, &mut dw);
                    alg.bracket_acc(1.0, &da, w0, &mut v);
                    alg.bracket_acc(2.0, aj, &dw, &mut v);
                    let mut inner = [0.0; 3];
                    alg.bracket(aj, w0, &mut inner);
                    alg.bracket_acc(1.0, aj, &inner, &mut v);
                }
            }
            out.at_mut(c, node).copy_from_slice(&v[..d]);
        });
    }
    Ok(out)
}

/// −(d_A d_A* + d_A* d_A) ω, intermediate ghosts filled with ω's boundary kind.
pub fn hodge_laplacian(a: &KForm, w: &KForm) -> Result<KForm> {
    check_pair(a, w)?;
    if w.degree == 0 || w.degree > 2 {
        return Err(Error::UnsupportedDegree { degree: w.degree, op: "hodge_laplacian" });
    }
    let bc = BoundarySpec { kind: w.ghosts().ok_or(Error::GhostsUnfilled)? };
    let mut s = dstar_cov(a, w)?;
    apply_boundary(&mut s, bc);
    let mut t1 = d_cov(a, &s)?;
    let mut dw = d_cov(a, w)?;
    apply_boundary(&mut dw, bc);
    let t2 = dstar_cov(a, &dw)?;
    t1.axpy(1.0, &t2);
    Ok(t1.scaled(-1.0))
}

/// −(d_A d_A* + d_A* d_A)ω − Σ_j(∇_j^A)²ω for ω of degree 1 or 2.
pub fn weitzenbock_defect(a: &KForm, w: &KForm) -> Result<KForm> {
    if w.degree == 0 || w.degree > 2 {
        return Err(Error::UnsupportedDegree { degree: w.degree, op: "weitzenbock_defect" });
    }
    let mut out = hodge_laplacian(a, w)?;
    let b = bochner_laplacian(a, w)?;
    out.axpy(-1.0, &b);
    Ok(out)
}

/// ([α⌟B])_j = Σ_i [α_i, B_ij].
pub fn contraction_bracket(alpha: &KForm, b: &KForm) -> Result<KForm> {
    alpha.require_degree(1)?;
    b.require_degree(2)?;
    alpha.require_compatible(b)?;
    let g = alpha.grid;
    let alg = alpha.alg;
    let mut out = KForm::zeros(1, g, alg);
    for j in 0..3 {
        let terms: Vec<(usize, usize, f64)> =
            (0..3).filter_map(|i| prepend_index(i, &[j]).map(|(idx, s)| (i, idx, s))).collect();
        for_real_nodes(&g, |node| {
            let mut v = [0.0; 3];
            for &(i, r, s) in &terms {
                alg.bracket_acc(s, alpha.at(i, node), b.at(r, node), &mut v);
            }
            out.at_mut(j, node).copy_from_slice(&v[..alg.dim]);
        });
    }
    Ok(out)
}

/// A group-valued 0-form given on every ghosted node.
#[derive(Debug, Clone)]
pub struct GaugeField {
    pub grid: GridSpec,
    pub values: Vec<GroupMat>,
}

impl GaugeField {
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut([f64; 3]) -> GroupMat) -> Self {
        let mut values = Vec::with_capacity(grid.ext_len());
        for k in -1..=grid.nodes[2] as isize {
            for j in -1..=grid.nodes[1] as isize {
                for i in -1..=grid.nodes[0] as isize {
                    values.push(f(grid.position(i, j, k)));
                }
            }
        }
        GaugeField { grid, values }
    }

    pub fn constant(grid: GridSpec, k: GroupMat) -> Self {
        Self::from_fn(grid, |_| k)
    }
}

/// A^k = k⁻¹ A k + k⁻¹ dk at real nodes, dk by central differences.
pub fn gauge_transform(a: &KForm, k: &GaugeField) -> Result<KForm> {
    a.require_degree(1)?;
    if k.grid != a.grid {
        return Err(Error::GridMismatch);
    }
    for (node, m) in k.values.iter().enumerate() {
        let dev = m.unitarity_deviation();
        if !(dev <= 1e-10) || m.dim != a.alg.rep_dim {
            return Err(Error::NotInGroup { node, deviation: dev });
        }
    }
    let g = a.grid;
    let alg = a.alg;
    let mut out = KForm::zeros(1, g, alg);
    for axis in 0..3 {
        let st = g.stride(axis);
        let inv = 1.0 / (2.0 * g.spacing(axis));
        for_real_nodes(&g, |node| {
            let kn = k.values[node];
            let kinv = kn.adjoint();
            let dk = (k.values[node + st] - k.values[node - st]).scale(inv);
            let m = kinv * alg.to_matrix(a.at(axis, node)) * kn + kinv * dk;
            let r = alg.from_matrix(&m);
            out.at_mut(axis, node).copy_from_slice(&r[..alg.dim]);
        });
    }
    Ok(out)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{exp_algebra, LieAlgebraSpec};
    use crate::boundary::{with_boundary, BoundaryKind};
    use crate::fields::{random_smooth, RandomFieldSpec};
    use crate::form::NormKind;
    use core::f64::consts::PI;
    use num_complex::Complex64;

    fn neumann() -> BoundarySpec {
        BoundaryKind::Neumann.into()
    }

    fn smooth_a(n: usize, seed: u64, amp: f64) -> KForm {
        let g = GridSpec::cube(1.0, n).unwrap();
        random_smooth(1, g, LieAlgebraSpec::su2(), neumann(), RandomFieldSpec { amplitude: amp, max_mode: 2, seed })
    }

    #[test]
    fn curvature_of_zero_and_linear_u1() {
        let g = GridSpec::cube(1.0, 8).unwrap();
        let z = with_boundary(KForm::zeros(1, g, LieAlgebraSpec::u1()), neumann());
        assert_eq!(curvature(&z).unwrap().norm(NormKind::Linf).unwrap(), 0.0);
        let a = KForm::from_fn(1, g, LieAlgebraSpec::u1(), |c, x| [if c == 1 { 0.7 * x[0] } else { 0.0 }, 0.0, 0.0]);
        let a = with_boundary(a, BoundaryKind::Marini.into());
        let b = curvature(&a).unwrap();
        for i in 1..7 {
            let node = g.idx(i, 3, 4);
            assert!((b.at(0, node)[0] - 0.7).abs() < 1e-14);
            assert_eq!(b.at(1, node)[0], 0.0);
        }
    }

    #[test]
    fn curvature_of_constant_su2_is_commutator() {
        let g = GridSpec::cube(1.0, 8).unwrap();
        let alg = LieAlgebraSpec::su2();
        let x1 = [0.3, -0.2, 0.9];
        let x2 = [1.1, 0.5, -0.4];
        let a = KForm::from_fn(1, g, alg, |c, _| match c {
            0 => x1,
            1 => x2,
            _ => [0.0; 3],
        });
        let a = with_boundary(a, BoundaryKind::Marini.into());
        let b = curvature(&a).unwrap();
        let expect = alg.bracket_structure(&x1, &x2);
        let node = g.idx(4, 4, 4);
        for q in 0..3 {
            assert!((b.at(0, node)[q] - expect[q]).abs() < 1e-15);
        }
    }

    #[test]
    fn d_cov_of_constant_zero_form() {
        let g = GridSpec::cube(1.0, 8).unwrap();
        let alg = LieAlgebraSpec::su2();
        let xi = [0.2, 0.7, -1.0];
        let av = [[1.0, 0.0, 0.5], [0.0, -0.3, 0.2], [0.4, 0.4, 0.4]];
        let a = with_boundary(KForm::from_fn(1, g, alg, |c, _| av[c]), BoundaryKind::Marini.into());
        let w = with_boundary(KForm::from_fn(0, g, alg, |_, _| xi), BoundaryKind::Marini.into());
        let out = d_cov(&a, &w).unwrap();
        let node = g.idx(2, 5, 3);
        for j in 0..3 {
            let e = alg.bracket_structure(&av[j], &xi);
            for q in 0..3 {
                assert!((out.at(j, node)[q] - e[q]).abs() < 1e-15);
            }
        }
        let three = KForm::zeros(3, g, alg);
        assert!(matches!(
            d_cov(&a, &with_boundary(three, neumann())),
            Err(Error::UnsupportedDegree { degree: 3, .. })
        ));
    }

    #[test]
    fn abelian_d_cov_is_plain_d() {
        let g = GridSpec::cube(1.0, 10).unwrap();
        let alg = LieAlgebraSpec::u1();
        let a = random_smooth(1, g, alg, neumann(), RandomFieldSpec { amplitude: 1.0, max_mode: 2, seed: 3 });
        let w = random_smooth(1, g, alg, neumann(), RandomFieldSpec { amplitude: 1.0, max_mode: 2, seed: 4 });
        let x = d_cov(&a, &w).unwrap();
        let y = d(&w).unwrap();
        assert!(x.max_diff(&y) == 0.0);
    }

    fn bianchi_residual(n: usize) -> f64 {
        let a = smooth_a(n, 11, 1.0);
        let b = with_boundary(curvature(&a).unwrap(), neumann());
        d_cov(&a, &b).unwrap().norm(NormKind::Linf).unwrap()
    }

    #[test]
    fn bianchi_residual_is_second_order() {
        let r1 = bianchi_residual(12);
        let r2 = bianchi_residual(24);
        let h1 = 1.0 / 11.0;
        let order = (r1 / r2).ln() / (23.0f64 / 11.0).ln();
        assert!(order > 1.8, "order {order}: {r1} {r2}");
        // pinned constant: measured C ≈ 21.9 for this field family, allowed ±50%
        let c = r1 / (h1 * h1);
        assert!((11.0..=33.0).contains(&c), "C = {c}");
    }

    fn dstar_dstar_residual(n: usize) -> f64 {
        let a = smooth_a(n, 5, 1.0);
        let b = with_boundary(curvature(&a).unwrap(), neumann());
        let s = with_boundary(dstar_cov(&a, &b).unwrap(), neumann());
        dstar_cov(&a, &s).unwrap().norm(NormKind::L2).unwrap()
    }

    #[test]
    fn double_codifferential_of_curvature_vanishes_to_second_order() {
        let r1 = dstar_dstar_residual(12);
        let r2 = dstar_dstar_residual(24);
        let order = (r1 / r2).ln() / (23.0f64 / 11.0).ln();
        assert!(order > 1.8, "order {order}: {r1} {r2}");
    }

    #[test]
    fn codifferential_of_curl_and_constant() {
        let g = GridSpec::cube(1.0, 8).unwrap();
        let alg = LieAlgebraSpec::su2();
        let zero = with_boundary(KForm::zeros(1, g, alg), neumann());
        let c = with_boundary(KForm::from_fn(2, g, alg, |_, _| [1.0, 2.0, 3.0]), BoundaryKind::Marini.into());
        // Marini fill zeroes normal components on faces; check interior only
        let s = dstar_cov(&zero, &c).unwrap();
        assert!(s.max_diff_interior(&KForm::zeros(1, g, alg), 2) < 1e-13);
        // curl-constructed abelian 1-form ω = *dφ-like: ω = (∂₂ψ, −∂₁ψ, 0) is divergence-free
        let n = 16;
        let g = GridSpec::cube(1.0, n).unwrap();
        let w = crate::fields::coulomb_cosine_mode(g, LieAlgebraSpec::u1(), 1.0);
        let z = with_boundary(KForm::zeros(1, g, LieAlgebraSpec::u1()), neumann());
        let div = dstar_cov(&z, &w).unwrap();
        assert!(div.norm(NormKind::Linf).unwrap() < 1e-12);
    }

    #[test]
    fn adjointness_is_exact_for_neumann_fields() {
        let n = 10;
        let g = GridSpec::cube(1.0, n).unwrap();
        let alg = LieAlgebraSpec::su2();
        let a = smooth_a(n, 1, 0.8);
        for p in 0..=2 {
            let alpha = random_smooth(p, g, alg, neumann(), RandomFieldSpec { amplitude: 1.0, max_mode: 2, seed: 20 + p as u64 });
            let beta = random_smooth(p + 1, g, alg, neumann(), RandomFieldSpec { amplitude: 1.0, max_mode: 2, seed: 30 + p as u64 });
            let lhs = d_cov(&a, &alpha).unwrap().inner(&beta).unwrap();
            let rhs = alpha.inner(&dstar_cov(&a, &beta).unwrap()).unwrap();
            assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0), "p={p}: {lhs} {rhs}");
        }
    }

    #[test]
    fn bochner_cosine_eigenvalue() {
        for n in [16, 32] {
            let g = GridSpec::cube(1.0, n).unwrap();
            let alg = LieAlgebraSpec::u1();
            let w = with_boundary(KForm::from_fn(0, g, alg, |_, x| [(PI * x[0]).cos(), 0.0, 0.0]), neumann());
            let z = with_boundary(KForm::zeros(1, g, alg), neumann());
            let lap = bochner_laplacian(&z, &w).unwrap();
            let expect = w.scaled(-PI * PI);
            let h = g.spacing(0);
            let err = lap.max_diff(&expect);
            assert!(err <= 1.0 * PI.powi(4) / 12.0 * h * h * 1.01, "n={n}: {err}");
        }
    }

    fn abelian_operator_gap(n: usize) -> f64 {
        let g = GridSpec::cube(1.0, n).unwrap();
        let alg = LieAlgebraSpec::u1();
        let w = random_smooth(1, g, alg, neumann(), RandomFieldSpec { amplitude: 1.0, max_mode: 2, seed: 9 });
        let z = with_boundary(KForm::zeros(1, g, alg), neumann());
        let x = hodge_laplacian(&z, &w).unwrap();
        let y = bochner_laplacian(&z, &w).unwrap();
        x.max_diff(&y)
    }

    #[test]
    fn abelian_bochner_equals_hodge_to_second_order() {
        let r1 = abelian_operator_gap(12);
        let r2 = abelian_operator_gap(24);
        let order = (r1 / r2).ln() / (23.0f64 / 11.0).ln();
        assert!(order > 1.8, "order {order}");
        let g = GridSpec::cube(1.0, 12).unwrap();
        let alg = LieAlgebraSpec::u1();
        let a = random_smooth(1, g, alg, neumann(), RandomFieldSpec { amplitude: 1.0, max_mode: 2, seed: 2 });
        let w = random_smooth(2, g, alg, neumann(), RandomFieldSpec { amplitude: 1.0, max_mode: 2, seed: 9 });
        let zero = with_boundary(KForm::zeros(1, g, alg), neumann());
        let d1 = weitzenbock_defect(&a, &w).unwrap();
        let d0 = weitzenbock_defect(&zero, &w).unwrap();
        assert!(d1.max_diff(&d0) < 1e-10, "abelian defect must not depend on A");
    }

    /// Continuum value of the defect on ω = B: 2Σ_j [B_ij, B_jk].
    fn defect_formula(b: &KForm) -> KForm {
        let alg = b.alg;
        let mut out = KForm::zeros(2, b.grid, alg);
        let get = |i: usize, j: usize, node: usize| -> [f64; 3] {
            let mut v = [0.0; 3];
            if let Some((idx, s)) = prepend_index(i, &[j]) {
                for q in 0..alg.dim {
                    v[q] = s * b.at(idx, node)[q];
                }
            }
            v
        };
        for (c, ik) in components(2).iter().enumerate() {
            for node in 0..b.grid.ext_len() {
                let mut v = [0.0; 3];
                for j in 0..3 {
                    alg.bracket_acc(2.0, &get(ik[0], j, node), &get(j, ik[1], node), &mut v);
                }
                out.at_mut(c, node).copy_from_slice(&v);
            }
        }
        out
    }

    fn defect_vs_formula(n: usize) -> (f64, f64) {
        let a = smooth_a(n, 17, 1.0);
        let b = with_boundary(curvature(&a).unwrap(), neumann());
        let def = weitzenbock_defect(&a, &b).unwrap();
        let formula = defect_formula(&b);
        let sharp = 2.0 / 3f64.sqrt() * a.alg.c;
        let mut excess: f64 = f64::NEG_INFINITY;
        let g = a.grid;
        g.for_each_real(|i, j, k| {
            let node = g.idx(i as isize, j as isize, k as isize);
            let nb = b.pointwise_norm_sq(node);
            // the formula itself never exceeds the sharp constant
            assert!(formula.pointwise_norm_sq(node).sqrt() <= sharp * nb * (1.0 + 1e-12) + 1e-15);
            excess = excess.max(def.pointwise_norm_sq(node).sqrt() - sharp * nb);
        });
        (def.max_diff(&formula), excess)
    }

    #[test]
    fn defect_of_curvature_matches_bracket_formula() {
        let (e1, x1) = defect_vs_formula(17);
        let (e2, x2) = defect_vs_formula(33);
        let order = (e1 / e2).log2();
        assert!(order > 1.7, "order {order}: {e1} {e2}");
        // |defect| ≤ (2/√3)c|B|² + C·h², C measured ≈ 1.6e3 at h = 1/16 for this family
        let h = 1.0 / 16.0;
        assert!(x1 <= 2.4e3 * h * h && x2 <= 2.4e3 * h * h / 4.0 * 1.3, "{x1} {x2}");
    }

    #[test]
    fn sharp_constant_is_attained_by_orthogonal_components() {
        let g = GridSpec::cube(1.0, 8).unwrap();
        let alg = LieAlgebraSpec::su2();
        // b-dual components along the three basis directions
        let b = KForm::from_fn(2, g, alg, |c, _| match c {
            0 => [0.0, 0.0, 1.0],
            1 => [0.0, -1.0, 0.0],
            _ => [1.0, 0.0, 0.0],
        });
        let f = defect_formula(&b);
        let node = g.idx(3, 3, 3);
        let ratio = f.pointwise_norm_sq(node).sqrt() / b.pointwise_norm_sq(node);
        assert!((ratio - 2.0 / 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn defect_on_one_forms_is_the_contraction() {
        let errs: std::vec::Vec<f64> = [17usize, 33]
            .iter()
            .map(|&n| {
                let a = smooth_a(n, 3, 1.0);
                let g = a.grid;
                let w = random_smooth(1, g, a.alg, neumann(), RandomFieldSpec { amplitude: 1.0, max_mode: 2, seed: 77 });
                let b = curvature(&a).unwrap();
                let def = weitzenbock_defect(&a, &w).unwrap();
                def.max_diff(&contraction_bracket(&w, &b).unwrap())
            })
            .collect();
        assert!((errs[0] / errs[1]).log2() > 1.7, "{errs:?}");
    }

    #[test]
    fn contraction_hand_example() {
        let g = GridSpec::cube(1.0, 8).unwrap();
        let alg = LieAlgebraSpec::su2();
        let x1 = [0.4, 0.1, -0.3];
        let x2 = [-0.2, 0.9, 0.5];
        let alpha = KForm::from_fn(1, g, alg, |c, _| if c == 0 { x1 } else { [0.0; 3] });
        let b = KForm::from_fn(2, g, alg, |c, _| if c == 0 { x2 } else { [0.0; 3] });
        let out = contraction_bracket(&alpha, &b).unwrap();
        let e = alg.bracket_structure(&x1, &x2);
        let node = g.idx(3, 3, 3);
        for q in 0..3 {
            assert!((out.at(1, node)[q] - e[q]).abs() < 1e-15);
            assert_eq!(out.at(0, node)[q], 0.0);
            assert_eq!(out.at(2, node)[q], 0.0);
        }
        let u = LieAlgebraSpec::u1();
        let alpha = KForm::from_fn(1, g, u, |_, x| [x[0], 0.0, 0.0]);
        let b = KForm::from_fn(2, g, u, |_, x| [x[1], 0.0, 0.0]);
        assert_eq!(contraction_bracket(&alpha, &b).unwrap().norm(NormKind::Linf).unwrap(), 0.0);
    }

    #[test]
    fn gauge_transform_identity_and_u1_phase() {
        let n = 16;
        let g = GridSpec::cube(1.0, n).unwrap();
        let a = smooth_a(n, 4, 1.0);
        let id = GaugeField::constant(g, GroupMat::identity(2));
        assert!(gauge_transform(&a, &id).unwrap().max_diff(&a) < 1e-15);
        let u = LieAlgebraSpec::u1();
        let a = random_smooth(1, g, u, neumann(), RandomFieldSpec { amplitude: 1.0, max_mode: 2, seed: 8 });
        let chi = |x: [f64; 3]| (x[0] * 2.0).sin() + x[1] * x[2];
        let k = GaugeField::from_fn(g, |x| GroupMat::scalar(Complex64::new(chi(x).cos(), chi(x).sin())));
        let ak = gauge_transform(&a, &k).unwrap();
        let expect = KForm::from_fn(1, g, u, |c, x| {
            let grad = [2.0 * (2.0 * x[0]).cos(), x[2], x[1]];
            [grad[c], 0.0, 0.0]
        });
        let mut diff = ak.clone();
        diff.axpy(-1.0, &a);
        let err = diff.max_diff(&expect);
        let h = g.spacing(0);
        assert!(err < 4.0 * h * h, "{err}");
    }

    #[test]
    fn gauge_transform_rejects_non_unitary() {
        let g = GridSpec::cube(1.0, 8).unwrap();
        let a = with_boundary(KForm::zeros(1, g, LieAlgebraSpec::su2()), neumann());
        let k = GaugeField::constant(g, GroupMat::identity(2).scale(1.001));
        assert!(matches!(gauge_transform(&a, &k), Err(Error::NotInGroup { .. })));
    }

    fn equivariance_error(n: usize) -> f64 {
        let g = GridSpec::cube(1.0, n).unwrap();
        let alg = LieAlgebraSpec::su2();
        let a = smooth_a(n, 6, 0.7);
        let k = GaugeField::from_fn(g, |x| exp_algebra(&alg, &[x[0].sin(), x[1] * x[2], 0.5 * x[0] - x[2]]));
        let ak = with_boundary(gauge_transform(&a, &k).unwrap(), BoundaryKind::Marini.into());
        let bk = curvature(&ak).unwrap();
        let b = curvature(&a).unwrap();
        let mut rotated = b.clone();
        for c in 0..3 {
            for node in 0..g.ext_len() {
                let kn = k.values[node];
                let m = kn.adjoint() * alg.to_matrix(b.at(c, node)) * kn;
                rotated.at_mut(c, node).copy_from_slice(&alg.from_matrix(&m));
            }
        }
        bk.max_diff_interior(&rotated, 2)
    }

    #[test]
    fn curvature_is_gauge_covariant_to_second_order() {
        let e1 = equivariance_error(12);
        let e2 = equivariance_error(24);
        let order = (e1 / e2).ln() / (23.0f64 / 11.0).ln();
        assert!(order > 1.8, "order {order}: {e1} {e2}");
    }

    #[test]
    fn w1_norm_splits_into_summands() {
        let g = GridSpec::cube(1.0, 12).unwrap();
        let w = random_smooth(1, g, LieAlgebraSpec::su2(), neumann(), RandomFieldSpec { amplitude: 1.0, max_mode: 2, seed: 1 });
        let w1 = w.norm(NormKind::W1).unwrap();
        // recompute ∫|∇ω|² from d-free derivative fields built component by component
        let mut grad_sq = 0.0;
        let h = g.spacing(0);
        g.for_each_real(|i, j, k| {
            let (i, j, k) = (i as isize, j as isize, k as isize);
            let wgt = g.trapezoid_weight(0, i as usize) * g.trapezoid_weight(1, j as usize) * g.trapezoid_weight(2, k as usize);
            for c in 0..3 {
                for q in 0..3 {
                    let f = |ii, jj, kk| w.at(c, g.idx(ii, jj, kk))[q];
                    let dx = (f(i + 1, j, k) - f(i - 1, j, k)) / (2.0 * h);
                    let dy = (f(i, j + 1, k) - f(i, j - 1, k)) / (2.0 * h);
                    let dz = (f(i, j, k + 1) - f(i, j, k - 1)) / (2.0 * h);
                    grad_sq += wgt * (dx * dx + dy * dy + dz * dz);
                }
            }
        });
        let l2 = w.norm(NormKind::L2).unwrap();
        assert!((w1 * w1 - (grad_sq + l2 * l2)).abs() < 1e-12 * w1 * w1);
    }
}
