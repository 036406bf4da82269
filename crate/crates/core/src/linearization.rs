//! The linear operator satisfied by the difference of two graphs.
//!
//! With `u^t = ū + t w`, `w = u - ū`, the fundamental theorem of calculus
//! applied to `t -> mc(u^t)` gives
//!
//! ```text
//! mc(u) - mc(ū) = sum A^ij w_ij + sum B^i w_i,
//! A^ij = ∫ a_ij(∇u^t) dt,    B^k = ∫ b_k(∇u^t, D²u^t) dt,
//! ```
//!
//! where `a_ij`, `b_k` are the coefficients of the Fréchet derivative of `mc`.
//! Subtracting `n (H(u) - H(ū)) = n ∫ dH/du(u^t) dt · w` yields
//! `L(w) = sum A^ij w_ij + sum B^i w_i + C w` with `C = -n ∫ dH/du dt`.

use std::sync::Arc;

use nalgebra::{Matrix2, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::curvature::{eval_H, PrescribedH};
use crate::error::{Error, Result};
use crate::geometry::field::{centered_stencils, node_differentials, ScalarField};
use crate::geometry::DomainGrid;

pub const DEFAULT_PANELS: usize = 32;

/// Symmetric `n x n` coefficient matrix (`n` is 1 or 2), row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientMatrix {
    pub dim: usize,
    pub entries: [f64; 4],
}

impl CoefficientMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: [0.0; 4] }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    fn add_scaled(&mut self, other: &CoefficientMatrix, s: f64) {
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += s * b;
        }
    }

    pub fn quadratic_form(&self, xi: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.get(i, j) * xi[i] * xi[j];
            }
        }
        s
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        match self.dim {
            1 => vec![self.entries[0]],
            _ => {
                let m = Matrix2::new(self.entries[0], self.entries[1], self.entries[2], self.entries[3]);
                let mut e: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
                e.sort_by(f64::total_cmp);
                e
            }
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }
}

/// `a_ij = δ_ij / W - p_i p_j / W³`.
pub fn pointwise_aij(grad: &[f64]) -> CoefficientMatrix {
    let n = grad.len();
    let w2 = 1.0 + grad.iter().map(|g| g * g).sum::<f64>();
    let w = w2.sqrt();
    let w3 = w * w2;
    let mut m = CoefficientMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let delta = if i == j { 1.0 } else { 0.0 };
            m.entries[i * n + j] = delta / w - grad[i] * grad[j] / w3;
        }
    }
    m
}

/// First-order coefficients of the derivative of `mc` in direction `w`:
/// `d/dt mc(u + t w) = sum a_ij w_ij + sum b_k w_k`.
///
/// Term by term, differentiating `u_ii / W` and `u_i u_j u_ij / W³`:
/// - `-(w_i u_j + u_i w_j) u_ij / W³` gives `-2 (D²u ∇u)_k / W³`;
/// - `d(1/W) = -(∇u·∇w) / W³` on `Δu` gives `-Δu u_k / W³`;
/// - `d(1/W³) = -3 (∇u·∇w) / W⁵` on `-∇uᵀD²u∇u` gives `+3 (∇uᵀD²u∇u) u_k / W⁵`.
pub fn first_order_coefficients(grad: &[f64], hess: &[f64]) -> [f64; 2] {
    let n = grad.len();
    let w2 = 1.0 + grad.iter().map(|g| g * g).sum::<f64>();
    let w = w2.sqrt();
    let w3 = w * w2;
    let w5 = w3 * w2;
    let lap: f64 = (0..n).map(|i| hess[i * n + i]).sum();
    let mut hg = [0.0; 2];
    for i in 0..n {
        for j in 0..n {
            hg[i] += hess[i * n + j] * grad[j];
        }
    }
    let quad: f64 = (0..n).map(|i| grad[i] * hg[i]).sum();
    let mut b = [0.0; 2];
    for k in 0..n {
        b[k] = -2.0 * hg[k] / w3 - lap * grad[k] / w3 + 3.0 * quad * grad[k] / w5;
    }
    b
}

/// Value, gradient and row-major Hessian of a function at one point.
#[derive(Debug, Clone, Copy)]
pub struct Jet<'a> {
    pub value: f64,
    pub grad: &'a [f64],
    pub hess: &'a [f64],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeCoefficients {
    #[serde(rename = "A")]
    pub a: CoefficientMatrix,
    #[serde(rename = "B")]
    pub b: [f64; 2],
    #[serde(rename = "C")]
    pub c: f64,
}

/// Composite Simpson nodes and weights on `[0, 1]` with `panels` panels.
pub fn simpson_rule(panels: usize) -> Vec<(f64, f64)> {
    let m = 2 * panels;
    let step = 1.0 / m as f64;
    (0..=m)
        .map(|k| {
            let w = if k == 0 || k == m {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            (k as f64 * step, w * step / 3.0)
        })
        .collect()
}

/// Integral coefficients at one point from the jets of `u` and `ū`.
pub fn node_coefficients(
    x: &[f64],
    u: Jet<'_>,
    ubar: Jet<'_>,
    profile: &PrescribedH,
    panels: usize,
) -> Result<NodeCoefficients> {
    if panels < 1 {
        return Err(Error::invalid("quadrature needs at least one Simpson panel"));
    }
    let n = u.grad.len();
    let mut out = NodeCoefficients { a: CoefficientMatrix::zeros(n), b: [0.0; 2], c: 0.0 };
    let mut grad = [0.0; 2];
    let mut hess = [0.0; 4];
    for (t, wt) in simpson_rule(panels) {
        for i in 0..n {
            grad[i] = ubar.grad[i] + t * (u.grad[i] - ubar.grad[i]);
        }
        for i in 0..n * n {
            hess[i] = ubar.hess[i] + t * (u.hess[i] - ubar.hess[i]);
        }
        let g = &grad[..n];
        out.a.add_scaled(&pointwise_aij(g), wt);
        let b = first_order_coefficients(g, &hess[..n * n]);
        let value = ubar.value + t * (u.value - ubar.value);
        let (_, dh_du) = eval_H(profile, x, value, g)?;
        let dh_dp = profile.d_grad(x, value, g)?;
        for k in 0..n {
            out.b[k] += wt * (b[k] - n as f64 * dh_dp[k]);
        }
        out.c -= wt * n as f64 * dh_du;
    }
    Ok(out)
}

/// Per-node coefficients of `L` over the interior nodes of a grid.
#[derive(Debug, Clone, Serialize)]
pub struct EllipticOperatorField {
    #[serde(skip)]
    grid: Option<Arc<DomainGrid>>,
    pub nodes: Vec<usize>,
    pub coefficients: Vec<NodeCoefficients>,
    /// Certified ellipticity constant: a lower bound on every `A`.
    pub k: f64,
}

impl EllipticOperatorField {
    /// Operator with given coefficients at every interior node of `grid`.
    pub fn from_fn(grid: Arc<DomainGrid>, f: impl Fn(&[f64]) -> NodeCoefficients) -> Self {
        let nodes: Vec<usize> = grid.interior_nodes().collect();
        let coefficients: Vec<NodeCoefficients> = nodes.iter().map(|&k| f(&grid.coords(k))).collect();
        let k = coefficients.iter().map(|c| c.a.min_eigenvalue()).fold(f64::INFINITY, f64::min);
        Self { grid: Some(grid), nodes, coefficients, k }
    }

    /// `A = I`, `B = 0`, `C = 0`.
    pub fn laplacian(grid: Arc<DomainGrid>) -> Self {
        let n = grid.dim();
        let mut a = CoefficientMatrix::zeros(n);
        for i in 0..n {
            a.entries[i * n + i] = 1.0;
        }
        Self::from_fn(grid, |_| NodeCoefficients { a, b: [0.0; 2], c: 0.0 })
    }

    pub fn grid(&self) -> &Arc<DomainGrid> {
        self.grid.as_ref().expect("operator built on a grid")
    }

    pub fn coefficients_at(&self, node: usize) -> Option<&NodeCoefficients> {
        self.nodes.binary_search(&node).ok().map(|i| &self.coefficients[i])
    }

    /// `L(w)` at each interior node, aligned with `nodes`.
    pub fn apply(&self, w: &ScalarField) -> Result<Vec<f64>> {
        if !w.grid().same_layout(self.grid()) {
            return Err(Error::GridMismatch);
        }
        let grid = self.grid();
        let n = grid.dim();
        self.nodes
            .par_iter()
            .zip(&self.coefficients)
            .map(|(&k, c)| {
                let st = centered_stencils(grid, k)?;
                let ev = |s: &Vec<(usize, f64)>| s.iter().map(|&(j, wt)| wt * w.at(j).expect("active")).sum::<f64>();
                let mut v = c.c * w.at(k).expect("interior");
                for i in 0..n {
                    v += c.b[i] * ev(&st.first[i]);
                    for j in 0..n {
                        v += c.a.get(i, j) * ev(&st.second[i * n + j]);
                    }
                }
                Ok(v)
            })
            .collect()
    }

    /// JSON records `{node, x, A, B, C}` plus `k`.
    pub fn to_json(&self) -> serde_json::Value {
        let grid = self.grid();
        let records: Vec<serde_json::Value> = self
            .nodes
            .iter()
            .zip(&self.coefficients)
            .map(|(&k, c)| {
                serde_json::json!({
                    "node": k,
                    "x": grid.coords(k),
                    "A": &c.a.entries[..c.a.dim * c.a.dim],
                    "B": &c.b[..c.a.dim],
                    "C": c.c,
                })
            })
            .collect();
        serde_json::json!({ "k": self.k, "nodes": records })
    }
}

/// Assemble `L` for `w = u - ū` from centered differences at interior nodes.
pub fn assemble_difference_operator(
    u: &ScalarField,
    ubar: &ScalarField,
    profile: &PrescribedH,
    panels: usize,
) -> Result<EllipticOperatorField> {
    if !u.same_grid(ubar) {
        return Err(Error::GridMismatch);
    }
    let grid = u.grid().clone();
    let nodes: Vec<usize> = grid.interior_nodes().collect();
    let coefficients = nodes
        .par_iter()
        .map(|&k| {
            let du = node_differentials(u, k)?;
            let db = node_differentials(ubar, k)?;
            node_coefficients(
                &grid.coords(k),
                Jet { value: u.at(k).expect("active"), grad: du.grad(), hess: du.hess() },
                Jet { value: ubar.at(k).expect("active"), grad: db.grad(), hess: db.hess() },
                profile,
                panels,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let k = ellipticity_constant(u, ubar)?;
    Ok(EllipticOperatorField { grid: Some(grid), nodes, coefficients, k })
}

/// `k = 1 / max over interior nodes of max(W_u³, W_ū³)`.
pub fn ellipticity_constant(u: &ScalarField, ubar: &ScalarField) -> Result<f64> {
    if !u.same_grid(ubar) {
        return Err(Error::GridMismatch);
    }
    let grid = u.grid();
    let mut wmax: f64 = 1.0;
    for k in grid.interior_nodes() {
        wmax = wmax.max(node_differentials(u, k)?.w).max(node_differentials(ubar, k)?.w);
    }
    Ok(1.0 / wmax.powi(3))
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundViolation {
    pub node: usize,
    pub xi: Vec<f64>,
    pub form: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EllipticityReport {
    pub checks: usize,
    pub violations: Vec<BoundViolation>,
    /// Largest `|form(ξ ∥ ∇u) - 1/W³|` over nodes with nonzero gradient: the
    /// bound is attained along the gradient.
    pub equality_gap: f64,
}

/// Check `sum a_ij ξ_i ξ_j >= |ξ|² / W³` at every interior node for random
/// unit `ξ` and the directions parallel and orthogonal to the gradient.
pub fn verify_ellipticity_bound(u: &ScalarField, samples: usize, seed: u64) -> Result<EllipticityReport> {
    let grid = u.grid();
    let n = grid.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = EllipticityReport { checks: 0, violations: Vec::new(), equality_gap: 0.0 };
    for k in grid.interior_nodes() {
        let d = node_differentials(u, k)?;
        let a = pointwise_aij(d.grad());
        let bound_of = |xi: &[f64]| xi.iter().map(|v| v * v).sum::<f64>() / d.w.powi(3);
        let mut dirs: Vec<Vec<f64>> = (0..samples).map(|_| random_unit(&mut rng, n)).collect();
        let gnorm = d.grad().iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm > 0.0 {
            let par: Vec<f64> = d.grad().iter().map(|g| g / gnorm).collect();
            let gap = (a.quadratic_form(&par) - 1.0 / d.w.powi(3)).abs();
            report.equality_gap = report.equality_gap.max(gap);
            if n == 2 {
                dirs.push(vec![-par[1], par[0]]);
            }
            dirs.push(par);
        }
        for xi in dirs {
            report.checks += 1;
            let (form, bound) = (a.quadratic_form(&xi), bound_of(&xi));
            if form < bound - 1e-12 {
                report.violations.push(BoundViolation { node: k, xi, form, bound });
            }
        }
    }
    Ok(report)
}

pub fn random_unit(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let l = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if l > 1e-3 && l <= 1.0 {
            return v.into_iter().map(|c| c / l).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::mc_from_derivatives;
    use crate::geometry::Region;
    use proptest::prelude::*;

    #[test]
    fn flat_gradient_gives_identity() {
        assert_eq!(pointwise_aij(&[0.0, 0.0]).entries, [1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn closed_form_entries() {
        let a1 = pointwise_aij(&[1.0]);
        assert!((a1.entries[0] - 2f64.powf(-1.5)).abs() < 1e-15);
        let a = pointwise_aij(&[1.0, 1.0]);
        let s = 3f64.sqrt();
        assert!((a.get(0, 0) - 2.0 / (3.0 * s)).abs() < 1e-15);
        assert!((a.get(0, 1) + 1.0 / (3.0 * s)).abs() < 1e-15);
        let e = a.eigenvalues();
        assert!((e[0] - 1.0 / (3.0 * s)).abs() < 1e-15 && (e[1] - 1.0 / s).abs() < 1e-15);
        assert!((a.quadratic_form(&[1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()]) - 1.0 / (3.0 * s)).abs() < 1e-15);
    }

    #[test]
    fn one_dimensional_integral_coefficient() {
        // ū = 0, u = x: A = ∫ (1 + t²)^(-3/2) dt = 1/√2.
        let c = node_coefficients(
            &[0.0],
            Jet { value: 0.0, grad: &[1.0], hess: &[0.0] },
            Jet { value: 0.0, grad: &[0.0], hess: &[0.0] },
            &PrescribedH::constant(0.0),
            DEFAULT_PANELS,
        )
        .unwrap();
        assert!((c.a.entries[0] - 0.5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn first_order_coefficients_match_a_directional_difference() {
        let grad = [0.4, -0.7];
        let hess = [1.1, 0.3, 0.3, -0.5];
        let (dg, dh) = ([0.2, 0.5], [-0.4, 0.7, 0.7, 0.9]);
        let eps = 1e-6;
        let at = |s: f64| {
            let g: Vec<f64> = grad.iter().zip(&dg).map(|(a, b)| a + s * b).collect();
            let h: Vec<f64> = hess.iter().zip(&dh).map(|(a, b)| a + s * b).collect();
            mc_from_derivatives(&g, &h)
        };
        let fd = (at(eps) - at(-eps)) / (2.0 * eps);
        let a = pointwise_aij(&grad);
        let b = first_order_coefficients(&grad, &hess);
        let lin = (0..2).map(|i| b[i] * dg[i] + (0..2).map(|j| a.get(i, j) * dh[i * 2 + j]).sum::<f64>()).sum::<f64>();
        assert!((fd - lin).abs() < 1e-8, "{fd} vs {lin}");
    }

    #[test]
    fn equal_fields_collapse_to_pointwise() {
        let grid = Arc::new(DomainGrid::from_region(&Region::disk([0.0, 0.0], 0.5), 1.0 / 16.0).unwrap());
        let u = ScalarField::from_fn(grid.clone(), |x| x[0] * x[1] + 0.3 * x[0]).unwrap();
        let op = assemble_difference_operator(&u, &u, &PrescribedH::affine(0.0, 2.0), 8).unwrap();
        let w = ScalarField::constant(grid, 0.0).unwrap();
        assert!(op.apply(&w).unwrap().iter().all(|&v| v == 0.0));
        for (&k, c) in op.nodes.iter().zip(&op.coefficients) {
            let d = node_differentials(&u, k).unwrap();
            let a = pointwise_aij(d.grad());
            for (x, y) in c.a.entries.iter().zip(&a.entries) {
                assert!((x - y).abs() < 1e-14);
            }
            assert!((c.c + 4.0).abs() < 1e-14);
        }
    }

    #[test]
    fn ellipticity_constant_examples() {
        let grid = Arc::new(DomainGrid::from_region(&Region::disk([0.0, 0.0], 0.5), 1.0 / 16.0).unwrap());
        let flat = ScalarField::constant(grid.clone(), 1.0).unwrap();
        assert_eq!(ellipticity_constant(&flat, &flat).unwrap(), 1.0);
        let steep = ScalarField::from_fn(grid, |x| 2f64.sqrt() * x[0] + x[1]).unwrap();
        assert!((ellipticity_constant(&steep, &flat).unwrap() - 0.125).abs() < 1e-12);
    }

    #[test]
    fn bound_report_on_flat_field() {
        let grid = Arc::new(DomainGrid::from_region(&Region::disk([0.0, 0.0], 0.5), 1.0 / 8.0).unwrap());
        let flat = ScalarField::constant(grid, 0.0).unwrap();
        let r = verify_ellipticity_bound(&flat, 10, 0).unwrap();
        assert!(r.violations.is_empty() && r.checks > 0 && r.equality_gap == 0.0);
    }

    #[test]
    fn operator_json_has_records() {
        let grid = Arc::new(DomainGrid::from_region(&Region::disk([0.0, 0.0], 0.5), 1.0 / 8.0).unwrap());
        let op = EllipticOperatorField::laplacian(grid);
        let j = op.to_json();
        assert_eq!(j["k"], 1.0);
        assert_eq!(j["nodes"].as_array().unwrap().len(), op.nodes.len());
    }

    proptest! {
        #[test]
        fn eigenvalues_are_inverse_w_powers(gx in -5.0..5.0f64, gy in -5.0..5.0f64) {
            let w = (1.0 + gx * gx + gy * gy).sqrt();
            let e = pointwise_aij(&[gx, gy]).eigenvalues();
            prop_assert!((e[0] - 1.0 / w.powi(3)).abs() < 1e-12);
            prop_assert!((e[1] - 1.0 / w).abs() < 1e-12);
        }

        #[test]
        fn symmetric_by_construction(gx in -5.0..5.0f64, gy in -5.0..5.0f64) {
            let a = pointwise_aij(&[gx, gy]);
            prop_assert_eq!(a.get(0, 1), a.get(1, 0));
        }

        #[test]
        fn quadratic_form_bound(gx in -5.0..5.0f64, gy in -5.0..5.0f64, xa in -1.0..1.0f64, xb in -1.0..1.0f64) {
            let w3 = (1.0 + gx * gx + gy * gy).powf(1.5);
            let a = pointwise_aij(&[gx, gy]);
            prop_assert!(a.quadratic_form(&[xa, xb]) >= (xa * xa + xb * xb) / w3 - 1e-12);
        }
    }
}
