//! Scalar fields on masked grids and their finite-difference derivatives.

use std::sync::Arc;

use super::fit::LocalFit;
use super::grid::{DomainGrid, NodeTag};
use crate::error::{Error, Result};

/// One value per active (interior or boundary) node of a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Arc<DomainGrid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Arc<DomainGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.active_count() {
            return Err(Error::invalid(format!(
                "field has {} values but the grid has {} active nodes",
                values.len(),
                grid.active_count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value at active node {i}")));
        }
        Ok(Self { grid, values })
    }

    /// Sample `f` at every active node.
    pub fn from_fn(grid: Arc<DomainGrid>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = grid.active_nodes().iter().map(|&k| f(&grid.coords(k))).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Arc<DomainGrid>, c: f64) -> Result<Self> {
        let n = grid.active_count();
        Self::new(grid, vec![c; n])
    }

    pub fn grid(&self) -> &Arc<DomainGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at a lattice node; `None` for exterior nodes.
    pub fn at(&self, node: usize) -> Option<f64> {
        self.grid.slot(node).map(|s| self.values[s])
    }

    pub(crate) fn at_unchecked(&self, node: usize) -> f64 {
        self.values[self.grid.slot(node).expect("active node")]
    }

    pub fn same_grid(&self, other: &ScalarField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid.same_layout(&other.grid)
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<ScalarField> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect();
        ScalarField::new(self.grid.clone(), values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<ScalarField> {
        ScalarField::new(self.grid.clone(), self.values.iter().map(|v| f(*v)).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Value at an arbitrary point by a local quadratic least-squares fit
    /// around the nearest active node.
    pub fn interpolate(&self, p: &[f64]) -> Result<f64> {
        let center = nearest_active(&self.grid, p)?;
        let fit = LocalFit::around(&self.grid, center)?;
        Ok(fit.value_weights(p).iter().zip(fit.nodes()).map(|(w, &k)| w * self.at_unchecked(k)).sum())
    }
}

fn nearest_active(grid: &DomainGrid, p: &[f64]) -> Result<usize> {
    let k = grid.nearest_node(p);
    if grid.tag(k) != NodeTag::Exterior {
        return Ok(k);
    }
    // Search outward ring by ring for the closest active node.
    let h = grid.spacing();
    for ring in 1..=4isize {
        let mut best: Option<(f64, usize)> = None;
        let offsets: Vec<Vec<isize>> = if grid.dim() == 1 {
            vec![vec![-ring], vec![ring]]
        } else {
            let mut v = Vec::new();
            for dj in -ring..=ring {
                for di in -ring..=ring {
                    if di.abs() == ring || dj.abs() == ring {
                        v.push(vec![di, dj]);
                    }
                }
            }
            v
        };
        for off in offsets {
            if let Some(j) = grid.active_neighbor(k, &off) {
                let d: f64 = grid.coords(j).iter().zip(p).map(|(a, b)| (a - b).powi(2)).sum();
                if best.map_or(true, |(bd, bj)| d < bd - 1e-15 * h * h || (d <= bd + 1e-15 * h * h && j < bj)) {
                    best = Some((d, j));
                }
            }
        }
        if let Some((_, j)) = best {
            return Ok(j);
        }
    }
    Err(Error::invalid(format!("point {p:?} is more than four cells away from the domain")))
}

/// Gradient, area factor `W` and Hessian at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeDifferentials {
    pub dim: usize,
    grad: [f64; 2],
    /// Row-major `dim x dim` Hessian.
    hess: [f64; 4],
    pub w: f64,
}

impl NodeDifferentials {
    pub fn new(grad: &[f64], hess: &[f64]) -> Self {
        let dim = grad.len();
        let mut g = [0.0; 2];
        let mut hh = [0.0; 4];
        g[..dim].copy_from_slice(grad);
        hh[..dim * dim].copy_from_slice(&hess[..dim * dim]);
        let w = (1.0 + grad.iter().map(|c| c * c).sum::<f64>()).sqrt();
        Self { dim, grad: g, hess: hh, w }
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad[..self.dim]
    }

    /// Row-major Hessian.
    pub fn hess(&self) -> &[f64] {
        &self.hess[..self.dim * self.dim]
    }

    pub fn hess_entry(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.dim + j]
    }
}

/// Sparse linear functional `sum_k weight_k * u(node_k)`.
pub type Stencil = Vec<(usize, f64)>;

/// Centered second-order stencils at an interior node.
#[derive(Debug, Clone)]
pub struct CenteredStencils {
    /// `first[i]` approximates `u_i`.
    pub first: Vec<Stencil>,
    /// `second[i * n + j]` approximates `u_ij`.
    pub second: Vec<Stencil>,
}

/// Centered stencils at an interior node; errors on any other node.
pub fn centered_stencils(grid: &DomainGrid, node: usize) -> Result<CenteredStencils> {
    if grid.tag(node) != NodeTag::Interior {
        return Err(Error::StencilUnavailable { node, reason: "centered stencils need an interior node" });
    }
    let n = grid.dim();
    let h = grid.spacing();
    let nb = |steps: &[isize]| grid.offset(node, steps).expect("interior stencil inside lattice");
    let unit = |axis: usize, s: isize| {
        let mut v = vec![0isize; n];
        v[axis] = s;
        v
    };
    let mut first = Vec::with_capacity(n);
    let mut second = vec![Vec::new(); n * n];
    for i in 0..n {
        let (p, m) = (nb(&unit(i, 1)), nb(&unit(i, -1)));
        first.push(vec![(p, 0.5 / h), (m, -0.5 / h)]);
        second[i * n + i] = vec![(p, 1.0 / (h * h)), (node, -2.0 / (h * h)), (m, 1.0 / (h * h))];
    }
    if n == 2 {
        let q = 0.25 / (h * h);
        let mixed = vec![(nb(&[1, 1]), q), (nb(&[1, -1]), -q), (nb(&[-1, 1]), -q), (nb(&[-1, -1]), q)];
        second[1] = mixed.clone();
        second[2] = mixed;
    }
    Ok(CenteredStencils { first, second })
}

fn apply(stencil: &Stencil, u: &ScalarField) -> f64 {
    stencil.iter().map(|&(k, w)| w * u.at_unchecked(k)).sum()
}

/// Centered differentials at one interior node.
pub fn node_differentials(u: &ScalarField, node: usize) -> Result<NodeDifferentials> {
    let st = centered_stencils(u.grid(), node)?;
    let grad: Vec<f64> = st.first.iter().map(|s| apply(s, u)).collect();
    let hess: Vec<f64> = st.second.iter().map(|s| apply(s, u)).collect();
    Ok(NodeDifferentials::new(&grad, &hess))
}

/// Differentials at every interior node, in node order.
pub fn differentials(u: &ScalarField) -> Vec<(usize, NodeDifferentials)> {
    u.grid()
        .interior_nodes()
        .map(|k| (k, node_differentials(u, k).expect("interior node")))
        .collect()
}

/// One-sided second-order derivative along one axis at any active node.
///
/// Prefers the centered formula, then the three-point one-sided formula in
/// whichever direction has two active neighbors.
fn axis_first(u: &ScalarField, node: usize, axis: usize) -> Option<f64> {
    let g = u.grid();
    let h = g.spacing();
    let at = |s: isize| g.neighbor(node, axis, s).and_then(|j| u.at(j));
    match (at(-1), at(1)) {
        (Some(m), Some(p)) => Some((p - m) / (2.0 * h)),
        _ => {
            let u0 = u.at(node)?;
            if let (Some(p1), Some(p2)) = (at(1), at(2)) {
                Some((-3.0 * u0 + 4.0 * p1 - p2) / (2.0 * h))
            } else if let (Some(m1), Some(m2)) = (at(-1), at(-2)) {
                Some((3.0 * u0 - 4.0 * m1 + m2) / (2.0 * h))
            } else {
                None
            }
        }
    }
}

fn axis_second(u: &ScalarField, node: usize, axis: usize) -> Option<f64> {
    let g = u.grid();
    let h2 = g.spacing() * g.spacing();
    let at = |s: isize| g.neighbor(node, axis, s).and_then(|j| u.at(j));
    let u0 = u.at(node)?;
    if let (Some(m), Some(p)) = (at(-1), at(1)) {
        return Some((p - 2.0 * u0 + m) / h2);
    }
    for dir in [1isize, -1] {
        if let (Some(a), Some(b), Some(c)) = (at(dir), at(2 * dir), at(3 * dir)) {
            return Some((2.0 * u0 - 5.0 * a + 4.0 * b - c) / h2);
        }
    }
    None
}

/// Differentials at a boundary node from one-sided second-order stencils,
/// falling back to a local quadratic fit where the lattice lacks the nodes.
pub fn boundary_differentials(u: &ScalarField, node: usize) -> Result<NodeDifferentials> {
    let g = u.grid();
    match g.tag(node) {
        NodeTag::Interior => return node_differentials(u, node),
        NodeTag::Exterior => {
            return Err(Error::StencilUnavailable { node, reason: "exterior node has no value" });
        }
        NodeTag::Boundary => {}
    }
    let n = g.dim();
    let grad: Option<Vec<f64>> = (0..n).map(|a| axis_first(u, node, a)).collect();
    let diag: Option<Vec<f64>> = (0..n).map(|a| axis_second(u, node, a)).collect();
    let fit = LocalFit::around(g, node)?;
    let x = g.coords(node);
    let fitted_hess = fit.hessian_weights();
    let fit_apply = |w: &[f64]| w.iter().zip(fit.nodes()).map(|(c, &k)| c * u.at_unchecked(k)).sum::<f64>();
    let grad = match grad {
        Some(gv) => gv,
        None => fit.gradient_weights(&x).iter().map(|w| fit_apply(w)).collect(),
    };
    let mut hess: Vec<f64> = fitted_hess.iter().map(|w| fit_apply(w)).collect();
    if let Some(d) = diag {
        for i in 0..n {
            hess[i * n + i] = d[i];
        }
    }
    Ok(NodeDifferentials::new(&grad, &hess))
}
