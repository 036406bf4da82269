//! Weighted least-squares quadratic fits over active grid nodes.
//!
//! A fit is linear in the nodal values, so it is stored as weight vectors:
//! value, gradient and Hessian at a point are dot products with those weights.
//! Boundary rows of the solvers use these weights directly as Jacobian entries.

use nalgebra::{DMatrix, DVector};

use super::grid::{DomainGrid, NodeTag};
use crate::error::{Error, Result};

const RADIUS: f64 = 2.3;
const WIDE_RADIUS: f64 = 3.2;
const SIGMA: f64 = 1.5;
const RCOND: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct LocalFit {
    dim: usize,
    h: f64,
    center: Vec<f64>,
    nodes: Vec<usize>,
    /// `projector[j]` maps nodal values to basis coefficient `j`.
    projector: Vec<Vec<f64>>,
}

fn basis_len(dim: usize) -> usize {
    if dim == 1 {
        3
    } else {
        6
    }
}

/// Quadratic basis in scaled coordinates: `1, x, (y,) x², (xy, y²)`.
fn basis(xi: &[f64]) -> Vec<f64> {
    match xi {
        [x] => vec![1.0, *x, x * x],
        [x, y] => vec![1.0, *x, *y, x * x, x * y, y * y],
        _ => unreachable!("fits exist in one or two dimensions"),
    }
}

/// Derivatives of the basis with respect to scaled coordinate `axis`.
fn basis_grad(xi: &[f64], axis: usize) -> Vec<f64> {
    match (xi, axis) {
        ([x], 0) => vec![0.0, 1.0, 2.0 * x],
        ([x, y], 0) => vec![0.0, 1.0, 0.0, 2.0 * x, *y, 0.0],
        ([x, y], 1) => vec![0.0, 0.0, 1.0, 0.0, *x, 2.0 * y],
        _ => unreachable!(),
    }
}

impl LocalFit {
    /// Fit centered on an active node.
    pub fn around(grid: &DomainGrid, node: usize) -> Result<Self> {
        if grid.tag(node) == NodeTag::Exterior {
            return Err(Error::StencilUnavailable { node, reason: "fit centered on an exterior node" });
        }
        Self::at(grid, &grid.coords(node))
    }

    /// Fit centered on an arbitrary point near the active region.
    pub fn at(grid: &DomainGrid, center: &[f64]) -> Result<Self> {
        match Self::build(grid, center, RADIUS) {
            Ok(fit) => Ok(fit),
            Err(Error::RankDeficient(_)) => Self::build(grid, center, WIDE_RADIUS),
            Err(e) => Err(e),
        }
    }

    fn build(grid: &DomainGrid, center: &[f64], radius: f64) -> Result<Self> {
        let dim = grid.dim();
        let h = grid.spacing();
        let near = grid.nearest_node(center);
        let reach = radius.ceil() as isize + 1;
        let mut nodes = Vec::new();
        let mut scaled = Vec::new();
        let mut visit = |steps: &[isize]| {
            if let Some(j) = grid.active_neighbor(near, steps) {
                let xi: Vec<f64> = grid.coords(j).iter().zip(center).map(|(a, c)| (a - c) / h).collect();
                if xi.iter().map(|v| v * v).sum::<f64>() <= radius * radius {
                    nodes.push(j);
                    scaled.push(xi);
                }
            }
        };
        if dim == 1 {
            for di in -reach..=reach {
                visit(&[di]);
            }
        } else {
            for dj in -reach..=reach {
                for di in -reach..=reach {
                    visit(&[di, dj]);
                }
            }
        }
        let m = basis_len(dim);
        if nodes.len() < m {
            return Err(Error::RankDeficient(format!(
                "{} active nodes within {radius}h of {center:?}, need {m}",
                nodes.len()
            )));
        }
        let k = nodes.len();
        let mut a = DMatrix::zeros(k, m);
        let mut sqrt_w = DVector::zeros(k);
        for (r, xi) in scaled.iter().enumerate() {
            let d2: f64 = xi.iter().map(|v| v * v).sum();
            let w = (-0.5 * d2 / (SIGMA * SIGMA)).exp().sqrt();
            sqrt_w[r] = w;
            for (c, phi) in basis(xi).into_iter().enumerate() {
                a[(r, c)] = w * phi;
            }
        }
        let svd = a.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smin > RCOND * smax) {
            return Err(Error::RankDeficient(format!("quadratic fit at {center:?} is ill-conditioned")));
        }
        let pinv = svd.pseudo_inverse(0.0).map_err(|e| Error::RankDeficient(e.to_string()))?;
        let projector = (0..m).map(|j| (0..k).map(|r| pinv[(j, r)] * sqrt_w[r]).collect()).collect();
        Ok(Self { dim, h, center: center.to_vec(), nodes, projector })
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    fn combine(&self, coeffs: &[f64], scale: f64) -> Vec<f64> {
        (0..self.nodes.len())
            .map(|r| coeffs.iter().zip(&self.projector).map(|(c, p)| c * p[r]).sum::<f64>() * scale)
            .collect()
    }

    fn scaled(&self, p: &[f64]) -> Vec<f64> {
        p.iter().zip(&self.center).map(|(a, c)| (a - c) / self.h).collect()
    }

    /// Weights giving the fitted value at `p`.
    pub fn value_weights(&self, p: &[f64]) -> Vec<f64> {
        self.combine(&basis(&self.scaled(p)), 1.0)
    }

    /// One weight vector per axis giving the fitted gradient at `p`.
    pub fn gradient_weights(&self, p: &[f64]) -> Vec<Vec<f64>> {
        let xi = self.scaled(p);
        (0..self.dim).map(|a| self.combine(&basis_grad(&xi, a), 1.0 / self.h)).collect()
    }

    /// Row-major Hessian weights (the Hessian of a quadratic is constant).
    pub fn hessian_weights(&self) -> Vec<Vec<f64>> {
        let s = 1.0 / (self.h * self.h);
        match self.dim {
            1 => vec![self.combine(&[0.0, 0.0, 2.0], s)],
            _ => {
                let xx = self.combine(&[0.0, 0.0, 0.0, 2.0, 0.0, 0.0], s);
                let xy = self.combine(&[0.0, 0.0, 0.0, 0.0, 1.0, 0.0], s);
                let yy = self.combine(&[0.0, 0.0, 0.0, 0.0, 0.0, 2.0], s);
                vec![xx, xy.clone(), xy, yy]
            }
        }
    }

    /// Apply a weight vector to nodal values supplied by `value(node)`.
    pub fn apply(&self, weights: &[f64], value: impl Fn(usize) -> f64) -> f64 {
        weights.iter().zip(&self.nodes).map(|(w, &k)| w * value(k)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::region::Region;

    #[test]
    fn quadratics_are_reproduced_at_boundary_anchors() {
        let grid = DomainGrid::from_region(&Region::disk([0.1, -0.2], 0.45), 1.0 / 40.0).unwrap();
        let f = |x: &[f64]| 0.3 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[0] - 1.5 * x[0] * x[1] + x[1] * x[1];
        for k in grid.boundary_nodes() {
            let p = grid.anchor(k).unwrap().point.clone();
            let fit = LocalFit::at(&grid, &p).unwrap();
            let val = fit.apply(&fit.value_weights(&p), |j| f(&grid.coords(j)));
            assert!((val - f(&p)).abs() < 1e-10);
            let g = fit.gradient_weights(&p);
            let gx = fit.apply(&g[0], |j| f(&grid.coords(j)));
            let gy = fit.apply(&g[1], |j| f(&grid.coords(j)));
            assert!((gx - (2.0 + p[0] - 1.5 * p[1])).abs() < 1e-8);
            assert!((gy - (-1.0 - 1.5 * p[0] + 2.0 * p[1])).abs() < 1e-8);
            let hw = fit.hessian_weights();
            assert!((fit.apply(&hw[1], |j| f(&grid.coords(j))) + 1.5).abs() < 1e-6);
        }
    }

    #[test]
    fn interval_endpoint_fit_is_exact_for_parabolas() {
        let grid = DomainGrid::from_region(&Region::Interval { lo: 0.0, hi: 1.0 }, 0.125).unwrap();
        let fit = LocalFit::at(&grid, &[0.0]).unwrap();
        let f = |x: f64| 1.0 - x + 3.0 * x * x;
        let g = fit.gradient_weights(&[0.0]);
        assert!((fit.apply(&g[0], |j| f(grid.coords(j)[0])) + 1.0).abs() < 1e-10);
    }

    #[test]
    fn value_weights_sum_to_one() {
        let grid = DomainGrid::from_region(&Region::disk([0.0, 0.0], 0.5), 1.0 / 16.0).unwrap();
        let fit = LocalFit::at(&grid, &[0.5, 0.0]).unwrap();
        let s: f64 = fit.value_weights(&[0.5, 0.0]).iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }
}
