use crate::error::{Error, Result};
use crate::geometry::field::{boundary_differentials, node_differentials, NodeDifferentials, ScalarField};
use crate::geometry::grid::NodeTag;

/// `(1/W) sum u_ii - (1/W^3) sum u_i u_j u_ij` from given derivatives.
///
/// `hess` is row-major `n x n`.
pub fn mc_from_derivatives(grad: &[f64], hess: &[f64]) -> f64 {
    let n = grad.len();
    let w2 = 1.0 + grad.iter().map(|g| g * g).sum::<f64>();
    let w = w2.sqrt();
    let lap: f64 = (0..n).map(|i| hess[i * n + i]).sum();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += grad[i] * grad[j] * hess[i * n + j];
        }
    }
    lap / w - quad / (w * w2)
}

pub fn mc_at(d: &NodeDifferentials) -> f64 {
    mc_from_derivatives(d.grad(), d.hess())
}

/// Expanded form at every active node: centered differences at interior
/// nodes, one-sided or fitted derivatives at boundary nodes.
pub fn mc_expanded(u: &ScalarField) -> Result<ScalarField> {
    let grid = u.grid();
    let values = grid
        .active_nodes()
        .iter()
        .map(|&k| {
            let d = match grid.tag(k) {
                NodeTag::Interior => node_differentials(u, k)?,
                _ => boundary_differentials(u, k)?,
            };
            Ok(mc_at(&d))
        })
        .collect::<Result<Vec<_>>>()?;
    ScalarField::new(grid.clone(), values)
}

/// Conservative form `div(grad u / W)` from fluxes at half nodes.
///
/// At the half node between `x` and `x + h e_i` the normal derivative is the
/// two-point difference and the tangential one averages centered differences
/// at both ends. Boundary nodes fall back to the expanded form.
pub fn mc_divergence_form(u: &ScalarField) -> Result<ScalarField> {
    let grid = u.grid();
    let n = grid.dim();
    let h = grid.spacing();
    let val = |node: usize, steps: &[isize]| -> Result<f64> {
        grid.offset(node, steps)
            .and_then(|j| u.at(j))
            .ok_or(Error::StencilUnavailable { node, reason: "flux stencil leaves the domain" })
    };
    let flux = |node: usize, axis: usize, dir: isize| -> Result<f64> {
        let mut e = vec![0isize; n];
        e[axis] = dir;
        let normal = (val(node, &e)? - val(node, &vec![0; n])?) / h * dir as f64;
        let mut g2 = normal * normal;
        if n == 2 {
            let other = 1 - axis;
            let mut t = vec![0isize; 2];
            t[other] = 1;
            let mut tm = t.clone();
            tm[other] = -1;
            let mut et = e.clone();
            et[other] = 1;
            let mut etm = e.clone();
            etm[other] = -1;
            let tang = (val(node, &t)? - val(node, &tm)? + val(node, &et)? - val(node, &etm)?) / (4.0 * h);
            g2 += tang * tang;
        }
        Ok(normal / (1.0 + g2).sqrt())
    };
    let values = grid
        .active_nodes()
        .iter()
        .map(|&k| {
            if grid.tag(k) != NodeTag::Interior {
                return Ok(mc_at(&boundary_differentials(u, k)?));
            }
            let mut div = 0.0;
            for axis in 0..n {
                div += (flux(k, axis, 1)? - flux(k, axis, -1)?) / h;
            }
            Ok(div)
        })
        .collect::<Result<Vec<_>>>()?;
    ScalarField::new(grid.clone(), values)
}
