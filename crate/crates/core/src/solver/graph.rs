//! Newton's method for `mc(u) = n H(x, u, ∇u)` on a masked grid.
//!
//! Interior nodes carry the centered equation. Boundary nodes close to the
//! true boundary carry the boundary condition, evaluated at the node's
//! anchor through a local quadratic fit; the remaining boundary nodes carry
//! the equation with fitted derivatives. Plate heights are
//! imposed at every boundary node by interpolation along the normal.

use std::sync::Arc;

use crate::curvature::{eval_H, mc_from_derivatives, BoundaryCurve, PrescribedH};
use crate::error::{Error, Result};
use crate::geometry::field::{centered_stencils, node_differentials, Stencil};
use crate::geometry::fit::LocalFit;
use crate::geometry::{DomainGrid, NodeTag, Region, ScalarField, Slab};
use crate::linalg::{BandedLu, SparseRows};
use crate::linearization::{first_order_coefficients, pointwise_aij, EllipticOperatorField};
use crate::touching::MonotoneScheme;

use super::{BoundaryConditionSpec, BoundaryData, Damping, SolverSettings};

/// Boundary nodes nearer than this many grid spacings to their anchor carry
/// the boundary condition.
const OUTER_DEPTH: f64 = 0.75;

#[derive(Debug, Clone)]
pub struct GraphSolution {
    pub u: ScalarField,
    /// Max-norm residual before each Newton step of the final stage, and
    /// after the last one.
    pub history: Vec<f64>,
    /// Newton iterations summed over continuation stages.
    pub iterations: usize,
    pub interior_residual: f64,
    pub boundary_residual: f64,
    /// Equation residual at the pinned node of a pure Neumann problem.
    pub pinned_defect: Option<f64>,
}

#[derive(Debug, Clone)]
enum Row {
    Equation { grad: Vec<Stencil>, hess: Vec<Stencil> },
    Fixed(f64),
    Value { w: Stencil, target: f64 },
    Angle { grad: Vec<Stencil>, eta: Vec<f64>, cos: f64 },
    Flux { grad: Vec<Stencil>, eta: Vec<f64>, value: f64 },
}

struct Problem<'a> {
    grid: Arc<DomainGrid>,
    profile: &'a PrescribedH,
    rows: Vec<Row>,
    coords: Vec<Vec<f64>>,
}

fn to_slots(grid: &DomainGrid, s: &[(usize, f64)]) -> Stencil {
    s.iter().map(|&(k, w)| (grid.slot(k).expect("stencil node is active"), w)).collect()
}

fn fit_stencil(grid: &DomainGrid, fit: &LocalFit, w: &[f64]) -> Stencil {
    fit.nodes().iter().zip(w).map(|(&k, &c)| (grid.slot(k).expect("fit node is active"), c)).collect()
}

fn eval(s: &Stencil, u: &[f64]) -> f64 {
    s.iter().map(|&(j, w)| w * u[j]).sum()
}

fn equation_row(grid: &DomainGrid, node: usize) -> Result<Row> {
    if grid.tag(node) == NodeTag::Interior {
        let st = centered_stencils(grid, node)?;
        return Ok(Row::Equation {
            grad: st.first.iter().map(|s| to_slots(grid, s)).collect(),
            hess: st.second.iter().map(|s| to_slots(grid, s)).collect(),
        });
    }
    let fit = LocalFit::around(grid, node)?;
    let x = grid.coords(node);
    Ok(Row::Equation {
        grad: fit.gradient_weights(&x).iter().map(|w| fit_stencil(grid, &fit, w)).collect(),
        hess: fit.hessian_weights().iter().map(|w| fit_stencil(grid, &fit, w)).collect(),
    })
}

/// Gradient at a boundary anchor whose normal part differentiates, at the
/// anchor, the quadratic through `u_k` and fitted values at `x_k + h η` and
/// `x_k + 2h η`. The tangential part comes from the fit at the anchor. Keeps a
/// dominant weight on the node's own value, which a pure fit does not.
fn normal_dominant_gradient(
    grid: &DomainGrid,
    fit: &LocalFit,
    slot: usize,
    x: &[f64],
    anchor: &[f64],
    eta: &[f64],
    depth: f64,
) -> Result<Vec<Stencil>> {
    let n = grid.dim();
    let h = grid.spacing();
    let t = [depth, depth + h, depth + 2.0 * h];
    // Derivative at 0 of the Lagrange basis on the nodes t.
    let dl = |i: usize| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        -(t[j] + t[k]) / ((t[i] - t[j]) * (t[i] - t[k]))
    };
    let mut normal: Vec<(usize, f64)> = vec![(slot, dl(0))];
    for m in 1..3 {
        let q: Vec<f64> = x.iter().zip(eta).map(|(a, e)| a + m as f64 * h * e).collect();
        let qfit = LocalFit::at(grid, &q)?;
        let c = dl(m);
        normal.extend(fit_stencil(grid, &qfit, &qfit.value_weights(&q)).into_iter().map(|(j, w)| (j, c * w)));
    }
    let fg: Vec<Stencil> = fit.gradient_weights(anchor).iter().map(|w| fit_stencil(grid, fit, w)).collect();
    Ok((0..n)
        .map(|a| {
            let mut st: Vec<(usize, f64)> = normal.iter().map(|&(j, w)| (j, eta[a] * w)).collect();
            for b in 0..n {
                let c = if a == b { 1.0 } else { 0.0 } - eta[a] * eta[b];
                st.extend(fg[b].iter().map(|&(j, w)| (j, c * w)));
            }
            merge(st)
        })
        .collect())
}

/// Plate row at a node at distance `depth` inside its anchor: the quadratic
/// along `η` through the anchor and fitted values at `x_k + h η` and
/// `x_k + 2h η` interpolates `u_k`. Returns `u_k - L1 u(q1) - L2 u(q2)` as a
/// stencil and the anchor weight `L0`, so the row reads `stencil = L0 z`.
fn normal_interpolation(
    grid: &DomainGrid,
    slot: usize,
    x: &[f64],
    eta: &[f64],
    depth: f64,
) -> Result<(Stencil, f64)> {
    let h = grid.spacing();
    let t = [0.0, depth + h, depth + 2.0 * h];
    let lagrange = |i: usize| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        (depth - t[j]) * (depth - t[k]) / ((t[i] - t[j]) * (t[i] - t[k]))
    };
    let mut st = vec![(slot, 1.0)];
    for m in 1..3 {
        let q: Vec<f64> = x.iter().zip(eta).map(|(a, e)| a + m as f64 * h * e).collect();
        let qfit = LocalFit::at(grid, &q)?;
        let c = lagrange(m);
        st.extend(fit_stencil(grid, &qfit, &qfit.value_weights(&q)).into_iter().map(|(j, w)| (j, -c * w)));
    }
    Ok((merge(st), lagrange(0)))
}

fn merge(mut st: Vec<(usize, f64)>) -> Stencil {
    st.sort_by_key(|e| e.0);
    let mut out: Stencil = Vec::with_capacity(st.len());
    for (j, w) in st {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += w,
            _ => out.push((j, w)),
        }
    }
    out.retain(|e| e.1 != 0.0);
    out
}

/// What a boundary node near the true boundary imposes.
enum Condition<'a> {
    Dirichlet(&'a BoundaryData),
    Plates([f64; 2]),
    Flux(&'a BoundaryConditionSpec),
}

impl<'a> Problem<'a> {
    fn build(grid: Arc<DomainGrid>, profile: &'a PrescribedH, cond: Condition<'_>) -> Result<Self> {
        let h = grid.spacing();
        let n = grid.dim();
        let mut rows = Vec::with_capacity(grid.active_count());
        let coords: Vec<Vec<f64>> = grid.active_nodes().iter().map(|&k| grid.coords(k)).collect();
        for (slot, &k) in grid.active_nodes().iter().enumerate() {
            let x = &coords[slot];
            if grid.tag(k) == NodeTag::Interior {
                rows.push(equation_row(&grid, k)?);
                continue;
            }
            if let Condition::Dirichlet(g) = &cond {
                rows.push(Row::Fixed(g.eval(x)));
                continue;
            }
            let anchor = grid
                .anchor(k)
                .ok_or_else(|| Error::invalid(format!("boundary node {k} has no anchor; build the grid from a region")))?;
            let depth = x.iter().zip(&anchor.point).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            // Plate rows interpolate along the normal, which stays well
            // conditioned at any depth.
            if depth >= OUTER_DEPTH * h && !matches!(cond, Condition::Plates(_)) {
                rows.push(equation_row(&grid, k)?);
                continue;
            }
            let fit = LocalFit::at(&grid, &anchor.point)?;
            let eta = anchor.inward_normal.clone();
            let grad = normal_dominant_gradient(&grid, &fit, slot, x, &anchor.point, &eta, depth)?;
            let plate = anchor.plate.clamp(1, 2) as usize;
            let row = match &cond {
                Condition::Plates(z) => {
                    let (w, l0) = normal_interpolation(&grid, slot, x, &eta, depth)?;
                    Row::Value { w, target: l0 * z[plate - 1] }
                }
                Condition::Flux(BoundaryConditionSpec::ContactAngle { gamma1, gamma2 }) => {
                    let g = if plate == 1 { *gamma1 } else { *gamma2 };
                    Row::Angle { grad, eta, cos: g.cos() }
                }
                Condition::Flux(BoundaryConditionSpec::CurvatureFlux { h: fs, .. }) => {
                    let f = &fs[(plate - 1).min(fs.len() - 1)];
                    let h0 = if n >= 2 { anchor.curvature / (n - 1) as f64 } else { 0.0 };
                    Row::Flux { grad, eta, value: f.eval(h0)? }
                }
                Condition::Flux(BoundaryConditionSpec::RadialFlux { c, origin }) => {
                    let r = anchor.point.iter().zip(origin).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                    Row::Flux { grad, eta, value: -c * r }
                }
                Condition::Flux(_) | Condition::Dirichlet(_) => unreachable!("handled by the caller"),
            };
            rows.push(row);
        }
        Ok(Self { grid, profile, rows, coords })
    }

    /// Residual of row `i` at amplitude `lambda`, and optionally its
    /// Jacobian row.
    fn row(&self, i: usize, u: &[f64], lambda: f64, jac: bool) -> Result<(f64, Vec<(usize, f64)>)> {
        let n = self.grid.dim();
        match &self.rows[i] {
            Row::Fixed(v) => Ok((u[i] - v, if jac { vec![(i, 1.0)] } else { Vec::new() })),
            Row::Value { w, target } => Ok((eval(w, u) - target, if jac { w.clone() } else { Vec::new() })),
            Row::Equation { grad, hess } => {
                let g: Vec<f64> = grad.iter().map(|s| eval(s, u)).collect();
                let hs: Vec<f64> = hess.iter().map(|s| eval(s, u)).collect();
                let x = &self.coords[i];
                let (hv, dh_du) = eval_H(self.profile, x, u[i], &g)?;
                let nn = n as f64;
                let f = mc_from_derivatives(&g, &hs) - lambda * nn * hv;
                if !jac {
                    return Ok((f, Vec::new()));
                }
                let a = pointwise_aij(&g);
                let b = first_order_coefficients(&g, &hs);
                let dh_dp = self.profile.d_grad(x, u[i], &g)?;
                let mut row = vec![(i, -lambda * nn * dh_du)];
                for p in 0..n {
                    let c = b[p] - lambda * nn * dh_dp[p];
                    row.extend(grad[p].iter().map(|&(j, w)| (j, c * w)));
                    for q in 0..n {
                        let c = a.get(p, q);
                        row.extend(hess[p * n + q].iter().map(|&(j, w)| (j, c * w)));
                    }
                }
                Ok((f, row))
            }
            Row::Angle { grad, eta, cos } => {
                let g: Vec<f64> = grad.iter().map(|s| eval(s, u)).collect();
                let w = (1.0 + g.iter().map(|v| v * v).sum::<f64>()).sqrt();
                let ge: f64 = g.iter().zip(eta).map(|(a, b)| a * b).sum();
                let f = ge / w - cos;
                let mut row = Vec::new();
                if jac {
                    for p in 0..n {
                        let c = eta[p] / w - ge * g[p] / (w * w * w);
                        row.extend(grad[p].iter().map(|&(j, wt)| (j, c * wt)));
                    }
                }
                Ok((f, row))
            }
            Row::Flux { grad, eta, value } => {
                let ge: f64 = grad.iter().zip(eta).map(|(s, e)| e * eval(s, u)).sum();
                let mut row = Vec::new();
                if jac {
                    for p in 0..n {
                        row.extend(grad[p].iter().map(|&(j, wt)| (j, eta[p] * wt)));
                    }
                }
                Ok((ge - value, row))
            }
        }
    }

    fn residual(&self, u: &[f64], lambda: f64) -> Result<Vec<f64>> {
        (0..self.rows.len()).map(|i| self.row(i, u, lambda, false).map(|r| r.0)).collect()
    }

    fn jacobian(&self, u: &[f64], lambda: f64) -> Result<(Vec<f64>, SparseRows)> {
        let mut f = Vec::with_capacity(self.rows.len());
        let mut j = Vec::with_capacity(self.rows.len());
        for i in 0..self.rows.len() {
            let (v, r) = self.row(i, u, lambda, true)?;
            f.push(v);
            j.push(r);
        }
        Ok((f, j))
    }

    fn newton(&self, mut u: Vec<f64>, settings: &SolverSettings) -> Result<(Vec<f64>, Vec<f64>, usize)> {
        let steps = settings.continuation_steps;
        let mut total = 0;
        let mut history = Vec::new();
        for stage in 1..=steps {
            let lambda = stage as f64 / steps as f64;
            history.clear();
            let mut iter = 0;
            loop {
                let (f, jac) = self.jacobian(&u, lambda)?;
                let r = max_abs(&f);
                if !r.is_finite() {
                    return Err(Error::NonConvergence { iterations: total, last: r, history });
                }
                history.push(r);
                if r <= settings.newton_tol {
                    break;
                }
                if iter >= settings.max_iterations {
                    return Err(Error::NonConvergence { iterations: total, last: r, history });
                }
                let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
                let delta = BandedLu::factor(&jac)?.solve(&rhs)?;
                let mut t = 1.0;
                let min_step = match settings.damping {
                    Damping::None => 1.0,
                    Damping::Backtracking { min_step } => min_step,
                };
                loop {
                    let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + t * d).collect();
                    let ok = match self.residual(&trial, lambda) {
                        Ok(fr) => max_abs(&fr) < (1.0 - 1e-4 * t) * r,
                        Err(Error::OutOfRange { .. }) => false,
                        Err(e) => return Err(e),
                    };
                    if ok || t <= min_step {
                        u = trial;
                        break;
                    }
                    t *= 0.5;
                }
                iter += 1;
                total += 1;
            }
        }
        Ok((u, history, total))
    }

    fn finish(&self, u: Vec<f64>, history: Vec<f64>, iterations: usize) -> Result<GraphSolution> {
        let f = self.residual(&u, 1.0)?;
        let mut interior: f64 = 0.0;
        let mut boundary: f64 = 0.0;
        for (i, &k) in self.grid.active_nodes().iter().enumerate() {
            match (&self.rows[i], self.grid.tag(k)) {
                (_, NodeTag::Interior) => interior = interior.max(f[i].abs()),
                (Row::Angle { .. } | Row::Flux { .. } | Row::Value { .. }, _) => boundary = boundary.max(f[i].abs()),
                _ => {}
            }
        }
        Ok(GraphSolution {
            u: ScalarField::new(self.grid.clone(), u)?,
            history,
            iterations,
            interior_residual: interior,
            boundary_residual: boundary,
            pinned_defect: None,
        })
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

/// Discrete harmonic extension of boundary-node values `g`.
fn harmonic_extension(grid: &Arc<DomainGrid>, g: impl Fn(usize, &[f64]) -> f64) -> Result<Vec<f64>> {
    let op = EllipticOperatorField::laplacian(grid.clone());
    if op.nodes.is_empty() {
        return Ok(grid.active_nodes().iter().map(|&k| g(k, &grid.coords(k))).collect());
    }
    let scheme = MonotoneScheme::build(&op)?;
    let field = scheme.solve_dirichlet_nodes(&g, &vec![0.0; op.nodes.len()])?;
    Ok(field.into_values())
}

/// Solve with `u = g` at boundary nodes, starting from the harmonic
/// extension of `g`.
pub fn solve_graph_dirichlet(
    grid: Arc<DomainGrid>,
    profile: &PrescribedH,
    g: &BoundaryData,
    settings: &SolverSettings,
) -> Result<GraphSolution> {
    settings.validate()?;
    let problem = Problem::build(grid.clone(), profile, Condition::Dirichlet(g))?;
    let u0 = harmonic_extension(&grid, |_, x| g.eval(x))?;
    let (u, history, iterations) = problem.newton(u0, settings)?;
    problem.finish(u, history, iterations)
}

/// Solve with the graph meeting plate `i` along the boundary components
/// tagged `i`: the boundary height is the plate offset.
pub fn solve_graph_fixed(
    grid: Arc<DomainGrid>,
    profile: &PrescribedH,
    slab: &Slab,
    settings: &SolverSettings,
) -> Result<GraphSolution> {
    settings.validate()?;
    let z = [slab.offset_lo, slab.offset_hi];
    let problem = Problem::build(grid.clone(), profile, Condition::Plates(z))?;
    let u0 = harmonic_extension(&grid, |k, _| grid.anchor(k).map_or(z[0], |a| z[(a.plate.clamp(1, 2) - 1) as usize]))?;
    let (u, history, iterations) = problem.newton(u0, settings)?;
    problem.finish(u, history, iterations)
}

/// Solve a contact-angle, curvature-flux or radial-flux problem.
///
/// With height-independent `H` the additive constant is free: one node is
/// pinned and the result shifted to `settings.mean_height`, which must be set.
pub fn solve_graph_flux(
    grid: Arc<DomainGrid>,
    profile: &PrescribedH,
    bc: &BoundaryConditionSpec,
    settings: &SolverSettings,
) -> Result<GraphSolution> {
    settings.validate()?;
    bc.validate()?;
    match bc {
        BoundaryConditionSpec::ContactAngle { .. }
        | BoundaryConditionSpec::CurvatureFlux { .. }
        | BoundaryConditionSpec::RadialFlux { .. } => {}
        _ => return Err(Error::invalid("solve_graph_flux takes contact-angle or flux conditions")),
    }
    let mut problem = Problem::build(grid.clone(), profile, Condition::Flux(bc))?;
    let mut pinned = None;
    if profile.height_independent() {
        let mean = settings.mean_height.ok_or_else(|| {
            Error::IncompatibleFlux("height-independent H with pure flux data needs a mean height".into())
        })?;
        let dim = grid.dim();
        let mut c = vec![0.0; dim];
        for x in &problem.coords {
            for d in 0..dim {
                c[d] += x[d] / problem.coords.len() as f64;
            }
        }
        let slot = grid
            .active_nodes()
            .iter()
            .enumerate()
            .filter(|(_, &k)| grid.tag(k) == NodeTag::Interior)
            .min_by(|a, b| {
                let d = |i: usize| problem.coords[i].iter().zip(&c).map(|(p, q)| (p - q) * (p - q)).sum::<f64>();
                d(a.0).total_cmp(&d(b.0))
            })
            .map(|(i, _)| i)
            .ok_or_else(|| Error::invalid("domain has no interior node to pin"))?;
        let original = std::mem::replace(&mut problem.rows[slot], Row::Fixed(settings.initial_height));
        pinned = Some((slot, original, mean));
    }
    let u0 = vec![settings.initial_height; grid.active_count()];
    let (mut u, history, iterations) = problem.newton(u0, settings)?;
    let mut defect = None;
    if let Some((slot, original, mean)) = pinned {
        problem.rows[slot] = original;
        defect = Some(problem.row(slot, &u, 1.0, false)?.0.abs());
        let shift = mean - u.iter().sum::<f64>() / u.len() as f64;
        u.iter_mut().for_each(|v| *v += shift);
    }
    let mut sol = problem.finish(u, history, iterations)?;
    sol.pinned_defect = defect;
    Ok(sol)
}

/// Dispatch on the boundary condition. Fixed boundaries need the slab for
/// the plate heights.
pub fn solve_graph(
    grid: Arc<DomainGrid>,
    profile: &PrescribedH,
    bc: &BoundaryConditionSpec,
    slab: Option<&Slab>,
    settings: &SolverSettings,
) -> Result<GraphSolution> {
    match bc {
        BoundaryConditionSpec::Dirichlet { g } => solve_graph_dirichlet(grid, profile, g, settings),
        BoundaryConditionSpec::FixedBoundary { .. } => {
            bc.validate()?;
            let slab = slab.ok_or_else(|| Error::invalid("fixed boundary needs the slab plate heights"))?;
            solve_graph_fixed(grid, profile, slab, settings)
        }
        _ => solve_graph_flux(grid, profile, bc, settings),
    }
}

/// Plate domain bounded by the given curves: the curve containing the others
/// is the outer boundary, the rest are holes.
pub fn region_from_curves(curves: &[BoundaryCurve]) -> Result<Region> {
    let outer = (0..curves.len())
        .find(|&i| {
            (0..curves.len()).all(|j| {
                j == i || {
                    let p = curves[j].vertices[0];
                    curves[i].shape().signed_distance(p) < 0.0
                }
            })
        })
        .ok_or_else(|| Error::invalid("boundary curves are not nested"))?;
    let holes = curves.iter().enumerate().filter(|(i, _)| *i != outer).map(|(_, c)| (c.shape(), c.plate)).collect();
    let region = Region::Planar { outer: curves[outer].shape(), outer_plate: curves[outer].plate, holes };
    region.validate()?;
    Ok(region)
}

/// `max |mc(u) - n H(x, u, ∇u)|` over interior nodes, from centered
/// differences.
pub fn graph_residual(u: &ScalarField, profile: &PrescribedH) -> Result<f64> {
    let grid = u.grid();
    let n = grid.dim() as f64;
    let mut r: f64 = 0.0;
    for k in grid.interior_nodes() {
        let d = node_differentials(u, k)?;
        let (h, _) = eval_H(profile, &grid.coords(k), u.at(k).expect("active"), d.grad())?;
        r = r.max((mc_from_derivatives(d.grad(), d.hess()) - n * h).abs());
    }
    Ok(r)
}
