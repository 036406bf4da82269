//! Discrete checks of the interior and boundary touching principles.
//!
//! A verdict records which hypotheses hold on a candidate `w` (with the first
//! violating node as witness) and, when all of them hold, whether `w`
//! vanishes within tolerance.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{DomainGrid, NodeTag, ScalarField};
use crate::linalg::{BandedLu, SparseRows};
use crate::linearization::EllipticOperatorField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TouchingTolerances {
    pub operator: f64,
    pub value: f64,
    pub normal_derivative: f64,
    pub conclusion: f64,
}

impl TouchingTolerances {
    /// `10h²` for hypotheses, `50h²` for the conclusion.
    pub fn for_spacing(h: f64) -> Self {
        let h2 = h * h;
        Self { operator: 10.0 * h2, value: 10.0 * h2, normal_derivative: 10.0 * h2, conclusion: 50.0 * h2 }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            operator: self.operator * s,
            value: self.value * s,
            normal_derivative: self.normal_derivative * s,
            conclusion: self.conclusion * s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    /// `L(w) >= 0` at interior nodes.
    OperatorNonnegative,
    /// `w <= 0` on the domain.
    Nonpositive,
    /// `w(x0) = 0`.
    VanishesAtPoint,
    /// `dw/dη (x0) = 0` along the inward normal.
    NormalDerivativeVanishes,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisFlag {
    pub hypothesis: Hypothesis,
    pub holds: bool,
    pub witness: Option<usize>,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Conclusion {
    Holds { max_abs: f64 },
    Violated { witness: usize, value: f64 },
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HopfDiagnostic {
    pub normal_derivative: f64,
    /// Required margin: the derivative must lie below `-delta`.
    pub delta: f64,
    pub strictly_negative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TouchingVerdict {
    pub x0: usize,
    pub boundary: bool,
    pub hypotheses: Vec<HypothesisFlag>,
    pub conclusion: Conclusion,
    pub tolerances: TouchingTolerances,
    pub hopf: Option<HopfDiagnostic>,
}

impl TouchingVerdict {
    pub fn hypotheses_hold(&self) -> bool {
        self.hypotheses.iter().all(|f| f.holds)
    }

    pub fn flag(&self, h: Hypothesis) -> Option<&HypothesisFlag> {
        self.hypotheses.iter().find(|f| f.hypothesis == h)
    }
}

/// First node (smallest index) whose value fails `ok`.
fn first_witness(nodes: &[usize], values: &[f64], ok: impl Fn(f64) -> bool + Sync) -> Option<(usize, f64)> {
    nodes
        .par_iter()
        .zip(values.par_iter())
        .find_first(|(_, &v)| !ok(v))
        .map(|(&k, &v)| (k, v))
}

fn flag(hypothesis: Hypothesis, witness: Option<(usize, f64)>) -> HypothesisFlag {
    HypothesisFlag { hypothesis, holds: witness.is_none(), witness: witness.map(|w| w.0), value: witness.map(|w| w.1) }
}

fn common_flags(op: &EllipticOperatorField, w: &ScalarField, x0: usize, tol: &TouchingTolerances) -> Result<Vec<HypothesisFlag>> {
    let lw = op.apply(w)?;
    let grid = w.grid();
    let active = grid.active_nodes();
    let vals: Vec<f64> = active.iter().map(|&k| w.at(k).expect("active")).collect();
    let w0 = w.at(x0).ok_or_else(|| Error::invalid(format!("node {x0} is not active")))?;
    Ok(vec![
        flag(Hypothesis::OperatorNonnegative, first_witness(&op.nodes, &lw, |v| v >= -tol.operator)),
        flag(Hypothesis::Nonpositive, first_witness(active, &vals, |v| v <= tol.value)),
        flag(Hypothesis::VanishesAtPoint, (w0.abs() > tol.value).then_some((x0, w0))),
    ])
}

fn conclude(w: &ScalarField, flags: &[HypothesisFlag], tol: &TouchingTolerances) -> Conclusion {
    if !flags.iter().all(|f| f.holds) {
        return Conclusion::NotApplicable;
    }
    let active = w.grid().active_nodes();
    let vals: Vec<f64> = active.iter().map(|&k| w.at(k).expect("active")).collect();
    match first_witness(active, &vals, |v| v.abs() <= tol.conclusion) {
        Some((witness, value)) => Conclusion::Violated { witness, value },
        None => Conclusion::Holds { max_abs: w.max_abs() },
    }
}

pub fn check_interior_touching(op: &EllipticOperatorField, w: &ScalarField, x0: usize) -> Result<TouchingVerdict> {
    check_interior_touching_with(op, w, x0, TouchingTolerances::for_spacing(w.grid().spacing()))
}

pub fn check_interior_touching_with(
    op: &EllipticOperatorField,
    w: &ScalarField,
    x0: usize,
    tolerances: TouchingTolerances,
) -> Result<TouchingVerdict> {
    if !w.grid().same_layout(op.grid()) {
        return Err(Error::GridMismatch);
    }
    if w.grid().tag(x0) != NodeTag::Interior {
        return Err(Error::invalid(format!("node {x0} is not an interior node")));
    }
    let hypotheses = common_flags(op, w, x0, &tolerances)?;
    let conclusion = conclude(w, &hypotheses, &tolerances);
    Ok(TouchingVerdict { x0, boundary: false, hypotheses, conclusion, tolerances, hopf: None })
}

/// One-sided second-order derivative of `w` at node `x0` along the inward
/// normal, from values interpolated at `x0 + hη` and `x0 + 2hη`.
pub fn inward_normal_derivative(w: &ScalarField, x0: usize) -> Result<f64> {
    let grid = w.grid();
    let eta = grid
        .boundary_normal(x0)
        .ok_or_else(|| Error::invalid(format!("node {x0} has no inward normal")))?
        .to_vec();
    let h = grid.spacing();
    let x = grid.coords(x0);
    let at = |s: f64| -> Result<f64> {
        let p: Vec<f64> = x.iter().zip(&eta).map(|(a, b)| a + s * b).collect();
        w.interpolate(&p)
    };
    let w0 = w.at(x0).expect("active");
    Ok((-3.0 * w0 + 4.0 * at(h)? - at(2.0 * h)?) / (2.0 * h))
}

pub fn check_boundary_touching(op: &EllipticOperatorField, w: &ScalarField, x0: usize) -> Result<TouchingVerdict> {
    check_boundary_touching_with(op, w, x0, TouchingTolerances::for_spacing(w.grid().spacing()))
}

pub fn check_boundary_touching_with(
    op: &EllipticOperatorField,
    w: &ScalarField,
    x0: usize,
    tolerances: TouchingTolerances,
) -> Result<TouchingVerdict> {
    if !w.grid().same_layout(op.grid()) {
        return Err(Error::GridMismatch);
    }
    if w.grid().tag(x0) != NodeTag::Boundary {
        return Err(Error::invalid(format!("node {x0} is not a boundary node")));
    }
    if !(op.k > 0.0) {
        return Err(Error::invalid("boundary touching needs a uniformly elliptic operator"));
    }
    let mut hypotheses = common_flags(op, w, x0, &tolerances)?;
    let dn = inward_normal_derivative(w, x0)?;
    hypotheses.push(flag(
        Hypothesis::NormalDerivativeVanishes,
        (dn.abs() > tolerances.normal_derivative).then_some((x0, dn)),
    ));
    let conclusion = conclude(w, &hypotheses, &tolerances);
    let hopf = (hypotheses[..3].iter().all(|f| f.holds) && w.max_abs() > tolerances.conclusion).then(|| {
        HopfDiagnostic {
            normal_derivative: dn,
            delta: tolerances.normal_derivative,
            strictly_negative: dn < -tolerances.normal_derivative,
        }
    });
    Ok(TouchingVerdict { x0, boundary: true, hypotheses, conclusion, tolerances, hopf })
}

/// Monotone five- or nine-point discretization of `L` on interior nodes.
///
/// Mixed derivatives use the positive-type cross stencil matching the sign of
/// `A^12`; first-order terms are upwinded when `|B^i| h / (2k) > 1` or when
/// central differencing would make a neighbor weight negative.
#[derive(Debug, Clone)]
pub struct MonotoneScheme {
    grid: Arc<DomainGrid>,
    /// Interior nodes, one row each.
    pub nodes: Vec<usize>,
    /// `(node, weight)` entries of each row, center first.
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl MonotoneScheme {
    pub fn build(op: &EllipticOperatorField) -> Result<Self> {
        let grid = op.grid().clone();
        let n = grid.dim();
        let h = grid.spacing();
        let h2 = h * h;
        let k = op.k.max(f64::MIN_POSITIVE);
        let mut rows = Vec::with_capacity(op.nodes.len());
        for (&node, c) in op.nodes.iter().zip(&op.coefficients) {
            let nb = |steps: &[isize]| {
                grid.offset(node, steps)
                    .ok_or(Error::StencilUnavailable { node, reason: "monotone stencil leaves the grid" })
            };
            let mixed = if n == 2 { c.a.get(0, 1) } else { 0.0 };
            let mut center = c.c;
            let mut row: Vec<(usize, f64)> = Vec::new();
            for i in 0..n {
                let aii = c.a.get(i, i);
                let mut plus = (aii - mixed.abs()) / h2;
                let mut minus = plus;
                center -= 2.0 * (aii - mixed.abs()) / h2;
                let b = c.b[i];
                let central_ok = plus - b.abs() / (2.0 * h) >= 0.0;
                if b.abs() * h / (2.0 * k) > 1.0 || !central_ok {
                    if b > 0.0 {
                        plus += b / h;
                    } else {
                        minus -= b / h;
                    }
                    center -= b.abs() / h;
                } else {
                    plus += b / (2.0 * h);
                    minus -= b / (2.0 * h);
                }
                let mut e = vec![0isize; n];
                e[i] = 1;
                row.push((nb(&e)?, plus));
                e[i] = -1;
                row.push((nb(&e)?, minus));
            }
            if n == 2 && mixed != 0.0 {
                let s = if mixed > 0.0 { 1 } else { -1 };
                let wgt = mixed.abs() / h2;
                row.push((nb(&[1, s])?, wgt));
                row.push((nb(&[-1, -s])?, wgt));
                center -= 2.0 * wgt;
            }
            row.insert(0, (node, center));
            rows.push(row);
        }
        Ok(Self { grid, nodes: op.nodes.clone(), rows })
    }

    pub fn grid(&self) -> &Arc<DomainGrid> {
        &self.grid
    }

    /// Row indices where an off-diagonal weight is negative or the row is
    /// not weakly diagonally dominant.
    pub fn m_matrix_defects(&self) -> Vec<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| {
                let off: f64 = r[1..].iter().map(|e| e.1).sum();
                r[1..].iter().any(|e| e.1 < 0.0) || r[0].1 + off > 1e-12 * off.abs().max(1.0)
            })
            .map(|(i, _)| i)
            .collect()
    }

    pub fn apply(&self, w: &ScalarField) -> Result<Vec<f64>> {
        if !w.grid().same_layout(&self.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(self.rows.iter().map(|r| r.iter().map(|&(j, c)| c * w.at(j).expect("active")).sum()).collect())
    }

    /// Solve `L w = f` at interior nodes with `w = g` on boundary nodes.
    pub fn solve_dirichlet(&self, g: impl Fn(&[f64]) -> f64, f: &[f64]) -> Result<ScalarField> {
        self.solve_dirichlet_nodes(|_, x| g(x), f)
    }

    /// As [`Self::solve_dirichlet`], with data given per node.
    pub fn solve_dirichlet_nodes(&self, g: impl Fn(usize, &[f64]) -> f64, f: &[f64]) -> Result<ScalarField> {
        if f.len() != self.nodes.len() {
            return Err(Error::invalid("right-hand side length does not match the interior nodes"));
        }
        let grid = &self.grid;
        let mut values: Vec<f64> = grid.active_nodes().iter().map(|&k| g(k, &grid.coords(k))).collect();
        let unknown = |node: usize| self.nodes.binary_search(&node).ok();
        let mut a: SparseRows = Vec::with_capacity(self.nodes.len());
        let mut rhs = f.to_vec();
        for (i, r) in self.rows.iter().enumerate() {
            let mut row = Vec::with_capacity(r.len());
            for &(j, c) in r {
                match unknown(j) {
                    Some(col) => row.push((col, c)),
                    None => rhs[i] -= c * values[grid.slot(j).expect("active")],
                }
            }
            a.push(row);
        }
        let x = BandedLu::factor(&a)?.solve(&rhs)?;
        for (&node, v) in self.nodes.iter().zip(x) {
            values[grid.slot(node).expect("active")] = v;
        }
        ScalarField::new(grid.clone(), values)
    }
}
