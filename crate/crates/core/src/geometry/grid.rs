//! Masked Cartesian grids in one or two dimensions.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::region::{BoundaryPoint, Region};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeTag {
    Interior,
    Boundary,
    Exterior,
}

const NO_SLOT: u32 = u32::MAX;

/// Uniform grid with an interior/boundary/exterior mask.
///
/// Interior nodes have every neighbor of the 3^n-point stencil inside the
/// domain, so centered second-order differences apply there. Boundary nodes
/// are inside but lack part of that stencil; each one records the nearest
/// point of the true boundary (its anchor) with the inward normal there.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainGrid {
    origin: Vec<f64>,
    spacing: f64,
    extents: Vec<usize>,
    tags: Vec<NodeTag>,
    slot: Vec<u32>,
    active: Vec<usize>,
    anchors: Vec<Option<BoundaryPoint>>,
    region: Option<Region>,
}

impl DomainGrid {
    /// Tag the nodes of a grid covering `region` with spacing `h`.
    ///
    /// The node lattice is centered on the region's bounding-box midpoint so
    /// that domains symmetric about that point get a symmetric mask.
    pub fn from_region(region: &Region, h: f64) -> Result<Self> {
        region.validate()?;
        if !(h > 0.0) {
            return Err(Error::invalid(format!("grid spacing must be positive, got {h}")));
        }
        let (lo, hi) = region.bbox();
        let dim = region.dim();
        let mut origin = Vec::with_capacity(dim);
        let mut extents = Vec::with_capacity(dim);
        for d in 0..dim {
            let center = 0.5 * (lo[d] + hi[d]);
            let half = 0.5 * (hi[d] - lo[d]);
            let m = (half / h - 1e-9).ceil() as usize + 1;
            origin.push(center - m as f64 * h);
            extents.push(2 * m + 1);
        }
        let count: usize = extents.iter().product();
        let tol = 1e-12 * (1.0 + hi.iter().chain(lo.iter()).fold(0.0f64, |a, b| a.max(b.abs())));
        let mut grid = Self::blank(origin, h, extents);
        let inside: Vec<bool> = (0..count).map(|k| region.signed_distance(&grid.coords(k)) <= tol).collect();
        grid.tag_from_inside(&inside);
        for k in 0..count {
            if grid.tags[k] == NodeTag::Boundary {
                grid.anchors[k] = Some(region.closest_boundary_point(&grid.coords(k)));
            }
        }
        grid.region = Some(region.clone());
        grid.finish()?;
        Ok(grid)
    }

    /// Full rectangular grid: the outer ring of nodes is the boundary and each
    /// boundary node is its own anchor.
    pub fn rectangle(origin: Vec<f64>, h: f64, extents: Vec<usize>) -> Result<Self> {
        if origin.len() != extents.len() || origin.is_empty() || origin.len() > 2 {
            return Err(Error::invalid("rectangle grids need matching 1- or 2-dimensional origin and extents"));
        }
        if extents.iter().any(|&e| e < 3) {
            return Err(Error::invalid("each axis needs at least three nodes"));
        }
        let mut grid = Self::blank(origin, h, extents);
        let inside = vec![true; grid.tags.len()];
        grid.tag_from_inside(&inside);
        for k in 0..grid.tags.len() {
            if grid.tags[k] != NodeTag::Boundary {
                continue;
            }
            let idx = grid.multi_index(k);
            let mut normal: Vec<f64> = idx
                .iter()
                .zip(&grid.extents)
                .map(|(&i, &e)| if i == 0 { 1.0 } else if i + 1 == e { -1.0 } else { 0.0 })
                .collect();
            let len = normal.iter().map(|c| c * c).sum::<f64>().sqrt();
            normal.iter_mut().for_each(|c| *c /= len);
            grid.anchors[k] = Some(BoundaryPoint {
                point: grid.coords(k),
                inward_normal: normal,
                curvature: 0.0,
                component: 0,
                plate: 1,
            });
        }
        grid.finish()?;
        Ok(grid)
    }

    fn blank(origin: Vec<f64>, h: f64, extents: Vec<usize>) -> Self {
        let count: usize = extents.iter().product();
        Self {
            origin,
            spacing: h,
            extents,
            tags: vec![NodeTag::Exterior; count],
            slot: vec![NO_SLOT; count],
            active: Vec::new(),
            anchors: vec![None; count],
            region: None,
        }
    }

    fn tag_from_inside(&mut self, inside: &[bool]) {
        for k in 0..self.tags.len() {
            if !inside[k] {
                continue;
            }
            let full = self.stencil_offsets().iter().all(|off| self.offset(k, off).map_or(false, |j| inside[j]));
            self.tags[k] = if full { NodeTag::Interior } else { NodeTag::Boundary };
        }
    }

    fn finish(&mut self) -> Result<()> {
        self.active.clear();
        for (k, tag) in self.tags.iter().enumerate() {
            if *tag != NodeTag::Exterior {
                self.slot[k] = self.active.len() as u32;
                self.active.push(k);
            } else {
                self.slot[k] = NO_SLOT;
            }
        }
        self.check_connected()
    }

    fn check_connected(&self) -> Result<()> {
        let interior: Vec<usize> = self.interior_nodes().collect();
        let Some(&start) = interior.first() else {
            return Err(Error::invalid("grid has no interior nodes; refine the spacing"));
        };
        let mut seen = vec![false; self.tags.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        let mut reached = 1;
        while let Some(k) = queue.pop_front() {
            for axis in 0..self.dim() {
                for step in [-1isize, 1] {
                    if let Some(j) = self.neighbor(k, axis, step) {
                        if !seen[j] && self.tags[j] == NodeTag::Interior {
                            seen[j] = true;
                            reached += 1;
                            queue.push_back(j);
                        }
                    }
                }
            }
        }
        if reached != interior.len() {
            return Err(Error::invalid(format!(
                "interior nodes split into several components ({reached} of {} reachable)",
                interior.len()
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn node_count(&self) -> usize {
        self.tags.len()
    }

    pub fn region(&self) -> Option<&Region> {
        self.region.as_ref()
    }

    pub fn tag(&self, node: usize) -> NodeTag {
        self.tags[node]
    }

    /// Nodes carrying values (interior and boundary), in node order.
    pub fn active_nodes(&self) -> &[usize] {
        &self.active
    }

    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    /// Position of `node` in the compact value array, if it is active.
    pub fn slot(&self, node: usize) -> Option<usize> {
        let s = self.slot[node];
        (s != NO_SLOT).then_some(s as usize)
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.active.iter().copied().filter(|&k| self.tags[k] == NodeTag::Interior)
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.active.iter().copied().filter(|&k| self.tags[k] == NodeTag::Boundary)
    }

    pub fn anchor(&self, node: usize) -> Option<&BoundaryPoint> {
        self.anchors[node].as_ref()
    }

    /// Inward unit normal at a boundary node.
    pub fn boundary_normal(&self, node: usize) -> Option<&[f64]> {
        self.anchors[node].as_ref().map(|a| a.inward_normal.as_slice())
    }

    pub fn multi_index(&self, node: usize) -> Vec<usize> {
        let mut rest = node;
        self.extents
            .iter()
            .map(|&e| {
                let i = rest % e;
                rest /= e;
                i
            })
            .collect()
    }

    pub fn node_at(&self, idx: &[usize]) -> usize {
        idx.iter().rev().zip(self.extents.iter().rev()).fold(0, |acc, (&i, &e)| acc * e + i)
    }

    pub fn coords(&self, node: usize) -> Vec<f64> {
        self.multi_index(node)
            .iter()
            .zip(&self.origin)
            .map(|(&i, &o)| o + i as f64 * self.spacing)
            .collect()
    }

    /// Node displaced by integer `steps` per axis, if inside the lattice.
    pub fn offset(&self, node: usize, steps: &[isize]) -> Option<usize> {
        let idx = self.multi_index(node);
        let mut moved = Vec::with_capacity(idx.len());
        for ((&i, &s), &e) in idx.iter().zip(steps).zip(&self.extents) {
            let j = i as isize + s;
            if j < 0 || j >= e as isize {
                return None;
            }
            moved.push(j as usize);
        }
        Some(self.node_at(&moved))
    }

    pub fn neighbor(&self, node: usize, axis: usize, step: isize) -> Option<usize> {
        let mut steps = vec![0isize; self.dim()];
        steps[axis] = step;
        self.offset(node, &steps)
    }

    /// Active neighbor, if present.
    pub fn active_neighbor(&self, node: usize, steps: &[isize]) -> Option<usize> {
        self.offset(node, steps).filter(|&j| self.tags[j] != NodeTag::Exterior)
    }

    /// Offsets of the full 3^n-point stencil (excluding the center).
    pub fn stencil_offsets(&self) -> Vec<Vec<isize>> {
        match self.dim() {
            1 => vec![vec![-1], vec![1]],
            _ => {
                let mut v = Vec::with_capacity(8);
                for dj in -1..=1 {
                    for di in -1..=1 {
                        if di != 0 || dj != 0 {
                            v.push(vec![di, dj]);
                        }
                    }
                }
                v
            }
        }
    }

    /// Nearest lattice node to `p` (clamped to the lattice).
    pub fn nearest_node(&self, p: &[f64]) -> usize {
        let idx: Vec<usize> = p
            .iter()
            .zip(&self.origin)
            .zip(&self.extents)
            .map(|((x, o), &e)| (((x - o) / self.spacing).round().max(0.0) as usize).min(e - 1))
            .collect();
        self.node_at(&idx)
    }

    /// Same lattice and mask.
    pub fn same_layout(&self, other: &DomainGrid) -> bool {
        self.origin == other.origin
            && self.spacing == other.spacing
            && self.extents == other.extents
            && self.tags == other.tags
    }
}
