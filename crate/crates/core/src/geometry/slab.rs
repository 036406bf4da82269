use serde::{Deserialize, Serialize};

use super::Vec3;
use crate::error::{Error, Result};

const UNIT_TOL: f64 = 1e-12;

/// The region between two parallel hyperplanes `x . axis = offset_lo` (plate 1)
/// and `x . axis = offset_hi` (plate 2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slab {
    pub axis_normal: Vec<f64>,
    pub offset_lo: f64,
    pub offset_hi: f64,
}

impl Slab {
    pub fn new(axis_normal: Vec<f64>, offset_lo: f64, offset_hi: f64) -> Result<Self> {
        let slab = Self { axis_normal, offset_lo, offset_hi };
        slab.validate()?;
        Ok(slab)
    }

    /// Slab of height `d` over the plane `x_{n+1} = 0` in three dimensions.
    pub fn horizontal(offset_lo: f64, offset_hi: f64) -> Result<Self> {
        Self::new(vec![0.0, 0.0, 1.0], offset_lo, offset_hi)
    }

    pub fn validate(&self) -> Result<()> {
        if self.axis_normal.len() < 2 {
            return Err(Error::invalid("slab ambient dimension must be at least 2"));
        }
        let norm = self.axis_normal.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::invalid(format!("slab axis has length {norm}, expected 1")));
        }
        if !(self.offset_lo < self.offset_hi) {
            return Err(Error::invalid(format!(
                "slab offsets must satisfy lo < hi, got {} and {}",
                self.offset_lo, self.offset_hi
            )));
        }
        Ok(())
    }

    pub fn ambient_dim(&self) -> usize {
        self.axis_normal.len()
    }

    pub fn thickness(&self) -> f64 {
        self.offset_hi - self.offset_lo
    }

    /// Axis as a 3-vector; meshes only live in three dimensions.
    pub fn axis3(&self) -> Result<Vec3> {
        match self.axis_normal.as_slice() {
            [x, y, z] => Ok(Vec3::new(*x, *y, *z)),
            _ => Err(Error::invalid("operation requires a slab in three dimensions")),
        }
    }

    pub fn height(&self, p: &Vec3) -> f64 {
        let a = &self.axis_normal;
        p.x * a[0] + p.y * a[1] + if a.len() > 2 { p.z * a[2] } else { 0.0 }
    }

    /// Offset of plate `id` (1 or 2).
    pub fn plate_offset(&self, id: u8) -> f64 {
        if id == 1 {
            self.offset_lo
        } else {
            self.offset_hi
        }
    }

    pub fn contains(&self, p: &Vec3, tol: f64) -> bool {
        let h = self.height(p);
        h >= self.offset_lo - tol && h <= self.offset_hi + tol
    }

    /// Orthonormal basis `(e1, e2)` of directions parallel to the plates.
    pub fn plate_basis(&self) -> Result<(Vec3, Vec3)> {
        let axis = self.axis3()?;
        let seed = if axis.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let e1 = (seed - axis * seed.dot(&axis)).normalize();
        let e2 = axis.cross(&e1);
        Ok((e1, e2))
    }
}

/// A hyperplane in three-dimensional space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub point: Vec3,
    pub normal: Vec3,
}

impl Plane {
    pub fn new(point: Vec3, normal: Vec3) -> Result<Self> {
        if ((normal.norm()) - 1.0).abs() > UNIT_TOL {
            return Err(Error::invalid(format!("plane normal has length {}", normal.norm())));
        }
        Ok(Self { point, normal })
    }

    /// Plane `{x : x . normal = offset}`, normalizing the normal.
    pub fn from_offset(normal: Vec3, offset: f64) -> Self {
        let n = normal.normalize();
        Self { point: n * offset, normal: n }
    }

    pub fn offset(&self) -> f64 {
        self.point.dot(&self.normal)
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        (p - self.point).dot(&self.normal)
    }
}

/// Mirror image of `p` across `plane`.
pub fn reflect(p: &Vec3, plane: &Plane) -> Vec3 {
    p - plane.normal * (2.0 * (p - plane.point).dot(&plane.normal))
}

/// Reflection in arbitrary dimension: `p - 2 ((p - point) . normal) normal`.
pub fn reflect_slice(p: &[f64], point: &[f64], normal: &[f64]) -> Vec<f64> {
    let s: f64 = p.iter().zip(point).zip(normal).map(|((a, b), n)| (a - b) * n).sum();
    p.iter().zip(normal).map(|(a, n)| a - 2.0 * s * n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reflect_fixes_points_on_plane() {
        let plane = Plane::new(Vec3::new(0.3, -1.0, 2.0), Vec3::new(0.0, 0.6, 0.8)).unwrap();
        let p = Vec3::new(5.0, -1.0 + 0.8, 2.0 - 0.6);
        assert!((reflect(&p, &plane) - p).norm() < 1e-15);
    }

    #[test]
    fn reflect_across_coordinate_plane() {
        let plane = Plane::new(Vec3::zeros(), Vec3::x()).unwrap();
        assert_eq!(reflect(&Vec3::new(1.0, 0.0, 0.0), &plane), Vec3::new(-1.0, 0.0, 0.0));
    }

    #[test]
    fn slab_rejects_bad_offsets_and_axes() {
        assert!(Slab::new(vec![0.0, 0.0, 1.0], 1.0, 1.0).is_err());
        assert!(Slab::new(vec![0.0, 0.0, 2.0], 0.0, 1.0).is_err());
        assert!(Slab::new(vec![1.0], 0.0, 1.0).is_err());
        assert!(Slab::new(vec![0.0, 1.0], 0.0, 1.0).is_ok());
    }

    fn unit(v: [f64; 3]) -> Option<Vec3> {
        let v = Vec3::from(v);
        (v.norm() > 1e-3).then(|| v.normalize())
    }

    proptest! {
        #[test]
        fn reflection_is_an_involution(p in prop::array::uniform3(-10.0..10.0f64),
                                       q in prop::array::uniform3(-10.0..10.0f64),
                                       n in prop::array::uniform3(-1.0..1.0f64)) {
            if let Some(n) = unit(n) {
                let plane = Plane { point: Vec3::from(q), normal: n };
                let p = Vec3::from(p);
                prop_assert!((reflect(&reflect(&p, &plane), &plane) - p).norm() < 1e-13);
            }
        }

        #[test]
        fn reflection_is_an_isometry(a in prop::array::uniform3(-5.0..5.0f64),
                                     b in prop::array::uniform3(-5.0..5.0f64),
                                     n in prop::array::uniform3(-1.0..1.0f64)) {
            if let Some(n) = unit(n) {
                let plane = Plane { point: Vec3::new(0.1, 0.2, 0.3), normal: n };
                let (a, b) = (Vec3::from(a), Vec3::from(b));
                let d0 = (a - b).norm();
                let d1 = (reflect(&a, &plane) - reflect(&b, &plane)).norm();
                prop_assert!((d0 - d1).abs() < 1e-12);
            }
        }
    }
}
