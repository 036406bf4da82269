//! Rotationally symmetric surfaces between the plates by shooting.
//!
//! The meridian `(x(s), z(s))` with inclination `φ` satisfies
//! `x' = cos φ`, `z' = sin φ`, `φ' = n H(z) - (n - 1) sin φ / x`, with the
//! curvature taken with respect to the normal pointing toward the axis (a
//! sphere has `H = 1/R`). Between the plates `z` is monotone, so the system is
//! integrated in `z`. The contact radius on plate 1 is the shooting unknown.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::ode::{brent, dopri45};
use super::{check_angle, SolverSettings};
use crate::curvature::PrescribedH;
use crate::error::{Error, Result};
use crate::geometry::shapes::revolve;
use crate::geometry::{Slab, SurfaceMesh};

/// Where the meridian meets a plate. The angle is measured inside the drop,
/// between the plate and the surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactRecord {
    pub plate: u8,
    pub z: f64,
    pub radius: f64,
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCurve {
    /// Surface dimension `n`.
    pub dim: usize,
    pub s: Vec<f64>,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub phi: Vec<f64>,
    pub contacts: [ContactRecord; 2],
}

impl ProfileCurve {
    /// Radius at height `z` by cubic Hermite interpolation with slopes
    /// `dx/dz = cot φ`.
    pub fn x_at(&self, z: f64) -> Result<f64> {
        let (lo, hi) = (self.z[0], *self.z.last().expect("non-empty"));
        if !(z >= lo - 1e-12 && z <= hi + 1e-12) {
            return Err(Error::OutOfRange { value: z, lo, hi });
        }
        let i = self.z.partition_point(|&v| v <= z).clamp(1, self.z.len() - 1) - 1;
        let (z0, z1) = (self.z[i], self.z[i + 1]);
        let dz = z1 - z0;
        let t = ((z - z0) / dz).clamp(0.0, 1.0);
        let (m0, m1) = (dz / self.phi[i].tan(), dz / self.phi[i + 1].tan());
        let (t2, t3) = (t * t, t * t * t);
        Ok((2.0 * t3 - 3.0 * t2 + 1.0) * self.x[i]
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * self.x[i + 1]
            + (t3 - t2) * m1)
    }

    /// Largest gap between each chord and the chord of a circular arc with
    /// the same length and turning angle; zero for an exact arclength
    /// parametrization up to the variation of curvature within a step.
    pub fn arclength_defect(&self) -> f64 {
        (1..self.s.len())
            .map(|k| {
                let ds = self.s[k] - self.s[k - 1];
                let half = 0.5 * (self.phi[k] - self.phi[k - 1]);
                let expected = if half.abs() < 1e-8 { ds * (1.0 - half * half / 6.0) } else { ds * half.sin() / half };
                let chord = (self.x[k] - self.x[k - 1]).hypot(self.z[k] - self.z[k - 1]);
                (chord - expected).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,x,z,phi\n");
        for k in 0..self.s.len() {
            out.push_str(&format!("{:.17e},{:.17e},{:.17e},{:.17e}\n", self.s[k], self.x[k], self.z[k], self.phi[k]));
        }
        out
    }

    /// Triangulated surface of revolution about the vertical line through
    /// `center`, with rows spaced about `spacing` apart in height.
    pub fn revolve(&self, slab: &Slab, center: [f64; 2], n_theta: usize, spacing: f64) -> Result<SurfaceMesh> {
        let (lo, hi) = (self.z[0], *self.z.last().expect("non-empty"));
        let m = (((hi - lo) / spacing).ceil() as usize).max(2);
        let rows = (0..=m)
            .map(|k| {
                let z = lo + (hi - lo) * k as f64 / m as f64;
                Ok((self.x_at(z)?, z))
            })
            .collect::<Result<Vec<_>>>()?;
        revolve(slab, center, &rows, n_theta)
    }
}

struct Meridian<'a> {
    profile: &'a PrescribedH,
    n: f64,
}

impl Meridian<'_> {
    /// Derivatives of `(x, φ, s)` with respect to height.
    fn rhs(&self, z: f64, y: &[f64; 3]) -> Result<[f64; 3]> {
        let [x, phi, _] = *y;
        let sin = phi.sin();
        if !(x > 0.0) || !(phi > 0.0 && phi < PI) || sin < 1e-9 {
            return Err(Error::TopologyChange { height: z });
        }
        let h = self.profile.value(&[x], z, &[])?;
        let dphi_ds = self.n * h - (self.n - 1.0) * sin / x;
        Ok([phi.cos() / sin, dphi_ds / sin, 1.0 / sin])
    }
}

/// Shoot on the contact radius at plate 1 so that the meridian meets plate 2
/// at angle `gamma2`, starting at angle `gamma1` on plate 1.
pub fn solve_axisymmetric_profile(
    slab: &Slab,
    profile: &PrescribedH,
    gamma1: f64,
    gamma2: f64,
    settings: &SolverSettings,
) -> Result<ProfileCurve> {
    settings.validate()?;
    slab.validate()?;
    check_angle(gamma1)?;
    check_angle(gamma2)?;
    if profile.depends_on_gradient() {
        return Err(Error::UnsupportedProfile("meridian shooting needs H depending on height only".into()));
    }
    let (z0, z1) = (slab.offset_lo, slab.offset_hi);
    let d = z1 - z0;
    let mer = Meridian { profile, n: (slab.ambient_dim() - 1) as f64 };
    let max_step = settings.max_step_fraction * d;
    let tol = settings.integrator_tol;
    let phi0 = PI - gamma1;
    let run = |x0: f64, record: Option<&mut Vec<(f64, [f64; 3])>>| -> Result<[f64; 3]> {
        match record {
            Some(rec) => dopri45(|z, y| mer.rhs(z, y), z0, [x0, phi0, 0.0], z1, tol, max_step, |z, y| rec.push((z, *y))),
            None => dopri45(|z, y| mer.rhs(z, y), z0, [x0, phi0, 0.0], z1, tol, max_step, |_, _| {}),
        }
    };
    let mismatch = |x0: f64| run(x0, None).map(|y| y[1] - gamma2);

    let [lo, hi] = settings.shooting_bracket;
    const SAMPLES: usize = 64;
    let mut prev: Option<(f64, f64)> = None;
    let mut bracket = None;
    let mut last_topology = None;
    for k in 0..=SAMPLES {
        let x0 = lo + (hi - lo) * k as f64 / SAMPLES as f64;
        match mismatch(x0) {
            Ok(f) => {
                if f == 0.0 {
                    bracket = Some((x0, x0, f, f));
                    break;
                }
                if let Some((xp, fp)) = prev {
                    if fp * f < 0.0 {
                        bracket = Some((xp, x0, fp, f));
                        break;
                    }
                }
                prev = Some((x0, f));
            }
            Err(Error::TopologyChange { height }) => {
                last_topology = Some(height);
                prev = None;
            }
            Err(Error::OutOfRange { .. }) => prev = None,
            Err(e) => return Err(e),
        }
    }
    let (a, b, fa, fb) = match bracket {
        Some(br) => br,
        None => {
            return Err(match (last_topology, prev) {
                (Some(height), None) => Error::TopologyChange { height },
                _ => Error::NoSolutionInBracket { lo, hi },
            })
        }
    };
    let x0 = if a == b { a } else { brent(mismatch, a, b, fa, fb, 1e-15 * hi)? };

    let mut rec = Vec::new();
    let end = run(x0, Some(&mut rec))?;
    let contacts = [
        ContactRecord { plate: 1, z: z0, radius: x0, angle: gamma1 },
        ContactRecord { plate: 2, z: z1, radius: end[0], angle: end[1] },
    ];
    Ok(ProfileCurve {
        dim: slab.ambient_dim() - 1,
        s: rec.iter().map(|r| r.1[2]).collect(),
        x: rec.iter().map(|r| r.1[0]).collect(),
        z: rec.iter().map(|r| r.0).collect(),
        phi: rec.iter().map(|r| r.1[1]).collect(),
        contacts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::monge_patch;
    use std::f64::consts::FRAC_PI_2;

    fn slab(d: f64) -> Slab {
        Slab::horizontal(0.0, d).unwrap()
    }

    #[test]
    fn cylinder() {
        let r = 0.7;
        let p = solve_axisymmetric_profile(&slab(1.0), &PrescribedH::constant(0.5 / r), FRAC_PI_2, FRAC_PI_2, &SolverSettings::default())
            .unwrap();
        for k in 0..p.s.len() {
            assert!((p.x[k] - r).abs() < 1e-8);
            assert!((p.phi[k] - FRAC_PI_2).abs() < 1e-8);
        }
        assert!((p.contacts[1].angle - FRAC_PI_2).abs() < 1e-8);
    }

    #[test]
    fn sphere_zone_matches_closed_form() {
        let (r, d): (f64, f64) = (1.0, 1.2);
        let phi0 = (d / (2.0 * r)).acos();
        let gamma = PI - phi0;
        let p = solve_axisymmetric_profile(&slab(d), &PrescribedH::constant(1.0 / r), gamma, gamma, &SolverSettings::default())
            .unwrap();
        let rc = (r * r - d * d / 4.0).sqrt();
        assert!((p.contacts[0].radius - rc).abs() < 1e-7);
        assert!((p.contacts[1].radius - rc).abs() < 1e-7);
        assert!((p.contacts[1].angle - gamma).abs() < 1e-8);
        for k in 0..p.s.len() {
            let dz = p.z[k] - d / 2.0;
            assert!((p.x[k] - (r * r - dz * dz).sqrt()).abs() < 1e-7);
        }
        assert!(p.arclength_defect() < 1e-8);
    }

    #[test]
    fn empty_bracket_is_reported() {
        let s = SolverSettings { shooting_bracket: [0.9, 1.0], ..Default::default() };
        let r = solve_axisymmetric_profile(&slab(1.0), &PrescribedH::constant(0.5 / 0.7), FRAC_PI_2, FRAC_PI_2, &s);
        assert!(matches!(r, Err(Error::NoSolutionInBracket { .. })));
    }

    #[test]
    fn collapsing_neck_is_a_topology_change() {
        // Strong curvature toward the axis pinches every candidate meridian.
        let s = SolverSettings { shooting_bracket: [0.05, 0.2], ..Default::default() };
        let r = solve_axisymmetric_profile(&slab(2.0), &PrescribedH::constant(-3.0), 2.5, 2.5, &s);
        assert!(matches!(r, Err(Error::TopologyChange { .. })), "{r:?}");
    }

    #[test]
    fn revolved_profile_has_prescribed_curvature() {
        let profile = PrescribedH::affine(0.9, 0.4);
        let p = solve_axisymmetric_profile(&slab(0.8), &profile, 1.9, 1.6, &SolverSettings::default()).unwrap();
        let mesh = p.revolve(&slab(0.8), [0.0, 0.0], 128, 0.02).unwrap();
        let h = mesh.mesh_h();
        let mut worst: f64 = 0.0;
        for (i, v) in mesh.vertices().iter().enumerate() {
            if v.z < 0.2 || v.z > 0.6 || i % 37 != 0 {
                continue;
            }
            let patch = monge_patch(&mesh, i, 4.0 * h).unwrap();
            let expected = profile.value(&[], v.z, &[]).unwrap();
            worst = worst.max((patch.mean_curvature() - expected).abs());
        }
        assert!(worst < 10.0 * h, "worst {worst} for mesh_h {h}");
    }
}
