#![allow(dead_code)]

//! Oracles shared by the integration tests.

/// Radial solution of `(r ρ'/W)' = 2 r H(ρ)` on `[0, R]` with
/// `-ρ'(R)/W = cos γ`, by shooting on `ρ(0)` with fixed-step RK4.
pub struct RadialOracle {
    pub r: Vec<f64>,
    pub rho: Vec<f64>,
    pub slope: Vec<f64>,
}

impl RadialOracle {
    fn integrate(h0: f64, slope_h: f64, radius: f64, rho0: f64, steps: usize) -> Self {
        let hf = |rho: f64| h0 + slope_h * rho;
        let r0 = 1e-6;
        // ψ = r ρ' / W, near the axis ψ ≈ H(ρ0) r².
        let mut y = [rho0 + 0.5 * hf(rho0) * r0 * r0, hf(rho0) * r0 * r0];
        let f = |r: f64, y: [f64; 2]| {
            let q = y[1] / r;
            [q / (1.0 - q * q).max(1e-300).sqrt(), 2.0 * r * hf(y[0])]
        };
        let dr = (radius - r0) / steps as f64;
        let mut out = Self { r: vec![r0], rho: vec![y[0]], slope: vec![f(r0, y)[0]] };
        let mut r = r0;
        for _ in 0..steps {
            let k1 = f(r, y);
            let k2 = f(r + dr / 2.0, [y[0] + dr / 2.0 * k1[0], y[1] + dr / 2.0 * k1[1]]);
            let k3 = f(r + dr / 2.0, [y[0] + dr / 2.0 * k2[0], y[1] + dr / 2.0 * k2[1]]);
            let k4 = f(r + dr, [y[0] + dr * k3[0], y[1] + dr * k3[1]]);
            for i in 0..2 {
                y[i] += dr / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            r += dr;
            out.r.push(r);
            out.rho.push(y[0]);
            out.slope.push(f(r, y)[0]);
        }
        out
    }

    fn boundary_q(&self) -> f64 {
        let s = *self.slope.last().unwrap();
        s / (1.0 + s * s).sqrt()
    }

    pub fn solve(h0: f64, slope_h: f64, radius: f64, gamma: f64) -> Self {
        let target = -gamma.cos();
        let (mut a, mut b) = (-3.0, 3.0);
        // Past the vertical-tangent limit the profile breaks down; the sign
        // of the mismatch there follows the sign of `H` at the axis.
        let g = |rho0: f64| {
            let q = Self::integrate(h0, slope_h, radius, rho0, 4000).boundary_q();
            if q.is_nan() {
                (h0 + slope_h * rho0).signum()
            } else {
                q - target
            }
        };
        let (mut ga, _) = (g(a), g(b));
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            let gm = g(m);
            if gm * ga > 0.0 {
                a = m;
                ga = gm;
            } else {
                b = m;
            }
        }
        Self::integrate(h0, slope_h, radius, 0.5 * (a + b), 20000)
    }

    pub fn at(&self, r: f64) -> f64 {
        let i = self.r.partition_point(|&v| v <= r).clamp(1, self.r.len() - 1) - 1;
        let dr = self.r[i + 1] - self.r[i];
        let t = ((r - self.r[i]) / dr).clamp(0.0, 1.0);
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.rho[i]
            + (t3 - 2.0 * t2 + t) * dr * self.slope[i]
            + (-2.0 * t3 + 3.0 * t2) * self.rho[i + 1]
            + (t3 - t2) * dr * self.slope[i + 1]
    }
}
