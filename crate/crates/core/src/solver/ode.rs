//! Dormand–Prince 5(4) integration and Brent root finding.

use crate::error::{Error, Result};

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
/// Fifth-order weights minus the embedded fourth-order ones.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate `y' = f(t, y)` from `t0` to `t1 > t0` with local error per step
/// below `tol * (1 + |y|)` componentwise. Calls `on_step` at every accepted
/// point, including the initial one.
pub fn dopri45<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> Result<[f64; N]>,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    tol: f64,
    max_step: f64,
    mut on_step: impl FnMut(f64, &[f64; N]),
) -> Result<[f64; N]> {
    let mut t = t0;
    let mut y = y0;
    on_step(t, &y);
    let mut k1 = f(t, &y)?;
    let mut h = max_step.min(t1 - t0).min(0.01 * (t1 - t0)).max(1e-6 * (t1 - t0));
    let h_min = 1e-14 * (t1 - t0).abs().max(1.0);
    while t < t1 {
        h = h.min(t1 - t).min(max_step);
        let attempt = || -> Result<([f64; N], [f64; N], f64)> {
            let mut k = [[0.0; N]; 7];
            k[0] = k1;
            for s in 0..6 {
                let mut ys = y;
                for (i, v) in ys.iter_mut().enumerate() {
                    for (j, a) in A[s].iter().enumerate().take(s + 1) {
                        *v += h * a * k[j][i];
                    }
                }
                k[s + 1] = f(t + C[s] * h, &ys)?;
                if s == 5 {
                    let mut err: f64 = 0.0;
                    for i in 0..N {
                        let e: f64 = (0..7).map(|j| E[j] * k[j][i]).sum::<f64>() * h;
                        let scale = tol * (1.0 + y[i].abs().max(ys[i].abs()));
                        err = err.max(e.abs() / scale);
                    }
                    return Ok((ys, k[6], err));
                }
            }
            unreachable!()
        };
        match attempt() {
            Ok((ynew, knew, err)) if err <= 1.0 => {
                t = if t1 - t - h <= 1e-15 * t1.abs().max(1.0) { t1 } else { t + h };
                y = ynew;
                k1 = knew;
                on_step(t, &y);
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                h *= factor;
            }
            Ok((_, _, err)) => h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.5),
            Err(e) => {
                h *= 0.25;
                if h < h_min {
                    return Err(e);
                }
            }
        }
        if h < h_min {
            return Err(Error::invalid(format!("step size underflow at t = {t}")));
        }
    }
    Ok(y)
}

/// Root of `f` in `[a, b]` given `f(a) f(b) <= 0` (Brent's method).
pub fn brent(mut f: impl FnMut(f64) -> Result<f64>, a: f64, b: f64, fa: f64, fb: f64, xtol: f64) -> Result<f64> {
    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(Error::invalid("root is not bracketed"));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Ok(b)
}
