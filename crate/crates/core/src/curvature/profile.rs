use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Natural cubic spline through `(u_k, h_k)`; C² inside the sample range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Samples", into = "Samples")]
pub struct CubicSpline {
    u: Vec<f64>,
    h: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Samples {
    u: Vec<f64>,
    h: Vec<f64>,
}

impl TryFrom<Samples> for CubicSpline {
    type Error = Error;
    fn try_from(s: Samples) -> Result<Self> {
        CubicSpline::new(s.u, s.h)
    }
}

impl From<CubicSpline> for Samples {
    fn from(s: CubicSpline) -> Self {
        Samples { u: s.u, h: s.h }
    }
}

impl CubicSpline {
    pub fn new(u: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        let n = u.len();
        if n < 3 || h.len() != n {
            return Err(Error::invalid("tabulated profile needs at least three (u, H) samples of equal length"));
        }
        if u.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("tabulated u samples must be strictly increasing"));
        }
        if h.iter().chain(&u).any(|v| !v.is_finite()) {
            return Err(Error::invalid("tabulated samples must be finite"));
        }
        // Tridiagonal system for interior second derivatives (Thomas algorithm).
        let mut m = vec![0.0; n];
        let mut c_prime = vec![0.0; n];
        let mut d_prime = vec![0.0; n];
        for i in 1..n - 1 {
            let (h0, h1) = (u[i] - u[i - 1], u[i + 1] - u[i]);
            let a = h0 / 6.0;
            let b = (h0 + h1) / 3.0;
            let c = h1 / 6.0;
            let d = (h[i + 1] - h[i]) / h1 - (h[i] - h[i - 1]) / h0;
            let denom = b - a * c_prime[i - 1];
            c_prime[i] = c / denom;
            d_prime[i] = (d - a * d_prime[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d_prime[i] - c_prime[i] * m[i + 1];
        }
        Ok(Self { u, h, m })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.u[0], *self.u.last().expect("non-empty"))
    }

    /// Value and first derivative; errors outside the sample range.
    pub fn eval(&self, x: f64) -> Result<(f64, f64)> {
        let (lo, hi) = self.range();
        if !(x >= lo && x <= hi) {
            return Err(Error::OutOfRange { value: x, lo, hi });
        }
        let i = match self.u.partition_point(|&v| v <= x) {
            0 => 0,
            k => (k - 1).min(self.u.len() - 2),
        };
        let (x0, x1) = (self.u[i], self.u[i + 1]);
        let d = x1 - x0;
        let (a, b) = ((x1 - x) / d, (x - x0) / d);
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let val = a * self.h[i] + b * self.h[i + 1] + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * d * d / 6.0;
        let der = (self.h[i + 1] - self.h[i]) / d - (3.0 * a * a - 1.0) / 6.0 * d * m0 + (3.0 * b * b - 1.0) / 6.0 * d * m1;
        Ok((val, der))
    }
}

pub type HFn = Arc<dyn Fn(&[f64], f64, &[f64]) -> f64 + Send + Sync>;
pub type HGradFn = Arc<dyn Fn(&[f64], f64, &[f64]) -> Vec<f64> + Send + Sync>;

/// Arbitrary `H(x, u, p)` supplied in code, with optional exact partials.
#[derive(Clone)]
pub struct GeneralH {
    pub h: HFn,
    pub dh_du: Option<HFn>,
    pub dh_dp: Option<HGradFn>,
    pub depends_on_gradient: bool,
}

impl fmt::Debug for GeneralH {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralH")
            .field("dh_du", &self.dh_du.is_some())
            .field("dh_dp", &self.dh_dp.is_some())
            .field("depends_on_gradient", &self.depends_on_gradient)
            .finish()
    }
}

/// Prescribed mean curvature profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrescribedH {
    Constant {
        #[serde(rename = "H0")]
        h0: f64,
    },
    /// `H0 + slope (u - u0)`.
    Affine {
        #[serde(rename = "H0")]
        h0: f64,
        slope: f64,
        #[serde(default)]
        u0: f64,
    },
    Tabulated(CubicSpline),
    #[serde(skip)]
    General(GeneralH),
}

impl PrescribedH {
    pub fn constant(h0: f64) -> Self {
        PrescribedH::Constant { h0 }
    }

    pub fn affine(h0: f64, slope: f64) -> Self {
        PrescribedH::Affine { h0, slope, u0: 0.0 }
    }

    pub fn tabulated(u: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        Ok(PrescribedH::Tabulated(CubicSpline::new(u, h)?))
    }

    /// Height-independent `H(x)`, e.g. for manufactured solutions.
    pub fn of_position(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        PrescribedH::General(GeneralH {
            h: Arc::new(move |x, _, _| f(x)),
            dh_du: Some(Arc::new(|_, _, _| 0.0)),
            dh_dp: None,
            depends_on_gradient: false,
        })
    }

    pub fn depends_on_gradient(&self) -> bool {
        matches!(self, PrescribedH::General(g) if g.depends_on_gradient)
    }

    /// True when `dH/du` vanishes identically.
    pub fn height_independent(&self) -> bool {
        match self {
            PrescribedH::Constant { .. } => true,
            PrescribedH::Affine { slope, .. } => *slope == 0.0,
            _ => false,
        }
    }

    /// `H(x, u, p)`.
    pub fn value(&self, x: &[f64], u: f64, p: &[f64]) -> Result<f64> {
        match self {
            PrescribedH::Constant { h0 } => Ok(*h0),
            PrescribedH::Affine { h0, slope, u0 } => Ok(h0 + slope * (u - u0)),
            PrescribedH::Tabulated(s) => s.eval(u).map(|v| v.0),
            PrescribedH::General(g) => Ok((g.h)(x, u, p)),
        }
    }

    /// `dH/dp`; zero unless the profile depends on the gradient.
    pub fn d_grad(&self, x: &[f64], u: f64, p: &[f64]) -> Result<Vec<f64>> {
        match self {
            PrescribedH::General(g) if g.depends_on_gradient => match &g.dh_dp {
                Some(f) => Ok(f(x, u, p)),
                None => Err(Error::UnsupportedProfile("gradient-dependent H without dH/dp".into())),
            },
            _ => Ok(vec![0.0; p.len()]),
        }
    }

    /// Sample `value` over `[lo, hi]` at `n` points and return `(min, max)` of
    /// the differences `H(b) - H(a)` for consecutive samples.
    pub fn sampled_increments(&self, lo: f64, hi: f64, n: usize) -> Result<(f64, f64)> {
        let mut prev = self.value(&[], lo, &[])?;
        let mut out = (f64::INFINITY, f64::NEG_INFINITY);
        for k in 1..n {
            let u = lo + (hi - lo) * k as f64 / (n - 1) as f64;
            let v = self.value(&[], u, &[])?;
            out = (out.0.min(v - prev), out.1.max(v - prev));
            prev = v;
        }
        Ok(out)
    }
}

/// `(H, dH/du)` at `(x, u, grad)`. The gradient is ignored unless the profile
/// depends on it.
#[allow(non_snake_case)]
pub fn eval_H(profile: &PrescribedH, x: &[f64], u: f64, grad: &[f64]) -> Result<(f64, f64)> {
    match profile {
        PrescribedH::Constant { h0 } => Ok((*h0, 0.0)),
        PrescribedH::Affine { h0, slope, u0 } => Ok((h0 + slope * (u - u0), *slope)),
        PrescribedH::Tabulated(s) => s.eval(u),
        PrescribedH::General(g) => {
            let d = g
                .dh_du
                .as_ref()
                .ok_or_else(|| Error::UnsupportedProfile("general H without dH/du".into()))?;
            Ok(((g.h)(x, u, grad), d(x, u, grad)))
        }
    }
}
