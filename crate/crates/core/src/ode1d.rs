//! The one-dimensional soliton equation `u'' = exp(-a0 u' + b0 t + c)`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ode1dParams {
    a0: f64,
    b0: f64,
    c: f64,
    t0: f64,
    u_min: f64,
}

impl Ode1dParams {
    pub fn new(a0: f64, b0: f64, c: f64, t0: f64, u_min: f64) -> Result<Self> {
        for (name, v) in [("a0", a0), ("b0", b0), ("c", c), ("t0", t0), ("u_min", u_min)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")));
            }
        }
        if !(a0 * b0 > 0.0) {
            return Err(Error::OdeSignCondition { a0, b0 });
        }
        Ok(Ode1dParams { a0, b0, c, t0, u_min })
    }

    /// Parameters of the symmetric solution, with `c = ln(b0/a0) - b0 t0`.
    pub fn symmetric(a0: f64, b0: f64, t0: f64, u_min: f64) -> Result<Self> {
        if !(a0 * b0 > 0.0) {
            return Err(Error::OdeSignCondition { a0, b0 });
        }
        Self::new(a0, b0, symmetric_constant(a0, b0, t0), t0, u_min)
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn b0(&self) -> f64 {
        self.b0
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn u_min(&self) -> f64 {
        self.u_min
    }

    pub fn with_c(self, c: f64) -> Result<Self> {
        Self::new(self.a0, self.b0, c, self.t0, self.u_min)
    }

    /// Right-hand side `exp(-a0 w + b0 t + c)`.
    pub fn rhs(&self, t: f64, w: f64) -> f64 {
        (-self.a0 * w + self.b0 * t + self.c).exp()
    }
}

fn symmetric_constant(a0: f64, b0: f64, t0: f64) -> f64 {
    (b0 / a0).ln() - b0 * t0
}

/// Samples of `u` and `u'` at increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeProfile {
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
}

impl OdeProfile {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// `max |u(t_i) - f(t_i)|`.
    pub fn max_error(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.t.iter().zip(&self.u).fold(0.0, |m, (t, u)| m.max((u - f(*t)).abs()))
    }

    /// Smallest `u''` implied by the equation along the profile.
    pub fn min_second_derivative(&self, params: &Ode1dParams) -> f64 {
        self.t.iter().zip(&self.du).map(|(t, w)| params.rhs(*t, *w)).fold(f64::INFINITY, f64::min)
    }

    /// Cubic Hermite interpolation of `u` using `u'`.
    pub fn interpolate(&self, t: f64) -> Option<f64> {
        let n = self.t.len();
        if n < 2 || !(t >= self.t[0] && t <= self.t[n - 1]) {
            return None;
        }
        let k = self.t.partition_point(|&s| s <= t).clamp(1, n - 1) - 1;
        let h = self.t[k + 1] - self.t[k];
        let s = (t - self.t[k]) / h;
        let (s2, s3) = (s * s, s * s * s);
        Some(
            (2.0 * s3 - 3.0 * s2 + 1.0) * self.u[k]
                + (s3 - 2.0 * s2 + s) * h * self.du[k]
                + (-2.0 * s3 + 3.0 * s2) * self.u[k + 1]
                + (s3 - s2) * h * self.du[k + 1],
        )
    }
}

/// `u(t) = (b0 / 2a0)(t - t0)² + u_min` on `nodes` uniform samples of `span`,
/// together with the compatible constant `c = ln(b0/a0) - b0 t0`.
pub fn exact_symmetric_solution(
    a0: f64,
    b0: f64,
    t0: f64,
    u_min: f64,
    span: (f64, f64),
    nodes: usize,
) -> Result<(OdeProfile, f64)> {
    let params = Ode1dParams::symmetric(a0, b0, t0, u_min)?;
    if nodes < 2 || !(span.1 > span.0) {
        return Err(Error::InvalidParameter(format!(
            "need at least two samples on a non-empty span, got {nodes} on [{}, {}]",
            span.0, span.1
        )));
    }
    let k = b0 / a0;
    let t: Vec<f64> = (0..nodes).map(|i| span.0 + (span.1 - span.0) * i as f64 / (nodes - 1) as f64).collect();
    let u = t.iter().map(|s| 0.5 * k * (s - t0).powi(2) + u_min).collect();
    let du = t.iter().map(|s| k * (s - t0)).collect();
    Ok((OdeProfile { t, u, du }, params.c()))
}

/// Classical fourth-order Runge-Kutta for `(u, w)' = (w, exp(-a0 w + b0 t + c))`
/// from `t0` forward to `span.1` and backward to `span.0`. The last step in
/// each direction is shortened to land on the span end.
pub fn solve_ivp(params: &Ode1dParams, u0: f64, du0: f64, span: (f64, f64), dt: f64) -> Result<OdeProfile> {
    let t0 = params.t0();
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if !(span.0 <= t0 && t0 <= span.1) {
        return Err(Error::InvalidParameter(format!("span [{}, {}] must contain t0 = {t0}", span.0, span.1)));
    }
    if !u0.is_finite() || !du0.is_finite() {
        return Err(Error::InvalidParameter("initial data must be finite".into()));
    }
    let forward = integrate(params, (u0, du0), span.1, dt)?;
    let backward = integrate(params, (u0, du0), span.0, -dt)?;
    let mut out = OdeProfile { t: Vec::new(), u: Vec::new(), du: Vec::new() };
    for (t, u, w) in backward.into_iter().skip(1).rev().chain(forward) {
        out.t.push(t);
        out.u.push(u);
        out.du.push(w);
    }
    Ok(out)
}

fn integrate(params: &Ode1dParams, start: (f64, f64), end: f64, dt: f64) -> Result<Vec<(f64, f64, f64)>> {
    let t0 = params.t0();
    let steps = ((end - t0) / dt).abs();
    // a remainder below round-off is not worth a step
    let full = (steps - 1e-9).ceil().max(0.0) as usize;
    let (mut u, mut w) = start;
    let mut out = vec![(t0, u, w)];
    let f = |t: f64, w: f64| -> Result<f64> {
        let v = params.rhs(t, w);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Overflow { t })
        }
    };
    for k in 0..full {
        let t = t0 + k as f64 * dt;
        let next = if k + 1 == full { end } else { t0 + (k + 1) as f64 * dt };
        let h = next - t;
        let k1 = f(t, w)?;
        let k2 = f(t + 0.5 * h, w + 0.5 * h * k1)?;
        let k3 = f(t + 0.5 * h, w + 0.5 * h * k2)?;
        let k4 = f(next, w + h * k3)?;
        // u' = w, so the u-stages are w, w + h k1/2, w + h k2/2, w + h k3
        u += h * (w + h * (k1 + k2 + k3) / 6.0);
        w += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
        if !u.is_finite() || !w.is_finite() {
            return Err(Error::Overflow { t: next });
        }
        out.push((next, u, w));
    }
    Ok(out)
}

/// `max_s |u(t0 + s) - u(t0 - s)|` over the sample offsets, mirrored points
/// evaluated by Hermite interpolation.
pub fn symmetry_residual(profile: &OdeProfile, t0: f64) -> Result<f64> {
    let n = profile.len();
    if n < 2 {
        return Err(Error::InvalidParameter("profile needs at least two samples".into()));
    }
    let (lo, hi) = (profile.t[0], profile.t[n - 1]);
    if ((t0 - lo) - (hi - t0)).abs() > 1e-9 * (hi - lo) {
        return Err(Error::AsymmetricSpan { lo, hi, t0 });
    }
    let mut worst: f64 = 0.0;
    for (t, u) in profile.t.iter().zip(&profile.u) {
        let mirror = (2.0 * t0 - t).clamp(lo, hi);
        let v = profile.interpolate(mirror).expect("mirror inside span");
        worst = worst.max((u - v).abs());
    }
    Ok(worst)
}
