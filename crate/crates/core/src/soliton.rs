//! The translating-soliton equation
//!
//! ```text
//! det D²u = exp(-a·Du + b·x + c)
//! ```
//!
//! with its exact quadratic solutions, residual evaluation on sampled fields,
//! and numerical rigidity diagnostics:
//! rotational symmetry `u(Ax) = u(x)`, growth of the smallest Hessian
//! eigenvalue, and the radial invariant `Ψ = ln u_rr + (n-1)(ln u_r - ln r)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{self, FieldRole, GridSpec, InteriorField, ScalarField};
use crate::linalg::{dot, norm, point_from_slice, Mat, Point, SymMat};

/// Factor `ν` multiplying `ln det D²u` in the flow `∂u/∂t = ν ln det D²u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FlowNormalization {
    /// `ν = 1`, the form satisfied by translating quadratic solitons.
    #[default]
    Unit,
    /// `ν = 1/n`.
    InverseDimension,
}

impl FlowNormalization {
    pub fn factor(self, dim: usize) -> f64 {
        match self {
            FlowNormalization::Unit => 1.0,
            FlowNormalization::InverseDimension => 1.0 / dim as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolitonParams {
    dim: usize,
    a: Point,
    b: Point,
    c: f64,
    normalization: FlowNormalization,
}

impl SolitonParams {
    pub fn new(a: &[f64], b: &[f64], c: f64, normalization: FlowNormalization) -> Result<Self> {
        let dim = a.len();
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidParameter(format!("dimension must be 1 or 2, got {dim}")));
        }
        let a = point_from_slice(a, dim)?;
        let b = point_from_slice(b, dim)?;
        if !(a.iter().chain(b.iter()).all(|v| v.is_finite()) && c.is_finite()) {
            return Err(Error::InvalidParameter("soliton constants must be finite".into()));
        }
        Ok(SolitonParams { dim, a, b, c, normalization })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn a(&self) -> &Point {
        &self.a
    }

    pub fn b(&self) -> &Point {
        &self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn normalization(&self) -> FlowNormalization {
        self.normalization
    }

    pub fn nu(&self) -> f64 {
        self.normalization.factor(self.dim)
    }

    pub fn a_norm(&self) -> f64 {
        norm(&self.a)
    }

    pub fn b_norm(&self) -> f64 {
        norm(&self.b)
    }

    /// `|a| != 0` and `|b| != 0`. Only reported, never enforced.
    pub fn is_nondegenerate(&self) -> bool {
        self.a_norm() != 0.0 && self.b_norm() != 0.0
    }

    /// `-a·Du + b·x + c`.
    pub fn exponent(&self, x: &Point, du: &Point) -> f64 {
        -dot(&self.a, du) + dot(&self.b, x) + self.c
    }
}

/// `u(x) = ½ xᵀQx + pᵀx + q` with `Q` symmetric positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    q: SymMat,
    p: Point,
    offset: f64,
}

impl QuadraticForm {
    pub fn new(q: SymMat, p: &[f64], offset: f64) -> Result<Self> {
        let p = point_from_slice(p, q.dim())?;
        if !q.is_positive_definite() {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: q.min_eigenvalue() });
        }
        Ok(QuadraticForm { q, p, offset })
    }

    pub fn dim(&self) -> usize {
        self.q.dim()
    }

    pub fn matrix(&self) -> &SymMat {
        &self.q
    }

    pub fn linear(&self) -> &Point {
        &self.p
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn value(&self, x: &Point) -> f64 {
        0.5 * self.q.quad(x) + dot(&self.p, x) + self.offset
    }

    pub fn gradient(&self, x: &Point) -> Point {
        let qx = self.q.apply(x);
        [qx[0] + self.p[0], qx[1] + self.p[1]]
    }

    /// Closed-form conjugate `½(y-p)ᵀQ⁻¹(y-p) - q`.
    pub fn conjugate_value(&self, y: &Point) -> f64 {
        let inv = self.q.inverse().expect("positive definite");
        let d = [y[0] - self.p[0], y[1] - self.p[1]];
        0.5 * inv.quad(&d) - self.offset
    }

    pub fn sample(&self, grid: GridSpec) -> Result<ScalarField> {
        if grid.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: grid.dim() });
        }
        ScalarField::from_fn(grid, FieldRole::FullPotential, |x| self.value(x))
    }
}

/// The quadratic `½xᵀQx + pᵀx` together with the constants `b = Qa`,
/// `c = ln det Q + aᵀp` for which it solves the soliton equation exactly.
pub fn make_quadratic_soliton(
    q: SymMat,
    p: &[f64],
    a: &[f64],
    normalization: FlowNormalization,
) -> Result<(QuadraticForm, SolitonParams)> {
    let form = QuadraticForm::new(q, p, 0.0)?;
    let a = point_from_slice(a, q.dim())?;
    let b = q.apply(&a);
    let c = q.det().ln() + dot(&a, form.linear());
    let params = SolitonParams::new(&a[..q.dim()], &b[..q.dim()], c, normalization)?;
    Ok((form, params))
}

#[derive(Debug, Clone)]
pub struct ResidualReport {
    /// `det D²u - exp(-a·Du + b·x + c)` per evaluated node; NaN where the
    /// exponential overflowed.
    pub residual: InteriorField<f64>,
    /// Max of `|residual|` over nodes without overflow.
    pub sup: f64,
    pub overflow_nodes: Vec<[usize; 2]>,
}

impl ResidualReport {
    pub fn overflowed(&self) -> bool {
        !self.overflow_nodes.is_empty()
    }
}

pub fn pde_residual(field: &ScalarField, params: &SolitonParams) -> Result<ResidualReport> {
    let g = field.grid();
    if g.dim() != params.dim() {
        return Err(Error::DimensionMismatch { expected: params.dim(), got: g.dim() });
    }
    let hess = grid::hessian(field)?;
    if let Some((node, m)) = hess.iter().find(|(_, m)| !(m.det() > 0.0 && m.trace() > 0.0)) {
        return Err(Error::NotConvex { node, point: g.point(node), det: m.det() });
    }
    let residual = g.map_region(grid::HESSIAN_MARGIN, |node| {
        let h = hess.get(node).expect("same region");
        let du = grid::gradient_at(field, node);
        let rhs = params.exponent(&g.point(node), &du).exp();
        if rhs.is_finite() {
            h.det() - rhs
        } else {
            f64::NAN
        }
    })?;
    let overflow_nodes: Vec<_> = residual.iter().filter(|(_, v)| v.is_nan()).map(|(n, _)| n).collect();
    let sup = residual.iter().filter(|(_, v)| !v.is_nan()).fold(0.0_f64, |m, (_, v)| m.max(v.abs()));
    Ok(ResidualReport { residual, sup, overflow_nodes })
}

/// An orthogonal matrix `A` together with its order
/// `l_A = min { l : A^l = I, A^(l-1) != I }`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationSymmetry {
    matrix: Mat,
    order: usize,
}

pub const MAX_SYMMETRY_ORDER: usize = 1024;
const ORTHOGONALITY_TOL: f64 = 1e-12;
const POWER_IDENTITY_TOL: f64 = 1e-10;
const POWER_DISTINCT_TOL: f64 = 1e-6;

impl RotationSymmetry {
    pub fn from_matrix(matrix: Mat) -> Result<Self> {
        let id = Mat::identity(matrix.dim());
        let deviation = matrix.transpose().mul(&matrix).max_abs_diff(&id);
        if !(deviation <= ORTHOGONALITY_TOL) {
            return Err(Error::NotOrthogonal { deviation });
        }
        let mut previous = id;
        for order in 1..=MAX_SYMMETRY_ORDER {
            let power = previous.mul(&matrix);
            if power.max_abs_diff(&id) <= POWER_IDENTITY_TOL {
                if previous.max_abs_diff(&id) > POWER_DISTINCT_TOL {
                    return Ok(RotationSymmetry { matrix, order });
                }
                break;
            }
            previous = power;
        }
        Err(Error::NoFiniteOrder { max_order: MAX_SYMMETRY_ORDER })
    }

    /// Planar rotation by `2π / order`.
    pub fn rotation_of_order(order: usize) -> Result<Self> {
        Self::from_matrix(Mat::rotation(2.0 * PI / order as f64))
    }

    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn inverse(&self) -> RotationSymmetry {
        RotationSymmetry { matrix: self.matrix.transpose(), order: self.order }
    }

    pub fn apply(&self, x: &Point) -> Point {
        self.matrix.apply(x)
    }

    /// Full orbits `{x, Ax, ..., A^(l-1)x}` of base points spread uniformly
    /// over the annulus `r_min <= |x| <= r_max` within one fundamental sector.
    pub fn orbit_samples(&self, r_min: f64, r_max: f64, radii: usize, angles: usize) -> Vec<Point> {
        let dim = self.matrix.dim();
        let mut out = Vec::new();
        for i in 0..radii.max(1) {
            let r = if radii > 1 { r_min + (r_max - r_min) * i as f64 / (radii - 1) as f64 } else { r_min };
            for j in 0..angles.max(1) {
                let theta = 2.0 * PI * j as f64 / (angles.max(1) * self.order) as f64;
                let mut x = if dim == 1 { [r, 0.0] } else { [r * theta.cos(), r * theta.sin()] };
                for _ in 0..self.order {
                    out.push(x);
                    x = self.apply(&x);
                }
                if dim == 1 {
                    break;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryReport {
    /// `max |u(Ax) - u(x)|` over the samples.
    pub max_deviation: f64,
    pub order: usize,
    /// `l_A >= 3`.
    pub order_at_least_three: bool,
    pub samples: usize,
}

pub fn check_symmetry(field: &ScalarField, sym: &RotationSymmetry, samples: &[Point]) -> Result<SymmetryReport> {
    let g = field.grid();
    if sym.matrix().dim() != g.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), got: sym.matrix().dim() });
    }
    let mut max_deviation: f64 = 0.0;
    for x in samples {
        let ax = sym.apply(x);
        let d = (grid::interpolate(field, &ax[..g.dim()])? - grid::interpolate(field, &x[..g.dim()])?).abs();
        max_deviation = max_deviation.max(d);
    }
    Ok(SymmetryReport {
        max_deviation,
        order: sym.order(),
        order_at_least_three: sym.order() >= 3,
        samples: samples.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthMargin {
    /// `inf |x| μ(x)` over grid nodes in the annulus.
    pub infimum: f64,
    /// `(n-1) / (|a| cos(π / l_A))`.
    pub threshold: f64,
    /// `infimum - threshold`; positive when the growth hypothesis holds on
    /// the sampled annulus.
    pub margin: f64,
    pub nodes: usize,
}

pub fn growth_threshold(dim: usize, a_norm: f64, order: usize) -> f64 {
    (dim as f64 - 1.0) / (a_norm * (PI / order as f64).cos())
}

pub fn eigen_growth_margin(field: &ScalarField, a: &[f64], order: usize, annulus: (f64, f64)) -> Result<GrowthMargin> {
    let g = field.grid();
    if g.dim() < 2 {
        return Err(Error::InvalidParameter("eigenvalue growth margin needs n >= 2".into()));
    }
    let a = point_from_slice(a, g.dim())?;
    let a_norm = norm(&a);
    if a_norm == 0.0 {
        return Err(Error::ZeroTranslation);
    }
    if order < 3 {
        return Err(Error::OrderTooSmall(order));
    }
    let (r_min, r_max) = annulus;
    let tol = 1e-12 * r_max.abs().max(1.0);
    let mu = grid::min_eigenvalue_field(&grid::hessian(field)?);
    let (infimum, nodes) = mu
        .iter()
        .map(|(n, m)| (norm(&g.point(n)), *m))
        .filter(|(r, _)| *r >= r_min - tol && *r <= r_max + tol)
        .fold((f64::INFINITY, 0usize), |(inf, k), (r, m)| (inf.min(r * m), k + 1));
    if nodes == 0 {
        return Err(Error::EmptyAnnulus { r_min, r_max });
    }
    let threshold = growth_threshold(g.dim(), a_norm, order);
    Ok(GrowthMargin { infimum, threshold, margin: infimum - threshold, nodes })
}

/// Uniformly spaced samples `u(r)` of a radial profile.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    r: Vec<f64>,
    u: Vec<f64>,
}

impl RadialProfile {
    pub fn new(r: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        if r.len() != u.len() {
            return Err(Error::LengthMismatch { expected: r.len(), got: u.len() });
        }
        if r.len() < 3 {
            return Err(Error::InvalidParameter("radial profile needs at least 3 samples".into()));
        }
        let h = r[1] - r[0];
        let uniform = r.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(1e-300));
        if !(h > 0.0 && uniform) {
            return Err(Error::InvalidParameter("radii must be increasing and uniformly spaced".into()));
        }
        if !u.iter().chain(r.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("radial profile must be finite".into()));
        }
        Ok(RadialProfile { r, u })
    }

    pub fn sample(r_lo: f64, r_hi: f64, nodes: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if nodes < 3 {
            return Err(Error::InvalidParameter("radial profile needs at least 3 samples".into()));
        }
        let r: Vec<f64> = (0..nodes).map(|i| r_lo + (r_hi - r_lo) * i as f64 / (nodes - 1) as f64).collect();
        let u = r.iter().map(|&x| f(x)).collect();
        Self::new(r, u)
    }

    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialPsi {
    pub r: Vec<f64>,
    pub psi: Vec<f64>,
    /// `max Ψ - min Ψ`.
    pub variation: f64,
}

/// `Ψ = ln u_rr + (n-1)(ln u_r - ln r)` at every interior sample.
pub fn radial_psi(profile: &RadialProfile, dim: usize) -> Result<RadialPsi> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let (r, u) = (&profile.r, &profile.u);
    let h = r[1] - r[0];
    let mut out_r = Vec::with_capacity(r.len() - 2);
    let mut psi = Vec::with_capacity(r.len() - 2);
    for i in 1..r.len() - 1 {
        let u_r = (u[i + 1] - u[i - 1]) / (2.0 * h);
        let u_rr = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
        if !(u_r > 0.0 && u_rr > 0.0 && r[i] > 0.0) {
            return Err(Error::NonConvexProfile { r: r[i], u_r, u_rr });
        }
        out_r.push(r[i]);
        psi.push(u_rr.ln() + (dim as f64 - 1.0) * (u_r.ln() - r[i].ln()));
    }
    let max = psi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = psi.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(RadialPsi { r: out_r, psi, variation: max - min })
}
