//! Explicit time stepping of the logarithmic Monge-Ampère flow
//! `∂u/∂t = ν ln det D²u`.
//!
//! Two settings are supported. On a box the full potential is evolved and the
//! two-node margin is prescribed from closed-form boundary data. On a torus the
//! potential is split as `u = ½xᵀQx + v` with periodic `v`, evolved by
//! `∂v/∂t = ν (ln det(Q + D²v) - ln det Q)`; the subtracted constant only
//! shifts `v` and leaves every derivative of `u` unchanged.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{self, FieldRole, GridSpec, ScalarField, SymmetricMatrixField};
use crate::linalg::{dot, Point, SymMat};
use crate::soliton::{make_quadratic_soliton, FlowNormalization, QuadraticForm, SolitonParams};

pub const DEFAULT_SAFETY: f64 = 0.5;
pub const DEFAULT_EPS0: f64 = 0.1;

/// Values of `u` prescribed on the box margin as a function of `(x, t)`.
pub trait BoundaryData: Sync {
    fn value(&self, x: &Point, t: f64) -> f64;
}

impl<F> BoundaryData for F
where
    F: Fn(&Point, f64) -> f64 + Sync,
{
    fn value(&self, x: &Point, t: f64) -> f64 {
        self(x, t)
    }
}

#[derive(Clone, Copy)]
pub enum Boundary<'a> {
    Periodic,
    Dirichlet(&'a dyn BoundaryData),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    field: ScalarField,
    background: Option<QuadraticForm>,
    t: f64,
    steps: u64,
    normalization: FlowNormalization,
}

fn is_convex(m: &SymMat) -> bool {
    m.det() > 0.0 && m.trace() > 0.0
}

impl FlowState {
    /// Full potential on a box grid.
    pub fn on_box(field: ScalarField, t: f64, normalization: FlowNormalization) -> Result<Self> {
        if field.grid().is_torus() || field.role() != FieldRole::FullPotential {
            return Err(Error::InvalidParameter("box flow needs a full potential on a box grid".into()));
        }
        Self::checked(FlowState { field, background: None, t, steps: 0, normalization })
    }

    /// Periodic perturbation `v` of the quadratic `background` on a torus.
    pub fn on_torus(
        perturbation: ScalarField,
        background: QuadraticForm,
        normalization: FlowNormalization,
    ) -> Result<Self> {
        if !perturbation.grid().is_torus() || perturbation.role() != FieldRole::TorusPerturbation {
            return Err(Error::InvalidParameter("torus flow needs a perturbation field on a torus grid".into()));
        }
        if background.dim() != perturbation.grid().dim() {
            return Err(Error::DimensionMismatch { expected: perturbation.grid().dim(), got: background.dim() });
        }
        Self::checked(FlowState { field: perturbation, background: Some(background), t: 0.0, steps: 0, normalization })
    }

    fn checked(state: FlowState) -> Result<Self> {
        if !(state.t.is_finite() && state.t >= 0.0) {
            return Err(Error::InvalidParameter(format!("time must be finite and >= 0, got {}", state.t)));
        }
        let hess = state.hessian()?;
        if let Some((node, m)) = hess.iter().find(|(_, m)| !is_convex(m)) {
            return Err(Error::NotConvex { node, point: state.grid().point(node), det: m.det() });
        }
        Ok(state)
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn grid(&self) -> &GridSpec {
        self.field.grid()
    }

    pub fn background(&self) -> Option<&QuadraticForm> {
        self.background.as_ref()
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn step_count(&self) -> u64 {
        self.steps
    }

    pub fn nu(&self) -> f64 {
        self.normalization.factor(self.grid().dim())
    }

    #[inline]
    fn effective_hessian_at(&self, node: [usize; 2]) -> SymMat {
        let h = grid::hessian_at(&self.field, node);
        match &self.background {
            Some(bg) => bg.matrix().add(&h),
            None => h,
        }
    }

    /// Hessian of the evolving potential (`Q + D²v` on a torus).
    pub fn hessian(&self) -> Result<SymmetricMatrixField> {
        grid::hessian_plus(&self.field, self.background.as_ref().map(|b| b.matrix()))
    }

    /// `sup |D³u|²` of the evolving potential.
    pub fn third_derivative_sup_sq(&self) -> Result<f64> {
        // the quadratic background contributes nothing
        grid::third_derivative_sup_sq(&self.field)
    }

    /// Spatial mean of the stored values.
    pub fn mean(&self) -> f64 {
        let v = self.field.values();
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Global extremes `(λ_min, λ_max)` of the Hessian eigenvalues.
pub fn condition_s_monitor(state: &FlowState) -> Result<(f64, f64)> {
    let hess = state.hessian()?;
    Ok(hess.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, m)| {
        let (a, b) = m.eigenvalues();
        (lo.min(a), hi.max(b))
    }))
}

/// `σ h² / (2 ν n max λ_max((D²u)⁻¹))`.
pub fn stable_dt(state: &FlowState, safety: f64) -> Result<f64> {
    stable_dt_from(state, &state.hessian()?, safety)
}

fn stable_dt_from(state: &FlowState, hess: &SymmetricMatrixField, safety: f64) -> Result<f64> {
    if !(safety > 0.0 && safety.is_finite()) {
        return Err(Error::InvalidParameter(format!("safety factor must be > 0, got {safety}")));
    }
    let mut lambda_min = f64::INFINITY;
    for (node, m) in hess.iter() {
        if !is_convex(m) {
            return Err(Error::NotConvex { node, point: state.grid().point(node), det: m.det() });
        }
        lambda_min = lambda_min.min(m.min_eigenvalue());
    }
    let h = state.grid().min_spacing();
    let n = state.grid().dim() as f64;
    Ok(safety * h * h * lambda_min / (2.0 * state.nu() * n))
}

/// One explicit Euler step. The new values are computed into a fresh buffer.
pub fn step_explicit(state: &FlowState, dt: f64, boundary: Boundary<'_>) -> Result<FlowState> {
    step_with(state, &state.hessian()?, dt, boundary)
}

/// Step at the stability limit, sharing one Hessian evaluation between the
/// step-size choice and the update. Never steps past `t_max`.
fn step_stable(state: &FlowState, safety: f64, t_max: f64, boundary: Boundary<'_>) -> Result<FlowState> {
    let hess = state.hessian()?;
    let dt = stable_dt_from(state, &hess, safety)?;
    let remaining = t_max - state.t;
    if remaining <= dt {
        let mut next = step_with(state, &hess, remaining, boundary)?;
        next.t = t_max;
        Ok(next)
    } else {
        step_with(state, &hess, dt, boundary)
    }
}

fn step_with(state: &FlowState, hess: &SymmetricMatrixField, dt: f64, boundary: Boundary<'_>) -> Result<FlowState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("time step must be > 0, got {dt}")));
    }
    let g = state.grid();
    let nu = state.nu();
    let t_next = state.t + dt;
    let offset = match (&state.background, boundary) {
        (Some(bg), Boundary::Periodic) => bg.matrix().det().ln(),
        (None, Boundary::Dirichlet(_)) => 0.0,
        _ => return Err(Error::InvalidParameter("boundary kind does not match the grid topology".into())),
    };
    let old = state.field.values();

    // NaN marks a node where the Hessian stopped being positive definite
    let values: Vec<f64> = (0..g.len())
        .into_par_iter()
        .map(|i| {
            let node = g.node(i);
            match (hess.get(node), boundary) {
                (Some(h), _) if is_convex(h) => old[i] + dt * nu * (h.det().ln() - offset),
                (Some(_), _) => f64::NAN,
                (None, Boundary::Dirichlet(data)) => data.value(&g.point(node), t_next),
                (None, Boundary::Periodic) => unreachable!("torus nodes are all interior"),
            }
        })
        .collect();

    if let Some(i) = values.iter().position(|v| v.is_nan()) {
        let node = g.node(i);
        return Err(Error::ConvexityLost {
            node,
            point: g.point(node),
            t: state.t,
            det: state.effective_hessian_at(node).det(),
        });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { node: g.node(i) });
    }
    let field = ScalarField::new(g.clone(), values, state.field.role())?;
    Ok(FlowState {
        field,
        background: state.background.clone(),
        t: t_next,
        steps: state.steps + 1,
        normalization: state.normalization,
    })
}

/// The translating soliton `ũ(x,t) = u(x - at) + (⟨b,x⟩ - ½⟨b,a⟩t + c) t` built
/// from a quadratic solution `u` of the soliton equation.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslatingSoliton {
    pub form: QuadraticForm,
    pub params: SolitonParams,
}

impl TranslatingSoliton {
    pub fn value(&self, x: &Point, t: f64) -> f64 {
        let a = self.params.a();
        let b = self.params.b();
        let shifted = [x[0] - a[0] * t, x[1] - a[1] * t];
        self.form.value(&shifted) + (dot(b, x) - 0.5 * dot(b, a) * t + self.params.c()) * t
    }
}

impl BoundaryData for TranslatingSoliton {
    fn value(&self, x: &Point, t: f64) -> f64 {
        TranslatingSoliton::value(self, x, t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslatingConfig {
    pub q: SymMat,
    pub p: Vec<f64>,
    pub a: Vec<f64>,
    pub t_final: f64,
    pub nodes: usize,
    pub extent: (f64, f64),
    pub normalization: FlowNormalization,
    pub safety: f64,
}

impl TranslatingConfig {
    pub fn new(q: SymMat, a: &[f64], t_final: f64, nodes: usize) -> Self {
        TranslatingConfig {
            q,
            p: vec![0.0; q.dim()],
            a: a.to_vec(),
            t_final,
            nodes,
            extent: (-1.0, 1.0),
            normalization: FlowNormalization::Unit,
            safety: DEFAULT_SAFETY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslatingReport {
    /// Sup over nodes and step times of `|u_num - ũ|`.
    pub sup_error: f64,
    pub dt: f64,
    pub steps: u64,
    /// `(t, sup_x |u_num - ũ|)` after every step, starting at `t = 0`.
    pub errors: Vec<(f64, f64)>,
}

fn sup_deviation(state: &FlowState, exact: &TranslatingSoliton) -> f64 {
    let g = state.grid();
    state
        .field()
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| (v - exact.value(&g.point(g.node(i)), state.time())).abs())
        .fold(0.0, f64::max)
}

/// Evolves a quadratic soliton on a box with exact moving boundary data and
/// measures the deviation from the closed-form translating solution.
pub fn run_translating_verification(cfg: &TranslatingConfig) -> Result<TranslatingReport> {
    if cfg.normalization != FlowNormalization::Unit {
        return Err(Error::InvalidParameter("translating-frame verification needs the unit flow normalization".into()));
    }
    if !(cfg.t_final >= 0.0 && cfg.t_final.is_finite()) {
        return Err(Error::InvalidParameter(format!("final time must be finite and >= 0, got {}", cfg.t_final)));
    }
    let (form, params) = make_quadratic_soliton(cfg.q, &cfg.p, &cfg.a, cfg.normalization)?;
    let dim = form.dim();
    let grid = GridSpec::cube(dim, cfg.extent.0, cfg.extent.1, cfg.nodes)?;
    let exact = TranslatingSoliton { form, params };
    let initial = ScalarField::from_fn(grid, FieldRole::FullPotential, |x| exact.value(x, 0.0))?;
    let mut state = FlowState::on_box(initial, 0.0, cfg.normalization)?;
    let dt = stable_dt(&state, cfg.safety)?;

    let mut errors = vec![(0.0, sup_deviation(&state, &exact))];
    while state.time() < cfg.t_final {
        state = step_stable(&state, cfg.safety, cfg.t_final, Boundary::Dirichlet(&exact))?;
        errors.push((state.time(), sup_deviation(&state, &exact)));
    }
    let sup_error = errors.iter().map(|e| e.1).fold(0.0, f64::max);
    Ok(TranslatingReport { sup_error, dt, steps: state.step_count(), errors })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trig {
    Sin,
    Cos,
}

impl Trig {
    fn eval(self, x: f64) -> f64 {
        match self {
            Trig::Sin => x.sin(),
            Trig::Cos => x.cos(),
        }
    }
}

/// `coeff · f(k₀ θ₀) · g(k₁ θ₁)` with `θ = 2π (x - lo) / L` on a torus of
/// side `L`. One-dimensional grids use only the first factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigMode {
    pub coeff: f64,
    pub wavenumber: [i32; 2],
    pub kind: [Trig; 2],
}

/// `ε · Σ modes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub amplitude: f64,
    pub modes: Vec<TrigMode>,
}

impl Perturbation {
    /// `ε sin x₁ sin x₂` (or `ε sin x` in one dimension).
    pub fn sin_product(amplitude: f64) -> Self {
        Perturbation {
            amplitude,
            modes: vec![TrigMode { coeff: 1.0, wavenumber: [1, 1], kind: [Trig::Sin, Trig::Sin] }],
        }
    }

    pub fn sample(&self, grid: &GridSpec) -> Result<ScalarField> {
        let dim = grid.dim();
        let scale: Vec<f64> = grid.axes().iter().map(|ax| 2.0 * PI / (ax.hi - ax.lo)).collect();
        let lo: Vec<f64> = grid.axes().iter().map(|ax| ax.lo).collect();
        ScalarField::from_fn(grid.clone(), FieldRole::TorusPerturbation, |x| {
            let sum: f64 = self
                .modes
                .iter()
                .map(|m| {
                    (0..dim).fold(m.coeff, |acc, k| {
                        acc * m.kind[k].eval(m.wavenumber[k] as f64 * scale[k] * (x[k] - lo[k]))
                    })
                })
                .sum();
            self.amplitude * sum
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayConfig {
    pub q: SymMat,
    pub perturbation: Perturbation,
    pub t_final: f64,
    pub eps0: f64,
    /// Number of sample times, evenly spaced over `[0, t_final]`.
    pub samples: usize,
    pub nodes: usize,
    /// Torus side length.
    pub period: f64,
    pub safety: f64,
    pub normalization: FlowNormalization,
}

impl DecayConfig {
    pub fn new(q: SymMat, perturbation: Perturbation, t_final: f64, nodes: usize) -> Self {
        DecayConfig {
            q,
            perturbation,
            t_final,
            eps0: DEFAULT_EPS0,
            samples: 201,
            nodes,
            period: 2.0 * PI,
            safety: DEFAULT_SAFETY,
            normalization: FlowNormalization::Unit,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayTrace {
    pub times: Vec<f64>,
    pub sup_d3_sq: Vec<f64>,
    pub lambda_min: Vec<f64>,
    pub lambda_max: Vec<f64>,
    /// `sup |ln det(Q + D²v) - ln det Q|`, the local speed of the flow.
    pub rhs_sup: Vec<f64>,
    /// Cumulative step count at each sample time.
    pub steps_at: Vec<u64>,
    pub eps0: f64,
    pub steps: u64,
}

impl DecayTrace {
    pub fn t_times_sup(&self) -> Vec<f64> {
        self.times.iter().zip(&self.sup_d3_sq).map(|(t, s)| t * s).collect()
    }

    fn window_max(&self, lo: f64, hi: f64) -> f64 {
        let slack = 1e-12 * hi.abs().max(1.0);
        self.times
            .iter()
            .zip(self.t_times_sup())
            .filter(|(t, _)| **t >= lo - slack && **t <= hi + slack)
            .map(|(_, v)| v)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Empirical constant `C* = max_{t >= ε₀} t · sup|D³u|²(t)`.
    pub fn c_star(&self) -> f64 {
        self.window_max(self.eps0, f64::INFINITY)
    }

    /// Max of `t · sup|D³u|²` over the initial window `[ε₀, 2ε₀]`.
    pub fn initial_window_max(&self) -> f64 {
        self.window_max(self.eps0, 2.0 * self.eps0)
    }

    /// Largest increase of `sup|D³u|²` between consecutive samples with
    /// `t >= ε₀` (non-positive when the sequence is non-increasing).
    pub fn max_increase_after_eps0(&self) -> f64 {
        let slack = 1e-12 * self.eps0.max(1.0);
        let tail: Vec<f64> =
            self.times.iter().zip(&self.sup_d3_sq).filter(|(t, _)| **t >= self.eps0 - slack).map(|(_, s)| *s).collect();
        tail.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Whether `sup|D³u|²` is non-increasing for `t >= ε₀`, allowing an
    /// increase of `slack_per_step` for every step between two samples.
    pub fn non_increasing_after_eps0(&self, slack_per_step: f64) -> bool {
        let slack = 1e-12 * self.eps0.max(1.0);
        let first = self.times.iter().position(|t| *t >= self.eps0 - slack).unwrap_or(self.times.len());
        (first + 1..self.times.len()).all(|k| {
            let steps = (self.steps_at[k] - self.steps_at[k - 1]) as f64;
            self.sup_d3_sq[k] - self.sup_d3_sq[k - 1] <= slack_per_step * steps
        })
    }

    /// `(λ_min(0) - min_t λ_min(t), max_t λ_max(t) - λ_max(0))`.
    pub fn condition_s_drift(&self) -> (f64, f64) {
        let lo = self.lambda_min.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.lambda_max.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (self.lambda_min[0] - lo, hi - self.lambda_max[0])
    }
}

fn rhs_sup(state: &FlowState) -> Result<f64> {
    let offset = state.background().map(|b| b.matrix().det().ln()).unwrap_or(0.0);
    let hess = state.hessian()?;
    Ok(hess.iter().map(|(_, m)| (m.det().ln() - offset).abs()).fold(0.0, f64::max))
}

/// Runs the torus flow from `½xᵀQx + ε·(trigonometric polynomial)` and
/// records third-derivative decay and Hessian bounds at the sample times.
pub fn run_decay_experiment(cfg: &DecayConfig) -> Result<DecayTrace> {
    if !(cfg.t_final > 0.0 && cfg.t_final.is_finite()) {
        return Err(Error::InvalidParameter(format!("final time must be > 0, got {}", cfg.t_final)));
    }
    if !(cfg.eps0 > 0.0 && cfg.eps0 < cfg.t_final) {
        return Err(Error::InvalidParameter(format!("eps0 must lie in (0, T), got {}", cfg.eps0)));
    }
    if cfg.samples < 2 {
        return Err(Error::InvalidParameter("at least two sample times are required".into()));
    }
    let dim = cfg.q.dim();
    let grid = GridSpec::torus(dim, 0.0, cfg.period, cfg.nodes)?;
    let background = QuadraticForm::new(cfg.q, &vec![0.0; dim], 0.0)?;
    let v0 = cfg.perturbation.sample(&grid)?;

    // condition S at t = 0, before the convexity check of the state itself
    let h0 = grid::hessian(&v0)?;
    let lambda0 = h0.iter().map(|(_, m)| cfg.q.add(m).min_eigenvalue()).fold(f64::INFINITY, f64::min);
    if !(lambda0 > 0.0) {
        return Err(Error::ConditionSViolated { lambda_min: lambda0 });
    }
    let mut state = FlowState::on_torus(v0, background, cfg.normalization)?;

    let mut trace = DecayTrace {
        times: Vec::with_capacity(cfg.samples),
        sup_d3_sq: Vec::with_capacity(cfg.samples),
        lambda_min: Vec::with_capacity(cfg.samples),
        lambda_max: Vec::with_capacity(cfg.samples),
        rhs_sup: Vec::with_capacity(cfg.samples),
        steps_at: Vec::with_capacity(cfg.samples),
        eps0: cfg.eps0,
        steps: 0,
    };
    for k in 0..cfg.samples {
        let target = cfg.t_final * k as f64 / (cfg.samples - 1) as f64;
        while state.time() < target {
            state = step_stable(&state, cfg.safety, target, Boundary::Periodic)?;
        }
        let (lo, hi) = condition_s_monitor(&state)?;
        trace.times.push(state.time());
        trace.sup_d3_sq.push(state.third_derivative_sup_sq()?);
        trace.lambda_min.push(lo);
        trace.lambda_max.push(hi);
        trace.rhs_sup.push(rhs_sup(&state)?);
        trace.steps_at.push(state.step_count());
    }
    trace.steps = state.step_count();
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus_state(q: SymMat, v: Perturbation, nodes: usize) -> FlowState {
        let g = GridSpec::torus(q.dim(), 0.0, 2.0 * PI, nodes).unwrap();
        let bg = QuadraticForm::new(q, &vec![0.0; q.dim()], 0.0).unwrap();
        FlowState::on_torus(v.sample(&g).unwrap(), bg, FlowNormalization::Unit).unwrap()
    }

    #[test]
    fn stable_dt_formula() {
        let g = GridSpec::cube(2, -1.0, 1.0, 21).unwrap();
        let u =
            ScalarField::from_fn(g.clone(), FieldRole::FullPotential, |x| 0.5 * (x[0] * x[0] + x[1] * x[1])).unwrap();
        let s = FlowState::on_box(u, 0.0, FlowNormalization::Unit).unwrap();
        assert!((stable_dt(&s, 0.5).unwrap() - 1.25e-3).abs() < 1e-15);

        let u4 = ScalarField::from_fn(g, FieldRole::FullPotential, |x| 2.0 * (x[0] * x[0] + x[1] * x[1])).unwrap();
        let s4 = FlowState::on_box(u4, 0.0, FlowNormalization::Unit).unwrap();
        assert!((stable_dt(&s4, 0.5).unwrap() - 4.0 * 1.25e-3).abs() < 1e-14);

        assert!(matches!(stable_dt(&s, 0.0), Err(Error::InvalidParameter(_))));
        let inv = FlowState { normalization: FlowNormalization::InverseDimension, ..s };
        assert!((stable_dt(&inv, 0.5).unwrap() - 2.5e-3).abs() < 1e-15);
    }

    #[test]
    fn unperturbed_torus_is_fixed_point() {
        let mut s = torus_state(SymMat::new_2d(1.5, 0.3, 0.8), Perturbation::sin_product(0.0), 16);
        for _ in 0..50 {
            s = step_explicit(&s, 1e-3, Boundary::Periodic).unwrap();
        }
        assert!(s.field().max_abs() <= 1e-12);
        assert_eq!(s.step_count(), 50);
    }

    #[test]
    fn box_step_advances_soliton_by_log_det() {
        let q = SymMat::diag(2, 1.0, 2.0);
        let (form, params) = make_quadratic_soliton(q, &[0.0, 0.0], &[1.0, 1.0], FlowNormalization::Unit).unwrap();
        let exact = TranslatingSoliton { form, params };
        let g = GridSpec::cube(2, -1.0, 1.0, 17).unwrap();
        let u0 = ScalarField::from_fn(g.clone(), FieldRole::FullPotential, |x| exact.value(x, 0.0)).unwrap();
        let s0 = FlowState::on_box(u0, 0.0, FlowNormalization::Unit).unwrap();
        let dt = stable_dt(&s0, 0.5).unwrap();
        let s1 = step_explicit(&s0, dt, Boundary::Dirichlet(&exact)).unwrap();
        let (lo, count) = g.region(crate::grid::HESSIAN_MARGIN).unwrap();
        for i in lo[0]..lo[0] + count[0] {
            for j in lo[1]..lo[1] + count[1] {
                let inc = s1.field().at([i, j]) - s0.field().at([i, j]);
                assert!((inc - dt * 2f64.ln()).abs() < 1e-13);
                assert!((s1.field().at([i, j]) - exact.value(&g.point([i, j]), dt)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn oversized_steps_lose_convexity() {
        let q = SymMat::identity(2);
        let mut pert = Perturbation::sin_product(0.05);
        pert.modes.push(TrigMode { coeff: 0.002, wavenumber: [7, 5], kind: [Trig::Cos, Trig::Sin] });
        let mut s = torus_state(q, pert, 32);
        let dt = 8.0 * stable_dt(&s, 0.5).unwrap();
        let mut failure = None;
        for _ in 0..500 {
            match step_explicit(&s, dt, Boundary::Periodic) {
                Ok(next) => s = next,
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
        }
        assert!(matches!(failure, Some(Error::ConvexityLost { .. })), "{failure:?}");
    }

    #[test]
    fn boundary_kind_must_match_topology() {
        let s = torus_state(SymMat::identity(1), Perturbation::sin_product(0.1), 16);
        let f = |_: &Point, _: f64| 0.0;
        assert!(step_explicit(&s, 1e-3, Boundary::Dirichlet(&f)).is_err());
    }

    #[test]
    fn translating_verification_examples() {
        let mut cfg = TranslatingConfig::new(SymMat::diag(2, 1.0, 2.0), &[1.0, 1.0], 0.1, 17);
        let rep = run_translating_verification(&cfg).unwrap();
        assert!(rep.sup_error <= 1e-8, "{}", rep.sup_error);
        assert!((rep.errors.last().unwrap().0 - 0.1).abs() == 0.0);

        let stationary = TranslatingConfig::new(SymMat::identity(2), &[0.0, 0.0], 0.2, 17);
        assert!(run_translating_verification(&stationary).unwrap().sup_error <= 1e-12);

        cfg.t_final = 0.0;
        let rep = run_translating_verification(&cfg).unwrap();
        assert_eq!(rep.sup_error, 0.0);
        assert_eq!(rep.steps, 0);

        cfg.normalization = FlowNormalization::InverseDimension;
        assert!(run_translating_verification(&cfg).is_err());
    }

    #[test]
    fn condition_s_examples() {
        let g = GridSpec::cube(2, -1.0, 1.0, 11).unwrap();
        let u = ScalarField::from_fn(g, FieldRole::FullPotential, |x| 0.5 * (x[0] * x[0] + 2.0 * x[1] * x[1])).unwrap();
        let (lo, hi) = condition_s_monitor(&FlowState::on_box(u, 0.0, FlowNormalization::Unit).unwrap()).unwrap();
        assert!((lo - 1.0).abs() < 1e-10 && (hi - 2.0).abs() < 1e-10);

        // D²u = diag(1 - 0.05 sin x₁, 1); extremes at sin x₁ = ±1, both nodes on a 256-torus
        let pert = Perturbation {
            amplitude: 0.05,
            modes: vec![TrigMode { coeff: 1.0, wavenumber: [1, 0], kind: [Trig::Sin, Trig::Cos] }],
        };
        let s = torus_state(SymMat::identity(2), pert, 256);
        let (lo, hi) = condition_s_monitor(&s).unwrap();
        assert!((lo - 0.95).abs() < 1e-4 && (hi - 1.05).abs() < 1e-4, "{lo} {hi}");

        let q = SymMat::new_2d(2.0, 0.5, 1.0);
        let s = torus_state(q, Perturbation::sin_product(0.0), 8);
        let (lo, hi) = condition_s_monitor(&s).unwrap();
        let (qlo, qhi) = q.eigenvalues();
        assert!((lo - qlo).abs() < 1e-12 && (hi - qhi).abs() < 1e-12);
    }

    #[test]
    fn mean_drift_bounded_by_rhs() {
        let mut s = torus_state(SymMat::identity(2), Perturbation::sin_product(0.2), 32);
        for _ in 0..20 {
            let dt = stable_dt(&s, 0.5).unwrap();
            let bound = dt * rhs_sup(&s).unwrap();
            let next = step_explicit(&s, dt, Boundary::Periodic).unwrap();
            assert!((next.mean() - s.mean()).abs() <= bound * (1.0 + 1e-12));
            s = next;
        }
    }

    #[test]
    fn decay_rejects_violated_condition_s() {
        let cfg = DecayConfig::new(SymMat::identity(2), Perturbation::sin_product(2.0), 1.0, 32);
        assert!(matches!(run_decay_experiment(&cfg), Err(Error::ConditionSViolated { .. })));
    }

    #[test]
    fn decay_without_perturbation_is_flat() {
        let mut cfg = DecayConfig::new(SymMat::identity(2), Perturbation::sin_product(0.0), 0.5, 16);
        cfg.samples = 6;
        let tr = run_decay_experiment(&cfg).unwrap();
        assert!(tr.sup_d3_sq.iter().all(|&s| s == 0.0));
        for (k, t) in tr.times.iter().enumerate() {
            assert!((t - 0.1 * k as f64).abs() < 1e-15);
        }
    }
}
