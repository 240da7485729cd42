//! Discrete Legendre-Fenchel transform of smooth, strictly convex fields.
//!
//! Each dual node is resolved in two stages. A brute-force pass finds the
//! primal node maximizing `<x, x~> - u(x)`; Newton's method on the
//! multilinearly interpolated gradient then solves `Du(x) = x~`, and the
//! conjugate is `<x, x~> - u(x)` at the refined point, with `u(x)` taken from
//! a local degree-5 interpolant of the node values.

use crate::error::{Error, Result};
use crate::grid::{
    self, Axis, FieldRole, GridSpec, ScalarField, SymmetricMatrixField, Topology, VectorField, HESSIAN_MARGIN,
};
use crate::linalg::{dot, norm, Point};
use crate::soliton::SolitonParams;

pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 30;
/// Total fraction removed from each side length of the gradient image by
/// [`dual_grid_for`].
pub const DUAL_SHRINK: f64 = 0.1;
/// Nodes per axis used to evaluate `u` between nodes (degree-5 interpolation).
pub const VALUE_STENCIL: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeStatus {
    Matched,
    /// Coarse maximizer within two nodes of the primal boundary.
    OutsideRange,
    /// Newton did not reach [`NEWTON_TOL`] within [`NEWTON_MAX_ITER`] steps.
    NotConverged,
}

/// A primal field, its conjugate on a dual grid, and the matched points
/// `x` with `Du(x) = x~` for every matched dual node `x~`.
#[derive(Debug, Clone)]
pub struct ConjugatePair {
    primal: ScalarField,
    dual: ScalarField,
    correspondence: Vec<Option<Point>>,
    status: Vec<NodeStatus>,
    primal_hessian: SymmetricMatrixField,
}

impl ConjugatePair {
    pub fn primal(&self) -> &ScalarField {
        &self.primal
    }

    /// Conjugate values; flagged nodes hold the coarse maximum.
    pub fn dual(&self) -> &ScalarField {
        &self.dual
    }

    /// Matched primal point of a dual node.
    pub fn matched_point(&self, dual_node: [usize; 2]) -> Option<Point> {
        self.correspondence[self.dual.grid().index(dual_node)]
    }

    pub fn status(&self, dual_node: [usize; 2]) -> NodeStatus {
        self.status[self.dual.grid().index(dual_node)]
    }

    pub fn flagged_count(&self) -> usize {
        self.status.iter().filter(|s| **s != NodeStatus::Matched).count()
    }

    /// Dual nodes whose whole `(2r+1)`-wide stencil is matched, restricted to
    /// the margin-`r` region.
    fn stencil_nodes(&self, r: usize) -> Vec<[usize; 2]> {
        let g = self.dual.grid();
        let Ok((lo, count)) = g.region(r) else {
            return Vec::new();
        };
        let ri = r as isize;
        let dy = if g.dim() == 2 { ri } else { 0 };
        let mut out = Vec::new();
        for i in lo[0]..lo[0] + count[0] {
            for j in lo[1]..lo[1] + count[1] {
                let complete = (-ri..=ri)
                    .all(|d0| (-dy..=dy).all(|d1| self.status[g.offset_index([i, j], d0, d1)] == NodeStatus::Matched));
                if complete {
                    out.push([i, j]);
                }
            }
        }
        out
    }
}

/// Box spanned by the discrete gradient over the Hessian-evaluable region,
/// shrunk by [`DUAL_SHRINK`] of its side length, with `nodes` per axis.
pub fn dual_grid_for(field: &ScalarField, nodes: usize) -> Result<GridSpec> {
    let g = field.grid();
    if g.is_torus() {
        return Err(Error::InvalidGrid("conjugation needs a box grid".into()));
    }
    let grad = grid::gradient(field)?;
    let dim = g.dim();
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    let (rlo, rcount) = g.region(HESSIAN_MARGIN)?;
    for (node, v) in grad.iter() {
        if (0..dim).any(|k| node[k] < rlo[k] || node[k] >= rlo[k] + rcount[k]) {
            continue;
        }
        for k in 0..dim {
            lo[k] = lo[k].min(v[k]);
            hi[k] = hi[k].max(v[k]);
        }
    }
    let axes: Vec<Axis> = (0..dim)
        .map(|k| {
            let pad = 0.5 * DUAL_SHRINK * (hi[k] - lo[k]);
            Axis::new(lo[k] + pad, hi[k] - pad, nodes)
        })
        .collect();
    GridSpec::new(&axes, Topology::Box)
}

struct Primal<'a> {
    field: &'a ScalarField,
    points: Vec<Point>,
    grad: VectorField,
    hess: SymmetricMatrixField,
    hull: ([usize; 2], [usize; 2]),
}

impl Primal<'_> {
    fn in_hull(&self, node: [usize; 2]) -> bool {
        let (lo, count) = self.hull;
        (0..self.field.grid().dim()).all(|k| node[k] >= lo[k] && node[k] < lo[k] + count[k])
    }

    fn clamp(&self, x: &mut Point) {
        let g = self.field.grid();
        let (lo, count) = self.hull;
        for (k, xk) in x.iter_mut().enumerate().take(g.dim()) {
            *xk = xk.clamp(g.coord(k, lo[k]), g.coord(k, lo[k] + count[k] - 1));
        }
    }

    /// Tensor-product Lagrange interpolation of the node values through
    /// [`VALUE_STENCIL`] nodes per axis around `x`.
    fn value(&self, x: &Point) -> f64 {
        let g = self.field.grid();
        let mut first = [0usize; 2];
        let mut weights = [[0.0; VALUE_STENCIL]; 2];
        let mut len = [1usize; 2];
        for k in 0..g.dim() {
            let m = g.axis(k).nodes;
            let p = VALUE_STENCIL.min(m);
            let t = (x[k] - g.axis(k).lo) / g.spacing(k);
            let start = (t.floor() as isize - (p as isize - 1) / 2).clamp(0, (m - p) as isize) as usize;
            let s = t - start as f64;
            for (j, w) in weights[k].iter_mut().enumerate().take(p) {
                *w = (0..p).filter(|&i| i != j).map(|i| (s - i as f64) / (j as f64 - i as f64)).product();
            }
            first[k] = start;
            len[k] = p;
        }
        if g.dim() == 1 {
            weights[1][0] = 1.0;
        }
        let mut sum = 0.0;
        for i in 0..len[0] {
            for j in 0..len[1] {
                sum += weights[0][i] * weights[1][j] * self.field.at([first[0] + i, first[1] + j]);
            }
        }
        sum
    }

    fn resolve(&self, y: &Point) -> (f64, Option<Point>, NodeStatus) {
        let values = self.field.values();
        let (best, coarse) = self
            .points
            .iter()
            .zip(values)
            .map(|(x, u)| dot(x, y) - u)
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
        let start = self.field.grid().node(best);
        if !self.in_hull(start) {
            return (coarse, None, NodeStatus::OutsideRange);
        }
        let mut x = self.points[best];
        for _ in 0..=NEWTON_MAX_ITER {
            let g = self.grad.interpolate(&x).expect("iterate clamped to hull");
            let r = [g[0] - y[0], g[1] - y[1]];
            if norm(&r) <= NEWTON_TOL {
                return (dot(&x, y) - self.value(&x), Some(x), NodeStatus::Matched);
            }
            let h = self.hess.interpolate(&x).expect("iterate clamped to hull");
            let Some(inv) = h.inverse() else { break };
            let step = inv.apply(&r);
            x = [x[0] - step[0], x[1] - step[1]];
            self.clamp(&mut x);
        }
        (coarse, None, NodeStatus::NotConverged)
    }
}

/// Conjugate `u*(x~) = sup_x (<x, x~> - u(x))` of a strictly convex field on
/// the nodes of `dual_grid`.
pub fn conjugate(field: &ScalarField, dual_grid: &GridSpec) -> Result<ConjugatePair> {
    let g = field.grid();
    if g.is_torus() || dual_grid.is_torus() {
        return Err(Error::InvalidGrid("conjugation needs box grids".into()));
    }
    if g.dim() != dual_grid.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), got: dual_grid.dim() });
    }
    let hess = grid::hessian(field)?;
    if let Some((node, m)) = hess.iter().find(|(_, m)| !m.is_positive_definite()) {
        return Err(Error::NotConvex { node, point: g.point(node), det: m.det() });
    }
    let primal = Primal {
        field,
        points: (0..g.len()).map(|k| g.point(g.node(k))).collect(),
        grad: grid::gradient(field)?,
        hull: g.region(HESSIAN_MARGIN)?,
        hess,
    };
    let resolved = dual_grid.map_region(0, |node| primal.resolve(&dual_grid.point(node)))?;
    let mut values = Vec::with_capacity(resolved.len());
    let mut correspondence = Vec::with_capacity(resolved.len());
    let mut status = Vec::with_capacity(resolved.len());
    for (v, x, s) in resolved.data() {
        values.push(*v);
        correspondence.push(*x);
        status.push(*s);
    }
    let dual = ScalarField::new(dual_grid.clone(), values, FieldRole::FullPotential)?;
    Ok(ConjugatePair { primal: field.clone(), dual, correspondence, status, primal_hessian: primal.hess })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualityReport {
    /// Sup of the checked quantity over evaluated nodes without overflow.
    pub sup: f64,
    /// Number of dual nodes evaluated.
    pub nodes: usize,
    pub overflow_nodes: Vec<[usize; 2]>,
}

fn require_nodes(nodes: &[[usize; 2]]) -> Result<()> {
    if nodes.is_empty() {
        return Err(Error::InsufficientNesting("no matched dual node has a complete stencil".into()));
    }
    Ok(())
}

/// Sup over matched dual nodes of `|D²u*(x~) D²u(x) - I|` (max-entry norm),
/// with `D²u*` differenced on the dual grid and `D²u` interpolated at `x`.
pub fn hessian_duality_check(pair: &ConjugatePair) -> Result<DualityReport> {
    let nodes = pair.stencil_nodes(1);
    require_nodes(&nodes)?;
    let mut sup: f64 = 0.0;
    for &node in &nodes {
        let x = pair.matched_point(node).expect("matched");
        let dual_h = grid::hessian_at(&pair.dual, node);
        let primal_h = pair.primal_hessian.interpolate(&x)?;
        sup = sup.max(dual_h.product_identity_deviation(&primal_h));
    }
    Ok(DualityReport { sup, nodes: nodes.len(), overflow_nodes: Vec::new() })
}

/// Sup over matched dual nodes of `|Du*(x~) - x|` against the stored
/// correspondence.
pub fn gradient_inversion_check(pair: &ConjugatePair) -> Result<DualityReport> {
    let nodes = pair.stencil_nodes(1);
    require_nodes(&nodes)?;
    let sup = nodes.iter().fold(0.0_f64, |m, &node| {
        let x = pair.matched_point(node).expect("matched");
        let du = grid::gradient_at(&pair.dual, node);
        m.max(norm(&[du[0] - x[0], du[1] - x[1]]))
    });
    Ok(DualityReport { sup, nodes: nodes.len(), overflow_nodes: Vec::new() })
}

/// Sup over matched dual nodes of `|det D²u* - exp(a·x~ - b·Du* - c)|`.
pub fn dual_pde_residual(pair: &ConjugatePair, params: &SolitonParams) -> Result<DualityReport> {
    let g = pair.dual.grid();
    if g.dim() != params.dim() {
        return Err(Error::DimensionMismatch { expected: params.dim(), got: g.dim() });
    }
    let nodes = pair.stencil_nodes(1);
    require_nodes(&nodes)?;
    let mut sup: f64 = 0.0;
    let mut overflow_nodes = Vec::new();
    for &node in &nodes {
        let y = g.point(node);
        let du = grid::gradient_at(&pair.dual, node);
        let rhs = (dot(params.a(), &y) - dot(params.b(), &du) - params.c()).exp();
        if !rhs.is_finite() {
            overflow_nodes.push(node);
            continue;
        }
        sup = sup.max((grid::hessian_at(&pair.dual, node).det() - rhs).abs());
    }
    Ok(DualityReport { sup, nodes: nodes.len(), overflow_nodes })
}

fn require_all_matched(pair: &ConjugatePair, stage: &str) -> Result<()> {
    match pair.flagged_count() {
        0 => Ok(()),
        n => Err(Error::InsufficientNesting(format!("{n} nodes of the {stage} conjugate could not be matched"))),
    }
}

/// Sup of `|(u*)* - u|` over primal nodes inside the shrunk gradient image of
/// `u*`, optionally restricted to `window` (one `(lo, hi)` pair per axis).
///
/// The first conjugate lives on [`dual_grid_for`] with the primal node count;
/// the second is taken back onto a node-aligned sub-box of the primal grid.
pub fn involution_check(field: &ScalarField, window: Option<&[(f64, f64)]>) -> Result<DualityReport> {
    let g = field.grid();
    let dim = g.dim();
    if let Some(w) = window {
        if w.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: w.len() });
        }
    }
    let forward = conjugate(field, &dual_grid_for(field, g.axis(0).nodes)?)?;
    require_all_matched(&forward, "first")?;
    let image = dual_grid_for(forward.dual(), 5)?;

    let mut axes = Vec::with_capacity(dim);
    let mut first = [0usize; 2];
    for k in 0..dim {
        let (mut lo, mut hi) = (image.axis(k).lo, image.axis(k).hi);
        if let Some(w) = window {
            lo = lo.max(w[k].0);
            hi = hi.min(w[k].1);
        }
        let inside: Vec<usize> = (0..g.axis(k).nodes)
            .filter(|&i| {
                let x = g.coord(k, i);
                x >= lo && x <= hi
            })
            .collect();
        if inside.len() < grid::MIN_NODES {
            return Err(Error::InsufficientNesting(format!(
                "only {} primal nodes on axis {k} lie inside the recovered range [{lo}, {hi}]",
                inside.len()
            )));
        }
        first[k] = inside[0];
        let last = inside[inside.len() - 1];
        axes.push(Axis::new(g.coord(k, first[k]), g.coord(k, last), inside.len()));
    }
    let target = GridSpec::new(&axes, Topology::Box)?;
    let back = conjugate(forward.dual(), &target)?;
    require_all_matched(&back, "second")?;

    let sup = (0..target.len()).fold(0.0_f64, |m, k| {
        let node = target.node(k);
        let primal_node = [first[0] + node[0], if dim == 2 { first[1] + node[1] } else { 0 }];
        m.max((back.dual().at(node) - field.at(primal_node)).abs())
    });
    Ok(DualityReport { sup, nodes: target.len(), overflow_nodes: Vec::new() })
}
