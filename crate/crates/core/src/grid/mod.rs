//! Structured grids on boxes and tori, sampled fields, and finite-difference
//! calculus on them.
//!
//! Nodes are addressed by a two-component multi-index `[i, j]`; one-dimensional
//! grids use `j = 0` throughout. Values are stored with the first axis
//! outermost.

mod calculus;
mod interp;

pub use calculus::{
    gradient, hessian, max_eigenvalue_field, min_eigenvalue_field, third_derivative_sup_sq, GRADIENT_MARGIN,
    HESSIAN_MARGIN, THIRD_DERIVATIVE_MARGIN,
};
pub(crate) use calculus::{gradient_at, hessian_at, hessian_plus};
pub use interp::{interpolate, Blend};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{Point, SymMat};

pub const MIN_NODES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Box,
    Torus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub nodes: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, nodes: usize) -> Self {
        Axis { lo, hi, nodes }
    }

    const UNUSED: Axis = Axis { lo: 0.0, hi: 0.0, nodes: 1 };
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    dim: usize,
    axes: [Axis; 2],
    topology: Topology,
}

impl GridSpec {
    pub fn new(axes: &[Axis], topology: Topology) -> Result<Self> {
        let dim = axes.len();
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        for (k, ax) in axes.iter().enumerate() {
            if ax.nodes < MIN_NODES {
                return Err(Error::GridTooSmall { axis: k, nodes: ax.nodes, min: MIN_NODES });
            }
            if !(ax.lo.is_finite() && ax.hi.is_finite() && ax.hi > ax.lo) {
                return Err(Error::InvalidGrid(format!(
                    "axis {k} extent [{}, {}] must be finite with hi > lo",
                    ax.lo, ax.hi
                )));
            }
        }
        if topology == Topology::Torus && dim == 2 {
            let (l0, l1) = (axes[0].hi - axes[0].lo, axes[1].hi - axes[1].lo);
            if (l0 - l1).abs() > 1e-12 * l0.abs().max(l1.abs()) {
                return Err(Error::InvalidGrid(format!("torus axes must have equal extents, got {l0} and {l1}")));
            }
        }
        let mut stored = [Axis::UNUSED; 2];
        stored[..dim].copy_from_slice(axes);
        Ok(GridSpec { dim, axes: stored, topology })
    }

    /// Square box `[lo, hi]^dim` with `nodes` nodes per axis.
    pub fn cube(dim: usize, lo: f64, hi: f64, nodes: usize) -> Result<Self> {
        Self::new(&vec![Axis::new(lo, hi, nodes); dim], Topology::Box)
    }

    /// Periodic cell `[lo, hi)^dim` with `nodes` nodes per axis.
    pub fn torus(dim: usize, lo: f64, hi: f64, nodes: usize) -> Result<Self> {
        Self::new(&vec![Axis::new(lo, hi, nodes); dim], Topology::Torus)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn is_torus(&self) -> bool {
        self.topology == Topology::Torus
    }

    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes[..self.dim]
    }

    pub fn shape(&self) -> [usize; 2] {
        [self.axes[0].nodes, self.axes[1].nodes]
    }

    pub fn len(&self) -> usize {
        self.axes[0].nodes * self.axes[1].nodes
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self, k: usize) -> f64 {
        let ax = &self.axes[k];
        match self.topology {
            Topology::Box => (ax.hi - ax.lo) / (ax.nodes - 1) as f64,
            Topology::Torus => (ax.hi - ax.lo) / ax.nodes as f64,
        }
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim).map(|k| self.spacing(k)).fold(f64::INFINITY, f64::min)
    }

    pub fn coord(&self, k: usize, i: usize) -> f64 {
        let ax = &self.axes[k];
        if k >= self.dim {
            return 0.0;
        }
        let denom = match self.topology {
            Topology::Box => (ax.nodes - 1) as f64,
            Topology::Torus => ax.nodes as f64,
        };
        ax.lo + (ax.hi - ax.lo) * (i as f64) / denom
    }

    pub fn point(&self, node: [usize; 2]) -> Point {
        [self.coord(0, node[0]), self.coord(1, node[1])]
    }

    pub fn index(&self, node: [usize; 2]) -> usize {
        node[0] * self.axes[1].nodes + node[1]
    }

    pub fn node(&self, index: usize) -> [usize; 2] {
        let m1 = self.axes[1].nodes;
        [index / m1, index % m1]
    }

    /// Node index shifted by `offset`, wrapping on tori. Box callers must keep
    /// the result inside the grid.
    #[inline]
    pub(crate) fn offset_index(&self, node: [usize; 2], d0: isize, d1: isize) -> usize {
        let shift = |i: usize, d: isize, m: usize| -> usize {
            // |d| <= 2 < m, so one wrap suffices
            let j = i as isize + d;
            match self.topology {
                Topology::Torus if j < 0 => (j + m as isize) as usize,
                Topology::Torus if j >= m as isize => (j - m as isize) as usize,
                _ => j as usize,
            }
        };
        let i0 = shift(node[0], d0, self.axes[0].nodes);
        let i1 = if self.dim == 2 { shift(node[1], d1, self.axes[1].nodes) } else { node[1] };
        i0 * self.axes[1].nodes + i1
    }

    /// Index range evaluable with a stencil needing `margin` nodes on each
    /// side: `(first, count)` per axis.
    pub fn region(&self, margin: usize) -> Result<([usize; 2], [usize; 2])> {
        let mut lo = [0usize; 2];
        let mut count = [1usize; 2];
        for k in 0..self.dim {
            let m = self.axes[k].nodes;
            match self.topology {
                Topology::Torus => {
                    count[k] = m;
                }
                Topology::Box => {
                    if m < 2 * margin + 1 {
                        return Err(Error::GridTooSmall { axis: k, nodes: m, min: 2 * margin + 1 });
                    }
                    lo[k] = margin;
                    count[k] = m - 2 * margin;
                }
            }
        }
        Ok((lo, count))
    }

    /// Evaluates `f` at every node of the margin-`margin` region. Rows are
    /// computed in parallel; output order is fixed.
    pub fn map_region<T, F>(&self, margin: usize, f: F) -> Result<InteriorField<T>>
    where
        T: Send,
        F: Fn([usize; 2]) -> T + Sync + Send,
    {
        let (lo, count) = self.region(margin)?;
        let data: Vec<T> = (lo[0]..lo[0] + count[0])
            .into_par_iter()
            .flat_map_iter(|i| (lo[1]..lo[1] + count[1]).map(move |j| [i, j]).map(&f).collect::<Vec<_>>())
            .collect();
        Ok(InteriorField { grid: self.clone(), margin, lo, count, data })
    }

    /// Row-wise variant of [`map_region`](Self::map_region): `f(i, columns, out)`
    /// appends the values of row `i` for the given column range.
    pub(crate) fn map_region_rows<T, F>(&self, margin: usize, f: F) -> Result<InteriorField<T>>
    where
        T: Send,
        F: Fn(usize, std::ops::Range<usize>, &mut Vec<T>) + Sync + Send,
    {
        let (lo, count) = self.region(margin)?;
        let rows: Vec<Vec<T>> = (lo[0]..lo[0] + count[0])
            .into_par_iter()
            .map(|i| {
                let mut out = Vec::with_capacity(count[1]);
                f(i, lo[1]..lo[1] + count[1], &mut out);
                out
            })
            .collect();
        let data = rows.into_iter().flatten().collect();
        Ok(InteriorField { grid: self.clone(), margin, lo, count, data })
    }

    /// Neighbour of index `i` along axis `k` at distance `d` (wrapping on tori).
    #[inline]
    pub(crate) fn neighbour(&self, k: usize, i: usize, d: isize) -> usize {
        let m = self.axes[k].nodes as isize;
        let j = i as isize + d;
        if self.is_torus() && j < 0 {
            (j + m) as usize
        } else if self.is_torus() && j >= m {
            (j - m) as usize
        } else {
            j as usize
        }
    }

    /// Whether the point lies in the closed box hull (always true on tori).
    pub fn contains(&self, p: &Point) -> bool {
        if self.is_torus() {
            return true;
        }
        (0..self.dim).all(|k| {
            let ax = &self.axes[k];
            let tol = 1e-12 * (ax.hi - ax.lo);
            p[k] >= ax.lo - tol && p[k] <= ax.hi + tol
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldRole {
    FullPotential,
    TorusPerturbation,
}

/// Real values at every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
    role: FieldRole,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>, role: FieldRole) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node: grid.node(i) });
        }
        Ok(ScalarField { grid, values, role })
    }

    pub fn from_fn(grid: GridSpec, role: FieldRole, f: impl Fn(&Point) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.point(grid.node(i)))).collect();
        Self::new(grid, values, role)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn role(&self) -> FieldRole {
        self.role
    }

    pub fn at(&self, node: [usize; 2]) -> f64 {
        self.values[self.grid.index(node)]
    }

    #[inline]
    pub(crate) fn shifted(&self, node: [usize; 2], d0: isize, d1: isize) -> f64 {
        self.values[self.grid.offset_index(node, d0, d1)]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Values on the sub-box of nodes lying at least `margin` nodes from a box
/// boundary (every node on a torus).
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorField<T> {
    grid: GridSpec,
    margin: usize,
    lo: [usize; 2],
    count: [usize; 2],
    data: Vec<T>,
}

pub type VectorField = InteriorField<Point>;
pub type SymmetricMatrixField = InteriorField<SymMat>;

impl<T> InteriorField<T> {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn contains_node(&self, node: [usize; 2]) -> bool {
        (0..2).all(|k| node[k] >= self.lo[k] && node[k] < self.lo[k] + self.count[k])
    }

    pub fn get(&self, node: [usize; 2]) -> Option<&T> {
        self.contains_node(node).then(|| {
            let (i, j) = (node[0] - self.lo[0], node[1] - self.lo[1]);
            &self.data[i * self.count[1] + j]
        })
    }

    fn node_of(&self, k: usize) -> [usize; 2] {
        [self.lo[0] + k / self.count[1], self.lo[1] + k % self.count[1]]
    }

    /// `(node, value)` pairs in storage order.
    pub fn iter(&self) -> impl Iterator<Item = ([usize; 2], &T)> + '_ {
        self.data.iter().enumerate().map(move |(k, v)| (self.node_of(k), v))
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> InteriorField<U> {
        InteriorField {
            grid: self.grid.clone(),
            margin: self.margin,
            lo: self.lo,
            count: self.count,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub(crate) fn region(&self) -> ([usize; 2], [usize; 2]) {
        (self.lo, self.count)
    }
}

impl InteriorField<f64> {
    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
