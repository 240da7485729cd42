//! Multilinear interpolation of node data.

use super::{GridSpec, InteriorField, ScalarField};
use crate::error::{Error, Result};
use crate::linalg::{Point, SymMat};

/// Values that can be combined linearly.
pub trait Blend: Copy {
    fn scaled(&self, w: f64) -> Self;
    fn plus(&self, other: &Self) -> Self;
}

impl Blend for f64 {
    fn scaled(&self, w: f64) -> Self {
        self * w
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
}

impl Blend for Point {
    fn scaled(&self, w: f64) -> Self {
        [self[0] * w, self[1] * w]
    }
    fn plus(&self, other: &Self) -> Self {
        [self[0] + other[0], self[1] + other[1]]
    }
}

impl Blend for SymMat {
    fn scaled(&self, w: f64) -> Self {
        self.scale(w)
    }
    fn plus(&self, other: &Self) -> Self {
        self.add(other)
    }
}

/// Cell corners and their weights.
struct Cell {
    nodes: [[usize; 2]; 4],
    weights: [f64; 4],
    len: usize,
}

// slack for points that sit on the hull up to round-off, in cell units
const HULL_SLACK: f64 = 1e-9;

fn locate(grid: &GridSpec, lo: [usize; 2], count: [usize; 2], p: &Point) -> Result<Cell> {
    let mut axis = [(0usize, 0usize, 0.0f64); 2];
    for (k, slot) in axis.iter_mut().enumerate().take(grid.dim()) {
        let ax = grid.axis(k);
        let h = grid.spacing(k);
        let t = (p[k] - ax.lo) / h;
        if grid.is_torus() {
            let m = ax.nodes;
            let t = t.rem_euclid(m as f64);
            let i = (t.floor() as usize).min(m - 1);
            *slot = (i, (i + 1) % m, t - i as f64);
        } else {
            let t = t - lo[k] as f64;
            let last = (count[k] - 1) as f64;
            if !(t >= -HULL_SLACK && t <= last + HULL_SLACK) {
                return Err(Error::OutsideHull { point: *p });
            }
            let t = t.clamp(0.0, last);
            if count[k] == 1 {
                *slot = (lo[k], lo[k], 0.0);
            } else {
                let i = (t.floor() as usize).min(count[k] - 2);
                *slot = (lo[k] + i, lo[k] + i + 1, t - i as f64);
            }
        }
    }
    let (x0, x1, fx) = axis[0];
    if grid.dim() == 1 {
        return Ok(Cell { nodes: [[x0, 0], [x1, 0], [0, 0], [0, 0]], weights: [1.0 - fx, fx, 0.0, 0.0], len: 2 });
    }
    let (y0, y1, fy) = axis[1];
    Ok(Cell {
        nodes: [[x0, y0], [x1, y0], [x0, y1], [x1, y1]],
        weights: [(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy, fx * fy],
        len: 4,
    })
}

fn combine<T: Blend>(cell: &Cell, value: impl Fn([usize; 2]) -> T) -> T {
    let mut acc = value(cell.nodes[0]).scaled(cell.weights[0]);
    for k in 1..cell.len {
        acc = acc.plus(&value(cell.nodes[k]).scaled(cell.weights[k]));
    }
    acc
}

fn pad(grid: &GridSpec, point: &[f64]) -> Result<Point> {
    crate::linalg::point_from_slice(point, grid.dim())
}

/// Multilinear interpolation of a full field. Box grids reject points outside
/// the hull; tori wrap.
pub fn interpolate(field: &ScalarField, point: &[f64]) -> Result<f64> {
    let g = field.grid();
    let p = pad(g, point)?;
    let (lo, count) = (([0, 0]), g.shape());
    let cell = locate(g, lo, count, &p)?;
    Ok(combine(&cell, |n| field.at(n)))
}

impl<T: Blend> InteriorField<T> {
    /// Multilinear interpolation over the hull of the stored nodes.
    pub fn interpolate(&self, point: &Point) -> Result<T> {
        let (lo, count) = self.region();
        let cell = locate(self.grid(), lo, count, point)?;
        Ok(combine(&cell, |n| *self.get(n).expect("cell corner inside region")))
    }
}
