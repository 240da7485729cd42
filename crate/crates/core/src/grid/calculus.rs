//! Centered finite differences, second order in the spacing.

use super::{InteriorField, ScalarField, SymmetricMatrixField, VectorField};
use crate::error::Result;
use crate::linalg::{Point, SymMat};

pub const GRADIENT_MARGIN: usize = 1;
pub const HESSIAN_MARGIN: usize = 2;
pub const THIRD_DERIVATIVE_MARGIN: usize = 3;

#[inline]
pub(crate) fn gradient_at(u: &ScalarField, node: [usize; 2]) -> Point {
    let g = u.grid();
    let dx = (u.shifted(node, 1, 0) - u.shifted(node, -1, 0)) / (2.0 * g.spacing(0));
    if g.dim() == 1 {
        return [dx, 0.0];
    }
    let dy = (u.shifted(node, 0, 1) - u.shifted(node, 0, -1)) / (2.0 * g.spacing(1));
    [dx, dy]
}

#[inline]
pub(crate) fn hessian_at(u: &ScalarField, node: [usize; 2]) -> SymMat {
    let g = u.grid();
    let v = u.values();
    let hx = g.spacing(0);
    let (xm, xp) = (g.offset_index(node, -1, 0), g.offset_index(node, 1, 0));
    let c = v[g.index(node)];
    let uxx = (v[xp] - 2.0 * c + v[xm]) / (hx * hx);
    if g.dim() == 1 {
        return SymMat::new_1d(uxx);
    }
    let hy = g.spacing(1);
    let m1 = g.shape()[1];
    let (j, jm, jp) = (node[1], g.offset_index(node, 0, -1) % m1, g.offset_index(node, 0, 1) % m1);
    // rows of the neighbouring x-lines, shifted back to column 0
    let (rm, r0, rp) = (xm - j, g.index(node) - j, xp - j);
    let uyy = (v[r0 + jp] - 2.0 * c + v[r0 + jm]) / (hy * hy);
    let uxy = (v[rp + jp] - v[rp + jm] - v[rm + jp] + v[rm + jm]) / (4.0 * hx * hy);
    SymMat::new_2d(uxx, uxy, uyy)
}

/// Sum over all ordered index triples of the squared third derivatives.
pub(crate) fn third_derivative_sq_at(u: &ScalarField, node: [usize; 2]) -> f64 {
    let g = u.grid();
    let s = |d0: isize, d1: isize| u.shifted(node, d0, d1);
    let hx = g.spacing(0);
    let uxxx = (s(2, 0) - 2.0 * s(1, 0) + 2.0 * s(-1, 0) - s(-2, 0)) / (2.0 * hx.powi(3));
    if g.dim() == 1 {
        return uxxx * uxxx;
    }
    let hy = g.spacing(1);
    let uyyy = (s(0, 2) - 2.0 * s(0, 1) + 2.0 * s(0, -1) - s(0, -2)) / (2.0 * hy.powi(3));
    // second difference along one axis, centered first difference along the other
    let uxx_at = |d1: isize| (s(1, d1) - 2.0 * s(0, d1) + s(-1, d1)) / (hx * hx);
    let uyy_at = |d0: isize| (s(d0, 1) - 2.0 * s(d0, 0) + s(d0, -1)) / (hy * hy);
    let uxxy = (uxx_at(1) - uxx_at(-1)) / (2.0 * hy);
    let uxyy = (uyy_at(1) - uyy_at(-1)) / (2.0 * hx);
    uxxx * uxxx + 3.0 * uxxy * uxxy + 3.0 * uxyy * uxyy + uyyy * uyyy
}

pub fn gradient(field: &ScalarField) -> Result<VectorField> {
    field.grid().map_region(GRADIENT_MARGIN, |n| gradient_at(field, n))
}

pub fn hessian(field: &ScalarField) -> Result<SymmetricMatrixField> {
    hessian_plus(field, None)
}

/// `base + D²u`, fused into the stencil pass.
pub(crate) fn hessian_plus(field: &ScalarField, base: Option<&SymMat>) -> Result<SymmetricMatrixField> {
    let g = field.grid();
    let zero = SymMat::diag(g.dim(), 0.0, 0.0);
    let base = base.unwrap_or(&zero);
    if g.dim() == 1 {
        return g.map_region(HESSIAN_MARGIN, |n| base.add(&hessian_at(field, n)));
    }
    let (bxx, bxy, byy) = (base.get(0, 0), base.get(0, 1), base.get(1, 1));
    // row kernel with precomputed neighbour rows; same stencils as `hessian_at`
    let v = field.values();
    let m1 = g.shape()[1];
    let (hx, hy) = (g.spacing(0), g.spacing(1));
    let (cxx, cyy, cxy) = (1.0 / (hx * hx), 1.0 / (hy * hy), 1.0 / (4.0 * hx * hy));
    g.map_region_rows(HESSIAN_MARGIN, |i, cols, out| {
        let r0 = &v[i * m1..(i + 1) * m1];
        let rm = &v[g.neighbour(0, i, -1) * m1..][..m1];
        let rp = &v[g.neighbour(0, i, 1) * m1..][..m1];
        for j in cols {
            let (jm, jp) = (g.neighbour(1, j, -1), g.neighbour(1, j, 1));
            let c = r0[j];
            let uxx = (rp[j] - 2.0 * c + rm[j]) * cxx;
            let uyy = (r0[jp] - 2.0 * c + r0[jm]) * cyy;
            let uxy = (rp[jp] - rp[jm] - rm[jp] + rm[jm]) * cxy;
            out.push(SymMat::new_2d(bxx + uxx, bxy + uxy, byy + uyy));
        }
    })
}

/// `sup |D^3 u|^2` over the evaluable nodes.
pub fn third_derivative_sup_sq(field: &ScalarField) -> Result<f64> {
    let per_node = field.grid().map_region(THIRD_DERIVATIVE_MARGIN, |n| third_derivative_sq_at(field, n))?;
    Ok(per_node.max())
}

pub fn min_eigenvalue_field(hess: &SymmetricMatrixField) -> InteriorField<f64> {
    hess.map(SymMat::min_eigenvalue)
}

pub fn max_eigenvalue_field(hess: &SymmetricMatrixField) -> InteriorField<f64> {
    hess.map(SymMat::max_eigenvalue)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::grid::{FieldRole, GridSpec};
    use std::f64::consts::PI;

    fn field(grid: GridSpec, f: impl Fn(&Point) -> f64) -> ScalarField {
        ScalarField::from_fn(grid, FieldRole::FullPotential, f).unwrap()
    }

    #[test]
    fn gradient_exact_on_quadratic() {
        let g = GridSpec::cube(2, -1.0, 1.0, 9).unwrap();
        let u = field(g.clone(), |p| 0.5 * (p[0] * p[0] + 2.0 * p[1] * p[1]));
        let du = gradient(&u).unwrap();
        for (n, v) in du.iter() {
            let p = g.point(n);
            assert!((v[0] - p[0]).abs() < 1e-12 && (v[1] - 2.0 * p[1]).abs() < 1e-12);
        }
        // unit spacing: node (1,1) is the point (1,1)
        let g1 = GridSpec::cube(2, 0.0, 4.0, 5).unwrap();
        let u1 = field(g1, |p| 0.5 * (p[0] * p[0] + 2.0 * p[1] * p[1]));
        let v = *gradient(&u1).unwrap().get([1, 1]).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-12 && (v[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = GridSpec::torus(2, 0.0, 1.0, 8).unwrap();
        let du = gradient(&field(g, |_| 7.0)).unwrap();
        assert!(du.iter().all(|(_, v)| v[0] == 0.0 && v[1] == 0.0));
    }

    #[test]
    fn quartic_stencils_at_origin() {
        let h = 0.1;
        let g = GridSpec::cube(1, -4.0 * h, 4.0 * h, 9).unwrap();
        let u = field(g.clone(), |p| p[0].powi(4));
        let mid = [4, 0];
        assert_eq!(g.coord(0, 4), 0.0);
        assert!(gradient(&u).unwrap().get(mid).unwrap()[0].abs() < 1e-15);
        // (h^4 - 0 + h^4) / h^2 = 2 h^2
        let uxx = hessian(&u).unwrap().get(mid).unwrap().get(0, 0);
        assert!((uxx - 2.0 * h * h).abs() < 1e-14);
    }

    #[test]
    fn hessian_exact_on_quadratic_and_bilinear() {
        let g = GridSpec::cube(2, -2.0, 3.0, 11).unwrap();
        let q = hessian(&field(g.clone(), |p| 0.5 * (p[0] * p[0] + 2.0 * p[1] * p[1]))).unwrap();
        for (_, m) in q.iter() {
            assert!((m.get(0, 0) - 1.0).abs() < 1e-10);
            assert!((m.get(1, 1) - 2.0).abs() < 1e-10);
            assert!(m.get(0, 1).abs() < 1e-10);
        }
        let b = hessian(&field(g, |p| p[0] * p[1])).unwrap();
        for (_, m) in b.iter() {
            assert!(m.get(0, 0).abs() < 1e-10 && m.get(1, 1).abs() < 1e-10);
            assert!((m.get(0, 1) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn third_derivative_on_quadratic_cubic_and_sine() {
        let g = GridSpec::cube(2, -1.0, 1.0, 17).unwrap();
        let quad = field(g, |p| 0.3 * p[0] * p[0] - p[0] * p[1] + 2.0 * p[1] * p[1] + p[0]);
        assert!(third_derivative_sup_sq(&quad).unwrap() < 1e-10);

        let g1 = GridSpec::cube(1, -1.0, 1.0, 21).unwrap();
        let cubic = field(g1, |p| p[0].powi(3) / 6.0);
        assert!((third_derivative_sup_sq(&cubic).unwrap() - 1.0).abs() < 1e-10);

        let t = GridSpec::torus(1, 0.0, 2.0 * PI, 256).unwrap();
        let s = field(t, |p| p[0].sin());
        assert!((third_derivative_sup_sq(&s).unwrap() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn mixed_third_derivatives_weighted_by_multiplicity() {
        // u = x^2 y / 2: u_xxy = 1 is the only nonzero entry, appearing in 3 ordered triples
        let g = GridSpec::cube(2, -1.0, 1.0, 11).unwrap();
        let u = field(g, |p| 0.5 * p[0] * p[0] * p[1]);
        assert!((third_derivative_sup_sq(&u).unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn margins_reject_tiny_boxes() {
        let g = GridSpec::cube(1, 0.0, 1.0, 5).unwrap();
        let u = field(g, |p| p[0]);
        assert!(hessian(&u).is_ok());
        assert!(matches!(third_derivative_sup_sq(&u), Err(Error::GridTooSmall { min: 7, .. })));
    }

    #[test]
    fn min_eigenvalues() {
        let g = GridSpec::cube(2, -1.0, 1.0, 9).unwrap();
        let h = hessian(&field(g, |p| 0.5 * (p[0] * p[0] + 2.0 * p[1] * p[1]))).unwrap();
        let mu = min_eigenvalue_field(&h);
        assert!(mu.iter().all(|(_, v)| (v - 1.0).abs() < 1e-10));

        let g1 = GridSpec::cube(1, -1.0, 1.0, 9).unwrap();
        let h1 = hessian(&field(g1, |p| 0.15 * p[0] * p[0])).unwrap();
        assert!(min_eigenvalue_field(&h1).iter().all(|(_, v)| (v - 0.3).abs() < 1e-12));
    }

    fn max_hessian_error(nodes: usize) -> f64 {
        let g = GridSpec::cube(2, -1.0, 1.0, nodes).unwrap();
        let u = field(g.clone(), |p| ((p[0] * p[0] + p[1] * p[1]) / 4.0).exp());
        let h = hessian(&u).unwrap();
        // fixed sub-box so both resolutions measure the same region
        h.iter()
            .filter(|(n, _)| g.point(*n).iter().all(|c| c.abs() <= 0.5 + 1e-12))
            .map(|(n, m)| {
                let [x, y] = g.point(n);
                let e = ((x * x + y * y) / 4.0).exp();
                let exact = [(0.5 + x * x / 4.0) * e, x * y / 4.0 * e, (0.5 + y * y / 4.0) * e];
                (m.get(0, 0) - exact[0]).abs().max((m.get(0, 1) - exact[1]).abs()).max((m.get(1, 1) - exact[2]).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn hessian_converges_at_second_order() {
        let ratio = max_hessian_error(21) / max_hessian_error(41);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn reductions_are_repeatable() {
        let t = GridSpec::torus(2, 0.0, 2.0 * PI, 64).unwrap();
        let u = field(t, |p| p[0].cos() + 0.1 * (p[0].sin() * (2.0 * p[1]).cos()));
        let a = third_derivative_sup_sq(&u).unwrap();
        let b = third_derivative_sup_sq(&u).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
