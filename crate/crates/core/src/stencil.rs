//! Periodic central finite differences, orders 2 and 4.
//!
//! All derivatives are coordinate (flat) derivatives; covariant corrections
//! live with the metric. Mixed second derivatives nest the first-derivative
//! stencil along each axis, which keeps d_i d_j symmetric in (i, j) exactly.

use crate::error::{Error, Result};
use crate::field::{CovectorField, ScalarField, SymTensorField};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StencilOrder {
    Two,
    Four,
}

impl StencilOrder {
    pub fn as_usize(self) -> usize {
        match self {
            StencilOrder::Two => 2,
            StencilOrder::Four => 4,
        }
    }

    pub fn from_usize(v: usize) -> Result<StencilOrder> {
        match v {
            2 => Ok(StencilOrder::Two),
            4 => Ok(StencilOrder::Four),
            _ => Err(Error::Config(format!("stencil order {v} not in {{2, 4}}"))),
        }
    }
}

/// First derivative along `axis` of component `comp` of a packed component
/// array (ncomp values per point), written into `out` (one value per point).
pub fn d1_component(
    grid: &Grid,
    vals: &[f64],
    ncomp: usize,
    comp: usize,
    axis: usize,
    order: StencilOrder,
    out: &mut [f64],
) {
    let h = grid.spacing(axis);
    match order {
        StencilOrder::Two => {
            let c = 1.0 / (2.0 * h);
            for p in 0..grid.len() {
                let fp = vals[grid.neighbor(p, axis, 1) * ncomp + comp];
                let fm = vals[grid.neighbor(p, axis, -1) * ncomp + comp];
                out[p] = c * (fp - fm);
            }
        }
        StencilOrder::Four => {
            let c = 1.0 / (12.0 * h);
            for p in 0..grid.len() {
                let f1 = vals[grid.neighbor(p, axis, 1) * ncomp + comp];
                let fm1 = vals[grid.neighbor(p, axis, -1) * ncomp + comp];
                let f2 = vals[grid.neighbor(p, axis, 2) * ncomp + comp];
                let fm2 = vals[grid.neighbor(p, axis, -2) * ncomp + comp];
                out[p] = c * (8.0 * (f1 - fm1) - (f2 - fm2));
            }
        }
    }
}

/// Pure second derivative along `axis`.
pub fn d2_component(
    grid: &Grid,
    vals: &[f64],
    ncomp: usize,
    comp: usize,
    axis: usize,
    order: StencilOrder,
    out: &mut [f64],
) {
    let h2 = grid.spacing(axis) * grid.spacing(axis);
    match order {
        StencilOrder::Two => {
            let c = 1.0 / h2;
            for p in 0..grid.len() {
                let f0 = vals[p * ncomp + comp];
                let fp = vals[grid.neighbor(p, axis, 1) * ncomp + comp];
                let fm = vals[grid.neighbor(p, axis, -1) * ncomp + comp];
                out[p] = c * (fp - 2.0 * f0 + fm);
            }
        }
        StencilOrder::Four => {
            let c = 1.0 / (12.0 * h2);
            for p in 0..grid.len() {
                let f0 = vals[p * ncomp + comp];
                let f1 = vals[grid.neighbor(p, axis, 1) * ncomp + comp];
                let fm1 = vals[grid.neighbor(p, axis, -1) * ncomp + comp];
                let f2 = vals[grid.neighbor(p, axis, 2) * ncomp + comp];
                let fm2 = vals[grid.neighbor(p, axis, -2) * ncomp + comp];
                out[p] = c * (16.0 * (f1 + fm1) - (f2 + fm2) - 30.0 * f0);
            }
        }
    }
}

/// Flat gradient: (d_1 f, ..., d_n f).
pub fn gradient(f: &ScalarField, order: StencilOrder) -> CovectorField {
    let grid = f.grid().clone();
    let n = grid.n();
    let mut g = CovectorField::zeros(&grid);
    let mut buf = vec![0.0; grid.len()];
    for axis in 0..n {
        d1_component(&grid, f.values(), 1, 0, axis, order, &mut buf);
        for p in 0..grid.len() {
            g.set(p, axis, buf[p]);
        }
    }
    g
}

/// Flat Hessian d_i d_j f as a symmetric tensor field.
pub fn hessian_flat(f: &ScalarField, order: StencilOrder) -> SymTensorField {
    let grid = f.grid().clone();
    let n = grid.n();
    let mut hess = SymTensorField::zeros(&grid);
    let mut buf = vec![0.0; grid.len()];
    let mut buf2 = vec![0.0; grid.len()];
    for i in 0..n {
        d2_component(&grid, f.values(), 1, 0, i, order, &mut buf);
        for p in 0..grid.len() {
            hess.set(p, i, i, buf[p]);
        }
        for j in (i + 1)..n {
            d1_component(&grid, f.values(), 1, 0, i, order, &mut buf);
            d1_component(&grid, &buf, 1, 0, j, order, &mut buf2);
            for p in 0..grid.len() {
                hess.set(p, i, j, buf2[p]);
            }
        }
    }
    hess
}

/// All flat first derivatives of a packed component array:
/// out[(p*ncomp + c)*n + axis] = d_axis comp_c (p).
pub fn d1_all(grid: &Grid, vals: &[f64], ncomp: usize, order: StencilOrder) -> Vec<f64> {
    let n = grid.n();
    let mut out = vec![0.0; grid.len() * ncomp * n];
    let mut buf = vec![0.0; grid.len()];
    for c in 0..ncomp {
        for axis in 0..n {
            d1_component(grid, vals, ncomp, c, axis, order, &mut buf);
            for p in 0..grid.len() {
                out[(p * ncomp + c) * n + axis] = buf[p];
            }
        }
    }
    out
}
