//! Uniform periodic grids on flat tori [0, L_1) x ... x (0, L_n).
//!
//! Points are flattened row-major with axis 0 slowest. All fields and
//! stencils in this crate share this layout.

use crate::error::{Error, Result};
use std::sync::Arc;

pub const DEFAULT_PERIOD: f64 = 2.0 * std::f64::consts::PI;

/// Minimum dimension: the curvature identities implemented here divide by n-2.
pub const MIN_DIM: usize = 3;
/// Minimum points per axis for the stencil orders supported.
pub const MIN_SIZE: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    sizes: Vec<usize>,
    periods: Vec<f64>,
    spacings: Vec<f64>,
    strides: Vec<usize>,
    len: usize,
}

impl Grid {
    /// Grid with the default period 2*pi on every axis.
    pub fn new(sizes: &[usize]) -> Result<Arc<Grid>> {
        let periods = vec![DEFAULT_PERIOD; sizes.len()];
        Grid::with_periods(sizes, &periods)
    }

    pub fn with_periods(sizes: &[usize], periods: &[f64]) -> Result<Arc<Grid>> {
        if sizes.len() < MIN_DIM {
            return Err(Error::Grid(format!(
                "dimension {} below minimum {}",
                sizes.len(),
                MIN_DIM
            )));
        }
        if periods.len() != sizes.len() {
            return Err(Error::Grid(format!(
                "{} periods for {} axes",
                periods.len(),
                sizes.len()
            )));
        }
        if let Some(&s) = sizes.iter().find(|&&s| s < MIN_SIZE) {
            return Err(Error::Grid(format!("axis size {s} below minimum {MIN_SIZE}")));
        }
        if let Some(&l) = periods.iter().find(|&&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::Grid(format!("period {l} not positive finite")));
        }
        let spacings: Vec<f64> = sizes
            .iter()
            .zip(periods)
            .map(|(&s, &l)| l / s as f64)
            .collect();
        let mut strides = vec![0usize; sizes.len()];
        let mut acc = 1usize;
        for a in (0..sizes.len()).rev() {
            strides[a] = acc;
            acc = acc
                .checked_mul(sizes[a])
                .ok_or_else(|| Error::Grid("grid size overflows usize".into()))?;
        }
        Ok(Arc::new(Grid {
            sizes: sizes.to_vec(),
            periods: periods.to_vec(),
            spacings,
            strides,
            len: acc,
        }))
    }

    pub fn n(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }

    /// Same discretization: axis sizes and periods agree exactly. Fields
    /// built on distinct `Grid` values (a field read back from disk, say)
    /// interoperate with a context iff this holds.
    pub fn compatible(&self, other: &Grid) -> bool {
        self.sizes == other.sizes && self.periods == other.periods
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.spacings[axis]
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of components of a symmetric 2-tensor, n(n+1)/2.
    pub fn sym_len(&self) -> usize {
        let n = self.n();
        n * (n + 1) / 2
    }

    /// Flat index of a multi-index (no wrapping).
    pub fn index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.strides)
            .map(|(&i, &s)| i * s)
            .sum()
    }

    /// Multi-index of a flat index.
    pub fn multi(&self, p: usize, out: &mut [usize]) {
        for a in 0..self.sizes.len() {
            out[a] = (p / self.strides[a]) % self.sizes[a];
        }
    }

    /// Coordinates of point p.
    pub fn coords(&self, p: usize, out: &mut [f64]) {
        for a in 0..self.sizes.len() {
            let i = (p / self.strides[a]) % self.sizes[a];
            out[a] = i as f64 * self.spacings[a];
        }
    }

    pub fn coords_vec(&self, p: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        self.coords(p, &mut out);
        out
    }

    /// Flat index of the point `offset` steps along `axis` from p, wrapping periodically.
    #[inline]
    pub fn neighbor(&self, p: usize, axis: usize, offset: isize) -> usize {
        let size = self.sizes[axis] as isize;
        let stride = self.strides[axis];
        let i = (p / stride) as isize % size;
        let j = (i + offset).rem_euclid(size);
        (p as isize + (j - i) * stride as isize) as usize
    }

    /// Grid refined by an integer factor per axis, same periods.
    pub fn refined(&self, factor: usize) -> Result<Arc<Grid>> {
        if factor < 2 {
            return Err(Error::Grid(format!("refinement factor {factor} must be >= 2")));
        }
        let sizes: Vec<usize> = self.sizes.iter().map(|&s| s * factor).collect();
        Grid::with_periods(&sizes, &self.periods)
    }

    /// Row-major index into a per-point component array.
    #[inline]
    pub fn at(&self, p: usize, ncomp: usize, comp: usize) -> usize {
        p * ncomp + comp
    }

    /// Upper-triangle component index of the symmetric pair (i, j), i <= j.
    #[inline]
    pub fn sym_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= j);
        let n = self.n();
        i * (2 * n - i + 1) / 2 + (j - i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_low_dimension_and_small_axes() {
        assert!(Grid::new(&[8, 8]).is_err());
        assert!(Grid::new(&[8, 8, 7]).is_err());
        assert!(Grid::new(&[8, 8, 8]).is_ok());
    }

    #[test]
    fn indexing_round_trips() {
        let g = Grid::new(&[8, 12, 10]).unwrap();
        assert_eq!(g.len(), 8 * 12 * 10);
        let mut multi = [0usize; 3];
        for p in [0, 1, 959, 457] {
            g.multi(p, &mut multi);
            assert_eq!(g.index(&multi), p);
        }
    }

    #[test]
    fn neighbor_wraps_periodically() {
        let g = Grid::new(&[8, 8, 8]).unwrap();
        let p = g.index(&[0, 3, 7]);
        assert_eq!(g.neighbor(p, 0, -1), g.index(&[7, 3, 7]));
        assert_eq!(g.neighbor(p, 2, 1), g.index(&[0, 3, 0]));
        assert_eq!(g.neighbor(p, 2, -2), g.index(&[0, 3, 5]));
        assert_eq!(g.neighbor(g.neighbor(p, 1, 5), 1, -5), p);
    }

    #[test]
    fn sym_index_covers_upper_triangle() {
        let g = Grid::new(&[8, 8, 8, 8]).unwrap();
        let mut seen = vec![false; g.sym_len()];
        for i in 0..4 {
            for j in i..4 {
                let c = g.sym_index(i, j);
                assert!(!seen[c]);
                seen[c] = true;
            }
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn spacing_matches_period() {
        let g = Grid::with_periods(&[16, 8, 8], &[4.0, 2.0, 1.0]).unwrap();
        assert_eq!(g.spacing(0), 0.25);
        assert_eq!(g.spacing(2), 0.125);
    }
}
