//! Fields over a periodic grid: scalars, covectors, symmetric 2-tensors.
//!
//! Symmetric tensors store the upper triangle, n(n+1)/2 components per point,
//! components fastest-varying. Reductions run in flat index order so repeated
//! runs are bit-identical.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::Grid;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
    generator: Option<Expr>,
}

impl ScalarField {
    pub fn zeros(grid: &Arc<Grid>) -> ScalarField {
        ScalarField {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
            generator: None,
        }
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> ScalarField {
        ScalarField {
            grid: grid.clone(),
            values: vec![c; grid.len()],
            generator: Some(Expr::Const(c)),
        }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Result<ScalarField> {
        if values.len() != grid.len() {
            return Err(Error::Field(format!(
                "{} values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        Ok(ScalarField {
            grid: grid.clone(),
            values,
            generator: None,
        })
    }

    /// Evaluate a closed-form generator at every grid point and remember it.
    pub fn sample(grid: &Arc<Grid>, gen: &Expr) -> ScalarField {
        let mut x = vec![0.0; grid.n()];
        let values = (0..grid.len())
            .map(|p| {
                grid.coords(p, &mut x);
                gen.eval(&x)
            })
            .collect();
        ScalarField {
            grid: grid.clone(),
            values,
            generator: Some(gen.clone()),
        }
    }

    /// Exact resample of the generator on a grid refined by `factor`.
    /// Fields without a generator cannot be refined.
    pub fn refine(&self, factor: usize) -> Result<ScalarField> {
        let gen = self.generator.as_ref().ok_or_else(|| {
            Error::Field("refine requires a generator-backed field".into())
        })?;
        let fine = self.grid.refined(factor)?;
        Ok(ScalarField::sample(&fine, gen))
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn generator(&self) -> Option<&Expr> {
        self.generator.as_ref()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        self.generator = None;
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, p: usize) -> f64 {
        self.values[p]
    }

    /// w = a*self + b*other, dropping generators.
    pub fn axpby(&self, a: f64, b: f64, other: &ScalarField) -> ScalarField {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        ScalarField {
            grid: self.grid.clone(),
            values,
            generator: None,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&x| f(x)).collect(),
            generator: None,
        }
    }

    /// Max |self|, reduced in flat index order.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &x| f64::max(m, x.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &x| f64::min(m, x))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &x| f64::max(m, x))
    }

    /// Max |self - other|.
    pub fn linf_diff(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (&x, &y)| f64::max(m, (x - y).abs()))
    }
}

#[derive(Debug, Clone)]
pub struct CovectorField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl CovectorField {
    pub fn zeros(grid: &Arc<Grid>) -> CovectorField {
        CovectorField {
            grid: grid.clone(),
            values: vec![0.0; grid.len() * grid.n()],
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, p: usize, i: usize) -> f64 {
        self.values[p * self.grid.n() + i]
    }

    #[inline]
    pub fn set(&mut self, p: usize, i: usize, v: f64) {
        self.values[p * self.grid.n() + i] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &x| f64::max(m, x.abs()))
    }
}

#[derive(Debug, Clone)]
pub struct SymTensorField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl SymTensorField {
    pub fn zeros(grid: &Arc<Grid>) -> SymTensorField {
        SymTensorField {
            grid: grid.clone(),
            values: vec![0.0; grid.len() * grid.sym_len()],
        }
    }

    /// Sample one generator per upper-triangle component (row-major i <= j).
    pub fn sample(grid: &Arc<Grid>, gens: &[Expr]) -> Result<SymTensorField> {
        if gens.len() != grid.sym_len() {
            return Err(Error::Field(format!(
                "{} generators for {} symmetric components",
                gens.len(),
                grid.sym_len()
            )));
        }
        let mut field = SymTensorField::zeros(grid);
        let mut x = vec![0.0; grid.n()];
        let m = grid.sym_len();
        for p in 0..grid.len() {
            grid.coords(p, &mut x);
            for (c, gen) in gens.iter().enumerate() {
                field.values[p * m + c] = gen.eval(&x);
            }
        }
        Ok(field)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Component (i, j) at point p; either triangle may be asked for.
    #[inline]
    pub fn get(&self, p: usize, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.values[p * self.grid.sym_len() + self.grid.sym_index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, p: usize, i: usize, j: usize, v: f64) {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let c = self.grid.sym_index(i, j);
        let m = self.grid.sym_len();
        self.values[p * m + c] = v;
    }

    #[inline]
    pub fn add_to(&mut self, p: usize, i: usize, j: usize, v: f64) {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let c = self.grid.sym_index(i, j);
        let m = self.grid.sym_len();
        self.values[p * m + c] += v;
    }

    /// w = a*self + b*other componentwise.
    pub fn axpby(&self, a: f64, b: f64, other: &SymTensorField) -> SymTensorField {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        SymTensorField {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &x| f64::max(m, x.abs()))
    }

    pub fn linf_diff(&self, other: &SymTensorField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (&x, &y)| f64::max(m, (x - y).abs()))
    }
}
