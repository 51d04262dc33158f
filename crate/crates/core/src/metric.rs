//! Riemannian metric fields on periodic grids: per-point Cholesky factors,
//! inverses, Christoffel symbols, and the covariant differential operators
//! (gradient norm, Hessian, Laplacian) the curvature operators build on.

use crate::error::{Error, Result};
use crate::field::{CovectorField, ScalarField, SymTensorField};
use crate::grid::Grid;
use crate::stencil::{self, StencilOrder};
use std::sync::Arc;

/// Pivot floor for the per-point Cholesky factorization; a diagonal pivot at
/// or below this is reported as a definiteness failure with the offending
/// point.
pub const SPD_FLOOR: f64 = 1e-10;

/// Metric tensor with cached inverse, Cholesky factor and Christoffel
/// symbols. Construction fails on any point where the tensor is not
/// positive definite.
#[derive(Debug, Clone)]
pub struct MetricField {
    grid: Arc<Grid>,
    g: SymTensorField,
    inv: SymTensorField,
    /// Lower-triangular Cholesky factor, n×n row-major per point.
    chol: Vec<f64>,
    /// Γ^k_{ij}, layout [(p·n + k)·sym_len + sym(i,j)].
    christoffel: Vec<f64>,
    order: StencilOrder,
}

/// Expand symmetric storage at point `p` into a row-major n×n buffer.
fn sym_to_full(field: &SymTensorField, p: usize, buf: &mut [f64]) {
    let n = field.grid().n();
    for i in 0..n {
        for j in 0..n {
            buf[i * n + j] = field.get(p, i, j);
        }
    }
}

/// In-place Cholesky of a row-major n×n SPD matrix; returns the failing
/// pivot on breakdown.
fn cholesky(a: &mut [f64], n: usize) -> std::result::Result<(), f64> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= SPD_FLOOR {
            return Err(d);
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
        for i in 0..j {
            a[i * n + j] = 0.0;
        }
    }
    Ok(())
}

/// Solve L Lᵀ x = b in place given the lower factor.
pub(crate) fn chol_solve(l: &[f64], n: usize, x: &mut [f64]) {
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= l[i * n + k] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
}

impl MetricField {
    /// Build the derived quantities from a symmetric tensor field.
    pub fn from_tensor(g: SymTensorField, order: StencilOrder) -> Result<MetricField> {
        let grid = g.grid().clone();
        let n = grid.n();
        let sym_len = grid.sym_len();
        let len = grid.len();

        let mut chol = vec![0.0f64; len * n * n];
        let mut inv = SymTensorField::zeros(&grid);
        let mut full = vec![0.0f64; n * n];
        let mut col = vec![0.0f64; n];
        for p in 0..len {
            sym_to_full(&g, p, &mut full);
            let max_g = full.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
            cholesky(&mut full, n).map_err(|pivot| Error::NotSpd {
                point: p,
                pivot,
                floor: SPD_FLOOR,
            })?;
            chol[p * n * n..(p + 1) * n * n].copy_from_slice(&full);
            // Inverse column by column through the factor.
            for j in 0..n {
                col.iter_mut().for_each(|x| *x = 0.0);
                col[j] = 1.0;
                chol_solve(&full, n, &mut col);
                for i in 0..=j {
                    inv.set(p, i, j, col[i]);
                }
            }
            // Residual check g·g⁻¹ = I, scaled by conditioning.
            let mut max_inv = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    max_inv = max_inv.max(inv.get(p, i, j).abs());
                }
            }
            let tol = 1e-12 * (1.0 + max_g * max_inv);
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for k in 0..n {
                        s += g.get(p, i, k) * inv.get(p, k, j);
                    }
                    let target = if i == j { 1.0 } else { 0.0 };
                    if (s - target).abs() > tol {
                        return Err(Error::Field(format!(
                            "metric inverse residual {:.3e} exceeds {tol:.3e} at point {p}",
                            (s - target).abs()
                        )));
                    }
                }
            }
        }

        // ∂_a g_{ij} for every component, then Γ^k_{ij} = ½ g^{kl}(∂_i g_{jl}
        // + ∂_j g_{il} − ∂_l g_{ij}).
        let dg = stencil::d1_all(&grid, g.values(), sym_len, order);
        let deriv = |p: usize, a: usize, i: usize, j: usize| {
            dg[(p * sym_len + grid.sym_index(i.min(j), i.max(j))) * n + a]
        };
        let mut christoffel = vec![0.0f64; len * n * sym_len];
        for p in 0..len {
            for k in 0..n {
                for i in 0..n {
                    for j in i..n {
                        let mut s = 0.0;
                        for l in 0..n {
                            s += inv.get(p, k, l)
                                * (deriv(p, i, j, l) + deriv(p, j, i, l) - deriv(p, l, i, j));
                        }
                        christoffel[(p * n + k) * sym_len + grid.sym_index(i, j)] = 0.5 * s;
                    }
                }
            }
        }

        Ok(MetricField {
            grid,
            g,
            inv,
            chol,
            christoffel,
            order,
        })
    }

    /// Flat (identity) metric.
    pub fn flat(grid: &Arc<Grid>) -> MetricField {
        let n = grid.n();
        let mut g = SymTensorField::zeros(grid);
        for p in 0..grid.len() {
            for i in 0..n {
                g.set(p, i, i, 1.0);
            }
        }
        MetricField::from_tensor(g, StencilOrder::Two)
            .expect("identity metric is positive definite")
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn tensor(&self) -> &SymTensorField {
        &self.g
    }

    pub fn inverse(&self) -> &SymTensorField {
        &self.inv
    }

    pub fn order(&self) -> StencilOrder {
        self.order
    }

    /// Lower Cholesky factor at point `p`, row-major n×n.
    pub fn chol_lower(&self, p: usize) -> &[f64] {
        let n = self.grid.n();
        &self.chol[p * n * n..(p + 1) * n * n]
    }

    pub fn christoffel(&self, p: usize, k: usize, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.christoffel[(p * self.grid.n() + k) * self.grid.sym_len() + self.grid.sym_index(i, j)]
    }

    pub(crate) fn christoffel_raw(&self) -> &[f64] {
        &self.christoffel
    }

    /// Covariant Hessian ∇²u_{ij} = ∂²_{ij}u − Γ^k_{ij}∂_k u.
    pub fn covariant_hessian(&self, u: &ScalarField) -> Result<SymTensorField> {
        if !u.grid().compatible(&self.grid) {
            return Err(Error::Field("hessian: field grid differs from metric grid".into()));
        }
        let n = self.grid.n();
        let mut hess = stencil::hessian_flat(u, self.order);
        let grad = stencil::gradient(u, self.order);
        for p in 0..self.grid.len() {
            for i in 0..n {
                for j in i..n {
                    let mut corr = 0.0;
                    for k in 0..n {
                        corr += self.christoffel(p, k, i, j) * grad.get(p, k);
                    }
                    let v = hess.get(p, i, j) - corr;
                    hess.set(p, i, j, v);
                }
            }
        }
        Ok(hess)
    }

    /// Laplace–Beltrami as the metric trace of the covariant Hessian, so the
    /// pair (Δu, ∇²u) satisfies the trace identity exactly per point.
    pub fn laplacian(&self, u: &ScalarField) -> Result<ScalarField> {
        let hess = self.covariant_hessian(u)?;
        Ok(self.trace(&hess))
    }

    /// g^{ij} T_{ij} per point.
    pub fn trace(&self, t: &SymTensorField) -> ScalarField {
        let n = self.grid.n();
        let mut out = ScalarField::zeros(&self.grid);
        let vals = out.values_mut();
        for p in 0..self.grid.len() {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += self.inv.get(p, i, j) * t.get(p, i, j);
                }
            }
            vals[p] = s;
        }
        out
    }

    /// |∇u|²_g = g^{ij} ∂_i u ∂_j u.
    pub fn grad_norm_sq(&self, u: &ScalarField) -> Result<ScalarField> {
        if !u.grid().compatible(&self.grid) {
            return Err(Error::Field("grad_norm_sq: field grid differs from metric grid".into()));
        }
        let grad = stencil::gradient(u, self.order);
        Ok(self.covector_norm_sq(&grad))
    }

    /// Metric e^{2u}g rebuilt from scratch (inverse, factor, Christoffels).
    pub fn conformal(&self, u: &ScalarField) -> Result<MetricField> {
        if !u.grid().compatible(&self.grid) {
            return Err(Error::Field("conformal: field grid differs from metric grid".into()));
        }
        let n = self.grid.n();
        let mut g = SymTensorField::zeros(&self.grid);
        for p in 0..self.grid.len() {
            let w = (2.0 * u.values()[p]).exp();
            for i in 0..n {
                for j in i..n {
                    g.set(p, i, j, w * self.g.get(p, i, j));
                }
            }
        }
        MetricField::from_tensor(g, self.order)
    }

    /// g^{ij} w_i w_j per point for a covector field.
    pub fn covector_norm_sq(&self, w: &CovectorField) -> ScalarField {
        let n = self.grid.n();
        let mut out = ScalarField::zeros(&self.grid);
        let vals = out.values_mut();
        for p in 0..self.grid.len() {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += self.inv.get(p, i, j) * w.get(p, i) * w.get(p, j);
                }
            }
            vals[p] = s;
        }
        out
    }
}
