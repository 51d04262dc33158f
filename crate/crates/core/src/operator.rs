//! The reduced conformal curvature operator and its linearization.
//!
//! For parameters (α, τ) with ϱ = (n−2)/(τ−1) and γ = (τ−2)(n−2)/(2(τ−1)),
//! the conformal equation on g̃ = e^{2u}g reduces to
//!
//!   F[u] = f(λ(g⁻¹V[u])) − c·ψ·e^{2ςu} = 0,
//!   V[u] = Δu·g − ϱ∇²u + γ|∇u|²·g + ϱ·du⊗du + A,
//!
//! where A is the rescaled background tensor ((n−2)/(α(τ−1)))·A^{τ,α}_g, all
//! differential operators are covariant in g, λ(·) are the ascending
//! eigenvalues of the pencil V x = λ g x, and f = σ_k^{1/k} on the cone Γ_k.
//!
//! The linearization at u, with eigenframe frozen, is
//!
//!   DF[u]w = Σ_i f_i(λ)·xᵢᵀ(V′[u]w)xᵢ − 2ςc·ψ·e^{2ςu}·w,
//!   V′[u]w = Δw·g − ϱ∇²w + 2γ⟨∇u,∇w⟩_g·g + ϱ(du⊗dw + dw⊗du),
//!
//! with f_i averaged over numerically tied eigenvalue blocks so the operator
//! is well defined on repeated eigenvalues.

use crate::cone;
use crate::curvature;
use crate::eigen::sym_eigen;
use crate::error::{ConeViolation, Error, Result};
use crate::field::{CovectorField, ScalarField, SymTensorField};
use crate::metric::MetricField;
use crate::stencil::{self, StencilOrder};
use crate::EquationParams;

/// Relative tolerance for the per-point pencil residual ‖Vx − λgx‖.
const EIGEN_RESIDUAL_TOL: f64 = 1e-9;
/// Eigenvalues closer than this (relative to the local scale) are treated as
/// one block when weighting the linearization.
const TIE_TOL: f64 = 1e-9;

/// Per-point ascending eigenvalues and g-orthonormal eigenvectors of the
/// pencil V x = λ g x.
#[derive(Debug, Clone)]
pub struct EigenField {
    n: usize,
    /// λ_i at [p·n + i], ascending in i.
    pub lambda: Vec<f64>,
    /// Eigenvector components x_i^a at [(p·n + i)·n + a].
    pub frames: Vec<f64>,
}

impl EigenField {
    pub fn lambda_at(&self, p: usize) -> &[f64] {
        &self.lambda[p * self.n..(p + 1) * self.n]
    }

    pub fn frame_at(&self, p: usize, i: usize) -> &[f64] {
        &self.frames[(p * self.n + i) * self.n..(p * self.n + i + 1) * self.n]
    }
}

/// Equation context: background metric, rescaled background tensor, cone
/// parameters and positive right-hand side ψ.
#[derive(Debug, Clone)]
pub struct OperatorContext {
    metric: MetricField,
    a_reduced: SymTensorField,
    params: EquationParams,
    psi: ScalarField,
}

impl OperatorContext {
    /// Use an explicit reduced background tensor A (the term appearing in
    /// V[u] directly).
    pub fn with_reduced_tensor(
        metric: MetricField,
        a_reduced: SymTensorField,
        params: EquationParams,
        psi: ScalarField,
    ) -> Result<OperatorContext> {
        let grid = metric.grid();
        if !a_reduced.grid().compatible(grid) || !psi.grid().compatible(grid) {
            return Err(Error::Field("operator context: grid mismatch".into()));
        }
        if grid.n() != params.n {
            return Err(Error::Params(format!(
                "parameter dimension {} differs from grid dimension {}",
                params.n,
                grid.n()
            )));
        }
        if psi.min() <= 0.0 {
            return Err(Error::Params(format!(
                "psi must be strictly positive, min = {:.6e}",
                psi.min()
            )));
        }
        Ok(OperatorContext {
            metric,
            a_reduced,
            params,
            psi,
        })
    }

    /// Derive A from the metric's own curvature:
    /// A = ((n−2)/(α(τ−1)))·A^{τ,α}_g.
    pub fn from_background(
        metric: MetricField,
        params: EquationParams,
        psi: ScalarField,
    ) -> Result<OperatorContext> {
        let curv = curvature::curvature(&metric)?;
        let schouten = curvature::modified_schouten(&metric, &curv, params.alpha, params.tau);
        let scale = (params.n as f64 - 2.0) / (params.alpha * (params.tau - 1.0));
        let mut a_reduced = SymTensorField::zeros(metric.grid());
        let n = metric.grid().n();
        for p in 0..metric.grid().len() {
            for i in 0..n {
                for j in i..n {
                    a_reduced.set(p, i, j, scale * schouten.get(p, i, j));
                }
            }
        }
        OperatorContext::with_reduced_tensor(metric, a_reduced, params, psi)
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    pub fn params(&self) -> &EquationParams {
        &self.params
    }

    pub fn psi(&self) -> &ScalarField {
        &self.psi
    }

    pub fn reduced_tensor(&self) -> &SymTensorField {
        &self.a_reduced
    }

    /// Replace ψ (homotopy steps re-target the same context).
    pub fn set_psi(&mut self, psi: ScalarField) -> Result<()> {
        if !psi.grid().compatible(self.metric.grid()) {
            return Err(Error::Field("set_psi: grid mismatch".into()));
        }
        if psi.min() <= 0.0 {
            return Err(Error::Params(format!(
                "psi must be strictly positive, min = {:.6e}",
                psi.min()
            )));
        }
        self.psi = psi;
        Ok(())
    }

    /// V[u] = Δu·g − ϱ∇²u + γ|∇u|²·g + ϱ·du⊗du + A.
    pub fn assemble_v(&self, u: &ScalarField) -> Result<SymTensorField> {
        let grid = self.metric.grid().clone();
        if !u.grid().compatible(&grid) {
            return Err(Error::Field("assemble_v: field grid differs".into()));
        }
        let n = grid.n();
        let rho = self.params.rho;
        let gamma = self.params.gamma;
        let hess = self.metric.covariant_hessian(u)?;
        let lap = self.metric.trace(&hess);
        let grad = stencil::gradient(u, self.metric.order());
        let gn2 = self.metric.covector_norm_sq(&grad);
        let g = self.metric.tensor();
        let mut v = SymTensorField::zeros(&grid);
        for p in 0..grid.len() {
            let lap_p = lap.values()[p];
            let gn_p = gn2.values()[p];
            for i in 0..n {
                for j in i..n {
                    let val = lap_p * g.get(p, i, j) - rho * hess.get(p, i, j)
                        + gamma * gn_p * g.get(p, i, j)
                        + rho * grad.get(p, i) * grad.get(p, j)
                        + self.a_reduced.get(p, i, j);
                    v.set(p, i, j, val);
                }
            }
        }
        Ok(v)
    }

    /// Solve the pencil V x = λ g x at every point through the Cholesky
    /// factor of g; eigenvalues ascend and frames are g-orthonormal.
    pub fn eigen_decompose(&self, v: &SymTensorField) -> Result<EigenField> {
        let grid = self.metric.grid();
        let n = grid.n();
        let len = grid.len();
        let mut lambda = vec![0.0f64; len * n];
        let mut frames = vec![0.0f64; len * n * n];
        let mut b = vec![0.0f64; n * n];
        let mut vals = vec![0.0f64; n];
        let mut vecs = vec![0.0f64; n * n];
        for p in 0..len {
            let l = self.metric.chol_lower(p);
            // B = L⁻¹ V L⁻ᵀ via two triangular substitutions.
            for i in 0..n {
                for j in 0..n {
                    b[i * n + j] = v.get(p, i, j);
                }
            }
            // B ← L⁻¹ B (forward substitution on each column).
            for j in 0..n {
                for i in 0..n {
                    let mut s = b[i * n + j];
                    for k in 0..i {
                        s -= l[i * n + k] * b[k * n + j];
                    }
                    b[i * n + j] = s / l[i * n + i];
                }
            }
            // B ← B L⁻ᵀ (forward substitution on each row).
            for i in 0..n {
                for j in 0..n {
                    let mut s = b[i * n + j];
                    for k in 0..j {
                        s -= b[i * n + k] * l[j * n + k];
                    }
                    b[i * n + j] = s / l[j * n + j];
                }
            }
            // Exact symmetrization guards against rounding drift.
            for i in 0..n {
                for j in (i + 1)..n {
                    let m = 0.5 * (b[i * n + j] + b[j * n + i]);
                    b[i * n + j] = m;
                    b[j * n + i] = m;
                }
            }
            sym_eigen(&mut b, n, &mut vals, &mut vecs);
            lambda[p * n..(p + 1) * n].copy_from_slice(&vals);
            for slot in 0..n {
                // x = L⁻ᵀ y (back substitution).
                let dst = &mut frames[(p * n + slot) * n..(p * n + slot + 1) * n];
                dst.copy_from_slice(&vecs[slot * n..(slot + 1) * n]);
                for a in (0..n).rev() {
                    let mut s = dst[a];
                    for k in (a + 1)..n {
                        s -= l[k * n + a] * dst[k];
                    }
                    dst[a] = s / l[a * n + a];
                }
            }
            // Pencil residual invariant.
            let mut scale = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    scale = scale.max(v.get(p, i, j).abs());
                }
                scale = scale.max(lambda[p * n + i].abs());
            }
            let tol = EIGEN_RESIDUAL_TOL * (1.0 + scale);
            for i in 0..n {
                let x = &frames[(p * n + i) * n..(p * n + i + 1) * n];
                for r in 0..n {
                    let mut res = 0.0;
                    for cidx in 0..n {
                        res += (v.get(p, r, cidx)
                            - lambda[p * n + i] * self.metric.tensor().get(p, r, cidx))
                            * x[cidx];
                    }
                    if res.abs() > tol {
                        return Err(Error::Field(format!(
                            "pencil residual {:.3e} above {tol:.3e} at point {p}",
                            res.abs()
                        )));
                    }
                }
            }
        }
        Ok(EigenField {
            n,
            lambda,
            frames,
        })
    }

    /// Full nonlinear evaluation at u. Fails with a structured cone
    /// violation if any point leaves the closed cone (where f is undefined).
    pub fn evaluate(&self, u: &ScalarField) -> Result<Evaluation> {
        let grid = self.metric.grid().clone();
        let k = self.params.cone.k;
        let v = self.assemble_v(u)?;
        let eigen = self.eigen_decompose(&v)?;

        let mut margins = ScalarField::zeros(&grid);
        let mut violation: Option<ConeViolation> = None;
        let mut count = 0usize;
        for p in 0..grid.len() {
            let m = cone::margin(eigen.lambda_at(p), k);
            margins.values_mut()[p] = m;
            if m < 0.0 {
                count += 1;
                if violation.as_ref().map_or(true, |w| m < w.worst_margin) {
                    violation = Some(ConeViolation {
                        count: 0,
                        point: p,
                        worst_margin: m,
                        lambda: eigen.lambda_at(p).to_vec(),
                    });
                }
            }
        }
        if let Some(mut w) = violation {
            w.count = count;
            return Err(Error::ConeViolation(w));
        }

        let two_sc = 2.0 * self.params.sigma_power;
        let mut residual = ScalarField::zeros(&grid);
        let mut max_residual = 0.0f64;
        let mut min_margin = f64::INFINITY;
        for p in 0..grid.len() {
            let fv = self.params.cone.f_value(eigen.lambda_at(p))?;
            let r = fv
                - self.params.c * self.psi.values()[p] * (two_sc * u.values()[p]).exp();
            residual.values_mut()[p] = r;
            max_residual = max_residual.max(r.abs());
            min_margin = min_margin.min(margins.values()[p]);
        }
        Ok(Evaluation {
            v,
            eigen,
            residual,
            margins,
            min_margin,
            max_residual,
        })
    }

    /// Frozen-frame linearization at an admissible iterate.
    pub fn linearize(&self, u: &ScalarField, eval: &Evaluation) -> Result<Linearization<'_>> {
        let grid = self.metric.grid().clone();
        let n = grid.n();
        let len = grid.len();
        let k = self.params.cone.k;
        let mut fbar = vec![0.0f64; len * n];
        for p in 0..len {
            let lam = eval.eigen.lambda_at(p);
            if !cone::in_cone(lam, k, 0.0) {
                return Err(Error::ConeViolation(ConeViolation {
                    count: 1,
                    point: p,
                    worst_margin: cone::margin(lam, k),
                    lambda: lam.to_vec(),
                }));
            }
            let grad = self.params.cone.f_grad(lam)?;
            // Average over tied eigenvalue blocks.
            let scale = 1.0f64.max(lam.iter().fold(0.0f64, |m, &x| m.max(x.abs())));
            let tol = TIE_TOL * scale;
            let mut i = 0;
            while i < n {
                let mut j = i + 1;
                while j < n && (lam[j] - lam[j - 1]).abs() <= tol {
                    j += 1;
                }
                let mean = grad[i..j].iter().sum::<f64>() / (j - i) as f64;
                for slot in i..j {
                    fbar[p * n + slot] = mean;
                }
                i = j;
            }
        }
        let du = stencil::gradient(u, self.metric.order());
        let two_sc = 2.0 * self.params.sigma_power;
        let mut shift = vec![0.0f64; len];
        for p in 0..len {
            shift[p] = -two_sc
                * self.params.c
                * self.psi.values()[p]
                * (two_sc * u.values()[p]).exp();
        }
        Ok(Linearization {
            ctx: self,
            frames: eval.eigen.frames.clone(),
            fbar,
            du,
            shift,
        })
    }
}

/// Nonlinear evaluation products: tensor, eigensystem, residual and margins.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub v: SymTensorField,
    pub eigen: EigenField,
    pub residual: ScalarField,
    pub margins: ScalarField,
    pub min_margin: f64,
    pub max_residual: f64,
}

/// Matrix-free Fréchet derivative with frozen eigenframes.
pub struct Linearization<'a> {
    ctx: &'a OperatorContext,
    frames: Vec<f64>,
    fbar: Vec<f64>,
    du: CovectorField,
    shift: Vec<f64>,
}

impl<'a> Linearization<'a> {
    /// out = DF[u]·w.
    pub fn apply_into(&self, w: &[f64], out: &mut [f64]) -> Result<()> {
        let grid = self.ctx.metric.grid().clone();
        let n = grid.n();
        let len = grid.len();
        if w.len() != len || out.len() != len {
            return Err(Error::Field("linearization apply: length mismatch".into()));
        }
        let rho = self.ctx.params.rho;
        let gamma = self.ctx.params.gamma;
        let wf = ScalarField::from_values(&grid, w.to_vec())?;
        let hess = self.ctx.metric.covariant_hessian(&wf)?;
        let lap = self.ctx.metric.trace(&hess);
        let dw = stencil::gradient(&wf, self.ctx.metric.order());
        // ⟨∇u, ∇w⟩_g per point.
        let g_inv = self.ctx.metric.inverse();
        let g = self.ctx.metric.tensor();
        for p in 0..len {
            let mut cross = 0.0;
            for i in 0..n {
                for j in 0..n {
                    cross += g_inv.get(p, i, j) * self.du.get(p, i) * dw.get(p, j);
                }
            }
            let lap_p = lap.values()[p];
            let mut acc = 0.0;
            for i in 0..n {
                let x = &self.frames[(p * n + i) * n..(p * n + i + 1) * n];
                // xᵀ V′w x with V′w = Δw·g − ϱ∇²w + 2γ⟨∇u,∇w⟩g + ϱ(du⊗dw+dw⊗du).
                let mut quad = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        let vpab = lap_p * g.get(p, a, b) - rho * hess.get(p, a, b)
                            + 2.0 * gamma * cross * g.get(p, a, b)
                            + rho
                                * (self.du.get(p, a) * dw.get(p, b)
                                    + dw.get(p, a) * self.du.get(p, b));
                        quad += x[a] * vpab * x[b];
                    }
                }
                acc += self.fbar[p * n + i] * quad;
            }
            out[p] = acc + self.shift[p] * w[p];
        }
        Ok(())
    }

    /// Diagonal of the operator for Jacobi preconditioning: only the pure
    /// second-difference stencils contribute a self coefficient.
    pub fn jacobi_diag(&self) -> Vec<f64> {
        let grid = self.ctx.metric.grid().clone();
        let n = grid.n();
        let len = grid.len();
        let rho = self.ctx.params.rho;
        let order = self.ctx.metric.order();
        // Central coefficient of the pure second difference along each axis.
        let cc: Vec<f64> = (0..n)
            .map(|a| {
                let h2 = grid.spacing(a) * grid.spacing(a);
                match order {
                    StencilOrder::Two => -2.0 / h2,
                    StencilOrder::Four => -30.0 / (12.0 * h2),
                }
            })
            .collect();
        let g_inv = self.ctx.metric.inverse();
        let mut diag = vec![0.0f64; len];
        for p in 0..len {
            let trace_cc: f64 = (0..n).map(|a| g_inv.get(p, a, a) * cc[a]).sum();
            let mut acc = 0.0;
            for i in 0..n {
                let x = &self.frames[(p * n + i) * n..(p * n + i + 1) * n];
                let hess_cc: f64 = (0..n).map(|a| x[a] * x[a] * cc[a]).sum();
                acc += self.fbar[p * n + i] * (trace_cc - rho * hess_cc);
            }
            diag[p] = acc + self.shift[p];
        }
        diag
    }

    /// Extremes over all points and directions of the symbol pencil
    /// eigenvalues Σ_j f_j − ϱ·f_i (positive everywhere ⟺ elliptic).
    pub fn symbol_bounds(&self) -> (f64, f64) {
        let n = self.ctx.metric.grid().n();
        let len = self.ctx.metric.grid().len();
        let rho = self.ctx.params.rho;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in 0..len {
            let total: f64 = self.fbar[p * n..(p + 1) * n].iter().sum();
            for i in 0..n {
                let s = total - rho * self.fbar[p * n + i];
                lo = lo.min(s);
                hi = hi.max(s);
            }
        }
        (lo, hi)
    }
}
