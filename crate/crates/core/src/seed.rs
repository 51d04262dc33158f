//! Admissible starting fields.
//!
//! The construction: a strictly negative cosine landscape `w` whose maximum
//! value is exactly −1, an optional diffeomorphism that drags selected
//! critical points to prescribed targets (so the landscape's features can be
//! placed relative to where the background tensor degenerates), and an
//! amplitude escalation that searches u = e^{N·v} over a geometric schedule
//! of N for the first field making λ(g⁻¹V[u]) strictly admissible with the
//! requested margin at every grid point.
//!
//! Why this shape of u works: the gradient block of V[e^{Nv}] has eigenvalue
//! structure |∇v|²·[(1,…,1,1−ϱ) + e^{Nv}(γ,…,γ,γ+ϱ)] in a frame adapted to
//! ∇v, and the leading vector lies strictly inside the cone whenever the
//! parameter gates hold. Where ∇v vanishes the Hessian block Δv·g − ϱ∇²v
//! takes over; at a minimum of v it is positive definite when ϱ < 0. The
//! escalation trades these contributions off against the damage near the
//! maximum of v, where the Hessian block is negative.

use crate::cone::{in_cone, margin, validate_params, ConeSpec};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::field::{ScalarField, SymTensorField};
use crate::grid::Grid;
use crate::metric::MetricField;
use crate::operator::OperatorContext;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeedConfig {
    /// Required admissibility margin δ at every grid point.
    pub margin: f64,
    /// Amplitudes N to try, in order.
    pub n_schedule: Vec<f64>,
    /// Ceiling the profile must stay below (the base landscape tops out
    /// at −1); the structure-vector diagnostic is evaluated at max v.
    pub v_ceiling: f64,
    /// Steps for the reverse-flow integration in `pull_back`.
    pub flow_steps: usize,
}

impl Default for SeedConfig {
    fn default() -> Self {
        SeedConfig {
            margin: 1e-3,
            n_schedule: (0..11).map(|i| f64::from(1u32 << i)).collect(),
            v_ceiling: -1.0,
            flow_steps: 128,
        }
    }
}

/// Negative cosine landscape: amp·Σᵢ cos(2πxᵢ/Lᵢ) − (n·amp + 1).
/// Maximum value −1, attained only at the origin; 2ⁿ critical points at
/// coordinate combinations {0, Lᵢ/2}; minimum −2n·amp − 1.
pub fn morse_generator(grid: &Grid, amplitude: f64) -> Expr {
    let n = grid.n();
    let waves = (0..n).map(|i| Expr::scale(amplitude, Expr::cos_wave(i, 1, grid.periods()[i])));
    Expr::add(
        Expr::sum(waves),
        Expr::constant(-(n as f64 * amplitude + 1.0)),
    )
}

/// The 2ⁿ critical points of `morse_generator`, as coordinate vectors.
pub fn morse_critical_points(grid: &Grid) -> Vec<Vec<f64>> {
    let n = grid.n();
    let mut pts = Vec::with_capacity(1 << n);
    for mask in 0..(1usize << n) {
        let p: Vec<f64> = (0..n)
            .map(|i| {
                if mask & (1 << i) != 0 {
                    grid.periods()[i] / 2.0
                } else {
                    0.0
                }
            })
            .collect();
        pts.push(p);
    }
    pts
}

/// One source point dragged to a target along the straight segment, inside
/// a capsule of influence. The velocity field is exactly the displacement
/// on the capsule core and fades smoothly to zero at the outer radius, so
/// the source lands on the target exactly while everything outside the
/// capsule stays fixed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointMove {
    pub from: Vec<f64>,
    pub to: Vec<f64>,
    pub core_radius: f64,
    pub outer_radius: f64,
}

/// C^∞ transition: 1 for t ≤ 0, 0 for t ≥ 1.
fn smooth_cutoff(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t >= 1.0 {
        return 0.0;
    }
    let f = |s: f64| (-1.0 / s).exp();
    f(1.0 - t) / (f(1.0 - t) + f(t))
}

/// Distance from x to the segment [a, b], with x wrapped to the periodic
/// image nearest the segment midpoint. Valid when the capsule fits within
/// half a period on every axis, which `validate_moves` enforces.
fn dist_to_segment(x: &[f64], a: &[f64], b: &[f64], periods: &[f64]) -> f64 {
    let n = x.len();
    let mut d = vec![0.0f64; n]; // x' − a where x' is the wrapped image
    let mut e = vec![0.0f64; n];
    for i in 0..n {
        let mid = 0.5 * (a[i] + b[i]);
        let mut r = x[i] - mid;
        let l = periods[i];
        r -= (r / l).round() * l;
        d[i] = mid + r - a[i];
        e[i] = b[i] - a[i];
    }
    let ee: f64 = e.iter().map(|v| v * v).sum();
    let t = if ee > 0.0 {
        (d.iter().zip(&e).map(|(di, ei)| di * ei).sum::<f64>() / ee).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (0..n)
        .map(|i| {
            let r = d[i] - t * e[i];
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

/// Minimum distance between segments [a1,b1] and [a2,b2] in ℝⁿ, with the
/// second segment translated to the periodic image nearest the first.
fn segment_distance(a1: &[f64], b1: &[f64], a2: &[f64], b2: &[f64], periods: &[f64]) -> f64 {
    let n = a1.len();
    let m1: Vec<f64> = (0..n).map(|i| 0.5 * (a1[i] + b1[i])).collect();
    let m2: Vec<f64> = (0..n).map(|i| 0.5 * (a2[i] + b2[i])).collect();
    let mut shift = vec![0.0f64; n];
    for i in 0..n {
        let mut r = m2[i] - m1[i];
        r -= (r / periods[i]).round() * periods[i];
        shift[i] = m1[i] + r - m2[i];
    }
    let d1: Vec<f64> = (0..n).map(|i| b1[i] - a1[i]).collect();
    let d2: Vec<f64> = (0..n).map(|i| b2[i] - a2[i]).collect();
    let r: Vec<f64> = (0..n).map(|i| a1[i] - (a2[i] + shift[i])).collect();
    let aa: f64 = d1.iter().map(|v| v * v).sum();
    let bb: f64 = d1.iter().zip(&d2).map(|(u, v)| u * v).sum();
    let cc: f64 = d2.iter().map(|v| v * v).sum();
    let dd: f64 = d1.iter().zip(&r).map(|(u, v)| u * v).sum();
    let ee: f64 = d2.iter().zip(&r).map(|(u, v)| u * v).sum();

    // Clamped closest-approach parameters (standard segment-segment form);
    // the coarse candidate sweep below guards the degenerate branches.
    let det = aa * cc - bb * bb;
    let mut best = f64::INFINITY;
    let mut eval = |s: f64, t: f64| {
        let s = s.clamp(0.0, 1.0);
        let t = t.clamp(0.0, 1.0);
        let dist2: f64 = (0..n)
            .map(|i| {
                let v = a1[i] + s * d1[i] - (a2[i] + shift[i] + t * d2[i]);
                v * v
            })
            .sum();
        if dist2 < best {
            best = dist2;
        }
    };
    if det > 1e-14 * aa.max(cc).max(1.0) {
        let s = (bb * ee - cc * dd) / det;
        let t = (aa * ee - bb * dd) / det;
        eval(s, t);
        // Re-project each clamped coordinate against the other edge.
        for &sc in &[0.0, 1.0, s.clamp(0.0, 1.0)] {
            let tc = if cc > 0.0 { (sc * bb + ee) / cc } else { 0.0 };
            eval(sc, tc);
        }
        for &tc in &[0.0, 1.0, t.clamp(0.0, 1.0)] {
            let sc = if aa > 0.0 { (tc * bb - dd) / aa } else { 0.0 };
            eval(sc, tc);
        }
    } else {
        // Nearly parallel or degenerate: endpoint projections cover it.
        for &sc in &[0.0, 0.5, 1.0] {
            let tc = if cc > 0.0 { (sc * bb + ee) / cc } else { 0.0 };
            eval(sc, tc);
        }
        for &tc in &[0.0, 0.5, 1.0] {
            let sc = if aa > 0.0 { (tc * bb - dd) / aa } else { 0.0 };
            eval(sc, tc);
        }
    }
    best.sqrt()
}

fn validate_moves(grid: &Grid, moves: &[PointMove]) -> Result<()> {
    let n = grid.n();
    let min_period = grid
        .periods()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    for (idx, mv) in moves.iter().enumerate() {
        if mv.from.len() != n || mv.to.len() != n {
            return Err(Error::Seed(format!(
                "move {idx}: endpoint dimension mismatch (grid dimension {n})"
            )));
        }
        if !(mv.core_radius > 0.0 && mv.outer_radius > mv.core_radius) {
            return Err(Error::Seed(format!(
                "move {idx}: need 0 < core_radius < outer_radius, got core {} outer {}",
                mv.core_radius, mv.outer_radius
            )));
        }
        let len: f64 = mv
            .from
            .iter()
            .zip(&mv.to)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt();
        // Capsule must sit unambiguously inside half a period.
        if 0.5 * len + mv.outer_radius >= 0.45 * min_period {
            return Err(Error::Seed(format!(
                "move {idx}: capsule (half-length {:.3} + outer {:.3}) does not fit in \
                 half the shortest period {:.3}",
                0.5 * len,
                mv.outer_radius,
                min_period
            )));
        }
    }
    for i in 0..moves.len() {
        for j in (i + 1)..moves.len() {
            let d = segment_distance(
                &moves[i].from,
                &moves[i].to,
                &moves[j].from,
                &moves[j].to,
                grid.periods(),
            );
            let need = moves[i].outer_radius + moves[j].outer_radius;
            if d <= need {
                return Err(Error::Seed(format!(
                    "moves {i} and {j}: capsules overlap (segment distance {d:.4} ≤ \
                     outer radii sum {need:.4}); interacting flows would not land \
                     sources on their targets"
                )));
            }
        }
    }
    Ok(())
}

fn flow_velocity(x: &[f64], moves: &[PointMove], periods: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for mv in moves {
        let d = dist_to_segment(x, &mv.from, &mv.to, periods);
        if d >= mv.outer_radius {
            continue;
        }
        let t = (d - mv.core_radius) / (mv.outer_radius - mv.core_radius);
        let chi = smooth_cutoff(t);
        for i in 0..out.len() {
            out[i] += chi * (mv.to[i] - mv.from[i]);
        }
    }
}

/// v = w ∘ h⁻¹ where h is the time-1 flow of the capsule velocity field.
/// Each grid point is flowed backward (classical RK4) and the generator is
/// evaluated there. Points outside every capsule are fixed exactly, and a
/// target point maps back onto its source exactly (the velocity along the
/// segment is constant, which RK4 integrates without error).
pub fn pull_back(
    grid: &Arc<Grid>,
    w: &Expr,
    moves: &[PointMove],
    steps: usize,
) -> Result<ScalarField> {
    if steps == 0 {
        return Err(Error::Seed("pull_back needs at least one flow step".into()));
    }
    validate_moves(grid, moves)?;
    let n = grid.n();
    let periods = grid.periods().to_vec();
    let h = -1.0 / steps as f64; // backward in time
    let mut values = vec![0.0f64; grid.len()];
    let mut x = vec![0.0f64; n];
    let (mut k1, mut k2, mut k3, mut k4) = (
        vec![0.0f64; n],
        vec![0.0f64; n],
        vec![0.0f64; n],
        vec![0.0f64; n],
    );
    let mut stage = vec![0.0f64; n];
    for p in 0..grid.len() {
        grid.coords(p, &mut x);
        for _ in 0..steps {
            flow_velocity(&x, moves, &periods, &mut k1);
            for i in 0..n {
                stage[i] = x[i] + 0.5 * h * k1[i];
            }
            flow_velocity(&stage, moves, &periods, &mut k2);
            for i in 0..n {
                stage[i] = x[i] + 0.5 * h * k2[i];
            }
            flow_velocity(&stage, moves, &periods, &mut k3);
            for i in 0..n {
                stage[i] = x[i] + h * k3[i];
            }
            flow_velocity(&stage, moves, &periods, &mut k4);
            for i in 0..n {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        values[p] = w.eval(&x);
    }
    ScalarField::from_values(grid, values)
}

/// Frame-adapted eigenvalue vector of the gradient block of V[e^{Nv}]:
/// (1,…,1,1−ϱ) + e^{N·v_top}(γ,…,γ,γ+ϱ). Its cone margin is the structural
/// health of the escalation at amplitude N; it tends to the strictly
/// admissible limit vector as N grows.
pub fn structure_vector(n: usize, rho: f64, gamma: f64, amp_n: f64, v_top: f64) -> Vec<f64> {
    let w = (amp_n * v_top).exp();
    let mut s = vec![1.0 + w * gamma; n];
    s[n - 1] = 1.0 - rho + w * (gamma + rho);
    s
}

/// Flat-metric context whose background tensor is the wide diagonal bump
/// `c0/(2n)·(n + Σᵢ cos(2πxᵢ/Lᵢ))·δ`. The bump is nonnegative but vanishes
/// to second order at the cell center, so the background is only weakly
/// admissible: a degenerate pocket the escalation has to repair. ψ ≡ 1.
pub fn wide_bump_context(
    grid: &Arc<Grid>,
    c0: f64,
    k: usize,
    alpha: f64,
    tau: f64,
) -> Result<OperatorContext> {
    if c0 <= 0.0 {
        return Err(Error::Params(format!("bump strength must be positive, got {c0}")));
    }
    let n = grid.n();
    let metric = MetricField::flat(grid);
    let cone = ConeSpec::gamma_k(n, k)?;
    let params = validate_params(&cone, alpha, tau)?;
    let mut bump = Expr::constant(n as f64);
    for i in 0..n {
        bump = Expr::add(bump, Expr::cos_wave(i, 1, grid.periods()[i]));
    }
    let scalar = ScalarField::sample(grid, &Expr::scale(c0 / (2.0 * n as f64), bump));
    let mut a = SymTensorField::zeros(grid);
    for p in 0..grid.len() {
        for i in 0..n {
            a.set(p, i, i, scalar.values()[p]);
        }
    }
    let psi = ScalarField::constant(grid, 1.0);
    OperatorContext::with_reduced_tensor(metric, a, params, psi)
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedAttempt {
    pub amplitude: f64,
    pub min_margin: f64,
    pub structure_margin: f64,
    pub admissible: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedReport {
    pub amplitude_used: f64,
    pub attempts: Vec<SeedAttempt>,
    pub min_margin: f64,
    /// Margin of the frame-adapted gradient-block vector at the accepted N.
    pub structure_margin: f64,
    /// Grid points where the background tensor alone misses the margin.
    pub pocket_points: usize,
    pub pocket_min_margin: f64,
    pub exterior_min_margin: f64,
    /// min |∇v|²_g over the pocket: zero means a critical point of v sits
    /// there and the Hessian block is doing the carrying.
    pub pocket_min_grad_sq: f64,
}

/// Scan the amplitude schedule for the first u = e^{N·v} with admissibility
/// margin ≥ δ everywhere. `v` must stay below the configured ceiling.
pub fn escalate(
    ctx: &OperatorContext,
    v: &ScalarField,
    cfg: &SeedConfig,
) -> Result<(ScalarField, SeedReport)> {
    let grid = ctx.metric().grid();
    let params = ctx.params();
    let n = grid.n();
    let k = params.cone.k;
    let v_top = v.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if v_top > cfg.v_ceiling + 1e-9 {
        return Err(Error::Seed(format!(
            "profile maximum {v_top:.6} exceeds the ceiling {:.6}; the escalation \
             needs a strictly negative landscape",
            cfg.v_ceiling
        )));
    }
    if cfg.n_schedule.is_empty() {
        return Err(Error::Seed("empty amplitude schedule".into()));
    }

    // Pocket = points the background alone cannot carry at margin δ.
    let bg_eigen = ctx.eigen_decompose(ctx.reduced_tensor())?;
    let pocket: Vec<bool> = (0..grid.len())
        .map(|p| margin(bg_eigen.lambda_at(p), k) < cfg.margin)
        .collect();

    let mut attempts = Vec::new();
    for &amp_n in &cfg.n_schedule {
        let u = v.map(|s| (amp_n * s).exp());
        let vu = ctx.assemble_v(&u)?;
        let eigen = ctx.eigen_decompose(&vu)?;
        let mut min_margin = f64::INFINITY;
        let mut pocket_min = f64::INFINITY;
        let mut exterior_min = f64::INFINITY;
        for p in 0..grid.len() {
            let m = margin(eigen.lambda_at(p), k);
            min_margin = min_margin.min(m);
            if pocket[p] {
                pocket_min = pocket_min.min(m);
            } else {
                exterior_min = exterior_min.min(m);
            }
        }
        let sv = structure_vector(n, params.rho, params.gamma, amp_n, v_top);
        let structure_margin = if in_cone(&sv, k, 0.0) {
            margin(&sv, k)
        } else {
            -margin(&sv, k).abs()
        };
        let admissible = min_margin >= cfg.margin;
        attempts.push(SeedAttempt {
            amplitude: amp_n,
            min_margin,
            structure_margin,
            admissible,
        });
        if admissible {
            let gn2 = ctx.metric().grad_norm_sq(v)?;
            let pocket_min_grad_sq = (0..grid.len())
                .filter(|&p| pocket[p])
                .map(|p| gn2.values()[p])
                .fold(f64::INFINITY, f64::min);
            let report = SeedReport {
                amplitude_used: amp_n,
                min_margin,
                structure_margin,
                pocket_points: pocket.iter().filter(|&&b| b).count(),
                pocket_min_margin: pocket_min,
                exterior_min_margin: exterior_min,
                pocket_min_grad_sq: if pocket_min_grad_sq.is_finite() {
                    pocket_min_grad_sq
                } else {
                    f64::NAN
                },
                attempts,
            };
            return Ok((u, report));
        }
    }
    let best = attempts
        .iter()
        .map(|a| a.min_margin)
        .fold(f64::NEG_INFINITY, f64::max);
    Err(Error::Seed(format!(
        "no amplitude in the schedule reached margin {:.3e}; best over {} attempts was {:.3e}",
        cfg.margin,
        attempts.len(),
        best
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::{validate_params, ConeSpec};
    use crate::field::SymTensorField;
    use crate::metric::MetricField;

    #[test]
    fn landscape_tops_out_at_minus_one_at_origin() {
        let grid = Grid::new(&[16, 16, 16]).unwrap();
        let w = morse_generator(&grid, 0.5);
        let field = ScalarField::sample(&grid, &w);
        assert_eq!(field.values()[0], -1.0);
        for p in 1..grid.len() {
            assert!(field.values()[p] < -1.0);
        }
        // Bottom of the landscape: all cosines at −1.
        let bottom = field.values().iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((bottom - (-2.0 * 3.0 * 0.5 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn landscape_gradient_vanishes_at_all_critical_points() {
        let grid = Grid::new(&[8, 8, 8]).unwrap();
        let w = morse_generator(&grid, 0.7);
        let grads: Vec<Expr> = (0..3).map(|i| w.diff(i)).collect();
        let pts = morse_critical_points(&grid);
        assert_eq!(pts.len(), 8);
        for p in &pts {
            for g in &grads {
                assert!(g.eval(p).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pull_back_without_moves_matches_direct_sampling() {
        let grid = Grid::new(&[10, 10, 10]).unwrap();
        let w = morse_generator(&grid, 0.4);
        let direct = ScalarField::sample(&grid, &w);
        let flowed = pull_back(&grid, &w, &[], 16).unwrap();
        assert_eq!(direct.values(), flowed.values());
    }

    #[test]
    fn single_move_relocates_the_maximum_exactly() {
        let grid = Grid::new(&[16, 16, 16]).unwrap();
        let w = morse_generator(&grid, 0.5);
        let h = grid.spacing(0);
        // Drag the maximum from the origin to a nearby grid point.
        let target = vec![3.0 * h, 2.0 * h, 0.0];
        let mv = PointMove {
            from: vec![0.0, 0.0, 0.0],
            to: target.clone(),
            core_radius: 0.3,
            outer_radius: 1.2,
        };
        let v = pull_back(&grid, &w, &[mv], 128).unwrap();
        let p_to = grid.index(&[3, 2, 0]);
        // Constant velocity along the segment integrates exactly.
        assert!((v.values()[p_to] - (-1.0)).abs() < 1e-10);
        let (argmax, vmax) = v
            .values()
            .iter()
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |acc, (i, &val)| {
                if val > acc.1 {
                    (i, val)
                } else {
                    acc
                }
            });
        assert_eq!(argmax, p_to);
        assert!(vmax <= -1.0 + 1e-10);

        // Far from the capsule the field is untouched bit-for-bit.
        let direct = ScalarField::sample(&grid, &w);
        let p_far = grid.index(&[8, 8, 8]);
        assert_eq!(v.values()[p_far], direct.values()[p_far]);
    }

    #[test]
    fn overlapping_capsules_are_rejected() {
        let grid = Grid::new(&[16, 16, 16]).unwrap();
        let w = morse_generator(&grid, 0.5);
        let mv1 = PointMove {
            from: vec![0.0, 0.0, 0.0],
            to: vec![1.0, 0.0, 0.0],
            core_radius: 0.2,
            outer_radius: 0.8,
        };
        let mv2 = PointMove {
            from: vec![1.5, 0.5, 0.0],
            to: vec![2.0, 1.0, 0.0],
            core_radius: 0.2,
            outer_radius: 0.8,
        };
        let out = pull_back(&grid, &w, &[mv1, mv2], 16);
        assert!(matches!(out, Err(Error::Seed(_))));
    }

    #[test]
    fn oversized_capsule_is_rejected() {
        let grid = Grid::new(&[16, 16, 16]).unwrap();
        let w = morse_generator(&grid, 0.5);
        let mv = PointMove {
            from: vec![0.0, 0.0, 0.0],
            to: vec![3.0, 0.0, 0.0],
            core_radius: 0.5,
            outer_radius: 2.0,
        };
        assert!(matches!(
            pull_back(&grid, &w, &[mv], 16),
            Err(Error::Seed(_))
        ));
    }

    #[test]
    fn structure_vector_tends_to_interior_limit() {
        // ϱ = −1, γ = 1 (scale-free curvature combination in dimension 3).
        let near = structure_vector(3, -1.0, 1.0, 1.0, -1.0);
        let far = structure_vector(3, -1.0, 1.0, 8.0, -1.0);
        assert!(in_cone(&near, 2, 0.0));
        assert!(in_cone(&far, 2, 0.0));
        // Large N approaches (1, 1, 1 − ϱ) = (1, 1, 2).
        assert!((far[0] - 1.0).abs() < 1e-3);
        assert!((far[2] - 2.0).abs() < 1e-3);
        // Ceiling −2 damps the correction twice as fast.
        let lower = structure_vector(3, -1.0, 1.0, 1.0, -2.0);
        assert!(lower[0] < near[0]);
    }

    /// Wide-bump configuration: background b(x)·δ whose eigenvalues are
    /// weakly admissible everywhere and degenerate exactly at the landscape
    /// minimum, where the Hessian block carries the seed.
    fn wide_bump_ctx(grid: &Arc<Grid>, c0: f64) -> OperatorContext {
        wide_bump_context(grid, c0, 2, -1.0, 0.0).unwrap()
    }

    #[test]
    fn escalation_finds_admissible_seed_for_wide_bump_background() {
        let grid = Grid::new(&[16, 16, 16]).unwrap();
        let ctx = wide_bump_ctx(&grid, 0.2);
        let w = morse_generator(&grid, 0.05);
        let v = ScalarField::sample(&grid, &w);
        let cfg = SeedConfig::default();
        let (u, report) = escalate(&ctx, &v, &cfg).unwrap();
        assert!(report.min_margin >= cfg.margin);
        assert!(report.amplitude_used <= 4.0, "needed N = {}", report.amplitude_used);
        assert!(report.pocket_points > 0);
        assert!(report.structure_margin > 0.0);
        // The degenerate pocket sits at the landscape minimum: carried by
        // the Hessian block, so min |∇v|² there is ~0.
        assert!(report.pocket_min_grad_sq < 1e-3);
        // u = e^{Nv} is small and positive.
        assert!(u.min() > 0.0);
        assert!(u.values().iter().all(|&x| x < 1.0));
        // The accepted seed really evaluates as admissible.
        let eval = ctx.evaluate(&u).unwrap();
        assert!(eval.min_margin >= cfg.margin);
    }

    #[test]
    fn escalation_reports_failure_when_background_is_hopeless() {
        let grid = Grid::new(&[8, 8, 8]).unwrap();
        let metric = MetricField::flat(&grid);
        let cone = ConeSpec::gamma_k_with_budget(3, 2, 30_000, 1).unwrap();
        let params = validate_params(&cone, -1.0, 0.0).unwrap();
        // Strongly inadmissible background: one large negative eigenvalue.
        let mut a = SymTensorField::zeros(&grid);
        for p in 0..grid.len() {
            a.set(p, 0, 0, -5.0);
            a.set(p, 1, 1, 1.0);
            a.set(p, 2, 2, 1.0);
        }
        let psi = ScalarField::constant(&grid, 1.0);
        let ctx = OperatorContext::with_reduced_tensor(metric, a, params, psi).unwrap();
        let w = morse_generator(&grid, 0.05);
        let v = ScalarField::sample(&grid, &w);
        let out = escalate(&ctx, &v, &SeedConfig::default());
        assert!(matches!(out, Err(Error::Seed(_))));
    }
}
