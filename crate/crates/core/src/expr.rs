//! Closed-form field generators: small expression trees over the grid
//! coordinates built from sin, cos, exp and polynomials.
//!
//! A field backed by a generator can be resampled exactly on a refined grid,
//! which is what makes the convergence studies honest: the coarse and fine
//! fields are evaluations of one function, not interpolants of each other.
//! Symbolic differentiation supplies analytic derivative oracles for the
//! stencil tests and analytic right-hand sides for manufactured solutions.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub enum Expr {
    Const(f64),
    /// Coordinate x_a.
    Coord(usize),
    Add(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    /// Integer power, exponent >= 0.
    Pow(Arc<Expr>, u32),
    Sin(Arc<Expr>),
    Cos(Arc<Expr>),
    Exp(Arc<Expr>),
}

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn coord(axis: usize) -> Expr {
        Expr::Coord(axis)
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Arc::new(a), Arc::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::add(a, Expr::scale(-1.0, b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Arc::new(a), Arc::new(b))
    }

    pub fn scale(c: f64, a: Expr) -> Expr {
        Expr::mul(Expr::Const(c), a)
    }

    pub fn pow(a: Expr, k: u32) -> Expr {
        Expr::Pow(Arc::new(a), k)
    }

    pub fn sin(a: Expr) -> Expr {
        Expr::Sin(Arc::new(a))
    }

    pub fn cos(a: Expr) -> Expr {
        Expr::Cos(Arc::new(a))
    }

    pub fn exp(a: Expr) -> Expr {
        Expr::Exp(Arc::new(a))
    }

    /// sin(k * 2*pi/L * x_axis), periodic on period L.
    pub fn sin_wave(axis: usize, k: u32, period: f64) -> Expr {
        let freq = k as f64 * 2.0 * std::f64::consts::PI / period;
        Expr::sin(Expr::scale(freq, Expr::coord(axis)))
    }

    pub fn cos_wave(axis: usize, k: u32, period: f64) -> Expr {
        let freq = k as f64 * 2.0 * std::f64::consts::PI / period;
        Expr::cos(Expr::scale(freq, Expr::coord(axis)))
    }

    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
        let mut it = terms.into_iter();
        let first = it.next().unwrap_or(Expr::Const(0.0));
        it.fold(first, Expr::add)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Coord(a) => x[*a],
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Pow(a, k) => a.eval(x).powi(*k as i32),
            Expr::Sin(a) => a.eval(x).sin(),
            Expr::Cos(a) => a.eval(x).cos(),
            Expr::Exp(a) => a.eval(x).exp(),
        }
    }

    /// Partial derivative with respect to x_axis, as an expression.
    pub fn diff(&self, axis: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Coord(a) => Expr::Const(if *a == axis { 1.0 } else { 0.0 }),
            Expr::Add(a, b) => Expr::add(a.diff(axis), b.diff(axis)),
            Expr::Mul(a, b) => Expr::add(
                Expr::Mul(Arc::new(a.diff(axis)), b.clone()),
                Expr::Mul(a.clone(), Arc::new(b.diff(axis))),
            ),
            Expr::Pow(a, k) => {
                if *k == 0 {
                    Expr::Const(0.0)
                } else {
                    Expr::mul(
                        Expr::scale(*k as f64, Expr::Pow(a.clone(), k - 1)),
                        a.diff(axis),
                    )
                }
            }
            Expr::Sin(a) => Expr::mul(Expr::Cos(a.clone()), a.diff(axis)),
            Expr::Cos(a) => Expr::mul(Expr::scale(-1.0, Expr::Sin(a.clone())), a.diff(axis)),
            Expr::Exp(a) => Expr::mul(Expr::Exp(a.clone()), a.diff(axis)),
        }
    }
}

/// Random smooth periodic function: a sum of `terms` products of low-frequency
/// waves, one wave factor per axis, scaled to have amplitude ~ `amplitude`.
pub fn random_periodic(rng: &mut ChaCha8Rng, periods: &[f64], terms: usize, amplitude: f64) -> Expr {
    let n = periods.len();
    let mut parts = Vec::with_capacity(terms);
    for _ in 0..terms {
        let coeff = amplitude / terms as f64 * rng.gen_range(0.5..1.5)
            * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let mut factor = Expr::Const(coeff);
        for (axis, &period) in periods.iter().enumerate() {
            let k = rng.gen_range(1..=2u32);
            let wave = if rng.gen_bool(0.5) {
                Expr::sin_wave(axis, k, period)
            } else {
                Expr::cos_wave(axis, k, period)
            };
            // Skipping axes keeps some terms lower-dimensional.
            if rng.gen_bool(0.25) && n > 1 {
                continue;
            }
            factor = Expr::mul(factor, wave);
        }
        parts.push(factor);
    }
    Expr::sum(parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    #[test]
    fn eval_matches_closed_form() {
        // e^{x} * sin(2y) + z^3
        let e = Expr::add(
            Expr::mul(
                Expr::exp(Expr::coord(0)),
                Expr::sin(Expr::scale(2.0, Expr::coord(1))),
            ),
            Expr::pow(Expr::coord(2), 3),
        );
        let x = [0.3, 1.1, -0.4];
        let want = (0.3f64).exp() * (2.2f64).sin() + (-0.4f64).powi(3);
        assert_relative_eq!(e.eval(&x), want, max_relative = 1e-15);
    }

    #[test]
    fn diff_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let e = random_periodic(&mut rng, &[2.0 * std::f64::consts::PI; 3], 4, 1.0);
        let d0 = e.diff(0);
        let x = [0.7, 1.9, 4.2];
        let h = 1e-6;
        let mut xp = x;
        let mut xm = x;
        xp[0] += h;
        xm[0] -= h;
        let fd = (e.eval(&xp) - e.eval(&xm)) / (2.0 * h);
        assert_relative_eq!(d0.eval(&x), fd, max_relative = 1e-8, epsilon = 1e-10);
    }

    #[test]
    fn second_derivatives_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let e = random_periodic(&mut rng, &[2.0 * std::f64::consts::PI; 3], 5, 0.8);
        let dxy = e.diff(0).diff(1);
        let dyx = e.diff(1).diff(0);
        let x = [5.1, 0.2, 2.8];
        assert_relative_eq!(dxy.eval(&x), dyx.eval(&x), max_relative = 1e-12, epsilon = 1e-14);
    }
}
