//! Adaptive Simpson and fixed Gauss-Legendre rules shared by the smoothing
//! and oracle code.

use crate::error::{Error, Result};

/// Absolute tolerance used for smoothed model quantities.
pub const SMOOTH_TOL: f64 = 1e-8;
/// Absolute tolerance used for oracle integrals such as `F_*`.
pub const ORACLE_TOL: f64 = 1e-10;
/// Function-evaluation budget per adaptive integral.
pub const MAX_EVALS: usize = 100_000;

const MAX_DEPTH: u32 = 48;

struct Simpson<'a, F> {
    f: &'a F,
    evals: usize,
    max_evals: usize,
    err: f64,
}

impl<F: Fn(f64) -> f64> Simpson<'_, F> {
    #[allow(clippy::too_many_arguments)]
    fn refine(&mut self, a: f64, fa: f64, m: f64, fm: f64, b: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = (self.f)(lm);
        let frm = (self.f)(rm);
        self.evals += 2;
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth >= MAX_DEPTH || self.evals >= self.max_evals || delta.abs() <= 15.0 * tol {
            self.err += delta.abs() / 15.0;
            return left + right + delta / 15.0;
        }
        self.refine(a, fa, lm, flm, m, fm, left, 0.5 * tol, depth + 1)
            + self.refine(m, fm, rm, frm, b, fb, right, 0.5 * tol, depth + 1)
    }
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// The interval is pre-split into four panels so that narrow features are
/// not skipped by the first Simpson estimate. Fails with
/// [`Error::Quadrature`] when the accumulated error estimate exceeds `tol`,
/// which happens when the evaluation budget runs out first.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, max_evals: usize) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut s = Simpson {
        f: &f,
        evals: 0,
        max_evals,
        err: 0.0,
    };
    const PANELS: usize = 4;
    let h = (b - a) / PANELS as f64;
    let mut total = 0.0;
    for i in 0..PANELS {
        let lo = a + h * i as f64;
        let hi = if i + 1 == PANELS { b } else { a + h * (i + 1) as f64 };
        let mid = 0.5 * (lo + hi);
        let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
        s.evals += 3;
        let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
        total += s.refine(lo, flo, mid, fmid, hi, fhi, whole, tol / PANELS as f64, 0);
    }
    // refinement stops at the depth or budget limit; a panel that stopped
    // early shows up in the accumulated error estimate
    if s.err > tol || !total.is_finite() {
        return Err(Error::Quadrature {
            estimate: total,
            error_estimate: s.err,
        });
    }
    Ok(total)
}

/// Integrates over consecutive pieces `[breaks[i], breaks[i+1]]`, splitting
/// the tolerance evenly. Used when the integrand has known kinks or jumps.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, breaks: &[f64], tol: f64, max_evals: usize) -> Result<f64> {
    let pieces = breaks.len().saturating_sub(1).max(1);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            total += adaptive_simpson(&f, w[0], w[1], tol / pieces as f64, max_evals)?;
        }
    }
    Ok(total)
}

pub const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
pub const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Five-point Gauss-Legendre rule on `[a, b]`; exact for polynomials of
/// degree nine.
pub fn gauss_legendre5<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL5_NODES
        .iter()
        .zip(&GL5_WEIGHTS)
        .map(|(&x, &w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

pub const GL2_NODES: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];
pub const GL2_WEIGHTS: [f64; 2] = [1.0, 1.0];

/// Two-point Gauss-Legendre rule on `[a, b]`; exact for cubics.
pub fn gauss_legendre2<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL2_NODES.iter().map(|&x| f(mid + half * x)).sum::<f64>() * half
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_exponential() {
        let v = adaptive_simpson(|x: f64| x.exp(), 0.0, 1.0, 1e-12, MAX_EVALS).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn simpson_reports_budget_exhaustion() {
        let err = adaptive_simpson(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, 1e-14, 200).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }

    #[test]
    fn gauss_legendre_polynomial_exact() {
        let v = gauss_legendre5(|x| x.powi(9) + 3.0 * x.powi(4), -1.0, 2.0);
        let exact = (2f64.powi(10) - 1.0) / 10.0 + 3.0 * (2f64.powi(5) + 1.0) / 5.0;
        assert!((v - exact).abs() < 1e-11);
    }

    #[test]
    fn gauss_legendre2_cubic_exact() {
        let v = gauss_legendre2(|x| x * x * x - 2.0 * x * x, 0.0, 3.0);
        assert!((v - (81.0 / 4.0 - 18.0)).abs() < 1e-12);
    }

    #[test]
    fn pieces_handle_kinks() {
        let v = integrate_pieces(|x: f64| x.abs(), &[-1.0, 0.0, 2.0], 1e-12, MAX_EVALS).unwrap();
        assert!((v - 2.5).abs() < 1e-12);
    }
}
