//! Three-term decomposition of the centred density smoother.
//!
//! Writing `F̂_n - F = (1 - F)(A_n - B_n) + r_1n` with
//! `A_n(t) = ∫_0^t dF_{*n}/(1 - L) - H(t)` and
//! `B_n(t) = ∫_0^t (1 - L_n) dF_*/(1 - L)^2 - H(t)`, integration by parts
//! gives `f_n - f̄_n = -I1 + I2 - I3` where
//! `I_j(x) = b^-1 ∫ phi_j(t) d_t k((x - t)/b)` and
//! `phi_1 = (1 - F) A_n`, `phi_2 = (1 - F) B_n`, `phi_3 = r_1n`.
//!
//! The `dk` integrals are computed numerically: the window of each grid
//! point is split at every observation and at the kernel's breakpoints, so
//! each `phi_j` is smooth on every piece and a low-order Gauss rule is
//! accurate; endpoint jumps of the uniform kernel enter as atoms.

use crate::error::Result;
use crate::estimators::{kaplan_meier, sub_dist_empirical};
use crate::kernel::{smooth_stieltjes_many, smooth_true, Kernel, SmoothTarget};
use crate::oracle::ParametricModel;
use crate::quadrature::{GL2_NODES, GL2_WEIGHTS, GL5_NODES, GL5_WEIGHTS};
use crate::sample::{CensoredSample, EvaluationGrid};

/// Pieces narrower than this (in kernel units) use the two-point rule.
const NARROW_PIECE: f64 = 0.05;

/// Pointwise proof terms on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProofTerms {
    pub points: Vec<f64>,
    pub i1: Vec<f64>,
    pub i2: Vec<f64>,
    pub i3: Vec<f64>,
    /// `I1 + (f*_n - E f*_n) / (1 - G)`
    pub i1_residual: Vec<f64>,
    /// `f_n - f̄_n` from the Stieltjes sum and the smoothed model density.
    pub direct: Vec<f64>,
}

/// Sup norms of the proof terms over the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProofTermSups {
    pub i1_residual: f64,
    pub i2: f64,
    pub i3: f64,
}

fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

impl ProofTerms {
    pub fn sups(&self) -> ProofTermSups {
        ProofTermSups {
            i1_residual: sup_abs(&self.i1_residual),
            i2: sup_abs(&self.i2),
            i3: sup_abs(&self.i3),
        }
    }

    /// `max |(-I1 + I2 - I3) - (f_n - f̄_n)|` over the grid.
    pub fn reconstruction_error(&self) -> f64 {
        (0..self.points.len())
            .map(|k| (-self.i1[k] + self.i2[k] - self.i3[k] - self.direct[k]).abs())
            .fold(0.0, f64::max)
    }
}

/// Prefix tables over the order statistics up to `t_max`.
struct Tables<'a> {
    model: &'a ParametricModel,
    closed_form: bool,
    n: f64,
    xs: &'a [f64],
    /// `F̂_n` after the first `i` order statistics
    km: Vec<f64>,
    /// sum of `1/(1 - L)` over events among the first `i`
    ev_inv: Vec<f64>,
    /// `A(X_(i))`, with `X_(0) = 0`
    a_obs: Vec<f64>,
    /// `∫_0^{X_(i)} (1 - L_n) dF_*/(1 - L)^2`
    c: Vec<f64>,
    /// `sum_{k <= i} A(X_(k))`
    pa: Vec<f64>,
}

impl<'a> Tables<'a> {
    fn new(s: &'a CensoredSample, model: &'a ParametricModel, t_max: f64) -> Result<Self> {
        model.check_l_bar(t_max)?;
        let all = s.sorted_x();
        let m = all.partition_point(|&x| x <= t_max);
        let xs = &all[..m];
        let n = s.len();
        let nf = n as f64;
        let mut km = Vec::with_capacity(m + 1);
        let mut ev_inv = Vec::with_capacity(m + 1);
        let mut a_obs = Vec::with_capacity(m + 1);
        let mut c = Vec::with_capacity(m + 1);
        let mut pa = Vec::with_capacity(m + 1);
        km.push(0.0);
        ev_inv.push(0.0);
        a_obs.push(0.0);
        c.push(0.0);
        pa.push(0.0);
        let mut surv = 1.0;
        let mut prev = 0.0;
        for (k, (&x, &d)) in xs.iter().zip(s.sorted_delta()).enumerate() {
            let inv = if d {
                surv *= 1.0 - 1.0 / (n - k) as f64;
                1.0 / model.l_bar(x)
            } else {
                0.0
            };
            km.push(1.0 - surv);
            ev_inv.push(ev_inv[k] + inv);
            let a = a_obs[k] + model.integrate_sub_or_closed(prev, x)?;
            a_obs.push(a);
            c.push(c[k] + (n - k) as f64 / nf * (a - a_obs[k]));
            pa.push(pa[k] + a);
            prev = x;
        }
        Ok(Self {
            model,
            closed_form: model.exponential_rates().is_some(),
            n: nf,
            xs,
            km,
            ev_inv,
            a_obs,
            c,
            pa,
        })
    }

    fn a_at(&self, i: usize, t: f64) -> Result<f64> {
        if self.closed_form {
            self.model.eta_integral(t)
        } else {
            let from = if i == 0 { 0.0 } else { self.xs[i - 1] };
            Ok(self.a_obs[i] + self.model.integrate_sub_or_closed(from, t)?)
        }
    }

    /// `(phi_1, phi_2, phi_3)` at `t > 0` with `i` order statistics below
    /// `t` (or at `t`, for right-continuous values).
    fn phi(&self, i: usize, t: f64) -> Result<[f64; 3]> {
        if t <= 0.0 {
            return Ok([0.0; 3]);
        }
        let st = self.model.lifetime.sf(t);
        let h = self.model.cum_hazard(t)?;
        let a = self.a_at(i, t)?;
        let rest = (self.n - i as f64) / self.n;
        let a_n = self.ev_inv[i] / self.n - h;
        let b_n = self.c[i] + rest * (a - self.a_obs[i]) - h;
        let mean_eta = (self.pa[i] + (self.n - i as f64) * a - self.ev_inv[i]) / self.n;
        let r1 = self.km[i] - self.model.lifetime.cdf(t) + st * mean_eta;
        Ok([st * a_n, st * b_n, r1])
    }
}

impl ParametricModel {
    /// `∫_lo^hi dF_*/(1 - L)^2`.
    fn integrate_sub_or_closed(&self, lo: f64, hi: f64) -> Result<f64> {
        if self.exponential_rates().is_some() {
            Ok(self.eta_integral(hi)? - self.eta_integral(lo)?)
        } else {
            self.integrate_sub(lo, hi, |s| self.l_bar(s).powi(-2))
        }
    }
}

/// `I1, I2, I3` at one point `x`.
fn terms_at(tab: &Tables<'_>, kernel: Kernel, b: f64, x: f64) -> Result<[f64; 3]> {
    let (r, s) = kernel.support();
    let t_lo = (x - b * s).max(0.0);
    let t_hi = x - b * r;
    let mut out = [0.0; 3];
    if t_hi <= 0.0 {
        return Ok(out);
    }
    let first = tab.xs.partition_point(|&v| v <= t_lo);
    let last = tab.xs.partition_point(|&v| v < t_hi);
    let mut breaks: Vec<f64> = Vec::with_capacity(last - first + 6);
    breaks.push(t_lo);
    breaks.extend_from_slice(&tab.xs[first..last]);
    for &u in kernel.breakpoints() {
        let t = x - b * u;
        if t > t_lo && t < t_hi {
            breaks.push(t);
        }
    }
    breaks.push(t_hi);
    breaks.sort_unstable_by(f64::total_cmp);

    // -b^-2 ∫ phi(t) k'((x - t)/b) dt
    let mut i = first;
    let mut acc = [0.0; 3];
    for w in breaks.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        if t1 <= t0 {
            continue;
        }
        while i < tab.xs.len() && tab.xs[i] <= t0 {
            i += 1;
        }
        let (nodes, weights): (&[f64], &[f64]) = if (t1 - t0) / b < NARROW_PIECE {
            (&GL2_NODES, &GL2_WEIGHTS)
        } else {
            (&GL5_NODES, &GL5_WEIGHTS)
        };
        let half = 0.5 * (t1 - t0);
        let mid = 0.5 * (t0 + t1);
        for (&z, &wt) in nodes.iter().zip(weights) {
            let t = mid + half * z;
            let p = tab.phi(i, t)?;
            let dk = wt * half * kernel.derivative((x - t) / b);
            for j in 0..3 {
                acc[j] += p[j] * dk;
            }
        }
    }
    for j in 0..3 {
        out[j] = -acc[j] / (b * b);
    }
    for &(u, jump) in kernel.atoms() {
        let t = x - b * u;
        let i = tab.xs.partition_point(|&v| v <= t);
        let p = tab.phi(i, t)?;
        for j in 0..3 {
            out[j] -= jump * p[j] / b;
        }
    }
    Ok(out)
}

/// Computes `I1`, `I2`, `I3`, the `I1` residual and `f_n - f̄_n` (density-F
/// centring) at every grid point.
pub fn proof_terms(
    s: &CensoredSample,
    model: &ParametricModel,
    kernel: Kernel,
    b: f64,
    grid: &EvaluationGrid,
) -> Result<ProofTerms> {
    let points = grid.points().to_vec();
    let (r, _) = kernel.support();
    let t_max = grid.tau() - b * r;
    let tab = Tables::new(s, model, t_max)?;
    let fit = kaplan_meier(s);
    let f_n = smooth_stieltjes_many(&fit.distribution(), kernel, b, &points)?;
    let f_star = smooth_stieltjes_many(&sub_dist_empirical(s), kernel, b, &points)?;
    let m = points.len();
    let mut out = ProofTerms {
        points: Vec::with_capacity(m),
        i1: Vec::with_capacity(m),
        i2: Vec::with_capacity(m),
        i3: Vec::with_capacity(m),
        i1_residual: Vec::with_capacity(m),
        direct: Vec::with_capacity(m),
    };
    for (k, &x) in points.iter().enumerate() {
        let [i1, i2, i3] = terms_at(&tab, kernel, b, x)?;
        let e_star = smooth_true(model, SmoothTarget::DensityFstar, kernel, b, x)?;
        let f_bar = smooth_true(model, SmoothTarget::DensityF, kernel, b, x)?;
        out.i1.push(i1);
        out.i2.push(i2);
        out.i3.push(i3);
        out.i1_residual.push(i1 + (f_star[k] - e_star) / model.censoring.sf(x));
        out.direct.push(f_n[k] - f_bar);
    }
    out.points = points;
    Ok(out)
}

/// Sup norms of `I1 + (f*_n - E f*_n)/(1 - G)`, `I2` and `I3` over the grid.
pub fn proof_term_diagnostics(
    s: &CensoredSample,
    model: &ParametricModel,
    kernel: Kernel,
    b: f64,
    grid: &EvaluationGrid,
) -> Result<ProofTermSups> {
    Ok(proof_terms(s, model, kernel, b, grid)?.sups())
}
