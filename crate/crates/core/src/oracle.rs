//! Population quantities of a simulation model: `F_*`, `L`, `H`, `h`, the
//! influence function `eta` and the strong-representation remainders.
//!
//! Closed forms are used when both marginals are exponential; otherwise
//! integrals against `dF_* = (1 - G) dF` are computed by adaptive quadrature
//! split at the support endpoints of both marginals.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::estimators::{kaplan_meier, KmFit};
use crate::generate::Marginal;
use crate::quadrature::{integrate_pieces, MAX_EVALS, ORACLE_TOL};
use crate::sample::{CensoredSample, EvaluationGrid, Side};

/// Smallest `1 - L` tolerated inside oracle integrals.
pub const MIN_L_BAR: f64 = 1e-12;

/// True `(F, G)` pair of a censoring simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParametricModel {
    /// Distribution `F` of the lifetimes `T_i`.
    pub lifetime: Marginal,
    /// Distribution `G` of the censoring times `Y_i`.
    pub censoring: Marginal,
}

impl ParametricModel {
    pub fn new(lifetime: Marginal, censoring: Marginal) -> Result<Self> {
        lifetime.validate()?;
        censoring.validate()?;
        Ok(Self { lifetime, censoring })
    }

    pub(crate) fn exponential_rates(&self) -> Option<(f64, f64)> {
        match (self.lifetime, self.censoring) {
            (Marginal::Exponential { rate: a }, Marginal::Exponential { rate: b }) => Some((a, b)),
            _ => None,
        }
    }

    /// `tau_L = tau_F ∧ tau_G`.
    pub fn tau_l(&self) -> f64 {
        self.lifetime.support().1.min(self.censoring.support().1)
    }

    /// `L(t) = 1 - (1 - F(t))(1 - G(t))`, the distribution of `X`.
    pub fn l(&self, t: f64) -> f64 {
        1.0 - self.l_bar(t)
    }

    /// `1 - L(t) = S_T(t) S_Y(t)`.
    pub fn l_bar(&self, t: f64) -> f64 {
        self.lifetime.sf(t) * self.censoring.sf(t)
    }

    /// Density of the sub-distribution, `(1 - G) f`.
    pub fn sub_density(&self, t: f64) -> f64 {
        self.censoring.sf(t) * self.lifetime.pdf(t)
    }

    fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let (a1, b1) = self.lifetime.support();
        let (a2, b2) = self.censoring.support();
        let mut v = vec![lo, hi];
        v.extend([a1, b1, a2, b2].into_iter().filter(|&p| p > lo && p < hi));
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// `∫_lo^hi w(s) dF_*(s)` by quadrature.
    pub fn integrate_sub(&self, lo: f64, hi: f64, w: impl Fn(f64) -> f64) -> Result<f64> {
        if hi <= lo {
            return Ok(0.0);
        }
        integrate_pieces(
            |s| w(s) * self.sub_density(s),
            &self.breakpoints(lo, hi),
            ORACLE_TOL,
            MAX_EVALS,
        )
    }

    /// `F_*(t) = P(X <= t, delta = 1) = ∫_0^t S_Y dF`.
    pub fn sub_dist(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        if let Some((a, b)) = self.exponential_rates() {
            return Ok(a / (a + b) * -(-(a + b) * t).exp_m1());
        }
        self.integrate_sub(0.0, t, |_| 1.0)
    }

    /// `H(t) = ∫_0^t dF_*/S_X = -ln(1 - F(t))`.
    pub fn cum_hazard(&self, t: f64) -> Result<f64> {
        if self.lifetime.cdf(t) >= 1.0 {
            return invalid(format!("cumulative hazard undefined where F(t) = 1 (t = {t})"));
        }
        Ok(self.lifetime.cum_hazard(t))
    }

    /// `H(t)` by direct quadrature of `dF_* / (1 - L)`.
    pub fn cum_hazard_quadrature(&self, t: f64) -> Result<f64> {
        self.check_l_bar(t)?;
        self.integrate_sub(0.0, t, |s| 1.0 / self.l_bar(s))
    }

    pub fn hazard(&self, t: f64) -> f64 {
        self.lifetime.hazard(t)
    }

    pub(crate) fn check_l_bar(&self, u: f64) -> Result<()> {
        if self.l_bar(u) <= MIN_L_BAR {
            return invalid(format!("1 - L({u}) <= {MIN_L_BAR}: beyond the observable range"));
        }
        Ok(())
    }

    /// `A(u) = ∫_0^u dF_*(s) / (1 - L(s))^2`, the first term of `eta`.
    pub fn eta_integral(&self, u: f64) -> Result<f64> {
        if u <= 0.0 {
            return Ok(0.0);
        }
        self.check_l_bar(u)?;
        if let Some((a, b)) = self.exponential_rates() {
            // integrand a e^{(a+b)s}
            return Ok(a / (a + b) * ((a + b) * u).exp_m1());
        }
        self.integrate_sub(0.0, u, |s| self.l_bar(s).powi(-2))
    }

    /// `eta(x, t, delta) = ∫_0^{x∧t} dF_*/(1-L)^2 - I(x <= t, delta = 1)/(1 - L(x))`.
    pub fn eta(&self, x: f64, t: f64, delta: bool) -> Result<f64> {
        let first = self.eta_integral(x.min(t))?;
        if x <= t && delta {
            Ok(first - 1.0 / self.l_bar(x))
        } else {
            Ok(first)
        }
    }

    /// `tau` with `L(tau) = q`.
    pub fn tau_for_quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return invalid(format!("tau quantile must lie in (0, 1), got {q}"));
        }
        if let Some((a, b)) = self.exponential_rates() {
            return Ok(-(-q).ln_1p() / (a + b));
        }
        let mut lo = 0.0f64;
        let mut hi = self.tau_l();
        if !hi.is_finite() {
            hi = 1.0;
            while self.l(hi) < q {
                hi *= 2.0;
                if hi > 1e300 {
                    return invalid("could not bracket the tau quantile");
                }
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.l(mid) < q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// `n^-1 sum_i eta(X_i, t, delta_i)` for every `t <= t_max`, evaluated in
/// `O(log n)` per point from prefix sums over the order statistics.
#[derive(Debug, Clone)]
pub struct EtaMean {
    sorted_x: Vec<f64>,
    /// prefix sums of `A(X_(i))` over observations below `t_max`
    prefix_a: Vec<f64>,
    /// sorted uncensored times
    events: Vec<f64>,
    /// prefix sums of `1 / (1 - L(X))` over `events`
    prefix_inv: Vec<f64>,
    t_max: f64,
    n: f64,
    model: ParametricModel,
}

impl EtaMean {
    pub fn new(s: &CensoredSample, model: &ParametricModel, t_max: f64) -> Result<Self> {
        model.check_l_bar(t_max)?;
        let sorted_x = s.sorted_x().to_vec();
        let below = sorted_x.partition_point(|&x| x < t_max);
        let mut prefix_a = Vec::with_capacity(below + 1);
        prefix_a.push(0.0);
        let mut acc = 0.0;
        if model.exponential_rates().is_some() {
            for &x in &sorted_x[..below] {
                acc += model.eta_integral(x)?;
                prefix_a.push(acc);
            }
        } else {
            // accumulate A along the order statistics one gap at a time
            let mut a_prev = 0.0;
            let mut x_prev = 0.0;
            for &x in &sorted_x[..below] {
                a_prev += model.integrate_sub(x_prev, x, |u| model.l_bar(u).powi(-2))?;
                x_prev = x;
                acc += a_prev;
                prefix_a.push(acc);
            }
        }
        let events: Vec<f64> = s.event_times().take_while(|&x| x <= t_max).collect();
        let mut prefix_inv = Vec::with_capacity(events.len() + 1);
        prefix_inv.push(0.0);
        let mut acc = 0.0;
        for &x in &events {
            acc += 1.0 / model.l_bar(x);
            prefix_inv.push(acc);
        }
        Ok(Self {
            sorted_x,
            prefix_a,
            events,
            prefix_inv,
            t_max,
            n: s.len() as f64,
            model: *model,
        })
    }

    /// Value at `t` (right limit for `Side::Right`, left limit for
    /// `Side::Left`; only the indicator term is discontinuous).
    pub fn eval(&self, t: f64, side: Side) -> Result<f64> {
        if t > self.t_max {
            return invalid(format!("t = {t} exceeds the precomputed range {}", self.t_max));
        }
        let below = self.sorted_x.partition_point(|&x| x < t);
        let a_t = self.model.eta_integral(t)?;
        let first = self.prefix_a[below] + (self.sorted_x.len() - below) as f64 * a_t;
        let k = match side {
            Side::Right => self.events.partition_point(|&x| x <= t),
            Side::Left => self.events.partition_point(|&x| x < t),
        };
        Ok((first - self.prefix_inv[k]) / self.n)
    }
}

/// Which strong-representation remainder to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Remainder {
    /// `r_1n = F̂_n - F + S_T n^-1 sum eta`
    Distribution,
    /// `r_2n = Ĥ_n - H + n^-1 sum eta`
    CumHazard,
}

/// Remainder evaluator reusing one fit and one [`EtaMean`].
#[derive(Debug, Clone)]
pub struct RemainderEval {
    fit: KmFit,
    eta: EtaMean,
    model: ParametricModel,
}

impl RemainderEval {
    pub fn new(s: &CensoredSample, model: &ParametricModel, t_max: f64) -> Result<Self> {
        Ok(Self {
            fit: kaplan_meier(s),
            eta: EtaMean::new(s, model, t_max)?,
            model: *model,
        })
    }

    pub fn eval(&self, which: Remainder, t: f64, side: Side) -> Result<f64> {
        let eta = self.eta.eval(t, side)?;
        Ok(match which {
            Remainder::Distribution => {
                let surv = match side {
                    Side::Right => self.fit.survival.right_limit(t),
                    Side::Left => self.fit.survival.left_limit(t),
                };
                (1.0 - surv) - self.model.lifetime.cdf(t) + self.model.lifetime.sf(t) * eta
            }
            Remainder::CumHazard => {
                let h = match side {
                    Side::Right => self.fit.cumhaz.right_limit(t),
                    Side::Left => self.fit.cumhaz.left_limit(t),
                };
                h - self.model.cum_hazard(t)? + eta
            }
        })
    }

    pub fn fit(&self) -> &KmFit {
        &self.fit
    }
}

/// `r_1n` or `r_2n` at every grid point (right-continuous values).
pub fn remainder_r(
    s: &CensoredSample,
    model: &ParametricModel,
    which: Remainder,
    grid: &EvaluationGrid,
) -> Result<Vec<f64>> {
    let eval = RemainderEval::new(s, model, grid.tau())?;
    grid.points()
        .iter()
        .map(|&t| eval.eval(which, t, Side::Right))
        .collect()
}

/// Right-hand side of the identity
/// `-n^-1 sum eta(X_i, t, delta_i) = ∫_0^t dF_{*n}/(1-L) - ∫_0^t (1-L_n)/(1-L)^2 dF_*`,
/// computed from the empirical carriers and quadrature, independently of
/// [`ParametricModel::eta`].
pub fn remark2_rhs(s: &CensoredSample, model: &ParametricModel, t: f64) -> Result<f64> {
    model.check_l_bar(t)?;
    let n = s.len() as f64;
    let first: f64 = s
        .x()
        .iter()
        .zip(s.delta())
        .filter(|(&x, &d)| d && x <= t)
        .map(|(&x, _)| 1.0 / model.l_bar(x))
        .sum::<f64>()
        / n;
    // 1 - L_n is constant between consecutive distinct observations
    let mut knots: Vec<f64> = s.sorted_x().iter().copied().filter(|&x| x < t).collect();
    knots.dedup();
    let mut second = 0.0;
    let mut lo = 0.0;
    let mut at_risk = s.len();
    let mut idx = 0;
    let sorted = s.sorted_x();
    for hi in knots.into_iter().chain(std::iter::once(t)) {
        if hi > lo {
            let piece = model.integrate_sub(lo, hi, |u| model.l_bar(u).powi(-2))?;
            second += at_risk as f64 / n * piece;
        }
        while idx < sorted.len() && sorted[idx] <= hi {
            idx += 1;
        }
        at_risk = sorted.len() - idx;
        lo = hi;
    }
    Ok(first - second)
}
