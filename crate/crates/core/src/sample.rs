//! Shared domain types: censored samples, step functions and evaluation grids.

use crate::error::{invalid, Result};

/// A right-censored sample `(x_i, delta_i)` with `x_i = min(t_i, y_i)` and
/// `delta_i = 1` when the lifetime was observed.
///
/// The sorted view orders observations by time; at equal times the uncensored
/// entries come first, so a censored tie is still at risk when the tied
/// events are processed.
#[derive(Debug, Clone, PartialEq)]
pub struct CensoredSample {
    x: Vec<f64>,
    delta: Vec<bool>,
    order: Vec<usize>,
    sorted_x: Vec<f64>,
    sorted_delta: Vec<bool>,
}

impl CensoredSample {
    /// Builds the observed sample from lifetimes `t` and censoring times `y`.
    pub fn from_lifetimes(t: &[f64], y: &[f64]) -> Result<Self> {
        if t.len() != y.len() {
            return invalid(format!(
                "lifetime/censoring length mismatch: {} vs {}",
                t.len(),
                y.len()
            ));
        }
        check_times(t, "lifetimes")?;
        check_times(y, "censoring times")?;
        let x = t.iter().zip(y).map(|(&a, &b)| a.min(b)).collect();
        let delta = t.iter().zip(y).map(|(&a, &b)| a <= b).collect();
        Self::from_observed(x, delta)
    }

    pub fn from_observed(x: Vec<f64>, delta: Vec<bool>) -> Result<Self> {
        if x.len() != delta.len() {
            return invalid(format!("times/status length mismatch: {} vs {}", x.len(), delta.len()));
        }
        check_times(&x, "observed times")?;
        let mut order: Vec<usize> = (0..x.len()).collect();
        // uncensored before censored at equal times
        order.sort_by(|&i, &j| x[i].total_cmp(&x[j]).then(delta[j].cmp(&delta[i])));
        let sorted_x = order.iter().map(|&i| x[i]).collect();
        let sorted_delta = order.iter().map(|&i| delta[i]).collect();
        Ok(Self {
            x,
            delta,
            order,
            sorted_x,
            sorted_delta,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    /// Always false: samples hold at least one observation.
    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn delta(&self) -> &[bool] {
        &self.delta
    }

    /// Permutation giving the order statistics: `x[order[k]]` is `X_(k+1)`.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Order statistics `X_(1) <= ... <= X_(n)`.
    pub fn sorted_x(&self) -> &[f64] {
        &self.sorted_x
    }

    /// Concomitants `delta_(k)` of the order statistics.
    pub fn sorted_delta(&self) -> &[bool] {
        &self.sorted_delta
    }

    pub fn uncensored_count(&self) -> usize {
        self.delta.iter().filter(|&&d| d).count()
    }

    pub fn censored_fraction(&self) -> f64 {
        1.0 - self.uncensored_count() as f64 / self.len() as f64
    }

    /// Sorted uncensored observation times, with multiplicity.
    pub fn event_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.sorted_x
            .iter()
            .zip(&self.sorted_delta)
            .filter(|(_, &d)| d)
            .map(|(&x, _)| x)
    }
}

fn check_times(v: &[f64], what: &str) -> Result<()> {
    if v.is_empty() {
        return invalid(format!("{what} must be non-empty"));
    }
    if let Some(bad) = v.iter().find(|t| !t.is_finite() || **t < 0.0) {
        return invalid(format!("{what} must be finite and >= 0, got {bad}"));
    }
    Ok(())
}

/// Which one-sided limit a step function takes at its knots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `f(t) = f(t-)`: jumps at `t` are not yet included.
    Left,
    /// `f(t) = f(t+)`: jumps at `t` are included.
    Right,
}

/// Piecewise-constant function with finitely many knots.
///
/// Values are stored directly (not re-accumulated from jumps), so products
/// such as the Kaplan-Meier survival curve are represented exactly as
/// computed.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    base: f64,
    knots: Vec<f64>,
    values: Vec<f64>,
    side: Side,
}

impl StepFunction {
    /// Builds a step function from jump locations and sizes. Knots must be
    /// nondecreasing; exact duplicates are merged by summing their jumps.
    pub fn from_jumps(base: f64, knots: &[f64], jumps: &[f64], side: Side) -> Result<Self> {
        if knots.len() != jumps.len() {
            return invalid("knots/jumps length mismatch");
        }
        if knots.iter().chain(jumps).any(|v| !v.is_finite()) || !base.is_finite() {
            return invalid("step function entries must be finite");
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return invalid("knots must be nondecreasing");
        }
        let mut merged_knots: Vec<f64> = Vec::with_capacity(knots.len());
        let mut values: Vec<f64> = Vec::with_capacity(knots.len());
        let mut acc = base;
        for (&k, &j) in knots.iter().zip(jumps) {
            acc += j;
            if merged_knots.last() == Some(&k) {
                *values.last_mut().unwrap() = acc;
            } else {
                merged_knots.push(k);
                values.push(acc);
            }
        }
        Ok(Self {
            base,
            knots: merged_knots,
            values,
            side,
        })
    }

    /// Builds a step function from strictly increasing knots and the value
    /// taken just after each knot.
    pub fn from_values(base: f64, knots: Vec<f64>, values: Vec<f64>, side: Side) -> Result<Self> {
        if knots.len() != values.len() {
            return invalid("knots/values length mismatch");
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("knots must be strictly increasing");
        }
        if knots.iter().chain(&values).any(|v| !v.is_finite()) || !base.is_finite() {
            return invalid("step function entries must be finite");
        }
        Ok(Self {
            base,
            knots,
            values,
            side,
        })
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Value just after each knot.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(knot, jump)` pairs.
    pub fn jumps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let prev = std::iter::once(self.base).chain(self.values.iter().copied());
        self.knots
            .iter()
            .zip(self.values.iter().zip(prev))
            .map(|(&k, (&v, p))| (k, v - p))
    }

    pub fn total_jump(&self) -> f64 {
        self.values.last().map_or(0.0, |v| v - self.base)
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.jumps().all(|(_, j)| j >= 0.0)
    }

    /// Evaluates at `t` respecting the declared continuity side.
    pub fn eval(&self, t: f64) -> f64 {
        match self.side {
            Side::Left => self.left_limit(t),
            Side::Right => self.right_limit(t),
        }
    }

    /// `f(t-)`: sum of jumps at knots strictly below `t`.
    pub fn left_limit(&self, t: f64) -> f64 {
        self.value_after(self.knots.partition_point(|&k| k < t))
    }

    /// `f(t+)`: sum of jumps at knots at or below `t`.
    pub fn right_limit(&self, t: f64) -> f64 {
        self.value_after(self.knots.partition_point(|&k| k <= t))
    }

    fn value_after(&self, count: usize) -> f64 {
        if count == 0 {
            self.base
        } else {
            self.values[count - 1]
        }
    }

    /// Pointwise `1 - f`, used to switch between survival and distribution
    /// carriers.
    pub fn complement(&self) -> Self {
        Self {
            base: 1.0 - self.base,
            knots: self.knots.clone(),
            values: self.values.iter().map(|v| 1.0 - v).collect(),
            side: self.side,
        }
    }
}

/// Points on `(0, tau]` at which sup-norm statistics are evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationGrid {
    tau: f64,
    points: Vec<f64>,
    includes_sample_points: bool,
}

impl EvaluationGrid {
    /// `m` equispaced points `tau * i / m`, `i = 1..=m`.
    pub fn equispaced(tau: f64, m: usize) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return invalid(format!("tau must be positive and finite, got {tau}"));
        }
        if m == 0 {
            return invalid("grid needs at least one point");
        }
        let points = (1..=m).map(|i| tau * i as f64 / m as f64).collect();
        Ok(Self {
            tau,
            points,
            includes_sample_points: false,
        })
    }

    /// Union of `m` equispaced points and the given sample points that fall
    /// in `(0, tau]`.
    pub fn with_sample_points(tau: f64, m: usize, sample_points: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut grid = Self::equispaced(tau, m)?;
        grid.points
            .extend(sample_points.into_iter().filter(|&p| p > 0.0 && p <= tau));
        grid.points.sort_by(f64::total_cmp);
        grid.points.dedup();
        grid.includes_sample_points = true;
        Ok(grid)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn includes_sample_points(&self) -> bool {
        self.includes_sample_points
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn censoring_definition() {
        let s = CensoredSample::from_lifetimes(&[2.0, 5.0], &[3.0, 4.0]).unwrap();
        assert_eq!(s.x(), &[2.0, 4.0]);
        assert_eq!(s.delta(), &[true, false]);
    }

    #[test]
    fn equal_lifetime_and_censoring_is_uncensored() {
        let s = CensoredSample::from_lifetimes(&[1.0], &[1.0]).unwrap();
        assert_eq!(s.x(), &[1.0]);
        assert_eq!(s.delta(), &[true]);
    }

    #[test]
    fn sorted_view_without_censoring() {
        let s = CensoredSample::from_lifetimes(&[3.0, 1.0, 2.0], &[10.0; 3]).unwrap();
        assert!(s.delta().iter().all(|&d| d));
        assert_eq!(s.sorted_x(), &[1.0, 2.0, 3.0]);
        assert_eq!(s.order(), &[1, 2, 0]);
    }

    #[test]
    fn ties_put_events_first() {
        let s = CensoredSample::from_observed(vec![1.0, 1.0, 0.5], vec![false, true, false]).unwrap();
        assert_eq!(s.sorted_x(), &[0.5, 1.0, 1.0]);
        assert_eq!(s.sorted_delta(), &[false, true, false]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(CensoredSample::from_lifetimes(&[1.0], &[1.0, 2.0]).is_err());
        assert!(CensoredSample::from_lifetimes(&[], &[]).is_err());
        assert!(CensoredSample::from_lifetimes(&[-1.0], &[1.0]).is_err());
        assert!(CensoredSample::from_observed(vec![f64::NAN], vec![true]).is_err());
    }

    #[test]
    fn step_sides() {
        let right = StepFunction::from_jumps(0.0, &[1.0], &[0.5], Side::Right).unwrap();
        let left = StepFunction::from_jumps(0.0, &[1.0], &[0.5], Side::Left).unwrap();
        assert_eq!(right.eval(1.0), 0.5);
        assert_eq!(left.eval(1.0), 0.0);
        assert_eq!(right.eval(0.999), 0.0);
        assert_eq!(left.eval(1.0 + 1e-12), 0.5);
    }

    #[test]
    fn duplicate_knots_merge() {
        let f = StepFunction::from_jumps(0.25, &[1.0, 1.0, 2.0], &[0.25, 0.25, 0.25], Side::Right).unwrap();
        assert_eq!(f.knots(), &[1.0, 2.0]);
        let jumps: Vec<_> = f.jumps().collect();
        assert_eq!(jumps, vec![(1.0, 0.5), (2.0, 0.25)]);
        assert_eq!(f.eval(5.0), 1.0);
    }

    #[test]
    fn step_rejects_unsorted_knots() {
        assert!(StepFunction::from_jumps(0.0, &[2.0, 1.0], &[1.0, 1.0], Side::Right).is_err());
        assert!(StepFunction::from_values(0.0, vec![1.0, 1.0], vec![1.0, 2.0], Side::Right).is_err());
    }

    #[test]
    fn grid_union() {
        let g = EvaluationGrid::with_sample_points(1.0, 4, [0.3, 0.5, 2.0, 0.0]).unwrap();
        assert_eq!(g.points(), &[0.25, 0.3, 0.5, 0.75, 1.0]);
        assert!(g.includes_sample_points());
        assert!(EvaluationGrid::equispaced(0.0, 4).is_err());
    }
}
