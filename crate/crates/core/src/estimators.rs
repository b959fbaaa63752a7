//! Empirical estimators for right-censored samples.
//!
//! All carriers are [`StepFunction`]s. `L_n` is left-continuous
//! (`L_n(t) = n^-1 #{X_k < t}`); `F_{*n}`, the Kaplan-Meier estimator and
//! the cumulative hazard estimator are right-continuous. Beyond the largest
//! observation every estimator is held at its last value.

use crate::sample::{CensoredSample, Side, StepFunction};

/// Kaplan-Meier and cumulative hazard fit built from the order statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct KmFit {
    /// `1 - F̂_n`, right-continuous, starts at 1.
    pub survival: StepFunction,
    /// `Ĥ_n`, right-continuous, starts at 0.
    pub cumhaz: StepFunction,
    /// Uncensored order statistics, with multiplicity.
    pub jump_times: Vec<f64>,
    /// `n - k + 1` for each entry of `jump_times`.
    pub at_risk_at_jumps: Vec<usize>,
}

impl KmFit {
    /// `F̂_n` as a right-continuous distribution carrier.
    pub fn distribution(&self) -> StepFunction {
        self.survival.complement()
    }

    /// Evaluates `F̂_n(t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        1.0 - self.survival.eval(t)
    }
}

/// `L_n(t) = n^-1 sum I(X_k < t)`, left-continuous.
pub fn empirical_l(s: &CensoredSample) -> StepFunction {
    counting_carrier(s.sorted_x().iter().copied(), s.len(), Side::Left)
}

/// `Y_n(t) = #{k : X_k >= t}`.
pub fn at_risk(s: &CensoredSample, t: f64) -> usize {
    s.len() - s.sorted_x().partition_point(|&x| x < t)
}

/// `F_{*n}(t) = N_n(t) / n = n^-1 sum I(X_k <= t, delta_k = 1)`,
/// right-continuous.
pub fn sub_dist_empirical(s: &CensoredSample) -> StepFunction {
    counting_carrier(s.event_times(), s.len(), Side::Right)
}

/// Ordinary empirical CDF of the observed times, ignoring censoring.
pub fn empirical_cdf(s: &CensoredSample) -> StepFunction {
    counting_carrier(s.sorted_x().iter().copied(), s.len(), Side::Right)
}

/// Step function with value `count / n` after each distinct sorted point.
fn counting_carrier(sorted: impl Iterator<Item = f64>, n: usize, side: Side) -> StepFunction {
    let mut knots: Vec<f64> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let nf = n as f64;
    for (count, x) in sorted.enumerate() {
        let v = (count + 1) as f64 / nf;
        if knots.last() == Some(&x) {
            *values.last_mut().unwrap() = v;
        } else {
            knots.push(x);
            values.push(v);
        }
    }
    StepFunction::from_values(0.0, knots, values, side).expect("sorted finite knots")
}

/// Kaplan-Meier estimator in order-statistic form:
/// `1 - F̂_n(x) = prod_{X_(k) <= x} (1 - delta_(k) / (n - k + 1))` and
/// `Ĥ_n(x) = sum_{X_(k) <= x} delta_(k) / (n - k + 1)`.
///
/// Ties are resolved by the sample's sort order (events before censorings),
/// so tied events contribute one factor each.
pub fn kaplan_meier(s: &CensoredSample) -> KmFit {
    let n = s.len();
    let mut knots = Vec::new();
    let mut surv_values = Vec::new();
    let mut haz_values = Vec::new();
    let mut jump_times = Vec::new();
    let mut at_risk_at_jumps = Vec::new();
    let mut surv = 1.0f64;
    let mut haz = 0.0f64;
    for (k, (&x, &d)) in s.sorted_x().iter().zip(s.sorted_delta()).enumerate() {
        if !d {
            continue;
        }
        let risk = n - k;
        debug_assert!(risk > 0);
        let inc = 1.0 / risk as f64;
        surv *= 1.0 - inc;
        haz += inc;
        jump_times.push(x);
        at_risk_at_jumps.push(risk);
        if knots.last() == Some(&x) {
            *surv_values.last_mut().unwrap() = surv;
            *haz_values.last_mut().unwrap() = haz;
        } else {
            knots.push(x);
            surv_values.push(surv);
            haz_values.push(haz);
        }
    }
    KmFit {
        survival: StepFunction::from_values(1.0, knots.clone(), surv_values, Side::Right).expect("sorted finite knots"),
        cumhaz: StepFunction::from_values(0.0, knots, haz_values, Side::Right).expect("sorted finite knots"),
        jump_times,
        at_risk_at_jumps,
    }
}

/// Product-integral form grouped by distinct event time:
/// `1 - F̂_n(x) = prod_{s <= x} (1 - dN_n(s) / Y_n(s))` with
/// `Ĥ_n(x) = sum_{s <= x} dN_n(s) / Y_n(s)`.
///
/// Computed from the raw observations without the sample's sorted view; it
/// serves as the cross-check for [`kaplan_meier`]. The survival curves agree
/// on every sample. The cumulative hazards coincide whenever no two events
/// share a time; at a tie of `d` events the grouped increment is `d / Y`
/// while the order-statistic form adds `1/Y + ... + 1/(Y - d + 1)`.
pub fn km_via_product_integral(s: &CensoredSample) -> KmFit {
    let mut all: Vec<f64> = s.x().to_vec();
    all.sort_by(f64::total_cmp);
    let mut events: Vec<f64> = s
        .x()
        .iter()
        .zip(s.delta())
        .filter(|(_, &d)| d)
        .map(|(&x, _)| x)
        .collect();
    events.sort_by(f64::total_cmp);

    let n = all.len();
    let mut knots = Vec::new();
    let mut surv_values = Vec::new();
    let mut haz_values = Vec::new();
    let mut jump_times = Vec::new();
    let mut at_risk_at_jumps = Vec::new();
    let mut surv = 1.0f64;
    let mut haz = 0.0f64;
    let mut i = 0;
    while i < events.len() {
        let time = events[i];
        let d = events[i..].iter().take_while(|&&e| e == time).count();
        let y = n - all.partition_point(|&x| x < time);
        assert!(y >= d, "an event time is always at risk");
        let inc = d as f64 / y as f64;
        surv *= 1.0 - inc;
        haz += inc;
        knots.push(time);
        surv_values.push(surv);
        haz_values.push(haz);
        for j in 0..d {
            jump_times.push(time);
            at_risk_at_jumps.push(y - j);
        }
        i += d;
    }
    KmFit {
        survival: StepFunction::from_values(1.0, knots.clone(), surv_values, Side::Right).expect("sorted finite knots"),
        cumhaz: StepFunction::from_values(0.0, knots, haz_values, Side::Right).expect("sorted finite knots"),
        jump_times,
        at_risk_at_jumps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(x: &[f64], d: &[u8]) -> CensoredSample {
        CensoredSample::from_observed(x.to_vec(), d.iter().map(|&v| v == 1).collect()).unwrap()
    }

    #[test]
    fn l_n_uses_strict_inequality() {
        let s = sample(&[1.0, 2.0, 3.0], &[1, 1, 1]);
        let l = empirical_l(&s);
        assert_eq!(l.eval(2.0), 1.0 / 3.0);
        assert_eq!(l.eval(3.5), 1.0);
        let tied = empirical_l(&sample(&[1.0, 1.0, 2.0], &[1, 0, 1]));
        assert_eq!(tied.eval(1.0), 0.0);
        assert_eq!(tied.eval(1.0 + 1e-9), 2.0 / 3.0);
    }

    #[test]
    fn at_risk_counts() {
        let s = sample(&[1.0, 2.0, 3.0], &[1, 0, 1]);
        assert_eq!(at_risk(&s, 2.0), 2);
        assert_eq!(at_risk(&s, 0.0), 3);
        assert_eq!(at_risk(&s, 3.5), 0);
    }

    #[test]
    fn sub_distribution_counts_events_only() {
        let f = sub_dist_empirical(&sample(&[1.0, 2.0], &[1, 0]));
        assert_eq!(f.eval(1.5), 0.5);
        assert_eq!(f.eval(3.0), 0.5);
        let none = sub_dist_empirical(&sample(&[1.0, 2.0], &[0, 0]));
        assert_eq!(none.eval(10.0), 0.0);
        let s = sample(&[0.3, 0.1, 0.2, 0.2], &[1, 1, 1, 1]);
        assert_eq!(sub_dist_empirical(&s), empirical_cdf(&s));
    }

    #[test]
    fn four_point_example() {
        let fit = kaplan_meier(&sample(&[2.0, 3.0, 5.0, 7.0], &[1, 0, 1, 1]));
        assert!((fit.cdf(2.0) - 0.25).abs() < 1e-15);
        assert!((fit.cdf(5.0) - 0.625).abs() < 1e-15);
        assert!((fit.cdf(7.0) - 1.0).abs() < 1e-15);
        assert!((fit.cumhaz.eval(2.0) - 0.25).abs() < 1e-15);
        assert!((fit.cumhaz.eval(5.0) - 0.75).abs() < 1e-15);
        assert!((fit.cumhaz.eval(7.0) - 1.75).abs() < 1e-15);
        assert_eq!(fit.at_risk_at_jumps, vec![4, 2, 1]);
        assert!((fit.survival.eval(5.0) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn uncensored_km_is_ecdf() {
        let x = [0.4, 0.1, 0.9, 0.3, 0.7];
        let fit = kaplan_meier(&sample(&x, &[1; 5]));
        let mut sorted = x.to_vec();
        sorted.sort_by(f64::total_cmp);
        for (k, &v) in sorted.iter().enumerate() {
            assert!((fit.cdf(v) - (k + 1) as f64 / 5.0).abs() < 1e-15);
        }
    }

    #[test]
    fn all_censored_is_flat() {
        let fit = kaplan_meier(&sample(&[1.0, 2.0, 3.0], &[0, 0, 0]));
        assert_eq!(fit.cdf(10.0), 0.0);
        assert_eq!(fit.cumhaz.eval(10.0), 0.0);
        assert!(fit.jump_times.is_empty());
    }

    #[test]
    fn grouped_ties() {
        let fit = km_via_product_integral(&sample(&[1.0, 1.0, 2.0], &[1, 1, 1]));
        assert!((fit.survival.eval(1.0) - 1.0 / 3.0).abs() < 1e-15);
        let censored_tie = km_via_product_integral(&sample(&[1.0, 1.0], &[1, 0]));
        assert!((censored_tie.survival.eval(1.0) - 0.5).abs() < 1e-15);
        // the order-statistic form agrees on the survival curve
        let km = kaplan_meier(&sample(&[1.0, 1.0], &[1, 0]));
        assert!((km.survival.eval(1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn last_censored_keeps_mass_below_one() {
        let fit = kaplan_meier(&sample(&[1.0, 2.0, 3.0], &[1, 1, 0]));
        assert!((fit.cdf(100.0) - 2.0 / 3.0).abs() < 1e-15);
    }
}
