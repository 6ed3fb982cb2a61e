//! Convergence and learning-speed measurement, plus exact analytic
//! diagnostics of the belief drift.
//!
//! Belief uncertainty of a network at time `t` is half the summed L1 distance
//! of all profiles from the point mass on the real state,
//! `e_t = sum_i sum_{m != r} mu_i(m)`, and the learning rate is the
//! asymptotic decay exponent of `e_t`. Finite runs cannot observe a liminf,
//! so [`learning_rate_estimate`] reports the endpoint statistic
//! `|ln e_T| / T` together with a least-squares slope over a window as a
//! stability cross-check.

use crate::core::{BeliefProfile, PrivateSignalStructure, WorldSignalStructure};
use crate::dynamics::one_step_forecast;
use crate::{Error, Result};

/// Per-step snapshot of the headline convergence metrics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricRecord {
    pub t: usize,
    pub belief_uncertainty: f64,
    pub consensus_gap: f64,
    pub mean_truth_belief: f64,
    pub min_truth_belief: f64,
}

/// Metric records over a run, one per step starting at `t = 0`.
#[derive(Clone, Debug)]
pub struct MetricSeries {
    pub real_state: usize,
    pub records: Vec<MetricRecord>,
}

impl MetricSeries {
    pub fn new(real_state: usize) -> Self {
        MetricSeries {
            real_state,
            records: Vec::new(),
        }
    }

    /// Appends the metrics of one belief snapshot.
    pub fn record(&mut self, t: usize, beliefs: &[BeliefProfile]) {
        let r = self.real_state;
        let mut mean = 0.0;
        let mut min = f64::INFINITY;
        for b in beliefs {
            let truth = b.belief(r);
            mean += truth;
            min = min.min(truth);
        }
        mean /= beliefs.len() as f64;
        self.records.push(MetricRecord {
            t,
            belief_uncertainty: belief_uncertainty(beliefs, r),
            consensus_gap: consensus_gap(beliefs),
            mean_truth_belief: mean,
            min_truth_belief: min,
        });
    }

    /// Belief uncertainty at step `t`, if recorded.
    pub fn uncertainty_at(&self, t: usize) -> Option<f64> {
        self.records
            .iter()
            .find(|rec| rec.t == t)
            .map(|rec| rec.belief_uncertainty)
    }

    pub fn last(&self) -> Option<&MetricRecord> {
        self.records.last()
    }
}

/// Belief uncertainty `e = sum_i sum_{m != r} mu_i(m)`; zero exactly when
/// every agent sits on the real-state point mass.
pub fn belief_uncertainty(beliefs: &[BeliefProfile], real_state: usize) -> f64 {
    beliefs
        .iter()
        .map(|b| {
            b.beliefs()
                .iter()
                .enumerate()
                .filter(|&(m, _)| m != real_state)
                .map(|(_, &x)| x)
                .sum::<f64>()
        })
        .sum()
}

/// Largest pairwise L1 distance between agent profiles; zero iff exact
/// consensus.
pub fn consensus_gap(beliefs: &[BeliefProfile]) -> f64 {
    let mut gap = 0.0f64;
    for (i, a) in beliefs.iter().enumerate() {
        for b in &beliefs[i + 1..] {
            let d: f64 = a
                .beliefs()
                .iter()
                .zip(b.beliefs())
                .map(|(x, y)| (x - y).abs())
                .sum();
            gap = gap.max(d);
        }
    }
    gap
}

/// Outcome of a finite-horizon learning-rate estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RateEstimate {
    /// Endpoint statistic `|ln e_T| / T` and the least-squares slope of
    /// `|ln e_t|` against `t` over the window.
    Estimate { endpoint: f64, slope: f64 },
    /// Some `e_t` in the window is exactly zero: the network converged
    /// exactly and the rate is unbounded.
    ConvergedExactly,
}

/// Estimates the learning rate from the records with `t` in
/// `[window.0, window.1]`.
pub fn learning_rate_estimate(
    series: &MetricSeries,
    window: (usize, usize),
) -> Result<RateEstimate> {
    let (t_lo, t_hi) = window;
    if t_hi == 0 || t_lo > t_hi {
        return Err(Error::Domain(format!(
            "bad estimation window [{t_lo}, {t_hi}]"
        )));
    }
    let in_window: Vec<&MetricRecord> = series
        .records
        .iter()
        .filter(|r| r.t >= t_lo && r.t <= t_hi)
        .collect();
    let endpoint_record = in_window
        .iter()
        .find(|r| r.t == t_hi)
        .ok_or_else(|| Error::Domain(format!("no record at window end t = {t_hi}")))?;
    if in_window.iter().any(|r| r.belief_uncertainty == 0.0) {
        return Ok(RateEstimate::ConvergedExactly);
    }
    let endpoint = endpoint_record.belief_uncertainty.ln().abs() / t_hi as f64;

    // least-squares slope of |ln e_t| on t
    let xs: Vec<f64> = in_window.iter().map(|r| r.t as f64).collect();
    let ys: Vec<f64> = in_window
        .iter()
        .map(|r| r.belief_uncertainty.ln().abs())
        .collect();
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    Ok(RateEstimate::Estimate { endpoint, slope })
}

/// Learning-rate upper bound for an all-conservative population sharing
/// self-reliance `gamma`:
///
/// ```text
/// lambda <= gamma * min_m sum_i v_i |k_i(m)|
/// ```
///
/// where `v` is the unit left eigenvector of the influence matrix and
/// `k_values[i]` holds agent `i`'s `k` for each alternative state (the same
/// state order for every agent). Any non-negative `k` voids the hypothesis.
pub fn learning_rate_bound(gamma: f64, v: &[f64], k_values: &[Vec<f64>]) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Parameter {
            name: "gamma",
            reason: format!("must lie in [0, 1], got {gamma}"),
        });
    }
    if v.len() != k_values.len() || v.is_empty() {
        return Err(Error::Domain(format!(
            "{} eigenvector entries for {} agents",
            v.len(),
            k_values.len()
        )));
    }
    let alt_states = k_values[0].len();
    if alt_states == 0 {
        return Err(Error::Domain("no alternative states".into()));
    }
    for (i, ks) in k_values.iter().enumerate() {
        if ks.len() != alt_states {
            return Err(Error::Domain(format!(
                "agent {i} reports {} k values, expected {alt_states}",
                ks.len()
            )));
        }
        if let Some(&k) = ks.iter().find(|&&k| k >= 0.0) {
            return Err(Error::Domain(format!(
                "agent {i} has k = {k} >= 0: the bound holds only for conservative populations"
            )));
        }
    }
    let bound = (0..alt_states)
        .map(|m| {
            v.iter()
                .zip(k_values)
                .map(|(&vi, ks)| vi * ks[m].abs())
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    Ok(gamma * bound)
}

/// Exact conditional expectation of the truth ratio under the world
/// distribution: `sum_s g(s) l^r(s) / d(s)` with `d` the one-step forecast at
/// belief `mu`. Exceeds 1 at every interior belief when the structure is
/// conservative.
pub fn expected_truth_ratio(
    g: &WorldSignalStructure,
    l: &PrivateSignalStructure,
    mu: &BeliefProfile,
    real_state: usize,
) -> Result<f64> {
    if g.len() != l.signal_count() {
        return Err(Error::Domain("signal space mismatch".into()));
    }
    if mu.len() != l.state_count() || real_state >= l.state_count() {
        return Err(Error::Domain("state space mismatch".into()));
    }
    let mut total = 0.0;
    for (s, &gs) in g.probabilities().iter().enumerate() {
        let d = one_step_forecast(l, mu, s);
        if d <= 0.0 {
            return Err(Error::Numerical(format!("zero forecast at signal {s}")));
        }
        total += gs * l.likelihood(s, real_state) / d;
    }
    Ok(total)
}

/// The consensus drift function of the uncertain-network argument:
///
/// ```text
/// f(eps)  = sum_s g(s) / (1 - eps + eps * l^m(s)/l^r(s)) - 1
/// f'(0)   = 1 - sum_s g(s) * l^m(s)/l^r(s) = 1 - exp(k(m, r))
/// ```
///
/// evaluated for the alternative state `m_hat`. Returns `(f(eps), f'(0))`.
/// A radical structure has `f'(0) < 0`, so a consensus near the truth drifts
/// away from it in expectation.
pub fn consensus_drift(
    g: &WorldSignalStructure,
    l: &PrivateSignalStructure,
    real_state: usize,
    m_hat: usize,
    epsilon: f64,
) -> Result<(f64, f64)> {
    if m_hat == real_state {
        return Err(Error::Domain(format!(
            "m_hat and the real state must differ (both {m_hat})"
        )));
    }
    if m_hat >= l.state_count() || real_state >= l.state_count() {
        return Err(Error::Domain("state index out of range".into()));
    }
    if g.len() != l.signal_count() {
        return Err(Error::Domain("signal space mismatch".into()));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Parameter {
            name: "epsilon",
            reason: format!("must lie in [0, 1], got {epsilon}"),
        });
    }
    let mut f = 0.0;
    let mut expectation = 0.0;
    for (s, &gs) in g.probabilities().iter().enumerate() {
        let ratio = l.likelihood(s, m_hat) / l.likelihood(s, real_state);
        f += gs / (1.0 - epsilon + epsilon * ratio);
        expectation += gs * ratio;
    }
    Ok((f - 1.0, 1.0 - expectation))
}

/// Locates the end of the interval `(0, c)` on which the drift `f` is
/// negative, by bisection on `[1e-9, 1]` to tolerance `1e-9`.
///
/// `f` is strictly convex with `f(0) = 0`, so when `f'(0) < 0` it has at most
/// one sign change and is negative on all of `(0, c)`. Returns 1 when `f`
/// stays negative over the whole interval.
pub fn drift_negative_until(
    g: &WorldSignalStructure,
    l: &PrivateSignalStructure,
    real_state: usize,
    m_hat: usize,
) -> Result<f64> {
    let eval = |eps: f64| consensus_drift(g, l, real_state, m_hat, eps).map(|(f, _)| f);
    let mut lo = 1e-9;
    if eval(lo)? >= 0.0 {
        return Err(Error::Domain(
            "drift is not negative near zero: structure is not radical toward m_hat".into(),
        ));
    }
    let mut hi = 1.0;
    if eval(hi)? <= 0.0 {
        return Ok(1.0);
    }
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if eval(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::make_binary_structure;

    fn world08() -> WorldSignalStructure {
        WorldSignalStructure::binary(0.8).unwrap()
    }

    fn profile(p: &[f64]) -> BeliefProfile {
        BeliefProfile::new(p.to_vec()).unwrap()
    }

    #[test]
    fn uncertainty_zero_only_at_full_convergence() {
        let converged = vec![
            BeliefProfile::point_mass(0, 2).unwrap(),
            BeliefProfile::point_mass(0, 2).unwrap(),
        ];
        assert_eq!(belief_uncertainty(&converged, 0), 0.0);

        let two = vec![profile(&[0.7, 0.3]), profile(&[0.8, 0.2])];
        assert!((belief_uncertainty(&two, 0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn uncertainty_of_uniform_profiles() {
        let n = 7;
        let m = 4;
        let beliefs = vec![BeliefProfile::uniform(m).unwrap(); n];
        let expect = n as f64 * (m - 1) as f64 / m as f64;
        assert!((belief_uncertainty(&beliefs, 0) - expect).abs() < 1e-12);
    }

    #[test]
    fn uncertainty_is_permutation_invariant() {
        let a = vec![
            profile(&[0.7, 0.3]),
            profile(&[0.2, 0.8]),
            profile(&[0.5, 0.5]),
        ];
        let mut b = a.clone();
        b.reverse();
        assert_eq!(belief_uncertainty(&a, 0), belief_uncertainty(&b, 0));
    }

    #[test]
    fn consensus_gap_cases() {
        let same = vec![profile(&[0.7, 0.3]); 3];
        assert_eq!(consensus_gap(&same), 0.0);

        let opposed = vec![
            BeliefProfile::point_mass(0, 2).unwrap(),
            BeliefProfile::point_mass(1, 2).unwrap(),
        ];
        assert_eq!(consensus_gap(&opposed), 2.0);

        let three = vec![
            profile(&[0.7, 0.3]),
            profile(&[0.6, 0.4]),
            profile(&[0.9, 0.1]),
        ];
        assert!((consensus_gap(&three) - 0.6).abs() < 1e-15);
    }

    fn synthetic_series(e: impl Fn(usize) -> f64, t_max: usize) -> MetricSeries {
        let mut series = MetricSeries::new(0);
        for t in 0..=t_max {
            series.records.push(MetricRecord {
                t,
                belief_uncertainty: e(t),
                consensus_gap: 0.0,
                mean_truth_belief: 0.0,
                min_truth_belief: 0.0,
            });
        }
        series
    }

    #[test]
    fn rate_estimate_recovers_exact_exponential() {
        let c = 0.137;
        let series = synthetic_series(|t| (-c * t as f64).exp(), 100);
        match learning_rate_estimate(&series, (50, 100)).unwrap() {
            RateEstimate::Estimate { endpoint, slope } => {
                assert!((endpoint - c).abs() < 1e-12);
                assert!((slope - c).abs() < 1e-9);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rate_estimate_constant_series() {
        let series = synthetic_series(|_| 0.5, 100);
        match learning_rate_estimate(&series, (0, 100)).unwrap() {
            RateEstimate::Estimate { endpoint, slope } => {
                assert!((endpoint - 0.5f64.ln().abs() / 100.0).abs() < 1e-12);
                assert!(slope.abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rate_estimate_flags_exact_convergence() {
        let series = synthetic_series(|t| if t >= 60 { 0.0 } else { 0.5 }, 100);
        assert_eq!(
            learning_rate_estimate(&series, (50, 100)).unwrap(),
            RateEstimate::ConvergedExactly
        );
    }

    #[test]
    fn bound_hand_values() {
        // uniform v over 4 agents, all k = -0.1823, gamma = 0.5
        let v = vec![0.25; 4];
        let ks = vec![vec![-0.1823]; 4];
        let b = learning_rate_bound(0.5, &v, &ks).unwrap();
        assert!((b - 0.09115).abs() < 1e-12);

        assert_eq!(learning_rate_bound(0.0, &v, &ks).unwrap(), 0.0);

        // two alternative states: the minimum over states wins
        let v2 = vec![0.5, 0.5];
        let ks2 = vec![vec![-0.3, -0.2], vec![-0.3, -0.2]];
        assert!((learning_rate_bound(1.0, &v2, &ks2).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn bound_rejects_non_conservative_k() {
        let v = vec![0.5, 0.5];
        let ks = vec![vec![-0.3], vec![0.1]];
        assert!(learning_rate_bound(0.5, &v, &ks).is_err());
    }

    #[test]
    fn truth_ratio_hand_values() {
        let g = world08();
        let l = make_binary_structure(0.6, 0.4).unwrap();
        let point = BeliefProfile::point_mass(0, 2).unwrap();
        assert!((expected_truth_ratio(&g, &l, &point, 0).unwrap() - 1.0).abs() < 1e-15);

        let mu = BeliefProfile::uniform(2).unwrap();
        assert!((expected_truth_ratio(&g, &l, &mu, 0).unwrap() - 1.12).abs() < 1e-12);
    }

    #[test]
    fn drift_zero_at_origin() {
        let g = world08();
        for (a, b) in [(0.6, 0.4), (0.9, 0.1), (0.4, 0.6)] {
            let l = make_binary_structure(a, b).unwrap();
            let (f, _) = consensus_drift(&g, &l, 0, 1, 0.0).unwrap();
            assert_eq!(f, 0.0);
        }
    }

    #[test]
    fn drift_slope_matches_exp_k() {
        let g = world08();
        // radical: f'(0) = 1 - e^k with k = 0.6360
        let l2 = make_binary_structure(0.9, 0.1).unwrap();
        let (_, fp) = consensus_drift(&g, &l2, 0, 1, 0.3).unwrap();
        assert!((fp - (1.0 - 0.6360f64.exp())).abs() < 1e-4);
        assert!((fp - (-0.8889)).abs() < 1e-4);

        // conservative: f'(0) = 1 - e^k with k = -0.1823
        let l1 = make_binary_structure(0.6, 0.4).unwrap();
        let (_, fp) = consensus_drift(&g, &l1, 0, 1, 0.0).unwrap();
        assert!((fp - 0.1667).abs() < 1e-4);

        // consistency with the k measure itself
        let k = crate::classify::k_g(&g, &l2, 1, 0).unwrap();
        assert!((fp_from_k(k) - consensus_drift(&g, &l2, 0, 1, 0.0).unwrap().1).abs() < 1e-12);
    }

    fn fp_from_k(k: f64) -> f64 {
        1.0 - k.exp()
    }

    #[test]
    fn radical_drift_negative_interval() {
        let g = world08();
        let l2 = make_binary_structure(0.9, 0.1).unwrap();
        let c = drift_negative_until(&g, &l2, 0, 1).unwrap();
        assert!(c > 0.0);
        let (f_mid, _) = consensus_drift(&g, &l2, 0, 1, c / 2.0).unwrap();
        assert!(f_mid < 0.0);
    }

    #[test]
    fn conservative_structure_has_no_negative_interval() {
        let g = world08();
        let l1 = make_binary_structure(0.6, 0.4).unwrap();
        assert!(drift_negative_until(&g, &l1, 0, 1).is_err());
    }
}
