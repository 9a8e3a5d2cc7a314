//! The two controller variants, behind one trait and registered by name.
//!
//! A variant bundles everything that distinguishes the two controllers:
//! which neighbors the census counts, when a non-informed robot may start
//! resting, whether the census at the moment of joining is remembered, and
//! the probability of leaving a site. The rest of the state machine is
//! shared (see [`super::step_controller`]).

use super::ControllerParams;
use crate::robot::CensusFilter;

/// Probability that a resting non-informed robot leaves, as a function of
/// the current census `n` of informed neighbors and the census `x` recorded
/// when it joined the site: `exp(-gain * (span - |n - x|))`, and 1 when the
/// census is zero. Values above 1 (reachable when `|n - x| > span`) clamp
/// to 1.
pub fn leave_probability_baseline(census: u32, joined_census: u32, gain: f64, span: f64) -> f64 {
    if census == 0 {
        return 1.0;
    }
    let delta = (census as f64 - joined_census as f64).abs();
    (-gain * (span - delta)).exp().clamp(0.0, 1.0)
}

/// Memoryless leave probability `prob_alone * exp(-neighbor_decay * n)`,
/// driven only by the current census `n` of resting neighbors of any kind.
pub fn leave_probability_simplified(census: u32, prob_alone: f64, neighbor_decay: f64) -> f64 {
    prob_alone * (-neighbor_decay * census as f64).exp()
}

/// Strategy interface for a controller variant. Implementations are
/// stateless; per-robot memory lives in the controller state.
pub trait ControllerVariant: Sync {
    /// Registry key, also used in config files and result records.
    fn name(&self) -> &'static str;

    /// Which broadcasting neighbors the range-and-bearing census counts.
    fn census_filter(&self) -> CensusFilter;

    /// Whether a non-informed robot standing on a site may start resting,
    /// given the current census.
    fn non_informed_joins(&self, census: u32) -> bool;

    /// Whether the census value that satisfied the join rule is recorded in
    /// the controller state for later leave evaluations.
    fn remembers_join_census(&self) -> bool;

    /// Leave probability for a resting non-informed robot.
    fn leave_probability(
        &self,
        census: u32,
        joined_census: Option<u32>,
        params: &ControllerParams,
    ) -> f64;
}

/// Variant replicated from prior work: aggregation is seeded and sustained
/// by informed robots only.
pub struct Baseline;

impl ControllerVariant for Baseline {
    fn name(&self) -> &'static str {
        "baseline"
    }

    fn census_filter(&self) -> CensusFilter {
        CensusFilter::RestingInformedOnly
    }

    fn non_informed_joins(&self, census: u32) -> bool {
        census >= 1
    }

    fn remembers_join_census(&self) -> bool {
        true
    }

    fn leave_probability(
        &self,
        census: u32,
        joined_census: Option<u32>,
        params: &ControllerParams,
    ) -> f64 {
        let joined = joined_census.expect("baseline leave evaluation requires the join census");
        leave_probability_baseline(census, joined, params.leave_gain, params.leave_census_span)
    }
}

/// Density-driven variant: any robot may seed an aggregate, and leaving
/// depends only on the instantaneous count of resting neighbors.
pub struct Simplified;

impl ControllerVariant for Simplified {
    fn name(&self) -> &'static str {
        "simplified"
    }

    fn census_filter(&self) -> CensusFilter {
        CensusFilter::RestingAny
    }

    fn non_informed_joins(&self, _census: u32) -> bool {
        true
    }

    fn remembers_join_census(&self) -> bool {
        false
    }

    fn leave_probability(
        &self,
        census: u32,
        _joined_census: Option<u32>,
        params: &ControllerParams,
    ) -> f64 {
        leave_probability_simplified(census, params.leave_prob_alone, params.leave_neighbor_decay)
    }
}

/// All registered variants.
pub static VARIANTS: [&dyn ControllerVariant; 2] = [&Baseline, &Simplified];

/// Looks a variant up by its registry name.
pub fn variant_by_name(name: &str) -> Option<&'static dyn ControllerVariant> {
    VARIANTS.iter().copied().find(|v| v.name() == name)
}

/// Registry names, for diagnostics and CLI help.
pub fn variant_names() -> Vec<&'static str> {
    VARIANTS.iter().map(|v| v.name()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn baseline_formula_values() {
        // Empty neighborhood forces a leave.
        assert_eq!(leave_probability_baseline(0, 7, 2.0, 18.0), 1.0);
        // n = x: exponent is -gain * span.
        assert_relative_eq!(
            leave_probability_baseline(5, 5, 2.0, 18.0),
            2.3195228302435696e-16,
            max_relative = 1e-12
        );
        // |n - x| equal to the span makes the exponent zero.
        assert_relative_eq!(
            leave_probability_baseline(1, 19, 2.0, 18.0),
            1.0,
            max_relative = 1e-12
        );
        // Beyond the span the raw expression exceeds 1 and clamps.
        assert_eq!(leave_probability_baseline(1, 25, 2.0, 18.0), 1.0);
    }

    #[test]
    fn simplified_formula_values() {
        assert_relative_eq!(
            leave_probability_simplified(0, 0.5, 2.25),
            0.5,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            leave_probability_simplified(2, 0.5, 2.25),
            0.005554498269121153,
            max_relative = 1e-12
        );
        let p10 = leave_probability_simplified(10, 0.5, 2.25);
        assert_relative_eq!(p10, 8.459489613075652e-11, max_relative = 1e-12);
        assert!(p10 < leave_probability_simplified(2, 0.5, 2.25));
    }

    #[test]
    fn registry_lookup() {
        assert_eq!(variant_by_name("baseline").unwrap().name(), "baseline");
        assert_eq!(variant_by_name("simplified").unwrap().name(), "simplified");
        assert!(variant_by_name("informed").is_none());
        assert_eq!(variant_names(), vec!["baseline", "simplified"]);
    }

    #[test]
    fn filters_and_join_rules_per_variant() {
        let b = variant_by_name("baseline").unwrap();
        assert_eq!(b.census_filter(), CensusFilter::RestingInformedOnly);
        assert!(!b.non_informed_joins(0));
        assert!(b.non_informed_joins(1));
        assert!(b.remembers_join_census());

        let s = variant_by_name("simplified").unwrap();
        assert_eq!(s.census_filter(), CensusFilter::RestingAny);
        assert!(s.non_informed_joins(0));
        assert!(!s.remembers_join_census());
    }

    proptest! {
        #[test]
        fn baseline_stays_in_unit_interval(
            n in 0u32..2000,
            x in 0u32..2000,
            gain in 0.01f64..10.0,
            span in 0.0f64..100.0,
        ) {
            let p = leave_probability_baseline(n, x, gain, span);
            prop_assert!((0.0..=1.0).contains(&p));
        }

        #[test]
        fn simplified_stays_in_unit_interval_and_decreases(
            n in 0u32..2000,
            alpha in 0.001f64..=1.0,
            beta in 0.01f64..10.0,
        ) {
            let p = leave_probability_simplified(n, alpha, beta);
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!(p <= alpha);
            let next = leave_probability_simplified(n + 1, alpha, beta);
            // Strictly decreasing until the value underflows to zero.
            prop_assert!(next < p || p == 0.0);
        }
    }
}
