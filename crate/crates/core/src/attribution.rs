//! The attribution rule.
//!
//! A driver-informed model wins only if its WAIC undercuts the time-invariant
//! model's by more than the threshold (default 2) *and* it has the lowest
//! WAIC among the competing driver-informed candidates. Exact ties between
//! candidates are broken by the fixed precedence atmospheric > catchment >
//! river-system, which keeps the decision deterministic.

use alloc::vec::Vec;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AttributionError {
    #[error("attribution needs at least one driver-informed candidate")]
    NoCandidates,
    #[error("WAIC for {0} is NaN")]
    NanWaic(&'static str),
    #[error("duplicate candidate for driver {0:?}")]
    DuplicateDriver(Driver),
    #[error("threshold must be finite and >= 0, got {0}")]
    BadThreshold(f64),
}

/// The three driver classes, in tie-break precedence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Driver {
    Atmospheric,
    Catchment,
    RiverSystem,
}

impl Driver {
    pub fn name(&self) -> &'static str {
        match self {
            Driver::Atmospheric => "atmospheric",
            Driver::Catchment => "catchment",
            Driver::RiverSystem => "river_system",
        }
    }
}

/// Outcome of the model comparison at one site.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    TimeInvariant,
    Driver(Driver),
}

impl Selection {
    pub fn name(&self) -> &'static str {
        match self {
            Selection::TimeInvariant => "time_invariant",
            Selection::Driver(d) => d.name(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateWaic {
    pub driver: Driver,
    pub waic: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributionDecision {
    pub selected: Selection,
    pub g0_waic: f64,
    /// All candidates, as given.
    pub table: Vec<CandidateWaic>,
    /// WAIC improvement of the best candidate over the time-invariant model
    /// (positive means the candidate fits better).
    pub margin: f64,
    pub threshold: f64,
}

/// Apply the selection rule to a time-invariant WAIC and one WAIC per driver.
pub fn attribute(
    g0_waic: f64,
    candidates: &[(Driver, f64)],
    threshold: f64,
) -> Result<AttributionDecision, AttributionError> {
    if candidates.is_empty() {
        return Err(AttributionError::NoCandidates);
    }
    if g0_waic.is_nan() {
        return Err(AttributionError::NanWaic("the time-invariant model"));
    }
    if !threshold.is_finite() || threshold < 0.0 {
        return Err(AttributionError::BadThreshold(threshold));
    }
    let mut seen: Vec<Driver> = Vec::new();
    for &(driver, waic) in candidates {
        if waic.is_nan() {
            return Err(AttributionError::NanWaic(driver.name()));
        }
        if seen.contains(&driver) {
            return Err(AttributionError::DuplicateDriver(driver));
        }
        seen.push(driver);
    }

    // Minimum WAIC; on exact ties the driver with higher precedence (lower
    // enum order) wins.
    let mut best = candidates[0];
    for &(driver, waic) in &candidates[1..] {
        if waic < best.1 || (waic == best.1 && driver < best.0) {
            best = (driver, waic);
        }
    }
    let margin = g0_waic - best.1;
    let selected = if margin > threshold {
        Selection::Driver(best.0)
    } else {
        Selection::TimeInvariant
    };
    Ok(AttributionDecision {
        selected,
        g0_waic,
        table: candidates
            .iter()
            .map(|&(driver, waic)| CandidateWaic { driver, waic })
            .collect(),
        margin,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn informative_prior_table_selects_atmospheric() {
        // Four-way comparison: time-invariant -126.9 against candidates
        // -133.7 / -127.6 / -126.2; atmospheric wins by 6.8.
        let decision = attribute(
            -126.9,
            &[
                (Driver::Atmospheric, -133.7),
                (Driver::Catchment, -127.6),
                (Driver::RiverSystem, -126.2),
            ],
            2.0,
        )
        .unwrap();
        assert_eq!(decision.selected, Selection::Driver(Driver::Atmospheric));
        assert!((decision.margin - 6.8).abs() < 1e-12);
    }

    #[test]
    fn within_threshold_keeps_time_invariant() {
        let decision = attribute(
            -100.0,
            &[
                (Driver::Atmospheric, -101.9),
                (Driver::Catchment, -101.5),
            ],
            2.0,
        )
        .unwrap();
        assert_eq!(decision.selected, Selection::TimeInvariant);
        assert!((decision.margin - 1.9).abs() < 1e-12);
    }

    #[test]
    fn exact_threshold_is_not_enough() {
        let decision = attribute(-100.0, &[(Driver::Catchment, -102.0)], 2.0).unwrap();
        assert_eq!(decision.selected, Selection::TimeInvariant);
    }

    #[test]
    fn exact_tie_uses_fixed_precedence() {
        let decision = attribute(
            -100.0,
            &[
                (Driver::RiverSystem, -110.0),
                (Driver::Catchment, -110.0),
            ],
            2.0,
        )
        .unwrap();
        assert_eq!(decision.selected, Selection::Driver(Driver::Catchment));
        let with_atm = attribute(
            -100.0,
            &[
                (Driver::RiverSystem, -110.0),
                (Driver::Atmospheric, -110.0),
                (Driver::Catchment, -110.0),
            ],
            2.0,
        )
        .unwrap();
        assert_eq!(with_atm.selected, Selection::Driver(Driver::Atmospheric));
    }

    #[test]
    fn monotone_in_winner_improvement() {
        // Lowering the winner's WAIC can never flip the decision away.
        let base = attribute(
            -100.0,
            &[
                (Driver::Atmospheric, -104.0),
                (Driver::Catchment, -103.0),
            ],
            2.0,
        )
        .unwrap();
        assert_eq!(base.selected, Selection::Driver(Driver::Atmospheric));
        for improvement in [0.5, 2.0, 10.0, 100.0] {
            let better = attribute(
                -100.0,
                &[
                    (Driver::Atmospheric, -104.0 - improvement),
                    (Driver::Catchment, -103.0),
                ],
                2.0,
            )
            .unwrap();
            assert_eq!(better.selected, Selection::Driver(Driver::Atmospheric));
            assert!(better.margin >= base.margin);
        }
    }

    #[test]
    fn nan_is_an_error_never_skipped() {
        assert_eq!(
            attribute(f64::NAN, &[(Driver::Atmospheric, -1.0)], 2.0).unwrap_err(),
            AttributionError::NanWaic("the time-invariant model")
        );
        assert_eq!(
            attribute(-1.0, &[(Driver::Atmospheric, f64::NAN)], 2.0).unwrap_err(),
            AttributionError::NanWaic("atmospheric")
        );
    }

    #[test]
    fn duplicates_and_empty_rejected() {
        assert_eq!(
            attribute(-1.0, &[], 2.0).unwrap_err(),
            AttributionError::NoCandidates
        );
        assert_eq!(
            attribute(
                -1.0,
                &[(Driver::Catchment, -2.0), (Driver::Catchment, -3.0)],
                2.0
            )
            .unwrap_err(),
            AttributionError::DuplicateDriver(Driver::Catchment)
        );
    }
}
