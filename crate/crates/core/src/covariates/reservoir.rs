//! Reservoir index.
//!
//! `RI = sum_i (A_i / A_T) * (C_i / C_T)` over the reservoirs upstream of the
//! gauge that exist in the given year, with `A_i`/`C_i` the reservoir's
//! drainage area and capacity and `A_T`/`C_T` the catchment area and mean
//! annual flow volume. Each dam construction is a step change; 0.25 is the
//! conventional threshold between low and high flow alteration.

use super::{CovariateError, CovariateKind, CovariateSeries};
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReservoirRecord {
    pub year_built: i32,
    /// Storage capacity, 10^6 m^3.
    pub capacity_1e6m3: f64,
    /// Drainage area of the dam, km^2.
    pub drainage_area_km2: f64,
}

impl ReservoirRecord {
    fn validate(&self, catchment_area_km2: f64) -> Result<(), CovariateError> {
        if !self.capacity_1e6m3.is_finite() || self.capacity_1e6m3 <= 0.0 {
            return Err(CovariateError::InvalidReservoir {
                field: "capacity_1e6m3",
                value: self.capacity_1e6m3,
            });
        }
        if !self.drainage_area_km2.is_finite() || self.drainage_area_km2 <= 0.0 {
            return Err(CovariateError::InvalidReservoir {
                field: "drainage_area_km2",
                value: self.drainage_area_km2,
            });
        }
        if self.drainage_area_km2 > catchment_area_km2 {
            return Err(CovariateError::ReservoirLargerThanCatchment {
                drainage: self.drainage_area_km2,
                catchment: catchment_area_km2,
            });
        }
        Ok(())
    }
}

/// The index for a single year.
pub fn reservoir_index(
    reservoirs: &[ReservoirRecord],
    year: i32,
    catchment_area_km2: f64,
    mean_annual_flow_volume_1e6m3: f64,
) -> Result<f64, CovariateError> {
    if !catchment_area_km2.is_finite() || catchment_area_km2 <= 0.0 {
        return Err(CovariateError::InvalidCatchmentArea(catchment_area_km2));
    }
    if !mean_annual_flow_volume_1e6m3.is_finite() || mean_annual_flow_volume_1e6m3 <= 0.0 {
        return Err(CovariateError::InvalidFlowVolume(mean_annual_flow_volume_1e6m3));
    }
    let mut ri = 0.0;
    for r in reservoirs {
        r.validate(catchment_area_km2)?;
        if r.year_built <= year {
            ri += (r.drainage_area_km2 / catchment_area_km2)
                * (r.capacity_1e6m3 / mean_annual_flow_volume_1e6m3);
        }
    }
    Ok(ri)
}

/// The index for a run of years.
pub fn reservoir_series(
    reservoirs: &[ReservoirRecord],
    start_year: i32,
    n_years: usize,
    catchment_area_km2: f64,
    mean_annual_flow_volume_1e6m3: f64,
) -> Result<CovariateSeries, CovariateError> {
    let mut values = Vec::with_capacity(n_years);
    for i in 0..n_years {
        values.push(reservoir_index(
            reservoirs,
            start_year + i as i32,
            catchment_area_km2,
            mean_annual_flow_volume_1e6m3,
        )?);
    }
    CovariateSeries::new(CovariateKind::ReservoirIndex, start_year, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_reservoirs_is_zero() {
        let s = reservoir_series(&[], 1961, 10, 500.0, 300.0).unwrap();
        assert!(s.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn partial_coverage_dam_reference_value() {
        // Drainage 1395 of 3426 km^2, capacity 514 of 4137 x 10^6 m^3,
        // built 1969: RI ~ 0.0506 from 1969 onward, 0 before.
        let dams = [ReservoirRecord {
            year_built: 1969,
            capacity_1e6m3: 514.0,
            drainage_area_km2: 1395.0,
        }];
        let before = reservoir_index(&dams, 1968, 3426.0, 4137.0).unwrap();
        let after = reservoir_index(&dams, 1969, 3426.0, 4137.0).unwrap();
        assert_eq!(before, 0.0);
        assert!((after - 0.0506).abs() < 0.0005, "RI {after}");
        let exact = (1395.0 / 3426.0) * (514.0 / 4137.0);
        assert!((after - exact).abs() < 1e-15);
    }

    #[test]
    fn full_alteration_bound() {
        let dams = [ReservoirRecord {
            year_built: 1950,
            capacity_1e6m3: 300.0,
            drainage_area_km2: 500.0,
        }];
        let ri = reservoir_index(&dams, 1960, 500.0, 300.0).unwrap();
        assert!((ri - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nondecreasing_step_function() {
        let dams = [
            ReservoirRecord {
                year_built: 1969,
                capacity_1e6m3: 100.0,
                drainage_area_km2: 200.0,
            },
            ReservoirRecord {
                year_built: 1985,
                capacity_1e6m3: 50.0,
                drainage_area_km2: 120.0,
            },
        ];
        let s = reservoir_series(&dams, 1961, 40, 1000.0, 900.0).unwrap();
        let v = s.values();
        for i in 1..v.len() {
            assert!(v[i] >= v[i - 1]);
        }
        // Jumps exactly at the construction years.
        let year = |y: i32| v[(y - 1961) as usize];
        assert_eq!(year(1968), 0.0);
        assert!(year(1969) > 0.0);
        assert!((year(1984) - year(1969)).abs() < 1e-15);
        assert!(year(1985) > year(1984));
    }

    #[test]
    fn impossible_nesting_rejected() {
        let dams = [ReservoirRecord {
            year_built: 1969,
            capacity_1e6m3: 100.0,
            drainage_area_km2: 600.0,
        }];
        assert!(matches!(
            reservoir_index(&dams, 1970, 500.0, 300.0),
            Err(CovariateError::ReservoirLargerThanCatchment { .. })
        ));
    }
}
