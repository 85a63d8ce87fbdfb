//! Observed convergence orders over grid refinements.

/// Residuals below this level are treated as rounding noise.
pub const FLOOR: f64 = 1e-12;

/// Residuals of one check over a sequence of grids.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    /// Interval counts, finest last.
    pub grids: Vec<usize>,
    pub residuals: Vec<f64>,
    /// Least-squares slope of log(residual) against log(1/N); `None` when
    /// fewer than two residuals lie above [`FLOOR`].
    pub slope: Option<f64>,
    /// Every residual is at the rounding floor.
    pub floor_reached: bool,
}

impl ConvergenceReport {
    pub fn new(grids: Vec<usize>, residuals: Vec<f64>) -> Self {
        let floor_reached = residuals.iter().all(|r| *r < FLOOR);
        let pairs: Vec<(f64, f64)> = grids
            .iter()
            .zip(&residuals)
            .filter(|(_, r)| **r >= FLOOR && r.is_finite())
            .map(|(n, r)| ((1.0 / *n as f64).ln(), r.ln()))
            .collect();
        let slope = if pairs.len() >= 2 { Some(least_squares_slope(&pairs)) } else { None };
        Self {
            grids,
            residuals,
            slope,
            floor_reached,
        }
    }

    pub fn finest(&self) -> f64 {
        *self.residuals.last().unwrap_or(&f64::NAN)
    }

    /// Slope within `expected ± tol`, or the floor was reached.
    pub fn slope_within(&self, expected: f64, tol: f64) -> bool {
        self.floor_reached || self.slope.is_some_and(|s| (s - expected).abs() <= tol)
    }

    pub fn slope_at_least(&self, min: f64) -> bool {
        self.floor_reached || self.slope.is_some_and(|s| s >= min)
    }
}

/// Slope of the least-squares line through (x, y) pairs.
pub fn least_squares_slope(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pairs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pairs.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// N, 2N, 4N, ... (`k` levels).
pub fn refinements(base: usize, k: usize) -> Vec<usize> {
    (0..k).map(|i| base << i).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_known_order() {
        let grids = refinements(10, 4);
        let res: Vec<f64> = grids.iter().map(|n| 3.0 / (*n as f64).powi(2)).collect();
        let r = ConvergenceReport::new(grids, res);
        assert!((r.slope.unwrap() - 2.0).abs() < 1e-12);
        assert!(r.slope_within(2.0, 0.1));
    }

    #[test]
    fn floor_is_reported() {
        let r = ConvergenceReport::new(vec![10, 20, 40], vec![1e-15, 2e-16, 0.0]);
        assert!(r.floor_reached);
        assert!(r.slope.is_none());
    }
}
