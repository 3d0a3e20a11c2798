//! Threshold increments aimed at doubling the work per iteration.

/// `(threshold, expansions)` of past iterations, both in scaled units.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ThresholdSchedule {
    history: Vec<(i64, u64)>,
}

/// Number of recent iterations the growth fit uses.
const FIT_POINTS: usize = 3;

impl ThresholdSchedule {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record an iteration. Points must arrive with increasing thresholds.
    pub fn record(&mut self, thresh: i64, expansions: u64) {
        debug_assert!(self.history.last().is_none_or(|&(t, _)| t < thresh));
        self.history.push((thresh, expansions));
    }

    pub fn clear(&mut self) {
        self.history.clear();
    }

    pub fn history(&self) -> &[(i64, u64)] {
        &self.history
    }

    /// Slope of log2(expansions) over threshold, by least squares on the
    /// most recent points. `None` with fewer than three points.
    pub fn growth_slope(&self) -> Option<f64> {
        if self.history.len() < FIT_POINTS {
            return None;
        }
        let pts = &self.history[self.history.len() - FIT_POINTS..];
        let xs: Vec<f64> = pts.iter().map(|&(t, _)| t as f64).collect();
        let ys: Vec<f64> = pts.iter().map(|&(_, n)| (n.max(1) as f64).log2()).collect();
        let n = FIT_POINTS as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        (sxx > 0.0).then(|| sxy / sxx)
    }

    /// Next threshold increment: the step that doubles the fitted expansion
    /// count, ⌈1/slope⌉, or the default `max(1, ⌈h(start)/1000⌉)` while the
    /// history is too short or not growing.
    pub fn increment(&self, h_start: i64) -> i64 {
        let default = 1.max((h_start.max(0) + 999) / 1000);
        match self.growth_slope() {
            Some(s) if s.is_finite() && s > 0.0 => {
                let inc = (1.0 / s).ceil();
                if inc >= i64::MAX as f64 {
                    i64::MAX / 4
                } else {
                    (inc as i64).max(1)
                }
            }
            _ => default,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_fit() {
        let mut s = ThresholdSchedule::new();
        s.record(10, 100);
        s.record(20, 400);
        assert_eq!(s.increment(0), 1);
        s.record(30, 1600);
        assert!((s.growth_slope().unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(s.increment(0), 5);
    }

    #[test]
    fn default_increment() {
        let s = ThresholdSchedule::new();
        assert_eq!(s.increment(0), 1);
        assert_eq!(s.increment(5000), 5);
        assert_eq!(s.increment(5001), 6);
    }

    #[test]
    fn flat_history_falls_back() {
        let mut s = ThresholdSchedule::new();
        for t in [1, 2, 3] {
            s.record(t, 50);
        }
        assert_eq!(s.increment(3000), 3);
        s.record(4, 10);
        assert_eq!(s.increment(3000), 3);
    }
}
