/// Discrete state identity: one bin index per observation coordinate,
/// or the exact state index for tabular environments.
pub type StateKey = Vec<i32>;

/// Uniform grid over a box; values outside the box land in the edge bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretizer {
    lows: Vec<f64>,
    highs: Vec<f64>,
    bins: usize,
}

impl Discretizer {
    pub const DEFAULT_BINS: usize = 10;

    pub fn new(lows: Vec<f64>, highs: Vec<f64>, bins: usize) -> Self {
        assert_eq!(lows.len(), highs.len());
        assert!(bins > 0);
        assert!(lows.iter().zip(&highs).all(|(l, h)| h > l));
        Self { lows, highs, bins }
    }

    pub fn key(&self, observation: &[f64]) -> StateKey {
        observation
            .iter()
            .zip(self.lows.iter().zip(&self.highs))
            .map(|(&x, (&lo, &hi))| {
                let t = ((x - lo) / (hi - lo) * self.bins as f64).floor();
                t.clamp(0.0, (self.bins - 1) as f64) as i32
            })
            .collect()
    }

    /// Interior bin edges of coordinate `dim`.
    pub fn edges(&self, dim: usize) -> Vec<f64> {
        let (lo, hi) = (self.lows[dim], self.highs[dim]);
        (1..self.bins).map(|k| lo + (hi - lo) * k as f64 / self.bins as f64).collect()
    }
}
