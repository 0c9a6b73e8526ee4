//! Exact visit counts and the pseudo-count identities built on them.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::envs::StateKey;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Added inside the square root so unseen states get a finite bonus.
pub const COUNT_BONUS_DELTA: f64 = 0.01;

/// How the "after one more visit" density is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DensityForm {
    /// `rho' = (N + 1) / (n + 1)`: the density after actually recording the visit.
    /// The pseudo-count identity recovers `N` exactly under this form.
    #[default]
    Recoding,
    /// `rho' = (N + 1) / n`, sharing the denominator with `rho`.
    SharedDenominator,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountModel {
    counts: HashMap<StateKey, u64>,
    total: u64,
}

impl CountModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_visit(&mut self, key: &[i32]) {
        *self.counts.entry(key.to_vec()).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn count(&self, key: &[i32]) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn distinct_states(&self) -> usize {
        self.counts.len()
    }

    /// `(rho, rho')` for `key` under the recoding form.
    pub fn density_pair<T: Scalar>(&self, key: &[i32]) -> Result<(T, T)> {
        self.density_pair_with(key, DensityForm::Recoding)
    }

    pub fn density_pair_with<T: Scalar>(&self, key: &[i32], form: DensityForm) -> Result<(T, T)> {
        if self.total == 0 {
            return Err(Error::Domain("density undefined before any visit is recorded".into()));
        }
        let n = T::lit(self.total as f64);
        let count = T::lit(self.count(key) as f64);
        let rho = count / n;
        let rho_next = match form {
            DensityForm::Recoding => (count + T::one()) / (n + T::one()),
            DensityForm::SharedDenominator => (count + T::one()) / n,
        };
        Ok((rho, rho_next))
    }

    /// Pseudo-count of `key` from its density pair, or 0 before any visit.
    pub fn pseudo_count_of<T: Scalar>(&self, key: &[i32], form: DensityForm) -> Result<T> {
        if self.total == 0 {
            return Ok(T::zero());
        }
        let (rho, rho_next) = self.density_pair_with::<T>(key, form)?;
        pseudo_count(rho, rho_next)
    }

    /// Count used for the exploration bonus: the pseudo-count, except when
    /// every recorded visit was to `key`. The density pair is then `(1, 1)`
    /// and carries no count information, so the exact count is returned.
    pub fn count_estimate<T: Scalar>(&self, key: &[i32], form: DensityForm) -> Result<T> {
        if self.total > 0 && self.count(key) == self.total {
            return Ok(T::lit(self.total as f64));
        }
        self.pseudo_count_of(key, form)
    }
}

/// `N = rho (1 - rho') / (rho' - rho)`
pub fn pseudo_count<T: Scalar>(rho: T, rho_next: T) -> Result<T> {
    if rho == T::one() && rho_next == T::one() {
        return Err(Error::Domain("degenerate density pair (1, 1): every visit was to this state".into()));
    }
    if !(rho_next > rho) {
        return Err(Error::Domain(format!("pseudo-count needs rho' > rho, got rho={rho}, rho'={rho_next}")));
    }
    Ok(rho * (T::one() - rho_next) / (rho_next - rho))
}

/// `(N + delta)^(-1/2)`, strictly decreasing in `N`.
pub fn count_bonus<T: Scalar>(count: T) -> Result<T> {
    if !(count >= T::zero()) {
        return Err(Error::Domain(format!("count bonus of a negative count {count}")));
    }
    Ok((count + T::lit(COUNT_BONUS_DELTA)).sqrt().recip())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_visits() {
        let mut m = CountModel::new();
        m.record_visit(&[1]);
        assert_eq!((m.count(&[1]), m.total()), (1, 1));
        for _ in 0..4 {
            m.record_visit(&[1]);
        }
        assert_eq!((m.count(&[1]), m.total()), (5, 5));
        let mut m = CountModel::new();
        for k in [0, 1, 0, 1, 0] {
            m.record_visit(&[k]);
        }
        assert_eq!((m.count(&[0]), m.count(&[1]), m.total()), (3, 2, 5));
    }

    #[test]
    fn density_pairs() {
        let mut m = CountModel::new();
        m.record_visit(&[7]);
        m.record_visit(&[8]);
        let (r, r2): (f64, f64) = m.density_pair(&[7]).unwrap();
        assert_eq!(r, 0.5);
        assert!((r2 - 2.0 / 3.0).abs() < 1e-15);
        for k in 0..3 {
            m.record_visit(&[9 + k]);
        }
        assert_eq!(m.density_pair::<f64>(&[100]).unwrap(), (0.0, 1.0 / 6.0));
        assert!(CountModel::new().density_pair::<f64>(&[0]).is_err());
    }

    #[test]
    fn count_estimate_handles_a_single_visited_state() {
        let mut m = CountModel::new();
        assert_eq!(m.count_estimate::<f64>(&[4], DensityForm::Recoding).unwrap(), 0.0);
        m.record_visit(&[4]);
        m.record_visit(&[4]);
        assert!(m.pseudo_count_of::<f64>(&[4], DensityForm::Recoding).is_err());
        assert_eq!(m.count_estimate::<f64>(&[4], DensityForm::Recoding).unwrap(), 2.0);
        assert_eq!(m.count_estimate::<f64>(&[5], DensityForm::Recoding).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_pair_rejected() {
        let mut m = CountModel::new();
        m.record_visit(&[0]);
        m.record_visit(&[0]);
        let (r, r2): (f64, f64) = m.density_pair(&[0]).unwrap();
        assert_eq!((r, r2), (1.0, 1.0));
        assert!(pseudo_count(r, r2).is_err());
        assert!(pseudo_count(0.5, 0.4).is_err());
    }

    #[test]
    fn pseudo_count_values() {
        assert!((pseudo_count(0.5f64, 2.0 / 3.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(pseudo_count(0.0f64, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn shared_denominator_does_not_recover_counts() {
        let mut m = CountModel::new();
        for k in [0, 0, 0, 1, 2, 2, 3, 3, 3, 3] {
            m.record_visit(&[k]);
        }
        let exact: f64 = m.pseudo_count_of(&[0], DensityForm::Recoding).unwrap();
        assert!((exact - 3.0).abs() < 1e-12);
        let shared: f64 = m.pseudo_count_of(&[0], DensityForm::SharedDenominator).unwrap();
        // N (1 - (N+1)/n) with N = 3, n = 10
        assert!((shared - 3.0 * (1.0 - 0.4)).abs() < 1e-12);
    }

    #[test]
    fn count_bonus_values() {
        assert!((count_bonus(4.0f64).unwrap() - 4.01f64.powf(-0.5)).abs() < 1e-15);
        assert!((count_bonus(4.0f64).unwrap() - 0.4994).abs() < 1e-4);
        assert!((count_bonus(100.0f64).unwrap() - 0.099995).abs() < 1e-6);
        assert!((count_bonus(0.0f64).unwrap() - 10.0).abs() < 1e-12);
        assert!(count_bonus(-1.0f64).is_err());
        for n in 0..100 {
            assert!(count_bonus(n as f64).unwrap() > count_bonus(n as f64 + 1.0).unwrap());
        }
    }
}
