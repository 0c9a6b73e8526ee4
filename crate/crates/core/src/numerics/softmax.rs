use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Numerically stable softmax (max-subtracted).
pub fn softmax<T: Scalar>(logits: &[T]) -> Result<Vec<T>> {
    if logits.is_empty() {
        return Err(Error::config("softmax of an empty vector"));
    }
    let max = logits.iter().fold(T::neg_infinity(), |m, &x| m.max(x));
    let exps: Vec<T> = logits.iter().map(|&x| (x - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// `log(softmax(logits))` computed without forming the probabilities first.
pub fn log_softmax<T: Scalar>(logits: &[T]) -> Result<Vec<T>> {
    if logits.is_empty() {
        return Err(Error::config("log-softmax of an empty vector"));
    }
    let max = logits.iter().fold(T::neg_infinity(), |m, &x| m.max(x));
    let lse = max + logits.iter().map(|&x| (x - max).exp()).sum::<T>().ln();
    Ok(logits.iter().map(|&x| x - lse).collect())
}

/// Shannon entropy (nats) of a distribution.
pub fn entropy<T: Scalar>(probs: &[T]) -> T {
    probs
        .iter()
        .filter(|&&p| p > T::zero())
        .map(|&p| -p * p.ln())
        .sum()
}

pub fn argmax<T: Scalar>(xs: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_and_shift_invariant() {
        assert_eq!(softmax(&[0.0f64, 0.0]).unwrap(), vec![0.5, 0.5]);
        for c in [-50.0, 0.0, 3.7, 900.0] {
            for p in softmax(&[c, c, c]).unwrap() {
                assert!((p - 1.0 / 3.0f64).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn large_logits_do_not_overflow() {
        let p = softmax(&[1000.0f64, 0.0]).unwrap();
        assert!(p.iter().all(|x| x.is_finite()));
        assert_eq!(p[0], 1.0);
        assert!(p[1] < 1e-300 || p[1] == 0.0);
        let lp = log_softmax(&[1000.0f64, 0.0]).unwrap();
        assert!((lp[1] + 1000.0).abs() < 1e-9);
    }

    #[test]
    fn empty_is_error() {
        assert!(softmax::<f64>(&[]).is_err());
        assert!(log_softmax::<f32>(&[]).is_err());
    }

    #[test]
    fn entropy_of_uniform() {
        let h = entropy(&[0.25f64; 4]);
        assert!((h - 4.0f64.ln()).abs() < 1e-12);
        assert_eq!(argmax(&[0.1, 0.7, 0.7, 0.2]), 1);
    }
}
