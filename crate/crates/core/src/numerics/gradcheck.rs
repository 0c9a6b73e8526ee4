//! Central finite-difference verification of analytic gradients.

use crate::error::Result;
use crate::numerics::mlp::MlpNetwork;
use crate::scalar::Scalar;

/// Gradients smaller than this are compared in absolute rather than relative terms.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-6;

/// Default central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Default step for the five-point stencil on smooth losses.
pub const FIVE_POINT_STEP: f64 = 1e-3;

/// Finite-difference formula used by [`check_gradient_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    /// `(f(x+h) - f(x-h)) / 2h`, error `O(h^2)`.
    Central,
    /// `(-f(x+2h) + 8 f(x+h) - 8 f(x-h) + f(x-2h)) / 12h`, error `O(h^4)`.
    /// Allows a larger step, so roundoff matters less on losses of large
    /// magnitude; only valid where the loss is smooth within `2h`.
    FivePoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst_coordinate: usize,
    pub coordinates: usize,
    pub tolerance: f64,
    pub passed: bool,
}

/// `|a - n| / max(|a|, |n|, RELATIVE_ERROR_FLOOR)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR);
    (analytic - numeric).abs() / scale
}

/// Compares `analytic` against central differences of `loss` around `params`.
pub fn check_gradient<T, F>(params: &[T], analytic: &[T], loss: F, step: f64, tolerance: f64) -> GradCheckReport
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    check_gradient_with(params, analytic, loss, Stencil::Central, step, tolerance)
}

/// [`check_gradient`] with a chosen stencil.
pub fn check_gradient_with<T, F>(
    params: &[T],
    analytic: &[T],
    mut loss: F,
    stencil: Stencil,
    step: f64,
    tolerance: f64,
) -> GradCheckReport
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    assert_eq!(params.len(), analytic.len(), "gradient and parameter lengths differ");
    let mut work = params.to_vec();
    let h = T::lit(step);
    let mut max_rel = 0.0f64;
    let mut worst = 0;
    for i in 0..params.len() {
        let orig = work[i];
        let mut at = |x: T| {
            work[i] = x;
            loss(&work)
        };
        let numeric = match stencil {
            Stencil::Central => (at(orig + h) - at(orig - h)) / (h + h),
            Stencil::FivePoint => {
                let (h2, eight) = (h + h, T::lit(8.0));
                (eight * (at(orig + h) - at(orig - h)) - (at(orig + h2) - at(orig - h2))) / (T::lit(12.0) * h)
            }
        }
        .to_f64_lossy();
        work[i] = orig;
        let rel = relative_error(analytic[i].to_f64_lossy(), numeric);
        if !(rel <= max_rel) {
            max_rel = rel;
            worst = i;
        }
    }
    GradCheckReport {
        max_relative_error: max_rel,
        worst_coordinate: worst,
        coordinates: params.len(),
        tolerance,
        passed: max_rel <= tolerance,
    }
}

/// Checks a network's backward pass for a loss defined on its output at `input`.
///
/// `loss_fn` returns the loss value and its gradient with respect to the output.
pub fn finite_diff_check<T, F>(net: &MlpNetwork<T>, loss_fn: F, input: &[T], tolerance: f64) -> Result<GradCheckReport>
where
    T: Scalar,
    F: Fn(&[T]) -> (T, Vec<T>),
{
    let (out, cache) = net.forward(input)?;
    let (_, seed) = loss_fn(&out);
    let analytic = net.backward(&cache, &seed)?;
    let mut probe = net.clone();
    Ok(check_gradient(
        net.params(),
        &analytic,
        |p| {
            probe.params_mut().copy_from_slice(p);
            let out = probe.predict(input).expect("input validated by the first forward pass");
            loss_fn(&out).0
        },
        FD_STEP,
        tolerance,
    ))
}
