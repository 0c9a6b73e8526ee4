use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::numerics::MlpNetwork;
use crate::scalar::Scalar;

/// Copy of `net` with i.i.d. `N(0, sigma^2)` noise on every parameter.
pub fn perturb_parameters<T: Scalar, R: Rng + ?Sized>(net: &MlpNetwork<T>, sigma: f64, rng: &mut R) -> MlpNetwork<T> {
    let mut out = net.clone();
    if sigma == 0.0 {
        return out;
    }
    for p in out.params_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *p = *p + T::lit(sigma * z);
    }
    out
}
