//! Wrapped Cauchy distribution over turn angles.
//!
//! The random walk draws its turning angles from a wrapped Cauchy
//! distribution whose concentration interpolates between a uniform turn
//! (concentration 0, uncorrelated walk) and no turn at all (concentration
//! close to 1, straight-line persistence).

use crate::error::{Error, Result};
use crate::geometry::wrap_angle;
use rand::Rng;
use std::f64::consts::PI;

/// Density of the wrapped Cauchy distribution at `theta`, with mean
/// direction `mean` and concentration `concentration` in `[0, 1)`.
///
/// This closed form is the reference the sampler is validated against.
pub fn wrapped_cauchy_pdf(theta: f64, mean: f64, concentration: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&concentration) {
        return Err(Error::Config(format!(
            "wrapped Cauchy concentration must be in [0, 1), got {concentration}"
        )));
    }
    let rho = concentration;
    let numerator = 1.0 - rho * rho;
    let denominator = 1.0 + rho * rho - 2.0 * rho * (theta - mean).cos();
    Ok(numerator / (2.0 * PI * denominator))
}

/// Draws one turn angle in `[-pi, pi)` by inverse-transform sampling.
///
/// With u uniform on [0, 1), the angle `2 atan(((1-rho)/(1+rho)) tan(pi (u - 1/2)))`
/// has the wrapped Cauchy density with mean 0; the mean direction is added
/// afterwards and the result wrapped.
pub fn sample_turn_angle<R: Rng + ?Sized>(mean: f64, concentration: f64, rng: &mut R) -> f64 {
    debug_assert!((0.0..1.0).contains(&concentration));
    let u: f64 = rng.gen();
    if concentration == 0.0 {
        // Uniform turn; avoids tan/atan noise at the interval ends.
        return wrap_angle(mean + (u - 0.5) * 2.0 * PI);
    }
    let scale = (1.0 - concentration) / (1.0 + concentration);
    let angle = 2.0 * (scale * (PI * (u - 0.5)).tan()).atan();
    wrap_angle(mean + angle)
}
