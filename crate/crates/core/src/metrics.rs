use crate::error::{invalid, Result};
use crate::vector::{check_len, dist_sq, Vector};
#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

pub const DEFAULT_PEAK: f64 = 1.0;

/// Peak signal-to-noise ratio in dB; `+∞` when the images coincide.
pub fn psnr(x: &Vector, reference: &Vector, peak: f64) -> Result<f64> {
    check_len(reference.dim(), x.dim())?;
    if !(peak > 0.0) {
        return Err(invalid("peak", "must be positive"));
    }
    let mse = dist_sq(x.as_slice(), reference.as_slice()) / x.dim() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}
