//! Rotational-symmetry remap of a measured handle angle into a strategy's
//! continuous-twist window.

use std::f64::consts::TAU;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RemapError {
    #[error("symmetry order must be ≥ 1")]
    ZeroOrder,
    #[error("window width {width} is narrower than the symmetry angle {symmetry}")]
    WindowTooNarrow { width: f64, symmetry: f64 },
}

/// Remaps `measured` by whole multiples of `period / order` so that it lands
/// in `[min, min + period / order)`, which must fit inside `[min, max]`.
pub fn remap_with_period(
    measured: f64,
    order: u32,
    (min, max): (f64, f64),
    period: f64,
) -> Result<f64, RemapError> {
    if order == 0 {
        return Err(RemapError::ZeroOrder);
    }
    let symmetry = period / order as f64;
    if max - min < symmetry {
        return Err(RemapError::WindowTooNarrow {
            width: max - min,
            symmetry,
        });
    }
    let mut offset = (measured - min).rem_euclid(symmetry);
    // rem_euclid can round up to the modulus for tiny negative inputs
    if offset >= symmetry {
        offset -= symmetry;
    }
    Ok(min + offset)
}

/// Radian form of [`remap_with_period`].
pub fn remap_handle_angle(measured: f64, order: u32, window: (f64, f64)) -> Result<f64, RemapError> {
    remap_with_period(measured, order, window, TAU)
}

/// Degree form of [`remap_with_period`].
pub fn remap_handle_angle_deg(
    measured: f64,
    order: u32,
    window: (f64, f64),
) -> Result<f64, RemapError> {
    remap_with_period(measured, order, window, 360.0)
}
