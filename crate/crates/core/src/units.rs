//! Physical constants and frequency unit helpers.
//!
//! Every frequency and rate inside the crate is an angular frequency in rad/s.

use std::f64::consts::TAU;

/// Reduced Planck constant, J·s (CODATA 2018, exact via h).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Planck constant, J·s (exact).
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Boltzmann constant, J/K (exact).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// `2π × value MHz` in rad/s.
pub fn mhz_2pi(value: f64) -> f64 {
    TAU * value * 1e6
}

/// `2π × value GHz` in rad/s.
pub fn ghz_2pi(value: f64) -> f64 {
    TAU * value * 1e9
}

/// Inverse of [`mhz_2pi`].
pub fn to_mhz_2pi(omega: f64) -> f64 {
    omega / (TAU * 1e6)
}

/// Boltzmann exponent `ħω / k_B T`; infinite at `T = 0`.
pub fn boltzmann_exponent(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        f64::INFINITY
    } else {
        HBAR * omega / (BOLTZMANN * temperature)
    }
}
