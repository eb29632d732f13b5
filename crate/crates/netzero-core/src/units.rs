//! Unit conversions between external (GHz, MHz, us, ns) and internal (rad/s, s)
//! quantities. All conversions happen here so that the factor of 2*pi appears in
//! exactly one place.

use std::f64::consts::PI;

pub const TWO_PI: f64 = 2.0 * PI;

/// Ordinary frequency in GHz to angular frequency in rad/s.
pub fn ghz_to_rad(f_ghz: f64) -> f64 {
    TWO_PI * f_ghz * 1e9
}

/// Angular frequency in rad/s to ordinary frequency in GHz.
pub fn rad_to_ghz(w: f64) -> f64 {
    w / (TWO_PI * 1e9)
}

/// Ordinary frequency in MHz to angular frequency in rad/s.
pub fn mhz_to_rad(f_mhz: f64) -> f64 {
    TWO_PI * f_mhz * 1e6
}

/// Angular frequency in rad/s to ordinary frequency in MHz.
pub fn rad_to_mhz(w: f64) -> f64 {
    w / (TWO_PI * 1e6)
}

/// Microseconds to seconds.
pub fn us_to_s(t_us: f64) -> f64 {
    t_us * 1e-6
}

/// Nanoseconds to seconds.
pub fn ns_to_s(t_ns: f64) -> f64 {
    t_ns * 1e-9
}

/// Seconds to nanoseconds.
pub fn s_to_ns(t: f64) -> f64 {
    t * 1e9
}

/// Radians to degrees.
pub fn rad_to_deg(x: f64) -> f64 {
    x * 180.0 / PI
}

/// Degrees to radians.
pub fn deg_to_rad(x: f64) -> f64 {
    x * PI / 180.0
}

/// Wrap an angle into (-pi, pi].
pub fn wrap_angle(x: f64) -> f64 {
    let mut y = x.rem_euclid(TWO_PI);
    if y > PI {
        y -= TWO_PI;
    }
    y
}
