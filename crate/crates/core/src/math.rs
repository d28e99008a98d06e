// Float helpers routed through libm so the crate builds without std.

use num_complex::Complex64;

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub(crate) fn tan(x: f64) -> f64 {
    libm::tan(x)
}

#[inline]
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub(crate) fn acos(x: f64) -> f64 {
    libm::acos(x)
}

#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub(crate) fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

// num-complex's transcendental methods switch between libm and std math
// depending on which features other crates enable; these keep results
// identical across build configurations.

pub(crate) fn polar(r: f64, theta: f64) -> Complex64 {
    Complex64::new(r * cos(theta), r * sin(theta))
}

pub(crate) fn abs(z: Complex64) -> f64 {
    hypot(z.re, z.im)
}

/// Principal square root.
pub(crate) fn csqrt(z: Complex64) -> Complex64 {
    let r = abs(z);
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let t = sqrt(0.5 * (r + z.re.abs()));
    if z.re >= 0.0 {
        Complex64::new(t, z.im / (2.0 * t))
    } else {
        Complex64::new(z.im.abs() / (2.0 * t), libm::copysign(t, z.im))
    }
}
