//! Complex gamma function (Lanczos, g = 7, nine coefficients) with reflection.

use num_complex::Complex64;
use std::f64::consts::PI;

const G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(z)` for `Re z ≥ 1/2` (principal-branch pieces, not continuous in z).
fn ln_gamma_right(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, &p) in LANCZOS.iter().enumerate().skip(1) {
        x += p / (z + i as f64);
    }
    let t = z + G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

/// `sin(πz)` with exact reduction of the real part, so integers give exact zeros.
pub fn sin_pi(z: Complex64) -> Complex64 {
    let r = z.re.rem_euclid(2.0);
    let (s, c) = match r {
        0.0 => (0.0, 1.0),
        0.5 => (1.0, 0.0),
        1.0 => (0.0, -1.0),
        1.5 => (-1.0, 0.0),
        r => ((PI * r).sin(), (PI * r).cos()),
    };
    let y = PI * z.im;
    Complex64::new(s * y.cosh(), c * y.sinh())
}

/// `Γ(z)`; poles return an infinite value.
pub fn gamma(z: Complex64) -> Complex64 {
    if z.re >= 0.5 {
        ln_gamma_right(z).exp()
    } else {
        let s = sin_pi(z);
        if s == Complex64::new(0.0, 0.0) {
            return Complex64::new(f64::INFINITY, 0.0);
        }
        PI / (s * ln_gamma_right(1.0 - z).exp())
    }
}

/// `1/Γ(z)`, entire; exact zero at the non-positive integers.
pub fn rgamma(z: Complex64) -> Complex64 {
    if z.re >= 0.5 {
        (-ln_gamma_right(z)).exp()
    } else {
        sin_pi(z) * ln_gamma_right(1.0 - z).exp() / PI
    }
}

/// `ln Γ(x)` for real `x > 0`.
pub fn ln_gamma_real(x: f64) -> f64 {
    ln_gamma_right(Complex64::new(x, 0.0)).re
}

/// Pochhammer symbol `(a)_n = a(a+1)…(a+n−1)`.
pub fn pochhammer(a: Complex64, n: u32) -> Complex64 {
    (0..n).fold(Complex64::new(1.0, 0.0), |acc, k| acc * (a + k as f64))
}
