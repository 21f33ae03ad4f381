//! Number formatting for output files.

use num_complex::Complex64;

/// Real with 17 significant digits, scientific notation. Round-trips exactly.
pub fn fmt_real(x: f64) -> String {
    if x == 0.0 {
        // avoid "-0e0" noise from cancellations
        return "0.0000000000000000e0".to_string();
    }
    format!("{x:.16e}")
}

/// Complex value as a `[re, im]` pair.
pub fn complex_pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn from_pair(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_round_trip() {
        for x in [1.0 / 3.0, 2.0f64.sqrt(), -1e-300, 123456.789, 0.1 + 0.2] {
            let s = fmt_real(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_real(-0.0), fmt_real(0.0));
    }
}
