//! Number formatting for CSV output.

/// Formats `x` like C's `%.{digits}g`: `digits` significant digits, trailing
/// zeros removed, exponent notation outside `[1e-4, 10^digits)`.
pub fn sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let digits = digits.max(1);
    // Round first so that the exponent reflects the rounded value.
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `%.12g`, the precision used for every CSV file.
pub fn g12(x: f64) -> String {
    sig(x, 12)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        assert_eq!(g12(0.0), "0");
        assert_eq!(g12(1.0), "1");
        assert_eq!(g12(-0.5), "-0.5");
        assert_eq!(g12(std::f64::consts::PI), "3.14159265359");
        assert_eq!(g12(1e-5), "1e-05");
        assert_eq!(g12(1.5e-5), "1.5e-05");
        assert_eq!(g12(1.0e12), "1e+12");
        assert_eq!(g12(123456789012.0), "123456789012");
        assert_eq!(g12(0.0001), "0.0001");
        assert_eq!(sig(9.9999999, 3), "10");
        assert_eq!(sig(-0.30685281944, 6), "-0.306853");
    }

    #[test]
    fn round_trips_to_twelve_digits() {
        for &x in &[0.123456789012345, -4.19723, 6.02e23, 1.0 / 3.0] {
            let back: f64 = g12(x).parse().unwrap();
            assert!(((back - x) / x).abs() < 1e-11);
        }
    }
}
