//! Number formatting shared by CSV writers.

/// Scientific notation with six significant digits and an exponent of at least
/// two digits, e.g. `1.38000e-04`.
pub fn format_sci(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.5e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats() {
        assert_eq!(format_sci(1.38e-4), "1.38000e-04");
        assert_eq!(format_sci(0.0), "0.00000e+00");
        assert_eq!(format_sci(-2.5e11), "-2.50000e+11");
        assert_eq!(format_sci(1.234567e120), "1.23457e+120");
        assert_eq!(format_sci(f64::INFINITY), "inf");
        assert_eq!(format_sci(f64::NAN), "NaN");
    }
}
