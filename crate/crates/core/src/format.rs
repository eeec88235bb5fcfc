//! Text formatting shared by the dump and CSV writers.

/// Formats `v` with `digits` significant digits, like C's `%.{digits}g`.
pub fn sig(v: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -4 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, v)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::sig;

    #[test]
    fn matches_printf_g() {
        assert_eq!(sig(1.0, 9), "1");
        assert_eq!(sig(-0.5, 9), "-0.5");
        assert_eq!(sig(1.0 / 3.0, 9), "0.333333333");
        assert_eq!(sig(123456789.4, 9), "123456789");
        assert_eq!(sig(1234567890.0, 9), "1.23456789e+09");
        assert_eq!(sig(0.00001234, 9), "1.234e-05");
        assert_eq!(sig(9.9999999996, 9), "10");
        assert_eq!(sig(0.0001, 9), "0.0001");
    }
}
