//! Number formatting for CSV and text output.

/// Formats `x` with nine significant digits, dropping trailing zeros.
///
/// Integers print without a decimal point; very large or small magnitudes
/// switch to exponent notation.
pub fn sig9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..9).contains(&exp) {
        let s = format!("{:.8e}", x);
        let (mantissa, e) = s.split_once('e').expect("exponent form");
        return format!("{}e{}", trim_zeros(mantissa), e);
    }
    let decimals = (8 - exp).max(0) as usize;
    let s = format!("{:.*}", decimals, x);
    // Rounding may carry into a new digit; that only adds one significant figure
    // when the integer part grows, which is harmless for output purposes.
    let t = trim_zeros(&s);
    if t == "-0" {
        "0".into()
    } else {
        t
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Comma-joined [`sig9`] values.
pub fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|&v| sig9(v))
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_digits() {
        assert_eq!(sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(sig9(2.0 / 3.0), "0.666666667");
        assert_eq!(sig9(15.0), "15");
        assert_eq!(sig9(-5.0), "-5");
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(-1e-12), "-1e-12");
        assert_eq!(sig9(123456.789123), "123456.789");
        assert_eq!(sig9(1.5e10), "1.5e10");
        assert_eq!(join(&[0.5, 2.0]), "0.5,2");
    }
}
