//! Number formatting for CSV output: 17 significant digits, enough to round-trip any f64.

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Empty cell for a missing value.
pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_and_digit_count() {
        for x in [0.1, -1.4, std::f64::consts::PI, 1e-300, 6.02214076e23, 0.0] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
        }
        assert_eq!(opt(None), "");
    }
}
