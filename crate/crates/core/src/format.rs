//! Numbers that may leave the double range, and their text form.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// `sign · e^{ln_abs}`; zero is `sign = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogScalar {
    pub sign: i8,
    pub ln_abs: f64,
}

impl LogScalar {
    pub const ZERO: LogScalar = LogScalar {
        sign: 0,
        ln_abs: 0.0,
    };

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogScalar {
                sign: if x > 0.0 { 1 } else { -1 },
                ln_abs: x.abs().ln(),
            }
        }
    }

    /// `mantissa · e^{ln_scale}`.
    pub fn from_scaled(mantissa: f64, ln_scale: f64) -> Self {
        if mantissa == 0.0 {
            Self::ZERO
        } else {
            LogScalar {
                sign: if mantissa > 0.0 { 1 } else { -1 },
                ln_abs: mantissa.abs().ln() + ln_scale,
            }
        }
    }

    pub fn positive_ln(ln_abs: f64) -> Self {
        LogScalar { sign: 1, ln_abs }
    }

    /// Plain value; `±inf` or `0` when out of range.
    pub fn value(&self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * self.ln_abs.exp()
        }
    }

    pub fn is_positive(&self) -> bool {
        self.sign > 0
    }

    pub fn is_negative(&self) -> bool {
        self.sign < 0
    }

    /// Natural log of the magnitude, `-inf` for zero.
    pub fn ln(&self) -> f64 {
        if self.sign == 0 {
            f64::NEG_INFINITY
        } else {
            self.ln_abs
        }
    }

    /// `self / other` as a plain number (for ratios of comparable size).
    pub fn ratio(&self, other: &LogScalar) -> f64 {
        if self.sign == 0 {
            return 0.0;
        }
        f64::from(self.sign * other.sign) * (self.ln_abs - other.ln_abs).exp()
    }
}

/// Full-precision decimal text: shortest round-trip form for ordinary
/// doubles, scientific with 17 significant digits otherwise.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Decimal text for a [`LogScalar`], exact exponent even far outside the
/// double range.
pub fn fmt_log(x: &LogScalar) -> String {
    if x.sign == 0 {
        return fmt_f64(0.0);
    }
    let v = x.value();
    if v.is_finite() && v.abs() >= f64::MIN_POSITIVE {
        return fmt_f64(v);
    }
    let log10 = x.ln_abs / std::f64::consts::LN_10;
    let mut e = log10.floor();
    let mut m = 10f64.powf(log10 - e);
    if m >= 10.0 {
        m /= 10.0;
        e += 1.0;
    }
    let mut s = String::new();
    if x.sign < 0 {
        s.push('-');
    }
    let _ = write!(s, "{m:.16}e{}", e as i64);
    s
}

/// Writes rows of already-formatted cells as CSV.
pub fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats() {
        assert_eq!(fmt_f64(2.0), "2.0000000000000000e0");
        assert_eq!(fmt_log(&LogScalar::from_f64(0.5)), "5.0000000000000000e-1");
        let huge = LogScalar::positive_ln(1000.5 * std::f64::consts::LN_10);
        assert!(fmt_log(&huge).ends_with("e1000"), "{}", fmt_log(&huge));
        let tiny = LogScalar {
            sign: -1,
            ln_abs: -799.5 * std::f64::consts::LN_10,
        };
        assert!(fmt_log(&tiny).starts_with("-") && fmt_log(&tiny).ends_with("e-800"));
        assert_eq!(LogScalar::from_f64(0.0), LogScalar::ZERO);
        assert!((LogScalar::from_f64(6.0).ratio(&LogScalar::from_f64(3.0)) - 2.0).abs() < 1e-15);
    }
}
