//! Compact significant-digit formatting for CSV output.
//!
//! `fmt_sig` renders a float with up to 9 significant digits, fixed or
//! scientific notation chosen by magnitude, trailing zeros trimmed — the
//! shortest form that round-trips the value at that precision, so CSV files
//! stay diffable across runs.

/// Format with 9 significant digits: fixed notation while the rounded
/// exponent is in [-4, 8], otherwise scientific with a signed two-digit
/// exponent. Trailing fractional zeros are trimmed; -0 normalizes to "0".
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x < 0.0 { "-inf" } else { "inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let magnitude = x.abs();
    // Round to 9 significant digits first; the exponent that picks the
    // notation must come from the rounded value (e.g. 999999999.6 → 1e+09).
    let rounded = format!("{magnitude:.8e}");
    let (mantissa, exponent) = rounded
        .split_once('e')
        .expect("{:e} always contains an exponent");
    let exponent: i32 = exponent.parse().expect("{:e} exponent is an integer");
    let body = if (-4..9).contains(&exponent) {
        let decimals = (8 - exponent).max(0) as usize;
        trim_fraction(&format!("{magnitude:.decimals$}"))
    } else {
        format!(
            "{}e{}{:02}",
            trim_fraction(mantissa),
            if exponent < 0 { '-' } else { '+' },
            exponent.abs()
        )
    };
    if x < 0.0 {
        format!("-{body}")
    } else {
        body
    }
}

fn trim_fraction(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}
