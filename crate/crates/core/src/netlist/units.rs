//! SPICE-style engineering values: `3k`, `100Meg`, `2.5e-3s`, `400pF`.
//!
//! Values are assembled by shifting the decimal exponent in text before a
//! single correctly rounded conversion, so printing with [`format_value`]
//! and parsing again reproduces the same `f64` bit for bit.

use std::fmt;

/// Physical dimension implied by a unit letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Volt,
    Ohm,
    Farad,
    Second,
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::Volt => "V",
            Unit::Ohm => "ohm",
            Unit::Farad => "F",
            Unit::Second => "s",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub unit: Option<Unit>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValueError {
    /// Not a number at all.
    NotANumber,
    /// Numeric prefix followed by an unknown suffix.
    BadSuffix(String),
    /// Overflows `f64`.
    OutOfRange,
}

impl fmt::Display for ValueError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueError::NotANumber => f.write_str("not a number"),
            ValueError::BadSuffix(s) => write!(f, "unknown unit suffix '{s}'"),
            ValueError::OutOfRange => f.write_str("value out of range"),
        }
    }
}

const SCALES: [(&str, i32); 7] = [
    ("meg", 6),
    ("p", -12),
    ("n", -9),
    ("u", -6),
    ("m", -3),
    ("k", 3),
    ("g", 9),
];

const UNITS: [(&str, Unit); 4] = [
    ("ohm", Unit::Ohm),
    ("v", Unit::Volt),
    ("f", Unit::Farad),
    ("s", Unit::Second),
];

/// Parse a number with optional scale suffix and optional unit letters.
/// Suffixes and units are case-insensitive; `m` is milli and `Meg` is mega.
pub fn parse_quantity(text: &str) -> Result<Quantity, ValueError> {
    let bytes = text.as_bytes();
    let mut i = 0;
    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
        i += 1;
    }
    let int_start = i;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return Err(ValueError::NotANumber);
    }
    let mantissa_end = i;
    let mut exponent: i64 = 0;
    // exponent only if followed by digits, so "1e" is a bad suffix
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        let exp_digits = j;
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
        if j > exp_digits {
            exponent = text[i + 1..j].parse::<i64>().map_err(|_| ValueError::OutOfRange)?;
            i = j;
        }
    }
    let rest = &text[i..];
    let lower = rest.to_ascii_lowercase();
    let mut tail = lower.as_str();
    for (prefix, scale) in SCALES {
        if let Some(stripped) = tail.strip_prefix(prefix) {
            // "m" followed by "eg" was already taken by "meg"
            exponent += scale as i64;
            tail = stripped;
            break;
        }
    }
    let unit = if tail.is_empty() {
        None
    } else {
        match UNITS.iter().find(|(name, _)| *name == tail) {
            Some((_, unit)) => Some(*unit),
            None => return Err(ValueError::BadSuffix(rest.to_string())),
        }
    };
    if exponent.abs() > 100_000 {
        return Err(ValueError::OutOfRange);
    }
    let literal = format!("{}e{}", &text[..mantissa_end], exponent);
    let value: f64 = literal.parse().map_err(|_| ValueError::NotANumber)?;
    if !value.is_finite() {
        return Err(ValueError::OutOfRange);
    }
    Ok(Quantity { value, unit })
}

/// Canonical engineering rendering without unit letters: `3000.0 -> "3k"`.
pub fn format_value(value: f64) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    if !value.is_finite() {
        return format!("{value}");
    }
    // shortest round-trip digits, e.g. "2.5e-10"
    let sci = format!("{:e}", value.abs());
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let digits: String = mant.chars().filter(|c| *c != '.').collect();
    let eng = (exp.div_euclid(3) * 3).clamp(-12, 9);
    let suffix = match eng {
        -12 => "p",
        -9 => "n",
        -6 => "u",
        -3 => "m",
        0 => "",
        3 => "k",
        6 => "Meg",
        9 => "G",
        _ => unreachable!(),
    };
    // position of the decimal point after the first digit, in the scaled mantissa
    let point = exp - eng + 1;
    let body = if point <= 0 {
        format!("0.{}{}", "0".repeat((-point) as usize), digits)
    } else if point as usize >= digits.len() {
        format!("{}{}", digits, "0".repeat(point as usize - digits.len()))
    } else {
        let (a, b) = digits.split_at(point as usize);
        format!("{a}.{b}")
    };
    let sign = if value < 0.0 { "-" } else { "" };
    format!("{sign}{body}{suffix}")
}
